//! Command-line front end: parse portrait files, run the pipeline, emit
//! reports and diagrams. All mathematics lives in the library; this binary
//! only wires inputs to outputs.
//!
//! Exit codes: 0 success, 1 domain error (invalid portrait, unknown class
//! id, arity mismatch), 2 I/O or parse error.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use hurwitz_strata::cover::{comb_cover, stabilize};
use hurwitz_strata::portrait::Portrait;
use hurwitz_strata::ratext::ExtRat;
use hurwitz_strata::strata::{stratify, Stratification, StratifyOptions};
use hurwitz_strata::tropical::{ConePoint, TropicalHurwitz};

#[derive(Parser)]
#[command(
    name = "hurwitz-strata",
    about = "Boundary stratifications of Hurwitz spaces of maps to the projective line",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
    Dot,
}

#[derive(Subcommand)]
enum Command {
    /// Check a portrait file; exit 0 iff it is valid.
    Validate {
        /// Portrait JSON file.
        portrait: PathBuf,
    },
    /// Compute the boundary stratification.
    Strata {
        portrait: PathBuf,
        /// Largest codimension to enumerate (default: everything).
        #[arg(long)]
        max_codim: Option<usize>,
        /// Worker count; the output does not depend on it.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Write the main output here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the poset Hasse diagram as DOT.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Include full canonical encodings in table output.
        #[arg(long)]
        verbose: bool,
    },
    /// Report the combinatorial admissible cover of a class.
    Cover {
        portrait: PathBuf,
        /// Class id from the stratification report.
        class_id: String,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the two-layer cover diagram as DOT.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Include the canonical encoding and cover key.
        #[arg(long)]
        verbose: bool,
    },
    /// Evaluate the tropical target and source maps at a cone point.
    Tropical {
        portrait: PathBuf,
        class_id: String,
        /// One coordinate per tree edge: "p", "p/q" or "inf".
        coords: Vec<String>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    /// Invalid portrait, unknown id, arity mismatch.
    Domain(String),
    /// Unreadable file or malformed JSON.
    Io(String),
}

impl From<hurwitz_strata::Error> for Failure {
    fn from(e: hurwitz_strata::Error) -> Failure {
        Failure::Domain(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Err(Failure::Io(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { portrait } => {
            let p = load_portrait(&portrait)?;
            let report = p.validate();
            if report.is_empty() {
                println!("valid: degree {}, genus {}", p.degree(), p.genus());
                Ok(())
            } else {
                for violation in &report {
                    println!("{violation}");
                }
                Err(Failure::Domain(format!(
                    "{} violation(s) found",
                    report.len()
                )))
            }
        }
        Command::Strata {
            portrait,
            max_codim,
            jobs,
            format,
            out,
            dot,
            verbose,
        } => {
            let p = validated_portrait(&portrait)?;
            let s = stratify(
                &p,
                &StratifyOptions {
                    max_codim,
                    jobs,
                    scramble: None,
                },
            )?;
            let output = match format {
                Format::Json => s.report_json(),
                Format::Table => strata_table(&s, verbose),
                Format::Dot => s.poset_dot(),
            };
            if let Some(path) = dot {
                write_file(&path, &s.poset_dot())?;
            }
            emit(out.as_deref(), &output)
        }
        Command::Cover {
            portrait,
            class_id,
            jobs,
            format,
            out,
            dot,
            verbose,
        } => {
            let p = validated_portrait(&portrait)?;
            let s = stratify(
                &p,
                &StratifyOptions {
                    max_codim: None,
                    jobs,
                    scramble: None,
                },
            )?;
            let output = match format {
                Format::Json => {
                    let value = cover_report(&p, &s, &class_id, verbose)?;
                    serde_json::to_string_pretty(&value).expect("report json")
                }
                Format::Table => cover_table(&p, &s, &class_id)?,
                Format::Dot => {
                    let class = s.class_by_id(&class_id)?;
                    comb_cover(&p, class)?.to_dot(&p)
                }
            };
            if let Some(path) = dot {
                let class = s.class_by_id(&class_id)?;
                write_file(&path, &comb_cover(&p, class)?.to_dot(&p))?;
            }
            emit(out.as_deref(), &output)
        }
        Command::Tropical {
            portrait,
            class_id,
            coords,
            jobs,
            format,
            out,
        } => {
            let p = validated_portrait(&portrait)?;
            let s = stratify(
                &p,
                &StratifyOptions {
                    max_codim: None,
                    jobs,
                    scramble: None,
                },
            )?;
            let class = s.class_by_id(&class_id)?;
            if coords.len() != class.codim {
                return Err(Failure::Domain(format!(
                    "class {} has codimension {}, got {} coordinate(s)",
                    class_id,
                    class.codim,
                    coords.len()
                )));
            }
            let parsed: Vec<ExtRat> = coords
                .iter()
                .map(|c| ExtRat::parse(c))
                .collect::<Result<_, _>>()?;
            let tropical = TropicalHurwitz::new(&s)?;
            let point = ConePoint {
                cone: class_id.clone(),
                coords: parsed,
            };
            let normalized = tropical.normalize_point(&point)?;
            let target = tropical.trop_target(&normalized)?;
            let source = tropical.trop_source(&normalized)?;
            let value = json!({
                "class": class_id,
                "point": point_json(&point),
                "normalized": point_json(&normalized),
                "target": target.to_json(p.target_marks()),
                "source": source.to_json(),
            });
            let output = match format {
                Format::Json | Format::Dot => {
                    serde_json::to_string_pretty(&value).expect("report json")
                }
                Format::Table => tropical_table(&value),
            };
            emit(out.as_deref(), &output)
        }
    }
}

fn load_portrait(path: &Path) -> Result<Portrait, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
    Portrait::from_json(&text).map_err(|e| Failure::Io(e.to_string()))
}

fn validated_portrait(path: &Path) -> Result<Portrait, Failure> {
    let p = load_portrait(path)?;
    let report = p.validate();
    if report.is_empty() {
        Ok(p)
    } else {
        let entries: Vec<String> = report.iter().map(|v| v.to_string()).collect();
        Err(Failure::Domain(format!(
            "invalid portrait: {}",
            entries.join("; ")
        )))
    }
}

fn emit(out: Option<&Path>, output: &str) -> Result<(), Failure> {
    match out {
        Some(path) => write_file(path, output),
        None => {
            println!("{output}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, content: &str) -> Result<(), Failure> {
    let terminated = if content.ends_with('\n') {
        content.to_string()
    } else {
        format!("{content}\n")
    };
    fs::write(path, terminated)
        .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

fn strata_table(s: &Stratification, verbose: bool) -> String {
    let mut out = String::new();
    if s.is_empty_space() {
        out.push_str("empty space: the portrait admits no covers\n");
        return out;
    }
    out.push_str(&format!("components: {}\n", s.components().len()));
    out.push_str(&format!("strata: {}\n", s.classes().len()));
    for codim in 0..=s.max_codim() {
        let count = s.classes_by_codim(codim).count();
        out.push_str(&format!("codim {codim}: {count}\n"));
    }
    for component in s.components() {
        let total = s
            .classes()
            .iter()
            .filter(|c| &c.component == component)
            .count();
        out.push_str(&format!(
            "component {component}: {total} strata ({} boundary)\n",
            total - 1
        ));
    }
    if verbose {
        for class in s.classes() {
            out.push_str(&format!(
                "class {} codim {} component {} orbit {}\n  {}\n",
                class.id, class.codim, class.component, class.orbit_size, class.encoding
            ));
        }
    }
    out
}

fn cover_report(
    portrait: &Portrait,
    s: &Stratification,
    class_id: &str,
    verbose: bool,
) -> Result<serde_json::Value, Failure> {
    let class = s.class_by_id(class_id)?;
    let cover = comb_cover(portrait, class)?;
    let stable = stabilize(&cover.source)?;
    let marks = portrait.target_marks();
    let source_marks = portrait.source_marks();
    let lcms: BTreeMap<String, u64> = cover
        .expansion_lcms()
        .into_iter()
        .map(|(split, l)| {
            let name: Vec<String> = split.members().iter().map(|&m| marks[m].clone()).collect();
            (name.join(","), l)
        })
        .collect();
    let mut value = json!({
        "class": class_id,
        "tree": class.tree.to_json(marks),
        "source_graph": {
            "vertices": cover.source.vertices.iter().map(|v| json!({
                "tree_vertex": v.tree_vertex,
                "orbit": v.orbit.iter().map(|p| p + 1).collect::<Vec<_>>(),
                "weight": v.weight,
            })).collect::<Vec<_>>(),
            "edges": cover.source.edges.iter().map(|e| json!({
                "vertices": [e.ends[0].vertex, e.ends[1].vertex],
                "over": e.split().members().iter().map(|&m| marks[m].clone()).collect::<Vec<_>>(),
                "expansion": e.expansion,
            })).collect::<Vec<_>>(),
            "legs": cover.source.legs.iter().map(|l| json!({
                "mark": source_marks[l.source_mark],
                "vertex": l.vertex,
                "expansion": l.expansion,
            })).collect::<Vec<_>>(),
        },
        "stable_graph": {
            "vertices": stable.vertices.iter().map(|v| v.weight).collect::<Vec<_>>(),
            "edges": stable.edges.iter().map(|e| json!({
                "vertices": e.ends,
                "path": e.path,
            })).collect::<Vec<_>>(),
            "legs": stable.legs.iter().map(|l| json!({
                "mark": source_marks[l.source_mark],
                "vertex": l.vertex,
                "path": l.path,
            })).collect::<Vec<_>>(),
            "genus": stable.genus(),
        },
        "expansion_lcm": lcms,
        "harmonicity": "ok",
    });
    if verbose {
        value["representative"] = json!(class.encoding);
        value["cover_key"] = json!(cover.canonical_key());
    }
    Ok(value)
}

fn cover_table(portrait: &Portrait, s: &Stratification, class_id: &str) -> Result<String, Failure> {
    let class = s.class_by_id(class_id)?;
    let cover = comb_cover(portrait, class)?;
    let stable = stabilize(&cover.source)?;
    let mut out = String::new();
    out.push_str(&format!("class: {class_id}\n"));
    out.push_str(&format!(
        "source graph: {} vertices, {} edges, {} legs\n",
        cover.source.vertices.len(),
        cover.source.edges.len(),
        cover.source.legs.len()
    ));
    out.push_str(&format!(
        "stable source: {} vertices, {} edges, genus {}\n",
        stable.vertices.len(),
        stable.edges.len(),
        stable.genus()
    ));
    for (split, l) in cover.expansion_lcms() {
        let names: Vec<String> = split
            .members()
            .iter()
            .map(|&m| portrait.target_marks()[m].clone())
            .collect();
        out.push_str(&format!("L({}) = {l}\n", names.join(",")));
    }
    out.push_str("harmonicity: ok\n");
    Ok(out)
}

fn point_json(point: &ConePoint) -> serde_json::Value {
    json!({
        "cone": point.cone,
        "coords": point.coords.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
    })
}

fn tropical_table(value: &serde_json::Value) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "class: {}\n",
        value["class"].as_str().unwrap_or("")
    ));
    out.push_str(&format!(
        "normalized cone: {}\n",
        value["normalized"]["cone"]
    ));
    out.push_str(&format!("target lengths: {}\n", value["target"]["lengths"]));
    out.push_str(&format!("source lengths: {}\n", value["source"]["lengths"]));
    out
}
