//! Exact nonnegative rationals extended with a distinguished infinite value.
//!
//! Cone coordinates and metric-graph edge lengths live here. Arithmetic is
//! exact over `i128` with reduction by gcd; infinity absorbs addition and
//! positive scaling. `0 * inf` is disallowed and the positive-factor maps of
//! the tropical module never produce it, so hitting that case is an
//! implementation bug and panics.

use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;

use crate::{Error, Result};

/// An exact nonnegative rational or infinity.
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum ExtRat {
    Finite(Rat),
    Infinity,
}

/// An exact nonnegative rational, stored reduced.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Rat {
    num: i128,
    den: i128,
}

impl Rat {
    pub fn new(num: i128, den: i128) -> Result<Rat> {
        if den == 0 {
            return Err(Error::InvalidInput("zero denominator".into()));
        }
        if num < 0 || den < 0 {
            return Err(Error::InvalidInput(
                "coordinates are nonnegative rationals".into(),
            ));
        }
        let g = gcd(num, den);
        Ok(Rat {
            num: num / g,
            den: den / g,
        })
    }

    pub fn integer(n: u64) -> Rat {
        Rat {
            num: n as i128,
            den: 1,
        }
    }

    pub fn zero() -> Rat {
        Rat::integer(0)
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn numer(&self) -> i128 {
        self.num
    }

    pub fn denom(&self) -> i128 {
        self.den
    }

    pub fn add(&self, other: &Rat) -> Rat {
        Rat::new(
            self.num * other.den + other.num * self.den,
            self.den * other.den,
        )
        .expect("sum of nonnegative rationals")
    }

    pub fn mul(&self, other: &Rat) -> Rat {
        Rat::new(self.num * other.num, self.den * other.den).expect("product stays nonnegative")
    }

    pub fn mul_int(&self, factor: u64) -> Rat {
        Rat::new(self.num * factor as i128, self.den).expect("product stays nonnegative")
    }

    /// Division by a positive integer.
    pub fn div_int(&self, divisor: u64) -> Rat {
        assert!(divisor > 0, "divisors are positive");
        Rat::new(self.num, self.den * divisor as i128).expect("positive divisor")
    }

    /// Parses "p" or "p/q".
    pub fn parse(text: &str) -> Result<Rat> {
        let parse_part = |s: &str| {
            s.trim()
                .parse::<i128>()
                .map_err(|_| Error::InvalidInput(format!("not a rational: {text}")))
        };
        match text.split_once('/') {
            Some((num, den)) => Rat::new(parse_part(num)?, parse_part(den)?),
            None => Rat::new(parse_part(text)?, 1),
        }
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

impl Ord for Rat {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

impl PartialOrd for Rat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl ExtRat {
    pub fn zero() -> ExtRat {
        ExtRat::Finite(Rat::zero())
    }

    pub fn integer(n: u64) -> ExtRat {
        ExtRat::Finite(Rat::integer(n))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ExtRat::Finite(r) if r.is_zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtRat::Finite(_))
    }

    pub fn as_finite(&self) -> Option<&Rat> {
        match self {
            ExtRat::Finite(r) => Some(r),
            ExtRat::Infinity => None,
        }
    }

    /// `inf + x = inf`.
    pub fn add(&self, other: &ExtRat) -> ExtRat {
        match (self, other) {
            (ExtRat::Finite(a), ExtRat::Finite(b)) => ExtRat::Finite(a.add(b)),
            _ => ExtRat::Infinity,
        }
    }

    /// Scaling by a positive integer; `inf * positive = inf`.
    pub fn mul_int(&self, factor: u64) -> ExtRat {
        assert!(factor > 0, "0 * inf is disallowed; factors are positive");
        match self {
            ExtRat::Finite(r) => ExtRat::Finite(r.mul_int(factor)),
            ExtRat::Infinity => ExtRat::Infinity,
        }
    }

    /// Division by a positive integer; `inf / positive = inf`.
    pub fn div_int(&self, divisor: u64) -> ExtRat {
        assert!(divisor > 0, "divisors are positive");
        match self {
            ExtRat::Finite(r) => ExtRat::Finite(r.div_int(divisor)),
            ExtRat::Infinity => ExtRat::Infinity,
        }
    }

    /// Parses "p", "p/q" or "inf".
    pub fn parse(text: &str) -> Result<ExtRat> {
        if text.trim() == "inf" {
            return Ok(ExtRat::Infinity);
        }
        Ok(ExtRat::Finite(Rat::parse(text)?))
    }
}

impl Ord for ExtRat {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtRat::Finite(a), ExtRat::Finite(b)) => a.cmp(b),
            (ExtRat::Finite(_), ExtRat::Infinity) => Ordering::Less,
            (ExtRat::Infinity, ExtRat::Finite(_)) => Ordering::Greater,
            (ExtRat::Infinity, ExtRat::Infinity) => Ordering::Equal,
        }
    }
}

impl PartialOrd for ExtRat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ExtRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtRat::Finite(r) => write!(f, "{r}"),
            ExtRat::Infinity => write!(f, "inf"),
        }
    }
}

impl fmt::Debug for ExtRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Serialize for ExtRat {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}
