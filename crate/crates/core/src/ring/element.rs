use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::EwmError;

/// An element of Z[ω] stored as its coordinates in the power basis
/// (1, ω, …, ω^{d−1}), lowest power first.
///
/// The derived ordering is the lexicographic order of coordinate vectors; all
/// deterministic tie-breaking in the crate relies on it.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RingElement {
    coords: Vec<BigInt>,
}

impl RingElement {
    pub fn new(coords: Vec<BigInt>) -> Self {
        Self { coords }
    }

    pub fn from_i64s(coords: &[i64]) -> Self {
        Self::new(coords.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero(degree: usize) -> Self {
        Self::new(vec![BigInt::zero(); degree])
    }

    pub fn one(degree: usize) -> Self {
        Self::integer(degree, 1)
    }

    /// The rational integer `n` embedded in a ring of the given degree.
    pub fn integer(degree: usize, n: i64) -> Self {
        let mut coords = vec![BigInt::zero(); degree];
        coords[0] = BigInt::from(n);
        Self::new(coords)
    }

    /// ω itself. For degree 1 this is the integer root of the linear
    /// minimal polynomial, so callers must go through the context instead.
    pub fn generator(degree: usize) -> Self {
        assert!(degree >= 2, "generator() needs degree >= 2");
        let mut coords = vec![BigInt::zero(); degree];
        coords[1] = BigInt::from(1);
        Self::new(coords)
    }

    pub fn coords(&self) -> &[BigInt] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<BigInt> {
        self.coords
    }

    pub fn degree(&self) -> usize {
        self.coords.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Zero::is_zero)
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        Self::new(self.coords.iter().map(|c| c * k).collect())
    }

    /// Largest absolute coordinate, used only for diagnostics and sampling bounds.
    pub fn max_abs_coord(&self) -> BigInt {
        self.coords.iter().map(|c| c.abs()).max().unwrap_or_default()
    }
}

impl fmt::Display for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for RingElement {
    type Err = EwmError;

    /// Parses `(a0,a1,...)`. Whitespace is ignored and the typographic minus
    /// sign U+2212 is accepted alongside `-`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let cleaned: String = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| if c == '\u{2212}' { '-' } else { c })
            .collect();
        let inner = cleaned
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .ok_or_else(|| EwmError::Config(format!("ring element {s:?} must look like (a0,a1,...)")))?;
        if inner.is_empty() {
            return Err(EwmError::Config(format!("ring element {s:?} has no coordinates")));
        }
        let coords = inner
            .split(',')
            .map(|t| {
                t.parse::<BigInt>()
                    .map_err(|_| EwmError::Config(format!("bad coordinate {t:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(coords))
    }
}

impl Serialize for RingElement {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RingElement {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Coords(Vec<i64>),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Repr::Coords(c) if c.is_empty() => Err(serde::de::Error::custom("empty coordinate list")),
            Repr::Coords(c) => Ok(RingElement::from_i64s(&c)),
        }
    }
}

fn zip_coords(a: &RingElement, b: &RingElement, op: impl Fn(&BigInt, &BigInt) -> BigInt) -> RingElement {
    assert_eq!(a.degree(), b.degree(), "ring elements from different contexts");
    RingElement::new(a.coords.iter().zip(&b.coords).map(|(x, y)| op(x, y)).collect())
}

impl Add for &RingElement {
    type Output = RingElement;
    fn add(self, rhs: &RingElement) -> RingElement {
        zip_coords(self, rhs, |x, y| x + y)
    }
}

impl Sub for &RingElement {
    type Output = RingElement;
    fn sub(self, rhs: &RingElement) -> RingElement {
        zip_coords(self, rhs, |x, y| x - y)
    }
}

impl Add for RingElement {
    type Output = RingElement;
    fn add(self, rhs: RingElement) -> RingElement {
        &self + &rhs
    }
}

impl Sub for RingElement {
    type Output = RingElement;
    fn sub(self, rhs: RingElement) -> RingElement {
        &self - &rhs
    }
}

impl Neg for &RingElement {
    type Output = RingElement;
    fn neg(self) -> RingElement {
        RingElement::new(self.coords.iter().map(|c| -c).collect())
    }
}

impl Neg for RingElement {
    type Output = RingElement;
    fn neg(self) -> RingElement {
        -&self
    }
}
