//! Digit strings and the parallel conversion z_j = w_j + q_{j-1} − β q_j.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{EwmError, Result};
use crate::ring::{RingContext, RingElement};
use crate::system::NumerationSystem;
use crate::table::{window_string, WeightFunction};

/// Σ digits[i] β^(offset + i), digits stored lowest power first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DigitString {
    digits: Vec<RingElement>,
    offset: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Sequential,
    Parallel,
}

/// Per-position weight coefficients and output digits, lowest position first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConversionTrace {
    pub offset: i64,
    pub q: Vec<RingElement>,
    pub z: Vec<RingElement>,
}

impl DigitString {
    pub fn new(digits_low_first: Vec<RingElement>, offset: i64) -> Self {
        Self { digits: digits_low_first, offset }
    }

    pub fn from_high_first(mut digits: Vec<RingElement>, offset: i64) -> Self {
        digits.reverse();
        Self::new(digits, offset)
    }

    pub fn digits_low_first(&self) -> &[RingElement] {
        &self.digits
    }

    pub fn digits_high_first(&self) -> Vec<RingElement> {
        self.digits.iter().rev().cloned().collect()
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    /// Exponent one above the highest stored digit.
    pub fn top(&self) -> i64 {
        self.offset + self.digits.len() as i64
    }

    pub fn digit_at(&self, j: i64) -> Option<&RingElement> {
        if j < self.offset {
            return None;
        }
        self.digits.get((j - self.offset) as usize)
    }

    /// Drops zero digits above the highest nonzero one, keeping position 0.
    pub fn without_leading_zeros(&self) -> Self {
        let keep = self.digits.iter().rposition(|d| !d.is_zero()).map_or(0, |i| i + 1);
        let keep = keep.max(((-self.offset).max(0) as usize + 1).min(self.digits.len()));
        Self::new(self.digits[..keep].to_vec(), self.offset)
    }

    /// Drops zero digits at both ends.
    pub fn trimmed(&self) -> Self {
        let Some(lo) = self.digits.iter().position(|d| !d.is_zero()) else {
            return Self::new(Vec::new(), 0);
        };
        let hi = self.digits.iter().rposition(|d| !d.is_zero()).unwrap();
        Self::new(self.digits[lo..=hi].to_vec(), self.offset + lo as i64)
    }

    /// Parses `[d][d].[d]`: bracketed ring elements, most significant first,
    /// with an optional radix point.
    pub fn parse(s: &str, ctx: &RingContext) -> Result<Self> {
        let mut high_first = Vec::new();
        let mut after_point: Option<usize> = None;
        let mut rest = s.trim();
        while !rest.is_empty() {
            if let Some(r) = rest.strip_prefix('.') {
                if after_point.is_some() {
                    return Err(EwmError::Config(format!("digit string {s:?} has two points")));
                }
                after_point = Some(high_first.len());
                rest = r.trim_start();
                continue;
            }
            let inner = rest
                .strip_prefix('[')
                .ok_or_else(|| EwmError::Config(format!("digit string {s:?}: expected '['")))?;
            let close = inner
                .find(']')
                .ok_or_else(|| EwmError::Config(format!("digit string {s:?}: missing ']'")))?;
            let d: RingElement = inner[..close].parse()?;
            ctx.check(&d)?;
            high_first.push(d);
            rest = inner[close + 1..].trim_start();
        }
        if high_first.is_empty() {
            return Err(EwmError::Config(format!("digit string {s:?} has no digits")));
        }
        let fractional = after_point.map(|p| high_first.len() - p).unwrap_or(0);
        Ok(Self::from_high_first(high_first, -(fractional as i64)))
    }

    /// Value Σ d_i β^i with i counted from the lowest stored digit; the
    /// actual value is this times β^offset, returned alongside.
    pub fn evaluate(&self, system: &NumerationSystem) -> (RingElement, i64) {
        (system.horner(&self.digits), self.offset)
    }

    /// Value scaled by β^(-at), for `at` ≤ offset.
    pub fn scaled_value(&self, system: &NumerationSystem, at: i64) -> RingElement {
        assert!(at <= self.offset, "scaling point above the lowest digit");
        let (v, off) = self.evaluate(system);
        let shift = system.context().pow(system.base(), (off - at) as u32);
        system.context().mul(&v, &shift)
    }
}

impl fmt::Display for DigitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.digits.is_empty() {
            return f.write_str("[0]");
        }
        let zero = RingElement::zero(self.digits[0].degree());
        let hi = self.top().max(1);
        let lo = self.offset.min(0);
        for j in (lo..hi).rev() {
            if j == -1 {
                f.write_str(".")?;
            }
            write!(f, "[{}]", self.digit_at(j).unwrap_or(&zero))?;
        }
        Ok(())
    }
}

/// Exact comparison of represented values.
pub fn same_value(x: &DigitString, y: &DigitString, system: &NumerationSystem) -> bool {
    let at = x.offset.min(y.offset);
    x.scaled_value(system, at) == y.scaled_value(system, at)
}

/// Positionwise sum of two strings over A, zero padded.
pub fn digitwise_add(x: &DigitString, y: &DigitString, system: &NumerationSystem) -> Result<DigitString> {
    let a: HashSet<&RingElement> = system.alphabet().iter().collect();
    for d in x.digits.iter().chain(&y.digits) {
        if !a.contains(d) {
            return Err(EwmError::Domain(format!("digit {d} is not in the alphabet")));
        }
    }
    Ok(positionwise_sum(x, y, system.context()))
}

fn positionwise_sum(x: &DigitString, y: &DigitString, ctx: &RingContext) -> DigitString {
    if x.is_empty() {
        return y.clone();
    }
    if y.is_empty() {
        return x.clone();
    }
    let lo = x.offset.min(y.offset);
    let hi = x.top().max(y.top());
    let zero = ctx.zero();
    let digits = (lo..hi)
        .map(|j| x.digit_at(j).unwrap_or(&zero) + y.digit_at(j).unwrap_or(&zero))
        .collect();
    DigitString::new(digits, lo)
}

/// Converts a string over B into one over A with the same value. Output covers
/// positions offset .. offset + n + r; above that every window is zero.
pub fn convert(w: &DigitString, wf: &WeightFunction, mode: Mode) -> Result<(DigitString, ConversionTrace)> {
    let system = wf.system();
    let r = wf.memory();
    let zero_q = wf.lookup_index(&vec![wf.zero_digit(); r]);
    match zero_q {
        None => {
            return Err(EwmError::TableIncomplete {
                window: window_string(&vec![system.context().zero(); r]),
            })
        }
        Some(q) if !wf.q_values()[q as usize].is_zero() => {
            return Err(EwmError::InvalidTable {
                window: window_string(&vec![system.context().zero(); r]),
                digit: wf.q_values()[q as usize].to_string(),
            })
        }
        _ => {}
    }
    let idx: Vec<u32> = w
        .digits
        .iter()
        .map(|d| {
            wf.digit_index(d)
                .ok_or_else(|| EwmError::Domain(format!("digit {d} is not in the input alphabet")))
        })
        .collect::<Result<_>>()?;
    let n = idx.len();
    let out_len = n + r;
    let digit = |p: i64| -> u32 {
        if p >= 0 && (p as usize) < n {
            idx[p as usize]
        } else {
            wf.zero_digit()
        }
    };
    let window_at = |p: i64| -> Vec<RingElement> {
        (0..r as i64).map(|k| system.input_alphabet()[digit(p - k) as usize].clone()).collect()
    };
    // q for relative positions -1 .. out_len-1, stored at index p + 1.
    let q_at = |slot: usize| -> Result<u32> {
        let p = slot as i64 - 1;
        wf.trie()
            .lookup_with(r, |k| digit(p - k as i64))
            .ok_or_else(|| EwmError::TableIncomplete { window: window_string(&window_at(p)) })
    };
    let qs: Vec<u32> = match mode {
        Mode::Sequential => (0..=out_len).map(q_at).collect::<Result<_>>()?,
        Mode::Parallel => (0..=out_len).into_par_iter().map(q_at).collect::<Result<_>>()?,
    };
    let b = system.input_alphabet();
    let z_at = |p: usize| -> Result<RingElement> {
        let wj = &b[digit(p as i64) as usize];
        let z = &(wj + &wf.q_values()[qs[p] as usize]) - wf.beta_times(qs[p + 1]);
        if !wf.in_alphabet(&z) {
            return Err(EwmError::InvalidTable { window: window_string(&window_at(p as i64)), digit: z.to_string() });
        }
        Ok(z)
    };
    let z: Vec<RingElement> = match mode {
        Mode::Sequential => (0..out_len).map(z_at).collect::<Result<_>>()?,
        Mode::Parallel => (0..out_len).into_par_iter().map(z_at).collect::<Result<_>>()?,
    };
    let trace = ConversionTrace {
        offset: w.offset,
        q: qs[1..].iter().map(|&q| wf.q_values()[q as usize].clone()).collect(),
        z: z.clone(),
    };
    Ok((DigitString::new(z, w.offset), trace))
}

/// x + y over A via one conversion of the digitwise sum.
pub fn add(x: &DigitString, y: &DigitString, wf: &WeightFunction, mode: Mode) -> Result<DigitString> {
    let s = digitwise_add(x, y, wf.system())?;
    Ok(convert(&s, wf, mode)?.0)
}

/// Splits every digit of A into `l` parts from a smaller digit set D, so that
/// x + y can be computed by l conversions from A + D.
#[derive(Clone, Debug)]
pub struct Decomposition {
    parts: std::collections::HashMap<RingElement, Vec<RingElement>>,
    l: usize,
}

impl Decomposition {
    pub fn new(system: &NumerationSystem, parts: Vec<(RingElement, Vec<RingElement>)>) -> Result<Self> {
        let l = parts.first().map(|(_, p)| p.len()).unwrap_or(0);
        if l == 0 {
            return Err(EwmError::Config("decomposition needs at least one part per digit".into()));
        }
        let ctx = system.context();
        let mut map = std::collections::HashMap::new();
        let mut d_set: BTreeSet<RingElement> = BTreeSet::new();
        for (a, p) in parts {
            if p.len() != l {
                return Err(EwmError::Config(format!("digit {a} has {} parts, expected {l}", p.len())));
            }
            let sum = p.iter().fold(ctx.zero(), |acc, x| &acc + x);
            if sum != a {
                return Err(EwmError::Config(format!("parts of digit {a} sum to {sum}")));
            }
            d_set.extend(p.iter().cloned());
            if map.insert(a.clone(), p).is_some() {
                return Err(EwmError::Config(format!("digit {a} is decomposed twice")));
            }
        }
        if let Some(a) = system.alphabet().iter().find(|a| !map.contains_key(*a)) {
            return Err(EwmError::Config(format!("digit {a} has no decomposition")));
        }
        let b: HashSet<&RingElement> = system.input_alphabet().iter().collect();
        for a in system.alphabet() {
            for d in &d_set {
                if !b.contains(&(a + d)) {
                    return Err(EwmError::Config(format!("{a} + {d} is not an input digit")));
                }
            }
        }
        Ok(Self { parts: map, l })
    }

    /// For alphabets of rational integers: a = sign(a)·(1 + … + 1), padded
    /// with zeros to l = max |a|.
    pub fn unit_steps(system: &NumerationSystem) -> Result<Self> {
        let ctx = system.context();
        let mut values = Vec::new();
        for a in system.alphabet() {
            if a.coords()[1..].iter().any(|c| !c.is_zero()) {
                return Err(EwmError::Config(format!("digit {a} is not a rational integer")));
            }
            let v = a.coords()[0].to_i64().ok_or_else(|| EwmError::Config(format!("digit {a} is too large")))?;
            values.push((a.clone(), v));
        }
        let l = values.iter().map(|(_, v)| v.unsigned_abs() as usize).max().unwrap_or(0).max(1);
        let parts = values
            .into_iter()
            .map(|(a, v)| {
                let step = ctx.integer(v.signum());
                let mut p = vec![step; v.unsigned_abs() as usize];
                p.resize(l, ctx.zero());
                (a, p)
            })
            .collect();
        Self::new(system, parts)
    }

    pub fn steps(&self) -> usize {
        self.l
    }

    fn part(&self, a: &RingElement, k: usize) -> &RingElement {
        &self.parts[a][k]
    }
}

/// x + y by l conversions z⁽ᵏ⁾ = convert(z⁽ᵏ⁻¹⁾ + d⁽ᵏ⁾), z⁽⁰⁾ = x, where d⁽ᵏ⁾
/// holds the k-th parts of the digits of y.
pub fn add_iterated(
    x: &DigitString,
    y: &DigitString,
    wf: &WeightFunction,
    decomposition: &Decomposition,
    mode: Mode,
) -> Result<DigitString> {
    let system = wf.system();
    let a: HashSet<&RingElement> = system.alphabet().iter().collect();
    for d in x.digits.iter().chain(&y.digits) {
        if !a.contains(d) {
            return Err(EwmError::Domain(format!("digit {d} is not in the alphabet")));
        }
    }
    let mut z = x.clone();
    for k in 0..decomposition.steps() {
        let dk = DigitString::new(y.digits.iter().map(|d| decomposition.part(d, k).clone()).collect(), y.offset);
        let s = positionwise_sum(&z, &dk, system.context());
        z = convert(&s, wf, mode)?.0;
    }
    Ok(z)
}

/// Integer-valued helper for tests and examples: digits of `n` in base `base`
/// over {0, …, base−1}, lowest first.
pub fn integer_digits(mut n: BigInt, base: &BigInt) -> Vec<BigInt> {
    let mut out = Vec::new();
    while !n.is_zero() {
        let (q, r) = num_integer::Integer::div_mod_floor(&n, base);
        out.push(if r.is_negative() { -r } else { r });
        n = q;
    }
    out
}
