//! Numeration systems (β, A) with input alphabet B: eligibility checks,
//! alphabet lower bounds and the k-block transform.

use std::collections::{BTreeSet, HashSet};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use serde::Serialize;

use crate::error::{EwmError, Result};
use crate::ring::{poly, RingContext, RingElement};

#[derive(Clone, Debug)]
pub struct NumerationSystem {
    context: RingContext,
    base: RingElement,
    alphabet: Vec<RingElement>,
    input_alphabet: Vec<RingElement>,
    block_length: usize,
    /// Smallest conjugate modulus of the base.
    gamma: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Coverage {
    pub hit: u64,
    pub total: u64,
}

impl Coverage {
    pub fn complete(&self) -> bool {
        self.hit == self.total
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct EligibilityReport {
    pub base: String,
    pub base_min_poly: String,
    pub expanding: bool,
    pub gamma: f64,
    pub classes_mod_base: Coverage,
    /// `None` when β − 1 is not invertible in the field (β = 1).
    pub classes_mod_base_minus_one: Option<Coverage>,
    pub lower_bound: u64,
    pub alphabet_size: usize,
    pub input_alphabet_size: usize,
    pub block_length: usize,
    pub warnings: Vec<String>,
}

impl NumerationSystem {
    /// Validates (β, A, B) and returns the system with its eligibility report.
    ///
    /// With `block_length > 1` the system is first lifted to (β^k, Ã) and the
    /// optional input alphabet is interpreted over the lifted system.
    pub fn build(
        context: RingContext,
        base: RingElement,
        alphabet: Vec<RingElement>,
        input_alphabet: Option<Vec<RingElement>>,
        block_length: usize,
    ) -> Result<(Self, EligibilityReport)> {
        if block_length == 0 {
            return Err(EwmError::Config("block length must be at least 1".into()));
        }
        context.check(&base)?;
        for a in &alphabet {
            context.check(a)?;
        }
        let distinct: BTreeSet<&RingElement> = alphabet.iter().collect();
        if distinct.len() != alphabet.len() {
            return Err(EwmError::Config("alphabet contains repeated digits".into()));
        }
        let (base, alphabet) = if block_length > 1 {
            block_digits(&context, &base, &alphabet, block_length)
        } else {
            let mut a = alphabet;
            a.sort();
            (base, a)
        };
        Self::assemble(context, base, alphabet, input_alphabet, block_length)
    }

    fn assemble(
        context: RingContext,
        base: RingElement,
        alphabet: Vec<RingElement>,
        input_alphabet: Option<Vec<RingElement>>,
        block_length: usize,
    ) -> Result<(Self, EligibilityReport)> {
        let zero = context.zero();
        if !alphabet.contains(&zero) {
            return Err(EwmError::Config("alphabet must contain 0".into()));
        }
        let sums = sum_set(&alphabet, &alphabet);
        let input_alphabet = match input_alphabet {
            None => sums.clone(),
            Some(b) => {
                for x in &b {
                    context.check(x)?;
                }
                let set: BTreeSet<RingElement> = b.iter().cloned().collect();
                if set.len() != b.len() {
                    return Err(EwmError::Config("input alphabet contains repeated digits".into()));
                }
                let sums_set: HashSet<&RingElement> = sums.iter().collect();
                if let Some(x) = set.iter().find(|x| !sums_set.contains(x)) {
                    return Err(EwmError::Config(format!("input digit {x} is not in A+A")));
                }
                if let Some(a) = alphabet.iter().find(|a| !set.contains(*a)) {
                    return Err(EwmError::Config(format!("input alphabet misses digit {a} of A")));
                }
                if set.len() == alphabet.len() {
                    return Err(EwmError::Config("input alphabet must be strictly larger than A".into()));
                }
                set.into_iter().collect()
            }
        };

        let expanding = context.is_expanding(&base)?;
        let classes_mod_base = check_class_coverage(&context, &alphabet, &base)?;
        let base_minus_one = &base - &context.one();
        let classes_mod_base_minus_one = match check_class_coverage(&context, &alphabet, &base_minus_one) {
            Ok(c) => Some(c),
            Err(EwmError::Domain(_)) => None,
            Err(e) => return Err(e),
        };
        let lower_bound = alphabet_lower_bound(&context, &base)?;

        let mut warnings = Vec::new();
        if let Some(c) = &classes_mod_base_minus_one {
            if !c.complete() {
                warnings.push(format!(
                    "alphabet hits {} of {} congruence classes mod beta-1",
                    c.hit, c.total
                ));
            }
        }
        if (alphabet.len() as u64) < lower_bound {
            warnings.push(format!(
                "alphabet size {} is below the lower bound {lower_bound}",
                alphabet.len()
            ));
        }

        let report = EligibilityReport {
            base: base.to_string(),
            base_min_poly: crate::ring::poly_string(&expanding.min_poly),
            expanding: expanding.expanding,
            gamma: expanding.min_modulus,
            classes_mod_base: classes_mod_base.clone(),
            classes_mod_base_minus_one,
            lower_bound,
            alphabet_size: alphabet.len(),
            input_alphabet_size: input_alphabet.len(),
            block_length,
            warnings,
        };
        if !expanding.expanding {
            return Err(EwmError::Ineligible("base not expanding".into()));
        }
        if !classes_mod_base.complete() {
            return Err(EwmError::Ineligible("alphabet misses congruence class mod beta".into()));
        }
        for w in &report.warnings {
            log::warn!("{w}");
        }
        let system = Self {
            context,
            base,
            alphabet,
            input_alphabet,
            block_length,
            gamma: expanding.min_modulus,
        };
        Ok((system, report))
    }

    pub fn context(&self) -> &RingContext {
        &self.context
    }

    pub fn base(&self) -> &RingElement {
        &self.base
    }

    /// A, sorted lexicographically.
    pub fn alphabet(&self) -> &[RingElement] {
        &self.alphabet
    }

    /// B, sorted lexicographically.
    pub fn input_alphabet(&self) -> &[RingElement] {
        &self.input_alphabet
    }

    pub fn block_length(&self) -> usize {
        self.block_length
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Lifts the system to (β^k, Ã) with Ã = Σ_{j<k} A β^j and B̃ = Ã + Ã.
    pub fn block_transform(&self, k: usize) -> Result<(Self, EligibilityReport)> {
        if k == 0 {
            return Err(EwmError::Config("block length must be at least 1".into()));
        }
        if k == 1 {
            return Self::assemble(
                self.context.clone(),
                self.base.clone(),
                self.alphabet.clone(),
                Some(self.input_alphabet.clone()),
                self.block_length,
            );
        }
        let (base, alphabet) = block_digits(&self.context, &self.base, &self.alphabet, k);
        Self::assemble(self.context.clone(), base, alphabet, None, self.block_length * k)
    }

    /// C = max ‖b − a‖_β over b ∈ B, a ∈ A.
    pub fn spread(&self) -> f64 {
        let mut c = 0.0_f64;
        for b in &self.input_alphabet {
            for a in &self.alphabet {
                c = c.max(self.context.beta_norm(&(b - a)));
            }
        }
        c
    }

    /// Radius R = C/(γ − 1) containing every weight coefficient in β-norm.
    pub fn weight_bound(&self) -> f64 {
        self.spread() / (self.gamma - 1.0)
    }

    /// Exact value of Σ digits[j] β^j for digits given lowest first.
    pub fn horner(&self, digits_low_first: &[RingElement]) -> RingElement {
        digits_low_first
            .iter()
            .rev()
            .fold(self.context.zero(), |acc, d| &self.context.mul(&acc, &self.base) + d)
    }
}

fn block_digits(
    ctx: &RingContext,
    base: &RingElement,
    alphabet: &[RingElement],
    k: usize,
) -> (RingElement, Vec<RingElement>) {
    let mut digits: BTreeSet<RingElement> = alphabet.iter().cloned().collect();
    let mut power = ctx.one();
    for _ in 1..k {
        power = ctx.mul(&power, base);
        let shifted: Vec<RingElement> = alphabet.iter().map(|a| ctx.mul(a, &power)).collect();
        digits = digits.iter().flat_map(|d| shifted.iter().map(move |s| d + s)).collect();
    }
    let lifted_base = ctx.mul(&power, base);
    (lifted_base, digits.into_iter().collect())
}

/// X + Y with duplicates removed, sorted.
pub fn sum_set(x: &[RingElement], y: &[RingElement]) -> Vec<RingElement> {
    let set: BTreeSet<RingElement> = x.iter().flat_map(|a| y.iter().map(move |b| a + b)).collect();
    set.into_iter().collect()
}

/// max(|m_β(0)|, |m_β(1)|), where the second term grows by 2 when β has a
/// positive real conjugate.
pub fn alphabet_lower_bound(ctx: &RingContext, base: &RingElement) -> Result<u64> {
    let mp = ctx.minimal_polynomial(base);
    let at0 = mp[0].abs();
    let at1 = poly::eval_int(&mp, &BigInt::from(1)).abs();
    let roots = poly::roots(&mp, ctx.eps())?;
    let positive_real = roots.iter().any(|z| z.im == 0.0 && z.re > 0.0);
    let at1 = if positive_real { at1 + 2 } else { at1 };
    let bound = at0.max(at1);
    bound
        .to_u64()
        .ok_or_else(|| EwmError::Numerics(format!("lower bound {bound} does not fit in 64 bits")))
}

/// How many of the |det M_modulus| residue classes the alphabet hits.
pub fn check_class_coverage(ctx: &RingContext, alphabet: &[RingElement], modulus: &RingElement) -> Result<Coverage> {
    let cong = ctx.congruence(modulus)?;
    let hit: HashSet<_> = alphabet.iter().map(|a| cong.label(a)).collect();
    let total = cong
        .class_count()
        .to_u64()
        .ok_or_else(|| EwmError::Numerics("class count does not fit in 64 bits".into()))?;
    Ok(Coverage { hit: hit.len() as u64, total })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Locality {
    pub memory: usize,
    pub anticipation: usize,
}

/// Memory and anticipation, per position inside a block, of the addition
/// on the original system induced by a p̃-local function in base β^k.
pub fn locality_backmap(k: usize, p_transformed: usize) -> Vec<Locality> {
    (0..k)
        .map(|i| {
            let t = k - 1 - i;
            Locality { memory: k * p_transformed - 1 - t, anticipation: t }
        })
        .collect()
}
