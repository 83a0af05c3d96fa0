//! Exact arithmetic in Z[ω] for an algebraic integer ω given by its monic
//! minimal polynomial, together with the numeric embeddings, the β-norm,
//! exact division and congruence labels built on top of it.

mod element;
pub mod matrix;
pub mod poly;

use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use element::RingElement;
pub use matrix::IntMatrix;

use crate::error::{EwmError, Result};

/// Default working precision for roots and embeddings.
pub const DEFAULT_EPS: f64 = 1e-12;
/// Roots whose modulus is this close to 1 make the expanding test refuse to answer.
pub const DEFAULT_EXPANDING_MARGIN: f64 = 1e-9;

/// How to pick the distinguished complex embedding of ω.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RootChoice {
    /// Nearest root to the given complex number.
    Near(Complex64),
    /// Index into the sorted root list.
    Index(usize),
    /// Root with the largest imaginary part, then the largest real part.
    Default,
}

/// The ring Z[ω].
#[derive(Clone)]
pub struct RingContext {
    min_poly: Vec<BigInt>,
    roots: Vec<Complex64>,
    distinguished: usize,
    eps: f64,
    /// Coordinates of ω^{d+j} for j = 0..d-1.
    high_powers: Vec<Vec<BigInt>>,
}

impl fmt::Debug for RingContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RingContext")
            .field("min_poly", &self.min_poly_string())
            .field("distinguished", &self.distinguished_root())
            .finish()
    }
}

impl RingContext {
    /// Builds Z[ω] from the coefficients of m_ω, lowest degree first.
    ///
    /// Irreducibility is not checked; squarefreeness is.
    pub fn new(min_poly: &[i64], choice: RootChoice) -> Result<Self> {
        let coeffs: Vec<BigInt> = min_poly.iter().map(|&c| BigInt::from(c)).collect();
        Self::from_big(coeffs, choice, DEFAULT_EPS)
    }

    pub fn from_big(min_poly: Vec<BigInt>, choice: RootChoice, eps: f64) -> Result<Self> {
        if min_poly.len() < 2 {
            return Err(EwmError::Config("minimal polynomial must have degree >= 1".into()));
        }
        if !min_poly.last().is_some_and(One::is_one) {
            return Err(EwmError::Config(format!(
                "minimal polynomial {} is not monic",
                poly_string(&min_poly)
            )));
        }
        if !poly::is_squarefree(&min_poly) {
            return Err(EwmError::Config(format!(
                "minimal polynomial {} is not squarefree",
                poly_string(&min_poly)
            )));
        }
        let d = min_poly.len() - 1;
        let roots = poly::roots(&min_poly, eps)?;
        let distinguished = match choice {
            RootChoice::Index(i) if i < d => i,
            RootChoice::Index(i) => {
                return Err(EwmError::Config(format!("root index {i} out of range for degree {d}")))
            }
            RootChoice::Near(hint) => (0..d)
                .min_by(|&a, &b| (roots[a] - hint).norm().total_cmp(&(roots[b] - hint).norm()))
                .unwrap(),
            RootChoice::Default => (0..d)
                .max_by(|&a, &b| {
                    roots[a]
                        .im
                        .total_cmp(&roots[b].im)
                        .then(roots[a].re.total_cmp(&roots[b].re))
                        .then(b.cmp(&a))
                })
                .unwrap(),
        };

        // ω^d = -(p_0 + p_1 ω + ... + p_{d-1} ω^{d-1}); build ω^{d+j} by shifting.
        let mut high_powers = Vec::with_capacity(d);
        let mut current: Vec<BigInt> = min_poly[..d].iter().map(|c| -c).collect();
        for _ in 0..d {
            high_powers.push(current.clone());
            let top = current[d - 1].clone();
            let mut next = vec![BigInt::zero(); d];
            next[1..].clone_from_slice(&current[..d - 1]);
            for i in 0..d {
                next[i] -= &top * &min_poly[i];
            }
            current = next;
        }

        Ok(Self { min_poly, roots, distinguished, eps, high_powers })
    }

    pub fn degree(&self) -> usize {
        self.min_poly.len() - 1
    }

    pub fn min_poly(&self) -> &[BigInt] {
        &self.min_poly
    }

    pub fn min_poly_string(&self) -> String {
        poly_string(&self.min_poly)
    }

    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }

    pub fn distinguished_index(&self) -> usize {
        self.distinguished
    }

    pub fn distinguished_root(&self) -> Complex64 {
        self.roots[self.distinguished]
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn zero(&self) -> RingElement {
        RingElement::zero(self.degree())
    }

    pub fn one(&self) -> RingElement {
        RingElement::one(self.degree())
    }

    pub fn integer(&self, n: i64) -> RingElement {
        RingElement::integer(self.degree(), n)
    }

    /// ω as a ring element (for degree 1 this is the integer root).
    pub fn omega(&self) -> RingElement {
        if self.degree() == 1 {
            RingElement::new(vec![-self.min_poly[0].clone()])
        } else {
            RingElement::generator(self.degree())
        }
    }

    /// Builds an element from small integer coordinates, padding with zeros.
    pub fn element(&self, coords: &[i64]) -> Result<RingElement> {
        if coords.len() > self.degree() {
            return Err(EwmError::Config(format!(
                "element has {} coordinates but the ring has degree {}",
                coords.len(),
                self.degree()
            )));
        }
        let mut c: Vec<i64> = coords.to_vec();
        c.resize(self.degree(), 0);
        Ok(RingElement::from_i64s(&c))
    }

    /// Checks that an element has the right number of coordinates.
    pub fn check(&self, x: &RingElement) -> Result<()> {
        if x.degree() != self.degree() {
            return Err(EwmError::Config(format!(
                "element {x} has {} coordinates, ring degree is {}",
                x.degree(),
                self.degree()
            )));
        }
        Ok(())
    }

    pub fn mul(&self, a: &RingElement, b: &RingElement) -> RingElement {
        let d = self.degree();
        let (a, b) = (a.coords(), b.coords());
        let mut full = vec![BigInt::zero(); 2 * d - 1];
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                full[i + j] += x * y;
            }
        }
        let mut out: Vec<BigInt> = full[..d].to_vec();
        for (j, c) in full[d..].iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (o, h) in out.iter_mut().zip(&self.high_powers[j]) {
                *o += c * h;
            }
        }
        RingElement::new(out)
    }

    pub fn pow(&self, x: &RingElement, e: u32) -> RingElement {
        (0..e).fold(self.one(), |acc, _| self.mul(&acc, x))
    }

    /// Matrix of multiplication by `x`; column i is π(x·ω^i).
    pub fn mult_matrix(&self, x: &RingElement) -> MultiplicationMatrix {
        let d = self.degree();
        let mut cols = Vec::with_capacity(d);
        let mut power = self.one();
        let w = self.omega_basis_step();
        for _ in 0..d {
            cols.push(self.mul(x, &power).into_coords());
            power = self.mul(&power, &w);
        }
        let entries = IntMatrix::from_columns(cols);
        let det = entries.determinant();
        MultiplicationMatrix { entries, det }
    }

    /// The basis step ω^1 as an element of the power basis (for degree 1 the
    /// power basis is just (1), and multiplying by it is never needed).
    fn omega_basis_step(&self) -> RingElement {
        if self.degree() == 1 {
            self.one()
        } else {
            RingElement::generator(self.degree())
        }
    }

    /// Values of `x` under all d complex embeddings, in root order.
    pub fn embed(&self, x: &RingElement) -> Vec<Complex64> {
        self.roots.iter().map(|&r| eval_at(x, r)).collect()
    }

    /// Value of `x` under the distinguished embedding.
    pub fn to_complex(&self, x: &RingElement) -> Complex64 {
        eval_at(x, self.distinguished_root())
    }

    /// Modulus under the distinguished embedding ("absolute value").
    pub fn abs(&self, x: &RingElement) -> f64 {
        self.to_complex(x).norm()
    }

    /// Euclidean norm of the embedding vector.
    pub fn beta_norm(&self, x: &RingElement) -> f64 {
        self.embed(x).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Exact quotient `x / divisor`, or `None` when `divisor` does not divide `x`.
    pub fn divide_exact(&self, x: &RingElement, divisor: &RingElement) -> Result<Option<RingElement>> {
        Ok(Divisor::new(self, divisor)?.divide(x))
    }

    /// Minimal polynomial of `x` over Q: squarefree part of the characteristic
    /// polynomial of its multiplication matrix.
    pub fn minimal_polynomial(&self, x: &RingElement) -> Vec<BigInt> {
        let charpoly = self.mult_matrix(x).entries.characteristic_polynomial();
        poly::squarefree_part(&charpoly).expect("squarefree part of a monic integer polynomial")
    }

    /// Decides whether every conjugate of `x` exceeds 1 in modulus.
    pub fn is_expanding(&self, x: &RingElement) -> Result<ExpandingReport> {
        self.is_expanding_with_margin(x, DEFAULT_EXPANDING_MARGIN)
    }

    pub fn is_expanding_with_margin(&self, x: &RingElement, margin: f64) -> Result<ExpandingReport> {
        let mp = self.minimal_polynomial(x);
        let roots = poly::roots(&mp, self.eps)?;
        let min_modulus = roots.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        if let Some(z) = roots.iter().find(|z| (z.norm() - 1.0).abs() <= margin) {
            return Err(EwmError::InconclusiveNumerics(format!(
                "conjugate {z} of {x} lies within {margin:e} of the unit circle"
            )));
        }
        Ok(ExpandingReport { expanding: min_modulus > 1.0, min_modulus, min_poly: mp })
    }

    /// Smallest modulus over the d embeddings of `x`.
    pub fn min_embedding_modulus(&self, x: &RingElement) -> f64 {
        self.embed(x).iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn congruence(&self, modulus: &RingElement) -> Result<Congruence> {
        Congruence::new(self, modulus)
    }

    /// Whether `x` is a unit of Z[ω].
    pub fn is_unit(&self, x: &RingElement) -> bool {
        self.mult_matrix(x).det.abs().is_one()
    }

    /// Inverse of a unit.
    pub fn unit_inverse(&self, x: &RingElement) -> Option<RingElement> {
        Divisor::new(self, x).ok()?.divide(&self.one())
    }
}

fn eval_at(x: &RingElement, root: Complex64) -> Complex64 {
    x.coords()
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * root + c.to_f64().unwrap_or(f64::NAN))
}

/// Human readable polynomial, highest power first.
pub fn poly_string(p: &[BigInt]) -> String {
    let mut parts = Vec::new();
    for (i, c) in p.iter().enumerate().rev() {
        if c.is_zero() {
            continue;
        }
        let mag = c.abs();
        let sign = if c.is_negative() { "-" } else { "+" };
        let body = match i {
            0 => mag.to_string(),
            1 if mag.is_one() => "X".to_string(),
            1 => format!("{mag}X"),
            _ if mag.is_one() => format!("X^{i}"),
            _ => format!("{mag}X^{i}"),
        };
        parts.push((sign, body));
    }
    let mut out = String::new();
    for (k, (sign, body)) in parts.iter().enumerate() {
        if k == 0 {
            if *sign == "-" {
                out.push('-');
            }
        } else {
            out.push_str(if *sign == "-" { " - " } else { " + " });
        }
        out.push_str(body);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

#[derive(Clone, Debug)]
pub struct ExpandingReport {
    pub expanding: bool,
    /// γ: the smallest conjugate modulus.
    pub min_modulus: f64,
    pub min_poly: Vec<BigInt>,
}

/// d×d integer matrix M_x with π(x·y) = M_x·π(y).
#[derive(Clone, Debug)]
pub struct MultiplicationMatrix {
    pub entries: IntMatrix,
    pub det: BigInt,
}

impl MultiplicationMatrix {
    pub fn apply(&self, y: &RingElement) -> RingElement {
        RingElement::new(self.entries.mul_vec(y.coords()))
    }
}

/// Precomputed exact divisor: quotient = adj(M)·π(x) / det(M) when integral.
#[derive(Clone, Debug)]
pub struct Divisor {
    divisor: RingElement,
    adjugate: IntMatrix,
    det: BigInt,
}

impl Divisor {
    pub fn new(ctx: &RingContext, divisor: &RingElement) -> Result<Self> {
        if divisor.is_zero() {
            return Err(EwmError::Domain("division by zero".into()));
        }
        let m = ctx.mult_matrix(divisor);
        if m.det.is_zero() {
            return Err(EwmError::Domain(format!("{divisor} is a zero divisor")));
        }
        Ok(Self { divisor: divisor.clone(), adjugate: m.entries.adjugate(), det: m.det })
    }

    pub fn divisor(&self) -> &RingElement {
        &self.divisor
    }

    pub fn divide(&self, x: &RingElement) -> Option<RingElement> {
        let scaled = self.adjugate.mul_vec(x.coords());
        let mut out = Vec::with_capacity(scaled.len());
        for v in scaled {
            let (q, r) = num_integer::Integer::div_rem(&v, &self.det);
            if !r.is_zero() {
                return None;
            }
            out.push(q);
        }
        Some(RingElement::new(out))
    }
}

/// Canonical labels of residue classes modulo a fixed nonzero element.
#[derive(Clone, Debug)]
pub struct Congruence {
    modulus: RingElement,
    /// Lower-triangular HNF basis of the lattice π(modulus·Z[ω]), as columns.
    basis: Vec<Vec<BigInt>>,
    class_count: BigInt,
}

/// Residue class label: the unique representative inside the HNF box.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassLabel(pub Vec<BigInt>);

impl Congruence {
    pub fn new(ctx: &RingContext, modulus: &RingElement) -> Result<Self> {
        let m = ctx.mult_matrix(modulus);
        if m.det.is_zero() {
            return Err(EwmError::Domain(format!("modulus {modulus} has zero norm")));
        }
        let basis = m
            .entries
            .column_hnf()
            .ok_or_else(|| EwmError::Domain(format!("modulus {modulus} has zero norm")))?;
        Ok(Self { modulus: modulus.clone(), basis, class_count: m.det.abs() })
    }

    pub fn modulus(&self) -> &RingElement {
        &self.modulus
    }

    /// |det M_modulus|, the number of residue classes.
    pub fn class_count(&self) -> &BigInt {
        &self.class_count
    }

    pub fn label(&self, x: &RingElement) -> ClassLabel {
        let mut v = x.coords().to_vec();
        for (i, col) in self.basis.iter().enumerate() {
            let f = num_integer::Integer::div_floor(&v[i], &col[i]);
            if !f.is_zero() {
                for (a, b) in v.iter_mut().zip(col) {
                    *a -= &f * b;
                }
            }
        }
        ClassLabel(v)
    }

    pub fn congruent(&self, x: &RingElement, y: &RingElement) -> bool {
        self.label(x) == self.label(y)
    }
}
