//! Small dense integer matrices: determinants, adjugates, characteristic
//! polynomials and Hermite normal forms.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Square integer matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    n: usize,
    rows: Vec<Vec<BigInt>>,
}

impl IntMatrix {
    pub fn from_rows(rows: Vec<Vec<BigInt>>) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        Self { n, rows }
    }

    pub fn from_columns(cols: Vec<Vec<BigInt>>) -> Self {
        let n = cols.len();
        let rows = (0..n).map(|i| cols.iter().map(|c| c[i].clone()).collect()).collect();
        Self::from_rows(rows)
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
            .collect();
        Self { n, rows }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.rows[i][j]
    }

    pub fn rows(&self) -> &[Vec<BigInt>] {
        &self.rows
    }

    pub fn column(&self, j: usize) -> Vec<BigInt> {
        self.rows.iter().map(|r| r[j].clone()).collect()
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        let n = self.n;
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| &self.rows[i][k] * &other.rows[k][j]).sum())
                    .collect()
            })
            .collect();
        IntMatrix { n, rows }
    }

    pub fn trace(&self) -> BigInt {
        (0..self.n).map(|i| self.rows[i][i].clone()).sum()
    }

    /// Fraction-free (Bareiss) determinant.
    pub fn determinant(&self) -> BigInt {
        let n = self.n;
        if n == 0 {
            return BigInt::one();
        }
        let mut m = self.rows.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if m[k][k].is_zero() {
                match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                    Some(i) => {
                        m.swap(i, k);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                    m[i][j] = v / &prev;
                }
            }
            prev = m[k][k].clone();
        }
        sign * &m[n - 1][n - 1]
    }

    /// Adjugate matrix, so that `adj · M = det(M) · I`.
    ///
    /// Computed from the rational inverse when `M` is invertible and from
    /// cofactors otherwise.
    pub fn adjugate(&self) -> IntMatrix {
        let det = self.determinant();
        if det.is_zero() {
            return self.adjugate_by_cofactors();
        }
        let inv = self.rational_inverse().expect("nonzero determinant");
        let rows = inv
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|x| {
                        let v = x * BigRational::from_integer(det.clone());
                        debug_assert!(v.is_integer());
                        v.to_integer()
                    })
                    .collect()
            })
            .collect();
        IntMatrix { n: self.n, rows }
    }

    fn adjugate_by_cofactors(&self) -> IntMatrix {
        let n = self.n;
        if n == 1 {
            return IntMatrix::identity(1);
        }
        let mut rows = vec![vec![BigInt::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let minor: Vec<Vec<BigInt>> = (0..n)
                    .filter(|&r| r != i)
                    .map(|r| (0..n).filter(|&c| c != j).map(|c| self.rows[r][c].clone()).collect())
                    .collect();
                let cof = IntMatrix::from_rows(minor).determinant();
                // adj[j][i] = (-1)^{i+j} M_{ij}
                rows[j][i] = if (i + j) % 2 == 0 { cof } else { -cof };
            }
        }
        IntMatrix { n, rows }
    }

    fn rational_inverse(&self) -> Option<Vec<Vec<BigRational>>> {
        let n = self.n;
        let mut a: Vec<Vec<BigRational>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|x| BigRational::from_integer(x.clone())).collect())
            .collect();
        let mut inv: Vec<Vec<BigRational>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { BigRational::one() } else { BigRational::zero() })
                    .collect()
            })
            .collect();
        for col in 0..n {
            let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
            a.swap(col, pivot);
            inv.swap(col, pivot);
            let p = a[col][col].clone();
            for j in 0..n {
                a[col][j] = &a[col][j] / &p;
                inv[col][j] = &inv[col][j] / &p;
            }
            for r in 0..n {
                if r != col && !a[r][col].is_zero() {
                    let f = a[r][col].clone();
                    for j in 0..n {
                        let t = &f * &a[col][j];
                        a[r][j] = &a[r][j] - t;
                        let t = &f * &inv[col][j];
                        inv[r][j] = &inv[r][j] - t;
                    }
                }
            }
        }
        Some(inv)
    }

    /// Characteristic polynomial det(xI − M), lowest degree first, via the
    /// Faddeev–LeVerrier recurrence (all divisions are exact).
    pub fn characteristic_polynomial(&self) -> Vec<BigInt> {
        let n = self.n;
        let mut coeffs = vec![BigInt::zero(); n + 1];
        coeffs[n] = BigInt::one();
        let mut m = IntMatrix { n, rows: vec![vec![BigInt::zero(); n]; n] };
        for k in 1..=n {
            // M_k = A·M_{k-1} + c_{n-k+1}·I
            let mut next = self.mul(&m);
            for i in 0..n {
                next.rows[i][i] += &coeffs[n - k + 1];
            }
            m = next;
            let am = self.mul(&m);
            let t = am.trace();
            let (q, r) = t.div_rem(&BigInt::from(k));
            debug_assert!(r.is_zero(), "Faddeev-LeVerrier division must be exact");
            coeffs[n - k] = -q;
        }
        coeffs
    }

    /// Hermite normal form of the lattice spanned by the columns: a lower
    /// triangular basis `H` (as columns) with positive diagonal, entries left of
    /// the diagonal reduced into `[0, H_ii)`. Returns `None` when singular.
    pub fn column_hnf(&self) -> Option<Vec<Vec<BigInt>>> {
        let n = self.n;
        let mut gens: Vec<Vec<BigInt>> = (0..n).map(|j| self.column(j)).collect();
        let mut basis: Vec<Vec<BigInt>> = Vec::with_capacity(n);
        for i in 0..n {
            // Euclid on coordinate i among the remaining generators.
            loop {
                let nonzero: Vec<usize> = (0..gens.len()).filter(|&g| !gens[g][i].is_zero()).collect();
                if nonzero.len() <= 1 {
                    break;
                }
                let pivot = *nonzero
                    .iter()
                    .min_by(|&&a, &&b| gens[a][i].abs().cmp(&gens[b][i].abs()))
                    .unwrap();
                for &g in &nonzero {
                    if g == pivot {
                        continue;
                    }
                    let f = gens[g][i].div_floor(&gens[pivot][i]);
                    let p = gens[pivot].clone();
                    for (x, y) in gens[g].iter_mut().zip(&p) {
                        *x -= &f * y;
                    }
                }
            }
            let idx = (0..gens.len()).find(|&g| !gens[g][i].is_zero())?;
            let mut h = gens.swap_remove(idx);
            if h[i].is_negative() {
                h.iter_mut().for_each(|x| *x = -&*x);
            }
            basis.push(h);
        }
        // Reduce entries below the diagonal of earlier columns by later columns.
        for i in 0..n {
            for j in 0..i {
                let f = basis[j][i].div_floor(&basis[i][i]);
                if !f.is_zero() {
                    let hi = basis[i].clone();
                    for (x, y) in basis[j].iter_mut().zip(&hi) {
                        *x -= &f * y;
                    }
                }
            }
        }
        Some(basis)
    }
}
