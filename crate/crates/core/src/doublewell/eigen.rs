//! Lowest eigenpairs of a real symmetric tridiagonal matrix by Sturm-sequence
//! bisection followed by shifted inverse iteration.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MAX_BISECTION: usize = 300;
const MAX_INVERSE: usize = 12;

/// Symmetric tridiagonal matrix with diagonal `diag` and off-diagonal `off`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.len() < 2 || off.len() + 1 != diag.len() {
            return Err(Error::InvalidInput("tridiagonal shape mismatch".into()));
        }
        if diag.iter().chain(&off).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("tridiagonal entries must be finite".into()));
        }
        Ok(Self { diag, off })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `y = T x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.off[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 } + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    fn scale(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE)
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let pivmin = f64::MIN_POSITIVE.sqrt() * self.scale();
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.len() {
            q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue (0-based) to working precision.
    pub fn eigenvalue(&self, k: usize) -> Result<f64> {
        if k >= self.len() {
            return Err(Error::InvalidArgument(format!("eigenvalue index {k} out of range")));
        }
        let (mut lo, mut hi) = self.gershgorin();
        let pad = 2.0 * f64::EPSILON * self.scale() + f64::MIN_POSITIVE;
        lo -= pad;
        hi += pad;
        for _ in 0..MAX_BISECTION {
            let mid = 0.5 * (lo + hi);
            let width_tol = (2.0 * f64::EPSILON * lo.abs().max(hi.abs())).max(1e-4 * f64::EPSILON * self.scale());
            if mid <= lo || mid >= hi || hi - lo <= width_tol {
                return Ok(mid.clamp(lo, hi));
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Err(Error::Numeric(format!("bisection for eigenvalue {k} did not converge: bracket [{lo}, {hi}]")))
    }
}

/// Partial-pivot LU of `T − σI` (general tridiagonal form).
struct TridiagonalLu {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    upper2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn factor(t: &SymTridiagonal, shift: f64) -> Self {
        let n = t.len();
        let tiny = f64::EPSILON * t.scale();
        let mut lower = t.off.clone();
        let mut diag: Vec<f64> = t.diag.iter().map(|d| d - shift).collect();
        let mut upper = t.off.clone();
        let mut upper2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n - 1];
        for i in 0..n - 1 {
            if diag[i].abs() >= lower[i].abs() {
                if diag[i] == 0.0 {
                    diag[i] = tiny;
                }
                let fact = lower[i] / diag[i];
                lower[i] = fact;
                diag[i + 1] -= fact * upper[i];
            } else {
                let fact = diag[i] / lower[i];
                diag[i] = lower[i];
                lower[i] = fact;
                let temp = upper[i];
                upper[i] = diag[i + 1];
                diag[i + 1] = temp - fact * diag[i + 1];
                if i + 2 < n {
                    upper2[i] = upper[i + 1];
                    upper[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        if diag[n - 1] == 0.0 {
            diag[n - 1] = tiny;
        }
        Self { lower, diag, upper, upper2, swapped }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.diag.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.lower[i] * b[i];
            } else {
                b[i + 1] -= self.lower[i] * b[i];
            }
        }
        b[n - 1] /= self.diag[n - 1];
        if n >= 2 {
            b[n - 2] = (b[n - 2] - self.upper[n - 2] * b[n - 1]) / self.diag[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.upper[i] * b[i + 1] - self.upper2[i] * b[i + 2]) / self.diag[i];
        }
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    // two passes of modified Gram–Schmidt
    for _ in 0..2 {
        for b in basis {
            let c: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
    }
}

/// Eigenpair of a tridiagonal matrix with a Euclidean-unit eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalEigenpair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
}

/// The `k` lowest eigenpairs; start vectors are drawn from `seed`.
pub fn lowest_eigenpairs(t: &SymTridiagonal, k: usize, seed: u64) -> Result<Vec<TridiagonalEigenpair>> {
    let n = t.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("cannot extract {k} eigenpairs of a {n}x{n} matrix")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = t.scale();
    let mut out: Vec<TridiagonalEigenpair> = Vec::with_capacity(k);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    for idx in 0..k {
        let value = t.eigenvalue(idx)?;
        let lu = TridiagonalLu::factor(t, value);
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        orthogonalize(&mut v, &vectors);
        normalize(&mut v);
        let mut residual = f64::INFINITY;
        let tol = 64.0 * f64::EPSILON * scale * (n as f64).sqrt();
        for _ in 0..MAX_INVERSE {
            lu.solve(&mut v);
            orthogonalize(&mut v, &vectors);
            if normalize(&mut v) == 0.0 || v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Numeric(format!("inverse iteration for eigenvalue {idx} collapsed")));
            }
            let tv = t.apply(&v);
            residual = tv.iter().zip(&v).map(|(a, b)| (a - value * b).powi(2)).sum::<f64>().sqrt();
            if residual <= tol {
                break;
            }
        }
        if residual > tol {
            return Err(Error::Numeric(format!(
                "inverse iteration for eigenvalue {idx} ({value}) stalled at residual {residual:.3e} (tolerance {tol:.3e})"
            )));
        }
        vectors.push(v.clone());
        out.push(TridiagonalEigenpair { value, vector: v, residual });
    }
    Ok(out)
}
