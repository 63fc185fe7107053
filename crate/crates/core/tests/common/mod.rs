//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use bornflea::quad::gauss_legendre_on;
use num_complex::Complex64;
use std::f64::consts::PI;

/// `(1/πħ)∫ conj ψ(x+y) ψ(x−y) e^{2ipy/ħ} dy` by Gauss–Legendre on `[-y_max, y_max]`.
pub fn wigner_by_quadrature<F: Fn(f64) -> Complex64>(psi: &F, hbar: f64, x: f64, p: f64, y_max: f64, nodes: usize) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (y, w) in gauss_legendre_on(nodes, -y_max, y_max) {
        acc += psi(x + y).conj() * psi(x - y) * Complex64::cis(2.0 * p * y / hbar) * w;
    }
    acc.re / (PI * hbar)
}

/// `⟨ψ, Q(f) ψ⟩` with the Weyl kernel `K(x,y) = (1/2πħ)∫ f((x+y)/2, p) e^{ip(x−y)/ħ} dp`,
/// integrating `x`, `y` over `[-l, l]` and `p` over `[p_lo, p_hi]`.
#[allow(clippy::too_many_arguments)]
pub fn weyl_expectation<F, G>(psi: &F, f: &G, hbar: f64, l: f64, p_lo: f64, p_hi: f64, n_xy: usize, n_p: usize) -> f64
where
    F: Fn(f64) -> Complex64,
    G: Fn(f64, f64) -> f64,
{
    let xs = gauss_legendre_on(n_xy, -l, l);
    let ps = gauss_legendre_on(n_p, p_lo, p_hi);
    let vals: Vec<Complex64> = xs.iter().map(|&(x, _)| psi(x)).collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for (a, &(x, wx)) in xs.iter().enumerate() {
        for (b, &(y, wy)) in xs.iter().enumerate() {
            let s = 0.5 * (x + y);
            let mut k = Complex64::new(0.0, 0.0);
            for &(p, wp) in &ps {
                let fv = f(s, p);
                if fv != 0.0 {
                    k += Complex64::cis(p * (x - y) / hbar) * (fv * wp);
                }
            }
            acc += vals[a].conj() * k * vals[b] * (wx * wy);
        }
    }
    acc.re / (2.0 * PI * hbar)
}

/// `∬ f g` on a rectangle by tensor Gauss–Legendre.
pub fn double_quadrature<F: Fn(f64, f64) -> f64>(f: F, x: (f64, f64), p: (f64, f64), n: usize) -> f64 {
    let xs = gauss_legendre_on(n, x.0, x.1);
    let ps = gauss_legendre_on(n, p.0, p.1);
    xs.iter().map(|&(x, wx)| wx * ps.iter().map(|&(p, wp)| wp * f(x, p)).sum::<f64>()).sum()
}
