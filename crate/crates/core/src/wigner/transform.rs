use super::grid::{Grid1D, WaveFn};
use crate::error::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::io::{BufRead, Read, Write};
use std::sync::Arc;

const IMAG_TOL: f64 = 1e-9;
const BINARY_MAGIC: &[u8; 8] = b"WIGNER01";

/// Uniform phase-space grid: `nx` positions by `np` momenta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid {
    pub x_min: f64,
    pub dx: f64,
    pub nx: usize,
    pub p_min: f64,
    pub dp: f64,
    pub np: usize,
}

impl PhaseGrid {
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + j as f64 * self.dp
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.nx - 1)
    }

    pub fn p_max(&self) -> f64 {
        self.p(self.np - 1)
    }

    fn weight(i: usize, n: usize, h: f64) -> f64 {
        if i == 0 || i + 1 == n {
            0.5 * h
        } else {
            h
        }
    }

    pub fn x_weight(&self, i: usize) -> f64 {
        Self::weight(i, self.nx, self.dx)
    }

    pub fn p_weight(&self, j: usize) -> f64 {
        Self::weight(j, self.np, self.dp)
    }
}

/// Output window and momentum resolution of a transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerOptions {
    pub p_extent: f64,
    pub n_p: usize,
    pub x_window: Option<(f64, f64)>,
}

impl WignerOptions {
    pub fn new(p_extent: f64, n_p: usize) -> Self {
        Self { p_extent, n_p, x_window: None }
    }

    /// Restricts the output rows to `x ∈ [lo, hi]`.
    pub fn with_window(mut self, lo: f64, hi: f64) -> Self {
        self.x_window = Some((lo, hi));
        self
    }
}

/// Reusable FFT plan for transforms of functions on one grid.
///
/// Row `x_i` uses the lags `y_j = j h`, `|j| ≤ min(i, n−1−i)`; a transform of
/// length `N` puts momenta on the spacing `πħ/(N h)`.
pub struct WignerPlan {
    rows: Vec<usize>,
    n_fft: usize,
    half_width: usize,
    phase: PhaseGrid,
    scale: f64,
    n_points: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl WignerPlan {
    pub fn new(grid: &Grid1D, hbar: f64, opts: &WignerOptions) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidArgument(format!("hbar = {hbar} must be positive")));
        }
        if !(opts.p_extent.is_finite() && opts.p_extent > 0.0) || opts.n_p < 1 {
            return Err(Error::InvalidArgument("momentum extent and point count must be positive".into()));
        }
        let h = grid.spacing();
        // The transform reaches |p| < πħ/(2h); beyond that the lag sampling aliases.
        let nyquist = PI * hbar / (2.0 * h);
        if opts.p_extent * h / hbar >= PI / 2.0 {
            return Err(Error::Aliasing(format!(
                "p_extent {} exceeds the resolvable momentum {:.4} for spacing {:.4e} at hbar {}",
                opts.p_extent, nyquist, h, hbar
            )));
        }
        let n = grid.n_points();
        let rows: Vec<usize> = match opts.x_window {
            None => (0..n).collect(),
            Some((lo, hi)) => (0..n).filter(|&i| grid.x(i) >= lo && grid.x(i) <= hi).collect(),
        };
        if rows.is_empty() {
            return Err(Error::InvalidArgument("x window contains no grid points".into()));
        }
        let max_lag = rows.iter().map(|&i| i.min(n - 1 - i)).max().unwrap_or(0);
        let mut n_fft = 2 * (2 * max_lag + 1).next_power_of_two();
        let count = |n_fft: usize| {
            let dp = PI * hbar / (n_fft as f64 * h);
            2 * ((opts.p_extent / dp).floor() as usize) + 1
        };
        while count(n_fft) < opts.n_p {
            n_fft *= 2;
        }
        let dp = PI * hbar / (n_fft as f64 * h);
        let half_width = (opts.p_extent / dp).floor() as usize;
        let phase = PhaseGrid {
            x_min: grid.x(rows[0]),
            dx: h,
            nx: rows.len(),
            p_min: -(half_width as f64) * dp,
            dp,
            np: 2 * half_width + 1,
        };
        let fft = FftPlanner::new().plan_fft_inverse(n_fft);
        Ok(Self { rows, n_fft, half_width, phase, scale: h / (PI * hbar), n_points: n, fft })
    }

    pub fn phase_grid(&self) -> PhaseGrid {
        self.phase
    }

    pub fn fft_len(&self) -> usize {
        self.n_fft
    }

    /// Row-major values of `(1/πħ)∫ conj φ(x+y) ψ(x−y) e^{2ipy/ħ} dy`.
    pub fn cross_values(&self, phi: &[Complex64], psi: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(phi.len(), self.n_points);
        assert_eq!(psi.len(), self.n_points);
        let np = self.phase.np;
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows.len() * np];
        out.par_chunks_mut(np).zip(self.rows.par_iter()).for_each_init(
            || {
                let buf = vec![Complex64::new(0.0, 0.0); self.n_fft];
                let scratch = vec![Complex64::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
                (buf, scratch)
            },
            |(buf, scratch), (row, &i)| self.fill_row(phi, psi, i, buf, scratch, row),
        );
        out
    }

    /// Sequential variant of [`Self::cross_values`] for callers that parallelize outside.
    pub fn cross_values_serial(&self, phi: &[Complex64], psi: &[Complex64]) -> Vec<Complex64> {
        let np = self.phase.np;
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows.len() * np];
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n_fft];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        for (row, &i) in out.chunks_mut(np).zip(&self.rows) {
            self.fill_row(phi, psi, i, &mut buf, &mut scratch, row);
        }
        out
    }

    fn fill_row(
        &self,
        phi: &[Complex64],
        psi: &[Complex64],
        i: usize,
        buf: &mut [Complex64],
        scratch: &mut [Complex64],
        row: &mut [Complex64],
    ) {
        let n = self.n_points;
        let nf = self.n_fft;
        buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        let lag = i.min(n - 1 - i);
        for j in 0..=lag {
            buf[j] = phi[i + j].conj() * psi[i - j];
            if j > 0 {
                buf[nf - j] = phi[i - j].conj() * psi[i + j];
            }
        }
        self.fft.process_with_scratch(buf, scratch);
        let m = self.half_width as i64;
        for (k, slot) in row.iter_mut().enumerate() {
            let idx = (k as i64 - m).rem_euclid(nf as i64) as usize;
            *slot = buf[idx] * self.scale;
        }
    }
}

/// Sampled Wigner function of a pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerField {
    grid: PhaseGrid,
    values: Vec<f64>,
    hbar: f64,
    imag_residue: f64,
}

/// Sampled cross-Wigner function of two states (complex in general).
#[derive(Debug, Clone, PartialEq)]
pub struct CrossWignerField {
    grid: PhaseGrid,
    values: Vec<Complex64>,
    hbar: f64,
}

/// `W(x,p) = (1/πħ)∫ conj Ψ(x+y) Ψ(x−y) e^{2ipy/ħ} dy` on `|p| ≤ p_extent` with at least `n_p` momenta.
pub fn wigner_transform(psi: &WaveFn, p_extent: f64, n_p: usize) -> Result<WignerField> {
    wigner_transform_with(psi, &WignerOptions::new(p_extent, n_p))
}

pub fn wigner_transform_with(psi: &WaveFn, opts: &WignerOptions) -> Result<WignerField> {
    let plan = WignerPlan::new(psi.grid(), psi.hbar(), opts)?;
    let raw = plan.cross_values(psi.values(), psi.values());
    WignerField::from_complex(plan.phase_grid(), raw, psi.hbar())
}

/// Cross-Wigner function of `phi` and `psi` on a shared grid.
pub fn cross_wigner(phi: &WaveFn, psi: &WaveFn, opts: &WignerOptions) -> Result<CrossWignerField> {
    if phi.grid() != psi.grid() || phi.hbar() != psi.hbar() {
        return Err(Error::InvalidInput("cross-Wigner of states on different grids or hbar".into()));
    }
    let plan = WignerPlan::new(psi.grid(), psi.hbar(), opts)?;
    Ok(CrossWignerField { grid: plan.phase_grid(), values: plan.cross_values(phi.values(), psi.values()), hbar: psi.hbar() })
}

/// `⟨φ, Ω(x,p) ψ⟩ = 2∫ conj φ(x+s) e^{2ips/ħ} ψ(x−s) ds` at the grid point nearest `x`.
pub fn omega_matrix_element(phi: &WaveFn, psi: &WaveFn, x: f64, p: f64) -> Result<Complex64> {
    if phi.grid() != psi.grid() {
        return Err(Error::InvalidInput("states on different grids".into()));
    }
    let g = psi.grid();
    let n = g.n_points();
    let h = g.spacing();
    let i = g.nearest_index(x);
    let lag = i.min(n - 1 - i);
    let (a, b) = (phi.values(), psi.values());
    let mut acc = a[i].conj() * b[i];
    for j in 1..=lag {
        let ph = Complex64::cis(2.0 * p * j as f64 * h / psi.hbar());
        acc += a[i + j].conj() * b[i - j] * ph + a[i - j].conj() * b[i + j] * ph.conj();
    }
    Ok(acc * (2.0 * h))
}

impl WignerField {
    fn from_complex(grid: PhaseGrid, raw: Vec<Complex64>, hbar: f64) -> Result<Self> {
        let imag_residue = raw.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        if imag_residue > IMAG_TOL {
            return Err(Error::Numeric(format!("Wigner transform has imaginary residue {imag_residue:.3e}")));
        }
        Ok(Self { grid, values: raw.into_iter().map(|z| z.re).collect(), hbar, imag_residue })
    }

    /// Builds a field from explicit samples (row-major, `nx × np`).
    pub fn from_values(grid: PhaseGrid, values: Vec<f64>, hbar: f64) -> Result<Self> {
        if values.len() != grid.nx * grid.np {
            return Err(Error::InvalidInput(format!("{} values for a {}x{} grid", values.len(), grid.nx, grid.np)));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite Wigner values".into()));
        }
        Ok(Self { grid, values, hbar, imag_residue: 0.0 })
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn imag_residue(&self) -> f64 {
        self.imag_residue
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.np + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// `∬ W dx dp` by the trapezoidal rule.
    pub fn total_integral(&self) -> f64 {
        self.position_marginal().iter().enumerate().map(|(i, m)| self.grid.x_weight(i) * m).sum()
    }

    /// `∫ W dp` for every row.
    pub fn position_marginal(&self) -> Vec<f64> {
        let g = &self.grid;
        (0..g.nx).map(|i| (0..g.np).map(|j| g.p_weight(j) * self.at(i, j)).sum()).collect()
    }

    /// Four-point Lagrange interpolation in each direction.
    pub fn interpolate(&self, x: f64, p: f64) -> Result<f64> {
        let g = &self.grid;
        let sx = (x - g.x_min) / g.dx;
        let sp = (p - g.p_min) / g.dp;
        let inside = |s: f64, n: usize| s >= -1e-9 && s <= (n - 1) as f64 + 1e-9;
        if !inside(sx, g.nx) || !inside(sp, g.np) {
            return Err(Error::Domain(format!("({x}, {p}) lies outside the Wigner grid")));
        }
        let (ix, wx) = stencil(sx, g.nx);
        let (ip, wp) = stencil(sp, g.np);
        let mut acc = 0.0;
        for (a, wa) in ix.iter().zip(&wx) {
            for (b, wb) in ip.iter().zip(&wp) {
                acc += wa * wb * self.at(*a, *b);
            }
        }
        Ok(acc)
    }

    /// Text dump: bounds header, one line of header values, then one line per position.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let g = &self.grid;
        writeln!(out, "x_min,x_max,nx,p_min,p_max,np,hbar")?;
        writeln!(out, "{},{},{},{},{},{},{}", g.x_min, g.x_max(), g.nx, g.p_min, g.p_max(), g.np, self.hbar)?;
        for i in 0..g.nx {
            let row: Vec<String> = (0..g.np).map(|j| format!("{}", self.at(i, j))).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::InvalidInput("truncated Wigner dump".into()))?
                .map_err(|e| Error::InvalidInput(e.to_string()))
        };
        let head = next()?;
        if head.trim() != "x_min,x_max,nx,p_min,p_max,np,hbar" {
            return Err(Error::InvalidInput(format!("unexpected dump header {head:?}")));
        }
        let fields: Vec<String> = next()?.split(',').map(|s| s.trim().to_string()).collect();
        if fields.len() != 7 {
            return Err(Error::InvalidInput("dump header needs seven fields".into()));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::InvalidInput(format!("{s:?}: {e}")));
        let int = |s: &str| s.parse::<usize>().map_err(|e| Error::InvalidInput(format!("{s:?}: {e}")));
        let grid = grid_from_bounds(num(&fields[0])?, num(&fields[1])?, int(&fields[2])?, num(&fields[3])?, num(&fields[4])?, int(&fields[5])?)?;
        let hbar = num(&fields[6])?;
        let mut values = Vec::with_capacity(grid.nx * grid.np);
        for _ in 0..grid.nx {
            for v in next()?.split(',') {
                values.push(num(v.trim())?);
            }
        }
        Self::from_values(grid, values, hbar)
    }

    /// Binary dump: magic, header (f64/u64 little endian), then row-major f64 values.
    pub fn write_binary<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let g = &self.grid;
        out.write_all(BINARY_MAGIC)?;
        out.write_all(&g.x_min.to_le_bytes())?;
        out.write_all(&g.x_max().to_le_bytes())?;
        out.write_all(&(g.nx as u64).to_le_bytes())?;
        out.write_all(&g.p_min.to_le_bytes())?;
        out.write_all(&g.p_max().to_le_bytes())?;
        out.write_all(&(g.np as u64).to_le_bytes())?;
        out.write_all(&self.hbar.to_le_bytes())?;
        for v in &self.values {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let io = |e: std::io::Error| Error::InvalidInput(e.to_string());
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic).map_err(io)?;
        if &magic != BINARY_MAGIC {
            return Err(Error::InvalidInput("not a Wigner binary dump".into()));
        }
        let mut word = [0u8; 8];
        let mut read = |input: &mut R| -> Result<[u8; 8]> {
            input.read_exact(&mut word).map_err(io)?;
            Ok(word)
        };
        let x_min = f64::from_le_bytes(read(&mut input)?);
        let x_max = f64::from_le_bytes(read(&mut input)?);
        let nx = u64::from_le_bytes(read(&mut input)?) as usize;
        let p_min = f64::from_le_bytes(read(&mut input)?);
        let p_max = f64::from_le_bytes(read(&mut input)?);
        let np = u64::from_le_bytes(read(&mut input)?) as usize;
        let hbar = f64::from_le_bytes(read(&mut input)?);
        let grid = grid_from_bounds(x_min, x_max, nx, p_min, p_max, np)?;
        let mut values = Vec::with_capacity(nx * np);
        for _ in 0..nx * np {
            values.push(f64::from_le_bytes(read(&mut input)?));
        }
        Self::from_values(grid, values, hbar)
    }
}

fn grid_from_bounds(x_min: f64, x_max: f64, nx: usize, p_min: f64, p_max: f64, np: usize) -> Result<PhaseGrid> {
    if nx < 2 || np < 2 || !(x_max > x_min) || !(p_max > p_min) {
        return Err(Error::InvalidInput("degenerate phase grid in dump".into()));
    }
    Ok(PhaseGrid {
        x_min,
        dx: (x_max - x_min) / (nx - 1) as f64,
        nx,
        p_min,
        dp: (p_max - p_min) / (np - 1) as f64,
        np,
    })
}

// Indices and Lagrange weights of the (up to) four nearest nodes around fractional index s.
fn stencil(s: f64, n: usize) -> (Vec<usize>, Vec<f64>) {
    let s = s.clamp(0.0, (n - 1) as f64);
    if n < 4 {
        let i = (s.floor() as usize).min(n - 2);
        let t = s - i as f64;
        return (vec![i, i + 1], vec![1.0 - t, t]);
    }
    let base = (s.floor() as i64 - 1).clamp(0, n as i64 - 4) as usize;
    let idx: Vec<usize> = (base..base + 4).collect();
    let w = idx
        .iter()
        .map(|&k| {
            idx.iter()
                .filter(|&&m| m != k)
                .map(|&m| (s - m as f64) / (k as f64 - m as f64))
                .product()
        })
        .collect();
    (idx, w)
}

impl CrossWignerField {
    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.grid.np + j]
    }
}
