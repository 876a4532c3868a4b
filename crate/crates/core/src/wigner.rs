//! Wigner functions of truncated-Fock density matrices.
//!
//! Grid evaluation goes through the closed-form Laguerre kernels of the
//! basis operators `|m⟩⟨n|`. With `α = (q + ip)/√2`,
//!
//! ```text
//! W_{|m⟩⟨n|}(q, p) = ((−1)ⁿ/π) √(n!/m!) (2ᾱ)^{m−n} e^{−2|α|²} L_n^{(m−n)}(4|α|²),   m ≥ n,
//! ```
//!
//! and `W_{|n⟩⟨m|} = conj(W_{|m⟩⟨n|})`. These equal
//! `(1/2π)∫ψ_m(q − v/2)ψ_n(q + v/2)e^{ivp}dv`.

use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::DensityMatrix;
use crate::{CMatrix, C64};

/// Ratio between phase-space coordinates and coherent amplitudes:
/// `(q, p) = QUADRATURE_SCALE · (Re z, Im z)`. The Wigner function of `|z⟩`
/// peaks at that point.
pub const QUADRATURE_SCALE: f64 = std::f64::consts::SQRT_2;

/// Fixed coordinates beyond this radius trigger a kernel-underflow warning.
pub const SLICE_RANGE: f64 = 8.0;

const IMAG_TOL: f64 = 1e-10;
const UNIFORM_TOL: f64 = 1e-9;

/// Which mode a two-mode slice plots, and where the other mode sits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSlice {
    /// 1 or 2.
    pub plot_mode: usize,
    pub fixed_q: f64,
    pub fixed_p: f64,
}

/// Real values `W(q_i, p_j)` on a uniform rectangular grid; rows follow
/// `q_axis`, columns `p_axis`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceGrid {
    pub q_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    pub values: DMatrix<f64>,
    pub mode_slice: Option<ModeSlice>,
}

/// `lo:step:hi`, inclusive of `hi` when it lies on the lattice.
pub fn parse_axis(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!("axis `{spec}` is not of the form lo:step:hi")));
    }
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("axis `{spec}`: {e}")))
    };
    let (lo, step, hi) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
    uniform_axis(lo, step, hi)
}

/// Uniform axis from `lo` to `hi` in steps of `step`.
pub fn uniform_axis(lo: f64, step: f64, hi: f64) -> Result<Vec<f64>> {
    if !(lo.is_finite() && step.is_finite() && hi.is_finite()) || step <= 0.0 || hi < lo {
        return Err(Error::Config(format!("invalid axis {lo}:{step}:{hi}")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(Error::Config(format!("axis {lo}:{step}:{hi} has {count} points")));
    }
    Ok((0..count).map(|k| lo + step * k as f64).collect())
}

/// Common spacing of a uniform axis (1 for a single point).
pub fn axis_step(name: &str, axis: &[f64]) -> Result<f64> {
    if axis.is_empty() {
        return Err(Error::Config(format!("{name} axis is empty")));
    }
    if axis.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config(format!("{name} axis has non-finite values")));
    }
    if axis.len() == 1 {
        return Ok(1.0);
    }
    let step = (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64;
    if step <= 0.0 {
        return Err(Error::Config(format!("{name} axis must be increasing")));
    }
    for w in axis.windows(2) {
        if ((w[1] - w[0]) - step).abs() > UNIFORM_TOL * step.max(1.0) {
            return Err(Error::Config(format!("{name} axis is not uniform")));
        }
    }
    Ok(step)
}

/// Generalized Laguerre values `L_0^{(k)}(x) … L_nmax^{(k)}(x)`.
fn laguerre(nmax: usize, k: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(1.0);
    if nmax == 0 {
        return out;
    }
    let kf = k as f64;
    out.push(1.0 + kf - x);
    for j in 1..nmax {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + kf - x) * out[j] - (jf + kf) * out[j - 1]) / (jf + 1.0);
        out.push(next);
    }
    out
}

/// `W_{|m⟩⟨n|}(q, p)`.
pub fn wigner_kernel(m: usize, n: usize, q: f64, p: f64) -> C64 {
    if m < n {
        return wigner_kernel(n, m, q, p).conj();
    }
    let alpha = C64::new(q, p) / QUADRATURE_SCALE;
    let a2 = alpha.norm_sqr();
    let k = m - n;
    let lag = laguerre(n, k, 4.0 * a2)[n];
    // √(n!/m!) (2ᾱ)^k accumulated factor by factor.
    let mut pre = C64::new(1.0, 0.0);
    for j in 1..=k {
        pre = pre * (2.0 * alpha.conj()) / ((n + j) as f64).sqrt();
    }
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    pre * (sign * (-2.0 * a2).exp() * lag / std::f64::consts::PI)
}

/// Every kernel `W_{|m⟩⟨n|}(q, p)` for `m, n < dim`, as a matrix indexed `[m, n]`.
pub fn kernel_table(dim: usize, q: f64, p: f64) -> CMatrix {
    let mut out = CMatrix::zeros(dim, dim);
    if dim == 0 {
        return out;
    }
    let alpha = C64::new(q, p) / QUADRATURE_SCALE;
    let a2 = alpha.norm_sqr();
    let envelope = (-2.0 * a2).exp() / std::f64::consts::PI;
    let two_conj = 2.0 * alpha.conj();
    for k in 0..dim {
        let nmax = dim - 1 - k;
        let lag = laguerre(nmax, k, 4.0 * a2);
        for n in 0..=nmax {
            let mut pre = C64::new(1.0, 0.0);
            for j in 1..=k {
                pre = pre * two_conj / ((n + j) as f64).sqrt();
            }
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let w = pre * (sign * envelope * lag[n]);
            out[(n + k, n)] = w;
            out[(n, n + k)] = w.conj();
        }
    }
    out
}

/// `Σ_{mn} a_{mn} K[m, n]` where `K` is a [`kernel_table`]. Real for
/// Hermitian `a`; the imaginary part is returned so callers can check.
fn contract(a: &CMatrix, kernels: &CMatrix) -> C64 {
    a.iter().zip(kernels.iter()).map(|(x, y)| x * y).sum()
}

fn checked_real(z: C64, scale: f64) -> Result<f64> {
    if z.im.abs() > IMAG_TOL * scale.max(1.0) {
        return Err(Error::Numerical(format!(
            "Wigner value has imaginary residue {:.3e}; input is not Hermitian",
            z.im
        )));
    }
    Ok(z.re)
}

fn rows_in_parallel(
    q_axis: &[f64],
    p_axis: &[f64],
    f: impl Fn(f64, f64) -> Result<f64> + Sync,
) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = q_axis
        .par_iter()
        .map(|&q| p_axis.iter().map(|&p| f(q, p)).collect::<Result<Vec<f64>>>())
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(q_axis.len(), p_axis.len(), |i, j| rows[i][j]))
}

/// Wigner function of a single-mode state on `q_axis × p_axis`.
pub fn wigner_grid(rho: &DensityMatrix, q_axis: &[f64], p_axis: &[f64]) -> Result<PhaseSpaceGrid> {
    if rho.trunc.modes != 1 {
        return Err(Error::Unsupported(format!(
            "wigner_grid takes one mode, got {}; use wigner_two_mode_slice",
            rho.trunc.modes
        )));
    }
    axis_step("q", q_axis)?;
    axis_step("p", p_axis)?;
    let d = rho.dim();
    let scale = rho.entries.norm();
    let values = rows_in_parallel(q_axis, p_axis, |q, p| {
        checked_real(contract(&rho.entries, &kernel_table(d, q, p)), scale)
    })?;
    Ok(PhaseSpaceGrid {
        q_axis: q_axis.to_vec(),
        p_axis: p_axis.to_vec(),
        values,
        mode_slice: None,
    })
}

/// Slice of a two-mode Wigner function over the plotted mode, the other
/// mode held at `(fixed_q, fixed_p)`.
pub fn wigner_two_mode_slice(
    rho: &DensityMatrix,
    slice: ModeSlice,
    q_axis: &[f64],
    p_axis: &[f64],
) -> Result<PhaseSpaceGrid> {
    if rho.trunc.modes != 2 {
        return Err(Error::Unsupported(format!(
            "two-mode slice needs two modes, got {}",
            rho.trunc.modes
        )));
    }
    if slice.plot_mode != 1 && slice.plot_mode != 2 {
        return Err(Error::Config(format!("plot_mode must be 1 or 2, got {}", slice.plot_mode)));
    }
    if !(slice.fixed_q.is_finite() && slice.fixed_p.is_finite()) {
        return Err(Error::Config("fixed coordinates must be finite".into()));
    }
    if slice.fixed_q.abs() > SLICE_RANGE || slice.fixed_p.abs() > SLICE_RANGE {
        log::warn!(
            "fixed coordinates ({}, {}) lie outside |q|, |p| <= {SLICE_RANGE}; kernels underflow there",
            slice.fixed_q,
            slice.fixed_p
        );
    }
    axis_step("q", q_axis)?;
    axis_step("p", p_axis)?;
    let d = rho.trunc.dim();
    // Contract the fixed mode first: A[m, n] over the plotted mode.
    let fixed = kernel_table(d, slice.fixed_q, slice.fixed_p);
    let mut reduced = CMatrix::zeros(d, d);
    for m1 in 0..d {
        for n1 in 0..d {
            for m2 in 0..d {
                for n2 in 0..d {
                    let (row, col, a, b) = if slice.plot_mode == 1 {
                        (m1 * d + m2, n1 * d + n2, m1, n1)
                    } else {
                        (m2 * d + m1, n2 * d + n1, m1, n1)
                    };
                    reduced[(a, b)] += rho.entries[(row, col)] * fixed[(m2, n2)];
                }
            }
        }
    }
    let scale = rho.entries.norm();
    let values = rows_in_parallel(q_axis, p_axis, |q, p| {
        checked_real(contract(&reduced, &kernel_table(d, q, p)), scale)
    })?;
    Ok(PhaseSpaceGrid {
        q_axis: q_axis.to_vec(),
        p_axis: p_axis.to_vec(),
        values,
        mode_slice: Some(slice),
    })
}

/// Slices over every fixed point of `q_axis × p_axis` for the other mode;
/// the full four-dimensional function, mode-1-slow.
pub fn wigner_two_mode_full(
    rho: &DensityMatrix,
    q_axis: &[f64],
    p_axis: &[f64],
) -> Result<Vec<PhaseSpaceGrid>> {
    let mut out = Vec::with_capacity(q_axis.len() * p_axis.len());
    for &q in q_axis {
        for &p in p_axis {
            let slice = ModeSlice {
                plot_mode: 1,
                fixed_q: q,
                fixed_p: p,
            };
            out.push(wigner_two_mode_slice(rho, slice, q_axis, p_axis)?);
        }
    }
    Ok(out)
}

impl PhaseSpaceGrid {
    pub fn q_step(&self) -> f64 {
        axis_step("q", &self.q_axis).unwrap_or(1.0)
    }

    pub fn p_step(&self) -> f64 {
        axis_step("p", &self.p_axis).unwrap_or(1.0)
    }

    /// `Σ W Δq Δp`
    pub fn integral(&self) -> f64 {
        self.values.sum() * self.q_step() * self.p_step()
    }

    /// `Σ_p W(q, p) Δp` for every `q`.
    pub fn q_marginal(&self) -> Vec<f64> {
        let dp = self.p_step();
        self.values.row_iter().map(|r| r.sum() * dp).collect()
    }

    pub fn min(&self) -> f64 {
        self.values.min()
    }

    pub fn max(&self) -> f64 {
        self.values.max()
    }

    pub fn validate(&self) -> Result<()> {
        axis_step("q", &self.q_axis)?;
        axis_step("p", &self.p_axis)?;
        if self.values.nrows() != self.q_axis.len() || self.values.ncols() != self.p_axis.len() {
            return Err(Error::DimensionMismatch {
                expected: self.q_axis.len() * self.p_axis.len(),
                got: self.values.len(),
            });
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("grid has non-finite values".into()));
        }
        Ok(())
    }

    /// CSV: the first row holds `p_axis` after a corner label, each following
    /// row is `q` then the values along `p`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "q\\p")?;
        for p in &self.p_axis {
            write!(out, ",{p}")?;
        }
        writeln!(out)?;
        for (i, q) in self.q_axis.iter().enumerate() {
            write!(out, "{q}")?;
            for j in 0..self.p_axis.len() {
                write!(out, ",{}", self.values[(i, j)])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty grid file".into()))??;
        let p_axis = parse_row(&header, 1)?;
        let mut q_axis = Vec::new();
        let mut rows = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row = parse_row(&line, 0)?;
            if row.len() != p_axis.len() + 1 {
                return Err(Error::Parse(format!(
                    "grid row has {} values, expected {}",
                    row.len(),
                    p_axis.len() + 1
                )));
            }
            q_axis.push(row[0]);
            rows.push(row[1..].to_vec());
        }
        let values = DMatrix::from_fn(q_axis.len(), p_axis.len(), |i, j| rows[i][j]);
        let grid = Self {
            q_axis,
            p_axis,
            values,
            mode_slice: None,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn to_file(&self) -> PhaseSpaceGridFile {
        PhaseSpaceGridFile {
            q_axis: self.q_axis.clone(),
            p_axis: self.p_axis.clone(),
            values: self.values.row_iter().map(|r| r.iter().copied().collect()).collect(),
            mode_slice: self.mode_slice,
            integral: self.integral(),
            min: self.min(),
            max: self.max(),
        }
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(file)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        Self::read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.to_file())?)?;
        Ok(())
    }
}

/// Parses comma-separated numbers, skipping the first `skip` fields.
pub(crate) fn parse_row(line: &str, skip: usize) -> Result<Vec<f64>> {
    line.split(',')
        .skip(skip)
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("`{}`: {e}", s.trim())))
        })
        .collect()
}

/// JSON form of a grid, with summary metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGridFile {
    pub q_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    /// Row-major, one row per `q`.
    pub values: Vec<Vec<f64>>,
    pub mode_slice: Option<ModeSlice>,
    pub integral: f64,
    pub min: f64,
    pub max: f64,
}
