//! Inverse-Radon (filtered back-projection) baseline.
//!
//! Quadrature densities `pr(x, θ)` are back-projected through the
//! band-limited ramp kernel
//!
//! ```text
//! K(x) = (1/2)∫_{−k_c}^{k_c} |ξ| e^{iξx} dξ = (cos k_c x − 1)/x² + k_c sin(k_c x)/x
//! W(q, p) = (1/2π²) ∫₀^π dθ ∫ dx pr(x, θ) K(q cos θ + p sin θ − x)
//! ```
//!
//! and the density matrix is read off by overlap with the basis kernels,
//! `ρ_{mn} = 2π ∫ W · W_{|n⟩⟨m|}`. Nothing here enforces positivity: a sparse
//! sinogram produces a non-physical ρ, and that is reported as is.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::TruncationConfig;
use crate::linalg;
use crate::measure::MeasurementRecord;
use crate::povm::{quadrature_vector, GridKind, PovmElement, QuadraturePoint, SamplingGrid};
use crate::state::DensityMatrix;
use crate::wigner::{axis_step, kernel_table, parse_row, PhaseSpaceGrid};
use crate::{CMatrix, C64};

/// Largest grid spacing [`density_from_wigner`] accepts.
pub const MAX_OVERLAP_SPACING: f64 = 0.2;
/// Half-width of the phase-space window the overlap must cover.
pub const OVERLAP_EXTENT: f64 = 5.0;

/// Below this `|k_c x|` the kernel switches to its Taylor series.
const SERIES_RADIUS: f64 = 0.05;

/// Quadrature densities `pr(q, θ)`: rows follow `q_axis`, columns `theta_axis`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    pub q_axis: Vec<f64>,
    pub theta_axis: Vec<f64>,
    pub values: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    /// Frequency cutoff `k_c` of the ramp filter.
    pub cutoff_kc: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self { cutoff_kc: 4.0 }
    }
}

impl KernelConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.cutoff_kc.is_finite() || self.cutoff_kc <= 0.0 {
            return Err(Error::Config(format!("cutoff_kc = {} must be positive", self.cutoff_kc)));
        }
        Ok(())
    }
}

/// `⟨q_θ|ρ|q_θ⟩` on `q_axis × theta_axis`.
pub fn sinogram(rho: &DensityMatrix, q_axis: &[f64], theta_axis: &[f64]) -> Result<Sinogram> {
    if rho.trunc.modes != 1 {
        return Err(Error::Unsupported(
            "the inverse-Radon baseline is single-mode only".into(),
        ));
    }
    if q_axis.is_empty() || theta_axis.is_empty() {
        return Err(Error::Config("sinogram axes must be non-empty".into()));
    }
    let mut values = DMatrix::zeros(q_axis.len(), theta_axis.len());
    for (j, &theta) in theta_axis.iter().enumerate() {
        for (i, &q) in q_axis.iter().enumerate() {
            // Not reduced into [0, π): the axis value is used as given.
            let v = quadrature_vector(&QuadraturePoint { q, theta }, &rho.trunc);
            values[(i, j)] = linalg::quad_form(&rho.entries, &v).re;
        }
    }
    Ok(Sinogram {
        q_axis: q_axis.to_vec(),
        theta_axis: theta_axis.to_vec(),
        values,
    })
}

/// Sinogram of a fully measured single-mode quadrature grid, with each
/// density recovered as `f_i / w_i`.
pub fn sinogram_from_records(
    grid: &SamplingGrid,
    elements: &[PovmElement],
    records: &[MeasurementRecord],
) -> Result<Sinogram> {
    if grid.kind != GridKind::Quadrature || grid.modes != 1 {
        return Err(Error::Unsupported(
            "the inverse-Radon baseline needs a single-mode quadrature grid".into(),
        ));
    }
    let nt = grid.theta_axis.len();
    let by_id: HashMap<&str, &PovmElement> = elements.iter().map(|e| (e.id.as_str(), e)).collect();
    let mut values = DMatrix::from_element(grid.q_axis.len(), nt, f64::NAN);
    for r in records {
        let e = by_id
            .get(r.element_id.as_str())
            .ok_or_else(|| Error::Parse(format!("record refers to unknown element {}", r.element_id)))?;
        let k = match e.grid_index.as_deref() {
            Some([k]) if *k < grid.mode_count() => *k,
            _ => return Err(Error::Parse(format!("element {} has no grid position", e.id))),
        };
        values[(k / nt, k % nt)] = r.frequency / e.weight;
    }
    let missing = values.iter().filter(|v| v.is_nan()).count();
    if missing > 0 {
        return Err(Error::Config(format!(
            "the inverse-Radon baseline needs every grid cell; {missing} of {} are unmeasured",
            values.len()
        )));
    }
    Ok(Sinogram {
        q_axis: grid.q_axis.clone(),
        theta_axis: grid.theta_axis.clone(),
        values,
    })
}

/// The regularized ramp kernel, continuous through `x = 0`.
pub fn irt_kernel(x: f64, cfg: &KernelConfig) -> f64 {
    let k = cfg.cutoff_kc;
    let kx = k * x;
    if kx.abs() < SERIES_RADIUS {
        // ∫₀^k ξ cos(ξx) dξ expanded in (kx)².
        let t = kx * kx;
        return k * k * (0.5 - t / 8.0 + t * t / 144.0 - t * t * t / 5760.0);
    }
    (kx.cos() - 1.0) / (x * x) + k * kx.sin() / x
}

/// Trapezoid weights on `axis`. With `periodic`, an axis that stops one step
/// short of `period` gets uniform weights, which is the trapezoid rule for a
/// periodic integrand.
fn trapezoid(axis: &[f64], periodic: Option<f64>) -> Result<Vec<f64>> {
    let n = axis.len();
    if n < 2 {
        return Err(Error::Config("sinogram axes need at least two points".into()));
    }
    let step = axis_step("sinogram", axis)?;
    let mut w = vec![step; n];
    let wraps = periodic
        .map(|period| ((axis[n - 1] + step - axis[0]) - period).abs() < 1e-6 * period)
        .unwrap_or(false);
    if !wraps {
        w[0] *= 0.5;
        w[n - 1] *= 0.5;
    }
    Ok(w)
}

/// Filtered back-projection of `sino` onto `q_out × p_out`.
pub fn inverse_radon(
    sino: &Sinogram,
    cfg: &KernelConfig,
    q_out: &[f64],
    p_out: &[f64],
) -> Result<PhaseSpaceGrid> {
    cfg.validate()?;
    sino.validate()?;
    axis_step("q", q_out)?;
    axis_step("p", p_out)?;
    let wq = trapezoid(&sino.q_axis, None)?;
    let wt = trapezoid(&sino.theta_axis, Some(PI))?;
    let angles: Vec<(f64, f64, f64)> = sino
        .theta_axis
        .iter()
        .zip(&wt)
        .map(|(&t, &w)| (t.cos(), t.sin(), w))
        .collect();
    let norm = 1.0 / (2.0 * PI * PI);
    let rows: Vec<Vec<f64>> = q_out
        .par_iter()
        .map(|&q| {
            p_out
                .iter()
                .map(|&p| {
                    let mut acc = 0.0;
                    for (j, &(c, s, w_theta)) in angles.iter().enumerate() {
                        let proj = q * c + p * s;
                        let mut inner = 0.0;
                        for (i, &x) in sino.q_axis.iter().enumerate() {
                            inner += wq[i] * sino.values[(i, j)] * irt_kernel(proj - x, cfg);
                        }
                        acc += w_theta * inner;
                    }
                    norm * acc
                })
                .collect()
        })
        .collect();
    Ok(PhaseSpaceGrid {
        q_axis: q_out.to_vec(),
        p_axis: p_out.to_vec(),
        values: DMatrix::from_fn(q_out.len(), p_out.len(), |i, j| rows[i][j]),
        mode_slice: None,
    })
}

/// `ρ_{mn} = 2π Σ W(q, p) W_{|n⟩⟨m|}(q, p) Δq Δp`, Hermitized but not
/// projected onto the PSD cone.
pub fn density_from_wigner(w: &PhaseSpaceGrid, trunc: &TruncationConfig) -> Result<CMatrix> {
    if trunc.modes != 1 {
        return Err(Error::Unsupported(
            "density extraction from a Wigner grid is single-mode only".into(),
        ));
    }
    w.validate()?;
    let dq = axis_step("q", &w.q_axis)?;
    let dp = axis_step("p", &w.p_axis)?;
    if w.q_axis.len() < 2 || w.p_axis.len() < 2 || dq > MAX_OVERLAP_SPACING || dp > MAX_OVERLAP_SPACING {
        return Err(Error::Accuracy(format!(
            "grid spacing ({dq}, {dp}) is coarser than {MAX_OVERLAP_SPACING}"
        )));
    }
    let covers = |axis: &[f64], step: f64| {
        axis[0] <= -OVERLAP_EXTENT + 1e-9 * step && axis[axis.len() - 1] >= OVERLAP_EXTENT - 1e-9 * step
    };
    if !covers(&w.q_axis, dq) || !covers(&w.p_axis, dp) {
        return Err(Error::Accuracy(format!(
            "grid must cover |q|, |p| <= {OVERLAP_EXTENT}"
        )));
    }
    let d = trunc.dim();
    let partial: Vec<CMatrix> = w
        .q_axis
        .par_iter()
        .enumerate()
        .map(|(i, &q)| {
            let mut acc = CMatrix::zeros(d, d);
            for (j, &p) in w.p_axis.iter().enumerate() {
                let value = w.values[(i, j)];
                if value != 0.0 {
                    // kernel_table is indexed [m, n] = W_{|m⟩⟨n|}; ρ_{mn} needs W_{|n⟩⟨m|}.
                    acc += kernel_table(d, q, p).transpose() * C64::new(value, 0.0);
                }
            }
            acc
        })
        .collect();
    let mut rho = CMatrix::zeros(d, d);
    for m in partial {
        rho += m;
    }
    rho *= C64::new(2.0 * PI * dq * dp, 0.0);
    Ok(linalg::hermitize(&rho))
}

impl Sinogram {
    pub fn validate(&self) -> Result<()> {
        axis_step("q", &self.q_axis)?;
        axis_step("theta", &self.theta_axis)?;
        if self.values.nrows() != self.q_axis.len() || self.values.ncols() != self.theta_axis.len() {
            return Err(Error::DimensionMismatch {
                expected: self.q_axis.len() * self.theta_axis.len(),
                got: self.values.len(),
            });
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("sinogram has non-finite values".into()));
        }
        Ok(())
    }

    /// `Σ_q pr(q, θ) Δq` for each angle.
    pub fn column_mass(&self) -> Vec<f64> {
        let dq = axis_step("q", &self.q_axis).unwrap_or(1.0);
        self.values.column_iter().map(|c| c.sum() * dq).collect()
    }

    /// Linear combination `a·self + b·other` on identical axes.
    pub fn combine(&self, a: f64, other: &Sinogram, b: f64) -> Result<Sinogram> {
        if self.q_axis != other.q_axis || self.theta_axis != other.theta_axis {
            return Err(Error::Config("sinograms are on different axes".into()));
        }
        Ok(Sinogram {
            q_axis: self.q_axis.clone(),
            theta_axis: self.theta_axis.clone(),
            values: &self.values * a + &other.values * b,
        })
    }

    /// CSV: row 1 is `q_axis`, row 2 is `theta_axis`, then one row of
    /// densities per `q`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let join = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        writeln!(out, "q,{}", join(&mut self.q_axis.iter().copied()))?;
        writeln!(out, "theta,{}", join(&mut self.theta_axis.iter().copied()))?;
        for i in 0..self.q_axis.len() {
            writeln!(out, "{}", join(&mut self.values.row(i).iter().copied()))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().filter(|l| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true));
        let mut header = |label: &str| -> Result<Vec<f64>> {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("sinogram file lacks the {label} row")))??;
            if line.split(',').next().map(str::trim) != Some(label) {
                return Err(Error::Parse(format!("expected a `{label}` header row")));
            }
            parse_row(&line, 1)
        };
        let q_axis = header("q")?;
        let theta_axis = header("theta")?;
        let mut rows = Vec::with_capacity(q_axis.len());
        for line in lines {
            let row = parse_row(&line?, 0)?;
            if row.len() != theta_axis.len() {
                return Err(Error::Parse(format!(
                    "sinogram row has {} values, expected {}",
                    row.len(),
                    theta_axis.len()
                )));
            }
            rows.push(row);
        }
        if rows.len() != q_axis.len() {
            return Err(Error::Parse(format!(
                "sinogram has {} rows for {} q values",
                rows.len(),
                q_axis.len()
            )));
        }
        let sino = Sinogram {
            values: DMatrix::from_fn(q_axis.len(), theta_axis.len(), |i, j| rows[i][j]),
            q_axis,
            theta_axis,
        };
        sino.validate()?;
        Ok(sino)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        Self::read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}
