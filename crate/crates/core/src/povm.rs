//! Weighted measurement elements: rotated-quadrature projectors (homodyne)
//! and coherent-state projectors (heterodyne), sampled on phase-space grids.
//!
//! Every element is `weight · |v⟩⟨v|` for a product vector `v` of truncated
//! single-mode vectors, so elements are stored through `v` and the matrix is
//! formed on demand.

use std::f64::consts::PI;
use std::path::Path;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{coherent_vector, hermite_wavefunctions, TruncationConfig};
use crate::linalg;
use crate::{CMatrix, CVector, C64};

/// Phase-space extent of the quadrature axis.
pub const Q_MAX: f64 = 5.0;
/// Upper end of the real coherent-amplitude axis.
pub const Z_MAX: f64 = 2.0;

const ON_GRID_TOL: f64 = 1e-9;

/// One homodyne setting `(q, θ)` with `θ ∈ [0, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraturePoint {
    pub q: f64,
    pub theta: f64,
}

impl QuadraturePoint {
    /// Reduces `θ` into `[0, π)`. Since `|q_{θ+π}⟩ = |−q_θ⟩`, every odd
    /// multiple of π removed from the angle flips the sign of `q`.
    pub fn new(q: f64, theta: f64) -> Self {
        let turns = (theta / PI).floor();
        let mut reduced = theta - turns * PI;
        let mut q = q;
        if reduced >= PI - 1e-12 {
            reduced = 0.0;
            q = -q;
        }
        if (turns as i64).rem_euclid(2) == 1 {
            q = -q;
        }
        Self { q, theta: reduced }
    }
}

/// One heterodyne setting `z = (q + ip)/√2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentPoint {
    pub re: f64,
    pub im: f64,
}

impl CoherentPoint {
    pub fn z(&self) -> C64 {
        C64::new(self.re, self.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coords {
    Quadrature(Vec<QuadraturePoint>),
    Coherent(Vec<CoherentPoint>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Quadrature,
    Coherent,
}

/// `weight · |v⟩⟨v|`, one sampled measurement operator.
#[derive(Debug, Clone, PartialEq)]
pub struct PovmElement {
    pub id: String,
    pub coords: Coords,
    pub weight: f64,
    /// Per-mode position on the generating grid, when known.
    pub grid_index: Option<Vec<usize>>,
    vector: CVector,
}

impl PovmElement {
    pub fn new(id: String, coords: Coords, weight: f64, vector: CVector) -> Result<Self> {
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::Domain(format!("element weight {weight} must be positive")));
        }
        Ok(Self {
            id,
            coords,
            weight,
            grid_index: None,
            vector,
        })
    }

    pub fn kind(&self) -> GridKind {
        match self.coords {
            Coords::Quadrature(_) => GridKind::Quadrature,
            Coords::Coherent(_) => GridKind::Coherent,
        }
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    /// Unweighted product vector `v`.
    pub fn vector(&self) -> &CVector {
        &self.vector
    }

    /// Unweighted projector `|v⟩⟨v|`.
    pub fn matrix(&self) -> CMatrix {
        linalg::outer(&self.vector)
    }

    pub fn weighted_matrix(&self) -> CMatrix {
        self.matrix() * C64::new(self.weight, 0.0)
    }

    /// `weight · Re ⟨v|A|v⟩`
    pub fn expectation_raw(&self, a: &CMatrix) -> f64 {
        self.weight * linalg::quad_form(a, &self.vector).re
    }

    /// Returns a copy with weight scaled by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.weight *= c;
        out
    }
}

/// Truncated eigenvector of `q̂_θ`: component `n` is `ψ_n(q) e^{inθ}`, i.e.
/// `|q_θ⟩ = e^{iθn̂}|q⟩`.
pub fn quadrature_vector(point: &QuadraturePoint, trunc: &TruncationConfig) -> CVector {
    let d = trunc.dim();
    let psi = hermite_wavefunctions(trunc.cutoff_n, point.q);
    CVector::from_fn(d, |n, _| C64::from_polar(psi[n], point.theta * n as f64))
}

/// A rectangular sampling grid shared by all modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingGrid {
    pub kind: GridKind,
    pub modes: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub q_axis: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub theta_axis: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub z_axis: Vec<f64>,
    /// Effective width along Im z assigned to each coherent sample.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_cell_im: Option<f64>,
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
        .collect()
}

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::Config(format!("{name} axis is empty")));
    }
    if axis.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config(format!("{name} axis has non-finite values")));
    }
    if axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!("{name} axis must be strictly increasing")));
    }
    Ok(())
}

fn spacing(axis: &[f64], fallback: f64) -> f64 {
    if axis.len() >= 2 {
        axis[1] - axis[0]
    } else {
        fallback
    }
}

impl SamplingGrid {
    /// `q_count` values uniform on `[−5, 5]`, `theta_count` angles `kπ/theta_count`.
    pub fn quadrature(q_count: usize, theta_count: usize, modes: usize) -> Result<Self> {
        if theta_count == 0 {
            return Err(Error::Config("theta axis is empty".into()));
        }
        let theta: Vec<f64> = (0..theta_count)
            .map(|k| PI * k as f64 / theta_count as f64)
            .collect();
        Self::quadrature_with_axes(linspace(-Q_MAX, Q_MAX, q_count), theta, modes)
    }

    pub fn quadrature_with_axes(q_axis: Vec<f64>, theta_axis: Vec<f64>, modes: usize) -> Result<Self> {
        let grid = Self {
            kind: GridKind::Quadrature,
            modes,
            q_axis,
            theta_axis,
            z_axis: Vec::new(),
            z_cell_im: None,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// `z_count` real amplitudes uniform on `[0, 2]`.
    pub fn coherent(z_count: usize, modes: usize) -> Result<Self> {
        Self::coherent_with_axis(linspace(0.0, Z_MAX, z_count), None, modes)
    }

    pub fn coherent_with_axis(z_axis: Vec<f64>, z_cell_im: Option<f64>, modes: usize) -> Result<Self> {
        let grid = Self {
            kind: GridKind::Coherent,
            modes,
            q_axis: Vec::new(),
            theta_axis: Vec::new(),
            z_axis,
            z_cell_im,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Single-mode grid of 7 quadrature values on `[−5, 5]` and the five
    /// angles `0, π/4, …, π`: 35 projectors.
    pub fn fock_demo() -> Self {
        let theta: Vec<f64> = (0..5).map(|k| PI * k as f64 / 4.0).collect();
        Self::quadrature_with_axes(linspace(-Q_MAX, Q_MAX, 7), theta, 1).expect("static grid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes == 0 {
            return Err(Error::Config("grid needs at least one mode".into()));
        }
        match self.kind {
            GridKind::Quadrature => {
                check_axis("q", &self.q_axis)?;
                check_axis("theta", &self.theta_axis)?;
                if self.theta_axis[0] < 0.0 || *self.theta_axis.last().unwrap() > PI + 1e-12 {
                    return Err(Error::Config("theta axis must lie in [0, π]".into()));
                }
            }
            GridKind::Coherent => {
                check_axis("z", &self.z_axis)?;
                if let Some(w) = self.z_cell_im {
                    if !(w > 0.0) {
                        return Err(Error::Config("z_cell_im must be positive".into()));
                    }
                }
            }
        }
        if self.checked_cardinality().is_none() {
            return Err(Error::Config("grid cardinality overflows".into()));
        }
        Ok(())
    }

    pub fn q_step(&self) -> f64 {
        spacing(&self.q_axis, 1.0)
    }

    pub fn theta_step(&self) -> f64 {
        spacing(&self.theta_axis, PI)
    }

    pub fn z_step(&self) -> f64 {
        spacing(&self.z_axis, 1.0)
    }

    /// Phase-space cell `Δ²z` of one coherent sample.
    pub fn z_cell_area(&self) -> f64 {
        self.z_step() * self.z_cell_im.unwrap_or_else(|| self.z_step())
    }

    /// Weight of one single-mode sample: `(1/π)ΔqΔθ` or `(1/π)Δ²z`.
    pub fn mode_weight(&self) -> f64 {
        match self.kind {
            GridKind::Quadrature => self.q_step() * self.theta_step() / PI,
            GridKind::Coherent => self.z_cell_area() / PI,
        }
    }

    pub fn element_weight(&self) -> f64 {
        self.mode_weight().powi(self.modes as i32)
    }

    /// Samples per mode.
    pub fn mode_count(&self) -> usize {
        match self.kind {
            GridKind::Quadrature => self.q_axis.len() * self.theta_axis.len(),
            GridKind::Coherent => self.z_axis.len(),
        }
    }

    fn checked_cardinality(&self) -> Option<usize> {
        let mut total: usize = 1;
        for _ in 0..self.modes {
            total = total.checked_mul(self.mode_count())?;
        }
        Some(total)
    }

    /// Number of product elements.
    pub fn cardinality(&self) -> usize {
        self.checked_cardinality().expect("validated grid")
    }

    /// Per-mode sample indices of product element `index`, mode 1 slowest.
    pub fn mode_indices(&self, mut index: usize) -> Vec<usize> {
        let c = self.mode_count();
        let mut out = vec![0; self.modes];
        for slot in out.iter_mut().rev() {
            *slot = index % c;
            index /= c;
        }
        out
    }

    pub fn quadrature_point(&self, mode_index: usize) -> QuadraturePoint {
        let nt = self.theta_axis.len();
        QuadraturePoint::new(self.q_axis[mode_index / nt], self.theta_axis[mode_index % nt])
    }

    pub fn coherent_point(&self, mode_index: usize) -> CoherentPoint {
        CoherentPoint {
            re: self.z_axis[mode_index],
            im: 0.0,
        }
    }

    fn mode_label(&self, mode_index: usize) -> String {
        match self.kind {
            GridKind::Quadrature => {
                let nt = self.theta_axis.len();
                format!("q{}t{}", mode_index / nt, mode_index % nt)
            }
            GridKind::Coherent => format!("z{mode_index}"),
        }
    }

    /// Truncated single-mode vectors for every per-mode sample.
    pub fn mode_vectors(&self, trunc: &TruncationConfig) -> Vec<CVector> {
        (0..self.mode_count())
            .map(|k| match self.kind {
                GridKind::Quadrature => quadrature_vector(&self.quadrature_point(k), trunc),
                GridKind::Coherent => coherent_vector(self.coherent_point(k).z(), trunc.dim()),
            })
            .collect()
    }

    fn check_trunc(&self, trunc: &TruncationConfig) -> Result<()> {
        if trunc.modes != self.modes {
            return Err(Error::DimensionMismatch {
                expected: self.modes,
                got: trunc.modes,
            });
        }
        Ok(())
    }

    /// Product element `index` built from precomputed mode vectors.
    pub fn element_with(&self, index: usize, mode_vectors: &[CVector]) -> Result<PovmElement> {
        if index >= self.cardinality() {
            return Err(Error::Domain(format!("element index {index} outside grid")));
        }
        let idx = self.mode_indices(index);
        let parts: Vec<CVector> = idx.iter().map(|&k| mode_vectors[k].clone()).collect();
        let coords = match self.kind {
            GridKind::Quadrature => Coords::Quadrature(idx.iter().map(|&k| self.quadrature_point(k)).collect()),
            GridKind::Coherent => Coords::Coherent(idx.iter().map(|&k| self.coherent_point(k)).collect()),
        };
        let id = idx.iter().map(|&k| self.mode_label(k)).collect::<Vec<_>>().join("_");
        let mut e = PovmElement::new(id, coords, self.element_weight(), linalg::kron_vectors(&parts))?;
        e.grid_index = Some(idx);
        Ok(e)
    }

    pub fn element(&self, index: usize, trunc: &TruncationConfig) -> Result<PovmElement> {
        self.check_trunc(trunc)?;
        self.element_with(index, &self.mode_vectors(trunc))
    }

    /// Elements at the given product indices.
    pub fn elements_at(&self, indices: &[usize], trunc: &TruncationConfig) -> Result<Vec<PovmElement>> {
        self.check_trunc(trunc)?;
        let cache = self.mode_vectors(trunc);
        indices.iter().map(|&i| self.element_with(i, &cache)).collect()
    }

    /// The full product grid.
    pub fn elements(&self, trunc: &TruncationConfig) -> Result<Vec<PovmElement>> {
        let all: Vec<usize> = (0..self.cardinality()).collect();
        self.elements_at(&all, trunc)
    }

    fn axis_position(axis: &[f64], value: f64) -> Option<usize> {
        axis.iter().position(|&a| (a - value).abs() <= ON_GRID_TOL)
    }
}

/// `⊗ |q_θ⟩⟨q_θ|` weighted by `∏ (1/π)ΔqΔθ`.
pub fn quadrature_element(
    points: &[QuadraturePoint],
    grid: &SamplingGrid,
    trunc: &TruncationConfig,
) -> Result<PovmElement> {
    if grid.kind != GridKind::Quadrature {
        return Err(Error::Domain("grid is not a quadrature grid".into()));
    }
    if points.len() != grid.modes || trunc.modes != grid.modes {
        return Err(Error::DimensionMismatch {
            expected: grid.modes,
            got: points.len(),
        });
    }
    let nt = grid.theta_axis.len();
    let mut idx = Vec::with_capacity(points.len());
    for p in points {
        let iq = SamplingGrid::axis_position(&grid.q_axis, p.q);
        let it = SamplingGrid::axis_position(&grid.theta_axis, p.theta);
        match (iq, it) {
            (Some(iq), Some(it)) => idx.push(iq * nt + it),
            _ => {
                return Err(Error::Domain(format!(
                    "point (q={}, θ={}) is not on the grid",
                    p.q, p.theta
                )))
            }
        }
    }
    let parts: Vec<CVector> = points.iter().map(|p| quadrature_vector(p, trunc)).collect();
    let id = idx
        .iter()
        .map(|&k| format!("q{}t{}", k / nt, k % nt))
        .collect::<Vec<_>>()
        .join("_");
    let mut e = PovmElement::new(
        id,
        Coords::Quadrature(points.to_vec()),
        grid.element_weight(),
        linalg::kron_vectors(&parts),
    )?;
    e.grid_index = Some(idx);
    Ok(e)
}

/// `⊗ |z⟩⟨z|` weighted by `∏ (1/π)Δ²z`.
pub fn coherent_element(
    points: &[CoherentPoint],
    grid: &SamplingGrid,
    trunc: &TruncationConfig,
) -> Result<PovmElement> {
    if grid.kind != GridKind::Coherent {
        return Err(Error::Domain("grid is not a coherent grid".into()));
    }
    if points.len() != grid.modes || trunc.modes != grid.modes {
        return Err(Error::DimensionMismatch {
            expected: grid.modes,
            got: points.len(),
        });
    }
    if points.iter().any(|p| !(p.re.is_finite() && p.im.is_finite())) {
        return Err(Error::Domain("coherent amplitude must be finite".into()));
    }
    let parts: Vec<CVector> = points
        .iter()
        .map(|p| coherent_vector(p.z(), trunc.dim()))
        .collect();
    let idx: Option<Vec<usize>> = points
        .iter()
        .map(|p| {
            if p.im.abs() <= ON_GRID_TOL {
                SamplingGrid::axis_position(&grid.z_axis, p.re)
            } else {
                None
            }
        })
        .collect();
    let id = points
        .iter()
        .map(|p| format!("z{:+.6}{:+.6}i", p.re, p.im))
        .collect::<Vec<_>>()
        .join("_");
    let mut e = PovmElement::new(
        id,
        Coords::Coherent(points.to_vec()),
        grid.element_weight(),
        linalg::kron_vectors(&parts),
    )?;
    e.grid_index = idx;
    Ok(e)
}

/// Deviation of a weighted element set from the identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompletenessReport {
    /// `‖I − Σ w E‖₂`
    pub residual: f64,
    /// Smallest eigenvalue of `I − Σ w E`.
    pub min_gap_eigenvalue: f64,
}

impl CompletenessReport {
    /// `Σ w E ⪯ (1 + 0.05) I`
    pub fn is_subnormalized(&self) -> bool {
        self.min_gap_eigenvalue >= -0.05
    }
}

/// `Σ_i w_i |v_i⟩⟨v_i|`
pub fn weighted_sum(elements: &[PovmElement], dim: usize) -> Result<CMatrix> {
    let mut v = CMatrix::zeros(dim, elements.len());
    for (j, e) in elements.iter().enumerate() {
        if e.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: e.dim(),
            });
        }
        let s = e.weight.sqrt();
        for i in 0..dim {
            v[(i, j)] = e.vector()[i] * s;
        }
    }
    Ok(linalg::matmul_by_adj(&v, &v))
}

pub fn completeness_report(elements: &[PovmElement], trunc: &TruncationConfig) -> Result<CompletenessReport> {
    if elements.is_empty() {
        return Err(Error::Degenerate("no elements".into()));
    }
    let d = trunc.total_dim();
    let gap = CMatrix::identity(d, d) - weighted_sum(elements, d)?;
    let evs = linalg::eigvalsh(&gap);
    Ok(CompletenessReport {
        residual: evs.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        min_gap_eigenvalue: evs[0],
    })
}

/// `‖I − Σ w E‖₂`
pub fn completeness_residual(elements: &[PovmElement], trunc: &TruncationConfig) -> Result<f64> {
    Ok(completeness_report(elements, trunc)?.residual)
}

/// `size` distinct product indices drawn uniformly, sorted ascending.
pub fn sample_indices(cardinality: usize, size: usize, seed: u64) -> Result<Vec<usize>> {
    if size == 0 {
        return Err(Error::Config("subset size must be positive".into()));
    }
    if size > cardinality {
        return Err(Error::Config(format!(
            "subset size {size} exceeds grid cardinality {cardinality}"
        )));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, cardinality, size).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixParts {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PovmElementRecord {
    pub id: String,
    pub kind: GridKind,
    pub coords: Coords,
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_index: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixParts>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PovmHeader {
    pub grid: SamplingGrid,
    pub trunc: TruncationConfig,
    pub materialized: bool,
    pub count: usize,
}

/// POVM set file: a header plus the element list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PovmSetFile {
    pub header: PovmHeader,
    pub elements: Vec<PovmElementRecord>,
}

impl PovmSetFile {
    pub fn from_elements(
        grid: &SamplingGrid,
        trunc: &TruncationConfig,
        elements: &[PovmElement],
        materialize: bool,
    ) -> Self {
        let records = elements
            .iter()
            .map(|e| PovmElementRecord {
                id: e.id.clone(),
                kind: e.kind(),
                coords: e.coords.clone(),
                weight: e.weight,
                grid_index: e.grid_index.clone(),
                matrix: materialize.then(|| {
                    let m = e.matrix();
                    let n = m.nrows();
                    MatrixParts {
                        re: (0..n * n).map(|k| m[(k / n, k % n)].re).collect(),
                        im: (0..n * n).map(|k| m[(k / n, k % n)].im).collect(),
                    }
                }),
            })
            .collect();
        Self {
            header: PovmHeader {
                grid: grid.clone(),
                trunc: *trunc,
                materialized: materialize,
                count: elements.len(),
            },
            elements: records,
        }
    }

    /// Regenerates every element from its coordinates; stored matrices are
    /// checked against the regenerated projector.
    pub fn into_elements(self) -> Result<Vec<PovmElement>> {
        let trunc = self.header.trunc;
        let mut out = Vec::with_capacity(self.elements.len());
        for rec in self.elements {
            let vector = match (&rec.kind, &rec.coords) {
                (GridKind::Quadrature, Coords::Quadrature(pts)) => {
                    let parts: Vec<CVector> = pts.iter().map(|p| quadrature_vector(p, &trunc)).collect();
                    linalg::kron_vectors(&parts)
                }
                (GridKind::Coherent, Coords::Coherent(pts)) => {
                    let parts: Vec<CVector> = pts.iter().map(|p| coherent_vector(p.z(), trunc.dim())).collect();
                    linalg::kron_vectors(&parts)
                }
                _ => return Err(Error::Parse(format!("element {}: kind and coords disagree", rec.id))),
            };
            if vector.len() != trunc.total_dim() {
                return Err(Error::Parse(format!("element {}: wrong number of modes", rec.id)));
            }
            let mut e = PovmElement::new(rec.id.clone(), rec.coords, rec.weight, vector)?;
            e.grid_index = rec.grid_index;
            if let Some(parts) = rec.matrix {
                let m = e.matrix();
                let n = m.nrows();
                if parts.re.len() != n * n || parts.im.len() != n * n {
                    return Err(Error::Parse(format!("element {}: matrix has wrong size", rec.id)));
                }
                let err = (0..n * n).fold(0.0f64, |acc, k| {
                    let z = m[(k / n, k % n)];
                    acc.max((z.re - parts.re[k]).abs()).max((z.im - parts.im[k]).abs())
                });
                if err > 1e-9 {
                    return Err(Error::Parse(format!(
                        "element {}: stored matrix disagrees with its coordinates ({err:.2e})",
                        rec.id
                    )));
                }
            }
            out.push(e);
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{hermite_wavefunction, phase_rotation};
    use approx::assert_abs_diff_eq;

    #[test]
    fn quadrature_vector_at_origin() {
        let t = TruncationConfig::single_mode(10);
        let v = quadrature_vector(&QuadraturePoint::new(0.0, 0.0), &t);
        assert_abs_diff_eq!(v[0].re, 0.751_125_5, epsilon = 1e-7);
        assert_abs_diff_eq!(v[2].re, -0.531_125_9, epsilon = 1e-7);
        for n in (1..11).step_by(2) {
            assert_eq!(v[n].norm(), 0.0);
        }
        assert!(v.iter().all(|z| z.im == 0.0));
        let expected: f64 = (0..=10).step_by(2).map(|n| hermite_wavefunction(n, 0.0).unwrap().powi(2)).sum();
        assert_abs_diff_eq!(v.norm_squared(), expected, epsilon = 1e-14);
    }

    #[test]
    fn angle_pi_equals_negated_quadrature() {
        let t = TruncationConfig::single_mode(10);
        for &q in &[0.3, -1.7, 4.0] {
            let raw = CVector::from_fn(11, |n, _| {
                C64::from_polar(hermite_wavefunction(n, q).unwrap(), PI * n as f64)
            });
            let flipped = quadrature_vector(&QuadraturePoint::new(-q, 0.0), &t);
            assert!((raw - &flipped).norm() < 1e-12);
            let reduced = QuadraturePoint::new(q, PI);
            assert_eq!(reduced.theta, 0.0);
            assert!((quadrature_vector(&reduced, &t) - flipped).norm() < 1e-15);
        }
        let p = QuadraturePoint::new(1.0, 3.0 * PI + 0.25);
        assert_abs_diff_eq!(p.theta, 0.25, epsilon = 1e-12);
        assert_eq!(p.q, -1.0);
    }

    #[test]
    fn phase_covariance() {
        let t = TruncationConfig::single_mode(10);
        let grid = SamplingGrid::quadrature(11, 8, 1).unwrap();
        for k in 0..grid.cardinality() {
            let e = grid.element(k, &t).unwrap();
            let Coords::Quadrature(ref pts) = e.coords else { unreachable!() };
            let base = quadrature_vector(&QuadraturePoint::new(pts[0].q, 0.0), &t);
            let r = phase_rotation(pts[0].theta, 11);
            let rotated = &r * crate::linalg::outer(&base) * r.adjoint();
            assert!((rotated - e.matrix()).camax() <= 1e-10);
        }
    }

    #[test]
    fn born_rule_marginal_is_angle_independent() {
        let t = TruncationConfig::single_mode(10);
        let grid = SamplingGrid::quadrature(9, 6, 1).unwrap();
        for k in 0..grid.cardinality() {
            let e = grid.element(k, &t).unwrap();
            let Coords::Quadrature(ref pts) = e.coords else { unreachable!() };
            for n in 0..=10 {
                let proj = crate::fock::fock_projector(n, 11);
                let val = e.expectation_raw(&proj) / e.weight;
                let expect = hermite_wavefunction(n, pts[0].q).unwrap().powi(2);
                assert!((val - expect).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn elements_are_rank_one_psd() {
        let t = TruncationConfig::two_mode(3);
        let grid = SamplingGrid::quadrature(5, 3, 2).unwrap();
        for e in grid.elements(&t).unwrap().iter().step_by(17) {
            let m = e.weighted_matrix();
            assert!(crate::linalg::hermiticity_error(&m) <= 1e-12);
            let evs = crate::linalg::eigvalsh(&m);
            assert!(evs[0] >= -1e-12);
            let top = evs[evs.len() - 1];
            assert!(top > 0.0);
            assert_eq!(evs.iter().filter(|&&v| v > 1e-9 * top).count(), 1);
            assert!(crate::linalg::trace(&m).re > 0.0);
        }
    }

    #[test]
    fn dense_quadrature_grid_resolves_identity() {
        let t = TruncationConfig::single_mode(10);
        let grid = SamplingGrid::quadrature(101, 64, 1).unwrap();
        assert_abs_diff_eq!(grid.q_step(), 0.1, epsilon = 1e-12);
        let elements = grid.elements(&t).unwrap();
        let residual = completeness_residual(&elements, &t).unwrap();
        assert!(residual <= 0.05, "residual {residual}");
    }

    #[test]
    fn refinement_does_not_increase_residual() {
        let t = TruncationConfig::single_mode(10);
        let mut last = f64::INFINITY;
        for (nq, nt) in [(6, 4), (11, 8), (21, 16)] {
            let grid = SamplingGrid::quadrature(nq, nt, 1).unwrap();
            let r = completeness_residual(&grid.elements(&t).unwrap(), &t).unwrap();
            assert!(r <= last + 1e-12, "{r} > {last}");
            last = r;
        }
        // Past Δq = 0.5 the sum converges to the integral over [−5, 5], whose
        // deficit is the weight of ψ_10 outside the window (about 8.3e-3).
        let grid = SamplingGrid::quadrature(401, 16, 1).unwrap();
        let r = completeness_residual(&grid.elements(&t).unwrap(), &t).unwrap();
        assert!(r > last && r < 8.3e-3, "{r}");
    }

    #[test]
    fn fock_demo_grid_has_35_projectors() {
        let grid = SamplingGrid::fock_demo();
        assert_eq!(grid.cardinality(), 35);
        let t = TruncationConfig::single_mode(10);
        let elements = grid.elements(&t).unwrap();
        assert_eq!(elements.len(), 35);
        let report = completeness_report(&elements, &t).unwrap();
        assert!(report.residual > 0.2);
        // θ = 0 and θ = π give the same projectors and Δq = 5/3 is coarse, so
        // the weighted sum overshoots the identity (largest eigenvalue ≈ 2.57).
        assert!(!report.is_subnormalized());
        assert_abs_diff_eq!(report.min_gap_eigenvalue, -1.5718, epsilon = 1e-3);
    }

    #[test]
    fn coherent_elements() {
        let t = TruncationConfig::two_mode(10);
        let grid = SamplingGrid::coherent(21, 2).unwrap();
        let vac = coherent_element(&[CoherentPoint { re: 0.0, im: 0.0 }; 2], &grid, &t).unwrap();
        let m = vac.matrix();
        assert_abs_diff_eq!(m[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(crate::linalg::trace(&m).re, 1.0, epsilon = 1e-15);

        let t1 = TruncationConfig::single_mode(10);
        let g1 = SamplingGrid::coherent(21, 1).unwrap();
        let e = coherent_element(&[CoherentPoint { re: 1.0, im: 0.0 }], &g1, &t1).unwrap();
        assert_abs_diff_eq!(e.matrix()[(1, 1)].re, 0.367_88, epsilon = 1e-5);
        for k in 0..g1.cardinality() {
            let e = g1.element(k, &t1).unwrap();
            let z = e.vector()[0].norm_sqr().ln().abs().sqrt();
            let norm = crate::linalg::trace(&e.matrix()).re;
            assert!(norm >= 1.0 - 2.9e-3);
            if z <= 0.95 {
                assert!(norm >= 1.0 - 1e-8);
            }
        }
        assert_abs_diff_eq!(g1.mode_weight(), 0.01 / PI, epsilon = 1e-15);
    }

    #[test]
    fn off_grid_points_are_rejected() {
        let t = TruncationConfig::single_mode(10);
        let grid = SamplingGrid::quadrature(11, 4, 1).unwrap();
        let ok = quadrature_element(&[QuadraturePoint::new(1.0, PI / 4.0)], &grid, &t).unwrap();
        assert_abs_diff_eq!(ok.weight, 1.0 * (PI / 4.0) / PI, epsilon = 1e-12);
        let err = quadrature_element(&[QuadraturePoint::new(0.5, 0.0)], &grid, &t);
        assert!(matches!(err, Err(Error::Domain(_))));
        assert_eq!(ok, grid.element(6 * 4 + 1, &t).unwrap());
    }

    #[test]
    fn product_index_layout() {
        let grid = SamplingGrid::quadrature(3, 2, 2).unwrap();
        assert_eq!(grid.cardinality(), 36);
        assert_eq!(grid.mode_indices(7), vec![1, 1]);
        let t = TruncationConfig::two_mode(2);
        let e = grid.element(7, &t).unwrap();
        assert_eq!(e.id, "q0t1_q0t1");
    }

    #[test]
    fn povm_file_round_trip() {
        let t = TruncationConfig::single_mode(4);
        let grid = SamplingGrid::quadrature(5, 3, 1).unwrap();
        let elements = grid.elements(&t).unwrap();
        for materialize in [false, true] {
            let file = PovmSetFile::from_elements(&grid, &t, &elements, materialize);
            let text = serde_json::to_string(&file).unwrap();
            let back: PovmSetFile = serde_json::from_str(&text).unwrap();
            let rebuilt = back.into_elements().unwrap();
            assert_eq!(rebuilt.len(), elements.len());
            for (a, b) in rebuilt.iter().zip(&elements) {
                assert_eq!(a.id, b.id);
                assert!((a.vector() - b.vector()).norm() < 1e-15);
            }
        }
        let mut tampered = PovmSetFile::from_elements(&grid, &t, &elements, true);
        tampered.elements[0].matrix.as_mut().unwrap().re[0] += 0.1;
        assert!(tampered.into_elements().is_err());
    }

    #[test]
    fn subsets_are_distinct_and_seeded() {
        let a = sample_indices(1000, 50, 9).unwrap();
        let b = sample_indices(1000, 50, 9).unwrap();
        assert_eq!(a, b);
        let mut dedup = a.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), 50);
        assert_ne!(a, sample_indices(1000, 50, 10).unwrap());
        assert!(sample_indices(10, 0, 1).is_err());
        assert!(sample_indices(10, 11, 1).is_err());
    }
}
