//! Entropy-regularized semidefinite reconstruction.
//!
//! The program solved is
//!
//! ```text
//! minimize    Σ_i Δ_i + δ
//! subject to  |Tr(E_i ρ) − f_i| ≤ Δ_i · max(f_i, ε)
//!             Tr((I − Σ_i E_i) ρ) ≤ δ
//!             Δ_i ≥ 0,  δ ≥ 0,  Tr ρ = 1,  ρ ⪰ 0
//! ```
//!
//! The δ line pushes weight onto the unmeasured part of the space and can be
//! switched off ([`solve_biased`]). Each band row is divided by its radius
//! `max(f_i, ε)` so every Δ_i enters with unit coefficient. With `ε = 0`,
//! records with `f_i = 0` become exact equalities `Tr(E_i ρ) = 0`.

mod admm;
mod ipm;

use std::collections::HashMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::TruncationConfig;
use crate::linalg;
use crate::measure::MeasurementRecord;
use crate::povm::PovmElement;
use crate::state::DensityMatrix;
use crate::{CMatrix, C64};

pub const DEFAULT_EPSILON_FLOOR: f64 = 1e-6;

/// Measured elements, their frequencies and the band floor.
#[derive(Debug, Clone)]
pub struct TomographyProblem {
    pub trunc: TruncationConfig,
    pub elements: Vec<PovmElement>,
    pub frequencies: Vec<f64>,
    pub epsilon_floor: f64,
}

impl TomographyProblem {
    pub fn new(
        trunc: TruncationConfig,
        elements: Vec<PovmElement>,
        frequencies: Vec<f64>,
        epsilon_floor: f64,
    ) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::Degenerate(
                "no measurements: every state fits an empty record set".into(),
            ));
        }
        if elements.len() != frequencies.len() {
            return Err(Error::DimensionMismatch {
                expected: elements.len(),
                got: frequencies.len(),
            });
        }
        if !(epsilon_floor >= 0.0) || !epsilon_floor.is_finite() {
            return Err(Error::Config(format!("epsilon floor {epsilon_floor} must be ≥ 0")));
        }
        let d = trunc.total_dim();
        for e in &elements {
            if e.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: e.dim(),
                });
            }
        }
        if let Some(f) = frequencies.iter().find(|f| !(**f >= 0.0) || !f.is_finite()) {
            return Err(Error::Domain(format!("frequency {f} must be finite and ≥ 0")));
        }
        Ok(Self {
            trunc,
            elements,
            frequencies,
            epsilon_floor,
        })
    }

    pub fn dim(&self) -> usize {
        self.trunc.total_dim()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Band radius `max(f_i, ε)` of record `i`.
    pub fn band(&self, i: usize) -> f64 {
        self.frequencies[i].max(self.epsilon_floor)
    }

    /// `I − Σ_i E_i` over the measured elements.
    pub fn gap_operator(&self) -> CMatrix {
        let d = self.dim();
        let sum = crate::povm::weighted_sum(&self.elements, d).expect("checked dims");
        CMatrix::identity(d, d) - sum
    }

    /// Same problem with every frequency and element weight multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            trunc: self.trunc,
            elements: self.elements.iter().map(|e| e.scaled(c)).collect(),
            frequencies: self.frequencies.iter().map(|f| f * c).collect(),
            epsilon_floor: self.epsilon_floor,
        }
    }

    /// `Σ_i Δ_i + δ` at the smallest slacks compatible with `rho`; infinite
    /// if an exact row is violated.
    pub fn objective_at(&self, rho: &CMatrix, maxent: bool) -> f64 {
        let mut total = 0.0;
        for (i, e) in self.elements.iter().enumerate() {
            let r = (e.expectation_raw(rho) - self.frequencies[i]).abs();
            let b = self.band(i);
            if b > 0.0 {
                total += r / b;
            } else if r > 0.0 {
                return f64::INFINITY;
            }
        }
        if maxent {
            total += linalg::trace_product_re(&self.gap_operator(), rho).max(0.0);
        }
        total
    }
}

/// Pairs records with elements by id, in record order.
pub fn assemble(
    elements: &[PovmElement],
    records: &[MeasurementRecord],
    trunc: &TruncationConfig,
    epsilon_floor: f64,
) -> Result<TomographyProblem> {
    if records.is_empty() {
        return Err(Error::Degenerate(
            "no measurements: every state fits an empty record set".into(),
        ));
    }
    let mut by_id: HashMap<&str, &PovmElement> = HashMap::with_capacity(elements.len());
    for e in elements {
        if by_id.insert(e.id.as_str(), e).is_some() {
            return Err(Error::Parse(format!("duplicate element id {}", e.id)));
        }
    }
    let mut seen = HashMap::with_capacity(records.len());
    let mut chosen = Vec::with_capacity(records.len());
    let mut freqs = Vec::with_capacity(records.len());
    for r in records {
        let e = by_id
            .get(r.element_id.as_str())
            .ok_or_else(|| Error::Parse(format!("record refers to unknown element {}", r.element_id)))?;
        if seen.insert(r.element_id.as_str(), ()).is_some() {
            return Err(Error::Parse(format!("element {} measured twice", r.element_id)));
        }
        chosen.push((*e).clone());
        freqs.push(r.frequency);
    }
    TomographyProblem::new(*trunc, chosen, freqs, epsilon_floor)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[serde(alias = "ip")]
    InteriorPoint,
    Admm,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ip" | "interior_point" => Ok(Self::InteriorPoint),
            "admm" => Ok(Self::Admm),
            other => Err(Error::Config(format!("unknown algorithm {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub tol_primal: f64,
    pub tol_dual: f64,
    pub tol_gap: f64,
    /// `None` picks 200 for the interior-point method and 50 000 for ADMM.
    pub max_iters: Option<usize>,
    pub maxent: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::InteriorPoint,
            tol_primal: 1e-7,
            tol_dual: 1e-7,
            tol_gap: 1e-7,
            max_iters: None,
            maxent: true,
        }
    }
}

impl SolverConfig {
    pub fn admm() -> Self {
        Self {
            algorithm: Algorithm::Admm,
            ..Self::default()
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol_primal = tol;
        self.tol_dual = tol;
        self.tol_gap = tol;
        self
    }

    pub fn iteration_cap(&self) -> usize {
        self.max_iters.unwrap_or(match self.algorithm {
            Algorithm::InteriorPoint => 200,
            Algorithm::Admm => 50_000,
        })
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tol_primal", self.tol_primal),
            ("tol_dual", self.tol_dual),
            ("tol_gap", self.tol_gap),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.iteration_cap() == 0 {
            return Err(Error::Config("max_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    MaxIters,
    Infeasible,
}

impl SolveStatus {
    /// Process exit code used by the command-line tools.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Optimal => 0,
            Self::MaxIters => 2,
            Self::Infeasible => 3,
        }
    }
}

/// Final residuals, all measured in band-scaled units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub rho: DensityMatrix,
    pub deltas: Vec<f64>,
    /// `None` when the δ line is off.
    pub delta_maxent: Option<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub runtime_seconds: f64,
    pub residuals: Residuals,
    /// Frobenius distance moved by the final Hermitian/PSD/unit-trace projection.
    pub projection_distance: f64,
    /// Smallest eigenvalue of the solver iterate before projection.
    pub raw_min_eigenvalue: f64,
    /// Interior-point merit per iteration, or ADMM primal residual.
    pub history: Vec<f64>,
}

/// Raw solver output before projection onto density matrices.
pub(crate) struct RawSolution {
    pub x: CMatrix,
    pub deltas: Vec<f64>,
    pub delta_maxent: Option<f64>,
    pub status: SolveStatus,
    pub iterations: usize,
    pub residuals: Residuals,
    pub history: Vec<f64>,
}

/// Band-scaled data shared by both back ends.
///
/// Measured operators become `u_i u_i†` with `u_i = √(w_i / b_i) v_i` and
/// targets `f_i / b_i`. Exact rows (zero band) are normalized by the weight
/// instead.
pub(crate) struct Scaled {
    pub d: usize,
    pub u: CMatrix,
    pub target: Vec<f64>,
    pub banded: Vec<bool>,
    pub gap: Option<CMatrix>,
}

impl Scaled {
    pub fn new(problem: &TomographyProblem, maxent: bool) -> Self {
        let d = problem.dim();
        let m = problem.len();
        let mut u = CMatrix::zeros(d, m);
        let mut target = Vec::with_capacity(m);
        let mut banded = Vec::with_capacity(m);
        for (i, e) in problem.elements.iter().enumerate() {
            let b = problem.band(i);
            let (scale, is_banded) = if b > 0.0 { (b, true) } else { (e.weight, false) };
            let s = (e.weight / scale).sqrt();
            for r in 0..d {
                u[(r, i)] = e.vector()[r] * s;
            }
            target.push(problem.frequencies[i] / scale);
            banded.push(is_banded);
        }
        Self {
            d,
            u,
            target,
            banded,
            gap: maxent.then(|| problem.gap_operator()),
        }
    }

    pub fn m(&self) -> usize {
        self.target.len()
    }

    /// `Re ⟨u_i|W|u_i⟩` for every row.
    pub fn apply(&self, w: &CMatrix) -> Vec<f64> {
        let wu = linalg::matmul(w, &self.u);
        (0..self.m())
            .map(|i| self.u.column(i).dotc(&wu.column(i)).re)
            .collect()
    }

    /// `Σ_i c_i u_i u_i†`
    pub fn adjoint(&self, coeffs: &[f64]) -> CMatrix {
        let mut scaled = self.u.clone();
        for (i, &c) in coeffs.iter().enumerate() {
            for x in scaled.column_mut(i).iter_mut() {
                *x *= c;
            }
        }
        linalg::matmul_by_adj(&scaled, &self.u)
    }
}

/// Position of each linear variable in the flat linear block.
pub(crate) struct Layout {
    /// Banded ordinal of each row.
    pub ord: Vec<Option<usize>>,
    pub nb: usize,
    pub maxent: bool,
}

impl Layout {
    pub fn new(s: &Scaled) -> Self {
        let mut nb = 0;
        let ord = s
            .banded
            .iter()
            .map(|&b| {
                b.then(|| {
                    nb += 1;
                    nb - 1
                })
            })
            .collect();
        Self {
            ord,
            nb,
            maxent: s.gap.is_some(),
        }
    }

    pub fn len(&self) -> usize {
        3 * self.nb + if self.maxent { 2 } else { 0 }
    }

    pub fn delta(k: usize) -> usize {
        3 * k
    }

    pub fn sp(k: usize) -> usize {
        3 * k + 1
    }

    pub fn sm(k: usize) -> usize {
        3 * k + 2
    }

    pub fn dd(&self) -> usize {
        3 * self.nb
    }

    pub fn t(&self) -> usize {
        3 * self.nb + 1
    }

    /// Objective coefficients.
    pub fn cost(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.len()];
        for k in 0..self.nb {
            c[Self::delta(k)] = 1.0;
        }
        if self.maxent {
            c[self.dd()] = 1.0;
        }
        c
    }
}

fn finish(problem: &TomographyProblem, raw: RawSolution, maxent: bool, started: Instant) -> Result<ReconstructionResult> {
    let h = linalg::hermitize(&raw.x);
    let (values, vectors) = linalg::eigh(&h);
    let raw_min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if raw_min < -1e-7 {
        log::warn!("solver iterate has eigenvalue {raw_min:.3e}; clipping");
    }
    let clipped = linalg::eig_map(&values, &vectors, |l| l.max(0.0));
    let tr = linalg::trace(&clipped).re;
    if !(tr > 0.0) {
        return Err(Error::Numerical("reconstructed matrix has no positive part".into()));
    }
    let projected = clipped / C64::new(tr, 0.0);
    let projection_distance = (&projected - &raw.x).norm();
    let rho = DensityMatrix::new(problem.trunc, linalg::hermitize(&projected))?;
    let objective = raw.deltas.iter().sum::<f64>() + raw.delta_maxent.unwrap_or(0.0);
    debug_assert!(maxent == raw.delta_maxent.is_some());
    Ok(ReconstructionResult {
        rho,
        deltas: raw.deltas,
        delta_maxent: raw.delta_maxent,
        objective,
        status: raw.status,
        iterations: raw.iterations,
        runtime_seconds: started.elapsed().as_secs_f64(),
        residuals: raw.residuals,
        projection_distance,
        raw_min_eigenvalue: raw_min,
        history: raw.history,
    })
}

/// Relative eigenvalue above which the exact-row vectors count as spanning.
const EXACT_SPAN_TOL: f64 = 1e-12;

/// Exact rows force `ρ v_i = 0`, so they admit a state only if their
/// vectors leave a common kernel.
fn exact_rows_span_space(problem: &TomographyProblem) -> bool {
    let d = problem.dim();
    let mut gram = CMatrix::zeros(d, d);
    let mut exact = 0;
    for (i, e) in problem.elements.iter().enumerate() {
        if problem.band(i) == 0.0 {
            let v = e.vector();
            gram += linalg::outer(&(v / C64::new(v.norm(), 0.0)));
            exact += 1;
        }
    }
    if exact < d {
        return false;
    }
    let values = linalg::eigvalsh(&gram);
    let max = values.iter().copied().fold(0.0, f64::max);
    values.iter().copied().fold(f64::INFINITY, f64::min) > EXACT_SPAN_TOL * max
}

/// Solves the program with the δ line as configured.
pub fn solve(problem: &TomographyProblem, config: &SolverConfig) -> Result<ReconstructionResult> {
    config.validate()?;
    let started = Instant::now();
    if exact_rows_span_space(problem) {
        return Ok(ReconstructionResult {
            rho: DensityMatrix::maximally_mixed(problem.trunc),
            deltas: vec![0.0; problem.len()],
            delta_maxent: config.maxent.then_some(0.0),
            objective: f64::INFINITY,
            status: SolveStatus::Infeasible,
            iterations: 0,
            runtime_seconds: started.elapsed().as_secs_f64(),
            residuals: Residuals::default(),
            projection_distance: 0.0,
            raw_min_eigenvalue: f64::NAN,
            history: Vec::new(),
        });
    }
    let scaled = Scaled::new(problem, config.maxent);
    let raw = match config.algorithm {
        Algorithm::InteriorPoint => ipm::solve(&scaled, config)?,
        Algorithm::Admm => admm::solve(&scaled, config)?,
    };
    finish(problem, raw, config.maxent, started)
}

/// Solves with the δ line removed.
pub fn solve_biased(problem: &TomographyProblem, config: &SolverConfig) -> Result<ReconstructionResult> {
    let config = SolverConfig {
        maxent: false,
        ..*config
    };
    solve(problem, &config)
}
