//! Density matrices, pure states and the target-state catalogue.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{coherent_vector, hermite_polynomial, hermite_wavefunctions, TruncationConfig};
use crate::gauss_hermite::GaussHermite;
use crate::linalg;
use crate::{CMatrix, CVector, C64};

/// Largest discarded weight accepted when a state is truncated to the Fock
/// cutoff. The Hermite–Gauss target at `cutoff_n = 10` drops ≈ 2·10⁻⁴ of its
/// norm, so the default admits it; pass a tighter value to
/// [`build_state_with`] to demand more.
pub const DEFAULT_MAX_DISCARDED_WEIGHT: f64 = 1e-3;

/// Quadrature order per axis for projecting position-space wavefunctions.
pub const PROJECTION_ORDER: usize = 80;

const HERMITICITY_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    pub trunc: TruncationConfig,
    pub amplitudes: CVector,
}

impl PureState {
    /// Normalizes `amplitudes`; fails on a zero vector or a size mismatch.
    pub fn new(trunc: TruncationConfig, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != trunc.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: trunc.total_dim(),
                got: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Degenerate("state vector has zero norm".into()));
        }
        Ok(Self {
            trunc,
            amplitudes: amplitudes / C64::new(norm, 0.0),
        })
    }

    /// Fock state `|levels⟩`.
    pub fn fock(trunc: TruncationConfig, levels: &[usize]) -> Result<Self> {
        if levels.len() != trunc.modes || levels.iter().any(|&n| n > trunc.cutoff_n) {
            return Err(Error::Domain(format!(
                "Fock label {levels:?} does not fit the truncation"
            )));
        }
        let mut amps = CVector::zeros(trunc.total_dim());
        amps[trunc.flat_index(levels)] = C64::new(1.0, 0.0);
        Self::new(trunc, amps)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix {
            trunc: self.trunc,
            entries: linalg::outer(&self.amplitudes),
            discarded_weight: 0.0,
        }
    }
}

/// Hermitian, unit-trace, positive semidefinite operator on a truncated
/// Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub trunc: TruncationConfig,
    pub entries: CMatrix,
    /// Weight lost when the state was truncated, before renormalization.
    pub discarded_weight: f64,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(trunc: TruncationConfig, entries: CMatrix) -> Result<Self> {
        let rho = Self::unchecked(trunc, entries)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Only checks the shape. For intermediate objects (e.g. back-projected
    /// matrices) that are allowed to violate positivity.
    pub fn unchecked(trunc: TruncationConfig, entries: CMatrix) -> Result<Self> {
        let d = trunc.total_dim();
        if entries.nrows() != d || entries.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: entries.nrows(),
            });
        }
        Ok(Self {
            trunc,
            entries,
            discarded_weight: 0.0,
        })
    }

    /// Hermitizes, scales to unit trace and validates.
    pub fn normalized(trunc: TruncationConfig, entries: CMatrix) -> Result<Self> {
        let h = linalg::hermitize(&entries);
        let tr = linalg::trace(&h).re;
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(Error::Degenerate(format!("trace {tr} cannot be normalized")));
        }
        Self::new(trunc, h / C64::new(tr, 0.0))
    }

    pub fn maximally_mixed(trunc: TruncationConfig) -> Self {
        let d = trunc.total_dim();
        Self {
            trunc,
            entries: CMatrix::identity(d, d) / C64::new(d as f64, 0.0),
            discarded_weight: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let herm = linalg::hermiticity_error(&self.entries);
        if herm > HERMITICITY_TOL {
            return Err(Error::Domain(format!("matrix not Hermitian (error {herm:.2e})")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::Domain(format!("trace {tr} differs from 1")));
        }
        let min = self.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::Domain(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.entries).re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigvalsh(&self.entries)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.entries)
    }

    pub fn purity(&self) -> f64 {
        linalg::trace_product_re(&self.entries, &self.entries)
    }

    /// Numerical rank: eigenvalues above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.eigenvalues().iter().filter(|&&v| v > tol).count()
    }

    /// `t·self + (1 − t)·other`
    pub fn mix(&self, other: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(DensityMatrix {
            trunc: self.trunc,
            entries: &self.entries * C64::new(t, 0.0) + &other.entries * C64::new(1.0 - t, 0.0),
            discarded_weight: 0.0,
        })
    }

    /// `U ρ U†`
    pub fn conjugate_by(&self, u: &CMatrix) -> Result<DensityMatrix> {
        if u.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: u.nrows(),
            });
        }
        Ok(DensityMatrix {
            trunc: self.trunc,
            entries: u * &self.entries * u.adjoint(),
            discarded_weight: self.discarded_weight,
        })
    }

    pub fn to_file(&self) -> DensityMatrixFile {
        DensityMatrixFile {
            dim: self.dim(),
            cutoff_n: self.trunc.cutoff_n,
            modes: self.trunc.modes,
            re: row_major(&self.entries).map(|z| z.re).collect(),
            im: row_major(&self.entries).map(|z| z.im).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DensityMatrixFile = serde_json::from_str(text)?;
        file.into_density(false)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn row_major(m: &CMatrix) -> impl Iterator<Item = C64> + '_ {
    (0..m.nrows()).flat_map(move |i| (0..m.ncols()).map(move |j| m[(i, j)]))
}

/// On-disk layout of a density matrix: row-major real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrixFile {
    pub dim: usize,
    pub cutoff_n: usize,
    pub modes: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl DensityMatrixFile {
    /// `allow_unphysical` skips positivity and trace checks (baseline output).
    pub fn into_density(self, allow_unphysical: bool) -> Result<DensityMatrix> {
        let trunc = TruncationConfig::new(self.cutoff_n, self.modes)?;
        if trunc.total_dim() != self.dim {
            return Err(Error::Parse(format!(
                "dim {} inconsistent with cutoff {} and {} modes",
                self.dim, self.cutoff_n, self.modes
            )));
        }
        let n = self.dim * self.dim;
        if self.re.len() != n || self.im.len() != n {
            return Err(Error::Parse(format!("expected {n} entries per part")));
        }
        let entries = CMatrix::from_fn(self.dim, self.dim, |i, j| {
            C64::new(self.re[i * self.dim + j], self.im[i * self.dim + j])
        });
        if allow_unphysical {
            DensityMatrix::unchecked(trunc, entries)
        } else {
            DensityMatrix::new(trunc, entries)
        }
    }
}

/// Target states used throughout the experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateSpec {
    /// `(|1,0⟩ + |0,1⟩)/√2`
    Noon,
    /// `H_n((q₁+q₂)/(√2σ₊)) e^{−(q₁+q₂)²/4σ₊²} e^{−(q₁−q₂)²/4σ₋²}`, normalized.
    HermiteGauss {
        sigma_plus: f64,
        sigma_minus: f64,
        n: usize,
    },
    /// `√(1−λ²) Σ λⁿ |n,n⟩` with `λ = tanh ζ`.
    SqueezedVacuum { zeta: f64 },
    /// `|α,α⟩⟨α,α| + |−α,−α⟩⟨−α,−α| − (1−p)(|α,α⟩⟨−α,−α| + h.c.)`, normalized.
    DephasedCat { alpha: f64, p: f64 },
    /// `|n⟩` on every mode.
    Fock { n: usize },
    /// `|z⟩` on every mode.
    Coherent { z_re: f64, z_im: f64 },
}

impl StateSpec {
    pub fn benchmark_hermite_gauss() -> Self {
        StateSpec::HermiteGauss {
            sigma_plus: 1.0,
            sigma_minus: 0.5,
            n: 1,
        }
    }

    pub fn benchmark_squeezed_vacuum() -> Self {
        StateSpec::SqueezedVacuum { zeta: 0.2 }
    }

    pub fn benchmark_dephased_cat() -> Self {
        StateSpec::DephasedCat { alpha: 1.0, p: 0.5 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            StateSpec::Noon => "noon",
            StateSpec::HermiteGauss { .. } => "hermite_gauss",
            StateSpec::SqueezedVacuum { .. } => "squeezed_vacuum",
            StateSpec::DephasedCat { .. } => "dephased_cat",
            StateSpec::Fock { .. } => "fock",
            StateSpec::Coherent { .. } => "coherent",
        }
    }

    /// Whether the state is pure (its density matrix is rank one).
    pub fn is_pure(&self) -> bool {
        match self {
            StateSpec::DephasedCat { p, .. } => *p == 0.0,
            _ => true,
        }
    }

    pub fn validate(&self, trunc: &TruncationConfig) -> Result<()> {
        let two_mode = |name: &str| {
            if trunc.modes != 2 {
                Err(Error::Config(format!("{name} is a two-mode state")))
            } else {
                Ok(())
            }
        };
        match *self {
            StateSpec::Noon => {
                two_mode("noon")?;
                if trunc.cutoff_n < 1 {
                    return Err(Error::Config("noon needs cutoff_n >= 1".into()));
                }
            }
            StateSpec::HermiteGauss {
                sigma_plus,
                sigma_minus,
                ..
            } => {
                two_mode("hermite_gauss")?;
                if !(sigma_plus > 0.0 && sigma_minus > 0.0) {
                    return Err(Error::Config("sigma_plus and sigma_minus must be > 0".into()));
                }
            }
            StateSpec::SqueezedVacuum { zeta } => {
                two_mode("squeezed_vacuum")?;
                if !zeta.is_finite() {
                    return Err(Error::Config("zeta must be finite".into()));
                }
            }
            StateSpec::DephasedCat { alpha, p } => {
                two_mode("dephased_cat")?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::Config(format!("p = {p} outside [0, 1]")));
                }
                if !alpha.is_finite() || alpha == 0.0 {
                    return Err(Error::Config("alpha must be finite and nonzero".into()));
                }
            }
            StateSpec::Fock { n } => {
                if n > trunc.cutoff_n {
                    return Err(Error::Config(format!("Fock level {n} above cutoff")));
                }
            }
            StateSpec::Coherent { z_re, z_im } => {
                if !(z_re.is_finite() && z_im.is_finite()) {
                    return Err(Error::Config("coherent amplitude must be finite".into()));
                }
            }
        }
        Ok(())
    }
}

/// [`build_state_with`] at the default discarded-weight threshold.
pub fn build_state(spec: &StateSpec, trunc: &TruncationConfig) -> Result<DensityMatrix> {
    build_state_with(spec, trunc, DEFAULT_MAX_DISCARDED_WEIGHT)
}

/// Builds the target state, renormalized after truncation. Fails with
/// [`Error::Truncation`] when more than `max_discarded` of the norm falls
/// outside the retained Fock levels.
pub fn build_state_with(
    spec: &StateSpec,
    trunc: &TruncationConfig,
    max_discarded: f64,
) -> Result<DensityMatrix> {
    spec.validate(trunc)?;
    let (entries, captured) = match *spec {
        StateSpec::Noon => {
            let mut amps = CVector::zeros(trunc.total_dim());
            let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            amps[trunc.flat_index(&[1, 0])] = h;
            amps[trunc.flat_index(&[0, 1])] = h;
            (linalg::outer(&amps), 1.0)
        }
        StateSpec::SqueezedVacuum { zeta } => {
            let lambda = zeta.tanh();
            let mut amps = CVector::zeros(trunc.total_dim());
            let c0 = (1.0 - lambda * lambda).sqrt();
            let mut c = c0;
            for n in 0..=trunc.cutoff_n {
                amps[trunc.flat_index(&[n, n])] = C64::new(c, 0.0);
                c *= lambda;
            }
            let captured = amps.norm_squared();
            (linalg::outer(&amps), captured)
        }
        StateSpec::Fock { n } => {
            let levels = vec![n; trunc.modes];
            (PureState::fock(*trunc, &levels)?.density().entries, 1.0)
        }
        StateSpec::Coherent { z_re, z_im } => {
            let single = coherent_vector(C64::new(z_re, z_im), trunc.dim());
            let parts = vec![single; trunc.modes];
            let amps = linalg::kron_vectors(&parts);
            let captured = amps.norm_squared();
            (linalg::outer(&amps), captured)
        }
        StateSpec::DephasedCat { alpha, p } => {
            let d = trunc.dim();
            let plus = coherent_vector(C64::new(alpha, 0.0), d);
            let minus = coherent_vector(C64::new(-alpha, 0.0), d);
            let a = plus.kronecker(&plus);
            let b = minus.kronecker(&minus);
            let coherence = C64::new(-(1.0 - p), 0.0);
            let m = linalg::outer(&a)
                + linalg::outer(&b)
                + (&a * b.adjoint() + &b * a.adjoint()) * coherence;
            // Untruncated normalization: ⟨α,α|−α,−α⟩ = e^{−4|α|²}.
            let full_trace = 2.0 - 2.0 * (1.0 - p) * (-4.0 * alpha * alpha).exp();
            let captured = linalg::trace(&m).re / full_trace;
            (m, captured)
        }
        StateSpec::HermiteGauss {
            sigma_plus,
            sigma_minus,
            n,
        } => {
            let (amps, captured) = hermite_gauss_amplitudes(sigma_plus, sigma_minus, n, trunc)?;
            (linalg::outer(&amps), captured)
        }
    };
    let discarded = 1.0 - captured;
    if discarded > max_discarded {
        return Err(Error::Truncation {
            captured,
            max_discarded,
        });
    }
    let mut rho = DensityMatrix::normalized(*trunc, entries)?;
    rho.discarded_weight = discarded.max(0.0);
    Ok(rho)
}

/// Projects the Hermite–Gauss wavefunction onto `ψ_m(q₁)ψ_n(q₂)`.
///
/// In `u = (q₁+q₂)/√2`, `v = (q₁−q₂)/√2` the wavefunction factorizes into a
/// scaled Hermite function of `u` times a Gaussian in `v`; a tensor
/// Gauss–Hermite rule in those coordinates, rescaled to each axis' Gaussian
/// envelope, integrates every overlap exactly. Returns the unnormalized
/// amplitudes (divided by the continuum norm) and the captured weight.
fn hermite_gauss_amplitudes(
    sigma_plus: f64,
    sigma_minus: f64,
    order_n: usize,
    trunc: &TruncationConfig,
) -> Result<(CVector, f64)> {
    let gh = GaussHermite::new(PROJECTION_ORDER)?;
    let d = trunc.dim();
    let cutoff = trunc.cutoff_n;
    let phi_u = |u: f64| {
        hermite_polynomial(order_n, u / sigma_plus) * (-u * u / (2.0 * sigma_plus * sigma_plus)).exp()
    };
    let phi_v = |v: f64| (-v * v / (2.0 * sigma_minus * sigma_minus)).exp();

    // Continuum norm ∫∫ |Φ|² du dv.
    let norm_u = gh.integrate_scaled(1.0 / (sigma_plus * sigma_plus), |u| phi_u(u).powi(2));
    let norm_v = gh.integrate_scaled(1.0 / (sigma_minus * sigma_minus), |v| phi_v(v).powi(2));
    let norm = norm_u * norm_v;
    if !(norm > 0.0) {
        return Err(Error::Numerical("Hermite-Gauss norm vanished".into()));
    }

    let rule_u = gh.scaled_rule(0.5 / (sigma_plus * sigma_plus) + 0.5);
    let rule_v = gh.scaled_rule(0.5 / (sigma_minus * sigma_minus) + 0.5);
    let mut coeffs = vec![0.0f64; d * d];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for &(u, wu) in &rule_u {
        let fu = phi_u(u);
        for &(v, wv) in &rule_v {
            let weight = wu * wv * fu * phi_v(v);
            if weight == 0.0 {
                continue;
            }
            let psi1 = hermite_wavefunctions(cutoff, s * (u + v));
            let psi2 = hermite_wavefunctions(cutoff, s * (u - v));
            for m in 0..d {
                let a = weight * psi1[m];
                for n in 0..d {
                    coeffs[m * d + n] += a * psi2[n];
                }
            }
        }
    }
    let scale = 1.0 / norm.sqrt();
    let amps = CVector::from_iterator(d * d, coeffs.iter().map(|&c| C64::new(c * scale, 0.0)));
    let captured = amps.norm_squared();
    Ok((amps, captured))
}
