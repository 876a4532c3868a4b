//! Truncated Fock-basis primitives: Hermite wavefunctions, coherent-state
//! amplitudes, ladder operators and tensor bookkeeping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{CMatrix, CVector, C64};

/// Largest Fock index accepted by the wavefunction evaluators.
pub const MAX_FOCK_INDEX: usize = 200;

/// π^{-1/4}
pub const PI_POW_NEG_QUARTER: f64 = 0.751_125_544_464_942_5;

/// Truncation of an N-mode Fock space: every mode keeps `|0⟩ … |cutoff_n⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TruncationConfig {
    pub cutoff_n: usize,
    pub modes: usize,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self {
            cutoff_n: 10,
            modes: 1,
        }
    }
}

impl TruncationConfig {
    pub fn new(cutoff_n: usize, modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::Config("modes must be at least 1".into()));
        }
        if cutoff_n > MAX_FOCK_INDEX {
            return Err(Error::Config(format!(
                "cutoff_n {cutoff_n} exceeds {MAX_FOCK_INDEX}"
            )));
        }
        let t = Self { cutoff_n, modes };
        if t.checked_total_dim().is_none() {
            return Err(Error::Config("total dimension overflows".into()));
        }
        Ok(t)
    }

    pub fn single_mode(cutoff_n: usize) -> Self {
        Self { cutoff_n, modes: 1 }
    }

    pub fn two_mode(cutoff_n: usize) -> Self {
        Self { cutoff_n, modes: 2 }
    }

    /// Per-mode dimension `cutoff_n + 1`.
    pub fn dim(&self) -> usize {
        self.cutoff_n + 1
    }

    fn checked_total_dim(&self) -> Option<usize> {
        let mut total: usize = 1;
        for _ in 0..self.modes {
            total = total.checked_mul(self.dim())?;
        }
        Some(total)
    }

    /// `(cutoff_n + 1)^modes`
    pub fn total_dim(&self) -> usize {
        self.checked_total_dim().expect("validated truncation")
    }

    /// Flat index of a multi-mode Fock label, mode 1 slowest.
    pub fn flat_index(&self, levels: &[usize]) -> usize {
        debug_assert_eq!(levels.len(), self.modes);
        levels.iter().fold(0, |acc, &n| acc * self.dim() + n)
    }

    /// Inverse of [`flat_index`](Self::flat_index).
    pub fn levels(&self, mut flat: usize) -> Vec<usize> {
        let d = self.dim();
        let mut out = vec![0; self.modes];
        for slot in out.iter_mut().rev() {
            *slot = flat % d;
            flat /= d;
        }
        out
    }
}

/// Physicists' Hermite polynomial `H_n(x)` by the three-term recursion
/// `H_{n+1} = 2x H_n − 2n H_{n−1}`. Overflows for large `n`; the normalized
/// evaluators below should be preferred for wavefunctions.
pub fn hermite_polynomial(n: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 2.0 * x;
    for k in 1..n {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `ψ_0(q) … ψ_nmax(q)` for the dimensionless oscillator.
///
/// Runs the Hermite recursion on the normalized functions,
/// `ψ_{k+1} = √(2/(k+1)) q ψ_k − √(k/(k+1)) ψ_{k−1}`, which carries the
/// `(2^k k!)^{-1/2}` prefactor along and never overflows. The Gaussian factor
/// is applied in the log domain when it would underflow on its own.
pub fn hermite_wavefunctions(nmax: usize, q: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(nmax + 1);
    let exponent = -0.5 * q * q;
    // Far in the tail the Gaussian underflows before the polynomial grows;
    // carry a log-scale and fold it back at the end.
    let (start, log_scale) = if exponent < -600.0 {
        (PI_POW_NEG_QUARTER, exponent)
    } else {
        (PI_POW_NEG_QUARTER * exponent.exp(), 0.0)
    };
    let mut log_acc = 0.0;
    let mut prev = 0.0;
    let mut cur = start;
    out.push(cur);
    for k in 0..nmax {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * q * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if log_scale != 0.0 && cur.abs() > 1e250 {
            prev *= 1e-250;
            cur *= 1e-250;
            log_acc += 250.0 * std::f64::consts::LN_10;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
        out.push(cur);
    }
    if log_scale != 0.0 {
        let f = (log_scale + log_acc).exp();
        for v in out.iter_mut() {
            *v *= f;
        }
    }
    out
}

/// Oscillator eigenfunction `ψ_n(q) = (√π 2^n n!)^{-1/2} H_n(q) e^{−q²/2}`.
pub fn hermite_wavefunction(n: usize, q: f64) -> Result<f64> {
    if n > MAX_FOCK_INDEX {
        return Err(Error::Domain(format!(
            "Fock index {n} exceeds the supported maximum {MAX_FOCK_INDEX}"
        )));
    }
    if !q.is_finite() {
        return Err(Error::Domain(format!("non-finite quadrature value {q}")));
    }
    Ok(hermite_wavefunctions(n, q)[n])
}

/// `⟨n|z⟩ = e^{−|z|²/2} z^n / √(n!)`.
pub fn coherent_overlap(n: usize, z: C64) -> C64 {
    let mut c = C64::new((-0.5 * z.norm_sqr()).exp(), 0.0);
    for k in 1..=n {
        c = c * z / (k as f64).sqrt();
    }
    c
}

/// Truncated coherent-state vector `(⟨0|z⟩, …, ⟨d−1|z⟩)`.
pub fn coherent_vector(z: C64, dim: usize) -> CVector {
    let mut out = CVector::zeros(dim);
    let mut c = C64::new((-0.5 * z.norm_sqr()).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            c = c * z / (n as f64).sqrt();
        }
        out[n] = c;
    }
    out
}

/// Single-mode annihilation operator, `a[m, n] = √n δ_{m, n−1}`.
pub fn annihilation_matrix(trunc: &TruncationConfig) -> CMatrix {
    let d = trunc.dim();
    let mut a = CMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

pub fn creation_matrix(trunc: &TruncationConfig) -> CMatrix {
    annihilation_matrix(trunc).adjoint()
}

pub fn number_matrix(trunc: &TruncationConfig) -> CMatrix {
    let d = trunc.dim();
    CMatrix::from_diagonal(&CVector::from_fn(d, |n, _| C64::new(n as f64, 0.0)))
}

/// Phase rotation `e^{iφ n̂}` on one mode.
pub fn phase_rotation(phi: f64, dim: usize) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_fn(dim, |n, _| {
        C64::from_polar(1.0, phi * n as f64)
    }))
}

/// Fock projector `|n⟩⟨n|` on one mode.
pub fn fock_projector(n: usize, dim: usize) -> CMatrix {
    let mut p = CMatrix::zeros(dim, dim);
    p[(n, n)] = C64::new(1.0, 0.0);
    p
}

/// Kronecker product of per-mode operators, mode 1 slowest.
pub fn tensor_lift(single_mode: &[CMatrix]) -> Result<CMatrix> {
    let first = single_mode
        .first()
        .ok_or_else(|| Error::Domain("tensor_lift needs at least one factor".into()))?;
    let d = first.nrows();
    let mut out = CMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    for m in single_mode {
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: if m.nrows() != d { m.nrows() } else { m.ncols() },
            });
        }
        out = out.kronecker(m);
    }
    Ok(out)
}

/// Lift a single-mode operator onto `mode` (0-based) of a multi-mode space.
pub fn embed_on_mode(op: &CMatrix, mode: usize, trunc: &TruncationConfig) -> Result<CMatrix> {
    if mode >= trunc.modes {
        return Err(Error::Domain(format!("mode {mode} out of range")));
    }
    let id = CMatrix::identity(trunc.dim(), trunc.dim());
    let factors: Vec<CMatrix> = (0..trunc.modes)
        .map(|k| if k == mode { op.clone() } else { id.clone() })
        .collect();
    tensor_lift(&factors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Independent oracle: raw Hermite recursion times the explicit
    /// normalization constant.
    fn psi_oracle(n: usize, q: f64) -> f64 {
        let mut fact = 1.0;
        for k in 1..=n {
            fact *= k as f64;
        }
        let norm = (std::f64::consts::PI.sqrt() * 2f64.powi(n as i32) * fact).sqrt();
        hermite_polynomial(n, q) * (-0.5 * q * q).exp() / norm
    }

    #[test]
    fn wavefunction_examples() {
        assert_abs_diff_eq!(hermite_wavefunction(0, 0.0).unwrap(), 0.751_125_5, epsilon = 1e-7);
        assert_abs_diff_eq!(hermite_wavefunction(1, 0.0).unwrap(), 0.0, epsilon = 1e-15);
        // ψ_2(0) = −2 π^{-1/4} / √8
        let frozen = -0.531_125_9;
        assert_abs_diff_eq!(psi_oracle(2, 0.0), frozen, epsilon = 1e-7);
        assert_abs_diff_eq!(hermite_wavefunction(2, 0.0).unwrap(), frozen, epsilon = 1e-7);
    }

    #[test]
    fn normalized_recursion_matches_raw_hermite() {
        for n in 0..=30 {
            for &q in &[-6.0, -2.5, -0.3, 0.0, 0.7, 3.1, 5.0] {
                let a = hermite_wavefunction(n, q).unwrap();
                let b = psi_oracle(n, q);
                assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()), "n={n} q={q}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn large_index_stays_finite() {
        for &q in &[0.0, 5.0, 15.0, 40.0] {
            let v = hermite_wavefunction(200, q).unwrap();
            assert!(v.is_finite());
            assert!(v.abs() < 1.0);
        }
        assert!(matches!(hermite_wavefunction(201, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn coherent_overlap_examples() {
        assert_abs_diff_eq!(coherent_overlap(0, C64::new(0.0, 0.0)).re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(coherent_overlap(1, C64::new(1.0, 0.0)).re, 0.606_530_7, epsilon = 1e-7);
        let v = coherent_overlap(2, C64::new(0.5, 0.0));
        assert_abs_diff_eq!(v.re, (-0.125f64).exp() * 0.25 / 2f64.sqrt(), epsilon = 1e-15);
        // Quoted to seven digits as 0.1560055; the closed form gives 0.15600489.
        assert_abs_diff_eq!(v.re, 0.156_005_5, epsilon = 1e-6);
    }

    #[test]
    fn coherent_overlap_matches_position_space_projection() {
        // ⟨q|z⟩ for real z is the displaced vacuum π^{-1/4} e^{-(q-√2 z)²/2}.
        let z = 0.5;
        let gh = crate::gauss_hermite::GaussHermite::new(80).unwrap();
        let val = gh.integrate(|q| {
            let wave = PI_POW_NEG_QUARTER * (-(q - 2f64.sqrt() * z).powi(2) / 2.0).exp();
            wave * hermite_wavefunction(2, q).unwrap()
        });
        assert_abs_diff_eq!(val, coherent_overlap(2, C64::new(z, 0.0)).re, epsilon = 1e-12);
    }

    #[test]
    fn truncated_coherent_norm_for_sampled_range() {
        // The discarded weight is the Poisson tail P(N > 10) with mean |z|².
        let tail = |r: f64| {
            let mut term = (-r * r).exp();
            let mut kept = term;
            for n in 1..=10 {
                term *= r * r / n as f64;
                kept += term;
            }
            1.0 - kept
        };
        for k in 0..=40 {
            let r = 2.0 * k as f64 / 40.0;
            for &phase in &[0.0, 1.0, 2.5] {
                let v = coherent_vector(C64::from_polar(r, phase), 11);
                assert_abs_diff_eq!(1.0 - v.norm_squared(), tail(r), epsilon = 1e-13);
                if r <= 0.95 {
                    assert!(v.norm_squared() >= 1.0 - 1e-8, "|z|={r}: {}", v.norm_squared());
                }
            }
        }
        // Beyond |z| ≈ 1 the loss exceeds 1e-8; at |z| = 2 it is about 2.8e-3.
        assert_abs_diff_eq!(tail(2.0), 2.839_766e-3, epsilon = 1e-8);
    }

    #[test]
    fn annihilation_examples() {
        let a = annihilation_matrix(&TruncationConfig::single_mode(1));
        assert_eq!(a[(0, 1)], C64::new(1.0, 0.0));
        assert_eq!(a[(0, 0)], C64::new(0.0, 0.0));
        assert_eq!(a[(1, 0)], C64::new(0.0, 0.0));
        assert_eq!(a[(1, 1)], C64::new(0.0, 0.0));

        let t = TruncationConfig::single_mode(10);
        let a = annihilation_matrix(&t);
        let comm = &a * a.adjoint() - a.adjoint() * &a;
        for i in 0..11 {
            for j in 0..11 {
                let expect = if i != j {
                    0.0
                } else if i == 10 {
                    -10.0
                } else {
                    1.0
                };
                assert_abs_diff_eq!(comm[(i, j)].re, expect, epsilon = 1e-12);
                assert_abs_diff_eq!(comm[(i, j)].im, 0.0, epsilon = 1e-12);
            }
        }
        let n = a.adjoint() * &a;
        for k in 0..11 {
            assert_abs_diff_eq!(n[(k, k)].re, k as f64, epsilon = 1e-12);
        }
        let mut ket3 = CVector::zeros(11);
        ket3[3] = C64::new(1.0, 0.0);
        let out = &a * ket3;
        assert_abs_diff_eq!(out[2].re, 3f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(out.norm(), 3f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn tensor_lift_examples() {
        let d = 4;
        let id = CMatrix::identity(d, d);
        let lifted = tensor_lift(&[id.clone(), id]).unwrap();
        assert_eq!(lifted, CMatrix::identity(d * d, d * d));

        let p = tensor_lift(&[fock_projector(1, d), fock_projector(0, d)]).unwrap();
        assert_eq!(p[(d, d)], C64::new(1.0, 0.0));
        assert_abs_diff_eq!(crate::linalg::trace(&p).re, 1.0);

        let err = tensor_lift(&[CMatrix::identity(2, 2), CMatrix::identity(3, 3)]);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn flat_index_round_trip() {
        let t = TruncationConfig::new(3, 3).unwrap();
        for flat in 0..t.total_dim() {
            assert_eq!(t.flat_index(&t.levels(flat)), flat);
        }
        assert_eq!(t.flat_index(&[1, 0, 0]), 16);
        assert_eq!(TruncationConfig::default().total_dim(), 11);
        assert_eq!(TruncationConfig::two_mode(10).total_dim(), 121);
    }
}
