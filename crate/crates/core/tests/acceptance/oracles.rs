//! Reference computations that avoid the library code paths they check.

use std::f64::consts::PI;

use cvtomo::gauss_hermite::GaussHermite;
use cvtomo::povm::{Coords, PovmElement};
use cvtomo::sdp::TomographyProblem;
use cvtomo::{linalg, CMatrix, CVector, DensityMatrix, TruncationConfig, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Oscillator eigenfunction from the unnormalized Hermite recurrence and
/// an explicit factorial norm; adequate for `n ≤ 20`.
pub fn psi(n: usize, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * x);
    let h = match n {
        0 => h0,
        _ => {
            for k in 1..n {
                let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
                h0 = h1;
                h1 = h2;
            }
            h1
        }
    };
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    let norm = (2f64.powi(n as i32) * fact * PI.sqrt()).sqrt();
    h / norm * (-x * x / 2.0).exp()
}

/// `(1/2π)∫ψ_m(q − v/2)ψ_n(q + v/2)e^{ivp}dv` with `v = 2u` and a
/// Gauss–Hermite rule in `u`.
pub fn wigner_by_quadrature(gh: &GaussHermite, m: usize, n: usize, q: f64, p: f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (&u, &w) in gh.nodes.iter().zip(&gh.scaled_weights) {
        let v = 2.0 * u;
        acc += C64::from_polar(2.0 * w * psi(m, q - v / 2.0) * psi(n, q + v / 2.0), v * p);
    }
    acc / (2.0 * PI)
}

/// Negativity of `√(1−λ²) Σ λⁿ|n,n⟩`: the partial transpose has trace
/// norm `(Σ cₙ)² = (1+λ)/(1−λ)`, so `N = λ/(1−λ)`.
pub fn squeezed_vacuum_negativity(zeta: f64) -> f64 {
    let l = zeta.tanh();
    l / (1.0 - l)
}

/// `Σ_{n ≤ cutoff} e^{−|z|²}|z|^{2n}/n!`, the truncated coherent norm.
pub fn coherent_norm(r2: f64, cutoff: usize) -> f64 {
    let mut term = (-r2).exp();
    let mut sum = term;
    for n in 1..=cutoff {
        term *= r2 / n as f64;
        sum += term;
    }
    sum
}

/// `w Tr(ρ (|a⟩⟨a| ⊗ |b⟩⟨b|))` for every pair of mode vectors, from the
/// spectral decomposition of `ρ` and the product structure of the
/// elements: `⟨a⊗b|φ⟩ = a†Φb̄` with `Φ` the eigenvector reshaped mode 1
/// by mode 2.
pub fn product_expectations(rho: &DensityMatrix, mode_vectors: &[CVector], weight: f64) -> Vec<f64> {
    let d = rho.trunc.dim();
    let k = mode_vectors.len();
    let a = CMatrix::from_fn(d, k, |i, j| mode_vectors[j][i]);
    let a_conj = a.map(|z| z.conj());
    let (values, vectors) = linalg::eigh(&rho.entries);
    let mut out = vec![0.0; k * k];
    for (idx, &lambda) in values.iter().enumerate() {
        if lambda.abs() < 1e-15 {
            continue;
        }
        let phi = CMatrix::from_fn(d, d, |i, j| vectors[(i * d + j, idx)]);
        let overlaps = a.adjoint() * phi * &a_conj;
        for x in 0..k {
            for y in 0..k {
                out[x * k + y] += weight * lambda * overlaps[(x, y)].norm_sqr();
            }
        }
    }
    out
}

fn random_density(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let a = CMatrix::from_fn(d, d, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let p = &a * a.adjoint();
    let tr = linalg::trace(&p).re;
    p / C64::new(tr, 0.0)
}

/// Random qutrit program: `count` rank-one elements with weights in
/// `[0.2, 0.6)` and frequencies of a random state perturbed by ±40%.
pub fn random_qutrit_problem(count: usize, seed: u64) -> TomographyProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = random_density(3, &mut rng);
    let mut elements = Vec::with_capacity(count);
    let mut freqs = Vec::with_capacity(count);
    for i in 0..count {
        let v = CVector::from_fn(3, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).normalize();
        let w = rng.random_range(0.2..0.6);
        let e = PovmElement::new(format!("e{i}"), Coords::Quadrature(vec![]), w, v).unwrap();
        freqs.push((e.expectation_raw(&truth) * rng.random_range(0.6..1.4)).max(0.0));
        elements.push(e);
    }
    TomographyProblem::new(TruncationConfig::single_mode(2), elements, freqs, 1e-3).unwrap()
}

type M3 = [[C64; 3]; 3];

/// `L L† / Tr` for the lower-triangular `L` with real diagonal `r[0..3]`
/// and complex strict lower part `r[3..9]`. Every qutrit state has this
/// form, so a search over R⁹ never meets a boundary.
fn qutrit_from_factor(r: &[f64; 9]) -> M3 {
    let z = C64::new(0.0, 0.0);
    let l = [
        [C64::new(r[0], 0.0), z, z],
        [C64::new(r[3], r[4]), C64::new(r[1], 0.0), z],
        [C64::new(r[5], r[6]), C64::new(r[7], r[8]), C64::new(r[2], 0.0)],
    ];
    let mut m = [[z; 3]; 3];
    let mut tr = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = z;
            for k in 0..3 {
                acc += l[i][k] * l[j][k].conj();
            }
            m[i][j] = acc;
        }
        tr += m[i][i].re;
    }
    for row in m.iter_mut() {
        for x in row.iter_mut() {
            *x /= tr;
        }
    }
    m
}

/// Minimum of `Σ|Tr(E_iρ) − f_i|/b_i (+ max(0, Tr((I − ΣE)ρ)))` by grid
/// search over [`qutrit_from_factor`] coordinates.
///
/// A coordinate grid stalls where several `|·|` terms vanish at once, so
/// the search runs on a smoothed objective (`|x| → √(x² + μ²)` in band
/// units) for a decreasing `μ`. Each stage is a zoom search: a 3⁹ grid
/// of steps `{−h, 0, h}` around the incumbent, with `h` halved once a pass stops
/// improving. The returned value is the exact objective at the best point.
pub fn qutrit_oracle(p: &TomographyProblem, maxent: bool) -> f64 {
    let to_m3 = |a: &CMatrix| -> M3 { std::array::from_fn(|i| std::array::from_fn(|j| a[(i, j)])) };
    let ops: Vec<M3> = p.elements.iter().map(|e| to_m3(&e.weighted_matrix())).collect();
    let mut sum = [[C64::new(0.0, 0.0); 3]; 3];
    for e in &ops {
        for i in 0..3 {
            for j in 0..3 {
                sum[i][j] += e[i][j];
            }
        }
    }
    let gap: M3 = std::array::from_fn(|i| {
        std::array::from_fn(|j| if i == j { C64::new(1.0, 0.0) - sum[i][j] } else { -sum[i][j] })
    });
    let bands: Vec<f64> = p.frequencies.iter().map(|f| f.max(p.epsilon_floor)).collect();
    let tr_re = |a: &M3, b: &M3| -> f64 {
        let mut acc = 0.0;
        for i in 0..3 {
            for k in 0..3 {
                acc += (a[i][k] * b[k][i]).re;
            }
        }
        acc
    };
    let eval = |r: &[f64; 9], mu: f64| {
        let rho = qutrit_from_factor(r);
        if !rho[0][0].re.is_finite() {
            return f64::INFINITY;
        }
        let soft_abs = |x: f64| if mu == 0.0 { x.abs() } else { x.hypot(mu) };
        let mut total = 0.0;
        for (i, e) in ops.iter().enumerate() {
            total += soft_abs((tr_re(e, &rho) - p.frequencies[i]) / bands[i]);
        }
        if maxent {
            let x = tr_re(&gap, &rho);
            total += 0.5 * (x + soft_abs(x));
        }
        total
    };
    let mut center = [1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let mut best_exact = eval(&center, 0.0);
    let mut h = 1.0;
    for mu in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 0.0] {
        let mut best = eval(&center, mu);
        while h > 1e-7 {
            let mut next = center;
            for code in 0..3usize.pow(9) {
                let mut pt = center;
                let mut c = code;
                for x in pt.iter_mut() {
                    *x += ((c % 3) as f64 - 1.0) * h;
                    c /= 3;
                }
                let v = eval(&pt, mu);
                if v < best {
                    best = v;
                    next = pt;
                }
            }
            if next == center {
                h *= 0.5;
            }
            center = next;
        }
        best_exact = best_exact.min(eval(&center, 0.0));
        h = 1e-2;
    }
    best_exact
}
