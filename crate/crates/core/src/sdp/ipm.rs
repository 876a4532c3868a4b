//! Primal-dual path-following interior-point method (HKM direction,
//! Mehrotra predictor-corrector) specialised to the tomography program.
//!
//! Standard form, with `Ẽ_i = u_i u_i†` the band-scaled operators and
//! `G = I − Σ E_i`:
//!
//! ```text
//! row i⁺:   ⟨Ẽ_i, X⟩ − Δ_i + s⁺_i =  f̃_i      (banded rows)
//! row i⁻:  −⟨Ẽ_i, X⟩ − Δ_i + s⁻_i = −f̃_i
//! row i:    ⟨Ẽ_i, X⟩               =  f̃_i      (exact rows)
//! row g:    ⟨G, X⟩ − δ + t          =  0        (maxent only)
//! row tr:   ⟨I, X⟩                  =  1
//! ```
//!
//! The two rows of a band share one operator up to sign, so the Schur
//! complement is reduced to one unknown per record (`y⁺ − y⁻`) plus the
//! g/tr rows before factorisation.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::{Layout, RawSolution, Residuals, Scaled, SolveStatus, SolverConfig};
use crate::error::{Error, Result};
use crate::linalg;
use crate::{CMatrix, C64};

const STEP_FRACTION: f64 = 0.98;

#[derive(Clone)]
struct Iterate {
    x: CMatrix,
    z: CMatrix,
    xl: Vec<f64>,
    zl: Vec<f64>,
    yp: Vec<f64>,
    ym: Vec<f64>,
    yg: f64,
    ytr: f64,
}

struct Direction {
    dx: CMatrix,
    dz: CMatrix,
    dxl: Vec<f64>,
    dzl: Vec<f64>,
    dyp: Vec<f64>,
    dym: Vec<f64>,
    dyg: f64,
    dytr: f64,
}

impl Direction {
    fn add(&mut self, other: &Direction) {
        self.dx += &other.dx;
        self.dz += &other.dz;
        for (a, b) in [
            (&mut self.dxl, &other.dxl),
            (&mut self.dzl, &other.dzl),
            (&mut self.dyp, &other.dyp),
            (&mut self.dym, &other.dym),
        ] {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self.dyg += other.dyg;
        self.dytr += other.dytr;
    }
}

struct Residual {
    rp: Vec<f64>,
    rm: Vec<f64>,
    rg: f64,
    rtr: f64,
    rd: CMatrix,
    rdl: Vec<f64>,
}

impl Residual {
    fn primal_inf(&self) -> f64 {
        self.rp
            .iter()
            .chain(&self.rm)
            .fold(self.rg.abs().max(self.rtr.abs()), |m, v| m.max(v.abs()))
    }

    fn dual_inf(&self) -> f64 {
        self.rdl.iter().fold(self.rd.norm(), |m, v| m.max(v.abs()))
    }
}

struct Solver<'a> {
    s: &'a Scaled,
    lay: Layout,
    cost: Vec<f64>,
    /// Number of complementarity pairs (matrix order plus linear count).
    nu: f64,
}

/// Largest `α` with `M + α·D ⪰ 0` (infinite if `D ⪰ 0`).
fn max_step_psd(m: &CMatrix, d: &CMatrix) -> Option<f64> {
    let chol = Cholesky::new(m.clone())?;
    let l = chol.l();
    let t = l.solve_lower_triangular(d)?;
    let w = l.solve_lower_triangular(&t.adjoint())?;
    let lam = linalg::eigvalsh(&w)[0];
    Some(if lam < 0.0 { -1.0 / lam } else { f64::INFINITY })
}

fn max_step_lin(x: &[f64], dx: &[f64]) -> f64 {
    x.iter()
        .zip(dx)
        .filter(|(_, d)| **d < 0.0)
        .map(|(v, d)| -v / d)
        .fold(f64::INFINITY, f64::min)
}

fn inner_re(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

impl<'a> Solver<'a> {
    fn new(s: &'a Scaled) -> Self {
        let lay = Layout::new(s);
        let cost = lay.cost();
        let nu = (s.d + lay.len()) as f64;
        Self { s, lay, cost, nu }
    }

    fn m(&self) -> usize {
        self.s.m()
    }

    /// `A*(y)` restricted to the matrix block.
    fn adjoint_matrix(&self, yp: &[f64], ym: &[f64], yg: f64, ytr: f64) -> CMatrix {
        let coeffs: Vec<f64> = (0..self.m()).map(|i| yp[i] - ym[i]).collect();
        let mut out = self.s.adjoint(&coeffs);
        if let Some(g) = &self.s.gap {
            out += g * C64::new(yg, 0.0);
        }
        for k in 0..self.s.d {
            out[(k, k)] += ytr;
        }
        out
    }

    /// `B^T y` for every linear variable.
    fn bty(&self, yp: &[f64], ym: &[f64], yg: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.lay.len()];
        for (i, ord) in self.lay.ord.iter().enumerate() {
            if let Some(k) = *ord {
                out[Layout::delta(k)] = -(yp[i] + ym[i]);
                out[Layout::sp(k)] = yp[i];
                out[Layout::sm(k)] = ym[i];
            }
        }
        if self.lay.maxent {
            out[self.lay.dd()] = -yg;
            out[self.lay.t()] = yg;
        }
        out
    }

    fn initial(&self) -> Result<Iterate> {
        let d = self.s.d;
        let m = self.m();
        let x = CMatrix::identity(d, d) / C64::new(d as f64, 0.0);
        let ax = self.s.apply(&x);
        let mut xl = vec![0.0; self.lay.len()];
        let mut zl = vec![0.0; self.lay.len()];
        let mut yp = vec![0.0; m];
        let mut ym = vec![0.0; m];
        for (i, ord) in self.lay.ord.iter().enumerate() {
            if let Some(k) = *ord {
                let r = ax[i] - self.s.target[i];
                let delta = r.abs() + 1.0;
                xl[Layout::delta(k)] = delta;
                xl[Layout::sp(k)] = delta - r;
                xl[Layout::sm(k)] = delta + r;
                yp[i] = -0.25;
                ym[i] = -0.25;
                zl[Layout::delta(k)] = 0.5;
                zl[Layout::sp(k)] = 0.25;
                zl[Layout::sm(k)] = 0.25;
            }
        }
        let mut yg = 0.0;
        let mut lam_g = 0.0f64;
        if let Some(g) = &self.s.gap {
            let gx = linalg::trace_product_re(g, &x);
            let dd = gx.max(0.0) + 1.0;
            xl[self.lay.dd()] = dd;
            xl[self.lay.t()] = dd - gx;
            yg = -0.5;
            zl[self.lay.dd()] = 0.5;
            zl[self.lay.t()] = 0.5;
            lam_g = linalg::min_eigenvalue(g);
        }
        let ytr = (0.5 * lam_g).min(0.0) - 1.0;
        let z = -self.adjoint_matrix(&yp, &ym, yg, ytr);
        if Cholesky::new(z.clone()).is_none() {
            return Err(Error::Numerical("initial dual slack is not positive definite".into()));
        }
        Ok(Iterate {
            x,
            z,
            xl,
            zl,
            yp,
            ym,
            yg,
            ytr,
        })
    }

    fn residual(&self, it: &Iterate) -> Residual {
        let m = self.m();
        let ax = self.s.apply(&it.x);
        let mut rp = vec![0.0; m];
        let mut rm = vec![0.0; m];
        for i in 0..m {
            let f = self.s.target[i];
            match self.lay.ord[i] {
                Some(k) => {
                    let delta = it.xl[Layout::delta(k)];
                    rp[i] = f - (ax[i] - delta + it.xl[Layout::sp(k)]);
                    rm[i] = -f - (-ax[i] - delta + it.xl[Layout::sm(k)]);
                }
                None => rp[i] = f - ax[i],
            }
        }
        let rg = match &self.s.gap {
            Some(g) => {
                -(linalg::trace_product_re(g, &it.x) - it.xl[self.lay.dd()] + it.xl[self.lay.t()])
            }
            None => 0.0,
        };
        let rtr = 1.0 - linalg::trace(&it.x).re;
        let rd = -self.adjoint_matrix(&it.yp, &it.ym, it.yg, it.ytr) - &it.z;
        let bty = self.bty(&it.yp, &it.ym, it.yg);
        let rdl = (0..self.lay.len())
            .map(|j| self.cost[j] - bty[j] - it.zl[j])
            .collect();
        Residual {
            rp,
            rm,
            rg,
            rtr,
            rd,
            rdl,
        }
    }

    fn mu(&self, it: &Iterate) -> f64 {
        let lin: f64 = it.xl.iter().zip(&it.zl).map(|(a, b)| a * b).sum();
        (inner_re(&it.x, &it.z) + lin) / self.nu
    }

    fn objectives(&self, it: &Iterate) -> (f64, f64) {
        let pobj: f64 = it.xl.iter().zip(&self.cost).map(|(a, b)| a * b).sum();
        let mut dobj = it.ytr;
        for i in 0..self.m() {
            dobj += self.s.target[i] * (it.yp[i] - it.ym[i]);
        }
        (pobj, dobj)
    }

    /// Total complementarity plus infeasibility. The complementarity is
    /// not averaged: the duality gap is `ν μ`, and averaging would let the
    /// residual noise floor swamp it on large programs.
    fn merit(&self, it: &Iterate) -> f64 {
        let r = self.residual(it);
        self.nu * self.mu(it) + r.primal_inf() + r.dual_inf()
    }
}

/// Factorised reduced Schur complement for one iterate.
struct Newton {
    zinv: CMatrix,
    chol: Cholesky<f64, nalgebra::Dyn>,
    dlin: Vec<f64>,
    /// Per banded row: (α, γ) of the pair elimination.
    pair: Vec<(f64, f64)>,
    ne: usize,
}

impl<'a> Solver<'a> {
    fn factor(&self, it: &Iterate) -> Result<Newton> {
        let s = self.s;
        let m = self.m();
        let d = s.d;
        let zchol = Cholesky::new(it.z.clone())
            .ok_or_else(|| Error::Numerical("dual slack lost definiteness".into()))?;
        let zinv = zchol.inverse();
        let xu = linalg::matmul(&it.x, &s.u);
        let p = linalg::matmul_adj(&s.u, &xu);
        let q = linalg::matmul_adj(&s.u, &linalg::matmul(&zinv, &s.u));

        let ne = if s.gap.is_some() { 2 } else { 1 };
        let n = m + ne;
        let mut mat = DMatrix::<f64>::zeros(n, n);
        for k in 0..m {
            for i in k..m {
                let v = (p[(i, k)] * q[(i, k)].conj()).re;
                mat[(i, k)] = v;
                mat[(k, i)] = v;
            }
        }

        let dlin: Vec<f64> = it.xl.iter().zip(&it.zl).map(|(a, b)| a / b).collect();
        let mut pair = vec![(0.0, 1.0); m];
        for (i, ord) in self.lay.ord.iter().enumerate() {
            if let Some(k) = *ord {
                let dp = dlin[Layout::sp(k)];
                let dm = dlin[Layout::sm(k)];
                let alpha = 0.5 * (dp - dm);
                let beta = 0.5 * (dp + dm);
                let gamma = 2.0 * dlin[Layout::delta(k)] + beta;
                pair[i] = (alpha, gamma);
                // β − α²/γ, with β² − α² = D⁺D⁻ taken exactly: the direct
                // form cancels once one side of the band is active.
                mat[(i, i)] += 0.5 * (2.0 * beta * dlin[Layout::delta(k)] + dp * dm) / gamma;
            }
        }

        // Extra operators: G (maxent) and I, in that order.
        let xz = linalg::matmul(&it.x, &zinv);
        let mut extra_y: Vec<CMatrix> = Vec::with_capacity(2);
        if let Some(g) = &s.gap {
            extra_y.push(linalg::matmul(&linalg::matmul(&it.x, g), &zinv));
        }
        extra_y.push(xz.clone());
        for (e, y) in extra_y.iter().enumerate() {
            let yu = linalg::matmul(y, &s.u);
            for i in 0..m {
                let v = s.u.column(i).dotc(&yu.column(i)).re;
                mat[(i, m + e)] = v;
                mat[(m + e, i)] = v;
            }
        }
        let extra_ops: Vec<Option<&CMatrix>> = match &s.gap {
            Some(g) => vec![Some(g), None],
            None => vec![None],
        };
        for (e, ye) in extra_y.iter().enumerate() {
            for (f, op) in extra_ops.iter().enumerate() {
                // Re Tr(O_f · X O_e Z⁻¹)
                let v = match op {
                    Some(o) => linalg::trace_product_re(o, ye),
                    None => linalg::trace(ye).re,
                };
                mat[(m + f, m + e)] = v;
            }
        }
        for e in 0..ne {
            for f in 0..e {
                let v = 0.5 * (mat[(m + e, m + f)] + mat[(m + f, m + e)]);
                mat[(m + e, m + f)] = v;
                mat[(m + f, m + e)] = v;
            }
        }
        if s.gap.is_some() {
            mat[(m, m)] += dlin[self.lay.dd()] + dlin[self.lay.t()];
        }
        let _ = d;

        let scale = (0..n).fold(0.0f64, |acc, i| acc.max(mat[(i, i)].abs())).max(1e-300);
        let mut reg = 0.0;
        let chol = loop {
            let mut trial = mat.clone();
            for i in 0..n {
                trial[(i, i)] += reg;
            }
            if let Some(c) = Cholesky::new(trial) {
                if reg > 0.0 {
                    log::debug!("schur regularized by {reg:.2e} (scale {scale:.2e})");
                }
                break c;
            }
            reg = if reg == 0.0 { 1e-14 * scale } else { reg * 100.0 };
            if reg > 1e-4 * scale {
                return Err(Error::Numerical("Schur complement is not positive definite".into()));
            }
        };
        Ok(Newton {
            zinv,
            chol,
            dlin,
            pair,
            ne,
        })
    }

    /// Solves the Newton system for complementarity targets `rc` (matrix)
    /// and `rcl` (linear block).
    fn direction(&self, it: &Iterate, res: &Residual, nw: &Newton, rc: &CMatrix, rcl: &[f64]) -> Direction {
        let s = self.s;
        let m = self.m();
        let n = m + nw.ne;
        let w = rc - linalg::matmul(&linalg::matmul(&it.x, &res.rd), &nw.zinv);
        let a0 = s.apply(&w);
        let h: Vec<f64> = (0..self.lay.len())
            .map(|j| rcl[j] - nw.dlin[j] * res.rdl[j])
            .collect();

        let mut rhs = DVector::<f64>::zeros(n);
        let mut sums = vec![0.0; m];
        for i in 0..m {
            match self.lay.ord[i] {
                Some(k) => {
                    let hd = h[Layout::delta(k)];
                    let plus = res.rp[i] - a0[i] + hd - h[Layout::sp(k)];
                    let minus = res.rm[i] + a0[i] + hd - h[Layout::sm(k)];
                    let (alpha, gamma) = nw.pair[i];
                    sums[i] = plus + minus;
                    rhs[i] = 0.5 * ((plus - minus) - alpha * sums[i] / gamma);
                }
                None => rhs[i] = res.rp[i] - a0[i],
            }
        }
        if let Some(g) = &s.gap {
            rhs[m] = res.rg - linalg::trace_product_re(g, &w) + h[self.lay.dd()] - h[self.lay.t()];
        }
        rhs[n - 1] = res.rtr - linalg::trace(&w).re;

        let sol = nw.chol.solve(&rhs);
        let mut dyp = vec![0.0; m];
        let mut dym = vec![0.0; m];
        for i in 0..m {
            let u = sol[i];
            if self.lay.ord[i].is_some() {
                let (alpha, gamma) = nw.pair[i];
                let c = (sums[i] - alpha * u) / gamma;
                dyp[i] = 0.5 * (u + c);
                dym[i] = 0.5 * (c - u);
            } else {
                dyp[i] = u;
            }
        }
        let dyg = if s.gap.is_some() { sol[m] } else { 0.0 };
        let dytr = sol[n - 1];

        let dz = &res.rd - self.adjoint_matrix(&dyp, &dym, dyg, dytr);
        let dx = linalg::hermitize(&(rc - linalg::matmul(&linalg::matmul(&it.x, &dz), &nw.zinv)));
        let bty = self.bty(&dyp, &dym, dyg);
        let dzl: Vec<f64> = (0..self.lay.len()).map(|j| res.rdl[j] - bty[j]).collect();
        let dxl: Vec<f64> = (0..self.lay.len()).map(|j| h[j] + nw.dlin[j] * bty[j]).collect();
        Direction {
            dx,
            dz,
            dxl,
            dzl,
            dyp,
            dym,
            dyg,
            dytr,
        }
    }

    /// Part of the linearised primal equations a direction leaves unmet.
    fn linear_error(&self, res: &Residual, dir: &Direction) -> Residual {
        let m = self.m();
        let ax = self.s.apply(&dir.dx);
        let mut rp = vec![0.0; m];
        let mut rm = vec![0.0; m];
        for i in 0..m {
            match self.lay.ord[i] {
                Some(k) => {
                    let dd = dir.dxl[Layout::delta(k)];
                    rp[i] = res.rp[i] - (ax[i] - dd + dir.dxl[Layout::sp(k)]);
                    rm[i] = res.rm[i] - (-ax[i] - dd + dir.dxl[Layout::sm(k)]);
                }
                None => rp[i] = res.rp[i] - ax[i],
            }
        }
        let rg = match &self.s.gap {
            Some(g) => {
                res.rg
                    - (linalg::trace_product_re(g, &dir.dx) - dir.dxl[self.lay.dd()] + dir.dxl[self.lay.t()])
            }
            None => 0.0,
        };
        Residual {
            rp,
            rm,
            rg,
            rtr: res.rtr - linalg::trace(&dir.dx).re,
            rd: CMatrix::zeros(self.s.d, self.s.d),
            rdl: vec![0.0; self.lay.len()],
        }
    }

    /// [`Self::direction`] followed by rounds of iterative refinement on
    /// the primal equations; the band rows scaled by a small floor make the
    /// Schur complement badly conditioned near the optimum.
    fn refined_direction(&self, it: &Iterate, res: &Residual, nw: &Newton, rc: &CMatrix, rcl: &[f64]) -> Direction {
        let mut dir = self.direction(it, res, nw, rc, rcl);
        let zero_c = CMatrix::zeros(self.s.d, self.s.d);
        let zero_l = vec![0.0; self.lay.len()];
        for _ in 0..2 {
            let err = self.linear_error(res, &dir);
            if err.primal_inf() <= 1e-14 * (1.0 + res.primal_inf()) {
                break;
            }
            let fix = self.direction(it, &err, nw, &zero_c, &zero_l);
            dir.add(&fix);
        }
        dir
    }

    fn step_lengths(&self, it: &Iterate, dir: &Direction) -> (f64, f64) {
        let ap = max_step_psd(&it.x, &dir.dx)
            .unwrap_or(0.0)
            .min(max_step_lin(&it.xl, &dir.dxl));
        let ad = max_step_psd(&it.z, &dir.dz)
            .unwrap_or(0.0)
            .min(max_step_lin(&it.zl, &dir.dzl));
        (ap, ad)
    }

    fn advance(&self, it: &Iterate, dir: &Direction, ap: f64, ad: f64) -> Iterate {
        let cp = C64::new(ap, 0.0);
        let cd = C64::new(ad, 0.0);
        Iterate {
            x: &it.x + &dir.dx * cp,
            z: linalg::hermitize(&(&it.z + &dir.dz * cd)),
            xl: it.xl.iter().zip(&dir.dxl).map(|(a, b)| a + ap * b).collect(),
            zl: it.zl.iter().zip(&dir.dzl).map(|(a, b)| a + ad * b).collect(),
            yp: it.yp.iter().zip(&dir.dyp).map(|(a, b)| a + ad * b).collect(),
            ym: it.ym.iter().zip(&dir.dym).map(|(a, b)| a + ad * b).collect(),
            yg: it.yg + ad * dir.dyg,
            ytr: it.ytr + ad * dir.dytr,
        }
    }

    fn raw(&self, it: &Iterate, status: SolveStatus, iterations: usize, history: Vec<f64>) -> RawSolution {
        let res = self.residual(it);
        let (pobj, dobj) = self.objectives(it);
        let deltas = self
            .lay
            .ord
            .iter()
            .map(|o| o.map_or(0.0, |k| it.xl[Layout::delta(k)]))
            .collect();
        RawSolution {
            x: it.x.clone(),
            deltas,
            delta_maxent: self.lay.maxent.then(|| it.xl[self.lay.dd()]),
            status,
            iterations,
            residuals: Residuals {
                primal: res.primal_inf(),
                dual: res.dual_inf(),
                gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
            },
            history,
        }
    }
}

pub(crate) fn solve(s: &Scaled, config: &SolverConfig) -> Result<RawSolution> {
    let solver = Solver::new(s);
    let mut it = solver.initial()?;
    let mut history = vec![solver.merit(&it)];
    let cap = config.iteration_cap();

    for iter in 0..cap {
        let res = solver.residual(&it);
        let (pobj, dobj) = solver.objectives(&it);
        let pinf = res.primal_inf();
        let dinf = res.dual_inf();
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        log::debug!("ip {iter}: pobj {pobj:.6e} dobj {dobj:.6e} pinf {pinf:.2e} dinf {dinf:.2e} gap {gap:.2e}");
        if pinf <= config.tol_primal && dinf <= config.tol_dual && gap <= config.tol_gap {
            return Ok(solver.raw(&it, SolveStatus::Optimal, iter, history));
        }
        // A dual ray with growing objective certifies primal infeasibility.
        if dobj > 1e8 && dinf <= 1e-8 * dobj && pinf > config.tol_primal {
            return Ok(solver.raw(&it, SolveStatus::Infeasible, iter, history));
        }

        let nw = match solver.factor(&it) {
            Ok(nw) => nw,
            Err(e) => {
                log::warn!("interior point stopped at iteration {iter}: {e}");
                return Ok(solver.raw(&it, SolveStatus::MaxIters, iter, history));
            }
        };
        let mu = solver.mu(&it);

        // Predictor: pure Newton step towards μ = 0.
        let rc_aff = -it.x.clone();
        let rcl_aff: Vec<f64> = it.xl.iter().map(|v| -v).collect();
        let aff = solver.refined_direction(&it, &res, &nw, &rc_aff, &rcl_aff);
        let (ap, ad) = solver.step_lengths(&it, &aff);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let trial = solver.advance(&it, &aff, ap, ad);
        let mu_aff = solver.mu(&trial).max(0.0);
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector with centring and the second-order term.
        let target = sigma * mu;
        let rc = &nw.zinv * C64::new(target, 0.0)
            - &it.x
            - linalg::matmul(&linalg::matmul(&aff.dx, &aff.dz), &nw.zinv);
        let rcl: Vec<f64> = (0..it.xl.len())
            .map(|j| target / it.zl[j] - it.xl[j] - aff.dxl[j] * aff.dzl[j] / it.zl[j])
            .collect();
        let dir = solver.refined_direction(&it, &res, &nw, &rc, &rcl);
        let (ap, ad) = solver.step_lengths(&it, &dir);
        // A common step length: separate primal and dual steps let the
        // matrix block drift off the central path on rank-deficient optima.
        let mut ap = (STEP_FRACTION * ap.min(ad)).min(1.0);
        let mut ad = ap;

        log::debug!("ip {iter}: μ {mu:.2e} σ {sigma:.2e} steps {ap:.3e} {ad:.3e}");
        let current = *history.last().unwrap();
        let mut next = solver.advance(&it, &dir, ap, ad);
        let mut merit = solver.merit(&next);
        let mut tries = 0;
        while !(merit < current) && tries < 40 {
            ap *= 0.5;
            ad *= 0.5;
            next = solver.advance(&it, &dir, ap, ad);
            merit = solver.merit(&next);
            tries += 1;
        }
        if !(merit < current) {
            log::warn!("interior point stalled at iteration {iter}");
            return Ok(solver.raw(&it, SolveStatus::MaxIters, iter, history));
        }
        if Cholesky::new(next.x.clone()).is_none() || Cholesky::new(next.z.clone()).is_none() {
            log::warn!("interior point left the cone at iteration {iter}");
            return Ok(solver.raw(&it, SolveStatus::MaxIters, iter, history));
        }
        it = next;
        history.push(merit);
    }
    let res = solver.residual(&it);
    let (pobj, dobj) = solver.objectives(&it);
    let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
    let status = if res.primal_inf() <= config.tol_primal && res.dual_inf() <= config.tol_dual && gap <= config.tol_gap {
        SolveStatus::Optimal
    } else {
        SolveStatus::MaxIters
    };
    Ok(solver.raw(&it, status, cap, history))
}
