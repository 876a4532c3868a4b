//! ADMM splitting between the affine constraint set and the cone
//! `PSD × R₊ⁿ`.
//!
//! Variables live in the same standard form as the interior-point back end.
//! The affine step is an exact projection through a Cholesky factor of
//! `A Aᵀ`, computed once; the cone step clips eigenvalues. The dual slack is
//! read off the scaled multiplier, which lies in the cone by construction,
//! and the equality multipliers are recovered by least squares to certify
//! the dual residual and the gap.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::{Layout, RawSolution, Residuals, Scaled, SolveStatus, SolverConfig};
use crate::error::{Error, Result};
use crate::linalg;
use crate::{CMatrix, C64};

const RELAXATION: f64 = 1.6;
const CHECK_EVERY: usize = 25;
const BALANCE_EVERY: usize = 500;
const INITIAL_PENALTY: f64 = 2.0;

#[derive(Clone)]
struct Point {
    x: CMatrix,
    xl: Vec<f64>,
}

impl Point {
    fn zeros(d: usize, nl: usize) -> Self {
        Self {
            x: CMatrix::zeros(d, d),
            xl: vec![0.0; nl],
        }
    }

    fn axpy(&self, a: f64, other: &Point) -> Point {
        Point {
            x: &self.x + &other.x * C64::new(a, 0.0),
            xl: self.xl.iter().zip(&other.xl).map(|(p, q)| p + a * q).collect(),
        }
    }

    fn scale(&self, a: f64) -> Point {
        Point {
            x: &self.x * C64::new(a, 0.0),
            xl: self.xl.iter().map(|v| a * v).collect(),
        }
    }

    fn norm(&self) -> f64 {
        (self.x.norm_squared() + self.xl.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    fn dot(&self, other: &Point) -> f64 {
        linalg::trace_product_re(&self.x, &other.x) + self.xl.iter().zip(&other.xl).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Row layout: plus/exact rows `0..m`, minus rows for banded records, then
/// the g row (maxent) and the trace row.
///
/// The linear variables are stored column-scaled: the slack and band
/// variables attached to a row carry that row's operator norm, so every
/// column of `A` has a comparable size. Without this the Euclidean metric
/// ADMM works in is dominated by rows normalized with the epsilon floor.
struct Operator<'a> {
    s: &'a Scaled,
    lay: Layout,
    minus: Vec<usize>,
    rows: usize,
    col: Vec<f64>,
    cscale: f64,
}

impl<'a> Operator<'a> {
    fn new(s: &'a Scaled) -> Self {
        let lay = Layout::new(s);
        let minus: Vec<usize> = (0..s.m()).filter(|&i| s.banded[i]).collect();
        let rows = s.m() + minus.len() + usize::from(lay.maxent) + 1;
        let uu = linalg::matmul_adj(&s.u, &s.u);
        let mut col = vec![1.0; lay.len()];
        for i in 0..s.m() {
            if let Some(k) = lay.ord[i] {
                let n = uu[(i, i)].re.max(1e-12);
                col[Layout::delta(k)] = n;
                col[Layout::sp(k)] = n;
                col[Layout::sm(k)] = n;
            }
        }
        if let Some(g) = &s.gap {
            let n = g.norm().max(1e-12);
            col[lay.dd()] = n;
            col[lay.t()] = n;
        }
        let cscale = lay
            .cost()
            .iter()
            .zip(&col)
            .fold(0.0f64, |m, (c, d)| m.max(c * d))
            .max(1e-300);
        Self {
            s,
            lay,
            minus,
            rows,
            col,
            cscale,
        }
    }

    /// Unscaled value of linear variable `j`.
    fn linear(&self, p: &Point, j: usize) -> f64 {
        self.col[j] * p.xl[j]
    }

    fn g_row(&self) -> usize {
        self.s.m() + self.minus.len()
    }

    fn tr_row(&self) -> usize {
        self.rows - 1
    }

    fn rhs(&self) -> DVector<f64> {
        let m = self.s.m();
        let mut b = DVector::zeros(self.rows);
        for i in 0..m {
            b[i] = self.s.target[i];
        }
        for (k, &i) in self.minus.iter().enumerate() {
            b[m + k] = -self.s.target[i];
        }
        b[self.tr_row()] = 1.0;
        b
    }

    fn cost(&self) -> Point {
        Point {
            x: CMatrix::zeros(self.s.d, self.s.d),
            xl: self.lay.cost().iter().zip(&self.col).map(|(c, d)| c * d / self.cscale).collect(),
        }
    }

    fn forward(&self, p: &Point) -> DVector<f64> {
        let m = self.s.m();
        let ax = self.s.apply(&p.x);
        let mut out = DVector::zeros(self.rows);
        for i in 0..m {
            out[i] = ax[i];
            if let Some(k) = self.lay.ord[i] {
                out[i] += -self.linear(p, Layout::delta(k)) + self.linear(p, Layout::sp(k));
            }
        }
        for (j, &i) in self.minus.iter().enumerate() {
            let k = self.lay.ord[i].expect("banded");
            out[m + j] = -ax[i] - self.linear(p, Layout::delta(k)) + self.linear(p, Layout::sm(k));
        }
        if let Some(g) = &self.s.gap {
            out[self.g_row()] =
                linalg::trace_product_re(g, &p.x) - self.linear(p, self.lay.dd()) + self.linear(p, self.lay.t());
        }
        out[self.tr_row()] = linalg::trace(&p.x).re;
        out
    }

    fn adjoint(&self, y: &DVector<f64>) -> Point {
        let m = self.s.m();
        let mut coeffs: Vec<f64> = (0..m).map(|i| y[i]).collect();
        let mut xl = vec![0.0; self.lay.len()];
        for i in 0..m {
            if let Some(k) = self.lay.ord[i] {
                xl[Layout::delta(k)] -= y[i];
                xl[Layout::sp(k)] += y[i];
            }
        }
        for (j, &i) in self.minus.iter().enumerate() {
            let k = self.lay.ord[i].expect("banded");
            coeffs[i] -= y[m + j];
            xl[Layout::delta(k)] -= y[m + j];
            xl[Layout::sm(k)] += y[m + j];
        }
        let mut x = self.s.adjoint(&coeffs);
        if let Some(g) = &self.s.gap {
            let yg = y[self.g_row()];
            x += g * C64::new(yg, 0.0);
            xl[self.lay.dd()] -= yg;
            xl[self.lay.t()] += yg;
        }
        let ytr = y[self.tr_row()];
        for k in 0..self.s.d {
            x[(k, k)] += ytr;
        }
        for (v, d) in xl.iter_mut().zip(&self.col) {
            *v *= d;
        }
        Point { x, xl }
    }

    /// `A Aᵀ` in closed form from the operator overlaps.
    fn gram(&self) -> DMatrix<f64> {
        let s = self.s;
        let m = s.m();
        let uu = linalg::matmul_adj(&s.u, &s.u);
        let mut gram = DMatrix::zeros(self.rows, self.rows);
        // Operator of each row as (sign, record) or an extra operator.
        let mut op_of = Vec::with_capacity(self.rows);
        for i in 0..m {
            op_of.push((1.0, i));
        }
        for &i in &self.minus {
            op_of.push((-1.0, i));
        }
        for (r, &(sr, i)) in op_of.iter().enumerate() {
            for (c, &(sc, k)) in op_of.iter().enumerate().skip(r) {
                let v = sr * sc * uu[(i, k)].norm_sqr();
                gram[(r, c)] = v;
                gram[(c, r)] = v;
            }
        }
        // Linear overlaps of the band rows.
        let sq = |j: usize| self.col[j] * self.col[j];
        for i in 0..m {
            if let Some(k) = self.lay.ord[i] {
                gram[(i, i)] += sq(Layout::delta(k)) + sq(Layout::sp(k));
            }
        }
        for (j, &i) in self.minus.iter().enumerate() {
            let k = self.lay.ord[i].expect("banded");
            gram[(m + j, m + j)] += sq(Layout::delta(k)) + sq(Layout::sm(k));
            gram[(i, m + j)] += sq(Layout::delta(k));
            gram[(m + j, i)] += sq(Layout::delta(k));
        }
        let norms: Vec<f64> = (0..m).map(|i| uu[(i, i)].re).collect();
        let tr = self.tr_row();
        for (r, &(sr, i)) in op_of.iter().enumerate() {
            gram[(r, tr)] = sr * norms[i];
            gram[(tr, r)] = sr * norms[i];
        }
        gram[(tr, tr)] = s.d as f64;
        if let Some(g) = &s.gap {
            let gr = self.g_row();
            let gu = s.apply(g);
            for (r, &(sr, i)) in op_of.iter().enumerate() {
                gram[(r, gr)] = sr * gu[i];
                gram[(gr, r)] = sr * gu[i];
            }
            gram[(gr, gr)] = linalg::trace_product_re(g, g) + sq(self.lay.dd()) + sq(self.lay.t());
            let tg = linalg::trace(g).re;
            gram[(gr, tr)] = tg;
            gram[(tr, gr)] = tg;
        }
        gram
    }
}

fn project_cone(p: &Point) -> Point {
    Point {
        x: linalg::project_psd(&p.x),
        xl: p.xl.iter().map(|v| v.max(0.0)).collect(),
    }
}

pub(crate) fn solve(s: &Scaled, config: &SolverConfig) -> Result<RawSolution> {
    let op = Operator::new(s);
    let gram = op.gram();
    let scale = gram.diagonal().amax().max(1e-300);
    let mut reg = 0.0;
    let chol = loop {
        let mut g = gram.clone();
        for i in 0..g.nrows() {
            g[(i, i)] += reg;
        }
        if let Some(c) = Cholesky::new(g) {
            break c;
        }
        reg = if reg == 0.0 { 1e-13 * scale } else { reg * 100.0 };
        if reg > 1e-6 * scale {
            return Err(Error::Numerical("constraint Gram matrix is singular".into()));
        }
    };
    let b = op.rhs();
    let c = op.cost();
    let nl = op.lay.len();
    let project_affine = |v: &Point| -> Point {
        let r = op.forward(v) - &b;
        let w = chol.solve(&r);
        v.axpy(-1.0, &op.adjoint(&w))
    };

    let d = s.d;
    let mut sc = Point {
        x: CMatrix::identity(d, d) / C64::new(d as f64, 0.0),
        xl: vec![0.0; nl],
    };
    let mut lam = Point::zeros(d, nl);
    let mut sigma = INITIAL_PENALTY;
    let mut history = Vec::new();
    let cap = config.iteration_cap();
    let mut status = SolveStatus::MaxIters;
    let mut iterations = cap;
    let mut residuals = Residuals::default();

    for iter in 1..=cap {
        let v = sc.axpy(-1.0, &lam).axpy(-1.0 / sigma, &c);
        let xt = project_affine(&v);
        let xh = xt.scale(RELAXATION).axpy(1.0 - RELAXATION, &sc);
        let s_new = project_cone(&xh.axpy(1.0, &lam));
        lam = lam.axpy(1.0, &xh).axpy(-1.0, &s_new);
        let r_prim = xt.axpy(-1.0, &s_new).norm();
        sc = s_new;
        history.push(r_prim);

        if iter % CHECK_EVERY == 0 || iter == cap {
            let z = lam.scale(-sigma);
            let cz = c.axpy(-1.0, &z);
            let y = chol.solve(&op.forward(&cz));
            let rd = cz.axpy(-1.0, &op.adjoint(&y)).norm();
            let rp = (op.forward(&sc) - &b).amax();
            let pobj = c.dot(&sc) * op.cscale;
            let dobj = b.dot(&y) * op.cscale;
            let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
            residuals = Residuals {
                primal: rp,
                dual: rd,
                gap,
            };
            log::debug!("admm {iter}: pobj {pobj:.6e} rp {rp:.2e} rd {rd:.2e} gap {gap:.2e} σ {sigma:.2e}");
            if rp <= config.tol_primal && rd <= config.tol_dual && gap <= config.tol_gap {
                status = SolveStatus::Optimal;
                iterations = iter;
                break;
            }
            if dobj > 1e8 && rd * op.cscale <= 1e-8 * dobj {
                status = SolveStatus::Infeasible;
                iterations = iter;
                break;
            }
            if iter % BALANCE_EVERY == 0 && rp > 0.0 && rd > 0.0 {
                // Only react to a gross imbalance; frequent retuning of the
                // penalty stalls the gap on these degenerate problems.
                let factor = (rp / rd).sqrt().clamp(0.2, 5.0);
                if !(0.1..=10.0).contains(&factor) {
                    sigma *= factor;
                    lam = lam.scale(1.0 / factor);
                }
            }
        }
    }

    let deltas = op
        .lay
        .ord
        .iter()
        .map(|o| o.map_or(0.0, |k| op.linear(&sc, Layout::delta(k))))
        .collect();
    Ok(RawSolution {
        delta_maxent: op.lay.maxent.then(|| op.linear(&sc, op.lay.dd())),
        x: sc.x,
        deltas,
        status,
        iterations,
        residuals,
        history,
    })
}
