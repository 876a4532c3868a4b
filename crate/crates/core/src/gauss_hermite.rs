//! Gauss–Hermite quadrature.
//!
//! Nodes come from the Golub–Welsch eigenproblem and are polished by Newton
//! steps on the normalized Hermite function. Weights are evaluated from the
//! Christoffel–Darboux sum so that the "scaled" weights `w_k e^{x_k²}` stay
//! accurate even at the outermost nodes, where the plain weights underflow.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fock::hermite_wavefunctions;

#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    /// Weights for `∫ f(x) e^{−x²} dx`.
    pub weights: Vec<f64>,
    /// `weights[k] · e^{nodes[k]²}`, for `∫ g(x) dx` with `g` Gaussian-decaying.
    pub scaled_weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 || order > 400 {
            return Err(Error::Domain(format!("unsupported Gauss-Hermite order {order}")));
        }
        let mut jacobi = DMatrix::<f64>::zeros(order, order);
        for k in 1..order {
            let b = (k as f64 / 2.0).sqrt();
            jacobi[(k - 1, k)] = b;
            jacobi[(k, k - 1)] = b;
        }
        let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
        nodes.sort_by(f64::total_cmp);

        let n = order;
        for x in nodes.iter_mut() {
            for _ in 0..4 {
                let psi = hermite_wavefunctions(n, *x);
                let deriv = (2.0 * n as f64).sqrt() * psi[n - 1] - *x * psi[n];
                if deriv == 0.0 {
                    break;
                }
                let step = psi[n] / deriv;
                *x -= step;
                if step.abs() < 1e-15 * (1.0 + x.abs()) {
                    break;
                }
            }
        }

        let mut weights = Vec::with_capacity(n);
        let mut scaled_weights = Vec::with_capacity(n);
        for &x in &nodes {
            let psi = hermite_wavefunctions(n - 1, x);
            let sum: f64 = psi.iter().map(|v| v * v).sum();
            let scaled = 1.0 / sum;
            scaled_weights.push(scaled);
            weights.push(scaled * (-x * x).exp());
        }
        Ok(Self {
            nodes,
            weights,
            scaled_weights,
        })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// `∫ f(x) dx` for integrands that decay like a Gaussian of unit width.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.scaled_weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// `∫ f(x) dx` after the substitution `x = t / √a`, suited to integrands
    /// whose Gaussian envelope is `e^{−a x²}`.
    pub fn integrate_scaled(&self, a: f64, f: impl Fn(f64) -> f64) -> f64 {
        let s = 1.0 / a.sqrt();
        self.nodes
            .iter()
            .zip(&self.scaled_weights)
            .map(|(&t, &w)| w * s * f(t * s))
            .sum()
    }

    /// Nodes and weights for `∫ g(x) dx` with envelope `e^{−a x²}`.
    pub fn scaled_rule(&self, a: f64) -> Vec<(f64, f64)> {
        let s = 1.0 / a.sqrt();
        self.nodes
            .iter()
            .zip(&self.scaled_weights)
            .map(|(&t, &w)| (t * s, w * s))
            .collect()
    }
}
