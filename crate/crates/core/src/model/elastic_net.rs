//! Elastic-net penalized logistic regression on a standardized design.
//!
//! Minimizes
//!
//! ```text
//! (1/n) Σ [log(1 + e^η) − y·η] + λ·(α‖β‖₁ + (1−α)/2·‖β‖₂²),   η = b + xᵀβ
//! ```
//!
//! by proximal Newton: each outer iteration builds the weighted least-squares
//! approximation of the loss at the current point, solves its penalized
//! version by cyclic coordinate descent with soft-thresholding, and takes a
//! backtracking step along the resulting direction so the objective never
//! increases.

use crate::error::{Error, Result};

const MIN_WEIGHT: f64 = 1e-5;
const MAX_INNER_SWEEPS: usize = 500;
const MAX_HALVINGS: usize = 40;

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^t)` without overflow.
pub fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// A fitting problem over an already standardized, column-major design.
#[derive(Debug, Clone)]
pub struct ElasticNetProblem {
    pub columns: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub lambda: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Objective at the start and after every outer iteration.
    pub objective_trace: Vec<f64>,
}

impl ElasticNetProblem {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }

    fn linear_predictor(&self, intercept: f64, beta: &[f64]) -> Vec<f64> {
        let mut eta = vec![intercept; self.n()];
        for (col, &b) in self.columns.iter().zip(beta) {
            if b != 0.0 {
                for (e, &x) in eta.iter_mut().zip(col) {
                    *e += b * x;
                }
            }
        }
        eta
    }

    pub fn mean_loss(&self, intercept: f64, beta: &[f64]) -> f64 {
        let eta = self.linear_predictor(intercept, beta);
        eta.iter()
            .zip(&self.y)
            .map(|(&e, &y)| softplus(e) - y * e)
            .sum::<f64>()
            / self.n() as f64
    }

    /// Loss plus the ridge part of the penalty.
    pub fn smooth_value(&self, intercept: f64, beta: &[f64]) -> f64 {
        let ridge: f64 = beta.iter().map(|b| b * b).sum();
        self.mean_loss(intercept, beta) + 0.5 * self.lambda * (1.0 - self.alpha) * ridge
    }

    pub fn objective(&self, intercept: f64, beta: &[f64]) -> f64 {
        let l1: f64 = beta.iter().map(|b| b.abs()).sum();
        self.smooth_value(intercept, beta) + self.lambda * self.alpha * l1
    }

    /// Gradient of [`Self::smooth_value`]: `(∂/∂intercept, ∂/∂β)`.
    pub fn smooth_gradient(&self, intercept: f64, beta: &[f64]) -> (f64, Vec<f64>) {
        let n = self.n() as f64;
        let eta = self.linear_predictor(intercept, beta);
        let resid: Vec<f64> = eta.iter().zip(&self.y).map(|(&e, &y)| sigmoid(e) - y).collect();
        let g0 = resid.iter().sum::<f64>() / n;
        let g = self
            .columns
            .iter()
            .zip(beta)
            .map(|(col, &b)| {
                col.iter().zip(&resid).map(|(x, r)| x * r).sum::<f64>() / n
                    + self.lambda * (1.0 - self.alpha) * b
            })
            .collect();
        (g0, g)
    }

    /// Largest violation of the elastic-net subgradient optimality conditions.
    pub fn kkt_violation(&self, intercept: f64, beta: &[f64]) -> f64 {
        let (g0, g) = self.smooth_gradient(intercept, beta);
        let l1 = self.lambda * self.alpha;
        g.iter()
            .zip(beta)
            .map(|(&gj, &bj)| {
                if bj != 0.0 {
                    (gj + l1 * bj.signum()).abs()
                } else {
                    (gj.abs() - l1).max(0.0)
                }
            })
            .fold(g0.abs(), f64::max)
    }

    pub fn solve(&self, max_iters: usize, tolerance: f64) -> Result<Solution> {
        let n = self.n();
        let p = self.p();
        if n == 0 {
            return Err(Error::validation("train", "no training records"));
        }
        let nf = n as f64;
        let l1 = self.lambda * self.alpha;
        let l2 = self.lambda * (1.0 - self.alpha);

        let mean_y = self.y.iter().sum::<f64>() / nf;
        let clipped = mean_y.clamp(1e-6, 1.0 - 1e-6);
        let mut intercept = (clipped / (1.0 - clipped)).ln();
        let mut beta = vec![0.0; p];
        let mut current = self.objective(intercept, &beta);
        check_finite(current)?;
        let mut trace = vec![current];

        let mut converged = false;
        let mut iterations = 0;
        while iterations < max_iters {
            iterations += 1;

            let eta = self.linear_predictor(intercept, &beta);
            let mut w = Vec::with_capacity(n);
            let mut z = Vec::with_capacity(n);
            for (&e, &y) in eta.iter().zip(&self.y) {
                let pr = sigmoid(e);
                let wi = (pr * (1.0 - pr)).max(MIN_WEIGHT);
                w.push(wi);
                z.push(e + (y - pr) / wi);
            }
            let w_sum: f64 = w.iter().sum();
            let curvature: Vec<f64> = self
                .columns
                .iter()
                .map(|col| col.iter().zip(&w).map(|(x, wi)| wi * x * x).sum::<f64>() / nf)
                .collect();

            // Penalized weighted least squares by coordinate descent.
            let mut b0 = intercept;
            let mut b = beta.clone();
            let mut r: Vec<f64> = z.iter().zip(&eta).map(|(zi, ei)| zi - ei).collect();
            for _ in 0..MAX_INNER_SWEEPS {
                let mut max_delta: f64 = 0.0;
                let shift = r.iter().zip(&w).map(|(ri, wi)| ri * wi).sum::<f64>() / w_sum;
                if shift != 0.0 {
                    b0 += shift;
                    r.iter_mut().for_each(|ri| *ri -= shift);
                    max_delta = max_delta.max(shift.abs());
                }
                for j in 0..p {
                    let col = &self.columns[j];
                    let old = b[j];
                    let rho = col
                        .iter()
                        .zip(&w)
                        .zip(&r)
                        .map(|((x, wi), ri)| wi * x * ri)
                        .sum::<f64>()
                        / nf
                        + curvature[j] * old;
                    let denom = curvature[j] + l2;
                    let new = if denom > 0.0 {
                        soft_threshold(rho, l1) / denom
                    } else {
                        0.0
                    };
                    let delta = new - old;
                    if delta != 0.0 {
                        for (ri, x) in r.iter_mut().zip(col) {
                            *ri -= delta * x;
                        }
                        b[j] = new;
                        max_delta = max_delta.max(delta.abs());
                    }
                }
                if max_delta < 0.1 * tolerance {
                    break;
                }
            }

            // Backtracking along the Newton direction.
            let d0 = b0 - intercept;
            let d: Vec<f64> = b.iter().zip(&beta).map(|(nb, ob)| nb - ob).collect();
            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..MAX_HALVINGS {
                let cand0 = intercept + step * d0;
                let cand: Vec<f64> = beta.iter().zip(&d).map(|(bj, dj)| bj + step * dj).collect();
                let value = self.objective(cand0, &cand);
                check_finite(value)?;
                if value <= current {
                    accepted = Some((cand0, cand, value));
                    break;
                }
                step *= 0.5;
            }

            let Some((new0, new_beta, value)) = accepted else {
                // No descent along the direction: numerically at the optimum.
                converged = true;
                trace.push(current);
                break;
            };
            let max_change = new_beta
                .iter()
                .zip(&beta)
                .map(|(a, b)| (a - b).abs())
                .fold((new0 - intercept).abs(), f64::max);
            intercept = new0;
            beta = new_beta;
            current = value;
            trace.push(current);
            if max_change < tolerance {
                converged = true;
                break;
            }
        }

        Ok(Solution {
            intercept,
            coefficients: beta,
            converged,
            iterations,
            objective_trace: trace,
        })
    }
}

fn check_finite(value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Numerical(format!("objective became {value}")))
    }
}
