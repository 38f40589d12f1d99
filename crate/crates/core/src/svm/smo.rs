//! Platt's sequential minimal optimization for the soft-margin dual
//!
//! ```text
//! max  sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij
//! s.t. 0 <= a_i <= C,  sum_i a_i y_i = 0
//! ```
//!
//! The outer loop alternates full sweeps with sweeps over unbounded
//! multipliers. For each KKT violator the partner is chosen by the
//! `max |E1 - E2|` heuristic, then by scanning unbounded and finally all
//! multipliers from seeded random offsets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::KernelSpec;
use crate::features::FeatureVector;

/// Dual solution in the `f(x) = sum_i a_i y_i K(x_i, x) + bias` convention.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub objective: f64,
    /// Successful pair updates.
    pub iterations: usize,
    /// Largest KKT violation left at exit.
    pub max_violation: f64,
    pub converged: bool,
}

pub(crate) struct SmoParams {
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

pub(crate) fn gram_matrix(xs: &[FeatureVector], kernel: &KernelSpec) -> Vec<Vec<f64>> {
    (0..xs.len())
        .into_par_iter()
        .map(|i| xs.iter().map(|xj| kernel.eval_unchecked(&xs[i], xj)).collect())
        .collect()
}

/// Dual objective `sum a - 1/2 a^T Q a` with `Q_ij = y_i y_j K_ij`.
pub fn dual_objective(alpha: &[f64], y: &[f64], gram: &[Vec<f64>]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * gram[i][j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

struct Smo<'a> {
    k: &'a [Vec<f64>],
    y: &'a [f64],
    c: f64,
    tol: f64,
    alpha: Vec<f64>,
    // error cache: f(x_i) - y_i for every i
    err: Vec<f64>,
    bias: f64,
    rng: ChaCha8Rng,
    steps: usize,
}

// Relative step size below which a pair update counts as no progress.
const STEP_EPS: f64 = 1e-12;

impl Smo<'_> {
    fn bound_eps(&self) -> f64 {
        1e-12 * self.c.max(1.0)
    }

    fn is_free(&self, i: usize) -> bool {
        let e = self.bound_eps();
        self.alpha[i] > e && self.alpha[i] < self.c - e
    }

    fn violates_kkt(&self, i: usize) -> bool {
        let r = self.err[i] * self.y[i];
        (r < -self.tol && self.alpha[i] < self.c) || (r > self.tol && self.alpha[i] > 0.0)
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1, a2) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (e1, e2) = (self.err[i1], self.err[i2]);
        let s = y1 * y2;
        let c = self.c;
        let (lo, hi) = if y1 != y2 {
            ((a2 - a1).max(0.0), (c + a2 - a1).min(c))
        } else {
            ((a1 + a2 - c).max(0.0), (a1 + a2).min(c))
        };
        if hi - lo <= self.bound_eps() {
            return false;
        }
        let (k11, k12, k22) = (self.k[i1][i1], self.k[i1][i2], self.k[i2][i2]);
        let eta = k11 + k22 - 2.0 * k12;
        let mut a2_new = if eta > 0.0 {
            (a2 + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // Degenerate curvature: compare the pair objective at both ends.
            let f1 = y1 * (e1 - self.bias) - a1 * k11 - s * a2 * k12;
            let f2 = y2 * (e2 - self.bias) - s * a1 * k12 - a2 * k22;
            let psi = |a2v: f64| {
                let a1v = a1 + s * (a2 - a2v);
                a1v * f1 + a2v * f2 + 0.5 * a1v * a1v * k11 + 0.5 * a2v * a2v * k22 + s * a1v * a2v * k12
            };
            let (at_lo, at_hi) = (psi(lo), psi(hi));
            if at_lo < at_hi - STEP_EPS {
                lo
            } else if at_lo > at_hi + STEP_EPS {
                hi
            } else {
                a2
            }
        };
        let be = self.bound_eps();
        if a2_new < be {
            a2_new = 0.0;
        } else if a2_new > c - be {
            a2_new = c;
        }
        if (a2_new - a2).abs() < STEP_EPS * (a2_new + a2 + STEP_EPS) {
            return false;
        }
        let mut a1_new = a1 + s * (a2 - a2_new);
        if a1_new < be {
            a1_new = 0.0;
        } else if a1_new > c - be {
            a1_new = c;
        }

        let d1 = y1 * (a1_new - a1);
        let d2 = y2 * (a2_new - a2);
        let b1 = self.bias - e1 - d1 * k11 - d2 * k12;
        let b2 = self.bias - e2 - d1 * k12 - d2 * k22;
        let free1 = a1_new > 0.0 && a1_new < c;
        let free2 = a2_new > 0.0 && a2_new < c;
        let b_new = if free1 {
            b1
        } else if free2 {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        let db = b_new - self.bias;
        let (row1, row2) = (&self.k[i1], &self.k[i2]);
        for (i, e) in self.err.iter_mut().enumerate() {
            *e += d1 * row1[i] + d2 * row2[i] + db;
        }
        self.alpha[i1] = a1_new;
        self.alpha[i2] = a2_new;
        self.bias = b_new;
        self.steps += 1;
        true
    }

    fn examine(&mut self, i2: usize) -> bool {
        if !self.violates_kkt(i2) {
            return false;
        }
        let n = self.alpha.len();
        let free: Vec<usize> = (0..n).filter(|&i| self.is_free(i)).collect();
        if free.len() > 1 {
            let e2 = self.err[i2];
            let best = free
                .iter()
                .copied()
                .filter(|&i| i != i2)
                .max_by(|&a, &b| (self.err[a] - e2).abs().total_cmp(&(self.err[b] - e2).abs()).then(b.cmp(&a)));
            if let Some(i1) = best {
                if self.take_step(i1, i2) {
                    return true;
                }
            }
        }
        if !free.is_empty() {
            let start = self.rng.random_range(0..free.len());
            for k in 0..free.len() {
                if self.take_step(free[(start + k) % free.len()], i2) {
                    return true;
                }
            }
        }
        let start = self.rng.random_range(0..n);
        (0..n).any(|k| self.take_step((start + k) % n, i2))
    }

    fn max_violation(&self) -> f64 {
        (0..self.alpha.len())
            .map(|i| {
                let r = self.err[i] * self.y[i];
                let mut v: f64 = 0.0;
                if self.alpha[i] < self.c {
                    v = v.max(-r);
                }
                if self.alpha[i] > 0.0 {
                    v = v.max(r);
                }
                v
            })
            .fold(0.0, f64::max)
    }

    /// Bias from the final multipliers: mean over free vectors, or the
    /// midpoint of the feasible interval when every multiplier sits at a bound.
    fn canonical_bias(&self) -> f64 {
        let n = self.alpha.len();
        let free: Vec<usize> = (0..n).filter(|&i| self.is_free(i)).collect();
        // err_i - bias = g_i - y_i, so y_i - g_i = bias - err_i
        let target = |i: usize| self.bias - self.err[i];
        if !free.is_empty() {
            return free.iter().map(|&i| target(i)).sum::<f64>() / free.len() as f64;
        }
        let mut lower = f64::NEG_INFINITY;
        let mut upper = f64::INFINITY;
        for i in 0..n {
            let at_zero = self.alpha[i] <= 0.0;
            if (self.y[i] > 0.0) == at_zero {
                lower = lower.max(target(i));
            } else {
                upper = upper.min(target(i));
            }
        }
        match (lower.is_finite(), upper.is_finite()) {
            (true, true) => 0.5 * (lower + upper),
            (true, false) => lower,
            (false, true) => upper,
            (false, false) => self.bias,
        }
    }
}

/// Solves the dual on a precomputed Gram matrix. `y` holds ±1.
pub(crate) fn solve(gram: &[Vec<f64>], y: &[f64], params: &SmoParams) -> DualSolution {
    let n = y.len();
    let mut smo = Smo {
        k: gram,
        y,
        c: params.c,
        tol: params.tol,
        alpha: vec![0.0; n],
        err: y.iter().map(|yi| -yi).collect(),
        bias: 0.0,
        rng: ChaCha8Rng::seed_from_u64(params.seed),
        steps: 0,
    };

    let mut examine_all = true;
    let mut changed = 0usize;
    while (changed > 0 || examine_all) && smo.steps < params.max_iter {
        changed = 0;
        for i in 0..n {
            if smo.steps >= params.max_iter {
                break;
            }
            if examine_all || smo.is_free(i) {
                changed += usize::from(smo.examine(i));
            }
        }
        if examine_all {
            examine_all = false;
        } else if changed == 0 {
            examine_all = true;
        }
    }

    let bias = smo.canonical_bias();
    let db = bias - smo.bias;
    for e in &mut smo.err {
        *e += db;
    }
    smo.bias = bias;
    let max_violation = smo.max_violation();
    // The canonical bias may shift residuals by up to the stopping tolerance.
    let converged = smo.steps < params.max_iter && max_violation <= 2.0 * params.tol;
    DualSolution {
        objective: dual_objective(&smo.alpha, y, gram),
        alpha: smo.alpha,
        bias,
        iterations: smo.steps,
        max_violation,
        converged,
    }
}
