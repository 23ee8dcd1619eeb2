//! Entropic transport over zero-diagonal doubly stochastic matrices.
//!
//! Solves `min Σ_{i≠j} w_ij c_ij − ε H(w)` subject to unit row and column
//! sums with `w_ii = 0`, by Sinkhorn scaling in the log domain:
//!
//! ```text
//! f_i = −ε log Σ_{j≠i} exp((g_j − c_ij) / ε)
//! g_j = −ε log Σ_{i≠j} exp((f_i − c_ij) / ε)
//! w_ij = exp((f_i + g_j − c_ij) / ε)
//! ```
//!
//! After each column update the columns sum to one and the residual is the
//! L1 row deviation `Σ_i |Σ_j w_ij − 1|`, which cannot increase from one
//! sweep to the next at fixed `ε`.
//!
//! Plain scaling crawls on nearly degenerate blocks, so every sweep also
//! tries a damped Newton step on the dual potentials followed by the same
//! row/column normalization. The Newton candidate is kept only when its
//! residual is no larger than the plain sweep's, which preserves the
//! non-increasing residual.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 0.05;
pub const DEFAULT_MAX_SWEEPS: usize = 1000;
pub const DEFAULT_TOL: f64 = 1e-6;

/// Sweeps allowed per warm-up stage when annealing.
const STAGE_SWEEPS: usize = 50;
/// Warm-up stages stop once their residual drops below this.
const STAGE_TOL: f64 = 1e-3;

/// Whether the transport objective uses the cost as given or negated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CostSign {
    /// Minimize `Σ w_ij c_ij`: mass moves away from similar pairs.
    #[default]
    Minimize,
    /// Minimize `−Σ w_ij c_ij`: mass moves toward similar pairs.
    Maximize,
}

impl CostSign {
    pub fn name(self) -> &'static str {
        match self {
            Self::Minimize => "minimize",
            Self::Maximize => "maximize",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornConfig {
    /// Entropic regularization, in cost units.
    pub epsilon: f64,
    /// Upper bound on the total number of sweeps.
    pub max_sweeps: usize,
    /// Convergence threshold on the L1 row residual.
    pub tol: f64,
    pub sign: CostSign,
    /// Start from `ε` near the cost range and halve it down to `epsilon`,
    /// warm-starting each stage from the previous potentials.
    pub anneal: bool,
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            tol: DEFAULT_TOL,
            sign: CostSign::Minimize,
            anneal: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    k: usize,
    weights: Vec<f64>,
    pub epsilon: f64,
    /// Sweeps executed over all stages.
    pub iterations: usize,
    /// Final L1 row residual.
    pub residual: f64,
    pub converged: bool,
    /// Residual after every sweep at the target `ε`.
    pub residual_history: Vec<f64>,
}

impl TransportPlan {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Row-major `k × k` weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.k + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.k..(i + 1) * self.k]
    }

    /// Largest `|row sum − 1|` and `|column sum − 1|`.
    pub fn marginal_errors(&self) -> (f64, f64) {
        let k = self.k;
        let mut row_err = 0.0f64;
        let mut col = vec![0.0; k];
        for i in 0..k {
            let r: f64 = self.row(i).iter().sum();
            row_err = row_err.max((r - 1.0).abs());
            for (c, w) in col.iter_mut().zip(self.row(i)) {
                *c += w;
            }
        }
        let col_err = col.iter().fold(0.0f64, |m, c| m.max((c - 1.0).abs()));
        (row_err, col_err)
    }

    /// `Σ_{i≠j} w_ij c_ij` for a row-major cost matrix.
    pub fn linear_cost(&self, cost: &[f64]) -> f64 {
        let k = self.k;
        let mut total = 0.0;
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    total += self.weights[i * k + j] * cost[i * k + j];
                }
            }
        }
        total
    }
}

/// `log Σ exp(x)` over the entries that are not excluded.
fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// One row then column normalization; returns the L1 row residual.
fn sweep(f: &mut [f64], g: &mut [f64], c: &[f64], k: usize, eps: f64) -> f64 {
    for i in 0..k {
        let row = &c[i * k..(i + 1) * k];
        let gg = &*g;
        f[i] = -eps
            * log_sum_exp(
                (0..k)
                    .filter(move |&j| j != i)
                    .map(move |j| (gg[j] - row[j]) / eps),
            );
    }
    for j in 0..k {
        let ff = &*f;
        g[j] = -eps
            * log_sum_exp(
                (0..k)
                    .filter(move |&i| i != j)
                    .map(move |i| (ff[i] - c[i * k + j]) / eps),
            );
    }
    (0..k)
        .map(|i| {
            let s: f64 = (0..k)
                .filter(|&j| j != i)
                .map(|j| ((f[i] + g[j] - c[i * k + j]) / eps).exp())
                .sum();
            (s - 1.0).abs()
        })
        .sum()
}

/// `ε Σ_{i≠j} w_ij − Σ f − Σ g`, the negated dual objective.
fn dual_loss(f: &[f64], g: &[f64], c: &[f64], k: usize, eps: f64) -> f64 {
    let mut mass = 0.0;
    for i in 0..k {
        for j in (0..k).filter(|&j| j != i) {
            mass += ((f[i] + g[j] - c[i * k + j]) / eps).exp();
        }
    }
    eps * mass - f.iter().sum::<f64>() - g.iter().sum::<f64>()
}

/// Damped Newton step on the dual with `g[k−1]` pinned, which removes the
/// `(f + t, g − t)` null direction. Near-permutation plans leave the Hessian
/// almost singular, so a growing ridge is tried until some step decreases
/// the dual loss. `None` if none does.
fn newton_point(
    f: &[f64],
    g: &[f64],
    c: &[f64],
    k: usize,
    eps: f64,
) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = 2 * k - 1;
    let mut h = DMatrix::<f64>::zeros(n, n);
    let mut grad = DVector::<f64>::zeros(n);
    let mut rows = vec![0.0; k];
    let mut cols = vec![0.0; k];
    for i in 0..k {
        for j in (0..k).filter(|&j| j != i) {
            let w = ((f[i] + g[j] - c[i * k + j]) / eps).exp();
            rows[i] += w;
            cols[j] += w;
            if j < k - 1 {
                h[(i, k + j)] = w;
                h[(k + j, i)] = w;
            }
        }
    }
    for i in 0..k {
        h[(i, i)] = rows[i];
        grad[i] = 1.0 - rows[i];
    }
    for j in 0..k - 1 {
        h[(k + j, k + j)] = cols[j];
        grad[k + j] = 1.0 - cols[j];
    }
    let base = dual_loss(f, g, c, k, eps);
    for ridge in [0.0, 1e-10, 1e-7, 1e-4, 1e-2, 1.0] {
        let mut hr = h.clone();
        for d in 0..n {
            hr[(d, d)] += ridge;
        }
        let Some(chol) = hr.cholesky() else { continue };
        let step = chol.solve(&grad) * eps;
        if !step.iter().all(|v| v.is_finite()) {
            continue;
        }
        let slope = grad.dot(&step);
        let mut t = 1.0;
        while t > 1e-3 {
            let nf: Vec<f64> = (0..k).map(|i| f[i] + t * step[i]).collect();
            let ng: Vec<f64> = (0..k)
                .map(|j| {
                    if j < k - 1 {
                        g[j] + t * step[k + j]
                    } else {
                        g[j]
                    }
                })
                .collect();
            if dual_loss(&nf, &ng, c, k, eps) <= base - 1e-4 * t * slope {
                return Some((nf, ng));
            }
            t *= 0.5;
        }
    }
    None
}

/// Solves for a `k × k` plan from a row-major cost matrix. Diagonal costs
/// are ignored.
pub fn ot_reweight(cost: &[f64], k: usize, cfg: &SinkhornConfig) -> Result<TransportPlan> {
    if k < 2 {
        return Err(Error::BlockTooSmall(k));
    }
    if cost.len() != k * k {
        return Err(Error::DimensionMismatch(format!(
            "cost has {} entries, expected {k}x{k}",
            cost.len()
        )));
    }
    if !(cfg.epsilon.is_finite() && cfg.epsilon > 0.0) {
        return Err(Error::InvalidEpsilon(cfg.epsilon));
    }
    if !(cfg.tol.is_finite() && cfg.tol > 0.0) {
        return Err(Error::InvalidTolerance(cfg.tol));
    }
    let off_diag = |idx: usize| idx / k != idx % k;
    if let Some(index) = (0..k * k).find(|&i| off_diag(i) && !cost[i].is_finite()) {
        return Err(Error::NonFinite {
            what: "transport cost",
            index,
        });
    }

    if k == 2 {
        return Ok(TransportPlan {
            k,
            weights: vec![0.0, 1.0, 1.0, 0.0],
            epsilon: cfg.epsilon,
            iterations: 0,
            residual: 0.0,
            converged: true,
            residual_history: Vec::new(),
        });
    }

    // The plan is unchanged by a constant shift; centre costs at zero.
    let sign = match cfg.sign {
        CostSign::Minimize => 1.0,
        CostSign::Maximize => -1.0,
    };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in (0..k * k).filter(|&i| off_diag(i)) {
        lo = lo.min(sign * cost[i]);
        hi = hi.max(sign * cost[i]);
    }
    let c: Vec<f64> = (0..k * k)
        .map(|i| {
            if off_diag(i) {
                sign * cost[i] - lo
            } else {
                f64::INFINITY
            }
        })
        .collect();

    let mut schedule = Vec::new();
    if cfg.anneal {
        let mut e = hi - lo;
        while e > cfg.epsilon {
            schedule.push(e);
            e *= 0.5;
        }
    }
    schedule.push(cfg.epsilon);

    let mut f = vec![0.0; k];
    let mut g = vec![0.0; k];
    let mut sweeps = 0;
    let mut residual = f64::INFINITY;
    let mut history = Vec::new();
    let last = schedule.len() - 1;

    for (stage, &eps) in schedule.iter().enumerate() {
        let final_stage = stage == last;
        let mut stage_sweeps = 0;
        while sweeps < cfg.max_sweeps {
            let (mut pf, mut pg) = (f.clone(), g.clone());
            let plain = sweep(&mut pf, &mut pg, &c, k, eps);
            residual = plain;
            (f, g) = match newton_point(&f, &g, &c, k, eps) {
                Some((mut nf, mut ng)) => {
                    let accelerated = sweep(&mut nf, &mut ng, &c, k, eps);
                    if accelerated <= plain {
                        residual = accelerated;
                        (nf, ng)
                    } else {
                        (pf, pg)
                    }
                }
                None => (pf, pg),
            };
            sweeps += 1;
            stage_sweeps += 1;
            if final_stage {
                history.push(residual);
                if residual <= cfg.tol {
                    break;
                }
            } else if residual <= STAGE_TOL.max(cfg.tol) || stage_sweeps >= STAGE_SWEEPS {
                break;
            }
        }
    }

    let eps = cfg.epsilon;
    let mut weights = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            if i != j {
                weights[i * k + j] = ((f[i] + g[j] - c[i * k + j]) / eps).exp();
            }
        }
    }
    Ok(TransportPlan {
        k,
        weights,
        epsilon: eps,
        iterations: sweeps,
        residual,
        converged: residual <= cfg.tol,
        residual_history: history,
    })
}
