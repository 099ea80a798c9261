//! Limited-liability contracts when both parties have CARA utility.
//!
//! The optimal wage is the benchmark sharing rule with slope
//! `rho = gamma_P / (gamma_P + gamma_A)`, clamped to the wage box. For a given
//! action the intercept is pinned down by the participation constraint, which
//! leaves a one-dimensional search over the action.
//!
//! [`perturbation_path`] solves the auxiliary problems with the extra term
//! `eps E[u_P(-W)]` for a decreasing sequence of `eps`, state by state, and is
//! an independent route to the same one-sided optimum.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{agent_value_at, cara_lambda, is_feasible, overflowed, principal_value_at, Contract, Multipliers, ProblemSpec};
use crate::scalar::{bisect_increasing, expand_up, golden_max};
use crate::shock::compensated_sum;

/// Points in the coarse action grid (`a_max / 400` spacing).
pub const ACTION_GRID_INTERVALS: usize = 400;

/// Golden-section stopping width on the action.
pub const ACTION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaraDiagnostics {
    /// Upper end of the action box.
    pub a_max: f64,
    /// Upper end actually searched (smaller than `a_max` when an upper wage
    /// bound makes large actions infeasible).
    pub a_search: f64,
    /// The optimum landed within one grid step of `a_search`.
    pub action_at_search_bound: bool,
    /// `dV/da` at the returned action.
    pub action_gradient: f64,
    /// Some utility evaluation hit the exponent clamp.
    pub overflow: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaraSolution {
    /// Always [`Contract::Parametric`].
    pub contract: Contract,
    pub lambda: f64,
    /// Principal's expected utility at the optimum.
    pub value: f64,
    /// `E[u_A(W - kappa)] - u_A(y)`.
    pub pc_residual: f64,
    pub feasible: bool,
    pub multipliers: Multipliers,
    pub lower: f64,
    pub upper: Option<f64>,
    pub diagnostics: CaraDiagnostics,
}

impl CaraSolution {
    pub fn action(&self) -> f64 {
        self.contract.action()
    }

    /// `(rho, beta)` of the affine part `w(x) = rho x + beta`.
    pub fn slope_intercept(&self) -> (f64, f64) {
        match self.contract {
            Contract::Parametric { rho, beta, .. } => (rho, beta),
            Contract::StateWise { .. } => unreachable!("CARA solutions are parametric"),
        }
    }

    /// Wage as a function of realized output on `n` evenly spaced points.
    pub fn wage_curve(&self, x_lo: f64, x_hi: f64, n: usize) -> Result<Vec<(f64, f64)>> {
        let (rho, beta) = self.slope_intercept();
        wage_curve(rho, beta, self.lower, self.upper, x_lo, x_hi, n)
    }
}

/// Rows `(x, clamp(rho x + beta, lower, upper))` for `n` evenly spaced `x`.
pub fn wage_curve(
    rho: f64,
    beta: f64,
    lower: f64,
    upper: Option<f64>,
    x_lo: f64,
    x_hi: f64,
    n: usize,
) -> Result<Vec<(f64, f64)>> {
    if !(x_lo < x_hi) {
        return Err(Error::invalid("x_lo", format!("need x_lo < x_hi, got [{x_lo}, {x_hi}]")));
    }
    if n < 2 {
        return Err(Error::invalid("n", "a wage curve needs at least two points"));
    }
    let hi = upper.unwrap_or(f64::INFINITY);
    let step = (x_hi - x_lo) / (n - 1) as f64;
    Ok((0..n)
        .map(|j| {
            let x = if j == n - 1 { x_hi } else { x_lo + j as f64 * step };
            (x, (rho * x + beta).max(lower).min(hi))
        })
        .collect())
}

/// Action box used by the CARA searches.
pub fn action_box(p: &ProblemSpec) -> f64 {
    (10.0 / p.k).max(10.0 + 2.0 * (p.y + p.x0.abs() + p.shock.max_abs_atom()))
}

struct Family<'a> {
    p: &'a ProblemSpec,
    gp: f64,
    ga: f64,
    rho: f64,
    target: f64,
}

impl<'a> Family<'a> {
    fn new(p: &'a ProblemSpec) -> Result<Self> {
        let Some((gp, ga)) = p.cara_pair() else {
            return Err(Error::Unsupported(format!(
                "CARA solver needs CARA utilities for both parties, got {}/{}",
                p.principal.name(),
                p.agent.name()
            )));
        };
        Ok(Family { p, gp, ga, rho: gp / (gp + ga), target: p.reservation_utility() })
    }

    fn wages(&self, a: f64, beta: f64) -> Vec<f64> {
        (0..self.p.n_states()).map(|i| self.p.clamp_wage(self.rho * self.p.output(i, a) + beta)).collect()
    }

    /// Intercept that binds the participation constraint at action `a`, or
    /// `None` when even the maximal wage cannot meet it.
    fn intercept(&self, a: f64) -> Option<f64> {
        let p = self.p;
        let kappa = p.kappa(a);
        let n = p.n_states();
        let x_min = p.output(0, a);
        let x_max = p.output(n - 1, a);
        let pc = |beta: f64| {
            p.shock.expect(|i, _| p.agent.eval(p.clamp_wage(self.rho * p.output(i, a) + beta) - kappa)) - self.target
        };
        let lo = p.m - self.rho * x_max;
        let hi = match p.upper {
            Some(big_m) => {
                let hi = big_m - self.rho * x_min;
                if pc(hi) < 0.0 {
                    return None;
                }
                hi
            }
            None => expand_up(pc, lo, (p.y + kappa - lo).abs().max(1.0), 1e15)?,
        };
        Some(bisect_increasing(pc, lo, hi).x)
    }

    fn value(&self, a: f64) -> f64 {
        match self.intercept(a) {
            Some(beta) => principal_value_at(self.p, &self.wages(a, beta), a),
            None => f64::NEG_INFINITY,
        }
    }

    /// `dV/da` along the family, by the envelope identity
    /// `E[u_P'] - lambda kappa'(a) E[u_A']`.
    fn slope(&self, a: f64) -> f64 {
        let Some(beta) = self.intercept(a) else { return f64::NEG_INFINITY };
        let p = self.p;
        let wages = self.wages(a, beta);
        let kappa = p.kappa(a);
        let lambda = cara_lambda(self.gp, self.ga, beta, kappa);
        let up = p.shock.expect(|i, _| p.principal.deriv(p.output(i, a) - wages[i]));
        let ua = p.shock.expect(|i, _| p.agent.deriv(wages[i] - kappa));
        up - lambda * p.kappa_prime(a) * ua
    }
}

/// Solve the limited-liability problem for CARA/CARA utilities.
pub fn cara_ll_solve(p: &ProblemSpec) -> Result<CaraSolution> {
    let fam = Family::new(p)?;
    if let Some(big_m) = p.upper {
        if big_m < p.y {
            return Err(Error::Infeasible(format!(
                "upper wage bound M = {big_m} is below the reservation wage y = {}",
                p.y
            )));
        }
    }
    let a_max = action_box(p);
    let a_search = match p.upper {
        Some(big_m) => a_max.min((2.0 * (big_m - p.y) / p.k).sqrt()),
        None => a_max,
    };

    let (a, at_bound) = if a_search <= 0.0 {
        (0.0, true)
    } else {
        search_action(&fam, a_search)
    };

    let beta = match fam.intercept(a) {
        Some(beta) => beta,
        // Only reachable when a = 0 and M = y: every wage sits at M.
        None => p.upper.unwrap_or(p.y) - fam.rho * p.output(0, a),
    };
    let wages = fam.wages(a, beta);
    let kappa = p.kappa(a);
    let lambda = cara_lambda(fam.gp, fam.ga, beta, kappa);
    let contract = Contract::Parametric { rho: fam.rho, beta, a };
    let value = principal_value_at(p, &wages, a);
    let pc_residual = agent_value_at(p, &wages, a) - fam.target;
    let feasible = is_feasible(p, &contract, 1e-9).feasible;
    let multipliers = Multipliers::from_gap(p, &wages, a, lambda);
    let diagnostics = CaraDiagnostics {
        a_max,
        a_search,
        action_at_search_bound: at_bound,
        action_gradient: fam.slope(a),
        overflow: overflowed(p, &wages, a),
    };
    Ok(CaraSolution {
        contract,
        lambda,
        value,
        pc_residual,
        feasible,
        multipliers,
        lower: p.m,
        upper: p.upper,
        diagnostics,
    })
}

/// Grid scan, golden-section refinement, then a bisection on the envelope
/// derivative inside the refined bracket.
fn search_action(fam: &Family<'_>, a_search: f64) -> (f64, bool) {
    let step = a_search / ACTION_GRID_INTERVALS as f64;
    let grid: Vec<f64> = (0..=ACTION_GRID_INTERVALS).map(|j| j as f64 * step).collect();
    let values: Vec<f64> = grid.iter().map(|&a| fam.value(a)).collect();
    let best = values
        .iter()
        .enumerate()
        .fold(0, |best, (j, v)| if *v > values[best] { j } else { best });
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(ACTION_GRID_INTERVALS)];
    let (a_golden, _) = golden_max(|a| fam.value(a), lo, hi, ACTION_TOL);

    // V is C^1 along the family; its slope changes sign at the optimum.
    let slope = |a: f64| -fam.slope(a);
    let a = if slope(lo) <= 0.0 && slope(hi) > 0.0 {
        let root = bisect_increasing(slope, lo, hi).x;
        if (root - a_golden).abs() <= 2.0 * ACTION_TOL + step {
            root
        } else {
            a_golden
        }
    } else {
        a_golden
    };
    (a, best == ACTION_GRID_INTERVALS)
}

/// Optimum of the perturbed problem for one `eps`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbedSolution {
    pub epsilon: f64,
    /// Always [`Contract::StateWise`].
    pub contract: Contract,
    pub lambda: f64,
    /// Lower-bound multipliers, one per state.
    pub z: Vec<f64>,
    /// Unperturbed objective `E[u_P(X - W)]` at the perturbed optimum.
    pub value: f64,
    /// `E[u_P(X - W)] + eps E[u_P(-W)]`.
    pub perturbed_value: f64,
    pub pc_residual: f64,
    /// Action stationarity residual of the perturbed system.
    pub action_residual: f64,
    /// `E[W^2]`.
    pub second_moment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationPath {
    pub steps: Vec<PerturbedSolution>,
    pub a_max: f64,
    /// Bound on `E[W_eps^2]` valid for every `0 < eps < 1` (needs `m >= 0`).
    pub c_max: Option<f64>,
}

/// `2^-1, 2^-2, ..., 2^-n`.
pub fn halving_schedule(n: u32) -> Vec<f64> {
    (1..=n).map(|k| 0.5f64.powi(k as i32)).collect()
}

/// Solve the perturbed problem for a single `eps`.
pub fn perturbed_solve(p: &ProblemSpec, epsilon: f64) -> Result<PerturbedSolution> {
    let solver = Perturbed::new(p)?;
    solver.solve(epsilon, None)
}

/// Solve along `schedule`, warm-starting each step from the previous action.
pub fn perturbation_path(p: &ProblemSpec, schedule: &[f64]) -> Result<PerturbationPath> {
    let solver = Perturbed::new(p)?;
    let mut steps = Vec::with_capacity(schedule.len());
    let mut warm = None;
    for &eps in schedule {
        let s = solver.solve(eps, warm)?;
        warm = Some(s.contract.action());
        steps.push(s);
    }
    Ok(PerturbationPath { steps, a_max: solver.a_max, c_max: second_moment_bound(p, solver.a_max) })
}

struct Perturbed<'a> {
    p: &'a ProblemSpec,
    gp: f64,
    ga: f64,
    a_max: f64,
}

fn log_add_exp(x: f64, y: f64) -> f64 {
    let hi = x.max(y);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + ((x - hi).exp() + (y - hi).exp()).ln()
}

impl<'a> Perturbed<'a> {
    fn new(p: &'a ProblemSpec) -> Result<Self> {
        let Some((gp, ga)) = p.cara_pair() else {
            return Err(Error::Unsupported("perturbation path needs CARA utilities for both parties".into()));
        };
        if p.upper.is_some() {
            return Err(Error::Unsupported("perturbation path is defined for the one-sided problem".into()));
        }
        Ok(Perturbed { p, gp, ga, a_max: action_box(p) })
    }

    /// `ln(exp(-gamma_P X_i) + eps)` per state.
    fn state_logs(&self, a: f64, log_eps: f64) -> Vec<f64> {
        (0..self.p.n_states()).map(|i| log_add_exp(-self.gp * self.p.output(i, a), log_eps)).collect()
    }

    /// Unclamped stationary wage in each state for multiplier `exp(t)`.
    ///
    /// Setting the wage derivative of the perturbed Lagrangian to zero,
    /// `gamma_P e^{gamma_P W} (e^{-gamma_P X} + eps) = lambda gamma_A e^{-gamma_A (W - kappa)}`,
    /// which is linear in `W` after taking logs.
    fn shadow<'s>(&self, logs: &'s [f64], t: f64, kappa: f64) -> impl Iterator<Item = f64> + 's {
        let shift = (self.ga / self.gp).ln() + self.ga * kappa;
        let denom = self.gp + self.ga;
        logs.iter().map(move |l| (t + shift - l) / denom)
    }

    /// Log-multiplier that binds the participation constraint at action `a`.
    fn bind(&self, logs: &[f64], kappa: f64) -> Result<f64> {
        let p = self.p;
        let target = p.reservation_utility();
        let pc = |t: f64| {
            let wages: Vec<f64> = self.shadow(logs, t, kappa).map(|w| w.max(p.m)).collect();
            p.shock.expect(|i, _| p.agent.eval(wages[i] - kappa)) - target
        };
        // Every shadow wage is at or below m here.
        let shift = (self.ga / self.gp).ln() + self.ga * kappa;
        let t_lo = logs.iter().map(|l| (self.gp + self.ga) * p.m + l - shift).fold(f64::INFINITY, f64::min);
        let t_hi = expand_up(pc, t_lo, 1.0, t_lo + 1e6).ok_or_else(|| Error::NonBinding("perturbed multiplier".into()))?;
        Ok(bisect_increasing(pc, t_lo, t_hi).x)
    }

    /// `(wages, log-multiplier)` for action `a`.
    fn state_wages(&self, a: f64, log_eps: f64) -> Result<(Vec<f64>, f64)> {
        let kappa = self.p.kappa(a);
        let logs = self.state_logs(a, log_eps);
        let t = self.bind(&logs, kappa)?;
        let wages = self.shadow(&logs, t, kappa).map(|w| w.max(self.p.m)).collect();
        Ok((wages, t))
    }

    /// Derivative of the perturbed value in `a` (decreasing).
    fn action_slope(&self, a: f64, log_eps: f64) -> Result<f64> {
        let p = self.p;
        let (wages, t) = self.state_wages(a, log_eps)?;
        let kappa = p.kappa(a);
        let up = p.shock.expect(|i, _| p.principal.deriv(p.output(i, a) - wages[i]));
        let ua = p.shock.expect(|i, _| p.agent.deriv(wages[i] - kappa));
        Ok(up - t.exp() * p.kappa_prime(a) * ua)
    }

    fn solve(&self, epsilon: f64, warm: Option<f64>) -> Result<PerturbedSolution> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::invalid("epsilon", format!("perturbation weight must lie in (0, 1), got {epsilon}")));
        }
        let p = self.p;
        let log_eps = epsilon.ln();
        // -slope is increasing in a; slope(0) > 0.
        let neg_slope = |a: f64| self.action_slope(a, log_eps).map(|s| -s).unwrap_or(f64::NAN);

        let (mut lo, mut hi) = (0.0, self.a_max);
        if let Some(a0) = warm {
            let (l, h) = (0.9 * a0, (1.1 * a0).min(self.a_max));
            if neg_slope(l) <= 0.0 && neg_slope(h) > 0.0 {
                lo = l;
                hi = h;
            }
        }
        if !(neg_slope(hi) > 0.0) {
            return Err(Error::NonBinding(format!("perturbed action within [0, {}]", self.a_max)));
        }
        let a = bisect_increasing(neg_slope, lo, hi).x;

        let (wages, t) = self.state_wages(a, log_eps)?;
        let lambda = t.exp();
        let kappa = p.kappa(a);
        let logs = self.state_logs(a, log_eps);
        let z = logs
            .iter()
            .zip(self.shadow(&logs, t, kappa))
            .map(|(l, shadow)| {
                if shadow < p.m {
                    let lhs = (self.gp.ln() + self.gp * p.m + l).exp();
                    let rhs = (t + self.ga.ln() - self.ga * (p.m - kappa)).exp();
                    (lhs - rhs).max(0.0)
                } else {
                    0.0
                }
            })
            .collect();
        let value = principal_value_at(p, &wages, a);
        let penalty = p.shock.expect(|i, _| p.principal.eval(-wages[i]));
        Ok(PerturbedSolution {
            epsilon,
            lambda,
            z,
            value,
            perturbed_value: value + epsilon * penalty,
            pc_residual: agent_value_at(p, &wages, a) - p.reservation_utility(),
            action_residual: self.action_slope(a, log_eps)?.abs(),
            second_moment: p.shock.expect(|i, _| wages[i] * wages[i]),
            contract: Contract::StateWise { wages, a },
        })
    }
}

/// Uniform bound on `E[W_eps^2]` for the one-sided CARA perturbation, given an
/// action box `[0, a_max]` containing every perturbed action. Requires `m >= 0`.
pub fn second_moment_bound(p: &ProblemSpec, a_max: f64) -> Option<f64> {
    let (gp, ga) = p.cara_pair()?;
    if p.m < 0.0 || p.upper.is_some() {
        return None;
    }
    let y = p.y;
    let m = p.m;
    // Bound on the participation multiplier.
    let c = gp * p.shock.expect(|_, b| (-gp * (p.x0 + b - y)).exp() + (gp * y).exp()) / (ga * (-ga * y).exp());
    let kappa_max = p.kappa(a_max);
    let terms = p.shock.atoms().iter().map(|b| {
        let x0_out = p.x0 + b;
        let parts = [
            gp.ln() - gp * (x0_out - m),
            gp.ln() + gp * m,
            c.ln() - ga * (m - kappa_max),
        ];
        let hi = parts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = hi + parts.iter().map(|v| (v - hi).exp()).sum::<f64>().ln();
        let log_ratio = lse - gp.ln() + gp * (x0_out + a_max);
        log_ratio * log_ratio
    });
    let weighted = compensated_sum(terms.zip(p.shock.probs()).map(|(t, pr)| t * pr));
    Some(weighted / (gp * gp))
}
