//! State-wise solver for arbitrary supported utilities.
//!
//! The discretized problem is a concave program in `(w_1, .., w_n, a)`.
//! An augmented-Lagrangian loop on the participation constraint drives
//! box-projected, diagonally scaled gradient ascent. Its iterate then seeds an
//! exact reduced solve. For fixed `(a, lambda)` the Lagrangian separates by
//! state into monotone scalar equations. `lambda` binds the participation
//! constraint, and `a` zeroes the envelope derivative of the value function.

use serde::{Deserialize, Serialize};

use crate::cara::action_box;
use crate::error::{Error, Result};
use crate::model::{agent_value_at, overflowed, principal_value_at, Contract, Multipliers, ProblemSpec};
use crate::scalar::{bisect_increasing, MAX_BISECTION_ITERS};
use crate::shock::compensated_sum;
use crate::verification::{kkt_verify, KktReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_outer_iters: usize,
    pub penalty_growth: f64,
    pub kkt_tol: f64,
    pub step_shrink: f64,
    pub max_inner_iters: usize,
    /// Upper end of the action bracket. Defaults to the same box as the CARA solver.
    pub a_max: Option<f64>,
    /// Finish with the exact reduced solve.
    pub polish: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_outer_iters: 50,
            penalty_growth: 10.0,
            kkt_tol: 1e-8,
            step_shrink: 0.5,
            max_inner_iters: 10_000,
            a_max: None,
            polish: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kkt_tol > 0.0) {
            return Err(Error::invalid("kkt_tol", "must be positive"));
        }
        if !(self.penalty_growth > 1.0) {
            return Err(Error::invalid("penalty_growth", "must exceed 1"));
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0) {
            return Err(Error::invalid("step_shrink", "must lie in (0, 1)"));
        }
        if self.max_outer_iters == 0 || self.max_inner_iters == 0 {
            return Err(Error::invalid("max_outer_iters", "iteration caps must be positive"));
        }
        if let Some(a) = self.a_max {
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::invalid("a_max", "action bracket must be positive and finite"));
            }
        }
        Ok(())
    }
}

/// Gradients of the objective `E[u_P(X - W)]` and of the participation
/// functional `E[u_A(W - kappa(a))]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gradients {
    pub objective_w: Vec<f64>,
    pub objective_a: f64,
    pub pc_w: Vec<f64>,
    pub pc_a: f64,
}

pub fn gradient(p: &ProblemSpec, wages: &[f64], a: f64) -> Gradients {
    let kappa = p.kappa(a);
    let probs = p.shock.probs();
    let up: Vec<f64> = (0..wages.len()).map(|i| p.principal.deriv(p.output(i, a) - wages[i])).collect();
    let ua: Vec<f64> = wages.iter().map(|w| p.agent.deriv(w - kappa)).collect();
    Gradients {
        objective_w: up.iter().zip(probs).map(|(d, pr)| -pr * d).collect(),
        objective_a: compensated_sum(up.iter().zip(probs).map(|(d, pr)| pr * d)),
        pc_w: ua.iter().zip(probs).map(|(d, pr)| pr * d).collect(),
        pc_a: -p.kappa_prime(a) * compensated_sum(ua.iter().zip(probs).map(|(d, pr)| pr * d)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneralDiagnostics {
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub penalty: f64,
    /// Largest solver-side residual after the augmented-Lagrangian stage.
    pub ascent_residual: f64,
    /// Largest solver-side residual at the returned point.
    pub final_residual: f64,
    pub polished: bool,
    pub a_max: f64,
    /// The action stopped at the top of its feasible range rather than at a
    /// stationary point.
    pub action_at_bound: bool,
    pub overflow: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneralSolution {
    /// Always [`Contract::StateWise`].
    pub contract: Contract,
    pub multipliers: Multipliers,
    pub value: f64,
    pub pc_residual: f64,
    pub kkt: KktReport,
    pub diagnostics: GeneralDiagnostics,
}

impl GeneralSolution {
    pub fn wages(&self) -> &[f64] {
        match &self.contract {
            Contract::StateWise { wages, .. } => wages,
            Contract::Parametric { .. } => unreachable!("general solutions are state-wise"),
        }
    }

    pub fn action(&self) -> f64 {
        self.contract.action()
    }
}

/// Solve the limited-liability problem over state-wise wages.
pub fn general_ll_solve(p: &ProblemSpec, cfg: &SolverConfig) -> Result<GeneralSolution> {
    cfg.validate()?;
    if let Some(big_m) = p.upper {
        if big_m < p.y {
            return Err(Error::Infeasible(format!(
                "upper wage bound M = {big_m} is below the reservation wage y = {}",
                p.y
            )));
        }
    }
    let a_max = cfg.a_max.unwrap_or_else(|| action_box(p));
    // Largest action for which W = M can still meet the participation constraint.
    let a_top = match p.upper {
        Some(big_m) => a_max.min((2.0 * (big_m - p.y) / p.k).sqrt()),
        None => a_max,
    };

    if p.principal.is_risk_neutral() && p.agent.is_risk_neutral() {
        return Ok(finish(p, cfg, risk_neutral_pair(p, a_top), Stage::closed_form(a_max)));
    }

    let mut ascent = Ascent::new(p, cfg, a_top);
    ascent.run();
    let ascent_point = ascent.point();
    let ascent_residual = residuals(p, &ascent_point).worst();
    let mut stage = Stage {
        outer_iterations: ascent.outer,
        inner_iterations: ascent.inner,
        penalty: ascent.rho,
        ascent_residual,
        polished: false,
        a_max,
    };

    let point = if cfg.polish {
        stage.polished = true;
        Reduced { p, a_top }.solve()?
    } else {
        ascent_point
    };
    let sol = finish(p, cfg, point, stage);
    let worst = sol.diagnostics.final_residual;
    if worst > cfg.kkt_tol {
        return Err(Error::MaxIterations {
            solver: "general_ll_solve",
            iterations: sol.diagnostics.outer_iterations,
            worst_residual: worst,
            best: Some(Box::new(sol)),
        });
    }
    Ok(sol)
}

/// A candidate `(w, a, lambda)`; bound multipliers follow from the gap.
#[derive(Debug, Clone)]
struct Point {
    wages: Vec<f64>,
    a: f64,
    lambda: f64,
    action_at_bound: bool,
}

struct Stage {
    outer_iterations: usize,
    inner_iterations: usize,
    penalty: f64,
    ascent_residual: f64,
    polished: bool,
    a_max: f64,
}

impl Stage {
    fn closed_form(a_max: f64) -> Self {
        Stage { outer_iterations: 0, inner_iterations: 0, penalty: 0.0, ascent_residual: 0.0, polished: false, a_max }
    }
}

fn finish(p: &ProblemSpec, cfg: &SolverConfig, point: Point, stage: Stage) -> GeneralSolution {
    let Point { wages, a, lambda, action_at_bound } = point;
    let lambda = action_multiplier(p, &wages, a).unwrap_or(lambda);
    let multipliers = Multipliers::from_gap(p, &wages, a, lambda);
    let value = principal_value_at(p, &wages, a);
    let pc_residual = agent_value_at(p, &wages, a) - p.reservation_utility();
    let overflow = overflowed(p, &wages, a);
    let final_residual = residuals(p, &Point { wages: wages.clone(), a, lambda, action_at_bound }).worst();
    let contract = Contract::StateWise { wages, a };
    let kkt = kkt_verify(p, &contract, &multipliers, cfg.kkt_tol);
    GeneralSolution {
        contract,
        multipliers,
        value,
        pc_residual,
        kkt,
        diagnostics: GeneralDiagnostics {
            outer_iterations: stage.outer_iterations,
            inner_iterations: stage.inner_iterations,
            penalty: stage.penalty,
            ascent_residual: stage.ascent_residual,
            final_residual,
            polished: stage.polished,
            a_max: stage.a_max,
            action_at_bound,
            overflow,
        },
    }
}

/// `lambda` from stationarity in the action, when that equation pins it down.
fn action_multiplier(p: &ProblemSpec, wages: &[f64], a: f64) -> Option<f64> {
    let g = gradient(p, wages, a);
    let denom = -g.pc_a;
    (denom > 0.0 && denom.is_finite()).then(|| g.objective_a / denom)
}

/// Both parties risk neutral: any wage with `E[W] = y + kappa(a)` is optimal.
/// Return the constant one.
fn risk_neutral_pair(p: &ProblemSpec, a_top: f64) -> Point {
    let a = (1.0 / p.k).min(a_top);
    let w = p.clamp_wage(p.y + p.kappa(a));
    Point { wages: vec![w; p.n_states()], a, lambda: 1.0, action_at_bound: a < 1.0 / p.k }
}

struct Residuals {
    action: f64,
    wages: f64,
    pc: f64,
    bounds: f64,
}

impl Residuals {
    fn worst(&self) -> f64 {
        self.action.max(self.wages).max(self.pc).max(self.bounds)
    }
}

/// Solver-side optimality measure. Per state the wage gap must vanish in the
/// interior and have the sign of an outward-pointing gradient on a bound.
fn residuals(p: &ProblemSpec, pt: &Point) -> Residuals {
    let Point { wages, a, lambda, action_at_bound } = pt;
    let (a, lambda) = (*a, *lambda);
    let kappa = p.kappa(a);
    let upper = p.upper_or_inf();
    let mut wage_res: f64 = 0.0;
    let mut bound_res: f64 = 0.0;
    for (i, &w) in wages.iter().enumerate() {
        let gap = p.principal.deriv(p.output(i, a) - w) - lambda * p.agent.deriv(w - kappa);
        let pr = p.shock.probs()[i];
        let r = if w <= p.m {
            bound_res = bound_res.max(pr * (p.m - w).abs() * gap.max(0.0));
            (-gap).max(0.0)
        } else if w >= upper {
            gap.max(0.0)
        } else {
            gap.abs()
        };
        wage_res = wage_res.max(r);
        if w < p.m || w > upper {
            bound_res = bound_res.max((p.m - w).max(w - upper));
        }
    }
    let g = gradient(p, wages, a);
    let stationarity = g.objective_a + lambda * g.pc_a;
    let action = if *action_at_bound { (-stationarity).max(0.0) } else { stationarity.abs() };
    let slack = agent_value_at(p, wages, a) - p.reservation_utility();
    let pc = (lambda * slack).abs().max((-slack).max(0.0));
    Residuals { action, wages: wage_res, pc, bounds: bound_res }
}

const WARM_OUTER_ITERS: usize = 5;
const WARM_INNER_ITERS: usize = 500;

/// Augmented-Lagrangian ascent on `(w, a)` with the participation constraint
/// `g(w, a) = E[u_A(W - kappa)] - u_A(y) >= 0` priced into the objective.
struct Ascent<'a> {
    p: &'a ProblemSpec,
    cfg: &'a SolverConfig,
    a_top: f64,
    wages: Vec<f64>,
    a: f64,
    lambda: f64,
    rho: f64,
    outer: usize,
    inner: usize,
}

impl<'a> Ascent<'a> {
    fn new(p: &'a ProblemSpec, cfg: &'a SolverConfig, a_top: f64) -> Self {
        let wages = vec![p.y; p.n_states()];
        // Borch ratio at the anchor contract (y, 0) and mean output.
        let lambda = p.principal.deriv(p.x0 + p.shock.mean() - p.y) / p.agent.deriv(p.y);
        let lambda = if lambda.is_finite() && lambda > 0.0 { lambda } else { 1.0 };
        let scale = p.agent.deriv(p.y).abs().max(1e-300);
        Ascent { p, cfg, a_top, wages, a: 0.0, lambda, rho: 1.0 / (scale * scale), outer: 0, inner: 0 }
    }

    fn slack(&self, wages: &[f64], a: f64) -> f64 {
        agent_value_at(self.p, wages, a) - self.p.reservation_utility()
    }

    fn merit(&self, wages: &[f64], a: f64) -> f64 {
        let g = self.slack(wages, a);
        let shifted = (self.lambda - self.rho * g).max(0.0);
        principal_value_at(self.p, wages, a) - (shifted * shifted - self.lambda * self.lambda) / (2.0 * self.rho)
    }

    fn project(&self, wages: &mut [f64], a: &mut f64) {
        wages.iter_mut().for_each(|w| *w = self.p.clamp_wage(*w));
        *a = a.clamp(0.0, self.a_top);
    }

    /// One scaled projected-gradient step with Armijo backtracking. Returns
    /// false when no progress is possible.
    fn step(&mut self) -> bool {
        let p = self.p;
        let g = self.slack(&self.wages, self.a);
        let mu = (self.lambda - self.rho * g).max(0.0);
        let grads = gradient(p, &self.wages, self.a);
        let kappa = p.kappa(self.a);
        let probs = p.shock.probs();
        let n = self.wages.len();

        // Ascent direction of the merit function and a diagonal curvature model.
        let mut dir_w = Vec::with_capacity(n);
        let mut ua2 = 0.0;
        let mut curv_a_pc = 0.0;
        for i in 0..n {
            let x = p.output(i, self.a) - self.wages[i];
            let s = self.wages[i] - kappa;
            let grad = grads.objective_w[i] + mu * grads.pc_w[i];
            let ua = p.agent.deriv(s);
            let active = if mu > 0.0 { self.rho * grads.pc_w[i] * grads.pc_w[i] } else { 0.0 };
            let h = probs[i] * (-p.principal.deriv2(x) - mu * p.agent.deriv2(s)) + active;
            dir_w.push(grad / h.max(1e-12 * probs[i]));
            ua2 += probs[i] * ua;
            curv_a_pc += probs[i] * (-p.agent.deriv2(s));
        }
        let grad_a = grads.objective_a + mu * grads.pc_a;
        let kp = p.kappa_prime(self.a);
        let h_a = p.shock.expect(|i, _| -p.principal.deriv2(p.output(i, self.a) - self.wages[i]))
            + mu * (p.k * ua2 + kp * kp * curv_a_pc)
            + if mu > 0.0 { self.rho * grads.pc_a * grads.pc_a } else { 0.0 };
        let dir_a = grad_a / h_a.max(1e-12);

        let base = self.merit(&self.wages, self.a);
        let mut t = 1.0;
        for _ in 0..60 {
            let mut w: Vec<f64> = self.wages.iter().zip(&dir_w).map(|(w, d)| w + t * d).collect();
            let mut a = self.a + t * dir_a;
            self.project(&mut w, &mut a);
            let predicted = w
                .iter()
                .zip(&self.wages)
                .zip(grads.objective_w.iter().zip(&grads.pc_w))
                .map(|((new, old), (fo, fp))| (new - old) * (fo + mu * fp))
                .sum::<f64>()
                + (a - self.a) * grad_a;
            if predicted <= 0.0 {
                return false;
            }
            let value = self.merit(&w, a);
            if value >= base + 1e-4 * predicted {
                self.wages = w;
                self.a = a;
                return true;
            }
            t *= self.cfg.step_shrink;
        }
        false
    }

    fn point(&self) -> Point {
        let lambda = action_multiplier(self.p, &self.wages, self.a).unwrap_or(self.lambda);
        Point { wages: self.wages.clone(), a: self.a, lambda, action_at_bound: self.a >= self.a_top }
    }

    fn run(&mut self) {
        let mut last_violation = f64::INFINITY;
        // With polishing on, the stage only has to land near the optimum.
        let budget = if self.cfg.polish { self.cfg.max_inner_iters.min(WARM_INNER_ITERS) } else { self.cfg.max_inner_iters };
        for _ in 0..self.cfg.max_outer_iters {
            self.outer += 1;
            let mut stalled = 0;
            for _ in 0..budget {
                self.inner += 1;
                let before = self.merit(&self.wages, self.a);
                if !self.step() {
                    break;
                }
                let gain = self.merit(&self.wages, self.a) - before;
                if gain <= 1e-15 * before.abs().max(1e-300) {
                    stalled += 1;
                    if stalled >= 3 {
                        break;
                    }
                } else {
                    stalled = 0;
                }
            }
            let g = self.slack(&self.wages, self.a);
            self.lambda = (self.lambda - self.rho * g).max(0.0);
            if residuals(self.p, &self.point()).worst() <= self.cfg.kkt_tol {
                break;
            }
            let violation = (-g).max(0.0);
            if violation > 0.25 * last_violation {
                self.rho *= self.cfg.penalty_growth;
            }
            last_violation = violation;
            if self.cfg.polish && self.outer >= WARM_OUTER_ITERS {
                break;
            }
        }
    }
}

/// Exact solve nested over `a`, then `lambda`, then each state.
struct Reduced<'a> {
    p: &'a ProblemSpec,
    a_top: f64,
}

const LOG_LAMBDA_MAX: f64 = 700.0;
/// Wages this close (relative) to a bound are put on it.
const BOUND_SNAP: f64 = 1e-12;

impl Reduced<'_> {
    /// Maximizer of `u_P(X - w) + lambda u_A(w - kappa)` over `[m, M]`.
    fn state_wage(&self, x: f64, kappa: f64, lambda: f64) -> f64 {
        let p = self.p;
        // Derivative of the state Lagrangian; nonincreasing in w.
        let phi = |w: f64| -p.principal.deriv(x - w) + lambda * p.agent.deriv(w - kappa);
        let dphi = |w: f64| p.principal.deriv2(x - w) + lambda * p.agent.deriv2(w - kappa);
        let lo = p.m;
        if phi(lo) <= 0.0 {
            return lo;
        }
        let hi = match p.upper {
            Some(big_m) => {
                if phi(big_m) >= 0.0 {
                    return big_m;
                }
                big_m
            }
            None => {
                let mut step = 1.0f64.max(x.abs());
                let mut hi = lo + step;
                let mut found = false;
                for _ in 0..MAX_BISECTION_ITERS {
                    if phi(hi) < 0.0 {
                        found = true;
                        break;
                    }
                    step *= 2.0;
                    hi = lo + step;
                }
                if !found {
                    return hi;
                }
                hi
            }
        };
        // Newton with a bisection safeguard.
        let (mut a, mut b) = (lo, hi);
        let mut w = 0.5 * (a + b);
        for _ in 0..MAX_BISECTION_ITERS {
            let f = phi(w);
            if f == 0.0 {
                return w;
            }
            if f > 0.0 {
                a = w;
            } else {
                b = w;
            }
            let d = dphi(w);
            let newton = if d < 0.0 { w - f / d } else { f64::NAN };
            let next = if newton > a && newton < b { newton } else { a + 0.5 * (b - a) };
            if next <= a || next >= b || (next - w).abs() <= 4.0 * f64::EPSILON * w.abs().max(1.0) {
                return next.clamp(a, b);
            }
            w = next;
        }
        w
    }

    fn wages(&self, a: f64, lambda: f64) -> Vec<f64> {
        let kappa = self.p.kappa(a);
        let snap = |w: f64, bound: f64| (w - bound).abs() <= BOUND_SNAP * bound.abs().max(1.0);
        (0..self.p.n_states())
            .map(|i| {
                let w = self.state_wage(self.p.output(i, a), kappa, lambda);
                match self.p.upper {
                    Some(big_m) if snap(w, big_m) => big_m,
                    _ if snap(w, self.p.m) => self.p.m,
                    _ => w,
                }
            })
            .collect()
    }

    /// Multiplier binding the participation constraint at action `a`, with its
    /// wages. `None` when the constraint cannot be met.
    fn bind(&self, a: f64) -> Option<(f64, Vec<f64>)> {
        let p = self.p;
        let target = p.reservation_utility();
        let pc = |t: f64| agent_value_at(p, &self.wages(a, t.exp()), a) - target;
        if pc(-LOG_LAMBDA_MAX) >= 0.0 {
            return Some((0.0, self.wages(a, 0.0)));
        }
        if pc(LOG_LAMBDA_MAX) < 0.0 {
            return None;
        }
        let t = bisect_increasing(pc, -LOG_LAMBDA_MAX, LOG_LAMBDA_MAX).x;
        let lambda = t.exp();
        Some((lambda, self.wages(a, lambda)))
    }

    /// Envelope derivative of the value function; `-inf` where infeasible.
    fn slope(&self, a: f64) -> f64 {
        let Some((lambda, wages)) = self.bind(a) else { return f64::NEG_INFINITY };
        let g = gradient(self.p, &wages, a);
        g.objective_a + lambda * g.pc_a
    }

    fn solve(&self) -> Result<Point> {
        let neg_slope = |a: f64| -self.slope(a);
        if self.bind(0.0).is_none() {
            return Err(Error::Infeasible("participation constraint unreachable inside the wage box".into()));
        }
        // Grow the bracket outwards: far out the exponent clamp can flatten the
        // slope and fake a sign.
        let mut lo = 0.0;
        let mut hi = (1.0 / self.p.k).min(self.a_top);
        while neg_slope(hi) <= 0.0 && hi < self.a_top {
            lo = hi;
            hi = (2.0 * hi).min(self.a_top);
        }
        let (a, at_bound) = if neg_slope(hi) <= 0.0 {
            (hi, true)
        } else {
            let root = bisect_increasing(neg_slope, lo, hi);
            // Keep the feasible end when the bracket collapses onto the edge.
            let a = if neg_slope(root.x).is_finite() { root.x } else { lo.max(root.x - root.width) };
            (a, false)
        };
        let (lambda, wages) = self
            .bind(a)
            .ok_or_else(|| Error::Infeasible("participation constraint unreachable at the solved action".into()))?;
        Ok(Point { wages, a, lambda, action_at_bound: at_bound })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ProblemFile;
    use crate::shock::{ShockGrid, ShockSpec};
    use crate::utility::UtilitySpec;

    fn fig1() -> ProblemSpec {
        ProblemFile {
            x0: 1.0,
            k: 2.0,
            y: 1.0,
            m: 0.0,
            upper: None,
            principal: UtilitySpec::cara(0.2),
            agent: UtilitySpec::cara(0.2),
            shock: ShockSpec::Gaussian { n: 64 },
        }
        .build()
        .unwrap()
    }

    #[test]
    fn risk_neutral_principal_pays_constant_wage() {
        let mut f = fig1().to_file();
        f.principal = UtilitySpec::RiskNeutral;
        f.agent = UtilitySpec::cara(1.0);
        let p = f.build().unwrap();
        let s = general_ll_solve(&p, &SolverConfig::default()).unwrap();
        assert!((s.action() - 0.5).abs() < 1e-6);
        for w in s.wages() {
            assert!((w - 1.25).abs() < 1e-6, "{w}");
        }
    }

    #[test]
    fn risk_neutral_pair_closed_form() {
        let mut f = fig1().to_file();
        f.principal = UtilitySpec::RiskNeutral;
        f.agent = UtilitySpec::RiskNeutral;
        let s = general_ll_solve(&f.build().unwrap(), &SolverConfig::default()).unwrap();
        assert_eq!(s.action(), 0.5);
        assert!(s.wages().iter().all(|w| *w == 1.25));
    }

    #[test]
    fn deterministic_shock() {
        let p = ProblemSpec::with_grid(
            1.0,
            2.0,
            1.0,
            0.0,
            Some(10.0),
            UtilitySpec::ExtendedLog,
            UtilitySpec::cara(0.5),
            ShockGrid::deterministic(0.0),
        )
        .unwrap();
        let s = general_ll_solve(&p, &SolverConfig::default()).unwrap();
        assert!((s.action() - 0.5).abs() < 1e-8);
        assert!((s.wages()[0] - 1.25).abs() < 1e-8);
    }

    #[test]
    fn risk_neutral_gradient_is_minus_prob() {
        let mut f = fig1().to_file();
        f.principal = UtilitySpec::RiskNeutral;
        let p = f.build().unwrap();
        let w = vec![0.7; p.n_states()];
        let g = gradient(&p, &w, 0.0);
        for (gi, pr) in g.objective_w.iter().zip(p.shock.probs()) {
            assert_eq!(*gi, -pr);
        }
        assert_eq!(g.pc_a, 0.0);
    }

    #[test]
    fn upper_below_reservation_is_infeasible() {
        let p = fig1().with_bounds(0.0, Some(0.5)).unwrap();
        assert!(matches!(general_ll_solve(&p, &SolverConfig::default()), Err(Error::Infeasible(_))));
    }

    #[test]
    fn config_validation() {
        let cfg = SolverConfig { kkt_tol: 0.0, ..SolverConfig::default() };
        assert!(general_ll_solve(&fig1(), &cfg).is_err());
        let cfg = SolverConfig { step_shrink: 1.0, ..SolverConfig::default() };
        assert!(cfg.validate().is_err());
    }
}
