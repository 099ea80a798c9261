//! Independent audits of candidate optima, and a brute-force oracle for
//! instances with at most five states.
//!
//! Nothing here calls into the solvers. Derivatives and expectations are
//! summed directly from the utility definitions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{is_feasible, Contract, Multipliers, ProblemSpec};

/// Residuals of the four first-order conditions plus shape diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// `|E[u_P'(X - W)] - lambda kappa'(a) E[u_A'(W - kappa)]|`.
    pub r_stationarity_a: f64,
    /// `max_i |u_P'(X_i - w_i) - lambda u_A'(w_i - kappa) - Z_i + Y_i|`.
    pub r_stationarity_w: f64,
    /// `|lambda (E[u_A(W - kappa)] - u_A(y))|`.
    pub r_pc_slack: f64,
    /// `|E[Z (W - m)]| + |E[Y (M - W)]|`, plus any mass on missing or negative multipliers.
    pub r_bound_slack: f64,
    pub lambda: f64,
    /// Largest relative deviation of the marginal-utility ratio from `lambda`
    /// over interior states (0 when no state is interior).
    pub borch_spread: f64,
    /// Probability of the interior states.
    pub interior_mass: f64,
    /// One-sided: `kappa'(a) >= 1 - tol`. Two-sided: the sign dichotomy.
    pub action_bound_ok: bool,
    /// Two-sided only: `sign(kappa'(a) - 1) = sign(E[Z - Y])` up to the residuals.
    pub sign_dichotomy_ok: Option<bool>,
    pub pc_binding: bool,
    pub feasible: bool,
    pub tol: f64,
    /// Feasible and all four residuals within `tol`.
    pub passed: bool,
}

impl KktReport {
    pub fn worst_residual(&self) -> f64 {
        self.r_stationarity_a.max(self.r_stationarity_w).max(self.r_pc_slack).max(self.r_bound_slack)
    }

    /// Largest absolute difference between the numeric fields of two reports.
    pub fn max_abs_diff(&self, other: &KktReport) -> f64 {
        [
            (self.r_stationarity_a, other.r_stationarity_a),
            (self.r_stationarity_w, other.r_stationarity_w),
            (self.r_pc_slack, other.r_pc_slack),
            (self.r_bound_slack, other.r_bound_slack),
            (self.lambda, other.lambda),
            (self.borch_spread, other.borch_spread),
            (self.interior_mass, other.interior_mass),
        ]
        .iter()
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
    }
}

fn dot(probs: &[f64], values: impl Iterator<Item = f64>) -> f64 {
    // Plain Kahan summation.
    let mut sum = 0.0;
    let mut carry = 0.0;
    for (pr, v) in probs.iter().zip(values) {
        let term = pr * v - carry;
        let next = sum + term;
        carry = (next - sum) - term;
        sum = next;
    }
    sum
}

/// Audit a contract and multiplier set against the first-order conditions.
pub fn kkt_verify(p: &ProblemSpec, contract: &Contract, mult: &Multipliers, tol: f64) -> KktReport {
    let wages = contract.wages(p);
    let a = contract.action();
    let n = wages.len();
    let probs = p.shock.probs();
    let atoms = p.shock.atoms();
    let cost = 0.5 * p.k * a * a;
    let lambda = mult.lambda;
    let zero = vec![0.0; n];
    let z = if mult.z.len() == n { &mult.z } else { &zero };
    let y = if mult.y_mult.len() == n { &mult.y_mult } else { &zero };
    let malformed = mult.z.len() != n || mult.y_mult.len() != n;

    let up: Vec<f64> = (0..n).map(|i| p.principal.deriv(p.x0 + a + atoms[i] - wages[i])).collect();
    let ua: Vec<f64> = wages.iter().map(|w| p.agent.deriv(w - cost)).collect();

    let e_up = dot(probs, up.iter().copied());
    let e_ua = dot(probs, ua.iter().copied());
    let r_stationarity_a = (e_up - lambda * p.k * a * e_ua).abs();

    let r_stationarity_w = (0..n).map(|i| (up[i] - lambda * ua[i] - z[i] + y[i]).abs()).fold(0.0, f64::max);

    let agent = dot(probs, wages.iter().map(|w| p.agent.eval(w - cost)));
    let slack = agent - p.agent.eval(p.y);
    let r_pc_slack = (lambda * slack).abs();

    let lower = dot(probs, (0..n).map(|i| z[i] * (wages[i] - p.m))).abs();
    let upper = match p.upper {
        Some(big_m) => dot(probs, (0..n).map(|i| y[i] * (big_m - wages[i]))).abs(),
        None => dot(probs, y.iter().map(|v| v.abs())),
    };
    let negative = dot(probs, z.iter().chain(y.iter()).map(|v| (-v).max(0.0)));
    let r_bound_slack = lower + upper + negative + if malformed { 1.0 } else { 0.0 };

    let (borch_spread, interior_mass) = match borch_check(p, contract, lambda, tol) {
        Ok(b) => (b.spread, b.interior_mass),
        Err(_) => (0.0, 0.0),
    };

    let sign_dichotomy_ok = p.upper.map(|_| {
        let d_action = p.k * a - 1.0;
        let d_mult = dot(probs, (0..n).map(|i| z[i] - y[i]));
        // lambda E[u_A'] (kappa' - 1) = E[Z - Y] up to the first two residuals.
        let slack = r_stationarity_a + r_stationarity_w + tol;
        d_action.signum() == d_mult.signum() || ((lambda * e_ua * d_action).abs() <= slack && d_mult.abs() <= slack)
    });
    let action_bound_ok = sign_dichotomy_ok.unwrap_or(p.k * a >= 1.0 - tol);

    let feasible = is_feasible(p, contract, tol).feasible;
    let worst = r_stationarity_a.max(r_stationarity_w).max(r_pc_slack).max(r_bound_slack);
    KktReport {
        r_stationarity_a,
        r_stationarity_w,
        r_pc_slack,
        r_bound_slack,
        lambda,
        borch_spread,
        interior_mass,
        action_bound_ok,
        sign_dichotomy_ok,
        pc_binding: slack.abs() <= tol,
        feasible,
        tol,
        passed: feasible && worst <= tol,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BorchCheck {
    pub spread: f64,
    pub interior_mass: f64,
    pub interior_states: usize,
}

/// Flatness of `u_P'(X - W) / u_A'(W - kappa)` across states where no wage
/// bound binds. A state is interior when it is more than `10 tol` from both bounds.
pub fn borch_check(p: &ProblemSpec, contract: &Contract, lambda: f64, tol: f64) -> Result<BorchCheck> {
    let wages = contract.wages(p);
    let a = contract.action();
    let cost = 0.5 * p.k * a * a;
    let upper = p.upper.unwrap_or(f64::INFINITY);
    let gap = 10.0 * tol;
    let mut ratios = Vec::new();
    let mut interior_mass = 0.0;
    for (i, w) in wages.iter().enumerate() {
        if (w - p.m).min(upper - w) > gap {
            let x = p.x0 + a + p.shock.atoms()[i];
            ratios.push(p.principal.deriv(x - w) / p.agent.deriv(w - cost));
            interior_mass += p.shock.probs()[i];
        }
    }
    if ratios.is_empty() {
        return Err(Error::NoInteriorStates);
    }
    let reference = if lambda > 0.0 { lambda } else { ratios.iter().sum::<f64>() / ratios.len() as f64 };
    let spread = ratios.iter().map(|r| ((r - reference) / reference).abs()).fold(0.0, f64::max);
    Ok(BorchCheck { spread, interior_mass, interior_states: ratios.len() })
}

/// Largest number of grid points the oracle will enumerate in one round.
pub const ORACLE_GRID_LIMIT: f64 = 1e8;
pub const ORACLE_MAX_ATOMS: usize = 5;
/// Local refinement rounds after the coarse sweep, each shrinking the step 10x.
pub const ORACLE_REFINEMENTS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    /// Always [`Contract::StateWise`].
    pub contract: Contract,
    pub value: f64,
    /// Upper end of the wage grid (`M`, or the one-sided cap).
    pub wage_cap: f64,
    pub final_step: f64,
    pub points_evaluated: u64,
}

/// Exhaustive search over a wage grid with local refinement.
///
/// For fixed wages the objective increases in `a` and the participation
/// constraint tightens, so the best action is the largest one that keeps the
/// agent at `u_A(y)`. That action is found exactly per wage vector; the action
/// step is only checked for validity.
pub fn brute_force_oracle(p: &ProblemSpec, wage_step: f64, action_step: f64) -> Result<OracleResult> {
    let n = p.n_states();
    if n > ORACLE_MAX_ATOMS {
        return Err(Error::invalid("shock", format!("oracle handles at most {ORACLE_MAX_ATOMS} atoms, got {n}")));
    }
    if !(wage_step > 0.0 && wage_step.is_finite()) {
        return Err(Error::invalid("wage_step", "must be positive"));
    }
    if !(action_step > 0.0 && action_step.is_finite()) {
        return Err(Error::invalid("action_step", "must be positive"));
    }
    let (cap, capped) = match p.upper {
        Some(big_m) => (big_m, false),
        None => (p.m + 20.0 * (p.y - p.m + 1.0), true),
    };

    let count = ((cap - p.m) / wage_step).floor() as usize + 1;
    let axes: Vec<Vec<f64>> = (0..n).map(|_| axis(p.m, cap, p.m, wage_step, count)).collect();
    let mut best = sweep(p, &axes)?;
    let mut evaluated = best.evaluated;
    let mut step = wage_step;
    for _ in 0..ORACLE_REFINEMENTS {
        let centre = best.wages.clone();
        let fine = step / 10.0;
        let axes: Vec<Vec<f64>> = centre.iter().map(|c| axis(p.m, cap, c - step, fine, 21)).collect();
        let refined = sweep(p, &axes)?;
        evaluated += refined.evaluated;
        if refined.value >= best.value {
            best = refined;
        }
        step = fine;
    }
    if capped && best.wages.iter().any(|w| *w >= cap - step) {
        return Err(Error::Unsupported(format!("one-sided oracle cap {cap} binds at the grid optimum")));
    }
    Ok(OracleResult {
        contract: Contract::StateWise { wages: best.wages, a: best.a },
        value: best.value,
        wage_cap: cap,
        final_step: step,
        points_evaluated: evaluated,
    })
}

/// `count` points `start + j step`, kept inside `[lo, hi]` and deduplicated.
fn axis(lo: f64, hi: f64, start: f64, step: f64, count: usize) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..count).map(|j| (start + j as f64 * step).clamp(lo, hi)).collect();
    pts.dedup();
    pts
}

struct Best {
    wages: Vec<f64>,
    a: f64,
    value: f64,
    evaluated: u64,
}

fn sweep(p: &ProblemSpec, axes: &[Vec<f64>]) -> Result<Best> {
    let total: f64 = axes.iter().map(|ax| ax.len() as f64).product();
    if total > ORACLE_GRID_LIMIT {
        return Err(Error::GridTooLarge { points: total, limit: ORACLE_GRID_LIMIT });
    }
    let total = total as u64;
    let decode = |mut idx: u64, out: &mut [f64]| {
        for (k, ax) in axes.iter().enumerate().rev() {
            let len = ax.len() as u64;
            out[k] = ax[(idx % len) as usize];
            idx /= len;
        }
    };
    let target = p.agent.eval(p.y);
    // Deterministic reduction: larger value wins, ties go to the smaller index.
    let pick = |l: (f64, u64), r: (f64, u64)| {
        if r.0 > l.0 || (r.0 == l.0 && r.1 < l.1) {
            r
        } else {
            l
        }
    };
    let (value, idx) = (0..total)
        .into_par_iter()
        .fold(
            || (f64::NEG_INFINITY, u64::MAX, vec![0.0; axes.len()]),
            |(bv, bi, mut buf), idx| {
                decode(idx, &mut buf);
                let cand = match max_action(p, &buf, target) {
                    Some(a) => (objective(p, &buf, a), idx),
                    None => (f64::NEG_INFINITY, u64::MAX),
                };
                let (v, i) = pick((bv, bi), cand);
                (v, i, buf)
            },
        )
        .map(|(v, i, _)| (v, i))
        .reduce(|| (f64::NEG_INFINITY, u64::MAX), pick);
    if idx == u64::MAX {
        return Err(Error::Infeasible("no wage vector on the oracle grid meets the participation constraint".into()));
    }
    let mut wages = vec![0.0; axes.len()];
    decode(idx, &mut wages);
    let a = max_action(p, &wages, target).expect("winning point is feasible");
    Ok(Best { wages, a, value, evaluated: total })
}

fn objective(p: &ProblemSpec, wages: &[f64], a: f64) -> f64 {
    dot(p.shock.probs(), p.shock.atoms().iter().zip(wages).map(|(b, w)| p.principal.eval(p.x0 + a + b - w)))
}

/// Largest `a >= 0` with `E[u_A(W - K a^2 / 2)] >= u_A(y)`.
///
/// `f(s) = E[u_A(W - s)] - u_A(y)` is decreasing, nonnegative at `s = 0` and
/// nonpositive at `s = max W - y`. Safeguarded Newton inside that bracket.
fn max_action(p: &ProblemSpec, wages: &[f64], target: f64) -> Option<f64> {
    let probs = p.shock.probs();
    let f = |s: f64| dot(probs, wages.iter().map(|w| p.agent.eval(w - s))) - target;
    let df = |s: f64| -dot(probs, wages.iter().map(|w| p.agent.deriv(w - s)));
    if f(0.0) < 0.0 {
        return None;
    }
    let (mut lo, mut hi) = (0.0f64, wages.iter().copied().fold(f64::NEG_INFINITY, f64::max) - p.y);
    if hi <= 0.0 {
        return Some(0.0);
    }
    let mut s = lo;
    for _ in 0..200 {
        let fs = f(s);
        if fs == 0.0 {
            lo = s;
            break;
        }
        if fs > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let d = df(s);
        let newton = s - fs / d;
        let next = if d < 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 1e-15 * hi.max(1.0) || next == s {
            break;
        }
        s = next;
    }
    Some((2.0 * lo / p.k).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{rs_solve, ProblemFile};
    use crate::shock::{ShockGrid, ShockSpec};
    use crate::utility::UtilitySpec;

    fn fig4() -> ProblemSpec {
        ProblemFile {
            x0: 1.0,
            k: 2.0,
            y: 0.5,
            m: 0.0,
            upper: None,
            principal: UtilitySpec::cara(5.0),
            agent: UtilitySpec::cara(0.1),
            shock: ShockSpec::Gaussian { n: 64 },
        }
        .build()
        .unwrap()
    }

    #[test]
    fn known_bad_certificate_is_rejected() {
        let p = fig4();
        let rs = rs_solve(&p).unwrap();
        let mult = Multipliers::zeros(p.n_states(), rs.lambda);
        let r = kkt_verify(&p, &rs.contract, &mult, 1e-6);
        assert!(r.r_stationarity_w > 0.01, "{}", r.r_stationarity_w);
        assert!(!r.passed);
    }

    #[test]
    fn anchor_fails_action_stationarity() {
        let p = fig4();
        let c = Contract::StateWise { wages: vec![p.y; p.n_states()], a: 0.0 };
        let r = kkt_verify(&p, &c, &Multipliers::zeros(p.n_states(), 0.0), 1e-6);
        let want = p.shock.expect(|_, b| p.principal.deriv(p.x0 + b - p.y));
        assert!((r.r_stationarity_a - want).abs() < 1e-12 * want);
        assert!(!r.passed);
    }

    #[test]
    fn pinned_contract_has_no_interior() {
        let p = fig4();
        let c = Contract::StateWise { wages: vec![p.m; p.n_states()], a: 0.0 };
        assert!(matches!(borch_check(&p, &c, 1.0, 1e-8), Err(Error::NoInteriorStates)));
    }

    #[test]
    fn unbounded_benchmark_is_flat() {
        let p = fig4().with_bounds(-1e9, None).unwrap();
        let rs = rs_solve(&p).unwrap();
        let b = borch_check(&p, &rs.contract, rs.lambda, 1e-8).unwrap();
        assert!(b.spread <= 1e-9, "{}", b.spread);
        assert!((b.interior_mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_deterministic_shock() {
        let p = ProblemSpec::with_grid(
            1.0,
            2.0,
            1.0,
            0.0,
            Some(10.0),
            UtilitySpec::cara(0.2),
            UtilitySpec::cara(0.2),
            ShockGrid::deterministic(0.0),
        )
        .unwrap();
        let o = brute_force_oracle(&p, 0.01, 0.01).unwrap();
        assert!((o.contract.action() - 0.5).abs() <= 0.01);
        assert!((o.contract.wages(&p)[0] - 1.25).abs() <= 0.01);
    }

    #[test]
    fn oracle_refuses_large_grids() {
        let p = ProblemSpec::with_grid(
            1.0,
            2.0,
            1.0,
            0.0,
            Some(10.0),
            UtilitySpec::cara(0.2),
            UtilitySpec::cara(0.2),
            ShockGrid::uniform(-1.0, 1.0, 5).unwrap(),
        )
        .unwrap();
        assert!(matches!(brute_force_oracle(&p, 1e-3, 1e-3), Err(Error::GridTooLarge { .. })));
        assert!(brute_force_oracle(&fig4(), 0.1, 0.1).is_err());
    }

    #[test]
    fn max_action_binds() {
        let p = fig4();
        let wages = vec![2.0; p.n_states()];
        let a = max_action(&p, &wages, p.reservation_utility()).unwrap();
        assert!((a - (2.0f64 * 1.5 / 2.0).sqrt()).abs() < 1e-12);
        assert!(max_action(&p, &vec![0.1; p.n_states()], p.reservation_utility()).is_none());
    }
}
