//! Problem instances, contracts, and the two expected-utility functionals.
//!
//! Output under action `a` in state `i` is `x0 + a + b_i`; the agent's effort
//! cost is `K a^2 / 2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{bisect_increasing, expand_down, expand_up};
use crate::shock::{ShockGrid, ShockSpec};
use crate::utility::UtilitySpec;

/// Problem file layout: `{"x0", "K", "y", "m", "M"?, "principal", "agent", "shock"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub x0: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub y: f64,
    pub m: f64,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    pub principal: UtilitySpec,
    pub agent: UtilitySpec,
    pub shock: ShockSpec,
}

impl ProblemFile {
    pub fn build(&self) -> Result<ProblemSpec> {
        let shock = self.shock.build()?;
        ProblemSpec::from_parts(self.clone(), shock)
    }

    pub fn from_json(text: &str) -> Result<ProblemSpec> {
        let file: ProblemFile = serde_json::from_str(text)?;
        file.build()
    }
}

/// A validated problem instance.
///
/// Invariants: `K > 0`, `y >= 0`, `m <= y`, and `m < M` when an upper bound is
/// present. `y > M` is accepted here and reported as infeasible by the solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub x0: f64,
    pub k: f64,
    pub y: f64,
    pub m: f64,
    pub upper: Option<f64>,
    pub principal: UtilitySpec,
    pub agent: UtilitySpec,
    pub shock: ShockGrid,
    source: ShockSpec,
}

impl ProblemSpec {
    fn from_parts(file: ProblemFile, shock: ShockGrid) -> Result<Self> {
        let ProblemFile { x0, k, y, m, upper, principal, agent, shock: source } = file;
        if !x0.is_finite() {
            return Err(Error::invalid("x0", "must be finite"));
        }
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::invalid("K", "effort cost coefficient must be positive"));
        }
        if !(y.is_finite() && y >= 0.0) {
            return Err(Error::invalid("y", "reservation parameter must be non-negative"));
        }
        if !m.is_finite() {
            return Err(Error::invalid("m", "lower wage bound must be finite"));
        }
        if m > y {
            return Err(Error::invalid("m", format!("m ≤ y required (m = {m}, y = {y})")));
        }
        if let Some(big_m) = upper {
            if !big_m.is_finite() {
                return Err(Error::invalid("M", "upper wage bound must be finite when present"));
            }
            if m >= big_m {
                return Err(Error::invalid("M", format!("m < M required (m = {m}, M = {big_m})")));
            }
        }
        principal.validate()?;
        agent.validate()?;
        Ok(ProblemSpec { x0, k, y, m, upper, principal, agent, shock, source })
    }

    /// Build from an explicit grid (the file form records it as a custom shock).
    #[allow(clippy::too_many_arguments)]
    pub fn with_grid(
        x0: f64,
        k: f64,
        y: f64,
        m: f64,
        upper: Option<f64>,
        principal: UtilitySpec,
        agent: UtilitySpec,
        shock: ShockGrid,
    ) -> Result<Self> {
        let source = ShockSpec::Custom { atoms: shock.atoms().to_vec(), probs: shock.probs().to_vec() };
        let file = ProblemFile { x0, k, y, m, upper, principal, agent, shock: source };
        Self::from_parts(file, shock)
    }

    pub fn to_file(&self) -> ProblemFile {
        ProblemFile {
            x0: self.x0,
            k: self.k,
            y: self.y,
            m: self.m,
            upper: self.upper,
            principal: self.principal,
            agent: self.agent,
            shock: self.source.clone(),
        }
    }

    /// Same instance with different wage bounds.
    pub fn with_bounds(&self, m: f64, upper: Option<f64>) -> Result<Self> {
        let mut file = self.to_file();
        file.m = m;
        file.upper = upper;
        Self::from_parts(file, self.shock.clone())
    }

    /// Re-validate after editing public fields.
    pub fn revalidated(self) -> Result<Self> {
        let shock = self.shock.clone();
        Self::from_parts(self.to_file(), shock)
    }

    pub fn kappa(&self, a: f64) -> f64 {
        0.5 * self.k * a * a
    }

    pub fn kappa_prime(&self, a: f64) -> f64 {
        self.k * a
    }

    /// Output in state `i` under action `a`.
    pub fn output(&self, i: usize, a: f64) -> f64 {
        self.x0 + a + self.shock.atoms()[i]
    }

    pub fn upper_or_inf(&self) -> f64 {
        self.upper.unwrap_or(f64::INFINITY)
    }

    pub fn n_states(&self) -> usize {
        self.shock.len()
    }

    pub fn reservation_utility(&self) -> f64 {
        self.agent.eval(self.y)
    }

    /// Both parties CARA: `(gamma_P, gamma_A)`.
    pub fn cara_pair(&self) -> Option<(f64, f64)> {
        Some((self.principal.cara_gamma()?, self.agent.cara_gamma()?))
    }

    pub fn clamp_wage(&self, w: f64) -> f64 {
        w.max(self.m).min(self.upper_or_inf())
    }

    /// Jensen upper bound on the principal's value over all feasible contracts.
    pub fn principal_value_bound(&self) -> f64 {
        let a = 1.0 / self.k;
        self.principal.eval(self.x0 - self.y + self.shock.mean() + a - self.kappa(a))
    }
}

/// A (wage, action) pair.
///
/// `Parametric` realizes state-wise wages `clamp(rho (x0 + a + b_i) + beta, m, M)`
/// against the problem it is evaluated on. `StateWise` carries one wage per atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Contract {
    Parametric { rho: f64, beta: f64, a: f64 },
    StateWise { wages: Vec<f64>, a: f64 },
}

impl Contract {
    pub fn action(&self) -> f64 {
        match *self {
            Contract::Parametric { a, .. } | Contract::StateWise { a, .. } => a,
        }
    }

    /// Realized wage in every state of `p`.
    pub fn wages(&self, p: &ProblemSpec) -> Vec<f64> {
        match self {
            Contract::Parametric { rho, beta, a } => {
                (0..p.n_states()).map(|i| p.clamp_wage(rho * p.output(i, *a) + beta)).collect()
            }
            Contract::StateWise { wages, .. } => wages.clone(),
        }
    }

    /// State-wise copy of the realized wages.
    pub fn to_state_wise(&self, p: &ProblemSpec) -> Contract {
        Contract::StateWise { wages: self.wages(p), a: self.action() }
    }

    pub fn validate(&self, p: &ProblemSpec) -> Result<()> {
        let a = self.action();
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::invalid("a", format!("action must be finite and non-negative, got {a}")));
        }
        match self {
            Contract::Parametric { rho, beta, .. } => {
                if !(0.0..=1.0).contains(rho) {
                    return Err(Error::invalid("rho", format!("slope must lie in [0, 1], got {rho}")));
                }
                if !beta.is_finite() {
                    return Err(Error::invalid("beta", "intercept must be finite"));
                }
            }
            Contract::StateWise { wages, .. } => {
                if wages.len() != p.n_states() {
                    return Err(Error::invalid(
                        "wages",
                        format!("{} wages for {} shock atoms", wages.len(), p.n_states()),
                    ));
                }
                if wages.iter().any(|w| !w.is_finite()) {
                    return Err(Error::invalid("wages", "wages must be finite"));
                }
            }
        }
        Ok(())
    }
}

/// KKT multipliers: `lambda` for the participation constraint, `z` and `y`
/// per state for the lower and upper wage bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    pub lambda: f64,
    pub z: Vec<f64>,
    #[serde(rename = "y")]
    pub y_mult: Vec<f64>,
}

impl Multipliers {
    pub fn zeros(n: usize, lambda: f64) -> Self {
        Multipliers { lambda, z: vec![0.0; n], y_mult: vec![0.0; n] }
    }

    /// Split the state-wise stationarity gap `u_P' - lambda u_A'` into its
    /// positive part (lower bound) and negative part (upper bound).
    pub fn from_gap(p: &ProblemSpec, wages: &[f64], a: f64, lambda: f64) -> Self {
        let kappa = p.kappa(a);
        let mut z = Vec::with_capacity(wages.len());
        let mut y_mult = Vec::with_capacity(wages.len());
        for (i, w) in wages.iter().enumerate() {
            let r = p.principal.deriv(p.output(i, a) - w) - lambda * p.agent.deriv(w - kappa);
            z.push(r.max(0.0));
            y_mult.push((-r).max(0.0));
        }
        if p.upper.is_none() {
            y_mult.iter_mut().for_each(|v| *v = 0.0);
        }
        Multipliers { lambda, z, y_mult }
    }
}

/// `E[u_P(X^a - W)]` for explicit wages.
pub fn principal_value_at(p: &ProblemSpec, wages: &[f64], a: f64) -> f64 {
    p.shock.expect(|i, b| p.principal.eval(p.x0 + a + b - wages[i]))
}

/// `E[u_A(W - kappa(a))]` for explicit wages.
pub fn agent_value_at(p: &ProblemSpec, wages: &[f64], a: f64) -> f64 {
    let kappa = p.kappa(a);
    p.shock.expect(|i, _| p.agent.eval(wages[i] - kappa))
}

pub fn principal_value(p: &ProblemSpec, c: &Contract) -> f64 {
    principal_value_at(p, &c.wages(p), c.action())
}

pub fn agent_value(p: &ProblemSpec, c: &Contract) -> f64 {
    agent_value_at(p, &c.wages(p), c.action())
}

/// True if any utility evaluation behind the two functionals hit the exponent clamp.
pub fn overflowed(p: &ProblemSpec, wages: &[f64], a: f64) -> bool {
    let kappa = p.kappa(a);
    wages.iter().enumerate().any(|(i, w)| {
        p.principal.saturates(p.output(i, a) - w) || p.agent.saturates(w - kappa)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSide {
    Lower,
    Upper,
}

/// Worst wage-bound violation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundViolation {
    pub state: usize,
    pub side: BoundSide,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// `u_A(y) - E[u_A(W - kappa)]`, positive when the participation constraint fails.
    pub pc_shortfall: f64,
    pub pc_violated: bool,
    pub bound_violation: Option<BoundViolation>,
    pub negative_action: bool,
}

pub fn is_feasible(p: &ProblemSpec, c: &Contract, tol: f64) -> FeasibilityReport {
    let wages = c.wages(p);
    let a = c.action();
    let upper = p.upper_or_inf();
    let mut worst: Option<BoundViolation> = None;
    for (state, w) in wages.iter().enumerate() {
        let below = p.m - w;
        let above = w - upper;
        let (side, magnitude) = if below >= above { (BoundSide::Lower, below) } else { (BoundSide::Upper, above) };
        if magnitude > tol && worst.is_none_or(|v| magnitude > v.magnitude) {
            worst = Some(BoundViolation { state, side, magnitude });
        }
    }
    let pc_shortfall = p.reservation_utility() - agent_value_at(p, &wages, a);
    let pc_violated = pc_shortfall > tol;
    let negative_action = a < 0.0;
    FeasibilityReport {
        feasible: worst.is_none() && !pc_violated && !negative_action,
        pc_shortfall,
        pc_violated,
        bound_violation: worst,
        negative_action,
    }
}

/// Unbounded-wage benchmark solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RsSolution {
    pub contract: Contract,
    /// Participation-constraint multiplier (the constant Borch ratio).
    pub lambda: f64,
}

/// Solve the benchmark problem without wage bounds.
///
/// Supported pairs: CARA/CARA (linear sharing rule with slope
/// `gamma_P / (gamma_P + gamma_A)`) and a risk-neutral principal with any agent
/// (constant wage `y + kappa(1/K)`). The returned parametric contract should be
/// evaluated on an instance whose bounds do not bind if the raw linear wage is
/// wanted.
pub fn rs_solve(p: &ProblemSpec) -> Result<RsSolution> {
    let a = 1.0 / p.k;
    let kappa = p.kappa(a);
    if p.principal.is_risk_neutral() {
        let wage = p.y + kappa;
        let lambda = 1.0 / p.agent.deriv(p.y);
        return Ok(RsSolution { contract: Contract::Parametric { rho: 0.0, beta: wage, a }, lambda });
    }
    let Some((gp, ga)) = p.cara_pair() else {
        return Err(Error::Unsupported(format!(
            "benchmark solver needs CARA/CARA or a risk-neutral principal, got {}/{}",
            p.principal.name(),
            p.agent.name()
        )));
    };
    let rho = gp / (gp + ga);
    let target = p.reservation_utility();
    let residual = |beta: f64| {
        p.shock.expect(|_, b| p.agent.eval(rho * (p.x0 + a + b) + beta - kappa)) - target
    };
    let centre = p.y + kappa - rho * (p.x0 + a);
    let half = 50.0 / ga;
    let mut lo = centre - half;
    let mut hi = centre + half;
    if residual(lo) > 0.0 {
        lo = expand_down(residual, lo, half, -1e12).ok_or_else(|| Error::NonBinding("benchmark intercept (lower)".into()))?;
    }
    if residual(hi) <= 0.0 {
        hi = expand_up(residual, hi, half, 1e12).ok_or_else(|| Error::NonBinding("benchmark intercept (upper)".into()))?;
    }
    let root = bisect_increasing(residual, lo, hi);
    let beta = root.x;
    let lambda = cara_lambda(gp, ga, beta, kappa);
    Ok(RsSolution { contract: Contract::Parametric { rho, beta, a }, lambda })
}

/// Multiplier implied by the intercept of a CARA sharing rule:
/// interior wages `rho x + beta` satisfy the Borch rule with this `lambda`.
pub fn cara_lambda(gp: f64, ga: f64, beta: f64, kappa: f64) -> f64 {
    ((gp / ga).ln() + (gp + ga) * beta - ga * kappa).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

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
    fn risk_neutral_anchor_value() {
        let p = ProblemSpec::with_grid(
            2.0,
            2.0,
            0.5,
            0.0,
            None,
            UtilitySpec::RiskNeutral,
            UtilitySpec::cara(1.0),
            ShockGrid::custom(&[0.0], &[1.0]).unwrap(),
        )
        .unwrap();
        let c = Contract::StateWise { wages: vec![0.5], a: 0.0 };
        assert_eq!(principal_value(&p, &c), 1.5);
    }

    #[test]
    fn cara_anchor_lognormal() {
        let p = fig1();
        let c = Contract::StateWise { wages: vec![p.y; p.n_states()], a: 0.0 };
        let want = -(-0.2f64 * (p.x0 - p.y)).exp() * (0.2f64 * 0.2 / 2.0).exp();
        assert!((principal_value(&p, &c) - want).abs() < 1e-8);
    }

    #[test]
    fn representations_agree() {
        let p = fig1();
        let par = Contract::Parametric { rho: 0.0, beta: p.y, a: 0.0 };
        let sw = Contract::StateWise { wages: vec![p.y; p.n_states()], a: 0.0 };
        assert_eq!(principal_value(&p, &par), principal_value(&p, &sw));
        assert!((agent_value(&p, &sw) - p.reservation_utility()).abs() < 1e-15);
    }

    #[test]
    fn agent_value_gaussian_mgf() {
        let p = fig1().with_bounds(-1e6, None).unwrap();
        let (rho, beta, a) = (0.4, -0.3, 0.7);
        let c = Contract::Parametric { rho, beta, a };
        let ga: f64 = 0.2;
        let want = -(-ga * (rho * (p.x0 + a) + beta - p.kappa(a))).exp() * (ga * ga * rho * rho / 2.0).exp();
        assert!((agent_value(&p, &c) - want).abs() < 1e-8);
    }

    #[test]
    fn feasibility_flags() {
        let p = fig1().with_bounds(0.5, Some(4.0)).unwrap();
        let anchor = Contract::StateWise { wages: vec![p.y; p.n_states()], a: 0.0 };
        assert!(is_feasible(&p, &anchor, 1e-12).feasible);

        let floor = Contract::StateWise { wages: vec![p.m; p.n_states()], a: 0.0 };
        assert!(agent_value(&p, &floor) < p.reservation_utility());
        let r = is_feasible(&p, &floor, 1e-9);
        assert!(!r.feasible && r.pc_violated && r.bound_violation.is_none());

        let mut wages = vec![p.y; p.n_states()];
        wages[3] = p.m - 0.25;
        wages[7] = 5.0;
        let r = is_feasible(&p, &Contract::StateWise { wages, a: 0.0 }, 1e-9);
        let v = r.bound_violation.unwrap();
        assert_eq!((v.state, v.side), (7, BoundSide::Upper));
        assert!((v.magnitude - 1.0).abs() < 1e-15);
    }

    #[test]
    fn validation_messages() {
        let mut f = fig1().to_file();
        f.m = 2.0;
        let err = f.build().unwrap_err().to_string();
        assert!(err.contains("m ≤ y required"), "{err}");
        let mut f = fig1().to_file();
        f.k = 0.0;
        assert!(f.build().is_err());
        let mut f = fig1().to_file();
        f.upper = Some(-1.0);
        assert!(f.build().is_err());
        // y above M is left to the solvers.
        let mut f = fig1().to_file();
        f.upper = Some(0.5);
        assert!(f.build().is_ok());
    }

    #[test]
    fn benchmark_captions() {
        let rs = rs_solve(&fig1()).unwrap();
        let Contract::Parametric { rho, beta, a } = rs.contract else { panic!() };
        assert_eq!(a, 0.5);
        assert_eq!(rho, 0.5);
        assert!((beta - 0.525).abs() < 1e-3);

        let mut f = fig1().to_file();
        f.principal = UtilitySpec::cara(5.0);
        f.agent = UtilitySpec::cara(0.1);
        f.y = 0.5;
        let rs = rs_solve(&f.build().unwrap()).unwrap();
        let Contract::Parametric { beta, .. } = rs.contract else { panic!() };
        assert!((beta - -0.673).abs() < 2e-3);
    }

    #[test]
    fn benchmark_risk_neutral_principal() {
        let mut f = fig1().to_file();
        f.principal = UtilitySpec::RiskNeutral;
        let p = f.build().unwrap();
        let rs = rs_solve(&p).unwrap();
        assert_eq!(rs.contract, Contract::Parametric { rho: 0.0, beta: 1.25, a: 0.5 });
        for w in rs.contract.wages(&p) {
            assert_eq!(w, 1.25);
        }
    }

    #[test]
    fn benchmark_rejects_other_pairs() {
        let mut f = fig1().to_file();
        f.agent = UtilitySpec::ExtendedLog;
        assert!(matches!(rs_solve(&f.build().unwrap()), Err(Error::Unsupported(_))));
    }

    #[test]
    fn problem_json_round_trip() {
        let text = r#"{"x0":1,"K":2,"y":1,"m":0,"principal":{"kind":"cara","gamma":0.2},
            "agent":{"kind":"cara","gamma":0.2},"shock":{"kind":"gaussian","n":64}}"#;
        let p = ProblemFile::from_json(text).unwrap();
        assert_eq!(p, fig1());
        let again = serde_json::to_string(&p.to_file()).unwrap();
        assert_eq!(ProblemFile::from_json(&again).unwrap(), p);
        assert!(ProblemFile::from_json(r#"{"x0":1}"#).is_err());
    }
}
