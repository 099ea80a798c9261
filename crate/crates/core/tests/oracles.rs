//! Solver outputs checked against independently computed references.

mod common;

use common::*;
use pactsolve_core::cara::cara_ll_solve;
use pactsolve_core::general::{general_ll_solve, SolverConfig};
use pactsolve_core::model::{agent_value_at, principal_value_at, rs_solve, Contract};
use pactsolve_core::verification::{borch_check, brute_force_oracle, kkt_verify};
use pactsolve_core::{ProblemFile, ProblemSpec, ShockGrid, ShockSpec, UtilitySpec};

fn normal_pdf(b: f64) -> f64 {
    (-0.5 * b * b).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Composite Simpson rule of `f(b) phi(b)` over `[-12, 12]`.
fn simpson_gaussian(f: impl Fn(f64) -> f64) -> f64 {
    let n = 24_000;
    let (lo, hi) = (-12.0, 12.0);
    let h = (hi - lo) / n as f64;
    let mut sum = 0.0;
    for i in 0..=n {
        let b = lo + h * i as f64;
        let w = match i {
            0 => 1.0,
            i if i == n => 1.0,
            i if i % 2 == 1 => 4.0,
            _ => 2.0,
        };
        sum += w * f(b) * normal_pdf(b);
    }
    sum * h / 3.0
}

#[test]
fn benchmark_intercept_matches_gaussian_mgf() {
    for &(gp, ga, x0, y) in &[(0.2, 0.2, 1.0, 1.0), (5.0, 0.1, 1.0, 0.5), (1.0, 3.0, -2.0, 0.3)] {
        let p = cara_instance(gp, ga, x0, y);
        let Contract::Parametric { rho, beta, a } = rs_solve(&p).unwrap().contract else { panic!() };
        let want_rho = gp / (gp + ga);
        let want = y + 0.25 - want_rho * (x0 + 0.5) + ga * want_rho * want_rho / 2.0;
        assert!((rho - want_rho).abs() < 1e-15);
        assert!((a - 0.5).abs() < 1e-15);
        assert!((beta - want).abs() < 1e-8, "{beta} vs {want}");
    }
}

#[test]
fn principal_anchor_value_is_lognormal() {
    let p = cara_instance(0.7, 0.3, 2.0, 1.0);
    let v = principal_value_at(&p, &vec![1.0; p.n_states()], 0.0);
    let want = -(-0.7f64 * (2.0 - 1.0)).exp() * (0.7f64 * 0.7 / 2.0).exp();
    assert!((v - want).abs() < 1e-8);
}

#[test]
fn hermite_expectations_match_simpson() {
    // Non-polynomial integrands: clamped linear wages under each utility.
    let grid = ShockGrid::gauss_hermite(64).unwrap();
    for kind in KINDS {
        for &(rho, beta) in &[(0.5, 0.1), (0.9, -0.4)] {
            let wage = |b: f64| (rho * (1.5 + b) + beta).max(0.0);
            let f = |b: f64| kind.eval(1.5 + b - wage(b));
            let gh = grid.expect(|_, b| f(b));
            let simpson = simpson_gaussian(f);
            // The kink of the clamp limits Gauss-Hermite accuracy.
            assert!((gh - simpson).abs() < 5e-4 * simpson.abs().max(1.0), "{kind:?}: {gh} vs {simpson}");
        }
        let smooth = |b: f64| kind.eval(0.3 * b + 1.0);
        let gh = grid.expect(|_, b| smooth(b));
        let simpson = simpson_gaussian(smooth);
        assert!((gh - simpson).abs() < 1e-6, "{kind:?}: {gh} vs {simpson}");
    }
}

#[test]
fn general_matches_parametric_on_figure_one() {
    let p = fig1();
    let cara = cara_ll_solve(&p).unwrap();
    let gen = general_ll_solve(&p, &SolverConfig::default()).unwrap();
    assert!((gen.value - cara.value).abs() < 1e-6);
    let (rho, beta) = cara.slope_intercept();
    let a = gen.action();
    for (i, w) in gen.wages().iter().enumerate() {
        let fit = (rho * p.output(i, a) + beta).max(p.m);
        assert!((w - fit).abs() < 1e-4, "state {i}: {w} vs {fit}");
    }
}

#[test]
fn risk_neutral_principal_pays_sure_wage() {
    for shock in [ShockSpec::Gaussian { n: 16 }, ShockSpec::Custom { atoms: vec![-1.0, 2.0], probs: vec![0.6, 0.4] }] {
        let p = ProblemFile {
            x0: 1.0,
            k: 2.0,
            y: 1.0,
            m: 0.0,
            upper: None,
            principal: UtilitySpec::RiskNeutral,
            agent: UtilitySpec::cara(1.5),
            shock,
        }
        .build()
        .unwrap();
        let s = general_ll_solve(&p, &SolverConfig::default()).unwrap();
        assert!((s.action() - 0.5).abs() < 1e-6);
        assert!(s.wages().iter().all(|w| (w - 1.25).abs() < 1e-6));
    }
}

fn extlog_uniform(n: usize) -> ProblemSpec {
    ProblemFile {
        x0: 1.0,
        k: 2.0,
        y: 1.0,
        m: 0.0,
        upper: Some(2.0),
        principal: UtilitySpec::ExtendedLog,
        agent: UtilitySpec::ExtendedLog,
        shock: ShockSpec::Uniform { lo: -5.0, hi: 5.0, n },
    }
    .build()
    .unwrap()
}

#[test]
fn extended_log_forty_atoms_and_downsampled_oracle() {
    let cfg = SolverConfig::default();
    let full = extlog_uniform(40);
    let s = general_ll_solve(&full, &cfg).unwrap();
    assert!(s.kkt.passed, "{:?}", s.kkt);
    assert!((agent_value_at(&full, s.wages(), s.action()) - full.reservation_utility()).abs() < 1e-8);

    let small = extlog_uniform(5);
    let s5 = general_ll_solve(&small, &cfg).unwrap();
    let o = brute_force_oracle(&small, 0.1, 0.01).unwrap();
    assert!((s5.value - o.value).abs() < 1e-4, "{} vs {}", s5.value, o.value);
    assert!(s5.value >= o.value - 1e-4);
}

#[test]
fn oracle_deterministic_instance_is_first_best() {
    let p = ProblemFile {
        x0: 1.0,
        k: 2.0,
        y: 1.0,
        m: 0.0,
        upper: Some(10.0),
        principal: UtilitySpec::cara(0.5),
        agent: UtilitySpec::cara(0.5),
        shock: ShockSpec::Custom { atoms: vec![0.0], probs: vec![1.0] },
    }
    .build()
    .unwrap();
    let step = 0.05;
    let o = brute_force_oracle(&p, step, 0.01).unwrap();
    assert!((o.contract.action() - 0.5).abs() <= step);
    assert!((o.contract.wages(&p)[0] - 1.25).abs() <= step);
}

#[test]
fn borch_rule_on_cara_optimum() {
    let p = fig1();
    let s = cara_ll_solve(&p).unwrap();
    let b = borch_check(&p, &s.contract, s.lambda, 1e-9).unwrap();
    assert!(b.spread <= 1e-6, "{b:?}");
    assert!(b.interior_mass > 0.99, "{b:?}");
}

#[test]
fn borch_rule_on_unbounded_benchmark() {
    let p = fig4().with_bounds(-1e6, None).unwrap();
    let rs = rs_solve(&p).unwrap();
    let b = borch_check(&p, &rs.contract, 0.0, 1e-9).unwrap();
    assert!(b.spread <= 1e-9, "{b:?}");
    assert!((b.interior_mass - 1.0).abs() < 1e-12);
}

#[test]
fn figure_four_parametric_solution_audits_clean() {
    let p = fig4();
    let s = cara_ll_solve(&p).unwrap();
    let r = kkt_verify(&p, &s.contract, &s.multipliers, 1e-6);
    assert!(r.passed, "{r:?}");
    for v in [r.r_stationarity_a, r.r_stationarity_w, r.r_pc_slack, r.r_bound_slack] {
        assert!(v <= 1e-6);
    }
}

#[test]
fn corpus_certificates_reproduce() {
    let corpus = load_corpus();
    assert_eq!(corpus.len(), 20);
    let cfg = SolverConfig::default();
    for c in corpus.iter().filter(|c| c.problem.build().unwrap().n_states() <= 3) {
        let p = c.problem.build().unwrap();
        let o = brute_force_oracle(&p, c.wage_step, c.action_step).unwrap();
        assert!((o.value - c.value).abs() <= 1e-12 * c.value.abs().max(1.0), "{}: {} vs {}", c.name, o.value, c.value);
        assert!((o.contract.action() - c.a).abs() <= 1e-12, "{}", c.name);
        let s = general_ll_solve(&p, &cfg).unwrap();
        assert!(s.value >= c.value - 1e-4 && (s.value - c.value).abs() < 1e-4, "{}", c.name);
    }
}
