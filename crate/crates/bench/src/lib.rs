//! Benchmark instances.

use pactsolve_core::{ProblemFile, ProblemSpec, ShockSpec, UtilitySpec};

pub fn cara_gaussian(gamma_p: f64, gamma_a: f64, x0: f64, y: f64) -> ProblemSpec {
    ProblemFile {
        x0,
        k: 2.0,
        y,
        m: 0.0,
        upper: None,
        principal: UtilitySpec::cara(gamma_p),
        agent: UtilitySpec::cara(gamma_a),
        shock: ShockSpec::Gaussian { n: 64 },
    }
    .build()
    .expect("valid instance")
}

/// Extended-log pair on a uniform grid with `n` cells, wages in `[0, 2]`.
pub fn extended_log_uniform(n: usize) -> ProblemSpec {
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
    .expect("valid instance")
}
