#![allow(dead_code)]

use std::path::PathBuf;

use pactsolve_core::{ProblemFile, ProblemSpec, ShockGrid, ShockSpec, UtilitySpec};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

pub fn cara_instance(gp: f64, ga: f64, x0: f64, y: f64) -> ProblemSpec {
    ProblemFile {
        x0,
        k: 2.0,
        y,
        m: 0.0,
        upper: None,
        principal: UtilitySpec::cara(gp),
        agent: UtilitySpec::cara(ga),
        shock: ShockSpec::Gaussian { n: 64 },
    }
    .build()
    .unwrap()
}

pub fn fig1() -> ProblemSpec {
    cara_instance(0.2, 0.2, 1.0, 1.0)
}

pub fn fig4() -> ProblemSpec {
    cara_instance(5.0, 0.1, 1.0, 0.5)
}

pub const KINDS: [UtilitySpec; 5] = [
    UtilitySpec::Cara { gamma: 0.5 },
    UtilitySpec::ExtendedLog,
    UtilitySpec::PartialIara,
    UtilitySpec::ExtendedArctan,
    UtilitySpec::RiskNeutral,
];

pub fn random_utility(rng: &mut ChaCha8Rng) -> UtilitySpec {
    match rng.gen_range(0..5) {
        0 => UtilitySpec::cara(rng.gen_range(0.1..2.0)),
        1 => UtilitySpec::ExtendedLog,
        2 => UtilitySpec::PartialIara,
        3 => UtilitySpec::ExtendedArctan,
        _ => UtilitySpec::RiskNeutral,
    }
}

/// Custom grid from unnormalized weights.
pub fn weighted_shock(atoms: &[f64], weights: &[f64]) -> ShockGrid {
    let total: f64 = weights.iter().sum();
    let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    ShockGrid::custom(atoms, &probs).unwrap()
}

pub fn random_shock(rng: &mut ChaCha8Rng) -> ShockGrid {
    match rng.gen_range(0..3) {
        0 => ShockGrid::gauss_hermite(rng.gen_range(3..=24)).unwrap(),
        1 => {
            let half = rng.gen_range(0.5..3.0);
            ShockGrid::uniform(-half, half, rng.gen_range(2..=12)).unwrap()
        }
        _ => {
            let n = rng.gen_range(1..=6);
            let atoms: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
            weighted_shock(&atoms, &weights)
        }
    }
}

/// A feasible instance with random utilities, grid, and bounds. Roughly half are two-sided.
pub fn random_instance(rng: &mut ChaCha8Rng, cara_only: bool) -> ProblemSpec {
    let (principal, agent) = if cara_only {
        (UtilitySpec::cara(rng.gen_range(0.1..3.0)), UtilitySpec::cara(rng.gen_range(0.1..3.0)))
    } else {
        (random_utility(rng), random_utility(rng))
    };
    let y = rng.gen_range(0.2..2.0);
    let m = y - rng.gen_range(0.0..2.0);
    let upper = rng.gen_bool(0.5).then(|| y + rng.gen_range(0.3..3.0));
    ProblemSpec::with_grid(
        rng.gen_range(0.0..3.0),
        rng.gen_range(0.5..4.0),
        y,
        m,
        upper,
        principal,
        agent,
        random_shock(rng),
    )
    .unwrap()
}

#[derive(Debug, Clone, Deserialize)]
pub struct Certificate {
    pub name: String,
    pub problem: ProblemFile,
    pub wage_step: f64,
    pub action_step: f64,
    pub value: f64,
    pub wages: Vec<f64>,
    pub a: f64,
}

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/corpus/v1")
}

/// Oracle certificates, sorted by file name.
pub fn load_corpus() -> Vec<Certificate> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap_or_else(|e| panic!("{}: {e}", p.display())))
        .collect()
}

/// Central difference with step `h`.
pub fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}
