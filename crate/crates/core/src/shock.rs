//! Finite discretizations of the production noise.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest Gauss–Hermite order accepted by [`ShockGrid::gauss_hermite`].
pub const MAX_HERMITE_ORDER: usize = 256;

/// Default order used for `N(0, 1)` noise.
pub const DEFAULT_HERMITE_ORDER: usize = 64;

/// Atoms `b_i` with probabilities `p_i`.
///
/// Invariants: at least one atom, atoms strictly increasing, every `p_i > 0`,
/// and `sum p_i = 1` to within `1e-12`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShockGrid {
    atoms: Vec<f64>,
    probs: Vec<f64>,
    label: String,
}

/// How to build a [`ShockGrid`]; this is the form used in problem files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShockSpec {
    Gaussian {
        #[serde(default = "default_order")]
        n: usize,
    },
    Uniform { lo: f64, hi: f64, n: usize },
    Custom { atoms: Vec<f64>, probs: Vec<f64> },
}

fn default_order() -> usize {
    DEFAULT_HERMITE_ORDER
}

impl ShockSpec {
    pub fn build(&self) -> Result<ShockGrid> {
        match self {
            ShockSpec::Gaussian { n } => ShockGrid::gauss_hermite(*n),
            ShockSpec::Uniform { lo, hi, n } => ShockGrid::uniform(*lo, *hi, *n),
            ShockSpec::Custom { atoms, probs } => ShockGrid::custom(atoms, probs),
        }
    }
}

impl ShockGrid {
    /// `n`-point Gauss–Hermite rule rescaled to the standard normal.
    pub fn gauss_hermite(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_HERMITE_ORDER {
            return Err(Error::invalid("n", format!("Gauss-Hermite order must lie in 1..={MAX_HERMITE_ORDER}, got {n}")));
        }
        let (nodes, weights) = hermite_rule(n);
        let scale = PI.sqrt();
        let atoms = nodes.iter().map(|x| std::f64::consts::SQRT_2 * x).collect();
        let mut probs: Vec<f64> = weights.iter().map(|w| w / scale).collect();
        normalize(&mut probs);
        Ok(ShockGrid { atoms, probs, label: format!("gauss_hermite({n})") })
    }

    /// Midpoint rule on `[lo, hi]` with `n` equal cells.
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid("lo", format!("uniform shock needs lo < hi, got [{lo}, {hi}]")));
        }
        if n < 2 {
            return Err(Error::invalid("n", format!("uniform shock needs at least 2 cells, got {n}")));
        }
        let h = (hi - lo) / n as f64;
        let atoms = (0..n).map(|i| lo + (i as f64 + 0.5) * h).collect();
        let probs = vec![1.0 / n as f64; n];
        Ok(ShockGrid { atoms, probs, label: format!("uniform({lo}, {hi}, {n})") })
    }

    /// User-supplied atoms. Atoms are sorted and exact duplicates merged.
    pub fn custom(atoms: &[f64], probs: &[f64]) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::invalid("atoms", "custom shock needs at least one atom"));
        }
        if atoms.len() != probs.len() {
            return Err(Error::invalid(
                "probs",
                format!("{} atoms but {} probabilities", atoms.len(), probs.len()),
            ));
        }
        if let Some(a) = atoms.iter().find(|a| !a.is_finite()) {
            return Err(Error::invalid("atoms", format!("non-finite atom {a}")));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::invalid("probs", format!("probabilities must be positive, got {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("probs", format!("probabilities sum to {total}, not 1")));
        }

        let mut pairs: Vec<(f64, f64)> = atoms.iter().copied().zip(probs.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
        for (b, p) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == b => last.1 += p,
                _ => merged.push((b, p)),
            }
        }
        let (atoms, mut probs): (Vec<f64>, Vec<f64>) = merged.into_iter().unzip();
        normalize(&mut probs);
        let label = format!("custom({} atoms)", atoms.len());
        Ok(ShockGrid { atoms, probs, label })
    }

    /// Single atom at `b` with probability one.
    pub fn deterministic(b: f64) -> Self {
        ShockGrid { atoms: vec![b], probs: vec![1.0], label: format!("deterministic({b})") }
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `E[f(i, b_i)]` summed in index order with Neumaier compensation.
    pub fn expect(&self, mut f: impl FnMut(usize, f64) -> f64) -> f64 {
        compensated_sum(self.probs.iter().zip(&self.atoms).enumerate().map(|(i, (p, b))| p * f(i, *b)))
    }

    pub fn mean(&self) -> f64 {
        self.expect(|_, b| b)
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.expect(|_, b| (b - mu) * (b - mu))
    }

    pub fn max_abs_atom(&self) -> f64 {
        self.atoms.iter().fold(0.0, |m: f64, b| m.max(b.abs()))
    }
}

/// Neumaier-compensated sum; the summation order is the iterator order.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn normalize(probs: &mut [f64]) {
    let total = compensated_sum(probs.iter().copied());
    for p in probs.iter_mut() {
        *p /= total;
    }
}

/// Nodes (ascending) and weights of the physicists' Gauss–Hermite rule.
///
/// Newton iteration on the orthonormal Hermite recurrence, seeded with the
/// usual asymptotic guesses for the largest roots. Only the non-negative half
/// is computed; the rule is symmetric.
const RESCALE: f64 = 1e150;

/// Number of eigenvalues below `x` of the Hermite Jacobi matrix
/// (zero diagonal, off-diagonal `sqrt(k / 2)`).
fn sturm_count(n: usize, x: f64) -> usize {
    let mut count = 0;
    let mut q = -x;
    if q < 0.0 {
        count += 1;
    }
    for k in 1..n {
        let prev = if q == 0.0 { f64::MIN_POSITIVE } else { q };
        q = -x - (k as f64 / 2.0) / prev;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Orthonormal Hermite recurrence at `z`: returns `(p_n, p_n')` scaled by
/// `RESCALE^-shifts`, and `shifts`.
fn hermite_eval(n: usize, z: f64) -> (f64, f64, i32) {
    let mut p1 = PI.powf(-0.25);
    let mut p2 = 0.0;
    let mut shifts = 0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
        if p1.abs() > RESCALE {
            p1 /= RESCALE;
            p2 /= RESCALE;
            shifts += 1;
        }
    }
    (p1, (2.0 * n as f64).sqrt() * p2, shifts)
}

fn hermite_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let half = n.div_ceil(2);
    let mut roots = vec![0.0; half];
    let mut weights = vec![0.0; half];
    let bound = (2.0 * n as f64 + 1.0).sqrt() + 1.0;

    for i in 0..half {
        // i-th largest zero: the smallest x with at least n - i eigenvalues below it.
        let want = n - i;
        let (mut lo, mut hi) = (-bound, bound);
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if sturm_count(n, mid) >= want {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let mut z = 0.5 * (lo + hi);
        let (p, dp, _) = hermite_eval(n, z);
        if dp != 0.0 {
            let newton = z - p / dp;
            if newton >= lo && newton <= hi {
                z = newton;
            }
        }
        let (_, dp, shifts) = hermite_eval(n, z);
        roots[i] = z;
        let log_pp = dp.abs().ln() + f64::from(shifts) * RESCALE.ln();
        weights[i] = 2.0 * (-2.0 * log_pp).exp();
    }

    // roots are descending and non-negative; mirror into an ascending rule.
    let mut nodes = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for i in 0..half {
        nodes.push(-roots[i]);
        w.push(weights[i]);
    }
    let start = if n % 2 == 1 { half - 1 } else { half };
    for i in (0..start).rev() {
        nodes.push(roots[i]);
        w.push(weights[i]);
    }
    if n % 2 == 1 {
        // The middle node is exactly zero.
        nodes[half - 1] = 0.0;
    }
    (nodes, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn double_factorial(k: u32) -> f64 {
        (1..=k).rev().step_by(2).map(f64::from).product()
    }

    #[test]
    fn single_node() {
        let g = ShockGrid::gauss_hermite(1).unwrap();
        assert_eq!(g.atoms(), &[0.0]);
        assert!((g.probs()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn order_range() {
        assert!(ShockGrid::gauss_hermite(0).is_err());
        assert!(ShockGrid::gauss_hermite(257).is_err());
        let g = ShockGrid::gauss_hermite(256).unwrap();
        assert!(g.probs().iter().all(|p| *p > 0.0));
        assert!(g.atoms().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn moments_64() {
        let g = ShockGrid::gauss_hermite(64).unwrap();
        assert!(g.mean().abs() < 1e-10);
        assert!((g.expect(|_, b| b * b) - 1.0).abs() < 1e-10);
        let mgf = g.expect(|_, b| (-0.1 * b).exp());
        assert!((mgf - 0.005f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn exact_monomials() {
        // E[B^k] = (k-1)!! for even k, 0 for odd k; exact up to degree 2n-1.
        for n in [1usize, 2, 3, 5, 8, 16, 32, 64, 128] {
            let g = ShockGrid::gauss_hermite(n).unwrap();
            assert!((compensated_sum(g.probs().iter().copied()) - 1.0).abs() < 1e-12);
            for k in 0..(2 * n as u32).min(24) {
                let got = g.expect(|_, b| b.powi(k as i32));
                let want = if k % 2 == 1 { 0.0 } else { double_factorial(k.saturating_sub(1)) };
                assert!((got - want).abs() <= 1e-9 * want.max(1.0), "n={n} k={k}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn uniform_rule() {
        let g = ShockGrid::uniform(-5.0, 5.0, 2).unwrap();
        assert_eq!(g.atoms(), &[-2.5, 2.5]);
        assert_eq!(g.probs(), &[0.5, 0.5]);
        let g = ShockGrid::uniform(-5.0, 5.0, 200).unwrap();
        assert!(g.mean().abs() < 1e-12);
        assert!((g.variance() - 25.0 / 3.0).abs() < 1e-2);
        assert!(ShockGrid::uniform(0.0, 1.0, 1).is_err());
        assert!(ShockGrid::uniform(1.0, 1.0, 4).is_err());
    }

    #[test]
    fn custom_rules() {
        let g = ShockGrid::custom(&[0.0], &[1.0]).unwrap();
        assert_eq!(g.len(), 1);
        let g = ShockGrid::custom(&[1.0, -1.0], &[0.5, 0.5]).unwrap();
        assert_eq!(g.atoms(), &[-1.0, 1.0]);
        let g = ShockGrid::custom(&[0.0, 0.0], &[0.5, 0.5]).unwrap();
        assert_eq!(g.atoms(), &[0.0]);
        assert_eq!(g.probs(), &[1.0]);
        let g = ShockGrid::custom(&[3.0, 1.0, 2.0], &[0.2, 0.3, 0.5]).unwrap();
        assert_eq!(g.atoms(), &[1.0, 2.0, 3.0]);
        assert_eq!(g.probs(), &[0.3, 0.5, 0.2]);

        assert!(ShockGrid::custom(&[], &[]).is_err());
        assert!(ShockGrid::custom(&[0.0, 1.0], &[1.0, 0.0]).is_err());
        assert!(ShockGrid::custom(&[0.0, 1.0], &[0.5, 0.6]).is_err());
        assert!(ShockGrid::custom(&[0.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn spec_json() {
        let s: ShockSpec = serde_json::from_str(r#"{"kind":"gaussian","n":64}"#).unwrap();
        assert_eq!(s, ShockSpec::Gaussian { n: 64 });
        let s: ShockSpec = serde_json::from_str(r#"{"kind":"uniform","lo":-5,"hi":5,"n":200}"#).unwrap();
        assert_eq!(s.build().unwrap().len(), 200);
        let s: ShockSpec = serde_json::from_str(r#"{"kind":"custom","atoms":[1,-1],"probs":[0.5,0.5]}"#).unwrap();
        assert_eq!(s.build().unwrap().atoms(), &[-1.0, 1.0]);
    }
}
