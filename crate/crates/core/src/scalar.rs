//! One-dimensional root finding and maximization.

/// Iteration cap shared by every bracketing search.
pub const MAX_BISECTION_ITERS: usize = 200;

/// Result of a bracketing root search.
#[derive(Debug, Clone, Copy)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
    pub iterations: usize,
    /// Bracket width at termination.
    pub width: f64,
}

/// Root of a nondecreasing `f` inside `[lo, hi]`, where `f(lo) <= 0 <= f(hi)`.
///
/// Bisects until the bracket cannot be split further in floating point, the
/// residual is exactly zero, or the iteration cap is hit. Returns the end of
/// the final bracket with the smaller residual magnitude.
pub fn bisect_increasing(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> Root {
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    let mut iterations = 0;
    while iterations < MAX_BISECTION_ITERS {
        if f_lo == 0.0 || f_hi == 0.0 {
            break;
        }
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        iterations += 1;
        if f_mid.is_nan() {
            break;
        }
        if f_mid <= 0.0 {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    let (x, residual) = if f_lo.abs() <= f_hi.abs() { (lo, f_lo) } else { (hi, f_hi) };
    Root { x, residual, iterations, width: hi - lo }
}

/// Expand `[lo, hi]` upwards (moving `hi`) until a nondecreasing `f` is
/// positive at `hi`. Returns `None` when `limit` is reached first.
pub fn expand_up(mut f: impl FnMut(f64) -> f64, lo: f64, mut step: f64, limit: f64) -> Option<f64> {
    let mut hi = lo + step;
    for _ in 0..MAX_BISECTION_ITERS {
        if hi > limit {
            hi = limit;
        }
        if f(hi) > 0.0 {
            return Some(hi);
        }
        if hi >= limit {
            return None;
        }
        step *= 2.0;
        hi = lo + step;
    }
    None
}

/// Expand downwards until a nondecreasing `f` is non-positive at the returned point.
pub fn expand_down(mut f: impl FnMut(f64) -> f64, hi: f64, mut step: f64, limit: f64) -> Option<f64> {
    let mut lo = hi - step;
    for _ in 0..MAX_BISECTION_ITERS {
        if lo < limit {
            lo = limit;
        }
        if f(lo) <= 0.0 {
            return Some(lo);
        }
        if lo <= limit {
            return None;
        }
        step *= 2.0;
        lo = hi - step;
    }
    None
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`,
/// stopping once the bracket is no wider than `tol`.
pub fn golden_max(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    while (b - a) > tol && iterations < MAX_BISECTION_ITERS {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iterations += 1;
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_collapses_bracket() {
        let r = bisect_increasing(|x| x * x * x - 2.0, 0.0, 2.0);
        assert!((r.x - 2f64.cbrt()).abs() < 1e-15);
        assert!(r.iterations <= MAX_BISECTION_ITERS);
    }

    #[test]
    fn bisection_exact_endpoint() {
        let r = bisect_increasing(|x| x, 0.0, 1.0);
        assert_eq!(r.x, 0.0);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn expansion() {
        let hi = expand_up(|x| x - 37.0, 0.0, 1.0, 1e6).unwrap();
        assert!(hi > 37.0);
        assert!(expand_up(|x| x - 37.0, 0.0, 1.0, 10.0).is_none());
        let lo = expand_down(|x| x + 5.0, 0.0, 1.0, -1e6).unwrap();
        assert!(lo <= -5.0);
    }

    #[test]
    fn golden() {
        let (x, v) = golden_max(|x| -(x - 0.3) * (x - 0.3) + 1.0, -2.0, 2.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-8);
        assert!((v - 1.0).abs() < 1e-15);
    }
}
