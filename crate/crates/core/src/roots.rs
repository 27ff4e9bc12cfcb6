//! Scalar root finding and minimization helpers.

/// Bisection on `[lo, hi]` where `f(lo)` and `f(hi)` have opposite signs
/// (a zero at either end counts as the root). Stops once the bracket is no
/// wider than `width` and returns the endpoint with the smaller `|f|`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, width: f64) -> f64 {
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    if f_lo == 0.0 {
        return lo;
    }
    if f_hi == 0.0 {
        return hi;
    }
    debug_assert!(f_lo.signum() != f_hi.signum(), "bisect: no sign change");
    // 2000 halvings exhaust any f64 interval
    for _ in 0..2000 {
        if (hi - lo).abs() <= width {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    if f_lo.abs() <= f_hi.abs() {
        lo
    } else {
        hi
    }
}

/// One Newton step from `x`, accepted only if it stays inside `[a, b]`
/// (either order) and does not increase `|f|`.
pub fn newton_polish<F, D>(mut f: F, mut df: D, x: f64, a: f64, b: f64) -> f64
where
    F: FnMut(f64) -> f64,
    D: FnMut(f64) -> f64,
{
    let fx = f(x);
    let d = df(x);
    if fx == 0.0 || d == 0.0 || !d.is_finite() {
        return x;
    }
    let y = x - fx / d;
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if !(lo..=hi).contains(&y) {
        return x;
    }
    if f(y).abs() <= fx.abs() {
        y
    } else {
        x
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a minimum of a unimodal `f` on `[a, b]`.
/// Returns `(argmin, min)` once the bracket is narrower than `tol`.
pub fn golden_section_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..500 {
        if b - a <= tol {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-15);
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bisect_decreasing_function() {
        let r = bisect(|x| 1.0 - x, 0.0, 3.0, 1e-14);
        assert!((r - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bisect_endpoint_root() {
        assert_eq!(bisect(|x| x, 0.0, 1.0, 1e-12), 0.0);
    }

    #[test]
    fn newton_polish_improves() {
        let x = 1.45;
        let y = newton_polish(|x| x * x - 2.0, |x| 2.0 * x, x, 1.0, 2.0);
        assert!((y - 2f64.sqrt()).abs() < (x - 2f64.sqrt()).abs());
    }

    #[test]
    fn newton_polish_rejects_leaving_bracket() {
        let y = newton_polish(|x| x * x - 2.0, |x| 2.0 * x, 1.0, 1.0, 1.2);
        assert_eq!(y, 1.0);
    }

    #[test]
    fn golden_section_quadratic() {
        let (x, fx) = golden_section_min(|x| (x - 0.3).powi(2) + 1.0, -1.0, 2.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-14);
    }
}
