//! One-dimensional search helpers.

/// Location and value of a minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the minimum of a unimodal `f` on `[lo, hi]`,
/// stopping once the bracket is narrower than `tol`.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> Minimum {
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    while b - a > tol {
        iterations += 1;
        if fc <= fd {
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
    }
    let (x, value) = if fc <= fd { (c, fc) } else { (d, fd) };
    Minimum {
        x,
        value,
        iterations,
    }
}

/// Bisection for a sign change of `f` between `lo` and `hi`, which must
/// bracket one. Stops when the bracket is within `rel_tol` of its midpoint.
/// With `geometric` the bracket is split at the geometric mean.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    rel_tol: f64,
    geometric: bool,
) -> f64 {
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    for _ in 0..200 {
        let mid = if geometric { (a * b).sqrt() } else { 0.5 * (a + b) };
        if (b - a).abs() <= rel_tol * mid.abs() {
            return mid;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    if geometric {
        (a * b).sqrt()
    } else {
        0.5 * (a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_minimum() {
        let m = golden_section(|x| (x - 0.3).powi(2) + 2.0, 0.0, 1.0, 1e-9);
        assert!((m.x - 0.3).abs() < 1e-6);
        assert!((m.value - 2.0).abs() < 1e-15);
    }

    #[test]
    fn golden_handles_boundary_minimum() {
        let m = golden_section(|x| x, 0.0, 1.0, 1e-8);
        assert!(m.x < 1e-7);
    }

    #[test]
    fn bisect_linear_and_geometric() {
        let r = bisect(|x| x - 0.123, 0.0, 1.0, 1e-10, false);
        assert!((r - 0.123).abs() < 1e-10);
        let r = bisect(|x| x.ln() + 7.0, 1e-6, 1.0, 1e-6, true);
        assert!(((r - (-7.0f64).exp()) / r).abs() < 1e-6);
    }
}
