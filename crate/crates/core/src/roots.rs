//! Bracketed bisection, the root finder behind every condition solve.

/// Outcome of a bisection run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bisection {
    pub root: f64,
    pub residual: f64,
    pub iterations: u32,
}

/// Hard cap on halvings; a double-precision bracket collapses well before this.
pub const MAX_ITERATIONS: u32 = 200;

/// Bisect `f` on `[lo, hi]` until `|f| <= f_tol` or the bracket cannot shrink
/// any further. Returns `None` when the endpoints do not bracket a sign change.
pub fn bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, f_tol: f64) -> Option<Bisection> {
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Some(Bisection { root: lo, residual: 0.0, iterations: 0 });
    }
    if f_hi == 0.0 {
        return Some(Bisection { root: hi, residual: 0.0, iterations: 0 });
    }
    if !(f_lo.signum() != f_hi.signum()) || f_lo.is_nan() || f_hi.is_nan() {
        return None;
    }
    let mut best = if f_lo.abs() < f_hi.abs() { (lo, f_lo) } else { (hi, f_hi) };
    for iterations in 1..=MAX_ITERATIONS {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            return Some(Bisection { root: best.0, residual: best.1.abs(), iterations });
        }
        let f_mid = f(mid);
        if f_mid.abs() < best.1.abs() {
            best = (mid, f_mid);
        }
        if f_mid == 0.0 || f_mid.abs() <= f_tol {
            return Some(Bisection { root: mid, residual: f_mid.abs(), iterations });
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(Bisection { root: best.0, residual: best.1.abs(), iterations: MAX_ITERATIONS })
}

/// First sub-interval of a uniform `pieces`-way split of `[lo, hi]` on which
/// `f` changes sign.
pub fn first_sign_change<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, pieces: usize) -> Option<(f64, f64)> {
    let pieces = pieces.max(1);
    let width = (hi - lo) / pieces as f64;
    let mut a = lo;
    let mut fa = f(a);
    for i in 1..=pieces {
        let b = if i == pieces { hi } else { lo + width * i as f64 };
        let fb = f(b);
        if fa == 0.0 || fb == 0.0 || fa.signum() != fb.signum() {
            return Some((a, b));
        }
        a = b;
        fa = fb;
    }
    None
}
