//! Integer-order Bessel functions of the first kind.
//!
//! Values come from Miller's downward recurrence normalised with
//! `J_0(x) + 2 Σ J_{2k}(x) = 1`, except for small arguments where the power
//! series converges in a handful of terms. Negative arguments use
//! `J_m(-x) = (-1)^m J_m(x)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecfunError {
    #[error("Bessel argument must be finite, got {0}")]
    NonFinite(f64),
    #[error("zero index must be >= 1")]
    ZeroIndex,
    #[error("could not bracket zero #{k} of J_{m} below x = {limit}")]
    ZeroNotFound { m: u32, k: u32, limit: f64 },
}

/// Non-negative order of a Bessel function (the resonance index `m`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BesselOrder(u32);

impl BesselOrder {
    pub const fn new(m: u32) -> Self {
        BesselOrder(m)
    }

    pub const fn get(self) -> u32 {
        self.0
    }

    pub const fn is_even(self) -> bool {
        self.0.is_multiple_of(2)
    }
}

impl From<u32> for BesselOrder {
    fn from(m: u32) -> Self {
        BesselOrder(m)
    }
}

impl std::fmt::Display for BesselOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

const SERIES_LIMIT: f64 = 1.0;
const RESCALE_ABOVE: f64 = 1e250;

/// `J_m(x)`.
pub fn bessel_j(m: BesselOrder, x: f64) -> Result<f64, SpecfunError> {
    if !x.is_finite() {
        return Err(SpecfunError::NonFinite(x));
    }
    let order = m.get() as usize;
    let sign = if x < 0.0 && order % 2 == 1 { -1.0 } else { 1.0 };
    let ax = x.abs();
    let value = if ax < SERIES_LIMIT { power_series(order, ax) } else { miller_family(order, ax)[order] };
    Ok(sign * value)
}

/// `[J_0(x), J_1(x), ..., J_max(x)]` from a single recurrence sweep.
pub fn bessel_j_family(max_order: BesselOrder, x: f64) -> Result<Vec<f64>, SpecfunError> {
    if !x.is_finite() {
        return Err(SpecfunError::NonFinite(x));
    }
    let top = max_order.get() as usize;
    let ax = x.abs();
    let mut out = if ax < SERIES_LIMIT {
        (0..=top).map(|k| power_series(k, ax)).collect::<Vec<_>>()
    } else {
        let mut fam = miller_family(top, ax);
        fam.truncate(top + 1);
        fam
    };
    if x < 0.0 {
        for (k, v) in out.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
    }
    Ok(out)
}

fn power_series(order: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if order == 0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * x;
    // leading term (x/2)^m / m!
    let mut term = 1.0;
    for k in 1..=order {
        term *= half / k as f64;
    }
    let q = -half * half;
    let mut sum = term;
    let mut k = 0usize;
    loop {
        k += 1;
        term *= q / (k as f64 * (k + order) as f64);
        sum += term;
        if term.abs() <= f64::EPSILON * 1e-3 * sum.abs() || k > 200 {
            break;
        }
    }
    sum
}

/// Downward recurrence for x > 0, returning `J_0..J_n` for some `n >= order`.
fn miller_family(order: usize, x: f64) -> Vec<f64> {
    debug_assert!(x > 0.0);
    let reach = (order as f64).max(x);
    let mut start = reach.ceil() as usize + 30 + (12.0 * reach.cbrt()).ceil() as usize;
    if start % 2 == 1 {
        start += 1;
    }
    let mut vals = vec![0.0_f64; start + 2];
    vals[start + 1] = 0.0;
    vals[start] = 1e-300;
    let two_over_x = 2.0 / x;
    for k in (1..=start).rev() {
        let next = k as f64 * two_over_x * vals[k] - vals[k + 1];
        vals[k - 1] = next;
        if next.abs() > RESCALE_ABOVE {
            for v in vals[k - 1..].iter_mut() {
                *v /= RESCALE_ABOVE;
            }
        }
    }
    let norm = vals[0] + 2.0 * vals.iter().skip(2).step_by(2).sum::<f64>();
    for v in vals.iter_mut() {
        *v /= norm;
    }
    vals.truncate(start + 1);
    vals
}

/// The `k`-th positive zero of `J_m`, refined by bisection to full precision.
pub fn bessel_j_zero(m: BesselOrder, k: u32) -> Result<f64, SpecfunError> {
    if k == 0 {
        return Err(SpecfunError::ZeroIndex);
    }
    let f = |x: f64| bessel_j(m, x).expect("finite argument");
    // Consecutive zeros are more than 2.4 apart, so a 0.2 step never skips one.
    let step = 0.2;
    let mut lo = 0.5 * m.get() as f64 + 0.1;
    let mut f_lo = f(lo);
    let limit = lo + (k as f64 + m.get() as f64 + 2.0) * 4.0 + 10.0;
    let mut found = 0;
    while lo < limit {
        let hi = lo + step;
        let f_hi = f(hi);
        if f_lo == 0.0 {
            found += 1;
            if found == k {
                return Ok(lo);
            }
        } else if f_lo.signum() != f_hi.signum() && f_hi != 0.0 {
            found += 1;
            if found == k {
                return Ok(crate::roots::bisect(f, lo, hi, 0.0).expect("bracket has a sign change").root);
            }
        }
        lo = hi;
        f_lo = f_hi;
    }
    Err(SpecfunError::ZeroNotFound { m: m.get(), k, limit })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_values() {
        assert_eq!(bessel_j(BesselOrder::new(0), 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(BesselOrder::new(3), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn first_zeros_of_j0_vanish() {
        let j0 = |x| bessel_j(BesselOrder::new(0), x).unwrap();
        assert!(j0(2.4048_f64).abs() < 5e-5);
        assert!(j0(5.5201_f64).abs() < 5e-5);
    }

    #[test]
    fn non_finite_argument_rejected() {
        assert!(matches!(bessel_j(BesselOrder::new(1), f64::NAN), Err(SpecfunError::NonFinite(_))));
        assert!(bessel_j_family(BesselOrder::new(1), f64::INFINITY).is_err());
    }

    #[test]
    fn zero_index_must_be_positive() {
        assert_eq!(bessel_j_zero(BesselOrder::new(0), 0), Err(SpecfunError::ZeroIndex));
    }

    #[test]
    fn family_matches_single_evaluation() {
        for &x in &[-7.5, -0.3, 0.0, 0.9, 1.0, 4.2, 33.0] {
            let fam = bessel_j_family(BesselOrder::new(6), x).unwrap();
            for (k, v) in fam.iter().enumerate() {
                let single = bessel_j(BesselOrder::new(k as u32), x).unwrap();
                assert!((v - single).abs() < 1e-14, "k={k} x={x}");
            }
        }
    }

    #[test]
    fn series_and_recurrence_agree_at_switchover() {
        for m in 0..6 {
            let x = SERIES_LIMIT;
            let a = power_series(m, x);
            let b = miller_family(m, x)[m];
            assert!((a - b).abs() < 1e-15, "m={m}: {a} vs {b}");
        }
    }
}
