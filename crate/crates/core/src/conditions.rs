//! Phase and gap conditions for frozen, dimerised and crossing bond rates.
//!
//! All solvers work on the effective rates from [`crate::effective`] and
//! re-substitute every answer before returning it. For even `m` the rates are
//! real and depend on `φ` only through `cos φ`, so each condition has a
//! closed-form `arccos` seed, and every root has a mirror at `2π - φ`; the
//! solvers return the member of the pair that lies in the requested bracket.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::effective::{bessel_pair, Bond, EffectiveRates, Modulation};
use crate::lattice::GapArguments;
use crate::roots::{bisect, first_sign_change};
use crate::specfun::BesselOrder;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConditionError {
    #[error("no phase solves the condition: required cos(phi) = {ratio:.6} lies outside [-1, 1]")]
    NoPhase { ratio: f64 },
    #[error("gap ratios J0/Jm disagree: r(delta_a) = {r_a:.8}, r(delta_b) = {r_b:.8} (tolerance {tol:.1e})")]
    RatioMismatch { r_a: f64, r_b: f64, tol: f64 },
    #[error("J_{m}({delta}) vanishes; the ratio J0/Jm is undefined")]
    SingularRatio { m: u32, delta: f64 },
    #[error("the solution lies outside the bracket [{lo}, {hi}]")]
    OutsideBracket { lo: f64, hi: f64 },
    #[error("no sign change of {what} on [{lo}, {hi}]")]
    NoSignChange { what: &'static str, lo: f64, hi: f64 },
    #[error("{0} requires an even resonance order")]
    NeedsEvenOrder(&'static str),
    #[error("odd-order CDT needs J0(delta) = 0 on both gaps; got J0(delta_a) = {j_a:.3e}, J0(delta_b) = {j_b:.3e}")]
    OddOrderGaps { j_a: f64, j_b: f64 },
    #[error("the modulation amplitude is zero, so the phase has no effect")]
    NoModulation,
    #[error("both bond rates vanish at phi = {phi}; this is a CDT point, not {expected}")]
    Degenerate { phi: f64, expected: &'static str },
    #[error("the {0:?} bond rate is zero; there is no Rabi oscillation")]
    ZeroActiveRate(Bond),
    #[error("the inactive bond rate {0:.3e} is not zero")]
    InactiveNotZero(f64),
    #[error("substitution check failed: residual {residual:.3e} exceeds {tol:.1e}")]
    Unverified { residual: f64, tol: f64 },
}

/// Residual allowed on a solved single rate, relative to [`Modulation::scale`].
pub const PHASE_RESIDUAL: f64 = 1e-12;
/// Tolerance on a vanishing rate in a returned [`ConditionSolution`].
pub const RATE_ZERO: f64 = 1e-10;
/// Largest accepted mismatch between `J0(Δ)/Jm(Δ)` on the two gaps for CDT.
pub const CDT_RATIO_TOL: f64 = 1e-4;
/// How close `J0(Δ)` must be to zero on both gaps for odd-order CDT.
pub const ODD_CDT_ZERO_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionKind {
    /// Both bonds frozen.
    Cdt,
    /// The forward (a-gap) bond of an even site is frozen.
    DlForward,
    /// The backward (b-gap) bond of an even site is frozen.
    DlBackward,
    /// The two bonds have equal magnitude and opposite sign.
    Instability,
}

/// A solved phase together with the even-site rates it produces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionSolution {
    pub kind: ConditionKind,
    pub phi: f64,
    pub rates: EffectiveRates,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rabi_freq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_period: Option<f64>,
}

fn even_rates(modulation: &Modulation, phi: f64, gaps: &GapArguments) -> EffectiveRates {
    EffectiveRates { fwd: modulation.rate(phi, gaps.delta_a), bwd: modulation.rate(phi, -gaps.delta_b) }
}

fn require_modulation(modulation: &Modulation) -> Result<(), ConditionError> {
    if modulation.delta_j == 0.0 {
        Err(ConditionError::NoModulation)
    } else {
        Ok(())
    }
}

/// Places `±acos(c) + 2πk` inside `[lo, hi]`, preferring `acos(c)` itself.
fn place_in_bracket(base: f64, lo: f64, hi: f64) -> Option<f64> {
    let mut candidates = Vec::new();
    for k in -3..=3 {
        let shift = 2.0 * PI * k as f64;
        candidates.push(base + shift);
        candidates.push(-base + shift);
    }
    candidates.into_iter().find(|p| *p >= lo && *p <= hi)
}

/// Phase at which the single even-order rate `F(φ, delta)` vanishes.
///
/// Seeded by `cos φ = -J0 J0(Δ) / (δJ Jm(Δ))`, then polished by bisection on
/// the rate itself.
pub fn solve_phase(
    j0: f64,
    delta_j: f64,
    m: BesselOrder,
    delta: f64,
    bracket: (f64, f64),
) -> Result<f64, ConditionError> {
    let modulation = Modulation::new(j0, delta_j, m);
    if !m.is_even() {
        return Err(ConditionError::NeedsEvenOrder("a single-rate phase zero"));
    }
    require_modulation(&modulation)?;
    let (j_zero, j_m) = bessel_pair(m, delta);
    if j_m == 0.0 {
        return Err(ConditionError::SingularRatio { m: m.get(), delta });
    }
    let ratio = -j0 * j_zero / (delta_j * j_m);
    if ratio.abs() > 1.0 {
        return Err(ConditionError::NoPhase { ratio });
    }
    let (lo, hi) = ordered(bracket);
    let seed = place_in_bracket(ratio.acos(), lo, hi).ok_or(ConditionError::OutsideBracket { lo, hi })?;
    let f = |phi: f64| modulation.real_rate(phi, delta);
    let tol = PHASE_RESIDUAL * modulation.scale();
    let phi = polish(&f, seed, lo, hi, tol);
    verify(f(phi).abs(), tol)?;
    Ok(phi)
}

fn ordered((a, b): (f64, f64)) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Refines a seed by bisecting on a small bracket around it.
fn polish<F: Fn(f64) -> f64>(f: &F, seed: f64, lo: f64, hi: f64, tol: f64) -> f64 {
    if f(seed).abs() <= tol * 1e-3 {
        return seed;
    }
    let mut width = 1e-9;
    while width < 1e-2 {
        let a = (seed - width).max(lo);
        let b = (seed + width).min(hi);
        if let Some(b) = bisect(f, a, b, 0.0) {
            return b.root;
        }
        width *= 10.0;
    }
    seed
}

fn verify(residual: f64, tol: f64) -> Result<(), ConditionError> {
    if residual <= tol {
        Ok(())
    } else {
        Err(ConditionError::Unverified { residual, tol })
    }
}

/// `J0(Δ) / Jm(Δ)`.
fn gap_ratio(m: BesselOrder, delta: f64) -> Result<f64, ConditionError> {
    let (j_zero, j_m) = bessel_pair(m, delta);
    if j_m.abs() < 1e-14 {
        return Err(ConditionError::SingularRatio { m: m.get(), delta });
    }
    Ok(j_zero / j_m)
}

/// Phase freezing both bonds at once, with the default ratio tolerance.
pub fn solve_cdt_phase(
    j0: f64,
    delta_j: f64,
    m: BesselOrder,
    delta_a: f64,
    delta_b: f64,
) -> Result<f64, ConditionError> {
    solve_cdt_phase_with(j0, delta_j, m, delta_a, delta_b, CDT_RATIO_TOL)
}

/// Phase freezing both bonds at once.
///
/// Even `m`: the two gaps must share `r = J0(Δ)/Jm(Δ)` to within
/// `ratio_tol`; the phase is `acos(-J0 r̄ / δJ)` with `r̄` the mean ratio, so
/// each residual rate is bounded by `J0 |r_a - r_b| |Jm| / 2`.
/// Odd `m`: only the route with `J0(Δ_a) = J0(Δ_b) = 0` exists, giving `φ = 0`.
pub fn solve_cdt_phase_with(
    j0: f64,
    delta_j: f64,
    m: BesselOrder,
    delta_a: f64,
    delta_b: f64,
    ratio_tol: f64,
) -> Result<f64, ConditionError> {
    let modulation = Modulation::new(j0, delta_j, m);
    if !m.is_even() {
        let (j_a, _) = bessel_pair(m, delta_a);
        let (j_b, _) = bessel_pair(m, delta_b);
        let limit = ODD_CDT_ZERO_TOL;
        if (j0 * j_a).abs() > limit * modulation.scale() || (j0 * j_b).abs() > limit * modulation.scale() {
            return Err(ConditionError::OddOrderGaps { j_a, j_b });
        }
        return Ok(0.0);
    }
    require_modulation(&modulation)?;
    let r_a = gap_ratio(m, delta_a)?;
    let r_b = gap_ratio(m, delta_b)?;
    if (r_a - r_b).abs() > ratio_tol {
        return Err(ConditionError::RatioMismatch { r_a, r_b, tol: ratio_tol });
    }
    let mean = 0.5 * (r_a + r_b);
    let c = -j0 * mean / delta_j;
    if c.abs() > 1.0 {
        return Err(ConditionError::NoPhase { ratio: c });
    }
    let phi = c.acos();
    let (_, jm_a) = bessel_pair(m, delta_a);
    let (_, jm_b) = bessel_pair(m, delta_b);
    let inherent = 0.5 * (j0 * (r_a - r_b)).abs() * jm_a.abs().max(jm_b.abs());
    let tol = RATE_ZERO * modulation.scale() + inherent * (1.0 + 1e-6);
    let fa = modulation.rate(phi, delta_a).norm();
    let fb = modulation.rate(phi, -delta_b).norm();
    verify(fa.max(fb), tol)?;
    Ok(phi)
}

/// A gap pair sharing the CDT phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdtPair {
    pub delta_a: f64,
    pub delta_b: f64,
    pub phi0: f64,
}

/// Holds `delta_a` fixed and finds `delta_b` in `bracket` with the same
/// `J0/Jm` ratio, then the common CDT phase.
///
/// The search runs on `J0(Δ) Jm(Δ_a) - J0(Δ_a) Jm(Δ)`, which has the same
/// roots as the ratio difference but no poles at the zeros of `Jm`. The
/// first sign change on a 256-piece scan of the bracket is bisected to full
/// precision.
pub fn solve_cdt_delta_pair(
    j0: f64,
    delta_j: f64,
    m: BesselOrder,
    delta_a: f64,
    bracket: (f64, f64),
) -> Result<CdtPair, ConditionError> {
    if !m.is_even() {
        return Err(ConditionError::NeedsEvenOrder("the CDT gap-pair search"));
    }
    let modulation = Modulation::new(j0, delta_j, m);
    require_modulation(&modulation)?;
    let r_a = gap_ratio(m, delta_a)?;
    let c = -j0 * r_a / delta_j;
    if c.abs() > 1.0 {
        return Err(ConditionError::NoPhase { ratio: c });
    }
    let (j0_a, jm_a) = bessel_pair(m, delta_a);
    let cross = |d: f64| {
        let (j0_d, jm_d) = bessel_pair(m, d);
        j0_d * jm_a - j0_a * jm_d
    };
    let (lo, hi) = ordered(bracket);
    let (a, b) = first_sign_change(cross, lo, hi, 256).ok_or(ConditionError::NoSignChange {
        what: "J0(d)/Jm(d) - J0(delta_a)/Jm(delta_a)",
        lo,
        hi,
    })?;
    let delta_b = bisect(cross, a, b, 0.0).expect("scan found a sign change").root;
    let r_b = gap_ratio(m, delta_b)?;
    verify((r_b - r_a).abs(), RATE_ZERO * r_a.abs().max(1.0))?;
    let phi0 = solve_cdt_phase_with(j0, delta_j, m, delta_a, delta_b, RATE_ZERO * r_a.abs().max(1.0))?;
    Ok(CdtPair { delta_a, delta_b, phi0 })
}

/// Phase where the even site's forward and backward rates cancel,
/// `F(φ, Δ_a) = -F(φ, -Δ_b)`.
pub fn solve_instability_phase(
    j0: f64,
    delta_j: f64,
    m: BesselOrder,
    delta_a: f64,
    delta_b: f64,
    bracket: (f64, f64),
) -> Result<f64, ConditionError> {
    if !m.is_even() {
        return Err(ConditionError::NeedsEvenOrder("the rate-crossing solve"));
    }
    let modulation = Modulation::new(j0, delta_j, m);
    let g = |phi: f64| modulation.real_rate(phi, delta_a) + modulation.real_rate(phi, -delta_b);
    let (lo, hi) = ordered(bracket);
    let tol = PHASE_RESIDUAL * modulation.scale();
    let found = bisect(g, lo, hi, tol * 1e-3).ok_or(ConditionError::NoSignChange {
        what: "F(phi, delta_a) + F(phi, -delta_b)",
        lo,
        hi,
    })?;
    let phi = found.root;
    verify(g(phi).abs(), tol)?;
    let fwd = modulation.real_rate(phi, delta_a);
    if fwd.abs() < RATE_ZERO * modulation.scale() {
        return Err(ConditionError::Degenerate { phi, expected: "a rate crossing" });
    }
    Ok(phi)
}

/// Rabi frequency `|active rate|` and half-period `π / frequency`.
pub fn rabi_of(rates: &EffectiveRates, active: Bond, scale: f64) -> Result<(f64, f64), ConditionError> {
    let inactive = match active {
        Bond::Forward => rates.bwd,
        Bond::Backward => rates.fwd,
    };
    if inactive.norm() >= RATE_ZERO * scale {
        return Err(ConditionError::InactiveNotZero(inactive.norm()));
    }
    let w = rates.get(active).norm();
    if w == 0.0 || w < RATE_ZERO * scale {
        return Err(ConditionError::ZeroActiveRate(active));
    }
    Ok((w, PI / w))
}

/// Solved condition of the requested kind for the given drive and gaps.
///
/// `bracket` constrains the phase for the DL and crossing solves; the CDT
/// phase comes straight from the closed form.
pub fn solve_condition(
    modulation: &Modulation,
    gaps: &GapArguments,
    kind: ConditionKind,
    bracket: (f64, f64),
) -> Result<ConditionSolution, ConditionError> {
    let Modulation { j0, delta_j, m } = *modulation;
    let scale = modulation.scale();
    let (phi, active) = match kind {
        ConditionKind::Cdt => (solve_cdt_phase(j0, delta_j, m, gaps.delta_a, gaps.delta_b)?, None),
        ConditionKind::DlBackward => (solve_phase(j0, delta_j, m, -gaps.delta_b, bracket)?, Some(Bond::Forward)),
        ConditionKind::DlForward => (solve_phase(j0, delta_j, m, gaps.delta_a, bracket)?, Some(Bond::Backward)),
        ConditionKind::Instability => {
            (solve_instability_phase(j0, delta_j, m, gaps.delta_a, gaps.delta_b, bracket)?, None)
        }
    };
    let rates = even_rates(modulation, phi, gaps);
    let (rabi_freq, half_period) = match active {
        Some(bond) => {
            let (w, t) = rabi_of(&rates, bond, scale).map_err(|e| match e {
                ConditionError::ZeroActiveRate(_) => ConditionError::Degenerate { phi, expected: "a dimer" },
                other => other,
            })?;
            (Some(w), Some(t))
        }
        None => (None, None),
    };
    Ok(ConditionSolution { kind, phi, rates, rabi_freq, half_period })
}

/// Sum of the even-site rates; zero exactly at the crossing.
pub fn crossing_residual(rates: &EffectiveRates) -> C64 {
    rates.fwd + rates.bwd
}
