//! High-frequency effective model.
//!
//! Averaging `J(t) exp(i Δ sin ωt)` over one drive period turns the driven
//! chain into a static nearest-neighbour chain whose bond amplitudes are
//! Bessel-weighted combinations of `J0` and `δJ`. This module evaluates those
//! rates, the momentum-space symbol of the two-site unit cell, the
//! closed-form evolution of a localized initial state, and the two-site
//! Rabi solutions that appear when one bond rate vanishes.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{DriveParams, GapArguments, LatticeGeometry, Parity};
use crate::specfun::{bessel_j_family, BesselOrder};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EffectiveError {
    #[error("probability {leak:.3e} reached the window edge (tolerance {tol:.1e}); enlarge the window")]
    EdgeLeak { leak: f64, tol: f64 },
    #[error("site {n} lies outside the window")]
    OutOfWindow { n: i64 },
    #[error("active bond rate is zero: the particle is frozen (CDT), there is no Rabi oscillation")]
    DegenerateRabi,
    #[error("quadrature needs a power-of-two number of points >= 8, got {0}")]
    BadQuadrature(usize),
}

/// Number of k-points used for the Fourier integral.
pub const DEFAULT_QUADRATURE: usize = 1 << 12;

/// Probability allowed within two sites of either window edge.
pub const DEFAULT_EDGE_LEAK_TOL: f64 = 1e-6;

/// The part of the drive that enters the effective rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Modulation {
    pub j0: f64,
    pub delta_j: f64,
    pub m: BesselOrder,
}

impl Modulation {
    pub fn new(j0: f64, delta_j: f64, m: BesselOrder) -> Self {
        Modulation { j0, delta_j, m }
    }

    pub fn from_drive(drive: &DriveParams) -> Self {
        Modulation { j0: drive.j0, delta_j: drive.delta_j, m: drive.m }
    }

    /// Effective bond amplitude for the signed gap argument `delta`.
    pub fn rate(&self, phi: f64, delta: f64) -> C64 {
        let (j_zero, j_m) = bessel_pair(self.m, delta);
        let base = self.j0 * j_zero;
        if self.m.is_even() {
            C64::new(base + self.delta_j * phi.cos() * j_m, 0.0)
        } else {
            C64::new(base, self.delta_j * phi.sin() * j_m)
        }
    }

    /// Real part of the rate for even `m`; the imaginary part is identically zero there.
    pub(crate) fn real_rate(&self, phi: f64, delta: f64) -> f64 {
        self.rate(phi, delta).re
    }

    /// Larger of `|J0|` and `|δJ|`; tolerances are expressed relative to it.
    pub fn scale(&self) -> f64 {
        let s = self.j0.abs().max(self.delta_j.abs());
        if s > 0.0 {
            s
        } else {
            1.0
        }
    }
}

/// `(J_0(x), J_m(x))`.
pub(crate) fn bessel_pair(m: BesselOrder, x: f64) -> (f64, f64) {
    let fam = bessel_j_family(m, x).expect("effective-rate arguments are finite");
    (fam[0], fam[m.get() as usize])
}

/// Time-averaged tunnelling amplitude for gap argument `delta`.
pub fn effective_rate(j0: f64, delta_j: f64, m: BesselOrder, phi: f64, delta: f64) -> C64 {
    Modulation::new(j0, delta_j, m).rate(phi, delta)
}

/// Forward (`n -> n+1`) and backward (`n -> n-1`) coefficients seen by a site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveRates {
    pub fwd: C64,
    pub bwd: C64,
}

/// `J_+ = fwd + bwd` and `J_- = fwd - bwd` of the even-site rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolCoefficients {
    pub j_plus: C64,
    pub j_minus: C64,
}

/// Which neighbour a site couples to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bond {
    Forward,
    Backward,
}

impl Bond {
    pub fn step(self) -> i64 {
        match self {
            Bond::Forward => 1,
            Bond::Backward => -1,
        }
    }
}

impl EffectiveRates {
    pub fn new(fwd: C64, bwd: C64) -> Self {
        EffectiveRates { fwd, bwd }
    }

    pub fn get(&self, bond: Bond) -> C64 {
        match bond {
            Bond::Forward => self.fwd,
            Bond::Backward => self.bwd,
        }
    }

    pub fn symbol(&self) -> SymbolCoefficients {
        SymbolCoefficients { j_plus: self.fwd + self.bwd, j_minus: self.fwd - self.bwd }
    }

    /// `f(k) = J_+ cos k + i J_- sin k`.
    pub fn symbol_f(&self, k: f64) -> C64 {
        let s = self.symbol();
        s.j_plus * k.cos() + C64::i() * s.j_minus * k.sin()
    }
}

/// Rates of a site of the given parity.
///
/// Even sites see `(F(Δ_a), F(-Δ_b))`, odd sites `(F(Δ_b), F(-Δ_a))`.
pub fn rates_for_site(drive: &DriveParams, gaps: &GapArguments, parity: Parity) -> EffectiveRates {
    let modulation = Modulation::from_drive(drive);
    let (ahead, behind) = match parity {
        Parity::Even => (gaps.delta_a, gaps.delta_b),
        Parity::Odd => (gaps.delta_b, gaps.delta_a),
    };
    EffectiveRates { fwd: modulation.rate(drive.phi, ahead), bwd: modulation.rate(drive.phi, -behind) }
}

/// Rates for both sublattices of the averaged chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainRates {
    pub even: EffectiveRates,
    pub odd: EffectiveRates,
}

impl ChainRates {
    pub fn from_drive(drive: &DriveParams, gaps: &GapArguments) -> Self {
        ChainRates { even: rates_for_site(drive, gaps, Parity::Even), odd: rates_for_site(drive, gaps, Parity::Odd) }
    }

    pub fn from_geometry(geom: &LatticeGeometry, drive: &DriveParams) -> Self {
        Self::from_drive(drive, &geom.gaps(drive))
    }

    /// Completes even-site rates into a Hermitian chain: the odd site's
    /// forward bond is the conjugate of the even site's backward bond and
    /// vice versa.
    pub fn hermitian(even: EffectiveRates) -> Self {
        ChainRates { even, odd: EffectiveRates { fwd: even.bwd.conj(), bwd: even.fwd.conj() } }
    }

    pub fn at(&self, parity: Parity) -> EffectiveRates {
        match parity {
            Parity::Even => self.even,
            Parity::Odd => self.odd,
        }
    }

    pub fn for_site(&self, n: i64) -> EffectiveRates {
        self.at(Parity::of(n))
    }

    /// Largest violation of `H[n][n+1] = conj(H[n+1][n])` over both bond types.
    pub fn hermiticity_defect(&self) -> f64 {
        let a_bond = (self.even.fwd - self.odd.bwd.conj()).norm();
        let b_bond = (self.odd.fwd - self.even.bwd.conj()).norm();
        a_bond.max(b_bond)
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Amplitudes `A_n(t)` of the averaged chain that started in `|start>`,
/// from the Fourier-integral solution on the default k-grid.
pub fn analytic_amplitudes(
    chain: &ChainRates,
    start: i64,
    t: f64,
    window: &LatticeGeometry,
) -> Result<Vec<C64>, EffectiveError> {
    analytic_amplitudes_with(chain, start, t, window, DEFAULT_QUADRATURE, DEFAULT_EDGE_LEAK_TOL)
}

/// As [`analytic_amplitudes`] with an explicit grid size and edge tolerance.
///
/// The integrand is `e^{-iNk} [cos(|f|t) - i t sinc(|f|t) (G_+ e^{-ik} + G_- e^{ik})]`,
/// finite wherever `f(k)` vanishes. `G_±` are the coefficients with which
/// `A_N` enters the equations of sites `N±1`; for a Hermitian chain they are
/// the conjugates of site `N`'s own forward and backward rates, which only
/// matters when the rates are complex (odd `m`). The trapezoid rule on the periodic
/// integrand is spectrally accurate; site offsets wrap modulo `points`.
pub fn analytic_amplitudes_with(
    chain: &ChainRates,
    start: i64,
    t: f64,
    window: &LatticeGeometry,
    points: usize,
    edge_leak_tol: f64,
) -> Result<Vec<C64>, EffectiveError> {
    if points < 8 || !points.is_power_of_two() {
        return Err(EffectiveError::BadQuadrature(points));
    }
    if !window.contains(start) {
        return Err(EffectiveError::OutOfWindow { n: start });
    }
    // Coefficients of A_N in the equations of its two neighbours.
    let into_from_right = chain.for_site(start + 1).bwd;
    let into_from_left = chain.for_site(start - 1).fwd;
    let symbol = chain.even.symbol();
    let step = 2.0 * std::f64::consts::PI / points as f64;
    let roots: Vec<C64> = (0..points).map(|j| C64::from_polar(1.0, step * j as f64)).collect();

    let integrand: Vec<C64> = (0..points)
        .map(|j| {
            let k = -std::f64::consts::PI + step * j as f64;
            let (sin_k, cos_k) = k.sin_cos();
            let f = symbol.j_plus * cos_k + C64::i() * symbol.j_minus * sin_k;
            let wt = f.norm() * t;
            let kick = into_from_right * C64::new(cos_k, -sin_k) + into_from_left * C64::new(cos_k, sin_k);
            C64::new(wt.cos(), 0.0) - C64::i() * kick * (t * sinc(wt))
        })
        .collect();

    let mask = points - 1;
    let scale = 1.0 / points as f64;
    let amps: Vec<C64> = window
        .sites()
        .map(|n| {
            let d = n - start;
            let r = d.rem_euclid(points as i64) as usize;
            let mut acc = C64::new(0.0, 0.0);
            let mut idx = 0usize;
            for b in &integrand {
                acc += b * roots[idx];
                idx = (idx + r) & mask;
            }
            let sign = if d.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            acc * (sign * scale)
        })
        .collect();

    let leak = edge_population(&amps);
    if leak > edge_leak_tol {
        return Err(EffectiveError::EdgeLeak { leak, tol: edge_leak_tol });
    }
    Ok(amps)
}

/// Probability on the three outermost sites at each end.
pub(crate) fn edge_population(amps: &[C64]) -> f64 {
    let len = amps.len();
    let band = 3.min(len);
    let head: f64 = amps[..band].iter().map(|a| a.norm_sqr()).sum();
    let tail: f64 = amps[len.saturating_sub(band).max(band)..].iter().map(|a| a.norm_sqr()).sum();
    head + tail
}

/// Two-site Rabi solution `(A_N, A_{N±1})` when only `rate_active` is nonzero.
///
/// `rate_active` is the coefficient of the partner amplitude in site `N`'s
/// equation. The partner picks up `-i conj(rate)/|rate| sin(|rate| t)`; for
/// real rates the conjugate is immaterial.
pub fn rabi_solution(rate_active: C64, t: f64) -> Result<(C64, C64), EffectiveError> {
    let w = rate_active.norm();
    if w == 0.0 {
        return Err(EffectiveError::DegenerateRabi);
    }
    let (s, c) = (w * t).sin_cos();
    let home = C64::new(c, 0.0);
    let partner = -C64::i() * (rate_active.conj() / w) * s;
    Ok((home, partner))
}
