//! Bipartite lattice geometry and the time-periodic drive.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::specfun::BesselOrder;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("separations must be positive and finite (a = {a}, b = {b})")]
    BadSeparation { a: f64, b: f64 },
    #[error("site window [{n_min}, {n_max}] must satisfy n_min < 0 < n_max")]
    BadWindow { n_min: i64, n_max: i64 },
    #[error("site {n} lies outside the window [{n_min}, {n_max}]")]
    OutOfWindow { n: i64, n_min: i64, n_max: i64 },
    #[error("drive frequency must be positive and finite, got {0}")]
    BadFrequency(f64),
    #[error("drive parameter {name} is not finite")]
    NonFinite { name: &'static str },
}

/// Parity of a site index; selects which separation follows the site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(n: i64) -> Self {
        if n.rem_euclid(2) == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// Separations `a` (after even sites) and `b` (after odd sites) plus the
/// finite window of site indices that is actually simulated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeGeometry {
    a: f64,
    b: f64,
    n_min: i64,
    n_max: i64,
}

/// Half-width used when nothing else is requested.
pub const DEFAULT_HALF_WIDTH: i64 = 60;

impl LatticeGeometry {
    pub fn new(a: f64, b: f64, n_min: i64, n_max: i64) -> Result<Self, LatticeError> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(LatticeError::BadSeparation { a, b });
        }
        if !(n_min < 0 && 0 < n_max) {
            return Err(LatticeError::BadWindow { n_min, n_max });
        }
        Ok(LatticeGeometry { a, b, n_min, n_max })
    }

    /// Window `[-half_width, half_width]`.
    pub fn symmetric(a: f64, b: f64, half_width: i64) -> Result<Self, LatticeError> {
        Self::new(a, b, -half_width, half_width)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn n_min(&self) -> i64 {
        self.n_min
    }

    pub fn n_max(&self) -> i64 {
        self.n_max
    }

    pub fn len(&self) -> usize {
        (self.n_max - self.n_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, n: i64) -> bool {
        (self.n_min..=self.n_max).contains(&n)
    }

    /// Array slot of site `n`.
    pub fn index_of(&self, n: i64) -> Result<usize, LatticeError> {
        self.check(n)?;
        Ok((n - self.n_min) as usize)
    }

    pub fn sites(&self) -> impl Iterator<Item = i64> {
        self.n_min..=self.n_max
    }

    fn check(&self, n: i64) -> Result<(), LatticeError> {
        if self.contains(n) {
            Ok(())
        } else {
            Err(LatticeError::OutOfWindow { n, n_min: self.n_min, n_max: self.n_max })
        }
    }

    /// `x_n`: `n(a+b)/2` for even `n`, `(n+1)a/2 + (n-1)b/2` for odd `n`.
    pub fn site_position(&self, n: i64) -> Result<f64, LatticeError> {
        self.check(n)?;
        Ok(self.position_unchecked(n))
    }

    pub(crate) fn position_unchecked(&self, n: i64) -> f64 {
        let nf = n as f64;
        match Parity::of(n) {
            Parity::Even => nf * (self.a + self.b) / 2.0,
            Parity::Odd => (nf + 1.0) * self.a / 2.0 + (nf - 1.0) * self.b / 2.0,
        }
    }

    /// Positions of every site in the window, in index order.
    pub fn positions(&self) -> Vec<f64> {
        self.sites().map(|n| self.position_unchecked(n)).collect()
    }

    /// Separation `x_{n+1} - x_n`.
    pub fn separation_after(&self, n: i64) -> f64 {
        match Parity::of(n) {
            Parity::Even => self.a,
            Parity::Odd => self.b,
        }
    }

    /// `(E0/omega)(x_{n+1} - x_n)`; both `n` and `n + 1` must be in the window.
    pub fn gap_delta(&self, drive: &DriveParams, n: i64) -> Result<f64, LatticeError> {
        self.check(n)?;
        self.check(n + 1)?;
        let dx = self.position_unchecked(n + 1) - self.position_unchecked(n);
        Ok(drive.e0 / drive.omega * dx)
    }

    pub fn gaps(&self, drive: &DriveParams) -> GapArguments {
        GapArguments::new(self, drive)
    }
}

/// Parameters of `J(t) = J0 + dJ cos(m w t - phi)` and `E(t) = E0 cos(w t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    pub j0: f64,
    pub delta_j: f64,
    pub e0: f64,
    pub omega: f64,
    pub m: BesselOrder,
    pub phi: f64,
}

impl DriveParams {
    pub fn new(j0: f64, delta_j: f64, e0: f64, omega: f64, m: BesselOrder, phi: f64) -> Result<Self, LatticeError> {
        let d = DriveParams { j0, delta_j, e0, omega, m, phi };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), LatticeError> {
        for (name, v) in [("j0", self.j0), ("delta_j", self.delta_j), ("e0", self.e0), ("phi", self.phi)] {
            if !v.is_finite() {
                return Err(LatticeError::NonFinite { name });
            }
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(LatticeError::BadFrequency(self.omega));
        }
        Ok(())
    }

    pub fn with_phi(&self, phi: f64) -> Self {
        DriveParams { phi, ..*self }
    }

    /// `J0 + dJ cos(m w t - phi)`.
    pub fn coupling_at(&self, t: f64) -> f64 {
        self.j0 + self.delta_j * (self.m.get() as f64 * self.omega * t - self.phi).cos()
    }

    /// `E0 cos(w t)`.
    pub fn tilt_at(&self, t: f64) -> f64 {
        self.e0 * (self.omega * t).cos()
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega
    }
}

/// Dimensionless gap arguments for the two separations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapArguments {
    pub delta_a: f64,
    pub delta_b: f64,
}

impl GapArguments {
    pub fn new(geom: &LatticeGeometry, drive: &DriveParams) -> Self {
        let ratio = drive.e0 / drive.omega;
        GapArguments { delta_a: ratio * geom.a, delta_b: ratio * geom.b }
    }

    /// `delta` following a site of the given parity.
    pub fn after(&self, parity: Parity) -> f64 {
        match parity {
            Parity::Even => self.delta_a,
            Parity::Odd => self.delta_b,
        }
    }
}
