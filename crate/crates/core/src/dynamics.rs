//! Time evolution on the finite window.
//!
//! Three pictures are integrated:
//!
//! * [`Picture::Full`]: the laboratory amplitudes `c_n` of the driven chain,
//!   `i dc_n/dt = J(t)(c_{n+1} + c_{n-1}) - E0 cos(wt) x_n c_n`;
//! * [`Picture::Transformed`]: `A_n = c_n exp(-i (E0/w) x_n sin wt)`, which
//!   moves the tilt into bond phases `exp(±i Δ sin wt)` without averaging;
//! * [`Picture::Averaged`]: the static chain of effective rates.
//!
//! Amplitudes outside the window are pinned to zero. Every accepted step
//! checks the probability near the edges so that truncation never silently
//! corrupts a run.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::effective::{edge_population, ChainRates};
use crate::lattice::{DriveParams, LatticeError, LatticeGeometry, Parity};
use crate::ode::{self, OdeError, StepControl, System};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("probability {leak:.3e} reached the window edge at t = {t} (tolerance {tol:.1e}); enlarge the window")]
    EdgeLeak { t: f64, leak: f64, tol: f64 },
    #[error("integrator failed: {0}")]
    Stiffness(OdeError),
    #[error("state lives in the {found:?} picture, expected {expected:?}")]
    WrongPicture { expected: Picture, found: Picture },
    #[error("state has {found} amplitudes but the window holds {expected}")]
    WindowMismatch { expected: usize, found: usize },
    #[error("state norm {0} is not 1")]
    NotNormalized(f64),
    #[error("averaged chain is not Hermitian (defect {0:.3e})")]
    NonHermitian(f64),
    #[error("invalid integrator settings: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Which amplitudes a [`WaveState`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Picture {
    Full,
    Transformed,
    Averaged,
}

/// Amplitudes over the window `n_min..=n_max` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub t: f64,
    pub n_min: i64,
    pub amps: Vec<C64>,
    pub picture: Picture,
}

impl WaveState {
    /// `|n>` at `t = 0`.
    pub fn localized(geom: &LatticeGeometry, n: i64, picture: Picture) -> Result<Self, LatticeError> {
        let idx = geom.index_of(n)?;
        let mut amps = vec![C64::new(0.0, 0.0); geom.len()];
        amps[idx] = C64::new(1.0, 0.0);
        Ok(WaveState { t: 0.0, n_min: geom.n_min(), amps, picture })
    }

    pub fn n_max(&self) -> i64 {
        self.n_min + self.amps.len() as i64 - 1
    }

    pub fn amp(&self, n: i64) -> Option<C64> {
        let i = n - self.n_min;
        if i < 0 {
            return None;
        }
        self.amps.get(i as usize).copied()
    }

    pub fn population(&self, n: i64) -> f64 {
        self.amp(n).map_or(0.0, |a| a.norm_sqr())
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Site holding the largest population.
    pub fn dominant_site(&self) -> i64 {
        let (i, _) =
            self.amps
                .iter()
                .enumerate()
                .fold((0, -1.0), |best, (i, a)| if a.norm_sqr() > best.1 { (i, a.norm_sqr()) } else { best });
        self.n_min + i as i64
    }
}

/// `|amp_n|^2` for every site.
pub fn populations(state: &WaveState) -> Vec<f64> {
    state.amps.iter().map(|a| a.norm_sqr()).collect()
}

/// `<x> = Σ p_n x_n`.
pub fn center_of_mass(geom: &LatticeGeometry, state: &WaveState) -> f64 {
    state.amps.iter().enumerate().map(|(i, a)| a.norm_sqr() * geom.position_unchecked(state.n_min + i as i64)).sum()
}

/// `1 / Σ p_n^2`.
pub fn participation_ratio(state: &WaveState) -> f64 {
    let s: f64 = state.amps.iter().map(|a| a.norm_sqr().powi(2)).sum();
    1.0 / s
}

/// Phase map between the full and transformed pictures,
/// `c_n = A_n exp(i (E0/w) x_n sin wt)`.
pub fn transformed_to_full(geom: &LatticeGeometry, drive: &DriveParams, state: &WaveState) -> WaveState {
    gauge(geom, drive, state, 1.0, Picture::Full)
}

/// Inverse of [`transformed_to_full`].
pub fn full_to_transformed(geom: &LatticeGeometry, drive: &DriveParams, state: &WaveState) -> WaveState {
    gauge(geom, drive, state, -1.0, Picture::Transformed)
}

fn gauge(geom: &LatticeGeometry, drive: &DriveParams, state: &WaveState, sign: f64, to: Picture) -> WaveState {
    let s = sign * drive.e0 / drive.omega * (drive.omega * state.t).sin();
    let amps = state
        .amps
        .iter()
        .enumerate()
        .map(|(i, a)| a * C64::from_polar(1.0, s * geom.position_unchecked(state.n_min + i as i64)))
        .collect();
    WaveState { t: state.t, n_min: state.n_min, amps, picture: to }
}

/// Tolerances and sampling for every integration in this module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    /// Ceiling on the step; for driven pictures it is further capped at 1/40 of a drive period.
    pub dt_max: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub edge_leak_tol: f64,
    /// Number of evenly spaced samples per integration interval, both ends included.
    pub samples: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig { dt_max: 0.5, rel_tol: 1e-12, abs_tol: 1e-12, edge_leak_tol: 1e-6, samples: 200 }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.dt_max) {
            return Err(DynamicsError::BadConfig(format!("dt_max must be positive, got {}", self.dt_max)));
        }
        if !positive(self.rel_tol) || !positive(self.abs_tol) {
            return Err(DynamicsError::BadConfig("tolerances must be positive".into()));
        }
        if !positive(self.edge_leak_tol) {
            return Err(DynamicsError::BadConfig("edge_leak_tol must be positive".into()));
        }
        if self.samples < 2 {
            return Err(DynamicsError::BadConfig("need at least 2 samples".into()));
        }
        Ok(())
    }

    fn control(&self, h_max: f64) -> StepControl {
        StepControl { rel_tol: self.rel_tol, abs_tol: self.abs_tol, h_max, ..StepControl::default() }
    }

    /// Step ceiling for a driven picture: at least 40 steps per drive period.
    pub fn driven_h_max(&self, drive: &DriveParams) -> f64 {
        self.dt_max.min(drive.period() / 40.0)
    }

    /// Evenly spaced sample times from `t0` to `t_end` inclusive.
    pub fn sample_times(&self, t0: f64, t_end: f64) -> Vec<f64> {
        let n = self.samples.max(2);
        (0..n).map(|i| if i + 1 == n { t_end } else { t0 + (t_end - t0) * i as f64 / (n - 1) as f64 }).collect()
    }
}

/// Sampled states, in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<WaveState>,
}

impl Trajectory {
    pub fn last(&self) -> &WaveState {
        self.states.last().expect("trajectories are never empty")
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Largest `|norm - 1|` over the samples.
    pub fn max_norm_drift(&self) -> f64 {
        self.states.iter().map(|s| (s.norm() - 1.0).abs()).fold(0.0, f64::max)
    }
}

struct FullChain<'a> {
    drive: &'a DriveParams,
    positions: Vec<f64>,
}

impl System for FullChain<'_> {
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        let j = self.drive.coupling_at(t);
        let tilt = self.drive.tilt_at(t);
        let n = y.len();
        let zero = C64::new(0.0, 0.0);
        for i in 0..n {
            let left = if i > 0 { y[i - 1] } else { zero };
            let right = if i + 1 < n { y[i + 1] } else { zero };
            let h = j * (left + right) - tilt * self.positions[i] * y[i];
            dy[i] = C64::new(h.im, -h.re);
        }
    }
}

struct TransformedChain<'a> {
    drive: &'a DriveParams,
    delta_a: f64,
    delta_b: f64,
    first_parity: Parity,
}

impl System for TransformedChain<'_> {
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        let j = self.drive.coupling_at(t);
        let s = (self.drive.omega * t).sin();
        let phase_a = C64::from_polar(j, self.delta_a * s);
        let phase_b = C64::from_polar(j, self.delta_b * s);
        let n = y.len();
        let zero = C64::new(0.0, 0.0);
        let mut even = self.first_parity == Parity::Even;
        for i in 0..n {
            // even site: forward over an a-gap, backward over a b-gap
            let (fwd, bwd) = if even { (phase_a, phase_b.conj()) } else { (phase_b, phase_a.conj()) };
            let left = if i > 0 { y[i - 1] } else { zero };
            let right = if i + 1 < n { y[i + 1] } else { zero };
            let h = fwd * right + bwd * left;
            dy[i] = C64::new(h.im, -h.re);
            even = !even;
        }
    }
}

fn check_state(state: &WaveState, expected: Picture, len: usize, cfg: &IntegratorConfig) -> Result<(), DynamicsError> {
    cfg.validate()?;
    if state.picture != expected {
        return Err(DynamicsError::WrongPicture { expected, found: state.picture });
    }
    if state.amps.len() != len {
        return Err(DynamicsError::WindowMismatch { expected: len, found: state.amps.len() });
    }
    let norm = state.norm();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(DynamicsError::NotNormalized(norm));
    }
    Ok(())
}

fn run<S: System>(
    system: &S,
    state0: &WaveState,
    times: &[f64],
    ctl: &StepControl,
    edge_leak_tol: f64,
) -> Result<Trajectory, DynamicsError> {
    let mut leak_at: Option<(f64, f64)> = None;
    let result = ode::integrate(system, state0.t, &state0.amps, times, ctl, |t, y| {
        let leak = edge_population(y);
        if leak > edge_leak_tol {
            leak_at = Some((t, leak));
            Err(format!("edge leak {leak:.3e}"))
        } else {
            Ok(())
        }
    });
    let amps = match result {
        Ok(a) => a,
        Err(OdeError::Aborted { .. }) => {
            let (t, leak) = leak_at.expect("guard recorded the leak");
            return Err(DynamicsError::EdgeLeak { t, leak, tol: edge_leak_tol });
        }
        Err(e) => return Err(DynamicsError::Stiffness(e)),
    };
    let initial_leak = edge_population(&state0.amps);
    if initial_leak > edge_leak_tol {
        return Err(DynamicsError::EdgeLeak { t: state0.t, leak: initial_leak, tol: edge_leak_tol });
    }
    let states = times
        .iter()
        .zip(amps)
        .map(|(&t, amps)| WaveState { t, n_min: state0.n_min, amps, picture: state0.picture })
        .collect();
    Ok(Trajectory { states })
}

/// Integrates the laboratory-frame driven chain from `state0.t` to `t_end`.
pub fn integrate_full(
    geom: &LatticeGeometry,
    drive: &DriveParams,
    state0: &WaveState,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, DynamicsError> {
    let times = cfg.sample_times(state0.t, t_end);
    integrate_full_at(geom, drive, state0, &times, cfg)
}

/// [`integrate_full`] sampled at explicit times.
pub fn integrate_full_at(
    geom: &LatticeGeometry,
    drive: &DriveParams,
    state0: &WaveState,
    times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory, DynamicsError> {
    check_state(state0, Picture::Full, geom.len(), cfg)?;
    drive.validate()?;
    let system = FullChain { drive, positions: geom.positions() };
    run(&system, state0, times, &cfg.control(cfg.driven_h_max(drive)), cfg.edge_leak_tol)
}

/// Integrates the gauge-transformed (but not averaged) chain.
pub fn integrate_transformed(
    geom: &LatticeGeometry,
    drive: &DriveParams,
    state0: &WaveState,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, DynamicsError> {
    check_state(state0, Picture::Transformed, geom.len(), cfg)?;
    drive.validate()?;
    let gaps = geom.gaps(drive);
    let system = TransformedChain {
        drive,
        delta_a: gaps.delta_a,
        delta_b: gaps.delta_b,
        first_parity: Parity::of(geom.n_min()),
    };
    let times = cfg.sample_times(state0.t, t_end);
    run(&system, state0, &times, &cfg.control(cfg.driven_h_max(drive)), cfg.edge_leak_tol)
}

/// Integrates the averaged chain with constant rates.
pub fn integrate_averaged(
    chain: &ChainRates,
    state0: &WaveState,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, DynamicsError> {
    let times = cfg.sample_times(state0.t, t_end);
    integrate_averaged_at(chain, state0, &times, cfg)
}

/// [`integrate_averaged`] sampled at explicit times.
///
/// The averaged generator is constant and Hermitian, so the amplitudes are
/// propagated exactly through its eigenbasis rather than stepped. Bond phases
/// are first gauged away, leaving a real symmetric tridiagonal matrix.
pub fn integrate_averaged_at(
    chain: &ChainRates,
    state0: &WaveState,
    times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory, DynamicsError> {
    check_state(state0, Picture::Averaged, state0.amps.len(), cfg)?;
    let initial_leak = edge_population(&state0.amps);
    if initial_leak > cfg.edge_leak_tol {
        return Err(DynamicsError::EdgeLeak { t: state0.t, leak: initial_leak, tol: cfg.edge_leak_tol });
    }
    let prop = AveragedPropagator::new(chain, state0.n_min, state0.amps.len())?;
    let coeffs = prop.project(&state0.amps);
    let mut states = Vec::with_capacity(times.len());
    for &t in times {
        let amps = prop.evolve(&coeffs, t - state0.t);
        let leak = edge_population(&amps);
        if leak > cfg.edge_leak_tol {
            return Err(DynamicsError::EdgeLeak { t, leak, tol: cfg.edge_leak_tol });
        }
        states.push(WaveState { t, n_min: state0.n_min, amps, picture: Picture::Averaged });
    }
    Ok(Trajectory { states })
}

struct AveragedPropagator {
    gauge: Vec<C64>,
    energies: DVector<f64>,
    modes: DMatrix<f64>,
}

impl AveragedPropagator {
    fn new(chain: &ChainRates, n_min: i64, len: usize) -> Result<Self, DynamicsError> {
        let scale =
            [chain.even.fwd, chain.even.bwd, chain.odd.fwd, chain.odd.bwd].iter().map(|r| r.norm()).fold(1.0, f64::max);
        let defect = chain.hermiticity_defect();
        if defect.is_nan() || defect > 1e-12 * scale {
            return Err(DynamicsError::NonHermitian(defect));
        }
        let mut gauge = Vec::with_capacity(len);
        let mut s = DMatrix::<f64>::zeros(len, len);
        let mut chi = 0.0;
        for i in 0..len {
            gauge.push(C64::from_polar(1.0, chi));
            if i + 1 < len {
                let hop = chain.for_site(n_min + i as i64).fwd;
                s[(i, i + 1)] = hop.norm();
                s[(i + 1, i)] = hop.norm();
                chi -= if hop.norm() > 0.0 { hop.arg() } else { 0.0 };
            }
        }
        let eig = SymmetricEigen::new(s);
        Ok(AveragedPropagator { gauge, energies: eig.eigenvalues, modes: eig.eigenvectors })
    }

    /// Mode coefficients of `amps`.
    fn project(&self, amps: &[C64]) -> Vec<C64> {
        let n = amps.len();
        let y: Vec<C64> = amps.iter().zip(&self.gauge).map(|(a, d)| a * d.conj()).collect();
        (0..n).map(|k| (0..n).map(|i| y[i] * self.modes[(i, k)]).sum()).collect()
    }

    fn evolve(&self, coeffs: &[C64], dt: f64) -> Vec<C64> {
        let n = coeffs.len();
        let rotated: Vec<C64> =
            coeffs.iter().zip(self.energies.iter()).map(|(c, e)| c * C64::from_polar(1.0, -e * dt)).collect();
        (0..n)
            .map(|i| {
                let y: C64 = (0..n).map(|k| rotated[k] * self.modes[(i, k)]).sum();
                y * self.gauge[i]
            })
            .collect()
    }
}
