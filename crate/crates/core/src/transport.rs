//! Phase-switched ratchet: alternate between the two dimerising phases so
//! that each segment hands the particle across one bond.
//!
//! At `φ1` the b-gap bonds are frozen and the particle swings across an
//! a-gap; at `φ2` it is the other way round. Starting on an even site with
//! `φ1` moves the particle right by `a + b` per cycle; leading with `φ2`
//! moves it left.
//!
//! Segment length is configurable. [`SegmentTiming::Transfer`] lasts
//! `π/(2ω_i)`, a complete hand-over. [`SegmentTiming::HalfPeriod`] lasts
//! `T_i = π/ω_i`, after which the population is back on its starting site.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conditions::{ConditionKind, ConditionSolution};
use crate::dynamics::{
    center_of_mass, integrate_averaged_at, integrate_full_at, DynamicsError, IntegratorConfig, Picture, Trajectory,
    WaveState,
};
use crate::effective::{rates_for_site, ChainRates};
use crate::lattice::{DriveParams, LatticeError, LatticeGeometry, Parity};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("schedule error: {0}")]
    Schedule(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Population on the partner site below which a segment counts as degraded.
pub const TRANSFER_FIDELITY_FLOOR: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentTiming {
    /// `π / (2 ω_i)`: one complete hand-over per segment.
    #[default]
    Transfer,
    /// `π / ω_i`: a full population cycle per segment.
    HalfPeriod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Leading {
    #[default]
    Phi1,
    Phi2,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RatchetOptions {
    pub timing: SegmentTiming,
    pub leading: Leading,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSchedule {
    pub segments: Vec<Segment>,
}

impl PhaseSchedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self, TransportError> {
        if segments.is_empty() {
            return Err(TransportError::Schedule("empty schedule".into()));
        }
        if let Some(bad) = segments.iter().find(|s| !(s.duration > 0.0 && s.duration.is_finite())) {
            return Err(TransportError::Schedule(format!("segment duration {} is not positive", bad.duration)));
        }
        Ok(PhaseSchedule { segments })
    }

    pub fn t_total(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }
}

fn segment_for(sol: &ConditionSolution, timing: SegmentTiming) -> Result<Segment, TransportError> {
    let half = sol
        .half_period
        .ok_or_else(|| TransportError::Schedule(format!("{:?} solution carries no half-period", sol.kind)))?;
    let duration = match timing {
        SegmentTiming::Transfer => 0.5 * half,
        SegmentTiming::HalfPeriod => half,
    };
    Ok(Segment { duration, phi: sol.phi })
}

/// `cycles` repetitions of `(φ1, φ2)` with complete-transfer segments.
pub fn build_ratchet_schedule(
    sol1: &ConditionSolution,
    sol2: &ConditionSolution,
    cycles: usize,
) -> Result<PhaseSchedule, TransportError> {
    build_ratchet_schedule_with(sol1, sol2, cycles, &RatchetOptions::default())
}

/// `sol1` must freeze the backward (b-gap) bond and `sol2` the forward
/// (a-gap) bond of an even site.
pub fn build_ratchet_schedule_with(
    sol1: &ConditionSolution,
    sol2: &ConditionSolution,
    cycles: usize,
    opts: &RatchetOptions,
) -> Result<PhaseSchedule, TransportError> {
    if cycles == 0 {
        return Err(TransportError::Schedule("cycles must be at least 1".into()));
    }
    if sol1.kind != ConditionKind::DlBackward || sol2.kind != ConditionKind::DlForward {
        return Err(TransportError::Schedule(format!(
            "expected (dl-backward, dl-forward) solutions, got ({:?}, {:?})",
            sol1.kind, sol2.kind
        )));
    }
    let s1 = segment_for(sol1, opts.timing)?;
    let s2 = segment_for(sol2, opts.timing)?;
    let pair = match opts.leading {
        Leading::Phi1 => [s1, s2],
        Leading::Phi2 => [s2, s1],
    };
    PhaseSchedule::new(pair.iter().copied().cycle().take(2 * cycles).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Full,
    Averaged,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentSummary {
    pub index: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub phi: f64,
    /// Dominant site when the segment started.
    pub from_site: i64,
    /// Neighbour across the bond that is active at this phase.
    pub partner_site: i64,
    /// Population on the partner site at the end of the segment.
    pub transfer_fidelity: f64,
    pub dominant_site: i64,
    pub x_mean: f64,
    /// `|J(t_s; φ_prev) - J(t_s; φ)|` at the switch, full model only.
    pub coupling_jump: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolRun {
    pub trajectory: Trajectory,
    pub segments: Vec<SegmentSummary>,
    pub displacement: f64,
    pub warnings: Vec<String>,
}

/// Runs `schedule` from `|start_site>`, switching the phase instantaneously
/// between segments while the amplitudes carry over unchanged.
pub fn run_protocol(
    geom: &LatticeGeometry,
    drive_base: &DriveParams,
    schedule: &PhaseSchedule,
    model: Model,
    start_site: i64,
    cfg: &IntegratorConfig,
) -> Result<ProtocolRun, TransportError> {
    let picture = match model {
        Model::Full => Picture::Full,
        Model::Averaged => Picture::Averaged,
    };
    let gaps = geom.gaps(drive_base);
    let mut state = WaveState::localized(geom, start_site, picture)?;
    let x_start = center_of_mass(geom, &state);
    let mut states = vec![state.clone()];
    let mut summaries = Vec::with_capacity(schedule.segments.len());
    let mut warnings = Vec::new();
    let mut prev_phi: Option<f64> = None;

    for (index, seg) in schedule.segments.iter().enumerate() {
        let drive = drive_base.with_phi(seg.phi);
        let t_start = state.t;
        let t_end = t_start + seg.duration;
        let from_site = state.dominant_site();
        let own = rates_for_site(&drive, &gaps, Parity::of(from_site));
        let partner_site = if own.fwd.norm() >= own.bwd.norm() { from_site + 1 } else { from_site - 1 };

        let times = cfg.sample_times(t_start, t_end);
        let traj = match model {
            Model::Averaged => integrate_averaged_at(&ChainRates::from_drive(&drive, &gaps), &state, &times, cfg)?,
            Model::Full => integrate_full_at(geom, &drive, &state, &times, cfg)?,
        };
        state = traj.last().clone();
        state.t = t_end;
        states.extend(traj.states.into_iter().skip(1));

        let transfer_fidelity = state.population(partner_site);
        if transfer_fidelity < TRANSFER_FIDELITY_FLOOR {
            warnings
                .push(format!("protocol degraded: segment {index} left {transfer_fidelity:.4} on site {partner_site}"));
        }
        let coupling_jump = match (model, prev_phi) {
            (Model::Full, Some(p)) => {
                Some((drive_base.with_phi(p).coupling_at(t_start) - drive.coupling_at(t_start)).abs())
            }
            (Model::Full, None) => Some(0.0),
            (Model::Averaged, _) => None,
        };
        summaries.push(SegmentSummary {
            index,
            t_start,
            t_end,
            phi: seg.phi,
            from_site,
            partner_site,
            transfer_fidelity,
            dominant_site: state.dominant_site(),
            x_mean: center_of_mass(geom, &state),
            coupling_jump,
        });
        prev_phi = Some(seg.phi);
    }
    let displacement = center_of_mass(geom, &state) - x_start;
    Ok(ProtocolRun { trajectory: Trajectory { states }, segments: summaries, displacement, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effective::EffectiveRates;
    use num_complex::Complex64 as C64;

    fn sol(kind: ConditionKind, phi: f64, half: Option<f64>) -> ConditionSolution {
        let z = C64::new(0.0, 0.0);
        ConditionSolution {
            kind,
            phi,
            rates: EffectiveRates::new(z, z),
            rabi_freq: half.map(|t| std::f64::consts::PI / t),
            half_period: half,
        }
    }

    #[test]
    fn schedule_layout() {
        let s1 = sol(ConditionKind::DlBackward, 1.9, Some(25.0));
        let s2 = sol(ConditionKind::DlForward, 2.5, Some(22.0));
        let sched = build_ratchet_schedule(&s1, &s2, 2).unwrap();
        let got: Vec<(f64, f64)> = sched.segments.iter().map(|s| (s.duration, s.phi)).collect();
        assert_eq!(got, vec![(12.5, 1.9), (11.0, 2.5), (12.5, 1.9), (11.0, 2.5)]);
        assert_eq!(sched.t_total(), 47.0);

        let opts = RatchetOptions { timing: SegmentTiming::HalfPeriod, leading: Leading::Phi2 };
        let literal = build_ratchet_schedule_with(&s1, &s2, 1, &opts).unwrap();
        let got: Vec<(f64, f64)> = literal.segments.iter().map(|s| (s.duration, s.phi)).collect();
        assert_eq!(got, vec![(22.0, 2.5), (25.0, 1.9)]);
    }

    #[test]
    fn schedule_rejections() {
        let s1 = sol(ConditionKind::DlBackward, 1.9, Some(25.0));
        let s2 = sol(ConditionKind::DlForward, 2.5, Some(22.0));
        assert!(build_ratchet_schedule(&s1, &s2, 0).is_err());
        assert!(build_ratchet_schedule(&s2, &s1, 1).is_err());
        let cdt = sol(ConditionKind::Cdt, 2.4, None);
        assert!(build_ratchet_schedule(&s1, &cdt, 1).is_err());
        let broken = sol(ConditionKind::DlForward, 2.5, None);
        assert!(build_ratchet_schedule(&s1, &broken, 1).is_err());
        assert!(PhaseSchedule::new(vec![]).is_err());
        assert!(PhaseSchedule::new(vec![Segment { duration: -1.0, phi: 0.0 }]).is_err());
    }
}
