use std::f64::consts::PI;

use bilattice::conditions::solve_condition;
use bilattice::dynamics::center_of_mass;
use bilattice::effective::analytic_amplitudes;
use bilattice::transport::{build_ratchet_schedule, run_protocol, Model};
use bilattice::{
    BesselOrder, ChainRates, ConditionKind, DriveParams, GapArguments, IntegratorConfig, LatticeGeometry, Modulation,
};

/// Parameters shared by the demo panels. The gaps enter only through `Δ`,
/// so the page never has to pick a field strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub j0: f64,
    pub delta_j: f64,
    pub m: u32,
    pub delta_a: f64,
    pub delta_b: f64,
}

impl Rates {
    fn modulation(&self) -> Modulation {
        Modulation::new(self.j0, self.delta_j, BesselOrder::new(self.m))
    }

    fn gaps(&self) -> GapArguments {
        GapArguments { delta_a: self.delta_a, delta_b: self.delta_b }
    }

    /// A drive with `E0 = ω = 1`, so a unit-spaced geometry with `a = Δ_a`
    /// and `b = Δ_b` reproduces the requested gap arguments.
    fn drive(&self, phi: f64) -> Result<(DriveParams, LatticeGeometry), String> {
        let drive = DriveParams::new(self.j0, self.delta_j, 1.0, 1.0, BesselOrder::new(self.m), phi)
            .map_err(|e| e.to_string())?;
        let geom = LatticeGeometry::symmetric(self.delta_a, self.delta_b, 40).map_err(|e| e.to_string())?;
        Ok((drive, geom))
    }
}

pub fn rate_curves(
    j0: f64,
    delta_j: f64,
    m: u32,
    delta_a: f64,
    delta_b: f64,
    steps: usize,
) -> Result<Vec<f64>, String> {
    if steps < 2 {
        return Err(format!("need at least 2 steps, got {steps}"));
    }
    let modulation = Modulation::new(j0, delta_j, BesselOrder::new(m));
    let mut out = Vec::with_capacity(3 * steps);
    for i in 0..steps {
        let phi = PI * i as f64 / (steps - 1) as f64;
        out.extend([phi, modulation.rate(phi, delta_a).norm(), modulation.rate(phi, -delta_b).norm()]);
    }
    Ok(out)
}

pub fn averaged_populations(rates: &Rates, phi: f64, start: i64, t: f64, half_width: i64) -> Result<Vec<f64>, String> {
    let window = LatticeGeometry::symmetric(1.0, 1.0, half_width).map_err(|e| e.to_string())?;
    let (drive, _) = rates.drive(phi)?;
    let chain = ChainRates::from_drive(&drive, &rates.gaps());
    let amps = analytic_amplitudes(&chain, start, t, &window).map_err(|e| e.to_string())?;
    Ok(amps.iter().map(|a| a.norm_sqr()).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatchetTrace {
    pub phi1: f64,
    pub phi2: f64,
    /// `[t, <x>]` pairs.
    pub trace: Vec<f64>,
    pub displacement: f64,
}

pub fn ratchet_trace(rates: &Rates, cycles: usize) -> Result<RatchetTrace, String> {
    let modulation = rates.modulation();
    let gaps = rates.gaps();
    let solve = |kind| solve_condition(&modulation, &gaps, kind, (0.0, PI)).map_err(|e| e.to_string());
    let sol1 = solve(ConditionKind::DlBackward)?;
    let sol2 = solve(ConditionKind::DlForward)?;
    let schedule = build_ratchet_schedule(&sol1, &sol2, cycles).map_err(|e| e.to_string())?;
    let (drive, geom) = rates.drive(sol1.phi)?;
    let geom = LatticeGeometry::symmetric(geom.a(), geom.b(), 4 * cycles as i64 + 20).map_err(|e| e.to_string())?;
    let cfg = IntegratorConfig { samples: 40, ..IntegratorConfig::default() };
    let run = run_protocol(&geom, &drive, &schedule, Model::Averaged, 0, &cfg).map_err(|e| e.to_string())?;
    let trace = run.trajectory.states.iter().flat_map(|s| [s.t, center_of_mass(&geom, s)]).collect();
    Ok(RatchetTrace { phi1: sol1.phi, phi2: sol2.phi, trace, displacement: run.displacement })
}
