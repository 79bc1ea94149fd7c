//! CSV and JSON writers. Floats are written with 17 significant digits so
//! every value reads back bit-for-bit.

use std::io::{self, Write};

use serde::Serialize;

use crate::dynamics::{center_of_mass, participation_ratio, Trajectory};
use crate::effective::EffectiveRates;
use crate::lattice::LatticeGeometry;

/// `x` in scientific notation with 16 digits after the point.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trajectory_header(n_min: i64, n_max: i64) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((n_min..=n_max).map(|n| format!("n={n}")));
    cols.extend(["norm", "x_mean", "pr"].map(String::from));
    cols.join(",")
}

/// One row per sample: time, site populations, norm, centre of mass and
/// participation ratio.
pub fn write_trajectory_csv<W: Write + ?Sized>(
    out: &mut W,
    geom: &LatticeGeometry,
    traj: &Trajectory,
) -> io::Result<()> {
    writeln!(out, "{}", trajectory_header(geom.n_min(), geom.n_max()))?;
    for state in &traj.states {
        let mut line = fmt_float(state.t);
        for a in &state.amps {
            line.push(',');
            line.push_str(&fmt_float(a.norm_sqr()));
        }
        for v in [state.norm(), center_of_mass(geom, state), participation_ratio(state)] {
            line.push(',');
            line.push_str(&fmt_float(v));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub const SCAN_HEADER: &str = "phi,rate_fwd_re,rate_fwd_im,rate_bwd_re,rate_bwd_im,neg_rate_bwd_re";

/// Even-site rates at one phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub phi: f64,
    pub rates: EffectiveRates,
}

pub fn write_scan_csv<W: Write + ?Sized>(out: &mut W, rows: &[ScanRow]) -> io::Result<()> {
    writeln!(out, "{SCAN_HEADER}")?;
    for row in rows {
        let r = &row.rates;
        let fields = [row.phi, r.fwd.re, r.fwd.im, r.bwd.re, r.bwd.im, -r.bwd.re].map(fmt_float);
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Pretty-printed JSON followed by a newline.
pub fn write_json<W: Write + ?Sized, T: Serialize>(out: &mut W, value: &T) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)
}
