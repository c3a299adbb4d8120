//! CSV writers. Numbers use Rust's locale-independent shortest round-trip
//! formatting; column order and names are fixed.

use std::io::Write;

use crate::error::Result;
use crate::preload::SweepReport;
use crate::sim::SimLog;
use crate::types::PoseVector;

pub fn num(v: f64) -> String {
    format!("{v:?}")
}

const POSE_COLS: [&str; 6] = ["x", "y", "z", "alpha_deg", "beta_deg", "gamma_deg"];
const WRENCH_COLS: [&str; 6] = ["fx", "fy", "fz", "mx", "my", "mz"];

/// Pose as `[x, y, z]` in meters followed by angles in degrees.
pub fn pose_fields(p: &PoseVector) -> Vec<String> {
    (0..6)
        .map(|k| num(if k < 3 { p[k] } else { p[k].to_degrees() }))
        .collect()
}

fn pose_header(suffix: &str) -> Vec<String> {
    POSE_COLS.iter().map(|c| format!("{c}_{suffix}")).collect()
}

pub fn sim_log_header(m: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend(pose_header("tar"));
    h.extend(pose_header("dk"));
    h.extend(POSE_COLS.iter().map(|c| format!("e_{c}")));
    h.extend(pose_header("act"));
    h.extend((1..=m).map(|i| format!("f_tar_{i}")));
    h.extend((1..=m).map(|i| format!("f_act_{i}")));
    h.extend(WRENCH_COLS.iter().map(|c| format!("w_obs_{c}")));
    h.extend(["eta", "payload_kg", "status"].map(String::from));
    h
}

pub fn write_sim_log<W: Write>(log: &SimLog, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(sim_log_header(log.m))?;
    for r in &log.rows {
        let mut rec = vec![num(r.t)];
        rec.extend(pose_fields(&r.target));
        rec.extend(pose_fields(&r.direct));
        rec.extend(pose_fields(&PoseVector(r.error)));
        rec.extend(pose_fields(&r.actual));
        rec.extend(r.f_tar.iter().map(|&v| num(v)));
        rec.extend(r.f_act.iter().map(|&v| num(v)));
        let mut wrench = r.w_obs.iter().map(|&v| num(v)).collect::<Vec<_>>();
        wrench.resize(6, String::new());
        rec.extend(wrench);
        rec.push(num(r.eta));
        rec.push(num(r.payload_mass));
        rec.push(r.status.as_str().to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn eta_label(eta: f64) -> String {
    format!("eta{eta}")
}

pub fn sweep_header(m: usize, etas: &[f64], timing: bool) -> Vec<String> {
    let mut h = vec!["index".to_string()];
    h.extend(POSE_COLS.iter().map(|c| c.to_string()));
    for &e in etas {
        let l = eta_label(e);
        h.extend((1..=m).map(|i| format!("{l}_f{i}")));
        h.push(format!("{l}_feasible"));
        h.push(format!("{l}_objective"));
        if timing {
            h.push(format!("{l}_solve_us"));
        }
    }
    h.extend((1..=m).map(|i| format!("cf_f{i}")));
    h.push("cf_valid".into());
    h
}

/// One row per pose. `reports` pairs each preload parameter with its sweep
/// over the same path; the closed-form columns come from the first report.
/// Solve times are only written with `timing`, since they make the output
/// machine-dependent.
pub fn write_sweep<W: Write>(
    m: usize,
    reports: &[(f64, SweepReport)],
    timing: bool,
    out: W,
) -> Result<()> {
    let etas: Vec<f64> = reports.iter().map(|(e, _)| *e).collect();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(sweep_header(m, &etas, timing))?;
    let Some((_, first)) = reports.first() else {
        w.flush().map_err(csv::Error::from)?;
        return Ok(());
    };
    let nan = || vec![num(f64::NAN); m];
    for (k, point) in first.points.iter().enumerate() {
        let mut rec = vec![k.to_string()];
        rec.extend(pose_fields(&point.pose));
        for (_, report) in reports {
            match &report.points[k].solution {
                Some(s) => {
                    rec.extend(s.forces.iter().map(|&v| num(v)));
                    rec.push(u8::from(s.feasible).to_string());
                    rec.push(num(s.objective));
                    if timing {
                        rec.push(num(s.solve_time.as_secs_f64() * 1e6));
                    }
                }
                None => {
                    rec.extend(nan());
                    rec.push("0".into());
                    rec.push(num(f64::NAN));
                    if timing {
                        rec.push(num(f64::NAN));
                    }
                }
            }
        }
        match &point.closed_form {
            Some(cf) => {
                rec.extend(cf.forces.iter().map(|&v| num(v)));
                rec.push(u8::from(cf.valid).to_string());
            }
            None => {
                rec.extend(nan());
                rec.push("0".into());
            }
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
