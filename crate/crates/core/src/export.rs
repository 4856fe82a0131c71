//! CSV serialization of simulation artifacts, plus atomic file writes.
//!
//! Every writer renders the full file into a `String` so callers can hash,
//! diff, or persist it; `write_atomic` lands the bytes under the final name
//! only after a complete temp-file write. Floats use Rust's shortest
//! round-trip formatting, so identical inputs give byte-identical files.

use std::fmt::Write as FmtWrite;
use std::io::Write as IoWrite;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fclt::{FluctuationPath, FluctuationSummary};
use crate::model::Trajectory;
use crate::occupation::OccupationMeasure;
use crate::poisson::PoissonContext;
use crate::ssa::sample_on_grid;
use crate::stats::ConvergenceReport;
use crate::tqssa::OdePath;

/// Shortest round-trip decimal form, with negative zero folded to zero.
fn fmt(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v}")
}

/// Write `contents` to `path` via a temp file in the same directory and an
/// atomic rename, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Scaled trajectory sampled on a grid: `t,zs,ze,zc,zp,zv`.
pub fn trajectory_csv(traj: &Trajectory, grid: &[f64]) -> Result<String> {
    let states = sample_on_grid(traj, grid)?;
    let mut out = String::from("t,zs,ze,zc,zp,zv\n");
    for (t, z) in grid.iter().zip(&states) {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt(*t),
            fmt(z.zs),
            fmt(z.ze),
            fmt(z.zc),
            fmt(z.zp),
            fmt(z.zv())
        )
        .expect("string write");
    }
    Ok(out)
}

/// Scaled trajectory at every jump time: `t,zs,ze,zc,zp,zv`.
pub fn trajectory_jumps_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,zs,ze,zc,zp,zv\n");
    for i in 0..traj.len() {
        let z = traj.scaled_state(i);
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt(traj.times()[i]),
            fmt(z.zs),
            fmt(z.ze),
            fmt(z.zc),
            fmt(z.zp),
            fmt(z.zv())
        )
        .expect("string write");
    }
    out
}

/// Reduced-model solution: `t,value,model`.
pub fn ode_csv(path: &OdePath) -> String {
    let mut out = String::from("t,value,model\n");
    let label = path.model().label();
    for (t, v) in path.times().iter().zip(path.values()) {
        writeln!(out, "{},{},{label}", fmt(*t), fmt(*v)).expect("string write");
    }
    out
}

/// Fluctuation paths, one row per step per replica: `t,u,replica`.
pub fn fluctuation_csv(paths: &[FluctuationPath]) -> String {
    let mut out = String::from("t,u,replica\n");
    for (r, path) in paths.iter().enumerate() {
        for (t, u) in path.times().iter().zip(path.u_values()) {
            writeln!(out, "{},{},{r}", fmt(*t), fmt(*u)).expect("string write");
        }
    }
    out
}

/// Cross-replica moments of the fluctuation ensemble:
/// `t,mean,var,n_replicas`.
pub fn summary_csv(summary: &FluctuationSummary) -> String {
    let mut out = String::from("t,mean,var,n_replicas\n");
    for i in 0..summary.times.len() {
        writeln!(
            out,
            "{},{},{},{}",
            fmt(summary.times[i]),
            fmt(summary.mean[i]),
            fmt(summary.var[i]),
            summary.n_replicas
        )
        .expect("string write");
    }
    out
}

/// Nonzero occupation cells: `zc_lo,zc_hi,zv_lo,zv_hi,t_lo,t_hi,mass`.
pub fn occupation_csv(occ: &OccupationMeasure) -> String {
    let mut out = String::from("zc_lo,zc_hi,zv_lo,zv_hi,t_lo,t_hi,mass\n");
    for c in occ.nonzero_cells() {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt(c.zc_lo),
            fmt(c.zc_hi),
            fmt(c.zv_lo),
            fmt(c.zv_hi),
            fmt(c.t_lo),
            fmt(c.t_hi),
            fmt(c.mass)
        )
        .expect("string write");
    }
    out
}

/// Mean simulated slow path against its deterministic limit:
/// `t,zv_ssa_mean,zv_flln`.
pub fn fig1_csv(times: &[f64], zv_ssa_mean: &[f64], zv_flln: &[f64]) -> Result<String> {
    if times.len() != zv_ssa_mean.len() || times.len() != zv_flln.len() {
        return Err(Error::InvalidConfig(
            "overlay export needs equal-length columns".into(),
        ));
    }
    let mut out = String::from("t,zv_ssa_mean,zv_flln\n");
    for i in 0..times.len() {
        writeln!(
            out,
            "{},{},{}",
            fmt(times[i]),
            fmt(zv_ssa_mean[i]),
            fmt(zv_flln[i])
        )
        .expect("string write");
    }
    Ok(out)
}

/// Convergence study: `n,mean_sup_error,fitted_slope,slope_ci_lo,slope_ci_hi`.
///
/// The fit columns repeat the same values on each row to keep the file a
/// single flat table.
pub fn convergence_csv(report: &ConvergenceReport) -> String {
    let mut out = String::from("n,mean_sup_error,fitted_slope,slope_ci_lo,slope_ci_hi\n");
    for (n, e) in report.n_values.iter().zip(&report.mean_sup_errors) {
        writeln!(
            out,
            "{},{},{},{},{}",
            n,
            fmt(*e),
            fmt(report.fit.slope),
            fmt(report.fit.ci_90.0),
            fmt(report.fit.ci_90.1)
        )
        .expect("string write");
    }
    out
}

/// Human-readable digest of a convergence study.
pub fn convergence_text(report: &ConvergenceReport) -> String {
    let mut out = String::from("scale n -> mean sup-norm error\n");
    for (n, e) in report.n_values.iter().zip(&report.mean_sup_errors) {
        writeln!(out, "  {n:>8} -> {e:.6e}").expect("string write");
    }
    writeln!(
        out,
        "fitted rate: error ~ n^{:.4}  (90% bootstrap CI [{:.4}, {:.4}])",
        report.fit.slope, report.fit.ci_90.0, report.fit.ci_90.1
    )
    .expect("string write");
    out
}

/// Pointwise defect of the slow-scale transfer function on chosen states:
/// `z_v,z_c,residual`.
pub fn residual_sweep_csv(ctx: &PoissonContext, points: &[(f64, f64)]) -> Result<String> {
    let mut out = String::from("z_v,z_c,residual\n");
    for &(z_v, z_c) in points {
        let r = ctx.residual(z_v, z_c)?;
        writeln!(out, "{},{},{}", fmt(z_v), fmt(z_c), fmt(r)).expect("string write");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ExperimentConfig, RateConstants};
    use crate::occupation::{compute_occupation, BinSpec};
    use crate::ssa::simulate;
    use crate::tqssa::solve_flln_ode;

    fn small_trajectory() -> Trajectory {
        let cfg = ExperimentConfig {
            n: 10,
            t_end: 1.0,
            ..ExperimentConfig::default()
        };
        simulate(&cfg, 1).unwrap()
    }

    #[test]
    fn trajectory_header_and_shape() {
        let traj = small_trajectory();
        let grid = [0.0, 0.5, 1.0];
        let csv = trajectory_csv(&traj, &grid).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,zs,ze,zc,zp,zv");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,1,0.1,0,0,1"));

        let jumps = trajectory_jumps_csv(&traj);
        assert_eq!(jumps.lines().count(), traj.len() + 1);
    }

    #[test]
    fn ode_csv_carries_model_label() {
        let rates = RateConstants::new(1.0, 1.0, 0.75).unwrap();
        let path = solve_flln_ode(1.0, 0.1, &rates, &[0.0, 1.0]).unwrap();
        let csv = ode_csv(&path);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,value,model");
        assert_eq!(lines[1], "0,1,flln_tqssa");
        assert!(lines[2].ends_with(",flln_tqssa"));
    }

    #[test]
    fn summary_and_fluctuation_formats() {
        let paths = vec![];
        assert_eq!(fluctuation_csv(&paths), "t,u,replica\n");

        let summary = FluctuationSummary {
            times: vec![0.0, 1.0],
            mean: vec![0.0, -0.25],
            var: vec![0.0, 0.5],
            n_replicas: 2,
        };
        assert_eq!(
            summary_csv(&summary),
            "t,mean,var,n_replicas\n0,0,0,2\n1,-0.25,0.5,2\n"
        );
    }

    #[test]
    fn occupation_rows_match_nonzero_cells() {
        let traj = small_trajectory();
        let spec = BinSpec::new(1.0, 1.0, 1.0, 4, 2).unwrap();
        let occ = compute_occupation(&traj, spec).unwrap();
        let csv = occupation_csv(&occ);
        assert_eq!(csv.lines().count(), occ.nonzero_cells().len() + 1);
        assert!(csv.starts_with("zc_lo,zc_hi,zv_lo,zv_hi,t_lo,t_hi,mass\n"));
    }

    #[test]
    fn fig1_format_and_length_check() {
        let csv = fig1_csv(&[0.0, 1.0], &[1.0, 0.9], &[1.0, 0.91]).unwrap();
        assert_eq!(csv, "t,zv_ssa_mean,zv_flln\n0,1,1\n1,0.9,0.91\n");
        assert!(fig1_csv(&[0.0], &[1.0, 0.9], &[1.0]).is_err());
    }

    #[test]
    fn convergence_outputs_carry_the_fit() {
        let report = ConvergenceReport {
            n_values: vec![100, 400],
            mean_sup_errors: vec![0.1, 0.05],
            fit: crate::stats::RateFit {
                slope: -0.5,
                intercept: 1.0,
                ci_90: (-0.6, -0.4),
            },
        };
        let csv = convergence_csv(&report);
        assert_eq!(
            csv,
            "n,mean_sup_error,fitted_slope,slope_ci_lo,slope_ci_hi\n\
             100,0.1,-0.5,-0.6,-0.4\n400,0.05,-0.5,-0.6,-0.4\n"
        );
        let text = convergence_text(&report);
        assert!(text.contains("n^-0.5000"));
        assert!(text.contains("[-0.6000, -0.4000]"));
    }

    #[test]
    fn residual_sweep_rows_are_small() {
        let rates = RateConstants::new(1.0, 1.0, 0.75).unwrap();
        let ctx = PoissonContext::new(0.1, rates).unwrap();
        let csv = residual_sweep_csv(&ctx, &[(1.0, 0.03), (0.5, 0.01)]).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "z_v,z_c,residual");
        assert_eq!(lines.len(), 3);
        for line in &lines[1..] {
            let r: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
            assert!(r.abs() < 1e-12);
        }
    }

    #[test]
    fn atomic_writes_replace_and_leave_no_droppings() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, "a,b\n1,2\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "a,b\n1,2\n");
        write_atomic(&path, "a,b\n3,4\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "a,b\n3,4\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn identical_inputs_render_identical_bytes() {
        let traj = small_trajectory();
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let a = trajectory_csv(&traj, &grid).unwrap();
        let b = trajectory_csv(&traj, &grid).unwrap();
        assert_eq!(a, b);
        assert!(!a.contains("-0,") && !a.contains(",-0\n"));
    }
}
