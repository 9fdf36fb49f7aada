//! Subcommand orchestration: runs the experiment drivers from a
//! [`RunConfig`] and writes plot-ready CSV plus a run summary.
//!
//! Output is deterministic: floats are written with 12 significant
//! digits, rows in fixed order, and all sweeps reduce in fixed order
//! regardless of thread count. The summary ends with a resolved-config
//! TOML block that can be re-fed as a config file to reproduce the
//! same CSV bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::experiments::{
    calibrate_noise, echo_scan, efficiency_report, fringe_phase_grid, rabi_sweep, ramsey_scan,
    InhomogeneousNoise, VisibilityCurve,
};
use crate::fit::fit_decay_best;
use crate::model::PhysicalParams;
use crate::pulses::{calibrate_pi, PulseSequence};
use crate::qcore::{DensityMatrix, Level};
use crate::solver::{
    emission_probability_extrapolated, evolve, lifetime_fit, InvariantReport, Trajectory,
};

/// Marker line separating the prose summary from the resolved-config
/// TOML block.
pub const RESOLVED_CONFIG_MARKER: &str = "# --- resolved configuration (valid config file) ---";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Trajectory,
    Rabi,
    Ramsey,
    Echo,
    Lifetime,
    Efficiency,
}

impl Subcommand {
    fn name(&self) -> &'static str {
        match self {
            Subcommand::Trajectory => "trajectory",
            Subcommand::Rabi => "rabi",
            Subcommand::Ramsey => "ramsey",
            Subcommand::Echo => "echo",
            Subcommand::Lifetime => "lifetime",
            Subcommand::Efficiency => "efficiency",
        }
    }
}

/// 12 significant digits; fixed formatting keyed to the determinism
/// guarantee, so never change this lightly.
fn fmt(v: f64) -> String {
    format!("{v:.11e}")
}

struct CsvFile {
    lines: Vec<String>,
}

impl CsvFile {
    fn new(meta: &[(&str, String)], header: &[&str]) -> CsvFile {
        let mut lines = Vec::new();
        for (k, v) in meta {
            lines.push(format!("# {k} = {v}"));
        }
        lines.push(header.join(","));
        CsvFile { lines }
    }

    fn row(&mut self, values: &[f64]) {
        let cols: Vec<String> = values.iter().map(|&v| fmt(v)).collect();
        self.lines.push(cols.join(","));
    }

    fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.lines.join("\n") + "\n")?;
        Ok(())
    }
}

/// Collects the summary document while a run executes.
struct Summary {
    subcommand: &'static str,
    fitted: Vec<(String, String)>,
    invariants: Option<InvariantReport>,
    files: Vec<PathBuf>,
}

impl Summary {
    fn new(sub: Subcommand) -> Summary {
        Summary {
            subcommand: sub.name(),
            fitted: Vec::new(),
            invariants: None,
            files: Vec::new(),
        }
    }

    fn fit(&mut self, key: &str, value: String) {
        self.fitted.push((key.to_string(), value));
    }

    fn merge_invariants(&mut self, inv: &InvariantReport) {
        match &mut self.invariants {
            Some(acc) => acc.merge(inv),
            None => self.invariants = Some(*inv),
        }
    }

    fn write(&self, out_dir: &Path, cfg: &RunConfig, wall: f64) -> Result<PathBuf> {
        let mut s = String::new();
        let _ = writeln!(s, "# run summary");
        let _ = writeln!(s, "subcommand = \"{}\"", self.subcommand);
        let _ = writeln!(s, "wall_time_s = {wall:.3}");
        for f in &self.files {
            let _ = writeln!(s, "output = \"{}\"", f.display());
        }
        if !self.fitted.is_empty() {
            let _ = writeln!(s, "\n# fitted constants");
            for (k, v) in &self.fitted {
                let _ = writeln!(s, "{k} = {v}");
            }
        }
        if let Some(inv) = &self.invariants {
            let _ = writeln!(s, "\n# invariant extrema across all integrations");
            let _ = writeln!(s, "max_trace_dev = {:e}", inv.max_trace_dev);
            let _ = writeln!(s, "max_hermiticity_dev = {:e}", inv.max_hermiticity_dev);
            let _ = writeln!(s, "min_eigenvalue = {:e}", inv.min_eigenvalue);
            let _ = writeln!(s, "steps_accepted = {}", inv.steps_accepted);
            let _ = writeln!(s, "steps_rejected = {}", inv.steps_rejected);
        }
        let _ = writeln!(s, "\n{RESOLVED_CONFIG_MARKER}");
        s.push_str(&cfg.resolved_toml());
        let path = out_dir.join("summary.txt");
        std::fs::write(&path, s)?;
        Ok(path)
    }
}

/// The pi/2 amplitude: explicit from config, or calibrated.
fn resolve_omega_half(cfg: &RunConfig) -> Result<f64> {
    match cfg.calibration.omega_half {
        Some(v) => Ok(v),
        None => {
            let cal = calibrate_pi(
                &cfg.params,
                cfg.pulse.sigma,
                cfg.pulse.delta_b,
                (cfg.calibration.search_min, cfg.calibration.search_max),
                &cfg.solver,
            )?;
            Ok(cal.omega_half)
        }
    }
}

fn resolve_noise(cfg: &RunConfig) -> Result<Option<InhomogeneousNoise>> {
    if let Some(target) = cfg.noise.target_t2star {
        let omega_half = resolve_omega_half(cfg)?;
        let cal = calibrate_noise(target, omega_half, cfg.pulse.sigma, &cfg.params, &cfg.solver)?;
        return Ok(Some(InhomogeneousNoise::new(
            cal.sigma_inh,
            cfg.noise.quadrature_order,
        )?));
    }
    if cfg.noise.sigma_inh > 0.0 {
        return Ok(Some(InhomogeneousNoise::new(
            cfg.noise.sigma_inh,
            cfg.noise.quadrature_order,
        )?));
    }
    Ok(None)
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Run one subcommand, writing CSV files and `summary.txt` into
/// `out_dir` (created if missing).
pub fn run(sub: Subcommand, cfg: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let started = Instant::now();
    std::fs::create_dir_all(out_dir)?;
    let mut summary = Summary::new(sub);
    match sub {
        Subcommand::Trajectory => run_trajectory(cfg, out_dir, &mut summary)?,
        Subcommand::Rabi => run_rabi(cfg, out_dir, &mut summary)?,
        Subcommand::Ramsey => run_interference(cfg, out_dir, &mut summary, false)?,
        Subcommand::Echo => run_interference(cfg, out_dir, &mut summary, true)?,
        Subcommand::Lifetime => run_lifetime(cfg, out_dir, &mut summary)?,
        Subcommand::Efficiency => run_efficiency(cfg, out_dir, &mut summary)?,
    }
    let summary_path = summary.write(out_dir, cfg, started.elapsed().as_secs_f64())?;
    let mut files = summary.files.clone();
    files.push(summary_path);
    Ok(files)
}

fn run_trajectory(cfg: &RunConfig, out_dir: &Path, summary: &mut Summary) -> Result<()> {
    let omega = match cfg.pulse.amplitude {
        Some(v) => v,
        None => {
            let cal = calibrate_pi(
                &cfg.params,
                cfg.pulse.sigma,
                cfg.pulse.delta_b,
                (cfg.calibration.search_min, cfg.calibration.search_max),
                &cfg.solver,
            )?;
            summary.fit("omega_pi", format!("\"{} rad/ps\"", cal.omega_pi));
            cal.omega_pi
        }
    };
    let seq = PulseSequence::single(omega, 0.0, 0.0, cfg.pulse.delta_b)?
        .with_sigma(cfg.pulse.sigma)?;
    let t0 = -6.0 * cfg.pulse.sigma;
    let traj = evolve(
        &DensityMatrix::pure(Level::Ground),
        t0,
        cfg.trajectory.t_end,
        seq.drives(),
        &cfg.params,
        &cfg.solver,
    )?;

    let mut csv = CsvFile::new(
        &[
            ("subcommand", "trajectory".into()),
            ("omega_peak", format!("{omega} rad/ps")),
            ("sigma", format!("{} ps", cfg.pulse.sigma)),
            ("delta_b", format!("{} rad/ps", cfg.pulse.delta_b)),
        ],
        &[
            "t[ps]",
            "P_g[dimensionless]",
            "P_x[dimensionless]",
            "P_b[dimensionless]",
            "Re_rho_gb[dimensionless]",
            "Im_rho_gb[dimensionless]",
            "purity[dimensionless]",
        ],
    );
    for (t, rho) in traj.uniform_samples(cfg.trajectory.sample_dt)? {
        let (pg, px, pb) = rho.populations();
        let gb = rho.coherence(Level::Ground, Level::Biexciton);
        csv.row(&[t, pg, px, pb, gb.re, gb.im, rho.purity()]);
    }
    let path = out_dir.join("trajectory.csv");
    csv.write(&path)?;
    summary.files.push(path);

    if cfg.params.gamma_b > 0.0 && cfg.params.gamma_x > 0.0 {
        let (pxx, px) = emission_probability_extrapolated(&traj, &cfg.params)?;
        summary.fit("P_xx", fmt(pxx));
        summary.fit("P_x", fmt(px));
    }
    summary.merge_invariants(&traj.invariants);
    Ok(())
}

fn run_rabi(cfg: &RunConfig, out_dir: &Path, summary: &mut Summary) -> Result<()> {
    let amplitudes = linspace(
        cfg.rabi.amplitude_min,
        cfg.rabi.amplitude_max,
        cfg.rabi.points,
    );
    // power axis normalized to the zero-detuning pi pulse
    let cal = calibrate_pi(
        &cfg.params,
        cfg.pulse.sigma,
        0.0,
        (cfg.calibration.search_min, cfg.calibration.search_max),
        &cfg.solver,
    )?;
    summary.fit("omega_pi", format!("\"{} rad/ps\"", cal.omega_pi));
    summary.fit("emission_at_pi", fmt(cal.emission_max));

    let sweep = rabi_sweep(
        &amplitudes,
        &cfg.rabi.detunings,
        cfg.pulse.sigma,
        &cfg.params,
        &cfg.solver,
        cfg.observable,
    )?;
    for (i, curve) in sweep.curves.iter().enumerate() {
        let mut csv = CsvFile::new(
            &[
                ("subcommand", "rabi".into()),
                ("delta_b", format!("{} rad/ps", curve.delta_b)),
                ("omega_pi_ref", format!("{} rad/ps", cal.omega_pi)),
            ],
            &[
                "omega[rad/ps]",
                "omega_sq[rad2/ps2]",
                "power_rel[dimensionless]",
                "P_xx[dimensionless]",
                "P_x[dimensionless]",
            ],
        );
        for p in &curve.points {
            let power_rel = (p.omega_peak / cal.omega_pi).powi(2);
            csv.row(&[
                p.omega_peak,
                p.omega_peak * p.omega_peak,
                power_rel,
                p.p_xx,
                p.p_x,
            ]);
        }
        let path = out_dir.join(format!("rabi_{i}.csv"));
        csv.write(&path)?;
        summary.files.push(path);
    }
    summary.merge_invariants(&sweep.invariants);
    Ok(())
}

fn write_visibility_csv(
    name: &str,
    curve: &VisibilityCurve,
    meta: &[(&str, String)],
    out_dir: &Path,
) -> Result<PathBuf> {
    let mut csv = CsvFile::new(
        meta,
        &[
            "tau[ps]",
            "visibility[dimensionless]",
            "offset[dimensionless]",
            "amplitude[dimensionless]",
            "phase[rad]",
        ],
    );
    for (i, f) in curve.fringes.iter().enumerate() {
        csv.row(&[
            curve.delays[i],
            f.visibility(),
            f.offset,
            f.amplitude,
            f.phase,
        ]);
    }
    let path = out_dir.join(format!("{name}.csv"));
    csv.write(&path)?;
    Ok(path)
}

fn run_interference(
    cfg: &RunConfig,
    out_dir: &Path,
    summary: &mut Summary,
    echo: bool,
) -> Result<()> {
    let omega_half = resolve_omega_half(cfg)?;
    summary.fit("omega_half", format!("\"{omega_half} rad/ps\""));
    let noise = resolve_noise(cfg)?;
    if let Some(n) = &noise {
        summary.fit("sigma_inh", format!("\"{} rad/ps\"", n.sigma_inh));
    }
    let scan = if echo { &cfg.echo } else { &cfg.ramsey };
    let delays = linspace(scan.tau_min, scan.tau_max, scan.points);
    let phases = fringe_phase_grid(scan.phase_points);
    let name = if echo { "echo" } else { "ramsey" };

    let curve = if echo {
        echo_scan(
            &delays,
            &phases,
            omega_half,
            cfg.pulse.sigma,
            cfg.pulse.delta_b,
            noise.as_ref(),
            &cfg.params,
            &cfg.solver,
            cfg.observable,
        )?
    } else {
        ramsey_scan(
            &delays,
            &phases,
            omega_half,
            cfg.pulse.sigma,
            cfg.pulse.delta_b,
            noise.as_ref(),
            &cfg.params,
            &cfg.solver,
            cfg.observable,
        )?
    };

    let path = write_visibility_csv(
        name,
        &curve,
        &[
            ("subcommand", name.to_string()),
            ("omega_half", format!("{omega_half} rad/ps")),
            (
                "sigma_inh",
                format!(
                    "{} rad/ps",
                    noise.as_ref().map_or(0.0, |n| n.sigma_inh)
                ),
            ),
        ],
        out_dir,
    )?;
    summary.files.push(path);

    match fit_decay_best(&curve.delays, &curve.visibilities()) {
        Ok((best, other_residual)) => {
            summary.fit("decay_shape", format!("\"{}\"", best.shape));
            summary.fit("decay_time", format!("\"{} ps\"", best.time_constant));
            summary.fit("decay_amplitude", fmt(best.amplitude));
            summary.fit("decay_residual_rms", fmt(best.residual_rms));
            summary.fit("rejected_shape_residual_rms", fmt(other_residual));
        }
        Err(e) => summary.fit("decay_fit_error", format!("\"{e}\"")),
    }
    summary.merge_invariants(&curve.invariants);
    Ok(())
}

fn dark_decay(
    from: Level,
    span: f64,
    params: &PhysicalParams,
    cfg: &RunConfig,
) -> Result<Trajectory> {
    evolve(
        &DensityMatrix::pure(from),
        0.0,
        span,
        &[],
        params,
        &cfg.solver,
    )
}

fn run_lifetime(cfg: &RunConfig, out_dir: &Path, summary: &mut Summary) -> Result<()> {
    if !(cfg.params.gamma_b > 0.0 && cfg.params.gamma_x > 0.0) {
        return Err(Error::InvalidArgument(
            "lifetime fits need both radiative rates > 0".into(),
        ));
    }
    for (level, label) in [(Level::Biexciton, "xx"), (Level::Exciton, "x")] {
        let rate = match level {
            Level::Biexciton => cfg.params.gamma_b,
            _ => cfg.params.gamma_x,
        };
        let span = 8.0 / rate;
        let traj = dark_decay(level, span, &cfg.params, cfg)?;
        let tau = lifetime_fit(&traj, level)?;
        summary.fit(&format!("lifetime_{label}"), format!("\"{tau} ps\""));

        let mut csv = CsvFile::new(
            &[
                ("subcommand", "lifetime".into()),
                ("initial_state", label.to_string()),
            ],
            &["t[ps]", "P_g[dimensionless]", "P_x[dimensionless]", "P_b[dimensionless]"],
        );
        for (t, rho) in traj.uniform_samples(span / 400.0)? {
            let (pg, px, pb) = rho.populations();
            csv.row(&[t, pg, px, pb]);
        }
        let path = out_dir.join(format!("lifetime_{label}.csv"));
        csv.write(&path)?;
        summary.files.push(path);
        summary.merge_invariants(&traj.invariants);
    }
    Ok(())
}

fn run_efficiency(cfg: &RunConfig, out_dir: &Path, summary: &mut Summary) -> Result<()> {
    let e = &cfg.efficiency;
    let report = efficiency_report(e.singles_xx, e.singles_x, e.coincidences, e.rep_rate)?;
    let mut csv = CsvFile::new(
        &[("subcommand", "efficiency".into())],
        &[
            "singles_xx[Hz]",
            "singles_x[Hz]",
            "coincidences[Hz]",
            "rep_rate[Hz]",
            "eta[dimensionless]",
            "pair_rate[Hz]",
            "excitation_fraction[dimensionless]",
        ],
    );
    csv.row(&[
        report.singles_xx,
        report.singles_x,
        report.coincidences,
        report.rep_rate,
        report.eta,
        report.pair_rate,
        report.excitation_fraction,
    ]);
    let path = out_dir.join("efficiency.csv");
    csv.write(&path)?;
    summary.files.push(path);
    summary.fit("eta", fmt(report.eta));
    summary.fit("eta_permille", fmt(report.eta * 1e3));
    summary.fit("pair_rate_hz", fmt(report.pair_rate));
    summary.fit("excitation_fraction", fmt(report.excitation_fraction));
    Ok(())
}

/// The validate report: every resolved parameter with value and
/// provenance. Runs no simulations.
pub fn validate_report(cfg: &RunConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<32} {:<28} {}", "key", "resolved", "provenance");
    for e in &cfg.entries {
        let _ = writeln!(out, "{:<32} {:<28} {}", e.key, e.resolved, e.provenance);
    }
    out
}
