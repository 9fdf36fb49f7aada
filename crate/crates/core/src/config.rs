//! TOML run configuration with explicit unit suffixes and per-key
//! provenance.
//!
//! Every physical quantity is a string like `"405 ps"` or `"335 GHz"`;
//! frequencies given in hertz units are converted to angular units with
//! the 2 pi factor (the classic trap this format exists to prevent).
//! Decay and dephasing parameters accept either a characteristic time
//! (inverted to a rate) or a rate in `1/ps`. Bare numbers are only
//! accepted for dimensionless values.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::Observable;
use crate::model::PhysicalParams;
use crate::solver::{Method, SolverConfig};

/// Where a resolved value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Built-in default (the paper's measured value where one exists).
    Default,
    /// Set in the configuration file.
    File,
    /// Set with `--override key=value`.
    Override,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::Default => write!(f, "default"),
            Provenance::File => write!(f, "file"),
            Provenance::Override => write!(f, "override"),
        }
    }
}

/// One resolved configuration key, for the validate report and the
/// summary's resolved-config block.
#[derive(Debug, Clone)]
pub struct ResolvedEntry {
    /// Dotted key path, e.g. `physics.exciton_detuning`.
    pub key: String,
    /// Value rendered as a TOML literal (quantities keep their unit).
    pub value_toml: String,
    /// Human-readable resolved value in base units.
    pub resolved: String,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy)]
enum Dim {
    /// ps
    Time,
    /// rad/ps; hertz units converted with 2 pi
    AngularFreq,
    /// 1/ps; a time suffix means a characteristic time and is inverted
    Rate,
    /// Hz
    Hertz,
}

fn parse_quantity(s: &str, dim: Dim, key: &str) -> Result<f64> {
    let s = s.trim();
    let mut it = s.split_whitespace();
    let (num, unit) = match (it.next(), it.next(), it.next()) {
        (Some(n), Some(u), None) => (n, u),
        _ => {
            return Err(Error::Config(format!(
                "{key}: expected \"<number> <unit>\", got {s:?}"
            )))
        }
    };
    let v: f64 = num
        .parse()
        .map_err(|_| Error::Config(format!("{key}: bad number {num:?}")))?;
    if !v.is_finite() {
        return Err(Error::Config(format!("{key}: non-finite value")));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let time_scale = |u: &str| -> Option<f64> {
        match u {
            "fs" => Some(1e-3),
            "ps" => Some(1.0),
            "ns" => Some(1e3),
            "us" => Some(1e6),
            _ => None,
        }
    };
    match dim {
        Dim::Time => time_scale(unit)
            .map(|sc| v * sc)
            .ok_or_else(|| Error::Config(format!("{key}: {unit:?} is not a time unit"))),
        Dim::AngularFreq => match unit {
            "rad/ps" => Ok(v),
            "THz" => Ok(v * two_pi),
            "GHz" => Ok(v * two_pi * 1e-3),
            "MHz" => Ok(v * two_pi * 1e-6),
            "kHz" => Ok(v * two_pi * 1e-9),
            _ => Err(Error::Config(format!(
                "{key}: {unit:?} is not an angular-frequency unit (rad/ps, GHz, ...)"
            ))),
        },
        Dim::Rate => {
            if unit == "1/ps" {
                Ok(v)
            } else if let Some(sc) = time_scale(unit) {
                let t = v * sc;
                if t <= 0.0 {
                    return Err(Error::Config(format!(
                        "{key}: characteristic time must be > 0, got {t} ps"
                    )));
                }
                Ok(1.0 / t)
            } else {
                Err(Error::Config(format!(
                    "{key}: {unit:?} is not a rate (1/ps) or time unit"
                )))
            }
        }
        Dim::Hertz => match unit {
            "Hz" => Ok(v),
            "kHz" => Ok(v * 1e3),
            "MHz" => Ok(v * 1e6),
            "GHz" => Ok(v * 1e9),
            _ => Err(Error::Config(format!(
                "{key}: {unit:?} is not a hertz unit"
            ))),
        },
    }
}

fn base_unit(dim: Dim) -> &'static str {
    match dim {
        Dim::Time => "ps",
        Dim::AngularFreq => "rad/ps",
        Dim::Rate => "1/ps",
        Dim::Hertz => "Hz",
    }
}

/// Cursor over the parsed TOML table that records which keys were
/// consumed (for unknown-key detection) and the provenance of every
/// resolved value.
struct Reader {
    table: toml::Table,
    overridden: BTreeSet<String>,
    consumed: BTreeSet<String>,
    entries: Vec<ResolvedEntry>,
}

impl Reader {
    fn lookup(&mut self, path: &str) -> Option<toml::Value> {
        let mut parts = path.split('.');
        let section = parts.next()?;
        let key = parts.next()?;
        let v = self.table.get(section)?.as_table()?.get(key)?.clone();
        self.consumed.insert(path.to_string());
        Some(v)
    }

    fn provenance(&self, path: &str, from_file: bool) -> Provenance {
        if self.overridden.contains(path) {
            Provenance::Override
        } else if from_file {
            Provenance::File
        } else {
            Provenance::Default
        }
    }

    fn record(&mut self, path: &str, value_toml: String, resolved: String, from_file: bool) {
        let provenance = self.provenance(path, from_file);
        self.entries.push(ResolvedEntry {
            key: path.to_string(),
            value_toml,
            resolved,
            provenance,
        });
    }

    /// Quantity with unit suffix; the default is in base units.
    fn quantity(&mut self, path: &str, default: f64, dim: Dim) -> Result<f64> {
        match self.lookup(path) {
            None => {
                self.record(
                    path,
                    format!("\"{} {}\"", default, base_unit(dim)),
                    format!("{} {}", default, base_unit(dim)),
                    false,
                );
                Ok(default)
            }
            Some(toml::Value::String(s)) => {
                let v = parse_quantity(&s, dim, path)?;
                self.record(
                    path,
                    format!("\"{} {}\"", v, base_unit(dim)),
                    format!("{} {}", v, base_unit(dim)),
                    true,
                );
                Ok(v)
            }
            Some(other) => Err(Error::Config(format!(
                "{path}: expected a quoted quantity with a unit, got {other}"
            ))),
        }
    }

    /// Quantity that may also be the string "auto".
    fn quantity_or_auto(&mut self, path: &str, dim: Dim) -> Result<Option<f64>> {
        match self.lookup(path) {
            None => {
                self.record(path, "\"auto\"".into(), "auto".into(), false);
                Ok(None)
            }
            Some(toml::Value::String(s)) if s.trim() == "auto" => {
                self.record(path, "\"auto\"".into(), "auto".into(), true);
                Ok(None)
            }
            Some(toml::Value::String(s)) => {
                let v = parse_quantity(&s, dim, path)?;
                self.record(
                    path,
                    format!("\"{} {}\"", v, base_unit(dim)),
                    format!("{} {}", v, base_unit(dim)),
                    true,
                );
                Ok(Some(v))
            }
            Some(other) => Err(Error::Config(format!(
                "{path}: expected \"auto\" or a quoted quantity, got {other}"
            ))),
        }
    }

    fn number(&mut self, path: &str, default: f64) -> Result<f64> {
        match self.lookup(path) {
            None => {
                self.record(path, fmt_toml_float(default), format!("{default}"), false);
                Ok(default)
            }
            Some(toml::Value::Float(v)) => {
                self.record(path, fmt_toml_float(v), format!("{v}"), true);
                Ok(v)
            }
            Some(toml::Value::Integer(i)) => {
                let v = i as f64;
                self.record(path, fmt_toml_float(v), format!("{v}"), true);
                Ok(v)
            }
            Some(other) => Err(Error::Config(format!(
                "{path}: expected a number, got {other}"
            ))),
        }
    }

    fn integer(&mut self, path: &str, default: i64) -> Result<i64> {
        match self.lookup(path) {
            None => {
                self.record(path, format!("{default}"), format!("{default}"), false);
                Ok(default)
            }
            Some(toml::Value::Integer(v)) => {
                self.record(path, format!("{v}"), format!("{v}"), true);
                Ok(v)
            }
            Some(other) => Err(Error::Config(format!(
                "{path}: expected an integer, got {other}"
            ))),
        }
    }

    fn choice(&mut self, path: &str, default: &str, allowed: &[&str]) -> Result<String> {
        match self.lookup(path) {
            None => {
                self.record(path, format!("\"{default}\""), default.into(), false);
                Ok(default.to_string())
            }
            Some(toml::Value::String(s)) if allowed.contains(&s.as_str()) => {
                self.record(path, format!("\"{s}\""), s.clone(), true);
                Ok(s)
            }
            Some(other) => Err(Error::Config(format!(
                "{path}: expected one of {allowed:?}, got {other}"
            ))),
        }
    }

    fn quantity_list(&mut self, path: &str, defaults: &[f64], dim: Dim) -> Result<Vec<f64>> {
        let render = |vals: &[f64]| {
            let inner: Vec<String> = vals
                .iter()
                .map(|v| format!("\"{} {}\"", v, base_unit(dim)))
                .collect();
            format!("[{}]", inner.join(", "))
        };
        match self.lookup(path) {
            None => {
                self.record(path, render(defaults), render(defaults), false);
                Ok(defaults.to_vec())
            }
            Some(toml::Value::Array(items)) => {
                let mut vals = Vec::with_capacity(items.len());
                for item in &items {
                    match item {
                        toml::Value::String(s) => vals.push(parse_quantity(s, dim, path)?),
                        other => {
                            return Err(Error::Config(format!(
                                "{path}: list items must be quoted quantities, got {other}"
                            )))
                        }
                    }
                }
                self.record(path, render(&vals), render(&vals), true);
                Ok(vals)
            }
            Some(other) => Err(Error::Config(format!(
                "{path}: expected a list of quantities, got {other}"
            ))),
        }
    }

    /// Every key in the file that no reader consumed is an error.
    fn reject_unknown(&self) -> Result<()> {
        let mut unknown = Vec::new();
        for (section, v) in &self.table {
            match v.as_table() {
                Some(t) => {
                    for key in t.keys() {
                        let path = format!("{section}.{key}");
                        if !self.consumed.contains(&path) {
                            unknown.push(path);
                        }
                    }
                }
                None => unknown.push(section.clone()),
            }
        }
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "unknown configuration keys: {}",
                unknown.join(", ")
            )))
        }
    }
}

/// Render a float as a TOML literal that parses back to the same f64.
fn fmt_toml_float(v: f64) -> String {
    let s = format!("{v}");
    // a bare "1" would re-parse as an integer, which is fine for our
    // readers, but keep floats recognizably floats
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

#[derive(Debug, Clone)]
pub struct PulseSettings {
    /// Gaussian FWHM-parameter sigma, ps.
    pub sigma: f64,
    /// Two-photon detuning delta_b, rad/ps.
    pub delta_b: f64,
    /// Peak amplitude for the trajectory subcommand; None = use the
    /// calibrated pi-pulse amplitude.
    pub amplitude: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CalibrationSettings {
    /// Explicit pi/2 amplitude; None = calibrate.
    pub omega_half: Option<f64>,
    /// Amplitude search window for the pi calibration, rad/ps.
    pub search_min: f64,
    pub search_max: f64,
}

#[derive(Debug, Clone)]
pub struct NoiseSettings {
    /// Static detuning spread, rad/ps.
    pub sigma_inh: f64,
    /// If set, derive sigma_inh from this Gaussian Ramsey decay time
    /// instead (ps).
    pub target_t2star: Option<f64>,
    pub quadrature_order: usize,
}

#[derive(Debug, Clone)]
pub struct RabiSettings {
    pub amplitude_min: f64,
    pub amplitude_max: f64,
    pub points: usize,
    /// Two-photon detunings, rad/ps.
    pub detunings: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ScanSettings {
    pub tau_min: f64,
    pub tau_max: f64,
    pub points: usize,
    pub phase_points: usize,
}

#[derive(Debug, Clone)]
pub struct TrajectorySettings {
    /// End of the integration window, ps (pulse is centered at 0).
    pub t_end: f64,
    /// Output sampling step, ps.
    pub sample_dt: f64,
}

#[derive(Debug, Clone)]
pub struct EfficiencySettings {
    pub singles_xx: f64,
    pub singles_x: f64,
    pub coincidences: f64,
    pub rep_rate: f64,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: PhysicalParams,
    pub solver: SolverConfig,
    pub pulse: PulseSettings,
    pub calibration: CalibrationSettings,
    pub noise: NoiseSettings,
    pub observable: Observable,
    pub rabi: RabiSettings,
    pub ramsey: ScanSettings,
    pub echo: ScanSettings,
    pub trajectory: TrajectorySettings,
    pub efficiency: EfficiencySettings,
    pub entries: Vec<ResolvedEntry>,
}

impl RunConfig {
    /// Load from an optional file plus `key=value` overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
        let table: toml::Table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                text.parse()
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        Self::from_table(table, overrides)
    }

    pub fn from_table(mut table: toml::Table, overrides: &[String]) -> Result<RunConfig> {
        let mut overridden = BTreeSet::new();
        for ov in overrides {
            let (path, raw) = ov.split_once('=').ok_or_else(|| {
                Error::Config(format!("override {ov:?} is not of the form key=value"))
            })?;
            let path = path.trim();
            let (section, key) = path.split_once('.').ok_or_else(|| {
                Error::Config(format!("override key {path:?} must be section.key"))
            })?;
            // parse the value as a TOML literal; fall back to a string
            // so `pulse.detuning=22 GHz` works without inner quotes
            let value: toml::Value = format!("v = {raw}")
                .parse::<toml::Table>()
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
            let entry = table
                .entry(section.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            match entry.as_table_mut() {
                Some(t) => {
                    t.insert(key.to_string(), value);
                }
                None => {
                    return Err(Error::Config(format!(
                        "override {path:?}: {section} is not a table"
                    )))
                }
            }
            overridden.insert(path.to_string());
        }

        let mut r = Reader {
            table,
            overridden,
            consumed: BTreeSet::new(),
            entries: Vec::new(),
        };

        let defaults = PhysicalParams::default();
        let params = PhysicalParams {
            gamma_b: r.quantity("physics.biexciton_decay", defaults.gamma_b, Dim::Rate)?,
            gamma_x: r.quantity("physics.exciton_decay", defaults.gamma_x, Dim::Rate)?,
            gamma_db: r.quantity(
                "physics.biexciton_dephasing",
                defaults.gamma_db,
                Dim::Rate,
            )?,
            gamma_dx: r.quantity("physics.exciton_dephasing", defaults.gamma_dx, Dim::Rate)?,
            delta_e: r.quantity(
                "physics.exciton_detuning",
                defaults.delta_e,
                Dim::AngularFreq,
            )?,
            k: r.number("physics.incoherent_k", defaults.k)?,
            omega_ref: r.quantity("physics.omega_ref", defaults.omega_ref, Dim::AngularFreq)?,
        };

        let pulse = PulseSettings {
            sigma: r.quantity("pulse.sigma", 4.0, Dim::Time)?,
            delta_b: r.quantity("pulse.detuning", 0.0, Dim::AngularFreq)?,
            amplitude: r.quantity_or_auto("pulse.amplitude", Dim::AngularFreq)?,
        };

        let solver_defaults = SolverConfig::default();
        let method_name = r.choice("solver.method", "rk45", &["rk45", "rk4"])?;
        let rk4_step = r.quantity("solver.rk4_step", 1e-3, Dim::Time)?;
        let solver = SolverConfig {
            rtol: r.number("solver.rtol", solver_defaults.rtol)?,
            atol: r.number("solver.atol", solver_defaults.atol)?,
            max_step_pulse: r.quantity_or_auto("solver.max_step_pulse", Dim::Time)?,
            max_step_dark: r.quantity(
                "solver.max_step_dark",
                solver_defaults.max_step_dark,
                Dim::Time,
            )?,
            method: if method_name == "rk45" {
                Method::Rk45Adaptive
            } else {
                Method::Rk4Fixed { step: rk4_step }
            },
            record_stride: r.integer("solver.record_stride", 1)? as usize,
        };

        let calibration = CalibrationSettings {
            omega_half: r.quantity_or_auto("calibration.omega_half", Dim::AngularFreq)?,
            search_min: r.quantity("calibration.search_min", 0.5, Dim::AngularFreq)?,
            search_max: r.quantity("calibration.search_max", 3.0, Dim::AngularFreq)?,
        };

        let target = r.quantity_or_auto("noise.target_t2star", Dim::Time)?;
        let noise = NoiseSettings {
            sigma_inh: r.quantity("noise.sigma_inh", 0.0, Dim::AngularFreq)?,
            target_t2star: target,
            quadrature_order: r.integer("noise.quadrature_order", 21)? as usize,
        };

        let observable = match r
            .choice("experiment.observable", "emission", &["emission", "final_population"])?
            .as_str()
        {
            "emission" => Observable::Emission,
            _ => Observable::FinalBiexcitonPopulation,
        };

        let two_pi_ghz = 2.0 * std::f64::consts::PI * 1e-3;
        let rabi = RabiSettings {
            amplitude_min: r.quantity("rabi.amplitude_min", 0.05, Dim::AngularFreq)?,
            // out to the third Rabi maximum of the zero-detuning curve
            amplitude_max: r.quantity("rabi.amplitude_max", 7.0, Dim::AngularFreq)?,
            points: r.integer("rabi.points", 60)? as usize,
            detunings: r.quantity_list(
                "rabi.detunings",
                &[
                    0.0,
                    22.0 * two_pi_ghz,
                    35.0 * two_pi_ghz,
                    57.0 * two_pi_ghz,
                ],
                Dim::AngularFreq,
            )?,
        };

        let ramsey = ScanSettings {
            tau_min: r.quantity("ramsey.tau_min", 8.0, Dim::Time)?,
            tau_max: r.quantity("ramsey.tau_max", 480.0, Dim::Time)?,
            points: r.integer("ramsey.points", 25)? as usize,
            phase_points: r.integer("ramsey.phase_points", 8)? as usize,
        };
        let echo = ScanSettings {
            tau_min: r.quantity("echo.tau_min", 48.0, Dim::Time)?,
            tau_max: r.quantity("echo.tau_max", 480.0, Dim::Time)?,
            points: r.integer("echo.points", 19)? as usize,
            phase_points: r.integer("echo.phase_points", 8)? as usize,
        };

        let trajectory = TrajectorySettings {
            t_end: r.quantity("trajectory.t_end", 2000.0, Dim::Time)?,
            sample_dt: r.quantity("trajectory.sample_dt", 1.0, Dim::Time)?,
        };

        let efficiency = EfficiencySettings {
            singles_xx: r.quantity("efficiency.singles_xx", 24.0e3, Dim::Hertz)?,
            singles_x: r.quantity("efficiency.singles_x", 23.0e3, Dim::Hertz)?,
            coincidences: r.quantity("efficiency.coincidences", 62.0, Dim::Hertz)?,
            rep_rate: r.quantity("efficiency.rep_rate", 76.0e6, Dim::Hertz)?,
        };

        r.reject_unknown()?;

        let config = RunConfig {
            params,
            solver,
            pulse,
            calibration,
            noise,
            observable,
            rabi,
            ramsey,
            echo,
            trajectory,
            efficiency,
            entries: r.entries,
        };
        config.validate()?;
        Ok(config)
    }

    /// Check every invariant; the message names the offending key.
    pub fn validate(&self) -> Result<()> {
        self.params
            .validate()
            .map_err(|e| Error::Config(format!("physics: {e}")))?;
        self.solver
            .validate()
            .map_err(|e| Error::Config(format!("solver: {e}")))?;
        let check = |ok: bool, msg: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(msg.to_string()))
            }
        };
        check(self.pulse.sigma > 0.0, "pulse.sigma must be > 0")?;
        check(
            self.pulse.amplitude.map_or(true, |a| a >= 0.0),
            "pulse.amplitude must be >= 0",
        )?;
        check(
            self.calibration.search_min >= 0.0
                && self.calibration.search_max > self.calibration.search_min,
            "calibration search window must satisfy 0 <= search_min < search_max",
        )?;
        check(self.noise.sigma_inh >= 0.0, "noise.sigma_inh must be >= 0")?;
        check(
            self.noise.target_t2star.map_or(true, |t| t > 0.0),
            "noise.target_t2star must be > 0",
        )?;
        check(
            self.noise.quadrature_order >= 3 && self.noise.quadrature_order % 2 == 1,
            "noise.quadrature_order must be odd and >= 3",
        )?;
        check(
            self.rabi.amplitude_min >= 0.0 && self.rabi.amplitude_max > self.rabi.amplitude_min,
            "rabi amplitude grid must satisfy 0 <= amplitude_min < amplitude_max",
        )?;
        check(self.rabi.points >= 2, "rabi.points must be >= 2")?;
        check(
            !self.rabi.detunings.is_empty(),
            "rabi.detunings must be non-empty",
        )?;
        for (name, scan) in [("ramsey", &self.ramsey), ("echo", &self.echo)] {
            check(
                scan.tau_min > 0.0 && scan.tau_max > scan.tau_min,
                &format!("{name} delay grid must satisfy 0 < tau_min < tau_max"),
            )?;
            check(scan.points >= 2, &format!("{name}.points must be >= 2"))?;
            check(
                scan.phase_points >= 8,
                &format!("{name}.phase_points must be >= 8"),
            )?;
        }
        check(
            self.trajectory.t_end > 0.0,
            "trajectory.t_end must be > 0",
        )?;
        check(
            self.trajectory.sample_dt > 0.0,
            "trajectory.sample_dt must be > 0",
        )?;
        check(
            self.efficiency.singles_xx > 0.0
                && self.efficiency.singles_x > 0.0
                && self.efficiency.coincidences > 0.0
                && self.efficiency.rep_rate > 0.0,
            "efficiency rates must all be > 0",
        )?;
        Ok(())
    }

    /// Resolved configuration as a TOML document; re-feeding it as a
    /// config file reproduces the same run byte-for-byte.
    pub fn resolved_toml(&self) -> String {
        let mut out = String::new();
        let mut section = "";
        for e in &self.entries {
            let (sec, key) = e.key.split_once('.').unwrap_or(("", e.key.as_str()));
            if sec != section {
                if !out.is_empty() {
                    out.push('\n');
                }
                let _ = writeln!(out, "[{sec}]");
                section = sec;
            }
            let _ = writeln!(out, "{key} = {}", e.value_toml);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn empty_config_is_all_paper_defaults() {
        let cfg = RunConfig::from_table(toml::Table::new(), &[]).unwrap();
        assert_abs_diff_eq!(cfg.params.gamma_b, 1.0 / 405.0, epsilon = 1e-15);
        assert_abs_diff_eq!(cfg.params.gamma_x, 1.0 / 771.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            cfg.params.delta_e,
            2.0 * std::f64::consts::PI * 0.335,
            epsilon = 1e-12
        );
        assert!(cfg.entries.iter().all(|e| e.provenance == Provenance::Default));
        assert_eq!(cfg.noise.sigma_inh, 0.0);
        assert_eq!(cfg.rabi.detunings.len(), 4);
    }

    #[test]
    fn ghz_gets_the_two_pi_factor() {
        let t: toml::Table = r#"
[physics]
exciton_detuning = "335 GHz"
"#
        .parse()
        .unwrap();
        let cfg = RunConfig::from_table(t, &[]).unwrap();
        assert_abs_diff_eq!(
            cfg.params.delta_e,
            2.0 * std::f64::consts::PI * 0.335,
            epsilon = 1e-12
        );
        let entry = cfg
            .entries
            .iter()
            .find(|e| e.key == "physics.exciton_detuning")
            .unwrap();
        assert_eq!(entry.provenance, Provenance::File);
        assert!(entry.resolved.ends_with("rad/ps"));
    }

    #[test]
    fn lifetimes_invert_to_rates() {
        let t: toml::Table = r#"
[physics]
biexciton_decay = "500 ps"
exciton_decay = "0.002 1/ps"
"#
        .parse()
        .unwrap();
        let cfg = RunConfig::from_table(t, &[]).unwrap();
        assert_abs_diff_eq!(cfg.params.gamma_b, 1.0 / 500.0, epsilon = 1e-15);
        assert_abs_diff_eq!(cfg.params.gamma_x, 0.002, epsilon = 1e-18);
    }

    #[test]
    fn unknown_keys_are_listed() {
        let t: toml::Table = r#"
[physics]
exciton_detuning = "335 GHz"
lifetime_typo = "405 ps"

[solvr]
rtol = 1e-8
"#
        .parse()
        .unwrap();
        let err = RunConfig::from_table(t, &[]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("physics.lifetime_typo"), "{msg}");
        assert!(msg.contains("solvr.rtol"), "{msg}");
    }

    #[test]
    fn negative_sigma_names_the_invariant() {
        let t: toml::Table = r#"
[pulse]
sigma = "-1 ps"
"#
        .parse()
        .unwrap();
        let err = RunConfig::from_table(t, &[]).unwrap_err();
        assert!(err.to_string().contains("pulse.sigma"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn overrides_take_precedence_and_are_marked() {
        let t: toml::Table = r#"
[physics]
incoherent_k = 0.3
"#
        .parse()
        .unwrap();
        let cfg = RunConfig::from_table(
            t,
            &[
                "physics.incoherent_k=0.1".to_string(),
                "pulse.detuning=22 GHz".to_string(),
            ],
        )
        .unwrap();
        assert_abs_diff_eq!(cfg.params.k, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(
            cfg.pulse.delta_b,
            2.0 * std::f64::consts::PI * 0.022,
            epsilon = 1e-12
        );
        let k = cfg
            .entries
            .iter()
            .find(|e| e.key == "physics.incoherent_k")
            .unwrap();
        assert_eq!(k.provenance, Provenance::Override);
    }

    #[test]
    fn resolved_toml_round_trips_to_identical_values() {
        let t: toml::Table = r#"
[physics]
exciton_detuning = "335 GHz"
biexciton_decay = "405 ps"

[noise]
sigma_inh = "0.71 GHz"
"#
        .parse()
        .unwrap();
        let cfg = RunConfig::from_table(t, &[]).unwrap();
        let resolved: toml::Table = cfg.resolved_toml().parse().unwrap();
        let cfg2 = RunConfig::from_table(resolved, &[]).unwrap();
        assert_eq!(cfg.params.delta_e.to_bits(), cfg2.params.delta_e.to_bits());
        assert_eq!(cfg.params.gamma_b.to_bits(), cfg2.params.gamma_b.to_bits());
        assert_eq!(cfg.noise.sigma_inh.to_bits(), cfg2.noise.sigma_inh.to_bits());
        assert_eq!(cfg.resolved_toml(), cfg2.resolved_toml());
    }

    #[test]
    fn bad_unit_is_a_config_error() {
        let t: toml::Table = r#"
[physics]
exciton_detuning = "335 parsec"
"#
        .parse()
        .unwrap();
        let err = RunConfig::from_table(t, &[]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn rk4_method_selection() {
        let t: toml::Table = r#"
[solver]
method = "rk4"
rk4_step = "0.002 ps"
"#
        .parse()
        .unwrap();
        let cfg = RunConfig::from_table(t, &[]).unwrap();
        match cfg.solver.method {
            Method::Rk4Fixed { step } => assert_abs_diff_eq!(step, 0.002, epsilon = 1e-15),
            _ => panic!("expected fixed-step method"),
        }
    }
}
