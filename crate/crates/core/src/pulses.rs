//! Pulse-sequence construction: single calibration pulses, Ramsey
//! pairs, echo triples, and pulse-area calibration.
//!
//! The fine phase of a sequence is a carrier phase on one pulse; the
//! coarse delay is pulse-center spacing. All pulses in a sequence share
//! one sigma and one two-photon detuning (single-laser origin).

use crate::error::{Error, Result};
use crate::model::{Drive, PhysicalParams};
use crate::qcore::{DensityMatrix, Level};
use crate::solver::{emission_probability_extrapolated, evolve, SolverConfig};

/// Pulse duration used throughout the experiments, ps.
pub const DEFAULT_PULSE_SIGMA: f64 = 4.0;

/// Ordered set of Gaussian drives sharing sigma and delta_b.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    drives: Vec<Drive>,
    delta_b: f64,
}

impl PulseSequence {
    fn from_drives(mut drives: Vec<Drive>, delta_b: f64) -> PulseSequence {
        drives.sort_by(|a, b| a.t_center.partial_cmp(&b.t_center).unwrap());
        PulseSequence { drives, delta_b }
    }

    pub fn drives(&self) -> &[Drive] {
        &self.drives
    }

    pub fn delta_b(&self) -> f64 {
        self.delta_b
    }

    pub fn sigma(&self) -> f64 {
        self.drives.first().map_or(DEFAULT_PULSE_SIGMA, |d| d.sigma)
    }

    pub fn first_center(&self) -> f64 {
        self.drives.first().map_or(0.0, |d| d.t_center)
    }

    pub fn last_center(&self) -> f64 {
        self.drives.last().map_or(0.0, |d| d.t_center)
    }

    /// One pulse.
    pub fn single(omega_peak: f64, t_center: f64, phase: f64, delta_b: f64) -> Result<PulseSequence> {
        let d = Drive::new(omega_peak, DEFAULT_PULSE_SIGMA, t_center, phase, delta_b)?;
        Ok(PulseSequence::from_drives(vec![d], delta_b))
    }

    /// Two equal pulses at t = 0 and t = tau; the second carries the
    /// fine phase. Pulses must be separated (tau > 3 sigma); the
    /// laser-interference regime goes through
    /// [`PulseSequence::ramsey_pair_overlapping`].
    pub fn ramsey_pair(
        omega_half: f64,
        tau: f64,
        fine_phase: f64,
        delta_b: f64,
    ) -> Result<PulseSequence> {
        if tau <= 3.0 * DEFAULT_PULSE_SIGMA {
            return Err(Error::InvalidArgument(format!(
                "ramsey pair requires tau > 3 sigma = {} ps, got {tau}",
                3.0 * DEFAULT_PULSE_SIGMA
            )));
        }
        Self::ramsey_pair_overlapping(omega_half, tau, fine_phase, delta_b)
    }

    /// Ramsey pair without the separation check, for the direct
    /// laser-interference regime at short delays.
    pub fn ramsey_pair_overlapping(
        omega_half: f64,
        tau: f64,
        fine_phase: f64,
        delta_b: f64,
    ) -> Result<PulseSequence> {
        if !(tau >= 0.0) {
            return Err(Error::InvalidArgument(format!("tau must be >= 0, got {tau}")));
        }
        let d1 = Drive::new(omega_half, DEFAULT_PULSE_SIGMA, 0.0, 0.0, delta_b)?;
        let d2 = Drive::new(omega_half, DEFAULT_PULSE_SIGMA, tau, fine_phase, delta_b)?;
        Ok(PulseSequence::from_drives(vec![d1, d2], delta_b))
    }

    /// pi/2 - pi - pi/2 sequence at t = 0, tau/2, tau. The middle pulse
    /// has twice the intensity, i.e. sqrt(2) times the amplitude; the
    /// last pulse carries the fine phase.
    pub fn echo_triple(
        omega_half: f64,
        tau: f64,
        fine_phase: f64,
        delta_b: f64,
    ) -> Result<PulseSequence> {
        if tau / 2.0 <= 3.0 * DEFAULT_PULSE_SIGMA {
            return Err(Error::InvalidArgument(format!(
                "echo triple requires tau/2 > 3 sigma = {} ps, got tau = {tau}",
                3.0 * DEFAULT_PULSE_SIGMA
            )));
        }
        let d1 = Drive::new(omega_half, DEFAULT_PULSE_SIGMA, 0.0, 0.0, delta_b)?;
        let d2 = Drive::new(
            omega_half * std::f64::consts::SQRT_2,
            DEFAULT_PULSE_SIGMA,
            tau / 2.0,
            0.0,
            delta_b,
        )?;
        let d3 = Drive::new(omega_half, DEFAULT_PULSE_SIGMA, tau, fine_phase, delta_b)?;
        Ok(PulseSequence::from_drives(vec![d1, d2, d3], delta_b))
    }

    /// Same sequence with a different pulse duration on every drive.
    pub fn with_sigma(mut self, sigma: f64) -> Result<PulseSequence> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidArgument(format!("sigma must be > 0, got {sigma}")));
        }
        for d in &mut self.drives {
            d.sigma = sigma;
        }
        Ok(self)
    }
}

/// Result of a pi-pulse amplitude calibration.
#[derive(Debug, Clone, Copy)]
pub struct PiCalibration {
    /// Amplitude of the first biexciton-emission maximum, rad/ps.
    pub omega_pi: f64,
    /// Amplitude where emission first reaches half that maximum, rad/ps.
    pub omega_half: f64,
    /// Emission probability at the maximum.
    pub emission_max: f64,
}

/// Single-pulse biexciton yield used as the calibration objective.
///
/// With both radiative rates positive this is the emission probability
/// P_xx; in decay-free parameter sets it falls back to the final
/// biexciton population, which coincides with P_xx in the limit of a
/// short pulse.
pub fn single_pulse_yield(
    omega_peak: f64,
    sigma: f64,
    delta_b: f64,
    params: &PhysicalParams,
    config: &SolverConfig,
) -> Result<f64> {
    let seq = PulseSequence::single(omega_peak, 0.0, 0.0, delta_b)?.with_sigma(sigma)?;
    let span = 6.0 * seq.sigma();
    let traj = evolve(
        &DensityMatrix::pure(Level::Ground),
        -span,
        span,
        seq.drives(),
        params,
        config,
    )?;
    if params.gamma_b > 0.0 && params.gamma_x > 0.0 {
        Ok(emission_probability_extrapolated(&traj, params)?.0)
    } else {
        Ok(traj.final_state().population(Level::Biexciton))
    }
}

/// Locate the first Rabi maximum by golden-section search (relative
/// tolerance 1e-4) and the half-maximum amplitude by bisection.
///
/// The search range must bracket the first interior emission maximum.
pub fn calibrate_pi(
    params: &PhysicalParams,
    sigma: f64,
    delta_b: f64,
    search_range: (f64, f64),
    config: &SolverConfig,
) -> Result<PiCalibration> {
    let (lo, hi) = search_range;
    if !(lo >= 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!(
            "bad search range [{lo}, {hi}]"
        )));
    }
    let f = |omega: f64| single_pulse_yield(omega, sigma, delta_b, params, config);

    // golden-section maximization
    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut a = lo;
    let mut b = hi;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let tol = 1e-4 * hi.max(1.0);
    while (b - a) > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let omega_pi = 0.5 * (a + b);
    let emission_max = f(omega_pi)?;

    let margin = 0.01 * (hi - lo);
    if omega_pi - lo < margin || hi - omega_pi < margin {
        return Err(Error::Calibration(format!(
            "no interior emission maximum in [{lo}, {hi}] (argmax {omega_pi})"
        )));
    }

    // half-maximum amplitude on the rising edge
    let target = emission_max / 2.0;
    let mut a = lo.max(1e-6);
    let mut b = omega_pi;
    let fa = f(a)?;
    if fa > target {
        return Err(Error::Calibration(
            "lower search bound already above half maximum".into(),
        ));
    }
    for _ in 0..60 {
        let mid = 0.5 * (a + b);
        if f(mid)? < target {
            a = mid;
        } else {
            b = mid;
        }
    }
    let omega_half = 0.5 * (a + b);

    Ok(PiCalibration {
        omega_pi,
        omega_half,
        emission_max,
    })
}
