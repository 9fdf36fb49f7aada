//! Time-dependent Hamiltonian and the six Lindblad channels of the
//! driven cascade, assembled into the right-hand side of the master
//! equation d(rho)/dt = -i[H, rho] + sum_i L_i(rho).
//!
//! Units: times in ps, angular frequencies and rates in rad/ps and 1/ps.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qcore::{
    commutator, dissipator_precomputed, projector, DensityMatrix, Level, Operator3,
};

pub const TWO_PI: f64 = std::f64::consts::TAU;

/// Measured rates and detunings of the cascade.
///
/// Defaults are the measured values: lifetimes 405 ps (biexciton) and
/// 771 ps (exciton), photon coherence times 211 ps and 119 ps, virtual
/// level detuning 2*pi*335 GHz, incoherent coupling k = 0.47.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Biexciton radiative decay rate, 1/ps.
    pub gamma_b: f64,
    /// Exciton radiative decay rate, 1/ps.
    pub gamma_x: f64,
    /// Pure dephasing rate of the biexciton transition, 1/ps.
    pub gamma_db: f64,
    /// Pure dephasing rate of the exciton transition, 1/ps.
    pub gamma_dx: f64,
    /// Virtual-level-to-exciton detuning, rad/ps.
    pub delta_e: f64,
    /// Relative strength of the incoherent two-photon channels.
    pub k: f64,
    /// Reference amplitude for the quartic incoherent rate, rad/ps.
    ///
    /// The quartic law (k |Omega| / omega_ref)^4 / 2 needs a reference
    /// amplitude to carry units; 2.0 rad/ps reproduces the damped
    /// Rabi-oscillation morphology with k = 0.47.
    pub omega_ref: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            gamma_b: 1.0 / 405.0,
            gamma_x: 1.0 / 771.0,
            gamma_db: 1.0 / 211.0,
            gamma_dx: 1.0 / 119.0,
            delta_e: TWO_PI * 0.335,
            k: 0.47,
            omega_ref: 2.0,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma_b", self.gamma_b),
            ("gamma_x", self.gamma_x),
            ("gamma_db", self.gamma_db),
            ("gamma_dx", self.gamma_dx),
            ("k", self.k),
        ] {
            if !(v >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be >= 0, got {v}"
                )));
            }
        }
        if !(self.delta_e > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "delta_e must be > 0, got {}",
                self.delta_e
            )));
        }
        if !(self.omega_ref > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "omega_ref must be > 0, got {}",
                self.omega_ref
            )));
        }
        Ok(())
    }
}

/// One Gaussian drive pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drive {
    /// Maximum Rabi frequency Omega, rad/ps.
    pub omega_peak: f64,
    /// Pulse duration sigma (intensity FWHM), ps.
    pub sigma: f64,
    /// Pulse center, ps.
    pub t_center: f64,
    /// Carrier phase, rad.
    pub phase: f64,
    /// Two-photon detuning Delta_b, rad/ps; shared by all pulses from
    /// one laser.
    pub delta_b: f64,
}

impl Drive {
    pub fn new(omega_peak: f64, sigma: f64, t_center: f64, phase: f64, delta_b: f64) -> Result<Drive> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidArgument(format!("sigma must be > 0, got {sigma}")));
        }
        if !(omega_peak >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "omega_peak must be >= 0, got {omega_peak}"
            )));
        }
        Ok(Drive {
            omega_peak,
            sigma,
            t_center,
            phase,
            delta_b,
        })
    }
}

/// Gaussian envelope Omega * exp(-2 ln2 (t - t_center)^2 / sigma^2).
pub fn envelope(t: f64, drive: &Drive) -> f64 {
    let u = (t - drive.t_center) / drive.sigma;
    drive.omega_peak * (-2.0 * std::f64::consts::LN_2 * u * u).exp()
}

/// Summed complex drive amplitude Omega(t) = sum_j envelope_j(t) e^{i phi_j}.
pub fn complex_amplitude(t: f64, drives: &[Drive]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for d in drives {
        acc += Complex64::from_polar(envelope(t, d), d.phase);
    }
    acc
}

fn shared_delta_b(drives: &[Drive]) -> Result<f64> {
    let Some(first) = drives.first() else {
        return Ok(0.0);
    };
    for d in drives {
        if d.delta_b != first.delta_b {
            return Err(Error::InvalidArgument(format!(
                "all drives must share one delta_b: {} vs {}",
                first.delta_b, d.delta_b
            )));
        }
    }
    Ok(first.delta_b)
}

/// H(t)/hbar in the rotating frame, rad/ps.
///
/// Diagonal (0, delta_e - delta_b, -2 delta_b); the complex drive
/// amplitude enters both off-diagonals as Omega(t)/2.
pub fn hamiltonian(t: f64, drives: &[Drive], params: &PhysicalParams) -> Result<Operator3> {
    let delta_b = shared_delta_b(drives)?;
    Ok(hamiltonian_unchecked(t, drives, params, delta_b))
}

fn hamiltonian_unchecked(
    t: f64,
    drives: &[Drive],
    params: &PhysicalParams,
    delta_b: f64,
) -> Operator3 {
    let omega = complex_amplitude(t, drives);
    let half = omega * 0.5;
    let mut h = Operator3::ZERO;
    h.m[0][1] = half;
    h.m[1][0] = half.conj();
    h.m[1][2] = half;
    h.m[2][1] = half.conj();
    h.m[1][1] = Complex64::new(params.delta_e - delta_b, 0.0);
    h.m[2][2] = Complex64::new(-2.0 * delta_b, 0.0);
    h
}

/// Rate of the incoherent two-photon channels, 1/ps:
/// (k |Omega(t)| / omega_ref)^4 / 2.
pub fn incoherent_rate(t: f64, drives: &[Drive], params: &PhysicalParams) -> f64 {
    let omega = complex_amplitude(t, drives).norm();
    (params.k * omega / params.omega_ref).powi(4) / 2.0
}

struct Channel {
    a: Operator3,
    a_dag: Operator3,
    a_dag_a: Operator3,
    rate: f64,
}

impl Channel {
    fn new(a: Operator3, rate: f64) -> Channel {
        let a_dag = a.adjoint();
        let a_dag_a = a_dag.matmul(&a);
        Channel {
            a,
            a_dag,
            a_dag_a,
            rate,
        }
    }

    fn apply(&self, rho: &Operator3, rate: f64) -> Operator3 {
        dissipator_precomputed(&self.a, &self.a_dag, &self.a_dag_a, rate, rho)
    }
}

/// The master equation with channel operators precomputed.
///
/// Channels, in the standard form D[A] with nonnegative rates:
/// L1 biexciton decay A = |x><b| at gamma_b, L2 exciton decay
/// A = |g><x| at gamma_x, L3 pure dephasing A = sigma_bb - sigma_xx at
/// gamma_db, L4 pure dephasing A = sigma_xx - sigma_gg at gamma_dx,
/// L5 incoherent pumping A = |b><x| and L6 A = |x><g|, both at the
/// drive-dependent quartic rate.
pub struct MasterEq<'a> {
    drives: &'a [Drive],
    params: &'a PhysicalParams,
    delta_b: f64,
    static_channels: [Channel; 4],
    pump_bx: Channel,
    pump_xg: Channel,
}

impl<'a> MasterEq<'a> {
    pub fn new(drives: &'a [Drive], params: &'a PhysicalParams) -> Result<MasterEq<'a>> {
        params.validate()?;
        let delta_b = shared_delta_b(drives)?;
        let dephase_b = projector(Level::Biexciton, Level::Biexciton)
            - projector(Level::Exciton, Level::Exciton);
        let dephase_x =
            projector(Level::Exciton, Level::Exciton) - projector(Level::Ground, Level::Ground);
        Ok(MasterEq {
            drives,
            params,
            delta_b,
            static_channels: [
                Channel::new(projector(Level::Exciton, Level::Biexciton), params.gamma_b),
                Channel::new(projector(Level::Ground, Level::Exciton), params.gamma_x),
                Channel::new(dephase_b, params.gamma_db),
                Channel::new(dephase_x, params.gamma_dx),
            ],
            pump_bx: Channel::new(projector(Level::Biexciton, Level::Exciton), 0.0),
            pump_xg: Channel::new(projector(Level::Exciton, Level::Ground), 0.0),
        })
    }

    pub fn drives(&self) -> &[Drive] {
        self.drives
    }

    pub fn params(&self) -> &PhysicalParams {
        self.params
    }

    /// d(rho)/dt for an arbitrary (not necessarily unit-trace) operator;
    /// the integrator evaluates this at intermediate stage values.
    pub fn rhs(&self, t: f64, rho: &Operator3) -> Operator3 {
        let h = hamiltonian_unchecked(t, self.drives, self.params, self.delta_b);
        let mut d = commutator(&h, rho).scale_complex(Complex64::new(0.0, -1.0));
        for ch in &self.static_channels {
            if ch.rate > 0.0 {
                d.axpy(1.0, &ch.apply(rho, ch.rate));
            }
        }
        if self.params.k > 0.0 {
            let rate = incoherent_rate(t, self.drives, self.params);
            if rate > 0.0 {
                d.axpy(1.0, &self.pump_bx.apply(rho, rate));
                d.axpy(1.0, &self.pump_xg.apply(rho, rate));
            }
        }
        d
    }
}

/// d(rho)/dt of the master equation at time t, 1/ps.
pub fn master_rhs(
    t: f64,
    rho: &DensityMatrix,
    drives: &[Drive],
    params: &PhysicalParams,
) -> Result<Operator3> {
    let eq = MasterEq::new(drives, params)?;
    Ok(eq.rhs(t, rho.as_operator()))
}
