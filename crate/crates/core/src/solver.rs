//! Master-equation integration over a pulse schedule with controlled
//! local error, invariant tracking, and time-integrated emission
//! probabilities.
//!
//! The adaptive method is an embedded Dormand-Prince 5(4) pair with PI
//! step control; a fixed-step classical RK4 is kept as an independent
//! oracle. Emission integrals d/dt = gamma P_level ride along in the
//! integration state so they carry the same order as the state itself.

use crate::error::{Error, Result};
use crate::model::{Drive, MasterEq, PhysicalParams};
use crate::qcore::{DensityMatrix, Level, Operator3};

/// Laser repetition period, ps (76 MHz Ti:Sapphire).
pub const REPETITION_PERIOD: f64 = 1.0e6 / 76.0;

/// Required adaptive step below this floor is treated as stiffness.
const STEP_FLOOR: f64 = 1e-6;

/// Hard invariant limits: 10x the evolution tolerances.
const TRACE_LIMIT: f64 = 1e-7;
const HERM_LIMIT: f64 = 1e-8;
const EIG_LIMIT: f64 = -1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Embedded Dormand-Prince 4(5) with PI step control.
    Rk45Adaptive,
    /// Classical fixed-step RK4; the brute-force oracle.
    Rk4Fixed { step: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Step cap inside a pulse window; defaults to sigma/8 of the
    /// narrowest drive when None.
    pub max_step_pulse: Option<f64>,
    /// Step cap in the dark, ps.
    pub max_step_dark: f64,
    pub method: Method,
    /// Record every n-th accepted step (the final step is always kept).
    pub record_stride: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rtol: 1e-8,
            atol: 1e-10,
            max_step_pulse: None,
            max_step_dark: 10.0,
            method: Method::Rk45Adaptive,
            record_stride: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "rtol and atol must be > 0, got {} / {}",
                self.rtol, self.atol
            )));
        }
        if !(self.max_step_dark > 0.0) || self.max_step_pulse.is_some_and(|s| !(s > 0.0)) {
            return Err(Error::InvalidArgument("max_step must be > 0".into()));
        }
        if let Method::Rk4Fixed { step } = self.method {
            if !(step > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "fixed RK4 step must be > 0, got {step}"
                )));
            }
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidArgument("record_stride must be >= 1".into()));
        }
        Ok(())
    }
}

/// Integration state: the density operator plus the running emission
/// integrals int gamma_b P_b dt and int gamma_x P_x dt.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SolverState {
    pub rho: Operator3,
    pub em_b: f64,
    pub em_x: f64,
}

impl SolverState {
    fn zero() -> SolverState {
        SolverState {
            rho: Operator3::ZERO,
            em_b: 0.0,
            em_x: 0.0,
        }
    }

    fn axpy(&mut self, s: f64, other: &SolverState) {
        self.rho.axpy(s, &other.rho);
        self.em_b += s * other.em_b;
        self.em_x += s * other.em_x;
    }

    fn deriv(eq: &MasterEq, params: &PhysicalParams, t: f64, y: &SolverState) -> SolverState {
        SolverState {
            rho: eq.rhs(t, &y.rho),
            em_b: params.gamma_b * y.rho.m[2][2].re,
            em_x: params.gamma_x * y.rho.m[1][1].re,
        }
    }

    /// Weighted RMS error norm of (self - other) used by step control.
    fn error_norm(err: &SolverState, y0: &SolverState, y1: &SolverState, cfg: &SolverConfig) -> f64 {
        let mut acc = 0.0;
        let mut n = 0usize;
        let mut push = |e: f64, a: f64, b: f64| {
            let sc = cfg.atol + cfg.rtol * a.abs().max(b.abs());
            acc += (e / sc) * (e / sc);
            n += 1;
        };
        for i in 0..3 {
            for j in 0..3 {
                push(err.rho.m[i][j].re, y0.rho.m[i][j].re, y1.rho.m[i][j].re);
                push(err.rho.m[i][j].im, y0.rho.m[i][j].im, y1.rho.m[i][j].im);
            }
        }
        push(err.em_b, y0.em_b, y1.em_b);
        push(err.em_x, y0.em_x, y1.em_x);
        (acc / n as f64).sqrt()
    }
}

/// Invariant extrema observed along a trajectory.
#[derive(Debug, Clone, Copy)]
pub struct InvariantReport {
    pub max_trace_dev: f64,
    pub max_hermiticity_dev: f64,
    pub min_eigenvalue: f64,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

impl InvariantReport {
    /// Identity element for [`InvariantReport::merge`].
    pub fn empty() -> InvariantReport {
        InvariantReport {
            max_trace_dev: 0.0,
            max_hermiticity_dev: 0.0,
            min_eigenvalue: f64::INFINITY,
            steps_accepted: 0,
            steps_rejected: 0,
        }
    }

    fn new() -> InvariantReport {
        InvariantReport::empty()
    }

    /// Combine extrema across trajectories of a sweep.
    pub fn merge(&mut self, other: &InvariantReport) {
        self.max_trace_dev = self.max_trace_dev.max(other.max_trace_dev);
        self.max_hermiticity_dev = self.max_hermiticity_dev.max(other.max_hermiticity_dev);
        self.min_eigenvalue = self.min_eigenvalue.min(other.min_eigenvalue);
        self.steps_accepted += other.steps_accepted;
        self.steps_rejected += other.steps_rejected;
    }

    fn observe(&mut self, t: f64, rho: &Operator3) -> Result<()> {
        if !rho.is_finite() {
            return Err(Error::IntegrationFailure(format!(
                "non-finite state at t = {t} ps"
            )));
        }
        let tr = rho.trace();
        let trace_dev = (tr.re - 1.0).abs().max(tr.im.abs());
        let herm_dev = rho.hermiticity_deviation();
        let min_eig = rho.eigenvalues_hermitian()[0];
        self.max_trace_dev = self.max_trace_dev.max(trace_dev);
        self.max_hermiticity_dev = self.max_hermiticity_dev.max(herm_dev);
        self.min_eigenvalue = self.min_eigenvalue.min(min_eig);
        if trace_dev > TRACE_LIMIT || herm_dev > HERM_LIMIT || min_eig < EIG_LIMIT {
            return Err(Error::IntegrationFailure(format!(
                "invariant breach at t = {t} ps: trace dev {trace_dev:.3e}, \
                 hermiticity dev {herm_dev:.3e}, min eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(())
    }
}

/// Recorded master-equation trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<SolverState>,
    derivs: Vec<SolverState>,
    /// int gamma_b P_b dt over the integrated span.
    pub integrated_b: f64,
    /// int gamma_x P_x dt over the integrated span.
    pub integrated_x: f64,
    pub invariants: InvariantReport,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn sample(&self, i: usize) -> (f64, DensityMatrix) {
        (
            self.times[i],
            DensityMatrix::from_operator_unchecked(self.states[i].rho),
        )
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("non-empty trajectory")
    }

    pub fn final_state(&self) -> DensityMatrix {
        DensityMatrix::from_operator_unchecked(self.states.last().expect("non-empty").rho)
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, DensityMatrix)> + '_ {
        self.times
            .iter()
            .zip(&self.states)
            .map(|(&t, s)| (t, DensityMatrix::from_operator_unchecked(s.rho)))
    }

    /// Dense output by cubic Hermite interpolation between recorded steps.
    pub fn state_at(&self, t: f64) -> Result<DensityMatrix> {
        let (&t0, &t1) = (
            self.times.first().ok_or_else(|| {
                Error::InvalidArgument("empty trajectory".into())
            })?,
            self.times.last().unwrap(),
        );
        if t < t0 - 1e-12 || t > t1 + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "t = {t} outside trajectory span [{t0}, {t1}]"
            )));
        }
        let idx = match self
            .times
            .binary_search_by(|x| x.partial_cmp(&t).unwrap())
        {
            Ok(i) => return Ok(self.sample(i).1),
            Err(i) => i.clamp(1, self.times.len() - 1),
        };
        let (ta, tb) = (self.times[idx - 1], self.times[idx]);
        let h = tb - ta;
        let s = (t - ta) / h;
        let (ya, yb) = (&self.states[idx - 1], &self.states[idx]);
        let (fa, fb) = (&self.derivs[idx - 1], &self.derivs[idx]);
        // cubic Hermite basis
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let mut out = SolverState::zero();
        out.axpy(h00, ya);
        out.axpy(h10 * h, fa);
        out.axpy(h01, yb);
        out.axpy(h11 * h, fb);
        Ok(DensityMatrix::from_operator_unchecked(out.rho))
    }

    /// Uniformly spaced dense samples, dt apart, spanning the trajectory.
    pub fn uniform_samples(&self, dt: f64) -> Result<Vec<(f64, DensityMatrix)>> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be > 0, got {dt}")));
        }
        let t0 = self.times[0];
        let t1 = self.final_time();
        let n = ((t1 - t0) / dt).floor() as usize;
        let mut out = Vec::with_capacity(n + 2);
        for i in 0..=n {
            let t = t0 + i as f64 * dt;
            out.push((t, self.state_at(t)?));
        }
        if out.last().map(|(t, _)| *t < t1 - 1e-9).unwrap_or(true) {
            out.push((t1, self.final_state()));
        }
        Ok(out)
    }
}

/// [start, end] spans inside which a drive is considered active.
fn pulse_windows(drives: &[Drive]) -> Vec<(f64, f64)> {
    let mut w: Vec<(f64, f64)> = drives
        .iter()
        .filter(|d| d.omega_peak > 0.0)
        .map(|d| (d.t_center - 6.0 * d.sigma, d.t_center + 6.0 * d.sigma))
        .collect();
    w.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    w
}

fn max_step_at(t: f64, windows: &[(f64, f64)], pulse_cap: f64, dark_cap: f64) -> f64 {
    let mut cap = dark_cap;
    for &(start, end) in windows {
        if t >= start && t <= end {
            return pulse_cap;
        }
        if t < start {
            cap = cap.min(start - t);
            break;
        }
    }
    cap.max(STEP_FLOOR)
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate the master equation from t0 to t1.
pub fn evolve(
    rho0: &DensityMatrix,
    t0: f64,
    t1: f64,
    drives: &[Drive],
    params: &PhysicalParams,
    config: &SolverConfig,
) -> Result<Trajectory> {
    config.validate()?;
    if !(t1 > t0) {
        return Err(Error::InvalidArgument(format!(
            "require t1 > t0, got [{t0}, {t1}]"
        )));
    }
    let eq = MasterEq::new(drives, params)?;
    let windows = pulse_windows(drives);
    let pulse_cap = config.max_step_pulse.unwrap_or_else(|| {
        drives
            .iter()
            .map(|d| d.sigma / 8.0)
            .fold(f64::INFINITY, f64::min)
            .min(config.max_step_dark)
    });

    let y0 = SolverState {
        rho: *rho0.as_operator(),
        em_b: 0.0,
        em_x: 0.0,
    };

    match config.method {
        Method::Rk45Adaptive => {
            evolve_rk45(&eq, params, y0, t0, t1, &windows, pulse_cap, config)
        }
        Method::Rk4Fixed { step } => evolve_rk4(&eq, params, y0, t0, t1, step, config),
    }
}

#[allow(clippy::too_many_arguments)]
fn evolve_rk45(
    eq: &MasterEq,
    params: &PhysicalParams,
    y0: SolverState,
    t0: f64,
    t1: f64,
    windows: &[(f64, f64)],
    pulse_cap: f64,
    config: &SolverConfig,
) -> Result<Trajectory> {
    let mut invariants = InvariantReport::new();
    invariants.observe(t0, &y0.rho)?;

    let mut times = vec![t0];
    let mut states = vec![y0];
    let mut f0 = SolverState::deriv(eq, params, t0, &y0);
    let mut derivs = vec![f0];

    let mut t = t0;
    let mut y = y0;
    let mut h = max_step_at(t0, windows, pulse_cap, config.max_step_dark).min(0.01);
    let mut err_prev: f64 = 1.0;
    let mut since_record = 0usize;

    const SAFETY: f64 = 0.9;
    const ALPHA: f64 = 0.7 / 5.0;
    const BETA: f64 = 0.4 / 5.0;

    while t < t1 - 1e-12 {
        let cap = max_step_at(t, windows, pulse_cap, config.max_step_dark).min(t1 - t);
        let h_try = h.min(cap);

        // stages; k[0] is FSAL-carried from the previous step
        let mut k = [f0; 7];
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s - 1][j];
                if a != 0.0 {
                    ys.axpy(a * h_try, kj);
                }
            }
            k[s] = SolverState::deriv(eq, params, t + C[s] * h_try, &ys);
        }

        let mut y5 = y;
        let mut err = SolverState::zero();
        for s in 0..7 {
            if B5[s] != 0.0 {
                y5.axpy(B5[s] * h_try, &k[s]);
            }
            let d = B5[s] - B4[s];
            if d != 0.0 {
                err.axpy(d * h_try, &k[s]);
            }
        }

        let err_norm = SolverState::error_norm(&err, &y, &y5, config).max(1e-16);

        if err_norm <= 1.0 {
            t += h_try;
            y = y5;
            f0 = k[6]; // FSAL: k7 = f(t + h, y5)
            invariants.observe(t, &y.rho)?;
            invariants.steps_accepted += 1;
            since_record += 1;
            let last = t >= t1 - 1e-12;
            if since_record >= config.record_stride || last {
                times.push(t);
                states.push(y);
                derivs.push(f0);
                since_record = 0;
            }
            let fac = (SAFETY * err_norm.powf(-ALPHA) * err_prev.powf(BETA)).clamp(0.2, 5.0);
            err_prev = err_norm;
            h = (h_try * fac).min(config.max_step_dark);
        } else {
            invariants.steps_rejected += 1;
            let fac = (SAFETY * err_norm.powf(-0.2)).clamp(0.1, 1.0);
            h = h_try * fac;
            if h < STEP_FLOOR {
                return Err(Error::Stiffness { t, step: h });
            }
        }
    }

    Ok(Trajectory {
        times,
        states,
        derivs,
        integrated_b: y.em_b,
        integrated_x: y.em_x,
        invariants,
    })
}

fn evolve_rk4(
    eq: &MasterEq,
    params: &PhysicalParams,
    y0: SolverState,
    t0: f64,
    t1: f64,
    step: f64,
    config: &SolverConfig,
) -> Result<Trajectory> {
    let n = ((t1 - t0) / step).ceil().max(1.0) as usize;
    let h = (t1 - t0) / n as f64;

    let mut invariants = InvariantReport::new();
    invariants.observe(t0, &y0.rho)?;

    let mut times = vec![t0];
    let mut states = vec![y0];
    let mut derivs = vec![SolverState::deriv(eq, params, t0, &y0)];
    let mut y = y0;
    let mut since_record = 0usize;

    for i in 0..n {
        let t = t0 + i as f64 * h;
        let k1 = SolverState::deriv(eq, params, t, &y);
        let mut y2 = y;
        y2.axpy(0.5 * h, &k1);
        let k2 = SolverState::deriv(eq, params, t + 0.5 * h, &y2);
        let mut y3 = y;
        y3.axpy(0.5 * h, &k2);
        let k3 = SolverState::deriv(eq, params, t + 0.5 * h, &y3);
        let mut y4 = y;
        y4.axpy(h, &k3);
        let k4 = SolverState::deriv(eq, params, t + h, &y4);
        y.axpy(h / 6.0, &k1);
        y.axpy(h / 3.0, &k2);
        y.axpy(h / 3.0, &k3);
        y.axpy(h / 6.0, &k4);

        let t_next = t0 + (i + 1) as f64 * h;
        invariants.observe(t_next, &y.rho)?;
        invariants.steps_accepted += 1;
        since_record += 1;
        if since_record >= config.record_stride || i + 1 == n {
            times.push(t_next);
            states.push(y);
            derivs.push(SolverState::deriv(eq, params, t_next, &y));
            since_record = 0;
        }
    }

    Ok(Trajectory {
        times,
        states,
        derivs,
        integrated_b: y.em_b,
        integrated_x: y.em_x,
        invariants,
    })
}

/// Per-pulse emission probabilities (P_xx, P_x) from the accumulated
/// integrals gamma_b int P_b dt and gamma_x int P_x dt.
///
/// Requires the trajectory to span long enough that the cascade has
/// decayed out (final P_b + P_x <= 0.01).
pub fn emission_probability(traj: &Trajectory) -> Result<(f64, f64)> {
    let (_, px, pb) = traj.final_state().populations();
    let remaining = px + pb;
    if remaining > 0.01 {
        return Err(Error::IncompleteDecay { remaining });
    }
    check_emission_range(traj.integrated_b)?;
    check_emission_range(traj.integrated_x)?;
    Ok((traj.integrated_b, traj.integrated_x))
}

/// Emission probabilities with the remaining dark decay completed in
/// closed form: every residual biexciton eventually emits one XX photon
/// and cascades through the exciton, so
/// P_xx += P_b(final), P_x += P_x(final) + P_b(final).
///
/// Only valid when all drives lie inside the integrated span and both
/// radiative rates are positive.
pub fn emission_probability_extrapolated(
    traj: &Trajectory,
    params: &PhysicalParams,
) -> Result<(f64, f64)> {
    if !(params.gamma_b > 0.0 && params.gamma_x > 0.0) {
        return Err(Error::InvalidArgument(
            "dark-tail extrapolation requires positive radiative rates".into(),
        ));
    }
    let (_, px, pb) = traj.final_state().populations();
    let p_xx = traj.integrated_b + pb;
    let p_x = traj.integrated_x + px + pb;
    check_emission_range(p_xx)?;
    check_emission_range(p_x)?;
    Ok((p_xx, p_x))
}

fn check_emission_range(p: f64) -> Result<()> {
    // Slightly above 1 is physical: a biexciton re-excited within the
    // pulse emits twice. Far outside [0, 1] means a broken integral.
    if !(-1e-9..=1.01).contains(&p) {
        return Err(Error::IntegrationFailure(format!(
            "emission probability {p} outside [0, 1.01]"
        )));
    }
    Ok(())
}

/// Least-squares exponential lifetime of a dark decay trajectory, ps.
pub fn lifetime_fit(traj: &Trajectory, level: Level) -> Result<f64> {
    let mut ts = Vec::with_capacity(traj.len());
    let mut ps = Vec::with_capacity(traj.len());
    for (t, rho) in traj.samples() {
        let p = rho.population(level);
        if p > 1e-12 {
            ts.push(t);
            ps.push(p);
        }
    }
    if ts.len() < 3 {
        return Err(Error::FitDomain(
            "too few samples with nonzero population".into(),
        ));
    }
    for w in ps.windows(2) {
        if w[1] > w[0] * (1.0 + 1e-9) + 1e-12 {
            return Err(Error::FitDomain(format!(
                "population not monotone decreasing ({} -> {})",
                w[0], w[1]
            )));
        }
    }
    // log-linear least squares: ln p = a + s t
    let n = ts.len() as f64;
    let logs: Vec<f64> = ps.iter().map(|p| p.ln()).collect();
    let st: f64 = ts.iter().sum();
    let sl: f64 = logs.iter().sum();
    let stt: f64 = ts.iter().map(|t| t * t).sum();
    let stl: f64 = ts.iter().zip(&logs).map(|(t, l)| t * l).sum();
    let denom = n * stt - st * st;
    if denom.abs() < 1e-30 {
        return Err(Error::FitDomain("degenerate time grid".into()));
    }
    let slope = (n * stl - st * sl) / denom;
    if slope >= 0.0 {
        return Err(Error::FitDomain(format!(
            "non-decaying population (slope {slope:.3e})"
        )));
    }
    Ok(-1.0 / slope)
}
