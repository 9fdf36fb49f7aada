//! Fringe and envelope fitting.
//!
//! Two fitters: a linear least-squares sinusoid for phase fringes
//! (known period pi in the fine phase, since the two-photon process
//! doubles the carrier phase), and a two-parameter decay fit for
//! visibility envelopes with either exponential or Gaussian shape.

use crate::error::{Error, Result};

/// Decay envelope shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayShape {
    /// exp(-t / T)
    Exponential,
    /// exp(-(t / T)^2)
    Gaussian,
}

impl std::fmt::Display for DecayShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DecayShape::Exponential => write!(f, "exponential"),
            DecayShape::Gaussian => write!(f, "gaussian"),
        }
    }
}

/// Result of an envelope fit V(t) = amplitude * shape(t / time_constant).
#[derive(Debug, Clone, Copy)]
pub struct FitResult {
    pub amplitude: f64,
    /// Decay time, ps.
    pub time_constant: f64,
    pub shape: DecayShape,
    /// Root-mean-square residual of the fit.
    pub residual_rms: f64,
}

/// Fringe y(phi) = offset + amp * cos(2 phi - phase), fitted linearly
/// in the basis {1, cos 2phi, sin 2phi}.
#[derive(Debug, Clone, Copy)]
pub struct Fringe {
    pub offset: f64,
    pub amplitude: f64,
    /// Phase of the fringe maximum in 2*phi, radians in (-pi, pi].
    pub phase: f64,
    pub residual_rms: f64,
}

impl Fringe {
    /// Michelson visibility (max - min) / (max + min) = amp / offset.
    pub fn visibility(&self) -> f64 {
        if self.offset <= 0.0 {
            0.0
        } else {
            (self.amplitude / self.offset).min(1.0)
        }
    }
}

/// Fit a pi-periodic fringe to samples (phi_i, y_i).
///
/// Errors with `FitDomain` on fewer than 4 points or degenerate
/// abscissae, and with `FitQuality` when the residual exceeds 10% of
/// the fitted amplitude (plus an absolute floor for flat fringes).
pub fn fit_fringe(phases: &[f64], values: &[f64]) -> Result<Fringe> {
    if phases.len() != values.len() {
        return Err(Error::FitDomain("phase/value length mismatch".into()));
    }
    let n = phases.len();
    if n < 4 {
        return Err(Error::FitDomain(format!("need >= 4 fringe samples, got {n}")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::FitDomain("non-finite fringe sample".into()));
    }

    // normal equations for the 3-parameter linear model
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for (&phi, &y) in phases.iter().zip(values) {
        let row = [1.0, (2.0 * phi).cos(), (2.0 * phi).sin()];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * y;
        }
    }
    let x = solve3(ata, atb).ok_or_else(|| {
        Error::FitDomain("degenerate fringe abscissae (normal matrix singular)".into())
    })?;
    let (offset, a, b) = (x[0], x[1], x[2]);
    let amplitude = (a * a + b * b).sqrt();
    let phase = b.atan2(a);

    let mut ss = 0.0;
    for (&phi, &y) in phases.iter().zip(values) {
        let model = offset + a * (2.0 * phi).cos() + b * (2.0 * phi).sin();
        ss += (y - model) * (y - model);
    }
    let residual_rms = (ss / n as f64).sqrt();
    if residual_rms > 0.1 * amplitude + 1e-9 {
        return Err(Error::FitQuality {
            residual: residual_rms,
            amplitude,
        });
    }

    Ok(Fringe {
        offset,
        amplitude,
        phase,
        residual_rms,
    })
}

/// Fit V(t) = V0 * exp(-(t/T)^p) with p fixed by `shape`.
///
/// Log-linear initialization on the strictly positive samples, then
/// Gauss-Newton refinement in the original (unweighted) coordinates.
pub fn fit_decay(times: &[f64], values: &[f64], shape: DecayShape) -> Result<FitResult> {
    if times.len() != values.len() {
        return Err(Error::FitDomain("time/value length mismatch".into()));
    }
    if times.len() < 3 {
        return Err(Error::FitDomain(format!(
            "need >= 3 decay samples, got {}",
            times.len()
        )));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::FitDomain("times must be strictly increasing".into()));
    }
    if times[0] < 0.0 {
        return Err(Error::FitDomain("negative delay in decay fit".into()));
    }
    let p = match shape {
        DecayShape::Exponential => 1.0,
        DecayShape::Gaussian => 2.0,
    };

    // log-linear seed: ln V = ln V0 - (t/T)^p, linear in t^p
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut m = 0usize;
    for (&t, &v) in times.iter().zip(values) {
        if v > 1e-12 && v.is_finite() {
            let x = t.powf(p);
            let y = v.ln();
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            m += 1;
        }
    }
    if m < 3 {
        return Err(Error::FitDomain(
            "fewer than 3 positive samples for log-linear seed".into(),
        ));
    }
    let det = m as f64 * sxx - sx * sx;
    if det.abs() < 1e-30 {
        return Err(Error::FitDomain("degenerate decay abscissae".into()));
    }
    let slope = (m as f64 * sxy - sx * sy) / det;
    let intercept = (sy * sxx - sx * sxy) / det;
    if slope >= 0.0 {
        return Err(Error::FitDomain(
            "samples do not decay (non-negative log slope)".into(),
        ));
    }
    let mut v0 = intercept.exp();
    let mut tc = (-1.0 / slope).powf(1.0 / p);

    // Gauss-Newton on r_i = v_i - v0 exp(-(t_i/tc)^p)
    let mut converged = false;
    for _ in 0..100 {
        let mut jtj = [[0.0f64; 2]; 2];
        let mut jtr = [0.0f64; 2];
        for (&t, &v) in times.iter().zip(values) {
            let u = (t / tc).powf(p);
            let e = (-u).exp();
            let r = v - v0 * e;
            let j0 = e; // d model / d v0
            let j1 = v0 * e * p * u / tc; // d model / d tc
            jtj[0][0] += j0 * j0;
            jtj[0][1] += j0 * j1;
            jtj[1][1] += j1 * j1;
            jtr[0] += j0 * r;
            jtr[1] += j1 * r;
        }
        jtj[1][0] = jtj[0][1];
        let det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
        if det.abs() < 1e-300 {
            break;
        }
        let dv0 = (jtj[1][1] * jtr[0] - jtj[0][1] * jtr[1]) / det;
        let dtc = (jtj[0][0] * jtr[1] - jtj[1][0] * jtr[0]) / det;
        // damp steps that would leave the physical region
        let mut step = 1.0;
        while tc + step * dtc <= 0.0 || v0 + step * dv0 <= 0.0 {
            step *= 0.5;
            if step < 1e-8 {
                break;
            }
        }
        v0 += step * dv0;
        tc += step * dtc;
        if (step * dv0).abs() < 1e-12 * v0.abs() && (step * dtc).abs() < 1e-12 * tc.abs() {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::FitNonConvergence(format!(
            "decay fit ({shape}) did not reach 1e-12 relative step"
        )));
    }

    let mut ss = 0.0;
    for (&t, &v) in times.iter().zip(values) {
        let r = v - v0 * (-((t / tc).powf(p))).exp();
        ss += r * r;
    }
    let residual_rms = (ss / times.len() as f64).sqrt();
    if residual_rms > 0.1 * v0 + 1e-9 {
        return Err(Error::FitQuality {
            residual: residual_rms,
            amplitude: v0,
        });
    }

    Ok(FitResult {
        amplitude: v0,
        time_constant: tc,
        shape,
        residual_rms,
    })
}

/// Fit both shapes and return the one with the smaller residual,
/// together with the loser's residual for reporting.
pub fn fit_decay_best(times: &[f64], values: &[f64]) -> Result<(FitResult, f64)> {
    let exp = fit_decay(times, values, DecayShape::Exponential);
    let gau = fit_decay(times, values, DecayShape::Gaussian);
    match (exp, gau) {
        (Ok(e), Ok(g)) => {
            if e.residual_rms <= g.residual_rms {
                Ok((e, g.residual_rms))
            } else {
                Ok((g, e.residual_rms))
            }
        }
        (Ok(e), Err(_)) => Ok((e, f64::INFINITY)),
        (Err(_), Ok(g)) => Ok((g, f64::INFINITY)),
        (Err(e), Err(_)) => Err(e),
    }
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    if det.abs() < 1e-12 {
        return None;
    }
    let inv_det = 1.0 / det;
    let mut x = [0.0; 3];
    for i in 0..3 {
        // Cramer: replace column i with b
        let mut m = a;
        for r in 0..3 {
            m[r][i] = b[r];
        }
        let d = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        x[i] = d * inv_det;
    }
    Some(x)
}
