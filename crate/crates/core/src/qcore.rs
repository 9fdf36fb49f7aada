//! Exact 3x3 complex linear algebra and state representation for the
//! ground / exciton / biexciton cascade.
//!
//! Basis order is fixed everywhere: index 0 = |g>, 1 = |x>, 2 = |b>.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerances for a freshly constructed density matrix.
pub const HERMITICITY_TOL_CONSTRUCT: f64 = 1e-12;
pub const TRACE_TOL_CONSTRUCT: f64 = 1e-12;
/// Tolerances allowed to accumulate over a numerical evolution.
pub const HERMITICITY_TOL_EVOLVED: f64 = 1e-9;
pub const TRACE_TOL_EVOLVED: f64 = 1e-8;
/// Minimum eigenvalue allowed (construction and evolution alike).
pub const EIGENVALUE_FLOOR: f64 = -1e-9;

/// The three levels of the cascade.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Ground,
    Exciton,
    Biexciton,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Ground, Level::Exciton, Level::Biexciton];

    pub fn index(self) -> usize {
        match self {
            Level::Ground => 0,
            Level::Exciton => 1,
            Level::Biexciton => 2,
        }
    }

    pub fn from_index(i: usize) -> Result<Level> {
        match i {
            0 => Ok(Level::Ground),
            1 => Ok(Level::Exciton),
            2 => Ok(Level::Biexciton),
            _ => Err(Error::InvalidArgument(format!("level index {i} out of range"))),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Level::Ground => "g",
            Level::Exciton => "x",
            Level::Biexciton => "b",
        };
        write!(f, "{s}")
    }
}

/// Dense 3x3 complex matrix over the (g, x, b) basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Operator3 {
    pub m: [[Complex64; 3]; 3],
}

impl Operator3 {
    pub const ZERO: Operator3 = Operator3 {
        m: [[Complex64::new(0.0, 0.0); 3]; 3],
    };

    pub fn zero() -> Operator3 {
        Operator3::ZERO
    }

    pub fn identity() -> Operator3 {
        let mut m = Operator3::ZERO;
        for i in 0..3 {
            m.m[i][i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: [[Complex64; 3]; 3]) -> Operator3 {
        Operator3 { m: rows }
    }

    pub fn diag(d0: Complex64, d1: Complex64, d2: Complex64) -> Operator3 {
        let mut m = Operator3::ZERO;
        m.m[0][0] = d0;
        m.m[1][1] = d1;
        m.m[2][2] = d2;
        m
    }

    /// |i><j| in the fixed (g, x, b) basis.
    pub fn projector(i: Level, j: Level) -> Operator3 {
        let mut m = Operator3::ZERO;
        m.m[i.index()][j.index()] = Complex64::new(1.0, 0.0);
        m
    }

    pub fn adjoint(&self) -> Operator3 {
        let mut out = Operator3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] = self.m[j][i].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }

    pub fn scale(&self, s: f64) -> Operator3 {
        let mut out = *self;
        for row in out.m.iter_mut() {
            for e in row.iter_mut() {
                *e *= s;
            }
        }
        out
    }

    pub fn scale_complex(&self, s: Complex64) -> Operator3 {
        let mut out = *self;
        for row in out.m.iter_mut() {
            for e in row.iter_mut() {
                *e *= s;
            }
        }
        out
    }

    /// In-place a += b * s; the workhorse of the integrator.
    pub fn axpy(&mut self, s: f64, b: &Operator3) {
        for i in 0..3 {
            for j in 0..3 {
                self.m[i][j] += b.m[i][j] * s;
            }
        }
    }

    pub fn matmul(&self, rhs: &Operator3) -> Operator3 {
        let mut out = Operator3::ZERO;
        for i in 0..3 {
            for k in 0..3 {
                let a = self.m[i][k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..3 {
                    out.m[i][j] += a * rhs.m[k][j];
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        let mut acc: f64 = 0.0;
        for row in &self.m {
            for e in row {
                acc = acc.max(e.norm());
            }
        }
        acc
    }

    pub fn max_abs_diff(&self, other: &Operator3) -> f64 {
        let mut acc: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                acc = acc.max((self.m[i][j] - other.m[i][j]).norm());
            }
        }
        acc
    }

    /// Entrywise deviation from Hermiticity, max |A - A^dag|.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut acc: f64 = 0.0;
        for i in 0..3 {
            for j in i..3 {
                acc = acc.max((self.m[i][j] - self.m[j][i].conj()).norm());
            }
        }
        acc
    }

    pub fn is_finite(&self) -> bool {
        self.m
            .iter()
            .flatten()
            .all(|e| e.re.is_finite() && e.im.is_finite())
    }

    pub fn det(&self) -> Complex64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Eigenvalues of a (numerically) Hermitian matrix, ascending.
    ///
    /// Closed-form solution of the characteristic cubic in the standard
    /// trigonometric formulation; exact for the fixed 3x3 dimension.
    /// Eigenvalues of a Hermitian operator, ascending, by cyclic complex
    /// Jacobi rotations. Jacobi resolves near-zero eigenvalues of
    /// almost-singular density matrices to machine precision, which the
    /// closed-form trigonometric cubic cannot (it loses ~sqrt(eps) of
    /// absolute accuracy at double roots — exactly the pure-state case).
    pub fn eigenvalues_hermitian(&self) -> [f64; 3] {
        let mut a = *self;
        let norm = self.max_abs().max(f64::MIN_POSITIVE);
        for _sweep in 0..30 {
            let off = a.m[0][1].norm_sqr() + a.m[0][2].norm_sqr() + a.m[1][2].norm_sqr();
            if off <= (1e-16 * norm) * (1e-16 * norm) {
                break;
            }
            for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
                let g = a.m[p][q];
                let gn = g.norm();
                if gn <= f64::EPSILON * norm * 1e-2 {
                    continue;
                }
                // phase out a_pq, then a real 2x2 Jacobi rotation
                let w = g / gn;
                let alpha = a.m[p][p].re;
                let beta = a.m[q][q].re;
                let tau = (beta - alpha) / (2.0 * gn);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let mut v = Operator3::identity();
                v.m[p][p] = Complex64::new(c, 0.0);
                v.m[p][q] = Complex64::new(s, 0.0);
                v.m[q][p] = w.conj() * (-s);
                v.m[q][q] = w.conj() * c;
                a = v.adjoint().matmul(&a).matmul(&v);
                a.m[p][q] = Complex64::new(0.0, 0.0);
                a.m[q][p] = Complex64::new(0.0, 0.0);
            }
        }
        let mut e = [a.m[0][0].re, a.m[1][1].re, a.m[2][2].re];
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e
    }
}

impl Add for Operator3 {
    type Output = Operator3;
    fn add(self, rhs: Operator3) -> Operator3 {
        let mut out = self;
        out.axpy(1.0, &rhs);
        out
    }
}

impl Sub for Operator3 {
    type Output = Operator3;
    fn sub(self, rhs: Operator3) -> Operator3 {
        let mut out = self;
        out.axpy(-1.0, &rhs);
        out
    }
}

impl Neg for Operator3 {
    type Output = Operator3;
    fn neg(self) -> Operator3 {
        self.scale(-1.0)
    }
}

impl Mul for Operator3 {
    type Output = Operator3;
    fn mul(self, rhs: Operator3) -> Operator3 {
        self.matmul(&rhs)
    }
}

/// |i><j| in the fixed (g, x, b) basis.
pub fn projector(i: Level, j: Level) -> Operator3 {
    Operator3::projector(i, j)
}

/// AB - BA.
pub fn commutator(a: &Operator3, b: &Operator3) -> Operator3 {
    a.matmul(b) - b.matmul(a)
}

/// Standard-form Lindblad dissipator applied to rho:
/// (rate/2) (2 A rho A^dag - A^dag A rho - rho A^dag A).
pub fn dissipator(a: &Operator3, rate: f64, rho: &Operator3) -> Result<Operator3> {
    if rate < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "dissipator rate must be nonnegative, got {rate}"
        )));
    }
    if rate == 0.0 {
        return Ok(Operator3::ZERO);
    }
    let a_dag = a.adjoint();
    let a_dag_a = a_dag.matmul(a);
    Ok(dissipator_precomputed(a, &a_dag, &a_dag_a, rate, rho))
}

/// Dissipator with A^dag and A^dag A precomputed (hot path of the solver).
pub fn dissipator_precomputed(
    a: &Operator3,
    a_dag: &Operator3,
    a_dag_a: &Operator3,
    rate: f64,
    rho: &Operator3,
) -> Operator3 {
    let sandwich = a.matmul(rho).matmul(a_dag);
    let mut out = sandwich;
    out.axpy(-0.5, &a_dag_a.matmul(rho));
    out.axpy(-0.5, &rho.matmul(a_dag_a));
    out.scale(rate)
}

/// Hermitian, unit-trace, positive 3x3 state of the cascade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    op: Operator3,
}

impl DensityMatrix {
    /// Validates against the construction tolerances.
    pub fn new(op: Operator3) -> Result<DensityMatrix> {
        Self::with_tolerances(op, HERMITICITY_TOL_CONSTRUCT, TRACE_TOL_CONSTRUCT)
    }

    /// Validates against the looser post-evolution tolerances.
    pub fn from_evolved(op: Operator3) -> Result<DensityMatrix> {
        Self::with_tolerances(op, HERMITICITY_TOL_EVOLVED, TRACE_TOL_EVOLVED)
    }

    fn with_tolerances(op: Operator3, herm_tol: f64, trace_tol: f64) -> Result<DensityMatrix> {
        if !op.is_finite() {
            return Err(Error::InvalidArgument("non-finite density matrix".into()));
        }
        let herm = op.hermiticity_deviation();
        if herm > herm_tol {
            return Err(Error::InvalidArgument(format!(
                "hermiticity deviation {herm:.3e} exceeds {herm_tol:.1e}"
            )));
        }
        let tr = (op.trace().re - 1.0).abs().max(op.trace().im.abs());
        if tr > trace_tol {
            return Err(Error::InvalidArgument(format!(
                "trace deviation {tr:.3e} exceeds {trace_tol:.1e}"
            )));
        }
        let min_eig = op.eigenvalues_hermitian()[0];
        if min_eig < EIGENVALUE_FLOOR {
            return Err(Error::InvalidArgument(format!(
                "minimum eigenvalue {min_eig:.3e} below {EIGENVALUE_FLOOR:.1e}"
            )));
        }
        Ok(DensityMatrix { op })
    }

    /// For solver-internal states whose invariants are tracked separately.
    pub(crate) fn from_operator_unchecked(op: Operator3) -> DensityMatrix {
        DensityMatrix { op }
    }

    /// Pure state |level><level|.
    pub fn pure(level: Level) -> DensityMatrix {
        DensityMatrix {
            op: Operator3::projector(level, level),
        }
    }

    pub fn as_operator(&self) -> &Operator3 {
        &self.op
    }

    pub fn into_operator(self) -> Operator3 {
        self.op
    }

    /// Level populations (P_g, P_x, P_b).
    pub fn populations(&self) -> (f64, f64, f64) {
        (self.op.m[0][0].re, self.op.m[1][1].re, self.op.m[2][2].re)
    }

    pub fn population(&self, level: Level) -> f64 {
        let i = level.index();
        self.op.m[i][i].re
    }

    pub fn coherence(&self, i: Level, j: Level) -> Complex64 {
        self.op.m[i.index()][j.index()]
    }

    /// Tr(rho^2).
    pub fn purity(&self) -> f64 {
        self.op.matmul(&self.op).trace().re
    }
}
