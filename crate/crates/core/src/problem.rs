//! Boundary-value problem data on [-1, 1] with interior breakpoints `h1 < h2`.
//!
//! The differential expression is `(1/r) (-(p u')' + q u) = lambda u` on each of the
//! three pieces `[-1, h1)`, `(h1, h2)`, `(h2, 1]`, with
//!
//! * `u(-1) = 0`,
//! * `(lambda a1 + b1) u(1) - (lambda a2 + b2) u'(1) = 0`,
//! * `g1 u(h1-0) = d1 u(h1+0)`, `g2 u'(h1-0) = d2 u'(h1+0)` and the same at `h2`
//!   with `g3, g4, d3, d4`.

use std::fmt;

use crate::error::{Error, Result};
use crate::expr::Expr;

/// Number of validation samples per piece used for the positivity checks.
pub const VALIDATION_SAMPLES: usize = 256;

/// One of the three subintervals of [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Piece {
    Left,
    Middle,
    Right,
}

impl Piece {
    pub const ALL: [Piece; 3] = [Piece::Left, Piece::Middle, Piece::Right];

    /// Zero-based index, usable for per-piece arrays.
    pub fn index(self) -> usize {
        match self {
            Piece::Left => 0,
            Piece::Middle => 1,
            Piece::Right => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Piece> {
        Piece::ALL.get(i).copied()
    }
}

impl fmt::Display for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index() + 1)
    }
}

/// Which one-sided limit to take at a breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// `h - 0`, the limit from the left.
    Minus,
    /// `h + 0`, the limit from the right.
    Plus,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Minus => "-0",
            Side::Plus => "+0",
        })
    }
}

/// Raw problem data as read from a problem file or built in code.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub h1: f64,
    pub h2: f64,
    /// `r`, `p`, `q` per piece, in the order left, middle, right.
    pub r: [Expr; 3],
    pub p: [Expr; 3],
    pub q: [Expr; 3],
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
    pub gamma: [f64; 4],
    pub delta: [f64; 4],
}

impl ProblemSpec {
    /// Constant coefficients on every piece, identity transmission at both breakpoints.
    pub fn constant(
        h1: f64,
        h2: f64,
        r: f64,
        p: f64,
        q: f64,
        alpha: [f64; 2],
        beta: [f64; 2],
    ) -> Self {
        let c = |v: f64| [Expr::constant(v), Expr::constant(v), Expr::constant(v)];
        ProblemSpec {
            h1,
            h2,
            r: c(r),
            p: c(p),
            q: c(q),
            alpha,
            beta,
            gamma: [1.0; 4],
            delta: [1.0; 4],
        }
    }
}

/// Cached one-sided limits of a coefficient at the two breakpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BreakpointLimits {
    pub h1_minus: f64,
    pub h1_plus: f64,
    pub h2_minus: f64,
    pub h2_plus: f64,
}

/// A problem whose invariants have been checked. Only [`validate_problem`] builds one.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedProblem {
    spec: ProblemSpec,
    rho: f64,
    p_limits: BreakpointLimits,
    r_limits: BreakpointLimits,
    p_at_one: f64,
}

/// The boundary linear forms `(u)_1 = b1 u(1) - b2 u'(1)` and `(u)'_1 = a1 u(1) - a2 u'(1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryForms {
    pub u1_form: f64,
    pub u1p_form: f64,
}

/// Outcome of checking `d1 d2 p(h1-0) = g1 g2 p(h1+0)` and `d3 d4 p(h2-0) = g3 g4 p(h2+0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryReport {
    pub holds: bool,
    pub residuals: [f64; 2],
}

/// Relative tolerance of the symmetry condition check.
pub const SYMMETRY_REL_TOL: f64 = 1e-12;

pub fn validate_problem(spec: ProblemSpec) -> Result<ValidatedProblem> {
    for (name, v) in [
        ("alpha1", spec.alpha[0]),
        ("alpha2", spec.alpha[1]),
        ("beta1", spec.beta[0]),
        ("beta2", spec.beta[1]),
    ] {
        if !v.is_finite() {
            return Err(Error::NonFiniteParameter(name));
        }
    }
    if !(-1.0 < spec.h1 && spec.h1 < spec.h2 && spec.h2 < 1.0) {
        return Err(Error::BreakpointOrder {
            h1: spec.h1,
            h2: spec.h2,
        });
    }
    if spec.beta[0] == 0.0 && spec.beta[1] == 0.0 {
        return Err(Error::BetaBothZero);
    }
    let rho = spec.alpha[0] * spec.beta[1] - spec.alpha[1] * spec.beta[0];
    if !(rho > 0.0) {
        return Err(Error::RhoNotPositive { rho });
    }
    for (name, values) in [("gamma", &spec.gamma), ("delta", &spec.delta)] {
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteParameter(name));
            }
            if v == 0.0 {
                return Err(Error::ZeroTransmissionCoefficient { name, index: i + 1 });
            }
        }
    }

    let bounds = [(-1.0, spec.h1), (spec.h1, spec.h2), (spec.h2, 1.0)];
    for piece in Piece::ALL {
        let (a, b) = bounds[piece.index()];
        for k in 0..VALIDATION_SAMPLES {
            let t = k as f64 / (VALIDATION_SAMPLES - 1) as f64;
            let x = if k + 1 == VALIDATION_SAMPLES {
                b
            } else {
                a + (b - a) * t
            };
            for (name, exprs) in [("r", &spec.r), ("p", &spec.p)] {
                let value = exprs[piece.index()].eval(x)?;
                if !(value > 0.0) {
                    return Err(Error::NonPositiveCoefficient {
                        name,
                        piece,
                        x,
                        value,
                    });
                }
            }
            spec.q[piece.index()].eval(x)?;
        }
    }

    let limits = |exprs: &[Expr; 3]| -> Result<BreakpointLimits> {
        Ok(BreakpointLimits {
            h1_minus: exprs[0].eval(spec.h1)?,
            h1_plus: exprs[1].eval(spec.h1)?,
            h2_minus: exprs[1].eval(spec.h2)?,
            h2_plus: exprs[2].eval(spec.h2)?,
        })
    };
    let p_limits = limits(&spec.p)?;
    let r_limits = limits(&spec.r)?;
    let p_at_one = spec.p[2].eval(1.0)?;

    Ok(ValidatedProblem {
        spec,
        rho,
        p_limits,
        r_limits,
        p_at_one,
    })
}

impl ValidatedProblem {
    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn into_spec(self) -> ProblemSpec {
        self.spec
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn h1(&self) -> f64 {
        self.spec.h1
    }

    pub fn h2(&self) -> f64 {
        self.spec.h2
    }

    pub fn alpha(&self) -> [f64; 2] {
        self.spec.alpha
    }

    pub fn beta(&self) -> [f64; 2] {
        self.spec.beta
    }

    pub fn gamma(&self) -> [f64; 4] {
        self.spec.gamma
    }

    pub fn delta(&self) -> [f64; 4] {
        self.spec.delta
    }

    pub fn p_limits(&self) -> BreakpointLimits {
        self.p_limits
    }

    pub fn r_limits(&self) -> BreakpointLimits {
        self.r_limits
    }

    /// `p(1)`, evaluated with the right piece's expression.
    pub fn p_at_one(&self) -> f64 {
        self.p_at_one
    }

    /// Weight `p(1)/rho` of the scalar component in the inner product.
    pub fn boundary_weight(&self) -> f64 {
        self.p_at_one / self.rho
    }

    /// Closed interval of a piece.
    pub fn interval(&self, piece: Piece) -> (f64, f64) {
        match piece {
            Piece::Left => (-1.0, self.spec.h1),
            Piece::Middle => (self.spec.h1, self.spec.h2),
            Piece::Right => (self.spec.h2, 1.0),
        }
    }

    /// Piece containing `x`; breakpoints are ambiguous and rejected.
    pub fn locate(&self, x: f64) -> Result<Piece> {
        if !(-1.0..=1.0).contains(&x) {
            return Err(Error::InvalidArgument(format!(
                "x = {x} is outside [-1, 1]"
            )));
        }
        if x == self.spec.h1 || x == self.spec.h2 {
            return Err(Error::BreakpointWithoutSide { x });
        }
        Ok(if x < self.spec.h1 {
            Piece::Left
        } else if x < self.spec.h2 {
            Piece::Middle
        } else {
            Piece::Right
        })
    }

    /// Like [`locate`](Self::locate) but resolves breakpoints with `side`.
    pub fn locate_sided(&self, x: f64, side: Side) -> Result<Piece> {
        if x == self.spec.h1 {
            Ok(match side {
                Side::Minus => Piece::Left,
                Side::Plus => Piece::Middle,
            })
        } else if x == self.spec.h2 {
            Ok(match side {
                Side::Minus => Piece::Middle,
                Side::Plus => Piece::Right,
            })
        } else {
            self.locate(x)
        }
    }

    pub fn r(&self, piece: Piece, x: f64) -> Result<f64> {
        Ok(self.spec.r[piece.index()].eval(x)?)
    }

    pub fn p(&self, piece: Piece, x: f64) -> Result<f64> {
        Ok(self.spec.p[piece.index()].eval(x)?)
    }

    pub fn q(&self, piece: Piece, x: f64) -> Result<f64> {
        Ok(self.spec.q[piece.index()].eval(x)?)
    }

    pub fn boundary_forms(&self, u1: f64, u1p: f64) -> BoundaryForms {
        boundary_forms(self, u1, u1p)
    }

    pub fn symmetry_condition_check(&self) -> SymmetryReport {
        symmetry_condition_check(self)
    }

    /// Value and derivative jump ratios `(g/d)` applied when crossing a breakpoint
    /// from left to right: `u(h+0) = (g_value/d_value) u(h-0)` and likewise for `u'`.
    pub fn jump_ratios(&self, breakpoint: usize) -> (f64, f64) {
        let g = self.spec.gamma;
        let d = self.spec.delta;
        match breakpoint {
            0 => (g[0] / d[0], g[1] / d[1]),
            _ => (g[2] / d[2], g[3] / d[3]),
        }
    }
}

impl BoundaryForms {
    /// The forms for raw boundary parameters, without any check on them.
    pub fn from_parameters(alpha: [f64; 2], beta: [f64; 2], u1: f64, u1p: f64) -> Self {
        BoundaryForms {
            u1_form: beta[0] * u1 - beta[1] * u1p,
            u1p_form: alpha[0] * u1 - alpha[1] * u1p,
        }
    }
}

pub fn boundary_forms(problem: &ValidatedProblem, u1: f64, u1p: f64) -> BoundaryForms {
    BoundaryForms::from_parameters(problem.spec.alpha, problem.spec.beta, u1, u1p)
}

pub fn symmetry_condition_check(problem: &ValidatedProblem) -> SymmetryReport {
    let g = problem.spec.gamma;
    let d = problem.spec.delta;
    let pl = problem.p_limits;
    let sides = [
        (d[0] * d[1] * pl.h1_minus, g[0] * g[1] * pl.h1_plus),
        (d[2] * d[3] * pl.h2_minus, g[2] * g[3] * pl.h2_plus),
    ];
    let mut holds = true;
    let mut residuals = [0.0; 2];
    for (i, (lhs, rhs)) in sides.into_iter().enumerate() {
        residuals[i] = (lhs - rhs).abs();
        if residuals[i] > SYMMETRY_REL_TOL * lhs.abs().max(rhs.abs()) {
            holds = false;
        }
    }
    SymmetryReport { holds, residuals }
}
