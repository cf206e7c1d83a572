//! Initial-value integration of the Sturm-Liouville equation on a single piece.
//!
//! The equation is integrated in quasi-derivative form
//!
//! ```text
//! u' = w / p(x)
//! w' = (q(x) - lambda r(x)) u
//! ```
//!
//! with `w = p u'`, using the Dormand-Prince 5(4) pair with PI step-size control
//! and its fourth-order continuous extension for dense output.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::problem::{Piece, ValidatedProblem};

/// Error-control tolerances for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

impl Tolerances {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Tolerances { rtol, atol }
    }

    /// Same tolerances scaled by `factor`.
    pub fn scaled(self, factor: f64) -> Self {
        Tolerances {
            rtol: self.rtol * factor,
            atol: self.atol * factor,
        }
    }
}

const MAX_STEPS: usize = 1_000_000;

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Dense-output coefficients of one accepted step.
pub(crate) type DenseCoefficients<const N: usize> = [[f64; N]; 5];

/// Nodes and continuous extension of an integration run.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct DenseRun<const N: usize> {
    pub xs: Vec<f64>,
    pub states: Vec<[f64; N]>,
    pub dense: Vec<DenseCoefficients<N>>,
}

impl<const N: usize> DenseRun<N> {
    pub fn start(&self) -> f64 {
        self.xs[0]
    }

    pub fn end(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    pub fn contains(&self, x: f64) -> bool {
        let (lo, hi) = ordered(self.start(), self.end());
        lo <= x && x <= hi
    }

    /// State at `x`; stored nodes are returned verbatim.
    pub fn eval(&self, x: f64) -> Result<[f64; N]> {
        if !self.contains(x) {
            return Err(Error::OutOfSpan {
                x,
                start: self.start(),
                end: self.end(),
            });
        }
        let forward = self.end() >= self.start();
        // First node index whose coordinate is at or beyond x in the direction of travel.
        let idx = self
            .xs
            .partition_point(|&xi| if forward { xi < x } else { xi > x });
        if idx < self.xs.len() && self.xs[idx] == x {
            return Ok(self.states[idx]);
        }
        let step = idx - 1;
        let x0 = self.xs[step];
        let h = self.xs[step + 1] - x0;
        let theta = (x - x0) / h;
        let theta1 = 1.0 - theta;
        let r = &self.dense[step];
        let mut y = [0.0; N];
        for i in 0..N {
            y[i] = r[0][i]
                + theta * (r[1][i] + theta1 * (r[2][i] + theta * (r[3][i] + theta1 * r[4][i])));
        }
        Ok(y)
    }
}

fn ordered(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn rms_norm<const N: usize>(v: &[f64; N], scale: &[f64; N]) -> f64 {
    let s: f64 = v.iter().zip(scale).map(|(a, b)| (a / b) * (a / b)).sum();
    (s / N as f64).sqrt()
}

fn axpy<const N: usize>(y: &[f64; N], terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += c * k[i];
        }
    }
    out
}

/// Integrate `y' = f(x, y)` from `x0` to `x1` (either direction).
///
/// When `dense` is true every accepted step is recorded together with its
/// continuous extension; otherwise only the final state is kept.
pub(crate) fn dopri5<const N: usize, F>(
    mut f: F,
    x0: f64,
    x1: f64,
    y0: [f64; N],
    tol: Tolerances,
    dense: bool,
) -> Result<DenseRun<N>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    if !(x0.is_finite() && x1.is_finite()) || x0 == x1 {
        return Err(Error::InvalidArgument(format!(
            "integration span [{x0}, {x1}] is empty or not finite"
        )));
    }
    let span = x1 - x0;
    let dir = span.signum();
    let hmax = span.abs();

    let mut run = DenseRun {
        xs: vec![x0],
        states: vec![y0],
        dense: Vec::new(),
    };

    let mut x = x0;
    let mut y = y0;
    let mut k1 = f(x, &y)?;

    // Initial step guess.
    let mut h = {
        let mut sk = [0.0; N];
        for i in 0..N {
            sk[i] = tol.atol + tol.rtol * y[i].abs();
        }
        let dnf = rms_norm(&k1, &sk);
        let dny = rms_norm(&y, &sk);
        let mut h = if dnf <= 1e-5 || dny <= 1e-5 {
            1e-6
        } else {
            0.01 * dny / dnf
        };
        h = h.min(hmax);
        let y1 = axpy(&y, &[(dir * h, &k1)]);
        let f1 = f(x + dir * h, &y1)?;
        let mut diff = [0.0; N];
        for i in 0..N {
            diff[i] = f1[i] - k1[i];
        }
        let der2 = rms_norm(&diff, &sk) / h;
        let der12 = der2.max(dnf);
        let h1 = if der12 <= 1e-15 {
            (h * 1e-3).max(1e-6)
        } else {
            (0.01 / der12).powf(0.2)
        };
        (100.0 * h).min(h1).min(hmax) * dir
    };

    const BETA: f64 = 0.04;
    const SAFE: f64 = 0.9;
    const FAC_MIN: f64 = 0.2;
    const FAC_MAX: f64 = 10.0;
    let expo1 = 0.2 - BETA * 0.75;
    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;

    for _ in 0..MAX_STEPS {
        let mut last = false;
        if (x + 1.01 * h - x1) * dir >= 0.0 {
            h = x1 - x;
            last = true;
        }
        if h.abs() <= 16.0 * f64::EPSILON * x.abs().max(1.0) {
            return Err(Error::StepFailure { x, h });
        }

        let k2 = f(x + C2 * h, &axpy(&y, &[(h * A21, &k1)]))?;
        let k3 = f(x + C3 * h, &axpy(&y, &[(h * A31, &k1), (h * A32, &k2)]))?;
        let k4 = f(
            x + C4 * h,
            &axpy(&y, &[(h * A41, &k1), (h * A42, &k2), (h * A43, &k3)]),
        )?;
        let k5 = f(
            x + C5 * h,
            &axpy(
                &y,
                &[
                    (h * A51, &k1),
                    (h * A52, &k2),
                    (h * A53, &k3),
                    (h * A54, &k4),
                ],
            ),
        )?;
        let xph = if last { x1 } else { x + h };
        let k6 = f(
            xph,
            &axpy(
                &y,
                &[
                    (h * A61, &k1),
                    (h * A62, &k2),
                    (h * A63, &k3),
                    (h * A64, &k4),
                    (h * A65, &k5),
                ],
            ),
        )?;
        let y_new = axpy(
            &y,
            &[
                (h * A71, &k1),
                (h * A73, &k3),
                (h * A74, &k4),
                (h * A75, &k5),
                (h * A76, &k6),
            ],
        );
        let k7 = f(xph, &y_new)?;

        let mut err_vec = [0.0; N];
        let mut sk = [0.0; N];
        for i in 0..N {
            err_vec[i] =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            sk[i] = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
        }
        let err = rms_norm(&err_vec, &sk);
        if !err.is_finite() {
            h *= FAC_MIN;
            last_rejected = true;
            continue;
        }

        let fac11 = err.powf(expo1);
        if err <= 1.0 {
            let fac = (fac11 / facold.powf(BETA) / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            facold = err.max(1e-4);

            if dense {
                let mut r = [[0.0; N]; 5];
                for i in 0..N {
                    let ydiff = y_new[i] - y[i];
                    let bspl = h * k1[i] - ydiff;
                    r[0][i] = y[i];
                    r[1][i] = ydiff;
                    r[2][i] = bspl;
                    r[3][i] = ydiff - h * k7[i] - bspl;
                    r[4][i] = h
                        * (D1 * k1[i]
                            + D3 * k3[i]
                            + D4 * k4[i]
                            + D5 * k5[i]
                            + D6 * k6[i]
                            + D7 * k7[i]);
                }
                run.dense.push(r);
                run.xs.push(xph);
                run.states.push(y_new);
            }

            x = xph;
            y = y_new;
            k1 = k7;
            if last {
                if !dense {
                    run.xs.push(x);
                    run.states.push(y);
                }
                return Ok(run);
            }
            let mut h_new = h / fac;
            if last_rejected {
                h_new = dir * h_new.abs().min(h.abs());
            }
            last_rejected = false;
            h = h_new;
        } else {
            h /= (fac11 / SAFE).min(1.0 / FAC_MIN);
            last_rejected = true;
        }
    }
    Err(Error::StepFailure { x, h })
}

#[derive(Debug, Clone, Copy)]
enum Coef<'a> {
    Const(f64),
    Var(&'a Expr),
}

impl Coef<'_> {
    fn eval(&self, x: f64) -> Result<f64> {
        match self {
            Coef::Const(c) => Ok(*c),
            Coef::Var(e) => Ok(e.eval(x)?),
        }
    }
}

/// `p`, `q`, `r` of one piece with constant expressions folded.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PieceCoefficients<'a> {
    p: Coef<'a>,
    q: Coef<'a>,
    r: Coef<'a>,
}

impl<'a> PieceCoefficients<'a> {
    pub fn new(problem: &'a ValidatedProblem, piece: Piece) -> Self {
        let spec = problem.spec();
        let coef = |e: &'a Expr| e.as_constant().map_or(Coef::Var(e), Coef::Const);
        PieceCoefficients {
            p: coef(&spec.p[piece.index()]),
            q: coef(&spec.q[piece.index()]),
            r: coef(&spec.r[piece.index()]),
        }
    }

    /// Right-hand side of the quasi-derivative system for real `lambda`.
    #[inline]
    pub fn rhs(&self, lambda: f64, x: f64, y: &[f64; 2]) -> Result<[f64; 2]> {
        let p = self.p.eval(x)?;
        let q = self.q.eval(x)?;
        let r = self.r.eval(x)?;
        Ok([y[1] / p, (q - lambda * r) * y[0]])
    }

    /// Same system for complex `lambda = re + i im`, state `(Re u, Im u, Re w, Im w)`.
    #[inline]
    pub fn rhs_complex(&self, re: f64, im: f64, x: f64, y: &[f64; 4]) -> Result<[f64; 4]> {
        let p = self.p.eval(x)?;
        let q = self.q.eval(x)?;
        let r = self.r.eval(x)?;
        let a = q - re * r;
        let b = im * r;
        Ok([y[2] / p, y[3] / p, a * y[0] + b * y[1], a * y[1] - b * y[0]])
    }
}

/// Direction of integration along the x-axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// A solution of the equation on one piece, stored as `(x, u, w = p u')` samples
/// with dense output between them.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    piece: Piece,
    lambda: f64,
    direction: Direction,
    p: Expr,
    run: DenseRun<2>,
}

impl Trajectory {
    pub fn piece(&self) -> Piece {
        self.piece
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn x_start(&self) -> f64 {
        self.run.start()
    }

    pub fn x_end(&self) -> f64 {
        self.run.end()
    }

    pub fn len(&self) -> usize {
        self.run.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.run.xs.is_empty()
    }

    /// Stored samples as `(x, u, w)`.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.run
            .xs
            .iter()
            .zip(&self.run.states)
            .map(|(&x, s)| (x, s[0], s[1]))
    }

    /// `(u, w)` at `x` with `w = p u'`.
    pub fn state(&self, x: f64) -> Result<[f64; 2]> {
        self.run.eval(x)
    }

    /// `(u, u')` at `x`.
    pub fn sample(&self, x: f64) -> Result<(f64, f64)> {
        let [u, w] = self.state(x)?;
        let p = self.p.eval(x)?;
        Ok((u, w / p))
    }

    pub fn p_at(&self, x: f64) -> Result<f64> {
        Ok(self.p.eval(x)?)
    }

    /// State at the end of the integration span.
    pub fn end_state(&self) -> [f64; 2] {
        *self.run.states.last().unwrap()
    }

    pub fn start_state(&self) -> [f64; 2] {
        self.run.states[0]
    }
}

fn check_span(problem: &ValidatedProblem, piece: Piece, x_start: f64, x_end: f64) -> Result<()> {
    let (a, b) = problem.interval(piece);
    for x in [x_start, x_end] {
        if !(a <= x && x <= b) {
            return Err(Error::InvalidArgument(format!(
                "x = {x} outside piece {piece} = [{a}, {b}]"
            )));
        }
    }
    if x_start == x_end {
        return Err(Error::InvalidArgument("x_start equals x_end".into()));
    }
    Ok(())
}

/// Integrate on `piece` from `x_start` to `x_end` with `u(x_start) = u0`, `u'(x_start) = up0`.
pub fn integrate_ivp(
    problem: &ValidatedProblem,
    piece: Piece,
    lambda: f64,
    x_start: f64,
    x_end: f64,
    u0: f64,
    up0: f64,
    tol: Tolerances,
) -> Result<Trajectory> {
    check_span(problem, piece, x_start, x_end)?;
    let w0 = problem.p(piece, x_start)? * up0;
    integrate_state(problem, piece, lambda, x_start, x_end, [u0, w0], tol)
}

/// Like [`integrate_ivp`] but seeded with the quasi-derivative `w0 = p u'` directly.
pub fn integrate_state(
    problem: &ValidatedProblem,
    piece: Piece,
    lambda: f64,
    x_start: f64,
    x_end: f64,
    y0: [f64; 2],
    tol: Tolerances,
) -> Result<Trajectory> {
    check_span(problem, piece, x_start, x_end)?;
    let coefs = PieceCoefficients::new(problem, piece);
    let run = dopri5(
        |x, y| coefs.rhs(lambda, x, y),
        x_start,
        x_end,
        y0,
        tol,
        true,
    )?;
    Ok(Trajectory {
        piece,
        lambda,
        direction: if x_end > x_start {
            Direction::Forward
        } else {
            Direction::Backward
        },
        p: problem.spec().p[piece.index()].clone(),
        run,
    })
}

/// End state only, without storing the trajectory.
pub(crate) fn shoot_state(
    problem: &ValidatedProblem,
    piece: Piece,
    lambda: f64,
    x_start: f64,
    x_end: f64,
    y0: [f64; 2],
    tol: Tolerances,
) -> Result<[f64; 2]> {
    let coefs = PieceCoefficients::new(problem, piece);
    let run = dopri5(
        |x, y| coefs.rhs(lambda, x, y),
        x_start,
        x_end,
        y0,
        tol,
        false,
    )?;
    Ok(*run.states.last().unwrap())
}

/// Complex-lambda counterpart of [`shoot_state`] on the doubled real system.
pub(crate) fn shoot_state_complex(
    problem: &ValidatedProblem,
    piece: Piece,
    lambda: (f64, f64),
    x_start: f64,
    x_end: f64,
    y0: [f64; 4],
    tol: Tolerances,
) -> Result<[f64; 4]> {
    let coefs = PieceCoefficients::new(problem, piece);
    let run = dopri5(
        |x, y| coefs.rhs_complex(lambda.0, lambda.1, x, y),
        x_start,
        x_end,
        y0,
        tol,
        false,
    )?;
    Ok(*run.states.last().unwrap())
}
