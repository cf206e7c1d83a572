//! The left solution `phi` (seeded at x = -1) and right solution `chi` (seeded at
//! x = 1), carried across the breakpoints by the transmission jump maps, and their
//! Wronskian. The characteristic function `D(lambda)` is the Wronskian on the
//! right piece evaluated at x = 1; its zeros are the eigenvalues.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ivp::{integrate_state, shoot_state, shoot_state_complex, Tolerances, Trajectory};
use crate::problem::{Piece, Side, ValidatedProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionKind {
    /// `phi`: `u(-1) = 0`, `u'(-1) = 1`.
    Left,
    /// `chi`: `u(1) = a2 lambda + b2`, `u'(1) = a1 lambda + b1`.
    Right,
}

/// A solution of the equation on all three pieces, optionally scaled.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseSolution {
    kind: SolutionKind,
    lambda: f64,
    pieces: [Trajectory; 3],
    scale: f64,
    breakpoints: [f64; 2],
}

impl PiecewiseSolution {
    pub fn kind(&self) -> SolutionKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn trajectory(&self, piece: Piece) -> &Trajectory {
        &self.pieces[piece.index()]
    }

    /// Copy multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> PiecewiseSolution {
        PiecewiseSolution {
            scale: self.scale * factor,
            ..self.clone()
        }
    }

    /// `(u, w)` on a given piece, `w = p u'`; `x` must lie in the closed piece.
    pub fn state_on(&self, piece: Piece, x: f64) -> Result<[f64; 2]> {
        let [u, w] = self.pieces[piece.index()].state(x)?;
        Ok([self.scale * u, self.scale * w])
    }

    /// `(u, u')` on a given piece.
    pub fn value_on(&self, piece: Piece, x: f64) -> Result<(f64, f64)> {
        let (u, up) = self.pieces[piece.index()].sample(x)?;
        Ok((self.scale * u, self.scale * up))
    }

    /// `(u, u')` at `x`; breakpoints need a side.
    pub fn value(&self, x: f64, side: Option<Side>) -> Result<(f64, f64)> {
        self.value_on(self.piece_at(x, side)?, x)
    }

    fn piece_at(&self, x: f64, side: Option<Side>) -> Result<Piece> {
        let [h1, h2] = self.breakpoints;
        if !(-1.0..=1.0).contains(&x) {
            return Err(Error::InvalidArgument(format!(
                "x = {x} is outside [-1, 1]"
            )));
        }
        let at_break = |h: f64, left: Piece, right: Piece| match side {
            Some(Side::Minus) => Ok(left),
            Some(Side::Plus) => Ok(right),
            None => Err(Error::BreakpointWithoutSide { x: h }),
        };
        if x == h1 {
            at_break(h1, Piece::Left, Piece::Middle)
        } else if x == h2 {
            at_break(h2, Piece::Middle, Piece::Right)
        } else if x < h1 {
            Ok(Piece::Left)
        } else if x < h2 {
            Ok(Piece::Middle)
        } else {
            Ok(Piece::Right)
        }
    }
}

/// Wronskian `phi chi' - phi' chi` at a point of a given piece.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WronskianValue {
    pub x: f64,
    pub piece: Piece,
    pub value: f64,
}

fn cross_forward(
    problem: &ValidatedProblem,
    breakpoint: usize,
    state: [f64; 2],
) -> Result<[f64; 2]> {
    let (value_ratio, deriv_ratio) = problem.jump_ratios(breakpoint);
    let lim = problem.p_limits();
    let (p_minus, p_plus) = if breakpoint == 0 {
        (lim.h1_minus, lim.h1_plus)
    } else {
        (lim.h2_minus, lim.h2_plus)
    };
    Ok([
        value_ratio * state[0],
        p_plus * deriv_ratio * state[1] / p_minus,
    ])
}

fn cross_backward(
    problem: &ValidatedProblem,
    breakpoint: usize,
    state: [f64; 2],
) -> Result<[f64; 2]> {
    let (value_ratio, deriv_ratio) = problem.jump_ratios(breakpoint);
    let lim = problem.p_limits();
    let (p_minus, p_plus) = if breakpoint == 0 {
        (lim.h1_minus, lim.h1_plus)
    } else {
        (lim.h2_minus, lim.h2_plus)
    };
    Ok([
        state[0] / value_ratio,
        p_minus * state[1] / (deriv_ratio * p_plus),
    ])
}

/// Seed of `chi` at x = 1 as `(u, w)`.
fn right_seed(problem: &ValidatedProblem, lambda: f64) -> [f64; 2] {
    let [a1, a2] = problem.alpha();
    let [b1, b2] = problem.beta();
    [a2 * lambda + b2, problem.p_at_one() * (a1 * lambda + b1)]
}

pub fn build_phi(
    problem: &ValidatedProblem,
    lambda: f64,
    tol: Tolerances,
) -> Result<PiecewiseSolution> {
    let (h1, h2) = (problem.h1(), problem.h2());
    let p_start = problem.p(Piece::Left, -1.0)?;
    let first = integrate_state(problem, Piece::Left, lambda, -1.0, h1, [0.0, p_start], tol)?;
    let seed = cross_forward(problem, 0, first.end_state())?;
    let second = integrate_state(problem, Piece::Middle, lambda, h1, h2, seed, tol)?;
    let seed = cross_forward(problem, 1, second.end_state())?;
    let third = integrate_state(problem, Piece::Right, lambda, h2, 1.0, seed, tol)?;
    Ok(PiecewiseSolution {
        kind: SolutionKind::Left,
        lambda,
        pieces: [first, second, third],
        scale: 1.0,
        breakpoints: [h1, h2],
    })
}

pub fn build_chi(
    problem: &ValidatedProblem,
    lambda: f64,
    tol: Tolerances,
) -> Result<PiecewiseSolution> {
    let (h1, h2) = (problem.h1(), problem.h2());
    let third = integrate_state(
        problem,
        Piece::Right,
        lambda,
        1.0,
        h2,
        right_seed(problem, lambda),
        tol,
    )?;
    let seed = cross_backward(problem, 1, third.end_state())?;
    let second = integrate_state(problem, Piece::Middle, lambda, h2, h1, seed, tol)?;
    let seed = cross_backward(problem, 0, second.end_state())?;
    let first = integrate_state(problem, Piece::Left, lambda, h1, -1.0, seed, tol)?;
    Ok(PiecewiseSolution {
        kind: SolutionKind::Right,
        lambda,
        pieces: [first, second, third],
        scale: 1.0,
        breakpoints: [h1, h2],
    })
}

/// `phi chi' - phi' chi` at `x`. At a breakpoint `side` selects the one-sided limit.
pub fn wronskian(
    phi: &PiecewiseSolution,
    chi: &PiecewiseSolution,
    x: f64,
    side: Option<Side>,
) -> Result<WronskianValue> {
    if phi.lambda != chi.lambda {
        return Err(Error::InvalidArgument(format!(
            "Wronskian of solutions at different lambda ({} vs {})",
            phi.lambda, chi.lambda
        )));
    }
    let piece = phi.piece_at(x, side)?;
    Ok(WronskianValue {
        x,
        piece,
        value: wronskian_on(phi, chi, piece, x)?,
    })
}

pub(crate) fn wronskian_on(
    phi: &PiecewiseSolution,
    chi: &PiecewiseSolution,
    piece: Piece,
    x: f64,
) -> Result<f64> {
    let [u, wu] = phi.state_on(piece, x)?;
    let [v, wv] = chi.state_on(piece, x)?;
    let p = phi.trajectory(piece).p_at(x)?;
    Ok((u * wv - wu * v) / p)
}

/// Abel constant `p(x) (phi chi' - phi' chi)` of a piece, read at its midpoint.
pub(crate) fn abel_constant(
    problem: &ValidatedProblem,
    phi: &PiecewiseSolution,
    chi: &PiecewiseSolution,
    piece: Piece,
) -> Result<f64> {
    let (a, b) = problem.interval(piece);
    let x = 0.5 * (a + b);
    let [u, wu] = phi.state_on(piece, x)?;
    let [v, wv] = chi.state_on(piece, x)?;
    Ok(u * wv - wu * v)
}

/// `phi` carried to x = 1 without storing the trajectory, as `(u, w)`.
pub(crate) fn phi_at_one(
    problem: &ValidatedProblem,
    lambda: f64,
    tol: Tolerances,
) -> Result<[f64; 2]> {
    let (h1, h2) = (problem.h1(), problem.h2());
    let p_start = problem.p(Piece::Left, -1.0)?;
    let s = shoot_state(problem, Piece::Left, lambda, -1.0, h1, [0.0, p_start], tol)?;
    let s = shoot_state(
        problem,
        Piece::Middle,
        lambda,
        h1,
        h2,
        cross_forward(problem, 0, s)?,
        tol,
    )?;
    shoot_state(
        problem,
        Piece::Right,
        lambda,
        h2,
        1.0,
        cross_forward(problem, 1, s)?,
        tol,
    )
}

/// Characteristic function `D(lambda) = omega_3(1, lambda)`.
///
/// `chi` equals its seed at x = 1, so only `phi` needs to be integrated:
/// `D = phi(1) (a1 lambda + b1) - phi'(1) (a2 lambda + b2)`.
pub fn characteristic(problem: &ValidatedProblem, lambda: f64, tol: Tolerances) -> Result<f64> {
    let [u, w] = phi_at_one(problem, lambda, tol)?;
    let [a1, a2] = problem.alpha();
    let [b1, b2] = problem.beta();
    let up = w / problem.p_at_one();
    Ok(u * (a1 * lambda + b1) - up * (a2 * lambda + b2))
}

/// Characteristic function at complex `lambda`, integrating the real and imaginary
/// parts as one doubled real system.
pub fn characteristic_complex(
    problem: &ValidatedProblem,
    lambda: Complex64,
    tol: Tolerances,
) -> Result<Complex64> {
    let (h1, h2) = (problem.h1(), problem.h2());
    let p_start = problem.p(Piece::Left, -1.0)?;
    let cross = |bp: usize, s: [f64; 4]| -> Result<[f64; 4]> {
        let re = cross_forward(problem, bp, [s[0], s[2]])?;
        let im = cross_forward(problem, bp, [s[1], s[3]])?;
        Ok([re[0], im[0], re[1], im[1]])
    };
    let parts = (lambda.re, lambda.im);
    let s = shoot_state_complex(
        problem,
        Piece::Left,
        parts,
        -1.0,
        h1,
        [0.0, 0.0, p_start, 0.0],
        tol,
    )?;
    let s = shoot_state_complex(problem, Piece::Middle, parts, h1, h2, cross(0, s)?, tol)?;
    let s = shoot_state_complex(problem, Piece::Right, parts, h2, 1.0, cross(1, s)?, tol)?;
    let p1 = problem.p_at_one();
    let u = Complex64::new(s[0], s[1]);
    let up = Complex64::new(s[2], s[3]) / p1;
    let [a1, a2] = problem.alpha();
    let [b1, b2] = problem.beta();
    Ok(u * (lambda * a1 + b1) - up * (lambda * a2 + b2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::problem::{validate_problem, ProblemSpec};

    fn cfg_a() -> ProblemSpec {
        ProblemSpec::constant(
            -1.0 / 3.0,
            1.0 / 3.0,
            1.0,
            1.0,
            0.0,
            [0.0, -1.0],
            [1.0, 0.0],
        )
    }

    #[test]
    fn phi_and_chi_are_linear_at_zero_lambda() {
        let p = validate_problem(cfg_a()).unwrap();
        let tol = Tolerances::default();
        let phi = build_phi(&p, 0.0, tol).unwrap();
        let chi = build_chi(&p, 0.0, tol).unwrap();
        for k in 0..=40 {
            let x = -1.0 + 0.05 * k as f64;
            let side = Some(Side::Minus);
            let (u, up) = phi.value(x, side).unwrap();
            assert!((u - (x + 1.0)).abs() < 1e-10 && (up - 1.0).abs() < 1e-10);
            let (v, vp) = chi.value(x, side).unwrap();
            assert!((v - (x - 1.0)).abs() < 1e-10 && (vp - 1.0).abs() < 1e-10);
            let w = wronskian(&phi, &chi, x, side).unwrap();
            assert!((w.value - 2.0).abs() < 1e-10);
        }
        let minus = phi.value(p.h1(), Some(Side::Minus)).unwrap();
        let plus = phi.value(p.h1(), Some(Side::Plus)).unwrap();
        assert_eq!(minus, plus);
        assert!(matches!(
            phi.value(p.h1(), None),
            Err(Error::BreakpointWithoutSide { .. })
        ));
        assert!((characteristic(&p, 0.0, tol).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn jump_ratios_are_applied() {
        let mut s = cfg_a();
        s.delta[0] = 2.0;
        s.delta[2] = 2.0;
        let p = validate_problem(s).unwrap();
        let tol = Tolerances::default();
        let phi = build_phi(&p, 0.0, tol).unwrap();
        let (minus, _) = phi.value(p.h1(), Some(Side::Minus)).unwrap();
        let (plus, _) = phi.value(p.h1(), Some(Side::Plus)).unwrap();
        assert_eq!(plus, 0.5 * minus);
        let chi = build_chi(&p, 0.0, tol).unwrap();
        let (minus, _) = chi.value(p.h2(), Some(Side::Minus)).unwrap();
        let (plus, _) = chi.value(p.h2(), Some(Side::Plus)).unwrap();
        assert!((minus - 2.0 * plus).abs() < 1e-15);
    }

    #[test]
    fn chi_satisfies_right_condition_for_any_lambda() {
        let p = validate_problem(cfg_a()).unwrap();
        for lambda in [-3.0, 0.0, 2.5, 40.0] {
            let chi = build_chi(&p, lambda, Tolerances::default()).unwrap();
            let (u, up) = chi.value(1.0, None).unwrap();
            assert_eq!(u + lambda * up, 0.0);
        }
    }

    #[test]
    fn derivative_jump_uses_derivative_not_flux() {
        let mut s = cfg_a();
        s.p[1] = Expr::constant(4.0);
        s.p[2] = Expr::constant(4.0);
        s.delta[0] = 2.0;
        s.delta[1] = 2.0;
        let p = validate_problem(s).unwrap();
        let phi = build_phi(&p, 1.5, Tolerances::default()).unwrap();
        let (_, dm) = phi.value(p.h1(), Some(Side::Minus)).unwrap();
        let (_, dp) = phi.value(p.h1(), Some(Side::Plus)).unwrap();
        assert!((dp - 0.5 * dm).abs() < 1e-14);
    }

    #[test]
    fn complex_characteristic_reduces_to_real() {
        let p = validate_problem(cfg_a()).unwrap();
        let tol = Tolerances::default();
        let d = characteristic_complex(&p, Complex64::new(7.0, 0.0), tol).unwrap();
        assert!((d.re - characteristic(&p, 7.0, tol).unwrap()).abs() < 1e-10);
        assert_eq!(d.im, 0.0);
    }
}
