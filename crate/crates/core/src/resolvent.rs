//! Green's kernel and the resolvent `(K - lambda I)^{-1}` at a real non-eigenvalue.
//!
//! `U1(x) = chi(x) int_{-1}^x phi w T1 dy + phi(x) int_x^1 chi w T1 dy - (T2 / D) phi(x)`
//! with `w(y) = -r(y) / kappa_i` on piece `i`, where `kappa_i = p (phi chi' - phi' chi)`
//! is the Abel constant of the piece. This solves `l U1 - lambda U1 = T1`, `U1(-1) = 0`,
//! the transmission conditions, and `-(U1)_1 - lambda (U1)'_1 = T2`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fundamental::{abel_constant, build_chi, build_phi, wronskian_on, PiecewiseSolution};
use crate::hilbert::{first_derivative, l_operator, HilbertElement, PiecewiseFunction};
use crate::ivp::Tolerances;
use crate::problem::{Piece, ValidatedProblem};
use crate::quadrature::{integrate, panel};

/// `|D(lambda)| / max(1, |lambda|)` below which `lambda` counts as an eigenvalue.
pub const NEAR_EIGENVALUE_THRESHOLD: f64 = 1e-6;

/// Panels per piece for the cumulative integrals of the resolvent.
const PANELS: usize = 16;

#[derive(Debug, Clone)]
pub struct GreenKernel {
    problem: ValidatedProblem,
    lambda: f64,
    phi: Arc<PiecewiseSolution>,
    chi: Arc<PiecewiseSolution>,
    d: f64,
    kappa: [f64; 3],
}

pub fn build_kernel(problem: &ValidatedProblem, lambda: f64) -> Result<GreenKernel> {
    build_kernel_with(problem, lambda, Tolerances::default())
}

pub fn build_kernel_with(
    problem: &ValidatedProblem,
    lambda: f64,
    tol: Tolerances,
) -> Result<GreenKernel> {
    let phi = build_phi(problem, lambda, tol)?;
    let chi = build_chi(problem, lambda, tol)?;
    let d = wronskian_on(&phi, &chi, Piece::Right, 1.0)?;
    if d.abs() < NEAR_EIGENVALUE_THRESHOLD * lambda.abs().max(1.0) {
        return Err(Error::NearEigenvalue { lambda, d });
    }
    let mut kappa = [0.0; 3];
    for piece in Piece::ALL {
        kappa[piece.index()] = abel_constant(problem, &phi, &chi, piece)?;
    }
    Ok(GreenKernel {
        problem: problem.clone(),
        lambda,
        phi: Arc::new(phi),
        chi: Arc::new(chi),
        d,
        kappa,
    })
}

impl GreenKernel {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `D(lambda) = omega_3(1, lambda)`.
    pub fn d(&self) -> f64 {
        self.d
    }

    /// Abel constants `p omega_i` of the three pieces.
    pub fn kappa(&self) -> [f64; 3] {
        self.kappa
    }

    pub fn phi(&self) -> &PiecewiseSolution {
        &self.phi
    }

    pub fn chi(&self) -> &PiecewiseSolution {
        &self.chi
    }

    fn weight(&self, piece: Piece, y: f64) -> Result<f64> {
        Ok(-self.problem.r(piece, y)? / self.kappa[piece.index()])
    }

    fn ordered(&self, x: f64, y: f64) -> Result<(Piece, Piece, bool)> {
        let px = self.problem.locate(x)?;
        let py = self.problem.locate(y)?;
        Ok((px, py, y <= x))
    }

    /// Kernel `G(x, y)` with `U1(x) = int G(x, y) T1(y) dy` (plus the boundary term).
    /// Neither argument may be a breakpoint.
    pub fn value(&self, x: f64, y: f64) -> Result<f64> {
        let (px, py, below) = self.ordered(x, y)?;
        let w = self.weight(py, y)?;
        Ok(self.product(px, x, py, y, below)? * w)
    }

    /// `G(x, y) / r(y)`: the kernel with respect to the measure `r dy`. Symmetric in
    /// `(x, y)` whenever the Abel constants of the three pieces coincide.
    pub fn symmetric_value(&self, x: f64, y: f64) -> Result<f64> {
        let (px, py, below) = self.ordered(x, y)?;
        Ok(-self.product(px, x, py, y, below)? / self.kappa[py.index()])
    }

    fn product(&self, px: Piece, x: f64, py: Piece, y: f64, below: bool) -> Result<f64> {
        Ok(if below {
            self.chi.eval(px, x)? * self.phi.eval(py, y)?
        } else {
            self.phi.eval(px, x)? * self.chi.eval(py, y)?
        })
    }

    /// `U = (K - lambda I)^{-1} T`.
    pub fn apply(&self, t: &HilbertElement) -> Result<HilbertElement> {
        let mut left = [[0.0; PANELS + 1]; 3];
        let mut right = [[0.0; PANELS + 1]; 3];
        for piece in Piece::ALL {
            let edges = panel_edges(&self.problem, piece);
            let i = piece.index();
            for k in 0..PANELS {
                let (a, b) = (edges[k], edges[k + 1]);
                left[i][k + 1] = left[i][k]
                    + integrate(|y| self.integrand(&self.phi, t, piece, y), a, b, 1e-13)?;
                right[i][k + 1] = right[i][k]
                    + integrate(|y| self.integrand(&self.chi, t, piece, y), a, b, 1e-13)?;
            }
        }
        let u = ResolventFunction {
            kernel: self.clone(),
            t: t.function().clone(),
            left,
            right,
            boundary: -t.scalar() / self.d,
        };
        let (u1, u1p) = (
            u.eval(Piece::Right, 1.0)?,
            u.derivative_value(Piece::Right, 1.0)?,
        );
        let scalar = self.problem.boundary_forms(u1, u1p).u1p_form;
        Ok(HilbertElement::new(Arc::new(u), scalar))
    }

    fn integrand(
        &self,
        sol: &PiecewiseSolution,
        t: &HilbertElement,
        piece: Piece,
        y: f64,
    ) -> Result<f64> {
        Ok(sol.eval(piece, y)? * self.weight(piece, y)? * t.eval(piece, y)?)
    }
}

fn panel_edges(problem: &ValidatedProblem, piece: Piece) -> [f64; PANELS + 1] {
    let (a, b) = problem.interval(piece);
    let mut edges = [0.0; PANELS + 1];
    for (k, e) in edges.iter_mut().enumerate() {
        *e = if k == PANELS {
            b
        } else {
            a + (b - a) * k as f64 / PANELS as f64
        };
    }
    edges
}

/// The function component of a resolvent solution, evaluated from cumulative
/// panel integrals.
struct ResolventFunction {
    kernel: GreenKernel,
    t: Arc<dyn PiecewiseFunction>,
    /// `left[i][k] = int_{a_i}^{edge_k} phi w T1` on piece `i`.
    left: [[f64; PANELS + 1]; 3],
    /// `right[i][k] = int_{a_i}^{edge_k} chi w T1` on piece `i`.
    right: [[f64; PANELS + 1]; 3],
    boundary: f64,
}

impl ResolventFunction {
    /// `(int_{-1}^x phi w T1, int_x^1 chi w T1)`.
    fn integrals(&self, piece: Piece, x: f64) -> Result<(f64, f64)> {
        let problem = &self.kernel.problem;
        let i = piece.index();
        let edges = panel_edges(problem, piece);
        let k = edges[..PANELS]
            .partition_point(|&e| e <= x)
            .saturating_sub(1);
        let partial = |sol: &PiecewiseSolution| -> Result<f64> {
            if x == edges[k] {
                return Ok(0.0);
            }
            Ok(panel(
                &mut |y| {
                    Ok(sol.eval(piece, y)?
                        * self.kernel.weight(piece, y)?
                        * self.t.eval(piece, y)?)
                },
                edges[k],
                x,
            )?
            .0)
        };
        let before: f64 = (0..i).map(|j| self.left[j][PANELS]).sum();
        let after: f64 = (i + 1..3).map(|j| self.right[j][PANELS]).sum();
        let a = before + self.left[i][k] + partial(&self.kernel.phi)?;
        let within = self.right[i][k] + partial(&self.kernel.chi)?;
        let b = (self.right[i][PANELS] - within) + after;
        Ok((a, b))
    }

    fn derivative_value(&self, piece: Piece, x: f64) -> Result<f64> {
        let (a, b) = self.integrals(piece, x)?;
        let (_, chi_p) = self.kernel.chi.value_on(piece, x)?;
        let (_, phi_p) = self.kernel.phi.value_on(piece, x)?;
        Ok(chi_p * a + phi_p * (b + self.boundary))
    }
}

impl PiecewiseFunction for ResolventFunction {
    fn eval(&self, piece: Piece, x: f64) -> Result<f64> {
        let (a, b) = self.integrals(piece, x)?;
        Ok(self.kernel.chi.eval(piece, x)? * a
            + self.kernel.phi.eval(piece, x)? * (b + self.boundary))
    }

    fn derivative(&self, piece: Piece, x: f64) -> Option<Result<f64>> {
        Some(self.derivative_value(piece, x))
    }
}

/// `(K - lambda I)^{-1} T`.
pub fn apply_resolvent(
    problem: &ValidatedProblem,
    lambda: f64,
    t: &HilbertElement,
) -> Result<HilbertElement> {
    build_kernel(problem, lambda)?.apply(t)
}

/// Defects of a candidate solution `U` of `(K - lambda I) U = T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventResidual {
    /// `max |l U1 - lambda U1 - T1|` over interior sample points of each piece.
    pub ode_defect: f64,
    /// `|U1(-1)|`.
    pub bc_left: f64,
    /// `|-(U1)_1 - lambda (U1)'_1 - T2|`.
    pub bc_right: f64,
    /// `|g1 U(h1-0) - d1 U(h1+0)|`, `|g2 U'(h1-0) - d2 U'(h1+0)|`, and the same at `h2`.
    pub trans_defects: [f64; 4],
}

impl ResolventResidual {
    pub fn max(&self) -> f64 {
        self.trans_defects.iter().copied().fold(
            self.ode_defect.max(self.bc_left).max(self.bc_right),
            f64::max,
        )
    }
}

/// Sample points per piece used for the differential-equation defect.
pub const RESIDUAL_SAMPLES: usize = 101;

pub fn resolvent_residual(
    problem: &ValidatedProblem,
    lambda: f64,
    t: &HilbertElement,
    u: &HilbertElement,
) -> Result<ResolventResidual> {
    let f = u.function().as_ref();
    let mut ode_defect: f64 = 0.0;
    for piece in Piece::ALL {
        let (a, b) = problem.interval(piece);
        for k in 1..RESIDUAL_SAMPLES {
            let x = a + (b - a) * k as f64 / RESIDUAL_SAMPLES as f64;
            let lu = l_operator(problem, f, piece, x)?;
            let defect = lu - lambda * f.eval(piece, x)? - t.eval(piece, x)?;
            ode_defect = ode_defect.max(defect.abs());
        }
    }
    let bc_left = f.eval(Piece::Left, -1.0)?.abs();
    let u1 = f.eval(Piece::Right, 1.0)?;
    let u1p = first_derivative(problem, f, Piece::Right, 1.0)?;
    let forms = problem.boundary_forms(u1, u1p);
    let bc_right = (-forms.u1_form - lambda * forms.u1p_form - t.scalar()).abs();
    let g = problem.gamma();
    let d = problem.delta();
    let mut trans_defects = [0.0; 4];
    for (k, (h, before, after)) in [
        (problem.h1(), Piece::Left, Piece::Middle),
        (problem.h2(), Piece::Middle, Piece::Right),
    ]
    .into_iter()
    .enumerate()
    {
        let (vm, vp) = (f.eval(before, h)?, f.eval(after, h)?);
        let (dm, dp) = (
            first_derivative(problem, f, before, h)?,
            first_derivative(problem, f, after, h)?,
        );
        trans_defects[2 * k] = (g[2 * k] * vm - d[2 * k] * vp).abs();
        trans_defects[2 * k + 1] = (g[2 * k + 1] * dm - d[2 * k + 1] * dp).abs();
    }
    Ok(ResolventResidual {
        ode_defect,
        bc_left,
        bc_right,
        trans_defects,
    })
}
