//! Elements of `H = L2[-1, 1] (+) R` with the weighted inner product
//! `<T, G> = sum_i int T1 G1 r dx + (p(1)/rho) T2 G2`, and the operator `K`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fundamental::PiecewiseSolution;
use crate::problem::{Piece, ValidatedProblem};
use crate::quadrature::{integrate, DEFAULT_QUAD_TOL};

/// Finite-difference step used by [`apply_k`].
pub const FD_STEP: f64 = 1e-4;

/// Tolerance on the membership conditions of the operator domain.
pub const DOMAIN_TOL: f64 = 1e-8;

/// A real function given separately on each of the three pieces.
///
/// `eval` is only called with `x` inside the closed interval of `piece`.
pub trait PiecewiseFunction: Send + Sync {
    fn eval(&self, piece: Piece, x: f64) -> Result<f64>;

    /// Exact first derivative, for representations that carry one.
    fn derivative(&self, _piece: Piece, _x: f64) -> Option<Result<f64>> {
        None
    }
}

impl PiecewiseFunction for PiecewiseSolution {
    fn eval(&self, piece: Piece, x: f64) -> Result<f64> {
        Ok(self.state_on(piece, x)?[0])
    }

    fn derivative(&self, piece: Piece, x: f64) -> Option<Result<f64>> {
        Some(self.value_on(piece, x).map(|(_, up)| up))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroFunction;

impl PiecewiseFunction for ZeroFunction {
    fn eval(&self, _: Piece, _: f64) -> Result<f64> {
        Ok(0.0)
    }

    fn derivative(&self, _: Piece, _: f64) -> Option<Result<f64>> {
        Some(Ok(0.0))
    }
}

/// One expression per piece.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprFunction {
    pub pieces: [Expr; 3],
}

impl ExprFunction {
    pub fn uniform(expr: Expr) -> Self {
        ExprFunction {
            pieces: [expr.clone(), expr.clone(), expr],
        }
    }
}

impl PiecewiseFunction for ExprFunction {
    fn eval(&self, piece: Piece, x: f64) -> Result<f64> {
        Ok(self.pieces[piece.index()].eval(x)?)
    }
}

/// Wraps a closure `(piece, x) -> value`.
pub struct FnFunction<F>(pub F);

impl<F> PiecewiseFunction for FnFunction<F>
where
    F: Fn(Piece, f64) -> f64 + Send + Sync,
{
    fn eval(&self, piece: Piece, x: f64) -> Result<f64> {
        Ok((self.0)(piece, x))
    }
}

/// Polynomial on each piece in the local variable `t = x - a_i`, `a_i` the left end.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePolynomial {
    origins: [f64; 3],
    coeffs: [Vec<f64>; 3],
}

impl PiecewisePolynomial {
    pub fn new(problem: &ValidatedProblem, coeffs: [Vec<f64>; 3]) -> Self {
        PiecewisePolynomial {
            origins: [-1.0, problem.h1(), problem.h2()],
            coeffs,
        }
    }

    pub fn coefficients(&self, piece: Piece) -> &[f64] {
        &self.coeffs[piece.index()]
    }

    fn horner(&self, piece: Piece, x: f64) -> (f64, f64) {
        let t = x - self.origins[piece.index()];
        let mut v = 0.0;
        let mut d = 0.0;
        for &c in self.coeffs[piece.index()].iter().rev() {
            d = d * t + v;
            v = v * t + c;
        }
        (v, d)
    }
}

impl PiecewiseFunction for PiecewisePolynomial {
    fn eval(&self, piece: Piece, x: f64) -> Result<f64> {
        Ok(self.horner(piece, x).0)
    }

    fn derivative(&self, piece: Piece, x: f64) -> Option<Result<f64>> {
        Some(Ok(self.horner(piece, x).1))
    }
}

/// `sum_k c_k f_k`.
#[derive(Clone, Default)]
pub struct LinearCombination {
    terms: Vec<(f64, Arc<dyn PiecewiseFunction>)>,
}

impl LinearCombination {
    pub fn new(terms: Vec<(f64, Arc<dyn PiecewiseFunction>)>) -> Self {
        LinearCombination { terms }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

impl PiecewiseFunction for LinearCombination {
    fn eval(&self, piece: Piece, x: f64) -> Result<f64> {
        let mut sum = 0.0;
        for (c, f) in &self.terms {
            sum += c * f.eval(piece, x)?;
        }
        Ok(sum)
    }

    fn derivative(&self, piece: Piece, x: f64) -> Option<Result<f64>> {
        let mut sum = 0.0;
        for (c, f) in &self.terms {
            match f.derivative(piece, x)? {
                Ok(d) => sum += c * d,
                Err(e) => return Some(Err(e)),
            }
        }
        Some(Ok(sum))
    }
}

/// An element `(T1, T2)` of the space: a function component and a scalar component.
#[derive(Clone)]
pub struct HilbertElement {
    function: Arc<dyn PiecewiseFunction>,
    scalar: f64,
}

impl fmt::Debug for HilbertElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HilbertElement")
            .field("scalar", &self.scalar)
            .finish_non_exhaustive()
    }
}

impl HilbertElement {
    pub fn new(function: Arc<dyn PiecewiseFunction>, scalar: f64) -> Self {
        HilbertElement { function, scalar }
    }

    pub fn from_fn<F>(f: F, scalar: f64) -> Self
    where
        F: Fn(Piece, f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(Arc::new(FnFunction(f)), scalar)
    }

    pub fn zero() -> Self {
        Self::new(Arc::new(ZeroFunction), 0.0)
    }

    pub fn function(&self) -> &Arc<dyn PiecewiseFunction> {
        &self.function
    }

    pub fn scalar(&self) -> f64 {
        self.scalar
    }

    pub fn eval(&self, piece: Piece, x: f64) -> Result<f64> {
        self.function.eval(piece, x)
    }

    /// `sum_k c_k E_k`, both components.
    pub fn combine(terms: &[(f64, &HilbertElement)]) -> HilbertElement {
        let scalar = terms.iter().map(|(c, e)| c * e.scalar).sum();
        let function = LinearCombination::new(
            terms
                .iter()
                .map(|(c, e)| (*c, e.function.clone()))
                .collect(),
        );
        HilbertElement::new(Arc::new(function), scalar)
    }

    /// `self - other`.
    pub fn sub(&self, other: &HilbertElement) -> HilbertElement {
        Self::combine(&[(1.0, self), (-1.0, other)])
    }

    pub fn scale(&self, factor: f64) -> HilbertElement {
        Self::combine(&[(factor, self)])
    }
}

/// `sum_i int_{piece i} f g r dx`.
pub fn weighted_l2_inner(
    problem: &ValidatedProblem,
    f: &dyn PiecewiseFunction,
    g: &dyn PiecewiseFunction,
) -> Result<f64> {
    let mut total = 0.0;
    for piece in Piece::ALL {
        let (a, b) = problem.interval(piece);
        total += integrate(
            |x| {
                let u = f.eval(piece, x)?;
                let v = g.eval(piece, x)?;
                Ok(u * v * problem.r(piece, x)?)
            },
            a,
            b,
            DEFAULT_QUAD_TOL / 3.0,
        )?;
    }
    Ok(total)
}

pub fn inner_product(
    problem: &ValidatedProblem,
    t: &HilbertElement,
    g: &HilbertElement,
) -> Result<f64> {
    let integral = weighted_l2_inner(problem, t.function.as_ref(), g.function.as_ref())?;
    Ok(integral + problem.boundary_weight() * t.scalar * g.scalar)
}

pub fn h_norm(problem: &ValidatedProblem, t: &HilbertElement) -> Result<f64> {
    Ok(inner_product(problem, t, t)?.max(0.0).sqrt())
}

/// Second-order derivative of `g` at `x` within `[a, b]`: central where it fits,
/// one-sided near the ends.
fn difference<G>(g: &G, x: f64, a: f64, b: f64) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    let h = FD_STEP.min(0.25 * (b - a));
    if x - h >= a && x + h <= b {
        Ok((g(x + h)? - g(x - h)?) / (2.0 * h))
    } else if x - h < a {
        Ok((-3.0 * g(x)? + 4.0 * g(x + h)? - g(x + 2.0 * h)?) / (2.0 * h))
    } else {
        Ok((3.0 * g(x)? - 4.0 * g(x - h)? + g(x - 2.0 * h)?) / (2.0 * h))
    }
}

pub(crate) fn first_derivative(
    problem: &ValidatedProblem,
    f: &dyn PiecewiseFunction,
    piece: Piece,
    x: f64,
) -> Result<f64> {
    if let Some(d) = f.derivative(piece, x) {
        return d;
    }
    let (a, b) = problem.interval(piece);
    difference(&|y| f.eval(piece, y), x, a, b)
}

/// `(u(1), u'(1))` of a function component.
pub fn right_end_values(
    problem: &ValidatedProblem,
    f: &dyn PiecewiseFunction,
) -> Result<(f64, f64)> {
    Ok((
        f.eval(Piece::Right, 1.0)?,
        first_derivative(problem, f, Piece::Right, 1.0)?,
    ))
}

/// `(l u)(x) = (-(p u')' + q u) / r` on `piece`, with the flux derivative taken by
/// finite differences of step [`FD_STEP`].
pub fn l_operator(
    problem: &ValidatedProblem,
    u: &dyn PiecewiseFunction,
    piece: Piece,
    x: f64,
) -> Result<f64> {
    let (a, b) = problem.interval(piece);
    let flux = |y: f64| -> Result<f64> {
        Ok(problem.p(piece, y)? * first_derivative(problem, u, piece, y)?)
    };
    let dflux = difference(&flux, x, a, b)?;
    let value = u.eval(piece, x)?;
    Ok((-dflux + problem.q(piece, x)? * value) / problem.r(piece, x)?)
}

struct OperatorImage {
    u: Arc<dyn PiecewiseFunction>,
    problem: ValidatedProblem,
}

impl PiecewiseFunction for OperatorImage {
    fn eval(&self, piece: Piece, x: f64) -> Result<f64> {
        l_operator(&self.problem, self.u.as_ref(), piece, x)
    }
}

/// `K (u, (u)'_1) = (l u, -(u)_1)`.
pub fn apply_k(problem: &ValidatedProblem, u: &HilbertElement) -> Result<HilbertElement> {
    let (u1, u1p) = right_end_values(problem, u.function.as_ref())?;
    let forms = problem.boundary_forms(u1, u1p);
    if (u.scalar - forms.u1p_form).abs() > DOMAIN_TOL * forms.u1p_form.abs().max(1.0) {
        return Err(Error::DomainMismatch {
            scalar: u.scalar,
            expected: forms.u1p_form,
        });
    }
    let image = OperatorImage {
        u: u.function.clone(),
        problem: problem.clone(),
    };
    Ok(HilbertElement::new(Arc::new(image), -forms.u1_form))
}

/// Check the membership conditions of the operator domain: `u(-1) = 0`, the four
/// transmission conditions, and `T2 = (T1)'_1`.
pub fn check_domain(problem: &ValidatedProblem, u: &HilbertElement) -> Result<()> {
    let f = u.function.as_ref();
    let close = |a: f64, b: f64| (a - b).abs() <= DOMAIN_TOL * a.abs().max(b.abs()).max(1.0);
    let left = f.eval(Piece::Left, -1.0)?;
    if !close(left, 0.0) {
        return Err(Error::NotInDomain(format!("u(-1) = {left:e}")));
    }
    let g = problem.gamma();
    let d = problem.delta();
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
        let (gv, dv) = (g[2 * k], d[2 * k]);
        let (gd, dd) = (g[2 * k + 1], d[2 * k + 1]);
        if !close(gv * vm, dv * vp) {
            return Err(Error::NotInDomain(format!(
                "value transmission at x = {h}: {vm} -> {vp}"
            )));
        }
        if !close(gd * dm, dd * dp) {
            return Err(Error::NotInDomain(format!(
                "derivative transmission at x = {h}: {dm} -> {dp}"
            )));
        }
    }
    let (u1, u1p) = right_end_values(problem, f)?;
    let expected = problem.boundary_forms(u1, u1p).u1p_form;
    if !close(u.scalar, expected) {
        return Err(Error::DomainMismatch {
            scalar: u.scalar,
            expected,
        });
    }
    Ok(())
}

/// `|<K u, v> - <u, K v>|` for `u`, `v` in the operator domain.
pub fn symmetry_test(
    problem: &ValidatedProblem,
    u: &HilbertElement,
    v: &HilbertElement,
) -> Result<f64> {
    check_domain(problem, u)?;
    check_domain(problem, v)?;
    let ku = apply_k(problem, u)?;
    let kv = apply_k(problem, v)?;
    Ok((inner_product(problem, &ku, v)? - inner_product(problem, u, &kv)?).abs())
}

/// A random element of the operator domain: polynomials of the given degree per
/// piece with coefficients in [-1, 1], the constant and linear terms of pieces 2
/// and 3 fixed by the transmission conditions, `u(-1) = 0`, and `T2 = (u)'_1`.
pub fn random_domain_element<R: Rng + ?Sized>(
    problem: &ValidatedProblem,
    rng: &mut R,
    degree: usize,
) -> HilbertElement {
    let degree = degree.max(1);
    let mut draw = |fixed: [Option<f64>; 2]| -> Vec<f64> {
        (0..=degree)
            .map(|k| match fixed.get(k) {
                Some(Some(c)) => *c,
                _ => rng.gen_range(-1.0..1.0),
            })
            .collect()
    };
    let first = draw([Some(0.0), None]);
    let mut poly = PiecewisePolynomial::new(problem, [first, Vec::new(), Vec::new()]);
    for (k, (h, before, after)) in [
        (problem.h1(), Piece::Left, Piece::Middle),
        (problem.h2(), Piece::Middle, Piece::Right),
    ]
    .into_iter()
    .enumerate()
    {
        let (ratio_v, ratio_d) = problem.jump_ratios(k);
        let (v, d) = poly.horner(before, h);
        poly.coeffs[after.index()] = draw([Some(ratio_v * v), Some(ratio_d * d)]);
    }
    let (u1, u1p) = poly.horner(Piece::Right, 1.0);
    let scalar = problem.boundary_forms(u1, u1p).u1p_form;
    HilbertElement::new(Arc::new(poly), scalar)
}
