//! Expansions in the normalized eigenelements and the completeness identities that
//! follow from expanding `(0, 1)` and `(f, 0)`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{
    h_norm, inner_product, weighted_l2_inner, HilbertElement, LinearCombination, PiecewiseFunction,
};
use crate::problem::ValidatedProblem;
use crate::spectrum::Eigenpair;

/// `c_n = <T, Phi_n>` for every eigenpair.
pub fn fourier_coefficients(
    problem: &ValidatedProblem,
    pairs: &[Eigenpair],
    t: &HilbertElement,
) -> Result<Vec<f64>> {
    pairs
        .par_iter()
        .map(|pair| inner_product(problem, t, &pair.element()))
        .collect()
}

fn check_terms(n: usize, available: usize) -> Result<()> {
    if n > available {
        return Err(Error::LengthMismatch {
            expected: n,
            got: available,
        });
    }
    Ok(())
}

/// `S_N = sum_{n <= N} c_n Phi_n`.
pub fn partial_sum(pairs: &[Eigenpair], coefficients: &[f64], n: usize) -> Result<HilbertElement> {
    check_terms(n, pairs.len().min(coefficients.len()))?;
    let elements: Vec<HilbertElement> = pairs[..n].iter().map(Eigenpair::element).collect();
    let terms: Vec<(f64, &HilbertElement)> =
        coefficients[..n].iter().copied().zip(&elements).collect();
    Ok(HilbertElement::combine(&terms))
}

#[derive(Debug, Clone)]
pub struct ExpansionResult {
    pub coefficients: Vec<f64>,
    pub partial_sum: HilbertElement,
    /// `||T - S_N||`.
    pub residual_norm: f64,
}

impl ExpansionResult {
    /// `||T||^2 - sum c_n^2`, which is `||T - S_N||^2` for an orthonormal family.
    pub fn bessel_gap(&self, t_norm: f64) -> f64 {
        t_norm * t_norm - self.coefficients.iter().map(|c| c * c).sum::<f64>()
    }
}

/// Expand `T` in the first `n` eigenpairs.
pub fn expand(
    problem: &ValidatedProblem,
    pairs: &[Eigenpair],
    t: &HilbertElement,
    n: usize,
) -> Result<ExpansionResult> {
    check_terms(n, pairs.len())?;
    let coefficients = fourier_coefficients(problem, &pairs[..n], t)?;
    let partial_sum = partial_sum(pairs, &coefficients, n)?;
    let residual_norm = h_norm(problem, &t.sub(&partial_sum))?;
    Ok(ExpansionResult {
        coefficients,
        partial_sum,
        residual_norm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryParseval {
    /// `sum_{n <= N} [(phi_n)'_1]^2`.
    pub partial: f64,
    /// `rho / p(1)`.
    pub target: f64,
}

pub fn boundary_parseval(
    problem: &ValidatedProblem,
    pairs: &[Eigenpair],
    n: usize,
) -> Result<BoundaryParseval> {
    check_terms(n, pairs.len())?;
    Ok(BoundaryParseval {
        partial: pairs[..n]
            .iter()
            .map(|p| p.boundary_scalar * p.boundary_scalar)
            .sum(),
        target: 1.0 / problem.boundary_weight(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryKernelSum {
    /// `max |sum_{n <= N} (phi_n)'_1 phi_n(x)|` over the sample grid.
    pub sup_abs: f64,
    /// Weighted L2 norm of the same sum over [-1, 1].
    pub l2_norm: f64,
}

/// `sum_{n <= N} (phi_n)'_1 phi_n` as a function.
fn boundary_weighted_sum(pairs: &[Eigenpair], n: usize) -> LinearCombination {
    LinearCombination::new(
        pairs[..n]
            .iter()
            .map(|p| {
                (
                    p.boundary_scalar,
                    p.phi.clone() as Arc<dyn PiecewiseFunction>,
                )
            })
            .collect(),
    )
}

/// The grid points must avoid the breakpoints.
pub fn boundary_kernel_sum(
    problem: &ValidatedProblem,
    pairs: &[Eigenpair],
    n: usize,
    x_grid: &[f64],
) -> Result<BoundaryKernelSum> {
    check_terms(n, pairs.len())?;
    let sum = boundary_weighted_sum(pairs, n);
    let mut sup_abs: f64 = 0.0;
    for &x in x_grid {
        sup_abs = sup_abs.max(sum.eval(problem.locate(x)?, x)?.abs());
    }
    let l2_norm = weighted_l2_inner(problem, &sum, &sum)?.max(0.0).sqrt();
    Ok(BoundaryKernelSum { sup_abs, l2_norm })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionExpansion {
    /// `int f phi_n r dy`.
    pub coefficients: Vec<f64>,
    /// `(x, sum_n c_n phi_n(x))` at the requested points.
    pub samples: Vec<(f64, f64)>,
    /// Weighted L2 distance between `f` and the sum.
    pub l2_error: f64,
}

/// Expansion of the function `f` alone (the element `(f, 0)`).
pub fn expand_function(
    problem: &ValidatedProblem,
    pairs: &[Eigenpair],
    f: Arc<dyn PiecewiseFunction>,
    n: usize,
    x_samples: &[f64],
) -> Result<FunctionExpansion> {
    check_terms(n, pairs.len())?;
    let t = HilbertElement::new(f.clone(), 0.0);
    let coefficients = fourier_coefficients(problem, &pairs[..n], &t)?;
    let mut terms: Vec<(f64, Arc<dyn PiecewiseFunction>)> = pairs[..n]
        .iter()
        .zip(&coefficients)
        .map(|(p, &c)| (c, p.phi.clone() as Arc<dyn PiecewiseFunction>))
        .collect();
    let sum = LinearCombination::new(terms.clone());
    let samples = x_samples
        .iter()
        .map(|&x| Ok((x, sum.eval(problem.locate(x)?, x)?)))
        .collect::<Result<_>>()?;
    terms.push((-1.0, f));
    let diff = LinearCombination::new(terms);
    let l2_error = weighted_l2_inner(problem, &diff, &diff)?.max(0.0).sqrt();
    Ok(FunctionExpansion {
        coefficients,
        samples,
        l2_error,
    })
}

/// `|sum_{n <= N} (int f phi_n r dy) (phi_n)'_1|`.
pub fn boundary_coefficient_sum(
    problem: &ValidatedProblem,
    pairs: &[Eigenpair],
    f: Arc<dyn PiecewiseFunction>,
    n: usize,
) -> Result<f64> {
    check_terms(n, pairs.len())?;
    let coefficients = fourier_coefficients(problem, &pairs[..n], &HilbertElement::new(f, 0.0))?;
    Ok(coefficients
        .iter()
        .zip(&pairs[..n])
        .map(|(c, p)| c * p.boundary_scalar)
        .sum::<f64>()
        .abs())
}

/// `|int phi_m phi_n r dx + (p(1)/rho) (phi_m)'_1 (phi_n)'_1|` for two eigenpairs.
pub fn orthogonality_defect(
    problem: &ValidatedProblem,
    a: &Eigenpair,
    b: &Eigenpair,
) -> Result<f64> {
    Ok(inner_product(problem, &a.element(), &b.element())?.abs())
}
