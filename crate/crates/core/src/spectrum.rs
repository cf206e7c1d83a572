//! Eigenvalues as sign changes of `D(lambda)`, their refinement, and normalized
//! eigenpairs.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fundamental::{build_phi, characteristic, characteristic_complex, PiecewiseSolution};
use crate::hilbert::{h_norm, HilbertElement, PiecewiseFunction};
use crate::ivp::Tolerances;
use crate::oracle::oracle_eigenvalues;
use crate::problem::{Piece, ValidatedProblem};

/// Default absolute tolerance on refined eigenvalues.
pub const DEFAULT_ROOT_TOL: f64 = 1e-10;

/// Default uniform grid density (nodes per unit of lambda).
pub const DEFAULT_NODES_PER_UNIT: f64 = 20.0;

/// Default step in `s = sqrt(lambda - lambda_min)` for square-root grids.
pub const DEFAULT_SQRT_STEP: f64 = 0.05;

/// Smallest `|Im lambda|` accepted by [`reality_probe`].
pub const MIN_PROBE_IMAG: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grid {
    /// `n` equally spaced nodes, both ends included.
    Uniform(usize),
    /// Nodes `lambda_min + (j step)^2`, dense near `lambda_min` and sparse where
    /// eigenvalues spread out; the last node is `lambda_max`.
    Sqrt { step: f64 },
}

impl Grid {
    /// Uniform grid with the default density for the window.
    pub fn default_for(lambda_min: f64, lambda_max: f64) -> Grid {
        let n = ((lambda_max - lambda_min) * DEFAULT_NODES_PER_UNIT).ceil() as usize + 1;
        Grid::Uniform(n.max(2))
    }

    pub fn nodes(&self, lambda_min: f64, lambda_max: f64) -> Result<Vec<f64>> {
        if !(lambda_min < lambda_max) || !lambda_min.is_finite() || !lambda_max.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "lambda window [{lambda_min}, {lambda_max}] is empty or not finite"
            )));
        }
        match *self {
            Grid::Uniform(n) => {
                if n < 2 {
                    return Err(Error::InvalidArgument(format!(
                        "grid needs at least 2 nodes, got {n}"
                    )));
                }
                let h = (lambda_max - lambda_min) / (n - 1) as f64;
                Ok((0..n)
                    .map(|j| {
                        if j == n - 1 {
                            lambda_max
                        } else {
                            lambda_min + j as f64 * h
                        }
                    })
                    .collect())
            }
            Grid::Sqrt { step } => {
                if !(step > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "grid step must be positive, got {step}"
                    )));
                }
                let smax = (lambda_max - lambda_min).sqrt();
                let n = (smax / step).ceil() as usize;
                let mut nodes: Vec<f64> = (0..n)
                    .map(|j| lambda_min + (j as f64 * step).powi(2))
                    .collect();
                nodes.push(lambda_max);
                Ok(nodes)
            }
        }
    }
}

/// Numerical settings shared by the spectrum routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumSettings {
    pub ivp: Tolerances,
    pub root_tol: f64,
}

impl Default for SpectrumSettings {
    fn default() -> Self {
        SpectrumSettings {
            ivp: Tolerances::default(),
            root_tol: DEFAULT_ROOT_TOL,
        }
    }
}

/// Consecutive grid nodes with a sign change of `D`. A node where `D` is exactly
/// zero gives a degenerate bracket `a == b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub a: f64,
    pub b: f64,
    pub da: f64,
    pub db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub brackets: Vec<Bracket>,
    /// Nodes where `D` could not be evaluated.
    pub skipped: Vec<(f64, Error)>,
}

/// Sign changes of `D` over a uniform grid of `grid_points` nodes.
pub fn scan_eigenvalues(
    problem: &ValidatedProblem,
    lambda_min: f64,
    lambda_max: f64,
    grid_points: usize,
) -> Result<ScanReport> {
    let nodes = Grid::Uniform(grid_points).nodes(lambda_min, lambda_max)?;
    Ok(scan_nodes(problem, &nodes, Tolerances::default()))
}

/// Sign changes of `D` between consecutive entries of `nodes` (ascending).
pub fn scan_nodes(problem: &ValidatedProblem, nodes: &[f64], tol: Tolerances) -> ScanReport {
    let values: Vec<Result<f64>> = nodes
        .par_iter()
        .map(|&l| characteristic(problem, l, tol))
        .collect();
    let mut brackets = Vec::new();
    let mut skipped = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for (&l, v) in nodes.iter().zip(values) {
        let d = match v {
            Ok(d) => d,
            Err(e) => {
                skipped.push((l, e));
                prev = None;
                continue;
            }
        };
        if d == 0.0 {
            brackets.push(Bracket {
                a: l,
                b: l,
                da: d,
                db: d,
            });
        } else if let Some((pl, pd)) = prev {
            if pd != 0.0 && pd.signum() != d.signum() {
                brackets.push(Bracket {
                    a: pl,
                    b: l,
                    da: pd,
                    db: d,
                });
            }
        }
        prev = Some((l, d));
    }
    ScanReport { brackets, skipped }
}

/// Shrink a sign-change bracket of `D` below `tol` (regula falsi with the Illinois
/// modification, falling back to bisection when the bracket stops halving).
pub fn refine_eigenvalue(problem: &ValidatedProblem, bracket: (f64, f64), tol: f64) -> Result<f64> {
    refine_with(problem, bracket, tol, Tolerances::default())
}

pub(crate) fn refine_with(
    problem: &ValidatedProblem,
    bracket: (f64, f64),
    tol: f64,
    ivp: Tolerances,
) -> Result<f64> {
    let (mut a, mut b) = if bracket.0 <= bracket.1 {
        bracket
    } else {
        (bracket.1, bracket.0)
    };
    if b - a <= tol {
        return Ok(0.5 * (a + b));
    }
    let d = |l: f64| characteristic(problem, l, ivp);
    let (mut fa, mut fb) = (d(a)?, d(b)?);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::BracketInvalid {
            a,
            b,
            da: fa,
            db: fb,
        });
    }
    let mut side = 0i8;
    let mut width_two_ago = f64::INFINITY;
    let mut width_one_ago = b - a;
    for _ in 0..400 {
        let width = b - a;
        let tol_here = tol.max(4.0 * f64::EPSILON * a.abs().max(b.abs()));
        if width <= tol_here {
            break;
        }
        let mut c = if width > 0.5 * width_two_ago {
            0.5 * (a + b)
        } else {
            (a * fb - b * fa) / (fb - fa)
        };
        let nudge = 0.5 * tol_here;
        if !(c > a && c < b) {
            c = 0.5 * (a + b);
        }
        c = c.clamp(a + nudge, b - nudge);
        let fc = d(c)?;
        if fc == 0.0 {
            return Ok(c);
        }
        if fc.signum() == fa.signum() {
            a = c;
            fa = fc;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            fb = fc;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        width_two_ago = width_one_ago;
        width_one_ago = width;
    }
    let c = (a * fb - b * fa) / (fb - fa);
    Ok(if c > a && c < b { c } else { 0.5 * (a + b) })
}

/// An eigenvalue with its eigenelement `(phi_n, (phi_n)'_1)` of unit norm.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub lambda: f64,
    pub phi: Arc<PiecewiseSolution>,
    /// `(phi_n)'_1`.
    pub boundary_scalar: f64,
    /// Norm of the returned element, recomputed after scaling.
    pub norm_check: f64,
    /// `|D(lambda_n)|`.
    pub d_residual: f64,
}

impl Eigenpair {
    pub fn element(&self) -> HilbertElement {
        HilbertElement::new(self.phi.clone(), self.boundary_scalar)
    }
}

/// Element `(u, (u)'_1)` of a solution.
pub fn solution_element(
    problem: &ValidatedProblem,
    sol: &PiecewiseSolution,
) -> Result<HilbertElement> {
    let (u1, u1p) = sol.value_on(Piece::Right, 1.0)?;
    let scalar = problem.boundary_forms(u1, u1p).u1p_form;
    Ok(HilbertElement::new(Arc::new(sol.clone()), scalar))
}

/// Build `phi` at `lambda_n` and scale it to unit norm.
pub fn normalize_eigenpair(problem: &ValidatedProblem, lambda_n: f64) -> Result<Eigenpair> {
    normalize_with(problem, lambda_n, Tolerances::default())
}

pub(crate) fn normalize_with(
    problem: &ValidatedProblem,
    lambda_n: f64,
    ivp: Tolerances,
) -> Result<Eigenpair> {
    let phi = build_phi(problem, lambda_n, ivp)?;
    let d = characteristic(problem, lambda_n, ivp)?;
    let mut pair = normalize_solution(problem, &phi)?;
    pair.d_residual = d.abs();
    Ok(pair)
}

/// Scale an arbitrary multiple of an eigenfunction to unit norm with the sign fixed
/// by the first sample where `|phi| > 1e-6` being positive.
pub fn normalize_solution(
    problem: &ValidatedProblem,
    phi: &PiecewiseSolution,
) -> Result<Eigenpair> {
    let lambda = phi.lambda();
    let norm = h_norm(problem, &solution_element(problem, phi)?)?;
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::ZeroNorm { lambda });
    }
    let sign = leading_sign(problem, phi)?;
    let scaled = phi.scaled(sign / norm);
    let element = solution_element(problem, &scaled)?;
    let norm_check = h_norm(problem, &element)?;
    Ok(Eigenpair {
        lambda,
        boundary_scalar: element.scalar(),
        phi: Arc::new(scaled),
        norm_check,
        d_residual: f64::NAN,
    })
}

fn leading_sign(problem: &ValidatedProblem, phi: &PiecewiseSolution) -> Result<f64> {
    for piece in Piece::ALL {
        let (a, b) = problem.interval(piece);
        for k in 0..=256 {
            let x = a + (b - a) * k as f64 / 256.0;
            let v = phi.eval(piece, x)?;
            if v.abs() > 1e-6 {
                return Ok(v.signum());
            }
        }
    }
    Ok(1.0)
}

#[derive(Debug, Clone)]
pub struct EigenSearch {
    pub pairs: Vec<Eigenpair>,
    pub skipped: Vec<(f64, Error)>,
}

/// All eigenpairs whose eigenvalues produce a sign change on the grid over the window.
pub fn find_eigenpairs(
    problem: &ValidatedProblem,
    lambda_min: f64,
    lambda_max: f64,
    grid: Grid,
    settings: SpectrumSettings,
) -> Result<EigenSearch> {
    let nodes = grid.nodes(lambda_min, lambda_max)?;
    let scan = scan_nodes(problem, &nodes, settings.ivp);
    let lambdas: Vec<f64> = scan
        .brackets
        .par_iter()
        .map(|br| refine_with(problem, (br.a, br.b), settings.root_tol, settings.ivp))
        .collect::<Result<_>>()?;
    let mut pairs: Vec<Eigenpair> = lambdas
        .par_iter()
        .map(|&l| normalize_with(problem, l, settings.ivp))
        .collect::<Result<_>>()?;
    pairs.sort_by(|x, y| x.lambda.total_cmp(&y.lambda));
    pairs.dedup_by(|x, y| (x.lambda - y.lambda).abs() <= settings.root_tol);
    Ok(EigenSearch {
        pairs,
        skipped: scan.skipped,
    })
}

/// Lower end of a scan window guaranteed (in practice) to lie below the smallest
/// eigenvalue: a coarse discretization's lowest eigenvalue minus a margin.
pub fn spectrum_lower_bound(problem: &ValidatedProblem) -> Result<f64> {
    let lowest = oracle_eigenvalues(problem, 48, 1)?[0];
    Ok(lowest - 1.0 - 0.5 * lowest.abs())
}

/// The `k` smallest eigenpairs, scanning upward on square-root grids until `k` are found.
pub fn first_eigenpairs(
    problem: &ValidatedProblem,
    k: usize,
    settings: SpectrumSettings,
) -> Result<Vec<Eigenpair>> {
    let mut lo = spectrum_lower_bound(problem)?;
    let mut span = 64.0;
    let mut pairs: Vec<Eigenpair> = Vec::new();
    while pairs.len() < k {
        let hi = lo + span;
        let found = find_eigenpairs(
            problem,
            lo,
            hi,
            Grid::Sqrt {
                step: DEFAULT_SQRT_STEP,
            },
            settings,
        )?;
        if !found.skipped.is_empty() {
            return Err(found.skipped[0].1.clone());
        }
        for pair in found.pairs {
            if pairs
                .last()
                .is_none_or(|last| pair.lambda - last.lambda > settings.root_tol)
            {
                pairs.push(pair);
            }
        }
        lo = hi;
        span *= 2.0;
        if span > 1e9 {
            return Err(Error::InvalidArgument(format!(
                "only {} eigenvalues found below {hi}",
                pairs.len()
            )));
        }
    }
    pairs.truncate(k);
    Ok(pairs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealityReport {
    /// `(lambda, |D(lambda)|)` per sample.
    pub values: Vec<(Complex64, f64)>,
    pub min_abs: Option<f64>,
}

/// `|D|` on complex samples away from the real axis.
pub fn reality_probe(problem: &ValidatedProblem, samples: &[Complex64]) -> Result<RealityReport> {
    if let Some(s) = samples.iter().find(|s| !(s.im.abs() >= MIN_PROBE_IMAG)) {
        return Err(Error::RealSample {
            re: s.re,
            im: s.im,
            min_imag: MIN_PROBE_IMAG,
        });
    }
    let values: Vec<(Complex64, f64)> = samples
        .par_iter()
        .map(|&l| {
            Ok((
                l,
                characteristic_complex(problem, l, Tolerances::default())?.norm(),
            ))
        })
        .collect::<Result<_>>()?;
    let min_abs = values.iter().map(|v| v.1).reduce(f64::min);
    Ok(RealityReport { values, min_abs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::inner_product;
    use crate::problem::{validate_problem, ProblemSpec};

    fn cfg_a() -> ValidatedProblem {
        validate_problem(ProblemSpec::constant(
            -1.0 / 3.0,
            1.0 / 3.0,
            1.0,
            1.0,
            0.0,
            [0.0, -1.0],
            [1.0, 0.0],
        ))
        .unwrap()
    }

    #[test]
    fn grids() {
        assert_eq!(
            Grid::Uniform(3).nodes(0.0, 1.0).unwrap(),
            vec![0.0, 0.5, 1.0]
        );
        let s = Grid::Sqrt { step: 0.5 }.nodes(-1.0, 1.0).unwrap();
        assert_eq!(s, vec![-1.0, -0.75, 0.0, 1.0]);
        assert!(Grid::Uniform(1).nodes(0.0, 1.0).is_err());
        assert!(Grid::Uniform(5).nodes(1.0, 1.0).is_err());
        assert_eq!(Grid::default_for(-5.0, 100.0), Grid::Uniform(2101));
    }

    #[test]
    fn empty_and_single_root_windows() {
        let p = cfg_a();
        assert!(scan_eigenvalues(&p, -0.5, 1.0, 30)
            .unwrap()
            .brackets
            .is_empty());
        let one = scan_eigenvalues(&p, 1.0, 2.0, 2).unwrap();
        assert_eq!(one.brackets.len(), 1);
    }

    #[test]
    fn refine_small_bracket_and_invalid_bracket() {
        let p = cfg_a();
        assert_eq!(
            refine_eigenvalue(&p, (3.0, 3.0 + 1e-12), 1e-10).unwrap(),
            3.0 + 0.5e-12
        );
        assert!(matches!(
            refine_eigenvalue(&p, (-0.5, 1.0), 1e-10),
            Err(Error::BracketInvalid { .. })
        ));
    }

    #[test]
    fn eigenpairs_are_normalized_and_orthogonal() {
        let p = cfg_a();
        let found = find_eigenpairs(
            &p,
            -5.0,
            40.0,
            Grid::default_for(-5.0, 40.0),
            SpectrumSettings::default(),
        )
        .unwrap();
        assert_eq!(found.pairs.len(), 5);
        for pair in &found.pairs {
            assert!((pair.norm_check - 1.0).abs() < 1e-8);
            assert!(pair.d_residual < 1e-8);
            assert!(pair.phi.value_on(Piece::Left, -0.99).unwrap().0 > 0.0);
        }
        for i in 0..5 {
            for j in 0..i {
                let ip = inner_product(&p, &found.pairs[i].element(), &found.pairs[j].element())
                    .unwrap();
                assert!(ip.abs() < 1e-7);
            }
        }
    }

    #[test]
    fn normalization_is_scale_invariant() {
        let p = cfg_a();
        let lambda = refine_eigenvalue(&p, (1.0, 2.0), 1e-12).unwrap();
        let phi = build_phi(&p, lambda, Tolerances::default()).unwrap();
        let a = normalize_solution(&p, &phi).unwrap();
        let b = normalize_solution(&p, &phi.scaled(-10.0)).unwrap();
        assert!((a.boundary_scalar - b.boundary_scalar).abs() < 1e-12);
        for x in [-0.5, 0.0, 0.9] {
            let piece = p.locate(x).unwrap();
            assert!((a.phi.eval(piece, x).unwrap() - b.phi.eval(piece, x).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn probe_rejects_real_samples() {
        let p = cfg_a();
        assert!(matches!(
            reality_probe(&p, &[Complex64::new(1.22, 0.0)]),
            Err(Error::RealSample { .. })
        ));
        let empty = reality_probe(&p, &[]).unwrap();
        assert!(empty.values.is_empty() && empty.min_abs.is_none());
        let r = reality_probe(&p, &[Complex64::new(1.0, 1.0)]).unwrap();
        assert!(r.min_abs.unwrap() > 0.0);
    }

    #[test]
    fn first_eigenpairs_from_lower_bound() {
        let p = cfg_a();
        let pairs = first_eigenpairs(&p, 3, SpectrumSettings::default()).unwrap();
        assert!((pairs[0].lambda + 0.974_623_702_788_533_6).abs() < 1e-8);
        assert!((pairs[2].lambda - 5.724_697_005_392_686).abs() < 1e-8);
    }
}
