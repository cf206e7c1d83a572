//! The invariant suite behind `sturmtx verify`.
//!
//! Checks marked as depending on self-adjointness are reported as expected
//! failures, not failures, when the problem violates the symmetry condition.

use std::fmt;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::expansion::{boundary_parseval, orthogonality_defect};
use crate::fundamental::{abel_constant, build_chi, build_phi, wronskian_on};
use crate::hilbert::{h_norm, random_domain_element, symmetry_test, HilbertElement};
use crate::ivp::Tolerances;
use crate::oracle::{compare_spectra, discretize, ToleranceProfile};
use crate::problem::{Piece, ValidatedProblem};
use crate::resolvent::{apply_resolvent, build_kernel, resolvent_residual};
use crate::spectrum::{first_eigenpairs, reality_probe, Eigenpair, SpectrumSettings};

const SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VerifyLevel {
    Quick,
    Full,
}

impl VerifyLevel {
    fn pick<T>(self, quick: T, full: T) -> T {
        match self {
            VerifyLevel::Quick => quick,
            VerifyLevel::Full => full,
        }
    }
}

impl std::str::FromStr for VerifyLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(VerifyLevel::Quick),
            "full" => Ok(VerifyLevel::Full),
            other => Err(Error::InvalidArgument(format!(
                "unknown level `{other}`, expected quick or full"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CheckStatus {
    Pass,
    Fail,
    ExpectedFail,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "FAIL",
            CheckStatus::ExpectedFail => "expected-fail",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    /// NaN when the check could not be computed.
    pub measured: f64,
    pub threshold: f64,
    /// `true` if passing means `measured <= threshold`, `false` for lower bounds.
    pub upper_bound: bool,
    pub status: CheckStatus,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub level: VerifyLevel,
    /// Whether the symmetry condition holds at the breakpoints.
    pub self_adjoint: bool,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    /// No check failed unexpectedly.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn expected_failures(&self) -> usize {
        self.checks
            .iter()
            .filter(|c| c.status == CheckStatus::ExpectedFail)
            .count()
    }
}

struct Suite {
    self_adjoint: bool,
    checks: Vec<CheckResult>,
}

impl Suite {
    fn record(
        &mut self,
        name: &'static str,
        threshold: f64,
        upper_bound: bool,
        depends: bool,
        value: Result<f64>,
    ) {
        let (measured, ok, note) = match value {
            Ok(m) => (
                m,
                if upper_bound {
                    m <= threshold
                } else {
                    m > threshold
                },
                String::new(),
            ),
            Err(e) => (f64::NAN, false, e.to_string()),
        };
        let status = match (ok, depends && !self.self_adjoint) {
            (true, _) => CheckStatus::Pass,
            (false, true) => CheckStatus::ExpectedFail,
            (false, false) => CheckStatus::Fail,
        };
        self.checks.push(CheckResult {
            name,
            measured,
            threshold,
            upper_bound,
            status,
            note,
        });
    }
}

fn max_of(values: impl IntoIterator<Item = Result<f64>>) -> Result<f64> {
    values
        .into_iter()
        .try_fold(0.0f64, |acc, v| Ok(acc.max(v?)))
}

fn abel_and_jump(problem: &ValidatedProblem, lambdas: &[f64]) -> Result<(f64, f64)> {
    let tol = Tolerances::new(1e-12, 1e-14);
    let (g, d) = (problem.gamma(), problem.delta());
    let ratios = [g[0] * g[1] / (d[0] * d[1]), g[2] * g[3] / (d[2] * d[3])];
    let (mut abel, mut jump) = (0.0f64, 0.0f64);
    for &lambda in lambdas {
        let phi = build_phi(problem, lambda, tol)?;
        let chi = build_chi(problem, lambda, tol)?;
        let mut edges = Vec::new();
        for piece in Piece::ALL {
            let (a, b) = problem.interval(piece);
            let reference = abel_constant(problem, &phi, &chi, piece)?;
            for k in 0..=16 {
                let x = (a + (b - a) * k as f64 / 16.0).clamp(a, b);
                let value = wronskian_on(&phi, &chi, piece, x)? * problem.p(piece, x)?;
                abel = abel.max((value - reference).abs() / reference.abs());
            }
            edges.push((
                wronskian_on(&phi, &chi, piece, a)?,
                wronskian_on(&phi, &chi, piece, b)?,
            ));
        }
        for k in 0..2 {
            let expected = ratios[k] * edges[k].1;
            jump = jump.max((edges[k + 1].0 - expected).abs() / expected.abs());
        }
    }
    Ok((abel, jump))
}

fn random_rhs(rng: &mut StdRng) -> HilbertElement {
    let c: [[f64; 3]; 3] =
        std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
    let t2 = rng.gen_range(-1.0..1.0);
    HilbertElement::from_fn(
        move |piece: Piece, x: f64| {
            let k = &c[piece.index()];
            k[0] + k[1] * x + k[2] * (2.0 * x).sin()
        },
        t2,
    )
}

fn eigen_checks(
    suite: &mut Suite,
    problem: &ValidatedProblem,
    pairs: &[Eigenpair],
    level: VerifyLevel,
    rng: &mut StdRng,
) {
    let k = pairs.len();
    suite.record(
        "eigenpair norm defect | ||Phi_n|| - 1 |",
        1e-9,
        true,
        true,
        Ok(pairs
            .iter()
            .map(|p| (p.norm_check - 1.0).abs())
            .fold(0.0, f64::max)),
    );
    suite.record(
        "eigenvalue gaps (min lambda_{n+1} - lambda_n)",
        0.0,
        false,
        true,
        Ok(pairs
            .windows(2)
            .map(|w| w[1].lambda - w[0].lambda)
            .fold(f64::INFINITY, f64::min)),
    );
    suite.record(
        "orthogonality |<Phi_m, Phi_n>|",
        1e-7,
        true,
        true,
        max_of(
            (0..k)
                .flat_map(|m| (0..m).map(move |n| (m, n)))
                .map(|(m, n)| orthogonality_defect(problem, &pairs[m], &pairs[n])),
        ),
    );
    let parseval = (1..=k)
        .map(|n| boundary_parseval(problem, pairs, n).map(|id| id.partial - id.target))
        .collect::<Result<Vec<f64>>>()
        .map(|excess| excess.into_iter().fold(f64::MIN, f64::max));
    suite.record(
        "boundary Parseval sum excess over rho/p(1)",
        1e-8,
        true,
        true,
        parseval,
    );

    let m = level.pick(64, 128);
    let oracle = discretize(problem, m).and_then(|op| {
        let lambdas: Vec<f64> = pairs.iter().map(|p| p.lambda).collect();
        let cmp = compare_spectra(
            &lambdas,
            &op.eigenvalues(k)?,
            k,
            ToleranceProfile::for_mesh(op.mesh_width()),
        )?;
        Ok(cmp
            .rows
            .iter()
            .map(|r| r.scaled_diff / r.allowed)
            .fold(0.0, f64::max))
    });
    suite.record(
        "oracle agreement (scaled diff / allowed)",
        1.0,
        true,
        true,
        oracle,
    );

    let samples = level.pick(3, 10);
    let mid_gap: Vec<f64> = pairs
        .windows(2)
        .map(|w| 0.5 * (w[0].lambda + w[1].lambda))
        .collect();
    let residual = max_of((0..samples).map(|_| {
        let lambda = mid_gap[rng.gen_range(0..mid_gap.len())];
        let t = random_rhs(rng);
        let u = apply_resolvent(problem, lambda, &t)?;
        Ok(resolvent_residual(problem, lambda, &t, &u)?.max())
    }));
    suite.record(
        "resolvent defect at mid-gap lambda",
        1e-6,
        true,
        false,
        residual,
    );

    let lambda = mid_gap[0];
    let spectral = max_of(pairs.iter().take(5).map(|pair| {
        let u = apply_resolvent(problem, lambda, &pair.element())?;
        h_norm(
            problem,
            &u.sub(&pair.element().scale(1.0 / (pair.lambda - lambda))),
        )
    }));
    suite.record(
        "resolvent of Phi_n vs Phi_n / (lambda_n - lambda)",
        1e-6,
        true,
        true,
        spectral,
    );

    let kernel = max_of(mid_gap.iter().take(3).map(|&lambda| {
        let kernel = build_kernel(problem, lambda)?;
        let mut worst = 0.0f64;
        let mut count = 0;
        while count < level.pick(30, 100) {
            let (x, y): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if problem.locate(x).is_err() || problem.locate(y).is_err() {
                continue;
            }
            worst =
                worst.max((kernel.symmetric_value(x, y)? - kernel.symmetric_value(y, x)?).abs());
            count += 1;
        }
        Ok(worst)
    }));
    suite.record("Green kernel symmetry", 1e-8, true, true, kernel);

    let grid: Vec<Complex64> = pairs
        .iter()
        .take(5)
        .flat_map(|p| (0..5).map(move |j| Complex64::new(p.lambda, 0.1 + 0.475 * j as f64)))
        .collect();
    let probe = reality_probe(problem, &grid).and_then(|r| {
        r.min_abs
            .ok_or_else(|| Error::InvalidArgument("empty probe".into()))
    });
    suite.record(
        "reality probe min |D| off the real axis",
        1e-3,
        false,
        true,
        probe,
    );
}

/// Run every invariant check on `problem`.
pub fn run_verification(
    problem: &ValidatedProblem,
    level: VerifyLevel,
    settings: SpectrumSettings,
) -> VerifyReport {
    let report = problem.symmetry_condition_check();
    let mut suite = Suite {
        self_adjoint: report.holds,
        checks: Vec::new(),
    };
    let mut rng = StdRng::seed_from_u64(SEED);
    suite.record(
        "symmetry condition at the breakpoints",
        crate::problem::SYMMETRY_REL_TOL,
        true,
        true,
        Ok(report.residuals[0].max(report.residuals[1])),
    );

    let boundary = (0..100)
        .map(|_| {
            let (u, up, v, vp): (f64, f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen(), rng.gen());
            let (fu, fv) = (problem.boundary_forms(u, up), problem.boundary_forms(v, vp));
            let lhs = problem.rho() * (u * vp - up * v);
            let rhs = fu.u1_form * fv.u1p_form - fu.u1p_form * fv.u1_form;
            (lhs - rhs).abs() / (1.0 + lhs.abs())
        })
        .fold(0.0, f64::max);
    suite.record("boundary form identity", 1e-13, true, false, Ok(boundary));

    let lambdas: Vec<f64> = (0..level.pick(5, 20))
        .map(|_| rng.gen_range(-10.0..200.0))
        .collect();
    let (abel, jump) = match abel_and_jump(problem, &lambdas) {
        Ok((a, j)) => (Ok(a), Ok(j)),
        Err(e) => (Err(e.clone()), Err(e)),
    };
    suite.record(
        "Abel constant per piece (relative spread)",
        1e-9,
        true,
        false,
        abel,
    );
    suite.record("Wronskian jump law (relative)", 1e-9, true, false, jump);

    let symmetry = max_of((0..10).map(|_| {
        let u = random_domain_element(problem, &mut rng, 4);
        let v = random_domain_element(problem, &mut rng, 4);
        symmetry_test(problem, &u, &v)
    }));
    suite.record(
        "symmetry of K on random domain pairs",
        1e-6,
        true,
        true,
        symmetry,
    );

    match first_eigenpairs(problem, level.pick(5, 10), settings) {
        Ok(pairs) => eigen_checks(&mut suite, problem, &pairs, level, &mut rng),
        Err(e) => suite.record("eigenpairs", 0.0, true, true, Err(e)),
    }

    VerifyReport {
        level,
        self_adjoint: report.holds,
        checks: suite.checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{validate_problem, ProblemSpec};

    fn spec() -> ProblemSpec {
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
    fn quick_suite_passes_on_identity_transmission() {
        let p = validate_problem(spec()).unwrap();
        let report = run_verification(&p, VerifyLevel::Quick, SpectrumSettings::default());
        for c in &report.checks {
            assert_eq!(c.status, CheckStatus::Pass, "{c:?}");
        }
        assert!(report.passed() && report.self_adjoint);
    }

    #[test]
    fn violated_symmetry_condition_gives_expected_failures() {
        let mut s = spec();
        s.delta = [2.0, 2.0, 1.0, 1.0];
        let p = validate_problem(s).unwrap();
        let report = run_verification(&p, VerifyLevel::Quick, SpectrumSettings::default());
        assert!(!report.self_adjoint);
        assert!(report.passed(), "{:?}", report.checks);
        assert!(report.expected_failures() >= 2);
        let k = report
            .checks
            .iter()
            .find(|c| c.name.starts_with("symmetry of K"))
            .unwrap();
        assert_eq!(k.status, CheckStatus::ExpectedFail);
    }

    #[test]
    fn level_parsing() {
        assert_eq!("full".parse::<VerifyLevel>().unwrap(), VerifyLevel::Full);
        assert!("fast".parse::<VerifyLevel>().is_err());
    }
}
