//! One line per acceptance criterion. Runs without the libtest harness so every
//! line is printed; the process fails if any criterion fails.

mod common;

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use proptest::test_runner::{Config, TestRunner};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use sturmtx::expansion::orthogonality_defect;
use sturmtx::hilbert::{random_domain_element, FnFunction};
use sturmtx::{
    apply_resolvent, boundary_coefficient_sum, boundary_kernel_sum, boundary_parseval,
    build_kernel, compare_spectra, discretize, expand_function, first_eigenpairs, h_norm,
    reality_probe, resolvent_residual, symmetry_test, Eigenpair, Expr, HilbertElement, Piece,
    PiecewiseFunction, SpectrumSettings, ToleranceProfile, ValidatedProblem,
};

use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn eigenpairs(problem: &ValidatedProblem, k: usize) -> Vec<Eigenpair> {
    first_eigenpairs(problem, k, SpectrumSettings::default()).expect("eigenpairs")
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let pairs = eigenpairs(&cfg_a(), 5);
    let elapsed = start.elapsed().as_secs_f64();
    let closed = cfg_a_closed_form(5);
    let mut worst: f64 = 0.0;
    let mut oracle_vs_frozen: f64 = 0.0;
    for i in 0..5 {
        worst = worst.max((pairs[i].lambda - closed[i]).abs() / closed[i].abs());
        oracle_vs_frozen =
            oracle_vs_frozen.max((closed[i] - CFG_A_FROZEN[i]).abs() / CFG_A_FROZEN[i].abs());
    }
    outcome(
        worst <= 1e-8 && oracle_vs_frozen <= 1e-12 && elapsed < 5.0,
        format!(
            "CFG-A first 5 eigenvalues vs closed-form bisection: max rel err {worst:.2e} (tol 1e-8), \
             bisection vs frozen {oracle_vs_frozen:.1e}, {elapsed:.2} s (limit 5 s)"
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut notes = Vec::new();
    for (name, problem) in [("CFG-A", cfg_a()), ("CFG-B", cfg_b())] {
        let shooting: Vec<f64> = eigenpairs(&problem, 5).iter().map(|p| p.lambda).collect();
        let fine = discretize(&problem, 256).unwrap();
        let comparison = compare_spectra(
            &shooting,
            &fine.eigenvalues(5).unwrap(),
            5,
            ToleranceProfile::for_mesh(fine.mesh_width()),
        )
        .unwrap();
        let e64 = discretize(&problem, 64).unwrap().eigenvalues(5).unwrap();
        let e128 = discretize(&problem, 128).unwrap().eigenvalues(5).unwrap();
        let ratios: Vec<f64> = (0..5)
            .map(|i| (e64[i] - shooting[i]).abs() / (e128[i] - shooting[i]).abs())
            .collect();
        let in_band = ratios.iter().all(|r| (3.5..=4.5).contains(r));
        pass &= comparison.pass && in_band;
        let (lo, hi) = ratios
            .iter()
            .fold((f64::MAX, f64::MIN), |(a, b), &r| (a.min(r), b.max(r)));
        let margin = comparison
            .rows
            .iter()
            .map(|r| r.scaled_diff / r.allowed)
            .fold(0.0, f64::max);
        notes.push(format!(
            "{name}: M=256 diff/allowed max {margin:.2}, ratio 64/128 in [{lo:.3}, {hi:.3}]"
        ));
    }
    let elapsed = start.elapsed().as_secs_f64();
    pass &= elapsed < 30.0;
    outcome(
        pass,
        format!(
            "oracle agreement: {}; {elapsed:.2} s (limit 30 s)",
            notes.join("; ")
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut worst: f64 = 0.0;
    for problem in [cfg_a(), cfg_b()] {
        let pairs = eigenpairs(&problem, 10);
        for m in 0..10 {
            for n in 0..m {
                worst = worst.max(orthogonality_defect(&problem, &pairs[m], &pairs[n]).unwrap());
            }
        }
    }
    outcome(
        worst <= 1e-7,
        format!("orthogonality of first 10 eigenelements, CFG-A and CFG-B: max defect {worst:.2e} (tol 1e-7)"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = StdRng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for problem in [cfg_a(), cfg_b()] {
        for _ in 0..10 {
            let u = random_domain_element(&problem, &mut rng, 4);
            let v = random_domain_element(&problem, &mut rng, 4);
            worst = worst.max(symmetry_test(&problem, &u, &v).unwrap());
        }
    }
    let control = negative_control();
    let mut control_max: f64 = 0.0;
    for _ in 0..10 {
        let u = random_domain_element(&control, &mut rng, 4);
        let v = random_domain_element(&control, &mut rng, 4);
        control_max = control_max.max(symmetry_test(&control, &u, &v).unwrap());
    }
    outcome(
        worst <= 1e-6 && control_max >= 1e-2,
        format!(
            "symmetry of K on 10 random domain pairs: max residual {worst:.2e} (tol 1e-6); \
             negative control max {control_max:.2e} (needs >= 1e-2)"
        ),
    )
}

fn random_rhs(rng: &mut StdRng) -> HilbertElement {
    let c: [[f64; 4]; 3] =
        std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
    let freq: f64 = rng.gen_range(0.5..4.0);
    let t2 = rng.gen_range(-1.0..1.0);
    HilbertElement::from_fn(
        move |piece: Piece, x: f64| {
            let k = &c[piece.index()];
            k[0] + k[1] * x + k[2] * x * x + k[3] * (freq * x).sin()
        },
        t2,
    )
}

fn criterion_5() -> Outcome {
    let mut rng = StdRng::seed_from_u64(5);
    let mut worst_residual: f64 = 0.0;
    let mut worst_spectral: f64 = 0.0;
    for problem in [cfg_a(), cfg_b()] {
        let pairs = eigenpairs(&problem, 6);
        for _ in 0..10 {
            let gap = rng.gen_range(0..5);
            let lambda = 0.5 * (pairs[gap].lambda + pairs[gap + 1].lambda);
            let t = random_rhs(&mut rng);
            let u = apply_resolvent(&problem, lambda, &t).unwrap();
            worst_residual =
                worst_residual.max(resolvent_residual(&problem, lambda, &t, &u).unwrap().max());
        }
        let lambda = 0.5 * (pairs[1].lambda + pairs[2].lambda);
        for pair in &pairs[..5] {
            let u = apply_resolvent(&problem, lambda, &pair.element()).unwrap();
            let expected = pair.element().scale(1.0 / (pair.lambda - lambda));
            worst_spectral = worst_spectral.max(h_norm(&problem, &u.sub(&expected)).unwrap());
        }
    }
    outcome(
        worst_residual <= 1e-6 && worst_spectral <= 1e-6,
        format!(
            "resolvent at mid-gap lambda, 10 random right-hand sides per config: max defect {worst_residual:.2e} (tol 1e-6); \
             R(lambda) Phi_n vs Phi_n/(lambda_n - lambda), n <= 5: {worst_spectral:.2e} (tol 1e-6)"
        ),
    )
}

fn criterion_6(pairs: &[Eigenpair]) -> Outcome {
    let problem = cfg_a();
    let partials: Vec<f64> = (1..=40)
        .map(|n| boundary_parseval(&problem, pairs, n).unwrap().partial)
        .collect();
    let target = boundary_parseval(&problem, pairs, 1).unwrap().target;
    let monotone = partials.windows(2).all(|w| w[1] >= w[0]);
    let overshoot = partials.iter().map(|s| s - target).fold(f64::MIN, f64::max);
    let (gap10, gap40) = (target - partials[9], target - partials[39]);
    outcome(
        monotone && overshoot <= 1e-8 && gap40 < gap10,
        format!(
            "boundary Parseval sum over (phi_n)'_1^2, CFG-A: nondecreasing {monotone}, max excess {overshoot:.2e} (tol 1e-8), \
             gap N=10 {gap10:.3e} -> N=40 {gap40:.3e}"
        ),
    )
}

fn criterion_7(pairs: &[Eigenpair]) -> Outcome {
    let problem = cfg_a();
    let grid: Vec<f64> = (0..200)
        .map(|i| -0.995 + 0.01 * i as f64)
        .filter(|&x| off_breakpoint(x))
        .collect();
    let (i10, i40) = (
        boundary_kernel_sum(&problem, pairs, 10, &grid).unwrap(),
        boundary_kernel_sum(&problem, pairs, 40, &grid).unwrap(),
    );
    let mut pass = i40.l2_norm < i10.l2_norm;
    let mut notes = vec![format!(
        "sum (phi_n)'_1 phi_n L2 {:.3e} -> {:.3e}",
        i10.l2_norm, i40.l2_norm
    )];
    let funcs: [(&str, Arc<dyn PiecewiseFunction>); 2] = [
        ("1", Arc::new(FnFunction(|_, _| 1.0))),
        ("x", Arc::new(FnFunction(|_, x| x))),
    ];
    for (name, f) in funcs {
        let c10 = boundary_coefficient_sum(&problem, pairs, f.clone(), 10).unwrap();
        let c40 = boundary_coefficient_sum(&problem, pairs, f.clone(), 40).unwrap();
        let e10 = expand_function(&problem, pairs, f.clone(), 10, &[])
            .unwrap()
            .l2_error;
        let e40 = expand_function(&problem, pairs, f, 40, &[])
            .unwrap()
            .l2_error;
        pass &= c40 < c10 && e40 < e10;
        notes.push(format!(
            "f={name}: |sum c_n (phi_n)'_1| {c10:.3e} -> {c40:.3e}, expansion L2 error {e10:.3e} -> {e40:.3e}"
        ));
    }
    outcome(
        pass,
        format!("completeness sums, CFG-A, N=10 -> 40: {}", notes.join("; ")),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = StdRng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for problem in [cfg_a(), cfg_b()] {
        let pairs = eigenpairs(&problem, 4);
        for gap in 0..3 {
            let lambda = 0.5 * (pairs[gap].lambda + pairs[gap + 1].lambda);
            let kernel = build_kernel(&problem, lambda).unwrap();
            let mut count = 0;
            while count < 100 {
                let (x, y): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                if !off_breakpoint(x) || !off_breakpoint(y) {
                    continue;
                }
                worst = worst.max(
                    (kernel.symmetric_value(x, y).unwrap() - kernel.symmetric_value(y, x).unwrap())
                        .abs(),
                );
                count += 1;
            }
        }
    }
    outcome(
        worst <= 1e-8,
        format!("Green kernel symmetry, 100 pairs x 3 lambda, CFG-A and CFG-B: max |K(x,y) - K(y,x)| {worst:.2e} (tol 1e-8)"),
    )
}

fn criterion_9() -> Outcome {
    let mut mins = Vec::new();
    for problem in [cfg_a(), cfg_b()] {
        let pairs = eigenpairs(&problem, 5);
        let samples: Vec<Complex64> = pairs
            .iter()
            .flat_map(|p| (0..5).map(move |j| Complex64::new(p.lambda, 0.1 + 0.475 * j as f64)))
            .collect();
        mins.push(reality_probe(&problem, &samples).unwrap().min_abs.unwrap());
    }
    outcome(
        mins.iter().all(|&m| m > 1e-3),
        format!(
            "min |D| on 5x5 grid (Re at eigenvalues, Im in [0.1, 2]): CFG-A {:.3e}, CFG-B {:.3e} (needs > 1e-3)",
            mins[0], mins[1]
        ),
    )
}

fn criterion_10() -> Outcome {
    let table_failures: Vec<&str> = PRECEDENCE
        .iter()
        .filter(|(s, v)| Expr::parse(s).map(|e| e.eval(2.0)) != Ok(Ok(*v)))
        .map(|(s, _)| *s)
        .collect();
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    let mut xs_rng = StdRng::seed_from_u64(10);
    let xs: Vec<f64> = (0..16).map(|_| xs_rng.gen_range(-1.0..1.0)).collect();
    let round_trip = runner.run(&arb_expr(), |e| {
        round_trips(&e, &xs).map_err(proptest::test_runner::TestCaseError::fail)
    });
    let corpus_failures: Vec<&str> = MALFORMED
        .iter()
        .filter(|(s, off)| !matches!(Expr::parse(s), Err(e) if e.offset == *off))
        .map(|(s, _)| *s)
        .collect();
    outcome(
        table_failures.is_empty() && round_trip.is_ok() && corpus_failures.is_empty(),
        format!(
            "parser: precedence table {}/{} ok, 1000 random trees x 16 points round trip {}, malformed corpus {}/{} rejected at the right offset",
            PRECEDENCE.len() - table_failures.len(),
            PRECEDENCE.len(),
            match &round_trip {
                Ok(()) => "ok".to_string(),
                Err(e) => format!("FAILED ({e})"),
            },
            MALFORMED.len() - corpus_failures.len(),
            MALFORMED.len(),
        ),
    )
}

fn main() {
    let expansion_pairs = eigenpairs(&cfg_a(), 40);
    let criteria: Vec<(usize, Box<dyn Fn() -> Outcome>)> = vec![
        (1, Box::new(criterion_1)),
        (2, Box::new(criterion_2)),
        (3, Box::new(criterion_3)),
        (4, Box::new(criterion_4)),
        (5, Box::new(criterion_5)),
        (6, Box::new(|| criterion_6(&expansion_pairs))),
        (7, Box::new(|| criterion_7(&expansion_pairs))),
        (8, Box::new(criterion_8)),
        (9, Box::new(criterion_9)),
        (10, Box::new(criterion_10)),
    ];
    let mut failed = 0;
    for (id, run) in &criteria {
        let result = run();
        println!(
            "{} criterion {id:>2}: {}",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail
        );
        failed += usize::from(!result.pass);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
