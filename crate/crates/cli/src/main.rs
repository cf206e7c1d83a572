mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use sturmtx::hilbert::ExprFunction;
use sturmtx::spectrum::spectrum_lower_bound;
use sturmtx::{
    apply_resolvent, boundary_parseval, discretize, expand, find_eigenpairs, first_eigenpairs,
    h_norm, load_problem, resolvent_residual, run_verification, CheckStatus, Eigenpair, Error,
    Expr, Grid, HilbertElement, Piece, SpectrumSettings, ValidatedProblem, VerifyLevel,
};

use output::{float, Report};

#[derive(Parser)]
#[command(
    name = "sturmtx",
    version,
    about = "Sturm-Liouville problems with transmission conditions"
)]
struct Cli {
    /// Root tolerance for eigenvalue refinement.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    /// Scan grid: `sqrt:STEP`, `uniform:N`, or just `N` (uniform).
    #[arg(long, global = true)]
    grid: Option<String>,
    /// Worker threads for eigenvalue scans.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a problem file and report the boundary and breakpoint data.
    Validate { problem: PathBuf },
    /// Eigenvalues in a window, or the first K.
    Eigs {
        problem: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        lambda_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        lambda_max: Option<f64>,
        /// Number of eigenvalues (default 10 when no window is given).
        #[arg(long)]
        k: Option<usize>,
        /// Append discretization-oracle eigenvalues and differences.
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = 128)]
        oracle_m: usize,
    },
    /// Samples of the n-th normalized eigenfunction.
    Eigenfunction {
        problem: PathBuf,
        #[arg(long)]
        n: usize,
        /// Sample points per piece, endpoints included.
        #[arg(long, default_value_t = 101)]
        samples: usize,
        #[arg(long, allow_hyphen_values = true)]
        lambda_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        lambda_max: Option<f64>,
    },
    /// Solve (K - lambda) U = (rhs, t2).
    Resolvent {
        problem: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        /// Right-hand side as an expression in x.
        #[arg(long, allow_hyphen_values = true)]
        rhs: String,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t2: f64,
        #[arg(long, default_value_t = 101)]
        samples: usize,
    },
    /// Expansion coefficients of (rhs, t2) in the first N eigenelements.
    Expand {
        problem: PathBuf,
        #[arg(long, default_value_t = 20)]
        terms: usize,
        #[arg(long, allow_hyphen_values = true)]
        rhs: String,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t2: f64,
    },
    /// Run the invariant suite.
    Verify {
        problem: PathBuf,
        #[arg(long, default_value = "quick")]
        level: String,
    },
}

enum Failure {
    Input(String),
    Solver(String),
    NearEigenvalue(String),
    Verification(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Solver(_) => 3,
            Failure::NearEigenvalue(_) => 4,
            Failure::Verification(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m)
            | Failure::Solver(m)
            | Failure::NearEigenvalue(m)
            | Failure::Verification(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NearEigenvalue { .. } => Failure::NearEigenvalue(e.to_string()),
            e if e.is_input_error() => Failure::Input(e.to_string()),
            e => Failure::Solver(e.to_string()),
        }
    }
}

type Outcome = std::result::Result<String, Failure>;

fn parse_grid(text: &str) -> std::result::Result<Grid, Failure> {
    let bad = || {
        Failure::Input(format!(
            "invalid --grid `{text}`: expected sqrt:STEP, uniform:N, or N"
        ))
    };
    let (kind, value) = text.split_once(':').unwrap_or(("uniform", text));
    match kind {
        "sqrt" => match value.parse::<f64>() {
            Ok(step) if step > 0.0 && step.is_finite() => Ok(Grid::Sqrt { step }),
            _ => Err(bad()),
        },
        "uniform" => match value.parse::<usize>() {
            Ok(n) if n >= 2 => Ok(Grid::Uniform(n)),
            _ => Err(bad()),
        },
        _ => Err(bad()),
    }
}

struct Context {
    settings: SpectrumSettings,
    grid: Option<Grid>,
    grid_text: String,
}

impl Context {
    fn params(&self) -> Vec<(&'static str, String)> {
        vec![
            ("tol", float(self.settings.root_tol)),
            ("grid", self.grid_text.clone()),
        ]
    }

    /// Eigenpairs in `[lambda_min, lambda_max]`, or the first `k` when no upper end is given.
    fn eigenpairs(
        &self,
        problem: &ValidatedProblem,
        lambda_min: Option<f64>,
        lambda_max: Option<f64>,
        k: usize,
    ) -> std::result::Result<Vec<Eigenpair>, Failure> {
        match lambda_max {
            None => Ok(first_eigenpairs(problem, k, self.settings)?),
            Some(hi) => {
                let lo = match lambda_min {
                    Some(lo) => lo,
                    None => spectrum_lower_bound(problem)?,
                };
                if !(lo < hi) {
                    return Err(Failure::Input(format!(
                        "empty or inverted window [{lo}, {hi}]"
                    )));
                }
                let grid = self.grid.unwrap_or_else(|| Grid::default_for(lo, hi));
                let found = find_eigenpairs(problem, lo, hi, grid, self.settings)?;
                if let Some((lambda, e)) = found.skipped.first() {
                    return Err(Failure::Solver(format!(
                        "D could not be evaluated at lambda = {lambda}: {e}"
                    )));
                }
                Ok(found.pairs)
            }
        }
    }
}

fn side_label(problem: &ValidatedProblem, piece: Piece, x: f64) -> &'static str {
    let (a, b) = problem.interval(piece);
    if x == a && piece != Piece::Left {
        "+0"
    } else if x == b && piece != Piece::Right {
        "-0"
    } else {
        ""
    }
}

fn piece_samples(problem: &ValidatedProblem, per_piece: usize) -> Vec<(Piece, f64)> {
    Piece::ALL
        .into_iter()
        .flat_map(|piece| {
            let (a, b) = problem.interval(piece);
            (0..per_piece).map(move |i| {
                let x = if i + 1 == per_piece {
                    b
                } else {
                    a + (b - a) * i as f64 / (per_piece - 1) as f64
                };
                (piece, x)
            })
        })
        .collect()
}

fn parse_rhs(text: &str) -> std::result::Result<Expr, Failure> {
    Expr::parse(text).map_err(|e| Failure::Input(format!("--rhs: {e}")))
}

fn cmd_validate(path: &str, problem: &ValidatedProblem) -> Outcome {
    let p = problem.p_limits();
    let r = problem.r_limits();
    let sym = problem.symmetry_condition_check();
    let lines = [
        format!("problem = {path}"),
        format!("rho = {}", float(problem.rho())),
        format!("p(1) = {}", float(problem.p_at_one())),
        format!("boundary_weight = {}", float(problem.boundary_weight())),
        format!(
            "p_limits = {}, {}, {}, {}",
            float(p.h1_minus),
            float(p.h1_plus),
            float(p.h2_minus),
            float(p.h2_plus)
        ),
        format!(
            "r_limits = {}, {}, {}, {}",
            float(r.h1_minus),
            float(r.h1_plus),
            float(r.h2_minus),
            float(r.h2_plus)
        ),
        format!(
            "symmetry_residuals = {}, {}",
            float(sym.residuals[0]),
            float(sym.residuals[1])
        ),
        format!(
            "symmetry_condition = {}",
            if sym.holds {
                "holds"
            } else {
                "violated (operator is not self-adjoint)"
            }
        ),
    ];
    Ok(lines.iter().map(|l| format!("{l}\n")).collect())
}

fn cmd_eigs(
    ctx: &Context,
    path: &str,
    problem: &ValidatedProblem,
    window: (Option<f64>, Option<f64>),
    k: Option<usize>,
    oracle_m: Option<usize>,
) -> Outcome {
    let mut params = ctx.params();
    params.push(("lambda_min", window.0.map_or("auto".into(), float)));
    params.push(("lambda_max", window.1.map_or("none".into(), float)));
    params.push(("k", k.map_or("all".into(), |k| k.to_string())));
    params.push(("oracle_m", oracle_m.map_or("off".into(), |m| m.to_string())));
    let mut pairs = ctx.eigenpairs(problem, window.0, window.1, k.unwrap_or(10))?;
    if let Some(k) = k {
        pairs.truncate(k);
    }
    let mut report = Report::new("eigs", path, &params, problem);
    let oracle = match oracle_m {
        Some(m) if !pairs.is_empty() => Some(discretize(problem, m)?.eigenvalues(pairs.len())?),
        _ => None,
    };
    let mut header = vec!["n", "lambda", "d_residual", "norm_check"];
    if oracle_m.is_some() {
        header.extend(["oracle_lambda", "oracle_diff"]);
    }
    report.row(header);
    for (i, pair) in pairs.iter().enumerate() {
        let mut row = vec![
            (i + 1).to_string(),
            float(pair.lambda),
            float(pair.d_residual),
            float(pair.norm_check),
        ];
        if let Some(o) = &oracle {
            row.extend([float(o[i]), float(o[i] - pair.lambda)]);
        }
        report.row(row);
    }
    Ok(report.finish())
}

fn cmd_eigenfunction(
    ctx: &Context,
    path: &str,
    problem: &ValidatedProblem,
    n: usize,
    samples: usize,
    window: (Option<f64>, Option<f64>),
) -> Outcome {
    if n == 0 || samples < 2 {
        return Err(Failure::Input(
            "--n must be at least 1 and --samples at least 2".into(),
        ));
    }
    let pairs = ctx.eigenpairs(problem, window.0, window.1, n)?;
    let Some(pair) = pairs.get(n - 1) else {
        return Err(Failure::Solver(format!(
            "only {} eigenvalues found, asked for n = {n}",
            pairs.len()
        )));
    };
    let mut params = ctx.params();
    params.push(("n", n.to_string()));
    params.push(("samples_per_piece", samples.to_string()));
    params.push(("lambda_n", float(pair.lambda)));
    params.push(("boundary_scalar", float(pair.boundary_scalar)));
    let mut report = Report::new("eigenfunction", path, &params, problem);
    report.row(["x", "side", "phi", "phi_prime"]);
    for (piece, x) in piece_samples(problem, samples) {
        let (u, up) = pair.phi.value_on(piece, x)?;
        report.row([
            float(x),
            side_label(problem, piece, x).to_string(),
            float(u),
            float(up),
        ]);
    }
    Ok(report.finish())
}

fn cmd_resolvent(
    ctx: &Context,
    path: &str,
    problem: &ValidatedProblem,
    lambda: f64,
    rhs: &str,
    t2: f64,
    samples: usize,
) -> Outcome {
    if samples < 2 {
        return Err(Failure::Input("--samples must be at least 2".into()));
    }
    let t = HilbertElement::new(Arc::new(ExprFunction::uniform(parse_rhs(rhs)?)), t2);
    let u = apply_resolvent(problem, lambda, &t)?;
    let residual = resolvent_residual(problem, lambda, &t, &u)?;
    let mut params = ctx.params();
    params.push(("lambda", float(lambda)));
    params.push(("rhs", rhs.to_string()));
    params.push(("t2", float(t2)));
    params.push(("samples_per_piece", samples.to_string()));
    let mut report = Report::new("resolvent", path, &params, problem);
    report.row(["x", "side", "u", "u_prime"]);
    let f = u.function();
    for (piece, x) in piece_samples(problem, samples) {
        let up = match f.derivative(piece, x) {
            Some(d) => d?,
            None => f64::NAN,
        };
        report.row([
            float(x),
            side_label(problem, piece, x).to_string(),
            float(f.eval(piece, x)?),
            float(up),
        ]);
    }
    report.note(format!("boundary_scalar = {}", float(u.scalar())));
    report.note(format!("residual_ode = {}", float(residual.ode_defect)));
    report.note(format!("residual_bc_left = {}", float(residual.bc_left)));
    report.note(format!("residual_bc_right = {}", float(residual.bc_right)));
    let trans: Vec<String> = residual.trans_defects.iter().map(|&d| float(d)).collect();
    report.note(format!("residual_transmission = {}", trans.join(", ")));
    Ok(report.finish())
}

fn cmd_expand(
    ctx: &Context,
    path: &str,
    problem: &ValidatedProblem,
    terms: usize,
    rhs: &str,
    t2: f64,
) -> Outcome {
    let t = HilbertElement::new(Arc::new(ExprFunction::uniform(parse_rhs(rhs)?)), t2);
    let pairs = ctx.eigenpairs(problem, None, None, terms)?;
    let result = expand(problem, &pairs, &t, terms)?;
    let norm = h_norm(problem, &t)?;
    let mut params = ctx.params();
    params.push(("terms", terms.to_string()));
    params.push(("rhs", rhs.to_string()));
    params.push(("t2", float(t2)));
    let mut report = Report::new("expand", path, &params, problem);
    report.row(["n", "lambda", "coefficient", "boundary_scalar"]);
    for (i, (pair, c)) in pairs.iter().zip(&result.coefficients).enumerate() {
        report.row([
            (i + 1).to_string(),
            float(pair.lambda),
            float(*c),
            float(pair.boundary_scalar),
        ]);
    }
    let parseval = boundary_parseval(problem, &pairs, terms)?;
    report.note(format!("norm = {}", float(norm)));
    report.note(format!("residual_norm = {}", float(result.residual_norm)));
    report.note(format!("bessel_gap = {}", float(result.bessel_gap(norm))));
    report.note(format!(
        "boundary_parseval_sum = {}",
        float(parseval.partial)
    ));
    report.note(format!(
        "boundary_parseval_target = {}",
        float(parseval.target)
    ));
    Ok(report.finish())
}

fn cmd_verify(ctx: &Context, path: &str, problem: &ValidatedProblem, level: &str) -> Outcome {
    let level: VerifyLevel = level.parse()?;
    let result = run_verification(problem, level, ctx.settings);
    let mut params = ctx.params();
    params.push(("level", format!("{level:?}").to_lowercase()));
    let mut report = Report::new("verify", path, &params, problem);
    report.row(["check", "status", "measured", "bound", "threshold", "note"]);
    for c in &result.checks {
        report.row([
            c.name.to_string(),
            c.status.to_string(),
            float(c.measured),
            if c.upper_bound { "<=" } else { ">" }.to_string(),
            float(c.threshold),
            c.note.clone(),
        ]);
    }
    report.note(format!("self_adjoint = {}", result.self_adjoint));
    report.note(format!(
        "expected_failures = {}",
        result.expected_failures()
    ));
    let failures = result
        .checks
        .iter()
        .filter(|c| c.status == CheckStatus::Fail)
        .count();
    report.note(format!(
        "result = {}",
        if result.passed() { "pass" } else { "FAIL" }
    ));
    let text = report.finish();
    if failures > 0 {
        return Err(Failure::Verification(format!(
            "{failures} check(s) failed\n{text}"
        )));
    }
    Ok(text)
}

fn run(cli: &Cli) -> Outcome {
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        return Err(Failure::Input(format!(
            "--tol must be positive, got {}",
            cli.tol
        )));
    }
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Failure::Input("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::Solver(format!("thread pool: {e}")))?;
    }
    let grid = cli.grid.as_deref().map(parse_grid).transpose()?;
    let ctx = Context {
        settings: SpectrumSettings {
            root_tol: cli.tol,
            ..SpectrumSettings::default()
        },
        grid,
        grid_text: cli.grid.clone().unwrap_or_else(|| "auto".into()),
    };
    let path = match &cli.command {
        Command::Validate { problem }
        | Command::Eigs { problem, .. }
        | Command::Eigenfunction { problem, .. }
        | Command::Resolvent { problem, .. }
        | Command::Expand { problem, .. }
        | Command::Verify { problem, .. } => problem,
    };
    let problem = load_problem(path)?;
    let shown = path.display().to_string();
    match &cli.command {
        Command::Validate { .. } => cmd_validate(&shown, &problem),
        Command::Eigs {
            lambda_min,
            lambda_max,
            k,
            oracle,
            oracle_m,
            ..
        } => cmd_eigs(
            &ctx,
            &shown,
            &problem,
            (*lambda_min, *lambda_max),
            *k,
            oracle.then_some(*oracle_m),
        ),
        Command::Eigenfunction {
            n,
            samples,
            lambda_min,
            lambda_max,
            ..
        } => cmd_eigenfunction(
            &ctx,
            &shown,
            &problem,
            *n,
            *samples,
            (*lambda_min, *lambda_max),
        ),
        Command::Resolvent {
            lambda,
            rhs,
            t2,
            samples,
            ..
        } => cmd_resolvent(&ctx, &shown, &problem, *lambda, rhs, *t2, *samples),
        Command::Expand { terms, rhs, t2, .. } => {
            cmd_expand(&ctx, &shown, &problem, *terms, rhs, *t2)
        }
        Command::Verify { level, .. } => cmd_verify(&ctx, &shown, &problem, level),
    }
}

fn emit(cli: &Cli, text: &str) -> std::result::Result<(), Failure> {
    match &cli.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|text| emit(&cli, &text));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(text)) => {
            let (summary, table) = text.split_once('\n').unwrap_or((&text, ""));
            let code = Failure::Verification(String::new()).exit_code();
            if let Err(e) = emit(&cli, table) {
                eprintln!("error: {}", e.message());
            }
            eprintln!("error: {summary}");
            ExitCode::from(code)
        }
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.exit_code())
        }
    }
}
