#![allow(dead_code)]

use proptest::prelude::*;
use sturmtx::expr::BinOp;
use sturmtx::{validate_problem, Expr, Func, ProblemSpec, ValidatedProblem};

/// Identity transmission, unit coefficients, `u(1) + lambda u'(1) = 0`.
pub fn cfg_a() -> ValidatedProblem {
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

/// `p = 1, 4, 4` with `delta = (2, 2, 1, 1)`, which keeps the symmetry condition.
pub fn cfg_b() -> ValidatedProblem {
    let mut spec = ProblemSpec::constant(
        -1.0 / 3.0,
        1.0 / 3.0,
        1.0,
        1.0,
        0.0,
        [0.0, -1.0],
        [1.0, 0.0],
    );
    spec.p = [Expr::Num(1.0), Expr::Num(4.0), Expr::Num(4.0)];
    spec.delta = [2.0, 2.0, 1.0, 1.0];
    validate_problem(spec).unwrap()
}

/// `delta_1 = delta_2 = 2` with `p = 1` everywhere: the symmetry condition fails.
pub fn negative_control() -> ValidatedProblem {
    let mut spec = ProblemSpec::constant(
        -1.0 / 3.0,
        1.0 / 3.0,
        1.0,
        1.0,
        0.0,
        [0.0, -1.0],
        [1.0, 0.0],
    );
    spec.delta = [2.0, 2.0, 1.0, 1.0];
    validate_problem(spec).unwrap()
}

/// CFG-A eigenvalues from a 50-digit evaluation of the closed-form equations.
pub const CFG_A_FROZEN: [f64; 12] = [
    -0.974_623_702_788_533_588_97,
    1.220_098_836_324_658_820_7,
    5.724_697_005_392_685_716_1,
    15.485_759_232_028_736_690,
    30.258_702_400_944_390_582,
    49.984_876_276_631_682_272,
    74.652_278_110_090_569_532,
    104.257_287_918_682_158_42,
    138.798_516_483_882_452_97,
    178.275_338_751_021_876_90,
    222.687_439_875_827_601_63,
    272.034_647_294_886_068_92,
];

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// The `k` smallest CFG-A eigenvalues by bisection on the closed forms:
/// `tanh(2t) = t^3` with `lambda = -t^2`, and `sin(2s)/s + s^2 cos(2s) = 0`
/// with `lambda = s^2`.
pub fn cfg_a_closed_form(k: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let neg = |t: f64| (2.0 * t).tanh() - t.powi(3);
    let step = 1e-3;
    let mut t = step;
    while t < 3.0 {
        if (neg(t) < 0.0) != (neg(t + step) < 0.0) {
            let root = bisect(neg, t, t + step);
            out.push(-root * root);
        }
        t += step;
    }
    out.reverse();
    let pos = |s: f64| (2.0 * s).sin() / s + s * s * (2.0 * s).cos();
    let mut s = step;
    while out.len() < k {
        if (pos(s) < 0.0) != (pos(s + step) < 0.0) {
            let root = bisect(pos, s, s + step);
            out.push(root * root);
        }
        s += step;
    }
    out.truncate(k);
    out
}

/// Sample points in (-1, 1) that avoid the CFG breakpoints.
pub fn off_breakpoint(x: f64) -> bool {
    (x + 1.0 / 3.0).abs() > 1e-6 && (x - 1.0 / 3.0).abs() > 1e-6 && x.abs() < 1.0
}

/// Random expression trees whose leaves are `x` or small non-negative constants.
pub fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        Just(Expr::Var),
        (0.0f64..10.0).prop_map(Expr::Num),
        (0u32..20).prop_map(|n| Expr::Num(n as f64)),
        (-5.0f64..0.0).prop_map(Expr::Num),
    ];
    leaf.prop_recursive(5, 48, 2, |inner| {
        let op = prop_oneof![
            Just(BinOp::Add),
            Just(BinOp::Sub),
            Just(BinOp::Mul),
            Just(BinOp::Div),
            Just(BinOp::Pow),
        ];
        let func = proptest::sample::select(Func::ALL.to_vec());
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (op, inner.clone(), inner.clone()).prop_map(|(o, l, r)| Expr::Bin(
                o,
                Box::new(l),
                Box::new(r)
            )),
            (func, inner).prop_map(|(f, e)| Expr::Call(f, Box::new(e))),
        ]
    })
}

/// Parses the printed form and compares evaluations bit for bit (or error for error).
pub fn round_trips(e: &Expr, xs: &[f64]) -> Result<(), String> {
    let text = e.to_string();
    let back = Expr::parse(&text).map_err(|err| format!("`{text}` failed to reparse: {err}"))?;
    for &x in xs {
        match (e.eval(x), back.eval(x)) {
            (Ok(a), Ok(b)) if a == b => {}
            (Err(_), Err(_)) => {}
            (a, b) => return Err(format!("`{text}` at x = {x}: {a:?} vs {b:?}")),
        }
    }
    Ok(())
}

/// Malformed inputs and the byte offset at which each must be rejected.
pub const MALFORMED: [(&str, usize); 20] = [
    ("", 0),
    ("1 +", 3),
    ("(1 + 2", 6),
    ("1 + * 2", 4),
    ("sin x", 4),
    ("foo(1)", 0),
    ("1 2", 2),
    ("2 $ 3", 2),
    ("1e", 2),
    ("1e+", 3),
    (")", 0),
    ("x ^", 3),
    ("cos()", 4),
    ("(x))", 3),
    ("3 * (x - 1", 10),
    ("x + y", 4),
    ("2..5", 2),
    ("exp(1, 2)", 5),
    ("x ** 2", 3),
    ("abs", 3),
];

/// `(input, value at x = 2)` pairs pinning precedence and associativity.
pub const PRECEDENCE: [(&str, f64); 16] = [
    ("1 + 2 * 3", 7.0),
    ("(1 + 2) * 3", 9.0),
    ("8 - 3 - 2", 3.0),
    ("8 / 4 / 2", 1.0),
    ("2 ^ 3 ^ 2", 512.0),
    ("(2 ^ 3) ^ 2", 64.0),
    ("-x ^ 2", -4.0),
    ("(-x) ^ 2", 4.0),
    ("2 ^ -1", 0.5),
    ("-2 * x", -4.0),
    ("x * -3", -6.0),
    ("--x", 2.0),
    ("6 / 2 * 3", 9.0),
    ("1 - 2 + 3", 2.0),
    ("2 * x ^ 2 + 1", 9.0),
    ("-sqrt(x * 8) ^ 2 / 4", -4.0),
];

/// Variable coefficients on uneven pieces, with transmission coefficients chosen so
/// the symmetry condition holds.
pub fn cfg_variable() -> ValidatedProblem {
    let e = |s: &str| Expr::parse(s).unwrap();
    let spec = ProblemSpec {
        h1: -0.4,
        h2: 0.3,
        r: [e("1 + x^2"), e("2"), e("1.5 + sin(x)")],
        p: [e("exp(x)"), e("2 + x"), e("1 + x^2")],
        q: [e("x"), e("0"), e("cos(x)")],
        alpha: [0.5, -1.0],
        beta: [1.0, 0.2],
        gamma: [1.0, 1.0, 1.0, 1.0],
        delta: [1.0, 1.6 / (-0.4f64).exp(), 0.5, 1.09 / 1.15],
    };
    validate_problem(spec).unwrap()
}
