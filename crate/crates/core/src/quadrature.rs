//! Composite Gauss–Legendre quadrature with adaptive panel splitting.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Nodes per panel.
pub const GL_NODES: usize = 32;

/// Default absolute error target of [`integrate`].
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

const MAX_DEPTH: u32 = 24;

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn table() -> &'static (Vec<f64>, Vec<f64>) {
    static TABLE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    TABLE.get_or_init(|| gauss_legendre(GL_NODES))
}

/// One panel: `(integral, integral of |f|)`.
pub(crate) fn panel<F>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (nodes, weights) = table();
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    let mut abs = 0.0;
    for (x, w) in nodes.iter().zip(weights) {
        let v = f(mid + half * x)?;
        sum += w * v;
        abs += w * v.abs();
    }
    Ok((sum * half, abs * half.abs()))
}

/// Integrate `f` over `[a, b]` to absolute accuracy `tol`.
///
/// `f` is only ever called at interior Gauss nodes of `[a, b]`, never at its ends.
pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a == b {
        return Ok(0.0);
    }
    let length = (b - a).abs();
    let (whole, _) = panel(&mut f, a, b)?;
    let mut stack = vec![(a, b, whole, 0u32)];
    let mut total = 0.0;
    while let Some((lo, hi, estimate, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let (left, left_abs) = panel(&mut f, lo, mid)?;
        let (right, right_abs) = panel(&mut f, mid, hi)?;
        let refined = left + right;
        let allowed =
            (tol * (hi - lo).abs() / length).max(64.0 * f64::EPSILON * (left_abs + right_abs));
        if (refined - estimate).abs() <= allowed {
            total += refined;
        } else if depth >= MAX_DEPTH {
            return Err(Error::QuadratureNonConvergence { a: lo, b: hi });
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    Ok(total)
}
