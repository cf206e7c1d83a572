//! Independent discretization of the full problem as a matrix pencil `A v = lambda B v`.
//!
//! Each piece carries `M` uniform nodes including both ends, so the breakpoints
//! appear twice (one node per side). The extra unknown `z = (u)'_1` closes the
//! eigenparameter-dependent condition at x = 1. Assembly is the lumped-mass linear
//! finite-element form, which equals conservative second-order central differences
//! with `p` sampled at cell midpoints. Per-piece weights make the pencil symmetric
//! whenever the transmission data allow it; the derivative transmission conditions
//! and the condition at x = 1 then hold as natural conditions, while `u(-1) = 0`
//! and the value jumps are imposed through a prolongation onto free unknowns.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::problem::{Piece, ValidatedProblem};

/// Smallest accepted number of nodes per piece.
pub const MIN_NODES: usize = 8;

#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    m: usize,
    nodes: [Vec<f64>; 3],
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    prolongation: DMatrix<f64>,
    weights: [f64; 3],
}

impl DiscreteOperator {
    /// Nodes per piece.
    pub fn nodes_per_piece(&self) -> usize {
        self.m
    }

    pub fn nodes(&self, piece: Piece) -> &[f64] {
        &self.nodes[piece.index()]
    }

    /// Dimension of the assembled pencil, `3 M + 1`.
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Largest mesh width over the three pieces.
    pub fn mesh_width(&self) -> f64 {
        self.nodes
            .iter()
            .map(|n| (n[n.len() - 1] - n[0]) / (n.len() - 1) as f64)
            .fold(0.0, f64::max)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// Map from free unknowns to the duplicated-node vector.
    pub fn prolongation(&self) -> &DMatrix<f64> {
        &self.prolongation
    }

    /// Piece weights applied before assembly.
    pub fn piece_weights(&self) -> [f64; 3] {
        self.weights
    }

    /// True when the weighted pencil is symmetric with positive diagonal `B`.
    pub fn is_symmetric_definite(&self) -> bool {
        self.weights.iter().all(|&w| w > 0.0)
    }

    /// `max |A - A^T|` of the assembled matrix.
    pub fn symmetry_residual(&self) -> f64 {
        (&self.a - self.a.transpose()).amax()
    }

    /// Pencil restricted to the free unknowns; `B` is diagonal there and returned as a vector.
    pub fn reduced(&self) -> (DMatrix<f64>, DVector<f64>) {
        let pt = self.prolongation.transpose();
        let a = &pt * &self.a * &self.prolongation;
        let b = (&pt * &self.b * &self.prolongation).diagonal();
        (a, b)
    }

    /// The `k` smallest eigenvalues, ascending.
    pub fn eigenvalues(&self, k: usize) -> Result<Vec<f64>> {
        Ok(self.eigenpairs(k)?.0)
    }

    /// The `k` smallest eigenvalues with their eigenvectors on the free unknowns,
    /// normalized to unit `B`-norm. Only available on the symmetric path.
    pub fn eigenpairs(&self, k: usize) -> Result<(Vec<f64>, Vec<DVector<f64>>)> {
        let (a, b) = self.reduced();
        let n = b.len();
        if k > n {
            return Err(Error::InvalidArgument(format!(
                "requested {k} eigenvalues from a pencil of size {n}"
            )));
        }
        if !self.is_symmetric_definite() {
            return Ok((general_eigenvalues(&a, &b, k)?, Vec::new()));
        }
        let scale = b.map(|v| 1.0 / v.sqrt());
        let mut c = a;
        for i in 0..n {
            for j in 0..n {
                c[(i, j)] *= scale[i] * scale[j];
            }
        }
        let c = 0.5 * (&c + c.transpose());
        let eig = SymmetricEigen::try_new(c, 1e-15, 0).ok_or_else(|| {
            Error::EigSolveFailure("symmetric eigensolver did not converge".into())
        })?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = order[..k]
            .iter()
            .map(|&i| eig.eigenvectors.column(i).component_mul(&scale))
            .collect();
        Ok((values, vectors))
    }
}

fn general_eigenvalues(a: &DMatrix<f64>, b: &DVector<f64>, k: usize) -> Result<Vec<f64>> {
    let mut c = a.clone();
    for (i, bi) in b.iter().enumerate() {
        if *bi == 0.0 {
            return Err(Error::EigSolveFailure("singular mass matrix".into()));
        }
        c.row_mut(i).scale_mut(1.0 / bi);
    }
    let schur = c
        .try_schur(1e-15, 0)
        .ok_or_else(|| Error::EigSolveFailure("Schur decomposition did not converge".into()))?;
    let mut values = Vec::with_capacity(b.len());
    for z in schur.complex_eigenvalues().iter() {
        if z.im.abs() > 1e-8 * (1.0 + z.re.abs()) {
            return Err(Error::EigSolveFailure(format!(
                "non-real discrete eigenvalue {z}"
            )));
        }
        values.push(z.re);
    }
    values.sort_by(f64::total_cmp);
    values.truncate(k);
    Ok(values)
}

/// Assemble the pencil with `m` nodes per piece.
pub fn discretize(problem: &ValidatedProblem, m: usize) -> Result<DiscreteOperator> {
    if m < MIN_NODES {
        return Err(Error::InvalidArgument(format!(
            "oracle needs at least {MIN_NODES} nodes per piece, got {m}"
        )));
    }
    let g = problem.gamma();
    let d = problem.delta();
    let pl = problem.p_limits();
    let w1 = 1.0;
    let w2 = w1 * pl.h1_minus * d[0] * d[1] / (pl.h1_plus * g[0] * g[1]);
    let w3 = w2 * pl.h2_minus * d[2] * d[3] / (pl.h2_plus * g[2] * g[3]);
    let weights = [w1, w2, w3];

    let dim = 3 * m + 1;
    let z = 3 * m;
    let mut a = DMatrix::zeros(dim, dim);
    let mut b = DMatrix::zeros(dim, dim);
    let mut nodes: [Vec<f64>; 3] = Default::default();
    for piece in Piece::ALL {
        let (lo, hi) = problem.interval(piece);
        let hh = (hi - lo) / (m - 1) as f64;
        let xs: Vec<f64> = (0..m)
            .map(|j| if j == m - 1 { hi } else { lo + j as f64 * hh })
            .collect();
        let theta = weights[piece.index()];
        let off = piece.index() * m;
        for e in 0..m - 1 {
            let (xl, xr) = (xs[e], xs[e + 1]);
            let h = xr - xl;
            let stiff = theta * problem.p(piece, 0.5 * (xl + xr))? / h;
            let (i, j) = (off + e, off + e + 1);
            a[(i, i)] += stiff;
            a[(j, j)] += stiff;
            a[(i, j)] -= stiff;
            a[(j, i)] -= stiff;
            for (node, x) in [(i, xl), (j, xr)] {
                a[(node, node)] += theta * problem.q(piece, x)? * 0.5 * h;
                b[(node, node)] += theta * problem.r(piece, x)? * 0.5 * h;
            }
        }
        nodes[piece.index()] = xs;
    }

    // Condition at x = 1 through z = (u)'_1.
    let [a1, a2] = problem.alpha();
    let [b1, b2] = problem.beta();
    let rho = problem.rho();
    let p1 = weights[2] * problem.p_at_one();
    let last = 3 * m - 1;
    b[(z, z)] = p1 / rho;
    let free_z = a2 != 0.0;
    if free_z {
        a[(last, last)] -= p1 * a1 / a2;
        a[(last, z)] += p1 / a2;
        a[(z, last)] += p1 / a2;
        a[(z, z)] -= p1 * b2 / (rho * a2);
    } else {
        a[(last, last)] -= p1 * b1 / b2;
    }

    // Free unknowns: interior and right-end nodes of each piece, then z if free.
    let reduced_dim = 3 * (m - 1) + usize::from(free_z);
    let mut prolongation = DMatrix::zeros(dim, reduced_dim);
    let col = |piece: usize, j: usize| piece * (m - 1) + (j - 1);
    for piece in 0..3 {
        for j in 1..m {
            prolongation[(piece * m + j, col(piece, j))] = 1.0;
        }
        if piece > 0 {
            let (ratio, _) = problem.jump_ratios(piece - 1);
            prolongation[(piece * m, col(piece - 1, m - 1))] = ratio;
        }
    }
    if free_z {
        prolongation[(z, reduced_dim - 1)] = 1.0;
    } else {
        prolongation[(z, col(2, m - 1))] = a1;
    }

    Ok(DiscreteOperator {
        m,
        nodes,
        a,
        b,
        prolongation,
        weights,
    })
}

/// The `k` smallest eigenvalues of the discretization with `m` nodes per piece.
pub fn oracle_eigenvalues(problem: &ValidatedProblem, m: usize, k: usize) -> Result<Vec<f64>> {
    discretize(problem, m)?.eigenvalues(k)
}

/// Allowed scaled difference `|d| / (1 + |lambda|) <= c h^2 |lambda| + floor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceProfile {
    pub mesh_width: f64,
    pub c: f64,
    pub floor: f64,
}

impl ToleranceProfile {
    pub fn for_mesh(mesh_width: f64) -> Self {
        ToleranceProfile {
            mesh_width,
            c: 5.0,
            floor: 1e-6,
        }
    }

    pub fn allowed(&self, lambda: f64) -> f64 {
        self.c * self.mesh_width * self.mesh_width * lambda.abs() + self.floor
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub index: usize,
    pub shooting: f64,
    pub oracle: f64,
    /// `|shooting - oracle| / (1 + |shooting|)`.
    pub scaled_diff: f64,
    pub allowed: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumComparison {
    pub rows: Vec<ComparisonRow>,
    pub pass: bool,
}

impl SpectrumComparison {
    /// Index of the first row outside the profile.
    pub fn first_mismatch(&self) -> Option<usize> {
        self.rows.iter().find(|r| !r.pass).map(|r| r.index)
    }
}

/// Compare the first `k` entries of two sorted eigenvalue lists.
pub fn compare_spectra(
    shooting: &[f64],
    oracle: &[f64],
    k: usize,
    profile: ToleranceProfile,
) -> Result<SpectrumComparison> {
    for list in [shooting, oracle] {
        if list.len() < k {
            return Err(Error::LengthMismatch {
                expected: k,
                got: list.len(),
            });
        }
    }
    let rows: Vec<ComparisonRow> = (0..k)
        .map(|i| {
            let (s, o) = (shooting[i], oracle[i]);
            let scaled_diff = (s - o).abs() / (1.0 + s.abs());
            let allowed = profile.allowed(s);
            ComparisonRow {
                index: i,
                shooting: s,
                oracle: o,
                scaled_diff,
                allowed,
                pass: scaled_diff <= allowed,
            }
        })
        .collect();
    let pass = rows.iter().all(|r| r.pass);
    Ok(SpectrumComparison { rows, pass })
}
