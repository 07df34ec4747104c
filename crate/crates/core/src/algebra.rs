//! Synchronization by groups: the difference matrix `C_p`, its kernel, the
//! compatibility conditions on the coupling matrices and the reduced and limit
//! systems they produce.
//!
//! Components `0..N` are split into consecutive groups. Within a group all
//! components are expected to synchronize; `C_p` stacks the first differences
//! of each group, so its kernel is spanned by the group indicator vectors.
//!
//! Reduction uses the normalized projection `M = (C_p C_p^T)^{-1/2} C_p`,
//! which has orthonormal rows and keeps the reduced matrices symmetric.

use std::fmt;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{
    asymmetry, inv_sqrt_spd, kernel_basis, max_abs, numerical_rank, sqrt_spd, symmetrize,
};

/// Default relative tolerance of the compatibility checks.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Consecutive groups of components, each of size at least two.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPartition {
    sizes: Vec<usize>,
    bounds: Vec<usize>,
}

impl GroupPartition {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidPartition(
                "at least one group is required".into(),
            ));
        }
        if let Some((r, &s)) = sizes.iter().enumerate().find(|(_, &s)| s < 2) {
            return Err(Error::InvalidPartition(format!(
                "group {} has size {s}; every group needs at least 2 components",
                r + 1
            )));
        }
        let mut bounds = Vec::with_capacity(sizes.len() + 1);
        bounds.push(0);
        for s in &sizes {
            bounds.push(bounds.last().unwrap() + s);
        }
        Ok(Self { sizes, bounds })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// `n_0 = 0 < n_1 < ... < n_p = N`.
    pub fn bounds(&self) -> &[usize] {
        &self.bounds
    }

    /// Number of components `N`.
    pub fn components(&self) -> usize {
        *self.bounds.last().unwrap()
    }

    /// Number of groups `p`.
    pub fn groups(&self) -> usize {
        self.sizes.len()
    }

    /// Components of group `r` (zero-based).
    pub fn group(&self, r: usize) -> Range<usize> {
        self.bounds[r]..self.bounds[r + 1]
    }

    /// Rows of `C_p` belonging to group `r`.
    pub fn difference_rows(&self, r: usize) -> Range<usize> {
        (self.bounds[r] - r)..(self.bounds[r + 1] - r - 1)
    }

    /// Euclidean norm of the indicator vector of group `r`.
    pub fn indicator_norm(&self, r: usize) -> f64 {
        (self.sizes[r] as f64).sqrt()
    }
}

/// Whether a coupling matrix acts on displacements or on velocities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Stiffness,
    Damping,
}

impl Role {
    pub fn symbol(self) -> char {
        match self {
            Role::Stiffness => 'A',
            Role::Damping => 'D',
        }
    }
}

/// A constant symmetric positive semi-definite `N x N` coupling matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    entries: DMatrix<f64>,
    role: Role,
}

impl CouplingMatrix {
    pub fn new(entries: DMatrix<f64>, role: Role) -> Result<Self> {
        let bad = |reason: String| Error::InvalidCoupling {
            role: role.symbol(),
            reason,
        };
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(bad(format!(
                "expected a non-empty square matrix, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(bad("non-finite entry".into()));
        }
        let scale = max_abs(&entries);
        let asym = asymmetry(&entries);
        if asym > 1e-12 * scale {
            return Err(bad(format!("not symmetric (max asymmetry {asym:e})")));
        }
        let eig = symmetrize(&entries).symmetric_eigenvalues();
        let top = eig.max();
        let low = eig.min();
        if low < -1e-10 * top.max(0.0) {
            return Err(bad(format!(
                "not positive semi-definite (smallest eigenvalue {low:e})"
            )));
        }
        Ok(Self { entries, role })
    }

    pub fn zeros(n: usize, role: Role) -> Self {
        Self {
            entries: DMatrix::zeros(n, n),
            role,
        }
    }

    pub fn identity(n: usize, role: Role) -> Self {
        Self {
            entries: DMatrix::identity(n, n),
            role,
        }
    }

    pub fn from_rows(rows: &[&[f64]], role: Role) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidCoupling {
                role: role.symbol(),
                reason: "rows of unequal length".into(),
            });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]), role)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn order(&self) -> usize {
        self.entries.nrows()
    }

    pub fn role(&self) -> Role {
        self.role
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.entries.norm()
    }
}

/// `C_p` together with the quantities derived from the partition alone.
#[derive(Debug, Clone)]
pub struct SyncBasis {
    partition: GroupPartition,
    cp: DMatrix<f64>,
    kernel: Vec<DVector<f64>>,
    gram: DMatrix<f64>,
    gram_sqrt: DMatrix<f64>,
    gram_inv: DMatrix<f64>,
    gram_inv_sqrt: DMatrix<f64>,
    normalizer: DMatrix<f64>,
}

/// Builds `C_p`, the indicator vectors spanning its kernel and the normalizer
/// `M = (C_p C_p^T)^{-1/2} C_p`.
pub fn build_sync_matrix(partition: &GroupPartition) -> SyncBasis {
    let n = partition.components();
    let p = partition.groups();
    let mut cp = DMatrix::zeros(n - p, n);
    let mut kernel = Vec::with_capacity(p);
    for r in 0..p {
        let cols = partition.group(r);
        for (k, row) in partition.difference_rows(r).enumerate() {
            cp[(row, cols.start + k)] = 1.0;
            cp[(row, cols.start + k + 1)] = -1.0;
        }
        let mut e = DVector::zeros(n);
        cols.for_each(|i| e[i] = 1.0);
        kernel.push(e);
    }
    let gram = &cp * cp.transpose();
    // The Gram matrix of first differences is a block of [2, -1] tridiagonals,
    // always positive definite.
    let gram_sqrt = sqrt_spd(&gram).expect("difference Gram matrix is SPD");
    let gram_inv_sqrt = inv_sqrt_spd(&gram).expect("difference Gram matrix is SPD");
    let gram_inv = symmetrize(&(&gram_inv_sqrt * &gram_inv_sqrt));
    let normalizer = &gram_inv_sqrt * &cp;
    SyncBasis {
        partition: partition.clone(),
        cp,
        kernel,
        gram,
        gram_sqrt,
        gram_inv,
        gram_inv_sqrt,
        normalizer,
    }
}

impl SyncBasis {
    pub fn partition(&self) -> &GroupPartition {
        &self.partition
    }

    /// The `(N - p) x N` synchronization matrix.
    pub fn cp(&self) -> &DMatrix<f64> {
        &self.cp
    }

    /// Group indicator vectors `e_r`.
    pub fn kernel(&self) -> &[DVector<f64>] {
        &self.kernel
    }

    /// `C_p C_p^T`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// `(C_p C_p^T)^{1/2}`.
    pub fn gram_sqrt(&self) -> &DMatrix<f64> {
        &self.gram_sqrt
    }

    /// `(C_p C_p^T)^{-1}`.
    pub fn gram_inv(&self) -> &DMatrix<f64> {
        &self.gram_inv
    }

    /// `(C_p C_p^T)^{-1/2}`.
    pub fn gram_inv_sqrt(&self) -> &DMatrix<f64> {
        &self.gram_inv_sqrt
    }

    /// `M = (C_p C_p^T)^{-1/2} C_p`, with `M M^T = I`.
    pub fn normalizer(&self) -> &DMatrix<f64> {
        &self.normalizer
    }

    /// Orthogonal projector `C_p^T (C_p C_p^T)^{-1} C_p` onto `Im(C_p^T)`.
    pub fn complement_projector(&self) -> DMatrix<f64> {
        self.cp.transpose() * &self.gram_inv * &self.cp
    }

    fn check_order(&self, m: &CouplingMatrix) -> Result<()> {
        let n = self.partition.components();
        if m.order() != n {
            return Err(Error::Dimension(format!(
                "{} has order {} but the partition has {n} components",
                m.role().symbol(),
                m.order()
            )));
        }
        Ok(())
    }
}

/// Outcome of the kernel-invariance test `A Ker(C_p) ⊆ Ker(C_p)`.
#[derive(Debug, Clone)]
pub struct CpCompatibility {
    pub compatible: bool,
    /// `max_r ||C_p A e_r||`.
    pub residual: f64,
    /// Kernel vector with the largest residual (zero-based).
    pub worst_group: usize,
    /// Block row sums `alpha_rs`, averaged over the rows of block `r`.
    pub alpha: DMatrix<f64>,
    /// Largest spread of the row sums inside any block.
    pub row_sum_deviation: f64,
    /// Verdict of the block row-sum criterion; agrees with `compatible`.
    pub row_sums_constant: bool,
    pub threshold: f64,
}

pub fn check_cp_compatibility(
    a: &CouplingMatrix,
    basis: &SyncBasis,
    tol: f64,
) -> Result<CpCompatibility> {
    basis.check_order(a)?;
    let part = basis.partition();
    let p = part.groups();
    let am = a.matrix();
    let threshold = tol * (1.0 + a.norm());

    let (mut residual, mut worst_group) = (0.0_f64, 0);
    for (r, e) in basis.kernel().iter().enumerate() {
        let res = (basis.cp() * (am * e)).norm();
        if res > residual {
            residual = res;
            worst_group = r;
        }
    }

    let mut alpha = DMatrix::zeros(p, p);
    let mut deviation = 0.0_f64;
    for r in 0..p {
        for s in 0..p {
            let sums: Vec<f64> = part
                .group(r)
                .map(|i| part.group(s).map(|j| am[(i, j)]).sum())
                .collect();
            let lo = sums.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = sums.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            deviation = deviation.max(hi - lo);
            alpha[(r, s)] = sums.iter().sum::<f64>() / sums.len() as f64;
        }
    }

    Ok(CpCompatibility {
        compatible: residual <= threshold,
        residual,
        worst_group,
        alpha,
        row_sum_deviation: deviation,
        row_sums_constant: deviation <= threshold,
        threshold,
    })
}

/// Outcome of the test `Ker(C_p) ⊆ Ker(D)`, with the factor `R` of
/// `D = C_p^T R C_p` when it holds.
#[derive(Debug, Clone)]
pub struct StrongCompatibility {
    pub strong: bool,
    /// `max_r ||D e_r||`.
    pub residual: f64,
    pub worst_group: usize,
    pub r: Option<DMatrix<f64>>,
    /// `||D - C_p^T R C_p||` when `R` exists.
    pub reconstruction_residual: Option<f64>,
    pub threshold: f64,
}

pub fn check_strong_compatibility(
    d: &CouplingMatrix,
    basis: &SyncBasis,
    tol: f64,
) -> Result<StrongCompatibility> {
    basis.check_order(d)?;
    let dm = d.matrix();
    let threshold = tol * (1.0 + d.norm());
    let (mut residual, mut worst_group) = (0.0_f64, 0);
    for (r, e) in basis.kernel().iter().enumerate() {
        let res = (dm * e).norm();
        if res > residual {
            residual = res;
            worst_group = r;
        }
    }
    let strong = residual <= threshold;
    let (r, reconstruction_residual) = if strong {
        let cp = basis.cp();
        let gi = basis.gram_inv();
        let r = symmetrize(&(gi * cp * dm * cp.transpose() * gi));
        let rec = (dm - cp.transpose() * &r * cp).norm();
        (Some(r), Some(rec))
    } else {
        (None, None)
    };
    Ok(StrongCompatibility {
        strong,
        residual,
        worst_group,
        r,
        reconstruction_residual,
        threshold,
    })
}

/// Coupling matrix `B = (beta_rs)` of the conservative limit system,
/// `beta_rs = (A e_r, e_s) / (||e_r|| ||e_s||)`.
pub fn beta_matrix(a: &CouplingMatrix, basis: &SyncBasis, tol: f64) -> Result<DMatrix<f64>> {
    let compat = check_cp_compatibility(a, basis, tol)?;
    if !compat.compatible {
        return Err(incompatible_a(&compat));
    }
    let part = basis.partition();
    let p = part.groups();
    let am = a.matrix();
    let e = basis.kernel();
    let b = DMatrix::from_fn(p, p, |r, s| {
        let sizes = (part.sizes()[r] * part.sizes()[s]) as f64;
        (am * &e[r]).dot(&e[s]) / sizes.sqrt()
    });
    Ok(b)
}

/// `max_r ||A e_r - sum_s beta_rs (||e_r|| / ||e_s||) e_s||`.
pub fn beta_expansion_residual(a: &CouplingMatrix, basis: &SyncBasis, b: &DMatrix<f64>) -> f64 {
    let part = basis.partition();
    let e = basis.kernel();
    (0..part.groups())
        .map(|r| {
            let mut expansion = DVector::zeros(part.components());
            for s in 0..part.groups() {
                expansion += &e[s] * (b[(r, s)] * part.indicator_norm(r) / part.indicator_norm(s));
            }
            (a.matrix() * &e[r] - expansion).norm()
        })
        .fold(0.0, f64::max)
}

fn incompatible_a(c: &CpCompatibility) -> Error {
    Error::Incompatible {
        condition: "C_p-compatibility".into(),
        detail: format!(
            "C_p A e_{} ≠ 0 (residual {:e} > {:e})",
            c.worst_group + 1,
            c.residual,
            c.threshold
        ),
    }
}

fn not_strong(c: &StrongCompatibility) -> Error {
    Error::Incompatible {
        condition: "strong C_p-compatibility".into(),
        detail: format!(
            "D e_{} ≠ 0 (residual {:e} > {:e})",
            c.worst_group + 1,
            c.residual,
            c.threshold
        ),
    }
}

/// Reduced matrices of the self-closed system for `W = M U`, plus the limit
/// coupling `B` of the synchronized state.
#[derive(Debug, Clone)]
pub struct SyncReduction {
    pub basis: SyncBasis,
    pub a_reduced: DMatrix<f64>,
    pub d_reduced: DMatrix<f64>,
    pub r: Option<DMatrix<f64>>,
    pub b: DMatrix<f64>,
    /// `max(||M A - A_red M||, ||M D - D_red M||)`.
    pub intertwining_residual: f64,
    /// `||D_red - (C_p C_p^T)^{1/2} R (C_p C_p^T)^{1/2}||`.
    pub factor_residual: f64,
}

impl SyncReduction {
    pub fn a_coupling(&self) -> CouplingMatrix {
        CouplingMatrix {
            entries: self.a_reduced.clone(),
            role: Role::Stiffness,
        }
    }

    pub fn d_coupling(&self) -> CouplingMatrix {
        CouplingMatrix {
            entries: self.d_reduced.clone(),
            role: Role::Damping,
        }
    }

    pub fn b_coupling(&self) -> CouplingMatrix {
        CouplingMatrix {
            entries: self.b.clone(),
            role: Role::Stiffness,
        }
    }
}

pub fn reduce_system(
    a: &CouplingMatrix,
    d: &CouplingMatrix,
    basis: &SyncBasis,
    tol: f64,
) -> Result<SyncReduction> {
    let ca = check_cp_compatibility(a, basis, tol)?;
    if !ca.compatible {
        return Err(incompatible_a(&ca));
    }
    let cd = check_strong_compatibility(d, basis, tol)?;
    if !cd.strong {
        return Err(not_strong(&cd));
    }
    let m = basis.normalizer();
    let a_reduced = symmetrize(&(m * a.matrix() * m.transpose()));
    let d_reduced = symmetrize(&(m * d.matrix() * m.transpose()));
    let intertwining_residual = (m * a.matrix() - &a_reduced * m)
        .norm()
        .max((m * d.matrix() - &d_reduced * m).norm());
    let r = cd.r.expect("strong compatibility yields R");
    let factor_residual = (&d_reduced - basis.gram_sqrt() * &r * basis.gram_sqrt()).norm();
    let b = beta_matrix(a, basis, tol)?;
    Ok(SyncReduction {
        basis: basis.clone(),
        a_reduced,
        d_reduced,
        r: Some(r),
        b,
        intertwining_residual,
        factor_residual,
    })
}

/// Rank conditions tied to the minimal number of dampings.
#[derive(Debug, Clone, PartialEq)]
pub struct RankReport {
    pub rank_d: usize,
    pub rank_cpd: usize,
    /// `rank(D) = rank(C_p D) = N - p`.
    pub minimal_rank_ok: bool,
    /// `Ker(D)` and `Ker(C_p)` pair non-degenerately (equal dimension and an
    /// invertible pairing matrix). Such a pair can always be rebased to a
    /// bi-orthonormal one.
    pub biorthogonal: bool,
    /// Smallest singular value of the pairing between orthonormal bases of
    /// the two kernels (zero when the dimensions differ).
    pub pairing_sigma_min: f64,
    /// `rank [D, AD, ..., A^{N-1} D]`.
    pub kalman_rank: usize,
}

/// Pairing singular values below this are taken as a degenerate pairing.
pub const PAIRING_FLOOR: f64 = 1e-10;

pub fn rank_diagnostics(
    a: &CouplingMatrix,
    d: &CouplingMatrix,
    basis: &SyncBasis,
) -> Result<RankReport> {
    basis.check_order(a)?;
    basis.check_order(d)?;
    let part = basis.partition();
    let (n, p) = (part.components(), part.groups());
    let dm = d.matrix();

    let rank_d = numerical_rank(dm);
    let rank_cpd = numerical_rank(&(basis.cp() * dm));
    let minimal_rank_ok = rank_d == n - p && rank_cpd == n - p;

    let ker_d = kernel_basis(dm);
    let e = DMatrix::from_columns(
        &basis
            .kernel()
            .iter()
            .enumerate()
            .map(|(r, v)| v / part.indicator_norm(r))
            .collect::<Vec<_>>(),
    );
    let pairing_sigma_min = if ker_d.ncols() == p {
        (e.transpose() * &ker_d).singular_values().min()
    } else {
        0.0
    };
    let biorthogonal = ker_d.ncols() == p && pairing_sigma_min > PAIRING_FLOOR;

    let mut blocks = Vec::with_capacity(n);
    let mut power = dm.clone();
    for _ in 0..n {
        blocks.push(power.clone());
        power = a.matrix() * power;
    }
    let mut kalman = DMatrix::zeros(n, n * n);
    for (k, blk) in blocks.iter().enumerate() {
        kalman.view_mut((0, k * n), (n, n)).copy_from(blk);
    }
    let kalman_rank = numerical_rank(&kalman);

    Ok(RankReport {
        rank_d,
        rank_cpd,
        minimal_rank_ok,
        biorthogonal,
        pairing_sigma_min,
        kalman_rank,
    })
}

impl fmt::Display for RankReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "rank(D) = {}, rank(C_p D) = {}, minimal rank {}, kernels {} (pairing sigma_min {:.3e}), Kalman rank {}",
            self.rank_d,
            self.rank_cpd,
            if self.minimal_rank_ok { "holds" } else { "fails" },
            if self.biorthogonal { "bi-orthogonal" } else { "degenerate" },
            self.pairing_sigma_min,
            self.kalman_rank
        )
    }
}
