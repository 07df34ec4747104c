//! Dense and banded linear algebra helpers.
//!
//! Dense work (square roots, ranks, kernels) goes through nalgebra. The time
//! stepper only ever needs symmetric banded matrices, which get their own
//! compact storage and a Cholesky factorization that never leaves the band.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalues below this fraction of the largest are treated as zero.
pub const EIGEN_FLOOR: f64 = 1e-13;

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Largest absolute asymmetry `|m_ij - m_ji|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn spd_eigen(s: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    if !s.is_square() {
        return Err(Error::Domain(format!(
            "expected a square matrix, got {}x{}",
            s.nrows(),
            s.ncols()
        )));
    }
    let scale = max_abs(s);
    if asymmetry(s) > 1e-12 * scale {
        return Err(Error::Domain("matrix is not symmetric".into()));
    }
    let eig = SymmetricEigen::new(symmetrize(s));
    let top = eig.eigenvalues.iter().fold(0.0_f64, |a, &x| a.max(x.abs()));
    let low = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &x| a.min(x));
    if low < -1e-10 * top {
        return Err(Error::Domain(format!(
            "matrix is indefinite (smallest eigenvalue {low:e})"
        )));
    }
    Ok(eig)
}

fn rebuild(eig: &SymmetricEigen<f64, nalgebra::Dyn>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let q = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    symmetrize(&(q * d * q.transpose()))
}

/// Principal square root of a symmetric positive semi-definite matrix.
pub fn sqrt_spd(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = spd_eigen(s)?;
    let top = eig.eigenvalues.amax();
    let floor = EIGEN_FLOOR * top;
    Ok(rebuild(&eig, |l| if l <= floor { 0.0 } else { l.sqrt() }))
}

/// Inverse principal square root; rejects (numerically) singular input.
pub fn inv_sqrt_spd(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = spd_eigen(s)?;
    let top = eig.eigenvalues.amax();
    let low = eig.eigenvalues.min();
    if top == 0.0 || low <= EIGEN_FLOOR * top {
        return Err(Error::Singular(format!(
            "smallest eigenvalue {low:e} below floor {:e}",
            EIGEN_FLOOR * top
        )));
    }
    Ok(rebuild(&eig, |l| 1.0 / l.sqrt()))
}

/// Rank by singular-value thresholding with `tau = max_dim * eps * sigma_max`.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    let tau = m.nrows().max(m.ncols()) as f64 * f64::EPSILON * smax;
    sv.iter().filter(|&&s| s > tau).count()
}

/// Orthonormal basis (as columns) of the kernel of a square matrix, using the
/// same threshold as [`numerical_rank`].
pub fn kernel_basis(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.ncols();
    assert!(m.is_square(), "kernel_basis expects a square matrix");
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let smax = svd.singular_values.max();
    let tau = n as f64 * f64::EPSILON * smax;
    let cols: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| smax == 0.0 || s <= tau)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Applies a small `rows x ncomp` matrix independently at every node of a
/// node-major vector (`flat = node * ncomp + component`).
pub fn apply_per_node(mat: &DMatrix<f64>, x: &DVector<f64>, ncomp: usize) -> DVector<f64> {
    assert_eq!(mat.ncols(), ncomp);
    assert_eq!(x.len() % ncomp, 0);
    let nodes = x.len() / ncomp;
    let rows = mat.nrows();
    let mut out = DVector::zeros(nodes * rows);
    for node in 0..nodes {
        for i in 0..rows {
            let mut acc = 0.0;
            for j in 0..ncomp {
                acc += mat[(i, j)] * x[node * ncomp + j];
            }
            out[node * rows + i] = acc;
        }
    }
    out
}

/// Symmetric band matrix, lower band stored row by row.
///
/// Entry `(i, j)` with `0 <= i - j <= kd` lives at `data[i * (kd + 1) + (i - j)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBand {
    n: usize,
    kd: usize,
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, kd: usize) -> Self {
        Self {
            n,
            kd,
            data: vec![0.0; n * (kd + 1)],
        }
    }

    /// Band of a dense symmetric matrix; the bandwidth is detected from the
    /// nonzero pattern of the lower triangle.
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut kd = 0;
        for i in 0..n {
            for j in 0..i {
                if m[(i, j)] != 0.0 {
                    kd = kd.max(i - j);
                    break;
                }
            }
        }
        let mut band = Self::zeros(n, kd);
        for i in 0..n {
            for j in i.saturating_sub(kd)..=i {
                band.set(i, j, m[(i, j)]);
            }
        }
        band
    }

    /// `self ⊗ c` for a dense symmetric `c`, node-major.
    pub fn kron(&self, c: &DMatrix<f64>) -> Self {
        let m = c.nrows();
        let kd = self.kd * m + m - 1;
        let mut out = Self::zeros(self.n * m, kd);
        for i in 0..self.n {
            for j in i.saturating_sub(self.kd)..=i {
                let hij = self.get(i, j);
                if hij == 0.0 {
                    continue;
                }
                for a in 0..m {
                    for b in 0..m {
                        let (r, s) = (i * m + a, j * m + b);
                        if r >= s {
                            out.set(r, s, hij * c[(a, b)]);
                        }
                    }
                }
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.kd
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.kd {
            0.0
        } else {
            self.data[i * (self.kd + 1) + (i - j)]
        }
    }

    fn set(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(i >= j && i - j <= self.kd);
        self.data[i * (self.kd + 1) + (i - j)] = value;
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &SymBand, beta: f64) -> SymBand {
        assert_eq!(self.n, other.n);
        let kd = self.kd.max(other.kd);
        let mut out = Self::zeros(self.n, kd);
        for i in 0..self.n {
            for j in i.saturating_sub(kd)..=i {
                out.set(i, j, alpha * self.get(i, j) + beta * other.get(i, j));
            }
        }
        out
    }

    /// `y = self * x`.
    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        y.iter_mut().for_each(|v| *v = 0.0);
        let w = self.kd + 1;
        for i in 0..self.n {
            let row = &self.data[i * w..(i + 1) * w];
            y[i] += row[0] * x[i];
            for k in 1..w.min(i + 1) {
                let j = i - k;
                let a = row[k];
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
        }
    }

    pub fn mul(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.n);
        self.mul_into(x.as_slice(), y.as_mut_slice());
        y
    }

    /// `x^T self y`.
    pub fn form(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut tmp = vec![0.0; self.n];
        self.mul_into(y, &mut tmp);
        x.iter().zip(&tmp).map(|(a, b)| a * b).sum()
    }

    /// Applies `self ⊗ I_m` to a node-major vector with `m` components per node.
    pub fn mul_kron_identity(&self, m: usize, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n * m);
        let mut y = vec![0.0; x.len()];
        let w = self.kd + 1;
        for i in 0..self.n {
            let row = &self.data[i * w..(i + 1) * w];
            for c in 0..m {
                y[i * m + c] += row[0] * x[i * m + c];
            }
            for k in 1..w.min(i + 1) {
                let j = i - k;
                let a = row[k];
                if a == 0.0 {
                    continue;
                }
                for c in 0..m {
                    y[i * m + c] += a * x[j * m + c];
                    y[j * m + c] += a * x[i * m + c];
                }
            }
        }
        y
    }

    pub fn cholesky(&self) -> Result<BandCholesky> {
        BandCholesky::factor(self)
    }
}

/// Cholesky factor `L` of a symmetric positive definite band matrix.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    kd: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn factor(a: &SymBand) -> Result<Self> {
        let (n, kd) = (a.n, a.kd);
        let w = kd + 1;
        let mut l = a.data.clone();
        for j in 0..n {
            let lo_j = j.saturating_sub(kd);
            for i in j..(j + w).min(n) {
                let lo = i.saturating_sub(kd).max(lo_j);
                let mut s = l[i * w + (i - j)];
                for k in lo..j {
                    s -= l[i * w + (i - k)] * l[j * w + (j - k)];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::Singular(format!(
                            "band matrix not positive definite at pivot {j}"
                        )));
                    }
                    l[j * w] = s.sqrt();
                } else {
                    l[i * w + (i - j)] = s / l[j * w];
                }
            }
        }
        Ok(Self { n, kd, l })
    }

    /// Solves in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let w = self.kd + 1;
        for i in 0..self.n {
            let mut s = b[i];
            for k in i.saturating_sub(self.kd)..i {
                s -= self.l[i * w + (i - k)] * b[k];
            }
            b[i] = s / self.l[i * w];
        }
        for i in (0..self.n).rev() {
            let mut s = b[i];
            for k in (i + 1)..(i + w).min(self.n) {
                s -= self.l[k * w + (k - i)] * b[k];
            }
            b[i] = s / self.l[i * w];
        }
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.clone();
        self.solve_in_place(x.as_mut_slice());
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize, seed: u64) -> DMatrix<f64> {
        // Deterministic pseudo-random fill, no RNG dependency needed here.
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let b = DMatrix::from_fn(n, n, |_, _| next());
        &b * b.transpose() + DMatrix::identity(n, n) * 0.1
    }

    #[test]
    fn sqrt_of_identity_and_diagonal() {
        let i = DMatrix::<f64>::identity(3, 3);
        assert!((sqrt_spd(&i).unwrap() - &i).amax() < 1e-15);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 9.0]));
        let q = sqrt_spd(&d).unwrap();
        assert!((q[(0, 0)] - 2.0).abs() < 1e-14);
        assert!((q[(1, 1)] - 3.0).abs() < 1e-14);
        assert!(q[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn sqrt_of_difference_gram_squares_back() {
        let s = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        let q = sqrt_spd(&s).unwrap();
        assert!((&q * &q - &s).amax() <= 1e-12 * max_abs(&s));
        assert!(asymmetry(&q) == 0.0);
        let qi = inv_sqrt_spd(&s).unwrap();
        assert!((&q * &qi - DMatrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn sqrt_rejects_bad_input() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(sqrt_spd(&asym), Err(Error::Domain(_))));
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(sqrt_spd(&indef), Err(Error::Domain(_))));
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(sqrt_spd(&singular).is_ok());
        assert!(matches!(inv_sqrt_spd(&singular), Err(Error::Singular(_))));
    }

    #[test]
    fn rank_and_kernel() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(numerical_rank(&m), 1);
        let k = kernel_basis(&m);
        assert_eq!(k.ncols(), 2);
        assert!((&m * &k).amax() < 1e-14);
        assert_eq!(numerical_rank(&DMatrix::zeros(3, 3)), 0);
    }

    #[test]
    fn band_roundtrip_matvec_and_solve() {
        let n = 9;
        let dense = DMatrix::from_fn(n, n, |i, j| {
            let d = i.abs_diff(j);
            match d {
                0 => 4.0 + i as f64 * 0.1,
                1 => -1.0,
                2 => 0.25,
                _ => 0.0,
            }
        });
        let band = SymBand::from_dense(&dense);
        assert_eq!(band.bandwidth(), 2);
        assert_eq!(band.to_dense(), dense);
        let x = DVector::from_fn(n, |i, _| (i as f64).sin());
        assert!((band.mul(&x) - &dense * &x).amax() < 1e-14);
        let chol = band.cholesky().unwrap();
        let sol = chol.solve(&x);
        assert!((&dense * &sol - &x).amax() < 1e-13);
    }

    #[test]
    fn band_kron_matches_dense_kron() {
        let h = SymBand::from_dense(&DMatrix::from_row_slice(
            3,
            3,
            &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0],
        ));
        let c = spd(2, 3);
        let k = h.kron(&c);
        assert!((k.to_dense() - h.to_dense().kronecker(&c)).amax() < 1e-15);
        let x: Vec<f64> = (0..6).map(|i| i as f64 - 2.5).collect();
        let y = h.mul_kron_identity(2, &x);
        let dense = h.to_dense().kronecker(&DMatrix::identity(2, 2)) * DVector::from_vec(x);
        assert!((DVector::from_vec(y) - dense).amax() < 1e-14);
    }

    #[test]
    fn band_cholesky_rejects_indefinite() {
        let m = SymBand::from_dense(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]));
        assert!(m.cholesky().is_err());
    }

    #[test]
    fn per_node_application() {
        let mat = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        let x = DVector::from_vec(vec![3.0, 1.0, 5.0, 5.0]);
        assert_eq!(apply_per_node(&mat, &x, 2).as_slice(), &[2.0, 0.0]);
    }
}
