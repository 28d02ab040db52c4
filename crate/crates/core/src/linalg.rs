//! Small dense complex matrices and the Hermitian eigensolver.
//!
//! Everything here is sized for two-qubit process matrices (16×16 at most on
//! hot paths), so the storage is a plain row-major `Vec` and the eigensolver
//! is cyclic Jacobi.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Off-diagonal Frobenius norm (relative to the matrix norm) at which Jacobi stops.
pub const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dense complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMat { rows, cols, data }
    }

    /// Builds a matrix from nested rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == m), "ragged rows");
        CMat {
            rows: n,
            cols: m,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_diag(d: &[C64]) -> Self {
        let mut m = CMat::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    pub fn from_real_diag(d: &[f64]) -> Self {
        let mut m = CMat::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = c(x, 0.0);
        }
        m
    }

    /// Outer product `u v†`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        CMat::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> CMat {
        self.scale(c(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn diag_real(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)].re).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |M - M†|`.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// `max |U†U - I|`.
    pub fn unitary_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let p = &self.adjoint() * self;
        (&p - &CMat::identity(self.rows)).max_abs()
    }

    /// `(M + M†) / 2`.
    pub fn hermitian_part(&self) -> CMat {
        CMat::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        })
    }

    pub fn kron(&self, other: &CMat) -> CMat {
        let (r, s) = (other.rows, other.cols);
        CMat::from_fn(self.rows * r, self.cols * s, |i, j| {
            self[(i / r, j / s)] * other[(i % r, j % s)]
        })
    }

    /// `Tr(self† other)`, the Hilbert-Schmidt inner product.
    pub fn hs_inner(&self, other: &CMat) -> C64 {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_of_product(&self, other: &CMat) -> C64 {
        debug_assert_eq!(self.cols, other.rows);
        debug_assert_eq!(self.rows, other.cols);
        let mut acc = ZERO;
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        debug_assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `v† M v` for square `M`.
    pub fn quadratic_form(&self, v: &[C64]) -> C64 {
        let mv = self.mul_vec(v);
        v.iter().zip(&mv).map(|(a, b)| a.conj() * b).sum()
    }

    /// Applies a unitary basis change `W M W†`.
    pub fn conjugate_by(&self, w: &CMat) -> CMat {
        &(w * self) * &w.adjoint()
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl<'a> Mul<&'a CMat> for &'a CMat {
    type Output = CMat;
    fn mul(self, rhs: &'a CMat) -> CMat {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = CMat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

impl<'a> Add<&'a CMat> for &'a CMat {
    type Output = CMat;
    fn add(self, rhs: &'a CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a CMat> for &'a CMat {
    type Output = CMat;
    fn sub(self, rhs: &'a CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Eigendecomposition of a Hermitian matrix: `M = V diag(values) V†`.
#[derive(Clone, Debug)]
pub struct Eigh {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: CMat,
}

impl Eigh {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    /// Rebuilds `V f(Λ) V†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.values.len();
        let mut out = CMat::zeros(n, n);
        for (k, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = self.vectors[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += vik * self.vectors[(j, k)].conj();
                }
            }
        }
        out
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// Rejects inputs whose Hermitian deviation exceeds `1e-9 · max(1, max|M|)`.
pub fn hermitian_eig(m: &CMat) -> Result<Eigh> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.rows(),
            got: m.cols(),
        });
    }
    let dev = m.hermitian_deviation();
    if dev > 1e-9 * m.max_abs().max(1.0) {
        return Err(Error::NotHermitian(dev));
    }
    Ok(jacobi(m.hermitian_part()))
}

fn jacobi(mut a: CMat) -> Eigh {
    let n = a.rows();
    let mut v = CMat::identity(n);
    let scale = a.frobenius();
    if scale > 0.0 {
        for _ in 0..JACOBI_MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)].norm_sqr())
                .sum::<f64>()
                .sqrt();
            if off <= JACOBI_TOL * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag = a.diag_real();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let values = order.iter().map(|&k| diag[k]).collect();
    let vectors = CMat::from_fn(n, n, |i, k| v[(i, order[k])]);
    Eigh { values, vectors }
}

/// Zeroes `a[p][q]` with `A ← J†AJ`, `V ← VJ`.
fn rotate(a: &mut CMat, v: &mut CMat, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r < 1e-300 {
        return;
    }
    let phase = apq / r;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (2.0 * r);
    let t = if theta == 0.0 {
        1.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let cs = 1.0 / (t * t + 1.0).sqrt();
    let sn = t * cs;
    let jpp = c(cs, 0.0);
    let jpq = c(sn, 0.0);
    let jqp = phase.conj() * (-sn);
    let jqq = phase.conj() * cs;

    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * jpp + akq * jqp;
        a[(k, q)] = akp * jpq + akq * jqq;
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * jpp + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * jqq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
        a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = c(a[(p, p)].re, 0.0);
    a[(q, q)] = c(a[(q, q)].re, 0.0);
}

/// Lower-triangular `L` with `L L† = M`, or `None` when a pivot falls below `floor`.
pub fn cholesky(m: &CMat, floor: f64) -> Option<CMat> {
    let n = m.rows();
    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > floor) {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = c(djj, 0.0);
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

/// Solves `L L† x = b` given the Cholesky factor.
pub fn cholesky_solve(l: &CMat, b: &[C64]) -> Vec<C64> {
    let n = l.rows();
    let mut y = vec![ZERO; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    let mut x = vec![ZERO; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[(k, i)].conj() * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Inverse square root of a positive-definite Hermitian matrix.
pub fn inv_sqrt_psd(m: &CMat) -> Result<CMat> {
    let e = hermitian_eig(m)?;
    if e.min() <= 0.0 {
        return Err(Error::NotPsd(e.min()));
    }
    Ok(e.reconstruct_with(|x| 1.0 / x.sqrt()))
}

/// Real symmetric positive-definite solve via Cholesky; `None` if not PD.
pub(crate) fn solve_spd_real(a: &[f64], n: usize, b: &[f64]) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    let scale = (0..n).fold(0.0f64, |m, i| m.max(a[i * n + i].abs()));
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 1e-13 * scale) {
            return None;
        }
        let djj = d.sqrt();
        l[j * n + j] = djj;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / djj;
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, rng: &mut impl Rng) -> CMat {
        let g = CMat::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        g.hermitian_part()
    }

    #[test]
    fn diagonal_sorted() {
        let m = CMat::from_real_diag(&[3.0, 1.0, 2.0]);
        let e = hermitian_eig(&m).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn pauli_x() {
        let x = CMat::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]);
        let e = hermitian_eig(&x).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMat::from_rows(&[vec![ZERO, ONE], vec![ZERO, ZERO]]);
        assert!(matches!(hermitian_eig(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn random_16_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let m = random_hermitian(16, &mut rng);
            let e = hermitian_eig(&m).unwrap();
            let back = e.reconstruct_with(|x| x);
            assert!((&m - &back).max_abs() <= 1e-10 * m.max_abs());
            assert!(e.vectors.unitary_deviation() < 1e-12);
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn cholesky_solves() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_hermitian(6, &mut rng);
        let m = &(&g * &g) + &CMat::identity(6);
        let l = cholesky(&m, 0.0).unwrap();
        assert!((&(&l * &l.adjoint()) - &m).max_abs() < 1e-12);
        let b: Vec<C64> = (0..6).map(|i| c(i as f64, 1.0)).collect();
        let x = cholesky_solve(&l, &b);
        let mx = m.mul_vec(&x);
        for (u, v) in mx.iter().zip(&b) {
            assert!((u - v).norm() < 1e-10);
        }
        assert!(cholesky(&CMat::from_real_diag(&[1.0, -1.0]), 0.0).is_none());
    }

    #[test]
    fn kron_shape_and_values() {
        let x = CMat::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]);
        let k = x.kron(&CMat::identity(2));
        assert_eq!(k.rows(), 4);
        assert_eq!(k[(0, 2)], ONE);
        assert_eq!(k[(1, 3)], ONE);
        assert_eq!(k[(0, 1)], ZERO);
    }
}
