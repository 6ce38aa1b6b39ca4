//! Dense row-major matrices and the Moore-Penrose least-squares solve.
//!
//! The singular value decomposition is delegated to `faer`; everything
//! else (products, gathers, the pseudoinverse assembly) is done here so the
//! summation order is fixed and results are reproducible bit-for-bit.

use std::fmt;
use std::ops::Index;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative cutoff for singular values, as a fraction of the largest one.
pub const DEFAULT_RTOL: f64 = 1e-12;

/// Dense matrix of `f64` in row-major order.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<RawMatrix> for Matrix {
    type Error = Error;

    fn try_from(r: RawMatrix) -> Result<Self> {
        Matrix::new(r.rows, r.cols, r.data)
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "Matrix::new",
                format!(
                    "{rows}x{cols} needs {} entries, got {}",
                    rows * cols,
                    data.len()
                ),
            ));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { values[i] } else { 0.0 })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::shape(
                    "Matrix::from_rows",
                    format!("row {i} has {} entries, expected {cols}", r.len()),
                ));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    /// Row-major backing storage.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Matrix {
        self.map(|v| v * s)
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &Matrix,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(Error::shape(
                op,
                format!("{:?} vs {:?}", self.shape(), other.shape()),
            ));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Copies the listed columns, in the given order, into a new matrix.
    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        Matrix::from_fn(self.rows, cols.len(), |i, j| self.get(i, cols[j]))
    }

    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Matrix {
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.cols {
            return Err(Error::shape(
                "vstack",
                format!("{} vs {} columns", self.cols, other.cols),
            ));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Matrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    fn to_faer(&self) -> Mat<f64> {
        Mat::from_fn(self.rows, self.cols, |i, j| self.data[i * self.cols + j])
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i},{j}) out of bounds"
        );
        &self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in self.iter_rows() {
            writeln!(f, "  {r:?}")?;
        }
        write!(f, "]")
    }
}

/// Standard matrix product `a * b`.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::shape(
            "matmul",
            format!("{}x{} times {}x{}", a.rows, a.cols, b.rows, b.cols),
        ));
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for (k, &aik) in a.row(i).iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            for (o, &bkj) in out_row.iter_mut().zip(b.row(k)) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

/// Moore-Penrose pseudoinverse with the default singular-value cutoff.
pub fn pseudoinverse(h: &Matrix) -> Result<Matrix> {
    pseudoinverse_with_rtol(h, DEFAULT_RTOL)
}

/// Moore-Penrose pseudoinverse `V Σ⁺ Uᵀ`, dropping singular values below `rtol * σ_max`.
pub fn pseudoinverse_with_rtol(h: &Matrix, rtol: f64) -> Result<Matrix> {
    if h.is_empty() {
        return Err(Error::shape("pseudoinverse", "empty matrix"));
    }
    if !(rtol >= 0.0 && rtol.is_finite()) {
        return Err(Error::Config(format!(
            "rtol must be finite and non-negative, got {rtol}"
        )));
    }
    if !h.is_finite() {
        return Err(Error::Numerical(format!(
            "pseudoinverse of {}x{} matrix with non-finite entries",
            h.rows, h.cols
        )));
    }
    let svd = h.to_faer().thin_svd().map_err(|_| {
        Error::Numerical(format!(
            "SVD did not converge for {}x{} matrix",
            h.rows, h.cols
        ))
    })?;
    let (u, v) = (svd.U(), svd.V());
    let sigma: Vec<f64> = svd.S().column_vector().iter().copied().collect();
    let sigma_max = sigma.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = rtol * sigma_max;

    // H† = Σ_r (1/σ_r) v_r u_rᵀ over retained singular triplets
    let mut out = Matrix::zeros(h.cols, h.rows);
    for (r, &s) in sigma.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        for i in 0..h.cols {
            let vi = v[(i, r)] / s;
            let row = &mut out.data[i * h.rows..(i + 1) * h.rows];
            for (j, o) in row.iter_mut().enumerate() {
                *o += vi * u[(j, r)];
            }
        }
    }
    if !out.is_finite() {
        return Err(Error::Numerical(format!(
            "pseudoinverse of {}x{} matrix is not finite",
            h.rows, h.cols
        )));
    }
    Ok(out)
}

/// Singular values in descending order.
pub fn singular_values(h: &Matrix) -> Result<Vec<f64>> {
    if h.is_empty() {
        return Err(Error::shape("singular_values", "empty matrix"));
    }
    let mut s = h.to_faer().singular_values().map_err(|_| {
        Error::Numerical(format!(
            "SVD did not converge for {}x{} matrix",
            h.rows, h.cols
        ))
    })?;
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Minimum-norm least-squares solution of `H β = T`, i.e. `β = H† T`.
pub fn least_squares_solve(h: &Matrix, t: &Matrix) -> Result<Matrix> {
    least_squares_solve_with_rtol(h, t, DEFAULT_RTOL)
}

pub fn least_squares_solve_with_rtol(h: &Matrix, t: &Matrix, rtol: f64) -> Result<Matrix> {
    if h.rows != t.rows {
        return Err(Error::shape(
            "least_squares_solve",
            format!("H has {} rows but T has {}", h.rows, t.rows),
        ));
    }
    matmul(&pseudoinverse_with_rtol(h, rtol)?, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn rel(a: &Matrix, b: &Matrix) -> f64 {
        a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm().max(1e-300)
    }

    /// Gauss-Jordan inverse with partial pivoting, independent of the SVD path.
    fn gauss_jordan_inverse(a: &Matrix) -> Matrix {
        let n = a.rows();
        let mut m: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut r = a.row(i).to_vec();
                r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
                r
            })
            .collect();
        for c in 0..n {
            let p = (c..n)
                .max_by(|&x, &y| m[x][c].abs().partial_cmp(&m[y][c].abs()).unwrap())
                .unwrap();
            m.swap(c, p);
            let d = m[c][c];
            for v in m[c].iter_mut() {
                *v /= d;
            }
            for r in 0..n {
                if r != c {
                    let f = m[r][c];
                    let pivot = m[c].clone();
                    for (v, pv) in m[r].iter_mut().zip(pivot) {
                        *v -= f * pv;
                    }
                }
            }
        }
        Matrix::from_fn(n, n, |i, j| m[i][n + j])
    }

    #[test]
    fn matmul_identity_and_zero() {
        let a = random(3, 4, 1);
        assert_eq!(matmul(&Matrix::identity(3), &a).unwrap(), a);
        let z = matmul(&a, &Matrix::zeros(4, 2)).unwrap();
        assert_eq!(z, Matrix::zeros(3, 2));
    }

    #[test]
    fn matmul_hand_example() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let b = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let c = matmul(&a, &b).unwrap();
        assert_eq!(c, Matrix::from_rows(&[[2.0], [4.0]]).unwrap());
    }

    #[test]
    fn matmul_shape_error() {
        let err = matmul(&Matrix::zeros(2, 3), &Matrix::zeros(2, 3)).unwrap_err();
        assert!(matches!(err, Error::Shape { .. }));
    }

    #[test]
    fn new_rejects_wrong_length() {
        assert!(Matrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn singular_values_of_diagonal() {
        let s = singular_values(&Matrix::diag(&[1.0, -3.0, 2.0])).unwrap();
        assert_eq!(s.len(), 3);
        assert!(
            (s[0] - 3.0).abs() < 1e-14 && (s[1] - 2.0).abs() < 1e-14 && (s[2] - 1.0).abs() < 1e-14
        );
    }

    #[test]
    fn pinv_identity() {
        let i3 = Matrix::identity(3);
        assert!(rel(&pseudoinverse(&i3).unwrap(), &i3) < 1e-15);
    }

    #[test]
    fn pinv_truncates_zero_singular_value() {
        let p = pseudoinverse(&Matrix::diag(&[2.0, 0.0])).unwrap();
        let expected = Matrix::diag(&[0.5, 0.0]);
        assert!(p.sub(&expected).unwrap().frobenius_norm() < 1e-15);
    }

    #[test]
    fn pinv_of_zero_matrix_is_zero() {
        let p = pseudoinverse(&Matrix::zeros(3, 2)).unwrap();
        assert_eq!(p, Matrix::zeros(2, 3));
    }

    #[test]
    fn pinv_rejects_empty_and_nan() {
        assert!(matches!(
            pseudoinverse(&Matrix::zeros(0, 3)),
            Err(Error::Shape { .. })
        ));
        let mut m = Matrix::identity(2);
        m.set(0, 1, f64::NAN);
        let err = pseudoinverse(&m).unwrap_err();
        assert!(matches!(err, Error::Numerical(ref msg) if msg.contains("2x2")));
    }

    #[test]
    fn pinv_matches_closed_forms_for_full_rank() {
        // wide: H^T (H H^T)^-1
        let h = random(3, 5, 7);
        let closed = matmul(
            &h.transpose(),
            &gauss_jordan_inverse(&matmul(&h, &h.transpose()).unwrap()),
        )
        .unwrap();
        assert!(rel(&pseudoinverse(&h).unwrap(), &closed) < 1e-10);
        // tall: (H^T H)^-1 H^T
        let h = random(6, 4, 8);
        let closed = matmul(
            &gauss_jordan_inverse(&matmul(&h.transpose(), &h).unwrap()),
            &h.transpose(),
        )
        .unwrap();
        assert!(rel(&pseudoinverse(&h).unwrap(), &closed) < 1e-10);
    }

    #[test]
    fn pinv_3x5_first_penrose_condition() {
        let h = random(3, 5, 11);
        let p = pseudoinverse(&h).unwrap();
        let hph = matmul(&matmul(&h, &p).unwrap(), &h).unwrap();
        assert!(hph.sub(&h).unwrap().frobenius_norm() < 1e-8);
    }

    #[test]
    fn pinv_penrose_on_low_rank_products() {
        for seed in 0..50 {
            let a = matmul(&random(10, 3, seed), &random(3, 10, seed + 1000)).unwrap();
            let p = pseudoinverse(&a).unwrap();
            let ap = matmul(&a, &p).unwrap();
            let pa = matmul(&p, &a).unwrap();
            assert!(rel(&matmul(&ap, &a).unwrap(), &a) < 1e-10, "seed {seed}");
            assert!(rel(&matmul(&pa, &p).unwrap(), &p) < 1e-10, "seed {seed}");
            assert!(rel(&ap.transpose(), &ap) < 1e-10, "seed {seed}");
            assert!(rel(&pa.transpose(), &pa) < 1e-10, "seed {seed}");
        }
    }

    #[test]
    fn pinv_is_involutive_for_full_rank() {
        for (r, c) in [(5, 3), (3, 5), (4, 4)] {
            let h = random(r, c, (r * 10 + c) as u64);
            let pp = pseudoinverse(&pseudoinverse(&h).unwrap()).unwrap();
            assert!(rel(&pp, &h) < 1e-8, "{r}x{c}");
        }
    }

    #[test]
    fn lstsq_identity_returns_targets() {
        let t = random(4, 2, 3);
        let beta = least_squares_solve(&Matrix::identity(4), &t).unwrap();
        assert!(rel(&beta, &t) < 1e-14);
    }

    #[test]
    fn lstsq_overdetermined_consistent() {
        let h = random(10, 4, 21);
        let beta_star = random(4, 2, 22);
        let t = matmul(&h, &beta_star).unwrap();
        let beta = least_squares_solve(&h, &t).unwrap();
        let resid = matmul(&h, &beta).unwrap().sub(&t).unwrap().frobenius_norm();
        assert!(resid < 1e-8);
    }

    #[test]
    fn lstsq_underdetermined_interpolates() {
        let h = random(4, 9, 31);
        let t = random(4, 1, 32);
        let beta = least_squares_solve(&h, &t).unwrap();
        assert_eq!(beta.shape(), (9, 1));
        let resid = matmul(&h, &beta).unwrap().sub(&t).unwrap().frobenius_norm();
        assert!(resid < 1e-8);
    }

    #[test]
    fn lstsq_shape_error() {
        let err = least_squares_solve(&Matrix::zeros(3, 2), &Matrix::zeros(4, 1)).unwrap_err();
        assert!(matches!(err, Error::Shape { .. }));
    }

    #[test]
    fn lstsq_residual_is_locally_minimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let h = random(12, 5, 40);
        let t = random(12, 2, 41);
        let beta = least_squares_solve(&h, &t).unwrap();
        let base = matmul(&h, &beta).unwrap().sub(&t).unwrap().frobenius_norm();
        for _ in 0..50 {
            let d = Matrix::from_fn(5, 2, |_, _| rng.random_range(-1.0..1.0));
            let d = d.scale(1e-3 / d.frobenius_norm());
            let perturbed = beta.add(&d).unwrap();
            let r = matmul(&h, &perturbed)
                .unwrap()
                .sub(&t)
                .unwrap()
                .frobenius_norm();
            assert!(r >= base, "{r} < {base}");
        }
    }
}
