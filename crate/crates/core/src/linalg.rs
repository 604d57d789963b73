//! Small dense matrices.
//!
//! Only what the Fritz-John machinery needs: products, Gram matrices, an LU
//! determinant and a cyclic Jacobi eigensolver for symmetric input. Every
//! matrix here is at most a few dozen rows, so storage is a flat row-major
//! `Vec<f64>` and nothing is blocked or vectorised.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pivots below this magnitude make [`determinant`] report exact singularity.
pub const PIVOT_TOLERANCE: f64 = 1e-14;
/// Largest tolerated asymmetry (relative to the largest entry) in [`sym_eigen`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;
/// Off-diagonal magnitude, relative to `max(1, ||A||_F)`, that ends the Jacobi sweeps.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::rejected(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::rejected(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix must be at least 1x1");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != cols) {
            return Err(Error::rejected("ragged rows"));
        }
        let data = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().copied())
            .collect();
        Self::new(rows.len(), cols, data)
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C]) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.as_ref().len());
        if columns.iter().any(|c| c.as_ref().len() != rows) {
            return Err(Error::rejected("ragged columns"));
        }
        let cols = columns.len();
        let mut data = vec![0.0; rows * cols];
        for (j, c) in columns.iter().enumerate() {
            for (i, &v) in c.as_ref().iter().enumerate() {
                data[i * cols + j] = v;
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// The rows listed in `rows`, in that order.
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

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::rejected(format!(
                "cannot multiply {}x{} matrix by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Sum of the diagonal entries.
    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::rejected(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a[(i, k)];
            if aik == 0.0 {
                continue;
            }
            for j in 0..b.cols {
                out[(i, j)] += aik * b[(k, j)];
            }
        }
    }
    Ok(out)
}

/// `AᵀA`, computed on the upper triangle and mirrored so the result is
/// exactly symmetric.
pub fn gram(a: &Matrix) -> Matrix {
    let n = a.cols;
    let mut g = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut s = 0.0;
            for r in 0..a.rows {
                s += a[(r, i)] * a[(r, j)];
            }
            g[(i, j)] = s;
            g[(j, i)] = s;
        }
    }
    g
}

/// Determinant by LU factorisation with partial pivoting.
///
/// Returns exactly `0.0` once a pivot drops below [`PIVOT_TOLERANCE`], so
/// residuals at converged points read as zero rather than roundoff noise.
pub fn determinant(a: &Matrix) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::rejected(format!(
            "determinant of non-square {}x{} matrix",
            a.rows, a.cols
        )));
    }
    let n = a.rows;
    let mut lu = a.clone();
    let mut det = 1.0;
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&x, &y| lu[(x, col)].abs().total_cmp(&lu[(y, col)].abs()))
            .expect("non-empty pivot range");
        let pivot = lu[(pivot_row, col)];
        if pivot.is_nan() {
            return Err(Error::numerical("NaN pivot in LU factorisation", None));
        }
        if pivot.abs() < PIVOT_TOLERANCE {
            return Ok(0.0);
        }
        if pivot_row != col {
            lu.swap_rows(pivot_row, col);
            det = -det;
        }
        det *= pivot;
        for r in col + 1..n {
            let factor = lu[(r, col)] / pivot;
            if factor == 0.0 {
                continue;
            }
            for c in col + 1..n {
                let v = lu[(col, c)];
                lu[(r, c)] -= factor * v;
            }
        }
    }
    Ok(det)
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    if !a.is_square() || b.len() != a.rows {
        return Err(Error::rejected(format!(
            "cannot solve a {}x{} system with {} right-hand sides",
            a.rows,
            a.cols,
            b.len()
        )));
    }
    let n = a.rows;
    let mut m = a.clone();
    let mut x = b.to_vec();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&p, &q| m[(p, col)].abs().total_cmp(&m[(q, col)].abs()))
            .expect("non-empty pivot range");
        let pivot = m[(pivot_row, col)];
        if !(pivot.abs() >= PIVOT_TOLERANCE) {
            return Err(Error::numerical("singular linear system", None));
        }
        if pivot_row != col {
            m.swap_rows(pivot_row, col);
            x.swap(pivot_row, col);
        }
        for r in col + 1..n {
            let factor = m[(r, col)] / pivot;
            for c in col..n {
                let v = m[(col, c)];
                m[(r, c)] -= factor * v;
            }
            x[r] -= factor * x[col];
        }
    }
    for r in (0..n).rev() {
        let tail: f64 = (r + 1..n).map(|c| m[(r, c)] * x[c]).sum();
        x[r] = (x[r] - tail) / m[(r, r)];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("non-finite solution", None));
    }
    Ok(x)
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, stored as columns in the order of `values`.
    pub vectors: Matrix,
    pub sweeps: usize,
}

/// Cyclic Jacobi eigensolver.
pub fn sym_eigen(a: &Matrix) -> Result<SymEigen> {
    if !a.is_square() {
        return Err(Error::rejected(format!(
            "eigen-decomposition of non-square {}x{} matrix",
            a.rows, a.cols
        )));
    }
    if !a.is_finite() {
        return Err(Error::numerical(
            "non-finite entry in symmetric eigenproblem",
            None,
        ));
    }
    let n = a.rows;
    let scale = a.max_abs().max(1.0);
    for i in 0..n {
        for j in i + 1..n {
            if (a[(i, j)] - a[(j, i)]).abs() > SYMMETRY_TOLERANCE * scale {
                return Err(Error::rejected(format!(
                    "matrix is not symmetric at ({i},{j}): {} vs {}",
                    a[(i, j)],
                    a[(j, i)]
                )));
            }
        }
    }

    let mut m = a.clone();
    // Work on the exactly symmetrised copy.
    for i in 0..n {
        for j in i + 1..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    let mut v = Matrix::identity(n);
    let threshold = JACOBI_TOLERANCE * a.frobenius_norm().max(1.0);

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_max(&m);
        if off < threshold {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::numerical(
                format!("Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps (off-diagonal {off:e})"),
                None,
            ));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[(x, x)].total_cmp(&m[(y, y)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, dst)] = v[(k, src)];
        }
    }
    Ok(SymEigen {
        values,
        vectors,
        sweeps,
    })
}

fn off_diagonal_max(m: &Matrix) -> f64 {
    let mut off: f64 = 0.0;
    for i in 0..m.rows {
        for j in 0..m.cols {
            if i != j {
                off = off.max(m[(i, j)].abs());
            }
        }
    }
    off
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
        let data = (0..rows * cols).map(|_| rng.gen_range(-2.0..2.0)).collect();
        Matrix::new(rows, cols, data).unwrap()
    }

    #[test]
    fn solve_recovers_right_hand_side() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for n in 1..7 {
            let a = random(&mut rng, n, n);
            let want: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b = a.mul_vec(&want).unwrap();
            let got = solve(&a, &b).unwrap();
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-9, "{g} vs {w}");
            }
        }
        let singular = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        assert!(matches!(
            solve(&singular, &[1.0, 2.0]),
            Err(Error::Numerical { .. })
        ));
        assert!(solve(&singular, &[1.0]).is_err());
    }

    #[test]
    fn select_rows_copies_in_order() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        let s = m.select_rows(&[2, 0]);
        assert_eq!(s, Matrix::from_rows(&[[5.0, 6.0], [1.0, 2.0]]).unwrap());
    }

    fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
        let a = random(rng, n, n);
        let mut s = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                s[(i, j)] = a[(i, j)] + a[(j, i)];
            }
        }
        s
    }

    // Independent oracles.
    fn triple_loop(a: &Matrix, b: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut s = 0.0;
                for k in 0..a.cols() {
                    s += a[(i, k)] * b[(k, j)];
                }
                out[(i, j)] = s;
            }
        }
        out
    }

    fn cofactor_det(a: &Matrix) -> f64 {
        let n = a.rows();
        if n == 1 {
            return a[(0, 0)];
        }
        (0..n)
            .map(|j| {
                let minor: Vec<Vec<f64>> = (1..n)
                    .map(|i| (0..n).filter(|&c| c != j).map(|c| a[(i, c)]).collect())
                    .collect();
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * a[(0, j)] * cofactor_det(&Matrix::from_rows(&minor).unwrap())
            })
            .sum()
    }

    #[test]
    fn matmul_identity_and_projectors() {
        let b = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(matmul(&Matrix::identity(2), &b).unwrap(), b);
        let p = Matrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]]).unwrap();
        let q = Matrix::from_rows(&[[0.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(matmul(&p, &q).unwrap(), Matrix::zeros(2, 2));
    }

    #[test]
    fn matmul_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random(&mut rng, 3, 4);
            let b = random(&mut rng, 4, 2);
            let got = matmul(&a, &b).unwrap();
            let want = triple_loop(&a, &b);
            assert_eq!((got.rows(), got.cols()), (3, 2));
            for (x, y) in got.as_slice().iter().zip(want.as_slice()) {
                assert!((x - y).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn matmul_rejects_mismatch() {
        let a = Matrix::zeros(2, 3);
        assert!(matches!(matmul(&a, &a), Err(Error::Rejected(_))));
    }

    #[test]
    fn new_rejects_bad_shapes() {
        assert!(Matrix::new(0, 2, vec![]).is_err());
        assert!(Matrix::new(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn gram_examples() {
        assert_eq!(gram(&Matrix::identity(2)), Matrix::identity(2));
        let ones = Matrix::from_rows(&[[1.0], [1.0]]).unwrap();
        assert_eq!(gram(&ones).as_slice(), &[2.0]);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random(&mut rng, 4, 3);
        let want = matmul(&a.transpose(), &a).unwrap();
        let got = gram(&a);
        for (x, y) in got.as_slice().iter().zip(want.as_slice()) {
            assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn determinant_examples() {
        assert_eq!(determinant(&Matrix::identity(3)).unwrap(), 1.0);
        let d = Matrix::from_diagonal(&[2.0, 3.0]);
        assert_relative_eq!(determinant(&d).unwrap(), 6.0);
        assert!(determinant(&Matrix::zeros(2, 3)).is_err());
        let singular = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        assert_eq!(determinant(&singular).unwrap(), 0.0);
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [2, 3, 4, 5] {
            for _ in 0..20 {
                let a = random(&mut rng, n, n);
                let want = cofactor_det(&a);
                let got = determinant(&a).unwrap();
                assert!(
                    (got - want).abs() <= 1e-10 * want.abs().max(1e-300),
                    "{got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn eigen_examples() {
        let e = sym_eigen(&Matrix::from_diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
        let e = sym_eigen(&Matrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap()).unwrap();
        assert_relative_eq!(e.values[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(e.values[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn eigen_rejects_asymmetric_and_non_square() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(sym_eigen(&a), Err(Error::Rejected(_))));
        assert!(matches!(
            sym_eigen(&Matrix::zeros(2, 3)),
            Err(Error::Rejected(_))
        ));
    }

    #[test]
    fn eigen_reconstructs_random_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let a = random_symmetric(&mut rng, 5);
            let e = sym_eigen(&a).unwrap();
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
            let v = &e.vectors;
            let vtv = matmul(&v.transpose(), v).unwrap();
            let id = Matrix::identity(5);
            for (x, y) in vtv.as_slice().iter().zip(id.as_slice()) {
                assert!((x - y).abs() <= 1e-8);
            }
            let recon = matmul(
                &matmul(v, &Matrix::from_diagonal(&e.values)).unwrap(),
                &v.transpose(),
            )
            .unwrap();
            for (x, y) in recon.as_slice().iter().zip(a.as_slice()) {
                assert!((x - y).abs() <= 1e-8);
            }
            for (j, &lambda) in e.values.iter().enumerate() {
                let col = v.column(j);
                let av = a.mul_vec(&col).unwrap();
                for (x, y) in av.iter().zip(&col) {
                    assert!((x - lambda * y).abs() <= 1e-8);
                }
            }
        }
    }

    fn square(n: usize) -> impl Strategy<Value = Matrix> {
        proptest::collection::vec(-3.0f64..3.0, n * n)
            .prop_map(move |d| Matrix::new(n, n, d).unwrap())
    }

    proptest! {
        #[test]
        fn det_of_gram_is_det_squared(a in (1usize..6).prop_flat_map(square)) {
            let d = determinant(&a).unwrap();
            let dg = determinant(&gram(&a)).unwrap();
            prop_assert!((dg - d * d).abs() <= 1e-8 * (d * d).max(1.0));
        }

        #[test]
        fn gram_is_symmetric_psd(
            data in proptest::collection::vec(-3.0f64..3.0, 12),
            rows in prop_oneof![Just(2usize), Just(3), Just(4), Just(6)],
        ) {
            let a = Matrix::new(rows, 12 / rows, data).unwrap();
            let g = gram(&a);
            for i in 0..g.rows() {
                for j in 0..g.cols() {
                    prop_assert!((g[(i, j)] - g[(j, i)]).abs() <= 1e-14);
                }
            }
            let e = sym_eigen(&g).unwrap();
            prop_assert!(e.values.iter().all(|&l| l >= -1e-10));
        }

        #[test]
        fn row_swap_flips_sign(a in square(4), i in 0usize..4, j in 0usize..4) {
            prop_assume!(i != j);
            let mut b = a.clone();
            b.swap_rows(i, j);
            let da = determinant(&a).unwrap();
            let db = determinant(&b).unwrap();
            prop_assert!((da + db).abs() <= 1e-10 * da.abs().max(1.0));
        }
    }
}
