//! Dense row-major matrices, Cholesky factorization and triangular solves.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::from_row_major(r, c, rows.concat())
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

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// max |A − Aᵀ| / max |A|.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst / scale
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// xᵀ A y.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.matvec(y))
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a != 0.0 {
                    for (o, b) in orow.iter_mut().zip(other.row(k)) {
                        *o += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, other: &DenseMatrix) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    /// Overwrites the upper triangle with the lower one.
    pub fn symmetrize_from_lower(&mut self) {
        for i in 0..self.rows {
            for j in 0..i {
                self[(j, i)] = self[(i, j)];
            }
        }
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Lower-triangular factor L with A = L·Lᵀ.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    l: DenseMatrix,
}

/// Factorizes a symmetric positive definite matrix, reading its lower triangle.
pub fn cholesky(a: &DenseMatrix) -> Result<CholeskyFactor> {
    if !a.is_square() {
        return Err(Error::Dimension(format!("cholesky of a {}x{} matrix", a.rows, a.cols)));
    }
    let n = a.rows;
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let (head, tail) = l.data.split_at_mut(j * n);
        let row_j = &mut tail[..n];
        for k in 0..j {
            let row_k = &head[k * n..k * n + k + 1];
            let s = a[(j, k)] - dot(&row_j[..k], &row_k[..k]);
            row_j[k] = s / row_k[k];
        }
        let pivot = a[(j, j)] - dot(&row_j[..j], &row_j[..j]);
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        row_j[j] = pivot.sqrt();
    }
    Ok(CholeskyFactor { l })
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.l.rows
    }

    pub fn lower(&self) -> &DenseMatrix {
        &self.l
    }

    pub fn min_pivot(&self) -> f64 {
        self.l.diagonal().iter().fold(f64::INFINITY, |m, v| m.min(v * v))
    }

    /// Solves L y = b in place.
    pub fn forward_solve(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let row = self.l.row(i);
            b[i] = (b[i] - dot(&row[..i], &b[..i])) / row[i];
        }
    }

    /// Solves Lᵀ x = y in place.
    pub fn backward_solve(&self, y: &mut [f64]) {
        let n = self.dim();
        for i in (0..n).rev() {
            let xi = y[i] / self.l[(i, i)];
            y[i] = xi;
            let row = self.l.row(i);
            for (yk, lk) in y[..i].iter_mut().zip(&row[..i]) {
                *yk -= lk * xi;
            }
        }
    }

    /// Solves A x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.dim(), "solve dimension");
        self.forward_solve(b);
        self.backward_solve(b);
    }

    /// L z.
    pub fn lower_mul(&self, z: &[f64]) -> Vec<f64> {
        (0..self.dim()).map(|i| dot(&self.l.row(i)[..=i], &z[..=i])).collect()
    }

    /// L Lᵀ.
    pub fn reconstruct(&self) -> DenseMatrix {
        let n = self.dim();
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = dot(&self.l.row(i)[..=j], &self.l.row(j)[..=j]);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        a
    }
}

/// Solves A u = b for symmetric positive definite A.
pub fn solve_spd(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.rows {
        return Err(Error::Dimension(format!("rhs of length {} for N = {}", b.len(), a.rows)));
    }
    Ok(cholesky(a)?.solve(b))
}

/// C = A⁻¹ M A⁻ᵀ for symmetric positive definite A.
pub fn inv_triple_product(a: &DenseMatrix, m: &DenseMatrix) -> Result<DenseMatrix> {
    inv_triple_product_factored(&cholesky(a)?, m)
}

pub fn inv_triple_product_factored(fa: &CholeskyFactor, m: &DenseMatrix) -> Result<DenseMatrix> {
    let n = fa.dim();
    if m.rows != n || m.cols != n {
        return Err(Error::Dimension(format!("{}x{} matrix against N = {n}", m.rows, m.cols)));
    }
    // G = A⁻¹M column by column; M is symmetric so its rows are its columns.
    let mut g = DenseMatrix::zeros(n, n);
    for j in 0..n {
        g.row_mut(j).copy_from_slice(m.row(j));
        fa.solve_in_place(g.row_mut(j));
    }
    // Row j of g now holds column j of A⁻¹M; C = A⁻¹(A⁻¹M)ᵀ has columns A⁻¹·(row i of A⁻¹M).
    let mut gt = g.transpose();
    for i in 0..n {
        fa.solve_in_place(gt.row_mut(i));
    }
    let mut c = gt;
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    Ok(c)
}

/// Eigenvalues λ of A v = λ M v in ascending order, via L⁻¹AL⁻ᵀ with M = LLᵀ.
pub fn generalized_eigenvalues(a: &DenseMatrix, m: &DenseMatrix) -> Result<Vec<f64>> {
    let fm = cholesky(m)?;
    let n = fm.dim();
    if a.rows != n || a.cols != n {
        return Err(Error::Dimension("eigenproblem matrices differ in size".into()));
    }
    // B = L⁻¹ A L⁻ᵀ: solve L X = A, then L Bᵀ = Xᵀ.
    let mut x = a.transpose();
    for j in 0..n {
        fm.forward_solve(x.row_mut(j));
    }
    let mut b = x.transpose();
    for j in 0..n {
        fm.forward_solve(b.row_mut(j));
    }
    let sym = nalgebra::DMatrix::from_fn(n, n, |i, j| 0.5 * (b[(i, j)] + b[(j, i)]));
    let mut vals: Vec<f64> = nalgebra::SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    vals.sort_by(|p, q| p.total_cmp(q));
    Ok(vals)
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: &DenseMatrix) -> Vec<f64> {
    let n = a.rows;
    let sym = nalgebra::DMatrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let mut vals: Vec<f64> = nalgebra::SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    vals.sort_by(|p, q| p.total_cmp(q));
    vals
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = DenseMatrix::zeros(n, n);
        b.as_mut_slice().iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
        let mut a = b.matmul(&b.transpose());
        for i in 0..n {
            a[(i, i)] += n as f64 * 0.1;
        }
        a
    }

    fn mass(n: usize, h: f64) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 2.0 * h / 3.0;
            if i + 1 < n {
                m[(i, i + 1)] = h / 6.0;
                m[(i + 1, i)] = h / 6.0;
            }
        }
        m
    }

    #[test]
    fn cholesky_examples() {
        let l = cholesky(&DenseMatrix::identity(4)).unwrap();
        assert_eq!(l.lower(), &DenseMatrix::identity(4));
        let a = DenseMatrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let l = cholesky(&a).unwrap();
        assert_eq!(l.lower()[(0, 0)], 2.0);
        assert_eq!(l.lower()[(1, 0)], 1.0);
        assert_eq!(l.lower()[(0, 1)], 0.0);
        assert!((l.lower()[(1, 1)] - 2f64.sqrt()).abs() < 1e-15);
        let m = mass(5, 1.0);
        let r = cholesky(&m).unwrap().reconstruct();
        for (x, y) in r.as_slice().iter().zip(m.as_slice()) {
            assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn cholesky_reports_failing_pivot() {
        let a = DenseMatrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 2.0],
            vec![0.0, 2.0, 1.0],
        ])
        .unwrap();
        match cholesky(&a) {
            Err(Error::NotPositiveDefinite { index, .. }) => assert_eq!(index, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn solve_examples() {
        let b = vec![1.0, -2.0, 3.0];
        assert_eq!(solve_spd(&DenseMatrix::identity(3), &b).unwrap(), b);
        assert_eq!(solve_spd(&random_spd(3, 1), &[0.0; 3]).unwrap(), vec![0.0; 3]);
        let a = random_spd(50, 2);
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let u = solve_spd(&a, &b).unwrap();
        let res: Vec<f64> = a.matvec(&u).iter().zip(&b).map(|(x, y)| x - y).collect();
        let anorm = symmetric_eigenvalues(&a).last().copied().unwrap();
        assert!(norm2(&res) <= 1e-9 * (anorm * norm2(&u) + norm2(&b)));
    }

    #[test]
    fn triple_product_examples() {
        let m = mass(6, 0.5);
        let c = inv_triple_product(&DenseMatrix::identity(6), &m).unwrap();
        for (x, y) in c.as_slice().iter().zip(m.as_slice()) {
            assert!((x - y).abs() < 1e-15);
        }
        let a = random_spd(12, 3);
        let c = inv_triple_product(&a, &DenseMatrix::identity(12)).unwrap();
        let id = a.matmul(&c).matmul(&a);
        for i in 0..12 {
            for j in 0..12 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - want).abs() < 1e-8);
            }
        }
        let c = inv_triple_product(&a, &random_spd(12, 4)).unwrap();
        assert!(c.symmetry_defect() < 1e-10);
        let ev = symmetric_eigenvalues(&c);
        assert!(ev[0] >= -1e-10 * c.max_abs());
    }

    #[test]
    fn generalized_eigenvalues_of_scaled_mass() {
        let m = mass(8, 0.25);
        let mut a = m.clone();
        a.scale(3.0);
        let ev = generalized_eigenvalues(&a, &m).unwrap();
        assert!(ev.iter().all(|v| (v - 3.0).abs() < 1e-12));
    }

    #[test]
    fn lower_mul_matches_dense() {
        let a = random_spd(7, 5);
        let f = cholesky(&a).unwrap();
        let z: Vec<f64> = (0..7).map(|i| i as f64 - 3.0).collect();
        let want = f.lower().matvec(&z);
        for (x, y) in f.lower_mul(&z).iter().zip(&want) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn reconstruction_bound(n in 1usize..30, seed in 0u64..1000) {
            let a = random_spd(n, seed);
            let r = cholesky(&a).unwrap().reconstruct();
            let err = r.as_slice().iter().zip(a.as_slice()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            prop_assert!(err <= 1e-10 * a.max_abs());
        }
    }
}
