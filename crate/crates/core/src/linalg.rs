//! Exact linear algebra over `Q`: row reduction, kernels and subspaces in
//! reduced row echelon form.

use num_rational::BigRational;
use num_traits::{One, Zero};

pub type Q = BigRational;
pub type Vector = Vec<Q>;

/// A dense matrix stored by rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Vector>,
}

impl Matrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![vec![Q::zero(); cols]; rows] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for k in 0..n {
            m.data[k][k] = Q::one();
        }
        m
    }

    /// Builds a `rows × cols` matrix; every row must have length `cols`.
    pub fn from_rows(rows: usize, cols: usize, data: Vec<Vector>) -> Option<Self> {
        (data.len() == rows && data.iter().all(|r| r.len() == cols)).then_some(Matrix { rows, cols, data })
    }

    pub fn from_ints(rows: usize, cols: usize, data: &[&[i64]]) -> Self {
        let data = data.iter().map(|r| r.iter().map(|&x| Q::from_integer(x.into())).collect()).collect();
        Self::from_rows(rows, cols, data).expect("shape matches")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Vector] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> &Q {
        &self.data[r][c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Q) {
        self.data[r][c] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|r| r.iter().all(Zero::is_zero))
    }

    pub fn apply(&self, v: &[Q]) -> Vector {
        self.data.iter().map(|row| dot(row, v)).collect()
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matrix shapes do not compose");
        let mut out = Matrix::zero(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                if self.data[r][k].is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let t = &self.data[r][k] * &other.data[k][c];
                    out.data[r][c] += t;
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zero(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c][r] = self.data[r][c].clone();
            }
        }
        out
    }

    pub fn rank(&self) -> usize {
        rref(self.data.clone(), self.cols).0.len()
    }

    /// Basis of `{v : A v = 0}`.
    pub fn kernel(&self) -> Vec<Vector> {
        let (rows, pivots) = rref(self.data.clone(), self.cols);
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![Q::zero(); self.cols];
                v[f] = Q::one();
                for (row, &pc) in rows.iter().zip(&pivots) {
                    v[pc] = -row[f].clone();
                }
                v
            })
            .collect()
    }

    /// Inverse of a square matrix, if it exists.
    pub fn inverse(&self) -> Option<Matrix> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        if n == 0 {
            return Some(Matrix::identity(0));
        }
        let aug: Vec<Vector> = self
            .data
            .iter()
            .enumerate()
            .map(|(r, row)| {
                let mut v = row.clone();
                v.extend((0..n).map(|c| if c == r { Q::one() } else { Q::zero() }));
                v
            })
            .collect();
        let (rows, pivots) = rref(aug, 2 * n);
        if pivots.len() < n || pivots[n - 1] >= n {
            return None;
        }
        Some(Matrix { rows: n, cols: n, data: rows.into_iter().map(|r| r[n..].to_vec()).collect() })
    }
}

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    let mut s = Q::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            s += x * y;
        }
    }
    s
}

/// Reduced row echelon form: the nonzero rows and their pivot columns.
pub fn rref(mut rows: Vec<Vector>, cols: usize) -> (Vec<Vector>, Vec<usize>) {
    let mut pivots = Vec::new();
    let mut top = 0;
    for c in 0..cols {
        let Some(found) = (top..rows.len()).find(|&r| !rows[r][c].is_zero()) else { continue };
        rows.swap(top, found);
        let inv = rows[top][c].recip();
        for x in rows[top].iter_mut() {
            *x *= &inv;
        }
        let pivot = rows[top].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != top && !row[c].is_zero() {
                let f = row[c].clone();
                for (x, y) in row.iter_mut().zip(&pivot) {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(c);
        top += 1;
        if top == rows.len() {
            break;
        }
    }
    rows.truncate(top);
    (rows, pivots)
}

/// Solves `Σ_k x_k cols[k] = v` for linearly independent `cols`.
pub fn solve(cols: &[Vector], v: &[Q]) -> Option<Vector> {
    let n = v.len();
    let k = cols.len();
    let aug: Vec<Vector> = (0..n)
        .map(|r| {
            let mut row: Vector = cols.iter().map(|c| c[r].clone()).collect();
            row.push(v[r].clone());
            row
        })
        .collect();
    let (rows, pivots) = rref(aug, k + 1);
    if pivots.last() == Some(&k) {
        return None;
    }
    let mut x = vec![Q::zero(); k];
    for (row, &pc) in rows.iter().zip(&pivots) {
        x[pc] = row[k].clone();
    }
    Some(x)
}

/// A subspace of `Q^n`, stored as its reduced row echelon basis (hence
/// canonical: equal subspaces compare equal).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subspace {
    ambient: usize,
    basis: Vec<Vector>,
}

impl Subspace {
    pub fn zero(n: usize) -> Self {
        Subspace { ambient: n, basis: Vec::new() }
    }

    pub fn full(n: usize) -> Self {
        Self::span(n, Matrix::identity(n).data)
    }

    pub fn span(n: usize, vectors: Vec<Vector>) -> Self {
        debug_assert!(vectors.iter().all(|v| v.len() == n));
        Subspace { ambient: n, basis: rref(vectors, n).0 }
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vector] {
        &self.basis
    }

    pub fn contains(&self, v: &[Q]) -> bool {
        let mut rows = self.basis.clone();
        rows.push(v.to_vec());
        rref(rows, self.ambient).0.len() == self.basis.len()
    }

    pub fn is_subspace_of(&self, other: &Subspace) -> bool {
        self.basis.iter().all(|v| other.contains(v))
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        let mut rows = self.basis.clone();
        rows.extend(other.basis.iter().cloned());
        Self::span(self.ambient, rows)
    }

    /// `{y : y·v = 0 for all v}`.
    pub fn annihilator(&self) -> Matrix {
        let m = Matrix { rows: self.basis.len(), cols: self.ambient, data: self.basis.clone() };
        let ker = m.kernel();
        Matrix { rows: ker.len(), cols: self.ambient, data: ker }
    }

    pub fn intersect(&self, other: &Subspace) -> Subspace {
        let a = self.annihilator();
        let b = other.annihilator();
        let mut rows = a.data;
        rows.extend(b.data);
        let stacked = Matrix { rows: rows.len(), cols: self.ambient, data: rows };
        Self::span(self.ambient, stacked.kernel())
    }

    /// `A(S)`.
    pub fn image(&self, a: &Matrix) -> Subspace {
        Self::span(a.rows, self.basis.iter().map(|v| a.apply(v)).collect())
    }

    /// `{v : A v ∈ S}`.
    pub fn preimage(a: &Matrix, s: &Subspace) -> Subspace {
        let cond = s.annihilator().mul(a);
        Self::span(a.cols, cond.kernel())
    }

    /// Vectors of `self` completing a basis of `sub` (assumed contained in
    /// `self`) to one of `self`.
    pub fn complement_of(&self, sub: &Subspace) -> Vec<Vector> {
        let mut acc = sub.basis.clone();
        let mut out = Vec::new();
        for v in &self.basis {
            let mut trial = acc.clone();
            trial.push(v.clone());
            if rref(trial, self.ambient).0.len() > acc.len() {
                acc.push(v.clone());
                out.push(v.clone());
            }
        }
        out
    }
}
