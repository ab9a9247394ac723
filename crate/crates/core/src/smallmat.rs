//! Dense linear algebra at small, fixed maximum size.
//!
//! Everything here lives on the stack: vectors and matrices carry a backing
//! array of [`MAX_DIM`] (resp. `MAX_DIM * MAX_DIM`) entries plus their logical
//! shape. Besides the generic helpers this module holds the explicit matrices
//! used by the couplings: the Rodrigues rotation `R_{x,y}`, the frame alignment
//! `O_{X,Y}` on the 2-sphere, the fixed-distance driver pair `(J, K)`, the
//! block rotation used by the intrinsic rotation coupling and the angle solver
//! for `a cos(alpha) + b sin(alpha) = c`.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Largest supported dimension for vectors and for either side of a matrix.
pub const MAX_DIM: usize = 16;

/// Relative threshold below which two unit vectors count as parallel and a
/// frame counts as rank deficient.
pub const DEGENERACY_TOL: f64 = 1e-10;

const UNIT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, PartialEq)]
pub struct Vector {
    data: [f64; MAX_DIM],
    len: usize,
}

impl Vector {
    pub fn zeros(len: usize) -> Self {
        assert!(len <= MAX_DIM, "vector dimension {len} exceeds {MAX_DIM}");
        Self {
            data: [0.0; MAX_DIM],
            len,
        }
    }

    /// Standard basis vector `e_index` (zero based) of the given dimension.
    pub fn basis(len: usize, index: usize) -> Self {
        let mut v = Self::zeros(len);
        v[index] = 1.0;
        v
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        if values.len() > MAX_DIM {
            return Err(Error::InputDomain(format!(
                "vector of dimension {} exceeds the maximum of {MAX_DIM}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InputDomain("non-finite vector entry".into()));
        }
        let mut v = Self::zeros(values.len());
        v.data[..values.len()].copy_from_slice(values);
        Ok(v)
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> f64) -> Self {
        let mut v = Self::zeros(len);
        for i in 0..len {
            v.data[i] = f(i);
        }
        v
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data[..self.len]
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data[..self.len]
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.as_slice().iter()
    }

    #[inline]
    pub fn dot(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.len, other.len);
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| a * b)
            .sum()
    }

    #[inline]
    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        out.as_mut_slice().iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        debug_assert_eq!(self.len, other.len);
        let mut out = *self;
        for (o, b) in out.as_mut_slice().iter_mut().zip(other.as_slice()) {
            *o += s * b;
        }
        out
    }

    /// Unit vector in the same direction; `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self.scale(1.0 / n))
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }

    /// Copy of the first `len` entries.
    pub fn head(&self, len: usize) -> Self {
        assert!(len <= self.len);
        let mut out = *self;
        out.len = len;
        out
    }

    /// Same entries, padded with zeros up to `len`.
    pub fn extended(&self, len: usize) -> Self {
        assert!(len >= self.len && len <= MAX_DIM);
        let mut out = Self::zeros(len);
        out.data[..self.len].copy_from_slice(self.as_slice());
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl IndexMut<usize> for Vector {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.as_mut_slice()[i]
    }
}

impl Add for Vector {
    type Output = Vector;
    fn add(self, rhs: Vector) -> Vector {
        self.axpy(1.0, &rhs)
    }
}

impl Sub for Vector {
    type Output = Vector;
    fn sub(self, rhs: Vector) -> Vector {
        self.axpy(-1.0, &rhs)
    }
}

impl Neg for Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self.scale(-1.0)
    }
}

impl Mul<f64> for Vector {
    type Output = Vector;
    fn mul(self, rhs: f64) -> Vector {
        self.scale(rhs)
    }
}

/// Cross product in R^3.
pub fn cross(a: &Vector, b: &Vector) -> Vector {
    assert!(a.len() == 3 && b.len() == 3, "cross product needs 3-vectors");
    Vector::from_fn(3, |i| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        a[j] * b[k] - a[k] * b[j]
    })
}

/// Row-major dense matrix with at most `MAX_DIM` rows and columns.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    data: [f64; MAX_DIM * MAX_DIM],
    rows: usize,
    cols: usize,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows <= MAX_DIM && cols <= MAX_DIM, "matrix shape too large");
        Self {
            data: [0.0; MAX_DIM * MAX_DIM],
            rows,
            cols,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        if n_rows > MAX_DIM || n_cols > MAX_DIM {
            return Err(Error::InputDomain("matrix shape too large".into()));
        }
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::InputDomain("ragged matrix rows".into()));
        }
        Ok(Self::from_fn(n_rows, n_cols, |i, j| rows[i][j]))
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vector]) -> Self {
        let rows = columns.first().map_or(0, |c| c.len());
        Self::from_fn(rows, columns.len(), |i, j| columns[j][i])
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> Vector {
        Vector::from_fn(self.rows, |i| self[(i, j)])
    }

    pub fn row(&self, i: usize) -> Vector {
        Vector::from_fn(self.cols, |j| self[(i, j)])
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "shape mismatch in matmul");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &Vector) -> Vector {
        assert_eq!(self.cols, v.len(), "shape mismatch in mul_vec");
        Vector::from_fn(self.rows, |i| {
            (0..self.cols).map(|j| self[(i, j)] * v[j]).sum()
        })
    }

    /// `self' v` without materialising the transpose.
    pub fn tr_mul_vec(&self, v: &Vector) -> Vector {
        assert_eq!(self.rows, v.len(), "shape mismatch in tr_mul_vec");
        Vector::from_fn(self.cols, |j| {
            (0..self.rows).map(|i| self[(i, j)] * v[i]).sum()
        })
    }

    pub fn outer(u: &Vector, v: &Vector) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j])
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.data[..].iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `max |(A'A - I)_{ij}|`; zero for a matrix with orthonormal columns.
    pub fn orthogonality_residual(&self) -> f64 {
        self.transpose()
            .matmul(self)
            .max_abs_diff(&Matrix::identity(self.cols))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Determinant by partial-pivot LU.
    pub fn determinant(&self) -> f64 {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut det = 1.0;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs()))
                .unwrap_or(col);
            if a[(pivot, col)] == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for j in 0..n {
                    let tmp = a[(col, j)];
                    a[(col, j)] = a[(pivot, j)];
                    a[(pivot, j)] = tmp;
                }
                det = -det;
            }
            let p = a[(col, col)];
            det *= p;
            for i in col + 1..n {
                let factor = a[(i, col)] / p;
                if factor != 0.0 {
                    for j in col..n {
                        a[(i, j)] -= factor * a[(col, j)];
                    }
                }
            }
        }
        det
    }

    /// Eigenvalues of a symmetric matrix (cyclic Jacobi), ascending.
    pub fn symmetric_eigenvalues(&self) -> Vec<f64> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)] * a[(i, j)])
                .sum();
            if off < 1e-300 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        eig.sort_by(f64::total_cmp);
        eig
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        let gram = self.transpose().matmul(self);
        gram.symmetric_eigenvalues()
            .last()
            .copied()
            .unwrap_or(0.0)
            .max(0.0)
            .sqrt()
    }

    /// Gram-Schmidt on the columns; keeps a rotation a rotation after drift.
    pub fn orthonormalize_columns(&self) -> Result<Self> {
        let mut cols: Vec<Vector> = (0..self.cols).map(|j| self.column(j)).collect();
        for j in 0..cols.len() {
            for k in 0..j {
                let proj = cols[j].dot(&cols[k]);
                cols[j] = cols[j].axpy(-proj, &cols[k]);
            }
            cols[j] = cols[j]
                .normalized()
                .ok_or_else(|| Error::Degenerate("rank-deficient matrix".into()))?;
        }
        Ok(Self::from_columns(&cols))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * MAX_DIM + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * MAX_DIM + j]
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)] + rhs[(i, j)])
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)] - rhs[(i, j)])
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<f64>> = (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)]).collect())
            .collect();
        f.debug_list().entries(rows).finish()
    }
}

/// Cross-product matrix `[w]_x`, so that `[w]_x v = w x v`.
pub fn hat(w: &Vector) -> Matrix {
    assert_eq!(w.len(), 3);
    Matrix::from_rows(&[
        &[0.0, -w[2], w[1]],
        &[w[2], 0.0, -w[0]],
        &[-w[1], w[0], 0.0],
    ])
    .expect("3x3")
}

/// Closed-form exponential of `[w]_x` in SO(3).
pub fn so3_exp(w: &Vector) -> Matrix {
    let theta2 = w.norm_squared();
    let theta = theta2.sqrt();
    let k = hat(w);
    let k2 = k.matmul(&k);
    // Series for small angles keeps both coefficients accurate.
    let (a, b) = if theta < 1e-4 {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    &(&Matrix::identity(3) + &k.scale(a)) + &k2.scale(b)
}

fn check_unit(v: &Vector, name: &str) -> Result<()> {
    if v.len() != 3 {
        return Err(Error::InputDomain(format!("{name} must be a 3-vector")));
    }
    if !v.is_finite() || (v.norm() - 1.0).abs() > UNIT_TOL {
        return Err(Error::InputDomain(format!(
            "{name} must be a unit vector (norm {})",
            v.norm()
        )));
    }
    Ok(())
}

/// Rotation with axis `x × y` taking `x` to `y`:
/// `R = cos(theta) I + (y x' - x y') + u u' / (1 + cos(theta))`, `u = x × y`.
///
/// `R_{x,x} = I` and `R_{x,-x} = -I`.
pub fn rodrigues_rotation(x: &Vector, y: &Vector) -> Result<Matrix> {
    check_unit(x, "x")?;
    check_unit(y, "y")?;
    let c = x.dot(y);
    if 1.0 + c <= DEGENERACY_TOL {
        return Ok(Matrix::identity(3).scale(-1.0));
    }
    // Same rotation as c I + (y x' - x y') + u u' / (1 + c), built as two
    // reflections so it stays orthogonal near the antipode.
    let m = *x + *y;
    Ok(householder(&m).matmul(&householder(x)))
}

/// Reflection `I - 2 v v' / (v·v)` across the plane orthogonal to `v`.
fn householder(v: &Vector) -> Matrix {
    &Matrix::identity(v.len()) - &Matrix::outer(v, v).scale(2.0 / v.dot(v))
}

/// Orthogonal `O_{X,Y}` with `O e1 = x`, `O (c e1 + s e2) = y` and
/// `O e3 = (x × y) / s`, where `c = x·y`, `s = sqrt(1 - c²)`.
pub fn frame_align(x: &Vector, y: &Vector) -> Result<Matrix> {
    check_unit(x, "x")?;
    check_unit(y, "y")?;
    let c = x.dot(y);
    if 1.0 - c.abs() < DEGENERACY_TOL {
        return Err(Error::Degenerate(format!(
            "frame alignment needs y != ±x (x·y = {c})"
        )));
    }
    let second = y.axpy(-c, x);
    let second = second.scale(1.0 / second.norm());
    let third = cross(x, &second);
    Ok(Matrix::from_columns(&[*x, second, third]))
}

/// Driver matrices `(J, K)` of the fixed-distance coupling on S².
///
/// In the aligned frame `J~ = [[0,-s,0],[0,c,0],[0,0,c]]` and
/// `K~ = [[0,c,0],[0,s,0],[0,0,s]]`; both are conjugated back with `O_{X,Y}`.
pub fn fixed_distance_matrices(x: &Vector, y: &Vector) -> Result<(Matrix, Matrix)> {
    let o = frame_align(x, y)?;
    let c = x.dot(y);
    let s = (1.0 - c * c).sqrt();
    let (jt, kt) = aligned_fixed_distance_matrices(c, s);
    let ot = o.transpose();
    Ok((o.matmul(&jt).matmul(&ot), o.matmul(&kt).matmul(&ot)))
}

/// `(J~, K~)` for cosine `c` and sine `s` of the angle between the points.
pub fn aligned_fixed_distance_matrices(c: f64, s: f64) -> (Matrix, Matrix) {
    let jt = Matrix::from_rows(&[&[0.0, -s, 0.0], &[0.0, c, 0.0], &[0.0, 0.0, c]]).expect("3x3");
    let kt = Matrix::from_rows(&[&[0.0, c, 0.0], &[0.0, s, 0.0], &[0.0, 0.0, s]]).expect("3x3");
    (jt, kt)
}

/// Residuals of the fixed-distance system for a candidate `(J, K)`:
/// `[x'Jy - (c tr J - 1 - c²), x'Jx + y'Jy - c y'Jx - (tr J - 2c), max|JJ' + KK' - I|]`.
pub fn fixed_distance_residuals(x: &Vector, y: &Vector, j: &Matrix, k: &Matrix) -> [f64; 3] {
    let c = x.dot(y);
    let tr = j.trace();
    let jy = j.mul_vec(y);
    let jx = j.mul_vec(x);
    let first = x.dot(&jy) - (c * tr - 1.0 - c * c);
    let second = x.dot(&jx) + y.dot(&jy) - c * y.dot(&jx) - (tr - 2.0 * c);
    let third = (&j.matmul(&j.transpose()) + &k.matmul(&k.transpose()))
        .max_abs_diff(&Matrix::identity(j.rows()));
    [first.abs(), second.abs(), third]
}

/// Principal solution in `[0, 2π)` of `a cos(alpha) + b sin(alpha) = c`.
///
/// For `b >= 0` this is `arccos(a/R) + arccos(c/R)` with `R = sqrt(a² + b²)`;
/// the phase is taken from `atan2(b, a)` so negative `b` is handled too.
pub fn solve_alpha(a: f64, b: f64, c: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return Err(Error::InputDomain("non-finite coefficients".into()));
    }
    let r = a.hypot(b);
    if r == 0.0 || c.abs() > r {
        return Err(Error::Infeasible(format!(
            "|c| = {} exceeds sqrt(a² + b²) = {r}",
            c.abs()
        )));
    }
    let alpha = b.atan2(a) + (c / r).clamp(-1.0, 1.0).acos();
    let wrapped = alpha.rem_euclid(2.0 * PI);
    // rem_euclid can round up to exactly 2π.
    Ok(if wrapped >= 2.0 * PI { 0.0 } else { wrapped })
}

/// Block-diagonal rotation with `n / 2` blocks `[[cos, sin], [-sin, cos]]`,
/// preceded by a fixed `1` in the top-left corner when `fixed_first` is set.
pub fn block_rotation(n: usize, alpha: f64, fixed_first: bool) -> Result<Matrix> {
    if n % 2 != 0 {
        return Err(Error::InputDomain(format!(
            "block rotation needs an even block count, got {n}"
        )));
    }
    let size = n + usize::from(fixed_first);
    if size > MAX_DIM {
        return Err(Error::InputDomain(format!("block rotation of size {size}")));
    }
    let offset = usize::from(fixed_first);
    let mut m = Matrix::zeros(size, size);
    if fixed_first {
        m[(0, 0)] = 1.0;
    }
    let (s, c) = alpha.sin_cos();
    for block in 0..n / 2 {
        let i = offset + 2 * block;
        m[(i, i)] = c;
        m[(i, i + 1)] = s;
        m[(i + 1, i)] = -s;
        m[(i + 1, i + 1)] = c;
    }
    Ok(m)
}

/// Unit vector completing `d` orthonormal vectors of `R^{d+1}` to a
/// positively oriented orthonormal basis (generalised cross product).
pub fn complete_frame(vectors: &[Vector]) -> Result<Vector> {
    let d = vectors.len();
    let n = d + 1;
    if n > MAX_DIM || vectors.iter().any(|v| v.len() != n) {
        return Err(Error::InputDomain(format!(
            "complete_frame needs {d} vectors of dimension {n}"
        )));
    }
    for (i, vi) in vectors.iter().enumerate() {
        for (j, vj) in vectors.iter().enumerate().skip(i) {
            let target = if i == j { 1.0 } else { 0.0 };
            if (vi.dot(vj) - target).abs() > DEGENERACY_TOL {
                return Err(Error::Degenerate(format!(
                    "input vectors {i} and {j} are not orthonormal"
                )));
            }
        }
    }
    // w_i = det[v_1, ..., v_d, e_i], so det[v_1, ..., v_d, w] = |w|² > 0.
    let mut w = Vector::zeros(n);
    let mut cols: Vec<Vector> = vectors.to_vec();
    cols.push(Vector::zeros(n));
    for i in 0..n {
        cols[d] = Vector::basis(n, i);
        w[i] = Matrix::from_columns(&cols).determinant();
    }
    w.normalized()
        .filter(|u| u.is_finite() && w.norm() > DEGENERACY_TOL)
        .ok_or_else(|| Error::Degenerate("input vectors are rank deficient".into()))
}

/// An `N`-frame at a point: a map `U: R^N -> T_x M` with `U U' = Id`.
///
/// Stored as an orthonormal tangent basis `E_1..E_d` (ambient coordinates)
/// together with the `d × N` coefficient matrix `C`, so that
/// `U xi = sum_j (C xi)_j E_j`.
#[derive(Clone, Debug)]
pub struct NFrame {
    basis: Vec<Vector>,
    coefficients: Matrix,
}

impl NFrame {
    pub fn new(basis: Vec<Vector>, coefficients: Matrix) -> Result<Self> {
        if coefficients.rows() != basis.len() || coefficients.cols() < basis.len() {
            return Err(Error::InputDomain(format!(
                "N-frame coefficient matrix must be {} x N with N >= {}",
                basis.len(),
                basis.len()
            )));
        }
        let residual = coefficients
            .matmul(&coefficients.transpose())
            .max_abs_diff(&Matrix::identity(basis.len()));
        if residual > UNIT_TOL {
            return Err(Error::InputDomain(format!(
                "U U' deviates from the identity by {residual:e}"
            )));
        }
        Ok(Self {
            basis,
            coefficients,
        })
    }

    /// The canonical frame `[I_d | 0]` over an orthonormal basis.
    pub fn canonical(basis: Vec<Vector>, n: usize) -> Result<Self> {
        let d = basis.len();
        let coefficients = Matrix::from_fn(d, n, |i, j| if i == j { 1.0 } else { 0.0 });
        Self::new(basis, coefficients)
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn n(&self) -> usize {
        self.coefficients.cols()
    }

    pub fn basis(&self) -> &[Vector] {
        &self.basis
    }

    /// `U xi` as an ambient tangent vector.
    pub fn apply(&self, xi: &Vector) -> Vector {
        let coords = self.coefficients.mul_vec(xi);
        let mut out = Vector::zeros(self.basis[0].len());
        for (c, e) in coords.iter().zip(&self.basis) {
            out = out.axpy(*c, e);
        }
        out
    }

    /// The vectors `X_i = U e_i`, `i = 1..N`.
    pub fn columns(&self) -> Vec<Vector> {
        (0..self.n())
            .map(|i| self.apply(&Vector::basis(self.n(), i)))
            .collect()
    }
}
