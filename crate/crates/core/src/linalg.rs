//! Dense complex linear algebra for small operators.
//!
//! Everything here works on matrices of side at most a few dozen, which is
//! all the discrimination problems in this crate ever need. Routines are
//! plain O(d³) loops; no BLAS.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use thiserror::Error;

/// Tolerance on `‖A − A†‖_max` for a matrix to count as Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Negative eigenvalues down to `-PSD_CLAMP` are rounded up to zero.
pub const PSD_CLAMP: f64 = 1e-10;
/// Relative tolerance used for rank decisions (supports, unit eigenspaces).
pub const RANK_TOL: f64 = 1e-7;

const JACOBI_THRESHOLD: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

pub type C64 = Complex64;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("operator is not positive semidefinite (eigenvalue {eigenvalue:.3e})")]
    NotPositive { eigenvalue: f64 },
    #[error("operator is not a projector (idempotency defect {defect:.3e})")]
    NotProjector { defect: f64 },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("vector has zero norm")]
    ZeroVector,
}

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        CMatrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = re(1.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from row vectors. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let cc = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == cc), "ragged rows");
        Self::from_fn(r, cc, |i, j| rows[i][j])
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let cc = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == cc), "ragged rows");
        Self::from_fn(r, cc, |i, j| re(rows[i][j]))
    }

    pub fn diag(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &x) in entries.iter().enumerate() {
            m[(i, i)] = re(x);
        }
        m
    }

    /// `|a⟩⟨b|`
    pub fn outer(a: &[C64], b: &[C64]) -> Self {
        Self::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
    }

    /// `|v⟩⟨v|`
    pub fn projector(v: &[C64]) -> Self {
        Self::outer(v, v)
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

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(re(s))
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖A − A†‖_max`; infinite for non-square input.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `(A + A†)/2`
    pub fn hermitian_part(&self) -> Self {
        assert!(self.is_square());
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        })
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// `⟨u|A|v⟩`
    pub fn sandwich(&self, u: &[C64], v: &[C64]) -> C64 {
        inner(u, &self.mul_vec(v))
    }

    /// `tr(A·B)` without forming the product.
    pub fn trace_product(&self, other: &CMatrix) -> C64 {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    /// Copies the `rows × cols` block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &CMatrix) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }

    /// Max-norm distance to another matrix of the same shape.
    pub fn distance(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &CMatrix, tol: f64) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.distance(other) <= tol
    }

    /// Entries as `[re, im]` pairs, row by row.
    pub fn to_pairs(&self) -> Vec<Vec<[f64; 2]>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| [self[(i, j)].re, self[(i, j)].im]).collect())
            .collect()
    }

    pub fn from_pairs(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix, LinalgError> {
        let r = rows.len();
        let cc = rows.first().map_or(0, Vec::len);
        if r == 0 || cc == 0 || rows.iter().any(|row| row.len() != cc) {
            return Err(LinalgError::DimensionMismatch(
                "matrix rows must be nonempty and of equal length".into(),
            ));
        }
        let m = CMatrix::from_fn(r, cc, |i, j| c(rows[i][j][0], rows[i][j][1]));
        if !m.is_finite() {
            return Err(LinalgError::NonFinite);
        }
        Ok(m)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale_re(-1.0)
    }
}

/// `⟨u|v⟩`, conjugate-linear in the first argument.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    assert_eq!(u.len(), v.len(), "inner product length mismatch");
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalize(v: &[C64]) -> Result<Vec<C64>, LinalgError> {
    let n = norm(v);
    if n == 0.0 || !n.is_finite() {
        return Err(LinalgError::ZeroVector);
    }
    Ok(v.iter().map(|z| z / n).collect())
}

/// Multiplies by a global phase so the first non-negligible amplitude is
/// real and positive.
pub fn canonical_phase(v: &[C64]) -> Vec<C64> {
    let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    match v.iter().find(|z| z.norm() > 1e-12 * scale.max(1e-300)) {
        Some(first) => {
            let ph = first.conj() / first.norm();
            v.iter().map(|z| z * ph).collect()
        }
        None => v.to_vec(),
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac, br, bc) = (a.rows, a.cols, b.rows, b.cols);
    CMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

/// Which factor of a bipartite space survives a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    A,
    B,
}

/// Partial trace of an operator on `A ⊗ B` (dimensions `dims`).
pub fn partial_trace(m: &CMatrix, dims: (usize, usize), keep: Keep) -> Result<CMatrix, LinalgError> {
    let (da, db) = dims;
    if !m.is_square() || m.rows != da * db {
        return Err(LinalgError::DimensionMismatch(format!(
            "partial trace expects side {}·{} = {}, got {}x{}",
            da,
            db,
            da * db,
            m.rows,
            m.cols
        )));
    }
    Ok(match keep {
        Keep::A => CMatrix::from_fn(da, da, |i, j| {
            (0..db).map(|k| m[(i * db + k, j * db + k)]).sum()
        }),
        Keep::B => CMatrix::from_fn(db, db, |i, j| {
            (0..da).map(|k| m[(k * db + i, k * db + j)]).sum()
        }),
    })
}

/// Hermitian matrix newtype.
#[derive(Clone, PartialEq, Debug)]
pub struct Hermitian(CMatrix);

impl Hermitian {
    /// Checks hermiticity within [`HERMITICITY_TOL`] and stores the exact
    /// Hermitian part.
    pub fn new(m: CMatrix) -> Result<Self, LinalgError> {
        Self::with_tolerance(m, HERMITICITY_TOL)
    }

    pub fn with_tolerance(m: CMatrix, tol: f64) -> Result<Self, LinalgError> {
        if !m.is_square() {
            return Err(LinalgError::DimensionMismatch(format!(
                "Hermitian operator must be square, got {}x{}",
                m.rows, m.cols
            )));
        }
        if !m.is_finite() {
            return Err(LinalgError::NonFinite);
        }
        let deviation = m.hermiticity_defect();
        if deviation > tol {
            return Err(LinalgError::NotHermitian { deviation });
        }
        Ok(Hermitian(m.hermitian_part()))
    }

    /// Wraps a matrix that is Hermitian by construction; only symmetrizes.
    pub fn from_hermitian_part(m: &CMatrix) -> Self {
        Hermitian(m.hermitian_part())
    }

    pub fn identity(d: usize) -> Self {
        Hermitian(CMatrix::identity(d))
    }

    pub fn projector(v: &[C64]) -> Self {
        Hermitian::from_hermitian_part(&CMatrix::projector(v))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn trace_re(&self) -> f64 {
        self.0.trace().re
    }

    /// `tr(self·other)`, real for Hermitian pairs.
    pub fn expectation(&self, other: &CMatrix) -> f64 {
        self.0.trace_product(other).re
    }

    pub fn transpose(&self) -> Hermitian {
        Hermitian(self.0.transpose())
    }

    pub fn scale(&self, s: f64) -> Hermitian {
        Hermitian(self.0.scale_re(s))
    }

    pub fn add(&self, other: &Hermitian) -> Hermitian {
        Hermitian(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Hermitian) -> Hermitian {
        Hermitian(&self.0 - &other.0)
    }

    /// `A X A†`
    pub fn conjugate_by(&self, a: &CMatrix) -> Hermitian {
        Hermitian::from_hermitian_part(&(&(a * &self.0) * &a.adjoint()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eig(self).values[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *hermitian_eig(self).values.last().unwrap()
    }

    /// Operator norm (largest absolute eigenvalue).
    pub fn op_norm(&self) -> f64 {
        let e = hermitian_eig(self);
        e.values.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }
}

impl AsRef<CMatrix> for Hermitian {
    fn as_ref(&self) -> &CMatrix {
        &self.0
    }
}

/// Eigenvalues ascending with matching orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl EigenDecomposition {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    /// `Σ_k f(λ_k) |v_k⟩⟨v_k|`
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut out = CMatrix::zeros(n, n);
        for (k, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            let v = self.vector(k);
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] += v[i] * v[j].conj() * w;
                }
            }
        }
        out
    }

    /// Projector onto eigenvectors selected by `pick`.
    pub fn projector_where(&self, pick: impl Fn(f64) -> bool) -> CMatrix {
        self.map_spectrum(|x| if pick(x) { 1.0 } else { 0.0 })
    }
}

/// The 2×2 unitary that diagonalizes `[[a, b], [b*, d]]` for real `a`, `d`.
///
/// Returned as `(j_pp, j_pq, j_qp, j_qq)`; columns are the rotated basis.
fn jacobi_rotation(a: f64, d: f64, b: C64) -> (C64, C64, C64, C64) {
    let babs = b.norm();
    let phase = if babs > 0.0 { b / babs } else { re(1.0) };
    let theta = 0.5 * (2.0 * babs).atan2(d - a);
    let (s, cs) = theta.sin_cos();
    let ph = phase.conj();
    (re(cs), re(s), -ph * s, ph * cs)
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
pub fn hermitian_eig(h: &Hermitian) -> EigenDecomposition {
    let n = h.dim();
    let mut a = h.matrix().clone();
    let mut v = CMatrix::identity(n);
    let scale = a.frobenius().max(1e-300);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_THRESHOLD * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let b = a[(p, q)];
                if b.norm() <= f64::MIN_POSITIVE {
                    continue;
                }
                let (jpp, jpq, jqp, jqq) = jacobi_rotation(a[(p, p)].re, a[(q, q)].re, b);
                // A <- A J
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * jpp + akq * jqp;
                    a[(k, q)] = akp * jpq + akq * jqq;
                }
                // A <- J† A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
                    a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
                }
                a[(p, q)] = re(0.0);
                a[(q, p)] = re(0.0);
                a[(p, p)] = re(a[(p, p)].re);
                a[(q, q)] = re(a[(q, q)].re);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * jpp + vkq * jqp;
                    v[(k, q)] = vkp * jpq + vkq * jqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    EigenDecomposition { values, vectors }
}

/// Singular values by one-sided (Hestenes) Jacobi, descending.
///
/// Column orthogonalization keeps tiny singular values accurate, which the
/// eigenvalues of `A†A` would not.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    let mut u = a.clone();
    let n = u.cols;
    let m = u.rows;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = re(0.0);
                for k in 0..m {
                    alpha += u[(k, p)].norm_sqr();
                    beta += u[(k, q)].norm_sqr();
                    gamma += u[(k, p)].conj() * u[(k, q)];
                }
                if gamma.norm() <= 1e-15 * (alpha * beta).sqrt() || gamma.norm() == 0.0 {
                    continue;
                }
                rotated = true;
                let (jpp, jpq, jqp, jqq) = jacobi_rotation(alpha, beta, gamma);
                for k in 0..m {
                    let ukp = u[(k, p)];
                    let ukq = u[(k, q)];
                    u[(k, p)] = ukp * jpp + ukq * jqp;
                    u[(k, q)] = ukp * jpq + ukq * jqq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|k| u[(k, j)].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Trace norm `tr|A|`, the sum of singular values.
pub fn trace_norm(a: &CMatrix) -> f64 {
    singular_values(a).iter().sum()
}

/// Trace norm of a Hermitian operator: `Σ |λ_k|`.
pub fn trace_norm_hermitian(h: &Hermitian) -> f64 {
    hermitian_eig(h).values.iter().map(|x| x.abs()).sum()
}

fn clamp_spectrum(e: &EigenDecomposition) -> Result<Vec<f64>, LinalgError> {
    let scale = e.values.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let zero_below = 64.0 * f64::EPSILON * scale;
    e.values
        .iter()
        .map(|&x| {
            if x < -PSD_CLAMP {
                Err(LinalgError::NotPositive { eigenvalue: x })
            } else if x <= zero_below {
                Ok(0.0)
            } else {
                Ok(x)
            }
        })
        .collect()
}

/// Principal square root of a positive semidefinite operator.
pub fn sqrt_psd(h: &Hermitian) -> Result<Hermitian, LinalgError> {
    let mut e = hermitian_eig(h);
    e.values = clamp_spectrum(&e)?;
    Ok(Hermitian::from_hermitian_part(&e.map_spectrum(f64::sqrt)))
}

/// Checks positivity with the clamping rule of [`PSD_CLAMP`].
pub fn check_psd(h: &Hermitian, tol: f64) -> Result<(), LinalgError> {
    let lo = h.min_eigenvalue();
    if lo < -tol {
        Err(LinalgError::NotPositive { eigenvalue: lo })
    } else {
        Ok(())
    }
}

/// Projector onto the span of eigenvectors with `|λ − target| ≤ tol`.
pub fn eigenspace_projector(h: &Hermitian, target: f64, tol: f64) -> CMatrix {
    hermitian_eig(h).projector_where(|x| (x - target).abs() <= tol)
}

/// Projector onto the kernel, with rank tolerance relative to the norm.
pub fn kernel_projector(h: &Hermitian) -> CMatrix {
    let e = hermitian_eig(h);
    let scale = e.values.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
    e.projector_where(|x| x.abs() <= RANK_TOL * scale)
}

/// Projector onto the support (range) of a Hermitian operator.
pub fn support_projector(h: &Hermitian) -> CMatrix {
    let e = hermitian_eig(h);
    let scale = e.values.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
    e.projector_where(|x| x.abs() > RANK_TOL * scale)
}

/// Rank of a projector-like operator: number of eigenvalues above one half.
pub fn projector_rank(p: &CMatrix) -> usize {
    let e = hermitian_eig(&Hermitian::from_hermitian_part(p));
    e.values.iter().filter(|&&x| x > 0.5).count()
}

fn check_projector(p: &CMatrix) -> Result<(), LinalgError> {
    let defect = p.hermiticity_defect();
    if defect > 1e-9 {
        return Err(LinalgError::NotProjector { defect });
    }
    let defect = (p * p).distance(p);
    if defect > 1e-9 {
        return Err(LinalgError::NotProjector { defect });
    }
    Ok(())
}

/// Projector onto `range(p) ∩ range(q)`, read off the eigenvalue-2
/// eigenspace of `p + q`.
pub fn subspace_intersection(p: &CMatrix, q: &CMatrix) -> Result<CMatrix, LinalgError> {
    if p.rows != q.rows || !p.is_square() || !q.is_square() {
        return Err(LinalgError::DimensionMismatch(
            "projectors must be square and of equal size".into(),
        ));
    }
    check_projector(p)?;
    check_projector(q)?;
    let sum = Hermitian::from_hermitian_part(&(p + q));
    Ok(eigenspace_projector(&sum, 2.0, RANK_TOL))
}

/// Orthonormal basis (as columns) of the range of a projector, obtained by
/// Gram–Schmidt over the projected canonical basis vectors in order.
pub fn range_basis(p: &CMatrix) -> Vec<Vec<C64>> {
    let d = p.rows;
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for k in 0..d {
        let mut v = p.column(k);
        for b in &basis {
            let ov = inner(b, &v);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= ov * bi;
            }
        }
        // second pass for numerical orthogonality
        for b in &basis {
            let ov = inner(b, &v);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= ov * bi;
            }
        }
        let n = norm(&v);
        if n > 1e-6 {
            basis.push(v.iter().map(|z| z / n).collect());
        }
    }
    basis
}

/// Matrix whose columns are the given vectors.
pub fn columns_to_matrix(rows: usize, cols: &[Vec<C64>]) -> CMatrix {
    CMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

/// Universal NOT on a qubit, `X ↦ tr(X)·I − X`.
pub fn universal_not_matrix(x: &CMatrix) -> Result<CMatrix, LinalgError> {
    if x.rows != 2 || x.cols != 2 {
        return Err(LinalgError::DimensionMismatch(format!(
            "universal NOT is defined on qubit operators, got {}x{}",
            x.rows, x.cols
        )));
    }
    Ok(&CMatrix::identity(2).scale(x.trace()) - x)
}
