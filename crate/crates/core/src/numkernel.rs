//! Dense complex linear algebra used by every other module: products,
//! Kronecker products, adjoints, traces, partial traces, matrix
//! exponentials and Hermitian eigendecomposition.
//!
//! Matrices are stored row-major. Superoperator code elsewhere relies on
//! the column-stacking convention `vec(A X B) = (Bᵀ ⊗ A) vec(X)`, fixed
//! repo-wide; see [`ComplexMatrix::vec_columns`].

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Tolerance below which accumulated floating arithmetic still counts as
/// Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Dense complex matrix, row-major.
///
/// Kets are `n x 1` matrices; operators, projectors and superoperator
/// matrices are square.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self { rows, cols, data: vec![C_ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C_ONE;
        }
        m
    }

    /// Build from row-major entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimMismatch(format!(
                "{} entries for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("matrix entries".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Build from real row-major entries.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, data.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Column ket from amplitudes.
    pub fn ket(amplitudes: &[Complex64]) -> Self {
        Self { rows: amplitudes.len(), cols: 1, data: amplitudes.to_vec() }
    }

    /// Computational basis ket `|index⟩` in dimension `dim`.
    pub fn basis_ket(dim: usize, index: usize) -> Self {
        assert!(index < dim);
        let mut m = Self::zeros(dim, 1);
        m[(index, 0)] = C_ONE;
        m
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

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "product dims {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == C_ZERO {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let data = self.data.iter().map(|a| a * s).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self.data[i * self.cols + j].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn conj(&self) -> Self {
        let data = self.data.iter().map(|z| z.conj()).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self.data[i * self.cols + i]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max-row-sum 1-norm (used to pick the matexp scaling).
    pub fn one_norm(&self) -> f64 {
        let mut best: f64 = 0.0;
        for j in 0..self.cols {
            let s: f64 = (0..self.rows).map(|i| self.data[i * self.cols + j].norm()).sum();
            best = best.max(s);
        }
        best
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        self.sub(&self.adjoint()).frobenius_norm()
    }

    /// Squared 2-norm of a ket (sum of |amplitude|²).
    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Inner product `⟨self|other⟩` of two kets.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.cols, 1);
        assert_eq!(other.cols, 1);
        assert_eq!(self.rows, other.rows);
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    /// Outer product `|self⟩⟨other|`.
    pub fn outer(&self, other: &Self) -> Self {
        assert_eq!(self.cols, 1);
        assert_eq!(other.cols, 1);
        let mut out = Self::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            for j in 0..other.rows {
                out[(i, j)] = self.data[i] * other.data[j].conj();
            }
        }
        out
    }

    /// Column-stacking vectorisation: `vec(X)[j*rows + i] = X[i, j]`.
    pub fn vec_columns(&self) -> Vec<Complex64> {
        let mut v = Vec::with_capacity(self.rows * self.cols);
        for j in 0..self.cols {
            for i in 0..self.rows {
                v.push(self.data[i * self.cols + j]);
            }
        }
        v
    }

    /// Inverse of [`Self::vec_columns`] for a square matrix of dimension `d`.
    pub fn from_vec_columns(v: &[Complex64], d: usize) -> Self {
        assert_eq!(v.len(), d * d);
        let mut m = Self::zeros(d, d);
        for j in 0..d {
            for i in 0..d {
                m[(i, j)] = v[j * d + i];
            }
        }
        m
    }

    /// Entrywise max-abs difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(a.rows() * b.rows(), a.cols() * b.cols());
    for ia in 0..a.rows() {
        for ja in 0..a.cols() {
            let f = a[(ia, ja)];
            if f == C_ZERO {
                continue;
            }
            for ib in 0..b.rows() {
                for jb in 0..b.cols() {
                    out[(ia * b.rows() + ib, ja * b.cols() + jb)] = f * b[(ib, jb)];
                }
            }
        }
    }
    out
}

/// Kronecker product of a list, left to right.
pub fn kron_all(ops: &[&ComplexMatrix]) -> ComplexMatrix {
    assert!(!ops.is_empty());
    let mut out = ops[0].clone();
    for op in &ops[1..] {
        out = kron(&out, op);
    }
    out
}

// Padé(13) numerator/denominator coefficients for the exponential.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 4.25;

/// Matrix exponential `exp(scale · m)` by scaling-and-squaring with a
/// Padé(13) kernel.
pub fn matexp(m: &ComplexMatrix, scale: f64) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    let n = m.rows();
    let a0 = m.scale_re(scale);
    let norm = a0.one_norm();
    if !norm.is_finite() {
        return Err(Error::NonFinite("matexp input".into()));
    }
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as u32
    } else {
        0
    };
    let a = a0.scale_re(0.5f64.powi(squarings as i32));

    let id = ComplexMatrix::identity(n);
    let a2 = a.mul(&a);
    let a4 = a2.mul(&a2);
    let a6 = a2.mul(&a4);
    let b = &PADE13;
    let u_inner = a6
        .scale_re(b[13])
        .add(&a4.scale_re(b[11]))
        .add(&a2.scale_re(b[9]));
    let u = a.mul(
        &a6.mul(&u_inner)
            .add(&a6.scale_re(b[7]))
            .add(&a4.scale_re(b[5]))
            .add(&a2.scale_re(b[3]))
            .add(&id.scale_re(b[1])),
    );
    let v_inner = a6
        .scale_re(b[12])
        .add(&a4.scale_re(b[10]))
        .add(&a2.scale_re(b[8]));
    let v = a6
        .mul(&v_inner)
        .add(&a6.scale_re(b[6]))
        .add(&a4.scale_re(b[4]))
        .add(&a2.scale_re(b[2]))
        .add(&id.scale_re(b[0]));

    // exp(A) ≈ (V - U)^{-1} (V + U)
    let mut r = solve(&v.sub(&u), &v.add(&u))?;
    for _ in 0..squarings {
        r = r.mul(&r);
    }
    Ok(r)
}

/// Solve `A X = B` by LU with partial pivoting.
pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    let n = a.rows();
    assert_eq!(b.rows(), n);
    let mut lu = a.clone();
    let mut x = b.clone();
    for k in 0..n {
        let mut pivot = k;
        let mut best = lu[(k, k)].norm();
        for i in k + 1..n {
            let v = lu[(i, k)].norm();
            if v > best {
                best = v;
                pivot = i;
            }
        }
        if best == 0.0 {
            return Err(Error::NonFinite("singular matrix in solve".into()));
        }
        if pivot != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(pivot, j)];
                lu[(pivot, j)] = tmp;
            }
            for j in 0..x.cols() {
                let tmp = x[(k, j)];
                x[(k, j)] = x[(pivot, j)];
                x[(pivot, j)] = tmp;
            }
        }
        let d = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / d;
            lu[(i, k)] = f;
            for j in k + 1..n {
                let s = lu[(k, j)];
                lu[(i, j)] -= f * s;
            }
            for j in 0..x.cols() {
                let s = x[(k, j)];
                x[(i, j)] -= f * s;
            }
        }
    }
    // back substitution
    for j in 0..x.cols() {
        for i in (0..n).rev() {
            let mut s = x[(i, j)];
            for k in i + 1..n {
                s -= lu[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = s / lu[(i, i)];
        }
    }
    Ok(x)
}

/// Partial trace over the subsystems *not* in `keep`.
///
/// `dims` are the per-subsystem dimensions (leftmost tensor factor first);
/// the result is ordered by the kept subsystems in their original order.
pub fn partial_trace(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    let total: usize = dims.iter().product();
    if total != m.rows() {
        return Err(Error::DimMismatch(format!(
            "subsystem dims product {} vs matrix dim {}",
            total,
            m.rows()
        )));
    }
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::DimMismatch("keep index out of range".into()));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
    let keep_dim: usize = keep.iter().map(|&k| dims[k]).product();
    let traced_dim: usize = traced.iter().map(|&k| dims[k]).product();

    // strides of each subsystem in the flat index (row-major, leftmost first)
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let flat = |subs: &[usize], multi: &[usize]| -> usize {
        subs.iter().zip(multi).map(|(&s, &ix)| strides[s] * ix).sum()
    };
    let unrank = |subsystems: &[usize], mut r: usize| -> Vec<usize> {
        let mut out = vec![0; subsystems.len()];
        for (slot, &s) in subsystems.iter().enumerate().rev() {
            out[slot] = r % dims[s];
            r /= dims[s];
        }
        out
    };

    let mut out = ComplexMatrix::zeros(keep_dim, keep_dim);
    for ik in 0..keep_dim {
        let mi = unrank(&keep, ik);
        for jk in 0..keep_dim {
            let mj = unrank(&keep, jk);
            let mut acc = C_ZERO;
            for t in 0..traced_dim {
                let mt = unrank(&traced, t);
                let row = flat(&keep, &mi) + flat(&traced, &mt);
                let col = flat(&keep, &mj) + flat(&traced, &mt);
                acc += m[(row, col)];
            }
            out[(ik, jk)] = acc;
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Ascending eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as matrix columns, matching `eigenvalues`.
    pub eigenvectors: ComplexMatrix,
}

/// Eigendecomposition by cyclic complex Jacobi rotations.
///
/// Rejects inputs farther than [`HERMITICITY_TOL`] from Hermitian and works
/// on the Hermitized average `(m + m†)/2`.
pub fn herm_eig(m: &ComplexMatrix) -> Result<HermitianEig> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    let dev = m.hermiticity_deviation();
    if dev > HERMITICITY_TOL {
        return Err(Error::NotHermitian { dev, tol: HERMITICITY_TOL });
    }
    let n = m.rows();
    let mut a = m.add(&m.adjoint()).scale_re(0.5);
    let mut v = ComplexMatrix::identity(n);

    let off = |a: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        if off(&a) <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.norm() <= 1e-300 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // complex rotation: phase e^{iθ} = apq/|apq|, then a real
                // 2x2 Jacobi angle on the magnitudes
                let phase = apq / apq.norm();
                let tau = (aqq - app) / (2.0 * apq.norm());
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let sp = phase * s;
                // rows/cols p and q update: A ← J† A J with
                // J[(p,p)]=c, J[(p,q)]=s·phase, J[(q,p)]=-s·conj(phase)·? ...
                // column update first
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * c - aiq * sp.conj();
                    a[(i, q)] = aip * sp + aiq * c;
                }
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = apj * c - aqj * sp;
                    a[(q, j)] = apj * sp.conj() + aqj * c;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * c - viq * sp.conj();
                    v[(i, q)] = vip * sp + viq * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for i in 0..n {
            eigenvectors[(i, new_col)] = v[(i, old_col)];
        }
    }
    Ok(HermitianEig { eigenvalues, eigenvectors })
}

impl HermitianEig {
    /// `V diag(λ) V†`, for reconstruction checks.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let mut d = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            d[(i, i)] = Complex64::new(self.eigenvalues[i], 0.0);
        }
        self.eigenvectors.mul(&d).mul(&self.eigenvectors.adjoint())
    }
}

/// Serialize in the matrix text format: first line `rows cols`, then one
/// line per row of whitespace-separated `re,im` tokens.
pub fn write_matrix_text(m: &ComplexMatrix) -> String {
    let mut out = format!("{} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        let mut row = Vec::with_capacity(m.cols());
        for j in 0..m.cols() {
            let z = m[(i, j)];
            row.push(format!("{},{}", z.re, z.im));
        }
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Parse the matrix text format produced by [`write_matrix_text`].
pub fn parse_matrix_text(text: &str) -> Result<ComplexMatrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::MatrixFormat("empty input".into()))?;
    let mut it = header.split_whitespace();
    let rows: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::MatrixFormat("bad row count".into()))?;
    let cols: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::MatrixFormat("bad column count".into()))?;
    if rows == 0 || cols == 0 {
        return Err(Error::MatrixFormat("zero dimension".into()));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for (i, line) in lines.enumerate() {
        if i >= rows {
            return Err(Error::MatrixFormat(format!("more than {} rows", rows)));
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != cols {
            return Err(Error::MatrixFormat(format!(
                "row {} has {} entries, expected {}",
                i + 1,
                tokens.len(),
                cols
            )));
        }
        for tok in tokens {
            let (re, im) = tok
                .split_once(',')
                .ok_or_else(|| Error::MatrixFormat(format!("token `{}` is not re,im", tok)))?;
            let re: f64 = re
                .parse()
                .map_err(|_| Error::MatrixFormat(format!("bad real part `{}`", re)))?;
            let im: f64 = im
                .parse()
                .map_err(|_| Error::MatrixFormat(format!("bad imaginary part `{}`", im)))?;
            data.push(Complex64::new(re, im));
        }
    }
    if data.len() != rows * cols {
        return Err(Error::MatrixFormat(format!(
            "{} rows of data, expected {}",
            data.len() / cols,
            rows
        )));
    }
    ComplexMatrix::from_vec(rows, cols, data)
}

pub fn read_matrix_file(path: &std::path::Path) -> Result<ComplexMatrix> {
    parse_matrix_text(&std::fs::read_to_string(path)?)
}

/// Pauli matrices and friends, in the basis |0⟩ = (1,0)ᵀ, |1⟩ = (0,1)ᵀ.
pub mod gates {
    use super::{ComplexMatrix, Complex64};

    pub fn sigma_x() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    pub fn sigma_y() -> ComplexMatrix {
        ComplexMatrix::from_vec(
            2,
            2,
            vec![
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, 0.0),
            ],
        )
        .unwrap()
    }

    pub fn sigma_z() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap()
    }

    /// Lowering operator σ₋ = |0⟩⟨1|.
    pub fn sigma_minus() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap()
    }

    /// Raising operator σ₊ = |1⟩⟨0|.
    pub fn sigma_plus() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 0.0, 1.0, 0.0]).unwrap()
    }

    pub fn hadamard() -> ComplexMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        ComplexMatrix::from_real(2, 2, &[h, h, h, -h]).unwrap()
    }
}
