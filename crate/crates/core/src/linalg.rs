//! Dense complex matrix kernel.
//!
//! [`SquareMatrix`] is the working representation for unitaries, Hermitian
//! generators and gates. Spectral routines are restricted to the normal
//! matrices the compiler actually needs: unitaries (through a complex Schur
//! form, which is diagonal for normal input) and Hermitian matrices.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use nalgebra::linalg::{Schur, SymmetricEigen};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

const SCHUR_EPS: f64 = 1e-15;
const MAX_SWEEPS: usize = 100_000;
const RELAXED_SCHUR_EPS: f64 = 1e-13;

/// Tolerances for the input checks of the spectral routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Bound on ‖U†U − I‖_F accepted as unitary.
    pub unitary: f64,
    /// Bound on ‖H − H†‖_F accepted as Hermitian.
    pub hermitian: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            unitary: 1e-10,
            hermitian: 1e-10,
        }
    }
}

/// Dense `dim × dim` complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl SquareMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major entries; the length must be a perfect square.
    pub fn from_vec(data: Vec<C64>) -> Result<Self> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim == 0 || dim * dim != data.len() {
            return Err(Error::InvalidDimension(data.len()));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<const N: usize>(rows: [[C64; N]; N]) -> Self {
        Self {
            dim: N,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn diagonal(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, v) in values.iter().enumerate() {
            m.data[i * values.len() + i] = *v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        check_dims(self, other)?;
        Ok(Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ‖U†U − I‖_F.
    pub fn unitarity_deviation(&self) -> f64 {
        let gram = multiply_unchecked(&self.adjoint(), self);
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let expected = if i == j { ONE } else { ZERO };
                acc += (gram[(i, j)] - expected).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// ‖H − H†‖_F.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    /// Integer matrix power by repeated squaring.
    pub fn pow(&self, mut exponent: u64) -> Self {
        let mut result = Self::identity(self.dim);
        let mut base = self.clone();
        while exponent > 0 {
            if exponent & 1 == 1 {
                result = multiply_unchecked(&result, &base);
            }
            exponent >>= 1;
            if exponent > 0 {
                base = multiply_unchecked(&base, &base);
            }
        }
        result
    }

    fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self[(i, j)])
    }

    fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        Self::from_fn(m.nrows(), |i, j| m[(i, j)])
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for SquareMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl fmt::Debug for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SquareMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl Mul for &SquareMatrix {
    type Output = SquareMatrix;

    /// Panics on dimension mismatch; use [`multiply`] for a fallible product.
    fn mul(self, rhs: &SquareMatrix) -> SquareMatrix {
        multiply(self, rhs).expect("matrix dimensions must agree")
    }
}

fn check_dims(a: &SquareMatrix, b: &SquareMatrix) -> Result<()> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            left: a.dim,
            right: b.dim,
        });
    }
    Ok(())
}

fn multiply_unchecked(a: &SquareMatrix, b: &SquareMatrix) -> SquareMatrix {
    let n = a.dim;
    let mut out = SquareMatrix::zeros(n);
    for i in 0..n {
        let row = &a.data[i * n..(i + 1) * n];
        let out_row = &mut out.data[i * n..(i + 1) * n];
        for (k, aik) in row.iter().enumerate() {
            if *aik == ZERO {
                continue;
            }
            let b_row = &b.data[k * n..(k + 1) * n];
            for (o, bkj) in out_row.iter_mut().zip(b_row) {
                *o += aik * bkj;
            }
        }
    }
    out
}

/// Matrix product `a · b`.
pub fn multiply(a: &SquareMatrix, b: &SquareMatrix) -> Result<SquareMatrix> {
    check_dims(a, b)?;
    Ok(multiply_unchecked(a, b))
}

/// Tensor product `a ⊗ b`; the first factor indexes the most significant block.
pub fn kron(a: &SquareMatrix, b: &SquareMatrix) -> SquareMatrix {
    let (m, n) = (a.dim, b.dim);
    SquareMatrix::from_fn(m * n, |i, j| a[(i / n, j / n)] * b[(i % n, j % n)])
}

fn require_unitary(u: &SquareMatrix, tol: f64) -> Result<()> {
    let deviation = u.unitarity_deviation();
    if deviation > tol {
        return Err(Error::NotUnitary {
            deviation,
            tolerance: tol,
        });
    }
    Ok(())
}

fn require_hermitian(h: &SquareMatrix, tol: f64) -> Result<()> {
    let deviation = h.hermiticity_deviation();
    if deviation > tol {
        return Err(Error::NotHermitian {
            deviation,
            tolerance: tol,
        });
    }
    Ok(())
}

/// Maps an angle into (−π, π].
pub fn wrap_phase(theta: f64) -> f64 {
    let mut t = theta % (2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    } else if t <= -PI {
        t += 2.0 * PI;
    }
    t
}

/// Complex Schur factors `(Q, T)` with `m = Q T Q†`.
///
/// The QR sweep can fail to deflate a nearly scalar matrix (every eigenvalue
/// in one tight cluster). Subtracting the mean eigenvalue `tr(m)/N` puts the
/// cluster at the origin, where the relative deflation test works again.
fn schur(m: &SquareMatrix) -> Result<(SquareMatrix, SquareMatrix)> {
    let attempt = |shift: C64, eps: f64| {
        let mut a = m.to_nalgebra();
        for i in 0..m.dim {
            a[(i, i)] -= shift;
        }
        Schur::try_new(a, eps, MAX_SWEEPS).map(|d| {
            let (q, t) = d.unpack();
            let mut t = SquareMatrix::from_nalgebra(&t);
            for i in 0..m.dim {
                t[(i, i)] += shift;
            }
            (SquareMatrix::from_nalgebra(&q), t)
        })
    };
    let mean = m.trace() / m.dim as f64;
    attempt(ZERO, SCHUR_EPS)
        .or_else(|| attempt(mean, SCHUR_EPS))
        .or_else(|| attempt(mean, RELAXED_SCHUR_EPS))
        .ok_or(Error::NoConvergence)
}

/// Eigenvalues of an arbitrary square matrix.
pub fn eigenvalues(m: &SquareMatrix) -> Result<Vec<C64>> {
    let (_, t) = schur(m)?;
    Ok((0..m.dim).map(|i| t[(i, i)]).collect())
}

/// Spectral decomposition of a unitary: `u = V diag(e^{iθ}) V†` with θ in (−π, π].
pub fn eig_unitary(u: &SquareMatrix) -> Result<(Vec<f64>, SquareMatrix)> {
    eig_unitary_tol(u, &Tolerances::default())
}

pub fn eig_unitary_tol(u: &SquareMatrix, tol: &Tolerances) -> Result<(Vec<f64>, SquareMatrix)> {
    require_unitary(u, tol.unitary)?;
    let (q, t) = schur(u)?;
    // An eigenvalue on the negative real axis lands on +π whatever the sign of
    // the rounding residue in its imaginary part.
    let phases = (0..u.dim)
        .map(|i| {
            let z = t[(i, i)];
            if z.re < 0.0 && z.im.abs() <= 4.0 * f64::EPSILON {
                PI
            } else {
                wrap_phase(z.arg())
            }
        })
        .collect();
    Ok((phases, q))
}

/// Hermitian eigendecomposition: real eigenvalues and a unitary eigenvector matrix.
pub fn eigh(h: &SquareMatrix) -> Result<(Vec<f64>, SquareMatrix)> {
    eigh_tol(h, &Tolerances::default())
}

pub fn eigh_tol(h: &SquareMatrix, tol: &Tolerances) -> Result<(Vec<f64>, SquareMatrix)> {
    require_hermitian(h, tol.hermitian)?;
    let decomposition = SymmetricEigen::try_new(h.to_nalgebra(), SCHUR_EPS, MAX_SWEEPS)
        .ok_or(Error::NoConvergence)?;
    Ok((
        decomposition.eigenvalues.iter().copied().collect(),
        SquareMatrix::from_nalgebra(&decomposition.eigenvectors),
    ))
}

/// `V diag(values) V†`.
fn spectral_compose(vectors: &SquareMatrix, values: &[C64]) -> SquareMatrix {
    let n = vectors.dim;
    SquareMatrix::from_fn(n, |i, j| {
        (0..n)
            .map(|k| vectors[(i, k)] * values[k] * vectors[(j, k)].conj())
            .sum()
    })
}

/// `e^{i·scale·H}` for Hermitian `H`.
pub fn expm_hermitian(h: &SquareMatrix, scale: f64) -> Result<SquareMatrix> {
    expm_hermitian_tol(h, scale, &Tolerances::default())
}

pub fn expm_hermitian_tol(h: &SquareMatrix, scale: f64, tol: &Tolerances) -> Result<SquareMatrix> {
    let (values, vectors) = eigh_tol(h, tol)?;
    let phases: Vec<C64> = values
        .iter()
        .map(|lambda| C64::from_polar(1.0, scale * lambda))
        .collect();
    Ok(spectral_compose(&vectors, &phases))
}

/// Principal generator `H` with `u = e^{iH}` and spectrum in (−π, π].
pub fn logm_unitary(u: &SquareMatrix) -> Result<SquareMatrix> {
    logm_unitary_tol(u, &Tolerances::default())
}

pub fn logm_unitary_tol(u: &SquareMatrix, tol: &Tolerances) -> Result<SquareMatrix> {
    let (phases, vectors) = eig_unitary_tol(u, tol)?;
    let values: Vec<C64> = phases.iter().map(|t| C64::new(*t, 0.0)).collect();
    let h = spectral_compose(&vectors, &values);
    // Exact Hermitian symmetry.
    Ok(SquareMatrix::from_fn(h.dim, |i, j| {
        (h[(i, j)] + h[(j, i)].conj()) * 0.5
    }))
}

/// Coefficients of the monic characteristic polynomial
/// `x^N + λ_{N−1} x^{N−1} + … + λ_1 x + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharPolyCoeffs {
    /// `lambdas[j - 1]` is the coefficient of `x^j`, for `j = 1..N-1`.
    pub lambdas: Vec<C64>,
    pub constant: C64,
}

impl CharPolyCoeffs {
    pub fn dim(&self) -> usize {
        self.lambdas.len() + 1
    }

    /// All coefficients from degree 0 to degree N (the leading 1 included).
    pub fn full(&self) -> Vec<C64> {
        let mut all = Vec::with_capacity(self.dim() + 1);
        all.push(self.constant);
        all.extend_from_slice(&self.lambdas);
        all.push(ONE);
        all
    }

    /// Horner evaluation at `x`.
    pub fn eval(&self, x: C64) -> C64 {
        self.full().iter().rev().fold(ZERO, |acc, c| acc * x + c)
    }

    /// Phase χ of the constant term.
    pub fn chi(&self) -> f64 {
        self.constant.arg()
    }
}

/// Expands `∏ (x − μ_k)` incrementally; returns coefficients from degree 0 up.
pub fn poly_from_roots(roots: &[C64]) -> Vec<C64> {
    let mut coeffs = vec![ONE];
    for mu in roots {
        let mut next = vec![ZERO; coeffs.len() + 1];
        for (k, c) in coeffs.iter().enumerate() {
            next[k + 1] += c;
            next[k] -= mu * c;
        }
        coeffs = next;
    }
    coeffs
}

/// Characteristic polynomial from the eigenvalues (Vieta expansion).
pub fn char_poly_coeffs(u: &SquareMatrix) -> Result<CharPolyCoeffs> {
    if u.dim < 2 {
        return Err(Error::InvalidDimension(u.dim));
    }
    let coeffs = poly_from_roots(&eigenvalues(u)?);
    Ok(CharPolyCoeffs {
        constant: coeffs[0],
        lambdas: coeffs[1..u.dim].to_vec(),
    })
}

fn ginibre(dim: usize, rng: &mut ChaCha8Rng) -> SquareMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    SquareMatrix::from_fn(dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    })
}

/// Haar-distributed unitary: Ginibre draw, Gram-Schmidt QR with a positive
/// real diagonal in R (the phase correction), deterministic in `seed`.
pub fn haar_random(dim: usize, seed: u64) -> Result<SquareMatrix> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = ginibre(dim, &mut rng);
    let mut columns: Vec<Vec<C64>> = (0..dim)
        .map(|j| (0..dim).map(|i| z[(i, j)]).collect())
        .collect();
    for j in 0..dim {
        let (done, rest) = columns.split_at_mut(j);
        let v = &mut rest[0];
        // Two passes of modified Gram-Schmidt keep orthogonality at rounding level.
        for _ in 0..2 {
            for q in done.iter() {
                let overlap: C64 = q.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= overlap * qi;
                }
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for vi in v.iter_mut() {
            *vi /= norm;
        }
    }
    Ok(SquareMatrix::from_fn(dim, |i, j| columns[j][i]))
}

/// Random Hermitian matrix (GUE shape) rescaled to spectral norm `norm`.
pub fn random_hermitian(dim: usize, norm: f64, seed: u64) -> Result<SquareMatrix> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    if !(norm > 0.0) {
        return Err(Error::InvalidConfig(format!("norm must be positive, got {norm}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = SquareMatrix::zeros(dim);
    for i in 0..dim {
        let d: f64 = rng.sample(StandardNormal);
        h[(i, i)] = C64::new(d, 0.0);
        for j in i + 1..dim {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let z = C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    let (values, _) = eigh(&h)?;
    let spectral = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(h.scale(C64::new(norm / spectral, 0.0)))
}

/// Largest absolute eigenvalue of a Hermitian matrix.
pub fn spectral_norm_hermitian(h: &SquareMatrix) -> Result<f64> {
    let (values, _) = eigh(h)?;
    Ok(values.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
}
