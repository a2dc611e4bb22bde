//! Dense complex operators on small Hilbert spaces.
//!
//! Storage is row-major `Vec<Complex64>`. Spectral work (positivity checks,
//! operator norms) is delegated to `nalgebra`; everything else is plain
//! index arithmetic, which keeps identities like `tr(AB) = tr(BA)` exact
//! enough for the 1e-12 tolerances used throughout the crate.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{IDENTITY_TOL, VALIDATION_TOL};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

fn check_finite(entries: &[Complex64]) -> Result<()> {
    match entries
        .iter()
        .position(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        Some(idx) => Err(Error::NonFinite(idx)),
        None => Ok(()),
    }
}

/// Exchange format shared by kets and operators: a dimension plus a flat,
/// row-major list of `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixRepr {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixRepr {
    fn complex_entries(&self) -> Vec<Complex64> {
        self.entries
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect()
    }

    fn from_complex(dim: usize, entries: &[Complex64]) -> Self {
        Self {
            dim,
            entries: entries.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

/// A vector in `C^dim`. Norm is not constrained; see [`Ket::is_normalized`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct Ket {
    entries: Vec<Complex64>,
}

impl Ket {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::ZeroDimension);
        }
        check_finite(&entries)?;
        Ok(Self { entries })
    }

    pub fn from_real(entries: &[f64]) -> Result<Self> {
        Self::new(entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Computational basis vector `|index>`.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(
            index < dim,
            "basis index {index} out of range for dim {dim}"
        );
        let mut entries = vec![ZERO; dim];
        entries[index] = ONE;
        Self { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sq() - 1.0).abs() <= VALIDATION_TOL
    }

    fn require_normalized(&self) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::NotNormalized {
                norm_sq: self.norm_sq(),
            })
        }
    }

    /// Returns `self / ||self||`.
    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm_sq().sqrt();
        if norm == 0.0 {
            return Err(Error::NotNormalized { norm_sq: 0.0 });
        }
        Self::new(self.entries.iter().map(|z| z / norm).collect())
    }

    /// `<self, other>`, antilinear in the first slot.
    pub fn inner(&self, other: &Ket) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn scale(&self, factor: Complex64) -> Ket {
        Ket {
            entries: self.entries.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn add(&self, other: &Ket) -> Result<Ket> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(Ket {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Euclidean distance to `other`.
    pub fn distance(&self, other: &Ket) -> Result<f64> {
        let diff = self.add(&other.scale(-ONE))?;
        Ok(diff.norm_sq().sqrt())
    }
}

impl TryFrom<MatrixRepr> for Ket {
    type Error = Error;

    fn try_from(repr: MatrixRepr) -> Result<Self> {
        if repr.entries.len() != repr.dim {
            return Err(Error::DimMismatch {
                expected: repr.dim,
                found: repr.entries.len(),
            });
        }
        Ket::new(repr.complex_entries())
    }
}

impl From<Ket> for MatrixRepr {
    fn from(ket: Ket) -> Self {
        MatrixRepr::from_complex(ket.dim(), &ket.entries)
    }
}

/// A square complex matrix with finite entries.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct Operator {
    dim: usize,
    entries: Vec<Complex64>,
}

impl Operator {
    /// Builds an operator from row-major entries.
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if entries.len() != dim * dim {
            return Err(Error::DimMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        check_finite(&entries)?;
        Ok(Self { dim, entries })
    }

    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        Self::new(
            dim,
            entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut op = Self::zeros(dim);
        for i in 0..dim {
            op.entries[i * dim + i] = ONE;
        }
        op
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let mut op = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            op.entries[i * diag.len() + i] = d;
        }
        op
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let diag: Vec<_> = diag.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_diagonal(&diag)
    }

    /// `|u><v|`.
    pub fn outer(u: &Ket, v: &Ket) -> Result<Self> {
        if u.dim() != v.dim() {
            return Err(Error::DimMismatch {
                expected: u.dim(),
                found: v.dim(),
            });
        }
        let dim = u.dim();
        let mut entries = Vec::with_capacity(dim * dim);
        for a in u.entries() {
            for b in v.entries() {
                entries.push(a * b.conj());
            }
        }
        Ok(Self { dim, entries })
    }

    pub fn pauli_x() -> Self {
        Self::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    pub fn pauli_y() -> Self {
        Self::new(2, vec![ZERO, -I, I, ZERO]).unwrap()
    }

    pub fn pauli_z() -> Self {
        Self::from_real_diagonal(&[1.0, -1.0])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn adjoint(&self) -> Self {
        let dim = self.dim;
        let mut entries = vec![ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                entries[c * dim + r] = self.entries[r * dim + c].conj();
            }
        }
        Self { dim, entries }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    fn require_same_dim(&self, other: &Operator) -> Result<()> {
        if self.dim != other.dim {
            Err(Error::DimMismatch {
                expected: self.dim,
                found: other.dim,
            })
        } else {
            Ok(())
        }
    }

    pub fn try_add(&self, other: &Operator) -> Result<Self> {
        self.require_same_dim(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn try_sub(&self, other: &Operator) -> Result<Self> {
        self.require_same_dim(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    pub fn try_mul(&self, other: &Operator) -> Result<Self> {
        self.require_same_dim(other)?;
        Ok(self.matmul(other))
    }

    fn zip_with(&self, other: &Operator, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    fn matmul(&self, other: &Operator) -> Self {
        let dim = self.dim;
        let mut entries = vec![ZERO; dim * dim];
        for r in 0..dim {
            for k in 0..dim {
                let a = self.entries[r * dim + k];
                if a == ZERO {
                    continue;
                }
                let row = &other.entries[k * dim..(k + 1) * dim];
                for (out, b) in entries[r * dim..(r + 1) * dim].iter_mut().zip(row) {
                    *out += a * b;
                }
            }
        }
        Self { dim, entries }
    }

    /// `[A, B] = AB - BA`.
    pub fn commutator(&self, other: &Operator) -> Result<Self> {
        self.try_mul(other)?.try_sub(&other.matmul(self))
    }

    /// `tr(AB)` without forming the product.
    pub fn trace_product(&self, other: &Operator) -> Result<Complex64> {
        self.require_same_dim(other)?;
        let dim = self.dim;
        let mut acc = ZERO;
        for r in 0..dim {
            for c in 0..dim {
                acc += self.entries[r * dim + c] * other.entries[c * dim + r];
            }
        }
        Ok(acc)
    }

    pub fn apply(&self, ket: &Ket) -> Result<Ket> {
        if ket.dim() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                found: ket.dim(),
            });
        }
        let dim = self.dim;
        let entries = (0..dim)
            .map(|r| {
                self.entries[r * dim..(r + 1) * dim]
                    .iter()
                    .zip(ket.entries())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        Ok(Ket { entries })
    }

    /// `<psi, A psi>`.
    pub fn expectation_in(&self, psi: &Ket) -> Result<Complex64> {
        psi.inner(&self.apply(psi)?)
    }

    fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.entries)
    }

    /// Operator (spectral) norm: the largest singular value.
    pub fn norm(&self) -> f64 {
        if self.entries.iter().all(|z| *z == ZERO) {
            return 0.0;
        }
        self.to_nalgebra().singular_values().max()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `||A - A*||`.
    pub fn self_adjoint_defect(&self) -> f64 {
        self.try_sub(&self.adjoint())
            .map(|d| d.norm())
            .unwrap_or(f64::INFINITY)
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.self_adjoint_defect() <= tol
    }

    pub(crate) fn require_self_adjoint(&self) -> Result<()> {
        let defect = self.self_adjoint_defect();
        if defect <= VALIDATION_TOL {
            Ok(())
        } else {
            Err(Error::NotSelfAdjoint { defect })
        }
    }

    /// `max(||B* - B||, ||B^2 - B||)`; zero for an orthogonal projector.
    pub fn projector_defect(&self) -> f64 {
        let idem = self
            .matmul(self)
            .try_sub(self)
            .map(|d| d.norm())
            .unwrap_or(f64::INFINITY);
        idem.max(self.self_adjoint_defect())
    }

    /// Eigenvalues of the Hermitian part `(A + A*)/2`, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let herm = self.try_add(&self.adjoint()).unwrap().scale_real(0.5);
        let eig = nalgebra::SymmetricEigen::new(herm.to_nalgebra());
        let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Operator(dim={}) [", self.dim)?;
        for r in 0..self.dim {
            write!(f, "  ")?;
            for c in 0..self.dim {
                let z = self.get(r, c);
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl TryFrom<MatrixRepr> for Operator {
    type Error = Error;

    fn try_from(repr: MatrixRepr) -> Result<Self> {
        Operator::new(repr.dim, repr.complex_entries())
    }
}

impl From<Operator> for MatrixRepr {
    fn from(op: Operator) -> Self {
        MatrixRepr::from_complex(op.dim, &op.entries)
    }
}

// Operator arithmetic panics on dimension mismatch; use the `try_*` methods
// when dimensions are not already known to agree.
impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.try_add(rhs).expect("operator dimensions differ")
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.try_sub(rhs).expect("operator dimensions differ")
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.try_mul(rhs).expect("operator dimensions differ")
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(-ONE)
    }
}

/// A positive, self-adjoint, unit-trace operator.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(into = "MatrixRepr")]
pub struct DensityOperator {
    op: Operator,
}

impl DensityOperator {
    pub fn new(op: Operator) -> Result<Self> {
        op.require_self_adjoint()?;
        let trace = op.trace();
        if (trace.re - 1.0).abs() > VALIDATION_TOL || trace.im.abs() > VALIDATION_TOL {
            return Err(Error::NotUnitTrace { trace: trace.re });
        }
        let min_eigenvalue = op.hermitian_eigenvalues()[0];
        if min_eigenvalue < -VALIDATION_TOL {
            return Err(Error::NotPositive { min_eigenvalue });
        }
        Ok(Self { op })
    }

    /// The pure state `|psi><psi|`.
    pub fn pure(psi: &Ket) -> Result<Self> {
        Ok(Self { op: dyad(psi)? })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            op: Operator::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn as_operator(&self) -> &Operator {
        &self.op
    }

    pub fn into_operator(self) -> Operator {
        self.op
    }

    /// `w(A) = tr(WA)`.
    pub fn expectation(&self, a: &Operator) -> Result<Complex64> {
        self.op.trace_product(a)
    }

    pub fn purity(&self) -> f64 {
        self.op.trace_product(&self.op).unwrap().re
    }
}

impl From<DensityOperator> for MatrixRepr {
    fn from(w: DensityOperator) -> Self {
        w.op.into()
    }
}

impl<'de> Deserialize<'de> for DensityOperator {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let op = Operator::deserialize(deserializer)?;
        DensityOperator::new(op).map_err(serde::de::Error::custom)
    }
}

/// `|psi><psi|` for a normalized `psi`.
pub fn dyad(psi: &Ket) -> Result<Operator> {
    psi.require_normalized()?;
    Operator::outer(psi, psi)
}

/// `tr(WA)`.
pub fn expectation(w: &DensityOperator, a: &Operator) -> Result<Complex64> {
    w.expectation(a)
}

/// Kronecker product with the first factor as the most significant index.
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    let (da, db) = (a.dim(), b.dim());
    let dim = da * db;
    let mut entries = vec![ZERO; dim * dim];
    for i in 0..da {
        for j in 0..da {
            let aij = a.get(i, j);
            for k in 0..db {
                for l in 0..db {
                    entries[(i * db + k) * dim + j * db + l] = aij * b.get(k, l);
                }
            }
        }
    }
    Operator { dim, entries }
}

/// Kronecker product of kets, first factor most significant.
pub fn tensor_ket(u: &Ket, v: &Ket) -> Ket {
    let entries = u
        .entries()
        .iter()
        .flat_map(|a| v.entries().iter().map(move |b| a * b))
        .collect();
    Ket { entries }
}

/// Predicted squared measurement error `<psi, (A - <psi, A psi>)^2 psi>`.
pub fn variance(psi: &Ket, a: &Operator) -> Result<f64> {
    psi.require_normalized()?;
    a.require_self_adjoint()?;
    let mean = a.expectation_in(psi)?.re;
    let centred = a.try_sub(&Operator::identity(a.dim()).scale_real(mean))?;
    // For self-adjoint D, <psi, D^2 psi> = ||D psi||^2.
    Ok(centred.apply(psi)?.norm_sq())
}

/// `||A psi - <psi, A psi> psi||`; zero iff `psi` is an eigenvector of `A`.
pub fn eigen_residual(psi: &Ket, a: &Operator) -> Result<f64> {
    let mean = a.expectation_in(psi)?;
    let a_psi = a.apply(psi)?;
    a_psi.distance(&psi.scale(mean))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UncertaintyCheck {
    /// `sigma(A) sigma(B)`
    pub lhs: f64,
    /// `|<psi, C psi>| / 2` with `[A, B] = iC`
    pub rhs: f64,
    pub satisfied: bool,
}

/// Checks `sigma(A) sigma(B) >= |<psi, C psi>| / 2` where `C = -i[A, B]`.
pub fn uncertainty_check(psi: &Ket, a: &Operator, b: &Operator) -> Result<UncertaintyCheck> {
    let lhs = variance(psi, a)?.sqrt() * variance(psi, b)?.sqrt();
    let c = a.commutator(b)?.scale(-I);
    let rhs = 0.5 * c.expectation_in(psi)?.norm();
    Ok(UncertaintyCheck {
        lhs,
        rhs,
        satisfied: lhs >= rhs - IDENTITY_TOL,
    })
}
