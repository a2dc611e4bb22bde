//! Commutative measurement algebras generated by mutually orthogonal
//! projectors.
//!
//! Families do not have to sum to the identity. The completeness defect
//! `||I - sum B_j||` is recorded at build time so that operations which need
//! a complete family (Born sampling, for one) can check it.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{Ket, Operator};
use crate::VALIDATION_TOL;

/// An ordered family of pairwise-orthogonal, self-adjoint projectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Operator>", into = "Vec<Operator>")]
pub struct ProjectorFamily {
    dim: usize,
    projectors: Vec<Operator>,
    completeness_defect: f64,
}

impl ProjectorFamily {
    /// Validates and builds a family.
    pub fn new(projectors: Vec<Operator>) -> Result<Self> {
        let dim = projectors.first().ok_or(Error::EmptyFamily)?.dim();
        for (index, b) in projectors.iter().enumerate() {
            if b.dim() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    found: b.dim(),
                });
            }
            let defect = b.projector_defect();
            if defect > VALIDATION_TOL {
                return Err(Error::NotProjector { index, defect });
            }
            if b.trace().re < 0.5 {
                // The zero projector has no branch to condition on.
                return Err(Error::NotProjector { index, defect: 1.0 });
            }
        }
        for first in 0..projectors.len() {
            for second in first + 1..projectors.len() {
                let overlap = (&projectors[first] * &projectors[second]).norm();
                if overlap > VALIDATION_TOL {
                    return Err(Error::NotOrthogonal {
                        first,
                        second,
                        overlap,
                    });
                }
            }
        }
        let mut sum = Operator::zeros(dim);
        for b in &projectors {
            sum = &sum + b;
        }
        let completeness_defect = (&Operator::identity(dim) - &sum).norm();
        Ok(Self {
            dim,
            projectors,
            completeness_defect,
        })
    }

    /// Rank-one projectors onto the computational basis of `C^dim`.
    pub fn computational_basis(dim: usize) -> Self {
        let projectors = (0..dim)
            .map(|i| {
                let mut diag = vec![0.0; dim];
                diag[i] = 1.0;
                Operator::from_real_diagonal(&diag)
            })
            .collect();
        Self::new(projectors).expect("basis projectors are valid")
    }

    /// Rank-one projectors `|psi_j><psi_j|` onto the given (normalized) kets.
    pub fn from_kets(kets: &[Ket]) -> Result<Self> {
        let projectors = kets
            .iter()
            .map(crate::operator::dyad)
            .collect::<Result<Vec<_>>>()?;
        Self::new(projectors)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn projectors(&self) -> &[Operator] {
        &self.projectors
    }

    pub fn projector(&self, index: usize) -> &Operator {
        &self.projectors[index]
    }

    /// `||I - sum_j B_j||`, zero iff the family resolves the identity.
    pub fn completeness_defect(&self) -> f64 {
        self.completeness_defect
    }

    pub fn is_complete(&self) -> bool {
        self.completeness_defect <= VALIDATION_TOL
    }

    pub fn require_complete(&self) -> Result<()> {
        if self.is_complete() {
            Ok(())
        } else {
            Err(Error::IncompleteFamily {
                defect: self.completeness_defect,
            })
        }
    }

    /// `B_S = sum_{j in S} B_j`.
    pub fn subset_sum(&self, subset: &[usize]) -> Operator {
        subset.iter().fold(Operator::zeros(self.dim), |acc, &j| {
            &acc + &self.projectors[j]
        })
    }

    fn check_coeffs(&self, len: usize) -> Result<()> {
        if len == self.len() {
            Ok(())
        } else {
            Err(Error::DimMismatch {
                expected: self.len(),
                found: len,
            })
        }
    }

    /// `sum_j c_j B_j`.
    pub fn synthesize(&self, coeffs: &[Complex64]) -> Result<Operator> {
        self.check_coeffs(coeffs.len())?;
        Ok(self
            .projectors
            .iter()
            .zip(coeffs)
            .fold(Operator::zeros(self.dim), |acc, (b, &c)| &acc + &b.scale(c)))
    }

    pub fn synthesize_real(&self, coeffs: &[f64]) -> Result<Operator> {
        let coeffs: Vec<_> = coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect();
        self.synthesize(&coeffs)
    }

    /// The pinching `sum_j B_j C B_j`.
    pub fn pinch(&self, c: &Operator) -> Result<Operator> {
        let mut out = Operator::zeros(self.dim);
        for b in &self.projectors {
            out = out.try_add(&(b * &c.try_mul(b)?))?;
        }
        Ok(out)
    }

    /// Recovers `c_j` with `C = sum_j c_j B_j`, or fails with the residual.
    pub fn decompose(&self, c: &Operator) -> Result<Vec<Complex64>> {
        let pinched = self.pinch(c)?;
        let residual = (c - &pinched).norm();
        if residual > VALIDATION_TOL {
            return Err(Error::NotInAlgebra { residual });
        }
        let mut coeffs = Vec::with_capacity(self.len());
        for b in &self.projectors {
            let block = b * &(c * b);
            let coeff = block.trace() / b.trace().re;
            let scalar_defect = (&block - &b.scale(coeff)).norm();
            if scalar_defect > VALIDATION_TOL {
                return Err(Error::NotInAlgebra {
                    residual: scalar_defect,
                });
            }
            coeffs.push(coeff);
        }
        Ok(coeffs)
    }

    pub fn element(&self, coeffs: Vec<Complex64>) -> Result<AlgebraElement<'_>> {
        self.check_coeffs(coeffs.len())?;
        Ok(AlgebraElement {
            family: self,
            coeffs,
        })
    }
}

impl TryFrom<Vec<Operator>> for ProjectorFamily {
    type Error = Error;
    fn try_from(projectors: Vec<Operator>) -> Result<Self> {
        ProjectorFamily::new(projectors)
    }
}

impl From<ProjectorFamily> for Vec<Operator> {
    fn from(fam: ProjectorFamily) -> Self {
        fam.projectors
    }
}

/// `C = sum_j c_j B_j` held in coefficient form.
#[derive(Debug, Clone)]
pub struct AlgebraElement<'a> {
    family: &'a ProjectorFamily,
    coeffs: Vec<Complex64>,
}

impl AlgebraElement<'_> {
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn family(&self) -> &ProjectorFamily {
        self.family
    }

    pub fn to_operator(&self) -> Operator {
        self.family
            .synthesize(&self.coeffs)
            .expect("coefficient count checked at construction")
    }

    /// Self-adjoint iff every coefficient is real within tolerance.
    pub fn is_self_adjoint(&self) -> bool {
        self.coeffs.iter().all(|c| c.im.abs() <= VALIDATION_TOL)
    }
}
