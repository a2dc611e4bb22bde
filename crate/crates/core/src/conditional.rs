//! Conditional expectation onto a measurement algebra, Lüders reduction and
//! residual diagnostics for the best-predictor property.
//!
//! For a projector family `{B_j}` and state `W`, the conditional expectation
//! of `A` is
//!
//! ```text
//! E_w[A|B] = sum_j  tr(W B_j A B_j) / tr(W B_j)  B_j
//! ```
//!
//! summed over branches with positive weight `tr(W B_j)`. Zero-weight
//! branches are masked with coefficient 0.
//!
//! The best-predictor argument (expand `(A - C)^2` around `E_w[A|B]` and drop
//! the cross terms) only goes through when those cross terms vanish, which
//! is guaranteed when `W` commutes with every `B_j`. For general `W` the
//! least-squares minimizer over the algebra differs from `E_w[A|B]`, so this
//! module measures the relevant residuals instead of assuming them away.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::ProjectorFamily;
use crate::error::{Error, Result};
use crate::operator::{DensityOperator, Operator};
use crate::VALIDATION_TOL;

fn check_dims(w: &DensityOperator, a: &Operator, fam: &ProjectorFamily) -> Result<()> {
    for found in [a.dim(), fam.dim()] {
        if found != w.dim() {
            return Err(Error::DimMismatch {
                expected: w.dim(),
                found,
            });
        }
    }
    Ok(())
}

/// Born weights `tr(W B_j)`.
pub fn branch_weights(w: &DensityOperator, fam: &ProjectorFamily) -> Result<Vec<f64>> {
    fam.projectors()
        .iter()
        .map(|b| w.expectation(b).map(|z| z.re))
        .collect()
}

fn require_all_weights(weights: &[f64]) -> Result<()> {
    if weights.iter().all(|&p| p <= VALIDATION_TOL) {
        return Err(Error::AllWeightsZero);
    }
    match weights.iter().position(|&p| p <= VALIDATION_TOL) {
        Some(index) => Err(Error::ZeroProbabilityBranch {
            index,
            weight: weights[index],
        }),
        None => Ok(()),
    }
}

/// Complex branch values `tr(W B_j A B_j) / tr(W B_j)` for arbitrary `A`.
fn branch_values(
    w: &DensityOperator,
    a: &Operator,
    fam: &ProjectorFamily,
) -> Result<(Vec<Complex64>, Vec<f64>, Vec<bool>)> {
    check_dims(w, a, fam)?;
    let weights = branch_weights(w, fam)?;
    let mask: Vec<bool> = weights.iter().map(|&p| p > VALIDATION_TOL).collect();
    if !mask.iter().any(|&m| m) {
        return Err(Error::AllWeightsZero);
    }
    let mut values = Vec::with_capacity(fam.len());
    for ((b, &p), &live) in fam.projectors().iter().zip(&weights).zip(&mask) {
        if live {
            let sandwiched = b * &(a * b);
            values.push(w.expectation(&sandwiched)? / p);
        } else {
            values.push(Complex64::new(0.0, 0.0));
        }
    }
    Ok((values, weights, mask))
}

/// `E_w[A|B]` in coefficient form over its projector family.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalExpectation {
    family: ProjectorFamily,
    coeffs: Vec<f64>,
    weights: Vec<f64>,
    mask: Vec<bool>,
}

impl ConditionalExpectation {
    pub fn family(&self) -> &ProjectorFamily {
        &self.family
    }

    /// `e_j = w(B_j A B_j) / w(B_j)`, zero on masked branches.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `w(B_j)` for every branch.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// True for branches with `w(B_j) > tol`.
    pub fn weight_mask(&self) -> &[bool] {
        &self.mask
    }

    /// `sum_j e_j B_j`.
    pub fn to_operator(&self) -> Operator {
        self.family
            .synthesize_real(&self.coeffs)
            .expect("one coefficient per projector")
    }
}

/// The conditional expectation of a self-adjoint `A` given the algebra
/// generated by `fam`.
pub fn conditional_expectation(
    w: &DensityOperator,
    a: &Operator,
    fam: &ProjectorFamily,
) -> Result<ConditionalExpectation> {
    check_dims(w, a, fam)?;
    a.require_self_adjoint()?;
    let (values, weights, mask) = branch_values(w, a, fam)?;
    Ok(ConditionalExpectation {
        family: fam.clone(),
        coeffs: values.iter().map(|z| z.re).collect(),
        weights,
        mask,
    })
}

/// Lüders reduction `B W B / tr(W B)`.
pub fn reduce_state(w: &DensityOperator, b: &Operator) -> Result<DensityOperator> {
    if b.dim() != w.dim() {
        return Err(Error::DimMismatch {
            expected: w.dim(),
            found: b.dim(),
        });
    }
    let defect = b.projector_defect();
    if defect > VALIDATION_TOL {
        return Err(Error::NotProjector { index: 0, defect });
    }
    let weight = w.expectation(b)?.re;
    if weight <= VALIDATION_TOL {
        return Err(Error::ZeroProbabilityBranch { index: 0, weight });
    }
    let reduced = (b * &(w.as_operator() * b)).scale_real(1.0 / weight);
    DensityOperator::new(reduced)
}

/// Expected value of `A` in the state reduced on branch `j`.
pub fn posterior_expectation(
    w: &DensityOperator,
    a: &Operator,
    fam: &ProjectorFamily,
    j: usize,
) -> Result<f64> {
    check_dims(w, a, fam)?;
    let reduced = reduce_state(w, fam.projector(j)).map_err(|e| match e {
        Error::ZeroProbabilityBranch { weight, .. } => {
            Error::ZeroProbabilityBranch { index: j, weight }
        }
        other => other,
    })?;
    Ok(reduced.expectation(a)?.re)
}

/// `sum_{j != k in S} tr(W B_j A B_k)`: the coherence that the conditional
/// expectation discards on the compound projector `B_S`.
pub fn cross_term(
    w: &DensityOperator,
    a: &Operator,
    fam: &ProjectorFamily,
    subset: &[usize],
) -> Result<Complex64> {
    check_dims(w, a, fam)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for &j in subset {
        for &k in subset {
            if j != k {
                let term = fam.projector(j) * &(a * fam.projector(k));
                acc += w.expectation(&term)?;
            }
        }
    }
    Ok(acc)
}

/// `|w(B_S E B_S) - w(B_S A B_S)|` with `B_S = sum_{j in S} B_j`.
///
/// Zero on singletons by construction; on compound subsets it equals the
/// modulus of [`cross_term`].
pub fn defining_property_residual(
    w: &DensityOperator,
    a: &Operator,
    fam: &ProjectorFamily,
    subset: &[usize],
) -> Result<f64> {
    if subset.is_empty() {
        return Err(Error::InvalidConfig(
            "subset of projectors must be non-empty".into(),
        ));
    }
    let ce = conditional_expectation(w, a, fam)?;
    let b_s = fam.subset_sum(subset);
    let e = ce.to_operator();
    let lhs = w.expectation(&(&b_s * &(&e * &b_s)))?;
    let rhs = w.expectation(&(&b_s * &(a * &b_s)))?;
    Ok((lhs - rhs).norm())
}

/// `max(||E[AC] - E[A] C||, ||E[CA] - C E[A]||)` for `C = sum c_j B_j`.
pub fn module_property_residual(
    w: &DensityOperator,
    a: &Operator,
    fam: &ProjectorFamily,
    coeffs: &[Complex64],
) -> Result<f64> {
    check_dims(w, a, fam)?;
    require_all_weights(&branch_weights(w, fam)?)?;
    let c = fam.synthesize(coeffs)?;
    let synth = |op: &Operator| -> Result<Operator> {
        let (values, _, _) = branch_values(w, op, fam)?;
        fam.synthesize(&values)
    };
    let e_a = synth(a)?;
    let right = (&synth(&(a * &c))? - &(&e_a * &c)).norm();
    let left = (&synth(&(&c * a))? - &(&c * &e_a)).norm();
    Ok(right.max(left))
}

/// `|w(E_w[A|B]) - w(A)|`, which equals `|sum_{j != k} tr(W B_j A B_k)|`
/// for a complete family.
pub fn projection_residual(
    w: &DensityOperator,
    a: &Operator,
    fam: &ProjectorFamily,
) -> Result<f64> {
    require_all_weights(&branch_weights(w, fam)?)?;
    let ce = conditional_expectation(w, a, fam)?;
    Ok((w.expectation(&ce.to_operator())? - w.expectation(a)?).norm())
}

/// The real coefficients minimising `tr(W (A - sum c_j B_j)^2)`.
///
/// Orthogonality of the family makes the quadratic diagonal:
/// `tr(W A^2) - 2 sum c_j Re tr(W A B_j) + sum c_j^2 tr(W B_j)`,
/// hence `c_j = Re tr(W A B_j) / tr(W B_j)`.
pub fn least_squares_coeffs(
    w: &DensityOperator,
    a: &Operator,
    fam: &ProjectorFamily,
) -> Result<Vec<f64>> {
    check_dims(w, a, fam)?;
    a.require_self_adjoint()?;
    let weights = branch_weights(w, fam)?;
    require_all_weights(&weights)?;
    fam.projectors()
        .iter()
        .zip(&weights)
        .map(|(b, &p)| Ok(w.expectation(&(a * b))?.re / p))
        .collect()
}

/// Mean squared prediction error `tr(W (A - C)^2)` with `C = sum c_j B_j`.
pub fn predictor_mse(
    w: &DensityOperator,
    a: &Operator,
    fam: &ProjectorFamily,
    coeffs: &[f64],
) -> Result<f64> {
    check_dims(w, a, fam)?;
    let diff = a.try_sub(&fam.synthesize_real(coeffs)?)?;
    Ok(w.expectation(&(&diff * &diff))?.re)
}

/// `|mse(c) - mse(e) - tr(W (E - C)^2)|` with `E` the conditional
/// expectation. Vanishes when `W` commutes with the family.
pub fn pythagoras_residual(
    w: &DensityOperator,
    a: &Operator,
    fam: &ProjectorFamily,
    coeffs: &[f64],
) -> Result<f64> {
    require_all_weights(&branch_weights(w, fam)?)?;
    let ce = conditional_expectation(w, a, fam)?;
    let e = ce.coeffs();
    let mse_c = predictor_mse(w, a, fam, coeffs)?;
    let mse_e = predictor_mse(w, a, fam, e)?;
    let gap = fam
        .synthesize_real(e)?
        .try_sub(&fam.synthesize_real(coeffs)?)?;
    let gap_sq = w.expectation(&(&gap * &gap))?.re;
    Ok((mse_c - mse_e - gap_sq).abs())
}

/// Side-by-side comparison of the conditional expectation and the
/// least-squares predictor over the same algebra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalityReport {
    pub conditional_coeffs: Vec<f64>,
    pub least_squares_coeffs: Vec<f64>,
    pub mse_conditional: f64,
    pub mse_ls: f64,
    pub projection_residual: f64,
    /// Evaluated at the least-squares coefficients.
    pub pythagoras_residual: f64,
}

pub fn optimality_report(
    w: &DensityOperator,
    a: &Operator,
    fam: &ProjectorFamily,
) -> Result<OptimalityReport> {
    let ce = conditional_expectation(w, a, fam)?;
    let ls = least_squares_coeffs(w, a, fam)?;
    Ok(OptimalityReport {
        mse_conditional: predictor_mse(w, a, fam, ce.coeffs())?,
        mse_ls: predictor_mse(w, a, fam, &ls)?,
        projection_residual: projection_residual(w, a, fam)?,
        pythagoras_residual: pythagoras_residual(w, a, fam, &ls)?,
        conditional_coeffs: ce.coeffs().to_vec(),
        least_squares_coeffs: ls,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::Ket;

    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn balanced() -> DensityOperator {
        DensityOperator::pure(&Ket::from_real(&[H, H]).unwrap()).unwrap()
    }

    fn hermitian_2x2(alpha: f64, beta: f64, gamma: Complex64) -> Operator {
        Operator::new(
            2,
            vec![
                Complex64::new(alpha, 0.0),
                gamma,
                gamma.conj(),
                Complex64::new(beta, 0.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn rank_one_family_gives_diagonal() {
        let fam = ProjectorFamily::computational_basis(3);
        let a = Operator::new(
            3,
            vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(0.5, 0.2),
                Complex64::new(0.0, -1.0),
                Complex64::new(0.5, -0.2),
                Complex64::new(-2.0, 0.0),
                Complex64::new(0.3, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.3, 0.0),
                Complex64::new(4.0, 0.0),
            ],
        )
        .unwrap();
        let psi = Ket::from_real(&[0.6, 0.0, 0.8])
            .unwrap()
            .add(&Ket::basis(3, 1).scale(Complex64::new(0.0, 0.5)))
            .unwrap()
            .normalized()
            .unwrap();
        let ce = conditional_expectation(&DensityOperator::pure(&psi).unwrap(), &a, &fam).unwrap();
        for (got, want) in ce.coeffs().iter().zip([1.0, -2.0, 4.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn sigma_x_has_zero_prediction() {
        let fam = ProjectorFamily::computational_basis(2);
        let ce = conditional_expectation(&balanced(), &Operator::pauli_x(), &fam).unwrap();
        assert_eq!(ce.coeffs(), &[0.0, 0.0]);
    }

    #[test]
    fn algebra_member_reproduces_itself() {
        let fam = ProjectorFamily::computational_basis(2);
        let w =
            DensityOperator::new(Operator::from_real(2, &[0.3, 0.1, 0.1, 0.7]).unwrap()).unwrap();
        let ce = conditional_expectation(&w, &Operator::pauli_z(), &fam).unwrap();
        assert!((ce.coeffs()[0] - 1.0).abs() < 1e-15);
        assert!((ce.coeffs()[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn masked_branch_and_all_zero() {
        let fam = ProjectorFamily::computational_basis(2);
        let up = DensityOperator::pure(&Ket::basis(2, 0)).unwrap();
        let ce = conditional_expectation(&up, &Operator::pauli_z(), &fam).unwrap();
        assert_eq!(ce.weight_mask(), &[true, false]);
        assert_eq!(ce.coeffs()[1], 0.0);

        let partial = ProjectorFamily::new(vec![fam.projector(1).clone()]).unwrap();
        assert_eq!(
            conditional_expectation(&up, &Operator::pauli_z(), &partial),
            Err(Error::AllWeightsZero)
        );
    }

    #[test]
    fn conditional_expectation_requires_self_adjoint() {
        let fam = ProjectorFamily::computational_basis(2);
        let a = Operator::from_real(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            conditional_expectation(&balanced(), &a, &fam),
            Err(Error::NotSelfAdjoint { .. })
        ));
    }

    #[test]
    fn reduce_state_examples() {
        let b0 = Operator::from_real_diagonal(&[1.0, 0.0]);
        let up = DensityOperator::pure(&Ket::basis(2, 0)).unwrap();

        let psi = Ket::new(vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)]).unwrap();
        let reduced = reduce_state(&DensityOperator::pure(&psi).unwrap(), &b0).unwrap();
        assert!((reduced.as_operator() - up.as_operator()).norm() < 1e-15);

        let w = DensityOperator::pure(&psi).unwrap();
        let same = reduce_state(&w, &Operator::identity(2)).unwrap();
        assert!((same.as_operator() - w.as_operator()).norm() < 1e-15);

        let mixed = reduce_state(&DensityOperator::maximally_mixed(2), &b0).unwrap();
        assert!((mixed.as_operator() - up.as_operator()).norm() < 1e-15);

        assert!(matches!(
            reduce_state(&up, &Operator::from_real_diagonal(&[0.0, 1.0])),
            Err(Error::ZeroProbabilityBranch { .. })
        ));
    }

    #[test]
    fn posterior_matches_coefficients() {
        let fam = ProjectorFamily::computational_basis(2);
        let a = hermitian_2x2(0.3, -1.2, Complex64::new(0.4, 0.9));
        let w = balanced();
        let ce = conditional_expectation(&w, &a, &fam).unwrap();
        for j in 0..2 {
            let post = posterior_expectation(&w, &a, &fam, j).unwrap();
            assert!((post - ce.coeffs()[j]).abs() < 1e-12);
        }
        let up = DensityOperator::pure(&Ket::basis(2, 0)).unwrap();
        assert!(matches!(
            posterior_expectation(&up, &a, &fam, 1),
            Err(Error::ZeroProbabilityBranch { index: 1, .. })
        ));
    }

    #[test]
    fn defining_property_singletons_and_compound() {
        let fam = ProjectorFamily::computational_basis(2);
        let w = balanced();
        let x = Operator::pauli_x();
        assert!(defining_property_residual(&w, &x, &fam, &[0]).unwrap() < 1e-12);
        assert!(defining_property_residual(&w, &x, &fam, &[1]).unwrap() < 1e-12);
        let compound = defining_property_residual(&w, &x, &fam, &[0, 1]).unwrap();
        assert!((compound - 1.0).abs() < 1e-12);
        let cross = cross_term(&w, &x, &fam, &[0, 1]).unwrap();
        assert!((cross.norm() - compound).abs() < 1e-12);
    }

    #[test]
    fn defining_property_holds_for_diagonal_state() {
        let fam = ProjectorFamily::computational_basis(3);
        let w = DensityOperator::new(Operator::from_real_diagonal(&[0.2, 0.5, 0.3])).unwrap();
        let a = Operator::from_real(3, &[1.0, 2.0, 3.0, 2.0, -1.0, 0.5, 3.0, 0.5, 0.0]).unwrap();
        for subset in [&[0, 1][..], &[1, 2], &[0, 2], &[0, 1, 2]] {
            assert!(defining_property_residual(&w, &a, &fam, subset).unwrap() < 1e-12);
        }
    }

    #[test]
    fn module_property_examples() {
        let fam = ProjectorFamily::computational_basis(2);
        let a = hermitian_2x2(0.3, -1.2, Complex64::new(0.4, 0.9));
        let w = balanced();
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        assert!(module_property_residual(&w, &a, &fam, &[zero, one]).unwrap() < 1e-12);
        assert!(module_property_residual(&w, &a, &fam, &[one, one]).unwrap() < 1e-12);
        let c = [Complex64::new(2.0, 0.5), Complex64::new(-0.7, 0.0)];
        assert!(module_property_residual(&w, &a, &fam, &c).unwrap() < 1e-12);
    }

    #[test]
    fn projection_residual_closed_form() {
        let fam = ProjectorFamily::computational_basis(2);
        let diag = DensityOperator::new(Operator::from_real_diagonal(&[0.4, 0.6])).unwrap();
        let a = hermitian_2x2(1.0, 2.0, Complex64::new(0.5, 0.0));
        assert!(projection_residual(&diag, &a, &fam).unwrap() < 1e-12);

        // |2 Re(conj(a) b gamma)| with a = b = 1/sqrt(2), gamma = 1/2.
        let r = projection_residual(&balanced(), &a, &fam).unwrap();
        assert!((r - 0.5).abs() < 1e-12);

        let member = Operator::from_real_diagonal(&[3.0, -1.0]);
        assert!(projection_residual(&balanced(), &member, &fam).unwrap() < 1e-12);
    }

    #[test]
    fn least_squares_closed_form() {
        let fam = ProjectorFamily::computational_basis(2);
        let (alpha, beta, gamma) = (0.7, -0.4, 0.25);
        let a = hermitian_2x2(alpha, beta, Complex64::new(gamma, 0.0));
        let ls = least_squares_coeffs(&balanced(), &a, &fam).unwrap();
        assert!((ls[0] - (alpha + gamma)).abs() < 1e-12);
        assert!((ls[1] - (beta + gamma)).abs() < 1e-12);
        let ce = conditional_expectation(&balanced(), &a, &fam).unwrap();
        assert!((ce.coeffs()[0] - alpha).abs() < 1e-12);
        assert!((ce.coeffs()[1] - beta).abs() < 1e-12);

        let member = Operator::from_real_diagonal(&[3.0, -1.0]);
        let ls = least_squares_coeffs(&balanced(), &member, &fam).unwrap();
        assert!((ls[0] - 3.0).abs() < 1e-12 && (ls[1] + 1.0).abs() < 1e-12);

        let diag = DensityOperator::new(Operator::from_real_diagonal(&[0.4, 0.6])).unwrap();
        let ls = least_squares_coeffs(&diag, &a, &fam).unwrap();
        let ce = conditional_expectation(&diag, &a, &fam).unwrap();
        for (x, y) in ls.iter().zip(ce.coeffs()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn predictor_mse_examples() {
        let fam = ProjectorFamily::computational_basis(2);
        let member = Operator::from_real_diagonal(&[3.0, -1.0]);
        assert!(
            predictor_mse(&balanced(), &member, &fam, &[3.0, -1.0])
                .unwrap()
                .abs()
                < 1e-15
        );
        let mse = predictor_mse(
            &DensityOperator::maximally_mixed(2),
            &Operator::pauli_x(),
            &fam,
            &[0.0, 0.0],
        )
        .unwrap();
        assert!((mse - 1.0).abs() < 1e-15);
        assert!(matches!(
            predictor_mse(&balanced(), &member, &fam, &[1.0]),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn pythagoras_examples() {
        let fam = ProjectorFamily::computational_basis(2);
        let w = balanced();
        let x = Operator::pauli_x();
        assert!((predictor_mse(&w, &x, &fam, &[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(pythagoras_residual(&w, &x, &fam, &[0.0, 0.0]).unwrap() < 1e-12);

        let member = Operator::from_real_diagonal(&[3.0, -1.0]);
        assert!(pythagoras_residual(&w, &member, &fam, &[0.5, 7.0]).unwrap() < 1e-12);

        // Off the commuting regime the identity generally fails.
        let a = hermitian_2x2(0.7, -0.4, Complex64::new(0.25, 0.0));
        assert!(pythagoras_residual(&w, &a, &fam, &[1.0, 1.0]).unwrap() > 1e-3);
    }

    #[test]
    fn report_orders_mse() {
        let fam = ProjectorFamily::computational_basis(2);
        let a = hermitian_2x2(0.7, -0.4, Complex64::new(0.25, 0.1));
        let report = optimality_report(&balanced(), &a, &fam).unwrap();
        assert!(report.mse_ls <= report.mse_conditional + 1e-12);
        assert!(report.mse_ls < report.mse_conditional);
        let text = serde_json::to_value(&report).unwrap();
        assert_eq!(text.as_object().unwrap().len(), 6);
    }
}
