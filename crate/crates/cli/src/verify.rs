use std::fmt::Write as _;

use qpredict_core::classical::{
    best_predictor_gap, defining_property_check, tower_check, zero_total_spin_probability,
};
use qpredict_core::conditional::{
    conditional_expectation, defining_property_residual, least_squares_coeffs,
    module_property_residual, projection_residual, pythagoras_residual,
};
use qpredict_core::operator::{dyad, uncertainty_check};
use qpredict_core::{random, Complex64, Error, Ket, Operator, ProjectorFamily, RandomVariable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::report::fmt12;
use crate::CliError;

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub dims: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub property: &'static str,
    pub dim: usize,
    pub residual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOutcome {
    pub results: Vec<PropertyResult>,
    pub transcript: String,
}

impl VerifyOutcome {
    pub fn first_failure(&self) -> Option<&PropertyResult> {
        self.results.iter().find(|r| !r.passed)
    }
}

type Suite = fn(&mut ChaCha8Rng, usize, usize) -> Result<f64, Error>;

const SUITES: [(&str, Suite); 6] = [
    ("pinching", pinching),
    ("defining-property", defining_property),
    ("module-property", module_property),
    ("commuting-regime", commuting_regime),
    ("uncertainty", uncertainty),
    ("classical-identities", classical_identities),
];

pub fn validate(opts: &VerifyOptions) -> Result<(), CliError> {
    if opts.dims.is_empty() {
        return Err(CliError::Input(
            "--dims must list at least one dimension".into(),
        ));
    }
    if let Some(d) = opts.dims.iter().find(|d| !(MIN_DIM..=MAX_DIM).contains(*d)) {
        return Err(CliError::Input(format!(
            "dimension {d} outside {MIN_DIM}..={MAX_DIM}"
        )));
    }
    if opts.trials == 0 {
        return Err(CliError::Input("--trials must be at least 1".into()));
    }
    if !(opts.tol >= 0.0 && opts.tol.is_finite()) {
        return Err(CliError::Input(format!(
            "--tol must be finite and non-negative, got {}",
            opts.tol
        )));
    }
    Ok(())
}

/// Runs every suite at every dimension. Each (suite, dim) pair draws from
/// its own stream so the transcript does not depend on which pairs run.
pub fn run(opts: &VerifyOptions) -> Result<VerifyOutcome, CliError> {
    validate(opts)?;
    let mut transcript = String::new();
    let dims: Vec<String> = opts.dims.iter().map(|d| d.to_string()).collect();
    let _ = writeln!(
        transcript,
        "verify seed={} trials={} dims={} tol={}",
        opts.seed,
        opts.trials,
        dims.join(","),
        fmt12(opts.tol)
    );
    let mut results = Vec::new();
    for (s, (name, suite)) in SUITES.iter().enumerate() {
        for &dim in &opts.dims {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream((s * (MAX_DIM + 1) + dim) as u64);
            let residual = suite(&mut rng, dim, opts.trials)
                .map_err(|e| CliError::Failure(format!("{name}: {e}")))?;
            let passed = residual <= opts.tol;
            let _ = writeln!(
                transcript,
                "{name:<22} dim={dim:<3} max_residual={:<20} {}",
                fmt12(residual),
                if passed { "PASS" } else { "FAIL" }
            );
            results.push(PropertyResult {
                property: name,
                dim,
                residual,
                passed,
            });
        }
    }
    match results.iter().find(|r| !r.passed) {
        Some(r) => {
            let _ = writeln!(
                transcript,
                "result: FAIL (first failing property: {} at dim={})",
                r.property, r.dim
            );
        }
        None => {
            let _ = writeln!(transcript, "result: PASS ({} checks)", results.len());
        }
    }
    Ok(VerifyOutcome {
        results,
        transcript,
    })
}

fn orthonormal_basis(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Ket> {
    let mut basis: Vec<Ket> = Vec::new();
    while basis.len() < dim {
        let mut v = random::ket(rng, dim);
        for e in &basis {
            let overlap = e.inner(&v).expect("same dimension");
            v = v.add(&e.scale(-overlap)).expect("same dimension");
        }
        if v.norm_sq() > 1e-6 {
            basis.push(v.normalized().expect("non-zero"));
        }
    }
    basis
}

fn blocked_family(rng: &mut ChaCha8Rng, basis: &[Ket]) -> Result<ProjectorFamily, Error> {
    let dim = basis.len();
    let mut projectors = Vec::new();
    let mut start = 0;
    while start < dim {
        let rank = rng.random_range(1..=dim - start);
        let mut p = Operator::zeros(dim);
        for v in &basis[start..start + rank] {
            p = &p + &dyad(v)?;
        }
        projectors.push(p);
        start += rank;
    }
    ProjectorFamily::new(projectors)
}

fn complex_coeffs(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
        .collect()
}

/// Rank-one families: the coefficients are the diagonal of `A` in the
/// family's basis, whatever the state.
fn pinching(rng: &mut ChaCha8Rng, dim: usize, trials: usize) -> Result<f64, Error> {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let basis = orthonormal_basis(rng, dim);
        let fam = ProjectorFamily::from_kets(&basis)?;
        let a = random::hermitian(rng, dim);
        let w = random::mixed_state(rng, dim);
        let ce = conditional_expectation(&w, &a, &fam)?;
        for (coeff, e) in ce.coeffs().iter().zip(&basis) {
            worst = worst.max((coeff - a.expectation_in(e)?.re).abs());
        }
    }
    Ok(worst)
}

fn defining_property(rng: &mut ChaCha8Rng, dim: usize, trials: usize) -> Result<f64, Error> {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let basis = orthonormal_basis(rng, dim);
        let fam = blocked_family(rng, &basis)?;
        let w = random::mixed_state(rng, dim);
        let a = random::hermitian(rng, dim);
        for j in 0..fam.len() {
            worst = worst.max(defining_property_residual(&w, &a, &fam, &[j])?);
        }
    }
    Ok(worst)
}

fn module_property(rng: &mut ChaCha8Rng, dim: usize, trials: usize) -> Result<f64, Error> {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let basis = orthonormal_basis(rng, dim);
        let fam = blocked_family(rng, &basis)?;
        let w = random::mixed_state(rng, dim);
        let a = random::hermitian(rng, dim);
        let c = complex_coeffs(rng, fam.len());
        worst = worst.max(module_property_residual(&w, &a, &fam, &c)?);
    }
    Ok(worst)
}

/// Diagonal states with coordinate-block families: least squares agrees
/// with the conditional expectation and both residuals vanish.
fn commuting_regime(rng: &mut ChaCha8Rng, dim: usize, trials: usize) -> Result<f64, Error> {
    let coordinate: Vec<Ket> = (0..dim).map(|i| Ket::basis(dim, i)).collect();
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let fam = blocked_family(rng, &coordinate)?;
        let w = random::diagonal_state(rng, dim, 0.1 / dim as f64);
        let a = random::hermitian(rng, dim);
        let ce = conditional_expectation(&w, &a, &fam)?;
        let ls = least_squares_coeffs(&w, &a, &fam)?;
        for (x, y) in ls.iter().zip(ce.coeffs()) {
            worst = worst.max((x - y).abs());
        }
        worst = worst.max(projection_residual(&w, &a, &fam)?);
        let trial: Vec<f64> = (0..fam.len())
            .map(|_| rng.random_range(-2.0..2.0))
            .collect();
        worst = worst.max(pythagoras_residual(&w, &a, &fam, &trial)?);
    }
    Ok(worst)
}

/// Reports how far the inequality is violated; zero when it holds.
fn uncertainty(rng: &mut ChaCha8Rng, dim: usize, trials: usize) -> Result<f64, Error> {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let psi = random::ket(rng, dim);
        let a = random::hermitian(rng, dim);
        let b = random::hermitian(rng, dim);
        let check = uncertainty_check(&psi, &a, &b)?;
        worst = worst.max(check.rhs - check.lhs);
    }
    Ok(worst)
}

/// Classical identities on a sample space with `dim` outcomes: defining
/// property, tower, best-predictor gap and the zero-total-spin certainty.
fn classical_identities(rng: &mut ChaCha8Rng, dim: usize, trials: usize) -> Result<f64, Error> {
    let spin_x = RandomVariable::new(vec![1.0, 1.0, -1.0, -1.0])?;
    let spin_y = RandomVariable::new(vec![1.0, -1.0, 1.0, -1.0])?;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let levels = rng.random_range(1..=dim.min(4));
        let sp = random::sample_space(rng, dim, 0.0);
        let x = RandomVariable::new((0..dim).map(|_| rng.random_range(-5.0..5.0)).collect())?;
        let y = RandomVariable::new(
            (0..dim)
                .map(|_| rng.random_range(0..levels) as f64)
                .collect(),
        )?;
        let g: Vec<f64> = (0..levels).map(|_| rng.random_range(-1.0..1.0)).collect();
        let phi: Vec<f64> = (0..levels).map(|_| rng.random_range(-5.0..5.0)).collect();
        worst = worst.max(defining_property_check(&sp, &x, &y, |l| g[l as usize])?);
        for level in y.levels() {
            worst = worst.max(tower_check(&sp, &x, &y, level)?);
        }
        worst = worst.max(-best_predictor_gap(&sp, &x, &y, |l| Some(phi[l as usize]))?);

        let spins = random::sample_space(rng, 4, 0.01);
        worst = worst.max((zero_total_spin_probability(&spins, &spin_x, &spin_y)? - 1.0).abs());
    }
    Ok(worst)
}
