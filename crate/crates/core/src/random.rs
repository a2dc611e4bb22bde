//! Random instance generators for property sweeps and benchmarks.

use num_complex::Complex64;
use rand::Rng;

use crate::classical::FiniteSampleSpace;
use crate::operator::{DensityOperator, Ket, Operator};

fn complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Uniformly random direction in `C^dim` (entries uniform in the unit box,
/// then normalized).
pub fn ket<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Ket {
    loop {
        let entries = (0..dim).map(|_| complex(rng)).collect();
        let raw = Ket::new(entries).expect("finite entries");
        if raw.norm_sq() > 1e-6 {
            return raw.normalized().expect("non-zero norm");
        }
    }
}

/// Normalized ket whose squared entries are all at least `min_weight`.
pub fn ket_with_min_weight<R: Rng + ?Sized>(rng: &mut R, dim: usize, min_weight: f64) -> Ket {
    assert!(min_weight * (dim as f64) < 1.0);
    let probs = weights(rng, dim, min_weight);
    let entries = probs
        .iter()
        .map(|p| Complex64::from_polar(p.sqrt(), rng.random_range(0.0..std::f64::consts::TAU)))
        .collect();
    Ket::new(entries).expect("finite entries")
}

/// Random Hermitian operator with entries in the unit box.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Operator {
    let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
    for r in 0..dim {
        entries[r * dim + r] = Complex64::new(rng.random_range(-1.0..1.0), 0.0);
        for c in r + 1..dim {
            let z = complex(rng);
            entries[r * dim + c] = z;
            entries[c * dim + r] = z.conj();
        }
    }
    Operator::new(dim, entries).expect("finite entries")
}

/// Probability vector with every entry at least `min_weight`.
pub fn weights<R: Rng + ?Sized>(rng: &mut R, n: usize, min_weight: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0) + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    let free = 1.0 - min_weight * n as f64;
    let mut w: Vec<f64> = raw.iter().map(|x| min_weight + free * x / total).collect();
    // Push the rounding residue into the largest entry.
    let residue = 1.0 - w.iter().sum::<f64>();
    let max = (0..n).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap();
    w[max] += residue;
    w
}

/// Diagonal density operator with every eigenvalue at least `min_weight`.
pub fn diagonal_state<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    min_weight: f64,
) -> DensityOperator {
    DensityOperator::new(Operator::from_real_diagonal(&weights(rng, dim, min_weight)))
        .expect("valid diagonal state")
}

/// Pure state `|psi><psi|` with every diagonal entry at least `min_weight`.
pub fn pure_state<R: Rng + ?Sized>(rng: &mut R, dim: usize, min_weight: f64) -> DensityOperator {
    DensityOperator::pure(&ket_with_min_weight(rng, dim, min_weight)).expect("normalized ket")
}

/// Full-rank mixed state `G G* / tr(G G*)`.
pub fn mixed_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityOperator {
    let entries = (0..dim * dim).map(|_| complex(rng)).collect();
    let g = Operator::new(dim, entries).expect("finite entries");
    let gg = &g * &g.adjoint();
    let herm = (&gg + &gg.adjoint()).scale_real(0.5);
    let trace = herm.trace().re;
    DensityOperator::new(herm.scale_real(1.0 / trace)).expect("positive by construction")
}

/// Random pmf on `n` outcomes with every weight at least `min_weight`.
pub fn sample_space<R: Rng + ?Sized>(rng: &mut R, n: usize, min_weight: f64) -> FiniteSampleSpace {
    FiniteSampleSpace::from_weights(weights(rng, n, min_weight)).expect("normalized weights")
}
