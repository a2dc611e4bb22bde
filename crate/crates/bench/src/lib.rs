//! Fixed-seed fixtures shared by the benchmarks.

use qpredict_core::operator::dyad;
use qpredict_core::random;
use qpredict_core::{DensityOperator, Ket, Operator, ProjectorFamily};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A mixed state, an observable and a complete family of `blocks` projectors
/// of (nearly) equal rank in a random orthonormal basis.
pub struct Instance {
    pub state: DensityOperator,
    pub observable: Operator,
    pub family: ProjectorFamily,
}

pub fn instance(dim: usize, blocks: usize, seed: u64) -> Instance {
    assert!((1..=dim).contains(&blocks));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<Ket> = Vec::new();
    while basis.len() < dim {
        let mut v = random::ket(&mut rng, dim);
        for e in &basis {
            let overlap = e.inner(&v).expect("same dimension");
            v = v.add(&e.scale(-overlap)).expect("same dimension");
        }
        if v.norm_sq() > 1e-6 {
            basis.push(v.normalized().expect("non-zero"));
        }
    }
    let projectors = (0..blocks)
        .map(|b| {
            let (lo, hi) = (b * dim / blocks, (b + 1) * dim / blocks);
            basis[lo..hi].iter().fold(Operator::zeros(dim), |acc, v| {
                &acc + &dyad(v).expect("normalized")
            })
        })
        .collect();
    Instance {
        state: random::mixed_state(&mut rng, dim),
        observable: random::hermitian(&mut rng, dim),
        family: ProjectorFamily::new(projectors).expect("orthogonal blocks"),
    }
}
