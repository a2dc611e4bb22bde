//! Seeded Monte Carlo simulation of projective measurements.
//!
//! Each shot samples the observation family with Born weights, collapses the
//! state by Lüders reduction and then (optionally) samples a second family in
//! the collapsed state. Both stages use a single uniform draw against the
//! cumulative weights; boundary ties resolve toward the lower index.
//!
//! Shots are split into fixed-size chunks. Chunk `i` draws from a ChaCha8
//! stream seeded with `(seed, i)`, so the tally does not depend on how many
//! threads run the chunks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::ProjectorFamily;
use crate::conditional::reduce_state;
use crate::error::{Error, Result};
use crate::operator::DensityOperator;
use crate::scenarios::Scenario;
use crate::{IDENTITY_TOL, VALIDATION_TOL};

const CHUNK: u64 = 4096;

/// Index of the first cumulative weight strictly above `u`.
fn select(cumulative: &[f64], u: f64) -> usize {
    cumulative
        .iter()
        .position(|&c| u < c)
        .unwrap_or_else(|| last_live(cumulative))
}

// Rounding can leave the final cumulative weight a hair below 1; fall back to
// the last outcome that actually carries weight.
fn last_live(cumulative: &[f64]) -> usize {
    let mut prev = 0.0;
    let mut last = 0;
    for (i, &c) in cumulative.iter().enumerate() {
        if c > prev {
            last = i;
        }
        prev = c;
    }
    last
}

/// Born weights clamped to zero below the validation tolerance.
fn born_weights(w: &DensityOperator, fam: &ProjectorFamily) -> Result<Vec<f64>> {
    fam.projectors()
        .iter()
        .map(|b| {
            let p = w.expectation(b)?.re;
            Ok(if p <= VALIDATION_TOL { 0.0 } else { p })
        })
        .collect()
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    weights
        .iter()
        .map(|p| {
            acc += p;
            acc / total
        })
        .collect()
}

/// One projective measurement: outcome and the collapsed state.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub outcome: usize,
    pub probability: f64,
    pub pre_state: DensityOperator,
    pub post_state: DensityOperator,
}

/// Samples a complete family in state `w` and applies the Lüders update.
pub fn born_sample<R: Rng + ?Sized>(
    w: &DensityOperator,
    fam: &ProjectorFamily,
    rng: &mut R,
) -> Result<MeasurementRecord> {
    fam.require_complete()?;
    let weights = born_weights(w, fam)?;
    let outcome = select(&cumulative(&weights), rng.random::<f64>());
    Ok(MeasurementRecord {
        outcome,
        probability: weights[outcome],
        pre_state: w.clone(),
        post_state: reduce_state(w, fam.projector(outcome))?,
    })
}

/// A labelled measurement stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub family: ProjectorFamily,
    pub labels: Vec<String>,
}

impl Stage {
    pub fn new(family: ProjectorFamily, labels: &[&str]) -> Result<Self> {
        if labels.len() != family.len() {
            return Err(Error::DimMismatch {
                expected: family.len(),
                found: labels.len(),
            });
        }
        Ok(Self {
            family,
            labels: labels.iter().map(|s| s.to_string()).collect(),
        })
    }
}

/// Observe one family, collapse, then optionally measure another.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementPlan {
    pub observe: Stage,
    pub measure: Option<Stage>,
}

impl MeasurementPlan {
    /// The natural plan for a scenario: which-source for the two-source
    /// model; observe the second subsystem then measure the first for the
    /// composite ones.
    pub fn for_scenario(scenario: &Scenario) -> Result<Self> {
        use crate::scenarios::CompositeKind;
        match scenario {
            Scenario::TwoSource(model) => Ok(Self {
                observe: Stage::new(model.family.clone(), &["plus", "minus"])?,
                measure: None,
            }),
            Scenario::Composite(c) => {
                let (obs, target): (&[&str], &[&str]) = match c.kind {
                    CompositeKind::Cat => {
                        (&["no-photon", "photon"], &["atom-ground", "atom-excited"])
                    }
                    CompositeKind::Epr => (&["second=+1", "second=-1"], &["first=+1", "first=-1"]),
                };
                Ok(Self {
                    observe: Stage::new(c.family.clone(), obs)?,
                    measure: Some(Stage::new(c.target_family.clone(), target)?),
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeStat {
    pub label: String,
    pub count: u64,
    pub frequency: f64,
    pub predicted: f64,
}

/// Frequency of a second-stage outcome among shots in one observed branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalStat {
    pub given: String,
    pub outcome: String,
    pub predicted: f64,
    pub conditioned_shots: u64,
    pub hits: u64,
    /// True when the predicted conditional probability is 1.
    pub certain: bool,
    /// Shots in the branch that missed a certain outcome.
    pub counterexamples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub seed: u64,
    pub shots: u64,
    /// Marginal counts of the observation stage.
    pub observed: Vec<OutcomeStat>,
    /// Joint counts over (observation, measurement); equals `observed` when
    /// the plan has no second stage.
    pub joint: Vec<OutcomeStat>,
    pub conditionals: Vec<ConditionalStat>,
    pub max_abs_deviation: f64,
}

impl SampleReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable")
    }

    /// Total counterexamples over all certain conditional events.
    pub fn counterexamples(&self) -> u64 {
        self.conditionals.iter().map(|c| c.counterexamples).sum()
    }
}

/// Born tables for both stages, computed once per experiment.
struct Tables {
    observe_weights: Vec<f64>,
    observe_cumulative: Vec<f64>,
    /// Per observed branch: second-stage weights and cumulative weights.
    measure: Vec<(Vec<f64>, Vec<f64>)>,
    cells: usize,
}

fn tables(state: &DensityOperator, plan: &MeasurementPlan) -> Result<Tables> {
    plan.observe.family.require_complete()?;
    if let Some(m) = &plan.measure {
        m.family.require_complete()?;
    }
    let observe_weights = born_weights(state, &plan.observe.family)?;
    let cells = plan.measure.as_ref().map_or(1, |m| m.family.len());
    let mut measure = Vec::with_capacity(observe_weights.len());
    for (j, &p) in observe_weights.iter().enumerate() {
        let weights = match (&plan.measure, p > 0.0) {
            (Some(stage), true) => {
                let reduced = reduce_state(state, plan.observe.family.projector(j))?;
                born_weights(&reduced, &stage.family)?
            }
            (None, _) => vec![1.0],
            (Some(_), false) => vec![0.0; cells],
        };
        let cum = if weights.iter().any(|&q| q > 0.0) {
            cumulative(&weights)
        } else {
            vec![1.0; cells]
        };
        measure.push((weights, cum));
    }
    Ok(Tables {
        observe_cumulative: cumulative(&observe_weights),
        observe_weights,
        measure,
        cells,
    })
}

fn tally_chunk(tables: &Tables, seed: u64, chunk: u64, shots: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    let mut counts = vec![0u64; tables.observe_weights.len() * tables.cells];
    for _ in 0..shots {
        let j = select(&tables.observe_cumulative, rng.random::<f64>());
        let k = if tables.cells > 1 {
            select(&tables.measure[j].1, rng.random::<f64>())
        } else {
            0
        };
        counts[j * tables.cells + k] += 1;
    }
    counts
}

fn chunk_sizes(shots: u64) -> Vec<(u64, u64)> {
    (0..shots.div_ceil(CHUNK))
        .map(|i| (i, CHUNK.min(shots - i * CHUNK)))
        .collect()
}

fn merge(mut acc: Vec<u64>, other: Vec<u64>) -> Vec<u64> {
    for (a, b) in acc.iter_mut().zip(other) {
        *a += b;
    }
    acc
}

/// Runs `shots` two-stage measurements in parallel.
pub fn run_experiment(
    state: &DensityOperator,
    plan: &MeasurementPlan,
    shots: u64,
    seed: u64,
) -> Result<SampleReport> {
    run_experiment_with(state, plan, shots, seed, true)
}

/// As [`run_experiment`], choosing serial or parallel execution. Both give
/// identical reports.
pub fn run_experiment_with(
    state: &DensityOperator,
    plan: &MeasurementPlan,
    shots: u64,
    seed: u64,
    parallel: bool,
) -> Result<SampleReport> {
    if shots == 0 {
        return Err(Error::InvalidConfig("shots must be at least 1".into()));
    }
    let tables = tables(state, plan)?;
    let empty = vec![0u64; tables.observe_weights.len() * tables.cells];
    let chunks = chunk_sizes(shots);
    let counts = if parallel {
        chunks
            .par_iter()
            .map(|&(i, n)| tally_chunk(&tables, seed, i, n))
            .reduce(|| empty.clone(), merge)
    } else {
        chunks
            .iter()
            .map(|&(i, n)| tally_chunk(&tables, seed, i, n))
            .fold(empty.clone(), merge)
    };
    Ok(build_report(&tables, plan, &counts, shots, seed))
}

fn stat(label: String, count: u64, shots: u64, predicted: f64) -> OutcomeStat {
    OutcomeStat {
        label,
        count,
        frequency: count as f64 / shots as f64,
        predicted,
    }
}

fn build_report(
    tables: &Tables,
    plan: &MeasurementPlan,
    counts: &[u64],
    shots: u64,
    seed: u64,
) -> SampleReport {
    let cells = tables.cells;
    let mut observed = Vec::new();
    let mut joint = Vec::new();
    let mut conditionals = Vec::new();
    for (j, label) in plan.observe.labels.iter().enumerate() {
        let row = &counts[j * cells..(j + 1) * cells];
        let branch_shots: u64 = row.iter().sum();
        let p = tables.observe_weights[j];
        observed.push(stat(label.clone(), branch_shots, shots, p));
        let Some(measure) = &plan.measure else {
            continue;
        };
        let q = &tables.measure[j].0;
        for (k, outcome) in measure.labels.iter().enumerate() {
            joint.push(stat(format!("{label},{outcome}"), row[k], shots, p * q[k]));
            if p > 0.0 {
                let certain = (q[k] - 1.0).abs() <= IDENTITY_TOL;
                conditionals.push(ConditionalStat {
                    given: label.clone(),
                    outcome: outcome.clone(),
                    predicted: q[k],
                    conditioned_shots: branch_shots,
                    hits: row[k],
                    certain,
                    counterexamples: if certain { branch_shots - row[k] } else { 0 },
                });
            }
        }
    }
    if plan.measure.is_none() {
        joint = observed.clone();
    }
    let max_abs_deviation = observed
        .iter()
        .chain(&joint)
        .map(|s| (s.frequency - s.predicted).abs())
        .fold(0.0, f64::max);
    SampleReport {
        seed,
        shots,
        observed,
        joint,
        conditionals,
        max_abs_deviation,
    }
}

/// `4 sqrt(p (1 - p) / N) + 1 / N`.
pub fn binomial_bound(p: f64, shots: u64) -> f64 {
    let n = shots as f64;
    4.0 * (p * (1.0 - p) / n).max(0.0).sqrt() + 1.0 / n
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationReport {
    pub max_abs_dev: f64,
    pub within_bound: bool,
}

/// Checks every marginal and joint frequency against [`binomial_bound`].
pub fn deviation_report(report: &SampleReport) -> DeviationReport {
    let mut max_abs_dev: f64 = 0.0;
    let mut within_bound = true;
    for s in report.observed.iter().chain(&report.joint) {
        let dev = (s.frequency - s.predicted).abs();
        max_abs_dev = max_abs_dev.max(dev);
        within_bound &= dev <= binomial_bound(s.predicted, report.shots);
    }
    DeviationReport {
        max_abs_dev,
        within_bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{Ket, Operator};
    use crate::scenarios::{build_cat, build_epr, ScenarioConfig, ScenarioKind};
    use num_complex::Complex64;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn select_breaks_ties_low() {
        let cum = [0.5, 0.5, 1.0];
        assert_eq!(select(&cum, 0.0), 0);
        assert_eq!(select(&cum, 0.5), 2);
        assert_eq!(select(&[0.0, 1.0], 0.0), 1);
        // Rounding shortfall goes to the last outcome with weight.
        assert_eq!(
            select(&[0.3, 0.999_999_999, 0.999_999_999], 0.999_999_999_5),
            1
        );
    }

    #[test]
    fn born_sample_eigenstate_is_certain() {
        let fam = ProjectorFamily::computational_basis(2);
        let up = DensityOperator::pure(&Ket::basis(2, 0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let rec = born_sample(&up, &fam, &mut rng).unwrap();
            assert_eq!(rec.outcome, 0);
            assert_eq!(rec.post_state, up);
        }
    }

    #[test]
    fn born_sample_mixed_is_balanced() {
        let fam = ProjectorFamily::computational_basis(2);
        let mixed = DensityOperator::maximally_mixed(2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 20_000;
        let ones = (0..n)
            .filter(|_| born_sample(&mixed, &fam, &mut rng).unwrap().outcome == 1)
            .count();
        let freq = ones as f64 / n as f64;
        assert!((freq - 0.5).abs() <= binomial_bound(0.5, n as u64));
    }

    #[test]
    fn born_sample_post_state_is_luders_reduction() {
        let epr = build_epr(c(0.3f64.sqrt()), c(0.7f64.sqrt())).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rec = born_sample(&epr.state, &epr.family, &mut rng).unwrap();
        let expected = reduce_state(&epr.state, epr.family.projector(rec.outcome)).unwrap();
        assert_eq!(rec.post_state, expected);
    }

    #[test]
    fn born_sample_requires_complete_family() {
        let fam = ProjectorFamily::new(vec![Operator::from_real_diagonal(&[1.0, 0.0])]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            born_sample(&DensityOperator::maximally_mixed(2), &fam, &mut rng),
            Err(Error::IncompleteFamily { .. })
        ));
    }

    #[test]
    fn epr_frequency_converges() {
        let cfg = ScenarioConfig::new(ScenarioKind::Epr, c(0.3f64.sqrt()), c(0.7f64.sqrt()));
        let scenario = cfg.build().unwrap();
        let plan = MeasurementPlan::for_scenario(&scenario).unwrap();
        let report = run_experiment(scenario.state(), &plan, 100_000, 42).unwrap();
        let down = &report.observed[1];
        assert_eq!(down.label, "second=-1");
        assert!((down.predicted - 0.3).abs() < 1e-12);
        assert!(deviation_report(&report).within_bound);
        assert_eq!(report.counterexamples(), 0);
        assert!(report.conditionals.iter().filter(|c| c.certain).count() >= 2);
    }

    #[test]
    fn counts_sum_to_shots() {
        let cat = build_cat(c(0.6f64.sqrt()), c(0.4f64.sqrt())).unwrap();
        let scenario = crate::scenarios::Scenario::Composite(cat);
        let plan = MeasurementPlan::for_scenario(&scenario).unwrap();
        let report = run_experiment(scenario.state(), &plan, 10_001, 5).unwrap();
        assert_eq!(report.observed.iter().map(|s| s.count).sum::<u64>(), 10_001);
        assert_eq!(report.joint.iter().map(|s| s.count).sum::<u64>(), 10_001);
        for s in &report.joint {
            assert_eq!(s.frequency, s.count as f64 / 10_001.0);
        }
    }

    #[test]
    fn serial_and_parallel_agree() {
        let cat = build_cat(c(0.6f64.sqrt()), c(0.4f64.sqrt())).unwrap();
        let scenario = crate::scenarios::Scenario::Composite(cat);
        let plan = MeasurementPlan::for_scenario(&scenario).unwrap();
        let serial = run_experiment_with(scenario.state(), &plan, 50_000, 9, false).unwrap();
        let parallel = run_experiment_with(scenario.state(), &plan, 50_000, 9, true).unwrap();
        assert_eq!(serial, parallel);
        let other_seed = run_experiment(scenario.state(), &plan, 50_000, 10).unwrap();
        assert_ne!(serial.observed, other_seed.observed);
    }

    #[test]
    fn zero_shots_rejected() {
        let cfg = ScenarioConfig::new(ScenarioKind::Cat, c(0.6f64.sqrt()), c(0.4f64.sqrt()));
        let scenario = cfg.build().unwrap();
        let plan = MeasurementPlan::for_scenario(&scenario).unwrap();
        assert!(run_experiment(scenario.state(), &plan, 0, 1).is_err());
    }

    #[test]
    fn deviation_examples() {
        assert!((binomial_bound(0.5, 100_000) - 0.006_334_555_32).abs() < 1e-9);
        // A certain outcome never deviates.
        let up = DensityOperator::pure(&Ket::basis(2, 0)).unwrap();
        let plan = MeasurementPlan {
            observe: Stage::new(ProjectorFamily::computational_basis(2), &["0", "1"]).unwrap(),
            measure: None,
        };
        let report = run_experiment(&up, &plan, 1000, 1).unwrap();
        let dev = deviation_report(&report);
        assert_eq!(dev.max_abs_dev, 0.0);
        assert!(dev.within_bound);
    }

    #[test]
    fn single_shot_has_wide_bound() {
        let cfg = ScenarioConfig::new(ScenarioKind::Cat, c(0.6f64.sqrt()), c(0.4f64.sqrt()));
        let scenario = cfg.build().unwrap();
        let plan = MeasurementPlan::for_scenario(&scenario).unwrap();
        let report = run_experiment(scenario.state(), &plan, 1, 1).unwrap();
        assert!(deviation_report(&report).within_bound);
    }
}
