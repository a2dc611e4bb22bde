//! Finite classical probability spaces and conditional expectation given a
//! discrete random variable.
//!
//! Levels of a random variable are detected by exact `==` on the values.
//! Callers that need tolerance-based binning must quantize first.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weights must sum to one within this tolerance.
pub const WEIGHT_TOL: f64 = 1e-12;

/// A finite outcome set with probability weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceRepr", into = "SpaceRepr")]
pub struct FiniteSampleSpace {
    outcomes: Vec<String>,
    weights: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SpaceRepr {
    outcomes: Vec<String>,
    weights: Vec<f64>,
}

impl TryFrom<SpaceRepr> for FiniteSampleSpace {
    type Error = Error;
    fn try_from(repr: SpaceRepr) -> Result<Self> {
        FiniteSampleSpace::new(repr.outcomes, repr.weights)
    }
}

impl From<FiniteSampleSpace> for SpaceRepr {
    fn from(sp: FiniteSampleSpace) -> Self {
        SpaceRepr {
            outcomes: sp.outcomes,
            weights: sp.weights,
        }
    }
}

impl FiniteSampleSpace {
    /// Validates weights: non-negative, finite, summing to one within
    /// [`WEIGHT_TOL`]. Inputs are never renormalized.
    pub fn new(outcomes: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if outcomes.len() != weights.len() {
            return Err(Error::DimMismatch {
                expected: outcomes.len(),
                found: weights.len(),
            });
        }
        if outcomes.is_empty() {
            return Err(Error::ZeroDimension);
        }
        if let Some(idx) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidWeights(format!(
                "weight {idx} is {}",
                weights[idx]
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidWeights(format!("weights sum to {total}")));
        }
        Ok(Self { outcomes, weights })
    }

    /// Outcomes labelled `"0"`, `"1"`, ...
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let outcomes = (0..weights.len()).map(|i| i.to_string()).collect();
        Self::new(outcomes, weights)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::from_weights(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn probability(&self, event: &Event) -> Result<f64> {
        self.check_len(event.len())?;
        Ok(self
            .weights
            .iter()
            .zip(&event.membership)
            .filter(|(_, &m)| m)
            .map(|(w, _)| w)
            .sum())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len == self.len() {
            Ok(())
        } else {
            Err(Error::DimMismatch {
                expected: self.len(),
                found: len,
            })
        }
    }
}

/// A sample space together with named random variables, as exchanged in
/// files: `{"outcomes": [...], "weights": [...], "variables": {"X": [...]}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DocumentRepr", into = "DocumentRepr")]
pub struct SampleSpaceDocument {
    pub space: FiniteSampleSpace,
    pub variables: BTreeMap<String, RandomVariable>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DocumentRepr {
    outcomes: Vec<String>,
    weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    variables: BTreeMap<String, Vec<f64>>,
}

impl TryFrom<DocumentRepr> for SampleSpaceDocument {
    type Error = Error;
    fn try_from(repr: DocumentRepr) -> Result<Self> {
        let space = FiniteSampleSpace::new(repr.outcomes, repr.weights)?;
        let mut variables = BTreeMap::new();
        for (name, values) in repr.variables {
            space.check_len(values.len())?;
            variables.insert(name, RandomVariable::new(values)?);
        }
        Ok(Self { space, variables })
    }
}

impl From<SampleSpaceDocument> for DocumentRepr {
    fn from(doc: SampleSpaceDocument) -> Self {
        DocumentRepr {
            outcomes: doc.space.outcomes,
            weights: doc.space.weights,
            variables: doc
                .variables
                .into_iter()
                .map(|(k, v)| (k, v.values))
                .collect(),
        }
    }
}

/// A real-valued function on the outcomes of a sample space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RandomVariable {
    values: Vec<f64>,
}

impl RandomVariable {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(idx));
        }
        Ok(Self { values })
    }

    pub fn constant(value: f64, len: usize) -> Self {
        Self {
            values: vec![value; len],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Distinct values in order of first appearance.
    pub fn levels(&self) -> Vec<f64> {
        let mut levels: Vec<f64> = Vec::new();
        for &v in &self.values {
            if !levels.contains(&v) {
                levels.push(v);
            }
        }
        levels
    }

    /// The event `{self = level}`.
    pub fn level_set(&self, level: f64) -> Event {
        Event {
            membership: self.values.iter().map(|&v| v == level).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &RandomVariable, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::DimMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// The indicator `I_A` as a random variable.
    pub fn indicator(event: &Event) -> Self {
        Self {
            values: event
                .membership
                .iter()
                .map(|&m| if m { 1.0 } else { 0.0 })
                .collect(),
        }
    }
}

/// A subset of the outcomes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Event {
    membership: Vec<bool>,
}

impl Event {
    pub fn new(membership: Vec<bool>) -> Self {
        Self { membership }
    }

    pub fn from_indices(len: usize, indices: &[usize]) -> Self {
        let mut membership = vec![false; len];
        for &i in indices {
            membership[i] = true;
        }
        Self { membership }
    }

    pub fn everything(len: usize) -> Self {
        Self {
            membership: vec![true; len],
        }
    }

    pub fn len(&self) -> usize {
        self.membership.len()
    }

    pub fn is_empty(&self) -> bool {
        self.membership.is_empty()
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.membership[idx]
    }

    pub fn intersect(&self, other: &Event) -> Event {
        Event {
            membership: self
                .membership
                .iter()
                .zip(&other.membership)
                .map(|(&a, &b)| a && b)
                .collect(),
        }
    }
}

/// `E[X] = sum_w X(w) P(w)`.
pub fn expect(sp: &FiniteSampleSpace, x: &RandomVariable) -> Result<f64> {
    sp.check_len(x.len())?;
    Ok(sp.weights.iter().zip(&x.values).map(|(p, v)| p * v).sum())
}

/// `P_C(w) = P(w) / P(C)` on `C`, zero elsewhere.
pub fn condition(sp: &FiniteSampleSpace, event: &Event) -> Result<FiniteSampleSpace> {
    let mass = sp.probability(event)?;
    if mass <= 0.0 {
        return Err(Error::ZeroProbabilityEvent);
    }
    let weights = sp
        .weights
        .iter()
        .zip(&event.membership)
        .map(|(&w, &m)| if m { w / mass } else { 0.0 })
        .collect();
    FiniteSampleSpace::new(sp.outcomes.clone(), weights)
}

/// `P(A | C)`.
pub fn conditional_probability(sp: &FiniteSampleSpace, a: &Event, given: &Event) -> Result<f64> {
    let conditioned = condition(sp, given)?;
    conditioned.probability(a)
}

/// One level `y_j` of the conditioning variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelSummary {
    pub level: f64,
    pub probability: f64,
    /// `E[X | Y = y_j]`; zero on null levels.
    pub conditional_mean: f64,
    /// True iff `P(Y = y_j) = 0`.
    pub null: bool,
}

/// `E[X | Y]`: the random variable together with its per-level summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalConditional {
    pub variable: RandomVariable,
    pub levels: Vec<LevelSummary>,
}

impl ClassicalConditional {
    pub fn value_at_level(&self, level: f64) -> Option<f64> {
        self.levels
            .iter()
            .find(|l| l.level == level)
            .map(|l| l.conditional_mean)
    }

    pub fn null_mask(&self) -> Vec<bool> {
        self.levels.iter().map(|l| l.null).collect()
    }
}

/// `E[X|Y] = sum_j E[X | Y = y_j] I_{Y = y_j}`.
///
/// Levels with zero probability get the value 0 and are flagged `null`.
pub fn cond_expect(
    sp: &FiniteSampleSpace,
    x: &RandomVariable,
    y: &RandomVariable,
) -> Result<ClassicalConditional> {
    sp.check_len(x.len())?;
    sp.check_len(y.len())?;
    let mut levels = Vec::new();
    for level in y.levels() {
        let mut mass = 0.0;
        let mut moment = 0.0;
        for ((&p, &xv), &yv) in sp.weights.iter().zip(&x.values).zip(&y.values) {
            if yv == level {
                mass += p;
                moment += p * xv;
            }
        }
        let null = mass <= 0.0;
        levels.push(LevelSummary {
            level,
            probability: mass,
            conditional_mean: if null { 0.0 } else { moment / mass },
            null,
        });
    }
    let values = y
        .values
        .iter()
        .map(|&yv| {
            levels
                .iter()
                .find(|l| l.level == yv)
                .map(|l| l.conditional_mean)
                .unwrap_or(0.0)
        })
        .collect();
    Ok(ClassicalConditional {
        variable: RandomVariable { values },
        levels,
    })
}

fn mean_square(sp: &FiniteSampleSpace, diff: impl Iterator<Item = f64>) -> f64 {
    sp.weights.iter().zip(diff).map(|(p, d)| p * d * d).sum()
}

/// `E[(X - phi(Y))^2] - E[(X - E[X|Y])^2]`, non-negative for every `phi`.
///
/// `phi` may return `None` on null levels; a missing value on a level of
/// positive probability is an error.
pub fn best_predictor_gap(
    sp: &FiniteSampleSpace,
    x: &RandomVariable,
    y: &RandomVariable,
    phi: impl Fn(f64) -> Option<f64>,
) -> Result<f64> {
    let ce = cond_expect(sp, x, y)?;
    let mut predictor = Vec::with_capacity(ce.levels.len());
    for level in &ce.levels {
        match phi(level.level) {
            Some(v) => predictor.push((level.level, v)),
            None if level.null => predictor.push((level.level, 0.0)),
            None => return Err(Error::MissingLevel(level.level)),
        }
    }
    let lookup = |yv: f64| {
        predictor
            .iter()
            .find(|(l, _)| *l == yv)
            .map(|(_, v)| *v)
            .unwrap_or(0.0)
    };
    let phi_err = mean_square(
        sp,
        x.values
            .iter()
            .zip(&y.values)
            .map(|(&xv, &yv)| xv - lookup(yv)),
    );
    let ce_err = mean_square(
        sp,
        x.values
            .iter()
            .zip(&ce.variable.values)
            .map(|(&xv, &ev)| xv - ev),
    );
    Ok(phi_err - ce_err)
}

/// `|E[X g(Y)] - E[E[X|Y] g(Y)]|`.
pub fn defining_property_check(
    sp: &FiniteSampleSpace,
    x: &RandomVariable,
    y: &RandomVariable,
    g: impl Fn(f64) -> f64,
) -> Result<f64> {
    let ce = cond_expect(sp, x, y)?;
    let gy = y.map(g);
    let lhs = expect(sp, &x.zip_with(&gy, |a, b| a * b)?)?;
    let rhs = expect(sp, &ce.variable.zip_with(&gy, |a, b| a * b)?)?;
    Ok((lhs - rhs).abs())
}

/// `|E_{P_j}[E_P[X|Y]] - E_P[X | Y = y_j]|` with `P_j = P(. | Y = y_j)`.
pub fn tower_check(
    sp: &FiniteSampleSpace,
    x: &RandomVariable,
    y: &RandomVariable,
    level: f64,
) -> Result<f64> {
    let ce = cond_expect(sp, x, y)?;
    let branch = condition(sp, &y.level_set(level))?;
    let outer = expect(&branch, &ce.variable)?;
    let direct = expect(&branch, x)?;
    Ok((outer - direct).abs())
}

/// `P(X = -1 | X + Y = 0, Y = 1)` computed as `P_C(X = -1 | Y = 1)` with
/// `C = {X + Y = 0}`.
pub fn zero_total_spin_probability(
    sp: &FiniteSampleSpace,
    x: &RandomVariable,
    y: &RandomVariable,
) -> Result<f64> {
    let total = x.zip_with(y, |a, b| a + b)?;
    let zero_total = total.level_set(0.0);
    let given_zero = condition(sp, &zero_total)?;
    conditional_probability(&given_zero, &x.level_set(-1.0), &y.level_set(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Joint pmf on (X, Y) in {+1,-1}^2, outcomes ordered (+,+), (+,-), (-,+), (-,-).
    fn spin_space(p: [f64; 4]) -> (FiniteSampleSpace, RandomVariable, RandomVariable) {
        let sp = FiniteSampleSpace::new(
            vec!["++".into(), "+-".into(), "-+".into(), "--".into()],
            p.to_vec(),
        )
        .unwrap();
        let x = RandomVariable::new(vec![1.0, 1.0, -1.0, -1.0]).unwrap();
        let y = RandomVariable::new(vec![1.0, -1.0, 1.0, -1.0]).unwrap();
        (sp, x, y)
    }

    #[test]
    fn expect_examples() {
        let sp = FiniteSampleSpace::uniform(2).unwrap();
        let x = RandomVariable::new(vec![1.0, -1.0]).unwrap();
        assert_eq!(expect(&sp, &x).unwrap(), 0.0);

        let point = FiniteSampleSpace::from_weights(vec![0.0, 1.0, 0.0]).unwrap();
        let x = RandomVariable::new(vec![5.0, 7.0, 9.0]).unwrap();
        assert_eq!(expect(&point, &x).unwrap(), 7.0);

        let sp = FiniteSampleSpace::from_weights(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let x = RandomVariable::new(vec![1.0, 1.0, -1.0, -1.0]).unwrap();
        assert!((expect(&sp, &x).unwrap() + 0.4).abs() < 1e-15);

        let short = RandomVariable::new(vec![1.0]).unwrap();
        assert!(matches!(
            expect(&sp, &short),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn condition_examples() {
        let sp = FiniteSampleSpace::from_weights(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(condition(&sp, &Event::everything(4)).unwrap(), sp);

        let single = condition(&sp, &Event::from_indices(4, &[1])).unwrap();
        assert_eq!(single.weights(), &[0.0, 1.0, 0.0, 0.0]);

        let pair = condition(&sp, &Event::from_indices(4, &[2, 3])).unwrap();
        let expected = [0.0, 0.0, 3.0 / 7.0, 4.0 / 7.0];
        for (got, want) in pair.weights().iter().zip(expected) {
            assert!((got - want).abs() < 1e-15);
        }

        let null = FiniteSampleSpace::from_weights(vec![1.0, 0.0]).unwrap();
        assert_eq!(
            condition(&null, &Event::from_indices(2, &[1])),
            Err(Error::ZeroProbabilityEvent)
        );
    }

    #[test]
    fn condition_is_idempotent() {
        let sp = FiniteSampleSpace::from_weights(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let c = Event::from_indices(4, &[0, 2, 3]);
        let once = condition(&sp, &c).unwrap();
        let twice = condition(&once, &c).unwrap();
        for (a, b) in once.weights().iter().zip(twice.weights()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_unnormalized_weights() {
        assert!(matches!(
            FiniteSampleSpace::from_weights(vec![0.5, 0.6]),
            Err(Error::InvalidWeights(_))
        ));
        assert!(matches!(
            FiniteSampleSpace::from_weights(vec![1.5, -0.5]),
            Err(Error::InvalidWeights(_))
        ));
    }

    #[test]
    fn cond_expect_independent_is_zero() {
        let (sp, x, y) = spin_space([0.25; 4]);
        let ce = cond_expect(&sp, &x, &y).unwrap();
        assert!(ce.variable.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn cond_expect_injective_recovers_x() {
        let sp = FiniteSampleSpace::from_weights(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let x = RandomVariable::new(vec![3.0, -1.0, 2.5, 0.0]).unwrap();
        let y = RandomVariable::new(vec![10.0, 20.0, 30.0, 40.0]).unwrap();
        let ce = cond_expect(&sp, &x, &y).unwrap();
        for (a, b) in ce.variable.values().iter().zip(x.values()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn cond_expect_enumeration() {
        let (sp, x, y) = spin_space([0.1, 0.2, 0.3, 0.4]);
        let ce = cond_expect(&sp, &x, &y).unwrap();
        assert!((ce.value_at_level(1.0).unwrap() + 0.5).abs() < 1e-15);
        assert!((ce.value_at_level(-1.0).unwrap() + 1.0 / 3.0).abs() < 1e-15);
        // Constant on level sets.
        let v = ce.variable.values();
        assert_eq!(v[0], v[2]);
        assert_eq!(v[1], v[3]);
    }

    #[test]
    fn cond_expect_null_level_is_masked() {
        let sp = FiniteSampleSpace::from_weights(vec![0.5, 0.5, 0.0]).unwrap();
        let x = RandomVariable::new(vec![1.0, 3.0, 100.0]).unwrap();
        let y = RandomVariable::new(vec![0.0, 0.0, 1.0]).unwrap();
        let ce = cond_expect(&sp, &x, &y).unwrap();
        assert_eq!(ce.null_mask(), vec![false, true]);
        assert_eq!(ce.variable.values(), &[2.0, 2.0, 0.0]);
    }

    #[test]
    fn best_predictor_gap_examples() {
        let (sp, x, y) = spin_space([0.1, 0.2, 0.3, 0.4]);
        let ce = cond_expect(&sp, &x, &y).unwrap();
        let gap = best_predictor_gap(&sp, &x, &y, |l| ce.value_at_level(l)).unwrap();
        assert!(gap.abs() < 1e-15);

        // phi = 0: E[X^2] = 1 and E[(X - E[X|Y])^2] = 1 - (0.4/4 + 0.6/9).
        let optimum: f64 = 1.0 - (0.4 * 0.25 + 0.6 / 9.0);
        assert!((optimum - 0.833_333_333_333_333_4).abs() < 1e-15);
        let gap = best_predictor_gap(&sp, &x, &y, |_| Some(0.0)).unwrap();
        assert!((gap - (1.0 - optimum)).abs() < 1e-15);

        let sp = FiniteSampleSpace::from_weights(vec![0.25; 4]).unwrap();
        let x = RandomVariable::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = RandomVariable::new(vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let mean = expect(&sp, &x).unwrap();
        assert!(best_predictor_gap(&sp, &x, &y, |_| Some(mean)).unwrap() > 0.0);
    }

    #[test]
    fn best_predictor_gap_missing_level() {
        let (sp, x, y) = spin_space([0.1, 0.2, 0.3, 0.4]);
        let err = best_predictor_gap(&sp, &x, &y, |l| (l > 0.0).then_some(1.0)).unwrap_err();
        assert_eq!(err, Error::MissingLevel(-1.0));
    }

    #[test]
    fn defining_property_examples() {
        let (sp, x, y) = spin_space([0.1, 0.2, 0.3, 0.4]);
        assert!(defining_property_check(&sp, &x, &y, |_| 1.0).unwrap() <= 1e-12);
        assert!(
            defining_property_check(&sp, &x, &y, |l| if l == 1.0 { 1.0 } else { 0.0 }).unwrap()
                <= 1e-12
        );
    }

    #[test]
    fn tower_examples() {
        let (sp, x, y) = spin_space([0.1, 0.2, 0.3, 0.4]);
        assert!(tower_check(&sp, &x, &y, 1.0).unwrap() <= 1e-12);
        let (sp, x, y) = spin_space([0.25; 4]);
        assert!(tower_check(&sp, &x, &y, -1.0).unwrap() <= 1e-12);
        let sp = FiniteSampleSpace::from_weights(vec![0.5, 0.5, 0.0]).unwrap();
        let x = RandomVariable::new(vec![1.0, 2.0, 3.0]).unwrap();
        let y = RandomVariable::new(vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(tower_check(&sp, &x, &y, 1.0).unwrap(), 0.0);
        assert_eq!(
            tower_check(&sp, &x, &y, 2.0),
            Err(Error::ZeroProbabilityEvent)
        );
    }

    #[test]
    fn zero_total_spin_forces_opposite() {
        let (sp, x, y) = spin_space([0.1, 0.2, 0.3, 0.4]);
        assert_eq!(zero_total_spin_probability(&sp, &x, &y).unwrap(), 1.0);
    }

    #[test]
    fn sample_space_exchange_format() {
        let sp: FiniteSampleSpace =
            serde_json::from_str(r#"{"outcomes":["up","down"],"weights":[0.25,0.75]}"#).unwrap();
        assert_eq!(sp.outcomes(), &["up".to_string(), "down".to_string()]);
        assert!(
            serde_json::from_str::<FiniteSampleSpace>(r#"{"outcomes":["a"],"weights":[0.5]}"#)
                .is_err()
        );

        let doc: SampleSpaceDocument = serde_json::from_str(
            r#"{"outcomes":["a","b"],"weights":[0.5,0.5],"variables":{"X":[1,-1]}}"#,
        )
        .unwrap();
        assert_eq!(expect(&doc.space, &doc.variables["X"]).unwrap(), 0.0);
        assert!(serde_json::from_str::<SampleSpaceDocument>(
            r#"{"outcomes":["a","b"],"weights":[0.5,0.5],"variables":{"X":[1]}}"#
        )
        .is_err());
    }
}
