use std::fmt::Write as _;

use qpredict_core::conditional::{defining_property_residual, optimality_report};
use qpredict_core::sampler::{
    binomial_bound, deviation_report, run_experiment, DeviationReport, MeasurementPlan,
};
use qpredict_core::scenarios::{CompositeKind, Scenario, GROUND, SPIN_UP};
use qpredict_core::{
    Operator, OptimalityReport, SampleReport, ScenarioConfig, IDENTITY_TOL, VALIDATION_TOL,
};
use serde::Serialize;
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Labeled {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalValue {
    pub given: String,
    pub outcome: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Analytic {
    pub observation_probabilities: Vec<Labeled>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observed: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unconditional_intensity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch_intensities: Option<Vec<Labeled>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conditioned_coefficients: Option<Vec<Labeled>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observed_intensity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub averaged_predictor_expectation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interference_term: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_probabilities: Option<Vec<Labeled>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conditional_probabilities: Option<Vec<ConditionalValue>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub charge_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, tol: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            tol,
            passed: value <= tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    /// Echo of the input, unrounded.
    pub config: ScenarioConfig,
    pub analytic: Analytic,
    /// Absent when some observation branch has zero probability.
    pub optimality: Option<OptimalityReport>,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviation: Option<DeviationReport>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Pretty JSON with every float outside the config echo rounded to 12
    /// significant digits.
    pub fn to_machine(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report is serializable");
        if let Value::Object(map) = &mut value {
            for (key, v) in map.iter_mut() {
                if key != "config" {
                    round_floats(v);
                }
            }
        }
        let mut s = serde_json::to_string_pretty(&value).expect("value is serializable");
        s.push('\n');
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let cfg = &self.config;
        let kind = serde_json::to_value(cfg.kind).unwrap();
        let _ = writeln!(s, "scenario  {}", kind.as_str().unwrap_or_default());
        let _ = writeln!(s, "a         {}", fmt_complex(cfg.a[0], cfg.a[1]));
        let _ = writeln!(s, "b         {}", fmt_complex(cfg.b[0], cfg.b[1]));
        if let Some(obs) = &self.analytic.observed {
            let _ = writeln!(s, "observed  {obs}");
        }
        let an = &self.analytic;
        section(
            &mut s,
            "observation probabilities",
            &an.observation_probabilities,
        );
        let scalars = [
            ("unconditional intensity", an.unconditional_intensity),
            (
                "averaged predictor expectation",
                an.averaged_predictor_expectation,
            ),
            ("interference term", an.interference_term),
            ("intensity given observation", an.observed_intensity),
            ("charge residual", an.charge_residual),
        ];
        if scalars.iter().any(|(_, v)| v.is_some()) {
            let _ = writeln!(s, "\nquantities");
            for (name, v) in scalars {
                if let Some(v) = v {
                    let _ = writeln!(s, "  {name:<32} {}", fmt12(v));
                }
            }
        }
        if let Some(b) = &an.branch_intensities {
            section(&mut s, "branch intensities", b);
        }
        if let Some(c) = &an.conditioned_coefficients {
            section(&mut s, "conditioned predictor coefficients", c);
        }
        if let Some(t) = &an.target_probabilities {
            section(&mut s, "target probabilities", t);
        }
        if let Some(cp) = &an.conditional_probabilities {
            let _ = writeln!(s, "\nconditional probabilities");
            for c in cp {
                let _ = writeln!(
                    s,
                    "  {:<32} {}",
                    format!("P({} | {})", c.outcome, c.given),
                    fmt12(c.probability)
                );
            }
        }
        if let Some(o) = &self.optimality {
            let _ = writeln!(s, "\npredictor diagnostics");
            let _ = writeln!(
                s,
                "  {:<32} {}",
                "conditional coefficients",
                fmt_list(&o.conditional_coeffs)
            );
            let _ = writeln!(
                s,
                "  {:<32} {}",
                "least-squares coefficients",
                fmt_list(&o.least_squares_coeffs)
            );
            let _ = writeln!(
                s,
                "  {:<32} {}",
                "mse (conditional)",
                fmt12(o.mse_conditional)
            );
            let _ = writeln!(s, "  {:<32} {}", "mse (least squares)", fmt12(o.mse_ls));
            let _ = writeln!(
                s,
                "  {:<32} {}",
                "projection residual",
                fmt12(o.projection_residual)
            );
            let _ = writeln!(
                s,
                "  {:<32} {}",
                "pythagoras residual",
                fmt12(o.pythagoras_residual)
            );
        }
        if let Some(sample) = &self.sample {
            let _ = writeln!(s, "\nsample  shots={} seed={}", sample.shots, sample.seed);
            let _ = writeln!(
                s,
                "  {:<28} {:>10} {:>16} {:>16}",
                "outcome", "count", "frequency", "predicted"
            );
            for o in &sample.joint {
                let _ = writeln!(
                    s,
                    "  {:<28} {:>10} {:>16} {:>16}",
                    o.label,
                    o.count,
                    fmt12(o.frequency),
                    fmt12(o.predicted)
                );
            }
            for c in &sample.conditionals {
                let _ = writeln!(
                    s,
                    "  {:<28} {:>10} of {:<10} predicted {}{}",
                    format!("{} | {}", c.outcome, c.given),
                    c.hits,
                    c.conditioned_shots,
                    fmt12(c.predicted),
                    if c.certain {
                        format!("  counterexamples {}", c.counterexamples)
                    } else {
                        String::new()
                    }
                );
            }
            if let Some(d) = &self.deviation {
                let _ = writeln!(
                    s,
                    "  max deviation {}  within bound {}",
                    fmt12(d.max_abs_dev),
                    d.within_bound
                );
            }
        }
        let _ = writeln!(s, "\nchecks");
        for c in &self.checks {
            let _ = writeln!(
                s,
                "  {:<32} {:<20} tol {:<8} {}",
                c.name,
                fmt12(c.value),
                fmt12(c.tol),
                if c.passed { "PASS" } else { "FAIL" }
            );
        }
        let _ = writeln!(
            s,
            "\nresult: {}",
            if self.passed() { "PASS" } else { "FAIL" }
        );
        s
    }
}

fn section(s: &mut String, title: &str, rows: &[Labeled]) {
    let _ = writeln!(s, "\n{title}");
    for r in rows {
        let _ = writeln!(s, "  {:<32} {}", r.label, fmt12(r.value));
    }
}

fn fmt_list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|&x| fmt12(x)).collect();
    format!("[{}]", parts.join(", "))
}

fn fmt_complex(re: f64, im: f64) -> String {
    if im < 0.0 {
        format!("{} - {}i", fmt12(re), fmt12(-im))
    } else {
        format!("{} + {}i", fmt12(re), fmt12(im))
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `%.12g`-style formatting.
pub fn fmt12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let fixed = format!("{:.*}", (11 - exp) as usize, x);
        trim_fraction(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_fraction(mantissa))
    }
}

pub fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        x
    } else {
        fmt12(x).parse().expect("formatted float parses")
    }
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round12(n.as_f64().expect("f64 number"));
            if let Some(r) = serde_json::Number::from_f64(x) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

fn labeled(labels: &[String], values: &[f64]) -> Vec<Labeled> {
    labels
        .iter()
        .zip(values)
        .map(|(l, &v)| Labeled {
            label: l.clone(),
            value: v,
        })
        .collect()
}

/// Evaluates a configuration and runs its contract checks; with `sample`
/// set, also runs the Monte Carlo comparison for `(shots, seed)`.
pub fn build_report(
    config: &ScenarioConfig,
    sample: Option<(u64, u64)>,
) -> Result<RunReport, CliError> {
    let scenario = config.build()?;
    let observed = config.observed_branch()?;
    let plan = MeasurementPlan::for_scenario(&scenario)?;
    let obs_labels = &plan.observe.labels;
    let state = scenario.state();
    let family = scenario.family();
    let weights: Vec<f64> = family
        .projectors()
        .iter()
        .map(|b| state.expectation(b).map(|z| z.re))
        .collect::<Result<_, _>>()?;
    if let Some(j) = observed {
        if weights[j] <= VALIDATION_TOL {
            return Err(CliError::Input(format!(
                "observed branch {} has probability {} (must be positive)",
                obs_labels[j], weights[j]
            )));
        }
    }

    let mut analytic = Analytic {
        observation_probabilities: labeled(obs_labels, &weights),
        observed: observed.map(|j| obs_labels[j].clone()),
        ..Analytic::default()
    };
    let mut checks = vec![Check::at_most(
        "born-normalization",
        (weights.iter().sum::<f64>() - 1.0).abs(),
        VALIDATION_TOL,
    )];

    let target: Operator = match &scenario {
        Scenario::TwoSource(model) => {
            let unconditional = model.unconditional_intensity();
            let averaged = model.averaged_predictor_expectation();
            let interference = model.interference_term();
            let scale = unconditional.abs().max(averaged.abs()).max(1.0);
            analytic.unconditional_intensity = Some(unconditional);
            analytic.averaged_predictor_expectation = Some(averaged);
            analytic.interference_term = Some(interference);
            analytic.branch_intensities = Some(labeled(obs_labels, &model.branch_intensities()));
            checks.push(Check::at_most(
                "interference-decomposition",
                (unconditional - averaged - interference).abs() / scale,
                VALIDATION_TOL,
            ));
            if let Ok(ce) = model.conditioned_predictor() {
                let coeffs = ce.coeffs().to_vec();
                let mean: f64 = coeffs.iter().zip(&weights).map(|(c, p)| c * p).sum();
                checks.push(Check::at_most(
                    "predictor-mean",
                    (mean - averaged).abs() / scale,
                    VALIDATION_TOL,
                ));
                analytic.observed_intensity = observed.map(|j| coeffs[j]);
                analytic.conditioned_coefficients = Some(labeled(obs_labels, &coeffs));
            }
            model.observable.clone()
        }
        Scenario::Composite(c) => {
            let target_labels = &plan
                .measure
                .as_ref()
                .expect("composite plans measure")
                .labels;
            let target_probs: Vec<f64> = (0..c.target_family.len())
                .map(|k| c.target_probability(k))
                .collect();
            analytic.target_probabilities = Some(labeled(target_labels, &target_probs));
            analytic.charge_residual = Some(c.charge_residual());
            checks.push(Check::at_most(
                "conserved-charge",
                c.charge_residual(),
                IDENTITY_TOL,
            ));
            let mut conditionals = Vec::new();
            for (j, &p) in weights.iter().enumerate() {
                if p <= VALIDATION_TOL {
                    continue;
                }
                let mut best: f64 = 0.0;
                for (k, label) in target_labels.iter().enumerate() {
                    let q = c.conditional_probability(j, k)?;
                    best = best.max(q);
                    conditionals.push(ConditionalValue {
                        given: obs_labels[j].clone(),
                        outcome: label.clone(),
                        probability: q,
                    });
                }
                checks.push(Check::at_most(
                    &format!("certainty given {}", obs_labels[j]),
                    (best - 1.0).abs(),
                    IDENTITY_TOL,
                ));
            }
            analytic.conditional_probabilities = Some(conditionals);
            let k = match c.kind {
                CompositeKind::Cat => GROUND,
                CompositeKind::Epr => SPIN_UP,
            };
            c.target_family.projector(k).clone()
        }
    };

    let scale = target.norm().max(1.0);
    for (j, &p) in weights.iter().enumerate() {
        if p > VALIDATION_TOL {
            let r = defining_property_residual(state, &target, family, &[j])?;
            checks.push(Check::at_most(
                &format!("defining-property {}", obs_labels[j]),
                r / scale,
                IDENTITY_TOL,
            ));
        }
    }
    let optimality = if weights.iter().all(|&p| p > VALIDATION_TOL) {
        let o = optimality_report(state, &target, family)?;
        checks.push(Check::at_most(
            "least-squares-optimal",
            (o.mse_ls - o.mse_conditional).max(0.0),
            IDENTITY_TOL,
        ));
        Some(o)
    } else {
        None
    };

    let (sample, deviation) = match sample {
        Some((shots, seed)) => {
            let report = run_experiment(state, &plan, shots, seed)?;
            let dev = deviation_report(&report);
            // Worst deviation in units of its own binomial bound.
            let worst = report
                .observed
                .iter()
                .chain(&report.joint)
                .map(|o| (o.frequency - o.predicted).abs() / binomial_bound(o.predicted, shots))
                .fold(0.0, f64::max);
            checks.push(Check {
                passed: dev.within_bound,
                ..Check::at_most("sample-deviation/bound", worst, 1.0)
            });
            checks.push(Check::at_most(
                "sample-counterexamples",
                report.counterexamples() as f64,
                0.0,
            ));
            (Some(report), Some(dev))
        }
        None => (None, None),
    };

    Ok(RunReport {
        config: config.clone(),
        analytic,
        optimality,
        checks,
        sample,
        deviation,
    })
}
