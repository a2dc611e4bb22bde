//! Builders and closed forms for the interference, atom/photon and spin-pair
//! scenarios.
//!
//! # Two-source interference
//!
//! The detector observable `A = e^{-itH}|x><x|e^{itH}` (particle mode) or
//! `A = (E - H)^{-1}|x><x|(E - H)^{-1}` (wave mode) only enters through its
//! matrix elements on `span{|x+>, |x->}`. With `v = (amp(x, x+), amp(x, x-))`
//! those are `A_{mu nu} = conj(v_mu) v_nu`, a rank-one Gram dyad, so the whole
//! computation reduces to 2x2 matrices over the source basis.
//!
//! The free propagator is the unit-mass, `hbar = 1` kernel in three
//! dimensions, `(2 pi i t)^{-3/2} exp(i |x - x'|^2 / 2t)` with the principal
//! branch of the power. The wave amplitude is `e^{i omega r} / r` with
//! `omega = sqrt(2E)`.
//!
//! # Composite scenarios
//!
//! Both composite systems live on `C^2 ⊗ C^2` with the first factor most
//! significant.
//!
//! * Atom/photon: `index = 2 * atom + photon`, occupation 0 or 1 each, and
//!   `psi0 = a|1,0> + b|0,1>`.
//! * Spin pair: spin `+1` is local index 0 and `-1` is local index 1, so
//!   `|+1,-1>` has index 1 and `|-1,+1>` has index 2; `psi0 = a|+1,-1> + b|-1,+1>`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::ProjectorFamily;
use crate::conditional::{conditional_expectation, reduce_state, ConditionalExpectation};
use crate::error::{Error, Result};
use crate::operator::{tensor, DensityOperator, Ket, Operator};
use crate::{IDENTITY_TOL, VALIDATION_TOL};

pub type Point = [f64; 3];

fn distance(x: &Point, y: &Point) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// `K_t(x; x') = <x'| e^{-itH} |x>` for a free unit-mass particle.
pub fn free_propagator(x: &Point, x_prime: &Point, t: f64) -> Result<Complex64> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::NonPositiveTime(t));
    }
    let r2 = {
        let r = distance(x, x_prime);
        r * r
    };
    let prefactor = Complex64::new(0.0, 2.0 * std::f64::consts::PI * t).powf(-1.5);
    Ok(prefactor * Complex64::from_polar(1.0, r2 / (2.0 * t)))
}

/// `e^{i omega r} / r` with `r = |x - x'|`, `omega = sqrt(2E)`.
pub fn helmholtz_green(x: &Point, x_prime: &Point, energy: f64) -> Result<Complex64> {
    if energy.is_nan() || energy <= 0.0 {
        return Err(Error::NonPositiveEnergy(energy));
    }
    let r = distance(x, x_prime);
    if r == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    let omega = (2.0 * energy).sqrt();
    Ok(Complex64::from_polar(1.0 / r, omega * r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Particle,
    Wave,
}

/// Two sources in superposition `a|+> + b|->`, one detector point.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSourceConfig {
    pub a: Complex64,
    pub b: Complex64,
    pub x_plus: Point,
    pub x_minus: Point,
    pub x_detect: Point,
    pub mode: Mode,
    /// Propagation time, particle mode.
    pub t: f64,
    /// Energy, wave mode.
    pub energy: f64,
}

impl TwoSourceConfig {
    /// Sources at `(0, 0, ±1)`, detector at the origin.
    pub fn symmetric(a: Complex64, b: Complex64, mode: Mode) -> Self {
        Self {
            a,
            b,
            x_plus: [0.0, 0.0, 1.0],
            x_minus: [0.0, 0.0, -1.0],
            x_detect: [0.0; 3],
            mode,
            t: 1.0,
            energy: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_amplitudes(self.a, self.b)?;
        match self.mode {
            Mode::Particle if self.t.is_nan() || self.t <= 0.0 => {
                Err(Error::NonPositiveTime(self.t))
            }
            Mode::Wave if self.energy.is_nan() || self.energy <= 0.0 => {
                Err(Error::NonPositiveEnergy(self.energy))
            }
            Mode::Wave if self.x_detect == self.x_plus || self.x_detect == self.x_minus => {
                Err(Error::CoincidentPoints)
            }
            _ => Ok(()),
        }
    }

    /// `(amp(x, x+), amp(x, x-))` for the configured mode.
    pub fn amplitudes(&self) -> Result<[Complex64; 2]> {
        let amp = |source: &Point| match self.mode {
            Mode::Particle => free_propagator(&self.x_detect, source, self.t),
            Mode::Wave => helmholtz_green(&self.x_detect, source, self.energy),
        };
        Ok([amp(&self.x_plus)?, amp(&self.x_minus)?])
    }

    pub fn build(&self) -> Result<TwoSourceModel> {
        build_two_source(self)
    }
}

fn check_amplitudes(a: Complex64, b: Complex64) -> Result<()> {
    let total = a.norm_sqr() + b.norm_sqr();
    if (total - 1.0).abs() > IDENTITY_TOL {
        return Err(Error::InvalidConfig(format!(
            "|a|^2 + |b|^2 = {total} (must equal 1 within {IDENTITY_TOL:e})"
        )));
    }
    Ok(())
}

/// The two-source scenario on the source basis `{|+>, |->}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSourceModel {
    pub config: TwoSourceConfig,
    pub state: DensityOperator,
    pub family: ProjectorFamily,
    pub observable: Operator,
    pub amplitudes: [Complex64; 2],
}

pub fn build_two_source(cfg: &TwoSourceConfig) -> Result<TwoSourceModel> {
    cfg.validate()?;
    let amplitudes = cfg.amplitudes()?;
    let psi = Ket::new(vec![cfg.a, cfg.b])?;
    let conj = Ket::new(amplitudes.iter().map(|z| z.conj()).collect())?;
    Ok(TwoSourceModel {
        config: cfg.clone(),
        state: DensityOperator::pure(&psi)?,
        family: ProjectorFamily::computational_basis(2),
        observable: Operator::outer(&conj, &conj)?,
        amplitudes,
    })
}

impl TwoSourceModel {
    /// `|a v+ + b v-|^2`: detector intensity with no which-source observation.
    pub fn unconditional_intensity(&self) -> f64 {
        let [vp, vm] = self.amplitudes;
        (self.config.a * vp + self.config.b * vm).norm_sqr()
    }

    /// `(|v+|^2, |v-|^2)`.
    pub fn branch_intensities(&self) -> [f64; 2] {
        self.amplitudes.map(|v| v.norm_sqr())
    }

    /// The conditional expectation of the detector observable given the
    /// which-source algebra.
    pub fn conditioned_predictor(&self) -> Result<ConditionalExpectation> {
        let weights = [self.config.a.norm_sqr(), self.config.b.norm_sqr()];
        if let Some(index) = weights.iter().position(|&p| p <= VALIDATION_TOL) {
            return Err(Error::ZeroProbabilityBranch {
                index,
                weight: weights[index],
            });
        }
        conditional_expectation(&self.state, &self.observable, &self.family)
    }

    /// `|a|^2 |v+|^2 + |b|^2 |v-|^2`.
    pub fn averaged_predictor_expectation(&self) -> f64 {
        let [ip, im] = self.branch_intensities();
        self.config.a.norm_sqr() * ip + self.config.b.norm_sqr() * im
    }

    /// `2 Re(conj(a) b conj(v+) v-)`, the difference between the coherent and
    /// the branch-averaged intensities.
    pub fn interference_term(&self) -> f64 {
        let [vp, vm] = self.amplitudes;
        2.0 * (self.config.a.conj() * self.config.b * vp.conj() * vm).re
    }
}

pub fn unconditional_intensity(cfg: &TwoSourceConfig) -> Result<f64> {
    Ok(build_two_source(cfg)?.unconditional_intensity())
}

pub fn conditioned_predictor(cfg: &TwoSourceConfig) -> Result<ConditionalExpectation> {
    build_two_source(cfg)?.conditioned_predictor()
}

pub fn averaged_predictor_expectation(cfg: &TwoSourceConfig) -> Result<f64> {
    Ok(build_two_source(cfg)?.averaged_predictor_expectation())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompositeKind {
    Cat,
    Epr,
}

/// A two-qubit scenario: pure initial state, observation family on the
/// second factor, conserved charge.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeScenario {
    pub kind: CompositeKind,
    pub a: Complex64,
    pub b: Complex64,
    pub psi: Ket,
    pub state: DensityOperator,
    /// Observation family on the second subsystem.
    pub family: ProjectorFamily,
    /// Complete family on the first subsystem, measured after observation.
    pub target_family: ProjectorFamily,
    pub charge: Operator,
    /// Eigenvalue of `charge` on `psi`.
    pub charge_eigenvalue: f64,
}

fn local_projector(index: usize) -> Operator {
    let mut diag = [0.0; 2];
    diag[index] = 1.0;
    Operator::from_real_diagonal(&diag)
}

fn first(index: usize) -> Operator {
    tensor(&local_projector(index), &Operator::identity(2))
}

fn second(index: usize) -> Operator {
    tensor(&Operator::identity(2), &local_projector(index))
}

fn additive_charge(local: &Operator) -> Operator {
    &tensor(local, &Operator::identity(2)) + &tensor(&Operator::identity(2), local)
}

fn two_term_state(a: Complex64, idx_a: usize, b: Complex64, idx_b: usize) -> Result<Ket> {
    let mut entries = vec![Complex64::new(0.0, 0.0); 4];
    entries[idx_a] = a;
    entries[idx_b] = b;
    Ket::new(entries)
}

/// Atom/photon system, `psi0 = a|1,0> + b|0,1>`.
///
/// Observation family `{B0, B1} = {I ⊗ |0><0|, I ⊗ |1><1|}` (photon count);
/// target family `{ground, excited}` on the atom; charge `C = C1 ⊗ I + I ⊗ C2`
/// with `C_i = diag(0, 1)` and eigenvalue 1.
pub fn build_cat(a: Complex64, b: Complex64) -> Result<CompositeScenario> {
    check_amplitudes(a, b).map_err(|_| Error::NotNormalized {
        norm_sq: a.norm_sqr() + b.norm_sqr(),
    })?;
    let psi = two_term_state(a, 2, b, 1)?;
    Ok(CompositeScenario {
        kind: CompositeKind::Cat,
        a,
        b,
        state: DensityOperator::pure(&psi)?,
        psi,
        family: ProjectorFamily::new(vec![second(0), second(1)])?,
        target_family: ProjectorFamily::new(vec![first(0), first(1)])?,
        charge: additive_charge(&Operator::from_real_diagonal(&[0.0, 1.0])),
        charge_eigenvalue: 1.0,
    })
}

/// Spin pair, `psi0 = a|+1,-1> + b|-1,+1>`.
///
/// Observation family `{I ⊗ |+1><+1|, I ⊗ |-1><-1|}` (second particle);
/// target family `{+1, -1}` on the first particle; charge `L = L1 ⊗ I + I ⊗ L2`
/// with `L_i = diag(+1, -1)` and eigenvalue 0.
pub fn build_epr(a: Complex64, b: Complex64) -> Result<CompositeScenario> {
    check_amplitudes(a, b).map_err(|_| Error::NotNormalized {
        norm_sq: a.norm_sqr() + b.norm_sqr(),
    })?;
    let psi = two_term_state(a, 1, b, 2)?;
    Ok(CompositeScenario {
        kind: CompositeKind::Epr,
        a,
        b,
        state: DensityOperator::pure(&psi)?,
        psi,
        family: ProjectorFamily::new(vec![second(0), second(1)])?,
        target_family: ProjectorFamily::new(vec![first(0), first(1)])?,
        charge: additive_charge(&Operator::from_real_diagonal(&[1.0, -1.0])),
        charge_eigenvalue: 0.0,
    })
}

impl CompositeScenario {
    /// `||charge psi0 - lambda psi0||`.
    pub fn charge_residual(&self) -> f64 {
        let image = self.charge.apply(&self.psi).expect("dims agree");
        image
            .distance(&self.psi.scale(Complex64::new(self.charge_eigenvalue, 0.0)))
            .expect("dims agree")
    }

    /// Born weight of observation branch `j`.
    pub fn observation_probability(&self, j: usize) -> f64 {
        self.state.expectation(self.family.projector(j)).unwrap().re
    }

    /// Unconditional probability of target outcome `k`.
    pub fn target_probability(&self, k: usize) -> f64 {
        self.state
            .expectation(self.target_family.projector(k))
            .unwrap()
            .re
    }

    /// Probability of target outcome `k` in the state reduced on observation
    /// branch `j`.
    pub fn conditional_probability(&self, j: usize, k: usize) -> Result<f64> {
        let reduced = reduce_state(&self.state, self.family.projector(j)).map_err(|e| match e {
            Error::ZeroProbabilityBranch { weight, .. } => {
                Error::ZeroProbabilityBranch { index: j, weight }
            }
            other => other,
        })?;
        Ok(reduced.expectation(self.target_family.projector(k))?.re)
    }
}

/// Index of the photon branch in the atom/photon observation family.
pub const PHOTON: usize = 1;
/// Index of the no-photon branch.
pub const NO_PHOTON: usize = 0;
/// Index of the atom ground state in the atom/photon target family.
pub const GROUND: usize = 0;
pub const EXCITED: usize = 1;
/// Spin `+1` and `-1` indices in both spin-pair families.
pub const SPIN_UP: usize = 0;
pub const SPIN_DOWN: usize = 1;

/// Probability that the atom is in its ground state once a photon is seen.
pub fn cat_conditional_ground(a: Complex64, b: Complex64) -> Result<f64> {
    build_cat(a, b)?.conditional_probability(PHOTON, GROUND)
}

/// Probability that the first spin is `+1` once the second is seen at `-1`.
pub fn epr_conditional_first_up(a: Complex64, b: Complex64) -> Result<f64> {
    build_epr(a, b)?.conditional_probability(SPIN_DOWN, SPIN_UP)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioKind {
    #[serde(rename = "double-slit")]
    DoubleSlit,
    #[serde(rename = "cat")]
    Cat,
    #[serde(rename = "epr")]
    Epr,
}

/// Which observation branch to condition on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observe {
    None,
    Plus,
    Minus,
    Photon,
    NoPhoton,
}

impl ScenarioKind {
    fn default_observe(self) -> Observe {
        match self {
            ScenarioKind::DoubleSlit => Observe::None,
            ScenarioKind::Cat => Observe::Photon,
            ScenarioKind::Epr => Observe::Minus,
        }
    }
}

fn default_t() -> f64 {
    1.0
}

fn default_energy() -> f64 {
    1.0
}

fn default_plus() -> Point {
    [0.0, 0.0, 1.0]
}

fn default_minus() -> Point {
    [0.0, 0.0, -1.0]
}

/// Scenario configuration as exchanged in files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub a: [f64; 2],
    pub b: [f64; 2],
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_t")]
    pub t: f64,
    #[serde(default = "default_energy")]
    pub energy: f64,
    #[serde(default)]
    pub x_detect: Point,
    #[serde(default = "default_plus")]
    pub x_plus: Point,
    #[serde(default = "default_minus")]
    pub x_minus: Point,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observe: Option<Observe>,
}

/// A validated scenario ready for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    TwoSource(TwoSourceModel),
    Composite(CompositeScenario),
}

impl ScenarioConfig {
    pub fn new(kind: ScenarioKind, a: Complex64, b: Complex64) -> Self {
        Self {
            kind,
            a: [a.re, a.im],
            b: [b.re, b.im],
            mode: Mode::default(),
            t: default_t(),
            energy: default_energy(),
            x_detect: [0.0; 3],
            x_plus: default_plus(),
            x_minus: default_minus(),
            observe: None,
        }
    }

    pub fn a(&self) -> Complex64 {
        Complex64::new(self.a[0], self.a[1])
    }

    pub fn b(&self) -> Complex64 {
        Complex64::new(self.b[0], self.b[1])
    }

    /// The branch to condition on, defaulting per kind.
    pub fn observe(&self) -> Observe {
        self.observe.unwrap_or(self.kind.default_observe())
    }

    /// Index of the observed branch in the scenario's observation family,
    /// `None` when nothing is observed.
    pub fn observed_branch(&self) -> Result<Option<usize>> {
        use Observe::*;
        let branch = match (self.kind, self.observe()) {
            (_, None) => return Ok(Option::None),
            (ScenarioKind::DoubleSlit, Plus) => 0,
            (ScenarioKind::DoubleSlit, Minus) => 1,
            (ScenarioKind::Cat, Photon) => PHOTON,
            (ScenarioKind::Cat, NoPhoton) => NO_PHOTON,
            (ScenarioKind::Epr, Plus) => SPIN_UP,
            (ScenarioKind::Epr, Minus) => SPIN_DOWN,
            (kind, obs) => {
                return Err(Error::InvalidConfig(format!(
                    "observe {obs:?} is not defined for {kind:?}"
                )))
            }
        };
        Ok(Some(branch))
    }

    pub fn two_source(&self) -> TwoSourceConfig {
        TwoSourceConfig {
            a: self.a(),
            b: self.b(),
            x_plus: self.x_plus,
            x_minus: self.x_minus,
            x_detect: self.x_detect,
            mode: self.mode,
            t: self.t,
            energy: self.energy,
        }
    }

    pub fn build(&self) -> Result<Scenario> {
        let finite = self
            .a
            .iter()
            .chain(&self.b)
            .chain(&[self.t, self.energy])
            .all(|v| v.is_finite())
            && self
                .x_detect
                .iter()
                .chain(&self.x_plus)
                .chain(&self.x_minus)
                .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidConfig(
                "all numeric fields must be finite".into(),
            ));
        }
        check_amplitudes(self.a(), self.b())?;
        self.observed_branch()?;
        Ok(match self.kind {
            ScenarioKind::DoubleSlit => Scenario::TwoSource(build_two_source(&self.two_source())?),
            ScenarioKind::Cat => Scenario::Composite(build_cat(self.a(), self.b())?),
            ScenarioKind::Epr => Scenario::Composite(build_epr(self.a(), self.b())?),
        })
    }
}

impl Scenario {
    pub fn state(&self) -> &DensityOperator {
        match self {
            Scenario::TwoSource(m) => &m.state,
            Scenario::Composite(c) => &c.state,
        }
    }

    pub fn family(&self) -> &ProjectorFamily {
        match self {
            Scenario::TwoSource(m) => &m.family,
            Scenario::Composite(c) => &c.family,
        }
    }
}
