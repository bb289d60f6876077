//! Domain types shared across the optimizer: parameter vectors, particles,
//! swarm state, datasets, performance matrices, and objective specs.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Validation failures for the core types.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("entry {index} is not finite")]
    NonFinite { index: usize },
    #[error("vector has zero dimension")]
    DimZero,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("duplicate instance id `{0}`")]
    DuplicateId(String),
    #[error("feature {index} of instance `{id}` is {value}, outside [0, 1]")]
    FeatureOutOfRange { id: String, index: usize, value: f64 },
    #[error("matrix shape {rows}x{cols} does not match {taker_count} takers / {sample_count} samples")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        taker_count: usize,
        sample_count: usize,
    },
    #[error("score at ({row}, {col}) is {value}, outside [0, 1]")]
    ScoreOutOfRange { row: usize, col: usize, value: f64 },
    #[error("objective weights sum to {sum}, expected 1")]
    WeightSum { sum: f64 },
    #[error("invalid hyperparameters: {0}")]
    BadHyperparams(String),
    #[error("swarm has no particles")]
    EmptySwarm,
}

/// A position in weight space: a flat vector of finite reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    /// All-zero vector of the given dimension.
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Checks that the vector is non-empty and every entry is finite.
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.0.is_empty() {
            return Err(CoreError::DimZero);
        }
        for (index, v) in self.0.iter().enumerate() {
            if !v.is_finite() {
                return Err(CoreError::NonFinite { index });
            }
        }
        Ok(())
    }

    pub fn same_dim(&self, other: &ParamVector) -> Result<(), CoreError> {
        if self.dim() != other.dim() {
            return Err(CoreError::DimMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

/// One swarm member: current position, velocity, and its best-seen point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub position: ParamVector,
    pub velocity: ParamVector,
    pub personal_best: ParamVector,
    pub personal_best_score: f64,
}

impl Particle {
    /// New particle at `position` with zero velocity and an unscored best.
    pub fn at(position: ParamVector) -> Self {
        let dim = position.dim();
        Self {
            personal_best: position.clone(),
            velocity: ParamVector::zeros(dim),
            position,
            personal_best_score: f64::NEG_INFINITY,
        }
    }

    pub fn dim(&self) -> usize {
        self.position.dim()
    }
}

/// Whole-swarm bookkeeping: members plus historical global best/worst.
///
/// An uninitialized global best carries score `-inf` (and `+inf` for the
/// worst) so the first recorded evaluation installs both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmState {
    pub particles: Vec<Particle>,
    pub global_best: ParamVector,
    pub global_best_score: f64,
    pub global_worst: ParamVector,
    pub global_worst_score: f64,
    pub iteration: u32,
    /// Iterations since `global_best_score` last strictly improved.
    pub stagnation: u32,
}

impl SwarmState {
    /// Fresh swarm at the given positions: zero velocities, unscored bests.
    pub fn new(positions: Vec<ParamVector>) -> Result<Self, CoreError> {
        let dim = match positions.first() {
            Some(p) => p.dim(),
            None => return Err(CoreError::EmptySwarm),
        };
        for p in &positions {
            p.validate()?;
            if p.dim() != dim {
                return Err(CoreError::DimMismatch {
                    expected: dim,
                    got: p.dim(),
                });
            }
        }
        Ok(Self {
            particles: positions.into_iter().map(Particle::at).collect(),
            global_best: ParamVector::zeros(dim),
            global_best_score: f64::NEG_INFINITY,
            global_worst: ParamVector::zeros(dim),
            global_worst_score: f64::INFINITY,
            iteration: 0,
            stagnation: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.particles.first().map_or(0, Particle::dim)
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// True once at least one score has been recorded.
    pub fn is_scored(&self) -> bool {
        self.global_best_score.is_finite()
    }

    /// Cross-field consistency check, used after deserialization.
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.particles.is_empty() {
            return Err(CoreError::EmptySwarm);
        }
        let dim = self.dim();
        for p in &self.particles {
            p.position.validate()?;
            p.velocity.validate()?;
            p.personal_best.validate()?;
            for v in [&p.position, &p.velocity, &p.personal_best] {
                if v.dim() != dim {
                    return Err(CoreError::DimMismatch {
                        expected: dim,
                        got: v.dim(),
                    });
                }
            }
            if self.global_best_score < p.personal_best_score {
                return Err(CoreError::BadHyperparams(format!(
                    "global best {} below a personal best {}",
                    self.global_best_score, p.personal_best_score
                )));
            }
        }
        Ok(())
    }
}

/// Coefficients of the velocity update and the loop controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoHyperparams {
    /// Step length applied to the normalized velocity.
    pub step_length: f64,
    /// Inertia coefficient on the previous velocity.
    pub inertia: f64,
    /// Pull toward the personal best.
    pub cognitive: f64,
    /// Pull toward the global best.
    pub social: f64,
    /// Push away from the global worst.
    pub repel: f64,
    /// Iterations without strict global-best improvement before stopping.
    pub patience: u32,
    /// Iteration budget.
    pub max_iteration: u32,
}

impl Default for PsoHyperparams {
    /// Midpoints of the search grid, with patience 5 and budget 30.
    fn default() -> Self {
        Self {
            step_length: 0.75,
            inertia: 0.2,
            cognitive: 0.3,
            social: 0.4,
            repel: 0.05,
            patience: 5,
            max_iteration: 30,
        }
    }
}

impl PsoHyperparams {
    pub fn validate(&self) -> Result<(), CoreError> {
        if !(self.step_length.is_finite() && self.step_length > 0.0) {
            return Err(CoreError::BadHyperparams(format!(
                "step_length must be positive, got {}",
                self.step_length
            )));
        }
        for (name, v) in [
            ("inertia", self.inertia),
            ("cognitive", self.cognitive),
            ("social", self.social),
            ("repel", self.repel),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CoreError::BadHyperparams(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        if self.inertia + self.cognitive + self.social + self.repel <= 0.0 {
            return Err(CoreError::BadHyperparams(
                "coefficient sum must be positive".into(),
            ));
        }
        if self.patience == 0 {
            return Err(CoreError::BadHyperparams("patience must be positive".into()));
        }
        Ok(())
    }
}

/// One generated evaluation problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalInstance {
    pub id: String,
    pub query: String,
    #[serde(rename = "answer")]
    pub reference_answer: Option<String>,
    pub features: Option<Vec<f64>>,
    #[serde(default)]
    pub meta: BTreeMap<String, serde_json::Value>,
}

impl EvalInstance {
    pub fn validate(&self) -> Result<(), CoreError> {
        if let Some(features) = &self.features {
            for (index, &value) in features.iter().enumerate() {
                if !(value.is_finite() && (0.0..=1.0).contains(&value)) {
                    return Err(CoreError::FeatureOutOfRange {
                        id: self.id.clone(),
                        index,
                        value,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Seed,
    Generated { generator_id: String, iteration: u32 },
    Window,
}

/// An ordered collection of evaluation instances with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub instances: Vec<EvalInstance>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(instances: Vec<EvalInstance>, provenance: Provenance) -> Self {
        Self {
            instances,
            provenance,
        }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn ids(&self) -> BTreeSet<&str> {
        self.instances.iter().map(|i| i.id.as_str()).collect()
    }

    /// Non-empty, ids unique, features in range.
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.instances.is_empty() {
            return Err(CoreError::EmptyDataset);
        }
        let mut seen = BTreeSet::new();
        for inst in &self.instances {
            inst.validate()?;
            if !seen.insert(inst.id.as_str()) {
                return Err(CoreError::DuplicateId(inst.id.clone()));
            }
        }
        Ok(())
    }
}

/// Test-taker x dataset-sample score matrix; every entry in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceMatrix {
    /// Row per test taker, column per dataset sample.
    pub scores: Vec<Vec<f64>>,
    pub taker_ids: Vec<String>,
    pub sample_ids: Vec<String>,
}

impl PerformanceMatrix {
    pub fn new(
        scores: Vec<Vec<f64>>,
        taker_ids: Vec<String>,
        sample_ids: Vec<String>,
    ) -> Result<Self, CoreError> {
        let m = Self {
            scores,
            taker_ids,
            sample_ids,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn taker_count(&self) -> usize {
        self.taker_ids.len()
    }

    pub fn sample_count(&self) -> usize {
        self.sample_ids.len()
    }

    /// Mean score per test taker across all samples.
    pub fn row_means(&self) -> Vec<f64> {
        self.scores
            .iter()
            .map(|row| row.iter().sum::<f64>() / row.len() as f64)
            .collect()
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        let rows = self.scores.len();
        if rows != self.taker_ids.len() {
            return Err(CoreError::ShapeMismatch {
                rows,
                cols: self.scores.first().map_or(0, Vec::len),
                taker_count: self.taker_ids.len(),
                sample_count: self.sample_ids.len(),
            });
        }
        for (row, r) in self.scores.iter().enumerate() {
            if r.len() != self.sample_ids.len() {
                return Err(CoreError::ShapeMismatch {
                    rows,
                    cols: r.len(),
                    taker_count: self.taker_ids.len(),
                    sample_count: self.sample_ids.len(),
                });
            }
            for (col, &value) in r.iter().enumerate() {
                if !(value.is_finite() && (0.0..=1.0).contains(&value)) {
                    return Err(CoreError::ScoreOutOfRange { row, col, value });
                }
            }
        }
        Ok(())
    }
}

/// The five objective kinds.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    Difficult,
    Separate,
    Novel,
    Consistent,
    Personalized,
}

impl std::fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Self::Difficult => "difficult",
            Self::Separate => "separate",
            Self::Novel => "novel",
            Self::Consistent => "consistent",
            Self::Personalized => "personalized",
        };
        f.write_str(name)
    }
}

/// Which objectives to optimize and how to weight them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    /// (kind, weight) pairs; weights must sum to 1 when more than one.
    pub components: Vec<(ObjectiveKind, f64)>,
    /// Datasets drawn per evaluation when `consistent` is requested.
    #[serde(default = "default_resample_count")]
    pub resample_count: u32,
    /// Neighbors averaged per generated instance for `personalized`.
    #[serde(default = "default_topk")]
    pub topk: u32,
}

fn default_resample_count() -> u32 {
    3
}

fn default_topk() -> u32 {
    5
}

impl ObjectiveSpec {
    /// Single objective with weight 1.
    pub fn single(kind: ObjectiveKind) -> Self {
        Self {
            components: vec![(kind, 1.0)],
            resample_count: default_resample_count(),
            topk: default_topk(),
        }
    }

    pub fn weighted(components: Vec<(ObjectiveKind, f64)>) -> Self {
        Self {
            components,
            resample_count: default_resample_count(),
            topk: default_topk(),
        }
    }

    pub fn wants(&self, kind: ObjectiveKind) -> bool {
        self.components.iter().any(|(k, _)| *k == kind)
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if self.components.is_empty() {
            return Err(CoreError::BadHyperparams(
                "objective spec has no components".into(),
            ));
        }
        for &(_, w) in &self.components {
            if !(w.is_finite() && w >= 0.0) {
                return Err(CoreError::BadHyperparams(format!(
                    "component weight must be non-negative, got {w}"
                )));
            }
        }
        if self.components.len() > 1 {
            let sum: f64 = self.components.iter().map(|(_, w)| w).sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(CoreError::WeightSum { sum });
            }
        }
        if self.resample_count == 0 {
            return Err(CoreError::BadHyperparams(
                "resample_count must be positive".into(),
            ));
        }
        if self.topk == 0 {
            return Err(CoreError::BadHyperparams("topk must be positive".into()));
        }
        Ok(())
    }
}

/// Free-standing form of the validate operation on parameter vectors.
pub fn validate(vector: &ParamVector) -> Result<(), CoreError> {
    vector.validate()
}
