//! The five evaluation objectives and their weighted composition.
//!
//! Everything here is a pure function of performance values or embeddings;
//! nothing touches models, datasets, or randomness.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{ObjectiveKind, ObjectiveSpec, PerformanceMatrix};

/// Additive smoothing applied before converting performances to distributions.
pub const KL_EPSILON: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error("performance vector is empty")]
    EmptyInput,
    #[error("separate needs at least two models, got {got}")]
    NeedTwoModels { got: usize },
    #[error("consistent needs at least two resamples, got {got}")]
    NeedTwoSamples { got: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("user repository is empty")]
    EmptyRepository,
    #[error("no value supplied for component `{0}`")]
    MissingComponent(ObjectiveKind),
    #[error("entry {index} is {value}, outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("embedding dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
}

/// Per-component values plus their weighted composition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveReport {
    pub per_component: BTreeMap<ObjectiveKind, f64>,
    pub composite: f64,
}

fn check_unit_range(perf: &[f64]) -> Result<(), ObjectiveError> {
    for (index, &value) in perf.iter().enumerate() {
        if !(value.is_finite() && (0.0..=1.0).contains(&value)) {
            return Err(ObjectiveError::OutOfRange { index, value });
        }
    }
    Ok(())
}

/// One minus the best test-taker performance; high when everyone struggles.
pub fn difficult(perf: &[f64]) -> Result<f64, ObjectiveError> {
    if perf.is_empty() {
        return Err(ObjectiveError::EmptyInput);
    }
    check_unit_range(perf)?;
    let max = perf.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(1.0 - max)
}

/// Mean gap between consecutive performances after sorting ascending.
///
/// Telescopes to `(max - min) / (n - 1)`.
pub fn separate(perf: &[f64]) -> Result<f64, ObjectiveError> {
    if perf.len() < 2 {
        return Err(ObjectiveError::NeedTwoModels { got: perf.len() });
    }
    check_unit_range(perf)?;
    let mut sorted = perf.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("entries are finite"));
    let gaps: f64 = sorted.windows(2).map(|w| w[1] - w[0]).sum();
    Ok(gaps / (sorted.len() - 1) as f64)
}

/// Population standard deviation.
fn population_std(row: &[f64]) -> f64 {
    let n = row.len() as f64;
    let mean = row.iter().sum::<f64>() / n;
    (row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
}

/// One minus the mean per-taker standard deviation across resampled datasets.
///
/// Rows of `samples` are test takers, columns are the k resamples.
pub fn consistent(samples: &PerformanceMatrix) -> Result<f64, ObjectiveError> {
    let k = samples.sample_count();
    if k < 2 {
        return Err(ObjectiveError::NeedTwoSamples { got: k });
    }
    if samples.taker_count() == 0 {
        return Err(ObjectiveError::EmptyInput);
    }
    let mean_std = samples.scores.iter().map(|row| population_std(row)).sum::<f64>()
        / samples.taker_count() as f64;
    Ok(1.0 - mean_std)
}

/// Smooths by `KL_EPSILON` and normalizes to a probability distribution.
fn to_distribution(perf: &[f64]) -> Vec<f64> {
    let smoothed: Vec<f64> = perf.iter().map(|&v| v + KL_EPSILON).collect();
    let total: f64 = smoothed.iter().sum();
    smoothed.into_iter().map(|v| v / total).collect()
}

/// KL divergence of the generated performance profile from the baseline one.
///
/// Both arrays are smoothed and normalized first, so the result is defined
/// for all-zero inputs and is zero exactly when the profiles are proportional.
pub fn novel(perf_gen: &[f64], perf_base: &[f64]) -> Result<f64, ObjectiveError> {
    if perf_gen.len() != perf_base.len() {
        return Err(ObjectiveError::LengthMismatch {
            left: perf_gen.len(),
            right: perf_base.len(),
        });
    }
    if perf_gen.is_empty() {
        return Err(ObjectiveError::EmptyInput);
    }
    check_unit_range(perf_gen)?;
    check_unit_range(perf_base)?;
    let p = to_distribution(perf_gen);
    let q = to_distribution(perf_base);
    let kl = p
        .iter()
        .zip(&q)
        .map(|(&pi, &qi)| pi * (pi / qi).ln())
        .sum::<f64>();
    // Gibbs' inequality gives kl >= 0; rounding can leave a tiny negative.
    Ok(kl.max(0.0))
}

fn cosine(a: &[f64], b: &[f64]) -> Result<f64, ObjectiveError> {
    if a.len() != b.len() {
        return Err(ObjectiveError::DimMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok(dot / (na * nb))
}

/// Mean over generated embeddings of the average similarity to the top-k
/// most similar user embeddings.
pub fn personalized(
    gen_embeddings: &[Vec<f64>],
    user_embeddings: &[Vec<f64>],
    topk: usize,
) -> Result<f64, ObjectiveError> {
    if user_embeddings.is_empty() {
        return Err(ObjectiveError::EmptyRepository);
    }
    if gen_embeddings.is_empty() {
        return Err(ObjectiveError::EmptyInput);
    }
    let take = topk.max(1).min(user_embeddings.len());
    let mut total = 0.0;
    for gen in gen_embeddings {
        let mut sims = Vec::with_capacity(user_embeddings.len());
        for user in user_embeddings {
            sims.push(cosine(gen, user)?);
        }
        sims.sort_by(|a, b| b.partial_cmp(a).expect("similarities are finite"));
        total += sims[..take].iter().sum::<f64>() / take as f64;
    }
    Ok(total / gen_embeddings.len() as f64)
}

/// Weighted composition of already-computed component values.
pub fn composite(
    spec: &ObjectiveSpec,
    component_values: &BTreeMap<ObjectiveKind, f64>,
) -> Result<ObjectiveReport, ObjectiveError> {
    let mut per_component = BTreeMap::new();
    let mut total = 0.0;
    for &(kind, weight) in &spec.components {
        let value = *component_values
            .get(&kind)
            .ok_or(ObjectiveError::MissingComponent(kind))?;
        per_component.insert(kind, value);
        total += weight * value;
    }
    Ok(ObjectiveReport {
        per_component,
        composite: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matrix(rows: Vec<Vec<f64>>) -> PerformanceMatrix {
        let takers = (0..rows.len()).map(|i| format!("t{i}")).collect();
        let samples = (0..rows[0].len()).map(|j| format!("s{j}")).collect();
        PerformanceMatrix::new(rows, takers, samples).unwrap()
    }

    #[test]
    fn difficult_examples() {
        assert_eq!(difficult(&[0.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(difficult(&[1.0]).unwrap(), 0.0);
        assert!((difficult(&[0.2, 0.5, 0.3]).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(difficult(&[]), Err(ObjectiveError::EmptyInput)));
    }

    #[test]
    fn separate_examples() {
        assert_eq!(separate(&[0.4, 0.4, 0.4]).unwrap(), 0.0);
        assert_eq!(separate(&[0.0, 1.0]).unwrap(), 1.0);
        assert!((separate(&[0.1, 0.9, 0.4]).unwrap() - 0.4).abs() < 1e-15);
        assert!(matches!(
            separate(&[0.5]),
            Err(ObjectiveError::NeedTwoModels { got: 1 })
        ));
    }

    #[test]
    fn consistent_examples() {
        let m = matrix(vec![vec![0.3, 0.3, 0.3], vec![0.8, 0.8, 0.8]]);
        assert_eq!(consistent(&m).unwrap(), 1.0);

        let m = matrix(vec![vec![0.0, 1.0]]);
        assert!((consistent(&m).unwrap() - 0.5).abs() < 1e-15);

        let m = matrix(vec![vec![0.2, 0.4], vec![0.6, 0.6]]);
        assert!((consistent(&m).unwrap() - 0.95).abs() < 1e-12);

        let m = matrix(vec![vec![0.5]]);
        assert!(matches!(
            consistent(&m),
            Err(ObjectiveError::NeedTwoSamples { got: 1 })
        ));
    }

    #[test]
    fn novel_identical_is_zero() {
        assert!(novel(&[0.5, 0.5], &[0.5, 0.5]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn novel_proportional_is_near_zero() {
        // Proportional arrays normalize to (nearly) the same distribution;
        // the epsilon smoothing leaves a sub-1e-9 residue.
        let v = novel(&[0.2, 0.4], &[0.1, 0.2]).unwrap();
        assert!(v < 1e-9, "kl = {v}");
    }

    #[test]
    fn novel_length_mismatch() {
        assert!(matches!(
            novel(&[0.1], &[0.1, 0.2]),
            Err(ObjectiveError::LengthMismatch { left: 1, right: 2 })
        ));
    }

    // Independent KL oracle: separate entropy and cross-entropy sums rather
    // than the implementation's single fused pass.
    fn kl_oracle(gen: &[f64], base: &[f64]) -> f64 {
        let norm = |v: &[f64]| {
            let s: Vec<f64> = v.iter().map(|x| x + KL_EPSILON).collect();
            let t: f64 = s.iter().sum();
            s.into_iter().map(|x| x / t).collect::<Vec<f64>>()
        };
        let p = norm(gen);
        let q = norm(base);
        let entropy: f64 = p.iter().map(|&pi| pi * pi.ln()).sum();
        let cross: f64 = p.iter().zip(&q).map(|(&pi, &qi)| pi * qi.ln()).sum();
        entropy - cross
    }

    #[test]
    fn novel_matches_oracle_on_skewed_pair() {
        let got = novel(&[0.9, 0.1], &[0.5, 0.5]).unwrap();
        let want = kl_oracle(&[0.9, 0.1], &[0.5, 0.5]);
        assert!((got - want).abs() < 1e-12, "got {got}, want {want}");
        assert!(got > 0.0);
    }

    #[test]
    fn personalized_examples() {
        let e = vec![1.0, 0.0];
        assert_eq!(personalized(&[e.clone()], &[e.clone()], 1).unwrap(), 1.0);

        let ortho = vec![0.0, 1.0];
        assert_eq!(personalized(&[vec![1.0, 0.0]], &[ortho], 1).unwrap(), 0.0);

        let got = personalized(&[vec![1.0, 0.0]], &[vec![1.0, 0.0], vec![0.0, 1.0]], 2).unwrap();
        assert!((got - 0.5).abs() < 1e-15);

        assert!(matches!(
            personalized(&[vec![1.0]], &[], 1),
            Err(ObjectiveError::EmptyRepository)
        ));
    }

    #[test]
    fn personalized_topk_capped_at_repository_size() {
        let got = personalized(&[vec![1.0, 0.0]], &[vec![1.0, 0.0]], 10).unwrap();
        assert_eq!(got, 1.0);
    }

    #[test]
    fn composite_examples() {
        let spec = ObjectiveSpec::weighted(vec![
            (ObjectiveKind::Difficult, 0.6),
            (ObjectiveKind::Separate, 0.2),
            (ObjectiveKind::Novel, 0.2),
        ]);
        let mut values = BTreeMap::new();
        values.insert(ObjectiveKind::Difficult, 0.5);
        values.insert(ObjectiveKind::Separate, 0.4);
        values.insert(ObjectiveKind::Novel, 0.0);
        let report = composite(&spec, &values).unwrap();
        assert!((report.composite - 0.38).abs() < 1e-12);

        let single = ObjectiveSpec::single(ObjectiveKind::Consistent);
        let mut values = BTreeMap::new();
        values.insert(ObjectiveKind::Consistent, 0.9125);
        assert_eq!(composite(&single, &values).unwrap().composite, 0.9125);

        let missing = composite(&single, &BTreeMap::new());
        assert!(matches!(
            missing,
            Err(ObjectiveError::MissingComponent(ObjectiveKind::Consistent))
        ));
    }

    #[test]
    fn composite_all_zero() {
        let spec = ObjectiveSpec::weighted(vec![
            (ObjectiveKind::Difficult, 0.5),
            (ObjectiveKind::Separate, 0.5),
        ]);
        let mut values = BTreeMap::new();
        values.insert(ObjectiveKind::Difficult, 0.0);
        values.insert(ObjectiveKind::Separate, 0.0);
        assert_eq!(composite(&spec, &values).unwrap().composite, 0.0);
    }

    proptest! {
        #[test]
        fn separate_matches_closed_form(perf in proptest::collection::vec(0.0f64..=1.0, 2..20)) {
            let got = separate(&perf).unwrap();
            let max = perf.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = perf.iter().copied().fold(f64::INFINITY, f64::min);
            let want = (max - min) / (perf.len() - 1) as f64;
            prop_assert!((got - want).abs() < 1e-12);
        }

        #[test]
        fn difficult_in_unit_interval(perf in proptest::collection::vec(0.0f64..=1.0, 1..20)) {
            let v = difficult(&perf).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn novel_non_negative_and_matches_oracle(
            gen in proptest::collection::vec(0.0f64..=1.0, 5),
            base in proptest::collection::vec(0.0f64..=1.0, 5),
        ) {
            let got = novel(&gen, &base).unwrap();
            prop_assert!(got >= 0.0);
            prop_assert!((got - kl_oracle(&gen, &base).max(0.0)).abs() < 1e-9);
        }

        #[test]
        fn novel_self_divergence_vanishes(perf in proptest::collection::vec(0.0f64..=1.0, 1..10)) {
            prop_assert!(novel(&perf, &perf).unwrap() <= 1e-9);
        }

        #[test]
        fn order_invariance(
            perf in proptest::collection::vec(0.0f64..=1.0, 3..10),
            rotation in 1usize..8,
        ) {
            let mut rotated = perf.clone();
            rotated.rotate_left(rotation % perf.len());
            prop_assert_eq!(difficult(&perf).unwrap(), difficult(&rotated).unwrap());
            prop_assert!((separate(&perf).unwrap() - separate(&rotated).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn novel_invariant_under_joint_permutation(
            gen in proptest::collection::vec(0.0f64..=1.0, 3..10),
            base_seed in 0u64..1000,
            rotation in 1usize..8,
        ) {
            // Same-length baseline derived from a seed, rotated in lockstep.
            let base: Vec<f64> =
                gen.iter().enumerate().map(|(i, _)| {
                    ((base_seed.wrapping_mul(i as u64 + 1) % 101) as f64) / 100.0
                }).collect();
            let r = rotation % gen.len();
            let mut gen_rot = gen.clone();
            gen_rot.rotate_left(r);
            let mut base_rot = base.clone();
            base_rot.rotate_left(r);
            let a = novel(&gen, &base).unwrap();
            let b = novel(&gen_rot, &base_rot).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn consistent_range(rows in proptest::collection::vec(
            proptest::collection::vec(0.0f64..=1.0, 3), 1..6,
        )) {
            let m = matrix(rows);
            let v = consistent(&m).unwrap();
            prop_assert!((0.5..=1.0).contains(&v));
        }

        #[test]
        fn composite_is_linear_in_each_component(
            d in 0.0f64..=1.0,
            s in 0.0f64..=1.0,
            delta in 0.0f64..=1.0,
        ) {
            let spec = ObjectiveSpec::weighted(vec![
                (ObjectiveKind::Difficult, 0.6),
                (ObjectiveKind::Separate, 0.4),
            ]);
            let mut base = BTreeMap::new();
            base.insert(ObjectiveKind::Difficult, d);
            base.insert(ObjectiveKind::Separate, s);
            let mut bumped = base.clone();
            bumped.insert(ObjectiveKind::Difficult, d + delta);
            let a = composite(&spec, &base).unwrap().composite;
            let b = composite(&spec, &bumped).unwrap().composite;
            prop_assert!((b - a - 0.6 * delta).abs() < 1e-9);
        }
    }
}
