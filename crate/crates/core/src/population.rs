use serde::Serialize;

use crate::error::{Error, Result};
use crate::utility::{validate_profile, ConsumerProfile};

/// Consumers sharing one loss-aversion coefficient and one curvature exponent.
///
/// Profiles are kept in input order; `order` is the stable ascending-by-`r`
/// permutation (`order[k]` is the input index of the k-th smallest reference).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Population {
    profiles: Vec<ConsumerProfile>,
    order: Vec<usize>,
    lambda: f64,
    alpha: f64,
}

impl Population {
    pub fn new(reference_points: &[f64], lambda: f64, alpha: f64) -> Result<Self> {
        let profiles = reference_points
            .iter()
            .map(|&r| ConsumerProfile::new(r, lambda, alpha))
            .collect();
        Self::from_profiles(profiles)
    }

    pub fn with_min_needs(
        reference_points: &[f64],
        min_needs: &[f64],
        lambda: f64,
        alpha: f64,
    ) -> Result<Self> {
        if reference_points.len() != min_needs.len() {
            return Err(Error::Config(format!(
                "{} reference points but {} minimum needs",
                reference_points.len(),
                min_needs.len()
            )));
        }
        let profiles = reference_points
            .iter()
            .zip(min_needs)
            .map(|(&r, &m)| ConsumerProfile::new(r, lambda, alpha).with_min_need(m))
            .collect();
        Self::from_profiles(profiles)
    }

    /// Validates every profile and checks that λ and α are shared.
    pub fn from_profiles(profiles: Vec<ConsumerProfile>) -> Result<Self> {
        let first = *profiles
            .first()
            .ok_or_else(|| Error::Config("a population needs at least one consumer".into()))?;
        for p in &profiles {
            let v = validate_profile(p);
            if !v.is_empty() {
                return Err(Error::InvalidProfile(v));
            }
            if p.lambda != first.lambda || p.alpha != first.alpha {
                return Err(Error::Config(
                    "all consumers must share the same lambda and alpha".into(),
                ));
            }
        }
        let mut order: Vec<usize> = (0..profiles.len()).collect();
        // sort_by is stable, so equal reference points keep input order
        order.sort_by(|&a, &b| profiles[a].r.total_cmp(&profiles[b].r));
        Ok(Self {
            profiles,
            order,
            lambda: first.lambda,
            alpha: first.alpha,
        })
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Profiles in input order.
    pub fn profiles(&self) -> &[ConsumerProfile] {
        &self.profiles
    }

    pub fn profile(&self, i: usize) -> &ConsumerProfile {
        &self.profiles[i]
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Reference points in input order.
    pub fn reference_points(&self) -> Vec<f64> {
        self.profiles.iter().map(|p| p.r).collect()
    }

    pub fn min_needs(&self) -> Vec<f64> {
        self.profiles.iter().map(|p| p.m).collect()
    }

    /// Reference points ascending.
    pub fn sorted_reference_points(&self) -> Vec<f64> {
        self.order.iter().map(|&i| self.profiles[i].r).collect()
    }

    pub fn total_reference(&self) -> f64 {
        self.profiles.iter().map(|p| p.r).sum()
    }

    /// Whether `(K-1)^(1-α) ≤ λ`, i.e. every aggregate/newcomer split is of the
    /// first subproblem type.
    pub fn in_loss_dominant_regime(&self) -> bool {
        let k1 = (self.len() - 1) as f64;
        k1.powf(1.0 - self.alpha) <= self.lambda
    }

    /// Maps a vector indexed by sorted rank back to input order.
    pub fn unsort(&self, sorted: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; sorted.len()];
        for (rank, &i) in self.order.iter().enumerate() {
            out[i] = sorted[rank];
        }
        out
    }

    /// Same consumers with every reference point multiplied by `factor`
    /// (minimum needs scale along).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let profiles = self
            .profiles
            .iter()
            .map(|p| {
                let mut q = *p;
                q.r *= factor;
                q.m *= factor;
                q.x_max = q.x_max.map(|x| x * factor);
                q
            })
            .collect();
        Self::from_profiles(profiles)
    }
}
