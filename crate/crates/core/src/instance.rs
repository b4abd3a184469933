//! Problem instances: keys `1..=n` with non-negative integer weights.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A key identifier. Keys of an `n`-key instance are `1..=n`.
pub type Key = usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InstanceError {
    #[error("an instance needs at least one key")]
    Empty,
    #[error("weights are too large: total cost could overflow 64 bits")]
    Overflow,
}

/// Key weights indexed by key `1..=n`, with the total cached.
///
/// Every cost this crate computes is bounded by `n * W`; construction rejects
/// instances where that product does not fit in a `u64`, so cost arithmetic
/// downstream never overflows.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Instance {
    weights: Vec<u64>,
    #[serde(skip)]
    total: u64,
}

#[derive(Deserialize)]
struct RawInstance {
    weights: Vec<u64>,
}

impl<'de> Deserialize<'de> for Instance {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawInstance::deserialize(deserializer)?;
        Instance::new(raw.weights).map_err(serde::de::Error::custom)
    }
}

impl Instance {
    pub fn new(weights: Vec<u64>) -> Result<Self, InstanceError> {
        if weights.is_empty() {
            return Err(InstanceError::Empty);
        }
        let total = weights
            .iter()
            .try_fold(0u64, |acc, &w| acc.checked_add(w))
            .ok_or(InstanceError::Overflow)?;
        total
            .checked_mul(weights.len() as u64 + 1)
            .ok_or(InstanceError::Overflow)?;
        Ok(Self { weights, total })
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instance serialization is infallible")
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    /// Total weight `W`.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Weight of `key`.
    ///
    /// # Panics
    /// Panics if `key` is not in `1..=n`.
    pub fn weight(&self, key: Key) -> u64 {
        assert!(
            self.contains(key),
            "key {key} out of range 1..={}",
            self.n()
        );
        self.weights[key - 1]
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn contains(&self, key: Key) -> bool {
        (1..=self.n()).contains(&key)
    }

    pub fn keys(&self) -> std::ops::RangeInclusive<Key> {
        1..=self.n()
    }

    /// Sum of weights over `keys`.
    pub fn weight_of(&self, keys: &[Key]) -> u64 {
        keys.iter().map(|&k| self.weight(k)).sum()
    }

    pub fn max_weight(&self) -> u64 {
        self.weights.iter().copied().max().unwrap_or(0)
    }

    /// The maximum-weight key, smallest index on ties.
    pub fn max_weight_key(&self) -> Key {
        self.max_weight_key_in(&self.keys().collect::<Vec<_>>())
            .expect("instances are non-empty")
    }

    /// The maximum-weight key among `keys`, smallest index on ties.
    pub fn max_weight_key_in(&self, keys: &[Key]) -> Option<Key> {
        keys.iter()
            .copied()
            .min_by(|&a, &b| self.tie_order(a, b))
    }

    /// Total order used wherever "heaviest" must be unique: weight
    /// descending, then key ascending.
    pub fn tie_order(&self, a: Key, b: Key) -> std::cmp::Ordering {
        self.weight(b).cmp(&self.weight(a)).then(a.cmp(&b))
    }

    /// The instance with key order reversed (key `k` becomes `n + 1 - k`).
    pub fn mirrored(&self) -> Self {
        let mut weights = self.weights.clone();
        weights.reverse();
        Self {
            weights,
            total: self.total,
        }
    }

    /// Whether `w_max >= num/den * W`, compared exactly.
    pub fn max_ratio_at_least(&self, num: u64, den: u64) -> bool {
        u128::from(self.max_weight()) * u128::from(den)
            >= u128::from(self.total) * u128::from(num)
    }
}
