use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// A finitely supported nonnegative measure on labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelMeasure<L: Ord> {
    weights: BTreeMap<L, f64>,
}

impl<L: Ord + Clone> Default for LabelMeasure<L> {
    fn default() -> Self {
        Self { weights: BTreeMap::new() }
    }
}

impl<L: Ord + Clone> LabelMeasure<L> {
    /// Collect weights, summing repeated labels and dropping zeros.
    pub fn new(items: impl IntoIterator<Item = (L, f64)>) -> Result<Self> {
        let mut weights = BTreeMap::new();
        for (l, w) in items {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Domain(format!("invalid measure weight {w}")));
            }
            *weights.entry(l).or_insert(0.0) += w;
        }
        weights.retain(|_, w| *w != 0.0);
        Ok(Self { weights })
    }

    pub fn delta(l: L) -> Self {
        let mut weights = BTreeMap::new();
        weights.insert(l, 1.0);
        Self { weights }
    }

    pub fn uniform(labels: impl IntoIterator<Item = L>) -> Self {
        let labels: Vec<L> = labels.into_iter().collect();
        let w = 1.0 / labels.len() as f64;
        let mut weights = BTreeMap::new();
        for l in labels {
            *weights.entry(l).or_insert(0.0) += w;
        }
        Self { weights }
    }

    pub(crate) fn from_map_unchecked(mut weights: BTreeMap<L, f64>) -> Self {
        weights.retain(|_, w| *w != 0.0);
        Self { weights }
    }

    pub fn get(&self, l: &L) -> f64 {
        self.weights.get(l).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&L, f64)> {
        self.weights.iter().map(|(l, w)| (l, *w))
    }

    pub fn support(&self) -> impl Iterator<Item = &L> {
        self.weights.keys()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.values().sum()
    }

    pub fn is_probability(&self) -> bool {
        (self.total_mass() - 1.0).abs() <= 1e-12
    }

    pub fn normalized(&self) -> Result<Self> {
        let m = self.total_mass();
        if m <= 0.0 {
            return Err(Error::Domain("cannot normalize a zero measure".into()));
        }
        Ok(self.scaled(1.0 / m))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_map_unchecked(self.weights.iter().map(|(l, w)| (l.clone(), w * c)).collect())
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, other: &Self, c: f64) -> Self {
        let mut weights = self.weights.clone();
        for (l, w) in &other.weights {
            *weights.entry(l.clone()).or_insert(0.0) += c * w;
        }
        Self::from_map_unchecked(weights)
    }

    pub fn restricted(&self, keep: impl Fn(&L) -> bool) -> Self {
        Self::from_map_unchecked(
            self.weights
                .iter()
                .filter(|(l, _)| keep(l))
                .map(|(l, w)| (l.clone(), *w))
                .collect(),
        )
    }

    /// Sup-norm distance between two measures.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut d: f64 = 0.0;
        for (l, w) in &self.weights {
            d = d.max((w - other.get(l)).abs());
        }
        for (l, w) in &other.weights {
            if !self.weights.contains_key(l) {
                d = d.max(w.abs());
            }
        }
        d
    }

    pub fn into_map(self) -> BTreeMap<L, f64> {
        self.weights
    }
}
