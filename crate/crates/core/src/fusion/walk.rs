use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{FusionRing, LabelMeasure};
use crate::error::{Error, Result};

/// Denominators of Martin ratios below this are treated as not yet reached.
pub const MARTIN_FLOOR: f64 = 1e-9;

fn require_label<R: FusionRing>(ring: &R, s: &R::Label) -> Result<()> {
    if ring.contains(s) {
        Ok(())
    } else {
        Err(Error::Domain(format!("label {s:?} is not in the ring")))
    }
}

/// Weighted fusion of two labels: `(t, mult(s,r,t) d(t)/(d(s)d(r)))`.
fn fusion_weights<R: FusionRing>(ring: &R, s: &R::Label, r: &R::Label) -> Result<Vec<(R::Label, f64)>> {
    let ds = ring.dim(s)?;
    let dr = ring.dim(r)?;
    ring.fuse(s, r)?
        .into_iter()
        .map(|(t, m)| {
            let dt = ring.dim(&t)?;
            // Dividing before multiplying keeps the unit law exact.
            Ok((t, m as f64 * (dt / (ds * dr))))
        })
        .collect()
}

/// `ν ∗ μ`.
pub fn convolve<R: FusionRing>(
    nu: &LabelMeasure<R::Label>,
    mu: &LabelMeasure<R::Label>,
    ring: &R,
) -> Result<LabelMeasure<R::Label>> {
    for l in nu.support().chain(mu.support()) {
        require_label(ring, l)?;
    }
    let mut out: BTreeMap<R::Label, f64> = BTreeMap::new();
    for (s, a) in nu.iter() {
        for (r, b) in mu.iter() {
            for (t, w) in fusion_weights(ring, s, r)? {
                *out.entry(t).or_insert(0.0) += a * b * w;
            }
        }
    }
    Ok(LabelMeasure::from_map_unchecked(out))
}

/// `μⁿ`, with `μ⁰ = δ_e`.
pub fn convolution_power<R: FusionRing>(
    mu: &LabelMeasure<R::Label>,
    n: u32,
    ring: &R,
) -> Result<LabelMeasure<R::Label>> {
    if n == 0 {
        return Ok(LabelMeasure::delta(ring.unit()));
    }
    let mut acc = mu.clone();
    for _ in 1..n {
        acc = convolve(&acc, mu, ring)?;
    }
    Ok(acc)
}

/// One step of the classical walk from `s`: `δ_s ∗ μ`.
pub fn transition<R: FusionRing>(
    s: &R::Label,
    mu: &LabelMeasure<R::Label>,
    ring: &R,
) -> Result<LabelMeasure<R::Label>> {
    if !mu.is_probability() {
        return Err(Error::Contract(format!(
            "transition needs a probability measure, mass is {}",
            mu.total_mass()
        )));
    }
    convolve(&LabelMeasure::delta(s.clone()), mu, ring)
}

/// Whether every probe label lies in `supp μⁿ` for some `n ≤ depth`, with
/// the first such `n` per label.
pub fn is_generating<R: FusionRing>(
    mu: &LabelMeasure<R::Label>,
    ring: &R,
    depth: u32,
    probe: &[R::Label],
) -> Result<(bool, BTreeMap<R::Label, Option<u32>>)> {
    if probe.is_empty() {
        return Err(Error::Contract("empty probe set".into()));
    }
    if depth == 0 {
        return Err(Error::Contract("depth must be at least 1".into()));
    }
    for l in probe.iter().chain(mu.support()) {
        require_label(ring, l)?;
    }
    let mut hits: BTreeMap<R::Label, Option<u32>> = probe.iter().map(|l| (l.clone(), None)).collect();
    let step: Vec<R::Label> = mu.support().cloned().collect();
    let mut support: BTreeSet<R::Label> = step.iter().cloned().collect();
    for n in 1..=depth {
        if n > 1 {
            let mut next = BTreeSet::new();
            for s in &support {
                for r in &step {
                    for (t, m) in ring.fuse(s, r)? {
                        if m > 0 {
                            next.insert(t);
                        }
                    }
                }
            }
            support = next;
        }
        for (l, hit) in hits.iter_mut() {
            if hit.is_none() && support.contains(l) {
                *hit = Some(n);
            }
        }
        if hits.values().all(Option::is_some) {
            break;
        }
    }
    let all = hits.values().all(Option::is_some);
    Ok((all, hits))
}

/// `μ̌(s) = μ(s̄)`.
pub fn dual_measure<R: FusionRing>(mu: &LabelMeasure<R::Label>, ring: &R) -> Result<LabelMeasure<R::Label>> {
    let mut out = BTreeMap::new();
    for (s, w) in mu.iter() {
        out.insert(ring.dual(s)?, w);
    }
    Ok(LabelMeasure::from_map_unchecked(out))
}

/// Geometric extrapolation of a partial Green sum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailEstimate {
    /// Fitted per-step ratio of the increments over the last quarter.
    pub ratio: f64,
    /// Estimated remainder `Σ_{n>N}`.
    pub tail: f64,
    /// Increments fail to decay: the walk may be recurrent.
    pub suspect_recurrent: bool,
}

impl TailEstimate {
    /// Fit `ln a_n ≈ α + n ln q` on the positive increments in the last
    /// quarter of `increments` (indexed by step).
    pub fn from_increments(increments: &[f64]) -> Self {
        let n = increments.len();
        if n == 0 {
            return Self { ratio: 0.0, tail: 0.0, suspect_recurrent: false };
        }
        let start = n - n.div_ceil(4).max(1);
        let pts: Vec<(f64, f64)> = increments[start..]
            .iter()
            .enumerate()
            .filter(|(_, a)| **a > 0.0)
            .map(|(i, a)| ((start + i) as f64, a.ln()))
            .collect();
        if pts.is_empty() {
            return Self { ratio: 0.0, tail: 0.0, suspect_recurrent: false };
        }
        let last = pts.last().unwrap().1.exp();
        if pts.len() < 2 {
            return Self { ratio: 0.0, tail: 0.0, suspect_recurrent: false };
        }
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let q = (sxy / sxx).exp();
        if q >= 0.995 {
            Self { ratio: q, tail: f64::INFINITY, suspect_recurrent: true }
        } else {
            Self { ratio: q, tail: last * q / (1.0 - q), suspect_recurrent: false }
        }
    }
}

/// Truncated kernel values from one source, with horizon and tail metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelTable<L: Ord> {
    pub source: L,
    pub horizon: usize,
    pub values: BTreeMap<L, f64>,
    pub tails: BTreeMap<L, TailEstimate>,
    /// Radius of the killing domain, `None` when the light cone fits.
    pub truncation: Option<u32>,
}

impl<L: Ord> KernelTable<L> {
    pub fn get(&self, t: &L) -> Option<f64> {
        self.values.get(t).copied()
    }

    pub fn suspect_recurrent(&self) -> bool {
        self.tails.values().any(|t| t.suspect_recurrent)
    }
}

/// Limits for truncated Green summation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenConfig {
    /// Maximum number of labels in the walk domain.
    pub max_labels: usize,
    /// Fixed domain radius; by default the largest ball under `max_labels`.
    pub radius: Option<u32>,
    /// Maximum `horizon × nonzeros` work.
    pub cost_budget: u64,
}

impl Default for GreenConfig {
    fn default() -> Self {
        Self { max_labels: 200_000, radius: None, cost_budget: 20_000_000_000 }
    }
}

/// Labels within walk distance `radius` of the unit, in BFS order, with the
/// step operator restricted to them (sparse rows).
#[derive(Clone, Debug)]
pub struct LabelDomain<L> {
    labels: Vec<L>,
    index: HashMap<L, usize>,
    radius: u32,
    exhausted: bool,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl<L: Clone + Ord + std::hash::Hash + std::fmt::Debug> LabelDomain<L> {
    /// BFS from the unit using steps by `supp μ` and their duals.
    pub fn build<R: FusionRing<Label = L>>(ring: &R, mu: &LabelMeasure<L>, radius: Option<u32>, max_labels: usize) -> Result<Self> {
        let mut steps: BTreeSet<L> = BTreeSet::new();
        for r in mu.support() {
            require_label(ring, r)?;
            steps.insert(r.clone());
            steps.insert(ring.dual(r)?);
        }
        let mut labels = vec![ring.unit()];
        let mut index: HashMap<L, usize> = HashMap::new();
        index.insert(ring.unit(), 0);
        let mut layer = vec![ring.unit()];
        let mut reached = 0u32;
        let mut exhausted = false;
        while radius.is_none_or(|r| reached < r) {
            let mut next: BTreeSet<L> = BTreeSet::new();
            for s in &layer {
                for r in &steps {
                    for (t, _) in ring.fuse(s, r)? {
                        if !index.contains_key(&t) {
                            next.insert(t);
                        }
                    }
                }
            }
            if next.is_empty() {
                exhausted = true;
                break;
            }
            if labels.len() + next.len() > max_labels {
                if radius.is_some() {
                    return Err(Error::Resource(format!(
                        "walk domain of radius {} exceeds {max_labels} labels",
                        reached + 1
                    )));
                }
                break;
            }
            for t in &next {
                index.insert(t.clone(), labels.len());
                labels.push(t.clone());
            }
            layer = next.into_iter().collect();
            reached += 1;
        }
        if reached == 0 && !exhausted {
            return Err(Error::Resource("walk domain cap leaves only the unit".into()));
        }
        let mut row_start = Vec::with_capacity(labels.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_start.push(0);
        for s in &labels {
            let mut row: BTreeMap<usize, f64> = BTreeMap::new();
            for (r, p) in mu.iter() {
                for (t, w) in fusion_weights(ring, s, r)? {
                    if let Some(&j) = index.get(&t) {
                        *row.entry(j).or_insert(0.0) += p * w;
                    }
                }
            }
            for (j, v) in row {
                cols.push(j);
                vals.push(v);
            }
            row_start.push(cols.len());
        }
        Ok(Self { labels, index, radius: reached, exhausted, row_start, cols, vals })
    }

    pub fn labels(&self) -> &[L] {
        &self.labels
    }

    pub fn index_of(&self, l: &L) -> Option<usize> {
        self.index.get(l).copied()
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    /// The whole (finite) ring was enumerated.
    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    pub fn nonzeros(&self) -> usize {
        self.vals.len()
    }

    /// `Σ_{n≤N} pⁿ(·, target)` for every source in the domain.
    pub fn green_column(&self, target: &L, horizon: usize) -> Result<Vec<f64>> {
        let j = self
            .index_of(target)
            .ok_or_else(|| Error::Domain(format!("target {target:?} lies outside the walk domain")))?;
        let mut u = vec![0.0; self.labels.len()];
        u[j] = 1.0;
        let mut sums = u.clone();
        let mut next = vec![0.0; u.len()];
        for _ in 0..horizon {
            for (i, out) in next.iter_mut().enumerate() {
                let mut acc = 0.0;
                for k in self.row_start[i]..self.row_start[i + 1] {
                    acc += self.vals[k] * u[self.cols[k]];
                }
                *out = acc;
            }
            std::mem::swap(&mut u, &mut next);
            for (s, x) in sums.iter_mut().zip(&u) {
                *s += x;
            }
        }
        Ok(sums)
    }

    /// `out = v P`.
    fn step(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for k in self.row_start[i]..self.row_start[i + 1] {
                out[self.cols[k]] += vi * self.vals[k];
            }
        }
    }
}

/// Resumable partial sums `Σ_{n≤N} pⁿ(source, ·)` of the walk killed
/// outside a label domain.
#[derive(Clone, Debug)]
pub struct ClassicalGreen<L> {
    domain: std::sync::Arc<LabelDomain<L>>,
    source: usize,
    horizon: usize,
    current: Vec<f64>,
    sums: Vec<f64>,
    /// Increment history `pⁿ(source, t)` per tracked target.
    history: BTreeMap<usize, Vec<f64>>,
    cost_budget: u64,
}

impl<L: Clone + Ord + std::hash::Hash + std::fmt::Debug> ClassicalGreen<L> {
    pub fn new(domain: std::sync::Arc<LabelDomain<L>>, source: &L, targets: &[L], cost_budget: u64) -> Result<Self> {
        let src = domain.index_of(source).ok_or_else(|| {
            Error::Domain(format!("source {source:?} lies outside the walk domain of radius {}", domain.radius()))
        })?;
        let mut history = BTreeMap::new();
        for t in targets {
            let j = domain.index_of(t).ok_or_else(|| {
                Error::Domain(format!("target {t:?} lies outside the walk domain of radius {}", domain.radius()))
            })?;
            history.insert(j, vec![if j == src { 1.0 } else { 0.0 }]);
        }
        let mut current = vec![0.0; domain.labels().len()];
        current[src] = 1.0;
        let sums = current.clone();
        Ok(Self { domain, source: src, horizon: 0, current, sums, history, cost_budget })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn domain(&self) -> &LabelDomain<L> {
        &self.domain
    }

    pub fn advance_to(&mut self, horizon: usize) -> Result<()> {
        if horizon < self.horizon {
            return Err(Error::Contract(format!("cannot rewind from horizon {} to {horizon}", self.horizon)));
        }
        let cost = (horizon - self.horizon) as u64 * self.domain.nonzeros().max(1) as u64;
        if cost > self.cost_budget {
            return Err(Error::Resource(format!("{cost} operations exceed the budget {}", self.cost_budget)));
        }
        let mut next = vec![0.0; self.current.len()];
        while self.horizon < horizon {
            self.domain.step(&self.current, &mut next);
            std::mem::swap(&mut self.current, &mut next);
            for (s, c) in self.sums.iter_mut().zip(&self.current) {
                *s += c;
            }
            for (&j, h) in self.history.iter_mut() {
                h.push(self.current[j]);
            }
            self.horizon += 1;
        }
        Ok(())
    }

    /// Partial sum at `t` (zero outside the domain).
    pub fn value(&self, t: &L) -> f64 {
        self.domain.index_of(t).map_or(0.0, |j| self.sums[j])
    }

    pub fn table(&self) -> KernelTable<L> {
        let labels = self.domain.labels();
        let mut values = BTreeMap::new();
        let mut tails = BTreeMap::new();
        for (&j, h) in &self.history {
            values.insert(labels[j].clone(), self.sums[j]);
            tails.insert(labels[j].clone(), TailEstimate::from_increments(h));
        }
        KernelTable {
            source: labels[self.source].clone(),
            horizon: self.horizon,
            values,
            tails,
            truncation: (!self.domain.is_exhausted()).then_some(self.domain.radius()),
        }
    }

    /// Snapshot `(current, sums, histories)` for external caching.
    pub fn snapshot(&self) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
        (self.current.clone(), self.sums.clone(), self.history.values().cloned().collect())
    }

    /// Restore a snapshot taken at `horizon` from an accumulator built with
    /// the same domain, source and targets.
    pub fn restore(&mut self, horizon: usize, current: Vec<f64>, sums: Vec<f64>, histories: Vec<Vec<f64>>) -> Result<()> {
        let n = self.current.len();
        if current.len() != n || sums.len() != n || histories.len() != self.history.len() {
            return Err(Error::Contract("snapshot does not match the walk domain".into()));
        }
        if histories.iter().any(|h| h.len() != horizon + 1) {
            return Err(Error::Contract("snapshot history length does not match its horizon".into()));
        }
        self.current = current;
        self.sums = sums;
        for (slot, h) in self.history.values_mut().zip(histories) {
            *slot = h;
        }
        self.horizon = horizon;
        Ok(())
    }
}

/// Truncated Green kernel `G_N(source, t)` over `targets`.
pub fn green_classical<R: FusionRing>(
    source: &R::Label,
    mu: &LabelMeasure<R::Label>,
    ring: &R,
    horizon: usize,
    targets: &[R::Label],
    config: &GreenConfig,
) -> Result<KernelTable<R::Label>> {
    if !mu.is_probability() {
        return Err(Error::Contract("Green kernel needs a probability measure".into()));
    }
    let domain = LabelDomain::build(ring, mu, config.radius, config.max_labels)?;
    let mut acc = ClassicalGreen::new(std::sync::Arc::new(domain), source, targets, config.cost_budget)?;
    acc.advance_to(horizon)?;
    Ok(acc.table())
}

/// `K(s, t) = G(s, t) / G(e, t)` with matched horizon and domain.
pub fn martin_classical<R: FusionRing>(
    mu: &LabelMeasure<R::Label>,
    ring: &R,
    horizon: usize,
    s: &R::Label,
    t: &R::Label,
    config: &GreenConfig,
) -> Result<f64> {
    if !mu.is_probability() {
        return Err(Error::Contract("Martin kernel needs a probability measure".into()));
    }
    let domain = std::sync::Arc::new(LabelDomain::build(ring, mu, config.radius, config.max_labels)?);
    let targets = [t.clone()];
    let mut from_e = ClassicalGreen::new(domain.clone(), &ring.unit(), &targets, config.cost_budget)?;
    from_e.advance_to(horizon)?;
    let denom = from_e.value(t);
    if denom <= MARTIN_FLOOR {
        return Err(Error::NotYetReached { horizon, what: format!("G(e, {})", ring.label_name(t)) });
    }
    let mut from_s = ClassicalGreen::new(domain, s, &targets, config.cost_budget)?;
    from_s.advance_to(horizon)?;
    Ok(from_s.value(t) / denom)
}
