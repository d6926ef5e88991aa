//! Measures on a finite subcategory: the idempotent `h′`, the normality
//! identities, the split `μ = tμ₁ + (1 − t)μ₂`, the `1 − δ` contraction on
//! functions over labels, and the averaging lemma for finite groups.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fusion::{convolve, FusionRing, LabelMeasure};
use crate::groups::FiniteGroup;

const MEASURE_TOL: f64 = 1e-12;

/// A finite set of labels closed under duals and fusion.
pub struct SubRingData<'a, R: FusionRing> {
    parent: &'a R,
    labels: BTreeSet<R::Label>,
    global_dim: f64,
}

impl<'a, R: FusionRing> SubRingData<'a, R> {
    pub fn new(parent: &'a R, labels: impl IntoIterator<Item = R::Label>) -> Result<Self> {
        let labels: BTreeSet<R::Label> = labels.into_iter().collect();
        if !labels.contains(&parent.unit()) {
            return Err(Error::Domain("subcategory must contain the unit".into()));
        }
        for s in &labels {
            if !parent.contains(s) {
                return Err(Error::Domain(format!("unknown label {s:?}")));
            }
            let d = parent.dual(s)?;
            if !labels.contains(&d) {
                return Err(Error::Domain(format!(
                    "not closed under duals: {} has dual {}",
                    parent.label_name(s),
                    parent.label_name(&d)
                )));
            }
            for r in &labels {
                for (t, m) in parent.fuse(s, r)? {
                    if m > 0 && !labels.contains(&t) {
                        return Err(Error::Domain(format!(
                            "not closed under fusion: {} ⊗ {} contains {}",
                            parent.label_name(s),
                            parent.label_name(r),
                            parent.label_name(&t)
                        )));
                    }
                }
            }
        }
        let mut global_dim = 0.0;
        for s in &labels {
            global_dim += parent.dim(s)?.powi(2);
        }
        Ok(Self { parent, labels, global_dim })
    }

    pub fn parent(&self) -> &R {
        self.parent
    }

    pub fn labels(&self) -> &BTreeSet<R::Label> {
        &self.labels
    }

    pub fn contains(&self, s: &R::Label) -> bool {
        self.labels.contains(s)
    }

    /// `Σ dim(s)²` over the subset.
    pub fn global_dim(&self) -> f64 {
        self.global_dim
    }
}

/// `h′(s) = dim(s)² / d(C′)`.
pub fn h_prime<R: FusionRing>(sub: &SubRingData<'_, R>) -> LabelMeasure<R::Label> {
    let items = sub
        .labels
        .iter()
        .map(|s| (s.clone(), sub.parent.dim(s).expect("label checked at construction").powi(2) / sub.global_dim));
    LabelMeasure::new(items).expect("dimensions are positive")
}

/// A measure that breaks an identity, with the label when it is a point mass.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness<L: Ord> {
    pub nu: LabelMeasure<L>,
    pub label: Option<L>,
    pub difference: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityCheck<L: Ord> {
    pub passed: bool,
    pub witness: Option<Witness<L>>,
    /// Number of point masses tried.
    pub labels_tested: usize,
    pub random_trials: usize,
    /// The label enumeration stopped at the cap before running out.
    pub capped: bool,
}

fn random_measure<L: Clone + Ord>(pool: &[L], rng: &mut ChaCha8Rng) -> LabelMeasure<L> {
    let k = rng.gen_range(1..=pool.len().min(4));
    let mut items = BTreeMap::new();
    for l in pool.choose_multiple(rng, k) {
        items.insert(l.clone(), rng.gen_range(0.05..1.0));
    }
    let total: f64 = items.values().sum();
    LabelMeasure::new(items.into_iter().map(|(l, w)| (l, w / total))).expect("positive weights")
}

fn first_failure<R: FusionRing>(
    candidates: impl Iterator<Item = (LabelMeasure<R::Label>, Option<R::Label>)>,
    test: impl Fn(&LabelMeasure<R::Label>) -> Result<f64>,
) -> Result<Option<Witness<R::Label>>> {
    for (nu, label) in candidates {
        let difference = test(&nu)?;
        if difference > MEASURE_TOL {
            return Ok(Some(Witness { nu, label, difference }));
        }
    }
    Ok(None)
}

/// `ν∗h′ = h′∗ν = h′` for `ν` on the subset: every point mass, `h′` itself,
/// and `trials` random measures.
pub fn check_h1<R: FusionRing>(sub: &SubRingData<'_, R>, trials: usize, seed: u64) -> Result<IdentityCheck<R::Label>> {
    let ring = sub.parent;
    let h = h_prime(sub);
    let pool: Vec<R::Label> = sub.labels.iter().cloned().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let randoms: Vec<_> = (0..trials).map(|_| (random_measure(&pool, &mut rng), None)).collect();
    let candidates = pool
        .iter()
        .map(|s| (LabelMeasure::delta(s.clone()), Some(s.clone())))
        .chain(std::iter::once((h.clone(), None)))
        .chain(randoms);
    let witness = first_failure::<R>(candidates, |nu| {
        let left = convolve(nu, &h, ring)?;
        let right = convolve(&h, nu, ring)?;
        Ok(left.max_abs_diff(&h).max(right.max_abs_diff(&h)))
    })?;
    Ok(IdentityCheck { passed: witness.is_none(), witness, labels_tested: pool.len(), random_trials: trials, capped: false })
}

/// `ν∗h′ = h′∗ν` for `ν` on the whole ring: point masses at the first
/// `cap` labels in enumeration order, then `trials` random measures on them.
pub fn check_h2<R: FusionRing>(
    sub: &SubRingData<'_, R>,
    trials: usize,
    cap: usize,
    seed: u64,
) -> Result<IdentityCheck<R::Label>> {
    let ring = sub.parent;
    let h = h_prime(sub);
    let mut it = ring.labels();
    let pool: Vec<R::Label> = it.by_ref().take(cap).collect();
    let capped = it.next().is_some();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let randoms: Vec<_> = (0..trials).map(|_| (random_measure(&pool, &mut rng), None)).collect();
    let candidates = pool.iter().map(|s| (LabelMeasure::delta(s.clone()), Some(s.clone()))).chain(randoms);
    let witness = first_failure::<R>(candidates, |nu| {
        Ok(convolve(nu, &h, ring)?.max_abs_diff(&convolve(&h, nu, ring)?))
    })?;
    Ok(IdentityCheck { passed: witness.is_none(), witness, labels_tested: pool.len(), random_trials: trials, capped })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasureSplit<L: Ord> {
    /// `μ(C′)`.
    pub t: f64,
    pub mu1: LabelMeasure<L>,
    /// `None` when `t = 1`.
    pub mu2: Option<LabelMeasure<L>>,
    /// `min_s μ₁(s)/h′(s)` over the subset, capped at 1.
    pub delta: f64,
}

impl<L: Clone + Ord> MeasureSplit<L> {
    /// `tμ₁ + (1 − t)μ₂`.
    pub fn reconstruct(&self) -> LabelMeasure<L> {
        let mut out = self.mu1.scaled(self.t);
        if let Some(m) = &self.mu2 {
            out = out.add_scaled(m, 1.0 - self.t);
        }
        out
    }

    /// `μ₁` misses some subset label.
    pub fn degenerate(&self) -> bool {
        self.delta == 0.0
    }
}

pub fn split_measure<R: FusionRing>(mu: &LabelMeasure<R::Label>, sub: &SubRingData<'_, R>) -> Result<MeasureSplit<R::Label>> {
    let inside = mu.restricted(|s| sub.contains(s));
    let t = inside.total_mass();
    if t <= 0.0 {
        return Err(Error::SplitUndefined("μ gives no mass to the subcategory".into()));
    }
    let mu1 = inside.scaled(1.0 / t);
    let outside = mu.restricted(|s| !sub.contains(s));
    let mu2 = if outside.is_empty() { None } else { Some(outside.scaled(1.0 / (1.0 - t))) };
    let h = h_prime(sub);
    let delta = sub
        .labels
        .iter()
        .map(|s| mu1.get(s) / h.get(s))
        .fold(f64::INFINITY, f64::min)
        .min(1.0);
    Ok(MeasureSplit { t, mu1, mu2, delta })
}

/// `(P_ν F)(s) = Σ_t (δ_s∗ν)(t) F(t)` at the labels of `at`.
fn apply_markov<R: FusionRing>(
    ring: &R,
    nu: &LabelMeasure<R::Label>,
    f: &BTreeMap<R::Label, f64>,
    at: &[R::Label],
) -> Result<BTreeMap<R::Label, f64>> {
    let mut out = BTreeMap::new();
    for s in at {
        let step = convolve(&LabelMeasure::delta(s.clone()), nu, ring)?;
        let mut acc = 0.0;
        for (t, w) in step.iter() {
            let v = f
                .get(t)
                .ok_or_else(|| Error::InternalConsistency(format!("padding misses {}", ring.label_name(t))))?;
            acc += w * v;
        }
        out.insert(s.clone(), acc);
    }
    Ok(out)
}

/// Labels reachable from `from` in one fusion with a subset label.
fn pad<R: FusionRing>(sub: &SubRingData<'_, R>, from: &BTreeSet<R::Label>) -> Result<BTreeSet<R::Label>> {
    let mut out = from.clone();
    for s in from {
        for r in &sub.labels {
            for (t, _) in sub.parent.fuse(s, r)? {
                out.insert(t);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShadowReport {
    pub delta: f64,
    /// `1 − δ`.
    pub bound: f64,
    /// Largest `‖P_{μ₁}F‖_∞ / ‖F‖_∞` seen on the window.
    pub max_ratio: f64,
    pub samples: usize,
    pub window: usize,
    pub padded: usize,
    /// `‖h′∗h′ − h′‖`.
    pub idempotent_defect: f64,
}

impl ShadowReport {
    pub fn holds(&self) -> bool {
        self.max_ratio <= self.bound + 1e-9 && self.idempotent_defect <= MEASURE_TOL
    }
}

/// Sample `F = G − P_{h′}G` for random `G` (so `P_{h′}F = 0` on the window)
/// and compare `‖P_{μ₁}F‖_∞` on the window against `(1 − δ)‖F‖_∞`.
pub fn shadow_contraction<R: FusionRing>(
    sub: &SubRingData<'_, R>,
    mu1: &LabelMeasure<R::Label>,
    window: &[R::Label],
    samples: usize,
    seed: u64,
    cap: usize,
) -> Result<ShadowReport> {
    let ring = sub.parent;
    if mu1.support().any(|s| !sub.contains(s)) || !mu1.is_probability() {
        return Err(Error::Contract("μ₁ must be a probability measure on the subcategory".into()));
    }
    let h = h_prime(sub);
    let delta = sub.labels.iter().map(|s| mu1.get(s) / h.get(s)).fold(f64::INFINITY, f64::min).min(1.0);
    let inner: BTreeSet<R::Label> = window.iter().cloned().collect();
    let once = pad(sub, &inner)?;
    let twice = pad(sub, &once)?;
    if twice.len() > cap {
        return Err(Error::Resource(format!("padded window has {} labels, cap {cap}", twice.len())));
    }
    let idempotent_defect = convolve(&h, &h, ring)?.max_abs_diff(&h);
    let once_v: Vec<R::Label> = once.iter().cloned().collect();
    let inner_v: Vec<R::Label> = inner.iter().cloned().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio: f64 = 0.0;
    let mut used = 0;
    for _ in 0..samples {
        let g: BTreeMap<R::Label, f64> = twice.iter().map(|s| (s.clone(), rng.gen_range(-1.0..1.0))).collect();
        let pg = apply_markov(ring, &h, &g, &once_v)?;
        let f: BTreeMap<R::Label, f64> = once_v.iter().map(|s| (s.clone(), g[s] - pg[s])).collect();
        let norm = f.values().fold(0.0f64, |m, v| m.max(v.abs()));
        if norm < 1e-12 {
            continue;
        }
        let pf = apply_markov(ring, mu1, &f, &inner_v)?;
        let top = pf.values().fold(0.0f64, |m, v| m.max(v.abs()));
        max_ratio = max_ratio.max(top / norm);
        used += 1;
    }
    Ok(ShadowReport {
        delta,
        bound: 1.0 - delta,
        max_ratio,
        samples: used,
        window: inner.len(),
        padded: twice.len(),
        idempotent_defect,
    })
}

/// `‖Σ_g λ(g) U_g‖` for a unitary representation without invariant vectors
/// and a strictly positive probability `λ`.
pub fn lemma_contract_finite(group: &FiniteGroup, u: &[DMatrix<Complex64>], lambda: &[f64]) -> Result<f64> {
    let n = group.order();
    if u.len() != n || lambda.len() != n {
        return Err(Error::Domain(format!("need {n} matrices and {n} weights")));
    }
    let dim = u[0].nrows();
    let eye = DMatrix::<Complex64>::identity(dim, dim);
    for (g, m) in u.iter().enumerate() {
        if m.nrows() != dim || m.ncols() != dim {
            return Err(Error::Domain(format!("U({}) is not {dim}×{dim}", group.name(g))));
        }
        if (m.adjoint() * m - &eye).camax() > 1e-10 {
            return Err(Error::Domain(format!("U({}) is not unitary", group.name(g))));
        }
    }
    for a in 0..n {
        for b in 0..n {
            if (&u[a] * &u[b] - &u[group.mul(a, b)]).camax() > 1e-10 {
                return Err(Error::Domain(format!(
                    "not a homomorphism at ({}, {})",
                    group.name(a),
                    group.name(b)
                )));
            }
        }
    }
    let avg = u.iter().fold(DMatrix::zeros(dim, dim), |acc, m| acc + m) / Complex64::new(n as f64, 0.0);
    if avg.camax() > 1e-8 {
        return Err(Error::Domain("representation has invariant vectors".into()));
    }
    if lambda.iter().any(|w| w.is_nan() || *w <= 0.0) || (lambda.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::Domain("λ must be a strictly positive probability".into()));
    }
    let m = u
        .iter()
        .zip(lambda)
        .fold(DMatrix::zeros(dim, dim), |acc, (x, w)| acc + x * Complex64::new(*w, 0.0));
    let norm = m.svd(false, false).singular_values.max();
    if norm > 1.0 - 1e-12 {
        return Err(Error::InternalConsistency(format!("averaged norm {norm} is not below 1")));
    }
    Ok(norm)
}
