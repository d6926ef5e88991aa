use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{convolve, FusionRing, LabelMeasure};
use crate::error::Result;

/// Associativity is checked on triples from this many sample labels.
const ASSOC_SAMPLE: usize = 10;

/// Outcome of one ring axiom over a label sample.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Largest violation seen (0 for exact checks that hold).
    pub worst: f64,
    pub first_failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct InvariantReport {
    pub checks: Vec<InvariantCheck>,
}

impl InvariantReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{}: {}", c.name, c.first_failure.as_deref().unwrap_or("")))
            .collect()
    }
}

struct Tally {
    name: &'static str,
    tol: f64,
    worst: f64,
    first_failure: Option<String>,
}

impl Tally {
    fn new(name: &'static str, tol: f64) -> Self {
        Self { name, tol, worst: 0.0, first_failure: None }
    }

    fn record(&mut self, err: f64, what: impl FnOnce() -> String) {
        if err.is_nan() || err > self.worst {
            self.worst = if err.is_nan() { f64::INFINITY } else { err };
        }
        if (err.is_nan() || err > self.tol) && self.first_failure.is_none() {
            self.first_failure = Some(what());
        }
    }

    fn finish(self) -> InvariantCheck {
        InvariantCheck {
            name: self.name,
            passed: self.first_failure.is_none(),
            worst: self.worst,
            first_failure: self.first_failure,
        }
    }
}

/// Memoized `fuse`; the checks below ask for the same products many times.
struct FuseCache<'a, R: FusionRing> {
    ring: &'a R,
    memo: RefCell<HashMap<(R::Label, R::Label), Vec<(R::Label, u32)>>>,
}

impl<'a, R: FusionRing> FuseCache<'a, R> {
    fn fuse(&self, s: &R::Label, r: &R::Label) -> Result<Vec<(R::Label, u32)>> {
        let key = (s.clone(), r.clone());
        if let Some(v) = self.memo.borrow().get(&key) {
            return Ok(v.clone());
        }
        let v = self.ring.fuse(s, r)?;
        self.memo.borrow_mut().insert(key, v.clone());
        Ok(v)
    }

    fn mult(&self, s: &R::Label, r: &R::Label, t: &R::Label) -> Result<u32> {
        Ok(self.fuse(s, r)?.into_iter().find(|(l, _)| l == t).map_or(0, |(_, m)| m))
    }
}

/// Check the fusion-ring axioms on `sample` (and on every label produced by
/// fusing two sample labels). `tol` applies to the dimension identity.
pub fn check_invariants<R: FusionRing>(ring: &R, sample: &[R::Label], tol: f64) -> Result<InvariantReport> {
    let e = ring.unit();
    let name = |l: &R::Label| ring.label_name(l);
    let fc = FuseCache { ring, memo: RefCell::new(HashMap::new()) };
    let mut unit = Tally::new("unit", 0.0);
    let mut dim_unit = Tally::new("dim(e) = 1", 0.0);
    let mut dim_id = Tally::new("dimension identity", tol);
    let mut dual_sym = Tally::new("dual symmetry", 0.0);
    let mut frob = Tally::new("Frobenius reciprocity", 0.0);
    let mut dual_dim = Tally::new("dim(dual s) = dim(s)", tol);
    let mut involution = Tally::new("dual involution", 0.0);
    let mut assoc = Tally::new("associativity", 0.0);
    let mut mass = Tally::new("mass conservation", tol);

    dim_unit.record((ring.dim(&e)? - 1.0).abs(), || format!("dim(e) = {}", ring.dim(&e).unwrap_or(f64::NAN)));

    for s in sample {
        let ds = ring.dim(s)?;
        let sb = ring.dual(s)?;
        involution.record(if ring.dual(&sb)? == *s { 0.0 } else { 1.0 }, || format!("dual(dual({}))", name(s)));
        dual_dim.record((ring.dim(&sb)? - ds).abs(), || format!("dim of dual of {}", name(s)));
        for (left, right) in [(&e, s), (s, &e)] {
            let f = fc.fuse(left, right)?;
            let ok = f.len() == 1 && f[0].0 == *s && f[0].1 == 1;
            unit.record(if ok { 0.0 } else { 1.0 }, || format!("{} ⊗ {}", name(left), name(right)));
        }
    }

    for s in sample {
        let ds = ring.dim(s)?;
        let sb = ring.dual(s)?;
        for r in sample {
            let dr = ring.dim(r)?;
            let rb = ring.dual(r)?;
            let fused = fc.fuse(s, r)?;
            let total: f64 = fused
                .iter()
                .map(|(t, m)| Ok(*m as f64 * ring.dim(t)?))
                .sum::<Result<f64>>()?;
            let step = convolve(&LabelMeasure::delta(s.clone()), &LabelMeasure::delta(r.clone()), ring)?;
            mass.record((step.total_mass() - 1.0).abs(), || format!("δ_{} ∗ δ_{}", name(s), name(r)));
            let rel = (total - ds * dr).abs() / (ds * dr).max(1.0);
            dim_id.record(rel, || format!("{} ⊗ {}: {} vs {}", name(s), name(r), total, ds * dr));
            let mut ts: BTreeSet<R::Label> = fused.iter().map(|(t, _)| t.clone()).collect();
            ts.extend(sample.iter().cloned());
            for t in &ts {
                let m = fc.mult(s, r, t)?;
                let tb = ring.dual(t)?;
                let d = fc.mult(&rb, &sb, &tb)?;
                dual_sym.record(if m == d { 0.0 } else { 1.0 }, || {
                    format!("mult({}, {}, {}) = {m} vs {d}", name(s), name(r), name(t))
                });
                let f1 = fc.mult(&sb, t, r)?;
                let f2 = fc.mult(t, &rb, s)?;
                frob.record(if m == f1 && m == f2 { 0.0 } else { 1.0 }, || {
                    format!("mult({}, {}, {}) = {m} vs {f1}, {f2}", name(s), name(r), name(t))
                });
            }
        }
    }

    let head = &sample[..sample.len().min(ASSOC_SAMPLE)];
    let expand = |terms: &BTreeMap<R::Label, u64>, right: &R::Label, left_side: bool| -> Result<BTreeMap<R::Label, u64>> {
        let mut out = BTreeMap::new();
        for (t, m) in terms {
            let f = if left_side { fc.fuse(right, t)? } else { fc.fuse(t, right)? };
            for (u, k) in f {
                *out.entry(u).or_insert(0) += m * k as u64;
            }
        }
        Ok(out)
    };
    for s in head {
        for r in head {
            let sr: BTreeMap<R::Label, u64> = fc.fuse(s, r)?.into_iter().map(|(t, m)| (t, m as u64)).collect();
            for q in head {
                let rq: BTreeMap<R::Label, u64> = fc.fuse(r, q)?.into_iter().map(|(t, m)| (t, m as u64)).collect();
                let left = expand(&sr, q, false)?;
                let right = expand(&rq, s, true)?;
                assoc.record(if left == right { 0.0 } else { 1.0 }, || {
                    format!("({} ⊗ {}) ⊗ {}", name(s), name(r), name(q))
                });
            }
        }
    }
    if !head.is_empty() {
        let u = LabelMeasure::uniform(head.iter().cloned());
        let two = convolve(&u, &u, ring)?;
        let three = convolve(&two, &u, ring)?;
        mass.record((three.total_mass() - 1.0).abs(), || "third power of the uniform sample measure".into());
    }

    Ok(InvariantReport {
        checks: vec![
            assoc.finish(),
            mass.finish(),
            unit.finish(),
            dim_unit.finish(),
            dim_id.finish(),
            dual_sym.finish(),
            frob.finish(),
            dual_dim.finish(),
            involution.finish(),
        ],
    })
}
