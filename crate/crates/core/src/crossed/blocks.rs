use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CrossedElement, NormalTrace, QGroupContext, Window};
use crate::error::{Error, Result};
use crate::fusion::{FusionRing, LabelMeasure};
use crate::groups::Elem;

const SPLIT_SEED: u64 = 0x51ab_0c4e;
const SPLIT_RETRIES: u64 = 8;
const DEGENERACY_TOL: f64 = 1e-8;
const DUAL_TOL: f64 = 1e-8;

/// Zero out rounding noise below `1e-13` in each part.
fn clean(z: Complex64) -> Complex64 {
    let f = |x: f64| if x.abs() < 1e-13 { 0.0 } else { x };
    Complex64::new(f(z.re), f(z.im))
}

/// A simple object of `H`: a minimal central projection of `ℓ∞(O)⋊S`,
/// named by the orbit base point and its position within the orbit.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockIndex {
    pub base: Elem,
    pub index: usize,
}

#[derive(Clone, Debug)]
pub struct Block {
    pub label: BlockIndex,
    pub dim: usize,
    /// The central idempotent `z_b`.
    pub idempotent: CrossedElement,
    /// Weights of the normalized block trace `φ_b` on pairs of the orbit.
    pub trace: BTreeMap<(Elem, usize), Complex64>,
    projection: DMatrix<Complex64>,
}

impl Block {
    /// `π(z_b)` on `ℓ²(O × S)` in the orbit's sorted order.
    pub fn projection(&self) -> &DMatrix<Complex64> {
        &self.projection
    }
}

/// The block decomposition of one orbit.
#[derive(Clone, Debug)]
pub struct OrbitBlocks {
    pub base: Elem,
    /// The orbit, sorted; also the row order of the block projections.
    pub orbit: Vec<Elem>,
    pub stabilizer: Vec<usize>,
    pub blocks: Vec<Block>,
}

impl QGroupContext {
    /// Central idempotents, traces and dimensions of the orbit of `gamma`
    /// (cached per orbit).
    pub fn orbit_blocks(&self, gamma: &Elem) -> Result<Arc<OrbitBlocks>> {
        let base = self.symmetry().orbit_base(gamma);
        if let Some(b) = self.blocks.lock().expect("block cache poisoned").get(&base) {
            return Ok(b.clone());
        }
        let computed = Arc::new(self.decompose(&base)?);
        let mut cache = self.blocks.lock().expect("block cache poisoned");
        Ok(cache.entry(base).or_insert(computed).clone())
    }

    fn decompose(&self, base: &Elem) -> Result<OrbitBlocks> {
        let sym = self.symmetry();
        let sg = sym.group();
        let n = self.s_order();
        let orbit = sym.orbit(base);
        let stabilizer = sym.stabilizer(base);
        let expected = sg.conjugacy_classes_in(&stabilizer).len();
        // Basis of the center: S-orbits of pairs (γ, s ∈ S_γ).
        let mut classes: Vec<Vec<(Elem, usize)>> = Vec::new();
        let mut seen: BTreeSet<(Elem, usize)> = BTreeSet::new();
        for g in &orbit {
            for s in sym.stabilizer(g) {
                if seen.contains(&(g.clone(), s)) {
                    continue;
                }
                let mut class: Vec<(Elem, usize)> =
                    (0..n).map(|u| (sym.apply(u, g), sg.conj(u, s))).collect();
                class.sort();
                class.dedup();
                seen.extend(class.iter().cloned());
                classes.push(class);
            }
        }
        let dim = orbit.len() * n;
        if expected == 1 {
            // Free orbit: the whole orbit algebra is one matrix block.
            let d = (dim as f64).sqrt().round() as usize;
            if d * d != dim {
                return Err(Error::NumericalDegeneracy(format!("block of rank {dim} is not a square")));
            }
            let p = DMatrix::identity(dim, dim);
            let w = Complex64::new(1.0 / orbit.len() as f64, 0.0);
            let trace = orbit.iter().map(|g| ((g.clone(), 0), w)).collect();
            let idempotent = self.from_orbit_matrix(&orbit, &p, 1e-12);
            let label = BlockIndex { base: base.clone(), index: 0 };
            let block = Block { label, dim: d, idempotent, trace, projection: p };
            return Ok(OrbitBlocks { base: base.clone(), orbit, stabilizer, blocks: vec![block] });
        }
        for attempt in 0..SPLIT_RETRIES {
            let mut rng = ChaCha8Rng::seed_from_u64(SPLIT_SEED + attempt);
            let mut terms = Vec::new();
            for class in &classes {
                let r = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                terms.extend(class.iter().map(|k| (k.clone(), r)));
            }
            let c = CrossedElement::from_terms(terms, Window::Exact);
            let h = self.orbit_matrix(&orbit, &c.add(&self.adjoint(&c)));
            let eig = h.symmetric_eigen();
            let mut order: Vec<usize> = (0..dim).collect();
            order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
            let mut clusters: Vec<Vec<usize>> = Vec::new();
            let mut ambiguous = false;
            for &i in &order {
                match clusters.last_mut() {
                    Some(cl) => {
                        let gap = eig.eigenvalues[i] - eig.eigenvalues[*cl.last().unwrap()];
                        if gap < DEGENERACY_TOL {
                            cl.push(i);
                        } else {
                            ambiguous |= gap < 1e3 * DEGENERACY_TOL;
                            clusters.push(vec![i]);
                        }
                    }
                    None => clusters.push(vec![i]),
                }
            }
            if ambiguous || clusters.len() != expected {
                log::debug!("eigensplit attempt {attempt} for orbit {base:?} gave {} clusters", clusters.len());
                continue;
            }
            let mut blocks = Vec::with_capacity(expected);
            for cl in &clusters {
                let v = eig.eigenvectors.select_columns(cl);
                let p = &v * v.adjoint();
                let rank = cl.len();
                let d = (rank as f64).sqrt().round() as usize;
                if d * d != rank {
                    return Err(Error::NumericalDegeneracy(format!("block of rank {rank} is not a square")));
                }
                let idempotent = self.from_orbit_matrix(&orbit, &p, 1e-12);
                let tr = p.trace().re;
                let mut trace = BTreeMap::new();
                for g in &orbit {
                    for s in sym.stabilizer(g) {
                        let v = self.orbit_matrix(&orbit, &self.delta(g, s)) * &p;
                        let w = clean(v.trace() / tr);
                        if w != Complex64::new(0.0, 0.0) {
                            trace.insert((g.clone(), s), w);
                        }
                    }
                }
                blocks.push(Block {
                    label: BlockIndex { base: base.clone(), index: 0 },
                    dim: d,
                    idempotent,
                    trace,
                    projection: p,
                });
            }
            let key = |b: &Block| -> (usize, Vec<(i64, i64)>) {
                let ce = b.trace[&(base.clone(), 0)];
                let chars = stabilizer
                    .iter()
                    .map(|&s| {
                        let v = b.trace.get(&(base.clone(), s)).copied().unwrap_or_default() / ce;
                        (-(v.re * 1e6).round() as i64, -(v.im * 1e6).round() as i64)
                    })
                    .collect();
                (b.dim, chars)
            };
            blocks.sort_by_key(key);
            for (i, b) in blocks.iter_mut().enumerate() {
                b.label.index = i;
            }
            let sum = blocks.iter().fold(DMatrix::zeros(dim, dim), |acc, b| acc + &b.projection);
            if (sum - DMatrix::identity(dim, dim)).iter().any(|z| z.norm() > 1e-8) {
                return Err(Error::NumericalDegeneracy("block idempotents do not sum to the orbit unit".into()));
            }
            return Ok(OrbitBlocks { base: base.clone(), orbit, stabilizer, blocks });
        }
        Err(Error::NumericalDegeneracy(format!(
            "center eigensplit of orbit {} stayed degenerate after {SPLIT_RETRIES} attempts",
            self.gamma().format(base)
        )))
    }

    /// Look up a block, checking that its base is an orbit base here.
    pub fn block(&self, label: &BlockIndex) -> Result<(Arc<OrbitBlocks>, usize)> {
        if self.symmetry().orbit_base(&label.base) != label.base {
            return Err(Error::Domain(format!(
                "{} is not an orbit base point",
                self.gamma().format(&label.base)
            )));
        }
        let ob = self.orbit_blocks(&label.base)?;
        if label.index >= ob.blocks.len() {
            return Err(Error::Domain(format!(
                "orbit {} has {} blocks, not {}",
                self.gamma().format(&label.base),
                ob.blocks.len(),
                label.index + 1
            )));
        }
        Ok((ob, label.index))
    }

    pub fn block_name(&self, label: &BlockIndex) -> String {
        format!("{}#{}", self.gamma().format(&label.base), label.index)
    }

    pub fn parse_block(&self, name: &str) -> Result<BlockIndex> {
        let (base, idx) = name
            .rsplit_once('#')
            .ok_or_else(|| Error::Parse(format!("block label {name:?} is not of the form base#index")))?;
        let index = idx.parse().map_err(|_| Error::Parse(format!("bad block index in {name:?}")))?;
        let base = self.gamma().parse(base)?;
        let label = BlockIndex { base, index };
        self.block(&label)?;
        Ok(label)
    }

    /// The block trace `φ_b` as a state.
    pub fn block_state(&self, label: &BlockIndex) -> Result<NormalTrace> {
        let (ob, i) = self.block(label)?;
        NormalTrace::from_weights(self, ob.blocks[i].trace.iter().map(|(k, v)| (k.clone(), *v)))
    }

    /// `φ_μ = Σ_b μ(b) φ_b`.
    pub fn state_from_blocks(&self, mu: &LabelMeasure<BlockIndex>) -> Result<NormalTrace> {
        if !mu.is_probability() {
            return Err(Error::Contract("block measure must be a probability".into()));
        }
        let mut weights: BTreeMap<(Elem, usize), Complex64> = BTreeMap::new();
        for (label, w) in mu.iter() {
            let (ob, i) = self.block(label)?;
            for (k, v) in &ob.blocks[i].trace {
                *weights.entry(k.clone()).or_insert(Complex64::new(0.0, 0.0)) += v * w;
            }
        }
        NormalTrace::from_weights(self, weights)
    }

    /// `μ(b) = φ(z_b)` over the orbits meeting the support of `φ`.
    pub fn block_measure(&self, phi: &NormalTrace) -> Result<LabelMeasure<BlockIndex>> {
        let bases: BTreeSet<Elem> = phi.weights().map(|((g, _), _)| self.symmetry().orbit_base(g)).collect();
        let mut items = Vec::new();
        for b in bases {
            let ob = self.orbit_blocks(&b)?;
            for block in &ob.blocks {
                let v = phi.evaluate(&block.idempotent);
                if v.re < -1e-10 || v.im.abs() > 1e-10 {
                    return Err(Error::InternalConsistency(format!("state has weight {v} on a block")));
                }
                items.push((block.label.clone(), v.re.max(0.0)));
            }
        }
        LabelMeasure::new(items)
    }

    /// `‖π(x z_b)‖`: the norm of `x` restricted to one block.
    pub fn block_norm(&self, x: &CrossedElement, label: &BlockIndex) -> Result<f64> {
        let (ob, i) = self.block(label)?;
        let m = self.orbit_matrix(&ob.orbit, x) * ob.blocks[i].projection();
        Ok(super::spectral_norm(&m))
    }

    /// `φ_b(x)`.
    pub fn block_value(&self, x: &CrossedElement, label: &BlockIndex) -> Result<Complex64> {
        let (ob, i) = self.block(label)?;
        Ok(x.iter()
            .map(|(k, v)| ob.blocks[i].trace.get(k).copied().unwrap_or_default() * v)
            .sum())
    }

    /// The block `b'` with `S(z_b) = z_{b'}`.
    pub fn dual_block(&self, label: &BlockIndex) -> Result<BlockIndex> {
        let (ob, i) = self.block(label)?;
        let image = self.antipode(&ob.blocks[i].idempotent);
        let inv_base = self.symmetry().orbit_base(&self.gamma().inverse(&label.base));
        let target = self.orbit_blocks(&inv_base)?;
        target
            .blocks
            .iter()
            .find(|b| b.idempotent.max_abs_diff(&image) < DUAL_TOL)
            .map(|b| b.label.clone())
            .ok_or_else(|| {
                Error::InternalConsistency(format!("antipode image of {} is not a block", self.block_name(label)))
            })
    }

    pub fn irr(&self) -> IrrH<'_> {
        IrrH { ctx: self }
    }
}

/// `Irr(H)` as a fusion ring over blocks.
#[derive(Clone, Copy, Debug)]
pub struct IrrH<'a> {
    ctx: &'a QGroupContext,
}

impl IrrH<'_> {
    pub fn context(&self) -> &QGroupContext {
        self.ctx
    }
}

struct BlockWalk<'a> {
    ctx: &'a QGroupContext,
    steps: Vec<Elem>,
    radius: u32,
    sphere: Vec<Elem>,
    pos: usize,
    pending: std::collections::VecDeque<BlockIndex>,
}

impl Iterator for BlockWalk<'_> {
    type Item = BlockIndex;

    fn next(&mut self) -> Option<BlockIndex> {
        let g = self.ctx.gamma();
        let sym = self.ctx.symmetry();
        loop {
            if let Some(b) = self.pending.pop_front() {
                return Some(b);
            }
            if self.pos == self.sphere.len() {
                let mut next = BTreeSet::new();
                for w in &self.sphere {
                    for s in &self.steps {
                        let v = g.multiply(w, s);
                        if g.length(&v) == self.radius + 1 {
                            next.insert(v);
                        }
                    }
                }
                if next.is_empty() {
                    return None;
                }
                self.radius += 1;
                self.sphere = next.into_iter().collect();
                self.pos = 0;
            }
            let x = self.sphere[self.pos].clone();
            self.pos += 1;
            if sym.orbit_base(&x) == x {
                match self.ctx.orbit_blocks(&x) {
                    Ok(ob) => self.pending.extend(ob.blocks.iter().map(|b| b.label.clone())),
                    Err(e) => {
                        log::warn!("stopping block enumeration: {e}");
                        return None;
                    }
                }
            }
        }
    }
}

impl FusionRing for IrrH<'_> {
    type Label = BlockIndex;

    fn unit(&self) -> BlockIndex {
        BlockIndex { base: Elem::identity(), index: 0 }
    }

    fn contains(&self, s: &BlockIndex) -> bool {
        self.ctx.block(s).is_ok()
    }

    fn dual(&self, s: &BlockIndex) -> Result<BlockIndex> {
        self.ctx.dual_block(s)
    }

    fn dim(&self, s: &BlockIndex) -> Result<f64> {
        let (ob, i) = self.ctx.block(s)?;
        Ok(ob.blocks[i].dim as f64)
    }

    fn fuse(&self, s: &BlockIndex, r: &BlockIndex) -> Result<Vec<(BlockIndex, u32)>> {
        let ds = self.dim(s)?;
        let dr = self.dim(r)?;
        let prod = self.ctx.block_state(s)?.convolve(&self.ctx.block_state(r)?, self.ctx)?;
        let bases: BTreeSet<Elem> = prod.weights().map(|((g, _), _)| self.ctx.symmetry().orbit_base(g)).collect();
        let mut out = Vec::new();
        for b in bases {
            let ob = self.ctx.orbit_blocks(&b)?;
            for block in &ob.blocks {
                let v = prod.evaluate(&block.idempotent);
                let m = v * (ds * dr / block.dim as f64);
                let rounded = m.re.round();
                if (m - Complex64::new(rounded, 0.0)).norm() > 1e-6 || rounded < 0.0 {
                    return Err(Error::InternalConsistency(format!(
                        "non-integral multiplicity {m} of {} in {} ⊗ {}",
                        self.ctx.block_name(&block.label),
                        self.ctx.block_name(s),
                        self.ctx.block_name(r)
                    )));
                }
                if rounded > 0.0 {
                    out.push((block.label.clone(), rounded as u32));
                }
            }
        }
        out.sort();
        Ok(out)
    }

    fn labels(&self) -> Box<dyn Iterator<Item = BlockIndex> + '_> {
        let mut pending = std::collections::VecDeque::new();
        if let Ok(ob) = self.ctx.orbit_blocks(&Elem::identity()) {
            pending.extend(ob.blocks.iter().map(|b| b.label.clone()));
        }
        Box::new(BlockWalk {
            ctx: self.ctx,
            steps: self.ctx.gamma().step_generators(),
            radius: 0,
            sphere: vec![Elem::identity()],
            pos: 1,
            pending,
        })
    }

    fn label_count(&self) -> Option<usize> {
        if self.ctx.gamma().is_finite() {
            Some(self.labels().count())
        } else {
            None
        }
    }

    fn label_name(&self, s: &BlockIndex) -> String {
        self.ctx.block_name(s)
    }

    fn parse_label(&self, name: &str) -> Result<BlockIndex> {
        self.ctx.parse_block(name)
    }
}
