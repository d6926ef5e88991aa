use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::green::{KilledGreen, KilledWalk};
use crate::crossed::{BlockIndex, CrossedElement, NormalTrace, QGroupContext};
use crate::error::{Error, Result};
use crate::fusion::{dual_measure, LabelDomain, LabelMeasure, PointedRing, MARTIN_FLOOR};
use crate::groups::Elem;

/// Row cap for the killed walk on `ball(R) × S`.
const MAX_KILLED_ROWS: usize = 4_000_000;

/// Profile values under this are round-off and reported as `0`.
pub const ROUNDOFF: f64 = 1e-12;

/// One value per sphere radius, `None` where a denominator fell under the
/// floor.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereProfile {
    pub sphere: u32,
    pub value: Option<f64>,
    pub blocks: usize,
}

/// All values defined and strictly decreasing.
pub fn strictly_decreasing(profile: &[SphereProfile]) -> bool {
    profile.iter().all(|p| p.value.is_some())
        && profile.windows(2).all(|w| w[1].value.unwrap() < w[0].value.unwrap())
}

/// All values defined and non-increasing.
pub fn non_increasing(profile: &[SphereProfile]) -> bool {
    profile.iter().all(|p| p.value.is_some())
        && profile.windows(2).all(|w| w[1].value.unwrap() <= w[0].value.unwrap())
}

/// Green and Martin kernels of `μ̌` at block level, on the walk killed
/// outside `ball(R)`, with the classical kernel of the Γ-marginal.
pub struct MartinHarness<'a> {
    ctx: &'a QGroupContext,
    horizon: usize,
    walk: Arc<KilledWalk>,
    phi_check: NormalTrace,
    g_unit: CrossedElement,
    block_cache: BTreeMap<BlockIndex, f64>,
}

impl<'a> MartinHarness<'a> {
    /// `μ̌(b) = μ(b̄)` and `φ_{μ̌}`, the killed walk, and `G_{μ̌}(I₀)`.
    pub fn new(ctx: &'a QGroupContext, mu: &LabelMeasure<BlockIndex>, horizon: usize, radius: u32) -> Result<Self> {
        let (walk, phi_check) = Self::walk_for(ctx, mu, radius)?;
        let mut g = KilledGreen::new(walk.clone(), &ctx.i0());
        g.advance_to(horizon)?;
        Ok(Self::with_unit_green(ctx, walk, phi_check, horizon, g.value()))
    }

    /// The checked state and its killed walk, for callers that manage their
    /// own accumulators.
    pub fn walk_for(ctx: &QGroupContext, mu: &LabelMeasure<BlockIndex>, radius: u32) -> Result<(Arc<KilledWalk>, NormalTrace)> {
        let mu_check = dual_measure(mu, &ctx.irr())?;
        let phi_check = ctx.state_from_blocks(&mu_check)?;
        let walk = Arc::new(KilledWalk::new(ctx, &phi_check, radius, MAX_KILLED_ROWS)?);
        Ok((walk, phi_check))
    }

    pub fn with_unit_green(
        ctx: &'a QGroupContext,
        walk: Arc<KilledWalk>,
        phi_check: NormalTrace,
        horizon: usize,
        g_unit: CrossedElement,
    ) -> Self {
        Self { ctx, horizon, walk, phi_check, g_unit, block_cache: BTreeMap::new() }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn radius(&self) -> u32 {
        self.walk.radius()
    }

    pub fn phi_check(&self) -> &NormalTrace {
        &self.phi_check
    }

    pub fn unit_green(&self) -> &CrossedElement {
        &self.g_unit
    }

    /// `G_{μ̌}(x)` at the harness horizon.
    pub fn green(&self, x: &CrossedElement) -> Result<CrossedElement> {
        let mut g = KilledGreen::new(self.walk.clone(), x);
        g.advance_to(self.horizon)?;
        Ok(g.value())
    }

    /// `g_b = φ_b(G(I₀))`, the value of the central element `G(I₀)` on `b`.
    pub fn unit_value(&mut self, b: &BlockIndex) -> Result<f64> {
        if let Some(v) = self.block_cache.get(b) {
            return Ok(*v);
        }
        let v = self.ctx.block_value(&self.g_unit, b)?.re;
        self.block_cache.insert(b.clone(), v);
        Ok(v)
    }

    fn sphere_bases(&self, r_max: u32) -> Result<Vec<Vec<Elem>>> {
        let spheres = self.ctx.gamma().spheres(r_max, usize::MAX)?;
        let sym = self.ctx.symmetry();
        Ok(spheres
            .into_iter()
            .map(|s| s.into_iter().filter(|x| sym.orbit_base(x) == *x).collect())
            .collect())
    }

    /// Per sphere `1..=r_max`: the maximum over its blocks of
    /// `‖block_matrix(b)·π(z_b)‖`.
    fn profile(
        &mut self,
        r_max: u32,
        mut block_matrix: impl FnMut(&mut Self, &BlockIndex, &[Elem], f64) -> Result<DMatrix<Complex64>>,
    ) -> Result<Vec<SphereProfile>> {
        if r_max >= self.radius() {
            return Err(Error::Domain(format!(
                "spheres up to {r_max} need a killing radius above {}",
                self.radius()
            )));
        }
        let bases = self.sphere_bases(r_max)?;
        let mut out = Vec::with_capacity(r_max as usize);
        for r in 1..=r_max {
            let mut best: Option<f64> = Some(0.0);
            let mut count = 0;
            for base in &bases[r as usize] {
                let ob = self.ctx.orbit_blocks(base)?;
                for block in &ob.blocks {
                    count += 1;
                    let g = self.unit_value(&block.label)?;
                    if g <= MARTIN_FLOOR {
                        best = None;
                        continue;
                    }
                    let m = block_matrix(self, &block.label, &ob.orbit, g)? * block.projection();
                    let v = m.svd(false, false).singular_values.max();
                    let v = if v < ROUNDOFF { 0.0 } else { v };
                    best = best.map(|b| b.max(v));
                }
            }
            out.push(SphereProfile { sphere: r, value: best, blocks: count });
        }
        Ok(out)
    }

    /// `max_b ‖K(x) z_b‖` per sphere, given `gx = G_{μ̌}(x)`.
    pub fn kernel_profile(&mut self, gx: &CrossedElement, r_max: u32) -> Result<Vec<SphereProfile>> {
        let ctx = self.ctx;
        self.profile(r_max, |_, _, orbit, g| Ok(ctx.orbit_matrix(orbit, gx).unscale(g)))
    }

    /// `max_b ‖(n·1 − K(p)) z_b‖` per sphere, given `gp = G_{μ̌}(p)`.
    pub fn unit_defect_profile(&mut self, gp: &CrossedElement, r_max: u32) -> Result<Vec<SphereProfile>> {
        let ctx = self.ctx;
        let n = ctx.s_order() as f64;
        self.profile(r_max, |_, _, orbit, g| {
            let k = ctx.orbit_matrix(orbit, gp).unscale(g);
            Ok(DMatrix::identity(k.nrows(), k.ncols()).scale(n).map(|v: f64| Complex64::new(v, 0.0)) - k)
        })
    }

    /// `max_b ‖(K(z) − n·K̄(E z)) z_b‖` per sphere, given `gz = G_{μ̌}(z)`,
    /// with `K̄` computed on the pointed ring of `Γ`.
    pub fn compare_profile(&mut self, z: &CrossedElement, gz: &CrossedElement, r_max: u32) -> Result<Vec<SphereProfile>> {
        let ctx = self.ctx;
        let gamma = ctx.gamma();
        let kbar = classical_martin_values(ctx, &self.phi_check, &ctx.conditional_e(z), self.horizon, self.radius(), r_max)?;
        let n = ctx.s_order() as f64;
        self.profile(r_max, |_, _, orbit, g| {
            let mut terms = Vec::with_capacity(orbit.len());
            for x in orbit {
                match kbar.get(x) {
                    Some(v) => terms.push(((x.clone(), 0), Complex64::new(n * v, 0.0))),
                    None => {
                        return Err(Error::NotYetReached {
                            horizon: 0,
                            what: format!("classical G({}, e)", gamma.format(x)),
                        })
                    }
                }
            }
            let classical = CrossedElement::from_terms(terms, crate::crossed::Window::Exact);
            Ok(ctx.orbit_matrix(orbit, gz).unscale(g) - ctx.orbit_matrix(orbit, &classical))
        })
    }
}

/// `K̄(y)(γ') = Σ_η y(η) G(γ', η) / G(γ', e)` for the left walk with the
/// Γ-marginal `μ̄` of `φ`, through the right walk on the pointed ring with
/// the inverted measure: `G_left(γ', η) = G_right(γ'⁻¹, η⁻¹)`.
fn classical_martin_values(
    ctx: &QGroupContext,
    phi: &NormalTrace,
    y: &CrossedElement,
    horizon: usize,
    radius: u32,
    r_max: u32,
) -> Result<BTreeMap<Elem, f64>> {
    let gamma = ctx.gamma();
    let ring = PointedRing::new(gamma.clone());
    let mu_right = dual_measure(&phi.marginal(), &ring)?;
    let step = mu_right.support().map(|g| gamma.length(g)).max().unwrap_or(1).max(1);
    let domain = LabelDomain::build(&ring, &mu_right, Some(radius.div_ceil(step)), usize::MAX)?;
    let denom = domain.green_column(&Elem::identity(), horizon)?;
    let mut columns = Vec::new();
    for ((eta, _), v) in y.iter() {
        if v.im.abs() > 1e-12 {
            return Err(Error::Domain("classical Martin kernel needs a real function".into()));
        }
        columns.push((v.re, domain.green_column(&gamma.inverse(eta), horizon)?));
    }
    let mut out = BTreeMap::new();
    for x in gamma.ball(r_max)? {
        let i = domain
            .index_of(&gamma.inverse(&x))
            .ok_or_else(|| Error::Domain(format!("{} outside the classical domain", gamma.format(&x))))?;
        if denom[i] <= MARTIN_FLOOR {
            continue;
        }
        let num: f64 = columns.iter().map(|(w, col)| w * col[i]).sum();
        out.insert(x, num / denom[i]);
    }
    Ok(out)
}

/// Residual table `ρ(r)` of the Martin kernel comparison for `z`.
#[derive(Clone, Debug, PartialEq)]
pub struct MartinReport {
    pub horizon: usize,
    pub radius: u32,
    pub profile: Vec<SphereProfile>,
    /// Some sphere had a block below the denominator floor.
    pub truncated: bool,
    pub strictly_decreasing: bool,
    /// `ρ(r_max)/ρ(1)`.
    pub ratio: Option<f64>,
}

pub fn martin_compare(
    ctx: &QGroupContext,
    mu: &LabelMeasure<BlockIndex>,
    z: &CrossedElement,
    horizon: usize,
    radius: u32,
    r_max: u32,
) -> Result<MartinReport> {
    let mut h = MartinHarness::new(ctx, mu, horizon, radius)?;
    let gz = h.green(z)?;
    let profile = h.compare_profile(z, &gz, r_max)?;
    Ok(MartinReport::from_profile(horizon, radius, profile))
}

impl MartinReport {
    pub fn from_profile(horizon: usize, radius: u32, profile: Vec<SphereProfile>) -> Self {
        let truncated = profile.iter().any(|p| p.value.is_none());
        let ratio = match (profile.first().and_then(|p| p.value), profile.last().and_then(|p| p.value)) {
            (Some(a), Some(b)) if a > 0.0 => Some(b / a),
            _ => None,
        };
        Self { horizon, radius, strictly_decreasing: strictly_decreasing(&profile), truncated, ratio, profile }
    }
}
