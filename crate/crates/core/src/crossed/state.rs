use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{CrossedElement, QGroupContext};
use crate::error::{domain, Error, Result};
use crate::fusion::LabelMeasure;
use crate::groups::{Elem, FiniteGroup};

const STATE_TOL: f64 = 1e-10;

/// Support cap for states produced by convolution or mixing.
pub const STATE_SUPPORT_CAP: usize = 2_000_000;

/// A normal tracial state as a weight function `c(γ, s)`, `s ∈ S_γ`:
/// `φ(fλ_s) = Σ_{γ: s∈S_γ} c(γ, s) f(γ)`.
#[derive(Clone, Debug)]
pub struct NormalTrace {
    weights: BTreeMap<(Elem, usize), Complex64>,
    /// Per `s`: `(γ, γ⁻¹, c(γ, s))`.
    by_s: Vec<Vec<(Elem, Elem, Complex64)>>,
    radius: u32,
}

impl PartialEq for NormalTrace {
    fn eq(&self, other: &Self) -> bool {
        self.weights == other.weights
    }
}

/// `φ = tφ₁ + (1−t)φ₂` with `φ₁` the part at `γ = e`.
#[derive(Clone, Debug)]
pub struct StateSplit {
    pub t: f64,
    /// `ν(λ_s) = c(e, s)/c(e, e)`, indexed by `S`.
    pub nu: Vec<Complex64>,
    pub phi1: NormalTrace,
    pub phi2: Option<NormalTrace>,
}

impl NormalTrace {
    /// Validate and wrap a weight function.
    pub fn from_weights(
        ctx: &QGroupContext,
        weights: impl IntoIterator<Item = ((Elem, usize), Complex64)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (k, v) in weights {
            *map.entry(k).or_insert(Complex64::new(0.0, 0.0)) += v;
        }
        let state = Self::build(ctx, map);
        state.validate(ctx)?;
        Ok(state)
    }

    fn build(ctx: &QGroupContext, mut weights: BTreeMap<(Elem, usize), Complex64>) -> Self {
        weights.retain(|_, v| *v != Complex64::new(0.0, 0.0));
        let g = ctx.gamma();
        let mut by_s = vec![Vec::new(); ctx.s_order()];
        let mut radius = 0;
        for ((gamma, s), c) in &weights {
            radius = radius.max(g.length(gamma));
            by_s[*s].push((gamma.clone(), g.inverse(gamma), *c));
        }
        Self { weights, by_s, radius }
    }

    fn validate(&self, ctx: &QGroupContext) -> Result<()> {
        let sym = ctx.symmetry();
        let sg = sym.group();
        let mut total = 0.0;
        for ((gamma, s), c) in &self.weights {
            if !c.re.is_finite() || !c.im.is_finite() {
                return domain("non-finite state weight");
            }
            if !sym.fixes(*s, gamma) {
                return domain(format!(
                    "weight at ({}, {}) but {} does not fix it",
                    ctx.gamma().format(gamma),
                    sg.name(*s),
                    sg.name(*s)
                ));
            }
            if *s == 0 {
                if c.im.abs() > STATE_TOL || c.re < -STATE_TOL {
                    return domain(format!("c({}, e) = {c} is not nonnegative", ctx.gamma().format(gamma)));
                }
                total += c.re;
            }
            for u in 0..sym.order() {
                let img = (sym.apply(u, gamma), sg.conj(u, *s));
                let there = self.weights.get(&img).copied().unwrap_or_default();
                if (there - c).norm() > STATE_TOL {
                    return domain(format!(
                        "weights are not S-equivariant at ({}, {})",
                        ctx.gamma().format(gamma),
                        sg.name(*s)
                    ));
                }
            }
        }
        if (total - 1.0).abs() > STATE_TOL {
            return domain(format!("Γ-marginal has mass {total}, not 1"));
        }
        let mut seen = BTreeMap::new();
        for (gamma, _) in self.weights.keys() {
            let base = sym.orbit_base(gamma);
            if seen.insert(base.clone(), ()).is_some() {
                continue;
            }
            let stab = sym.stabilizer(&base);
            let ce = self.weight(&base, 0).re;
            let v = |s: usize| self.weight(&base, s);
            if ce <= STATE_TOL {
                if stab.iter().any(|&s| v(s).norm() > STATE_TOL) {
                    return domain(format!("weights at {} without diagonal mass", ctx.gamma().format(&base)));
                }
                continue;
            }
            let lmin = class_matrix_min_eig(sg, &stab, |s| v(s) / ce)?;
            if lmin < -STATE_TOL {
                return domain(format!(
                    "τ at {} is not positive definite (λ_min = {lmin})",
                    ctx.gamma().format(&base)
                ));
            }
        }
        Ok(())
    }

    /// Build from `(μ̄, τ)`: `c(γ, s) = μ̄(γ) τ_γ(λ_s)`, extended along orbits
    /// by equivariance. Orbits without a given `τ` use the Haar trace.
    pub fn from_pair(
        ctx: &QGroupContext,
        mu_bar: &[(Elem, f64)],
        taus: &[(Elem, Vec<(usize, Complex64)>)],
    ) -> Result<Self> {
        let sym = ctx.symmetry();
        let sg = sym.group();
        let mut mass: BTreeMap<Elem, f64> = BTreeMap::new();
        for (g, w) in mu_bar {
            *mass.entry(g.clone()).or_insert(0.0) += w;
        }
        let mut tau_at_base: BTreeMap<Elem, BTreeMap<usize, Complex64>> = BTreeMap::new();
        for (g, tau) in taus {
            let base = sym.orbit_base(g);
            let u = sym.transporter(&base, g).expect("orbit base lies in the orbit");
            // τ_β(s) = τ_γ(u s u⁻¹) for γ = u.β.
            let mut at_base = BTreeMap::new();
            for &(s, v) in tau {
                if !sym.fixes(s, g) {
                    return domain(format!("τ given at {} on a non-stabilizing element", ctx.gamma().format(g)));
                }
                at_base.insert(sg.conj(sg.inv(u), s), v);
            }
            if (at_base.get(&0).copied().unwrap_or_default() - Complex64::new(1.0, 0.0)).norm() > STATE_TOL {
                return domain("τ must take the value 1 at the identity");
            }
            if tau_at_base.insert(base, at_base).is_some() {
                return domain("τ given twice on one orbit");
            }
        }
        let mut weights = BTreeMap::new();
        for (g, &m) in &mass {
            if (mass.get(&sym.orbit_base(g)).copied().unwrap_or(0.0) - m).abs() > STATE_TOL
                || sym.orbit(g).iter().any(|h| (mass.get(h).copied().unwrap_or(0.0) - m).abs() > STATE_TOL)
            {
                return domain("μ̄ is not S-invariant");
            }
            let base = sym.orbit_base(g);
            let u = sym.transporter(&base, g).unwrap();
            for s in sym.stabilizer(g) {
                let tau = match tau_at_base.get(&base) {
                    Some(t) => t.get(&sg.conj(sg.inv(u), s)).copied().unwrap_or_default(),
                    None if s == 0 => Complex64::new(1.0, 0.0),
                    None => Complex64::new(0.0, 0.0),
                };
                weights.insert((g.clone(), s), tau * m);
            }
        }
        Self::from_weights(ctx, weights)
    }

    /// The counit `ε`: `c(e, s) = 1` for all `s`.
    pub fn counit(ctx: &QGroupContext) -> Self {
        let w = (0..ctx.s_order()).map(|s| ((Elem::identity(), s), Complex64::new(1.0, 0.0)));
        Self::from_weights(ctx, w).expect("counit is a state")
    }

    pub fn weight(&self, gamma: &Elem, s: usize) -> Complex64 {
        self.weights.get(&(gamma.clone(), s)).copied().unwrap_or_default()
    }

    pub fn weights(&self) -> impl Iterator<Item = (&(Elem, usize), Complex64)> {
        self.weights.iter().map(|(k, v)| (k, *v))
    }

    pub(crate) fn entries_for(&self, s: usize) -> impl Iterator<Item = (&Elem, &Elem, Complex64)> {
        self.by_s[s].iter().map(|(g, gi, c)| (g, gi, *c))
    }

    /// Largest word length in the support.
    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn support_len(&self) -> usize {
        self.weights.len()
    }

    /// `φ(x)`.
    pub fn evaluate(&self, x: &CrossedElement) -> Complex64 {
        x.iter().map(|((g, s), v)| self.weight(g, *s) * v).sum()
    }

    /// The Γ-marginal `μ̄(γ) = c(γ, e)`.
    pub fn marginal(&self) -> LabelMeasure<Elem> {
        LabelMeasure::new(
            self.weights
                .iter()
                .filter(|((_, s), _)| *s == 0)
                .map(|((g, _), c)| (g.clone(), c.re.max(0.0))),
        )
        .expect("validated weights")
    }

    /// `(φ∗ψ)(γ, s) = Σ_{γ₁γ₂=γ} c_φ(γ₁, s) c_ψ(γ₂, s)`.
    pub fn convolve(&self, other: &Self, ctx: &QGroupContext) -> Result<Self> {
        let g = ctx.gamma();
        let mut out: BTreeMap<(Elem, usize), Complex64> = BTreeMap::new();
        for s in 0..ctx.s_order() {
            for (g1, _, a) in self.entries_for(s) {
                for (g2, _, b) in other.entries_for(s) {
                    *out.entry((g.multiply(g1, g2), s)).or_insert(Complex64::new(0.0, 0.0)) += a * b;
                }
            }
            if out.len() > STATE_SUPPORT_CAP {
                return Err(Error::Resource(format!("state support exceeds {STATE_SUPPORT_CAP}")));
            }
        }
        let state = Self::build(ctx, out);
        state
            .validate(ctx)
            .map_err(|e| Error::InternalConsistency(format!("convolution left the state space: {e}")))?;
        Ok(state)
    }

    /// `Σ_{n=1..N} 2⁻ⁿ φⁿ`, renormalized.
    pub fn mix(&self, n_terms: u32, ctx: &QGroupContext) -> Result<Self> {
        if n_terms == 0 {
            return Err(Error::Contract("mixing needs at least one term".into()));
        }
        let mut power = self.clone();
        let mut acc: BTreeMap<(Elem, usize), Complex64> = BTreeMap::new();
        let norm = 1.0 - 0.5f64.powi(n_terms as i32);
        for n in 1..=n_terms {
            if n > 1 {
                power = power.convolve(self, ctx)?;
            }
            let w = 0.5f64.powi(n as i32) / norm;
            for (k, v) in power.weights() {
                *acc.entry(k.clone()).or_insert(Complex64::new(0.0, 0.0)) += v * w;
            }
        }
        Self::from_weights(ctx, acc)
    }

    /// Split off the part at `γ = e`.
    pub fn split(&self, ctx: &QGroupContext) -> Result<StateSplit> {
        let t = self.weight(&Elem::identity(), 0).re;
        if t <= 0.0 {
            return Err(Error::SplitUndefined("μ̄(e) = 0; mix the state first".into()));
        }
        let nu: Vec<Complex64> = (0..ctx.s_order()).map(|s| self.weight(&Elem::identity(), s) / t).collect();
        let phi1 = Self::from_weights(ctx, nu.iter().enumerate().map(|(s, v)| ((Elem::identity(), s), *v)))?;
        let phi2 = if t >= 1.0 - 1e-15 {
            None
        } else {
            let rest = self
                .weights
                .iter()
                .filter(|((g, _), _)| !g.is_identity())
                .map(|(k, v)| (k.clone(), v / (1.0 - t)));
            Some(Self::from_weights(ctx, rest)?)
        };
        Ok(StateSplit { t, nu, phi1, phi2 })
    }
}

/// `λ_min` of the Hermitian part of `[v(u⁻¹w)]_{u,w ∈ sub}`; errors if `v`
/// is not Hermitian or not central on `sub`.
fn class_matrix_min_eig(sg: &FiniteGroup, sub: &[usize], v: impl Fn(usize) -> Complex64) -> Result<f64> {
    let k = sub.len();
    let m = DMatrix::from_fn(k, k, |i, j| v(sg.mul(sg.inv(sub[i]), sub[j])));
    let adj = m.adjoint();
    if (&m - &adj).iter().any(|z| z.norm() > STATE_TOL) {
        return domain("group-algebra state is not self-adjoint");
    }
    for &s in sub {
        for &w in sub {
            if (v(sg.conj(w, s)) - v(s)).norm() > STATE_TOL {
                return domain(format!("group-algebra state is not central at {}", sg.name(s)));
            }
        }
    }
    let h = (&m + &adj).scale(0.5);
    Ok(h.symmetric_eigenvalues().min())
}

/// The largest `δ` with `ν − δh ≥ 0`: `λ_min` of `[ν(u⁻¹w)]`, clipped to
/// `[0, 1]`.
pub fn delta_of_nu(sg: &FiniteGroup, nu: &[Complex64]) -> Result<f64> {
    if nu.len() != sg.order() {
        return domain("ν must have one value per group element");
    }
    let all: Vec<usize> = (0..sg.order()).collect();
    let m = DMatrix::from_fn(all.len(), all.len(), |i, j| nu[sg.mul(sg.inv(i), j)]);
    if (&m - m.adjoint()).iter().any(|z| z.norm() > STATE_TOL) {
        return domain("ν is not self-adjoint");
    }
    let lmin = m.symmetric_eigenvalues().min();
    if lmin < -STATE_TOL {
        return domain(format!("ν is not positive (λ_min = {lmin})"));
    }
    Ok(lmin.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crossed::Window;
    use crate::groups::{builtin_symmetric_action, Order};

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn dihedral() -> (QGroupContext, NormalTrace) {
        let (g, s) = builtin_symmetric_action(2, Order::Finite(2)).unwrap();
        let ctx = QGroupContext::new(g, s);
        let gm = ctx.gamma();
        let mu = [(Elem::identity(), 0.5), (gm.parse("a").unwrap(), 0.25), (gm.parse("b").unwrap(), 0.25)];
        let phi = NormalTrace::from_pair(&ctx, &mu, &[(Elem::identity(), vec![(0, c(1.0)), (1, c(0.5))])]).unwrap();
        (ctx, phi)
    }

    #[test]
    fn dihedral_apply_p() {
        let (ctx, phi) = dihedral();
        let g = ctx.gamma();
        let a = g.parse("a").unwrap();
        let out = ctx.apply_p(&phi, &ctx.delta(&a, 0)).unwrap();
        let want = CrossedElement::from_terms(
            [
                ((Elem::identity(), 0), c(0.25)),
                ((a.clone(), 0), c(0.5)),
                ((g.parse("ba").unwrap(), 0), c(0.25)),
            ],
            Window::Exact,
        );
        assert_eq!(out, want);
        let sig = ctx.apply_p(&phi, &ctx.delta(&Elem::identity(), 1)).unwrap();
        assert_eq!(sig, ctx.delta(&Elem::identity(), 1).scaled(c(0.25)));
        let one = ctx.apply_p(&phi, &ctx.one(4).unwrap()).unwrap();
        assert_eq!(one.window(), Window::Ball(3));
        assert!(one.max_abs_diff(&ctx.one(3).unwrap()) < 1e-15);
    }

    #[test]
    fn dihedral_convolution_and_split() {
        let (ctx, phi) = dihedral();
        let sq = phi.convolve(&phi, &ctx).unwrap();
        assert!((sq.weight(&Elem::identity(), 1) - c(1.0 / 16.0)).norm() < 1e-15);
        let eps = NormalTrace::counit(&ctx);
        assert_eq!(phi.convolve(&eps, &ctx).unwrap(), phi);
        assert_eq!(eps.convolve(&phi, &ctx).unwrap(), phi);
        let split = phi.split(&ctx).unwrap();
        assert_eq!(split.t, 0.5);
        assert_eq!(split.nu[1], c(0.5));
        let es = eps.split(&ctx).unwrap();
        assert_eq!(es.t, 1.0);
        assert!(es.phi2.is_none());
        assert_eq!(phi.mix(1, &ctx).unwrap(), phi);
    }

    #[test]
    fn split_needs_mass_at_identity() {
        let (ctx, _) = dihedral();
        let g = ctx.gamma();
        let mu = [(g.parse("a").unwrap(), 0.5), (g.parse("b").unwrap(), 0.5)];
        let phi = NormalTrace::from_pair(&ctx, &mu, &[]).unwrap();
        assert!(matches!(phi.split(&ctx), Err(Error::SplitUndefined(_))));
        let mixed = phi.mix(2, &ctx).unwrap();
        assert!(mixed.weight(&Elem::identity(), 0).re > 0.0);
    }

    #[test]
    fn rejects_invalid_states() {
        let (ctx, _) = dihedral();
        let g = ctx.gamma();
        let a = g.parse("a").unwrap();
        assert!(NormalTrace::from_pair(&ctx, &[(a.clone(), 1.0)], &[]).is_err());
        // τ(σ) = 2 is not positive definite
        let bad = [(Elem::identity(), vec![(0, c(1.0)), (1, c(2.0))])];
        assert!(NormalTrace::from_pair(&ctx, &[(Elem::identity(), 1.0)], &bad).is_err());
        // σ does not fix a
        assert!(NormalTrace::from_weights(&ctx, [((a, 1), c(0.1)), ((Elem::identity(), 0), c(1.0))]).is_err());
    }

    #[test]
    fn delta_examples() {
        let z2 = FiniteGroup::cyclic(2);
        assert_eq!(delta_of_nu(&z2, &[c(1.0), c(0.0)]).unwrap(), 1.0);
        assert!((delta_of_nu(&z2, &[c(1.0), c(0.5)]).unwrap() - 0.5).abs() < 1e-15);
        assert!(delta_of_nu(&z2, &[c(1.0), c(1.0)]).unwrap().abs() < 1e-15);
        assert!(matches!(delta_of_nu(&z2, &[c(1.0), c(1.5)]), Err(Error::Domain(_))));
    }
}
