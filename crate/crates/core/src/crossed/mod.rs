//! The discrete quantum group `H` with `ℓ∞(H) = ℓ∞(Γ)⋊S`.
//!
//! Elements are finitely supported sums `Σ f_s λ_s` carrying a light-cone
//! window; states are tracial weight functions on pairs `(γ, s ∈ S_γ)`.
//! `P_φ` acts by `(fλ_s) ↦ gλ_s` with `g(γ') = Σ_{s∈S_γ} c(γ, s) f(γγ')`.

mod blocks;
mod element;
mod state;

pub use blocks::{Block, BlockIndex, IrrH, OrbitBlocks};
pub use element::{CrossedElement, Window};
pub use state::{delta_of_nu, NormalTrace, StateSplit};

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::groups::{Elem, FiniteSymmetry, Group};

/// Group data of `H`: `Γ` and the finite group `S` acting on it. The
/// Woronowicz character is trivial (Kac type).
pub struct QGroupContext {
    gamma: Group,
    sym: FiniteSymmetry,
    blocks: Mutex<BTreeMap<Elem, Arc<OrbitBlocks>>>,
}

impl std::fmt::Debug for QGroupContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QGroupContext").field("gamma", &self.gamma).field("sym", &self.sym).finish()
    }
}

impl QGroupContext {
    pub fn new(gamma: Group, sym: FiniteSymmetry) -> Self {
        Self { gamma, sym, blocks: Mutex::new(BTreeMap::new()) }
    }

    pub fn gamma(&self) -> &Group {
        &self.gamma
    }

    pub fn symmetry(&self) -> &FiniteSymmetry {
        &self.sym
    }

    /// `n = |S|`.
    pub fn s_order(&self) -> usize {
        self.sym.order()
    }

    pub fn s_name(&self, s: usize) -> &str {
        self.sym.group().name(s)
    }

    pub fn parse_s(&self, name: &str) -> Result<usize> {
        self.sym
            .group()
            .index_of(name)
            .ok_or_else(|| Error::Parse(format!("unknown element {name:?} of S")))
    }

    /// `δ_γ λ_s`, exactly supported.
    pub fn delta(&self, gamma: &Elem, s: usize) -> CrossedElement {
        CrossedElement::from_terms([((gamma.clone(), s), Complex64::new(1.0, 0.0))], Window::Exact)
    }

    /// The unit `1 = Σ_γ δ_γ λ_e` on `ball(radius)`.
    pub fn one(&self, radius: u32) -> Result<CrossedElement> {
        let ball = self.gamma.ball(radius)?;
        Ok(CrossedElement::from_terms(
            ball.into_iter().map(|g| ((g, 0), Complex64::new(1.0, 0.0))),
            Window::Ball(radius),
        ))
    }

    /// The `s = e` element with values `f` on `ball(radius)`.
    pub fn from_function(&self, f: impl Fn(&Elem) -> f64, radius: u32) -> Result<CrossedElement> {
        let ball = self.gamma.ball(radius)?;
        Ok(CrossedElement::from_terms(
            ball.into_iter().map(|g| {
                let v = f(&g);
                ((g, 0), Complex64::new(v, 0.0))
            }),
            Window::Ball(radius),
        ))
    }

    /// Drop coefficients outside the window.
    pub fn restrict(&self, x: &CrossedElement, window: Window) -> CrossedElement {
        let w = x.window().meet(window);
        CrossedElement::from_terms(
            x.iter().filter(|((g, _), _)| w.contains(self.gamma.length(g))).map(|(k, v)| (k.clone(), v)),
            w,
        )
    }

    /// `(fλ_s)(gλ_t) = f·(s.g) λ_{st}`.
    pub fn multiply(&self, x: &CrossedElement, y: &CrossedElement) -> CrossedElement {
        let sg = self.sym.group();
        let mut by_s: Vec<BTreeMap<&Elem, Complex64>> = vec![BTreeMap::new(); self.s_order()];
        for ((g, t), v) in y.iter() {
            by_s[*t].insert(g, v);
        }
        let mut out = BTreeMap::new();
        for ((g, s), a) in x.iter() {
            let pre = self.sym.apply(sg.inv(*s), g);
            for (t, map) in by_s.iter().enumerate() {
                if let Some(b) = map.get(&pre) {
                    *out.entry((g.clone(), sg.mul(*s, t))).or_insert(Complex64::new(0.0, 0.0)) += a * b;
                }
            }
        }
        CrossedElement::from_map(out, x.window().meet(y.window()))
    }

    /// `(fλ_s)* = (s⁻¹.f̄) λ_{s⁻¹}`.
    pub fn adjoint(&self, x: &CrossedElement) -> CrossedElement {
        let sg = self.sym.group();
        CrossedElement::from_terms(
            x.iter().map(|((g, s), v)| {
                let si = sg.inv(*s);
                ((self.sym.apply(si, g), si), v.conj())
            }),
            x.window(),
        )
    }

    /// `E(fλ_s) = δ_{s,e} f`.
    pub fn conditional_e(&self, x: &CrossedElement) -> CrossedElement {
        CrossedElement::from_terms(x.iter().filter(|((_, s), _)| *s == 0).map(|(k, v)| (k.clone(), v)), x.window())
    }

    /// `ε(Σ f_s λ_s) = Σ_s f_s(e)`.
    pub fn counit(&self, x: &CrossedElement) -> Complex64 {
        x.iter().filter(|((g, _), _)| g.is_identity()).map(|(_, v)| v).sum()
    }

    /// `I₀ = δ_e (1/|S|) Σ_s λ_s`.
    pub fn i0(&self) -> CrossedElement {
        let w = Complex64::new(1.0 / self.s_order() as f64, 0.0);
        CrossedElement::from_terms((0..self.s_order()).map(|s| ((Elem::identity(), s), w)), Window::Exact)
    }

    /// `p = δ_e λ_e`.
    pub fn p(&self) -> CrossedElement {
        self.delta(&Elem::identity(), 0)
    }

    /// `α_l(fλ_s) = λ_s ⊗ fλ_s`, as the map from the tag `s` to the right leg.
    pub fn alpha_l(&self, x: &CrossedElement) -> BTreeMap<usize, CrossedElement> {
        self.tagged(x)
    }

    /// `α_r(fλ_s) = fλ_s ⊗ λ_s`, as the map from the tag `s` to the left leg.
    pub fn alpha_r(&self, x: &CrossedElement) -> BTreeMap<usize, CrossedElement> {
        self.tagged(x)
    }

    fn tagged(&self, x: &CrossedElement) -> BTreeMap<usize, CrossedElement> {
        let mut parts: BTreeMap<usize, Vec<((Elem, usize), Complex64)>> = BTreeMap::new();
        for (k, v) in x.iter() {
            parts.entry(k.1).or_default().push((k.clone(), v));
        }
        parts
            .into_iter()
            .map(|(s, terms)| (s, CrossedElement::from_terms(terms, x.window())))
            .collect()
    }

    /// `S(fλ_s) = (s⁻¹.(f∘inv)) λ_{s⁻¹}`: the coefficient at `(γ', s⁻¹)` is
    /// `f(s.γ'⁻¹)`.
    pub fn antipode(&self, x: &CrossedElement) -> CrossedElement {
        let sg = self.sym.group();
        CrossedElement::from_terms(
            x.iter().map(|((g, s), v)| {
                let si = sg.inv(*s);
                ((self.gamma.inverse(&self.sym.apply(si, g)), si), v)
            }),
            x.window(),
        )
    }

    /// The image of `x` on the orbit listed in `order`, acting on
    /// `ℓ²(order × S)`: `π(f)ξ(γ,u) = f(γ)ξ(γ,u)`,
    /// `π(λ_s)ξ(γ,u) = ξ(s⁻¹.γ, s⁻¹u)`.
    pub fn orbit_matrix(&self, order: &[Elem], x: &CrossedElement) -> nalgebra::DMatrix<Complex64> {
        let n = self.s_order();
        let sg = self.sym.group();
        let pos: BTreeMap<&Elem, usize> = order.iter().enumerate().map(|(i, g)| (g, i)).collect();
        let mut m = nalgebra::DMatrix::zeros(order.len() * n, order.len() * n);
        for ((g, s), v) in x.iter() {
            let Some(&i) = pos.get(g) else { continue };
            let si = sg.inv(*s);
            let j = pos[&self.sym.apply(si, g)];
            for u in 0..n {
                m[(i * n + u, j * n + sg.mul(si, u))] += v;
            }
        }
        m
    }

    /// Read an element of `ℓ∞(O)⋊S` back from its orbit matrix:
    /// `f_s(γ) = M[(γ,s), (s⁻¹.γ, e)]`.
    pub(crate) fn from_orbit_matrix(&self, order: &[Elem], m: &nalgebra::DMatrix<Complex64>, tol: f64) -> CrossedElement {
        let n = self.s_order();
        let sg = self.sym.group();
        let pos: BTreeMap<&Elem, usize> = order.iter().enumerate().map(|(i, g)| (g, i)).collect();
        let mut terms = Vec::new();
        for (i, g) in order.iter().enumerate() {
            for s in 0..n {
                let j = pos[&self.sym.apply(sg.inv(s), g)];
                let v = m[(i * n + s, j * n)];
                if v.norm() > tol {
                    terms.push(((g.clone(), s), v));
                }
            }
        }
        CrossedElement::from_terms(terms, Window::Exact)
    }

    /// Operator norm: the maximum over orbits meeting the support of the
    /// spectral norm of the orbit image.
    pub fn norm(&self, x: &CrossedElement) -> f64 {
        if x.iter().all(|((_, s), _)| *s == 0) {
            return x.iter().map(|(_, v)| v.norm()).fold(0.0, f64::max);
        }
        let mut bases: BTreeMap<Elem, ()> = BTreeMap::new();
        for ((g, _), _) in x.iter() {
            bases.insert(self.sym.orbit_base(g), ());
        }
        bases
            .keys()
            .map(|b| spectral_norm(&self.orbit_matrix(&self.sym.orbit(b), x)))
            .fold(0.0, f64::max)
    }

    /// Apply `P_φ`; the window shrinks by the state radius.
    pub fn apply_p(&self, phi: &NormalTrace, x: &CrossedElement) -> Result<CrossedElement> {
        let window = x.window().shrink(phi.radius())?;
        let mut out: BTreeMap<(Elem, usize), Complex64> = BTreeMap::new();
        for ((eta, s), v) in x.iter() {
            for (_, gamma_inv, c) in phi.entries_for(*s) {
                let target = self.gamma.multiply(gamma_inv, eta);
                if window.contains(self.gamma.length(&target)) {
                    *out.entry((target, *s)).or_insert(Complex64::new(0.0, 0.0)) += c * v;
                }
            }
        }
        Ok(CrossedElement::from_map(out, window))
    }
}

pub(crate) fn spectral_norm(m: &nalgebra::DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{builtin_symmetric_action, Order};

    pub(crate) fn dihedral() -> QGroupContext {
        let (g, s) = builtin_symmetric_action(2, Order::Finite(2)).unwrap();
        QGroupContext::new(g, s)
    }

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn product_and_adjoint_rules() {
        let ctx = dihedral();
        let g = ctx.gamma();
        let a = g.parse("a").unwrap();
        let b = g.parse("b").unwrap();
        // (δ_a λ_σ)(δ_b λ_e) = δ_a (σ.δ_b) λ_σ = δ_a δ_a λ_σ
        let x = ctx.delta(&a, 1);
        let y = ctx.delta(&b, 0);
        assert_eq!(ctx.multiply(&x, &y), ctx.delta(&a, 1));
        assert!(ctx.multiply(&x, &ctx.delta(&a, 0)).is_zero());
        // (δ_a λ_σ)* = δ_b λ_σ
        assert_eq!(ctx.adjoint(&x), ctx.delta(&b, 1));
        assert_eq!(ctx.counit(&ctx.delta(&a, 1)), c(0.0));
    }

    #[test]
    fn units_and_expectation() {
        let ctx = dihedral();
        let i0 = ctx.i0();
        let sigma = ctx.delta(&Elem::identity(), 1);
        assert_eq!(ctx.multiply(&sigma, &i0), i0);
        assert_eq!(ctx.multiply(&ctx.p(), &i0), i0);
        let e_i0 = ctx.conditional_e(&i0);
        assert_eq!(e_i0, ctx.p().scaled(c(0.5)));
    }

    #[test]
    fn antipode_examples() {
        let ctx = dihedral();
        let ab = ctx.gamma().parse("ab").unwrap();
        assert_eq!(ctx.antipode(&ctx.delta(&ab, 0)), ctx.delta(&ctx.gamma().parse("ba").unwrap(), 0));
        let x = ctx.delta(&ab, 1).add(&ctx.delta(&Elem::identity(), 1).scaled(c(2.0)));
        assert_eq!(ctx.antipode(&ctx.antipode(&x)), x);
    }

    #[test]
    fn orbit_matrix_round_trip_and_norm() {
        let ctx = dihedral();
        let a = ctx.gamma().parse("a").unwrap();
        let b = ctx.gamma().parse("b").unwrap();
        let x = ctx.delta(&a, 1).add(&ctx.delta(&b, 0).scaled(c(3.0)));
        let order = ctx.symmetry().orbit(&a);
        let m = ctx.orbit_matrix(&order, &x);
        assert_eq!(ctx.from_orbit_matrix(&order, &m, 0.0), x);
        let rev: Vec<Elem> = order.iter().rev().cloned().collect();
        let n1 = spectral_norm(&m);
        let n2 = spectral_norm(&ctx.orbit_matrix(&rev, &x));
        assert!((n1 - n2).abs() < 1e-12);
        assert!((ctx.norm(&ctx.delta(&a, 1)) - 1.0).abs() < 1e-12);
    }
}
