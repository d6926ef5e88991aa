#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qwalk::crossed::{CrossedElement, NormalTrace, QGroupContext, Window};
use qwalk::fusion::LabelMeasure;
use qwalk::groups::{builtin_symmetric_action, Elem, Order};

pub fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `Z/2 ∗ Z/2` with the swap of the two factors.
pub fn dihedral() -> QGroupContext {
    let (g, s) = builtin_symmetric_action(2, Order::Finite(2)).unwrap();
    QGroupContext::new(g, s)
}

/// `(Z/2)^{∗3}` with `S₃` permuting the factors.
pub fn s3_tree() -> QGroupContext {
    let (g, s) = builtin_symmetric_action(3, Order::Finite(2)).unwrap();
    QGroupContext::new(g, s)
}

pub fn elem(ctx: &QGroupContext, w: &str) -> Elem {
    ctx.gamma().parse(w).unwrap()
}

/// `μ̄ = {e: 1/2, a: 1/4, b: 1/4}` with `τ_e(λ_σ) = 1/2`.
pub fn dihedral_state(ctx: &QGroupContext) -> NormalTrace {
    let mu = [(elem(ctx, "e"), 0.5), (elem(ctx, "a"), 0.25), (elem(ctx, "b"), 0.25)];
    NormalTrace::from_pair(ctx, &mu, &[(Elem::identity(), vec![(0, c(1.0)), (1, c(0.5))])]).unwrap()
}

/// Block state on the counit-orbit blocks and the blocks over `{a, b, c}`.
pub fn s3_block_measure(ctx: &QGroupContext) -> LabelMeasure<qwalk::crossed::BlockIndex> {
    let b = |n: &str| ctx.parse_block(n).unwrap();
    LabelMeasure::new([
        (b("e#0"), 1.0 / 12.0),
        (b("e#1"), 1.0 / 12.0),
        (b("e#2"), 1.0 / 12.0),
        (b("a#0"), 0.375),
        (b("a#1"), 0.375),
    ])
    .unwrap()
}

pub fn s3_state(ctx: &QGroupContext) -> NormalTrace {
    ctx.state_from_blocks(&s3_block_measure(ctx)).unwrap()
}

/// Random element supported on `ball(radius)`, certified on the same ball.
pub fn random_element(ctx: &QGroupContext, radius: u32, seed: u64) -> CrossedElement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = Vec::new();
    for x in ctx.gamma().ball(radius).unwrap() {
        for s in 0..ctx.s_order() {
            if rng.gen_bool(0.3) {
                terms.push(((x.clone(), s), Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
            }
        }
    }
    CrossedElement::from_terms(terms, Window::Ball(radius))
}
