use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::crossed::{CrossedElement, NormalTrace, QGroupContext, Window};
use crate::error::{Error, Result};
use crate::fusion::TailEstimate;
use crate::groups::Elem;

/// `Σ_{n≤N} P_φⁿ(x)` on the surviving light-cone window.
#[derive(Clone, Debug)]
pub struct GreenElement {
    pub value: CrossedElement,
    pub horizon: usize,
    /// `‖P_φⁿ(x)‖` on the final window, `n = 0..=N`.
    pub increments: Vec<f64>,
    pub tail: TailEstimate,
}

pub fn green_element(ctx: &QGroupContext, x: &CrossedElement, phi: &NormalTrace, horizon: usize) -> Result<GreenElement> {
    let rho = phi.radius();
    let mut final_window = x.window();
    for _ in 0..horizon {
        final_window = final_window.shrink(rho)?;
    }
    let mut term = x.clone();
    let mut terms = vec![ctx.restrict(&term, final_window)];
    for _ in 0..horizon {
        term = ctx.apply_p(phi, &term)?;
        terms.push(ctx.restrict(&term, final_window));
    }
    let mut value = CrossedElement::zero(final_window);
    let mut increments = Vec::with_capacity(terms.len());
    for t in &terms {
        value = value.add(t);
        increments.push(ctx.norm(t));
    }
    Ok(GreenElement { value, horizon, tail: TailEstimate::from_increments(&increments), increments })
}

/// `P_φ` on `ball(R) × S` for the walk killed on leaving `ball(R)`:
/// `(Ay)(γ', s) = Σ_γ c(γ, s) y(γγ', s)` with `|γγ'| ≤ R`.
#[derive(Clone, Debug)]
pub struct KilledWalk {
    radius: u32,
    keys: Vec<(Elem, usize)>,
    index: HashMap<(Elem, usize), usize>,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl KilledWalk {
    pub fn new(ctx: &QGroupContext, phi: &NormalTrace, radius: u32, max_rows: usize) -> Result<Self> {
        let g = ctx.gamma();
        let ball = g.ball_capped(radius, max_rows / ctx.s_order().max(1) + 1)?;
        let n = ctx.s_order();
        if ball.len() * n > max_rows {
            return Err(Error::Resource(format!("killed walk on ball({radius}) exceeds {max_rows} rows")));
        }
        let mut keys = Vec::with_capacity(ball.len() * n);
        for gm in &ball {
            for s in 0..n {
                keys.push((gm.clone(), s));
            }
        }
        let index: HashMap<(Elem, usize), usize> = keys.iter().enumerate().map(|(i, k)| (k.clone(), i)).collect();
        let mut row_start = Vec::with_capacity(keys.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_start.push(0);
        let entries: Vec<Vec<(Elem, Complex64)>> = (0..n)
            .map(|s| {
                let mut v: Vec<(Elem, Complex64)> =
                    phi.weights().filter(|((_, t), _)| *t == s).map(|((gm, _), c)| (gm.clone(), c)).collect();
                v.sort_by(|a, b| a.0.cmp(&b.0));
                v
            })
            .collect();
        for (gp, s) in &keys {
            for (step, c) in &entries[*s] {
                let to = g.multiply(step, gp);
                if let Some(&j) = index.get(&(to, *s)) {
                    cols.push(j);
                    vals.push(*c);
                }
            }
            row_start.push(cols.len());
        }
        Ok(Self { radius, keys, index, row_start, cols, vals })
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn rows(&self) -> usize {
        self.keys.len()
    }

    pub fn nonzeros(&self) -> usize {
        self.vals.len()
    }

    fn apply(&self, y: &[Complex64], out: &mut [Complex64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_start[i]..self.row_start[i + 1] {
                acc += self.vals[k] * y[self.cols[k]];
            }
            *o = acc;
        }
    }

    fn to_vector(&self, x: &CrossedElement) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); self.keys.len()];
        for (k, c) in x.iter() {
            if let Some(&i) = self.index.get(k) {
                v[i] = c;
            }
        }
        v
    }

    fn to_element(&self, v: &[Complex64]) -> CrossedElement {
        CrossedElement::from_terms(
            self.keys.iter().zip(v).map(|(k, c)| (k.clone(), *c)),
            Window::Ball(self.radius),
        )
    }
}

/// Resumable partial sums `Σ_{n≤N} Aⁿ x` of the killed walk.
#[derive(Clone, Debug)]
pub struct KilledGreen {
    walk: Arc<KilledWalk>,
    horizon: usize,
    current: Vec<Complex64>,
    sums: Vec<Complex64>,
}

impl KilledGreen {
    pub fn new(walk: Arc<KilledWalk>, x: &CrossedElement) -> Self {
        let current = walk.to_vector(x);
        let sums = current.clone();
        Self { walk, horizon: 0, current, sums }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn advance_to(&mut self, horizon: usize) -> Result<()> {
        if horizon < self.horizon {
            return Err(Error::Contract(format!("cannot rewind from horizon {} to {horizon}", self.horizon)));
        }
        let mut next = vec![Complex64::new(0.0, 0.0); self.current.len()];
        while self.horizon < horizon {
            self.walk.apply(&self.current, &mut next);
            std::mem::swap(&mut self.current, &mut next);
            for (s, c) in self.sums.iter_mut().zip(&self.current) {
                *s += c;
            }
            self.horizon += 1;
        }
        Ok(())
    }

    pub fn value(&self) -> CrossedElement {
        self.walk.to_element(&self.sums)
    }

    /// `(current, sums)` as interleaved real/imaginary parts.
    pub fn snapshot(&self) -> (Vec<f64>, Vec<f64>) {
        let flat = |v: &[Complex64]| v.iter().flat_map(|c| [c.re, c.im]).collect();
        (flat(&self.current), flat(&self.sums))
    }

    pub fn restore(&mut self, horizon: usize, current: &[f64], sums: &[f64]) -> Result<()> {
        let n = self.current.len();
        if current.len() != 2 * n || sums.len() != 2 * n {
            return Err(Error::Contract("snapshot does not match the killed walk".into()));
        }
        let unflat = |v: &[f64]| v.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
        self.current = unflat(current);
        self.sums = unflat(sums);
        self.horizon = horizon;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
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
    fn killed_walk_matches_light_cone_inside() {
        let (ctx, phi) = dihedral();
        let x = ctx.delta(&ctx.gamma().parse("ab").unwrap(), 0).add(&ctx.delta(&Elem::identity(), 1));
        let exact = green_element(&ctx, &x, &phi, 6).unwrap();
        assert_eq!(green_element(&ctx, &x, &phi, 0).unwrap().value, x);
        let walk = Arc::new(KilledWalk::new(&ctx, &phi, 20, 1_000_000).unwrap());
        let mut k = KilledGreen::new(walk, &x);
        k.advance_to(6).unwrap();
        // Within distance 20 - 6 - 2 of the unit the killed walk is exact.
        let near = ctx.restrict(&k.value(), Window::Ball(10));
        assert!(near.max_abs_diff(&ctx.restrict(&exact.value, Window::Ball(10))) < 1e-15);
    }

    #[test]
    fn resume_is_bit_identical() {
        let (ctx, phi) = dihedral();
        let walk = Arc::new(KilledWalk::new(&ctx, &phi, 8, 1_000_000).unwrap());
        let x = ctx.i0();
        let mut direct = KilledGreen::new(walk.clone(), &x);
        direct.advance_to(15).unwrap();
        let mut a = KilledGreen::new(walk.clone(), &x);
        a.advance_to(7).unwrap();
        let (cur, sums) = a.snapshot();
        let mut b = KilledGreen::new(walk, &x);
        b.restore(7, &cur, &sums).unwrap();
        b.advance_to(15).unwrap();
        assert_eq!(direct.value(), b.value());
    }
}
