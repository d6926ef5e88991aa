//! Harnesses for boundary invariance: decay of `(id − E)Pⁿ`, harmonic
//! lifts, Doob transforms, Poisson products, Green elements and the Martin
//! kernel comparison against the classical walk on `Γ`.

mod dirichlet;
mod green;
mod martin;

pub use dirichlet::{dirichlet_solve, DirichletSolution};
pub use green::{green_element, GreenElement, KilledGreen, KilledWalk};
pub use martin::{martin_compare, non_increasing, strictly_decreasing, MartinHarness, MartinReport, SphereProfile, ROUNDOFF};

use num_complex::Complex64;

use crate::crossed::{delta_of_nu, CrossedElement, NormalTrace, QGroupContext, Window};
use crate::error::{Error, Result};

/// Measured `r_n = ‖(id − E)Pⁿ x₀‖` against the bound `(1 − tδ)ⁿ r₀`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayReport {
    pub r: Vec<f64>,
    pub t: f64,
    pub delta: f64,
    /// `1 − tδ`.
    pub rate_bound: f64,
    /// Least-squares slope of `ln r_n` (`None` with fewer than two positive values).
    pub slope: Option<f64>,
    pub windows: Vec<Window>,
    /// Index of the first `n` with `r_n > (1 − tδ)ⁿ r₀ (1 + 1e-6)`.
    pub first_violation: Option<usize>,
}

impl DecayReport {
    pub fn bound_holds(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Least-squares slope of `ln y` against the index, over positive entries.
pub fn log_slope(values: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0)
        .map(|(i, v)| (i as f64, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Iterate `P_φ` on `x₀` and track the part outside the fixed points of `E`.
pub fn invariance_decay(ctx: &QGroupContext, x0: &CrossedElement, phi: &NormalTrace, n_max: usize) -> Result<DecayReport> {
    let split = phi.split(ctx)?;
    let delta = delta_of_nu(ctx.symmetry().group(), &split.nu)?;
    let rho = phi.radius();
    if let Window::Ball(r) = x0.window() {
        let needed = rho.saturating_mul(n_max as u32);
        if r < needed {
            return Err(Error::WindowExhausted { needed, available: r });
        }
    }
    let rate = 1.0 - split.t * delta;
    let off = |x: &CrossedElement| ctx.norm(&x.sub(&ctx.conditional_e(x)));
    let mut x = x0.clone();
    let mut r = vec![off(&x)];
    let mut windows = vec![x.window()];
    for _ in 0..n_max {
        x = ctx.apply_p(phi, &x)?;
        r.push(off(&x));
        windows.push(x.window());
    }
    let first_violation = if delta > 0.0 {
        r.iter()
            .enumerate()
            .position(|(n, v)| *v > rate.powi(n as i32) * r[0] * (1.0 + 1e-6))
    } else {
        None
    };
    let report = DecayReport {
        slope: log_slope(&r),
        r,
        t: split.t,
        delta,
        rate_bound: rate,
        windows,
        first_violation,
    };
    if delta == 0.0 {
        return Err(Error::BoundUnavailable(Box::new(report)));
    }
    Ok(report)
}

/// `‖P_φ(x) − x‖` on the shrunk window.
pub fn check_harmonic(ctx: &QGroupContext, x: &CrossedElement, phi: &NormalTrace) -> Result<f64> {
    let px = ctx.apply_p(phi, x)?;
    let xr = ctx.restrict(x, px.window());
    Ok(ctx.norm(&px.sub(&xr)))
}

/// `b^{1/2}` and `b^{-1/2}` of a positive `s = e` element.
fn sqrt_pair(ctx: &QGroupContext, b: &CrossedElement) -> Result<(CrossedElement, CrossedElement)> {
    if b.iter().any(|((_, s), _)| *s != 0) {
        return Err(Error::Domain("Doob weight must have only s = e components".into()));
    }
    let Window::Ball(radius) = b.window() else {
        return Err(Error::Domain("Doob weight must be given on a ball window".into()));
    };
    let ball = ctx.gamma().ball(radius)?;
    let mut root = Vec::with_capacity(ball.len());
    let mut inv = Vec::with_capacity(ball.len());
    for g in ball {
        let v = b.get(&g, 0);
        if v.im.abs() > 1e-12 || v.re <= 0.0 {
            return Err(Error::Domain(format!(
                "Doob weight is not bounded below at {} (value {v})",
                ctx.gamma().format(&g)
            )));
        }
        let s = v.re.sqrt();
        root.push(((g.clone(), 0), Complex64::new(s, 0.0)));
        inv.push(((g, 0), Complex64::new(1.0 / s, 0.0)));
    }
    Ok((CrossedElement::from_terms(root, b.window()), CrossedElement::from_terms(inv, b.window())))
}

/// `P^b_φ(x) = b^{-1/2} P_φ(b^{1/2} x b^{1/2}) b^{-1/2}` for a positive
/// invertible `s = e` element `b`.
pub fn doob_transform(
    ctx: &QGroupContext,
    phi: &NormalTrace,
    b: &CrossedElement,
    x: &CrossedElement,
) -> Result<CrossedElement> {
    let (root, inv) = sqrt_pair(ctx, b)?;
    let inner = ctx.multiply(&ctx.multiply(&root, x), &root);
    let moved = ctx.apply_p(phi, &inner)?;
    Ok(ctx.multiply(&ctx.multiply(&inv, &moved), &inv))
}

/// Successive powers `P_φⁿ(xy)` with the norms of their differences.
#[derive(Clone, Debug)]
pub struct PoissonReport {
    pub terms: Vec<CrossedElement>,
    /// `‖P^{n+1}(xy) − Pⁿ(xy)‖` on the window of the later term.
    pub differences: Vec<f64>,
}

pub fn poisson_product(
    ctx: &QGroupContext,
    x: &CrossedElement,
    y: &CrossedElement,
    phi: &NormalTrace,
    n_max: usize,
) -> Result<PoissonReport> {
    let mut terms = vec![ctx.multiply(x, y)];
    let mut differences = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        let next = ctx.apply_p(phi, terms.last().unwrap())?;
        let prev = ctx.restrict(terms.last().unwrap(), next.window());
        differences.push(ctx.norm(&next.sub(&prev)));
        terms.push(next);
    }
    Ok(PoissonReport { terms, differences })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{builtin_symmetric_action, Elem, Order};

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
    fn dihedral_sigma_component_decays_by_a_quarter() {
        let (ctx, phi) = dihedral();
        let x0 = ctx.delta(&Elem::identity(), 1).with_window(Window::Ball(20));
        let rep = invariance_decay(&ctx, &x0, &phi, 20).unwrap();
        assert_eq!(rep.rate_bound, 0.75);
        for (n, r) in rep.r.iter().enumerate() {
            assert!((r / 0.25f64.powi(n as i32) - 1.0).abs() < 1e-12);
        }
        assert!(rep.bound_holds());
        assert!((rep.slope.unwrap() - 0.25f64.ln()).abs() < 1e-12);
        assert_eq!(rep.windows.last(), Some(&Window::Ball(0)));
    }

    #[test]
    fn e_only_start_has_no_off_part() {
        let (ctx, phi) = dihedral();
        let a = ctx.gamma().parse("a").unwrap();
        let rep = invariance_decay(&ctx, &ctx.delta(&a, 0), &phi, 5).unwrap();
        assert!(rep.r.iter().all(|r| *r == 0.0));
    }

    #[test]
    fn trivial_nu_gives_no_bound() {
        let (ctx, _) = dihedral();
        let gm = ctx.gamma();
        let mu = [(Elem::identity(), 0.5), (gm.parse("a").unwrap(), 0.25), (gm.parse("b").unwrap(), 0.25)];
        let phi = NormalTrace::from_pair(&ctx, &mu, &[(Elem::identity(), vec![(0, c(1.0)), (1, c(1.0))])]).unwrap();
        let err = invariance_decay(&ctx, &ctx.delta(&Elem::identity(), 1), &phi, 3).unwrap_err();
        let Error::BoundUnavailable(rep) = err else { panic!("expected bound-unavailable") };
        assert_eq!(rep.r.len(), 4);
    }

    #[test]
    fn haar_nu_kills_off_part_in_one_step() {
        let (ctx, _) = dihedral();
        let gm = ctx.gamma();
        let mu = [(Elem::identity(), 0.5), (gm.parse("a").unwrap(), 0.25), (gm.parse("b").unwrap(), 0.25)];
        let phi = NormalTrace::from_pair(&ctx, &mu, &[]).unwrap();
        let rep = invariance_decay(&ctx, &ctx.delta(&Elem::identity(), 1), &phi, 1).unwrap();
        assert!(rep.r[1] <= 0.5 * rep.r[0]);
    }

    #[test]
    fn harmonic_residuals() {
        let (ctx, phi) = dihedral();
        assert_eq!(check_harmonic(&ctx, &ctx.one(5).unwrap(), &phi).unwrap(), 0.0);
        let a = ctx.gamma().parse("a").unwrap();
        assert!(check_harmonic(&ctx, &ctx.delta(&a, 0), &phi).unwrap() > 0.1);
    }

    #[test]
    fn doob_with_unit_weight_is_apply_p() {
        let (ctx, phi) = dihedral();
        let g = ctx.gamma();
        let x = CrossedElement::from_terms(
            [
                ((g.parse("ab").unwrap(), 0), c(0.3)),
                ((Elem::identity(), 1), Complex64::new(0.1, 0.7)),
                ((g.parse("a").unwrap(), 1), c(-1.3)),
            ],
            Window::Ball(4),
        );
        let b = ctx.one(4).unwrap();
        assert_eq!(doob_transform(&ctx, &phi, &b, &x).unwrap(), ctx.apply_p(&phi, &x).unwrap());
        let bad = ctx.from_function(|_| 0.0, 4).unwrap();
        assert!(matches!(doob_transform(&ctx, &phi, &bad, &x), Err(Error::Domain(_))));
    }

    #[test]
    fn poisson_of_units_is_constant() {
        let (ctx, phi) = dihedral();
        let one = ctx.one(4).unwrap();
        let rep = poisson_product(&ctx, &one, &one, &phi, 3).unwrap();
        assert!(rep.differences.iter().all(|d| *d < 1e-15));
    }
}
