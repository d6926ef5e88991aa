use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fusion::LabelMeasure;
use crate::groups::{Elem, Group};

/// Dense solves above this many unknowns are refused.
const MAX_UNKNOWNS: usize = 6000;

/// A `μ̄`-harmonic function on `ball(R)` with prescribed values on the
/// boundary shell.
#[derive(Clone, Debug)]
pub struct DirichletSolution {
    pub radius: u32,
    /// Points of length `≤ interior_radius` satisfy the mean-value equation.
    pub interior_radius: u32,
    pub values: HashMap<Elem, f64>,
    /// The linear system was singular and solved in the least-squares sense.
    pub least_squares: bool,
}

impl DirichletSolution {
    pub fn value(&self, g: &Elem) -> Option<f64> {
        self.values.get(g).copied()
    }
}

/// Solve `h(γ') = Σ_γ μ̄(γ) h(γγ')` on `ball(R − ρ)` with `h = boundary`
/// on `ball(R) \ ball(R − ρ)`, `ρ` the support radius of `μ̄`.
pub fn dirichlet_solve(
    gamma: &Group,
    mu: &LabelMeasure<Elem>,
    radius: u32,
    boundary: impl Fn(&Elem) -> f64,
) -> Result<DirichletSolution> {
    if !mu.is_probability() {
        return Err(Error::Contract("Dirichlet problem needs a probability measure".into()));
    }
    if radius == 0 {
        return Err(Error::Domain("radius must be at least 1".into()));
    }
    let rho = mu.support().map(|g| gamma.length(g)).max().unwrap_or(0);
    if rho == 0 || rho > radius {
        return Err(Error::Domain(format!("support radius {rho} does not fit radius {radius}")));
    }
    let inner = radius - rho;
    let ball = gamma.ball(radius)?;
    let interior: Vec<&Elem> = ball.iter().filter(|g| gamma.length(g) <= inner).collect();
    if interior.len() > MAX_UNKNOWNS {
        return Err(Error::Resource(format!("{} unknowns exceed {MAX_UNKNOWNS}", interior.len())));
    }
    let index: HashMap<&Elem, usize> = interior.iter().enumerate().map(|(i, g)| (*g, i)).collect();
    let n = interior.len();
    let mut a = DMatrix::<f64>::identity(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for (i, g) in interior.iter().enumerate() {
        for (step, w) in mu.iter() {
            let to = gamma.multiply(step, g);
            match index.get(&to) {
                Some(&j) => a[(i, j)] -= w,
                None => rhs[i] += w * boundary(&to),
            }
        }
    }
    let lu = a.clone().lu();
    let (sol, least_squares) = match lu.solve(&rhs) {
        Some(x) if x.iter().all(|v| v.is_finite()) && lu.determinant().abs() > 1e-300 => (x, false),
        _ => {
            log::warn!("singular Dirichlet system on ball({radius}); using least squares");
            let x = a
                .svd(true, true)
                .solve(&rhs, 1e-12)
                .map_err(|e| Error::NumericalDegeneracy(e.to_string()))?;
            (x, true)
        }
    };
    let mut values = HashMap::with_capacity(ball.len());
    for g in &ball {
        let v = match index.get(g) {
            Some(&i) => sol[i],
            None => boundary(g),
        };
        values.insert(g.clone(), v);
    }
    Ok(DirichletSolution { radius, interior_radius: inner, values, least_squares })
}
