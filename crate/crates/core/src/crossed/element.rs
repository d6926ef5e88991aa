use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::groups::Elem;

/// Ball radius within which coefficients are certified; `Exact` for
/// genuinely finitely supported elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Window {
    Exact,
    Ball(u32),
}

impl Window {
    pub fn contains(self, length: u32) -> bool {
        match self {
            Window::Exact => true,
            Window::Ball(r) => length <= r,
        }
    }

    pub fn meet(self, other: Window) -> Window {
        match (self, other) {
            (Window::Exact, w) | (w, Window::Exact) => w,
            (Window::Ball(a), Window::Ball(b)) => Window::Ball(a.min(b)),
        }
    }

    /// Light-cone shrink after one step of a state of radius `by`.
    pub fn shrink(self, by: u32) -> Result<Window> {
        match self {
            Window::Exact => Ok(Window::Exact),
            Window::Ball(r) if r >= by => Ok(Window::Ball(r - by)),
            Window::Ball(r) => Err(Error::WindowExhausted { needed: by, available: r }),
        }
    }

    pub fn radius(self) -> Option<u32> {
        match self {
            Window::Exact => None,
            Window::Ball(r) => Some(r),
        }
    }
}

impl std::fmt::Display for Window {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Window::Exact => write!(f, "exact"),
            Window::Ball(r) => write!(f, "{r}"),
        }
    }
}

/// `Σ_s f_s λ_s` with finitely many nonzero coefficients `(γ, s) ↦ f_s(γ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossedElement {
    coeffs: BTreeMap<(Elem, usize), Complex64>,
    window: Window,
}

impl CrossedElement {
    pub fn zero(window: Window) -> Self {
        Self { coeffs: BTreeMap::new(), window }
    }

    /// Sum repeated keys and drop exact zeros.
    pub fn from_terms(terms: impl IntoIterator<Item = ((Elem, usize), Complex64)>, window: Window) -> Self {
        let mut coeffs = BTreeMap::new();
        for (k, v) in terms {
            *coeffs.entry(k).or_insert(Complex64::new(0.0, 0.0)) += v;
        }
        Self::from_map(coeffs, window)
    }

    pub(crate) fn from_map(mut coeffs: BTreeMap<(Elem, usize), Complex64>, window: Window) -> Self {
        coeffs.retain(|_, v| *v != Complex64::new(0.0, 0.0));
        Self { coeffs, window }
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn with_window(mut self, window: Window) -> Self {
        self.window = window;
        self
    }

    pub fn get(&self, gamma: &Elem, s: usize) -> Complex64 {
        self.coeffs.get(&(gamma.clone(), s)).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(Elem, usize), Complex64)> {
        self.coeffs.iter().map(|(k, v)| (k, *v))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Elements of `S` with a nonzero component.
    pub fn components(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.coeffs.keys().map(|k| k.1).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn add(&self, other: &Self) -> Self {
        self.add_scaled(other, Complex64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(other, Complex64::new(-1.0, 0.0))
    }

    /// `self + c·other`, on the common window.
    pub fn add_scaled(&self, other: &Self, c: Complex64) -> Self {
        let mut coeffs = self.coeffs.clone();
        for (k, v) in &other.coeffs {
            *coeffs.entry(k.clone()).or_insert(Complex64::new(0.0, 0.0)) += c * v;
        }
        Self::from_map(coeffs, self.window.meet(other.window))
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self::from_map(self.coeffs.iter().map(|(k, v)| (k.clone(), c * v)).collect(), self.window)
    }

    /// Largest coefficient difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut d: f64 = 0.0;
        for (k, v) in &self.coeffs {
            d = d.max((v - other.coeffs.get(k).copied().unwrap_or_default()).norm());
        }
        for (k, v) in &other.coeffs {
            if !self.coeffs.contains_key(k) {
                d = d.max(v.norm());
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().map(|v| v.norm()).fold(0.0, f64::max)
    }
}
