//! Finitely generated groups with exact normal forms, Cayley balls, and
//! finite symmetry groups acting by automorphisms.
//!
//! Two families are supported: free products of cyclic groups (covering
//! `(Z/2)^{*n}`, free groups and `Z`) and finite groups given by a
//! multiplication table together with a generating set.

mod finite;
mod free_product;
mod symmetry;

pub use finite::FiniteGroup;
pub use free_product::{FreeProduct, Order};
pub use symmetry::FiniteSymmetry;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One syllable `x_factor^exp` of a normal form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Syllable {
    pub factor: u16,
    pub exp: i64,
}

/// A group element in normal form.
///
/// For free products this is the reduced alternating syllable sequence. For
/// table groups, element `k > 0` is stored as the single syllable `(0, k)`.
/// The derived ordering is lexicographic on syllables.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Elem(Vec<Syllable>);

impl Elem {
    pub fn identity() -> Self {
        Elem(Vec::new())
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn syllables(&self) -> &[Syllable] {
        &self.0
    }

    pub(crate) fn from_syllables(s: Vec<Syllable>) -> Self {
        Elem(s)
    }

    fn table_index(&self) -> usize {
        self.0.first().map_or(0, |s| s.exp as usize)
    }

    fn from_table_index(k: usize) -> Self {
        if k == 0 {
            Elem::identity()
        } else {
            Elem(vec![Syllable { factor: 0, exp: k as i64 }])
        }
    }
}

/// A finite group with a chosen generating set, used as `Γ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGamma {
    group: FiniteGroup,
    generators: Vec<usize>,
    lengths: Vec<u32>,
}

impl FiniteGamma {
    pub fn new(group: FiniteGroup, generators: Vec<usize>) -> Result<Self> {
        let n = group.order();
        if generators.iter().any(|&g| g >= n) {
            return Err(Error::Domain("generator index out of range".into()));
        }
        let mut steps: Vec<usize> = generators.clone();
        steps.extend(generators.iter().map(|&g| group.inv(g)));
        steps.sort_unstable();
        steps.dedup();
        let mut lengths = vec![u32::MAX; n];
        lengths[0] = 0;
        let mut frontier = vec![0usize];
        let mut d = 0;
        while !frontier.is_empty() {
            d += 1;
            let mut next = Vec::new();
            for &w in &frontier {
                for &g in &steps {
                    let v = group.mul(w, g);
                    if lengths[v] == u32::MAX {
                        lengths[v] = d;
                        next.push(v);
                    }
                }
            }
            frontier = next;
        }
        if lengths.contains(&u32::MAX) {
            return Err(Error::Domain("generators do not generate the finite group".into()));
        }
        Ok(Self { group, generators, lengths })
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn generators(&self) -> &[usize] {
        &self.generators
    }
}

/// The supported group families.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Group {
    FreeProduct(FreeProduct),
    Finite(FiniteGamma),
}

/// Default cap on the number of elements a ball enumeration may produce.
pub const DEFAULT_BALL_CAP: usize = 2_000_000;

impl Group {
    /// `(Z/order)^{*n}` with default generator names.
    pub fn free_product_of(n: usize, order: Order) -> Result<Self> {
        let orders = vec![order; n];
        let names = FreeProduct::default_names(&orders);
        Ok(Group::FreeProduct(FreeProduct::new(orders, names)?))
    }

    pub fn identity(&self) -> Elem {
        Elem::identity()
    }

    pub fn multiply(&self, x: &Elem, y: &Elem) -> Elem {
        match self {
            Group::FreeProduct(fp) => fp.multiply(x, y),
            Group::Finite(fg) => Elem::from_table_index(fg.group.mul(x.table_index(), y.table_index())),
        }
    }

    pub fn inverse(&self, x: &Elem) -> Elem {
        match self {
            Group::FreeProduct(fp) => fp.inverse(x),
            Group::Finite(fg) => Elem::from_table_index(fg.group.inv(x.table_index())),
        }
    }

    /// Word length with respect to the symmetric generating set.
    pub fn length(&self, x: &Elem) -> u32 {
        match self {
            Group::FreeProduct(fp) => fp.length(x),
            Group::Finite(fg) => fg.lengths[x.table_index()],
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Group::FreeProduct(fp) => fp.rank() == 1 && matches!(fp.orders()[0], Order::Finite(_)),
            Group::Finite(_) => true,
        }
    }

    /// The symmetric generating set used for word length and balls.
    pub fn step_generators(&self) -> Vec<Elem> {
        match self {
            Group::FreeProduct(fp) => fp.step_generators(),
            Group::Finite(fg) => {
                let mut steps: Vec<usize> = fg.generators.clone();
                steps.extend(fg.generators.iter().map(|&g| fg.group.inv(g)));
                steps.sort_unstable();
                steps.dedup();
                steps.into_iter().filter(|&g| g != 0).map(Elem::from_table_index).collect()
            }
        }
    }

    /// Parse a word into its normal form.
    pub fn parse(&self, word: &str) -> Result<Elem> {
        match self {
            Group::FreeProduct(fp) => fp.parse(word),
            Group::Finite(fg) => {
                let mut acc = 0usize;
                for part in word.trim().split('.') {
                    let k = if part == "e" {
                        0
                    } else {
                        fg.group
                            .index_of(part)
                            .ok_or_else(|| Error::Parse(format!("unknown element {part:?}")))?
                    };
                    acc = fg.group.mul(acc, k);
                }
                Ok(Elem::from_table_index(acc))
            }
        }
    }

    /// Alias for [`Group::parse`]: the normal form of a word.
    pub fn normal_form(&self, word: &str) -> Result<Elem> {
        self.parse(word)
    }

    pub fn format(&self, x: &Elem) -> String {
        match self {
            Group::FreeProduct(fp) => fp.format(x),
            Group::Finite(fg) => {
                let k = x.table_index();
                if k == 0 {
                    "e".into()
                } else {
                    fg.group.name(k).to_string()
                }
            }
        }
    }

    /// Spheres `0..=radius`, each sorted lexicographically by normal form.
    pub fn spheres(&self, radius: u32, cap: usize) -> Result<Vec<Vec<Elem>>> {
        match self {
            Group::Finite(fg) => {
                let mut out = vec![Vec::new(); radius as usize + 1];
                for k in 0..fg.group.order() {
                    let l = fg.lengths[k];
                    if l <= radius {
                        out[l as usize].push(Elem::from_table_index(k));
                    }
                }
                for s in &mut out {
                    s.sort();
                }
                Ok(out)
            }
            Group::FreeProduct(_) => {
                let steps = self.step_generators();
                let mut out = vec![vec![Elem::identity()]];
                let mut total = 1usize;
                for k in 1..=radius {
                    let mut next = BTreeSet::new();
                    for w in out.last().unwrap() {
                        for g in &steps {
                            let v = self.multiply(w, g);
                            if self.length(&v) == k {
                                next.insert(v);
                            }
                        }
                    }
                    total += next.len();
                    if total > cap {
                        return Err(Error::Resource(format!(
                            "ball of radius {radius} exceeds {cap} elements"
                        )));
                    }
                    out.push(next.into_iter().collect());
                }
                Ok(out)
            }
        }
    }

    /// All elements of word length at most `radius`, ordered by (length, normal form).
    pub fn ball(&self, radius: u32) -> Result<Vec<Elem>> {
        self.ball_capped(radius, DEFAULT_BALL_CAP)
    }

    pub fn ball_capped(&self, radius: u32, cap: usize) -> Result<Vec<Elem>> {
        Ok(self.spheres(radius, cap)?.into_iter().flatten().collect())
    }

    pub fn generator_names(&self) -> Vec<String> {
        match self {
            Group::FreeProduct(fp) => fp.names().to_vec(),
            Group::Finite(fg) => fg.generators.iter().map(|&g| fg.group.name(g).to_string()).collect(),
        }
    }
}

/// `Γ = (Z/order)^{*n}` with `S = S_n` permuting the free factors.
pub fn builtin_symmetric_action(n: usize, order: Order) -> Result<(Group, FiniteSymmetry)> {
    const GENERATOR_CAP: usize = 64;
    const SYMMETRIC_RANK_CAP: usize = 7;
    if n < 2 {
        return Err(Error::Domain("symmetric action needs n >= 2".into()));
    }
    let per_factor = match order {
        Order::Finite(m) if m < 2 => return Err(Error::Domain("factor order must be >= 2".into())),
        Order::Finite(m) => (m - 1) as usize,
        Order::Infinite => 2,
    };
    if n * per_factor > GENERATOR_CAP || n > SYMMETRIC_RANK_CAP {
        return Err(Error::Resource(format!(
            "symmetric action with n = {n}, order {order} exceeds generator cap"
        )));
    }
    let gamma = Group::free_product_of(n, order)?;
    let sym = FiniteSymmetry::permuting_factors(&gamma, FiniteGroup::symmetric(n))?;
    Ok((gamma, sym))
}
