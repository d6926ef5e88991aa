//! Fusion-ring arithmetic, measures on simple labels, the induced classical
//! random walk, and truncated Green and Martin kernels.
//!
//! Rings are accessed through [`FusionRing`], whose label enumeration is lazy
//! so infinite rings (pointed rings of infinite groups, `Irr(H)` of crossed
//! products) share the same code paths as finite tables.

mod invariants;
mod measure;
mod pointed;
mod table;
mod walk;

pub use invariants::{check_invariants, InvariantCheck, InvariantReport};
pub use measure::LabelMeasure;
pub use pointed::PointedRing;
pub use table::TableRing;
pub use walk::{
    convolution_power, convolve, dual_measure, green_classical, is_generating, martin_classical,
    transition, ClassicalGreen, GreenConfig, KernelTable, LabelDomain, TailEstimate, MARTIN_FLOOR,
};

use std::fmt::Debug;
use std::hash::Hash;

use crate::error::Result;

/// The Grothendieck ring of a rigid C*-tensor category: labels, duals,
/// dimensions and fusion multiplicities.
pub trait FusionRing {
    type Label: Clone + Ord + Hash + Debug;

    fn unit(&self) -> Self::Label;

    fn contains(&self, s: &Self::Label) -> bool;

    fn dual(&self, s: &Self::Label) -> Result<Self::Label>;

    fn dim(&self, s: &Self::Label) -> Result<f64>;

    /// Nonzero multiplicities `mult(s, r, t)` of `t` in `s ⊗ r`, sorted by label.
    fn fuse(&self, s: &Self::Label, r: &Self::Label) -> Result<Vec<(Self::Label, u32)>>;

    /// Labels in canonical order. May be infinite; callers cap it.
    fn labels(&self) -> Box<dyn Iterator<Item = Self::Label> + '_>;

    /// Number of labels, `None` for infinite rings.
    fn label_count(&self) -> Option<usize>;

    fn label_name(&self, s: &Self::Label) -> String;

    fn parse_label(&self, name: &str) -> Result<Self::Label>;

    fn mult(&self, s: &Self::Label, r: &Self::Label, t: &Self::Label) -> Result<u32> {
        Ok(self
            .fuse(s, r)?
            .into_iter()
            .find(|(l, _)| l == t)
            .map_or(0, |(_, m)| m))
    }
}
