//! Scenario files: versioned TOML with fixed sections. Unknown keys are
//! rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qwalk::crossed::{CrossedElement, NormalTrace, QGroupContext, Window};
use qwalk::fusion::{LabelMeasure, TableRing};
use qwalk::groups::{
    builtin_symmetric_action, FiniteGamma, FiniteGroup, FiniteSymmetry, FreeProduct, Group, Order,
};

use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<GroupSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<SymmetrySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ring: Option<RingSection>,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcategory: Option<SubcategorySection>,
    /// Assertion name to `"pass"` or `"fail"`; unlisted assertions must pass.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub expect: BTreeMap<String, Expectation>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Expectation {
    Pass,
    Fail,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, tag = "family", rename_all = "kebab-case")]
pub enum GroupSection {
    /// Orders of the cyclic factors, `0` meaning infinite.
    FreeProduct {
        orders: Vec<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        names: Option<Vec<String>>,
    },
    Finite { table: Vec<Vec<usize>>, names: Vec<String>, generators: Vec<String> },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "kebab-case")]
pub enum SymmetrySection {
    /// `S_n` permuting the free factors.
    Symmetric,
    /// `Z/order` acting trivially.
    Trivial { order: usize },
    /// A finite group by table; `images[s]` lists the images of the
    /// generators of `Γ` under element `s`.
    Table { table: Vec<Vec<usize>>, names: Vec<String>, images: Vec<Vec<String>> },
}

/// A complex number as a plain real or `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Scalar {
    Real(f64),
    Complex([f64; 2]),
}

impl Scalar {
    pub fn value(self) -> Complex64 {
        match self {
            Scalar::Real(x) => Complex64::new(x, 0.0),
            Scalar::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub gamma: String,
    pub s: String,
    pub value: Scalar,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TauSection {
    /// Any point of the orbit; values are transported along it.
    pub at: String,
    /// Values `τ(λ_s)` keyed by element name of `S`.
    pub values: BTreeMap<String, Scalar>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, tag = "form", rename_all = "kebab-case")]
pub enum StateSection {
    Weights {
        weights: Vec<Term>,
        #[serde(default)]
        mix: u32,
    },
    Pair {
        mu: BTreeMap<String, f64>,
        #[serde(default)]
        tau: Vec<TauSection>,
        #[serde(default)]
        mix: u32,
    },
    Blocks {
        blocks: BTreeMap<String, f64>,
        #[serde(default)]
        mix: u32,
    },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, tag = "source", rename_all = "kebab-case")]
pub enum RingSection {
    RepS3,
    /// Path relative to the scenario file.
    File { path: PathBuf },
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub horizon: usize,
    pub window: u32,
    pub n_max: usize,
    pub seed: u64,
    /// Killing radius for Green computations on `H`.
    pub radius: u32,
    /// Ball radius of the random elements sampled by `contraction`.
    pub sample_radius: u32,
    /// Ball radius of the Dirichlet problem in `harmonic`.
    pub dirichlet_radius: u32,
    /// Spheres `1..=spheres` in Martin tables.
    pub spheres: u32,
    pub samples: usize,
    pub trials: usize,
    /// Label cap for enumerations over infinite rings.
    pub cap: usize,
    pub tolerance: f64,
    /// Initial element for `decay`; defaults to `Σ_{s≠e} λ_s` at `e`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub start: Vec<Term>,
    /// Block whose idempotent is compared in `martin`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub martin_block: Option<String>,
    /// Generator whose branch indicator is the boundary data in `harmonic`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<String>,
    /// Expected `h(e)` in `harmonic`, checked to 0.01.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_e: Option<f64>,
    /// Expected `G(e, e)` in `green-classical`, checked to 0.01.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub green_e: Option<f64>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            horizon: 40,
            window: 20,
            n_max: 20,
            seed: 0,
            radius: 12,
            sample_radius: 3,
            dirichlet_radius: 8,
            spheres: 5,
            samples: 200,
            trials: 100,
            cap: 200,
            tolerance: 1e-12,
            start: Vec::new(),
            martin_block: None,
            branch: None,
            h_e: None,
            green_e: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SubcategorySection {
    /// `table` (the `[ring]` section), `pointed` (the group) or `irr`.
    pub ring: String,
    pub labels: Vec<String>,
    /// Measure to split; labels outside the subcategory allowed.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub mu: BTreeMap<String, f64>,
}

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

impl Scenario {
    pub fn load(path: &Path) -> Result<(Self, PathBuf), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
        let sc = Self::parse(&text).map_err(|e| match e {
            CliError::Input(m) => input(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((sc, dir))
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let sc: Scenario = toml::from_str(text).map_err(|e| input(e.to_string()))?;
        if sc.version != FORMAT_VERSION {
            return Err(input(format!("unsupported scenario version {} (expected {FORMAT_VERSION})", sc.version)));
        }
        Ok(sc)
    }

    /// SHA-256 of the canonical re-serialization.
    pub fn hash(&self) -> String {
        let canon = toml::to_string(self).expect("scenario serializes");
        let digest = Sha256::digest(canon.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn build_group(&self) -> Result<Group, CliError> {
        let g = self.group.as_ref().ok_or_else(|| input("scenario has no [group] section"))?;
        Ok(match g {
            GroupSection::FreeProduct { orders, names } => {
                if orders.is_empty() {
                    return Err(input("group.orders: at least one factor is needed"));
                }
                let orders: Vec<Order> = orders
                    .iter()
                    .enumerate()
                    .map(|(i, &m)| match m {
                        0 => Ok(Order::Infinite),
                        1 => Err(input(format!("group.orders[{i}]: order 1 is the trivial group"))),
                        m => Ok(Order::Finite(m)),
                    })
                    .collect::<Result<_, _>>()?;
                let names = names.clone().unwrap_or_else(|| FreeProduct::default_names(&orders));
                Group::FreeProduct(FreeProduct::new(orders, names)?)
            }
            GroupSection::Finite { table, names, generators } => {
                let fg = FiniteGroup::from_table(table.clone(), names.clone())?;
                let gens = generators
                    .iter()
                    .map(|n| fg.index_of(n).ok_or_else(|| input(format!("group.generators: unknown element {n:?}"))))
                    .collect::<Result<_, _>>()?;
                Group::Finite(FiniteGamma::new(fg, gens)?)
            }
        })
    }

    pub fn build_context(&self) -> Result<QGroupContext, CliError> {
        let gamma = self.build_group()?;
        let sym = match &self.symmetry {
            None => FiniteSymmetry::trivial(&gamma, FiniteGroup::cyclic(1))?,
            Some(SymmetrySection::Trivial { order }) => FiniteSymmetry::trivial(&gamma, FiniteGroup::cyclic(*order))?,
            Some(SymmetrySection::Symmetric) => {
                let GroupSection::FreeProduct { orders, .. } = self.group.as_ref().unwrap() else {
                    return Err(input("symmetry.kind = \"symmetric\" needs a free product"));
                };
                if self.group_has_custom_names() {
                    FiniteSymmetry::permuting_factors(&gamma, FiniteGroup::symmetric(orders.len()))?
                } else {
                    let order = match orders[0] {
                        0 => Order::Infinite,
                        m => Order::Finite(m),
                    };
                    builtin_symmetric_action(orders.len(), order)?.1
                }
            }
            Some(SymmetrySection::Table { table, names, images }) => {
                let sg = FiniteGroup::from_table(table.clone(), names.clone())?;
                let images = images
                    .iter()
                    .map(|row| row.iter().map(|w| gamma.parse(w)).collect::<qwalk::Result<Vec<_>>>())
                    .collect::<qwalk::Result<Vec<_>>>()?;
                FiniteSymmetry::from_images(&gamma, sg, images)?
            }
        };
        Ok(QGroupContext::new(gamma, sym))
    }

    fn group_has_custom_names(&self) -> bool {
        matches!(&self.group, Some(GroupSection::FreeProduct { names: Some(_), .. }))
    }

    pub fn build_state(&self, ctx: &QGroupContext) -> Result<NormalTrace, CliError> {
        let st = self.state.as_ref().ok_or_else(|| input("scenario has no [state] section"))?;
        let g = ctx.gamma();
        let (phi, mix) = match st {
            StateSection::Weights { weights, mix } => {
                let terms = parse_terms(ctx, weights)?;
                (NormalTrace::from_weights(ctx, terms)?, *mix)
            }
            StateSection::Pair { mu, tau, mix } => {
                let mu_bar =
                    mu.iter().map(|(w, p)| Ok((g.parse(w)?, *p))).collect::<qwalk::Result<Vec<_>>>()?;
                let mut taus = Vec::new();
                for t in tau {
                    let at = g.parse(&t.at)?;
                    let vals = t
                        .values
                        .iter()
                        .map(|(s, v)| Ok((ctx.parse_s(s)?, v.value())))
                        .collect::<qwalk::Result<Vec<_>>>()?;
                    taus.push((at, vals));
                }
                (NormalTrace::from_pair(ctx, &mu_bar, &taus)?, *mix)
            }
            StateSection::Blocks { mix, .. } => {
                (ctx.state_from_blocks(&self.block_measure(ctx)?.expect("block form"))?, *mix)
            }
        };
        Ok(if mix > 0 { phi.mix(mix, ctx)? } else { phi })
    }

    /// The block measure of a `form = "blocks"` state.
    pub fn block_measure(
        &self,
        ctx: &QGroupContext,
    ) -> Result<Option<LabelMeasure<qwalk::crossed::BlockIndex>>, CliError> {
        match &self.state {
            Some(StateSection::Blocks { blocks, .. }) => {
                let items = blocks
                    .iter()
                    .map(|(n, w)| Ok((ctx.parse_block(n)?, *w)))
                    .collect::<qwalk::Result<Vec<_>>>()?;
                Ok(Some(LabelMeasure::new(items)?))
            }
            _ => Ok(None),
        }
    }

    pub fn start_element(&self, ctx: &QGroupContext) -> Result<CrossedElement, CliError> {
        let window = Window::Ball(self.run.window);
        if self.run.start.is_empty() {
            let e = ctx.gamma().identity();
            let terms = (1..ctx.s_order()).map(|s| ((e.clone(), s), Complex64::new(1.0, 0.0)));
            return Ok(CrossedElement::from_terms(terms, window));
        }
        Ok(CrossedElement::from_terms(parse_terms(ctx, &self.run.start)?, window))
    }

    pub fn build_ring(&self, dir: &Path) -> Result<TableRing, CliError> {
        match self.ring.as_ref().ok_or_else(|| input("scenario has no [ring] section"))? {
            RingSection::RepS3 => Ok(TableRing::rep_s3()),
            RingSection::File { path } => {
                let full = dir.join(path);
                let text =
                    std::fs::read_to_string(&full).map_err(|e| input(format!("{}: {e}", full.display())))?;
                Ok(TableRing::from_text(&text)?)
            }
        }
    }
}

fn parse_terms(ctx: &QGroupContext, terms: &[Term]) -> Result<Vec<((qwalk::groups::Elem, usize), Complex64)>, CliError> {
    terms
        .iter()
        .map(|t| Ok(((ctx.gamma().parse(&t.gamma)?, ctx.parse_s(&t.s)?), t.value.value())))
        .collect::<qwalk::Result<Vec<_>>>()
        .map_err(CliError::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DIHEDRAL: &str = r#"
version = 1
name = "dihedral"

[group]
family = "free-product"
orders = [2, 2]

[symmetry]
kind = "symmetric"

[state]
form = "pair"
mu = { e = 0.5, a = 0.25, b = 0.25 }
tau = [{ at = "e", values = { id = 1.0, "(1,2)" = 0.5 } }]
"#;

    #[test]
    fn parses_and_builds() {
        let sc = Scenario::parse(DIHEDRAL).unwrap();
        let ctx = sc.build_context().unwrap();
        assert_eq!(ctx.s_order(), 2);
        let phi = sc.build_state(&ctx).unwrap();
        assert_eq!(phi.weight(&ctx.gamma().identity(), 1), Complex64::new(0.25, 0.0));
        assert_eq!(sc.run, RunSection::default());
    }

    #[test]
    fn hash_ignores_formatting() {
        let a = Scenario::parse(DIHEDRAL).unwrap();
        let b = Scenario::parse(&DIHEDRAL.replace("orders = [2, 2]", "orders = [ 2,2 ]   # factors")).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = Scenario::parse(&format!("{DIHEDRAL}\n[run]\nhorizon = 41\n")).unwrap();
        assert_eq!(c.run.window, RunSection::default().window);
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = Scenario::parse(&DIHEDRAL.replace("orders", "order")).unwrap_err();
        assert!(err.to_string().contains("order"));
        let err = Scenario::parse(&DIHEDRAL.replace("version = 1", "version = 2")).unwrap_err();
        assert!(matches!(err, CliError::Input(_)));
    }

    #[test]
    fn malformed_orders() {
        let sc = Scenario::parse(&DIHEDRAL.replace("[2, 2]", "[2, 1]")).unwrap();
        let err = sc.build_context().unwrap_err();
        assert!(err.to_string().contains("group.orders[1]"));
        assert!(Scenario::parse(&DIHEDRAL.replace("[2, 2]", "[2, \"x\"]")).is_err());
    }
}
