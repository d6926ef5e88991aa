use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Deserialize;

use super::FusionRing;
use crate::error::{Error, Result};

/// A finite fusion ring given by explicit tables. Labels are indices.
#[derive(Clone, Debug, PartialEq)]
pub struct TableRing {
    names: Vec<String>,
    dims: Vec<f64>,
    duals: Vec<usize>,
    unit: usize,
    /// `fusion[s * n + r]`: nonzero `(t, mult)` sorted by `t`.
    fusion: Vec<Vec<(usize, u32)>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RingText {
    labels: Vec<String>,
    unit: String,
    dims: Vec<f64>,
    mult: Vec<(String, String, String, u32)>,
}

impl TableRing {
    /// Build from sparse multiplicity triples `(s, r, t, mult)`. Duals are
    /// inferred from `mult(s, r, unit) = 1`; all ring invariants are checked.
    pub fn new(
        names: Vec<String>,
        dims: Vec<f64>,
        unit: usize,
        triples: &[(usize, usize, usize, u32)],
    ) -> Result<Self> {
        let n = names.len();
        if n == 0 || dims.len() != n || unit >= n {
            return Err(Error::Domain("ring needs matching labels, dims and a unit".into()));
        }
        let mut fusion: Vec<BTreeMap<usize, u32>> = vec![BTreeMap::new(); n * n];
        for &(s, r, t, m) in triples {
            if s >= n || r >= n || t >= n {
                return Err(Error::Domain("multiplicity triple refers to an unknown label".into()));
            }
            if m > 0 {
                *fusion[s * n + r].entry(t).or_insert(0) += m;
            }
        }
        let fusion: Vec<Vec<(usize, u32)>> = fusion.into_iter().map(|m| m.into_iter().collect()).collect();
        let mut duals = vec![usize::MAX; n];
        for s in 0..n {
            let cands: Vec<usize> = (0..n)
                .filter(|&r| fusion[s * n + r].iter().any(|&(t, m)| t == unit && m == 1))
                .collect();
            if cands.len() != 1 {
                return Err(Error::Domain(format!("label {:?} has no unique dual", names[s])));
            }
            duals[s] = cands[0];
        }
        let ring = Self { names, dims, duals, unit, fusion };
        let labels: Vec<usize> = (0..n).collect();
        let report = super::check_invariants(&ring, &labels, 1e-10)?;
        if !report.all_passed() {
            return Err(Error::Domain(format!("ring invariants fail: {}", report.failures().join("; "))));
        }
        Ok(ring)
    }

    /// The character ring of a finite group from its character table.
    ///
    /// `class_sizes[k]` is the size of class `k` (class 0 is the identity),
    /// `characters[i][k]` the value of irreducible `i` on class `k`.
    /// Irreducible 0 must be the trivial character.
    pub fn from_character_table(
        names: Vec<String>,
        class_sizes: &[usize],
        characters: &[Vec<Complex64>],
    ) -> Result<Self> {
        let n = characters.len();
        let order: usize = class_sizes.iter().sum();
        if names.len() != n || characters.iter().any(|c| c.len() != class_sizes.len()) {
            return Err(Error::Domain("character table shape mismatch".into()));
        }
        let dims: Vec<f64> = characters.iter().map(|c| c[0].re).collect();
        let mut triples = Vec::new();
        for s in 0..n {
            for r in 0..n {
                for t in 0..n {
                    let v: Complex64 = (0..class_sizes.len())
                        .map(|k| characters[s][k] * characters[r][k] * characters[t][k].conj() * class_sizes[k] as f64)
                        .sum::<Complex64>()
                        / order as f64;
                    let m = v.re.round();
                    if (v - Complex64::new(m, 0.0)).norm() > 1e-9 || m < 0.0 {
                        return Err(Error::Domain("character table does not give integral multiplicities".into()));
                    }
                    if m > 0.0 {
                        triples.push((s, r, t, m as u32));
                    }
                }
            }
        }
        Self::new(names, dims, 0, &triples)
    }

    /// `Rep(S₃)`: labels `1`, `sgn`, `V`.
    pub fn rep_s3() -> Self {
        let c = |x: f64| Complex64::new(x, 0.0);
        Self::from_character_table(
            vec!["1".into(), "sgn".into(), "V".into()],
            &[1, 3, 2],
            &[
                vec![c(1.0), c(1.0), c(1.0)],
                vec![c(1.0), c(-1.0), c(1.0)],
                vec![c(2.0), c(0.0), c(-1.0)],
            ],
        )
        .expect("S3 character table is valid")
    }

    /// Parse the structured text description (TOML with `labels`, `unit`,
    /// `dims` and sparse `mult = [[s, r, t, m], ...]`).
    pub fn from_text(text: &str) -> Result<Self> {
        let raw: RingText = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let idx = |name: &str| {
            raw.labels
                .iter()
                .position(|l| l == name)
                .ok_or_else(|| Error::Parse(format!("unknown label {name:?}")))
        };
        let unit = idx(&raw.unit)?;
        let mut triples = Vec::with_capacity(raw.mult.len());
        for (s, r, t, m) in &raw.mult {
            triples.push((idx(s)?, idx(r)?, idx(t)?, *m));
        }
        Self::new(raw.labels.clone(), raw.dims.clone(), unit, &triples)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    fn check(&self, s: usize) -> Result<()> {
        if s < self.names.len() {
            Ok(())
        } else {
            Err(Error::Domain(format!("label index {s} outside the ring")))
        }
    }
}

impl FusionRing for TableRing {
    type Label = usize;

    fn unit(&self) -> usize {
        self.unit
    }

    fn contains(&self, s: &usize) -> bool {
        *s < self.names.len()
    }

    fn dual(&self, s: &usize) -> Result<usize> {
        self.check(*s)?;
        Ok(self.duals[*s])
    }

    fn dim(&self, s: &usize) -> Result<f64> {
        self.check(*s)?;
        Ok(self.dims[*s])
    }

    fn fuse(&self, s: &usize, r: &usize) -> Result<Vec<(usize, u32)>> {
        self.check(*s)?;
        self.check(*r)?;
        Ok(self.fusion[s * self.names.len() + r].clone())
    }

    fn labels(&self) -> Box<dyn Iterator<Item = usize> + '_> {
        Box::new(0..self.names.len())
    }

    fn label_count(&self) -> Option<usize> {
        Some(self.names.len())
    }

    fn label_name(&self, s: &usize) -> String {
        self.names.get(*s).cloned().unwrap_or_else(|| format!("#{s}"))
    }

    fn parse_label(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Parse(format!("unknown label {name:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rep_s3_tables() {
        let r = TableRing::rep_s3();
        let v = r.parse_label("V").unwrap();
        let fused: Vec<(String, u32)> = r.fuse(&v, &v).unwrap().into_iter().map(|(t, m)| (r.label_name(&t), m)).collect();
        assert_eq!(fused, [("1".to_string(), 1), ("sgn".to_string(), 1), ("V".to_string(), 1)]);
        assert_eq!(r.dual(&v).unwrap(), v);
        assert_eq!(r.dim(&v).unwrap(), 2.0);
    }

    #[test]
    fn text_round_trip_matches_character_table() {
        let text = r#"
labels = ["1", "sgn", "V"]
unit = "1"
dims = [1.0, 1.0, 2.0]
mult = [
  ["1", "1", "1", 1], ["1", "sgn", "sgn", 1], ["1", "V", "V", 1],
  ["sgn", "1", "sgn", 1], ["sgn", "sgn", "1", 1], ["sgn", "V", "V", 1],
  ["V", "1", "V", 1], ["V", "sgn", "V", 1],
  ["V", "V", "1", 1], ["V", "V", "sgn", 1], ["V", "V", "V", 1],
]
"#;
        assert_eq!(TableRing::from_text(text).unwrap(), TableRing::rep_s3());
    }

    #[test]
    fn rejects_broken_dimension_identity() {
        let text = r#"
labels = ["1", "x"]
unit = "1"
dims = [1.0, 2.0]
mult = [["1", "1", "1", 1], ["1", "x", "x", 1], ["x", "1", "x", 1], ["x", "x", "1", 1]]
"#;
        assert!(matches!(TableRing::from_text(text), Err(Error::Domain(_))));
        assert!(matches!(TableRing::from_text("labels = 3"), Err(Error::Parse(_))));
    }
}
