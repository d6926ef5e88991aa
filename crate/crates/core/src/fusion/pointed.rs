use std::collections::BTreeSet;

use super::FusionRing;
use crate::error::Result;
use crate::groups::{Elem, Group};

/// The pointed fusion ring of a group: every label has dimension 1 and
/// `s ⊗ r = sr`.
#[derive(Clone, Debug)]
pub struct PointedRing {
    group: Group,
}

impl PointedRing {
    pub fn new(group: Group) -> Self {
        Self { group }
    }

    pub fn group(&self) -> &Group {
        &self.group
    }
}

/// Lazy enumeration of a group sphere by sphere, in ball order.
struct SphereWalk<'a> {
    group: &'a Group,
    steps: Vec<Elem>,
    radius: u32,
    current: Vec<Elem>,
    pos: usize,
}

impl Iterator for SphereWalk<'_> {
    type Item = Elem;

    fn next(&mut self) -> Option<Elem> {
        if self.pos == self.current.len() {
            let mut next = BTreeSet::new();
            for w in &self.current {
                for g in &self.steps {
                    let v = self.group.multiply(w, g);
                    if self.group.length(&v) == self.radius + 1 {
                        next.insert(v);
                    }
                }
            }
            if next.is_empty() {
                return None;
            }
            self.radius += 1;
            self.current = next.into_iter().collect();
            self.pos = 0;
        }
        self.pos += 1;
        Some(self.current[self.pos - 1].clone())
    }
}

impl FusionRing for PointedRing {
    type Label = Elem;

    fn unit(&self) -> Elem {
        Elem::identity()
    }

    fn contains(&self, _s: &Elem) -> bool {
        true
    }

    fn dual(&self, s: &Elem) -> Result<Elem> {
        Ok(self.group.inverse(s))
    }

    fn dim(&self, _s: &Elem) -> Result<f64> {
        Ok(1.0)
    }

    fn fuse(&self, s: &Elem, r: &Elem) -> Result<Vec<(Elem, u32)>> {
        Ok(vec![(self.group.multiply(s, r), 1)])
    }

    fn labels(&self) -> Box<dyn Iterator<Item = Elem> + '_> {
        Box::new(SphereWalk {
            group: &self.group,
            steps: self.group.step_generators(),
            radius: 0,
            current: vec![Elem::identity()],
            pos: 0,
        })
    }

    fn label_count(&self) -> Option<usize> {
        match &self.group {
            Group::Finite(fg) => Some(fg.group().order()),
            Group::FreeProduct(_) if self.group.is_finite() => Some(self.labels().count()),
            Group::FreeProduct(_) => None,
        }
    }

    fn label_name(&self, s: &Elem) -> String {
        self.group.format(s)
    }

    fn parse_label(&self, name: &str) -> Result<Elem> {
        self.group.parse(name)
    }
}
