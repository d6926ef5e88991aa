use super::finite::permutations;
use super::{Elem, FiniteGroup, Group, Order, Syllable};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Action {
    /// Per element of `S`: factor `i` goes to factor `.0`, inverted when `.1`.
    Factors { orders: Vec<Order>, maps: Vec<Vec<(u16, bool)>> },
    /// Per element of `S`: a permutation of the elements of a finite `Γ`.
    Table(Vec<Vec<usize>>),
}

/// A finite group `S` acting on `Γ` by isometric automorphisms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteSymmetry {
    group: FiniteGroup,
    action: Action,
}

impl FiniteSymmetry {
    /// `S = S_n` permuting the `n` free factors of `gamma`.
    pub fn permuting_factors(gamma: &Group, sn: FiniteGroup) -> Result<Self> {
        let Group::FreeProduct(fp) = gamma else {
            return Err(Error::Domain("factor permutation needs a free product".into()));
        };
        let k = fp.rank();
        let perms = permutations(k);
        if perms.len() != sn.order() {
            return Err(Error::Domain("symmetric group order does not match rank".into()));
        }
        if fp.orders().windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::Domain("permuted factors must share one order".into()));
        }
        let maps = perms
            .iter()
            .map(|p| p.iter().map(|&j| (j as u16, false)).collect())
            .collect();
        let sym = Self { group: sn, action: Action::Factors { orders: fp.orders().to_vec(), maps } };
        sym.verify_homomorphism(gamma)?;
        Ok(sym)
    }

    /// The trivial action of `S` on `Γ`.
    pub fn trivial(gamma: &Group, s: FiniteGroup) -> Result<Self> {
        let gens = gamma_generators(gamma);
        let images = vec![gens; s.order()];
        Self::from_images(gamma, s, images)
    }

    /// Build from images of `Γ`'s generators (free factors, or the chosen
    /// generators of a table group) under each element of `S`.
    pub fn from_images(gamma: &Group, s: FiniteGroup, images: Vec<Vec<Elem>>) -> Result<Self> {
        if images.len() != s.order() {
            return Err(Error::Domain(format!(
                "{} image lists for a symmetry group of order {}",
                images.len(),
                s.order()
            )));
        }
        let action = match gamma {
            Group::FreeProduct(fp) => {
                let k = fp.rank();
                let mut maps = Vec::with_capacity(images.len());
                for (si, imgs) in images.iter().enumerate() {
                    if imgs.len() != k {
                        return Err(Error::Domain(format!("element {si} of S: expected {k} generator images")));
                    }
                    let mut map = Vec::with_capacity(k);
                    let mut hit = vec![false; k];
                    for (i, img) in imgs.iter().enumerate() {
                        let [syl] = img.syllables() else {
                            return Err(Error::Domain(format!(
                                "image of generator {i} under element {si} is not a single generator"
                            )));
                        };
                        let j = syl.factor as usize;
                        let order = fp.orders()[j];
                        if order != fp.orders()[i] {
                            return Err(Error::Domain("automorphism must preserve factor orders".into()));
                        }
                        let inverted = if syl.exp == 1 {
                            false
                        } else if Some(syl.exp) == order.reduce(-1) {
                            true
                        } else {
                            return Err(Error::Domain(format!(
                                "image of generator {i} must be a generator or its inverse"
                            )));
                        };
                        if hit[j] {
                            return Err(Error::Domain("generator images are not a bijection on factors".into()));
                        }
                        hit[j] = true;
                        map.push((j as u16, inverted));
                    }
                    maps.push(map);
                }
                Action::Factors { orders: fp.orders().to_vec(), maps }
            }
            Group::Finite(fg) => {
                let g = fg.group();
                let n = g.order();
                // Express every element as a word in the generators (BFS tree).
                let mut word: Vec<Option<Vec<usize>>> = vec![None; n];
                word[0] = Some(Vec::new());
                let mut frontier = vec![0usize];
                let steps: Vec<(usize, usize, bool)> = fg
                    .generators()
                    .iter()
                    .enumerate()
                    .flat_map(|(gi, &x)| [(gi, x, false), (gi, g.inv(x), true)])
                    .collect();
                while !frontier.is_empty() {
                    let mut next = Vec::new();
                    for &w in &frontier {
                        for &(gi, x, inv) in &steps {
                            let v = g.mul(w, x);
                            if word[v].is_none() {
                                let mut ww = word[w].clone().unwrap();
                                ww.push(if inv { usize::MAX - gi } else { gi });
                                word[v] = Some(ww);
                                next.push(v);
                            }
                        }
                    }
                    frontier = next;
                }
                let mut perms = Vec::with_capacity(images.len());
                for imgs in &images {
                    if imgs.len() != fg.generators().len() {
                        return Err(Error::Domain("wrong number of generator images".into()));
                    }
                    let img_idx: Vec<usize> = imgs.iter().map(|e| e.table_index()).collect();
                    let perm: Vec<usize> = (0..n)
                        .map(|v| {
                            word[v].as_ref().unwrap().iter().fold(0, |acc, &letter| {
                                let x = if letter >= fg.generators().len() {
                                    g.inv(img_idx[usize::MAX - letter])
                                } else {
                                    img_idx[letter]
                                };
                                g.mul(acc, x)
                            })
                        })
                        .collect();
                    for a in 0..n {
                        for b in 0..n {
                            if perm[g.mul(a, b)] != g.mul(perm[a], perm[b]) {
                                return Err(Error::Domain("generator images do not define an automorphism".into()));
                            }
                        }
                    }
                    let mut seen = vec![false; n];
                    for &p in &perm {
                        if seen[p] {
                            return Err(Error::Domain("generator images do not define a bijection".into()));
                        }
                        seen[p] = true;
                    }
                    perms.push(perm);
                }
                Action::Table(perms)
            }
        };
        let sym = Self { group: s, action };
        sym.verify_homomorphism(gamma)?;
        if let Group::Finite(fg) = gamma {
            for si in 0..sym.order() {
                for x in (0..fg.group().order()).map(Elem::from_table_index) {
                    if gamma.length(&sym.apply(si, &x)) != gamma.length(&x) {
                        return Err(Error::Domain("automorphisms must preserve word length".into()));
                    }
                }
            }
        }
        Ok(sym)
    }

    fn verify_homomorphism(&self, gamma: &Group) -> Result<()> {
        let gens = gamma_generators(gamma);
        for g in &gens {
            if self.apply(0, g) != *g {
                return Err(Error::Domain("identity of S must act trivially".into()));
            }
        }
        for s in 0..self.order() {
            for t in 0..self.order() {
                let st = self.group.mul(s, t);
                for g in &gens {
                    if self.apply(s, &self.apply(t, g)) != self.apply(st, g) {
                        return Err(Error::Domain(format!(
                            "action is not a homomorphism at ({}, {})",
                            self.group.name(s),
                            self.group.name(t)
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn order(&self) -> usize {
        self.group.order()
    }

    /// `s.γ`.
    pub fn apply(&self, s: usize, x: &Elem) -> Elem {
        match &self.action {
            Action::Factors { orders, maps } => {
                let map = &maps[s];
                Elem::from_syllables(
                    x.syllables()
                        .iter()
                        .map(|syl| {
                            let (j, inv) = map[syl.factor as usize];
                            let exp = if inv {
                                orders[j as usize].reduce(-syl.exp).expect("nonzero exponent")
                            } else {
                                syl.exp
                            };
                            Syllable { factor: j, exp }
                        })
                        .collect(),
                )
            }
            Action::Table(perms) => Elem::from_table_index(perms[s][x.table_index()]),
        }
    }

    /// The orbit `{s.γ}`, sorted and without repeats.
    pub fn orbit(&self, x: &Elem) -> Vec<Elem> {
        let mut out: Vec<Elem> = (0..self.order()).map(|s| self.apply(s, x)).collect();
        out.sort();
        out.dedup();
        out
    }

    /// Canonical orbit representative: the smallest element of the orbit.
    pub fn orbit_base(&self, x: &Elem) -> Elem {
        (0..self.order()).map(|s| self.apply(s, x)).min().unwrap()
    }

    /// Indices of `S_γ = {s : s.γ = γ}`, ascending.
    pub fn stabilizer(&self, x: &Elem) -> Vec<usize> {
        (0..self.order()).filter(|&s| self.apply(s, x) == *x).collect()
    }

    pub fn fixes(&self, s: usize, x: &Elem) -> bool {
        self.apply(s, x) == *x
    }

    /// An element `u` with `u.from = to`, if any.
    pub fn transporter(&self, from: &Elem, to: &Elem) -> Option<usize> {
        (0..self.order()).find(|&u| self.apply(u, from) == *to)
    }
}

fn gamma_generators(gamma: &Group) -> Vec<Elem> {
    match gamma {
        Group::FreeProduct(fp) => (0..fp.rank())
            .map(|i| Elem::from_syllables(vec![Syllable { factor: i as u16, exp: 1 }]))
            .collect(),
        Group::Finite(fg) => fg.generators().iter().map(|&g| Elem::from_table_index(g)).collect(),
    }
}
