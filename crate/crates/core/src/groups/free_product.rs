use super::{Elem, Syllable};
use crate::error::{Error, Result};

/// Order of one cyclic free factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Order {
    Finite(u32),
    Infinite,
}

impl Order {
    /// Canonical representative of an exponent, or `None` when it is trivial.
    pub fn reduce(self, exp: i64) -> Option<i64> {
        match self {
            Order::Finite(m) => {
                let r = exp.rem_euclid(m as i64);
                (r != 0).then_some(r)
            }
            Order::Infinite => (exp != 0).then_some(exp),
        }
    }

    /// Word-length cost of a syllable with the given canonical exponent.
    pub fn cost(self, exp: i64) -> u32 {
        match self {
            Order::Finite(m) => {
                let k = exp.rem_euclid(m as i64) as u32;
                k.min(m - k)
            }
            Order::Infinite => exp.unsigned_abs() as u32,
        }
    }
}

impl std::fmt::Display for Order {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Order::Finite(m) => write!(f, "{m}"),
            Order::Infinite => write!(f, "inf"),
        }
    }
}

/// A free product of cyclic groups `Z/m_1 * ... * Z/m_k` (orders may be infinite).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FreeProduct {
    orders: Vec<Order>,
    names: Vec<String>,
}

impl FreeProduct {
    pub fn new(orders: Vec<Order>, names: Vec<String>) -> Result<Self> {
        if orders.is_empty() {
            return Err(Error::Domain("free product needs at least one factor".into()));
        }
        if orders.len() != names.len() {
            return Err(Error::Domain(format!(
                "{} orders but {} generator names",
                orders.len(),
                names.len()
            )));
        }
        for o in &orders {
            if let Order::Finite(m) = o {
                if *m < 2 {
                    return Err(Error::Domain(format!("factor order {m} must be at least 2")));
                }
            }
        }
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() || n == "e" || !n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(Error::Domain(format!("invalid generator name {n:?}")));
            }
            if !n.chars().next().unwrap().is_ascii_alphabetic() {
                return Err(Error::Domain(format!("generator name {n:?} must start with a letter")));
            }
            if names[..i].contains(n) {
                return Err(Error::Domain(format!("duplicate generator name {n:?}")));
            }
        }
        Ok(Self { orders, names })
    }

    /// Default generator names: letters skipping `e` for finite factors,
    /// `x, y, z` (or `x1..xn`) for infinite ones.
    pub fn default_names(orders: &[Order]) -> Vec<String> {
        let all_infinite = orders.iter().all(|o| *o == Order::Infinite);
        if all_infinite {
            if orders.len() <= 3 {
                return ["x", "y", "z"][..orders.len()].iter().map(|s| s.to_string()).collect();
            }
            return (1..=orders.len()).map(|i| format!("x{i}")).collect();
        }
        let letters: Vec<char> = ('a'..='z').filter(|c| *c != 'e').collect();
        if orders.len() <= letters.len() {
            letters[..orders.len()].iter().map(|c| c.to_string()).collect()
        } else {
            (1..=orders.len()).map(|i| format!("g{i}")).collect()
        }
    }

    pub fn orders(&self) -> &[Order] {
        &self.orders
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn rank(&self) -> usize {
        self.orders.len()
    }

    /// Append a syllable to a normal form, merging and cancelling at the junction.
    pub(crate) fn push_syllable(&self, out: &mut Vec<Syllable>, s: Syllable) {
        let order = self.orders[s.factor as usize];
        let Some(exp) = order.reduce(s.exp) else { return };
        match out.last_mut() {
            Some(last) if last.factor == s.factor => match order.reduce(last.exp + exp) {
                Some(e) => last.exp = e,
                None => {
                    out.pop();
                }
            },
            _ => out.push(Syllable { factor: s.factor, exp }),
        }
    }

    pub fn multiply(&self, x: &Elem, y: &Elem) -> Elem {
        let mut out = Vec::with_capacity(x.0.len() + y.0.len());
        out.extend_from_slice(&x.0);
        let mut rest = y.0.iter();
        // Cancellation only ever happens at the junction; once a syllable
        // survives, the remainder of `y` is already in normal form.
        for s in rest.by_ref() {
            let before = out.len();
            let last_factor = out.last().map(|l| l.factor);
            self.push_syllable(&mut out, *s);
            if last_factor != Some(s.factor) || out.len() >= before {
                break;
            }
        }
        out.extend(rest.copied());
        Elem(out)
    }

    pub fn inverse(&self, x: &Elem) -> Elem {
        Elem(
            x.0.iter()
                .rev()
                .map(|s| Syllable {
                    factor: s.factor,
                    exp: self.orders[s.factor as usize].reduce(-s.exp).expect("nonzero"),
                })
                .collect(),
        )
    }

    pub fn length(&self, x: &Elem) -> u32 {
        x.0.iter().map(|s| self.orders[s.factor as usize].cost(s.exp)).sum()
    }

    /// Symmetric generating set `{x_i, x_i^{-1}}` (a single element for involutions).
    pub fn step_generators(&self) -> Vec<Elem> {
        let mut out = Vec::new();
        for (i, o) in self.orders.iter().enumerate() {
            let f = i as u16;
            out.push(Elem(vec![Syllable { factor: f, exp: 1 }]));
            let inv = o.reduce(-1).unwrap();
            if inv != 1 {
                out.push(Elem(vec![Syllable { factor: f, exp: inv }]));
            }
        }
        out
    }

    fn factor_of(&self, name: &str) -> Option<u16> {
        self.names.iter().position(|n| n == name).map(|i| i as u16)
    }

    /// Parse `e`, juxtaposed names (`abba`), or dotted syllables (`x^-2.y^1`).
    pub fn parse(&self, word: &str) -> Result<Elem> {
        let word = word.trim();
        if word.is_empty() {
            return Err(Error::Parse("empty word".into()));
        }
        if word == "e" {
            return Ok(Elem::identity());
        }
        let mut out = Vec::new();
        if word.contains('.') {
            for part in word.split('.') {
                let (name, exp) = match part.split_once('^') {
                    Some((n, e)) => {
                        let exp: i64 = e
                            .parse()
                            .map_err(|_| Error::Parse(format!("bad exponent in {part:?}")))?;
                        (n, exp)
                    }
                    None => (part, 1),
                };
                if name == "e" && exp == 1 {
                    continue;
                }
                let f = self
                    .factor_of(name)
                    .ok_or_else(|| Error::Parse(format!("unknown generator {name:?}")))?;
                if exp == 0 {
                    return Err(Error::Parse(format!("zero exponent in {part:?}")));
                }
                self.push_syllable(&mut out, Syllable { factor: f, exp });
            }
            return Ok(Elem(out));
        }
        // Juxtaposed form: greedy longest-match on generator names.
        let bytes = word.as_bytes();
        let mut pos = 0;
        while pos < bytes.len() {
            let mut best: Option<(usize, u16)> = None;
            for (i, n) in self.names.iter().enumerate() {
                if word[pos..].starts_with(n.as_str()) && best.is_none_or(|(l, _)| n.len() > l) {
                    best = Some((n.len(), i as u16));
                }
            }
            let Some((len, f)) = best else {
                return Err(Error::Parse(format!(
                    "unknown generator at {:?} in {word:?}",
                    &word[pos..]
                )));
            };
            pos += len;
            let mut exp = 1i64;
            if pos < bytes.len() && bytes[pos] == b'^' {
                let start = pos + 1;
                let mut end = start;
                if end < bytes.len() && bytes[end] == b'-' {
                    end += 1;
                }
                while end < bytes.len() && bytes[end].is_ascii_digit() {
                    end += 1;
                }
                exp = word[start..end]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad exponent in {word:?}")))?;
                if exp == 0 {
                    return Err(Error::Parse(format!("zero exponent in {word:?}")));
                }
                pos = end;
            }
            self.push_syllable(&mut out, Syllable { factor: f, exp });
        }
        Ok(Elem(out))
    }

    pub fn format(&self, x: &Elem) -> String {
        if x.0.is_empty() {
            return "e".into();
        }
        let simple = x.0.iter().all(|s| s.exp == 1 && self.names[s.factor as usize].len() == 1);
        if simple {
            return x.0.iter().map(|s| self.names[s.factor as usize].as_str()).collect();
        }
        x.0.iter()
            .map(|s| {
                let n = &self.names[s.factor as usize];
                if s.exp == 1 {
                    n.clone()
                } else {
                    format!("{n}^{}", s.exp)
                }
            })
            .collect::<Vec<_>>()
            .join(".")
    }
}
