use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Interned-ish symbol name. Cloning is a refcount bump.
pub type Sym = Arc<str>;

/// A product of named variables raised to positive exponents.
///
/// Factors are kept sorted by name and no exponent is zero, so structural
/// equality is value equality. The empty product is the constant 1.
/// Ordering is degree-lexicographic: higher total degree is greater, ties
/// broken by comparing exponents of the alphabetically first variable.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    factors: Vec<(Sym, u32)>,
}

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn var(name: &str) -> Self {
        Self::var_pow(name, 1)
    }

    pub fn var_pow(name: &str, exp: u32) -> Self {
        if exp == 0 {
            return Self::one();
        }
        Self {
            factors: vec![(Sym::from(name), exp)],
        }
    }

    /// Builds a monomial from (name, exponent) pairs; zero exponents are
    /// dropped and repeated names are merged.
    pub fn from_pairs<S: AsRef<str>>(pairs: impl IntoIterator<Item = (S, u32)>) -> Self {
        let mut map: BTreeMap<Sym, u32> = BTreeMap::new();
        for (name, e) in pairs {
            if e > 0 {
                *map.entry(Sym::from(name.as_ref())).or_insert(0) += e;
            }
        }
        Self {
            factors: map.into_iter().collect(),
        }
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|(_, e)| *e).sum()
    }

    pub fn exp(&self, name: &str) -> u32 {
        self.factors
            .binary_search_by(|(s, _)| s.as_ref().cmp(name))
            .map(|i| self.factors[i].1)
            .unwrap_or(0)
    }

    pub fn factors(&self) -> &[(Sym, u32)] {
        &self.factors
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.factors.iter().map(|(s, _)| s.as_ref())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.exp(name) > 0
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        if other.is_one() {
            return self.clone();
        }
        if self.is_one() {
            return other.clone();
        }
        let (a, b) = (&self.factors, &other.factors);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0.clone(), a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial { factors: out }
    }

    pub fn pow(&self, k: u32) -> Monomial {
        if k == 0 {
            return Monomial::one();
        }
        Monomial {
            factors: self
                .factors
                .iter()
                .map(|(s, e)| (s.clone(), e * k))
                .collect(),
        }
    }

    /// `self / other` if `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.factors.len());
        let mut j = 0;
        for (s, e) in &self.factors {
            let mut e = *e;
            if j < other.factors.len() && other.factors[j].0 == *s {
                if other.factors[j].1 > e {
                    return None;
                }
                e -= other.factors[j].1;
                j += 1;
            } else if j < other.factors.len() && other.factors[j].0 < *s {
                return None;
            }
            if e > 0 {
                out.push((s.clone(), e));
            }
        }
        if j < other.factors.len() {
            return None;
        }
        Some(Monomial { factors: out })
    }

    /// Splits off the power of `name`: returns (rest, exponent).
    pub fn split(&self, name: &str) -> (Monomial, u32) {
        let mut rest = Vec::with_capacity(self.factors.len());
        let mut k = 0;
        for (s, e) in &self.factors {
            if s.as_ref() == name {
                k = *e;
            } else {
                rest.push((s.clone(), *e));
            }
        }
        (Monomial { factors: rest }, k)
    }

    /// Replaces the exponent of `name` (0 removes it).
    pub fn with_exp(&self, name: &str, exp: u32) -> Monomial {
        let (rest, _) = self.split(name);
        rest.mul(&Monomial::var_pow(name, exp))
    }

    /// Renames variables through `f`; factors that map to the same name merge.
    pub fn rename(&self, f: impl Fn(&str) -> String) -> Monomial {
        Monomial::from_pairs(self.factors.iter().map(|(s, e)| (f(s), *e)))
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        let d = self.degree().cmp(&other.degree());
        if d != Ordering::Equal {
            return d;
        }
        let (a, b) = (&self.factors, &other.factors);
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                // `a` carries a variable that `b` lacks at this position
                Ordering::Less => return Ordering::Greater,
                Ordering::Greater => return Ordering::Less,
                Ordering::Equal => match a[i].1.cmp(&b[j].1) {
                    Ordering::Equal => {
                        i += 1;
                        j += 1;
                    }
                    o => return o,
                },
            }
        }
        (a.len() - i).cmp(&(b.len() - j))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        for (i, (s, e)) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            if *e == 1 {
                write!(f, "{s}")?;
            } else {
                write!(f, "{s}^{e}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Serialize for Monomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let map: BTreeMap<&str, u32> = self.factors.iter().map(|(k, e)| (k.as_ref(), *e)).collect();
        map.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Monomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let map = BTreeMap::<String, u32>::deserialize(d)?;
        Ok(Monomial::from_pairs(map))
    }
}
