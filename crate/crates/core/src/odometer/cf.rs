//! Sets of cyclic-factor orders, stored as supernatural numbers.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Exponent of a prime in a supernatural number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Exponent {
    Finite(u32),
    Infinite,
}

impl Exponent {
    fn covers(self, e: u32) -> bool {
        match self {
            Exponent::Infinite => true,
            Exponent::Finite(f) => f >= e,
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(e) => write!(f, "{e}"),
            Exponent::Infinite => f.write_str("inf"),
        }
    }
}

/// The set `{n ≥ 1 : n | Π p^{e_p}}`.
///
/// Divisor-closed and lcm-closed by construction. Primes with exponent zero
/// are never stored, so structural equality is set equality.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct CFSet {
    exponents: BTreeMap<u64, Exponent>,
}

/// Prime factorization by trial division, ascending primes.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    if n <= 1 {
        return out;
    }
    let mut push = |p: u64, n: &mut u64| {
        let mut e = 0;
        while (*n).is_multiple_of(p) {
            *n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
    };
    push(2, &mut n);
    let mut p = 3u64;
    while p.saturating_mul(p) <= n {
        push(p, &mut n);
        p += 2;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && factorize(n) == [(n, 1)]
}

impl CFSet {
    /// `{1}`: only the trivial cyclic permutation.
    pub fn trivial() -> Self {
        CFSet::default()
    }

    pub fn from_exponents<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u64, Exponent)>,
    {
        let mut exponents = BTreeMap::new();
        for (p, e) in entries {
            if !is_prime(p) {
                return Err(Error::invalid(format!("{p} is not prime")));
            }
            if e == Exponent::Finite(0) {
                continue;
            }
            if exponents.insert(p, e).is_some() {
                return Err(Error::invalid(format!("prime {p} listed twice")));
            }
        }
        Ok(CFSet { exponents })
    }

    /// All positive divisors of `n`.
    pub fn divisors_of(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("0 has no finite divisor set"));
        }
        Ok(CFSet {
            exponents: factorize(n)
                .into_iter()
                .map(|(p, e)| (p, Exponent::Finite(e)))
                .collect(),
        })
    }

    pub fn exponents(&self) -> &BTreeMap<u64, Exponent> {
        &self.exponents
    }

    pub fn exponent(&self, p: u64) -> Exponent {
        self.exponents
            .get(&p)
            .copied()
            .unwrap_or(Exponent::Finite(0))
    }

    pub fn is_finite(&self) -> bool {
        !self.exponents.values().any(|e| *e == Exponent::Infinite)
    }

    /// Largest member of a finite set; `None` if infinite or it overflows.
    pub fn max_element(&self) -> Option<u64> {
        self.exponents
            .iter()
            .try_fold(1u64, |acc, (&p, &e)| match e {
                Exponent::Infinite => None,
                Exponent::Finite(e) => acc.checked_mul(p.checked_pow(e)?),
            })
    }

    /// Membership: every prime power exactly dividing `n` is covered.
    pub fn contains(&self, n: u64) -> bool {
        n >= 1
            && factorize(n)
                .into_iter()
                .all(|(p, e)| self.exponent(p).covers(e))
    }

    pub fn is_subset(&self, other: &CFSet) -> bool {
        self.exponents.iter().all(|(&p, &e)| match e {
            Exponent::Infinite => other.exponent(p) == Exponent::Infinite,
            Exponent::Finite(f) => other.exponent(p).covers(f),
        })
    }

    /// Smallest CF set containing both (exponentwise max).
    pub fn join(&self, other: &CFSet) -> CFSet {
        let mut exponents = self.exponents.clone();
        for (&p, &e) in &other.exponents {
            let slot = exponents.entry(p).or_insert(e);
            *slot = (*slot).max(e);
        }
        CFSet { exponents }
    }

    /// Intersection (exponentwise min).
    pub fn meet(&self, other: &CFSet) -> CFSet {
        CFSet {
            exponents: self
                .exponents
                .iter()
                .filter_map(|(&p, &e)| {
                    let m = e.min(other.exponent(p));
                    (m != Exponent::Finite(0)).then_some((p, m))
                })
                .collect(),
        }
    }

    /// Parses the `2^inf*3^2` text form; `1` is the trivial set and a bare
    /// prime `p` means `p^1`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text == "1" {
            return Ok(CFSet::trivial());
        }
        let mut entries = Vec::new();
        for term in text.split('*') {
            let term = term.trim();
            let (p, e) = match term.split_once('^') {
                Some((p, e)) => (p, e),
                None => (term, "1"),
            };
            let p: u64 = p
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad prime in term {term:?}")))?;
            let e = match e.trim() {
                "inf" => Exponent::Infinite,
                e => Exponent::Finite(
                    e.parse()
                        .map_err(|_| Error::invalid(format!("bad exponent in term {term:?}")))?,
                ),
            };
            entries.push((p, e));
        }
        CFSet::from_exponents(entries)
    }
}

impl fmt::Display for CFSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponents.is_empty() {
            return f.write_str("1");
        }
        for (i, (p, e)) in self.exponents.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            write!(f, "{p}^{e}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for CFSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CFSet::parse(s)
    }
}

/// A generator of a CF set: a single order, or the family `{b^k : k ≥ 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    Value(u64),
    Powers(u64),
}

impl Generator {
    /// Parses a comma-separated list such as `6,10` or `2^k`.
    pub fn parse_list(text: &str) -> Result<Vec<Generator>> {
        text.split(',')
            .map(|t| {
                let t = t.trim();
                if let Ok(n) = t.parse::<u64>() {
                    return Ok(Generator::Value(n));
                }
                match t.split_once('^') {
                    Some((b, "k")) => b
                        .trim()
                        .parse::<u64>()
                        .map(Generator::Powers)
                        .map_err(|_| Error::invalid(format!("bad family base in {t:?}"))),
                    _ => Err(Error::invalid(format!(
                        "unrecognized generator {t:?}; expected an integer or `b^k`"
                    ))),
                }
            })
            .collect()
    }
}

/// Smallest CF set containing every generator.
pub fn cf_closure(generators: &[Generator]) -> Result<CFSet> {
    if generators.is_empty() {
        return Err(Error::invalid("at least one generator is required"));
    }
    let mut acc = CFSet::trivial();
    for g in generators {
        let part = match *g {
            Generator::Value(0) | Generator::Powers(0) => {
                return Err(Error::invalid("0 is not a cyclic factor order"))
            }
            Generator::Value(n) => CFSet::divisors_of(n)?,
            Generator::Powers(b) => CFSet {
                exponents: factorize(b)
                    .into_iter()
                    .map(|(p, _)| (p, Exponent::Infinite))
                    .collect(),
            },
        };
        acc = acc.join(&part);
    }
    Ok(acc)
}

pub fn cf_contains(cf: &CFSet, n: u64) -> bool {
    cf.contains(n)
}

/// Decides whether an odometer with CF set `a` is a continuous factor of one
/// with CF set `b`.
pub fn cf_subset(a: &CFSet, b: &CFSet) -> bool {
    a.is_subset(b)
}

/// Decides continuous conjugacy of two odometers by their CF sets.
pub fn cf_equal(a: &CFSet, b: &CFSet) -> bool {
    a == b
}
