//! Generalized odometers on `Z_{n1} × Z_{n2} × …`, their cyclic-factor sets,
//! and the binary odometer on the dyadic integers.

mod cf;
mod dyadic;

use std::fmt;

pub use cf::{
    cf_closure, cf_contains, cf_equal, cf_subset, factorize, is_prime, CFSet, Exponent, Generator,
};
pub use dyadic::DyadicInt;

use crate::error::{Error, Result};

/// How the base sequence continues after the listed prefix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Tail {
    /// The odometer is exactly the listed product (a cyclic permutation).
    Finite,
    /// The block repeats forever after the prefix.
    Repeat(Vec<u64>),
}

/// Base sequence of an odometer: a finite prefix plus a tail descriptor.
///
/// Text form: comma-separated bases; a trailing `,...` makes the last base
/// (or the last bracketed group `[b1,b2]`) repeat forever. `2,...` is the
/// binary odometer, `9,2,...` is `9,2,2,2,…`, `[2,3],...` alternates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OdometerSpec {
    prefix: Vec<u64>,
    tail: Tail,
}

impl OdometerSpec {
    pub fn new(prefix: Vec<u64>, tail: Tail) -> Result<Self> {
        let all = prefix.iter().chain(match &tail {
            Tail::Finite => [].iter(),
            Tail::Repeat(b) => b.iter(),
        });
        if all.clone().any(|&n| n == 0) {
            return Err(Error::invalid("odometer bases must be positive"));
        }
        let mut prefix: Vec<u64> = prefix.into_iter().filter(|&n| n > 1).collect();
        let tail = match tail {
            Tail::Repeat(block) => {
                let block: Vec<u64> = block.into_iter().filter(|&n| n > 1).collect();
                if block.is_empty() {
                    Tail::Finite
                } else {
                    while prefix.ends_with(&block) {
                        prefix.truncate(prefix.len() - block.len());
                    }
                    Tail::Repeat(block)
                }
            }
            Tail::Finite => Tail::Finite,
        };
        Ok(OdometerSpec { prefix, tail })
    }

    pub fn finite(bases: Vec<u64>) -> Result<Self> {
        Self::new(bases, Tail::Finite)
    }

    /// `Z_2 × Z_2 × …`.
    pub fn binary() -> Self {
        OdometerSpec {
            prefix: Vec::new(),
            tail: Tail::Repeat(vec![2]),
        }
    }

    /// The odometer of an lcm chain: for members `n_1, n_2, …` with
    /// `m_k = lcm(n_1, …, n_k)`, bases `m_1, m_2/m_1, m_3/m_2, …`.
    pub fn from_lcm_chain(members: &[u64]) -> Result<Self> {
        let mut bases = Vec::with_capacity(members.len());
        let mut m = 1u64;
        for &n in members {
            if n == 0 {
                return Err(Error::invalid("0 is not a cyclic factor order"));
            }
            let next = lcm(m, n).ok_or_else(|| Error::invalid("lcm chain overflows u64"))?;
            bases.push(next / m);
            m = next;
        }
        Self::finite(bases)
    }

    pub fn prefix(&self) -> &[u64] {
        &self.prefix
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self.tail, Tail::Repeat(_))
    }

    /// Base of the 0-based coordinate `i`.
    pub fn base_at(&self, i: usize) -> Option<u64> {
        match (self.prefix.get(i), &self.tail) {
            (Some(&n), _) => Some(n),
            (None, Tail::Finite) => None,
            (None, Tail::Repeat(b)) => Some(b[(i - self.prefix.len()) % b.len()]),
        }
    }

    /// Number of coordinates of a finite odometer.
    pub fn finite_len(&self) -> Option<usize> {
        (!self.is_infinite()).then_some(self.prefix.len())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let num = |t: &str| {
            t.trim()
                .parse::<u64>()
                .map_err(|_| Error::invalid(format!("bad odometer base {t:?}")))
        };
        let list = |t: &str| -> Result<Vec<u64>> {
            let t = t.trim().trim_end_matches(',');
            if t.is_empty() {
                Ok(Vec::new())
            } else {
                t.split(',').map(num).collect()
            }
        };
        match text.strip_suffix("...") {
            None => Self::finite(list(text)?),
            Some(head) => {
                let head = head.trim_end().strip_suffix(',').ok_or_else(|| {
                    Error::invalid("the tail marker must follow a comma: `…,...`")
                })?;
                let (prefix, block) = match head.strip_suffix(']') {
                    Some(h) => {
                        let open = h
                            .rfind('[')
                            .ok_or_else(|| Error::invalid("unbalanced `]` in odometer spec"))?;
                        (list(&h[..open])?, list(&h[open + 1..])?)
                    }
                    None => match head.rsplit_once(',') {
                        Some((p, last)) => (list(p)?, vec![num(last)?]),
                        None => (Vec::new(), vec![num(head)?]),
                    },
                };
                if block.is_empty() {
                    return Err(Error::invalid("empty repeating block"));
                }
                Self::new(prefix, Tail::Repeat(block))
            }
        }
    }
}

impl fmt::Display for OdometerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[u64]| v.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        match &self.tail {
            Tail::Finite if self.prefix.is_empty() => f.write_str("1"),
            Tail::Finite => f.write_str(&join(&self.prefix)),
            Tail::Repeat(block) => {
                if !self.prefix.is_empty() {
                    write!(f, "{},", join(&self.prefix))?;
                }
                if block.len() == 1 {
                    write!(f, "{},...", block[0])
                } else {
                    write!(f, "[{}],...", join(block))
                }
            }
        }
    }
}

impl std::str::FromStr for OdometerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OdometerSpec::parse(s)
    }
}

/// Mixed-radix digits `(m_1, …, m_J)`, least significant first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OdometerState {
    pub digits: Vec<u64>,
}

/// Result of one odometer step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub state: OdometerState,
    /// A carry left the last digit. For a finite odometer this is the exact
    /// wrap of the cycle; for an infinite one it marks the dropped carry of
    /// the truncation.
    pub carry_out: bool,
    pub truncated: bool,
}

impl OdometerState {
    pub fn zero(len: usize) -> Self {
        OdometerState {
            digits: vec![0; len],
        }
    }

    /// Binary digits of a dyadic integer.
    pub fn from_dyadic(x: &DyadicInt) -> Self {
        OdometerState {
            digits: x.bits().into_iter().map(u64::from).collect(),
        }
    }

    /// Reads a binary state back as a dyadic integer.
    pub fn to_dyadic(&self) -> Result<DyadicInt> {
        let bits = self
            .digits
            .iter()
            .map(|&d| match d {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(Error::invalid("digit outside {0,1}")),
            })
            .collect::<Result<Vec<_>>>()?;
        DyadicInt::from_bits(&bits)
    }

    fn check(&self, spec: &OdometerSpec) -> Result<()> {
        match spec.finite_len() {
            Some(n) if n != self.digits.len() => {
                return Err(Error::invalid(format!(
                    "state has {} digits, the odometer has {n} coordinates",
                    self.digits.len()
                )))
            }
            None if self.digits.is_empty() => {
                return Err(Error::invalid(
                    "a truncated state of an infinite odometer needs at least one digit",
                ))
            }
            _ => {}
        }
        for (i, &d) in self.digits.iter().enumerate() {
            let n = spec.base_at(i).expect("length checked");
            if d >= n {
                return Err(Error::invalid(format!(
                    "digit {d} at coordinate {} is not below base {n}",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

/// Add one with carry in mixed radix.
pub fn odometer_step(state: &OdometerState, spec: &OdometerSpec) -> Result<Step> {
    state.check(spec)?;
    let mut digits = state.digits.clone();
    let mut carry = true;
    for (i, d) in digits.iter_mut().enumerate() {
        let n = spec.base_at(i).expect("checked");
        *d += 1;
        if *d == n {
            *d = 0;
        } else {
            carry = false;
            break;
        }
    }
    Ok(Step {
        state: OdometerState { digits },
        carry_out: carry,
        truncated: spec.is_infinite(),
    })
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> Option<u64> {
    (a / gcd(a, b)).checked_mul(b)
}

/// CF set of an odometer: the divisors of `sup_k n_1 ⋯ n_k`.
pub fn cf_of_odometer(spec: &OdometerSpec) -> CFSet {
    let mut exps: std::collections::BTreeMap<u64, Exponent> = Default::default();
    for &n in &spec.prefix {
        for (p, e) in factorize(n) {
            let slot = exps.entry(p).or_insert(Exponent::Finite(0));
            if let Exponent::Finite(f) = *slot {
                *slot = Exponent::Finite(f + e);
            }
        }
    }
    if let Tail::Repeat(block) = &spec.tail {
        for &n in block {
            for (p, _) in factorize(n) {
                exps.insert(p, Exponent::Infinite);
            }
        }
    }
    CFSet::from_exponents(exps).expect("factorize yields primes")
}

/// An odometer whose CF set is `cf`.
///
/// Finite sets give the cyclic odometer on `Z_N`, `N` the largest member.
/// Otherwise the lcm chain `m_k = F·P^k` is used, where `F` collects the
/// finite prime powers and `P` the primes of infinite exponent; its bases
/// are `F·P, P, P, …`.
pub fn odometer_from_cf(cf: &CFSet) -> Result<OdometerSpec> {
    let mut finite = 1u64;
    let mut radical = 1u64;
    for (&p, &e) in cf.exponents() {
        let overflow = || Error::invalid(format!("CF set {cf} does not fit in 64-bit bases"));
        match e {
            Exponent::Finite(e) => {
                finite = finite
                    .checked_mul(p.checked_pow(e).ok_or_else(overflow)?)
                    .ok_or_else(overflow)?
            }
            Exponent::Infinite => radical = radical.checked_mul(p).ok_or_else(overflow)?,
        }
    }
    if radical == 1 {
        return OdometerSpec::finite(vec![finite]);
    }
    let first = finite
        .checked_mul(radical)
        .ok_or_else(|| Error::invalid("first base overflows u64"))?;
    OdometerSpec::new(vec![first], Tail::Repeat(vec![radical]))
}

/// The maximal odometer factor of a system with cyclic-factor set `cf`.
pub fn maximal_odometer_factor(cf: &CFSet) -> Result<OdometerSpec> {
    odometer_from_cf(cf)
}
