//! Partial periods, essential partial periods, and the dyadic period skeleton
//! `(M_k, l_k)` of a finite prefix.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::substitution::SymbolicPrefix;

/// How a partial period is certified from a finite prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Four-term test `ω_n = ω_{n+p} = ω_{n+2p} = ω_{n+3p}`. Conclusive only
    /// for points of the Grigorchuk subshift, where four agreeing terms force
    /// the whole progression to agree.
    Rigid,
    /// Every term of the progression inside the prefix is compared. Valid for
    /// arbitrary input but only as strong as the prefix is long.
    Heuristic,
}

impl Mode {
    /// Smallest number of progression steps `k` that must fit in the prefix.
    fn min_steps(self) -> usize {
        match self {
            Mode::Rigid => 3,
            Mode::Heuristic => 1,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Rigid => "rigid",
            Mode::Heuristic => "heuristic",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rigid" => Ok(Mode::Rigid),
            "heuristic" => Ok(Mode::Heuristic),
            _ => Err(Error::invalid(format!("unknown mode {s:?}"))),
        }
    }
}

/// Evidence that `ω_n = ω_{n+kp}` for `k = 1..=verified_horizon`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartialPeriodCertificate {
    pub position: usize,
    pub period: usize,
    pub verified_horizon: usize,
    pub mode: Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeriodCheck {
    Certified(PartialPeriodCertificate),
    /// `ω_{n + step·p} ≠ ω_n`.
    Refuted {
        position: usize,
        period: usize,
        step: usize,
    },
}

impl PeriodCheck {
    pub fn is_certified(&self) -> bool {
        matches!(self, PeriodCheck::Certified(_))
    }
}

/// Raw progression test on 0-based storage. `n` is 1-based.
/// Returns `Ok(horizon)` or `Err(step)` of the first disagreement.
fn progression(bytes: &[u8], n: usize, p: usize, mode: Mode) -> std::result::Result<usize, usize> {
    let first = bytes[n - 1];
    let horizon = match mode {
        Mode::Rigid => 3,
        Mode::Heuristic => (bytes.len() - n) / p,
    };
    for step in 1..=horizon {
        if bytes[n - 1 + step * p] != first {
            return Err(step);
        }
    }
    Ok(horizon)
}

fn window_fits(len: usize, n: usize, p: usize, mode: Mode) -> bool {
    p.checked_mul(mode.min_steps())
        .and_then(|x| x.checked_add(n))
        .is_some_and(|end| end <= len)
}

/// Tests whether `p` is a partial period at position `n`.
pub fn is_partially_periodic_at(
    prefix: &SymbolicPrefix,
    n: usize,
    p: usize,
    mode: Mode,
) -> Result<PeriodCheck> {
    if n == 0 || p == 0 {
        return Err(Error::invalid(
            "position and period are 1-based and positive",
        ));
    }
    if !window_fits(prefix.len(), n, p, mode) {
        return Err(Error::short(
            format!("{mode} period test at n={n}, p={p}"),
            n as u128 + mode.min_steps() as u128 * p as u128,
            prefix.len(),
        ));
    }
    Ok(match progression(prefix.as_bytes(), n, p, mode) {
        Ok(verified_horizon) => PeriodCheck::Certified(PartialPeriodCertificate {
            position: n,
            period: p,
            verified_horizon,
            mode,
        }),
        Err(step) => PeriodCheck::Refuted {
            position: n,
            period: p,
            step,
        },
    })
}

fn smallest_within(bytes: &[u8], n: usize, max_p: usize, mode: Mode) -> Option<usize> {
    (1..=max_p)
        .take_while(|&p| window_fits(bytes.len(), n, p, mode))
        .find(|&p| progression(bytes, n, p, mode).is_ok())
}

/// Least period certifiable at position `n`.
pub fn smallest_partial_period(prefix: &SymbolicPrefix, n: usize, mode: Mode) -> Result<usize> {
    if n == 0 || n > prefix.len() {
        return Err(Error::invalid(format!(
            "position {n} outside 1..={}",
            prefix.len()
        )));
    }
    smallest_within(prefix.as_bytes(), n, usize::MAX, mode).ok_or_else(|| {
        Error::short(
            format!("certifying a partial period at n={n} ({mode})"),
            // the next untestable period is (len - n)/steps + 1
            n as u128
                + mode.min_steps() as u128 * (((prefix.len() - n) / mode.min_steps()) as u128 + 1),
            prefix.len(),
        )
    })
}

/// Essential partial periods up to a horizon, each with its first witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EPSet {
    pub periods: BTreeSet<usize>,
    pub horizon: usize,
    /// period → smallest position whose least period is exactly that period
    pub witnesses: BTreeMap<usize, usize>,
}

impl EPSet {
    /// True when the periods are exactly `{2, 4, …, 2^j}` with `2^j` the
    /// largest power of two within the horizon. This is the pattern that,
    /// extrapolated, means "all powers of two".
    pub fn is_dyadic_ladder(&self) -> bool {
        if self.horizon < 2 {
            return false;
        }
        let top = usize::BITS - 1 - self.horizon.leading_zeros();
        let expected: BTreeSet<usize> = (1..=top).map(|j| 1usize << j).collect();
        self.periods == expected
    }
}

/// Essential partial periods `p ≤ horizon`.
///
/// Every position `n` with `n + 3·horizon ≤ len` is scanned, so each candidate
/// period can be tested at each scanned position.
pub fn essential_periods(prefix: &SymbolicPrefix, horizon: usize, mode: Mode) -> Result<EPSet> {
    if horizon == 0 {
        return Err(Error::invalid("horizon must be positive"));
    }
    let required = horizon as u128 * 4;
    if required > prefix.len() as u128 {
        return Err(Error::short(
            format!("essential periods up to {horizon}"),
            required,
            prefix.len(),
        ));
    }
    let bytes = prefix.as_bytes();
    let last = bytes.len() - 3 * horizon;
    let found: Vec<(usize, usize)> = (1..=last)
        .into_par_iter()
        .filter_map(|n| smallest_within(bytes, n, horizon, mode).map(|p| (p, n)))
        .collect();
    let mut witnesses = BTreeMap::new();
    for (p, n) in found {
        witnesses.entry(p).or_insert(n);
    }
    Ok(EPSet {
        periods: witnesses.keys().copied().collect(),
        horizon,
        witnesses,
    })
}

/// Whether the level-`k` data says the sequence eventually sits on the
/// backward orbit of `ω*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// `M_k mod 2^k` keeps changing through the top levels of the window.
    ToeplitzLike,
    /// `M_k mod 2^k` is constant from level `stable_from` up to `K`; the
    /// constant value `distance` is the `n` with `σⁿω′ = ω*` (0 means the
    /// prefix is `ω*` itself).
    EventuallyConstant { distance: usize, stable_from: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SkeletonLevel {
    pub level: u32,
    /// The unique residue `1 ≤ M_k ≤ 2^k` whose column is not constant.
    pub m: usize,
    /// The constant letter of the column that became constant at this level.
    pub letter: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodSkeleton {
    pub levels: Vec<SkeletonLevel>,
    pub classification: Classification,
}

impl PeriodSkeleton {
    pub fn depth(&self) -> u32 {
        self.levels.len() as u32
    }

    /// `M_k` for `1 ≤ k ≤ depth`.
    pub fn m(&self, k: u32) -> Option<usize> {
        (k >= 1).then(|| self.levels.get(k as usize - 1).map(|l| l.m))?
    }

    /// `l_1, …, l_K`.
    pub fn letters(&self) -> Vec<u8> {
        self.levels.iter().map(|l| l.letter).collect()
    }

    /// `2^K − M_K`, the first `K` dyadic digits of the factor map.
    pub fn encoded_value(&self) -> u64 {
        let top = self.levels.last().expect("skeleton has at least one level");
        ((1u64 << top.level) - top.m as u64) & mask(top.level)
    }
}

pub(crate) fn mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// Largest level the skeleton accepts; `2^{K+2}` must stay addressable.
pub const MAX_SKELETON_LEVEL: u32 = 40;

/// Window length `2^{K+2}` that determines the first `K` levels.
pub fn skeleton_window(k: u32) -> u128 {
    1u128 << (k + 2)
}

/// Decides the stabilization of `N_k = M_k mod 2^k` over `k = 1..=K`.
///
/// The prefix counts as eventually constant when `N_k` is constant on a strict
/// majority of the levels, i.e. from some `j` with `2(K − j + 1) > K`.
pub fn classify_levels(levels: &[SkeletonLevel]) -> Classification {
    let depth = levels.len() as u32;
    let residue = |l: &SkeletonLevel| l.m & (mask(l.level) as usize);
    let top = residue(levels.last().expect("nonempty"));
    let mut stable_from = depth;
    for l in levels.iter().rev() {
        if residue(l) != top {
            break;
        }
        stable_from = l.level;
    }
    if 2 * (depth - stable_from + 1) > depth {
        Classification::EventuallyConstant {
            distance: top,
            stable_from,
        }
    } else {
        Classification::ToeplitzLike
    }
}

/// Level-by-level period skeleton of a prefix of a point of a subshift whose
/// essential periods are the powers of two.
///
/// At level `k` every residue column `r, r+2^k, r+2·2^k, r+3·2^k` inside the
/// window `[1, 2^{k+2}]` is tested; exactly one must fail.
pub fn period_skeleton(prefix: &SymbolicPrefix, depth: u32) -> Result<PeriodSkeleton> {
    if depth == 0 || depth > MAX_SKELETON_LEVEL {
        return Err(Error::invalid(format!(
            "skeleton depth must be in 1..={MAX_SKELETON_LEVEL}, got {depth}"
        )));
    }
    let required = skeleton_window(depth);
    if required > prefix.len() as u128 {
        return Err(Error::short(
            format!("a depth-{depth} skeleton (window 2^(K+2))"),
            required,
            prefix.len(),
        ));
    }
    let bytes = prefix.as_bytes();
    let mut levels: Vec<SkeletonLevel> = Vec::with_capacity(depth as usize);
    for k in 1..=depth {
        let modulus = 1usize << k;
        let mut broken =
            (1..=modulus).filter(|&r| progression(bytes, r, modulus, Mode::Rigid).is_err());
        let m = match (broken.next(), broken.next()) {
            (Some(m), None) => m,
            (None, _) => {
                return Err(Error::NotInSubshift(format!(
                    "level {k}: every residue column mod {modulus} is constant on [1, {}]",
                    4 * modulus
                )))
            }
            (Some(a), Some(b)) => {
                return Err(Error::NotInSubshift(format!(
                    "level {k}: columns {a} and {b} mod {modulus} are both non-constant"
                )))
            }
        };
        // the column that stopped being free at this level
        let freed = match levels.last() {
            None => 3 - m,
            Some(prev) => {
                if (m - 1) % (modulus / 2) != (prev.m - 1) % (modulus / 2) {
                    return Err(Error::NotInSubshift(format!(
                        "level {k}: M_k = {m} is not congruent to M_(k-1) = {} mod {}",
                        prev.m,
                        modulus / 2
                    )));
                }
                if m > modulus / 2 {
                    m - modulus / 2
                } else {
                    m + modulus / 2
                }
            }
        };
        levels.push(SkeletonLevel {
            level: k,
            m,
            letter: bytes[freed - 1],
        });
    }
    Ok(PeriodSkeleton {
        classification: classify_levels(&levels),
        levels,
    })
}
