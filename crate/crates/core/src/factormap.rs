//! The factor map `f_G` onto the dyadic integers, its equivariance, and the
//! fiber / σ-preimage structure of points of the Grigorchuk subshift.
//!
//! `f_G` is normalized so that the fixed point maps to 0. Its first `k` digits
//! are `2^k − M_k`, read off the level-`k` skeleton of the first `2^{k+2}`
//! letters.

use std::collections::{BTreeSet, HashSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::odometer::DyadicInt;
use crate::substitution::{
    grigorchuk_letter_for_valuation, grigorchuk_prefix, Alphabet, SymbolicPrefix,
};
use crate::toeplitz::{
    period_skeleton, skeleton_window, Classification, PeriodSkeleton, MAX_SKELETON_LEVEL,
};

/// Default master prefix length for the reference language.
pub const DEFAULT_MASTER_LEN: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodingResult {
    pub value: DyadicInt,
    pub window_used: usize,
    pub skeleton: PeriodSkeleton,
}

/// First `k` dyadic digits of `f_G` at the point whose prefix is given.
pub fn encode_fg(prefix: &SymbolicPrefix, k: u32) -> Result<EncodingResult> {
    if k == 0 || k > MAX_SKELETON_LEVEL {
        return Err(Error::invalid(format!(
            "precision must be in 1..={MAX_SKELETON_LEVEL}, got {k}"
        )));
    }
    let skeleton = period_skeleton(prefix, k)?;
    Ok(EncodingResult {
        value: DyadicInt::new(skeleton.encoded_value(), k)?,
        window_used: skeleton_window(k) as usize,
        skeleton,
    })
}

fn require_orbit_window(prefix: &SymbolicPrefix, k: u32, shifts: usize, what: &str) -> Result<()> {
    if k == 0 || k > MAX_SKELETON_LEVEL {
        return Err(Error::invalid(format!(
            "precision must be in 1..={MAX_SKELETON_LEVEL}, got {k}"
        )));
    }
    let required = shifts as u128 + skeleton_window(k);
    if required > prefix.len() as u128 {
        return Err(Error::short(
            format!("{what} over {shifts} shifts at precision {k} (shifts + 2^(k+2))"),
            required,
            prefix.len(),
        ));
    }
    Ok(())
}

/// Encodings of `σⁿ` of the prefix for `n = 0..=shifts`, in order.
fn orbit_encodings(prefix: &SymbolicPrefix, k: u32, shifts: usize) -> Vec<Result<u64>> {
    (0..=shifts)
        .into_par_iter()
        .map(|n| {
            let shifted = prefix.shift(n)?;
            period_skeleton(&shifted, k).map(|s| s.encoded_value())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EquivarianceOutcome {
    Holds,
    Violation {
        shift: usize,
        expected: u64,
        found: u64,
    },
    NotInSubshift {
        shift: usize,
        detail: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivarianceReport {
    pub precision: u32,
    pub shifts: usize,
    /// Encodings of `σ⁰, σ¹, …` up to the first failure.
    pub values: Vec<u64>,
    pub outcome: EquivarianceOutcome,
}

impl EquivarianceReport {
    pub fn passed(&self) -> bool {
        self.outcome == EquivarianceOutcome::Holds
    }
}

fn scan_orbit(prefix: &SymbolicPrefix, k: u32, shifts: usize) -> EquivarianceReport {
    let modulus_mask = crate::toeplitz::mask(k);
    let mut values = Vec::with_capacity(shifts + 1);
    let mut outcome = EquivarianceOutcome::Holds;
    for (n, r) in orbit_encodings(prefix, k, shifts).into_iter().enumerate() {
        match r {
            Ok(v) => {
                if let Some(&prev) = values.last() {
                    let expected = (prev + 1) & modulus_mask;
                    if v != expected {
                        outcome = EquivarianceOutcome::Violation {
                            shift: n,
                            expected,
                            found: v,
                        };
                        values.push(v);
                        break;
                    }
                }
                values.push(v);
            }
            Err(e) => {
                outcome = EquivarianceOutcome::NotInSubshift {
                    shift: n,
                    detail: e.to_string(),
                };
                break;
            }
        }
    }
    EquivarianceReport {
        precision: k,
        shifts,
        values,
        outcome,
    }
}

/// Checks `f_G(σ^{n+1}·) = f_G(σⁿ·) + 1 (mod 2^k)` for `n < shifts`.
pub fn verify_equivariance(
    prefix: &SymbolicPrefix,
    k: u32,
    shifts: usize,
) -> Result<EquivarianceReport> {
    require_orbit_window(prefix, k, shifts, "equivariance check")?;
    Ok(scan_orbit(prefix, k, shifts))
}

/// Factors of length `horizon` of a master prefix; shorter factors are
/// answered as prefixes of these.
#[derive(Debug, Clone)]
pub struct Language {
    alphabet: Alphabet,
    horizon: usize,
    master_len: usize,
    words: HashSet<Box<[u8]>>,
}

impl Language {
    pub fn from_master(master: &SymbolicPrefix, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::invalid("language horizon must be positive"));
        }
        if horizon > master.len() {
            return Err(Error::short(
                format!("a language of factors up to length {horizon}"),
                horizon as u128,
                master.len(),
            ));
        }
        let distinct: HashSet<&[u8]> = master.as_bytes().windows(horizon).collect();
        Ok(Language {
            alphabet: master.alphabet().clone(),
            horizon,
            master_len: master.len(),
            words: distinct.into_iter().map(Box::from).collect(),
        })
    }

    /// Language of the Grigorchuk fixed point from a master of `master_len`.
    pub fn grigorchuk(horizon: usize, master_len: usize) -> Result<Self> {
        Self::from_master(&grigorchuk_prefix(master_len)?, horizon)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn master_len(&self) -> usize {
        self.master_len
    }

    /// Number of distinct factors of length `horizon`.
    pub fn complexity(&self) -> usize {
        self.words.len()
    }

    /// Whether every factor of `word` occurs in the master.
    pub fn contains(&self, word: &[u8]) -> bool {
        use std::cmp::Ordering::*;
        match word.len().cmp(&self.horizon) {
            Equal => self.words.contains(word),
            Less => self.words.iter().any(|w| w.starts_with(word)),
            Greater => word.windows(self.horizon).all(|w| self.words.contains(w)),
        }
    }
}

/// Letters `l` such that `l·ω′` stays in the language up to its horizon.
pub fn sigma_preimage_letters(
    prefix: &SymbolicPrefix,
    language: &Language,
) -> Result<BTreeSet<u8>> {
    if prefix.alphabet() != &language.alphabet {
        return Err(Error::invalid(
            "prefix and language use different alphabets",
        ));
    }
    let h = language.horizon;
    if prefix.len() + 1 < h {
        return Err(Error::short(
            format!("σ-preimages at language horizon {h}"),
            h as u128 - 1,
            prefix.len(),
        ));
    }
    let bytes = prefix.as_bytes();
    if !language.contains(bytes) {
        return Ok(BTreeSet::new());
    }
    let mut word = Vec::with_capacity(h);
    Ok(prefix
        .alphabet()
        .letters()
        .iter()
        .copied()
        .filter(|&l| {
            word.clear();
            word.push(l);
            word.extend_from_slice(&bytes[..h - 1]);
            language.contains(&word)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiberClass {
    /// `M_k` keeps growing: the `f_G` fiber is a singleton.
    ToeplitzPoint,
    /// `σⁿω′ = ω*` with `n = distance`; `M_k` is stable from `stable_from`.
    OmegaStarOrbit { distance: usize, stable_from: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiberReport {
    pub classification: FiberClass,
    pub sigma_preimage_letters: BTreeSet<u8>,
    pub skeleton: PeriodSkeleton,
}

pub fn classify_fiber(
    prefix: &SymbolicPrefix,
    depth: u32,
    language: &Language,
) -> Result<FiberReport> {
    let skeleton = period_skeleton(prefix, depth)?;
    let classification = match skeleton.classification {
        Classification::ToeplitzLike => FiberClass::ToeplitzPoint,
        Classification::EventuallyConstant {
            distance,
            stable_from,
        } => FiberClass::OmegaStarOrbit {
            distance,
            stable_from,
        },
    };
    Ok(FiberReport {
        classification,
        sigma_preimage_letters: sigma_preimage_letters(prefix, language)?,
        skeleton,
    })
}

/// Rebuilds a point from its level letters `l_1..l_K` and its encoding.
///
/// With `v` the encoding, position `m` is filled by `l_k` where
/// `k − 1 = d(m + v)`. The one position per window with `m + v ≡ 0 mod 2^K`
/// is not determined by `K` levels and takes `residual` (the `l_∞` letter).
pub fn reconstruct_point(
    alphabet: Alphabet,
    letters: &[u8],
    value: &DyadicInt,
    length: usize,
    residual: Option<u8>,
) -> Result<SymbolicPrefix> {
    let k = value.precision();
    if letters.len() < k as usize {
        return Err(Error::invalid(format!(
            "need {k} level letters, got {}",
            letters.len()
        )));
    }
    let mask = crate::toeplitz::mask(k);
    let data = (1..=length as u64)
        .map(|m| {
            let x = m.wrapping_add(value.value()) & mask;
            if x == 0 {
                residual.ok_or_else(|| {
                    Error::InsufficientPrecision(format!(
                        "position {m} lies on the undetermined column at precision {k}; \
                         supply the residual letter or raise the precision"
                    ))
                })
            } else {
                Ok(letters[x.trailing_zeros() as usize])
            }
        })
        .collect::<Result<Vec<u8>>>()?;
    SymbolicPrefix::new(alphabet, data)
}

/// Point of the Grigorchuk subshift with encoding `value`.
pub fn grigorchuk_point(
    value: &DyadicInt,
    length: usize,
    residual: Option<u8>,
) -> Result<SymbolicPrefix> {
    let letters: Vec<u8> = (0..value.precision())
        .map(grigorchuk_letter_for_valuation)
        .collect();
    reconstruct_point(Alphabet::grigorchuk(), &letters, value, length, residual)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn omega(len: usize) -> SymbolicPrefix {
        grigorchuk_prefix(len).unwrap()
    }

    #[test]
    fn encode_examples() {
        let w = omega(1 << 14);
        assert_eq!(encode_fg(&w, 10).unwrap().value.to_string(), "0000000000");
        let r = encode_fg(&w.shift(5).unwrap(), 8).unwrap();
        assert_eq!(r.value.to_string(), "10100000");
        assert_eq!(r.window_used, 1024);
        assert_eq!(
            encode_fg(&w.shift(1).unwrap(), 3)
                .unwrap()
                .value
                .to_string(),
            "100"
        );
    }

    #[test]
    fn encode_needs_window() {
        let w = omega(1000);
        match encode_fg(&w, 8) {
            Err(Error::InsufficientData { required, .. }) => assert_eq!(required, 1024),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn equivariance_small() {
        let w = omega(64);
        let r = verify_equivariance(&w, 1, 2).unwrap();
        assert!(r.passed());
        assert_eq!(r.values, vec![0, 1, 0]);
        let w = omega(1 << 15);
        let r = verify_equivariance(&w, 10, 4096).unwrap();
        assert!(r.passed());
        assert!(verify_equivariance(&omega(100), 5, 10).is_err());
    }

    #[test]
    fn equivariance_detects_corruption() {
        let w = omega(1 << 12).with_letter(700, b'd').unwrap();
        let r = verify_equivariance(&w, 8, 2000).unwrap();
        assert!(!r.passed());
        // the flipped letter enters the window of σ⁰ already
        assert!(r.values.len() < 2001);
    }

    #[test]
    fn preimage_letters() {
        let lang = Language::grigorchuk(64, 1 << 16).unwrap();
        let w = omega(4096);
        assert_eq!(
            sigma_preimage_letters(&w, &lang).unwrap(),
            BTreeSet::from(*b"bcd")
        );
        assert_eq!(
            sigma_preimage_letters(&w.shift(1).unwrap(), &lang).unwrap(),
            BTreeSet::from(*b"a")
        );
        assert_eq!(
            sigma_preimage_letters(&w.shift(2).unwrap(), &lang).unwrap(),
            BTreeSet::from(*b"c")
        );
        assert!(sigma_preimage_letters(&omega(10), &lang).is_err());
        assert!(Language::grigorchuk(100, 50).is_err());
    }

    #[test]
    fn fiber_classes() {
        let lang = Language::grigorchuk(64, 1 << 16).unwrap();
        let w = omega(1 << 14);
        let r = classify_fiber(&w, 12, &lang).unwrap();
        assert_eq!(
            r.classification,
            FiberClass::OmegaStarOrbit {
                distance: 0,
                stable_from: 1
            }
        );
        let bw = w.prepend(b'b').unwrap();
        let r = classify_fiber(&bw, 12, &lang).unwrap();
        assert_eq!(
            r.classification,
            FiberClass::OmegaStarOrbit {
                distance: 1,
                stable_from: 1
            }
        );
        assert!(r.skeleton.levels.iter().all(|l| l.m == 1));
        assert_eq!(r.sigma_preimage_letters, BTreeSet::from(*b"a"));
    }

    #[test]
    fn generic_point_is_toeplitz() {
        // bits 1010…: M_k = 2^k − v_k keeps picking up new high bits
        let v = DyadicInt::new(0x5555_5555, 32).unwrap();
        let p = grigorchuk_point(&v, 1 << 14, None).unwrap();
        let lang = Language::grigorchuk(64, 1 << 16).unwrap();
        let r = classify_fiber(&p, 12, &lang).unwrap();
        assert_eq!(r.classification, FiberClass::ToeplitzPoint);
        assert_eq!(r.sigma_preimage_letters.len(), 1);
        assert_eq!(encode_fg(&p, 12).unwrap().value, v.truncate(12).unwrap());
    }

    #[test]
    fn reconstruction_round_trip() {
        let w = omega(1 << 12);
        for n in [0usize, 1, 5, 77] {
            let v = DyadicInt::new(n as u64, 20).unwrap();
            let p = grigorchuk_point(&v, 2000, None).unwrap();
            assert_eq!(p.as_bytes(), &w.as_bytes()[n..n + 2000]);
        }
        // ω* itself needs its residual letter at precision 10
        let zero = DyadicInt::zero(10).unwrap();
        assert!(grigorchuk_point(&zero, 2000, None).is_err());
        let p = grigorchuk_point(&zero, 2000, Some(b'c')).unwrap();
        assert_eq!(p.get(1024), Some(b'c'));
    }
}
