//! Cylinder frequencies, the invariant measure of the Grigorchuk subshift,
//! eigenfunction residues, and exponential sums along an orbit.
//!
//! Counts are exact integers. Exponential sums are `f64` with compensated
//! summation over fixed-size chunks combined in index order, so results do
//! not depend on how rayon schedules the chunks.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_rational::Ratio;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::factormap::{verify_equivariance, EquivarianceOutcome};
use crate::substitution::{grigorchuk_letter_for_valuation, Alphabet, SymbolicPrefix};

/// Largest `depth_bound` accepted by [`invariant_measure_cylinder`].
pub const MAX_DEPTH_BOUND: u32 = 20;

const SUM_CHUNK: usize = 1 << 14;

/// A finite word, viewed as the cylinder of sequences starting with it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CylinderWord {
    word: Vec<u8>,
}

impl CylinderWord {
    pub fn new(alphabet: &Alphabet, word: &[u8]) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::invalid("a cylinder word must be nonempty"));
        }
        if let Some(&l) = word.iter().find(|&&l| !alphabet.contains(l)) {
            return Err(Error::invalid(format!(
                "letter {:?} is not in the alphabet {alphabet}",
                l as char
            )));
        }
        Ok(CylinderWord {
            word: word.to_vec(),
        })
    }

    /// A word over the Grigorchuk alphabet.
    pub fn grigorchuk(word: &str) -> Result<Self> {
        Self::new(&Alphabet::grigorchuk(), word.as_bytes())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.word
    }

    pub fn depth(&self) -> usize {
        self.word.len()
    }
}

impl std::fmt::Display for CylinderWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&String::from_utf8_lossy(&self.word))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyEstimate {
    pub word: CylinderWord,
    pub count: u64,
    pub window: u64,
    pub frequency: Ratio<u64>,
}

impl FrequencyEstimate {
    pub fn as_f64(&self) -> f64 {
        self.count as f64 / self.window as f64
    }
}

fn require_window(prefix: &SymbolicPrefix, depth: usize, window: usize) -> Result<()> {
    if window == 0 {
        return Err(Error::invalid("window must be positive"));
    }
    let required = window as u128 + depth as u128 - 1;
    if required > prefix.len() as u128 {
        return Err(Error::short(
            format!("a window of {window} start positions for a depth-{depth} word"),
            required,
            prefix.len(),
        ));
    }
    Ok(())
}

/// Number of start positions `1..=window` where `w` occurs.
pub fn cylinder_frequency(
    prefix: &SymbolicPrefix,
    w: &CylinderWord,
    window: usize,
) -> Result<FrequencyEstimate> {
    require_window(prefix, w.depth(), window)?;
    let span = &prefix.as_bytes()[..window + w.depth() - 1];
    let count = span
        .par_windows(w.depth())
        .filter(|x| *x == w.as_bytes())
        .count() as u64;
    Ok(FrequencyEstimate {
        word: w.clone(),
        count,
        window: window as u64,
        frequency: Ratio::new(count, window as u64),
    })
}

/// Weight, in sevenths, that a position of dyadic valuation at least `floor`
/// carries `letter`. Valuations `floor + t` occur with relative density
/// `2^{-(t+1)}` and the letter depends on the valuation mod 3, so the classes
/// carry 4/7, 2/7, 1/7 in order of first appearance.
fn deep_position_sevenths(letter: u8, floor: u32) -> u64 {
    (0..3)
        .find(|&t| grigorchuk_letter_for_valuation(floor + t) == letter)
        .map_or(0, |t| 4 >> t)
}

fn measure_at_resolution(w: &[u8], resolution: u32) -> Ratio<u64> {
    let modulus = 1u64 << resolution;
    let total: u64 = (1..=modulus)
        .into_par_iter()
        .map(|r| {
            let mut weight = 7;
            for (i, &l) in w.iter().enumerate() {
                let x = (r + i as u64) & (modulus - 1);
                if x == 0 {
                    weight = weight * deep_position_sevenths(l, resolution) / 7;
                } else if grigorchuk_letter_for_valuation(x.trailing_zeros()) != l {
                    return 0;
                }
                if weight == 0 {
                    return 0;
                }
            }
            weight
        })
        .sum();
    Ratio::new(total, 7 * modulus)
}

/// Exact `μ([w])` for the Grigorchuk subshift, as the density of start
/// positions of `w` in the fixed point.
///
/// Start positions are classified modulo `2^{depth_bound+2}`. The word spans
/// at most one position divisible by the modulus; its letter is weighted by
/// the exact tail density of the deeper valuations. The result is recomputed
/// one level finer and must agree.
pub fn invariant_measure_cylinder(w: &CylinderWord, depth_bound: u32) -> Result<Ratio<u64>> {
    if w.depth() > depth_bound as usize {
        return Err(Error::invalid(format!(
            "word depth {} exceeds depth bound {depth_bound}",
            w.depth()
        )));
    }
    if depth_bound > MAX_DEPTH_BOUND {
        return Err(Error::invalid(format!(
            "depth bound {depth_bound} exceeds the maximum {MAX_DEPTH_BOUND}"
        )));
    }
    let alphabet = Alphabet::grigorchuk();
    if w.as_bytes().iter().any(|&l| !alphabet.contains(l)) {
        return Err(Error::invalid(
            "the invariant measure is defined on {a,b,c,d}",
        ));
    }
    let resolution = depth_bound + 2;
    let coarse = measure_at_resolution(w.as_bytes(), resolution);
    let fine = measure_at_resolution(w.as_bytes(), resolution + 1);
    if coarse != fine {
        return Err(Error::InsufficientPrecision(format!(
            "μ([{w}]) is {coarse} at resolution 2^{resolution} but {fine} at 2^{}; raise the depth bound",
            resolution + 1
        )));
    }
    Ok(coarse)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformityRow {
    pub word: CylinderWord,
    pub count: u64,
    pub empirical: f64,
    pub exact: Ratio<u64>,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformityReport {
    pub depth: usize,
    pub window: usize,
    pub rows: Vec<UniformityRow>,
    /// Index into `rows` of the largest deviation.
    pub worst: usize,
    /// For each length `1..=depth`, `1 − Σ μ` over the observed words.
    pub unobserved_mass: Vec<Ratio<u64>>,
}

impl UniformityReport {
    pub fn max_deviation(&self) -> f64 {
        self.rows[self.worst].deviation
    }
}

/// Empirical frequency of every word of length `≤ depth` seen in the window,
/// against the exact invariant measure.
pub fn uniform_distribution_report(
    prefix: &SymbolicPrefix,
    depth: usize,
    window: usize,
) -> Result<UniformityReport> {
    if depth == 0 || depth > MAX_DEPTH_BOUND as usize {
        return Err(Error::invalid(format!(
            "depth must be in 1..={MAX_DEPTH_BOUND}"
        )));
    }
    require_window(prefix, depth, window)?;
    let bytes = prefix.as_bytes();
    let mut rows = Vec::new();
    let mut unobserved_mass = Vec::new();
    for len in 1..=depth {
        let mut counts: BTreeMap<&[u8], u64> = BTreeMap::new();
        for w in bytes[..window + len - 1].windows(len) {
            *counts.entry(w).or_default() += 1;
        }
        let mut mass = Ratio::new(0u64, 1);
        for (w, count) in counts {
            let word = CylinderWord::new(prefix.alphabet(), w)?;
            let exact = invariant_measure_cylinder(&word, depth as u32)?;
            mass += exact;
            let empirical = count as f64 / window as f64;
            rows.push(UniformityRow {
                deviation: (empirical - ratio_f64(exact)).abs(),
                word,
                count,
                empirical,
                exact,
            });
        }
        unobserved_mass.push(if mass >= Ratio::from_integer(1) {
            Ratio::new(0, 1)
        } else {
            Ratio::from_integer(1) - mass
        });
    }
    let worst = rows
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.deviation.total_cmp(&b.1.deviation))
        .map(|(i, _)| i)
        .expect("window is nonempty");
    Ok(UniformityReport {
        depth,
        window,
        rows,
        worst,
        unobserved_mass,
    })
}

pub fn ratio_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// `max_N N·|freq_N(w) − μ([w])|` over the given windows: the empirical
/// constant in a `C/N` convergence rate.
pub fn convergence_constant(
    prefix: &SymbolicPrefix,
    w: &CylinderWord,
    windows: &[usize],
) -> Result<f64> {
    let mu = ratio_f64(invariant_measure_cylinder(w, w.depth().max(1) as u32)?);
    windows.iter().try_fold(0.0f64, |acc, &n| {
        let f = cylinder_frequency(prefix, w, n)?;
        Ok(acc.max(n as f64 * (f.as_f64() - mu).abs()))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenfunctionReport {
    pub precision: u32,
    pub window: usize,
    /// `rₙ = f_G(σⁿω) mod 2^k`; `φ(σⁿω) = exp(2πi·rₙ/2^k)`.
    pub residues: Vec<u64>,
    pub failure: Option<EigenFailure>,
    /// Largest `|φ(σ^{n+1}ω) − λ·φ(σⁿω)|` over checked steps.
    pub max_float_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EigenFailure {
    pub position: usize,
    pub detail: String,
}

impl EigenfunctionReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// `exp(2πi·r/2^k)`.
pub fn root_of_unity(r: u64, k: u32) -> Complex64 {
    let angle = std::f64::consts::TAU * (r as f64) / (2f64).powi(k as i32);
    Complex64::from_polar(1.0, angle)
}

/// Checks `φ∘σ = e^{2πi/2^k}·φ` along the orbit for `n < window`, as the
/// integer identity `r_{n+1} = rₙ + 1 mod 2^k`.
pub fn eigenfunction_check(
    prefix: &SymbolicPrefix,
    k: u32,
    window: usize,
) -> Result<EigenfunctionReport> {
    let report = verify_equivariance(prefix, k, window)?;
    let lambda = root_of_unity(1, k);
    let max_float_defect = report
        .values
        .windows(2)
        .map(|w| (root_of_unity(w[1], k) - lambda * root_of_unity(w[0], k)).norm())
        .fold(0.0, f64::max);
    let failure = match report.outcome {
        EquivarianceOutcome::Holds => None,
        EquivarianceOutcome::Violation {
            shift,
            expected,
            found,
        } => Some(EigenFailure {
            position: shift,
            detail: format!("residue {found}, expected {expected}"),
        }),
        EquivarianceOutcome::NotInSubshift { shift, detail } => Some(EigenFailure {
            position: shift,
            detail,
        }),
    };
    Ok(EigenfunctionReport {
        precision: k,
        window,
        residues: report.values,
        failure,
        max_float_defect,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSample {
    pub theta: Ratio<u64>,
    pub word: CylinderWord,
    pub window: usize,
    pub magnitude: f64,
}

#[derive(Clone, Copy, Default)]
struct Kahan {
    sum: Complex64,
    comp: Complex64,
}

impl Kahan {
    fn add(&mut self, x: Complex64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }
}

/// `|(1/N) Σ_{n<N} e^{−2πiθn} 1_w(σⁿω)|` for each `θ`.
///
/// The phase `θn` is reduced exactly as `(p·n mod q)/q` before any floating
/// point is involved.
pub fn spectral_scan(
    prefix: &SymbolicPrefix,
    thetas: &[Ratio<u64>],
    w: &CylinderWord,
    window: usize,
) -> Result<Vec<SpectralSample>> {
    require_window(prefix, w.depth(), window)?;
    let hits: Vec<u64> = prefix.as_bytes()[..window + w.depth() - 1]
        .windows(w.depth())
        .enumerate()
        .filter(|(_, x)| *x == w.as_bytes())
        .map(|(n, _)| n as u64)
        .collect();
    thetas
        .iter()
        .map(|&theta| {
            if theta >= Ratio::from_integer(1) {
                return Err(Error::invalid(format!("θ = {theta} is outside [0, 1)")));
            }
            let (p, q) = (*theta.numer() as u128, *theta.denom() as u128);
            let phase = |n: u64| {
                let j = (p * n as u128) % q;
                Complex64::from_polar(1.0, -std::f64::consts::TAU * (j as f64) / (q as f64))
            };
            let partials: Vec<Kahan> = hits
                .par_chunks(SUM_CHUNK)
                .map(|chunk| {
                    let mut k = Kahan::default();
                    for &n in chunk {
                        k.add(phase(n));
                    }
                    k
                })
                .collect();
            let mut total = Kahan::default();
            for part in partials {
                total.add(part.sum);
                total.add(-part.comp);
            }
            Ok(SpectralSample {
                theta,
                word: w.clone(),
                window,
                magnitude: total.sum.norm() / window as f64,
            })
        })
        .collect()
}
