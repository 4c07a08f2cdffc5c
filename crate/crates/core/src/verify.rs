//! The acceptance suite as a library routine, so the CLI can run it.
//!
//! Each criterion checks library output against an independent computation
//! (closed-form letters, direct counting, brute-force orbits).

use std::collections::BTreeSet;
use std::fmt;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ergodic::{
    cylinder_frequency, eigenfunction_check, invariant_measure_cylinder, ratio_f64, spectral_scan,
    CylinderWord,
};
use crate::error::{Error, Result};
use crate::factormap::{encode_fg, sigma_preimage_letters, verify_equivariance, Language};
use crate::odometer::{
    cf_closure, cf_of_odometer, odometer_from_cf, odometer_step, CFSet, Exponent, Generator,
    OdometerSpec, OdometerState,
};
use crate::substitution::{grigorchuk_letter, grigorchuk_prefix, Substitution};
use crate::toeplitz::{
    essential_periods, is_partially_periodic_at, period_skeleton, Mode, PeriodCheck,
};

/// Fixed seed for the sampled criteria.
pub const SEED: u64 = 0x0d05_4f17;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    /// Reduced sizes, same tolerances. Runs in about a second.
    Quick,
    /// The stated sizes.
    Full,
}

impl std::str::FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            _ => Err(Error::invalid(format!(
                "unknown level {s:?}; expected quick or full"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} criterion {}: {} ({}) [{:.2?}]",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed
        )
    }
}

pub const NAMES: [&str; 10] = [
    "closed-form agreement",
    "essential periods",
    "four-term rigidity",
    "skeleton of the fixed point",
    "equivariance",
    "fiber structure",
    "letter measure",
    "spectrum",
    "eigenfunction equivariance",
    "odometer and CF algebra",
];

struct Sizes {
    prefix: usize,
    ep_prefix: usize,
    ep_horizon: usize,
    rigidity_samples: usize,
    skeleton_depth: u32,
    equivariance_k: u32,
    preimage_shifts: usize,
    spectrum_windows: [usize; 3],
    eigen_shifts: usize,
    cf_samples: usize,
}

impl Sizes {
    fn of(level: Level) -> Self {
        match level {
            Level::Full => Sizes {
                prefix: 1 << 20,
                ep_prefix: 1 << 18,
                ep_horizon: 1 << 13,
                rigidity_samples: 100_000,
                skeleton_depth: 16,
                equivariance_k: 12,
                preimage_shifts: 100,
                spectrum_windows: [1 << 16, 1 << 18, 1 << 20],
                eigen_shifts: 10_000,
                cf_samples: 1000,
            },
            Level::Quick => Sizes {
                prefix: 1 << 16,
                ep_prefix: 1 << 14,
                ep_horizon: 1 << 9,
                rigidity_samples: 10_000,
                skeleton_depth: 12,
                equivariance_k: 10,
                preimage_shifts: 20,
                spectrum_windows: [1 << 12, 1 << 14, 1 << 16],
                eigen_shifts: 2000,
                cf_samples: 200,
            },
        }
    }
}

/// Runs all criteria in order.
pub fn run(level: Level) -> Vec<Outcome> {
    (1..=10).map(|id| criterion(id, level)).collect()
}

/// Runs one criterion (1-based). Errors count as failures.
pub fn criterion(id: u8, level: Level) -> Outcome {
    let s = Sizes::of(level);
    let start = Instant::now();
    let result = match id {
        1 => closed_form(&s),
        2 => periods(&s),
        3 => rigidity(&s),
        4 => skeleton(&s),
        5 => equivariance(&s),
        6 => fibers(&s),
        7 => measure(&s),
        8 => spectrum(&s),
        9 => eigenfunction(&s),
        10 => odometer_algebra(&s),
        _ => Err(Error::invalid(format!("no criterion {id}"))),
    };
    let elapsed = start.elapsed();
    let (passed, detail) = match result {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    Outcome {
        id,
        name: (id as usize)
            .checked_sub(1)
            .and_then(|i| NAMES.get(i))
            .copied()
            .unwrap_or("unknown"),
        passed,
        detail,
        elapsed,
    }
}

type Check = Result<(bool, String)>;

fn closed_form(s: &Sizes) -> Check {
    let start = Instant::now();
    let w = Substitution::grigorchuk().fixed_point_prefix(b'a', s.prefix)?;
    let mismatches = w
        .as_bytes()
        .iter()
        .zip(1u64..)
        .filter(|&(&l, m)| grigorchuk_letter(m) != Ok(l))
        .count();
    let t = start.elapsed();
    Ok((
        mismatches == 0 && w.len() == s.prefix && t < Duration::from_secs(5),
        format!(
            "{mismatches} mismatches over {} letters in {t:.2?}",
            s.prefix
        ),
    ))
}

fn periods(s: &Sizes) -> Check {
    let start = Instant::now();
    let ep = essential_periods(&grigorchuk_prefix(s.ep_prefix)?, s.ep_horizon, Mode::Rigid)?;
    let t = start.elapsed();
    let expected: BTreeSet<usize> = (1..)
        .map(|j| 1usize << j)
        .take_while(|&p| p <= s.ep_horizon)
        .collect();
    Ok((
        ep.periods == expected && t < Duration::from_secs(30),
        format!(
            "{} periods, max {:?}, expected {} powers of two, in {t:.2?}",
            ep.periods.len(),
            ep.periods.last(),
            expected.len()
        ),
    ))
}

fn rigidity(s: &Sizes) -> Check {
    let w = grigorchuk_prefix(s.prefix)?;
    let bytes = w.as_bytes();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut certified, mut counterexamples) = (0usize, 0usize);
    for _ in 0..s.rigidity_samples {
        let p = rng.gen_range(1..=(s.prefix - 1) / 64);
        let m = rng.gen_range(1..=s.prefix - 64 * p);
        if let PeriodCheck::Certified(_) = is_partially_periodic_at(&w, m, p, Mode::Rigid)? {
            certified += 1;
            if (m..=s.prefix)
                .step_by(p)
                .any(|i| bytes[i - 1] != bytes[m - 1])
            {
                counterexamples += 1;
            }
        }
    }
    Ok((
        counterexamples == 0 && certified > 0,
        format!(
            "{counterexamples} counterexamples among {certified} certified of {} samples",
            s.rigidity_samples
        ),
    ))
}

fn skeleton(s: &Sizes) -> Check {
    let k = s.skeleton_depth;
    let w = grigorchuk_prefix(1 << (k + 2))?;
    let sk = period_skeleton(&w, k)?;
    let bad = (1..=k).filter(|&j| sk.m(j) != Some(1 << j)).count();
    let enc = encode_fg(&w, k)?;
    Ok((
        bad == 0 && enc.value.value() == 0,
        format!(
            "{bad} levels with M_k != 2^k up to K={k}; encoding {}",
            enc.value
        ),
    ))
}

fn equivariance(s: &Sizes) -> Check {
    let k = s.equivariance_k;
    let shifts = 1usize << k;
    let w = grigorchuk_prefix(shifts + (1 << (k + 2)))?;
    let report = verify_equivariance(&w, k, shifts)?;
    let off = report
        .values
        .iter()
        .enumerate()
        .filter(|&(n, &v)| v != n as u64 % (1 << k))
        .count();
    Ok((
        report.passed() && report.values.len() == shifts + 1 && off == 0,
        format!(
            "{:?} over {shifts} shifts at k={k}; {off} encodings differ from n mod 2^{k}",
            report.outcome
        ),
    ))
}

fn fibers(s: &Sizes) -> Check {
    let horizon = 64;
    let span = 1 << 12;
    let lang = Language::grigorchuk(horizon, crate::factormap::DEFAULT_MASTER_LEN)?;
    let w = grigorchuk_prefix(span + s.preimage_shifts)?;
    let at_fixed = sigma_preimage_letters(&w.truncate(span)?, &lang)?;
    let mut bad = Vec::new();
    for n in 1..=s.preimage_shifts {
        let got = sigma_preimage_letters(&w.shift(n)?.truncate(span)?, &lang)?;
        let expected = BTreeSet::from([grigorchuk_letter(n as u64)?]);
        if got != expected {
            bad.push(format!("n={n}: {}", letters(&got)));
        }
    }
    let fixed_ok = at_fixed == BTreeSet::from(*b"bcd");
    Ok((
        fixed_ok && bad.is_empty(),
        format!(
            "preimages of the fixed point {{{}}}; {} of {} shifts not {{ω_n}}{}",
            letters(&at_fixed),
            bad.len(),
            s.preimage_shifts,
            if bad.is_empty() {
                String::new()
            } else {
                format!(" ({})", bad.join(", "))
            }
        ),
    ))
}

fn letters(set: &BTreeSet<u8>) -> String {
    set.iter()
        .map(|&l| char::from(l).to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn measure(s: &Sizes) -> Check {
    let w = grigorchuk_prefix(s.prefix)?;
    let expected = [(b'a', 1, 2), (b'b', 1, 7), (b'c', 2, 7), (b'd', 1, 14)];
    let mut sum = Ratio::from_integer(0u64);
    let (mut exact, mut worst) = (true, 0f64);
    for (l, p, q) in expected {
        let cw = CylinderWord::new(w.alphabet(), &[l])?;
        let mu = invariant_measure_cylinder(&cw, 4)?;
        exact &= mu == Ratio::new(p, q);
        sum += mu;
        let f = cylinder_frequency(&w, &cw, s.prefix)?;
        worst = worst.max((f.as_f64() - ratio_f64(mu)).abs());
    }
    let tol = 2f64.powi(-6);
    Ok((
        exact && sum == Ratio::from_integer(1) && worst <= tol,
        format!("exact measures {exact}, sum {sum}, worst empirical deviation {worst:.2e}"),
    ))
}

fn spectrum(s: &Sizes) -> Check {
    let top = s.spectrum_windows[2];
    let w = grigorchuk_prefix(top)?;
    let a = CylinderWord::new(w.alphabet(), b"a")?;
    let thetas = [Ratio::new(1u64, 3), Ratio::new(1, 5)];
    let mut mags = vec![Vec::new(); thetas.len()];
    for &n in &s.spectrum_windows {
        for (i, sample) in spectral_scan(&w, &thetas, &a, n)?.into_iter().enumerate() {
            mags[i].push(sample.magnitude);
        }
    }
    let decays = mags
        .iter()
        .all(|m| m[2] <= 1e-2 && m.windows(2).all(|p| p[1] < p[0]));
    let half = spectral_scan(&w, &[Ratio::new(1, 2)], &a, top)?[0].magnitude;
    let half_ok = (half - 0.5).abs() <= 2f64.powi(-10);
    Ok((
        decays && half_ok,
        format!(
            "|S(1/3)| {:.2e}, |S(1/5)| {:.2e} at N={top}; |S(1/2)| = {half:.6}",
            mags[0][2], mags[1][2]
        ),
    ))
}

fn eigenfunction(s: &Sizes) -> Check {
    let k = 10;
    let w = grigorchuk_prefix(s.eigen_shifts + (1 << (k + 2)))?;
    let report = eigenfunction_check(&w, k, s.eigen_shifts)?;
    let off = report
        .residues
        .iter()
        .enumerate()
        .filter(|&(n, &r)| r != n as u64 % (1 << k))
        .count();
    Ok((
        report.passed() && off == 0 && report.residues.len() == s.eigen_shifts + 1,
        format!(
            "{} failures over {} shifts at k={k}; float defect {:.1e}",
            report.failure.iter().count() + off,
            s.eigen_shifts,
            report.max_float_defect
        ),
    ))
}

fn random_cf(rng: &mut ChaCha8Rng) -> CFSet {
    const PRIMES: [u64; 6] = [2, 3, 5, 7, 11, 13];
    let entries = PRIMES.iter().filter_map(|&p| match rng.gen_range(0..5) {
        0 | 1 => None,
        2 => Some((p, Exponent::Infinite)),
        _ => Some((p, Exponent::Finite(rng.gen_range(1..=3)))),
    });
    CFSet::from_exponents(entries).expect("listed primes")
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Members of `cf` up to `bound`, by brute force.
fn members(cf: &CFSet, bound: u64) -> Vec<u64> {
    (1..=bound).filter(|&n| cf.contains(n)).collect()
}

fn odometer_algebra(s: &Sizes) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 10);
    let mut failures = Vec::new();
    for i in 0..s.cf_samples {
        let cf = random_cf(&mut rng);
        let elems = members(&cf, 600);
        let closed = elems.iter().all(|&a| {
            (1..=a).filter(|d| a % d == 0).all(|d| cf.contains(d))
                && elems.iter().all(|&b| cf.contains(a / gcd(a, b) * b))
        });
        // the closure of the set's own members below the bound sits inside it
        let gens: Vec<Generator> = elems.iter().map(|&n| Generator::Value(n)).collect();
        let reclosed = cf_closure(&gens)?.is_subset(&cf);
        let round_trip = cf_of_odometer(&odometer_from_cf(&cf)?) == cf;
        if !(closed && reclosed && round_trip) {
            failures.push(format!("sample {i} ({cf})"));
        }
    }

    let k = 12u32;
    let spec = OdometerSpec::binary();
    let mut state = OdometerState::zero(k as usize);
    let mut seen = vec![0u32; 1 << k];
    for _ in 0..1u32 << k {
        let v = state.to_dyadic()?.value() as usize;
        seen[v] += 1;
        state = odometer_step(&state, &spec)?.state;
    }
    let once = seen.iter().all(|&c| c == 1) && state == OdometerState::zero(k as usize);
    // every depth-j cylinder [x_1..x_j] is hit exactly 2^{k-j} times
    let uniform = (1..=k).all(|j| {
        let mut counts = vec![0u32; 1 << j];
        for v in 0..1usize << k {
            counts[v & ((1 << j) - 1)] += seen[v];
        }
        counts
            .iter()
            .all(|&c| Ratio::new(c as u64, 1 << k) == Ratio::new(1, 1 << j))
    });
    Ok((
        failures.is_empty() && once && uniform,
        format!(
            "{} of {} CF samples failed{}; binary orbit covers {} states once: {once}; exact cylinder frequencies: {uniform}",
            failures.len(),
            s.cf_samples,
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default(),
            1u32 << k
        ),
    ))
}
