use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_rational::Ratio;
use serde_json::{json, Value};

use odoshift_core::ergodic::{
    cylinder_frequency, invariant_measure_cylinder, spectral_scan, CylinderWord,
};
use odoshift_core::factormap::{
    classify_fiber, encode_fg, FiberClass, Language, DEFAULT_MASTER_LEN,
};
use odoshift_core::substitution::DEFAULT_MAX_LEN;
use odoshift_core::toeplitz::{
    period_skeleton, skeleton_window, Classification, MAX_SKELETON_LEVEL,
};
use odoshift_core::verify::{self, Level};
use odoshift_core::{Error, Substitution, SymbolicPrefix};

const EXIT_IO: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_INSUFFICIENT: u8 = 3;
const EXIT_NOT_IN_SUBSHIFT: u8 = 4;
const EXIT_VERIFICATION: u8 = 5;

/// Grigorchuk substitution subshift: generation, period skeletons, the
/// dyadic factor map, invariant measure and spectrum.
#[derive(Parser, Debug)]
#[command(name = "odoshift", version)]
struct Cli {
    /// Emit JSON instead of line-oriented text.
    #[arg(long, global = true)]
    json: bool,

    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print a prefix of the fixed point.
    Generate(Source),
    /// Period skeleton: one `k M_k l_k` line per level, then the verdict.
    Analyze {
        #[command(flatten)]
        source: Source,
        #[arg(long, short = 'k', default_value_t = 16)]
        precision: u32,
    },
    /// First k dyadic digits of the factor map, least significant first.
    Encode {
        #[command(flatten)]
        source: Source,
        #[arg(long, short = 'k', default_value_t = 16)]
        precision: u32,
    },
    /// Fiber classification and σ-preimage letters.
    Fiber {
        #[command(flatten)]
        source: Source,
        #[arg(long, short = 'k', default_value_t = 16)]
        precision: u32,
        /// Factor length of the reference language.
        #[arg(long, default_value_t = 64)]
        horizon: usize,
        /// Length of the master prefix the language is read from.
        #[arg(long, default_value_t = DEFAULT_MASTER_LEN)]
        master_length: usize,
    },
    /// Exact invariant measure of a cylinder, as p/q.
    Measure {
        #[arg(long)]
        word: String,
        #[arg(long, default_value_t = 8)]
        depth_bound: u32,
    },
    /// Occurrence count of a word over the first `window` start positions.
    Freq {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        word: String,
        #[arg(long, default_value_t = 1 << 20)]
        window: usize,
    },
    /// CSV of |(1/N) Σ e^{-2πiθn} 1_w(σⁿω)| for each θ.
    Spectrum {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "a")]
        word: String,
        /// Comma-separated rationals in [0, 1), e.g. `1/3,1/5,1/2`.
        #[arg(long, value_delimiter = ',', default_value = "1/2,1/3,1/4,1/5,1/8")]
        theta: Vec<String>,
        #[arg(long, default_value_t = 1 << 20)]
        window: usize,
    },
    /// Run the acceptance suite.
    Verify {
        #[arg(long, default_value = "full")]
        level: String,
    },
}

/// Where the sequence comes from.
#[derive(Args, Debug, Clone)]
struct Source {
    /// Read the sequence (one line of letters) from a file.
    #[arg(long, short)]
    input: Option<PathBuf>,
    /// Number of letters to generate.
    #[arg(long, short = 'n', default_value_t = 1 << 20)]
    length: usize,
    /// Rule file (`x -> word` per line) replacing the Grigorchuk substitution.
    #[arg(long)]
    substitution: Option<PathBuf>,
    /// Seed letter of the fixed point; defaults to the first letter.
    #[arg(long)]
    seed: Option<char>,
    /// Drop the first n letters.
    #[arg(long, default_value_t = 0)]
    shift: usize,
}

/// An error with its exit code and a remediation hint.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
    hint: Option<String>,
}

impl Failure {
    fn io(path: &Path, e: io::Error) -> Self {
        Failure {
            code: EXIT_IO,
            message: format!("{}: {e}", path.display()),
            hint: None,
        }
    }

    fn core(e: Error, from_file: bool) -> Self {
        let (code, hint) = match &e {
            Error::InvalidInput(_) | Error::Parse { .. } => (EXIT_VALIDATION, None),
            Error::ResourceLimit { required, .. } => (
                EXIT_VALIDATION,
                Some(format!("set ODOSHIFT_MAX_BYTES to at least {required}")),
            ),
            Error::InsufficientData { required, .. } => (
                EXIT_INSUFFICIENT,
                Some(if from_file {
                    format!("supply a prefix of at least {required} letters (after --shift)")
                } else {
                    format!("rerun with --length {required} or more")
                }),
            ),
            Error::InsufficientPrecision(_) => (
                EXIT_INSUFFICIENT,
                Some("raise --precision or --depth-bound".into()),
            ),
            Error::NotInSubshift(_) => (
                EXIT_NOT_IN_SUBSHIFT,
                Some(
                    "the input is not a prefix of any point of the subshift; check its letters"
                        .into(),
                ),
            ),
        };
        Failure {
            code,
            message: e.to_string(),
            hint,
        }
    }
}

type Outcome<T> = Result<T, Failure>;

struct Report {
    text: String,
    json: Value,
    /// Exit code for a report that is itself a failure (verification).
    code: u8,
}

impl Report {
    fn ok(text: String, json: Value) -> Self {
        Report {
            text,
            json,
            code: 0,
        }
    }
}

fn max_bytes() -> Outcome<usize> {
    match std::env::var("ODOSHIFT_MAX_BYTES") {
        Err(_) => Ok(DEFAULT_MAX_LEN),
        Ok(v) => v.trim().parse().map_err(|_| Failure {
            code: EXIT_VALIDATION,
            message: format!("ODOSHIFT_MAX_BYTES={v:?} is not a byte count"),
            hint: Some("use a plain integer such as 268435456".into()),
        }),
    }
}

fn load_substitution(src: &Source) -> Outcome<Substitution> {
    match &src.substitution {
        None => Ok(Substitution::grigorchuk()),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
            Substitution::parse(&text).map_err(|e| Failure::core(e, false))
        }
    }
}

fn seed_letter(src: &Source, sub: &Substitution) -> Outcome<u8> {
    match src.seed {
        None => Ok(sub.alphabet().letters()[0]),
        Some(c) if c.is_ascii() => Ok(c as u8),
        Some(c) => Err(Failure::core(
            Error::InvalidInput(format!("seed {c:?} is not ASCII")),
            false,
        )),
    }
}

/// The sequence a command works on, checked against `required` before any
/// generation happens.
fn load(src: &Source, required: u128) -> Outcome<SymbolicPrefix> {
    let cap = max_bytes()?;
    let sub = load_substitution(src)?;
    let from_file = src.input.is_some();
    let core = |e| Failure::core(e, from_file);
    let prefix = match &src.input {
        Some(path) => {
            let size = fs::metadata(path).map_err(|e| Failure::io(path, e))?.len();
            if size > cap as u64 {
                return Err(core(Error::ResourceLimit {
                    what: format!("reading {}", path.display()),
                    required: size as u128,
                    cap,
                }));
            }
            let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
            SymbolicPrefix::parse(sub.alphabet().clone(), &text).map_err(core)?
        }
        None => {
            if src.length == 0 {
                return Err(core(Error::InvalidInput(
                    "--length must be positive".into(),
                )));
            }
            if required > src.length as u128 {
                return Err(core(Error::InsufficientData {
                    what: "this command".into(),
                    required,
                    available: src.length,
                }));
            }
            let total = src.length.checked_add(src.shift).ok_or_else(|| {
                core(Error::InvalidInput(
                    "--length plus --shift overflows".into(),
                ))
            })?;
            sub.fixed_point_prefix_capped(seed_letter(src, &sub)?, total, cap)
                .map_err(core)?
        }
    };
    if src.shift == 0 {
        return Ok(prefix);
    }
    prefix.shift(src.shift).map_err(|_| {
        core(Error::InsufficientData {
            what: format!("--shift {}", src.shift),
            required: src.shift as u128 + required.max(1),
            available: prefix.len(),
        })
    })
}

fn check_precision(k: u32) -> Outcome<u128> {
    if k == 0 || k > MAX_SKELETON_LEVEL {
        return Err(Failure::core(
            Error::InvalidInput(format!(
                "--precision must be in 1..={MAX_SKELETON_LEVEL}, got {k}"
            )),
            false,
        ));
    }
    // the skeleton at level k reads residues mod 2^k over 2^{k+2} letters
    Ok(skeleton_window(k))
}

fn text_of(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn verdict(c: &Classification) -> (String, Value) {
    match c {
        Classification::ToeplitzLike => {
            ("toeplitz_like".into(), json!({ "kind": "toeplitz_like" }))
        }
        Classification::EventuallyConstant {
            distance,
            stable_from,
        } => (
            format!("eventually_constant distance={distance} stable_from={stable_from}"),
            json!({ "kind": "eventually_constant", "distance": distance, "stable_from": stable_from }),
        ),
    }
}

fn run(cli: &Cli) -> Outcome<Report> {
    let core_err = |src: &Source| {
        let from_file = src.input.is_some();
        move |e| Failure::core(e, from_file)
    };
    match &cli.command {
        Command::Generate(src) => {
            let w = load(src, 1)?;
            let s = text_of(w.as_bytes());
            Ok(Report::ok(
                format!("{s}\n"),
                json!({ "length": w.len(), "shift": src.shift, "sequence": s }),
            ))
        }
        Command::Analyze { source, precision } => {
            let need = check_precision(*precision)?;
            let w = load(source, need)?;
            let sk = period_skeleton(&w, *precision).map_err(core_err(source))?;
            let mut text = String::from("# k M_k l_k\n");
            for l in &sk.levels {
                text.push_str(&format!("{} {} {}\n", l.level, l.m, l.letter as char));
            }
            let (v, vj) = verdict(&sk.classification);
            text.push_str(&format!("verdict: {v}\n"));
            let levels: Vec<Value> = sk
                .levels
                .iter()
                .map(
                    |l| json!({ "k": l.level, "m": l.m, "letter": (l.letter as char).to_string() }),
                )
                .collect();
            Ok(Report::ok(
                text,
                json!({ "levels": levels, "classification": vj }),
            ))
        }
        Command::Encode { source, precision } => {
            let need = check_precision(*precision)?;
            let w = load(source, need)?;
            let enc = encode_fg(&w, *precision).map_err(core_err(source))?;
            Ok(Report::ok(
                format!("{}\n", enc.value),
                json!({
                    "precision": precision,
                    "bits": enc.value.to_string(),
                    "value": enc.value.value(),
                    "window_used": enc.window_used,
                }),
            ))
        }
        Command::Fiber {
            source,
            precision,
            horizon,
            master_length,
        } => {
            let need = check_precision(*precision)?.max(*horizon as u128);
            let w = load(source, need)?;
            let sub = load_substitution(source)?;
            let master = sub
                .fixed_point_prefix_capped(seed_letter(source, &sub)?, *master_length, max_bytes()?)
                .map_err(core_err(source))?;
            let lang = Language::from_master(&master, *horizon).map_err(core_err(source))?;
            let rep = classify_fiber(&w, *precision, &lang).map_err(core_err(source))?;
            let letters: Vec<String> = rep
                .sigma_preimage_letters
                .iter()
                .map(|&l| (l as char).to_string())
                .collect();
            let (class, class_json) = match rep.classification {
                FiberClass::ToeplitzPoint => (
                    "toeplitz_point".to_string(),
                    json!({ "kind": "toeplitz_point" }),
                ),
                FiberClass::OmegaStarOrbit {
                    distance,
                    stable_from,
                } => (
                    format!("omega_star_orbit distance={distance} stable_from={stable_from}"),
                    json!({ "kind": "omega_star_orbit", "distance": distance, "stable_from": stable_from }),
                ),
            };
            let text = format!(
                "classification: {class}\nsigma_preimage_letters: {}\nhorizon: {horizon}\nmaster_length: {}\nencoding: {}\n",
                letters.join(","),
                lang.master_len(),
                odoshift_core::odometer::DyadicInt::new(rep.skeleton.encoded_value(), *precision)
                    .map_err(core_err(source))?
            );
            Ok(Report::ok(
                text,
                json!({
                    "classification": class_json,
                    "sigma_preimage_letters": letters,
                    "horizon": horizon,
                    "master_length": lang.master_len(),
                    "precision": precision,
                    "encoded_value": rep.skeleton.encoded_value(),
                }),
            ))
        }
        Command::Measure { word, depth_bound } => {
            let cw = CylinderWord::grigorchuk(word).map_err(|e| Failure::core(e, false))?;
            let mu = invariant_measure_cylinder(&cw, *depth_bound)
                .map_err(|e| Failure::core(e, false))?;
            Ok(Report::ok(
                format!("{mu}\n"),
                json!({ "word": word, "numerator": mu.numer(), "denominator": mu.denom(), "measure": mu.to_string() }),
            ))
        }
        Command::Freq {
            source,
            word,
            window,
        } => {
            let w = load(
                source,
                (*window as u128 + word.len() as u128).saturating_sub(1),
            )?;
            let cw = CylinderWord::new(w.alphabet(), word.as_bytes()).map_err(core_err(source))?;
            let f = cylinder_frequency(&w, &cw, *window).map_err(core_err(source))?;
            Ok(Report::ok(
                format!("{word} {} {} {:.9}\n", f.count, f.window, f.as_f64()),
                json!({ "word": word, "count": f.count, "window": f.window, "frequency": f.as_f64() }),
            ))
        }
        Command::Spectrum {
            source,
            word,
            theta,
            window,
        } => {
            let thetas = theta
                .iter()
                .map(|t| {
                    t.trim().parse::<Ratio<u64>>().map_err(|_| {
                        Failure::core(
                            Error::InvalidInput(format!("θ {t:?} is not a rational p/q")),
                            false,
                        )
                    })
                })
                .collect::<Outcome<Vec<_>>>()?;
            let w = load(
                source,
                (*window as u128 + word.len() as u128).saturating_sub(1),
            )?;
            let cw = CylinderWord::new(w.alphabet(), word.as_bytes()).map_err(core_err(source))?;
            let samples = spectral_scan(&w, &thetas, &cw, *window).map_err(core_err(source))?;
            let mut text = String::from("theta,magnitude,N\n");
            let mut rows = Vec::new();
            for s in &samples {
                text.push_str(&format!("{},{:.12e},{}\n", s.theta, s.magnitude, s.window));
                rows.push(json!({ "theta": s.theta.to_string(), "magnitude": s.magnitude, "N": s.window }));
            }
            Ok(Report::ok(text, json!({ "word": word, "samples": rows })))
        }
        Command::Verify { level } => {
            let level: Level = level.parse().map_err(|e| Failure::core(e, false))?;
            let outcomes = verify::run(level);
            let passed = outcomes.iter().filter(|o| o.passed).count();
            let mut text = String::new();
            for o in &outcomes {
                text.push_str(&format!("{o}\n"));
            }
            text.push_str(&format!("{passed} of {} criteria passed\n", outcomes.len()));
            let rows: Vec<Value> = outcomes
                .iter()
                .map(|o| json!({ "id": o.id, "name": o.name, "passed": o.passed, "detail": o.detail }))
                .collect();
            Ok(Report {
                text,
                json: json!({ "criteria": rows, "passed": passed, "total": outcomes.len() }),
                code: if passed == outcomes.len() {
                    0
                } else {
                    EXIT_VERIFICATION
                },
            })
        }
    }
}

fn emit(cli: &Cli, report: &Report) -> Outcome<()> {
    let body = if cli.json {
        format!(
            "{}\n",
            serde_json::to_string_pretty(&report.json).expect("JSON values serialize")
        )
    } else {
        report.text.clone()
    };
    match &cli.output {
        Some(path) => fs::write(path, body).map_err(|e| Failure::io(path, e)),
        None => io::stdout()
            .lock()
            .write_all(body.as_bytes())
            .map_err(|e| Failure::io(Path::new("<stdout>"), e)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|r| emit(&cli, &r).map(|()| r.code));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            if let Some(h) = f.hint {
                eprintln!("hint: {h}");
            }
            ExitCode::from(f.code)
        }
    }
}
