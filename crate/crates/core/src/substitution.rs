//! Substitutions, their fixed points, and the closed-form letter rule of the
//! Grigorchuk fixed point.
//!
//! Every position exposed by this module is 1-based. Storage is 0-based.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Default cap on the number of letters any single generation step may
/// materialize. The CLI overrides it from `ODOSHIFT_MAX_BYTES`.
pub const DEFAULT_MAX_LEN: usize = 1 << 28;

const ABSENT: u8 = u8::MAX;

/// Ordered finite set of single-character ASCII symbols.
#[derive(Clone)]
pub struct Alphabet(Arc<AlphabetInner>);

struct AlphabetInner {
    letters: Vec<u8>,
    index: [u8; 256],
}

impl Alphabet {
    pub fn new(letters: &[u8]) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::invalid("alphabet must be nonempty"));
        }
        if letters.len() > 255 {
            return Err(Error::invalid(format!(
                "alphabet has {} letters, at most 255 are allowed",
                letters.len()
            )));
        }
        let mut index = [ABSENT; 256];
        for (i, &l) in letters.iter().enumerate() {
            if !l.is_ascii_graphic() || l == b'#' {
                return Err(Error::invalid(format!(
                    "letter {:?} is not a printable ASCII symbol",
                    l as char
                )));
            }
            if index[l as usize] != ABSENT {
                return Err(Error::invalid(format!("duplicate letter {:?}", l as char)));
            }
            index[l as usize] = i as u8;
        }
        Ok(Alphabet(Arc::new(AlphabetInner {
            letters: letters.to_vec(),
            index,
        })))
    }

    /// The Grigorchuk alphabet `{a, b, c, d}` in that order.
    pub fn grigorchuk() -> Self {
        Alphabet::new(b"abcd").expect("static alphabet")
    }

    pub fn letters(&self) -> &[u8] {
        &self.0.letters
    }

    pub fn len(&self) -> usize {
        self.0.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, letter: u8) -> bool {
        self.0.index[letter as usize] != ABSENT
    }

    /// Position of `letter` in the alphabet order.
    pub fn index_of(&self, letter: u8) -> Option<usize> {
        match self.0.index[letter as usize] {
            ABSENT => None,
            i => Some(i as usize),
        }
    }

    fn check_word(&self, word: &[u8]) -> Result<()> {
        match word.iter().find(|&&l| !self.contains(l)) {
            Some(&l) => Err(Error::invalid(format!(
                "letter {:?} is not in the alphabet {}",
                l as char, self
            ))),
            None => Ok(()),
        }
    }
}

impl PartialEq for Alphabet {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.letters == other.0.letters
    }
}

impl Eq for Alphabet {}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, &l) in self.letters().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", l as char)?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Alphabet({})", self)
    }
}

/// Finite prefix of a one-sided sequence, positions `1..=len()`.
///
/// Cloning and shifting share the underlying buffer, so orbit scans over
/// `σⁿ` of a long prefix do not copy.
#[derive(Clone)]
pub struct SymbolicPrefix {
    alphabet: Alphabet,
    data: Arc<[u8]>,
    offset: usize,
}

impl SymbolicPrefix {
    pub fn new(alphabet: Alphabet, letters: Vec<u8>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::invalid("a prefix needs at least one letter"));
        }
        alphabet.check_word(&letters)?;
        Ok(SymbolicPrefix {
            alphabet,
            data: letters.into(),
            offset: 0,
        })
    }

    /// Parses the one-line text form. Surrounding whitespace is ignored.
    pub fn parse(alphabet: Alphabet, text: &str) -> Result<Self> {
        let line = text.trim();
        if line.contains(char::is_whitespace) {
            return Err(Error::Parse {
                line: 1,
                message: "a prefix is a single line of letters without separators".into(),
            });
        }
        Self::new(alphabet, line.as_bytes().to_vec())
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.data.len() - self.offset
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Letters as a 0-based slice.
    pub fn as_bytes(&self) -> &[u8] {
        &self.data[self.offset..]
    }

    /// Letter at 1-based position `pos`.
    pub fn get(&self, pos: usize) -> Option<u8> {
        if pos == 0 {
            return None;
        }
        self.as_bytes().get(pos - 1).copied()
    }

    /// `σⁿ` of the prefix: drops the first `n` letters.
    pub fn shift(&self, n: usize) -> Result<Self> {
        if n >= self.len() {
            return Err(Error::short(
                format!("shifting by {n}"),
                n as u128 + 1,
                self.len(),
            ));
        }
        Ok(SymbolicPrefix {
            alphabet: self.alphabet.clone(),
            data: Arc::clone(&self.data),
            offset: self.offset + n,
        })
    }

    /// First `len` letters.
    pub fn truncate(&self, len: usize) -> Result<Self> {
        if len == 0 || len > self.len() {
            return Err(Error::short("truncation", len as u128, self.len()));
        }
        Ok(SymbolicPrefix {
            alphabet: self.alphabet.clone(),
            data: self.as_bytes()[..len].into(),
            offset: 0,
        })
    }

    /// The sequence `letter · self`.
    pub fn prepend(&self, letter: u8) -> Result<Self> {
        let mut v = Vec::with_capacity(self.len() + 1);
        v.push(letter);
        v.extend_from_slice(self.as_bytes());
        Self::new(self.alphabet.clone(), v)
    }

    /// Copy with the letter at 1-based `pos` replaced.
    pub fn with_letter(&self, pos: usize, letter: u8) -> Result<Self> {
        if pos == 0 || pos > self.len() {
            return Err(Error::invalid(format!(
                "position {pos} outside 1..={}",
                self.len()
            )));
        }
        let mut v = self.as_bytes().to_vec();
        v[pos - 1] = letter;
        Self::new(self.alphabet.clone(), v)
    }

    pub fn starts_with(&self, other: &SymbolicPrefix) -> bool {
        self.as_bytes().starts_with(other.as_bytes())
    }

    fn concat(&self, other: &SymbolicPrefix) -> Result<Self> {
        let mut v = self.as_bytes().to_vec();
        v.extend_from_slice(other.as_bytes());
        Self::new(self.alphabet.clone(), v)
    }
}

impl PartialEq for SymbolicPrefix {
    fn eq(&self, other: &Self) -> bool {
        self.alphabet == other.alphabet && self.as_bytes() == other.as_bytes()
    }
}

impl Eq for SymbolicPrefix {}

impl fmt::Display for SymbolicPrefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // letters are validated ASCII
        f.write_str(std::str::from_utf8(self.as_bytes()).map_err(|_| fmt::Error)?)
    }
}

impl fmt::Debug for SymbolicPrefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const SHOW: usize = 48;
        let b = self.as_bytes();
        let head = String::from_utf8_lossy(&b[..b.len().min(SHOW)]);
        if b.len() > SHOW {
            write!(f, "SymbolicPrefix({head}… len={})", b.len())
        } else {
            write!(f, "SymbolicPrefix({head})")
        }
    }
}

/// Non-erasing substitution: a total map letter → nonempty word.
#[derive(Clone, PartialEq, Eq)]
pub struct Substitution {
    alphabet: Alphabet,
    rules: Vec<Vec<u8>>,
}

impl Substitution {
    pub fn new<I>(alphabet: Alphabet, rules: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u8, Vec<u8>)>,
    {
        let mut table: Vec<Option<Vec<u8>>> = vec![None; alphabet.len()];
        for (letter, word) in rules {
            let i = alphabet.index_of(letter).ok_or_else(|| {
                Error::invalid(format!("rule for unknown letter {:?}", letter as char))
            })?;
            if word.is_empty() {
                return Err(Error::invalid(format!(
                    "rule for {:?} is empty; erasing rules are not supported",
                    letter as char
                )));
            }
            alphabet.check_word(&word)?;
            if table[i].replace(word).is_some() {
                return Err(Error::invalid(format!(
                    "duplicate rule for {:?}",
                    letter as char
                )));
            }
        }
        let mut rules = Vec::with_capacity(table.len());
        for (i, r) in table.into_iter().enumerate() {
            match r {
                Some(w) => rules.push(w),
                None => {
                    return Err(Error::invalid(format!(
                        "no rule for letter {:?}",
                        alphabet.letters()[i] as char
                    )))
                }
            }
        }
        Ok(Substitution { alphabet, rules })
    }

    /// `a → aca, b → d, c → b, d → c`.
    pub fn grigorchuk() -> Self {
        Substitution::new(
            Alphabet::grigorchuk(),
            [
                (b'a', b"aca".to_vec()),
                (b'b', b"d".to_vec()),
                (b'c', b"b".to_vec()),
                (b'd', b"c".to_vec()),
            ],
        )
        .expect("static substitution")
    }

    /// Parses the rule-file format: one `x -> word` per line, `#` starts a
    /// comment. The alphabet is the set of left-hand sides in file order.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lhs = Vec::new();
        let mut rules = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: &str| Error::Parse {
                line: n + 1,
                message: message.into(),
            };
            let (left, right) = line
                .split_once("->")
                .ok_or_else(|| parse_err("expected `x -> word`"))?;
            let left = left.trim().as_bytes();
            let right = right.trim().as_bytes();
            if left.len() != 1 {
                return Err(parse_err("left-hand side must be a single letter"));
            }
            if right.is_empty() || right.iter().any(u8::is_ascii_whitespace) {
                return Err(parse_err("right-hand side must be a nonempty word"));
            }
            lhs.push(left[0]);
            rules.push((left[0], right.to_vec()));
        }
        let alphabet = Alphabet::new(&lhs)?;
        Substitution::new(alphabet, rules)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Image of a single letter.
    pub fn rule(&self, letter: u8) -> Option<&[u8]> {
        self.alphabet
            .index_of(letter)
            .map(|i| self.rules[i].as_slice())
    }

    /// Whether `seed` generates a fixed point: its image starts with `seed`
    /// and has at least two letters.
    pub fn validate_prolongable(&self, seed: u8) -> Result<bool> {
        let word = self.rule(seed).ok_or_else(|| {
            Error::invalid(format!("seed {:?} is not in the alphabet", seed as char))
        })?;
        Ok(word.len() >= 2 && word[0] == seed)
    }

    /// Length of `τ^steps(word)`, saturating.
    pub fn image_len(&self, word: &[u8], steps: usize) -> u128 {
        // lens[i] = |τ^s(letter i)|
        let mut lens: Vec<u128> = vec![1; self.alphabet.len()];
        for _ in 0..steps {
            let next: Vec<u128> = self
                .rules
                .iter()
                .map(|r| {
                    r.iter()
                        .map(|&l| lens[self.alphabet.index_of(l).unwrap()])
                        .fold(0u128, u128::saturating_add)
                })
                .collect();
            if next == lens {
                break;
            }
            lens = next;
        }
        word.iter()
            .map(|&l| lens[self.alphabet.index_of(l).unwrap()])
            .fold(0u128, u128::saturating_add)
    }

    /// `τ^steps(word)` with the default length cap.
    pub fn iterate(&self, word: &SymbolicPrefix, steps: usize) -> Result<SymbolicPrefix> {
        self.iterate_capped(word, steps, DEFAULT_MAX_LEN)
    }

    pub fn iterate_capped(
        &self,
        word: &SymbolicPrefix,
        steps: usize,
        cap: usize,
    ) -> Result<SymbolicPrefix> {
        if word.alphabet() != &self.alphabet {
            return Err(Error::invalid(
                "word and substitution use different alphabets",
            ));
        }
        let required = self.image_len(word.as_bytes(), steps);
        if required > cap as u128 {
            return Err(Error::ResourceLimit {
                what: format!("{steps} substitution steps"),
                required,
                cap,
            });
        }
        let mut cur = word.as_bytes().to_vec();
        for _ in 0..steps {
            cur = self.apply(&cur, usize::MAX);
        }
        SymbolicPrefix::new(self.alphabet.clone(), cur)
    }

    /// One application of the substitution, stopping once `limit` letters
    /// have been produced.
    fn apply(&self, word: &[u8], limit: usize) -> Vec<u8> {
        let mut out = Vec::with_capacity(word.len().saturating_mul(2).min(limit));
        for &l in word {
            if out.len() >= limit {
                break;
            }
            out.extend_from_slice(&self.rules[self.alphabet.index_of(l).unwrap()]);
        }
        out
    }

    /// First `length` letters of the fixed point generated by `seed`.
    pub fn fixed_point_prefix(&self, seed: u8, length: usize) -> Result<SymbolicPrefix> {
        self.fixed_point_prefix_capped(seed, length, DEFAULT_MAX_LEN)
    }

    pub fn fixed_point_prefix_capped(
        &self,
        seed: u8,
        length: usize,
        cap: usize,
    ) -> Result<SymbolicPrefix> {
        if !self.validate_prolongable(seed)? {
            return Err(Error::invalid(format!(
                "seed {:?} is not prolongable: its image must start with it and have length >= 2",
                seed as char
            )));
        }
        if length == 0 {
            return Err(Error::invalid("prefix length must be positive"));
        }
        if length > cap {
            return Err(Error::ResourceLimit {
                what: "fixed point prefix".into(),
                required: length as u128,
                cap,
            });
        }
        // τ^k(seed) is a prefix of τ^{k+1}(seed), so only the part of the
        // current word that feeds the first `length` output letters matters.
        let mut cur = vec![seed];
        while cur.len() < length {
            cur = self.apply(&cur, length);
        }
        cur.truncate(length);
        SymbolicPrefix::new(self.alphabet.clone(), cur)
    }
}

impl fmt::Debug for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for (l, r) in self.alphabet.letters().iter().zip(&self.rules) {
            m.entry(&(*l as char), &String::from_utf8_lossy(r));
        }
        m.finish()
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (l, r) in self.alphabet.letters().iter().zip(&self.rules) {
            writeln!(f, "{} -> {}", *l as char, String::from_utf8_lossy(r))?;
        }
        Ok(())
    }
}

/// Largest `k` with `2^k | m`.
pub fn dyadic_valuation(m: u64) -> Result<u32> {
    if m == 0 {
        return Err(Error::invalid("the dyadic valuation of 0 is undefined"));
    }
    Ok(m.trailing_zeros())
}

/// Letter of the Grigorchuk fixed point at a position of dyadic valuation `k`.
pub fn grigorchuk_letter_for_valuation(k: u32) -> u8 {
    match (k, k % 3) {
        (0, _) => b'a',
        (_, 0) => b'd',
        (_, 1) => b'c',
        _ => b'b',
    }
}

/// Closed-form letter `ω_m` of the Grigorchuk fixed point.
pub fn grigorchuk_letter(m: u64) -> Result<u8> {
    Ok(grigorchuk_letter_for_valuation(dyadic_valuation(m)?))
}

/// Prefix of the Grigorchuk fixed point, generated by substitution.
pub fn grigorchuk_prefix(length: usize) -> Result<SymbolicPrefix> {
    Substitution::grigorchuk().fixed_point_prefix(b'a', length)
}

/// Homomorphic image check used by tests: `τ^s(uv) = τ^s(u) τ^s(v)`.
#[doc(hidden)]
pub fn iterate_concat(
    sub: &Substitution,
    u: &SymbolicPrefix,
    v: &SymbolicPrefix,
    steps: usize,
) -> Result<(SymbolicPrefix, SymbolicPrefix)> {
    let whole = sub.iterate(&u.concat(v)?, steps)?;
    let parts = sub.iterate(u, steps)?.concat(&sub.iterate(v, steps)?)?;
    Ok((whole, parts))
}
