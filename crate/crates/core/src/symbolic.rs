//! Finite-alphabet subshifts: rotation codings, primitive substitutions and
//! periodic words, with factor and cylinder-frequency statistics.
//!
//! A [`SymbolSequence`] is one two-sided point `ω` of the subshift, indexed
//! by `n ∈ [−horizon, horizon]`. Ω itself is never materialized; shifted
//! copies and phase-shifted rotation codings stand in for other base points.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rotations::ContinuedFraction;

/// Default number of window positions used for empirical frequencies.
pub const DEFAULT_SAMPLE_LENGTH: usize = 1_000_000;

/// Horizon used for generators that need no storage.
pub const UNBOUNDED_HORIZON: u64 = 1 << 52;

/// Ordered list of distinct symbols.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    symbols: Vec<char>,
}

impl Alphabet {
    pub fn new(symbols: Vec<char>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::invalid("symbols", "alphabet must be nonempty"));
        }
        if symbols.len() > u8::MAX as usize {
            return Err(Error::invalid("symbols", "at most 255 symbols are supported"));
        }
        let distinct: BTreeSet<char> = symbols.iter().copied().collect();
        if distinct.len() != symbols.len() {
            return Err(Error::invalid("symbols", "symbols must be distinct"));
        }
        Ok(Alphabet { symbols })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn symbol(&self, code: u8) -> char {
        self.symbols[code as usize]
    }

    pub fn code(&self, symbol: char) -> Option<u8> {
        self.symbols.iter().position(|&s| s == symbol).map(|p| p as u8)
    }

    pub fn render(&self, codes: &[u8]) -> String {
        codes.iter().map(|&c| self.symbol(c)).collect()
    }

    pub fn encode(&self, word: &str) -> Option<Vec<u8>> {
        word.chars().map(|ch| self.code(ch)).collect()
    }
}

/// A subshift generator, serialized with a `kind` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SubshiftSpec {
    /// Coding of `θ + nα mod 1` against `0 < β_1 < … < β_{p−1} < 1`, symbol
    /// `k` for the interval `[β_{k−1}, β_k)`.
    ///
    /// `α = [0; a_1, a_2, …]` with `quotients` repeated cyclically out to
    /// `depth` partial quotients.
    RotationCoding {
        quotients: Vec<u64>,
        depth: usize,
        betas: Vec<f64>,
        #[serde(default)]
        theta: f64,
        /// One symbol per interval; defaults to `a, b, c, …`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        symbols: Option<String>,
    },
    /// Fixed point of a primitive substitution. The alphabet is the set of
    /// rule keys in sorted order.
    Substitution { rules: BTreeMap<char, String> },
    /// Bi-infinite repetition of `word`, with `word[0]` at index 0.
    Periodic { word: String },
}

impl SubshiftSpec {
    /// Coding of the golden-mean rotation `α = (√5 − 1)/2` with the single
    /// partition point `β = 1 − α` (a Sturmian sequence).
    pub fn golden_sturmian() -> Self {
        let cf = ContinuedFraction::periodic(&[1], 40).expect("golden mean");
        SubshiftSpec::RotationCoding {
            quotients: vec![1],
            depth: 40,
            betas: vec![1.0 - cf.value()],
            theta: 0.0,
            symbols: None,
        }
    }

    pub fn periodic(word: &str) -> Self {
        SubshiftSpec::Periodic {
            word: word.to_string(),
        }
    }

    pub fn substitution(rules: &[(char, &str)]) -> Self {
        SubshiftSpec::Substitution {
            rules: rules.iter().map(|&(c, w)| (c, w.to_string())).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SubshiftSpec::RotationCoding {
                quotients,
                depth,
                betas,
                theta,
                symbols,
            } => {
                if *depth == 0 {
                    return Err(Error::invalid("depth", "must be positive"));
                }
                ContinuedFraction::periodic(quotients, *depth)?;
                if betas.is_empty() {
                    return Err(Error::invalid("betas", "at least one partition point is required"));
                }
                let mut prev = 0.0;
                for (k, &b) in betas.iter().enumerate() {
                    if !(b > prev && b < 1.0) {
                        return Err(Error::invalid(
                            format!("betas[{k}]"),
                            format!("{b} violates 0 < β_1 < … < β_(p−1) < 1"),
                        ));
                    }
                    prev = b;
                }
                if !theta.is_finite() {
                    return Err(Error::invalid("theta", "must be finite"));
                }
                if let Some(s) = symbols {
                    if s.chars().count() != betas.len() + 1 {
                        return Err(Error::invalid(
                            "symbols",
                            format!("expected {} symbols, one per interval", betas.len() + 1),
                        ));
                    }
                }
                self.alphabet().map(|_| ())
            }
            SubshiftSpec::Substitution { rules } => Substitution::from_rules(rules).map(|_| ()),
            SubshiftSpec::Periodic { word } => {
                if word.is_empty() {
                    return Err(Error::invalid("word", "period word must be nonempty"));
                }
                Ok(())
            }
        }
    }

    pub fn alphabet(&self) -> Result<Alphabet> {
        match self {
            SubshiftSpec::RotationCoding { betas, symbols, .. } => {
                let symbols: Vec<char> = match symbols {
                    Some(s) => s.chars().collect(),
                    None => (0..=betas.len())
                        .map(|k| char::from_u32('a' as u32 + k as u32).unwrap_or('?'))
                        .collect(),
                };
                Alphabet::new(symbols)
            }
            SubshiftSpec::Substitution { rules } => Alphabet::new(rules.keys().copied().collect()),
            SubshiftSpec::Periodic { word } => {
                let distinct: BTreeSet<char> = word.chars().collect();
                Alphabet::new(distinct.into_iter().collect())
            }
        }
    }

    /// The rotation number's continued fraction, for rotation codings.
    pub fn rotation_cf(&self) -> Option<ContinuedFraction> {
        match self {
            SubshiftSpec::RotationCoding {
                quotients, depth, ..
            } => ContinuedFraction::periodic(quotients, *depth).ok(),
            _ => None,
        }
    }

    /// `α` reconstructed from the partial quotients, for rotation codings.
    pub fn alpha(&self) -> Option<f64> {
        self.rotation_cf().map(|cf| cf.value())
    }

    /// The same coding started at phase `θ + delta`.
    pub fn with_phase_shift(&self, delta: f64) -> Self {
        match self {
            SubshiftSpec::RotationCoding {
                quotients,
                depth,
                betas,
                theta,
                symbols,
            } => SubshiftSpec::RotationCoding {
                quotients: quotients.clone(),
                depth: *depth,
                betas: betas.clone(),
                theta: (theta + delta).rem_euclid(1.0),
                symbols: symbols.clone(),
            },
            other => other.clone(),
        }
    }

    /// Base points standing in for "all ω ∈ Ω" in uniformity checks.
    ///
    /// Rotation codings are sampled at phases `θ + k/samples`; substitution
    /// fixed points at disjoint windows `k·span`; periodic words at shifts
    /// `k mod period`. Every returned sequence is valid on
    /// `[−pad, span + pad]`.
    pub fn sample_points(&self, samples: usize, span: usize, pad: usize) -> Result<Vec<SymbolSequence>> {
        if samples == 0 {
            return Err(Error::invalid("samples", "must be positive"));
        }
        let need = (span + pad) as u64;
        match self {
            SubshiftSpec::RotationCoding { .. } => (0..samples)
                .map(|k| {
                    SymbolSequence::new(self.with_phase_shift(k as f64 / samples as f64), need)
                })
                .collect(),
            SubshiftSpec::Substitution { .. } => {
                let base = SymbolSequence::new(self.clone(), (samples * span + span + pad) as u64)?;
                (0..samples)
                    .map(|k| base.shifted((k * span) as i64))
                    .collect()
            }
            SubshiftSpec::Periodic { word } => {
                let base = SymbolSequence::new(self.clone(), UNBOUNDED_HORIZON)?;
                let period = word.chars().count();
                (0..samples)
                    .map(|k| base.shifted((k % period) as i64))
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Substitution {
    images: Vec<Vec<u8>>,
}

impl Substitution {
    fn from_rules(rules: &BTreeMap<char, String>) -> Result<Self> {
        if rules.is_empty() {
            return Err(Error::invalid("rules", "substitution needs at least one rule"));
        }
        let alphabet = Alphabet::new(rules.keys().copied().collect())?;
        let mut images = Vec::with_capacity(rules.len());
        for (symbol, image) in rules {
            if image.is_empty() {
                return Err(Error::invalid(format!("rules.{symbol}"), "image must be nonempty"));
            }
            let codes = alphabet.encode(image).ok_or_else(|| {
                Error::invalid(
                    format!("rules.{symbol}"),
                    "image uses a symbol without a rule",
                )
            })?;
            images.push(codes);
        }
        let s = Substitution { images };
        if !s.is_primitive() {
            return Err(Error::invalid("rules", "substitution is not primitive"));
        }
        if s.images.iter().all(|w| w.len() == 1) {
            return Err(Error::invalid("rules", "substitution does not expand words"));
        }
        Ok(s)
    }

    fn size(&self) -> usize {
        self.images.len()
    }

    /// Some power of the incidence matrix is entrywise positive. Wielandt's
    /// bound `(d − 1)² + 1` caps the exponent for primitive matrices.
    fn is_primitive(&self) -> bool {
        let d = self.size();
        let base: Vec<Vec<bool>> = self
            .images
            .iter()
            .map(|img| (0..d).map(|j| img.contains(&(j as u8))).collect())
            .collect();
        let mut power = base.clone();
        for _ in 0..((d - 1) * (d - 1) + 1) {
            if power.iter().all(|row| row.iter().all(|&x| x)) {
                return true;
            }
            power = (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| (0..d).any(|k| power[i][k] && base[k][j]))
                        .collect()
                })
                .collect();
        }
        power.iter().all(|row| row.iter().all(|&x| x))
    }

    fn apply(&self, word: &[u8]) -> Vec<u8> {
        word.iter()
            .flat_map(|&c| self.images[c as usize].iter().copied())
            .collect()
    }

    /// Two-letter words occurring in images of legal two-letter words,
    /// closed under the substitution.
    fn legal_pairs(&self) -> BTreeSet<(u8, u8)> {
        let mut pairs: BTreeSet<(u8, u8)> = BTreeSet::new();
        for img in &self.images {
            pairs.extend(img.windows(2).map(|w| (w[0], w[1])));
        }
        loop {
            let mut next = pairs.clone();
            for &(a, b) in &pairs {
                let img = self.apply(&[a, b]);
                next.extend(img.windows(2).map(|w| (w[0], w[1])));
            }
            if next.len() == pairs.len() {
                return pairs;
            }
            pairs = next;
        }
    }

    /// Power `k` and letters `(left, right)` such that `σ^k(left)` ends in
    /// `left`, `σ^k(right)` starts with `right` and `left·right` is legal.
    /// The two-sided fixed point of `σ^k` seeded by `left.right` is then an
    /// element of the subshift.
    fn seeds(&self) -> Result<(usize, u8, u8)> {
        let d = self.size();
        let first: Vec<u8> = self.images.iter().map(|w| w[0]).collect();
        let last: Vec<u8> = self.images.iter().map(|w| *w.last().unwrap()).collect();
        let legal = self.legal_pairs();
        let mut first_k: Vec<u8> = (0..d as u8).collect();
        let mut last_k: Vec<u8> = (0..d as u8).collect();
        // Every letter's first-letter orbit becomes periodic within d steps
        // with period ≤ d, so d·d! would always suffice; in practice small k work.
        for k in 1..=256 {
            first_k = first_k.iter().map(|&c| first[c as usize]).collect();
            last_k = last_k.iter().map(|&c| last[c as usize]).collect();
            for r in 0..d as u8 {
                if first_k[r as usize] != r {
                    continue;
                }
                for l in 0..d as u8 {
                    if last_k[l as usize] == l && legal.contains(&(l, r)) {
                        return Ok((k, l, r));
                    }
                }
            }
        }
        Err(Error::invalid("rules", "no two-sided fixed point found"))
    }

    /// Materialize `left_len` symbols to the left of the origin and
    /// `right_len` symbols from the origin on.
    fn two_sided(&self, left_len: usize, right_len: usize) -> Result<(Vec<u8>, Vec<u8>)> {
        let (k, l, r) = self.seeds()?;
        let mut right = vec![r];
        while right.len() < right_len {
            for _ in 0..k {
                right = self.apply(&right);
                right.truncate(right_len.max(1));
            }
        }
        right.truncate(right_len);
        let mut left = vec![l];
        while left.len() < left_len {
            for _ in 0..k {
                let mut next = self.apply(&left);
                if next.len() > left_len {
                    next.drain(..next.len() - left_len);
                }
                left = next;
            }
        }
        if left.len() > left_len {
            left.drain(..left.len() - left_len);
        }
        Ok((left, right))
    }
}

#[derive(Debug, Clone)]
enum Backing {
    Rotation { alpha: f64, betas: Vec<f64>, theta: f64 },
    Periodic { word: Vec<u8> },
    /// `data[origin + n]` holds position `n`.
    Stored { data: Arc<Vec<u8>>, origin: usize },
}

/// One two-sided point of a subshift, valid on `[−horizon, horizon]`.
#[derive(Debug, Clone)]
pub struct SymbolSequence {
    spec: SubshiftSpec,
    alphabet: Alphabet,
    horizon: u64,
    offset: i64,
    backing: Backing,
}

impl SymbolSequence {
    pub fn new(spec: SubshiftSpec, horizon: u64) -> Result<Self> {
        spec.validate()?;
        let alphabet = spec.alphabet()?;
        let backing = match &spec {
            SubshiftSpec::RotationCoding { betas, theta, .. } => Backing::Rotation {
                alpha: spec.alpha().expect("validated rotation coding"),
                betas: betas.clone(),
                theta: theta.rem_euclid(1.0),
            },
            SubshiftSpec::Periodic { word } => Backing::Periodic {
                word: alphabet.encode(word).expect("alphabet built from word"),
            },
            SubshiftSpec::Substitution { rules } => {
                let sub = Substitution::from_rules(rules)?;
                let h = usize::try_from(horizon)
                    .map_err(|_| Error::invalid("horizon", "too large to materialize"))?;
                let (mut left, right) = sub.two_sided(h, h + 1)?;
                let origin = left.len();
                left.extend_from_slice(&right);
                Backing::Stored {
                    data: Arc::new(left),
                    origin,
                }
            }
        };
        Ok(SymbolSequence {
            spec,
            alphabet,
            horizon,
            offset: 0,
            backing,
        })
    }

    /// A sequence with [`UNBOUNDED_HORIZON`]; substitutions need an explicit
    /// horizon and are materialized to a million symbols each side.
    pub fn unbounded(spec: SubshiftSpec) -> Result<Self> {
        let horizon = match spec {
            SubshiftSpec::Substitution { .. } => DEFAULT_SAMPLE_LENGTH as u64 * 4,
            _ => UNBOUNDED_HORIZON,
        };
        SymbolSequence::new(spec, horizon)
    }

    pub fn spec(&self) -> &SubshiftSpec {
        &self.spec
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    /// `T^m ω`: position `n` of the result is position `n + m` of `self`.
    /// The horizon shrinks by `|m|` so that every valid index stays backed.
    pub fn shifted(&self, m: i64) -> Result<SymbolSequence> {
        let shrink = m.unsigned_abs();
        if shrink > self.horizon {
            return Err(Error::HorizonExceeded {
                index: m,
                horizon: self.horizon,
            });
        }
        let mut out = self.clone();
        out.offset += m;
        out.horizon -= shrink;
        Ok(out)
    }

    fn check(&self, index: i64) -> Result<()> {
        if index.unsigned_abs() > self.horizon {
            return Err(Error::HorizonExceeded {
                index,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    #[inline]
    fn raw(&self, n: i64) -> u8 {
        let n = n + self.offset;
        match &self.backing {
            Backing::Rotation {
                alpha,
                betas,
                theta,
            } => {
                let x = theta + n as f64 * alpha;
                let x = x - x.floor();
                betas.partition_point(|&b| b <= x) as u8
            }
            Backing::Periodic { word } => word[n.rem_euclid(word.len() as i64) as usize],
            Backing::Stored { data, origin } => data[(*origin as i64 + n) as usize],
        }
    }

    /// Symbol code at position `n`.
    pub fn code_at(&self, n: i64) -> Result<u8> {
        self.check(n)?;
        Ok(self.raw(n))
    }

    pub fn symbol_at(&self, n: i64) -> Result<char> {
        self.code_at(n).map(|c| self.alphabet.symbol(c))
    }

    /// Codes at positions `start … start + len − 1`.
    pub fn codes(&self, start: i64, len: usize) -> Result<Vec<u8>> {
        if len == 0 {
            return Ok(Vec::new());
        }
        self.check(start)?;
        self.check(start + len as i64 - 1)?;
        Ok((start..start + len as i64).map(|n| self.raw(n)).collect())
    }

    /// The word `ω(start) ⋯ ω(start + len − 1)`.
    pub fn segment(&self, start: i64, len: usize) -> Result<String> {
        Ok(self.alphabet.render(&self.codes(start, len)?))
    }
}

/// Empirical cylinder frequencies of length-`word_length` factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub word_length: usize,
    pub sample_length: usize,
    pub entries: BTreeMap<String, f64>,
}

impl FrequencyTable {
    pub fn min_frequency(&self) -> f64 {
        self.entries.values().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn get(&self, word: &str) -> f64 {
        self.entries.get(word).copied().unwrap_or(0.0)
    }

    /// `word,frequency` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("word,frequency\n");
        for (word, freq) in &self.entries {
            out.push_str(&format!("{word},{}\n", crate::fmt_f64(*freq)));
        }
        out
    }
}

/// Counts of each distinct window: `(count, first start position)`.
pub(crate) struct FactorCounts {
    pub counts: Vec<(u64, usize)>,
    pub codes: Vec<u8>,
}

/// Sliding windows of length `n` starting at every position in
/// `[0, sample_length)`.
pub(crate) fn factor_counts(seq: &SymbolSequence, n: usize, sample_length: usize) -> Result<FactorCounts> {
    if n == 0 {
        return Err(Error::invalid("n", "word length must be positive"));
    }
    let codes = seq.codes(0, sample_length + n - 1)?;
    let bits = usize::BITS - (seq.alphabet().len().max(2) - 1).leading_zeros();
    let counts = if n * bits as usize <= 64 {
        count_packed(&codes, n, bits)
    } else {
        count_hashed(&codes, n, sample_length)
    };
    Ok(FactorCounts { counts, codes })
}

fn count_packed(codes: &[u8], n: usize, bits: u32) -> Vec<(u64, usize)> {
    let mask = if n as u32 * bits == 64 {
        u64::MAX
    } else {
        (1u64 << (n as u32 * bits)) - 1
    };
    let mut key = 0u64;
    let mut map: HashMap<u64, (u64, usize)> = HashMap::new();
    for (i, &c) in codes.iter().enumerate() {
        key = ((key << bits) | c as u64) & mask;
        if i + 1 >= n {
            map.entry(key).or_insert((0, i + 1 - n)).0 += 1;
        }
    }
    map.into_values().collect()
}

const MERSENNE_61: u64 = (1 << 61) - 1;

#[inline]
fn mulmod(a: u64, b: u64) -> u64 {
    let p = a as u128 * b as u128;
    let lo = (p as u64) & MERSENNE_61;
    let hi = (p >> 61) as u64;
    let s = lo + hi;
    if s >= MERSENNE_61 {
        s - MERSENNE_61
    } else {
        s
    }
}

/// Double polynomial rolling hash modulo 2⁶¹ − 1.
fn count_hashed(codes: &[u8], n: usize, windows: usize) -> Vec<(u64, usize)> {
    const BASES: [u64; 2] = [1_000_003, 998_244_353];
    let top: Vec<u64> = BASES
        .iter()
        .map(|&b| (1..n).fold(1u64, |acc, _| mulmod(acc, b)))
        .collect();
    let mut h = [0u64; 2];
    for &c in &codes[..n] {
        for j in 0..2 {
            h[j] = (mulmod(h[j], BASES[j]) + c as u64 + 1) % MERSENNE_61;
        }
    }
    let mut map: HashMap<(u64, u64), (u64, usize)> = HashMap::new();
    map.entry((h[0], h[1])).or_insert((0, 0)).0 += 1;
    for start in 1..windows {
        let out = codes[start - 1] as u64 + 1;
        let inc = codes[start + n - 1] as u64 + 1;
        for j in 0..2 {
            let removed = (h[j] + MERSENNE_61 - mulmod(out, top[j])) % MERSENNE_61;
            h[j] = (mulmod(removed, BASES[j]) + inc) % MERSENNE_61;
        }
        map.entry((h[0], h[1])).or_insert((0, start)).0 += 1;
    }
    map.into_values().collect()
}

fn require_sample(sample_length: usize, min: usize, what: &str) -> Result<()> {
    if sample_length < min {
        return Err(Error::invalid(
            "sample_length",
            format!("{what} needs sample_length ≥ {min}, got {sample_length}"),
        ));
    }
    Ok(())
}

/// All distinct length-`n` windows starting in `[0, sample_length)`.
pub fn factors(seq: &SymbolSequence, n: usize, sample_length: usize) -> Result<BTreeSet<String>> {
    require_sample(sample_length, 10 * n, "factors")?;
    let fc = factor_counts(seq, n, sample_length)?;
    Ok(fc
        .counts
        .iter()
        .map(|&(_, pos)| seq.alphabet().render(&fc.codes[pos..pos + n]))
        .collect())
}

/// Relative frequency of each length-`n` factor over the `sample_length`
/// windows starting in `[0, sample_length)`.
pub fn cylinder_frequencies(seq: &SymbolSequence, n: usize, sample_length: usize) -> Result<FrequencyTable> {
    require_sample(sample_length, 100 * n, "cylinder_frequencies")?;
    let fc = factor_counts(seq, n, sample_length)?;
    let total = sample_length as f64;
    let entries = fc
        .counts
        .iter()
        .map(|&(count, pos)| {
            (
                seq.alphabet().render(&fc.codes[pos..pos + n]),
                count as f64 / total,
            )
        })
        .collect();
    Ok(FrequencyTable {
        word_length: n,
        sample_length,
        entries,
    })
}

/// Smallest `q ≤ max_period` with `ω(i) = ω(i + q)` for every `i` with
/// `0 ≤ i < i + q < sample_length`.
pub fn detect_period(seq: &SymbolSequence, max_period: usize, sample_length: usize) -> Result<Option<usize>> {
    require_sample(sample_length, 4 * max_period, "detect_period")?;
    let codes = seq.codes(0, sample_length)?;
    Ok((1..=max_period).find(|&q| codes[q..].iter().zip(&codes).all(|(a, b)| a == b)))
}

/// Words as a one-column CSV.
pub fn words_to_csv(words: &BTreeSet<String>) -> String {
    let mut out = String::from("word\n");
    for w in words {
        out.push_str(w);
        out.push('\n');
    }
    out
}
