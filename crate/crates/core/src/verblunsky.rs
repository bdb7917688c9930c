//! Locally constant maps from subshift points to Verblunsky coefficients.
//!
//! `α_n(ω) = f(Tⁿω)` where `f` only looks at the window
//! `ω(−N) ⋯ ω(N)`, so `f` is a finite table from length-`(2N+1)` words to
//! the open unit disk.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbolic::{Alphabet, SymbolSequence};

/// Every coefficient must satisfy `|α| ≤ 1 − DISK_MARGIN`.
pub const DISK_MARGIN: f64 = 1e-6;

/// `(1 − |α|²)^{1/2}`, factored to keep precision near the unit circle.
pub fn rho(alpha: Complex64) -> f64 {
    let r = alpha.norm();
    ((1.0 - r) * (1.0 + r)).sqrt()
}

fn check_disk(field: &str, value: Complex64) -> Result<()> {
    if !(value.re.is_finite() && value.im.is_finite()) || value.norm() > 1.0 - DISK_MARGIN {
        return Err(Error::invalid(
            field,
            format!("|α| = {} exceeds 1 − {DISK_MARGIN:e}", value.norm()),
        ));
    }
    Ok(())
}

/// One `(word, re, im)` table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapEntry(pub String, pub f64, pub f64);

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMap {
    window: usize,
    #[serde(default)]
    entries: Vec<MapEntry>,
    #[serde(default)]
    default: Option<Complex64>,
}

/// Locally constant `f` with window `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMap", into = "RawMap")]
pub struct VerblunskyMap {
    window: usize,
    words: Vec<String>,
    values: Vec<Complex64>,
    default: Option<Complex64>,
    lookup: HashMap<String, usize>,
}

impl TryFrom<RawMap> for VerblunskyMap {
    type Error = Error;

    fn try_from(raw: RawMap) -> Result<Self> {
        VerblunskyMap::new(
            raw.window,
            raw.entries
                .into_iter()
                .map(|MapEntry(w, re, im)| (w, Complex64::new(re, im)))
                .collect(),
            raw.default,
        )
    }
}

impl From<VerblunskyMap> for RawMap {
    fn from(map: VerblunskyMap) -> Self {
        RawMap {
            window: map.window,
            entries: map
                .words
                .iter()
                .zip(&map.values)
                .map(|(w, v)| MapEntry(w.clone(), v.re, v.im))
                .collect(),
            default: map.default,
        }
    }
}

impl VerblunskyMap {
    pub fn new(window: usize, entries: Vec<(String, Complex64)>, default: Option<Complex64>) -> Result<Self> {
        let width = 2 * window + 1;
        let mut lookup = HashMap::with_capacity(entries.len());
        let mut words = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        for (k, (word, value)) in entries.into_iter().enumerate() {
            if word.chars().count() != width {
                return Err(Error::invalid(
                    format!("entries[{k}]"),
                    format!("word `{word}` must have length 2N+1 = {width}"),
                ));
            }
            check_disk(&format!("entries[{k}]"), value)?;
            if lookup.insert(word.clone(), k).is_some() {
                return Err(Error::invalid(
                    format!("entries[{k}]"),
                    format!("duplicate word `{word}`"),
                ));
            }
            words.push(word);
            values.push(value);
        }
        if let Some(d) = default {
            check_disk("default", d)?;
        }
        Ok(VerblunskyMap {
            window,
            words,
            values,
            default,
            lookup,
        })
    }

    /// Window-zero map reading one symbol: `f(ω) = table[ω(0)]`. With the
    /// alphabet itself a subset of the disk this is `f(ω) = ω(0)`.
    pub fn single_site(table: &[(char, Complex64)]) -> Result<Self> {
        VerblunskyMap::new(
            0,
            table.iter().map(|&(c, v)| (c.to_string(), v)).collect(),
            None,
        )
    }

    /// `f ≡ value`.
    pub fn constant(value: Complex64) -> Result<Self> {
        VerblunskyMap::new(0, Vec::new(), Some(value))
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn default_value(&self) -> Option<Complex64> {
        self.default
    }

    /// Distinct table values followed by the default (if any).
    pub fn value_table(&self) -> Vec<Complex64> {
        let mut v = self.values.clone();
        v.extend(self.default);
        v
    }

    /// `true` if every table value and the default are real.
    pub fn is_real(&self) -> bool {
        self.value_table().iter().all(|v| v.im == 0.0)
    }

    /// `f` on a window word of length `2N + 1`.
    pub fn evaluate_word(&self, word: &str) -> Result<Complex64> {
        if word.chars().count() != 2 * self.window + 1 {
            return Err(Error::invalid(
                "word",
                format!("expected {} symbols, got `{word}`", 2 * self.window + 1),
            ));
        }
        self.lookup_word(word)
    }

    fn lookup_word(&self, word: &str) -> Result<Complex64> {
        match self.lookup.get(word) {
            Some(&k) => Ok(self.values[k]),
            None => self.default.ok_or_else(|| Error::UnmappedWord {
                word: word.to_string(),
            }),
        }
    }

    /// `α_n = f(Tⁿω)`.
    pub fn evaluate(&self, seq: &SymbolSequence, n: i64) -> Result<Complex64> {
        let w = self.window as i64;
        let word = seq.segment(n - w, self.window * 2 + 1)?;
        self.lookup_word(&word)
    }

    /// `α_n` and `ρ_n` for `n ∈ [lo, hi]`.
    pub fn coefficient_sequence(&self, seq: &SymbolSequence, lo: i64, hi: i64) -> Result<CoefficientSequence> {
        if lo > hi {
            return Err(Error::invalid("range", format!("lo = {lo} exceeds hi = {hi}")));
        }
        let bound = self.bind(seq.alphabet())?;
        let len = (hi - lo + 1) as usize;
        let idx = bound.indices(seq, lo, len)?;
        let table = self.value_table();
        CoefficientSequence::new(lo, idx.iter().map(|&k| table[k as usize]).collect())
    }

    /// Compile the table against `alphabet` for fast sequential evaluation.
    pub fn bind(&self, alphabet: &Alphabet) -> Result<BoundMap> {
        let width = 2 * self.window + 1;
        let base = alphabet.len() as u64;
        let fits = (0..width).try_fold(1u64, |acc, _| acc.checked_mul(base)).is_some();
        if !fits {
            return Err(Error::invalid(
                "window",
                "window too wide to index for this alphabet",
            ));
        }
        let mut codes = HashMap::with_capacity(self.words.len());
        for (k, word) in self.words.iter().enumerate() {
            let symbols = alphabet.encode(word).ok_or_else(|| {
                Error::invalid(
                    format!("entries[{k}]"),
                    format!("word `{word}` uses symbols outside the alphabet"),
                )
            })?;
            let key = symbols.iter().fold(0u64, |acc, &c| acc * base + c as u64);
            codes.insert(key, k as u32);
        }
        Ok(BoundMap {
            window: self.window,
            base,
            modulus: base.pow(width as u32 - 1),
            codes,
            default_index: self.default.map(|_| self.values.len() as u32),
            alphabet: alphabet.clone(),
        })
    }
}

/// A [`VerblunskyMap`] keyed by packed window codes of one alphabet.
#[derive(Debug, Clone)]
pub struct BoundMap {
    window: usize,
    base: u64,
    /// `base^(2N)`, the weight of the leading symbol.
    modulus: u64,
    codes: HashMap<u64, u32>,
    default_index: Option<u32>,
    alphabet: Alphabet,
}

impl BoundMap {
    /// Indices into [`VerblunskyMap::value_table`] for positions
    /// `lo … lo + len − 1`.
    pub fn indices(&self, seq: &SymbolSequence, lo: i64, len: usize) -> Result<Vec<u32>> {
        let w = self.window as i64;
        let width = 2 * self.window + 1;
        let symbols = seq.codes(lo - w, len + 2 * self.window)?;
        let mut out = Vec::with_capacity(len);
        let mut key = symbols[..width - 1]
            .iter()
            .fold(0u64, |acc, &c| acc * self.base + c as u64);
        for i in 0..len {
            let incoming = symbols[i + width - 1] as u64;
            key = key * self.base + incoming;
            let idx = match self.codes.get(&key) {
                Some(&k) => k,
                None => self.default_index.ok_or_else(|| Error::UnmappedWord {
                    word: self.alphabet.render(&symbols[i..i + width]),
                })?,
            };
            out.push(idx);
            key %= self.modulus;
        }
        Ok(out)
    }
}

/// `α_n`, `ρ_n` for `n ∈ [lo, lo + len)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSequence {
    lo: i64,
    values: Vec<Complex64>,
    rho: Vec<f64>,
}

impl CoefficientSequence {
    pub fn new(lo: i64, values: Vec<Complex64>) -> Result<Self> {
        for (k, &v) in values.iter().enumerate() {
            check_disk(&format!("alpha[{}]", lo + k as i64), v)?;
        }
        let rho = values.iter().map(|&a| rho(a)).collect();
        Ok(CoefficientSequence { lo, values, rho })
    }

    /// `α_n ≡ value` on `[lo, hi]`.
    pub fn constant(value: Complex64, lo: i64, hi: i64) -> Result<Self> {
        CoefficientSequence::new(lo, vec![value; (hi - lo + 1).max(0) as usize])
    }

    /// Periodic extension of `period_values` (index 0 at `n = 0`) to `[lo, hi]`.
    pub fn periodic(period_values: &[Complex64], lo: i64, hi: i64) -> Result<Self> {
        let p = period_values.len() as i64;
        CoefficientSequence::new(
            lo,
            (lo..=hi)
                .map(|n| period_values[n.rem_euclid(p) as usize])
                .collect(),
        )
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    /// Last covered index (`lo − 1` when empty).
    pub fn hi(&self) -> i64 {
        self.lo + self.values.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn covers(&self, lo: i64, hi: i64) -> bool {
        lo >= self.lo && hi <= self.hi()
    }

    pub fn require(&self, lo: i64, hi: i64) -> Result<()> {
        if self.covers(lo, hi) {
            Ok(())
        } else {
            Err(Error::InsufficientCoefficients {
                have_lo: self.lo,
                have_hi: self.hi(),
                need_lo: lo,
                need_hi: hi,
            })
        }
    }

    /// `α_n`; panics outside the covered range.
    pub fn alpha(&self, n: i64) -> Complex64 {
        self.values[(n - self.lo) as usize]
    }

    /// `ρ_n`; panics outside the covered range.
    pub fn rho(&self, n: i64) -> f64 {
        self.rho[(n - self.lo) as usize]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn rhos(&self) -> &[f64] {
        &self.rho
    }
}
