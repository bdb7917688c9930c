//! Boshernitzan's condition, tested through the scaled minimal cylinder
//! frequency `η(n) = n · min_{|w| = n} ν(V_w)`.
//!
//! The condition asks for `η(l_k) ≥ C > 0` along some sequence `l_k → ∞`.
//! Only finitely many lengths can be inspected, so the scan reports a
//! verdict over the tested lengths together with the rule that produced
//! them and the sample length.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rotations::ContinuedFraction;
use crate::symbolic::{factor_counts, SymbolSequence};

pub const DEFAULT_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoshVerdict {
    /// `η ≥ threshold` on at least half of the lengths, including the largest.
    SupportsB,
    /// Some, but not enough, lengths qualify.
    Weak,
    /// No tested length qualifies.
    Inconclusive,
}

impl BoshVerdict {
    fn rank(self) -> u8 {
        match self {
            BoshVerdict::SupportsB => 2,
            BoshVerdict::Weak => 1,
            BoshVerdict::Inconclusive => 0,
        }
    }

    /// `true` if `self` is at least as strong as `other`.
    pub fn at_least(self, other: BoshVerdict) -> bool {
        self.rank() >= other.rank()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoshReport {
    pub lengths: Vec<usize>,
    pub eta: Vec<f64>,
    pub verdict: BoshVerdict,
    /// Smallest `η` among the qualifying lengths: the largest `C` with
    /// `η(l) ≥ C` along them.
    pub constant_estimate: Option<f64>,
    pub threshold: f64,
    pub sample_length: usize,
    /// How the tested lengths were chosen.
    pub length_rule: String,
}

impl BoshReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `n,eta` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,eta\n");
        for (n, e) in self.lengths.iter().zip(&self.eta) {
            out.push_str(&format!("{n},{}\n", crate::fmt_f64(*e)));
        }
        out
    }
}

/// `n` times the smallest empirical frequency among the length-`n` factors
/// observed in `sample_length` windows. Unobserved words do not enter.
pub fn eta(seq: &SymbolSequence, n: usize, sample_length: usize) -> Result<f64> {
    if sample_length < 100 * n {
        return Err(Error::invalid(
            "sample_length",
            format!("eta needs sample_length ≥ {}, got {sample_length}", 100 * n),
        ));
    }
    let fc = factor_counts(seq, n, sample_length)?;
    let min_count = fc.counts.iter().map(|&(c, _)| c).min().unwrap_or(0);
    Ok(n as f64 * min_count as f64 / sample_length as f64)
}

/// Evaluate `η` along `lengths` and summarize.
pub fn bosh_scan(
    seq: &SymbolSequence,
    lengths: &[usize],
    sample_length: usize,
    threshold: f64,
) -> Result<BoshReport> {
    if lengths.is_empty() {
        return Err(Error::invalid("lengths", "at least one length is required"));
    }
    if lengths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("lengths", "must be strictly increasing"));
    }
    let eta: Vec<f64> = lengths
        .iter()
        .map(|&n| eta(seq, n, sample_length))
        .collect::<Result<_>>()?;
    Ok(summarize(lengths.to_vec(), eta, threshold, sample_length, "explicit".into()))
}

pub(crate) fn summarize(
    lengths: Vec<usize>,
    eta: Vec<f64>,
    threshold: f64,
    sample_length: usize,
    length_rule: String,
) -> BoshReport {
    let qualifying: Vec<f64> = eta.iter().copied().filter(|&e| e >= threshold).collect();
    let largest_ok = eta.last().is_some_and(|&e| e >= threshold);
    let verdict = if largest_ok && 2 * qualifying.len() >= eta.len() {
        BoshVerdict::SupportsB
    } else if !qualifying.is_empty() {
        BoshVerdict::Weak
    } else {
        BoshVerdict::Inconclusive
    };
    let constant_estimate = qualifying.into_iter().reduce(f64::min);
    BoshReport {
        lengths,
        eta,
        verdict,
        constant_estimate,
        threshold,
        sample_length,
        length_rule,
    }
}

/// Distinct convergent denominators `q_k` with `1 ≤ q_k ≤ max_length`, the
/// natural candidates for `l_k` in a rotation coding.
pub fn convergent_lengths(cf: &ContinuedFraction, max_length: usize) -> Vec<usize> {
    let mut out: Vec<usize> = cf
        .denominators()
        .filter(|&q| q >= 1 && q <= max_length as u128)
        .map(|q| q as usize)
        .collect();
    out.dedup();
    out
}

/// Powers of two up to `max_length`.
pub fn dyadic_lengths(max_length: usize) -> Vec<usize> {
    std::iter::successors(Some(1usize), |&n| n.checked_mul(2))
        .take_while(|&n| n <= max_length)
        .collect()
}

/// Default length sequence: convergent denominators for rotation codings,
/// powers of two otherwise. Lengths are capped at `sample_length / 100`.
pub fn default_lengths(seq: &SymbolSequence, sample_length: usize) -> (Vec<usize>, String) {
    let cap = (sample_length / 100).max(1);
    match seq.spec().rotation_cf() {
        Some(cf) => (
            convergent_lengths(&cf, cap),
            format!("convergent denominators q_k ≤ {cap}"),
        ),
        None => (dyadic_lengths(cap), format!("powers of two ≤ {cap}")),
    }
}

/// [`bosh_scan`] over [`default_lengths`], recording the length rule.
pub fn bosh_scan_default(seq: &SymbolSequence, sample_length: usize, threshold: f64) -> Result<BoshReport> {
    let (lengths, rule) = default_lengths(seq, sample_length);
    let mut report = bosh_scan(seq, &lengths, sample_length, threshold)?;
    report.length_rule = rule;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::SubshiftSpec;

    #[test]
    fn periodic_eta() {
        let seq = SymbolSequence::unbounded(SubshiftSpec::periodic("ab")).unwrap();
        assert_eq!(eta(&seq, 2, 1000).unwrap(), 1.0);
        let r = bosh_scan(&seq, &[2, 4, 8], 10_000, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(r.verdict, BoshVerdict::SupportsB);
        assert_eq!(r.constant_estimate, Some(1.0));
        assert!(r.to_csv().starts_with("n,eta\n2,1.0000000000000000e0\n"));
    }

    #[test]
    fn golden_letter_eta() {
        let seq = SymbolSequence::unbounded(SubshiftSpec::golden_sturmian()).unwrap();
        let e = eta(&seq, 1, 1_000_000).unwrap();
        assert!((e - 0.381_966_011_250_105_1).abs() < 1e-3);
    }

    #[test]
    fn verdict_rules() {
        let r = summarize(vec![1, 2, 3, 4], vec![0.3, 0.05, 0.2, 0.4], 0.1, 1, String::new());
        assert_eq!(r.verdict, BoshVerdict::SupportsB);
        assert_eq!(r.constant_estimate, Some(0.2));
        let r = summarize(vec![1, 2, 3, 4], vec![0.3, 0.05, 0.2, 0.01], 0.1, 1, String::new());
        assert_eq!(r.verdict, BoshVerdict::Weak);
        let r = summarize(vec![1, 2], vec![0.01, 0.02], 0.1, 1, String::new());
        assert_eq!(r.verdict, BoshVerdict::Inconclusive);
        assert_eq!(r.constant_estimate, None);
    }

    #[test]
    fn scan_rejects_bad_lengths() {
        let seq = SymbolSequence::unbounded(SubshiftSpec::periodic("ab")).unwrap();
        assert!(bosh_scan(&seq, &[], 1000, 0.1).is_err());
        assert!(bosh_scan(&seq, &[4, 2], 1000, 0.1).is_err());
    }

    #[test]
    fn length_rules() {
        let cf = ContinuedFraction::periodic(&[1], 40).unwrap();
        assert_eq!(
            convergent_lengths(&cf, 233),
            vec![1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233]
        );
        assert_eq!(dyadic_lengths(10), vec![1, 2, 4, 8]);
    }
}
