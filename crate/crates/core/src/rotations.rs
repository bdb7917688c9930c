//! Continued fractions of rotation numbers and the sufficient conditions
//! under which a two-interval rotation coding satisfies Boshernitzan's
//! condition.
//!
//! A rotation number is written `α = [0; a_1, a_2, …] = 1/(a_1 + 1/(a_2 + …))`
//! with convergents `p_k/q_k`, `p_k = a_k p_{k−1} + p_{k−2}` and likewise for
//! `q_k`, seeded by `(p_{−1}, q_{−1}) = (1, 0)` and `(p_0, q_0) = (0, 1)`.
//!
//! Everything here is a finite-depth verdict: a float cannot certify
//! irrationality or boundedness of an infinite quotient sequence, so every
//! result carries the depth that was inspected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest depth accepted by [`continued_fraction`].
pub const MAX_FLOAT_DEPTH: usize = 40;

/// Default half-width of the `(m, n)` and denominator searches.
pub const DEFAULT_SEARCH_BOUND: u64 = 50;

/// Default tolerance for witness searches.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Partial quotients `a_1 … a_depth` with the convergents `p_k/q_k`,
/// `k = 0 … depth`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContinuedFraction {
    quotients: Vec<u64>,
    convergents: Vec<(u128, u128)>,
}

impl ContinuedFraction {
    /// Build from explicit partial quotients (all ≥ 1).
    pub fn from_quotients(quotients: &[u64]) -> Result<Self> {
        if quotients.is_empty() {
            return Err(Error::invalid("quotients", "at least one partial quotient is required"));
        }
        if let Some(pos) = quotients.iter().position(|&a| a == 0) {
            return Err(Error::invalid(
                format!("quotients[{pos}]"),
                "partial quotients must be positive",
            ));
        }
        let mut convergents = Vec::with_capacity(quotients.len() + 1);
        let (mut p_prev, mut q_prev) = (1u128, 0u128);
        let (mut p, mut q) = (0u128, 1u128);
        convergents.push((p, q));
        for (k, &a) in quotients.iter().enumerate() {
            let a = a as u128;
            let next = a
                .checked_mul(p)
                .and_then(|x| x.checked_add(p_prev))
                .zip(a.checked_mul(q).and_then(|x| x.checked_add(q_prev)));
            let Some((p_next, q_next)) = next else {
                return Err(Error::DepthUnreliable { depth: k });
            };
            (p_prev, q_prev, p, q) = (p, q, p_next, q_next);
            convergents.push((p, q));
        }
        Ok(ContinuedFraction {
            quotients: quotients.to_vec(),
            convergents,
        })
    }

    /// Expand `pattern` cyclically to `depth` quotients, e.g. `[1]` for the
    /// golden mean or `[1, 50]` for an alternating sequence.
    pub fn periodic(pattern: &[u64], depth: usize) -> Result<Self> {
        if pattern.is_empty() {
            return Err(Error::invalid("quotients", "at least one partial quotient is required"));
        }
        if depth == 0 {
            return Err(Error::invalid("depth", "must be positive"));
        }
        let qs: Vec<u64> = pattern.iter().copied().cycle().take(depth).collect();
        ContinuedFraction::from_quotients(&qs)
    }

    pub fn quotients(&self) -> &[u64] {
        &self.quotients
    }

    pub fn depth(&self) -> usize {
        self.quotients.len()
    }

    /// Convergents `(p_k, q_k)` for `k = 0 … depth`.
    pub fn convergents(&self) -> &[(u128, u128)] {
        &self.convergents
    }

    /// Convergent denominators `q_0 = 1, q_1, …, q_depth`.
    pub fn denominators(&self) -> impl Iterator<Item = u128> + '_ {
        self.convergents.iter().map(|&(_, q)| q)
    }

    pub fn max_quotient(&self) -> u64 {
        self.quotients.iter().copied().max().unwrap_or(0)
    }

    /// The value of the truncated expansion, evaluated from the tail.
    pub fn value(&self) -> f64 {
        self.quotients
            .iter()
            .rev()
            .fold(0.0_f64, |tail, &a| 1.0 / (a as f64 + tail))
    }
}

/// Gauss-map expansion of `alpha ∈ (0, 1)` to `depth` partial quotients.
///
/// The uncertainty of the running remainder is propagated through each step
/// (`δ ↦ δ / x²`); once that interval straddles an integer the next quotient
/// is not determined by the float and `DepthUnreliable` is returned.
pub fn continued_fraction(alpha: f64, depth: usize) -> Result<ContinuedFraction> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha", "must lie in (0, 1)"));
    }
    if depth == 0 || depth > MAX_FLOAT_DEPTH {
        return Err(Error::invalid(
            "depth",
            format!("must lie in 1..={MAX_FLOAT_DEPTH}"),
        ));
    }
    let mut x = alpha;
    let mut delta = f64::EPSILON * alpha;
    let mut quotients = Vec::with_capacity(depth);
    for k in 0..depth {
        if x < 1e-300 {
            return Err(Error::DepthUnreliable { depth: k });
        }
        let y = 1.0 / x;
        let dy = delta / (x * x) + f64::EPSILON * y;
        let lo = (y - dy).floor();
        let hi = (y + dy).floor();
        if lo != hi || lo < 1.0 || !y.is_finite() {
            return Err(Error::DepthUnreliable { depth: k });
        }
        quotients.push(lo as u64);
        x = y - lo;
        delta = dy;
    }
    ContinuedFraction::from_quotients(&quotients)
}

/// `true` iff every computed partial quotient is at most `bound`. A
/// finite-depth verdict: [`ContinuedFraction::depth`] says how far it looked.
pub fn has_bounded_quotients(cf: &ContinuedFraction, bound: u64) -> bool {
    cf.quotients.iter().all(|&a| a <= bound)
}

/// Outcome of [`classify_beta`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaClassification {
    pub alpha: f64,
    pub beta: f64,
    /// Number of partial quotients inspected.
    pub depth: usize,
    pub search_bound: u64,
    pub tol: f64,
    /// Witness `(m, n)` with `β = mα + n (mod 1)`.
    pub orbit_witness: Option<(i64, i64)>,
    /// All inspected quotients are `≤ search_bound`.
    pub bounded_quotients: bool,
    pub max_quotient: u64,
    /// Witness `(p, q)` with `β ≈ p/q`, `q ≤ search_bound`, in lowest terms.
    pub rational_witness: Option<(u64, u64)>,
    pub verdict: BetaVerdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaVerdict {
    /// At least one sufficient condition for Boshernitzan's condition holds.
    SupportsB,
    /// None of the testable sufficient conditions holds; the almost-every-β
    /// statement for unbounded quotients has no per-β test.
    Inconclusive,
}

impl BetaClassification {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("classification serializes")
    }
}

/// Test the sufficient conditions for Boshernitzan's condition of the
/// coding of rotation by `α` with partition point `β`:
///
/// * `β = mα + n (mod 1)` for some `|m|, |n| ≤ search_bound`;
/// * `α` has partial quotients bounded by `search_bound` at the inspected depth;
/// * `β` is within `tol` of a rational with denominator `≤ search_bound`.
pub fn classify_beta(
    alpha_cf: &ContinuedFraction,
    beta: f64,
    search_bound: u64,
    tol: f64,
) -> Result<BetaClassification> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::invalid("beta", "must lie in (0, 1)"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    let alpha = alpha_cf.value();
    let bound = search_bound as i64;

    let orbit_witness = std::iter::once(0)
        .chain((1..=bound).flat_map(|m| [m, -m]))
        .find_map(|m| {
            let shift = beta - m as f64 * alpha;
            let n = shift.round();
            ((shift - n).abs() <= tol && n.abs() <= bound as f64).then_some((m, n as i64))
        });

    let rational_witness = (1..=search_bound).find_map(|q| {
        let p = (beta * q as f64).round();
        ((beta - p / q as f64).abs() <= tol).then(|| {
            let g = gcd(p as u64, q);
            (p as u64 / g, q / g)
        })
    });

    let bounded_quotients = has_bounded_quotients(alpha_cf, search_bound);
    let verdict = if orbit_witness.is_some() || bounded_quotients || rational_witness.is_some() {
        BetaVerdict::SupportsB
    } else {
        BetaVerdict::Inconclusive
    };

    Ok(BetaClassification {
        alpha,
        beta,
        depth: alpha_cf.depth(),
        search_bound,
        tol,
        orbit_witness,
        bounded_quotients,
        max_quotient: alpha_cf.max_quotient(),
        rational_witness,
        verdict,
    })
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}
