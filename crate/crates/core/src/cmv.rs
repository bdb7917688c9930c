//! CMV matrices: finite truncations of the half-line operator `𝒞 = ℒℳ` and
//! of the two-sided operator `ℰ = ℒ̃ℳ̃`, their eigenvalues, and the band
//! spectra of periodic coefficient sequences.
//!
//! With `Θ_n = [[ᾱ_n, ρ_n], [ρ_n, −α_n]]`, `ℒ = Θ_0 ⊕ Θ_2 ⊕ …` and
//! `ℳ = 1 ⊕ Θ_1 ⊕ Θ_3 ⊕ …`. On the line, `ℒ̃` and `ℳ̃` carry `Θ_n` on rows
//! `(n, n + 1)` for every even (resp. odd) `n`.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cocycle::szego_matrix;
use crate::error::{Error, Result};
use crate::mat2::Mat2C;
use crate::symbolic::SubshiftSpec;
use crate::verblunsky::{CoefficientSequence, VerblunskyMap};

/// Largest truncation accepted by [`eigenphases`].
pub const MAX_EIGEN_SIZE: usize = 4096;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CmvVariant {
    /// Top-left `size × size` block of `𝒞`, indices `0 … size − 1`.
    HalfLine,
    /// Block of `ℰ` on indices `s … s + size − 1`, `s` even and close to
    /// `−size/2`.
    ExtendedTruncated,
}

impl CmvVariant {
    /// First index of the truncation window.
    pub fn start(self, size: usize) -> i64 {
        match self {
            CmvVariant::HalfLine => 0,
            CmvVariant::ExtendedTruncated => (-(size as i64) / 2).div_euclid(2) * 2,
        }
    }

    /// Coefficient indices `[lo, hi]` the truncation reads.
    pub fn required_range(self, size: usize) -> (i64, i64) {
        let s = self.start(size);
        match self {
            CmvVariant::HalfLine => (0, size as i64 - 1),
            CmvVariant::ExtendedTruncated => (s - 1, s + size as i64 - 1),
        }
    }
}

/// A five-diagonal truncation. Row `i` is stored as the entries in columns
/// `i − 2 … i + 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CmvOperator {
    size: usize,
    variant: CmvVariant,
    start: i64,
    band: Vec<[Complex64; 5]>,
}

impl CmvOperator {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn variant(&self) -> CmvVariant {
        self.variant
    }

    /// Coefficient index of row and column 0.
    pub fn start(&self) -> i64 {
        self.start
    }

    /// Entry at local row `i`, column `j`.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let d = j as i64 - i as i64 + 2;
        if i >= self.size || j >= self.size || !(0..5).contains(&d) {
            return ZERO;
        }
        self.band[i][d as usize]
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.size, self.size, |i, j| self.get(i, j))
    }

    /// Columns whose full support lies inside the truncation.
    pub fn interior_columns(&self) -> std::ops::Range<usize> {
        let lo = match self.variant {
            CmvVariant::HalfLine => 0,
            CmvVariant::ExtendedTruncated => 2,
        };
        lo..self.size.saturating_sub(2).max(lo)
    }

    /// Nonzero entries as `row,col,re,im` lines, row-major.
    pub fn to_triplets(&self) -> String {
        let mut out = String::from("row,col,re,im\n");
        for i in 0..self.size {
            for j in i.saturating_sub(2)..(i + 3).min(self.size) {
                let v = self.get(i, j);
                if v != ZERO {
                    out.push_str(&format!(
                        "{i},{j},{},{}\n",
                        crate::fmt_f64(v.re),
                        crate::fmt_f64(v.im)
                    ));
                }
            }
        }
        out
    }
}

/// Entry `(r, c)` of the block-diagonal factor whose `Θ` blocks start at
/// indices of parity `parity`.
fn factor_entry(coeffs: &CoefficientSequence, half_line_m: bool, parity: i64, r: i64, c: i64) -> Complex64 {
    if half_line_m && r == 0 && c == 0 {
        return ONE;
    }
    let b = r - (r - parity).rem_euclid(2);
    match (r - b, c - b) {
        (0, 0) => coeffs.alpha(b).conj(),
        (0, 1) | (1, 0) => Complex64::new(coeffs.rho(b), 0.0),
        (1, 1) => -coeffs.alpha(b),
        _ => ZERO,
    }
}

/// Truncation of `𝒞` or `ℰ` built from `coeffs`.
pub fn build_cmv(coeffs: &CoefficientSequence, size: usize, variant: CmvVariant) -> Result<CmvOperator> {
    if size == 0 {
        return Err(Error::invalid("size", "must be positive"));
    }
    let (need_lo, need_hi) = variant.required_range(size);
    coeffs.require(need_lo, need_hi)?;
    let s = variant.start(size);
    let end = s + size as i64;
    let half = variant == CmvVariant::HalfLine;
    let mut band = vec![[ZERO; 5]; size];
    for (row, entries) in band.iter_mut().enumerate() {
        let i = s + row as i64;
        // The ℒ-block containing row i.
        let b = i - i.rem_euclid(2);
        for k in [b, b + 1].into_iter().filter(|k| (s..end).contains(k)) {
            let l = factor_entry(coeffs, false, 0, i, k);
            if l == ZERO {
                continue;
            }
            for j in (i - 2).max(s)..(i + 3).min(end) {
                let m = factor_entry(coeffs, half, 1, k, j);
                entries[(j - i + 2) as usize] += l * m;
            }
        }
    }
    Ok(CmvOperator {
        size,
        variant,
        start: s,
        band,
    })
}

/// Eigenvalues of a truncation, sorted by phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenphases {
    /// `arg λ` in `[0, 2π)`.
    pub phases: Vec<f64>,
    /// `|λ|`, aligned with `phases`.
    pub moduli: Vec<f64>,
}

impl Eigenphases {
    /// `phase,modulus` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("phase,modulus\n");
        for (p, m) in self.phases.iter().zip(&self.moduli) {
            out.push_str(&format!("{},{}\n", crate::fmt_f64(*p), crate::fmt_f64(*m)));
        }
        out
    }
}

/// Dense complex Schur decomposition of the truncation.
pub fn eigenphases(op: &CmvOperator) -> Result<Eigenphases> {
    if op.size() > MAX_EIGEN_SIZE {
        return Err(Error::invalid(
            "size",
            format!("eigensolve limited to {MAX_EIGEN_SIZE}, got {}", op.size()),
        ));
    }
    let schur = nalgebra::linalg::Schur::try_new(op.to_dense(), 1e-15, 100 * op.size() + 1000)
        .ok_or_else(|| Error::EigensolveFailure("Schur iteration did not converge".into()))?;
    let values = schur
        .eigenvalues()
        .ok_or_else(|| Error::EigensolveFailure("Schur form not triangular".into()))?;
    let mut pairs: Vec<(f64, f64)> = values
        .iter()
        .map(|v| (v.arg().rem_euclid(TAU), v.norm()))
        .collect();
    if pairs.iter().any(|(p, m)| !p.is_finite() || !m.is_finite()) {
        return Err(Error::EigensolveFailure("non-finite eigenvalue".into()));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(Eigenphases {
        phases: pairs.iter().map(|p| p.0).collect(),
        moduli: pairs.iter().map(|p| p.1).collect(),
    })
}

/// Spectrum of a periodic CMV operator: a union of closed arcs of `∂𝔻`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSpectrum {
    /// Period used for the discriminant (odd inputs are doubled).
    pub period: usize,
    /// Disjoint arcs `[θ_lo, θ_hi]`, sorted, inside `[0, 2π]`.
    pub bands: Vec<(f64, f64)>,
    pub total_measure: f64,
}

impl BandSpectrum {
    pub fn contains(&self, theta: f64) -> bool {
        let t = theta.rem_euclid(TAU);
        self.bands.iter().any(|&(lo, hi)| lo <= t && t <= hi)
    }

    /// Distance from `theta` to the nearest band, along the circle.
    pub fn distance(&self, theta: f64) -> f64 {
        let t = theta.rem_euclid(TAU);
        self.bands
            .iter()
            .map(|&(lo, hi)| {
                if lo <= t && t <= hi {
                    0.0
                } else {
                    let d_lo = (lo - t).rem_euclid(TAU);
                    let d_hi = (t - hi).rem_euclid(TAU);
                    d_lo.min(d_hi)
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// `theta_lo,theta_hi` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta_lo,theta_hi\n");
        for (lo, hi) in &self.bands {
            out.push_str(&format!("{},{}\n", crate::fmt_f64(*lo), crate::fmt_f64(*hi)));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bands serialize")
    }
}

/// Imaginary parts of `Δ` above this, relative to `max(1, |Δ|)`, count as
/// non-real.
pub const REAL_TOL: f64 = 1e-8;
/// Grid points with `|Δ| − 2` below this count as inside a band.
pub const EDGE_TOL: f64 = 1e-9;
/// Band edges are bisected to this width in `θ`.
pub const EDGE_RESOLUTION: f64 = 1e-10;

/// `Δ(θ) = tr(e^{−iθp/2} A_{e^{iθ}}(p))` for one period.
pub fn discriminant(period_values: &[Complex64], theta: f64) -> Complex64 {
    let z = Complex64::from_polar(1.0, theta);
    let mut prod = Mat2C::IDENTITY;
    for &a in period_values {
        prod = szego_matrix(a, z).matmul(&prod);
    }
    let p = period_values.len() as f64;
    Complex64::from_polar(1.0, -theta * p / 2.0) * prod.trace()
}

/// Bands `{θ : |Δ(θ)| ≤ 2}` of the sequence with period `period` whose
/// values are `coeffs[lo … lo + period − 1]`, located on a `grid_size`
/// grid and refined by bisection.
pub fn discriminant_bands(coeffs: &CoefficientSequence, period: usize, grid_size: usize) -> Result<BandSpectrum> {
    if period == 0 {
        return Err(Error::invalid("period", "must be positive"));
    }
    if grid_size < 2 {
        return Err(Error::invalid("grid_size", "need at least 2 points"));
    }
    coeffs.require(coeffs.lo(), coeffs.lo() + period as i64 - 1)?;
    let mut values = coeffs.values()[..period].to_vec();
    if period % 2 == 1 {
        values.extend_from_within(..);
    }
    let period = values.len();

    let step = TAU / grid_size as f64;
    let deltas: Vec<Complex64> = (0..grid_size)
        .map(|k| discriminant(&values, k as f64 * step))
        .collect();
    let is_real = |d: &Complex64| d.im.abs() <= REAL_TOL * d.norm().max(1.0);
    let bad = deltas.iter().filter(|d| !is_real(d)).count();
    if bad * 1000 > grid_size {
        return Err(Error::NonRealDiscriminant {
            bad,
            total: grid_size,
        });
    }
    let inside: Vec<bool> = deltas
        .iter()
        .map(|d| is_real(d) && d.re.abs() - 2.0 <= EDGE_TOL)
        .collect();
    let excess = |theta: f64| discriminant(&values, theta).re.abs() - 2.0;
    // Edge between grid points k (state `from`) and k + 1.
    let refine = |k: usize, entering: bool| -> f64 {
        let (mut a, mut b) = (k as f64 * step, (k + 1) as f64 * step);
        while b - a > EDGE_RESOLUTION {
            let m = 0.5 * (a + b);
            let m_inside = excess(m) <= EDGE_TOL;
            if m_inside == entering {
                b = m;
            } else {
                a = m;
            }
        }
        0.5 * (a + b)
    };

    let mut bands = Vec::new();
    if inside.iter().all(|&x| x) {
        bands.push((0.0, TAU));
    } else if inside.iter().any(|&x| x) {
        // Start the sweep just after an outside point so no run wraps
        // within the sweep.
        let first_out = inside.iter().position(|&x| !x).unwrap();
        let mut open: Option<f64> = None;
        for offset in 1..=grid_size {
            let k = first_out + offset;
            let (prev, cur) = (inside[(k - 1) % grid_size], inside[k % grid_size]);
            match (prev, cur) {
                (false, true) => open = Some(refine(k - 1, true)),
                (true, false) => {
                    let lo = open.take().expect("band opened");
                    bands.push((lo, refine(k - 1, false)));
                }
                _ => {}
            }
        }
        // Reduce to [0, 2π), splitting arcs that cross 0.
        let mut reduced = Vec::new();
        for (lo, hi) in bands {
            let (lo_r, hi_r) = (lo.rem_euclid(TAU), hi - (lo - lo.rem_euclid(TAU)));
            if hi_r > TAU {
                reduced.push((lo_r, TAU));
                reduced.push((0.0, hi_r - TAU));
            } else {
                reduced.push((lo_r, hi_r));
            }
        }
        reduced.sort_by(|a, b| a.0.total_cmp(&b.0));
        bands = reduced;
    }
    let total_measure = bands.iter().map(|(lo, hi)| hi - lo).sum();
    Ok(BandSpectrum {
        period,
        bands,
        total_measure,
    })
}

/// One period of the order-`k` periodic approximant, passed through `map`.
///
/// For a rotation coding this is the coding of the rotation by `p_k/q_k`
/// with the same partition, started half a grid step past `θ` so that no
/// orbit point sits on a partition boundary. A periodic subshift is its own
/// approximant at every order.
pub fn approximant_coefficients(
    spec: &SubshiftSpec,
    map: &VerblunskyMap,
    order: usize,
) -> Result<CoefficientSequence> {
    spec.validate()?;
    let alphabet = spec.alphabet()?;
    let word: Vec<char> = match spec {
        SubshiftSpec::RotationCoding { betas, theta, .. } => {
            let cf = spec.rotation_cf().expect("rotation coding");
            let (p, q) = *cf
                .convergents()
                .get(order)
                .ok_or(Error::DepthUnreliable { depth: order })?;
            if q > 1 << 24 {
                return Err(Error::invalid("order", format!("period {q} too large")));
            }
            (0..q)
                .map(|n| {
                    let x = theta + ((n * p) % q) as f64 / q as f64 + 0.5 / q as f64;
                    let x = x - x.floor();
                    alphabet.symbol(betas.partition_point(|&b| b <= x) as u8)
                })
                .collect()
        }
        SubshiftSpec::Periodic { word } => word.chars().collect(),
        SubshiftSpec::Substitution { .. } => {
            return Err(Error::invalid(
                "subshift",
                "approximants need a rotation coding or a periodic word",
            ))
        }
    };
    let q = word.len() as i64;
    let w = map.window() as i64;
    let values = (0..q)
        .map(|n| {
            let window: String = (n - w..=n + w)
                .map(|m| word[m.rem_euclid(q) as usize])
                .collect();
            map.evaluate_word(&window)
        })
        .collect::<Result<Vec<_>>>()?;
    CoefficientSequence::new(0, values)
}
