//! Spectrum estimation on a grid of `∂𝔻`.
//!
//! A point `z` is outside the essential support exactly when `A_z` is
//! uniform with `γ(A_z) > 0`. Each grid point is classified from a finite
//! Lyapunov estimate and its spread over base points.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cmv::BandSpectrum;
use crate::cocycle::{check_estimator_args, CocycleFamily, LyapunovEstimate, SampledFamily};
use crate::error::{Error, Result};
use crate::symbolic::SubshiftSpec;
use crate::verblunsky::VerblunskyMap;

/// Smallest accepted scan grid.
pub const MIN_GRID: usize = 64;

pub const DEFAULT_DEFECT_CAP: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    /// `γ` clearly positive and uniform over base points.
    Resolvent,
    /// `γ` below the estimator's resolution.
    SpectrumCandidate,
    /// `γ` positive but spread across base points.
    Undecided,
}

impl Classification {
    pub fn name(self) -> &'static str {
        match self {
            Classification::Resolvent => "Resolvent",
            Classification::SpectrumCandidate => "SpectrumCandidate",
            Classification::Undecided => "Undecided",
        }
    }

    /// Counted toward the measure estimate.
    pub fn is_spectral(self) -> bool {
        self != Classification::Resolvent
    }
}

/// Classification thresholds. `gamma_floor = None` means `10/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default)]
    pub gamma_floor: Option<f64>,
    #[serde(default = "default_defect_cap")]
    pub defect_cap: f64,
}

fn default_defect_cap() -> f64 {
    DEFAULT_DEFECT_CAP
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            gamma_floor: None,
            defect_cap: DEFAULT_DEFECT_CAP,
        }
    }
}

impl Thresholds {
    /// `(gamma_floor, defect_cap)` for an `n`-step estimate.
    pub fn resolve(&self, n: usize) -> Result<(f64, f64)> {
        let floor = self.gamma_floor.unwrap_or(10.0 / n as f64);
        if !(floor > 0.0 && floor.is_finite()) {
            return Err(Error::invalid("gamma_floor", "must be positive"));
        }
        if !(self.defect_cap > 0.0 && self.defect_cap.is_finite()) {
            return Err(Error::invalid("defect_cap", "must be positive"));
        }
        Ok((floor, self.defect_cap))
    }
}

/// Classification rule applied to one estimate.
pub fn classify_estimate(est: &LyapunovEstimate, gamma_floor: f64, defect_cap: f64) -> Classification {
    if est.gamma < gamma_floor {
        Classification::SpectrumCandidate
    } else if est.defect <= defect_cap * est.gamma {
        Classification::Resolvent
    } else {
        Classification::Undecided
    }
}

/// Classify `z` from `n` steps over `samples` base points.
pub fn classify_point(
    family: &CocycleFamily,
    z: Complex64,
    n: usize,
    samples: usize,
    thresholds: &Thresholds,
) -> Result<Classification> {
    let (floor, cap) = thresholds.resolve(n)?;
    let est = family.lyapunov(z, n, samples)?;
    Ok(classify_estimate(&est, floor, cap))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub theta: f64,
    pub gamma: f64,
    pub defect: f64,
    pub class: Classification,
}

/// Everything that determines a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanParameters {
    pub subshift: SubshiftSpec,
    pub map: VerblunskyMap,
    pub grid_size: usize,
    pub n: usize,
    pub samples: usize,
    pub gamma_floor: f64,
    pub defect_cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub grid_size: usize,
    /// Sorted by `θ_k = 2πk / grid_size`.
    pub rows: Vec<SpectrumRow>,
    /// `(2π / grid_size) · #(SpectrumCandidate ∪ Undecided)`.
    pub measure_estimate: f64,
    pub parameters: ScanParameters,
}

impl SpectrumReport {
    pub fn count(&self, class: Classification) -> usize {
        self.rows.iter().filter(|r| r.class == class).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `theta,gamma,defect,class` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,gamma,defect,class\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                crate::fmt_f64(r.theta),
                crate::fmt_f64(r.gamma),
                crate::fmt_f64(r.defect),
                r.class.name()
            ));
        }
        out
    }

    /// Whitespace-separated `theta gamma` columns for plotting tools.
    pub fn to_plot(&self) -> String {
        let mut out = String::from("# theta gamma\n");
        for r in &self.rows {
            out.push_str(&format!("{} {}\n", crate::fmt_f64(r.theta), crate::fmt_f64(r.gamma)));
        }
        out
    }
}

/// Grid angle `θ_k`.
pub fn grid_theta(k: usize, grid_size: usize) -> f64 {
    TAU * k as f64 / grid_size as f64
}

/// Classify every grid point. The base-point orbits are sampled once and
/// shared by all grid points.
pub fn scan(
    family: &CocycleFamily,
    grid_size: usize,
    n: usize,
    samples: usize,
    thresholds: &Thresholds,
) -> Result<SpectrumReport> {
    if grid_size < MIN_GRID {
        return Err(Error::invalid(
            "grid",
            format!("grid size must be at least {MIN_GRID}, got {grid_size}"),
        ));
    }
    let (floor, cap) = thresholds.resolve(n)?;
    check_estimator_args(n, samples)?;
    let sampled = family.sample(n, samples)?;
    let rows = scan_sampled(&sampled, grid_size, n, floor, cap)?;
    let spectral = rows.iter().filter(|r| r.class.is_spectral()).count();
    Ok(SpectrumReport {
        grid_size,
        rows,
        measure_estimate: TAU / grid_size as f64 * spectral as f64,
        parameters: ScanParameters {
            subshift: family.subshift.clone(),
            map: family.map.clone(),
            grid_size,
            n,
            samples,
            gamma_floor: floor,
            defect_cap: cap,
        },
    })
}

fn scan_sampled(
    sampled: &SampledFamily,
    grid_size: usize,
    n: usize,
    floor: f64,
    cap: f64,
) -> Result<Vec<SpectrumRow>> {
    (0..grid_size)
        .into_par_iter()
        .map(|k| {
            let theta = grid_theta(k, grid_size);
            let est = sampled.lyapunov(Complex64::from_polar(1.0, theta), n)?;
            Ok(SpectrumRow {
                theta,
                gamma: est.gamma,
                defect: est.defect,
                class: classify_estimate(&est, floor, cap),
            })
        })
        .collect()
}

/// Measure estimates of one family at increasing step counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub n: usize,
    pub measure_estimate: f64,
    pub undecided_fraction: f64,
}

/// One [`scan`] per entry of `n_list`.
pub fn measure_trend(
    family: &CocycleFamily,
    grid_size: usize,
    n_list: &[usize],
    samples: usize,
    thresholds: &Thresholds,
) -> Result<Vec<TrendPoint>> {
    n_list
        .iter()
        .map(|&n| {
            let r = scan(family, grid_size, n, samples, thresholds)?;
            Ok(TrendPoint {
                n,
                measure_estimate: r.measure_estimate,
                undecided_fraction: r.count(Classification::Undecided) as f64 / grid_size as f64,
            })
        })
        .collect()
}

/// How well a scan and a band spectrum agree on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandAgreement {
    /// Fraction of grid points where "spectral" (SpectrumCandidate or
    /// Undecided) coincides with band membership.
    pub agreement: f64,
    pub matched: usize,
    pub total: usize,
    /// Maximal runs of disagreeing grid points, as `[θ_first, θ_last]`.
    pub disagreements: Vec<(f64, f64)>,
}

impl BandAgreement {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("agreement serializes")
    }
}

pub fn compare_with_bands(report: &SpectrumReport, bands: &BandSpectrum) -> BandAgreement {
    let agree: Vec<bool> = report
        .rows
        .iter()
        .map(|r| r.class.is_spectral() == bands.contains(r.theta))
        .collect();
    let matched = agree.iter().filter(|&&a| a).count();
    let mut disagreements = Vec::new();
    let mut run: Option<(f64, f64)> = None;
    for (r, &ok) in report.rows.iter().zip(&agree) {
        match (ok, run.as_mut()) {
            (false, Some(arc)) => arc.1 = r.theta,
            (false, None) => run = Some((r.theta, r.theta)),
            (true, _) => disagreements.extend(run.take()),
        }
    }
    disagreements.extend(run);
    let total = agree.len();
    BandAgreement {
        agreement: if total == 0 { 1.0 } else { matched as f64 / total as f64 },
        matched,
        total,
        disagreements,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmv::discriminant_bands;
    use crate::verblunsky::CoefficientSequence;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn constant_family(v: f64) -> CocycleFamily {
        CocycleFamily::new(SubshiftSpec::periodic("a"), VerblunskyMap::constant(c(v)).unwrap()).unwrap()
    }

    #[test]
    fn classify_constant_points() {
        let t = Thresholds::default();
        let fam = constant_family(0.5);
        assert_eq!(classify_point(&fam, c(1.0), 10_000, 8, &t).unwrap(), Classification::Resolvent);
        assert_eq!(
            classify_point(&fam, c(-1.0), 10_000, 8, &t).unwrap(),
            Classification::SpectrumCandidate
        );
        let free = constant_family(0.0);
        let z = Complex64::from_polar(1.0, 2.0);
        assert_eq!(
            classify_point(&free, z, 1000, 8, &t).unwrap(),
            Classification::SpectrumCandidate
        );
    }

    #[test]
    fn classification_rule() {
        let est = |gamma, defect| LyapunovEstimate {
            z: c(1.0),
            theta: 0.0,
            n: 1000,
            gamma,
            defect,
            samples: 8,
        };
        assert_eq!(classify_estimate(&est(0.005, 0.0), 0.01, 0.5), Classification::SpectrumCandidate);
        assert_eq!(classify_estimate(&est(0.1, 0.05), 0.01, 0.5), Classification::Resolvent);
        assert_eq!(classify_estimate(&est(0.1, 0.06), 0.01, 0.5), Classification::Undecided);
    }

    #[test]
    fn threshold_validation() {
        assert_eq!(Thresholds::default().resolve(1000).unwrap(), (0.01, 0.5));
        let bad = Thresholds { gamma_floor: Some(0.0), defect_cap: 0.5 };
        assert!(bad.resolve(1000).is_err());
        let bad = Thresholds { gamma_floor: None, defect_cap: -1.0 };
        assert!(bad.resolve(1000).is_err());
    }

    #[test]
    fn free_scan_is_all_spectrum() {
        let r = scan(&constant_family(0.0), 256, 1000, 8, &Thresholds::default()).unwrap();
        assert_eq!(r.rows.len(), 256);
        assert_eq!(r.count(Classification::SpectrumCandidate), 256);
        assert!((r.measure_estimate - TAU).abs() < 1e-12);
        let bands = discriminant_bands(&CoefficientSequence::constant(c(0.0), 0, 0).unwrap(), 1, 256).unwrap();
        let a = compare_with_bands(&r, &bands);
        assert_eq!(a.agreement, 1.0);
        assert!(a.disagreements.is_empty());
    }

    #[test]
    fn constant_half_scan_matches_band() {
        let fam = constant_family(0.5);
        let r = scan(&fam, 1024, 10_000, 8, &Thresholds::default()).unwrap();
        assert!((r.measure_estimate - 4.0 * PI / 3.0).abs() < 0.1, "{}", r.measure_estimate);
        let bands = discriminant_bands(&CoefficientSequence::constant(c(0.5), 0, 0).unwrap(), 1, 1024).unwrap();
        let a = compare_with_bands(&r, &bands);
        assert!(a.agreement >= 0.98, "{a:?}");
        assert!(r.rows.windows(2).all(|w| w[0].theta < w[1].theta));
    }

    #[test]
    fn raising_the_floor_never_shrinks_the_estimate() {
        let fam = constant_family(0.5);
        let mut last = 0.0;
        for floor in [0.001, 0.01, 0.1, 0.3, 0.6] {
            let t = Thresholds { gamma_floor: Some(floor), defect_cap: 0.5 };
            let m = scan(&fam, 128, 1000, 8, &t).unwrap().measure_estimate;
            assert!(m >= last);
            last = m;
        }
    }

    #[test]
    fn scan_preconditions() {
        let fam = constant_family(0.5);
        assert!(scan(&fam, 63, 1000, 8, &Thresholds::default()).is_err());
        assert!(scan(&fam, 64, 999, 8, &Thresholds::default()).is_err());
    }

    #[test]
    fn report_exports() {
        let r = scan(&constant_family(0.0), 64, 1000, 8, &Thresholds::default()).unwrap();
        let csv = r.to_csv();
        assert!(csv.starts_with("theta,gamma,defect,class\n0.0000000000000000e0,"));
        assert!(csv.lines().nth(1).unwrap().ends_with(",SpectrumCandidate"));
        assert_eq!(csv.lines().count(), 65);
        assert!(r.to_plot().starts_with("# theta gamma\n"));
        let back: SpectrumReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn disagreement_arcs() {
        let r = scan(&constant_family(0.0), 64, 1000, 8, &Thresholds::default()).unwrap();
        let bands = BandSpectrum { period: 2, bands: vec![(0.0, PI)], total_measure: PI };
        let a = compare_with_bands(&r, &bands);
        assert_eq!(a.matched, 33);
        assert_eq!(a.disagreements, vec![(grid_theta(33, 64), grid_theta(63, 64))]);
    }
}
