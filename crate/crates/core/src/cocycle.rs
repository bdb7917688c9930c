//! The Szegő cocycle
//!
//! ```text
//! A_z(ω) = (1 − |f(ω)|²)^{-1/2} · (  z    −f̄(ω) )
//!                                 ( −f(ω)z   1   )
//! ```
//!
//! its transfer products `A_z(n, ω)`, Lyapunov exponents, the spread of
//! finite-`n` estimates over base points (the uniformity defect), and the
//! stable/unstable directions of an exponential dichotomy.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat2::{projective_distance, LogScaledProduct, Mat2C, Vec2C};
use crate::symbolic::{SubshiftSpec, SymbolSequence};
use crate::verblunsky::{rho, BoundMap, VerblunskyMap};

/// `|z| = 1` must hold to this accuracy.
pub const CIRCLE_TOL: f64 = 1e-12;

/// Minimum step count accepted by the Lyapunov estimators.
pub const MIN_STEPS: usize = 1_000;

/// Minimum number of base points accepted by the Lyapunov estimators.
pub const MIN_SAMPLES: usize = 8;

/// One-step matrix `A_z` for coefficient `f`.
pub fn szego_matrix(f: Complex64, z: Complex64) -> Mat2C {
    let scale = Complex64::new(rho(f).recip(), 0.0);
    Mat2C::new(z, -f.conj(), -f * z, Complex64::new(1.0, 0.0)).scale(scale)
}

fn check_circle(z: Complex64) -> Result<()> {
    if !((z.norm() - 1.0).abs() <= CIRCLE_TOL) {
        return Err(Error::invalid("z", format!("|z| = {} is not 1", z.norm())));
    }
    Ok(())
}

/// `A_z` over one base point `ω`.
#[derive(Debug, Clone)]
pub struct SzegoCocycle {
    map: VerblunskyMap,
    bound: BoundMap,
    seq: SymbolSequence,
    z: Complex64,
}

impl SzegoCocycle {
    pub fn new(map: VerblunskyMap, seq: SymbolSequence, z: Complex64) -> Result<Self> {
        check_circle(z)?;
        let bound = map.bind(seq.alphabet())?;
        Ok(SzegoCocycle { map, bound, seq, z })
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    pub fn sequence(&self) -> &SymbolSequence {
        &self.seq
    }

    /// The cocycle over `T^m ω`.
    pub fn shifted(&self, m: i64) -> Result<Self> {
        Ok(SzegoCocycle {
            map: self.map.clone(),
            bound: self.bound.clone(),
            seq: self.seq.shifted(m)?,
            z: self.z,
        })
    }

    /// `A_z(Tⁿω)`.
    pub fn one_step(&self, n: i64) -> Result<Mat2C> {
        Ok(szego_matrix(self.map.evaluate(&self.seq, n)?, self.z))
    }

    /// `A_z(n, ω)`: `A(T^{n−1}ω) ⋯ A(ω)` for `n > 0`, the identity for
    /// `n = 0`, and `A(Tⁿω)^{−1} ⋯ A(T^{−1}ω)^{−1}` for `n < 0`.
    pub fn transfer(&self, n: i64) -> Result<LogScaledProduct> {
        let table: Vec<Mat2C> = self
            .map
            .value_table()
            .iter()
            .map(|&f| szego_matrix(f, self.z))
            .collect();
        let mut p = LogScaledProduct::identity();
        if n > 0 {
            for k in self.bound.indices(&self.seq, 0, n as usize)? {
                p.absorb(&table[k as usize]);
            }
        } else if n < 0 {
            let inverses: Vec<Mat2C> = table.iter().map(Mat2C::inverse).collect();
            let idx = self.bound.indices(&self.seq, n, n.unsigned_abs() as usize)?;
            // idx[0] is position n, idx.last() is position −1.
            for &k in idx.iter().rev() {
                p.absorb(&inverses[k as usize]);
            }
        }
        Ok(p)
    }
}

/// A Lyapunov estimate at one spectral parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub z: Complex64,
    /// `arg z` in `[0, 2π)`.
    pub theta: f64,
    pub n: usize,
    /// Mean over base points of `(1/n) ln ‖A_z(n, ω)‖`, in nats per step.
    pub gamma: f64,
    /// `max − min` of the per-base-point estimates.
    pub defect: f64,
    pub samples: usize,
}

impl LyapunovEstimate {
    pub fn csv_header() -> &'static str {
        "theta,gamma,defect,n,samples"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            crate::fmt_f64(self.theta),
            crate::fmt_f64(self.gamma),
            crate::fmt_f64(self.defect),
            self.n,
            self.samples
        )
    }
}

pub fn estimates_to_csv(rows: &[LyapunovEstimate]) -> String {
    let mut out = format!("{}\n", LyapunovEstimate::csv_header());
    for r in rows {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

fn theta_of(z: Complex64) -> f64 {
    z.arg().rem_euclid(std::f64::consts::TAU)
}

/// The pair `(f, Ω)`: one Szegő cocycle per spectral parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocycleFamily {
    pub subshift: SubshiftSpec,
    pub map: VerblunskyMap,
}

impl CocycleFamily {
    pub fn new(subshift: SubshiftSpec, map: VerblunskyMap) -> Result<Self> {
        subshift.validate()?;
        map.bind(&subshift.alphabet()?)?;
        Ok(CocycleFamily { subshift, map })
    }

    /// Coefficient indices along `samples` base points, `steps` positions each.
    pub fn sample(&self, steps: usize, samples: usize) -> Result<SampledFamily> {
        if samples == 0 || steps == 0 {
            return Err(Error::invalid("samples", "steps and samples must be positive"));
        }
        let points = self
            .subshift
            .sample_points(samples, steps, self.map.window())?;
        let bound = self.map.bind(&self.subshift.alphabet()?)?;
        let orbits = points
            .iter()
            .map(|seq| bound.indices(seq, 0, steps))
            .collect::<Result<Vec<_>>>()?;
        Ok(SampledFamily {
            values: self.map.value_table(),
            orbits,
        })
    }

    /// Lyapunov estimate at `z` from `n` steps over `samples` base points.
    pub fn lyapunov(&self, z: Complex64, n: usize, samples: usize) -> Result<LyapunovEstimate> {
        check_estimator_args(n, samples)?;
        self.sample(n, samples)?.lyapunov(z, n)
    }

    /// Estimates at each `n` in the increasing list `n_list`; the defect
    /// sequence is the uniformity diagnostic.
    pub fn uniformity_profile(
        &self,
        z: Complex64,
        n_list: &[usize],
        samples: usize,
    ) -> Result<Vec<LyapunovEstimate>> {
        if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("n_list", "must be nonempty and strictly increasing"));
        }
        check_estimator_args(n_list[0], samples)?;
        self.sample(*n_list.last().unwrap(), samples)?
            .profile(z, n_list)
    }
}

/// Estimates at `θ_k = 2πk/grid`, `k = 0 … grid − 1`, sharing one set of
/// sampled orbits. Grid points run in parallel; output is ordered by `k`.
pub fn lyapunov_grid(family: &CocycleFamily, grid: usize, n: usize, samples: usize) -> Result<Vec<LyapunovEstimate>> {
    if grid == 0 {
        return Err(Error::invalid("grid", "must be positive"));
    }
    check_estimator_args(n, samples)?;
    let sampled = family.sample(n, samples)?;
    (0..grid)
        .into_par_iter()
        .map(|k| {
            let theta = std::f64::consts::TAU * k as f64 / grid as f64;
            let mut est = sampled.lyapunov(Complex64::from_polar(1.0, theta), n)?;
            est.theta = theta;
            Ok(est)
        })
        .collect()
}

pub(crate) fn check_estimator_args(n: usize, samples: usize) -> Result<()> {
    if n < MIN_STEPS {
        return Err(Error::invalid("steps", format!("need at least {MIN_STEPS} steps, got {n}")));
    }
    if samples < MIN_SAMPLES {
        return Err(Error::invalid(
            "samples",
            format!("need at least {MIN_SAMPLES} samples, got {samples}"),
        ));
    }
    Ok(())
}

/// Precomputed coefficient orbits; independent of `z`, so one sampling
/// serves a whole grid scan.
#[derive(Debug, Clone)]
pub struct SampledFamily {
    values: Vec<Complex64>,
    orbits: Vec<Vec<u32>>,
}

impl SampledFamily {
    pub fn samples(&self) -> usize {
        self.orbits.len()
    }

    pub fn steps(&self) -> usize {
        self.orbits.first().map_or(0, Vec::len)
    }

    /// Estimate from the first `n` steps of every orbit.
    pub fn lyapunov(&self, z: Complex64, n: usize) -> Result<LyapunovEstimate> {
        Ok(self.profile(z, &[n])?.remove(0))
    }

    /// Estimates at every checkpoint of `n_list` from a single pass.
    pub fn profile(&self, z: Complex64, n_list: &[usize]) -> Result<Vec<LyapunovEstimate>> {
        check_circle(z)?;
        let last = *n_list.last().ok_or_else(|| Error::invalid("n_list", "empty"))?;
        if last > self.steps() || n_list[0] == 0 {
            return Err(Error::invalid(
                "steps",
                format!("checkpoints must lie in 1..={}", self.steps()),
            ));
        }
        let table: Vec<Mat2C> = self.values.iter().map(|&f| szego_matrix(f, z)).collect();
        // rates[checkpoint][sample]
        let mut rates = vec![Vec::with_capacity(self.samples()); n_list.len()];
        for orbit in &self.orbits {
            let mut p = LogScaledProduct::identity();
            let mut done = 0;
            for (slot, &n) in n_list.iter().enumerate() {
                absorb_run(&mut p, &table, &orbit[done..n]);
                done = n;
                rates[slot].push(p.log_norm() / n as f64);
            }
        }
        Ok(n_list
            .iter()
            .zip(rates)
            .map(|(&n, r)| summarize(z, n, &r))
            .collect())
    }
}

/// Steps between renormalizations in [`absorb_run`]. With `|f| ≤ 1 − 10⁻⁶`
/// a factor has norm below 1.5·10³, so a run cannot overflow.
const RENORM_EVERY: usize = 16;

/// Left-multiply `p` by `table[k]` for each `k` in `codes`, rescaling by
/// the Frobenius norm every [`RENORM_EVERY`] steps.
fn absorb_run(p: &mut LogScaledProduct, table: &[Mat2C], codes: &[u32]) {
    for chunk in codes.chunks(RENORM_EVERY) {
        let mut m = p.mat;
        for &k in chunk {
            m = table[k as usize].matmul(&m);
        }
        let norm = m.frobenius_sq().sqrt();
        p.mat = m.scale(Complex64::new(norm.recip(), 0.0));
        p.log_scale += norm.ln();
    }
}

fn summarize(z: Complex64, n: usize, rates: &[f64]) -> LyapunovEstimate {
    let mean = rates.iter().sum::<f64>() / rates.len() as f64;
    let max = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = rates.iter().copied().fold(f64::INFINITY, f64::min);
    LyapunovEstimate {
        z,
        theta: theta_of(z),
        n,
        gamma: mean,
        defect: max - min,
        samples: rates.len(),
    }
}

/// Stable and unstable directions at the base point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyDirections {
    /// Least-stretched right singular vector of `A(n, ω)`.
    pub stable: Vec2C,
    /// Least-stretched right singular vector of `A(−n, ω)`.
    pub unstable: Vec2C,
    /// `−(1/n) ln ‖A(n, ω) · stable‖`.
    pub decay_rate_estimate: f64,
    /// `σ_max / σ_min` of `A(n, ω)`, in log form.
    pub log_singular_ratio: f64,
    pub n: usize,
}

/// A dichotomy needs the singular values of `A(n, ω)` to differ by at least
/// this factor.
pub const SPLIT_RATIO: f64 = 2.0;

/// Finite-`n` stable/unstable splitting.
pub fn dichotomy_directions(c: &SzegoCocycle, n: usize) -> Result<DichotomyDirections> {
    if n < 100 {
        return Err(Error::invalid("steps", format!("need at least 100 steps, got {n}")));
    }
    let forward = c.transfer(n as i64)?;
    let backward = c.transfer(-(n as i64))?;
    let (fwd_top, fwd_bottom) = forward.log_singular_values();
    let (bwd_top, bwd_bottom) = backward.log_singular_values();
    let split = fwd_top - fwd_bottom;
    for gap in [split, bwd_top - bwd_bottom] {
        if gap < SPLIT_RATIO.ln() {
            return Err(Error::DegenerateSplit { ratio: gap.exp() });
        }
    }
    let stable = forward.mat.right_singular_vectors().1;
    let unstable = backward.mat.right_singular_vectors().1;
    if projective_distance(&stable, &unstable) < 1e-6_f64.sin() {
        return Err(Error::DegenerateSplit { ratio: split.exp() });
    }
    Ok(DichotomyDirections {
        stable,
        unstable,
        decay_rate_estimate: -fwd_bottom / n as f64,
        log_singular_ratio: split,
        n,
    })
}
