//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use ergodic_opuc::boshernitzan::{bosh_scan, BoshVerdict};
use ergodic_opuc::cmv::{
    approximant_coefficients, build_cmv, discriminant_bands, eigenphases, CmvVariant,
};
use ergodic_opuc::cocycle::{dichotomy_directions, lyapunov_grid, szego_matrix, CocycleFamily, SzegoCocycle};
use ergodic_opuc::mat2::{projective_distance, vec_norm};
use ergodic_opuc::rotations::ContinuedFraction;
use ergodic_opuc::spectrum::{scan, Classification, Thresholds};
use ergodic_opuc::symbolic::{SubshiftSpec, SymbolSequence};
use ergodic_opuc::verblunsky::{rho, CoefficientSequence, VerblunskyMap};
use ergodic_opuc::Error;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check, Duration);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: Error) -> String {
    e.to_string()
}

fn constant_family(a: f64) -> CocycleFamily {
    CocycleFamily::new(SubshiftSpec::periodic("a"), VerblunskyMap::constant(c(a)).unwrap()).unwrap()
}

fn fibonacci_family() -> CocycleFamily {
    CocycleFamily::new(
        SubshiftSpec::golden_sturmian(),
        VerblunskyMap::single_site(&[('a', c(0.5)), ('b', c(-0.5))]).unwrap(),
    )
    .unwrap()
}

fn group_structure() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let f = Complex64::from_polar(rng.gen_range(0.0..=0.999), rng.gen_range(0.0..TAU));
        let z = Complex64::from_polar(1.0, rng.gen_range(0.0..TAU));
        let m = szego_matrix(f, z);
        let r = m.normalize_det().and_then(|n| n.conjugate_to_sl2r()).map_err(err)?;
        let e = m
            .form_defect()
            .max((m.det() - z).norm())
            .max(r.max_imag())
            .max((r.det() - c(1.0)).norm());
        worst = worst.max(e);
    }
    ensure(worst <= 1e-9, || format!("worst deviation {worst:e}"))?;
    Ok(format!("10000 pairs, worst deviation {worst:.1e}"))
}

fn free_case() -> Check {
    let fam = CocycleFamily::new(
        SubshiftSpec::golden_sturmian(),
        VerblunskyMap::single_site(&[('a', c(0.0)), ('b', c(0.0))]).unwrap(),
    )
    .unwrap();
    let rows = lyapunov_grid(&fam, 16, 1_000_000, 8).map_err(err)?;
    let gamma = rows.iter().map(|r| r.gamma.abs()).fold(0.0, f64::max);
    let defect = rows.iter().map(|r| r.defect).fold(0.0, f64::max);
    ensure(gamma <= 1e-12, || format!("|gamma| = {gamma:e}"))?;
    ensure(defect == 0.0, || format!("defect = {defect:e}"))?;
    let report = scan(&fam, 1024, 10_000, 8, &Thresholds::default()).map_err(err)?;
    ensure((report.measure_estimate - TAU).abs() <= 1e-12, || {
        format!("measure {}", report.measure_estimate)
    })?;
    Ok(format!("max |gamma| {gamma:.1e}, measure {:.12}", report.measure_estimate))
}

fn constant_oracle() -> Check {
    let fam = constant_family(0.5);
    let gamma = fam.lyapunov(c(1.0), 100_000, 8).map_err(err)?.gamma;
    let target = 3f64.sqrt().ln();
    ensure((gamma - target).abs() <= 1e-4, || format!("gamma(1) = {gamma}"))?;

    let coeffs = CoefficientSequence::constant(c(0.5), 0, 0).map_err(err)?;
    let bands = discriminant_bands(&coeffs, 1, 65_536).map_err(err)?;
    ensure(bands.bands.len() == 1, || format!("bands {:?}", bands.bands))?;
    let (lo, hi) = bands.bands[0];
    ensure((lo - PI / 3.0).abs() <= 1e-8 && (hi - 5.0 * PI / 3.0).abs() <= 1e-8, || {
        format!("band [{lo}, {hi}]")
    })?;

    let report = scan(&fam, 1024, 10_000, 8, &Thresholds::default()).map_err(err)?;
    let measure = report.measure_estimate;
    ensure((measure - 4.0 * PI / 3.0).abs() <= 0.1, || format!("scan measure {measure}"))?;

    let big = CoefficientSequence::constant(c(0.5), 0, 511).map_err(err)?;
    let op = build_cmv(&big, 512, CmvVariant::HalfLine).map_err(err)?;
    let eig = eigenphases(&op).map_err(err)?;
    let inside = eig.phases.iter().filter(|&&t| bands.distance(t) <= 0.05).count();
    let frac = inside as f64 / eig.phases.len() as f64;
    ensure(frac >= 0.95, || format!("eigenphases in band: {inside}/512"))?;
    Ok(format!(
        "gamma(1) {gamma:.7}, band [{lo:.10}, {hi:.10}], scan {measure:.4}, eigenphases {inside}/512"
    ))
}

fn cmv_structure() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let values: Vec<Complex64> = (0..64)
            .map(|_| Complex64::from_polar(rng.gen_range(0.0..0.999), rng.gen_range(0.0..TAU)))
            .collect();
        let cs = CoefficientSequence::new(0, values.clone()).map_err(err)?;
        let op = build_cmv(&cs, 64, CmvVariant::HalfLine).map_err(err)?;
        let cols = op.interior_columns();
        for j in cols.clone() {
            for k in j..cols.end {
                let dot: Complex64 = (0..64).map(|i| op.get(i, j).conj() * op.get(i, k)).sum();
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((dot - c(target)).norm());
            }
        }
        let expected = values[1].conj() * rho(values[0]);
        ensure(op.get(0, 1) == expected, || {
            format!("entry (0,1) = {} but conj(a1)·rho0 = {expected}", op.get(0, 1))
        })?;
    }
    ensure(worst <= 1e-10, || format!("orthonormality defect {worst:e}"))?;
    Ok(format!("100 sequences, orthonormality defect {worst:.1e}, entry (0,1) exact"))
}

fn boshernitzan() -> Check {
    let golden = SymbolSequence::unbounded(SubshiftSpec::golden_sturmian()).map_err(err)?;
    let fib = [1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233];
    let r = bosh_scan(&golden, &fib, 1_000_000, 0.1).map_err(err)?;
    let min = r.eta.iter().copied().fold(f64::INFINITY, f64::min);
    ensure(min >= 0.2, || format!("golden min eta {min}"))?;
    ensure(r.verdict == BoshVerdict::SupportsB, || format!("golden verdict {:?}", r.verdict))?;

    let spec = SubshiftSpec::RotationCoding {
        quotients: vec![1, 50],
        depth: 10,
        betas: vec![0.3],
        theta: 0.0,
        symbols: None,
    };
    let cf = ContinuedFraction::periodic(&[1, 50], 10).map_err(err)?;
    let mut lengths: Vec<usize> = cf
        .denominators()
        .filter(|&q| (2..=5000).contains(&q))
        .flat_map(|q| [q as usize, q as usize + 1, q as usize + 2])
        .collect();
    lengths.sort_unstable();
    lengths.dedup();
    let seq = SymbolSequence::unbounded(spec).map_err(err)?;
    let big = bosh_scan(&seq, &lengths, 1_000_000, 0.1).map_err(err)?;
    let (dip_at, dip) = big
        .lengths
        .iter()
        .zip(&big.eta)
        .map(|(&l, &e)| (l, e))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    ensure(dip < 0.05, || format!("large-quotient min eta {dip} at {dip_at}"))?;
    Ok(format!("golden min eta {min:.4} (SupportsB), large-quotient eta({dip_at}) = {dip:.4}"))
}

fn measure_trend() -> Check {
    let fam = fibonacci_family();
    let mut measures = Vec::new();
    for k in 4..=8 {
        let cs = approximant_coefficients(&fam.subshift, &fam.map, k).map_err(err)?;
        measures.push(discriminant_bands(&cs, cs.len(), 65_536).map_err(err)?.total_measure);
    }
    ensure(measures.windows(2).all(|w| w[1] < w[0]), || format!("band measures {measures:?}"))?;
    let ratio = measures[4] / measures[0];
    ensure(ratio < 0.6, || format!("order 8 / order 4 = {ratio}"))?;

    let coarse = scan(&fam, 1024, 1000, 8, &Thresholds::default()).map_err(err)?;
    let fine = scan(&fam, 1024, 10_000, 8, &Thresholds::default()).map_err(err)?;
    ensure(fine.measure_estimate < coarse.measure_estimate, || {
        format!("scan {} at 1e3, {} at 1e4", coarse.measure_estimate, fine.measure_estimate)
    })?;
    let undecided = fine.count(Classification::Undecided) as f64 / 1024.0;
    ensure(undecided < 0.02, || format!("undecided fraction {undecided}"))?;
    Ok(format!(
        "bands {:.4} → {:.4} (ratio {ratio:.3}), scan {:.4} → {:.4}, undecided {:.2}%",
        measures[0],
        measures[4],
        coarse.measure_estimate,
        fine.measure_estimate,
        100.0 * undecided
    ))
}

fn dichotomy() -> Check {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let seq = SymbolSequence::unbounded(SubshiftSpec::periodic("a")).map_err(err)?;
    let map = VerblunskyMap::constant(c(0.5)).map_err(err)?;
    let co = SzegoCocycle::new(map.clone(), seq.clone(), c(1.0)).map_err(err)?;
    let mut worst_angle: f64 = 0.0;
    let mut worst_margin = f64::INFINITY;
    for n in (100..=1000).step_by(100) {
        let d = dichotomy_directions(&co, n).map_err(err)?;
        worst_angle = worst_angle
            .max(projective_distance(&d.stable, &[c(s), c(s)]))
            .max(projective_distance(&d.unstable, &[c(s), c(-s)]));
        for m in 1..=n {
            let p = co.transfer(m as i64).map_err(err)?;
            let log_len = p.log_scale + vec_norm(&p.mat.apply(&d.stable)).ln();
            worst_margin = worst_margin.min(-d.decay_rate_estimate * m as f64 / 2.0 - log_len);
        }
    }
    ensure(worst_angle <= 1e-6, || format!("direction error {worst_angle:e}"))?;
    ensure(worst_margin >= 0.0, || format!("contraction bound violated by {}", -worst_margin))?;
    let minus = SzegoCocycle::new(map, seq, c(-1.0)).map_err(err)?;
    match dichotomy_directions(&minus, 1000) {
        Err(Error::DegenerateSplit { .. }) => {}
        other => return Err(format!("z = -1 gave {other:?}")),
    }
    Ok(format!("direction error {worst_angle:.1e}, contraction margin ≥ {worst_margin:.3}, z = -1 degenerate"))
}

fn run_opuc(cmd: &str, config: &Path, out: &Path) -> Result<i32, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_opuc"))
        .args([cmd, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    let code = o.status.code().unwrap_or(-1);
    if code == 1 {
        return Err(format!("{cmd}: {}", String::from_utf8_lossy(&o.stderr)));
    }
    Ok(code)
}

fn snapshot(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let bytes = fs::read(&path).map_err(|e| e.to_string())?;
        files.push((path.file_name().unwrap().to_string_lossy().into_owned(), bytes));
    }
    files.sort();
    Ok(files)
}

fn determinism() -> Check {
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let config = dir.path().join("config.json");
    fs::write(
        &config,
        r#"{
  "subshift": {"kind": "rotation_coding", "quotients": [1], "depth": 40, "betas": [0.3819660112501051]},
  "map": {"window": 0, "entries": [["a", 0.5, 0.0], ["b", -0.5, 0.0]]},
  "grid": 64, "steps": 2000, "samples": 8, "sample_length": 100000,
  "approximant_order": 5, "band_grid": 4096, "cmv_size": 64
}"#,
    )
    .map_err(|e| e.to_string())?;
    let commands = ["bosh", "lyapunov", "spectrum", "classify-beta", "cmv-eig"];
    let mut files = 0;
    for cmd in commands {
        let a = dir.path().join(format!("{cmd}-1"));
        let b = dir.path().join(format!("{cmd}-2"));
        let (ca, cb) = (run_opuc(cmd, &config, &a)?, run_opuc(cmd, &config, &b)?);
        ensure(ca == cb, || format!("{cmd}: exit codes {ca} and {cb}"))?;
        let (sa, sb) = (snapshot(&a)?, snapshot(&b)?);
        ensure(!sa.is_empty(), || format!("{cmd}: no outputs"))?;
        ensure(sa == sb, || format!("{cmd}: outputs differ"))?;
        files += sa.len();
    }
    Ok(format!("5 commands, {files} files byte-identical"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("group structure", group_structure, Duration::from_secs(5)),
        ("free-case exactness", free_case, Duration::from_secs(10)),
        ("constant-coefficient oracle", constant_oracle, Duration::from_secs(120)),
        ("CMV structure", cmv_structure, Duration::from_secs(5)),
        ("Boshernitzan diagnostics", boshernitzan, Duration::from_secs(60)),
        ("measure trend", measure_trend, Duration::from_secs(600)),
        ("dichotomy", dichotomy, Duration::from_secs(5)),
        ("determinism", determinism, Duration::MAX),
    ];
    let mut failed = 0;
    for (k, (name, check, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = match result {
            Ok(detail) if elapsed > limit => Err(format!("{detail}; over time limit {limit:?}")),
            r => r,
        };
        match result {
            Ok(detail) => println!("criterion {} ({name}): PASS [{elapsed:.2?}] {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL [{elapsed:.2?}] {why}", k + 1);
            }
        }
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
