//! Configuration handling and subcommands behind the `opuc` binary.
//!
//! A run reads one JSON [`RunConfig`], applies command-line overrides,
//! resolves defaults, and writes its outputs into a directory. Every output
//! file starts with the resolved configuration, so results describe
//! themselves.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use ergodic_opuc::boshernitzan::{self, BoshVerdict};
use ergodic_opuc::cmv::{self, CmvVariant};
use ergodic_opuc::cocycle::{self, CocycleFamily};
use ergodic_opuc::rotations;
use ergodic_opuc::spectrum::{self, Thresholds};
use ergodic_opuc::symbolic::{SubshiftSpec, SymbolSequence};
use ergodic_opuc::verblunsky::VerblunskyMap;
use ergodic_opuc::Error as CoreError;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const DEFAULT_OUT: &str = "opuc-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Bosh,
    Lyapunov,
    Spectrum,
    ClassifyBeta,
    CmvEig,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Bosh => "bosh",
            Command::Lyapunov => "lyapunov",
            Command::Spectrum => "spectrum",
            Command::ClassifyBeta => "classify-beta",
            Command::CmvEig => "cmv-eig",
        }
    }
}

/// The configuration document. Only `subshift` is always required; `map`
/// is required by the commands that build cocycles or CMV matrices.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub subshift: Option<Value>,
    pub map: Option<Value>,
    pub out: Option<PathBuf>,
    pub grid: Option<usize>,
    pub steps: Option<usize>,
    pub samples: Option<usize>,
    pub sample_length: Option<usize>,
    pub lengths: Option<Vec<usize>>,
    pub threshold: Option<f64>,
    pub gamma_floor: Option<f64>,
    pub defect_cap: Option<f64>,
    pub approximant_order: Option<usize>,
    pub band_grid: Option<usize>,
    pub beta: Option<f64>,
    pub search_bound: Option<u64>,
    pub tol: Option<f64>,
    pub cmv_size: Option<usize>,
    pub cmv_variant: Option<CmvVariant>,
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub grid: Option<usize>,
    pub steps: Option<usize>,
    pub samples: Option<usize>,
}

/// A failed run; always exit status 1.
#[derive(Debug)]
pub struct RunError {
    pub message: String,
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for RunError {}

impl RunError {
    fn new(message: impl Into<String>) -> Self {
        RunError {
            message: message.into(),
        }
    }

    /// Wrap a core error, qualifying `Invalid` field names with `scope`.
    fn core(scope: &str, e: CoreError) -> Self {
        match e {
            CoreError::Invalid { field, reason } => {
                RunError::new(format!("invalid `{scope}.{field}`: {reason}"))
            }
            other => RunError::new(format!("{scope}: {other}")),
        }
    }
}

type RunResult<T> = std::result::Result<T, RunError>;

pub fn parse_config(text: &str) -> RunResult<RunConfig> {
    serde_json::from_str(text).map_err(|e| RunError::new(format!("malformed config: {e}")))
}

pub fn load_config(path: &Path) -> RunResult<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| RunError::new(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

fn positive(field: &str, v: usize) -> RunResult<usize> {
    if v == 0 {
        return Err(RunError::new(format!("invalid `{field}`: must be positive")));
    }
    Ok(v)
}

/// Parameters after applying overrides and defaults.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub command: Command,
    pub subshift: SubshiftSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map: Option<VerblunskyMap>,
    pub params: Value,
    #[serde(skip)]
    pub out: PathBuf,
}

impl Resolved {
    fn provenance(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// `# `-prefixed header for text outputs.
    fn text_header(&self) -> String {
        format!("# opuc {}\n# config: {}\n", self.command.name(), self.provenance())
    }

    fn map(&self) -> &VerblunskyMap {
        self.map.as_ref().expect("map resolved for this command")
    }
}

fn resolve_subshift(cfg: &RunConfig) -> RunResult<SubshiftSpec> {
    let raw = cfg
        .subshift
        .clone()
        .ok_or_else(|| RunError::new("invalid `subshift`: missing"))?;
    let spec: SubshiftSpec = serde_json::from_value(raw)
        .map_err(|e| RunError::new(format!("invalid `subshift`: {e}")))?;
    spec.validate().map_err(|e| RunError::core("subshift", e))?;
    Ok(spec)
}

fn resolve_map(cfg: &RunConfig, spec: &SubshiftSpec) -> RunResult<VerblunskyMap> {
    let raw = cfg
        .map
        .clone()
        .ok_or_else(|| RunError::new("invalid `map`: missing"))?;
    let map: VerblunskyMap =
        serde_json::from_value(raw).map_err(|e| RunError::new(format!("invalid `map`: {e}")))?;
    let alphabet = spec.alphabet().map_err(|e| RunError::core("subshift", e))?;
    map.bind(&alphabet).map_err(|e| RunError::core("map", e))?;
    Ok(map)
}

/// Merge config, overrides and defaults for `command`.
pub fn resolve(command: Command, cfg: &RunConfig, over: &Overrides) -> RunResult<Resolved> {
    let subshift = resolve_subshift(cfg)?;
    let grid = over.grid.or(cfg.grid);
    let steps = over.steps.or(cfg.steps);
    let samples = over.samples.or(cfg.samples);
    let out = over
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));

    let needs_map = matches!(command, Command::Lyapunov | Command::Spectrum | Command::CmvEig);
    let map = if needs_map {
        Some(resolve_map(cfg, &subshift)?)
    } else {
        None
    };

    let params = match command {
        Command::Bosh => {
            let sample_length = positive(
                "sample_length",
                cfg.sample_length.unwrap_or(ergodic_opuc::symbolic::DEFAULT_SAMPLE_LENGTH),
            )?;
            serde_json::json!({
                "sample_length": sample_length,
                "lengths": cfg.lengths,
                "threshold": cfg.threshold.unwrap_or(boshernitzan::DEFAULT_THRESHOLD),
            })
        }
        Command::Lyapunov => serde_json::json!({
            "grid": positive("grid", grid.unwrap_or(16))?,
            "steps": steps.unwrap_or(10_000),
            "samples": samples.unwrap_or(8),
        }),
        Command::Spectrum => {
            let steps = steps.unwrap_or(10_000);
            let thresholds = Thresholds {
                gamma_floor: cfg.gamma_floor,
                defect_cap: cfg.defect_cap.unwrap_or(spectrum::DEFAULT_DEFECT_CAP),
            };
            let (gamma_floor, defect_cap) = thresholds
                .resolve(steps.max(1))
                .map_err(|e| RunError::core("config", e))?;
            serde_json::json!({
                "grid": grid.unwrap_or(1024),
                "steps": steps,
                "samples": samples.unwrap_or(8),
                "gamma_floor": gamma_floor,
                "defect_cap": defect_cap,
                "approximant_order": cfg.approximant_order,
                "band_grid": positive("band_grid", cfg.band_grid.unwrap_or(65_536))?,
            })
        }
        Command::ClassifyBeta => {
            let default_beta = match &subshift {
                SubshiftSpec::RotationCoding { betas, .. } => betas[0],
                _ => {
                    return Err(RunError::new(
                        "invalid `subshift.kind`: classify-beta needs a rotation coding",
                    ))
                }
            };
            serde_json::json!({
                "beta": cfg.beta.unwrap_or(default_beta),
                "search_bound": cfg.search_bound.unwrap_or(rotations::DEFAULT_SEARCH_BOUND),
                "tol": cfg.tol.unwrap_or(rotations::DEFAULT_TOL),
            })
        }
        Command::CmvEig => {
            let size = positive("cmv_size", cfg.cmv_size.unwrap_or(256))?;
            if size > cmv::MAX_EIGEN_SIZE {
                return Err(RunError::new(format!(
                    "invalid `cmv_size`: at most {}",
                    cmv::MAX_EIGEN_SIZE
                )));
            }
            serde_json::json!({
                "size": size,
                "variant": cfg.cmv_variant.unwrap_or(CmvVariant::HalfLine),
            })
        }
    };
    Ok(Resolved {
        command,
        subshift,
        map,
        params,
        out,
    })
}

fn param_usize(r: &Resolved, key: &str) -> usize {
    r.params[key].as_u64().expect("resolved usize") as usize
}

fn param_f64(r: &Resolved, key: &str) -> f64 {
    r.params[key].as_f64().expect("resolved f64")
}

/// Files produced by a run, in write order, plus the exit status.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub status: i32,
    pub files: Vec<(String, String)>,
    pub summary: String,
}

fn json_with_config(r: &Resolved, result: &impl Serialize) -> String {
    let doc = serde_json::json!({ "config": r, "result": result });
    let mut s = serde_json::to_string_pretty(&doc).expect("output serializes");
    s.push('\n');
    s
}

/// Run `command` in memory.
pub fn execute(r: &Resolved) -> RunResult<Outcome> {
    match r.command {
        Command::Bosh => cmd_bosh(r),
        Command::Lyapunov => cmd_lyapunov(r),
        Command::Spectrum => cmd_spectrum(r),
        Command::ClassifyBeta => cmd_classify_beta(r),
        Command::CmvEig => cmd_cmv_eig(r),
    }
}

fn cmd_bosh(r: &Resolved) -> RunResult<Outcome> {
    let seq = SymbolSequence::unbounded(r.subshift.clone()).map_err(|e| RunError::core("subshift", e))?;
    let sample_length = param_usize(r, "sample_length");
    let threshold = param_f64(r, "threshold");
    let report = match r.params["lengths"].as_array() {
        Some(list) => {
            let lengths: Vec<usize> = list.iter().map(|v| v.as_u64().unwrap_or(0) as usize).collect();
            boshernitzan::bosh_scan(&seq, &lengths, sample_length, threshold)
        }
        None => boshernitzan::bosh_scan_default(&seq, sample_length, threshold),
    }
    .map_err(|e| RunError::core("config", e))?;
    let status = match report.verdict {
        BoshVerdict::SupportsB => 0,
        BoshVerdict::Weak => 2,
        BoshVerdict::Inconclusive => 3,
    };
    Ok(Outcome {
        status,
        files: vec![
            ("bosh.json".into(), json_with_config(r, &report)),
            ("bosh.csv".into(), r.text_header() + &report.to_csv()),
        ],
        summary: format!(
            "verdict {:?} over {} lengths ({})",
            report.verdict,
            report.lengths.len(),
            report.length_rule
        ),
    })
}

fn family(r: &Resolved) -> RunResult<CocycleFamily> {
    CocycleFamily::new(r.subshift.clone(), r.map().clone()).map_err(|e| RunError::core("config", e))
}

fn cmd_lyapunov(r: &Resolved) -> RunResult<Outcome> {
    let rows = cocycle::lyapunov_grid(
        &family(r)?,
        param_usize(r, "grid"),
        param_usize(r, "steps"),
        param_usize(r, "samples"),
    )
    .map_err(|e| RunError::core("config", e))?;
    let max_gamma = rows.iter().map(|e| e.gamma).fold(f64::NEG_INFINITY, f64::max);
    Ok(Outcome {
        status: 0,
        files: vec![(
            "lyapunov.csv".into(),
            r.text_header() + &cocycle::estimates_to_csv(&rows),
        )],
        summary: format!("{} grid points, max gamma {}", rows.len(), ergodic_opuc::fmt_f64(max_gamma)),
    })
}

fn cmd_spectrum(r: &Resolved) -> RunResult<Outcome> {
    let fam = family(r)?;
    let thresholds = Thresholds {
        gamma_floor: Some(param_f64(r, "gamma_floor")),
        defect_cap: param_f64(r, "defect_cap"),
    };
    let report = spectrum::scan(
        &fam,
        param_usize(r, "grid"),
        param_usize(r, "steps"),
        param_usize(r, "samples"),
        &thresholds,
    )
    .map_err(|e| RunError::core("config", e))?;
    let mut files = vec![
        ("spectrum.json".into(), json_with_config(r, &report)),
        ("spectrum.csv".into(), r.text_header() + &report.to_csv()),
        ("spectrum_plot.dat".into(), r.text_header() + &report.to_plot()),
    ];
    let mut summary = format!(
        "measure estimate {} (undecided {})",
        ergodic_opuc::fmt_f64(report.measure_estimate),
        report.count(spectrum::Classification::Undecided)
    );
    if let Some(order) = r.params["approximant_order"].as_u64() {
        let coeffs = cmv::approximant_coefficients(&r.subshift, r.map(), order as usize)
            .map_err(|e| RunError::core("config", e))?;
        let bands = cmv::discriminant_bands(&coeffs, coeffs.len(), param_usize(r, "band_grid"))
            .map_err(|e| RunError::core("config", e))?;
        let agreement = spectrum::compare_with_bands(&report, &bands);
        summary.push_str(&format!(
            ", band measure {}, agreement {}",
            ergodic_opuc::fmt_f64(bands.total_measure),
            ergodic_opuc::fmt_f64(agreement.agreement)
        ));
        files.push(("bands.json".into(), json_with_config(r, &bands)));
        files.push(("bands.csv".into(), r.text_header() + &bands.to_csv()));
        files.push(("agreement.json".into(), json_with_config(r, &agreement)));
    }
    Ok(Outcome {
        status: 0,
        files,
        summary,
    })
}

fn cmd_classify_beta(r: &Resolved) -> RunResult<Outcome> {
    let cf = r.subshift.rotation_cf().expect("checked during resolution");
    let result = rotations::classify_beta(
        &cf,
        param_f64(r, "beta"),
        r.params["search_bound"].as_u64().expect("resolved"),
        param_f64(r, "tol"),
    )
    .map_err(|e| RunError::core("config", e))?;
    Ok(Outcome {
        status: 0,
        files: vec![("classify_beta.json".into(), json_with_config(r, &result))],
        summary: format!("verdict {:?}", result.verdict),
    })
}

fn cmd_cmv_eig(r: &Resolved) -> RunResult<Outcome> {
    let size = param_usize(r, "size");
    let variant: CmvVariant = serde_json::from_value(r.params["variant"].clone()).expect("resolved");
    let (lo, hi) = variant.required_range(size);
    let seq = SymbolSequence::unbounded(r.subshift.clone()).map_err(|e| RunError::core("subshift", e))?;
    let coeffs = r
        .map()
        .coefficient_sequence(&seq, lo, hi)
        .map_err(|e| RunError::core("map", e))?;
    let op = cmv::build_cmv(&coeffs, size, variant).map_err(|e| RunError::core("config", e))?;
    let eig = cmv::eigenphases(&op).map_err(|e| RunError::core("config", e))?;
    Ok(Outcome {
        status: 0,
        files: vec![
            ("eigenphases.csv".into(), r.text_header() + &eig.to_csv()),
            ("cmv_matrix.csv".into(), r.text_header() + &op.to_triplets()),
        ],
        summary: format!("{} eigenvalues", eig.phases.len()),
    })
}

/// Write `outcome` into `r.out`.
pub fn write_outputs(r: &Resolved, outcome: &Outcome) -> RunResult<()> {
    fs::create_dir_all(&r.out)
        .map_err(|e| RunError::new(format!("cannot create {}: {e}", r.out.display())))?;
    for (name, body) in &outcome.files {
        let path = r.out.join(name);
        fs::write(&path, body)
            .map_err(|e| RunError::new(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

/// Full pipeline; returns the exit status on success.
pub fn run(command: Command, config: &Path, over: &Overrides) -> RunResult<Outcome> {
    let cfg = load_config(config)?;
    let resolved = resolve(command, &cfg, over)?;
    let outcome = execute(&resolved)?;
    write_outputs(&resolved, &outcome)?;
    Ok(outcome)
}
