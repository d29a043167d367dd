//! JSON-configured experiments with reproducible CSV output.

use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::bandfn::{
    cutoff_for, lemma2_ratio, lemma3_ratio, theorem1_experiment, BandFunction, IslandProfile, DEFAULT_K,
};
use crate::bump::BumpFunction;
use crate::concentration::{build_gram, constant_sweep, sharp_constant, SweepGrid};
use crate::lacunary::{hadamard_sequence, mian_chowla, random_sidon, random_with_parameter, LacunarySequence, Ratio};
use crate::periodize::{
    averaged_plancherel, direct_periodization, slice_at, theorem2_experiment, PeriodizationFamily, DEFAULT_CUTOFF,
};
use crate::sets::IntervalSet;
use crate::trigpoly::TrigPolynomial;

pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.3), seed_from_u64(seed), one set_stream per purpose or cell";

/// Relative tail tolerance used to pick `T` when a config leaves it out.
const DEFAULT_CUTOFF_TOLERANCE: f64 = 1e-6;

const STREAM_SPECTRUM: u64 = 1;
const STREAM_POLY: u64 = 2;
const STREAM_BAND: u64 = 3;
const STREAM_SAMPLES: u64 = 1 << 40;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error(transparent)]
    Numeric(#[from] crate::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Hypothesis(_) => "hypothesis-violation",
            RunError::Numeric(crate::Error::Numerical(_) | crate::Error::NoConvergence { .. }) => "numerical",
            RunError::Numeric(_) => "invalid-input",
            RunError::Io(_) => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "io" => 1,
            "config" | "invalid-input" => 2,
            "hypothesis-violation" => 3,
            _ => 4,
        }
    }

    /// One-line JSON error record.
    pub fn record(&self) -> String {
        serde_json::json!({"error": self.kind(), "message": self.to_string()}).to_string()
    }
}

fn config_err(e: impl Display) -> RunError {
    RunError::Config(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Lacunarity,
    Density,
    Lemma1,
    Lemma2,
    Lemma3,
    Theorem1,
    PeriodizeCheck,
    Theorem2,
    SharpConstant,
    Sweep,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Lacunarity => "lacunarity",
            Command::Density => "density",
            Command::Lemma1 => "lemma1",
            Command::Lemma2 => "lemma2",
            Command::Lemma3 => "lemma3",
            Command::Theorem1 => "theorem1",
            Command::PeriodizeCheck => "periodize-check",
            Command::Theorem2 => "theorem2",
            Command::SharpConstant => "sharp-constant",
            Command::Sweep => "sweep",
        }
    }
}

/// Contents of a config file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub inputs: Value,
}

/// Everything a run depends on.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub command: Command,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub allow_hypothesis_violation: bool,
}

impl RunOptions {
    /// Merges CLI overrides into a parsed config.
    pub fn new(command: Command, config: ExperimentConfig, seed: Option<u64>, allow: bool) -> Result<Self, RunError> {
        if let Some(c) = config.command {
            if c != command {
                return Err(RunError::Config(format!(
                    "config is for `{}`, not `{}`",
                    c.name(),
                    command.name()
                )));
            }
        }
        Ok(Self {
            command,
            seed: seed.or(config.seed).unwrap_or(0),
            config,
            allow_hypothesis_violation: allow,
        })
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, RunError> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(config_err)
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A spectrum given inline, by shorthand, from a file, or by a generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpectrumSpec {
    Terms(Vec<i64>),
    /// `"1,2,5"`, `"mian-chowla:8"`, `"hadamard:n0,q,count"` or a file path.
    Text(String),
    Generator(Generator),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Generator {
    Hadamard {
        n0: u64,
        q: Ratio,
        count: usize,
    },
    MianChowla {
        count: usize,
    },
    Random {
        size: usize,
        #[serde(rename = "R")]
        r: u64,
        range: i64,
    },
    RandomSidon {
        size: usize,
        range: i64,
    },
}

impl SpectrumSpec {
    pub fn resolve(&self, rng: &mut ChaCha8Rng) -> Result<LacunarySequence, RunError> {
        match self {
            SpectrumSpec::Terms(t) => Ok(LacunarySequence::new(t.clone())?),
            SpectrumSpec::Text(s) => parse_spectrum_text(s),
            SpectrumSpec::Generator(g) => Ok(match g {
                Generator::Hadamard { n0, q, count } => hadamard_sequence(*n0, *q, *count)?,
                Generator::MianChowla { count } => mian_chowla(*count),
                Generator::Random { size, r, range } => random_with_parameter(rng, *size, *r, *range)?,
                Generator::RandomSidon { size, range } => random_sidon(rng, *size, *range)?,
            }),
        }
    }
}

pub fn parse_spectrum_text(text: &str) -> Result<LacunarySequence, RunError> {
    let text = text.trim();
    if let Some(count) = text.strip_prefix("mian-chowla:") {
        return Ok(mian_chowla(count.trim().parse().map_err(config_err)?));
    }
    if let Some(args) = text.strip_prefix("hadamard:") {
        let parts: Vec<&str> = args.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(RunError::Config(format!("`hadamard:{args}` needs n0,q,count")));
        }
        let n0 = parts[0].parse().map_err(config_err)?;
        let q: Ratio = parts[1].parse()?;
        let count = parts[2].parse().map_err(config_err)?;
        return Ok(hadamard_sequence(n0, q, count)?);
    }
    match text.parse::<LacunarySequence>() {
        Ok(seq) => Ok(seq),
        Err(inline) => match fs::read_to_string(text) {
            Ok(body) => serde_json::from_str(&body).map_err(config_err),
            Err(_) => Err(inline.into()),
        },
    }
}

/// A polynomial given explicitly or drawn on a spectrum.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolySpec {
    Random { random: SpectrumSpec },
    Explicit(TrigPolynomial),
}

impl PolySpec {
    fn resolve(&self, seed: u64) -> Result<TrigPolynomial, RunError> {
        match self {
            PolySpec::Explicit(p) => Ok(p.clone()),
            PolySpec::Random { random } => {
                let spectrum = random.resolve(&mut rng_for(seed, STREAM_SPECTRUM))?;
                Ok(TrigPolynomial::random_on(&mut rng_for(seed, STREAM_POLY), &spectrum))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Box,
    Triangle,
    Smooth,
}

impl Shape {
    fn profile(self) -> fn(Complex64) -> IslandProfile {
        match self {
            Shape::Box => IslandProfile::Box,
            Shape::Triangle => IslandProfile::Triangle,
            Shape::Smooth => IslandProfile::Smooth,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomBand {
    pub centers: SpectrumSpec,
    pub b: f64,
    #[serde(rename = "K", default = "default_k")]
    pub k: usize,
    pub shape: Shape,
}

fn default_k() -> usize {
    DEFAULT_K
}

/// A band function given explicitly or with random island amplitudes.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum BandSpec {
    Random { random: RandomBand },
    Explicit(BandFunction),
}

impl Serialize for BandSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wrapped<'a> {
            random: &'a RandomBand,
        }
        match self {
            BandSpec::Random { random } => Wrapped { random }.serialize(s),
            BandSpec::Explicit(f) => f.serialize(s),
        }
    }
}

impl BandSpec {
    fn resolve(&self, seed: u64, stream: u64) -> Result<BandFunction, RunError> {
        match self {
            BandSpec::Explicit(f) => Ok(f.clone()),
            BandSpec::Random { random } => {
                let centers = random.centers.resolve(&mut rng_for(seed, STREAM_SPECTRUM))?;
                let mut rng = rng_for(seed, stream);
                Ok(BandFunction::random_islands(
                    &mut rng,
                    &centers,
                    random.b,
                    random.k,
                    random.shape.profile(),
                )?)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LacunarityInputs {
    spectra: Vec<SpectrumSpec>,
    /// Prefix lengths at which R is also reported.
    #[serde(default)]
    windows: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DensityInputs {
    sets: Vec<IntervalSet>,
    a: Vec<f64>,
    #[serde(default)]
    scan: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Lemma1Inputs {
    count: usize,
    #[serde(default = "default_min_size")]
    min_size: usize,
    #[serde(default = "default_max_size")]
    max_size: usize,
    #[serde(default = "default_range")]
    range: i64,
    /// Fixed spectrum; random Sidon windows when absent.
    #[serde(default)]
    spectrum: Option<SpectrumSpec>,
}

fn default_min_size() -> usize {
    2
}

fn default_max_size() -> usize {
    16
}

fn default_range() -> i64 {
    4096
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LemmaInputs {
    g: PolySpec,
    b: f64,
    set: IntervalSet,
    #[serde(default)]
    k: Vec<i64>,
    #[serde(default)]
    pairs: Vec<(i64, i64)>,
    #[serde(rename = "T", default)]
    t_cut: Option<f64>,
    /// Also integrate to `2T` and report the relative change.
    #[serde(default = "default_true")]
    check_cutoff: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Theorem1Inputs {
    f: BandSpec,
    sets: Vec<IntervalSet>,
    /// Random draws when `f` is random.
    #[serde(default = "default_one")]
    samples: usize,
    /// Sparsity level the sets are claimed to satisfy.
    #[serde(default)]
    eps: Option<f64>,
    #[serde(rename = "T", default)]
    t_cut: Option<f64>,
}

fn default_one() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PeriodizeInputs {
    f: BandSpec,
    set: IntervalSet,
    #[serde(rename = "Q", default = "default_q")]
    q: usize,
    #[serde(rename = "T", default = "default_plancherel_cutoff")]
    t_cut: f64,
    #[serde(default = "default_points")]
    points: usize,
    #[serde(rename = "M", default = "default_m")]
    m: usize,
    /// `x` is drawn from `[-x_range, x_range]`.
    #[serde(default = "default_x_range")]
    x_range: f64,
}

fn default_q() -> usize {
    256
}

fn default_plancherel_cutoff() -> f64 {
    DEFAULT_CUTOFF
}

fn default_points() -> usize {
    20
}

fn default_m() -> usize {
    500
}

fn default_x_range() -> f64 {
    2.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Theorem2Inputs {
    f: BandSpec,
    set: IntervalSet,
    #[serde(rename = "Q", default = "default_q")]
    q: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SharpInputs {
    spectrum: SpectrumSpec,
    set: IntervalSet,
    /// Write the Gram matrix here as text.
    #[serde(default)]
    dump_gram: Option<PathBuf>,
}

fn parse<T: serde::de::DeserializeOwned>(inputs: &Value) -> Result<T, RunError> {
    serde_json::from_value(inputs.clone()).map_err(config_err)
}

/// Formats a float with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Rows plus the resolved inputs that produced them.
struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    resolved: Value,
}

/// Runs one experiment and returns the full CSV text.
pub fn run(options: &RunOptions) -> Result<String, RunError> {
    let inputs = &options.config.inputs;
    let seed = options.seed;
    let table = match options.command {
        Command::Lacunarity => lacunarity(parse(inputs)?, seed)?,
        Command::Density => density(parse(inputs)?)?,
        Command::Lemma1 => lemma1(parse(inputs)?, seed)?,
        Command::Lemma2 => lemma2(parse(inputs)?, seed)?,
        Command::Lemma3 => lemma3(parse(inputs)?, seed)?,
        Command::Theorem1 => theorem1(parse(inputs)?, seed, options.allow_hypothesis_violation)?,
        Command::PeriodizeCheck => periodize_check(parse(inputs)?, seed)?,
        Command::Theorem2 => theorem2(parse(inputs)?, seed)?,
        Command::SharpConstant => sharp(parse(inputs)?)?,
        Command::Sweep => sweep(parse(inputs)?, seed)?,
    };
    render(options.command, seed, table)
}

fn render(command: Command, seed: u64, table: Table) -> Result<String, RunError> {
    let resolved = serde_json::json!({
        "command": command.name(),
        "seed": seed,
        "inputs": table.resolved,
    });
    let canonical = resolved.to_string();
    let hash: String = Sha256::digest(canonical.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    let mut out = String::new();
    out.push_str(&format!("# lacuna {}\n", env!("CARGO_PKG_VERSION")));
    out.push_str(&format!("# command: {}\n", command.name()));
    out.push_str(&format!("# config_sha256: {hash}\n"));
    out.push_str(&format!("# seed: {seed}\n"));
    out.push_str(&format!("# rng: {RNG_NAME}\n"));
    out.push_str(&format!("# config: {canonical}\n"));

    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(&table.header).map_err(csv_err)?;
    for row in &table.rows {
        writer.write_record(row).map_err(csv_err)?;
    }
    let body = writer.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
    Ok(out)
}

fn csv_err(e: csv::Error) -> RunError {
    RunError::Io(std::io::Error::other(e.to_string()))
}

fn resolved<T: Serialize>(inputs: &T) -> Value {
    serde_json::to_value(inputs).expect("inputs serialize")
}

fn lacunarity(inputs: LacunarityInputs, seed: u64) -> Result<Table, RunError> {
    let mut rows = Vec::new();
    for (id, spec) in inputs.spectra.iter().enumerate() {
        let seq = spec.resolve(&mut rng_for(seed, STREAM_SAMPLES + id as u64))?;
        let mut windows: Vec<usize> = inputs.windows.iter().copied().filter(|&w| w < seq.len()).collect();
        windows.push(seq.len());
        for w in windows {
            let window = seq.window(0..w);
            rows.push(vec![
                id.to_string(),
                w.to_string(),
                window.r_param().to_string(),
                window.is_sidon().to_string(),
                window.terms().first().map(ToString::to_string).unwrap_or_default(),
                window.terms().last().map(ToString::to_string).unwrap_or_default(),
            ]);
        }
    }
    Ok(Table {
        header: vec!["spectrum_id", "window", "R", "sidon", "first", "last"],
        rows,
        resolved: resolved(&inputs),
    })
}

fn density(inputs: DensityInputs) -> Result<Table, RunError> {
    let mut rows = Vec::new();
    for (id, set) in inputs.sets.iter().enumerate() {
        for &a in &inputs.a {
            let density = set.relative_density(a, inputs.scan)?;
            let sparsity = set.complement_sparsity(1.0 / a, inputs.scan)?;
            rows.push(vec![id.to_string(), num(a), num(density), num(sparsity)]);
        }
    }
    Ok(Table {
        header: vec!["set_id", "a", "relative_density", "complement_sparsity"],
        rows,
        resolved: resolved(&inputs),
    })
}

fn lemma1(inputs: Lemma1Inputs, seed: u64) -> Result<Table, RunError> {
    if inputs.min_size == 0 || inputs.min_size > inputs.max_size {
        return Err(RunError::Config("needs 1 <= min_size <= max_size".into()));
    }
    let fixed = match &inputs.spectrum {
        Some(spec) => Some(spec.resolve(&mut rng_for(seed, STREAM_SPECTRUM))?),
        None => None,
    };
    let mut rows = Vec::with_capacity(inputs.count);
    for sample in 0..inputs.count {
        let stream = STREAM_SAMPLES + sample as u64;
        let mut rng = rng_for(seed, stream);
        let spectrum = match &fixed {
            Some(s) => s.clone(),
            None => {
                let size = rng.gen_range(inputs.min_size..=inputs.max_size);
                random_sidon(&mut rng, size, inputs.range)?
            }
        };
        let g = TrigPolynomial::random_on(&mut rng, &spectrum);
        let report = g.lemma1_check();
        rows.push(vec![
            seed.to_string(),
            sample.to_string(),
            spectrum.len().to_string(),
            report.r_used.to_string(),
            num(report.l4),
            num(report.bound),
            report.holds.to_string(),
        ]);
    }
    Ok(Table {
        header: vec!["seed", "sample", "size", "R", "l4", "bound", "holds"],
        rows,
        resolved: resolved(&inputs),
    })
}

fn lemma_cutoff(inputs: &LemmaInputs, max_shift: i64) -> f64 {
    inputs
        .t_cut
        .unwrap_or_else(|| cutoff_for(inputs.b, max_shift, DEFAULT_CUTOFF_TOLERANCE))
}

fn relative_change(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn lemma2(inputs: LemmaInputs, seed: u64) -> Result<Table, RunError> {
    if inputs.k.is_empty() {
        return Err(RunError::Config("lemma2 needs a nonempty `k` list".into()));
    }
    let g = inputs.g.resolve(seed)?;
    let max_shift = inputs.k.iter().map(|k| k.abs()).max().unwrap_or(0);
    let t_cut = lemma_cutoff(&inputs, max_shift);
    let mut rows = Vec::new();
    for &k in &inputs.k {
        let r = lemma2_ratio(&g, k, inputs.b, &inputs.set, t_cut)?;
        let change = if inputs.check_cutoff {
            Some(relative_change(
                r.lhs,
                lemma2_ratio(&g, k, inputs.b, &inputs.set, 2.0 * t_cut)?.lhs,
            ))
        } else {
            None
        };
        rows.push(vec![
            k.to_string(),
            num(inputs.b),
            num(r.eps),
            num(t_cut),
            num(r.lhs),
            num(r.norm_sq),
            num(r.ratio),
            opt_num(change),
        ]);
    }
    let mut resolved_inputs = inputs.clone();
    resolved_inputs.t_cut = Some(t_cut);
    Ok(Table {
        header: vec!["k", "b", "eps", "T", "lhs", "norm_sq", "ratio", "cutoff_change"],
        rows,
        resolved: resolved(&resolved_inputs),
    })
}

fn lemma3(inputs: LemmaInputs, seed: u64) -> Result<Table, RunError> {
    if inputs.pairs.is_empty() {
        return Err(RunError::Config("lemma3 needs a nonempty `pairs` list".into()));
    }
    let g = inputs.g.resolve(seed)?;
    let max_shift = inputs
        .pairs
        .iter()
        .map(|&(k, l)| k.abs().max(l.abs()))
        .max()
        .unwrap_or(0);
    let t_cut = lemma_cutoff(&inputs, max_shift);
    let mut rows = Vec::new();
    for &(k, l) in &inputs.pairs {
        let r = lemma3_ratio(&g, k, l, inputs.b, &inputs.set, t_cut)?;
        let change = if inputs.check_cutoff {
            Some(relative_change(
                r.lhs,
                lemma3_ratio(&g, k, l, inputs.b, &inputs.set, 2.0 * t_cut)?.lhs,
            ))
        } else {
            None
        };
        rows.push(vec![
            k.to_string(),
            l.to_string(),
            num(inputs.b),
            num(r.eps),
            num(t_cut),
            num(r.lhs),
            num(r.norm_sq),
            num(r.ratio),
            opt_num(change),
        ]);
    }
    let mut resolved_inputs = inputs.clone();
    resolved_inputs.t_cut = Some(t_cut);
    Ok(Table {
        header: vec!["k", "l", "b", "eps", "T", "lhs", "norm_sq", "ratio", "cutoff_change"],
        rows,
        resolved: resolved(&resolved_inputs),
    })
}

fn theorem1(inputs: Theorem1Inputs, seed: u64, allow: bool) -> Result<Table, RunError> {
    let samples = match inputs.f {
        BandSpec::Explicit(_) => 1,
        BandSpec::Random { .. } => inputs.samples.max(1),
    };
    let mut rows = Vec::new();
    let mut t_used = inputs.t_cut;
    for sample in 0..samples {
        let f = inputs
            .f
            .resolve(seed, STREAM_BAND + STREAM_SAMPLES * (sample as u64 + 1))?;
        let t_cut = inputs
            .t_cut
            .unwrap_or_else(|| cutoff_for(f.b(), f.k_max() as i64, DEFAULT_CUTOFF_TOLERANCE));
        t_used = Some(t_cut);
        for (set_id, set) in inputs.sets.iter().enumerate() {
            let r = theorem1_experiment(&f, set, t_cut, inputs.eps)?;
            let violated = r.hypothesis_ok == Some(false) || !r.disjointness.ok;
            if violated && !allow {
                return Err(RunError::Hypothesis(format!(
                    "set {set_id}: sparsity {:.6e} against eps {:?} at b = {}, close pairs {} (allowed {})",
                    r.eps, inputs.eps, r.b, r.disjointness.close_pairs, r.disjointness.allowed
                )));
            }
            rows.push(vec![
                sample.to_string(),
                set_id.to_string(),
                num(r.b),
                num(r.eps),
                r.k_max.to_string(),
                num(r.t_cut),
                num(r.mass_out),
                num(r.norm_sq),
                num(r.ratio),
                r.concentrated_half.to_string(),
                num(r.gamma),
                (!violated).to_string(),
            ]);
        }
    }
    let mut resolved_inputs = inputs.clone();
    resolved_inputs.t_cut = t_used;
    Ok(Table {
        header: vec![
            "sample",
            "set_id",
            "b",
            "eps",
            "K",
            "T",
            "mass_out",
            "norm_sq",
            "ratio",
            "concentrated_half",
            "gamma",
            "hypothesis_ok",
        ],
        rows,
        resolved: resolved(&resolved_inputs),
    })
}

fn periodize_check(inputs: PeriodizeInputs, seed: u64) -> Result<Table, RunError> {
    let f = inputs.f.resolve(seed, STREAM_BAND)?;
    let mut rows = Vec::new();
    let mut rng = rng_for(seed, STREAM_SAMPLES);
    for _ in 0..inputs.points {
        let t = rng.gen_range(-0.5..0.5);
        let x = rng.gen_range(-inputs.x_range..=inputs.x_range);
        let direct = direct_periodization(&f, t, x, inputs.m);
        let spectral = slice_at(&f, t)?.evaluate(x);
        rows.push(vec![
            "slice_vs_direct".to_string(),
            num(t),
            num(x),
            num(direct.value.re),
            num(direct.value.im),
            num(spectral.re),
            num(spectral.im),
            num((direct.value - spectral).norm()),
            num(direct.tail_estimate),
        ]);
    }
    let family = PeriodizationFamily::new(&f, inputs.q)?;
    let (mean, norm) = (family.mean_norm_sq(), f.norm_sq());
    rows.push(vec![
        "norm".to_string(),
        String::new(),
        String::new(),
        num(mean),
        String::new(),
        num(norm),
        String::new(),
        num((mean - norm).abs()),
        String::new(),
    ]);
    let p = averaged_plancherel(&f, &inputs.set, inputs.q, inputs.t_cut)?;
    rows.push(vec![
        "plancherel".to_string(),
        String::new(),
        String::new(),
        num(p.double_integral),
        String::new(),
        num(p.direct),
        String::new(),
        num((p.double_integral - p.direct).abs()),
        num(p.double_error + p.direct_error),
    ]);
    Ok(Table {
        header: vec![
            "check",
            "t",
            "x",
            "a_re",
            "a_im",
            "b_re",
            "b_im",
            "difference",
            "estimate",
        ],
        rows,
        resolved: resolved(&inputs),
    })
}

fn theorem2(inputs: Theorem2Inputs, seed: u64) -> Result<Table, RunError> {
    let f = inputs.f.resolve(seed, STREAM_BAND)?;
    let report = theorem2_experiment(&f, &inputs.set, inputs.q)?;
    if !report.averaging_holds {
        return Err(crate::Error::Numerical(format!(
            "averaging inequality fails: global {} < min {}",
            report.global_ratio, report.min_ratio
        ))
        .into());
    }
    let mut rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| vec![num(r.t), num(r.norm_sq), opt_num(r.ratio)])
        .collect();
    let norm = report.rows.iter().map(|r| r.norm_sq).sum::<f64>() / report.rows.len() as f64;
    rows.push(vec!["global".into(), num(norm), num(report.global_ratio)]);
    rows.push(vec!["min".into(), String::new(), num(report.min_ratio)]);
    Ok(Table {
        header: vec!["t", "norm_sq", "ratio"],
        rows,
        resolved: resolved(&inputs),
    })
}

fn sharp(inputs: SharpInputs) -> Result<Table, RunError> {
    let spectrum = inputs.spectrum.resolve(&mut rng_for(0, STREAM_SPECTRUM))?;
    let problem = build_gram(&spectrum, &inputs.set)?;
    if let Some(path) = &inputs.dump_gram {
        let mut file = fs::File::create(path)?;
        problem.write_gram(&mut file)?;
        file.flush()?;
    }
    let s = sharp_constant(&problem)?;
    let gamma = problem.gram()[(0, 0)].re;
    let rows = vec![vec![
        spectrum.len().to_string(),
        num(gamma),
        num(s.lambda_min),
        num(s.lambda_max),
        num(s.residual),
        num(s.verified),
    ]];
    Ok(Table {
        header: vec!["N", "gamma", "lambda_min", "lambda_max", "residual", "verified"],
        rows,
        resolved: resolved(&inputs),
    })
}

fn sweep(grid: SweepGrid, seed: u64) -> Result<Table, RunError> {
    let result = constant_sweep(&grid, seed)?;
    let mut rows: Vec<Vec<String>> = result
        .cells
        .iter()
        .map(|c| {
            let (value, status) = match &c.lambda_min {
                Ok(v) => (num(*v), "ok".to_string()),
                Err(reason) => (String::new(), format!("infeasible: {reason}")),
            };
            vec![
                num(c.gamma),
                c.r.to_string(),
                c.n.to_string(),
                c.set_id.clone(),
                c.spectrum_id.to_string(),
                value,
                status,
            ]
        })
        .collect();
    for &(gamma, r, min) in &result.envelopes {
        rows.push(vec![
            num(gamma),
            r.to_string(),
            "*".into(),
            "*".into(),
            "envelope".into(),
            num(min),
            "ok".into(),
        ]);
    }
    Ok(Table {
        header: vec!["gamma", "R", "N", "set_id", "spectrum_id", "lambda_min", "status"],
        rows,
        resolved: resolved(&grid),
    })
}

/// `x, φ(x), φ̌(x)` on `count` equally spaced points of `[lo, hi]`.
pub fn dump_phi(spec: &str) -> Result<String, RunError> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    let [lo, hi, count] = parts[..] else {
        return Err(RunError::Config(format!("`{spec}` is not lo,hi,count")));
    };
    let lo: f64 = lo.parse().map_err(config_err)?;
    let hi: f64 = hi.parse().map_err(config_err)?;
    let count: usize = count.parse().map_err(config_err)?;
    if count < 2 || !(hi > lo) {
        return Err(RunError::Config("needs hi > lo and count >= 2".into()));
    }
    let bump = BumpFunction::standard();
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["x", "phi", "phi_check"]).map_err(csv_err)?;
    for i in 0..count {
        let x = lo + (hi - lo) * i as f64 / (count - 1) as f64;
        writer
            .write_record([num(x), num(bump.phi(x)), num(bump.phi_check_fast(x))])
            .map_err(csv_err)?;
    }
    let body = writer.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(body).expect("csv output is utf-8"))
}

/// `count,spectrum-spec,seed`: JSON lines of polynomials with coefficients
/// uniform on the unit disc. The spectrum part may itself contain commas.
pub fn random_polys(spec: &str) -> Result<String, RunError> {
    let (count, rest) = spec
        .split_once(',')
        .ok_or_else(|| RunError::Config(format!("`{spec}` is not count,spectrum,seed")))?;
    let (spectrum, seed) = rest
        .rsplit_once(',')
        .ok_or_else(|| RunError::Config(format!("`{spec}` is not count,spectrum,seed")))?;
    let count: usize = count.trim().parse().map_err(config_err)?;
    let seed: u64 = seed.trim().parse().map_err(config_err)?;
    let spectrum = parse_spectrum_text(spectrum)?;
    let mut out = String::new();
    for i in 0..count {
        let g = TrigPolynomial::random_on(&mut rng_for(seed, STREAM_SAMPLES + i as u64), &spectrum);
        out.push_str(&serde_json::to_string(&g).expect("polynomials serialize"));
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn options(command: Command, inputs: Value) -> RunOptions {
        let config = ExperimentConfig {
            command: None,
            seed: Some(7),
            out: None,
            inputs,
        };
        RunOptions::new(command, config, None, false).unwrap()
    }

    fn data_rows(csv: &str) -> Vec<Vec<String>> {
        csv.lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .map(|l| l.split(',').map(String::from).collect())
            .collect()
    }

    #[test]
    fn density_of_single_hole() {
        let out = run(&options(
            Command::Density,
            serde_json::json!({"sets": ["holes:0.1,1"], "a": [1.0]}),
        ))
        .unwrap();
        let rows = data_rows(&out);
        assert!((rows[0][2].parse::<f64>().unwrap() - 0.9).abs() < 1e-12);
        assert!(out.lines().any(|l| l.starts_with("# config_sha256: ")));
    }

    #[test]
    fn sharp_constant_row() {
        let inputs = serde_json::json!({"spectrum": [0, 1], "set": {"periodic": true, "period": 1.0, "intervals": [[0.0, 0.5]]}});
        let out = run(&options(Command::SharpConstant, inputs)).unwrap();
        assert!(data_rows(&out)[0][2].starts_with("1.8169011381620"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = run(&options(
            Command::Density,
            serde_json::json!({"sets": [], "a": [], "b": 1}),
        ));
        assert_eq!(bad.unwrap_err().exit_code(), 2);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"inputs": {}, "extra": 1}"#).is_err());
    }

    #[test]
    fn mismatched_command_is_rejected() {
        let config: ExperimentConfig = serde_json::from_str(r#"{"command": "lemma1", "inputs": {}}"#).unwrap();
        assert!(RunOptions::new(Command::Sweep, config, None, false).is_err());
    }

    #[test]
    fn spectrum_shorthands() {
        assert_eq!(parse_spectrum_text("mian-chowla:4").unwrap().terms(), &[1, 2, 4, 8]);
        assert_eq!(
            parse_spectrum_text("hadamard:1,2,5").unwrap().terms(),
            &[1, 2, 4, 8, 16]
        );
        assert_eq!(parse_spectrum_text("3, 9, 27").unwrap().terms(), &[3, 9, 27]);
        assert!(parse_spectrum_text("no-such-file").is_err());
    }

    #[test]
    fn random_poly_flag_is_deterministic() {
        let a = random_polys("3,1,2,5,42").unwrap();
        assert_eq!(a, random_polys("3,1,2,5,42").unwrap());
        assert_eq!(a.lines().count(), 3);
        assert_ne!(a, random_polys("3,1,2,5,43").unwrap());
    }

    #[test]
    fn phi_dump_has_plateau() {
        let out = dump_phi("-1,1,5").unwrap();
        let rows: Vec<&str> = out.lines().collect();
        assert_eq!(rows.len(), 6);
        assert!(rows[3].starts_with("0.0000000000000000e0,1.0000000000000000e0"));
    }
}
