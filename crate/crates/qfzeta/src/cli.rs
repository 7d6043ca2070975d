//! Configuration ingestion, pipeline orchestration, and machine-readable
//! reports for the `qfzeta` binary.
//!
//! A job is a flat key-value config with one matrix block:
//!
//! ```text
//! task = analyze
//! gram2 = [
//!   2 0 0 0 0
//!   0 2 0 0 0
//!   0 0 2 0 0
//!   0 0 0 2 0
//!   0 0 0 0 -2
//! ]
//! n_max = 10
//! prime_bound = 20
//! ```
//!
//! Reports are versioned structured text (`# qfzeta report v1`), one
//! `key: value` pair per line plus task-specific sections; CSV side files
//! carry plottable tables.  Reports are deterministic for a fixed
//! (config, seed, cache) apart from the `timestamp:` line.
//!
//! Exit codes: 0 success, 1 validation error, 2 budget exceeded,
//! 3 acceptance failure (verify-style tasks).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use thiserror::Error;

use crate::bruhat;
use crate::characters::enumerate_characters;
use crate::forms::{self, FormKind};
use crate::localdensity::{self, DensityCache, DensityError, DensityParams};
use crate::quadform::QuadraticForm;
use crate::series::{self, CoefficientKind};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("form: {0}")]
    Form(#[from] crate::quadform::QuadFormError),
    #[error("density: {0}")]
    Density(DensityError),
    #[error("bruhat: {0}")]
    Bruhat(#[from] bruhat::BruhatError),
    #[error("forms: {0}")]
    Forms(#[from] forms::FormsError),
    #[error("series: {0}")]
    Series(#[from] series::SeriesError),
    #[error("character: {0}")]
    Character(#[from] crate::characters::CharacterError),
    #[error("acceptance failure: {0}")]
    AcceptanceFailed(String),
}

impl From<DensityError> for CliError {
    fn from(e: DensityError) -> Self {
        CliError::Density(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Density(DensityError::BudgetExceeded { .. }) => 2,
            CliError::Bruhat(bruhat::BruhatError::TableOverflow { .. }) => 2,
            CliError::AcceptanceFailed(_) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Analyze,
    Densities,
    Measures,
    Build,
    Verify,
    FeCheck,
    StarkCheck,
}

impl Task {
    fn parse(s: &str) -> Result<Task, CliError> {
        Ok(match s {
            "analyze" => Task::Analyze,
            "densities" => Task::Densities,
            "measures" => Task::Measures,
            "build" => Task::Build,
            "verify" => Task::Verify,
            "fe-check" => Task::FeCheck,
            "stark-check" => Task::StarkCheck,
            other => return Err(CliError::Config(format!("unknown task `{other}`"))),
        })
    }

    fn name(&self) -> &'static str {
        match self {
            Task::Analyze => "analyze",
            Task::Densities => "densities",
            Task::Measures => "measures",
            Task::Build => "build",
            Task::Verify => "verify",
            Task::FeCheck => "fe-check",
            Task::StarkCheck => "stark-check",
        }
    }
}

/// Parsed and validated job description.
#[derive(Debug, Clone)]
pub struct JobConfig {
    pub task: Task,
    pub gram2: Vec<Vec<i64>>,
    pub ell: Option<i64>,
    pub n_max: usize,
    pub prime_bound: u64,
    pub k_max: u32,
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub t0: f64,
    pub t0_alt: f64,
    pub y_min: f64,
    pub moduli: Vec<u64>,
    pub out: Option<PathBuf>,
    pub cache: Option<PathBuf>,
}

impl Default for JobConfig {
    fn default() -> Self {
        JobConfig {
            task: Task::Analyze,
            gram2: Vec::new(),
            ell: None,
            n_max: 10,
            prime_bound: 50,
            k_max: 6,
            samples: 24,
            seed: 42,
            tolerance: 5e-2,
            t0: 1.0,
            t0_alt: 1.5,
            y_min: 0.18,
            moduli: vec![3, 5, 7],
            out: None,
            cache: None,
        }
    }
}

impl JobConfig {
    pub fn parse(text: &str) -> Result<JobConfig, CliError> {
        let mut cfg = JobConfig::default();
        let mut saw_task = false;
        let mut lines = text.lines().enumerate().peekable();
        while let Some((lineno, raw)) = lines.next() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "task" => {
                    cfg.task = Task::parse(value)?;
                    saw_task = true;
                }
                "gram2" => {
                    if value != "[" {
                        return Err(CliError::Config(format!(
                            "line {}: gram2 must open a `[` block",
                            lineno + 1
                        )));
                    }
                    let mut rows = Vec::new();
                    loop {
                        let (ln, row_raw) = lines
                            .next()
                            .ok_or_else(|| CliError::Config("unterminated gram2 block".into()))?;
                        let row_line = row_raw.split('#').next().unwrap_or("").trim();
                        if row_line == "]" {
                            break;
                        }
                        if row_line.is_empty() {
                            continue;
                        }
                        let row: Result<Vec<i64>, _> =
                            row_line.split_whitespace().map(|t| t.parse::<i64>()).collect();
                        rows.push(row.map_err(|e| {
                            CliError::Config(format!("line {}: bad integer ({e})", ln + 1))
                        })?);
                    }
                    cfg.gram2 = rows;
                }
                "ell" => cfg.ell = Some(parse_num(key, value)?),
                "n_max" => cfg.n_max = parse_num::<usize>(key, value)?,
                "prime_bound" => cfg.prime_bound = parse_num(key, value)?,
                "k_max" => cfg.k_max = parse_num(key, value)?,
                "samples" => cfg.samples = parse_num(key, value)?,
                "seed" => cfg.seed = parse_num(key, value)?,
                "tolerance" => cfg.tolerance = parse_num(key, value)?,
                "t0" => cfg.t0 = parse_num(key, value)?,
                "t0_alt" => cfg.t0_alt = parse_num(key, value)?,
                "y_min" => cfg.y_min = parse_num(key, value)?,
                "moduli" => {
                    let v: Result<Vec<u64>, _> =
                        value.split(',').map(|t| t.trim().parse::<u64>()).collect();
                    cfg.moduli = v.map_err(|e| CliError::Config(format!("moduli: {e}")))?;
                }
                "out" => cfg.out = Some(PathBuf::from(value)),
                "cache" => cfg.cache = Some(PathBuf::from(value)),
                other => {
                    return Err(CliError::Config(format!(
                        "line {}: unknown key `{other}`",
                        lineno + 1
                    )))
                }
            }
        }
        if !saw_task {
            return Err(CliError::Config("missing `task`".into()));
        }
        if cfg.gram2.is_empty() {
            return Err(CliError::Config("missing `gram2` block".into()));
        }
        cfg.validate_ranges()?;
        Ok(cfg)
    }

    fn validate_ranges(&self) -> Result<(), CliError> {
        if self.n_max > 2000 {
            return Err(CliError::Config("n_max out of range (max 2000)".into()));
        }
        if self.prime_bound < 2 || self.prime_bound > 1000 {
            return Err(CliError::Config("prime_bound out of range [2, 1000]".into()));
        }
        if self.k_max == 0 || self.k_max > 8 {
            return Err(CliError::Config("k_max out of range [1, 8]".into()));
        }
        if !(self.t0 > 0.0 && self.t0_alt > 0.0) {
            return Err(CliError::Config("t0 values must be positive".into()));
        }
        if !(self.y_min > 0.0 && self.y_min < 1.0) {
            return Err(CliError::Config("y_min out of range (0, 1)".into()));
        }
        Ok(())
    }

    fn density_params(&self) -> DensityParams {
        DensityParams {
            prime_bound: self.prime_bound,
            k_max: self.k_max,
            ..Default::default()
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| CliError::Config(format!("key `{key}`: {e}")))
}

/// Accumulates the structured-text report.
pub struct Report {
    body: String,
    checks_failed: usize,
    checks_total: usize,
}

impl Report {
    pub fn new(task: Task, seed: u64) -> Report {
        let mut body = String::new();
        let _ = writeln!(body, "# qfzeta report v1");
        let _ = writeln!(body, "task: {}", task.name());
        let _ = writeln!(body, "seed: {seed}");
        let _ = writeln!(body, "timestamp: {}", now_stamp());
        Report { body, checks_failed: 0, checks_total: 0 }
    }

    pub fn section(&mut self, name: &str) {
        let _ = writeln!(self.body, "[{name}]");
    }

    pub fn kv(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.body, "{key}: {value}");
    }

    pub fn check(&mut self, name: &str, value: f64, threshold: f64) -> bool {
        self.checks_total += 1;
        let pass = value <= threshold;
        if !pass {
            self.checks_failed += 1;
        }
        let _ = writeln!(
            self.body,
            "{name}: {} ({value:.3e} vs {threshold:.1e})",
            if pass { "PASS" } else { "FAIL" }
        );
        pass
    }

    pub fn finish(mut self) -> (String, bool) {
        let ok = self.checks_failed == 0;
        if self.checks_total > 0 {
            let _ = writeln!(self.body, "status: {}", if ok { "PASS" } else { "FAIL" });
        } else {
            let _ = writeln!(self.body, "status: OK");
        }
        (self.body, ok)
    }
}

fn now_stamp() -> String {
    use std::time::{SystemTime, UNIX_EPOCH};
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    format!("unix:{secs}")
}

fn write_outputs(
    cfg: &JobConfig,
    report_text: &str,
    csv: Option<(&str, &str)>,
) -> Result<(), CliError> {
    if let Some(dir) = &cfg.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{}.report.txt", cfg.task.name())), report_text)?;
        if let Some((name, content)) = csv {
            std::fs::write(dir.join(name), content)?;
        }
    } else {
        print!("{report_text}");
        let _ = csv;
    }
    Ok(())
}

fn open_cache(cfg: &JobConfig) -> Result<DensityCache, CliError> {
    match &cfg.cache {
        Some(path) => {
            if let Some(dir) = path.parent() {
                if !dir.as_os_str().is_empty() {
                    std::fs::create_dir_all(dir)?;
                }
            }
            Ok(DensityCache::open(path)?)
        }
        None => Ok(DensityCache::in_memory()),
    }
}

/// Run a job; returns the exit code.
pub fn run_config(path: &Path, overrides: &Overrides) -> i32 {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read config {}: {e}", path.display());
            return 1;
        }
    };
    let cfg = match JobConfig::parse(&text) {
        Ok(mut cfg) => {
            overrides.apply(&mut cfg);
            cfg
        }
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match dispatch(&cfg) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Command-line overrides for config keys.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub cache: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl Overrides {
    fn apply(&self, cfg: &mut JobConfig) {
        if let Some(c) = &self.cache {
            cfg.cache = Some(c.clone());
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        if let Some(t) = self.threads {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
        }
    }
}

fn dispatch(cfg: &JobConfig) -> Result<(), CliError> {
    let form = QuadraticForm::from_gram2_rows(&cfg.gram2)?;
    match cfg.task {
        Task::Analyze => task_analyze(cfg, &form),
        Task::Densities => task_densities(cfg, &form),
        Task::Measures => task_measures(cfg, &form),
        Task::Build => task_build(cfg, &form),
        Task::Verify => task_verify(cfg, &form),
        Task::FeCheck => task_fe_check(cfg, &form),
        Task::StarkCheck => task_stark_check(cfg, &form),
    }
}

fn fmt_complex(c: Complex64) -> String {
    format!("{:+.9e}{:+.9e}i", c.re, c.im)
}

fn task_analyze(cfg: &JobConfig, form: &QuadraticForm) -> Result<(), CliError> {
    let profile = form.validate()?;
    let mut report = Report::new(cfg.task, cfg.seed);
    report.section("results");
    report.kv("m", profile.m);
    report.kv("D", profile.d);
    report.kv("signature", format!("({},{})", profile.p, profile.m - profile.p));
    report.kv("level", profile.level);
    report.kv(
        "K_disc",
        profile.k_char.disc().map(|d| d.to_string()).unwrap_or_else(|| "principal".into()),
    );
    report.kv(
        "K_N_disc",
        profile.k_n_char.disc().map(|d| d.to_string()).unwrap_or_else(|| "principal".into()),
    );
    for (i, row) in profile.dual.gram2_rows().iter().enumerate() {
        report.kv(
            &format!("dual_gram2_row{i}"),
            row.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "),
        );
    }
    report.kv("form_hash", form.content_hash());
    let (text, _) = report.finish();
    write_outputs(cfg, &text, None)
}

fn task_densities(cfg: &JobConfig, form: &QuadraticForm) -> Result<(), CliError> {
    form.validate()?;
    let params = cfg.density_params();
    let mut cache = open_cache(cfg)?;
    let mut report = Report::new(cfg.task, cfg.seed);
    report.section("results");
    let mut csv = String::from("n,p,k,count,alpha,stabilized\n");
    let primes = localdensity::primes_up_to(cfg.prime_bound);
    let mut records = 0usize;
    for sign in [1i128, -1] {
        for n in 1..=cfg.n_max as i128 {
            for &p in &primes {
                let rec = localdensity::local_density(form, sign * n, p, &params, &mut cache)?;
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{}",
                    sign * n,
                    rec.p,
                    rec.k,
                    rec.count,
                    rec.alpha,
                    rec.stabilized
                );
                records += 1;
            }
        }
    }
    report.kv("records", records);
    report.kv("prime_bound", cfg.prime_bound);
    report.kv("n_max", cfg.n_max);
    let (text, _) = report.finish();
    write_outputs(cfg, &text, Some(("densities.csv", &csv)))
}

fn task_measures(cfg: &JobConfig, form: &QuadraticForm) -> Result<(), CliError> {
    form.validate_zeta()?;
    let params = cfg.density_params();
    let mut cache = open_cache(cfg)?;
    let mut report = Report::new(cfg.task, cfg.seed);
    report.section("results");
    let mut csv = String::from("sign,n,measure\n");
    for sign in [1i8, -1] {
        let table = localdensity::measure_table(form, sign, cfg.n_max, &params, &mut cache)?;
        for e in &table.entries {
            let _ = writeln!(csv, "{},{},{:.17e}", sign, e.n.abs(), e.value);
        }
        report.kv(
            &format!("measure_sum_sign_{}", if sign > 0 { "plus" } else { "minus" }),
            format!("{:.12e}", table.entries.iter().map(|e| e.value).sum::<f64>()),
        );
    }
    report.kv("prime_bound", cfg.prime_bound);
    let (text, _) = report.finish();
    write_outputs(cfg, &text, Some(("measures.csv", &csv)))
}

struct BuiltForms {
    f: forms::FourierExpansion,
    g: forms::FourierExpansion,
    fit_f: forms::FitReport,
    fit_g: forms::FitReport,
}

fn build_and_fit(cfg: &JobConfig, form: &QuadraticForm) -> Result<BuiltForms, CliError> {
    let profile = form.validate_zeta()?;
    let params = cfg.density_params();
    let mut cache = open_cache(cfg)?;
    let dual = profile.dual.clone();
    let kind = match cfg.ell {
        Some(_) => FormKind::Maass,
        None => FormKind::Holomorphic,
    };
    let (mut f, mut g) = match kind {
        FormKind::Maass => {
            let ell = cfg.ell.expect("checked");
            let plus = localdensity::measure_table(form, 1, cfg.n_max, &params, &mut cache)?;
            let minus = localdensity::measure_table(form, -1, cfg.n_max, &params, &mut cache)?;
            let dplus = localdensity::measure_table(&dual, 1, cfg.n_max, &params, &mut cache)?;
            let dminus = localdensity::measure_table(&dual, -1, cfg.n_max, &params, &mut cache)?;
            (
                forms::build_maass(&profile, ell, &plus, &minus, cfg.n_max)?,
                forms::build_dual_maass(&profile, ell, &dplus, &dminus, cfg.n_max)?,
            )
        }
        FormKind::Holomorphic => {
            let plus = localdensity::measure_table(form, 1, cfg.n_max, &params, &mut cache)?;
            let dplus = localdensity::measure_table(&dual, 1, cfg.n_max, &params, &mut cache)?;
            (
                forms::build_holomorphic(&profile, &plus, cfg.n_max)?,
                forms::build_dual_holomorphic(&profile, &dplus, cfg.n_max)?,
            )
        }
    };
    f.y_min = cfg.y_min;
    g.y_min = cfg.y_min;
    let pairs = forms::sample_modularity_pairs(profile.level, cfg.samples.max(12), cfg.seed, cfg.y_min);
    let fit_f = forms::fit_constants(&mut f, &pairs)?;
    let pairs_g =
        forms::sample_modularity_pairs(profile.level, cfg.samples.max(12), cfg.seed ^ 0x9e37, cfg.y_min);
    let fit_g = forms::fit_constants(&mut g, &pairs_g)?;
    Ok(BuiltForms { f, g, fit_f, fit_g })
}

fn task_build(cfg: &JobConfig, form: &QuadraticForm) -> Result<(), CliError> {
    let built = build_and_fit(cfg, form)?;
    let mut report = Report::new(cfg.task, cfg.seed);
    report.section("results");
    report.kv("kind", if built.f.kind == FormKind::Maass { "maass" } else { "holomorphic" });
    report.kv("weight_num", built.f.ell);
    report.kv("level", built.f.level);
    if let Some(e) = built.f.eigenvalue() {
        report.kv("eigenvalue", format!("{e:.12}"));
    }
    if let Some(c) = built.f.const_growth.value() {
        report.kv("const_growth", fmt_complex(c));
    }
    if let Some(c) = built.f.const_decay.value() {
        report.kv("const_decay", fmt_complex(c));
    }
    report.kv("fit_residual", format!("{:.6e}", built.fit_f.residual));
    report.kv("fit_condition", format!("{:.6e}", built.fit_f.condition));
    report.kv("dual_fit_residual", format!("{:.6e}", built.fit_g.residual));
    let mut csv = String::from("n,branch,re,im\n");
    for (i, c) in built.f.coeffs_plus.iter().enumerate() {
        let _ = writeln!(csv, "{},plus,{:.17e},{:.17e}", i + 1, c.re, c.im);
    }
    for (i, c) in built.f.coeffs_minus.iter().enumerate() {
        let _ = writeln!(csv, "{},minus,{:.17e},{:.17e}", i + 1, c.re, c.im);
    }
    let (text, _) = report.finish();
    write_outputs(cfg, &text, Some(("coefficients.csv", &csv)))
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if xs.is_empty() {
        return f64::NAN;
    }
    let mid = xs.len() / 2;
    if xs.len() % 2 == 0 {
        (xs[mid - 1] + xs[mid]) / 2.0
    } else {
        xs[mid]
    }
}

fn task_verify(cfg: &JobConfig, form: &QuadraticForm) -> Result<(), CliError> {
    let profile = form.validate_zeta()?;
    let built = build_and_fit(cfg, form)?;
    let mut report = Report::new(cfg.task, cfg.seed);
    report.section("results");

    // modularity defects over fresh samples
    let pairs =
        forms::sample_modularity_pairs(profile.level, cfg.samples.max(20), cfg.seed ^ 0x51ab, cfg.y_min);
    let mut defects = Vec::new();
    let mut csv = String::from("kind,index,defect\n");
    for (i, (gamma, z)) in pairs.iter().enumerate() {
        let d = forms::modularity_defect(&built.f, gamma, *z)?;
        let _ = writeln!(csv, "modularity,{i},{d:.6e}");
        defects.push(d);
    }
    let med = median(defects.clone());
    report.kv("modularity_samples", defects.len());
    report.kv("modularity_median_defect", format!("{med:.6e}"));
    report.section("acceptance");
    report.check("modularity_median", med, cfg.tolerance);

    // Fricke: resolve the dual scale on one point set, measure on another
    // (including the fixed point of the involution)
    let n_level = profile.level as f64;
    let fixed = Complex64::new(0.0, 1.0 / n_level.sqrt());
    let fit_points: Vec<Complex64> = (0..8)
        .map(|k| fixed + Complex64::new((k as f64 - 3.5) * 0.03, 0.015 * (k % 2) as f64))
        .collect();
    let mut g = built.g.clone();
    let scale = forms::fit_dual_scale(&built.f, &mut g, &fit_points)?;
    report.kv("dual_scale", format!("{scale:.9e}"));
    let mut fricke_worst: f64 = 0.0;
    let mut count = 0;
    for k in 0..10 {
        let z = if k == 0 {
            fixed
        } else {
            fixed + Complex64::new((k as f64 - 5.0) * 0.045 + 0.02, 0.025 * (k % 3) as f64)
        };
        match forms::fricke_defect(&built.f, &g, z) {
            Ok(d) => {
                let _ = writeln!(csv, "fricke,{k},{d:.6e}");
                fricke_worst = fricke_worst.max(d);
                count += 1;
            }
            Err(forms::FormsError::BelowYMin { .. }) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    report.kv("fricke_samples", count);
    report.check("fricke_worst", fricke_worst, cfg.tolerance);

    // Laplacian eigenvalue for Maass builds
    if built.f.kind == FormKind::Maass {
        let mut worst: f64 = 0.0;
        for &z in &[Complex64::new(0.1, 1.2), Complex64::new(-0.2, 0.9)] {
            let d = forms::laplacian_defect(&built.f, z, 1e-3)?;
            let _ = writeln!(csv, "laplacian,0,{d:.6e}");
            worst = worst.max(d);
        }
        report.check("laplacian_worst", worst, 1e-4_f64.max(cfg.tolerance));
    }

    let (text, ok) = report.finish();
    write_outputs(cfg, &text, Some(("verify.csv", &csv)))?;
    if !ok {
        return Err(CliError::AcceptanceFailed("verify defects exceed tolerance".into()));
    }
    Ok(())
}

fn task_fe_check(cfg: &JobConfig, form: &QuadraticForm) -> Result<(), CliError> {
    let profile = form.validate_zeta()?;
    if (profile.m - profile.p) % 2 != 0 {
        return Err(CliError::Config(
            "fe-check needs the holomorphic case (m - p even); apply to -P otherwise".into(),
        ));
    }
    let params = cfg.density_params();
    let mut cache = open_cache(cfg)?;
    let built = build_and_fit(cfg, form)?;
    let m = profile.m as u32;
    let p = profile.p as u32;
    let plus = localdensity::measure_table(form, 1, cfg.n_max, &params, &mut cache)?;
    let dplus = localdensity::measure_table(&profile.dual, 1, cfg.n_max, &params, &mut cache)?;
    let mut a = Vec::with_capacity(cfg.n_max);
    let mut b = Vec::with_capacity(cfg.n_max);
    for n in 1..=cfg.n_max {
        a.push(series::coeff_a(CoefficientKind::Holomorphic, m, p, profile.d, &plus, n)?);
        b.push(series::coeff_b(
            CoefficientKind::Holomorphic,
            m,
            p,
            profile.level,
            &dplus,
            n,
        )?);
    }
    // constant terms from the fitted builds: a0 directly, b0 from the
    // dual build's fitted constant
    let a0 = built.f.const_growth.value().ok_or(CliError::Config("missing fitted a0".into()))?;
    let b0 = built.g.const_growth.value().ok_or(CliError::Config("missing fitted b0".into()))?;
    let bundle = series::CoefficientSeries::new(
        m,
        profile.level,
        a,
        b,
        Some(a0),
        Some(b0),
        profile.k_char.clone(),
    );
    let mut report = Report::new(cfg.task, cfg.seed);
    report.section("results");
    let s = Complex64::new(m as f64 / 4.0, 2.0);
    let t0inv = series::t0_invariance_defect(&bundle, s, cfg.t0, cfg.t0_alt)?;
    report.kv("t0_invariance_defect", format!("{t0inv:.6e}"));
    let fe = series::fe_defect(&bundle, s, 1.25)?;
    report.kv("fe_defect", format!("{fe:.6e}"));
    report.section("acceptance");
    report.check("t0_invariance", t0inv, cfg.tolerance);
    report.check("fe_two_sided", fe, cfg.tolerance);
    let (text, ok) = report.finish();
    write_outputs(cfg, &text, None)?;
    if !ok {
        return Err(CliError::AcceptanceFailed("functional-equation defects exceed tolerance".into()));
    }
    Ok(())
}

fn task_stark_check(cfg: &JobConfig, form: &QuadraticForm) -> Result<(), CliError> {
    let profile = form.validate()?;
    let mut report = Report::new(cfg.task, cfg.seed);
    report.section("results");
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for &r in &cfg.moduli {
        if profile.level % r == 0 {
            report.kv(&format!("skip_r_{r}"), "divides level");
            continue;
        }
        for psi in enumerate_characters(r)? {
            let d = bruhat::stark_defect(form, &psi)?;
            worst = worst.max(d);
            checked += 1;
        }
    }
    report.kv("checked_pairs", checked);
    report.kv("max_defect", format!("{worst:.6e}"));
    report.section("acceptance");
    report.check("stark_max_defect", worst, 1e-10);
    let (text, ok) = report.finish();
    write_outputs(cfg, &text, None)?;
    if !ok {
        return Err(CliError::AcceptanceFailed("Stark identity defect exceeds 1e-10".into()));
    }
    Ok(())
}

/// `cache` subcommand: stats, verify, clear.
pub fn run_cache_admin(action: &str, cache_path: &Path) -> i32 {
    match action {
        "stats" => match DensityCache::open(cache_path) {
            Ok(cache) => {
                let stats = cache.stats();
                println!("# qfzeta cache stats v1");
                println!("records: {}", stats.total);
                for ((p, k), n) in stats.by_pk {
                    println!("p={p} k={k}: {n}");
                }
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
        "verify" => match DensityCache::verify(cache_path) {
            Ok(rep) => {
                println!("# qfzeta cache verify v1");
                println!("records: {}", rep.total_records);
                println!("bad: {}", rep.bad_lines.len());
                for line in &rep.bad_lines {
                    println!("bad_line: {line}");
                }
                if rep.bad_lines.is_empty() {
                    0
                } else {
                    3
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
        "clear" => match DensityCache::clear(cache_path) {
            Ok(()) => {
                println!("cleared");
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
        other => {
            eprintln!("error: unknown cache action `{other}` (stats|verify|clear)");
            1
        }
    }
}
