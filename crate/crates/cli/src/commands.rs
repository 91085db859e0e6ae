use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use natcd::diagnostics::{audit_fixed_point, default_tolerance};
use natcd::io::{default_names, export, load, LoadOptions, Loaded};
use natcd::report::{CertificateSummary, ConfigEcho, ReportEntry, RunReport};
use natcd::testkit::{generate as synthesize, SyntheticSpec};
use natcd::{certify, make_path, run_path, threshold_audit_check, Family, FitConfig, PenaltySpec, StartMode};
use serde::Serialize;

use crate::{BenchArgs, CheckArgs, DataArgs, FitArgs, GenerateArgs, ModelArgs, MuArg, OutputArgs, OutputFormat};

const DEFAULT_PATH_LENGTH: usize = 100;
const INTERCEPT_NAME: &str = "(intercept)";
/// Relative mismatch allowed between a reported objective and the rescored
/// coefficients. JSON floats round-trip exactly, so only summation order
/// differs.
const RESCORE_TOL: f64 = 1e-9;

enum Plan {
    Single(f64),
    Path { m: usize, start: StartMode },
}

/// Resolves `--mu`, `--start` and `--path-length` before any data is read.
fn plan(args: &FitArgs, path_command: bool) -> Result<Plan> {
    let mu = match (args.mu, path_command) {
        (None, true) => MuArg::Path,
        (None, false) => bail!("--mu is required: give a penalty value or 'path'"),
        (Some(MuArg::Value(v)), true) => {
            bail!("`path` fits the penalty grid and does not take --mu {v}; use `fit --mu {v}` for a single penalty")
        }
        (Some(mu), _) => mu,
    };
    match mu {
        MuArg::Value(v) => {
            if let Some(s) = args.start {
                bail!("--start {s} only applies to a path, but --mu is the single value {v}");
            }
            if args.path_length.is_some() {
                bail!("--path-length only applies to a path, but --mu is the single value {v}");
            }
            Ok(Plan::Single(v))
        }
        MuArg::Path => {
            let m = args.path_length.unwrap_or(DEFAULT_PATH_LENGTH);
            ensure!(m >= 2, "--path-length must be at least 2");
            Ok(Plan::Path {
                m,
                start: args.start.unwrap_or(StartMode::Warm),
            })
        }
    }
}

fn fit_config(model: &ModelArgs) -> Result<FitConfig> {
    ensure!(
        model.lambda.is_finite() && model.lambda >= 0.0,
        "--lambda must be finite and nonnegative, got {}",
        model.lambda
    );
    let config = FitConfig::with_eps(model.eps).rule(model.rule);
    config.validate()?;
    Ok(config)
}

fn load_data(input: &Path, response: &str, delimiter: u8, family: Family, standardize: bool) -> Result<Loaded> {
    let options = LoadOptions {
        response: response.to_owned(),
        delimiter,
        family: Some(family),
        standardize,
    };
    let loaded = load(input, &options).with_context(|| format!("reading {}", input.display()))?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    Ok(loaded)
}

fn load_args(data: &DataArgs, family: Family) -> Result<Loaded> {
    load_data(&data.input, &data.response, data.delimiter, family, data.standardize)
}

fn coefficient_names(loaded: &Loaded) -> Vec<String> {
    std::iter::once(INTERCEPT_NAME.to_owned())
        .chain(loaded.names.iter().cloned())
        .collect()
}

fn emit(output: &OutputArgs, text: &str) -> Result<()> {
    match &output.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn fit(args: FitArgs, path_command: bool) -> Result<()> {
    let plan = plan(&args, path_command)?;
    let config = fit_config(&args.model)?;
    let family = args.model.family;
    let lambda = args.model.lambda;

    let loaded = load_args(&args.data, family)?;
    let data = &loaded.dataset;
    let p = data.p();

    let (entries, start, path_length) = match plan {
        Plan::Single(mu) => {
            let penalty = PenaltySpec::uniform(p, mu, lambda)?;
            let t = Instant::now();
            let result = natcd::fit(data, family, &penalty, &config, &vec![0.0; p]);
            let elapsed = t.elapsed();
            if let Err(e) = &result {
                bail!("fit at mu = {mu} failed: {e}");
            }
            (
                vec![ReportEntry::from_fit(1, &penalty, &result, elapsed, data, family)],
                None,
                None,
            )
        }
        Plan::Path { m, start } => {
            let spec = make_path(data, m)?;
            let path = run_path(data, family, lambda, &spec, &config, start);
            let entries = path
                .entries
                .iter()
                .map(|e| {
                    let penalty = PenaltySpec::uniform(p, e.mu, lambda)?;
                    Ok(ReportEntry::from_fit(e.k, &penalty, &e.result, e.runtime, data, family))
                })
                .collect::<Result<Vec<_>>>()?;
            (entries, Some(start), Some(m))
        }
    };

    let mut entries = entries;
    if let Some(scales) = &loaded.scales {
        entries.iter_mut().for_each(|e| e.attach_scales(scales));
    }
    let mut warnings = loaded.warnings.clone();
    for e in &entries {
        if e.error.is_none() && !e.converged {
            warnings.push(format!(
                "entry {} (mu = {}) hit the cycle limit before converging",
                e.k, e.mu
            ));
        }
    }
    for w in &warnings[loaded.warnings.len()..] {
        eprintln!("warning: {w}");
    }

    let report = RunReport {
        config: ConfigEcho {
            command: if path_command { "path" } else { "fit" }.into(),
            input: Some(args.data.input.display().to_string()),
            response: Some(args.data.response.clone()),
            family,
            lambda,
            eps: args.model.eps,
            rule: args.model.rule,
            start,
            path_length,
            standardize: args.data.standardize,
            seed: None,
        },
        names: coefficient_names(&loaded),
        entries,
        warnings,
    };
    let text = match args.output.output {
        OutputFormat::Tsv => report.to_tsv(),
        OutputFormat::Structured => to_json(&report)?,
    };
    emit(&args.output, &text)?;

    let failed: Vec<String> = report
        .entries
        .iter()
        .filter_map(|e| e.error.as_ref().map(|msg| format!("k = {}: {msg}", e.k)))
        .collect();
    if !failed.is_empty() {
        bail!(
            "{} of {} path entries failed ({})",
            failed.len(),
            report.entries.len(),
            failed.join("; ")
        );
    }
    Ok(())
}

pub fn check(args: CheckArgs) -> Result<()> {
    let file = File::open(&args.report).with_context(|| format!("opening {}", args.report.display()))?;
    let mut report: RunReport = serde_json::from_reader(BufReader::new(file))
        .with_context(|| format!("{} is not a structured report", args.report.display()))?;

    let input = match (&args.input, &report.config.input) {
        (Some(i), _) => i.clone(),
        (None, Some(i)) => i.into(),
        (None, None) => bail!("the report does not record its input; pass --input"),
    };
    let response = match (&args.response, &report.config.response) {
        (Some(r), _) => r.clone(),
        (None, Some(r)) => r.clone(),
        (None, None) => bail!("the report does not record its response column; pass --response"),
    };
    let family = report.config.family;
    let lambda = report.config.lambda;
    let tol = default_tolerance(report.config.eps);

    let loaded = load_data(&input, &response, args.delimiter, family, report.config.standardize)?;
    let data = &loaded.dataset;
    let p = data.p();
    ensure!(
        report.names.len() == p,
        "report has {} coefficients but {} has {p}",
        report.names.len(),
        input.display()
    );

    let mut violations = Vec::new();
    for e in report.entries.iter_mut() {
        if e.objective.is_none() {
            continue;
        }
        if let Some(&(j, _)) = e.coefficients.iter().find(|&&(j, _)| j >= p) {
            bail!("entry {} has coefficient index {j} but p = {p}", e.k);
        }
        let penalty = PenaltySpec::uniform(p, e.mu, lambda)?;
        let beta = e.dense(p);
        let c = certify(data, family, &penalty, &beta);
        if !c.passes(tol) {
            violations.push(format!("k = {} (max violation {:e})", e.k, c.max_violation()));
        }
        e.certificate = Some(CertificateSummary::from(&c));
        e.audit = Some(threshold_audit_check(&audit_fixed_point(data, family, &penalty, &beta)));
    }
    let rescore = report.max_rescore_error(data)?;
    report.config.command = "check".into();

    let text = match args.output.output {
        OutputFormat::Tsv => check_tsv(&report, tol),
        OutputFormat::Structured => to_json(&report)?,
    };
    emit(&args.output, &text)?;

    ensure!(
        rescore < RESCORE_TOL,
        "reported objectives differ from the rescored coefficients by {rescore:e}"
    );
    if !violations.is_empty() {
        bail!(
            "{} of {} entries exceed tolerance {tol:e}: {}",
            violations.len(),
            report.entries.len(),
            violations.join(", ")
        );
    }
    Ok(())
}

fn check_tsv(report: &RunReport, tol: f64) -> String {
    let mut out = String::from(
        "k\tmu\tbox\tcomplementarity\tstationarity\tduality_gap\taudit_total\taudit_disagreements\tpass\n",
    );
    for e in &report.entries {
        match (&e.certificate, &e.audit) {
            (Some(c), Some(a)) => {
                let pass = c.box_violation < tol && c.complementarity_violation < tol && c.stationarity_violation < tol;
                let _ = writeln!(
                    out,
                    "{}\t{}\t{:e}\t{:e}\t{:e}\t{:e}\t{}\t{}\t{}",
                    e.k,
                    e.mu,
                    c.box_violation,
                    c.complementarity_violation,
                    c.stationarity_violation,
                    c.duality_gap,
                    a.total,
                    a.disagreements,
                    pass
                );
            }
            _ => {
                let _ = writeln!(out, "{}\t{}\tNA\tNA\tNA\tNA\t0\t0\tNA", e.k, e.mu);
            }
        }
    }
    out
}

#[derive(Debug, Serialize)]
struct BenchRow {
    k: usize,
    mu: f64,
    cold_seconds: f64,
    warm_seconds: f64,
    cold_updates: Option<usize>,
    warm_updates: Option<usize>,
    cold_objective: Option<f64>,
    warm_objective: Option<f64>,
}

#[derive(Debug, Serialize)]
struct BenchReport {
    config: ConfigEcho,
    rows: Vec<BenchRow>,
    cold_total_seconds: f64,
    warm_total_seconds: f64,
    /// Largest relative difference between cold and warm objectives.
    max_objective_difference: Option<f64>,
}

pub fn bench(args: BenchArgs) -> Result<()> {
    ensure!(args.path_length >= 2, "--path-length must be at least 2");
    let config = fit_config(&args.model)?;
    let family = args.model.family;
    let loaded = load_args(&args.data, family)?;
    let data = &loaded.dataset;

    let spec = make_path(data, args.path_length)?;
    let t = Instant::now();
    let cold = run_path(data, family, args.model.lambda, &spec, &config, StartMode::Cold);
    let cold_total = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let warm = run_path(data, family, args.model.lambda, &spec, &config, StartMode::Warm);
    let warm_total = t.elapsed().as_secs_f64();

    let mut max_diff: Option<f64> = None;
    let rows: Vec<BenchRow> = cold
        .entries
        .iter()
        .zip(&warm.entries)
        .map(|(c, w)| {
            let co = c.result.as_ref().ok().map(|r| r.objective);
            let wo = w.result.as_ref().ok().map(|r| r.objective);
            if let (Some(a), Some(b)) = (co, wo) {
                let d = (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
                max_diff = Some(max_diff.map_or(d, |m| m.max(d)));
            }
            BenchRow {
                k: c.k,
                mu: c.mu,
                cold_seconds: c.runtime.as_secs_f64(),
                warm_seconds: w.runtime.as_secs_f64(),
                cold_updates: c.result.as_ref().ok().map(|r| r.coordinate_updates),
                warm_updates: w.result.as_ref().ok().map(|r| r.coordinate_updates),
                cold_objective: co,
                warm_objective: wo,
            }
        })
        .collect();

    let report = BenchReport {
        config: ConfigEcho {
            command: "bench".into(),
            input: Some(args.data.input.display().to_string()),
            response: Some(args.data.response.clone()),
            family,
            lambda: args.model.lambda,
            eps: args.model.eps,
            rule: args.model.rule,
            start: None,
            path_length: Some(args.path_length),
            standardize: args.data.standardize,
            seed: None,
        },
        rows,
        cold_total_seconds: cold_total,
        warm_total_seconds: warm_total,
        max_objective_difference: max_diff,
    };
    let text = match args.output.output {
        OutputFormat::Structured => to_json(&report)?,
        OutputFormat::Tsv => {
            let na = |v: Option<usize>| v.map_or_else(|| "NA".to_string(), |u| u.to_string());
            let mut out = String::from("k\tmu\tcold_seconds\twarm_seconds\tcold_updates\twarm_updates\n");
            for r in &report.rows {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{:.6}\t{:.6}\t{}\t{}",
                    r.k,
                    r.mu,
                    r.cold_seconds,
                    r.warm_seconds,
                    na(r.cold_updates),
                    na(r.warm_updates)
                );
            }
            let _ = writeln!(out, "total\t\t{cold_total:.6}\t{warm_total:.6}\t\t");
            out
        }
    };
    emit(&args.output, &text)
}

pub fn generate(args: GenerateArgs) -> Result<()> {
    let s = synthesize(&SyntheticSpec {
        n: args.n,
        p: args.p,
        family: args.family,
        correlation: args.correlation,
        sparsity: args.sparsity,
        seed: args.seed,
        min_class_fraction: args.min_class_fraction,
        signal: args.signal,
    })?;
    let names = default_names(s.dataset.p());
    match &args.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            export(&s.dataset, &names, &args.response, args.delimiter, BufWriter::new(file))?;
        }
        None => export(&s.dataset, &names, &args.response, args.delimiter, io::stdout().lock())?,
    }
    if let Some(path) = &args.truth {
        let mut text = String::new();
        for b in &s.truth {
            let _ = writeln!(text, "{b}");
        }
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
