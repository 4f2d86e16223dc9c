mod args;
mod output;
mod plot;

use std::fmt;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::error::ErrorKind;
use clap::Parser;
use klsda::dataset::{self, DatasetError, EpochDataset, SyntheticConfig};
use klsda::divergence::{self, AnisotropyMatrix, DivergenceError};
use klsda::eval::{self, EvalError, EvalReport, Method};
use klsda::klsda::{self as fit, ColumnScaling, FitError, KlsdaConfig, ModelFile, SparseVector};
use klsda::larsen::SolverError;
use log::{info, warn};
use serde::Serialize;

use args::{
    BenchArgs, BetaplotArgs, Cli, Command, EvalArgs, FitArgs, FitKnobs, KlmapArgs, SynthArgs,
};
use output::{OutputDir, RunRecord, RUN_FILE};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Code {
    Usage = 1,
    Data = 2,
    Numerical = 3,
}

struct Failure {
    code: Code,
    error: anyhow::Error,
}

impl fmt::Debug for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

type CmdResult<T = ()> = Result<T, Failure>;

fn fail(code: Code, error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code,
        error: error.into(),
    }
}

fn usage(msg: impl fmt::Display) -> Failure {
    fail(Code::Usage, anyhow!("{msg}"))
}

fn data(e: impl Into<anyhow::Error>) -> Failure {
    fail(Code::Data, e)
}

fn solver_code(e: &SolverError) -> Code {
    match e {
        SolverError::Dimension(_) | SolverError::InvalidPenalty(_) => Code::Usage,
        _ => Code::Numerical,
    }
}

fn fit_code(e: &FitError) -> Code {
    match e {
        FitError::Config(_) => Code::Usage,
        FitError::Dataset(_) | FitError::Divergence(_) => Code::Data,
        FitError::Solver(s) => solver_code(s),
        FitError::DegenerateDirection { .. } | FitError::NoVertex { .. } | FitError::EmptyTable => {
            Code::Numerical
        }
    }
}

impl From<FitError> for Failure {
    fn from(e: FitError) -> Self {
        fail(fit_code(&e), e)
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        let code = match &e {
            EvalError::Fit(f) => fit_code(f),
            EvalError::UnknownMethod(_) => Code::Usage,
            _ => Code::Data,
        };
        fail(code, e)
    }
}

impl From<DatasetError> for Failure {
    fn from(e: DatasetError) -> Self {
        let code = match &e {
            DatasetError::InvalidConfig(_) | DatasetError::Split { .. } => Code::Usage,
            _ => Code::Data,
        };
        fail(code, e)
    }
}

impl From<DivergenceError> for Failure {
    fn from(e: DivergenceError) -> Self {
        data(e)
    }
}

/// Output-directory and file-system errors.
fn io(e: anyhow::Error) -> Failure {
    data(e)
}

fn parse_grid(spec: &str) -> CmdResult<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || {
        usage(format!(
            "λ₂ grid {spec:?}: expected lo:hi:count with 0 < lo ≤ hi and count ≥ 1"
        ))
    };
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || count == 0 || (count > 1 && hi == lo) {
        return Err(bad());
    }
    Ok(fit::log_grid(lo, hi, count))
}

fn klsda_config(knobs: &FitKnobs, method: Method) -> CmdResult<KlsdaConfig> {
    let id = match method {
        Method::Klsda(id) => id,
        Method::Flda => fit::ConfigId::Klsda0,
    };
    let mut cfg = KlsdaConfig::new(id, knobs.t_max);
    cfg.lambda2_grid = parse_grid(&knobs.lambda2_grid)?;
    cfg.q = knobs.q;
    cfg.n_bins = knobs.bins;
    cfg.epsilon = knobs.epsilon;
    cfg.column_scaling = knobs.scaling;
    cfg.max_outer_iters = knobs.max_outer;
    cfg.convergence_tol = knobs.tol;
    cfg.max_steps = knobs.max_steps;
    cfg.validate()?;
    Ok(cfg)
}

fn parse_method(s: &str) -> CmdResult<Method> {
    s.trim().parse().map_err(|_| {
        usage(format!(
            "unknown configuration {s:?} (expected klsda0..klsda3 or flda)"
        ))
    })
}

fn load(dir: &Path) -> CmdResult<EpochDataset> {
    let ds = dataset::load_dir(dir)?;
    info!(
        "loaded {}: n = {}, p = {} ({} channels × {} samples), class counts {:?}",
        dir.display(),
        ds.n(),
        ds.p(),
        ds.n_channels(),
        ds.n_times(),
        ds.class_counts()
    );
    Ok(ds)
}

fn record<T: Serialize>(out: &OutputDir, cli: &Cli, command: &str, config: &T) -> CmdResult {
    let rec = RunRecord {
        tool: "klsda",
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed: cli.seed,
        threads: rayon::current_num_threads(),
        out: &cli.out,
        config,
    };
    out.write_json(RUN_FILE, &rec).map_err(io)?;
    Ok(())
}

fn cmd_synth(cli: &Cli, a: &SynthArgs) -> CmdResult {
    let (center, width) = SyntheticConfig::default_bump_timing(a.times, a.fs);
    let cfg = SyntheticConfig {
        n_target: a.targets,
        n_nontarget: a.nontargets,
        n_channels: a.channels,
        n_times: a.times,
        fs_hz: a.fs,
        bump_amplitude: a.amplitude,
        bump_center_s: a.center.unwrap_or(center),
        bump_width_s: a.width.unwrap_or(width),
        active_channels: a.active_channels.clone(),
        noise_sigma: a.sigma,
        ar_coefficient: a.ar,
        seed: cli.seed,
    };
    cfg.validate()?;
    let out = OutputDir::claim(&cli.out).map_err(io)?;
    let ds = dataset::generate_synthetic(&cfg)?;
    ds.save(&cli.out)?;
    record(&out, cli, "synth", &cfg)?;
    info!(
        "wrote {} epochs ({} features) to {}",
        ds.n(),
        ds.p(),
        cli.out.display()
    );
    Ok(())
}

fn cmd_klmap(cli: &Cli, a: &KlmapArgs) -> CmdResult {
    let ds = load(&a.data)?;
    let out = OutputDir::claim(&cli.out).map_err(io)?;
    let jm = divergence::j_map_with_smoothing(&ds, a.bins, a.smoothing)?;
    out.write("jmap.csv", jm.to_csv(ds.fs_hz())).map_err(io)?;
    if a.svg {
        out.write("jmap.svg", jm.to_svg(ds.fs_hz())).map_err(io)?;
    }
    record(&out, cli, "klmap", a)?;
    let top = jm.top_indices(1);
    if let Some(&i) = top.first() {
        info!(
            "max J = {:.4} at channel {}, t = {:.3} s",
            jm.max(),
            i / ds.n_times(),
            (i % ds.n_times()) as f64 / ds.fs_hz()
        );
    }
    Ok(())
}

fn flda_model(ds: &EpochDataset, knobs: &FitKnobs, seed: u64) -> CmdResult<ModelFile> {
    let (xc, means) = dataset::center_columns(ds.x());
    let beta = eval::flda_direction(xc.view(), ds.labels())?;
    let ind = dataset::indicator(ds);
    Ok(ModelFile {
        config_id: Method::Flda.to_string(),
        q: 1,
        p: ds.p(),
        n_channels: ds.n_channels(),
        n_times: ds.n_times(),
        lambda2_selected: vec![],
        kappa_selected: vec![],
        residual_selected: vec![],
        converged: vec![true],
        beta: vec![SparseVector::from_dense(beta.view())],
        theta: vec![],
        pi: ind.pi.to_vec(),
        d_diag_summary: AnisotropyMatrix::identity(ds.p()).summary(),
        column_means: means.to_vec(),
        column_scaling: ColumnScaling::None,
        lambda2_grid: vec![],
        t_max: None,
        n_bins: knobs.bins,
        epsilon: knobs.epsilon,
        seed: Some(seed),
    })
}

fn cmd_fit(cli: &Cli, a: &FitArgs) -> CmdResult {
    let method = parse_method(&a.config)?;
    let cfg = klsda_config(&a.knobs, method)?;
    let ds = load(&a.data)?;
    let out = OutputDir::claim(&cli.out).map_err(io)?;
    let model = match method {
        Method::Flda => flda_model(&ds, &a.knobs, cli.seed)?,
        Method::Klsda(_) => {
            let m = fit::fit_dataset(&ds, &cfg)?;
            for (j, d) in m.selected.iter().enumerate() {
                info!(
                    "direction {}: λ₂ = {:e}, κ = {}, residual = {:.6}, {} outer iterations{}",
                    j + 1,
                    d.selection.lambda2,
                    d.selection.kappa,
                    d.selection.residual_sq,
                    d.outer_iterations,
                    if d.converged { "" } else { " (not converged)" }
                );
            }
            ModelFile::from_model(&m, ds.n_channels(), ds.n_times(), Some(cli.seed))
        }
    };
    for (j, b) in model.beta.iter().enumerate() {
        info!(
            "direction {}: {} of {} coefficients nonzero",
            j + 1,
            b.indices.len(),
            model.p
        );
    }
    out.write("model.json", model.to_json()).map_err(io)?;
    #[derive(Serialize)]
    struct Resolved<'a> {
        args: &'a FitArgs,
        klsda: Option<&'a KlsdaConfig>,
    }
    let resolved = Resolved {
        args: a,
        klsda: matches!(method, Method::Klsda(_)).then_some(&cfg),
    };
    record(&out, cli, "fit", &resolved)
}

/// Cross-validates `methods` on shared folds; returns the reports in order.
fn run_eval(
    ds: &EpochDataset,
    methods: &[Method],
    knobs: &FitKnobs,
    folds: usize,
    stratified: bool,
    seed: u64,
) -> CmdResult<Vec<EvalReport>> {
    let split = dataset::split_kfold(ds.n(), folds, seed, stratified.then(|| ds.labels()))?;
    let mut reports = Vec::with_capacity(methods.len());
    for &m in methods {
        let cfg = klsda_config(knobs, m)?;
        let r = eval::cross_validate_folds(ds, &split, m, &cfg, seed, stratified)?;
        info!(
            "{m}: mean AUC {} ± {} over {} folds, nonzeros {:?}, {:.2} s",
            r.mean_auc.map_or("n/a".into(), |v| format!("{v:.4}")),
            r.std_auc.map_or("n/a".into(), |v| format!("{v:.4}")),
            r.k,
            r.nonzeros
                .iter()
                .map(|n| n.map_or(-1, |v| v as i64))
                .collect::<Vec<_>>(),
            r.wall_time_s
        );
        reports.push(r);
    }
    Ok(reports)
}

fn check_failures(reports: &[EvalReport]) -> CmdResult {
    let failed: Vec<&str> = reports
        .iter()
        .filter(|r| r.has_failures())
        .map(|r| r.config_id.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(fail(
            Code::Numerical,
            anyhow!("fold failures in {}; see report.json", failed.join(", ")),
        ))
    }
}

fn cmd_eval(cli: &Cli, a: &EvalArgs) -> CmdResult {
    let methods = a
        .configs
        .iter()
        .map(|s| parse_method(s))
        .collect::<CmdResult<Vec<_>>>()?;
    if methods.is_empty() {
        return Err(usage("no configurations given"));
    }
    for &m in &methods {
        klsda_config(&a.knobs, m)?;
    }
    let ds = load(&a.data)?;
    let out = OutputDir::claim(&cli.out).map_err(io)?;
    let reports = run_eval(&ds, &methods, &a.knobs, a.folds, !a.no_stratify, cli.seed)?;
    out.write_json("report.json", &reports).map_err(io)?;
    out.write("summary.csv", eval::summary_csv(&reports))
        .map_err(io)?;
    record(&out, cli, "eval", a)?;
    check_failures(&reports)
}

fn sparsity_csv(reports: &[EvalReport]) -> String {
    let mut s = String::from("config,fold,nonzeros,p,fraction\n");
    for r in reports {
        for (i, nz) in r.nonzeros.iter().enumerate() {
            match nz {
                Some(nz) => s.push_str(&format!(
                    "{},{i},{nz},{},{}\n",
                    r.config_id,
                    r.p,
                    *nz as f64 / r.p as f64
                )),
                None => s.push_str(&format!("{},{i},,{},\n", r.config_id, r.p)),
            }
        }
    }
    s
}

fn print_table(reports: &[EvalReport]) {
    println!(
        "{:<8} {:>9} {:>9} {:>13}",
        "config", "mean_auc", "std_auc", "mean_sparsity"
    );
    for r in reports {
        let f = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
        println!(
            "{:<8} {:>9} {:>9} {:>13}",
            r.config_id,
            f(r.mean_auc),
            f(r.std_auc),
            f(r.mean_sparsity())
        );
    }
}

fn cmd_bench(cli: &Cli, a: &BenchArgs) -> CmdResult {
    for m in Method::ALL {
        klsda_config(&a.knobs, m)?;
    }
    let ds = load(&a.data)?;
    let out = OutputDir::claim(&cli.out).map_err(io)?;
    let reports = run_eval(
        &ds,
        &Method::ALL,
        &a.knobs,
        a.folds,
        !a.no_stratify,
        cli.seed,
    )?;
    out.write_json("report.json", &reports).map_err(io)?;
    out.write("summary.csv", eval::summary_csv(&reports))
        .map_err(io)?;
    out.write("sparsity.csv", sparsity_csv(&reports))
        .map_err(io)?;
    record(&out, cli, "bench", a)?;

    let nz = |id: &str| {
        reports
            .iter()
            .find(|r| r.config_id == id)
            .map(|r| r.nonzeros.clone())
    };
    if let (Some(k0), Some(k1)) = (nz("KLSDA0"), nz("KLSDA1")) {
        let more = k0
            .iter()
            .zip(&k1)
            .filter(|(a, b)| matches!((a, b), (Some(a), Some(b)) if b >= a))
            .count();
        info!(
            "KLSDA1 has at least as many nonzeros as KLSDA0 in {more} of {} folds",
            k0.len()
        );
    }
    if !cli.quiet {
        print_table(&reports);
    }
    check_failures(&reports)
}

fn cmd_betaplot(cli: &Cli, a: &BetaplotArgs) -> CmdResult {
    let text = std::fs::read_to_string(&a.model)
        .with_context(|| format!("{}: cannot read model", a.model.display()))
        .map_err(data)?;
    let model: ModelFile = serde_json::from_str(&text)
        .with_context(|| format!("{}: malformed model file", a.model.display()))
        .map_err(data)?;
    if a.direction == 0 || a.direction > model.beta.len() {
        return Err(usage(format!(
            "direction {} out of range 1..={}",
            a.direction,
            model.beta.len()
        )));
    }
    let j = a.direction - 1;
    if model.beta[j].indices.iter().any(|&i| i >= model.p) {
        return Err(data(anyhow!(
            "{}: coefficient index beyond p = {}",
            a.model.display(),
            model.p
        )));
    }
    let out = OutputDir::claim(&cli.out).map_err(io)?;
    out.write("beta.csv", plot::beta_csv(&model, j))
        .map_err(io)?;
    if a.svg {
        out.write("beta.svg", plot::beta_svg(&model, j))
            .map_err(io)?;
    }
    record(&out, cli, "betaplot", a)?;
    info!(
        "{} direction {}: {} nonzeros",
        model.config_id,
        a.direction,
        model.beta[j].indices.len()
    );
    Ok(())
}

/// Error chain on one line, skipping causes already quoted by their parent.
fn render(e: &anyhow::Error) -> String {
    let mut text = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !text.contains(&msg) {
            if !text.is_empty() {
                text.push_str(": ");
            }
            text.push_str(&msg);
        }
    }
    text
}

fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Synth(a) => cmd_synth(cli, a),
        Command::Klmap(a) => cmd_klmap(cli, a),
        Command::Fit(a) => cmd_fit(cli, a),
        Command::Eval(a) => cmd_eval(cli, a),
        Command::Betaplot(a) => cmd_betaplot(cli, a),
        Command::Bench(a) => cmd_bench(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(Code::Usage as u8),
            };
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.quiet {
            log::LevelFilter::Error
        } else {
            log::LevelFilter::Info
        })
        .parse_default_env()
        .format_timestamp(None)
        .init();
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
    {
        warn!("thread pool already initialized: {e}");
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", render(&f.error));
            ExitCode::from(f.code as u8)
        }
    }
}
