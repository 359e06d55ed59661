use std::path::Path;
use std::str::FromStr;

use ordinal_itr::evaluation::{format_table, Criterion};
use ordinal_itr::propensity::DEFAULT_PROBABILITY_FLOOR;
use ordinal_itr::simulation::generate_replicate;
use ordinal_itr::{
    cross_validate, empirical_propensity, empirical_value, fit_model, fit_proportional_odds, misclassification,
    run_scenario, tune, BenchConfig, CvConfig, Dataset, KernelKind, Method, MethodSpec, Model, ScenarioId,
    SolverConfig, TreatmentRule,
};

use crate::args::{
    BenchArgs, Command, CriterionArg, CvArgs, EvaluateArgs, FitArgs, Metric, ModelArgs, PredictArgs, SimulateArgs,
    TuneArgs,
};
use crate::config::{self, require, FileConfig, PropensitySource};
use crate::csv_io::{read_table, write_dataset, write_predictions, Table};
use crate::error::{CliError, CliResult};
use crate::model_file;

pub fn dispatch(command: &Command, file: &FileConfig) -> CliResult<()> {
    match command {
        Command::Simulate(a) => simulate(a, file),
        Command::Fit(a) => fit(a, file),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate(a, file),
        Command::Tune(a) => tune_cmd(a, file),
        Command::Cv(a) => cv(a, file),
        Command::Bench(a) => bench(a, file),
    }
}

fn distinct(a: &Path, b: &Path) -> CliResult<()> {
    if a == b {
        return Err(CliError::Usage(format!(
            "input and output both point to {}",
            a.display()
        )));
    }
    Ok(())
}

fn scenario(name: &str) -> CliResult<ScenarioId> {
    Ok(ScenarioId::from_str(name)?)
}

fn simulate(args: &SimulateArgs, file: &FileConfig) -> CliResult<()> {
    let id = scenario(&require(args.scenario.clone().or(file.scenario.clone()), "scenario")?)?;
    let n = require(args.n.or(file.n), "n")?;
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let sets = generate_replicate(id, n, seed, args.replicate)?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| CliError::io(&args.out_dir, e))?;
    for (name, set) in [("train", &sets.train), ("tune", &sets.tune), ("test", &sets.test)] {
        let path = args.out_dir.join(format!("{name}.csv"));
        write_dataset(&path, &set.data, Some(&set.truth))?;
    }
    let manifest = format!(
        "scenario={id}\nn={n}\nseed={seed}\nreplicate={}\nlevels={}\ndim={}\ntrain_rows={}\ntune_rows={}\ntest_rows={}\n",
        args.replicate,
        id.levels(),
        id.dim(),
        sets.train.data.len(),
        sets.tune.data.len(),
        sets.test.data.len()
    );
    let path = args.out_dir.join("manifest.txt");
    std::fs::write(&path, manifest).map_err(|e| CliError::io(&path, e))?;
    println!("wrote {} (scenario {id}, n={n}, seed={seed})", args.out_dir.display());
    Ok(())
}

/// Model options resolved against the config file.
struct Resolved {
    method: Method,
    kernel: KernelKind,
    propensity: Option<PropensitySource>,
    levels: Option<usize>,
}

fn resolve(m: &ModelArgs, file: &FileConfig) -> CliResult<Resolved> {
    let name = m
        .method
        .clone()
        .or(file.method.clone())
        .unwrap_or_else(|| "gowl".into());
    let strategy = m.strategy.clone().or(file.strategy.clone());
    let method = config::method(&name, strategy.as_deref(), m.shift.or(file.shift))?;
    let kernel = KernelKind::from_str(
        &m.kernel
            .clone()
            .or(file.kernel.clone())
            .unwrap_or_else(|| "linear".into()),
    )?;
    let propensity = m
        .propensity
        .clone()
        .or(file.propensity.clone())
        .map(|s| PropensitySource::from_str(&s))
        .transpose()?;
    Ok(Resolved {
        method,
        kernel,
        propensity,
        levels: m.levels.or(file.levels),
    })
}

/// Reads a training-style file and resolves its propensities.
fn load_dataset(path: &Path, source: Option<PropensitySource>, levels: Option<usize>) -> CliResult<(Dataset, Table)> {
    let table = read_table(path)?;
    let (a, r) = table.outcome(path)?;
    let levels = levels.unwrap_or_else(|| a.iter().copied().max().unwrap_or(0));
    if levels < 2 {
        return Err(CliError::Usage(format!(
            "{}: need at least 2 treatment levels",
            path.display()
        )));
    }
    let source = source.unwrap_or(if table.propensity.is_some() {
        PropensitySource::Column
    } else {
        PropensitySource::Uniform
    });
    let base = Dataset::with_uniform_propensity(table.x.clone(), a.clone(), r, levels)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let data = match source {
        PropensitySource::Uniform => base,
        PropensitySource::Column => {
            let pi = table.propensity.clone().ok_or_else(|| {
                CliError::Usage(format!(
                    "{}: propensity source `column` needs a `propensity` column",
                    path.display()
                ))
            })?;
            base.with_propensity(pi)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        PropensitySource::Empirical => empirical_propensity(&base)?.apply(&base, DEFAULT_PROBABILITY_FLOOR)?,
        PropensitySource::ProportionalOdds => {
            let fit = fit_proportional_odds(&table.x, &a, levels)?;
            if !fit.converged {
                eprintln!(
                    "warning: proportional-odds fit stopped after {} iterations (gradient {:.2e})",
                    fit.iterations, fit.gradient_norm
                );
            }
            fit.model.apply(&base, DEFAULT_PROBABILITY_FLOOR)?
        }
    };
    Ok((data, table))
}

fn check_dim(model: &Model, table: &Table, path: &Path) -> CliResult<()> {
    if model.dim() != table.dim() {
        return Err(CliError::Usage(format!(
            "{}: model expects {} covariates (x1..x{}) but the file has {}",
            path.display(),
            model.dim(),
            model.dim(),
            table.dim()
        )));
    }
    Ok(())
}

fn report_convergence(model: &Model, path: &Path) -> CliResult<()> {
    let (kkt, converged) = model_file::convergence(model);
    if converged {
        return Ok(());
    }
    Err(CliError::Numerical(format!(
        "solver reached its iteration limit with KKT violation {kkt:.3e} (tolerance {:.0e}); model written to {}",
        SolverConfig::default().kkt_tol,
        path.display()
    )))
}

fn fit(args: &FitArgs, file: &FileConfig) -> CliResult<()> {
    distinct(&args.input, &args.model)?;
    let r = resolve(&args.model_args, file)?;
    let lambda = require(args.lambda.or(file.lambda), "lambda")?;
    let spec = config::kernel_spec(r.kernel, args.sigma.or(file.sigma))?;
    let (data, _) = load_dataset(&args.input, r.propensity, r.levels)?;
    let model = fit_model(r.method, &data, lambda, spec, &SolverConfig::default())?;
    model_file::save(&args.model, &model)?;
    let (kkt, converged) = model_file::convergence(&model);
    println!(
        "method={} kernel={} lambda={lambda} levels={} kkt_violation={kkt:.3e} converged={converged}",
        r.method,
        spec.name(),
        data.levels()
    );
    report_convergence(&model, &args.model)
}

fn predict(args: &PredictArgs) -> CliResult<()> {
    distinct(&args.input, &args.output)?;
    let model = model_file::load(&args.model)?;
    let table = read_table(&args.input)?;
    check_dim(&model, &table, &args.input)?;
    let predictions = (0..table.len())
        .map(|i| model.predict(table.x.row(i).as_slice().expect("standard layout")))
        .collect::<ordinal_itr::Result<Vec<_>>>()?;
    write_predictions(&args.output, &table, &predictions)?;
    println!("wrote {} predictions to {}", predictions.len(), args.output.display());
    Ok(())
}

fn evaluate(args: &EvaluateArgs, file: &FileConfig) -> CliResult<()> {
    let model = model_file::load(&args.model)?;
    let source = args
        .propensity
        .clone()
        .or(file.propensity.clone())
        .map(|s| PropensitySource::from_str(&s))
        .transpose()?;
    let table = read_table(&args.input)?;
    check_dim(&model, &table, &args.input)?;
    let want_misc = args.metric != Metric::Value;
    if args.metric == Metric::Misc && table.truth.is_none() {
        return Err(CliError::Usage(format!(
            "{}: MISC needs a `truth` column with the optimal treatment; without it only the value can be \
             estimated (use --metric value)",
            args.input.display()
        )));
    }
    if args.metric != Metric::Misc {
        let (data, _) = load_dataset(&args.input, source, Some(model.levels()))?;
        println!("value={:.6}", empirical_value(&model, &data)?);
    }
    if want_misc {
        match &table.truth {
            Some(truth) => {
                let data = Dataset::with_uniform_propensity(
                    table.x.clone(),
                    vec![1; table.len()],
                    vec![0.0; table.len()],
                    model.levels(),
                )?;
                println!("misc={:.6}", misclassification(&model, &data, truth)?);
            }
            None => println!("misc=NA (no truth column: value-only mode)"),
        }
    }
    Ok(())
}

fn tune_cmd(args: &TuneArgs, file: &FileConfig) -> CliResult<()> {
    distinct(&args.train, &args.model)?;
    distinct(&args.tune_set, &args.model)?;
    let r = resolve(&args.model_args, file)?;
    let grid = config::grid(
        r.kernel,
        args.grid.lambda_grid.clone().or(file.lambda_grid.clone()),
        args.grid.sigma_grid.clone().or(file.sigma_grid.clone()),
    )?;
    let (train, _) = load_dataset(&args.train, r.propensity, r.levels)?;
    let (tune_set, tune_table) = load_dataset(&args.tune_set, r.propensity, Some(train.levels()))?;
    let criterion = match args.criterion.or(match file.criterion.as_deref() {
        None => None,
        Some("value") => Some(CriterionArg::Value),
        Some("misc") => Some(CriterionArg::Misc),
        Some(other) => {
            return Err(CliError::Usage(format!(
                "unknown criterion `{other}` (valid: value, misc)"
            )))
        }
    }) {
        None | Some(CriterionArg::Value) => Criterion::Value,
        Some(CriterionArg::Misc) => Criterion::Misc(tune_table.truth.as_deref().ok_or_else(|| {
            CliError::Usage(format!(
                "{}: criterion `misc` needs a `truth` column",
                args.tune_set.display()
            ))
        })?),
    };
    let tuned = tune(&train, &tune_set, r.method, &grid, criterion, &SolverConfig::default())?;
    for (cell, res) in &tuned.evaluated {
        let sigma = cell.kernel.sigma().map_or("-".to_string(), |s| s.to_string());
        match res {
            Ok(score) => println!("lambda={:.6e} sigma={sigma} score={score:.6}", cell.lambda),
            Err(e) => println!("lambda={:.6e} sigma={sigma} failed: {e}", cell.lambda),
        }
    }
    println!(
        "chosen lambda={:.6e} sigma={} score={:.6}",
        tuned.cell.lambda,
        tuned.cell.kernel.sigma().map_or("-".to_string(), |s| s.to_string()),
        tuned.score
    );
    model_file::save(&args.model, &tuned.model)?;
    Ok(())
}

fn cv(args: &CvArgs, file: &FileConfig) -> CliResult<()> {
    let r = resolve(&args.model_args, file)?;
    let grid = config::grid(
        r.kernel,
        args.grid.lambda_grid.clone().or(file.lambda_grid.clone()),
        args.grid.sigma_grid.clone().or(file.sigma_grid.clone()),
    )?;
    let (data, _) = load_dataset(&args.input, r.propensity, r.levels)?;
    let defaults = CvConfig::default();
    let cfg = CvConfig {
        folds: args.folds.or(file.folds).unwrap_or(defaults.folds),
        reps: args.reps.or(file.reps).unwrap_or(defaults.reps),
        seed: args.seed.or(file.seed).unwrap_or(defaults.seed),
        ..defaults
    };
    let report = cross_validate(&data, r.method, &grid, &cfg)?;
    println!(
        "folds={} reps={} value_mean={:.6} value_sd={:.6} evaluated={} missing={}",
        report.folds, report.reps, report.summary.mean, report.summary.sd, report.summary.count, report.missing
    );
    for (rep, fold, msg) in &report.failures {
        eprintln!("rep {rep} fold {fold}: {msg}");
    }
    if report.summary.count == 0 {
        return Err(CliError::Numerical("every fold failed".into()));
    }
    Ok(())
}

/// `gowl-linear`, `owl-gaussian`, `pls_l1`, ...
pub fn method_spec(label: &str, grid: &ordinal_itr::TuningGrid) -> CliResult<MethodSpec> {
    let lower = label.trim().to_ascii_lowercase();
    if lower == "pls_l1" || lower == "pls-l1" {
        return Ok(MethodSpec {
            method: Method::PlsL1,
            grid: ordinal_itr::TuningGrid {
                kernel: KernelKind::Linear,
                ..grid.clone()
            },
        });
    }
    let (method, kernel) = lower.split_once('-').ok_or_else(|| {
        CliError::Usage(format!(
            "unknown method `{label}` (valid: gowl-linear, gowl-gaussian, owl-linear, owl-gaussian, pls_l1)"
        ))
    })?;
    let method = match method {
        "gowl" => Method::gowl(),
        "owl" => Method::owl(),
        _ => {
            return Err(CliError::Usage(format!(
                "unknown method `{label}` (valid: gowl-linear, gowl-gaussian, owl-linear, owl-gaussian, pls_l1)"
            )))
        }
    };
    Ok(MethodSpec {
        method,
        grid: ordinal_itr::TuningGrid {
            kernel: KernelKind::from_str(kernel)?,
            ..grid.clone()
        },
    })
}

fn bench(args: &BenchArgs, file: &FileConfig) -> CliResult<()> {
    let scenarios = args
        .scenarios
        .clone()
        .or(file.scenarios.clone())
        .or(file.scenario.clone().map(|s| vec![s]))
        .unwrap_or_else(|| vec!["L3".into()]);
    let scenarios = scenarios.iter().map(|s| scenario(s)).collect::<CliResult<Vec<_>>>()?;
    let labels = args
        .methods
        .clone()
        .or(file.methods.clone())
        .unwrap_or_else(|| vec!["gowl-linear".into()]);
    let base = config::grid(
        KernelKind::Linear,
        args.grid.lambda_grid.clone().or(file.lambda_grid.clone()),
        args.grid.sigma_grid.clone().or(file.sigma_grid.clone()),
    )?;
    let methods = labels
        .iter()
        .map(|l| method_spec(l, &base))
        .collect::<CliResult<Vec<_>>>()?;
    let n = args.n.or(file.n).unwrap_or(300);
    let replicates = args.replicates.or(file.replicates).unwrap_or(20);
    if replicates == 0 || n == 0 {
        return Err(CliError::Usage("n and replicates must be positive".into()));
    }
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let mut reports = Vec::new();
    for id in scenarios {
        let mut cfg = BenchConfig::new(id, n, replicates, seed, methods.clone());
        cfg.tune_by_misc = args.tune_by_misc;
        for report in run_scenario(&cfg)? {
            for (rep, msg) in &report.failures {
                eprintln!("{id} {} replicate {rep}: {msg}", report.method);
            }
            reports.push(report);
        }
    }
    let table = format_table(&reports);
    print!("{table}");
    if let Some(path) = &args.output {
        std::fs::write(path, &table).map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}
