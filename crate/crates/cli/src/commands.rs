use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use funcspan::approx::{density_curve, FitReport};
use funcspan::measure::{change_of_variables_check, discriminate, pushforward, ChangeOfVariables};
use funcspan::spaces::{canonical_family, separation_witness};
use funcspan::{fit_polynomial_baseline, validate_squashing, Model};
use serde::Serialize;
use serde_json::json;

use crate::config::Experiment;
use crate::error::CliError;

/// Options shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub jobs: usize,
    pub seed: Option<u64>,
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, CliError> {
    let f = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::io(path, e.into())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize") + "\n";
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn write_report(dir: &Path, stem: &str, report: &FitReport) -> Result<(), CliError> {
    let csv_path = dir.join(format!("{stem}.csv"));
    let f = File::create(&csv_path).map_err(|e| CliError::io(&csv_path, e))?;
    report
        .write_csv(BufWriter::new(f))
        .map_err(|e| csv_err(&csv_path, e))?;
    let t_path = dir.join("timings.csv");
    let f = File::create(&t_path).map_err(|e| CliError::io(&t_path, e))?;
    report
        .write_timings_csv(BufWriter::new(f))
        .map_err(|e| csv_err(&t_path, e))?;
    write_json(&dir.join("summary.json"), report)
}

fn run_density(
    exp: &Experiment,
    opts: &RunOptions,
    widths: Option<Vec<usize>>,
) -> Result<FitReport, CliError> {
    let mut cfg = exp.density_config(opts.jobs);
    if let Some(w) = widths {
        cfg.widths = w;
    }
    if let Some(s) = opts.seed {
        cfg.seeds = vec![s];
    }
    let report = density_curve(&exp.set, &exp.target, &exp.config.activation, &cfg)
        .map_err(CliError::numerical)?;
    for s in &report.summary {
        log::info!(
            "width {}: {} ok cells, median net-uniform error {:?}",
            s.width,
            s.cells_ok,
            s.median_uniform_error_net
        );
    }
    Ok(report)
}

pub fn sweep(exp: &Experiment, opts: &RunOptions, save_models: bool) -> Result<PathBuf, CliError> {
    let dir = exp.output_dir(opts.out.as_deref());
    let report = run_density(exp, opts, None)?;
    prepare_dir(&dir)?;
    write_report(&dir, "sweep", &report)?;
    if save_models {
        let models = dir.join("models");
        prepare_dir(&models)?;
        for c in &report.cells {
            if let Some(net) = &c.network {
                let p = models.join(format!("w{}_s{}.json", c.width, c.seed));
                Model::Network(net.clone())
                    .save(&p)
                    .map_err(|e| CliError::io(&p, e))?;
            }
        }
    }
    Ok(dir)
}

pub fn fit(exp: &Experiment, opts: &RunOptions, width: Option<usize>) -> Result<PathBuf, CliError> {
    let dir = exp.output_dir(opts.out.as_deref());
    let width = width.unwrap_or(*exp.config.widths.last().expect("validated nonempty"));
    if width == 0 {
        return Err(CliError::Config {
            path: exp.path.clone(),
            line: 1,
            message: "--width must be >= 1".into(),
        });
    }
    let mut one = opts.clone();
    one.seed = Some(opts.seed.unwrap_or(exp.config.seeds[0]));
    let report = run_density(exp, &one, Some(vec![width]))?;
    let cell = &report.cells[0];
    let net = match (&cell.network, &cell.error) {
        (Some(n), _) => n.clone(),
        (None, e) => return Err(CliError::Numerical(e.clone().unwrap_or_default())),
    };
    prepare_dir(&dir)?;
    write_report(&dir, "fit", &report)?;
    let p = dir.join("model.json");
    Model::Network(net)
        .save(&p)
        .map_err(|e| CliError::io(&p, e))?;
    Ok(dir)
}

pub fn validate_activation(exp: &Experiment, opts: &RunOptions) -> Result<PathBuf, CliError> {
    let dir = exp.output_dir(opts.out.as_deref());
    let report = validate_squashing(&exp.config.activation, &exp.config.scan)
        .map_err(CliError::numerical)?;
    log::info!("squashing flags all ok: {}", report.all_ok());
    prepare_dir(&dir)?;
    write_json(
        &dir.join("activation.json"),
        &json!({
            "activation": exp.config.activation,
            "scan": exp.config.scan,
            "report": report,
            "all_ok": report.all_ok(),
        }),
    )?;
    Ok(dir)
}

pub fn discriminate_cmd(exp: &Experiment, opts: &RunOptions) -> Result<PathBuf, CliError> {
    let section = exp
        .config
        .discriminate
        .as_ref()
        .ok_or_else(|| exp.missing("discriminate"))?;
    let dir = exp.output_dir(opts.out.as_deref());
    let fs = exp.resolve(&section.functionals);
    let nu = pushforward(&section.measure, &fs).map_err(CliError::numerical)?;
    for (i, j) in nu.near_coincident_pairs(1e-9) {
        log::warn!("pushforward atoms {i} and {j} are within 1e-9 but distinct");
    }
    let mut search = section.search.clone();
    if let Some(s) = opts.seed {
        search.seed = s;
    }
    let witness =
        discriminate(&nu, &exp.config.activation, &search).map_err(CliError::numerical)?;
    prepare_dir(&dir)?;
    let path = dir.join("discriminate.csv");
    let mut w = csv_writer(&path)?;
    let mut header: Vec<String> = (0..nu.dim()).map(|i| format!("w{i}")).collect();
    header.extend(["b".to_string(), "value".to_string()]);
    w.write_record(&header).map_err(|e| csv_err(&path, e))?;
    let mut row: Vec<String> = witness.w.iter().map(|x| format!("{x:e}")).collect();
    row.extend([format!("{:e}", witness.b), format!("{:e}", witness.value)]);
    w.write_record(&row).map_err(|e| csv_err(&path, e))?;
    w.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(dir)
}

pub fn pushforward_check(exp: &Experiment, opts: &RunOptions) -> Result<PathBuf, CliError> {
    let section = exp
        .config
        .pushforward_check
        .as_ref()
        .ok_or_else(|| exp.missing("pushforward_check"))?;
    let dir = exp.output_dir(opts.out.as_deref());
    let fs = exp.resolve(&section.functionals);
    let nu = pushforward(&section.measure, &fs).map_err(CliError::numerical)?;
    let g = &section.g;
    let check = change_of_variables_check(&section.measure, &fs, |t: &[f64]| g.eval(t))
        .map_err(CliError::numerical)?;
    let holds = check.holds(ChangeOfVariables::TOLERANCE);
    prepare_dir(&dir)?;
    write_json(
        &dir.join("pushforward_check.json"),
        &json!({
            "lhs": check.lhs,
            "rhs": check.rhs,
            "gap": check.gap(),
            "holds": holds,
            "source_total_variation": section.measure.total_variation(),
            "pushforward_total_variation": nu.total_variation(),
            "pushforward": nu,
        }),
    )?;
    if !holds {
        return Err(CliError::Numerical(format!(
            "change of variables gap {:e} exceeds tolerance",
            check.gap()
        )));
    }
    Ok(dir)
}

pub fn algebra_baseline(exp: &Experiment, opts: &RunOptions) -> Result<PathBuf, CliError> {
    let section = exp
        .config
        .algebra
        .as_ref()
        .ok_or_else(|| exp.missing("algebra"))?;
    let dir = exp.output_dir(opts.out.as_deref());
    let gens = exp.resolve(&section.generators);
    let resolution = section.resolution.unwrap_or(exp.config.train_resolution);
    let net = exp.set.net(resolution).map_err(CliError::numerical)?;
    let values = exp.target.values(&net).map_err(CliError::numerical)?;
    prepare_dir(&dir)?;
    let path = dir.join("algebra_baseline.csv");
    let mut w = csv_writer(&path)?;
    w.write_record([
        "degree",
        "max_residual",
        "mean_residual",
        "rms_residual",
        "rank",
        "columns",
        "status",
    ])
    .map_err(|e| csv_err(&path, e))?;
    let mut last = None;
    for degree in 0..=section.max_degree {
        let row = match fit_polynomial_baseline(&net, &values, &gens, degree, section.ridge) {
            Ok(fit) => {
                let row = vec![
                    degree.to_string(),
                    format!("{:e}", fit.max_residual),
                    format!("{:e}", fit.mean_residual),
                    format!("{:e}", fit.rms_residual),
                    fit.rank.to_string(),
                    fit.columns.to_string(),
                    "ok".to_string(),
                ];
                last = Some(fit.element);
                row
            }
            Err(e) if e.is_numerical() => {
                log::warn!("degree {degree}: {e}");
                let mut row = vec![degree.to_string()];
                row.extend(std::iter::repeat_n(String::new(), 5));
                row.push(format!("error: {e}"));
                row
            }
            Err(e) => return Err(CliError::numerical(e)),
        };
        w.write_record(&row).map_err(|e| csv_err(&path, e))?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    if let Some(element) = last {
        let p = dir.join("algebra_model.json");
        Model::AlgebraElement(element)
            .save(&p)
            .map_err(|e| CliError::io(&p, e))?;
    }
    Ok(dir)
}

pub fn separation_check(exp: &Experiment, opts: &RunOptions) -> Result<PathBuf, CliError> {
    let section = exp
        .config
        .separation
        .as_ref()
        .ok_or_else(|| exp.missing("separation"))?;
    let dir = exp.output_dir(opts.out.as_deref());
    let family = canonical_family(exp.set.kind());
    let net = exp
        .set
        .net(section.resolution)
        .map_err(CliError::numerical)?;
    let (mut distinct, mut identical, mut failures) = (0usize, 0usize, Vec::new());
    for i in 0..net.len() {
        for j in i + 1..net.len() {
            if net[i].coords() == net[j].coords() {
                identical += 1;
                continue;
            }
            distinct += 1;
            let found = separation_witness(&family, &net[i], &net[j], section.tol)
                .map_err(CliError::numerical)?;
            if found.is_none() {
                failures.push((i, j));
            }
        }
    }
    prepare_dir(&dir)?;
    write_json(
        &dir.join("separation.json"),
        &json!({
            "points": net.len(),
            "family_size": family.len(),
            "distinct_pairs": distinct,
            "identical_pairs": identical,
            "unseparated_pairs": failures,
        }),
    )?;
    if !failures.is_empty() {
        return Err(CliError::Numerical(format!(
            "{} distinct net pairs not separated by the canonical family",
            failures.len()
        )));
    }
    Ok(dir)
}
