use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit_greedy_on, fit_random_features_on, Greedy, RandomFeatures};
use super::{lp_error, uniform_error, RadonSample, Target};
use crate::activation::SquashingFn;
use crate::error::{Error, Result};
use crate::measure::truncate;
use crate::network::Network;
use crate::spaces::CompactSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Fitter {
    RandomFeatures(RandomFeatures),
    Greedy(Greedy),
}

/// Probability measure placed on the evaluation net.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SampleSpec {
    #[default]
    Uniform,
    Random {
        seed: u64,
    },
}

impl SampleSpec {
    pub fn build(&self, net: Vec<crate::spaces::SpacePoint>) -> Result<RadonSample> {
        match self {
            SampleSpec::Uniform => RadonSample::uniform(net),
            SampleSpec::Random { seed } => RadonSample::random(net, *seed),
        }
    }
}

fn default_p_values() -> Vec<f64> {
    vec![1.0, 2.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub widths: Vec<usize>,
    pub seeds: Vec<u64>,
    pub fitter: Fitter,
    pub train_resolution: usize,
    /// Defaults to four times the training resolution.
    #[serde(default)]
    pub eval_resolution: Option<usize>,
    #[serde(default)]
    pub sample: SampleSpec,
    #[serde(default = "default_p_values")]
    pub p_values: Vec<f64>,
    /// Clamp level applied to training values before fitting.
    #[serde(default)]
    pub truncate: Option<f64>,
    /// Worker cap; 0 means the rayon default.
    #[serde(default)]
    pub jobs: usize,
}

impl DensityConfig {
    pub fn eval_resolution(&self) -> usize {
        self.eval_resolution.unwrap_or(4 * self.train_resolution)
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.is_empty() {
            return Err(Error::Empty("widths"));
        }
        if self.widths[0] == 0 {
            return Err(Error::invalid("widths must be >= 1"));
        }
        if self.widths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("widths must be strictly increasing"));
        }
        if self.seeds.is_empty() {
            return Err(Error::Empty("seeds"));
        }
        if self.train_resolution == 0 {
            return Err(Error::invalid("train_resolution must be >= 1"));
        }
        if self.eval_resolution() <= self.train_resolution {
            return Err(Error::invalid(
                "eval_resolution must exceed train_resolution",
            ));
        }
        for p in &self.p_values {
            if !(p.is_finite() && *p >= 1.0) {
                return Err(Error::invalid(format!("p_values must be >= 1, got {p}")));
            }
        }
        if let Some(n) = self.truncate {
            if !(n.is_finite() && n > 0.0) {
                return Err(Error::invalid("truncate must be positive"));
            }
        }
        match &self.fitter {
            Fitter::RandomFeatures(rf) => {
                if !(rf.scale.is_finite() && rf.scale > 0.0) {
                    return Err(Error::invalid("fitter scale must be positive"));
                }
                if !(rf.ridge.is_finite() && rf.ridge >= 0.0) {
                    return Err(Error::invalid("ridge must be >= 0"));
                }
            }
            Fitter::Greedy(g) => {
                if !(g.scale.is_finite() && g.scale > 0.0) {
                    return Err(Error::invalid("fitter scale must be positive"));
                }
                if g.pool_size == 0 {
                    return Err(Error::invalid("pool_size must be >= 1"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRecord {
    pub width: usize,
    pub seed: u64,
    /// Maximum over the evaluation net.
    pub uniform_error_net: Option<f64>,
    /// `(p, error)` in the order of the configured p values.
    pub lp_errors: Vec<(f64, f64)>,
    #[serde(skip)]
    pub fit_time_ms: f64,
    /// `None` on success, the error message otherwise.
    pub error: Option<String>,
    #[serde(skip)]
    pub network: Option<Network>,
}

impl CellRecord {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WidthSummary {
    pub width: usize,
    pub cells_ok: usize,
    pub median_uniform_error_net: Option<f64>,
    pub median_lp_errors: Vec<(f64, Option<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub widths: Vec<usize>,
    pub seeds: Vec<u64>,
    pub train_points: usize,
    pub eval_points: usize,
    /// Cells in `(width, seed)` order.
    pub cells: Vec<CellRecord>,
    pub summary: Vec<WidthSummary>,
    pub config: DensityConfig,
}

pub(crate) fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    Some(if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    })
}

fn metric_name(p: f64) -> String {
    format!("lp_error_p{p}")
}

impl FitReport {
    pub fn cell(&self, width: usize, seed: u64) -> Option<&CellRecord> {
        self.cells
            .iter()
            .find(|c| c.width == width && c.seed == seed)
    }

    pub fn width_summary(&self, width: usize) -> Option<&WidthSummary> {
        self.summary.iter().find(|s| s.width == width)
    }

    /// One row per `(width, seed, metric)`: `width,seed,metric,value,status`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["width", "seed", "metric", "value", "status"])?;
        for c in &self.cells {
            let status = match &c.error {
                None => "ok".to_string(),
                Some(e) => format!("error: {e}"),
            };
            let mut row = |metric: &str, v: Option<f64>| {
                let value = v.map(|x| format!("{x:e}")).unwrap_or_default();
                w.write_record([
                    c.width.to_string(),
                    c.seed.to_string(),
                    metric.to_string(),
                    value,
                    status.clone(),
                ])
            };
            row("uniform_error_net", c.uniform_error_net)?;
            for p in &self.config.p_values {
                let v = c.lp_errors.iter().find(|(q, _)| q == p).map(|(_, e)| *e);
                row(&metric_name(*p), v)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// `width,seed,fit_time_ms`. Wall-clock, so not reproducible.
    pub fn write_timings_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["width", "seed", "fit_time_ms"])?;
        for c in &self.cells {
            w.write_record([
                c.width.to_string(),
                c.seed.to_string(),
                format!("{:.3}", c.fit_time_ms),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fits every `(width, seed)` cell and records net-uniform and `L^p` errors.
///
/// A failing cell is recorded with its error and does not abort the sweep.
pub fn density_curve(
    set: &CompactSet,
    target: &Target,
    psi: &SquashingFn,
    cfg: &DensityConfig,
) -> Result<FitReport> {
    cfg.validate()?;
    psi.validate_params()?;
    set.kind().ensure_same(&target.kind())?;
    let train = set.net(cfg.train_resolution)?;
    let mut train_values = target.values(&train)?;
    if let Some(n) = cfg.truncate {
        train_values = truncate(&train_values, n)?;
    }
    let eval = set.net(cfg.eval_resolution())?;
    let sample = cfg.sample.build(eval.clone())?;

    let cells: Vec<(usize, u64)> = cfg
        .widths
        .iter()
        .flat_map(|w| cfg.seeds.iter().map(move |s| (*w, *s)))
        .collect();

    let run = |&(width, seed): &(usize, u64)| -> CellRecord {
        let start = Instant::now();
        let fitted = match &cfg.fitter {
            Fitter::RandomFeatures(rf) => {
                fit_random_features_on(&train, &train_values, set.kind(), psi, width, rf, seed)
            }
            Fitter::Greedy(g) => {
                fit_greedy_on(&train, &train_values, set.kind(), psi, width, g, seed)
                    .map(|f| f.network)
            }
        };
        let fit_time_ms = start.elapsed().as_secs_f64() * 1e3;
        let measured = fitted.and_then(|net| {
            let u = uniform_error(&net, target, &eval)?;
            let lps = cfg
                .p_values
                .iter()
                .map(|p| Ok((*p, lp_error(&net, target, &sample, *p)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok((net, u, lps))
        });
        match measured {
            Ok((net, u, lps)) => CellRecord {
                width,
                seed,
                uniform_error_net: Some(u),
                lp_errors: lps,
                fit_time_ms,
                error: None,
                network: Some(net),
            },
            Err(e) => {
                log::warn!("cell width={width} seed={seed} failed: {e}");
                CellRecord {
                    width,
                    seed,
                    uniform_error_net: None,
                    lp_errors: Vec::new(),
                    fit_time_ms,
                    error: Some(e.to_string()),
                    network: None,
                }
            }
        }
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let records: Vec<CellRecord> = pool.install(|| cells.par_iter().map(run).collect());

    let summary = cfg
        .widths
        .iter()
        .map(|&width| {
            let ok: Vec<&CellRecord> = records
                .iter()
                .filter(|c| c.width == width && c.is_ok())
                .collect();
            WidthSummary {
                width,
                cells_ok: ok.len(),
                median_uniform_error_net: median(
                    ok.iter().filter_map(|c| c.uniform_error_net).collect(),
                ),
                median_lp_errors: cfg
                    .p_values
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (*p, median(ok.iter().map(|c| c.lp_errors[i].1).collect())))
                    .collect(),
            }
        })
        .collect();

    Ok(FitReport {
        widths: cfg.widths.clone(),
        seeds: cfg.seeds.clone(),
        train_points: train.len(),
        eval_points: eval.len(),
        cells: records,
        summary,
        config: cfg.clone(),
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::TAU;

    use super::*;
    use crate::approx::TargetExpr;
    use crate::spaces::{Anchor, ParamMap, SpaceInstance, SpaceKind};

    fn segment() -> CompactSet {
        CompactSet::new(
            SpaceInstance::euclidean(1).unwrap(),
            1,
            ParamMap::Affine {
                offset: Anchor::Values(vec![0.0]),
                directions: vec![Anchor::Values(vec![1.0])],
            },
        )
        .unwrap()
    }

    fn config(widths: Vec<usize>) -> DensityConfig {
        DensityConfig {
            widths,
            seeds: vec![0, 1, 2],
            fitter: Fitter::RandomFeatures(RandomFeatures {
                scale: 20.0,
                ridge: 1e-10,
                bias_range: None,
            }),
            train_resolution: 64,
            eval_resolution: None,
            sample: SampleSpec::Random { seed: 5 },
            p_values: vec![1.0, 2.0],
            truncate: None,
            jobs: 2,
        }
    }

    fn sine() -> Target {
        Target::new(
            SpaceKind::Euclidean { dim: 1 },
            TargetExpr::sin(TargetExpr::scaled(TAU, TargetExpr::coordinate(0))),
        )
        .unwrap()
    }

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(vec![]), None);
    }

    #[test]
    fn rejects_bad_configs() {
        let k = segment();
        let psi = SquashingFn::logistic();
        assert!(density_curve(&k, &sine(), &psi, &config(vec![10, 10])).is_err());
        assert!(density_curve(&k, &sine(), &psi, &config(vec![])).is_err());
        let mut c = config(vec![5]);
        c.eval_resolution = Some(64);
        assert!(density_curve(&k, &sine(), &psi, &c).is_err());
        let mut c = config(vec![5]);
        c.p_values = vec![0.5];
        assert!(density_curve(&k, &sine(), &psi, &c).is_err());
    }

    #[test]
    fn sweep_decreases_and_respects_lp_chain() {
        let k = segment();
        let psi = SquashingFn::logistic();
        let r = density_curve(&k, &sine(), &psi, &config(vec![10, 200])).unwrap();
        assert_eq!(r.cells.len(), 6);
        assert_eq!(r.eval_points, 256);
        let order: Vec<(usize, u64)> = r.cells.iter().map(|c| (c.width, c.seed)).collect();
        assert_eq!(
            order,
            [(10, 0), (10, 1), (10, 2), (200, 0), (200, 1), (200, 2)]
        );
        let m10 = r
            .width_summary(10)
            .unwrap()
            .median_uniform_error_net
            .unwrap();
        let m200 = r
            .width_summary(200)
            .unwrap()
            .median_uniform_error_net
            .unwrap();
        assert!(m200 <= m10);
        for c in &r.cells {
            let u = c.uniform_error_net.unwrap();
            for (_, lp) in &c.lp_errors {
                assert!(*lp <= u + 1e-9);
            }
        }
    }

    #[test]
    fn failing_cells_are_recorded() {
        let k = segment();
        let psi = SquashingFn::logistic();
        let mut c = config(vec![1, 64, 100]);
        c.fitter = Fitter::RandomFeatures(RandomFeatures {
            scale: 20.0,
            ridge: 0.0,
            bias_range: None,
        });
        c.train_resolution = 8;
        // 64 and 100 unknowns exceed 8 training points, so ridge 0 is rank-deficient.
        let r = density_curve(&k, &sine(), &psi, &c).unwrap();
        assert!(r.cell(1, 0).unwrap().is_ok());
        assert!(!r.cell(64, 0).unwrap().is_ok());
        assert_eq!(r.width_summary(100).unwrap().cells_ok, 0);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text
            .lines()
            .any(|l| l.starts_with("64,0,uniform_error_net,,error: ")));
    }

    #[test]
    fn reports_are_reproducible_across_job_counts() {
        let k = segment();
        let psi = SquashingFn::logistic();
        let mut csvs = Vec::new();
        for jobs in [1, 3] {
            let mut c = config(vec![5, 20]);
            c.jobs = jobs;
            let r = density_curve(&k, &sine(), &psi, &c).unwrap();
            let mut buf = Vec::new();
            r.write_csv(&mut buf).unwrap();
            csvs.push(buf);
        }
        assert_eq!(csvs[0], csvs[1]);
        let text = String::from_utf8(csvs.pop().unwrap()).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * 3 * 3);
        assert_eq!(
            text.lines().next().unwrap(),
            "width,seed,metric,value,status"
        );
    }

    #[test]
    fn truncation_applies_to_training_values() {
        let k = segment();
        let psi = SquashingFn::logistic();
        let step = Target::new(
            SpaceKind::Euclidean { dim: 1 },
            TargetExpr::Product(vec![
                TargetExpr::Const(5.0),
                TargetExpr::Step {
                    arg: Box::new(TargetExpr::coordinate(0)),
                    threshold: 0.5,
                },
            ]),
        )
        .unwrap();
        let mut c = config(vec![50]);
        c.truncate = Some(1.0);
        let r = density_curve(&k, &step, &psi, &c).unwrap();
        // Fitting a clamped copy leaves an error near 4 where the target is 5.
        assert!(r.cells[0].uniform_error_net.unwrap() > 3.0);
    }
}
