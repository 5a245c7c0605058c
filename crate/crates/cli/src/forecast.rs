use std::fmt::Write as _;
use std::fs;

use potcast::bayes::credible_interval_of;
use potcast::estimators::FitResult;
use potcast::gpd::GpParams;
use potcast::predictive::{
    density_grid, extreme_level, extreme_quantile, posterior_level, predictive_interval, Kind, PredictiveSpec,
};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::output::{cell, ensure_dir, write_json};
use crate::run::{fit_methods, load_excesses, method_entries, DataSummary, Fitted, MethodEntry, RunConfig, Settings};

/// Lowest and highest predictive quantiles spanned by the density grids.
const GRID_QUANTILES: (f64, f64) = (0.001, 0.999);

#[derive(Debug, Clone, Copy, PartialEq)]
enum Row {
    Base,
    Scaling(f64),
    Level(f64),
}

impl Row {
    fn c(&self) -> Option<f64> {
        match self {
            Row::Scaling(c) => Some(*c),
            _ => None,
        }
    }

    fn tag(&self) -> String {
        match self {
            Row::Base => "base".into(),
            Row::Scaling(c) => format!("{c}"),
            Row::Level(p) => format!("p{p}"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct Record {
    method: String,
    /// `base`, `c` or `p`.
    row: &'static str,
    c: Option<f64>,
    p: f64,
    p_percent: f64,
    q_level: f64,
    lower: f64,
    upper: f64,
    level: f64,
    p_ci: Option<[f64; 2]>,
    q_ci: Option<[f64; 2]>,
    excluded_draws: Option<usize>,
    density_file: String,
}

#[derive(Debug, Clone, Serialize)]
struct RowError {
    method: String,
    c: Option<f64>,
    p: Option<f64>,
    message: String,
}

#[derive(Debug, Serialize)]
struct ForecastReport {
    command: &'static str,
    source: &'static str,
    data: DataSummary,
    settings: Settings,
    fits: Vec<MethodEntry>,
    records: Vec<Record>,
    errors: Vec<RowError>,
}

enum Source<'a> {
    Point(GpParams),
    Chain(&'a [GpParams]),
}

struct Context<'a> {
    cfg: &'a RunConfig,
    threshold: f64,
    k: usize,
    n: usize,
}

impl Context<'_> {
    fn rows(&self) -> Vec<Row> {
        let mut rows = vec![Row::Base];
        rows.extend(self.cfg.c_list.iter().map(|&c| Row::Scaling(c)));
        rows.extend(self.cfg.p_list.iter().map(|&p| Row::Level(p)));
        rows
    }

    fn record(&self, method: &str, source: &Source, row: Row) -> CliResult<Record> {
        let (t, k, n) = (self.threshold, self.k, self.n);
        let base = k as f64 / n as f64;
        let ci = |v: &[f64]| -> CliResult<[f64; 2]> {
            let c = credible_interval_of(v, 1.0 - self.cfg.alpha)?;
            Ok([c.lower, c.upper])
        };
        let (spec, q_level, p_ci, q_ci, excluded) = match source {
            Source::Point(theta) => {
                let p = match row {
                    Row::Base => base,
                    Row::Scaling(c) => extreme_level(c, theta.gamma(), k, n)?,
                    Row::Level(p) => p,
                };
                let q = extreme_quantile(theta, t, k, n, p)?;
                (PredictiveSpec::plug_in(theta, t, k, n, p)?, q, None, None, None)
            }
            Source::Chain(draws) => match row {
                Row::Base => (PredictiveSpec::posterior(draws, t, k, n, base)?, t, None, None, None),
                Row::Level(p) => {
                    let qs = draws
                        .iter()
                        .map(|d| extreme_quantile(d, t, k, n, p))
                        .collect::<Result<Vec<_>, _>>()?;
                    let spec = PredictiveSpec::posterior(draws, t, k, n, p)?;
                    (spec, potcast::stats::mean(&qs), None, Some(ci(&qs)?), None)
                }
                Row::Scaling(c) => {
                    let level = posterior_level(draws, c, k, n)?;
                    let qs = draws
                        .iter()
                        .filter(|d| d.gamma() < 0.0)
                        .zip(&level.values)
                        .map(|(d, &p)| extreme_quantile(d, t, k, n, p))
                        .collect::<Result<Vec<_>, _>>()?;
                    let spec = PredictiveSpec::posterior(draws, t, k, n, level.mean)?;
                    let p_ci = ci(&level.values)?;
                    (
                        spec,
                        potcast::stats::mean(&qs),
                        Some(p_ci),
                        Some(ci(&qs)?),
                        Some(level.excluded),
                    )
                }
            },
        };
        let pi = predictive_interval(&spec, self.cfg.alpha, Kind::Peak)?;
        let density_file = format!("density_{method}_{}.csv", row.tag());
        let grid = density_grid(
            &spec,
            Kind::Peak,
            self.cfg.grid_points,
            GRID_QUANTILES.0,
            GRID_QUANTILES.1,
        )?;
        let mut text = String::from("x,density\n");
        for (x, d) in grid {
            let _ = writeln!(text, "{},{}", cell(Some(x)), cell(Some(d)));
        }
        fs::write(self.cfg.out.join(&density_file), text)?;
        Ok(Record {
            method: method.to_string(),
            row: match row {
                Row::Base => "base",
                Row::Scaling(_) => "c",
                Row::Level(_) => "p",
            },
            c: row.c(),
            p: spec.p(),
            p_percent: 100.0 * spec.p(),
            q_level,
            lower: pi.lower,
            upper: pi.upper,
            level: pi.level,
            p_ci,
            q_ci,
            excluded_draws: excluded,
            density_file,
        })
    }
}

fn usable_point(fit: &FitResult) -> Result<GpParams, String> {
    if !fit.converged {
        return Err("estimate did not converge".into());
    }
    if !fit.is_valid() {
        return Err(format!("estimate is {}", fit.validity.label()));
    }
    fit.params().map_err(|e| e.to_string())
}

pub fn run(cfg: &RunConfig) -> CliResult<()> {
    ensure_dir(&cfg.out)?;
    let mut sources: Vec<(String, Result<Source, String>)> = Vec::new();
    let (data_summary, fits, fitted);
    if let Some(inj) = cfg.injected {
        if cfg.k >= inj.n {
            return Err(CliError::Usage(format!("need k < n, got k={}, n={}", cfg.k, inj.n)));
        }
        let theta = GpParams::new(inj.theta.sigma, inj.theta.gamma)?;
        data_summary = DataSummary {
            path: None,
            n: inj.n,
            k: cfg.k,
            header: false,
            dropped_rows: 0,
            threshold: inj.threshold,
        };
        let fit = FitResult {
            sigma: theta.sigma(),
            gamma: theta.gamma(),
            method: potcast::estimators::Method::Ml,
            loglik: None,
            converged: true,
            iterations: 0,
            validity: potcast::estimators::Validity::Valid,
        };
        let mut entry = MethodEntry::point("injected", &fit, inj.threshold);
        entry.converged = None;
        entry.iterations = None;
        fits = vec![entry];
        fitted = Vec::new();
        sources.push(("injected".into(), Ok(Source::Point(theta))));
    } else {
        let (data, summary) = load_excesses(cfg)?;
        fitted = fit_methods(&data, cfg);
        fits = method_entries(&fitted, cfg, data.threshold())?;
        data_summary = summary;
    }
    for f in &fitted {
        let source = match &f.outcome {
            Err(e) => Err(e.clone()),
            Ok(Fitted::Point(fit)) => usable_point(fit).map(Source::Point),
            Ok(Fitted::Posterior { chain, .. }) => Ok(Source::Chain(chain.draws())),
        };
        sources.push((f.method.label().to_string(), source));
    }

    let ctx = Context {
        cfg,
        threshold: data_summary.threshold,
        k: cfg.k,
        n: data_summary.n,
    };
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (method, source) in &sources {
        let source = match source {
            Ok(s) => s,
            Err(e) => {
                errors.push(RowError {
                    method: method.clone(),
                    c: None,
                    p: None,
                    message: e.clone(),
                });
                continue;
            }
        };
        for row in ctx.rows() {
            match ctx.record(method, source, row) {
                Ok(r) => records.push(r),
                Err(CliError::Io(e)) => return Err(CliError::Io(e)),
                Err(e) => errors.push(RowError {
                    method: method.clone(),
                    c: row.c(),
                    p: match row {
                        Row::Level(p) => Some(p),
                        _ => None,
                    },
                    message: e.detail(),
                }),
            }
        }
    }

    println!(
        "{:>8} {:>6} {:>10} {:>10} {:>22}",
        "method", "c", "p (%)", "Q(p)", "predictive interval"
    );
    for r in &records {
        let c = r.c.map_or_else(|| "-".to_string(), |c| format!("{c}"));
        println!(
            "{:>8} {:>6} {:>10.3} {:>10.3} [{:>9.3}, {:>9.3}]",
            r.method, c, r.p_percent, r.q_level, r.lower, r.upper
        );
    }
    for e in &errors {
        println!("{:>8}: {}", e.method, e.message);
    }

    let report = ForecastReport {
        command: "forecast",
        source: if cfg.injected.is_some() { "injected" } else { "data" },
        data: data_summary,
        settings: Settings::from(cfg),
        fits,
        records,
        errors,
    };
    write_json(&cfg.out.join("forecast.json"), &report)
}
