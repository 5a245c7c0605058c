use serde::Serialize;

use crate::error::CliResult;
use crate::output::{ensure_dir, write_json};
use crate::run::{fit_methods, load_excesses, method_entries, DataSummary, MethodEntry, RunConfig, Settings};

#[derive(Debug, Serialize)]
struct FitReport {
    command: &'static str,
    data: DataSummary,
    settings: Settings,
    methods: Vec<MethodEntry>,
}

pub fn run(cfg: &RunConfig) -> CliResult<()> {
    let (data, summary) = load_excesses(cfg)?;
    ensure_dir(&cfg.out)?;
    let fits = fit_methods(&data, cfg);
    let methods = method_entries(&fits, cfg, data.threshold())?;
    println!(
        "n = {}, k = {}, threshold = {} ({} rows dropped)",
        summary.n, summary.k, summary.threshold, summary.dropped_rows
    );
    for m in &methods {
        match (&m.error, m.sigma, m.gamma) {
            (Some(e), _, _) => println!("{:>6}: failed: {e}", m.method),
            (None, Some(s), Some(g)) => println!("{:>6}: sigma = {s:.4}, gamma = {g:.4}", m.method),
            _ => {}
        }
    }
    let report = FitReport {
        command: "fit",
        data: summary,
        settings: Settings::from(cfg),
        methods,
    };
    write_json(&cfg.out.join("fit.json"), &report)
}
