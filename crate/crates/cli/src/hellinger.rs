use potcast::gpd::{gp_density, GpParams};
use potcast::validation::{hellinger_split, normalized_excess_density, GRID_SIZE};
use serde::Serialize;

use crate::config::ConfigFile;
use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, to_json, write_json};
use crate::simulate::{oracle_from_args, DEFAULT_V_GRID};
use crate::HellingerArgs;

#[derive(Debug, Serialize)]
struct OracleRow {
    v: f64,
    t: f64,
    hellinger: f64,
    abs_a: f64,
}

#[derive(Debug, Serialize)]
struct Report {
    mode: &'static str,
    oracle: Option<String>,
    rows: Vec<OracleRow>,
    gp_a: Option<[f64; 2]>,
    gp_b: Option<[f64; 2]>,
    hellinger: Option<f64>,
}

pub fn run(args: &HellingerArgs) -> CliResult<()> {
    let grid = args.grid_points.unwrap_or(GRID_SIZE);
    let report = match args.gp.as_slice() {
        [] => {
            let oracle = oracle_from_args(&args.oracle, &ConfigFile::default(), "burr")?;
            let v = if args.v.is_empty() {
                DEFAULT_V_GRID.to_vec()
            } else {
                args.v.clone()
            };
            let h = GpParams::new(1.0, oracle.gamma())?;
            let rows = v
                .iter()
                .map(|&v| {
                    if !(v > 1.0) {
                        return Err(CliError::Usage(format!("v must exceed 1, got {v}")));
                    }
                    let t = oracle.upper_quantile(1.0 / v)?;
                    let l = normalized_excess_density(&oracle, t)?;
                    let pts = [0.0, l.upper(), h.support().upper];
                    let d = hellinger_split(|y| l.density(y), |y| gp_density(y, &h), &pts, grid)?;
                    Ok(OracleRow {
                        v,
                        t,
                        hellinger: d,
                        abs_a: oracle.second_order(v).abs(),
                    })
                })
                .collect::<CliResult<Vec<_>>>()?;
            Report {
                mode: "oracle",
                oracle: Some(oracle.name()),
                rows,
                gp_a: None,
                gp_b: None,
                hellinger: None,
            }
        }
        [a, b] => {
            let pa = GpParams::new(a.sigma, a.gamma)?;
            let pb = GpParams::new(b.sigma, b.gamma)?;
            let pts = [0.0, pa.support().upper, pb.support().upper];
            let d = hellinger_split(|x| gp_density(x, &pa), |x| gp_density(x, &pb), &pts, grid)?;
            Report {
                mode: "gp",
                oracle: None,
                rows: Vec::new(),
                gp_a: Some([a.sigma, a.gamma]),
                gp_b: Some([b.sigma, b.gamma]),
                hellinger: Some(d),
            }
        }
        _ => return Err(CliError::Usage("--gp must be given exactly twice".into())),
    };
    if let Some(dir) = &args.out {
        ensure_dir(dir)?;
        write_json(&dir.join("hellinger.json"), &report)?;
    }
    print!("{}", String::from_utf8_lossy(&to_json(&report)?));
    Ok(())
}
