use super::{ensure_dir, fit_vine, pct, prepare, write_json, write_text};
use crate::config::RunConfig;
use crate::data::Table;
use crate::error::CliResult;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::PathBuf;
use vinerisk::bicop::FitOptions;
use vinerisk::dvine::DVineRegressionModel;
use vinerisk::lqr::{
    coefficient_table, detect_quantile_crossing, fit_lqr_bootstrap, invert_lqr_bisection, BisectionOptions,
    Inversion, InversionMiss, LqrData, QuantileGrid,
};
use vinerisk::FamilyTag;

#[derive(Debug, Clone)]
pub struct BenchmarkArgs {
    pub data: PathBuf,
    pub config: Option<PathBuf>,
    /// Overrides the configured grid levels.
    pub levels: Option<Vec<f64>>,
    pub thresholds: Vec<f64>,
    pub out: PathBuf,
}

/// Per-threshold counts for one method.
#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    above_floor: usize,
    not_found: usize,
    multiple: usize,
}

fn vine_rows(model: &DVineRegressionModel, names: &[String], rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let order: Vec<usize> =
        model.covariate_names().iter().map(|n| names.iter().position(|m| m == n).expect("fitted column")).collect();
    rows.iter().map(|r| order.iter().map(|&k| r[k]).collect()).collect()
}

fn vine_tally(model: &DVineRegressionModel, rows: &[Vec<f64>], c: f64, floor: f64) -> CliResult<Tally> {
    let alphas = rows.par_iter().map(|x| model.exceedance(c, x)).collect::<Result<Vec<_>, _>>()?;
    Ok(Tally { above_floor: alphas.iter().filter(|a| **a > floor).count(), ..Tally::default() })
}

fn lqr_tally(grid: &QuantileGrid, rows: &[Vec<f64>], c: f64, floor: f64) -> CliResult<Tally> {
    let opts = BisectionOptions::default();
    let lowest = grid.levels()[0];
    let results =
        rows.par_iter().map(|x| invert_lqr_bisection(grid, c, x, &opts)).collect::<Result<Vec<_>, _>>()?;
    let mut t = Tally::default();
    for r in results {
        match r {
            Inversion::Found(hit) if 1.0 - hit.alpha > floor => t.above_floor += 1,
            Inversion::Found(_) => {}
            Inversion::NotFound(InversionMiss::BelowSpan { .. }) if 1.0 - lowest > floor => t.above_floor += 1,
            Inversion::NotFound(InversionMiss::MultipleSolutions { .. }) => t.multiple += 1,
            Inversion::NotFound(_) => t.not_found += 1,
        }
    }
    Ok(t)
}

/// Compares linear quantile regression with Gaussian-only and full-catalog
/// D-vines by counting records whose estimated exceedance probability is
/// above the floor. Writes `counts.csv`, `crossings.csv`,
/// `lqr_coefficients.txt`, `lqr_fits.json` and both vine summaries.
pub fn cmd_benchmark_lqr(args: &BenchmarkArgs) -> CliResult<String> {
    let cfg = RunConfig::load_or_default(args.config.as_deref())?;
    let levels = args.levels.clone().unwrap_or_else(|| cfg.lqr.levels.clone());
    crate::config::check_levels(&levels)?;
    let thresholds = if args.thresholds.is_empty() { cfg.thresholds.clone() } else { args.thresholds.clone() };
    let table = Table::read(&args.data)?;
    let (y, covs) = table.variables(&cfg)?;
    let names: Vec<String> = covs.iter().map(|(n, _)| n.clone()).collect();
    let cols: Vec<Vec<f64>> = covs.iter().map(|(_, c)| c.clone()).collect();
    let rows: Vec<Vec<f64>> = (0..y.len()).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
    let lqr_data = LqrData::new(&y, &cols, &names)?;
    let prepared = prepare(&cfg, y, covs)?;

    let (gauss, _) = fit_vine(&cfg, &prepared, FitOptions::new(&[FamilyTag::Gaussian, FamilyTag::Independence]))?;
    let (full, _) = fit_vine(&cfg, &prepared, cfg.copula_options()?)?;
    let gauss_rows = vine_rows(&gauss, &names, &rows);
    let full_rows = vine_rows(&full, &names, &rows);

    let fits = cfg
        .lqr
        .report_levels
        .iter()
        .map(|&a| fit_lqr_bootstrap(&lqr_data, a, cfg.lqr.bootstrap_replicates, cfg.seed))
        .collect::<Result<Vec<_>, _>>()?;
    let grid = QuantileGrid::fit(lqr_data, &levels)?;

    let n = rows.len();
    let mut counts = String::from(
        "threshold,n,lqr,lqr_pct,dvine_gauss,dvine_gauss_pct,dvine_par,dvine_par_pct,lqr_not_found,lqr_multiple\n",
    );
    for &c in &thresholds {
        let l = lqr_tally(&grid, &rows, c, cfg.floor)?;
        let g = vine_tally(&gauss, &gauss_rows, c, cfg.floor)?;
        let p = vine_tally(&full, &full_rows, c, cfg.floor)?;
        let _ = writeln!(
            counts,
            "{c},{n},{},{:.2},{},{:.2},{},{:.2},{},{}",
            l.above_floor,
            pct(l.above_floor, n),
            g.above_floor,
            pct(g.above_floor, n),
            p.above_floor,
            pct(p.above_floor, n),
            l.not_found,
            l.multiple
        );
    }

    let crossing = detect_quantile_crossing(&grid, &rows)?;
    let mut crossings = String::from("row,pairs,first_lower,first_upper\n");
    for rc in &crossing.crossings {
        let (lo, hi) = rc.pairs[0];
        let _ = writeln!(crossings, "{},{},{lo},{hi}", rc.row, rc.pairs.len());
    }

    ensure_dir(&args.out)?;
    write_text(&args.out.join("counts.csv"), &counts)?;
    write_text(&args.out.join("crossings.csv"), &crossings)?;
    write_text(&args.out.join("lqr_coefficients.txt"), &coefficient_table(&fits.iter().collect::<Vec<_>>()))?;
    write_json(&args.out.join("lqr_fits.json"), &fits)?;
    write_text(&args.out.join("dvine_gauss_summary.txt"), &gauss.summary_table())?;
    write_text(&args.out.join("dvine_par_summary.txt"), &full.summary_table())?;
    let summary = format!(
        "{counts}quantile crossing: {} of {} records, {} level pairs\n",
        crossing.n_rows_crossing(),
        crossing.rows_checked,
        crossing.n_pairs
    );
    print!("{summary}");
    Ok(summary)
}
