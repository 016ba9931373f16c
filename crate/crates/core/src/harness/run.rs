//! Sweep execution and the CSV result format.

use std::io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::scenario::{Cell, Scenario};
use crate::islands::{monte_carlo_records, summarize, RunRecord};

/// Value of the `schema_version` column.
pub const SCHEMA_VERSION: &str = "island-evo-csv/1";

/// One CSV row: the aggregate of one `(scenario, n)` cell. Statistics are
/// `None` when every replicate was trapped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub schema_version: String,
    pub scenario: String,
    pub algorithm: String,
    pub fitness: String,
    pub n: usize,
    pub r: Option<usize>,
    pub k: Option<usize>,
    pub lambda: usize,
    /// Integer or `inf`.
    pub tau: String,
    pub topology: String,
    pub termination: String,
    pub replicates: usize,
    pub trapped: usize,
    pub mean_rounds: Option<f64>,
    pub stderr_rounds: Option<f64>,
    pub median_rounds: Option<f64>,
    pub mean_evals: Option<f64>,
    pub stderr_evals: Option<f64>,
    pub mean_migrations: Option<f64>,
    pub mean_peak_valleys: Option<f64>,
    pub master_seed: u64,
}

impl ResultRow {
    pub fn completed(&self) -> usize {
        self.replicates - self.trapped
    }
}

/// Runs every replicate of `cell` on the current rayon pool.
pub fn run_cell(cell: &Cell) -> Result<(ResultRow, Vec<RunRecord>)> {
    let records = monte_carlo_records(&cell.config, cell.replicates, cell.cell_seed)?;
    let cfg = &cell.config;
    let mut row = ResultRow {
        schema_version: SCHEMA_VERSION.to_string(),
        scenario: cell.scenario.clone(),
        algorithm: cell.algorithm.to_string(),
        fitness: cfg.spec.label(),
        n: cell.n,
        r: cfg.spec.fork_r(),
        k: cfg.spec.block_k(),
        lambda: cfg.lambda,
        tau: cfg.tau.to_string(),
        topology: cfg.topology.kind().to_string(),
        termination: cfg.termination.to_string(),
        replicates: records.len(),
        trapped: records.iter().filter(|r| r.trapped).count(),
        mean_rounds: None,
        stderr_rounds: None,
        median_rounds: None,
        mean_evals: None,
        stderr_evals: None,
        mean_migrations: None,
        mean_peak_valleys: None,
        master_seed: cell.master_seed,
    };
    match summarize(&records) {
        Ok(s) => {
            row.mean_rounds = Some(s.rounds.mean);
            row.stderr_rounds = Some(s.rounds.stderr);
            row.median_rounds = Some(s.rounds.median);
            row.mean_evals = Some(s.evaluations.mean);
            row.stderr_evals = Some(s.evaluations.stderr);
            row.mean_migrations = Some(s.mean_migrations);
            row.mean_peak_valleys = Some(s.mean_peak_valleys);
        }
        Err(Error::AllTrapped(_)) => {}
        Err(e) => return Err(e),
    }
    Ok((row, records))
}

/// Runs the cells of a scenario in grid order. A cell whose replicates are
/// all trapped yields a row without statistics; the sweep continues.
pub fn run_scenario(s: &Scenario) -> Result<Vec<ResultRow>> {
    s.validate()?;
    s.cells()?
        .iter()
        .map(|c| run_cell(c).map(|(row, _)| row))
        .collect()
}

pub fn run_all(scenarios: &[Scenario]) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for s in scenarios {
        rows.extend(run_scenario(s)?);
    }
    Ok(rows)
}

pub fn write_csv<W: io::Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_bytes(rows: &[ResultRow]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(buf)
}

/// Reads rows back, rejecting files written under another schema.
pub fn read_csv<R: io::Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for row in rdr.deserialize() {
        let row: ResultRow = row?;
        if row.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "CSV schema {:?} does not match {:?}",
                row.schema_version, SCHEMA_VERSION
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::exact_lo_runtime;
    use crate::harness::scenario::parse_config;

    const HEADER: &str = "schema_version,scenario,algorithm,fitness,n,r,k,lambda,tau,topology,termination,\
replicates,trapped,mean_rounds,stderr_rounds,median_rounds,mean_evals,stderr_evals,mean_migrations,\
mean_peak_valleys,master_seed";

    fn lo_single() -> Vec<Scenario> {
        parse_config(
            r#"[{"name":"lo","algorithm":"single_ea","spec":{"variant":"leadingones"},
            "n_grid":[4,8],"replicates":4000,"master_seed":11}]"#,
        )
        .unwrap()
    }

    #[test]
    fn single_ea_leadingones_matches_closed_form() {
        let rows = run_all(&lo_single()).unwrap();
        for row in &rows {
            let exact = exact_lo_runtime(row.n).unwrap();
            let (mean, se) = (row.mean_rounds.unwrap(), row.stderr_rounds.unwrap());
            // 3 SE: two cells, so a 2-SE band would fail too often by chance
            assert!((mean - exact).abs() < 3.0 * se, "n={}: {mean} vs {exact}", row.n);
            assert_eq!(row.mean_evals, row.mean_rounds);
            assert_eq!(row.tau, "inf");
        }
    }

    #[test]
    fn header_and_round_trip() {
        let rows = run_all(&lo_single()).unwrap();
        let bytes = csv_bytes(&rows).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), HEADER);
        assert_eq!(read_csv(&bytes[..]).unwrap(), rows);
        assert_eq!(csv_bytes(&run_all(&lo_single()).unwrap()).unwrap(), bytes);
    }

    #[test]
    fn foreign_schema_rejected() {
        let rows = run_all(&lo_single()).unwrap();
        let text = String::from_utf8(csv_bytes(&rows).unwrap()).unwrap();
        let text = text.replace(SCHEMA_VERSION, "other/9");
        assert!(read_csv(text.as_bytes()).is_err());
    }

    #[test]
    fn all_trapped_row_is_flagged() {
        let s = parse_config(
            r#"[{"name":"trap","algorithm":"single_ea","spec":{"variant":"onemax"},
            "n_grid":[40],"replicates":5,"master_seed":1,"cap_rule":1}]"#,
        )
        .unwrap();
        let rows = run_all(&s).unwrap();
        assert_eq!(rows[0].trapped, 5);
        assert_eq!(rows[0].mean_rounds, None);
        let text = String::from_utf8(csv_bytes(&rows).unwrap()).unwrap();
        assert!(text.lines().nth(1).unwrap().ends_with(",5,,,,,,,,1"));
    }

    #[test]
    fn isolated_any_optimal_is_minimum_of_runs() {
        // λ isolated islands under AnyOptimal stop at the first island's hit.
        let s = parse_config(
            r#"[{"name":"iso","algorithm":"independent_runs","spec":{"variant":"onemax"},
            "n_grid":[12],"lambda_rule":4,"replicates":50,"termination":"any_optimal","master_seed":5}]"#,
        )
        .unwrap();
        let cell = s[0].cell(12).unwrap();
        let (_, records) = run_cell(&cell).unwrap();
        for rec in records {
            let first = rec.hit_rounds.iter().flatten().min().copied().unwrap();
            assert_eq!(rec.rounds, first);
        }
    }
}
