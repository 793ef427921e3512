//! CSV and JSON renderings of trial records, sweep cells and bit trajectories.

use std::io::Write;

use serde::Serialize;

use crate::harness::{BitRow, SweepResult, TrialRecord};

pub const RECORD_HEADER: &str = "trial,seed,protocol,engine,n,k,rounds,time_units,winner,converged";
pub const SWEEP_HEADER: &str =
    "protocol,engine,n,k,bias,trials,mean_rounds,median_rounds,std_rounds,win_rate,win_ci_lo,win_ci_hi";
pub const BITS_HEADER: &str = "t,x1_over_x,a_over_n";

#[derive(Serialize)]
struct RecordRow<'a> {
    trial: u64,
    seed: u64,
    protocol: &'a str,
    engine: &'a str,
    n: u64,
    k: usize,
    rounds: u64,
    time_units: Option<f64>,
    winner: Option<usize>,
    converged: bool,
}

impl<'a> From<&'a TrialRecord> for RecordRow<'a> {
    fn from(r: &'a TrialRecord) -> Self {
        RecordRow {
            trial: r.trial,
            seed: r.seed,
            protocol: r.protocol.as_str(),
            engine: r.engine.as_str(),
            n: r.n,
            k: r.k,
            rounds: r.rounds,
            time_units: r.time_units,
            winner: r.winner,
            converged: r.converged,
        }
    }
}

#[derive(Serialize)]
struct SweepRow<'a> {
    protocol: &'a str,
    engine: &'a str,
    n: u64,
    k: usize,
    bias: Option<u64>,
    trials: u64,
    mean_rounds: f64,
    median_rounds: f64,
    std_rounds: f64,
    win_rate: f64,
    win_ci_lo: f64,
    win_ci_hi: f64,
}

#[derive(Serialize)]
struct BitCsvRow {
    t: u64,
    x1_over_x: Option<f64>,
    a_over_n: f64,
}

fn write_csv<W: Write, T: Serialize>(out: W, rows: impl IntoIterator<Item = T>) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_header_only<W: Write>(mut out: W, header: &str) -> std::io::Result<()> {
    writeln!(out, "{header}")
}

pub fn write_records_csv<W: Write>(out: W, records: &[TrialRecord]) -> csv::Result<()> {
    if records.is_empty() {
        return Ok(write_header_only(out, RECORD_HEADER)?);
    }
    write_csv(out, records.iter().map(RecordRow::from))
}

pub fn records_json(records: &[TrialRecord]) -> serde_json::Value {
    let rows: Vec<RecordRow<'_>> = records.iter().map(RecordRow::from).collect();
    serde_json::to_value(rows).expect("plain data serializes")
}

fn sweep_rows(result: &SweepResult) -> Vec<SweepRow<'_>> {
    result
        .cells
        .iter()
        .map(|c| SweepRow {
            protocol: c.protocol.as_str(),
            engine: c.engine.as_str(),
            n: c.n,
            k: c.k,
            bias: c.bias,
            trials: c.summary.trials,
            mean_rounds: c.summary.mean_rounds,
            median_rounds: c.summary.median_rounds,
            std_rounds: c.summary.std_rounds,
            win_rate: c.summary.win_rate,
            win_ci_lo: c.summary.win_ci_lo,
            win_ci_hi: c.summary.win_ci_hi,
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(out: W, result: &SweepResult) -> csv::Result<()> {
    if result.cells.is_empty() {
        return Ok(write_header_only(out, SWEEP_HEADER)?);
    }
    write_csv(out, sweep_rows(result))
}

pub fn sweep_json(result: &SweepResult) -> serde_json::Value {
    serde_json::to_value(sweep_rows(result)).expect("plain data serializes")
}

pub fn write_bits_csv<W: Write>(out: W, rows: &[BitRow]) -> csv::Result<()> {
    if rows.is_empty() {
        return Ok(write_header_only(out, BITS_HEADER)?);
    }
    write_csv(
        out,
        rows.iter().map(|r| BitCsvRow {
            t: r.t,
            x1_over_x: r.x1_over_x,
            a_over_n: r.a_over_n,
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{Engine, Protocol};

    fn rec(protocol: Protocol, time_units: Option<f64>, winner: Option<usize>) -> TrialRecord {
        TrialRecord {
            trial: 3,
            seed: 7,
            protocol,
            engine: Engine::Agent,
            n: 10,
            k: 2,
            rounds: 40,
            time_units,
            winner,
            converged: winner.is_some(),
            initial_leader: 0,
            phases: None,
            trajectory: None,
        }
    }

    #[test]
    fn record_csv_is_bit_exact() {
        let mut buf = Vec::new();
        write_records_csv(
            &mut buf,
            &[rec(Protocol::TwoChoices, None, Some(1)), rec(Protocol::Async, Some(4.0), None)],
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            format!(
                "{RECORD_HEADER}\n3,7,two-choices,agent,10,2,40,,1,true\n3,7,async,agent,10,2,40,4.0,,false\n"
            )
        );
    }

    #[test]
    fn empty_outputs_still_have_headers() {
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{RECORD_HEADER}\n"));
        let mut buf = Vec::new();
        write_bits_csv(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{BITS_HEADER}\n"));
    }

    #[test]
    fn json_mirrors_csv_fields() {
        let v = records_json(&[rec(Protocol::Memory, None, Some(0))]);
        let obj = v[0].as_object().unwrap();
        let keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        let mut want: Vec<&str> = RECORD_HEADER.split(',').collect();
        want.sort();
        let mut got = keys.clone();
        got.sort();
        assert_eq!(got, want);
        assert_eq!(obj["time_units"], serde_json::Value::Null);
    }
}
