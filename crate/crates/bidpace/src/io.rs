//! CSV formats: simulation traces, auction logs, GSP logs and experiment results.

use std::io::{Read, Write};

use crate::common::AuctionOpportunity;
use crate::deepfunnel::GspLogEntry;
use crate::error::{invalid, Error, Result};
use crate::experiments::{ExperimentResult, MetricRow};
use crate::initbid::ReplayRecord;
use crate::sim::TraceRow;

pub const TRACE_HEADER: [&str; 9] =
    ["interval", "requests", "spend", "target_spend", "bid_per_click", "lambda", "mu", "impressions", "conversions"];

pub fn write_trace<W: Write>(rows: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in rows {
        w.write_record([
            r.interval.to_string(),
            r.requests.to_string(),
            r.spend.to_string(),
            r.target_spend.to_string(),
            r.bid_per_click.to_string(),
            r.lambda.to_string(),
            r.mu.to_string(),
            r.impressions.to_string(),
            r.conversions.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_f64(field: &str, what: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::InvalidInput(format!("line {line}: cannot parse {what} `{field}`")))
}

fn header_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::InvalidInput(format!("missing column `{name}`")))
}

/// Auction log with header `t,competing_ecpm,pctr` and optional
/// `ecpm_2..ecpm_k` columns. `t` is seconds since the campaign start.
pub fn read_auction_log<R: Read>(input: R) -> Result<Vec<AuctionOpportunity>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    let (it, ic, ip) = (header_index(&headers, "t")?, header_index(&headers, "competing_ecpm")?, header_index(&headers, "pctr")?);
    let mut extra: Vec<(usize, usize)> = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| h.trim().strip_prefix("ecpm_").and_then(|k| k.parse::<usize>().ok()).map(|k| (k, i)))
        .collect();
    extra.sort();
    let mut out = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = n + 2;
        let t = parse_f64(&rec[it], "t", line)?;
        let c = parse_f64(&rec[ic], "competing_ecpm", line)?;
        let p = parse_f64(&rec[ip], "pctr", line)?;
        let mut opp = AuctionOpportunity::new(n, t, p, c);
        if !extra.is_empty() {
            let mut ladder = vec![c];
            for &(_, i) in &extra {
                ladder.push(parse_f64(&rec[i], "ladder eCPM", line)?);
            }
            opp.ecpm_ladder = Some(ladder);
        }
        opp.validate().map_err(|e| Error::InvalidInput(format!("line {line}: {e}")))?;
        out.push(opp);
    }
    Ok(out)
}

pub fn replay_records(log: &[AuctionOpportunity]) -> Vec<ReplayRecord> {
    log.iter().map(|o| ReplayRecord { competing_ecpm: o.competing_ecpm, pctr: o.pctr }).collect()
}

pub fn write_auction_log<W: Write>(log: &[AuctionOpportunity], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "competing_ecpm", "pctr"])?;
    for o in log {
        w.write_record([o.time.to_string(), o.competing_ecpm.to_string(), o.pctr.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// GSP log with header `t,pctr,ecpm_1,...,ecpm_k`, ladder non-increasing.
pub fn read_gsp_log<R: Read>(input: R) -> Result<Vec<GspLogEntry>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    let ip = header_index(&headers, "pctr")?;
    let mut rungs: Vec<(usize, usize)> = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| h.trim().strip_prefix("ecpm_").and_then(|k| k.parse::<usize>().ok()).map(|k| (k, i)))
        .collect();
    rungs.sort();
    if rungs.is_empty() {
        return invalid("GSP log needs ecpm_1..ecpm_k columns");
    }
    let mut out = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = n + 2;
        let p = parse_f64(&rec[ip], "pctr", line)?;
        let ladder = rungs.iter().map(|&(_, i)| parse_f64(&rec[i], "ladder eCPM", line)).collect::<Result<Vec<_>>>()?;
        out.push(GspLogEntry::new(p, ladder).map_err(|e| Error::InvalidInput(format!("line {line}: {e}")))?);
    }
    Ok(out)
}

/// Results with header `arm,replica,metric,value`.
pub fn write_results<W: Write>(result: &ExperimentResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["arm", "replica", "metric", "value"])?;
    for r in &result.rows {
        w.write_record([r.arm.clone(), r.replica.to_string(), r.metric.clone(), r.value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results<R: Read>(input: R) -> Result<ExperimentResult> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    let idx = [
        header_index(&headers, "arm")?,
        header_index(&headers, "replica")?,
        header_index(&headers, "metric")?,
        header_index(&headers, "value")?,
    ];
    let mut rows = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = n + 2;
        let replica = rec[idx[1]]
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("line {line}: bad replica")))?;
        rows.push(MetricRow {
            arm: rec[idx[0]].trim().to_string(),
            replica,
            metric: rec[idx[2]].trim().to_string(),
            value: parse_f64(&rec[idx[3]], "value", line)?,
        });
    }
    Ok(ExperimentResult { rows })
}
