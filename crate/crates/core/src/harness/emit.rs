//! CSV and JSON encodings of study output.
//!
//! Rows are sorted by `(zeta, frame)` before writing. JSON groups rows by ζ:
//! `{"groups": [{"zeta": .., "records": [..]}, ..]}`.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::campaign::FrameRecord;
use super::studies::{AggregateRecord, RobustnessRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::InvalidArgument(format!(
                "unknown format `{s}`, expected csv or json"
            ))),
        }
    }
}

/// A record type with a fixed CSV layout.
pub trait Tabular: Serialize + DeserializeOwned + Clone {
    fn header(nodes: usize) -> Vec<String>;
    fn row(&self) -> Vec<String>;
    fn zeta(&self) -> f64;
    fn frame(&self) -> usize;
}

fn per_node(prefix: &str, nodes: usize) -> impl Iterator<Item = String> + '_ {
    (1..=nodes).map(move |n| format!("{prefix}{n}"))
}

fn frame_header(nodes: usize) -> Vec<String> {
    let mut h: Vec<String> = [
        "frame",
        "zeta",
        "pcrlb_trace",
        "crlb_x",
        "crlb_y",
        "crlb_vx",
        "crlb_vy",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend(per_node("pd_node", nodes));
    h.extend(per_node("pd_bench_node", nodes));
    h.push("accepted".into());
    h.push("iters".into());
    h
}

macro_rules! frame_row {
    ($r:expr, $accepted:expr, $iters:expr) => {{
        let r = $r;
        let mut v = vec![
            r.frame.to_string(),
            r.zeta.to_string(),
            r.pcrlb_trace.to_string(),
            r.crlb_x.to_string(),
            r.crlb_y.to_string(),
            r.crlb_vx.to_string(),
            r.crlb_vy.to_string(),
        ];
        v.extend(r.pd.iter().map(|p| p.to_string()));
        v.extend(r.pd_bench.iter().map(|p| p.to_string()));
        v.push($accepted);
        v.push($iters);
        v
    }};
}

impl Tabular for FrameRecord {
    fn header(nodes: usize) -> Vec<String> {
        frame_header(nodes)
    }
    fn row(&self) -> Vec<String> {
        frame_row!(
            self,
            (self.accepted as u8).to_string(),
            self.iterations.to_string()
        )
    }
    fn zeta(&self) -> f64 {
        self.zeta
    }
    fn frame(&self) -> usize {
        self.frame
    }
}

impl Tabular for AggregateRecord {
    fn header(nodes: usize) -> Vec<String> {
        frame_header(nodes)
    }
    fn row(&self) -> Vec<String> {
        frame_row!(self, self.accepted.to_string(), self.iterations.to_string())
    }
    fn zeta(&self) -> f64 {
        self.zeta
    }
    fn frame(&self) -> usize {
        self.frame
    }
}

impl Tabular for RobustnessRecord {
    fn header(_nodes: usize) -> Vec<String> {
        [
            "frame",
            "zeta",
            "pcrlb_min",
            "pcrlb_mean",
            "pcrlb_max",
            "pcrlb_error_free",
            "pcrlb_reference",
            "trials",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()
    }
    fn row(&self) -> Vec<String> {
        vec![
            self.frame.to_string(),
            self.zeta.to_string(),
            self.pcrlb_min.to_string(),
            self.pcrlb_mean.to_string(),
            self.pcrlb_max.to_string(),
            self.pcrlb_error_free.to_string(),
            self.pcrlb_reference.to_string(),
            self.trials.to_string(),
        ]
    }
    fn zeta(&self) -> f64 {
        self.zeta
    }
    fn frame(&self) -> usize {
        self.frame
    }
}

/// Canonical row order: ζ ascending, then frame.
pub fn sorted<R: Tabular>(records: &[R]) -> Vec<R> {
    let mut v = records.to_vec();
    v.sort_by(|a, b| {
        a.zeta()
            .total_cmp(&b.zeta())
            .then(a.frame().cmp(&b.frame()))
    });
    v
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidArgument(format!("csv encoding: {other:?}")),
    }
}

pub fn write_csv<R: Tabular, W: Write>(records: &[R], nodes: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(R::header(nodes)).map_err(csv_error)?;
    for r in sorted(records) {
        w.write_record(r.row()).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct Group<R> {
    zeta: f64,
    records: Vec<R>,
}

#[derive(Serialize, Deserialize)]
struct Grouped<R> {
    groups: Vec<Group<R>>,
}

pub fn to_json<R: Tabular>(records: &[R]) -> Result<String> {
    let mut groups: Vec<Group<R>> = Vec::new();
    for r in sorted(records) {
        match groups.last_mut() {
            Some(g) if g.zeta == r.zeta() => g.records.push(r),
            _ => groups.push(Group {
                zeta: r.zeta(),
                records: vec![r],
            }),
        }
    }
    serde_json::to_string_pretty(&Grouped { groups })
        .map_err(|e| Error::InvalidArgument(format!("json encoding: {e}")))
}

pub fn from_json<R: Tabular>(text: &str) -> Result<Vec<R>> {
    let g: Grouped<R> =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("json: {e}")))?;
    Ok(g.groups.into_iter().flat_map(|g| g.records).collect())
}

/// Writes `records` to `path` in `format`.
pub fn emit<R: Tabular>(records: &[R], nodes: usize, path: &Path, format: Format) -> Result<()> {
    match format {
        Format::Csv => write_csv(records, nodes, std::fs::File::create(path)?),
        Format::Json => Ok(std::fs::write(path, to_json(records)? + "\n")?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(frame: usize, zeta: f64) -> FrameRecord {
        FrameRecord {
            frame,
            zeta,
            pcrlb_trace: 1.5,
            crlb_x: 0.5,
            crlb_y: 0.25,
            crlb_vx: 0.5,
            crlb_vy: 0.25,
            pd: vec![0.9, 0.8],
            pd_bench: vec![0.95, 0.85],
            accepted: true,
            iterations: 3,
        }
    }

    #[test]
    fn empty_is_header_only() {
        let mut buf = Vec::new();
        write_csv::<FrameRecord, _>(&[], 2, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "frame,zeta,pcrlb_trace,crlb_x,crlb_y,crlb_vx,crlb_vy,pd_node1,pd_node2,pd_bench_node1,pd_bench_node2,accepted,iters\n"
        );
    }

    #[test]
    fn json_round_trip() {
        let rs = vec![rec(1, 0.1), rec(2, 0.1), rec(1, 0.05)];
        let back: Vec<FrameRecord> = from_json(&to_json(&rs).unwrap()).unwrap();
        assert_eq!(back, sorted(&rs));
    }

    #[test]
    fn rows_are_sorted() {
        let mut buf = Vec::new();
        write_csv(&[rec(2, 0.1), rec(1, 0.1), rec(1, 0.05)], 2, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let keys: Vec<&str> = text
            .lines()
            .skip(1)
            .map(|l| &l[..l.find(",1.5").unwrap()])
            .collect();
        assert_eq!(keys, vec!["1,0.05", "1,0.1", "2,0.1"]);
    }
}
