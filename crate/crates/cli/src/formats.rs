//! File formats: network JSON, scenario and edge CSV, set JSON and the
//! staircase CSV used for plotting.
//!
//! Every float is written with 17 significant digits.

use std::io;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;
use sysvar_core::netgen::DirectedMultigraph;
use sysvar_core::{ApproxSet, FinancialNetwork, Grouping, ScenarioSet};

use crate::CliError;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// JSON formatter that prints floats in `{:.16e}` form.
struct Digits17;

impl Formatter for Digits17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Digits17);
    value.serialize(&mut ser).expect("serializing to memory cannot fail");
    out.push(b'\n');
    out
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_slice(&read_file(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupingFile {
    pub g: usize,
    pub assignment: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub d: usize,
    pub pbar: Vec<f64>,
    pub pi: Vec<Vec<f64>>,
    pub grouping: GroupingFile,
}

impl NetworkFile {
    pub fn new(net: &FinancialNetwork, grouping: &Grouping) -> Self {
        Self {
            d: net.dim(),
            pbar: net.pbar().to_vec(),
            pi: net.pi().to_vec(),
            grouping: GroupingFile { g: grouping.groups(), assignment: grouping.assignment().to_vec() },
        }
    }

    pub fn into_model(self) -> Result<(FinancialNetwork, Grouping), CliError> {
        if self.pbar.len() != self.d || self.grouping.assignment.len() != self.d {
            return Err(CliError::Input(format!("network file declares d = {} but its arrays disagree", self.d)));
        }
        let net = FinancialNetwork::new(self.pi, self.pbar)?;
        let grouping = Grouping::new(self.grouping.g, self.grouping.assignment)?;
        Ok((net, grouping))
    }
}

pub fn read_network(path: &Path) -> Result<(FinancialNetwork, Grouping), CliError> {
    read_json::<NetworkFile>(path)?.into_model()
}

fn csv_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|_| format!("not a number: {s:?}"))
}

pub fn scenario_csv(set: &ScenarioSet) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = (1..=set.dim()).map(|i| format!("x{i}")).collect();
    w.write_record(&header).expect("in-memory write");
    for row in set.rows() {
        w.write_record(row.iter().map(|v| fmt_f64(*v))).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

/// Reads a scenario CSV with header `x1,...,xd`.
pub fn read_scenarios(path: &Path, d: usize) -> Result<ScenarioSet, CliError> {
    let bytes = read_file(path)?;
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    let expected: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    if header.iter().map(str::trim).ne(expected.iter().map(String::as_str)) {
        return Err(csv_error(path, format!("expected header x1..x{d}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let row = rec.iter().map(parse_f64).collect::<Result<Vec<_>, _>>().map_err(|e| csv_error(path, e))?;
        rows.push(row);
    }
    Ok(ScenarioSet::new(d, rows)?)
}

/// A cash-flow argument: a path to a scenario CSV or one comma-separated row.
pub fn read_cashflows(arg: &str, d: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let path = Path::new(arg);
    if path.is_file() {
        return Ok(read_scenarios(path, d)?.rows().to_vec());
    }
    let row = arg
        .split(',')
        .map(parse_f64)
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Input(format!("--x is neither a file nor a numeric row: {e}")))?;
    if row.len() != d {
        return Err(CliError::Input(format!("--x has {} entries, the network has {d} nodes", row.len())));
    }
    Ok(vec![row])
}

pub fn edge_csv(graph: &DirectedMultigraph) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["source", "target"]).expect("in-memory write");
    for (s, t) in &graph.edges {
        w.write_record([s.to_string(), t.to_string()]).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

pub fn read_edges(path: &Path, n: usize) -> Result<DirectedMultigraph, CliError> {
    let bytes = read_file(path)?;
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().map(str::trim).ne(["source", "target"]) {
        return Err(csv_error(path, "expected header source,target"));
    }
    let mut edges = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let node = |k: usize| -> Result<usize, CliError> {
            let v: usize = rec
                .get(k)
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|_| csv_error(path, format!("bad node index in {rec:?}")))?;
            if v >= n {
                return Err(csv_error(path, format!("node {v} out of range for {n} nodes")));
            }
            Ok(v)
        };
        edges.push((node(0)?, node(1)?));
    }
    Ok(DirectedMultigraph { n, edges })
}

/// Boundary of a two-dimensional upper set as a closed staircase running
/// from the top edge of the box to its right edge.
pub fn staircase(set: &ApproxSet) -> Result<Vec<Vec<f64>>, CliError> {
    let g = set.bounds.hi.len();
    if set.is_empty() {
        return Ok(Vec::new());
    }
    match g {
        1 => {
            let m = set.generators.iter().map(|a| a[0]).fold(f64::INFINITY, f64::min);
            Ok(vec![vec![m]])
        }
        2 => {
            let mut gens = set.generators.clone();
            gens.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
            let mut front: Vec<Vec<f64>> = Vec::new();
            for a in gens {
                if front.last().is_none_or(|p| a[1] < p[1]) {
                    front.push(a);
                }
            }
            let hi = &set.bounds.hi;
            let mut pts = vec![vec![front[0][0], hi[1]]];
            for (k, a) in front.iter().enumerate() {
                if k > 0 {
                    pts.push(vec![a[0], front[k - 1][1]]);
                }
                pts.push(a.clone());
            }
            let last = front.last().expect("nonempty");
            pts.push(vec![hi[0], last[1]]);
            Ok(pts)
        }
        _ => Err(CliError::Input(format!("staircase output needs one or two groups, the set has {g}"))),
    }
}

pub fn staircase_csv(points: &[Vec<f64>], g: usize) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = (1..=g).map(|j| format!("z{j}")).collect();
    w.write_record(&header).expect("in-memory write");
    for p in points {
        w.write_record(p.iter().map(|v| fmt_f64(*v))).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}
