//! Latency matrix files.
//!
//! CSV: the first row lists the node ids; every following row is a node id
//! and then one latency per column, in ms. A leading empty header cell (the
//! usual spreadsheet corner) is accepted. Lines starting with `#` are
//! ignored and fields are trimmed, so node ids may not start with `#` or
//! carry surrounding whitespace.
//!
//! JSON: `{"nodes": [...], "dist_ms": [[...], ...]}` with rows in `nodes`
//! order.
//!
//! Both writers emit the shortest decimal that parses back to the same
//! `f64`, so `load_map(save_map(m)) == m` bit for bit.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crux_core::NetworkMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MapFormat {
    #[default]
    Csv,
    Json,
}

impl MapFormat {
    /// Guesses from the file extension; anything but `.json` is CSV.
    pub fn from_path(path: &Path) -> MapFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => MapFormat::Json,
            _ => MapFormat::Csv,
        }
    }
}

impl fmt::Display for MapFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MapFormat::Csv => "csv",
            MapFormat::Json => "json",
        })
    }
}

impl FromStr for MapFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(MapFormat::Csv),
            "json" => Ok(MapFormat::Json),
            other => Err(format!("unknown map format `{other}`")),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct MapJson {
    nodes: Vec<String>,
    dist_ms: Vec<Vec<f64>>,
}

pub fn load_map<R: Read>(source: R, format: MapFormat) -> Result<NetworkMap> {
    match format {
        MapFormat::Csv => load_csv(source),
        MapFormat::Json => {
            let doc: MapJson = serde_json::from_reader(source)?;
            Ok(NetworkMap::from_rows(doc.nodes, doc.dist_ms)?)
        }
    }
}

pub fn load_map_file(path: &Path, format: Option<MapFormat>) -> Result<NetworkMap> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let format = format.unwrap_or_else(|| MapFormat::from_path(path));
    load_map(std::io::BufReader::new(file), format)
}

fn load_csv<R: Read>(source: R) -> Result<NetworkMap> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(source);
    let mut records = reader.records();

    let header = match records.next() {
        Some(r) => r?,
        None => return Err(crux_core::Error::EmptyMap.into()),
    };
    let mut ids: Vec<String> = header.iter().map(str::to_string).collect();
    if ids.first().is_some_and(|s| s.is_empty()) {
        ids.remove(0);
    }
    let n = ids.len();
    let mut column = HashMap::with_capacity(n);
    for (i, id) in ids.iter().enumerate() {
        if id.is_empty() {
            return Err(parse_err(
                &header,
                format!("empty node id in column {}", i + 1),
            ));
        }
        if column.insert(id.as_str(), i).is_some() {
            return Err(crux_core::Error::DuplicateId(id.clone()).into());
        }
    }

    let mut rows: Vec<Option<Vec<f64>>> = vec![None; n];
    for record in records {
        let record = record?;
        if record.len() != n + 1 {
            return Err(parse_err(
                &record,
                format!(
                    "expected a node id and {n} values, found {} fields",
                    record.len()
                ),
            ));
        }
        let id = &record[0];
        let Some(&row) = column.get(id) else {
            return Err(parse_err(&record, format!("row for unknown node `{id}`")));
        };
        if rows[row].is_some() {
            return Err(parse_err(&record, format!("second row for node `{id}`")));
        }
        let mut values = Vec::with_capacity(n);
        for (j, field) in record.iter().skip(1).enumerate() {
            let x: f64 = field.parse().map_err(|_| {
                parse_err(
                    &record,
                    format!("column `{}`: `{field}` is not a number", ids[j]),
                )
            })?;
            values.push(x);
        }
        rows[row] = Some(values);
    }

    let found = rows.iter().filter(|r| r.is_some()).count();
    if found != n {
        return Err(crux_core::Error::NotSquare {
            ids: n,
            rows: found,
        }
        .into());
    }
    let rows = rows.into_iter().map(Option::unwrap).collect();
    Ok(NetworkMap::from_rows(ids, rows)?)
}

fn parse_err(record: &csv::StringRecord, msg: String) -> Error {
    Error::Parse {
        line: record.position().map_or(0, |p| p.line()),
        msg,
    }
}

pub fn save_map<W: Write>(map: &NetworkMap, mut out: W, format: MapFormat) -> Result<()> {
    match format {
        MapFormat::Csv => {
            if let Some(id) = map.ids().iter().find(|id| !csv_safe(id)) {
                return Err(Error::Usage(format!(
                    "node id `{id}` cannot be stored in CSV"
                )));
            }
            let mut w = csv::WriterBuilder::new()
                .flexible(true)
                .from_writer(&mut out);
            w.write_record(map.ids())?;
            for u in map.nodes() {
                let mut row = Vec::with_capacity(map.len() + 1);
                row.push(map.id(u).to_string());
                row.extend(map.row(u).iter().map(|x| x.to_string()));
                w.write_record(&row)?;
            }
            w.flush()?;
        }
        MapFormat::Json => {
            let doc = MapJson {
                nodes: map.ids().to_vec(),
                dist_ms: map.nodes().map(|u| map.row(u).to_vec()).collect(),
            };
            serde_json::to_writer(&mut out, &doc)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

fn csv_safe(id: &str) -> bool {
    !id.is_empty() && id.trim() == id && !id.starts_with('#')
}

pub fn save_map_file(map: &NetworkMap, path: &Path, format: Option<MapFormat>) -> Result<()> {
    let format = format.unwrap_or_else(|| MapFormat::from_path(path));
    let mut buf = Vec::new();
    save_map(map, &mut buf, format)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// SHA-256 of the map's JSON serialization, so the digest does not depend on
/// which format the map was read from.
pub fn map_digest(map: &NetworkMap) -> String {
    let mut buf = Vec::new();
    save_map(map, &mut buf, MapFormat::Json).expect("writing to memory");
    hex::encode(Sha256::digest(&buf))
}

pub fn bytes_digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
