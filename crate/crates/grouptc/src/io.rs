//! File formats shared by the CLI: versioned CSV and JSON helpers.
//!
//! Numeric CSV convention: integers bare, floats as the shortest decimal
//! that round-trips a 64-bit value. Every CSV starts with a `# v1` comment
//! and every JSON object carries `"format_version": 1`.

use crate::group::{FiniteGroup, GroupError};
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Error, Debug)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Integers bare, floats shortest round-trip.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() && v.fract() == 0.0 && v.abs() < 9.007_199_254_740_992e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

pub const CSV_VERSION_HEADER: &str = "# v1";

pub fn read_to_string(path: &str) -> Result<String, IoError> {
    std::fs::read_to_string(path)
        .map_err(|source| IoError::File { path: path.to_string(), source })
}

pub fn read_bytes(path: &str) -> Result<Vec<u8>, IoError> {
    std::fs::read(path).map_err(|source| IoError::File { path: path.to_string(), source })
}

pub fn write_string(path: &str, content: &str) -> Result<(), IoError> {
    std::fs::write(path, content)
        .map_err(|source| IoError::File { path: path.to_string(), source })
}

// --- group files -------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct GroupFile {
    format_version: u32,
    name: String,
    elements: Vec<String>,
    table: Vec<Vec<usize>>,
}

pub fn group_to_json(group: &FiniteGroup) -> String {
    let file = GroupFile {
        format_version: 1,
        name: group.name().to_string(),
        elements: group.element_names().to_vec(),
        table: group.cayley().to_vec(),
    };
    serde_json::to_string_pretty(&file).expect("group serializes")
}

pub fn group_from_json(path: &str, json: &str) -> Result<Arc<FiniteGroup>, IoError> {
    let file: GroupFile = serde_json::from_str(json)
        .map_err(|e| IoError::Format { path: path.to_string(), message: e.to_string() })?;
    if file.format_version != 1 {
        return Err(IoError::Format {
            path: path.to_string(),
            message: format!("unsupported format_version {}", file.format_version),
        });
    }
    let group = FiniteGroup::from_cayley(file.table, Some(file.elements), file.name)?;
    Ok(Arc::new(group))
}

// --- signal CSV ---------------------------------------------------------------

/// Single- or multi-channel signal rows. Two columns mean `element,value`;
/// three mean `channel,element,value`.
pub fn signal_from_csv(path: &str, text: &str) -> Result<Vec<Vec<f64>>, IoError> {
    let mut channels: Vec<Vec<(usize, f64)>> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        // skip a textual header row
        if lineno == 0 || line.chars().next().is_some_and(|c| c.is_alphabetic()) {
            if line.chars().any(|c| c.is_alphabetic()) {
                continue;
            }
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = |message: String| IoError::Format { path: path.to_string(), message };
        let (channel, element, value) = match fields.len() {
            2 => (
                0usize,
                fields[0].parse::<usize>().map_err(|e| bad(format!("line {}: {e}", lineno + 1)))?,
                fields[1].parse::<f64>().map_err(|e| bad(format!("line {}: {e}", lineno + 1)))?,
            ),
            3 => (
                fields[0].parse::<usize>().map_err(|e| bad(format!("line {}: {e}", lineno + 1)))?,
                fields[1].parse::<usize>().map_err(|e| bad(format!("line {}: {e}", lineno + 1)))?,
                fields[2].parse::<f64>().map_err(|e| bad(format!("line {}: {e}", lineno + 1)))?,
            ),
            n => {
                return Err(bad(format!("line {}: expected 2 or 3 fields, got {n}", lineno + 1)))
            }
        };
        while channels.len() <= channel {
            channels.push(Vec::new());
        }
        channels[channel].push((element, value));
    }
    if channels.is_empty() {
        return Err(IoError::Format { path: path.to_string(), message: "no data rows".into() });
    }
    let mut out = Vec::with_capacity(channels.len());
    for (c, mut rows) in channels.into_iter().enumerate() {
        rows.sort_by_key(|&(e, _)| e);
        for (i, &(e, _)) in rows.iter().enumerate() {
            if e != i {
                return Err(IoError::Format {
                    path: path.to_string(),
                    message: format!("channel {c}: element indices are not 0..n, missing {i}"),
                });
            }
        }
        out.push(rows.into_iter().map(|(_, v)| v).collect());
    }
    Ok(out)
}

pub fn signal_to_csv(channels: &[Vec<f64>]) -> String {
    let mut out = String::from(CSV_VERSION_HEADER);
    out.push('\n');
    if channels.len() == 1 {
        out.push_str("element,value\n");
        for (e, v) in channels[0].iter().enumerate() {
            out.push_str(&format!("{e},{}\n", format_f64(*v)));
        }
    } else {
        out.push_str("channel,element,value\n");
        for (c, row) in channels.iter().enumerate() {
            for (e, v) in row.iter().enumerate() {
                out.push_str(&format!("{c},{e},{}\n", format_f64(*v)));
            }
        }
    }
    out
}
