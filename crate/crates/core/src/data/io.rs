//! Text dataset formats.
//!
//! CSV: one sample per line, `label,f1,f2,...`. An optional first line
//! `#label_map A:-1 B:1` maps raw label tokens to `-1`/`+1`; without a map the
//! label must be numerically `1` or `-1`. Other lines starting with `#` are
//! comments. Rows containing an empty field, `?`, `NA` or `NaN` are dropped
//! and counted.
//!
//! LIBSVM: `label idx:val idx:val ...` with strictly increasing 1-based
//! indices; rows are densified to the largest index seen in the file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::point::Point;
use crate::scalar::Scalar;
use crate::svm::Sample;

const LABEL_MAP_DIRECTIVE: &str = "#label_map";

/// Raw label token to `+1` / `-1`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelMap(pub BTreeMap<String, i8>);

impl LabelMap {
    pub fn parse_directive(spec: &str, line: usize) -> Result<Self> {
        let mut map = BTreeMap::new();
        for tok in spec.split_whitespace() {
            let (raw, to) = tok.rsplit_once(':').ok_or_else(|| Error::Parse {
                line,
                msg: format!("label map entry `{tok}` is not `raw:label`"),
            })?;
            let to: i8 = match to.trim_start_matches('+') {
                "1" => 1,
                "-1" => -1,
                other => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("label map target `{other}` is not +1 or -1"),
                    })
                }
            };
            map.insert(raw.to_string(), to);
        }
        Ok(Self(map))
    }

    fn lookup(&self, raw: &str) -> Option<i8> {
        if let Some(&v) = self.0.get(raw) {
            return Some(v);
        }
        let value: f64 = raw.parse().ok()?;
        self.0
            .iter()
            .find(|(k, _)| k.parse::<f64>().ok() == Some(value))
            .map(|(_, &v)| v)
    }
}

fn map_label(raw: &str, map: Option<&LabelMap>, line: usize) -> Result<i8> {
    let mapped = match map {
        Some(m) if !m.0.is_empty() => m.lookup(raw),
        _ => match raw.parse::<f64>() {
            Ok(v) if v == 1.0 => Some(1),
            Ok(v) if v == -1.0 => Some(-1),
            _ => None,
        },
    };
    mapped.ok_or_else(|| Error::Parse {
        line,
        msg: format!("label `{raw}` cannot be mapped to +1/-1"),
    })
}

fn is_missing(field: &str) -> bool {
    matches!(field, "" | "?" | "NA" | "na" | "NaN" | "nan")
}

#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub dataset: Dataset<T>,
    /// Rows skipped because of missing values.
    pub dropped: usize,
}

/// Parses CSV text; `label_map` (from run configuration) takes precedence over
/// a `#label_map` header.
pub fn parse_csv<T: Scalar>(text: &str, name: &str, label_map: Option<&LabelMap>) -> Result<Loaded<T>> {
    let mut header_map = None;
    let mut width = None;
    let mut samples = Vec::new();
    let mut dropped = 0;
    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix(LABEL_MAP_DIRECTIVE) {
            if i == 0 {
                header_map = Some(LabelMap::parse_directive(rest, line_no)?);
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let expected = *width.get_or_insert(fields.len());
        if fields.len() != expected {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected {expected} columns, found {}", fields.len()),
            });
        }
        if expected < 2 {
            return Err(Error::Parse {
                line: line_no,
                msg: "a row needs a label and at least one feature".into(),
            });
        }
        if fields.iter().any(|f| is_missing(f)) {
            dropped += 1;
            continue;
        }
        let y = map_label(fields[0], label_map.or(header_map.as_ref()), line_no)?;
        let z = fields[1..]
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .map(T::lit)
                    .ok_or_else(|| Error::Parse {
                        line: line_no,
                        msg: format!("feature `{f}` is not a finite number"),
                    })
            })
            .collect::<Result<Vec<T>>>()?;
        samples.push(Sample::new(Point::new(z)?, y)?);
    }
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(Loaded {
        dataset: Dataset::new(name, samples)?,
        dropped,
    })
}

pub fn load_csv<T: Scalar>(path: &Path, label_map: Option<&LabelMap>) -> Result<Loaded<T>> {
    let text = fs::read_to_string(path)?;
    parse_csv(&text, &path.display().to_string(), label_map)
}

pub fn parse_libsvm<T: Scalar>(text: &str, name: &str, label_map: Option<&LabelMap>) -> Result<Dataset<T>> {
    let mut header_map = None;
    let mut rows: Vec<(i8, Vec<(usize, f64)>)> = Vec::new();
    let mut max_index = 0usize;
    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix(LABEL_MAP_DIRECTIVE) {
            if i == 0 {
                header_map = Some(LabelMap::parse_directive(rest, line_no)?);
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let mut toks = line.split_whitespace();
        let label_tok = toks.next().expect("nonempty line has a token");
        let y = map_label(label_tok, label_map.or(header_map.as_ref()), line_no)?;
        let mut feats = Vec::new();
        let mut last = 0usize;
        for tok in toks {
            let bad = || Error::Parse {
                line: line_no,
                msg: format!("bad feature token `{tok}`"),
            };
            let (idx, val) = tok.split_once(':').ok_or_else(bad)?;
            let idx: usize = idx.parse().map_err(|_| bad())?;
            let val: f64 = val.parse().map_err(|_| bad())?;
            if idx == 0 || !val.is_finite() {
                return Err(bad());
            }
            if idx <= last {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("feature index {idx} does not increase (previous {last})"),
                });
            }
            last = idx;
            feats.push((idx, val));
        }
        max_index = max_index.max(last);
        rows.push((y, feats));
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if max_index == 0 {
        return Err(Error::Parse {
            line: 0,
            msg: "file has no feature columns".into(),
        });
    }
    let samples = rows
        .into_iter()
        .map(|(y, feats)| {
            let mut z = vec![T::zero(); max_index];
            for (idx, v) in feats {
                z[idx - 1] = T::lit(v);
            }
            Sample::new(Point::from_vec_unchecked(z), y)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(name, samples)
}

pub fn load_libsvm<T: Scalar>(path: &Path, label_map: Option<&LabelMap>) -> Result<Dataset<T>> {
    let text = fs::read_to_string(path)?;
    parse_libsvm(&text, &path.display().to_string(), label_map)
}

/// Serializes a dataset as CSV with `+1`/`-1` labels and shortest round-trip floats.
pub fn write_csv<T: Scalar>(data: &Dataset<T>) -> String {
    let mut out = String::new();
    for s in data.samples() {
        let _ = write!(out, "{}", s.y);
        for v in s.z.as_slice() {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}
