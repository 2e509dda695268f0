//! Trace files: one JSON object per line.
//!
//! The first line is a header `{"version":1,"header":{...}}` echoing the seed
//! and generating configuration. Every following line is a full-depth record
//! of one task at one tier:
//!
//! ```text
//! {"version":1,"task_id":7,"tier":1,"text":"...","tokens":[1,..,2],"label":0,
//!  "layers":[[p0,p1],...],"importance":[...],"result":[p0,p1]}
//! ```
//!
//! `importance` is per-layer importance; replay multiplies it by the number of
//! layers executed. `version` is required on every line; unknown fields are
//! ignored. Floats are written in shortest round-trip form, so save/load is
//! bit-exact.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{replay_record, ModelBackend, ModelOutput, TierInput};
use crate::decision::{EarlyExitParams, ProbabilityVector};
use crate::error::{Error, Result};

pub const TRACE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub seed: u64,
    pub tiers: usize,
    pub classes: usize,
    pub tasks: usize,
    pub generator: String,
    /// Configuration that produced the file, verbatim.
    #[serde(default)]
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub task_id: u64,
    /// 1-based tier index.
    pub tier: usize,
    pub text: String,
    pub tokens: Vec<u32>,
    pub label: usize,
    /// Output of every layer's head, full depth.
    pub layers: Vec<ProbabilityVector>,
    /// Importance contributed per layer, one entry per token.
    pub importance: Vec<f64>,
    /// Full-depth model output.
    pub result: ProbabilityVector,
}

#[derive(Serialize)]
struct VersionedHeader<'a> {
    version: u32,
    header: &'a TraceHeader,
}

#[derive(Serialize)]
struct VersionedRecord<'a> {
    version: u32,
    #[serde(flatten)]
    record: &'a TraceRecord,
}

/// Immutable set of trace records keyed by `(task id, tier)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStore {
    header: TraceHeader,
    records: Vec<TraceRecord>,
    index: HashMap<(u64, usize), usize>,
}

impl TraceStore {
    pub fn new(header: TraceHeader, records: Vec<TraceRecord>) -> Result<Self> {
        let mut index = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if r.layers.is_empty() {
                return Err(Error::Trace(format!("task {} tier {} has no layers", r.task_id, r.tier)));
            }
            if r.importance.len() != r.tokens.len() {
                return Err(Error::Trace(format!(
                    "task {} tier {}: {} importance entries for {} tokens",
                    r.task_id,
                    r.tier,
                    r.importance.len(),
                    r.tokens.len()
                )));
            }
            if index.insert((r.task_id, r.tier), i).is_some() {
                return Err(Error::Trace(format!("duplicate record for task {} tier {}", r.task_id, r.tier)));
            }
        }
        Ok(Self { header, records, index })
    }

    pub fn header(&self) -> &TraceHeader {
        &self.header
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn get(&self, task_id: u64, tier: usize) -> Result<&TraceRecord> {
        self.index
            .get(&(task_id, tier))
            .map(|&i| &self.records[i])
            .ok_or(Error::MissingTrace { task_id, tier })
    }

    pub fn write<W: Write>(&self, out: &mut W) -> Result<()> {
        let io = |e: std::io::Error| Error::io("<trace stream>", e);
        let line = serde_json::to_string(&VersionedHeader { version: TRACE_VERSION, header: &self.header })
            .map_err(|e| Error::Trace(e.to_string()))?;
        writeln!(out, "{line}").map_err(io)?;
        for record in &self.records {
            let line = serde_json::to_string(&VersionedRecord { version: TRACE_VERSION, record })
                .map_err(|e| Error::Trace(e.to_string()))?;
            writeln!(out, "{line}").map_err(io)?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut header = None;
        let mut records = Vec::new();
        for (n, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<trace stream>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let at = |msg: String| Error::Trace(format!("line {}: {msg}", n + 1));
            let mut value: serde_json::Value = serde_json::from_str(&line).map_err(|e| at(e.to_string()))?;
            match value.get("version").and_then(serde_json::Value::as_u64) {
                Some(v) if v == u64::from(TRACE_VERSION) => {}
                Some(v) => return Err(at(format!("unsupported version {v}"))),
                None => return Err(at("missing version field".into())),
            }
            if let Some(h) = value.get_mut("header") {
                if header.is_some() {
                    return Err(at("second header".into()));
                }
                header = Some(serde_json::from_value(h.take()).map_err(|e| at(e.to_string()))?);
            } else {
                records.push(serde_json::from_value(value).map_err(|e| at(e.to_string()))?);
            }
        }
        let header = header.ok_or_else(|| Error::Trace("trace file has no header".into()))?;
        Self::new(header, records)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write(&mut out)?;
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file))
    }

    /// `(task id, text, label)` of every tier-1 record, in file order.
    pub fn tasks(&self) -> Vec<(u64, String, usize)> {
        self.records
            .iter()
            .filter(|r| r.tier == 1)
            .map(|r| (r.task_id, r.text.clone(), r.label))
            .collect()
    }
}

/// Replays stored records for one tier.
#[derive(Debug, Clone)]
pub struct TraceBackend {
    store: Arc<TraceStore>,
    tier: usize,
}

impl TraceBackend {
    pub fn new(store: Arc<TraceStore>, tier: usize) -> Self {
        Self { store, tier }
    }

    /// The stored record for `task_id`, checked against the tokens the tier
    /// actually received.
    pub fn lookup(&self, input: &TierInput<'_>) -> Result<&TraceRecord> {
        let record = self.store.get(input.task_id, self.tier)?;
        if record.tokens != input.tokens.ids {
            return Err(Error::Trace(format!(
                "task {} tier {}: input tokens differ from the recorded ones \
                 (was the trace generated with different pruning settings?)",
                input.task_id, self.tier
            )));
        }
        Ok(record)
    }
}

impl ModelBackend for TraceBackend {
    fn infer(&self, input: &TierInput<'_>, exit: Option<&EarlyExitParams>) -> Result<ModelOutput> {
        replay_record(self.lookup(input)?, exit)
    }

    fn record(&self, input: &TierInput<'_>, _tier: usize) -> Result<TraceRecord> {
        self.lookup(input).cloned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(task_id: u64, tier: usize) -> TraceRecord {
        TraceRecord {
            task_id,
            tier,
            text: "a fine film".into(),
            tokens: vec![1, 40, 41, 42, 2],
            label: 1,
            layers: vec![
                ProbabilityVector::new(vec![0.5, 0.5]).unwrap(),
                ProbabilityVector::new(vec![0.1 + 0.2, 0.7]).unwrap(),
            ],
            importance: vec![1.25, 0.3333333333333333, 0.9, 1.1, 1.4166666666666667],
            result: ProbabilityVector::new(vec![0.3, 0.7]).unwrap(),
        }
    }

    fn store() -> TraceStore {
        let header = TraceHeader {
            seed: 5,
            tiers: 2,
            classes: 2,
            tasks: 1,
            generator: "test".into(),
            config: serde_json::json!({"k": 10.0}),
        };
        TraceStore::new(header, vec![record(0, 1), record(0, 2)]).unwrap()
    }

    #[test]
    fn lookup_present_and_absent() {
        let s = store();
        assert_eq!(s.get(0, 2).unwrap(), &record(0, 2));
        assert!(matches!(s.get(3, 1), Err(Error::MissingTrace { task_id: 3, tier: 1 })));
    }

    #[test]
    fn save_load_is_bit_exact() {
        let s = store();
        let mut buf = Vec::new();
        s.write(&mut buf).unwrap();
        let back = TraceStore::read(buf.as_slice()).unwrap();
        assert_eq!(back, s);
        let mut again = Vec::new();
        back.write(&mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn version_is_required_and_unknown_fields_ignored() {
        let s = store();
        let mut buf = Vec::new();
        s.write(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let extra = text.replacen("\"task_id\"", "\"comment\":\"hi\",\"task_id\"", 1);
        assert_eq!(TraceStore::read(extra.as_bytes()).unwrap(), s);
        let unversioned = text.replacen("\"version\":1,", "", 2);
        assert!(TraceStore::read(unversioned.as_bytes()).is_err());
        let future = text.replace("\"version\":1", "\"version\":9");
        assert!(TraceStore::read(future.as_bytes()).is_err());
    }

    #[test]
    fn duplicates_rejected() {
        let s = store();
        assert!(TraceStore::new(s.header().clone(), vec![record(0, 1), record(0, 1)]).is_err());
    }
}
