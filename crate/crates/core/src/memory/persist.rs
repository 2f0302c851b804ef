use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Edge, Memory, MemoryError, MemoryParams, SemanticForest, TopoNode, TopologicalMap};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Serialize)]
struct DocumentOut<'a> {
    schema_version: u64,
    params: &'a MemoryParams,
    nodes: &'a [TopoNode],
    edges: &'a [Edge],
    forest: &'a SemanticForest,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DocumentIn {
    params: MemoryParams,
    nodes: Vec<TopoNode>,
    edges: Vec<Edge>,
    forest: SemanticForest,
}

#[derive(Deserialize)]
struct VersionProbe {
    schema_version: Option<u64>,
}

impl Memory {
    pub fn to_writer<W: Write>(&self, w: W) -> Result<(), MemoryError> {
        let doc = DocumentOut {
            schema_version: SCHEMA_VERSION,
            params: &self.params,
            nodes: &self.map.nodes,
            edges: &self.map.edges,
            forest: &self.forest,
        };
        serde_json::to_writer(w, &doc)?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, MemoryError> {
        let mut buf = Vec::new();
        self.to_writer(&mut buf)?;
        Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
    }

    /// Parses and validates a memory document.
    pub fn from_json(text: &str) -> Result<Self, MemoryError> {
        let mut value: serde_json::Value = serde_json::from_str(text)?;
        let probe: VersionProbe = serde_json::from_value(value.clone())?;
        match probe.schema_version {
            Some(SCHEMA_VERSION) => {}
            Some(v) => return Err(MemoryError::UnsupportedVersion(v)),
            None => return Err(MemoryError::Invalid("missing schema_version".into())),
        }
        if let Some(obj) = value.as_object_mut() {
            obj.remove("schema_version");
        }
        let doc: DocumentIn = serde_json::from_value(value)?;
        let map = TopologicalMap {
            nodes: doc.nodes,
            edges: doc.edges,
        };
        let memory = Memory::new(doc.params, map, doc.forest);
        memory.validate()?;
        Ok(memory)
    }

    pub fn from_reader<R: Read>(mut r: R) -> Result<Self, MemoryError> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        Self::from_json(&text)
    }
}

pub fn save_memory(memory: &Memory, path: &Path) -> Result<(), MemoryError> {
    let mut w = BufWriter::new(File::create(path)?);
    memory.to_writer(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_memory(path: &Path) -> Result<Memory, MemoryError> {
    Memory::from_reader(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env_sim::{ObservationRecord, Pose};
    use crate::memory::{build_memory, MajoritySummarizer, TokenDescriber};
    use crate::retrieval::HashEmbedder;

    fn sample() -> Memory {
        let stream: Vec<ObservationRecord> = (0..8)
            .map(|t| ObservationRecord {
                t,
                pose: Pose {
                    x: t as f64 * 0.9,
                    y: (t % 3) as f64,
                    heading: 0.0,
                },
                obs_token: format!("objects: item{} (thing)", t % 3),
                visible_object_ids: vec![(t % 3) as u32],
            })
            .collect();
        let params = MemoryParams::default();
        build_memory(
            &stream,
            &params,
            &TokenDescriber,
            &HashEmbedder::new(params.embedding_dim),
            &MajoritySummarizer,
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let m = sample();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("memory.json");
        save_memory(&m, &path).unwrap();
        assert_eq!(load_memory(&path).unwrap(), m);
    }

    #[test]
    fn unknown_version_is_rejected() {
        let text = sample().to_json().unwrap().replacen(
            "\"schema_version\":1",
            "\"schema_version\":7",
            1,
        );
        assert!(matches!(
            Memory::from_json(&text),
            Err(MemoryError::UnsupportedVersion(7))
        ));
    }

    #[test]
    fn missing_version_is_rejected() {
        let text = sample().to_json().unwrap().replacen("\"schema_version\":1,", "", 1);
        assert!(matches!(Memory::from_json(&text), Err(MemoryError::Invalid(_))));
    }

    #[test]
    fn corrupted_forest_is_rejected() {
        let m = sample();
        let mut v: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        v["forest"]["roots"] = serde_json::json!([]);
        assert!(Memory::from_json(&v.to_string()).is_err());
    }
}
