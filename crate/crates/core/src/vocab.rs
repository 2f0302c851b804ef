//! Built-in object vocabulary used by the scene and benchmark generators.
//!
//! Labels are grouped by role so generated benchmarks can keep targets,
//! anchors, co-occurrence hints and filler objects lexically disjoint.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSpec {
    pub label: String,
    pub description: String,
}

impl LabelSpec {
    pub fn new(label: &str, description: &str) -> Self {
        Self {
            label: label.to_string(),
            description: description.to_string(),
        }
    }
}

fn specs(table: &[(&str, &str)]) -> Vec<LabelSpec> {
    table.iter().map(|(l, d)| LabelSpec::new(l, d)).collect()
}

/// Objects that instructions ask the agent to reach.
pub fn target_labels() -> Vec<LabelSpec> {
    specs(&[
        ("sofa", "grey fabric sofa"),
        ("television", "flat television screen"),
        ("bed", "double bed"),
        ("desk", "wooden writing desk"),
        ("fridge", "tall white fridge"),
        ("bathtub", "enamel bathtub"),
        ("piano", "upright black piano"),
        ("wardrobe", "mirrored wardrobe"),
        ("aquarium", "glass aquarium tank"),
        ("treadmill", "electric treadmill"),
    ])
}

/// Objects used as spatial anchors ("A near B").
pub fn anchor_labels() -> Vec<LabelSpec> {
    specs(&[
        ("chair", "chair"),
        ("lamp", "floor lamp"),
        ("cabinet", "cabinet"),
        ("printer", "laser printer"),
        ("clock", "wall clock"),
    ])
}

/// Objects used as co-occurrence context ("A with C").
pub fn context_labels() -> Vec<LabelSpec> {
    specs(&[
        ("remote", "remote control"),
        ("pillow", "pillow"),
        ("kettle", "kettle"),
        ("towel", "folded towel"),
        ("guitar", "acoustic guitar"),
    ])
}

/// Background objects with no role in the instruction.
pub fn filler_labels() -> Vec<LabelSpec> {
    specs(&[
        ("plant", "potted plant"),
        ("rug", "woven rug"),
        ("window", "window"),
        ("doorway", "open doorway"),
        ("bookshelf", "bookshelf"),
        ("vase", "ceramic vase"),
        ("mirror", "round mirror"),
        ("radiator", "radiator"),
        ("bin", "waste bin"),
        ("painting", "framed painting"),
        ("stool", "bar stool"),
        ("curtain", "long curtain"),
    ])
}

/// Every label in the built-in vocabulary.
pub fn all_labels() -> Vec<LabelSpec> {
    let mut out = target_labels();
    out.extend(anchor_labels());
    out.extend(context_labels());
    out.extend(filler_labels());
    out
}
