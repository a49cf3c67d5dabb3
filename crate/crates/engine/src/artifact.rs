use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::{EngineError, Layer, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Placement {
    pub kind: String,
    pub x: u32,
    pub y: u32,
    pub layer_name: String,
}

/// Final output of an execution: layers ordered by height index plus
/// object placements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MapArtifact {
    layers: Vec<Layer>,
    placements: Vec<Placement>,
    seed: u64,
    provenance: String,
}

impl MapArtifact {
    /// Validates and sorts layers by `height_index`.
    pub fn new(
        mut layers: Vec<Layer>,
        placements: Vec<Placement>,
        seed: u64,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        layers.sort_by_key(|l| l.height_index);
        let artifact = Self {
            layers,
            placements,
            seed,
            provenance: provenance.into(),
        };
        artifact.validate()?;
        Ok(artifact)
    }

    fn validate(&self) -> Result<()> {
        let mut names = HashSet::new();
        let mut heights = HashSet::new();
        for layer in &self.layers {
            if layer.name.is_empty() {
                return Err(EngineError::InvalidArtifact("layer with empty name".into()));
            }
            if !names.insert(layer.name.as_str()) {
                return Err(EngineError::InvalidArtifact(format!(
                    "duplicate layer name `{}`",
                    layer.name
                )));
            }
            if !heights.insert(layer.height_index) {
                return Err(EngineError::InvalidArtifact(format!(
                    "duplicate height_index {}",
                    layer.height_index
                )));
            }
        }
        if let Some(first) = self.layers.first() {
            for layer in &self.layers[1..] {
                if !layer.grid.same_dimensions(&first.grid) {
                    return Err(EngineError::DimensionMismatch {
                        expected: format!("{}x{}", first.grid.width(), first.grid.height()),
                        found: format!(
                            "{}x{} in layer `{}`",
                            layer.grid.width(),
                            layer.grid.height(),
                            layer.name
                        ),
                    });
                }
            }
        }
        for p in &self.placements {
            if p.kind.is_empty() {
                return Err(EngineError::InvalidArtifact("placement with empty kind".into()));
            }
            let layer = self.layer(&p.layer_name).ok_or_else(|| {
                EngineError::InvalidArtifact(format!(
                    "placement `{}` references unknown layer `{}`",
                    p.kind, p.layer_name
                ))
            })?;
            if !layer.grid.in_bounds(p.x as i64, p.y as i64) {
                return Err(EngineError::InvalidArtifact(format!(
                    "placement `{}` at ({}, {}) outside layer `{}`",
                    p.kind, p.x, p.y, p.layer_name
                )));
            }
        }
        Ok(())
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn placements(&self) -> &[Placement] {
        &self.placements
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn layer(&self, name: &str) -> Option<&Layer> {
        self.layers.iter().find(|l| l.name == name)
    }

    /// Layer with height index 0.
    pub fn base_layer(&self) -> Option<&Layer> {
        self.layers.iter().find(|l| l.height_index == 0)
    }

    /// Highest layer that has at least one alive cell.
    pub fn top_non_empty_layer(&self) -> Option<&Layer> {
        self.layers.iter().rev().find(|l| !l.grid.is_empty())
    }

    /// Canonical JSON: object keys sorted, layers in height order.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_value(self)
            .and_then(|v| serde_json::to_string(&v))
            .expect("artifact serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Repr {
            layers: Vec<Layer>,
            placements: Vec<Placement>,
            seed: u64,
            provenance: String,
        }
        let repr: Repr =
            serde_json::from_str(text).map_err(|e| EngineError::InvalidArtifact(e.to_string()))?;
        Self::new(repr.layers, repr.placements, repr.seed, repr.provenance)
    }
}

impl<'de> Deserialize<'de> for MapArtifact {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(d)?;
        MapArtifact::from_json(&value.to_string()).map_err(serde::de::Error::custom)
    }
}
