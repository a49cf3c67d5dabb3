use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{mod_morph, EngineError, MorphOp, Result, TileGrid};

/// Surface material of a layer. Serialized as its lowercase name, or
/// `custom:<name>` for custom materials.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Material {
    Terrain,
    Water,
    Grass,
    Sand,
    Path,
    Wall,
    Custom(String),
}

impl fmt::Display for Material {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Material::Terrain => f.write_str("terrain"),
            Material::Water => f.write_str("water"),
            Material::Grass => f.write_str("grass"),
            Material::Sand => f.write_str("sand"),
            Material::Path => f.write_str("path"),
            Material::Wall => f.write_str("wall"),
            Material::Custom(name) => write!(f, "custom:{name}"),
        }
    }
}

impl FromStr for Material {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "terrain" => Material::Terrain,
            "water" => Material::Water,
            "grass" => Material::Grass,
            "sand" => Material::Sand,
            "path" => Material::Path,
            "wall" => Material::Wall,
            other => match other.strip_prefix("custom:") {
                Some(name) if !name.is_empty() => Material::Custom(name.to_string()),
                _ => {
                    return Err(EngineError::param(
                        "material",
                        other,
                        "terrain|water|grass|sand|path|wall|custom:<name>",
                    ))
                }
            },
        })
    }
}

impl Serialize for Material {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Material {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub name: String,
    pub height_index: u32,
    pub material: Material,
    pub grid: TileGrid,
}

/// Stacked tiers: tier `k` is `base` eroded by `k * shrink_radius`, named
/// `tier_k` with height index `k`. Tiers that erode away are still emitted
/// as empty grids so the tier count always matches.
pub fn build_height_layers(
    base: &TileGrid,
    tiers: u32,
    shrink_radius: u32,
    material: Material,
) -> Result<Vec<Layer>> {
    if tiers == 0 {
        return Err(EngineError::param("tiers", tiers, "[1, inf)"));
    }
    if shrink_radius == 0 {
        return Err(EngineError::param("shrink_radius", shrink_radius, "[1, inf)"));
    }
    (0..tiers)
        .map(|k| {
            let grid = if k == 0 {
                base.clone()
            } else {
                mod_morph(base, MorphOp::Erode, k.saturating_mul(shrink_radius))?
            };
            Ok(Layer {
                name: format!("tier_{k}"),
                height_index: k,
                material: material.clone(),
                grid,
            })
        })
        .collect()
}
