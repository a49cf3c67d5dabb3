use serde::{Deserialize, Serialize};

use crate::{EngineError, Placement, Result, SplitMix64, TileGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScatterMode {
    /// Alive cells are eligible.
    OnMask,
    /// Dead cells are eligible.
    OffMask,
}

/// Visits eligible cells in row-major order and keeps each with probability
/// `density`. The generator advances once per eligible cell only.
pub fn scatter(
    target: &TileGrid,
    mode: ScatterMode,
    density: f64,
    seed: u64,
    kind: &str,
    layer_name: &str,
) -> Result<Vec<Placement>> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(EngineError::param("density", density, "(0, 1]"));
    }
    if kind.is_empty() {
        return Err(EngineError::param("kind", "\"\"", "non-empty string"));
    }
    let want = mode == ScatterMode::OnMask;
    let mut rng = SplitMix64::new(seed);
    let mut out = Vec::new();
    for y in 0..target.height() {
        for x in 0..target.width() {
            if target.get(x, y) == want && rng.chance(density) {
                out.push(Placement {
                    kind: kind.to_string(),
                    x: x as u32,
                    y: y as u32,
                    layer_name: layer_name.to_string(),
                });
            }
        }
    }
    Ok(out)
}
