//! Checks of a finished map against the designer's requirements.
//!
//! A violated constraint is either a failure (the map is unusable for the
//! request) or a mistake (usable, but wrong in a detail).

use std::collections::{HashSet, VecDeque};

use pcg_engine::{count_regions, Connectivity, Layer, MapArtifact, Material, TileGrid};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Failure,
    Mistake,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintResult {
    pub constraint_id: String,
    pub satisfied: bool,
    /// Meaningful only when not satisfied.
    pub severity: Severity,
    pub detail: String,
}

impl ConstraintResult {
    fn ok(id: &str, detail: String) -> Self {
        ConstraintResult { constraint_id: id.into(), satisfied: true, severity: Severity::Failure, detail }
    }

    fn violated(id: &str, severity: Severity, detail: String) -> Self {
        ConstraintResult { constraint_id: id.into(), satisfied: false, severity, detail }
    }

    pub fn is_failure(&self) -> bool {
        !self.satisfied && self.severity == Severity::Failure
    }

    pub fn is_mistake(&self) -> bool {
        !self.satisfied && self.severity == Severity::Mistake
    }
}

/// A requirement a map can be checked against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Constraint {
    /// The land layer is one 8-connected region.
    SingleLandmass,
    /// Exactly this many non-empty layers.
    LayerCount { required: usize },
    /// Objects whose kind contains `kind` sit on the top non-empty layer.
    ScatterOnTop { id: String, kind: String },
    /// Objects whose kind contains `kind` sit outside the land mask.
    ScatterOffLand { id: String, kind: String },
    /// Some non-empty layer has this material.
    MaterialPresent { material: Material },
    /// The first wall layer's corridors form a tree.
    PerfectMaze,
}

impl Constraint {
    pub fn id(&self) -> String {
        match self {
            Constraint::SingleLandmass => "single_landmass".into(),
            Constraint::LayerCount { .. } => "layer_count".into(),
            Constraint::ScatterOnTop { id, .. } | Constraint::ScatterOffLand { id, .. } => id.clone(),
            Constraint::MaterialPresent { material } => format!("material_{material}"),
            Constraint::PerfectMaze => "perfect_maze".into(),
        }
    }

    pub fn check(&self, artifact: &MapArtifact) -> ConstraintResult {
        match self {
            Constraint::SingleLandmass => check_single_landmass(artifact),
            Constraint::LayerCount { required } => check_layer_count(artifact, *required),
            Constraint::ScatterOnTop { id, kind } => check_scatter_on_top(artifact, id, kind),
            Constraint::ScatterOffLand { id, kind } => check_scatter_off_land(artifact, id, kind),
            Constraint::MaterialPresent { material } => check_material_present(artifact, material),
            Constraint::PerfectMaze => check_perfect_maze(artifact),
        }
    }
}

/// Lowest non-empty layer that is not water.
pub fn land_layer(artifact: &MapArtifact) -> Option<&Layer> {
    artifact
        .layers()
        .iter()
        .find(|l| l.material != Material::Water && !l.grid.is_empty())
}

fn matches_kind(placement_kind: &str, kind: &str) -> bool {
    placement_kind.to_ascii_lowercase().contains(&kind.to_ascii_lowercase())
}

/// Zero regions is a failure, more than one a mistake.
pub fn check_single_landmass(artifact: &MapArtifact) -> ConstraintResult {
    const ID: &str = "single_landmass";
    let Some(layer) = land_layer(artifact) else {
        return ConstraintResult::violated(ID, Severity::Failure, "no land layer".into());
    };
    match count_regions(&layer.grid, Connectivity::Eight) {
        0 => ConstraintResult::violated(ID, Severity::Failure, "no land".into()),
        1 => ConstraintResult::ok(ID, format!("one land mass in `{}`", layer.name)),
        n => ConstraintResult::violated(ID, Severity::Mistake, format!("{n} land masses in `{}`", layer.name)),
    }
}

/// Too few non-empty layers is a failure, too many a mistake.
pub fn check_layer_count(artifact: &MapArtifact, required: usize) -> ConstraintResult {
    const ID: &str = "layer_count";
    let n = artifact.layers().iter().filter(|l| !l.grid.is_empty()).count();
    let detail = format!("{n} non-empty layers, {required} required");
    match n.cmp(&required) {
        std::cmp::Ordering::Equal => ConstraintResult::ok(ID, detail),
        std::cmp::Ordering::Less => ConstraintResult::violated(ID, Severity::Failure, detail),
        std::cmp::Ordering::Greater => ConstraintResult::violated(ID, Severity::Mistake, detail),
    }
}

/// At least one matching object, all of them attached to the top non-empty
/// layer and inside its mask.
pub fn check_scatter_on_top(artifact: &MapArtifact, id: &str, kind: &str) -> ConstraintResult {
    let Some(top) = artifact.top_non_empty_layer() else {
        return ConstraintResult::violated(id, Severity::Mistake, "map has no non-empty layer".into());
    };
    let placed: Vec<_> = artifact.placements().iter().filter(|p| matches_kind(&p.kind, kind)).collect();
    if placed.is_empty() {
        return ConstraintResult::violated(id, Severity::Mistake, format!("no `{kind}` placements"));
    }
    let misplaced = placed
        .iter()
        .filter(|p| p.layer_name != top.name || !top.grid.get(p.x as usize, p.y as usize))
        .count();
    if misplaced > 0 {
        return ConstraintResult::violated(
            id,
            Severity::Mistake,
            format!("{misplaced} of {} `{kind}` placements not on top layer `{}`", placed.len(), top.name),
        );
    }
    ConstraintResult::ok(id, format!("{} `{kind}` on `{}`", placed.len(), top.name))
}

/// At least one matching object, none of them on land.
pub fn check_scatter_off_land(artifact: &MapArtifact, id: &str, kind: &str) -> ConstraintResult {
    let placed: Vec<_> = artifact.placements().iter().filter(|p| matches_kind(&p.kind, kind)).collect();
    if placed.is_empty() {
        return ConstraintResult::violated(id, Severity::Mistake, format!("no `{kind}` placements"));
    }
    let Some(land) = land_layer(artifact) else {
        return ConstraintResult::ok(id, format!("{} `{kind}`, no land", placed.len()));
    };
    let on_land = placed.iter().filter(|p| land.grid.get(p.x as usize, p.y as usize)).count();
    if on_land > 0 {
        return ConstraintResult::violated(
            id,
            Severity::Mistake,
            format!("{on_land} of {} `{kind}` placements on land", placed.len()),
        );
    }
    ConstraintResult::ok(id, format!("{} `{kind}` around the land", placed.len()))
}

pub fn check_material_present(artifact: &MapArtifact, material: &Material) -> ConstraintResult {
    let id = format!("material_{material}");
    match artifact.layers().iter().find(|l| &l.material == material && !l.grid.is_empty()) {
        Some(l) => ConstraintResult::ok(&id, format!("`{}` is {material}", l.name)),
        None => ConstraintResult::violated(&id, Severity::Failure, format!("no non-empty {material} layer")),
    }
}

/// Dead cells of the first wall layer must form a single 4-connected tree.
pub fn check_perfect_maze(artifact: &MapArtifact) -> ConstraintResult {
    const ID: &str = "perfect_maze";
    let Some(walls) = artifact.layers().iter().find(|l| l.material == Material::Wall) else {
        return ConstraintResult::violated(ID, Severity::Failure, "no wall layer".into());
    };
    let (nodes, edges, components) = corridor_graph(&walls.grid);
    if nodes == 0 {
        return ConstraintResult::violated(ID, Severity::Failure, "no corridors".into());
    }
    if components != 1 {
        return ConstraintResult::violated(ID, Severity::Failure, format!("{components} disconnected corridor sets"));
    }
    if edges != nodes - 1 {
        return ConstraintResult::violated(ID, Severity::Mistake, format!("corridors contain {} loops", edges + 1 - nodes));
    }
    ConstraintResult::ok(ID, format!("{nodes} corridor cells, one path between any two"))
}

fn corridor_graph(grid: &TileGrid) -> (usize, usize, usize) {
    let (w, h) = grid.dimensions();
    let open = |x: usize, y: usize| !grid.get(x, y);
    let mut nodes = 0;
    let mut edges = 0;
    for y in 0..h {
        for x in 0..w {
            if open(x, y) {
                nodes += 1;
                if x + 1 < w && open(x + 1, y) {
                    edges += 1;
                }
                if y + 1 < h && open(x, y + 1) {
                    edges += 1;
                }
            }
        }
    }
    let mut seen = HashSet::new();
    let mut components = 0;
    for y in 0..h {
        for x in 0..w {
            if !open(x, y) || !seen.insert((x, y)) {
                continue;
            }
            components += 1;
            let mut queue = VecDeque::from([(x, y)]);
            while let Some((cx, cy)) = queue.pop_front() {
                let candidates = [
                    (cx.wrapping_sub(1), cy),
                    (cx + 1, cy),
                    (cx, cy.wrapping_sub(1)),
                    (cx, cy + 1),
                ];
                for (nx, ny) in candidates {
                    if nx < w && ny < h && open(nx, ny) && seen.insert((nx, ny)) {
                        queue.push_back((nx, ny));
                    }
                }
            }
        }
    }
    (nodes, edges, components)
}

pub fn evaluate(artifact: &MapArtifact, constraints: &[Constraint]) -> Vec<ConstraintResult> {
    constraints.iter().map(|c| c.check(artifact)).collect()
}
