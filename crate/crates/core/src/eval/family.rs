use std::fmt;
use std::str::FromStr;

use pcg_engine::Material;
use serde::{Deserialize, Serialize};

use super::Constraint;
use crate::trajectory::{parse_trajectory, Trajectory};

const GOLDEN_MOUNTAIN: &str = include_str!("../../../../fixtures/trajectories/golden_mountain_island.json");
const GOLDEN_BEACH: &str = include_str!("../../../../fixtures/trajectories/golden_beach2d.json");
const GOLDEN_GOLF: &str = include_str!("../../../../fixtures/trajectories/golden_golf_course.json");
const GOLDEN_MAZE: &str = include_str!("../../../../fixtures/trajectories/golden_maze2d.json");

/// Designer request for the single-island benchmark.
pub const MOUNTAIN_ISLAND_PROMPT: &str = "Create one island with a mountain built from three terrain layers. \
Put grass spots on the mountain top and scatter rocks in the water around the island.";

/// Map types with a reference request, constraint suite and golden plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapFamily {
    Beach2d,
    MountainIsland,
    GolfCourse,
    Maze2d,
}

impl MapFamily {
    pub const ALL: [MapFamily; 4] = [
        MapFamily::Beach2d,
        MapFamily::MountainIsland,
        MapFamily::GolfCourse,
        MapFamily::Maze2d,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MapFamily::Beach2d => "beach2d",
            MapFamily::MountainIsland => "mountain_island",
            MapFamily::GolfCourse => "golf_course",
            MapFamily::Maze2d => "maze2d",
        }
    }

    pub fn prompt(self) -> &'static str {
        match self {
            MapFamily::Beach2d => "Create a 2D beach: a single sandy island surrounded by water.",
            MapFamily::MountainIsland => MOUNTAIN_ISLAND_PROMPT,
            MapFamily::GolfCourse => {
                "Create a golf course: one grassy fairway with a raised green in the middle and a flag on the green."
            }
            MapFamily::Maze2d => "Create a 2D maze with stone walls and a walkable path where every corridor is reachable.",
        }
    }

    pub fn constraints(self) -> Vec<Constraint> {
        match self {
            MapFamily::Beach2d => vec![
                Constraint::SingleLandmass,
                Constraint::MaterialPresent { material: Material::Water },
                Constraint::MaterialPresent { material: Material::Sand },
            ],
            MapFamily::MountainIsland => vec![
                Constraint::SingleLandmass,
                Constraint::LayerCount { required: 3 },
                Constraint::ScatterOnTop { id: "grass_on_peak".into(), kind: "grass".into() },
                Constraint::ScatterOffLand { id: "rocks_off_mask".into(), kind: "rock".into() },
            ],
            MapFamily::GolfCourse => vec![
                Constraint::SingleLandmass,
                Constraint::LayerCount { required: 2 },
                Constraint::MaterialPresent { material: Material::Grass },
                Constraint::ScatterOnTop { id: "flag_on_green".into(), kind: "flag".into() },
            ],
            MapFamily::Maze2d => vec![
                Constraint::MaterialPresent { material: Material::Wall },
                Constraint::MaterialPresent { material: Material::Path },
                Constraint::PerfectMaze,
            ],
        }
    }

    /// Reference plan satisfying the family's constraints.
    pub fn golden(self) -> Trajectory {
        let raw = match self {
            MapFamily::Beach2d => GOLDEN_BEACH,
            MapFamily::MountainIsland => GOLDEN_MOUNTAIN,
            MapFamily::GolfCourse => GOLDEN_GOLF,
            MapFamily::Maze2d => GOLDEN_MAZE,
        };
        parse_trajectory(raw).expect("bundled golden trajectory parses")
    }

    /// Best keyword match for a free-form request.
    pub fn detect(prompt: &str) -> MapFamily {
        let p = prompt.to_ascii_lowercase();
        let score = |words: &[&str]| words.iter().filter(|w| p.contains(*w)).count();
        let candidates = [
            (MapFamily::Maze2d, score(&["maze", "labyrinth", "corridor"])),
            (MapFamily::GolfCourse, score(&["golf", "fairway", "green", "flag"])),
            (MapFamily::Beach2d, score(&["beach", "sand", "shore", "coast"])),
            (MapFamily::MountainIsland, score(&["mountain", "peak", "rock", "tier", "layer"])),
        ];
        candidates
            .into_iter()
            .filter(|(_, s)| *s > 0)
            .max_by_key(|(_, s)| *s)
            .map_or(MapFamily::MountainIsland, |(f, _)| f)
    }
}

impl fmt::Display for MapFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MapFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MapFamily::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown map family `{s}`"))
    }
}
