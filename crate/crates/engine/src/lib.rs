//! Deterministic, seed-driven procedural generation over boolean tile grids.
//!
//! Every operation is a pure function of its inputs. Randomness comes only
//! from [`SplitMix64`], whose update rule is fixed so that outputs are
//! bit-identical across runs and platforms.
//!
//! Generators create a [`TileGrid`] from parameters, modifiers transform an
//! existing grid, and composers turn grids into [`Layer`]s and
//! [`Placement`]s that make up a [`MapArtifact`].

mod artifact;
mod error;
mod export;
mod generators;
mod grid;
mod layers;
mod modifiers;
mod prng;
mod regions;
mod scatter;

pub use artifact::{MapArtifact, Placement};
pub use error::EngineError;
pub use generators::{gen_cellular_automata, gen_maze, gen_noise_region, CaParams, NoiseParams};
pub use grid::{TileGrid, MAX_DIMENSION};
pub use layers::{build_height_layers, Layer, Material};
pub use modifiers::{mod_invert, mod_keep_largest_region, mod_morph, mod_smooth, MorphOp};
pub use prng::{derive_seed, mix64, SplitMix64};
pub use regions::{count_regions, label_regions, Connectivity, Regions};
pub use scatter::{scatter, ScatterMode};

pub type Result<T, E = EngineError> = std::result::Result<T, E>;
