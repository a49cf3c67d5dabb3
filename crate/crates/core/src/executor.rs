//! Runs an approved trajectory against the engine.
//!
//! Each step is checked against the registry before it runs, and layers and
//! placements are assembled incrementally, so every failure is attributed
//! to the step that caused it. Execution stops at the first failure and the
//! remaining steps are reported as skipped.

use std::collections::{BTreeMap, HashMap};

use pcg_engine::{
    build_height_layers, derive_seed, gen_cellular_automata, gen_maze, gen_noise_region, mod_invert,
    mod_keep_largest_region, mod_morph, mod_smooth, scatter, CaParams, Connectivity, Layer, MapArtifact,
    Material, MorphOp, NoiseParams, Placement, ScatterMode, TileGrid,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::registry::{validate_arguments, OutputKind, Registry, ToolDescriptor};
use crate::trajectory::{binding_reference, ToolStep, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    Ok,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step_index: usize,
    pub tool_name: String,
    pub status: StepStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_kind: Option<OutputKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Output summary on success, the failure reason otherwise.
    pub diagnostics: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub master_seed: u64,
    pub steps: Vec<StepReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_step: Option<usize>,
    #[serde(skip)]
    pub artifact: Option<MapArtifact>,
}

impl ExecutionReport {
    pub fn succeeded(&self) -> bool {
        self.failed_step.is_none() && self.artifact.is_some()
    }

    pub fn failure(&self) -> Option<&StepReport> {
        self.failed_step.map(|i| &self.steps[i])
    }
}

#[derive(Debug, Clone)]
enum Output {
    Grid(TileGrid),
    Layers(Vec<Layer>),
    Placements(Vec<Placement>),
}

impl Output {
    fn kind(&self) -> OutputKind {
        match self {
            Output::Grid(_) => OutputKind::Grid,
            Output::Layers(_) => OutputKind::Layers,
            Output::Placements(_) => OutputKind::Placements,
        }
    }
}

/// Post-step summary of an output: dimensions and live cells for grids,
/// names for layers, counts for placements.
fn step_verify(output: &Output) -> String {
    match output {
        Output::Grid(g) => format!("grid {}x{}, {} alive", g.width(), g.height(), g.alive_count()),
        Output::Layers(ls) => {
            let parts: Vec<String> = ls
                .iter()
                .map(|l| format!("{}@{} ({} alive)", l.name, l.height_index, l.grid.alive_count()))
                .collect();
            format!("layers {}", parts.join(", "))
        }
        Output::Placements(ps) => {
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for p in ps {
                *counts.entry(p.kind.as_str()).or_default() += 1;
            }
            let parts: Vec<String> = counts.iter().map(|(k, n)| format!("{n} {k}")).collect();
            if parts.is_empty() {
                "placements none".into()
            } else {
                format!("placements {}", parts.join(", "))
            }
        }
    }
}

struct Args<'a> {
    values: BTreeMap<&'a str, &'a Value>,
}

impl<'a> Args<'a> {
    fn new(tool: &'a ToolDescriptor, step: &'a ToolStep) -> Args<'a> {
        let mut values = BTreeMap::new();
        for p in &tool.parameters {
            if let Some(d) = &p.default {
                values.insert(p.name.as_str(), d);
            }
        }
        for (k, v) in &step.arguments {
            values.insert(k.as_str(), v);
        }
        Args { values }
    }

    fn get(&self, name: &str) -> Result<&'a Value, String> {
        self.values
            .get(name)
            .copied()
            .ok_or_else(|| format!("no value for `{name}`"))
    }

    fn uint(&self, name: &str) -> Result<u64, String> {
        self.get(name)?.as_u64().ok_or_else(|| format!("`{name}` is not a non-negative integer"))
    }

    fn u32(&self, name: &str) -> Result<u32, String> {
        u32::try_from(self.uint(name)?).map_err(|_| format!("`{name}` too large"))
    }

    fn usize(&self, name: &str) -> Result<usize, String> {
        usize::try_from(self.uint(name)?).map_err(|_| format!("`{name}` too large"))
    }

    fn real(&self, name: &str) -> Result<f64, String> {
        self.get(name)?.as_f64().ok_or_else(|| format!("`{name}` is not a number"))
    }

    fn text(&self, name: &str) -> Result<&'a str, String> {
        self.get(name)?.as_str().ok_or_else(|| format!("`{name}` is not a string"))
    }

    fn optional_uint(&self, name: &str) -> Option<u64> {
        self.values.get(name).and_then(|v| v.as_u64())
    }
}

struct Run<'a> {
    registry: &'a Registry,
    master_seed: u64,
    bindings: HashMap<String, Output>,
    layers: Vec<Layer>,
    placements: Vec<Placement>,
}

impl Run<'_> {
    fn grid_input(&self, tool: &ToolDescriptor, args: &Args<'_>, name: &str) -> Result<TileGrid, String> {
        let value = args.get(name)?;
        let target = binding_reference(value)
            .ok_or_else(|| format!("`{name}` must reference an earlier output as \"$name\""))?;
        match self.bindings.get(target) {
            Some(Output::Grid(g)) => Ok(g.clone()),
            Some(other) => Err(format!(
                "`{name}` of {} expects a grid but `${target}` is {}",
                tool.tool_name,
                other.kind()
            )),
            None => Err(format!("`${target}` is not bound by an earlier step")),
        }
    }

    fn step(&mut self, index: usize, step: &ToolStep) -> Result<(Output, Option<u64>), String> {
        let tool = self
            .registry
            .get(&step.tool_name)
            .ok_or_else(|| format!("tool `{}` is not registered", step.tool_name))?;
        if let Some(issue) = validate_arguments(tool, &step.arguments).first() {
            return Err(issue.to_string());
        }
        for (param, target) in step.references() {
            if tool.input(param).is_none() {
                return Err(format!("`{param}` takes a literal value, not `${target}`"));
            }
        }
        let args = Args::new(tool, step);
        let seed = args
            .optional_uint("seed")
            .unwrap_or_else(|| derive_seed(self.master_seed, index as u64));
        let engine = |e: pcg_engine::EngineError| e.to_string();

        let (output, used_seed) = match step.tool_name.as_str() {
            "gen_cellular_automata" => {
                let params = CaParams {
                    width: args.usize("width")?,
                    height: args.usize("height")?,
                    fill_probability: args.real("fill_probability")?,
                    iterations: args.u32("iterations")?,
                    birth_limit: args.u32("birth_limit")? as u8,
                    death_limit: args.u32("death_limit")? as u8,
                };
                (Output::Grid(gen_cellular_automata(seed, &params).map_err(engine)?), Some(seed))
            }
            "gen_noise_region" => {
                let params = NoiseParams {
                    width: args.usize("width")?,
                    height: args.usize("height")?,
                    frequency: args.real("frequency")?,
                    octaves: args.u32("octaves")?,
                    threshold: args.real("threshold")?,
                };
                (Output::Grid(gen_noise_region(seed, &params).map_err(engine)?), Some(seed))
            }
            "gen_maze" => {
                let width = 2 * args.usize("columns")? + 1;
                let height = 2 * args.usize("rows")? + 1;
                (Output::Grid(gen_maze(seed, width, height).map_err(engine)?), Some(seed))
            }
            "mod_smooth" => {
                let g = self.grid_input(tool, &args, "grid")?;
                (Output::Grid(mod_smooth(&g, args.u32("iterations")?)), None)
            }
            "mod_morph" => {
                let g = self.grid_input(tool, &args, "grid")?;
                let op = match args.text("op")? {
                    "erode" => MorphOp::Erode,
                    "dilate" => MorphOp::Dilate,
                    other => return Err(format!("unknown morph op `{other}`")),
                };
                (Output::Grid(mod_morph(&g, op, args.u32("radius")?).map_err(engine)?), None)
            }
            "mod_keep_largest_region" => {
                let g = self.grid_input(tool, &args, "grid")?;
                let c = match args.text("connectivity")? {
                    "four" => Connectivity::Four,
                    "eight" => Connectivity::Eight,
                    other => return Err(format!("unknown connectivity `{other}`")),
                };
                (Output::Grid(mod_keep_largest_region(&g, c)), None)
            }
            "mod_invert" => {
                let g = self.grid_input(tool, &args, "grid")?;
                (Output::Grid(mod_invert(&g)), None)
            }
            "build_height_layers" => {
                let g = self.grid_input(tool, &args, "base")?;
                let material: Material = args.text("material")?.parse().map_err(engine)?;
                let layers = build_height_layers(&g, args.u32("tiers")?, args.u32("shrink_radius")?, material)
                    .map_err(engine)?;
                self.add_layers(&layers)?;
                (Output::Layers(layers), None)
            }
            "add_layer" => {
                let g = self.grid_input(tool, &args, "grid")?;
                let layer = Layer {
                    name: args.text("name")?.to_string(),
                    height_index: args.u32("height_index")?,
                    material: args.text("material")?.parse().map_err(engine)?,
                    grid: g,
                };
                let layers = vec![layer];
                self.add_layers(&layers)?;
                (Output::Layers(layers), None)
            }
            "scatter" => {
                let g = self.grid_input(tool, &args, "target")?;
                let mode = match args.text("mode")? {
                    "on_mask" => ScatterMode::OnMask,
                    "off_mask" => ScatterMode::OffMask,
                    other => return Err(format!("unknown scatter mode `{other}`")),
                };
                let layer_name = args.text("layer_name")?;
                let layer = self
                    .layers
                    .iter()
                    .find(|l| l.name == layer_name)
                    .ok_or_else(|| format!("layer `{layer_name}` does not exist yet"))?;
                if !layer.grid.same_dimensions(&g) {
                    return Err(format!(
                        "target is {}x{} but layer `{layer_name}` is {}x{}",
                        g.width(),
                        g.height(),
                        layer.grid.width(),
                        layer.grid.height()
                    ));
                }
                let placed = scatter(&g, mode, args.real("density")?, seed, args.text("kind")?, layer_name)
                    .map_err(engine)?;
                self.placements.extend(placed.iter().cloned());
                (Output::Placements(placed), Some(seed))
            }
            other => return Err(format!("tool `{other}` has no engine binding")),
        };
        if output.kind() != tool.produces {
            return Err(format!("produced {} but the registry declares {}", output.kind(), tool.produces));
        }
        Ok((output, used_seed))
    }

    fn add_layers(&mut self, new: &[Layer]) -> Result<(), String> {
        for layer in new {
            if self.layers.iter().any(|l| l.name == layer.name) {
                return Err(format!("layer name `{}` already exists", layer.name));
            }
            if self.layers.iter().any(|l| l.height_index == layer.height_index) {
                return Err(format!("height index {} already taken", layer.height_index));
            }
            if let Some(first) = self.layers.first() {
                if !first.grid.same_dimensions(&layer.grid) {
                    return Err(format!(
                        "layer `{}` is {}x{} but earlier layers are {}x{}",
                        layer.name,
                        layer.grid.width(),
                        layer.grid.height(),
                        first.grid.width(),
                        first.grid.height()
                    ));
                }
            }
            self.layers.push(layer.clone());
        }
        Ok(())
    }
}

/// Executes every step in order. Steps without an explicit `seed` use
/// `derive_seed(master_seed, step_index)`.
pub fn execute(trajectory: &Trajectory, registry: &Registry, master_seed: u64) -> ExecutionReport {
    let mut run = Run {
        registry,
        master_seed,
        bindings: HashMap::new(),
        layers: Vec::new(),
        placements: Vec::new(),
    };
    let mut steps = Vec::with_capacity(trajectory.tool_plan.len());
    let mut failed_step = None;
    for (i, step) in trajectory.tool_plan.iter().enumerate() {
        let mut report = StepReport {
            step_index: i,
            tool_name: step.tool_name.clone(),
            status: StepStatus::Skipped,
            output_kind: None,
            seed: None,
            diagnostics: String::new(),
        };
        if failed_step.is_none() {
            match run.step(i, step) {
                Ok((output, seed)) => {
                    report.status = StepStatus::Ok;
                    report.output_kind = Some(output.kind());
                    report.seed = seed;
                    report.diagnostics = step_verify(&output);
                    tracing::debug!(step = i, tool = %step.tool_name, result = %report.diagnostics, "step ok");
                    if let Some(b) = &step.output_binding {
                        if run.bindings.insert(b.clone(), output).is_some() {
                            report.status = StepStatus::Failed;
                            report.diagnostics = format!("binding `{b}` is already defined");
                            failed_step = Some(i);
                        }
                    }
                }
                Err(reason) => {
                    tracing::debug!(step = i, tool = %step.tool_name, %reason, "step failed");
                    report.status = StepStatus::Failed;
                    report.diagnostics = reason;
                    failed_step = Some(i);
                }
            }
        }
        steps.push(report);
    }

    let mut artifact = None;
    if failed_step.is_none() {
        match MapArtifact::new(run.layers, run.placements, master_seed, trajectory.digest()) {
            Ok(a) => artifact = Some(a),
            Err(e) => {
                let last = steps.len().saturating_sub(1);
                if let Some(s) = steps.get_mut(last) {
                    s.status = StepStatus::Failed;
                    s.diagnostics = format!("assembling the map failed: {e}");
                }
                failed_step = Some(last);
            }
        }
    }
    ExecutionReport {
        master_seed,
        steps,
        failed_step,
        artifact,
    }
}
