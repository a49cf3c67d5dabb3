//! Random valid plans and single-fault mutations of them.

use std::collections::BTreeMap;

use pcg_core::trajectory::{Dimension, ToolStep, Trajectory};
use pcg_engine::SplitMix64;
use serde_json::{json, Value};

fn step(tool: &str, args: Value, binding: Option<String>) -> ToolStep {
    ToolStep {
        objective: format!("run {tool}"),
        tool_name: tool.into(),
        arguments: serde_json::from_value(args).unwrap(),
        expected_result: "output".into(),
        output_binding: binding,
    }
}

fn real(rng: &mut SplitMix64, lo: f64, hi: f64) -> f64 {
    let v = lo + rng.next_f64() * (hi - lo);
    (v * 1000.0).round() / 1000.0
}

fn int(rng: &mut SplitMix64, lo: usize, hi: usize) -> usize {
    lo + rng.below(hi - lo + 1)
}

/// A plan the registry accepts: generators first, then modifiers, then
/// layers and scatters, all on grids of one size.
pub fn random_valid_plan(rng: &mut SplitMix64) -> Trajectory {
    let mut plan = Vec::new();
    let mut grids: Vec<String> = Vec::new();
    let (cols, rows) = (int(rng, 2, 12), int(rng, 2, 12));
    let (w, h) = (2 * cols + 1, 2 * rows + 1);
    let generators = int(rng, 1, 3);
    for g in 0..generators {
        let name = format!("g{g}");
        let s = match rng.below(3) {
            0 => step(
                "gen_cellular_automata",
                json!({"width": w, "height": h, "fill_probability": real(rng, 0.0, 1.0),
                       "iterations": int(rng, 0, 6), "birth_limit": int(rng, 0, 8), "death_limit": int(rng, 0, 8)}),
                Some(name.clone()),
            ),
            1 => step(
                "gen_noise_region",
                json!({"width": w, "height": h, "frequency": real(rng, 0.01, 0.5),
                       "octaves": int(rng, 1, 4), "threshold": real(rng, 0.0, 1.0)}),
                Some(name.clone()),
            ),
            _ => step("gen_maze", json!({"columns": cols, "rows": rows, "seed": rng.below(1000)}), Some(name.clone())),
        };
        plan.push(s);
        grids.push(name);
    }
    for m in 0..int(rng, 0, 4) {
        let input = format!("${}", grids[rng.below(grids.len())]);
        let name = format!("m{m}");
        let s = match rng.below(4) {
            0 => step("mod_smooth", json!({"grid": input, "iterations": int(rng, 0, 3)}), Some(name.clone())),
            1 => step(
                "mod_morph",
                json!({"grid": input, "op": if rng.chance(0.5) { "erode" } else { "dilate" }, "radius": int(rng, 1, 3)}),
                Some(name.clone()),
            ),
            2 => step(
                "mod_keep_largest_region",
                json!({"grid": input, "connectivity": if rng.chance(0.5) { "four" } else { "eight" }}),
                Some(name.clone()),
            ),
            _ => step("mod_invert", json!({"grid": input}), Some(name.clone())),
        };
        plan.push(s);
        grids.push(name);
    }
    let mut layer_names: Vec<String> = Vec::new();
    let mut next_height = 0u32;
    if rng.chance(0.5) {
        let tiers = int(rng, 1, 4) as u32;
        let input = format!("${}", grids[rng.below(grids.len())]);
        plan.push(step(
            "build_height_layers",
            json!({"base": input, "tiers": tiers, "shrink_radius": int(rng, 1, 3)}),
            Some("tiers".into()),
        ));
        layer_names.extend((0..tiers).map(|k| format!("tier_{k}")));
        next_height = tiers;
    }
    for l in 0..int(rng, usize::from(layer_names.is_empty()), 3) {
        let input = format!("${}", grids[rng.below(grids.len())]);
        let name = format!("layer_{l}");
        let height = next_height + rng.below(3) as u32;
        next_height = height + 1;
        plan.push(step(
            "add_layer",
            json!({"grid": input, "name": name, "height_index": height, "material": "grass"}),
            Some(format!("l{l}")),
        ));
        layer_names.push(name);
    }
    for s in 0..int(rng, 0, 3) {
        let input = format!("${}", grids[rng.below(grids.len())]);
        let layer = layer_names[rng.below(layer_names.len())].clone();
        plan.push(step(
            "scatter",
            json!({"target": input, "mode": if rng.chance(0.5) { "on_mask" } else { "off_mask" },
                   "density": real(rng, 0.01, 1.0), "kind": "rock", "layer_name": layer}),
            Some(format!("s{s}")),
        ));
    }
    Trajectory {
        trajectory_summary: "random plan".into(),
        tool_plan: plan,
        risks: vec![],
        revision: 0,
    }
}

fn numeric_params(step: &ToolStep) -> &'static [(&'static str, f64, f64)] {
    match step.tool_name.as_str() {
        "gen_cellular_automata" => &[("fill_probability", 0.0, 1.0), ("iterations", 0.0, 50.0), ("birth_limit", 0.0, 8.0)],
        "gen_noise_region" => &[("octaves", 1.0, 8.0), ("threshold", 0.0, 1.0), ("frequency", 0.001, 4.0)],
        "gen_maze" => &[("columns", 1.0, 511.0), ("rows", 1.0, 511.0)],
        "mod_smooth" => &[("iterations", 0.0, 20.0)],
        "mod_morph" => &[("radius", 1.0, 16.0)],
        "build_height_layers" => &[("tiers", 1.0, 8.0), ("shrink_radius", 1.0, 16.0)],
        "add_layer" => &[("height_index", 0.0, 63.0)],
        "scatter" => &[("density", 0.0001, 1.0)],
        _ => &[],
    }
}

/// Injects one fault of the given dimension, or `None` if this plan offers
/// no place for it. Returns the mutated plan and the step it targets.
pub fn inject_fault(plan: &Trajectory, dimension: Dimension, rng: &mut SplitMix64) -> Option<(Trajectory, usize)> {
    let mut t = plan.clone();
    let n = t.tool_plan.len();
    match dimension {
        Dimension::ToolSelection => {
            let i = rng.below(n);
            let fake = ["gen_mountains", "mod_blur", "paint_texture", "scatter_trees"][rng.below(4)];
            t.tool_plan[i].tool_name = fake.into();
            Some((t, i))
        }
        Dimension::ParameterCorrectness => {
            let i = rng.below(n);
            let s = &mut t.tool_plan[i];
            let numeric = numeric_params(s);
            match rng.below(4) {
                0 => {
                    s.arguments.insert("colour".into(), json!("red"));
                }
                1 if !numeric.is_empty() => {
                    let (name, lo, hi) = numeric[rng.below(numeric.len())];
                    let bad = if rng.chance(0.5) { hi + 1.0 } else { lo - 1.0 };
                    let bad = if bad.fract() == 0.0 { json!(bad as i64) } else { json!(bad) };
                    s.arguments.insert(name.into(), bad);
                }
                2 if !numeric.is_empty() => {
                    let (name, _, _) = numeric[rng.below(numeric.len())];
                    s.arguments.insert(name.into(), json!("lots"));
                }
                _ => {
                    let required = match s.tool_name.as_str() {
                        "mod_morph" => "op",
                        "add_layer" => "name",
                        "scatter" => "kind",
                        _ => {
                            s.arguments.insert("colour".into(), json!(1));
                            return Some((t, i));
                        }
                    };
                    s.arguments.remove(required);
                }
            }
            Some((t, i))
        }
        Dimension::LogicSequence => {
            let consumers: Vec<usize> = (0..n)
                .filter(|&i| t.tool_plan[i].arguments.values().any(|v| v.as_str().is_some_and(|s| s.starts_with('$'))))
                .collect();
            let choice = rng.below(4);
            if choice == 0 {
                // feed the layers binding into a grid input
                let layers = t.tool_plan.iter().position(|s| s.tool_name == "build_height_layers" || s.tool_name == "add_layer")?;
                let binding = t.tool_plan[layers].output_binding.clone()?;
                let later: Vec<usize> = consumers.iter().copied().filter(|&c| c > layers).collect();
                let c = *later.get(rng.below(later.len().max(1)))?;
                let s = &mut t.tool_plan[c];
                let key = s.arguments.iter().find(|(_, v)| v.as_str().is_some_and(|x| x.starts_with('$'))).map(|(k, _)| k.clone())?;
                s.arguments.insert(key, json!(format!("${binding}")));
                return Some((t, c));
            }
            if choice == 1 {
                let i = t.tool_plan.iter().position(|s| s.tool_name == "scatter")?;
                t.tool_plan[i].arguments.insert("layer_name".into(), json!("no_such_layer"));
                return Some((t, i));
            }
            if choice == 2 {
                let i = t.tool_plan.iter().rposition(|s| s.tool_name == "add_layer")?;
                let first = t.tool_plan.iter().position(|s| s.tool_name == "build_height_layers" || s.tool_name == "add_layer")?;
                if first == i {
                    return None;
                }
                let dup = if t.tool_plan[first].tool_name == "add_layer" {
                    t.tool_plan[first].arguments["name"].clone()
                } else {
                    json!("tier_0")
                };
                t.tool_plan[i].arguments.insert("name".into(), dup);
                return Some((t, i));
            }
            // move a consumer in front of the producer it depends on
            let c = *consumers.get(rng.below(consumers.len().max(1)))?;
            let target = t.tool_plan[c]
                .arguments
                .values()
                .find_map(|v| v.as_str().and_then(|s| s.strip_prefix('$')).map(str::to_string))?;
            let p = t.tool_plan.iter().position(|s| s.output_binding.as_deref() == Some(target.as_str()))?;
            let moved = t.tool_plan.remove(c);
            t.tool_plan.insert(p, moved);
            Some((t, p))
        }
        Dimension::GoalAlignment => None,
    }
}

pub fn arguments(plan: &Trajectory) -> Vec<BTreeMap<String, Value>> {
    plan.tool_plan.iter().map(|s| s.arguments.clone()).collect()
}
