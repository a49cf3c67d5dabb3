mod support;

use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Command, Output, Stdio};

use pcg_core::eval::MapFamily;
use pcg_core::refine::{parse_trace_jsonl, Outcome};
use pcg_engine::MapArtifact;
use support::{fixture, get};

fn pcgctl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcgctl"))
        .args(args)
        .current_dir(dir)
        .env_remove("LLM_API_KEY")
        .env_remove("LLM_ENDPOINT")
        .env_remove("PCGCTL_CONFIG")
        .env_remove("PCGCTL_DATA_DIR")
        .env_remove("PCGCTL_PORT")
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_rejects_unknown_tool() {
    let dir = tempfile::tempdir().unwrap();
    let file = fixture("trajectories/invalid_unknown_tool.json");
    let out = pcgctl(dir.path(), &["validate", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("step 0 [tool_selection]"), "{text}");
    assert!(text.contains("gen_mountains"), "{text}");
    assert!(text.contains("decision: revise"), "{text}");
}

#[test]
fn validate_approves_golden_and_rejects_unparseable() {
    let dir = tempfile::tempdir().unwrap();
    let golden = fixture("trajectories/golden_mountain_island.json");
    let out = pcgctl(dir.path(), &["validate", golden.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("decision: approve"));

    let out = pcgctl(dir.path(), &["validate", "--json", golden.to_str().unwrap()]);
    let critique: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(critique["decision"], "approve");

    let bad = fixture("trajectories/invalid_missing_objective.json");
    let out = pcgctl(dir.path(), &["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("invalid trajectory"), "{}", stdout(&out));
}

#[test]
fn generate_with_scripted_backend_writes_map_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = pcgctl(
        dir.path(),
        &[
            "generate",
            "--prompt",
            MapFamily::Beach2d.prompt(),
            "--backend",
            "scripted",
            "--max-iterations",
            "3",
            "--seed",
            "4",
            "--out",
            "run",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let map = std::fs::read_to_string(dir.path().join("run/map.json")).unwrap();
    let artifact = MapArtifact::from_json(&map).unwrap();
    assert_eq!(artifact.seed(), 4);
    assert_eq!(artifact.provenance(), MapFamily::Beach2d.golden().digest());
    let log = parse_trace_jsonl(&std::fs::read_to_string(dir.path().join("run/trace.jsonl")).unwrap()).unwrap();
    assert_eq!(log.rounds.len(), 1);
    assert_eq!(log.rounds[0].1.outcome, Outcome::Approved);
    assert_eq!(log.rounds[0].1.iterations.len(), 1);
}

#[test]
fn config_file_selects_the_backend() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("pcg.toml"),
        "seed = 9\nmax_iterations = 2\n\n[actor]\nbackend = \"scripted\"\n\n[critic]\nbackend = \"rule_based\"\n",
    )
    .unwrap();
    let out = pcgctl(dir.path(), &["--config", "pcg.toml", "generate", "--prompt", "a maze"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let artifact = MapArtifact::from_json(&std::fs::read_to_string(dir.path().join("map.json")).unwrap()).unwrap();
    assert_eq!(artifact.seed(), 9);

    std::fs::write(dir.path().join("pcg.json"), r#"{"actor": {"backend": "scripted"}, "colour": 1}"#).unwrap();
    let out = pcgctl(dir.path(), &["--config", "pcg.json", "generate", "--prompt", "a maze"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn llm_backend_without_key_aborts_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = pcgctl(dir.path(), &["generate", "--prompt", "a maze", "--backend", "llm"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("LLM_API_KEY"));
    assert!(dir.path().join("trace.jsonl").exists());
    assert!(!dir.path().join("map.json").exists());
}

#[test]
fn execute_writes_the_map_and_checks_constraints() {
    let dir = tempfile::tempdir().unwrap();
    let golden = fixture("trajectories/golden_maze2d.json");
    let out = pcgctl(
        dir.path(),
        &["execute", golden.to_str().unwrap(), "--seed", "3", "--family", "maze2d"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("met perfect_maze"), "{}", stdout(&out));
    assert!(dir.path().join("map.json").exists());

    let variant = fixture("trajectories/variant_two_landmasses.json");
    let out = pcgctl(
        dir.path(),
        &["execute", variant.to_str().unwrap(), "--family", "mountain_island", "--out", "v.json"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("UNMET single_landmass"), "{}", stdout(&out));
}

#[test]
fn tools_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out = pcgctl(dir.path(), &["tools", "list"]);
    assert_eq!(stdout(&out).lines().count(), 10);
    let out = pcgctl(dir.path(), &["tools", "show", "gen_maze"]);
    let tool: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(tool["tool_name"], "gen_maze");
    assert_eq!(pcgctl(dir.path(), &["tools", "show", "gen_volcano"]).status.code(), Some(1));
    assert!(stdout(&pcgctl(dir.path(), &["tools", "docs"])).contains("# Tool reference"));
}

#[test]
fn eval_commands_with_scripted_backend() {
    let dir = tempfile::tempdir().unwrap();
    let out = pcgctl(
        dir.path(),
        &["eval", "exp1", "--backend", "scripted", "--trials", "2", "--json", "exp1.json"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert_eq!(text.matches("| success rate | 100% |").count(), 3, "{text}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("exp1.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 3);

    let out = pcgctl(
        dir.path(),
        &["eval", "exp2", "--backend", "scripted", "--architecture", "actor-critic", "--report", "exp2.md"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.path().join("exp2.md")).unwrap();
    for family in MapFamily::ALL {
        assert!(report.contains(&format!("| {family} | 1 prompt |")), "{report}");
    }
}

#[test]
fn serve_answers_healthz() {
    let dir = tempfile::tempdir().unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_pcgctl"))
        .args(["serve", "--port", "0", "--data-dir", "data"])
        .current_dir(dir.path())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let url = line.trim().strip_prefix("listening on ").unwrap().to_string();
    let reply = get(&format!("{url}/healthz"));
    child.kill().unwrap();
    child.wait().unwrap();
    assert_eq!(reply.status, 200);
    assert!(dir.path().join("data/sessions").is_dir());
}
