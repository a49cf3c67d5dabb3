//! `pcgctl`: generate, check and execute map plans, run the experiments and
//! serve the session API.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pcg_core::agent::{validate_plan, Actor, BackendKind, Critic};
use pcg_core::eval::{
    run_experiment_one, run_experiment_two, ConstraintFeedback, ExperimentOneConfig, ExperimentOneReport,
    ExperimentTwoConfig, ExperimentTwoReport, MapFamily,
};
use pcg_core::executor::{execute, StepStatus};
use pcg_core::refine::{trace_to_jsonl, Architecture, IterationRecord, RefinementTrace};
use pcg_core::registry::{render_documentation, Registry};
use pcg_core::trajectory::{parse_trajectory, Critique, Trajectory};
use pcgctl::backend::ConfiguredAgents;
use pcgctl::config::{FileConfig, LlmEnv, Settings};
use pcgctl::service::Service;
use pcgctl::session::{run_round, RoundObserver};
use pcgctl::store::{MAP_FILE, TRACE_FILE};

#[derive(Debug, Parser)]
#[command(name = "pcgctl", version, about = "Plan, check and generate tile maps from natural-language requests")]
struct Cli {
    /// TOML or JSON settings file.
    #[arg(long, global = true, env = "PCGCTL_CONFIG")]
    config: Option<PathBuf>,
    /// Session store directory.
    #[arg(long, global = true, env = "PCGCTL_DATA_DIR")]
    data_dir: Option<PathBuf>,
    /// Log more; repeat for trace output. `RUST_LOG` takes precedence.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Refine a request into a plan, execute it and write map.json and trace.jsonl.
    Generate(GenerateArgs),
    /// Check a trajectory file with the rule critic; exits 0 iff approved.
    Validate {
        file: PathBuf,
        /// Print the critique as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Execute a trajectory file and write the map.
    Execute {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "map.json")]
        out: PathBuf,
        /// Also check the objective constraints of this map family.
        #[arg(long)]
        family: Option<MapFamily>,
    },
    /// Run the benchmark experiments.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Inspect the tool registry.
    #[command(subcommand)]
    Tools(ToolsCommand),
    /// Serve the session API.
    Serve {
        #[arg(long, env = "PCGCTL_PORT")]
        port: Option<u16>,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendArg {
    Llm,
    Scripted,
}

impl From<BackendArg> for BackendKind {
    fn from(b: BackendArg) -> BackendKind {
        match b {
            BackendArg::Llm => BackendKind::Llm,
            BackendArg::Scripted => BackendKind::Scripted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[allow(clippy::enum_variant_names)]
enum SingleArchitecture {
    ActorCritic,
    ActorWithResources,
    ActorBare,
}

impl From<SingleArchitecture> for Architecture {
    fn from(a: SingleArchitecture) -> Architecture {
        match a {
            SingleArchitecture::ActorCritic => Architecture::ActorCritic,
            SingleArchitecture::ActorWithResources => Architecture::ActorWithResources,
            SingleArchitecture::ActorBare => Architecture::ActorBare,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ArchitectureArg {
    ActorCritic,
    ActorWithResources,
    ActorBare,
    All,
}

impl ArchitectureArg {
    fn expand(self) -> Vec<Architecture> {
        match self {
            ArchitectureArg::ActorCritic => vec![Architecture::ActorCritic],
            ArchitectureArg::ActorWithResources => vec![Architecture::ActorWithResources],
            ArchitectureArg::ActorBare => vec![Architecture::ActorBare],
            ArchitectureArg::All => Architecture::ALL.to_vec(),
        }
    }
}

/// Overrides shared by commands that run agents.
#[derive(Debug, Args)]
struct AgentArgs {
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    /// Critic review budget K.
    #[arg(long)]
    max_iterations: Option<u32>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    prompt: String,
    #[command(flatten)]
    agents: AgentArgs,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    architecture: Option<SingleArchitecture>,
    /// Directory for map.json and trace.jsonl.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Record the run as a session in the store and serve it.
    #[arg(long)]
    serve_result: bool,
    #[arg(long, env = "PCGCTL_PORT")]
    port: Option<u16>,
}

#[derive(Debug, Subcommand)]
enum EvalCommand {
    /// Repeated trials of one request; success rate and mistakes.
    Exp1 {
        #[command(flatten)]
        agents: AgentArgs,
        #[arg(long, value_enum, default_value = "all")]
        architecture: ArchitectureArg,
        #[arg(long, default_value_t = 10)]
        trials: u32,
        #[arg(long, default_value_t = 0)]
        seed_base: u64,
        /// Request to plan; defaults to the mountain island request.
        #[arg(long)]
        prompt: Option<String>,
        #[command(flatten)]
        output: ReportArgs,
    },
    /// Constraint-feedback follow-ups per map family; prompts required.
    Exp2 {
        #[command(flatten)]
        agents: AgentArgs,
        #[arg(long, value_enum, default_value = "all")]
        architecture: ArchitectureArg,
        /// One family; all four when omitted.
        #[arg(long)]
        family: Option<MapFamily>,
        #[arg(long, default_value_t = 5)]
        max_rounds: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: ReportArgs,
    },
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Write the markdown report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write full per-trial records as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum ToolsCommand {
    /// One line per tool.
    List,
    /// Full descriptor of one tool as JSON.
    Show { name: String },
    /// The documentation given to the agents.
    Docs,
}

type CliResult = Result<ExitCode, String>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose, matches!(cli.command, Command::Serve { .. }));
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn init_logging(verbose: u8, serving: bool) {
    let default = match (verbose, serving) {
        (0, false) => "warn",
        (0, true) | (1, _) => "info",
        (2, _) => "debug",
        _ => "trace",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();
}

fn settings(cli: &Cli) -> Result<Settings, String> {
    let file = cli
        .config
        .as_deref()
        .map(FileConfig::load)
        .transpose()
        .map_err(|e| e.to_string())?;
    let mut s = Settings::resolve(file.as_ref(), &LlmEnv::from_process()).map_err(|e| e.to_string())?;
    if let Some(d) = &cli.data_dir {
        s.data_dir = d.clone();
    }
    Ok(s)
}

fn apply_agent_args(s: &mut Settings, args: &AgentArgs) -> Result<(), String> {
    if let Some(b) = args.backend {
        s.set_backend(b.into());
    }
    if let Some(k) = args.max_iterations {
        s.session.max_iterations = k;
    }
    s.session.validate()
}

fn run(cli: Cli) -> CliResult {
    let registry = Registry::bundled();
    let mut settings = settings(&cli)?;
    match cli.command {
        Command::Generate(args) => generate(&mut settings, registry, args),
        Command::Validate { file, json } => validate(&registry, &file, json),
        Command::Execute { file, seed, out, family } => execute_file(&registry, &file, seed, &out, family),
        Command::Eval(cmd) => eval(&mut settings, &registry, cmd),
        Command::Tools(cmd) => tools(&registry, cmd),
        Command::Serve { port, bind } => {
            if let Some(p) = port {
                settings.port = p;
            }
            serve(&settings, registry, &bind)
        }
    }
}

fn read_plan(file: &Path) -> Result<Trajectory, String> {
    let text = std::fs::read_to_string(file).map_err(|e| format!("{}: {e}", file.display()))?;
    parse_trajectory(&text).map_err(|e| format!("{}: {e}", file.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    std::fs::write(path, contents).map_err(|e| format!("{}: {e}", path.display()))
}

struct Progress;

impl RoundObserver for Progress {
    fn iteration(&mut self, record: &IterationRecord) {
        let verdict = match &record.critique {
            Some(c) if c.is_approved() => "approved".to_string(),
            Some(c) => format!("revise ({} issues)", c.blocking_issues().len()),
            None => "not reviewed".to_string(),
        };
        eprintln!(
            "revision {}: {} steps, {verdict}",
            record.revision,
            record.trajectory.tool_plan.len()
        );
    }

    fn refined(&mut self, trace: &RefinementTrace) {
        eprintln!("refinement {:?} after {} proposals", trace.outcome, trace.iterations.len());
    }
}

fn generate(settings: &mut Settings, registry: Registry, args: GenerateArgs) -> CliResult {
    apply_agent_args(settings, &args.agents)?;
    if let Some(seed) = args.seed {
        settings.session.seed = seed;
    }
    if let Some(a) = args.architecture {
        settings.session.architecture = a.into();
    }
    if let Some(p) = args.port {
        settings.port = p;
    }
    std::fs::create_dir_all(&args.out).map_err(|e| format!("{}: {e}", args.out.display()))?;
    let agents = ConfiguredAgents::new(settings.api_key.clone());

    if args.serve_result {
        let service = Service::open(&settings.data_dir, registry, Arc::new(agents), settings.session.clone())
            .map_err(|e| e.to_string())?;
        let id = service
            .create_session(&args.prompt, settings.session.clone())
            .map_err(|e| e.to_string())?;
        let meta = service
            .wait_settled(&id, Duration::from_secs(3600))
            .map_err(|e| e.to_string())?;
        let dir = settings.data_dir.join("sessions").join(&id);
        for name in [TRACE_FILE, MAP_FILE] {
            if dir.join(name).exists() {
                std::fs::copy(dir.join(name), args.out.join(name)).map_err(|e| format!("{name}: {e}"))?;
            }
        }
        println!("session {id}: {:?}", meta.phase);
        return serve_service(service, settings.port, "127.0.0.1");
    }

    let result = run_round(
        "cli",
        0,
        &args.prompt,
        &settings.session,
        &registry,
        &pcg_core::agent::Prompts::bundled(),
        &agents,
        &mut Progress,
    );
    write_file(&args.out.join(TRACE_FILE), &trace_to_jsonl(&result.trace, 0))?;
    if let Some(e) = &result.trace.error {
        eprintln!("refinement error: {e}");
    }
    if let Some(report) = &result.execution {
        print_steps(report);
    }
    match &result.artifact {
        Some(artifact) => {
            let path = args.out.join(MAP_FILE);
            write_file(&path, &artifact.to_canonical_json())?;
            println!("map written to {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        None => {
            println!("no map produced");
            Ok(ExitCode::FAILURE)
        }
    }
}

fn print_steps(report: &pcg_core::executor::ExecutionReport) {
    for s in &report.steps {
        let status = match s.status {
            StepStatus::Ok => "ok",
            StepStatus::Failed => "FAILED",
            StepStatus::Skipped => "skipped",
        };
        println!("step {} {} [{status}] {}", s.step_index, s.tool_name, s.diagnostics);
    }
}

fn validate(registry: &Registry, file: &Path, json: bool) -> CliResult {
    let plan = match read_plan(file) {
        Ok(p) => p,
        Err(e) => {
            println!("invalid trajectory: {e}");
            return Ok(ExitCode::FAILURE);
        }
    };
    let critique = Critique::new(validate_plan(&plan, registry), Vec::new());
    if json {
        println!("{}", critique.render());
    } else {
        for issue in critique.blocking_issues() {
            let step = issue.step_index.map_or("plan".to_string(), |i| format!("step {i}"));
            print!("{step} [{}]: {}", issue.dimension, issue.description);
            match &issue.correction_suggestion {
                Some(fix) => println!(" (suggestion: {fix})"),
                None => println!(),
            }
        }
        println!("decision: {}", if critique.is_approved() { "approve" } else { "revise" });
    }
    Ok(if critique.is_approved() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn execute_file(registry: &Registry, file: &Path, seed: u64, out: &Path, family: Option<MapFamily>) -> CliResult {
    let plan = read_plan(file)?;
    let report = execute(&plan, registry, seed);
    print_steps(&report);
    let Some(artifact) = &report.artifact else {
        return Ok(ExitCode::FAILURE);
    };
    write_file(out, &artifact.to_canonical_json())?;
    println!("map written to {}", out.display());
    let mut ok = true;
    if let Some(f) = family {
        for r in pcg_core::eval::evaluate(artifact, &f.constraints()) {
            ok &= r.satisfied;
            println!("{} {}: {}", if r.satisfied { "met" } else { "UNMET" }, r.constraint_id, r.detail);
        }
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn emit(output: &ReportArgs, markdown: &str, json: impl serde::Serialize) -> Result<(), String> {
    match &output.report {
        Some(p) => write_file(p, markdown)?,
        None => {
            print!("{markdown}");
            let _ = std::io::stdout().flush();
        }
    }
    if let Some(p) = &output.json {
        let body = serde_json::to_string_pretty(&json).map_err(|e| e.to_string())?;
        write_file(p, &body)?;
    }
    Ok(())
}

fn eval(settings: &mut Settings, registry: &Registry, cmd: EvalCommand) -> CliResult {
    let agents = ConfiguredAgents::new(settings.api_key.clone());
    match cmd {
        EvalCommand::Exp1 { agents: a, architecture, trials, seed_base, prompt, output } => {
            apply_agent_args(settings, &a)?;
            let prompt = prompt.unwrap_or_else(|| MapFamily::MountainIsland.prompt().to_string());
            let (actor_f, critic_f) = factories(&agents, settings, &prompt)?;
            let mut markdown = String::from("# Experiment I\n\n");
            let mut reports: Vec<ExperimentOneReport> = Vec::new();
            for arch in architecture.expand() {
                let config = ExperimentOneConfig {
                    architecture: arch,
                    trials,
                    max_iterations: settings.session.max_iterations,
                    seed_base,
                    prompt: prompt.clone(),
                };
                let report = run_experiment_one(&config, registry, &actor_f, &critic_f);
                markdown.push_str(&report.to_markdown());
                markdown.push('\n');
                reports.push(report);
            }
            emit(&output, &markdown, &reports)?;
        }
        EvalCommand::Exp2 { agents: a, architecture, family, max_rounds, seed, output } => {
            apply_agent_args(settings, &a)?;
            let families = family.map_or(MapFamily::ALL.to_vec(), |f| vec![f]);
            let mut rows = Vec::new();
            for f in families {
                let (actor_f, critic_f) = factories(&agents, settings, f.prompt())?;
                for arch in architecture.expand() {
                    let config = ExperimentTwoConfig {
                        architecture: arch,
                        family: f,
                        max_iterations: settings.session.max_iterations,
                        seed,
                        max_rounds,
                    };
                    let mut feedback = ConstraintFeedback { max_rounds };
                    rows.push(run_experiment_two(&config, registry, &actor_f, &critic_f, &mut feedback));
                }
            }
            let report = ExperimentTwoReport { rows };
            emit(&output, &format!("# Experiment II\n\n{}", report.to_markdown()), &report)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

type Factories<'a> = (
    Box<dyn Fn(u32) -> Box<dyn Actor> + Sync + 'a>,
    Box<dyn Fn(u32) -> Box<dyn Critic> + Sync + 'a>,
);

/// Agent factories for the experiments; configuration errors surface here
/// instead of inside a trial.
fn factories<'a>(agents: &'a ConfiguredAgents, settings: &Settings, prompt: &str) -> Result<Factories<'a>, String> {
    let actor_config = settings.session.actor.clone();
    let critic_config = settings.session.critic.clone();
    agents.actor(&actor_config, prompt).map_err(|e| e.to_string())?;
    agents.critic(&critic_config).map_err(|e| e.to_string())?;
    let prompt = prompt.to_string();
    Ok((
        Box::new(move |_| agents.actor(&actor_config, &prompt).expect("checked above")),
        Box::new(move |_| agents.critic(&critic_config).expect("checked above")),
    ))
}

fn tools(registry: &Registry, cmd: ToolsCommand) -> CliResult {
    match cmd {
        ToolsCommand::List => {
            for t in registry.tools() {
                let summary = t.description.lines().next().unwrap_or_default();
                println!("{:<26} {:<10} {summary}", t.tool_name, format!("{:?}", t.category).to_lowercase());
            }
        }
        ToolsCommand::Show { name } => {
            let Some(t) = registry.get(&name) else {
                eprintln!("unknown tool `{name}`");
                return Ok(ExitCode::FAILURE);
            };
            println!("{}", serde_json::to_string_pretty(t).map_err(|e| e.to_string())?);
        }
        ToolsCommand::Docs => print!("{}", render_documentation(registry)),
    }
    Ok(ExitCode::SUCCESS)
}

fn serve(settings: &Settings, registry: Registry, bind: &str) -> CliResult {
    let agents = Arc::new(ConfiguredAgents::new(settings.api_key.clone()));
    let service =
        Service::open(&settings.data_dir, registry, agents, settings.session.clone()).map_err(|e| e.to_string())?;
    serve_service(service, settings.port, bind)
}

fn serve_service(service: Service, port: u16, bind: &str) -> CliResult {
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((bind, port))
            .await
            .map_err(|e| format!("binding {bind}:{port}: {e}"))?;
        let addr = listener.local_addr().map_err(|e| e.to_string())?;
        println!("listening on http://{addr}");
        let _ = std::io::stdout().flush();
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        pcgctl::api::serve(listener, service, shutdown).await.map_err(|e| e.to_string())
    })?;
    Ok(ExitCode::SUCCESS)
}
