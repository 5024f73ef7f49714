//! `thingplan`: ingest Thing Descriptions, inspect contexts and
//! topologies, plan toward goal contexts, and run scenario scripts
//! against a simulated home.
//!
//! Exit codes: 0 success, 2 no plan found, 3 validation or parse error,
//! 4 binding/transport error, 5 execution failed to reach the goal.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use thingplan_core::artifact::ArtifactError;
use thingplan_core::fetch::{fetch, DocumentSource};
use thingplan_core::kb::{
    load_usages, InstanceDirectory, KbError, Manifest, Topology,
};
use thingplan_core::ntriples::serialize_ntriples;
use thingplan_core::planner::{
    plan_sequence, PlanError, PlannerKb, SearchConfig, Strategy,
};
use thingplan_core::rdf::{entails, union, Graph};
use thingplan_core::scenario::{ScenarioError, Session, SessionOptions};
use thingplan_core::sim::{load_world, serve_http};
use thingplan_core::td::{parse_td, validate, DataValue, Severity};
use thingplan_core::turtle::parse_turtle;

const EXIT_NO_PLAN: u8 = 2;
const EXIT_INVALID: u8 = 3;
const EXIT_BINDING: u8 = 4;
const EXIT_EXECUTION: u8 = 5;

#[derive(Parser)]
#[command(name = "thingplan", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a TD, project it into a registry, and print
    /// its interface summary.
    IngestTd {
        /// TD document: file path or http(s) IRI.
        source: String,
        #[command(flatten)]
        world: WorldArg,
    },
    /// List the artifacts of a booted world.
    Artifacts {
        #[command(flatten)]
        world: WorldArg,
    },
    /// Invoke one artifact operation.
    Act {
        artifact: String,
        operation: String,
        /// JSON input value, when the operation takes one.
        #[arg(long)]
        input: Option<String>,
        #[command(flatten)]
        world: WorldArg,
    },
    /// Read one observable property.
    Read {
        artifact: String,
        property: String,
        #[command(flatten)]
        world: WorldArg,
    },
    /// Swap the device behind an artifact name for a new TD.
    ReplaceDevice {
        name: String,
        /// Replacement TD: file path or http(s) IRI.
        source: String,
        #[command(flatten)]
        world: WorldArg,
    },
    /// Context operations.
    #[command(subcommand)]
    Context(ContextCommand),
    /// Topology operations.
    #[command(subcommand)]
    Topology(TopologyCommand),
    /// Usage knowledge base operations.
    #[command(subcommand)]
    Usages(UsagesCommand),
    /// Find (and optionally execute) an operation sequence whose final
    /// context entails the goal(s).
    Plan(PlanArgs),
    /// Scenario scripts.
    #[command(subcommand)]
    Scenario(ScenarioCommand),
    /// Simulator controls.
    #[command(subcommand)]
    Sim(SimCommand),
}

#[derive(Args)]
struct WorldArg {
    /// World file backing the devices.
    #[arg(long)]
    world: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ContextCommand {
    /// Parse a context document and print it.
    Load {
        file: PathBuf,
        #[arg(long, default_value = "ntriples")]
        format: OutputFormat,
    },
    /// Show the current context of a world (plus extra context files).
    Show {
        #[command(flatten)]
        world: WorldArg,
        /// Additional context documents to merge in.
        #[arg(long = "context")]
        contexts: Vec<PathBuf>,
        #[arg(long, default_value = "ntriples")]
        format: OutputFormat,
    },
}

#[derive(Subcommand)]
enum TopologyCommand {
    /// Parse and validate a topology document.
    Load { file: PathBuf },
}

#[derive(Subcommand)]
enum UsagesCommand {
    /// Parse and validate a usage document against its axioms.
    Load {
        file: PathBuf,
        /// Manifest mapping context IRIs to files (defaults to
        /// $THINGPLAN_MANIFEST).
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
}

#[derive(Args)]
struct PlanArgs {
    /// Goal context document(s); multiple goals are planned in sequence.
    #[arg(long = "goal", required = true)]
    goals: Vec<PathBuf>,
    /// Usage document.
    #[arg(long)]
    usages: Option<PathBuf>,
    /// Manifest mapping IRIs (contexts, TDs) to files (defaults to
    /// $THINGPLAN_MANIFEST).
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Topology document; defaults to the world's own topology.
    #[arg(long)]
    topology: Option<PathBuf>,
    /// Context documents standing in for live device state.
    #[arg(long = "context")]
    contexts: Vec<PathBuf>,
    /// World file; required with --execute.
    #[arg(long)]
    world: Option<PathBuf>,
    #[arg(long, default_value = "bfs")]
    strategy: String,
    #[arg(long, default_value_t = 6)]
    max_depth: usize,
    #[arg(long, default_value_t = 10_000)]
    max_expansions: usize,
    /// Ignore reference markers when matching goals to usages.
    #[arg(long)]
    no_references: bool,
    /// Execute the plan against the world and verify the goal.
    #[arg(long)]
    execute: bool,
    /// Print the projected final context.
    #[arg(long)]
    show_final: bool,
}

#[derive(Subcommand)]
enum ScenarioCommand {
    /// Run a scenario script against a world.
    Run {
        /// Script: file path or http(s) IRI.
        script: String,
        #[arg(long)]
        world: PathBuf,
    },
}

#[derive(Subcommand)]
enum SimCommand {
    /// Serve a world over HTTP until interrupted.
    Serve {
        #[arg(long)]
        world: PathBuf,
        #[arg(long, default_value_t = 0)]
        port: u16,
        /// Exit after this many seconds (0 means run until killed).
        #[arg(long, default_value_t = 0)]
        max_seconds: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
enum OutputFormat {
    Ntriples,
    Table,
}

struct CmdError {
    code: u8,
    message: String,
}

impl CmdError {
    fn new(code: u8, message: impl Into<String>) -> CmdError {
        CmdError { code, message: message.into() }
    }
}

impl From<ScenarioError> for CmdError {
    fn from(e: ScenarioError) -> CmdError {
        let code = match &e {
            ScenarioError::Plan(p) => plan_error_code(p),
            ScenarioError::Artifact(a) => artifact_error_code(a),
            ScenarioError::GoalNotEntailed(_) => EXIT_EXECUTION,
            ScenarioError::Fetch(_) => EXIT_BINDING,
            _ => EXIT_INVALID,
        };
        CmdError::new(code, e.to_string())
    }
}

impl From<KbError> for CmdError {
    fn from(e: KbError) -> CmdError {
        CmdError::new(EXIT_INVALID, e.to_string())
    }
}

impl From<PlanError> for CmdError {
    fn from(e: PlanError) -> CmdError {
        CmdError::new(plan_error_code(&e), e.to_string())
    }
}

impl From<ArtifactError> for CmdError {
    fn from(e: ArtifactError) -> CmdError {
        CmdError::new(artifact_error_code(&e), e.to_string())
    }
}

fn plan_error_code(e: &PlanError) -> u8 {
    match e {
        PlanError::NoPlanFound { .. } | PlanError::LimitExceeded { .. } => EXIT_NO_PLAN,
        PlanError::AtGoal { source, .. } => plan_error_code(source),
        PlanError::EmptyGoal => EXIT_INVALID,
        PlanError::NotApplicable { .. } => EXIT_EXECUTION,
        PlanError::Kb(_) => EXIT_INVALID,
    }
}

fn artifact_error_code(e: &ArtifactError) -> u8 {
    match e {
        ArtifactError::NoBinding(_) | ArtifactError::Binding(_) => EXIT_BINDING,
        _ => EXIT_INVALID,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CmdError> {
    match cli.command {
        Command::IngestTd { source, world } => ingest_td(&source, world.world),
        Command::Artifacts { world } => artifacts(world.world),
        Command::Act { artifact, operation, input, world } => act(&artifact, &operation, input, world.world),
        Command::Read { artifact, property, world } => read(&artifact, &property, world.world),
        Command::ReplaceDevice { name, source, world } => replace_device(&name, &source, world.world),
        Command::Context(cmd) => context_cmd(cmd),
        Command::Topology(TopologyCommand::Load { file }) => topology_load(&file),
        Command::Usages(UsagesCommand::Load { file, manifest }) => usages_load(&file, manifest),
        Command::Plan(args) => plan_cmd(args),
        Command::Scenario(ScenarioCommand::Run { script, world }) => scenario_run(&script, &world),
        Command::Sim(SimCommand::Serve { world, port, max_seconds }) => {
            sim_serve(&world, port, max_seconds)
        }
    }
}

fn source_from(reference: &str) -> DocumentSource {
    if reference.starts_with("http://") || reference.starts_with("https://") {
        DocumentSource::iri(reference)
    } else {
        DocumentSource::file(reference)
    }
}

fn boot_session(world: Option<PathBuf>) -> Result<Session, CmdError> {
    let path = world.ok_or_else(|| CmdError::new(EXIT_INVALID, "this command needs --world"))?;
    Ok(Session::boot(&path, SessionOptions::default())?)
}

fn print_instance_summary(session: &Session, name: &str) {
    let Some(instance) = session.registry.get(name) else { return };
    let generation = session.registry.generation(name).unwrap_or(1);
    println!("artifact {name} (generation {generation})");
    println!("  base {}", instance.td.base_iri);
    println!("  types {}", instance.type_iris.iter().cloned().collect::<Vec<_>>().join(", "));
    for (prop, state) in &instance.properties {
        println!(
            "  property \"{prop}\" observable={} writable={}",
            state.interaction.observable, state.interaction.writable
        );
    }
    for op in instance.operations.keys() {
        println!("  operation \"{op}\"");
    }
    for event in instance.events.keys() {
        println!("  event \"{event}\"");
    }
}

fn ingest_td(source: &str, world: Option<PathBuf>) -> Result<(), CmdError> {
    let text = fetch(&source_from(source))
        .map_err(|e| CmdError::new(EXIT_BINDING, e.to_string()))?;
    let td = parse_td(&text).map_err(|e| CmdError::new(EXIT_INVALID, e.to_string()))?;
    let diagnostics = validate(&td);
    for diagnostic in &diagnostics {
        eprintln!("{diagnostic}");
    }
    if diagnostics.iter().any(|d| d.severity == Severity::Error) {
        return Err(CmdError::new(EXIT_INVALID, "thing description is invalid"));
    }

    match world {
        Some(path) => {
            let mut session = Session::boot(&path, SessionOptions::default())?;
            let report = session
                .registry
                .ingest(td, source, &session.bindings)
                .map_err(CmdError::from)?;
            for warning in &report.warnings {
                eprintln!("warning: {warning}");
            }
            print_instance_summary(&session, &report.artifact);
        }
        None => {
            // No running devices: just print the parsed interface.
            println!("thing {} (base {})", td.name, td.base_iri);
            for interaction in &td.interactions {
                println!("  {} \"{}\"", interaction.kind, interaction.name);
            }
            for warning in &td.warnings {
                eprintln!("warning: {warning}");
            }
        }
    }
    Ok(())
}

fn artifacts(world: Option<PathBuf>) -> Result<(), CmdError> {
    let session = boot_session(world)?;
    for name in session.registry.names() {
        print_instance_summary(&session, &name);
    }
    Ok(())
}

fn parse_input(input: Option<String>) -> Result<Option<DataValue>, CmdError> {
    let Some(text) = input else { return Ok(None) };
    let json: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CmdError::new(EXIT_INVALID, format!("--input is not JSON: {e}")))?;
    DataValue::from_json(&json)
        .map(Some)
        .ok_or_else(|| CmdError::new(EXIT_INVALID, "--input must not be null"))
}

fn act(artifact: &str, operation: &str, input: Option<String>, world: Option<PathBuf>) -> Result<(), CmdError> {
    let session = boot_session(world)?;
    let input = parse_input(input)?;
    let outcome = session
        .registry
        .act(artifact, operation, input.as_ref(), &session.bindings)
        .map_err(CmdError::from)?;
    match outcome {
        thingplan_core::binding::InvokeOutcome::Ack => println!("ok"),
        thingplan_core::binding::InvokeOutcome::Value(v) => println!("{}", v.canonical_json()),
    }
    Ok(())
}

fn read(artifact: &str, property: &str, world: Option<PathBuf>) -> Result<(), CmdError> {
    let mut session = boot_session(world)?;
    let bindings = session.bindings.clone();
    let value = session
        .registry
        .read_property(artifact, property, &bindings)
        .map_err(CmdError::from)?;
    println!("{}", value.canonical_json());
    Ok(())
}

fn replace_device(name: &str, source: &str, world: Option<PathBuf>) -> Result<(), CmdError> {
    let mut session = boot_session(world)?;
    let text = fetch(&source_from(source))
        .map_err(|e| CmdError::new(EXIT_BINDING, e.to_string()))?;
    let generation = session.replace_device(name, &text, source)?;
    println!("replaced {name}, generation {generation}");
    print_instance_summary(&session, name);
    Ok(())
}

fn load_graph(path: &PathBuf) -> Result<Graph, CmdError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CmdError::new(EXIT_INVALID, format!("{}: {e}", path.display())))?;
    let (graph, _) = parse_turtle(&text)
        .map_err(|e| CmdError::new(EXIT_INVALID, format!("{}: {e}", path.display())))?;
    Ok(graph)
}

fn print_graph(graph: &Graph, format: OutputFormat) {
    match format {
        OutputFormat::Ntriples => print!("{}", serialize_ntriples(graph)),
        OutputFormat::Table => {
            for triple in graph.iter() {
                println!("{}\t{}\t{}", triple.subject, triple.predicate, triple.object);
            }
        }
    }
}

fn context_cmd(cmd: ContextCommand) -> Result<(), CmdError> {
    match cmd {
        ContextCommand::Load { file, format } => {
            let graph = load_graph(&file)?;
            print_graph(&graph, format);
            Ok(())
        }
        ContextCommand::Show { world, contexts, format } => {
            let mut graph = Graph::new();
            if let Some(path) = world.world {
                let mut session = Session::boot(&path, SessionOptions::default())?;
                graph = session.current_context();
            }
            for file in &contexts {
                graph = union(&graph, &load_graph(file)?);
            }
            print_graph(&graph, format);
            Ok(())
        }
    }
}

fn topology_load(file: &PathBuf) -> Result<(), CmdError> {
    let topology = Topology::from_graph(load_graph(file)?)?;
    for zone in topology.zones() {
        println!("zone {zone}");
    }
    for element in topology.elements() {
        println!("element {element}");
    }
    Ok(())
}

fn manifest_or_env(manifest: Option<PathBuf>) -> Result<Manifest, CmdError> {
    let path = manifest
        .or_else(|| std::env::var_os("THINGPLAN_MANIFEST").map(PathBuf::from))
        .ok_or_else(|| {
            CmdError::new(EXIT_INVALID, "no --manifest given and THINGPLAN_MANIFEST unset")
        })?;
    Ok(Manifest::load(&path)?)
}

fn usages_load(file: &PathBuf, manifest: Option<PathBuf>) -> Result<(), CmdError> {
    let manifest = manifest_or_env(manifest)?;
    let usages = load_usages(&load_graph(file)?, &manifest)?;
    for usage in &usages {
        let precond = usage
            .precond
            .as_ref()
            .map(|c| c.iri.clone())
            .unwrap_or_else(|| "-".into());
        println!(
            "usage {} artifact {} operation {} pre {} post {}",
            usage.id, usage.artifact_type, usage.operation_type, precond, usage.postcond.iri
        );
    }
    Ok(())
}

fn plan_cmd(args: PlanArgs) -> Result<(), CmdError> {
    let strategy: Strategy = args
        .strategy
        .parse()
        .map_err(|e: String| CmdError::new(EXIT_INVALID, e))?;
    if args.max_depth == 0 || args.max_expansions == 0 {
        return Err(CmdError::new(EXIT_INVALID, "--max-depth and --max-expansions must be positive"));
    }
    let cfg = SearchConfig {
        strategy,
        max_depth: args.max_depth,
        max_expansions: args.max_expansions,
        use_references: !args.no_references,
        ..Default::default()
    };

    let mut goals = Vec::new();
    for path in &args.goals {
        goals.push(load_graph(path)?);
    }

    // Assemble KB pieces either from a booted world, from files, or both.
    let mut session = match &args.world {
        Some(path) => Some(Session::boot(path, SessionOptions::default())?),
        None => None,
    };
    if args.execute && session.is_none() {
        return Err(CmdError::new(EXIT_INVALID, "--execute needs --world"));
    }

    let manifest = match args.manifest.clone() {
        Some(path) => Some(Manifest::load(&path)?),
        None => match std::env::var_os("THINGPLAN_MANIFEST") {
            Some(path) => Some(Manifest::load(&PathBuf::from(path))?),
            None => session.as_ref().and_then(|s| s.manifest.clone()),
        },
    };

    let usages = match &args.usages {
        Some(path) => {
            let manifest = manifest
                .as_ref()
                .ok_or_else(|| CmdError::new(EXIT_INVALID, "--usages needs a manifest"))?;
            load_usages(&load_graph(path)?, manifest)?
        }
        None => match &session {
            Some(s) if !s.usages.is_empty() => s.usages.clone(),
            _ => return Err(CmdError::new(EXIT_INVALID, "no usages: pass --usages or a world with a usages line")),
        },
    };

    let topology = match &args.topology {
        Some(path) => Topology::from_graph(load_graph(path)?)?,
        None => match &session {
            Some(s) => s.topology.clone(),
            None => Topology::empty(),
        },
    };

    let mut instances = InstanceDirectory::new();
    if let Some(manifest) = &manifest {
        instances.add_manifest_tds(manifest);
    }
    if let Some(s) = &session {
        instances.add_registry(&s.registry);
    }

    let mut initial = match session.as_mut() {
        Some(s) => s.current_context(),
        None => Graph::new(),
    };
    if args.topology.is_some() {
        initial = union(&initial, &topology.graph);
    }
    for path in &args.contexts {
        initial = union(&initial, &load_graph(path)?);
    }
    if session.is_none() && args.topology.is_none() {
        return Err(CmdError::new(EXIT_INVALID, "no topology: pass --topology or --world"));
    }

    let kb = PlannerKb { usages: &usages, topology: &topology, instances: &instances };
    let plans = plan_sequence(&initial, &goals, &kb, &cfg)?;

    for (index, plan) in plans.iter().enumerate() {
        if plans.len() > 1 {
            println!("goal {}:", index + 1);
        }
        if plan.is_empty() {
            println!("already satisfied (0 steps)");
        } else {
            print!("{}", plan.render());
        }
        if args.show_final {
            print!("{}", serialize_ntriples(&plan.projected_final));
        }
    }

    if args.execute {
        let session = session.as_mut().expect("checked above");
        for (index, (plan, goal)) in plans.iter().zip(&goals).enumerate() {
            session.execute_plan(plan).map_err(|e| {
                CmdError::new(EXIT_EXECUTION, format!("step failed in goal {}: {e}", index + 1))
            })?;
            let context = session.current_context();
            if !entails(&context, goal) {
                return Err(CmdError::new(
                    EXIT_EXECUTION,
                    format!("goal {} not entailed after execution", index + 1),
                ));
            }
            println!("goal {} achieved and verified", index + 1);
        }
    }
    Ok(())
}

fn scenario_run(script: &str, world: &Path) -> Result<(), CmdError> {
    let mut session = Session::boot(world, SessionOptions::default())?;
    let trace = session.run_script_source(&source_from(script))?;
    print!("{}", trace.render());
    if trace.failed {
        return Err(CmdError::new(EXIT_EXECUTION, "scenario had failing steps"));
    }
    Ok(())
}

fn sim_serve(world: &Path, port: u16, max_seconds: u64) -> Result<(), CmdError> {
    let state = load_world(world).map_err(|e| CmdError::new(EXIT_INVALID, e.to_string()))?;
    let shared = state.shared();
    let server = serve_http(shared, port)
        .map_err(|e| CmdError::new(EXIT_BINDING, e.to_string()))?;
    println!("serving on {}", server.base_url());
    // Enumerate what is reachable, for operators poking with curl.
    println!("td documents at /td/<deviceId>");
    if max_seconds > 0 {
        std::thread::sleep(std::time::Duration::from_secs(max_seconds));
    } else {
        loop {
            std::thread::sleep(std::time::Duration::from_secs(3600));
        }
    }
    Ok(())
}
