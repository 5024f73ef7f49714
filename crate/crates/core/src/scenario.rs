//! Script-driven sessions: boot a world, project its devices into a
//! registry, and run scenario scripts that invoke operations, wait on
//! virtual time, react to events, and achieve goal contexts by planning
//! and executing.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use crate::artifact::{ArtifactError, Registry};
use crate::binding::{BindingRegistry, HttpBinding, SimBinding};
use crate::fetch::{fetch_with, DocumentSource, FetchError, FetchOptions};
use crate::kb::{
    current_context, load_usages, InstanceDirectory, KbError, Manifest, Topology, UsageDecl,
};
use crate::planner::{plan, Plan, PlanError, PlannerKb, SearchConfig};
use crate::predicates::PredicateTable;
use crate::rdf::{entails, Graph};
use crate::sim::{load_world, serve_http, SharedWorld, WorldError, WorldServer};
use crate::td::{DataValue, SchemaType};
use crate::turtle::parse_turtle;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Fetch(#[from] FetchError),
    #[error("script: {0}")]
    Script(String),
    #[error("document `{origin}`: {message}")]
    Document { origin: String, message: String },
    #[error("goal `{0}` not entailed by the context after execution")]
    GoalNotEntailed(String),
}

/// One step of a scenario script.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "camelCase", deny_unknown_fields)]
pub enum Step {
    /// Plan toward the goal context named by IRI/path and execute it.
    #[serde(rename_all = "camelCase")]
    AchieveGoal { goal: String },
    /// Advance virtual time.
    Wait { ticks: u64 },
    /// Invoke one artifact operation.
    #[serde(rename_all = "camelCase")]
    Invoke {
        artifact: String,
        operation: String,
        #[serde(default)]
        input: Option<serde_json::Value>,
    },
    /// Arm a handler: whenever the event fires, run the nested steps.
    #[serde(rename_all = "camelCase")]
    OnEvent { artifact: String, event: String, steps: Vec<Step> },
    /// Repeat the nested steps a bounded number of times.
    Loop { times: u32, steps: Vec<Step> },
    /// Inject an event into the simulated world (test hook standing in
    /// for a physical trigger).
    Emit { device: String, event: String },
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioScript {
    pub steps: Vec<Step>,
}

impl ScenarioScript {
    pub fn from_json(text: &str) -> Result<ScenarioScript, ScenarioError> {
        serde_json::from_str(text).map_err(|e| ScenarioError::Script(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceEntry {
    Invoked { artifact: String, operation: String },
    Waited { ticks: u64 },
    Emitted { device: String, event: String },
    EventHandled { artifact: String, event: String },
    PlanComputed { goal: String, steps: usize },
    GoalAchieved { goal: String },
    StepFailed { what: String, error: String },
}

impl fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceEntry::Invoked { artifact, operation } => {
                write!(f, "invoke {artifact}.{operation}")
            }
            TraceEntry::Waited { ticks } => write!(f, "wait {ticks}"),
            TraceEntry::Emitted { device, event } => write!(f, "emit {device}.{event}"),
            TraceEntry::EventHandled { artifact, event } => {
                write!(f, "event {artifact}.{event}")
            }
            TraceEntry::PlanComputed { goal, steps } => {
                write!(f, "plan {goal} ({steps} steps)")
            }
            TraceEntry::GoalAchieved { goal } => write!(f, "achieved {goal}"),
            TraceEntry::StepFailed { what, error } => write!(f, "FAILED {what}: {error}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub entries: Vec<TraceEntry>,
    pub failed: bool,
}

impl Trace {
    /// The invocation subsequence, for comparing runs.
    pub fn invocations(&self) -> Vec<(String, String)> {
        self.entries
            .iter()
            .filter_map(|e| match e {
                TraceEntry::Invoked { artifact, operation } => {
                    Some((artifact.clone(), operation.clone()))
                }
                _ => None,
            })
            .collect()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            out.push_str(&entry.to_string());
            out.push('\n');
        }
        out
    }
}

/// Session construction knobs.
#[derive(Clone, Debug)]
pub struct SessionOptions {
    /// Serve the world over HTTP and route the `http` binding through
    /// the facade; otherwise every scheme is handled in-process.
    pub serve_http: bool,
    pub predicate_table: Option<PredicateTable>,
    pub search: SearchConfig,
}

impl Default for SessionOptions {
    fn default() -> Self {
        SessionOptions { serve_http: true, predicate_table: None, search: SearchConfig::default() }
    }
}

struct ArmedHandler {
    artifact: String,
    event: String,
    steps: Vec<Step>,
}

/// A booted world with its registry, bindings, knowledge base and
/// optional HTTP facade.
pub struct Session {
    pub world: SharedWorld,
    pub server: Option<WorldServer>,
    pub bindings: BindingRegistry,
    pub registry: Registry,
    pub table: PredicateTable,
    pub topology: Topology,
    pub usages: Vec<UsageDecl>,
    pub manifest: Option<Manifest>,
    pub ambient: Graph,
    pub search: SearchConfig,
    script_origin: Option<String>,
}

impl Session {
    /// Loads a world file, starts the facade (per options), registers
    /// bindings and ingests every non-spare device.
    pub fn boot(world_path: &Path, options: SessionOptions) -> Result<Session, ScenarioError> {
        let world_state = load_world(world_path)?;

        let table = match options.predicate_table {
            Some(table) => table,
            None => match &world_state.predicates_path {
                Some(path) => PredicateTable::load(path).map_err(|e| ScenarioError::Document {
                    origin: path.display().to_string(),
                    message: e.to_string(),
                })?,
                None => PredicateTable::default(),
            },
        };

        let topology = Topology::from_graph(world_state.topology.clone())?;
        let ambient = world_state.ambient.clone();
        let manifest = match &world_state.manifest_path {
            Some(path) => Some(Manifest::load(path)?),
            None => None,
        };
        let usages = match &world_state.usages_path {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Document {
                    origin: path.display().to_string(),
                    message: e.to_string(),
                })?;
                let (graph, _) = parse_turtle(&text).map_err(|e| ScenarioError::Document {
                    origin: path.display().to_string(),
                    message: e.to_string(),
                })?;
                let resolver = manifest.as_ref().ok_or_else(|| ScenarioError::Document {
                    origin: path.display().to_string(),
                    message: "usages declared without a manifest".into(),
                })?;
                load_usages(&graph, resolver)?
            }
            None => Vec::new(),
        };

        // Device descriptors before the world moves behind the mutex.
        let devices: Vec<(String, String, bool)> = world_state
            .devices
            .iter()
            .map(|d| (d.td_text.clone(), d.iri.clone(), d.spare))
            .collect();
        let schemes: Vec<String> = world_state
            .devices
            .iter()
            .filter_map(|d| d.td.base_scheme().map(str::to_string))
            .collect();

        let world = world_state.shared();
        let server = if options.serve_http {
            Some(serve_http(world.clone(), 0)?)
        } else {
            None
        };

        let mut bindings = BindingRegistry::new();
        let sim = Arc::new(SimBinding::new(world.clone()));
        bindings.register("sim", sim.clone());
        for scheme in schemes {
            if scheme != "http" {
                bindings.register(&scheme, sim.clone());
            }
        }
        match &server {
            Some(server) => bindings.register(
                "http",
                Arc::new(HttpBinding::with_override(server.addr())),
            ),
            None => bindings.register("http", sim.clone()),
        }

        let mut registry = Registry::new();
        for (td_text, iri, spare) in devices {
            if spare {
                continue;
            }
            let td = crate::td::parse_td(&td_text).map_err(|e| ScenarioError::Document {
                origin: iri.clone(),
                message: e.to_string(),
            })?;
            registry.ingest(td, &iri, &bindings)?;
        }

        Ok(Session {
            world,
            server,
            bindings,
            registry,
            table,
            topology,
            usages,
            manifest,
            ambient,
            search: options.search,
            script_origin: None,
        })
    }

    /// Re-reads every observable property and returns the full current
    /// context: fresh exports plus topology plus ambient statements.
    pub fn current_context(&mut self) -> Graph {
        let artifacts = self.registry.names();
        for artifact in artifacts {
            let properties: Vec<String> = self
                .registry
                .get(&artifact)
                .map(|a| {
                    a.properties
                        .iter()
                        .filter(|(_, p)| p.interaction.observable)
                        .map(|(name, _)| name.clone())
                        .collect()
                })
                .unwrap_or_default();
            for property in properties {
                let _ = self.registry.read_property(&artifact, &property, &self.bindings);
            }
        }
        current_context(&self.registry, &self.table, &self.topology, std::slice::from_ref(&self.ambient))
    }

    /// Directory of plannable instances: manifest TDs overlaid by the
    /// live registry.
    pub fn instance_directory(&self) -> InstanceDirectory {
        let mut directory = InstanceDirectory::new();
        if let Some(manifest) = &self.manifest {
            directory.add_manifest_tds(manifest);
        }
        directory.add_registry(&self.registry);
        directory
    }

    /// Plans toward a goal from the freshly exported context.
    pub fn plan_goal(&mut self, goal: &Graph) -> Result<Plan, ScenarioError> {
        let context = self.current_context();
        let instances = self.instance_directory();
        let kb = PlannerKb {
            usages: &self.usages,
            topology: &self.topology,
            instances: &instances,
        };
        Ok(plan(&context, goal, &kb, &self.search)?)
    }

    /// Runs a plan's steps through the artifact registry. Actions whose
    /// input schema is boolean are invoked with `true` when the plan
    /// carries no explicit input.
    pub fn execute_plan(&mut self, plan: &Plan) -> Result<(), ScenarioError> {
        for step in &plan.steps {
            let input = self
                .registry
                .get(&step.artifact_name)
                .and_then(|a| a.operations.get(&step.operation_name))
                .and_then(|op| op.interaction.input_schema.as_ref())
                .and_then(|schema| match schema.schema_type {
                    Some(SchemaType::Boolean) => Some(DataValue::Bool(true)),
                    _ => None,
                });
            self.registry.act(
                &step.artifact_name,
                &step.operation_name,
                input.as_ref(),
                &self.bindings,
            )?;
        }
        Ok(())
    }

    /// Plan, execute, and verify: the re-exported context must entail
    /// the goal.
    pub fn achieve(&mut self, goal: &Graph, goal_name: &str) -> Result<Plan, ScenarioError> {
        let plan = self.plan_goal(goal)?;
        self.execute_plan(&plan)?;
        let after = self.current_context();
        if !entails(&after, goal) {
            return Err(ScenarioError::GoalNotEntailed(goal_name.to_string()));
        }
        Ok(plan)
    }

    /// Replaces a registered device with a new TD document.
    pub fn replace_device(
        &mut self,
        name: &str,
        td_text: &str,
        source_iri: &str,
    ) -> Result<u64, ScenarioError> {
        let td = crate::td::parse_td(td_text).map_err(|e| ScenarioError::Document {
            origin: source_iri.to_string(),
            message: e.to_string(),
        })?;
        let report = self.registry.replace(name, td, source_iri, &self.bindings)?;
        Ok(report.generation)
    }

    /// Loads and runs a scenario script from a source; relative
    /// `achieveGoal` references resolve against the script's own origin.
    pub fn run_script_source(&mut self, source: &DocumentSource) -> Result<Trace, ScenarioError> {
        let text = self.fetch_document(source)?;
        let script = ScenarioScript::from_json(&text)?;
        self.script_origin = match source {
            DocumentSource::Iri(iri) => Some(iri.clone()),
            _ => None,
        };
        Ok(self.run_script(&script))
    }

    /// Runs a parsed script, producing the step-by-step trace. Handler
    /// failures are recorded per occurrence; the trace's `failed` flag
    /// aggregates them.
    pub fn run_script(&mut self, script: &ScenarioScript) -> Trace {
        let mut trace = Trace::default();
        let mut handlers: Vec<ArmedHandler> = Vec::new();
        self.run_steps(&script.steps, &mut handlers, &mut trace, 0);
        self.poll_handlers(&mut handlers, &mut trace, 0);
        trace
    }

    fn run_steps(
        &mut self,
        steps: &[Step],
        handlers: &mut Vec<ArmedHandler>,
        trace: &mut Trace,
        depth: usize,
    ) {
        if depth > 16 {
            trace.failed = true;
            trace.entries.push(TraceEntry::StepFailed {
                what: "nesting".into(),
                error: "handler recursion exceeds depth 16".into(),
            });
            return;
        }
        for step in steps {
            match step {
                Step::Invoke { artifact, operation, input } => {
                    let input = input.as_ref().and_then(DataValue::from_json);
                    match self.registry.act(artifact, operation, input.as_ref(), &self.bindings) {
                        Ok(_) => trace.entries.push(TraceEntry::Invoked {
                            artifact: artifact.clone(),
                            operation: operation.clone(),
                        }),
                        Err(e) => {
                            trace.failed = true;
                            trace.entries.push(TraceEntry::StepFailed {
                                what: format!("invoke {artifact}.{operation}"),
                                error: e.to_string(),
                            });
                        }
                    }
                }
                Step::Wait { ticks } => {
                    self.world.lock().expect("world lock").tick(*ticks);
                    trace.entries.push(TraceEntry::Waited { ticks: *ticks });
                }
                Step::Emit { device, event } => {
                    match self.world.lock().expect("world lock").emit(device, event) {
                        Ok(()) => trace.entries.push(TraceEntry::Emitted {
                            device: device.clone(),
                            event: event.clone(),
                        }),
                        Err(e) => {
                            trace.failed = true;
                            trace.entries.push(TraceEntry::StepFailed {
                                what: format!("emit {device}.{event}"),
                                error: e.to_string(),
                            });
                        }
                    }
                }
                Step::OnEvent { artifact, event, steps } => {
                    handlers.push(ArmedHandler {
                        artifact: artifact.clone(),
                        event: event.clone(),
                        steps: steps.clone(),
                    });
                }
                Step::Loop { times, steps } => {
                    for _ in 0..*times {
                        self.run_steps(steps, handlers, trace, depth + 1);
                    }
                }
                Step::AchieveGoal { goal } => {
                    match self.load_goal(goal) {
                        Ok(graph) => match self.achieve(&graph, goal) {
                            Ok(plan) => {
                                trace.entries.push(TraceEntry::PlanComputed {
                                    goal: goal.clone(),
                                    steps: plan.steps.len(),
                                });
                                for step in &plan.steps {
                                    trace.entries.push(TraceEntry::Invoked {
                                        artifact: step.artifact_name.clone(),
                                        operation: step.operation_name.clone(),
                                    });
                                }
                                trace.entries.push(TraceEntry::GoalAchieved { goal: goal.clone() });
                            }
                            Err(e) => {
                                trace.failed = true;
                                trace.entries.push(TraceEntry::StepFailed {
                                    what: format!("achieveGoal {goal}"),
                                    error: e.to_string(),
                                });
                            }
                        },
                        Err(e) => {
                            trace.failed = true;
                            trace.entries.push(TraceEntry::StepFailed {
                                what: format!("achieveGoal {goal}"),
                                error: e.to_string(),
                            });
                        }
                    }
                }
            }
            self.poll_handlers(handlers, trace, depth);
        }
    }

    /// Drains every armed channel; each drained record re-runs its
    /// handler body once.
    fn poll_handlers(
        &mut self,
        handlers: &mut Vec<ArmedHandler>,
        trace: &mut Trace,
        depth: usize,
    ) {
        let mut index = 0;
        while index < handlers.len() {
            let (artifact, event, steps) = {
                let h = &handlers[index];
                (h.artifact.clone(), h.event.clone(), h.steps.clone())
            };
            let records = self
                .registry
                .poll_events(&artifact, &event, &self.bindings)
                .unwrap_or_default();
            for _record in records {
                trace.entries.push(TraceEntry::EventHandled {
                    artifact: artifact.clone(),
                    event: event.clone(),
                });
                self.run_steps(&steps, handlers, trace, depth + 1);
            }
            index += 1;
        }
    }

    /// Resolves a goal reference: manifest entries first, then absolute
    /// or script-relative URLs, then plain files.
    fn load_goal(&self, reference: &str) -> Result<Graph, ScenarioError> {
        let text = if let Some(path) = self.manifest.as_ref().and_then(|m| m.resolve(reference)) {
            std::fs::read_to_string(path).map_err(|e| ScenarioError::Document {
                origin: reference.to_string(),
                message: e.to_string(),
            })?
        } else if reference.starts_with("http://") || reference.starts_with("https://") {
            self.fetch_document(&DocumentSource::iri(reference))?
        } else if reference.starts_with('/') {
            let origin = self.script_origin.as_ref().ok_or_else(|| ScenarioError::Document {
                origin: reference.to_string(),
                message: "relative goal reference outside a fetched script".into(),
            })?;
            let base = origin
                .split_once("://")
                .and_then(|(scheme, rest)| {
                    rest.split_once('/').map(|(authority, _)| format!("{scheme}://{authority}"))
                })
                .unwrap_or_else(|| origin.clone());
            self.fetch_document(&DocumentSource::iri(format!("{base}{reference}")))?
        } else {
            std::fs::read_to_string(reference).map_err(|e| ScenarioError::Document {
                origin: reference.to_string(),
                message: e.to_string(),
            })?
        };
        let (graph, _) = parse_turtle(&text).map_err(|e| ScenarioError::Document {
            origin: reference.to_string(),
            message: e.to_string(),
        })?;
        Ok(graph)
    }

    fn fetch_document(&self, source: &DocumentSource) -> Result<String, ScenarioError> {
        let options = FetchOptions {
            timeout: None,
            authority_override: self.server.as_ref().map(|s| s.addr()),
        };
        Ok(fetch_with(source, &options)?)
    }
}

/// Snapshot of all device states, keyed by device id, for comparing
/// worlds across runs.
pub fn world_snapshot(session: &Session) -> BTreeMap<String, BTreeMap<String, DataValue>> {
    session.world.lock().expect("world lock").snapshot()
}
