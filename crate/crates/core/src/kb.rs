//! The usage knowledge base: operation usages with pre/postcondition
//! context graphs, the building topology, grounding of condition blanks
//! to artifact instances, and the structural axioms every usage must
//! satisfy.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::artifact::Registry;
use crate::predicates::PredicateTable;
use crate::rdf::{union, Graph, Term, Triple};
use crate::td::{parse_td, InteractionKind};
use crate::turtle::parse_turtle;

/// Namespace constants of the corpus vocabularies.
pub mod ns {
    pub const USG: &str = "http://www.emse.fr/ci/ontologies/2018/wot_usage#";
    pub const IOT: &str = "http://iotschema.org/";
    pub const BOT: &str = "http://www.w3id.org/bot#";
    pub const TOOLS: &str = "http://localhost/tools/";
    pub const SH: &str = "http://localhost/smart_home#";
    pub const RDF_TYPE_IRI: &str = crate::turtle::RDF_TYPE;
    pub const REFERENCED_BY: &str = "http://localhost/tools/referencedBy";
    pub const SKOLEM: &str = "urn:skolem:";

    pub fn usg(local: &str) -> String {
        format!("{USG}{local}")
    }

    pub fn iot(local: &str) -> String {
        format!("{IOT}{local}")
    }

    pub fn bot(local: &str) -> String {
        format!("{BOT}{local}")
    }

    pub fn tools(local: &str) -> String {
        format!("{TOOLS}{local}")
    }
}

#[derive(Debug, Error)]
pub enum KbError {
    #[error("usage `{usage}` violates the `{axiom}` axiom: {detail}")]
    Validation { axiom: &'static str, usage: String, detail: String },
    #[error("cannot resolve context `{iri}`: {cause}")]
    UnresolvedContext { iri: String, cause: String },
    #[error("instance `{instance}` is not a `{artifact_type}` (types: {types:?})")]
    TypeMismatch { instance: String, artifact_type: String, types: Vec<String> },
    #[error("manifest `{path}`: {message}")]
    Manifest { path: String, message: String },
    #[error("topology: {0}")]
    Topology(String),
    #[error("{0}")]
    Document(String),
}

/// A context graph resolved from its IRI. `tools:referencedBy` triples
/// are grounding metadata, not conditions: they are stripped from the
/// graph and kept as a blank-label to reference-target map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContextRef {
    pub iri: String,
    pub graph: Graph,
    pub refs: BTreeMap<String, String>,
}

impl ContextRef {
    pub fn from_graph(iri: &str, raw: Graph) -> ContextRef {
        let (graph, refs) = split_references(&raw);
        ContextRef { iri: iri.to_string(), graph, refs }
    }
}

/// Splits `(blank, tools:referencedBy, IRI)` metadata out of a graph.
pub fn split_references(raw: &Graph) -> (Graph, BTreeMap<String, String>) {
    let mut graph = Graph::new();
    let mut refs = BTreeMap::new();
    for triple in raw.iter() {
        let is_ref = triple.predicate.as_iri() == Some(ns::REFERENCED_BY);
        match (&triple.subject, is_ref, &triple.object) {
            (Term::Blank(label), true, Term::Iri(target)) => {
                refs.insert(label.clone(), target.clone());
            }
            (_, true, _) => {}
            _ => {
                graph.insert(triple.clone()).expect("source graph had no variables");
            }
        }
    }
    (graph, refs)
}

/// One declared operation usage of an artifact type, with its resolved
/// condition graphs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UsageDecl {
    /// Node id as written: `_:label` for blank usages, the IRI otherwise.
    pub id: String,
    pub artifact_node: Term,
    pub artifact_type: String,
    pub operation_node: Term,
    pub operation_type: String,
    pub precond: Option<ContextRef>,
    pub postcond: ContextRef,
    /// Blank-label to reference-target map of the usage document itself.
    pub usage_refs: BTreeMap<String, String>,
}

impl UsageDecl {
    /// Reference target shared by the usage's forArtifact blank, when
    /// declared: the marker that self-restricted statuses carry.
    pub fn self_target(&self) -> Option<&str> {
        match &self.artifact_node {
            Term::Blank(label) => self.usage_refs.get(label).map(String::as_str),
            _ => None,
        }
    }

    /// Is a postcondition status with this blank subject restricted to
    /// the invoked instance itself?
    pub fn is_self_label(&self, label: &str) -> bool {
        match self.self_target() {
            Some(target) => self.postcond.refs.get(label).map(String::as_str) == Some(target),
            None => false,
        }
    }

    /// Grounds both condition graphs to an instance: blanks sharing the
    /// forArtifact reference target become the instance IRI, blanks with
    /// targets shared across both condition graphs become one stable
    /// skolem IRI per target, and unreferenced blanks stay blank.
    pub fn ground(
        &self,
        instance: &str,
        instance_types: &BTreeSet<String>,
    ) -> Result<(Graph, Graph), KbError> {
        if !instance_types.contains(&self.artifact_type) {
            return Err(KbError::TypeMismatch {
                instance: instance.to_string(),
                artifact_type: self.artifact_type.clone(),
                types: instance_types.iter().cloned().collect(),
            });
        }
        let empty = ContextRef {
            iri: String::new(),
            graph: Graph::new(),
            refs: BTreeMap::new(),
        };
        let pre = self.precond.as_ref().unwrap_or(&empty);
        let self_target = self.self_target();
        let pre_targets: BTreeSet<&String> = pre.refs.values().collect();
        let post_targets: BTreeSet<&String> = self.postcond.refs.values().collect();

        let ground_one = |ctx: &ContextRef| -> Graph {
            ctx.graph.map_blanks(|label| {
                let Some(target) = ctx.refs.get(label) else {
                    return Term::blank(label);
                };
                if Some(target.as_str()) == self_target {
                    return Term::iri_unchecked(instance);
                }
                if pre_targets.contains(target) && post_targets.contains(target) {
                    return Term::iri_unchecked(skolem_iri(&self.id, target));
                }
                Term::blank(label)
            })
        };
        Ok((ground_one(pre), ground_one(&self.postcond)))
    }
}

/// Deterministic skolem IRI for a (usage, reference target) pair.
pub fn skolem_iri(usage_id: &str, target: &str) -> String {
    format!("{}{}:{}", ns::SKOLEM, encode(usage_id), encode(target))
}

fn encode(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for byte in raw.bytes() {
        match byte {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'.' | b'_' | b'~' | b'-' => {
                out.push(byte as char)
            }
            other => out.push_str(&format!("%{other:02X}")),
        }
    }
    out
}

/// Resolves a context IRI to its document graph.
pub trait ContextResolver {
    fn resolve_graph(&self, iri: &str) -> Result<Graph, KbError>;
}

/// In-memory resolver for tests and programmatic KBs.
#[derive(Clone, Debug, Default)]
pub struct InMemoryResolver {
    pub graphs: BTreeMap<String, Graph>,
}

impl ContextResolver for InMemoryResolver {
    fn resolve_graph(&self, iri: &str) -> Result<Graph, KbError> {
        self.graphs.get(iri).cloned().ok_or_else(|| KbError::UnresolvedContext {
            iri: iri.to_string(),
            cause: "not in resolver".into(),
        })
    }
}

/// IRI to file mapping: one `iri<whitespace>path` entry per line, paths
/// relative to the manifest file.
#[derive(Clone, Debug, Default)]
pub struct Manifest {
    pub entries: BTreeMap<String, PathBuf>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest, KbError> {
        let text = std::fs::read_to_string(path).map_err(|e| KbError::Manifest {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let mut entries = BTreeMap::new();
        for (number, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((iri, rel)) = line.split_once(char::is_whitespace) else {
                return Err(KbError::Manifest {
                    path: path.display().to_string(),
                    message: format!("line {}: expected `iri path`", number + 1),
                });
            };
            entries.insert(iri.trim().to_string(), dir.join(rel.trim()));
        }
        Ok(Manifest { entries })
    }

    pub fn resolve(&self, iri: &str) -> Option<&PathBuf> {
        self.entries.get(iri)
    }
}

impl ContextResolver for Manifest {
    fn resolve_graph(&self, iri: &str) -> Result<Graph, KbError> {
        let path = self.resolve(iri).ok_or_else(|| KbError::UnresolvedContext {
            iri: iri.to_string(),
            cause: "no manifest entry".into(),
        })?;
        let text = std::fs::read_to_string(path).map_err(|e| KbError::UnresolvedContext {
            iri: iri.to_string(),
            cause: e.to_string(),
        })?;
        let (graph, _) = parse_turtle(&text).map_err(|e| KbError::UnresolvedContext {
            iri: iri.to_string(),
            cause: e.to_string(),
        })?;
        Ok(graph)
    }
}

fn objects_of<'g>(graph: &'g Graph, subject: &Term, predicate: &str) -> Vec<&'g Term> {
    graph
        .iter()
        .filter(|t| &t.subject == subject && t.predicate.as_iri() == Some(predicate))
        .map(|t| &t.object)
        .collect()
}

fn node_id(term: &Term) -> String {
    match term {
        Term::Blank(label) => format!("_:{label}"),
        Term::Iri(iri) => iri.clone(),
        other => other.to_string(),
    }
}

/// Extracts every `usg:Usage` node with its links, resolving condition
/// IRIs through the resolver and enforcing the structural axioms:
/// mandatory postcond/forArtifact/forOperation links, the
/// artifact-hasOperation-operation link, typed artifact and operation
/// nodes (range constraints), and non-empty contexts.
pub fn load_usages(
    graph: &Graph,
    resolver: &dyn ContextResolver,
) -> Result<Vec<UsageDecl>, KbError> {
    let rdf_type = Term::iri_unchecked(ns::RDF_TYPE_IRI);
    let usage_type = Term::iri_unchecked(ns::usg("Usage"));

    let usage_nodes: Vec<Term> = graph
        .iter()
        .filter(|t| t.predicate == rdf_type && t.object == usage_type)
        .map(|t| t.subject.clone())
        .collect();

    // Domain axioms: anything carrying a usage link must be a usage.
    for triple in graph.iter() {
        if let Some(p) = triple.predicate.as_iri() {
            let is_usage_link = [
                ns::usg("forArtifact"),
                ns::usg("forOperation"),
                ns::usg("hasPrecond"),
                ns::usg("hasPostcond"),
            ]
            .contains(&p.to_string());
            if is_usage_link && !usage_nodes.contains(&triple.subject) {
                return Err(KbError::Validation {
                    axiom: "domain",
                    usage: node_id(&triple.subject),
                    detail: format!("subject of {p} is not typed usg:Usage"),
                });
            }
        }
    }

    let (_, usage_refs) = split_references(graph);

    let mut usages = Vec::new();
    for node in usage_nodes {
        let id = node_id(&node);
        let one = |predicate: &str, axiom: &'static str| -> Result<Term, KbError> {
            let objects = objects_of(graph, &node, &ns::usg(predicate));
            objects.first().copied().cloned().ok_or_else(|| KbError::Validation {
                axiom,
                usage: id.clone(),
                detail: format!("missing usg:{predicate}"),
            })
        };

        let artifact_node = one("forArtifact", "forArtifact")?;
        let operation_node = one("forOperation", "forOperation")?;
        let post_node = one("hasPostcond", "postcond")?;

        let typed = |target: &Term, axiom: &'static str| -> Result<String, KbError> {
            objects_of(graph, target, ns::RDF_TYPE_IRI)
                .into_iter()
                .filter_map(Term::as_iri)
                .find(|iri| !iri.starts_with(ns::USG))
                .map(str::to_string)
                .ok_or_else(|| KbError::Validation {
                    axiom,
                    usage: id.clone(),
                    detail: format!("{} has no type", node_id(target)),
                })
        };
        let artifact_type = typed(&artifact_node, "forArtifact range")?;
        let operation_type = typed(&operation_node, "forOperation range")?;

        let has_operation = Triple::new(
            artifact_node.clone(),
            Term::iri_unchecked(ns::usg("hasOperation")),
            operation_node.clone(),
        )
        .expect("usage nodes are non-literal");
        if !graph.contains(&has_operation) {
            return Err(KbError::Validation {
                axiom: "hasOperation",
                usage: id.clone(),
                detail: format!(
                    "{} does not usg:hasOperation {}",
                    node_id(&artifact_node),
                    node_id(&operation_node)
                ),
            });
        }

        let resolve_ctx = |node: &Term, axiom: &'static str| -> Result<ContextRef, KbError> {
            let iri = node.as_iri().ok_or_else(|| KbError::Validation {
                axiom,
                usage: id.clone(),
                detail: "condition reference must be an IRI".into(),
            })?;
            let raw = resolver.resolve_graph(iri)?;
            let ctx = ContextRef::from_graph(iri, raw);
            if ctx.graph.is_empty() {
                return Err(KbError::Validation {
                    axiom: "hasProperty",
                    usage: id.clone(),
                    detail: format!("context {iri} has no status statements"),
                });
            }
            Ok(ctx)
        };

        let postcond = resolve_ctx(&post_node, "postcond range")?;
        let precond = match objects_of(graph, &node, &ns::usg("hasPrecond")).first() {
            Some(pre) => Some(resolve_ctx(pre, "precond range")?),
            None => None,
        };

        usages.push(UsageDecl {
            id,
            artifact_node,
            artifact_type,
            operation_node,
            operation_type,
            precond,
            postcond,
            usage_refs: usage_refs.clone(),
        });
    }
    usages.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(usages)
}

/// Building topology: zones, zone containment, and the TD IRIs of the
/// devices each zone holds.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Topology {
    pub graph: Graph,
}

impl Topology {
    pub fn empty() -> Topology {
        Topology::default()
    }

    /// Validates that `bot:hasElement` objects are IRIs and that zone
    /// containment has no cycle.
    pub fn from_graph(graph: Graph) -> Result<Topology, KbError> {
        let mut edges: BTreeMap<&Term, Vec<&Term>> = BTreeMap::new();
        for triple in graph.iter() {
            match triple.predicate.as_iri() {
                Some(p) if p == ns::bot("hasElement") => {
                    if triple.object.as_iri().is_none() {
                        return Err(KbError::Topology(format!(
                            "element `{}` is not a TD IRI",
                            triple.object
                        )));
                    }
                }
                Some(p) if p == ns::bot("containsZone") => {
                    edges.entry(&triple.subject).or_default().push(&triple.object);
                }
                _ => {}
            }
        }
        // Cycle check over containment.
        for start in edges.keys() {
            let mut stack = vec![(*start, vec![*start])];
            while let Some((node, path)) = stack.pop() {
                for next in edges.get(node).into_iter().flatten() {
                    if path.contains(next) {
                        return Err(KbError::Topology(format!(
                            "containsZone cycle through {next}"
                        )));
                    }
                    let mut path = path.clone();
                    path.push(next);
                    stack.push((next, path));
                }
            }
        }
        Ok(Topology { graph })
    }

    pub fn elements(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .graph
            .iter()
            .filter(|t| t.predicate.as_iri() == Some(ns::bot("hasElement").as_str()))
            .filter_map(|t| t.object.as_iri().map(str::to_string))
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn zones(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .graph
            .iter()
            .filter(|t| {
                t.predicate.as_iri() == Some(ns::RDF_TYPE_IRI)
                    && t.object.as_iri() == Some(ns::bot("Zone").as_str())
            })
            .filter_map(|t| t.subject.as_iri().map(str::to_string))
            .collect();
        out.sort();
        out.dedup();
        out
    }
}

/// What the planner knows about one artifact instance.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InstanceInfo {
    pub types: BTreeSet<String>,
    pub artifact_name: Option<String>,
    /// Operation semantic type IRI to action name.
    pub actions_by_type: BTreeMap<String, String>,
}

/// Instance IRI to type/operation information, built from a live
/// registry, from manifest-resolved TD documents, or both.
#[derive(Clone, Debug, Default)]
pub struct InstanceDirectory {
    map: BTreeMap<String, InstanceInfo>,
}

impl InstanceDirectory {
    pub fn new() -> InstanceDirectory {
        InstanceDirectory::default()
    }

    pub fn insert(&mut self, iri: impl Into<String>, info: InstanceInfo) {
        self.map.insert(iri.into(), info);
    }

    pub fn info(&self, iri: &str) -> Option<&InstanceInfo> {
        self.map.get(iri)
    }

    pub fn add_registry(&mut self, registry: &Registry) {
        for instance in registry.iter() {
            let mut actions_by_type = BTreeMap::new();
            for op in instance.operations.values() {
                for semantic in &op.interaction.semantic_types {
                    actions_by_type
                        .entry(semantic.clone())
                        .or_insert_with(|| op.interaction.name.clone());
                }
            }
            self.map.insert(
                instance.source_iri.clone(),
                InstanceInfo {
                    types: instance.type_iris.clone(),
                    artifact_name: Some(instance.name.clone()),
                    actions_by_type,
                },
            );
        }
    }

    /// Registers every manifest entry that parses as a TD document.
    pub fn add_manifest_tds(&mut self, manifest: &Manifest) {
        for (iri, path) in &manifest.entries {
            let name = path.to_string_lossy();
            if !(name.ends_with(".json") || name.ends_with(".jsonld")) {
                continue;
            }
            let Ok(text) = std::fs::read_to_string(path) else { continue };
            let Ok(td) = parse_td(&text) else { continue };
            let mut actions_by_type = BTreeMap::new();
            for action in td.of_kind(InteractionKind::Action) {
                for semantic in &action.semantic_types {
                    actions_by_type
                        .entry(semantic.clone())
                        .or_insert_with(|| action.name.clone());
                }
            }
            self.map.insert(
                iri.clone(),
                InstanceInfo {
                    types: td.types.clone(),
                    artifact_name: Some(td.name.clone()),
                    actions_by_type,
                },
            );
        }
    }

    /// TD IRIs of topology elements whose artifact carries
    /// `artifact_type`, in lexicographic order.
    pub fn instances_of(&self, topology: &Topology, artifact_type: &str) -> Vec<String> {
        topology
            .elements()
            .into_iter()
            .filter(|iri| {
                self.map
                    .get(iri)
                    .is_some_and(|info| info.types.contains(artifact_type))
            })
            .collect()
    }
}

/// The environment context at this moment: everything the registry's
/// observable properties project, plus topology, plus operator-supplied
/// ambient graphs.
pub fn current_context(
    registry: &Registry,
    table: &PredicateTable,
    topology: &Topology,
    extras: &[Graph],
) -> Graph {
    let (exported, _) = registry.export_context(table);
    let mut context = union(&exported, &topology.graph);
    for extra in extras {
        context = union(&context, extra);
    }
    context
}
