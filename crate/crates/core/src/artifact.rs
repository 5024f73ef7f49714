//! The generic artifact runtime.
//!
//! Any valid Thing Description instantiates into a uniform runtime
//! entity: observable properties with cached values, an operation map
//! keyed by action name, and event channels. Instances live in a
//! registry that supports atomic runtime replacement, so a device can be
//! swapped for one with a different API or protocol while every consumer
//! keeps using the same names.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::binding::{
    dispatch, dispatch_raw, resolve, resolve_verb, BindingError, BindingRegistry, InvokeOutcome,
    ResolvedRequest, Verb,
};
use crate::predicates::PredicateTable;
use crate::rdf::{Graph, Term, Triple};
use crate::td::{
    conforms_to, validate, DataSchema, DataValue, Diagnostic, Interaction, InteractionKind,
    Severity, ThingDescription,
};

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("unknown artifact `{0}`")]
    UnknownArtifact(String),
    #[error("artifact `{artifact}` has no operation `{operation}` (available: {})", available.join(", "))]
    UnknownOperation { artifact: String, operation: String, available: Vec<String> },
    #[error("artifact `{artifact}` has no property `{property}`")]
    UnknownProperty { artifact: String, property: String },
    #[error("artifact `{artifact}` has no event `{event}`")]
    UnknownEvent { artifact: String, event: String },
    #[error("value does not conform to the {slot} schema of `{interaction}`")]
    SchemaMismatch { interaction: String, slot: &'static str },
    #[error("property `{property}` of `{artifact}` is not readable")]
    NotReadable { artifact: String, property: String },
    #[error("property `{property}` of `{artifact}` is not writable")]
    NotWritable { artifact: String, property: String },
    #[error("no protocol binding registered for scheme `{0}`")]
    NoBinding(String),
    #[error("replacement TD is named `{actual}`, expected `{expected}`")]
    NameMismatch { expected: String, actual: String },
    #[error("thing description is invalid: {0:?}")]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Binding(#[from] BindingError),
}

/// One emitted event as drained from a channel.
#[derive(Clone, Debug, PartialEq)]
pub struct EventRecord {
    pub event: String,
    pub payload: Option<DataValue>,
    pub time: u64,
}

#[derive(Clone, Debug)]
pub struct PropertyState {
    pub interaction: Interaction,
    pub value: Option<DataValue>,
    /// Set when the last transport read failed; stale values are
    /// omitted from context exports.
    pub stale: bool,
}

#[derive(Clone, Debug)]
pub struct OperationHandle {
    pub interaction: Interaction,
}

#[derive(Clone, Debug)]
pub struct EventChannel {
    pub interaction: Interaction,
}

/// Runtime projection of one Thing Description.
#[derive(Clone, Debug)]
pub struct ArtifactInstance {
    pub name: String,
    pub type_iris: BTreeSet<String>,
    pub source_iri: String,
    pub td: ThingDescription,
    pub properties: BTreeMap<String, PropertyState>,
    pub operations: BTreeMap<String, OperationHandle>,
    pub events: BTreeMap<String, EventChannel>,
}

impl ArtifactInstance {
    pub fn operation_names(&self) -> Vec<String> {
        self.operations.keys().cloned().collect()
    }

    /// Finds the action whose semantic types include `operation_type`.
    pub fn operation_by_type(&self, operation_type: &str) -> Option<&str> {
        self.operations
            .values()
            .find(|op| op.interaction.semantic_types.contains(operation_type))
            .map(|op| op.interaction.name.as_str())
    }
}

/// An invocation resolved against a specific artifact generation. The
/// transport call happens in [`PreparedCall::run`], decoupled from the
/// registry, so an in-flight call keeps addressing the device it was
/// prepared for even if the artifact is replaced in between.
#[derive(Clone, Debug)]
pub struct PreparedCall {
    pub artifact: String,
    pub operation: String,
    pub generation: u64,
    pub request: ResolvedRequest,
    output_schema: Option<DataSchema>,
}

impl PreparedCall {
    pub fn run(&self, bindings: &BindingRegistry) -> Result<InvokeOutcome, BindingError> {
        dispatch(bindings, &self.request, self.output_schema.as_ref())
    }
}

#[derive(Debug)]
struct Entry {
    instance: ArtifactInstance,
    generation: u64,
}

/// Named artifact instances with per-name generation counters.
#[derive(Debug, Default)]
pub struct Registry {
    entries: BTreeMap<String, Entry>,
}

/// Outcome of an instantiation: the warnings list records initial reads
/// that failed (the property is created anyway, marked stale).
#[derive(Debug)]
pub struct IngestReport {
    pub artifact: String,
    pub generation: u64,
    pub warnings: Vec<String>,
}

impl Registry {
    pub fn new() -> Registry {
        Registry::default()
    }

    pub fn get(&self, name: &str) -> Option<&ArtifactInstance> {
        self.entries.get(name).map(|e| &e.instance)
    }

    pub fn generation(&self, name: &str) -> Option<u64> {
        self.entries.get(name).map(|e| e.generation)
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ArtifactInstance> {
        self.entries.values().map(|e| &e.instance)
    }

    pub fn find_by_source_iri(&self, iri: &str) -> Option<&ArtifactInstance> {
        self.iter().find(|a| a.source_iri == iri)
    }

    /// Projects a TD into the registry under its td:name, bumping the
    /// generation when the name already exists.
    pub fn ingest(
        &mut self,
        td: ThingDescription,
        source_iri: &str,
        bindings: &BindingRegistry,
    ) -> Result<IngestReport, ArtifactError> {
        let (instance, warnings) = instantiate(td, source_iri, bindings)?;
        let name = instance.name.clone();
        let generation = match self.entries.get(&name) {
            Some(e) => e.generation + 1,
            None => 1,
        };
        self.entries.insert(name.clone(), Entry { instance, generation });
        Ok(IngestReport { artifact: name, generation, warnings })
    }

    /// Atomically swaps the instance behind `name` for one built from
    /// `new_td`. Renames are rejected; a rename is a remove plus add.
    pub fn replace(
        &mut self,
        name: &str,
        new_td: ThingDescription,
        source_iri: &str,
        bindings: &BindingRegistry,
    ) -> Result<IngestReport, ArtifactError> {
        if !self.entries.contains_key(name) {
            return Err(ArtifactError::UnknownArtifact(name.to_string()));
        }
        if new_td.name != name {
            return Err(ArtifactError::NameMismatch {
                expected: name.to_string(),
                actual: new_td.name,
            });
        }
        self.ingest(new_td, source_iri, bindings)
    }

    /// Resolves an invocation without performing it.
    pub fn prepare_act(
        &self,
        artifact: &str,
        operation: &str,
        input: Option<&DataValue>,
    ) -> Result<PreparedCall, ArtifactError> {
        let entry = self
            .entries
            .get(artifact)
            .ok_or_else(|| ArtifactError::UnknownArtifact(artifact.to_string()))?;
        let handle = entry.instance.operations.get(operation).ok_or_else(|| {
            ArtifactError::UnknownOperation {
                artifact: artifact.to_string(),
                operation: operation.to_string(),
                available: entry.instance.operation_names(),
            }
        })?;
        if let (Some(schema), Some(value)) = (&handle.interaction.input_schema, input) {
            if !conforms_to(value, schema) {
                return Err(ArtifactError::SchemaMismatch {
                    interaction: operation.to_string(),
                    slot: "input",
                });
            }
        }
        let request = resolve(&entry.instance.td.base_iri, &handle.interaction, input)?;
        Ok(PreparedCall {
            artifact: artifact.to_string(),
            operation: operation.to_string(),
            generation: entry.generation,
            request,
            output_schema: handle.interaction.output_schema.clone(),
        })
    }

    /// Uniform operation trigger: delegates to the binding named by the
    /// action's form and returns the parsed output or an acknowledgment.
    /// Never mutates cached property state.
    pub fn act(
        &self,
        artifact: &str,
        operation: &str,
        input: Option<&DataValue>,
        bindings: &BindingRegistry,
    ) -> Result<InvokeOutcome, ArtifactError> {
        let call = self.prepare_act(artifact, operation, input)?;
        Ok(call.run(bindings)?)
    }

    /// Fresh read of an observable property; updates the cached value.
    pub fn read_property(
        &mut self,
        artifact: &str,
        property: &str,
        bindings: &BindingRegistry,
    ) -> Result<DataValue, ArtifactError> {
        let entry = self
            .entries
            .get_mut(artifact)
            .ok_or_else(|| ArtifactError::UnknownArtifact(artifact.to_string()))?;
        let base = entry.instance.td.base_iri.clone();
        let state = entry.instance.properties.get_mut(property).ok_or_else(|| {
            ArtifactError::UnknownProperty {
                artifact: artifact.to_string(),
                property: property.to_string(),
            }
        })?;
        if !state.interaction.observable {
            return Err(ArtifactError::NotReadable {
                artifact: artifact.to_string(),
                property: property.to_string(),
            });
        }
        let request = resolve_verb(&base, &state.interaction, Some(Verb::Read), None)?;
        match dispatch(bindings, &request, state.interaction.value_schema()) {
            Ok(InvokeOutcome::Value(value)) => {
                state.value = Some(value.clone());
                state.stale = false;
                Ok(value)
            }
            Ok(InvokeOutcome::Ack) => Err(ArtifactError::SchemaMismatch {
                interaction: property.to_string(),
                slot: "output",
            }),
            Err(e) => {
                state.stale = true;
                Err(e.into())
            }
        }
    }

    /// Write path for writable properties.
    pub fn write_property(
        &mut self,
        artifact: &str,
        property: &str,
        value: &DataValue,
        bindings: &BindingRegistry,
    ) -> Result<(), ArtifactError> {
        let entry = self
            .entries
            .get_mut(artifact)
            .ok_or_else(|| ArtifactError::UnknownArtifact(artifact.to_string()))?;
        let base = entry.instance.td.base_iri.clone();
        let state = entry.instance.properties.get_mut(property).ok_or_else(|| {
            ArtifactError::UnknownProperty {
                artifact: artifact.to_string(),
                property: property.to_string(),
            }
        })?;
        if !state.interaction.writable {
            return Err(ArtifactError::NotWritable {
                artifact: artifact.to_string(),
                property: property.to_string(),
            });
        }
        if let Some(schema) = state.interaction.value_schema() {
            if !conforms_to(value, schema) {
                return Err(ArtifactError::SchemaMismatch {
                    interaction: property.to_string(),
                    slot: "value",
                });
            }
        }
        let mut request = resolve_verb(&base, &state.interaction, Some(Verb::Write), None)?;
        request.payload = Some(value.canonical_json().into_bytes());
        dispatch(bindings, &request, None)?;
        Ok(())
    }

    /// Drains an event channel, returning records in emission order.
    pub fn poll_events(
        &self,
        artifact: &str,
        event: &str,
        bindings: &BindingRegistry,
    ) -> Result<Vec<EventRecord>, ArtifactError> {
        let entry = self
            .entries
            .get(artifact)
            .ok_or_else(|| ArtifactError::UnknownArtifact(artifact.to_string()))?;
        let channel = entry.instance.events.get(event).ok_or_else(|| {
            ArtifactError::UnknownEvent {
                artifact: artifact.to_string(),
                event: event.to_string(),
            }
        })?;
        let request = resolve_verb(
            &entry.instance.td.base_iri,
            &channel.interaction,
            Some(Verb::Read),
            None,
        )?;
        let payload = dispatch_raw(bindings, &request)?;
        let parsed: serde_json::Value = serde_json::from_slice(&payload)
            .map_err(|e| BindingError::ResponseSchemaMismatch(e.to_string()))?;
        let records = parsed
            .as_array()
            .map(|items| {
                items
                    .iter()
                    .map(|item| EventRecord {
                        event: item["event"].as_str().unwrap_or(event).to_string(),
                        payload: DataValue::from_json(&item["payload"]),
                        time: item["time"].as_u64().unwrap_or_default(),
                    })
                    .collect()
            })
            .unwrap_or_default();
        Ok(records)
    }

    /// One triple per readable observable property with a mapped
    /// predicate: `(source IRI, predicate, rendered literal)`. Stale or
    /// unmapped properties are skipped and reported as warnings.
    pub fn export_context(&self, table: &PredicateTable) -> (Graph, Vec<String>) {
        let mut graph = Graph::new();
        let mut warnings = Vec::new();
        for instance in self.iter() {
            for (name, state) in &instance.properties {
                if !state.interaction.observable {
                    continue;
                }
                let Some(mapping) = table.mapping_for(&state.interaction.semantic_types) else {
                    warnings.push(format!(
                        "{}/{name}: no predicate mapping for {:?}",
                        instance.name, state.interaction.semantic_types
                    ));
                    continue;
                };
                let value = match (&state.value, state.stale) {
                    (Some(v), false) => v,
                    _ => {
                        warnings.push(format!("{}/{name}: stale or unread, omitted", instance.name));
                        continue;
                    }
                };
                let triple = Triple::new(
                    Term::iri_unchecked(instance.source_iri.clone()),
                    Term::iri_unchecked(mapping.predicate.clone()),
                    table.render(mapping, value),
                )
                .expect("context terms are non-literal in subject/predicate");
                graph.insert(triple).expect("context has no variables");
            }
        }
        (graph, warnings)
    }
}

/// Builds the three interaction maps from a TD and performs the initial
/// property reads. The instance is created even when reads fail; those
/// properties start stale and the failures come back as warnings.
pub fn instantiate(
    td: ThingDescription,
    source_iri: &str,
    bindings: &BindingRegistry,
) -> Result<(ArtifactInstance, Vec<String>), ArtifactError> {
    let errors: Vec<Diagnostic> = validate(&td)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .collect();
    if !errors.is_empty() {
        return Err(ArtifactError::Invalid(errors));
    }
    let scheme = td
        .base_scheme()
        .ok_or_else(|| ArtifactError::Invalid(vec![Diagnostic {
            severity: Severity::Error,
            path: "td:base".into(),
            message: "no scheme".into(),
        }]))?;
    if bindings.lookup(scheme).is_none() {
        return Err(ArtifactError::NoBinding(scheme.to_string()));
    }

    let mut properties = BTreeMap::new();
    let mut operations = BTreeMap::new();
    let mut events = BTreeMap::new();
    let mut warnings = Vec::new();

    for interaction in &td.interactions {
        match interaction.kind {
            InteractionKind::Property => {
                let mut state = PropertyState {
                    interaction: interaction.clone(),
                    value: None,
                    stale: false,
                };
                if interaction.observable {
                    let read = resolve_verb(&td.base_iri, interaction, Some(Verb::Read), None)
                        .map_err(ArtifactError::from)
                        .and_then(|req| {
                            dispatch(bindings, &req, interaction.value_schema())
                                .map_err(ArtifactError::from)
                        });
                    match read {
                        Ok(InvokeOutcome::Value(value)) => state.value = Some(value),
                        Ok(InvokeOutcome::Ack) => {
                            state.stale = true;
                            warnings.push(format!(
                                "initial read of `{}` returned no value",
                                interaction.name
                            ));
                        }
                        Err(e) => {
                            state.stale = true;
                            warnings.push(format!(
                                "initial read of `{}` failed: {e}",
                                interaction.name
                            ));
                        }
                    }
                }
                properties.insert(interaction.name.clone(), state);
            }
            InteractionKind::Action => {
                operations.insert(
                    interaction.name.clone(),
                    OperationHandle { interaction: interaction.clone() },
                );
            }
            InteractionKind::Event => {
                events.insert(
                    interaction.name.clone(),
                    EventChannel { interaction: interaction.clone() },
                );
            }
        }
    }

    let instance = ArtifactInstance {
        name: td.name.clone(),
        type_iris: td.types.clone(),
        source_iri: source_iri.to_string(),
        td,
        properties,
        operations,
        events,
    };
    Ok((instance, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binding::SimBinding;
    use crate::sim::{load_world, SharedWorld};
    use crate::td::parse_td;
    use std::path::PathBuf;
    use std::sync::Arc;

    const OLD_LAMP: &str = include_str!("../../../fixtures/td/old_lamp.jsonld");
    const NEW_LAMP: &str = include_str!("../../../fixtures/td/new_lamp.jsonld");

    fn fixture(rel: &str) -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
    }

    fn sos_setup() -> (SharedWorld, BindingRegistry) {
        let world = load_world(&fixture("worlds/sos.world")).unwrap().shared();
        let mut bindings = BindingRegistry::new();
        let sim = Arc::new(SimBinding::new(world.clone()));
        bindings.register("http", sim.clone());
        bindings.register("coap", sim);
        (world, bindings)
    }

    #[test]
    fn instantiation_builds_the_three_maps() {
        let (_world, bindings) = sos_setup();
        let td = parse_td(OLD_LAMP).unwrap();
        let (instance, warnings) = instantiate(td, "http://localhost/TD/lamp.jsonld", &bindings).unwrap();
        assert!(warnings.is_empty(), "{warnings:?}");
        assert_eq!(instance.name, "emergency_light");
        assert_eq!(instance.operation_names(), vec!["Switch Off", "Switch On"]);
        assert_eq!(
            instance.properties.keys().cloned().collect::<Vec<_>>(),
            vec!["Switch State"]
        );
        assert!(instance.events.is_empty());
        // Initial read captured the simulated device's state.
        assert_eq!(
            instance.properties["Switch State"].value,
            Some(DataValue::Bool(false))
        );
    }

    #[test]
    fn missing_binding_scheme_is_an_error() {
        let td = parse_td(
            &OLD_LAMP.replace("http://localhost/TD", "mqtt://broker/TD"),
        )
        .unwrap();
        let bindings = BindingRegistry::new();
        match instantiate(td, "x", &bindings) {
            Err(ArtifactError::NoBinding(scheme)) => assert_eq!(scheme, "mqtt"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn act_round_trips_through_the_sim_world() {
        let (world, bindings) = sos_setup();
        let mut registry = Registry::new();
        let td = parse_td(OLD_LAMP).unwrap();
        registry.ingest(td, "http://localhost/TD/lamp.jsonld", &bindings).unwrap();

        let outcome = registry
            .act("emergency_light", "Switch On", Some(&DataValue::Bool(true)), &bindings)
            .unwrap();
        assert_eq!(outcome, InvokeOutcome::Ack);
        assert_eq!(
            world.lock().unwrap().device("emergency_light_old").unwrap().state["Switch State"],
            DataValue::Bool(true)
        );

        let read = registry
            .read_property("emergency_light", "Switch State", &bindings)
            .unwrap();
        assert_eq!(read, DataValue::Bool(true));
    }

    #[test]
    fn error_paths_name_what_is_missing() {
        let (_world, bindings) = sos_setup();
        let mut registry = Registry::new();
        let td = parse_td(OLD_LAMP).unwrap();
        registry.ingest(td, "iri", &bindings).unwrap();

        assert!(matches!(
            registry.act("lamp", "Switch On", None, &bindings),
            Err(ArtifactError::UnknownArtifact(_))
        ));
        match registry.act("emergency_light", "Blink", None, &bindings) {
            Err(ArtifactError::UnknownOperation { available, .. }) => {
                assert_eq!(available, vec!["Switch Off", "Switch On"]);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            registry.act(
                "emergency_light",
                "Switch On",
                Some(&DataValue::Text("yes".into())),
                &bindings
            ),
            Err(ArtifactError::SchemaMismatch { .. })
        ));
        assert!(matches!(
            registry.read_property("emergency_light", "Brightness", &bindings),
            Err(ArtifactError::UnknownProperty { .. })
        ));
    }

    #[test]
    fn replace_swaps_transport_but_keeps_the_interface() {
        let (world, bindings) = sos_setup();
        let mut registry = Registry::new();
        registry
            .ingest(parse_td(OLD_LAMP).unwrap(), "http://localhost/TD/lamp.jsonld", &bindings)
            .unwrap();
        assert_eq!(registry.generation("emergency_light"), Some(1));

        let report = registry
            .replace(
                "emergency_light",
                parse_td(NEW_LAMP).unwrap(),
                "coap://exampleHost/light.jsonld",
                &bindings,
            )
            .unwrap();
        assert_eq!(report.generation, 2);

        registry
            .act("emergency_light", "Switch On", Some(&DataValue::Bool(true)), &bindings)
            .unwrap();
        let world = world.lock().unwrap();
        // The invocation landed on the spare (coap) device, not the old one.
        assert_eq!(
            world.device("emergency_light_new").unwrap().state["Switch State"],
            DataValue::Bool(true)
        );
        assert_eq!(
            world.device("emergency_light_old").unwrap().state["Switch State"],
            DataValue::Bool(false)
        );
    }

    #[test]
    fn replace_rejects_renames_and_keeps_key_set() {
        let (_world, bindings) = sos_setup();
        let mut registry = Registry::new();
        registry.ingest(parse_td(OLD_LAMP).unwrap(), "iri", &bindings).unwrap();
        let renamed = parse_td(&NEW_LAMP.replace("emergency_light", "other_light")).unwrap();
        assert!(matches!(
            registry.replace("emergency_light", renamed, "iri2", &bindings),
            Err(ArtifactError::NameMismatch { .. })
        ));
        assert_eq!(registry.names(), vec!["emergency_light"]);
    }

    #[test]
    fn replacing_with_an_identical_td_only_bumps_the_generation() {
        let (world, bindings) = sos_setup();
        let mut registry = Registry::new();
        registry
            .ingest(parse_td(OLD_LAMP).unwrap(), "http://localhost/TD/lamp.jsonld", &bindings)
            .unwrap();
        let report = registry
            .replace(
                "emergency_light",
                parse_td(OLD_LAMP).unwrap(),
                "http://localhost/TD/lamp.jsonld",
                &bindings,
            )
            .unwrap();
        assert_eq!(report.generation, 2);
        registry
            .act("emergency_light", "Switch On", Some(&DataValue::Bool(true)), &bindings)
            .unwrap();
        assert_eq!(
            world.lock().unwrap().device("emergency_light_old").unwrap().state["Switch State"],
            DataValue::Bool(true)
        );
    }

    #[test]
    fn in_flight_call_prepared_before_replace_hits_the_old_device() {
        let (world, bindings) = sos_setup();
        let mut registry = Registry::new();
        registry
            .ingest(parse_td(OLD_LAMP).unwrap(), "http://localhost/TD/lamp.jsonld", &bindings)
            .unwrap();
        let call = registry
            .prepare_act("emergency_light", "Switch On", Some(&DataValue::Bool(true)))
            .unwrap();
        registry
            .replace(
                "emergency_light",
                parse_td(NEW_LAMP).unwrap(),
                "coap://exampleHost/light.jsonld",
                &bindings,
            )
            .unwrap();
        call.run(&bindings).unwrap();
        let world = world.lock().unwrap();
        assert_eq!(
            world.device("emergency_light_old").unwrap().state["Switch State"],
            DataValue::Bool(true)
        );
        assert_eq!(
            world.device("emergency_light_new").unwrap().state["Switch State"],
            DataValue::Bool(false)
        );
    }

    #[test]
    fn events_poll_and_drain_through_the_binding() {
        let (world, bindings) = sos_setup();
        let mut registry = Registry::new();
        let fire_td = std::fs::read_to_string(fixture("td/fire_detector.jsonld")).unwrap();
        registry
            .ingest(parse_td(&fire_td).unwrap(), "http://localhost/fire.jsonld", &bindings)
            .unwrap();

        world.lock().unwrap().emit("fire_detector", "fireEvent").unwrap();
        let records = registry
            .poll_events("fire_detector", "fireEvent", &bindings)
            .unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].event, "fireEvent");
        assert!(registry
            .poll_events("fire_detector", "fireEvent", &bindings)
            .unwrap()
            .is_empty());
        assert!(matches!(
            registry.poll_events("fire_detector", "smokeEvent", &bindings),
            Err(ArtifactError::UnknownEvent { .. })
        ));
    }

    #[test]
    fn export_context_reflects_device_state_changes() {
        let (_world, bindings) = sos_setup();
        let mut registry = Registry::new();
        registry
            .ingest(parse_td(OLD_LAMP).unwrap(), "http://localhost/TD/lamp.jsonld", &bindings)
            .unwrap();
        let table = PredicateTable::default();
        let (before, warnings) = registry.export_context(&table);
        assert!(warnings.is_empty(), "{warnings:?}");
        assert_eq!(before.len(), 1);
        let off = Triple::new(
            Term::iri_unchecked("http://localhost/TD/lamp.jsonld"),
            Term::iri_unchecked("http://iotschema.org/switchstatus"),
            Term::text("off"),
        )
        .unwrap();
        assert!(before.contains(&off));

        registry
            .act("emergency_light", "Switch On", Some(&DataValue::Bool(true)), &bindings)
            .unwrap();
        // act alone must not move the cached value...
        let (unchanged, _) = registry.export_context(&table);
        assert_eq!(unchanged, before);
        // ...a fresh read does.
        registry
            .read_property("emergency_light", "Switch State", &bindings)
            .unwrap();
        let (after, _) = registry.export_context(&table);
        assert!(!after.contains(&off));
        assert_eq!(after.len(), 1);
    }

    #[test]
    fn empty_registry_exports_empty_graph() {
        let registry = Registry::new();
        let (graph, warnings) = registry.export_context(&PredicateTable::default());
        assert!(graph.is_empty());
        assert!(warnings.is_empty());
    }
}
