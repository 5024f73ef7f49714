use std::collections::{BTreeMap, VecDeque};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde_json::json;
use thiserror::Error;

use crate::artifact::EventRecord;
use crate::binding::Verb;
use crate::predicates::PredicateTable;
use crate::rdf::{Graph, Term, Triple};
use crate::td::{
    conforms_to, parse_td, validate, DataValue, InteractionKind, SchemaType, Severity,
    ThingDescription,
};
use crate::turtle::{parse_turtle, PrefixTable};

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("world spec `{path}`: {message}")]
    Spec { path: String, message: String },
    #[error("unknown device `{0}`")]
    UnknownDevice(String),
    #[error("device `{device}` has no event `{event}`")]
    UnknownEvent { device: String, event: String },
    #[error("bind: {0}")]
    Bind(String),
}

fn spec_err(path: &Path, message: impl Into<String>) -> WorldError {
    WorldError::Spec { path: path.display().to_string(), message: message.into() }
}

/// How an action changes device state. Resolved from the action's
/// semantic types when the device is loaded.
#[derive(Clone, Debug, PartialEq)]
enum ActionRule {
    SetBool { property: String, value: bool },
    SetText { property: String, value: String },
    /// Stores the requested number as the drift target for `property`.
    DriftToward { property: String },
}

#[derive(Clone, Debug)]
pub struct Device {
    pub id: String,
    pub td: ThingDescription,
    pub td_text: String,
    /// Public identity of the device's TD document.
    pub iri: String,
    /// Present in the world but not auto-projected into a registry;
    /// replacement scenarios swap over to these.
    pub spare: bool,
    pub state: BTreeMap<String, DataValue>,
    target: Option<(String, f64)>,
    rules: BTreeMap<String, ActionRule>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvocationRecord {
    pub time: u64,
    pub device: String,
    pub interaction: String,
    pub verb: Verb,
}

/// The whole simulated home. Mutations are serialized by wrapping the
/// state in a mutex ([`SharedWorld`]); the HTTP facade and the
/// in-process binding share one instance.
#[derive(Debug, Default)]
pub struct WorldState {
    pub devices: Vec<Device>,
    pub topology: Graph,
    pub ambient: Graph,
    pub docs: BTreeMap<String, String>,
    /// KB configuration carried with the home, if any.
    pub usages_path: Option<PathBuf>,
    pub manifest_path: Option<PathBuf>,
    pub predicates_path: Option<PathBuf>,
    time: u64,
    events: BTreeMap<(String, String), VecDeque<EventRecord>>,
    pub invocations: Vec<InvocationRecord>,
    faults: Vec<(String, u16)>,
}

pub type SharedWorld = Arc<Mutex<WorldState>>;

impl WorldState {
    pub fn shared(self) -> SharedWorld {
        Arc::new(Mutex::new(self))
    }

    pub fn device(&self, id: &str) -> Option<&Device> {
        self.devices.iter().find(|d| d.id == id)
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    /// Forces `status` for any request whose path contains `needle`.
    pub fn inject_fault(&mut self, needle: &str, status: u16) {
        self.faults.push((needle.to_string(), status));
    }

    pub fn clear_faults(&mut self) {
        self.faults.clear();
    }

    /// Appends an event record for a device channel.
    pub fn emit(&mut self, device_id: &str, event: &str) -> Result<(), WorldError> {
        self.emit_with(device_id, event, None)
    }

    pub fn emit_with(
        &mut self,
        device_id: &str,
        event: &str,
        payload: Option<DataValue>,
    ) -> Result<(), WorldError> {
        let device = self
            .devices
            .iter()
            .find(|d| d.id == device_id)
            .ok_or_else(|| WorldError::UnknownDevice(device_id.to_string()))?;
        let known = device
            .td
            .of_kind(InteractionKind::Event)
            .any(|e| e.name == event);
        if !known {
            return Err(WorldError::UnknownEvent {
                device: device_id.to_string(),
                event: event.to_string(),
            });
        }
        let record = EventRecord { event: event.to_string(), payload, time: self.time };
        self.events
            .entry((device_id.to_string(), event.to_string()))
            .or_default()
            .push_back(record);
        Ok(())
    }

    /// Advances virtual time; temperature-style properties drift one
    /// unit toward their target per tick.
    pub fn tick(&mut self, ticks: u64) {
        for _ in 0..ticks {
            self.time += 1;
            for device in &mut self.devices {
                let Some((prop, target)) = device.target.clone() else { continue };
                let Some(DataValue::Number(current)) = device.state.get(&prop).cloned() else {
                    continue;
                };
                let next = if (current - target).abs() <= 1.0 {
                    target
                } else if current < target {
                    current + 1.0
                } else {
                    current - 1.0
                };
                device.state.insert(prop, DataValue::Number(next));
            }
        }
    }

    /// Per-device copy of all property values; used by isolation and
    /// determinism checks.
    pub fn snapshot(&self) -> BTreeMap<String, BTreeMap<String, DataValue>> {
        self.devices
            .iter()
            .map(|d| (d.id.clone(), d.state.clone()))
            .collect()
    }

    /// The world's own context projection: one triple per device
    /// property with a mapped predicate, subject = the device TD IRI.
    pub fn context_projection(&self, table: &PredicateTable) -> Graph {
        let mut graph = Graph::new();
        for device in &self.devices {
            if device.spare {
                continue;
            }
            for interaction in device.td.of_kind(InteractionKind::Property) {
                if !interaction.observable {
                    continue;
                }
                let Some(mapping) = table.mapping_for(&interaction.semantic_types) else {
                    continue;
                };
                let Some(value) = device.state.get(&interaction.name) else { continue };
                let triple = Triple::new(
                    Term::iri_unchecked(device.iri.clone()),
                    Term::iri_unchecked(mapping.predicate.clone()),
                    table.render(mapping, value),
                )
                .expect("projection terms are well formed");
                graph.insert(triple).expect("projection has no variables");
            }
        }
        graph
    }

    /// Routes a request by path the way the HTTP facade sees it:
    /// `/td/<id>` serves TD documents, declared doc routes serve files,
    /// and everything else is matched against `base path ⧺ href` of
    /// every device interaction.
    pub fn handle(&mut self, path: &str, verb: Verb, payload: &[u8]) -> (u16, Vec<u8>) {
        for (needle, status) in &self.faults {
            if path.contains(needle.as_str()) {
                return (*status, Vec::new());
            }
        }
        if verb == Verb::Read {
            if let Some(id) = path.strip_prefix("/td/") {
                // Device id first, then td:name of a non-spare device.
                let found = self
                    .devices
                    .iter()
                    .find(|d| d.id == id)
                    .or_else(|| self.devices.iter().find(|d| !d.spare && d.td.name == id));
                return match found {
                    Some(d) => (200, d.td_text.clone().into_bytes()),
                    None => (404, Vec::new()),
                };
            }
            if let Some(doc) = self.docs.get(path) {
                return (200, doc.clone().into_bytes());
            }
            // A device's TD is also served at the path of its public IRI.
            if let Some(d) = self
                .devices
                .iter()
                .find(|d| iri_path(&d.iri).as_deref() == Some(path))
            {
                return (200, d.td_text.clone().into_bytes());
            }
        }

        let matched = self.route_path(path);
        match matched {
            Some((device_index, interaction)) => {
                self.apply(device_index, &interaction, verb, payload)
            }
            None => (404, Vec::new()),
        }
    }

    /// Routes a full target IRI (any scheme) by longest matching device
    /// base; used by the in-process binding.
    pub fn handle_target(&mut self, target: &str, verb: Verb, payload: &[u8]) -> (u16, Vec<u8>) {
        for (needle, status) in &self.faults {
            if target.contains(needle.as_str()) {
                return (*status, Vec::new());
            }
        }
        let mut best: Option<(usize, String, usize)> = None;
        for (i, device) in self.devices.iter().enumerate() {
            let base = &device.td.base_iri;
            if !target.starts_with(base.as_str()) {
                continue;
            }
            for interaction in &device.td.interactions {
                for form in &interaction.forms {
                    if form.target(base) == target {
                        let specificity = base.len();
                        if best.as_ref().is_none_or(|(_, _, s)| specificity > *s) {
                            best = Some((i, interaction.name.clone(), specificity));
                        }
                    }
                }
            }
        }
        match best {
            Some((device_index, interaction, _)) => {
                self.apply(device_index, &interaction, verb, payload)
            }
            None => (404, Vec::new()),
        }
    }

    fn route_path(&self, path: &str) -> Option<(usize, String)> {
        let mut best: Option<(usize, String, usize)> = None;
        for (i, device) in self.devices.iter().enumerate() {
            let base_path = iri_path(&device.td.base_iri).unwrap_or_default();
            for interaction in &device.td.interactions {
                for form in &interaction.forms {
                    let form_path = if form.href.contains("://") {
                        iri_path(&form.href).unwrap_or_default()
                    } else {
                        format!("{base_path}{}", form.href)
                    };
                    if form_path == path {
                        let specificity = base_path.len();
                        if best.as_ref().is_none_or(|(_, _, s)| specificity > *s) {
                            best = Some((i, interaction.name.clone(), specificity));
                        }
                    }
                }
            }
        }
        best.map(|(i, name, _)| (i, name))
    }

    fn apply(
        &mut self,
        device_index: usize,
        interaction_name: &str,
        verb: Verb,
        payload: &[u8],
    ) -> (u16, Vec<u8>) {
        let time = self.time;
        let device = &mut self.devices[device_index];
        let Some(interaction) = device.td.interaction(interaction_name).cloned() else {
            return (404, Vec::new());
        };
        self.invocations.push(InvocationRecord {
            time,
            device: device.id.clone(),
            interaction: interaction_name.to_string(),
            verb,
        });

        match (interaction.kind, verb) {
            (InteractionKind::Property, Verb::Read) => {
                match device.state.get(interaction_name) {
                    Some(value) => (200, value.canonical_json().into_bytes()),
                    None => (404, Vec::new()),
                }
            }
            (InteractionKind::Property, Verb::Write) => {
                if !interaction.writable {
                    return (403, Vec::new());
                }
                let Some(value) = parse_payload(payload) else {
                    return (400, Vec::new());
                };
                if let Some(schema) = interaction.value_schema() {
                    if !conforms_to(&value, schema) {
                        return (400, Vec::new());
                    }
                }
                device.state.insert(interaction_name.to_string(), value);
                (200, Vec::new())
            }
            (InteractionKind::Action, Verb::Invoke) => {
                let input = parse_payload(payload);
                if let Some(schema) = &interaction.input_schema {
                    match &input {
                        Some(v) if conforms_to(v, schema) => {}
                        _ => return (400, Vec::new()),
                    }
                }
                let Some(rule) = device.rules.get(interaction_name).cloned() else {
                    return (500, Vec::new());
                };
                match rule {
                    ActionRule::SetBool { property, value } => {
                        device.state.insert(property, DataValue::Bool(value));
                    }
                    ActionRule::SetText { property, value } => {
                        device.state.insert(property, DataValue::Text(value));
                    }
                    ActionRule::DriftToward { property } => {
                        let Some(DataValue::Number(n)) = input else {
                            return (400, Vec::new());
                        };
                        device.target = Some((property, n));
                    }
                }
                (200, Vec::new())
            }
            (InteractionKind::Event, Verb::Read) => {
                let key = (device.id.clone(), interaction_name.to_string());
                let drained: Vec<EventRecord> = self
                    .events
                    .get_mut(&key)
                    .map(|q| q.drain(..).collect())
                    .unwrap_or_default();
                let body = serde_json::to_vec(
                    &drained
                        .iter()
                        .map(|r| {
                            json!({
                                "event": r.event,
                                "payload": r.payload.as_ref().map(|p| p.to_json()),
                                "time": r.time,
                            })
                        })
                        .collect::<Vec<_>>(),
                )
                .expect("event records serialize");
                (200, body)
            }
            _ => (405, Vec::new()),
        }
    }
}

fn parse_payload(payload: &[u8]) -> Option<DataValue> {
    if payload.is_empty() {
        return None;
    }
    let value: serde_json::Value = serde_json::from_slice(payload).ok()?;
    DataValue::from_json(&value)
}

fn iri_path(iri: &str) -> Option<String> {
    let after_scheme = iri.split_once("://")?.1;
    match after_scheme.split_once('/') {
        Some((_, rest)) => Some(format!("/{rest}")),
        None => Some(String::new()),
    }
}

/// Derives the state-machine rule for one action from its semantic types.
fn action_rule(td: &ThingDescription, action: &str) -> Option<ActionRule> {
    const IOT: &str = "http://iotschema.org/";
    let interaction = td.interaction(action)?;
    let first_prop_of = |wanted: SchemaType| -> Option<String> {
        td.of_kind(InteractionKind::Property)
            .find(|p| {
                p.value_schema()
                    .and_then(|s| s.schema_type) == Some(wanted)
            })
            .map(|p| p.name.clone())
    };
    for semantic in &interaction.semantic_types {
        let Some(local) = semantic.strip_prefix(IOT) else { continue };
        let rule = match local {
            "SwitchOn" => ActionRule::SetBool { property: first_prop_of(SchemaType::Boolean)?, value: true },
            "SwitchOff" => ActionRule::SetBool { property: first_prop_of(SchemaType::Boolean)?, value: false },
            "OpenCurtain" => ActionRule::SetText { property: first_prop_of(SchemaType::Text)?, value: "open".into() },
            "CloseCurtain" => ActionRule::SetText { property: first_prop_of(SchemaType::Text)?, value: "closed".into() },
            "SetTargetTemperature" => ActionRule::DriftToward { property: first_prop_of(SchemaType::Number)? },
            _ => continue,
        };
        return Some(rule);
    }
    None
}

fn default_value(schema_type: Option<SchemaType>) -> DataValue {
    match schema_type {
        Some(SchemaType::Boolean) | None => DataValue::Bool(false),
        Some(SchemaType::Number) => DataValue::Number(0.0),
        Some(SchemaType::Text) => DataValue::Text(String::new()),
        Some(SchemaType::Object) => DataValue::Object(BTreeMap::new()),
        Some(SchemaType::Array) => DataValue::List(Vec::new()),
    }
}

pub fn load_world(path: &Path) -> Result<WorldState, WorldError> {
    let text = std::fs::read_to_string(path).map_err(|e| spec_err(path, e.to_string()))?;
    load_world_str(&text, path)
}

/// Parses the world file format. Lines:
///
/// ```text
/// device <id> td=<path> [iri=<IRI>] [spare] [init "<prop>"=<json> ...]
/// zone <zone>
/// contains <zone> <zone>
/// element <zone> <td-iri>
/// prefix <label> <namespace>
/// ambient            # turtle block, closed by `end`
/// doc <url-path> <file>
/// usages <file>      manifest <file>      predicates <file>
/// ```
///
/// Paths are relative to the world file. `#` starts a comment.
pub fn load_world_str(text: &str, path: &Path) -> Result<WorldState, WorldError> {
    let dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let mut world = WorldState::default();
    let mut prefixes = default_world_prefixes();
    let mut lines = text.lines().enumerate().peekable();

    while let Some((number, raw)) = lines.next() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens = tokenize(line).map_err(|m| spec_err(path, format!("line {}: {m}", number + 1)))?;
        let err = |m: String| spec_err(path, format!("line {}: {m}", number + 1));
        match tokens[0].as_str() {
            "device" => {
                let device = parse_device(&tokens, &dir).map_err(err)?;
                if world.devices.iter().any(|d| d.id == device.id) {
                    return Err(err(format!("duplicate device id `{}`", device.id)));
                }
                world.devices.push(device);
            }
            "zone" => {
                let zone = node(&tokens, 1, &prefixes).map_err(err)?;
                insert(&mut world.topology, zone, Term::iri_unchecked(crate::kb::ns::RDF_TYPE_IRI), Term::iri_unchecked(crate::kb::ns::bot("Zone")));
            }
            "contains" => {
                let outer = node(&tokens, 1, &prefixes).map_err(err)?;
                let inner = node(&tokens, 2, &prefixes).map_err(err)?;
                insert(&mut world.topology, outer, Term::iri_unchecked(crate::kb::ns::bot("containsZone")), inner);
            }
            "element" => {
                let zone = node(&tokens, 1, &prefixes).map_err(err)?;
                let element = node(&tokens, 2, &prefixes).map_err(err)?;
                insert(&mut world.topology, zone, Term::iri_unchecked(crate::kb::ns::bot("hasElement")), element);
            }
            "prefix" => {
                let (label, ns) = match (tokens.get(1), tokens.get(2)) {
                    (Some(l), Some(n)) => (l.clone(), n.clone()),
                    _ => return Err(err("expected `prefix <label> <namespace>`".into())),
                };
                prefixes.insert(label, ns);
            }
            "ambient" => {
                let mut block = String::new();
                for (label, ns) in prefixes.iter() {
                    block.push_str(&format!("@prefix {label}: <{ns}>.\n"));
                }
                let mut closed = false;
                for (_, body) in lines.by_ref() {
                    if body.trim() == "end" {
                        closed = true;
                        break;
                    }
                    block.push_str(body);
                    block.push('\n');
                }
                if !closed {
                    return Err(err("ambient block not closed by `end`".into()));
                }
                let (graph, _) =
                    parse_turtle(&block).map_err(|e| spec_err(path, e.to_string()))?;
                world.ambient = crate::rdf::union(&world.ambient, &graph);
            }
            "doc" => {
                let (route, file) = match (tokens.get(1), tokens.get(2)) {
                    (Some(r), Some(f)) => (r.clone(), dir.join(f)),
                    _ => return Err(err("expected `doc <url-path> <file>`".into())),
                };
                let body = std::fs::read_to_string(&file)
                    .map_err(|e| spec_err(&file, e.to_string()))?;
                world.docs.insert(route, body);
            }
            "usages" => world.usages_path = Some(dir.join(required(&tokens, 1).map_err(err)?)),
            "manifest" => world.manifest_path = Some(dir.join(required(&tokens, 1).map_err(err)?)),
            "predicates" => {
                world.predicates_path = Some(dir.join(required(&tokens, 1).map_err(err)?))
            }
            other => return Err(err(format!("unknown directive `{other}`"))),
        }
    }
    Ok(world)
}

fn default_world_prefixes() -> PrefixTable {
    let mut p = PrefixTable::new();
    p.insert("bot", crate::kb::ns::BOT);
    p.insert("sh", crate::kb::ns::SH);
    p.insert("iot", crate::kb::ns::IOT);
    p.insert("usg", crate::kb::ns::USG);
    p.insert("tools", crate::kb::ns::TOOLS);
    p
}

fn insert(graph: &mut Graph, s: Term, p: Term, o: Term) {
    let triple = Triple::new(s, p, o).expect("world topology terms are non-literal");
    graph.insert(triple).expect("world topology has no variables");
}

fn required(tokens: &[String], index: usize) -> Result<String, String> {
    tokens
        .get(index)
        .cloned()
        .ok_or_else(|| format!("missing argument {index}"))
}

fn node(tokens: &[String], index: usize, prefixes: &PrefixTable) -> Result<Term, String> {
    let raw = required(tokens, index)?;
    if raw.contains("://") {
        return Term::iri(raw).map_err(|e| e.to_string());
    }
    if let Some((prefix, local)) = raw.split_once(':') {
        if let Some(iri) = prefixes.expand(prefix, local) {
            return Term::iri(iri).map_err(|e| e.to_string());
        }
        return Err(format!("undeclared prefix `{prefix}:`"));
    }
    Err(format!("`{raw}` is neither an IRI nor a prefixed name"))
}

fn parse_device(tokens: &[String], dir: &Path) -> Result<Device, String> {
    let id = tokens.get(1).cloned().ok_or("device line without id")?;
    let mut td_path: Option<PathBuf> = None;
    let mut iri: Option<String> = None;
    let mut spare = false;
    let mut inits: Vec<(String, DataValue)> = Vec::new();
    let mut in_init = false;

    for token in &tokens[2..] {
        if token == "spare" {
            spare = true;
            continue;
        }
        if token == "init" {
            in_init = true;
            continue;
        }
        let Some((key, value)) = token.split_once('=') else {
            return Err(format!("unexpected token `{token}`"));
        };
        if in_init {
            inits.push((key.to_string(), parse_init_value(value)));
        } else {
            match key {
                "td" => td_path = Some(dir.join(value)),
                "iri" => iri = Some(value.to_string()),
                other => return Err(format!("unknown device attribute `{other}`")),
            }
        }
    }

    let td_path = td_path.ok_or("device line without td=")?;
    let td_text = std::fs::read_to_string(&td_path)
        .map_err(|e| format!("cannot read `{}`: {e}", td_path.display()))?;
    let td = parse_td(&td_text).map_err(|e| format!("{}: {e}", td_path.display()))?;
    let errors: Vec<_> = validate(&td)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .collect();
    if !errors.is_empty() {
        return Err(format!("{}: {}", td_path.display(), errors[0]));
    }

    let mut state = BTreeMap::new();
    for property in td.of_kind(InteractionKind::Property) {
        let schema_type = property.value_schema().and_then(|s| s.schema_type);
        state.insert(property.name.clone(), default_value(schema_type));
    }
    for (name, value) in inits {
        let Some(property) = td.interaction(&name) else {
            return Err(format!("init for unknown property `{name}`"));
        };
        if let Some(schema) = property.value_schema() {
            if !conforms_to(&value, schema) {
                return Err(format!("initial value for `{name}` violates its schema"));
            }
        }
        state.insert(name, value);
    }

    let mut rules = BTreeMap::new();
    for action in td.of_kind(InteractionKind::Action) {
        match action_rule(&td, &action.name) {
            Some(rule) => {
                rules.insert(action.name.clone(), rule);
            }
            None => {
                return Err(format!(
                    "no device rule for action `{}` (semantic types {:?})",
                    action.name, action.semantic_types
                ))
            }
        }
    }

    let iri = iri.unwrap_or_else(|| td_path.display().to_string());
    Ok(Device { id, td, td_text, iri, spare, state, target: None, rules })
}

fn parse_init_value(raw: &str) -> DataValue {
    match serde_json::from_str::<serde_json::Value>(raw) {
        Ok(v) => DataValue::from_json(&v).unwrap_or_else(|| DataValue::Text(raw.to_string())),
        Err(_) => DataValue::Text(raw.to_string()),
    }
}

/// Whitespace-separated tokens with double-quote grouping; quotes are
/// stripped, so `init "Switch State"=false` yields `Switch State=false`.
fn tokenize(line: &str) -> Result<Vec<String>, String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut in_quotes = false;
    let mut any = false;
    for c in line.chars() {
        match c {
            '"' => {
                in_quotes = !in_quotes;
                any = true;
            }
            c if c.is_whitespace() && !in_quotes => {
                if any || !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                    any = false;
                }
            }
            c => {
                current.push(c);
                any = true;
            }
        }
    }
    if in_quotes {
        return Err("unterminated quote".into());
    }
    if any || !current.is_empty() {
        tokens.push(current);
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(rel: &str) -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
    }

    #[test]
    fn kitchen_world_projects_the_reference_context() {
        let world = load_world(&fixture("worlds/kitchen61.world")).unwrap();
        let table = PredicateTable::default();
        let projected = world.context_projection(&table);
        let full = crate::rdf::union(&projected, &world.ambient);

        let (expected, _) = parse_turtle(
            &std::fs::read_to_string(fixture("contexts/kitchen_context.ttl")).unwrap(),
        )
        .unwrap();
        assert_eq!(
            crate::ntriples::serialize_ntriples(&full),
            crate::ntriples::serialize_ntriples(&expected)
        );
    }

    #[test]
    fn empty_world_file_is_an_empty_world() {
        let world = load_world_str("", Path::new("empty.world")).unwrap();
        assert!(world.devices.is_empty());
        assert!(world.topology.is_empty());
    }

    #[test]
    fn schema_violating_init_is_a_spec_error() {
        let dir = tempfile::tempdir().unwrap();
        let td = fixture("td/ceiling_light.jsonld");
        let spec = format!("device l td={} init \"Switch State\"=\"duh\"\n", td.display());
        let file = dir.path().join("w.world");
        std::fs::write(&file, spec).unwrap();
        let err = load_world(&file).unwrap_err();
        assert!(err.to_string().contains("violates its schema"), "{err}");
    }

    #[test]
    fn invoke_flips_switch_and_read_sees_it() {
        let mut world = load_world(&fixture("worlds/kitchen61.world")).unwrap();
        let before = world.snapshot();

        let (status, _) = world.handle(
            "/TD/smart_home/kitchen/ceilingLight/switchOn",
            Verb::Invoke,
            b"true",
        );
        assert_eq!(status, 200);

        let after = world.snapshot();
        let changed: Vec<_> = before
            .iter()
            .filter(|(id, state)| after.get(*id) != Some(state))
            .map(|(id, _)| id.clone())
            .collect();
        assert_eq!(changed, vec!["ceilingLight".to_string()]);

        let (status, body) = world.handle(
            "/TD/smart_home/kitchen/ceilingLight/currentswitch",
            Verb::Read,
            &[],
        );
        assert_eq!(status, 200);
        assert_eq!(body, b"true");
    }

    #[test]
    fn unknown_path_is_404_and_events_drain_in_order() {
        let mut world = load_world(&fixture("worlds/sos.world")).unwrap();
        assert_eq!(world.handle("/no/such", Verb::Read, &[]).0, 404);

        world.emit("fire_detector", "fireEvent").unwrap();
        world.tick(1);
        world.emit("fire_detector", "fireEvent").unwrap();

        let (status, body) = world.handle("/fire/events/fire", Verb::Read, &[]);
        assert_eq!(status, 200);
        let records: serde_json::Value = serde_json::from_slice(&body).unwrap();
        assert_eq!(records.as_array().unwrap().len(), 2);
        assert_eq!(records[0]["time"], 0);
        assert_eq!(records[1]["time"], 1);

        // Drained: a second poll is empty.
        let (_, body) = world.handle("/fire/events/fire", Verb::Read, &[]);
        let records: serde_json::Value = serde_json::from_slice(&body).unwrap();
        assert!(records.as_array().unwrap().is_empty());

        assert!(matches!(
            world.emit("nobody", "fireEvent"),
            Err(WorldError::UnknownDevice(_))
        ));
        assert!(matches!(
            world.emit("fire_detector", "smokeEvent"),
            Err(WorldError::UnknownEvent { .. })
        ));
    }

    #[test]
    fn heater_drifts_toward_target_on_ticks() {
        let mut world = load_world(&fixture("worlds/teds_home.world")).unwrap();
        let (status, _) = world.handle("/heater/setTarget", Verb::Invoke, b"21");
        assert_eq!(status, 200);
        world.tick(2);
        let (_, body) = world.handle("/heater/temperature", Verb::Read, &[]);
        assert_eq!(body, b"20");
        world.tick(10);
        let (_, body) = world.handle("/heater/temperature", Verb::Read, &[]);
        assert_eq!(body, b"21");
    }

    #[test]
    fn replaying_an_invocation_log_reproduces_the_world() {
        let run = |script: &[(&str, Verb, &[u8])]| {
            let mut world = load_world(&fixture("worlds/kitchen61.world")).unwrap();
            for (path, verb, payload) in script {
                world.handle(path, *verb, payload);
            }
            world.snapshot()
        };
        let script: Vec<(&str, Verb, &[u8])> = vec![
            ("/TD/smart_home/kitchen/ceilingLight/switchOn", Verb::Invoke, b"true"),
            ("/TD/smart_home/kitchen/curtains/open", Verb::Invoke, b""),
            ("/TD/smart_home/kitchen/ceilingLight/switchOff", Verb::Invoke, b"true"),
        ];
        assert_eq!(run(&script), run(&script));
    }
}
