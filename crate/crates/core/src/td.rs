//! Typed Thing Description model: parsing of the TD JSON document shape,
//! structural validation, and data-schema conformance checks.
//!
//! Documents are matched by their compact key names as printed
//! (`td:name`, `td:base`, `interaction`, `td:form`, ...); full JSON-LD
//! context expansion is out of scope. Compact `@type` values such as
//! `iot:Light` are expanded through prefix mappings found inline in the
//! `@context` array, so the rest of the system can work with absolute
//! IRIs like `http://iotschema.org/Light`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TdError {
    #[error("not valid JSON: {0}")]
    Json(String),
    #[error("document root must be a JSON object")]
    NotAnObject,
    #[error("missing td:name")]
    MissingName,
    #[error("missing td:base")]
    MissingBase,
    #[error("no interactions")]
    NoInteractions,
    #[error("interaction {0} has no td:name")]
    UnnamedInteraction(usize),
    #[error("interaction `{0}` has no form")]
    MissingForm(String),
    #[error("interaction `{0}` has no td:Property/td:Action/td:Event kind")]
    UnknownKind(String),
    #[error("interaction `{0}` declares more than one kind")]
    MultipleKinds(String),
    #[error("form of `{0}` has an empty href")]
    EmptyHref(String),
}

/// Interaction pattern kind, derived from the `@type` array.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum InteractionKind {
    Property,
    Action,
    Event,
}

impl fmt::Display for InteractionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InteractionKind::Property => write!(f, "Property"),
            InteractionKind::Action => write!(f, "Action"),
            InteractionKind::Event => write!(f, "Event"),
        }
    }
}

/// Protocol form: where and how an interaction is reachable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Form {
    pub href: String,
    pub rel: Vec<String>,
    pub media_type: String,
}

impl Form {
    /// Effective target: `base ⧺ href` for relative hrefs, the href
    /// itself when it already carries a scheme.
    pub fn target(&self, base: &str) -> String {
        if self.href.contains("://") {
            self.href.clone()
        } else {
            format!("{base}{}", self.href)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchemaType {
    Boolean,
    Number,
    Text,
    Object,
    Array,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct DataSchema {
    pub schema_type: Option<SchemaType>,
    pub semantic_types: BTreeSet<String>,
    pub fields: Option<BTreeMap<String, DataSchema>>,
}

impl DataSchema {
    pub fn of(schema_type: SchemaType) -> DataSchema {
        DataSchema { schema_type: Some(schema_type), ..Default::default() }
    }
}

/// A runtime value exchanged with a device, shaped by a [`DataSchema`].
#[derive(Clone, Debug, PartialEq)]
pub enum DataValue {
    Bool(bool),
    Number(f64),
    Text(String),
    Object(BTreeMap<String, DataValue>),
    List(Vec<DataValue>),
}

impl DataValue {
    pub fn from_json(value: &Value) -> Option<DataValue> {
        match value {
            Value::Bool(b) => Some(DataValue::Bool(*b)),
            Value::Number(n) => n.as_f64().map(DataValue::Number),
            Value::String(s) => Some(DataValue::Text(s.clone())),
            Value::Array(items) => items
                .iter()
                .map(DataValue::from_json)
                .collect::<Option<Vec<_>>>()
                .map(DataValue::List),
            Value::Object(map) => map
                .iter()
                .map(|(k, v)| DataValue::from_json(v).map(|dv| (k.clone(), dv)))
                .collect::<Option<BTreeMap<_, _>>>()
                .map(DataValue::Object),
            Value::Null => None,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            DataValue::Bool(b) => Value::Bool(*b),
            DataValue::Number(n) =>

                serde_json::Number::from_f64(*n).map(Value::Number).unwrap_or(Value::Null),
            DataValue::Text(s) => Value::String(s.clone()),
            DataValue::Object(map) => Value::Object(
                map.iter().map(|(k, v)| (k.clone(), v.to_json())).collect(),
            ),
            DataValue::List(items) => Value::Array(items.iter().map(DataValue::to_json).collect()),
        }
    }

    /// Canonical JSON encoding: object keys sorted, standard number and
    /// string forms. Used as the wire payload format.
    pub fn canonical_json(&self) -> String {
        canonical(&self.to_json())
    }
}

fn canonical(value: &Value) -> String {
    // serde_json's default map is ordered, so plain serialization is
    // already canonical apart from integral floats.
    match value {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                return render_number(f);
            }
            n.to_string()
        }
        Value::Array(items) => {
            let inner: Vec<String> = items.iter().map(canonical).collect();
            format!("[{}]", inner.join(","))
        }
        Value::Object(map) => {
            let inner: Vec<String> = map
                .iter()
                .map(|(k, v)| format!("{}:{}", Value::String(k.clone()), canonical(v)))
                .collect();
            format!("{{{}}}", inner.join(","))
        }
        other => other.to_string(),
    }
}

/// Renders a number the way context literals and payloads carry it:
/// integral values without a trailing `.0`.
pub fn render_number(f: f64) -> String {
    if f.fract() == 0.0 && f.abs() < 1e15 {
        format!("{}", f as i64)
    } else {
        format!("{f}")
    }
}

/// Structural conformance of a value against a schema. Untyped schemas
/// accept anything; object schemas require every declared field to be
/// present and conforming, extra members are tolerated.
pub fn conforms_to(value: &DataValue, schema: &DataSchema) -> bool {
    let Some(schema_type) = schema.schema_type else {
        return true;
    };
    match (schema_type, value) {
        (SchemaType::Boolean, DataValue::Bool(_)) => true,
        (SchemaType::Number, DataValue::Number(_)) => true,
        (SchemaType::Text, DataValue::Text(_)) => true,
        (SchemaType::Array, DataValue::List(_)) => true,
        (SchemaType::Object, DataValue::Object(members)) => match &schema.fields {
            Some(fields) => fields.iter().all(|(name, field_schema)| {
                members
                    .get(name)
                    .is_some_and(|member| conforms_to(member, field_schema))
            }),
            None => true,
        },
        _ => false,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interaction {
    pub name: String,
    pub kind: InteractionKind,
    pub semantic_types: BTreeSet<String>,
    pub writable: bool,
    pub observable: bool,
    pub input_schema: Option<DataSchema>,
    pub output_schema: Option<DataSchema>,
    pub forms: Vec<Form>,
}

impl Interaction {
    /// The value schema of a property (or the payload schema of an
    /// event): what a read of it produces.
    pub fn value_schema(&self) -> Option<&DataSchema> {
        self.output_schema.as_ref().or(self.input_schema.as_ref())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThingDescription {
    pub name: String,
    pub base_iri: String,
    pub types: BTreeSet<String>,
    pub interactions: Vec<Interaction>,
    /// Unknown document members noticed during parsing.
    pub warnings: Vec<String>,
}

impl ThingDescription {
    pub fn base_scheme(&self) -> Option<&str> {
        self.base_iri.split_once("://").map(|(scheme, _)| scheme)
    }

    pub fn interaction(&self, name: &str) -> Option<&Interaction> {
        self.interactions.iter().find(|i| i.name == name)
    }

    pub fn of_kind(&self, kind: InteractionKind) -> impl Iterator<Item = &Interaction> {
        self.interactions.iter().filter(move |i| i.kind == kind)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{tag} at {}: {}", self.path, self.message)
    }
}

const ROOT_KEYS: &[&str] = &["@context", "@type", "td:base", "td:name", "interaction"];
const INTERACTION_KEYS: &[&str] = &[
    "td:name",
    "@type",
    "td:schema",
    "inputSchema",
    "outputSchema",
    "td:form",
    "writable",
    "observable",
];

/// Parses a TD document in the JSON shape of the fixture corpus.
pub fn parse_td(text: &str) -> Result<ThingDescription, TdError> {
    let root: Value = serde_json::from_str(text).map_err(|e| TdError::Json(e.to_string()))?;
    let obj = root.as_object().ok_or(TdError::NotAnObject)?;

    let mut warnings = Vec::new();
    for key in obj.keys() {
        if !ROOT_KEYS.contains(&key.as_str()) {
            warnings.push(format!("unknown member `{key}` ignored"));
        }
    }

    let prefixes = context_prefixes(obj.get("@context"));
    let name = obj
        .get("td:name")
        .and_then(Value::as_str)
        .ok_or(TdError::MissingName)?
        .to_string();
    let base_iri = obj
        .get("td:base")
        .and_then(Value::as_str)
        .ok_or(TdError::MissingBase)?
        .to_string();
    let types = type_list(obj.get("@type"), &prefixes)
        .into_iter()
        .collect::<BTreeSet<_>>();

    let raw_interactions = obj
        .get("interaction")
        .and_then(Value::as_array)
        .ok_or(TdError::NoInteractions)?;
    if raw_interactions.is_empty() {
        return Err(TdError::NoInteractions);
    }

    let mut interactions = Vec::new();
    for (index, raw) in raw_interactions.iter().enumerate() {
        interactions.push(parse_interaction(index, raw, &prefixes, &mut warnings)?);
    }

    Ok(ThingDescription { name, base_iri, types, interactions, warnings })
}

fn context_prefixes(context: Option<&Value>) -> BTreeMap<String, String> {
    let mut prefixes = BTreeMap::new();
    let entries: Vec<&Value> = match context {
        Some(Value::Array(items)) => items.iter().collect(),
        Some(single) => vec![single],
        None => Vec::new(),
    };
    for entry in entries {
        if let Value::Object(map) = entry {
            for (label, ns) in map {
                if let Value::String(ns) = ns {
                    prefixes.insert(label.clone(), ns.clone());
                }
            }
        }
    }
    prefixes
}

fn expand_type(compact: &str, prefixes: &BTreeMap<String, String>) -> String {
    if let Some((prefix, local)) = compact.split_once(':') {
        if let Some(ns) = prefixes.get(prefix) {
            return format!("{ns}{local}");
        }
    }
    compact.to_string()
}

fn type_list(value: Option<&Value>, prefixes: &BTreeMap<String, String>) -> Vec<String> {
    match value {
        Some(Value::Array(items)) => items
            .iter()
            .filter_map(Value::as_str)
            .map(|t| expand_type(t, prefixes))
            .collect(),
        Some(Value::String(s)) => vec![expand_type(s, prefixes)],
        _ => Vec::new(),
    }
}

fn parse_interaction(
    index: usize,
    raw: &Value,
    prefixes: &BTreeMap<String, String>,
    warnings: &mut Vec<String>,
) -> Result<Interaction, TdError> {
    let obj = raw.as_object().ok_or(TdError::UnnamedInteraction(index))?;
    let name = obj
        .get("td:name")
        .and_then(Value::as_str)
        .ok_or(TdError::UnnamedInteraction(index))?
        .to_string();

    for key in obj.keys() {
        if !INTERACTION_KEYS.contains(&key.as_str()) {
            warnings.push(format!("interaction `{name}`: unknown member `{key}` ignored"));
        }
    }

    let raw_types: Vec<String> = match obj.get("@type") {
        Some(Value::Array(items)) => {
            items.iter().filter_map(Value::as_str).map(str::to_string).collect()
        }
        Some(Value::String(s)) => vec![s.clone()],
        _ => Vec::new(),
    };
    let mut kind = None;
    let mut semantic_types = BTreeSet::new();
    for t in &raw_types {
        let found = match t.as_str() {
            "td:Property" => Some(InteractionKind::Property),
            "td:Action" => Some(InteractionKind::Action),
            "td:Event" => Some(InteractionKind::Event),
            _ => None,
        };
        match found {
            Some(k) if kind.is_some() && kind != Some(k) => {
                return Err(TdError::MultipleKinds(name));
            }
            Some(k) => kind = Some(k),
            None => {
                semantic_types.insert(expand_type(t, prefixes));
            }
        }
    }
    let kind = kind.ok_or_else(|| TdError::UnknownKind(name.clone()))?;

    let td_schema = obj.get("td:schema").map(|s| parse_schema(s, prefixes));
    let explicit_input = obj.get("inputSchema").map(|s| parse_schema(s, prefixes));
    let explicit_output = obj.get("outputSchema").map(|s| parse_schema(s, prefixes));
    // The corpus spells action inputs both `inputSchema` and `td:schema`;
    // the explicit spelling wins on conflict. Property and event value
    // schemas land in output position: that is what a read produces.
    let (input_schema, output_schema) = match kind {
        InteractionKind::Action => (explicit_input.or(td_schema.clone()), explicit_output),
        InteractionKind::Property | InteractionKind::Event => {
            (explicit_input, explicit_output.or(td_schema.clone()))
        }
    };

    let forms = match obj.get("td:form") {
        Some(Value::Array(items)) => items
            .iter()
            .map(|f| parse_form(&name, f, warnings))
            .collect::<Result<Vec<_>, _>>()?,
        Some(single @ Value::Object(_)) => vec![parse_form(&name, single, warnings)?],
        _ => Vec::new(),
    };
    if forms.is_empty() {
        return Err(TdError::MissingForm(name));
    }

    Ok(Interaction {
        name,
        kind,
        semantic_types,
        writable: obj.get("writable").and_then(Value::as_bool).unwrap_or(false),
        observable: obj.get("observable").and_then(Value::as_bool).unwrap_or(true),
        input_schema,
        output_schema,
        forms,
    })
}

fn parse_form(
    interaction: &str,
    raw: &Value,
    warnings: &mut Vec<String>,
) -> Result<Form, TdError> {
    let obj = raw
        .as_object()
        .ok_or_else(|| TdError::MissingForm(interaction.to_string()))?;
    let href = obj
        .get("href")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();
    if href.is_empty() {
        return Err(TdError::EmptyHref(interaction.to_string()));
    }
    let rel = match obj.get("rel") {
        Some(Value::Array(items)) => {
            items.iter().filter_map(Value::as_str).map(str::to_string).collect()
        }
        Some(Value::String(s)) => vec![s.clone()],
        _ => Vec::new(),
    };
    let media_type = match obj.get("mediaType").and_then(Value::as_str) {
        Some(m) => m.to_string(),
        None => {
            warnings.push(format!(
                "interaction `{interaction}`: form without mediaType, assuming application/json"
            ));
            "application/json".to_string()
        }
    };
    Ok(Form { href, rel, media_type })
}

fn parse_schema(raw: &Value, prefixes: &BTreeMap<String, String>) -> DataSchema {
    let Some(obj) = raw.as_object() else {
        return DataSchema::default();
    };
    let schema_type = obj.get("type").and_then(Value::as_str).and_then(|t| match t {
        "boolean" => Some(SchemaType::Boolean),
        "number" | "integer" => Some(SchemaType::Number),
        "string" => Some(SchemaType::Text),
        "object" => Some(SchemaType::Object),
        "array" => Some(SchemaType::Array),
        _ => None,
    });
    let semantic_types = type_list(obj.get("@type"), prefixes).into_iter().collect();
    let fields = obj.get("fields").and_then(Value::as_object).map(|map| {
        map.iter()
            .map(|(k, v)| (k.clone(), parse_schema(v, prefixes)))
            .collect()
    });
    DataSchema { schema_type, semantic_types, fields }
}

/// Structural validation of a parsed model. An empty list means every
/// invariant holds.
pub fn validate(td: &ThingDescription) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut push = |severity, path: String, message: String| {
        out.push(Diagnostic { severity, path, message });
    };

    if td.name.is_empty() {
        push(Severity::Error, "td:name".into(), "name must be non-empty".into());
    }
    if td.base_scheme().is_none() {
        push(
            Severity::Error,
            "td:base".into(),
            format!("`{}` has no scheme", td.base_iri),
        );
    }

    let mut seen = BTreeSet::new();
    for interaction in &td.interactions {
        let path = format!("interaction/{}", interaction.name);
        if !seen.insert(interaction.name.clone()) {
            push(
                Severity::Error,
                path.clone(),
                "duplicate interaction name".into(),
            );
        }
        if interaction.forms.is_empty() {
            push(Severity::Error, path.clone(), "no form".into());
        }
        for (i, form) in interaction.forms.iter().enumerate() {
            if form.href.is_empty() {
                push(Severity::Error, format!("{path}/form[{i}]"), "empty href".into());
            }
        }
        if interaction.kind == InteractionKind::Property
            && !interaction.observable
            && !interaction.writable
        {
            push(
                Severity::Warning,
                path.clone(),
                "property neither readable-observed nor writable is unusable".into(),
            );
        }
        for schema in [&interaction.input_schema, &interaction.output_schema]
            .into_iter()
            .flatten()
        {
            check_schema(schema, &path, &mut push);
        }
    }
    out
}

fn check_schema(
    schema: &DataSchema,
    path: &str,
    push: &mut impl FnMut(Severity, String, String),
) {
    let is_object = schema.schema_type == Some(SchemaType::Object);
    if schema.fields.is_some() && !is_object {
        push(
            Severity::Error,
            format!("{path}/schema"),
            "fields are only valid on object schemas".into(),
        );
    }
    if let Some(fields) = &schema.fields {
        for (name, field) in fields {
            check_schema(field, &format!("{path}/schema/{name}"), push);
        }
    }
}
