//! Protocol binding layer: resolve a form into a concrete request,
//! construct and parse payloads per data schema, and dispatch by the
//! target IRI's scheme.

use std::collections::BTreeMap;
use std::fmt;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;

use crate::httpio;
use crate::sim::SharedWorld;
use crate::td::{conforms_to, DataSchema, DataValue, Interaction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Verb {
    Read,
    Invoke,
    Write,
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verb::Read => write!(f, "READ"),
            Verb::Invoke => write!(f, "INVOKE"),
            Verb::Write => write!(f, "WRITE"),
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum BindingError {
    #[error("no form to resolve")]
    NoForm,
    #[error("unsupported media type `{0}`")]
    UnsupportedMediaType(String),
    #[error("interaction `{0}` requires an input value")]
    MissingInput(String),
    #[error("cannot derive a verb from rel values {0:?}")]
    UnknownRel(Vec<String>),
    #[error("no protocol binding registered for scheme `{0}`")]
    NoBinding(String),
    #[error("transport failure{}: {cause}", status.map(|s| format!(" (status {s})")).unwrap_or_default())]
    Transport { status: Option<u16>, cause: String },
    #[error("response does not conform to the output schema: {0}")]
    ResponseSchemaMismatch(String),
}

impl BindingError {
    pub fn transport_status(&self) -> Option<u16> {
        match self {
            BindingError::Transport { status, .. } => *status,
            _ => None,
        }
    }
}

/// A fully resolved invocation, ready for a transport.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolvedRequest {
    pub target: String,
    pub verb: Verb,
    pub media_type: String,
    pub payload: Option<Vec<u8>>,
}

impl ResolvedRequest {
    pub fn scheme(&self) -> Option<&str> {
        self.target.split_once("://").map(|(scheme, _)| scheme)
    }
}

#[derive(Clone, Debug)]
pub struct BindingResponse {
    pub status: u16,
    pub payload: Vec<u8>,
}

/// Result of a dispatched invocation: a parsed value when the
/// interaction declares an output schema, a bare acknowledgment
/// otherwise.
#[derive(Clone, Debug, PartialEq)]
pub enum InvokeOutcome {
    Ack,
    Value(DataValue),
}

impl InvokeOutcome {
    pub fn value(self) -> Option<DataValue> {
        match self {
            InvokeOutcome::Value(v) => Some(v),
            InvokeOutcome::Ack => None,
        }
    }
}

/// Transport contract. Implementations perform one request and report
/// the raw status and payload; failures never leave partial state in
/// the binding itself.
pub trait ProtocolBinding: Send + Sync {
    /// Human-readable transport name for traces.
    fn transport(&self) -> &'static str;
    /// Capability descriptor.
    fn supported_verbs(&self) -> &'static [Verb] {
        &[Verb::Read, Verb::Invoke, Verb::Write]
    }
    fn invoke(&self, request: &ResolvedRequest) -> Result<BindingResponse, BindingError>;
}

/// Scheme-indexed lookup of protocol bindings.
#[derive(Clone, Default)]
pub struct BindingRegistry {
    bindings: BTreeMap<String, Arc<dyn ProtocolBinding>>,
}

impl BindingRegistry {
    pub fn new() -> BindingRegistry {
        BindingRegistry::default()
    }

    pub fn register(&mut self, scheme: &str, binding: Arc<dyn ProtocolBinding>) {
        self.bindings.insert(scheme.to_ascii_lowercase(), binding);
    }

    pub fn lookup(&self, scheme: &str) -> Option<&Arc<dyn ProtocolBinding>> {
        self.bindings.get(&scheme.to_ascii_lowercase())
    }

    pub fn schemes(&self) -> impl Iterator<Item = &String> {
        self.bindings.keys()
    }
}

impl fmt::Debug for BindingRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BindingRegistry")
            .field("schemes", &self.bindings.keys().collect::<Vec<_>>())
            .finish()
    }
}

/// Maps a form's rel values onto a verb. The corpus carries mangled rel
/// strings (`"readtd:Property"`, `"invoketd:Action"`), so matching is by
/// substring, which honors the intent while tolerating the
/// concatenation artifact.
pub fn verb_from_rel(rel: &[String]) -> Result<Verb, BindingError> {
    for value in rel {
        if value.contains("read") {
            return Ok(Verb::Read);
        }
        if value.contains("invoke") {
            return Ok(Verb::Invoke);
        }
        if value.contains("write") {
            return Ok(Verb::Write);
        }
    }
    Err(BindingError::UnknownRel(rel.to_vec()))
}

/// Resolves an interaction into a concrete request: first form wins,
/// verb comes from the form's rel (defaulting by interaction kind when
/// rel is absent), and the payload is the canonical JSON encoding of the
/// input when the interaction declares an input schema.
pub fn resolve(
    base: &str,
    interaction: &Interaction,
    input: Option<&DataValue>,
) -> Result<ResolvedRequest, BindingError> {
    resolve_verb(base, interaction, None, input)
}

/// [`resolve`] with an explicit verb override, used for property writes
/// where the read form is reused with WRITE semantics.
pub fn resolve_verb(
    base: &str,
    interaction: &Interaction,
    verb: Option<Verb>,
    input: Option<&DataValue>,
) -> Result<ResolvedRequest, BindingError> {
    let form = interaction.forms.first().ok_or(BindingError::NoForm)?;
    if form.media_type != "application/json" {
        return Err(BindingError::UnsupportedMediaType(form.media_type.clone()));
    }
    let verb = match verb {
        Some(v) => v,
        None if form.rel.is_empty() => default_verb(interaction),
        None => verb_from_rel(&form.rel)?,
    };
    let payload = match (&interaction.input_schema, input) {
        (Some(_), Some(value)) => Some(value.canonical_json().into_bytes()),
        (Some(_), None) => return Err(BindingError::MissingInput(interaction.name.clone())),
        (None, _) => None,
    };
    Ok(ResolvedRequest {
        target: form.target(base),
        verb,
        media_type: form.media_type.clone(),
        payload,
    })
}

fn default_verb(interaction: &Interaction) -> Verb {
    match interaction.kind {
        crate::td::InteractionKind::Action => Verb::Invoke,
        _ => Verb::Read,
    }
}

/// Sends a resolved request through the binding registered for its
/// scheme and interprets the response: 2xx with an output schema parses
/// and checks the payload, 2xx without one is an acknowledgment,
/// anything else is a transport error.
pub fn dispatch(
    registry: &BindingRegistry,
    request: &ResolvedRequest,
    output_schema: Option<&DataSchema>,
) -> Result<InvokeOutcome, BindingError> {
    let scheme = request
        .scheme()
        .ok_or_else(|| BindingError::NoBinding(format!("<no scheme in {}>", request.target)))?;
    let binding = registry
        .lookup(scheme)
        .ok_or_else(|| BindingError::NoBinding(scheme.to_string()))?;
    let response = binding.invoke(request)?;
    if !(200..300).contains(&response.status) {
        return Err(BindingError::Transport {
            status: Some(response.status),
            cause: format!("{} {}", request.verb, request.target),
        });
    }
    let Some(schema) = output_schema else {
        return Ok(InvokeOutcome::Ack);
    };
    let json: serde_json::Value = serde_json::from_slice(&response.payload)
        .map_err(|e| BindingError::ResponseSchemaMismatch(e.to_string()))?;
    let value = DataValue::from_json(&json)
        .ok_or_else(|| BindingError::ResponseSchemaMismatch("null payload".into()))?;
    if !conforms_to(&value, schema) {
        return Err(BindingError::ResponseSchemaMismatch(format!(
            "payload {json} vs schema {schema:?}"
        )));
    }
    Ok(InvokeOutcome::Value(value))
}

/// Like [`dispatch`] but returns the raw success payload, for callers
/// that interpret the bytes themselves (event channel drains).
pub fn dispatch_raw(
    registry: &BindingRegistry,
    request: &ResolvedRequest,
) -> Result<Vec<u8>, BindingError> {
    let scheme = request
        .scheme()
        .ok_or_else(|| BindingError::NoBinding(format!("<no scheme in {}>", request.target)))?;
    let binding = registry
        .lookup(scheme)
        .ok_or_else(|| BindingError::NoBinding(scheme.to_string()))?;
    let response = binding.invoke(request)?;
    if !(200..300).contains(&response.status) {
        return Err(BindingError::Transport {
            status: Some(response.status),
            cause: format!("{} {}", request.verb, request.target),
        });
    }
    Ok(response.payload)
}

/// HTTP transport: READ is GET, INVOKE is POST, WRITE is PUT; 2xx is
/// success. `authority_override` steers connections at an embedded
/// server without touching the documents that name the targets.
pub struct HttpBinding {
    pub timeout: Duration,
    pub authority_override: Option<SocketAddr>,
}

impl Default for HttpBinding {
    fn default() -> Self {
        HttpBinding { timeout: httpio::DEFAULT_TIMEOUT, authority_override: None }
    }
}

impl HttpBinding {
    pub fn new() -> HttpBinding {
        HttpBinding::default()
    }

    pub fn with_override(addr: SocketAddr) -> HttpBinding {
        HttpBinding { authority_override: Some(addr), ..Default::default() }
    }
}

impl ProtocolBinding for HttpBinding {
    fn transport(&self) -> &'static str {
        "http"
    }

    fn invoke(&self, request: &ResolvedRequest) -> Result<BindingResponse, BindingError> {
        let method = match request.verb {
            Verb::Read => "GET",
            Verb::Invoke => "POST",
            Verb::Write => "PUT",
        };
        let (status, payload) = httpio::request(
            method,
            &request.target,
            request.payload.as_deref(),
            &request.media_type,
            self.timeout,
            self.authority_override,
        )
        .map_err(|e| BindingError::Transport { status: None, cause: e.to_string() })?;
        Ok(BindingResponse { status, payload })
    }
}

/// In-process transport against the simulated world. It honors whatever
/// scheme it is registered under, which is how the `coap` scheme is
/// satisfied without a CoAP stack.
pub struct SimBinding {
    world: SharedWorld,
}

impl SimBinding {
    pub fn new(world: SharedWorld) -> SimBinding {
        SimBinding { world }
    }
}

impl ProtocolBinding for SimBinding {
    fn transport(&self) -> &'static str {
        "sim"
    }

    fn invoke(&self, request: &ResolvedRequest) -> Result<BindingResponse, BindingError> {
        let mut world = self.world.lock().expect("world lock");
        let (status, payload) = world.handle_target(
            &request.target,
            request.verb,
            request.payload.as_deref().unwrap_or(&[]),
        );
        Ok(BindingResponse { status, payload })
    }
}
