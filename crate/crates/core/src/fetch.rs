//! Document retrieval from files, HTTP IRIs, or inline text.

use std::fmt;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

use crate::httpio;

/// Media kind of a document, inferred from the origin's extension when
/// not stated: `.ttl` is turtle, `.nt` is ntriples, `.json`/`.jsonld`
/// is a Thing Description document.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MediaHint {
    Turtle,
    NTriples,
    TdJson,
}

/// Where a document comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DocumentSource {
    File(PathBuf),
    Iri(String),
    Inline(String),
}

impl DocumentSource {
    pub fn file(path: impl Into<PathBuf>) -> DocumentSource {
        DocumentSource::File(path.into())
    }

    pub fn iri(iri: impl Into<String>) -> DocumentSource {
        DocumentSource::Iri(iri.into())
    }

    pub fn inline(text: impl Into<String>) -> DocumentSource {
        DocumentSource::Inline(text.into())
    }

    pub fn origin(&self) -> String {
        match self {
            DocumentSource::File(p) => p.display().to_string(),
            DocumentSource::Iri(iri) => iri.clone(),
            DocumentSource::Inline(_) => "<inline>".to_string(),
        }
    }

    pub fn infer_hint(&self) -> Option<MediaHint> {
        let name = match self {
            DocumentSource::File(p) => p.to_string_lossy().into_owned(),
            DocumentSource::Iri(iri) => iri.clone(),
            DocumentSource::Inline(_) => return None,
        };
        let lower = name.to_ascii_lowercase();
        if lower.ends_with(".ttl") {
            Some(MediaHint::Turtle)
        } else if lower.ends_with(".nt") {
            Some(MediaHint::NTriples)
        } else if lower.ends_with(".json") || lower.ends_with(".jsonld") {
            Some(MediaHint::TdJson)
        } else {
            None
        }
    }
}

impl fmt::Display for DocumentSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.origin())
    }
}

#[derive(Debug, Error)]
#[error("failed to fetch `{origin}`: {cause}")]
pub struct FetchError {
    pub origin: String,
    pub cause: String,
}

/// Knobs for IRI fetches; files and inline text ignore them.
#[derive(Clone, Debug, Default)]
pub struct FetchOptions {
    pub timeout: Option<Duration>,
    /// Steer http connections at this address (embedded-server tests).
    pub authority_override: Option<SocketAddr>,
}

pub fn fetch(src: &DocumentSource) -> Result<String, FetchError> {
    fetch_with(src, &FetchOptions::default())
}

pub fn fetch_with(src: &DocumentSource, opts: &FetchOptions) -> Result<String, FetchError> {
    let origin = src.origin();
    match src {
        DocumentSource::Inline(text) => Ok(text.clone()),
        DocumentSource::File(path) => std::fs::read_to_string(path)
            .map_err(|e| FetchError { origin, cause: e.to_string() }),
        DocumentSource::Iri(iri) => {
            if !iri.starts_with("http://") && !iri.starts_with("https://") {
                return Err(FetchError {
                    origin,
                    cause: format!("unsupported fetch scheme in `{iri}`"),
                });
            }
            let timeout = opts.timeout.unwrap_or(httpio::DEFAULT_TIMEOUT);
            let (status, body) =
                httpio::request("GET", iri, None, "", timeout, opts.authority_override)
                    .map_err(|e| FetchError { origin: iri.clone(), cause: e.to_string() })?;
            if !(200..300).contains(&status) {
                return Err(FetchError { origin, cause: format!("status {status}") });
            }
            String::from_utf8(body).map_err(|e| FetchError { origin, cause: e.to_string() })
        }
    }
}
