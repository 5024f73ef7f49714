use std::sync::Arc;

use crate::binding::Verb;
use crate::httpio::{HttpRequest, HttpResponse, HttpServer};
use crate::sim::world::{SharedWorld, WorldError};

/// Handle to the running HTTP facade of a world; dropping it stops the
/// server.
pub struct WorldServer {
    server: HttpServer,
}

impl WorldServer {
    pub fn addr(&self) -> std::net::SocketAddr {
        self.server.addr()
    }

    pub fn base_url(&self) -> String {
        self.server.base_url()
    }
}

/// Exposes a world over HTTP: GET reads properties, events and
/// documents (TDs at `/td/<deviceId>` and at their public IRI paths),
/// POST invokes actions, PUT writes properties. Port 0 picks a free
/// port; a taken port is a bind error.
pub fn serve_http(world: SharedWorld, port: u16) -> Result<WorldServer, WorldError> {
    let handler = Arc::new(move |request: HttpRequest| {
        let verb = match request.method.as_str() {
            "GET" => Verb::Read,
            "POST" => Verb::Invoke,
            "PUT" => Verb::Write,
            _ => return HttpResponse::status(405),
        };
        let (status, body) = world
            .lock()
            .expect("world lock")
            .handle(&request.path, verb, &request.body);
        let content_type = if request.path.starts_with("/td/") || (status == 200 && !body.is_empty()) {
            "application/json"
        } else {
            "text/plain"
        };
        HttpResponse { status, content_type: content_type.into(), body }
    });
    let server = HttpServer::spawn(port, handler).map_err(|e| WorldError::Bind(e.to_string()))?;
    Ok(WorldServer { server })
}
