//! Minimal HTTP/1.1 transport over `std::net`, shared by document
//! fetching, the HTTP protocol binding, and the simulator facade.
//!
//! Only what localhost fixture traffic needs: request bodies framed by
//! `Content-Length`, `Connection: close` responses, configurable
//! timeouts, and an optional authority override so requests addressed to
//! a device's advertised origin can be steered at a locally bound
//! listener without rewriting any document.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use thiserror::Error;
use url::Url;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, Error)]
pub enum HttpError {
    #[error("invalid url `{0}`")]
    InvalidUrl(String),
    #[error("connect: {0}")]
    Connect(String),
    #[error("io: {0}")]
    Io(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("bind: {0}")]
    Bind(String),
}

/// A parsed inbound request as seen by the embedded server.
#[derive(Debug, Clone)]
pub struct HttpRequest {
    pub method: String,
    pub path: String,
    pub body: Vec<u8>,
}

/// Response produced by a server handler.
#[derive(Debug, Clone)]
pub struct HttpResponse {
    pub status: u16,
    pub content_type: String,
    pub body: Vec<u8>,
}

impl HttpResponse {
    pub fn ok(content_type: &str, body: impl Into<Vec<u8>>) -> HttpResponse {
        HttpResponse { status: 200, content_type: content_type.into(), body: body.into() }
    }

    pub fn status(status: u16) -> HttpResponse {
        HttpResponse {
            status,
            content_type: "text/plain".into(),
            body: status_text(status).as_bytes().to_vec(),
        }
    }
}

fn status_text(status: u16) -> &'static str {
    match status {
        200 => "OK",
        201 => "Created",
        204 => "No Content",
        400 => "Bad Request",
        403 => "Forbidden",
        404 => "Not Found",
        405 => "Method Not Allowed",
        500 => "Internal Server Error",
        _ => "Status",
    }
}

/// Performs one HTTP exchange. When `authority_override` is set the TCP
/// connection goes there while the request line and `Host` header keep
/// the URL's own authority.
pub fn request(
    method: &str,
    url: &str,
    body: Option<&[u8]>,
    content_type: &str,
    timeout: Duration,
    authority_override: Option<SocketAddr>,
) -> Result<(u16, Vec<u8>), HttpError> {
    let parsed = Url::parse(url).map_err(|_| HttpError::InvalidUrl(url.to_string()))?;
    let host = parsed
        .host_str()
        .ok_or_else(|| HttpError::InvalidUrl(url.to_string()))?
        .to_string();
    let port = parsed.port_or_known_default().unwrap_or(80);

    let mut stream = match authority_override {
        Some(addr) => TcpStream::connect_timeout(&addr, timeout)
            .map_err(|e| HttpError::Connect(e.to_string()))?,
        None => {
            let addrs: Vec<SocketAddr> = (host.as_str(), port)
                .to_socket_addrs()
                .map_err(|e| HttpError::Connect(e.to_string()))?
                .collect();
            let addr = addrs
                .first()
                .ok_or_else(|| HttpError::Connect(format!("no address for {host}")))?;
            TcpStream::connect_timeout(addr, timeout)
                .map_err(|e| HttpError::Connect(e.to_string()))?
        }
    };
    stream
        .set_read_timeout(Some(timeout))
        .and_then(|_| stream.set_write_timeout(Some(timeout)))
        .map_err(|e| HttpError::Io(e.to_string()))?;

    let mut target = parsed.path().to_string();
    if let Some(q) = parsed.query() {
        target.push('?');
        target.push_str(q);
    }
    let body = body.unwrap_or(&[]);
    let mut head = format!(
        "{method} {target} HTTP/1.1\r\nHost: {host}\r\nConnection: close\r\nContent-Length: {}\r\n",
        body.len()
    );
    if !body.is_empty() {
        head.push_str(&format!("Content-Type: {content_type}\r\n"));
    }
    head.push_str("\r\n");

    stream
        .write_all(head.as_bytes())
        .and_then(|_| stream.write_all(body))
        .map_err(|e| HttpError::Io(e.to_string()))?;

    read_response(stream)
}

fn read_response(stream: TcpStream) -> Result<(u16, Vec<u8>), HttpError> {
    let mut reader = BufReader::new(stream);
    let mut status_line = String::new();
    reader
        .read_line(&mut status_line)
        .map_err(|e| HttpError::Io(e.to_string()))?;
    let status: u16 = status_line
        .split_whitespace()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| HttpError::Malformed(format!("status line `{}`", status_line.trim())))?;

    let mut content_length: Option<usize> = None;
    loop {
        let mut line = String::new();
        reader
            .read_line(&mut line)
            .map_err(|e| HttpError::Io(e.to_string()))?;
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            if name.eq_ignore_ascii_case("content-length") {
                content_length = value.trim().parse().ok();
            }
        }
    }

    let mut body = Vec::new();
    match content_length {
        Some(n) => {
            body.resize(n, 0);
            reader
                .read_exact(&mut body)
                .map_err(|e| HttpError::Io(e.to_string()))?;
        }
        None => {
            reader
                .read_to_end(&mut body)
                .map_err(|e| HttpError::Io(e.to_string()))?;
        }
    }
    Ok((status, body))
}

pub type Handler = Arc<dyn Fn(HttpRequest) -> HttpResponse + Send + Sync>;

/// An embedded HTTP server running on its own accept thread. Dropping
/// the handle shuts the server down.
pub struct HttpServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<thread::JoinHandle<()>>,
}

impl HttpServer {
    /// Binds `127.0.0.1:port` (0 picks a free port) and serves `handler`.
    pub fn spawn(port: u16, handler: Handler) -> Result<HttpServer, HttpError> {
        let listener = TcpListener::bind(("127.0.0.1", port))
            .map_err(|e| HttpError::Bind(e.to_string()))?;
        let addr = listener.local_addr().map_err(|e| HttpError::Bind(e.to_string()))?;
        let stop = Arc::new(AtomicBool::new(false));
        let stop_flag = stop.clone();
        let thread = thread::spawn(move || {
            for conn in listener.incoming() {
                if stop_flag.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = conn else { continue };
                let handler = handler.clone();
                // One thread per connection; fixture traffic is tiny.
                thread::spawn(move || {
                    let _ = serve_connection(stream, &handler);
                });
            }
        });
        Ok(HttpServer { addr, stop, thread: Some(thread) })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn shutdown(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // Kick the accept loop awake.
        let _ = TcpStream::connect(self.addr);
        if let Some(handle) = self.thread.take() {
            let _ = handle.join();
        }
    }
}

impl Drop for HttpServer {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn serve_connection(stream: TcpStream, handler: &Handler) -> std::io::Result<()> {
    stream.set_read_timeout(Some(Duration::from_secs(10)))?;
    let mut reader = BufReader::new(stream.try_clone()?);

    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let mut parts = request_line.split_whitespace();
    let (Some(method), Some(path)) = (parts.next(), parts.next()) else {
        return Ok(());
    };
    let (method, path) = (method.to_string(), path.to_string());

    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line)?;
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            if name.eq_ignore_ascii_case("content-length") {
                content_length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; content_length];
    if content_length > 0 {
        reader.read_exact(&mut body)?;
    }

    let response = handler(HttpRequest { method, path, body });
    let mut stream = reader.into_inner();
    let head = format!(
        "HTTP/1.1 {} {}\r\nContent-Type: {}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        response.status,
        status_text(response.status),
        response.content_type,
        response.body.len()
    );
    stream.write_all(head.as_bytes())?;
    stream.write_all(&response.body)?;
    stream.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn echo_server() -> HttpServer {
        HttpServer::spawn(
            0,
            Arc::new(|req| {
                if req.path == "/missing" {
                    return HttpResponse::status(404);
                }
                let mut body = format!("{} {} ", req.method, req.path).into_bytes();
                body.extend_from_slice(&req.body);
                HttpResponse::ok("text/plain", body)
            }),
        )
        .unwrap()
    }

    #[test]
    fn get_and_post_round_trip() {
        let server = echo_server();
        let url = format!("{}/devices/a", server.base_url());
        let (status, body) =
            request("GET", &url, None, "text/plain", DEFAULT_TIMEOUT, None).unwrap();
        assert_eq!(status, 200);
        assert_eq!(String::from_utf8(body).unwrap(), "GET /devices/a ");

        let (status, body) = request(
            "POST",
            &url,
            Some(b"true"),
            "application/json",
            DEFAULT_TIMEOUT,
            None,
        )
        .unwrap();
        assert_eq!(status, 200);
        assert_eq!(String::from_utf8(body).unwrap(), "POST /devices/a true");
    }

    #[test]
    fn not_found_status_passes_through() {
        let server = echo_server();
        let url = format!("{}/missing", server.base_url());
        let (status, _) = request("GET", &url, None, "", DEFAULT_TIMEOUT, None).unwrap();
        assert_eq!(status, 404);
    }

    #[test]
    fn authority_override_redirects_the_connection() {
        let server = echo_server();
        // The URL authority does not resolve anywhere useful; the
        // override steers the connection at the local listener.
        let (status, body) = request(
            "GET",
            "http://localhost/TD/currentswitch",
            None,
            "",
            DEFAULT_TIMEOUT,
            Some(server.addr()),
        )
        .unwrap();
        assert_eq!(status, 200);
        assert_eq!(String::from_utf8(body).unwrap(), "GET /TD/currentswitch ");
    }

    #[test]
    fn second_bind_on_same_port_fails() {
        let server = echo_server();
        let err = HttpServer::spawn(server.addr().port(), Arc::new(|_| HttpResponse::status(200)));
        assert!(matches!(err, Err(HttpError::Bind(_))));
    }

    #[test]
    fn connection_refused_is_a_connect_error() {
        // Bind and immediately drop to find a port that refuses.
        let port = {
            let l = TcpListener::bind(("127.0.0.1", 0)).unwrap();
            l.local_addr().unwrap().port()
        };
        let err = request(
            "GET",
            &format!("http://127.0.0.1:{port}/x"),
            None,
            "",
            Duration::from_millis(500),
            None,
        );
        assert!(matches!(err, Err(HttpError::Connect(_))));
    }
}
