//! The bundled toy risk server, over HTTP or newline-delimited JSON.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::Path;
use std::sync::Arc;

use base64::Engine;
use serde::{Deserialize, Serialize};

use super::toy::{toy_model_eval, ToyLmpiModelSpec};
use super::ModelError;
use crate::volume::{io as vio, VolumeGrid};

pub const RISK_ROUTE: &str = "/v1/risk";
const MAX_BODY: usize = 1 << 30;

/// Body of a `POST /v1/risk` request.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HttpRiskRequest {
    pub dims: [usize; 3],
    pub spacing_mm: [f64; 3],
    pub data_b64: String,
}

impl HttpRiskRequest {
    pub fn encode(volume: &VolumeGrid) -> Self {
        Self {
            dims: volume.dims(),
            spacing_mm: volume.spacing_mm(),
            data_b64: base64::engine::general_purpose::STANDARD.encode(vio::f32le_bytes(volume.voxels())),
        }
    }

    pub fn decode(&self) -> Result<VolumeGrid, ModelError> {
        let bytes = base64::engine::general_purpose::STANDARD
            .decode(&self.data_b64)
            .map_err(|e| ModelError::Protocol(format!("bad base64 payload: {e}")))?;
        if bytes.len() % 4 != 0 {
            return Err(ModelError::Protocol("payload is not whole f32 values".into()));
        }
        Ok(VolumeGrid::new(self.dims, self.spacing_mm, vio::f32le_values(&bytes))?)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StdioRiskRequest {
    pub volume_path: String,
}

fn error_body(message: &str) -> String {
    serde_json::json!({ "error": message }).to_string()
}

fn evaluate(spec: &ToyLmpiModelSpec, volume: &VolumeGrid) -> Result<String, ModelError> {
    let out = toy_model_eval(spec, volume)?;
    Ok(serde_json::to_string(&out.to_wire())?)
}

/// Answer stdio requests until the input closes.
pub fn serve_stdio(spec: &ToyLmpiModelSpec, input: impl BufRead, mut output: impl Write) -> Result<(), ModelError> {
    spec.validate()?;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = serde_json::from_str::<StdioRiskRequest>(&line)
            .map_err(ModelError::from)
            .and_then(|req| Ok(vio::read_volume(Path::new(&req.volume_path))?))
            .and_then(|v| evaluate(spec, &v))
            .unwrap_or_else(|e| error_body(&e.to_string()));
        writeln!(output, "{reply}")?;
        output.flush()?;
    }
    Ok(())
}

/// A minimal HTTP/1.1 server exposing the toy model at `/v1/risk`.
pub struct ToyHttpServer {
    listener: TcpListener,
    spec: Arc<ToyLmpiModelSpec>,
}

impl ToyHttpServer {
    pub fn bind(spec: ToyLmpiModelSpec, addr: &str) -> Result<Self, ModelError> {
        spec.validate()?;
        Ok(Self {
            listener: TcpListener::bind(addr)?,
            spec: Arc::new(spec),
        })
    }

    pub fn local_addr(&self) -> Result<SocketAddr, ModelError> {
        Ok(self.listener.local_addr()?)
    }

    /// Serve forever, one thread per connection.
    pub fn serve(self) -> Result<(), ModelError> {
        for stream in self.listener.incoming() {
            let stream = stream?;
            let spec = Arc::clone(&self.spec);
            std::thread::spawn(move || {
                if let Err(e) = handle_connection(stream, &spec) {
                    log::warn!("toy server connection failed: {e}");
                }
            });
        }
        Ok(())
    }

    pub fn spawn(self) -> std::thread::JoinHandle<Result<(), ModelError>> {
        std::thread::spawn(move || self.serve())
    }
}

fn respond(stream: &mut TcpStream, status: &str, body: &str) -> std::io::Result<()> {
    write!(
        stream,
        "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )?;
    stream.flush()
}

fn handle_connection(mut stream: TcpStream, spec: &ToyLmpiModelSpec) -> Result<(), ModelError> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let mut parts = request_line.split_whitespace();
    let (method, path) = (parts.next().unwrap_or(""), parts.next().unwrap_or(""));
    let mut content_length = 0usize;
    loop {
        let mut header = String::new();
        if reader.read_line(&mut header)? == 0 || header == "\r\n" || header == "\n" {
            break;
        }
        if let Some((name, value)) = header.split_once(':') {
            if name.trim().eq_ignore_ascii_case("content-length") {
                content_length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    if path != RISK_ROUTE {
        return Ok(respond(&mut stream, "404 Not Found", &error_body("unknown route"))?);
    }
    if method != "POST" {
        return Ok(respond(&mut stream, "405 Method Not Allowed", &error_body("use POST"))?);
    }
    if content_length > MAX_BODY {
        return Ok(respond(&mut stream, "413 Payload Too Large", &error_body("body too large"))?);
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;
    let result = serde_json::from_slice::<HttpRiskRequest>(&body)
        .map_err(ModelError::from)
        .and_then(|req| req.decode())
        .and_then(|v| evaluate(spec, &v));
    match result {
        Ok(reply) => respond(&mut stream, "200 OK", &reply)?,
        Err(e) => respond(&mut stream, "400 Bad Request", &error_body(&e.to_string()))?,
    }
    Ok(())
}
