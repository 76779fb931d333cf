//! Strict request/reply frame server.
//!
//! Each connection owns one [`Session`]: `HELLO` fixes the config, `RESET`
//! builds a batch, `STEP` advances it. Recoverable problems are answered with
//! an `ERROR` frame and the connection stays open; a malformed header closes
//! it.

use std::io::{BufReader, Read, Write};
use std::net::TcpListener;
use std::path::PathBuf;
use std::thread;

use crate::config::EnvConfig;
use crate::error::Result;
use crate::vecenv::{Batch, StepResult};

use super::frame::{self, codes, Frame, Opcode, ResetRequest};

#[derive(Debug, Default)]
pub struct Session {
    config: Option<EnvConfig>,
    batch: Option<Batch>,
    result: Option<StepResult>,
}

/// What the connection loop should do after handling a frame.
#[derive(Debug, PartialEq, Eq)]
pub enum Reply {
    Send(Frame),
    /// Send the frame, then close the connection.
    Close(Frame),
}

impl Session {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn handle(&mut self, req: &Frame) -> Reply {
        if req.version != frame::VERSION {
            return Reply::Send(Frame::error(
                codes::UNSUPPORTED_VERSION,
                &format!("protocol version {} not supported", req.version),
            ));
        }
        let reply = match req.op() {
            Some(Opcode::Hello) => self.hello(&req.payload),
            Some(Opcode::Reset) => self.reset(&req.payload),
            Some(Opcode::Step) => self.step(&req.payload),
            Some(Opcode::Close) => return Reply::Close(Frame::new(Opcode::Close, Vec::new())),
            Some(op @ (Opcode::Result | Opcode::Error)) => Err((
                codes::UNKNOWN_OPCODE,
                format!("{op:?} is a server-to-client opcode"),
            )),
            None => Err((codes::UNKNOWN_OPCODE, format!("unknown opcode {}", req.opcode))),
        };
        Reply::Send(reply.unwrap_or_else(|(code, msg)| Frame::error(code, &msg)))
    }

    fn hello(&mut self, payload: &[u8]) -> std::result::Result<Frame, (u16, String)> {
        let config = EnvConfig::from_json(payload).map_err(|e| (codes::BAD_PAYLOAD, e.to_string()))?;
        config.validate().map_err(|e| (codes::INFEASIBLE_CONFIG, e.to_string()))?;
        let reply = frame::hello_reply(&config, None);
        self.config = Some(config);
        self.batch = None;
        self.result = None;
        Ok(Frame::new(Opcode::Hello, reply))
    }

    fn reset(&mut self, payload: &[u8]) -> std::result::Result<Frame, (u16, String)> {
        let config = self
            .config
            .as_ref()
            .ok_or((codes::OUT_OF_ORDER, "RESET before HELLO".to_string()))?;
        let req = ResetRequest::decode(payload).map_err(|e| (codes::BAD_PAYLOAD, e.to_string()))?;
        let (batch, result) = Batch::reset(config, req.batch as usize, req.master_seed)
            .map_err(|e| (codes::INFEASIBLE_CONFIG, e.to_string()))?;
        let out = Frame::new(Opcode::Result, frame::encode_result(&result));
        self.batch = Some(batch);
        self.result = Some(result);
        Ok(out)
    }

    fn step(&mut self, payload: &[u8]) -> std::result::Result<Frame, (u16, String)> {
        let (Some(batch), Some(result)) = (self.batch.as_mut(), self.result.as_mut()) else {
            return Err((codes::OUT_OF_ORDER, "STEP before RESET".to_string()));
        };
        batch
            .step_into(payload, result)
            .map_err(|e| (codes::BAD_PAYLOAD, e.to_string()))?;
        Ok(Frame::new(Opcode::Result, frame::encode_result(result)))
    }
}

/// Serves one connection until `CLOSE`, end of stream, or a malformed frame.
pub fn serve_stream<S: Read + Write>(stream: S) -> Result<()> {
    let mut session = Session::new();
    let mut reader = BufReader::new(stream);
    loop {
        let req = match frame::read_frame(&mut reader) {
            Ok(Some(f)) => f,
            Ok(None) => return Ok(()),
            Err(e) => return Err(e),
        };
        let reply = session.handle(&req);
        let writer = reader.get_mut();
        match reply {
            Reply::Send(f) => frame::write_frame(writer, &f)?,
            Reply::Close(f) => {
                frame::write_frame(writer, &f)?;
                return Ok(());
            }
        }
    }
}

/// Where the server listens.
#[derive(Debug, Clone)]
pub enum Endpoint {
    Tcp(String),
    #[cfg(unix)]
    Unix(PathBuf),
}

/// Accepts TCP connections forever, one thread per connection.
pub fn serve_tcp(listener: TcpListener) -> Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        thread::spawn(move || {
            let _ = stream.set_nodelay(true);
            let _ = serve_stream(stream);
        });
    }
    Ok(())
}

#[cfg(unix)]
pub fn serve_unix(listener: std::os::unix::net::UnixListener) -> Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        thread::spawn(move || {
            let _ = serve_stream(stream);
        });
    }
    Ok(())
}

/// Binds `endpoint` and serves forever.
pub fn serve(endpoint: &Endpoint) -> Result<()> {
    match endpoint {
        Endpoint::Tcp(addr) => serve_tcp(TcpListener::bind(addr)?),
        #[cfg(unix)]
        Endpoint::Unix(path) => {
            if path.exists() {
                std::fs::remove_file(path)?;
            }
            serve_unix(std::os::unix::net::UnixListener::bind(path)?)
        }
    }
}
