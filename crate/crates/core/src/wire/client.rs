use std::io::{BufReader, Read, Write};
use std::net::TcpStream;

use serde::Deserialize;

use crate::config::EnvConfig;
use crate::error::{Error, Result};
use crate::vecenv::StepResult;

use super::frame::{self, Frame, Opcode, ResetRequest};

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Shapes {
    #[serde(rename = "B")]
    pub batch: Option<usize>,
    #[serde(rename = "N")]
    pub n_agents: usize,
    #[serde(rename = "V")]
    pub view: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct HelloReply {
    pub config: EnvConfig,
    pub shapes: Shapes,
}

/// Lockstep client for the frame protocol.
pub struct Client<S: Read + Write> {
    stream: BufReader<S>,
    shapes: Option<Shapes>,
    batch: usize,
}

impl Client<TcpStream> {
    pub fn connect_tcp(addr: &str) -> Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(Self::new(stream))
    }
}

#[cfg(unix)]
impl Client<std::os::unix::net::UnixStream> {
    pub fn connect_unix(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Ok(Self::new(std::os::unix::net::UnixStream::connect(path)?))
    }
}

impl<S: Read + Write> Client<S> {
    pub fn new(stream: S) -> Self {
        Self { stream: BufReader::new(stream), shapes: None, batch: 0 }
    }

    /// Sends a raw frame and returns the raw reply.
    pub fn request(&mut self, req: &Frame) -> Result<Frame> {
        frame::write_frame(self.stream.get_mut(), req)?;
        frame::read_frame(&mut self.stream)?
            .ok_or_else(|| Error::Protocol("connection closed by server".into()))
    }

    fn expect(&mut self, req: &Frame, want: Opcode) -> Result<Frame> {
        let reply = self.request(req)?;
        match reply.op() {
            Some(op) if op == want => Ok(reply),
            Some(Opcode::Error) => {
                let (code, message) = reply.parse_error()?;
                Err(Error::Remote { code, message })
            }
            _ => Err(Error::Protocol(format!("unexpected reply opcode {}", reply.opcode))),
        }
    }

    pub fn hello(&mut self, config: &EnvConfig) -> Result<HelloReply> {
        let req = Frame::new(Opcode::Hello, config.to_canonical_json().into_bytes());
        let reply = self.expect(&req, Opcode::Hello)?;
        let hello: HelloReply = serde_json::from_slice(&reply.payload)?;
        self.shapes = Some(hello.shapes.clone());
        Ok(hello)
    }

    fn decode(&self, reply: &Frame) -> Result<StepResult> {
        let shapes = self.shapes.as_ref().ok_or_else(|| Error::Protocol("no HELLO yet".into()))?;
        frame::decode_result(&reply.payload, self.batch, shapes.n_agents, shapes.view)
    }

    pub fn reset(&mut self, master_seed: u64, batch: u32) -> Result<StepResult> {
        let req = Frame::new(Opcode::Reset, ResetRequest { master_seed, batch }.encode());
        let reply = self.expect(&req, Opcode::Result)?;
        self.batch = batch as usize;
        self.decode(&reply)
    }

    pub fn step(&mut self, actions: &[u8]) -> Result<StepResult> {
        let reply = self.expect(&Frame::new(Opcode::Step, actions.to_vec()), Opcode::Result)?;
        self.decode(&reply)
    }

    pub fn close(mut self) -> Result<()> {
        self.expect(&Frame::new(Opcode::Close, Vec::new()), Opcode::Close)?;
        Ok(())
    }
}
