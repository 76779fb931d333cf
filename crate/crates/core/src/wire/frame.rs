//! Frame layout (all integers little-endian):
//!
//! ```text
//! 0..4   magic "HECO"
//! 4..6   version u16
//! 6..8   opcode u16
//! 8..12  payload_len u32
//! 12..   payload
//! ```

use std::io::{self, Read, Write};

use serde_json::json;

use crate::config::EnvConfig;
use crate::error::{Error, Result};
use crate::vecenv::StepResult;

pub const MAGIC: [u8; 4] = *b"HECO";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 12;
/// Frames larger than this are treated as malformed.
pub const MAX_PAYLOAD: usize = 1 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u16)]
pub enum Opcode {
    Hello = 1,
    Reset = 2,
    Step = 3,
    Result = 4,
    Close = 5,
    Error = 6,
}

impl Opcode {
    pub fn from_u16(v: u16) -> Option<Self> {
        Some(match v {
            1 => Self::Hello,
            2 => Self::Reset,
            3 => Self::Step,
            4 => Self::Result,
            5 => Self::Close,
            6 => Self::Error,
            _ => return None,
        })
    }
}

/// Error codes carried by `ERROR` frames.
pub mod codes {
    pub const UNKNOWN_OPCODE: u16 = 1;
    pub const OUT_OF_ORDER: u16 = 2;
    pub const BAD_PAYLOAD: u16 = 3;
    pub const INFEASIBLE_CONFIG: u16 = 4;
    pub const UNSUPPORTED_VERSION: u16 = 5;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub version: u16,
    /// Raw opcode; unknown values are representable so they can be rejected.
    pub opcode: u16,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(opcode: Opcode, payload: Vec<u8>) -> Self {
        Self { version: VERSION, opcode: opcode as u16, payload }
    }

    pub fn op(&self) -> Option<Opcode> {
        Opcode::from_u16(self.opcode)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(HEADER_LEN + self.payload.len());
        self.encode_into(&mut buf);
        buf
    }

    pub fn encode_into(&self, buf: &mut Vec<u8>) {
        buf.extend_from_slice(&MAGIC);
        buf.extend_from_slice(&self.version.to_le_bytes());
        buf.extend_from_slice(&self.opcode.to_le_bytes());
        buf.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        buf.extend_from_slice(&self.payload);
    }

    /// Decodes one frame from the front of `bytes`, returning it and the
    /// number of bytes consumed.
    pub fn decode(bytes: &[u8]) -> Result<(Self, usize)> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Protocol("truncated frame header".into()));
        }
        let (version, opcode, len) = parse_header(bytes[..HEADER_LEN].try_into().unwrap())?;
        let end = HEADER_LEN + len;
        if bytes.len() < end {
            return Err(Error::Protocol("truncated frame payload".into()));
        }
        Ok((Self { version, opcode, payload: bytes[HEADER_LEN..end].to_vec() }, end))
    }

    pub fn error(code: u16, message: &str) -> Self {
        let mut payload = code.to_le_bytes().to_vec();
        payload.extend_from_slice(message.as_bytes());
        Self::new(Opcode::Error, payload)
    }

    /// `(code, message)` of an `ERROR` frame.
    pub fn parse_error(&self) -> Result<(u16, String)> {
        if self.payload.len() < 2 {
            return Err(Error::Protocol("error frame without code".into()));
        }
        let code = u16::from_le_bytes([self.payload[0], self.payload[1]]);
        let message = String::from_utf8_lossy(&self.payload[2..]).into_owned();
        Ok((code, message))
    }
}

fn parse_header(h: &[u8; HEADER_LEN]) -> Result<(u16, u16, usize)> {
    if h[..4] != MAGIC {
        return Err(Error::Protocol(format!("bad magic {:02x?}", &h[..4])));
    }
    let version = u16::from_le_bytes([h[4], h[5]]);
    let opcode = u16::from_le_bytes([h[6], h[7]]);
    let len = u32::from_le_bytes([h[8], h[9], h[10], h[11]]) as usize;
    if len > MAX_PAYLOAD {
        return Err(Error::Protocol(format!("payload of {len} bytes exceeds limit")));
    }
    Ok((version, opcode, len))
}

/// Reads one frame. Returns `Ok(None)` on a clean end of stream before any
/// header byte; malformed headers are protocol errors.
pub fn read_frame<R: Read>(reader: &mut R) -> Result<Option<Frame>> {
    let mut header = [0u8; HEADER_LEN];
    let mut filled = 0;
    while filled < HEADER_LEN {
        match reader.read(&mut header[filled..]) {
            Ok(0) if filled == 0 => return Ok(None),
            Ok(0) => return Err(Error::Protocol("truncated frame header".into())),
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let (version, opcode, len) = parse_header(&header)?;
    let mut payload = vec![0u8; len];
    reader.read_exact(&mut payload)?;
    Ok(Some(Frame { version, opcode, payload }))
}

pub fn write_frame<W: Write>(writer: &mut W, frame: &Frame) -> Result<()> {
    writer.write_all(&frame.encode())?;
    writer.flush()?;
    Ok(())
}

/// `RESET` payload: master seed and batch size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResetRequest {
    pub master_seed: u64,
    pub batch: u32,
}

impl ResetRequest {
    pub const LEN: usize = 12;

    pub fn encode(&self) -> Vec<u8> {
        let mut out = self.master_seed.to_le_bytes().to_vec();
        out.extend_from_slice(&self.batch.to_le_bytes());
        out
    }

    pub fn decode(payload: &[u8]) -> Result<Self> {
        if payload.len() != Self::LEN {
            return Err(Error::Protocol(format!(
                "reset payload must be {} bytes, got {}",
                Self::LEN,
                payload.len()
            )));
        }
        Ok(Self {
            master_seed: u64::from_le_bytes(payload[..8].try_into().unwrap()),
            batch: u32::from_le_bytes(payload[8..].try_into().unwrap()),
        })
    }
}

/// Payload of the server's `HELLO` reply.
pub fn hello_reply(config: &EnvConfig, batch: Option<usize>) -> Vec<u8> {
    let value = json!({
        "config": serde_json::to_value(config).expect("config serialises"),
        "shapes": { "B": batch, "N": config.n_agents, "V": config.view_size },
    });
    serde_json::to_vec(&value).expect("value serialises")
}

/// `RESULT` payload: observations f32, rewards f32, dones u8, treasures u32.
pub fn encode_result(result: &StepResult) -> Vec<u8> {
    let mut out = Vec::with_capacity(
        4 * result.observations.len() + 4 * result.rewards.len() + 5 * result.batch,
    );
    for v in &result.observations {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in &result.rewards {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend(result.dones.iter().map(|&d| d as u8));
    for v in &result.treasures {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn result_len(batch: usize, n_agents: usize, view: usize) -> usize {
    4 * batch * n_agents * view * view * 3 + 4 * batch * n_agents + batch + 4 * batch
}

pub fn decode_result(payload: &[u8], batch: usize, n_agents: usize, view: usize) -> Result<StepResult> {
    let expected = result_len(batch, n_agents, view);
    if payload.len() != expected {
        return Err(Error::Protocol(format!(
            "result payload is {} bytes, expected {expected}",
            payload.len()
        )));
    }
    let n_obs = batch * n_agents * view * view * 3;
    let n_rew = batch * n_agents;
    let f32s = |bytes: &[u8]| -> Vec<f32> {
        bytes.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect()
    };
    let (obs, rest) = payload.split_at(4 * n_obs);
    let (rew, rest) = rest.split_at(4 * n_rew);
    let (dones, treasures) = rest.split_at(batch);
    Ok(StepResult {
        batch,
        n_agents,
        view,
        observations: f32s(obs),
        rewards: f32s(rew),
        dones: dones.iter().map(|&d| d != 0).collect(),
        treasures: treasures
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn golden_hello_frame() {
        let f = Frame::new(Opcode::Hello, b"{}".to_vec());
        assert_eq!(
            f.encode(),
            [b'H', b'E', b'C', b'O', 1, 0, 1, 0, 2, 0, 0, 0, b'{', b'}']
        );
    }

    #[test]
    fn golden_reset_frame() {
        let req = ResetRequest { master_seed: 0x0102_0304_0506_0708, batch: 64 };
        let f = Frame::new(Opcode::Reset, req.encode());
        assert_eq!(
            f.encode(),
            [
                0x48, 0x45, 0x43, 0x4f, 0x01, 0x00, 0x02, 0x00, 0x0c, 0x00, 0x00, 0x00, //
                0x08, 0x07, 0x06, 0x05, 0x04, 0x03, 0x02, 0x01, 0x40, 0x00, 0x00, 0x00,
            ]
        );
    }

    #[test]
    fn golden_error_frame() {
        let f = Frame::error(codes::OUT_OF_ORDER, "no");
        assert_eq!(f.encode(), [72, 69, 67, 79, 1, 0, 6, 0, 4, 0, 0, 0, 2, 0, b'n', b'o']);
        assert_eq!(f.parse_error().unwrap(), (2, "no".to_string()));
    }

    #[test]
    fn golden_result_payload() {
        let r = StepResult {
            batch: 1,
            n_agents: 1,
            view: 1,
            observations: vec![1.0, 0.5, 0.0],
            rewards: vec![0.25],
            dones: vec![true],
            treasures: vec![3],
        };
        assert_eq!(
            encode_result(&r),
            [
                0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0x3f, 0x00, 0x00, 0x00, 0x00, //
                0x00, 0x00, 0x80, 0x3e, //
                0x01, //
                0x03, 0x00, 0x00, 0x00,
            ]
        );
        assert_eq!(decode_result(&encode_result(&r), 1, 1, 1).unwrap(), r);
    }

    #[test]
    fn bad_magic_is_rejected() {
        let mut bytes = Frame::new(Opcode::Step, vec![0]).encode();
        bytes[0] = b'X';
        assert!(Frame::decode(&bytes).is_err());
        assert!(read_frame(&mut &bytes[..]).is_err());
    }

    #[test]
    fn truncation_is_detected() {
        let bytes = Frame::new(Opcode::Step, vec![1, 2, 3]).encode();
        assert!(Frame::decode(&bytes[..13]).is_err());
        assert!(read_frame(&mut &bytes[..5]).is_err());
        assert!(read_frame(&mut &bytes[..13]).is_err());
        assert!(read_frame(&mut &[][..]).unwrap().is_none());
    }

    #[test]
    fn reset_payload_length_is_checked() {
        assert!(ResetRequest::decode(&[0; 11]).is_err());
    }

    proptest! {
        #[test]
        fn frame_round_trip(opcode in any::<u16>(), version in any::<u16>(), payload in proptest::collection::vec(any::<u8>(), 0..300)) {
            let f = Frame { version, opcode, payload };
            let bytes = f.encode();
            let (back, used) = Frame::decode(&bytes).unwrap();
            prop_assert_eq!(used, bytes.len());
            prop_assert_eq!(&back, &f);
            prop_assert_eq!(read_frame(&mut &bytes[..]).unwrap(), Some(f));
        }
    }
}
