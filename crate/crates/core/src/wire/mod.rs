//! External boundary of the engine.
//!
//! * [`frame`]: the length-prefixed binary frame format and payload codecs.
//! * [`server`]: a strict request/reply server over TCP or a Unix socket.
//! * [`client`]: the matching client, used by trainers and tests.
//! * [`log`]: the episode-log file format.

pub mod client;
pub mod frame;
pub mod log;
pub mod server;

pub use client::Client;
pub use frame::{Frame, Opcode};
pub use server::{Endpoint, Session};
