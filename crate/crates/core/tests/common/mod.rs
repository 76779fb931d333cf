#![allow(dead_code)]

use std::net::TcpListener;
use std::path::Path;
use std::thread;

use hecogrid::wire::frame::Frame;
use hecogrid::wire::server;

const GOLDEN: &str = include_str!("../fixtures/golden_frames.hex");

/// Golden frame bytes by name.
pub fn golden(name: &str) -> Vec<u8> {
    let line = GOLDEN
        .lines()
        .filter(|l| !l.starts_with('#'))
        .find(|l| l.split_whitespace().next() == Some(name))
        .unwrap_or_else(|| panic!("no golden fixture {name}"));
    let hex = line.split_whitespace().nth(1).unwrap();
    (0..hex.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&hex[i..i + 2], 16).unwrap())
        .collect()
}

pub fn golden_frame(name: &str) -> Frame {
    let bytes = golden(name);
    let (frame, used) = Frame::decode(&bytes).unwrap();
    assert_eq!(used, bytes.len());
    frame
}

/// Starts a TCP server on an ephemeral port and returns its address.
pub fn spawn_tcp() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    thread::spawn(move || server::serve_tcp(listener));
    addr
}

#[cfg(unix)]
pub fn spawn_unix(path: &Path) {
    let listener = std::os::unix::net::UnixListener::bind(path).unwrap();
    thread::spawn(move || server::serve_unix(listener));
}

/// Deterministic action stream: a tiny LCG over the four action codes.
pub fn actions(step: usize, len: usize, salt: u64) -> Vec<u8> {
    let mut x = salt ^ (step as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    (0..len)
        .map(|_| {
            x = x.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
            (x >> 62) as u8
        })
        .collect()
}
