//! The client-server grammar with its log and security aspects.

use crate::aogg::Aogg;
use crate::format::{load, Settings};

pub const CLIENT_SERVER: &str = include_str!("../fixtures/client_server.gg");

pub fn client_server() -> (Aogg, Settings) {
    load(CLIENT_SERVER).expect("bundled fixture parses")
}
