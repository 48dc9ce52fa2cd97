//! And-Inverter Graphs: the validated graph type, BENCH and ASCII AIGER
//! import/export, levelization, simulation and a seeded random generator.

pub mod aiger;
pub mod bench;
mod error;
mod graph;
mod levels;
pub mod random;
pub mod sim;

pub use error::{AigError, Result};
pub use graph::{AigGraph, AigNode, Edge, Fanin, NodeKind, Polarity};
pub use levels::{levelize, LevelIndex};
pub use random::{random_aig, RandomAigConfig};
pub use sim::{exhaustive_truth_tables, simulate, simulate_words};

use std::str::FromStr;

/// Supported netlist text formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NetlistFormat {
    Bench,
    AigerAscii,
}

impl NetlistFormat {
    /// Guesses the format from a file extension (`bench` or `aag`).
    pub fn from_extension(ext: &str) -> Option<Self> {
        match ext.to_ascii_lowercase().as_str() {
            "bench" => Some(NetlistFormat::Bench),
            "aag" => Some(NetlistFormat::AigerAscii),
            _ => None,
        }
    }
}

impl FromStr for NetlistFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bench" => Ok(NetlistFormat::Bench),
            "aag" | "aiger" | "aiger_ascii" => Ok(NetlistFormat::AigerAscii),
            other => Err(format!("unknown netlist format `{other}`")),
        }
    }
}

/// Parses netlist text. Import is deterministic: node order follows the
/// declaration order of the source.
pub fn parse_netlist(text: &str, format: NetlistFormat) -> Result<AigGraph> {
    match format {
        NetlistFormat::Bench => bench::parse_bench(text),
        NetlistFormat::AigerAscii => aiger::parse_aiger(text),
    }
}

pub fn serialize_netlist(g: &AigGraph, format: NetlistFormat) -> String {
    match format {
        NetlistFormat::Bench => bench::write_bench(g),
        NetlistFormat::AigerAscii => aiger::write_aiger(g),
    }
}
