//! Workloads shared by the benchmarks.

use std::sync::Arc;

use gragra_core::{AttrTerm, GraphError, TypeGraph, TypedGraph};

/// A client-server host with `pairs` client/server/data triples, each
/// client holding one pending GET and one pending SET.
pub fn message_host(types: &Arc<TypeGraph>, pairs: usize) -> Result<TypedGraph, GraphError> {
    let mut g = TypedGraph::new(types.clone());
    for i in 0..pairs {
        let id = i as i64;
        let name = format!("k{i}");
        let c = g.add_node("Client", [("id".into(), AttrTerm::int(id))])?;
        let s = g.add_node("Server", [("id".into(), AttrTerm::int(id))])?;
        let d = g.add_node(
            "Data",
            [
                ("name".into(), AttrTerm::str(name.clone())),
                ("value".into(), AttrTerm::int(0)),
            ],
        )?;
        g.add_edge("stores", s, d)?;
        for (kind, value) in [("GET", 0), ("SET", id + 1)] {
            let m = g.add_node(
                "Message",
                [
                    ("type".into(), AttrTerm::str(kind)),
                    ("name".into(), AttrTerm::str(name.clone())),
                    ("value".into(), AttrTerm::int(value)),
                ],
            )?;
            g.add_edge("from", m, c)?;
            g.add_edge("to", m, s)?;
            g.add_edge("about", m, d)?;
        }
    }
    Ok(g)
}
