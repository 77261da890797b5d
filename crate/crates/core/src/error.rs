use serde::Serialize;
use thiserror::Error;

use crate::attr::Sort;
use crate::graph::{EdgeId, Elem, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graphs are typed over different type graphs")]
    TypeGraphMismatch,
    #[error("type `{0}` declared twice")]
    DuplicateType(String),
    #[error("type `{0}` redeclared with a different definition")]
    ConflictingType(String),
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("attribute `{attr}` declared twice on `{ty}`")]
    DuplicateAttr { ty: String, attr: String },
    #[error("node of type `{ty}` lacks attribute `{attr}`")]
    MissingAttr { ty: String, attr: String },
    #[error("type `{ty}` has no attribute `{attr}`")]
    UnknownAttr { ty: String, attr: String },
    #[error("attribute `{attr}` expects {expected}, found {found}")]
    SortMismatch {
        attr: String,
        expected: Sort,
        found: Sort,
    },
    #[error("edge type `{edge_type}` expects endpoint `{expected}`, found `{found}`")]
    EndpointType {
        edge_type: String,
        expected: String,
        found: String,
    },
    #[error("identifier {0} already in use")]
    DuplicateId(Elem),
    #[error("element {0} does not exist")]
    MissingElement(Elem),
    #[error("cannot remove {node}: incident edge {edge} remains")]
    DanglingRemoval { node: NodeId, edge: EdgeId },
    #[error("morphism is undefined on {0}")]
    NotTotal(Elem),
    #[error("morphism changes the type of {0}")]
    NotTypePreserving(Elem),
    #[error("morphism breaks source/target of {0}")]
    NotStructurePreserving(EdgeId),
    #[error("morphism maps elements outside its source graph")]
    ExtraneousMapping,
    #[error("type graph is not an extension of the original")]
    NotAnExtension,
}

/// Why a pushout complement does not exist.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GluingViolation {
    /// A deleted node would leave incident edges of the host behind.
    #[error("deleting {node} leaves dangling edge(s) {edges:?}")]
    DanglingEdge { node: NodeId, edges: Vec<EdgeId> },
    /// A deleted pattern element shares its image with another pattern element.
    #[error("match identifies deleted {deleted} with {other} at {image}")]
    IdentificationClash {
        deleted: Elem,
        other: Elem,
        image: Elem,
    },
}
