//! Page-behavior graphs: what a page did while loading, as a directed
//! multigraph.
//!
//! Nodes are page entities (parsers, DOM nodes, executing scripts, network
//! resources, Web APIs, storage areas, filter rules); edges are recorded
//! actions between them (DOM mutations, HTTP traffic, blocks, script
//! execution, API calls, listener registration, storage access). A graph is
//! validated on construction and on load: ids are unique, edges connect
//! existing nodes, kind-specific attributes are present, and no two parser
//! nodes share a frame.

pub mod graphml;
pub mod tags;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filter::ResourceType;

/// Graph-unique node identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

/// Graph-unique edge identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

macro_rules! string_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }

            pub fn from_str_opt(s: &str) -> Option<Self> {
                match s {
                    $($text => Some($name::$variant),)+
                    _ => None,
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

string_enum! {
    /// What kind of page entity a node represents.
    NodeKind {
        Parser => "parser",
        DomNode => "dom_node",
        TextNode => "text_node",
        ScriptActor => "script_actor",
        NetworkResource => "network_resource",
        WebApi => "web_api",
        StorageArea => "storage_area",
        FilterRule => "filter_rule",
        ContentBlocker => "content_blocker",
    }
}

string_enum! {
    /// What kind of action an edge records.
    EdgeKind {
        NodeCreate => "node_create",
        NodeInsert => "node_insert",
        NodeDelete => "node_delete",
        NodeModify => "node_modify",
        Structure => "structure",
        HttpRequest => "http_request",
        HttpResponse => "http_response",
        ResourceBlock => "resource_block",
        ScriptExecute => "script_execute",
        ApiCall => "api_call",
        EventListenerAdd => "event_listener_add",
        EventListenerRemove => "event_listener_remove",
        StorageSet => "storage_set",
        StorageRead => "storage_read",
        StorageDelete => "storage_delete",
    }
}

/// Which storage area a storage node stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StorageKind {
    #[serde(rename = "cookie")]
    Cookie,
    #[serde(rename = "localStorage")]
    LocalStorage,
    #[serde(rename = "sessionStorage")]
    SessionStorage,
}

impl StorageKind {
    pub const ALL: &'static [StorageKind] =
        &[StorageKind::Cookie, StorageKind::LocalStorage, StorageKind::SessionStorage];

    pub fn as_str(self) -> &'static str {
        match self {
            StorageKind::Cookie => "cookie",
            StorageKind::LocalStorage => "localStorage",
            StorageKind::SessionStorage => "sessionStorage",
        }
    }

    pub fn from_str_opt(s: &str) -> Option<Self> {
        match s {
            "cookie" => Some(StorageKind::Cookie),
            "localStorage" => Some(StorageKind::LocalStorage),
            "sessionStorage" => Some(StorageKind::SessionStorage),
            _ => None,
        }
    }
}

impl fmt::Display for StorageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Optional node attributes; which ones are required depends on the kind.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeAttrs {
    /// HTML element name; required for DOM nodes, normalized to [`tags::TAGS`].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
    /// Resource URL; required for network resources.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    /// Fully qualified API name; required for Web API nodes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub api_name: Option<String>,
    /// Storage area; required for storage nodes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub storage_kind: Option<StorageKind>,
    /// Character count of a text node.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text_len: Option<u64>,
    /// Document membership; absent means the main frame (0).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame_id: Option<u64>,
}

/// A page entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: NodeId,
    pub kind: NodeKind,
    #[serde(default)]
    pub attrs: NodeAttrs,
}

/// Optional edge attributes; which ones are required depends on the kind.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeAttrs {
    /// Required on `http_request` edges.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub request_type: Option<ResourceType>,
    /// HTTP status on response edges.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status: Option<u16>,
    /// Payload size; required on `http_response` edges.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size_bytes: Option<u64>,
    /// Event name or storage key.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    /// Whether an API call crossed a document boundary.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_frame: Option<bool>,
}

/// A recorded action between two nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub id: EdgeId,
    pub src: NodeId,
    pub dst: NodeId,
    pub kind: EdgeKind,
    #[serde(default)]
    pub attrs: EdgeAttrs,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("XML error: {0}")]
    Xml(#[from] quick_xml::Error),
    #[error("graph schema error: {0}")]
    Schema(String),
    #[error("edge e{0} has an endpoint outside the node set")]
    DanglingEdge(u64),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

fn schema_err<T>(msg: impl Into<String>) -> Result<T, GraphError> {
    Err(GraphError::Schema(msg.into()))
}

/// A validated page-behavior graph. Nodes and edges are kept sorted by id;
/// parallel edges between the same nodes are allowed.
#[derive(Debug, Clone)]
pub struct PageGraph {
    page_url: String,
    nodes: Vec<GraphNode>,
    edges: Vec<GraphEdge>,
    node_pos: HashMap<NodeId, usize>,
    /// Edge indices by source node position.
    out_edges: Vec<Vec<usize>>,
    /// Edge indices by destination node position.
    in_edges: Vec<Vec<usize>>,
}

impl PartialEq for PageGraph {
    fn eq(&self, other: &Self) -> bool {
        self.page_url == other.page_url && self.nodes == other.nodes && self.edges == other.edges
    }
}

impl Eq for PageGraph {}

impl PageGraph {
    /// Validates and indexes a graph. Node/edge order in the input does not
    /// matter; storage is canonicalized by id.
    pub fn new(
        page_url: impl Into<String>,
        mut nodes: Vec<GraphNode>,
        mut edges: Vec<GraphEdge>,
    ) -> Result<Self, GraphError> {
        nodes.sort_by_key(|n| n.id);
        edges.sort_by_key(|e| e.id);

        let mut node_pos = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter_mut().enumerate() {
            if node_pos.insert(node.id, i).is_some() {
                return schema_err(format!("duplicate node id {}", node.id));
            }
            let missing = |attr: &str| format!("{} node {} is missing the `{attr}` attribute", node.kind, node.id);
            match node.kind {
                NodeKind::DomNode => match node.attrs.tag.as_deref() {
                    Some(tag) => node.attrs.tag = Some(tags::normalize(tag).to_string()),
                    None => return schema_err(missing("tag")),
                },
                NodeKind::NetworkResource if node.attrs.url.is_none() => {
                    return schema_err(missing("url"));
                }
                NodeKind::WebApi if node.attrs.api_name.is_none() => {
                    return schema_err(missing("api_name"));
                }
                NodeKind::StorageArea if node.attrs.storage_kind.is_none() => {
                    return schema_err(missing("storage_kind"));
                }
                _ => {}
            }
        }

        // At most one parser node per frame; frames without an id are the
        // main document.
        let mut parser_frames = HashMap::new();
        for node in nodes.iter().filter(|n| n.kind == NodeKind::Parser) {
            let frame = node.attrs.frame_id.unwrap_or(0);
            if let Some(prev) = parser_frames.insert(frame, node.id) {
                return schema_err(format!(
                    "frame {frame} has multiple parser nodes ({prev} and {})",
                    node.id
                ));
            }
        }

        let mut out_edges = vec![Vec::new(); nodes.len()];
        let mut in_edges = vec![Vec::new(); nodes.len()];
        let mut seen_edges = HashMap::with_capacity(edges.len());
        for (i, edge) in edges.iter().enumerate() {
            if seen_edges.insert(edge.id, i).is_some() {
                return schema_err(format!("duplicate edge id {}", edge.id));
            }
            let (Some(&src), Some(&dst)) = (node_pos.get(&edge.src), node_pos.get(&edge.dst)) else {
                return Err(GraphError::DanglingEdge(edge.id.0));
            };
            match edge.kind {
                EdgeKind::HttpRequest if edge.attrs.request_type.is_none() => {
                    return schema_err(format!("http_request edge {} is missing `request_type`", edge.id));
                }
                EdgeKind::HttpResponse if edge.attrs.size_bytes.is_none() => {
                    return schema_err(format!("http_response edge {} is missing `size_bytes`", edge.id));
                }
                _ => {}
            }
            out_edges[src].push(i);
            in_edges[dst].push(i);
        }

        Ok(PageGraph {
            page_url: page_url.into(),
            nodes,
            edges,
            node_pos,
            out_edges,
            in_edges,
        })
    }

    pub fn page_url(&self) -> &str {
        &self.page_url
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    /// Edges in ascending id order.
    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> Option<&GraphNode> {
        self.node_pos.get(&id).map(|&i| &self.nodes[i])
    }

    pub fn contains_node(&self, id: NodeId) -> bool {
        self.node_pos.contains_key(&id)
    }

    /// Edges leaving `id`, in ascending edge-id order.
    pub fn out_edges(&self, id: NodeId) -> impl Iterator<Item = &GraphEdge> {
        self.node_pos
            .get(&id)
            .into_iter()
            .flat_map(move |&i| self.out_edges[i].iter().map(move |&e| &self.edges[e]))
    }

    /// Edges arriving at `id`, in ascending edge-id order.
    pub fn in_edges(&self, id: NodeId) -> impl Iterator<Item = &GraphEdge> {
        self.node_pos
            .get(&id)
            .into_iter()
            .flat_map(move |&i| self.in_edges[i].iter().map(move |&e| &self.edges[e]))
    }

    /// All edges touching `id`, outgoing then incoming.
    pub fn incident_edges(&self, id: NodeId) -> impl Iterator<Item = &GraphEdge> {
        self.out_edges(id).chain(self.in_edges(id))
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> impl Iterator<Item = &GraphNode> {
        self.nodes.iter().filter(move |n| n.kind == kind)
    }
}

/// The subgraph of `g` given by the id sets, with original ids and
/// attributes. Fails with [`GraphError::DanglingEdge`] when a selected edge's
/// endpoint is not selected. Ids absent from `g` are ignored, so the result
/// never contains anything the parent did not.
pub fn induced_subgraph(
    g: &PageGraph,
    node_ids: &std::collections::BTreeSet<NodeId>,
    edge_ids: &std::collections::BTreeSet<EdgeId>,
) -> Result<PageGraph, GraphError> {
    let nodes: Vec<GraphNode> = g.nodes.iter().filter(|n| node_ids.contains(&n.id)).cloned().collect();
    let edges: Vec<GraphEdge> = g.edges.iter().filter(|e| edge_ids.contains(&e.id)).cloned().collect();
    for edge in &edges {
        if !node_ids.contains(&edge.src) || !node_ids.contains(&edge.dst) {
            return Err(GraphError::DanglingEdge(edge.id.0));
        }
    }
    PageGraph::new(g.page_url.clone(), nodes, edges)
}
