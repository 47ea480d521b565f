//! Extracts the intervention subgraph: the part of a page recording that
//! changes when a filter rule is applied.
//!
//! Two recordings of the same page are compared — one made without the rule
//! (`pre`) and one with it (`post`). Node ids are recording-local, so network
//! resources are matched across recordings by `(url, request type)`, where the
//! request type comes from the lowest-id incoming request edge. Resources
//! sharing a key are paired in ascending id order; a pre-side resource with no
//! post-side partner counts as not loaded after the intervention.
//!
//! A resource is *loaded* in a recording when it has a response edge and no
//! block edge. Resources whose loaded status differs between the recordings
//! are *flipped*, and seed the marking pass over the pre graph:
//!
//! 1. every flipped resource is marked;
//! 2. its request, response, and block edges are marked along with the nodes
//!    on their far ends (requesters and blockers);
//! 3. for flipped script resources, the fetching `<script>` element's
//!    execution edge and the script actor it spawned are marked;
//! 4. finally, every node one step (either direction) from the set marked so
//!    far is marked together with the connecting edge — a single pass, so
//!    neighbors added here are not expanded further.
//!
//! The intervention graph is the subgraph of `pre` induced by the marked sets.
//! It is empty exactly when nothing flipped, i.e. the rule had no observable
//! effect on the page.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filter::ResourceType;
use crate::graph::{induced_subgraph, EdgeId, EdgeKind, GraphError, NodeId, NodeKind, PageGraph};

#[derive(Debug, Error)]
pub enum DiffError {
    #[error("recordings are of different pages: `{pre}` vs `{post}`")]
    PageUrlMismatch { pre: String, post: String },
    #[error("intervention graph is not a subgraph of the pre recording: {0}")]
    NotASubgraph(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A network resource whose loaded status changed between the recordings.
/// `node` is the resource's id in the pre graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlippedResource {
    pub node: NodeId,
    pub url: String,
    pub request_type: Option<ResourceType>,
    pub loaded_before: bool,
    pub loaded_after: bool,
}

fn resource_key(g: &PageGraph, id: NodeId) -> (String, Option<ResourceType>) {
    let url = g
        .node(id)
        .and_then(|n| n.attrs.url.clone())
        .unwrap_or_default();
    let request_type = g
        .in_edges(id)
        .filter(|e| e.kind == EdgeKind::HttpRequest)
        .min_by_key(|e| e.id)
        .and_then(|e| e.attrs.request_type);
    (url, request_type)
}

fn resource_loaded(g: &PageGraph, id: NodeId) -> bool {
    let mut has_response = false;
    for edge in g.incident_edges(id) {
        match edge.kind {
            EdgeKind::ResourceBlock => return false,
            EdgeKind::HttpResponse => has_response = true,
            _ => {}
        }
    }
    has_response
}

/// Resources of `pre` whose loaded status differs in `post`, in id order.
pub fn flipped_resources(pre: &PageGraph, post: &PageGraph) -> Vec<FlippedResource> {
    let mut post_by_key: HashMap<(String, Option<ResourceType>), Vec<bool>> = HashMap::new();
    for node in post.nodes_of_kind(NodeKind::NetworkResource) {
        post_by_key
            .entry(resource_key(post, node.id))
            .or_default()
            .push(resource_loaded(post, node.id));
    }

    let mut pair_index: HashMap<(String, Option<ResourceType>), usize> = HashMap::new();
    let mut flipped = Vec::new();
    for node in pre.nodes_of_kind(NodeKind::NetworkResource) {
        let key = resource_key(pre, node.id);
        let i = pair_index.entry(key.clone()).or_insert(0);
        let loaded_before = resource_loaded(pre, node.id);
        let loaded_after = post_by_key
            .get(&key)
            .and_then(|statuses| statuses.get(*i))
            .copied()
            .unwrap_or(false);
        *i += 1;
        if loaded_before != loaded_after {
            flipped.push(FlippedResource {
                node: node.id,
                url: key.0,
                request_type: key.1,
                loaded_before,
                loaded_after,
            });
        }
    }
    flipped
}

/// Builds the intervention subgraph of `pre` (see the module docs for the
/// marking rules).
pub fn intervention_graph(pre: &PageGraph, post: &PageGraph) -> Result<PageGraph, DiffError> {
    if pre.page_url() != post.page_url() {
        return Err(DiffError::PageUrlMismatch {
            pre: pre.page_url().to_string(),
            post: post.page_url().to_string(),
        });
    }

    let flipped = flipped_resources(pre, post);
    let mut nodes: BTreeSet<NodeId> = BTreeSet::new();
    let mut edges: BTreeSet<EdgeId> = BTreeSet::new();

    for flip in &flipped {
        nodes.insert(flip.node);
        for edge in pre.incident_edges(flip.node) {
            if matches!(
                edge.kind,
                EdgeKind::HttpRequest | EdgeKind::HttpResponse | EdgeKind::ResourceBlock
            ) {
                edges.insert(edge.id);
                nodes.insert(if edge.dst == flip.node { edge.src } else { edge.dst });
            }
        }
    }

    // A blocked script never ran, so the actor it would have spawned (and the
    // execution edge from its <script> element) belongs to the intervention.
    for flip in &flipped {
        if flip.request_type != Some(ResourceType::Script) {
            continue;
        }
        let requesters: Vec<NodeId> = pre
            .in_edges(flip.node)
            .filter(|e| e.kind == EdgeKind::HttpRequest)
            .map(|e| e.src)
            .collect();
        for requester in requesters {
            let Some(node) = pre.node(requester) else { continue };
            if node.kind != NodeKind::DomNode || node.attrs.tag.as_deref() != Some("script") {
                continue;
            }
            for edge in pre.incident_edges(requester) {
                if edge.kind == EdgeKind::ScriptExecute {
                    edges.insert(edge.id);
                    nodes.insert(if edge.dst == requester { edge.src } else { edge.dst });
                }
            }
        }
    }

    let snapshot: Vec<NodeId> = nodes.iter().copied().collect();
    for id in snapshot {
        for edge in pre.incident_edges(id) {
            edges.insert(edge.id);
            nodes.insert(if edge.dst == id { edge.src } else { edge.dst });
        }
    }

    Ok(induced_subgraph(pre, &nodes, &edges)?)
}

/// True when applying the rule changed nothing observable on the page.
pub fn is_effectless(intervention: &PageGraph) -> bool {
    intervention.is_empty()
}

/// A page's paired recordings plus the intervention subgraph derived from
/// them, as produced by one blocking experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphTriple {
    pub example_id: String,
    pub pre: PageGraph,
    pub post: PageGraph,
    pub intervention: PageGraph,
}

impl GraphTriple {
    /// Validates that all three graphs describe the same page and that the
    /// intervention is an exact id-preserving subgraph of `pre`.
    pub fn new(
        example_id: impl Into<String>,
        pre: PageGraph,
        post: PageGraph,
        intervention: PageGraph,
    ) -> Result<Self, DiffError> {
        if pre.page_url() != post.page_url() {
            return Err(DiffError::PageUrlMismatch {
                pre: pre.page_url().to_string(),
                post: post.page_url().to_string(),
            });
        }
        if pre.page_url() != intervention.page_url() {
            return Err(DiffError::PageUrlMismatch {
                pre: pre.page_url().to_string(),
                post: intervention.page_url().to_string(),
            });
        }
        for node in intervention.nodes() {
            match pre.node(node.id) {
                Some(original) if original == node => {}
                Some(_) => {
                    return Err(DiffError::NotASubgraph(format!(
                        "node {} differs from the pre recording",
                        node.id
                    )))
                }
                None => {
                    return Err(DiffError::NotASubgraph(format!(
                        "node {} is absent from the pre recording",
                        node.id
                    )))
                }
            }
        }
        for edge in intervention.edges() {
            let found = pre
                .edges()
                .binary_search_by_key(&edge.id, |e| e.id)
                .ok()
                .map(|i| &pre.edges()[i]);
            match found {
                Some(original) if original == edge => {}
                Some(_) => {
                    return Err(DiffError::NotASubgraph(format!(
                        "edge {} differs from the pre recording",
                        edge.id
                    )))
                }
                None => {
                    return Err(DiffError::NotASubgraph(format!(
                        "edge {} is absent from the pre recording",
                        edge.id
                    )))
                }
            }
        }
        Ok(GraphTriple {
            example_id: example_id.into(),
            pre,
            post,
            intervention,
        })
    }

    /// Computes the intervention from the two recordings.
    pub fn from_pair(
        example_id: impl Into<String>,
        pre: PageGraph,
        post: PageGraph,
    ) -> Result<Self, DiffError> {
        let intervention = intervention_graph(&pre, &post)?;
        Self::new(example_id, pre, post, intervention)
    }

    pub fn is_effectless(&self) -> bool {
        is_effectless(&self.intervention)
    }
}
