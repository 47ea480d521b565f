//! Fixed, versioned feature schema and the extractor mapping graph triples to
//! numeric rows.
//!
//! The schema has two layers. A hand-picked *expert* list comes first — most
//! importantly the total response-byte delta between the two recordings,
//! which is deliberately the first column so that correlation pruning (which
//! keeps the earlier of two correlated columns) can never discard it in favor
//! of a derived copy. After the expert list, an *auto* grid enumerates counts
//! over every node kind, edge kind, request type, DOM tag, and a fixed set of
//! web-API prefixes — each as a page-scope count (pre recording), an
//! intervention-scope count, and their ratio. Grid entries whose name would
//! collide with an expert feature are skipped.
//!
//! Ratios with a zero denominator are *missing*, encoded as NaN in memory and
//! as an empty cell in CSV. Page-scope features depend only on the pre
//! recording; intervention-scope features only on the intervention subgraph;
//! network features also see the post recording.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dataset::LabeledTriple;
use crate::diff::{flipped_resources, FlippedResource};
use crate::filter::ResourceType;
use crate::graph::{tags, EdgeKind, NodeKind, PageGraph};
use crate::mining::Label;

/// Version of the feature schema; bump when the column list changes.
pub const SCHEMA_VERSION: u32 = 1;

/// Which graph(s) of a triple a feature is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureScope {
    /// The unmodified pre recording.
    Page,
    /// The intervention subgraph.
    Intervention,
    /// Cross-recording network quantities (needs the post recording too).
    Network,
}

/// What a feature's number means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    Count,
    Bytes,
    Ratio,
    Flag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Expert,
    Auto,
}

/// Web-API name prefixes tracked by the auto grid (sorted).
pub const API_PREFIXES: &[&str] = &[
    "document.cookie",
    "document.querySelector",
    "document.referrer",
    "document.write",
    "window.history",
    "window.localStorage",
    "window.location",
    "window.navigator",
    "window.requestAnimationFrame",
    "window.screen",
    "window.sessionStorage",
    "window.setInterval",
    "window.setTimeout",
];

/// How to compute a feature from the extraction context.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Source {
    DeltaBytes,
    ElementFetchBytes,
    LargestBlockedBytes,
    PostResponseBytes,
    FlippedShareScripts,
    FlippedCount,
    FlippedScripts,
    FlippedImages,
    FlippedXhr,
    FlippedRatio,
    ScriptsFetchedByBlocked,
    BlockedFetchesScriptsFlag,
    DomCreatedByBlocked,
    TextCreatedByBlocked,
    ListenerAddsByBlocked,
    StorageOpsByBlocked,
    ApiCallsByBlocked,
    IntvNodes,
    IntvEdges,
    IntvNodeRatio,
    IntvEdgeRatio,
    IntvBytesRatio,
    SubdocumentRatio,
    ListenerTargetDoms,
    PageNodes,
    PageEdges,
    PageResources,
    PageTextNodes,
    PageTagIframe,
    PageTagScript,
    PageResponseBytes,
    PageLargestResponse,
    PageStorageOps,
    PageApiCalls,
    PageListeners,
    PageDomCreations,
    PageParserCreations,
    PageResourceHosts,
    IntvResourceHosts,
    ResourceHostRatio,
    NodeKindGrid { intv: bool, ratio: bool, idx: u8 },
    EdgeKindGrid { intv: bool, ratio: bool, idx: u8 },
    RequestTypeGrid { intv: bool, ratio: bool, idx: u8 },
    TagGrid { intv: bool, ratio: bool, idx: u16 },
    ApiGrid { intv: bool, ratio: bool, idx: u8 },
}

/// One feature column: a stable name plus how it is computed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureSpec {
    pub name: String,
    pub scope: FeatureScope,
    pub value: ValueKind,
    pub category: Category,
    #[serde(skip)]
    source: Source,
}

/// The full ordered column list.
#[derive(Debug)]
pub struct FeatureSchema {
    version: u32,
    specs: Vec<FeatureSpec>,
    by_name: HashMap<String, usize>,
}

impl FeatureSchema {
    pub fn version(&self) -> u32 {
        self.version
    }

    pub fn specs(&self) -> &[FeatureSpec] {
        &self.specs
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.specs.iter().map(|s| s.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    /// Members of a named feature group, for leave-group-out attribution.
    /// Groups: `page`, `intervention`, `network`, `absolute`, `relative`,
    /// `expert`, `auto`.
    pub fn group(&self, name: &str) -> Option<Vec<usize>> {
        let pred: Box<dyn Fn(&FeatureSpec) -> bool> = match name {
            "page" => Box::new(|s| s.scope == FeatureScope::Page),
            "intervention" => Box::new(|s| s.scope == FeatureScope::Intervention),
            "network" => Box::new(|s| s.scope == FeatureScope::Network),
            "absolute" => Box::new(|s| s.value != ValueKind::Ratio),
            "relative" => Box::new(|s| s.value == ValueKind::Ratio),
            "expert" => Box::new(|s| s.category == Category::Expert),
            "auto" => Box::new(|s| s.category == Category::Auto),
            _ => return None,
        };
        Some(
            self.specs
                .iter()
                .enumerate()
                .filter(|(_, s)| pred(s))
                .map(|(i, _)| i)
                .collect(),
        )
    }
}

fn expert(name: &str, scope: FeatureScope, value: ValueKind, source: Source) -> FeatureSpec {
    FeatureSpec {
        name: name.to_string(),
        scope,
        value,
        category: Category::Expert,
        source,
    }
}

fn build_v1() -> FeatureSchema {
    use FeatureScope::{Intervention, Network, Page};
    use ValueKind::{Bytes, Count, Flag, Ratio};

    let mut specs = vec![
        expert("net.delta_bytes_after_blocking", Network, Bytes, Source::DeltaBytes),
        expert("net.blocked_element_fetch_bytes", Network, Bytes, Source::ElementFetchBytes),
        expert("net.largest_blocked_bytes", Network, Bytes, Source::LargestBlockedBytes),
        expert("intv.count.flipped_resources", Intervention, Count, Source::FlippedCount),
        expert("intv.count.flipped_scripts", Intervention, Count, Source::FlippedScripts),
        expert("intv.count.flipped_images", Intervention, Count, Source::FlippedImages),
        expert("intv.count.flipped_xhr", Intervention, Count, Source::FlippedXhr),
        expert("intv.ratio.flipped_resources", Intervention, Ratio, Source::FlippedRatio),
        expert(
            "intv.count.scripts_fetched_by_blocked",
            Intervention,
            Count,
            Source::ScriptsFetchedByBlocked,
        ),
        expert(
            "intv.flag.blocked_script_fetches_scripts",
            Intervention,
            Flag,
            Source::BlockedFetchesScriptsFlag,
        ),
        expert("intv.count.dom_created_by_blocked", Intervention, Count, Source::DomCreatedByBlocked),
        expert(
            "intv.count.text_created_by_blocked_scripts",
            Intervention,
            Count,
            Source::TextCreatedByBlocked,
        ),
        expert(
            "intv.count.event_listener_adds_by_blocked",
            Intervention,
            Count,
            Source::ListenerAddsByBlocked,
        ),
        expert("intv.count.storage_ops_by_blocked", Intervention, Count, Source::StorageOpsByBlocked),
        expert("intv.count.api_calls_by_blocked", Intervention, Count, Source::ApiCallsByBlocked),
        expert("intv.count.nodes", Intervention, Count, Source::IntvNodes),
        expert("intv.count.edges", Intervention, Count, Source::IntvEdges),
        expert("intv.ratio.nodes", Intervention, Ratio, Source::IntvNodeRatio),
        expert("intv.ratio.edges", Intervention, Ratio, Source::IntvEdgeRatio),
        expert("intv.ratio.bytes", Intervention, Ratio, Source::IntvBytesRatio),
        expert("intv.ratio.request.subdocument", Intervention, Ratio, Source::SubdocumentRatio),
        expert("intv.count.listener_target_doms", Intervention, Count, Source::ListenerTargetDoms),
        expert("page.count.nodes", Page, Count, Source::PageNodes),
        expert("page.count.edges", Page, Count, Source::PageEdges),
        expert("page.count.resources", Page, Count, Source::PageResources),
        expert("page.count.text_nodes", Page, Count, Source::PageTextNodes),
        expert("page.count.tag.iframe", Page, Count, Source::PageTagIframe),
        expert("page.count.tag.script", Page, Count, Source::PageTagScript),
        expert("page.bytes.responses", Page, Bytes, Source::PageResponseBytes),
        expert("page.bytes.largest_response", Page, Bytes, Source::PageLargestResponse),
        expert("page.count.storage_ops", Page, Count, Source::PageStorageOps),
        expert("page.count.api_calls", Page, Count, Source::PageApiCalls),
        expert("page.count.listeners", Page, Count, Source::PageListeners),
        expert("page.count.dom_creations", Page, Count, Source::PageDomCreations),
        expert("page.count.parser_creations", Page, Count, Source::PageParserCreations),
        expert("net.bytes_after_blocking", Network, Bytes, Source::PostResponseBytes),
        expert("net.flipped_script_share", Network, Ratio, Source::FlippedShareScripts),
        expert("page.count.resource_hosts", Page, Count, Source::PageResourceHosts),
        expert("intv.count.resource_hosts", Intervention, Count, Source::IntvResourceHosts),
        expert("intv.ratio.resource_hosts", Intervention, Ratio, Source::ResourceHostRatio),
    ];

    let mut by_name: HashMap<String, usize> = specs
        .iter()
        .enumerate()
        .map(|(i, s)| (s.name.clone(), i))
        .collect();
    assert_eq!(by_name.len(), specs.len(), "expert feature names must be unique");

    let push_grid = |specs: &mut Vec<FeatureSpec>,
                         by_name: &mut HashMap<String, usize>,
                         name: String,
                         value: ValueKind,
                         source: Source,
                         intv: bool,
                         ratio: bool| {
        if by_name.contains_key(&name) {
            return; // an expert feature already owns this name
        }
        let scope = if intv || ratio {
            FeatureScope::Intervention
        } else {
            FeatureScope::Page
        };
        by_name.insert(name.clone(), specs.len());
        specs.push(FeatureSpec {
            name,
            scope,
            value,
            category: Category::Auto,
            source,
        });
    };

    let variants = [(false, false, "page.count"), (true, false, "intv.count"), (true, true, "intv.ratio")];
    for (idx, kind) in NodeKind::ALL.iter().enumerate() {
        for &(intv, ratio, prefix) in &variants {
            let value = if ratio { ValueKind::Ratio } else { ValueKind::Count };
            push_grid(
                &mut specs,
                &mut by_name,
                format!("{prefix}.node.{}", kind.as_str()),
                value,
                Source::NodeKindGrid { intv, ratio, idx: idx as u8 },
                intv,
                ratio,
            );
        }
    }
    for (idx, kind) in EdgeKind::ALL.iter().enumerate() {
        for &(intv, ratio, prefix) in &variants {
            let value = if ratio { ValueKind::Ratio } else { ValueKind::Count };
            push_grid(
                &mut specs,
                &mut by_name,
                format!("{prefix}.edge.{}", kind.as_str()),
                value,
                Source::EdgeKindGrid { intv, ratio, idx: idx as u8 },
                intv,
                ratio,
            );
        }
    }
    for (idx, ty) in ResourceType::ALL.iter().enumerate() {
        for &(intv, ratio, prefix) in &variants {
            let value = if ratio { ValueKind::Ratio } else { ValueKind::Count };
            push_grid(
                &mut specs,
                &mut by_name,
                format!("{prefix}.request.{}", ty.as_str()),
                value,
                Source::RequestTypeGrid { intv, ratio, idx: idx as u8 },
                intv,
                ratio,
            );
        }
    }
    for idx in 0..tags::BUCKETS {
        let tag = tags::name(idx);
        for &(intv, ratio, prefix) in &variants {
            let value = if ratio { ValueKind::Ratio } else { ValueKind::Count };
            push_grid(
                &mut specs,
                &mut by_name,
                format!("{prefix}.tag.{tag}"),
                value,
                Source::TagGrid { intv, ratio, idx: idx as u16 },
                intv,
                ratio,
            );
        }
    }
    for (idx, prefix_name) in API_PREFIXES.iter().enumerate() {
        let slug = prefix_name.replace('.', "_");
        for &(intv, ratio, prefix) in &variants {
            let value = if ratio { ValueKind::Ratio } else { ValueKind::Count };
            push_grid(
                &mut specs,
                &mut by_name,
                format!("{prefix}.api.{slug}"),
                value,
                Source::ApiGrid { intv, ratio, idx: idx as u8 },
                intv,
                ratio,
            );
        }
    }

    FeatureSchema {
        version: SCHEMA_VERSION,
        specs,
        by_name,
    }
}

/// The current schema. Built once; the column list never changes within a
/// version.
pub fn schema_v1() -> &'static FeatureSchema {
    static SCHEMA: OnceLock<FeatureSchema> = OnceLock::new();
    SCHEMA.get_or_init(build_v1)
}

/// One-pass aggregate counts over a single graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSummary {
    pub nodes: u64,
    pub edges: u64,
    pub node_kind: [u64; NodeKind::ALL.len()],
    pub edge_kind: [u64; EdgeKind::ALL.len()],
    pub request_type: [u64; ResourceType::ALL.len()],
    pub tag: Vec<u64>,
    pub api_prefix_calls: Vec<u64>,
    pub response_bytes_total: u64,
    pub largest_response: u64,
    pub storage_ops: u64,
    pub listener_adds: u64,
    pub dom_creations: u64,
    pub parser_creations: u64,
    pub text_nodes: u64,
    pub resources: u64,
    pub distinct_resource_hosts: u64,
    pub listener_target_doms: u64,
    /// Activity attributed to script actors present in this graph.
    pub script_fetches_by_actor: u64,
    pub dom_created_by_actor: u64,
    pub text_created_by_actor: u64,
    pub listener_adds_by_actor: u64,
    pub storage_ops_by_actor: u64,
    pub api_calls_by_actor: u64,
}

fn kind_index(kind: NodeKind) -> usize {
    NodeKind::ALL.iter().position(|k| *k == kind).unwrap()
}

fn edge_kind_index(kind: EdgeKind) -> usize {
    EdgeKind::ALL.iter().position(|k| *k == kind).unwrap()
}

fn request_type_index(ty: ResourceType) -> usize {
    ResourceType::ALL.iter().position(|t| *t == ty).unwrap()
}

fn url_host(url: &str) -> Option<&str> {
    let rest = url.split_once("://").map(|(_, r)| r).unwrap_or(url);
    let end = rest.find(['/', '?', '#']).unwrap_or(rest.len());
    let authority = &rest[..end];
    let host = authority.rsplit_once('@').map(|(_, h)| h).unwrap_or(authority);
    let host = host.split_once(':').map(|(h, _)| h).unwrap_or(host);
    if host.is_empty() {
        None
    } else {
        Some(host)
    }
}

fn api_prefix_index(api_name: &str) -> Option<usize> {
    API_PREFIXES.iter().position(|prefix| {
        api_name == *prefix || (api_name.len() > prefix.len() && api_name.starts_with(prefix) && api_name.as_bytes()[prefix.len()] == b'.')
    })
}

/// Aggregates `g` in one pass over nodes and one over edges.
pub fn summarize(g: &PageGraph) -> GraphSummary {
    let mut s = GraphSummary {
        nodes: g.node_count() as u64,
        edges: g.edge_count() as u64,
        node_kind: [0; NodeKind::ALL.len()],
        edge_kind: [0; EdgeKind::ALL.len()],
        request_type: [0; ResourceType::ALL.len()],
        tag: vec![0; tags::BUCKETS],
        api_prefix_calls: vec![0; API_PREFIXES.len()],
        response_bytes_total: 0,
        largest_response: 0,
        storage_ops: 0,
        listener_adds: 0,
        dom_creations: 0,
        parser_creations: 0,
        text_nodes: 0,
        resources: 0,
        distinct_resource_hosts: 0,
        listener_target_doms: 0,
        script_fetches_by_actor: 0,
        dom_created_by_actor: 0,
        text_created_by_actor: 0,
        listener_adds_by_actor: 0,
        storage_ops_by_actor: 0,
        api_calls_by_actor: 0,
    };

    let mut hosts: HashSet<&str> = HashSet::new();
    let mut api_node_prefix: HashMap<crate::graph::NodeId, usize> = HashMap::new();
    for node in g.nodes() {
        s.node_kind[kind_index(node.kind)] += 1;
        match node.kind {
            NodeKind::DomNode => {
                if let Some(tag) = &node.attrs.tag {
                    s.tag[tags::index(tag)] += 1;
                }
            }
            NodeKind::TextNode => s.text_nodes += 1,
            NodeKind::NetworkResource => {
                s.resources += 1;
                if let Some(host) = node.attrs.url.as_deref().and_then(url_host) {
                    hosts.insert(host);
                }
            }
            NodeKind::WebApi => {
                if let Some(idx) = node.attrs.api_name.as_deref().and_then(api_prefix_index) {
                    api_node_prefix.insert(node.id, idx);
                }
            }
            _ => {}
        }
    }
    s.distinct_resource_hosts = hosts.len() as u64;

    let mut listener_targets: HashSet<crate::graph::NodeId> = HashSet::new();
    for edge in g.edges() {
        s.edge_kind[edge_kind_index(edge.kind)] += 1;
        let src_kind = g.node(edge.src).map(|n| n.kind);
        let dst_kind = g.node(edge.dst).map(|n| n.kind);
        let by_actor = src_kind == Some(NodeKind::ScriptActor);
        match edge.kind {
            EdgeKind::HttpRequest => {
                if let Some(ty) = edge.attrs.request_type {
                    s.request_type[request_type_index(ty)] += 1;
                    if by_actor && ty == ResourceType::Script {
                        s.script_fetches_by_actor += 1;
                    }
                }
            }
            EdgeKind::HttpResponse => {
                let bytes = edge.attrs.size_bytes.unwrap_or(0);
                s.response_bytes_total += bytes;
                s.largest_response = s.largest_response.max(bytes);
            }
            EdgeKind::StorageSet | EdgeKind::StorageRead | EdgeKind::StorageDelete => {
                s.storage_ops += 1;
                if by_actor {
                    s.storage_ops_by_actor += 1;
                }
            }
            EdgeKind::EventListenerAdd => {
                s.listener_adds += 1;
                if by_actor {
                    s.listener_adds_by_actor += 1;
                }
                if dst_kind == Some(NodeKind::DomNode) {
                    listener_targets.insert(edge.dst);
                }
            }
            EdgeKind::NodeCreate => {
                if dst_kind == Some(NodeKind::DomNode) {
                    s.dom_creations += 1;
                    if by_actor {
                        s.dom_created_by_actor += 1;
                    }
                }
                if by_actor && dst_kind == Some(NodeKind::TextNode) {
                    s.text_created_by_actor += 1;
                }
                if src_kind == Some(NodeKind::Parser) {
                    s.parser_creations += 1;
                }
            }
            EdgeKind::ApiCall => {
                if let Some(&idx) = api_node_prefix.get(&edge.dst) {
                    s.api_prefix_calls[idx] += 1;
                }
                if by_actor {
                    s.api_calls_by_actor += 1;
                }
            }
            _ => {}
        }
    }
    s.listener_target_doms = listener_targets.len() as u64;
    s
}

/// Aggregates over the flipped-resource set of one triple.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FlippedStats {
    pub count: u64,
    pub scripts: u64,
    pub images: u64,
    pub xhr: u64,
    /// Pre-recording response bytes of flipped resources fetched by page
    /// elements (not by script actors).
    pub element_fetch_bytes: u64,
    pub largest_blocked_bytes: u64,
}

/// Computes [`FlippedStats`] against the pre recording.
pub fn flipped_stats(pre: &PageGraph, flips: &[FlippedResource]) -> FlippedStats {
    let mut stats = FlippedStats {
        count: flips.len() as u64,
        ..FlippedStats::default()
    };
    for flip in flips {
        match flip.request_type {
            Some(ResourceType::Script) => stats.scripts += 1,
            Some(ResourceType::Image) => stats.images += 1,
            Some(ResourceType::Xhr) => stats.xhr += 1,
            _ => {}
        }
        let fetched_by_actor = pre
            .in_edges(flip.node)
            .filter(|e| e.kind == EdgeKind::HttpRequest)
            .any(|e| pre.node(e.src).map(|n| n.kind) == Some(NodeKind::ScriptActor));
        let bytes: u64 = pre
            .incident_edges(flip.node)
            .filter(|e| e.kind == EdgeKind::HttpResponse)
            .map(|e| e.attrs.size_bytes.unwrap_or(0))
            .sum();
        if !fetched_by_actor {
            stats.element_fetch_bytes += bytes;
        }
        stats.largest_blocked_bytes = stats.largest_blocked_bytes.max(bytes);
    }
    stats
}

/// Total response bytes recorded in a graph.
pub fn response_bytes_total(g: &PageGraph) -> u64 {
    g.edges()
        .iter()
        .filter(|e| e.kind == EdgeKind::HttpResponse)
        .map(|e| e.attrs.size_bytes.unwrap_or(0))
        .sum()
}

struct Ctx<'a> {
    page: &'a GraphSummary,
    intv: &'a GraphSummary,
    post_bytes: u64,
    flips: &'a FlippedStats,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        f64::NAN
    } else {
        num / den
    }
}

fn compute(source: Source, ctx: &Ctx<'_>) -> f64 {
    let page = ctx.page;
    let intv = ctx.intv;
    let flips = ctx.flips;
    match source {
        Source::DeltaBytes => page.response_bytes_total as f64 - ctx.post_bytes as f64,
        Source::ElementFetchBytes => flips.element_fetch_bytes as f64,
        Source::LargestBlockedBytes => flips.largest_blocked_bytes as f64,
        Source::PostResponseBytes => ctx.post_bytes as f64,
        Source::FlippedShareScripts => ratio(flips.scripts as f64, flips.count as f64),
        Source::FlippedCount => flips.count as f64,
        Source::FlippedScripts => flips.scripts as f64,
        Source::FlippedImages => flips.images as f64,
        Source::FlippedXhr => flips.xhr as f64,
        Source::FlippedRatio => ratio(flips.count as f64, page.resources as f64),
        Source::ScriptsFetchedByBlocked => intv.script_fetches_by_actor as f64,
        Source::BlockedFetchesScriptsFlag => (intv.script_fetches_by_actor > 0) as u64 as f64,
        Source::DomCreatedByBlocked => intv.dom_created_by_actor as f64,
        Source::TextCreatedByBlocked => intv.text_created_by_actor as f64,
        Source::ListenerAddsByBlocked => intv.listener_adds_by_actor as f64,
        Source::StorageOpsByBlocked => intv.storage_ops_by_actor as f64,
        Source::ApiCallsByBlocked => intv.api_calls_by_actor as f64,
        Source::IntvNodes => intv.nodes as f64,
        Source::IntvEdges => intv.edges as f64,
        Source::IntvNodeRatio => ratio(intv.nodes as f64, page.nodes as f64),
        Source::IntvEdgeRatio => ratio(intv.edges as f64, page.edges as f64),
        Source::IntvBytesRatio => ratio(intv.response_bytes_total as f64, page.response_bytes_total as f64),
        Source::SubdocumentRatio => {
            let idx = request_type_index(ResourceType::Subdocument);
            ratio(intv.request_type[idx] as f64, page.request_type[idx] as f64)
        }
        Source::ListenerTargetDoms => intv.listener_target_doms as f64,
        Source::PageNodes => page.nodes as f64,
        Source::PageEdges => page.edges as f64,
        Source::PageResources => page.resources as f64,
        Source::PageTextNodes => page.text_nodes as f64,
        Source::PageTagIframe => page.tag[tags::index("iframe")] as f64,
        Source::PageTagScript => page.tag[tags::index("script")] as f64,
        Source::PageResponseBytes => page.response_bytes_total as f64,
        Source::PageLargestResponse => page.largest_response as f64,
        Source::PageStorageOps => page.storage_ops as f64,
        Source::PageApiCalls => page.edge_kind[edge_kind_index(EdgeKind::ApiCall)] as f64,
        Source::PageListeners => page.listener_adds as f64,
        Source::PageDomCreations => page.dom_creations as f64,
        Source::PageParserCreations => page.parser_creations as f64,
        Source::PageResourceHosts => page.distinct_resource_hosts as f64,
        Source::IntvResourceHosts => intv.distinct_resource_hosts as f64,
        Source::ResourceHostRatio => {
            ratio(intv.distinct_resource_hosts as f64, page.distinct_resource_hosts as f64)
        }
        Source::NodeKindGrid { intv: in_intv, ratio: is_ratio, idx } => {
            grid_value(page.node_kind[idx as usize], intv.node_kind[idx as usize], in_intv, is_ratio)
        }
        Source::EdgeKindGrid { intv: in_intv, ratio: is_ratio, idx } => {
            grid_value(page.edge_kind[idx as usize], intv.edge_kind[idx as usize], in_intv, is_ratio)
        }
        Source::RequestTypeGrid { intv: in_intv, ratio: is_ratio, idx } => grid_value(
            page.request_type[idx as usize],
            intv.request_type[idx as usize],
            in_intv,
            is_ratio,
        ),
        Source::TagGrid { intv: in_intv, ratio: is_ratio, idx } => {
            grid_value(page.tag[idx as usize], intv.tag[idx as usize], in_intv, is_ratio)
        }
        Source::ApiGrid { intv: in_intv, ratio: is_ratio, idx } => grid_value(
            page.api_prefix_calls[idx as usize],
            intv.api_prefix_calls[idx as usize],
            in_intv,
            is_ratio,
        ),
    }
}

fn grid_value(page: u64, intv: u64, in_intv: bool, is_ratio: bool) -> f64 {
    if is_ratio {
        ratio(intv as f64, page as f64)
    } else if in_intv {
        intv as f64
    } else {
        page as f64
    }
}

/// One extracted example: id, label, and one value per schema column
/// (missing = NaN).
#[derive(Debug, Clone)]
pub struct FeatureRow {
    pub example_id: String,
    pub label: Label,
    pub values: Vec<f64>,
}

impl PartialEq for FeatureRow {
    fn eq(&self, other: &Self) -> bool {
        self.example_id == other.example_id
            && self.label == other.label
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a == b || (a.is_nan() && b.is_nan()))
    }
}

/// Extracts the full feature vector for one example.
pub fn extract(schema: &FeatureSchema, example: &LabeledTriple) -> FeatureRow {
    let triple = &example.triple;
    let page = summarize(&triple.pre);
    let intv = summarize(&triple.intervention);
    let post_bytes = response_bytes_total(&triple.post);
    let flips = flipped_resources(&triple.pre, &triple.post);
    let stats = flipped_stats(&triple.pre, &flips);
    let ctx = Ctx {
        page: &page,
        intv: &intv,
        post_bytes,
        flips: &stats,
    };
    let values = schema.specs().iter().map(|spec| compute(spec.source, &ctx)).collect();
    FeatureRow {
        example_id: triple.example_id.clone(),
        label: example.label,
        values,
    }
}

/// Extracts every example, preserving input order.
pub fn extract_dataset(schema: &FeatureSchema, examples: &[LabeledTriple]) -> Vec<FeatureRow> {
    examples
        .par_iter()
        .map(|example| extract(schema, example))
        .collect()
}

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("column {index}: header says `{found}`, schema says `{expected}`")]
    HeaderMismatch {
        index: usize,
        expected: String,
        found: String,
    },
    #[error("row {row}: unknown label `{label}`")]
    BadLabel { row: usize, label: String },
    #[error("row {row}, column `{column}`: `{value}` is not a number")]
    BadValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("header has {found} columns, schema expects {expected}")]
    WrongColumnCount { expected: usize, found: usize },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// Writes rows as CSV: `example_id,label,<feature…>`, missing values as empty
/// cells.
pub fn write_csv<W: Write>(writer: W, schema: &FeatureSchema, rows: &[FeatureRow]) -> Result<(), FeatureError> {
    let mut out = csv::Writer::from_writer(writer);
    let mut header = vec!["example_id".to_string(), "label".to_string()];
    header.extend(schema.names().map(str::to_string));
    out.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for row in rows {
        record.clear();
        record.push(row.example_id.clone());
        record.push(row.label.as_str().to_string());
        for &v in &row.values {
            record.push(if v.is_nan() { String::new() } else { format_value(v) });
        }
        out.write_record(&record)?;
    }
    out.flush()?;
    Ok(())
}

/// Shortest representation that round-trips through `f64` parsing.
fn format_value(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Reads a CSV produced by [`write_csv`], checking the header against the
/// schema column by column.
pub fn read_csv<R: Read>(reader: R, schema: &FeatureSchema) -> Result<Vec<FeatureRow>, FeatureError> {
    let mut input = csv::Reader::from_reader(reader);
    {
        let header = input.headers()?.clone();
        let expected_len = schema.len() + 2;
        if header.len() != expected_len {
            return Err(FeatureError::WrongColumnCount {
                expected: expected_len,
                found: header.len(),
            });
        }
        let mut expected = vec!["example_id", "label"];
        expected.extend(schema.names());
        for (i, (found, want)) in header.iter().zip(&expected).enumerate() {
            if found != *want {
                return Err(FeatureError::HeaderMismatch {
                    index: i,
                    expected: want.to_string(),
                    found: found.to_string(),
                });
            }
        }
    }
    let mut rows = Vec::new();
    for (row_idx, record) in input.records().enumerate() {
        let record = record?;
        let example_id = record.get(0).unwrap_or("").to_string();
        let label_str = record.get(1).unwrap_or("");
        let label = match label_str {
            "broken" => Label::Broken,
            "working" => Label::Working,
            other => {
                return Err(FeatureError::BadLabel {
                    row: row_idx + 1,
                    label: other.to_string(),
                })
            }
        };
        let mut values = Vec::with_capacity(schema.len());
        for (i, cell) in record.iter().skip(2).enumerate() {
            if cell.is_empty() {
                values.push(f64::NAN);
            } else {
                values.push(cell.parse().map_err(|_| FeatureError::BadValue {
                    row: row_idx + 1,
                    column: schema.specs()[i].name.clone(),
                    value: cell.to_string(),
                })?);
            }
        }
        rows.push(FeatureRow {
            example_id,
            label,
            values,
        });
    }
    Ok(rows)
}

/// Writes the schema as JSONL, one `{index, name, scope, value, category}`
/// object per column.
pub fn write_schema_manifest<W: Write>(mut writer: W, schema: &FeatureSchema) -> std::io::Result<()> {
    #[derive(Serialize)]
    struct Row<'a> {
        index: usize,
        #[serde(flatten)]
        spec: &'a FeatureSpec,
    }
    for (index, spec) in schema.specs().iter().enumerate() {
        let row = Row { index, spec };
        serde_json::to_writer(&mut writer, &row)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}
