//! Deterministic generator of labeled synthetic crawls.
//!
//! Each example is a pair of recordings of an invented page: one without any
//! blocking (`pre`) and one in which a filter rule blocks the page's
//! third-party "ad" script (`post`). The rule is applied in *every* example;
//! what distinguishes a broken page from a working one is how much machinery
//! hangs off the blocked script, controlled by `signal_strength`:
//!
//! * the blocked script's own size gets a partial upward shift on broken
//!   pages;
//! * the bytes its actor fetches afterwards shift so strongly that at full
//!   signal the total byte delta between the recordings separates the classes
//!   perfectly — and those child bytes are observable *only* through the
//!   delta;
//! * the number of child scripts it fetches and of DOM nodes it builds shift
//!   moderately (overlapping supports, partial signal).
//!
//! Everything else — background content, benign first-party scripts, meta and
//! link tags, `window.history` API calls — is drawn from label-independent
//! distributions, giving known pure-noise channels. At `signal_strength = 0`
//! every channel is label-independent and a classifier can only reach chance.
//!
//! The post recording is built in a disjoint id space, mimicking real
//! recordings where ids never align across runs; cross-recording matching
//! must therefore go through resource URLs, never ids.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{LabeledTriple, Provenance};
use crate::diff::GraphTriple;
use crate::filter::ResourceType;
use crate::graph::{
    EdgeAttrs, EdgeId, EdgeKind, GraphEdge, GraphNode, NodeAttrs, NodeId, NodeKind, PageGraph,
    StorageKind,
};
use crate::mining::Label;
use crate::seeds::{self, tag};

/// First node/edge id of the post recording; pre ids stay below this.
pub const POST_ID_BASE: u64 = 1_000_000;

const MAX_SIZE: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_examples: usize,
    /// Fraction of examples labeled broken, rounded to a count.
    pub broken_fraction: f64,
    /// 0.0 = no label signal anywhere, 1.0 = byte delta separates perfectly.
    pub signal_strength: f64,
    /// Bounds on the number of background content elements per page.
    pub size_range: (usize, usize),
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            n_examples: 100,
            broken_fraction: 0.5,
            signal_strength: 1.0,
            size_range: (50, 500),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("need at least 2 examples, got {0}")]
    TooFewExamples(usize),
    #[error("broken_fraction must lie in [0, 1], got {0}")]
    BadFraction(f64),
    #[error("signal_strength must lie in [0, 1], got {0}")]
    BadSignal(f64),
    #[error("size_range ({0}, {1}) must satisfy 1 <= lo <= hi <= {MAX_SIZE}")]
    BadSizeRange(usize, usize),
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_examples < 2 {
            return Err(SynthError::TooFewExamples(self.n_examples));
        }
        if !self.broken_fraction.is_finite() || !(0.0..=1.0).contains(&self.broken_fraction) {
            return Err(SynthError::BadFraction(self.broken_fraction));
        }
        if !self.signal_strength.is_finite() || !(0.0..=1.0).contains(&self.signal_strength) {
            return Err(SynthError::BadSignal(self.signal_strength));
        }
        let (lo, hi) = self.size_range;
        if lo < 1 || lo > hi || hi > MAX_SIZE {
            return Err(SynthError::BadSizeRange(lo, hi));
        }
        Ok(())
    }
}

/// Incremental graph assembly with sequential ids.
struct Builder {
    nodes: Vec<GraphNode>,
    edges: Vec<GraphEdge>,
    next_node: u64,
    next_edge: u64,
}

impl Builder {
    fn new(id_base: u64) -> Self {
        Builder {
            nodes: Vec::new(),
            edges: Vec::new(),
            next_node: id_base,
            next_edge: id_base,
        }
    }

    fn add(&mut self, kind: NodeKind, attrs: NodeAttrs) -> NodeId {
        let id = NodeId(self.next_node);
        self.next_node += 1;
        self.nodes.push(GraphNode { id, kind, attrs });
        id
    }

    fn plain(&mut self, kind: NodeKind) -> NodeId {
        self.add(kind, NodeAttrs::default())
    }

    fn dom(&mut self, tag: &str) -> NodeId {
        self.add(
            NodeKind::DomNode,
            NodeAttrs {
                tag: Some(tag.to_string()),
                ..NodeAttrs::default()
            },
        )
    }

    fn text(&mut self, len: u64) -> NodeId {
        self.add(
            NodeKind::TextNode,
            NodeAttrs {
                text_len: Some(len),
                ..NodeAttrs::default()
            },
        )
    }

    fn resource(&mut self, url: &str) -> NodeId {
        self.add(
            NodeKind::NetworkResource,
            NodeAttrs {
                url: Some(url.to_string()),
                ..NodeAttrs::default()
            },
        )
    }

    fn api(&mut self, name: &str) -> NodeId {
        self.add(
            NodeKind::WebApi,
            NodeAttrs {
                api_name: Some(name.to_string()),
                ..NodeAttrs::default()
            },
        )
    }

    fn storage(&mut self, kind: StorageKind) -> NodeId {
        self.add(
            NodeKind::StorageArea,
            NodeAttrs {
                storage_kind: Some(kind),
                ..NodeAttrs::default()
            },
        )
    }

    fn add_edge(&mut self, src: NodeId, dst: NodeId, kind: EdgeKind, attrs: EdgeAttrs) -> EdgeId {
        let id = EdgeId(self.next_edge);
        self.next_edge += 1;
        self.edges.push(GraphEdge {
            id,
            src,
            dst,
            kind,
            attrs,
        });
        id
    }

    fn edge(&mut self, src: NodeId, dst: NodeId, kind: EdgeKind) -> EdgeId {
        self.add_edge(src, dst, kind, EdgeAttrs::default())
    }

    fn listener(&mut self, src: NodeId, dst: NodeId, event: &str) {
        self.add_edge(
            src,
            dst,
            EdgeKind::EventListenerAdd,
            EdgeAttrs {
                key: Some(event.to_string()),
                ..EdgeAttrs::default()
            },
        );
    }

    fn request(&mut self, src: NodeId, dst: NodeId, ty: ResourceType, bytes: u64) {
        self.add_edge(
            src,
            dst,
            EdgeKind::HttpRequest,
            EdgeAttrs {
                request_type: Some(ty),
                size_bytes: Some(bytes),
                ..EdgeAttrs::default()
            },
        );
    }

    fn response(&mut self, src: NodeId, dst: NodeId, bytes: u64) {
        self.add_edge(
            src,
            dst,
            EdgeKind::HttpResponse,
            EdgeAttrs {
                status: Some(200),
                size_bytes: Some(bytes),
                ..EdgeAttrs::default()
            },
        );
    }

    fn build(self, page_url: &str) -> PageGraph {
        PageGraph::new(page_url, self.nodes, self.edges)
            .expect("generated recording violates graph invariants")
    }
}

/// Builds the two recordings in lockstep: twin operations add identical
/// content to both, while the blocked branch goes through `.pre`/`.post`
/// directly.
struct Twin {
    pre: Builder,
    post: Builder,
}

type TwinId = (NodeId, NodeId);

impl Twin {
    fn new() -> Self {
        Twin {
            pre: Builder::new(0),
            post: Builder::new(POST_ID_BASE),
        }
    }

    fn plain(&mut self, kind: NodeKind) -> TwinId {
        (self.pre.plain(kind), self.post.plain(kind))
    }

    fn dom(&mut self, tag: &str) -> TwinId {
        (self.pre.dom(tag), self.post.dom(tag))
    }

    fn text(&mut self, len: u64) -> TwinId {
        (self.pre.text(len), self.post.text(len))
    }

    fn resource(&mut self, url: &str) -> TwinId {
        (self.pre.resource(url), self.post.resource(url))
    }

    fn api(&mut self, name: &str) -> TwinId {
        (self.pre.api(name), self.post.api(name))
    }

    fn storage(&mut self, kind: StorageKind) -> TwinId {
        (self.pre.storage(kind), self.post.storage(kind))
    }

    fn edge(&mut self, src: TwinId, dst: TwinId, kind: EdgeKind) {
        self.pre.edge(src.0, dst.0, kind);
        self.post.edge(src.1, dst.1, kind);
    }

    fn listener(&mut self, src: TwinId, dst: TwinId, event: &str) {
        self.pre.listener(src.0, dst.0, event);
        self.post.listener(src.1, dst.1, event);
    }

    fn request(&mut self, src: TwinId, dst: TwinId, ty: ResourceType, bytes: u64) {
        self.pre.request(src.0, dst.0, ty, bytes);
        self.post.request(src.1, dst.1, ty, bytes);
    }

    fn response(&mut self, src: TwinId, dst: TwinId, bytes: u64) {
        self.pre.response(src.0, dst.0, bytes);
        self.post.response(src.1, dst.1, bytes);
    }
}

/// Generates one example. Deterministic in `(cfg.seed, index, label)`.
pub fn generate_example(cfg: &SynthConfig, index: usize, label: Label) -> LabeledTriple {
    let mut rng = seeds::rng(cfg.seed, &[tag::SYNTH_EXAMPLE, index as u64]);
    let s = cfg.signal_strength;
    let broken = label == Label::Broken;
    let host = format!("site{index:05}.example");
    let page_url = format!("https://{host}/");

    let mut g = Twin::new();
    let parser = g.plain(NodeKind::Parser);
    let mut targets: Vec<TwinId> = Vec::new();

    // Background content: label-independent in every distribution.
    let n_background = rng.gen_range(cfg.size_range.0..=cfg.size_range.1);
    for _ in 0..n_background {
        let tag = *["div", "div", "span", "p"].choose(&mut rng).unwrap();
        let elem = g.dom(tag);
        g.edge(parser, elem, EdgeKind::NodeCreate);
        if rng.gen_bool(0.25) {
            let text = g.text(rng.gen_range(1..=200));
            g.edge(parser, text, EdgeKind::NodeCreate);
            g.edge(elem, text, EdgeKind::Structure);
        }
        targets.push(elem);
    }
    for _ in 0..rng.gen_range(0..=5) {
        let meta = g.dom("meta");
        g.edge(parser, meta, EdgeKind::NodeCreate);
    }
    for _ in 0..rng.gen_range(0..=5) {
        let link = g.dom("link");
        g.edge(parser, link, EdgeKind::NodeCreate);
    }
    for j in 0..rng.gen_range(1..=3) {
        let link = g.dom("link");
        g.edge(parser, link, EdgeKind::NodeCreate);
        let css = g.resource(&format!("https://static.{host}/style{j}.css"));
        g.request(link, css, ResourceType::Stylesheet, rng.gen_range(200..=600));
        g.response(css, link, rng.gen_range(1_000..=20_000));
    }
    for j in 0..rng.gen_range(0..=3) {
        let frame = g.dom("iframe");
        g.edge(parser, frame, EdgeKind::NodeCreate);
        let doc = g.resource(&format!("https://embed.partner{j}.example/widget"));
        g.request(frame, doc, ResourceType::Subdocument, rng.gen_range(200..=600));
        g.response(doc, frame, rng.gen_range(2_000..=15_000));
    }
    for j in 0..rng.gen_range(2..=8) {
        let img = g.dom("img");
        g.edge(parser, img, EdgeKind::NodeCreate);
        let pix = g.resource(&format!("https://static.{host}/img{j}.png"));
        g.request(img, pix, ResourceType::Image, rng.gen_range(200..=600));
        g.response(pix, img, rng.gen_range(500..=10_000));
        targets.push(img);
    }
    // One hero asset dominates the page weight, log-uniform over four
    // decades. The uniform draws above concentrate around their sum's mean;
    // this is the term that actually spreads per-page totals, so that
    // total-relative quantities differ wildly between equally-built pages.
    let hero = g.dom("img");
    g.edge(parser, hero, EdgeKind::NodeCreate);
    let hero_res = g.resource(&format!("https://media.{host}/hero.jpg"));
    g.request(hero, hero_res, ResourceType::Image, rng.gen_range(200..=600));
    let hero_bytes = (2_000.0 * 10_000.0f64.powf(rng.gen::<f64>())) as u64;
    g.response(hero_res, hero, hero_bytes);
    let cookie_jar = g.storage(StorageKind::Cookie);

    // Benign first-party scripts. The window.history calls are a designated
    // pure-noise channel.
    for j in 0..rng.gen_range(1..=3) {
        let elem = g.dom("script");
        g.edge(parser, elem, EdgeKind::NodeCreate);
        let res = g.resource(&format!("https://static.{host}/lib{j}.js"));
        g.request(elem, res, ResourceType::Script, rng.gen_range(200..=600));
        g.response(res, elem, rng.gen_range(5_000..=150_000));
        let actor = g.plain(NodeKind::ScriptActor);
        g.edge(elem, actor, EdgeKind::ScriptExecute);
        for _ in 0..rng.gen_range(0..=4) {
            let div = g.dom("div");
            g.edge(actor, div, EdgeKind::NodeCreate);
            targets.push(div);
        }
        for _ in 0..rng.gen_range(0..=3) {
            let api = g.api("window.history.pushState");
            g.edge(actor, api, EdgeKind::ApiCall);
        }
        for _ in 0..rng.gen_range(0..=4) {
            let name = *["document.querySelector", "window.setTimeout", "window.requestAnimationFrame"]
                .choose(&mut rng)
                .unwrap();
            let api = g.api(name);
            g.edge(actor, api, EdgeKind::ApiCall);
        }
        for _ in 0..rng.gen_range(0..=2) {
            let target = *targets.choose(&mut rng).unwrap();
            let event = *["click", "scroll", "load"].choose(&mut rng).unwrap();
            g.listener(actor, target, event);
        }
        for _ in 0..rng.gen_range(0..=2) {
            g.edge(actor, cookie_jar, EdgeKind::StorageSet);
        }
        if rng.gen_bool(0.3) {
            g.edge(actor, cookie_jar, EdgeKind::StorageRead);
        }
        if rng.gen_bool(0.3) {
            let target = *targets.choose(&mut rng).unwrap();
            g.edge(actor, target, EdgeKind::NodeModify);
        }
    }

    // The third-party branch targeted by the filter rule. Present in full in
    // the pre recording; in the post recording the fetch is blocked, so the
    // actor and everything downstream of it never exist there.
    let shift = |base: f64| (base * s).round() as u64;

    // The script's own size is label-independent; the signal lives in the
    // traffic the script would have caused, which no single recording shows.
    // Only the byte delta between the recordings sees it at full strength.
    // The count channels shift by a single unit over wide label-independent
    // bases, so they support the label weakly without — alone or combined —
    // duplicating the byte delta. The payload splits into at least four
    // pieces, so no single blocked response leaves the range the direct
    // fetch already spans on working pages.
    let bump = if broken { shift(1.0) as usize } else { 0 };
    let direct_bytes = rng.gen_range(500..=6_500u64);
    let n_child_scripts = rng.gen_range(2..=7usize) + bump;
    let n_child_other = rng.gen_range(2..=4usize);
    let child_total = if broken {
        // At s = 1 the floor clears the largest possible working-page delta
        // (6.5k direct + 3k children), keeping the two classes disjoint.
        let lo = shift(10_000.0);
        rng.gen_range(lo..=3_000 + lo)
    } else {
        rng.gen_range(0..=3_000u64)
    };
    let n_created = rng.gen_range(0..=7usize) + bump;

    let ad_elem = g.dom("script");
    g.edge(parser, ad_elem, EdgeKind::NodeCreate);
    let ad_res = g.resource(&format!("https://cdn.adnet{}.example/serve/ad.js", index % 7));
    g.request(ad_elem, ad_res, ResourceType::Script, rng.gen_range(200..=600));

    // The slot shows a fallback asset that loads with or without the blocker.
    // It sits next to the blocked fetch, so it lands inside the changed
    // region, and its size swings over three decades — the bytes seen there
    // are dominated by label-independent content, and only the between-
    // recording difference isolates the blocked traffic.
    let fallback = g.resource(&format!("https://cdn.adnet{}.example/fallback.media", index % 7));
    g.request(ad_elem, fallback, ResourceType::Image, rng.gen_range(200..=600));
    let fallback_bytes = (2_000.0 * 1_000.0f64.powf(rng.gen::<f64>())) as u64;
    g.response(fallback, ad_elem, fallback_bytes);

    // Pre: the script loads and runs.
    g.pre.response(ad_res.0, ad_elem.0, direct_bytes);
    let actor = g.pre.plain(NodeKind::ScriptActor);
    g.pre.edge(ad_elem.0, actor, EdgeKind::ScriptExecute);

    // Post: the rule cancels the fetch instead.
    let rule = g.post.plain(NodeKind::FilterRule);
    g.post.edge(rule, ad_res.1, EdgeKind::ResourceBlock);

    // Child fetches by the blocked actor (pre only). Their bytes surface only
    // through the delta between the recordings.
    let n_children = n_child_scripts + n_child_other;
    let mut child_sizes = vec![0u64; n_children];
    if n_children > 0 {
        let base = child_total / n_children as u64;
        for size in child_sizes.iter_mut() {
            *size = base;
        }
        child_sizes[n_children - 1] = child_total - base * (n_children as u64 - 1);
    }
    for (i, &size) in child_sizes.iter().enumerate() {
        let (url, ty) = if i < n_child_scripts {
            (format!("https://cdn.adnet{}.example/child{i}.js", index % 7), ResourceType::Script)
        } else if rng.gen_bool(0.5) {
            (format!("https://cdn.adnet{}.example/pixel{i}.gif", index % 7), ResourceType::Image)
        } else {
            (format!("https://cdn.adnet{}.example/beacon{i}", index % 7), ResourceType::Xhr)
        };
        let res = g.pre.resource(&url);
        g.pre.request(actor, res, ty, rng.gen_range(200..=600));
        g.pre.response(res, actor, size);
    }

    // DOM work by the blocked actor (pre only).
    for _ in 0..n_created {
        let div = g.pre.dom("div");
        g.pre.edge(actor, div, EdgeKind::NodeCreate);
    }
    for _ in 0..rng.gen_range(0..=2) {
        let text = g.pre.text(rng.gen_range(1..=80));
        g.pre.edge(actor, text, EdgeKind::NodeCreate);
    }
    for _ in 0..rng.gen_range(0..=3) {
        let target = *targets.choose(&mut rng).unwrap();
        let event = *["click", "scroll", "load"].choose(&mut rng).unwrap();
        g.pre.listener(actor, target.0, event);
    }
    for _ in 0..rng.gen_range(0..=2) {
        g.pre.edge(actor, cookie_jar.0, EdgeKind::StorageSet);
    }
    for _ in 0..rng.gen_range(0..=3) {
        let name = *["window.navigator.userAgent", "window.screen.width", "document.referrer"]
            .choose(&mut rng)
            .unwrap();
        let api = g.pre.api(name);
        g.pre.edge(actor, api, EdgeKind::ApiCall);
    }

    let pre = g.pre.build(&page_url);
    let post = g.post.build(&page_url);
    let example_id = format!("synth-{index:05}");
    let triple = GraphTriple::from_pair(example_id, pre, post)
        .expect("recordings of one synthetic page must diff cleanly");
    debug_assert!(!triple.is_effectless(), "the ad fetch always flips");
    LabeledTriple {
        triple,
        label,
        provenance: Provenance::Synthetic,
    }
}

/// Generates the full dataset: labels are assigned by rounding
/// `broken_fraction` to a count and shuffling deterministically.
pub fn generate_dataset(cfg: &SynthConfig) -> Result<Vec<LabeledTriple>, SynthError> {
    cfg.validate()?;
    let n = cfg.n_examples;
    let n_broken = ((n as f64) * cfg.broken_fraction).round() as usize;
    let mut labels = vec![Label::Broken; n_broken.min(n)];
    labels.resize(n, Label::Working);
    let mut order_rng = seeds::rng(cfg.seed, &[tag::SYNTH_ORDER]);
    labels.shuffle(&mut order_rng);
    Ok((0..n)
        .map(|index| generate_example(cfg, index, labels[index]))
        .collect())
}
