//! GraphML serialization for page graphs.
//!
//! The writer emits a canonical form — keys in a fixed order, nodes and edges
//! sorted by id, attributes in declaration order — so the same graph always
//! serializes to the same bytes. The loader accepts any key ids as long as
//! the declared attribute names match the schema, and validates the result
//! through [`PageGraph::new`].
//!
//! Node ids serialize as `n<id>`, edge ids as `e<id>`.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use quick_xml::events::Event;
use quick_xml::Reader;

use super::{
    EdgeAttrs, EdgeId, EdgeKind, GraphEdge, GraphError, GraphNode, NodeAttrs, NodeId, NodeKind,
    PageGraph, StorageKind,
};
use crate::filter::ResourceType;

const NS: &str = "http://graphml.graphdrawing.org/xmlns";

/// (key id, domain, attribute name, GraphML type)
const KEYS: &[(&str, &str, &str, &str)] = &[
    ("g_page_url", "graph", "page_url", "string"),
    ("v_kind", "node", "kind", "string"),
    ("v_tag", "node", "tag", "string"),
    ("v_url", "node", "url", "string"),
    ("v_api_name", "node", "api_name", "string"),
    ("v_storage_kind", "node", "storage_kind", "string"),
    ("v_text_len", "node", "text_len", "long"),
    ("v_frame_id", "node", "frame_id", "long"),
    ("e_kind", "edge", "kind", "string"),
    ("e_request_type", "edge", "request_type", "string"),
    ("e_status", "edge", "status", "long"),
    ("e_size_bytes", "edge", "size_bytes", "long"),
    ("e_key", "edge", "key", "string"),
    ("e_cross_frame", "edge", "cross_frame", "boolean"),
];

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn write_data<W: Write>(w: &mut W, indent: &str, key: &str, value: &str) -> std::io::Result<()> {
    writeln!(w, "{indent}<data key=\"{key}\">{}</data>", escape(value))
}

/// Writes `g` in canonical GraphML form.
pub fn save_graphml<W: Write>(g: &PageGraph, mut w: W) -> Result<(), GraphError> {
    writeln!(w, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>")?;
    writeln!(w, "<graphml xmlns=\"{NS}\">")?;
    for (id, domain, name, ty) in KEYS {
        writeln!(w, "  <key id=\"{id}\" for=\"{domain}\" attr.name=\"{name}\" attr.type=\"{ty}\"/>")?;
    }
    writeln!(w, "  <graph id=\"G\" edgedefault=\"directed\">")?;
    write_data(&mut w, "    ", "g_page_url", g.page_url())?;

    for node in g.nodes() {
        writeln!(w, "    <node id=\"{}\">", node.id)?;
        write_data(&mut w, "      ", "v_kind", node.kind.as_str())?;
        let a = &node.attrs;
        if let Some(tag) = &a.tag {
            write_data(&mut w, "      ", "v_tag", tag)?;
        }
        if let Some(url) = &a.url {
            write_data(&mut w, "      ", "v_url", url)?;
        }
        if let Some(api) = &a.api_name {
            write_data(&mut w, "      ", "v_api_name", api)?;
        }
        if let Some(storage) = a.storage_kind {
            write_data(&mut w, "      ", "v_storage_kind", storage.as_str())?;
        }
        if let Some(len) = a.text_len {
            write_data(&mut w, "      ", "v_text_len", &len.to_string())?;
        }
        if let Some(frame) = a.frame_id {
            write_data(&mut w, "      ", "v_frame_id", &frame.to_string())?;
        }
        writeln!(w, "    </node>")?;
    }

    for edge in g.edges() {
        writeln!(w, "    <edge id=\"{}\" source=\"{}\" target=\"{}\">", edge.id, edge.src, edge.dst)?;
        write_data(&mut w, "      ", "e_kind", edge.kind.as_str())?;
        let a = &edge.attrs;
        if let Some(ty) = a.request_type {
            write_data(&mut w, "      ", "e_request_type", ty.as_str())?;
        }
        if let Some(status) = a.status {
            write_data(&mut w, "      ", "e_status", &status.to_string())?;
        }
        if let Some(size) = a.size_bytes {
            write_data(&mut w, "      ", "e_size_bytes", &size.to_string())?;
        }
        if let Some(key) = &a.key {
            write_data(&mut w, "      ", "e_key", key)?;
        }
        if let Some(cross) = a.cross_frame {
            write_data(&mut w, "      ", "e_cross_frame", if cross { "true" } else { "false" })?;
        }
        writeln!(w, "    </edge>")?;
    }

    writeln!(w, "  </graph>")?;
    writeln!(w, "</graphml>")?;
    Ok(())
}

fn schema_err<T>(msg: impl Into<String>) -> Result<T, GraphError> {
    Err(GraphError::Schema(msg.into()))
}

fn parse_prefixed_id(value: &str, prefix: char, what: &str) -> Result<u64, GraphError> {
    value
        .strip_prefix(prefix)
        .and_then(|digits| digits.parse().ok())
        .ok_or_else(|| GraphError::Schema(format!("malformed {what} id `{value}`")))
}

#[derive(Default)]
struct PendingNode {
    id: u64,
    kind: Option<NodeKind>,
    attrs: NodeAttrs,
}

#[derive(Default)]
struct PendingEdge {
    id: u64,
    src: u64,
    dst: u64,
    kind: Option<EdgeKind>,
    attrs: EdgeAttrs,
}

enum Scope {
    Graph,
    Node(PendingNode),
    Edge(PendingEdge),
}

fn parse_number<T: std::str::FromStr>(value: &str, name: &str) -> Result<T, GraphError> {
    value
        .parse()
        .map_err(|_| GraphError::Schema(format!("attribute `{name}` has non-numeric value `{value}`")))
}

fn apply_node_attr(node: &mut PendingNode, name: &str, value: &str) -> Result<(), GraphError> {
    match name {
        "kind" => {
            node.kind = Some(
                NodeKind::from_str_opt(value)
                    .ok_or_else(|| GraphError::Schema(format!("unknown node kind `{value}`")))?,
            )
        }
        "tag" => node.attrs.tag = Some(value.to_string()),
        "url" => node.attrs.url = Some(value.to_string()),
        "api_name" => node.attrs.api_name = Some(value.to_string()),
        "storage_kind" => {
            node.attrs.storage_kind = Some(
                StorageKind::from_str_opt(value)
                    .ok_or_else(|| GraphError::Schema(format!("unknown storage kind `{value}`")))?,
            )
        }
        "text_len" => node.attrs.text_len = Some(parse_number(value, name)?),
        "frame_id" => node.attrs.frame_id = Some(parse_number(value, name)?),
        other => return schema_err(format!("unknown node attribute `{other}`")),
    }
    Ok(())
}

fn apply_edge_attr(edge: &mut PendingEdge, name: &str, value: &str) -> Result<(), GraphError> {
    match name {
        "kind" => {
            edge.kind = Some(
                EdgeKind::from_str_opt(value)
                    .ok_or_else(|| GraphError::Schema(format!("unknown edge kind `{value}`")))?,
            )
        }
        "request_type" => {
            edge.attrs.request_type = Some(
                ResourceType::from_str_opt(value)
                    .ok_or_else(|| GraphError::Schema(format!("unknown request type `{value}`")))?,
            )
        }
        "status" => edge.attrs.status = Some(parse_number(value, name)?),
        "size_bytes" => edge.attrs.size_bytes = Some(parse_number(value, name)?),
        "key" => edge.attrs.key = Some(value.to_string()),
        "cross_frame" => {
            edge.attrs.cross_frame = Some(match value {
                "true" => true,
                "false" => false,
                other => return schema_err(format!("cross_frame must be true/false, got `{other}`")),
            })
        }
        other => return schema_err(format!("unknown edge attribute `{other}`")),
    }
    Ok(())
}

/// Reads GraphML and validates it into a [`PageGraph`].
pub fn load_graphml<R: BufRead>(reader: R) -> Result<PageGraph, GraphError> {
    let mut xml = Reader::from_reader(reader);
    xml.trim_text(true);

    // Declared key id -> (domain, attribute name).
    let mut keys: HashMap<String, (String, String)> = HashMap::new();
    let mut page_url: Option<String> = None;
    let mut nodes: Vec<GraphNode> = Vec::new();
    let mut edges: Vec<GraphEdge> = Vec::new();
    let mut scope = Scope::Graph;
    let mut data_key: Option<String> = None;
    let mut data_text = String::new();
    let mut buf = Vec::new();

    fn attr_of(e: &quick_xml::events::BytesStart<'_>, name: &str) -> Result<Option<String>, GraphError> {
        for attr in e.attributes() {
            let attr = attr.map_err(|err| GraphError::Schema(err.to_string()))?;
            if attr.key.as_ref() == name.as_bytes() {
                let value = attr
                    .unescape_value()
                    .map_err(|err| GraphError::Schema(err.to_string()))?;
                return Ok(Some(value.into_owned()));
            }
        }
        Ok(None)
    }

    fn required(e: &quick_xml::events::BytesStart<'_>, name: &str) -> Result<String, GraphError> {
        attr_of(e, name)?.ok_or_else(|| GraphError::Schema(format!("<{:?}> missing `{name}` attribute", e.name())))
    }

    loop {
        let event = xml.read_event_into(&mut buf)?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let is_empty = matches!(event, Event::Empty(_));
                match e.name().as_ref() {
                    b"key" => {
                        let id = required(e, "id")?;
                        let domain = required(e, "for")?;
                        let name = required(e, "attr.name")?;
                        keys.insert(id, (domain, name));
                    }
                    b"node" => {
                        let id = parse_prefixed_id(&required(e, "id")?, 'n', "node")?;
                        let pending = PendingNode { id, ..PendingNode::default() };
                        if is_empty {
                            return schema_err(format!("node n{id} has no `kind` attribute"));
                        }
                        scope = Scope::Node(pending);
                    }
                    b"edge" => {
                        let id = parse_prefixed_id(&required(e, "id")?, 'e', "edge")?;
                        let src = parse_prefixed_id(&required(e, "source")?, 'n', "node")?;
                        let dst = parse_prefixed_id(&required(e, "target")?, 'n', "node")?;
                        if is_empty {
                            return schema_err(format!("edge e{id} has no `kind` attribute"));
                        }
                        scope = Scope::Edge(PendingEdge { id, src, dst, ..PendingEdge::default() });
                    }
                    b"data" => {
                        data_key = Some(required(e, "key")?);
                        data_text.clear();
                        if is_empty {
                            apply_data(&mut scope, &keys, &mut page_url, data_key.take().unwrap(), "")?;
                        }
                    }
                    b"graphml" | b"graph" => {}
                    other => {
                        return schema_err(format!(
                            "unexpected element <{}>",
                            String::from_utf8_lossy(other)
                        ));
                    }
                }
            }
            Event::Text(ref t) => {
                if data_key.is_some() {
                    data_text.push_str(&t.unescape().map_err(|err| GraphError::Schema(err.to_string()))?);
                }
            }
            Event::End(ref e) => match e.name().as_ref() {
                b"data" => {
                    if let Some(key) = data_key.take() {
                        let text = std::mem::take(&mut data_text);
                        apply_data(&mut scope, &keys, &mut page_url, key, &text)?;
                    }
                }
                b"node" => {
                    let Scope::Node(pending) = std::mem::replace(&mut scope, Scope::Graph) else {
                        return schema_err("unbalanced </node>");
                    };
                    let kind = pending
                        .kind
                        .ok_or_else(|| GraphError::Schema(format!("node n{} has no `kind` attribute", pending.id)))?;
                    nodes.push(GraphNode { id: NodeId(pending.id), kind, attrs: pending.attrs });
                }
                b"edge" => {
                    let Scope::Edge(pending) = std::mem::replace(&mut scope, Scope::Graph) else {
                        return schema_err("unbalanced </edge>");
                    };
                    let kind = pending
                        .kind
                        .ok_or_else(|| GraphError::Schema(format!("edge e{} has no `kind` attribute", pending.id)))?;
                    edges.push(GraphEdge {
                        id: EdgeId(pending.id),
                        src: NodeId(pending.src),
                        dst: NodeId(pending.dst),
                        kind,
                        attrs: pending.attrs,
                    });
                }
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }

    let page_url = page_url.ok_or_else(|| GraphError::Schema("missing graph-level `page_url`".into()))?;
    PageGraph::new(page_url, nodes, edges)
}

fn apply_data(
    scope: &mut Scope,
    keys: &HashMap<String, (String, String)>,
    page_url: &mut Option<String>,
    key_id: String,
    value: &str,
) -> Result<(), GraphError> {
    let Some((domain, name)) = keys.get(&key_id) else {
        return schema_err(format!("data references undeclared key `{key_id}`"));
    };
    match (scope, domain.as_str()) {
        (Scope::Graph, "graph") => {
            if name == "page_url" {
                *page_url = Some(value.to_string());
                Ok(())
            } else {
                schema_err(format!("unknown graph attribute `{name}`"))
            }
        }
        (Scope::Node(node), "node") => apply_node_attr(node, name, value),
        (Scope::Edge(edge), "edge") => apply_edge_attr(edge, name, value),
        _ => schema_err(format!("key `{key_id}` used outside its `{domain}` domain")),
    }
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::super::{induced_subgraph, NodeAttrs};
    use super::*;
    use rand::seq::SliceRandom;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn to_bytes(g: &PageGraph) -> Vec<u8> {
        let mut buf = Vec::new();
        save_graphml(g, &mut buf).unwrap();
        buf
    }

    fn from_bytes(bytes: &[u8]) -> Result<PageGraph, GraphError> {
        load_graphml(bytes)
    }

    #[test]
    fn image_load_graph_round_trips() {
        let g = image_load_graph();
        let bytes = to_bytes(&g);
        let loaded = from_bytes(&bytes).unwrap();
        assert_eq!(loaded, g);
        // Canonical form: serializing the reloaded graph is byte-identical.
        assert_eq!(to_bytes(&loaded), bytes);
    }

    #[test]
    fn serialized_ids_carry_prefixes() {
        let text = String::from_utf8(to_bytes(&image_load_graph())).unwrap();
        assert!(text.contains("<node id=\"n197\">"));
        assert!(text.contains("<edge id=\"e2\" source=\"n197\" target=\"n218\">"));
        assert!(text.contains("<data key=\"e_request_type\">image</data>"));
        assert!(text.contains("<data key=\"e_size_bytes\">13191</data>"));
    }

    #[test]
    fn empty_graph_round_trips() {
        let g = PageGraph::new("https://empty.example/", vec![], vec![]).unwrap();
        let loaded = from_bytes(&to_bytes(&g)).unwrap();
        assert_eq!(loaded, g);
    }

    #[test]
    fn special_characters_survive_escaping() {
        let mut res = resource(2, "https://a.com/x?a=1&b=\"<q>'");
        res.attrs.frame_id = Some(3);
        let mut parser = node(1, super::super::NodeKind::Parser);
        parser.attrs.frame_id = Some(3);
        let g = PageGraph::new("https://a.com/?q=<&>", vec![parser, res], vec![]).unwrap();
        let loaded = from_bytes(&to_bytes(&g)).unwrap();
        assert_eq!(loaded, g);
    }

    #[test]
    fn loader_accepts_foreign_key_ids() {
        let text = r#"<?xml version="1.0" encoding="UTF-8"?>
<graphml xmlns="http://graphml.graphdrawing.org/xmlns">
  <key id="d0" for="graph" attr.name="page_url" attr.type="string"/>
  <key id="d1" for="node" attr.name="kind" attr.type="string"/>
  <graph id="G" edgedefault="directed">
    <data key="d0">https://a.com/</data>
    <node id="n1"><data key="d1">parser</data></node>
  </graph>
</graphml>
"#;
        let g = from_bytes(text.as_bytes()).unwrap();
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.page_url(), "https://a.com/");
    }

    #[test]
    fn loader_rejects_unknown_kinds_and_attrs() {
        let base = r#"<?xml version="1.0"?>
<graphml>
  <key id="d0" for="graph" attr.name="page_url"/>
  <key id="d1" for="node" attr.name="kind"/>
  <key id="d2" for="node" attr.name="color"/>
  <graph>
    <data key="d0">u</data>
    <node id="n1"><data key="d1">parser</data><data key="d2">red</data></node>
  </graph>
</graphml>"#;
        assert!(matches!(from_bytes(base.as_bytes()), Err(GraphError::Schema(_))));

        let bad_kind = base.replace("parser</data><data key=\"d2\">red</data>", "zeppelin</data>");
        assert!(matches!(from_bytes(bad_kind.as_bytes()), Err(GraphError::Schema(_))));
    }

    #[test]
    fn loader_rejects_malformed_ids_and_missing_page_url() {
        let bad_id = r#"<?xml version="1.0"?>
<graphml>
  <key id="d0" for="graph" attr.name="page_url"/>
  <key id="d1" for="node" attr.name="kind"/>
  <graph>
    <data key="d0">u</data>
    <node id="x1"><data key="d1">parser</data></node>
  </graph>
</graphml>"#;
        assert!(matches!(from_bytes(bad_id.as_bytes()), Err(GraphError::Schema(_))));

        let no_url = r#"<?xml version="1.0"?>
<graphml>
  <key id="d1" for="node" attr.name="kind"/>
  <graph>
    <node id="n1"><data key="d1">parser</data></node>
  </graph>
</graphml>"#;
        assert!(matches!(from_bytes(no_url.as_bytes()), Err(GraphError::Schema(_))));
    }

    #[test]
    fn subgraphs_without_parsers_still_load() {
        let g = image_load_graph();
        let nodes: BTreeSet<_> = [crate::graph::NodeId(197), crate::graph::NodeId(218)].into();
        let edges: BTreeSet<_> = [crate::graph::EdgeId(2), crate::graph::EdgeId(3)].into();
        let sub = induced_subgraph(&g, &nodes, &edges).unwrap();
        let loaded = from_bytes(&to_bytes(&sub)).unwrap();
        assert_eq!(loaded, sub);
    }

    /// A randomized structural graph for round-trip fuzzing.
    fn random_graph(seed: u64) -> PageGraph {
        use super::super::{EdgeKind, NodeKind};
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut nodes = vec![node(0, NodeKind::Parser)];
        let n: u64 = rng.gen_range(2..20);
        for id in 1..n {
            let pick = rng.gen_range(0..6);
            let mut gn = match pick {
                0 => dom(id, ["div", "span", "img", "script", "x-custom"].choose(&mut rng).unwrap()),
                1 => resource(id, &format!("https://r{id}.example/a?x=1&y=2")),
                2 => node(id, NodeKind::ScriptActor),
                3 => GraphNode {
                    attrs: NodeAttrs {
                        api_name: Some("window.navigator.userAgent".into()),
                        ..NodeAttrs::default()
                    },
                    ..node(id, NodeKind::WebApi)
                },
                4 => GraphNode {
                    attrs: NodeAttrs {
                        storage_kind: Some(*StorageKind::ALL.choose(&mut rng).unwrap()),
                        ..NodeAttrs::default()
                    },
                    ..node(id, NodeKind::StorageArea)
                },
                _ => GraphNode {
                    attrs: NodeAttrs {
                        text_len: Some(rng.gen_range(0..500)),
                        ..NodeAttrs::default()
                    },
                    ..node(id, NodeKind::TextNode)
                },
            };
            if rng.gen_bool(0.1) {
                gn.attrs.frame_id = Some(rng.gen_range(1..4));
            }
            nodes.push(gn);
        }
        let mut edges = Vec::new();
        for id in 0..rng.gen_range(0..30) {
            let src = rng.gen_range(0..n);
            let dst = rng.gen_range(0..n);
            let kind = *[
                EdgeKind::Structure,
                EdgeKind::NodeCreate,
                EdgeKind::ApiCall,
                EdgeKind::EventListenerAdd,
                EdgeKind::StorageSet,
            ]
            .choose(&mut rng)
            .unwrap();
            let mut e = edge(id, src, dst, kind);
            if kind == EdgeKind::ApiCall && rng.gen_bool(0.5) {
                e.attrs.cross_frame = Some(rng.gen_bool(0.5));
            }
            if kind == EdgeKind::EventListenerAdd {
                e.attrs.key = Some("click".into());
            }
            edges.push(e);
        }
        PageGraph::new(format!("https://site{seed}.example/"), nodes, edges).unwrap()
    }

    #[test]
    fn random_graphs_round_trip_byte_stably() {
        for seed in 0..40 {
            let g = random_graph(seed);
            let bytes = to_bytes(&g);
            let loaded = from_bytes(&bytes).unwrap();
            assert_eq!(loaded, g, "seed {seed}");
            assert_eq!(to_bytes(&loaded), bytes, "seed {seed}");
        }
    }
}
