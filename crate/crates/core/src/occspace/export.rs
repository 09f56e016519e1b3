//! Network serialization for downstream layout and analysis tools.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::dataset::RiskTable;
use crate::occspace::{OccupationNetwork, Result};

/// Supported network export encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    /// `src dst weight tag` lines plus a `code,label,closeness,risk` node
    /// sidecar written next to the edge file (extension `nodes.csv`).
    EdgeList,
    /// GraphML document with node and edge attributes.
    GraphXml,
    /// Single JSON document `{nodes: [...], edges: [...]}`.
    Json,
}

impl ExportFormat {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "edgelist" => Some(ExportFormat::EdgeList),
            "graph-xml" | "graphml" => Some(ExportFormat::GraphXml),
            "json" => Some(ExportFormat::Json),
            _ => None,
        }
    }
}

#[derive(Serialize)]
struct NodeRecord<'a> {
    code: &'a str,
    label: &'a str,
    closeness: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    risk: Option<f64>,
}

#[derive(Serialize)]
struct EdgeRecord<'a> {
    source: &'a str,
    target: &'a str,
    weight: f64,
    tag: &'a str,
}

#[derive(Serialize)]
struct NetworkDocument<'a> {
    nodes: Vec<NodeRecord<'a>>,
    edges: Vec<EdgeRecord<'a>>,
}

fn document<'a>(
    net: &'a OccupationNetwork,
    closeness_map: &std::collections::BTreeMap<String, f64>,
    risk: &RiskTable,
) -> NetworkDocument<'a> {
    let nodes = net
        .nodes()
        .iter()
        .map(|code| NodeRecord {
            code,
            label: code,
            closeness: closeness_map.get(code).copied().unwrap_or(0.0),
            risk: risk.get(code),
        })
        .collect();
    let edges = net
        .edges()
        .iter()
        .map(|e| EdgeRecord {
            source: &net.nodes()[e.a],
            target: &net.nodes()[e.b],
            weight: e.weight,
            tag: e.tag.as_str(),
        })
        .collect();
    NetworkDocument { nodes, edges }
}

/// `src dst weight tag` lines, one per edge.
pub fn edgelist_string(net: &OccupationNetwork) -> String {
    let mut out = String::new();
    for e in net.edges() {
        writeln!(
            out,
            "{} {} {} {}",
            net.nodes()[e.a],
            net.nodes()[e.b],
            e.weight,
            e.tag.as_str()
        )
        .expect("string write");
    }
    out
}

/// `code,label,closeness,risk` node table; an absent risk is an empty cell.
pub fn nodes_csv_string(
    net: &OccupationNetwork,
    closeness_map: &std::collections::BTreeMap<String, f64>,
    risk: &RiskTable,
) -> String {
    let doc = document(net, closeness_map, risk);
    let mut out = String::from("code,label,closeness,risk\n");
    for n in &doc.nodes {
        let risk_field = n.risk.map(|r| r.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{}", n.code, n.label, n.closeness, risk_field)
            .expect("string write");
    }
    out
}

/// The whole network as one JSON document.
pub fn json_string(
    net: &OccupationNetwork,
    closeness_map: &std::collections::BTreeMap<String, f64>,
    risk: &RiskTable,
) -> String {
    let doc = document(net, closeness_map, risk);
    let mut text = serde_json::to_string_pretty(&doc).expect("network serializes");
    text.push('\n');
    text
}

/// GraphML rendering with node and edge attribute keys.
pub fn graphml_string(
    net: &OccupationNetwork,
    closeness_map: &std::collections::BTreeMap<String, f64>,
    risk: &RiskTable,
) -> String {
    graphml(&document(net, closeness_map, risk))
}

/// Writes the network with node attributes (label, closeness, risk) and
/// edge attributes (weight, tag) in a deterministic field order. The
/// edgelist format also writes a node sidecar next to the edge file with
/// the extension `nodes.csv`.
pub fn export_network(
    net: &OccupationNetwork,
    closeness_map: &std::collections::BTreeMap<String, f64>,
    risk: &RiskTable,
    path: impl AsRef<Path>,
    format: ExportFormat,
) -> Result<()> {
    let path = path.as_ref();
    match format {
        ExportFormat::EdgeList => {
            std::fs::write(path, edgelist_string(net))?;
            std::fs::write(
                path.with_extension("nodes.csv"),
                nodes_csv_string(net, closeness_map, risk),
            )?;
        }
        ExportFormat::Json => {
            std::fs::write(path, json_string(net, closeness_map, risk))?;
        }
        ExportFormat::GraphXml => {
            std::fs::write(path, graphml_string(net, closeness_map, risk))?;
        }
    }
    Ok(())
}

fn graphml(doc: &NetworkDocument<'_>) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    out.push_str("  <key id=\"label\" for=\"node\" attr.name=\"label\" attr.type=\"string\"/>\n");
    out.push_str("  <key id=\"closeness\" for=\"node\" attr.name=\"closeness\" attr.type=\"double\"/>\n");
    out.push_str("  <key id=\"risk\" for=\"node\" attr.name=\"risk\" attr.type=\"double\"/>\n");
    out.push_str("  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n");
    out.push_str("  <key id=\"tag\" for=\"edge\" attr.name=\"tag\" attr.type=\"string\"/>\n");
    out.push_str("  <graph edgedefault=\"undirected\">\n");
    for n in &doc.nodes {
        let _ = writeln!(out, "    <node id=\"{}\">", xml_escape(n.code));
        let _ = writeln!(out, "      <data key=\"label\">{}</data>", xml_escape(n.label));
        let _ = writeln!(out, "      <data key=\"closeness\">{}</data>", n.closeness);
        if let Some(risk) = n.risk {
            let _ = writeln!(out, "      <data key=\"risk\">{risk}</data>");
        }
        out.push_str("    </node>\n");
    }
    for e in &doc.edges {
        let _ = writeln!(
            out,
            "    <edge source=\"{}\" target=\"{}\">",
            xml_escape(e.source),
            xml_escape(e.target)
        );
        let _ = writeln!(out, "      <data key=\"weight\">{}</data>", e.weight);
        let _ = writeln!(out, "      <data key=\"tag\">{}</data>", e.tag);
        out.push_str("    </edge>\n");
    }
    out.push_str("  </graph>\n");
    out.push_str("</graphml>\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::occspace::{build_network, closeness, ProximityMatrix};

    fn two_node_net() -> OccupationNetwork {
        let prox = ProximityMatrix::from_parts(
            vec!["A".into(), "B".into()],
            vec![0.0, 0.9, 0.9, 0.0],
        );
        build_network(&prox, 1.0)
    }

    #[test]
    fn edgelist_single_edge() {
        let net = two_node_net();
        let c = closeness(&net);
        let risk = RiskTable::from_pairs([("A", 0.2), ("B", 0.8)]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.edgelist");
        export_network(&net, &c, &risk, &path, ExportFormat::EdgeList).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "A B 0.9 mst\n");
        let nodes = std::fs::read_to_string(dir.path().join("net.nodes.csv")).unwrap();
        assert!(nodes.starts_with("code,label,closeness,risk\n"));
        assert!(nodes.contains("A,A,1,0.2"));
    }

    #[test]
    fn re_export_is_byte_identical() {
        let net = two_node_net();
        let c = closeness(&net);
        let risk = RiskTable::from_pairs([("A", 0.2), ("B", 0.8)]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for format in [ExportFormat::EdgeList, ExportFormat::Json, ExportFormat::GraphXml] {
            let p1 = dir.path().join("first.out");
            let p2 = dir.path().join("second.out");
            export_network(&net, &c, &risk, &p1, format).unwrap();
            export_network(&net, &c, &risk, &p2, format).unwrap();
            assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        }
    }

    #[test]
    fn json_round_trips_counts() {
        let net = two_node_net();
        let c = closeness(&net);
        let risk = RiskTable::from_pairs([("A", 0.2)]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.json");
        export_network(&net, &c, &risk, &path, ExportFormat::Json).unwrap();
        let value: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(value["nodes"].as_array().unwrap().len(), 2);
        assert_eq!(value["edges"].as_array().unwrap().len(), 1);
        // node B has no risk entry: the field is omitted, not null
        assert!(value["nodes"][1].get("risk").is_none());
    }
}
