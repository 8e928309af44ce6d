//! Minimal GraphML writer for undirected weighted networks.

use std::io::{self, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttrType {
    Int,
    Double,
    String,
}

impl AttrType {
    fn as_str(self) -> &'static str {
        match self {
            AttrType::Int => "int",
            AttrType::Double => "double",
            AttrType::String => "string",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphNode {
    pub id: String,
    /// One value per node key; `None` omits the attribute.
    pub attrs: Vec<Option<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphEdge {
    pub source: String,
    pub target: String,
    pub attrs: Vec<Option<String>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GraphMl {
    pub node_keys: Vec<(String, AttrType)>,
    pub edge_keys: Vec<(String, AttrType)>,
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

pub fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
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

fn write_data(out: &mut impl Write, prefix: &str, attrs: &[Option<String>]) -> io::Result<()> {
    for (i, value) in attrs.iter().enumerate() {
        if let Some(v) = value {
            writeln!(out, "      <data key=\"{prefix}{i}\">{}</data>", escape_xml(v))?;
        }
    }
    Ok(())
}

impl GraphMl {
    pub fn write(&self, mut out: impl Write) -> io::Result<()> {
        writeln!(out, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>")?;
        writeln!(out, "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">")?;
        for (prefix, target, keys) in [("n", "node", &self.node_keys), ("e", "edge", &self.edge_keys)] {
            for (i, (name, ty)) in keys.iter().enumerate() {
                writeln!(
                    out,
                    "  <key id=\"{prefix}{i}\" for=\"{target}\" attr.name=\"{}\" attr.type=\"{}\"/>",
                    escape_xml(name),
                    ty.as_str()
                )?;
            }
        }
        writeln!(out, "  <graph id=\"G\" edgedefault=\"undirected\">")?;
        for node in &self.nodes {
            writeln!(out, "    <node id=\"{}\">", escape_xml(&node.id))?;
            write_data(&mut out, "n", &node.attrs)?;
            writeln!(out, "    </node>")?;
        }
        for edge in &self.edges {
            writeln!(
                out,
                "    <edge source=\"{}\" target=\"{}\">",
                escape_xml(&edge.source),
                escape_xml(&edge.target)
            )?;
            write_data(&mut out, "e", &edge.attrs)?;
            writeln!(out, "    </edge>")?;
        }
        writeln!(out, "  </graph>")?;
        writeln!(out, "</graphml>")?;
        out.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escapes_markup() {
        assert_eq!(escape_xml("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }

    #[test]
    fn writes_keys_nodes_edges() {
        let g = GraphMl {
            node_keys: vec![("size".into(), AttrType::Int)],
            edge_keys: vec![("weight".into(), AttrType::Double)],
            nodes: vec![
                GraphNode {
                    id: "a&b".into(),
                    attrs: vec![Some("3".into())],
                },
                GraphNode {
                    id: "c".into(),
                    attrs: vec![None],
                },
            ],
            edges: vec![GraphEdge {
                source: "a&b".into(),
                target: "c".into(),
                attrs: vec![Some("0.5".into())],
            }],
        };
        let mut buf = Vec::new();
        g.write(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.contains("<key id=\"n0\" for=\"node\" attr.name=\"size\" attr.type=\"int\"/>"));
        assert!(s.contains("<node id=\"a&amp;b\">\n      <data key=\"n0\">3</data>"));
        assert!(s.contains("<node id=\"c\">\n    </node>"));
        assert!(s.contains("<edge source=\"a&amp;b\" target=\"c\">"));
        assert!(s.trim_end().ends_with("</graphml>"));
    }
}
