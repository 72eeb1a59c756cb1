//! GraphML and edge-list export.

use std::io::Write;

use crate::error::{Error, Result};
use crate::graph::CommGraph;

fn escape(s: &str) -> String {
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

pub fn write_graphml<W: Write>(g: &CommGraph, mut w: W) -> Result<()> {
    let io = |e| Error::io("<output>", e);
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    s.push_str("  <key id=\"id\" for=\"node\" attr.name=\"id\" attr.type=\"string\"/>\n");
    s.push_str("  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"long\"/>\n");
    s.push_str("  <graph id=\"G\" edgedefault=\"directed\">\n");
    for (i, id) in g.nodes().iter().enumerate() {
        s.push_str(&format!(
            "    <node id=\"n{i}\"><data key=\"id\">{}</data></node>\n",
            escape(id.as_str())
        ));
    }
    for a in g.arcs() {
        s.push_str(&format!(
            "    <edge source=\"n{}\" target=\"n{}\"><data key=\"weight\">{}</data></edge>\n",
            a.source, a.target, a.weight
        ));
    }
    s.push_str("  </graph>\n</graphml>\n");
    w.write_all(s.as_bytes()).map_err(io)?;
    w.flush().map_err(io)
}

/// `source,target,weight` with node ids.
pub fn write_edge_list<W: Write>(g: &CommGraph, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["source", "target", "weight"])?;
    for a in g.arcs() {
        wtr.write_record([
            g.node(a.source).as_str(),
            g.node(a.target).as_str(),
            &a.weight.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<output>", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::test_support::digraph;

    #[test]
    fn graphml_lists_nodes_and_weighted_edges() {
        let g = digraph(&["a", "b&\"q\"", "c"], &[("a", "b&\"q\""), ("b&\"q\"", "c")]);
        let mut buf = Vec::new();
        write_graphml(&g, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.matches("<node ").count(), 3);
        assert_eq!(s.matches("<edge ").count(), 2);
        assert!(s.contains("b&amp;&quot;q&quot;"));
        assert!(s.contains("<data key=\"weight\">1</data>"));
    }

    #[test]
    fn edge_list_rows() {
        let g = digraph(&["a", "b"], &[("a", "b"), ("b", "a")]);
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "source,target,weight\na,b,1\nb,a,1\n");
    }
}
