//! ```text
//! c optional comments
//! vtree 5
//! L 0 1
//! L 1 2
//! L 2 3
//! I 3 1 2
//! I 4 0 3
//! ```
//! The last node line is the root.

use std::fmt::Write;

use super::{content_lines, expect_len, field};
use crate::error::{Error, Result};
use crate::vtree::{Var, Vtree, VtreeNode};

pub fn parse_vtree(text: &str) -> Result<Vtree> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| Error::parse(0, "empty vtree file"))?;
    if header[0] != "vtree" {
        return Err(Error::parse(hline, "expected header `vtree <node-count>`"));
    }
    expect_len(hline, &header, 2)?;
    let count: usize = field(hline, &header, 1, "node count")?;

    let mut nodes: Vec<Option<VtreeNode>> = vec![None; count];
    let mut defined_at = vec![0usize; count];
    let mut used = vec![false; count];
    let mut seen_vars = std::collections::HashSet::new();
    let mut last = None;
    for (line, tokens) in lines {
        let id: usize = field(line, &tokens, 1, "node id")?;
        if id >= count {
            return Err(Error::parse(line, format!("node id {id} exceeds declared count {count}")));
        }
        if nodes[id].is_some() {
            return Err(Error::parse(line, format!("duplicate id {id}")));
        }
        let node = match tokens[0] {
            "L" => {
                expect_len(line, &tokens, 3)?;
                let raw: u32 = field(line, &tokens, 2, "variable")?;
                let var = Var::new(raw).ok_or_else(|| Error::parse(line, "variables are numbered from 1"))?;
                if !seen_vars.insert(var) {
                    return Err(Error::parse(line, format!("duplicated variable {raw}")));
                }
                VtreeNode::Leaf(var)
            }
            "I" => {
                expect_len(line, &tokens, 4)?;
                let left: usize = field(line, &tokens, 2, "left child")?;
                let right: usize = field(line, &tokens, 3, "right child")?;
                for child in [left, right] {
                    if child >= count || nodes[child].is_none() {
                        return Err(Error::parse(line, format!("dangling reference to node {child}")));
                    }
                }
                if left == right || used[left] || used[right] {
                    return Err(Error::parse(line, "child reused"));
                }
                used[left] = true;
                used[right] = true;
                VtreeNode::Internal { left, right }
            }
            other => return Err(Error::parse(line, format!("unknown record {other:?}"))),
        };
        nodes[id] = Some(node);
        defined_at[id] = line;
        last = Some((line, id));
    }
    let (last_line, root) = last.ok_or_else(|| Error::parse(hline, "vtree has no nodes"))?;
    if let Some(missing) = nodes.iter().position(Option::is_none) {
        return Err(Error::parse(last_line, format!("node {missing} is declared but never defined")));
    }
    if let Some(orphan) = (0..count).find(|&id| id != root && !used[id]) {
        return Err(Error::parse(defined_at[orphan], format!("node {orphan} is not below the root")));
    }
    let nodes = nodes.into_iter().map(Option::unwrap).collect();
    Vtree::new(nodes, root).map_err(|e| Error::parse(last_line, e.to_string()))
}

/// Canonical text: dense ids in storage order. Parses back to an identical
/// vtree whenever children precede parents and the root is stored last, which
/// holds for every vtree built by this crate.
pub fn serialize_vtree(vtree: &Vtree) -> String {
    let mut out = format!("vtree {}\n", vtree.len());
    for (id, node) in vtree.nodes().iter().enumerate() {
        match node {
            VtreeNode::Leaf(v) => writeln!(out, "L {id} {}", v.index()),
            VtreeNode::Internal { left, right } => writeln!(out, "I {id} {left} {right}"),
        }
        .expect("writing to a String");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "vtree 5\nL 0 1\nL 1 2\nL 2 3\nI 3 1 2\nI 4 0 3\n";

    #[test]
    fn toy_round_trip() {
        let vt = parse_vtree(TOY).unwrap();
        assert_eq!(vt.root(), 4);
        assert_eq!(vt.num_vars(), 3);
        assert_eq!(serialize_vtree(&vt), TOY);
    }

    #[test]
    fn comments_anywhere() {
        let text = "c hello\nvtree 1\nc between\nL 0 7\n";
        let vt = parse_vtree(text).unwrap();
        assert_eq!(vt.variables(), vec![Var::new(7).unwrap()]);
    }

    #[test]
    fn errors_carry_lines() {
        let err = |t: &str| match parse_vtree(t) {
            Err(Error::Parse { line, msg }) => (line, msg),
            other => panic!("{other:?}"),
        };
        assert_eq!(err("vtree 4\nL 0 1\nL 1 2\nL 2 3\nI 3 1 1\n"), (5, "child reused".to_string()));
        assert_eq!(err("vtree 2\nL 0 1\nL 0 2\n").0, 3);
        assert!(err("vtree 3\nL 0 1\nL 1 1\nI 2 0 1\n").1.contains("duplicated variable"));
        assert!(err("vtree 3\nL 0 1\nI 2 0 1\nL 1 2\n").1.contains("dangling"));
        assert!(err("vtree 3\nL 0 1\nL 1 2\nL 2 3\n").1.contains("not below the root"));
    }
}
