//! ```text
//! pc v1 toy.vtree
//! T 0 1 2
//! T 1 2 -3
//! A 2 3 0 1
//! O 3 3 1 2 1
//! ```
//! `T <id> <vtree-id> <±var>` is a literal, `A <id> <vtree-id> <left> <right>`
//! an AND gate, `O <id> <vtree-id> <k> (<child> <weight>)×k` an OR gate and
//! `B <bias>` the output offset of a regression circuit. Children must be
//! defined before use; the last gate is the root.

use std::collections::HashMap;
use std::fmt::Write;
use std::path::Path;
use std::sync::Arc;

use super::{content_lines, expect_len, field, format_real, parse_real, parse_vtree};
use crate::circuit::{Circuit, Edge, Literal, Node, Role};
use crate::error::{Error, Result};
use crate::vtree::{Var, Vtree};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitHeader {
    pub role: Role,
    pub vtree_path: String,
}

fn role_tag(role: Role) -> &'static str {
    match role {
        Role::Generative => "pc",
        Role::Discriminative => "rc",
    }
}

pub fn parse_circuit_header(text: &str) -> Result<CircuitHeader> {
    let (line, tokens) = content_lines(text)
        .next()
        .ok_or_else(|| Error::parse(0, "empty circuit file"))?;
    let role = match tokens[0] {
        "pc" => Role::Generative,
        "rc" => Role::Discriminative,
        other => return Err(Error::parse(line, format!("expected `pc` or `rc` header, found {other:?}"))),
    };
    expect_len(line, &tokens, 3)?;
    if tokens[1] != "v1" {
        return Err(Error::parse(line, format!("unsupported version {:?}", tokens[1])));
    }
    Ok(CircuitHeader {
        role,
        vtree_path: tokens[2].to_string(),
    })
}

/// Parses a circuit against an already loaded vtree.
pub fn parse_circuit(text: &str, vtree: Arc<Vtree>) -> Result<Circuit> {
    let header = parse_circuit_header(text)?;
    let mut nodes = Vec::new();
    let mut vmap = Vec::new();
    let mut index: HashMap<usize, usize> = HashMap::new();
    let mut bias = None;
    let mut last_line = 0;
    let vnode = |line: usize, tokens: &[&str]| -> Result<usize> {
        let v: usize = field(line, tokens, 2, "vtree id")?;
        if v >= vtree.len() {
            return Err(Error::parse(line, format!("unknown vtree id {v}")));
        }
        Ok(v)
    };
    for (line, tokens) in content_lines(text).skip(1) {
        last_line = line;
        if tokens[0] == "B" {
            expect_len(line, &tokens, 2)?;
            if header.role == Role::Generative {
                return Err(Error::parse(line, "bias is only allowed in rc files"));
            }
            if bias.replace(parse_real(line, &tokens, 1, "bias")?).is_some() {
                return Err(Error::parse(line, "bias given twice"));
            }
            continue;
        }
        let id: usize = field(line, &tokens, 1, "node id")?;
        if index.contains_key(&id) {
            return Err(Error::parse(line, format!("duplicate id {id}")));
        }
        let child = |tokens: &[&str], i: usize| -> Result<usize> {
            let c: usize = field(line, tokens, i, "child id")?;
            index
                .get(&c)
                .copied()
                .ok_or_else(|| Error::parse(line, format!("reference to undefined node {c}")))
        };
        let node = match tokens[0] {
            "T" => {
                expect_len(line, &tokens, 4)?;
                let lit: i64 = field(line, &tokens, 3, "literal")?;
                let var = u32::try_from(lit.unsigned_abs())
                    .ok()
                    .and_then(Var::new)
                    .ok_or_else(|| Error::parse(line, format!("invalid literal {lit}")))?;
                if !vtree.contains(var) {
                    return Err(Error::parse(line, format!("variable {var} is not in the vtree")));
                }
                Node::Literal(Literal::new(var, lit > 0))
            }
            "A" => {
                expect_len(line, &tokens, 5)?;
                Node::And {
                    left: child(&tokens, 3)?,
                    right: child(&tokens, 4)?,
                }
            }
            "O" => {
                let k: usize = field(line, &tokens, 3, "child count")?;
                if k == 0 {
                    return Err(Error::parse(line, "OR gate needs at least one child"));
                }
                expect_len(line, &tokens, 4 + 2 * k)?;
                let mut edges = Vec::with_capacity(k);
                for j in 0..k {
                    edges.push(Edge {
                        child: child(&tokens, 4 + 2 * j)?,
                        weight: parse_real(line, &tokens, 5 + 2 * j, "weight")?,
                    });
                }
                Node::Or(edges)
            }
            other => return Err(Error::parse(line, format!("unknown record {other:?}"))),
        };
        vmap.push(vnode(line, &tokens)?);
        index.insert(id, nodes.len());
        nodes.push(node);
    }
    if nodes.is_empty() {
        return Err(Error::parse(last_line, "circuit has no nodes"));
    }
    let root = nodes.len() - 1;
    Circuit::new(header.role, vtree, nodes, vmap, root, bias.unwrap_or(0.0))
        .map_err(|e| Error::parse(last_line, e.to_string()))
}

/// Canonical text of the nodes reachable from the root, renumbered densely in
/// storage order so that the root comes last.
pub fn serialize_circuit(c: &Circuit, vtree_path: &str) -> String {
    let reach = c.reachable();
    let mut new_id = vec![usize::MAX; c.len()];
    let mut next = 0;
    for (id, r) in reach.iter().enumerate() {
        if *r {
            new_id[id] = next;
            next += 1;
        }
    }
    let mut out = format!("{} v1 {vtree_path}\n", role_tag(c.role()));
    if c.bias() != 0.0 {
        writeln!(out, "B {}", format_real(c.bias())).expect("writing to a String");
    }
    // the root has the largest reachable id, so it is written last
    for (id, node) in c.nodes().iter().enumerate() {
        if !reach[id] {
            continue;
        }
        let (me, vt) = (new_id[id], c.vtree_node(id));
        match node {
            Node::Literal(lit) => {
                let signed = if lit.positive { lit.var.index() as i64 } else { -(lit.var.index() as i64) };
                writeln!(out, "T {me} {vt} {signed}")
            }
            Node::And { left, right } => writeln!(out, "A {me} {vt} {} {}", new_id[*left], new_id[*right]),
            Node::Or(edges) => {
                write!(out, "O {me} {vt} {}", edges.len()).expect("writing to a String");
                for e in edges {
                    write!(out, " {} {}", new_id[e.child], format_real(e.weight)).expect("writing to a String");
                }
                writeln!(out)
            }
        }
        .expect("writing to a String");
    }
    out
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Reads a circuit file and the vtree file its header names (relative paths
/// resolve against the circuit file's directory).
pub fn load_circuit(path: &Path) -> Result<Circuit> {
    let text = read(path)?;
    let header = parse_circuit_header(&text)?;
    let vpath = path.parent().unwrap_or(Path::new("")).join(&header.vtree_path);
    let vtree = parse_vtree(&read(&vpath)?)?;
    parse_circuit(&text, Arc::new(vtree))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{evaluate_pc, evaluate_rc};
    use crate::evidence::Assignment;
    use crate::fixtures::{toy_pc, toy_rc, toy_vtree};

    #[test]
    fn fixtures_round_trip() {
        for c in [toy_pc(), toy_rc()] {
            let text = serialize_circuit(&c, "toy.vtree");
            let back = parse_circuit(&text, toy_vtree()).unwrap();
            assert_eq!(back.nodes(), c.nodes());
            assert_eq!(back.vtree_map(), c.vtree_map());
            assert_eq!(serialize_circuit(&back, "toy.vtree"), text);
        }
    }

    #[test]
    fn weights_survive_bit_exactly() {
        let text = "rc v1 t.vtree\nB 0.1\nT 0 0 1\nT 1 0 -1\nO 2 0 2 0 0.1 1 0.30000000000000004\n";
        let vt = Arc::new(Vtree::leaf(Var::new(1).unwrap()));
        let c = parse_circuit(text, Arc::clone(&vt)).unwrap();
        assert_eq!(serialize_circuit(&c, "t.vtree"), text);
        let x = Assignment::new(vec![true]);
        assert_eq!(evaluate_rc(&c, &x).unwrap(), 0.1 + 0.1);
    }

    #[test]
    fn single_literal_pc() {
        let vt = Arc::new(Vtree::leaf(Var::new(1).unwrap()));
        let c = parse_circuit("pc v1 x\nT 0 0 1\n", vt).unwrap();
        assert_eq!(evaluate_pc(&c, &Assignment::new(vec![true])).unwrap(), 1.0);
    }

    #[test]
    fn rejections() {
        let vt = || Arc::new(Vtree::leaf(Var::new(1).unwrap()));
        let err = |t: &str| parse_circuit(t, vt()).unwrap_err();
        assert!(err("pc v1 x\nB 1\nT 0 0 1\n").to_string().contains("only allowed in rc"));
        assert!(err("pc v1 x\nT 0 9 1\n").to_string().contains("unknown vtree id"));
        assert!(err("pc v1 x\nO 0 0 1 5 1\n").to_string().contains("undefined node"));
        assert!(err("pc v1 x\nT 0 0 2\n").to_string().contains("not in the vtree"));
        assert!(err("xx v1 x\n").to_string().contains("header"));
        assert!(matches!(err("rc v1 x\nT 0 0 1\nO 1 0 1 0 nan\n"), Error::Parse { line: 3, .. }));
    }
}
