//! Line-oriented model file.
//!
//! ```text
//! vsr-forest v1 <feature_kind> <dim> <n_trees> <seed>
//! P <m_features> <min_leaf> <max_depth|none>
//! I <feature> <threshold>          internal node
//! L <c0> <c1> ... <c9>             leaf class counts
//! ```
//!
//! Trees follow one another, each as a pre-order node list. Thresholds are
//! written in shortest round-trip decimal, so reading a file back yields a
//! bit-identical model.

use std::io::{BufRead, Write};

use super::labels::N_CLASSES;
use super::model::{ForestModel, FORMAT_VERSION};
use super::params::TrainParams;
use super::tree::{DecisionTree, Node};
use crate::error::{Error, Result};
use crate::features::FeatureKind;

const MAGIC: &str = "vsr-forest";

pub fn write_model<W: Write>(mut out: W, model: &ForestModel) -> Result<()> {
    let p = model.params();
    writeln!(
        out,
        "{MAGIC} v{FORMAT_VERSION} {} {} {} {}",
        model.feature_kind(),
        model.dim(),
        model.n_trees(),
        p.seed
    )?;
    let depth = p
        .max_depth
        .map_or_else(|| "none".to_string(), |d| d.to_string());
    writeln!(out, "P {} {} {}", p.m_features, p.min_leaf, depth)?;
    for tree in model.trees() {
        write_node(&mut out, tree.nodes(), 0)?;
    }
    Ok(())
}

fn write_node<W: Write>(out: &mut W, nodes: &[Node], at: usize) -> Result<()> {
    match &nodes[at] {
        Node::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            writeln!(out, "I {feature} {threshold}")?;
            write_node(out, nodes, *left)?;
            write_node(out, nodes, *right)
        }
        Node::Leaf { counts } => {
            write!(out, "L")?;
            for c in counts {
                write!(out, " {c}")?;
            }
            writeln!(out)?;
            Ok(())
        }
    }
}

/// Serializes to an in-memory string.
pub fn model_to_string(model: &ForestModel) -> String {
    let mut buf = Vec::new();
    write_model(&mut buf, model).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("model text is ASCII")
}

pub fn read_model<R: BufRead>(input: R) -> Result<ForestModel> {
    let lines: Vec<String> = input.lines().collect::<std::io::Result<_>>()?;
    let mut cur = Cursor {
        lines: &lines,
        pos: 0,
    };

    let (line, header) = cur
        .next()
        .ok_or_else(|| Error::parse(1, "empty model file"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 6 || h[0] != MAGIC {
        return Err(Error::parse(
            line,
            format!("expected `{MAGIC} v{FORMAT_VERSION} <kind> <dim> <n_trees> <seed>`"),
        ));
    }
    if h[1] != format!("v{FORMAT_VERSION}") {
        return Err(Error::parse(
            line,
            format!("unsupported format version {}", h[1]),
        ));
    }
    let kind: FeatureKind = h[2]
        .parse()
        .map_err(|e: Error| Error::parse(line, e.to_string()))?;
    let dim: usize = num(h[3], line, "dimension")?;
    let n_trees: usize = num(h[4], line, "tree count")?;
    let seed: u64 = num(h[5], line, "seed")?;

    let (line, prow) = cur
        .next()
        .ok_or_else(|| Error::parse(line + 1, "missing parameter line"))?;
    let pf: Vec<&str> = prow.split_whitespace().collect();
    if pf.len() != 4 || pf[0] != "P" {
        return Err(Error::parse(
            line,
            "expected `P <m_features> <min_leaf> <max_depth|none>`",
        ));
    }
    let max_depth = match pf[3] {
        "none" => None,
        d => Some(num(d, line, "max depth")?),
    };
    let params = TrainParams {
        n_trees,
        m_features: num(pf[1], line, "m_features")?,
        min_leaf: num(pf[2], line, "min_leaf")?,
        max_depth,
        seed,
    };

    let mut trees = Vec::with_capacity(n_trees);
    for t in 0..n_trees {
        let mut nodes = Vec::new();
        if cur.peek().is_none() {
            return Err(Error::parse(
                cur.line_no(),
                format!("missing tree {t} of {n_trees}"),
            ));
        }
        read_node(&mut cur, &mut nodes, dim)?;
        trees.push(
            DecisionTree::from_nodes(nodes)
                .map_err(|e| Error::parse(cur.line_no(), e.to_string()))?,
        );
    }
    if let Some((line, _)) = cur.next() {
        return Err(Error::parse(line, "trailing content after last tree"));
    }
    ForestModel::from_trees(trees, params, kind, dim)
}

struct Cursor<'a> {
    lines: &'a [String],
    pos: usize,
}

impl<'a> Cursor<'a> {
    /// Next non-blank line with its 1-based number.
    fn next(&mut self) -> Option<(usize, &'a str)> {
        while self.pos < self.lines.len() {
            self.pos += 1;
            let l = self.lines[self.pos - 1].trim();
            if !l.is_empty() {
                return Some((self.pos, l));
            }
        }
        None
    }

    fn peek(&self) -> Option<&'a str> {
        self.lines[self.pos..]
            .iter()
            .map(|l| l.trim())
            .find(|l| !l.is_empty())
    }

    fn line_no(&self) -> usize {
        self.pos.max(1)
    }
}

fn num<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(line, format!("invalid {what} {s:?}")))
}

fn read_node(cur: &mut Cursor<'_>, nodes: &mut Vec<Node>, dim: usize) -> Result<usize> {
    let (line, text) = cur
        .next()
        .ok_or_else(|| Error::parse(cur.line_no(), "unexpected end of tree"))?;
    let f: Vec<&str> = text.split_whitespace().collect();
    let at = nodes.len();
    match f[0] {
        "I" => {
            if f.len() != 3 {
                return Err(Error::parse(line, "expected `I <feature> <threshold>`"));
            }
            let feature: usize = num(f[1], line, "feature index")?;
            if feature >= dim {
                return Err(Error::parse(
                    line,
                    format!("feature {feature} out of range for dimension {dim}"),
                ));
            }
            let threshold: f64 = num(f[2], line, "threshold")?;
            if !threshold.is_finite() {
                return Err(Error::parse(line, "threshold must be finite"));
            }
            nodes.push(Node::Leaf {
                counts: [0; N_CLASSES],
            });
            let left = read_node(cur, nodes, dim)?;
            let right = read_node(cur, nodes, dim)?;
            nodes[at] = Node::Split {
                feature,
                threshold,
                left,
                right,
            };
        }
        "L" => {
            if f.len() != 1 + N_CLASSES {
                return Err(Error::parse(
                    line,
                    format!("leaf needs {N_CLASSES} class counts"),
                ));
            }
            let mut counts = [0u32; N_CLASSES];
            for (c, s) in counts.iter_mut().zip(&f[1..]) {
                *c = num(s, line, "class count")?;
            }
            if counts.iter().all(|&c| c == 0) {
                return Err(Error::parse(line, "leaf histogram is empty"));
            }
            nodes.push(Node::Leaf { counts });
        }
        other => return Err(Error::parse(line, format!("unknown node tag {other:?}"))),
    }
    Ok(at)
}
