use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::{DynamicGraph, EdgeLabels, GraphSnapshot, Split};

pub const SNAPSHOTS_HEADER: &str = "DEFT-SNAPSHOTS v1";

/// Serializes `graph`. Reals use the shortest representation that parses
/// back to the same value. The split is not part of the format.
pub fn snapshots_to_text(graph: &DynamicGraph) -> String {
    let mut out = String::new();
    let push = |out: &mut String, line: String| {
        out.push_str(&line);
        out.push('\n');
    };
    push(&mut out, SNAPSHOTS_HEADER.into());
    push(
        &mut out,
        format!(
            "T {} N {} D {}",
            graph.len(),
            graph.n_nodes(),
            graph.feature_dim()
        ),
    );
    for g in graph.snapshots() {
        push(&mut out, format!("SNAPSHOT {}", g.timestep()));
        let edges = g.edges();
        push(&mut out, format!("E {}", edges.len()));
        let labels = g.edge_labels();
        for (u, v, w) in edges {
            match labels.and_then(|l| l.get(&(u, v))) {
                Some(c) => push(&mut out, format!("{u} {v} {w} {c}")),
                None => push(&mut out, format!("{u} {v} {w}")),
            }
        }
        let x = g.features();
        push(&mut out, format!("F {}", x.nrows()));
        for (i, row) in x.rows().into_iter().enumerate() {
            let mut line = i.to_string();
            for v in row {
                line.push(' ');
                line.push_str(&v.to_string());
            }
            push(&mut out, line);
        }
        if let Some(y) = g.node_labels() {
            push(&mut out, format!("Y {}", y.len()));
            for (i, c) in y.iter().enumerate() {
                push(&mut out, format!("{i} {c}"));
            }
        }
    }
    out
}

pub fn save_snapshots(graph: &DynamicGraph, path: &Path) -> Result<()> {
    std::fs::write(path, snapshots_to_text(graph))?;
    Ok(())
}

pub fn load_snapshots(path: &Path) -> Result<DynamicGraph> {
    parse_snapshots(&std::fs::read_to_string(path)?)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Option<(usize, Vec<&'a str>)> {
        let (i, l) = self.inner.next()?;
        self.last = i + 1;
        Some((i + 1, l.split_whitespace().collect()))
    }

    /// Next line, or an error naming the line past the end of input.
    fn expect(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        self.next()
            .ok_or_else(|| Error::parse(self.last + 1, format!("file ended, expected {what}")))
    }
}

fn num<T: std::str::FromStr>(line: usize, tok: &str, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::parse(line, format!("invalid {what} `{tok}`")))
}

fn directive(line: usize, toks: &[&str], name: &str) -> Result<usize> {
    match toks {
        [d, n] if *d == name => num(line, n, "count"),
        [d, ..] if *d == name => Err(Error::parse(line, format!("`{name}` takes one count"))),
        [d, ..] => Err(Error::parse(
            line,
            format!("expected `{name}`, found `{d}`"),
        )),
        [] => Err(Error::parse(
            line,
            format!("expected `{name}`, found an empty line"),
        )),
    }
}

fn node(line: usize, tok: &str, n: usize) -> Result<usize> {
    let i: usize = num(line, tok, "node id")?;
    if i >= n {
        return Err(Error::parse(
            line,
            format!("node {i} out of range for {n} nodes"),
        ));
    }
    Ok(i)
}

/// Strict parser: unknown directives, count mismatches and malformed
/// tokens are errors carrying the 1-based line number.
pub fn parse_snapshots(text: &str) -> Result<DynamicGraph> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let (ln, first) = lines.expect("header")?;
    if first.join(" ") != SNAPSHOTS_HEADER {
        return Err(Error::parse(ln, format!("expected `{SNAPSHOTS_HEADER}`")));
    }
    let (ln, dims) = lines.expect("dimensions")?;
    let (t_count, n, d) = match dims.as_slice() {
        ["T", t, "N", n, "D", d] => (
            num::<usize>(ln, t, "T")?,
            num::<usize>(ln, n, "N")?,
            num::<usize>(ln, d, "D")?,
        ),
        _ => return Err(Error::parse(ln, "expected `T <count> N <count> D <count>`")),
    };

    let mut snaps = Vec::with_capacity(t_count);
    let mut pending = lines.next();
    for _ in 0..t_count {
        let (snap_line, toks) = match pending.take() {
            Some(p) => p,
            None => lines.expect("SNAPSHOT")?,
        };
        let t: usize = directive(snap_line, &toks, "SNAPSHOT")?;
        let (ln, toks) = lines.expect("E")?;
        let e = directive(ln, &toks, "E")?;
        let mut edges = Vec::with_capacity(e);
        let mut labels = EdgeLabels::new();
        let mut seen_edges = std::collections::HashSet::with_capacity(e);
        for _ in 0..e {
            let (ln, toks) = lines.expect("edge line")?;
            if !(3..=4).contains(&toks.len()) {
                return Err(Error::parse(ln, "edge line needs `src dst weight [label]`"));
            }
            let (u, v) = (node(ln, toks[0], n)?, node(ln, toks[1], n)?);
            let w: f64 = num(ln, toks[2], "weight")?;
            if u == v {
                return Err(Error::parse(ln, format!("self-loop at node {u}")));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::parse(ln, format!("invalid weight {w}")));
            }
            let key = (u.min(v), u.max(v));
            if !seen_edges.insert(key) {
                return Err(Error::parse(ln, format!("duplicate edge {u}-{v}")));
            }
            if let Some(c) = toks.get(3) {
                labels.insert(key, num(ln, c, "edge label")?);
            }
            edges.push((key.0, key.1, w));
        }

        let mut x = Array2::zeros((n, d));
        let mut node_labels = None;
        pending = lines.next();
        if let Some((ln, toks)) = pending.take_if(|(_, t)| t.first() == Some(&"F")) {
            let rows = directive(ln, &toks, "F")?;
            if rows > n {
                return Err(Error::parse(
                    ln,
                    format!("{rows} feature rows for {n} nodes"),
                ));
            }
            let mut seen = vec![false; n];
            for _ in 0..rows {
                let (ln, toks) = lines.expect("feature line")?;
                if toks.len() != d + 1 {
                    return Err(Error::parse(
                        ln,
                        format!("feature line needs a node id and {d} values"),
                    ));
                }
                let i = node(ln, toks[0], n)?;
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::parse(ln, format!("duplicate feature row {i}")));
                }
                for (j, tok) in toks[1..].iter().enumerate() {
                    let v: f64 = num(ln, tok, "feature")?;
                    if !v.is_finite() {
                        return Err(Error::parse(ln, "non-finite feature"));
                    }
                    x[[i, j]] = v;
                }
            }
            pending = lines.next();
        }
        if let Some((ln, toks)) = pending.take_if(|(_, t)| t.first() == Some(&"Y")) {
            let count = directive(ln, &toks, "Y")?;
            if count != n {
                return Err(Error::parse(
                    ln,
                    format!("{count} node labels for {n} nodes"),
                ));
            }
            let mut y = vec![None; n];
            for _ in 0..count {
                let (ln, toks) = lines.expect("label line")?;
                let [id, c] = toks.as_slice() else {
                    return Err(Error::parse(ln, "label line needs `node_id class_id`"));
                };
                let i = node(ln, id, n)?;
                if y[i].replace(num::<usize>(ln, c, "class id")?).is_some() {
                    return Err(Error::parse(ln, format!("duplicate label for node {i}")));
                }
            }
            node_labels = Some(y.into_iter().map(|c| c.expect("all set")).collect());
            pending = lines.next();
        }

        let mut g = GraphSnapshot::from_edges(n, &edges, x, t)
            .map_err(|e| Error::parse(snap_line, e.to_string()))?;
        if !labels.is_empty() {
            g = g.with_edge_labels(labels).expect("labels on parsed edges");
        }
        if let Some(y) = node_labels {
            g = g.with_node_labels(y).expect("count checked");
        }
        if let Some(prev) = snaps.last().map(GraphSnapshot::timestep) {
            if t <= prev {
                return Err(Error::parse(
                    snap_line,
                    "snapshot timesteps must strictly increase",
                ));
            }
        }
        snaps.push(g);
    }
    if let Some((ln, toks)) = pending {
        return Err(Error::parse(
            ln,
            match toks.first() {
                Some(d) => format!("unexpected `{d}` after the last snapshot"),
                None => "unexpected empty line".into(),
            },
        ));
    }
    DynamicGraph::new(snaps, Split::proportional(t_count))
        .map_err(|e| Error::parse(lines.last.max(1), e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_dynamic_sbm, SbmConfig};

    const SMALL: &str = "DEFT-SNAPSHOTS v1
T 2 N 3 D 1
SNAPSHOT 0
E 1
0 1 0.5 2
F 2
0 1.5
2 -1
SNAPSHOT 1
E 0
Y 3
0 0
1 1
2 0
";

    #[test]
    fn parses_optional_blocks() {
        let g = parse_snapshots(SMALL).unwrap();
        let s0 = g.snapshot(0);
        assert_eq!(s0.edges(), vec![(0, 1, 0.5)]);
        assert_eq!(s0.edge_labels().unwrap()[&(0, 1)], 2);
        assert_eq!(s0.features().column(0).to_vec(), vec![1.5, 0.0, -1.0]);
        assert!(s0.node_labels().is_none());
        assert_eq!(g.snapshot(1).node_labels().unwrap(), &[0, 1, 0]);
        assert_eq!(g.split(), Split::proportional(2));
    }

    #[test]
    fn sbm_round_trip() {
        let cfg = SbmConfig {
            edge_labels: true,
            n_snapshots: 5,
            ..Default::default()
        };
        let g = generate_dynamic_sbm(&cfg).unwrap();
        let text = snapshots_to_text(&g);
        assert_eq!(parse_snapshots(&text).unwrap(), g);
        assert_eq!(
            snapshots_to_text(&generate_dynamic_sbm(&cfg).unwrap()),
            text
        );
    }

    fn line_of(text: &str) -> usize {
        match parse_snapshots(text) {
            Err(Error::Parse { line, .. }) => line,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_file_names_the_line() {
        let text = "DEFT-SNAPSHOTS v1\nT 1 N 3 D 1\nSNAPSHOT 0\nE 3\n0 1 1\n";
        assert_eq!(line_of(text), 6);
    }

    #[test]
    fn strictness() {
        assert_eq!(line_of(&SMALL.replace("Y 3", "Z 3")), 11);
        assert_eq!(line_of(&SMALL.replace("0 1 0.5 2", "0 1 x")), 5);
        assert_eq!(line_of(&SMALL.replace("Y 3", "Y 2")), 11);
        assert_eq!(line_of(&SMALL.replace("DEFT-SNAPSHOTS v1", "DEFT v1")), 1);
        assert_eq!(line_of(&SMALL.replace("0 1 0.5 2", "1 1 0.5")), 5);
        assert_eq!(line_of(&SMALL.replace("T 2", "T 1")), 9);
        assert_eq!(line_of(&SMALL.replace("SNAPSHOT 1", "SNAPSHOT 0")), 9);
        assert_eq!(line_of(&SMALL.replace("2 -1", "7 -1")), 8);
    }
}
