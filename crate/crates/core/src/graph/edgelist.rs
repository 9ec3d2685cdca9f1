//! Plain-text edge list snapshots.
//!
//! ```text
//! nodes=<N> q=<q>
//! <source>,<target>
//! ...
//! ```
//!
//! Each target's in-edges are written consecutively in slot order, so reading
//! a file back reproduces the in-lists exactly.

use std::io::{BufRead, Write};

use super::{GraphError, NodeId, Topology};

impl Topology {
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<(), GraphError> {
        writeln!(w, "nodes={} q={}", self.n_nodes(), self.q)?;
        for (target, list) in self.in_lists().enumerate() {
            for source in list {
                writeln!(w, "{source},{target}")?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_edge_list_string(&self) -> String {
        let mut buf = Vec::with_capacity(self.edge_count() * 12);
        self.write_edge_list(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("edge list is ASCII")
    }

    /// Parses a snapshot and validates the result.
    pub fn read_edge_list<R: BufRead>(r: R) -> Result<Topology, GraphError> {
        let parse_err = |line: usize, message: String| GraphError::Parse { line, message };
        let mut lines = r.lines().enumerate().map(|(i, l)| (i + 1, l));

        let (n, q) = loop {
            let Some((no, line)) = lines.next() else {
                return Err(parse_err(1, "missing header".into()));
            };
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            break parse_header(line).map_err(|m| parse_err(no, m))?;
        };
        if q == 0 {
            return Err(parse_err(1, "q must be positive".into()));
        }

        let mut lists: Vec<Vec<NodeId>> = vec![Vec::with_capacity(q); n];
        for (no, line) in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (src, dst) = line
                .split_once(',')
                .ok_or_else(|| parse_err(no, format!("expected `source,target`, got `{line}`")))?;
            let parse_id = |s: &str| -> Result<usize, GraphError> {
                let id: usize = s
                    .trim()
                    .parse()
                    .map_err(|e| parse_err(no, format!("bad node id `{}`: {e}", s.trim())))?;
                if id >= n {
                    return Err(parse_err(no, format!("node {id} out of range (nodes={n})")));
                }
                Ok(id)
            };
            let (src, dst) = (parse_id(src)?, parse_id(dst)?);
            if lists[dst].len() == q {
                return Err(parse_err(no, format!("node {dst} has more than {q} in-edges")));
            }
            lists[dst].push(NodeId::new(src));
        }
        Topology::from_in_lists(q, lists)
    }
}

fn parse_header(line: &str) -> Result<(usize, usize), String> {
    let mut nodes = None;
    let mut q = None;
    for field in line.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| format!("malformed header field `{field}`"))?;
        let value: usize = value.parse().map_err(|e| format!("header field `{key}`: {e}"))?;
        match key {
            "nodes" => nodes = Some(value),
            "q" => q = Some(value),
            other => return Err(format!("unknown header field `{other}`")),
        }
    }
    match (nodes, q) {
        (Some(n), Some(q)) => Ok((n, q)),
        _ => Err(format!("header must be `nodes=<N> q=<q>`, got `{line}`")),
    }
}
