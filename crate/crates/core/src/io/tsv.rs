use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::behavior::{BehaviorData, Selection};
use crate::error::{ClsmError, Result};
use crate::graph::Graph;

/// Non-empty, non-comment lines with their 1-based line numbers. Header
/// comments of the form `#key=value` are returned separately.
struct Lines {
    data: Vec<(usize, String)>,
    headers: Vec<(usize, String, String)>,
}

fn read_lines(path: &Path) -> Result<Lines> {
    let reader = BufReader::new(File::open(path)?);
    let mut data = Vec::new();
    let mut headers = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| ClsmError::parse(path, i + 1, e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                headers.push((i + 1, key.trim().to_string(), value.trim().to_string()));
            }
            continue;
        }
        data.push((i + 1, trimmed.to_string()));
    }
    Ok(Lines { data, headers })
}

fn header_count(path: &Path, lines: &Lines, key: &str) -> Result<Option<usize>> {
    lines
        .headers
        .iter()
        .rfind(|(_, k, _)| k == key)
        .map(|(line, _, value)| {
            value
                .parse()
                .map_err(|_| ClsmError::parse(path, *line, format!("bad header value for {key}: {value:?}")))
        })
        .transpose()
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, text: Option<&str>, what: &str) -> Result<T> {
    let text = text.ok_or_else(|| ClsmError::parse(path, line, format!("missing {what}")))?;
    text.parse()
        .map_err(|_| ClsmError::parse(path, line, format!("{what} {text:?} is not a non-negative integer")))
}

/// Reads `u<TAB>v` lines. Blank lines and `#` comments are skipped; a
/// `#nodes=N` header fixes the node count, otherwise it is one more than the
/// largest id. Pairs are symmetrized and deduplicated.
pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    let lines = read_lines(path)?;
    let mut pairs = Vec::with_capacity(lines.data.len());
    for (line, text) in &lines.data {
        let mut fields = text.split('\t');
        let u: usize = field(path, *line, fields.next(), "source node")?;
        let v: usize = field(path, *line, fields.next(), "target node")?;
        if fields.next().is_some() {
            return Err(ClsmError::parse(path, *line, "expected exactly two fields"));
        }
        if u == v {
            return Err(ClsmError::Data(format!("{}: line {line}: self-loop on node {u}", path.display())));
        }
        pairs.push((u, v, *line));
    }
    let max_id = pairs.iter().map(|&(u, v, _)| u.max(v) + 1).max().unwrap_or(0);
    let num_nodes = match header_count(path, &lines, "nodes")? {
        Some(n) => {
            if let Some(&(u, v, line)) = pairs.iter().find(|&&(u, v, _)| u.max(v) >= n) {
                return Err(ClsmError::Data(format!(
                    "{}: line {line}: edge ({u}, {v}) exceeds declared node count {n}",
                    path.display()
                )));
            }
            n
        }
        None => max_id,
    };
    Graph::from_edges(num_nodes, pairs.into_iter().map(|(u, v, _)| (u, v)))
}

/// Reads `node<TAB>token[<TAB>count]` lines; a missing count means 1 and
/// repeated pairs add up. The vocabulary size is `vocab_size_hint`, else a
/// `#tokens=V` header, else one more than the largest token. A `#nodes=N`
/// header pads the node count.
pub fn load_behaviors(path: impl AsRef<Path>, vocab_size_hint: Option<usize>) -> Result<BehaviorData> {
    let path = path.as_ref();
    let lines = read_lines(path)?;
    let mut records: Vec<(usize, usize, u32, usize)> = Vec::with_capacity(lines.data.len());
    for (line, text) in &lines.data {
        let mut fields = text.split('\t');
        let node: usize = field(path, *line, fields.next(), "node")?;
        let token: usize = field(path, *line, fields.next(), "token")?;
        let count: u32 = match fields.next() {
            None => 1,
            Some(c) => {
                let value: i64 = c
                    .parse()
                    .map_err(|_| ClsmError::parse(path, *line, format!("count {c:?} is not an integer")))?;
                if value < 0 {
                    return Err(ClsmError::Data(format!("{}: line {line}: negative count {value}", path.display())));
                }
                u32::try_from(value)
                    .map_err(|_| ClsmError::Data(format!("{}: line {line}: count {value} too large", path.display())))?
            }
        };
        if fields.next().is_some() {
            return Err(ClsmError::parse(path, *line, "expected two or three fields"));
        }
        records.push((node, token, count, *line));
    }
    let vocab_size = match vocab_size_hint {
        Some(v) => Some(v),
        None => header_count(path, &lines, "tokens")?,
    };
    let vocab_size = match vocab_size {
        Some(v) => {
            if let Some(&(_, token, _, line)) = records.iter().find(|r| r.1 >= v) {
                return Err(ClsmError::Data(format!(
                    "{}: line {line}: token {token} outside vocabulary of size {v}",
                    path.display()
                )));
            }
            v
        }
        None => records.iter().map(|r| r.1 + 1).max().unwrap_or(0),
    };
    let num_nodes = records
        .iter()
        .map(|r| r.0 + 1)
        .max()
        .unwrap_or(0)
        .max(header_count(path, &lines, "nodes")?.unwrap_or(0));
    let mut per_node: Vec<Vec<Selection>> = vec![Vec::new(); num_nodes];
    for (node, token, count, _) in records {
        if count > 0 {
            per_node[node].push(Selection { token, count });
        }
    }
    BehaviorData::new(vocab_size, per_node)
}

/// Writes the graph with a `#nodes=N` header so isolated trailing nodes survive a round trip.
pub fn write_edge_list(graph: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "#nodes={}", graph.num_nodes())?;
    for &(a, b) in graph.edges() {
        writeln!(out, "{a}\t{b}")?;
    }
    out.flush()?;
    Ok(())
}

/// Writes behaviors with `#nodes=N` and `#tokens=V` headers.
pub fn write_behaviors(behaviors: &BehaviorData, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "#nodes={}", behaviors.num_nodes())?;
    writeln!(out, "#tokens={}", behaviors.vocab_size())?;
    for n in 0..behaviors.num_nodes() {
        for s in behaviors.selections(n) {
            writeln!(out, "{n}\t{}\t{}", s.token, s.count)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// One label per line, in id order.
pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let reader = BufReader::new(File::open(path)?);
    reader.lines().map(|l| l.map_err(ClsmError::from)).collect()
}
