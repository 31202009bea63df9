//! Command-line parsers: one-based index lists, subset lists, and graph
//! specifications.

use hrmod_core::graph::MarkovGraph;
use hrmod_core::index_set::IndexSet;

/// Parse a one-based comma list like `2,4` into a zero-based index set.
pub fn index_set(text: &str, d: usize) -> Result<IndexSet, String> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let v: usize = part.parse().map_err(|_| format!("bad index `{part}`"))?;
        if v == 0 || v > d {
            return Err(format!("index {v} out of range 1..={d}"));
        }
        if out.contains(&(v - 1)) {
            return Err(format!("duplicate index {v}"));
        }
        out.push(v - 1);
    }
    if out.is_empty() {
        return Err("index list must be nonempty".into());
    }
    Ok(IndexSet::new(out))
}

/// Parse `all` or a semicolon-separated list of subsets like `1,2;1,3,4`,
/// returned in lexicographic order.
pub fn subsets(text: &str, d: usize, max_all: usize) -> Result<Vec<IndexSet>, String> {
    if text == "all" {
        if d > max_all {
            return Err(format!(
                "--subsets=all is limited to d <= {max_all}, model has d = {d}"
            ));
        }
        let mut all: Vec<IndexSet> = hrmod_core::index_set::nonempty_subsets(d).collect();
        all.sort();
        return Ok(all);
    }
    let mut out = Vec::new();
    for group in text.split(';') {
        let group = group.trim();
        if group.is_empty() {
            continue;
        }
        out.push(index_set(group, d)?);
    }
    if out.is_empty() {
        return Err("subset list must be nonempty".into());
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Parse a graph specification: `cycleN`, `pathN`, `completeN` (or `kN`),
/// or a one-based edge list like `1-2,2-3,3-1`.
pub fn graph(text: &str, d_hint: Option<usize>) -> Result<MarkovGraph, String> {
    let lower = text.trim().to_ascii_lowercase();
    for (prefix, build) in [
        ("cycle", MarkovGraph::cycle as fn(usize) -> MarkovGraph),
        ("path", MarkovGraph::path as fn(usize) -> MarkovGraph),
        (
            "complete",
            MarkovGraph::complete as fn(usize) -> MarkovGraph,
        ),
        ("k", MarkovGraph::complete as fn(usize) -> MarkovGraph),
    ] {
        if let Some(rest) = lower.strip_prefix(prefix) {
            if let Ok(n) = rest.parse::<usize>() {
                if n < 2 {
                    return Err(format!("graph `{text}` needs at least 2 vertices"));
                }
                if prefix == "cycle" && n < 3 {
                    return Err("cycles need at least 3 vertices".into());
                }
                return check_hint(build(n), d_hint);
            }
        }
    }
    // edge list
    let mut edges = Vec::new();
    let mut max_v = 0usize;
    for part in lower.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (a, b) = part
            .split_once('-')
            .ok_or_else(|| format!("bad edge `{part}`, expected like 1-2"))?;
        let a: usize = a
            .trim()
            .parse()
            .map_err(|_| format!("bad vertex in `{part}`"))?;
        let b: usize = b
            .trim()
            .parse()
            .map_err(|_| format!("bad vertex in `{part}`"))?;
        if a == 0 || b == 0 {
            return Err("vertices are one-based".into());
        }
        max_v = max_v.max(a).max(b);
        edges.push((a - 1, b - 1));
    }
    if edges.is_empty() {
        return Err(format!("unrecognized graph spec `{text}`"));
    }
    let d = d_hint.unwrap_or(max_v).max(max_v);
    let g = MarkovGraph::new(d, &edges).map_err(|e| e.to_string())?;
    check_hint(g, d_hint)
}

fn check_hint(g: MarkovGraph, d_hint: Option<usize>) -> Result<MarkovGraph, String> {
    if let Some(d) = d_hint {
        if g.vertex_count() != d {
            return Err(format!(
                "graph has {} vertices but the model dimension is {d}",
                g.vertex_count()
            ));
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_lists() {
        let s = index_set("2,4", 4).unwrap();
        assert_eq!(s.as_slice(), &[1, 3]);
        assert!(index_set("0", 4).is_err());
        assert!(index_set("5", 4).is_err());
        assert!(index_set("2,2", 4).is_err());
        assert!(index_set("", 4).is_err());
    }

    #[test]
    fn subset_lists() {
        let all = subsets("all", 3, 12).unwrap();
        assert_eq!(all.len(), 7);
        // lexicographic over one-based lists: {1} < {1,2} < {1,2,3} < {1,3} < {2} ...
        assert_eq!(all[0].as_slice(), &[0]);
        assert_eq!(all[1].as_slice(), &[0, 1]);
        assert_eq!(all[2].as_slice(), &[0, 1, 2]);
        assert_eq!(all[3].as_slice(), &[0, 2]);
        let list = subsets("1,2;2,3", 3, 12).unwrap();
        assert_eq!(list.len(), 2);
    }

    #[test]
    fn graph_specs() {
        let g = graph("cycle4", None).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 3), (1, 2), (2, 3)]);
        let g = graph("1-2,2-3", Some(4)).unwrap();
        assert_eq!(g.vertex_count(), 4);
        assert!(graph("cycle4", Some(5)).is_err());
        assert!(graph("nonsense", None).is_err());
    }
}
