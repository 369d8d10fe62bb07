use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use super::{Edge, MultiGraph, Vocabulary};
use crate::error::{Error, Result};

/// How the optional third column of an edge list becomes multiplicity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightMode {
    /// Integer weight `w` expands to `w` copies; fractional weights are errors.
    Multiplicity,
    /// Weights are rounded up; `w = 0.3` yields one copy, `2.1` three.
    Round,
    /// Every row is a single edge.
    Ignore,
}

impl FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multiplicity" => Ok(WeightMode::Multiplicity),
            "round" => Ok(WeightMode::Round),
            "ignore" => Ok(WeightMode::Ignore),
            other => Err(Error::Config(format!(
                "unknown weight mode `{other}` (expected multiplicity, round or ignore)"
            ))),
        }
    }
}

impl WeightMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            WeightMode::Multiplicity => "multiplicity",
            WeightMode::Round => "round",
            WeightMode::Ignore => "ignore",
        }
    }
}

/// A parsed edge list: the expanded multigraph and its label dictionary.
#[derive(Clone, Debug)]
pub struct LoadedGraph {
    pub graph: MultiGraph,
    pub vocab: Vocabulary,
}

pub fn load_edge_list(path: impl AsRef<Path>, mode: WeightMode) -> Result<LoadedGraph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, mode)
}

fn split_fields(line: &str) -> Vec<&str> {
    if line.contains('\t') {
        line.split('\t').map(str::trim).collect()
    } else if line.contains(',') {
        line.split(',').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

/// Parses edge-list text. Node ids are assigned in first-appearance order.
pub fn parse_edge_list(text: &str, mode: WeightMode) -> Result<LoadedGraph> {
    parse_edge_list_with(text, mode, Vocabulary::new(), true)
}

/// Loads an edge list against an existing vocabulary, so that several files
/// share node ids. With `grow = false` an unknown label is an error.
pub fn load_edge_list_with(
    path: impl AsRef<Path>,
    mode: WeightMode,
    vocab: Vocabulary,
    grow: bool,
) -> Result<LoadedGraph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list_with(&text, mode, vocab, grow)
}

pub fn parse_edge_list_with(text: &str, mode: WeightMode, mut vocab: Vocabulary, grow: bool) -> Result<LoadedGraph> {
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields = split_fields(line);
        if !(fields.len() == 2 || fields.len() == 3) || fields.iter().any(|f| f.is_empty()) {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected `sender receiver [weight]`, got `{line}`"),
            });
        }
        let copies = match (fields.get(2), mode) {
            (None, _) | (Some(_), WeightMode::Ignore) => 1,
            (Some(w), mode) => {
                let w: f64 = w.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("weight `{w}` is not a number"),
                })?;
                if !w.is_finite() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("weight `{w}` is not finite"),
                    });
                }
                let copies = match mode {
                    WeightMode::Multiplicity => {
                        if w.fract() != 0.0 {
                            return Err(Error::Parse {
                                line: line_no,
                                message: format!(
                                    "fractional weight {w} under multiplicity mode (use round)"
                                ),
                            });
                        }
                        w
                    }
                    _ => w.ceil(),
                };
                if copies < 1.0 {
                    return Err(Error::RejectedLine {
                        line: line_no,
                        message: format!("weight {w} is below 1 after rounding"),
                    });
                }
                copies as u64
            }
        };
        let mut node = |label: &str| match vocab.get(label) {
            Some(id) => Ok(id),
            None if grow => Ok(vocab.intern(label)),
            None => Err(Error::Parse {
                line: line_no,
                message: format!("unknown node label `{label}`"),
            }),
        };
        let sender = node(fields[0])?;
        let receiver = node(fields[1])?;
        let edge = Edge { sender, receiver };
        edges.extend(std::iter::repeat_n(edge, copies as usize));
    }
    let graph = MultiGraph::new(vocab.len(), edges)?;
    Ok(LoadedGraph { graph, vocab })
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// One line per edge, in edge order. Reloading reproduces the graph exactly.
pub fn save_edge_list(path: impl AsRef<Path>, graph: &MultiGraph, vocab: &Vocabulary) -> Result<()> {
    write_file(path.as_ref(), |w| {
        for e in graph.edges() {
            writeln!(w, "{}\t{}", vocab.label(e.sender), vocab.label(e.receiver))?;
        }
        Ok(())
    })
}

/// One line per distinct pair with its multiplicity as the weight column.
pub fn save_weighted_edge_list(
    path: impl AsRef<Path>,
    graph: &MultiGraph,
    vocab: &Vocabulary,
) -> Result<()> {
    write_file(path.as_ref(), |w| {
        for (e, count) in graph.weighted_pairs() {
            writeln!(
                w,
                "{}\t{}\t{}",
                vocab.label(e.sender),
                vocab.label(e.receiver),
                count
            )?;
        }
        Ok(())
    })
}

/// Two-column `id<TAB>label` sidecar.
pub fn save_labels(path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<()> {
    write_file(path.as_ref(), |w| {
        for (i, label) in vocab.labels().iter().enumerate() {
            writeln!(w, "{i}\t{label}")?;
        }
        Ok(())
    })
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<Vocabulary> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut vocab = Vocabulary::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, label) = line.split_once('\t').ok_or_else(|| Error::Parse {
            line: lineno + 1,
            message: "expected `id<TAB>label`".into(),
        })?;
        let id: usize = id.parse().map_err(|_| Error::Parse {
            line: lineno + 1,
            message: format!("bad id `{id}`"),
        })?;
        if id != vocab.len() || vocab.get(label).is_some() {
            return Err(Error::Parse {
                line: lineno + 1,
                message: "label ids must be dense, ordered and unique".into(),
            });
        }
        vocab.intern(label);
    }
    Ok(vocab)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiplicity_expands_integer_weights() {
        let g = parse_edge_list("a b 3", WeightMode::Multiplicity).unwrap();
        assert_eq!(g.graph.num_nodes(), 2);
        assert_eq!(g.graph.edges(), &[Edge::new(0, 1); 3]);
    }

    #[test]
    fn unit_weights() {
        let g = parse_edge_list("a b 1.0\nb a 1.0", WeightMode::Multiplicity).unwrap();
        assert_eq!(g.graph.edges(), &[Edge::new(0, 1), Edge::new(1, 0)]);
    }

    #[test]
    fn tab_comma_comments_and_blank_lines() {
        let text = "# header\nx\ty\t2\n\nx,z\n  # indented comment\nz y";
        let g = parse_edge_list(text, WeightMode::Multiplicity).unwrap();
        assert_eq!(g.vocab.labels(), &["x", "y", "z"]);
        assert_eq!(
            g.graph.edges(),
            &[Edge::new(0, 1), Edge::new(0, 1), Edge::new(0, 2), Edge::new(2, 1)]
        );
    }

    #[test]
    fn round_mode_ceils_fractions() {
        let g = parse_edge_list("a b 0.3\nb c 2.1", WeightMode::Round).unwrap();
        assert_eq!(g.graph.num_edges(), 1 + 3);
        let err = parse_edge_list("a b 2.5", WeightMode::Multiplicity).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn ignore_mode_counts_rows() {
        let g = parse_edge_list("a b 7\na b 0.5", WeightMode::Ignore).unwrap();
        assert_eq!(g.graph.num_edges(), 2);
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let err = parse_edge_list("a b\nonlyone\n", WeightMode::Multiplicity).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_edge_list("a b\nc d x", WeightMode::Multiplicity).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_edge_list("a b 1 2", WeightMode::Multiplicity).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn weights_below_one_are_rejected() {
        for (text, mode) in [
            ("a b 0", WeightMode::Multiplicity),
            ("a b -2", WeightMode::Round),
            ("\na b -0.5", WeightMode::Round),
        ] {
            let err = parse_edge_list(text, mode).unwrap_err();
            assert!(matches!(err, Error::RejectedLine { .. }), "{text}: {err}");
        }
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let text = "q p 2\np r\nr q\nq p";
        let loaded = parse_edge_list(text, WeightMode::Multiplicity).unwrap();
        let path = dir.path().join("g.tsv");
        save_edge_list(&path, &loaded.graph, &loaded.vocab).unwrap();
        let again = load_edge_list(&path, WeightMode::Multiplicity).unwrap();
        assert_eq!(again.graph, loaded.graph);
        assert_eq!(again.vocab, loaded.vocab);

        let wpath = dir.path().join("w.tsv");
        save_weighted_edge_list(&wpath, &loaded.graph, &loaded.vocab).unwrap();
        let weighted = load_edge_list(&wpath, WeightMode::Multiplicity).unwrap();
        assert_eq!(
            weighted.graph.weighted_pairs(),
            loaded.graph.weighted_pairs()
        );

        let lpath = dir.path().join("labels.tsv");
        save_labels(&lpath, &loaded.vocab).unwrap();
        assert_eq!(load_labels(&lpath).unwrap(), loaded.vocab);
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_edge_list("/nonexistent/edges.tsv", WeightMode::Ignore).unwrap_err();
        assert_eq!(err.kind(), "io");
    }

    #[test]
    fn shared_vocabulary() {
        let mut vocab = Vocabulary::new();
        vocab.intern("x");
        vocab.intern("y");
        let g = parse_edge_list_with("y\tx\n", WeightMode::Ignore, vocab.clone(), false).unwrap();
        assert_eq!(g.graph.edges(), &[Edge::new(1, 0)]);
        assert_eq!(g.graph.num_nodes(), 2);
        let err = parse_edge_list_with("y\tz\n", WeightMode::Ignore, vocab.clone(), false).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let grown = parse_edge_list_with("y\tz\n", WeightMode::Ignore, vocab, true).unwrap();
        assert_eq!(grown.vocab.len(), 3);
    }
}
