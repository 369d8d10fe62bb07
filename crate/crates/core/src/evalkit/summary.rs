use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::gibbs::SeatingState;
use crate::netcore::{DegreeStats, NodeId, Vocabulary};

/// Block-level view of one snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockSummary {
    /// Live block ids, ascending; rows and columns of `matrix` follow this order.
    pub blocks: Vec<u32>,
    /// `matrix[a][b]` counts edges seated on a pair table of blocks `(a, b)`.
    pub matrix: Vec<Vec<u64>>,
    /// Per block, the `top` nodes by `f_k(v)` with their probabilities.
    pub top_nodes: Vec<Vec<(u32, f64)>>,
}

impl BlockSummary {
    pub fn total(&self) -> u64 {
        self.matrix.iter().flatten().sum()
    }

    /// Nonzero `(row, column)` positions of the matrix.
    pub fn support(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, row) in self.matrix.iter().enumerate() {
            for (b, &c) in row.iter().enumerate() {
                if c > 0 {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

pub fn block_summary(state: &SeatingState, top: usize) -> BlockSummary {
    let blocks = state.block_ids();
    let pos = |k: u32| blocks.binary_search(&k).expect("live block");
    let mut matrix = vec![vec![0u64; blocks.len()]; blocks.len()];
    for i in 0..state.num_edges() {
        if let Some((a, b)) = state.edge_block_pair(i) {
            matrix[pos(a)][pos(b)] += 1;
        }
    }
    let top_nodes = blocks
        .iter()
        .map(|&k| {
            let mut ranked: Vec<(u32, f64)> = (0..state.num_nodes())
                .map(|v| (v as u32, state.node_predictive(Some(k), v)))
                .collect();
            ranked.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
            ranked.truncate(top);
            ranked
        })
        .collect();
    BlockSummary {
        blocks,
        matrix,
        top_nodes,
    }
}

fn write(path: &Path, text: String) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// CSV with a header row of receiver blocks and one row per sender block.
pub fn save_block_matrix(path: impl AsRef<Path>, summary: &BlockSummary) -> Result<()> {
    let mut out = String::from("sender_block");
    for k in &summary.blocks {
        write!(out, ",{k}").unwrap();
    }
    out.push('\n');
    for (k, row) in summary.blocks.iter().zip(&summary.matrix) {
        write!(out, "{k}").unwrap();
        for c in row {
            write!(out, ",{c}").unwrap();
        }
        out.push('\n');
    }
    write(path.as_ref(), out)
}

/// CSV `block,rank,node,probability`.
pub fn save_top_nodes(path: impl AsRef<Path>, summary: &BlockSummary, vocab: Option<&Vocabulary>) -> Result<()> {
    let mut out = String::from("block,rank,node,probability\n");
    for (k, list) in summary.blocks.iter().zip(&summary.top_nodes) {
        for (rank, &(v, p)) in list.iter().enumerate() {
            let name = match vocab {
                Some(voc) => voc.label(NodeId(v)).to_string(),
                None => v.to_string(),
            };
            writeln!(out, "{k},{},{name},{p:.6e}", rank + 1).unwrap();
        }
    }
    write(path.as_ref(), out)
}

/// CSV `degree,count` over positive total degrees.
pub fn save_degree_csv(path: impl AsRef<Path>, stats: &DegreeStats) -> Result<()> {
    let mut out = String::from("degree,count\n");
    for (d, c) in stats.distribution() {
        writeln!(out, "{d},{c}").unwrap();
    }
    write(path.as_ref(), out)
}

/// Log-log scatter of the degree distribution as a standalone SVG.
pub fn save_degree_svg(path: impl AsRef<Path>, stats: &DegreeStats) -> Result<()> {
    const W: f64 = 480.0;
    const H: f64 = 360.0;
    const M: f64 = 48.0;
    let dist = stats.distribution();
    let pts: Vec<(f64, f64)> = dist
        .iter()
        .map(|&(d, c)| ((d as f64).log10(), (c as f64).log10()))
        .collect();
    let xmax = pts.iter().map(|p| p.0).fold(0.0, f64::max).max(1.0).ceil();
    let ymax = pts.iter().map(|p| p.1).fold(0.0, f64::max).max(1.0).ceil();
    let sx = |x: f64| M + x / xmax * (W - 2.0 * M);
    let sy = |y: f64| H - M - y / ymax * (H - 2.0 * M);

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(
        out,
        r#"<path d="M{M},{top} V{bot} H{right}" stroke="black" fill="none"/>"#,
        top = M,
        bot = H - M,
        right = W - M
    )
    .unwrap();
    for i in 0..=xmax as i32 {
        let x = sx(i as f64);
        writeln!(
            out,
            r#"<text x="{x:.1}" y="{:.1}" font-size="11" text-anchor="middle">1e{i}</text>"#,
            H - M + 16.0
        )
        .unwrap();
    }
    for i in 0..=ymax as i32 {
        let y = sy(i as f64);
        writeln!(
            out,
            r#"<text x="{:.1}" y="{y:.1}" font-size="11" text-anchor="end">1e{i}</text>"#,
            M - 6.0
        )
        .unwrap();
    }
    writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">degree</text>"#,
        W / 2.0,
        H - 8.0
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="14" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.1})">nodes</text>"#,
        H / 2.0,
        H / 2.0
    )
    .unwrap();
    for (x, y) in pts {
        writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="steelblue"/>"#, sx(x), sy(y)).unwrap();
    }
    out.push_str("</svg>\n");
    write(path.as_ref(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crp::Rng;
    use crate::gibbs::{HyperParams, Model};
    use crate::netcore::{degree_stats, MultiGraph};

    fn fitted(model: Model) -> SeatingState {
        let (g, _) = crate::genmodel::make_synthetic_benchmark("paper-like", 0).unwrap();
        let mut st = SeatingState::new(&g, HyperParams::default(), model).unwrap();
        let mut rng = Rng::seed_from_u64(1);
        st.initialize(&mut rng);
        st.sweep_edges(None, &mut rng);
        st
    }

    #[test]
    fn matrix_partitions_the_edges() {
        let st = fitted(Model::Ndmdnd);
        let s = block_summary(&st, 5);
        assert_eq!(s.total(), st.num_edges() as u64);
        assert_eq!(s.blocks.len(), st.num_blocks());
        for (row, &k) in s.matrix.iter().zip(&s.blocks) {
            let col: u64 = s.matrix.iter().map(|r| r[s.blocks.binary_search(&k).unwrap()]).sum();
            let participation: u64 = row.iter().sum::<u64>() + col;
            assert_eq!(participation, st.block_total(k) as u64);
        }
        for list in &s.top_nodes {
            assert!(list.len() <= 5);
            assert!(list.windows(2).all(|w| w[0].1 >= w[1].1));
        }
    }

    #[test]
    fn diagonal_fit_has_no_off_diagonal_mass() {
        let s = block_summary(&fitted(Model::Mdnd), 3);
        assert!(s.support().iter().all(|(a, b)| a == b));
    }

    #[test]
    fn exports_have_headers() {
        let dir = tempfile::tempdir().unwrap();
        let st = fitted(Model::Ndmdnd);
        let s = block_summary(&st, 2);
        save_block_matrix(dir.path().join("m.csv"), &s).unwrap();
        save_top_nodes(dir.path().join("t.csv"), &s, None).unwrap();
        let m = fs::read_to_string(dir.path().join("m.csv")).unwrap();
        assert!(m.starts_with("sender_block,"));
        assert_eq!(m.lines().count(), s.blocks.len() + 1);
        let t = fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert!(t.starts_with("block,rank,node,probability\n"));

        let g = MultiGraph::from_pairs(3, &[(0, 1), (0, 1), (0, 2)]).unwrap();
        let deg = degree_stats(&g);
        save_degree_csv(dir.path().join("d.csv"), &deg).unwrap();
        assert_eq!(fs::read_to_string(dir.path().join("d.csv")).unwrap(), "degree,count\n1,1\n2,1\n3,1\n");
        save_degree_svg(dir.path().join("d.svg"), &deg).unwrap();
        let svg = fs::read_to_string(dir.path().join("d.svg")).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 3);
    }
}
