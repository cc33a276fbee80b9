// SPDX-License-Identifier: MIT OR Apache-2.0

use crate::error::{Error, Result};
use crate::graph::AttributionGraph;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageRankOptions {
    pub damping: f64,
    /// Convergence threshold on the L1 change between iterates.
    pub tol: f64,
    pub max_iter: usize,
    /// Transition probabilities proportional to `|weight|` instead of uniform.
    pub weighted: bool,
    /// Run on the reversed graph.
    pub reversed: bool,
}

impl Default for PageRankOptions {
    fn default() -> Self {
        PageRankOptions {
            damping: 0.85,
            tol: 1e-10,
            max_iter: 200,
            weighted: false,
            reversed: false,
        }
    }
}

/// PageRank by power iteration with uniform teleport.
///
/// Mass held by dangling nodes (no outgoing transition mass) is spread uniformly
/// over all nodes, so every iterate is a probability vector.
pub fn pagerank(graph: &AttributionGraph, opts: &PageRankOptions) -> Result<Vec<f64>> {
    let n = graph.node_count();
    if n == 0 {
        return Ok(Vec::new());
    }
    let links: Vec<(usize, usize, f64)> = graph
        .edges
        .iter()
        .map(|e| {
            let w = if opts.weighted { e.weight.abs() } else { 1.0 };
            if opts.reversed {
                (e.dst, e.src, w)
            } else {
                (e.src, e.dst, w)
            }
        })
        .collect();
    let mut out_mass = vec![0.0f64; n];
    for &(s, _, w) in &links {
        out_mass[s] += w;
    }

    let nf = n as f64;
    let d = opts.damping;
    let mut rank = vec![1.0 / nf; n];
    let mut next = vec![0.0f64; n];
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let dangling: f64 = (0..n).filter(|&v| out_mass[v] <= 0.0).map(|v| rank[v]).sum();
        let base = (1.0 - d) / nf + d * dangling / nf;
        next.iter_mut().for_each(|x| *x = base);
        for &(s, t, w) in &links {
            if out_mass[s] > 0.0 {
                next[t] += d * rank[s] * w / out_mass[s];
            }
        }
        // Renormalize to absorb rounding drift.
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        residual = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if residual < opts.tol {
            return Ok(rank);
        }
    }
    Err(Error::PageRankDiverged {
        iterations: opts.max_iter,
        residual,
    })
}

/// Largest PageRank score.
pub fn max_pagerank(graph: &AttributionGraph, opts: &PageRankOptions) -> Result<f64> {
    Ok(pagerank(graph, opts)?.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Region;

    fn graph(n: usize, edges: &[(usize, usize)]) -> AttributionGraph {
        let mut g = AttributionGraph::new(1);
        for i in 0..n {
            g.add_node(i, 0, Region::Intermediate);
        }
        for &(s, d) in edges {
            g.add_edge(s, d, 1.0);
        }
        g
    }

    /// Solves the stationary equations directly by Gaussian elimination.
    fn dense_solve(n: usize, edges: &[(usize, usize)], d: f64) -> Vec<f64> {
        let mut out = vec![0usize; n];
        for &(s, _) in edges {
            out[s] += 1;
        }
        // x = d P^T x + (d/n) (dangling . x) 1 + (1-d)/n 1
        let mut a = vec![vec![0.0f64; n + 1]; n];
        for (i, row) in a.iter_mut().enumerate() {
            row[i] += 1.0;
            row[n] = (1.0 - d) / n as f64;
            for (j, &o) in out.iter().enumerate() {
                if o == 0 {
                    row[j] -= d / n as f64;
                }
            }
        }
        for &(s, t) in edges {
            a[t][s] -= d / out[s] as f64;
        }
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
                .unwrap();
            a.swap(col, piv);
            for r in 0..n {
                if r != col {
                    let f = a[r][col] / a[col][col];
                    for c in col..=n {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
        (0..n).map(|i| a[i][n] / a[i][i]).collect()
    }

    #[test]
    fn single_node() {
        assert_eq!(pagerank(&graph(1, &[]), &Default::default()).unwrap(), vec![1.0]);
    }

    #[test]
    fn sink_gains_mass() {
        let pr = pagerank(&graph(2, &[(0, 1)]), &Default::default()).unwrap();
        assert!(pr[1] > pr[0]);
        assert!((pr.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn star_matches_linear_solve() {
        let edges: Vec<_> = (1..=5).map(|leaf| (leaf, 0)).collect();
        let pr = pagerank(&graph(6, &edges), &Default::default()).unwrap();
        let exact = dense_solve(6, &edges, 0.85);
        for (a, b) in pr.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        assert!(pr[0] > pr[1]);
    }

    #[test]
    fn edgeless_is_uniform() {
        let pr = pagerank(&graph(5, &[]), &Default::default()).unwrap();
        assert!(pr.iter().all(|&x| (x - 0.2).abs() < 1e-15));
    }

    #[test]
    fn reversed_moves_mass_to_sources() {
        let opts = PageRankOptions {
            reversed: true,
            ..Default::default()
        };
        let pr = pagerank(&graph(2, &[(0, 1)]), &opts).unwrap();
        assert!(pr[0] > pr[1]);
    }

    #[test]
    fn weighted_follows_heavier_edge() {
        let mut g = graph(3, &[]);
        g.add_edge(0, 1, 0.1);
        g.add_edge(0, 2, -0.9);
        let opts = PageRankOptions {
            weighted: true,
            ..Default::default()
        };
        let pr = pagerank(&g, &opts).unwrap();
        assert!(pr[2] > pr[1]);
    }

    #[test]
    fn non_convergence_reports_residual() {
        let opts = PageRankOptions {
            max_iter: 2,
            tol: 0.0,
            ..Default::default()
        };
        match pagerank(&graph(3, &[(0, 1), (1, 2)]), &opts) {
            Err(Error::PageRankDiverged { iterations: 2, residual }) => assert!(residual > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }
}
