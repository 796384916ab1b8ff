use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Dataset, TemporalGraph, Trajectory};

/// Barabási-Albert growth parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BaParams {
    /// Size of the initial clique.
    pub m0: usize,
    /// Edges attached by every new node.
    pub k: usize,
    /// Final node count.
    pub m: usize,
    pub seed: u64,
}

impl BaParams {
    pub fn validate(&self) -> Result<()> {
        if self.m0 < 2 {
            return Err(Error::arg(format!("m0 must be >= 2, got {}", self.m0)));
        }
        if self.k < 1 || self.k > self.m0 {
            return Err(Error::arg(format!("k must lie in [1, m0={}], got {}", self.m0, self.k)));
        }
        if self.m <= self.m0 {
            return Err(Error::arg(format!("m must exceed m0={}, got {}", self.m0, self.m)));
        }
        Ok(())
    }

    /// m0(m0-1)/2 + k(m-m0).
    pub fn final_edge_count(&self) -> usize {
        self.m0 * (self.m0 - 1) / 2 + self.k * (self.m - self.m0)
    }
}

/// Grows one graph from an `m0`-clique to `m` nodes. Every snapshot along the
/// way, starting with the clique itself, is a trajectory element.
pub fn generate_ba_trajectory(p: &BaParams) -> Result<Trajectory> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut degree = vec![0usize; p.m];
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(p.final_edge_count());
    for i in 0..p.m0 {
        for j in i + 1..p.m0 {
            edges.push((i, j));
            degree[i] += 1;
            degree[j] += 1;
        }
    }
    let mut snapshots = Vec::with_capacity(p.m - p.m0 + 1);
    snapshots.push(snapshot(p.m0, &edges));

    let mut chosen = Vec::with_capacity(p.k);
    for v in p.m0..p.m {
        chosen.clear();
        // Sequential draws proportional to degree, excluding nodes already
        // picked, give k distinct targets.
        for _ in 0..p.k {
            let total: usize = (0..v).filter(|u| !chosen.contains(u)).map(|u| degree[u]).sum();
            let mut ticket = rng.random_range(0..total);
            let target = (0..v)
                .filter(|u| !chosen.contains(u))
                .find(|&u| {
                    if ticket < degree[u] {
                        true
                    } else {
                        ticket -= degree[u];
                        false
                    }
                })
                .expect("ticket below total degree");
            chosen.push(target);
        }
        for &u in &chosen {
            edges.push((u, v));
            degree[u] += 1;
            degree[v] += 1;
        }
        snapshots.push(snapshot(v + 1, &edges));
    }
    Ok(Trajectory {
        id: format!("ba-{}", p.seed),
        snapshots,
    })
}

fn snapshot(n: usize, edges: &[(usize, usize)]) -> TemporalGraph {
    TemporalGraph::new(
        (0..n).map(|i| i.to_string()),
        edges.iter().map(|&(a, b)| (a.to_string(), b.to_string())),
    )
}

/// `count` independent trajectories; trajectory seeds derive from `p.seed`.
pub fn generate_ba_dataset(p: &BaParams, count: usize) -> Result<Dataset> {
    p.validate()?;
    let trajectories = super::child_seeds(p.seed, count)
        .into_iter()
        .enumerate()
        .map(|(j, seed)| {
            let mut t = generate_ba_trajectory(&BaParams { seed, ..*p })?;
            t.id = format!("ba-{j:03}");
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset::new(trajectories)
        .with_meta("generator", "barabasi_albert")
        .with_meta("m0", p.m0)
        .with_meta("k", p.k)
        .with_meta("m", p.m)
        .with_meta("seed", p.seed)
        .with_meta("trajectories", count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn paper_params(seed: u64) -> BaParams {
        BaParams {
            m0: 3,
            k: 2,
            m: 27,
            seed,
        }
    }

    #[test]
    fn paper_setup_gives_500_graphs() {
        let d = generate_ba_dataset(&paper_params(1), 20).unwrap();
        assert_eq!(d.trajectories[0].len(), 25);
        assert_eq!(d.snapshot_count(), 500);
        assert!(crate::graph::validate_dataset(&d).is_empty());
    }

    #[test]
    fn smallest_growth() {
        let t = generate_ba_trajectory(&BaParams {
            m0: 2,
            k: 1,
            m: 3,
            seed: 9,
        })
        .unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.snapshots[1].edge_count(), 2);
    }

    #[test]
    fn edge_and_node_increments() {
        for seed in 0..20 {
            let p = paper_params(seed);
            let t = generate_ba_trajectory(&p).unwrap();
            assert_eq!(t.snapshots[0].edge_count(), 3);
            for w in t.snapshots.windows(2) {
                assert_eq!(w[1].node_count(), w[0].node_count() + 1);
                assert_eq!(w[1].edge_count(), w[0].edge_count() + p.k);
            }
            assert_eq!(t.snapshots.last().unwrap().edge_count(), 51);
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(generate_ba_trajectory(&BaParams {
            m0: 1,
            k: 1,
            m: 5,
            seed: 0
        })
        .is_err());
        assert!(generate_ba_trajectory(&BaParams {
            m0: 3,
            k: 4,
            m: 5,
            seed: 0
        })
        .is_err());
        assert!(generate_ba_trajectory(&BaParams {
            m0: 3,
            k: 0,
            m: 5,
            seed: 0
        })
        .is_err());
        assert!(generate_ba_trajectory(&BaParams {
            m0: 3,
            k: 2,
            m: 3,
            seed: 0
        })
        .is_err());
    }

    #[test]
    fn deterministic() {
        let a = generate_ba_dataset(&paper_params(5), 3).unwrap();
        let b = generate_ba_dataset(&paper_params(5), 3).unwrap();
        assert_eq!(a, b);
        let c = generate_ba_dataset(&paper_params(6), 3).unwrap();
        assert_ne!(a, c);
    }

    fn degree_histogram(g: &TemporalGraph) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for a in g.adjacency() {
            *hist.entry(a.len()).or_default() += 1;
        }
        hist
    }

    fn ls_slope(pts: &[(f64, f64)]) -> f64 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }

    /// The fitted log-log slope over degrees seen at least 10 times matches
    /// the slope of the exact law p(d) ∝ 1 / (d (d+1) (d+2)) over the same
    /// degrees.
    #[test]
    fn degree_law_matches_exact_distribution() {
        for seed in [11, 12, 13] {
            let t = generate_ba_trajectory(&BaParams {
                m0: 3,
                k: 2,
                m: 2000,
                seed,
            })
            .unwrap();
            let hist = degree_histogram(t.snapshots.last().unwrap());
            let kept: Vec<(usize, usize)> = hist.into_iter().filter(|&(_, c)| c >= 10).collect();
            let observed: Vec<(f64, f64)> = kept.iter().map(|&(d, c)| ((d as f64).ln(), (c as f64).ln())).collect();
            let exact: Vec<(f64, f64)> = kept
                .iter()
                .map(|&(d, _)| {
                    let d = d as f64;
                    (d.ln(), -(d * (d + 1.0) * (d + 2.0)).ln())
                })
                .collect();
            let (got, want) = (ls_slope(&observed), ls_slope(&exact));
            assert!((got - want).abs() < 0.25, "seed {seed}: slope {got}, exact law {want}");
            assert!(got < -2.0);
        }
    }
}
