//! Scale-free trust network between investors.
//!
//! Networks are grown with Barabási–Albert preferential attachment starting
//! from a fully connected seed clique of `m + 1` nodes. Once built, a
//! [`TrustNetwork`] is immutable and can be shared freely between workers.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::Rng;

use crate::error::{Error, Result};

/// Undirected, unweighted, simple graph stored as sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrustNetwork {
    adjacency: Vec<Vec<u32>>,
}

/// Histogram of node degrees plus a log-log power-law fit.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    /// degree -> number of nodes with that degree (degree 0 included).
    pub histogram: BTreeMap<usize, usize>,
    /// Slope of `ln(count)` against `ln(degree)`.
    pub fitted_exponent: f64,
    pub fit_r2: f64,
}

impl TrustNetwork {
    /// Build a network from an explicit edge list.
    ///
    /// Rejects self-loops, duplicate edges and out-of-range endpoints.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidNetwork(format!(
                    "edge {a}-{b} out of range for {n} nodes"
                )));
            }
            if a == b {
                return Err(Error::InvalidNetwork(format!("self-loop on node {a}")));
            }
            adjacency[a].push(b as u32);
            adjacency[b].push(a as u32);
        }
        for (i, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidNetwork(format!(
                    "duplicate edge at node {i}"
                )));
            }
        }
        Ok(Self { adjacency })
    }

    /// Barabási–Albert network on `n` nodes with `m` links per new node.
    pub fn generate_ba<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Self> {
        Self::generate_ba_with_isolated(n, m, 0.0, rng)
    }

    /// Like [`generate_ba`](Self::generate_ba), but the last
    /// `floor(isolated_fraction * n)` node ids are withheld from attachment
    /// and stay at degree 0.
    pub fn generate_ba_with_isolated<R: Rng + ?Sized>(
        n: usize,
        m: usize,
        isolated_fraction: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if m < 1 || n <= m {
            return Err(Error::InvalidParameter(format!(
                "Barabási–Albert needs n > m >= 1 (got n={n}, m={m})"
            )));
        }
        if !(0.0..1.0).contains(&isolated_fraction) {
            return Err(Error::InvalidParameter(format!(
                "isolated_fraction must lie in [0, 1) (got {isolated_fraction})"
            )));
        }
        let isolated = (isolated_fraction * n as f64).floor() as usize;
        let attached = n - isolated;
        if attached <= m {
            return Err(Error::InvalidParameter(format!(
                "only {attached} attachable nodes left for m={m}"
            )));
        }

        let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); n];
        // Every edge endpoint appears once here, so a uniform pick is a
        // degree-proportional pick.
        let mut endpoints: Vec<u32> = Vec::with_capacity(2 * m * attached);

        for i in 0..=m {
            for j in (i + 1)..=m {
                adjacency[i].push(j as u32);
                adjacency[j].push(i as u32);
                endpoints.push(i as u32);
                endpoints.push(j as u32);
            }
        }

        let mut targets: Vec<u32> = Vec::with_capacity(m);
        for node in (m + 1)..attached {
            targets.clear();
            while targets.len() < m {
                let pick = endpoints[rng.random_range(0..endpoints.len())];
                if !targets.contains(&pick) {
                    targets.push(pick);
                }
            }
            for &t in &targets {
                adjacency[node].push(t);
                adjacency[t as usize].push(node as u32);
                endpoints.push(node as u32);
                endpoints.push(t);
            }
        }

        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self { adjacency })
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn neighbors(&self, node: usize) -> &[u32] {
        &self.adjacency[node]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// All edges as `(i, j)` with `i < j`, sorted lexicographically.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (i, list) in self.adjacency.iter().enumerate() {
            for &j in list {
                let j = j as usize;
                if i < j {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// FNV-1a over the sorted edge list. Equal networks give equal checksums.
    pub fn checksum(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        let mut feed = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(PRIME);
            }
        };
        feed(self.n() as u64);
        for (i, j) in self.edges() {
            feed(i as u64);
            feed(j as u64);
        }
        h
    }

    /// Node of maximum degree, lowest id on ties. `None` for an empty network.
    pub fn hub(&self) -> Option<usize> {
        let mut best: Option<(usize, usize)> = None;
        for (i, list) in self.adjacency.iter().enumerate() {
            match best {
                Some((_, d)) if list.len() <= d => {}
                _ => best = Some((i, list.len())),
            }
        }
        best.map(|(i, _)| i)
    }

    /// The `k` nodes of smallest positive degree, ties by ascending id.
    pub fn least_connected(&self, k: usize) -> Result<Vec<usize>> {
        let mut candidates: Vec<(usize, usize)> = self
            .adjacency
            .iter()
            .enumerate()
            .filter(|(_, l)| !l.is_empty())
            .map(|(i, l)| (l.len(), i))
            .collect();
        if candidates.len() < k {
            return Err(Error::InsufficientNodes {
                requested: k,
                available: candidates.len(),
            });
        }
        candidates.sort_unstable();
        let mut ids: Vec<usize> = candidates.into_iter().take(k).map(|(_, i)| i).collect();
        ids.sort_unstable();
        Ok(ids)
    }

    /// Degree histogram plus a power-law fit on log-binned densities.
    pub fn degree_distribution(&self) -> Result<DegreeDistribution> {
        let degrees = self.degrees();
        let mut histogram = BTreeMap::new();
        for &d in &degrees {
            *histogram.entry(d).or_insert(0usize) += 1;
        }
        let fit = fit_degree_exponent(&degrees)?;
        Ok(DegreeDistribution {
            histogram,
            fitted_exponent: fit.slope,
            fit_r2: fit.r2,
        })
    }

    /// Writes the `nodes=<n>` header followed by one sorted `i j` edge per line.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "nodes={}", self.n())?;
        for (i, j) in self.edges() {
            writeln!(w, "{i} {j}")?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty network file".into()))??;
        let n: usize = header
            .trim()
            .strip_prefix("nodes=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad header line: {header:?}")))?;
        let mut edges = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parse = |p: Option<&str>| p.and_then(|s| s.parse::<usize>().ok());
            match (parse(parts.next()), parse(parts.next()), parts.next()) {
                (Some(a), Some(b), None) => edges.push((a, b)),
                _ => {
                    return Err(Error::Parse(format!(
                        "line {}: expected `i j`, got {line:?}",
                        lineno + 2
                    )))
                }
            }
        }
        Self::from_edges(n, &edges)
    }
}

/// Ratio between consecutive bin edges of the log-binned degree density.
pub const DEGREE_BIN_RATIO: f64 = std::f64::consts::SQRT_2;

/// Fits `ln p(k)` against `ln k` with geometrically growing degree bins.
///
/// Each bin's density is its node count divided by the number of integer
/// degrees it spans, so sparse tail bins are not flattened to one-node
/// counts the way a raw histogram would be. Degree-0 nodes are ignored.
pub fn fit_degree_exponent(degrees: &[usize]) -> Result<crate::analysis::LinearFit> {
    let positive: Vec<usize> = degrees.iter().copied().filter(|&d| d > 0).collect();
    let (Some(&kmin), Some(&kmax)) = (positive.iter().min(), positive.iter().max()) else {
        return Err(Error::FitUndefined("no node with positive degree".into()));
    };
    let mut edges = vec![kmin];
    let mut x = kmin as f64;
    while *edges.last().unwrap() <= kmax {
        x *= DEGREE_BIN_RATIO;
        let next = (x.ceil() as usize).max(edges.last().unwrap() + 1);
        edges.push(next);
    }
    let mut counts = vec![0usize; edges.len() - 1];
    for &d in &positive {
        let bin = edges.partition_point(|&e| e <= d) - 1;
        counts[bin] += 1;
    }
    let n = positive.len() as f64;
    let points: Vec<(f64, f64)> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| {
            let (lo, hi) = (edges[i], edges[i + 1]);
            let center = ((lo * (hi - 1)) as f64).sqrt();
            let density = c as f64 / ((hi - lo) as f64 * n);
            (center.ln(), density.ln())
        })
        .collect();
    if points.len() < 3 {
        return Err(Error::FitUndefined(format!(
            "need at least 3 occupied degree bins, found {}",
            points.len()
        )));
    }
    crate::analysis::linear_fit(&points)
        .ok_or_else(|| Error::FitUndefined("degenerate degree spread".into()))
}
