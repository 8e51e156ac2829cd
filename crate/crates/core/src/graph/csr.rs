use std::collections::BTreeMap;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::{RecordManifest, Split};

/// Undirected simple graph in CSR form. Every edge is stored in both
/// directions and each neighbor list is sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
}

impl Graph {
    pub fn empty(node_count: usize) -> Self {
        Self {
            offsets: vec![0; node_count + 1],
            neighbors: Vec::new(),
        }
    }

    /// Builds from per-node neighbor lists, dropping self-loops and
    /// duplicates and adding any missing reverse edges.
    pub fn from_adjacency_lists(lists: Vec<Vec<usize>>) -> Self {
        let n = lists.len();
        let mut sym: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, list) in lists.into_iter().enumerate() {
            for j in list {
                assert!(j < n, "neighbor {j} out of range for {n} nodes");
                if i != j {
                    sym[i].push(j);
                    sym[j].push(i);
                }
            }
        }
        Self::from_sorted_lists(sym.into_iter().map(|mut l| {
            l.sort_unstable();
            l.dedup();
            l
        }))
    }

    pub fn from_edges(node_count: usize, edges: &[(usize, usize)]) -> Self {
        let mut lists = vec![Vec::new(); node_count];
        for &(a, b) in edges {
            lists[a].push(b);
        }
        Self::from_adjacency_lists(lists)
    }

    /// Lists must already be sorted, deduplicated, loop-free and symmetric.
    fn from_sorted_lists(lists: impl IntoIterator<Item = Vec<usize>>) -> Self {
        let mut offsets = vec![0];
        let mut neighbors = Vec::new();
        for l in lists {
            neighbors.extend_from_slice(&l);
            offsets.push(neighbors.len());
        }
        Self { offsets, neighbors }
    }

    /// Validates raw CSR arrays (as read from disk).
    pub fn from_csr(offsets: Vec<usize>, neighbors: Vec<usize>) -> Result<Self> {
        if offsets.is_empty() || offsets[0] != 0 {
            return Err(Error::invalid("CSR offsets must start at 0"));
        }
        if *offsets.last().unwrap() != neighbors.len() {
            return Err(Error::invalid("CSR offsets do not cover the neighbor array"));
        }
        if offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid("CSR offsets are not monotone"));
        }
        let g = Self { offsets, neighbors };
        let n = g.node_count();
        for i in 0..n {
            let ns = g.neighbors(i);
            if ns.iter().any(|&j| j >= n) {
                return Err(Error::invalid(format!("node {i} has an out-of-range neighbor")));
            }
            if ns.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(format!(
                    "neighbors of node {i} are unsorted or duplicated"
                )));
            }
            if ns.binary_search(&i).is_ok() {
                return Err(Error::invalid(format!("node {i} has a self-loop")));
            }
        }
        if !g.is_symmetric() {
            return Err(Error::invalid("adjacency is not symmetric"));
        }
        Ok(g)
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges.
    #[inline]
    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[self.offsets[node]..self.offsets[node + 1]]
    }

    #[inline]
    pub fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.node_count()).map(|i| self.degree(i)).max().unwrap_or(0)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.neighbors(a).binary_search(&b).is_ok()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn neighbor_array(&self) -> &[usize] {
        &self.neighbors
    }

    /// Undirected edges `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.node_count())
            .flat_map(move |i| self.neighbors(i).iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.node_count()).all(|i| self.neighbors(i).iter().all(|&j| self.has_edge(j, i)))
    }

    fn to_lists(&self) -> Vec<Vec<usize>> {
        (0..self.node_count()).map(|i| self.neighbors(i).to_vec()).collect()
    }

    /// Keeps only edges for which `keep(i, j)` holds.
    pub fn filter_edges(&self, mut keep: impl FnMut(usize, usize) -> bool) -> Graph {
        Self::from_sorted_lists((0..self.node_count()).map(|i| {
            self.neighbors(i)
                .iter()
                .copied()
                .filter(|&j| keep(i, j))
                .collect::<Vec<_>>()
        }))
    }
}

/// Links every pair of distinct records that share `property_key`.
/// Records without the property share the sentinel value and link to
/// each other.
pub fn build_adjacency(manifest: &RecordManifest, property_key: &str) -> Result<Graph> {
    if manifest.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in manifest.records().iter().enumerate() {
        groups.entry(r.property(property_key)).or_default().push(i);
    }
    let mut group_of = vec![0usize; manifest.len()];
    let members: Vec<Vec<usize>> = groups.into_values().collect();
    for (g, nodes) in members.iter().enumerate() {
        for &i in nodes {
            group_of[i] = g;
        }
    }
    Ok(Graph::from_sorted_lists((0..manifest.len()).map(|i| {
        members[group_of[i]]
            .iter()
            .copied()
            .filter(|&j| j != i)
            .collect::<Vec<_>>()
    })))
}

/// Caps every degree at `max_degree`. Nodes are visited in ascending id;
/// an over-cap node drops a uniform random subset of its incident edges
/// (both directions) until it sits at the cap.
pub fn downsample_degrees(g: &Graph, max_degree: usize, seed: u64) -> Result<Graph> {
    if max_degree == 0 {
        return Err(Error::invalid("max_degree must be at least 1"));
    }
    if g.max_degree() <= max_degree {
        return Ok(g.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lists = g.to_lists();
    for i in 0..lists.len() {
        let deg = lists[i].len();
        if deg <= max_degree {
            continue;
        }
        let mut drop = index::sample(&mut rng, deg, deg - max_degree).into_vec();
        drop.sort_unstable();
        let mut dropped = Vec::with_capacity(drop.len());
        let mut keep = Vec::with_capacity(max_degree);
        let mut d = drop.iter().peekable();
        for (pos, &j) in lists[i].iter().enumerate() {
            if d.peek() == Some(&&pos) {
                d.next();
                dropped.push(j);
            } else {
                keep.push(j);
            }
        }
        lists[i] = keep;
        for j in dropped {
            let l = &mut lists[j];
            if let Ok(p) = l.binary_search(&i) {
                l.remove(p);
            }
        }
    }
    Ok(Graph::from_sorted_lists(lists))
}

/// Which neighbors a split's nodes may draw from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborPolicy {
    /// Only nodes of the same split.
    #[default]
    SameSplit,
    /// Nodes of the same split plus training nodes.
    IncludeTrain,
}

/// Subgraph keeping only edges whose endpoints are both allowed for
/// `split` under `policy`.
pub fn split_view(g: &Graph, manifest: &RecordManifest, split: Split, policy: NeighborPolicy) -> Result<Graph> {
    if manifest.len() != g.node_count() {
        return Err(Error::invalid(format!(
            "manifest has {} records, graph has {} nodes",
            manifest.len(),
            g.node_count()
        )));
    }
    let allowed: Vec<bool> = (0..g.node_count())
        .map(|i| {
            let s = manifest.split_of(i)?;
            Ok(s == split || (policy == NeighborPolicy::IncludeTrain && s == Split::Train))
        })
        .collect::<Result<_>>()?;
    Ok(g.filter_edges(|i, j| allowed[i] && allowed[j]))
}
