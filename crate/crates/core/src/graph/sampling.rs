use std::collections::HashMap;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Graph;

/// Fanouts for the two hops: 25 neighbors of each seed, then 10 neighbors
/// of each of those.
pub const DEFAULT_FANOUTS: [usize; 2] = [25, 10];

/// One bipartite hop: each target at level `l` and the neighbors sampled
/// for it, which live at level `l + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HopBlock {
    /// Global node ids of the targets (equal to the level-`l` node list).
    pub targets: Vec<usize>,
    /// `targets.len() + 1` offsets into `neighbors` / `neighbor_rows`.
    pub offsets: Vec<usize>,
    /// Global node ids of the sampled neighbors.
    pub neighbors: Vec<usize>,
    /// Row of each sampled neighbor in the level-`l + 1` node list.
    pub neighbor_rows: Vec<usize>,
}

impl HopBlock {
    #[inline]
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    #[inline]
    pub fn rows_of(&self, target: usize) -> &[usize] {
        &self.neighbor_rows[self.offsets[target]..self.offsets[target + 1]]
    }

    #[inline]
    pub fn neighbors_of(&self, target: usize) -> &[usize] {
        &self.neighbors[self.offsets[target]..self.offsets[target + 1]]
    }
}

/// Layered sample around a batch of seeds.
///
/// `levels[0]` are the seeds. `levels[l + 1]` starts with `levels[l]`
/// (so target `t` of hop `l` is also row `t` of level `l + 1`) followed by
/// newly reached nodes. `hops[l]` connects level `l` to level `l + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampledBlock {
    pub fanouts: Vec<usize>,
    pub levels: Vec<Vec<usize>>,
    pub hops: Vec<HopBlock>,
}

impl SampledBlock {
    pub fn seeds(&self) -> &[usize] {
        &self.levels[0]
    }

    pub fn depth(&self) -> usize {
        self.hops.len()
    }

    /// Nodes whose input features the encoder reads.
    pub fn input_nodes(&self) -> &[usize] {
        self.levels.last().expect("at least the seed level")
    }
}

/// Uniformly samples up to `fanouts[l]` neighbors without replacement for
/// every target at level `l`; targets with fewer candidates keep them all.
///
/// With `artist_of` set, edges between a seed and a node of the same artist
/// are never sampled. Edges between non-seed nodes are not masked.
pub fn sample_neighborhood(
    g: &Graph,
    seeds: &[usize],
    fanouts: &[usize],
    artist_of: Option<&[u32]>,
    seed: u64,
) -> SampledBlock {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_seeds = seeds.len();
    let mut levels = vec![seeds.to_vec()];
    let mut hops = Vec::with_capacity(fanouts.len());
    let mut candidates = Vec::new();

    for &fanout in fanouts {
        let targets = levels.last().unwrap().clone();
        let mut next = targets.clone();
        let mut row_of: HashMap<usize, usize> = HashMap::with_capacity(targets.len() * 2);
        for (r, &node) in targets.iter().enumerate() {
            row_of.entry(node).or_insert(r);
        }
        let mut offsets = Vec::with_capacity(targets.len() + 1);
        offsets.push(0);
        let mut neighbors = Vec::new();
        let mut neighbor_rows = Vec::new();

        for (t, &node) in targets.iter().enumerate() {
            candidates.clear();
            let all = g.neighbors(node);
            match artist_of {
                Some(artists) if t < n_seeds => {
                    let own = artists[node];
                    candidates.extend(all.iter().copied().filter(|&j| artists[j] != own));
                }
                _ => candidates.extend_from_slice(all),
            }
            if candidates.len() > fanout {
                let mut picked = index::sample(&mut rng, candidates.len(), fanout).into_vec();
                picked.sort_unstable();
                for (k, p) in picked.into_iter().enumerate() {
                    candidates[k] = candidates[p];
                }
                candidates.truncate(fanout);
            }
            for &j in &candidates {
                let row = *row_of.entry(j).or_insert_with(|| {
                    next.push(j);
                    next.len() - 1
                });
                neighbors.push(j);
                neighbor_rows.push(row);
            }
            offsets.push(neighbors.len());
        }

        hops.push(HopBlock {
            targets,
            offsets,
            neighbors,
            neighbor_rows,
        });
        levels.push(next);
    }

    SampledBlock {
        fanouts: fanouts.to_vec(),
        levels,
        hops,
    }
}
