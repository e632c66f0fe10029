//! Agglomerative complete-linkage clustering on a fixed leaf distance matrix.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json;
use crate::matrix::Matrix;

/// One agglomeration step. Leaves have ids `0..n`; merge `k` creates id `n + k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub id_a: usize,
    pub id_b: usize,
    pub id: usize,
    #[serde(with = "json::real")]
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub leaves: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn new(leaves: usize, merges: Vec<Merge>) -> Result<Self> {
        if leaves == 0 || merges.len() != leaves - 1 {
            return Err(Error::InvalidArgument(format!("{} merges for {leaves} leaves", merges.len())));
        }
        let mut used = vec![false; 2 * leaves - 1];
        for (k, m) in merges.iter().enumerate() {
            let fresh = leaves + k;
            let ok = m.id == fresh
                && m.id_a != m.id_b
                && m.id_a < fresh
                && m.id_b < fresh
                && !used[m.id_a]
                && !used[m.id_b]
                && m.height >= 0.0;
            if !ok {
                return Err(Error::InvalidArgument(format!("malformed merge {k}: {m:?}")));
            }
            used[m.id_a] = true;
            used[m.id_b] = true;
        }
        Ok(Self { leaves, merges })
    }

    pub fn heights(&self) -> impl Iterator<Item = f64> + '_ {
        self.merges.iter().map(|m| m.height)
    }
}

/// Assignment `f: state -> cluster` onto `0..n_clusters`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterMap {
    assignment: Vec<usize>,
    n_clusters: usize,
}

impl ClusterMap {
    pub fn new(assignment: Vec<usize>) -> Result<Self> {
        let n_clusters = assignment.iter().max().map_or(0, |m| m + 1);
        let mut hit = vec![false; n_clusters];
        for &c in &assignment {
            hit[c] = true;
        }
        if let Some(c) = hit.iter().position(|h| !h) {
            return Err(Error::EmptyCluster(c));
        }
        Ok(Self { assignment, n_clusters })
    }

    pub fn identity(n: usize) -> Self {
        Self { assignment: (0..n).collect(), n_clusters: n }
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    #[inline]
    pub fn cluster_of(&self, state: usize) -> usize {
        self.assignment[state]
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn n_states(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_identity(&self) -> bool {
        self.assignment.iter().enumerate().all(|(i, &c)| i == c)
    }

    /// Member states of each cluster, in ascending order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_clusters];
        for (q, &c) in self.assignment.iter().enumerate() {
            out[c].push(q);
        }
        out
    }

    /// Relabels clusters by their smallest member.
    pub fn canonical(&self) -> Self {
        let mut label = vec![usize::MAX; self.n_clusters];
        let mut next = 0;
        let assignment = self
            .assignment
            .iter()
            .map(|&c| {
                if label[c] == usize::MAX {
                    label[c] = next;
                    next += 1;
                }
                label[c]
            })
            .collect();
        Self { assignment, n_clusters: self.n_clusters }
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    dist: f64,
    lo: usize,
    hi: usize,
    slot: usize,
}

impl Candidate {
    fn cmp_key(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.lo.cmp(&other.lo))
            .then(self.hi.cmp(&other.hi))
    }
}

/// Complete-linkage agglomeration.
///
/// The union distance is the largest leaf distance inside the union. Ties go
/// to the pair with the smallest lower cluster id, then the smallest upper id.
pub fn hierarchical_cluster(distances: &Matrix) -> Result<Dendrogram> {
    let n = distances.rows();
    if n == 0 || distances.cols() != n {
        return Err(Error::InvalidMatrix("distance matrix must be square and non-empty".into()));
    }
    if distances.as_slice().iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::InvalidMatrix("distances must be finite and non-negative".into()));
    }
    let mut merges = Vec::with_capacity(n - 1);
    let Some(groups) = zero_distance_groups(distances) else {
        agglomerate(distances.clone(), (0..n).collect(), &mut merges);
        return Dendrogram::new(n, merges);
    };
    // Zero-height merges always come first; replaying them directly keeps
    // large blocks of identical rows (unvisited words) from swamping the
    // neighbor cache with ties.
    let ids = merge_zero_groups(&groups, n, &mut merges);
    let mut group_of = vec![0; n];
    for (g, members) in groups.iter().enumerate() {
        for &q in members {
            group_of[q] = g;
        }
    }
    let mut sub = Matrix::zeros(groups.len(), groups.len());
    for a in 0..n {
        for b in 0..n {
            let (ga, gb) = (group_of[a], group_of[b]);
            if ga != gb && distances[(a, b)] > sub[(ga, gb)] {
                sub[(ga, gb)] = distances[(a, b)];
            }
        }
    }
    agglomerate(sub, ids, &mut merges);
    Dendrogram::new(n, merges)
}

/// Leaves joined by exact zero distance, ordered by smallest member, or
/// `None` if some joined pair is not itself at zero distance.
fn zero_distance_groups(d: &Matrix) -> Option<Vec<Vec<usize>>> {
    let n = d.rows();
    let mut root: Vec<usize> = (0..n).collect();
    fn find(root: &mut [usize], mut x: usize) -> usize {
        while root[x] != x {
            root[x] = root[root[x]];
            x = root[x];
        }
        x
    }
    for a in 0..n {
        for b in a + 1..n {
            if d[(a, b)] == 0.0 {
                let (ra, rb) = (find(&mut root, a), find(&mut root, b));
                if ra != rb {
                    root[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut index = vec![usize::MAX; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for q in 0..n {
        let r = find(&mut root, q);
        if index[r] == usize::MAX {
            index[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[index[r]].push(q);
    }
    let closed = groups
        .iter()
        .all(|g| g.iter().all(|&a| g.iter().all(|&b| d[(a, b)] == 0.0)));
    closed.then_some(groups)
}

/// Replays the zero-height merges in tie order; returns the id of each group's cluster.
fn merge_zero_groups(groups: &[Vec<usize>], leaves: usize, merges: &mut Vec<Merge>) -> Vec<usize> {
    use std::cmp::Reverse;
    use std::collections::{BinaryHeap, VecDeque};
    let mut live: Vec<VecDeque<usize>> = groups.iter().map(|g| g.iter().copied().collect()).collect();
    let mut heap: BinaryHeap<Reverse<(usize, usize, usize)>> = live
        .iter()
        .enumerate()
        .filter(|(_, g)| g.len() > 1)
        .map(|(i, g)| Reverse((g[0], g[1], i)))
        .collect();
    while let Some(Reverse((a, b, g))) = heap.pop() {
        let id = leaves + merges.len();
        merges.push(Merge { id_a: a, id_b: b, id, height: 0.0 });
        let q = &mut live[g];
        q.pop_front();
        q.pop_front();
        q.push_back(id);
        if q.len() > 1 {
            heap.push(Reverse((q[0], q[1], g)));
        }
    }
    live.iter().map(|g| g[0]).collect()
}

/// Greedy merging of the clusters in `dist`, whose current ids are `ids`.
fn agglomerate(mut dist: Matrix, mut ids: Vec<usize>, merges: &mut Vec<Merge>) {
    let n = dist.rows();
    let leaves = merges.len() + ids.len();
    let mut active = vec![true; n];
    let nearest = |dist: &Matrix, ids: &[usize], active: &[bool], i: usize| -> Option<Candidate> {
        (0..n)
            .filter(|&j| j != i && active[j])
            .map(|j| Candidate { dist: dist[(i, j)], lo: ids[i].min(ids[j]), hi: ids[i].max(ids[j]), slot: j })
            .min_by(Candidate::cmp_key)
    };
    let mut nn: Vec<Option<Candidate>> = (0..n).map(|i| nearest(&dist, &ids, &active, i)).collect();

    for _ in 0..n.saturating_sub(1) {
        let (i, best) = (0..n)
            .filter(|&i| active[i])
            .filter_map(|i| nn[i].map(|c| (i, c)))
            .min_by(|a, b| a.1.cmp_key(&b.1))
            .expect("at least two active clusters");
        let j = best.slot;
        let new_id = leaves + merges.len();
        merges.push(Merge { id_a: best.lo, id_b: best.hi, id: new_id, height: best.dist });

        active[j] = false;
        nn[j] = None;
        for k in (0..n).filter(|&k| active[k] && k != i) {
            let d = dist[(i, k)].max(dist[(j, k)]);
            dist[(i, k)] = d;
            dist[(k, i)] = d;
        }
        ids[i] = new_id;
        nn[i] = nearest(&dist, &ids, &active, i);
        // Union distances never shrink and the new id is the largest, so only
        // clusters that pointed at either merged slot need a fresh neighbor.
        for k in (0..n).filter(|&k| active[k] && k != i) {
            if nn[k].is_some_and(|c| c.slot == i || c.slot == j) {
                nn[k] = nearest(&dist, &ids, &active, k);
            }
        }
    }
}

/// Partition after `leaves - n_clusters` merges, labeled by smallest member.
pub fn cut(dendrogram: &Dendrogram, n_clusters: usize) -> Result<ClusterMap> {
    let leaves = dendrogram.leaves;
    if n_clusters == 0 || n_clusters > leaves {
        return Err(Error::BadCut { requested: n_clusters, leaves });
    }
    // parent pointers over all node ids
    let mut parent: Vec<usize> = (0..2 * leaves - 1).collect();
    for m in &dendrogram.merges[..leaves - n_clusters] {
        parent[m.id_a] = m.id;
        parent[m.id_b] = m.id;
    }
    let root = |mut x: usize| {
        while parent[x] != x {
            x = parent[x];
        }
        x
    };
    let roots: Vec<usize> = (0..leaves).map(root).collect();
    let mut label = std::collections::HashMap::new();
    let assignment = roots
        .iter()
        .map(|r| {
            let next = label.len();
            *label.entry(*r).or_insert(next)
        })
        .collect();
    ClusterMap::new(assignment)
}
