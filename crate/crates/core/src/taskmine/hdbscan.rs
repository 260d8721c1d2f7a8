//! Hierarchical density-based clustering.
//!
//! The exact algorithm, shared with the naive reference in [`super::naive`]:
//!
//! 1. `core(p)` = distance to the `min_samples`-th nearest point, counting
//!    `p` itself.
//! 2. Mutual reachability `mreach(a,b) = max(core(a), core(b), d(a,b))`.
//! 3. Exact MST of the complete mutual-reachability graph (Prim here), with
//!    edges normalized to `a < b` and sorted by `(weight, a, b)`.
//! 4. Single-linkage dendrogram over the sorted edges; `lambda = 1/distance`
//!    (infinite at distance zero).
//! 5. Condensation with `min_cluster_size`: a split where both sides are
//!    large enough starts two child clusters; otherwise the small side's
//!    points fall out of the current cluster at the split's lambda.
//!    Condensed clusters are numbered breadth-first from the root, so a
//!    parent's id is always smaller than its children's.
//! 6. Stability of a cluster born at `lb`:
//!    `sum_fallen (lambda_p - lb) + sum_children (lambda_split - lb) * size`.
//! 7. Excess-of-mass selection over *all* condensed clusters, root included
//!    (so one homogeneous blob comes back as one cluster rather than all
//!    noise); children are processed before parents, a cluster is kept when
//!    its own stability reaches the sum of its children's propagated
//!    stabilities, and a kept ancestor overrides kept descendants. Leaf
//!    selection keeps exactly the childless clusters instead.
//! 8. A point is labeled by the unique selected cluster at or above the
//!    cluster it fell out of; points that fall out above every selected
//!    cluster are noise (-1).

use serde::{Deserialize, Serialize};

use crate::linalg::euclidean;

use super::MineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMethod {
    ExcessOfMass,
    Leaf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HdbscanParams {
    pub min_cluster_size: usize,
    pub min_samples: usize,
    pub selection: SelectionMethod,
}

impl HdbscanParams {
    /// `min_samples` defaults to `min_cluster_size`.
    pub fn new(min_cluster_size: usize) -> Self {
        Self {
            min_cluster_size,
            min_samples: min_cluster_size,
            selection: SelectionMethod::ExcessOfMass,
        }
    }
}

/// Per-sample labels (`-1` = noise) plus cluster statistics. Labels are
/// consecutive from 0 and every cluster holds at least `min_cluster_size`
/// members.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub labels: Vec<i64>,
    pub num_clusters: usize,
    pub cluster_sizes: Vec<usize>,
    pub stabilities: Vec<f64>,
}

impl ClusterAssignment {
    fn all_noise(n: usize) -> Self {
        Self {
            labels: vec![-1; n],
            num_clusters: 0,
            cluster_sizes: Vec::new(),
            stabilities: Vec::new(),
        }
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l < 0).count()
    }
}

/// Distance to the `min_samples`-th nearest neighbor, self included.
pub fn core_distances(points: &[Vec<f64>], min_samples: usize) -> Vec<f64> {
    let n = points.len();
    let mut out = Vec::with_capacity(n);
    let mut scratch = vec![0.0; n];
    for a in 0..n {
        for b in 0..n {
            scratch[b] = euclidean(&points[a], &points[b]);
        }
        scratch.sort_unstable_by(|x, y| x.partial_cmp(y).expect("finite distances"));
        out.push(scratch[min_samples - 1]);
    }
    out
}

pub fn mutual_reachability(core_a: f64, core_b: f64, dist: f64) -> f64 {
    core_a.max(core_b).max(dist)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MstEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// Exact Prim MST over mutual reachability, canonically ordered.
pub fn build_mst(points: &[Vec<f64>], core: &[f64]) -> Vec<MstEdge> {
    let n = points.len();
    let mut in_tree = vec![false; n];
    let mut best_dist = vec![f64::INFINITY; n];
    let mut best_from = vec![0usize; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut current = 0usize;
    for _ in 1..n {
        in_tree[current] = true;
        let mut next = usize::MAX;
        let mut next_dist = f64::INFINITY;
        for i in 0..n {
            if in_tree[i] {
                continue;
            }
            let d = mutual_reachability(core[current], core[i], euclidean(&points[current], &points[i]));
            if d < best_dist[i] {
                best_dist[i] = d;
                best_from[i] = current;
            }
            if best_dist[i] < next_dist {
                next_dist = best_dist[i];
                next = i;
            }
        }
        edges.push(MstEdge {
            a: best_from[next].min(next),
            b: best_from[next].max(next),
            weight: next_dist,
        });
        current = next;
    }
    edges.sort_unstable_by(|x, y| {
        (x.weight, x.a, x.b)
            .partial_cmp(&(y.weight, y.a, y.b))
            .expect("finite weights")
    });
    edges
}

/// A dendrogram merge; node ids `>= n` refer into the hierarchy
/// (`id - n` indexes this vector), smaller ids are points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlNode {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub size: usize,
}

pub fn single_linkage_hierarchy(edges: &[MstEdge], n: usize) -> Vec<SlNode> {
    let mut parent: Vec<usize> = (0..n).collect();
    let mut comp_node: Vec<usize> = (0..n).collect();
    let mut comp_size: Vec<usize> = vec![1; n];
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut nodes = Vec::with_capacity(edges.len());
    for edge in edges {
        let ra = find(&mut parent, edge.a);
        let rb = find(&mut parent, edge.b);
        debug_assert_ne!(ra, rb, "MST edges never form cycles");
        let node = SlNode {
            left: comp_node[ra],
            right: comp_node[rb],
            distance: edge.weight,
            size: comp_size[ra] + comp_size[rb],
        };
        nodes.push(node);
        parent[rb] = ra;
        comp_node[ra] = n + nodes.len() - 1;
        comp_size[ra] = node.size;
    }
    nodes
}

fn lambda(distance: f64) -> f64 {
    if distance > 0.0 {
        1.0 / distance
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone)]
pub struct CondensedCluster {
    pub parent: Option<usize>,
    pub birth_lambda: f64,
    pub size: usize,
    /// `(point, lambda at which it left this cluster)`
    pub fallen: Vec<(usize, f64)>,
    /// `(child cluster id, lambda of the split)`
    pub children: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct CondensedTree {
    pub clusters: Vec<CondensedCluster>,
    pub n: usize,
}

impl CondensedTree {
    pub fn stability(&self, id: usize) -> f64 {
        let c = &self.clusters[id];
        let mut s = 0.0;
        for &(_, lp) in &c.fallen {
            s += lambda_span(lp, c.birth_lambda);
        }
        for &(child, split) in &c.children {
            s += lambda_span(split, c.birth_lambda) * self.clusters[child].size as f64;
        }
        s
    }
}

/// Persistence between two lambda levels. Clusters born at infinite lambda
/// (duplicate points merging at distance zero) have zero persistence, so
/// equal levels count as zero rather than `inf - inf`.
pub fn lambda_span(level: f64, birth: f64) -> f64 {
    if level == birth {
        0.0
    } else {
        level - birth
    }
}

pub fn condense_tree(hierarchy: &[SlNode], n: usize, min_cluster_size: usize) -> CondensedTree {
    let subtree_size = |id: usize| -> usize {
        if id < n {
            1
        } else {
            hierarchy[id - n].size
        }
    };
    let mut clusters = vec![CondensedCluster {
        parent: None,
        birth_lambda: 0.0,
        size: n,
        fallen: Vec::new(),
        children: Vec::new(),
    }];
    if hierarchy.is_empty() {
        // single point: it falls out of the root immediately
        if n == 1 {
            clusters[0].fallen.push((0, f64::INFINITY));
        }
        return CondensedTree { clusters, n };
    }

    let root = n + hierarchy.len() - 1;
    let mut queue = std::collections::VecDeque::from([(root, 0usize)]);
    while let Some((node_id, cluster)) = queue.pop_front() {
        if node_id < n {
            // a bare point reached as the surviving side cannot happen with
            // min_cluster_size >= 2; guarded for completeness
            clusters[cluster].fallen.push((node_id, f64::INFINITY));
            continue;
        }
        let node = hierarchy[node_id - n];
        let lam = lambda(node.distance);
        let (ls, rs) = (subtree_size(node.left), subtree_size(node.right));
        let l_big = ls >= min_cluster_size;
        let r_big = rs >= min_cluster_size;
        match (l_big, r_big) {
            (true, true) => {
                for (child, size) in [(node.left, ls), (node.right, rs)] {
                    let id = clusters.len();
                    clusters.push(CondensedCluster {
                        parent: Some(cluster),
                        birth_lambda: lam,
                        size,
                        fallen: Vec::new(),
                        children: Vec::new(),
                    });
                    clusters[cluster].children.push((id, lam));
                    queue.push_back((child, id));
                }
            }
            (true, false) => {
                fall_out(&mut clusters[cluster].fallen, hierarchy, n, node.right, lam);
                queue.push_back((node.left, cluster));
            }
            (false, true) => {
                fall_out(&mut clusters[cluster].fallen, hierarchy, n, node.left, lam);
                queue.push_back((node.right, cluster));
            }
            (false, false) => {
                fall_out(&mut clusters[cluster].fallen, hierarchy, n, node.left, lam);
                fall_out(&mut clusters[cluster].fallen, hierarchy, n, node.right, lam);
            }
        }
    }
    CondensedTree { clusters, n }
}

fn fall_out(
    fallen: &mut Vec<(usize, f64)>,
    hierarchy: &[SlNode],
    n: usize,
    subtree: usize,
    lam: f64,
) {
    let mut stack = vec![subtree];
    while let Some(id) = stack.pop() {
        if id < n {
            fallen.push((id, lam));
        } else {
            let node = hierarchy[id - n];
            stack.push(node.left);
            stack.push(node.right);
        }
    }
}

pub fn extract_clusters(tree: &CondensedTree, selection: SelectionMethod) -> ClusterAssignment {
    let m = tree.clusters.len();
    let mut marked = vec![false; m];
    match selection {
        SelectionMethod::ExcessOfMass => {
            let mut propagated = vec![0.0f64; m];
            for id in (0..m).rev() {
                let own = tree.stability(id);
                let child_sum: f64 = tree.clusters[id]
                    .children
                    .iter()
                    .map(|&(c, _)| propagated[c])
                    .sum();
                if tree.clusters[id].children.is_empty() || own >= child_sum {
                    marked[id] = true;
                    propagated[id] = own;
                } else {
                    propagated[id] = child_sum;
                }
            }
        }
        SelectionMethod::Leaf => {
            for id in 0..m {
                marked[id] = tree.clusters[id].children.is_empty();
            }
        }
    }
    // a marked ancestor overrides marked descendants
    let mut selected = vec![false; m];
    for id in 0..m {
        let mut ancestor_marked = false;
        let mut cur = tree.clusters[id].parent;
        while let Some(p) = cur {
            if marked[p] {
                ancestor_marked = true;
                break;
            }
            cur = tree.clusters[p].parent;
        }
        selected[id] = marked[id] && !ancestor_marked;
    }

    let mut label_of = vec![-1i64; m];
    let mut stabilities = Vec::new();
    let mut next = 0i64;
    for id in 0..m {
        if selected[id] {
            label_of[id] = next;
            stabilities.push(tree.stability(id));
            next += 1;
        }
    }
    let mut labels = vec![-1i64; tree.n];
    for id in 0..m {
        for &(point, _) in &tree.clusters[id].fallen {
            let mut cur = Some(id);
            while let Some(c) = cur {
                if label_of[c] >= 0 {
                    labels[point] = label_of[c];
                    break;
                }
                cur = tree.clusters[c].parent;
            }
        }
    }
    let num_clusters = next as usize;
    let mut cluster_sizes = vec![0usize; num_clusters];
    for &l in &labels {
        if l >= 0 {
            cluster_sizes[l as usize] += 1;
        }
    }
    ClusterAssignment {
        labels,
        num_clusters,
        cluster_sizes,
        stabilities,
    }
}

pub fn hdbscan(points: &[Vec<f64>], params: &HdbscanParams) -> Result<ClusterAssignment, MineError> {
    if params.min_cluster_size < 2 {
        return Err(MineError::BadParams(format!(
            "min_cluster_size must be >= 2, got {}",
            params.min_cluster_size
        )));
    }
    if params.min_samples < 1 {
        return Err(MineError::BadParams("min_samples must be >= 1".into()));
    }
    let n = points.len();
    if n == 0 {
        return Ok(ClusterAssignment::all_noise(0));
    }
    let dim = points[0].len();
    for p in points {
        if p.len() != dim || p.iter().any(|v| !v.is_finite()) {
            return Err(MineError::BadParams(
                "points must share a dimension and be finite".into(),
            ));
        }
    }
    if n < params.min_samples || n < params.min_cluster_size {
        return Ok(ClusterAssignment::all_noise(n));
    }
    let core = core_distances(points, params.min_samples);
    let mst = build_mst(points, &core);
    let hierarchy = single_linkage_hierarchy(&mst, n);
    let tree = condense_tree(&hierarchy, n, params.min_cluster_size);
    Ok(extract_clusters(&tree, params.selection))
}
