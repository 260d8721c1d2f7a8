//! Naive reference implementation of the clustering algorithm, used by
//! tests as an independent oracle. Deliberately written from the algorithm
//! definition with brute-force data structures (full distance matrix,
//! Kruskal over all O(n^2) edges, recursive condensation with repeated
//! subtree scans) and no code shared with the optimized path beyond the
//! output type. Do not use on large inputs.

use super::{ClusterAssignment, HdbscanParams, SelectionMethod};

struct Dendro {
    left: usize,
    right: usize,
    distance: f64,
}

struct NaiveCluster {
    parent: Option<usize>,
    birth: f64,
    size: usize,
    fallen: Vec<(usize, f64)>,
    children: Vec<(usize, f64)>,
}

pub fn naive_hdbscan(points: &[Vec<f64>], params: &HdbscanParams) -> ClusterAssignment {
    assert!(params.min_cluster_size >= 2 && params.min_samples >= 1);
    let n = points.len();
    if n == 0 {
        return ClusterAssignment {
            labels: Vec::new(),
            num_clusters: 0,
            cluster_sizes: Vec::new(),
            stabilities: Vec::new(),
        };
    }
    if n < params.min_samples || n < params.min_cluster_size {
        return ClusterAssignment {
            labels: vec![-1; n],
            num_clusters: 0,
            cluster_sizes: Vec::new(),
            stabilities: Vec::new(),
        };
    }

    // full distance matrix
    let dist = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            d[i][j] = dist(&points[i], &points[j]);
        }
    }

    // core distance: min_samples-th smallest entry of the row, self included
    let mut core = vec![0.0; n];
    for i in 0..n {
        let mut row = d[i].clone();
        row.sort_by(|x, y| x.partial_cmp(y).unwrap());
        core[i] = row[params.min_samples - 1];
    }

    // Kruskal over every pair under mutual reachability
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            let w = core[a].max(core[b]).max(d[a][b]);
            edges.push((w, a, b));
        }
    }
    edges.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut comp: Vec<usize> = (0..n).collect(); // flat component labels
    let mut mst = Vec::with_capacity(n - 1);
    for &(w, a, b) in &edges {
        if comp[a] == comp[b] {
            continue;
        }
        mst.push((w, a, b));
        let (from, to) = (comp[b], comp[a]);
        for c in comp.iter_mut() {
            if *c == from {
                *c = to;
            }
        }
        if mst.len() == n - 1 {
            break;
        }
    }

    // single-linkage dendrogram; membership rewritten point by point
    let mut nodes: Vec<Dendro> = Vec::with_capacity(n - 1);
    let mut node_of: Vec<usize> = (0..n).collect();
    for &(w, a, b) in &mst {
        let (la, lb) = (node_of[a], node_of[b]);
        nodes.push(Dendro {
            left: la,
            right: lb,
            distance: w,
        });
        let new_id = n + nodes.len() - 1;
        for m in node_of.iter_mut() {
            if *m == la || *m == lb {
                *m = new_id;
            }
        }
    }

    // recursive condensation
    let subtree_points = |root: usize| -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            if id < n {
                out.push(id);
            } else {
                stack.push(nodes[id - n].left);
                stack.push(nodes[id - n].right);
            }
        }
        out
    };
    let lam = |dist: f64| if dist > 0.0 { 1.0 / dist } else { f64::INFINITY };
    let mut clusters = vec![NaiveCluster {
        parent: None,
        birth: 0.0,
        size: n,
        fallen: Vec::new(),
        children: Vec::new(),
    }];
    if nodes.is_empty() {
        clusters[0].fallen.push((0, f64::INFINITY));
    } else {
        // breadth-first to match the documented cluster numbering
        let mut queue = std::collections::VecDeque::from([(n + nodes.len() - 1, 0usize)]);
        while let Some((id, cl)) = queue.pop_front() {
            if id < n {
                clusters[cl].fallen.push((id, f64::INFINITY));
                continue;
            }
            let node = &nodes[id - n];
            let level = lam(node.distance);
            let left_pts = subtree_points(node.left);
            let right_pts = subtree_points(node.right);
            let lb = left_pts.len() >= params.min_cluster_size;
            let rb = right_pts.len() >= params.min_cluster_size;
            if lb && rb {
                for (side, pts) in [(node.left, left_pts), (node.right, right_pts)] {
                    let child = clusters.len();
                    clusters.push(NaiveCluster {
                        parent: Some(cl),
                        birth: level,
                        size: pts.len(),
                        fallen: Vec::new(),
                        children: Vec::new(),
                    });
                    clusters[cl].children.push((child, level));
                    queue.push_back((side, child));
                }
            } else {
                if lb {
                    queue.push_back((node.left, cl));
                } else {
                    for p in left_pts {
                        clusters[cl].fallen.push((p, level));
                    }
                }
                if rb {
                    queue.push_back((node.right, cl));
                } else {
                    for p in right_pts {
                        clusters[cl].fallen.push((p, level));
                    }
                }
            }
        }
    }

    // stability, straight from the definition; equal lambda levels count as
    // zero persistence (duplicate-point merges happen at infinite lambda)
    let span = |level: f64, birth: f64| if level == birth { 0.0 } else { level - birth };
    let stability = |c: &NaiveCluster| -> f64 {
        let fallen: f64 = c.fallen.iter().map(|&(_, lp)| span(lp, c.birth)).sum();
        let kids: f64 = c
            .children
            .iter()
            .map(|&(k, split)| span(split, c.birth) * clusters[k].size as f64)
            .sum();
        fallen + kids
    };

    let m = clusters.len();
    let mut marked = vec![false; m];
    match params.selection {
        SelectionMethod::ExcessOfMass => {
            let mut propagated = vec![0.0; m];
            for id in (0..m).rev() {
                let own = stability(&clusters[id]);
                let kids: f64 = clusters[id]
                    .children
                    .iter()
                    .map(|&(k, _)| propagated[k])
                    .sum();
                if clusters[id].children.is_empty() || own >= kids {
                    marked[id] = true;
                    propagated[id] = own;
                } else {
                    propagated[id] = kids;
                }
            }
        }
        SelectionMethod::Leaf => {
            for id in 0..m {
                marked[id] = clusters[id].children.is_empty();
            }
        }
    }
    let mut selected = Vec::new();
    for id in 0..m {
        if !marked[id] {
            continue;
        }
        let mut p = clusters[id].parent;
        let mut shadowed = false;
        while let Some(a) = p {
            if marked[a] {
                shadowed = true;
                break;
            }
            p = clusters[a].parent;
        }
        if !shadowed {
            selected.push(id);
        }
    }

    let mut labels = vec![-1i64; n];
    let mut stabilities = Vec::new();
    let mut sizes = Vec::new();
    for (label, &cl) in selected.iter().enumerate() {
        stabilities.push(stability(&clusters[cl]));
        // members: every point that fell out of this cluster or any
        // descendant cluster
        let mut members = 0usize;
        let mut stack = vec![cl];
        while let Some(c) = stack.pop() {
            for &(p, _) in &clusters[c].fallen {
                labels[p] = label as i64;
                members += 1;
            }
            for &(k, _) in &clusters[c].children {
                stack.push(k);
            }
        }
        sizes.push(members);
    }
    ClusterAssignment {
        labels,
        num_clusters: selected.len(),
        cluster_sizes: sizes,
        stabilities,
    }
}
