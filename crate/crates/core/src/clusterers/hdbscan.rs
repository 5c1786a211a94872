use crate::error::{invalid, Result};
use crate::matrix::{Condensed, Distance, Matrix};
use crate::partition::NOISE;

struct Cluster {
    parent: Option<usize>,
    birth: f64,
    size: usize,
    children: Vec<usize>,
    /// λ at which each point left this cluster directly.
    fallen: Vec<(usize, f64)>,
}

/// Hierarchical density clustering with excess-of-mass cluster selection.
/// `min_samples` sets the core-distance neighbor (self counted).
pub fn hdbscan(m: &Matrix, min_cluster_size: usize, min_samples: usize, distance: Distance) -> Result<Vec<i32>> {
    let n = m.rows();
    if min_cluster_size < 2 || min_samples < 1 {
        return invalid("hdbscan needs min_cluster_size >= 2 and min_samples >= 1");
    }
    if n < 2 {
        return Ok(vec![NOISE; n]);
    }
    let d = Condensed::from_points(m, distance);
    let ks = min_samples.min(n) - 1;
    let core: Vec<f64> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| if i == j { 0.0 } else { d.get(i, j) }).collect();
            row.select_nth_unstable_by(ks, f64::total_cmp);
            row[ks]
        })
        .collect();
    let mr = |i: usize, j: usize| d.get(i, j).max(core[i]).max(core[j]);

    // Prim's minimum spanning tree on mutual reachability
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut cur = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let mut next = usize::MAX;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let w = mr(cur, j);
            if w < best[j] {
                best[j] = w;
                from[j] = cur;
            }
            if next == usize::MAX || best[j] < best[next] {
                next = j;
            }
        }
        in_tree[next] = true;
        edges.push((best[next], from[next], next));
        cur = next;
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));

    // single-linkage tree: nodes >= n are merges (left, right, height, size)
    let mut parent: Vec<usize> = (0..2 * n - 1).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut nodes: Vec<(usize, usize, f64, usize)> = Vec::with_capacity(n - 1);
    let mut size = vec![1usize; 2 * n - 1];
    for &(w, a, b) in &edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        let id = n + nodes.len();
        parent[ra] = id;
        parent[rb] = id;
        size[id] = size[ra] + size[rb];
        nodes.push((ra, rb, w, size[id]));
    }
    let min_pos = edges.iter().map(|e| e.0).filter(|&w| w > 0.0).fold(f64::INFINITY, f64::min);
    let floor = if min_pos.is_finite() { min_pos * 1e-6 } else { 1.0 };
    let lambda = |h: f64| 1.0 / h.max(floor);

    let points_under = |root: usize, out: &mut Vec<usize>| {
        let mut stack = vec![root];
        while let Some(x) = stack.pop() {
            if x < n {
                out.push(x);
            } else {
                let (l, r, _, _) = nodes[x - n];
                stack.push(l);
                stack.push(r);
            }
        }
    };

    let mut clusters = vec![Cluster { parent: None, birth: 0.0, size: n, children: vec![], fallen: vec![] }];
    let mut stack = vec![(2 * n - 2, 0usize)];
    let mut buf = Vec::new();
    while let Some((node, c)) = stack.pop() {
        if node < n {
            clusters[c].fallen.push((node, lambda(0.0)));
            continue;
        }
        let (l, r, h, _) = nodes[node - n];
        let lam = lambda(h);
        let big = |x: usize| size[x] >= min_cluster_size;
        match (big(l), big(r)) {
            (true, true) => {
                for child in [l, r] {
                    let id = clusters.len();
                    clusters.push(Cluster { parent: Some(c), birth: lam, size: size[child], children: vec![], fallen: vec![] });
                    clusters[c].children.push(id);
                    stack.push((child, id));
                }
            }
            (true, false) | (false, true) => {
                let (keep, drop) = if big(l) { (l, r) } else { (r, l) };
                buf.clear();
                points_under(drop, &mut buf);
                clusters[c].fallen.extend(buf.iter().map(|&p| (p, lam)));
                stack.push((keep, c));
            }
            (false, false) => {
                buf.clear();
                points_under(l, &mut buf);
                points_under(r, &mut buf);
                clusters[c].fallen.extend(buf.iter().map(|&p| (p, lam)));
            }
        }
    }

    let stability: Vec<f64> = clusters
        .iter()
        .map(|c| {
            c.fallen.iter().map(|&(_, l)| l - c.birth).sum::<f64>()
                + c.children.iter().map(|&ch| clusters[ch].size as f64 * (clusters[ch].birth - c.birth)).sum::<f64>()
        })
        .collect();
    let mut selected = vec![false; clusters.len()];
    let mut subtree = vec![0.0; clusters.len()];
    for c in (1..clusters.len()).rev() {
        let child_sum: f64 = clusters[c].children.iter().map(|&ch| subtree[ch]).sum();
        if clusters[c].children.is_empty() || stability[c] > child_sum {
            selected[c] = true;
            subtree[c] = stability[c];
            let mut desc = clusters[c].children.clone();
            while let Some(x) = desc.pop() {
                selected[x] = false;
                desc.extend(clusters[x].children.iter().copied());
            }
        } else {
            subtree[c] = child_sum;
        }
    }
    let mut label_of = vec![NOISE; clusters.len()];
    let mut next = 0;
    for c in 0..clusters.len() {
        if selected[c] {
            label_of[c] = next;
            next += 1;
        }
    }
    let mut labels = vec![NOISE; n];
    for (c, cl) in clusters.iter().enumerate() {
        let mut a = Some(c);
        while let Some(x) = a {
            if selected[x] {
                break;
            }
            a = clusters[x].parent;
        }
        if let Some(x) = a {
            for &(p, _) in &cl.fallen {
                labels[p] = label_of[x];
            }
        }
    }
    Ok(labels)
}
