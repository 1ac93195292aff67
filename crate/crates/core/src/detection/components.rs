//! Connected components, proximity merging and detection scoring.

use serde::{Deserialize, Serialize};

use super::BinaryMask;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// Centroid, in pixel coordinates.
    pub row: f64,
    pub col: f64,
    pub pixels: usize,
}

impl Cluster {
    fn distance_px(&self, other: &Cluster) -> f64 {
        (self.row - other.row).hypot(self.col - other.col)
    }
}

/// 8-connected components of the set pixels, ordered by first pixel in
/// row-major order.
pub fn connected_components(mask: &BinaryMask) -> Vec<Cluster> {
    let (rows, cols) = (mask.rows(), mask.cols());
    let mut seen = vec![false; rows * cols];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in 0..rows * cols {
        if !mask.bits()[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let (mut sr, mut sc, mut count) = (0.0, 0.0, 0usize);
        while let Some(p) = stack.pop() {
            let (r, c) = (p / cols, p % cols);
            sr += r as f64;
            sc += c as f64;
            count += 1;
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                    if nr < 0 || nc < 0 || nr >= rows as i64 || nc >= cols as i64 {
                        continue;
                    }
                    let q = nr as usize * cols + nc as usize;
                    if mask.bits()[q] && !seen[q] {
                        seen[q] = true;
                        stack.push(q);
                    }
                }
            }
        }
        out.push(Cluster { row: sr / count as f64, col: sc / count as f64, pixels: count });
    }
    out
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Merges clusters whose centroids are closer than `distance_px`
/// (single linkage). Merged centroids are pixel-weighted.
pub fn merge_clusters(clusters: &[Cluster], distance_px: f64) -> Vec<Cluster> {
    let n = clusters.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if clusters[i].distance_px(&clusters[j]) < distance_px {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<(usize, f64, f64, usize)> = Vec::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        let c = &clusters[i];
        let w = c.pixels as f64;
        match groups.iter_mut().find(|g| g.0 == root) {
            Some(g) => {
                g.1 += c.row * w;
                g.2 += c.col * w;
                g.3 += c.pixels;
            }
            None => groups.push((root, c.row * w, c.col * w, c.pixels)),
        }
    }
    groups
        .into_iter()
        .map(|(_, r, c, p)| Cluster { row: r / p as f64, col: c / p as f64, pixels: p })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Score {
    pub hits: usize,
    pub false_alarms: usize,
    pub missed: usize,
}

/// Greedy nearest-first one-to-one matching of clusters to ground-truth
/// points within `radius_m` (distances in meters via `pixel_size_m`).
pub fn score(clusters: &[Cluster], truth: &[(f64, f64)], radius_m: f64, pixel_size_m: f64) -> Score {
    let mut pairs = Vec::new();
    for (i, c) in clusters.iter().enumerate() {
        for (j, &(tr, tc)) in truth.iter().enumerate() {
            let d = (c.row - tr).hypot(c.col - tc) * pixel_size_m;
            if d <= radius_m {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_c = vec![false; clusters.len()];
    let mut used_t = vec![false; truth.len()];
    let mut hits = 0;
    for (_, i, j) in pairs {
        if !used_c[i] && !used_t[j] {
            used_c[i] = true;
            used_t[j] = true;
            hits += 1;
        }
    }
    Score { hits, false_alarms: clusters.len() - hits, missed: truth.len() - hits }
}
