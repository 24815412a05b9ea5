//! A static k-d tree over weighted points in `R^n` answering closed-ball
//! queries.

use crate::geom::distance;

const LEAF_SIZE: usize = 16;

#[derive(Clone, Debug)]
struct Node {
    lo: Vec<f64>,
    hi: Vec<f64>,
    start: usize,
    end: usize,
    children: Option<(usize, usize)>,
}

/// Hierarchical partition of a weighted point set.
#[derive(Clone, Debug)]
pub struct SpatialIndex {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl SpatialIndex {
    /// `points` holds `weights.len()` points of dimension `dim`, row by row.
    pub fn new(dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Self {
        assert_eq!(points.len(), dim * weights.len(), "coordinate buffer size");
        let count = weights.len();
        let mut index = SpatialIndex {
            dim,
            coords: points,
            weights,
            order: (0..count).collect(),
            nodes: Vec::new(),
        };
        if count > 0 {
            index.build(0, count);
        }
        index
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let (lo, hi) = self.bounds(start, end);
        let id = self.nodes.len();
        self.nodes.push(Node {
            lo: lo.clone(),
            hi: hi.clone(),
            start,
            end,
            children: None,
        });
        if end - start > LEAF_SIZE {
            let axis = (0..self.dim)
                .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
                .unwrap_or(0);
            if hi[axis] > lo[axis] {
                let mid = start + (end - start) / 2;
                let dim = self.dim;
                let coords = &self.coords;
                self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
                    coords[a * dim + axis]
                        .total_cmp(&coords[b * dim + axis])
                        .then(a.cmp(&b))
                });
                let left = self.build(start, mid);
                let right = self.build(mid, end);
                self.nodes[id].children = Some((left, right));
            }
        }
        id
    }

    fn bounds(&self, start: usize, end: usize) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for &i in &self.order[start..end] {
            for (k, &x) in self.point(i).iter().enumerate() {
                lo[k] = lo[k].min(x);
                hi[k] = hi[k].max(x);
            }
        }
        (lo, hi)
    }

    /// Indices of the points in the closed ball `B(center, radius)`, in
    /// increasing order.
    pub fn ball_query(&self, center: &[f64], radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if !self.nodes.is_empty() && radius >= 0.0 {
            self.collect(0, center, radius, &mut out);
        }
        out.sort_unstable();
        out
    }

    /// Indices in `B(center, radius)` paired with their distance to `center`.
    pub fn ball_query_with_distance(&self, center: &[f64], radius: f64) -> Vec<(usize, f64)> {
        self.ball_query(center, radius)
            .into_iter()
            .map(|i| (i, distance(self.point(i), center)))
            .collect()
    }

    /// Total weight in the closed ball, summed in index order.
    pub fn ball_weight(&self, center: &[f64], radius: f64) -> f64 {
        self.ball_query(center, radius)
            .into_iter()
            .map(|i| self.weights[i])
            .sum()
    }

    fn collect(&self, node: usize, center: &[f64], radius: f64, out: &mut Vec<usize>) {
        let nd = &self.nodes[node];
        let (near, far) = box_distances(&nd.lo, &nd.hi, center);
        // Pruning only on clear margins; borderline boxes fall through to the
        // exact per-point test so the result matches a linear scan.
        if near > radius * (1.0 + 1e-9) + 1e-300 {
            return;
        }
        if far < radius * (1.0 - 1e-9) {
            out.extend_from_slice(&self.order[nd.start..nd.end]);
            return;
        }
        match nd.children {
            Some((l, r)) => {
                self.collect(l, center, radius, out);
                self.collect(r, center, radius, out);
            }
            None => {
                for &i in &self.order[nd.start..nd.end] {
                    if distance(self.point(i), center) <= radius {
                        out.push(i);
                    }
                }
            }
        }
    }

    /// Axis-aligned bounding box of all points.
    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        self.nodes.first().map(|n| (n.lo.clone(), n.hi.clone()))
    }
}

fn box_distances(lo: &[f64], hi: &[f64], c: &[f64]) -> (f64, f64) {
    let mut near = 0.0;
    let mut far = 0.0;
    for k in 0..c.len() {
        let below = lo[k] - c[k];
        let above = c[k] - hi[k];
        let gap = below.max(above).max(0.0);
        near += gap * gap;
        let reach = (c[k] - lo[k]).abs().max((hi[k] - c[k]).abs());
        far += reach * reach;
    }
    (near.sqrt(), far.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn linear_scan(index: &SpatialIndex, a: &[f64], r: f64) -> Vec<usize> {
        (0..index.len())
            .filter(|&i| {
                let d: f64 = index.point(i).iter().zip(a).map(|(x, y)| (x - y) * (x - y)).sum();
                d.sqrt() <= r
            })
            .collect()
    }

    #[test]
    fn line_examples() {
        let index = SpatialIndex::new(1, vec![0.0, 1.0, 3.0], vec![1.0; 3]);
        assert_eq!(index.ball_query(&[0.0], 1.0), vec![0, 1]);
        assert_eq!(index.ball_query(&[0.0], 0.5), vec![0]);
        assert!(index.ball_query(&[10.0], 0.5).is_empty());
    }

    #[test]
    fn empty_index() {
        let index = SpatialIndex::new(2, vec![], vec![]);
        assert!(index.ball_query(&[0.0, 0.0], 1.0).is_empty());
        assert!(index.bounding_box().is_none());
    }

    #[test]
    fn matches_linear_scan_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for instance in 0..200 {
            let dim = rng.gen_range(1..=4);
            let count = rng.gen_range(1..=2000);
            let mut coords: Vec<f64> = (0..dim * count).map(|_| rng.gen_range(-1.0..1.0)).collect();
            // duplicate a few points to exercise ties
            for _ in 0..count / 10 {
                let src = rng.gen_range(0..count);
                let dst = rng.gen_range(0..count);
                for k in 0..dim {
                    coords[dst * dim + k] = coords[src * dim + k];
                }
            }
            let index = SpatialIndex::new(dim, coords, vec![1.0; count]);
            let a: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.2..1.2)).collect();
            let r = rng.gen_range(0.0..1.5);
            assert_eq!(
                index.ball_query(&a, r),
                linear_scan(&index, &a, r),
                "instance {instance}"
            );
            // a query radius equal to an existing distance is the boundary case
            let j = rng.gen_range(0..count);
            let exact = distance(index.point(j), &a);
            let hits = index.ball_query(&a, exact);
            assert!(hits.contains(&j));
            assert_eq!(hits, linear_scan(&index, &a, exact));
        }
    }
}
