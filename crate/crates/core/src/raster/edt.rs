//! Exact squared Euclidean distance transform on the grid (two-pass lower
//! envelope of parabolas) and a kd-tree for nearest/range queries against
//! arbitrary planar target points.

use crate::curve::Point;

/// Exact squared distances, in cell² units, from every cell to the nearest
/// target cell. `target[y * width + x]` marks target cells; at least one
/// must be set. Columns without any target carry a finite sentinel distance
/// larger than every realizable one, so the envelope stays well formed and
/// the result is exact (the envelope boundaries are rationals with small
/// denominators, so the f64 comparisons never misclassify an integer cell).
pub(crate) fn squared_edt(width: usize, height: usize, target: &[bool]) -> Vec<i64> {
    debug_assert_eq!(target.len(), width * height);
    let cap = (width + height + 1) as i64;
    // Pass 1: per column, row distance to the nearest target, capped.
    let mut g = vec![cap; width * height];
    for x in 0..width {
        let mut d = cap;
        for y in 0..height {
            d = if target[y * width + x] { 0 } else { (d + 1).min(cap) };
            g[y * width + x] = d;
        }
        let mut d = cap;
        for y in (0..height).rev() {
            d = if target[y * width + x] { 0 } else { (d + 1).min(cap) };
            let cell = &mut g[y * width + x];
            *cell = (*cell).min(d);
        }
    }
    // Pass 2: per row, lower envelope over x of (x - v)² + g(v)².
    let mut out = vec![0i64; width * height];
    let mut v = vec![0usize; width];
    let mut z = vec![0f64; width + 1];
    let mut f = vec![0i64; width];
    for y in 0..height {
        for x in 0..width {
            let gv = g[y * width + x];
            f[x] = gv * gv;
        }
        let mut k = 0usize;
        v[0] = 0;
        z[0] = f64::NEG_INFINITY;
        z[1] = f64::INFINITY;
        for q in 1..width {
            let mut s = intersect(f[q], q, f[v[k]], v[k]);
            while s <= z[k] {
                k -= 1;
                s = intersect(f[q], q, f[v[k]], v[k]);
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
        }
        let mut k = 0usize;
        for x in 0..width {
            while z[k + 1] < x as f64 {
                k += 1;
            }
            let vx = v[k] as i64;
            out[y * width + x] = (x as i64 - vx) * (x as i64 - vx) + f[v[k]];
        }
    }
    out
}

/// Horizontal coordinate where parabola `q` overtakes parabola `p < q`.
fn intersect(fq: i64, q: usize, fp: i64, p: usize) -> f64 {
    let q = q as i64;
    let p = p as i64;
    ((fq + q * q) - (fp + p * p)) as f64 / (2 * (q - p)) as f64
}

/// A kd-tree over a fixed point set, supporting exact nearest-neighbour
/// queries, range counting with subtree pruning, and bounded collection.
pub(crate) struct KdTree {
    pts: Vec<Point>,
    order: Vec<u32>,
    nodes: Vec<Node>,
}

struct Node {
    lo: Point,
    hi: Point,
    begin: u32,
    end: u32,
    left: i32,
    right: i32,
}

const LEAF_SIZE: usize = 16;

impl KdTree {
    pub fn build(pts: &[Point]) -> Self {
        let mut order: Vec<u32> = (0..pts.len() as u32).collect();
        let mut tree = Self {
            pts: pts.to_vec(),
            order: Vec::new(),
            nodes: Vec::new(),
        };
        if !pts.is_empty() {
            let n = pts.len();
            tree.split(&mut order, 0, n, 0);
        }
        tree.order = order;
        tree
    }

    fn split(&mut self, order: &mut [u32], begin: usize, end: usize, axis: usize) -> i32 {
        let slice = &mut order[begin..end];
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &i in slice.iter() {
            let p = self.pts[i as usize];
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        let id = self.nodes.len() as i32;
        self.nodes.push(Node {
            lo,
            hi,
            begin: begin as u32,
            end: end as u32,
            left: -1,
            right: -1,
        });
        if end - begin > LEAF_SIZE {
            let mid = (end - begin) / 2;
            let pts = &self.pts;
            slice.select_nth_unstable_by(mid, |&a, &b| {
                let (pa, pb) = (pts[a as usize], pts[b as usize]);
                if axis == 0 {
                    pa.x.total_cmp(&pb.x)
                } else {
                    pa.y.total_cmp(&pb.y)
                }
            });
            let left = self.split(order, begin, begin + mid, 1 - axis);
            let right = self.split(order, begin + mid, end, 1 - axis);
            self.nodes[id as usize].left = left;
            self.nodes[id as usize].right = right;
        }
        id
    }

    pub fn is_empty(&self) -> bool {
        self.pts.is_empty()
    }

    fn bbox_dist_squared(node: &Node, q: &Point) -> f64 {
        let dx = (node.lo.x - q.x).max(0.0).max(q.x - node.hi.x);
        let dy = (node.lo.y - q.y).max(0.0).max(q.y - node.hi.y);
        dx * dx + dy * dy
    }

    fn bbox_max_dist_squared(node: &Node, q: &Point) -> f64 {
        let dx = (q.x - node.lo.x).abs().max((q.x - node.hi.x).abs());
        let dy = (q.y - node.lo.y).abs().max((q.y - node.hi.y).abs());
        dx * dx + dy * dy
    }

    /// Squared distance to, and index of, the nearest point.
    pub fn nearest(&self, q: &Point) -> (f64, usize) {
        debug_assert!(!self.pts.is_empty());
        let mut best = (f64::INFINITY, usize::MAX);
        self.nearest_rec(0, q, &mut best);
        best
    }

    fn nearest_rec(&self, node_id: i32, q: &Point, best: &mut (f64, usize)) {
        let node = &self.nodes[node_id as usize];
        if Self::bbox_dist_squared(node, q) >= best.0 {
            return;
        }
        if node.left < 0 {
            for &i in &self.order[node.begin as usize..node.end as usize] {
                let d = self.pts[i as usize].dist_squared(q);
                if d < best.0 || (d == best.0 && (i as usize) < best.1) {
                    *best = (d, i as usize);
                }
            }
            return;
        }
        let (a, b) = (node.left, node.right);
        let da = Self::bbox_dist_squared(&self.nodes[a as usize], q);
        let db = Self::bbox_dist_squared(&self.nodes[b as usize], q);
        if da <= db {
            self.nearest_rec(a, q, best);
            self.nearest_rec(b, q, best);
        } else {
            self.nearest_rec(b, q, best);
            self.nearest_rec(a, q, best);
        }
    }

    /// Number of points within radius `r` of `q` (inclusive), with whole
    /// subtrees counted when their bounding box is fully inside the ball.
    pub fn count_within(&self, q: &Point, r: f64) -> usize {
        if self.pts.is_empty() {
            return 0;
        }
        let r2 = r * r;
        let mut count = 0usize;
        self.count_rec(0, q, r, r2, &mut count);
        count
    }

    fn count_rec(&self, node_id: i32, q: &Point, r: f64, r2: f64, count: &mut usize) {
        let node = &self.nodes[node_id as usize];
        if Self::bbox_dist_squared(node, q) > r2 {
            return;
        }
        if Self::bbox_max_dist_squared(node, q) <= r2 {
            *count += (node.end - node.begin) as usize;
            return;
        }
        if node.left < 0 {
            for &i in &self.order[node.begin as usize..node.end as usize] {
                if self.pts[i as usize].dist_squared(q) <= r2 {
                    *count += 1;
                }
            }
            return;
        }
        self.count_rec(node.left, q, r, r2, count);
        self.count_rec(node.right, q, r, r2, count);
    }

    /// Collects indices of points within `r` of `q`, stopping at `cap`.
    pub fn collect_within(&self, q: &Point, r: f64, cap: usize, out: &mut Vec<usize>) {
        out.clear();
        if self.pts.is_empty() || cap == 0 {
            return;
        }
        self.collect_rec(0, q, r * r, cap, out);
    }

    fn collect_rec(&self, node_id: i32, q: &Point, r2: f64, cap: usize, out: &mut Vec<usize>) {
        if out.len() >= cap {
            return;
        }
        let node = &self.nodes[node_id as usize];
        if Self::bbox_dist_squared(node, q) > r2 {
            return;
        }
        if node.left < 0 {
            for &i in &self.order[node.begin as usize..node.end as usize] {
                if out.len() >= cap {
                    return;
                }
                if self.pts[i as usize].dist_squared(q) <= r2 {
                    out.push(i as usize);
                }
            }
            return;
        }
        self.collect_rec(node.left, q, r2, cap, out);
        self.collect_rec(node.right, q, r2, cap, out);
    }

    pub fn point(&self, i: usize) -> Point {
        self.pts[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn brute_sq(width: usize, height: usize, target: &[bool]) -> Vec<i64> {
        let targets: Vec<(i64, i64)> = (0..width * height)
            .filter(|&i| target[i])
            .map(|i| ((i % width) as i64, (i / width) as i64))
            .collect();
        let mut out = vec![i64::MAX; width * height];
        for y in 0..height as i64 {
            for x in 0..width as i64 {
                let mut best = i64::MAX;
                for &(tx, ty) in &targets {
                    let d = (x - tx) * (x - tx) + (y - ty) * (y - ty);
                    best = best.min(d);
                }
                out[(y as usize) * width + x as usize] = best;
            }
        }
        out
    }

    #[test]
    fn matches_brute_force_on_random_masks() {
        let mut rng = SplitMix64::new(99);
        for _ in 0..20 {
            let w = 16 + rng.next_index(49);
            let h = 16 + rng.next_index(49);
            let density = 0.02 + 0.3 * rng.next_f64();
            let mask: Vec<bool> = (0..w * h).map(|_| rng.next_f64() < density).collect();
            if !mask.iter().any(|&b| b) {
                continue;
            }
            assert_eq!(squared_edt(w, h, &mask), brute_sq(w, h, &mask));
        }
    }

    #[test]
    fn single_target_three_four_five() {
        let w = 8;
        let h = 8;
        let mut mask = vec![false; w * h];
        mask[0] = true; // target at (0, 0)
        let d = squared_edt(w, h, &mask);
        assert_eq!(d[4 * w + 3], 25); // cell (3, 4) is 5 cells away
    }

    #[test]
    fn kd_nearest_matches_brute() {
        let mut rng = SplitMix64::new(4);
        let pts: Vec<Point> = (0..500)
            .map(|_| Point::new(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)))
            .collect();
        let tree = KdTree::build(&pts);
        for _ in 0..2_000 {
            let q = Point::new(rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0));
            let (d2, _) = tree.nearest(&q);
            let brute = pts
                .iter()
                .map(|p| p.dist_squared(&q))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(d2, brute);
        }
    }

    #[test]
    fn kd_count_matches_brute() {
        let mut rng = SplitMix64::new(12);
        let pts: Vec<Point> = (0..700)
            .map(|_| Point::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)))
            .collect();
        let tree = KdTree::build(&pts);
        for _ in 0..500 {
            let q = Point::new(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5));
            let r = rng.uniform(0.0, 1.0);
            let want = pts.iter().filter(|p| p.dist_squared(&q) <= r * r).count();
            assert_eq!(tree.count_within(&q, r), want);
        }
    }
}
