//! Raster verification that a sampled closed curve bounds an
//! ε-neighbourhood: rasterization, exact distance transforms, erosion and
//! dilation, boundary extraction, Hausdorff comparison, metric-projection
//! multiplicity, and grid reach estimates.

mod edt;

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use crate::curve::{CurveSample, Point};
use crate::error::{Error, Result};

use edt::{squared_edt, KdTree};

/// A square-cell grid: `origin` is the lower-left corner, cell `(ix, iy)`
/// has its centre at `origin + ((ix + ½)h, (iy + ½)h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub origin: Point,
    pub spacing: f64,
    pub width: usize,
    pub height: usize,
}

impl GridSpec {
    /// Grid of fixed spacing `h` covering `[lo, hi]` inflated by `margin`.
    pub fn with_spacing(lo: Point, hi: Point, margin: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) || margin < 0.0 || hi.x < lo.x || hi.y < lo.y {
            return Err(Error::InvalidConfig("degenerate grid request".into()));
        }
        let origin = Point::new(lo.x - margin, lo.y - margin);
        let width = (((hi.x + margin) - origin.x) / h).ceil() as usize + 1;
        let height = (((hi.y + margin) - origin.y) / h).ceil() as usize + 1;
        Self::checked(origin, h, width, height)
    }

    /// Square grid of `n × n` cells covering `[lo, hi]` inflated by `margin`.
    pub fn with_dims(lo: Point, hi: Point, margin: f64, n: usize) -> Result<Self> {
        if n < 8 || hi.x < lo.x || hi.y < lo.y || margin < 0.0 {
            return Err(Error::InvalidConfig("degenerate grid request".into()));
        }
        let ext = ((hi.x - lo.x).max(hi.y - lo.y)) + 2.0 * margin;
        let h = ext / n as f64;
        let cx = 0.5 * (lo.x + hi.x);
        let cy = 0.5 * (lo.y + hi.y);
        let origin = Point::new(cx - ext / 2.0, cy - ext / 2.0);
        Self::checked(origin, h, n, n)
    }

    fn checked(origin: Point, spacing: f64, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 || width.saturating_mul(height) > (1 << 26) {
            return Err(Error::InvalidConfig(format!(
                "grid {width}x{height} is empty or too large"
            )));
        }
        Ok(Self {
            origin,
            spacing,
            width,
            height,
        })
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Point {
        Point::new(
            self.origin.x + (ix as f64 + 0.5) * self.spacing,
            self.origin.y + (iy as f64 + 0.5) * self.spacing,
        )
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.width + ix
    }

    /// Cell containing `p`, clamped to the grid.
    pub fn cell_of(&self, p: &Point) -> (usize, usize) {
        let fx = ((p.x - self.origin.x) / self.spacing).floor();
        let fy = ((p.y - self.origin.y) / self.spacing).floor();
        let ix = fx.max(0.0).min((self.width - 1) as f64) as usize;
        let iy = fy.max(0.0).min((self.height - 1) as f64) as usize;
        (ix, iy)
    }

    /// Whether the rectangle `[lo, hi]` inflated by `margin` fits inside.
    pub fn covers(&self, lo: Point, hi: Point, margin: f64) -> bool {
        let gx1 = self.origin.x + self.width as f64 * self.spacing;
        let gy1 = self.origin.y + self.height as f64 * self.spacing;
        lo.x - margin >= self.origin.x
            && lo.y - margin >= self.origin.y
            && hi.x + margin <= gx1
            && hi.y + margin <= gy1
    }
}

/// Boolean occupancy per grid cell.
#[derive(Debug, Clone)]
pub struct RegionMask {
    pub grid: GridSpec,
    inside: Vec<bool>,
}

impl RegionMask {
    pub fn new(grid: GridSpec) -> Self {
        let inside = vec![false; grid.len()];
        Self { grid, inside }
    }

    pub fn get(&self, ix: usize, iy: usize) -> bool {
        self.inside[self.grid.index(ix, iy)]
    }

    pub fn set(&mut self, ix: usize, iy: usize, v: bool) {
        let i = self.grid.index(ix, iy);
        self.inside[i] = v;
    }

    pub fn cells(&self) -> &[bool] {
        &self.inside
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn is_empty_region(&self) -> bool {
        !self.inside.iter().any(|&b| b)
    }

    pub fn area(&self) -> f64 {
        self.count() as f64 * self.grid.spacing * self.grid.spacing
    }

    /// Inside cells with at least one outside 4-neighbour (cells on the grid
    /// border count their missing neighbours as outside).
    pub fn boundary_mask(&self) -> RegionMask {
        let g = self.grid;
        let mut out = RegionMask::new(g);
        for iy in 0..g.height {
            for ix in 0..g.width {
                if !self.get(ix, iy) {
                    continue;
                }
                let edge = ix == 0 || iy == 0 || ix == g.width - 1 || iy == g.height - 1;
                let open = edge
                    || !self.get(ix - 1, iy)
                    || !self.get(ix + 1, iy)
                    || !self.get(ix, iy - 1)
                    || !self.get(ix, iy + 1);
                if open {
                    out.set(ix, iy, true);
                }
            }
        }
        out
    }
}

/// Euclidean distance from every cell centre to a target set.
#[derive(Debug, Clone)]
pub struct DistanceField {
    pub grid: GridSpec,
    pub distance: Vec<f64>,
}

impl DistanceField {
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.distance[self.grid.index(ix, iy)]
    }
}

/// Distance transform with the true cells of `targets` as the target set.
/// Exact for the discrete set (integer squared distances under the hood).
pub fn distance_transform_cells(targets: &RegionMask) -> Result<DistanceField> {
    if targets.is_empty_region() {
        return Err(Error::EmptyTargets);
    }
    let g = targets.grid;
    let d2 = squared_edt(g.width, g.height, targets.cells());
    let h = g.spacing;
    let distance = d2.iter().map(|&v| h * (v as f64).sqrt()).collect();
    Ok(DistanceField { grid: g, distance })
}

/// Distance transform against an arbitrary planar point list.
pub fn distance_transform_points(points: &[Point], grid: &GridSpec) -> Result<DistanceField> {
    if points.is_empty() {
        return Err(Error::EmptyTargets);
    }
    let tree = KdTree::build(points);
    let mut distance = Vec::with_capacity(grid.len());
    for iy in 0..grid.height {
        for ix in 0..grid.width {
            let c = grid.cell_center(ix, iy);
            distance.push(tree.nearest(&c).0.sqrt());
        }
    }
    Ok(DistanceField {
        grid: *grid,
        distance,
    })
}

/// Rasterizes the region bounded by a closed star-shaped curve sample: a
/// cell is inside when its centre `c` satisfies `|c| ≤ S(atan2-angle of c)`.
pub fn rasterize_region(sample: &CurveSample, grid: &GridSpec) -> Result<RegionMask> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if !sample.closed {
        return Err(Error::CurveNotClosed);
    }
    let min_radius = sample.radii.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_radius > 0.0) {
        return Err(Error::NonPositiveRadius {
            at: 0.0,
            radius: min_radius,
        });
    }
    let mut mask = RegionMask::new(*grid);
    for iy in 0..grid.height {
        for ix in 0..grid.width {
            let c = grid.cell_center(ix, iy);
            let mut ang = c.y.atan2(c.x);
            if ang < 0.0 {
                ang += TAU;
            }
            if c.norm() <= sample.radius_at(ang) {
                mask.set(ix, iy, true);
            }
        }
    }
    Ok(mask)
}

/// Cells of `region` at distance ≥ `epsilon` from its boundary cells: the
/// candidate underlying set `E`.
pub fn erode(region: &RegionMask, epsilon: f64) -> Result<RegionMask> {
    let h = region.grid.spacing;
    if !(epsilon > h) {
        return Err(Error::InvalidConfig(format!(
            "erosion radius {epsilon} must exceed the cell spacing {h}"
        )));
    }
    if region.is_empty_region() {
        return Err(Error::EmptyInput);
    }
    let boundary = region.boundary_mask();
    let field = distance_transform_cells(&boundary)?;
    let mut out = RegionMask::new(region.grid);
    let mut any = false;
    for i in 0..region.grid.len() {
        if region.cells()[i] && field.distance[i] >= epsilon {
            out.inside[i] = true;
            any = true;
        }
    }
    if !any {
        return Err(Error::EmptyErosion { epsilon });
    }
    Ok(out)
}

/// All cells within `epsilon` of the set: the raster ε-neighbourhood.
pub fn dilate(set: &RegionMask, epsilon: f64) -> Result<RegionMask> {
    if set.is_empty_region() {
        return Err(Error::EmptyInput);
    }
    let field = distance_transform_cells(set)?;
    let mut out = RegionMask::new(set.grid);
    for i in 0..set.grid.len() {
        if field.distance[i] <= epsilon {
            out.inside[i] = true;
        }
    }
    Ok(out)
}

/// Centres of the boundary cells of a region.
pub fn boundary_extract(region: &RegionMask) -> Result<Vec<Point>> {
    if region.is_empty_region() {
        return Err(Error::EmptyInput);
    }
    let b = region.boundary_mask();
    let g = region.grid;
    let mut pts = Vec::new();
    for iy in 0..g.height {
        for ix in 0..g.width {
            if b.get(ix, iy) {
                pts.push(g.cell_center(ix, iy));
            }
        }
    }
    Ok(pts)
}

/// Symmetric Hausdorff distance between two point sets (brute force).
pub fn hausdorff_distance(p: &[Point], q: &[Point]) -> Result<f64> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(directed_hausdorff(p, q).max(directed_hausdorff(q, p)))
}

fn directed_hausdorff(p: &[Point], q: &[Point]) -> f64 {
    let tree = KdTree::build(q);
    let mut worst = 0.0f64;
    for a in p {
        worst = worst.max(tree.nearest(a).0);
    }
    worst.sqrt()
}

/// Outcome of one erosion/dilation reconstruction.
#[derive(Debug, Clone, Copy)]
pub struct ReconstructionReport {
    pub epsilon: f64,
    pub hausdorff_distance: f64,
    pub passed: bool,
    pub cell_spacing: f64,
    pub curve_sampling_step: f64,
}

impl ReconstructionReport {
    /// Pass rule: the reconstructed boundary must match the sampled curve
    /// within `3h + sampling step`.
    pub fn tolerance(&self) -> f64 {
        3.0 * self.cell_spacing + self.curve_sampling_step
    }
}

/// Erode the rasterized region by `epsilon`, dilate the remainder back, and
/// compare the reconstructed boundary against the sampled curve.
pub fn verify_reconstruction(
    sample: &CurveSample,
    epsilon: f64,
    grid: &GridSpec,
) -> Result<ReconstructionReport> {
    let h = grid.spacing;
    if !(epsilon >= 4.0 * h) {
        return Err(Error::InvalidConfig(format!(
            "epsilon {epsilon} below 4h = {}",
            4.0 * h
        )));
    }
    let (lo, hi) = sample.bounding_box();
    if !grid.covers(lo, hi, 2.0 * epsilon) {
        return Err(Error::InvalidConfig(
            "grid does not cover the curve with a 2*epsilon margin".into(),
        ));
    }
    let mask = rasterize_region(sample, grid)?;
    let recovered = erode(&mask, epsilon)?;
    let neighbourhood = dilate(&recovered, epsilon)?;
    let boundary = boundary_extract(&neighbourhood)?;
    let hd = hausdorff_distance(&boundary, &sample.points)?;
    let step = sample.max_step();
    let report = ReconstructionReport {
        epsilon,
        hausdorff_distance: hd,
        passed: hd <= 3.0 * h + step,
        cell_spacing: h,
        curve_sampling_step: step,
    };
    Ok(report)
}

/// First epsilon in a descending ladder whose reconstruction passes.
/// Erosions that empty out or violate the `4h` floor count as failures and
/// the search continues down the ladder.
pub fn epsilon_search(
    sample: &CurveSample,
    grid: &GridSpec,
    ladder: &[f64],
) -> Result<(f64, ReconstructionReport)> {
    if ladder.is_empty() {
        return Err(Error::InvalidConfig("empty epsilon ladder".into()));
    }
    if ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidConfig("epsilon ladder must descend".into()));
    }
    for &eps in ladder {
        match verify_reconstruction(sample, eps, grid) {
            Ok(report) if report.passed => return Ok((eps, report)),
            Ok(_) => {}
            Err(Error::EmptyErosion { .. }) | Err(Error::InvalidConfig(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Err(Error::NoneFound)
}

/// Per-cell count of near-minimal metric projections onto a target set.
#[derive(Debug, Clone)]
pub struct MultiplicityMap {
    pub grid: GridSpec,
    pub count: Vec<u32>,
    /// Up to four witness projections per flagged cell (count ≥ 2), capped
    /// globally to keep dense maps bounded.
    pub witnesses: BTreeMap<usize, Vec<Point>>,
}

/// Cap on stored witness entries.
const WITNESS_CAP: usize = 100_000;

/// For each cell, the number of target points within `tau` of the minimal
/// distance. Counts of 1 form the grid estimate of the region with unique
/// metric projection.
pub fn projection_multiplicity(
    targets: &[Point],
    grid: &GridSpec,
    tau: f64,
) -> Result<MultiplicityMap> {
    if targets.is_empty() {
        return Err(Error::EmptyTargets);
    }
    if !(tau >= 2.0 * grid.spacing) {
        return Err(Error::InvalidConfig(format!(
            "multiplicity tolerance {tau} below 2h = {}",
            2.0 * grid.spacing
        )));
    }
    let tree = KdTree::build(targets);
    let mut count = Vec::with_capacity(grid.len());
    let mut witnesses = BTreeMap::new();
    let mut scratch = Vec::new();
    for iy in 0..grid.height {
        for ix in 0..grid.width {
            let c = grid.cell_center(ix, iy);
            let (d2, _) = tree.nearest(&c);
            let r = d2.sqrt() + tau;
            let n = tree.count_within(&c, r);
            count.push(n as u32);
            if n >= 2 && witnesses.len() < WITNESS_CAP {
                tree.collect_within(&c, r, 4, &mut scratch);
                let pts: Vec<Point> = scratch.iter().map(|&i| tree.point(i)).collect();
                witnesses.insert(grid.index(ix, iy), pts);
            }
        }
    }
    Ok(MultiplicityMap {
        grid: *grid,
        count,
        witnesses,
    })
}

/// Angular slack factor for the reach estimator: a cell is flagged as
/// having genuinely distinct projections when two near-minimal targets
/// subtend at least `π − 5h / max(d_min, h)` as seen from the cell.
const REACH_ANTIPODAL_SLACK: f64 = 5.0;

/// Grid reach estimate per target point: distance from the target to the
/// nearest cell whose near-minimal projections point in nearly opposite
/// directions, plus half a flag-band width. Without any flagged cell the
/// estimate degrades to the distance to the grid edge.
pub fn reach_estimate(targets: &[Point], grid: &GridSpec) -> Result<Vec<f64>> {
    if targets.is_empty() {
        return Err(Error::EmptyTargets);
    }
    let tau = 2.0 * grid.spacing;
    let tree = KdTree::build(targets);
    let mut flagged: Vec<Point> = Vec::new();
    let mut qualifying = Vec::new();
    for iy in 0..grid.height {
        for ix in 0..grid.width {
            let c = grid.cell_center(ix, iy);
            let (d2, _) = tree.nearest(&c);
            let dmin = d2.sqrt();
            let radius = dmin + tau;
            tree.collect_within(&c, radius, usize::MAX, &mut qualifying);
            if qualifying.len() < 2 {
                continue;
            }
            let slack = REACH_ANTIPODAL_SLACK * grid.spacing / dmin.max(grid.spacing);
            let threshold = (std::f64::consts::PI - slack).max(std::f64::consts::FRAC_PI_2);
            if has_pair_subtending(&tree, &qualifying, &c, threshold) {
                flagged.push(c);
            }
        }
    }
    let band = grid.spacing;
    let estimates = targets
        .iter()
        .map(|t| {
            if flagged.is_empty() {
                return edge_distance(grid, t);
            }
            let nearest = flagged
                .iter()
                .map(|f| f.dist(t))
                .fold(f64::INFINITY, f64::min);
            nearest + band
        })
        .collect();
    Ok(estimates)
}

/// Whether any two of the listed targets subtend at least `threshold`
/// radians as seen from `c`. Sorted-angle sweep over the qualifying set.
fn has_pair_subtending(tree: &KdTree, indices: &[usize], c: &Point, threshold: f64) -> bool {
    let mut angles: Vec<f64> = indices
        .iter()
        .map(|&i| {
            let p = tree.point(i);
            (p.y - c.y).atan2(p.x - c.x)
        })
        .collect();
    angles.sort_by(f64::total_cmp);
    // Max pairwise separation min(|Δ|, 2π − |Δ|): scan each angle against the
    // candidates half a turn away via binary search windows.
    let n = angles.len();
    for i in 0..n {
        let a = angles[i];
        // Candidates with Δ in [threshold, 2π − threshold].
        let lo = a + threshold;
        let hi = a + TAU - threshold;
        if lo > hi {
            continue;
        }
        // Angles are sorted in [−π, π]; search both the raw and wrapped band.
        for (lo, hi) in [(lo, hi), (lo - TAU, hi - TAU)] {
            let start = angles.partition_point(|&x| x < lo);
            if start < n && angles[start] <= hi {
                return true;
            }
        }
    }
    false
}

fn edge_distance(grid: &GridSpec, p: &Point) -> f64 {
    let gx1 = grid.origin.x + grid.width as f64 * grid.spacing;
    let gy1 = grid.origin.y + grid.height as f64 * grid.spacing;
    (p.x - grid.origin.x)
        .min(gx1 - p.x)
        .min(p.y - grid.origin.y)
        .min(gy1 - p.y)
        .max(0.0)
}

/// PGM (P5, 8-bit) export: 255 = inside, 0 = outside, top row first.
pub fn encode_pgm(mask: &RegionMask) -> Vec<u8> {
    let g = mask.grid;
    let mut out = format!("P5\n{} {}\n255\n", g.width, g.height).into_bytes();
    for iy in (0..g.height).rev() {
        for ix in 0..g.width {
            out.push(if mask.get(ix, iy) { 255 } else { 0 });
        }
    }
    out
}

/// PGM (P5, 8-bit) import onto an existing grid geometry; dimensions must
/// match. Any nonzero byte counts as inside.
pub fn decode_pgm(bytes: &[u8], grid: &GridSpec) -> Result<RegionMask> {
    let mut pos = 0usize;
    let mut token = |bytes: &[u8]| -> Result<String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::InvalidData("truncated PGM header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token(bytes)? != "P5" {
        return Err(Error::InvalidData("not a P5 PGM".into()));
    }
    let width: usize = token(bytes)?
        .parse()
        .map_err(|_| Error::InvalidData("bad PGM width".into()))?;
    let height: usize = token(bytes)?
        .parse()
        .map_err(|_| Error::InvalidData("bad PGM height".into()))?;
    let maxval: usize = token(bytes)?
        .parse()
        .map_err(|_| Error::InvalidData("bad PGM maxval".into()))?;
    if maxval != 255 {
        return Err(Error::InvalidData("PGM maxval must be 255".into()));
    }
    if width != grid.width || height != grid.height {
        return Err(Error::InvalidData(format!(
            "PGM {width}x{height} does not match grid {}x{}",
            grid.width, grid.height
        )));
    }
    pos += 1; // single whitespace after maxval
    let data = &bytes[pos..];
    if data.len() < width * height {
        return Err(Error::InvalidData("truncated PGM payload".into()));
    }
    let mut mask = RegionMask::new(*grid);
    for iy in 0..height {
        for ix in 0..width {
            let v = data[(height - 1 - iy) * width + ix];
            if v != 0 {
                mask.set(ix, iy, true);
            }
        }
    }
    Ok(mask)
}
