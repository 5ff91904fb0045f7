//! Point-process sampling and thinning on a square window with a guard band.
//!
//! Points are sampled on the *sampling region* (the measurement square grown
//! by `guard` on every side) and statistics are taken only over the inner
//! *measurement region*. A guard of at least the hard-core distance makes the
//! thinning decision of every measured point identical to the one it would
//! get on the whole plane.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const ORIGIN: Point2D = Point2D { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist2(&self, other: &Point2D) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(&self, other: &Point2D) -> f64 {
        self.dist2(other).sqrt()
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    half_width: f64,
    guard: f64,
}

impl Window {
    pub fn new(half_width: f64, guard: f64) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::param("half_width", "must be finite and > 0"));
        }
        if !(guard.is_finite() && guard >= 0.0) {
            return Err(Error::param("guard", "must be finite and >= 0"));
        }
        Ok(Self { half_width, guard })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn guard(&self) -> f64 {
        self.guard
    }

    pub fn sampling_half_width(&self) -> f64 {
        self.half_width + self.guard
    }

    pub fn measurement_area(&self) -> f64 {
        4.0 * self.half_width * self.half_width
    }

    pub fn sampling_area(&self) -> f64 {
        let s = self.sampling_half_width();
        4.0 * s * s
    }

    pub fn in_measurement(&self, p: &Point2D) -> bool {
        p.x.abs() <= self.half_width && p.y.abs() <= self.half_width
    }

    pub fn in_sampling(&self, p: &Point2D) -> bool {
        let s = self.sampling_half_width();
        p.x.abs() <= s && p.y.abs() <= s
    }

    /// Window with the same measurement square and a different guard.
    pub fn with_guard(&self, guard: f64) -> Result<Self> {
        Self::new(self.half_width, guard)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointSet {
    pub points: Vec<Point2D>,
}

impl PointSet {
    pub fn new(points: Vec<Point2D>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point2D> {
        self.points.iter()
    }

    pub fn count_in_measurement(&self, window: &Window) -> usize {
        self.points.iter().filter(|p| window.in_measurement(p)).count()
    }

    /// Smallest pairwise distance, or `None` for fewer than two points.
    pub fn min_pairwise_distance(&self) -> Option<f64> {
        if self.points.len() < 2 {
            return None;
        }
        // any cell size works; pick one that keeps ~4 points per cell
        let (lo, hi) = bounding_box(&self.points);
        let area = ((hi.x - lo.x) * (hi.y - lo.y)).max(1e-12);
        let cell = (4.0 * area / self.points.len() as f64).sqrt().max(1e-9);
        let grid = GridIndex::new(&self.points, cell);
        let mut best = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            if let Some((_, d)) = grid.nearest_excluding(p, i) {
                best = best.min(d);
            }
        }
        Some(best)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkedPoint {
    pub point: Point2D,
    pub mark: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MarkedPointSet {
    pub points: Vec<MarkedPoint>,
}

impl MarkedPointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn locations(&self) -> Vec<Point2D> {
        self.points.iter().map(|m| m.point).collect()
    }
}

fn bounding_box(points: &[Point2D]) -> (Point2D, Point2D) {
    let mut lo = Point2D::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2D::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

/// Uniform bucket grid over a fixed point slice (CSR layout).
#[derive(Debug, Clone)]
pub struct GridIndex<'a> {
    points: &'a [Point2D],
    origin: Point2D,
    cell: f64,
    nx: usize,
    ny: usize,
    starts: Vec<u32>,
    items: Vec<u32>,
}

impl<'a> GridIndex<'a> {
    pub fn new(points: &'a [Point2D], cell: f64) -> Self {
        let (lo, hi) = if points.is_empty() {
            (Point2D::ORIGIN, Point2D::ORIGIN)
        } else {
            bounding_box(points)
        };
        let mut cell = cell.max(1e-9);
        // cap the cell count so a tiny cell on a wide set stays bounded in memory
        let span = (hi.x - lo.x).max(hi.y - lo.y);
        let max_cells_per_side = 4096.0;
        if span / cell > max_cells_per_side {
            cell = span / max_cells_per_side;
        }
        let nx = ((hi.x - lo.x) / cell).floor() as usize + 1;
        let ny = ((hi.y - lo.y) / cell).floor() as usize + 1;
        let mut counts = vec![0u32; nx * ny + 1];
        let cell_of = |p: &Point2D| -> usize {
            let cx = (((p.x - lo.x) / cell).floor() as usize).min(nx - 1);
            let cy = (((p.y - lo.y) / cell).floor() as usize).min(ny - 1);
            cy * nx + cx
        };
        for p in points {
            counts[cell_of(p) + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; points.len()];
        for (i, p) in points.iter().enumerate() {
            let c = cell_of(p);
            items[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        Self {
            points,
            origin: lo,
            cell,
            nx,
            ny,
            starts: counts,
            items,
        }
    }

    pub fn points(&self) -> &'a [Point2D] {
        self.points
    }

    fn cell_coords(&self, p: &Point2D) -> (i64, i64) {
        (
            ((p.x - self.origin.x) / self.cell).floor() as i64,
            ((p.y - self.origin.y) / self.cell).floor() as i64,
        )
    }

    fn bucket(&self, cx: i64, cy: i64) -> &[u32] {
        if cx < 0 || cy < 0 || cx >= self.nx as i64 || cy >= self.ny as i64 {
            return &[];
        }
        let c = cy as usize * self.nx + cx as usize;
        &self.items[self.starts[c] as usize..self.starts[c + 1] as usize]
    }

    /// Calls `f(index, squared_distance)` for every point with
    /// `|p - center| <= radius`.
    pub fn for_each_within<F: FnMut(usize, f64)>(&self, center: &Point2D, radius: f64, mut f: F) {
        if self.points.is_empty() {
            return;
        }
        let r2 = radius * radius;
        let (x0, y0) = self.cell_coords(&Point2D::new(center.x - radius, center.y - radius));
        let (x1, y1) = self.cell_coords(&Point2D::new(center.x + radius, center.y + radius));
        let x0 = x0.max(0);
        let y0 = y0.max(0);
        let x1 = x1.min(self.nx as i64 - 1);
        let y1 = y1.min(self.ny as i64 - 1);
        for cy in y0..=y1 {
            for cx in x0..=x1 {
                for &i in self.bucket(cx, cy) {
                    let d2 = self.points[i as usize].dist2(center);
                    if d2 <= r2 {
                        f(i as usize, d2);
                    }
                }
            }
        }
    }

    pub fn nearest(&self, center: &Point2D) -> Option<(usize, f64)> {
        self.nearest_filtered(center, |_| true)
    }

    pub fn nearest_excluding(&self, center: &Point2D, skip: usize) -> Option<(usize, f64)> {
        self.nearest_filtered(center, |i| i != skip)
    }

    fn nearest_filtered<P: Fn(usize) -> bool>(&self, center: &Point2D, keep: P) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let (cx, cy) = self.cell_coords(center);
        let mut best: Option<(usize, f64)> = None;
        let max_ring = (self.nx.max(self.ny) as i64) + cx.abs().max(cy.abs()) + 1;
        for ring in 0..=max_ring {
            // every point outside ring `k` is at least (k) * cell away
            if let Some((_, d2)) = best {
                let reach = (ring - 1).max(0) as f64 * self.cell;
                if reach * reach > d2 {
                    break;
                }
            }
            let mut visit = |x: i64, y: i64| {
                for &i in self.bucket(x, y) {
                    let i = i as usize;
                    if !keep(i) {
                        continue;
                    }
                    let d2 = self.points[i].dist2(center);
                    if best.is_none_or(|(_, b)| d2 < b) {
                        best = Some((i, d2));
                    }
                }
            };
            if ring == 0 {
                visit(cx, cy);
                continue;
            }
            for x in (cx - ring)..=(cx + ring) {
                visit(x, cy - ring);
                visit(x, cy + ring);
            }
            for y in (cy - ring + 1)..=(cy + ring - 1) {
                visit(cx - ring, y);
                visit(cx + ring, y);
            }
        }
        best.map(|(i, d2)| (i, d2.sqrt()))
    }
}

/// Homogeneous Poisson process on the sampling region of `window`.
pub fn sample_ppp(intensity: f64, window: &Window, seed: u64) -> Result<PointSet> {
    if !(intensity.is_finite() && intensity >= 0.0) {
        return Err(Error::param("intensity", "must be finite and >= 0"));
    }
    let mean = intensity * window.sampling_area();
    if mean == 0.0 {
        return Ok(PointSet::default());
    }
    let mut rng = rng_from_seed(seed);
    let n = Poisson::new(mean)
        .map_err(|e| Error::param("intensity", e.to_string()))?
        .sample(&mut rng) as usize;
    let s = window.sampling_half_width();
    let points = (0..n)
        .map(|_| Point2D::new(rng.random_range(-s..s), rng.random_range(-s..s)))
        .collect();
    Ok(PointSet::new(points))
}

/// Attaches an independent Uniform[0,1) mark to every point.
pub fn assign_marks(points: &PointSet, seed: u64) -> MarkedPointSet {
    let mut rng = rng_from_seed(seed);
    MarkedPointSet {
        points: points
            .iter()
            .map(|&point| MarkedPoint {
                point,
                mark: rng.random::<f64>(),
            })
            .collect(),
    }
}

/// Indices of the points kept by dependent (type II) thinning: a point stays
/// iff no other point within distance `delta` carries a larger mark. Equal
/// marks are ordered by index so the output is always a hard-core set.
pub fn matern_ii_retained(marked: &MarkedPointSet, delta: f64) -> Result<Vec<usize>> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::param("delta", "must be finite and >= 0"));
    }
    let n = marked.len();
    if delta == 0.0 {
        return Ok((0..n).collect());
    }
    let locs = marked.locations();
    let grid = GridIndex::new(&locs, delta);
    let beats = |j: usize, i: usize| {
        let (mj, mi) = (marked.points[j].mark, marked.points[i].mark);
        mj > mi || (mj == mi && j > i)
    };
    Ok((0..n)
        .filter(|&i| {
            let mut keep = true;
            grid.for_each_within(&locs[i], delta, |j, _| {
                if j != i && beats(j, i) {
                    keep = false;
                }
            });
            keep
        })
        .collect())
}

pub fn matern_ii_thin(marked: &MarkedPointSet, delta: f64) -> Result<PointSet> {
    let keep = matern_ii_retained(marked, delta)?;
    Ok(PointSet::new(keep.into_iter().map(|i| marked.points[i].point).collect()))
}

/// Independent thinning: every point survives with probability `retain_prob`.
pub fn random_thin(points: &PointSet, retain_prob: f64, seed: u64) -> Result<PointSet> {
    if !(0.0..=1.0).contains(&retain_prob) {
        return Err(Error::param("retain_prob", "must lie in [0, 1]"));
    }
    let mut rng = rng_from_seed(seed);
    let kept = points
        .iter()
        .filter(|_| rng.random::<f64>() < retain_prob)
        .copied()
        .collect();
    Ok(PointSet::new(kept))
}

pub fn nearest_distance(origin: &Point2D, points: &PointSet) -> Result<f64> {
    points
        .iter()
        .map(|p| p.dist2(origin))
        .min_by(f64::total_cmp)
        .map(f64::sqrt)
        .ok_or(Error::NoCoverage)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairBin {
    pub r_lo: f64,
    pub r_hi: f64,
    /// Estimated second-order product density (m⁻⁴).
    pub density: f64,
    pub pair_count: u64,
}

impl PairBin {
    pub fn r_mid(&self) -> f64 {
        0.5 * (self.r_lo + self.r_hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairCorrelation {
    pub bins: Vec<PairBin>,
    /// Set when the input had no points; `bins` is then empty.
    pub empty_input: bool,
    /// Number of reference points used (those far enough from the sampling edge).
    pub reference_points: usize,
    pub reference_area: f64,
}

/// Binned estimate of the second-order product density.
///
/// Reference points are restricted to the square whose `r_max` neighborhood
/// stays inside the sampling region, so every counted neighbor set is
/// complete (minus-sampling). The estimate for bin `[a, b)` is
/// `pairs / (area_ref * pi * (b^2 - a^2))`.
pub fn empirical_pair_correlation(
    points: &PointSet,
    window: &Window,
    bin_width: f64,
    r_max: f64,
) -> Result<PairCorrelation> {
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(Error::param("bin_width", "must be finite and > 0"));
    }
    if !(r_max > 0.0 && r_max <= window.half_width()) {
        return Err(Error::param("r_max", "must lie in (0, window half_width]"));
    }
    let ref_half = window.half_width().min(window.sampling_half_width() - r_max);
    let reference_area = 4.0 * ref_half * ref_half;
    let nbins = (r_max / bin_width).ceil() as usize;
    if points.is_empty() {
        return Ok(PairCorrelation {
            bins: Vec::new(),
            empty_input: true,
            reference_points: 0,
            reference_area,
        });
    }
    let grid = GridIndex::new(&points.points, r_max.max(bin_width));
    let mut counts = vec![0u64; nbins];
    let mut reference_points = 0;
    for (i, p) in points.iter().enumerate() {
        if p.x.abs() > ref_half || p.y.abs() > ref_half {
            continue;
        }
        reference_points += 1;
        grid.for_each_within(p, r_max, |j, d2| {
            if j == i {
                return;
            }
            let b = (d2.sqrt() / bin_width) as usize;
            if b < nbins {
                counts[b] += 1;
            }
        });
    }
    let bins = counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| {
            let r_lo = k as f64 * bin_width;
            let r_hi = ((k + 1) as f64 * bin_width).min(r_max);
            let ring = std::f64::consts::PI * (r_hi * r_hi - r_lo * r_lo);
            PairBin {
                r_lo,
                r_hi,
                density: c as f64 / (reference_area * ring),
                pair_count: c,
            }
        })
        .collect();
    Ok(PairCorrelation {
        bins,
        empty_input: false,
        reference_points,
        reference_area,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn window() -> Window {
        Window::new(1000.0, 300.0).unwrap()
    }

    #[test]
    fn zero_intensity_is_empty() {
        assert!(sample_ppp(0.0, &window(), 1).unwrap().is_empty());
    }

    #[test]
    fn negative_intensity_rejected() {
        assert!(matches!(
            sample_ppp(-1.0, &window(), 1),
            Err(Error::Parameter { name: "intensity", .. })
        ));
    }

    #[test]
    fn ppp_is_deterministic() {
        let a = sample_ppp(1e-4, &window(), 42).unwrap();
        let b = sample_ppp(1e-4, &window(), 42).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| window().in_sampling(p)));
    }

    #[test]
    fn marks_in_unit_interval() {
        let pts = sample_ppp(1e-4, &window(), 3).unwrap();
        let m = assign_marks(&pts, 4);
        assert_eq!(m.len(), pts.len());
        assert!(m.points.iter().all(|p| (0.0..=1.0).contains(&p.mark)));
        assert!(assign_marks(&PointSet::default(), 1).is_empty());
    }

    #[test]
    fn mark_mean_is_one_half() {
        let pts = PointSet::new(vec![Point2D::ORIGIN; 1_000_000]);
        let m = assign_marks(&pts, 11);
        let mean = m.points.iter().map(|p| p.mark).sum::<f64>() / m.len() as f64;
        assert!((mean - 0.5).abs() < 0.0015, "mean {mean}");
    }

    #[test]
    fn thinning_with_zero_delta_is_identity() {
        let pts = sample_ppp(1e-4, &window(), 5).unwrap();
        let m = assign_marks(&pts, 6);
        assert_eq!(matern_ii_thin(&m, 0.0).unwrap(), pts);
    }

    #[test]
    fn larger_mark_survives() {
        let m = MarkedPointSet {
            points: vec![
                MarkedPoint { point: Point2D::new(0.0, 0.0), mark: 0.9 },
                MarkedPoint { point: Point2D::new(100.0, 0.0), mark: 0.2 },
            ],
        };
        let kept = matern_ii_thin(&m, 200.0).unwrap();
        assert_eq!(kept.points, vec![Point2D::new(0.0, 0.0)]);
    }

    #[test]
    fn tied_marks_keep_one() {
        let m = MarkedPointSet {
            points: vec![
                MarkedPoint { point: Point2D::new(0.0, 0.0), mark: 0.5 },
                MarkedPoint { point: Point2D::new(10.0, 0.0), mark: 0.5 },
            ],
        };
        assert_eq!(matern_ii_retained(&m, 50.0).unwrap(), vec![1]);
    }

    #[test]
    fn random_thin_extremes() {
        let pts = sample_ppp(1e-4, &window(), 9).unwrap();
        assert_eq!(random_thin(&pts, 1.0, 1).unwrap(), pts);
        assert!(random_thin(&pts, 0.0, 1).unwrap().is_empty());
        assert!(random_thin(&pts, 1.5, 1).is_err());
    }

    #[test]
    fn nearest_distance_cases() {
        let pts = PointSet::new(vec![Point2D::new(3.0, 4.0)]);
        assert_eq!(nearest_distance(&Point2D::ORIGIN, &pts).unwrap(), 5.0);
        assert_eq!(nearest_distance(&Point2D::new(3.0, 4.0), &pts).unwrap(), 0.0);
        assert_eq!(
            nearest_distance(&Point2D::ORIGIN, &PointSet::default()),
            Err(Error::NoCoverage)
        );
    }

    #[test]
    fn pair_correlation_empty_flag() {
        let pc = empirical_pair_correlation(&PointSet::default(), &window(), 10.0, 100.0).unwrap();
        assert!(pc.empty_input && pc.bins.is_empty());
    }

    #[test]
    fn pair_correlation_rejects_bad_bins() {
        let pts = sample_ppp(1e-4, &window(), 1).unwrap();
        assert!(empirical_pair_correlation(&pts, &window(), 0.0, 100.0).is_err());
        assert!(empirical_pair_correlation(&pts, &window(), 10.0, 5000.0).is_err());
    }

    #[test]
    fn pair_correlation_zero_inside_hard_core() {
        let pts = sample_ppp(1e-4, &window(), 21).unwrap();
        let hc = matern_ii_thin(&assign_marks(&pts, 22), 200.0).unwrap();
        let pc = empirical_pair_correlation(&hc, &window(), 25.0, 400.0).unwrap();
        for b in pc.bins.iter().filter(|b| b.r_hi <= 200.0) {
            assert_eq!(b.density, 0.0);
        }
    }

    #[test]
    fn grid_nearest_matches_brute_force() {
        let pts = sample_ppp(2e-4, &window(), 77).unwrap();
        let grid = GridIndex::new(&pts.points, 70.0);
        let mut rng = rng_from_seed(5);
        for _ in 0..200 {
            let q = Point2D::new(rng.random_range(-2000.0..2000.0), rng.random_range(-2000.0..2000.0));
            let (_, d) = grid.nearest(&q).unwrap();
            assert_eq!(d, nearest_distance(&q, &pts).unwrap());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn hard_core_and_subset(seed in any::<u64>(), delta in 20.0f64..300.0) {
            let w = Window::new(600.0, 300.0).unwrap();
            let pts = sample_ppp(1e-4, &w, seed).unwrap();
            let marked = assign_marks(&pts, seed ^ 1);
            let kept = matern_ii_thin(&marked, delta).unwrap();
            if let Some(d) = kept.min_pairwise_distance() {
                prop_assert!(d >= delta);
            }
            prop_assert!(kept.iter().all(|p| pts.points.contains(p)));
            let fewer = matern_ii_retained(&marked, delta * 1.5).unwrap();
            prop_assert!(fewer.len() <= kept.len());
        }

        #[test]
        fn guard_enlargement_keeps_inner_status(seed in any::<u64>()) {
            let delta = 150.0;
            let big = Window::new(500.0, 800.0).unwrap();
            let small = big.with_guard(delta).unwrap();
            let pts = sample_ppp(1e-4, &big, seed).unwrap();
            let marked = assign_marks(&pts, seed.wrapping_add(3));
            let full: Vec<Point2D> = matern_ii_thin(&marked, delta).unwrap().points;
            let cropped = MarkedPointSet {
                points: marked.points.iter().copied().filter(|m| small.in_sampling(&m.point)).collect(),
            };
            let part: Vec<Point2D> = matern_ii_thin(&cropped, delta).unwrap().points;
            let inner = |v: &[Point2D]| -> Vec<Point2D> {
                v.iter().copied().filter(|p| small.in_measurement(p)).collect()
            };
            prop_assert_eq!(inner(&full), inner(&part));
        }
    }
}
