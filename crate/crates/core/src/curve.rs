//! Wrapping a radial profile around the origin: curve sampling, wedge turn
//! angles, star-shape checks, and CSV/SVG export.

use std::f64::consts::TAU;

use crate::cantor::{closing_parabola_derivative, combined_eval, CantorConfig};
use crate::error::{Error, Result};
use crate::profile::{ProfileConfig, ProfileValue};
use crate::rational::RationalAngle;

/// A planar point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn dist_squared(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// `α(x, r) = r·(cos x, sin x)`.
pub fn polar_map(angle: f64, radius: f64) -> Point {
    Point::new(radius * angle.cos(), radius * angle.sin())
}

/// A sampled closed curve in polar form: ascending parameters, matching
/// radii with their error radii, and the mapped planar points.
#[derive(Debug, Clone)]
pub struct CurveSample {
    pub parameters: Vec<f64>,
    pub radii: Vec<f64>,
    pub errors: Vec<f64>,
    pub points: Vec<Point>,
    pub closed: bool,
}

impl CurveSample {
    pub fn len(&self) -> usize {
        self.parameters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parameters.is_empty()
    }

    /// Radius at an arbitrary angle in `[0, 2π)` by linear interpolation.
    pub fn radius_at(&self, angle: f64) -> f64 {
        let p = &self.parameters;
        let n = p.len();
        if n == 0 {
            return 0.0;
        }
        if angle <= p[0] {
            return self.radii[0];
        }
        if angle >= p[n - 1] {
            return self.radii[n - 1];
        }
        let hi = p.partition_point(|&t| t < angle);
        let lo = hi - 1;
        let (t0, t1) = (p[lo], p[hi]);
        if t1 <= t0 {
            return self.radii[lo];
        }
        let w = (angle - t0) / (t1 - t0);
        self.radii[lo] + w * (self.radii[hi] - self.radii[lo])
    }

    /// Largest gap between consecutive sampled points.
    pub fn max_step(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[0].dist(&w[1]))
            .fold(0.0, f64::max)
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.points {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }
}

/// Samples a radial profile on a uniform grid over `[0, 2π]`, inserting a
/// one-sided pair `q ∓ ulp` around every supplied rational so the polyline
/// renders corners without smoothing. The curve is marked closed when the
/// endpoint radii agree within their combined error radii.
pub fn sample_curve<F>(
    profile: F,
    n_samples: usize,
    rationals: &[RationalAngle],
) -> Result<CurveSample>
where
    F: Fn(f64) -> Result<ProfileValue>,
{
    if n_samples < 16 {
        return Err(Error::InvalidConfig(format!(
            "n_samples = {n_samples} < 16"
        )));
    }
    let mut params: Vec<f64> = (0..n_samples)
        .map(|i| i as f64 * TAU / (n_samples - 1) as f64)
        .collect();
    params[0] = 0.0;
    *params.last_mut().expect("nonempty") = TAU;
    for q in rationals {
        let qf = q.as_f64();
        if qf > 0.0 && qf < TAU {
            params.push(qf.next_down());
            params.push(qf.next_up());
        }
    }
    params.sort_by(f64::total_cmp);
    params.dedup();

    let mut radii = Vec::with_capacity(params.len());
    let mut errors = Vec::with_capacity(params.len());
    let mut points = Vec::with_capacity(params.len());
    for &x in &params {
        let v = profile(x)?;
        if v.value <= 0.0 {
            return Err(Error::NonPositiveRadius {
                at: x,
                radius: v.value,
            });
        }
        radii.push(v.value);
        errors.push(v.error_radius);
        points.push(polar_map(x, v.value));
    }
    let first = 0;
    let last = params.len() - 1;
    let closed = (radii[first] - radii[last]).abs() <= errors[first] + errors[last];
    Ok(CurveSample {
        parameters: params,
        radii,
        errors,
        points,
        closed,
    })
}

/// A corner of the curve: the rational location, its derivative jump, the
/// positive turn angle between the one-sided tangents, and the vertex.
#[derive(Debug, Clone, Copy)]
pub struct WedgeRecord {
    pub location: RationalAngle,
    pub jump: f64,
    pub turn_angle: f64,
    pub point: Point,
}

/// Turn angle between the radial-frame tangents `(left_slope, r)` and
/// `(right_slope, r)`; positive whenever the slope jumps upward.
fn turn_angle(radius: f64, left_slope: f64, right_slope: f64) -> f64 {
    f64::atan2(radius, left_slope) - f64::atan2(radius, right_slope)
}

/// Wedge records for the `top_k` largest jumps of the profile, sorted by
/// descending turn angle (ties by enumeration index). The seam corner at
/// angle 0 combines the right derivative at 0 with the left derivative at
/// 2π.
pub fn wedge_turn_angles(cfg: &ProfileConfig, top_k: usize) -> Result<Vec<WedgeRecord>> {
    wedge_records_with(cfg, top_k, |_x| (0.0, 0.0))
}

/// Wedge records for the combined profile `T = S + S_g`: same corner set,
/// with the Cantor layer shifting both the radii and the slopes.
pub fn combined_wedge_turn_angles(
    cfg: &ProfileConfig,
    cantor: &CantorConfig,
    top_k: usize,
) -> Result<Vec<WedgeRecord>> {
    wedge_records_with(cfg, top_k, |x| {
        let radius_shift = cantor.cantor_sum_eval(x).value;
        let slope_shift = cantor.scaled_eval(x).value + closing_parabola_derivative(x);
        (radius_shift, slope_shift)
    })
}

fn wedge_records_with<F>(cfg: &ProfileConfig, top_k: usize, extra: F) -> Result<Vec<WedgeRecord>>
where
    F: Fn(f64) -> (f64, f64),
{
    let table = cfg.singularity_table(top_k)?;
    let mut records = Vec::with_capacity(table.len());
    for entry in table {
        if entry.jump <= 0.0 {
            continue;
        }
        let x = entry.angle.as_f64();
        let (radius_shift, slope_shift) = extra(x);
        let os = cfg.one_sided_at_index(entry.index)?;
        let left = if entry.index == 0 && entry.angle.numerator() == 0 {
            // Seam: the incoming tangent is the left derivative at 2π.
            cfg.one_sided_derivatives(TAU)?.left.value + extra(TAU).1
        } else {
            os.left.value + slope_shift
        };
        let right = os.right.value + slope_shift;
        let radius = cfg.sum_eval(x).value + radius_shift;
        records.push(WedgeRecord {
            location: entry.angle,
            jump: entry.jump,
            turn_angle: turn_angle(radius, left, right),
            point: polar_map(x, radius),
        });
    }
    records.sort_by(|a, b| b.turn_angle.total_cmp(&a.turn_angle));
    Ok(records)
}

/// Result of the star-shape test on a closed sample.
#[derive(Debug, Clone, Copy)]
pub struct StarShapeReport {
    pub min_radius: f64,
    pub kernel_contains_origin_ball: bool,
}

/// Minimum certified radius and whether an origin-centred ball fits in the
/// kernel of the sampled region.
pub fn star_shape_check(sample: &CurveSample) -> Result<StarShapeReport> {
    if !sample.closed {
        return Err(Error::CurveNotClosed);
    }
    let min_radius = sample
        .radii
        .iter()
        .zip(&sample.errors)
        .map(|(r, e)| r - e)
        .fold(f64::INFINITY, f64::min);
    Ok(StarShapeReport {
        min_radius,
        kernel_contains_origin_ball: min_radius > 0.0,
    })
}

/// `%.17g`-style formatting: up to 17 significant digits, fixed notation for
/// exponents in `[-4, 17)`, trailing zeros trimmed. Round-trips every f64.
pub fn format_g17(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".to_string()
        } else if v > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let sci = format!("{:.16e}", v);
    let (mantissa, exp_str) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp_str.parse().expect("exponent digits");
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        let fixed = format!("{:.*}", decimals, v);
        let trimmed = fixed.trim_end_matches('0').trim_end_matches('.');
        trimmed.to_string()
    } else {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{}e{:+03}", m, exp)
    }
}

/// CSV export with header `x,radius,px,py,err` and `%.17g` numbers.
pub fn export_csv(sample: &CurveSample) -> Result<Vec<u8>> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut out = String::with_capacity(sample.len() * 64);
    out.push_str("x,radius,px,py,err\n");
    for i in 0..sample.len() {
        out.push_str(&format_g17(sample.parameters[i]));
        out.push(',');
        out.push_str(&format_g17(sample.radii[i]));
        out.push(',');
        out.push_str(&format_g17(sample.points[i].x));
        out.push(',');
        out.push_str(&format_g17(sample.points[i].y));
        out.push(',');
        out.push_str(&format_g17(sample.errors[i]));
        out.push('\n');
    }
    Ok(out.into_bytes())
}

/// Styling for the SVG export.
#[derive(Debug, Clone)]
pub struct SvgStyle {
    pub width: u32,
    pub height: u32,
    pub stroke: String,
    pub stroke_width: f64,
    pub marker_fill: String,
    pub marker_radius: f64,
    pub margin_fraction: f64,
}

impl Default for SvgStyle {
    fn default() -> Self {
        Self {
            width: 1024,
            height: 1024,
            stroke: "#1a6b3c".to_string(),
            stroke_width: 1.5,
            marker_fill: "#000000".to_string(),
            marker_radius: 4.0,
            margin_fraction: 0.05,
        }
    }
}

/// Static SVG 1.1 markup: the closed polyline plus one filled dot per wedge
/// record. Deterministic bytes for fixed input.
pub fn export_svg(
    sample: &CurveSample,
    wedges: &[WedgeRecord],
    style: &SvgStyle,
) -> Result<Vec<u8>> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let (lo, hi) = sample.bounding_box();
    let ext_x = (hi.x - lo.x).max(1e-300);
    let ext_y = (hi.y - lo.y).max(1e-300);
    let margin = 1.0 + 2.0 * style.margin_fraction;
    let scale = (style.width as f64 / (ext_x * margin)).min(style.height as f64 / (ext_y * margin));
    let cx = 0.5 * (lo.x + hi.x);
    let cy = 0.5 * (lo.y + hi.y);
    let map = |p: &Point| {
        (
            (p.x - cx) * scale + style.width as f64 / 2.0,
            style.height as f64 / 2.0 - (p.y - cy) * scale,
        )
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n",
        w = style.width,
        h = style.height
    ));
    svg.push_str("<path d=\"");
    for (i, p) in sample.points.iter().enumerate() {
        let (x, y) = map(p);
        if i == 0 {
            svg.push_str(&format!("M{:.3},{:.3}", x, y));
        } else {
            svg.push_str(&format!(" L{:.3},{:.3}", x, y));
        }
    }
    if sample.closed {
        svg.push_str(" Z");
    }
    svg.push_str(&format!(
        "\" fill=\"none\" stroke=\"{}\" stroke-width=\"{}\"/>\n",
        style.stroke, style.stroke_width
    ));
    for w in wedges {
        let (x, y) = map(&w.point);
        svg.push_str(&format!(
            "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"{}\" fill=\"{}\"/>\n",
            x, y, style.marker_radius, style.marker_fill
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg.into_bytes())
}

/// Profile callback for the default jump construction.
pub fn profile_callback(cfg: &ProfileConfig) -> impl Fn(f64) -> Result<ProfileValue> + '_ {
    move |x| Ok(cfg.sum_eval(x))
}

/// Profile callback for the combined construction `T = S + S_g`.
pub fn combined_callback<'a>(
    cfg: &'a ProfileConfig,
    cantor: &'a CantorConfig,
) -> impl Fn(f64) -> Result<ProfileValue> + 'a {
    move |x| Ok(combined_eval(x, cfg, cantor))
}
