//! The Cantor-function layer: the devil's staircase `G`, its scaled copy
//! `g(x) = G(x/2π)`, the integral `I_g`, the closing parabola `P_g`, the sum
//! `S_g = I_g + P_g`, the combined profile `T = S + S_g`, and the
//! box-counting estimator for the curvature-failure set.
//!
//! `G` is evaluated from a truncated ternary expansion by pure integer
//! arithmetic (the digit formula is a dyadic with at most `D + 1` fractional
//! bits, so the returned `f64` carries no rounding at all); the truncation
//! radius `2⁻ᴰ` is reported. The integral uses the self-similarity
//! `∫₀ˣ G = (1/6)∫₀^{3x} G` on `[0, 1/3]`, the plateau value on the middle
//! third, and the point symmetry of the graph on `[2/3, 1]`.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::profile::{ProfileConfig, ProfileValue};

/// A truncated ternary expansion of a number in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TernaryExpansion {
    digits: Vec<u8>,
    exact: bool,
}

/// Fixed-point frame used when extracting digits from an `f64`.
const FP_BITS: u32 = 100;

impl TernaryExpansion {
    /// Digits of the exact dyadic value of `x`, clamped to `[0, 1]`.
    /// Inputs below 2⁻¹⁰⁰ of a representable grid step are rounded once;
    /// that displacement is far below the advertised `3⁻ᵈᵉᵖᵗʰ` radius.
    pub fn from_f64(x: f64, depth: u32) -> Self {
        let depth = depth.max(1);
        if x <= 0.0 {
            return Self {
                digits: vec![0; depth as usize],
                exact: x == 0.0,
            };
        }
        if x >= 1.0 {
            return Self {
                digits: vec![2; depth as usize],
                exact: x == 1.0,
            };
        }
        let bits = x.to_bits();
        let raw_exp = ((bits >> 52) & 0x7ff) as i32;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, exp) = if raw_exp == 0 {
            (frac, -1074i32)
        } else {
            (frac | (1u64 << 52), raw_exp - 1075)
        };
        // Represent x as a/2^FP_BITS. For x in (0, 1) the left shift is at
        // most 47 bits, so `a` always fits the frame.
        let shift = FP_BITS as i32 + exp;
        let (mut a, rounded) = if shift >= 0 {
            ((mant as u128) << shift, false)
        } else if -shift >= 128 {
            (0u128, true)
        } else {
            ((mant as u128) >> (-shift), true)
        };
        let mask = (1u128 << FP_BITS) - 1;
        let mut digits = Vec::with_capacity(depth as usize);
        for _ in 0..depth {
            a *= 3;
            digits.push((a >> FP_BITS) as u8);
            a &= mask;
        }
        Self {
            digits,
            exact: !rounded && a == 0,
        }
    }

    /// Digits of the exact rational `num/den` (requires `num ≤ den`).
    pub fn from_ratio(num: u64, den: u64, depth: u32) -> Result<Self> {
        if den == 0 || num > den {
            return Err(Error::InvalidConfig(format!(
                "{num}/{den} is not in [0, 1]"
            )));
        }
        if den > u64::MAX / 3 {
            return Err(Error::InvalidConfig("denominator too large".into()));
        }
        let depth = depth.max(1);
        let mut r = num;
        let mut digits = Vec::with_capacity(depth as usize);
        for _ in 0..depth {
            r *= 3;
            digits.push((r / den) as u8);
            r %= den;
        }
        Ok(Self {
            digits,
            exact: r == 0,
        })
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn depth(&self) -> u32 {
        self.digits.len() as u32
    }

    /// True when the expanded value times `3^depth` is an integer.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// `Σ digits[n] · 3^-(n+1)`; within `3^-depth` of the expanded value.
    pub fn reconstruct(&self) -> f64 {
        let mut acc = 0.0;
        for &d in self.digits.iter().rev() {
            acc = (acc + d as f64) / 3.0;
        }
        acc
    }

    /// The Cantor-function value of this expansion: locate the first digit 1
    /// (the plateau level), halve the leading 0/2 digits. Exact integer
    /// arithmetic; the result is a dyadic with `depth + 1` fractional bits.
    pub fn cantor_value(&self) -> ProfileValue {
        let depth = self.digits.len() as u32;
        debug_assert!(depth <= 52, "digit frame must fit the f64 mantissa");
        let frame = depth + 1;
        let mut m: u64 = 0;
        for (j, &d) in self.digits.iter().enumerate() {
            if d == 1 {
                m += 1u64 << (frame - j as u32 - 1);
                break;
            }
            m += (d as u64) << (frame - j as u32 - 2);
        }
        let value = m as f64 / (1u64 << frame) as f64;
        ProfileValue::new(value, 2f64.powi(-(depth as i32)))
    }
}

/// Evaluation depths for the Cantor layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CantorConfig {
    depth_d: u32,
    depth_r: u32,
}

impl Default for CantorConfig {
    fn default() -> Self {
        Self {
            depth_d: 48,
            depth_r: 32,
        }
    }
}

impl CantorConfig {
    pub fn new(depth_d: u32, depth_r: u32) -> Result<Self> {
        if !(8..=52).contains(&depth_d) {
            return Err(Error::InvalidConfig(format!(
                "expansion depth D = {depth_d} outside [8, 52]"
            )));
        }
        if depth_r < 8 {
            return Err(Error::InvalidConfig(format!(
                "recursion depth R = {depth_r} < 8"
            )));
        }
        Ok(Self { depth_d, depth_r })
    }

    pub fn depth_d(&self) -> u32 {
        self.depth_d
    }

    pub fn depth_r(&self) -> u32 {
        self.depth_r
    }

    /// `G(x)` for `x ∈ [0, 1]`.
    pub fn cantor_eval(&self, x: f64) -> ProfileValue {
        TernaryExpansion::from_f64(x, self.depth_d).cantor_value()
    }

    /// `g(x) = G(x / 2π)` for `x ∈ [0, 2π]`.
    pub fn scaled_eval(&self, x: f64) -> ProfileValue {
        self.cantor_eval(x / TAU)
    }

    /// `∫₀ˣ G` for `x ∈ [0, 1]` by the self-similarity recursion, truncated
    /// after `R` contraction steps.
    pub fn cantor_integral(&self, x: f64) -> ProfileValue {
        let mut acc = 0.0f64;
        let mut coeff = 1.0f64;
        let mut t = x.clamp(0.0, 1.0);
        for _ in 0..self.depth_r {
            if t <= 0.0 {
                return ProfileValue::new(acc, float_slack(acc));
            }
            if t >= 1.0 {
                return ProfileValue::new(acc + coeff * 0.5, float_slack(acc));
            }
            if t < 1.0 / 3.0 {
                coeff /= 6.0;
                t *= 3.0;
            } else if t <= 2.0 / 3.0 {
                // Plateau: ∫₀ᵗ G = 1/12 + (t − 1/3)/2.
                acc += coeff * (1.0 / 12.0 + 0.5 * (t - 1.0 / 3.0));
                return ProfileValue::new(acc, float_slack(acc));
            } else {
                // Point symmetry: ∫₀ᵗ G = t − 1/2 + ∫₀^{1−t} G.
                acc += coeff * (t - 0.5);
                t = 1.0 - t;
            }
        }
        // Truncated: the remaining integral lies in [0, coeff/2].
        ProfileValue::new(acc + coeff * 0.25, coeff * 0.25 + float_slack(acc))
    }

    /// `I_g(x) = ∫₀ˣ g = 2π · ∫₀^{x/2π} G` for `x ∈ [0, 2π]`.
    pub fn integral_scaled(&self, x: f64) -> ProfileValue {
        let unit = self.cantor_integral(x / TAU);
        ProfileValue::new(TAU * unit.value, TAU * unit.error_radius + TAU * 3f64.powi(-(self.depth_r as i32)))
    }

    /// `S_g(x) = I_g(x) + P_g(x)` with `P_g(x) = π − x²/(4π)`.
    pub fn cantor_sum_eval(&self, x: f64) -> ProfileValue {
        let ig = self.integral_scaled(x);
        ProfileValue::new(ig.value + closing_parabola(x), ig.error_radius)
    }
}

/// `P_g(x) = −x²/(4π) + π`.
pub fn closing_parabola(x: f64) -> f64 {
    PI - x * x / (4.0 * PI)
}

/// `P_g'(x) = −x/(2π)`.
pub fn closing_parabola_derivative(x: f64) -> f64 {
    -x / TAU
}

/// Rounding slack for the integral recursion: a handful of ulp per step.
fn float_slack(acc: f64) -> f64 {
    64.0 * f64::EPSILON * acc.abs().max(1.0)
}

/// `T(x) = S(x) + S_g(x)`, the combined profile.
pub fn combined_eval(x: f64, profile: &ProfileConfig, cantor: &CantorConfig) -> ProfileValue {
    let s = profile.sum_eval(x);
    let sg = cantor.cantor_sum_eval(x);
    ProfileValue::new(s.value + sg.value, s.error_radius + sg.error_radius)
}

/// Semiconvexity constant for `T`: the parabola contributes the constant
/// curvature `1/(2π)` and both integrals are convex, so the constants add.
pub fn combined_semiconvexity_constant(profile: &ProfileConfig) -> f64 {
    profile.semiconvexity_constant() + 1.0 / TAU
}

/// The scaled level-`depth` construction intervals covering the
/// curvature-failure set, or a caller-supplied interval family for the
/// box-counting controls.
#[derive(Debug, Clone)]
pub struct CurvatureFailureSet {
    depth: u32,
    intervals: Vec<(f64, f64)>,
}

impl CurvatureFailureSet {
    /// The `2^depth` closed middle-thirds construction intervals of `[0, 1]`,
    /// scaled by 2π. Memory grows as `2^depth`; the admissible range is
    /// `1 ..= 30`.
    pub fn cantor_intervals(depth: u32) -> Result<Self> {
        if !(1..=30).contains(&depth) {
            return Err(Error::InvalidConfig(format!(
                "depth {depth} outside [1, 30]"
            )));
        }
        let mut starts: Vec<u64> = vec![0];
        for _ in 0..depth {
            let mut next = Vec::with_capacity(starts.len() * 2);
            for &s in &starts {
                next.push(3 * s);
                next.push(3 * s + 2);
            }
            starts = next;
        }
        let scale = 3f64.powi(depth as i32);
        let intervals = starts
            .iter()
            .map(|&s| {
                let a = TAU * (s as f64) / scale;
                let b = TAU * ((s + 1) as f64) / scale;
                (a, b)
            })
            .collect();
        Ok(Self { depth, intervals })
    }

    /// Wraps an arbitrary sorted-or-not interval family (used by the
    /// dimension-estimator controls).
    pub fn from_intervals(depth: u32, mut intervals: Vec<(f64, f64)>) -> Self {
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { depth, intervals }
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    /// Number of boxes of width `2π·3⁻ᵈ` meeting the set.
    fn box_count(&self, d: u32) -> usize {
        let box_w = TAU / 3f64.powi(d as i32);
        let eps = box_w * 1e-9;
        let mut count = 0usize;
        let mut last: Option<i64> = None;
        for &(a, b) in &self.intervals {
            let j0 = ((a + eps) / box_w).floor() as i64;
            let j1 = if b - a > 2.0 * eps {
                (((b - eps) / box_w).floor() as i64).max(j0)
            } else {
                j0
            };
            let lo = match last {
                Some(l) if l >= j0 => l + 1,
                _ => j0,
            };
            if j1 >= lo {
                count += (j1 - lo + 1) as usize;
            }
            last = Some(last.map_or(j1, |l| l.max(j1)));
        }
        count
    }
}

/// Least-squares slope of `log₂(box count at scale 3⁻ᵈ)` against
/// `d·log₂ 3`; the box-counting dimension estimate of the set.
pub fn box_counting_dimension(set: &CurvatureFailureSet, depths: &[u32]) -> Result<f64> {
    if depths.len() < 3 {
        return Err(Error::InsufficientScales { got: depths.len() });
    }
    let log2_3 = 3f64.log2();
    let pts: Vec<(f64, f64)> = depths
        .iter()
        .map(|&d| {
            let n = set.box_count(d).max(1);
            (d as f64 * log2_3, (n as f64).log2())
        })
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return Err(Error::InvalidData("degenerate regression scales".into()));
    }
    Ok((n * sxy - sx * sy) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn cfg() -> CantorConfig {
        CantorConfig::default()
    }

    #[test]
    fn cantor_endpoint_values() {
        let c = cfg();
        assert_eq!(c.cantor_eval(0.0).value, 0.0);
        let one = c.cantor_eval(1.0);
        assert!((one.value - 1.0).abs() <= one.error_radius);
    }

    #[test]
    fn cantor_quarter_is_one_third() {
        let c = cfg();
        let v = c.cantor_eval(0.25);
        assert!((v.value - 1.0 / 3.0).abs() <= 2f64.powi(-48));
    }

    #[test]
    fn cantor_third_via_exact_ratio() {
        let e = TernaryExpansion::from_ratio(1, 3, 48).unwrap();
        assert!(e.is_exact());
        assert_eq!(e.digits()[0], 1);
        assert_eq!(e.cantor_value().value, 0.5);
    }

    #[test]
    fn double_expansions_agree() {
        // Terminating and specific deeper evaluations must give the same G.
        for (num, den, expect) in [(1u64, 3u64, 0.5), (2, 3, 0.5), (1, 9, 0.25)] {
            let term = TernaryExpansion::from_ratio(num, den, 48).unwrap();
            assert!((term.cantor_value().value - expect).abs() <= 2f64.powi(-47));
            // The f64 image sits a hair off the rational; its value must agree
            // within the Hölder displacement of one ulp, far below 1e-9.
            let f = cfg().cantor_eval(num as f64 / den as f64);
            assert!((f.value - expect).abs() <= 1e-9);
        }
    }

    #[test]
    fn scaled_endpoints_and_midpoint() {
        let c = cfg();
        assert_eq!(c.scaled_eval(0.0).value, 0.0);
        let hi = c.scaled_eval(std::f64::consts::TAU);
        assert!((hi.value - 1.0).abs() <= hi.error_radius);
        let mid = c.scaled_eval(std::f64::consts::PI);
        assert!((mid.value - 0.5).abs() <= 2f64.powi(-48));
    }

    #[test]
    fn symmetry_on_dyadic_samples() {
        let c = cfg();
        let mut rng = SplitMix64::new(9);
        for _ in 0..10_000 {
            let k = rng.next_u64() >> 14; // 50-bit dyadic numerator
            let x = k as f64 / (1u64 << 50) as f64;
            let gx = c.cantor_eval(x).value;
            let gy = c.cantor_eval(1.0 - x).value;
            assert!(
                (gx + gy - 1.0).abs() <= 2f64.powi(-47),
                "symmetry violated at x = {x:e}"
            );
        }
    }

    #[test]
    fn monotone_on_random_pairs() {
        let c = cfg();
        let mut rng = SplitMix64::new(5);
        for _ in 0..10_000 {
            let mut a = rng.next_f64();
            let mut b = rng.next_f64();
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            assert!(c.cantor_eval(a).value <= c.cantor_eval(b).value);
        }
    }

    #[test]
    fn third_scaling_identity() {
        let c = cfg();
        let mut rng = SplitMix64::new(6);
        for _ in 0..5_000 {
            // y dyadic with y <= 1/4, so both y and x = 3y are exact and
            // x/3 reproduces y without rounding.
            let y = (rng.next_u64() >> 16) as f64 / (1u64 << 50) as f64;
            let x = 3.0 * y;
            let lhs = c.cantor_eval(x / 3.0).value;
            let rhs = c.cantor_eval(x).value / 2.0;
            assert!((lhs - rhs).abs() <= 2.0 * 2f64.powi(-48));
        }
    }

    #[test]
    fn plateau_is_flat() {
        let c = cfg();
        let mut rng = SplitMix64::new(7);
        let mut last = None;
        for _ in 0..1_000 {
            let u = rng.uniform(0.3334, 0.6666);
            let v = c.cantor_eval(u).value;
            assert_eq!(v, 0.5);
            last = Some(v);
        }
        assert_eq!(last, Some(0.5));
    }

    #[test]
    fn integral_endpoints() {
        let c = cfg();
        assert_eq!(c.cantor_integral(0.0).value, 0.0);
        let full = c.cantor_integral(1.0);
        assert!((full.value - 0.5).abs() <= 3f64.powi(-32));
    }

    #[test]
    fn integral_scaled_at_tau_is_pi() {
        let c = cfg();
        let v = c.integral_scaled(std::f64::consts::TAU);
        assert!((v.value - PI).abs() <= TAU * 3f64.powi(-32));
    }

    #[test]
    fn integral_dominates_parabola() {
        let c = cfg();
        let mut rng = SplitMix64::new(8);
        for _ in 0..10_000 {
            let x = rng.uniform(0.0, TAU);
            let ig = c.integral_scaled(x).value;
            assert!(ig >= x * x / (4.0 * PI) - 1e-9, "bound violated at {x}");
        }
    }

    #[test]
    fn cantor_sum_minimum_at_endpoints() {
        let c = cfg();
        assert_eq!(c.cantor_sum_eval(0.0).value, PI);
        let hi = c.cantor_sum_eval(TAU);
        assert!((hi.value - PI).abs() <= 1e-6);
        let mut min = f64::INFINITY;
        for i in 0..10_000 {
            let x = i as f64 * TAU / 9_999.0;
            min = min.min(c.cantor_sum_eval(x).value);
        }
        assert!(min >= PI - 1e-6);
    }

    #[test]
    fn combined_profile_floor() {
        let p = ProfileConfig::geometric_half(40).unwrap();
        let c = cfg();
        let at0 = combined_eval(0.0, &p, &c);
        assert!((at0.value - (p.l() + PI)).abs() <= 1e-12);
        let mut min = f64::INFINITY;
        for i in 0..10_000 {
            let x = i as f64 * TAU / 9_999.0;
            min = min.min(combined_eval(x, &p, &c).value);
        }
        assert!(min > PI);
    }

    #[test]
    fn combined_certificate_holds() {
        let p = ProfileConfig::geometric_half(40).unwrap();
        let c = cfg();
        let ct = combined_semiconvexity_constant(&p);
        assert!(crate::profile::midpoint_convexity_certificate(
            |x| combined_eval(x, &p, &c),
            ct,
            10_000,
            42
        ));
    }

    #[test]
    fn construction_intervals_shape() {
        let one = CurvatureFailureSet::cantor_intervals(1).unwrap();
        assert_eq!(one.intervals().len(), 2);
        let (a0, b0) = one.intervals()[0];
        let (a1, b1) = one.intervals()[1];
        assert!((a0 - 0.0).abs() < 1e-12 && (b0 - TAU / 3.0).abs() < 1e-12);
        assert!((a1 - 2.0 * TAU / 3.0).abs() < 1e-12 && (b1 - TAU).abs() < 1e-12);

        let two = CurvatureFailureSet::cantor_intervals(2).unwrap();
        assert_eq!(two.intervals().len(), 4);
        for &(a, b) in two.intervals() {
            assert!((b - a - TAU / 9.0).abs() < 1e-12);
        }
        for d in [3u32, 8, 12, 16] {
            let s = CurvatureFailureSet::cantor_intervals(d).unwrap();
            assert_eq!(s.intervals().len(), 1usize << d);
        }
    }

    #[test]
    fn box_dimension_of_cantor_intervals() {
        let s = CurvatureFailureSet::cantor_intervals(12).unwrap();
        let dims: Vec<u32> = (4..=12).collect();
        let dim = box_counting_dimension(&s, &dims).unwrap();
        assert!((dim - 2f64.log2() / 3f64.log2()).abs() <= 0.01, "dim = {dim}");
    }

    #[test]
    fn box_dimension_controls() {
        let full = CurvatureFailureSet::from_intervals(12, vec![(0.0, TAU)]);
        let dims: Vec<u32> = (4..=12).collect();
        let d1 = box_counting_dimension(&full, &dims).unwrap();
        assert!((d1 - 1.0).abs() <= 0.01);

        let point = CurvatureFailureSet::from_intervals(12, vec![(1.0, 1.0)]);
        let d0 = box_counting_dimension(&point, &dims).unwrap();
        assert!(d0.abs() <= 0.01);
    }

    #[test]
    fn box_dimension_needs_three_scales() {
        let s = CurvatureFailureSet::cantor_intervals(6).unwrap();
        match box_counting_dimension(&s, &[4, 5]) {
            Err(Error::InsufficientScales { got: 2 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn expansion_reconstruction_is_close() {
        let mut rng = SplitMix64::new(10);
        for _ in 0..2_000 {
            let x = rng.next_f64();
            let e = TernaryExpansion::from_f64(x, 48);
            assert!((e.reconstruct() - x).abs() <= 3f64.powi(-48) + 1e-15);
        }
    }
}
