//! The radial profile `S = I + P` on `[0, 2π]`.
//!
//! `f` is an increasing step function with a jump of weight `m_n` at the
//! `n`-th enumerated rational angle, `I(x) = ∫₀ˣ f` its convex integral, and
//! `P` a cubic chosen so that `S = I + P` closes up (`S(0) = S(2π) = L`) with
//! a prescribed derivative mismatch at the seam. Every evaluation carries a
//! rigorous truncation-error radius.

use std::cmp::Ordering;
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::rational::{Enumeration, RationalAngle};
use crate::rng::SplitMix64;

/// A value together with a rigorous bound `|value − true| ≤ error_radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileValue {
    pub value: f64,
    pub error_radius: f64,
}

impl ProfileValue {
    pub fn new(value: f64, error_radius: f64) -> Self {
        Self {
            value,
            error_radius,
        }
    }

    pub fn exact(value: f64) -> Self {
        Self {
            value,
            error_radius: 0.0,
        }
    }
}

/// Summable jump weights with analytic tail bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightRule {
    /// `term(n) = (1 − ratio)·ratioⁿ`, so the total is exactly 1 and
    /// `tail(K) = ratio^K`. The default ratio 1/2 gives `m_n = 2^-(n+1)`.
    Geometric { ratio: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightSequence {
    rule: WeightRule,
}

impl WeightSequence {
    pub fn geometric(ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "geometric ratio {ratio} outside (0, 1)"
            )));
        }
        Ok(Self {
            rule: WeightRule::Geometric { ratio },
        })
    }

    pub fn rule(&self) -> WeightRule {
        self.rule
    }

    pub fn term(&self, n: usize) -> f64 {
        match self.rule {
            WeightRule::Geometric { ratio } => (1.0 - ratio) * ratio.powi(n as i32),
        }
    }

    /// Total mass `V = Σ m_n`.
    pub fn total(&self) -> f64 {
        match self.rule {
            WeightRule::Geometric { .. } => 1.0,
        }
    }

    /// Upper bound on `Σ_{n ≥ k} m_n` (exact for geometric weights).
    pub fn tail(&self, k: usize) -> f64 {
        match self.rule {
            WeightRule::Geometric { ratio } => ratio.powi(k as i32),
        }
    }
}

/// The closure cubic, evaluated in the normalized variable `u = x / 2π`.
///
/// Coefficients are adjusted by at most a few ulp so that the evaluated
/// boundary values hit `P(0) = L`, `P'(0) = 0`, and `P'(2π) = −V` exactly in
/// floating point (`P(2π)` lands within a few ulp of zero).
#[derive(Debug, Clone, Copy)]
struct Cubic {
    /// `P(x) = b3·u³ + b2·u² + l`.
    b3: f64,
    b2: f64,
    l: f64,
    /// `P'(x) = u·(d1·u + d2) / 2π` with `d1 + d2 == −2π·V` exactly.
    d1: f64,
    d2: f64,
}

impl Cubic {
    fn new(l: f64, v: f64) -> Self {
        let b3 = 2.0 * (l - PI * v);
        let b2 = 2.0 * v * PI - 3.0 * l;
        let d1 = 3.0 * b3;
        let neg_tv = -(TAU * v);
        let mut d2 = neg_tv - d1;
        for _ in 0..8 {
            let s = d1 + d2;
            if s == neg_tv {
                break;
            }
            d2 = if s > neg_tv { d2.next_down() } else { d2.next_up() };
        }
        Self { b3, b2, l, d1, d2 }
    }

    fn eval(&self, x: f64) -> f64 {
        let u = x / TAU;
        ((self.b3 * u + self.b2) * u) * u + self.l
    }

    fn derivative(&self, x: f64) -> f64 {
        let u = x / TAU;
        u * (self.d1 * u + self.d2) / TAU
    }

    fn second_derivative(&self, x: f64) -> f64 {
        let u = x / TAU;
        (6.0 * self.b3 * u + 2.0 * self.b2) / (TAU * TAU)
    }
}

/// Grid used to quantize the smooth part inside one-sided derivatives, so
/// that both one-sided values share an exactly representable base and their
/// difference equals the jump weight bit for bit.
const DERIVATIVE_GRID: f64 = (1u64 << 50) as f64;

fn quantize_slope(p: f64) -> f64 {
    (p * DERIVATIVE_GRID).round() / DERIVATIVE_GRID
}

/// One entry of the singularity table: an enumerated rational together with
/// its derivative jump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularityEntry {
    pub angle: RationalAngle,
    pub jump: f64,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneSidedDerivatives {
    pub left: ProfileValue,
    pub right: ProfileValue,
}

/// Immutable profile configuration: weights, enumeration prefix, truncation
/// depth `K`, the frozen `L = I(2π)`, and the closure cubic.
#[derive(Debug, Clone)]
pub struct ProfileConfig {
    weights: WeightSequence,
    enumeration: Enumeration,
    k: usize,
    l: f64,
    cubic: Cubic,
    /// Enumerated angles rounded once to f64, in enumeration order.
    angles_f64: Vec<f64>,
}

/// Number of grid points used by the build-time positivity scan.
const POSITIVITY_GRID: usize = 10_000;

impl ProfileConfig {
    /// Builds a profile. Fails with [`Error::NonPositiveProfile`] when the
    /// scanned minimum of `S` minus all error terms is not positive.
    pub fn build(weights: WeightSequence, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidConfig(format!("truncation K = {k} < 2")));
        }
        let enumeration = Enumeration::denominator_major(k)?;
        let angles_f64: Vec<f64> = enumeration.angles().iter().map(|q| q.as_f64()).collect();

        // Frozen L = I(2π), computed with the same closed form used later.
        let l = closed_form_integral(&weights, &angles_f64, k, TAU);
        let cubic = Cubic::new(l, weights.total());
        let cfg = Self {
            weights,
            enumeration,
            k,
            l,
            cubic,
            angles_f64,
        };
        cfg.check_positive()?;
        Ok(cfg)
    }

    /// The configuration used throughout the tests and the CLI defaults:
    /// geometric weights with ratio 1/2 truncated at `K`.
    pub fn geometric_half(k: usize) -> Result<Self> {
        Self::build(WeightSequence::geometric(0.5)?, k)
    }

    pub fn weights(&self) -> &WeightSequence {
        &self.weights
    }

    pub fn enumeration(&self) -> &Enumeration {
        &self.enumeration
    }

    pub fn truncation(&self) -> usize {
        self.k
    }

    /// `L = I(2π)` frozen at build time.
    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.total()
    }

    fn tail(&self) -> f64 {
        self.weights.tail(self.k)
    }

    /// Classify every enumerated rational against `x`; returns the weight
    /// sums over strictly-smaller and exactly-equal angles.
    fn classify(&self, x: f64) -> Result<(f64, f64)> {
        let mut lt = 0.0;
        let mut eq = 0.0;
        for (n, q) in self.enumeration.angles().iter().enumerate() {
            match q.certified_cmp(x)? {
                Ordering::Less => lt += self.weights.term(n),
                Ordering::Equal => eq += self.weights.term(n),
                Ordering::Greater => {}
            }
        }
        Ok((lt, eq))
    }

    /// `f(x) = Σ_{q_n ≤ x} m_n` (upper semi-continuous: the term at
    /// `q_n = x` is included), with `error_radius = tail(K)`.
    pub fn jump_eval(&self, x: f64) -> Result<ProfileValue> {
        let (lt, eq) = self.classify(x)?;
        Ok(ProfileValue::new(lt + eq, self.tail()))
    }

    /// Closed-form `I(x) = Σ m_n · max(0, x − q_n)` with
    /// `error_radius = x·tail(K)`.
    pub fn integral_eval(&self, x: f64) -> ProfileValue {
        let value = closed_form_integral(&self.weights, &self.angles_f64, self.k, x);
        ProfileValue::new(value, x.abs() * self.tail())
    }

    /// The closure cubic `P`.
    pub fn cubic_eval(&self, x: f64) -> f64 {
        self.cubic.eval(x)
    }

    /// Exact formal derivative of the cubic.
    pub fn cubic_derivative(&self, x: f64) -> f64 {
        self.cubic.derivative(x)
    }

    pub fn cubic_second_derivative(&self, x: f64) -> f64 {
        self.cubic.second_derivative(x)
    }

    /// `S(x) = I(x) + P(x)`, error radius inherited from the integral.
    pub fn sum_eval(&self, x: f64) -> ProfileValue {
        let i = self.integral_eval(x);
        ProfileValue::new(i.value + self.cubic.eval(x), i.error_radius)
    }

    /// One-sided derivatives of `S` at `x`.
    ///
    /// The jump sums are exact dyadics for the default weights and the
    /// smooth part is rounded to a 2⁻⁵⁰ grid, so `right − left` equals the
    /// jump weight exactly whenever `x` hits an enumerated rational. The
    /// quantization is covered by the reported radius.
    pub fn one_sided_derivatives(&self, x: f64) -> Result<OneSidedDerivatives> {
        let (lt, eq) = self.classify(x)?;
        Ok(self.one_sided_from_sums(x, lt, eq))
    }

    /// One-sided derivatives of `S` at the `n`-th enumerated rational,
    /// decided by exact rational order (no enclosure involved).
    pub fn one_sided_at_index(&self, n: usize) -> Result<OneSidedDerivatives> {
        let q = self
            .enumeration
            .get(n)
            .ok_or_else(|| Error::InvalidConfig(format!("index {n} >= K = {}", self.k)))?;
        let mut lt = 0.0;
        let mut eq = 0.0;
        for (m, r) in self.enumeration.angles().iter().enumerate() {
            match r.cmp_rational(&q) {
                Ordering::Less => lt += self.weights.term(m),
                Ordering::Equal => eq += self.weights.term(m),
                Ordering::Greater => {}
            }
        }
        Ok(self.one_sided_from_sums(q.as_f64(), lt, eq))
    }

    fn one_sided_from_sums(&self, x: f64, lt: f64, eq: f64) -> OneSidedDerivatives {
        let slope = quantize_slope(self.cubic.derivative(x));
        let err = self.tail() + 1.0 / DERIVATIVE_GRID;
        OneSidedDerivatives {
            left: ProfileValue::new(lt + slope, err),
            right: ProfileValue::new((lt + eq) + slope, err),
        }
    }

    /// The `top_k` enumerated rationals sorted by descending derivative
    /// jump, ties broken by ascending enumeration index.
    pub fn singularity_table(&self, top_k: usize) -> Result<Vec<SingularityEntry>> {
        if top_k > self.k {
            return Err(Error::InvalidConfig(format!(
                "top_k = {top_k} exceeds K = {}",
                self.k
            )));
        }
        let mut entries: Vec<SingularityEntry> = (0..self.k)
            .map(|n| SingularityEntry {
                angle: self.enumeration.get(n).expect("cached"),
                jump: self.weights.term(n),
                index: n,
            })
            .collect();
        entries.sort_by(|a, b| {
            b.jump
                .partial_cmp(&a.jump)
                .unwrap_or(Ordering::Equal)
                .then(a.index.cmp(&b.index))
        });
        entries.truncate(top_k);
        Ok(entries)
    }

    /// Smallest `C ≥ 0` with `P'' + C ≥ 0` on `[0, 2π]`; since `P''` is
    /// affine the minimum sits at an endpoint. Adding `(C/2)x²` to `S` then
    /// yields a convex function (the integral part is already convex).
    pub fn semiconvexity_constant(&self) -> f64 {
        let a = self.cubic.second_derivative(0.0);
        let b = self.cubic.second_derivative(TAU);
        (-a.min(b)).max(0.0)
    }

    /// Build-time proof that `min S > 0`: a uniform scan combined with the
    /// Lipschitz bound `|S'| ≤ V + max|P'|` brackets the true minimum.
    fn check_positive(&self) -> Result<()> {
        let lip = self.total_mass() + self.max_abs_cubic_derivative();
        certify_positive_minimum(|x| self.sum_eval(x), lip, POSITIVITY_GRID).map(|_| ())
    }

    fn max_abs_cubic_derivative(&self) -> f64 {
        let mut m = self
            .cubic
            .derivative(0.0)
            .abs()
            .max(self.cubic.derivative(TAU).abs());
        // Interior extremum of the quadratic derivative, if any.
        let d1 = self.cubic.d1;
        let d2 = self.cubic.d2;
        if d1 != 0.0 {
            let u_star = -d2 / (2.0 * d1);
            if u_star > 0.0 && u_star < 1.0 {
                m = m.max(self.cubic.derivative(u_star * TAU).abs());
            }
        }
        m
    }
}

/// Certified lower bound for `min_{[0, 2π]} eval` from a uniform grid scan
/// plus a Lipschitz bracket; errors when the bound is not positive.
pub fn certify_positive_minimum<F>(eval: F, lipschitz: f64, grid: usize) -> Result<f64>
where
    F: Fn(f64) -> ProfileValue,
{
    let step = TAU / grid as f64;
    let mut min_value = f64::INFINITY;
    let mut min_at = 0.0;
    for i in 0..=grid {
        let x = (i as f64 * step).min(TAU);
        let s = eval(x);
        let lower = s.value - s.error_radius;
        if lower < min_value {
            min_value = lower;
            min_at = x;
        }
    }
    let certified = min_value - lipschitz * step / 2.0;
    if certified <= 0.0 {
        return Err(Error::NonPositiveProfile {
            min_value: certified,
            at: min_at,
        });
    }
    Ok(certified)
}

fn closed_form_integral(weights: &WeightSequence, angles_f64: &[f64], k: usize, x: f64) -> f64 {
    let mut acc = 0.0;
    for (n, &q) in angles_f64.iter().enumerate().take(k) {
        let d = x - q;
        if d > 0.0 {
            acc += weights.term(n) * d;
        }
    }
    acc
}

/// Randomized midpoint-convexity certificate for `x ↦ f(x) + (c/2)x²` on
/// `[0, 2π]`: draws `samples` endpoint pairs and checks the midpoint
/// inequality within four times the propagated error radius.
pub fn midpoint_convexity_certificate<F>(f: F, c: f64, samples: usize, seed: u64) -> bool
where
    F: Fn(f64) -> ProfileValue,
{
    let mut rng = SplitMix64::new(seed);
    for _ in 0..samples {
        let a = rng.uniform(0.0, TAU);
        let b = rng.uniform(0.0, TAU);
        let mid = 0.5 * (a + b);
        let fa = f(a);
        let fb = f(b);
        let fm = f(mid);
        let g = |x: f64, v: f64| v + 0.5 * c * x * x;
        let lhs = g(mid, fm.value);
        let rhs = 0.5 * (g(a, fa.value) + g(b, fb.value));
        let tol = 4.0 * (fm.error_radius + 0.5 * (fa.error_radius + fb.error_radius));
        if lhs > rhs + tol {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ProfileConfig {
        ProfileConfig::geometric_half(40).unwrap()
    }

    #[test]
    fn geometric_weights_default() {
        let w = WeightSequence::geometric(0.5).unwrap();
        assert_eq!(w.term(0), 0.5);
        assert_eq!(w.term(3), 0.0625);
        assert_eq!(w.total(), 1.0);
        assert_eq!(w.tail(40), 2f64.powi(-40));
    }

    #[test]
    fn jump_at_zero_is_first_weight() {
        let c = cfg();
        let v = c.jump_eval(0.0).unwrap();
        assert_eq!(v.value, 0.5);
        assert_eq!(v.error_radius, 2f64.powi(-40));
    }

    #[test]
    fn jump_at_tau_encloses_total_mass() {
        let c = cfg();
        let v = c.jump_eval(TAU).unwrap();
        // value = V − tail(K) exactly; the enclosure contains V.
        assert_eq!(v.value, 1.0 - 2f64.powi(-40));
        assert!((c.total_mass() - v.value).abs() <= v.error_radius);
    }

    #[test]
    fn jump_is_monotone() {
        let c = cfg();
        let mut rng = SplitMix64::new(11);
        for _ in 0..10_000 {
            let mut a = rng.uniform(0.0, TAU);
            let mut b = rng.uniform(0.0, TAU);
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            let fa = c.jump_eval(a).unwrap().value;
            let fb = c.jump_eval(b).unwrap().value;
            assert!(fa <= fb, "f({a}) = {fa} > f({b}) = {fb}");
        }
    }

    #[test]
    fn integral_at_zero_is_exact_zero() {
        let c = cfg();
        let v = c.integral_eval(0.0);
        assert_eq!(v.value, 0.0);
        assert_eq!(v.error_radius, 0.0);
    }

    #[test]
    fn integral_midpoint_convexity() {
        let c = cfg();
        let mut rng = SplitMix64::new(3);
        for _ in 0..5_000 {
            let a = rng.uniform(0.0, TAU);
            let b = rng.uniform(0.0, TAU);
            let m = 0.5 * (a + b);
            let im = c.integral_eval(m);
            let ia = c.integral_eval(a);
            let ib = c.integral_eval(b);
            let slack = 2.0 * (im.error_radius + ia.error_radius + ib.error_radius) + 1e-12;
            assert!(im.value <= 0.5 * (ia.value + ib.value) + slack);
        }
    }

    #[test]
    fn cubic_boundary_values() {
        let c = cfg();
        let l = c.l();
        let v = c.total_mass();
        assert_eq!(c.cubic_eval(0.0), l);
        assert_eq!(c.cubic_derivative(0.0), 0.0);
        assert!(c.cubic_eval(TAU).abs() <= 1e-12);
        assert!((c.cubic_derivative(TAU) + v).abs() <= 1e-12);
    }

    #[test]
    fn cubic_second_derivative_is_affine() {
        let c = cfg();
        let p0 = c.cubic_second_derivative(0.0);
        let p1 = c.cubic_second_derivative(TAU);
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            let x = t * TAU;
            let expect = p0 + (p1 - p0) * t;
            assert!((c.cubic_second_derivative(x) - expect).abs() <= 1e-12);
        }
    }

    #[test]
    fn sum_boundary_values() {
        let c = cfg();
        let s0 = c.sum_eval(0.0);
        assert_eq!(s0.value, c.l());
        assert_eq!(s0.error_radius, 0.0);
        let s1 = c.sum_eval(TAU);
        assert!((s1.value - c.l()).abs() <= s1.error_radius + 1e-12);
    }

    #[test]
    fn sum_is_positive_on_dense_grid() {
        let c = cfg();
        let mut min = f64::INFINITY;
        for i in 0..10_000 {
            let x = i as f64 * TAU / 9_999.0;
            min = min.min(c.sum_eval(x).value);
        }
        assert!(min > 0.0);
    }

    #[test]
    fn one_sided_jump_at_seam() {
        let c = cfg();
        let os = c.one_sided_at_index(0).unwrap();
        assert_eq!(os.right.value - os.left.value, 0.5);
        assert_eq!(os.right.value, 0.5); // P'(0) = 0 exactly
    }

    #[test]
    fn one_sided_jumps_match_weights_exactly() {
        let c = cfg();
        for n in 0..c.truncation() {
            let os = c.one_sided_at_index(n).unwrap();
            assert_eq!(
                os.right.value - os.left.value,
                c.weights().term(n),
                "jump mismatch at index {n}"
            );
        }
    }

    #[test]
    fn one_sided_difference_vanishes_at_irrationals() {
        let c = cfg();
        let x = 1.0 / std::f64::consts::SQRT_2;
        let os = c.one_sided_derivatives(x).unwrap();
        assert_eq!(os.right.value - os.left.value, 0.0);
        assert!(os.left.error_radius <= 2.0 * 2f64.powi(-40));
    }

    #[test]
    fn singularity_table_ordering() {
        let c = cfg();
        let top1 = c.singularity_table(1).unwrap();
        assert_eq!(top1[0].index, 0);
        assert_eq!(top1[0].jump, 0.5);
        assert_eq!(top1[0].angle.numerator(), 0);

        let top18 = c.singularity_table(18).unwrap();
        let idx: Vec<_> = top18.iter().map(|e| e.index).collect();
        assert_eq!(idx, (0..18).collect::<Vec<_>>());

        let all = c.singularity_table(c.truncation()).unwrap();
        let total: f64 = all.iter().map(|e| e.jump).sum();
        assert_eq!(total, c.total_mass() - c.weights().tail(c.truncation()));
    }

    #[test]
    fn singularity_table_rejects_oversized_request() {
        let c = cfg();
        assert!(c.singularity_table(c.truncation() + 1).is_err());
    }

    #[test]
    fn semiconvexity_constant_certifies_convexity() {
        let c = cfg();
        let cst = c.semiconvexity_constant();
        assert!(cst >= 0.0);
        assert!(midpoint_convexity_certificate(
            |x| c.sum_eval(x),
            cst,
            10_000,
            42
        ));
    }

    #[test]
    fn positivity_guard_rejects_dipping_profiles() {
        let dip = |x: f64| ProfileValue::exact(1.0 - x); // negative past x = 1
        match certify_positive_minimum(dip, 1.0, 1000) {
            Err(Error::NonPositiveProfile { .. }) => {}
            other => panic!("expected NonPositiveProfile, got {other:?}"),
        }
        // The geometric family itself passes the guard.
        assert!(ProfileConfig::geometric_half(16).is_ok());
        assert!(ProfileConfig::build(WeightSequence::geometric(0.9).unwrap(), 60).is_ok());
    }

    #[test]
    fn truncation_below_two_rejected() {
        assert!(ProfileConfig::geometric_half(1).is_err());
    }
}
