//! Exact enumeration of the rational angles in `[0, 2π]` and certified order
//! queries against floating-point arguments.
//!
//! Rationals are kept as reduced integer pairs and compared exactly. A
//! comparison against an `f64` argument `x` treats `x` as the centre of an
//! enclosure of total width 2⁻⁶⁰: if the rational falls inside that window
//! without being exactly equal, the query fails with
//! [`Error::AmbiguousComparison`] instead of guessing. Exact equality is
//! decidable (the jump convention is upper semi-continuous, so the term at
//! `q_n = x` counts as `≤`).

use std::cmp::Ordering;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Integer, Signed};

use crate::error::{Error, Result};

/// First 40 fractional decimal digits of 2π, as an integer scaled by 10⁴⁰.
/// `TAU_LO / 10^40 < 2π < (TAU_LO + 1) / 10^40`.
const TAU_LO_DIGITS: &str = "62831853071795864769252867665590057683943";
const TAU_SCALE_POW10: u32 = 40;

/// Largest denominator accepted for a rational angle; keeps the exact
/// comparison arithmetic inside `u128`.
pub const MAX_DENOMINATOR: u64 = 1 << 20;

/// Enumerations longer than this are rejected (memory policy).
pub const MAX_ENUMERATION: usize = 10_000_000;

/// Half-width of the certified enclosure (total width 2⁻⁶⁰).
pub const ENCLOSURE_RADIUS: f64 = 1.0 / (1u128 << 61) as f64;

/// Fast-path window: an `f64` farther than this from the rounded rational is
/// certainly outside the enclosure, so no exact interval test is needed.
const FAST_WINDOW: f64 = 1e-13;

fn tau_lo_num() -> BigInt {
    TAU_LO_DIGITS.parse::<BigInt>().expect("valid digits")
}

fn tau_scale() -> BigInt {
    BigInt::from(10u32).pow(TAU_SCALE_POW10)
}

/// Certified `floor(2π · d)`, or an error if the decimal bounds cannot
/// separate the floor (never observed for admissible denominators).
fn certified_floor_tau(d: u64) -> Result<u64> {
    let scale = tau_scale();
    let lo = (tau_lo_num() * d).div_floor(&scale);
    let hi = ((tau_lo_num() + 1) * d).div_floor(&scale);
    if lo != hi {
        return Err(Error::InvalidData(format!(
            "cannot certify floor(2\u{3c0}\u{b7}{d})"
        )));
    }
    u64::try_from(lo).map_err(|_| Error::InvalidData("floor(2\u{3c0}d) out of range".into()))
}

/// A rational angle `numerator / denominator` in `[0, 2π]`, always reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RationalAngle {
    numerator: u64,
    denominator: u64,
}

impl RationalAngle {
    pub fn new(numerator: u64, denominator: u64) -> Result<Self> {
        if denominator == 0 || denominator > MAX_DENOMINATOR {
            return Err(Error::InvalidConfig(format!(
                "denominator {denominator} outside [1, {MAX_DENOMINATOR}]"
            )));
        }
        let g = numerator.gcd(&denominator);
        let (numerator, denominator) = (numerator / g, denominator / g);
        // Certify numerator/denominator <= 2π using the decimal bounds.
        let lhs = BigInt::from(numerator) * tau_scale();
        let lo = tau_lo_num() * denominator;
        let hi = (tau_lo_num() + 1) * denominator;
        if lhs > hi {
            return Err(Error::InvalidConfig(format!(
                "{numerator}/{denominator} exceeds 2\u{3c0}"
            )));
        }
        if lhs > lo {
            return Err(Error::InvalidConfig(format!(
                "cannot certify {numerator}/{denominator} <= 2\u{3c0}"
            )));
        }
        Ok(Self {
            numerator,
            denominator,
        })
    }

    /// Only called with `p <= floor(2π·d)` and `gcd(p, d) = 1`.
    fn new_unchecked(numerator: u64, denominator: u64) -> Self {
        Self {
            numerator,
            denominator,
        }
    }

    pub fn numerator(&self) -> u64 {
        self.numerator
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    pub fn as_f64(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }

    /// Exact order against another rational (u128 cross-multiplication).
    pub fn cmp_rational(&self, other: &RationalAngle) -> Ordering {
        let lhs = self.numerator as u128 * other.denominator as u128;
        let rhs = other.numerator as u128 * self.denominator as u128;
        lhs.cmp(&rhs)
    }

    /// Exact order of `numerator/denominator` against the dyadic value of `x`.
    ///
    /// `x` must be finite; the domain of interest is `[0, 2π]` but any
    /// `x < 10⁹` is handled exactly.
    fn exact_cmp_f64(&self, x: f64) -> Ordering {
        if x < 0.0 {
            return Ordering::Greater;
        }
        if x == 0.0 {
            return if self.numerator == 0 {
                Ordering::Equal
            } else {
                Ordering::Greater
            };
        }
        if self.numerator == 0 {
            return Ordering::Less; // 0 < x
        }
        if x >= 1e9 {
            return Ordering::Less; // q <= 2π < x
        }
        let bits = x.to_bits();
        let raw_exp = ((bits >> 52) & 0x7ff) as i32;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, exp) = if raw_exp == 0 {
            (frac, -1074i32)
        } else {
            (frac | (1u64 << 52), raw_exp - 1075)
        };
        // x = mant · 2^exp with 0 < x < 2^30, so exp <= -22 always.
        let shift = (-exp) as u32;
        if shift >= 74 {
            // p·2^shift >= 2^74 > 2^73 > mant·d.
            return Ordering::Greater;
        }
        let lhs = (self.numerator as u128) << shift;
        let rhs = mant as u128 * self.denominator as u128;
        lhs.cmp(&rhs)
    }

    /// Order against `x` with a certified enclosure: returns the exact order,
    /// `Equal` on exact dyadic hits, and `AmbiguousComparison` when `x` is
    /// within 2⁻⁶¹ of the rational without equalling it.
    pub fn certified_cmp(&self, x: f64) -> Result<Ordering> {
        if !x.is_finite() {
            return Err(Error::InvalidConfig(format!("non-finite argument {x}")));
        }
        let ord = self.exact_cmp_f64(x);
        if ord == Ordering::Equal {
            return Ok(Ordering::Equal);
        }
        if (x - self.as_f64()).abs() > FAST_WINDOW {
            return Ok(ord);
        }
        // Cold path: exact interval test in big-rational arithmetic.
        let q = BigRational::new(self.numerator.into(), self.denominator.into());
        let xf = BigRational::from_float(x).expect("finite");
        let window = BigRational::new(1.into(), BigInt::from(1u32) << 61);
        if (q - xf).abs() <= window {
            return Err(Error::AmbiguousComparison {
                value: x,
                numerator: self.numerator,
                denominator: self.denominator,
            });
        }
        Ok(ord)
    }
}

impl std::fmt::Display for RationalAngle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

/// Deterministic enumeration order of `Q ∩ [0, 2π]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnumerationScheme {
    /// Denominators ascending; for each denominator, coprime numerators
    /// ascending. Index 0 is `0/1`.
    DenominatorMajor,
}

/// A cached prefix of an enumeration of the rationals in `[0, 2π]`.
#[derive(Debug, Clone)]
pub struct Enumeration {
    scheme: EnumerationScheme,
    angles: Vec<RationalAngle>,
}

impl Enumeration {
    pub fn denominator_major(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidConfig("enumeration count must be >= 1".into()));
        }
        if count > MAX_ENUMERATION {
            return Err(Error::InvalidConfig(format!(
                "enumeration of {count} entries exceeds the {MAX_ENUMERATION} limit"
            )));
        }
        let mut angles = Vec::with_capacity(count);
        let mut d: u64 = 0;
        'outer: loop {
            d += 1;
            if d > MAX_DENOMINATOR {
                return Err(Error::InvalidConfig(
                    "enumeration exhausted the denominator bound".into(),
                ));
            }
            let p_max = certified_floor_tau(d)?;
            for p in 0..=p_max {
                if p.gcd(&d) == 1 || (p == 0 && d == 1) {
                    angles.push(RationalAngle::new_unchecked(p, d));
                    if angles.len() == count {
                        break 'outer;
                    }
                }
            }
        }
        Ok(Self {
            scheme: EnumerationScheme::DenominatorMajor,
            angles,
        })
    }

    pub fn scheme(&self) -> EnumerationScheme {
        self.scheme
    }

    pub fn angles(&self) -> &[RationalAngle] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn get(&self, n: usize) -> Option<RationalAngle> {
        self.angles.get(n).copied()
    }

    /// `|{n < count : q_n <= x}|` with certified comparisons.
    pub fn index_set_size(&self, x: f64, count: usize) -> Result<usize> {
        if count == 0 || count > self.angles.len() {
            return Err(Error::InvalidConfig(format!(
                "count {count} outside [1, {}]",
                self.angles.len()
            )));
        }
        let mut size = 0;
        for q in &self.angles[..count] {
            match q.certified_cmp(x)? {
                Ordering::Less | Ordering::Equal => size += 1,
                Ordering::Greater => {}
            }
        }
        Ok(size)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;
    use std::f64::consts::TAU;

    fn rat(p: u64, d: u64) -> RationalAngle {
        RationalAngle::new(p, d).unwrap()
    }

    #[test]
    fn enumerate_one_starts_at_zero() {
        let e = Enumeration::denominator_major(1).unwrap();
        assert_eq!(e.angles(), &[rat(0, 1)]);
    }

    #[test]
    fn enumerate_first_eight() {
        let e = Enumeration::denominator_major(8).unwrap();
        let expect: Vec<_> = [(0, 1), (1, 1), (2, 1), (3, 1), (4, 1), (5, 1), (6, 1), (1, 2)]
            .iter()
            .map(|&(p, d)| rat(p, d))
            .collect();
        assert_eq!(e.angles(), expect.as_slice());
    }

    #[test]
    fn enumerate_twelve_continues_with_halves() {
        let e = Enumeration::denominator_major(12).unwrap();
        let tail: Vec<_> = e.angles()[8..].to_vec();
        let expect: Vec<_> = [(3, 2), (5, 2), (7, 2), (9, 2)]
            .iter()
            .map(|&(p, d)| rat(p, d))
            .collect();
        assert_eq!(tail, expect);
    }

    #[test]
    fn enumeration_is_injective_over_ten_thousand() {
        let e = Enumeration::denominator_major(10_000).unwrap();
        let set: HashSet<_> = e
            .angles()
            .iter()
            .map(|q| (q.numerator(), q.denominator()))
            .collect();
        assert_eq!(set.len(), e.len());
    }

    #[test]
    fn small_denominators_all_appear_in_prefix() {
        // Every rational p/q with q <= 20 appears within the first
        // count(q <= 20) indices of the enumeration.
        let mut expected = Vec::new();
        for d in 1u64..=20 {
            let p_max = certified_floor_tau(d).unwrap();
            for p in 0..=p_max {
                if p.gcd(&d) == 1 || (p == 0 && d == 1) {
                    expected.push((p, d));
                }
            }
        }
        let e = Enumeration::denominator_major(expected.len()).unwrap();
        let have: HashSet<_> = e
            .angles()
            .iter()
            .map(|q| (q.numerator(), q.denominator()))
            .collect();
        for pd in expected {
            assert!(have.contains(&pd), "{pd:?} missing from prefix");
        }
    }

    #[test]
    fn index_set_size_examples() {
        let e = Enumeration::denominator_major(8).unwrap();
        assert_eq!(e.index_set_size(0.0, 8).unwrap(), 1);
        assert_eq!(e.index_set_size(TAU, 8).unwrap(), 8);
        // First eight rationals are 0,1,2,3,4,5,6,1/2; three are <= 1.5.
        assert_eq!(e.index_set_size(1.5, 8).unwrap(), 3);
    }

    #[test]
    fn index_set_size_full_prefix_is_count() {
        for k in [1usize, 7, 40, 200] {
            let e = Enumeration::denominator_major(k).unwrap();
            assert_eq!(e.index_set_size(TAU, k).unwrap(), k);
        }
    }

    #[test]
    fn ambiguous_near_rational_errors() {
        let q = rat(1, 3);
        let x = 1.0 / 3.0; // not exactly 1/3 in binary
        match q.certified_cmp(x) {
            Err(Error::AmbiguousComparison { .. }) => {}
            other => panic!("expected ambiguity, got {other:?}"),
        }
        // One ulp away from the rounded third is already outside the window.
        assert!(q.certified_cmp(x.next_up().next_up()).is_ok());
    }

    #[test]
    fn exact_hits_are_decidable() {
        assert_eq!(rat(1, 2).certified_cmp(0.5).unwrap(), Ordering::Equal);
        assert_eq!(rat(0, 1).certified_cmp(0.0).unwrap(), Ordering::Equal);
        assert_eq!(rat(3, 1).certified_cmp(3.0).unwrap(), Ordering::Equal);
    }

    #[test]
    fn exact_cmp_agrees_with_rational_arithmetic() {
        let mut rng = crate::rng::SplitMix64::new(42);
        let e = Enumeration::denominator_major(500).unwrap();
        for _ in 0..20_000 {
            let x = rng.uniform(0.0, TAU);
            let q = e.get(rng.next_index(e.len())).unwrap();
            let got = q.exact_cmp_f64(x);
            let want = BigRational::new(q.numerator().into(), q.denominator().into())
                .cmp(&BigRational::from_float(x).unwrap());
            assert_eq!(got, want, "q = {q}, x = {x:e}");
        }
    }

    #[test]
    fn rejects_rationals_beyond_tau() {
        assert!(RationalAngle::new(7, 1).is_err());
        assert!(RationalAngle::new(13, 2).is_err());
        // 44/7 = 6.2857… > 2π; 43/7 = 6.1428… is admissible.
        assert!(RationalAngle::new(44, 7).is_err());
        assert!(RationalAngle::new(43, 7).is_ok());
    }

    #[test]
    fn memory_policy_rejects_oversized_enumerations() {
        assert!(Enumeration::denominator_major(MAX_ENUMERATION + 1).is_err());
    }
}
