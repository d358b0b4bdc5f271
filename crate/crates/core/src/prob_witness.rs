//! Witness in terms of the vacuum and single-photon probabilities.
//!
//! The boundary is the curve
//!
//! ```text
//! p0(r) = exp(-(e^{4r} - 1)(1 - tanh r)/4) / cosh r
//! p1(r) = (e^{4r} - 1) exp(-(e^{4r} - 1)(1 - tanh r)/4) / (4 cosh^3 r)
//! ```
//!
//! and a point `(p0, p1)` with `p1` above the curve at the same `p0` is QNG.
//! For distributions without three or more photons the witness converts to
//! a bound on the variance for `m <= 2`.

use libm::{cosh, exp, expm1};

use crate::error::{Error, Result};
use crate::roots::bisect;
use crate::witness::{MomentPair, Verdict, VerdictTag, BOUNDARY_BAND};

/// Upper end of the squeezing range searched when inverting the curve;
/// `p0(10)` underflows to zero.
pub const R_SEARCH_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbPoint {
    pub p0: f64,
    pub p1: f64,
}

impl ProbPoint {
    pub fn new(p0: f64, p1: f64) -> Result<Self> {
        let p = Self { p0, p1 };
        if !p.is_valid() {
            return Err(Error::invalid("p0, p1 must lie in [0, 1] with p0 + p1 <= 1"));
        }
        Ok(p)
    }

    pub fn is_valid(&self) -> bool {
        (0.0..=1.0).contains(&self.p0)
            && (0.0..=1.0).contains(&self.p1)
            && self.p0 + self.p1 <= 1.0 + 1e-12
    }
}

fn curve_parts(r: f64) -> (f64, f64) {
    let ch = cosh(r);
    let x = expm1(4.0 * r);
    // 1 - tanh r = 2 / (e^{2r} + 1)
    let damp = exp(-0.25 * x * 2.0 / (exp(2.0 * r) + 1.0));
    let p0 = damp / ch;
    let p1 = if x.is_finite() {
        x * damp / (4.0 * ch * ch * ch)
    } else {
        0.0
    };
    (p0, if p1.is_finite() { p1 } else { 0.0 })
}

/// Boundary point at squeezing `r`.
pub fn p0p1_curve(r: f64) -> Result<ProbPoint> {
    if !(r >= 0.0) {
        return Err(Error::invalid("squeezing parameter must be >= 0"));
    }
    if r.is_infinite() {
        return Ok(ProbPoint { p0: 0.0, p1: 0.0 });
    }
    let (p0, p1) = curve_parts(r);
    Ok(ProbPoint { p0, p1 })
}

/// Squeezing parameter at which the curve has vacuum probability `p0`.
/// `None` when `p0` is below what the curve reaches in double precision.
pub fn curve_r_for_p0(p0: f64) -> Option<f64> {
    if !(0.0..=1.0).contains(&p0) {
        return None;
    }
    if p0 == 1.0 {
        return Some(0.0);
    }
    if p0 <= curve_parts(R_SEARCH_MAX).0 {
        return None;
    }
    bisect(|r| curve_parts(r).0 - p0, 0.0, R_SEARCH_MAX, 1e-15).ok()
}

/// Classify `(p0, p1)`. The margin is `p1_curve(p0) - p1`, negative when the
/// point lies above the curve.
pub fn classify_probs(p: ProbPoint) -> Verdict {
    if !(p.p0.is_finite() && p.p1.is_finite()) || !p.is_valid() {
        return Verdict::invalid();
    }
    if p.p0 == 0.0 && p.p1 == 0.0 {
        return Verdict {
            tag: VerdictTag::Unwitnessed,
            margin: 0.0,
            nonphysical: false,
        };
    }
    let curve_p1 = match curve_r_for_p0(p.p0) {
        Some(r) => curve_parts(r).1,
        None => 0.0,
    };
    let margin = curve_p1 - p.p1;
    // Probabilities near the far end of the curve are tiny, so the
    // exclusion band is relative to the curve value.
    let qng = if curve_p1 == 0.0 && p.p0 < 1.0 {
        p.p1 > 0.0
    } else {
        margin < -BOUNDARY_BAND * curve_p1
    };
    Verdict {
        tag: if qng {
            VerdictTag::Qng
        } else {
            VerdictTag::Unwitnessed
        },
        margin,
        nonphysical: false,
    }
}

fn check_mean_range(m: f64) -> Result<()> {
    if !(0.0..=2.0).contains(&m) {
        return Err(Error::invalid("the converted witness needs 0 <= m <= 2"));
    }
    Ok(())
}

/// Vacuum probability where the line `p1 = 2 - m - 2 p0` meets the curve.
pub fn p0_star(m: f64) -> Result<f64> {
    check_mean_range(m)?;
    if m == 0.0 {
        return Ok(1.0);
    }
    let f = |r: f64| {
        let (p0, p1) = curve_parts(r);
        p1 - (2.0 - m - 2.0 * p0)
    };
    if f(R_SEARCH_MAX) >= 0.0 {
        return Ok(0.0);
    }
    let r = bisect(f, 0.0, R_SEARCH_MAX, 1e-12)?;
    Ok(curve_parts(r).0)
}

/// Moments of the curve under the assumption that there are never three
/// or more photons.
pub fn converted_curve(r: f64) -> Result<MomentPair> {
    let p = p0p1_curve(r)?;
    let p2 = 1.0 - p.p1 - p.p0;
    let m = p.p1 + 2.0 * p2;
    Ok(MomentPair::new(m, p.p1 + 4.0 * p2 - m * m))
}

/// Variance bound at mean `m`: any distribution with fewer than three
/// photons and `s2` below it is QNG.
pub fn s2_bound_from_prob(m: f64) -> Result<f64> {
    Ok(2.0 * p0_star(m)? - (m - 2.0) * (m - 1.0))
}

/// `(p0, p1)` of the distribution on `{0, 1, 2}` with the given moments.
pub fn probs_from_moments(p: MomentPair) -> Result<ProbPoint> {
    let p2 = 0.5 * (p.s2 + p.m * p.m - p.m);
    let p1 = p.m - 2.0 * p2;
    let p0 = 1.0 - p1 - p2;
    let tol = 1e-12;
    if p2 < -tol || p2 > 1.0 + tol {
        return Err(Error::invalid("moments are not those of a distribution on {0, 1, 2}"));
    }
    ProbPoint::new(p0.clamp(0.0, 1.0), p1.clamp(0.0, 1.0))
}

/// Classify `(m, s2)` against the converted bound; `m` must be at most 2.
pub fn classify_converted(p: MomentPair) -> Verdict {
    if !p.is_finite() {
        return Verdict::invalid();
    }
    let Ok(bound) = s2_bound_from_prob(p.m) else {
        return Verdict::invalid();
    };
    let margin = p.s2 - bound;
    Verdict {
        tag: if margin < -BOUNDARY_BAND {
            VerdictTag::Qng
        } else {
            VerdictTag::Unwitnessed
        },
        margin,
        nonphysical: p.is_nonphysical(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::witness::boundary_variance;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    // mpmath, 50 digits.
    const P0_03: f64 = 0.634_194_131_620_247;
    const P1_03: f64 = 0.336_634_169_418_576;

    #[test]
    fn curve_endpoints() {
        assert_eq!(p0p1_curve(0.0).unwrap(), ProbPoint { p0: 1.0, p1: 0.0 });
        let far = p0p1_curve(8.0).unwrap();
        assert!(far.p0 < 1e-15 && far.p1 < 1e-15);
        assert!(p0p1_curve(-0.1).is_err());
    }

    #[test]
    fn curve_reference() {
        let p = p0p1_curve(0.3).unwrap();
        // Written out without the expm1 / tanh rewrites.
        let r: f64 = 0.3;
        let e = (-(0.25) * ((4.0 * r).exp() - 1.0) * (1.0 - r.tanh())).exp();
        assert_relative_eq!(p.p0, e / r.cosh(), max_relative = 1e-13);
        assert_relative_eq!(p.p1, ((4.0 * r).exp() - 1.0) * e / (4.0 * r.cosh().powi(3)), max_relative = 1e-13);
        assert_relative_eq!(p.p0, P0_03, max_relative = 1e-11);
        assert_relative_eq!(p.p1, P1_03, max_relative = 1e-11);
    }

    #[test]
    fn curve_p0_decreasing() {
        let mut prev = 1.0 + 1e-12;
        for i in 0..=5000 {
            let p0 = p0p1_curve(i as f64 * 1e-3).unwrap().p0;
            assert!(p0 < prev || p0 == 0.0);
            prev = p0;
        }
    }

    #[test]
    fn classify_examples() {
        assert!(classify_probs(ProbPoint::new(0.5, 0.5).unwrap()).is_qng());
        let c = (-1.0f64).exp();
        assert_eq!(
            classify_probs(ProbPoint::new(c, c).unwrap()).tag,
            VerdictTag::Unwitnessed
        );
        let b = p0p1_curve(0.4).unwrap();
        let v = classify_probs(b);
        assert_eq!(v.tag, VerdictTag::Unwitnessed);
        assert!(v.margin.abs() < 1e-12);
        assert_eq!(
            classify_probs(ProbPoint { p0: 0.0, p1: 0.0 }).tag,
            VerdictTag::Unwitnessed
        );
        assert!(classify_probs(ProbPoint { p0: 0.0, p1: 0.3 }).is_qng());
        assert_eq!(
            classify_probs(ProbPoint { p0: 0.7, p1: 0.7 }).tag,
            VerdictTag::Invalid
        );
        assert!(ProbPoint::new(0.7, 0.7).is_err());
    }

    #[test]
    fn lossy_single_photon_always_qng() {
        for i in 1..100 {
            let eta = i as f64 / 100.0;
            assert!(classify_probs(ProbPoint::new(1.0 - eta, eta).unwrap()).is_qng());
        }
    }

    #[test]
    fn p0_star_values() {
        assert_eq!(p0_star(0.0).unwrap(), 1.0);
        let mid = p0_star(1.0).unwrap();
        assert!(mid > 0.0 && mid < 1.0);
        // The root lies on the line.
        let r = curve_r_for_p0(mid).unwrap();
        let c = p0p1_curve(r).unwrap();
        assert!((c.p1 - (1.0 - 2.0 * c.p0)).abs() < 1e-10);
        let mut prev = 1.0;
        for i in 1..=200 {
            let v = p0_star(i as f64 * 0.01).unwrap();
            assert!(v < prev);
            prev = v;
        }
        assert!(p0_star(2.1).is_err());
        assert!(p0_star(-0.1).is_err());
    }

    #[test]
    fn converted_curve_values() {
        assert_eq!(converted_curve(0.0).unwrap(), MomentPair::new(0.0, 0.0));
        assert_eq!(s2_bound_from_prob(0.0).unwrap(), 0.0);
        let b = s2_bound_from_prob(1.5).unwrap();
        assert!(b > 0.0 && b < 1.5);
    }

    #[test]
    fn bound_matches_converted_curve() {
        for i in 1..=80 {
            let r = i as f64 * 0.01;
            let c = converted_curve(r).unwrap();
            if c.m > 2.0 {
                break;
            }
            let b = s2_bound_from_prob(c.m).unwrap();
            assert!((b - c.s2).abs() < 1e-9, "r = {r}: {b} vs {}", c.s2);
        }
    }

    #[test]
    fn low_mean_agreement() {
        for i in 1..=200 {
            let r = i as f64 * 1e-3;
            let c = converted_curve(r).unwrap();
            if c.m > 0.05 {
                break;
            }
            let d = (c.s2 - boundary_variance(c.m).unwrap()).abs();
            assert!(d < 1e-3, "m = {}: {d}", c.m);
        }
    }

    #[test]
    fn converted_bound_relaxes_at_larger_mean() {
        // At larger means the converted bound admits more variance than the
        // moment boundary, so it certifies states the moment witness misses.
        for i in 0..=30 {
            let m = 0.5 + i as f64 * 0.05;
            let conv = s2_bound_from_prob(m).unwrap();
            let mom = boundary_variance(m).unwrap();
            assert!(conv < mom, "m = {m}: {conv} vs {mom}");
        }
    }

    #[test]
    fn probs_from_moments_roundtrip() {
        let p = probs_from_moments(MomentPair::new(1.0, 0.0)).unwrap();
        assert!((p.p0).abs() < 1e-15 && (p.p1 - 1.0).abs() < 1e-15);
        assert!(probs_from_moments(MomentPair::new(1.0, 5.0)).is_err());
    }

    proptest! {
        #[test]
        fn conversion_agrees_with_probability_witness(
            a in 0.0f64..1.0, b in 0.0f64..1.0
        ) {
            // Uniform point on the simplex {p0, p1, p2}.
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let (p0, p1, p2) = (lo, hi - lo, 1.0 - hi);
            let m = p1 + 2.0 * p2;
            let s2 = p1 + 4.0 * p2 - m * m;
            let via_moments = classify_converted(MomentPair::new(m, s2));
            let via_probs = classify_probs(ProbPoint::new(p0, p1).unwrap());
            prop_assume!(via_moments.margin.abs() > 1e-6 && via_probs.margin.abs() > 1e-6);
            prop_assert_eq!(via_moments.is_qng(), via_probs.is_qng());
        }
    }
}
