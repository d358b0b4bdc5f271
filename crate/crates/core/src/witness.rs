//! The non-Gaussianity boundary in its equivalent formulations.
//!
//! The boundary is the curve `(m_NG(r), s2_NG(r))` traced by displaced
//! squeezed vacua with optimal displacement:
//!
//! ```text
//! m_NG(r)  = e^{6r}/4 - 1/2 + e^{-2r}/4
//! s2_NG(r) = 3e^{4r}/8 - 1/2 + e^{-4r}/8
//! ```
//!
//! A photon-number distribution with variance strictly below `s2_NG` at its
//! mean cannot come from any mixture of Gaussian states.

use core::fmt;

use libm::{exp, expm1, log, pow, sqrt};

use crate::error::{Error, Result};
use crate::roots::bisect;

/// Largest squeezing parameter accepted by the boundary functions.
pub const R_MAX: f64 = 50.0;

/// Half-width of the band around the boundary where no QNG claim is made.
pub const BOUNDARY_BAND: f64 = 1e-9;

/// Below this mean the boundary is taken to be the origin.
pub const MEAN_EPS: f64 = 1e-12;

/// `lim_{r -> 0+} s2_NG(r) / m_NG(r)`. Both start as `r + O(r^2)`
/// (`m = r + 5r^2 + ...`, `s2 = r + 4r^2 + ...`).
pub const FANO_LIMIT_AT_ORIGIN: f64 = 1.0;

/// Photon-number mean `m` and variance `s2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentPair {
    pub m: f64,
    pub s2: f64,
}

impl MomentPair {
    pub const fn new(m: f64, s2: f64) -> Self {
        Self { m, s2 }
    }

    pub fn is_finite(&self) -> bool {
        self.m.is_finite() && self.s2.is_finite()
    }

    /// Non-centered second moment `<N^2>`.
    pub fn second_moment(&self) -> f64 {
        self.s2 + self.m * self.m
    }

    /// Smallest variance an integer-valued distribution with this mean can
    /// have: `f(1 - f)` with `f` the fractional part of `m`.
    pub fn min_integer_variance(&self) -> f64 {
        if !(self.m >= 0.0) || !self.m.is_finite() {
            return 0.0;
        }
        let f = self.m - libm::floor(self.m);
        f * (1.0 - f)
    }

    /// True when the pair cannot be the mean and variance of a
    /// distribution on the non-negative integers.
    pub fn is_nonphysical(&self) -> bool {
        if !self.is_finite() {
            return true;
        }
        let tol = 1e-12 * self.m.abs().max(1.0);
        self.m < 0.0 || self.s2 < 0.0 || self.s2 < self.min_integer_variance() - tol
    }
}

/// Moments of the integrated intensity `W`: `<W> = <N>`,
/// `<W^2> = <N^2> - <N>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityMoments {
    pub w1: f64,
    pub w2: f64,
}

impl IntensityMoments {
    pub fn from_moments(p: MomentPair) -> Self {
        Self {
            w1: p.m,
            w2: p.s2 + p.m * p.m - p.m,
        }
    }

    pub fn to_moments(self) -> MomentPair {
        MomentPair::new(self.w1, self.w2 - self.w1 * self.w1 + self.w1)
    }
}

/// Mean photon number with the normalized second-order correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct G2Point {
    pub m: f64,
    pub g2: f64,
}

impl G2Point {
    pub fn from_moments(p: MomentPair) -> Result<Self> {
        if !(p.m > 0.0) || !p.is_finite() {
            return Err(Error::invalid("g2 needs a positive finite mean"));
        }
        Ok(Self {
            m: p.m,
            g2: 1.0 + p.s2 / (p.m * p.m) - 1.0 / p.m,
        })
    }

    pub fn to_moments(self) -> MomentPair {
        MomentPair::new(self.m, self.m * self.m * (self.g2 - 1.0) + self.m)
    }
}

/// A point on the boundary together with its squeezing parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub r: f64,
    pub m: f64,
    pub s2: f64,
}

impl BoundaryPoint {
    pub fn moments(&self) -> MomentPair {
        MomentPair::new(self.m, self.s2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VerdictTag {
    /// Below the boundary: no Gaussian mixture reproduces the statistics.
    Qng,
    /// Sub-Poissonian (`s2 < m`) but not below the boundary.
    NonclassicalOnly,
    Unwitnessed,
    Invalid,
}

impl VerdictTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            VerdictTag::Qng => "QNG",
            VerdictTag::NonclassicalOnly => "NONCLASSICAL_ONLY",
            VerdictTag::Unwitnessed => "UNWITNESSED",
            VerdictTag::Invalid => "INVALID",
        }
    }
}

impl fmt::Display for VerdictTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classification outcome.
///
/// `margin` is the signed distance to the boundary in the witness's own
/// variable (variance at fixed mean for the moment witnesses, `p1` at fixed
/// `p0` for the probability witness); negative means below the boundary.
/// It is NaN for invalid input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub tag: VerdictTag,
    pub margin: f64,
    pub nonphysical: bool,
}

impl Verdict {
    pub fn invalid() -> Self {
        Self {
            tag: VerdictTag::Invalid,
            margin: f64::NAN,
            nonphysical: true,
        }
    }

    pub fn is_qng(&self) -> bool {
        self.tag == VerdictTag::Qng
    }
}

fn check_r(r: f64) -> Result<()> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::invalid("squeezing parameter must be finite and >= 0"));
    }
    if r > R_MAX {
        return Err(Error::invalid("squeezing parameter above 50 overflows the boundary"));
    }
    Ok(())
}

#[inline]
pub(crate) fn m_ng(r: f64) -> f64 {
    (expm1(6.0 * r) + expm1(-2.0 * r)) / 4.0
}

#[inline]
pub(crate) fn s2_ng(r: f64) -> f64 {
    (3.0 * expm1(4.0 * r) + expm1(-4.0 * r)) / 8.0
}

/// Boundary point at squeezing `r`.
pub fn ng_boundary(r: f64) -> Result<BoundaryPoint> {
    check_r(r)?;
    Ok(BoundaryPoint {
        r,
        m: m_ng(r),
        s2: s2_ng(r),
    })
}

/// Squeezing parameter of the boundary point with mean `m`.
pub fn ng_inverse_mean(m: f64) -> Result<f64> {
    if !m.is_finite() || m < 0.0 {
        return Err(Error::invalid("mean must be finite and >= 0"));
    }
    if m == 0.0 {
        return Ok(0.0);
    }
    let hi = (log(4.0 * m + 2.0) / 6.0 + 1.0).max(1.0);
    if hi > R_MAX && m_ng(R_MAX) < m {
        return Err(Error::invalid("mean beyond the representable boundary"));
    }
    bisect(|r| m_ng(r) - m, 0.0, hi.min(R_MAX), 1e-14)
}

/// Squeezing parameter of the boundary point with variance `s2`.
pub fn ng_inverse_variance(s2: f64) -> Result<f64> {
    if !s2.is_finite() || s2 < 0.0 {
        return Err(Error::invalid("variance must be finite and >= 0"));
    }
    // e^{4r} solves 3x^2 - (4 + 8 s2) x + 1 = 0.
    let u = sqrt(16.0 * s2 * (s2 + 1.0) + 1.0);
    let x_minus_1 = (4.0 * s2 + 16.0 * s2 * (s2 + 1.0) / (u + 1.0)) / 3.0;
    let r = libm::log1p(x_minus_1) / 4.0;
    check_r(r)?;
    Ok(r)
}

/// Non-parametric form of the boundary: the mean at which the boundary
/// has variance `s2`.
pub fn ng_mean_for_variance(s2: f64) -> Result<f64> {
    if !s2.is_finite() || s2 < 0.0 {
        return Err(Error::invalid("variance must be finite and >= 0"));
    }
    let u = sqrt(16.0 * s2 * (s2 + 1.0) + 1.0);
    let a = 4.0 * s2 + u + 2.0;
    let t = sqrt(a / 3.0);
    let a_minus_3 = 4.0 * s2 + 16.0 * s2 * (s2 + 1.0) / (u + 1.0);
    let t_minus_1 = a_minus_3 / (3.0 * (t + 1.0));
    Ok(t_minus_1 * (t * t * t + t * t + t - 1.0) / (4.0 * t))
}

/// Boundary variance at mean `m`.
pub fn boundary_variance(m: f64) -> Result<f64> {
    if !m.is_finite() || m < 0.0 {
        return Err(Error::invalid("mean must be finite and >= 0"));
    }
    if m < MEAN_EPS {
        return Ok(0.0);
    }
    Ok(s2_ng(ng_inverse_mean(m)?))
}

fn tag_for(margin: f64, nonclassical: bool) -> VerdictTag {
    if margin < -BOUNDARY_BAND {
        VerdictTag::Qng
    } else if nonclassical {
        VerdictTag::NonclassicalOnly
    } else {
        VerdictTag::Unwitnessed
    }
}

/// Classify a mean/variance pair against the boundary.
///
/// Non-finite or negative means give [`VerdictTag::Invalid`]. Pairs that are
/// impossible for integer-valued counts (for example after over-correcting
/// losses) are classified geometrically and flagged `nonphysical`.
pub fn classify_moments(p: MomentPair) -> Verdict {
    if !p.is_finite() || p.m < 0.0 {
        return Verdict::invalid();
    }
    let Ok(bound) = boundary_variance(p.m) else {
        return Verdict::invalid();
    };
    let margin = p.s2 - bound;
    Verdict {
        tag: tag_for(margin, p.s2 < p.m),
        margin,
        nonphysical: p.is_nonphysical(),
    }
}

/// Classify integrated-intensity moments; the margin is in `<W^2>` units,
/// which coincide with variance units at fixed mean.
pub fn classify_intensity(w: IntensityMoments) -> Verdict {
    if !(w.w1.is_finite() && w.w2.is_finite()) || w.w1 < 0.0 {
        return Verdict::invalid();
    }
    let bound = match ng_inverse_mean(w.w1).map(boundary_intensity) {
        Ok(Ok(b)) if w.w1 >= MEAN_EPS => b.w2,
        Ok(Ok(_)) => 0.0,
        _ => return Verdict::invalid(),
    };
    let margin = w.w2 - bound;
    let p = w.to_moments();
    Verdict {
        tag: tag_for(margin, w.w2 < w.w1 * w.w1),
        margin,
        nonphysical: p.is_nonphysical() || w.w2 < 0.0,
    }
}

/// Classify a `(m, g2)` point. The margin is reported in variance units,
/// `m^2 (g2 - g2_NG)`.
pub fn classify_g2(p: G2Point) -> Verdict {
    if !(p.m.is_finite() && p.g2.is_finite()) || !(p.m > 0.0) {
        return Verdict::invalid();
    }
    let g2_bound = if p.m < MEAN_EPS {
        // s2 = 0 at the origin: g2 = 1 - 1/m.
        1.0 - 1.0 / p.m
    } else {
        match ng_inverse_mean(p.m).and_then(boundary_g2) {
            Ok(b) => b.g2,
            Err(_) => return Verdict::invalid(),
        }
    };
    let margin = p.m * p.m * (p.g2 - g2_bound);
    Verdict {
        tag: tag_for(margin, p.g2 < 1.0),
        margin,
        nonphysical: p.to_moments().is_nonphysical(),
    }
}

/// Classify a `(m, Fano factor)` point. The margin is reported in variance
/// units, `m (F - F_NG)`.
pub fn classify_fano(m: f64, fano: f64) -> Verdict {
    if !(m.is_finite() && fano.is_finite()) || !(m > 0.0) {
        return Verdict::invalid();
    }
    let f_bound = if m < MEAN_EPS {
        FANO_LIMIT_AT_ORIGIN
    } else {
        match ng_inverse_mean(m).and_then(boundary_fano) {
            Ok((_, f)) => f,
            Err(_) => return Verdict::invalid(),
        }
    };
    let margin = m * (fano - f_bound);
    Verdict {
        tag: tag_for(margin, fano < 1.0),
        margin,
        nonphysical: MomentPair::new(m, fano * m).is_nonphysical(),
    }
}

/// `<N^2>` on the boundary, `m_NG^2 + s2_NG`.
pub fn boundary_second_moment(r: f64) -> Result<f64> {
    let b = ng_boundary(r)?;
    Ok(b.m * b.m + b.s2)
}

/// Integrated-intensity moments on the boundary.
pub fn boundary_intensity(r: f64) -> Result<IntensityMoments> {
    let b = ng_boundary(r)?;
    Ok(IntensityMoments::from_moments(b.moments()))
}

/// `g2` on the boundary. Undefined at `r = 0`.
pub fn boundary_g2(r: f64) -> Result<G2Point> {
    if !(r > 0.0) {
        return Err(Error::invalid("g2 boundary needs r > 0"));
    }
    let b = ng_boundary(r)?;
    G2Point::from_moments(b.moments())
}

/// Rational closed form of the boundary `g2`,
/// `(e^{12r} + 2e^{10r} + 3e^{8r} - 4e^{6r} - 3e^{4r} - 2e^{2r} + 3) /
/// (e^{6r} + e^{4r} + e^{2r} - 1)^2`.
pub fn boundary_g2_closed_form(r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::invalid("g2 boundary needs r > 0"));
    }
    check_r(r)?;
    // Divide through by e^{12r} to keep the terms bounded.
    let y = exp(-2.0 * r);
    let num = 1.0 + y * (2.0 + y * (3.0 + y * (-4.0 + y * (-3.0 + y * (-2.0 + 3.0 * y)))));
    let den = 1.0 + y * (1.0 + y * (1.0 - y));
    Ok(num / (den * den))
}

/// Large-mean approximation of the boundary `g2`, from below.
pub fn g2_asymptotic(m: f64) -> Result<f64> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::invalid("mean must be positive and finite"));
    }
    let x = m + 0.5;
    Ok(1.0 - 1.0 / x + 3.0 / (pow(2.0, 5.0 / 3.0) * pow(x, 4.0 / 3.0)) - 1.0 / (x * x))
}

/// Mean and Fano factor `s2_NG / m_NG` on the boundary; needs `r > 0`.
/// The limit at the origin is [`FANO_LIMIT_AT_ORIGIN`].
pub fn boundary_fano(r: f64) -> Result<(f64, f64)> {
    if !(r > 0.0) {
        return Err(Error::invalid("Fano boundary needs r > 0"));
    }
    let b = ng_boundary(r)?;
    Ok((b.m, b.s2 / b.m))
}

/// Boundary for `modes` identical independent modes, measured jointly:
/// `(M m_NG, M^2 s2_NG)`.
pub fn multimode_identical_boundary(modes: u32, r: f64) -> Result<MomentPair> {
    if modes < 1 {
        return Err(Error::invalid("mode count must be >= 1"));
    }
    let b = ng_boundary(r)?;
    let k = modes as f64;
    Ok(MomentPair::new(k * b.m, k * k * b.s2))
}

/// `2 - 4/(3e^{8r} - 1)`: second derivative of `<N^2>` with respect to the
/// mean along the boundary. Non-negative, hence the boundary in
/// `(m, <N^2>)` is convex.
pub fn convexity_measure(r: f64) -> Result<f64> {
    check_r(r)?;
    Ok(2.0 - 4.0 / (3.0 * exp(8.0 * r) - 1.0))
}
