//! Photon-number moments from quadrature and amplified-intensity
//! measurements, and the corrections these schemes need.
//!
//! Quadratures use the convention `x = (a + a^dag)/2` (vacuum variance 1/4)
//! throughout, including the samplers in [`sampling`].

mod sampling;

pub use sampling::{
    estimate_double_homodyne, estimate_homodyne4, estimate_phase_random, sample_double_homodyne,
    sample_phase_random, sample_quadrature, Estimate, JointSampleSet, QuadState, SampleSet,
};

use core::f64::consts::PI;

use libm::{cos, exp, sin};

use crate::error::{Error, Result};
use crate::states::{GaussianSpec, MixtureSpec, PhotonPmf};
use crate::witness::{
    classify_moments, ng_boundary, ng_inverse_mean, MomentPair, Verdict, VerdictTag,
    BOUNDARY_BAND,
};

/// One of the four homodyne directions `0, pi/4, pi/2, 3pi/4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    D0,
    D45,
    D90,
    D135,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::D0, Direction::D45, Direction::D90, Direction::D135];

    pub fn angle(self) -> f64 {
        match self {
            Direction::D0 => 0.0,
            Direction::D45 => PI / 4.0,
            Direction::D90 => PI / 2.0,
            Direction::D135 => 3.0 * PI / 4.0,
        }
    }

    /// The direction within 1e-9 rad of `phi` (modulo pi), if any.
    pub fn from_angle(phi: f64) -> Option<Self> {
        let mut a = libm::fmod(phi, PI);
        if a < 0.0 {
            a += PI;
        }
        Self::ALL.into_iter().find(|d| {
            let diff = (a - d.angle()).abs();
            diff < 1e-9 || (PI - diff) < 1e-9
        })
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Second and fourth quadrature moments in the four homodyne directions.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QuadratureStats {
    q2: [Option<f64>; 4],
    q4: [Option<f64>; 4],
}

impl QuadratureStats {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record the moments measured at angle `phi`, which must be one of the
    /// four directions.
    pub fn set(&mut self, phi: f64, q2: f64, q4: f64) -> Result<()> {
        let d = Direction::from_angle(phi).ok_or_else(|| {
            Error::invalid("quadrature angle must be one of 0, pi/4, pi/2, 3pi/4")
        })?;
        self.set_direction(d, q2, q4);
        Ok(())
    }

    pub fn set_direction(&mut self, d: Direction, q2: f64, q4: f64) {
        self.q2[d.index()] = Some(q2);
        self.q4[d.index()] = Some(q4);
    }

    pub fn get(&self, d: Direction) -> Option<(f64, f64)> {
        Some((self.q2[d.index()]?, self.q4[d.index()]?))
    }

    /// Exact moments of `state` in all four directions.
    pub fn from_state(state: &QuadState) -> Self {
        let mut s = Self::new();
        for d in Direction::ALL {
            let (q2, q4) = quadrature_moments(state, d.angle());
            s.set_direction(d, q2, q4);
        }
        s
    }

    /// `(sum q2, sum q4)` over the four directions after validation.
    fn sums(&self) -> Result<(f64, f64)> {
        let mut s2 = 0.0;
        let mut s4 = 0.0;
        for d in Direction::ALL {
            let (q2, q4) = self.get(d).ok_or(Error::MissingDirection(d.angle()))?;
            check_jensen(q2, q4, d.angle())?;
            s2 += q2;
            s4 += q4;
        }
        Ok((s2, s4))
    }
}

fn check_jensen(q2: f64, q4: f64, direction: f64) -> Result<()> {
    if !(q2.is_finite() && q4.is_finite()) || q2 < 0.0 {
        return Err(Error::invalid("quadrature moments must be finite with q2 >= 0"));
    }
    if q4 < q2 * q2 * (1.0 - 1e-12) {
        return Err(Error::JensenViolation { direction });
    }
    Ok(())
}

/// Photon-number moments from homodyne moments in four directions:
/// `m = (sum q2 - 1)/2`, `s2 = (2/3) sum q4 - (sum q2)^2/4 - 1/4`.
pub fn homodyne_moments(stats: &QuadratureStats) -> Result<MomentPair> {
    let (s2, s4) = stats.sums()?;
    Ok(MomentPair::new(
        0.5 * (s2 - 1.0),
        2.0 / 3.0 * s4 - 0.25 * s2 * s2 - 0.25,
    ))
}

/// Photon-number moments from a homodyne measurement with a phase-random
/// local oscillator: `m = 2 q2 - 1/2`, `s2 = (8/3) q4 - 4 q2^2 - 1/4`.
pub fn phase_random_moments(q2: f64, q4: f64) -> Result<MomentPair> {
    check_jensen(q2, q4, f64::NAN)?;
    Ok(MomentPair::new(
        2.0 * q2 - 0.5,
        8.0 / 3.0 * q4 - 4.0 * q2 * q2 - 0.25,
    ))
}

/// Boundary in terms of the direction-averaged quadrature moments,
/// `(Q2, Q4)` with `Q2 = (e^{6r} + e^{-2r})/8` and
/// `Q4 = 3(e^{12r} + 8e^{4r} - 4 + 3e^{-4r})/128`.
pub fn q_boundary(r: f64) -> Result<(f64, f64)> {
    ng_boundary(r)?;
    let q2 = (exp(6.0 * r) + exp(-2.0 * r)) / 8.0;
    let q4 = 3.0 / 128.0 * (exp(12.0 * r) + 8.0 * exp(4.0 * r) - 4.0 + 3.0 * exp(-4.0 * r));
    Ok((q2, q4))
}

/// Classify direction-averaged quadrature moments. At fixed `Q2` (fixed
/// mean) the variance is affine in `Q4` with slope 8/3, so the margin is
/// reported in variance units.
pub fn classify_quadrature(q2: f64, q4: f64) -> Verdict {
    match phase_random_moments(q2, q4) {
        Ok(p) => classify_moments(p),
        Err(_) => Verdict::invalid(),
    }
}

/// `(<q^2>, <q^4>)` of the quadrature at angle `phi`.
pub fn quadrature_moments(state: &QuadState, phi: f64) -> (f64, f64) {
    match state {
        QuadState::Gaussian(g) => gaussian_quadrature_moments(g, phi),
        QuadState::Mixture(mix) => mixture_quadrature_moments(mix, phi),
        QuadState::NumberDiagonal(pmf) => number_diagonal_quadrature_moments(pmf),
    }
}

/// Quadrature moments averaged over a uniformly random phase.
pub fn phase_averaged_quadrature_moments(state: &QuadState) -> (f64, f64) {
    // The moments are trigonometric polynomials of degree <= 4 in the
    // angle, which an equispaced rule with 16 nodes integrates exactly.
    const NODES: usize = 16;
    let mut q2 = 0.0;
    let mut q4 = 0.0;
    for k in 0..NODES {
        let (a, b) = quadrature_moments(state, PI * k as f64 / NODES as f64);
        q2 += a;
        q4 += b;
    }
    (q2 / NODES as f64, q4 / NODES as f64)
}

pub(crate) fn gaussian_quadrature_stats(g: &GaussianSpec, phi: f64) -> (f64, f64) {
    let (s, c) = (sin(phi), cos(phi));
    let cov = g.covariance();
    let mean = g.dx() * c + g.dp() * s;
    let var = c * c * cov[0][0] + 2.0 * s * c * cov[0][1] + s * s * cov[1][1];
    (mean, var)
}

fn gaussian_quadrature_moments(g: &GaussianSpec, phi: f64) -> (f64, f64) {
    let (mu, v) = gaussian_quadrature_stats(g, phi);
    let mu2 = mu * mu;
    (mu2 + v, mu2 * mu2 + 6.0 * mu2 * v + 3.0 * v * v)
}

fn mixture_quadrature_moments(mix: &MixtureSpec, phi: f64) -> (f64, f64) {
    mix.components().iter().fold((0.0, 0.0), |(a, b), (w, g)| {
        let (q2, q4) = gaussian_quadrature_moments(g, phi);
        (a + w * q2, b + w * q4)
    })
}

/// Fock state `n`: `<q^2> = (2n + 1)/4`, `<q^4> = 3(2n^2 + 2n + 1)/16`.
pub fn fock_quadrature_moments(n: u32) -> (f64, f64) {
    let n = n as f64;
    ((2.0 * n + 1.0) / 4.0, 3.0 * (2.0 * n * n + 2.0 * n + 1.0) / 16.0)
}

fn number_diagonal_quadrature_moments(pmf: &PhotonPmf) -> (f64, f64) {
    let total: f64 = pmf.probs().iter().sum();
    let mut q2 = 0.0;
    let mut q4 = 0.0;
    for (n, &p) in pmf.probs().iter().enumerate() {
        let (a, b) = fock_quadrature_moments(n as u32);
        q2 += p * a;
        q4 += p * b;
    }
    (q2 / total, q4 / total)
}

/// Amplifier gain with its confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainEstimate {
    g_est: f64,
    g_min: f64,
    g_max: f64,
}

impl GainEstimate {
    pub fn new(g_est: f64, g_min: f64, g_max: f64) -> Result<Self> {
        if !(g_est.is_finite() && g_min.is_finite() && g_max.is_finite()) {
            return Err(Error::invalid("gain values must be finite"));
        }
        if !(g_min > 1.0) {
            return Err(Error::invalid("gain must exceed 1"));
        }
        if !(g_min <= g_est && g_est <= g_max) {
            return Err(Error::invalid("gain estimate must lie within [g_min, g_max]"));
        }
        Ok(Self { g_est, g_min, g_max })
    }

    /// A gain known without uncertainty.
    pub fn exact(g: f64) -> Result<Self> {
        Self::new(g, g, g)
    }

    pub fn g_est(&self) -> f64 {
        self.g_est
    }
    pub fn g_min(&self) -> f64 {
        self.g_min
    }
    pub fn g_max(&self) -> f64 {
        self.g_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PiaMode {
    /// Invert with the point estimate of the gain.
    Point,
    /// Invert with the lower end of the gain interval.
    Conservative,
}

/// Moments after the phase-insensitive amplifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplified {
    pub mean: f64,
    pub variance: f64,
    /// Second moment of the integrated intensity, `S2 + M^2 - M`.
    pub w2: f64,
}

/// Corrected photon-number moments together with a physicality flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corrected {
    pub moments: MomentPair,
    pub nonphysical: bool,
}

impl Corrected {
    fn new(moments: MomentPair) -> Self {
        Self {
            moments,
            nonphysical: moments.is_nonphysical(),
        }
    }
}

fn check_gain(g: f64) -> Result<()> {
    if !(g > 1.0) || !g.is_finite() {
        return Err(Error::invalid("gain must be finite and > 1"));
    }
    Ok(())
}

/// Ideal phase-insensitive amplifier with a vacuum idler:
/// `M = m G + G - 1`, `S2 = G^2 s2 + G(G - 1) m + (3G^2 - 2G - 1)/4`.
pub fn pia_forward(p: MomentPair, g: f64) -> Result<Amplified> {
    check_gain(g)?;
    let mean = p.m * g + g - 1.0;
    let variance = g * g * p.s2 + g * (g - 1.0) * p.m + (3.0 * g * g - 2.0 * g - 1.0) / 4.0;
    Ok(Amplified {
        mean,
        variance,
        w2: variance + mean * mean - mean,
    })
}

/// Closed form of the amplified intensity second moment,
/// `G^2 (s2 + m^2 - m) + (G - 1)(7(G - 1) + 16 G m)/4`.
pub fn pia_w2(p: MomentPair, g: f64) -> Result<f64> {
    check_gain(g)?;
    Ok(g * g * (p.s2 + p.m * p.m - p.m) + (g - 1.0) * (7.0 * (g - 1.0) + 16.0 * g * p.m) / 4.0)
}

/// Invert [`pia_forward`] with the gain selected by `mode`. Results are
/// never clamped.
pub fn pia_invert(big_m: f64, big_s2: f64, gain: &GainEstimate, mode: PiaMode) -> Corrected {
    let g = match mode {
        PiaMode::Point => gain.g_est,
        PiaMode::Conservative => gain.g_min,
    };
    let m = (big_m - g + 1.0) / g;
    let s2 = (big_s2 - g * (g - 1.0) * m - (3.0 * g * g - 2.0 * g - 1.0) / 4.0) / (g * g);
    Corrected::new(MomentPair::new(m, s2))
}

/// Classify amplified moments against the amplified image of the boundary
/// for a known gain. The margin is in amplified-variance units.
pub fn classify_amplified(big_m: f64, big_s2: f64, g: f64) -> Verdict {
    if check_gain(g).is_err() || !(big_m.is_finite() && big_s2.is_finite()) {
        return Verdict::invalid();
    }
    let m = (big_m - g + 1.0) / g;
    if m < 0.0 {
        return Verdict::invalid();
    }
    let Ok(r) = ng_inverse_mean(m) else {
        return Verdict::invalid();
    };
    let bound = match ng_boundary(r).and_then(|b| pia_forward(b.moments(), g)) {
        Ok(a) => a.variance,
        Err(_) => return Verdict::invalid(),
    };
    let margin = big_s2 - bound;
    let inverted = pia_invert(big_m, big_s2, &GainEstimate { g_est: g, g_min: g, g_max: g }, PiaMode::Point);
    Verdict {
        tag: if margin < -BOUNDARY_BAND * g * g {
            VerdictTag::Qng
        } else if inverted.moments.s2 < inverted.moments.m {
            VerdictTag::NonclassicalOnly
        } else {
            VerdictTag::Unwitnessed
        },
        margin,
        nonphysical: inverted.nonphysical,
    }
}

/// Inverted vacuum-admixture map of a double homodyne measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceQuadratures {
    pub x2: f64,
    pub x4: f64,
    pub p2: f64,
    pub p4: f64,
    /// `<x^2 p^2> - <x^2><p^2>` in the symmetric ordering.
    pub cov: f64,
}

/// Undo the balanced splitting with vacuum:
/// `<x0^2> = 2(<x^2> - 1/8)`, `<x0^4> = 4<x^4> - (3/2)<x0^2> - 3/16`,
/// `cov0 = 4 cov`.
pub fn double_homodyne_source(x2: f64, x4: f64, p2: f64, p4: f64, cov: f64) -> SourceQuadratures {
    let x0_2 = 2.0 * (x2 - 0.125);
    let p0_2 = 2.0 * (p2 - 0.125);
    SourceQuadratures {
        x2: x0_2,
        x4: 4.0 * x4 - 1.5 * x0_2 - 3.0 / 16.0,
        p2: p0_2,
        p4: 4.0 * p4 - 1.5 * p0_2 - 3.0 / 16.0,
        cov: 4.0 * cov,
    }
}

/// Photon-number moments from the symmetric-ordered moments of `x` and
/// `p`: `m = <x^2> + <p^2> - 1/2`,
/// `s2 = Var x^2 + Var p^2 + 2 cov(x^2, p^2) - 1/4`.
pub fn moments_from_xp(q: &SourceQuadratures) -> MomentPair {
    MomentPair::new(
        q.x2 + q.p2 - 0.5,
        (q.x4 - q.x2 * q.x2) + (q.p4 - q.p2 * q.p2) + 2.0 * q.cov - 0.25,
    )
}

/// Photon-number moments from a simultaneous (double) homodyne measurement
/// of `x` and `p` behind a balanced beam splitter with a vacuum port.
/// `cov_meas` is the covariance of the measured `x^2` and `p^2`.
pub fn double_homodyne_correct(
    x2_meas: f64,
    x4_meas: f64,
    p2_meas: f64,
    p4_meas: f64,
    cov_meas: f64,
) -> Corrected {
    let src = double_homodyne_source(x2_meas, x4_meas, p2_meas, p4_meas, cov_meas);
    let moments = moments_from_xp(&src);
    let jensen_ok = src.x2 >= 0.0
        && src.p2 >= 0.0
        && src.x4 >= src.x2 * src.x2 * (1.0 - 1e-12)
        && src.p4 >= src.p2 * src.p2 * (1.0 - 1e-12);
    Corrected {
        moments,
        nonphysical: !jensen_ok || moments.is_nonphysical(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{lossy_fock_moments, GaussianSpec, PhotonPmf};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn close(a: MomentPair, b: MomentPair, tol: f64) -> bool {
        (a.m - b.m).abs() <= tol * b.m.abs().max(1.0)
            && (a.s2 - b.s2).abs() <= tol * b.s2.abs().max(1.0)
    }

    fn uniform_stats(q2: f64, q4: f64) -> QuadratureStats {
        let mut s = QuadratureStats::new();
        for d in Direction::ALL {
            s.set_direction(d, q2, q4);
        }
        s
    }

    // Quadrature moments of Fock n by numerical integration of the
    // Hermite-function density, independent of the closed forms.
    fn fock_moments_numeric(n: usize) -> (f64, f64) {
        let steps = 40_000;
        let lim = (2.0 * n as f64 + 1.0).sqrt() + 8.0;
        let h = 2.0 * lim / steps as f64;
        let (mut q2, mut q4) = (0.0, 0.0);
        for i in 0..=steps {
            let q = -lim + i as f64 * h;
            let y = 2f64.sqrt() * q;
            let mut prev = 0.0;
            let mut cur = PI.powf(-0.25) * (-y * y / 2.0).exp();
            for k in 0..n {
                let next = (2.0 / (k as f64 + 1.0)).sqrt() * y * cur
                    - (k as f64 / (k as f64 + 1.0)).sqrt() * prev;
                prev = cur;
                cur = next;
            }
            let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
            let dens = 2f64.sqrt() * cur * cur;
            q2 += w * h * dens * q * q;
            q4 += w * h * dens * q.powi(4);
        }
        (q2, q4)
    }

    #[test]
    fn vacuum_stats() {
        let s = uniform_stats(0.25, 3.0 / 16.0);
        assert!(close(homodyne_moments(&s).unwrap(), MomentPair::new(0.0, 0.0), 1e-15));
        assert!(close(
            phase_random_moments(0.25, 3.0 / 16.0).unwrap(),
            MomentPair::new(0.0, 0.0),
            1e-15
        ));
    }

    #[test]
    fn fock_stats() {
        for n in 0..8u32 {
            let (q2, q4) = fock_quadrature_moments(n);
            let (a, b) = fock_moments_numeric(n as usize);
            assert!((q2 - a).abs() < 1e-9 && (q4 - b).abs() < 1e-9, "n = {n}");
            let expect = MomentPair::new(n as f64, 0.0);
            assert!(close(homodyne_moments(&uniform_stats(a, b)).unwrap(), expect, 1e-8));
            assert!(close(phase_random_moments(a, b).unwrap(), expect, 1e-8));
        }
    }

    #[test]
    fn thermal_phase_random() {
        for &nbar in &[0.1, 1.0, 3.5] {
            let q2 = (2.0 * nbar + 1.0) / 4.0;
            let p = phase_random_moments(q2, 3.0 * q2 * q2).unwrap();
            assert!(close(p, MomentPair::new(nbar, nbar * (nbar + 1.0)), 1e-13));
        }
    }

    #[test]
    fn estimator_errors() {
        let mut s = uniform_stats(0.25, 3.0 / 16.0);
        s.q2[2] = None;
        assert!(matches!(homodyne_moments(&s), Err(Error::MissingDirection(_))));
        let s = uniform_stats(1.0, 0.5);
        assert!(matches!(homodyne_moments(&s), Err(Error::JensenViolation { .. })));
        assert!(phase_random_moments(1.0, 0.5).is_err());
        let mut s = QuadratureStats::new();
        assert!(s.set(0.3, 0.25, 0.2).is_err());
        assert!(s.set(PI + PI / 4.0, 0.25, 0.2).is_ok());
        assert_eq!(s.get(Direction::D45), Some((0.25, 0.2)));
    }

    #[test]
    fn q_boundary_values() {
        assert_eq!(q_boundary(0.0).unwrap(), (0.25, 3.0 / 16.0));
        for i in 0..=100 {
            let r = i as f64 * 0.02;
            let (q2, q4) = q_boundary(r).unwrap();
            let via = homodyne_moments(&uniform_stats(q2, q4)).unwrap();
            let b = ng_boundary(r).unwrap().moments();
            // s2 comes out of a difference of terms of size ~Q4.
            let cancel = 1e-14 * 32.0 / 3.0 * q4;
            assert!((via.m - b.m).abs() <= 1e-10 * b.m.max(1.0), "r = {r}");
            assert!((via.s2 - b.s2).abs() <= 1e-10 * b.s2.max(1.0) + cancel, "r = {r}");
        }
    }

    #[test]
    fn q_boundary_classification() {
        for i in 1..40 {
            let r = i as f64 * 0.05;
            let (q2, q4) = q_boundary(r).unwrap();
            for &f in &[0.98, 0.999, 1.001, 1.02] {
                let v = classify_quadrature(q2, q4 * f);
                let p = phase_random_moments(q2, q4 * f).unwrap();
                assert_eq!(v.tag, classify_moments(p).tag);
                assert_eq!(v.is_qng(), f < 1.0, "r = {r}, f = {f}");
            }
        }
    }

    #[test]
    fn analytic_gaussian_estimators() {
        let g = GaussianSpec::new(0.4, 0.35, 1.1, 0.8, -0.6).unwrap();
        let st = QuadState::Gaussian(g);
        let via4 = homodyne_moments(&QuadratureStats::from_state(&st)).unwrap();
        assert!(close(via4, g.moments(), 1e-12));
        let coh = QuadState::Gaussian(GaussianSpec::coherent(1.0, 0.0).unwrap());
        let via = homodyne_moments(&QuadratureStats::from_state(&coh)).unwrap();
        assert!(close(via, MomentPair::new(1.0, 1.0), 1e-13));
    }

    #[test]
    fn lossy_fock_phase_random() {
        let pmf = PhotonPmf::new(vec![0.2, 0.8], 0.0).unwrap();
        let (q2, q4) = phase_averaged_quadrature_moments(&QuadState::NumberDiagonal(pmf));
        let p = phase_random_moments(q2, q4).unwrap();
        assert!(close(p, lossy_fock_moments(1, 0.8).unwrap(), 1e-13));
    }

    #[test]
    fn pia_examples() {
        let a = pia_forward(MomentPair::new(2.5, 1.0), 100.0).unwrap();
        assert_eq!(a.mean, 349.0);
        assert_relative_eq!(a.variance, 42199.75, max_relative = 1e-14);
        assert!((a.variance - 42200.0).abs() < 1.0);

        let back = pia_invert(a.mean, a.variance, &GainEstimate::exact(100.0).unwrap(), PiaMode::Point);
        assert!((back.moments.m - 2.5).abs() < 1e-9 && (back.moments.s2 - 1.0).abs() < 1e-9);
        assert!(!back.nonphysical);

        let v = pia_forward(MomentPair::new(0.0, 0.0), 2.0).unwrap();
        assert_eq!((v.mean, v.variance), (1.0, 1.75));
        assert!((v.w2 - pia_w2(MomentPair::new(0.0, 0.0), 2.0).unwrap()).abs() < 1e-15);

        let near = pia_forward(MomentPair::new(2.5, 1.0), 1.0 + 1e-9).unwrap();
        assert!((near.mean - 2.5).abs() < 1e-8 && (near.variance - 1.0).abs() < 1e-7);
        assert!(pia_forward(MomentPair::new(1.0, 1.0), 1.0).is_err());
    }

    #[test]
    fn overestimated_gain_moves_inward() {
        let truth = MomentPair::new(2.5, 1.0);
        let a = pia_forward(truth, 100.0).unwrap();
        for &ratio in &[1.001, 1.01, 1.05] {
            let gain = GainEstimate::exact(100.0 * ratio).unwrap();
            let c = pia_invert(a.mean, a.variance, &gain, PiaMode::Point).moments;
            assert!(c.m < truth.m && c.s2 < truth.s2, "ratio {ratio}");
        }
        // Large overestimates leave the physical region.
        let c = pia_invert(a.mean, a.variance, &GainEstimate::exact(200.0).unwrap(), PiaMode::Point);
        assert!(c.nonphysical);
    }

    #[test]
    fn gain_validation() {
        assert!(GainEstimate::new(2.0, 1.0, 3.0).is_err());
        assert!(GainEstimate::new(2.0, 2.5, 3.0).is_err());
        assert!(GainEstimate::new(2.0, 1.5, 1.8).is_err());
        assert!(GainEstimate::new(2.0, 1.5, 3.0).is_ok());
    }

    #[test]
    fn conservative_mode_can_fail_for_nonphysical_results() {
        // Dominance needs the conservative variance to be non-negative:
        // with a negative variance, dividing by the smaller g_min^2 pushes
        // it further down.
        let gain = GainEstimate::new(10.0, 5.0, 10.0).unwrap();
        let (big_m, big_s2) = (9.0, 0.0);
        let point = pia_invert(big_m, big_s2, &gain, PiaMode::Point).moments;
        let cons = pia_invert(big_m, big_s2, &gain, PiaMode::Conservative).moments;
        assert!(cons.s2 < 0.0);
        assert!(cons.s2 < point.s2);
    }

    #[test]
    fn double_homodyne_vacuum() {
        let c = double_homodyne_correct(0.25, 3.0 / 16.0, 0.25, 3.0 / 16.0, 0.0);
        assert!(close(c.moments, MomentPair::new(0.0, 0.0), 1e-15));
        assert!(!c.nonphysical);
    }

    // Forward map of the balanced splitter with a vacuum port, written out
    // from x_m = (x0 + xv)/sqrt 2 with independent Gaussian xv of variance
    // 1/4: moments of the measured quadratures from those of the source.
    fn forward(x2: f64, x4: f64, p2: f64, p4: f64, cov: f64) -> [f64; 5] {
        let v = 0.25;
        let fwd2 = |a: f64| 0.5 * (a + v);
        let fwd4 = |a2: f64, a4: f64| 0.25 * (a4 + 6.0 * a2 * v + 3.0 * v * v);
        [fwd2(x2), fwd4(x2, x4), fwd2(p2), fwd4(p2, p4), 0.25 * cov]
    }

    fn gaussian_xp(g: &GaussianSpec) -> (f64, f64, f64, f64, f64) {
        let c = g.covariance();
        let (mx, mp) = (g.dx(), g.dp());
        let (a, b, cc) = (c[0][0], c[1][1], c[0][1]);
        let x2 = a + mx * mx;
        let p2 = b + mp * mp;
        let x4 = mx.powi(4) + 6.0 * mx * mx * a + 3.0 * a * a;
        let p4 = mp.powi(4) + 6.0 * mp * mp * b + 3.0 * b * b;
        let x2p2 = (a + mx * mx) * (b + mp * mp) + 2.0 * cc * cc + 4.0 * cc * mx * mp;
        (x2, x4, p2, p4, x2p2 - x2 * p2)
    }

    #[test]
    fn double_homodyne_roundtrips() {
        let coh = GaussianSpec::coherent(1.3, 0.4).unwrap();
        let (x2, x4, p2, p4, cov) = gaussian_xp(&coh);
        let f = forward(x2, x4, p2, p4, cov);
        let c = double_homodyne_correct(f[0], f[1], f[2], f[3], f[4]);
        let a2 = 1.3f64 * 1.3 + 0.4 * 0.4;
        assert!(close(c.moments, MomentPair::new(a2, a2), 1e-12));

        let th = GaussianSpec::thermal(0.8).unwrap();
        let (x2, x4, p2, p4, cov) = gaussian_xp(&th);
        let f = forward(x2, x4, p2, p4, cov);
        let c = double_homodyne_correct(f[0], f[1], f[2], f[3], f[4]);
        assert!(close(c.moments, MomentPair::new(0.8, 0.8 * 1.8), 1e-12));
    }

    #[test]
    fn double_homodyne_flags_overcorrection() {
        // Measured fourth moment too small for the inverted second moment.
        let c = double_homodyne_correct(0.5, 0.2, 0.25, 3.0 / 16.0, 0.0);
        assert!(c.nonphysical);
    }

    fn spec() -> impl Strategy<Value = GaussianSpec> {
        (0.25f64..2.0, 0.0f64..1.0, 0.0f64..PI, -3.0f64..3.0, -3.0f64..3.0)
            .prop_map(|(s, r, phi, dx, dp)| GaussianSpec::new(s, r, phi, dx, dp).unwrap())
    }

    proptest! {
        #[test]
        fn four_direction_estimator_is_exact(g in spec()) {
            let st = QuadState::Gaussian(g);
            let via = homodyne_moments(&QuadratureStats::from_state(&st)).unwrap();
            prop_assert!(close(via, g.moments(), 1e-11));
        }

        #[test]
        fn phase_randomization_is_neutral(g in spec()) {
            let (q2, q4) = phase_averaged_quadrature_moments(&QuadState::Gaussian(g));
            let p = phase_random_moments(q2, q4).unwrap();
            prop_assert!(close(p, g.moments(), 1e-11));
        }

        #[test]
        fn double_homodyne_inverts_forward_map(g in spec()) {
            let (x2, x4, p2, p4, cov) = gaussian_xp(&g);
            let f = forward(x2, x4, p2, p4, cov);
            let c = double_homodyne_correct(f[0], f[1], f[2], f[3], f[4]);
            prop_assert!(close(c.moments, g.moments(), 1e-10));
        }

        #[test]
        fn w2_identity(m in 0.0f64..50.0, s2 in 0.0f64..50.0, g in 1.0001f64..500.0) {
            let p = MomentPair::new(m, s2);
            let a = pia_forward(p, g).unwrap();
            prop_assert_eq!(a.w2 - (a.variance + a.mean * a.mean - a.mean), 0.0);
            let closed = pia_w2(p, g).unwrap();
            prop_assert!((a.w2 - closed).abs() <= 1e-9 * closed.abs());
        }

        #[test]
        fn pia_roundtrip(m in 0.0f64..50.0, s2 in 0.0f64..50.0, g in 1.0001f64..500.0) {
            let p = MomentPair::new(m, s2);
            let a = pia_forward(p, g).unwrap();
            let back = pia_invert(a.mean, a.variance, &GainEstimate::exact(g).unwrap(), PiaMode::Point);
            prop_assert!((back.moments.m - m).abs() <= 1e-12 * m.max(1.0) * g);
            prop_assert!((back.moments.s2 - s2).abs() <= 1e-12 * (s2 + m + 1.0) * g);
        }

        #[test]
        fn pia_classification_transports(r in 0.01f64..2.0, f in 0.5f64..1.5, g in 1.5f64..200.0) {
            let b = ng_boundary(r).unwrap();
            let p = MomentPair::new(b.m, b.s2 * f);
            prop_assume!((f - 1.0).abs() > 1e-6);
            let a = pia_forward(p, g).unwrap();
            let amp = classify_amplified(a.mean, a.variance, g);
            let inv = pia_invert(a.mean, a.variance, &GainEstimate::exact(g).unwrap(), PiaMode::Point);
            prop_assert_eq!(amp.is_qng(), classify_moments(inv.moments).is_qng());
        }

        #[test]
        fn conservative_mode_dominates(
            m in 0.0f64..20.0, s2 in 0.0f64..40.0, g_true in 2.0f64..200.0,
            lo in 0.5f64..1.0, hi in 1.0f64..1.5
        ) {
            // Physical input amplified with the true gain; the interval
            // brackets the truth.
            let a = pia_forward(MomentPair::new(m, s2), g_true).unwrap();
            let g_min = (g_true * lo).max(1.0001);
            let gain = GainEstimate::new(g_true, g_min, g_true * hi).unwrap();
            let point = pia_invert(a.mean, a.variance, &gain, PiaMode::Point).moments;
            let cons = pia_invert(a.mean, a.variance, &gain, PiaMode::Conservative).moments;
            prop_assert!(cons.s2 >= point.s2 - 1e-9 * point.s2.abs().max(1.0));
            prop_assert!(cons.m >= point.m - 1e-12 * point.m.abs().max(1.0));
        }
    }
}
