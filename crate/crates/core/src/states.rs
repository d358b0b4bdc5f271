//! Analytic photon statistics of Gaussian states, their mixtures, Fock and
//! photon-added thermal states, and the loss/noise channel acting on them.
//!
//! Quadratures follow `x = (a + a^dag)/2`, so vacuum has variance 1/4.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{cos, cosh, exp, expm1, sin, sinh, sqrt};

use crate::error::{Error, Result};
use crate::witness::{ng_inverse_mean, MomentPair};

/// Single-mode Gaussian state: a thermal state with quadrature variance
/// `sigma2`, squeezed along x by `r`, rotated by `phi`, displaced to
/// `(dx, dp)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSpec {
    sigma2: f64,
    r: f64,
    phi: f64,
    dx: f64,
    dp: f64,
}

fn reduce_angle(phi: f64) -> f64 {
    let mut a = libm::fmod(phi, PI);
    if a < 0.0 {
        a += PI;
    }
    if a >= PI {
        a = 0.0;
    }
    a
}

impl GaussianSpec {
    /// `phi` is reduced modulo pi.
    pub fn new(sigma2: f64, r: f64, phi: f64, dx: f64, dp: f64) -> Result<Self> {
        if ![sigma2, r, phi, dx, dp].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("Gaussian parameters must be finite"));
        }
        if sigma2 < 0.25 {
            return Err(Error::invalid("sigma2 must be >= 1/4"));
        }
        if r < 0.0 {
            return Err(Error::invalid("squeezing must be >= 0"));
        }
        Ok(Self {
            sigma2,
            r,
            phi: reduce_angle(phi),
            dx,
            dp,
        })
    }

    pub fn vacuum() -> Self {
        Self {
            sigma2: 0.25,
            r: 0.0,
            phi: 0.0,
            dx: 0.0,
            dp: 0.0,
        }
    }

    pub fn coherent(dx: f64, dp: f64) -> Result<Self> {
        Self::new(0.25, 0.0, 0.0, dx, dp)
    }

    pub fn thermal(nbar: f64) -> Result<Self> {
        if !(nbar >= 0.0) {
            return Err(Error::invalid("thermal occupation must be >= 0"));
        }
        Self::new((2.0 * nbar + 1.0) / 4.0, 0.0, 0.0, 0.0, 0.0)
    }

    pub fn squeezed_vacuum(r: f64, phi: f64) -> Result<Self> {
        Self::new(0.25, r, phi, 0.0, 0.0)
    }

    /// Gaussian state with the given quadrature covariance matrix and means.
    pub fn from_covariance(cov: [[f64; 2]; 2], dx: f64, dp: f64) -> Result<Self> {
        let (a, b, c) = (cov[0][0], cov[0][1], cov[1][1]);
        if (cov[1][0] - b).abs() > 1e-12 * (a.abs() + c.abs()).max(1.0) {
            return Err(Error::invalid("covariance must be symmetric"));
        }
        let det = a * c - b * b;
        if !(det > 0.0) {
            return Err(Error::invalid("covariance must be positive definite"));
        }
        let sigma2 = sqrt(det);
        // Eigenvalues sigma2 e^{-2r} <= sigma2 e^{2r}.
        let half_tr = 0.5 * (a + c);
        let cosh2r = (half_tr / sigma2).max(1.0);
        let r = 0.5 * libm::acosh(cosh2r);
        // The squeezed axis is the eigenvector of the smaller eigenvalue.
        let phi = if b == 0.0 && a <= c {
            0.0
        } else {
            0.5 * libm::atan2(-2.0 * b, c - a)
        };
        Self::new(sigma2.max(0.25), r, phi, dx, dp)
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn phi(&self) -> f64 {
        self.phi
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn dp(&self) -> f64 {
        self.dp
    }

    /// Mean occupation of the underlying thermal state, `2 sigma2 - 1/2`.
    pub fn thermal_occupation(&self) -> f64 {
        2.0 * self.sigma2 - 0.5
    }

    pub fn covariance(&self) -> [[f64; 2]; 2] {
        let (s, c) = (sin(self.phi), cos(self.phi));
        let (em, ep) = (exp(-2.0 * self.r), exp(2.0 * self.r));
        let off = -self.sigma2 * sinh(2.0 * self.r) * sin(2.0 * self.phi);
        [
            [self.sigma2 * (em * c * c + ep * s * s), off],
            [off, self.sigma2 * (em * s * s + ep * c * c)],
        ]
    }

    /// Photon-number mean and variance.
    pub fn moments(&self) -> MomentPair {
        gaussian_moments(self)
    }

    /// State after a pure-loss channel of transmittance `eta`.
    pub fn attenuate(&self, eta: f64) -> Result<Self> {
        check_eta(eta)?;
        if eta == 0.0 {
            return Ok(Self::vacuum());
        }
        let c = self.covariance();
        let v = 0.25 * (1.0 - eta);
        let cov = [
            [eta * c[0][0] + v, eta * c[0][1]],
            [eta * c[1][0], eta * c[1][1] + v],
        ];
        let s = sqrt(eta);
        Self::from_covariance(cov, s * self.dx, s * self.dp)
    }
}

/// Photon-number mean and variance of a Gaussian state.
pub fn gaussian_moments(g: &GaussianSpec) -> MomentPair {
    let s2 = g.sigma2;
    let tr = 2.0 * s2 * cosh(2.0 * g.r);
    let (sn, cs) = (sin(g.phi), cos(g.phi));
    // Displacement along the squeezed and anti-squeezed axes.
    let d_sq = g.dx * cs + g.dp * sn;
    let d_anti = -g.dx * sn + g.dp * cs;
    let m = -0.5 + tr + g.dx * g.dx + g.dp * g.dp;
    let var = -0.25 - 4.0 * s2 * s2
        + 2.0 * tr * tr
        + 4.0 * s2 * exp(-2.0 * g.r) * d_sq * d_sq
        + 4.0 * s2 * exp(2.0 * g.r) * d_anti * d_anti;
    MomentPair::new(m, var)
}

/// Convex combination of Gaussian states.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    components: Vec<(f64, GaussianSpec)>,
}

impl MixtureSpec {
    pub fn new(components: Vec<(f64, GaussianSpec)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("mixture needs at least one component"));
        }
        let mut total = 0.0;
        for (w, _) in &components {
            if !(*w >= 0.0) || !w.is_finite() {
                return Err(Error::invalid("mixture weights must be finite and >= 0"));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("mixture weights must sum to 1"));
        }
        Ok(Self { components })
    }

    pub fn single(g: GaussianSpec) -> Self {
        Self {
            components: vec![(1.0, g)],
        }
    }

    pub fn components(&self) -> &[(f64, GaussianSpec)] {
        &self.components
    }

    pub fn moments(&self) -> MomentPair {
        mixture_moments(self)
    }
}

/// Moments of a mixture: means and second moments average linearly.
pub fn mixture_moments(mix: &MixtureSpec) -> MomentPair {
    let mut m = 0.0;
    let mut n2 = 0.0;
    for (w, g) in &mix.components {
        let p = gaussian_moments(g);
        m += w * p.m;
        n2 += w * p.second_moment();
    }
    MomentPair::new(m, n2 - m * m)
}

/// Truncated photon-number distribution `p_0 ..= p_cutoff` with a bound on
/// the probability mass beyond the cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonPmf {
    probs: Vec<f64>,
    tail_bound: f64,
}

impl PhotonPmf {
    pub fn new(probs: Vec<f64>, tail_bound: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("empty photon-number distribution"));
        }
        if !(0.0..=1.0).contains(&tail_bound) {
            return Err(Error::invalid("tail bound must be in [0, 1]"));
        }
        let mut sum = 0.0;
        for &p in &probs {
            if !(-1e-15..=1.0 + 1e-15).contains(&p) {
                return Err(Error::invalid("probabilities must be in [0, 1]"));
            }
            sum += p;
        }
        if (sum + tail_bound - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("probabilities and tail must sum to 1"));
        }
        let probs = probs.into_iter().map(|p| p.clamp(0.0, 1.0)).collect();
        Ok(Self { probs, tail_bound })
    }

    pub fn fock(n: usize) -> Self {
        let mut probs = vec![0.0; n + 1];
        probs[n] = 1.0;
        Self {
            probs,
            tail_bound: 0.0,
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn cutoff(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn p(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    /// Mean and variance of the truncated distribution (tail ignored).
    pub fn moments(&self) -> MomentPair {
        let mut m = 0.0;
        let mut n2 = 0.0;
        for (n, &p) in self.probs.iter().enumerate() {
            let n = n as f64;
            m += n * p;
            n2 += n * n * p;
        }
        MomentPair::new(m, n2 - m * m)
    }
}

/// Additive noise moments, independent of the signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub m_noise: f64,
    pub s2_noise: f64,
}

impl NoiseSpec {
    pub fn new(m_noise: f64, s2_noise: f64) -> Result<Self> {
        if !(m_noise >= 0.0 && s2_noise >= 0.0) || !(m_noise.is_finite() && s2_noise.is_finite())
        {
            return Err(Error::invalid("noise moments must be finite and >= 0"));
        }
        Ok(Self { m_noise, s2_noise })
    }

    pub const fn none() -> Self {
        Self {
            m_noise: 0.0,
            s2_noise: 0.0,
        }
    }

    pub fn poissonian(nbar: f64) -> Result<Self> {
        Self::new(nbar, nbar)
    }

    pub fn thermal(nbar: f64) -> Result<Self> {
        Self::new(nbar, nbar * (nbar + 1.0))
    }
}

/// Loss with aggregate transmittance `eta` followed by additive noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec {
    eta: f64,
    pub noise: NoiseSpec,
}

impl ChannelSpec {
    pub fn new(eta: f64, noise: NoiseSpec) -> Result<Self> {
        check_eta(eta)?;
        Ok(Self { eta, noise })
    }

    pub fn lossy(eta: f64) -> Result<Self> {
        Self::new(eta, NoiseSpec::none())
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn apply(&self, p: MomentPair) -> MomentPair {
        apply_channel(p, self)
    }

    pub fn correct(&self, p: MomentPair) -> Result<MomentPair> {
        correct_channel(p, self)
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::invalid("transmittance must be in [0, 1]"));
    }
    Ok(())
}

/// `m' = eta m + m_noise`, `s2' = eta(1 - eta) m + eta^2 s2 + s2_noise`.
pub fn apply_channel(p: MomentPair, ch: &ChannelSpec) -> MomentPair {
    let e = ch.eta;
    MomentPair::new(
        e * p.m + ch.noise.m_noise,
        e * (1.0 - e) * p.m + e * e * p.s2 + ch.noise.s2_noise,
    )
}

/// Exact inverse of [`apply_channel`]. The result may be nonphysical when
/// the assumed loss or noise exceeds the true one; it is not clamped.
pub fn correct_channel(p: MomentPair, ch: &ChannelSpec) -> Result<MomentPair> {
    let e = ch.eta;
    if e == 0.0 {
        return Err(Error::NonInvertible);
    }
    let m = (p.m - ch.noise.m_noise) / e;
    let s2 = (p.s2 - ch.noise.s2_noise - e * (1.0 - e) * m) / (e * e);
    Ok(MomentPair::new(m, s2))
}

/// Fock state `n` after loss: `(eta n, eta(1 - eta) n)`.
pub fn lossy_fock_moments(n: u32, eta: f64) -> Result<MomentPair> {
    check_eta(eta)?;
    let n = n as f64;
    Ok(MomentPair::new(eta * n, eta * (1.0 - eta) * n))
}

/// Vacuum and single-photon probabilities of a lossy Fock state.
pub fn lossy_fock_probs(n: u32, eta: f64) -> Result<(f64, f64)> {
    check_eta(eta)?;
    let q = 1.0 - eta;
    let p0 = libm::pow(q, n as f64);
    let p1 = if n == 0 {
        0.0
    } else {
        n as f64 * eta * libm::pow(q, (n - 1) as f64)
    };
    Ok((p0, p1))
}

const PAT_TAIL_TARGET: f64 = 1e-10;

fn check_pat(k: u32, nbar: f64) -> Result<()> {
    if k < 1 {
        return Err(Error::invalid("photon-addition count must be >= 1"));
    }
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(Error::invalid("thermal occupation must be finite and >= 0"));
    }
    Ok(())
}

/// Smallest cutoff for which the photon-added thermal tail is below 1e-10.
pub fn photon_added_thermal_cutoff(k: u32, nbar: f64) -> Result<usize> {
    check_pat(k, nbar)?;
    let k = k as usize;
    if nbar == 0.0 {
        return Ok(k);
    }
    let q = nbar / (1.0 + nbar);
    let mut p = libm::pow(1.0 + nbar, -((k + 1) as f64));
    let mut n = k;
    loop {
        // p_{j+1}/p_j = (j + 1)/(j + 1 - k) q decreases in j, so the tail
        // beyond n is bounded by a geometric series with the ratio at n.
        let ratio = (n + 1) as f64 / (n + 1 - k) as f64 * q;
        if ratio < 1.0 && p * ratio / (1.0 - ratio) < PAT_TAIL_TARGET {
            return Ok(n);
        }
        p *= ratio;
        n += 1;
        if n > 1_000_000 {
            return Err(Error::invalid("thermal occupation too large for a finite cutoff"));
        }
    }
}

/// Photon-number distribution of the `k`-photon-added thermal state,
/// `p_n = C(n, k) nbar^{n-k} / (1 + nbar)^{n+1}` for `n >= k`.
pub fn photon_added_thermal_pmf(k: u32, nbar: f64, cutoff: usize) -> Result<PhotonPmf> {
    check_pat(k, nbar)?;
    let ku = k as usize;
    if cutoff < ku {
        return Err(Error::invalid("cutoff must be >= k"));
    }
    let q = nbar / (1.0 + nbar);
    let mut probs = vec![0.0; cutoff + 1];
    let mut p = libm::pow(1.0 + nbar, -((ku + 1) as f64));
    for n in ku..=cutoff {
        probs[n] = p;
        p *= (n + 1) as f64 / (n + 1 - ku) as f64 * q;
    }
    let sum: f64 = probs.iter().sum();
    PhotonPmf::new(probs, (1.0 - sum).max(0.0))
}

/// [`photon_added_thermal_pmf`] with the cutoff from
/// [`photon_added_thermal_cutoff`].
pub fn photon_added_thermal_pmf_auto(k: u32, nbar: f64) -> Result<PhotonPmf> {
    photon_added_thermal_pmf(k, nbar, photon_added_thermal_cutoff(k, nbar)?)
}

/// Moments of the `k`-photon-added thermal state after loss `eta`.
pub fn photon_added_thermal_moments(k: u32, nbar: f64, eta: f64) -> Result<MomentPair> {
    check_pat(k, nbar)?;
    check_eta(eta)?;
    let mean0 = k as f64 + (k as f64 + 1.0) * nbar;
    Ok(MomentPair::new(
        eta * mean0,
        eta * eta * (k as f64 + 1.0) * nbar * (nbar + 1.0) + eta * (1.0 - eta) * mean0,
    ))
}

/// Binomial thinning of a photon-number distribution. The tail bound is
/// carried over unchanged: thinned tail mass lands somewhere at or below
/// its original photon number, so it never exceeds the original bound.
pub fn apply_loss_pmf(pmf: &PhotonPmf, eta: f64) -> Result<PhotonPmf> {
    check_eta(eta)?;
    let len = pmf.probs.len();
    let mut out = vec![0.0; len];
    // row[j] = P(j survivors | n photons), updated in place from n - 1.
    let mut row = vec![0.0; len];
    row[0] = 1.0;
    for n in 0..len {
        if n > 0 {
            for j in (1..=n).rev() {
                row[j] = (1.0 - eta) * row[j] + eta * row[j - 1];
            }
            row[0] *= 1.0 - eta;
        }
        let p = pmf.probs[n];
        if p != 0.0 {
            for j in 0..=n {
                out[j] += p * row[j];
            }
        }
    }
    Ok(PhotonPmf {
        probs: out,
        tail_bound: pmf.tail_bound,
    })
}

/// Displaced squeezed vacuum on the boundary with mean `m`.
pub fn optimal_dsv_for_mean(m: f64) -> Result<GaussianSpec> {
    let r = ng_inverse_mean(m)?;
    let d2 = exp(2.0 * r) * expm1(4.0 * r) / 4.0;
    GaussianSpec::new(0.25, r, 0.0, sqrt(d2), 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::witness::{boundary_variance, ng_boundary, G2Point};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn close(a: MomentPair, b: MomentPair, tol: f64) -> bool {
        (a.m - b.m).abs() <= tol * b.m.abs().max(1.0) && (a.s2 - b.s2).abs() <= tol * b.s2.abs().max(1.0)
    }

    // Brute-force binomial thinning of a Fock state.
    fn binomial(n: u32, eta: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for j in 0..=n {
            let mut c = 1.0;
            for i in 0..j {
                c *= (n - i) as f64 / (i + 1) as f64;
            }
            out.push(c * eta.powi(j as i32) * (1.0 - eta).powi((n - j) as i32));
        }
        out
    }

    #[test]
    fn gaussian_references() {
        assert_eq!(GaussianSpec::vacuum().moments(), MomentPair::new(0.0, 0.0));
        let c = GaussianSpec::coherent(1.3, 0.0).unwrap().moments();
        assert!(close(c, MomentPair::new(1.69, 1.69), 1e-14));
        let t = GaussianSpec::thermal(0.7).unwrap().moments();
        assert!(close(t, MomentPair::new(0.7, 0.7 * 1.7), 1e-14));
    }

    #[test]
    fn spec_validation() {
        assert!(GaussianSpec::new(0.2, 0.0, 0.0, 0.0, 0.0).is_err());
        assert!(GaussianSpec::new(0.25, -0.1, 0.0, 0.0, 0.0).is_err());
        assert!(GaussianSpec::new(0.25, 0.1, f64::NAN, 0.0, 0.0).is_err());
        let g = GaussianSpec::new(0.25, 0.1, 4.0, 0.0, 0.0).unwrap();
        assert!((g.phi() - (4.0 - PI)).abs() < 1e-15);
        let g = GaussianSpec::new(0.25, 0.1, -0.5, 0.0, 0.0).unwrap();
        assert!((g.phi() - (PI - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn mixture_examples() {
        let single = GaussianSpec::new(0.4, 0.3, 0.5, 1.0, -0.2).unwrap();
        assert!(close(MixtureSpec::single(single).moments(), single.moments(), 1e-14));

        let mix = MixtureSpec::new(vec![
            (0.5, GaussianSpec::vacuum()),
            (0.5, GaussianSpec::thermal(2.0).unwrap()),
        ])
        .unwrap();
        assert!(close(mix.moments(), MomentPair::new(1.0, 4.0), 1e-14));

        // 60/40 mixture of optimal states with means 1 and 3 sits above the
        // boundary in second moment.
        let a = optimal_dsv_for_mean(1.0).unwrap();
        let b = optimal_dsv_for_mean(3.0).unwrap();
        let mix = MixtureSpec::new(vec![(0.6, a), (0.4, b)]).unwrap().moments();
        assert!((mix.m - 1.8).abs() < 1e-9);
        let on_curve = boundary_variance(1.8).unwrap() + 1.8 * 1.8;
        assert!(mix.second_moment() > on_curve);

        assert!(MixtureSpec::new(vec![]).is_err());
        assert!(MixtureSpec::new(vec![(0.5, a)]).is_err());
        assert!(MixtureSpec::new(vec![(1.5, a), (-0.5, b)]).is_err());
    }

    #[test]
    fn lossy_fock() {
        assert_eq!(lossy_fock_moments(4, 1.0).unwrap(), MomentPair::new(4.0, 0.0));
        assert_eq!(lossy_fock_moments(4, 0.0).unwrap(), MomentPair::new(0.0, 0.0));
        assert_eq!(lossy_fock_moments(2, 0.5).unwrap(), MomentPair::new(1.0, 0.5));
        assert_eq!(lossy_fock_probs(1, 1.0).unwrap(), (0.0, 1.0));
        assert_eq!(lossy_fock_probs(2, 0.5).unwrap(), (0.25, 0.5));
        assert!(lossy_fock_moments(2, 1.5).is_err());
        assert!(lossy_fock_probs(2, -0.1).is_err());
        for n in 1..8 {
            for &eta in &[0.1, 0.37, 0.9] {
                let b = binomial(n, eta);
                let (p0, p1) = lossy_fock_probs(n, eta).unwrap();
                assert!((p0 - b[0]).abs() < 1e-15 && (p1 - b[1]).abs() < 1e-15);
                assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn pat_pmf() {
        let p = photon_added_thermal_pmf_auto(3, 0.0).unwrap();
        assert_eq!(p.probs(), &[0.0, 0.0, 0.0, 1.0]);
        let p = photon_added_thermal_pmf_auto(1, 0.5).unwrap();
        assert!(p.tail_bound() < 1e-10);
        assert!(p.probs().iter().sum::<f64>() >= 1.0 - p.tail_bound() - 1e-15);
        assert!(photon_added_thermal_pmf(2, 0.3, 1).is_err());
        assert!(photon_added_thermal_pmf(0, 0.3, 5).is_err());

        // Direct term-by-term evaluation, independent of the recursion.
        let direct = |n: u32, k: u32, nbar: f64| {
            let mut c = 1.0;
            for i in 0..k {
                c *= (n - i) as f64 / (i + 1) as f64;
            }
            c * nbar.powi((n - k) as i32) / (1.0 + nbar).powi(n as i32 + 1)
        };
        let p = photon_added_thermal_pmf(2, 0.3, 40).unwrap();
        for n in 2..=40u32 {
            assert_relative_eq!(p.p(n as usize), direct(n, 2, 0.3), max_relative = 1e-12);
        }
    }

    #[test]
    fn pat_moments() {
        for k in 1..=3 {
            assert_eq!(
                photon_added_thermal_moments(k, 0.0, 0.6).unwrap(),
                lossy_fock_moments(k, 0.6).unwrap()
            );
        }
        // Thinned PMF oracle.
        let pmf = photon_added_thermal_pmf_auto(2, 0.3).unwrap();
        let thinned = apply_loss_pmf(&pmf, 0.7).unwrap().moments();
        let formula = photon_added_thermal_moments(2, 0.3, 0.7).unwrap();
        assert!(close(thinned, formula, 1e-8));
        for k in 1..=3 {
            for &nbar in &[0.1, 0.5, 2.0] {
                let mom = photon_added_thermal_pmf_auto(k, nbar).unwrap().moments();
                let formula = photon_added_thermal_moments(k, nbar, 1.0).unwrap();
                assert!(close(mom, formula, 1e-7), "k = {k}, nbar = {nbar}");
            }
        }
    }

    #[test]
    fn loss_pmf_examples() {
        let pmf = photon_added_thermal_pmf_auto(1, 0.4).unwrap();
        assert_eq!(apply_loss_pmf(&pmf, 1.0).unwrap(), pmf);
        for n in 1..7u32 {
            let thinned = apply_loss_pmf(&PhotonPmf::fock(n as usize), 0.35).unwrap();
            let (p0, p1) = lossy_fock_probs(n, 0.35).unwrap();
            assert!((thinned.p(0) - p0).abs() < 1e-15);
            assert!((thinned.p(1) - p1).abs() < 1e-15);
            let b = binomial(n, 0.35);
            for (j, bj) in b.iter().enumerate() {
                assert!((thinned.p(j) - bj).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn channel_examples() {
        let p = MomentPair::new(2.0, 0.3);
        let id = ChannelSpec::lossy(1.0).unwrap();
        assert_eq!(id.apply(p), p);

        let n = 3.0;
        let eta = 0.6;
        let nbar = 0.2;
        let ch = ChannelSpec::new(eta, NoiseSpec::poissonian(nbar).unwrap()).unwrap();
        let out = ch.apply(MomentPair::new(n, 0.0));
        assert!(close(out, MomentPair::new(eta * n + nbar, eta * (1.0 - eta) * n + nbar), 1e-15));
        assert_eq!(NoiseSpec::thermal(0.5).unwrap().s2_noise, 0.75);

        let lossy = lossy_fock_moments(3, 0.6).unwrap();
        let back = ChannelSpec::lossy(0.6).unwrap().correct(lossy).unwrap();
        assert!(close(back, MomentPair::new(3.0, 0.0), 1e-14));

        // Assuming more loss than there was drives the variance negative.
        let over = ChannelSpec::lossy(0.4).unwrap().correct(lossy).unwrap();
        assert!(over.s2 < 0.0 && over.is_nonphysical());

        assert_eq!(
            ChannelSpec::lossy(0.0).unwrap().correct(p),
            Err(Error::NonInvertible)
        );
        assert!(ChannelSpec::lossy(1.1).is_err());
        assert!(NoiseSpec::new(-0.1, 0.0).is_err());
    }

    #[test]
    fn optimal_dsv() {
        assert_eq!(optimal_dsv_for_mean(0.0).unwrap(), GaussianSpec::vacuum());
        for &m in &[0.01, 0.5, 1.0, 5.0, 20.0] {
            let g = optimal_dsv_for_mean(m).unwrap();
            let b = ng_boundary(g.r()).unwrap();
            assert!(close(g.moments(), b.moments(), 1e-10), "m = {m}");
            assert!((g.moments().m - m).abs() < 1e-10 * m.max(1.0));
        }
        assert!(optimal_dsv_for_mean(-1.0).is_err());
    }

    #[test]
    fn split_modes_example() {
        // A mean of 30 split as (5, 25) has more variance than (0, 30).
        let v = |m: f64| boundary_variance(m).unwrap();
        assert!(v(5.0) + v(25.0) > v(0.0) + v(30.0));
    }

    #[test]
    fn from_covariance_roundtrip() {
        let g = GaussianSpec::new(0.6, 0.4, 2.2, 0.3, -1.1).unwrap();
        let back = GaussianSpec::from_covariance(g.covariance(), g.dx(), g.dp()).unwrap();
        assert!((back.sigma2() - g.sigma2()).abs() < 1e-12);
        assert!((back.r() - g.r()).abs() < 1e-12);
        assert!((back.phi() - g.phi()).abs() < 1e-12);
    }

    #[test]
    fn attenuated_gaussian_matches_channel() {
        let g = GaussianSpec::new(0.3, 0.5, 0.7, 1.2, 0.4).unwrap();
        for &eta in &[0.2, 0.5, 0.9] {
            let direct = g.attenuate(eta).unwrap().moments();
            let via = ChannelSpec::lossy(eta).unwrap().apply(g.moments());
            assert!(close(direct, via, 1e-11), "eta = {eta}");
        }
    }

    fn spec() -> impl Strategy<Value = GaussianSpec> {
        (0.25f64..2.0, 0.0f64..1.0, 0.0f64..PI, -3.0f64..3.0, -3.0f64..3.0)
            .prop_map(|(s, r, phi, dx, dp)| GaussianSpec::new(s, r, phi, dx, dp).unwrap())
    }

    proptest! {
        #[test]
        fn second_moment_is_linear(a in spec(), b in spec(), w in 0.0f64..1.0) {
            let mix = MixtureSpec::new(vec![(w, a), (1.0 - w, b)]).unwrap().moments();
            let expect = w * a.moments().second_moment() + (1.0 - w) * b.moments().second_moment();
            prop_assert!((mix.second_moment() - expect).abs() <= 1e-10 * expect.max(1.0));
        }

        #[test]
        fn rotation_at_zero_is_optimal(
            s in 0.25f64..2.0, r in 0.0f64..1.0, dx in -3.0f64..3.0, phi in 0.0f64..PI
        ) {
            let at0 = GaussianSpec::new(s, r, 0.0, dx, 0.0).unwrap().moments();
            let rot = GaussianSpec::new(s, r, phi, dx, 0.0).unwrap().moments();
            prop_assert!((at0.m - rot.m).abs() <= 1e-12 * at0.m.max(1.0));
            prop_assert!(at0.s2 <= rot.s2 + 1e-10 * rot.s2.max(1.0));
        }

        #[test]
        fn squeezed_vacuum_replacement(
            s in 0.25f64..2.0, r in 0.0f64..1.0, phi in 0.0f64..PI, dx in -3.0f64..3.0
        ) {
            let g = GaussianSpec::new(s, r, phi, dx, 0.0).unwrap();
            let m = g.moments().m;
            let d2 = m + 0.5 - 0.5 * cosh(2.0 * r);
            prop_assert!(d2 >= -1e-12);
            let dsv = GaussianSpec::new(0.25, r, 0.0, sqrt(d2.max(0.0)), 0.0).unwrap().moments();
            prop_assert!((dsv.m - m).abs() <= 1e-10 * m.max(1.0));
            prop_assert!(dsv.s2 <= g.moments().s2 + 1e-10 * g.moments().s2.max(1.0));
        }

        #[test]
        fn gaussian_above_boundary(g in spec()) {
            let p = g.moments();
            let bound = boundary_variance(p.m).unwrap();
            prop_assert!(p.s2 >= bound - 1e-9 * bound.max(1.0));
        }

        #[test]
        fn single_mode_holds_all_photons(m1 in 0.0f64..20.0, m2 in 0.0f64..20.0) {
            let v = |m: f64| boundary_variance(m).unwrap();
            prop_assert!(v(m1) + v(m2) >= v(m1 + m2) - 1e-9 * v(m1 + m2).max(1.0));
        }

        #[test]
        fn thinning_matches_channel(k in 1u32..4, nbar in 0.0f64..1.5, eta in 0.0f64..1.0) {
            let pmf = photon_added_thermal_pmf_auto(k, nbar).unwrap();
            let thinned = apply_loss_pmf(&pmf, eta).unwrap();
            let via = ChannelSpec::lossy(eta).unwrap().apply(pmf.moments());
            prop_assert!(close(thinned.moments(), via, 1e-9));
            let total: f64 = thinned.probs().iter().sum::<f64>() + thinned.tail_bound();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }

        #[test]
        fn fock_g2_independent_of_loss(n in 1u32..20, eta in 1e-3f64..1.0) {
            let g = G2Point::from_moments(lossy_fock_moments(n, eta).unwrap()).unwrap();
            prop_assert!((g.g2 - (1.0 - 1.0 / n as f64)).abs() < 1e-9);
        }

        #[test]
        fn channel_roundtrip(
            m in 0.0f64..30.0, s2 in 0.0f64..30.0, eta in 0.05f64..1.0,
            mn in 0.0f64..2.0, sn in 0.0f64..4.0
        ) {
            let ch = ChannelSpec::new(eta, NoiseSpec::new(mn, sn).unwrap()).unwrap();
            let p = MomentPair::new(m, s2);
            let back = ch.correct(ch.apply(p)).unwrap();
            prop_assert!((back.m - m).abs() < 1e-12 * m.max(1.0) / eta);
            prop_assert!((back.s2 - s2).abs() < 1e-11 * (s2 + m + sn + 1.0) / (eta * eta));
        }
    }
}
