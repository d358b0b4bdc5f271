//! Seeded quadrature samplers and the sample-moment estimators built on them.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use libm::{cos, sin, sqrt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal, StandardNormal};

use super::{
    double_homodyne_correct, gaussian_quadrature_stats, homodyne_moments, phase_random_moments,
    Direction, QuadratureStats,
};
use crate::error::{Error, Result};
use crate::states::{GaussianSpec, MixtureSpec, PhotonPmf};
use crate::witness::MomentPair;

/// A state the samplers can draw quadratures from.
#[derive(Debug, Clone, PartialEq)]
pub enum QuadState {
    Gaussian(GaussianSpec),
    Mixture(MixtureSpec),
    /// A state diagonal in the number basis (Fock states, lossy Fock
    /// states, photon-added thermal states).
    NumberDiagonal(PhotonPmf),
}

impl QuadState {
    pub fn fock(n: usize) -> Self {
        QuadState::NumberDiagonal(PhotonPmf::fock(n))
    }

    pub fn describe(&self) -> String {
        match self {
            QuadState::Gaussian(g) => format!(
                "gaussian(sigma2={},r={},phi={},dx={},dp={})",
                g.sigma2(),
                g.r(),
                g.phi(),
                g.dx(),
                g.dp()
            ),
            QuadState::Mixture(m) => format!("mixture({} components)", m.components().len()),
            QuadState::NumberDiagonal(p) => {
                let nonzero: Vec<usize> = p
                    .probs()
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v > 0.0)
                    .map(|(n, _)| n)
                    .collect();
                if nonzero.len() == 1 && p.tail_bound() == 0.0 {
                    format!("fock({})", nonzero[0])
                } else {
                    format!("number_diagonal(cutoff={})", p.cutoff())
                }
            }
        }
    }

    /// Exact photon-number moments.
    pub fn moments(&self) -> MomentPair {
        match self {
            QuadState::Gaussian(g) => g.moments(),
            QuadState::Mixture(m) => m.moments(),
            QuadState::NumberDiagonal(p) => p.moments(),
        }
    }
}

/// Quadrature outcomes in one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub values: Vec<f64>,
    pub seed: u64,
    /// Angle of the quadrature; NaN for a phase-random local oscillator.
    pub phi: f64,
    pub source: String,
}

/// Simultaneous `x`/`p` outcomes of a double homodyne measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSampleSet {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub seed: u64,
    pub source: String,
}

/// Moment estimate with delta-method standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub moments: MomentPair,
    pub se_m: f64,
    pub se_s2: f64,
    pub nonphysical: bool,
}

/// Inverse-CDF tables of Fock-state quadrature densities.
struct FockTables {
    tables: Vec<Option<FockTable>>,
}

struct FockTable {
    q: Vec<f64>,
    cdf: Vec<f64>,
}

const FOCK_GRID: usize = 8192;

impl FockTable {
    /// Density `sqrt(2) psi_n(sqrt(2) q)^2` tabulated on
    /// `|q| <= sqrt(2n + 1) + 6` and integrated with the trapezoid rule.
    fn new(n: usize) -> Self {
        let lim = sqrt(2.0 * n as f64 + 1.0) + 6.0;
        let h = 2.0 * lim / FOCK_GRID as f64;
        let mut q = Vec::with_capacity(FOCK_GRID + 1);
        let mut dens = Vec::with_capacity(FOCK_GRID + 1);
        for i in 0..=FOCK_GRID {
            let x = -lim + i as f64 * h;
            let psi = hermite_function(n, SQRT_2 * x);
            q.push(x);
            dens.push(SQRT_2 * psi * psi);
        }
        let mut cdf = vec![0.0; FOCK_GRID + 1];
        for i in 1..=FOCK_GRID {
            cdf[i] = cdf[i - 1] + 0.5 * h * (dens[i] + dens[i - 1]);
        }
        let total = cdf[FOCK_GRID];
        for c in cdf.iter_mut() {
            *c /= total;
        }
        Self { q, cdf }
    }

    fn invert(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c < u).clamp(1, FOCK_GRID);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.q[i - 1] + t * (self.q[i] - self.q[i - 1])
    }
}

/// Normalized Hermite function `psi_n(y)` by the stable three-term
/// recurrence.
pub(crate) fn hermite_function(n: usize, y: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = libm::pow(PI, -0.25) * libm::exp(-0.5 * y * y);
    for k in 0..n {
        let kf = k as f64;
        let next = sqrt(2.0 / (kf + 1.0)) * y * cur - sqrt(kf / (kf + 1.0)) * prev;
        prev = cur;
        cur = next;
    }
    cur
}

impl FockTables {
    fn new() -> Self {
        Self { tables: Vec::new() }
    }

    fn sample(&mut self, n: usize, u: f64) -> f64 {
        if self.tables.len() <= n {
            self.tables.resize_with(n + 1, || None);
        }
        self.tables[n].get_or_insert_with(|| FockTable::new(n)).invert(u)
    }
}

/// Categorical draw from unnormalized weights.
fn pick<R: Rng>(rng: &mut R, weights: impl Iterator<Item = f64> + Clone) -> usize {
    let total: f64 = weights.clone().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            last = i;
        }
        acc += w;
        if u < acc {
            return i;
        }
    }
    last
}

struct Sampler {
    rng: ChaCha8Rng,
    fock: FockTables,
}

impl Sampler {
    fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            fock: FockTables::new(),
        }
    }

    fn gaussian(&mut self, g: &GaussianSpec, phi: f64) -> f64 {
        let (mu, var) = gaussian_quadrature_stats(g, phi);
        let z: f64 = self.rng.sample(StandardNormal);
        mu + sqrt(var) * z
    }

    fn quadrature(&mut self, state: &QuadState, phi: f64) -> f64 {
        match state {
            QuadState::Gaussian(g) => self.gaussian(g, phi),
            QuadState::Mixture(mix) => {
                let i = pick(&mut self.rng, mix.components().iter().map(|c| c.0));
                let g = mix.components()[i].1;
                self.gaussian(&g, phi)
            }
            QuadState::NumberDiagonal(pmf) => {
                let n = pick(&mut self.rng, pmf.probs().iter().copied());
                let u: f64 = self.rng.random();
                self.fock.sample(n, u)
            }
        }
    }
}

fn check_count(count: usize) -> Result<()> {
    if count == 0 {
        return Err(Error::invalid("sample count must be >= 1"));
    }
    Ok(())
}

/// `count` i.i.d. outcomes of the quadrature at angle `phi`, deterministic
/// in `seed`.
pub fn sample_quadrature(state: &QuadState, phi: f64, count: usize, seed: u64) -> Result<SampleSet> {
    check_count(count)?;
    if !phi.is_finite() {
        return Err(Error::invalid("quadrature angle must be finite"));
    }
    let mut s = Sampler::new(seed);
    let values = (0..count).map(|_| s.quadrature(state, phi)).collect();
    Ok(SampleSet {
        values,
        seed,
        phi,
        source: state.describe(),
    })
}

/// Homodyne outcomes with a uniformly random local-oscillator phase.
pub fn sample_phase_random(state: &QuadState, count: usize, seed: u64) -> Result<SampleSet> {
    check_count(count)?;
    let mut s = Sampler::new(seed);
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        let phi = s.rng.random::<f64>() * 2.0 * PI;
        values.push(s.quadrature(state, phi));
    }
    Ok(SampleSet {
        values,
        seed,
        phi: f64::NAN,
        source: state.describe(),
    })
}

/// Double homodyne outcomes `x = (x0 + xv)/sqrt 2`, `p = (p0 - pv)/sqrt 2`
/// with a vacuum port `(xv, pv)`.
///
/// Gaussian components are drawn from their Wigner function together with
/// the vacuum Wigner function. Number-diagonal states are drawn from the
/// Husimi function, which is the joint outcome distribution:
/// `|beta|^2 ~ Gamma(n + 1)` with a uniform phase, `x = Re beta / sqrt 2`.
pub fn sample_double_homodyne(state: &QuadState, count: usize, seed: u64) -> Result<JointSampleSet> {
    check_count(count)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vac = Normal::new(0.0, 0.5).expect("fixed parameters");
    let mut x = Vec::with_capacity(count);
    let mut p = Vec::with_capacity(count);
    let mut gammas: Vec<Option<Gamma<f64>>> = Vec::new();
    for _ in 0..count {
        let gauss = match state {
            QuadState::Gaussian(g) => Some(*g),
            QuadState::Mixture(mix) => {
                let i = pick(&mut rng, mix.components().iter().map(|c| c.0));
                Some(mix.components()[i].1)
            }
            QuadState::NumberDiagonal(_) => None,
        };
        if let Some(g) = gauss {
            let (x0, p0) = wigner_sample(&mut rng, &g);
            let xv = vac.sample(&mut rng);
            let pv = vac.sample(&mut rng);
            x.push((x0 + xv) / SQRT_2);
            p.push((p0 - pv) / SQRT_2);
        } else if let QuadState::NumberDiagonal(pmf) = state {
            let n = pick(&mut rng, pmf.probs().iter().copied());
            if gammas.len() <= n {
                gammas.resize(n + 1, None);
            }
            let gamma = gammas[n]
                .get_or_insert_with(|| Gamma::new(n as f64 + 1.0, 1.0).expect("shape > 0"));
            let radius = sqrt(gamma.sample(&mut rng));
            let theta = rng.random::<f64>() * 2.0 * PI;
            x.push(radius * cos(theta) / SQRT_2);
            p.push(radius * sin(theta) / SQRT_2);
        }
    }
    Ok(JointSampleSet {
        x,
        p,
        seed,
        source: state.describe(),
    })
}

fn wigner_sample<R: Rng>(rng: &mut R, g: &GaussianSpec) -> (f64, f64) {
    let c = g.covariance();
    // Cholesky factor of the 2x2 covariance.
    let l11 = sqrt(c[0][0]);
    let l21 = c[1][0] / l11;
    let l22 = sqrt((c[1][1] - l21 * l21).max(0.0));
    let z1: f64 = rng.sample(StandardNormal);
    let z2: f64 = rng.sample(StandardNormal);
    (g.dx() + l11 * z1, g.dp() + l21 * z1 + l22 * z2)
}

/// Running sums of per-sample feature vectors, for means and the sample
/// variance of linear combinations.
struct Features<const K: usize> {
    n: usize,
    sum: [f64; K],
    outer: [[f64; K]; K],
}

impl<const K: usize> Features<K> {
    fn new() -> Self {
        Self {
            n: 0,
            sum: [0.0; K],
            outer: [[0.0; K]; K],
        }
    }

    fn push(&mut self, f: [f64; K]) {
        self.n += 1;
        for i in 0..K {
            self.sum[i] += f[i];
            for j in 0..K {
                self.outer[i][j] += f[i] * f[j];
            }
        }
    }

    fn mean(&self) -> [f64; K] {
        let mut m = [0.0; K];
        for i in 0..K {
            m[i] = self.sum[i] / self.n as f64;
        }
        m
    }

    /// Variance of the sample mean of `grad . f`.
    fn var_of_mean(&self, grad: &[f64; K]) -> f64 {
        let n = self.n as f64;
        let mean = self.mean();
        let mut v = 0.0;
        for i in 0..K {
            for j in 0..K {
                let cov = self.outer[i][j] / n - mean[i] * mean[j];
                v += grad[i] * grad[j] * cov;
            }
        }
        (v / n).max(0.0)
    }
}

fn powers(values: &[f64]) -> Features<2> {
    let mut f = Features::new();
    for &q in values {
        let q2 = q * q;
        f.push([q2, q2 * q2]);
    }
    f
}

fn require_nonempty(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::invalid("sample set is empty"));
    }
    Ok(())
}

/// Four-direction homodyne estimate. Each set's angle must be one of the
/// four directions; all four must be present.
pub fn estimate_homodyne4(sets: &[SampleSet]) -> Result<Estimate> {
    let mut stats = QuadratureStats::new();
    let mut feats: [Option<Features<2>>; 4] = [None, None, None, None];
    for s in sets {
        require_nonempty(&s.values)?;
        let d = Direction::from_angle(s.phi)
            .ok_or_else(|| Error::invalid("sample angle is not one of the four directions"))?;
        let f = powers(&s.values);
        let [q2, q4] = f.mean();
        stats.set_direction(d, q2, q4);
        feats[d as usize] = Some(f);
    }
    let moments = homodyne_moments(&stats)?;
    let sum_q2: f64 = Direction::ALL
        .iter()
        .map(|d| stats.get(*d).map(|v| v.0).unwrap_or(0.0))
        .sum();
    let mut var_m = 0.0;
    let mut var_s2 = 0.0;
    for f in feats.iter().flatten() {
        var_m += f.var_of_mean(&[0.5, 0.0]);
        var_s2 += f.var_of_mean(&[-0.5 * sum_q2, 2.0 / 3.0]);
    }
    Ok(Estimate {
        moments,
        se_m: sqrt(var_m),
        se_s2: sqrt(var_s2),
        nonphysical: moments.is_nonphysical(),
    })
}

/// Phase-random local oscillator estimate from one sample set.
pub fn estimate_phase_random(set: &SampleSet) -> Result<Estimate> {
    require_nonempty(&set.values)?;
    let f = powers(&set.values);
    let [q2, q4] = f.mean();
    let moments = phase_random_moments(q2, q4)?;
    Ok(Estimate {
        moments,
        se_m: sqrt(f.var_of_mean(&[2.0, 0.0])),
        se_s2: sqrt(f.var_of_mean(&[-8.0 * q2, 8.0 / 3.0])),
        nonphysical: moments.is_nonphysical(),
    })
}

/// Double homodyne estimate with the vacuum-port correction applied.
pub fn estimate_double_homodyne(set: &JointSampleSet) -> Result<Estimate> {
    require_nonempty(&set.x)?;
    if set.x.len() != set.p.len() {
        return Err(Error::invalid("x and p samples must pair up"));
    }
    let mut f = Features::<5>::new();
    for (&x, &p) in set.x.iter().zip(&set.p) {
        let (x2, p2) = (x * x, p * p);
        f.push([x2, x2 * x2, p2, p2 * p2, x2 * p2]);
    }
    let [a, b, c, d, e] = f.mean();
    let cov = e - a * c;
    let corrected = double_homodyne_correct(a, b, c, d, cov);
    // Gradients of m and s2 with respect to the five sample means.
    let grad_m = [2.0, 0.0, 2.0, 0.0, 0.0];
    let grad_s2 = [
        -3.0 - 4.0 * (2.0 * a - 0.25) - 8.0 * c,
        4.0,
        -3.0 - 4.0 * (2.0 * c - 0.25) - 8.0 * a,
        4.0,
        8.0,
    ];
    Ok(Estimate {
        moments: corrected.moments,
        se_m: sqrt(f.var_of_mean(&grad_m)),
        se_s2: sqrt(f.var_of_mean(&grad_s2)),
        nonphysical: corrected.nonphysical,
    })
}
