//! Grid and random search for Gaussian states or two-component Gaussian
//! mixtures whose variance falls below the boundary at a fixed mean.
//!
//! Single states are parameterized by `(r, phi, d)` with the displacement
//! along x (photon statistics are phase-insensitive, so only the angle
//! between squeezing and displacement matters); `sigma2` is then fixed by
//! the mean. The search is evidence for tightness, not a proof.

use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{acosh, cosh, fabs, fmod, sqrt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::fock::{build_gaussian_state_auto, pmf_of};
use crate::error::{Error, Result};
use crate::states::{gaussian_moments, optimal_dsv_for_mean, GaussianSpec};
use crate::witness::{boundary_variance, MEAN_EPS};

/// Allowed undershoot of the boundary before a point counts as a
/// counterexample.
pub const SCAN_TOLERANCE: f64 = 1e-6;
/// Largest target mean accepted by [`tightness_scan`].
pub const SCAN_MEAN_MAX: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanGrid {
    pub r_step: f64,
    pub d_step: f64,
    pub phi_count: usize,
    /// Random two-component mixtures per target.
    pub random_mixtures: usize,
    /// Points per axis in the grid of mixtures of two boundary states.
    pub mixture_grid: usize,
    /// Lowest single-state candidates rebuilt in the Fock basis.
    pub confirm: usize,
    pub seed: u64,
}

impl Default for ScanGrid {
    fn default() -> Self {
        Self {
            r_step: 0.02,
            d_step: 0.05,
            phi_count: 12,
            random_mixtures: 2000,
            mixture_grid: 40,
            confirm: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub s2: f64,
    pub components: Vec<(f64, GaussianSpec)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanTarget {
    pub m: f64,
    pub boundary_s2: f64,
    pub min_single_s2: f64,
    pub min_mixture_s2: f64,
    pub argmin: GaussianSpec,
    pub best_mixture: Vec<(f64, GaussianSpec)>,
    pub optimal: GaussianSpec,
    pub argmin_matches: bool,
    pub evaluated: usize,
    pub fock_checks: usize,
    /// Largest deviation between Fock-basis and analytic moments among the
    /// rebuilt candidates.
    pub fock_max_dev: f64,
    pub counterexamples: Vec<Counterexample>,
}

impl ScanTarget {
    pub fn min_s2(&self) -> f64 {
        self.min_single_s2.min(self.min_mixture_s2)
    }

    pub fn margin(&self) -> f64 {
        self.min_s2() - self.boundary_s2
    }

    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty() && self.argmin_matches && self.fock_max_dev <= SCAN_TOLERANCE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub grid: ScanGrid,
    pub targets: Vec<ScanTarget>,
}

impl ScanReport {
    pub fn passed(&self) -> bool {
        self.targets.iter().all(ScanTarget::passed)
    }
}

fn r_max_for_mean(m: f64) -> f64 {
    acosh(2.0 * m + 1.0) / 2.0
}

fn d_max_for(m: f64, r: f64) -> f64 {
    sqrt((m + 0.5 - cosh(2.0 * r) / 2.0).max(0.0))
}

/// Gaussian with squeezing `r`, angle `phi`, displacement `d` along x and
/// the thermal variance that makes the mean equal `m`.
fn gaussian_with_mean(m: f64, r: f64, phi: f64, d: f64) -> Option<GaussianSpec> {
    let sigma2 = (m + 0.5 - d * d) / (2.0 * cosh(2.0 * r));
    if sigma2 < 0.25 - 1e-12 {
        return None;
    }
    GaussianSpec::new(sigma2.max(0.25), r, phi, d, 0.0).ok()
}

fn random_gaussian(rng: &mut ChaCha8Rng, m: f64) -> GaussianSpec {
    let r = rng.random::<f64>() * r_max_for_mean(m);
    let d = rng.random::<f64>() * d_max_for(m, r);
    let phi = rng.random::<f64>() * PI;
    gaussian_with_mean(m, r, phi, d).unwrap_or_else(|| GaussianSpec::new(0.25, r, phi, 0.0, 0.0).unwrap())
}

fn mixture_s2(parts: &[(f64, GaussianSpec)]) -> (f64, f64) {
    let mut mean = 0.0;
    let mut second = 0.0;
    for (w, g) in parts {
        let p = gaussian_moments(g);
        mean += w * p.m;
        second += w * (p.s2 + p.m * p.m);
    }
    (mean, second - mean * mean)
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = fmod(fabs(a - b), PI);
    d.min(PI - d)
}

struct Search {
    m: f64,
    floor: f64,
    evaluated: usize,
    counterexamples: Vec<Counterexample>,
}

impl Search {
    fn record(&mut self, s2: f64, parts: &[(f64, GaussianSpec)]) {
        self.evaluated += 1;
        if s2 < self.floor - SCAN_TOLERANCE {
            self.counterexamples.push(Counterexample {
                s2,
                components: parts.to_vec(),
            });
        }
    }
}

fn scan_target(m: f64, grid: &ScanGrid, rng: &mut ChaCha8Rng) -> Result<ScanTarget> {
    let boundary_s2 = boundary_variance(m)?;
    let optimal = optimal_dsv_for_mean(m)?;
    let mut search = Search {
        m,
        floor: boundary_s2,
        evaluated: 0,
        counterexamples: Vec::new(),
    };

    // Single states, keeping the lowest few for Fock confirmation.
    let mut singles: Vec<(f64, GaussianSpec)> = Vec::new();
    if m < MEAN_EPS {
        singles.push((0.0, GaussianSpec::vacuum()));
        search.record(0.0, &[(1.0, GaussianSpec::vacuum())]);
    } else {
        let r_max = r_max_for_mean(m);
        let mut rs: Vec<f64> = (0..)
            .map(|k| k as f64 * grid.r_step)
            .take_while(|r| *r < r_max)
            .collect();
        rs.push(r_max);
        for &r in &rs {
            let d_max = d_max_for(m, r);
            let mut ds: Vec<f64> = (0..)
                .map(|k| k as f64 * grid.d_step)
                .take_while(|d| *d < d_max)
                .collect();
            ds.push(d_max);
            for j in 0..grid.phi_count.max(1) {
                let phi = j as f64 * PI / grid.phi_count.max(1) as f64;
                for &d in &ds {
                    let Some(g) = gaussian_with_mean(m, r, phi, d) else {
                        continue;
                    };
                    let s2 = gaussian_moments(&g).s2;
                    search.record(s2, &[(1.0, g)]);
                    singles.push((s2, g));
                }
            }
        }
    }
    singles.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (min_single_s2, argmin) = singles[0];

    // Two-component mixtures with mean m.
    let mut best_mixture: (f64, Vec<(f64, GaussianSpec)>) = (f64::INFINITY, Vec::new());
    let mut consider = |search: &mut Search, m1: f64, m2: f64, g1: GaussianSpec, g2: GaussianSpec| {
        let w1 = (m2 - search.m) / (m2 - m1);
        let parts = [(w1, g1), (1.0 - w1, g2)];
        let (_, s2) = mixture_s2(&parts);
        search.record(s2, &parts);
        if s2 < best_mixture.0 {
            best_mixture = (s2, parts.to_vec());
        }
    };
    if m >= MEAN_EPS {
        let span = 2.0 * m + 2.0;
        for _ in 0..grid.random_mixtures {
            let m1 = rng.random::<f64>() * m;
            let m2 = m + (1.0 - rng.random::<f64>()) * span;
            let g1 = random_gaussian(rng, m1);
            let g2 = random_gaussian(rng, m2);
            consider(&mut search, m1, m2, g1, g2);
        }
        let n = grid.mixture_grid;
        for i in 0..n {
            let m1 = i as f64 * m / n as f64;
            let g1 = optimal_dsv_for_mean(m1)?;
            for j in 1..=n {
                let m2 = m + j as f64 * span / n as f64;
                let g2 = optimal_dsv_for_mean(m2)?;
                consider(&mut search, m1, m2, g1, g2);
            }
        }
    }
    let (min_mixture_s2, best_mixture) = best_mixture;

    // Rebuild the lowest candidates in the Fock basis.
    let mut fock_checks = 0;
    let mut fock_max_dev = 0.0f64;
    let mut fock_check = |search: &mut Search, parts: &[(f64, GaussianSpec)]| -> Result<()> {
        let mut mean = 0.0;
        let mut second = 0.0;
        for (w, g) in parts {
            let p = pmf_of(&build_gaussian_state_auto(g)?)?.moments();
            let a = gaussian_moments(g);
            fock_max_dev = fock_max_dev
                .max(fabs(p.m - a.m) / a.m.max(1.0))
                .max(fabs(p.s2 - a.s2) / a.s2.max(1.0));
            mean += w * p.m;
            second += w * (p.s2 + p.m * p.m);
        }
        fock_checks += 1;
        let s2 = second - mean * mean;
        if fabs(mean - search.m) <= SCAN_TOLERANCE {
            search.evaluated -= 1;
            search.record(s2, parts);
        }
        Ok(())
    };
    for (_, g) in singles.iter().take(grid.confirm) {
        fock_check(&mut search, &[(1.0, *g)])?;
    }
    if !best_mixture.is_empty() {
        fock_check(&mut search, &best_mixture)?;
    }

    let argmin_matches = fabs(argmin.r() - optimal.r()) <= grid.r_step
        && fabs(argmin.dx() - optimal.dx()) <= grid.d_step
        && (argmin.dx() < grid.d_step
            || angle_gap(argmin.phi(), optimal.phi()) <= PI / grid.phi_count.max(1) as f64)
        && argmin.sigma2() - 0.25 <= grid.d_step * (2.0 * optimal.dx() + grid.d_step);

    Ok(ScanTarget {
        m,
        boundary_s2,
        min_single_s2,
        min_mixture_s2,
        argmin,
        best_mixture,
        optimal,
        argmin_matches,
        evaluated: search.evaluated,
        fock_checks,
        fock_max_dev,
        counterexamples: search.counterexamples,
    })
}

/// Searches Gaussian states and two-component mixtures at each target
/// mean for a variance below the boundary.
pub fn tightness_scan(m_targets: &[f64], grid: &ScanGrid) -> Result<ScanReport> {
    if !(grid.r_step > 0.0 && grid.d_step > 0.0) || grid.phi_count == 0 {
        return Err(Error::invalid("grid steps must be positive"));
    }
    if let Some(m) = m_targets
        .iter()
        .find(|m| !(m.is_finite() && **m >= 0.0 && **m <= SCAN_MEAN_MAX))
    {
        return Err(Error::invalid(alloc::format!(
            "scan target mean {m} outside [0, {SCAN_MEAN_MAX}]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(grid.seed);
    let targets = m_targets
        .iter()
        .map(|&m| scan_target(m, grid, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanReport {
        grid: *grid,
        targets,
    })
}
