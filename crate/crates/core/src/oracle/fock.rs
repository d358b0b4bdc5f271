//! Truncated number-basis density matrices for Gaussian states.

use alloc::vec::Vec;

use libm::{ceil, cos, hypot, sin, sqrt};
use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::states::{GaussianSpec, PhotonPmf};

type C64 = Complex<f64>;

fn cabs(z: C64) -> f64 {
    hypot(z.re, z.im)
}

/// Largest trace mass allowed outside the retained block.
pub const TRACE_DEFICIT_MAX: f64 = 1e-8;

/// Density operator restricted to photon numbers `0..dim`.
#[derive(Debug, Clone)]
pub struct TruncatedState {
    pub dim: usize,
    pub density: DMatrix<C64>,
    pub trace_deficit: f64,
}

impl TruncatedState {
    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.density[(i, i)].re).sum()
    }

    /// Largest |rho_ij - conj(rho_ji)|.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..=i {
                let d = self.density[(i, j)] - self.density[(j, i)].conj();
                worst = worst.max(cabs(d));
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let eig = self.density.clone().symmetric_eigenvalues();
        eig.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Weighted sum of states of equal dimension.
    pub fn mix(parts: &[(f64, TruncatedState)]) -> Result<Self> {
        let dim = parts
            .first()
            .map(|(_, s)| s.dim)
            .ok_or_else(|| Error::invalid("mixture needs at least one component"))?;
        if parts.iter().any(|(_, s)| s.dim != dim) {
            return Err(Error::invalid("mixture components must share a cutoff"));
        }
        let mut density = DMatrix::<C64>::zeros(dim, dim);
        let mut deficit = 0.0;
        for (w, s) in parts {
            density += &s.density * C64::new(*w, 0.0);
            deficit += w * s.trace_deficit;
        }
        Ok(Self {
            dim,
            density,
            trace_deficit: deficit,
        })
    }
}

/// `ceil(4 (m + 3 s + 10))` from the analytic moments.
pub fn auto_dim(g: &GaussianSpec) -> usize {
    let p = g.moments();
    ceil(4.0 * (p.m + 3.0 * sqrt(p.s2.max(0.0)) + 10.0)) as usize
}

/// Largest norm of the operator applied per series step.
const STEP_NORM: f64 = 8.0;
const SERIES_MAX_TERMS: usize = 80;

/// `exp(A) v` by scaling and squaring of a Taylor series, for an operator
/// given only through its action. `norm` must bound the 1-norm of `A`.
pub fn expm_action<F>(apply: F, norm: f64, v: &[C64]) -> Vec<C64>
where
    F: Fn(&[C64], &mut [C64]),
{
    let steps = ceil(norm / STEP_NORM).max(1.0) as usize;
    let scale = 1.0 / steps as f64;
    let l1 = |x: &[C64]| x.iter().map(|z| cabs(*z)).sum::<f64>();
    let mut out = v.to_vec();
    let mut term = alloc::vec![C64::new(0.0, 0.0); v.len()];
    let mut next = term.clone();
    for _ in 0..steps {
        term.copy_from_slice(&out);
        let size = l1(&out);
        for k in 1..=SERIES_MAX_TERMS {
            apply(&term, &mut next);
            let c = scale / k as f64;
            for (t, n) in term.iter_mut().zip(&next) {
                *t = n * c;
            }
            for (o, t) in out.iter_mut().zip(&term) {
                *o += t;
            }
            if l1(&term) <= 1e-18 * size {
                break;
            }
        }
    }
    out
}

/// Dense `exp(A)`, column by column.
pub fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    let norm = a
        .column_iter()
        .map(|c| c.iter().map(|z| cabs(*z)).sum::<f64>())
        .fold(0.0, f64::max);
    let apply = |x: &[C64], y: &mut [C64]| {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = (0..n).map(|j| a[(i, j)] * x[j]).sum();
        }
    };
    let mut out = DMatrix::<C64>::zeros(n, n);
    for j in 0..n {
        let mut e = alloc::vec![C64::new(0.0, 0.0); n];
        e[j] = C64::new(1.0, 0.0);
        let col = expm_action(apply, norm, &e);
        for i in 0..n {
            out[(i, j)] = col[i];
        }
    }
    out
}

/// `(r/2)(a^2 - a†^2)` applied to `x`.
fn squeeze_generator(r: f64, x: &[C64], y: &mut [C64]) {
    let n = x.len();
    for k in 0..n {
        let mut acc = C64::new(0.0, 0.0);
        if k + 2 < n {
            acc += x[k + 2] * sqrt(((k + 1) * (k + 2)) as f64);
        }
        if k >= 2 {
            acc -= x[k - 2] * sqrt((k * (k - 1)) as f64);
        }
        y[k] = acc * (r / 2.0);
    }
}

/// `alpha a† - conj(alpha) a` applied to `x`.
fn displacement_generator(alpha: C64, x: &[C64], y: &mut [C64]) {
    let n = x.len();
    for k in 0..n {
        let mut acc = C64::new(0.0, 0.0);
        if k >= 1 {
            acc += alpha * x[k - 1] * sqrt(k as f64);
        }
        if k + 1 < n {
            acc -= alpha.conj() * x[k + 1] * sqrt((k + 1) as f64);
        }
        y[k] = acc;
    }
}

/// Extra dimensions carried through the exponentials so that truncation
/// artifacts at the edge stay outside the retained block.
fn padding(dim: usize) -> usize {
    dim / 2 + 10
}

/// The thermal sum stops once the remaining mass is below this; the
/// dropped mass shows up in the trace deficit.
const THERMAL_TAIL_MIN: f64 = 1e-12;

/// Thermal state squeezed along x, rotated by `phi`, then displaced.
///
/// Each thermal number state is carried through the squeeze, rotation and
/// displacement unitaries separately, so the cost is linear in the
/// working dimension per state.
pub fn build_gaussian_state(g: &GaussianSpec, dim: usize) -> Result<TruncatedState> {
    if dim == 0 {
        return Err(Error::invalid("dim must be >= 1"));
    }
    let n = dim + padding(dim);
    let nbar = g.thermal_occupation();
    let ratio = nbar / (1.0 + nbar);
    let r = g.r();
    let alpha = C64::new(g.dx(), g.dp());
    let squeeze_norm = r * n as f64;
    let disp_norm = 2.0 * cabs(alpha) * sqrt(n as f64);

    let mut density = DMatrix::<C64>::zeros(dim, dim);
    let mut weight = 1.0 / (1.0 + nbar);
    for k in 0..n {
        if weight * (1.0 + nbar) < THERMAL_TAIL_MIN {
            break;
        }
        let mut psi = alloc::vec![C64::new(0.0, 0.0); n];
        psi[k] = C64::new(1.0, 0.0);
        if r > 0.0 {
            psi = expm_action(|x, y| squeeze_generator(r, x, y), squeeze_norm, &psi);
        }
        if g.phi() != 0.0 {
            // exp(i phi N) is diagonal.
            for (j, z) in psi.iter_mut().enumerate() {
                let t = g.phi() * j as f64;
                *z *= C64::new(cos(t), sin(t));
            }
        }
        if cabs(alpha) > 0.0 {
            psi = expm_action(|x, y| displacement_generator(alpha, x, y), disp_norm, &psi);
        }
        for j in 0..dim {
            let wj = psi[j] * weight;
            for i in 0..dim {
                density[(i, j)] += psi[i] * wj.conj();
            }
        }
        weight *= ratio;
    }

    let density = (&density + density.adjoint()) * C64::new(0.5, 0.0);
    let trace: f64 = (0..dim).map(|i| density[(i, i)].re).sum();
    let trace_deficit = (1.0 - trace).max(0.0);
    if trace_deficit > TRACE_DEFICIT_MAX {
        return Err(Error::InsufficientCutoff {
            dim,
            deficit: trace_deficit,
            suggested: dim + dim / 2 + 10,
        });
    }
    Ok(TruncatedState {
        dim,
        density,
        trace_deficit,
    })
}

/// Bound on the tail contribution to the second moment, relative to the
/// variance, accepted by [`build_gaussian_state_auto`].
pub const TAIL_MOMENT_MAX: f64 = 1e-7;

/// [`build_gaussian_state`] starting at [`auto_dim`]. The cutoff grows
/// until the trace check passes and `trace_deficit * dim^2`, which bounds
/// the mass beyond the cutoff weighted by `n^2` at its edge, is below
/// [`TAIL_MOMENT_MAX`] times the variance.
pub fn build_gaussian_state_auto(g: &GaussianSpec) -> Result<TruncatedState> {
    let scale = g.moments().s2.max(1.0);
    let mut dim = auto_dim(g);
    for _ in 0..8 {
        match build_gaussian_state(g, dim) {
            Err(Error::InsufficientCutoff { suggested, .. }) => dim = suggested,
            Ok(s) if s.trace_deficit * (dim * dim) as f64 > TAIL_MOMENT_MAX * scale => {
                dim += dim / 2 + 10;
            }
            other => return other,
        }
    }
    build_gaussian_state(g, dim)
}

/// Diagonal of the density matrix.
pub fn pmf_of(state: &TruncatedState) -> Result<PhotonPmf> {
    let probs: Vec<f64> = (0..state.dim)
        .map(|i| state.density[(i, i)].re.max(0.0))
        .collect();
    let total: f64 = probs.iter().sum();
    PhotonPmf::new(probs, (1.0 - total).max(state.trace_deficit))
}
