//! QNG depth: the largest loss `1 - eta_min` a state family tolerates before
//! its statistics stop violating a witness.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::prob_witness::{classify_probs, ProbPoint};
use crate::states::{
    apply_channel, apply_loss_pmf, lossy_fock_moments, lossy_fock_probs,
    photon_added_thermal_moments, photon_added_thermal_pmf_auto, ChannelSpec, NoiseSpec, PhotonPmf,
};
use crate::witness::{classify_moments, MomentPair, Verdict};

/// Grid step of the coarse scan that brackets crossings.
pub const GRID_STEP: f64 = 0.01;
/// Width of the final bisection bracket.
pub const ETA_TOL: f64 = 1e-8;
/// When a family's probabilities are inconclusive at `eta = 1` (no vacuum
/// and no single photon), the top of the scan is evaluated here instead.
pub const ETA_TOP_OFFSET: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Witness {
    Moment,
    Probability,
}

impl Witness {
    pub fn as_str(&self) -> &'static str {
        match self {
            Witness::Moment => "moment",
            Witness::Probability => "probability",
        }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

type MomentFn = Box<dyn Fn(f64) -> MomentPair + Send + Sync>;
type ProbFn = Box<dyn Fn(f64) -> (f64, f64) + Send + Sync>;

/// A state family parameterized by the transmittance `eta` of a loss
/// channel.
pub enum FamilyCurve {
    LossyFock(u32),
    PhotonAddedThermal {
        k: u32,
        nbar: f64,
        pmf: PhotonPmf,
    },
    Custom {
        label: String,
        moments: MomentFn,
        probs: Option<ProbFn>,
    },
}

impl fmt::Debug for FamilyCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FamilyCurve {
    pub fn lossy_fock(n: u32) -> Result<Self> {
        if n < 1 {
            return Err(Error::invalid("Fock number must be >= 1"));
        }
        Ok(FamilyCurve::LossyFock(n))
    }

    pub fn photon_added_thermal(k: u32, nbar: f64) -> Result<Self> {
        let pmf = photon_added_thermal_pmf_auto(k, nbar)?;
        Ok(FamilyCurve::PhotonAddedThermal { k, nbar, pmf })
    }

    pub fn custom(
        label: impl Into<String>,
        moments: impl Fn(f64) -> MomentPair + Send + Sync + 'static,
        probs: Option<ProbFn>,
    ) -> Self {
        FamilyCurve::Custom {
            label: label.into(),
            moments: Box::new(moments),
            probs,
        }
    }

    pub fn label(&self) -> String {
        match self {
            FamilyCurve::LossyFock(n) => format!("fock(n={n})"),
            FamilyCurve::PhotonAddedThermal { k, nbar, .. } => {
                format!("photon_added_thermal(k={k},nbar={nbar})")
            }
            FamilyCurve::Custom { label, .. } => label.clone(),
        }
    }

    pub fn moments(&self, eta: f64) -> Result<MomentPair> {
        match self {
            FamilyCurve::LossyFock(n) => lossy_fock_moments(*n, eta),
            FamilyCurve::PhotonAddedThermal { k, nbar, .. } => {
                photon_added_thermal_moments(*k, *nbar, eta)
            }
            FamilyCurve::Custom { moments, .. } => {
                if !(0.0..=1.0).contains(&eta) {
                    return Err(Error::invalid("transmittance must be in [0, 1]"));
                }
                Ok(moments(eta))
            }
        }
    }

    pub fn probs(&self, eta: f64) -> Result<ProbPoint> {
        let (p0, p1) = match self {
            FamilyCurve::LossyFock(n) => lossy_fock_probs(*n, eta)?,
            FamilyCurve::PhotonAddedThermal { pmf, .. } => {
                let thinned = apply_loss_pmf(pmf, eta)?;
                (thinned.p(0), thinned.p(1))
            }
            FamilyCurve::Custom { probs, .. } => match probs {
                Some(f) => {
                    if !(0.0..=1.0).contains(&eta) {
                        return Err(Error::invalid("transmittance must be in [0, 1]"));
                    }
                    f(eta)
                }
                None => return Err(Error::MissingProbabilities),
            },
        };
        ProbPoint::new(p0, p1)
    }

    fn verdict(&self, eta: f64, witness: Witness) -> Result<Verdict> {
        Ok(match witness {
            Witness::Moment => classify_moments(self.moments(eta)?),
            Witness::Probability => classify_probs(self.probs(eta)?),
        })
    }

    fn inconclusive_probs(&self, eta: f64) -> Result<bool> {
        let p = self.probs(eta)?;
        Ok(p.p0 == 0.0 && p.p1 == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthResult {
    pub eta_min: f64,
    pub depth: f64,
    pub witness: Witness,
    pub converged: bool,
    /// Final bracket `(not witnessed, witnessed)` around `eta_min`.
    pub bracket: (f64, f64),
    /// Every crossing found by the scan, from the largest `eta` down.
    pub crossings: Vec<f64>,
    pub multi_crossing: bool,
}

impl DepthResult {
    fn new(eta_min: f64, witness: Witness, bracket: (f64, f64), crossings: Vec<f64>) -> Self {
        let multi_crossing = crossings.len() > 1;
        // Depths 0 and 1 are decided by the scan itself.
        let at_end = eta_min == 0.0 || eta_min == 1.0;
        Self {
            eta_min,
            depth: 1.0 - eta_min,
            witness,
            converged: at_end || (bracket.1 - bracket.0).abs() <= ETA_TOL,
            bracket,
            crossings,
            multi_crossing,
        }
    }
}

/// Bisect between `lo` (not witnessed) and `hi` (witnessed).
fn refine<F: Fn(f64) -> Result<bool>>(qng: &F, mut lo: f64, mut hi: f64) -> Result<(f64, f64)> {
    while (hi - lo).abs() > ETA_TOL {
        let mid = 0.5 * (lo + hi);
        if qng(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

/// Depth of `family` under `witness`.
///
/// The scan runs from `eta = 1` down to `eta = 0.01` in steps of 0.01; the
/// first grid point that is not witnessed brackets `eta_min`, which is then
/// refined by bisection. Further sign changes below it are refined too and
/// reported in `crossings`. A family witnessed on the whole grid has depth 1;
/// one not witnessed at the top has depth 0.
pub fn qng_depth(family: &FamilyCurve, witness: Witness) -> Result<DepthResult> {
    let qng = |eta: f64| -> Result<bool> { Ok(family.verdict(eta, witness)?.is_qng()) };

    let mut top = 1.0;
    if witness == Witness::Probability && family.inconclusive_probs(1.0)? {
        top = 1.0 - ETA_TOP_OFFSET;
    }
    if !qng(top)? {
        return Ok(DepthResult::new(1.0, witness, (top, top), Vec::new()));
    }

    let steps = libm::round(1.0 / GRID_STEP) as usize;
    let grid = |i: usize| if i == 0 { top } else { 1.0 - i as f64 * GRID_STEP };
    let mut crossings = Vec::new();
    let mut first: Option<(f64, f64)> = None;
    let mut prev = true;
    for i in 1..steps {
        let eta = grid(i);
        let cur = qng(eta)?;
        if cur != prev {
            let (lo, hi) = if prev {
                refine(&qng, eta, grid(i - 1))?
            } else {
                // Re-entry into the witnessed region going down.
                let (a, b) = refine(&|e| qng(e).map(|q| !q), grid(i - 1), eta)?;
                (b, a)
            };
            crossings.push(0.5 * (lo + hi));
            if first.is_none() {
                first = Some((lo, hi));
            }
        }
        prev = cur;
    }
    match first {
        None => Ok(DepthResult::new(0.0, witness, (0.0, grid(steps - 1)), crossings)),
        Some((lo, hi)) => Ok(DepthResult::new(0.5 * (lo + hi), witness, (lo, hi), crossings)),
    }
}

pub fn qng_depth_moment(family: &FamilyCurve) -> Result<DepthResult> {
    qng_depth(family, Witness::Moment)
}

pub fn qng_depth_prob(family: &FamilyCurve) -> Result<DepthResult> {
    qng_depth(family, Witness::Probability)
}

/// Large-`n` depth of Fock states under the moment witness,
/// `(3/8) 4^{2/3} n^{-1/3}`.
pub fn asymptotic_fock_depth(n: u32) -> Result<f64> {
    if n < 1 {
        return Err(Error::invalid("Fock number must be >= 1"));
    }
    Ok(3.0 / 8.0 * libm::cbrt(16.0) / libm::cbrt(n as f64))
}

/// Lossy Fock state `n` followed by independent additive detection noise.
pub fn noisy_fock_family(n: u32, noise: NoiseSpec) -> Result<FamilyCurve> {
    FamilyCurve::lossy_fock(n)?;
    let ch = ChannelSpec::new(1.0, noise)?;
    Ok(FamilyCurve::custom(
        format!("fock(n={n})+noise(m={},s2={})", noise.m_noise, noise.s2_noise),
        move |eta| {
            let n = n as f64;
            apply_channel(MomentPair::new(eta * n, eta * (1.0 - eta) * n), &ch)
        },
        None,
    ))
}

/// Moment-witness depth of a lossy Fock state with additive noise.
pub fn depth_with_noise(n: u32, noise: NoiseSpec) -> Result<DepthResult> {
    qng_depth_moment(&noisy_fock_family(n, noise)?)
}

/// Thermal occupation at which the lossless single-photon-added thermal
/// state sits on the moment boundary.
pub fn pats_threshold() -> Result<f64> {
    let margin = |nbar: f64| {
        photon_added_thermal_moments(1, nbar, 1.0)
            .map(|p| classify_moments(p).margin)
            .unwrap_or(f64::NAN)
    };
    crate::roots::bisect(margin, 0.0, 1.0, 1e-12)
}

/// One entry of a depth table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub family: String,
    pub parameter: String,
    pub witness: Witness,
    pub eta_min: f64,
    pub depth: f64,
}

fn row(family: &str, parameter: String, r: &DepthResult) -> TableRow {
    TableRow {
        family: family.into(),
        parameter,
        witness: r.witness,
        eta_min: r.eta_min,
        depth: r.depth,
    }
}

/// Depths of Fock states `n = 1..=5` under both witnesses.
pub fn table1() -> Result<Vec<TableRow>> {
    let mut rows = Vec::new();
    for n in 1..=5u32 {
        let f = FamilyCurve::lossy_fock(n)?;
        for w in [Witness::Probability, Witness::Moment] {
            rows.push(row("fock", format!("n={n}"), &qng_depth(&f, w)?));
        }
    }
    Ok(rows)
}

/// Depths of `k`-photon-added thermal states, `k = 1..=3`,
/// `nbar = 0, 0.1, .., 0.4`, under both witnesses.
pub fn table2() -> Result<Vec<TableRow>> {
    let mut rows = Vec::new();
    for i in 0..=4 {
        let nbar = i as f64 / 10.0;
        for k in 1..=3u32 {
            let f = FamilyCurve::photon_added_thermal(k, nbar)?;
            for w in [Witness::Probability, Witness::Moment] {
                rows.push(row(
                    "photon_added_thermal",
                    format!("k={k};nbar={nbar}"),
                    &qng_depth(&f, w)?,
                ));
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::witness::classify_moments;
    use proptest::prelude::*;

    #[test]
    fn fock_moment_depths() {
        let d = |n| qng_depth_moment(&FamilyCurve::lossy_fock(n).unwrap()).unwrap();
        assert_eq!(d(1).depth, 1.0);
        assert!((d(2).depth - 0.82).abs() < 0.005);
        let mut prev = 1.0;
        for n in 2..=12 {
            let r = d(n);
            assert!(r.converged && !r.multi_crossing);
            assert!(r.depth <= prev);
            prev = r.depth;
        }
    }

    #[test]
    fn fock_prob_depths() {
        let d = |n| qng_depth_prob(&FamilyCurve::lossy_fock(n).unwrap()).unwrap().depth;
        assert_eq!(d(1), 1.0);
        assert!((d(2) - 0.63).abs() < 0.005);
        assert!((d(5) - 0.42).abs() < 0.005);
    }

    #[test]
    fn pat_depths() {
        let f = FamilyCurve::photon_added_thermal(1, 0.3).unwrap();
        assert!((qng_depth_moment(&f).unwrap().depth - 0.44).abs() < 0.005);
        let f = FamilyCurve::photon_added_thermal(3, 0.4).unwrap();
        assert!((qng_depth_prob(&f).unwrap().depth - 0.35).abs() < 0.01);
    }

    #[test]
    fn pat_at_zero_matches_fock() {
        for k in 1..=3 {
            let a = FamilyCurve::photon_added_thermal(k, 0.0).unwrap();
            let b = FamilyCurve::lossy_fock(k).unwrap();
            for w in [Witness::Moment, Witness::Probability] {
                let (da, db) = (qng_depth(&a, w).unwrap(), qng_depth(&b, w).unwrap());
                assert!((da.depth - db.depth).abs() < 1e-9, "k = {k}, {w}");
            }
        }
    }

    #[test]
    fn bisection_certificate() {
        for n in 2..=6 {
            let f = FamilyCurve::lossy_fock(n).unwrap();
            let r = qng_depth_moment(&f).unwrap();
            assert!(r.depth > 0.0 && r.depth < 1.0);
            let v = classify_moments(f.moments(r.eta_min).unwrap());
            assert!(v.margin.abs() < 1e-6);
            assert!(classify_moments(f.moments(r.eta_min + 1e-4).unwrap()).is_qng());
        }
    }

    #[test]
    fn asymptotic_law() {
        let a1 = asymptotic_fock_depth(1).unwrap();
        assert!((a1 - 0.375 * 16f64.cbrt()).abs() < 1e-15);
        assert!(asymptotic_fock_depth(0).is_err());
        let mut prev_gap = f64::INFINITY;
        for n in [3u32, 6, 10, 15] {
            let num = qng_depth_moment(&FamilyCurve::lossy_fock(n).unwrap()).unwrap().depth;
            let gap = (num / asymptotic_fock_depth(n).unwrap() - 1.0).abs();
            assert!(gap < prev_gap, "n = {n}");
            prev_gap = gap;
        }
    }

    #[test]
    fn noise_examples() {
        for n in 1..=5 {
            let base = qng_depth_moment(&FamilyCurve::lossy_fock(n).unwrap()).unwrap();
            let zero = depth_with_noise(n, NoiseSpec::none()).unwrap();
            assert!((base.eta_min - zero.eta_min).abs() < 1e-9);
            for &nbar in &[0.05, 0.1, 0.2] {
                let p = depth_with_noise(n, NoiseSpec::poissonian(nbar).unwrap()).unwrap();
                let t = depth_with_noise(n, NoiseSpec::thermal(nbar).unwrap()).unwrap();
                assert!(p.depth >= t.depth, "n = {n}, nbar = {nbar}");
            }
        }
        let a = depth_with_noise(3, NoiseSpec::poissonian(0.2).unwrap()).unwrap();
        let b = qng_depth_moment(&FamilyCurve::lossy_fock(3).unwrap()).unwrap();
        assert!(a.depth < b.depth);
    }

    #[test]
    fn external_loss_scaling() {
        for n in 2..=5u32 {
            let base = qng_depth_moment(&FamilyCurve::lossy_fock(n).unwrap()).unwrap();
            let eta_loss = 0.95;
            let f = FamilyCurve::custom(
                "pre-attenuated fock",
                move |eta| lossy_fock_moments(n, eta * eta_loss).unwrap(),
                None,
            );
            let r = qng_depth_moment(&f).unwrap();
            assert!((r.eta_min - base.eta_min / eta_loss).abs() < 1e-6, "n = {n}");
        }
    }

    #[test]
    fn pats_threshold_value() {
        let t = pats_threshold().unwrap();
        assert!((t - 0.4).abs() < 0.02);
        let below = photon_added_thermal_moments(1, t - 0.01, 1.0).unwrap();
        assert!(classify_moments(below).is_qng());
        let f = FamilyCurve::photon_added_thermal(1, t + 0.01).unwrap();
        assert_eq!(qng_depth_moment(&f).unwrap().depth, 0.0);
    }

    #[test]
    fn custom_family_without_probs() {
        let f = FamilyCurve::custom("x", |eta| MomentPair::new(eta, 0.0), None);
        assert_eq!(qng_depth_prob(&f), Err(Error::MissingProbabilities));
    }

    #[test]
    fn multi_crossing_is_flagged() {
        // Witnessed near eta = 1 and again on an interval lower down.
        let f = FamilyCurve::custom(
            "wiggle",
            |eta| {
                let m = 2.0 * eta;
                let dip = eta > 0.3 && eta < 0.5;
                let s2 = if eta > 0.8 || dip { 0.0 } else { 10.0 };
                MomentPair::new(m, s2)
            },
            None,
        );
        let r = qng_depth_moment(&f).unwrap();
        assert!(r.multi_crossing);
        assert_eq!(r.crossings.len(), 3);
        assert!((r.eta_min - 0.8).abs() < 1e-7);
    }

    proptest! {
        #[test]
        fn depth_in_range(k in 1u32..4, nbar in 0.0f64..0.6) {
            let f = FamilyCurve::photon_added_thermal(k, nbar).unwrap();
            for w in [Witness::Moment, Witness::Probability] {
                let r = qng_depth(&f, w).unwrap();
                prop_assert!((0.0..=1.0).contains(&r.eta_min));
                prop_assert_eq!(r.depth, 1.0 - r.eta_min);
            }
        }
    }
}
