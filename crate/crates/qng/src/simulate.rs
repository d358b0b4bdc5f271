use std::fs;

use qng_core::measurement::{
    classify_amplified, estimate_double_homodyne, estimate_homodyne4, estimate_phase_random,
    pia_forward, pia_invert, sample_double_homodyne, sample_phase_random, sample_quadrature,
    Direction, Estimate, GainEstimate, PiaMode, SampleSet,
};
use qng_core::witness::{classify_moments, MomentPair};
use serde_json::json;

use crate::cli::{Scheme, SimulateArgs};
use crate::io::{write_samples_file, Table};
use crate::{invalid, parse_state, CliError, Output};

pub const MIN_COUNT: usize = 100;

/// Independent per-direction seeds derived from the user seed (SplitMix64).
fn sub_seed(seed: u64, i: u64) -> u64 {
    let mut z = seed.wrapping_add((i + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::Homodyne4 => "homodyne4",
        Scheme::PhaseRandom => "phase_random",
        Scheme::DoubleHomodyne => "double_homodyne",
        Scheme::Pia => "pia",
    }
}

fn z(est: f64, truth: f64, se: f64) -> f64 {
    if se > 0.0 {
        (est - truth) / se
    } else if est == truth {
        0.0
    } else {
        f64::INFINITY.copysign(est - truth)
    }
}

fn finite(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        serde_json::Value::Null
    }
}

fn run_pia(a: &SimulateArgs) -> Result<Output, CliError> {
    let g = a.gain.ok_or_else(|| CliError::Invalid("pia needs --gain".into()))?;
    let (label, input) = match (a.m, a.s2) {
        (Some(m), Some(s2)) => (format!("moments(m={m},s2={s2})"), MomentPair::new(m, s2)),
        _ => {
            let st = parse_state(&a.state)?;
            (st.describe(), st.moments())
        }
    };
    let amp = pia_forward(input, g)?;
    let rec = pia_invert(amp.mean, amp.variance, &GainEstimate::exact(g)?, PiaMode::Point);
    let v = classify_amplified(amp.mean, amp.variance, g);
    let inner = classify_moments(rec.moments);
    let j = json!({
        "scheme": "pia",
        "analytic": true,
        "state": label,
        "gain": g,
        "input": {"m": input.m, "s2": input.s2},
        "amplified": {"M": amp.mean, "S2": amp.variance, "W2": amp.w2},
        "recovered": {"m": rec.moments.m, "s2": rec.moments.s2, "nonphysical": rec.nonphysical},
        "verdict": {"tag": v.tag.as_str(), "margin": finite(v.margin)},
        "recovered_verdict": {"tag": inner.tag.as_str(), "margin": finite(inner.margin)},
    });
    let mut t = Table::new(&[
        "scheme", "state", "gain", "m", "s2", "M", "S2", "W2", "m_recovered", "s2_recovered", "tag",
        "margin",
    ]);
    t.push(vec![
        "pia".into(),
        label.into(),
        g.into(),
        input.m.into(),
        input.s2.into(),
        amp.mean.into(),
        amp.variance.into(),
        amp.w2.into(),
        rec.moments.m.into(),
        rec.moments.s2.into(),
        v.tag.as_str().into(),
        v.margin.into(),
    ]);
    let mut out = Output::report(j, t);
    out.nonphysical = rec.nonphysical || input.is_nonphysical();
    Ok(out)
}

pub(crate) fn run(a: &SimulateArgs) -> Result<Output, CliError> {
    if a.scheme == Scheme::Pia {
        return run_pia(a);
    }
    if a.m.is_some() || a.gain.is_some() {
        return invalid("--m/--s2/--gain apply to the pia scheme");
    }
    if a.count < MIN_COUNT {
        return invalid(format!("--count must be >= {MIN_COUNT}"));
    }
    let state = parse_state(&a.state)?;
    let name = scheme_name(a.scheme);
    let mut files: Vec<(String, SampleSet)> = Vec::new();
    let est: Estimate = match a.scheme {
        Scheme::Homodyne4 => {
            let mut sets = Vec::new();
            for (i, d) in Direction::ALL.iter().enumerate() {
                let set = sample_quadrature(&state, d.angle(), a.count, sub_seed(a.seed, i as u64))?;
                files.push((format!("{name}_{}.csv", [0, 45, 90, 135][i]), set.clone()));
                sets.push(set);
            }
            estimate_homodyne4(&sets)?
        }
        Scheme::PhaseRandom => {
            let set = sample_phase_random(&state, a.count, sub_seed(a.seed, 0))?;
            let est = estimate_phase_random(&set)?;
            files.push((format!("{name}.csv"), set));
            est
        }
        Scheme::DoubleHomodyne => {
            let joint = sample_double_homodyne(&state, a.count, sub_seed(a.seed, 0))?;
            let est = estimate_double_homodyne(&joint)?;
            for (label, values, phi) in [("x", &joint.x, 0.0), ("p", &joint.p, std::f64::consts::FRAC_PI_2)] {
                files.push((
                    format!("{name}_{label}.csv"),
                    SampleSet {
                        values: values.clone(),
                        seed: joint.seed,
                        phi,
                        source: joint.source.clone(),
                    },
                ));
            }
            est
        }
        Scheme::Pia => unreachable!(),
    };
    if let Some(dir) = &a.samples_dir {
        fs::create_dir_all(dir)?;
        for (file, set) in &files {
            write_samples_file(&dir.join(file), set)?;
        }
    }

    let truth = state.moments();
    let v = classify_moments(est.moments);
    let (zm, zs) = (z(est.moments.m, truth.m, est.se_m), z(est.moments.s2, truth.s2, est.se_s2));
    let j = json!({
        "scheme": name,
        "state": state.describe(),
        "count": a.count,
        "seed": a.seed,
        "truth": {"m": truth.m, "s2": truth.s2},
        "estimate": {
            "m": est.moments.m,
            "s2": est.moments.s2,
            "se_m": est.se_m,
            "se_s2": est.se_s2,
            "nonphysical": est.nonphysical,
        },
        "z": {"m": finite(zm), "s2": finite(zs)},
        "verdict": {"tag": v.tag.as_str(), "margin": finite(v.margin)},
    });
    let mut t = Table::new(&[
        "scheme", "state", "count", "seed", "m_true", "s2_true", "m", "s2", "se_m", "se_s2", "tag",
        "margin", "nonphysical",
    ]);
    t.push(vec![
        name.into(),
        state.describe().into(),
        (a.count as f64).into(),
        a.seed.to_string().into(),
        truth.m.into(),
        truth.s2.into(),
        est.moments.m.into(),
        est.moments.s2.into(),
        est.se_m.into(),
        est.se_s2.into(),
        v.tag.as_str().into(),
        v.margin.into(),
        if est.nonphysical { "true" } else { "false" }.into(),
    ]);
    let mut out = Output::report(j, t);
    out.nonphysical = est.nonphysical;
    Ok(out)
}
