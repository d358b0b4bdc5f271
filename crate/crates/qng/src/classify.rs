use qng_core::measurement::{estimate_homodyne4, estimate_phase_random, Estimate};
use qng_core::measurement::{pia_invert, GainEstimate, PiaMode};
use qng_core::prob_witness::{classify_probs, ProbPoint};
use qng_core::states::{correct_channel, ChannelSpec, NoiseSpec};
use qng_core::witness::{
    classify_g2, classify_intensity, classify_moments, G2Point, IntensityMoments, MomentPair,
    Verdict,
};
use serde::Serialize;
use serde_json::json;

use crate::cli::{ClassifyArgs, NoiseStage};
use crate::io::{read_samples_file, Table};
use crate::{invalid, parse_noise, CliError, Output};

#[derive(Debug, Serialize)]
struct Moments {
    m: f64,
    s2: f64,
}

impl From<MomentPair> for Moments {
    fn from(p: MomentPair) -> Self {
        Self { m: p.m, s2: p.s2 }
    }
}

enum Input {
    Moments(MomentPair),
    Intensity(IntensityMoments),
    G2(G2Point),
    Probs(ProbPoint),
    Amplified { big_m: f64, big_s2: f64 },
    Samples(Estimate),
}

impl Input {
    fn name(&self) -> &'static str {
        match self {
            Input::Moments(_) => "moments",
            Input::Intensity(_) => "intensity",
            Input::G2(_) => "g2",
            Input::Probs(_) => "probabilities",
            Input::Amplified { .. } => "amplified",
            Input::Samples(_) => "samples",
        }
    }
}

fn pair(a: Option<f64>, b: Option<f64>, names: &str) -> Result<Option<(f64, f64)>, CliError> {
    match (a, b) {
        (Some(a), Some(b)) => Ok(Some((a, b))),
        (None, None) => Ok(None),
        _ => invalid(format!("{names} must be given together")),
    }
}

fn read_input(a: &ClassifyArgs) -> Result<Input, CliError> {
    let mut found = Vec::new();
    // --m pairs with --s2, or with --g2.
    if let Some(g2) = a.g2 {
        let m = a.m.ok_or_else(|| CliError::Invalid("--g2 needs --m".into()))?;
        if a.s2.is_some() {
            return invalid("--g2 and --s2 are alternative inputs");
        }
        found.push(Input::G2(G2Point { m, g2 }));
    } else if let Some((m, s2)) = pair(a.m, a.s2, "--m and --s2")? {
        found.push(Input::Moments(MomentPair::new(m, s2)));
    }
    if let Some((w1, w2)) = pair(a.w1, a.w2, "--w1 and --w2")? {
        found.push(Input::Intensity(IntensityMoments { w1, w2 }));
    }
    if let Some((p0, p1)) = pair(a.p0, a.p1, "--p0 and --p1")? {
        found.push(Input::Probs(ProbPoint::new(p0, p1)?));
    }
    if let Some((big_m, big_s2)) = pair(a.M, a.S2, "--M and --S2")? {
        found.push(Input::Amplified { big_m, big_s2 });
    }
    if !a.samples.is_empty() {
        let sets = a
            .samples
            .iter()
            .map(|p| read_samples_file(p))
            .collect::<Result<Vec<_>, _>>()?;
        let est = match sets.as_slice() {
            [one] if one.phi.is_nan() => estimate_phase_random(one)?,
            [_, _, _, _] => estimate_homodyne4(&sets)?,
            _ => {
                return invalid(
                    "--samples takes one phase-random file (phi=NaN) or four homodyne directions",
                )
            }
        };
        found.push(Input::Samples(est));
    }
    if found.len() > 1 {
        let names: Vec<_> = found.iter().map(Input::name).collect();
        return invalid(format!("conflicting inputs: {}", names.join(", ")));
    }
    found
        .pop()
        .ok_or_else(|| CliError::Invalid("no input given".into()))
}

pub(crate) fn run(a: &ClassifyArgs) -> Result<Output, CliError> {
    let input = read_input(a)?;
    let noise = a.noise.as_deref().map(parse_noise).transpose()?;
    let correcting = noise.is_some() || a.eta != 1.0;
    let amplified = matches!(input, Input::Amplified { .. });
    if a.gain.is_some() && !amplified {
        return invalid("--gain applies to --M/--S2 input");
    }
    if amplified && a.gain.is_none() {
        return invalid("--M/--S2 need --gain");
    }

    let mut corrections = Vec::new();
    let mut nonphysical = false;
    let mut se = None;
    let input_name = input.name();

    let (moments, verdict, probs) = match input {
        Input::Probs(p) => {
            if correcting {
                return invalid("loss and noise correction need moment input");
            }
            let v = classify_probs(p);
            (None, v, Some(p))
        }
        other => {
            let (raw, native) = match other {
                Input::Moments(p) => (p, classify_moments(p)),
                Input::Intensity(w) => (w.to_moments(), classify_intensity(w)),
                Input::G2(g) => (g.to_moments(), classify_g2(g)),
                Input::Samples(est) => {
                    se = Some(json!({"m": est.se_m, "s2": est.se_s2}));
                    nonphysical |= est.nonphysical;
                    (est.moments, classify_moments(est.moments))
                }
                Input::Amplified { mut big_m, mut big_s2 } => {
                    let g = a.gain.expect("checked above");
                    if let (Some(n), NoiseStage::Post) = (noise, a.noise_stage) {
                        big_m -= n.m_noise;
                        big_s2 -= n.s2_noise;
                        corrections.push(format!(
                            "post-amplifier noise m={} s2={}",
                            n.m_noise, n.s2_noise
                        ));
                    }
                    let gain = GainEstimate::new(
                        g,
                        a.gain_min.unwrap_or(g),
                        a.gain_max.unwrap_or(g),
                    )?;
                    let mode = if a.conservative {
                        PiaMode::Conservative
                    } else {
                        PiaMode::Point
                    };
                    let c = pia_invert(big_m, big_s2, &gain, mode);
                    corrections.push(format!(
                        "gain {} ({})",
                        if a.conservative { gain.g_min() } else { gain.g_est() },
                        if a.conservative { "conservative" } else { "point" }
                    ));
                    nonphysical |= c.nonphysical;
                    (c.moments, classify_moments(c.moments))
                }
                Input::Probs(_) => unreachable!(),
            };
            let channel_noise = match (noise, amplified, a.noise_stage) {
                (Some(_), true, NoiseStage::Post) => None,
                (n, _, _) => n,
            };
            if a.eta != 1.0 || channel_noise.is_some() {
                let n = channel_noise.unwrap_or_else(NoiseSpec::none);
                let ch = ChannelSpec::new(a.eta, n)?;
                let p = correct_channel(raw, &ch)?;
                corrections.push(format!("channel eta={} noise m={} s2={}", a.eta, n.m_noise, n.s2_noise));
                let v = classify_moments(p);
                nonphysical |= p.is_nonphysical();
                (Some(p), v, None)
            } else {
                nonphysical |= raw.is_nonphysical();
                (Some(raw), native, None)
            }
        }
    };
    nonphysical |= verdict.nonphysical;
    Ok(report(input_name, moments, probs, verdict, corrections, se, nonphysical))
}

fn report(
    input: &str,
    moments: Option<MomentPair>,
    probs: Option<ProbPoint>,
    verdict: Verdict,
    corrections: Vec<String>,
    se: Option<serde_json::Value>,
    nonphysical: bool,
) -> Output {
    let margin = if verdict.margin.is_finite() {
        json!(verdict.margin)
    } else {
        serde_json::Value::Null
    };
    let mut j = json!({
        "input": input,
        "corrections": corrections,
        "tag": verdict.tag.as_str(),
        "margin": margin,
        "nonphysical": nonphysical,
    });
    if let Some(p) = moments {
        j["moments"] = json!(Moments::from(p));
    }
    if let Some(p) = probs {
        j["probabilities"] = json!({"p0": p.p0, "p1": p.p1});
    }
    if let Some(se) = se {
        j["standard_errors"] = se;
    }
    let mut t = Table::new(&["input", "m", "s2", "p0", "p1", "tag", "margin", "nonphysical"]);
    let nan = f64::NAN;
    t.push(vec![
        input.into(),
        moments.map_or(nan, |p| p.m).into(),
        moments.map_or(nan, |p| p.s2).into(),
        probs.map_or(nan, |p| p.p0).into(),
        probs.map_or(nan, |p| p.p1).into(),
        verdict.tag.as_str().into(),
        verdict.margin.into(),
        if nonphysical { "true" } else { "false" }.into(),
    ]);
    let mut out = Output::report(j, t);
    out.nonphysical = nonphysical;
    out
}
