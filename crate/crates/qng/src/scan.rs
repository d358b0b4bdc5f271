use qng_core::oracle::{tightness_scan, ScanGrid};
use qng_core::states::GaussianSpec;
use serde_json::{json, Value};

use crate::cli::ScanArgs;
use crate::io::Table;
use crate::{CliError, Output};

fn spec_json(g: &GaussianSpec) -> Value {
    json!({"sigma2": g.sigma2(), "r": g.r(), "phi": g.phi(), "dx": g.dx(), "dp": g.dp()})
}

pub(crate) fn run(a: &ScanArgs) -> Result<Output, CliError> {
    let grid = ScanGrid {
        r_step: a.r_step,
        d_step: a.d_step,
        phi_count: a.phi_count,
        random_mixtures: a.mixtures,
        mixture_grid: a.mixture_grid,
        confirm: a.confirm,
        seed: a.seed,
    };
    let rep = tightness_scan(&a.m, &grid)?;
    let mut t = Table::new(&[
        "m", "boundary_s2", "min_s2", "margin", "min_single_s2", "min_mixture_s2", "argmin_sigma2",
        "argmin_r", "argmin_phi", "argmin_d", "argmin_matches", "counterexamples", "passed",
    ]);
    let mut targets = Vec::new();
    for x in &rep.targets {
        targets.push(json!({
            "m": x.m,
            "boundary_s2": x.boundary_s2,
            "min_s2": x.min_s2(),
            "margin": x.margin(),
            "min_single_s2": x.min_single_s2,
            "min_mixture_s2": if x.min_mixture_s2.is_finite() { json!(x.min_mixture_s2) } else { Value::Null },
            "argmin": spec_json(&x.argmin),
            "optimal": spec_json(&x.optimal),
            "argmin_matches": x.argmin_matches,
            "evaluated": x.evaluated,
            "fock_checks": x.fock_checks,
            "fock_max_dev": x.fock_max_dev,
            "counterexamples": x.counterexamples.iter().map(|c| json!({
                "s2": c.s2,
                "components": c.components.iter().map(|(w, g)| json!({"weight": w, "state": spec_json(g)})).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "passed": x.passed(),
        }));
        t.push(vec![
            x.m.into(),
            x.boundary_s2.into(),
            x.min_s2().into(),
            x.margin().into(),
            x.min_single_s2.into(),
            x.min_mixture_s2.into(),
            x.argmin.sigma2().into(),
            x.argmin.r().into(),
            x.argmin.phi().into(),
            x.argmin.dx().into(),
            x.argmin_matches.to_string().into(),
            x.counterexamples.len().to_string().into(),
            x.passed().to_string().into(),
        ]);
    }
    let j = json!({
        "grid": {
            "r_step": grid.r_step,
            "d_step": grid.d_step,
            "phi_count": grid.phi_count,
            "random_mixtures": grid.random_mixtures,
            "mixture_grid": grid.mixture_grid,
            "confirm": grid.confirm,
            "seed": grid.seed,
        },
        "passed": rep.passed(),
        "targets": targets,
    });
    let mut out = Output::report(j, t);
    out.failed = !rep.passed();
    Ok(out)
}
