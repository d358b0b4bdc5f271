use qng_core::depth::{
    noisy_fock_family, qng_depth, table1, table2, FamilyCurve, TableRow, Witness,
};

use crate::cli::{DepthArgs, WitnessArg};
use crate::io::Table;
use crate::{invalid, parse_noise, CliError, Output};

fn witnesses(w: WitnessArg) -> &'static [Witness] {
    match w {
        WitnessArg::Moment => &[Witness::Moment],
        WitnessArg::Prob => &[Witness::Probability],
        WitnessArg::Both => &[Witness::Probability, Witness::Moment],
    }
}

/// Columns `family, parameter, witness, eta_min, depth`.
pub fn depth_table(rows: &[TableRow]) -> Table {
    let mut t = Table::new(&["family", "parameter", "witness", "eta_min", "depth"]);
    for r in rows {
        t.push(vec![
            r.family.as_str().into(),
            r.parameter.as_str().into(),
            r.witness.as_str().into(),
            r.eta_min.into(),
            r.depth.into(),
        ]);
    }
    t
}

fn push(rows: &mut Vec<TableRow>, family: &str, parameter: String, f: &FamilyCurve, w: Witness) -> Result<(), CliError> {
    let d = qng_depth(f, w)?;
    rows.push(TableRow {
        family: family.into(),
        parameter,
        witness: w,
        eta_min: d.eta_min,
        depth: d.depth,
    });
    Ok(())
}

pub(crate) fn run(a: &DepthArgs) -> Result<Output, CliError> {
    if !a.table1 && !a.table2 && a.fock.is_empty() && a.pat.is_none() {
        return invalid("choose --table1, --table2, --fock or --pat");
    }
    let noise = a.noise.as_deref().map(parse_noise).transpose()?;
    if noise.is_some() && a.fock.is_empty() {
        return invalid("--noise applies to --fock");
    }
    let mut rows = Vec::new();
    let keep = |r: &TableRow| witnesses(a.witness).contains(&r.witness);
    if a.table1 {
        rows.extend(table1()?.into_iter().filter(keep));
    }
    if a.table2 {
        rows.extend(table2()?.into_iter().filter(keep));
    }
    for &n in &a.fock {
        match noise {
            None => {
                let f = FamilyCurve::lossy_fock(n)?;
                for &w in witnesses(a.witness) {
                    push(&mut rows, "fock", format!("n={n}"), &f, w)?;
                }
            }
            Some(ns) => {
                // Photon-number probabilities are not available under
                // additive noise given only by its moments.
                if a.witness == WitnessArg::Prob {
                    return invalid("the probability witness needs noise-free families");
                }
                let f = noisy_fock_family(n, ns)?;
                let label = format!(
                    "n={n};noise=m:{}:s2:{}",
                    ns.m_noise, ns.s2_noise
                );
                push(&mut rows, "fock", label, &f, Witness::Moment)?;
            }
        }
    }
    if let Some(k) = a.pat {
        let f = FamilyCurve::photon_added_thermal(k, a.nbar)?;
        for &w in witnesses(a.witness) {
            push(&mut rows, "photon_added_thermal", format!("k={k};nbar={}", a.nbar), &f, w)?;
        }
    }
    Ok(Output::table(depth_table(&rows)))
}
