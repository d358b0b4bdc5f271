use qng_core::measurement::q_boundary;
use qng_core::prob_witness::{converted_curve, p0p1_curve};
use qng_core::witness::{
    boundary_fano, boundary_g2, boundary_intensity, boundary_variance, g2_asymptotic, ng_boundary,
    multimode_identical_boundary, FANO_LIMIT_AT_ORIGIN, R_MAX,
};

use crate::cli::{CurveArgs, CurveKind};
use crate::io::{Cell, Table};
use crate::{invalid, CliError, Output};

/// Lower end of the log grid, relative to `r_max`, when `r_min = 0`.
const LOG_FLOOR: f64 = 1e-4;

/// `steps` values of r. With `r_min = 0` the first is 0 and the rest are
/// log-uniform on `[1e-4 r_max, r_max]`.
pub fn r_grid(r_min: f64, r_max: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    if steps < 2 {
        return invalid("steps must be >= 2");
    }
    if !(r_min.is_finite() && r_max.is_finite() && r_min >= 0.0 && r_max > r_min && r_max <= R_MAX) {
        return invalid(format!("need 0 <= r_min < r_max <= {R_MAX}"));
    }
    let (mut grid, lo, n) = if r_min == 0.0 {
        (vec![0.0], r_max * LOG_FLOOR, steps - 1)
    } else {
        (Vec::new(), r_min, steps)
    };
    let (a, b) = (lo.ln(), r_max.ln());
    for i in 0..n {
        let t = if n == 1 { 1.0 } else { i as f64 / (n - 1) as f64 };
        grid.push(if i + 1 == n { r_max } else { (a + t * (b - a)).exp() });
    }
    Ok(grid)
}

fn or_nan<T>(r: qng_core::Result<T>, f: impl Fn(T) -> f64) -> f64 {
    r.map(f).unwrap_or(f64::NAN)
}

/// The requested boundary formulation on the r grid.
pub fn curve_table(which: CurveKind, grid: &[f64], modes: u32) -> Result<Table, CliError> {
    let mut t = match which {
        CurveKind::Moment => Table::new(&["r", "m", "s2"]),
        CurveKind::Intensity => Table::new(&["r", "w1", "w2"]),
        CurveKind::G2 => Table::new(&["r", "m", "g2", "g2_asymptotic"]),
        CurveKind::Fano => Table::new(&["r", "m", "fano"]),
        CurveKind::Quadrature => Table::new(&["r", "q2", "q4"]),
        CurveKind::Prob => Table::new(&["r", "p0", "p1"]),
        CurveKind::ConvertedProb => Table::new(&["r", "m", "s2_converted", "s2_moment"]),
        CurveKind::Multimode => Table::new(&["r", "modes", "m", "s2"]),
    };
    for &r in grid {
        let row: Vec<Cell> = match which {
            CurveKind::Moment => {
                let b = ng_boundary(r)?;
                vec![r.into(), b.m.into(), b.s2.into()]
            }
            CurveKind::Intensity => {
                let w = boundary_intensity(r)?;
                vec![r.into(), w.w1.into(), w.w2.into()]
            }
            CurveKind::G2 => {
                // g2 is undefined at the origin.
                let m = ng_boundary(r)?.m;
                let g2 = or_nan(boundary_g2(r), |p| p.g2);
                vec![r.into(), m.into(), g2.into(), or_nan(g2_asymptotic(m), |x| x).into()]
            }
            CurveKind::Fano => {
                let (m, fano) = if r == 0.0 {
                    (0.0, FANO_LIMIT_AT_ORIGIN)
                } else {
                    boundary_fano(r)?
                };
                vec![r.into(), m.into(), fano.into()]
            }
            CurveKind::Quadrature => {
                let (q2, q4) = q_boundary(r)?;
                vec![r.into(), q2.into(), q4.into()]
            }
            CurveKind::Prob => {
                let p = p0p1_curve(r)?;
                vec![r.into(), p.p0.into(), p.p1.into()]
            }
            CurveKind::ConvertedProb => {
                let c = converted_curve(r)?;
                vec![
                    r.into(),
                    c.m.into(),
                    c.s2.into(),
                    or_nan(boundary_variance(c.m), |x| x).into(),
                ]
            }
            CurveKind::Multimode => {
                let p = multimode_identical_boundary(modes, r)?;
                vec![r.into(), (modes as f64).into(), p.m.into(), p.s2.into()]
            }
        };
        t.push(row);
    }
    Ok(t)
}

pub(crate) fn run(a: &CurveArgs) -> Result<Output, CliError> {
    if a.which != CurveKind::Multimode && a.modes != 1 {
        return invalid("--modes applies to the multimode curve only");
    }
    let grid = r_grid(a.r_min, a.r_max, a.steps)?;
    Ok(Output::table(curve_table(a.which, &grid, a.modes)?))
}
