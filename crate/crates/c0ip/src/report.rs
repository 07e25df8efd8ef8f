//! Table, CSV and JSON emission for study results.
//!
//! Numbers are printed with six significant digits; identical inputs produce
//! byte-identical output.

use std::io::{self, Write};

use crate::afem::AfemTrace;
use crate::norms::{ConvergenceRow, Var};

/// Errors at or below this level sit at solver noise; convergence orders are
/// meaningless there and are reported as `exact`.
const EXACT_THRESHOLD: f64 = 1e-8;

fn fmt_order(err: f64, order: Option<f64>) -> Option<String> {
    order.map(|o| {
        if err <= EXACT_THRESHOLD {
            "exact".to_string()
        } else {
            fmt_g6(o)
        }
    })
}

/// Six significant digits, decimal where reasonable, scientific otherwise.
pub fn fmt_g6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        format!("{:.*}", decimals, x)
    } else {
        format!("{:.5e}", x)
    }
}

/// `level,h,ndof,var,norm,error,order` rows, one per variable and norm.
pub fn write_convergence_csv(rows: &[ConvergenceRow], w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "level,h,ndof,var,norm,error,order")?;
    for row in rows {
        for (var, err) in &row.errors {
            let orders = row.orders.get(var);
            for (norm, e, o) in [
                ("energy", err.energy, orders.map(|o| o.energy)),
                ("l2", err.l2, orders.map(|o| o.l2)),
            ] {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    row.level,
                    fmt_g6(row.h),
                    row.ndof,
                    var,
                    norm,
                    fmt_g6(e),
                    fmt_order(e, o).unwrap_or_default()
                )?;
            }
        }
    }
    Ok(())
}

/// One estimator line per level for both uniform and adaptive runs.
#[derive(Debug, Clone)]
pub struct EstimatorCsvRow {
    pub level: usize,
    pub ndof: usize,
    pub eta: [f64; 8],
    pub eta_total: f64,
    pub total_error: f64,
    pub efficiency: Option<f64>,
}

pub fn write_estimator_csv(rows: &[EstimatorCsvRow], w: &mut impl Write) -> io::Result<()> {
    writeln!(
        w,
        "level,ndof,eta1,eta2,eta3,eta4,eta5,eta6,eta7,eta8,eta_total,total_error,efficiency_index"
    )?;
    for r in rows {
        let etas: Vec<String> = r.eta.iter().map(|&v| fmt_g6(v)).collect();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.level,
            r.ndof,
            etas.join(","),
            fmt_g6(r.eta_total),
            fmt_g6(r.total_error),
            r.efficiency.map(fmt_g6).unwrap_or_default()
        )?;
    }
    Ok(())
}

/// Adaptive trace: estimator schema plus `marked,triangles`.
pub fn write_trace_csv(trace: &AfemTrace, w: &mut impl Write) -> io::Result<()> {
    writeln!(
        w,
        "level,ndof,eta1,eta2,eta3,eta4,eta5,eta6,eta7,eta8,eta_total,total_error,efficiency_index,marked,triangles"
    )?;
    for l in &trace.levels {
        let etas: Vec<String> = l.eta.iter().map(|&v| fmt_g6(v)).collect();
        let total_error: f64 = Var::ALL.iter().map(|v| l.errors[v].full_energy).sum();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            l.level,
            l.ndof,
            etas.join(","),
            fmt_g6(l.eta_total),
            fmt_g6(total_error),
            l.efficiency.map(fmt_g6).unwrap_or_default(),
            l.marked,
            l.triangles
        )?;
    }
    Ok(())
}

/// Summary document shared by both run modes. `slope` is the EOC of the
/// summed full-energy error w.r.t. h for uniform runs and the log-log slope
/// of the estimator against ndof for adaptive runs.
#[allow(clippy::too_many_arguments)]
pub fn summary_json(
    mode: &str,
    case: &str,
    levels: usize,
    slope: Option<f64>,
    efficiency_min: Option<f64>,
    efficiency_max: Option<f64>,
    extra: &[(&str, serde_json::Value)],
) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    map.insert("mode".into(), mode.into());
    map.insert("case".into(), case.into());
    map.insert("levels".into(), levels.into());
    map.insert(
        "slope".into(),
        slope.map(|v| v.into()).unwrap_or(serde_json::Value::Null),
    );
    map.insert(
        "efficiency_min".into(),
        efficiency_min.map(|v| v.into()).unwrap_or(serde_json::Value::Null),
    );
    map.insert(
        "efficiency_max".into(),
        efficiency_max.map(|v| v.into()).unwrap_or(serde_json::Value::Null),
    );
    for (k, v) in extra {
        map.insert((*k).into(), v.clone());
    }
    serde_json::Value::Object(map)
}

/// Paper-style convergence table for one norm (`energy` or `l2`).
pub fn format_table(rows: &[ConvergenceRow], norm: &str) -> String {
    let pick = |row: &ConvergenceRow, var: Var| -> (f64, Option<f64>) {
        let err = &row.errors[&var];
        let ord = row.orders.get(&var);
        match norm {
            "l2" => (err.l2, ord.map(|o| o.l2)),
            _ => (err.energy, ord.map(|o| o.energy)),
        }
    };
    let name = |var: Var| match (norm, var) {
        ("l2", Var::U) => "||u-u_h||",
        ("l2", Var::Phi) => "||phi-phi_h||",
        ("l2", Var::Q) => "||q-q_h||",
        (_, Var::U) => "||u-u_h||_h",
        (_, Var::Phi) => "||phi-phi_h||_h",
        (_, Var::Q) => "||q-q_h||_h",
    };
    let mut s = String::new();
    s.push_str(&format!(
        "{:>12} {:>14} {:>8} {:>14} {:>8} {:>14} {:>8}\n",
        "h",
        name(Var::U),
        "order",
        name(Var::Phi),
        "order",
        name(Var::Q),
        "order"
    ));
    for row in rows {
        let (eu, ou) = pick(row, Var::U);
        let (ep, op) = pick(row, Var::Phi);
        let (eq, oq) = pick(row, Var::Q);
        let ord = |e: f64, o: Option<f64>| fmt_order(e, o).unwrap_or_else(|| "--".to_string());
        s.push_str(&format!(
            "{:>12} {:>14} {:>8} {:>14} {:>8} {:>14} {:>8}\n",
            fmt_g6(row.h),
            fmt_g6(eu),
            ord(eu, ou),
            fmt_g6(ep),
            ord(ep, op),
            fmt_g6(eq),
            ord(eq, oq)
        ));
    }
    s
}
