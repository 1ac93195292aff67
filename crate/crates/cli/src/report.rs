//! Plain-text and CSV renderings of reports.

use std::fmt::Write as _;

use rayreg::simulation::{CellReport, MonteCarloReport};

/// Left-aligned first column, right-aligned others, two-space gutters.
pub fn aligned(header: &[&str], rows: &[Vec<String>]) -> String {
    let ncol = header.len();
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (j, c) in r.iter().enumerate().take(ncol) {
            width[j] = width[j].max(c.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (j, c) in cells.iter().enumerate() {
            if j == 0 {
                let _ = write!(s, "{c:<w$}", w = width[0]);
            } else {
                let _ = write!(s, "  {c:>w$}", w = width[j]);
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    for r in rows {
        out += &line(r.iter().map(String::as_str).collect());
    }
    out
}

fn measure_cells(r: &MonteCarloReport, which: usize) -> Vec<String> {
    let (vals, total): (&[f64], Option<f64>) = match which {
        0 => (&r.mean, None),
        1 => (&r.rb_percent, Some(r.absolute_total_rb)),
        _ => (&r.mse, Some(r.absolute_total_mse)),
    };
    let mut cells: Vec<String> = vals.iter().map(|v| format!("{v:.4}")).collect();
    cells.push(total.map_or("---".into(), |t| format!("{t:.4}")));
    cells
}

/// Bias and MSE table with one block per N and three measure rows per
/// contamination level, WMLE columns first.
pub fn table_text(cells: &[CellReport], beta_true: &[f64]) -> String {
    let k = beta_true.len();
    let mut header: Vec<String> = vec!["eps".into(), "measure".into()];
    for est in ["WMLE", "MLE"] {
        header.extend((1..=k).map(|i| format!("{est} b{i}")));
        header.push(format!("{est} total"));
    }
    let mut out = String::new();
    let mut sizes: Vec<usize> = cells.iter().map(|c| c.n).collect();
    sizes.dedup();
    for n in sizes {
        let mut rows = Vec::new();
        for c in cells.iter().filter(|c| c.n == n) {
            for (m, label) in ["Mean", "RB(%)", "MSE"].iter().enumerate() {
                let eps = if m == 0 { format!("{}%", 100.0 * c.epsilon) } else { String::new() };
                let mut row = vec![eps, label.to_string()];
                row.extend(measure_cells(&c.wmle, m));
                row.extend(measure_cells(&c.mle, m));
                rows.push(row);
            }
            if c.wmle.convergence_failures + c.mle.convergence_failures > 0 {
                rows.push(vec![
                    String::new(),
                    format!("failures WMLE {} MLE {}", c.wmle.convergence_failures, c.mle.convergence_failures),
                ]);
            }
        }
        let _ = writeln!(out, "N = {n}");
        let h: Vec<&str> = header.iter().map(String::as_str).collect();
        out += &aligned(&h, &rows);
        out.push('\n');
    }
    out
}

pub fn table_csv(cells: &[CellReport]) -> String {
    let mut s = String::from("n,epsilon,estimator,parameter,mean,rb_percent,mse,failures\n");
    for c in cells {
        for r in [&c.wmle, &c.mle] {
            for i in 0..r.mean.len() {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    c.n,
                    c.epsilon,
                    r.estimator.name(),
                    i + 1,
                    r.mean[i],
                    r.rb_percent[i],
                    r.mse[i],
                    r.convergence_failures
                );
            }
        }
    }
    s
}
