//! CSV emitters for every report type. All output is UTF-8 with a header
//! row; floats print in Rust's shortest round-trip form so reruns are
//! byte-identical.

use crate::analysis::{
    AblationCell, ColehopfComparison, DftComparison, EigenReport, ErrorReport, RankRow,
};
use crate::koopman::train::EpochMetrics;
use crate::nn::demo::IdentityTrial;

/// One line per eigenvalue: re, im, transformed.
pub fn spectrum_csv(report: &EigenReport) -> String {
    let mut out = String::from("index,re,im,transformed\n");
    for (i, (l, t)) in report.eigenvalues.iter().zip(&report.transformed).enumerate() {
        out.push_str(&format!("{i},{},{},{}\n", l.re, l.im, t));
    }
    out
}

/// Wide table: one row per grid point, one column per eigenfunction.
pub fn eigenfunctions_csv(report: &EigenReport) -> String {
    let r = report.eigenfunctions.len();
    let mut out = String::from("grid_index");
    for i in 0..r {
        out.push_str(&format!(",f{i}"));
    }
    out.push('\n');
    if r == 0 {
        return out;
    }
    let n = report.eigenfunctions[0].len();
    for j in 0..n {
        out.push_str(&j.to_string());
        for f in &report.eigenfunctions {
            out.push_str(&format!(",{}", f[j]));
        }
        out.push('\n');
    }
    out
}

pub fn error_report_csv(report: &ErrorReport) -> String {
    let mut out = String::from("ic_class,count,horizon,rms_relative_error\n");
    for c in &report.classes {
        for (h, e) in report.horizons.iter().zip(&c.rms_by_horizon) {
            out.push_str(&format!("{},{},{h},{e}\n", c.class.name(), c.count));
        }
        out.push_str(&format!("{},{},overall,{}\n", c.class.name(), c.count, c.rms_overall));
    }
    out
}

pub fn dft_comparison_csv(cmp: &DftComparison) -> String {
    let mut out = String::from("latent_index,encoded,dft_mode,dft_magnitude\n");
    for i in 0..cmp.encoded.len() {
        out.push_str(&format!(
            "{i},{},{},{}\n",
            cmp.encoded[i], cmp.dft_mode[i], cmp.dft_magnitude[i]
        ));
    }
    out
}

pub fn colehopf_csv(cmp: &ColehopfComparison) -> String {
    let mut out = String::new();
    if let Some(note) = &cmp.note {
        out.push_str(&format!("# analytic column omitted: {note}\n"));
    }
    match &cmp.colehopf {
        Some(v) => {
            out.push_str("x,outer_encoded,colehopf\n");
            for i in 0..cmp.x.len() {
                out.push_str(&format!("{},{},{}\n", cmp.x[i], cmp.outer_encoded[i], v[i]));
            }
        }
        None => {
            out.push_str("x,outer_encoded\n");
            for i in 0..cmp.x.len() {
                out.push_str(&format!("{},{}\n", cmp.x[i], cmp.outer_encoded[i]));
            }
        }
    }
    out
}

pub fn rank_sweep_csv(rows: &[RankRow]) -> String {
    let mut out = String::from("rank,val_total,error\n");
    for row in rows {
        match (&row.val_total, &row.error) {
            (Some(v), _) => out.push_str(&format!("{},{v},\n", row.rank)),
            (None, Some(e)) => out.push_str(&format!("{},,{}\n", row.rank, e.replace(',', ";"))),
            (None, None) => out.push_str(&format!("{},,\n", row.rank)),
        }
    }
    out
}

pub fn ablation_csv(cells: &[AblationCell]) -> String {
    let mut out = String::from("mix,residual,val_total,ic_class,horizon,rms_relative_error\n");
    for cell in cells {
        let val = cell
            .val_total
            .map(|v| v.to_string())
            .unwrap_or_else(|| cell.error.clone().unwrap_or_default().replace(',', ";"));
        match &cell.errors {
            Some(report) => {
                for c in &report.classes {
                    for (h, e) in report.horizons.iter().zip(&c.rms_by_horizon) {
                        out.push_str(&format!(
                            "{},{},{val},{},{h},{e}\n",
                            cell.mix,
                            cell.residual,
                            c.class.name()
                        ));
                    }
                }
            }
            None => out.push_str(&format!("{},{},{val},,,\n", cell.mix, cell.residual)),
        }
    }
    out
}

/// One row per epoch and split: epoch, loss1..loss5, l2_term, total, split.
pub fn metrics_csv(metrics: &[EpochMetrics]) -> String {
    let mut out =
        String::from("epoch,loss1,loss2,loss3,loss4,loss5,l2_term,total,split\n");
    for m in metrics {
        for (split, r) in [("train", &m.train), ("val", &m.val)] {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{split}\n",
                m.epoch,
                r.loss[0],
                r.loss[1],
                r.loss[2],
                r.loss[3],
                r.loss[4],
                r.l2_term,
                r.total
            ));
        }
    }
    out
}

pub fn identity_trials_csv(trials: &[IdentityTrial]) -> String {
    let mut out = String::from("trial,in_domain_mse,value_at_2\n");
    for (i, t) in trials.iter().enumerate() {
        out.push_str(&format!("{i},{},{}\n", t.in_domain_mse, t.value_at_2));
    }
    out
}
