//! Plot-ready tables, one file per panel, written to `seed-<n>/report/`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;

use wildcard_core::circuits::Circuit;
use wildcard_core::stats::{align, ReportRow};

use crate::config::Resolved;
use crate::error::CliError;
use crate::stages::{
    gst_diagnostics, DiamondArtifact, RbFitArtifact, SeedRun, WildcardArtifact, DIAMOND_FILE, FRONTIER_FILE, RB_FIT_FILE,
    WILDCARD_FILE,
};

/// Writes every panel for `run` and returns the file names.
pub fn report(run: &SeedRun) -> Result<Vec<String>, CliError> {
    let wc: WildcardArtifact = run.read_json(WILDCARD_FILE, "wildcard")?;
    let panels = match &run.scenario {
        Resolved::RbDephasing(_) => rb_panels(run, &wc)?,
        Resolved::TotalError(_) => total_error_panels(run, &wc)?,
        Resolved::GstLeakage(s) => leakage_panels(run, &wc, &s.design()?)?,
        Resolved::Custom(_) => vec![("circuits.tsv".to_string(), circuit_rows(&wc))],
    };
    let mut names = Vec::new();
    for (name, body) in panels {
        let rel = format!("report/{name}");
        run.write_tsv(&rel, &body)?;
        names.push(rel);
    }
    Ok(names)
}

fn diamond(run: &SeedRun) -> Result<DiamondArtifact, CliError> {
    run.read_json(DIAMOND_FILE, "diamond")
}

fn rates(wc: &WildcardArtifact, eps: &std::collections::BTreeMap<String, f64>) -> String {
    let mut out = String::from("param\tw\tepsilon_diamond\tratio\n");
    for (p, w) in wc.report.params.iter().zip(&wc.report.w) {
        match eps.get(p) {
            Some(e) => {
                let ratio = if *e > 0.0 { w / e } else { f64::NAN };
                let _ = writeln!(out, "{p}\t{w:.10e}\t{e:.10e}\t{ratio:.6}");
            }
            None => {
                let _ = writeln!(out, "{p}\t{w:.10e}\tNA\tNA");
            }
        }
    }
    out
}

fn circuit_rows(wc: &WildcardArtifact) -> String {
    let mut out = String::from("circuit\tdepth\tw_C\ttvd\tllr_pre\tllr_post\tthreshold\n");
    for ((c, pre), post) in wc.report.circuits.iter().zip(&wc.pre.rows).zip(&wc.post.rows) {
        let _ = writeln!(
            out,
            "{}\t{}\t{:.10e}\t{:.10e}\t{:.10e}\t{:.10e}\t{:.10e}",
            c.circuit,
            c.circuit.depth(),
            c.radius,
            c.tvd,
            pre.llr,
            post.llr_star,
            c.threshold
        );
    }
    out
}

fn rb_panels(run: &SeedRun, wc: &WildcardArtifact) -> Result<Vec<(String, String)>, CliError> {
    let model = run.model()?;
    let data = run.dataset()?;
    let aligned = align(&model, &data)?;
    let mut success = String::from("circuit\tdepth\tobserved\tpredicted\tband_lo\tband_hi\tw_C\tverdict_pre\tverdict_post\n");
    for ((d, pre), post) in aligned.iter().zip(&wc.pre.rows).zip(&wc.post.rows) {
        let (f, p, w) = (d.f[0], d.p[0], post.radius);
        let _ = writeln!(
            success,
            "{}\t{}\t{:.10e}\t{:.10e}\t{:.10e}\t{:.10e}\t{:.10e}\t{}\t{}",
            d.circuit,
            d.circuit.depth(),
            f,
            p,
            (p - w).max(0.0),
            (p + w).min(1.0),
            w,
            verdict(pre),
            verdict(post)
        );
    }
    let frontier_path = run.path(FRONTIER_FILE);
    let frontier = fs::read_to_string(&frontier_path).map_err(|e| CliError::io(&frontier_path, e))?;
    let mut feasible: String = frontier.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let _ = writeln!(feasible, "selected\t{:.10e}\t{:.10e}\t{}", wc.report.w[0], wc.report.w[1], wc.report.objective);

    let fit: RbFitArtifact = run.read_json(RB_FIT_FILE, "fit-rb")?;
    let eps = diamond(run)?
        .rb_error_channel
        .ok_or_else(|| CliError::Incomplete("diamond.json lacks the RB error-channel distance".into()))?;
    let w_gate = wc.report.w[1];
    let mut convergence = String::from("w_spam\tw_gate\tr\tepsilon_diamond\tw_gate_over_epsilon\n");
    let _ = writeln!(
        convergence,
        "{:.10e}\t{:.10e}\t{:.10e}\t{:.10e}\t{:.6}",
        wc.report.w[0],
        w_gate,
        fit.fit.r,
        eps,
        w_gate / eps
    );
    let mut decay = String::from("depth\tmean_survival\tfit\n");
    for (d, s) in fit.depths.iter().zip(&fit.survival) {
        let _ = writeln!(decay, "{d}\t{s:.10e}\t{:.10e}", fit.fit.a + fit.fit.b * fit.fit.eta.powf(*d));
    }
    Ok(vec![
        ("rb_success.tsv".into(), success),
        ("rb_decay.tsv".into(), decay),
        ("rb_feasible_region.tsv".into(), feasible),
        ("rb_convergence.tsv".into(), convergence),
    ])
}

fn verdict(row: &ReportRow) -> &'static str {
    if row.pass {
        "pass"
    } else {
        "fail"
    }
}

fn total_error_panels(run: &SeedRun, wc: &WildcardArtifact) -> Result<Vec<(String, String)>, CliError> {
    let eps = diamond(run)?;
    Ok(vec![
        ("total_error_circuits.tsv".into(), circuit_rows(wc)),
        ("total_error_rates.tsv".into(), rates(wc, &eps.truth)),
    ])
}

fn leakage_panels(
    run: &SeedRun,
    wc: &WildcardArtifact,
    design: &wildcard_core::circuits::GstDesign,
) -> Result<Vec<(String, String)>, CliError> {
    let tags: HashMap<&Circuit, _> = design.entries().iter().map(|e| (&e.circuit, e)).collect();
    let grid = |post: bool| {
        let rows = if post { &wc.post.rows } else { &wc.pre.rows };
        let mut out = String::from("germ\tpower\tfid_in\tfid_out\tllr\tthreshold\tsignificant\n");
        for r in rows {
            let Some(e) = tags.get(&r.circuit) else { continue };
            let llr = if post { r.llr_star } else { r.llr };
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{:.10e}\t{:.10e}\t{}",
                e.germ,
                e.power,
                e.fid_in,
                e.fid_out,
                llr,
                r.threshold,
                u8::from(!r.pass)
            );
        }
        out
    };
    let mut scatter = String::from("circuit\tw_C\ttvd\n");
    for c in &wc.report.circuits {
        let _ = writeln!(scatter, "{}\t{:.10e}\t{:.10e}", c.circuit, c.radius, c.tvd);
    }
    let eps = diamond(run)?;
    let mut panels = vec![
        ("leakage_llr_pre.tsv".to_string(), grid(false)),
        ("leakage_llr_post.tsv".to_string(), grid(true)),
        ("leakage_wc_vs_tvd.tsv".to_string(), scatter),
        ("leakage_rates.tsv".to_string(), rates(wc, &eps.model)),
    ];
    if let Some(d) = gst_diagnostics(run)? {
        let mut fit = String::from("loglikelihood\tllr_total\tdof\tsigma\titerations\tconverged\n");
        let _ = writeln!(
            fit,
            "{:.10e}\t{:.10e}\t{}\t{:.6}\t{}\t{}",
            d.loglikelihood, d.llr_total, d.dof, d.sigma, d.iterations, d.converged
        );
        panels.push(("gst_fit.tsv".to_string(), fit));
    }
    Ok(panels)
}
