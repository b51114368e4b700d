use super::DVineRegressionModel;
use crate::bicop::BivariateCopula;
use std::fmt::Write;

fn params_text(c: &BivariateCopula) -> String {
    c.params().iter().map(|p| format!("{p:.2}")).collect::<Vec<_>>().join(", ")
}

fn p_value_text(p: f64) -> String {
    if p < 0.005 { "< 0.00".to_string() } else { format!("{p:.2}") }
}

/// One row per selected covariate: the response edge it contributed.
/// Variables are numbered 1 for the response and `column + 2` otherwise.
pub(super) fn selection_table(model: &DVineRegressionModel) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:>4} {:<24} {:<9} {:>4} {:<14} {:>6} {:>9} {:>9} {:>9} {:>8}",
        "name", "k_j", "conditioning", "family", "rot", "parameters", "tau", "ll", "ll_aic", "ll_bic", "p_value"
    );
    let Some(stats) = model.fit_stats() else {
        return out;
    };
    let column_of = |name: &str| stats.steps.iter().find(|s| s.name == name).map(|s| s.column + 2);
    for s in &stats.steps {
        let cond: Vec<String> =
            s.conditioning.iter().map(|n| column_of(n).map_or(n.clone(), |c| c.to_string())).collect();
        let cond = if cond.is_empty() { "-".to_string() } else { cond.join(", ") };
        let _ = writeln!(
            out,
            "{:<10} {:>4} {:<24} {:<9} {:>4} {:<14} {:>6.2} {:>9.2} {:>9.2} {:>9.2} {:>8}",
            s.name,
            s.column + 2,
            cond,
            s.copula.family().name(),
            s.copula.rotation().degrees(),
            params_text(&s.copula),
            s.tau,
            s.loglik,
            s.aic,
            s.bic,
            p_value_text(s.p_value)
        );
    }
    let _ = writeln!(out, "cll = {:.2}, cll_aic = {:.2}, cll_bic = {:.2}", stats.cll, stats.cll_aic, stats.cll_bic);
    out
}

/// Every edge of the vine, tree by tree. Positions are labelled 1 for the
/// response and by covariate name otherwise.
pub(super) fn edge_table(model: &DVineRegressionModel) -> String {
    let mut labels = vec![model.response().name.clone()];
    labels.extend(model.covariates().iter().map(|c| c.name.clone()));
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>4}  {:<20} {:<32} {:<9} {:>4} {:<14} {:>3} {:>6} {:>9}",
        "tree", "conditioned", "conditioning", "family", "rot", "parameters", "df", "tau", "loglik"
    );
    let lls = model.fit_stats().map(|s| &s.edge_loglik);
    for (t, tree) in model.trees().iter().enumerate() {
        for (a, cop) in tree.iter().enumerate() {
            let b = a + t + 1;
            let cond: Vec<&str> = (a + 1..b).rev().map(|i| labels[i].as_str()).collect();
            let ll = lls.and_then(|l| l.get(t)).and_then(|r| r.get(a)).map_or(String::from("-"), |v| format!("{v:.2}"));
            let _ = writeln!(
                out,
                "{:>4}  {:<20} {:<32} {:<9} {:>4} {:<14} {:>3} {:>6.2} {:>9}",
                t + 1,
                format!("{}, {}", labels[a], labels[b]),
                cond.join(", "),
                cop.family().name(),
                cop.rotation().degrees(),
                params_text(cop),
                cop.n_params(),
                cop.tau(),
                ll
            );
        }
    }
    out
}
