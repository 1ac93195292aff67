use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use log::warn;
use rayreg::detection::scene::{synth_scene, SceneParams};
use rayreg::detection::{detect_with_link, ImageMatrix, Rect, Tail};
use rayreg::estimation::{fit_mle, fit_wmle_from};
use rayreg::inference::{ground_type_detect, quantile_residuals, wald_test, WaldReport};
use rayreg::simulation::{breakdown_curve, run_table, sensitivity_curve, table_grid, ScenarioConfig};
use rayreg::{io, FitResult, LinkFunction, Method, ModelSpec, RobustConfig};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Config, OneOrMany};
use crate::data::{build_spec, DesignSpec, Table};
use crate::manifest::{digest_file, now_ms, read_manifest, sha256_hex, Outputs, RunManifest, MANIFEST_FILE};
use crate::report;
use crate::{
    BreakdownArgs, Command, DataArgs, DetectArgs, FitArgs, Format, Global, ImageFormat, MethodArg, ReplayArgs,
    ResidualArgs, SceneArgs, SensitivityArgs, SimulateArgs, TailArg, WaldArgs,
};

/// Summary printed to stdout in the requested format.
struct Rendered {
    json: Value,
    csv: String,
    text: String,
}

type Inputs = BTreeMap<String, String>;

fn record_input(inputs: &mut Inputs, path: &Path) -> Result<()> {
    if !path.exists() {
        bail!("input file not found: {}", path.display());
    }
    inputs.insert(path.display().to_string(), digest_file(path)?);
    Ok(())
}

/// Runs one command, writes its outputs and manifest, and returns the manifest.
pub fn execute(cmd: &Command, mut cfg: Config, global: &Global) -> Result<RunManifest> {
    let started = now_ms();
    if let Some(s) = global.seed {
        cfg.seed = Some(s);
    }
    let mut out = Outputs::new(&global.out_dir)?;
    let mut inputs = Inputs::new();
    let rendered = match cmd {
        Command::Fit(a) => fit_cmd(a, &mut cfg, &mut inputs, &mut out)?,
        Command::Wald(a) => wald_cmd(a, &mut cfg, &mut inputs, &mut out)?,
        Command::Residuals(a) => residuals_cmd(a, &mut cfg, &mut inputs, &mut out)?,
        Command::Simulate(a) => simulate_cmd(a, &mut cfg, &mut out)?,
        Command::Breakdown(a) => breakdown_cmd(a, &mut cfg, &mut out)?,
        Command::Sensitivity(a) => sensitivity_cmd(a, &mut cfg, &mut out)?,
        Command::Detect(a) => detect_cmd(a, &mut cfg, &mut inputs, &mut out)?,
        Command::SynthScene(a) => scene_cmd(a, &mut cfg, &mut inputs, &mut out)?,
        Command::Replay(_) => bail!("replay cannot be nested"),
    };
    let dir = out.dir().to_path_buf();
    let manifest = RunManifest {
        command: cmd.name().to_string(),
        invocation: cmd.clone(),
        seed: cfg.seed,
        config: cfg,
        version: env!("CARGO_PKG_VERSION").to_string(),
        inputs,
        outputs: out.into_files(),
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;

    match global.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&rendered.json)?),
        Format::Csv => print!("{}", rendered.csv),
        Format::Text => print!("{}", rendered.text),
    }
    Ok(manifest)
}

pub fn replay(args: &ReplayArgs, global: &Global) -> Result<()> {
    let recorded = read_manifest(&args.manifest)?;
    for (path, digest) in &recorded.inputs {
        let now = digest_file(Path::new(path))?;
        if &now != digest {
            bail!("input {path} changed since the recorded run");
        }
    }
    if global.seed.is_some() {
        warn!("--seed is ignored by replay; the recorded seed is used");
    }
    if recorded.version != env!("CARGO_PKG_VERSION") {
        warn!("manifest written by version {}, replaying with {}", recorded.version, env!("CARGO_PKG_VERSION"));
    }
    let g = Global { seed: None, ..global.clone() };
    let fresh = execute(&recorded.invocation, recorded.config.clone(), &g)?;
    let differing: Vec<&String> = recorded
        .outputs
        .iter()
        .filter(|(name, digest)| fresh.outputs.get(*name) != Some(*digest))
        .map(|(name, _)| name)
        .chain(fresh.outputs.keys().filter(|k| !recorded.outputs.contains_key(*k)))
        .collect();
    if !differing.is_empty() {
        bail!("replay outputs differ from the manifest: {differing:?}");
    }
    eprintln!("replay of `{}`: {} outputs identical", recorded.command, recorded.outputs.len());
    Ok(())
}

fn methods(m: MethodArg) -> Vec<Method> {
    match m {
        MethodArg::Mle => vec![Method::Mle],
        MethodArg::Wmle => vec![Method::Wmle],
        MethodArg::Both => vec![Method::Wmle, Method::Mle],
    }
}

fn single_method(m: MethodArg) -> Result<Method> {
    match m {
        MethodArg::Mle => Ok(Method::Mle),
        MethodArg::Wmle => Ok(Method::Wmle),
        MethodArg::Both => bail!("this command needs --method mle or --method wmle"),
    }
}

fn apply_model_flags(cfg: &mut Config, delta: Option<f64>, link: Option<LinkFunction>, methods: &[Method]) {
    if let Some(d) = delta {
        cfg.delta = Some(d);
    }
    if let Some(l) = link {
        cfg.link = Some(l);
    }
    if methods == [Method::Mle] && delta.is_some() {
        warn!("--delta is ignored with --method mle");
    }
}

fn load_model(a: &DataArgs, cfg: &mut Config, inputs: &mut Inputs, ms: &[Method]) -> Result<(ModelSpec, RobustConfig)> {
    apply_model_flags(cfg, a.delta, a.link, ms);
    record_input(inputs, &a.data)?;
    let table = Table::read(&a.data)?;
    let design = DesignSpec {
        response: a.response.clone(),
        covariates: a.covariates.clone(),
        dummy: a.dummy.clone(),
        reference: a.reference.clone(),
    };
    let link = cfg.link();
    let spec = build_spec(&table, &design, link).with_context(|| format!("{}", a.data.display()))?;
    let robust = cfg.robust();
    robust.validate()?;
    Ok((spec, robust))
}

/// Fits each requested method, sharing one MLE fit.
fn fit_methods(spec: &ModelSpec, robust: &RobustConfig, ms: &[Method]) -> Result<Vec<FitResult>> {
    let mle = fit_mle(spec, robust)?;
    ms.iter()
        .map(|m| match m {
            Method::Mle => Ok(mle.clone()),
            Method::Wmle => Ok(fit_wmle_from(spec, robust, mle.clone())?),
        })
        .collect()
}

fn warn_unconverged(fit: &FitResult) {
    if !fit.converged {
        warn!(
            "{} fit did not converge after {} iterations (|score|_inf = {:e})",
            fit.method.name(),
            fit.iterations,
            fit.grad_norm
        );
    }
}

#[derive(Serialize)]
struct Coefficient {
    name: String,
    estimate: f64,
    std_error: f64,
    wald_statistic: Option<f64>,
    p_value: Option<f64>,
}

#[derive(Serialize)]
struct FitSummary {
    method: Method,
    link: LinkFunction,
    n_obs: usize,
    delta: Option<f64>,
    coefficients: Vec<Coefficient>,
    loglik: f64,
    n_downweighted: usize,
    converged: bool,
    iterations: usize,
    grad_norm: f64,
}

fn summarize(fit: &FitResult, robust: &RobustConfig, pfa: f64) -> FitSummary {
    let coefficients = (0..fit.beta_hat.len())
        .map(|i| {
            let w = wald_test(fit, &[i], &[0.0], pfa).ok();
            Coefficient {
                name: fit.coefficient_names[i].clone(),
                estimate: fit.beta_hat[i],
                std_error: fit.std_errors[i],
                wald_statistic: w.as_ref().map(|w| w.statistic),
                p_value: w.map(|w| w.p_value),
            }
        })
        .collect();
    FitSummary {
        method: fit.method,
        link: fit.link,
        n_obs: fit.mu_hat.len(),
        delta: (fit.method == Method::Wmle).then_some(robust.delta),
        coefficients,
        loglik: fit.loglik,
        n_downweighted: fit.n_downweighted(),
        converged: fit.converged,
        iterations: fit.iterations,
        grad_norm: fit.grad_norm,
    }
}

fn fit_cmd(a: &FitArgs, cfg: &mut Config, inputs: &mut Inputs, out: &mut Outputs) -> Result<Rendered> {
    let ms = methods(a.method);
    let (spec, robust) = load_model(&a.data, cfg, inputs, &ms)?;
    let fits = fit_methods(&spec, &robust, &ms)?;
    fits.iter().for_each(warn_unconverged);
    let summaries: Vec<FitSummary> = fits.iter().map(|f| summarize(f, &robust, a.pfa)).collect();
    let doc = json!({ "data": a.data.data.display().to_string(), "response": a.data.response, "fits": summaries });
    out.write_json("fit.json", &doc)?;

    let mut csv = String::from("method,coefficient,estimate,std_error,p_value\n");
    let mut text = String::new();
    for s in &summaries {
        let _ = writeln!(
            text,
            "{} ({} link, N = {}, loglik {:.6}, downweighted {}, converged {})",
            s.method.name().to_uppercase(),
            s.link.name(),
            s.n_obs,
            s.loglik,
            s.n_downweighted,
            s.converged
        );
        let rows: Vec<Vec<String>> = s
            .coefficients
            .iter()
            .map(|c| {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{}",
                    s.method.name(),
                    c.name,
                    c.estimate,
                    c.std_error,
                    c.p_value.map_or(String::new(), |p| p.to_string())
                );
                vec![
                    c.name.clone(),
                    format!("{:.4}", c.estimate),
                    format!("{:.4}", c.std_error),
                    c.p_value.map_or("-".into(), |p| format!("{p:.4}")),
                ]
            })
            .collect();
        text.push_str(&report::aligned(&["", "Estimate", "Std. Error", "p-value"], &rows));
        text.push('\n');
    }
    Ok(Rendered { json: doc, csv, text })
}

fn resolve_interest(fit: &FitResult, interest: &[String]) -> Result<Vec<usize>> {
    interest
        .iter()
        .map(|s| {
            fit.coefficient_names
                .iter()
                .position(|n| n == s)
                .or_else(|| s.parse::<usize>().ok())
                .ok_or_else(|| anyhow!("unknown coefficient `{s}`; available: {}", fit.coefficient_names.join(", ")))
        })
        .collect()
}

fn wald_cmd(a: &WaldArgs, cfg: &mut Config, inputs: &mut Inputs, out: &mut Outputs) -> Result<Rendered> {
    let ms = methods(a.method);
    let (spec, robust) = load_model(&a.data, cfg, inputs, &ms)?;
    let fits = fit_methods(&spec, &robust, &ms)?;
    let mut results: Vec<(Method, Vec<WaldReport>)> = Vec::new();
    for fit in &fits {
        warn_unconverged(fit);
        let tests = if a.interest.is_empty() {
            ground_type_detect(fit, a.pfa)?
        } else {
            let idx = resolve_interest(fit, &a.interest)?;
            let null = if a.null.is_empty() { vec![0.0; idx.len()] } else { a.null.clone() };
            vec![wald_test(fit, &idx, &null, a.pfa)?]
        };
        results.push((fit.method, tests));
    }
    let doc: Value = results.iter().map(|(m, t)| json!({ "method": m, "tests": t })).collect();
    out.write_json("wald.json", &doc)?;

    let mut csv = String::from("method,coefficients,statistic,dof,p_value,threshold,reject_null\n");
    let mut rows = Vec::new();
    for (m, tests) in &results {
        for t in tests {
            let names = t.names.join(" ");
            let _ = writeln!(
                csv,
                "{},{names},{},{},{},{},{}",
                m.name(),
                t.statistic,
                t.dof,
                t.p_value,
                t.threshold,
                t.reject_null
            );
            rows.push(vec![
                m.name().to_string(),
                names,
                format!("{:.4}", t.statistic),
                t.dof.to_string(),
                format!("{:.4}", t.p_value),
                if t.reject_null { "reject".into() } else { "retain".into() },
            ]);
        }
    }
    let text = report::aligned(&["method", "H0 on", "T_W", "dof", "p-value", "decision"], &rows);
    Ok(Rendered { json: doc, csv, text })
}

fn residuals_cmd(a: &ResidualArgs, cfg: &mut Config, inputs: &mut Inputs, out: &mut Outputs) -> Result<Rendered> {
    let m = single_method(a.method)?;
    if let Some(l) = a.control_limit {
        cfg.control_limit = Some(l);
    }
    let (spec, robust) = load_model(&a.data, cfg, inputs, &[m])?;
    let limit = *cfg.control_limit.get_or_insert(3.0);
    if !(limit > 0.0) {
        bail!("control limit must be positive");
    }
    let fit = fit_methods(&spec, &robust, &[m])?.remove(0);
    warn_unconverged(&fit);
    let res = quantile_residuals(&spec, &fit)?;
    let mut csv = String::from("index,y,mu,residual,out_of_control\n");
    let mut flagged = 0;
    for (i, &r) in res.values.iter().enumerate() {
        let out_of_control = r.abs() > limit;
        flagged += usize::from(out_of_control);
        let _ = writeln!(csv, "{i},{},{},{r},{}", spec.response()[i], fit.mu_hat[i], u8::from(out_of_control));
    }
    out.write("residuals.csv", csv.as_bytes())?;
    let n = res.values.len();
    let doc = json!({
        "method": m,
        "n": n,
        "control_limit": limit,
        "out_of_control": flagged,
        "fraction": flagged as f64 / n as f64,
        "clamped": res.clamped,
    });
    out.write_json("residuals.json", &doc)?;
    let text = format!(
        "{} residuals: {flagged} of {n} outside [-{limit}, {limit}] ({:.4}%), {} clamped\n",
        m.name().to_uppercase(),
        100.0 * flagged as f64 / n as f64,
        res.clamped.len()
    );
    Ok(Rendered { json: doc, csv, text })
}

fn warn_scenario(cfg: &ScenarioConfig, epsilons: &[f64]) {
    if cfg.replications == 1 {
        warn!("a single replication gives no useful Monte Carlo moments");
    }
    if epsilons.iter().any(|&e| e >= 0.5) {
        warn!("contamination of 50% or more is far beyond the usual evaluation grid");
    }
}

fn simulate_cmd(a: &SimulateArgs, cfg: &mut Config, out: &mut Outputs) -> Result<Rendered> {
    cfg.n.get_or_insert(OneOrMany::Many(vec![100, 500, 750]));
    cfg.epsilon.get_or_insert(OneOrMany::Many(vec![0.0, 0.01, 0.05]));
    if let Some(r) = a.replications {
        cfg.replications = Some(r);
    }
    let base = cfg.scenario(500, 0.0);
    let sizes = cfg.n.as_ref().map(OneOrMany::to_vec).unwrap_or_default();
    let eps = cfg.epsilon.as_ref().map(OneOrMany::to_vec).unwrap_or_default();
    warn_scenario(&base, &eps);
    let grid = table_grid(&base, &sizes, &eps);
    for c in &grid {
        c.validate()?;
    }
    let cells = run_table(&grid)?;
    let doc = json!({
        "beta_true": base.beta_true,
        "delta": base.robust.delta,
        "replications": base.replications,
        "seed": base.master_seed,
        "link": base.link,
        "outlier_value": base.outlier_value,
        "cells": cells,
    });
    out.write_json("table.json", &doc)?;
    let text = report::table_text(&cells, &base.beta_true);
    out.write("table.txt", text.as_bytes())?;
    let csv = report::table_csv(&cells);
    Ok(Rendered { json: doc, csv, text })
}

fn curve_csv<T>(points: &[T], f: impl Fn(&T) -> (String, f64, f64)) -> String {
    let mut s = String::from("x,mle_value,wmle_value\n");
    for p in points {
        let (x, m, w) = f(p);
        let _ = writeln!(s, "{x},{m},{w}");
    }
    s
}

fn breakdown_cmd(a: &BreakdownArgs, cfg: &mut Config, out: &mut Outputs) -> Result<Rendered> {
    if a.step == 0 || a.from > a.to {
        bail!("need --from <= --to and --step >= 1");
    }
    if let Some(r) = a.replications {
        cfg.replications = Some(r);
    }
    cfg.n.get_or_insert(OneOrMany::One(500));
    let n = cfg.single_n()?;
    let mut base = cfg.scenario(n, 0.0);
    base.n = n;
    base.validate()?;
    let counts: Vec<usize> = (a.from..=a.to).step_by(a.step).collect();
    warn_scenario(&base, &[a.to as f64 / n as f64]);
    let points = breakdown_curve(&base, &counts)?;
    let csv = curve_csv(&points, |p| (p.outliers.to_string(), p.mle_total_rb, p.wmle_total_rb));
    out.write("breakdown.csv", csv.as_bytes())?;
    let doc = json!({ "n": n, "replications": base.replications, "seed": base.master_seed, "points": points });
    out.write_json("breakdown.json", &doc)?;
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            vec![
                p.outliers.to_string(),
                format!("{:.2}", 100.0 * p.fraction),
                format!("{:.4}", p.mle_total_rb),
                format!("{:.4}", p.wmle_total_rb),
            ]
        })
        .collect();
    let text = report::aligned(&["outliers", "percent", "MLE total RB", "WMLE total RB"], &rows);
    Ok(Rendered { json: doc, csv, text })
}

fn sensitivity_cmd(a: &SensitivityArgs, cfg: &mut Config, out: &mut Outputs) -> Result<Rendered> {
    if !(a.step > 0.0) || a.from > a.to || !(a.from > 0.0) {
        bail!("need 0 < --from <= --to and --step > 0");
    }
    if let Some(r) = a.replications {
        cfg.replications = Some(r);
    }
    cfg.n.get_or_insert(OneOrMany::One(500));
    cfg.epsilon.get_or_insert(OneOrMany::One(0.05));
    let n = cfg.single_n()?;
    let e = cfg.single_epsilon()?;
    let mut base = cfg.scenario(n, e);
    base.n = n;
    base.epsilon = e;
    base.validate()?;
    warn_scenario(&base, &[e]);
    let steps = ((a.to - a.from) / a.step + 1e-9).floor() as usize;
    let values: Vec<f64> = (0..=steps).map(|i| a.from + i as f64 * a.step).collect();
    let points = sensitivity_curve(&base, &values)?;
    let csv = curve_csv(&points, |p| (p.outlier_value.to_string(), p.mle_masc, p.wmle_masc));
    out.write("sensitivity.csv", csv.as_bytes())?;
    let doc = json!({
        "n": n,
        "epsilon": e,
        "outliers": base.outlier_count(),
        "replications": base.replications,
        "seed": base.master_seed,
        "points": points,
    });
    out.write_json("sensitivity.json", &doc)?;
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| vec![p.outlier_value.to_string(), format!("{:.4}", p.mle_masc), format!("{:.4}", p.wmle_masc)])
        .collect();
    let text = report::aligned(&["y_out", "MLE MASC", "WMLE MASC"], &rows);
    Ok(Rendered { json: doc, csv, text })
}

fn read_image_input(path: &Path, inputs: &mut Inputs) -> Result<ImageMatrix> {
    record_input(inputs, path)?;
    io::read_image(path).with_context(|| format!("cannot read image {}", path.display()))
}

fn read_truth(path: &Path, inputs: &mut Inputs) -> Result<Vec<(f64, f64)>> {
    record_input(inputs, path)?;
    let t = Table::read(path)?;
    Ok(t.numbers("row")?.into_iter().zip(t.numbers("col")?).collect())
}

fn detect_cmd(a: &DetectArgs, cfg: &mut Config, inputs: &mut Inputs, out: &mut Outputs) -> Result<Rendered> {
    let ms = methods(a.method);
    apply_model_flags(cfg, a.delta, a.link, &ms);
    let interest = read_image_input(&a.interest, inputs)?;
    let covariates = a.covariates.iter().map(|p| read_image_input(p, inputs)).collect::<Result<Vec<_>>>()?;
    let truth = a.truth.as_deref().map(|p| read_truth(p, inputs)).transpose()?;
    let &[row, col, rows, cols] = a.region.as_slice() else {
        bail!("--region needs four values row,col,rows,cols, got {:?}", a.region);
    };
    let region = Rect { row, col, rows, cols };
    let tail = match a.tail {
        TailArg::Both => Tail::Both,
        TailArg::Upper => Tail::Upper,
    };
    let det = cfg.detector(tail);
    let link = cfg.link();
    let robust = cfg.robust();
    robust.validate()?;

    let mut docs = Vec::new();
    let mut rows = Vec::new();
    let mut csv = String::from("method,clusters,hits,false_alarms,missed\n");
    for m in ms {
        let rc = if m == Method::Mle { robust.mle() } else { robust };
        let mut res = detect_with_link(&interest, &covariates, &region, &det, &rc, link)?;
        let score = truth.as_ref().map(|t| res.score_against(t, &det));
        let p = m.name();
        out.write(&format!("{p}_mask.pgm"), &io::encode_pgm(&res.mask))?;
        out.write(&format!("{p}_mask.csv"), io::encode_mask_csv(&res.mask).as_bytes())?;
        out.write_json(&format!("{p}_clusters.json"), &res.clusters)?;
        if let Some(s) = score {
            out.write_json(&format!("{p}_score.json"), &s)?;
        }
        let fit = summarize(&res.fit, &rc, 0.05);
        let doc = json!({
            "method": m,
            "training_region": region,
            "detector": det,
            "fit": fit,
            "raw_anomalous_pixels": res.raw_mask.count(),
            "mask_pixels": res.mask.count(),
            "clusters": res.clusters.len(),
            "score": score,
        });
        out.write_json(&format!("{p}_detection.json"), &doc)?;
        let counts = score.map(|s| [s.hits, s.false_alarms, s.missed].map(|v| v.to_string()));
        let cells = counts.clone().unwrap_or_else(|| ["-".into(), "-".into(), "-".into()]);
        let fields = counts.unwrap_or_default();
        let _ = writeln!(csv, "{p},{},{}", res.clusters.len(), fields.join(","));
        let mut row = vec![p.to_uppercase(), res.clusters.len().to_string()];
        row.extend(cells);
        rows.push(row);
        docs.push(doc);
    }
    let text = report::aligned(&["method", "clusters", "hits", "false alarms", "missed"], &rows);
    Ok(Rendered { json: Value::Array(docs), csv, text })
}

fn scene_cmd(a: &SceneArgs, cfg: &mut Config, inputs: &mut Inputs, out: &mut Outputs) -> Result<Rendered> {
    let mut params = match &a.params {
        None => SceneParams::default(),
        Some(p) => {
            record_input(inputs, p)?;
            let text = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            let de = &mut serde_json::Deserializer::from_str(&text);
            serde_path_to_error::deserialize(de)
                .map_err(|e| anyhow!("{}: error at `{}`: {}", p.display(), e.path(), e.inner()))?
        }
    };
    match cfg.seed {
        Some(s) => params.seed = s,
        None => cfg.seed = Some(params.seed),
    }
    let scene = synth_scene(&params)?;
    let (ext, encode): (&str, fn(&ImageMatrix) -> Vec<u8>) = match a.image_format {
        ImageFormat::Rrm => ("rrm", io::encode_rrm1),
        ImageFormat::Csv => ("csv", |img| io::encode_image_csv(img).into_bytes()),
    };
    out.write(&format!("interest.{ext}"), &encode(&scene.interest))?;
    for (j, r) in scene.references.iter().enumerate() {
        out.write(&format!("reference_{}.{ext}", j + 1), &encode(r))?;
    }
    let mut truth = String::from("row,col\n");
    for (r, c) in &scene.truth {
        let _ = writeln!(truth, "{r},{c}");
    }
    out.write("truth.csv", truth.as_bytes())?;
    let region = scene.training_region;
    let doc = json!({
        "params": params,
        "training_region": region,
        "region_arg": format!("{},{},{},{}", region.row, region.col, region.rows, region.cols),
        "beta_true": scene.beta_true,
        "training_contamination": scene.training_contamination(&params),
        "interest_sha256": sha256_hex(&encode(&scene.interest)),
    });
    out.write_json("scene.json", &doc)?;
    let text = format!(
        "scene {}x{} seed {}: {} targets, training region {} ({:.2}% target pixels)\n",
        params.rows,
        params.cols,
        params.seed,
        scene.truth.len(),
        doc["region_arg"].as_str().unwrap_or(""),
        100.0 * scene.training_contamination(&params)
    );
    Ok(Rendered { json: doc.clone(), csv: truth, text })
}
