use std::fmt::Write as _;
use std::path::Path;

use ldp_core::arith::{primes_in_range, PrimeWindow};
use ldp_core::bounds::{
    hardy_ramanujan_scan, nair_tenenbaum_audit, norton_grid, radical_sum_grid, truncated_moment_audit, NORTON_BETA,
    NORTON_X,
};
use ldp_core::lab::{
    exponent_regression, set_algebra_audit, synthetic_exponent_report, tail_count, truncation_gap, ExperimentConfig,
    ThresholdMode, WindowStrategy,
};
use ldp_core::rate::{candidate_exponents, ldp_bracket, Interval, PoissonLimit, RateFunction};
use ldp_core::sigma::{enumerated_table, fit_delta_beta, synthetic_sigma, SigmaTable};
use ldp_core::{Error, FloatModel, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{RunConfig, SigmaSource, SCHEMA_VERSION};

/// One output file, fully rendered before anything touches the disk.
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

/// The artifacts of one subcommand plus its summary.
pub struct Output {
    pub artifacts: Vec<Artifact>,
    pub summary: Value,
}

impl Output {
    fn new(summary: Value) -> Self {
        Self {
            artifacts: Vec::new(),
            summary,
        }
    }

    fn csv(&mut self, cfg: &RunConfig, name: &str, body: &str) {
        let mut contents = format!("# schema_version={SCHEMA_VERSION}\n# config={}\n", cfg.echo());
        contents.push_str(body);
        self.push(name, contents);
    }

    fn text(&mut self, cfg: &RunConfig, name: &str, body: &str) {
        let contents = format!("schema_version: {SCHEMA_VERSION}\nconfig: {}\n\n{body}", cfg.echo());
        self.push(name, contents);
    }

    fn json(&mut self, cfg: &RunConfig, name: &str, data: impl Serialize) -> Result<()> {
        let contents = envelope(cfg, serde_json::to_value(data)?);
        self.push(name, contents);
        Ok(())
    }

    fn push(&mut self, name: &str, contents: String) {
        self.artifacts.push(Artifact {
            name: name.to_string(),
            contents,
        });
    }
}

pub fn envelope(cfg: &RunConfig, data: Value) -> String {
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "config": serde_json::to_value(cfg).expect("config serializes"),
        "data": data,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("json value serializes");
    s.push('\n');
    s
}

fn budget_refusal(what: &'static str, required: u64, limit: u64) -> Result<()> {
    if required > limit {
        Err(Error::Budget {
            what,
            required: required as u128,
            limit: limit as u128,
        })
    } else {
        Ok(())
    }
}

pub fn sieve(cfg: &RunConfig) -> Result<Output> {
    let s = &cfg.sieve;
    if s.hi < s.lo {
        return Err(Error::InvalidInput("sieve needs lo <= hi".into()));
    }
    budget_refusal("sieve range", s.hi, cfg.budget.primes)?;
    let primes = primes_in_range(s.lo, s.hi);
    let mut body = String::from("index,p\n");
    for (i, p) in primes.iter().enumerate() {
        let _ = writeln!(body, "{i},{p}");
    }
    let reciprocal: f64 = primes.iter().map(|&p| 1.0 / p as f64).sum();
    let mut out = Output::new(json!({
        "lo": s.lo,
        "hi": s.hi,
        "count": primes.len(),
        "largest": primes.last(),
        "reciprocal_sum": reciprocal,
    }));
    out.csv(cfg, "primes.csv", &body);
    Ok(out)
}

fn build_table(cfg: &RunConfig) -> Result<SigmaTable> {
    let t_max = cfg.sigma.t_max;
    budget_refusal("sigma table range", t_max, cfg.budget.primes)?;
    match &cfg.sigma.source {
        SigmaSource::Enumerated => {
            let model = cfg.model()?;
            let lo = model.bad_bound();
            if t_max <= lo {
                return Err(Error::InvalidInput(format!(
                    "t-max = {t_max} does not exceed the bad-prime bound {lo}"
                )));
            }
            enumerated_table(model, PrimeWindow::new(lo, t_max), cfg.budget.enumeration)
        }
        SigmaSource::Synthetic { rule } => synthetic_sigma(rule, PrimeWindow::new(1, t_max)),
    }
}

fn default_fit_grid(lo: u64, t_max: u64) -> Vec<u64> {
    let start = ((t_max as f64).sqrt() as u64).max(lo + 1).max(3);
    let (a, b) = ((start as f64).ln(), (t_max as f64).ln());
    let mut grid: Vec<u64> = (0..8)
        .map(|i| (a + (b - a) * i as f64 / 7.0).exp().round() as u64)
        .map(|t| t.clamp(start, t_max))
        .collect();
    grid.dedup();
    grid
}

pub fn sigma(cfg: &RunConfig) -> Result<Output> {
    let table = build_table(cfg)?;
    let grid = match &cfg.sigma.fit_grid {
        Some(g) => g.clone(),
        None => default_fit_grid(table.window().lo, cfg.sigma.t_max),
    };
    let fit = fit_delta_beta(&table, &grid)?;
    let analytic = match (&cfg.sigma.source, &cfg.model) {
        (SigmaSource::Enumerated, Some(m)) => Some(m.delta_invariant()),
        _ => None,
    };
    let violations = match (&cfg.sigma.source, &cfg.model) {
        (SigmaSource::Enumerated, Some(m)) => Some(table.degree_bound_violations(m.product_degree())),
        _ => None,
    };
    let mut out = Output::new(json!({
        "primes": table.len(),
        "window": [table.window().lo, table.window().hi],
        "provenance": table.provenance().to_string(),
        "delta_hat": fit.delta_hat,
        "beta_hat": fit.beta_hat,
        "delta_analytic": analytic,
        "degree_bound_violations": violations,
    }));
    let sigma_csv = format!("# config={}\n{}", cfg.echo(), table.to_csv_string());
    out.push("sigma.csv", sigma_csv);
    out.json(cfg, "fit.json", &fit)?;
    Ok(out)
}

pub fn model(cfg: &RunConfig) -> Result<Output> {
    let sec = &cfg.model_run;
    let m = match &sec.probabilities {
        Some(p) => FloatModel::from_probabilities(p.clone())?,
        None => {
            let table = build_table(cfg)?;
            FloatModel::from_table(&table, table.window())?
        }
    };
    let cap = sec.cap.unwrap_or(m.len()).min(m.len());
    let pmf = m.exact_pmf(cap);
    let complete = cap == m.len();

    let exact_moments: Vec<f64> = (0..=sec.max_moment).map(|r| m.moment_exact(r)).collect();
    let recursion = m.moments_by_recursion(sec.max_moment);
    let mut moments = String::from("r,moment_pmf,moment_recursion\n");
    for r in 0..=sec.max_moment as usize {
        let _ = writeln!(moments, "{r},{:.15e},{:.15e}", exact_moments[r], recursion[r]);
    }

    let hist = if sec.samples > 0 {
        Some(m.sample(cfg.seed, sec.samples)?)
    } else {
        None
    };
    let mut mgf = String::from("t,log_mgf,mgf_product,mgf_pmf,normalized_log_mgf,mc_mean,mc_se\n");
    for &t in &sec.t_grid {
        let pmf_mgf = if complete { format!("{:.15e}", pmf.mgf(t)) } else { String::new() };
        let normalized = match sec.b {
            Some(b) => format!("{:.15e}", m.normalized_log_mgf(t, b)?),
            None => String::new(),
        };
        let (mc_mean, mc_se) = match &hist {
            Some(h) => {
                let (a, b) = h.mgf_estimate(t);
                (format!("{a:.15e}"), format!("{b:.15e}"))
            }
            None => (String::new(), String::new()),
        };
        let _ = writeln!(
            mgf,
            "{t},{:.15e},{:.15e},{pmf_mgf},{normalized},{mc_mean},{mc_se}",
            m.log_mgf(t),
            m.mgf_exact(t)
        );
    }

    let mut out = Output::new(json!({
        "indicators": m.len(),
        "mean": m.mean(),
        "cap": cap,
        "overflow": pmf.overflow,
        "pmf_total": pmf.total(),
        "samples": sec.samples,
        "seed": cfg.seed,
    }));
    out.csv(cfg, "pmf.csv", &pmf.to_csv());
    out.csv(cfg, "moments.csv", &moments);
    out.csv(cfg, "mgf.csv", &mgf);
    if let Some(h) = &hist {
        let mut body = String::from("k,count,frequency\n");
        for (k, c) in h.counts.iter().enumerate() {
            let _ = writeln!(body, "{k},{c},{:.15e}", h.frequency(k));
        }
        out.csv(cfg, "histogram.csv", &body);
    }
    Ok(out)
}

pub fn rate(cfg: &RunConfig) -> Result<Output> {
    let sec = &cfg.rate;
    let rf = RateFunction::tabulate(sec.delta, &sec.x_grid)?;
    let lambda = PoissonLimit { delta: sec.delta };
    let mut brackets = Vec::new();
    for eps in cfg.epsilons() {
        let b = ldp_bracket(&lambda, &Interval::half_open(0.0, eps)?)?;
        let (printed, assembled) = candidate_exponents(eps, sec.delta);
        brackets.push(json!({
            "epsilon": eps,
            "interior": b.interior,
            "closure": b.closure,
            "printed_candidate": printed,
            "assembled_candidate": assembled,
        }));
    }
    let mut out = Output::new(json!({
        "delta": sec.delta,
        "rate_at_delta": rf.value_at(sec.delta),
        "nonnegative": rf.is_nonnegative(),
        "convex": rf.is_convex(1e-9),
        "brackets": brackets,
    }));
    out.csv(cfg, "rate.csv", &rf.to_csv());
    Ok(out)
}

pub fn experiment(cfg: &RunConfig) -> Result<Output> {
    let sec = &cfg.experiment;
    let exp = ExperimentConfig {
        model: cfg.model()?.clone(),
        b_grid: cfg.b_grid()?.to_vec(),
        epsilons: cfg.epsilons(),
        window: cfg.window.unwrap_or(WindowStrategy::Full),
        modes: sec
            .modes
            .clone()
            .unwrap_or_else(|| vec![ThresholdMode::Global, ThresholdMode::Pointwise]),
        loglog_floor: sec.loglog_floor.unwrap_or(1e-6),
        budget: cfg.budget.points,
    };
    exp.validate()?;
    let report = tail_count(&exp)?;
    let fits = exponent_regression(&report, None)?;
    let mut summary = json!({
        "delta": report.delta,
        "totals": exp.b_grid.iter().map(|&b| {
            report.rows.iter().find(|r| r.b == b).map(|r| r.total)
        }).collect::<Vec<_>>(),
        "fits": &fits,
    });
    let mut out = Output::new(Value::Null);
    out.csv(cfg, "tail.csv", &report.to_csv());
    out.json(cfg, "regression.json", &fits)?;
    if let Some(d) = sec.truncation_delta {
        let gaps = truncation_gap(&exp, d)?;
        let mut body = String::from("B,threshold,count,max_gap\n");
        for g in &gaps {
            let _ = writeln!(body, "{},{:.12e},{},{}", g.b, g.delta_threshold, g.count, g.max_gap);
        }
        out.csv(cfg, "truncation_gap.csv", &body);
    }
    if let Some(s) = &sec.set_algebra {
        let window = exp.window_for(s.b)?;
        let audit = set_algebra_audit(&exp.model, s.b, window, s.epsilon, s.delta, cfg.budget.points)?;
        summary["set_algebra_holds"] = json!(audit.holds());
        out.json(cfg, "set_algebra.json", &audit)?;
    }
    if let Some(s) = &sec.synthetic_exponent {
        let rep = synthetic_exponent_report(s.epsilon, s.delta, &s.b_grid)?;
        summary["synthetic_exponent"] = json!({
            "printed": rep.printed_exponent,
            "assembled": rep.assembled_exponent,
            "target": rep.target,
            "gap_at_largest": rep.gap_at_largest,
        });
        out.json(cfg, "synthetic_exponent.json", &rep)?;
    }
    out.summary = summary;
    Ok(out)
}

pub fn bounds(cfg: &RunConfig) -> Result<Output> {
    let sec = &cfg.bounds;
    let budget = cfg.budget.bounds;
    let mut out = Output::new(Value::Null);
    let mut summary = serde_json::Map::new();
    if sec.norton {
        let rep = norton_grid(&NORTON_X, &NORTON_BETA)?;
        summary.insert("norton".into(), json!({"holds": rep.holds(), "min_margin": rep.min_margin()}));
        out.csv(cfg, "norton.csv", &rep.to_csv());
        out.text(cfg, "norton.txt", &rep.to_text_table());
    }
    if let Some(hr) = &sec.hardy_ramanujan {
        let scan = hardy_ramanujan_scan(hr.t_max, hr.x_max, budget)?;
        summary.insert(
            "hardy_ramanujan".into(),
            json!({
                "holds": scan.report.holds(),
                "partition_ok": scan.partition_ok,
                "worst": scan.worst,
            }),
        );
        out.csv(cfg, "hardy_ramanujan.csv", &scan.report.to_csv());
        out.text(cfg, "hardy_ramanujan.txt", &scan.report.to_text_table());
    }
    if let Some(rad) = &sec.radical {
        let (rep, sums) = radical_sum_grid(&rad.r, &rad.t, budget)?;
        summary.insert("radical_sum".into(), json!({"holds": rep.holds(), "exact": sums}));
        out.csv(cfg, "radical_sum.csv", &rep.to_csv());
        out.text(cfg, "radical_sum.txt", &rep.to_text_table());
    }
    if let Some(nt) = &sec.nair_tenenbaum {
        let rep = nair_tenenbaum_audit(&nt.f, &nt.form, &nt.b_grid, budget)?;
        summary.insert("nair_tenenbaum".into(), json!({"bounded": rep.bounded()}));
        out.csv(cfg, "nair_tenenbaum.csv", &rep.to_csv());
    }
    if let Some(tm) = &sec.truncated_moment {
        let rep = truncated_moment_audit(&tm.form, tm.b, tm.c1, tm.c2, tm.y, tm.big_n, budget)?;
        summary.insert("truncated_moment".into(), serde_json::to_value(&rep)?);
    }
    out.summary = Value::Object(summary);
    Ok(out)
}

pub const SUMMARY_ORDER: [&str; 6] = ["sieve", "sigma", "model", "rate", "experiment", "bounds"];

/// Merges the summaries already present under `dir`.
pub fn report(cfg: &RunConfig, dir: &Path) -> Result<Output> {
    let mut merged = serde_json::Map::new();
    let mut missing = Vec::new();
    for name in SUMMARY_ORDER {
        let path = dir.join(name).join("summary.json");
        match std::fs::read_to_string(&path) {
            Ok(text) => {
                let v: Value = serde_json::from_str(&text)?;
                merged.insert(name.to_string(), v);
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => missing.push(name),
            Err(e) => return Err(e.into()),
        }
    }
    let mut out = Output::new(json!({"present": merged.keys().collect::<Vec<_>>(), "missing": missing}));
    out.json(cfg, "report.json", Value::Object(merged))?;
    Ok(out)
}
