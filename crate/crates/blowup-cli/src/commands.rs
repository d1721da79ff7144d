//! The six commands. Each resolves and validates its options, closes the
//! config (unknown keys fail here, before any computation), then runs.

use crate::config::Resolver;
use crate::output::{Cell, Table};
use crate::*;
use blowup_core::barriers::{verify_all, BarrierOutcome, DEFAULT_SEED};
use blowup_core::orbits::{run_orbit, sigma_star, sweep_sigma, FateOptions, Source, DEFAULT_DELTA};
use blowup_core::parameters::{interface_xi_of_lambda, p2_coordinates};
use blowup_core::phase_field::{p2_e3, p2_lambda3};
use blowup_core::profiles::{
    bracket_from_scan, find_good_profile_p1, integrate_ssode, near_interface_fit, scan_p1, slope_residual,
    ssode_residual, Origin, ProfileFate, SsodeControls,
};
use blowup_core::{IntegrationControls, Params};
use serde_json::{json, Map};

pub type Echo = BTreeMap<String, Value>;

#[derive(Debug)]
pub struct Outcome {
    pub results: Value,
    pub table: Table,
    pub warnings: Vec<String>,
    pub code: i32,
}

/// Window before the interface for the affine fit of f^(m-1).
const FIT_WINDOW: f64 = 0.01;
const DEFAULT_Z0: f64 = 1e-6;
const DEFAULT_N: usize = 10_000;

pub fn execute(cmd: &Command, res: Resolver) -> Result<(Echo, Outcome), Failure> {
    match cmd {
        Command::Params(a) => params(a, res),
        Command::Classify(a) => classify(a, res),
        Command::SigmaStar(a) => shoot(a, res),
        Command::Profile(a) => profile(a, res),
        Command::Verify(a) => verify(a, res),
        Command::Sweep(a) => sweep(a, res),
    }
}

fn check_sigma(sigma: f64) -> Result<(), Failure> {
    if sigma < 2.0 + SIGMA_MARGIN {
        return Err(Failure::usage(format!("sigma = {sigma} is within {SIGMA_MARGIN} of 2, where the exponents diverge")));
    }
    Ok(())
}

fn model(res: &mut Resolver, a: &ModelArgs) -> Result<Params, Failure> {
    let m = res.required("m", a.m)?;
    let sigma = res.required("sigma", a.sigma)?;
    let p = Params::new(m, sigma)?;
    check_sigma(sigma)?;
    Ok(p)
}

fn controls(res: &mut Resolver, a: &ControlArgs, base: IntegrationControls) -> Result<IntegrationControls, Failure> {
    let c = IntegrationControls {
        rel_tol: res.value("rel-tol", a.rel_tol, base.rel_tol)?,
        abs_tol: res.value("abs-tol", a.abs_tol, base.abs_tol)?,
        max_step: res.value("max-step", a.max_step, base.max_step)?,
        max_time: res.value("max-time", a.max_time, base.max_time)?,
        max_steps: res.value("max-steps", a.max_steps, base.max_steps)?,
        sample_stride: res.value("stride", a.stride, base.sample_stride)?,
    };
    c.validate()?;
    Ok(c)
}

fn flat(pairs: &[(&str, Value)]) -> Value {
    Value::Object(pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect::<Map<_, _>>())
}

fn params(a: &ModelArgs, mut res: Resolver) -> Result<(Echo, Outcome), Failure> {
    let p = model(&mut res, a)?;
    let echo = res.finish()?;
    let e = p.exponents();
    let q = p2_coordinates(&p);
    let v = p2_e3(&p);
    let vals: Vec<(&str, f64)> = vec![
        ("m", p.m),
        ("p", p.p),
        ("sigma", p.sigma),
        ("alpha", e.alpha),
        ("beta", e.beta),
        ("beta_over_alpha", p.beta_over_alpha()),
        ("xi_max", e.xi_max),
        ("z_max", e.z_max),
        ("p2_x", q.x),
        ("p2_y", q.y),
        ("p2_z", q.z),
        ("p2_lambda3", p2_lambda3(&p)),
        ("p2_e3_x", v[0]),
        ("p2_e3_y", v[1]),
        ("p2_e3_z", v[2]),
        ("parabola_lambda_min", -p.beta_over_alpha()),
        ("parabola_lambda_max", 0.0),
        ("vertex_lambda", p.vertex_lambda()),
        ("vertex_z", e.z_max),
    ];
    let mut table = Table::new(&["key", "value"]);
    for (k, x) in &vals {
        table.push(vec![Cell::from(*k), Cell::Num(*x)]);
    }
    let results = flat(&vals.iter().map(|(k, x)| (*k, json!(x))).collect::<Vec<_>>());
    Ok((echo, Outcome { results, table, warnings: Vec::new(), code: EXIT_OK }))
}

fn classify(a: &ClassifyArgs, mut res: Resolver) -> Result<(Echo, Outcome), Failure> {
    let p = model(&mut res, &a.model)?;
    let src = match res.value("source", a.source, OrbitSource::P2)? {
        OrbitSource::P2 => Source::P2 { delta: res.value("delta", a.delta, DEFAULT_DELTA)? },
        OrbitSource::P0 => Source::P0 { k: res.required("K", a.k)?, z0: res.value("z0", a.z0, DEFAULT_Z0)? },
        OrbitSource::Q1 => Source::Q1 { a: res.required("a", a.a)?, delta: res.value("delta", a.delta, DEFAULT_DELTA)? },
    };
    let c = controls(&mut res, &a.controls, IntegrationControls::default())?;
    let echo = res.finish()?;

    let run = run_orbit(&p, src, &c, &FateOptions::default())?;
    let kind = run.fate.kind;
    let lambda = kind.lambda_hat();
    let xi0 = lambda.and_then(|l| interface_xi_of_lambda(l, &p).ok());
    let e = run.fate.entry_point;
    let mut table = Table::new(&["eta", "X", "Y", "Z"]);
    for s in &run.trajectory.samples {
        table.push(vec![s.eta.into(), s.point.x.into(), s.point.y.into(), s.point.z.into()]);
    }
    let mut warnings = Vec::new();
    let mut code = EXIT_OK;
    if kind.name() == "Inconclusive" {
        warnings.push(format!("orbit fate inconclusive after eta = {} ({:?})", run.fate.eta_end, run.fate.termination));
        code = EXIT_INCONCLUSIVE;
    }
    let results = flat(&[
        ("fate", json!(kind.name())),
        ("lambda_hat", json!(lambda)),
        ("xi0", json!(xi0)),
        ("entry_x", json!(e.x)),
        ("entry_y", json!(e.y)),
        ("entry_z", json!(e.z)),
        ("start_x", json!(run.start.x)),
        ("start_y", json!(run.start.y)),
        ("start_z", json!(run.start.z)),
        ("termination", json!(format!("{:?}", run.fate.termination))),
        ("eta_end", json!(run.fate.eta_end)),
        ("events", json!(run.fate.diagnostics.iter().map(|d| d.id.clone()).collect::<Vec<_>>())),
        ("samples", json!(run.trajectory.samples.len())),
        ("chart_leg_samples", json!(run.chart_leg.as_ref().map(|t| t.samples.len()))),
    ]);
    Ok((echo, Outcome { results, table, warnings, code }))
}

fn shoot(a: &SigmaStarArgs, mut res: Resolver) -> Result<(Echo, Outcome), Failure> {
    let m = res.required("m", a.m)?;
    let lo = res.required("lo", a.lo)?;
    let hi = res.required("hi", a.hi)?;
    let tol = res.value("tol", a.tol, 1e-3)?;
    let c = controls(&mut res, &a.controls, IntegrationControls::default())?;
    let echo = res.finish()?;
    Params::new(m, hi)?;
    check_sigma(lo)?;

    let r = sigma_star(m, (lo, hi), tol, &c, &FateOptions::default())?;
    let mut table = Table::new(&["sigma", "fate"]);
    for (s, f) in &r.history {
        table.push(vec![Cell::Num(*s), Cell::from(f.as_str())]);
    }
    let (fl, fh) = &r.fate_at_ends;
    let results = flat(&[
        ("sigma_star", json!(r.sigma_star)),
        ("bracket_lo", json!(r.bracket.0)),
        ("bracket_hi", json!(r.bracket.1)),
        ("iterations", json!(r.iterations)),
        ("fate_lo", json!(fl.kind.name())),
        ("fate_hi", json!(fh.kind.name())),
        ("lambda_hat_lo", json!(fl.kind.lambda_hat())),
        ("lambda_hat_hi", json!(fh.kind.lambda_hat())),
        ("evaluations", json!(r.history.len())),
    ]);
    Ok((echo, Outcome { results, table, warnings: Vec::new(), code: EXIT_OK }))
}

fn profile(a: &ProfileArgs, mut res: Resolver) -> Result<(Echo, Outcome), Failure> {
    let p = model(&mut res, &a.model)?;
    let origin = res.value("origin", a.origin, ProfileOrigin::P2)?;
    let base = SsodeControls::default();
    let c = SsodeControls {
        integration: controls(&mut res, &a.controls, base.integration)?,
        xi_start: res.value("xi-start", a.xi_start, base.xi_start)?,
        ..base
    };

    enum Plan {
        Single(Origin),
        Bisect { bracket: Option<(f64, f64)>, scan: (f64, f64, usize), tol: f64 },
    }
    let plan = match origin {
        ProfileOrigin::P2 => Plan::Single(Origin::P2),
        ProfileOrigin::P0 => Plan::Single(Origin::P0 { k: res.required("K", a.k)? }),
        ProfileOrigin::P1 => {
            let (flag_lo, flag_hi) = match a.a_bracket.as_deref() {
                Some([lo, hi]) => (Some(*lo), Some(*hi)),
                _ => (None, None),
            };
            let single = res.optional("a", a.a)?;
            let lo = res.optional("a-lo", flag_lo)?;
            let hi = res.optional("a-hi", flag_hi)?;
            let tol = res.value("tol", a.tol, 1e-6)?;
            let scan = (
                res.value("scan-lo", a.scan_lo, 1e-16)?,
                res.value("scan-hi", a.scan_hi, 1.0)?,
                res.value("scan-points", a.scan_points, 17)?,
            );
            match (single, lo, hi) {
                (Some(v), None, None) => Plan::Single(Origin::P1 { a: v }),
                (None, Some(lo), Some(hi)) => Plan::Bisect { bracket: Some((lo, hi)), scan, tol },
                (None, None, None) => Plan::Bisect { bracket: None, scan, tol },
                _ => return Err(Failure::usage("give either --a or both ends of --a-bracket")),
            }
        }
    };
    c.validate()?;
    let echo = res.finish()?;

    let mut extra: Vec<(&str, Value)> = Vec::new();
    let mut warnings = Vec::new();
    let run = match plan {
        Plan::Single(o) => integrate_ssode(o, &p, &c)?,
        Plan::Bisect { bracket, scan, tol } => {
            let br = match bracket {
                Some(b) => b,
                None => {
                    let s = scan_p1(&p, (scan.0, scan.1), scan.2, &c)?;
                    extra.push(("scan", json!(s.iter().map(|(a, f)| json!([a, f.name()])).collect::<Vec<_>>())));
                    bracket_from_scan(&s).ok_or_else(|| Failure {
                        code: EXIT_INCONCLUSIVE,
                        message: format!("no sign-change/positive dichotomy in the scan of a over ({}, {})", scan.0, scan.1),
                    })?
                }
            };
            let g = find_good_profile_p1(&p, br, tol, &c)?;
            extra.push(("a_star", json!(g.a_star)));
            extra.push(("a_lo", json!(g.bracket.0)));
            extra.push(("a_hi", json!(g.bracket.1)));
            extra.push(("iterations", json!(g.iterations)));
            extra.push(("evaluations", json!(g.history.len())));
            if g.run.fate.name() != "Interface" {
                warnings.push(format!(
                    "profile at a = {} ends {}; a dichotomy this far out can come from the xi cap rather than an interface",
                    g.a_star,
                    g.run.fate.name()
                ));
            }
            g.run
        }
    };

    let mut table = Table::new(&["xi", "f", "df"]);
    for s in &run.samples {
        table.push(vec![s.xi.into(), s.f.into(), s.df.into()]);
    }
    let residual = match ssode_residual(&run.samples, &p) {
        Ok(r) => Some(r),
        Err(e) => {
            warnings.push(format!("residual not computed: {e}"));
            None
        }
    };
    let (xi0, g_slope) = match run.fate {
        ProfileFate::Interface { xi0, g_slope } | ProfileFate::SignChange { xi0, g_slope } => (Some(xi0), Some(g_slope)),
        _ => (None, None),
    };
    let fit = match run.fate {
        ProfileFate::Interface { xi0, .. } => near_interface_fit(&run.samples, xi0, FIT_WINDOW, &p),
        _ => None,
    };
    let iface = run.interface.as_ref();
    let mut code = EXIT_OK;
    if run.fate == ProfileFate::Inconclusive {
        warnings.push("profile fate inconclusive".into());
        code = EXIT_INCONCLUSIVE;
    }
    let mut pairs = vec![
        ("origin", json!(origin)),
        ("fate", json!(run.fate.name())),
        ("xi0", json!(xi0)),
        ("g_slope", json!(g_slope)),
        ("xi_max", json!(p.exponents().xi_max)),
        ("slope_residual", json!(xi0.zip(g_slope).map(|(x, g)| slope_residual(x, g, &p)))),
        ("slope_minus", json!(iface.and_then(|i| i.slope_minus))),
        ("slope_plus", json!(iface.and_then(|i| i.slope_plus))),
        ("matched_slope", json!(iface.and_then(|i| i.matched_slope))),
        ("discriminant", json!(iface.map(|i| i.discriminant))),
        ("residual", json!(residual)),
        ("fit_slope", json!(fit.map(|f| f.0))),
        ("fit_r2", json!(fit.map(|f| f.2))),
        ("certificate", json!(run.certificate)),
        ("mode_switches", json!(run.mode_switches)),
        ("samples", json!(run.samples.len())),
    ];
    pairs.extend(extra);
    Ok((echo, Outcome { results: flat(&pairs), table, warnings, code }))
}

fn verify(a: &VerifyArgs, mut res: Resolver) -> Result<(Echo, Outcome), Failure> {
    let p = model(&mut res, &a.model)?;
    let ids: Vec<String> = res.list("barrier", a.barrier.clone())?;
    let all = res.switch("all", a.all)?;
    let n = res.value("n", a.n, DEFAULT_N)?;
    let seed = res.value("seed", a.seed, DEFAULT_SEED)?;
    let echo = res.finish()?;
    if all == !ids.is_empty() {
        return Err(Failure::usage("give either --all or at least one --barrier id"));
    }

    let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
    let out = verify_all(&p, &refs, n, seed)?;
    let mut table = Table::new(&["barrier", "status", "samples", "violations", "worst_margin", "identity_error"]);
    let mut warnings = Vec::new();
    let (mut asserted, mut gated, mut failed, mut empty) = (0usize, 0usize, Vec::new(), 0usize);
    for o in &out {
        match o {
            BarrierOutcome::NotApplicable { barrier, .. } => {
                empty += 1;
                table.push(vec![barrier.as_str().into(), "not_applicable".into(), Cell::Missing, Cell::Missing, Cell::Missing, Cell::Missing]);
            }
            BarrierOutcome::Verified(r) => {
                let holds = r.hypotheses.iter().all(|h| h.holds);
                let status = match (holds, r.passed) {
                    (true, true) => "pass",
                    (true, false) => "fail",
                    (false, true) => "pass_ungated",
                    (false, false) => "fail_ungated",
                };
                if holds {
                    asserted += 1;
                    if !r.passed {
                        failed.push(r.barrier.clone());
                    }
                } else {
                    gated += 1;
                    if !r.passed {
                        warnings.push(format!("{}: {} violations outside its hypotheses", r.barrier, r.violation_count));
                    }
                }
                table.push(vec![
                    r.barrier.as_str().into(),
                    status.into(),
                    Cell::Int(r.samples_tested as i64),
                    Cell::Int(r.violation_count as i64),
                    r.worst_margin.into(),
                    r.identity_error.into(),
                ]);
            }
        }
    }
    let code = if failed.is_empty() { EXIT_OK } else { EXIT_VIOLATION };
    let results = flat(&[
        ("asserted", json!(asserted)),
        ("outside_hypotheses", json!(gated)),
        ("not_applicable", json!(empty)),
        ("failed", json!(failed)),
        ("barriers", serde_json::to_value(&out)?),
    ]);
    Ok((echo, Outcome { results, table, warnings, code }))
}

fn sweep(a: &SweepArgs, mut res: Resolver) -> Result<(Echo, Outcome), Failure> {
    let m = res.required("m", a.m)?;
    let sigmas = res.list("sigmas", a.sigmas.clone())?;
    let parallel = res.switch("parallel", a.parallel)?;
    let c = controls(&mut res, &a.controls, IntegrationControls::default())?;
    let echo = res.finish()?;
    if sigmas.is_empty() {
        return Err(Failure::usage("empty sigma grid"));
    }
    for &s in &sigmas {
        Params::new(m, s)?;
        check_sigma(s)?;
    }

    let rows = sweep_sigma(m, &sigmas, &c, &FateOptions::default(), parallel)?;
    let mut table = Table::new(&["sigma", "fate", "lambda_hat", "xi0"]);
    let mut warnings = Vec::new();
    for r in &rows {
        table.push(vec![r.sigma.into(), r.fate.name().into(), r.fate.lambda_hat().into(), r.xi0.into()]);
        if r.fate.name() == "Inconclusive" {
            warnings.push(format!("sigma = {}: fate inconclusive", r.sigma));
        }
    }
    let code = if warnings.is_empty() { EXIT_OK } else { EXIT_INCONCLUSIVE };
    let rows: Vec<Value> = rows
        .iter()
        .map(|r| json!({"sigma": r.sigma, "fate": r.fate.name(), "lambda_hat": r.fate.lambda_hat(), "xi0": r.xi0}))
        .collect();
    let results = flat(&[("m", json!(m)), ("rows", json!(rows))]);
    Ok((echo, Outcome { results, table, warnings, code }))
}
