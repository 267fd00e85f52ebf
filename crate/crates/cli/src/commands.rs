//! Subcommand bodies. Each is generic over the numeric representation and
//! returns a [`Report`]; failed checks mark the report instead of erroring,
//! so the numbers are still printed.

use std::time::Duration;

use mec_core::greedy::{lower_bounds, DEFAULT_Z};
use mec_core::majorization::check_meet;
use mec_core::majorizing_set::{gprime, uniform_gap};
use mec_core::oracle::{exact_mec, OracleCaps};
use mec_core::scalar::parse_rational;
use mec_core::split::{split, MAX_Z};
use mec_core::verify::{run_verify, VerifyConfig};
use mec_core::{
    entropy, meet, BoundReport, Cell, Instance, NumericMode, Scalar, Tolerance, LOG2_E,
};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::report::{
    fixed, float_json, mass_json, mass_text, masses_json, masses_text, ok, rational_json, Report,
};

/// Settings shared by every subcommand.
pub struct Context {
    pub tol: Tolerance,
    pub tail: String,
}

impl Context {
    fn tail<T: Scalar>(&self) -> Result<T, CliError> {
        parse_value(&self.tail, "--tail")
    }
}

pub fn parse_value<T: Scalar>(text: &str, flag: &str) -> Result<T, CliError> {
    parse_rational(text)
        .map(|v| T::from_rational(&v))
        .ok_or_else(|| CliError::Input(format!("{flag}: not a number: \"{text}\"")))
}

pub fn check_zs(zs: &[u64]) -> Result<(), CliError> {
    match zs.iter().find(|z| !(2..=MAX_Z).contains(*z)) {
        Some(z) => Err(CliError::Input(format!(
            "--z: {z} must lie in [2, {MAX_Z}]"
        ))),
        None => Ok(()),
    }
}

fn header<T: Scalar>(r: &mut Report, instance: &Instance<T>) {
    r.set("numeric_mode", T::MODE.as_str());
    r.set("m", instance.m());
    r.set("n", instance.n());
    r.line(format!(
        "instance: m = {}, n = {} ({})",
        instance.m(),
        instance.n(),
        T::MODE
    ));
}

fn cell_text(indices: &[usize]) -> String {
    let parts: Vec<String> = indices.iter().map(|i| i.to_string()).collect();
    format!("({})", parts.join(", "))
}

fn cells_json<T: Scalar>(cells: &[Cell<T>]) -> Value {
    cells
        .iter()
        .map(|c| json!({ "indices": c.indices, "mass": mass_json(&c.mass) }))
        .collect()
}

pub fn couple<T: Scalar>(
    instance: &Instance<T>,
    zs: &[u64],
    ctx: &Context,
) -> Result<Report, CliError> {
    check_zs(zs)?;
    let tol = ctx.tol;
    let report = BoundReport::build(instance, zs, tol);
    let mut r = Report::new("couple");
    header(&mut r, instance);

    let cells = report.trace.coupling.cells();
    r.set("cells", cells_json(cells));
    r.line(format!("coupling cells ({}):", cells.len()));
    for c in cells {
        r.line(format!(
            "  {}  {}",
            cell_text(&c.indices),
            mass_text(&c.mass)
        ));
    }
    if report.trace.leftover > 0.0 {
        r.line(format!(
            "unassigned float residue: {:e}",
            report.trace.leftover
        ));
    }
    r.set("leftover", float_json(report.trace.leftover));

    r.set("meet", masses_json(report.meet.meet.probs()));
    r.set("coupling_entropy", float_json(report.coupling_entropy));
    r.set("meet_entropy", float_json(report.meet_entropy));
    r.set("gap", float_json(report.gap));
    r.line(format!(
        "meet         {}",
        masses_text(report.meet.meet.probs())
    ));
    r.line(format!("H(coupling)  {}", fixed(report.coupling_entropy)));
    r.line(format!("H(meet)      {}", fixed(report.meet_entropy)));
    r.line(format!(
        "gap          {}  (band [0, {}])",
        fixed(report.gap),
        fixed(LOG2_E)
    ));

    let masses = report.trace.masses();
    let bounds = lower_bounds(&masses, report.meet.meet.probs());
    let mut rows = Vec::with_capacity(masses.len());
    r.line("step certificate:");
    r.line("  step  mass  bound  j  check");
    for (i, (g, (lb, j))) in masses.iter().zip(&bounds).enumerate() {
        let holds = lb.le_tol(g, tol.compare);
        rows.push(json!({
            "step": i + 1,
            "mass": mass_json(g),
            "bound": mass_json(lb),
            "argmax_j": j,
            "holds": holds,
        }));
        r.line(format!(
            "  {}  {}  {}  {}  {}",
            i + 1,
            mass_text(g),
            mass_text(lb),
            j,
            ok(holds)
        ));
    }
    r.set("certificate", rows);

    let mut split_rows = Vec::new();
    r.line("split bounds:");
    for &(z, b) in &report.split_bounds {
        let holds = report.coupling_entropy <= b + tol.compare;
        split_rows.push(json!({ "z": z, "bound": float_json(b), "holds": holds }));
        r.line(format!(
            "  z = {z}  H(coupling) <= {}  {}",
            fixed(b),
            ok(holds)
        ));
    }
    r.set("split_bounds", split_rows);

    let checks = json!({
        "marginals": report.marginals_ok,
        "certificate": report.certificate.is_some(),
        "lower": report.lower_ok,
        "upper": report.upper_ok,
        "split_bounds": report.split_bounds_ok(tol),
    });
    r.line(format!(
        "checks: marginals {}, certificate {}, lower {}, upper {}, split {}",
        ok(report.marginals_ok),
        ok(report.certificate.is_some()),
        ok(report.lower_ok),
        ok(report.upper_ok),
        ok(report.split_bounds_ok(tol))
    ));
    r.set("checks", checks);
    r.passed = report.passed(tol);
    r.set("passed", r.passed);
    Ok(r)
}

pub fn meet_cmd<T: Scalar>(instance: &Instance<T>, ctx: &Context) -> Result<Report, CliError> {
    let result = meet(instance);
    let mut r = Report::new("meet");
    header(&mut r, instance);
    let h = entropy(result.meet.probs());
    r.set("meet", masses_json(result.meet.probs()));
    r.set("per_index_argmin", result.per_index_argmin.clone());
    r.set("entropy", float_json(h));
    r.line(format!("meet     {}", masses_text(result.meet.probs())));
    r.line(format!("argmin   {:?}", result.per_index_argmin));
    r.line(format!("H(meet)  {}", fixed(h)));
    if let Err(e) = check_meet(instance, &result, ctx.tol) {
        r.line(format!("check: {e}"));
        r.passed = false;
    }
    r.set("passed", r.passed);
    Ok(r)
}

pub fn gprime_cmd<T: Scalar>(instance: &Instance<T>, ctx: &Context) -> Result<Report, CliError> {
    let base = meet(instance).meet;
    let g = gprime(&base, &ctx.tail::<T>()?)?;
    let (h, allowance) = g.entropy_with_allowance();
    let mut r = Report::new("gprime");
    header(&mut r, instance);
    r.set("base", masses_json(base.probs()));
    r.set("states", masses_json(&g.states));
    r.set("argmax_j", g.argmax.clone());
    r.set("residual", mass_json(&g.residual));
    r.set("entropy", float_json(h));
    r.set("allowance", float_json(allowance));
    r.set("base_entropy", float_json(base.entropy()));
    r.line(format!("base      {}", masses_text(base.probs())));
    r.line(format!("states ({}):", g.len()));
    for (i, (s, j)) in g.states.iter().zip(&g.argmax).enumerate() {
        r.line(format!("  {}  {}  j = {j}", i + 1, mass_text(s)));
    }
    r.line(format!("residual  {}", mass_text(&g.residual)));
    r.line(format!(
        "H(states) {}  (+ at most {} for the residual)",
        fixed(h),
        fixed(allowance)
    ));
    r.line(format!("H(base)   {}", fixed(base.entropy())));
    r.set("passed", true);
    Ok(r)
}

pub fn split_cmd<T: Scalar>(
    instance: &Instance<T>,
    gamma: &str,
    ctx: &Context,
) -> Result<Report, CliError> {
    let base = meet(instance).meet;
    let gamma: T = parse_value(gamma, "--gamma")?;
    let s = split(&base, &gamma, &ctx.tail::<T>()?)?;
    let masses = s.masses();
    let mut r = Report::new("split");
    header(&mut r, instance);
    r.set("base", masses_json(base.probs()));
    r.set("gamma", mass_json(&s.gamma));
    r.set(
        "entries",
        s.entries
            .iter()
            .map(|e| json!({ "source": e.source, "geom_index": e.geom_index, "mass": mass_json(&e.mass) }))
            .collect::<Vec<_>>(),
    );
    r.set("tail_bound", mass_json(&s.tail_bound));
    r.set("entropy", float_json(entropy(&masses)));
    r.line(format!("base        {}", masses_text(base.probs())));
    r.line(format!("gamma       {}", mass_text(&s.gamma)));
    r.line(format!("entries ({}):", s.len()));
    for e in &s.entries {
        r.line(format!(
            "  state {} x geom {}  {}",
            e.source,
            e.geom_index,
            mass_text(&e.mass)
        ));
    }
    r.line(format!("tail bound  {}", mass_text(&s.tail_bound)));
    r.line(format!("H(entries)  {}", fixed(entropy(&masses))));
    r.set("passed", true);
    Ok(r)
}

pub fn oracle_cmd<T: Scalar>(
    instance: &Instance<T>,
    caps: OracleCaps,
    ctx: &Context,
) -> Result<Report, CliError> {
    let tol = ctx.tol;
    let result = exact_mec(instance, caps);
    let exact = instance.to_exact();
    let greedy_entropy = mec_core::greedy_couple(&exact).entropy();
    let meet_entropy = entropy(meet(&exact).meet.probs());

    let mut r = Report::new("oracle");
    header(&mut r, instance);
    let cells: Vec<Value> = result
        .best_coupling
        .cells()
        .iter()
        .map(|c| json!({ "indices": c.indices, "mass": rational_json(&c.mass, T::is_exact()) }))
        .collect();
    r.set("cells", cells);
    r.set("best_entropy", float_json(result.best_entropy));
    r.set("greedy_entropy", float_json(greedy_entropy));
    r.set("meet_entropy", float_json(meet_entropy));
    r.set("nodes_explored", result.nodes_explored);
    r.set("exhaustive", result.exhaustive);
    r.set("optimal", result.optimal);

    let label = if result.optimal {
        "optimal"
    } else {
        "best found"
    };
    r.line(format!(
        "{label} coupling ({} cells):",
        result.best_coupling.len()
    ));
    for c in result.best_coupling.cells() {
        let mass = if T::is_exact() {
            mass_text(&c.mass)
        } else {
            fixed(Scalar::to_f64(&c.mass))
        };
        r.line(format!("  {}  {mass}", cell_text(&c.indices)));
    }
    r.line(format!("H(best)      {}", fixed(result.best_entropy)));
    r.line(format!("H(greedy)    {}", fixed(greedy_entropy)));
    r.line(format!("H(meet)      {}", fixed(meet_entropy)));
    r.line(format!(
        "search: {} nodes, exhaustive {}, optimal {}",
        result.nodes_explored, result.exhaustive, result.optimal
    ));

    if !result.exhaustive {
        r.line("search cap reached: the coupling shown is the greedy one");
        r.passed = false;
        r.set("passed", false);
        return Ok(r);
    }
    let limit = if instance.m() == 2 { 1.0 } else { LOG2_E };
    let difference = greedy_entropy - result.best_entropy;
    let meet_ok = result.best_entropy >= meet_entropy - tol.compare;
    let greedy_ok = difference >= -tol.compare;
    let limit_ok = difference <= limit + tol.compare;
    r.set("difference", float_json(difference));
    r.set("limit", float_json(limit));
    r.set(
        "checks",
        json!({ "meet_below_best": meet_ok, "best_below_greedy": greedy_ok, "within_limit": limit_ok }),
    );
    r.line(format!(
        "H(greedy) - H(best) = {}  (limit {})",
        fixed(difference),
        fixed(limit)
    ));
    r.line(format!(
        "checks: H(meet) <= H(best) {}, H(best) <= H(greedy) {}, within limit {}",
        ok(meet_ok),
        ok(greedy_ok),
        ok(limit_ok)
    ));
    r.passed = meet_ok && greedy_ok && limit_ok;
    r.set("passed", r.passed);
    Ok(r)
}

/// Longest gap table we are willing to print.
const MAX_UNIFORM_ROWS: u64 = 1_000_000;

pub fn uniform_cmd(n_min: u64, n_max: u64) -> Result<Report, CliError> {
    if n_min < 2 || n_max < n_min {
        return Err(CliError::Input(format!(
            "need 2 <= --n-min <= --n-max, got {n_min} and {n_max}"
        )));
    }
    if n_max - n_min >= MAX_UNIFORM_ROWS {
        return Err(CliError::Input(format!(
            "at most {MAX_UNIFORM_ROWS} rows; narrow --n-min/--n-max"
        )));
    }
    let mut r = Report::new("uniform");
    r.line("  n  gap");
    let mut rows = Vec::new();
    let mut increasing = true;
    let mut last = f64::NEG_INFINITY;
    for n in n_min..=n_max {
        let gap = uniform_gap(n)?;
        increasing &= gap > last;
        last = gap;
        rows.push(json!({ "n": n, "gap": float_json(gap) }));
        r.line(format!("  {n}  {}", fixed(gap)));
    }
    let below = last <= LOG2_E;
    r.set("rows", rows);
    r.set("limit", float_json(LOG2_E));
    r.set("increasing", increasing);
    r.line(format!("limit log2(e) = {}", fixed(LOG2_E)));
    r.line(format!(
        "strictly increasing {}, below the limit {}",
        ok(increasing),
        ok(below)
    ));
    r.passed = increasing && below;
    r.set("passed", r.passed);
    Ok(r)
}

pub struct VerifyArgs {
    pub trials: u64,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    pub zs: Vec<u64>,
    pub mode: NumericMode,
    pub caps: OracleCaps,
}

pub fn verify_cmd(args: VerifyArgs, ctx: &Context) -> Result<Report, CliError> {
    if args.m == 0 || args.n == 0 {
        return Err(CliError::Input("--m and --n must be positive".into()));
    }
    check_zs(&args.zs)?;
    let tail: f64 = ctx.tail()?;
    if !(tail > 0.0 && tail < 1.0) {
        return Err(CliError::Input(format!(
            "--tail: {tail} must lie in (0, 1)"
        )));
    }
    let config = VerifyConfig {
        trials: args.trials,
        m: args.m,
        n: args.n,
        seed: args.seed,
        zs: args.zs,
        mode: args.mode,
        tail,
        tol: ctx.tol,
        caps: args.caps,
    };
    let summary = run_verify(&config);

    let mut r = Report::new("verify");
    r.set("trials", config.trials);
    r.set("m", config.m);
    r.set("n", config.n);
    r.set("seed", config.seed);
    r.set("z", config.zs.clone());
    r.set("numeric_mode", config.mode.as_str());
    r.set("failed", summary.failed);
    let opt = |x: Option<f64>| x.map_or(Value::Null, float_json);
    r.set("max_gap", opt(summary.max_gap));
    r.set("max_oracle_difference", opt(summary.max_oracle_difference));
    r.set("min_entropy_slack", opt(summary.min_entropy_slack));

    let show = |x: Option<f64>| x.map_or("n/a".to_string(), fixed);
    r.line(format!(
        "verify: {} trials, m = {}, n = {}, seed {}, z = {:?}, {}",
        config.trials, config.m, config.n, config.seed, config.zs, config.mode
    ));
    r.line(format!("failed                 {}", summary.failed));
    r.line(format!("max gap                {}", show(summary.max_gap)));
    r.line(format!(
        "max greedy - oracle    {}",
        show(summary.max_oracle_difference)
    ));
    r.line(format!(
        "min entropy slack      {}",
        show(summary.min_entropy_slack)
    ));

    match &summary.first_failure {
        Some(f) => {
            let dists: Vec<Value> = f
                .instance
                .marginals()
                .iter()
                .map(|d| masses_json(d.probs()))
                .collect();
            let document = json!({ "distributions": dists });
            r.set(
                "first_failure",
                json!({ "trial": f.trial, "instance": document, "failures": f.failures }),
            );
            r.line(format!("first failing trial {}:", f.trial));
            for msg in &f.failures {
                r.line(format!("  {msg}"));
            }
            r.line(format!("  instance: {document}"));
        }
        None => r.set("first_failure", Value::Null),
    }
    r.passed = summary.passed();
    r.set("passed", r.passed);
    Ok(r)
}

pub fn default_zs() -> Vec<u64> {
    DEFAULT_Z.to_vec()
}

pub fn caps(max_nodes: u64, time_limit_ms: Option<u64>) -> OracleCaps {
    OracleCaps {
        max_nodes,
        time_limit: time_limit_ms.map(Duration::from_millis),
    }
}
