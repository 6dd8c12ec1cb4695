use std::path::PathBuf;

use num_traits::One;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::bound::{
    corollary_beta1_bound, generic_cgf_bound, optimize_alphas, phi_baseline_bound, subgamma_bound,
    theorem2_excess_bound_with, transfer_gap_bound, AlphaGrid, AlphaSweep, BoundConfig, CgfEnvelope,
};
use crate::dist::{rat, to_f64, FiniteDistribution, Rational};
use crate::ewrm::{exact_excess_risk, exact_gap, per_sample_mi, sample_information, Domain, ExampleProblem};
use crate::info::{js_alpha, kl_divergence, total_variation, JsParts};
use crate::oracle::{enumerate_gap, enumerate_mi, mc_gap};

use super::output::{emit, emit_summary, flatten, json_text, real, Cell, Format, Table};
use super::{CliError, Settings};

const P_S: &str = "0.48";
const P_T: &str = "0.3";
const M: u32 = 30;
const BETA: &str = "2/3";
const GAMMA: &str = "3/10";
const ALPHA: &str = "1/2";
const SIGMA2: &str = "4";
const SUP_LOSS: &str = "4";
const SOURCE_ATOMS: &str = "0,1";
const TARGET_ATOMS: &str = "1,2";

const SWEEP_ALPHA1: &str = "0.1,0.3,0.5,0.7,0.9";
const SWEEP_ALPHA2: &str = "0.05:0.95:0.05";

const FIG1_P_T: &str = "0.9,0.6,0.3";
const FIG1_M: &str = "10:300:10";

const VALIDATE_P: &str = "0.1,0.3,0.48,0.7";
const VALIDATE_M: &str = "3,6";
const VALIDATE_BETA: &str = "1/3,2/3,1";
const VALIDATE_GAMMA: &str = "0,0.3,0.5,1";
const VALIDATE_ALPHA1: &str = "0.1,0.5,0.9";
const VALIDATE_ALPHA2: &str = "0.2,0.5,0.8";

/// Absolute tolerance for exact-vs-exhaustive comparisons.
pub const ENUMERATE_TOL: f64 = 1e-10;
/// Slack allowed when checking that a bound dominates the exact value.
pub const BOUND_SLACK: f64 = 1e-12;
/// Largest accepted |z| for Monte-Carlo comparisons.
pub const MC_Z_THRESHOLD: f64 = 4.0;
const MC_SAMPLES: u64 = 1_000_000;
const MC_SEED: u64 = 42;

fn format(s: &Settings, default: Format) -> Result<Format, CliError> {
    match s.get("format") {
        Some(f) => Format::parse(f),
        None => Ok(default),
    }
}

fn output(s: &Settings) -> Option<PathBuf> {
    s.get("output").map(PathBuf::from)
}

fn two_point_law(s: &Settings, key: &str, default_atoms: &str, p: &Rational) -> Result<FiniteDistribution, CliError> {
    let atoms = s.rational_list_or(key, default_atoms)?;
    let [a, b] = <[Rational; 2]>::try_from(atoms)
        .map_err(|v| CliError::Usage(format!("`{key}` needs exactly two atoms, got {}", v.len())))?;
    Ok(FiniteDistribution::two_point(a, b, p.clone())?)
}

fn source_law(s: &Settings, p_s: &Rational) -> Result<FiniteDistribution, CliError> {
    two_point_law(s, "source_atoms", SOURCE_ATOMS, p_s)
}

fn target_law(s: &Settings, p_t: &Rational) -> Result<FiniteDistribution, CliError> {
    two_point_law(s, "target_atoms", TARGET_ATOMS, p_t)
}

fn build_problem(
    s: &Settings,
    p_s: &Rational,
    p_t: &Rational,
    m: u32,
    beta: Rational,
    gamma: Rational,
) -> Result<ExampleProblem, CliError> {
    Ok(ExampleProblem::new(source_law(s, p_s)?, target_law(s, p_t)?, m, beta, gamma)?)
}

fn problem(s: &Settings) -> Result<ExampleProblem, CliError> {
    let beta = s.rational_or("beta", BETA)?;
    // beta = 1 forces gamma = 1 unless the user says otherwise
    let default_gamma = if beta.is_one() { "1" } else { GAMMA };
    build_problem(
        s,
        &s.rational_or("p_s", P_S)?,
        &s.rational_or("p_t", P_T)?,
        s.u32_or("m", M)?,
        beta,
        s.rational_or("gamma", default_gamma)?,
    )
}

fn envelope(s: &Settings) -> Result<CgfEnvelope, CliError> {
    let sigma2 = s.real_or("sigma2", SIGMA2)?;
    match s.string_or("envelope", "sub-gaussian").as_str() {
        "sub-gaussian" | "subgaussian" => Ok(CgfEnvelope::sub_gaussian(sigma2)?),
        "sub-gamma" | "subgamma" => Ok(CgfEnvelope::sub_gamma(sigma2, s.real_or("c", "0")?)?),
        other => Err(CliError::Usage(format!("unknown envelope `{other}` (expected sub-gaussian or sub-gamma)"))),
    }
}

fn problem_json(prob: &ExampleProblem) -> Value {
    json!({
        "source": prob.source().to_string(),
        "target": prob.target().to_string(),
        "m": prob.m(),
        "beta": real(to_f64(prob.beta())),
        "gamma": real(to_f64(prob.gamma())),
    })
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn emit_value(s: &Settings, value: &Value, default: Format) -> Result<(), CliError> {
    let text = match format(s, default)? {
        Format::Json => json_text(value),
        Format::Csv => flatten(value).to_csv(),
    };
    emit(output(s).as_deref(), &text)
}

pub fn divergence(s: &Settings) -> Result<(), CliError> {
    let source = match s.distribution("source")? {
        Some(d) => d,
        None => source_law(s, &s.rational_or("p_s", P_S)?)?,
    };
    let target = match s.distribution("target")? {
        Some(d) => d,
        None => target_law(s, &s.rational_or("p_t", P_T)?)?,
    };
    let (a1, a2) = (s.rational_or("alpha1", ALPHA)?, s.rational_or("alpha2", ALPHA)?);
    let js = JsParts::new(&target, &source, &a1, &a2)?;
    let value = json!({
        "alpha1": real(to_f64(&a1)),
        "alpha2": real(to_f64(&a2)),
        "kl_source_target": real(kl_divergence(&source, &target)),
        "kl_target_source": real(kl_divergence(&target, &source)),
        "total_variation": real(total_variation(&source, &target)),
        "js_alpha": real(js.value),
    });
    emit_value(s, &value, Format::Csv)
}

pub fn bound(s: &Settings) -> Result<(), CliError> {
    let prob = problem(s)?;
    let env = envelope(s)?;
    let cfg = BoundConfig::new(s.rational_or("alpha1", ALPHA)?, s.rational_or("alpha2", ALPHA)?, env.clone())?;
    let mi = sample_information(&prob)?;
    let gap = exact_gap(&prob);
    let excess = exact_excess_risk(&prob);

    let mut out = Map::new();
    out.insert("problem".into(), problem_json(&prob));
    out.insert("alpha1".into(), real(to_f64(cfg.alpha1())));
    out.insert("alpha2".into(), real(to_f64(cfg.alpha2())));
    out.insert("mutual_information".into(), json!({"source": real(mi.source), "target": real(mi.target)}));
    out.insert("exact_gap".into(), to_json(&gap));
    out.insert("exact_excess_risk".into(), real(excess));

    let gap_bound = match env {
        CgfEnvelope::SubGamma { .. } => {
            let generic = generic_cgf_bound(&prob, &cfg, mi.source, mi.target)?;
            if cfg.alpha2() == &rat(1, 2) {
                out.insert("subgamma".into(), to_json(&subgamma_bound(&prob, &cfg, mi.source, mi.target)?));
            }
            generic
        }
        _ => {
            let excess_bound = theorem2_excess_bound_with(&prob, &cfg, &mi)?;
            out.insert("excess_bound".into(), to_json(&excess_bound));
            out.insert("excess_bound_holds".into(), Value::Bool(excess_bound.total >= excess - BOUND_SLACK));
            if prob.beta().is_one() {
                let sup_loss = s.real_or("sup_loss", SUP_LOSS)?;
                out.insert("phi_baseline".into(), real(phi_baseline_bound(&prob, sup_loss, mi.source)?));
            }
            transfer_gap_bound(&prob, &cfg, &mi)?
        }
    };
    out.insert("gap_bound_holds".into(), Value::Bool(gap_bound.total >= gap.exact_gap - BOUND_SLACK));
    out.insert("gap_bound".into(), to_json(&gap_bound));
    emit_value(s, &Value::Object(out), Format::Csv)
}

/// Per-`alpha1` minimum over the `alpha2` grid of a sweep.
fn curve_summary(sweep: &AlphaSweep, grid: &AlphaGrid) -> Vec<Value> {
    let n2 = grid.alpha2().len();
    sweep
        .points
        .chunks(n2)
        .map(|curve| {
            let mut best = 0;
            for (i, p) in curve.iter().enumerate() {
                if p.report.total < curve[best].report.total {
                    best = i;
                }
            }
            json!({
                "alpha1": real(to_f64(&curve[best].alpha1)),
                "argmin_alpha2": real(to_f64(&curve[best].alpha2)),
                "min_total": real(curve[best].report.total),
                "interior": best > 0 && best + 1 < n2,
            })
        })
        .collect()
}

/// `sweep` and `reproduce-fig2`; the latter adds a comment line recording
/// the problem parameters, including the defaulted target probability.
pub fn sweep(s: &Settings, figure: bool) -> Result<(), CliError> {
    let prob = problem(s)?;
    let env = envelope(s)?;
    let grid = AlphaGrid::new(s.rational_list_or("alpha1_grid", SWEEP_ALPHA1)?, s.rational_list_or("alpha2_grid", SWEEP_ALPHA2)?)?;
    let mi = sample_information(&prob)?;
    let result = optimize_alphas(&prob, &env, &grid, &mi)?;

    let mut table = Table::new(vec!["alpha1", "alpha2", "bound_total", "source_term", "target_term"]);
    if figure {
        let p_t = s.rational_or("p_t", P_T)?;
        let defaulted = if s.get("p_t").is_some() { "" } else { " (default)" };
        table.comments.push(format!(
            "p_s={} p_t={}{} M={} beta={} gamma={} sigma2={}",
            s.rational_or("p_s", P_S)?,
            p_t,
            defaulted,
            prob.m(),
            prob.beta(),
            prob.gamma(),
            s.rational_or("sigma2", SIGMA2)?,
        ));
    }
    for p in &result.points {
        table.rows.push(vec![
            Cell::Real(to_f64(&p.alpha1)),
            Cell::Real(to_f64(&p.alpha2)),
            Cell::Real(p.report.total),
            Cell::Real(p.report.source_term),
            Cell::Real(p.report.target_term),
        ]);
    }
    let best = result.best();
    let summary = json!({
        "problem": problem_json(&prob),
        "mutual_information": {"source": real(mi.source), "target": real(mi.target)},
        "n_points": result.points.len(),
        "argmin": {
            "alpha1": real(to_f64(&best.alpha1)),
            "alpha2": real(to_f64(&best.alpha2)),
            "bound_total": real(best.report.total),
        },
        "curves": curve_summary(&result, &grid),
    });
    let out = output(s);
    emit(out.as_deref(), &table.render(format(s, Format::Csv)?))?;
    emit_summary(out.as_deref(), &summary)
}

pub fn reproduce_fig1(s: &Settings) -> Result<(), CliError> {
    let p_s = s.rational_or("p_s", P_S)?;
    let p_t_grid = s.rational_list_or("p_t_grid", FIG1_P_T)?;
    let m_grid = s.u32_list_or("m_grid", FIG1_M)?;
    let sup_loss = s.real_or("sup_loss", SUP_LOSS)?;
    let cfg = BoundConfig::new(rat(1, 2), rat(1, 2), CgfEnvelope::sub_gaussian(s.real_or("sigma2", SIGMA2)?)?)?;
    let source = source_law(s, &p_s)?;

    let cases: Vec<(Rational, u32)> =
        p_t_grid.iter().flat_map(|p| m_grid.iter().map(move |&m| (p.clone(), m))).collect();
    let rows = cases
        .par_iter()
        .map(|(p_t, m)| -> Result<Vec<Cell>, CliError> {
            let target = target_law(s, p_t)?;
            let js = js_alpha(&target, &source, &rat(1, 2), &rat(1, 2))?;
            let prob = ExampleProblem::new(source.clone(), target, *m, Rational::one(), Rational::one())?;
            let mi_s = per_sample_mi(&prob, Domain::Source)?;
            Ok(vec![
                Cell::Real(to_f64(p_t)),
                Cell::Real(js),
                Cell::Int(*m as u64),
                Cell::Real(exact_gap(&prob).exact_gap),
                Cell::Real(corollary_beta1_bound(&prob, &cfg, mi_s)?.total),
                Cell::Real(phi_baseline_bound(&prob, sup_loss, mi_s)?),
            ])
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = Table::new(vec!["p_t", "js_distance", "M", "exact_gap", "js_bound", "phi_bound"]);
    table.rows = rows;
    emit(output(s).as_deref(), &table.render(format(s, Format::Csv)?))
}

struct GridPoint {
    p_s: Rational,
    p_t: Rational,
    m: u32,
    beta: Rational,
    gamma: Rational,
}

/// Cartesian product of the validation grids; `beta = 1` uses only `gamma = 1`.
fn validation_grid(s: &Settings, mc: bool) -> Result<Vec<GridPoint>, CliError> {
    let (pd, pt, md, bd, gd) = if mc {
        (P_S, P_T, "30", BETA, GAMMA)
    } else {
        (VALIDATE_P, VALIDATE_P, VALIDATE_M, VALIDATE_BETA, VALIDATE_GAMMA)
    };
    let p_s = s.rational_list_or("p_s_grid", pd)?;
    let p_t = s.rational_list_or("p_t_grid", pt)?;
    let ms = s.u32_list_or("m_grid", md)?;
    let betas = s.rational_list_or("beta_grid", bd)?;
    let gammas = s.rational_list_or("gamma_grid", gd)?;
    let mut out = Vec::new();
    for ps in &p_s {
        for pt in &p_t {
            for &m in &ms {
                for beta in &betas {
                    let gs = if beta.is_one() { vec![Rational::one()] } else { gammas.clone() };
                    for gamma in gs {
                        out.push(GridPoint { p_s: ps.clone(), p_t: pt.clone(), m, beta: beta.clone(), gamma });
                    }
                }
            }
        }
    }
    Ok(out)
}

fn config_json(g: &GridPoint) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("p_s".into(), real(to_f64(&g.p_s)));
    m.insert("p_t".into(), real(to_f64(&g.p_t)));
    m.insert("m".into(), Value::from(g.m));
    m.insert("beta".into(), real(to_f64(&g.beta)));
    m.insert("gamma".into(), real(to_f64(&g.gamma)));
    m
}

fn abs_check(exact: f64, oracle: f64) -> (Value, bool) {
    let diff = (exact - oracle).abs();
    let pass = diff <= ENUMERATE_TOL;
    (json!({"exact": real(exact), "oracle": real(oracle), "abs_diff": real(diff), "pass": pass}), pass)
}

/// Minimum of `bound - exact` over the alpha grid, for the gap and excess-risk bounds.
fn bound_margins(prob: &ExampleProblem, env: &CgfEnvelope, grid: &AlphaGrid) -> Result<(f64, f64), CliError> {
    let mi = sample_information(prob)?;
    let gap = exact_gap(prob).exact_gap;
    let excess = exact_excess_risk(prob);
    let (mut gap_margin, mut excess_margin) = (f64::INFINITY, f64::INFINITY);
    for (a1, a2) in grid.points() {
        let cfg = BoundConfig::new(a1, a2, env.clone())?;
        gap_margin = gap_margin.min(transfer_gap_bound(prob, &cfg, &mi)?.total - gap);
        excess_margin = excess_margin.min(theorem2_excess_bound_with(prob, &cfg, &mi)?.total - excess);
    }
    Ok((gap_margin, excess_margin))
}

fn enumerate_entry(
    s: &Settings,
    g: &GridPoint,
    env: &CgfEnvelope,
    grid: &AlphaGrid,
) -> Result<(Value, usize, usize), CliError> {
    let prob = build_problem(s, &g.p_s, &g.p_t, g.m, g.beta.clone(), g.gamma.clone())?;
    let mut entry = config_json(g);
    let mut checks = Vec::new();

    let (v, pass) = abs_check(exact_gap(&prob).exact_gap, enumerate_gap(&prob)?.estimate);
    entry.insert("gap".into(), v);
    checks.push(pass);
    for domain in [Domain::Source, Domain::Target] {
        if prob.n_samples(domain) == 0 {
            continue;
        }
        let (v, pass) = abs_check(per_sample_mi(&prob, domain)?, enumerate_mi(&prob, domain)?.estimate);
        entry.insert(format!("mi_{}", domain.name()), v);
        checks.push(pass);
    }
    let (gap_margin, excess_margin) = bound_margins(&prob, env, grid)?;
    let gap_ok = gap_margin >= -BOUND_SLACK;
    let excess_ok = excess_margin >= -BOUND_SLACK;
    entry.insert("gap_bound".into(), json!({"min_margin": real(gap_margin), "pass": gap_ok}));
    entry.insert("excess_bound".into(), json!({"min_margin": real(excess_margin), "pass": excess_ok}));
    checks.push(gap_ok);
    checks.push(excess_ok);

    let failed = checks.iter().filter(|p| !**p).count();
    entry.insert("pass".into(), Value::Bool(failed == 0));
    Ok((Value::Object(entry), checks.len(), failed))
}

fn mc_entry(s: &Settings, g: &GridPoint, n: u64, seed: u64) -> Result<(Value, usize, usize), CliError> {
    let prob = build_problem(s, &g.p_s, &g.p_t, g.m, g.beta.clone(), g.gamma.clone())?;
    let exact = exact_gap(&prob).exact_gap;
    let mc = mc_gap(&prob, n, seed)?;
    let diff = mc.estimate - exact;
    let z = if mc.std_error > 0.0 {
        diff / mc.std_error
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let pass = z.abs() <= MC_Z_THRESHOLD;
    let mut entry = config_json(g);
    entry.insert(
        "gap".into(),
        json!({
            "exact": real(exact),
            "oracle": real(mc.estimate),
            "std_error": real(mc.std_error),
            "z_score": real(z),
            "pass": pass,
        }),
    );
    entry.insert("pass".into(), Value::Bool(pass));
    Ok((Value::Object(entry), 1, usize::from(!pass)))
}

pub fn validate(s: &Settings) -> Result<(), CliError> {
    let mode = s.string_or("mode", "enumerate");
    let mc = match mode.as_str() {
        "enumerate" => false,
        "mc" => true,
        other => return Err(CliError::Usage(format!("unknown mode `{other}` (expected enumerate or mc)"))),
    };
    let env = CgfEnvelope::sub_gaussian(s.real_or("sigma2", SIGMA2)?)?;
    let grid = AlphaGrid::new(
        s.rational_list_or("alpha1_grid", VALIDATE_ALPHA1)?,
        s.rational_list_or("alpha2_grid", VALIDATE_ALPHA2)?,
    )?;
    let points = validation_grid(s, mc)?;
    let n = s.u64_or("n_samples", MC_SAMPLES)?;
    let seed = s.u64_or("seed", MC_SEED)?;

    let entries = points
        .par_iter()
        .map(|g| if mc { mc_entry(s, g, n, seed) } else { enumerate_entry(s, g, &env, &grid) })
        .collect::<Result<Vec<_>, _>>()?;

    let n_checks: usize = entries.iter().map(|e| e.1).sum();
    let n_failed: usize = entries.iter().map(|e| e.2).sum();
    let mut report = Map::new();
    report.insert("mode".into(), Value::from(mode));
    if mc {
        report.insert("n_samples".into(), Value::from(n));
        report.insert("seed".into(), Value::from(seed));
        report.insert("z_threshold".into(), real(MC_Z_THRESHOLD));
    } else {
        report.insert("tolerance".into(), real(ENUMERATE_TOL));
        report.insert("bound_slack".into(), real(BOUND_SLACK));
    }
    report.insert("n_configs".into(), Value::from(entries.len()));
    report.insert("n_checks".into(), Value::from(n_checks));
    report.insert("n_failed".into(), Value::from(n_failed));
    report.insert("pass".into(), Value::Bool(n_failed == 0));
    report.insert("configs".into(), Value::Array(entries.into_iter().map(|e| e.0).collect()));
    emit_value(s, &Value::Object(report), Format::Json)?;
    if n_failed > 0 {
        return Err(CliError::Failed(format!("{n_failed} of {n_checks} checks failed")));
    }
    Ok(())
}
