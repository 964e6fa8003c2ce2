//! Experiment drivers. Each writes plot-ready CSV and JSON into a fresh run
//! directory and finishes with a manifest.

use std::path::{Path, PathBuf};

use relcap::capacity::{self, window_capacity};
use relcap::integral::{self, Verdict};
use relcap::paths::{ou_ensemble, planar_confinement, ConfinementRegion};
use relcap::smallball::{self, Inequality};
use relcap::{
    sigma_asymptotic, sigma_series, EventSpec, LowerFunctionSpec, McConfig, McEstimate, ReplicateRunner, RngStream,
    SetModel, SetSpec,
};
use serde::Serialize;
use serde_json::json;

use crate::config::*;
use crate::error::{LabError, LabResult};
use crate::output::{RunDir, RunManifest};
use crate::runner::RayonRunner;

/// Exit status for an `Undetermined` verdict.
pub const EXIT_UNDETERMINED: u8 = 3;

#[derive(Debug)]
pub struct Report {
    pub dir: PathBuf,
    pub exit_code: u8,
    pub lines: Vec<String>,
}

pub fn execute(config: &ExperimentConfig, out_root: &Path, runner: &RayonRunner) -> LabResult<Report> {
    let hash = config.hash();
    let mut run = RunDir::create(out_root, &format!("{}-{}", config.command(), &hash[..12]))?;
    let mut lines = Vec::new();
    let mut exit_code = 0;
    match config {
        ExperimentConfig::Entropy(c) => entropy(c, &mut run, &mut lines)?,
        ExperimentConfig::Smallball(c) => smallball_cmd(c, runner, &mut run, &mut lines)?,
        ExperimentConfig::Capacity(c) => capacity_cmd(c, runner, &mut run, &mut lines)?,
        ExperimentConfig::Liltest(c) => {
            if liltest(c, &mut run, &mut lines)? == Verdict::Undetermined {
                exit_code = EXIT_UNDETERMINED;
            }
        }
        ExperimentConfig::Audit(c) => audit(c, &mut run, &mut lines)?,
        ExperimentConfig::Simulate(c) => simulate(c, runner, &mut run, &mut lines)?,
    }
    let dir = run.finish(config, runner.threads())?;
    Ok(Report { dir, exit_code, lines })
}

/// Re-runs the config stored in a manifest into a fresh directory.
pub fn replay(manifest: &Path, out_root: &Path, runner: &RayonRunner) -> LabResult<Report> {
    let m = RunManifest::read(manifest)?;
    if m.config.hash() != m.config_sha256 {
        return Err(LabError::Config("manifest hash does not match its config".into()));
    }
    execute(&m.config, out_root, runner)
}

fn model(spec: &SetSpec) -> LabResult<SetModel> {
    Ok(SetModel::normalize(spec)?)
}

#[derive(Serialize)]
struct EstimateRecord<'a> {
    experiment: &'a str,
    g_spec: &'a SetSpec,
    r: f64,
    value: f64,
    stderr: f64,
    ci95: (f64, f64),
    seed: u64,
    k: u32,
    eps_s: f64,
}

fn entropy(c: &EntropyConfig, run: &mut RunDir, lines: &mut Vec<String>) -> LabResult<()> {
    #[derive(Serialize)]
    struct Row {
        epsilon: f64,
        count: u64,
    }
    let g = model(&c.set)?;
    let mut eps = c.epsilons.clone();
    if eps.is_empty() {
        return Err(LabError::Config("no ε values given".into()));
    }
    eps.sort_by(|a, b| b.total_cmp(a));
    eps.dedup();
    let profile = run.timed("entropy_profile", || g.entropy_profile(&eps))?;
    let rows: Vec<Row> =
        profile.epsilons.iter().zip(&profile.counts).map(|(&epsilon, &count)| Row { epsilon, count }).collect();
    for r in &rows {
        lines.push(format!("K({}) = {}", r.epsilon, r.count));
    }
    run.csv("profile.csv", rows)?;
    let dimension = if eps.len() >= 2 { Some(run.timed("dimension", || g.dimension_estimate(&eps))?) } else { None };
    if let Some(d) = &dimension {
        lines.push(format!("regression slope {:.6} (r² {:.6}), packing dimension {:.6}", d.upper_minkowski, d.regression_r2, d.packing));
    }
    run.json("dimension.json", &json!({ "set": c.set, "dimension": dimension }))
}

fn smallball_cmd(c: &SmallballConfig, runner: &RayonRunner, run: &mut RunDir, lines: &mut Vec<String>) -> LabResult<()> {
    #[derive(Serialize)]
    struct Row {
        r: f64,
        series: f64,
        ln_series: f64,
        asymptotic: f64,
        ratio: f64,
        terms: u64,
        truncation_bound: f64,
        mc: Option<f64>,
        mc_stderr: Option<f64>,
        z: Option<f64>,
        within_3se: Option<bool>,
    }
    let point = model(&SetSpec::Points { points: vec![0.0] })?;
    let mut rows = Vec::new();
    for &r in &c.radii {
        let s = run.timed("series", || sigma_series(r, c.tol))?;
        let a = sigma_asymptotic(r)?;
        let mut row = Row {
            r,
            series: s.value,
            ln_series: s.ln_value,
            asymptotic: a,
            ratio: s.value / a,
            terms: s.truncation_terms,
            truncation_bound: s.truncation_bound,
            mc: None,
            mc_stderr: None,
            z: None,
            within_3se: None,
        };
        let mut line = format!("σ({r}) = {:.12} (asymptotic {:.12})", s.value, a);
        if let Some(mc) = &c.compare_mc {
            // sup over [0, 1/r²] below 1 is f* ≤ r by Brownian scaling
            let event = EventSpec { radius: 1.0, horizon: 1.0 / (r * r) };
            let e = run.timed("monte_carlo", || capacity::hit_prob(&point, &event, mc, runner))?;
            let z = (e.value - s.value) / e.stderr;
            row.mc = Some(e.value);
            row.mc_stderr = Some(e.stderr);
            row.z = Some(z);
            row.within_3se = Some((e.value - s.value).abs() <= 3.0 * e.stderr);
            line.push_str(&format!("; Monte Carlo {:.6} ± {:.6} (z = {z:.2})", e.value, e.stderr));
        }
        lines.push(line);
        rows.push(row);
    }
    run.csv("sigma.csv", rows)?;
    if let Some(mc) = &c.compare_mc {
        run.json(
            "comparison.json",
            &json!({
                "replicates": mc.replicates,
                "resolution": mc.resolution,
                "correction": mc.correction,
                "note": "grid maxima are compared against r - 0.5826·sqrt(dt) unless the correction is none",
            }),
        )?;
    }
    Ok(())
}

fn capacity_cmd(c: &CapacityConfig, runner: &RayonRunner, run: &mut RunDir, lines: &mut Vec<String>) -> LabResult<()> {
    #[derive(Serialize)]
    struct Row {
        r: f64,
        entropy: u64,
        sigma: f64,
        slices: usize,
        hit: f64,
        hit_stderr: f64,
        hit_lo: f64,
        hit_hi: f64,
        capacity: f64,
        capacity_stderr: f64,
        capacity_lo: f64,
        capacity_hi: f64,
        rho: f64,
        rho_stderr: f64,
        sandwich: bool,
    }
    let g = model(&c.set)?;
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for &r in &c.radii {
        let event = EventSpec::sup_ball(r)?;
        let entropy = g.kolmogorov_entropy(r.powi(6))?;
        let sigma = sigma_series(r, smallball::DEFAULT_TOL)?.value;
        let rep = run.timed("capacity", || capacity::capacity(&g, &event, &c.mc, runner))?;
        let scale = entropy as f64 * sigma;
        lines.push(format!(
            "r = {r}: hit {:.6} ± {:.6}, capacity {:.6} ± {:.6}, ρ = {:.4}, sandwich {}",
            rep.hit.value,
            rep.hit.stderr,
            rep.capacity.value,
            rep.capacity.stderr,
            rep.hit.value / scale,
            if rep.sandwich_holds() { "holds" } else { "fails" }
        ));
        for (name, e) in [("hit_prob", &rep.hit), ("capacity", &rep.capacity)] {
            records.push(record(name, &c.set, r, e, &c.mc, rep.s_mesh));
        }
        rows.push(Row {
            r,
            entropy,
            sigma,
            slices: rep.slices,
            hit: rep.hit.value,
            hit_stderr: rep.hit.stderr,
            hit_lo: rep.hit.ci95.0,
            hit_hi: rep.hit.ci95.1,
            capacity: rep.capacity.value,
            capacity_stderr: rep.capacity.stderr,
            capacity_lo: rep.capacity.ci95.0,
            capacity_hi: rep.capacity.ci95.1,
            rho: rep.hit.value / scale,
            rho_stderr: rep.hit.stderr / scale,
            sandwich: rep.sandwich_holds(),
        });
    }
    let max = rows.iter().map(|r| r.rho).fold(f64::NEG_INFINITY, f64::max);
    let min = rows.iter().map(|r| r.rho).fold(f64::INFINITY, f64::min);
    if c.audit_discretization {
        discretization(&g, c, runner, run, lines)?;
    }
    lines.push(format!("ρ band [{min:.4}, {max:.4}], max/min {:.4}", max / min));
    run.csv("capacity.csv", rows)?;
    run.json("results.json", &json!({ "records": records, "rho_min": min, "rho_max": max, "rho_max_over_min": max / min }))
}

fn discretization(
    g: &SetModel,
    c: &CapacityConfig,
    runner: &RayonRunner,
    run: &mut RunDir,
    lines: &mut Vec<String>,
) -> LabResult<()> {
    #[derive(Serialize)]
    struct Row {
        r: f64,
        k: u32,
        hit: f64,
        hit_stderr: f64,
        finer_grid: f64,
        finer_grid_stderr: f64,
        grid_shift: f64,
        grid_converged: bool,
        finer_mesh: f64,
        finer_mesh_stderr: f64,
        mesh_shift: f64,
    }
    let mut rows = Vec::new();
    for &r in &c.radii {
        let a = run.timed("discretization", || capacity::discretization_audit(g, &EventSpec::sup_ball(r)?, &c.mc, runner))?;
        lines.push(format!(
            "r = {r}: k → k+2 shifts the hit estimate by {:+.2} se, halving ε_s by {:+.2} se",
            a.grid_shift, a.mesh_shift
        ));
        rows.push(Row {
            r,
            k: c.mc.resolution,
            hit: a.base.value,
            hit_stderr: a.base.stderr,
            finer_grid: a.finer_grid.value,
            finer_grid_stderr: a.finer_grid.stderr,
            grid_shift: a.grid_shift,
            grid_converged: a.grid_converged(),
            finer_mesh: a.finer_mesh.value,
            finer_mesh_stderr: a.finer_mesh.stderr,
            mesh_shift: a.mesh_shift,
        });
    }
    run.csv("discretization.csv", rows)
}

fn record<'a>(name: &'a str, set: &'a SetSpec, r: f64, e: &McEstimate, mc: &McConfig, eps_s: f64) -> EstimateRecord<'a> {
    EstimateRecord {
        experiment: name,
        g_spec: set,
        r,
        value: e.value,
        stderr: e.stderr,
        ci95: e.ci95,
        seed: mc.master_seed,
        k: mc.resolution,
        eps_s,
    }
}

fn doubling_grid(top: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut u = 1.0;
    while u < top {
        out.push(u);
        u *= 2.0;
    }
    out.push(top);
    out
}

fn liltest(c: &LiltestConfig, run: &mut RunDir, lines: &mut Vec<String>) -> LabResult<Verdict> {
    #[derive(Serialize)]
    struct Row {
        ln_ln_t: f64,
        partial: f64,
    }
    let h = &c.h;
    let (set, dimension) = match c.mode {
        LilMode::Qs => (SetSpec::Interval { a: 0.0, b: 1.0 }, Some(1.0)),
        LilMode::As => (SetSpec::Points { points: vec![0.0] }, Some(0.0)),
        LilMode::Set => (
            c.set.clone().ok_or_else(|| LabError::Config("--mode set needs --set".into()))?,
            None,
        ),
    };
    let g = model(&set)?;
    let analytic = match dimension {
        Some(d) => integral::classify_dimension(h, d)?,
        None => integral::classify(h, &g)?,
    };
    let horizons = if c.horizons.is_empty() {
        let mut top = integral::resolved_reach(h, &g, 1024.0);
        if let LowerFunctionSpec::Tabulated { .. } = h {
            top = top.min(h.ln_domain().1.max(1.0).ln());
        }
        if top > 0.0 { doubling_grid(top) } else { vec![0.0] }
    } else {
        c.horizons.clone()
    };
    let numeric = run.timed("quadrature", || -> LabResult<_> {
        Ok(match c.mode {
            LilMode::Qs => (integral::scalar_partials(h, 4, &horizons)?, None),
            LilMode::As => (integral::scalar_partials(h, 1, &horizons)?, None),
            LilMode::Set => {
                let p = integral::psi_numeric(h, &g, &horizons)?;
                (p.partial_integrals.clone(), Some(p))
            }
        })
    })?;
    let (partials, psi) = numeric;
    // a table only speaks for its own domain
    let verdict = analytic.verdict;
    lines.push(format!(
        "{:?} test: {:?}{}",
        c.mode,
        verdict,
        analytic.threshold.map(|t| format!(" (threshold {t:.6})")).unwrap_or_default()
    ));
    run.csv("partials.csv", partials.iter().map(|&(ln_ln_t, partial)| Row { ln_ln_t, partial }))?;
    let sum = match c.sum_blocks {
        Some(n) => {
            let rep = run.timed("sum_integral", || integral::sum_integral_equivalence(h, &g, n))?;
            run.csv("sum_integral.csv", rep.rows.iter())?;
            lines.push(format!(
                "sum over {n} blocks: {:?}, block ratios in [{:.4}, {:.4}], {} contradictions",
                rep.sum_verdict,
                rep.block_band.0,
                rep.block_band.1,
                rep.contradictions.len()
            ));
            Some(rep)
        }
        None => None,
    };
    run.json(
        "verdict.json",
        &json!({
            "h_spec": h,
            "g_spec": set,
            "mode": c.mode,
            "verdict": verdict,
            "method": analytic.method,
            "threshold": analytic.threshold,
            "note": analytic.note,
            "partials": partials,
            "numeric": psi,
            "sum_integral": sum,
        }),
    )?;
    Ok(verdict)
}

fn audit(c: &AuditConfig, run: &mut RunDir, lines: &mut Vec<String>) -> LabResult<()> {
    let report = run.timed("audit", || match c.inequality {
        Inequality::KeyEe => smallball::audit_key_ee(c.lo, c.hi, &c.h),
        Inequality::Ees => smallball::audit_ees(c.lo, c.hi, c.floor),
    })?;
    lines.push(format!(
        "{:?} over [{}, {}]: {} indices, fitted constant {:.6}, {} violations",
        report.inequality, c.lo, c.hi, report.evaluated, report.fitted_constant, report.violations
    ));
    run.csv("audit.csv", report.rows.iter())?;
    run.json(
        "audit.json",
        &json!({
            "inequality": report.inequality,
            "range": report.range,
            "h_spec": c.h,
            "evaluated": report.evaluated,
            "fitted_constant": report.fitted_constant,
            "violations": report.violations,
            "floor": report.floor,
        }),
    )
}

fn simulate(c: &SimulateConfig, runner: &RayonRunner, run: &mut RunDir, lines: &mut Vec<String>) -> LabResult<()> {
    let mc = &c.mc;
    match &c.experiment {
        Experiment::Joint { s, gaps, r } => {
            #[derive(Serialize)]
            struct Row {
                gap: f64,
                x: f64,
                joint: f64,
                stderr: f64,
                sigma: f64,
                sigma_sq: f64,
                ln_ratio: f64,
                ln_ratio_stderr: f64,
            }
            let sigma = sigma_series(*r, smallball::DEFAULT_TOL)?.value;
            let mut rows = Vec::new();
            for &gap in gaps {
                let e = run.timed("joint", || capacity::joint_prob(*s, s + gap, *r, mc, runner))?;
                lines.push(format!("gap {gap}: joint {:.6} ± {:.6}", e.value, e.stderr));
                rows.push(Row {
                    gap,
                    x: gap.cbrt() / (r * r),
                    joint: e.value,
                    stderr: e.stderr,
                    sigma,
                    sigma_sq: sigma * sigma,
                    ln_ratio: (e.value / sigma).ln(),
                    ln_ratio_stderr: e.stderr / e.value,
                });
            }
            run.csv("joint.csv", rows)
        }
        Experiment::Counting { set, radii } => {
            #[derive(Serialize)]
            struct Row {
                r: f64,
                k: u64,
                sigma: f64,
                mean_n: f64,
                mean_stderr: f64,
                expected_mean: f64,
                second_moment_n: f64,
                second_moment_constant: f64,
                pz_lower_bound: f64,
                hit: f64,
                hit_stderr: f64,
                pz_exact: bool,
            }
            let g = model(set)?;
            let mut rows = Vec::new();
            for &r in radii {
                let s = run.timed("counting", || capacity::counting_stats(&g, r, mc, runner))?;
                lines.push(format!(
                    "r = {r}: E N = {:.5} ± {:.5} vs kσ = {:.5}; PZ {:.5} ≤ hit {:.5}",
                    s.mean_n,
                    s.mean_stderr,
                    s.k as f64 * s.sigma,
                    s.pz_lower_bound,
                    s.hit.value
                ));
                rows.push(Row {
                    r,
                    k: s.k,
                    sigma: s.sigma,
                    mean_n: s.mean_n,
                    mean_stderr: s.mean_stderr,
                    expected_mean: s.k as f64 * s.sigma,
                    second_moment_n: s.second_moment_n,
                    second_moment_constant: s.second_moment_constant(),
                    pz_lower_bound: s.pz_lower_bound,
                    hit: s.hit.value,
                    hit_stderr: s.hit.stderr,
                    pz_exact: s.pz_exact,
                });
            }
            run.csv("counting.csv", rows)
        }
        Experiment::ShortWindow { radii, slices } => {
            #[derive(Serialize)]
            struct Row {
                r: f64,
                slices: usize,
                hit: f64,
                hit_stderr: f64,
                sigma: f64,
                ratio: f64,
                ratio_stderr: f64,
            }
            let mut rows = Vec::new();
            for &r in radii {
                let w = run.timed("short_window", || capacity::short_window_bound(r, *slices, mc, runner))?;
                lines.push(format!("r = {r}: window/σ = {:.4} ± {:.4}", w.ratio, w.ratio_stderr));
                rows.push(Row {
                    r,
                    slices: w.slices,
                    hit: w.hit.value,
                    hit_stderr: w.hit.stderr,
                    sigma: w.sigma,
                    ratio: w.ratio,
                    ratio_stderr: w.ratio_stderr,
                });
            }
            run.csv("short_window.csv", rows)
        }
        Experiment::Window { horizon, radii } => {
            #[derive(Serialize)]
            struct Row {
                r: f64,
                cap_unit: f64,
                cap_unit_stderr: f64,
                cap_window: f64,
                cap_window_stderr: f64,
                scaled_window: f64,
                holds: bool,
                truncation: f64,
            }
            let unit = model(&SetSpec::Interval { a: 0.0, b: 1.0 })?;
            let mut rows = Vec::new();
            for &r in radii {
                let event = EventSpec::sup_ball(r)?;
                let a = run.timed("capacity", || capacity::capacity(&unit, &event, mc, runner))?;
                let b = run.timed("window", || window_capacity(*horizon, &event, mc, runner))?;
                let scaled = b.capacity.value / (2.0 * std::f64::consts::E);
                let se = (a.capacity.stderr.powi(2) + (b.capacity.stderr / (2.0 * std::f64::consts::E)).powi(2)).sqrt();
                let holds = scaled <= a.capacity.value + 3.0 * se;
                lines.push(format!(
                    "r = {r}: cap[0,1] = {:.5}, cap[0,{horizon}]/(2e) = {:.5}: {}",
                    a.capacity.value,
                    scaled,
                    if holds { "holds" } else { "fails" }
                ));
                rows.push(Row {
                    r,
                    cap_unit: a.capacity.value,
                    cap_unit_stderr: a.capacity.stderr,
                    cap_window: b.capacity.value,
                    cap_window_stderr: b.capacity.stderr,
                    scaled_window: scaled,
                    holds,
                    truncation: (-horizon).exp(),
                });
            }
            run.csv("window.csv", rows)
        }
        Experiment::Planar { lambdas, r } => {
            #[derive(Serialize)]
            struct Row {
                lambda: f64,
                x: f64,
                p: f64,
                stderr: f64,
                sigma: f64,
                ln_ratio: f64,
            }
            mc.validate()?;
            let grid = mc.grid()?;
            let sigma = sigma_series(*r, smallball::DEFAULT_TOL)?.value;
            let base = RngStream::new(mc.master_seed);
            let mut rows = Vec::new();
            for &lambda in lambdas {
                let region = ConfinementRegion::new(lambda, *r)?;
                let hits = run.timed("planar", || {
                    runner.map(mc.replicates, |i| planar_confinement(&region, &grid, base.with_replicate(i)))
                });
                let e = McEstimate::from_counts(hits.iter().filter(|h| **h).count() as u64, mc.replicates);
                lines.push(format!("λ = {lambda}: {:.6} ± {:.6}", e.value, e.stderr));
                rows.push(Row {
                    lambda,
                    x: lambda.cbrt() / (r * r),
                    p: e.value,
                    stderr: e.stderr,
                    sigma,
                    ln_ratio: (e.value / sigma).ln(),
                });
            }
            run.csv("planar.csv", rows)
        }
        Experiment::Paths { s_values, replicates } => {
            #[derive(Serialize)]
            struct Row {
                replicate: u64,
                s: f64,
                t: f64,
                value: f64,
            }
            let grid = mc.grid()?;
            let base = RngStream::new(mc.master_seed);
            let ensembles = run.timed("paths", || {
                (0..*replicates).map(|i| ou_ensemble(s_values, &grid, base.with_replicate(i))).collect::<Result<Vec<_>, _>>()
            })?;
            let times = grid.points();
            let rows = ensembles.iter().enumerate().flat_map(|(i, e)| {
                let times = &times;
                e.s_values.iter().zip(&e.values).flat_map(move |(&s, path)| {
                    times.iter().zip(path).map(move |(&t, &value)| Row { replicate: i as u64, s, t, value })
                })
            });
            lines.push(format!("{} replicates × {} slices × {} grid points", replicates, s_values.len(), grid.len()));
            run.csv("paths.csv", rows)
        }
    }
}
