//! Subcommand implementations. Each writes its files through [`OutDir`] and
//! reports the exponent keys and seeds it used for the manifest.

use anyhow::{bail, Context, Result};
use sbmkit::bernstein::default_catalog;
use sbmkit::densities::{density_curve, DensityKind, DensityMethod};
use sbmkit::grid::GridSpec;
use sbmkit::kernels::{check_green_diff, radial_kernel, random_admissible_pairs, sweep_thm41, sweep_thm42, KernelKind};
use sbmkit::laplace::check_lemma_a1_bounds;
use sbmkit::montecarlo::{
    estimate_green_ball, estimate_poisson_kernel, harmonic_modulus_sweep, krylov_safonov_sweep,
    laplace_identity_check, simulate_exit, summarize, Bins, ExitStatus, KernelEstimate, McOptions, SimConfig,
    Subordinator, TargetSet, DEFAULT_JUMP_TRUNCATION,
};
use sbmkit::regvar::{check_de_haan, fit_potter_bound, index_sweep, DEFAULT_X_POINTS};
use sbmkit::verify::{checks_in, suite_passed, Suite, MAX_CENSORED, VERIFY_SEED};
use sbmkit::{lookup, CatalogEntry, LaplaceExponent, RatioSweep};
use serde::Serialize;

use crate::config::Settings;
use crate::output::{now_unix_ms, Cell, OutDir, RunManifest, Table};
use crate::plot::{emit_plot, PlotSpec};
use crate::{Cli, Command, DensityArg, KernelArg, McCmd, PhiCmd, RegvarCmd, SweepCmd, Target, TargetArg, Weight};

/// Per-run state handed to every command.
pub struct Ctx {
    pub settings: Settings,
    pub out: OutDir,
    keys: Vec<String>,
    seeds: Vec<u64>,
}

impl Ctx {
    fn entry(&mut self) -> Result<CatalogEntry> {
        let key = self.settings.exponent.clone();
        let entry = lookup(&key).with_context(|| format!("exponent `{key}`"))?;
        if !self.keys.contains(&key) {
            self.keys.push(key);
        }
        Ok(entry)
    }

    fn seed(&mut self) -> u64 {
        let s = self.settings.seed;
        if !self.seeds.contains(&s) {
            self.seeds.push(s);
        }
        s
    }

    fn csv(&mut self, name: &str, table: &Table) -> Result<()> {
        self.out.write_csv(name, table)?;
        println!("wrote {name} ({} rows)", table.len());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.out.write_json(name, value)?;
        println!("wrote {name}");
        Ok(())
    }

    fn mc_options(&mut self) -> McOptions {
        let mut opts = McOptions::new(self.settings.paths, self.seed());
        opts.workers = self.settings.workers;
        opts
    }

    fn sim_config(&mut self, radius: f64) -> Result<SimConfig> {
        let key = self.entry()?.key.to_string();
        let mut cfg = SimConfig::new(&key, self.settings.dim, radius, self.settings.paths, self.seed())?;
        cfg.workers = self.settings.workers;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Resolve settings, open the output directory, run, write the manifest.
pub fn execute(cli: &Cli, command_line: Vec<String>) -> Result<i32> {
    let started = now_unix_ms();
    let settings = Settings::resolve(&cli.common)?;
    let out = OutDir::open(&settings.out_dir)?;
    let mut ctx = Ctx { settings, out, keys: Vec::new(), seeds: Vec::new() };
    let code = dispatch(&mut ctx, &cli.command)?;
    let Ctx { settings, out, keys, seeds } = ctx;
    let manifest = RunManifest {
        command_line,
        config: settings,
        exponent_keys: keys,
        seeds,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix_ms: started,
        finished_unix_ms: 0,
        outputs: Vec::new(),
    };
    out.finish(manifest)?;
    Ok(code)
}

fn dispatch(ctx: &mut Ctx, cmd: &Command) -> Result<i32> {
    match cmd {
        Command::Phi(PhiCmd::List) => phi_list(ctx),
        Command::Phi(PhiCmd::Eval) => phi_eval(ctx),
        Command::Regvar { cmd } => regvar(ctx, cmd),
        Command::Density { kind, method } => density(ctx, *kind, method),
        Command::Kernel { kind } => kernel(ctx, *kind),
        Command::Sweep { cmd } => sweep(ctx, cmd),
        Command::LemmaA1 { p, a, b, weight } => lemma_a1(ctx, *p, *a, *b, *weight),
        Command::Mc { cmd } => mc(ctx, cmd),
        Command::Verify { suite } => verify(ctx, suite),
        Command::Plot { csv, x, y, logx, logy, kind, title, out } => {
            let spec = PlotSpec { x: x.clone(), y: y.clone(), logx: *logx, logy: *logy, kind: *kind, title: title.clone() };
            let svg = emit_plot(csv, &spec)?;
            ctx.out.write(out, svg.as_bytes())?;
            println!("wrote {out}");
            Ok(0)
        }
    }
}

fn phi_list(ctx: &mut Ctx) -> Result<i32> {
    let mut t = Table::new(&["key", "expected_alpha", "complete_bernstein", "closed_form_mu", "closed_form_u"]);
    for key in default_catalog() {
        let e = key.entry()?;
        println!("{key}");
        t.push(vec![
            key.to_string().into(),
            e.expected_alpha.into(),
            e.exponent.is_complete_bernstein().into(),
            e.closed_form_mu.is_some().into(),
            e.closed_form_u.is_some().into(),
        ]);
    }
    ctx.csv("phi_list.csv", &t)?;
    Ok(0)
}

fn phi_eval(ctx: &mut Ctx) -> Result<i32> {
    let exp = ctx.entry()?.exponent;
    let mut t = Table::new(&["lambda", "phi", "phi_prime"]);
    for l in ctx.settings.grid_or(GridSpec::new(1e-3, 1e3, 13)?) {
        t.push(vec![l.into(), exp.phi(l)?.into(), exp.phi_prime(l)?.into()]);
    }
    ctx.csv("phi_eval.csv", &t)?;
    Ok(0)
}

fn target_fn(exp: &LaplaceExponent, target: Target) -> impl Fn(f64) -> f64 + '_ {
    move |l| match target {
        Target::Phi => exp.value(l),
        Target::PhiPrime => exp.derivative(l),
    }
}

fn regvar(ctx: &mut Ctx, cmd: &RegvarCmd) -> Result<i32> {
    let exp = ctx.entry()?.exponent;
    match *cmd {
        RegvarCmd::Index { target, lambda_max, decades } => {
            let fits = index_sweep(target_fn(&exp, target), lambda_max, &DEFAULT_X_POINTS, decades)?;
            let mut t = Table::new(&["lambda", "x", "log_ratio", "index", "residual"]);
            for f in &fits {
                for &(x, lr) in &f.log_ratio_samples {
                    t.push(vec![f.lambda.into(), x.into(), lr.into(), f.index.into(), f.residual.into()]);
                }
            }
            ctx.csv("regvar_index.csv", &t)?;
            ctx.json("regvar_index.json", &fits)?;
            if let Some(last) = fits.last() {
                println!("index at lambda={:e}: {:.6}", last.lambda, last.index);
            }
        }
        RegvarCmd::Dehaan { lambda_max } => {
            let report = check_de_haan(|l| l * exp.derivative(l), lambda_max)?;
            let mut t = Table::new(&["lambda", "l_over_ell", "deviation"]);
            for ((l, q), d) in report.lambdas.iter().zip(&report.l_over_ell).zip(&report.deviations) {
                t.push(vec![(*l).into(), (*q).into(), (*d).into()]);
            }
            ctx.csv("regvar_dehaan.csv", &t)?;
            ctx.json("regvar_dehaan.json", &report)?;
            println!(
                "final deviation {:.3e}, shrinking: {}",
                report.final_deviation(),
                report.deviation_shrinking
            );
        }
        RegvarCmd::Potter { target, delta, lambda_min } => {
            let fit = fit_potter_bound(target_fn(&exp, target), delta, lambda_min)?;
            let mut t = Table::new(&["constant", "constant_half_mesh", "index", "delta", "exponent", "t_min"]);
            t.push(vec![
                fit.constant.into(),
                fit.constant_half_mesh.into(),
                fit.index.into(),
                fit.delta.into(),
                fit.exponent.into(),
                fit.t_min.into(),
            ]);
            ctx.csv("regvar_potter.csv", &t)?;
            ctx.json("regvar_potter.json", &fit)?;
            println!("Potter constant {:.6}", fit.constant);
        }
    }
    Ok(0)
}

fn density(ctx: &mut Ctx, kind: DensityArg, method: &str) -> Result<i32> {
    let entry = ctx.entry()?;
    let method: DensityMethod = method.parse()?;
    let (kind, name) = match kind {
        DensityArg::Mu => (DensityKind::LevyMu, "density_mu.csv"),
        DensityArg::U => (DensityKind::PotentialU, "density_u.csv"),
    };
    let grid = ctx.settings.grid_or(GridSpec::new(1e-4, 1.0, 13)?);
    let curve = density_curve(&entry, kind, method, &grid)?;
    let mut t = Table::new(&["t", "value", "method"]);
    for (x, v) in curve.t_grid.iter().zip(&curve.values) {
        t.push(vec![(*x).into(), (*v).into(), method.as_str().into()]);
    }
    ctx.csv(name, &t)?;
    Ok(0)
}

fn kernel(ctx: &mut Ctx, kind: KernelArg) -> Result<i32> {
    let entry = ctx.entry()?;
    let kind = match kind {
        KernelArg::J => KernelKind::JumpJ,
        KernelArg::G => KernelKind::GreenG,
    };
    let grid = ctx.settings.grid_or(GridSpec::new(1e-4, 1e-1, 13)?);
    let k = radial_kernel(&entry, kind, ctx.settings.dim, &grid)?;
    let mut t = Table::new(&["r", "value", "tail"]);
    for ((r, v), tail) in k.r_grid.iter().zip(&k.values).zip(&k.tails) {
        t.push(vec![(*r).into(), (*v).into(), (*tail).into()]);
    }
    ctx.csv(&format!("kernel_{}.csv", kind.as_str()), &t)?;
    Ok(0)
}

fn sweep_table(sweeps: &[RatioSweep]) -> Table {
    let names: Vec<String> = (0..sweeps.len())
        .map(|k| if sweeps.len() == 1 { "ratio".to_string() } else { format!("ratio_{}", k + 1) })
        .collect();
    let mut header = vec!["r"];
    header.extend(names.iter().map(String::as_str));
    let mut t = Table::new(&header);
    for (i, r) in sweeps[0].r_grid.iter().enumerate() {
        let mut row: Vec<Cell> = vec![(*r).into()];
        row.extend(sweeps.iter().map(|s| Cell::from(s.ratios[i])));
        t.push(row);
    }
    t
}

fn print_sweeps(sweeps: &[RatioSweep]) {
    for s in sweeps {
        println!(
            "{}: verdict {:?}, max/min {:.4}, tail slope {:.4}",
            s.comparison_label, s.verdict, s.max_over_min, s.log_slope_tail
        );
    }
}

fn sweep(ctx: &mut Ctx, cmd: &SweepCmd) -> Result<i32> {
    let entry = ctx.entry()?;
    let d = ctx.settings.dim;
    let grid = ctx.settings.grid_or(GridSpec::new(1e-4, 1e-1, 13)?);
    match cmd {
        SweepCmd::Thm41 => {
            let s = vec![sweep_thm41(&entry, d, &grid)?];
            ctx.csv("sweep_thm41.csv", &sweep_table(&s))?;
            ctx.json("sweep_thm41.json", &s[0])?;
            print_sweeps(&s);
        }
        SweepCmd::Thm42 => {
            let s = sweep_thm42(&entry, d, &grid)?;
            ctx.csv("sweep_thm42.csv", &sweep_table(&s))?;
            ctx.json("sweep_thm42.json", &s)?;
            print_sweeps(&s);
        }
        SweepCmd::Greendiff { pairs } => {
            let seed = ctx.seed();
            let mut t = Table::new(&["r", "g_r", "constant", "n_pairs"]);
            let mut reports = Vec::new();
            for (k, &r) in grid.iter().enumerate() {
                let p = random_admissible_pairs(d, r, *pairs, seed.wrapping_add(k as u64));
                let rep = check_green_diff(&entry, d, r, &p)?;
                t.push(vec![rep.r.into(), rep.g_r.into(), rep.constant.into(), rep.n_pairs.into()]);
                reports.push(rep);
            }
            let worst = reports.iter().map(|r| r.constant).fold(0.0, f64::max);
            ctx.csv("sweep_greendiff.csv", &t)?;
            ctx.json("sweep_greendiff.json", &reports)?;
            println!("largest empirical constant {worst:.4}");
        }
    }
    Ok(0)
}

fn lemma_a1(ctx: &mut Ctx, p: f64, a: f64, b: f64, weight: Weight) -> Result<i32> {
    if !(p > 1.0 && a > 0.0 && p + b > 1.0) {
        bail!("need p > 1, a > 0 and p + b > 1");
    }
    let grid = ctx.settings.grid_or(GridSpec::new(1e-6, 1e-1, 11)?);
    let w = move |t: f64| match weight {
        Weight::Power => t.powf(-b),
        Weight::PowerOnePlus => t.powf(-b) * (1.0 + t),
        Weight::Log => (std::f64::consts::E + 1.0 / t).ln(),
    };
    let s = vec![check_lemma_a1_bounds(w, p, a, b, &grid)];
    ctx.csv("lemma_a1.csv", &sweep_table(&s))?;
    ctx.json("lemma_a1.json", &s[0])?;
    print_sweeps(&s);
    Ok(0)
}

#[derive(Serialize)]
struct EstimateVerdict<'a> {
    estimate: &'a KernelEstimate,
    censored_fraction: f64,
    max_censored: f64,
    censoring_ok: bool,
}

fn estimate_table(est: &KernelEstimate) -> Table {
    let mut t = Table::new(&["inner", "outer", "value", "se", "volume"]);
    for k in 0..est.values.len() {
        let (a, b) = est.bins.shell(k);
        t.push(vec![a.into(), b.into(), est.values[k].into(), est.std_errors[k].into(), est.bin_volumes[k].into()]);
    }
    t
}

fn mc(ctx: &mut Ctx, cmd: &McCmd) -> Result<i32> {
    let d = ctx.settings.dim;
    match cmd {
        McCmd::Subordinator { t, lambdas } => {
            let entry = ctx.entry()?;
            let seed = ctx.seed();
            let sub = Subordinator::new(&entry.exponent, DEFAULT_JUMP_TRUNCATION, None)?;
            let pts =
                laplace_identity_check(&entry, &sub, *t, lambdas, ctx.settings.paths, seed, ctx.settings.workers)?;
            let mut tab = Table::new(&["lambda", "t", "empirical", "se", "exact", "passed"]);
            for p in &pts {
                tab.push(vec![p.lambda.into(), p.t.into(), p.empirical.into(), p.se.into(), p.exact.into(), p.passed.into()]);
            }
            ctx.csv("mc_subordinator.csv", &tab)?;
            let all = pts.iter().all(|p| p.passed);
            ctx.json(
                "mc_subordinator.json",
                &serde_json::json!({ "sampler": sub.sampler.describe(), "points": pts, "all_within_3se": all }),
            )?;
            println!("sampler {}: all within 3 SE: {all}", sub.sampler.describe());
        }
        McCmd::Exit { radius } => {
            let cfg = ctx.sim_config(*radius)?;
            let records = simulate_exit(&cfg)?;
            let mut header: Vec<String> = ["path", "status", "exit_time", "exit_radius"].map(String::from).to_vec();
            header.extend((0..d).map(|i| format!("x_{i}")));
            header.extend(["within_2r", "within_4r", "overshoot_flag"].map(String::from));
            let refs: Vec<&str> = header.iter().map(String::as_str).collect();
            let mut tab = Table::new(&refs);
            for r in &records {
                let status = match r.status {
                    ExitStatus::Exited => "exited",
                    ExitStatus::Killed => "killed",
                    ExitStatus::Censored => "censored",
                };
                let pos = r.exit_position.clone().unwrap_or_else(|| vec![f64::NAN; d]);
                let rad = pos.iter().map(|v| v * v).sum::<f64>().sqrt();
                let mut row: Vec<Cell> = vec![r.path.into(), status.into(), r.exit_time.into(), rad.into()];
                row.extend(pos.into_iter().map(Cell::from));
                row.extend([r.exited_to_shell.within_2r, r.exited_to_shell.within_4r, r.overshoot_flag].map(Cell::from));
                tab.push(row);
            }
            ctx.csv("mc_exit.csv", &tab)?;
            let summary = summarize(&records);
            let frac = summary.censored as f64 / summary.n as f64;
            ctx.json(
                "mc_exit.json",
                &serde_json::json!({
                    "config": cfg,
                    "summary": summary,
                    "censored_fraction": frac,
                    "max_censored": MAX_CENSORED,
                    "censoring_ok": frac < MAX_CENSORED,
                }),
            )?;
            println!("mean exit time {:.6e} ± {:.2e}, censored {}", summary.mean_exit_time, summary.exit_time_se, summary.censored);
        }
        McCmd::Green { radius, bins } => {
            let cfg = ctx.sim_config(*radius)?;
            let est = estimate_green_ball(&cfg, &Bins::uniform(0.0, *radius, *bins)?)?;
            ctx.csv("mc_green.csv", &estimate_table(&est))?;
            write_estimate_verdict(ctx, "mc_green.json", &est)?;
            println!("E tau = {:.6e} ± {:.2e}", est.mean_exit_time, est.exit_time_se);
        }
        McCmd::Poisson { radius, edges } => {
            let cfg = ctx.sim_config(*radius)?;
            let bins = Bins::radial(edges.iter().map(|e| e * radius).collect())?;
            let est = estimate_poisson_kernel(&cfg, &bins)?;
            ctx.csv("mc_poisson.csv", &estimate_table(&est))?;
            write_estimate_verdict(ctx, "mc_poisson.json", &est)?;
            println!("mass in bins {:.6} ± {:.2e}", est.total, est.total_se);
        }
        McCmd::Ks { radii } => {
            let key = ctx.entry()?.key.to_string();
            let opts = ctx.mc_options();
            let rep = krylov_safonov_sweep(&key, d, radii, &opts)?;
            let mut tab =
                Table::new(&["r", "rho", "p_half", "se_half", "p_quarter", "se_quarter", "censored", "killed"]);
            for p in &rep.points {
                tab.push(vec![
                    p.r.into(),
                    p.rho.into(),
                    p.p_half.into(),
                    p.se_half.into(),
                    p.p_quarter.into(),
                    p.se_quarter.into(),
                    p.censored.into(),
                    p.killed.into(),
                ]);
            }
            ctx.csv("mc_ks.csv", &tab)?;
            ctx.json("mc_ks.json", &rep)?;
            println!(
                "increasing in r: {}, separation {:.1} sigma, p/rho verdicts {:?} / {:?}",
                rep.increasing_in_r, rep.separation_sigma, rep.sweep_half.verdict, rep.sweep_quarter.verdict
            );
        }
        McCmd::Harmonic { radii, target } => {
            let key = ctx.entry()?.key.to_string();
            let opts = ctx.mc_options();
            let target = match target {
                TargetArg::Exterior => TargetSet::Exterior,
                TargetArg::Half => TargetSet::HalfExterior { axis: 0 },
            };
            let sw = harmonic_modulus_sweep(&key, d, radii, target, &opts)?;
            let mut tab = Table::new(&["r", "point", "x_0", "value", "se"]);
            for rep in &sw.reports {
                for (k, x) in rep.grid.iter().enumerate() {
                    tab.push(vec![rep.r.into(), k.into(), x[0].into(), rep.values[k].into(), rep.std_errors[k].into()]);
                }
            }
            ctx.csv("mc_harmonic.csv", &tab)?;
            ctx.json("mc_harmonic.json", &sw)?;
            println!(
                "moduli {:?}, spread {:.3}, mean value holds: {}",
                sw.moduli, sw.spread, sw.mean_value_holds
            );
        }
    }
    Ok(0)
}

fn write_estimate_verdict(ctx: &mut Ctx, name: &str, est: &KernelEstimate) -> Result<()> {
    let frac = est.censored_fraction();
    ctx.json(
        name,
        &EstimateVerdict { estimate: est, censored_fraction: frac, max_censored: MAX_CENSORED, censoring_ok: frac < MAX_CENSORED },
    )
}

fn verify(ctx: &mut Ctx, suite: &str) -> Result<i32> {
    let suite: Suite = suite.parse()?;
    ctx.seeds.push(VERIFY_SEED);
    let mut results = Vec::new();
    for check in checks_in(suite) {
        let r = check.run();
        println!("{}", r.line());
        ctx.out.write_json(&format!("check_{:02}_{}.json", r.id, r.name), &r)?;
        results.push((check.suite, r));
    }
    let mut summary = Table::new(&["id", "name", "suite", "outcome", "elapsed_secs", "summary"]);
    let mut metrics = Table::new(&["id", "name", "metric", "value"]);
    for (s, r) in &results {
        let outcome = serde_json::to_value(r.outcome)?.as_str().unwrap_or_default().to_string();
        summary.push(vec![
            u64::from(r.id).into(),
            r.name.as_str().into(),
            s.to_string().into(),
            outcome.into(),
            r.elapsed_secs.into(),
            r.summary.as_str().into(),
        ]);
        for m in &r.metrics {
            metrics.push(vec![u64::from(r.id).into(), r.name.as_str().into(), m.name.as_str().into(), m.value.into()]);
        }
    }
    ctx.out.write_csv("summary.csv", &summary)?;
    ctx.out.write_csv("metrics.csv", &metrics)?;
    let results: Vec<_> = results.into_iter().map(|(_, r)| r).collect();
    let ok = suite_passed(&results);
    println!("suite {suite}: {}", if ok { "passed" } else { "FAILED" });
    Ok(if ok { 0 } else { 1 })
}
