//! Subcommand execution over the core routines.

use std::path::PathBuf;

use rayon::prelude::*;
use serde_json::json;

use scmac_core::channel::{shannon_threshold, RatePair};
use scmac_core::coupled::{forward_de, Schedule};
use scmac_core::defaults;
use scmac_core::ensemble::{design_rate, validate, CoupledParams, DegreeProfile};
use scmac_core::exit_chart::{analyze_constellation, exit_value, reverse_fixed_point};
use scmac_core::sim::{sweep_error_rate, SweepRow};
use scmac_core::{exit_chart, uncoupled, DeError};

use crate::config::{required, resolve, FileConfig};
use crate::output::{constellation_csv, linspace, sig17, write_json, write_text};
use crate::{Cli, Cmd, EnsembleArgs, ModeArgs};

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Validation(String),
    NonConvergence(String),
    NoSolution(String),
}

impl CliError {
    pub fn message(&self) -> &str {
        match self {
            CliError::Io(m)
            | CliError::Validation(m)
            | CliError::NonConvergence(m)
            | CliError::NoSolution(m) => m,
        }
    }

    /// 2 is taken by argument parsing; file trouble stays at the generic 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 3,
            CliError::NonConvergence(_) => 4,
            CliError::NoSolution(_) => 5,
        }
    }
}

impl From<DeError> for CliError {
    fn from(e: DeError) -> Self {
        match e {
            DeError::NonConvergence { iterations } => {
                CliError::NonConvergence(format!("no convergence within {iterations} sweeps"))
            }
            DeError::NoSolution { chi } => {
                CliError::NoSolution(format!("no fixed point with entropy {chi}"))
            }
            other => CliError::Validation(format!("{other:?}")),
        }
    }
}

struct Ctx {
    file: FileConfig,
    out_dir: PathBuf,
    json: bool,
    jobs: usize,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let out_dir = match cli.out_dir {
        Some(d) => d,
        None => match file.parse::<PathBuf>("out_dir")? {
            Some(d) => d,
            None => std::env::var_os("SCMAC_OUT_DIR")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(".")),
        },
    };
    let format = resolve(cli.format, &file, "format")?.unwrap_or_else(|| "csv".to_string());
    let json = match format.as_str() {
        "csv" => false,
        "json" => true,
        other => {
            return Err(CliError::Validation(format!("format must be csv or json, got `{other}`")))
        }
    };
    let jobs = resolve(cli.jobs, &file, "jobs")?.unwrap_or(1).max(1);
    // pool for `exit-curve` chains and `simulate` rates; results merge by
    // input order, never completion order
    let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    let ctx = Ctx { file, out_dir, json, jobs };

    match cli.cmd {
        Cmd::Rate { ens } => cmd_rate(&ctx, &ens),
        Cmd::Shannon { rate1, rate2 } => cmd_shannon(&ctx, rate1, rate2),
        Cmd::Threshold { mode, ens, tol_eps } => cmd_threshold(&ctx, &mode, &ens, tol_eps),
        Cmd::ForwardDe { ens, eps, schedule, schedule_seed, tol, max_sweeps } => {
            cmd_forward_de(&ctx, &ens, eps, schedule, schedule_seed, tol, max_sweeps)
        }
        Cmd::ExitCurve { mode, ens, grid_start, grid_end, grid_points, tol } => {
            cmd_exit_curve(&ctx, &mode, &ens, grid_start, grid_end, grid_points, tol)
        }
        Cmd::Constellation { ens, chi, tol, shape_tol } => {
            cmd_constellation(&ctx, &ens, chi, tol, shape_tol)
        }
        Cmd::Simulate { ens, m, eps, trials, seed } => {
            cmd_simulate(&ctx, &ens, m, eps, trials, seed)
        }
    }
}

fn degrees(ens: &EnsembleArgs, f: &FileConfig) -> Result<DegreeProfile, CliError> {
    let l1 = required(resolve(ens.l1, f, "l1")?, "l1")?;
    let r1 = required(resolve(ens.r1, f, "r1")?, "r1")?;
    let l2 = resolve(ens.l2, f, "l2")?.unwrap_or(l1);
    let r2 = resolve(ens.r2, f, "r2")?.unwrap_or(r1);
    Ok(DegreeProfile::new(l1, r1, l2, r2))
}

/// Degree sanity for subcommands that never build a chain.
fn degrees_validated(ens: &EnsembleArgs, f: &FileConfig) -> Result<DegreeProfile, CliError> {
    let deg = degrees(ens, f)?;
    validate(&CoupledParams::new(deg, 1, 1))
        .map_err(|v| CliError::Validation(format!("invalid degrees: {v}")))?;
    Ok(deg)
}

fn half_lens(ens: &EnsembleArgs, f: &FileConfig) -> Result<Vec<u32>, CliError> {
    if !ens.half_len.is_empty() {
        return Ok(ens.half_len.clone());
    }
    match f.parse_list::<u32>("half_len")? {
        Some(v) if !v.is_empty() => Ok(v),
        _ => Err(CliError::Validation(
            "missing `half_len` (flag -L or config key half_len)".to_string(),
        )),
    }
}

fn chain_at(ens: &EnsembleArgs, f: &FileConfig, half_len: u32) -> Result<CoupledParams, CliError> {
    let window = required(resolve(ens.window, f, "window")?, "window")?;
    let p = CoupledParams::new(degrees(ens, f)?, half_len, window);
    validate(&p).map_err(|v| CliError::Validation(format!("invalid chain parameters: {v}")))?;
    Ok(p)
}

fn chain(ens: &EnsembleArgs, f: &FileConfig) -> Result<CoupledParams, CliError> {
    let ls = half_lens(ens, f)?;
    if ls.len() != 1 {
        return Err(CliError::Validation(
            "this subcommand takes exactly one chain half length -L".to_string(),
        ));
    }
    chain_at(ens, f, ls[0])
}

fn positive_tol(value: f64, name: &str) -> Result<f64, CliError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(CliError::Validation(format!("{name} must be a positive finite number")))
    }
}

fn config_json(cmd: &str, ctx: &Ctx, extra: serde_json::Value) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    map.insert("subcommand".into(), cmd.into());
    map.insert("out_dir".into(), ctx.out_dir.display().to_string().into());
    map.insert("format".into(), if ctx.json { "json".into() } else { "csv".into() });
    map.insert("jobs".into(), ctx.jobs.into());
    if let serde_json::Value::Object(obj) = extra {
        for (k, v) in obj {
            map.insert(k, v);
        }
    }
    serde_json::Value::Object(map)
}

fn chain_json(p: &CoupledParams) -> serde_json::Value {
    json!({
        "l1": p.degrees.l1, "r1": p.degrees.r1,
        "l2": p.degrees.l2, "r2": p.degrees.r2,
        "half_len": p.half_len, "window": p.window,
    })
}

fn cmd_rate(ctx: &Ctx, ens: &EnsembleArgs) -> Result<(), CliError> {
    let p = chain(ens, &ctx.file)?;
    let d = p.degrees;
    let rate = |l, r| {
        design_rate(l, r, p.half_len, p.window)
            .map_err(|e| CliError::Validation(format!("{e:?}")))
    };
    let (r1, r2) = (rate(d.l1, d.r1)?, rate(d.l2, d.r2)?);
    println!("rate: R1 = {} R2 = {} (L = {}, w = {})", sig17(r1), sig17(r2), p.half_len, p.window);
    if ctx.json {
        let doc = json!({"config": config_json("rate", ctx, chain_json(&p)), "R1": r1, "R2": r2});
        write_json(&ctx.out_dir, "rate.json", &doc)?;
    }
    Ok(())
}

fn cmd_shannon(ctx: &Ctx, rate1: Option<f64>, rate2: Option<f64>) -> Result<(), CliError> {
    let r1 = required(resolve(rate1, &ctx.file, "R1")?, "R1")?;
    let r2 = required(resolve(rate2, &ctx.file, "R2")?, "R2")?;
    let pair = RatePair::new(r1, r2).map_err(|e| CliError::Validation(format!("{e:?}")))?;
    let eps = shannon_threshold(&pair);
    println!("shannon threshold: eps = {}", sig17(eps));
    if ctx.json {
        let doc = json!({
            "config": config_json("shannon", ctx, json!({"R1": r1, "R2": r2})),
            "eps": eps,
        });
        write_json(&ctx.out_dir, "shannon.json", &doc)?;
    }
    Ok(())
}

fn cmd_threshold(
    ctx: &Ctx,
    mode: &ModeArgs,
    ens: &EnsembleArgs,
    tol_eps: Option<f64>,
) -> Result<(), CliError> {
    let tol = resolve(tol_eps, &ctx.file, "tol_eps")?.unwrap_or(defaults::EPS_TOL);
    let tol = positive_tol(tol, "tol_eps")?;
    let (label, eps, cfg) = if mode.uncoupled {
        let deg = degrees_validated(ens, &ctx.file)?;
        let t = uncoupled::bp_threshold(deg, tol);
        let cfg = json!({
            "mode": "uncoupled", "tol_eps": tol,
            "l1": deg.l1, "r1": deg.r1, "l2": deg.l2, "r2": deg.r2,
        });
        ("uncoupled", t, cfg)
    } else {
        let p = chain(ens, &ctx.file)?;
        let t = scmac_core::coupled::bp_threshold(&p, tol);
        let mut cfg = chain_json(&p);
        cfg["mode"] = "coupled".into();
        cfg["tol_eps"] = tol.into();
        ("coupled", t, cfg)
    };
    println!("BP threshold ({label}): eps = {}", sig17(eps));
    if ctx.json {
        let doc = json!({"config": config_json("threshold", ctx, cfg), "eps": eps});
        write_json(&ctx.out_dir, "threshold.json", &doc)?;
    }
    Ok(())
}

fn cmd_forward_de(
    ctx: &Ctx,
    ens: &EnsembleArgs,
    eps: Option<f64>,
    schedule: Option<String>,
    schedule_seed: Option<u64>,
    tol: Option<f64>,
    max_sweeps: Option<u64>,
) -> Result<(), CliError> {
    let p = chain(ens, &ctx.file)?;
    let eps = required(resolve(eps, &ctx.file, "eps")?, "eps")?;
    let tol = positive_tol(
        resolve(tol, &ctx.file, "tol")?.unwrap_or(defaults::COUPLED_TOL),
        "tol",
    )?;
    let budget = resolve(max_sweeps, &ctx.file, "max_sweeps")?
        .unwrap_or_else(|| defaults::coupled_sweep_budget(p.half_len));
    let sched_name =
        resolve(schedule, &ctx.file, "schedule")?.unwrap_or_else(|| "parallel".to_string());
    let seed = resolve(schedule_seed, &ctx.file, "schedule_seed")?.unwrap_or(0);
    let sched = match sched_name.as_str() {
        "parallel" => Schedule::Parallel,
        "random" => Schedule::RandomAdmissible { seed },
        other => {
            return Err(CliError::Validation(format!(
                "unknown schedule `{other}` (expected parallel or random)"
            )))
        }
    };

    let fp = forward_de(eps, &p, &sched, tol, budget)?;
    let entropy = fp.constellation.entropy();
    let cfg = {
        let mut c = chain_json(&p);
        c["eps"] = eps.into();
        c["schedule"] = sched_name.clone().into();
        if sched_name == "random" {
            c["schedule_seed"] = seed.into();
        }
        c["tol"] = tol.into();
        c["max_sweeps"] = budget.into();
        c
    };
    let path = if ctx.json {
        let (x1, x2) = fp.constellation.rows();
        let doc = json!({
            "config": config_json("forward-de", ctx, cfg),
            "eps": fp.eps,
            "entropy": entropy,
            "residual": fp.residual,
            "x1": x1,
            "x2": x2,
        });
        write_json(&ctx.out_dir, "forward_de.json", &doc)?
    } else {
        write_text(&ctx.out_dir, "constellation.csv", &constellation_csv(&fp.constellation))?
    };
    println!(
        "forward DE: eps = {} entropy = {} residual = {} -> {}",
        sig17(fp.eps),
        sig17(entropy),
        sig17(fp.residual),
        path.display()
    );
    Ok(())
}

fn cmd_exit_curve(
    ctx: &Ctx,
    mode: &ModeArgs,
    ens: &EnsembleArgs,
    grid_start: Option<f64>,
    grid_end: Option<f64>,
    grid_points: Option<usize>,
    tol: Option<f64>,
) -> Result<(), CliError> {
    let gs = resolve(grid_start, &ctx.file, "grid_start")?;
    let ge = resolve(grid_end, &ctx.file, "grid_end")?;
    let gp = resolve(grid_points, &ctx.file, "grid_points")?;

    if mode.uncoupled {
        let deg = degrees_validated(ens, &ctx.file)?;
        let grid = linspace(gs.unwrap_or(0.001), ge.unwrap_or(1.0), gp.unwrap_or(500));
        let points = uncoupled::ebp_curve(deg, &grid)?;
        let cfg = json!({
            "mode": "uncoupled",
            "l1": deg.l1, "r1": deg.r1, "l2": deg.l2, "r2": deg.r2,
            "grid_start": grid[0], "grid_end": grid[grid.len() - 1], "grid_points": grid.len(),
        });
        let path = if ctx.json {
            let rows: Vec<serde_json::Value> = points
                .iter()
                .map(|pt| {
                    json!({"x": pt.x, "eps": pt.eps, "h_bp": pt.h_bp, "physical": pt.physical})
                })
                .collect();
            let doc = json!({"config": config_json("exit-curve", ctx, cfg), "points": rows});
            write_json(&ctx.out_dir, "exit_curve_uncoupled.json", &doc)?
        } else {
            let mut csv = String::from("x,eps,h_bp,physical\n");
            for pt in &points {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    sig17(pt.x),
                    sig17(pt.eps),
                    sig17(pt.h_bp),
                    u8::from(pt.physical)
                ));
            }
            write_text(&ctx.out_dir, "exit_curve_uncoupled.csv", &csv)?
        };
        println!("exit curve (uncoupled): {} points -> {}", points.len(), path.display());
        return Ok(());
    }

    let ls = half_lens(ens, &ctx.file)?;
    let tol = positive_tol(
        resolve(tol, &ctx.file, "tol")?.unwrap_or(defaults::REVERSE_TOL),
        "tol",
    )?;
    let grid = linspace(gs.unwrap_or(0.05), ge.unwrap_or(0.95), gp.unwrap_or(19));

    let curves: Vec<Result<(CoupledParams, Vec<exit_chart::CurveSample>), CliError>> = ls
        .par_iter()
        .map(|&l| {
            let p = chain_at(ens, &ctx.file, l)?;
            let samples = exit_chart::ebp_curve(&p, &grid, tol)?;
            Ok((p, samples))
        })
        .collect();

    let mut gaps = 0usize;
    let mut files = 0usize;
    for curve in curves {
        let (p, samples) = curve?;
        let cfg = {
            let mut c = chain_json(&p);
            c["mode"] = "coupled".into();
            c["tol"] = tol.into();
            c["grid_start"] = grid[0].into();
            c["grid_end"] = grid[grid.len() - 1].into();
            c["grid_points"] = grid.len().into();
            c
        };
        let name_stem = format!("exit_curve_L{}", p.half_len);
        if ctx.json {
            let rows: Vec<serde_json::Value> = samples
                .iter()
                .map(|s| match &s.point {
                    Ok(pt) => {
                        json!({"chi": s.chi, "eps": pt.fixed_point.eps, "h_bp": pt.h_bp})
                    }
                    Err(_) => {
                        gaps += 1;
                        json!({"chi": s.chi, "gap": true})
                    }
                })
                .collect();
            let doc = json!({"config": config_json("exit-curve", ctx, cfg), "points": rows});
            write_json(&ctx.out_dir, &format!("{name_stem}.json"), &doc)?;
        } else {
            let mut csv = String::from("chi,eps,h_bp\n");
            for s in &samples {
                match &s.point {
                    Ok(pt) => csv.push_str(&format!(
                        "{},{},{}\n",
                        sig17(s.chi),
                        sig17(pt.fixed_point.eps),
                        sig17(pt.h_bp)
                    )),
                    Err(_) => {
                        gaps += 1;
                        csv.push_str(&format!("{},nan,nan\n", sig17(s.chi)));
                    }
                }
            }
            write_text(&ctx.out_dir, &format!("{name_stem}.csv"), &csv)?;
        }
        files += 1;
    }
    println!(
        "exit curve (coupled): {} chains x {} points, {} gaps -> {}",
        files,
        grid.len(),
        gaps,
        ctx.out_dir.join("exit_curve_L*").display()
    );
    Ok(())
}

fn cmd_constellation(
    ctx: &Ctx,
    ens: &EnsembleArgs,
    chi: Option<f64>,
    tol: Option<f64>,
    shape_tol: Option<f64>,
) -> Result<(), CliError> {
    let p = chain(ens, &ctx.file)?;
    let chi = required(resolve(chi, &ctx.file, "chi")?, "chi")?;
    let tol = positive_tol(
        resolve(tol, &ctx.file, "tol")?.unwrap_or(defaults::REVERSE_TOL),
        "tol",
    )?;
    let shape_tol = positive_tol(
        resolve(shape_tol, &ctx.file, "shape_tol")?.unwrap_or(1e-6),
        "shape_tol",
    )?;

    let fp = reverse_fixed_point(chi, &p, tol)?;
    let shape = analyze_constellation(&fp.constellation, shape_tol);
    let h = exit_value(&fp.constellation, &p);
    let cfg = {
        let mut c = chain_json(&p);
        c["chi"] = chi.into();
        c["tol"] = tol.into();
        c["shape_tol"] = shape_tol.into();
        c
    };
    let report = json!({
        "config": config_json("constellation", ctx, cfg),
        "eps": fp.eps,
        "entropy": fp.constellation.entropy(),
        "residual": fp.residual,
        "h_bp": h,
        "shape": {
            "symmetric": shape.symmetric,
            "unimodal": shape.unimodal,
            "flat_value": shape.flat_value,
            "flat_width": shape.flat_width,
            "transition_width": shape.transition_width,
        },
    });
    let path = if ctx.json {
        let (x1, x2) = fp.constellation.rows();
        let mut doc = report;
        doc["x1"] = json!(x1);
        doc["x2"] = json!(x2);
        write_json(&ctx.out_dir, "constellation.json", &doc)?
    } else {
        write_text(&ctx.out_dir, "constellation.csv", &constellation_csv(&fp.constellation))?;
        write_json(&ctx.out_dir, "shape_report.json", &report)?
    };
    println!(
        "constellation: chi = {} eps = {} flat = {} -> {}",
        sig17(chi),
        sig17(fp.eps),
        sig17(shape.flat_value),
        path.display()
    );
    Ok(())
}

fn cmd_simulate(
    ctx: &Ctx,
    ens: &EnsembleArgs,
    m: Option<u32>,
    eps: Vec<f64>,
    trials: Option<u32>,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let p = chain(ens, &ctx.file)?;
    let m = required(resolve(m, &ctx.file, "m")?, "m")?;
    let eps_list = if eps.is_empty() {
        required(ctx.file.parse_list::<f64>("eps")?, "eps")?
    } else {
        eps
    };
    let trials = resolve(trials, &ctx.file, "trials")?.unwrap_or(100);
    let seed = resolve(seed, &ctx.file, "seed")?.unwrap_or(0);

    // per-rate rows are grid-independent, so worker output merges exactly
    let rows: Result<Vec<SweepRow>, CliError> = eps_list
        .par_iter()
        .map(|&e| {
            sweep_error_rate(&p, m, &[e], trials, seed)
                .map(|v| v[0])
                .map_err(CliError::from)
        })
        .collect();
    let rows = rows?;

    let cfg = {
        let mut c = chain_json(&p);
        c["m"] = m.into();
        c["eps"] = json!(eps_list);
        c["trials"] = trials.into();
        c["seed"] = seed.into();
        c
    };
    let path = if ctx.json {
        let out: Vec<serde_json::Value> = rows
            .iter()
            .map(|r| {
                json!({
                    "eps": r.eps,
                    "trials": r.trials,
                    "block_errors": r.block_errors,
                    "block_error_rate": r.block_error_rate,
                    "mean_residual_u1": r.mean_residual_u1,
                    "mean_residual_u2": r.mean_residual_u2,
                })
            })
            .collect();
        let doc = json!({"config": config_json("simulate", ctx, cfg), "rows": out});
        write_json(&ctx.out_dir, "sweep.json", &doc)?
    } else {
        let mut csv = String::from(
            "eps,trials,block_errors,block_error_rate,mean_residual_u1,mean_residual_u2\n",
        );
        for r in &rows {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                sig17(r.eps),
                r.trials,
                r.block_errors,
                sig17(r.block_error_rate),
                sig17(r.mean_residual_u1),
                sig17(r.mean_residual_u2)
            ));
        }
        write_text(&ctx.out_dir, "sweep.csv", &csv)?
    };
    println!(
        "simulate: {} rates x {} trials (M = {}) -> {}",
        rows.len(),
        trials,
        m,
        path.display()
    );
    Ok(())
}
