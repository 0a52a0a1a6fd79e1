use std::path::Path;

use gibbslab_core::conditions::{
    analytic_local_ratio, check_condition_contraction, check_condition_local_with, check_condition_riemann,
    LocalOptions,
};
use gibbslab_core::coupling::{run_coupling, CouplingInit, CouplingOptions, DEFAULT_CAP};
use gibbslab_core::equilibrium::{find_beta_c, find_beta_s, find_equilibria_with, EquilibriumOptions, Phase};
use gibbslab_core::glauber::{random_configuration, shuffled_configuration, simulate as run_glauber};
use gibbslab_core::io::{write_coupling_trials_csv, write_mean_distance_csv, write_mixing_csv, write_trajectory_csv};
use gibbslab_core::lumped::{build_lumped_kernel, exact_mixing_time, StartSet, DEFAULT_MAX_STEPS};
use gibbslab_core::rng::RngStream;
use gibbslab_core::{Configuration, LatticePoint, ModelSpec};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{effective, layered, required};
use crate::output::{config_comment, diag, emit, json_document, Cell, Format, Table};
use crate::{
    CheckArgs, CliError, ConditionSel, CoupleArgs, CoupleInit, CriticalArgs, EquilibriumArgs, MixingArgs, PhaseArgs,
    SimInit, SimulateArgs, Starts,
};

/// Transition order threshold on |beta_c - beta_s|.
const ORDER_GAP: f64 = 1e-4;

fn model(q: usize, r: f64, beta: f64) -> Result<ModelSpec, CliError> {
    ModelSpec::gcwp(q, r, beta).map_err(|e| CliError::Usage(e.to_string()))
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

pub fn critical(flags: CriticalArgs, file: Option<&Path>, out: Option<&Path>) -> Result<(), CliError> {
    let mut a = layered("critical", &flags, file)?;
    let q = required(a.q, "q")?;
    let r = *a.r.get_or_insert(2.0);
    let format = *a.format.get_or_insert(Format::Json);
    model(q, r, 0.0)?;
    let config = effective("critical", &a);
    let bc = find_beta_c(q, r)?;
    let bs = find_beta_s(q, r)?;
    let gap = bc - bs;
    let order = if gap.abs() > ORDER_GAP { "first" } else { "second" };
    let bytes = match format {
        Format::Json => json_document(json!({
            "config": config,
            "beta_c": bc,
            "beta_s": bs,
            "gap": gap,
            "order": order,
        })),
        Format::Csv => {
            let mut t = Table::new(&["q", "r", "beta_c", "beta_s", "gap", "order"]);
            t.rows.push(vec![
                Cell::Int(q as u64),
                Cell::Float(r),
                Cell::Float(bc),
                Cell::Float(bs),
                Cell::Float(gap),
                Cell::Text(order.into()),
            ]);
            t.render(Format::Csv, &config)
        }
    };
    emit(out, &bytes)
}

pub fn equilibrium(flags: EquilibriumArgs, file: Option<&Path>, out: Option<&Path>) -> Result<(), CliError> {
    let mut a = layered("equilibrium", &flags, file)?;
    let q = required(a.q, "q")?;
    let r = *a.r.get_or_insert(2.0);
    let beta = required(a.beta, "beta")?;
    let m = model(q, r, beta)?;
    let config = effective("equilibrium", &a);
    let opts = EquilibriumOptions {
        grid_search: q <= 4,
        grid_resolution: a.grid_resolution,
    };
    let sol = find_equilibria_with(&m, &opts)?;
    emit(
        out,
        &json_document(json!({
            "config": config,
            "z_beta": sol.z_beta,
            "u": sol.u,
            "min_value": sol.min_value,
            "phase": sol.phase,
        })),
    )
}

pub fn check(flags: CheckArgs, file: Option<&Path>, out: Option<&Path>) -> Result<(), CliError> {
    let mut a = layered("check", &flags, file)?;
    let q = required(a.q, "q")?;
    let r = *a.r.get_or_insert(2.0);
    let beta = required(a.beta, "beta")?;
    let eps = *a.epsilon.get_or_insert(0.05);
    let which = *a.condition.get_or_insert(ConditionSel::All);
    let local = LocalOptions {
        directions: *a.directions.get_or_insert(500),
        seed: *a.direction_seed.get_or_insert(0),
        ..LocalOptions::default()
    };
    let m = model(q, r, beta)?;
    let config = effective("check", &a);
    let grid = a.grid_resolution;
    let mut reports = Vec::new();
    if matches!(which, ConditionSel::All | ConditionSel::Contraction) {
        reports.push(check_condition_contraction(&m, grid)?);
    }
    if matches!(which, ConditionSel::All | ConditionSel::Riemann) {
        reports.push(check_condition_riemann(&m, eps, grid)?);
    }
    if matches!(which, ConditionSel::All | ConditionSel::Local) {
        reports.push(check_condition_local_with(&m, &local)?);
    }
    for rep in &reports {
        diag(
            "info",
            "condition",
            json!({ "condition": rep.condition, "holds": rep.holds, "sup_ratio": rep.sup_ratio }),
        );
    }
    let all_hold = reports.iter().all(|r| r.holds);
    emit(
        out,
        &json_document(json!({ "config": config, "all_hold": all_hold, "reports": reports })),
    )
}

pub fn simulate(flags: SimulateArgs, file: Option<&Path>, out: Option<&Path>) -> Result<(), CliError> {
    let mut a = layered("simulate", &flags, file)?;
    let q = required(a.q, "q")?;
    let r = *a.r.get_or_insert(2.0);
    let beta = required(a.beta, "beta")?;
    let n = required(a.n, "n")?;
    let steps = required(a.steps, "steps")?;
    let seed = required(a.seed, "seed")?;
    let every = *a.record_every.get_or_insert(1);
    let init = *a.init.get_or_insert(SimInit::Pure);
    let format = *a.format.get_or_insert(Format::Csv);
    let m = model(q, r, beta)?;
    if n == 0 || n > u32::MAX as usize {
        return Err(CliError::Usage(format!("n = {n} out of range")));
    }
    if every == 0 {
        return Err(CliError::Usage("record_every must be positive".into()));
    }
    let config = effective("simulate", &a);
    let mut rng = RngStream::new(seed, 0);
    let initial = match init {
        SimInit::Pure => Configuration::constant(n, q, 0),
        SimInit::Random => random_configuration(n, q, &mut rng),
        SimInit::Balanced => shuffled_configuration(&LatticePoint::balanced(q, n as u32), &mut rng),
    };
    let traj = run_glauber(&m, initial, steps, every, &mut rng)?;
    let bytes = match format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_trajectory_csv(&mut buf, &traj, q, Some(&config_comment(&config))).map_err(io_err)?;
            buf
        }
        Format::Json => json_document(json!({ "config": config, "t": traj.times, "counts": traj.counts })),
    };
    emit(out, &bytes)
}

pub fn couple(flags: CoupleArgs, file: Option<&Path>, out: Option<&Path>) -> Result<(), CliError> {
    let mut a = layered("couple", &flags, file)?;
    let q = required(a.q, "q")?;
    let r = *a.r.get_or_insert(2.0);
    let beta = required(a.beta, "beta")?;
    let n = required(a.n, "n")?;
    let seed = required(a.seed, "seed")?;
    let trials = *a.trials.get_or_insert(100);
    let init = match *a.init.get_or_insert(CoupleInit::WorstPurePair) {
        CoupleInit::WorstPurePair => CouplingInit::WorstPurePair,
        CoupleInit::RandomPair => CouplingInit::RandomPair,
        CoupleInit::EquilibriumVsPure => CouplingInit::EquilibriumVsPure,
    };
    let mut opts = CouplingOptions::new(init, trials, seed);
    opts.cap = *a.cap.get_or_insert(DEFAULT_CAP);
    opts.curve_stride = *a.curve_stride.get_or_insert(1);
    opts.burn_in_sweeps = *a.burn_in_sweeps.get_or_insert(opts.burn_in_sweeps);
    let m = model(q, r, beta)?;
    if trials == 0 || n < 2 {
        return Err(CliError::Usage("need trials >= 1 and n >= 2".into()));
    }
    let config = effective("couple", &a);
    let run = run_coupling(&m, n, &opts)?;
    let s = run.summary();
    if run.approximate_start {
        diag(
            "warn",
            "approximate_start",
            json!({ "message": "equilibrium start drawn by burn-in, not exactly", "burn_in_sweeps": opts.burn_in_sweeps }),
        );
    }
    let summary = json_document(json!({
        "median": s.median,
        "q90": s.q90,
        "censored_fraction": s.censored_fraction,
        "n": s.n,
        "beta": beta,
        "q": q,
        "r": r,
        "seed": seed,
        "approximate_start": run.approximate_start,
        "config": config,
    }));
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(io_err)?;
            let comment = config_comment(&config);
            let mut buf = Vec::new();
            write_coupling_trials_csv(&mut buf, &run, Some(&comment)).map_err(io_err)?;
            emit(Some(&dir.join("trials.csv")), &buf)?;
            buf.clear();
            write_mean_distance_csv(&mut buf, &run, Some(&comment)).map_err(io_err)?;
            emit(Some(&dir.join("mean_distance.csv")), &buf)?;
            emit(Some(&dir.join("summary.json")), &summary)?;
        }
        None => emit(None, &summary)?,
    }
    let censored = run.outcomes.iter().filter(|o| o.censored).count();
    if censored > 0 {
        return Err(CliError::Compute(format!("{censored} of {trials} trials hit the cap of {} steps", opts.cap)));
    }
    Ok(())
}

pub fn mixing_exact(flags: MixingArgs, file: Option<&Path>, out: Option<&Path>) -> Result<(), CliError> {
    let curves = flags.curves.clone();
    let mut a = layered("mixing-exact", &flags, file)?;
    let q = required(a.q, "q")?;
    let r = *a.r.get_or_insert(2.0);
    let beta = required(a.beta, "beta")?;
    let ns_raw = required(a.n.clone(), "n")?.values();
    let eps = *a.epsilon.get_or_insert(0.25);
    let max_steps = *a.max_steps.get_or_insert(DEFAULT_MAX_STEPS);
    let starts = match *a.starts.get_or_insert(Starts::Default) {
        Starts::Default => StartSet::Default,
        Starts::All => StartSet::All,
    };
    let format = *a.format.get_or_insert(Format::Csv);
    let m = model(q, r, beta)?;
    let mut ns = Vec::with_capacity(ns_raw.len());
    for x in ns_raw {
        if x < 1.0 || x.fract() != 0.0 || x > u32::MAX as f64 {
            return Err(CliError::Usage(format!("n must be a positive integer, got {x}")));
        }
        ns.push(x as u32);
    }
    let config = effective("mixing-exact", &a);
    let results: Vec<_> = ns
        .par_iter()
        .map(|&n| {
            let k = build_lumped_kernel(&m, n)?;
            exact_mixing_time(&k, eps, &starts, max_steps).map(|mt| (k.len(), mt))
        })
        .collect();
    let mut table = Table::new(&["n", "states", "t_mix", "t_mix_over_n_ln_n"]);
    let mut failures = 0;
    if let Some(dir) = &curves {
        std::fs::create_dir_all(dir).map_err(io_err)?;
    }
    for (&n, res) in ns.iter().zip(results) {
        match res {
            Ok((states, mt)) => {
                let nf = n as f64;
                table.rows.push(vec![
                    Cell::Int(n as u64),
                    Cell::Int(states as u64),
                    Cell::Int(mt.t_mix as u64),
                    if n > 1 { Cell::Float(mt.t_mix as f64 / (nf * nf.ln())) } else { Cell::Missing },
                ]);
                if let Some(dir) = &curves {
                    let mut buf = Vec::new();
                    let comment = format!("{}\nn = {n}", config_comment(&config));
                    write_mixing_csv(&mut buf, &mt.d_curve, Some(&comment)).map_err(io_err)?;
                    emit(Some(&dir.join(format!("mixing_n{n}.csv"))), &buf)?;
                }
            }
            Err(e) => {
                failures += 1;
                diag("error", "not_mixed", json!({ "n": n, "message": e.to_string() }));
            }
        }
    }
    emit(out, &table.render(format, &config))?;
    if failures > 0 {
        return Err(CliError::Compute(format!("{failures} of {} population sizes failed", ns.len())));
    }
    Ok(())
}

pub fn phase_diagram(flags: PhaseArgs, file: Option<&Path>, out: Option<&Path>) -> Result<(), CliError> {
    let mut a = layered("phase-diagram", &flags, file)?;
    let q = required(a.q, "q")?;
    let r = *a.r.get_or_insert(2.0);
    let betas = required(a.beta.clone(), "beta")?.values();
    let grid = *a.grid_resolution.get_or_insert(100);
    let format = *a.format.get_or_insert(Format::Csv);
    for &b in &betas {
        model(q, r, b)?;
    }
    let config = effective("phase-diagram", &a);
    let bc = find_beta_c(q, r)?;
    let bs = find_beta_s(q, r)?;
    if q > 4 {
        diag("info", "contraction_skipped", json!({ "reason": "simplex grid limited to q <= 4", "q": q }));
    }
    let rows: Vec<Result<Vec<Cell>, CliError>> = betas
        .par_iter()
        .map(|&beta| {
            let m = ModelSpec::gcwp(q, r, beta)?;
            let sol = find_equilibria_with(
                &m,
                &EquilibriumOptions {
                    grid_search: q <= 4,
                    grid_resolution: None,
                },
            )?;
            let (ratio, holds) = if q <= 4 && sol.phase == Phase::Unique {
                let rep = check_condition_contraction(&m, Some(grid))?;
                (Cell::Float(rep.sup_ratio), Cell::Bool(rep.holds))
            } else {
                (Cell::Missing, Cell::Missing)
            };
            Ok(vec![
                Cell::Float(beta),
                Cell::Float(bc),
                Cell::Float(bs),
                Cell::Float(sol.u),
                Cell::Text(serde_json::to_value(sol.phase).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()),
                Cell::Float(analytic_local_ratio(q, r, beta)),
                ratio,
                holds,
            ])
        })
        .collect();
    let mut table = Table::new(&[
        "beta",
        "beta_c",
        "beta_s",
        "u",
        "phase",
        "local_ratio",
        "contraction_sup_ratio",
        "contraction_holds",
    ]);
    for row in rows {
        table.rows.push(row?);
    }
    emit(out, &table.render(format, &config))
}
