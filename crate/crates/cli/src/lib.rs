//! Command dispatch for the `hr` binary. Every command reads a [`RunSpec`],
//! writes its files under the spec's output directory and reports whether
//! its checks passed.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::info;
use rayon::prelude::*;

use hr_core::analysis::{compute_constants, homogeneous_equilibria, verify_dissipativity};
use hr_core::config::{InitialCondition, RunSpec};
use hr_core::convergence::{all_studies, write_order_table};
use hr_core::grid::{read_snapshot_file, write_snapshot_file, Domain, Field};
use hr_core::integrate::{run, Trajectory};
use hr_core::model::{Component, Current, HrParameters, State};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Constants,
    Verify,
    Steady,
    Convergence,
    Sweep,
}

impl Command {
    pub fn label(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Constants => "constants",
            Command::Verify => "verify",
            Command::Steady => "steady",
            Command::Convergence => "convergence",
            Command::Sweep => "sweep",
        }
    }
}

/// `true` when every check of the command passed.
pub type Passed = bool;

/// Runs `cmd`. Relative paths inside the spec are resolved against
/// `base_dir` (normally the directory of the config file).
pub fn execute(cmd: Command, spec: &RunSpec, base_dir: &Path) -> Result<Passed> {
    let out = &spec.output_dir;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("spec.cfg"), spec.to_config_string()).context("archiving spec")?;
    match cmd {
        Command::Simulate => simulate(spec, base_dir).map(|(_, ok)| ok),
        Command::Constants => constants(spec, base_dir),
        Command::Verify => verify(spec, base_dir),
        Command::Steady => steady(spec, base_dir),
        Command::Convergence => convergence(spec),
        Command::Sweep => sweep(spec, base_dir),
    }
}

fn resolve(base_dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base_dir.join(p)
    }
}

/// Domain and parameters, with a field-valued current loaded if configured.
pub fn load_problem(spec: &RunSpec, base_dir: &Path) -> Result<(Domain, HrParameters)> {
    let dom = spec.domain.build()?;
    let mut p = spec.model.parameters();
    if let Some(file) = &spec.model.j_file {
        let path = resolve(base_dir, file);
        let snap = read_snapshot_file(&path)?;
        p.current = Current::Field(snap.into_field(&dom).with_context(|| format!("J field {}", path.display()))?);
    }
    Ok((dom, p))
}

pub fn initial_state(spec: &RunSpec, dom: &Domain, base_dir: &Path) -> Result<State> {
    Ok(match &spec.initial {
        InitialCondition::Constant(v) => State::constant(dom, *v),
        InitialCondition::Random { lo, hi, seed } => State::random_uniform(dom, *lo, *hi, *seed),
        InitialCondition::Files(files) => {
            let mut fields: Vec<Field> = Vec::with_capacity(3);
            for (c, f) in Component::ALL.into_iter().zip(files) {
                let path = resolve(base_dir, f);
                let snap = read_snapshot_file(&path)?;
                if snap.component != c {
                    bail!("{} holds component {}, expected {c}", path.display(), snap.component);
                }
                fields.push(snap.into_field(dom).with_context(|| path.display().to_string())?);
            }
            let w = fields.pop().expect("three fields");
            let v = fields.pop().expect("three fields");
            let u = fields.pop().expect("three fields");
            State::new(u, v, w)?
        }
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn simulate(spec: &RunSpec, base_dir: &Path) -> Result<(Trajectory, Passed)> {
    let (dom, p) = load_problem(spec, base_dir)?;
    let g0 = initial_state(spec, &dom, base_dir)?;
    let traj = run(&dom, &p, &spec.solver, &g0)?;
    let out = &spec.output_dir;
    traj.write_monitor_csv(create(&out.join("monitor.csv"))?)?;
    if spec.solver.probe.is_some() {
        traj.write_probe_csv(create(&out.join("probe.csv"))?)?;
    }
    for (k, (t, g)) in traj.snapshots.iter().enumerate() {
        for c in Component::ALL {
            let path = out.join(format!("snapshot_{k:05}_{c}.hrf"));
            write_snapshot_file(&path, g.component(c), c, *t)?;
        }
    }
    info!(
        "{} samples to t = {}, {} CG iterations",
        traj.samples.len(),
        traj.final_time,
        traj.cg_iterations
    );
    if let Some(b) = &traj.blow_up {
        log::error!("run stopped: non-finite {} at t = {}", b.component, b.t);
    }
    let ok = traj.is_complete();
    Ok((traj, ok))
}

fn constants(spec: &RunSpec, base_dir: &Path) -> Result<Passed> {
    let (dom, p) = load_problem(spec, base_dir)?;
    let rep = compute_constants(&p, dom.volume())?;
    rep.write_text(create(&spec.output_dir.join("constants.txt"))?)?;
    rep.write_text(std::io::stdout().lock())?;
    Ok(true)
}

fn verify(spec: &RunSpec, base_dir: &Path) -> Result<Passed> {
    let (traj, complete) = simulate(spec, base_dir)?;
    let rep = match traj.constants {
        Some(rep) => rep,
        None => {
            let (dom, p) = load_problem(spec, base_dir)?;
            compute_constants(&p, dom.volume())?
        }
    };
    let report = verify_dissipativity(&rep, &traj.samples, spec.slack)?;
    report.write_csv(create(&spec.output_dir.join("verify.csv"))?)?;
    match report.first_violation {
        Some(i) => {
            let r = &report.rows[i];
            log::error!(
                "bound violated at t = {}: weighted {} envelope {} in_ball {:?}",
                r.t,
                r.weighted,
                r.envelope,
                r.in_ball
            );
        }
        None => info!("envelope holds; worst weighted/envelope = {:e}", report.worst_ratio()),
    }
    Ok(complete && report.passed())
}

fn steady(spec: &RunSpec, base_dir: &Path) -> Result<Passed> {
    let (_, p) = load_problem(spec, base_dir)?;
    let set = homogeneous_equilibria(&p)?;
    set.write_table(create(&spec.output_dir.join("equilibria.csv"))?)?;
    info!("{} homogeneous equilibria", set.points.len());
    Ok(true)
}

fn convergence(spec: &RunSpec) -> Result<Passed> {
    let studies = all_studies(&spec.model.parameters())?;
    write_order_table(&studies, create(&spec.output_dir.join("convergence.csv"))?)?;
    for s in &studies {
        info!("{}: order {:.3} in [{}, {}]", s.name, s.order, s.band.0, s.band.1);
    }
    Ok(studies.iter().all(|s| s.passed()))
}

fn sweep(spec: &RunSpec, base_dir: &Path) -> Result<Passed> {
    if spec.sweep.is_empty() {
        bail!("[sweep] section is empty");
    }
    let cells = spec.sweep_cells();
    let results: Vec<Result<Passed>> = cells
        .par_iter()
        .enumerate()
        .map(|(i, overrides)| {
            let mut cell = spec.with_overrides(overrides)?;
            cell.output_dir = spec.output_dir.join(format!("cell_{i:03}"));
            fs::create_dir_all(&cell.output_dir)?;
            fs::write(cell.output_dir.join("spec.cfg"), cell.to_config_string())?;
            simulate(&cell, base_dir).map(|(_, ok)| ok)
        })
        .collect();

    let mut index = create(&spec.output_dir.join("sweep.csv"))?;
    let keys: Vec<&str> = spec.sweep.iter().map(|(k, _)| k.as_str()).collect();
    writeln!(index, "cell,{},pass", keys.join(","))?;
    let mut all = true;
    for (i, (overrides, res)) in cells.iter().zip(results).enumerate() {
        let values: Vec<&str> = overrides.iter().map(|(_, v)| v.as_str()).collect();
        let ok = res.with_context(|| format!("sweep cell {i}"))?;
        all &= ok;
        writeln!(index, "cell_{i:03},{},{}", values.join(","), u8::from(ok))?;
    }
    index.flush()?;
    Ok(all)
}
