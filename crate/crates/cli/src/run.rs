use std::f64::consts::SQRT_2;
use std::path::{Path, PathBuf};

use phasespace_core::cat::{cat_photon_distribution, cat_wigner_grid, DEFAULT_WIGNER_RESOLUTION};
use phasespace_core::oscillator::{epsilon_at, quasienergy_with_steps, solve_epsilon, solve_epsilon_with, WRONSKIAN_TOL};
use phasespace_core::photon::photon_distribution;
use phasespace_core::symplectic::{default_steps, evolve_real_between, propagator_const_with, DEFAULT_TOL_SYMP};
use phasespace_core::{
    CatState, Complex64 as C64, FrequencyProfile, GaussianState, MultiIndex, PhaseGrid, PhotonDistribution,
    PropagatorReal, QuadraticHamiltonian,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{
    CatArgs, CatOutput, EvolveArgs, GridArgs, OscillatorArgs, PhotonDistArgs, QuasienergyArgs, ScenarioConfig,
};
use crate::error::CliError;
use crate::format::{to_json, write_file, Csv};

/// Environment variable overriding the symplectic tolerance of `evolve`.
pub const TOL_ENV: &str = "PHASESPACE_TOL";

/// Photon rows below this are omitted unless `min_prob` says otherwise.
pub const DEFAULT_MIN_PROB: f64 = 1e-15;

pub const DEFAULT_PHOTON_CUTOFF: u32 = 20;

/// Points per axis of the default Gaussian grids.
pub const DEFAULT_GRID_POINTS: usize = 101;

/// Files written by a run, data first and the metadata sidecar last.
#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub artifacts: Vec<PathBuf>,
}

/// Summary written next to photon tables.
#[derive(Serialize)]
struct PhotonSummary {
    mass: f64,
    mean_per_mode: Vec<f64>,
    p0: f64,
}

pub fn run(config: &ScenarioConfig) -> Result<RunReport, CliError> {
    config.validate()?;
    let (mut artifacts, resolved) = match config {
        ScenarioConfig::Evolve(a) => evolve(a)?,
        ScenarioConfig::PhotonDist(a) => photon_dist(a)?,
        ScenarioConfig::WignerGrid(a) => gaussian_grid(a, GridKind::Wigner)?,
        ScenarioConfig::QfuncGrid(a) => gaussian_grid(a, GridKind::Husimi)?,
        ScenarioConfig::Oscillator(a) => oscillator(a)?,
        ScenarioConfig::Quasienergy(a) => quasienergy(a)?,
        ScenarioConfig::Cat(a) => cat(a)?,
    };
    let names: Vec<String> = artifacts
        .iter()
        .map(|p| p.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned()))
        .collect();
    let meta = json!({
        "tool": "phasespace",
        "version": env!("CARGO_PKG_VERSION"),
        "command": config.name(),
        "config": config,
        "resolved": resolved,
        "artifacts": names,
    });
    let meta_path = sidecar(config.out(), ".meta.json");
    write_file(&meta_path, &to_json(&meta)?)?;
    artifacts.push(meta_path);
    Ok(RunReport { artifacts })
}

/// `path` with `suffix` appended to the full file name.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// The photon summary lives beside the CSV with a `.json` extension.
pub fn photon_summary_path(out: &Path) -> Result<PathBuf, CliError> {
    let path = out.with_extension("json");
    if path == out {
        return Err(CliError::Config(format!("photon table {} must not be a .json file", out.display())));
    }
    Ok(path)
}

fn tol_override() -> Result<Option<f64>, CliError> {
    match std::env::var(TOL_ENV) {
        Ok(text) => match text.trim().parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(Some(v)),
            _ => Err(CliError::Config(format!("{TOL_ENV} = {text:?} is not a positive number"))),
        },
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Config(format!("{TOL_ENV}: {e}"))),
    }
}

fn load_state(source: &crate::config::Source<phasespace_core::GaussianStateRecord>) -> Result<GaussianState, CliError> {
    GaussianState::from_record(&source.load()?).map_err(CliError::numeric("input state"))
}

type Outcome = (Vec<PathBuf>, Value);

fn evolve(a: &EvolveArgs) -> Result<Outcome, CliError> {
    let state = load_state(&a.state)?;
    let h = QuadraticHamiltonian::from_config(&a.hamiltonian.load()?).map_err(CliError::numeric("hamiltonian"))?;
    if h.n_modes() != state.n_modes() {
        return Err(CliError::Config(format!(
            "state has {} modes but the Hamiltonian has {}",
            state.n_modes(),
            h.n_modes()
        )));
    }
    let tol = tol_override()?.or(a.tol_symp).unwrap_or(DEFAULT_TOL_SYMP);
    let (prop, method, steps) = if a.t == 0.0 {
        (PropagatorReal::identity(h.n_modes()), "identity", None)
    } else if h.is_time_independent() {
        let b = h.b_at(0.0).map_err(CliError::numeric("hamiltonian"))?;
        let c = h.c_at(0.0).map_err(CliError::numeric("hamiltonian"))?;
        let p = propagator_const_with(&b, &c, a.t, tol).map_err(CliError::numeric("propagator"))?;
        (p, "matrix_exponential", None)
    } else {
        let steps = match a.steps {
            Some(s) => s,
            None => default_steps(&h, a.t).map_err(CliError::numeric("step count"))?,
        };
        let p = evolve_real_between(&h, 0.0, a.t, steps, tol).map_err(CliError::numeric("propagator"))?;
        (p, "rk4", Some(steps))
    };
    let prop = if a.inverse { prop.inverse().map_err(CliError::numeric("inverse propagator"))? } else { prop };
    let evolved = state.evolve(&prop).map_err(CliError::numeric("evolution"))?;
    write_file(&a.out, &to_json(&evolved.to_record())?)?;
    let resolved = json!({
        "method": method,
        "steps": steps,
        "tol_symp": tol,
        "inverse": a.inverse,
        "symplectic_defect": prop.defect(),
        "determinant": prop.determinant(),
    });
    Ok((vec![a.out.clone()], resolved))
}

fn write_photon_table(
    out: &Path,
    dist: &PhotonDistribution,
    p0: f64,
    min_prob: f64,
) -> Result<(Vec<PathBuf>, usize), CliError> {
    let n = dist.cutoff.len();
    let mut header: Vec<String> = (1..=n).map(|j| format!("n{j}")).collect();
    header.push("prob".into());
    let mut csv = Csv::new(&header);
    let mut omitted = 0;
    for (idx, p) in &dist.probs {
        if *p < min_prob {
            omitted += 1;
            continue;
        }
        let ints: Vec<u64> = idx.entries().iter().map(|&k| u64::from(k)).collect();
        csv.row(&ints, &[*p])?;
    }
    let summary_path = photon_summary_path(out)?;
    write_file(out, &csv.into_string())?;
    let summary = PhotonSummary { mass: dist.mass, mean_per_mode: dist.means.clone(), p0 };
    write_file(&summary_path, &to_json(&summary)?)?;
    Ok((vec![out.to_path_buf(), summary_path], omitted))
}

fn photon_dist(a: &PhotonDistArgs) -> Result<Outcome, CliError> {
    let state = load_state(&a.state)?;
    let cutoff = MultiIndex::new(a.cutoff.for_modes(state.n_modes())?);
    let dist = photon_distribution(&state, &cutoff).map_err(CliError::numeric("photon distribution"))?;
    let p0 = state.to_q_params().map_err(CliError::numeric("Q parameters"))?.p0;
    let min_prob = a.min_prob.unwrap_or(DEFAULT_MIN_PROB);
    let (files, omitted) = write_photon_table(&a.out, &dist, p0, min_prob)?;
    let resolved = json!({
        "cutoff": cutoff,
        "min_prob": min_prob,
        "rows_omitted": omitted,
        "clamped": dist.clamped,
    });
    Ok((files, resolved))
}

#[derive(Clone, Copy)]
enum GridKind {
    Wigner,
    Husimi,
}

fn default_gaussian_grid(state: &GaussianState, mode: usize, kind: GridKind) -> Result<PhaseGrid, CliError> {
    let n = state.n_modes();
    let (ip, iq) = (mode, n + mode);
    let extra = match kind {
        GridKind::Wigner => 0.0,
        GridKind::Husimi => 0.5,
    };
    let hp = 6.0 * (state.dispersion()[(ip, ip)] + extra).sqrt();
    let hq = 6.0 * (state.dispersion()[(iq, iq)] + extra).sqrt();
    let (mp, mq) = (state.mean()[ip], state.mean()[iq]);
    PhaseGrid::new(mp - hp, mp + hp, mq - hq, mq + hq, DEFAULT_GRID_POINTS).map_err(CliError::numeric("default grid"))
}

fn gaussian_grid(a: &GridArgs, kind: GridKind) -> Result<Outcome, CliError> {
    let state = load_state(&a.state)?;
    let n = state.n_modes();
    let mode = a.mode.unwrap_or(0);
    if mode >= n {
        return Err(CliError::Config(format!("mode {mode} out of range for {n} modes")));
    }
    let grid = match a.grid {
        Some(g) => g.0,
        None => default_gaussian_grid(&state, mode, kind)?,
    };
    let (ps, qs) = (grid.p_axis(), grid.q_axis());

    let rows: Vec<Vec<f64>> = match kind {
        GridKind::Wigner => {
            let eval = state.wigner_evaluator().map_err(CliError::numeric("Wigner function"))?;
            ps.par_iter()
                .map(|&p| {
                    let mut point: Vec<f64> = state.mean().iter().copied().collect();
                    point[mode] = p;
                    qs.iter()
                        .map(|&q| {
                            point[n + mode] = q;
                            eval.eval_slice(&point)
                        })
                        .collect::<Result<Vec<f64>, _>>()
                })
                .collect::<Result<_, _>>()
                .map_err(CliError::numeric("Wigner function"))?
        }
        GridKind::Husimi => {
            let params = state.to_q_params().map_err(CliError::numeric("Q parameters"))?;
            let mean = state.mean();
            let centre: Vec<C64> = (0..n).map(|k| C64::new(mean[n + k], mean[k]) / SQRT_2).collect();
            ps.par_iter()
                .map(|&p| {
                    let mut beta = centre.clone();
                    qs.iter()
                        .map(|&q| {
                            beta[mode] = C64::new(q, p) / SQRT_2;
                            params.q_function(&beta)
                        })
                        .collect::<Result<Vec<f64>, _>>()
                })
                .collect::<Result<_, _>>()
                .map_err(CliError::numeric("Q function"))?
        }
    };

    let csv = if n == 1 {
        let mut csv = Csv::new(&["p", "q", "value"]);
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                csv.row(&[], &[ps[i], qs[j], *v])?;
            }
        }
        csv
    } else {
        let mut header = vec!["index".to_string()];
        header.extend((1..=n).map(|k| format!("p{k}")));
        header.extend((1..=n).map(|k| format!("q{k}")));
        header.push("value".into());
        let mut csv = Csv::new(&header);
        let mut coords: Vec<f64> = state.mean().iter().copied().collect();
        coords.push(0.0);
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                coords[mode] = ps[i];
                coords[n + mode] = qs[j];
                coords[2 * n] = *v;
                csv.row(&[(i * grid.n + j) as u64], &coords)?;
            }
        }
        csv
    };
    write_file(&a.out, &csv.into_string())?;
    let resolved = json!({ "grid": grid, "mode": mode });
    Ok((vec![a.out.clone()], resolved))
}

fn oscillator(a: &OscillatorArgs) -> Result<Outcome, CliError> {
    let profile = a.profile.load()?;
    let steps = a.steps.unwrap_or_else(|| profile.default_steps(a.t_final));
    let tol = a.wronskian_tol.unwrap_or(WRONSKIAN_TOL);
    let traj = solve_epsilon_with(&profile, a.t_final, steps, tol).map_err(CliError::numeric("epsilon trajectory"))?;
    let mut csv = Csv::new(&["t", "re_eps", "im_eps", "sigma_x", "sigma_p", "sigma_xp", "r"]);
    for p in traj.points() {
        let v = p.variances();
        csv.row(&[], &[p.t, p.eps.re, p.eps.im, v.sigma_x, v.sigma_p, v.sigma_xp, v.r])?;
    }
    write_file(&a.out, &csv.into_string())?;
    let resolved = json!({
        "steps": steps,
        "wronskian_tol": tol,
        "max_wronskian_defect": traj.max_wronskian_defect(),
    });
    Ok((vec![a.out.clone()], resolved))
}

fn quasienergy(a: &QuasienergyArgs) -> Result<Outcome, CliError> {
    let profile = a.profile.load()?;
    let steps = a.steps.unwrap_or_else(|| profile.default_steps(a.period));
    let q = quasienergy_with_steps(&profile, a.period, steps).map_err(CliError::numeric("quasienergy"))?;
    write_file(&a.out, &to_json(&q)?)?;
    Ok((vec![a.out.clone()], json!({ "steps": steps })))
}

fn cat(a: &CatArgs) -> Result<Outcome, CliError> {
    let profile = match &a.profile {
        Some(p) => p.load()?,
        None => FrequencyProfile::harmonic(),
    };
    let point = match a.steps {
        Some(_) if a.t == 0.0 => epsilon_at(&profile, 0.0),
        Some(steps) => solve_epsilon(&profile, a.t, steps).map(|traj| traj.last()),
        None => epsilon_at(&profile, a.t),
    }
    .map_err(CliError::numeric("epsilon"))?;
    let state = CatState::new(a.parity, a.alpha.0, point).map_err(CliError::numeric("cat state"))?;
    let kind = a.kind.or_else(|| CatOutput::infer(&a.out)).expect("validated");

    let (files, resolved) = match kind {
        CatOutput::Wavefunction => {
            let grid = state.grid();
            let mut csv = Csv::new(&["x", "re_psi", "im_psi"]);
            for (x, psi) in grid.axis().into_iter().zip(state.sample(&grid)) {
                csv.row(&[], &[x, psi.re, psi.im])?;
            }
            write_file(&a.out, &csv.into_string())?;
            (vec![a.out.clone()], json!({ "points": grid.points, "half_width": grid.x_max }))
        }
        CatOutput::Photon => {
            let cutoff = a.cutoff.unwrap_or(DEFAULT_PHOTON_CUTOFF);
            let dist = cat_photon_distribution(&state, cutoff).map_err(CliError::numeric("cat photon distribution"))?;
            let p0 = dist.probs.first().map_or(0.0, |(_, p)| *p);
            let (files, omitted) = write_photon_table(&a.out, &dist, p0, DEFAULT_MIN_PROB)?;
            (files, json!({ "cutoff": cutoff, "rows_omitted": omitted }))
        }
        CatOutput::Wigner => {
            let grid = match a.grid {
                Some(g) => g.0,
                None => default_cat_grid(&state)?,
            };
            let values = cat_wigner_grid(&state, grid).map_err(CliError::numeric("cat Wigner function"))?;
            let mut csv = Csv::new(&["p", "q", "value"]);
            for (p, q, v) in values.iter() {
                csv.row(&[], &[p, q, v])?;
            }
            write_file(&a.out, &csv.into_string())?;
            (vec![a.out.clone()], json!({ "grid": grid, "integral": values.integral(), "min": values.min() }))
        }
    };
    let mut resolved = resolved;
    resolved["kind"] = json!(kind.as_str());
    resolved["eps"] = json!([point.eps.re, point.eps.im]);
    resolved["eps_dot"] = json!([point.eps_dot.re, point.eps_dot.im]);
    Ok((files, resolved))
}

/// Square grid covering both coherent components with four widths to spare.
fn default_cat_grid(state: &CatState) -> Result<PhaseGrid, CliError> {
    let p = state.point();
    let scale = 1f64.max(p.eps.norm()).max(p.eps_dot.norm());
    let half = scale * (4.0 + SQRT_2 * state.alpha().norm());
    PhaseGrid::square(half, DEFAULT_WIGNER_RESOLUTION).map_err(CliError::numeric("default grid"))
}
