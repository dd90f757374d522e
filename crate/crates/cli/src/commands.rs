use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use log::info;
use serde::Serialize;
use ttstar_core::datamaps::{
    asymptotic_to_monodromy, expand_full, global_rho, ode_global_rho, AsymptoticData, MonodromyData,
};
use ttstar_core::tauconst::{self, ConstantConfig};
use ttstar_core::todaflow::{
    init_from_asymptotics, integrate, solve_global, GlobalConfig, IntegratorConfig, StopReason,
};
use ttstar_core::Error;

use crate::{json, ConstantArgs, Failure, MapsArgs, Output, SolveArgs, TauArgs, Tolerances};

pub(crate) fn emit_json<T: Serialize>(value: &T, output: &Output) -> Result<(), Failure> {
    let text = json::to_string(value, output.reproducible)?;
    write_text(&text, output.out.as_deref())
}

fn write_text(text: &str, path: Option<&Path>) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

impl Tolerances {
    fn apply(&self, cfg: &mut IntegratorConfig) {
        if let Some(r) = self.rel_tol {
            cfg.rel_tol = r;
        }
        if let Some(a) = self.abs_tol {
            cfg.abs_tol = a;
        }
    }

    fn global(&self) -> GlobalConfig {
        let mut cfg = GlobalConfig::default();
        self.apply(&mut cfg.integrator);
        cfg
    }
}

fn require_n3(n: usize) -> Result<(), Failure> {
    if n != 3 {
        return Err(Error::Unsupported(format!("only n = 3 is available, got n = {n}")).into());
    }
    Ok(())
}

#[derive(Serialize)]
struct MapsReport {
    n: usize,
    gamma_full: Vec<f64>,
    asymptotic: AsymptoticData,
    monodromy: MonodromyData,
    global_rho: Vec<f64>,
    /// ρ of the global solutions of the flow; odd n only.
    #[serde(skip_serializing_if = "Option::is_none")]
    ode_global_rho: Option<Vec<f64>>,
}

pub(crate) fn maps(a: &MapsArgs) -> Result<(), Failure> {
    let gamma = a.gamma.0.clone();
    let global = global_rho(a.n, &gamma)?;
    let rho = a.rho.as_ref().map_or_else(|| global.clone(), |r| r.0.clone());
    let asymptotic = AsymptoticData::new(a.n, gamma.clone(), rho)?;
    let monodromy = asymptotic_to_monodromy(&asymptotic)?;
    let ode = if a.n % 2 == 1 { Some(ode_global_rho(a.n, &gamma)?) } else { None };
    let report = MapsReport {
        n: a.n,
        gamma_full: expand_full(a.n, &gamma)?,
        asymptotic,
        monodromy,
        global_rho: global,
        ode_global_rho: ode,
    };
    emit_json(&report, &a.output)
}

pub(crate) fn solve(a: &SolveArgs) -> Result<(), Failure> {
    if !(a.x0 > 0.0 && a.x0 < a.x1) {
        return Err(Failure::Input(format!("need 0 < x0 < x1, got x0 = {}, x1 = {}", a.x0, a.x1)));
    }
    let traj = match &a.rho {
        None => {
            let cfg = a.tol.global();
            let sol = solve_global(a.n, &a.gamma.0, &[a.x0, a.x1], &cfg)?;
            info!(
                "global solution: {} Newton steps, rho read-off {:?}, x_tail {}",
                sol.iterations, sol.rho, sol.x_tail
            );
            sol.trajectory.restrict(a.x0, a.x1)?
        }
        Some(rho) => {
            let data = AsymptoticData::new(a.n, a.gamma.0.clone(), rho.0.clone())?;
            let start = init_from_asymptotics(&data, a.x0)?;
            let mut cfg = IntegratorConfig::default();
            a.tol.apply(&mut cfg);
            integrate(&start, a.x1, &cfg, a.n)?
        }
    };
    info!("{} samples, {:?}", traj.points.len(), traj.stats);
    match &a.out {
        Some(p) => {
            let mut f = BufWriter::new(File::create(p)?);
            traj.write_csv(&mut f)?;
            f.flush()?;
        }
        None => traj.write_csv(io::stdout().lock())?,
    }
    match traj.stop {
        StopReason::Completed => Ok(()),
        reason => Err(Failure::BlowUp(format!(
            "integration stopped ({reason:?}) at x = {}; partial trajectory written",
            traj.x_stop
        ))),
    }
}

#[derive(Serialize)]
struct TauReport {
    n: usize,
    gamma: Vec<f64>,
    x1: f64,
    x2: f64,
    log_tau: f64,
    classical_action: f64,
    boundary_term: f64,
    action_identity_residual: f64,
    /// ρ read off from the computed global solution.
    rho: Vec<f64>,
    s1: Option<f64>,
}

pub(crate) fn tau(a: &TauArgs) -> Result<(), Failure> {
    require_n3(a.n)?;
    if !(a.x1 > 0.0 && a.x1 < a.x2) {
        return Err(Failure::Input(format!("need 0 < x1 < x2, got x1 = {}, x2 = {}", a.x1, a.x2)));
    }
    let sol = tauconst::global_solution(&a.gamma.0, &[a.x1, a.x2], &a.tol.global())?;
    let traj = &sol.trajectory;
    let log_tau = traj.log_tau_between(a.x1, a.x2)?;
    let classical_action = traj.action_between(a.x1, a.x2)?;
    let (i1, i2) = (traj.index_of(a.x1), traj.index_of(a.x2));
    let boundary_term = match (i1, i2) {
        (Some(i1), Some(i2)) => a.x2 * traj.hamiltonian_at(i2) - a.x1 * traj.hamiltonian_at(i1),
        _ => f64::NAN,
    };
    let report = TauReport {
        n: 3,
        gamma: a.gamma.0.clone(),
        x1: a.x1,
        x2: a.x2,
        log_tau,
        classical_action,
        boundary_term,
        action_identity_residual: (log_tau - classical_action - boundary_term).abs(),
        rho: sol.rho.clone(),
        s1: sol.s1,
    };
    emit_json(&report, &a.output)
}

pub(crate) fn constant(a: &ConstantArgs) -> Result<(), Failure> {
    require_n3(a.n)?;
    if !(a.threshold >= 0.0) {
        return Err(Failure::Input(format!("threshold {} must be non-negative", a.threshold)));
    }
    let cfg = ConstantConfig {
        x1_grid: vec![a.x1, a.x1 / 2.0, a.x1 / 4.0],
        x2: a.x2,
        global: a.tol.global(),
    };
    let report = tauconst::constant_numeric(&a.gamma.0, &cfg)?;
    emit_json(&report, &a.output)?;
    if report.abs_diff <= a.threshold {
        Ok(())
    } else {
        Err(Failure::Verification(format!(
            "|c_numeric - c_closed| = {:e} exceeds threshold {:e} (reflected closed form differs by {:e})",
            report.abs_diff, a.threshold, report.abs_diff_reflected
        )))
    }
}
