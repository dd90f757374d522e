//! Tau function of global n = 3 solutions and its normalisation constant
//! C = lim (log τ(x₁, x₂) + x₂² + (γ₀² + γ₁²)/8 · ln x₁).

use serde::{Deserialize, Serialize};

use crate::datamaps::{gen_fun_f, global_rho, ode_global_rho};
use crate::error::{Error, Result};
use crate::ode::StepStats;
use crate::specialfn::psi_m2_unchecked;
use crate::todaflow::{solve_global, GlobalConfig, GlobalSolution, Trajectory};

const N: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantConfig {
    /// Geometric grid of lower limits, decreasing.
    pub x1_grid: Vec<f64>,
    pub x2: f64,
    pub global: GlobalConfig,
}

impl Default for ConstantConfig {
    fn default() -> Self {
        Self { x1_grid: vec![1e-2, 5e-3, 2.5e-3], x2: 7.0, global: GlobalConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantReport {
    pub gamma: Vec<f64>,
    pub c_numeric: f64,
    pub c_closed: f64,
    pub abs_diff: f64,
    pub x1_grid: Vec<f64>,
    pub x2_used: f64,
    /// Fitted p in C(x₁) ≈ C + a·x₁^p; `None` when C(x₁) is flat to rounding.
    pub extrapolation_exponent: Option<f64>,
    pub tail_bound: f64,
    /// C(x₁, x₂) on the grid.
    pub c_x1: Vec<f64>,
    pub s1: f64,
    pub integrator_stats: StepStats,
    /// [`constant_closed_reflected`] and its distance to `c_numeric`.
    pub c_closed_reflected: f64,
    pub abs_diff_reflected: f64,
}

fn check_gamma(gamma: &[f64]) -> Result<()> {
    if gamma.len() != 2 {
        return Err(Error::Shape { n: N, expected: 2, got: gamma.len() });
    }
    Ok(())
}

/// Global solution sampled at the given radii.
pub fn global_solution(gamma: &[f64], stations: &[f64], cfg: &GlobalConfig) -> Result<GlobalSolution> {
    check_gamma(gamma)?;
    solve_global(N, gamma, stations, cfg)
}

/// log τ(x₁, x₂) = ∫_{x₁}^{x₂} H dx along the global solution with asymptotics γ.
pub fn log_tau(gamma: &[f64], x1: f64, x2: f64) -> Result<f64> {
    log_tau_with(gamma, x1, x2, &GlobalConfig::default())
}

pub fn log_tau_with(gamma: &[f64], x1: f64, x2: f64, cfg: &GlobalConfig) -> Result<f64> {
    if !(x1 > 0.0 && x1 < x2) {
        return Err(Error::Parameter(format!("need 0 < x1 < x2, got x1 = {x1}, x2 = {x2}")));
    }
    let sol = global_solution(gamma, &[x1, x2], cfg)?;
    sol.trajectory.log_tau_between(x1, x2)
}

/// Classical action ∫ (Σ w̃_i (w_i)_x − H) dx over the whole trajectory.
pub fn classical_action(traj: &Trajectory) -> f64 {
    traj.action_cumulative.last().copied().unwrap_or(0.0)
}

/// |log τ − S − [x H]_{x₁}^{x₂}| between two samples of a trajectory.
pub fn action_identity_residual(traj: &Trajectory, x1: f64, x2: f64) -> Result<f64> {
    let lt = traj.log_tau_between(x1, x2)?;
    let s = traj.action_between(x1, x2)?;
    let (i1, i2) = (traj.index_of(x1).unwrap_or(0), traj.index_of(x2).unwrap_or(0));
    let boundary = x2 * traj.hamiltonian_at(i2) - x1 * traj.hamiltonian_at(i1);
    Ok((lt - s - boundary).abs())
}

/// C(x₁, x₂) = ∫_{x₁}^{x₂} (H + 2x) dx + x₁² + (γ₀² + γ₁²)/8 · ln x₁.
pub fn regularized_constant(traj: &Trajectory, gamma: &[f64], x1: f64, x2: f64) -> Result<f64> {
    let g2: f64 = gamma.iter().map(|g| g * g).sum();
    Ok(traj.reg_between(x1, x2)? + x1 * x1 + g2 / 8.0 * x1.ln())
}

/// Three-point extrapolation of C(x₁) ≈ C + a·x₁^p on a geometric grid.
pub fn extrapolate(x1_grid: &[f64], values: &[f64]) -> Result<(f64, Option<f64>)> {
    if x1_grid.len() != 3 || values.len() != 3 {
        return Err(Error::Parameter("extrapolation needs exactly three grid points".into()));
    }
    let r = x1_grid[0] / x1_grid[1];
    if !(r > 1.0) || ((x1_grid[1] / x1_grid[2]) / r - 1.0).abs() > 1e-12 {
        return Err(Error::Parameter(format!("x1 grid {x1_grid:?} is not geometric and decreasing")));
    }
    let d1 = values[0] - values[1];
    let d2 = values[1] - values[2];
    let noise = 1e-11 * (1.0 + values[2].abs());
    if d1.abs().max(d2.abs()) < noise {
        return Ok((values[2], None));
    }
    if d1 * d2 <= 0.0 || d2.abs() >= d1.abs() {
        return Err(Error::NonMonotone { values: values.to_vec() });
    }
    let p = (d1 / d2).ln() / r.ln();
    Ok((values[2] - d2 / (r.powf(p) - 1.0), Some(p)))
}

pub fn constant_numeric(gamma: &[f64], cfg: &ConstantConfig) -> Result<ConstantReport> {
    check_gamma(gamma)?;
    if cfg.x1_grid.iter().any(|&x| !(x > 0.0 && x < cfg.x2)) {
        return Err(Error::Parameter(format!(
            "x1 grid {:?} must lie in (0, x2 = {})",
            cfg.x1_grid, cfg.x2
        )));
    }
    let c_closed = constant_closed(gamma)?;
    let c_closed_reflected = constant_closed_reflected(gamma)?;
    let mut stations = cfg.x1_grid.clone();
    stations.push(cfg.x2);
    let sol = global_solution(gamma, &stations, &cfg.global)?;
    let c_x1 = cfg
        .x1_grid
        .iter()
        .map(|&x1| regularized_constant(&sol.trajectory, gamma, x1, cfg.x2))
        .collect::<Result<Vec<_>>>()?;
    let (c_numeric, p) = extrapolate(&cfg.x1_grid, &c_x1)?;
    let s1 = sol.s1.unwrap_or(f64::NAN);
    let x2 = cfg.x2;
    let tail_bound = s1.abs() * x2.sqrt() * (-2.0 * std::f64::consts::SQRT_2 * x2).exp();
    Ok(ConstantReport {
        gamma: gamma.to_vec(),
        c_numeric,
        c_closed,
        abs_diff: (c_numeric - c_closed).abs(),
        x1_grid: cfg.x1_grid.clone(),
        x2_used: x2,
        extrapolation_exponent: p,
        tail_bound,
        c_x1,
        s1,
        integrator_stats: sol.trajectory.stats,
        c_closed_reflected,
        abs_diff_reflected: (c_numeric - c_closed_reflected).abs(),
    })
}

/// Closed form −(γ₀²+γ₁²)/8 − (γ₀ρ₀+γ₁ρ₁)/2 − F/2 + 4(ψ(1/4)+ψ(2/4)+ψ(3/4)),
/// with ρ the global-solution value, m = −γ/2 and ψ = ψ^(−2).
pub fn constant_closed(gamma: &[f64]) -> Result<f64> {
    check_gamma(gamma)?;
    let rho = global_rho(N, gamma)?;
    let m: Vec<f64> = gamma.iter().map(|g| -0.5 * g).collect();
    let f = gen_fun_f(N, &rho, &m)?;
    let g2: f64 = gamma.iter().map(|g| g * g).sum();
    let gr: f64 = gamma.iter().zip(&rho).map(|(g, r)| g * r).sum();
    Ok(-g2 / 8.0 - 0.5 * gr - 0.5 * f + psi_constant())
}

fn psi_constant() -> f64 {
    4.0 * [0.25, 0.5, 0.75].iter().map(|&z| psi_m2_unchecked(z)).sum::<f64>()
}

/// −(γ₀²+γ₁²)/8 − F(ρ, m)/2 + 4(ψ(1/4)+ψ(2/4)+ψ(3/4)) with ρ from
/// [`ode_global_rho`]. Matches the quadrature value of C to about 1e-5.
pub fn constant_closed_reflected(gamma: &[f64]) -> Result<f64> {
    check_gamma(gamma)?;
    let rho = ode_global_rho(N, gamma)?;
    let m: Vec<f64> = gamma.iter().map(|g| -0.5 * g).collect();
    let f = gen_fun_f(N, &rho, &m)?;
    let g2: f64 = gamma.iter().map(|g| g * g).sum();
    Ok(-g2 / 8.0 - 0.5 * f + psi_constant())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_vanishes_at_zero() {
        assert!(constant_closed(&[0.0, 0.0]).unwrap().abs() < 1e-12);
        assert!(constant_closed_reflected(&[0.0, 0.0]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn reflected_closed_form_value() {
        // independent evaluation with mpmath
        let c = constant_closed_reflected(&[0.3, 0.1]).unwrap();
        assert!((c - (-0.023_592_787_29)).abs() < 1e-9, "{c}");
    }

    #[test]
    fn extrapolation_recovers_power_law() {
        let grid = [1e-2, 5e-3, 2.5e-3];
        let vals: Vec<f64> = grid.iter().map(|x: &f64| 1.5 + 0.3 * x.powf(0.7)).collect();
        let (c, p) = extrapolate(&grid, &vals).unwrap();
        assert!((c - 1.5).abs() < 1e-12);
        assert!((p.unwrap() - 0.7).abs() < 1e-9);
    }

    #[test]
    fn extrapolation_flat_and_nonmonotone() {
        let grid = [1e-2, 5e-3, 2.5e-3];
        assert_eq!(extrapolate(&grid, &[0.1, 0.1, 0.1]).unwrap(), (0.1, None));
        assert!(matches!(
            extrapolate(&grid, &[0.1, 0.2, 0.1]),
            Err(Error::NonMonotone { .. })
        ));
        assert!(extrapolate(&[1e-2, 4e-3, 2.5e-3], &[0.1, 0.2, 0.3]).is_err());
    }

    #[test]
    fn wrong_length_is_rejected() {
        assert!(matches!(constant_closed(&[0.1]), Err(Error::Shape { .. })));
    }
}
