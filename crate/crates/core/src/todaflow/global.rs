//! Global solutions by shooting from the large-x tail.
//!
//! Near x = ∞ the solution decays and the linearised system
//! (x w_x)_x = x M w decouples into modes K₀(√λ x)·v along the eigenvectors
//! of M. Integrating backward from a linear tail to tiny x and reading off
//! γ = 2w̃ gives a map from mode amplitudes to γ, which Newton inverts. The
//! backward direction is the stable one: forward integration from small x
//! amplifies errors by the growing I₀ modes.

use serde::{Deserialize, Serialize};

use super::integrate::run_segments;
use super::{IntegratorConfig, PhasePoint, TodaSystem, Trajectory};
use crate::datamaps::{check_generic_reduced, GENERICITY_MARGIN};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalConfig {
    /// Start of the backward integration; chosen from the slowest decay
    /// rate when `None`.
    pub x_tail: Option<f64>,
    /// End of the backward integration; chosen from γ when `None`.
    pub x_min: Option<f64>,
    pub integrator: IntegratorConfig,
    /// Newton stops once max|γ_read − γ| is below this.
    pub gamma_tol: f64,
    pub max_iterations: usize,
}

impl Default for GlobalConfig {
    fn default() -> Self {
        Self {
            x_tail: None,
            x_min: None,
            integrator: IntegratorConfig {
                rel_tol: 1e-12,
                abs_tol: 1e-30,
                blowup_threshold: 20.0,
                ..IntegratorConfig::default()
            },
            gamma_tol: 1e-10,
            max_iterations: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalSolution {
    pub n: usize,
    pub gamma: Vec<f64>,
    /// γ read off at x_min from the final shot.
    pub gamma_achieved: Vec<f64>,
    /// ρ read off at x_min from the final shot.
    pub rho: Vec<f64>,
    /// Decay rates √λ of the tail modes, ascending.
    pub decay_rates: Vec<f64>,
    /// Amplitudes of the unit-norm tail modes.
    pub amplitudes: Vec<f64>,
    /// Tail coefficients in the normalisation w ≈ −s₁ 2^{−7/4}(πx)^{−1/2}e^{−2√2x}(1,1)
    /// + s₂ 2^{−5/2}(πx)^{−1/2}e^{−4x}(1,−1); n = 3 only.
    pub s1: Option<f64>,
    pub s2: Option<f64>,
    pub iterations: usize,
    pub x_tail: f64,
    pub x_min: f64,
    pub trajectory: Trajectory,
}

/// K₀ and K₁ for large z by their asymptotic series.
pub(crate) fn bessel_k01_large(z: f64) -> (f64, f64) {
    let series = |nu: f64| {
        let mu = 4.0 * nu * nu;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..40 {
            let kf = k as f64;
            let next = term * (mu - (2.0 * kf - 1.0).powi(2)) / (8.0 * kf * z);
            if next.abs() >= term.abs() {
                break;
            }
            term = next;
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        sum
    };
    let pre = (std::f64::consts::PI / (2.0 * z)).sqrt() * (-z).exp();
    (pre * series(0.0), pre * series(1.0))
}

/// Eigenpairs of a small symmetric matrix by cyclic Jacobi rotations,
/// ascending eigenvalues, each eigenvector with its first nonzero entry positive.
fn symmetric_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(i == j)).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&j| {
            let mut col: Vec<f64> = (0..n).map(|i| v[i][j]).collect();
            let lead = col.iter().copied().find(|c| c.abs() > 1e-12).unwrap_or(1.0);
            if lead < 0.0 {
                col.iter_mut().for_each(|c| *c = -*c);
            }
            col
        })
        .collect();
    (values, vectors)
}

struct Shooter<'a> {
    sys: TodaSystem,
    rates: Vec<f64>,
    modes: Vec<Vec<f64>>,
    x_tail: f64,
    stations: Vec<f64>,
    cfg: &'a IntegratorConfig,
}

struct Shot {
    gamma: Vec<f64>,
    rho: Vec<f64>,
    trajectory: Trajectory,
}

impl Shooter<'_> {
    fn tail_point(&self, amps: &[f64]) -> PhasePoint {
        let l = self.sys.dim();
        let x = self.x_tail;
        let mut w = vec![0.0; l];
        let mut wt = vec![0.0; l];
        for ((a, k), v) in amps.iter().zip(&self.rates).zip(&self.modes) {
            let z = k * x;
            let (k0, k1) = bessel_k01_large(z);
            for i in 0..l {
                w[i] += a * k0 * v[i];
                wt[i] -= a * z * k1 * v[i];
            }
        }
        PhasePoint { x, w, wt }
    }

    fn shoot(&self, amps: &[f64]) -> Result<Option<Shot>> {
        let start = self.tail_point(amps);
        let trajectory = run_segments(&self.sys, &start, &self.stations, self.cfg)?;
        if !trajectory.is_complete() {
            return Ok(None);
        }
        let p = &trajectory.points[0];
        let ln_x = p.x.ln();
        let gamma: Vec<f64> = p.wt.iter().map(|v| 2.0 * v).collect();
        let rho = p.w.iter().zip(&gamma).map(|(w, g)| 2.0 * w - g * ln_x).collect();
        Ok(Some(Shot { gamma, rho, trajectory }))
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Solves a small dense system by Gaussian elimination with partial pivoting.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

fn newton(
    shooter: &Shooter<'_>,
    target: &[f64],
    guess: Vec<f64>,
    cfg: &GlobalConfig,
) -> Result<Option<(Vec<f64>, Shot, usize)>> {
    let Some(mut shot) = shooter.shoot(&guess)? else {
        return Ok(None);
    };
    let mut amps = guess;
    let mut err = max_abs_diff(&shot.gamma, target);
    for it in 0..cfg.max_iterations {
        if err < cfg.gamma_tol {
            return Ok(Some((amps, shot, it)));
        }
        let l = amps.len();
        let mut jac = vec![vec![0.0; l]; l];
        for j in 0..l {
            let delta = 1e-6 * amps[j].abs().max(1.0);
            let mut probe = amps.clone();
            probe[j] += delta;
            let Some(s) = shooter.shoot(&probe)? else {
                return Ok(None);
            };
            for i in 0..l {
                jac[i][j] = (s.gamma[i] - shot.gamma[i]) / delta;
            }
        }
        let resid: Vec<f64> = target.iter().zip(&shot.gamma).map(|(t, g)| t - g).collect();
        let Some(step) = solve_linear(jac, resid) else {
            return Ok(None);
        };
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..12 {
            let trial: Vec<f64> = amps.iter().zip(&step).map(|(a, d)| a + lambda * d).collect();
            if let Some(s) = shooter.shoot(&trial)? {
                let e = max_abs_diff(&s.gamma, target);
                if e < err {
                    amps = trial;
                    shot = s;
                    err = e;
                    improved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !improved {
            log::debug!("newton stalled at residual {err:e}");
            return Ok((err < 1e3 * cfg.gamma_tol).then_some((amps, shot, it + 1)));
        }
    }
    Ok((err < cfg.gamma_tol).then_some((amps, shot, cfg.max_iterations)))
}

/// Smallest exponent ε in the x^ε corrections to the small-x asymptotics.
fn correction_exponent(sys: &TodaSystem, gamma: &[f64]) -> f64 {
    let k = gamma.len() - 1;
    let mut e = 2.0 + 2.0 * gamma[0];
    for i in 1..=k {
        e = e.min(2.0 + gamma[i] - gamma[i - 1]);
    }
    let upper = if sys.n() % 2 == 1 { 2.0 - 2.0 * gamma[k] } else { 2.0 - gamma[k] };
    e.min(upper)
}

/// The global solution with small-x asymptotics γ (odd n), sampled at
/// `stations` (any order, strictly inside the integration range).
pub fn solve_global(n: usize, gamma: &[f64], stations: &[f64], cfg: &GlobalConfig) -> Result<GlobalSolution> {
    let sys = TodaSystem::new(n)?;
    if gamma.len() != sys.dim() {
        return Err(Error::Shape { n, expected: sys.dim(), got: gamma.len() });
    }
    check_generic_reduced(n, gamma, GENERICITY_MARGIN)?;
    let eps = correction_exponent(&sys, gamma);
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!(
            "gamma = {gamma:?} is outside the range of global solutions"
        )));
    }

    let (lambdas, modes) = symmetric_eigen(sys.linearization());
    let rates: Vec<f64> = lambdas.iter().map(|l| l.sqrt()).collect();
    let far = stations.iter().copied().fold(0.0, f64::max);
    // slowest mode near 1e-12, fastest no more than ~1e-7 below it
    let spread = rates[rates.len() - 1] - rates[0];
    let auto = if spread > 0.0 { (28.0 / rates[0]).min(16.0 / spread) } else { 28.0 / rates[0] };
    let x_tail = cfg.x_tail.unwrap_or_else(|| auto.max(far + 3.0));
    let x_min = cfg.x_min.unwrap_or_else(|| (-(40.0 / eps).clamp(69.0, 600.0)).exp());
    if !(x_min > 0.0 && x_min < x_tail) {
        return Err(Error::Parameter(format!("x_min = {x_min} must lie in (0, x_tail = {x_tail})")));
    }

    let mut inner: Vec<f64> = stations.to_vec();
    if let Some(bad) = inner.iter().find(|&&s| !(s > x_min && s < x_tail)) {
        return Err(Error::Parameter(format!(
            "station {bad} outside the integration range ({x_min}, {x_tail})"
        )));
    }
    inner.sort_by(|a, b| b.total_cmp(a));
    inner.dedup();
    inner.push(x_min);

    let shooter = Shooter { sys, rates: rates.clone(), modes, x_tail, stations: inner, cfg: &cfg.integrator };

    let mut guess = vec![0.0; gamma.len()];
    if n == 3 {
        guess[0] = -super::tail_amplitude_s1(gamma, 3)? / std::f64::consts::PI;
    }
    let mut found = newton(&shooter, gamma, guess, cfg)?;
    if found.is_none() {
        log::debug!("direct shooting failed for gamma = {gamma:?}; using continuation");
        let mut amps = vec![0.0; gamma.len()];
        let steps = 8;
        for j in 1..=steps {
            let t = j as f64 / steps as f64;
            let target: Vec<f64> = gamma.iter().map(|g| t * g).collect();
            match newton(&shooter, &target, amps.clone(), cfg)? {
                Some((a, shot, it)) => {
                    amps = a.clone();
                    found = Some((a, shot, it));
                }
                None => {
                    return Err(Error::Shooting(format!(
                        "continuation failed at {t} of the way to gamma = {gamma:?}"
                    )))
                }
            }
        }
    }
    let (amps, shot, iterations) =
        found.ok_or_else(|| Error::Shooting(format!("no global solution found for gamma = {gamma:?}")))?;

    let (s1, s2) = if n == 3 {
        let pi = std::f64::consts::PI;
        (Some(-pi * amps[0]), Some(std::f64::consts::SQRT_2 * pi * amps[1]))
    } else {
        (None, None)
    };
    Ok(GlobalSolution {
        n,
        gamma: gamma.to_vec(),
        gamma_achieved: shot.gamma,
        rho: shot.rho,
        decay_rates: rates,
        amplitudes: amps,
        s1,
        s2,
        iterations,
        x_tail,
        x_min,
        trajectory: shot.trajectory,
    })
}

/// Least-squares fit of w_i(x)·x^{1/2}·e^{rate·x} ≈ amplitude + slope/x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub amplitude: f64,
    pub slope: f64,
    pub samples: usize,
    /// Largest |data − fit| relative to |amplitude|.
    pub max_rel_residual: f64,
}

pub fn fit_tail_amplitude(traj: &Trajectory, component: usize, rate: f64, x_lo: f64, x_hi: f64) -> Result<TailFit> {
    let data: Vec<(f64, f64)> = traj
        .points
        .iter()
        .filter(|p| p.x >= x_lo && p.x <= x_hi)
        .map(|p| {
            let w = p
                .w
                .get(component)
                .copied()
                .ok_or_else(|| Error::Parameter(format!("component {component} out of range")))?;
            Ok((1.0 / p.x, w * p.x.sqrt() * (rate * p.x).exp()))
        })
        .collect::<Result<_>>()?;
    if data.len() < 3 {
        return Err(Error::Parameter(format!(
            "only {} samples in [{x_lo}, {x_hi}]; at least 3 are needed",
            data.len()
        )));
    }
    let m = data.len() as f64;
    let (su, sy) = data.iter().fold((0.0, 0.0), |(a, b), (u, y)| (a + u, b + y));
    let (mu, my) = (su / m, sy / m);
    let (suu, suy) = data
        .iter()
        .fold((0.0, 0.0), |(a, b), (u, y)| (a + (u - mu) * (u - mu), b + (u - mu) * (y - my)));
    let slope = suy / suu;
    let amplitude = my - slope * mu;
    let max_rel_residual = data
        .iter()
        .map(|(u, y)| (y - amplitude - slope * u).abs())
        .fold(0.0, f64::max)
        / amplitude.abs();
    Ok(TailFit { amplitude, slope, samples: data.len(), max_rel_residual })
}
