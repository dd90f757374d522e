//! Closed-form maps between asymptotic data (γ, ρ) and monodromy data
//! (m, log e^ℝ), the global-solution constraint on ρ, and the generating
//! function F of the chart change.
//!
//! Data are stored in reduced coordinates (indices 0..=⌊(n−1)/2⌋). The full
//! anti-symmetric list of length n+1 is built on demand by [`expand_full`].

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specialfn::{ln_gamma_unchecked, psi_m2_unchecked};

/// Default strict margin δ: gaps must lie in (−2+δ, 2−δ).
pub const GENERICITY_MARGIN: f64 = 1e-9;

/// Default central-difference step for the gradient and Jacobian checks.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// Number of independent entries ⌊(n−1)/2⌋ + 1.
pub fn reduced_len(n: usize) -> usize {
    (n - 1) / 2 + 1
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Parameter("n must be a positive integer".into()));
    }
    Ok(())
}

fn check_len(n: usize, got: usize) -> Result<()> {
    let expected = reduced_len(n);
    if got != expected {
        return Err(Error::Shape { n, expected, got });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticData {
    pub n: usize,
    pub gamma: Vec<f64>,
    pub rho: Vec<f64>,
}

impl AsymptoticData {
    pub fn new(n: usize, gamma: Vec<f64>, rho: Vec<f64>) -> Result<Self> {
        check_n(n)?;
        check_len(n, gamma.len())?;
        check_len(n, rho.len())?;
        Ok(Self { n, gamma, rho })
    }

    /// Data of the global solution with the given γ.
    pub fn global(n: usize, gamma: Vec<f64>) -> Result<Self> {
        let rho = global_rho(n, &gamma)?;
        Self::new(n, gamma, rho)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonodromyData {
    pub n: usize,
    pub m: Vec<f64>,
    pub log_e: Vec<f64>,
}

impl MonodromyData {
    pub fn new(n: usize, m: Vec<f64>, log_e: Vec<f64>) -> Result<Self> {
        check_n(n)?;
        check_len(n, m.len())?;
        check_len(n, log_e.len())?;
        Ok(Self { n, m, log_e })
    }
}

/// Full anti-symmetric extension (v_0, …, v_n) of a reduced list.
///
/// Odd n gives (v_0,…,v_k,−v_k,…,−v_0); even n inserts a 0 in the middle.
pub fn expand_full(n: usize, reduced: &[f64]) -> Result<Vec<f64>> {
    check_n(n)?;
    check_len(n, reduced.len())?;
    let mut full = Vec::with_capacity(n + 1);
    full.extend_from_slice(reduced);
    if n % 2 == 0 {
        full.push(0.0);
    }
    full.extend(reduced.iter().rev().map(|v| -v));
    debug_assert_eq!(full.len(), n + 1);
    Ok(full)
}

/// Checks that every consecutive gap of the periodic extension lies in
/// (−2+margin, 2−margin).
pub fn check_generic(full: &[f64], margin: f64) -> Result<()> {
    let len = full.len();
    let bound = 2.0 - margin;
    for i in 0..len {
        let gap = full[(i + 1) % len] - full[i];
        if !(gap.abs() < bound) {
            return Err(Error::Genericity(format!(
                "gap gamma_{} - gamma_{} = {gap} outside (-{bound}, {bound})",
                (i + 1) % len,
                i
            )));
        }
    }
    Ok(())
}

/// Checks genericity of a reduced γ list with the given margin.
pub fn check_generic_reduced(n: usize, gamma: &[f64], margin: f64) -> Result<()> {
    check_generic(&expand_full(n, gamma)?, margin)
}

/// ln X_k(γ_0, …, γ_n) = Σ_{j=1}^n ln Γ((γ_k − γ_{k+j} + 2j) / (2(n+1))).
pub fn ln_x_k(k: usize, gamma_full: &[f64], n: usize) -> Result<f64> {
    if gamma_full.len() != n + 1 {
        return Err(Error::Shape {
            n,
            expected: n + 1,
            got: gamma_full.len(),
        });
    }
    if k > n {
        return Err(Error::Parameter(format!("index k = {k} exceeds n = {n}")));
    }
    let np1 = n + 1;
    let denom = 2.0 * np1 as f64;
    let mut acc = 0.0;
    for j in 1..=n {
        let arg = (gamma_full[k] - gamma_full[(k + j) % np1] + 2.0 * j as f64) / denom;
        if !(arg > 0.0) {
            return Err(Error::Genericity(format!(
                "Gamma argument {arg} <= 0 in X_{k} at j = {j}"
            )));
        }
        acc += ln_gamma_unchecked(arg);
    }
    Ok(acc)
}

/// X_k as the exponential of [`ln_x_k`].
pub fn x_k(k: usize, gamma_full: &[f64], n: usize) -> Result<f64> {
    ln_x_k(k, gamma_full, n).map(f64::exp)
}

/// ln X_{n−i} − ln X_i for every reduced index i.
fn log_x_ratio(n: usize, gamma_full: &[f64]) -> Result<Vec<f64>> {
    (0..reduced_len(n))
        .map(|i| Ok(ln_x_k(n - i, gamma_full, n)? - ln_x_k(i, gamma_full, n)?))
        .collect()
}

pub fn asymptotic_to_monodromy(a: &AsymptoticData) -> Result<MonodromyData> {
    check_len(a.n, a.gamma.len())?;
    check_len(a.n, a.rho.len())?;
    let full = expand_full(a.n, &a.gamma)?;
    check_generic(&full, GENERICITY_MARGIN)?;
    let ratio = log_x_ratio(a.n, &full)?;
    let m = a.gamma.iter().map(|g| -0.5 * g).collect();
    let log_e = a
        .gamma
        .iter()
        .zip(&a.rho)
        .zip(&ratio)
        .map(|((g, r), q)| r + 2.0 * g * LN_2 + q)
        .collect();
    MonodromyData::new(a.n, m, log_e)
}

pub fn monodromy_to_asymptotic(md: &MonodromyData) -> Result<AsymptoticData> {
    check_len(md.n, md.m.len())?;
    check_len(md.n, md.log_e.len())?;
    let gamma: Vec<f64> = md.m.iter().map(|m| -2.0 * m).collect();
    let full = expand_full(md.n, &gamma)?;
    check_generic(&full, GENERICITY_MARGIN)?;
    let ratio = log_x_ratio(md.n, &full)?;
    let rho = gamma
        .iter()
        .zip(&md.log_e)
        .zip(&ratio)
        .map(|((g, le), q)| le - 2.0 * g * LN_2 - q)
        .collect();
    AsymptoticData::new(md.n, gamma, rho)
}

/// ρ of the solution that is smooth on 0 < x < ∞: the unique ρ with log e^ℝ = 0.
pub fn global_rho(n: usize, gamma: &[f64]) -> Result<Vec<f64>> {
    check_n(n)?;
    let full = expand_full(n, gamma)?;
    check_generic(&full, GENERICITY_MARGIN)?;
    let ratio = log_x_ratio(n, &full)?;
    Ok(gamma
        .iter()
        .zip(&ratio)
        .map(|(g, q)| -2.0 * LN_2 * g - q)
        .collect())
}

/// ln X_{n−i}(−γ) − ln X_i(−γ) for every reduced index i.
fn reflected_log_x_ratio(n: usize, gamma_full: &[f64]) -> Result<Vec<f64>> {
    let neg: Vec<f64> = gamma_full.iter().map(|g| -g).collect();
    log_x_ratio(n, &neg)
}

/// ρ read off from global solutions of the flow equations:
/// ρ_i = −ln(n+1) γ_i + ln X_i(−γ) − ln X_{n−i}(−γ).
///
/// Differs from [`global_rho`] by the sign of γ inside X and, for n ≠ 3,
/// by the coefficient of γ_i. Agrees with shooting for n = 1, 3, 5.
pub fn ode_global_rho(n: usize, gamma: &[f64]) -> Result<Vec<f64>> {
    check_n(n)?;
    let full = expand_full(n, gamma)?;
    check_generic(&full, GENERICITY_MARGIN)?;
    let ratio = reflected_log_x_ratio(n, &full)?;
    let c = ((n + 1) as f64).ln();
    Ok(gamma.iter().zip(&ratio).map(|(g, q)| -c * g - q).collect())
}

/// log e_i = ρ_i + 2 ln 2 γ_i + ln X_{n−i}(−γ) − ln X_i(−γ): the variant of
/// the forward map whose m-gradient is reproduced by [`gen_fun_f`].
pub fn reflected_log_e(a: &AsymptoticData) -> Result<Vec<f64>> {
    check_len(a.n, a.gamma.len())?;
    check_len(a.n, a.rho.len())?;
    let full = expand_full(a.n, &a.gamma)?;
    check_generic(&full, GENERICITY_MARGIN)?;
    let ratio = reflected_log_x_ratio(a.n, &full)?;
    Ok(a.gamma
        .iter()
        .zip(&a.rho)
        .zip(&ratio)
        .map(|((g, r), q)| r + 2.0 * g * LN_2 + q)
        .collect())
}

/// The ψ^(−2) double sum (n+1)/2 Σ_k Σ_j ψ^(−2)((m_{k−j} − m_k + j)/(n+1)).
fn psi_double_sum(n: usize, m_full: &[f64]) -> Result<f64> {
    let np1 = n + 1;
    let mut acc = 0.0;
    for k in 0..np1 {
        for j in 1..=n {
            let arg = (m_full[(k + np1 - j) % np1] - m_full[k] + j as f64) / np1 as f64;
            if !(arg > 0.0 && arg <= 3.0) {
                return Err(Error::Genericity(format!(
                    "psi^(-2) argument {arg} outside (0, 3] at k = {k}, j = {j}"
                )));
            }
            acc += psi_m2_unchecked(arg);
        }
    }
    Ok(0.5 * np1 as f64 * acc)
}

/// Generating function F(ρ, m) of the chart change (m, ρ) ↦ (m, log e^ℝ).
pub fn gen_fun_f(n: usize, rho: &[f64], m: &[f64]) -> Result<f64> {
    check_n(n)?;
    check_len(n, rho.len())?;
    let m_full = expand_full(n, m)?;
    let linear: f64 = -rho.iter().zip(m).map(|(r, mi)| r * mi).sum::<f64>();
    let quadratic = 2.0 * LN_2 * m.iter().map(|v| v * v).sum::<f64>();
    Ok(linear + quadratic + psi_double_sum(n, &m_full)?)
}

/// ∂F/∂ρ_i, which is −m_i exactly.
pub fn gen_fun_f_grad_rho(m: &[f64]) -> Vec<f64> {
    m.iter().map(|v| -v).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    /// Central-difference ∂F/∂m_i.
    pub fd_gradient: Vec<f64>,
    /// −log e_i^ℝ from the forward data map.
    pub expected: Vec<f64>,
    pub max_residual: f64,
}

fn check_step(n: usize, gamma: &[f64], h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Parameter(format!("step h = {h} must be positive")));
    }
    // a shift of m_i by h moves γ_i and γ_{n−i} by 2h, so a gap by up to 4h
    check_generic_reduced(n, gamma, (4.0 * h).max(GENERICITY_MARGIN)).map_err(|e| match e {
        Error::Genericity(msg) => Error::Parameter(format!("step h = {h} too large for margin: {msg}")),
        other => other,
    })
}

/// Checks log e_i^ℝ = −∂F/∂m_i at (ρ, m = −γ/2) by central differences.
pub fn verify_generating_function(n: usize, gamma: &[f64], rho: &[f64], h: f64) -> Result<GradientCheck> {
    let data = AsymptoticData::new(n, gamma.to_vec(), rho.to_vec())?;
    check_step(n, gamma, h)?;
    let md = asymptotic_to_monodromy(&data)?;
    gradient_check(&data, &md.log_e, h)
}

/// As [`verify_generating_function`], against [`reflected_log_e`].
pub fn verify_generating_function_reflected(
    n: usize,
    gamma: &[f64],
    rho: &[f64],
    h: f64,
) -> Result<GradientCheck> {
    let data = AsymptoticData::new(n, gamma.to_vec(), rho.to_vec())?;
    check_step(n, gamma, h)?;
    let log_e = reflected_log_e(&data)?;
    gradient_check(&data, &log_e, h)
}

fn gradient_check(data: &AsymptoticData, log_e: &[f64], h: f64) -> Result<GradientCheck> {
    let m: Vec<f64> = data.gamma.iter().map(|g| -0.5 * g).collect();
    let mut fd_gradient = Vec::with_capacity(m.len());
    let mut shifted = m.clone();
    for i in 0..m.len() {
        shifted[i] = m[i] + h;
        let fp = gen_fun_f(data.n, &data.rho, &shifted)?;
        shifted[i] = m[i] - h;
        let fm = gen_fun_f(data.n, &data.rho, &shifted)?;
        shifted[i] = m[i];
        fd_gradient.push((fp - fm) / (2.0 * h));
    }
    let expected: Vec<f64> = log_e.iter().map(|v| -v).collect();
    let max_residual = fd_gradient
        .iter()
        .zip(&expected)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(GradientCheck {
        fd_gradient,
        expected,
        max_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymplecticCheck {
    /// A_ij = ∂/∂γ_j [ln X_{n−i} − ln X_i], row-major.
    pub jacobian: Vec<Vec<f64>>,
    pub max_asymmetry: f64,
}

/// Symmetry of the Jacobian of γ ↦ (ln X_{n−i} − ln X_i)_i, which is
/// equivalent to −½ Σ dγ_i ∧ dρ_i = Σ dm_i ∧ d log e_i^ℝ.
pub fn verify_symplectic(n: usize, gamma: &[f64], h: f64) -> Result<SymplecticCheck> {
    check_n(n)?;
    check_len(n, gamma.len())?;
    check_step(n, gamma, h / 2.0)?;
    let l = gamma.len();
    let mut jacobian = vec![vec![0.0; l]; l];
    let mut shifted = gamma.to_vec();
    for j in 0..l {
        shifted[j] = gamma[j] + h;
        let plus = log_x_ratio(n, &expand_full(n, &shifted)?)?;
        shifted[j] = gamma[j] - h;
        let minus = log_x_ratio(n, &expand_full(n, &shifted)?)?;
        shifted[j] = gamma[j];
        for i in 0..l {
            jacobian[i][j] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    let mut max_asymmetry: f64 = 0.0;
    for i in 0..l {
        for j in 0..i {
            max_asymmetry = max_asymmetry.max((jacobian[i][j] - jacobian[j][i]).abs());
        }
    }
    Ok(SymplecticCheck {
        jacobian,
        max_asymmetry,
    })
}

/// Draws a reduced γ whose periodic extension is generic with gaps bounded
/// by 1.9 in magnitude; `uniform` must return samples of U[0, 1).
pub fn sample_generic_gamma<F: FnMut() -> f64>(n: usize, mut uniform: F) -> Vec<f64> {
    (0..reduced_len(n)).map(|_| 0.95 * (2.0 * uniform() - 1.0)).collect()
}
