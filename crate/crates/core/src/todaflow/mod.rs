//! The radial tt*-Toda equations as a non-autonomous Hamiltonian system on
//! (w, w̃), w̃_i = x (w_i)_x, and its numerical integration.

mod global;
mod integrate;

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::datamaps::{check_generic_reduced, reduced_len, AsymptoticData, GENERICITY_MARGIN};
use crate::error::{Error, Result};

pub use global::{fit_tail_amplitude, solve_global, GlobalConfig, GlobalSolution, TailFit};
pub use integrate::{integrate, integrate_through, IntegratorConfig, StopReason, Trajectory};

/// A point (x, w, w̃) of phase space in reduced coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub w: Vec<f64>,
    pub wt: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: f64, w: Vec<f64>, wt: Vec<f64>) -> Result<Self> {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::Parameter(format!("x = {x} must be positive")));
        }
        if w.len() != wt.len() {
            return Err(Error::Parameter(format!(
                "w has {} entries but wt has {}",
                w.len(),
                wt.len()
            )));
        }
        Ok(Self { x, w, wt })
    }
}

/// The Hamiltonian system for a fixed n.
///
/// Odd n uses the closure w_{−1} = −w_0, w_{K+1} = −w_K (K = ⌊(n−1)/2⌋).
/// Even n forces w_{n/2} = 0, which changes the last boundary term; it is
/// only available through [`TodaSystem::with_even_extension`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TodaSystem {
    n: usize,
}

impl TodaSystem {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("n must be a positive integer".into()));
        }
        if n % 2 == 0 {
            return Err(Error::Unsupported(format!(
                "n = {n} is even; the Hamiltonian is defined for odd n (use the even-n extension)"
            )));
        }
        Ok(Self { n })
    }

    /// Even n with w_{n/2} = 0 and boundary term −x e^{−2 w_K}.
    pub fn with_even_extension(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("n must be a positive integer".into()));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        reduced_len(self.n)
    }

    fn is_odd(&self) -> bool {
        self.n % 2 == 1
    }

    /// Coefficient c of the trivial-solution Hamiltonian H = −c x, c = (n+1)/2.
    pub fn background(&self) -> f64 {
        0.5 * (self.n + 1) as f64
    }

    /// w_{K+1} from the anti-symmetric closure.
    #[inline]
    fn upper_ghost(&self, w: &[f64]) -> f64 {
        if self.is_odd() {
            -w[w.len() - 1]
        } else {
            0.0
        }
    }

    fn check(&self, p: &PhasePoint) -> Result<()> {
        if p.w.len() != self.dim() || p.wt.len() != self.dim() {
            return Err(Error::Shape {
                n: self.n,
                expected: self.dim(),
                got: p.w.len().min(p.wt.len()),
            });
        }
        if !(p.x > 0.0) {
            return Err(Error::Parameter(format!("x = {} must be positive", p.x)));
        }
        Ok(())
    }

    /// Potential part V(w) with H = Σ w̃²/(2x) − x V(w).
    fn potential(&self, w: &[f64]) -> f64 {
        self.potential_scaled(0.0, w)
    }

    /// e^{ln_s} V(w), with the scale folded into each exponent so that
    /// x² V stays finite when x is tiny and |w| is large.
    pub(crate) fn potential_scaled(&self, ln_s: f64, w: &[f64]) -> f64 {
        let k = w.len() - 1;
        let interior: f64 = (1..=k).map(|i| (ln_s + 2.0 * (w[i] - w[i - 1])).exp()).sum();
        let boundary = if self.is_odd() {
            0.5 * ((ln_s - 4.0 * w[k]).exp() + (ln_s + 4.0 * w[0]).exp())
        } else {
            (ln_s - 2.0 * w[k]).exp() + 0.5 * (ln_s + 4.0 * w[0]).exp()
        };
        interior + boundary
    }

    /// x · dw̃/dx evaluated with ln_s = 2 ln x, see [`Self::potential_scaled`].
    pub(crate) fn momentum_rate_scaled(&self, ln_s: f64, w: &[f64], out: &mut [f64]) {
        let k = w.len() - 1;
        let lower = -w[0];
        let upper = self.upper_ghost(w);
        for i in 0..=k {
            let prev = if i == 0 { lower } else { w[i - 1] };
            let next = if i == k { upper } else { w[i + 1] };
            let (up, down) = (2.0 * (next - w[i]), 2.0 * (w[i] - prev));
            out[i] = -2.0 * (ln_s + down).exp() * (up - down).exp_m1();
        }
    }

    /// Matrix of the linearisation dw̃/dx ≈ x M w about w = 0.
    pub(crate) fn linearization(&self) -> Vec<Vec<f64>> {
        let l = self.dim();
        let mut m = vec![vec![0.0; l]; l];
        for i in 0..l {
            m[i][i] = 8.0;
            if i > 0 {
                m[i][i - 1] = -4.0;
            }
            if i + 1 < l {
                m[i][i + 1] = -4.0;
            }
        }
        m[0][0] += 4.0;
        if self.is_odd() {
            m[l - 1][l - 1] += 4.0;
        }
        m
    }

    pub fn hamiltonian_raw(&self, x: f64, w: &[f64], wt: &[f64]) -> f64 {
        let kinetic: f64 = wt.iter().map(|v| v * v).sum();
        kinetic / (2.0 * x) - x * self.potential(w)
    }

    pub fn hamiltonian(&self, p: &PhasePoint) -> Result<f64> {
        self.check(p)?;
        Ok(self.hamiltonian_raw(p.x, &p.w, &p.wt))
    }

    /// ∂H/∂x at fixed (w, w̃).
    pub fn hamiltonian_dx_partial(&self, x: f64, w: &[f64], wt: &[f64]) -> f64 {
        let kinetic: f64 = wt.iter().map(|v| v * v).sum();
        -kinetic / (2.0 * x * x) - self.potential(w)
    }

    /// dw̃_i/dx = −2x (e^{2(w_{i+1}−w_i)} − e^{2(w_i−w_{i−1})}).
    pub(crate) fn momentum_rate(&self, x: f64, w: &[f64], out: &mut [f64]) {
        let k = w.len() - 1;
        let lower = -w[0];
        let upper = self.upper_ghost(w);
        for i in 0..=k {
            let prev = if i == 0 { lower } else { w[i - 1] };
            let next = if i == k { upper } else { w[i + 1] };
            out[i] = -2.0 * x * ((2.0 * (next - w[i])).exp_m1() - (2.0 * (w[i] - prev)).exp_m1());
        }
    }

    /// V(w) − c, accurate when w is tiny.
    pub(crate) fn potential_excess(&self, w: &[f64]) -> f64 {
        let k = w.len() - 1;
        let interior: f64 = (1..=k).map(|i| (2.0 * (w[i] - w[i - 1])).exp_m1()).sum();
        let boundary = if self.is_odd() {
            0.5 * ((-4.0 * w[k]).exp_m1() + (4.0 * w[0]).exp_m1())
        } else {
            (-2.0 * w[k]).exp_m1() + 0.5 * (4.0 * w[0]).exp_m1()
        };
        interior + boundary
    }

    /// (dw/dx, dw̃/dx).
    pub fn vector_field(&self, p: &PhasePoint) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check(p)?;
        let dw = p.wt.iter().map(|v| v / p.x).collect();
        let mut dwt = vec![0.0; self.dim()];
        self.momentum_rate(p.x, &p.w, &mut dwt);
        Ok((dw, dwt))
    }

    /// Derivatives with respect to X = ln x: (w)_X = w̃, (w̃)_X = x (w̃)_x.
    pub fn vector_field_logx(&self, p: &PhasePoint) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check(p)?;
        let mut dwt = vec![0.0; self.dim()];
        self.momentum_rate(p.x, &p.w, &mut dwt);
        dwt.iter_mut().for_each(|v| *v *= p.x);
        Ok((p.wt.clone(), dwt))
    }
}

pub fn hamiltonian(p: &PhasePoint, n: usize) -> Result<f64> {
    TodaSystem::new(n)?.hamiltonian(p)
}

pub fn vector_field(p: &PhasePoint, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    TodaSystem::new(n)?.vector_field(p)
}

pub fn vector_field_logx(p: &PhasePoint, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    TodaSystem::new(n)?.vector_field_logx(p)
}

/// Leading-order small-x initial condition w_i = (γ_i/2) ln x0 + ρ_i/2, w̃_i = γ_i/2.
pub fn init_from_asymptotics(a: &AsymptoticData, x0: f64) -> Result<PhasePoint> {
    if !(x0 > 0.0 && x0 <= 0.1) {
        return Err(Error::Parameter(format!("x0 = {x0} outside (0, 0.1]")));
    }
    let a = AsymptoticData::new(a.n, a.gamma.clone(), a.rho.clone())?;
    check_generic_reduced(a.n, &a.gamma, GENERICITY_MARGIN)?;
    let ln_x = x0.ln();
    let w = a
        .gamma
        .iter()
        .zip(&a.rho)
        .map(|(g, r)| 0.5 * g * ln_x + 0.5 * r)
        .collect();
    let wt = a.gamma.iter().map(|g| 0.5 * g).collect();
    PhasePoint::new(x0, w, wt)
}

/// s₁^ℝ = −2cos(π(γ₀+1)/4) − 2cos(π(γ₁+3)/4), the amplitude of the
/// e^{−2√2 x} tail for n = 3.
pub fn tail_amplitude_s1(gamma: &[f64], n: usize) -> Result<f64> {
    if n != 3 {
        return Err(Error::Unsupported(format!("s1 is only available for n = 3, got n = {n}")));
    }
    if gamma.len() != 2 {
        return Err(Error::Shape { n, expected: 2, got: gamma.len() });
    }
    let q = PI / 4.0;
    Ok(-2.0 * (q * (gamma[0] + 1.0)).cos() - 2.0 * (q * (gamma[1] + 3.0)).cos())
}

/// Leading large-x profile of w_0, w_1: −s₁ 2^{−7/4} (πx)^{−1/2} e^{−2√2 x}.
pub fn tail_profile(s1: f64, x: f64) -> f64 {
    -s1 * 2f64.powf(-1.75) * (PI * x).powf(-0.5) * (-2.0 * SQRT_2 * x).exp()
}

/// |H(w, λw̃; λx) − λ H(w, w̃; x)|.
pub fn check_quasihomogeneity(p: &PhasePoint, lambda: f64, n: usize) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Parameter(format!("lambda = {lambda} must be positive")));
    }
    let sys = TodaSystem::new(n)?;
    let h = sys.hamiltonian(p)?;
    let scaled_wt: Vec<f64> = p.wt.iter().map(|v| lambda * v).collect();
    let hs = sys.hamiltonian_raw(lambda * p.x, &p.w, &scaled_wt);
    Ok((hs - lambda * h).abs())
}

/// Largest deviation of the vector field from (∂H/∂w̃, −∂H/∂w) computed by
/// the five-point central difference with step h (1e-3 is a good choice),
/// each component scaled by max(1, |component|).
pub fn check_gradient_consistency(p: &PhasePoint, n: usize, h: f64) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Parameter(format!("step h = {h} must be positive")));
    }
    let sys = TodaSystem::new(n)?;
    let (dw, dwt) = sys.vector_field(p)?;
    let l = p.w.len();
    // derivative of H along coordinate i of the stacked vector (w, w̃)
    let partial = |i: usize| {
        let at = |t: f64| {
            let mut z: Vec<f64> = p.w.iter().chain(&p.wt).copied().collect();
            z[i] += t;
            sys.hamiltonian_raw(p.x, &z[..l], &z[l..])
        };
        (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h)
    };
    let mut worst: f64 = 0.0;
    for i in 0..l {
        let scaled = |field: f64, fd: f64| (field - fd).abs() / field.abs().max(1.0);
        worst = worst.max(scaled(dwt[i], -partial(i))).max(scaled(dw[i], partial(l + i)));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, w: &[f64], wt: &[f64]) -> PhasePoint {
        PhasePoint::new(x, w.to_vec(), wt.to_vec()).unwrap()
    }

    #[test]
    fn hamiltonian_examples() {
        assert_eq!(hamiltonian(&pt(1.0, &[0.0, 0.0], &[0.0, 0.0]), 3).unwrap(), -2.0);
        assert!((hamiltonian(&pt(2.0, &[0.0], &[1.0]), 1).unwrap() + 1.75).abs() < 1e-15);
        let h = hamiltonian(&pt(1.0, &[0.1, -0.2], &[0.3, 0.4]), 3).unwrap();
        let want = 0.125 - (-0.6f64).exp() - 0.5 * (0.8f64.exp() + 0.4f64.exp());
        assert!((h - want).abs() < 1e-15);
        // -0.5488116360940264 - 0.5*(2.225540928492468 + 1.4918246976412703) + 0.125
        assert!((h - (-2.282494449160896)).abs() < 1e-14, "{h}");
    }

    #[test]
    fn even_n_is_gated() {
        let p = pt(1.0, &[0.0], &[0.0]);
        assert!(matches!(hamiltonian(&p, 2), Err(Error::Unsupported(_))));
        let sys = TodaSystem::with_even_extension(2).unwrap();
        assert_eq!(sys.hamiltonian(&p).unwrap(), -1.5);
    }

    #[test]
    fn vector_field_examples() {
        let (dw, dwt) = vector_field(&pt(1.0, &[0.0, 0.0], &[0.0, 0.0]), 3).unwrap();
        assert_eq!(dw, vec![0.0, 0.0]);
        assert_eq!(dwt, vec![0.0, 0.0]);
        let (_, dwt) = vector_field(&pt(1.0, &[0.1], &[0.0]), 1).unwrap();
        assert!((dwt[0] - 4.0 * 0.4f64.sinh()).abs() < 1e-15);
        assert!((dwt[0] - 1.643_009_303_211_262).abs() < 1e-14);
    }

    #[test]
    fn even_extension_matches_toda_equations() {
        // n = 4: w = (w0, w1, 0, −w1, −w0)
        let sys = TodaSystem::with_even_extension(4).unwrap();
        let (w0, w1, x) = (0.2, -0.1, 1.3);
        let p = pt(x, &[w0, w1], &[0.0, 0.0]);
        let (_, dwt) = sys.vector_field(&p).unwrap();
        let full = [w0, w1, 0.0, -w1, -w0];
        for i in 0..2 {
            let prev = full[(i + 4) % 5];
            let next = full[i + 1];
            let want = -2.0 * x * ((2.0 * (next - full[i])).exp() - (2.0 * (full[i] - prev)).exp());
            assert!((dwt[i] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn logx_field_examples() {
        let p = pt(2.5, &[0.1, -0.3], &[0.2, 0.7]);
        let (dw, dwt) = vector_field_logx(&p, 3).unwrap();
        let (_, dwt_x) = vector_field(&p, 3).unwrap();
        assert_eq!(dw, p.wt);
        for (a, b) in dwt.iter().zip(&dwt_x) {
            assert!((a - 2.5 * b).abs() < 1e-12);
        }
        let (dw, dwt) = vector_field_logx(&pt(1.0, &[0.0, 0.0], &[0.0, 0.0]), 3).unwrap();
        assert!(dw.iter().chain(&dwt).all(|v| *v == 0.0));
    }

    #[test]
    fn init_examples() {
        let a = AsymptoticData::new(3, vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        let p = init_from_asymptotics(&a, 0.05).unwrap();
        assert!(p.w.iter().chain(&p.wt).all(|v| *v == 0.0));
        let a = AsymptoticData::new(3, vec![0.3, 0.1], vec![1.0, -1.0]).unwrap();
        let p = init_from_asymptotics(&a, 0.01).unwrap();
        let l = 0.01f64.ln();
        assert!((p.w[0] - (0.15 * l + 0.5)).abs() < 1e-15);
        assert!((p.w[1] - (0.05 * l - 0.5)).abs() < 1e-15);
        assert_eq!(p.wt, vec![0.15, 0.05]);
        assert!(init_from_asymptotics(&a, 0.2).is_err());
        assert!(init_from_asymptotics(&a, 0.0).is_err());
    }

    #[test]
    fn s1_examples() {
        assert!(tail_amplitude_s1(&[0.0, 0.0], 3).unwrap().abs() < 1e-15);
        let s = tail_amplitude_s1(&[0.3, 0.1], 3).unwrap();
        let want = -2.0 * (0.325 * PI).cos() - 2.0 * (0.775 * PI).cos();
        assert!((s - want).abs() < 1e-15);
        assert!((s - 0.475_814_801_768_164).abs() < 1e-12, "{s}");
        assert!(tail_amplitude_s1(&[0.3], 1).is_err());
    }

    #[test]
    fn quasihomogeneity_examples() {
        let p = pt(0.7, &[0.2, -0.4], &[0.3, -0.1]);
        assert_eq!(check_quasihomogeneity(&p, 1.0, 3).unwrap(), 0.0);
        for lambda in [2.5, 1e3] {
            let h = hamiltonian(&p, 3).unwrap();
            let r = check_quasihomogeneity(&p, lambda, 3).unwrap();
            assert!(r <= 1e-12 * (1.0 + (lambda * h).abs()));
        }
    }

    #[test]
    fn gradient_consistency_example() {
        let p = pt(1.3, &[0.2, -0.1], &[0.4, -0.3]);
        let r = check_gradient_consistency(&p, 3, 1e-3).unwrap();
        assert!(r < 1e-9, "{r}");
        assert!(check_gradient_consistency(&p, 3, 0.0).is_err());
    }
}
