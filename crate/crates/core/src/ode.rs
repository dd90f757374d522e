//! Dormand–Prince 5(4) with a PI step-size controller.
//!
//! The stepper integrates in either direction and lands exactly on each
//! requested target, so callers can collect values at prescribed abscissae
//! by advancing segment by segment.

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    /// Largest scaled error norm among accepted steps (≤ 1).
    pub max_local_error: f64,
}

impl StepStats {
    pub fn merge(&mut self, other: &StepStats) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.rhs_evals += other.rhs_evals;
        self.max_local_error = self.max_local_error.max(other.max_local_error);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Halt {
    StepUnderflow,
    MaxSteps,
    /// The observer asked to stop after an accepted step.
    Observer,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const EXPO: f64 = 0.2 - BETA * 0.75;

pub struct Dopri5<'a, S: OdeSystem> {
    sys: &'a S,
    t: f64,
    y: Vec<f64>,
    /// FSAL: derivative at (t, y).
    f: Vec<f64>,
    /// Signed step proposal; zero until the first step is chosen.
    h: f64,
    err_old: f64,
    rtol: f64,
    atol: f64,
    max_step: f64,
    max_steps: usize,
    /// Leading components that enter the error norm.
    controlled: usize,
    stats: StepStats,
    k: [Vec<f64>; 6],
    y_new: Vec<f64>,
    y_stage: Vec<f64>,
}

impl<'a, S: OdeSystem> Dopri5<'a, S> {
    pub fn new(sys: &'a S, t0: f64, y0: &[f64], rtol: f64, atol: f64) -> Self {
        let n = sys.dim();
        assert_eq!(n, y0.len(), "state dimension mismatch");
        let mut f = vec![0.0; n];
        sys.rhs(t0, y0, &mut f);
        Self {
            sys,
            t: t0,
            y: y0.to_vec(),
            f,
            h: 0.0,
            err_old: 1e-4,
            rtol,
            atol,
            max_step: f64::INFINITY,
            max_steps: 200_000,
            controlled: n,
            stats: StepStats {
                rhs_evals: 1,
                ..Default::default()
            },
            k: std::array::from_fn(|_| vec![0.0; n]),
            y_new: vec![0.0; n],
            y_stage: vec![0.0; n],
        }
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step.abs();
        self
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    /// Restricts step-size control to the first `m` components; the rest
    /// (typically quadratures that do not feed back) ride along.
    pub fn with_controlled_components(mut self, m: usize) -> Self {
        self.controlled = m.clamp(1, self.y.len());
        self
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn stats(&self) -> &StepStats {
        &self.stats
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.atol + self.rtol * a.abs().max(b.abs())
    }

    // Hairer–Wanner starting step heuristic.
    fn initial_step(&mut self, dir: f64) -> f64 {
        let n = self.controlled;
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..n {
            let sc = self.scale(self.y[i], self.y[i]);
            d0 += (self.y[i] / sc).powi(2);
            d1 += (self.f[i] / sc).powi(2);
        }
        d0 = (d0 / n as f64).sqrt();
        d1 = (d1 / n as f64).sqrt();
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(self.max_step);
        for i in 0..n {
            self.y_stage[i] = self.y[i] + dir * h0 * self.f[i];
        }
        for i in n..self.y.len() {
            self.y_stage[i] = self.y[i] + dir * h0 * self.f[i];
        }
        let k = &mut self.k[0];
        self.sys.rhs(self.t + dir * h0, &self.y_stage, k);
        self.stats.rhs_evals += 1;
        let mut d2 = 0.0;
        for i in 0..n {
            let sc = self.scale(self.y[i], self.y[i]);
            d2 += ((self.k[0][i] - self.f[i]) / sc).powi(2);
        }
        d2 = (d2 / n as f64).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(self.max_step)
    }

    /// One trial step of size `h`. Leaves the candidate in `y_new`, its
    /// derivative in `k[5]`, and returns the scaled RMS error norm.
    fn trial(&mut self, h: f64) -> f64 {
        let n = self.y.len();
        let t = self.t;
        let (y, f) = (&self.y, &self.f);
        let [k2, k3, k4, k5, k6, k7] = &mut self.k;
        let ys = &mut self.y_stage;

        for i in 0..n {
            ys[i] = y[i] + h * A21 * f[i];
        }
        self.sys.rhs(t + C2 * h, ys, k2);
        for i in 0..n {
            ys[i] = y[i] + h * (A31 * f[i] + A32 * k2[i]);
        }
        self.sys.rhs(t + C3 * h, ys, k3);
        for i in 0..n {
            ys[i] = y[i] + h * (A41 * f[i] + A42 * k2[i] + A43 * k3[i]);
        }
        self.sys.rhs(t + C4 * h, ys, k4);
        for i in 0..n {
            ys[i] = y[i] + h * (A51 * f[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        self.sys.rhs(t + C5 * h, ys, k5);
        for i in 0..n {
            ys[i] = y[i] + h * (A61 * f[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        self.sys.rhs(t + h, ys, k6);
        for i in 0..n {
            self.y_new[i] =
                y[i] + h * (A71 * f[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        self.sys.rhs(t + h, &self.y_new, k7);
        self.stats.rhs_evals += 6;

        let mut err = 0.0;
        let n = self.controlled;
        for i in 0..n {
            let e = h * (E1 * f[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = self.atol + self.rtol * y[i].abs().max(self.y_new[i].abs());
            err += (e / sc).powi(2);
        }
        (err / n as f64).sqrt()
    }

    /// Advances to exactly `t_end`, calling `observer(t, y)` after every
    /// accepted step.
    pub fn advance_to<O>(&mut self, t_end: f64, mut observer: O) -> Result<(), Halt>
    where
        O: FnMut(f64, &[f64]) -> ControlFlow<()>,
    {
        let span = t_end - self.t;
        if span == 0.0 {
            return Ok(());
        }
        let dir = span.signum();
        if self.h == 0.0 || self.h.signum() != dir {
            self.h = dir * self.initial_step(dir);
        }
        let mut steps = 0usize;
        let mut last_rejected = false;
        loop {
            let remaining = t_end - self.t;
            if remaining * dir <= 0.0 {
                return Ok(());
            }
            if steps >= self.max_steps {
                return Err(Halt::MaxSteps);
            }
            let mut h = self.h.abs().min(self.max_step);
            let landing = h >= remaining.abs() * (1.0 - 1e-12);
            if landing {
                h = remaining.abs();
            }
            let h = dir * h;
            if h.abs() < 1e-14 * self.t.abs().max(1e-300) {
                return Err(Halt::StepUnderflow);
            }
            let err = self.trial(h);
            steps += 1;
            if !err.is_finite() {
                self.stats.rejected += 1;
                self.h = h * FAC_MIN;
                last_rejected = true;
                continue;
            }
            let fac11 = err.powf(EXPO);
            if err <= 1.0 {
                let mut fac = fac11 / self.err_old.powf(BETA);
                fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let mut h_next = h / fac;
                if last_rejected {
                    h_next = if dir > 0.0 { h_next.min(h) } else { h_next.max(h) };
                }
                self.err_old = err.max(1e-4);
                self.t = if landing { t_end } else { self.t + h };
                std::mem::swap(&mut self.y, &mut self.y_new);
                std::mem::swap(&mut self.f, &mut self.k[5]);
                self.stats.accepted += 1;
                self.stats.max_local_error = self.stats.max_local_error.max(err);
                // keep the proposal of the unclipped step when landing on a target
                if !landing || h_next.abs() > self.h.abs() {
                    self.h = h_next;
                }
                last_rejected = false;
                if observer(self.t, &self.y).is_break() {
                    return Err(Halt::Observer);
                }
            } else {
                self.stats.rejected += 1;
                self.h = h / (fac11 / SAFETY).min(1.0 / FAC_MIN);
                last_rejected = true;
            }
        }
    }
}
