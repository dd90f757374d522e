use std::io::Write;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use super::{PhasePoint, TodaSystem};
use crate::error::{Error, Result};
use crate::ode::{Dopri5, Halt, OdeSystem, StepStats};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on |Δx| in the linear-x region.
    pub max_step: f64,
    /// A step is flagged as blow-up when
    /// max|w_i| > blowup_threshold + max|w̃_i| · max(0, −ln x);
    /// the second term admits the logarithmic growth of w as x → 0.
    pub blowup_threshold: f64,
    /// Below this radius the independent variable is ln x.
    pub log_switch: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-11,
            abs_tol: 1e-12,
            max_step: 0.25,
            blowup_threshold: 5.0,
            log_switch: 0.01,
            max_steps: 500_000,
        }
    }
}

impl IntegratorConfig {
    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Parameter("tolerances must be positive".into()));
        }
        if !(self.max_step > 0.0 && self.blowup_threshold > 0.0 && self.log_switch > 0.0) {
            return Err(Error::Parameter(
                "max_step, blowup_threshold and log_switch must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    BlowUp,
    StepUnderflow,
    MaxSteps,
}

/// Samples of an integrated solution, ordered by increasing x.
///
/// The cumulative arrays hold integrals from the first (smallest) x to each
/// sample: `reg_cumulative` of H + c·x with c = (n+1)/2, which removes the
/// trivial-solution background H = −c·x, and `action_cumulative` of the
/// Lagrangian Σ w̃_i (w_i)_x − H.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub n: usize,
    pub points: Vec<PhasePoint>,
    pub reg_cumulative: Vec<f64>,
    pub action_cumulative: Vec<f64>,
    /// ∫ (H + c·x) dx over the whole trajectory.
    pub reg_integral: f64,
    pub stop: StopReason,
    pub stats: StepStats,
    /// Radius at which integration stopped (equals an end of the x range).
    pub x_stop: f64,
}

impl Trajectory {
    pub fn is_complete(&self) -> bool {
        self.stop == StopReason::Completed
    }

    pub fn x_min(&self) -> f64 {
        self.points.first().map_or(f64::NAN, |p| p.x)
    }

    pub fn x_max(&self) -> f64 {
        self.points.last().map_or(f64::NAN, |p| p.x)
    }

    /// Index of a sample at exactly `x` (stations are landed on exactly).
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let i = self.points.partition_point(|p| p.x < x);
        (i < self.points.len() && self.points[i].x == x).then_some(i)
    }

    fn station(&self, x: f64) -> Result<usize> {
        self.index_of(x)
            .ok_or_else(|| Error::Parameter(format!("x = {x} is not a sample of the trajectory")))
    }

    fn background(&self) -> f64 {
        0.5 * (self.n + 1) as f64
    }

    /// ∫_{x1}^{x2} (H + c·x) dx between two samples.
    pub fn reg_between(&self, x1: f64, x2: f64) -> Result<f64> {
        Ok(self.reg_cumulative[self.station(x2)?] - self.reg_cumulative[self.station(x1)?])
    }

    /// ln τ(x1, x2) = ∫_{x1}^{x2} H dx between two samples.
    pub fn log_tau_between(&self, x1: f64, x2: f64) -> Result<f64> {
        Ok(self.reg_between(x1, x2)? - 0.5 * self.background() * (x2 * x2 - x1 * x1))
    }

    /// Classical action ∫_{x1}^{x2} (Σ w̃_i (w_i)_x − H) dx between two samples.
    pub fn action_between(&self, x1: f64, x2: f64) -> Result<f64> {
        Ok(self.action_cumulative[self.station(x2)?] - self.action_cumulative[self.station(x1)?])
    }

    /// The part between two samples, with cumulative integrals restarted at `x_lo`.
    pub fn restrict(&self, x_lo: f64, x_hi: f64) -> Result<Trajectory> {
        let (a, b) = (self.station(x_lo)?, self.station(x_hi)?);
        if a >= b {
            return Err(Error::Parameter(format!("need x_lo < x_hi, got {x_lo} and {x_hi}")));
        }
        let rebase = |v: &[f64]| v[a..=b].iter().map(|c| c - v[a]).collect::<Vec<_>>();
        let reg_cumulative = rebase(&self.reg_cumulative);
        Ok(Trajectory {
            n: self.n,
            points: self.points[a..=b].to_vec(),
            reg_integral: reg_cumulative[b - a],
            reg_cumulative,
            action_cumulative: rebase(&self.action_cumulative),
            stop: StopReason::Completed,
            stats: self.stats,
            x_stop: x_hi,
        })
    }

    pub fn hamiltonian_at(&self, index: usize) -> f64 {
        let p = &self.points[index];
        // the system was validated when the trajectory was built
        TodaSystem { n: self.n }.hamiltonian_raw(p.x, &p.w, &p.wt)
    }

    /// CSV with header `x,w0..wK,wt0..wtK,H,reg_integral`, 17 significant
    /// digits. A trailing comment line records an early stop.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let l = self.points.first().map_or(0, |p| p.w.len());
        let mut header = vec!["x".to_string()];
        header.extend((0..l).map(|i| format!("w{i}")));
        header.extend((0..l).map(|i| format!("wt{i}")));
        header.push("H".into());
        header.push("reg_integral".into());
        writeln!(out, "{}", header.join(","))?;
        for (i, p) in self.points.iter().enumerate() {
            let mut row = Vec::with_capacity(2 * l + 3);
            row.push(p.x);
            row.extend_from_slice(&p.w);
            row.extend_from_slice(&p.wt);
            row.push(self.hamiltonian_at(i));
            row.push(self.reg_cumulative[i]);
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        if !self.is_complete() {
            let reason = match self.stop {
                StopReason::BlowUp => "blow-up",
                StopReason::StepUnderflow => "step-underflow",
                StopReason::MaxSteps => "max-steps",
                StopReason::Completed => unreachable!(),
            };
            writeln!(out, "# stopped: {reason} at x = {:.16e}", self.x_stop)?;
        }
        Ok(())
    }
}

/// State (w, w̃, ∫(H + c x), ∫(Σw̃ w_x − H)) as a function of x or of ln x.
struct Augmented {
    sys: TodaSystem,
    log_x: bool,
}

impl OdeSystem for Augmented {
    fn dim(&self) -> usize {
        2 * self.sys.dim() + 2
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let l = self.sys.dim();
        let (w, rest) = y.split_at(l);
        let wt = &rest[..l];
        let x = if self.log_x { t.exp() } else { t };
        let kinetic: f64 = wt.iter().map(|v| v * v).sum();
        let c = self.sys.background();
        let (dw, rest) = dy.split_at_mut(l);
        let (dwt, dq) = rest.split_at_mut(l);
        if self.log_x {
            let pot = self.sys.potential_scaled(2.0 * t, w);
            self.sys.momentum_rate_scaled(2.0 * t, w, dwt);
            dw.copy_from_slice(wt);
            dq[0] = 0.5 * kinetic - pot + c * x * x;
            dq[1] = 0.5 * kinetic + pot;
        } else {
            let excess = self.sys.potential_excess(w);
            self.sys.momentum_rate(x, w, dwt);
            for (d, v) in dw.iter_mut().zip(wt) {
                *d = v / x;
            }
            dq[0] = 0.5 * kinetic / x - x * excess;
            dq[1] = 0.5 * kinetic / x + x * (excess + c);
        }
    }
}

fn blown_up(x: f64, y: &[f64], l: usize, threshold: f64) -> bool {
    if y.iter().any(|v| !v.is_finite()) {
        return true;
    }
    let w_max = y[..l].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let wt_max = y[l..2 * l].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    w_max > threshold + wt_max * (-x.ln()).max(0.0)
}

/// Integrates from `start` through every station in order, landing on each
/// exactly. Stations must be strictly monotone and lie on one side of
/// `start.x`. The returned trajectory is ordered by increasing x.
pub fn integrate_through(
    sys: &TodaSystem,
    start: &PhasePoint,
    stations: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    run_segments(sys, start, stations, cfg)
}

pub(super) fn run_segments(
    sys: &TodaSystem,
    start: &PhasePoint,
    stations: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    sys.check(start)?;
    let Some(&last) = stations.last() else {
        return Err(Error::Parameter("no integration target given".into()));
    };
    let dir = (last - start.x).signum();
    let mut prev = start.x;
    for &s in stations {
        if !(s > 0.0) || (s - prev) * dir <= 0.0 {
            return Err(Error::Parameter(format!(
                "stations must be positive and strictly monotone away from x = {}",
                start.x
            )));
        }
        prev = s;
    }

    // split at the log switch so each segment lives in one variable
    let mut targets: Vec<f64> = Vec::with_capacity(stations.len() + 1);
    let mut from = start.x;
    for &s in stations {
        let sw = cfg.log_switch;
        if (from - sw) * (s - sw) < 0.0 {
            targets.push(sw);
        }
        targets.push(s);
        from = s;
    }

    let l = sys.dim();
    let linear = Augmented { sys: *sys, log_x: false };
    let logx = Augmented { sys: *sys, log_x: true };

    let mut y = Vec::with_capacity(2 * l + 2);
    y.extend_from_slice(&start.w);
    y.extend_from_slice(&start.wt);
    y.extend_from_slice(&[0.0, 0.0]);

    let mut xs = vec![start.x];
    let mut states = vec![y.clone()];
    let mut stats = StepStats::default();
    let mut stop = StopReason::Completed;
    let mut x_now = start.x;

    let mut stepper: Option<(bool, Dopri5<'_, Augmented>)> = None;
    for &target in &targets {
        let use_log = x_now.max(target) <= cfg.log_switch;
        let needs_new = !matches!(&stepper, Some((mode, _)) if *mode == use_log);
        if needs_new {
            if let Some((_, old)) = stepper.take() {
                stats.merge(old.stats());
            }
            let (ode, t0) = if use_log { (&logx, x_now.ln()) } else { (&linear, x_now) };
            let mut s = Dopri5::new(ode, t0, &y, cfg.rel_tol, cfg.abs_tol).with_max_steps(cfg.max_steps)
                .with_controlled_components(2 * l);
            if !use_log {
                s = s.with_max_step(cfg.max_step);
            }
            stepper = Some((use_log, s));
        }
        let (_, s) = stepper.as_mut().expect("stepper initialised above");
        let t_end = if use_log { target.ln() } else { target };
        let mut flagged = false;
        let res = s.advance_to(t_end, |t, state| {
            let x = if t == t_end {
                target
            } else if use_log {
                t.exp()
            } else {
                t
            };
            xs.push(x);
            states.push(state.to_vec());
            if blown_up(x, state, l, cfg.blowup_threshold) {
                flagged = true;
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
        y.copy_from_slice(s.y());
        x_now = *xs.last().expect("start sample present");
        match res {
            Ok(()) => {}
            Err(Halt::Observer) => {
                debug_assert!(flagged);
                stop = StopReason::BlowUp;
                break;
            }
            Err(Halt::StepUnderflow) => {
                stop = StopReason::StepUnderflow;
                break;
            }
            Err(Halt::MaxSteps) => {
                stop = StopReason::MaxSteps;
                break;
            }
        }
    }
    if let Some((_, s)) = stepper.take() {
        stats.merge(s.stats());
    }
    if stop != StopReason::Completed {
        log::debug!("integration stopped at x = {x_now}: {stop:?}");
    }

    if dir < 0.0 {
        xs.reverse();
        states.reverse();
    }
    let q0 = states[0][2 * l];
    let a0 = states[0][2 * l + 1];
    let mut points = Vec::with_capacity(xs.len());
    let mut reg_cumulative = Vec::with_capacity(xs.len());
    let mut action_cumulative = Vec::with_capacity(xs.len());
    for (x, st) in xs.iter().zip(&states) {
        points.push(PhasePoint {
            x: *x,
            w: st[..l].to_vec(),
            wt: st[l..2 * l].to_vec(),
        });
        reg_cumulative.push(st[2 * l] - q0);
        action_cumulative.push(st[2 * l + 1] - a0);
    }
    let reg_integral = *reg_cumulative.last().expect("non-empty");
    Ok(Trajectory {
        n: sys.n(),
        points,
        reg_cumulative,
        action_cumulative,
        reg_integral,
        stop,
        stats,
        x_stop: x_now,
    })
}

/// Integrates forward from `start` to `x_end`. Blow-up is reported through
/// [`Trajectory::stop`] with the partial trajectory, not as an error.
pub fn integrate(start: &PhasePoint, x_end: f64, cfg: &IntegratorConfig, n: usize) -> Result<Trajectory> {
    let sys = TodaSystem::new(n)?;
    if !(x_end > start.x) {
        return Err(Error::Parameter(format!(
            "x_end = {x_end} must exceed the start radius {}",
            start.x
        )));
    }
    run_segments(&sys, start, &[x_end], cfg)
}
