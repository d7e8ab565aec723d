//! Explicit Runge-Kutta drivers with fixed or CFL-limited steps.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::dgsem::{DGField, RhsDiagnostics, Semidiscretization};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeMethod {
    /// Three-stage, third-order strong-stability-preserving scheme.
    #[default]
    Ssprk33,
    /// Classical fourth-order scheme.
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stepping {
    Fixed(f64),
    /// `dt = factor * min dx / ((2N+1) lambda_max)`, re-evaluated every step.
    Cfl(f64),
}

/// How often the series is sampled and the callback invoked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RecordInterval {
    Steps(usize),
    Time(f64),
}

impl Default for RecordInterval {
    fn default() -> Self {
        Self::Steps(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeIntegrationConfig {
    pub method: TimeMethod,
    pub stepping: Stepping,
    pub t_end: f64,
    pub record_interval: RecordInterval,
}

impl TimeIntegrationConfig {
    pub fn new(method: TimeMethod, stepping: Stepping, t_end: f64) -> Self {
        Self {
            method,
            stepping,
            t_end,
            record_interval: RecordInterval::default(),
        }
    }

    pub fn with_record_interval(mut self, interval: RecordInterval) -> Self {
        self.record_interval = interval;
        self
    }

    pub fn validate(&self, t_start: f64) -> Result<()> {
        match self.stepping {
            Stepping::Fixed(dt) if !(dt > 0.0 && dt.is_finite()) => {
                return Err(Error::Config(alloc::format!("time step must be positive, got {dt}")));
            }
            Stepping::Cfl(c) if !(c > 0.0 && c.is_finite()) => {
                return Err(Error::Config(alloc::format!("CFL factor must be positive, got {c}")));
            }
            _ => {}
        }
        if !self.t_end.is_finite() || self.t_end < t_start {
            return Err(Error::Config(alloc::format!(
                "end time {} precedes start time {t_start}",
                self.t_end
            )));
        }
        match self.record_interval {
            RecordInterval::Steps(0) => Err(Error::Config("record interval must be nonzero".into())),
            RecordInterval::Time(dt) if !(dt > 0.0) => {
                Err(Error::Config("record interval must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSeriesRow {
    pub t: f64,
    pub total_entropy: f64,
    /// Semidiscrete `dS/dt` at `t`.
    pub entropy_rate: f64,
    /// Step taken from `t`; zero on the final row.
    pub dt: f64,
    /// Largest Roe/LLF blending factor in the right-hand side at `t`.
    pub alpha_max: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimeSeries {
    pub rows: Vec<TimeSeriesRow>,
    /// Number of accepted steps.
    pub steps: usize,
}

impl TimeSeries {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }
}

/// One SSPRK(3,3) step of `du/dt = f(u, t)`.
pub fn ssprk33_with<F>(mut f: F, u: &DGField, t: f64, dt: f64) -> Result<DGField>
where
    F: FnMut(&DGField, f64) -> Result<DGField>,
{
    let k1 = f(u, t)?;
    ssprk33_from_first_stage(&mut f, u, &k1, t, dt)
}

fn ssprk33_from_first_stage<F>(f: &mut F, u: &DGField, k1: &DGField, t: f64, dt: f64) -> Result<DGField>
where
    F: FnMut(&DGField, f64) -> Result<DGField>,
{
    let mut u1 = u.clone();
    u1.axpy(dt, k1);
    let k2 = f(&u1, t + dt)?;
    // u2 = 3/4 u + 1/4 (u1 + dt k2)
    let mut u2 = u1;
    u2.axpy(dt, &k2);
    u2.lincomb(0.25, 0.75, u);
    let k3 = f(&u2, t + 0.5 * dt)?;
    // u^{n+1} = 1/3 u + 2/3 (u2 + dt k3)
    let mut out = u2;
    out.axpy(dt, &k3);
    out.lincomb(2.0 / 3.0, 1.0 / 3.0, u);
    Ok(out)
}

/// One classical RK4 step of `du/dt = f(u, t)`.
pub fn rk4_with<F>(mut f: F, u: &DGField, t: f64, dt: f64) -> Result<DGField>
where
    F: FnMut(&DGField, f64) -> Result<DGField>,
{
    let k1 = f(u, t)?;
    rk4_from_first_stage(&mut f, u, &k1, t, dt)
}

fn rk4_from_first_stage<F>(f: &mut F, u: &DGField, k1: &DGField, t: f64, dt: f64) -> Result<DGField>
where
    F: FnMut(&DGField, f64) -> Result<DGField>,
{
    let mut stage = u.clone();
    stage.axpy(0.5 * dt, k1);
    let k2 = f(&stage, t + 0.5 * dt)?;
    stage.clone_from(u);
    stage.axpy(0.5 * dt, &k2);
    let k3 = f(&stage, t + 0.5 * dt)?;
    stage.clone_from(u);
    stage.axpy(dt, &k3);
    let k4 = f(&stage, t + dt)?;
    let mut out = u.clone();
    out.axpy(dt / 6.0, k1);
    out.axpy(dt / 3.0, &k2);
    out.axpy(dt / 3.0, &k3);
    out.axpy(dt / 6.0, &k4);
    Ok(out)
}

pub fn step_ssprk33(semi: &Semidiscretization, u: &DGField, t: f64, dt: f64) -> Result<DGField> {
    ssprk33_with(|v, s| semi.rhs(v, s), u, t, dt)
}

pub fn step_rk4(semi: &Semidiscretization, u: &DGField, t: f64, dt: f64) -> Result<DGField> {
    rk4_with(|v, s| semi.rhs(v, s), u, t, dt)
}

/// Relative slack under which a remaining interval counts as reached.
const END_TOL: f64 = 1e-12;

/// Advances `field0` from `t0` to `config.t_end`.
///
/// The series is sampled at `t0`, at the configured cadence and at `t_end`.
/// `callback(step, t, field)` runs at `t0` and after every accepted step. A
/// failing right-hand side aborts with [`Error::Integration`] carrying the
/// failing time.
pub fn integrate<C>(
    semi: &Semidiscretization,
    field0: &DGField,
    t0: f64,
    config: &TimeIntegrationConfig,
    mut callback: C,
) -> Result<(DGField, TimeSeries)>
where
    C: FnMut(usize, f64, &DGField) -> Result<()>,
{
    config.validate(t0)?;
    let mut series = TimeSeries::default();
    if config.t_end == t0 {
        return Ok((field0.clone(), series));
    }
    let span = config.t_end - t0;
    let wrap = |t: f64, e: Error| match e {
        e @ Error::Integration { .. } => e,
        e => Error::Integration {
            t,
            source: Box::new(e),
        },
    };

    let mut u = field0.clone();
    let mut t = t0;
    let mut step = 0usize;
    let mut next_record_time = t0;
    let mut diag = RhsDiagnostics::default();
    let mut k1 = semi.zero_field();

    loop {
        semi.rhs_into(&u, t, &mut k1, &mut diag).map_err(|e| wrap(t, e))?;
        let remaining = config.t_end - t;
        let done = remaining <= END_TOL * span.abs().max(1.0);

        let mut dt = match config.stepping {
            Stepping::Fixed(dt) => dt,
            Stepping::Cfl(c) => semi.cfl_timestep(&u, c),
        };
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(wrap(t, Error::Config(alloc::format!("invalid time step {dt}"))));
        }
        if dt >= remaining || remaining - dt <= END_TOL * span.abs().max(1.0) {
            dt = remaining;
        }

        let record = done
            || match config.record_interval {
                RecordInterval::Steps(n) => step % n == 0,
                RecordInterval::Time(_) => t >= next_record_time - END_TOL * span.abs().max(1.0),
            };
        if record {
            series.rows.push(TimeSeriesRow {
                t,
                total_entropy: semi.total_entropy(&u).map_err(|e| wrap(t, e))?,
                entropy_rate: semi.entropy_rate(&u, &k1),
                dt: if done { 0.0 } else { dt },
                alpha_max: diag.alpha_max,
            });
            if let RecordInterval::Time(every) = config.record_interval {
                while next_record_time <= t + END_TOL * span.abs().max(1.0) {
                    next_record_time += every;
                }
            }
        }
        callback(step, t, &u).map_err(|e| wrap(t, e))?;
        if done {
            break;
        }

        let mut f = |v: &DGField, s: f64| semi.rhs(v, s);
        u = match config.method {
            TimeMethod::Ssprk33 => ssprk33_from_first_stage(&mut f, &u, &k1, t, dt),
            TimeMethod::Rk4 => rk4_from_first_stage(&mut f, &u, &k1, t, dt),
        }
        .map_err(|e| wrap(t, e))?;
        step += 1;
        // fixed steps are placed at t0 + k dt so rounding does not accumulate
        t = match config.stepping {
            Stepping::Fixed(h) if dt == h => t0 + step as f64 * h,
            _ => t + dt,
        };
        if config.t_end - t <= END_TOL * span.abs().max(1.0) {
            t = config.t_end;
        }
    }
    series.steps = step;
    Ok((u, series))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{LobattoBasis, Mesh1D, State, SveParams};

    fn decay(u: &DGField, _t: f64) -> Result<DGField> {
        let mut out = u.clone();
        out.lincomb(-1.0, 0.0, u);
        Ok(out)
    }

    fn scalar(x: f64) -> DGField {
        DGField::constant(1, 1, State::new(x, 0.0, 0.0))
    }

    #[test]
    fn ssprk33_linear_decay_matches_stability_polynomial() {
        let z: f64 = -0.1;
        let expected = 1.0 + z + z * z / 2.0 + z * z * z / 6.0;
        let u = ssprk33_with(decay, &scalar(1.0), 0.0, 0.1).unwrap();
        assert!((u.get(0, 0).h - expected).abs() < 1e-15);
        assert!((u.get(0, 0).h - 0.904_833_333_333).abs() < 1e-12);
    }

    #[test]
    fn rk4_linear_decay_matches_stability_polynomial() {
        let z: f64 = -0.1;
        let expected = 1.0 + z + z * z / 2.0 + z.powi(3) / 6.0 + z.powi(4) / 24.0;
        let u = rk4_with(decay, &scalar(1.0), 0.0, 0.1).unwrap();
        assert!((u.get(0, 0).h - expected).abs() < 1e-15);
    }

    #[test]
    fn ssprk33_is_third_order() {
        let run = |n: usize| {
            let dt = 1.0 / n as f64;
            let mut u = scalar(1.0);
            for k in 0..n {
                u = ssprk33_with(decay, &u, k as f64 * dt, dt).unwrap();
            }
            (u.get(0, 0).h - (-1.0f64).exp()).abs()
        };
        let order = (run(20) / run(40)).log2();
        assert!(order > 2.9, "{order}");
    }

    fn lake(k: usize) -> (Semidiscretization, DGField) {
        let semi = Semidiscretization::new(
            LobattoBasis::new(2).unwrap(),
            Mesh1D::uniform(0.0, 1.0, k).unwrap(),
            SveParams::default(),
        )
        .unwrap();
        let f = semi.interpolate_ic(|_| State::new(1.0, 0.0, 0.0)).unwrap();
        (semi, f)
    }

    #[test]
    fn constant_state_is_unchanged() {
        let (semi, f) = lake(3);
        let u = step_ssprk33(&semi, &f, 0.0, 1e-3).unwrap();
        for (a, b) in u.values().iter().zip(f.values()) {
            assert!((a.h - b.h).abs() < 1e-15 && a.hv.abs() < 1e-15);
        }
    }

    #[test]
    fn empty_interval_returns_input() {
        let (semi, f) = lake(2);
        let cfg = TimeIntegrationConfig::new(TimeMethod::Ssprk33, Stepping::Fixed(0.1), 0.0);
        let (u, s) = integrate(&semi, &f, 0.0, &cfg, |_, _, _| Ok(())).unwrap();
        assert_eq!(u, f);
        assert!(s.is_empty());
    }

    #[test]
    fn fixed_steps_land_on_end_time() {
        let (semi, f) = lake(2);
        let cfg = TimeIntegrationConfig::new(TimeMethod::Ssprk33, Stepping::Fixed(1e-3), 1.0)
            .with_record_interval(RecordInterval::Steps(250));
        let (_, s) = integrate(&semi, &f, 0.0, &cfg, |_, _, _| Ok(())).unwrap();
        assert_eq!(s.steps, 1000);
        assert_eq!(s.rows.last().unwrap().t, 1.0);
        assert_eq!(s.len(), 5);
    }

    #[test]
    fn final_step_is_truncated() {
        let (semi, f) = lake(2);
        let cfg = TimeIntegrationConfig::new(TimeMethod::Rk4, Stepping::Fixed(0.3), 1.0);
        let (_, s) = integrate(&semi, &f, 0.0, &cfg, |_, _, _| Ok(())).unwrap();
        assert_eq!(s.steps, 4);
        let last = s.rows.last().unwrap();
        assert_eq!(last.t, 1.0);
        assert!((s.rows[3].dt - 0.1).abs() < 1e-15);
    }

    #[test]
    fn time_cadence_records_each_interval() {
        let (semi, f) = lake(2);
        let cfg = TimeIntegrationConfig::new(TimeMethod::Ssprk33, Stepping::Fixed(0.01), 1.0)
            .with_record_interval(RecordInterval::Time(0.25));
        let mut calls = Vec::new();
        let (_, s) = integrate(&semi, &f, 0.0, &cfg, |_, t, _| {
            calls.push(t);
            Ok(())
        })
        .unwrap();
        assert_eq!(s.len(), 5);
        let times: Vec<f64> = s.rows.iter().map(|r| r.t).collect();
        for (got, want) in times.iter().zip([0.0, 0.25, 0.5, 0.75, 1.0]) {
            assert!((got - want).abs() < 1e-12, "{times:?}");
        }
        assert_eq!(calls.len(), 101);
        assert_eq!(*calls.last().unwrap(), 1.0);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let (semi, f) = lake(2);
        for cfg in [
            TimeIntegrationConfig::new(TimeMethod::Ssprk33, Stepping::Fixed(0.0), 1.0),
            TimeIntegrationConfig::new(TimeMethod::Ssprk33, Stepping::Cfl(-1.0), 1.0),
            TimeIntegrationConfig::new(TimeMethod::Ssprk33, Stepping::Fixed(0.1), -1.0),
        ] {
            assert!(matches!(
                integrate(&semi, &f, 0.0, &cfg, |_, _, _| Ok(())),
                Err(Error::Config(_))
            ));
        }
    }

    #[test]
    fn positivity_failure_reports_time() {
        let (semi, mut f) = lake(2);
        f.set(0, 1, State::new(-1.0, 0.0, 0.0));
        let cfg = TimeIntegrationConfig::new(TimeMethod::Ssprk33, Stepping::Fixed(0.1), 1.0);
        match integrate(&semi, &f, 0.5, &cfg, |_, _, _| Ok(())) {
            Err(Error::Integration { t, source }) => {
                assert_eq!(t, 0.5);
                assert!(matches!(*source, Error::PositivityAt { element: 0, node: 1, .. }));
            }
            other => panic!("{other:?}"),
        }
    }
}
