//! Time integration of Hamilton's equations.
//!
//! Classic fixed-step RK4 and an adaptive Runge-Kutta-Fehlberg 4(5) pair. When a
//! step would leave the chart, the trajectory is cut short and the attempted time is
//! recorded in [`Trajectory::escaped`].

use crate::algebroid::ChartedAlgebroid;
use crate::error::{ensure_finite, Error, Result};
use crate::fields::ScalarPhaseField;
use crate::modular::{PhaseDensity, VolumeSpec};
use crate::poisson::{hamiltonian_vector_field, mechanical_rhs, PhasePoint};
use crate::volume_flow::{divergence, FlowHamiltonian};
use nalgebra::DVector;
use rayon::prelude::*;

/// One classic Runge-Kutta step.
pub fn rk4_step<F>(rhs: F, x: &DVector<f64>, dt: f64) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let stage = |y: &DVector<f64>| -> Result<DVector<f64>> {
        let k = rhs(y)?;
        ensure_finite(k.as_slice(), "runge-kutta stage")?;
        Ok(k)
    };
    let k1 = stage(x)?;
    let k2 = stage(&(x + &k1 * (0.5 * dt)))?;
    let k3 = stage(&(x + &k2 * (0.5 * dt)))?;
    let k4 = stage(&(x + &k3 * dt))?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

// Fehlberg coefficients.
const A: [[f64; 5]; 6] = [
    [0.0; 5],
    [1.0 / 4.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 32.0, 9.0 / 32.0, 0.0, 0.0, 0.0],
    [1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0, 0.0, 0.0],
    [439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0, 0.0],
    [
        -8.0 / 27.0,
        2.0,
        -3544.0 / 2565.0,
        1859.0 / 4104.0,
        -11.0 / 40.0,
    ],
];
const B4: [f64; 6] = [
    25.0 / 216.0,
    0.0,
    1408.0 / 2565.0,
    2197.0 / 4104.0,
    -1.0 / 5.0,
    0.0,
];
const B5: [f64; 6] = [
    16.0 / 135.0,
    0.0,
    6656.0 / 12825.0,
    28561.0 / 56430.0,
    -9.0 / 50.0,
    2.0 / 55.0,
];

/// One Fehlberg step; returns the fifth-order solution and the embedded error vector.
pub fn rkf45_step<F>(rhs: F, x: &DVector<f64>, dt: f64) -> Result<(DVector<f64>, DVector<f64>)>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let mut k: Vec<DVector<f64>> = Vec::with_capacity(6);
    for row in A.iter() {
        let mut y = x.clone();
        for (a, kj) in row.iter().zip(&k) {
            if *a != 0.0 {
                y += kj * (a * dt);
            }
        }
        let kk = rhs(&y)?;
        ensure_finite(kk.as_slice(), "runge-kutta stage")?;
        k.push(kk);
    }
    let mut high = x.clone();
    let mut err = DVector::zeros(x.len());
    for (j, kj) in k.iter().enumerate() {
        high += kj * (B5[j] * dt);
        err += kj * ((B5[j] - B4[j]) * dt);
    }
    Ok((high, err))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Rk4Fixed {
        dt: f64,
    },
    Rkf45Adaptive {
        rtol: f64,
        atol: f64,
        dt_min: f64,
        dt_max: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub t_final: f64,
    /// Keep every `record_stride`-th accepted step; the initial and final states are always kept.
    pub record_stride: usize,
}

impl IntegratorConfig {
    pub fn rk4(dt: f64, t_final: f64) -> Self {
        IntegratorConfig {
            method: Method::Rk4Fixed { dt },
            t_final,
            record_stride: 1,
        }
    }

    pub fn rkf45(rtol: f64, atol: f64, dt_min: f64, dt_max: f64, t_final: f64) -> Self {
        IntegratorConfig {
            method: Method::Rkf45Adaptive {
                rtol,
                atol,
                dt_min,
                dt_max,
            },
            t_final,
            record_stride: 1,
        }
    }

    pub fn with_record_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    /// `t_final = 0` is accepted and yields the one-point trajectory `[x0]`.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Precondition(msg));
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return bad(format!(
                "t_final must be finite and non-negative, got {}",
                self.t_final
            ));
        }
        if self.record_stride == 0 {
            return bad("record_stride must be at least 1".into());
        }
        match self.method {
            Method::Rk4Fixed { dt } if !(dt > 0.0) || !dt.is_finite() => {
                bad(format!("dt must be positive, got {dt}"))
            }
            Method::Rkf45Adaptive { rtol, atol, dt_min, dt_max }
                if !(rtol > 0.0 && atol > 0.0 && dt_min > 0.0 && dt_max >= dt_min)
                    || !dt_max.is_finite() =>
            {
                bad(format!(
                    "need rtol, atol, dt_min > 0 and dt_max >= dt_min (got {rtol}, {atol}, {dt_min}, {dt_max})"
                ))
            }
            _ => Ok(()),
        }
    }
}

/// Quantity recorded alongside each stored state.
#[derive(Clone)]
pub enum Monitor {
    Energy,
    Casimir {
        name: String,
        field: ScalarPhaseField,
    },
    /// `int_0^t div_Phi(X_H) dt`, integrated with the state.
    Divergence {
        volume: VolumeSpec,
        density: PhaseDensity,
    },
}

impl Monitor {
    pub fn label(&self) -> String {
        match self {
            Monitor::Energy => "energy".into(),
            Monitor::Casimir { name, .. } => name.clone(),
            Monitor::Divergence { .. } => "divergence".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhasePoint>,
    /// `monitors[k][j]` is monitor `j` at `times[k]`.
    pub monitors: Vec<Vec<f64>>,
    pub monitor_labels: Vec<String>,
    /// Time of the step that would have left the chart, if any.
    pub escaped: Option<f64>,
}

impl Trajectory {
    pub fn final_state(&self) -> &PhasePoint {
        self.states.last().expect("trajectory always holds x0")
    }

    /// Largest `|v(t) - v(0)|` over the recorded values of monitor `j`.
    pub fn monitor_drift(&self, j: usize) -> f64 {
        let v0 = self.monitors[0][j];
        self.monitors
            .iter()
            .map(|row| (row[j] - v0).abs())
            .fold(0.0, f64::max)
    }
}

struct Flow<'a> {
    alg: &'a ChartedAlgebroid,
    h: FlowHamiltonian<'a>,
    dim: usize,
    divergences: Vec<(&'a VolumeSpec, &'a PhaseDensity)>,
}

impl Flow<'_> {
    fn rhs(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        let x = PhasePoint::from_flat(&z.as_slice()[..self.dim], self.alg.base_dim());
        let field = match self.h {
            FlowHamiltonian::Mechanical(mech) => mechanical_rhs(self.alg, mech, &x)?,
            FlowHamiltonian::General(h) => hamiltonian_vector_field(self.alg, h, &x)?,
        };
        let mut out = DVector::zeros(z.len());
        out.rows_mut(0, self.dim).copy_from(&field);
        for (j, (vol, density)) in self.divergences.iter().enumerate() {
            out[self.dim + j] = divergence(self.alg, self.h, vol, density, &x)?.divergence;
        }
        Ok(out)
    }

    fn in_chart(&self, z: &DVector<f64>) -> bool {
        self.alg
            .chart()
            .contains(&z.as_slice()[..self.alg.base_dim()])
    }
}

enum StepOutcome {
    Accepted(DVector<f64>),
    Escaped,
}

fn classify(result: Result<DVector<f64>>, flow: &Flow<'_>) -> Result<StepOutcome> {
    match result {
        Ok(z) if flow.in_chart(&z) => Ok(StepOutcome::Accepted(z)),
        Ok(_) | Err(Error::OutOfChart { .. }) => Ok(StepOutcome::Escaped),
        Err(e) => Err(e),
    }
}

/// Integrates `x' = X_H(x)` from `x0` according to `cfg`, evaluating `monitors` at every
/// recorded state.
pub fn integrate(
    alg: &ChartedAlgebroid,
    h: FlowHamiltonian<'_>,
    x0: &PhasePoint,
    cfg: &IntegratorConfig,
    monitors: &[Monitor],
) -> Result<Trajectory> {
    cfg.validate()?;
    x0.validate(alg)?;
    let dim = x0.dim();
    let divergences = monitors
        .iter()
        .filter_map(|mon| match mon {
            Monitor::Divergence { volume, density } => Some((volume, density)),
            _ => None,
        })
        .collect::<Vec<_>>();
    let flow = Flow {
        alg,
        h,
        dim,
        divergences,
    };
    let mut z = DVector::zeros(dim + flow.divergences.len());
    z.rows_mut(0, dim).copy_from_slice(&x0.to_flat());

    let mut recorder = Recorder::new(&flow, monitors, cfg.record_stride);
    recorder.push(0.0, &z)?;

    let mut t = 0.0;
    let mut escaped = None;
    match cfg.method {
        Method::Rk4Fixed { dt } => {
            let steps = if cfg.t_final == 0.0 {
                0
            } else {
                (cfg.t_final / dt - 1e-9).ceil().max(1.0) as usize
            };
            let h_step = if steps == 0 {
                0.0
            } else {
                cfg.t_final / steps as f64
            };
            for k in 1..=steps {
                let t_next = if k == steps {
                    cfg.t_final
                } else {
                    k as f64 * h_step
                };
                match classify(rk4_step(|y| flow.rhs(y), &z, h_step), &flow)? {
                    StepOutcome::Accepted(next) => z = next,
                    StepOutcome::Escaped => {
                        escaped = Some(t_next);
                        break;
                    }
                }
                t = t_next;
                recorder.step(t, &z, k == steps)?;
            }
        }
        Method::Rkf45Adaptive {
            rtol,
            atol,
            dt_min,
            dt_max,
        } => {
            let mut dt = dt_max.min(cfg.t_final.max(dt_min) * 0.01).max(dt_min);
            while t < cfg.t_final {
                let last = t + dt >= cfg.t_final * (1.0 - 1e-14);
                let h_step = if last { cfg.t_final - t } else { dt };
                let (next, err) = match rkf45_step(|y| flow.rhs(y), &z, h_step) {
                    Ok(pair) => pair,
                    Err(Error::OutOfChart { .. }) => {
                        escaped = Some(t + h_step);
                        break;
                    }
                    Err(e) => return Err(e),
                };
                let norm = (0..z.len())
                    .map(|i| err[i].abs() / (atol + rtol * z[i].abs().max(next[i].abs())))
                    .fold(0.0, f64::max);
                let factor = if norm == 0.0 {
                    5.0
                } else {
                    (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
                };
                if norm <= 1.0 {
                    if !flow.in_chart(&next) {
                        escaped = Some(t + h_step);
                        break;
                    }
                    z = next;
                    t = if last { cfg.t_final } else { t + h_step };
                    recorder.step(t, &z, last)?;
                    dt = (dt * factor).min(dt_max);
                } else {
                    dt = h_step * factor;
                    if dt < dt_min {
                        return Err(Error::Stiff { time: t, dt });
                    }
                }
            }
        }
    }
    recorder.finish(t, &z, escaped)
}

struct Recorder<'a> {
    flow: &'a Flow<'a>,
    monitors: &'a [Monitor],
    stride: usize,
    accepted: usize,
    last_recorded: usize,
    traj: Trajectory,
}

impl<'a> Recorder<'a> {
    fn new(flow: &'a Flow<'a>, monitors: &'a [Monitor], stride: usize) -> Self {
        Recorder {
            flow,
            monitors,
            stride,
            accepted: 0,
            last_recorded: 0,
            traj: Trajectory {
                times: Vec::new(),
                states: Vec::new(),
                monitors: Vec::new(),
                monitor_labels: monitors.iter().map(Monitor::label).collect(),
                escaped: None,
            },
        }
    }

    fn push(&mut self, t: f64, z: &DVector<f64>) -> Result<()> {
        let flow = self.flow;
        let x = PhasePoint::from_flat(&z.as_slice()[..flow.dim], flow.alg.base_dim());
        let mut row = Vec::with_capacity(self.monitors.len());
        let mut div_slot = flow.dim;
        for mon in self.monitors {
            row.push(match mon {
                Monitor::Energy => flow.h.as_dyn().energy(&x.q, &x.p)?,
                Monitor::Casimir { field, .. } => field.value(&x.q, &x.p),
                Monitor::Divergence { .. } => {
                    div_slot += 1;
                    z[div_slot - 1]
                }
            });
        }
        self.traj.times.push(t);
        self.traj.states.push(x);
        self.traj.monitors.push(row);
        self.last_recorded = self.accepted;
        Ok(())
    }

    fn step(&mut self, t: f64, z: &DVector<f64>, last: bool) -> Result<()> {
        self.accepted += 1;
        if last || self.accepted.is_multiple_of(self.stride) {
            self.push(t, z)?;
        }
        Ok(())
    }

    fn finish(mut self, t: f64, z: &DVector<f64>, escaped: Option<f64>) -> Result<Trajectory> {
        if self.last_recorded != self.accepted {
            self.push(t, z)?;
        }
        self.traj.escaped = escaped;
        Ok(self.traj)
    }
}

/// Integrates independent initial conditions in parallel; results keep the input order.
pub fn integrate_batch(
    alg: &ChartedAlgebroid,
    h: FlowHamiltonian<'_>,
    initial: &[PhasePoint],
    cfg: &IntegratorConfig,
    monitors: &[Monitor],
) -> Vec<Result<Trajectory>> {
    initial
        .par_iter()
        .map(|x0| integrate(alg, h, x0, cfg, monitors))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebroid::BaseChart;
    use crate::fields::BaseField;
    use crate::poisson::MechanicalHamiltonian;
    use nalgebra::DMatrix;

    fn oscillator() -> (ChartedAlgebroid, MechanicalHamiltonian) {
        let alg = ChartedAlgebroid::builder(BaseChart::unbounded(&["q"]), 1)
            .anchor(|_| DMatrix::identity(1, 1))
            .anchor_jacobian(|_| vec![DMatrix::zeros(1, 1)])
            .build()
            .unwrap();
        let v = BaseField::with_gradient(|q| 0.5 * q[0] * q[0], |q| vec![q[0]]);
        (
            alg,
            MechanicalHamiltonian::constant(DMatrix::identity(1, 1), v),
        )
    }

    #[test]
    fn zero_rhs_is_identity() {
        let x = DVector::from_vec(vec![1.0, -2.0]);
        let y = rk4_step(|z| Ok(DVector::zeros(z.len())), &x, 0.3).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn exponential_growth_matches_taylor() {
        let x = DVector::from_vec(vec![1.0]);
        let y = rk4_step(|z| Ok(z.clone()), &x, 0.1).unwrap();
        let taylor = 1.0 + 0.1 + 0.005 + 0.001 / 6.0 + 0.0001 / 24.0;
        assert!((y[0] - taylor).abs() < 1e-15);
        let remainder = 0.1f64.powi(5) / 120.0 * 0.1f64.exp();
        assert!((y[0] - 0.1f64.exp()).abs() <= remainder);
    }

    #[test]
    fn step_reversal_is_fifth_order() {
        let rhs = |z: &DVector<f64>| Ok(DVector::from_vec(vec![z[1], -z[0].sin()]));
        let x = DVector::from_vec(vec![0.7, 0.2]);
        let back = |dt: f64| {
            let y = rk4_step(rhs, &x, dt).unwrap();
            (rk4_step(rhs, &y, -dt).unwrap() - &x).amax()
        };
        let (e1, e2) = (back(0.1), back(0.05));
        assert!(e1 < 1e-5);
        assert!(e1 / e2 > 16.0);
    }

    #[test]
    fn non_finite_stage_is_numeric_error() {
        let r = rk4_step(
            |_| Ok(DVector::from_vec(vec![f64::NAN])),
            &DVector::zeros(1),
            0.1,
        );
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }

    #[test]
    fn oscillator_period() {
        let (alg, h) = oscillator();
        let x0 = PhasePoint::new(vec![1.0], vec![0.0]);
        let cfg = IntegratorConfig::rk4(1e-3, 2.0 * std::f64::consts::PI);
        let traj = integrate(&alg, (&h).into(), &x0, &cfg, &[Monitor::Energy]).unwrap();
        let xf = traj.final_state();
        assert!((xf.q[0] - 1.0).abs() < 1e-8 && xf.p[0].abs() < 1e-8);
        assert!(traj.monitor_drift(0) < 1e-10);
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn rkf45_agrees_with_rk4() {
        let (alg, h) = oscillator();
        let x0 = PhasePoint::new(vec![0.3], vec![0.8]);
        let a = integrate(
            &alg,
            (&h).into(),
            &x0,
            &IntegratorConfig::rk4(1e-4, 3.0),
            &[],
        )
        .unwrap();
        let atol = 1e-10;
        let b = integrate(
            &alg,
            (&h).into(),
            &x0,
            &IntegratorConfig::rkf45(1e-10, atol, 1e-8, 0.5, 3.0),
            &[],
        )
        .unwrap();
        let (xa, xb) = (a.final_state(), b.final_state());
        assert!((xa.q[0] - xb.q[0]).abs() < 10.0 * atol);
        assert!((xa.p[0] - xb.p[0]).abs() < 10.0 * atol);
        assert_eq!(*b.times.last().unwrap(), 3.0);
    }

    #[test]
    fn stride_keeps_endpoints() {
        let (alg, h) = oscillator();
        let x0 = PhasePoint::new(vec![1.0], vec![0.0]);
        let cfg = IntegratorConfig::rk4(0.1, 1.05).with_record_stride(4);
        let traj = integrate(&alg, (&h).into(), &x0, &cfg, &[]).unwrap();
        assert_eq!(traj.times.first(), Some(&0.0));
        assert_eq!(traj.times.last(), Some(&1.05));
        assert_eq!(traj.times.len(), 4);
    }

    #[test]
    fn zero_time_gives_single_state() {
        let (alg, h) = oscillator();
        let x0 = PhasePoint::new(vec![1.0], vec![0.0]);
        let traj = integrate(
            &alg,
            (&h).into(),
            &x0,
            &IntegratorConfig::rk4(1e-3, 0.0),
            &[],
        )
        .unwrap();
        assert_eq!(traj.states, vec![x0]);
    }

    #[test]
    fn chart_exit_truncates() {
        let alg = ChartedAlgebroid::builder(
            BaseChart::new(vec!["q".into()], vec![(-1.0, 1.0)]).unwrap(),
            1,
        )
        .anchor(|_| DMatrix::identity(1, 1))
        .anchor_jacobian(|_| vec![DMatrix::zeros(1, 1)])
        .build()
        .unwrap();
        let h = MechanicalHamiltonian::kinetic(DMatrix::identity(1, 1));
        let x0 = PhasePoint::new(vec![0.0], vec![1.0]);
        let traj = integrate(
            &alg,
            (&h).into(),
            &x0,
            &IntegratorConfig::rk4(0.01, 5.0),
            &[],
        )
        .unwrap();
        let t_exit = traj.escaped.unwrap();
        assert!(t_exit > 0.99 && t_exit < 1.02, "{t_exit}");
        assert!(traj.final_state().q[0] < 1.0);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(IntegratorConfig::rk4(0.0, 1.0).validate().is_err());
        assert!(IntegratorConfig::rk4(0.1, -1.0).validate().is_err());
        assert!(IntegratorConfig::rkf45(0.0, 1e-6, 1e-6, 0.1, 1.0)
            .validate()
            .is_err());
        assert!(IntegratorConfig::rkf45(1e-6, 1e-6, 0.2, 0.1, 1.0)
            .validate()
            .is_err());
        assert!(IntegratorConfig::rk4(0.1, 1.0)
            .with_record_stride(0)
            .validate()
            .is_err());
    }

    #[test]
    fn tiny_dt_min_overflow_is_stiff() {
        let (alg, h) = oscillator();
        let x0 = PhasePoint::new(vec![1.0], vec![0.0]);
        let cfg = IntegratorConfig::rkf45(1e-14, 1e-16, 0.05, 0.1, 1.0);
        let r = integrate(&alg, (&h).into(), &x0, &cfg, &[]);
        assert!(matches!(r, Err(Error::Stiff { .. })));
    }
}
