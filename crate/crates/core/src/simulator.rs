//! Time- and frequency-domain checks of the game payoff.
//!
//! First-order consensus: `x' = -L_g x + a u + B w`, where `a` marks the
//! followers listening to the leader (`a = -L_12`). Platoon: positions and
//! velocities of the followers under the cruise-control law, with the leader
//! moving at constant speed. Both are integrated with classical fixed-step RK4.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::format::sig12;
use crate::platoon::PlatoonScenario;
use crate::spectral::{grounded_system, sigma_max_complex, GroundedSystem, Lu};
use crate::topology::LeaderNetwork;

/// Consecutive calm steps required before the state counts as settled.
pub const STEADY_WINDOW: usize = 100;
/// States larger than this abort the run.
pub const DIVERGENCE_BOUND: f64 = 1e12;
const MAX_RECORDED: usize = 5_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    /// Derivative sup-norm below which a step counts as calm.
    pub steady_tol: f64,
    /// Constant leader input (first order) or leader speed (platoon).
    pub reference_u: f64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return Err(Error::InvalidConfig(format!("horizon {} shorter than dt {}", self.horizon, self.dt)));
        }
        if !(self.steady_tol > 0.0) {
            return Err(Error::InvalidConfig("steady_tol must be positive".into()));
        }
        Ok(())
    }

    /// Defaults for the first-order system: step from a Gershgorin bound on the
    /// fastest mode, horizon from a lower bound on the slowest.
    pub fn first_order_defaults(sys: &GroundedSystem) -> Result<SimConfig> {
        let fastest = gershgorin_radius(&sys.lg);
        let slowest = slowest_rate_bound(&sys.lg)?;
        Ok(SimConfig { dt: 0.1 / fastest, horizon: 50.0 / slowest, steady_tol: 1e-8, reference_u: 0.0 })
    }

    pub fn platoon_defaults(scn: &PlatoonScenario) -> Result<SimConfig> {
        let sys = grounded_system(&scn.network()?)?;
        let lambda_max = gershgorin_radius(&sys.lg);
        let lambda_min = slowest_rate_bound(&sys.lg)?;
        let fastest = scn.k_u * lambda_max + (scn.k_p * lambda_max).sqrt();
        let slowest = (scn.k_u * lambda_min / 2.0).min(scn.k_p / scn.k_u);
        Ok(SimConfig { dt: 0.1 / fastest, horizon: 50.0 / slowest, steady_tol: 1e-8, reference_u: 1.0 })
    }
}

fn gershgorin_radius(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows()).map(|r| m.row(r).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

// 1 / ||L_g^{-1}||_inf bounds the smallest eigenvalue magnitude from below.
fn slowest_rate_bound(lg: &DMatrix<f64>) -> Result<f64> {
    let inv = Lu::factor(lg)?.inverse();
    Ok(1.0 / gershgorin_radius(&inv))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// One row of follower states per recorded time.
    pub states: Vec<Vec<f64>>,
    /// Follower velocities per recorded time (platoon runs only).
    pub velocities: Option<Vec<Vec<f64>>>,
    /// Sensor outputs per recorded time.
    pub outputs: Vec<Vec<f64>>,
    pub settled: bool,
}

impl Trajectory {
    pub fn final_outputs(&self) -> &[f64] {
        self.outputs.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// `t, x0.., [v0..,] y0..` with a header row.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, Vec::len);
        let k = self.outputs.first().map_or(0, Vec::len);
        let mut header = vec!["t".to_string()];
        header.extend((0..n).map(|i| format!("x{i}")));
        if self.velocities.is_some() {
            header.extend((0..n).map(|i| format!("v{i}")));
        }
        header.extend((0..k).map(|i| format!("y{i}")));
        let mut out = header.join(",");
        out.push('\n');
        for (step, t) in self.times.iter().enumerate() {
            let mut row = vec![sig12(*t)];
            row.extend(self.states[step].iter().map(|&x| sig12(x)));
            if let Some(v) = &self.velocities {
                row.extend(v[step].iter().map(|&x| sig12(x)));
            }
            row.extend(self.outputs[step].iter().map(|&x| sig12(x)));
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn check_indices(set: &[usize], size: usize) -> Result<()> {
    for &index in set {
        if index >= size {
            return Err(Error::PlacementOutOfRange { index, size });
        }
    }
    Ok(())
}

struct Rk4 {
    k1: DVector<f64>,
    k2: DVector<f64>,
    k3: DVector<f64>,
    k4: DVector<f64>,
    tmp: DVector<f64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        let z = DVector::zeros(n);
        Self { k1: z.clone(), k2: z.clone(), k3: z.clone(), k4: z.clone(), tmp: z }
    }

    /// Advance `x` by one step; `k1` must already hold the derivative at `(t, x)`.
    fn step<F>(&mut self, rhs: &F, t: f64, x: &mut DVector<f64>, dt: f64)
    where
        F: Fn(f64, &DVector<f64>, &mut DVector<f64>),
    {
        self.tmp.copy_from(x);
        self.tmp.axpy(dt / 2.0, &self.k1, 1.0);
        rhs(t + dt / 2.0, &self.tmp, &mut self.k2);
        self.tmp.copy_from(x);
        self.tmp.axpy(dt / 2.0, &self.k2, 1.0);
        rhs(t + dt / 2.0, &self.tmp, &mut self.k3);
        self.tmp.copy_from(x);
        self.tmp.axpy(dt, &self.k3, 1.0);
        rhs(t + dt, &self.tmp, &mut self.k4);
        x.axpy(dt / 6.0, &self.k1, 1.0);
        x.axpy(dt / 3.0, &self.k2, 1.0);
        x.axpy(dt / 3.0, &self.k3, 1.0);
        x.axpy(dt / 6.0, &self.k4, 1.0);
    }
}

struct RunResult {
    times: Vec<f64>,
    samples: Vec<DVector<f64>>,
    settled: bool,
    final_time: f64,
}

/// Fixed-step integration until the horizon or until `calm` holds for a full window.
fn integrate<F, C>(rhs: F, calm: C, x0: DVector<f64>, cfg: &SimConfig) -> Result<RunResult>
where
    F: Fn(f64, &DVector<f64>, &mut DVector<f64>),
    C: Fn(&DVector<f64>, &DVector<f64>) -> bool,
{
    cfg.validate()?;
    let steps = (cfg.horizon / cfg.dt).ceil() as usize;
    let stride = steps.div_ceil(MAX_RECORDED).max(1);
    let mut rk = Rk4::new(x0.len());
    let mut x = x0;
    let mut t = 0.0;
    let mut times = vec![0.0];
    let mut samples = vec![x.clone()];
    let mut calm_steps = 0;
    let mut settled = false;
    for step in 1..=steps {
        rhs(t, &x, &mut rk.k1);
        if calm(&x, &rk.k1) {
            calm_steps += 1;
            if calm_steps >= STEADY_WINDOW {
                settled = true;
                break;
            }
        } else {
            calm_steps = 0;
        }
        rk.step(&rhs, t, &mut x, cfg.dt);
        t = step as f64 * cfg.dt;
        if x.amax() > DIVERGENCE_BOUND || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { time: t });
        }
        if step % stride == 0 {
            times.push(t);
            samples.push(x.clone());
        }
    }
    if times.last() != Some(&t) {
        times.push(t);
        samples.push(x);
    }
    Ok(RunResult { times, samples, settled, final_time: t })
}

fn incidence(size: usize, set: &[usize]) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(size, set.len());
    for (k, &i) in set.iter().enumerate() {
        b[(i, k)] = 1.0;
    }
    b
}

/// First-order consensus from rest under constant leader input and attack.
pub fn simulate_first_order(
    net: &LeaderNetwork,
    attacker: &[usize],
    detector: &[usize],
    w_const: &[f64],
    cfg: &SimConfig,
) -> Result<Trajectory> {
    let sys = grounded_system(net)?;
    let m = sys.lg.nrows();
    check_indices(attacker, m)?;
    check_indices(detector, m)?;
    if w_const.len() != attacker.len() {
        return Err(Error::InvalidConfig(format!("{} attack values for {} attacked nodes", w_const.len(), attacker.len())));
    }
    let drive = -&sys.l12 * cfg.reference_u + incidence(m, attacker) * DVector::from_column_slice(w_const);
    let a = -&sys.lg;
    let rhs = |_t: f64, x: &DVector<f64>, out: &mut DVector<f64>| {
        out.gemv(1.0, &a, x, 0.0);
        *out += &drive;
    };
    let calm = |_x: &DVector<f64>, dx: &DVector<f64>| dx.amax() < cfg.steady_tol;
    let run = integrate(rhs, calm, DVector::zeros(m), cfg)?;
    let outputs = run.samples.iter().map(|x| detector.iter().map(|&i| x[i]).collect()).collect();
    Ok(Trajectory {
        times: run.times,
        states: run.samples.iter().map(|x| x.iter().copied().collect()).collect(),
        velocities: None,
        outputs,
        settled: run.settled,
    })
}

/// Steady-state outputs under a unit constant attack on each attacked node in turn.
///
/// Row `r`, column `k`: sensor `detector[r]` after a unit attack on `attacker[k]`.
pub fn dc_gain_empirical(net: &LeaderNetwork, attacker: &[usize], detector: &[usize], cfg: &SimConfig) -> Result<DMatrix<f64>> {
    let cfg = SimConfig { reference_u: 0.0, ..*cfg };
    let mut gain = DMatrix::zeros(detector.len(), attacker.len());
    for k in 0..attacker.len() {
        let mut w = vec![0.0; attacker.len()];
        w[k] = 1.0;
        let run = simulate_first_order(net, attacker, detector, &w, &cfg)?;
        if !run.settled {
            return Err(Error::NoSteadyState { horizon: cfg.horizon });
        }
        for (r, &y) in run.final_outputs().iter().enumerate() {
            gain[(r, k)] = y;
        }
    }
    Ok(gain)
}

/// `ω` values spaced evenly in log scale, `per_decade` per factor of ten, both ends included.
pub fn log_spaced(omega_min: f64, omega_max: f64, per_decade: usize) -> Vec<f64> {
    assert!(omega_min > 0.0 && omega_max >= omega_min && per_decade > 0);
    let decades = (omega_max / omega_min).log10();
    let count = ((decades * per_decade as f64).round() as usize).max(1);
    (0..=count).map(|k| omega_min * 10f64.powf(decades * k as f64 / count as f64)).collect()
}

/// `σ_max(C (jωI + L_g)^{-1} B)` at each `ω`.
pub fn frequency_response(net: &LeaderNetwork, attacker: &[usize], detector: &[usize], omegas: &[f64]) -> Result<Vec<(f64, f64)>> {
    let sys = grounded_system(net)?;
    let m = sys.lg.nrows();
    check_indices(attacker, m)?;
    check_indices(detector, m)?;
    if attacker.is_empty() || detector.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let mut rhs = DMatrix::zeros(2 * m, attacker.len());
    for (k, &i) in attacker.iter().enumerate() {
        rhs[(i, k)] = 1.0;
    }
    omegas
        .iter()
        .map(|&omega| {
            if omega < 0.0 {
                return Err(Error::InvalidConfig(format!("negative frequency {omega}")));
            }
            // (L_g + jωI)(X_r + jX_i) = B as a real system of twice the size.
            let mut block = DMatrix::zeros(2 * m, 2 * m);
            block.view_mut((0, 0), (m, m)).copy_from(&sys.lg);
            block.view_mut((m, m), (m, m)).copy_from(&sys.lg);
            for i in 0..m {
                block[(i, m + i)] = -omega;
                block[(m + i, i)] = omega;
            }
            let x = Lu::factor(&block)?.solve(&rhs);
            let re = DMatrix::from_fn(detector.len(), attacker.len(), |r, c| x[(detector[r], c)]);
            let im = DMatrix::from_fn(detector.len(), attacker.len(), |r, c| x[(m + detector[r], c)]);
            Ok((omega, sigma_max_complex(&re, &im)?))
        })
        .collect()
}

pub fn frequency_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::from("omega,gain\n");
    for (w, g) in points {
        out.push_str(&format!("{},{}\n", sig12(*w), sig12(*g)));
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlatoonRun {
    /// Positions in `states`, velocities in `velocities`, sensed velocities in `outputs`.
    pub trajectory: Trajectory,
    /// Sensor velocities minus the leader speed at the end of the run.
    pub steady_velocity_deviation: Vec<f64>,
    /// Sensor positions minus their nominal formation slot at the end of the run.
    pub steady_position_deviation: Vec<f64>,
}

/// Followers start at rest at the origin; the leader starts there and moves at `reference_u`.
pub fn simulate_platoon(
    scn: &PlatoonScenario,
    attacker: &[usize],
    detector: &[usize],
    w_const: &[f64],
    cfg: &SimConfig,
) -> Result<PlatoonRun> {
    scn.validate()?;
    let net = scn.network()?;
    let sys = grounded_system(&net)?;
    let m = sys.lg.nrows();
    check_indices(attacker, m)?;
    check_indices(detector, m)?;
    if w_const.len() != attacker.len() {
        return Err(Error::InvalidConfig(format!("{} attack values for {} attacked nodes", w_const.len(), attacker.len())));
    }
    let spacing = DVector::from_iterator(m, sys.follower_order.iter().map(|&v| scn.spacing[v]));
    let attack = incidence(m, attacker) * DVector::from_column_slice(w_const);
    let (k_p, k_u, speed) = (scn.k_p, scn.k_u, cfg.reference_u);
    let lg = &sys.lg;
    let l12 = &sys.l12;
    let rhs = |t: f64, z: &DVector<f64>, out: &mut DVector<f64>| {
        let p = z.rows(0, m);
        let v = z.rows(m, m);
        let leader_position = speed * t;
        let accel = -k_p * (lg * p + l12 * leader_position) + k_p * &spacing - k_u * (lg * v + l12 * speed) + &attack;
        out.rows_mut(0, m).copy_from(&v);
        out.rows_mut(m, m).copy_from(&accel);
    };
    let calm = |z: &DVector<f64>, dz: &DVector<f64>| {
        let velocity_error = z.rows(m, m).iter().map(|v| (v - speed).abs()).fold(0.0, f64::max);
        velocity_error < cfg.steady_tol && dz.rows(m, m).amax() < cfg.steady_tol
    };
    let run = integrate(rhs, calm, DVector::zeros(2 * m), cfg)?;
    if !run.settled {
        return Err(Error::NoSteadyState { horizon: cfg.horizon });
    }
    let formation = Lu::factor(lg)?.solve_vec(spacing.as_slice());
    let last = run.samples.last().expect("at least the initial sample");
    let leader_position = speed * run.final_time;
    let steady_velocity_deviation = detector.iter().map(|&i| last[m + i] - speed).collect();
    let steady_position_deviation = detector.iter().map(|&i| last[i] - leader_position - formation[i]).collect();
    let trajectory = Trajectory {
        times: run.times,
        states: run.samples.iter().map(|z| z.rows(0, m).iter().copied().collect()).collect(),
        velocities: Some(run.samples.iter().map(|z| z.rows(m, m).iter().copied().collect()).collect()),
        outputs: run.samples.iter().map(|z| detector.iter().map(|&i| z[m + i]).collect()).collect(),
        settled: run.settled,
    };
    Ok(PlatoonRun { trajectory, steady_velocity_deviation, steady_position_deviation })
}
