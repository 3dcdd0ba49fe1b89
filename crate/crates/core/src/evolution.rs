//! Time integration of [`NetworkSystem`]s.
//!
//! Nonlinear runs use classical fixed-step RK4. The free linear system has
//! the closed-form solution `e^{itJ} Psi_0` (quantum) or `e^{tJ} u_0`
//! (classical), computed from a symmetric eigendecomposition of `J^(l)`;
//! it serves as the oracle for the integrator and as the semigroup in the
//! Duhamel residual check.

use num_complex::Complex64;

use crate::analysis::density;
use crate::dynamics::{Mode, NetworkSystem, RhsWorkspace};
use crate::error::{Error, Result};
use crate::kernel::CouplingOperator;
use crate::matrix::{dot2, dot2_real_complex, two_prod, RealMatrix};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Symmetric-part tolerance accepted by the eigendecomposition.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rk4,
    ExactFree,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationPlan {
    pub t_end: f64,
    pub dt: f64,
    /// Record a snapshot every `snapshot_stride` steps.
    pub snapshot_stride: usize,
    pub method: Method,
    /// Keep the full complex state in every snapshot, not just densities.
    pub store_states: bool,
}

impl IntegrationPlan {
    pub fn rk4(t_end: f64, dt: f64) -> Self {
        Self {
            t_end,
            dt,
            snapshot_stride: 100,
            method: Method::Rk4,
            store_states: false,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn with_states(mut self) -> Self {
        self.store_states = true;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    /// Number of steps, `t_end / dt` rounded to the nearest integer.
    pub fn steps(&self) -> Result<usize> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidPlan(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidPlan(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidPlan(
                "snapshot_stride must be at least 1".into(),
            ));
        }
        let steps = (self.t_end / self.dt).round();
        if steps < 1.0 || steps > u32::MAX as f64 {
            return Err(Error::InvalidPlan(format!("{steps} steps is out of range")));
        }
        Ok(steps as usize)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub density: Vec<f64>,
    pub state: Option<Vec<Complex64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Time of every recorded step, starting at 0.
    pub times: Vec<f64>,
    /// Haar-weighted `||Psi(., t)||_2^2` at each entry of `times`.
    pub norm_sq: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: Vec<Complex64>,
    /// Set when integration stopped early; holds the failure time.
    pub blow_up: Option<f64>,
}

impl Trajectory {
    pub fn final_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn completed(&self) -> bool {
        self.blow_up.is_none()
    }

    pub fn state_at(&self, time: f64) -> Option<&[Complex64]> {
        self.snapshots
            .iter()
            .find(|s| s.time == time)
            .and_then(|s| s.state.as_deref())
    }

    pub fn max_density(&self) -> f64 {
        self.snapshots
            .iter()
            .flat_map(|s| s.density.iter().copied())
            .fold(0.0, f64::max)
    }
}

/// Reusable RK4 buffers. The state update is accumulated with Kahan
/// compensation, which keeps long runs at small `dt` from being dominated by
/// round-off in `state + increment`.
pub struct Rk4Stepper {
    k: [Vec<Complex64>; 4],
    stage: Vec<Complex64>,
    compensation: Vec<Complex64>,
    ws: RhsWorkspace,
}

impl Rk4Stepper {
    pub fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![ZERO; n]),
            stage: vec![ZERO; n],
            compensation: vec![ZERO; n],
            ws: RhsWorkspace::new(n),
        }
    }

    /// Advances `state` from `t` to `t + dt`.
    pub fn step(
        &mut self,
        system: &NetworkSystem,
        t: f64,
        state: &mut [Complex64],
        dt: f64,
    ) -> Result<()> {
        let [k1, k2, k3, k4] = &mut self.k;
        let stage = &mut self.stage;
        let ws = &mut self.ws;

        system.rhs_into(t, state, k1, ws);
        axpy_into(stage, state, 0.5 * dt, k1);
        system.rhs_into(t + 0.5 * dt, stage, k2, ws);
        axpy_into(stage, state, 0.5 * dt, k2);
        system.rhs_into(t + 0.5 * dt, stage, k3, ws);
        axpy_into(stage, state, dt, k3);
        system.rhs_into(t + dt, stage, k4, ws);

        // Stage the update so a failed step leaves `state` untouched.
        let sixth = dt / 6.0;
        for i in 0..state.len() {
            stage[i] = (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * sixth - self.compensation[i];
        }
        if stage
            .iter()
            .zip(state.iter())
            .any(|(y, x)| !(x + y).is_finite())
        {
            return Err(Error::BlowUp { time: t + dt });
        }
        for ((x, y), comp) in state
            .iter_mut()
            .zip(stage.iter())
            .zip(&mut self.compensation)
        {
            let sum = *x + y;
            *comp = (sum - *x) - y;
            *x = sum;
        }
        Ok(())
    }
}

fn axpy_into(out: &mut [Complex64], x: &[Complex64], a: f64, y: &[Complex64]) {
    for ((o, xi), yi) in out.iter_mut().zip(x).zip(y) {
        *o = xi + yi * a;
    }
}

/// One classical RK4 step.
pub fn step_rk4(
    system: &NetworkSystem,
    t: f64,
    state: &[Complex64],
    dt: f64,
) -> Result<Vec<Complex64>> {
    if let Some(cell) = state.iter().position(|z| !z.is_finite()) {
        return Err(Error::NonFinite { cell });
    }
    if state.len() != system.size() {
        return Err(Error::DimensionMismatch {
            expected: system.size(),
            found: state.len(),
        });
    }
    let mut next = state.to_vec();
    Rk4Stepper::new(state.len()).step(system, t, &mut next, dt)?;
    Ok(next)
}

/// Integrates from `t = 0` to `plan.t_end`, stopping at the first blow-up.
pub fn evolve(system: &NetworkSystem, plan: &IntegrationPlan) -> Result<Trajectory> {
    let trajectory = evolve_recording(system, plan)?;
    match trajectory.blow_up {
        Some(time) => Err(Error::BlowUp { time }),
        None => Ok(trajectory),
    }
}

/// Like [`evolve`], but a blow-up ends the run with a partial trajectory
/// (`blow_up` set) instead of an error.
pub fn evolve_recording(system: &NetworkSystem, plan: &IntegrationPlan) -> Result<Trajectory> {
    let steps = plan.steps()?;
    let n = system.size();
    let haar = system.scheme.haar_weight();
    let stability = plan.dt * system.operator.matrix().inf_norm();
    if stability > 0.5 {
        log::warn!("dt * ||J|| = {stability:.3} exceeds the 0.5 stability guard");
    }

    let mut state = system.initial_state.clone();
    let mut trajectory = Trajectory {
        times: Vec::with_capacity(steps + 1),
        norm_sq: Vec::with_capacity(steps + 1),
        snapshots: Vec::new(),
        final_state: Vec::new(),
        blow_up: None,
    };
    let record = |trajectory: &mut Trajectory, step: usize, t: f64, state: &[Complex64]| {
        trajectory.times.push(t);
        trajectory.norm_sq.push(l2_norm_sq_weighted(state, haar));
        if step.is_multiple_of(plan.snapshot_stride) || step == steps {
            trajectory.snapshots.push(Snapshot {
                time: t,
                density: density(state),
                state: plan.store_states.then(|| state.to_vec()),
            });
        }
    };
    record(&mut trajectory, 0, 0.0, &state);

    match plan.method {
        Method::Rk4 => {
            let mut stepper = Rk4Stepper::new(n);
            for step in 1..=steps {
                let t_prev = (step - 1) as f64 * plan.dt;
                if let Err(e) = stepper.step(system, t_prev, &mut state, plan.dt) {
                    let time = match e {
                        Error::BlowUp { time } => time,
                        _ => t_prev + plan.dt,
                    };
                    trajectory.blow_up = Some(time);
                    break;
                }
                record(&mut trajectory, step, step as f64 * plan.dt, &state);
                if steps >= 10 && step.is_multiple_of(steps / 10) {
                    log::info!(
                        "step {step}/{steps}, norm^2 = {:?}",
                        trajectory.norm_sq[step]
                    );
                }
            }
        }
        Method::ExactFree => {
            if !system.is_free() {
                return Err(Error::InvalidPlan(
                    "the exact propagator requires W = 0 and Z = 0".into(),
                ));
            }
            let propagator = FreePropagator::new(&system.operator)?;
            let coefficients = propagator.to_eigenbasis(&system.initial_state);
            for step in 1..=steps {
                let t = step as f64 * plan.dt;
                state = propagator.from_eigenbasis_evolved(&coefficients, t, system.mode);
                record(&mut trajectory, step, t, &state);
            }
        }
    }
    trajectory.final_state = state;
    Ok(trajectory)
}

fn l2_norm_sq_weighted(state: &[Complex64], haar: f64) -> f64 {
    haar * state.iter().map(|z| z.norm_sqr()).sum::<f64>()
}

/// Ascending eigenvalues and row-stored orthonormal eigenvectors of a real
/// symmetric matrix, each eigenvector signed so that its first component of
/// magnitude above `1e-12` is positive.
pub fn symmetric_eigen(matrix: &RealMatrix) -> Result<(Vec<f64>, RealMatrix)> {
    let defect = matrix.symmetry_defect();
    if defect > SYMMETRY_TOLERANCE {
        return Err(Error::NotSymmetric { defect });
    }
    let n = matrix.rows();
    let eigen = nalgebra::SymmetricEigen::new(matrix.to_nalgebra());
    let vectors = RealMatrix::from_fn(n, n, |k, i| eigen.eigenvectors[(i, k)]);
    Ok(normalize_order(
        eigen.eigenvalues.as_slice().to_vec(),
        vectors,
    ))
}

fn normalize_order(values: Vec<f64>, vectors: RealMatrix) -> (Vec<f64>, RealMatrix) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut sorted = RealMatrix::zeros(n, n);
    for (row, &k) in order.iter().enumerate() {
        let v = vectors.row(k);
        let sign = v
            .iter()
            .find(|x| x.abs() > 1e-12)
            .map_or(1.0, |x| x.signum());
        for i in 0..n {
            sorted[(row, i)] = sign * v[i];
        }
    }
    (order.iter().map(|&k| values[k]).collect(), sorted)
}

/// One step of symmetric eigenpair refinement (Ogita and Aishima, 2018)
/// with the residual products in double-double arithmetic. Clustered
/// eigenvalues are only re-orthogonalized, which is all a degenerate
/// eigenspace needs.
fn refine_eigenpairs(a: &RealMatrix, vectors: &RealMatrix) -> (Vec<f64>, RealMatrix) {
    let n = a.rows();
    // Y = A X, kept as hi + lo.
    let mut y_hi = RealMatrix::zeros(n, n);
    let mut y_lo = RealMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            let (hi, lo) = dot2(a.row(k).iter().copied(), vectors.row(j).iter().copied());
            y_hi[(j, k)] = hi;
            y_lo[(j, k)] = lo;
        }
    }
    let mut r = RealMatrix::zeros(n, n);
    let mut s = RealMatrix::zeros(n, n);
    for i in 0..n {
        let vi = vectors.row(i);
        for j in 0..n {
            let (hi, lo) = dot2(vi.iter().copied(), vectors.row(j).iter().copied());
            r[(i, j)] = f64::from(u8::from(i == j)) - hi - lo;
            let (hi, lo) = dot2(
                vi.iter().chain(vi).copied(),
                y_hi.row(j).iter().chain(y_lo.row(j)).copied(),
            );
            s[(i, j)] = hi + lo;
        }
    }
    let lambda: Vec<f64> = (0..n).map(|i| s[(i, i)] / (1.0 - r[(i, i)])).collect();
    let frobenius = |m: &RealMatrix, skip_diag: bool| {
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                if !(skip_diag && i == j) {
                    sum += m[(i, j)] * m[(i, j)];
                }
            }
        }
        sum.sqrt()
    };
    let delta = 2.0 * (frobenius(&s, true) + a.inf_norm() * frobenius(&r, false));

    let mut refined = vectors.clone();
    for j in 0..n {
        for i in 0..n {
            let gap = lambda[j] - lambda[i];
            let e = if gap.abs() > delta {
                (s[(i, j)] + lambda[j] * r[(i, j)]) / gap
            } else {
                0.5 * r[(i, j)]
            };
            if e != 0.0 {
                for (out, v) in (0..n).zip(vectors.row(i)) {
                    refined[(j, out)] += e * v;
                }
            }
        }
    }
    (lambda, refined)
}

/// Spectral propagator of a real symmetric operator `J = Q diag(lambda) Q^T`.
///
/// The eigendecomposition is refined once after the standard solver, and
/// propagation uses compensated dot products and an exactly split phase
/// `lambda * t`, so the result is accurate to a few units of round-off even
/// at long times. Build cost is `O(n^3)` with a large constant; operators of
/// a few hundred cells take well under a second.
#[derive(Debug, Clone)]
pub struct FreePropagator {
    eigenvalues: Vec<f64>,
    /// Row `k` holds eigenvector `k`.
    eigenvectors: RealMatrix,
    /// Transpose of `eigenvectors`.
    components: RealMatrix,
}

impl FreePropagator {
    pub fn new(operator: &CouplingOperator) -> Result<Self> {
        Self::from_matrix(operator.matrix())
    }

    pub fn from_matrix(matrix: &RealMatrix) -> Result<Self> {
        let (_, vectors) = symmetric_eigen(matrix)?;
        let (values, vectors) = refine_eigenpairs(matrix, &vectors);
        let (eigenvalues, eigenvectors) = normalize_order(values, vectors);
        let n = eigenvalues.len();
        let components = RealMatrix::from_fn(n, n, |i, k| eigenvectors[(k, i)]);
        Ok(Self {
            eigenvalues,
            eigenvectors,
            components,
        })
    }

    /// Ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvector(&self, k: usize) -> &[f64] {
        self.eigenvectors.row(k)
    }

    /// `Q^T state`.
    pub fn to_eigenbasis(&self, state: &[Complex64]) -> Vec<Complex64> {
        (0..self.eigenvalues.len())
            .map(|k| dot2_real_complex(self.eigenvectors.row(k), state))
            .collect()
    }

    /// `Q diag(g(lambda)) c` with `g = e^{i t lambda}` (quantum) or
    /// `e^{t lambda}` (classical).
    pub fn from_eigenbasis_evolved(
        &self,
        coefficients: &[Complex64],
        t: f64,
        mode: Mode,
    ) -> Vec<Complex64> {
        let evolved: Vec<Complex64> = coefficients
            .iter()
            .zip(&self.eigenvalues)
            .map(|(c, &lambda)| c * semigroup_factor(lambda, t, mode))
            .collect();
        (0..self.eigenvalues.len())
            .map(|i| dot2_real_complex(self.components.row(i), &evolved))
            .collect()
    }

    /// The free solution at time `t`.
    pub fn propagate(&self, state: &[Complex64], t: f64, mode: Mode) -> Vec<Complex64> {
        self.from_eigenbasis_evolved(&self.to_eigenbasis(state), t, mode)
    }
}

fn semigroup_factor(lambda: f64, t: f64, mode: Mode) -> Complex64 {
    let (hi, lo) = two_prod(lambda, t);
    match mode {
        Mode::Quantum => Complex64::from_polar(1.0, hi) * Complex64::new(1.0, lo),
        Mode::Classical => Complex64::new(hi.exp() * (1.0 + lo), 0.0),
    }
}

/// `e^{itJ} state`, the solution of `i dPsi/dt = -J Psi`.
pub fn exact_free_propagate(
    operator: &CouplingOperator,
    state: &[Complex64],
    t: f64,
) -> Result<Vec<Complex64>> {
    if state.len() != operator.side() {
        return Err(Error::DimensionMismatch {
            expected: operator.side(),
            found: state.len(),
        });
    }
    let propagator = FreePropagator::new(operator)?;
    if t == 0.0 {
        return Ok(state.to_vec());
    }
    Ok(propagator.propagate(state, t, Mode::Quantum))
}

/// Haar-weighted `||Psi(t) - D(t)||_2` at each sample time, where
///
/// ```text
/// D(t) = S(t) Psi_0 + int_0^t S(t - s) F(Psi(s)) ds
/// ```
///
/// is the mild-solution right side with semigroup `S` of the linear part and
/// the integral taken by the trapezoid rule over the stored states up to `t`.
/// Sample times must be snapshot times with stored states.
pub fn duhamel_residual(
    system: &NetworkSystem,
    trajectory: &Trajectory,
    sample_times: &[f64],
) -> Result<Vec<f64>> {
    let stored: Vec<(f64, &[Complex64])> = trajectory
        .snapshots
        .iter()
        .filter_map(|s| s.state.as_deref().map(|st| (s.time, st)))
        .collect();
    if stored.is_empty() {
        return Err(Error::MissingState(0.0));
    }
    let propagator = FreePropagator::new(&system.operator)?;
    // F(Psi(s)) in the eigenbasis, once per stored snapshot.
    let forcing: Vec<Vec<Complex64>> = stored
        .iter()
        .map(|&(s, state)| {
            let f = system.nonlinear_part(s, state)?;
            Ok(propagator.to_eigenbasis(&f))
        })
        .collect::<Result<_>>()?;
    let initial = propagator.to_eigenbasis(&system.initial_state);
    let haar = system.scheme.haar_weight();
    let n = system.size();

    sample_times
        .iter()
        .map(|&t| {
            let end = stored
                .iter()
                .position(|&(s, _)| s == t)
                .ok_or(Error::MissingState(t))?;
            let mut coefficients: Vec<Complex64> = initial
                .iter()
                .zip(propagator.eigenvalues())
                .map(|(c, &lambda)| c * semigroup_factor(lambda, t, system.mode))
                .collect();
            for j in 0..end {
                let (s0, s1) = (stored[j].0, stored[j + 1].0);
                let half = 0.5 * (s1 - s0);
                for k in 0..n {
                    let lambda = propagator.eigenvalues()[k];
                    coefficients[k] += (forcing[j][k]
                        * semigroup_factor(lambda, t - s0, system.mode)
                        + forcing[j + 1][k] * semigroup_factor(lambda, t - s1, system.mode))
                        * half;
                }
            }
            if end == 0 {
                // S(0) is the identity.
                return Ok(0.0);
            }
            let mild = propagator.from_eigenbasis_evolved(&coefficients, 0.0, system.mode);
            let diff: Vec<Complex64> = stored[end]
                .1
                .iter()
                .zip(&mild)
                .map(|(a, b)| a - b)
                .collect();
            Ok(l2_norm_sq_weighted(&diff, haar).sqrt())
        })
        .collect()
}
