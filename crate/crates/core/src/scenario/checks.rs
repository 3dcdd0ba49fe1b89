//! Small-scale invariant and certificate checks, fast enough to run on every
//! invocation of `pqnn check`.

use num_complex::Complex64;

use crate::analysis::{
    check_growth_bound, compute_certificate, l2_norm_sq, norm_sq_round_off, spectral_diagnostics,
};
use crate::dynamics::{
    initial_state, Activation, BiasSignal, CouplingSpec, InitialStateSpec, Mode, NetworkSystem,
};
use crate::error::Result;
use crate::evolution::{evolve, FreePropagator, IntegrationPlan};
use crate::kernel::{build_convolution_operator, CouplingOperator, RadialKernel};
use crate::matrix::RealMatrix;
use crate::padic::{BallSpec, GroupScheme};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            name,
            passed,
            detail,
        }
    }
}

type Check = fn() -> Result<(bool, String)>;

pub fn run_checks() -> Vec<CheckOutcome> {
    let checks: [(&'static str, Check); 7] = [
        ("kernel_normalization", kernel_normalization),
        ("operator_structure", operator_structure),
        ("oracle_agreement", oracle_agreement),
        ("unitarity", unitarity),
        ("two_vertex_walk", two_vertex_walk),
        ("growth_certificate", growth_certificate),
        ("classical_dissipation", classical_dissipation),
    ];
    checks
        .into_iter()
        .map(|(name, check)| match check() {
            Ok((passed, detail)) => CheckOutcome::new(name, passed, detail),
            Err(e) => CheckOutcome::new(name, false, format!("error: {e}")),
        })
        .collect()
}

fn kernel_normalization() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for (p, l) in [(2, 4), (3, 3), (5, 2)] {
        for alpha in [1.2, 1.6, 2.5, 3.0] {
            let k = RadialKernel::j_alpha(alpha, GroupScheme::new(p, l)?)?;
            worst = worst.max((k.off_center_mass() + k.tail_average() - 1.0).abs());
        }
    }
    Ok((worst <= 1e-12, format!("max |mass - 1| = {worst:e}")))
}

fn operator_structure() -> Result<(bool, String)> {
    let mut ok = true;
    let mut worst_row = 0.0f64;
    for (p, l) in [(2, 5), (3, 3)] {
        let r = spectral_diagnostics(&build_convolution_operator(1.6, GroupScheme::new(p, l)?)?);
        ok &= r.symmetry_defect <= 1e-14 && r.max_row_sum <= 1e-12 && r.is_negative_semidefinite();
        ok &= r.kernel_dimension == 1;
        worst_row = worst_row.max(r.max_row_sum);
    }
    Ok((ok, format!("max |row sum| = {worst_row:e}")))
}

fn ball_state(p: u32, l: u32, center: usize, level: u32) -> Result<(GroupScheme, Vec<Complex64>)> {
    let s = GroupScheme::new(p, l)?;
    let psi = initial_state(
        InitialStateSpec::Ball(BallSpec::new(s.cell(center)?, level)),
        &s,
    )?;
    Ok((s, psi))
}

fn oracle_agreement() -> Result<(bool, String)> {
    let (s, psi) = ball_state(3, 3, 4, 1)?;
    let op = build_convolution_operator(2.5, s)?;
    let sys = NetworkSystem::free(op.clone(), psi.clone())?;
    let traj = evolve(
        &sys,
        &IntegrationPlan::rk4(2.0, 1e-3)
            .with_stride(100)
            .with_states(),
    )?;
    let prop = FreePropagator::new(&op)?;
    let mut worst = 0.0f64;
    for snap in &traj.snapshots {
        let exact = prop.propagate(&psi, snap.time, Mode::Quantum);
        let state = snap.state.as_deref().unwrap_or_default();
        let diff: Vec<Complex64> = state.iter().zip(&exact).map(|(a, b)| a - b).collect();
        worst = worst.max(l2_norm_sq(&diff, &s).sqrt());
    }
    Ok((worst <= 1e-8, format!("sup error = {worst:e}")))
}

fn unitarity() -> Result<(bool, String)> {
    let (s, psi) = ball_state(3, 4, 4, 2)?;
    let sys = NetworkSystem::free(build_convolution_operator(2.5, s)?, psi)?;
    let traj = evolve(&sys, &IntegrationPlan::rk4(5.0, 1e-3))?;
    let drift = traj
        .norm_sq
        .iter()
        .map(|n| (n - 1.0).abs())
        .fold(0.0, f64::max);
    Ok((drift <= 1e-6, format!("max |norm^2 - 1| = {drift:e}")))
}

fn two_vertex_walk() -> Result<(bool, String)> {
    let m = RealMatrix::from_rows(&[vec![-0.5, 0.5], vec![0.5, -0.5]])?;
    let op = CouplingOperator::from_matrix(GroupScheme::new(2, 1)?, m)?;
    let prop = FreePropagator::new(&op)?;
    let psi = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let mut worst = 0.0f64;
    for k in 0..=100 {
        let t = 4.0 * std::f64::consts::PI * k as f64 / 100.0;
        let out = prop.propagate(&psi, t, Mode::Quantum);
        worst = worst
            .max((out[0].norm_sqr() - (t / 2.0).cos().powi(2)).abs())
            .max((out[1].norm_sqr() - (t / 2.0).sin().powi(2)).abs());
    }
    Ok((worst <= 1e-8, format!("max density error = {worst:e}")))
}

fn growth_certificate() -> Result<(bool, String)> {
    let (s, psi) = ball_state(3, 3, 4, 2)?;
    let sys = NetworkSystem::new(
        build_convolution_operator(2.5, s)?,
        Mode::Quantum,
        CouplingSpec::Constant(Complex64::new(50.0, 0.0)),
        BiasSignal::constant(10.0),
        Activation::Saturation,
        psi,
    )?;
    let cert = compute_certificate(&sys)?;
    let report = check_growth_bound(&evolve(&sys, &IntegrationPlan::rk4(2.0, 1e-3))?, &cert);
    Ok((
        report.passed,
        format!(
            "C(F) = {:?}, worst margin = {:e}",
            cert.c_f, report.worst_margin
        ),
    ))
}

fn classical_dissipation() -> Result<(bool, String)> {
    let s = GroupScheme::new(2, 4)?;
    let u0: Vec<Complex64> = (0..16)
        .map(|k| Complex64::new(((k * 5) % 7) as f64 - 3.0, 0.0))
        .collect();
    let mean = u0.iter().map(|z| z.re).sum::<f64>() / 16.0;
    let sys = NetworkSystem::new(
        build_convolution_operator(2.5, s)?,
        Mode::Classical,
        CouplingSpec::Zero,
        BiasSignal::zero(),
        Activation::Saturation,
        u0,
    )?;
    let traj = evolve(&sys, &IntegrationPlan::rk4(30.0, 1e-2))?;
    let slack = norm_sq_round_off(s.size());
    let monotone = traj
        .norm_sq
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + slack));
    let gap = traj
        .final_state
        .iter()
        .map(|z| (z - mean).norm())
        .fold(0.0, f64::max);
    Ok((
        monotone && gap <= 1e-6,
        format!("distance to mean = {gap:e}"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for outcome in run_checks() {
            assert!(outcome.passed, "{outcome:?}");
        }
    }
}
