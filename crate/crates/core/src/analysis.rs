//! Observables and bound certificates.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::dynamics::NetworkSystem;
use crate::error::{Error, Result};
use crate::evolution::{symmetric_eigen, Trajectory};
use crate::kernel::CouplingOperator;
use crate::padic::GroupScheme;

/// Eigenvalues within this distance of zero count toward the kernel, and
/// eigenvalues above it count as positive.
pub const EIGEN_TOLERANCE: f64 = 1e-10;

/// Relative slack used by [`check_growth_bound`].
pub const GROWTH_TOLERANCE: f64 = 1e-9;

/// Haar-weighted `p^{-l} sum |Psi_I|^2`.
pub fn l2_norm_sq(state: &[Complex64], scheme: &GroupScheme) -> f64 {
    scheme.haar_weight() * state.iter().map(|z| z.norm_sqr()).sum::<f64>()
}

/// Worst-case relative round-off of [`l2_norm_sq`] on `n` cells: `n`
/// additions, one product per term and the Haar weight.
pub fn norm_sq_round_off(n: usize) -> f64 {
    (n + 2) as f64 * f64::EPSILON
}

pub fn density(state: &[Complex64]) -> Vec<f64> {
    state.iter().map(|z| z.norm_sqr()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub size: usize,
    pub symmetry_defect: f64,
    pub max_row_sum: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub positive_eigenvalues: usize,
    pub kernel_dimension: usize,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
}

impl SpectralReport {
    pub fn is_negative_semidefinite(&self) -> bool {
        self.positive_eigenvalues == 0
    }

    /// Flat `key=value` lines.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "size={}", self.size);
        let _ = writeln!(out, "symmetry_defect={:e}", self.symmetry_defect);
        let _ = writeln!(out, "max_row_sum={:e}", self.max_row_sum);
        let _ = writeln!(out, "min_eigenvalue={:?}", self.min_eigenvalue);
        let _ = writeln!(out, "max_eigenvalue={:?}", self.max_eigenvalue);
        let _ = writeln!(out, "positive_eigenvalues={}", self.positive_eigenvalues);
        let _ = writeln!(out, "kernel_dimension={}", self.kernel_dimension);
        let _ = writeln!(
            out,
            "negative_semidefinite={}",
            self.is_negative_semidefinite()
        );
        out
    }
}

/// Symmetry, row sums and spectrum of a built operator. Operators that are
/// not symmetric enough to diagonalize get NaN eigenvalue fields.
pub fn spectral_diagnostics(operator: &CouplingOperator) -> SpectralReport {
    let matrix = operator.matrix();
    let max_row_sum = (0..matrix.rows())
        .map(|i| matrix.row(i).iter().sum::<f64>().abs())
        .fold(0.0, f64::max);
    let symmetry_defect = matrix.symmetry_defect();
    let eigenvalues = symmetric_eigen(matrix)
        .map(|(values, _)| values)
        .unwrap_or_default();
    SpectralReport {
        size: matrix.rows(),
        symmetry_defect,
        max_row_sum,
        min_eigenvalue: eigenvalues.first().copied().unwrap_or(f64::NAN),
        max_eigenvalue: eigenvalues.last().copied().unwrap_or(f64::NAN),
        positive_eigenvalues: eigenvalues.iter().filter(|&&l| l > EIGEN_TOLERANCE).count(),
        kernel_dimension: eigenvalues
            .iter()
            .filter(|l| l.abs() <= EIGEN_TOLERANCE)
            .count(),
        eigenvalues,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCertificate {
    /// Bound on the generator norm.
    pub h0_norm_bound: f64,
    /// Lipschitz constant of the nonlinear part, `L_phi * ||W||_2`.
    pub lipschitz_f: f64,
    /// `p^{-l} sum_I (||W(I, .)||_2 ||phi||_inf + sup_t |Z_I|)^2`.
    pub c_f: f64,
    /// Complex sup-norm of the activation.
    pub activation_sup: f64,
}

impl BoundCertificate {
    /// `||Psi_0|| + t sqrt(C(F))`.
    pub fn growth_bound(&self, initial_norm: f64, t: f64) -> f64 {
        initial_norm + t * self.c_f.sqrt()
    }
}

pub fn compute_certificate(system: &NetworkSystem) -> Result<BoundCertificate> {
    let activation_sup = system
        .activation
        .complex_sup_bound()
        .ok_or(Error::UnboundedActivation)?;
    let scheme = &system.scheme;
    let rows = system.coupling.row_l2_norms(scheme);
    let bias = system.bias.sup_abs_per_cell(scheme);
    let sum: f64 = rows
        .iter()
        .zip(&bias)
        .map(|(w, z)| (w * activation_sup + z).powi(2))
        .sum();
    Ok(BoundCertificate {
        h0_norm_bound: system.operator.norm_bound(),
        lipschitz_f: system.activation.lipschitz() * system.coupling.l2_norm(scheme),
        c_f: scheme.haar_weight() * sum,
        activation_sup,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub passed: bool,
    pub checked: usize,
    /// Smallest `bound - ||Psi(t)||` seen (negative on failure).
    pub worst_margin: f64,
    pub worst_time: f64,
    pub violations: usize,
}

/// Checks `||Psi(t)|| <= ||Psi(0)|| + t sqrt(C(F))` at every recorded time,
/// with relative slack [`GROWTH_TOLERANCE`].
pub fn check_growth_bound(trajectory: &Trajectory, certificate: &BoundCertificate) -> GrowthReport {
    let mut report = GrowthReport {
        passed: true,
        checked: 0,
        worst_margin: f64::INFINITY,
        worst_time: 0.0,
        violations: 0,
    };
    let Some(&first) = trajectory.norm_sq.first() else {
        return report;
    };
    let initial = first.sqrt();
    for (&t, &n2) in trajectory.times.iter().zip(&trajectory.norm_sq) {
        let bound = certificate.growth_bound(initial, t);
        let norm = n2.sqrt();
        let margin = bound - norm;
        report.checked += 1;
        if margin < report.worst_margin {
            report.worst_margin = margin;
            report.worst_time = t;
        }
        if norm.is_nan() || norm > bound * (1.0 + GROWTH_TOLERANCE) + f64::MIN_POSITIVE {
            report.violations += 1;
            report.passed = false;
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{
        initial_state, Activation, BiasSignal, CouplingSpec, InitialStateSpec, Mode,
    };
    use crate::evolution::{evolve, IntegrationPlan};
    use crate::kernel::{build_convolution_operator, build_graph_operator};
    use crate::matrix::RealMatrix;
    use crate::padic::BallSpec;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn system(
        scheme: GroupScheme,
        coupling: CouplingSpec,
        bias: BiasSignal,
        act: Activation,
    ) -> NetworkSystem {
        let op = build_convolution_operator(2.5, scheme).unwrap();
        let init = initial_state(InitialStateSpec::Uniform(c(1.0, 0.0)), &scheme).unwrap();
        NetworkSystem::new(op, Mode::Quantum, coupling, bias, act, init).unwrap()
    }

    #[test]
    fn norms_of_standard_states() {
        let s = GroupScheme::new(3, 4).unwrap();
        let ball = initial_state(
            InitialStateSpec::Ball(BallSpec::new(s.cell(4).unwrap(), 2)),
            &s,
        )
        .unwrap();
        assert!((l2_norm_sq(&ball, &s) - 1.0).abs() < 1e-12);
        let uniform = vec![c(0.5, 0.3); s.size()];
        assert!((l2_norm_sq(&uniform, &s) - 0.34).abs() < 1e-12);
        assert_eq!(l2_norm_sq(&vec![c(0.0, 0.0); s.size()], &s), 0.0);
    }

    #[test]
    fn density_examples() {
        assert_eq!(density(&[c(1.0, 1.0), c(0.0, 0.0)]), vec![2.0, 0.0]);
        let psi = [c(0.3, -0.7), c(1.2, 0.1)];
        let rot = Complex64::from_polar(1.0, 0.9);
        let rotated: Vec<_> = psi.iter().map(|z| z * rot).collect();
        for (a, b) in density(&psi).iter().zip(density(&rotated)) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn norm_is_weighted_density_sum() {
        let s = GroupScheme::new(2, 3).unwrap();
        let psi: Vec<_> = (0..8).map(|k| c(k as f64 * 0.1, 1.0 - k as f64)).collect();
        let sum: f64 = density(&psi).iter().sum();
        assert_eq!(l2_norm_sq(&psi, &s), s.haar_weight() * sum);
    }

    #[test]
    fn two_cell_spectrum() {
        let op = build_convolution_operator(2.5, GroupScheme::new(2, 1).unwrap()).unwrap();
        let r = spectral_diagnostics(&op);
        // Trace of [[-a, a], [a, -a]] with a = 0.411612 gives the nonzero eigenvalue -2a.
        let a = op.matrix()[(0, 1)];
        assert!((r.eigenvalues[0] + 2.0 * a).abs() < 1e-14);
        assert!((r.eigenvalues[0] + 0.823223).abs() < 1e-6);
        assert!(r.eigenvalues[1].abs() < 1e-14);
        assert_eq!(r.kernel_dimension, 1);
        assert!(r.is_negative_semidefinite());
    }

    #[test]
    fn graph_spectra() {
        let s = GroupScheme::new(3, 1).unwrap();
        let empty = build_graph_operator(&RealMatrix::zeros(3, 3), s).unwrap();
        assert!(spectral_diagnostics(&empty)
            .eigenvalues
            .iter()
            .all(|&l| l == 0.0));

        let k3 = RealMatrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { 1.0 });
        let r = spectral_diagnostics(&build_graph_operator(&k3, s).unwrap());
        for (got, want) in r.eigenvalues.iter().zip([-1.0, -1.0, 0.0]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert_eq!(r.kernel_dimension, 1);
    }

    #[test]
    fn report_serializes_flat() {
        let op = build_convolution_operator(1.6, GroupScheme::new(2, 2).unwrap()).unwrap();
        let text = spectral_diagnostics(&op).to_key_value();
        assert!(text.lines().all(|l| l.split_once('=').is_some()));
        assert!(text.contains("kernel_dimension=1\n"));
        assert!(text.contains("negative_semidefinite=true\n"));
    }

    #[test]
    fn certificate_examples() {
        let s = GroupScheme::new(3, 2).unwrap();
        let cert = compute_certificate(&system(
            s,
            CouplingSpec::Zero,
            BiasSignal::constant(10.0),
            Activation::Saturation,
        ))
        .unwrap();
        assert!((cert.c_f - 100.0).abs() < 1e-10);
        assert_eq!(cert.lipschitz_f, 0.0);
        assert_eq!(cert.h0_norm_bound, 2.0);

        let free = compute_certificate(&system(
            s,
            CouplingSpec::Zero,
            BiasSignal::zero(),
            Activation::Saturation,
        ))
        .unwrap();
        assert_eq!((free.c_f, free.lipschitz_f), (0.0, 0.0));

        let w0 = 3.5;
        let cert = compute_certificate(&system(
            s,
            CouplingSpec::Constant(c(w0, 0.0)),
            BiasSignal::zero(),
            Activation::Saturation,
        ))
        .unwrap();
        assert!((cert.c_f - 2.0 * w0 * w0).abs() < 1e-10);
        assert!((cert.lipschitz_f - w0).abs() < 1e-12);
        assert!((cert.activation_sup - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn unbounded_activation_has_no_certificate() {
        let s = GroupScheme::new(2, 2).unwrap();
        let sys = system(
            s,
            CouplingSpec::Constant(c(1.0, 0.0)),
            BiasSignal::zero(),
            Activation::Identity,
        );
        assert!(matches!(
            compute_certificate(&sys),
            Err(Error::UnboundedActivation)
        ));
    }

    #[test]
    fn growth_bound_passes_and_negative_control_fails() {
        let s = GroupScheme::new(2, 3).unwrap();
        let sys = system(
            s,
            CouplingSpec::Zero,
            BiasSignal::constant(10.0),
            Activation::Saturation,
        );
        let cert = compute_certificate(&sys).unwrap();
        let traj = evolve(&sys, &IntegrationPlan::rk4(2.0, 1e-3)).unwrap();
        let report = check_growth_bound(&traj, &cert);
        assert!(report.passed, "{report:?}");
        assert_eq!(report.checked, traj.times.len());

        let mut corrupted = traj.clone();
        corrupted
            .norm_sq
            .iter_mut()
            .skip(1)
            .for_each(|n| *n *= 100.0);
        let report = check_growth_bound(&corrupted, &cert);
        assert!(!report.passed);
        assert!(report.worst_margin < 0.0);
    }

    #[test]
    fn free_evolution_saturates_trivially() {
        let s = GroupScheme::new(3, 2).unwrap();
        let sys = system(
            s,
            CouplingSpec::Zero,
            BiasSignal::zero(),
            Activation::Saturation,
        );
        let cert = compute_certificate(&sys).unwrap();
        let traj = evolve(&sys, &IntegrationPlan::rk4(1.0, 1e-2)).unwrap();
        let report = check_growth_bound(&traj, &cert);
        assert!(report.passed);
        assert!(report.worst_margin.abs() < 1e-12);
    }
}
