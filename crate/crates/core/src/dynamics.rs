//! Right-hand sides of the quantum network
//!
//! ```text
//! i dPsi/dt = -J Psi + [p^{-l} sum_K W_{I,K} phi(Psi_K) + Z_I(t)]
//! ```
//!
//! and of its classical counterpart `du/dt = J u + p^{-l} W phi(u) + Z`,
//! together with the activations, coupling kernels `W` and bias signals `Z`
//! that parametrize them.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::CouplingOperator;
use crate::matrix::ComplexMatrix;
use crate::padic::{BallSpec, CellIndex, GroupScheme};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A real activation `phi`, extended to complex numbers componentwise:
/// `phi(a + ib) = phi(a) + i phi(b)`.
#[derive(Clone)]
pub enum Activation {
    /// `0.5 (|s + 1| - |s - 1|)`, the usual CNN clamp to `[-1, 1]`.
    Saturation,
    /// `0.5 (|s + 1| + |s - 1|)`, i.e. `max(1, |s|)`.
    PaperLiteral,
    Identity,
    Custom(CustomActivation),
}

#[derive(Clone)]
pub struct CustomActivation {
    pub name: String,
    pub function: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub lipschitz: f64,
    /// `sup |phi|` over the reals, if bounded.
    pub sup: Option<f64>,
}

impl Activation {
    pub fn apply_real(&self, s: f64) -> f64 {
        match self {
            // Same function as the formula, without its round-off.
            Activation::Saturation => s.clamp(-1.0, 1.0),
            Activation::PaperLiteral => 0.5 * ((s + 1.0).abs() + (s - 1.0).abs()),
            Activation::Identity => s,
            Activation::Custom(c) => (c.function)(s),
        }
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        Complex64::new(self.apply_real(z.re), self.apply_real(z.im))
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            Activation::Custom(c) => c.lipschitz,
            _ => 1.0,
        }
    }

    /// `sup |phi(s)|` over real `s`.
    pub fn sup_bound(&self) -> Option<f64> {
        match self {
            Activation::Saturation => Some(1.0),
            Activation::PaperLiteral | Activation::Identity => None,
            Activation::Custom(c) => c.sup,
        }
    }

    /// `sup |phi(z)|` over complex `z`; each component is bounded separately,
    /// so this is `sqrt(2)` times the real bound.
    pub fn complex_sup_bound(&self) -> Option<f64> {
        self.sup_bound().map(|s| SQRT_2 * s)
    }

    pub fn name(&self) -> &str {
        match self {
            Activation::Saturation => "saturation",
            Activation::PaperLiteral => "paper_literal",
            Activation::Identity => "identity",
            Activation::Custom(c) => &c.name,
        }
    }
}

impl fmt::Debug for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Activation({})", self.name())
    }
}

impl PartialEq for Activation {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Activation::Custom(a), Activation::Custom(b)) => Arc::ptr_eq(&a.function, &b.function),
            _ => std::mem::discriminant(self) == std::mem::discriminant(other),
        }
    }
}

pub fn apply_activation(act: &Activation, z: Complex64) -> Complex64 {
    act.apply(z)
}

/// The connection kernel `W(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub enum CouplingSpec {
    Zero,
    Constant(Complex64),
    /// Effective kernel `scale * matrix`.
    Matrix {
        matrix: ComplexMatrix,
        scale: f64,
    },
}

impl CouplingSpec {
    pub fn check(&self, scheme: &GroupScheme) -> Result<()> {
        match self {
            CouplingSpec::Zero => Ok(()),
            CouplingSpec::Constant(w) => {
                if w.is_finite() {
                    Ok(())
                } else {
                    Err(Error::config("coupling", "non-finite constant"))
                }
            }
            CouplingSpec::Matrix { matrix, scale } => {
                let n = scheme.size();
                if matrix.rows() != n || matrix.cols() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: if matrix.rows() != n {
                            matrix.rows()
                        } else {
                            matrix.cols()
                        },
                    });
                }
                if !scale.is_finite() || matrix.entries().iter().any(|w| !w.is_finite()) {
                    return Err(Error::config("coupling", "non-finite matrix entry"));
                }
                Ok(())
            }
        }
    }

    /// Haar-weighted `L^2(Z_p x Z_p)` norm of the step-function kernel.
    pub fn l2_norm(&self, scheme: &GroupScheme) -> f64 {
        match self {
            CouplingSpec::Zero => 0.0,
            CouplingSpec::Constant(w) => w.norm(),
            CouplingSpec::Matrix { matrix, scale } => {
                let w = scheme.haar_weight();
                let sum: f64 = matrix.entries().iter().map(|z| z.norm_sqr()).sum();
                scale.abs() * (w * w * sum).sqrt()
            }
        }
    }

    /// `||W(I, .)||_2` for every cell `I`.
    pub fn row_l2_norms(&self, scheme: &GroupScheme) -> Vec<f64> {
        let n = scheme.size();
        match self {
            CouplingSpec::Zero => vec![0.0; n],
            CouplingSpec::Constant(w) => vec![w.norm(); n],
            CouplingSpec::Matrix { matrix, scale } => (0..n)
                .map(|i| {
                    let sum: f64 = matrix.row(i).iter().map(|z| z.norm_sqr()).sum();
                    scale.abs() * (scheme.haar_weight() * sum).sqrt()
                })
                .collect(),
        }
    }

    fn apply_into(
        &self,
        act: &Activation,
        state: &[Complex64],
        haar: f64,
        phi: &mut [Complex64],
        out: &mut [Complex64],
    ) {
        match self {
            CouplingSpec::Zero => out.fill(ZERO),
            CouplingSpec::Constant(w0) => {
                let total = state.iter().fold(ZERO, |acc, &z| acc + act.apply(z));
                out.fill(w0 * total * haar);
            }
            CouplingSpec::Matrix { matrix, scale } => {
                for (f, &z) in phi.iter_mut().zip(state) {
                    *f = act.apply(z);
                }
                matrix.mul_into(phi, out);
                let factor = scale * haar;
                for o in out.iter_mut() {
                    *o *= factor;
                }
            }
        }
    }
}

/// `p^{-l} sum_K W_{I,K} phi(Psi_K)` for every cell `I`.
pub fn coupling_term(
    w: &CouplingSpec,
    act: &Activation,
    state: &[Complex64],
    scheme: &GroupScheme,
) -> Result<Vec<Complex64>> {
    w.check(scheme)?;
    check_len(state, scheme.size())?;
    let mut phi = vec![ZERO; state.len()];
    let mut out = vec![ZERO; state.len()];
    w.apply_into(act, state, scheme.haar_weight(), &mut phi, &mut out);
    Ok(out)
}

/// One bias component: `amplitude * sin(omega * pi * t) + offset` while
/// `t` lies in `[start, end)`, restricted to `mask` when present.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasTerm {
    pub amplitude: f64,
    pub omega: f64,
    pub start: f64,
    pub end: f64,
    pub mask: Option<BallSpec>,
    pub offset: f64,
}

impl BiasTerm {
    pub fn pulse(amplitude: f64, omega: f64, start: f64, end: f64) -> Self {
        Self {
            amplitude,
            omega,
            start,
            end,
            mask: None,
            offset: 0.0,
        }
    }

    /// A constant `value` switched on at `start` and never off.
    pub fn constant(value: f64, start: f64) -> Self {
        Self {
            amplitude: 0.0,
            omega: 0.0,
            start,
            end: f64::INFINITY,
            mask: None,
            offset: value,
        }
    }

    pub fn masked(mut self, ball: BallSpec) -> Self {
        self.mask = Some(ball);
        self
    }

    pub fn is_active(&self, t: f64) -> bool {
        self.start <= t && t < self.end
    }

    pub fn value(&self, t: f64) -> f64 {
        if !self.is_active(t) {
            return 0.0;
        }
        let wave = if self.amplitude == 0.0 {
            0.0
        } else {
            self.amplitude * (self.omega * PI * t).sin()
        };
        wave + self.offset
    }

    /// Upper bound of `|value(t)|` over all `t`.
    pub fn sup_abs(&self) -> f64 {
        self.amplitude.abs() + self.offset.abs()
    }
}

/// The space-time bias `Z(x, t)` as a sum of windowed terms.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BiasSignal {
    pub terms: Vec<BiasTerm>,
}

impl BiasSignal {
    pub fn new(terms: Vec<BiasTerm>) -> Self {
        Self { terms }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Spatially uniform constant `Z = value` for all `t >= 0`.
    pub fn constant(value: f64) -> Self {
        Self::new(vec![BiasTerm::constant(value, 0.0)])
    }

    pub fn is_zero(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.amplitude == 0.0 && t.offset == 0.0)
    }

    pub fn check(&self, scheme: &GroupScheme) -> Result<()> {
        for (i, term) in self.terms.iter().enumerate() {
            let finite = [term.amplitude, term.omega, term.start, term.offset]
                .iter()
                .all(|x| x.is_finite());
            if !finite || term.end.is_nan() {
                return Err(Error::config(format!("bias[{i}]"), "non-finite parameter"));
            }
            if term.end < term.start {
                return Err(Error::config(
                    format!("bias[{i}]"),
                    "window ends before it starts",
                ));
            }
            if let Some(ball) = term.mask {
                scheme
                    .check_ball(ball)
                    .map_err(|e| Error::config(format!("bias[{i}].mask"), e.to_string()))?;
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, cell: CellIndex, t: f64, scheme: &GroupScheme) -> Complex64 {
        let re: f64 = self
            .terms
            .iter()
            .filter(|term| term.mask.is_none_or(|ball| scheme.in_ball(ball, cell)))
            .map(|term| term.value(t))
            .sum();
        Complex64::new(re, 0.0)
    }

    /// Writes `Z(., t)` for every cell into `out`.
    pub fn fill(&self, t: f64, scheme: &GroupScheme, out: &mut [Complex64]) {
        out.fill(ZERO);
        for term in &self.terms {
            let v = term.value(t);
            if v == 0.0 {
                continue;
            }
            match term.mask {
                None => out.iter_mut().for_each(|o| o.re += v),
                Some(ball) => {
                    let step = scheme.pow(ball.level);
                    let start = ball.center.value() % step;
                    for i in (start..out.len()).step_by(step) {
                        out[i].re += v;
                    }
                }
            }
        }
    }

    /// `sup_t |Z_I(t)|` bounded termwise, for each cell.
    pub fn sup_abs_per_cell(&self, scheme: &GroupScheme) -> Vec<f64> {
        scheme
            .cells()
            .map(|cell| {
                self.terms
                    .iter()
                    .filter(|term| term.mask.is_none_or(|ball| scheme.in_ball(ball, cell)))
                    .map(BiasTerm::sup_abs)
                    .sum()
            })
            .collect()
    }
}

pub fn evaluate_bias(z: &BiasSignal, cell: CellIndex, t: f64, scheme: &GroupScheme) -> Complex64 {
    z.evaluate(cell, t, scheme)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialStateSpec {
    /// Normalized indicator of a ball: amplitude `p^{r/2}` on the ball of
    /// level `r`, so the Haar-weighted norm is 1.
    Ball(BallSpec),
    Uniform(Complex64),
    Zero,
}

pub fn initial_state(spec: InitialStateSpec, scheme: &GroupScheme) -> Result<Vec<Complex64>> {
    let n = scheme.size();
    match spec {
        InitialStateSpec::Zero => Ok(vec![ZERO; n]),
        InitialStateSpec::Uniform(z) => Ok(vec![z; n]),
        InitialStateSpec::Ball(ball) => {
            let members = scheme.ball_members(ball)?;
            let amplitude = (scheme.pow(ball.level) as f64).sqrt();
            let mut state = vec![ZERO; n];
            for c in members {
                state[c.value()] = Complex64::new(amplitude, 0.0);
            }
            Ok(state)
        }
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Quantum,
    Classical,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Quantum => "quantum",
            Mode::Classical => "classical",
        }
    }
}

/// Everything needed to evaluate the right-hand side of the network.
#[derive(Debug, Clone)]
pub struct NetworkSystem {
    pub scheme: GroupScheme,
    pub operator: CouplingOperator,
    pub mode: Mode,
    pub coupling: CouplingSpec,
    pub bias: BiasSignal,
    pub activation: Activation,
    pub initial_state: Vec<Complex64>,
}

impl NetworkSystem {
    pub fn new(
        operator: CouplingOperator,
        mode: Mode,
        coupling: CouplingSpec,
        bias: BiasSignal,
        activation: Activation,
        initial_state: Vec<Complex64>,
    ) -> Result<Self> {
        let scheme = *operator.scheme();
        if operator.side() != scheme.size() {
            return Err(Error::DimensionMismatch {
                expected: scheme.size(),
                found: operator.side(),
            });
        }
        check_len(&initial_state, scheme.size())?;
        coupling.check(&scheme)?;
        bias.check(&scheme)?;
        Ok(Self {
            scheme,
            operator,
            mode,
            coupling,
            bias,
            activation,
            initial_state,
        })
    }

    /// Quantum free walk (`W = 0`, `Z = 0`) from `initial_state`.
    pub fn free(operator: CouplingOperator, initial_state: Vec<Complex64>) -> Result<Self> {
        Self::new(
            operator,
            Mode::Quantum,
            CouplingSpec::Zero,
            BiasSignal::zero(),
            Activation::Saturation,
            initial_state,
        )
    }

    pub fn size(&self) -> usize {
        self.scheme.size()
    }

    pub fn is_free(&self) -> bool {
        self.coupling == CouplingSpec::Zero && self.bias.is_zero()
    }

    /// `dPsi/dt` at `(t, state)`.
    pub fn rhs(&self, t: f64, state: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(state, self.size())?;
        if let Some(cell) = state.iter().position(|z| !z.is_finite()) {
            return Err(Error::NonFinite { cell });
        }
        let mut ws = RhsWorkspace::new(self.size());
        let mut out = vec![ZERO; self.size()];
        self.rhs_into(t, state, &mut out, &mut ws);
        Ok(out)
    }

    /// Forcing `W phi(state) + Z(t)` (without the `-i` of the quantum form).
    fn forcing_into(
        &self,
        t: f64,
        state: &[Complex64],
        out: &mut [Complex64],
        phi: &mut [Complex64],
        bias: &mut [Complex64],
    ) {
        self.coupling
            .apply_into(&self.activation, state, self.scheme.haar_weight(), phi, out);
        if !self.bias.terms.is_empty() {
            self.bias.fill(t, &self.scheme, bias);
            for (o, z) in out.iter_mut().zip(bias.iter()) {
                *o += z;
            }
        }
    }

    /// The nonlinear part `F` of `dPsi/dt = A Psi + F(Psi)`: `-i (W phi + Z)`
    /// in quantum mode, `W phi + Z` in classical mode.
    pub fn nonlinear_part(&self, t: f64, state: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(state, self.size())?;
        let mut ws = RhsWorkspace::new(self.size());
        let mut out = vec![ZERO; self.size()];
        self.forcing_into(t, state, &mut out, &mut ws.phi, &mut ws.bias);
        if self.mode == Mode::Quantum {
            for o in out.iter_mut() {
                *o = Complex64::new(o.im, -o.re);
            }
        }
        Ok(out)
    }

    pub(crate) fn rhs_into(
        &self,
        t: f64,
        state: &[Complex64],
        out: &mut [Complex64],
        ws: &mut RhsWorkspace,
    ) {
        let has_forcing = self.coupling != CouplingSpec::Zero || !self.bias.terms.is_empty();
        let RhsWorkspace { phi, bias, forcing } = ws;
        if has_forcing {
            self.forcing_into(t, state, forcing, phi, bias);
        }
        self.operator.matrix().mul_complex_into(state, out);
        match (self.mode, has_forcing) {
            (Mode::Quantum, false) => {
                for o in out.iter_mut() {
                    *o = Complex64::new(-o.im, o.re);
                }
            }
            (Mode::Quantum, true) => {
                for (o, f) in out.iter_mut().zip(forcing.iter()) {
                    let a = *o - f;
                    *o = Complex64::new(-a.im, a.re);
                }
            }
            (Mode::Classical, false) => {}
            (Mode::Classical, true) => {
                for (o, f) in out.iter_mut().zip(forcing.iter()) {
                    *o += f;
                }
            }
        }
    }
}

pub(crate) struct RhsWorkspace {
    phi: Vec<Complex64>,
    bias: Vec<Complex64>,
    forcing: Vec<Complex64>,
}

impl RhsWorkspace {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            phi: vec![ZERO; n],
            bias: vec![ZERO; n],
            forcing: vec![ZERO; n],
        }
    }
}

fn check_len(state: &[Complex64], n: usize) -> Result<()> {
    if state.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: state.len(),
        });
    }
    Ok(())
}
