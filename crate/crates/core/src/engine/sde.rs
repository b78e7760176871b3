use crate::C64;

/// How the Itô-to-Stratonovich drift correction is obtained for a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StratonovichTerm {
    /// The correction vanishes identically (additive noise, or couplings that
    /// only depend on noiseless variables).
    Zero,
    /// The model supplies it through [`SdeModel::analytic_correction`].
    Analytic,
    /// Central finite differences along each noise column.
    FiniteDifference,
}

/// Itô SDE `dX = a(X, t) dt + B(X, t) dW` over complex state variables and
/// real Wiener increments.
///
/// Drift and coupling must be pure functions of their inputs. Couplings are
/// assumed holomorphic in the state, which is the case for positive-P
/// equations, so complex directional derivatives can be taken along the noise
/// columns themselves.
pub trait SdeModel: Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn n_noises(&self) -> usize;

    fn drift(&self, state: &[C64], t: f64, out: &mut [C64]);

    /// Writes `B(state, t) · dw` into `out`.
    fn noise_increment(&self, state: &[C64], t: f64, dw: &[f64], out: &mut [C64]);

    /// Column `k` of `B(state, t)`.
    fn noise_column(&self, state: &[C64], t: f64, k: usize, out: &mut [C64]) {
        let mut dw = vec![0.0; self.n_noises()];
        dw[k] = 1.0;
        self.noise_increment(state, t, &dw, out);
    }

    /// Full `dim × n_noises` coupling matrix, row-major.
    fn noise_matrix(&self, state: &[C64], t: f64) -> Vec<C64> {
        let (dim, m) = (self.dim(), self.n_noises());
        let mut mat = vec![C64::new(0.0, 0.0); dim * m];
        let mut col = vec![C64::new(0.0, 0.0); dim];
        for k in 0..m {
            self.noise_column(state, t, k, &mut col);
            for i in 0..dim {
                mat[i * m + k] = col[i];
            }
        }
        mat
    }

    fn stratonovich_term(&self) -> StratonovichTerm {
        StratonovichTerm::FiniteDifference
    }

    /// Adds `-1/2 Σ_k (∂B_k/∂x) B_k` to `out`. Only called when
    /// [`SdeModel::stratonovich_term`] returns `Analytic`.
    fn analytic_correction(&self, _state: &[C64], _t: f64, _out: &mut [C64]) {}

    /// Whether the drift splits into an exactly solvable linear part plus a
    /// remainder. Stiff linear terms (spectral dispersion, say) are then
    /// propagated exactly in a Strang splitting around the midpoint stage.
    fn has_linear_split(&self) -> bool {
        false
    }

    /// Propagates `state` under the linear part alone for a time `h`.
    fn apply_linear(&self, _state: &mut [C64], _h: f64) {}

    /// Drift minus the linear part handled by [`SdeModel::apply_linear`].
    fn drift_remainder(&self, state: &[C64], t: f64, out: &mut [C64]) {
        self.drift(state, t, out)
    }
}

/// Relative step of the finite-difference Stratonovich correction.
const FD_REL_STEP: f64 = 1e-6;

/// Adds the Stratonovich correction `-1/2 Σ_k (∂B_k/∂x)·B_k` to `out`.
pub(crate) fn add_stratonovich_correction<M: SdeModel + ?Sized>(
    model: &M,
    state: &[C64],
    t: f64,
    out: &mut [C64],
) {
    match model.stratonovich_term() {
        StratonovichTerm::Zero => {}
        StratonovichTerm::Analytic => model.analytic_correction(state, t, out),
        StratonovichTerm::FiniteDifference => {
            let dim = model.dim();
            let scale = state.iter().map(|z| z.norm()).fold(1.0, f64::max);
            let mut col = vec![C64::new(0.0, 0.0); dim];
            let mut plus = vec![C64::new(0.0, 0.0); dim];
            let mut minus = vec![C64::new(0.0, 0.0); dim];
            let mut shifted = state.to_vec();
            for k in 0..model.n_noises() {
                model.noise_column(state, t, k, &mut col);
                let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if norm == 0.0 {
                    continue;
                }
                let h = FD_REL_STEP * scale / norm;
                for i in 0..dim {
                    shifted[i] = state[i] + col[i] * h;
                }
                model.noise_column(&shifted, t, k, &mut plus);
                for i in 0..dim {
                    shifted[i] = state[i] - col[i] * h;
                }
                model.noise_column(&shifted, t, k, &mut minus);
                for i in 0..dim {
                    out[i] -= (plus[i] - minus[i]) / (4.0 * h);
                }
            }
        }
    }
}

/// A step produced a non-finite value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Diverged;

/// Reusable buffers for the semi-implicit midpoint scheme.
///
/// The midpoint `x_mid = x + ½[a_S(x_mid) dt + B(x_mid) dW]` is found by
/// fixed-point iteration, then `x_new = 2 x_mid − x`. `a_S` is the
/// Stratonovich-corrected drift. Models with a linear split get half a step
/// of exact linear propagation on either side of the midpoint stage, which
/// then only sees the drift remainder.
#[derive(Debug, Clone)]
pub struct SemiImplicitStepper {
    iterations: usize,
    mid: Vec<C64>,
    drift: Vec<C64>,
    noise: Vec<C64>,
}

impl SemiImplicitStepper {
    pub fn new(dim: usize, iterations: usize) -> Self {
        let zero = C64::new(0.0, 0.0);
        Self {
            iterations: iterations.max(1),
            mid: vec![zero; dim],
            drift: vec![zero; dim],
            noise: vec![zero; dim],
        }
    }

    pub fn step<M: SdeModel + ?Sized>(
        &mut self,
        model: &M,
        state: &mut [C64],
        t: f64,
        dt: f64,
        dw: &[f64],
    ) -> Result<(), Diverged> {
        let t_mid = t + 0.5 * dt;
        let split = model.has_linear_split();
        if split {
            model.apply_linear(state, 0.5 * dt);
        }
        self.mid.copy_from_slice(state);
        for _ in 0..self.iterations {
            if split {
                model.drift_remainder(&self.mid, t_mid, &mut self.drift);
            } else {
                model.drift(&self.mid, t_mid, &mut self.drift);
            }
            add_stratonovich_correction(model, &self.mid, t_mid, &mut self.drift);
            model.noise_increment(&self.mid, t_mid, dw, &mut self.noise);
            for i in 0..state.len() {
                self.mid[i] = state[i] + 0.5 * (self.drift[i] * dt + self.noise[i]);
            }
        }
        for i in 0..state.len() {
            let next = 2.0 * self.mid[i] - state[i];
            if !(next.re.is_finite() && next.im.is_finite()) {
                return Err(Diverged);
            }
            state[i] = next;
        }
        if split {
            model.apply_linear(state, 0.5 * dt);
            if state
                .iter()
                .any(|z| !(z.re.is_finite() && z.im.is_finite()))
            {
                return Err(Diverged);
            }
        }
        Ok(())
    }
}

/// One semi-implicit midpoint step from `state` at time `t`.
///
/// `dw` holds one real Wiener increment per noise channel, each `N(0, dt)`.
pub fn step_semi_implicit<M: SdeModel + ?Sized>(
    state: &[C64],
    model: &M,
    t: f64,
    dt: f64,
    dw: &[f64],
    iterations: usize,
) -> Result<Vec<C64>, Diverged> {
    let mut next = state.to_vec();
    SemiImplicitStepper::new(state.len(), iterations).step(model, &mut next, t, dt, dw)?;
    Ok(next)
}

/// `dX = −γ X dt + √q dW` on a single complex variable with one real channel.
///
/// Stationary variance of `Re X` is `q / 2γ`.
#[derive(Debug, Clone)]
pub struct OrnsteinUhlenbeck {
    pub gamma: f64,
    pub q: f64,
}

impl SdeModel for OrnsteinUhlenbeck {
    fn name(&self) -> &str {
        "ornstein-uhlenbeck"
    }
    fn dim(&self) -> usize {
        1
    }
    fn n_noises(&self) -> usize {
        1
    }
    fn drift(&self, state: &[C64], _t: f64, out: &mut [C64]) {
        out[0] = -self.gamma * state[0];
    }
    fn noise_increment(&self, _state: &[C64], _t: f64, dw: &[f64], out: &mut [C64]) {
        out[0] = C64::new(self.q.sqrt() * dw[0], 0.0);
    }
    fn stratonovich_term(&self) -> StratonovichTerm {
        StratonovichTerm::Zero
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Decay;
    impl SdeModel for Decay {
        fn name(&self) -> &str {
            "decay"
        }
        fn dim(&self) -> usize {
            1
        }
        fn n_noises(&self) -> usize {
            1
        }
        fn drift(&self, s: &[C64], _t: f64, out: &mut [C64]) {
            out[0] = -s[0];
        }
        fn noise_increment(&self, _s: &[C64], _t: f64, _dw: &[f64], out: &mut [C64]) {
            out[0] = C64::new(0.0, 0.0);
        }
    }

    /// Geometric noise `dX = X dW`: Stratonovich correction is −X/2.
    struct Geometric;
    impl SdeModel for Geometric {
        fn name(&self) -> &str {
            "geometric"
        }
        fn dim(&self) -> usize {
            1
        }
        fn n_noises(&self) -> usize {
            1
        }
        fn drift(&self, _s: &[C64], _t: f64, out: &mut [C64]) {
            out[0] = C64::new(0.0, 0.0);
        }
        fn noise_increment(&self, s: &[C64], _t: f64, dw: &[f64], out: &mut [C64]) {
            out[0] = s[0] * dw[0];
        }
    }

    #[test]
    fn deterministic_linear_decay() {
        let mut x = vec![C64::new(1.0, 0.0)];
        let mut stepper = SemiImplicitStepper::new(1, 3);
        let dt = 1e-3;
        for n in 0..1000 {
            stepper
                .step(&Decay, &mut x, n as f64 * dt, dt, &[0.0])
                .unwrap();
        }
        assert!((x[0].re - (-1.0f64).exp()).abs() < 1e-5, "{}", x[0]);
    }

    /// `dx = (−iω − μ) x dt` with the fast rotation handled by the exact split.
    struct SplitRotation {
        omega: f64,
        mu: f64,
    }
    impl SdeModel for SplitRotation {
        fn name(&self) -> &str {
            "split-rotation"
        }
        fn dim(&self) -> usize {
            1
        }
        fn n_noises(&self) -> usize {
            1
        }
        fn drift(&self, s: &[C64], _t: f64, out: &mut [C64]) {
            out[0] = C64::new(-self.mu, -self.omega) * s[0];
        }
        fn noise_increment(&self, _s: &[C64], _t: f64, _dw: &[f64], out: &mut [C64]) {
            out[0] = C64::new(0.0, 0.0);
        }
        fn has_linear_split(&self) -> bool {
            true
        }
        fn apply_linear(&self, s: &mut [C64], h: f64) {
            s[0] *= C64::new(0.0, -self.omega * h).exp();
        }
        fn drift_remainder(&self, s: &[C64], _t: f64, out: &mut [C64]) {
            out[0] = -self.mu * s[0];
        }
    }

    #[test]
    fn linear_split_handles_stiff_part_exactly() {
        // ω·dt = 5: the plain fixed-point iteration would not converge.
        let model = SplitRotation {
            omega: 500.0,
            mu: 1.0,
        };
        let mut x = vec![C64::new(1.0, 0.0)];
        let mut stepper = SemiImplicitStepper::new(1, 3);
        let dt = 0.01;
        for n in 0..100 {
            stepper
                .step(&model, &mut x, n as f64 * dt, dt, &[0.0])
                .unwrap();
        }
        let exact = C64::new(-1.0, -500.0).exp();
        assert!((x[0] - exact).norm() < 1e-4, "{} vs {exact}", x[0]);
    }

    #[test]
    fn zero_model_is_identity() {
        let ou = OrnsteinUhlenbeck { gamma: 0.0, q: 0.0 };
        let x = [C64::new(0.3, -0.7)];
        let next = step_semi_implicit(&x, &ou, 0.0, 0.1, &[0.5], 3).unwrap();
        assert_eq!(next[0], x[0]);
    }

    #[test]
    fn finite_difference_correction_matches_analytic_geometric() {
        let x = [C64::new(0.8, 0.3)];
        let mut out = [C64::new(0.0, 0.0)];
        add_stratonovich_correction(&Geometric, &x, 0.0, &mut out);
        let expected = -0.5 * x[0];
        assert!(
            (out[0] - expected).norm() < 1e-8,
            "{} vs {}",
            out[0],
            expected
        );
    }

    #[test]
    fn additive_noise_has_no_correction() {
        // State-independent coupling: the finite-difference route must return zero too.
        struct Additive;
        impl SdeModel for Additive {
            fn name(&self) -> &str {
                "additive"
            }
            fn dim(&self) -> usize {
                2
            }
            fn n_noises(&self) -> usize {
                2
            }
            fn drift(&self, _s: &[C64], _t: f64, out: &mut [C64]) {
                out.fill(C64::new(0.0, 0.0));
            }
            fn noise_increment(&self, _s: &[C64], _t: f64, dw: &[f64], out: &mut [C64]) {
                out[0] = C64::new(dw[0], dw[1]);
                out[1] = C64::new(0.5 * dw[1], 0.0);
            }
        }
        let x = [C64::new(3.0, 1.0), C64::new(-2.0, 0.5)];
        let mut out = [C64::new(0.0, 0.0); 2];
        add_stratonovich_correction(&Additive, &x, 0.0, &mut out);
        assert!(out.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn nonfinite_step_reports_divergence() {
        struct Blowup;
        impl SdeModel for Blowup {
            fn name(&self) -> &str {
                "blowup"
            }
            fn dim(&self) -> usize {
                1
            }
            fn n_noises(&self) -> usize {
                1
            }
            fn drift(&self, s: &[C64], _t: f64, out: &mut [C64]) {
                out[0] = s[0] * s[0] * 1e300;
            }
            fn noise_increment(&self, _s: &[C64], _t: f64, _dw: &[f64], out: &mut [C64]) {
                out[0] = C64::new(0.0, 0.0);
            }
        }
        let r = step_semi_implicit(&[C64::new(1e10, 0.0)], &Blowup, 0.0, 1.0, &[0.0], 3);
        assert_eq!(r, Err(Diverged));
    }
}
