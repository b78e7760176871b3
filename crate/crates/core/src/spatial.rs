//! One-dimensional translational symmetry breaking in a large-aperture
//! degenerate OPO.
//!
//! Fields live on a periodic grid of `n_grid` points with a spectral
//! Laplacian. The full model carries pump and signal with their positive-P
//! partners; fluctuation analysis and the Monte-Carlo checks use the model
//! with the pump adiabatically eliminated, whose stationary stripes are
//! found by Newton iteration and linearized into a biorthonormal
//! eigensystem. The Goldstone adjoint mode of that eigensystem gives the
//! diffusion coefficient of the pattern position.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rustfft::{Fft, FftPlanner};

use crate::csv::Table;
use crate::engine::{SdeModel, StratonovichTerm};
use crate::linalg::{eig_biorthonormal, EigenSystem};
use crate::{Error, Result, C64};

const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// Minimum number of grid points per signal diffraction length.
pub const MIN_POINTS_PER_LENGTH: f64 = 8.0;

/// Parameters of the spatial DOPO on a periodic domain.
///
/// Rates are `1/time`, `l_p` and `l_s` are diffraction lengths, `chi` the
/// coupling and `ep` the (real) pump drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialParams {
    pub gamma_p: f64,
    pub gamma_s: f64,
    pub delta_p: f64,
    pub delta_s: f64,
    pub l_p: f64,
    pub l_s: f64,
    pub chi: f64,
    pub ep: f64,
    pub l_domain: f64,
    pub n_grid: usize,
}

impl SpatialParams {
    /// Near-threshold stripe regime: `γ_s = l_s = 1`, `δ_s = −1`, pump decay
    /// `γ_p = 100 γ_s` and a large pump detuning `δ_p = 10³ γ_p`, which
    /// makes the eliminated nonlinearity almost conservative. The pump is
    /// set so that the parametric gain `|m| = 1.1` and the domain holds one
    /// critical wavelength sampled by 64 points.
    pub fn stripe_default(chi: f64) -> Self {
        let (gamma_s, gamma_p, delta_p, delta_s, l_s) = (1.0, 100.0, 1e5, -1.0, 1.0);
        let gain = 1.1;
        let ep = gain * gamma_s * C64::new(gamma_p, delta_p).norm() / chi;
        let k_c = (-delta_s / gamma_s).sqrt() / l_s;
        Self {
            gamma_p,
            gamma_s,
            delta_p,
            delta_s,
            l_p: 0.0,
            l_s,
            chi,
            ep,
            l_domain: 2.0 * std::f64::consts::PI / k_c,
            n_grid: 64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gamma_p", self.gamma_p),
            ("gamma_s", self.gamma_s),
            ("l_s", self.l_s),
            ("chi", self.chi),
            ("l_domain", self.l_domain),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("delta_p", self.delta_p),
            ("l_p", self.l_p),
            ("ep", self.ep),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        if self.l_p < 0.0 {
            return Err(Error::InvalidParameter("l_p must be non-negative".into()));
        }
        if !(self.delta_s != 0.0 && self.delta_s.is_finite()) {
            return Err(Error::InvalidParameter(
                "delta_s must be non-zero (kappa finite)".into(),
            ));
        }
        if self.n_grid < 4 || !self.n_grid.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "n_grid must be a power of two ≥ 4, got {}",
                self.n_grid
            )));
        }
        let per_length = self.l_s / self.dx();
        if per_length < MIN_POINTS_PER_LENGTH {
            return Err(Error::UnderResolved(format!(
                "l_s spans {per_length:.2} grid points, need at least {MIN_POINTS_PER_LENGTH}"
            )));
        }
        Ok(())
    }

    pub fn kappa(&self) -> f64 {
        (2.0 * self.gamma_s).sqrt() * self.delta_s.abs() / self.chi
    }

    pub fn dx(&self) -> f64 {
        self.l_domain / self.n_grid as f64
    }

    /// Grid coordinate of node `j`; node `n/2` sits at `x = 0`.
    pub fn x(&self, j: usize) -> f64 {
        (j as f64 - (self.n_grid / 2) as f64) * self.dx()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n_grid).map(|j| self.x(j)).collect()
    }

    /// Homogeneous pump-only solution `A₀ = E_p / (γ_p + iδ_p)`.
    pub fn pump_only(&self) -> C64 {
        C64::new(self.ep, 0.0) / C64::new(self.gamma_p, self.delta_p)
    }

    /// Normalized parametric gain `m = χ A₀ / γ_s` of the pump-only state;
    /// uniform below threshold means `|m| < 1`.
    pub fn gain(&self) -> C64 {
        self.chi * self.pump_only() / self.gamma_s
    }

    /// Critical wavenumber of the stripe instability, `√(−δ_s/γ_s)/l_s`,
    /// or zero when `δ_s > 0` (homogeneous emission).
    pub fn critical_wavenumber(&self) -> f64 {
        if self.delta_s < 0.0 {
            (-self.delta_s / self.gamma_s).sqrt() / self.l_s
        } else {
            0.0
        }
    }
}

/// Spectral operations on the periodic grid. Plans are immutable and shared.
#[derive(Clone)]
pub struct Spectral {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    k: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("n", &self.n).finish()
    }
}

impl Spectral {
    pub fn new(n: usize, l_domain: f64) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let k = (0..n)
            .map(|j| {
                let m = if j <= n / 2 {
                    j as f64
                } else {
                    j as f64 - n as f64
                };
                2.0 * std::f64::consts::PI * m / l_domain
            })
            .collect();
        Self {
            n,
            forward,
            inverse,
            k,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    /// Applies the Fourier multiplier `m(k_j)` (by FFT index) to `f` in place.
    pub fn apply(&self, f: &mut [C64], mut m: impl FnMut(usize, f64) -> C64) {
        self.forward.process(f);
        let scale = 1.0 / self.n as f64;
        for (j, z) in f.iter_mut().enumerate() {
            *z *= m(j, self.k[j]) * scale;
        }
        self.inverse.process(f);
    }

    pub fn laplacian(&self, f: &[C64]) -> Vec<C64> {
        let mut out = f.to_vec();
        self.apply(&mut out, |_, k| C64::new(-k * k, 0.0));
        out
    }

    /// Spectral first derivative. The Nyquist component is dropped so that
    /// the derivative of a real field stays real.
    pub fn derivative(&self, f: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut out = f.to_vec();
        self.apply(&mut out, |j, k| if 2 * j == n { ZERO } else { I * k });
        out
    }

    /// Band-limited translate `f(x − s)`.
    pub fn shift(&self, f: &[C64], s: f64) -> Vec<C64> {
        self.shift_complex(f, C64::new(s, 0.0))
    }

    /// Translate by a complex displacement: the analytic continuation of
    /// the band-limited interpolant, as needed for positive-P positions.
    pub fn shift_complex(&self, f: &[C64], s: C64) -> Vec<C64> {
        let n = self.n;
        let mut out = f.to_vec();
        self.apply(&mut out, |j, k| {
            if 2 * j == n {
                (k * s).cos()
            } else {
                (-I * k * s).exp()
            }
        });
        out
    }

    /// Dense real matrix of the spectral second derivative.
    pub fn laplacian_matrix(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut m = DMatrix::zeros(n, n);
        for c in 0..n {
            let mut e = vec![ZERO; n];
            e[c] = C64::new(1.0, 0.0);
            let col = self.laplacian(&e);
            for r in 0..n {
                m[(r, c)] = col[r].re;
            }
        }
        m
    }
}

/// The four fields of the spatial model on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState1D {
    pub a0: Vec<C64>,
    pub a0p: Vec<C64>,
    pub a: Vec<C64>,
    pub ap: Vec<C64>,
}

impl FieldState1D {
    pub fn zeros(n: usize) -> Self {
        Self {
            a0: vec![ZERO; n],
            a0p: vec![ZERO; n],
            a: vec![ZERO; n],
            ap: vec![ZERO; n],
        }
    }

    /// Classical state with signal `a` and the pump slaved to it.
    pub fn slaved(p: &SpatialParams, a: &[C64]) -> Self {
        let spec = Spectral::new(p.n_grid, p.l_domain);
        let ap: Vec<C64> = a.iter().map(|z| z.conj()).collect();
        let a0 = slaved_pump(p, &spec, a, false);
        let a0p = slaved_pump(p, &spec, &ap, true);
        Self {
            a0,
            a0p,
            a: a.to_vec(),
            ap,
        }
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Layout `[A₀ | A₀⁺ | A | A⁺]`.
    pub fn to_vec(&self) -> Vec<C64> {
        [&self.a0[..], &self.a0p[..], &self.a[..], &self.ap[..]].concat()
    }

    pub fn from_slice(s: &[C64]) -> Self {
        let n = s.len() / 4;
        Self {
            a0: s[..n].to_vec(),
            a0p: s[n..2 * n].to_vec(),
            a: s[2 * n..3 * n].to_vec(),
            ap: s[3 * n..].to_vec(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vec()
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Pump slaved to the signal: `(γ_p + iδ_p − iγ_p l_p² ∂²) A₀ = E_p − χA²/2`,
/// solved spectrally. `partner` selects the conjugate-coefficient equation
/// for `A₀⁺`.
pub fn slaved_pump(p: &SpatialParams, spec: &Spectral, a: &[C64], partner: bool) -> Vec<C64> {
    let mut rhs: Vec<C64> = a.iter().map(|z| p.ep - 0.5 * p.chi * z * z).collect();
    let sign = if partner { -1.0 } else { 1.0 };
    if p.l_p == 0.0 {
        let g = 1.0 / C64::new(p.gamma_p, sign * p.delta_p);
        rhs.iter_mut().for_each(|z| *z *= g);
        return rhs;
    }
    let (gp, dp, lp2) = (p.gamma_p, p.delta_p, p.l_p * p.l_p);
    spec.apply(&mut rhs, |_, k| {
        1.0 / C64::new(gp, sign * (dp + gp * lp2 * k * k))
    });
    rhs
}

/// Diagonal element of the slaved-pump Green's operator,
/// `(1/n) Σ_k 1/(γ_p + iδ_p + iγ_p l_p² k²)`: the local response `∂A₀_j/∂(−χA_j²/2)`.
fn pump_green_diagonal(p: &SpatialParams, spec: &Spectral, partner: bool) -> C64 {
    let sign = if partner { -1.0 } else { 1.0 };
    let lp2 = p.l_p * p.l_p;
    let sum: C64 = spec
        .wavenumbers()
        .iter()
        .map(|k| 1.0 / C64::new(p.gamma_p, sign * (p.delta_p + p.gamma_p * lp2 * k * k)))
        .sum();
    sum / spec.len() as f64
}

/// Fourier factors `e^{h·(−(γ_s + iδ_s) − iγ_s l_s² k²)}` of the exact
/// linear signal step (conjugate coefficients for the partner field).
fn signal_propagator(p: &SpatialParams, spec: &Spectral, h: f64, partner: bool) -> Vec<C64> {
    let sign = if partner { -1.0 } else { 1.0 };
    let ls2 = p.l_s * p.l_s;
    spec.wavenumbers()
        .iter()
        .map(|k| (C64::new(-p.gamma_s, -sign * (p.delta_s + p.gamma_s * ls2 * k * k)) * h).exp())
        .collect()
}

/// Full four-field positive-P model.
///
/// ```text
/// dA₀ = [E_p − (γ_p + iδ_p − iγ_p l_p² ∂²) A₀ − (χ/2) A²] dt
/// dA  = [−(γ_s + iδ_s − iγ_s l_s² ∂²) A + χ A₀ A⁺] dt + √(χA₀) dW
/// ```
///
/// and the partner equations with conjugated coefficients. The noises are
/// real, white in space and time: per cell, `dW_j ~ N(0, dt/dx)`. The
/// diffraction terms are propagated exactly in Fourier space.
#[derive(Debug, Clone)]
pub struct SpatialModel {
    params: SpatialParams,
    spec: Spectral,
}

pub fn spatial_model(params: &SpatialParams) -> Result<SpatialModel> {
    params.validate()?;
    Ok(SpatialModel {
        params: *params,
        spec: Spectral::new(params.n_grid, params.l_domain),
    })
}

impl SpatialModel {
    pub fn params(&self) -> &SpatialParams {
        &self.params
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spec
    }

    fn local_drift(&self, s: &[C64], out: &mut [C64]) {
        let p = &self.params;
        let n = p.n_grid;
        let (a0, rest) = s.split_at(n);
        let (a0p, rest) = rest.split_at(n);
        let (a, ap) = rest.split_at(n);
        let cp = C64::new(p.gamma_p, p.delta_p);
        let cs = C64::new(p.gamma_s, p.delta_s);
        for j in 0..n {
            out[j] = p.ep - cp * a0[j] - 0.5 * p.chi * a[j] * a[j];
            out[n + j] = p.ep - cp.conj() * a0p[j] - 0.5 * p.chi * ap[j] * ap[j];
            out[2 * n + j] = -cs * a[j] + p.chi * a0[j] * ap[j];
            out[3 * n + j] = -cs.conj() * ap[j] + p.chi * a0p[j] * a[j];
        }
    }
}

impl SdeModel for SpatialModel {
    fn name(&self) -> &str {
        "spatial-dopo"
    }

    fn dim(&self) -> usize {
        4 * self.params.n_grid
    }

    fn n_noises(&self) -> usize {
        2 * self.params.n_grid
    }

    fn drift(&self, s: &[C64], _t: f64, out: &mut [C64]) {
        self.local_drift(s, out);
        let p = &self.params;
        let n = p.n_grid;
        let fields = [
            (0, C64::new(0.0, p.gamma_p * p.l_p * p.l_p)),
            (n, C64::new(0.0, -p.gamma_p * p.l_p * p.l_p)),
            (2 * n, C64::new(0.0, p.gamma_s * p.l_s * p.l_s)),
            (3 * n, C64::new(0.0, -p.gamma_s * p.l_s * p.l_s)),
        ];
        for (off, coeff) in fields {
            if coeff.im == 0.0 {
                continue;
            }
            let lap = self.spec.laplacian(&s[off..off + n]);
            for j in 0..n {
                out[off + j] += coeff * lap[j];
            }
        }
    }

    fn noise_increment(&self, s: &[C64], _t: f64, dw: &[f64], out: &mut [C64]) {
        let p = &self.params;
        let n = p.n_grid;
        let inv_dx = 1.0 / p.dx();
        out[..2 * n].fill(ZERO);
        for j in 0..n {
            out[2 * n + j] = (p.chi * s[j] * inv_dx).sqrt() * dw[j];
            out[3 * n + j] = (p.chi * s[n + j] * inv_dx).sqrt() * dw[n + j];
        }
    }

    fn stratonovich_term(&self) -> StratonovichTerm {
        // The couplings depend on the pump only, which carries no noise.
        StratonovichTerm::Zero
    }

    fn has_linear_split(&self) -> bool {
        true
    }

    fn apply_linear(&self, s: &mut [C64], h: f64) {
        let p = &self.params;
        let n = p.n_grid;
        let (lp2, ls2) = (p.l_p * p.l_p, p.l_s * p.l_s);
        let rates = [
            (0, p.gamma_p * lp2),
            (n, -p.gamma_p * lp2),
            (2 * n, p.gamma_s * ls2),
            (3 * n, -p.gamma_s * ls2),
        ];
        for (off, rate) in rates {
            if rate == 0.0 {
                continue;
            }
            self.spec.apply(&mut s[off..off + n], |_, k| {
                (C64::new(0.0, -rate * k * k) * h).exp()
            });
        }
    }

    fn drift_remainder(&self, s: &[C64], _t: f64, out: &mut [C64]) {
        self.local_drift(s, out);
    }
}

/// Signal-only model with the pump slaved to the signal.
///
/// ```text
/// dA = [−(γ_s + iδ_s − iγ_s l_s² ∂²) A + χ A₀[A] A⁺] dt + √(χA₀[A]) dW
/// ```
///
/// State layout `[A | A⁺]`. The coupling depends on the signal through the
/// slaved pump, so the Stratonovich correction is supplied analytically.
#[derive(Debug)]
pub struct EliminatedModel {
    params: SpatialParams,
    spec: Spectral,
    green: C64,
    /// Linear propagators `(h, signal, partner)` of the last step size used.
    propagators: std::sync::RwLock<Option<(f64, Vec<C64>, Vec<C64>)>>,
}

pub fn eliminated_model(params: &SpatialParams) -> Result<EliminatedModel> {
    params.validate()?;
    let spec = Spectral::new(params.n_grid, params.l_domain);
    let green = pump_green_diagonal(params, &spec, false);
    Ok(EliminatedModel {
        params: *params,
        spec,
        green,
        propagators: std::sync::RwLock::new(None),
    })
}

impl EliminatedModel {
    pub fn params(&self) -> &SpatialParams {
        &self.params
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spec
    }

    /// Calls `f(j, A₀_j, A₀⁺_j)` for every cell; a local evaluation when the
    /// pump does not diffract.
    fn with_pumps(&self, s: &[C64], mut f: impl FnMut(usize, C64, C64)) {
        let p = &self.params;
        let n = p.n_grid;
        if p.l_p == 0.0 {
            let g = self.green;
            for j in 0..n {
                let a0 = (p.ep - 0.5 * p.chi * s[j] * s[j]) * g;
                let a0p = (p.ep - 0.5 * p.chi * s[n + j] * s[n + j]) * g.conj();
                f(j, a0, a0p);
            }
        } else {
            let a0 = slaved_pump(p, &self.spec, &s[..n], false);
            let a0p = slaved_pump(p, &self.spec, &s[n..], true);
            for j in 0..n {
                f(j, a0[j], a0p[j]);
            }
        }
    }
}

impl SdeModel for EliminatedModel {
    fn name(&self) -> &str {
        "spatial-dopo-eliminated"
    }

    fn dim(&self) -> usize {
        2 * self.params.n_grid
    }

    fn n_noises(&self) -> usize {
        2 * self.params.n_grid
    }

    fn drift(&self, s: &[C64], t: f64, out: &mut [C64]) {
        let p = &self.params;
        let n = p.n_grid;
        self.drift_remainder(s, t, out);
        let lap_a = self.spec.laplacian(&s[..n]);
        let lap_ap = self.spec.laplacian(&s[n..]);
        let cs = C64::new(p.gamma_s, p.delta_s);
        let d = C64::new(0.0, p.gamma_s * p.l_s * p.l_s);
        for j in 0..n {
            out[j] += -cs * s[j] + d * lap_a[j];
            out[n + j] += -cs.conj() * s[n + j] - d * lap_ap[j];
        }
    }

    fn noise_increment(&self, s: &[C64], _t: f64, dw: &[f64], out: &mut [C64]) {
        let p = &self.params;
        let n = p.n_grid;
        let inv_dx = 1.0 / p.dx();
        self.with_pumps(s, |j, a0, a0p| {
            out[j] = (p.chi * a0 * inv_dx).sqrt() * dw[j];
            out[n + j] = (p.chi * a0p * inv_dx).sqrt() * dw[n + j];
        });
    }

    fn stratonovich_term(&self) -> StratonovichTerm {
        StratonovichTerm::Analytic
    }

    /// Channel `j` only touches cell `j`, with `b_j² = χA₀_j/dx` and
    /// `∂A₀_j/∂A_j = −χ G A_j`, so `−½ b_j ∂b_j/∂A_j = χ² G A_j / (4 dx)`.
    fn analytic_correction(&self, s: &[C64], _t: f64, out: &mut [C64]) {
        let p = &self.params;
        let n = p.n_grid;
        let c = p.chi * p.chi / (4.0 * p.dx());
        for j in 0..n {
            out[j] += c * self.green * s[j];
            out[n + j] += c * self.green.conj() * s[n + j];
        }
    }

    fn has_linear_split(&self) -> bool {
        true
    }

    fn apply_linear(&self, s: &mut [C64], h: f64) {
        let n = self.params.n_grid;
        let cached = matches!(&*self.propagators.read().unwrap(), Some((h0, _, _)) if *h0 == h);
        if !cached {
            let fa = signal_propagator(&self.params, &self.spec, h, false);
            let fp = signal_propagator(&self.params, &self.spec, h, true);
            *self.propagators.write().unwrap() = Some((h, fa, fp));
        }
        let guard = self.propagators.read().unwrap();
        let (_, fa, fp) = guard.as_ref().expect("propagators cached above");
        let (a, ap) = s.split_at_mut(n);
        self.spec.apply(a, |j, _| fa[j]);
        self.spec.apply(ap, |j, _| fp[j]);
    }

    fn drift_remainder(&self, s: &[C64], _t: f64, out: &mut [C64]) {
        let p = &self.params;
        let n = p.n_grid;
        self.with_pumps(s, |j, a0, a0p| {
            out[j] = p.chi * a0 * s[n + j];
            out[n + j] = p.chi * a0p * s[j];
        });
    }
}

/// One row of the linear-stability scan of the pump-only state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityRow {
    pub k: f64,
    /// Largest real part of the signal growth rate at wavenumber `k`.
    pub growth: f64,
}

/// Growth rate of signal perturbations `∝ e^{ikx}` on the pump-only state:
/// `λ(k) = −γ_s + Re √(|χA₀|² − (δ_s + γ_s l_s² k²)²)`.
pub fn growth_rate(p: &SpatialParams, k: f64) -> f64 {
    let drive = (p.chi * p.pump_only()).norm_sqr();
    let detune = p.delta_s + p.gamma_s * p.l_s * p.l_s * k * k;
    -p.gamma_s + C64::new(drive - detune * detune, 0.0).sqrt().re
}

/// Uniform scan of `growth_rate` over `k ∈ [0, k_max]`.
pub fn stability_scan(p: &SpatialParams, k_max: f64, n_k: usize) -> Vec<StabilityRow> {
    let n_k = n_k.max(2);
    (0..n_k)
        .map(|i| {
            let k = k_max * i as f64 / (n_k - 1) as f64;
            StabilityRow {
                k,
                growth: growth_rate(p, k),
            }
        })
        .collect()
}

pub fn stability_table(rows: &[StabilityRow]) -> Table {
    let mut t = Table::new(["k", "growth"]);
    for r in rows {
        t.push(vec![r.k, r.growth]);
    }
    t
}

/// Maximum Newton iterations of [`pattern_solve`].
pub const MAX_NEWTON_ITERATIONS: usize = 100;

/// Newton stops once the relative residual drops below this.
pub const NEWTON_TOLERANCE: f64 = 1e-12;

/// Initial guess for [`pattern_solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ansatz {
    /// `a·cos(k_c x)` at the critical wavenumber, one stripe per wavelength.
    Stripe,
    /// A single `a·sech(q x)` peak.
    Localized,
}

/// Dense matrix of the slaved-pump Green's operator (circulant).
fn pump_green_matrix(p: &SpatialParams, spec: &Spectral) -> DMatrix<C64> {
    let n = p.n_grid;
    let lp2 = p.l_p * p.l_p;
    let mut g = DMatrix::zeros(n, n);
    for c in 0..n {
        let mut e = vec![ZERO; n];
        e[c] = C64::new(1.0, 0.0);
        spec.apply(&mut e, |_, k| {
            1.0 / C64::new(p.gamma_p, p.delta_p + p.gamma_p * lp2 * k * k)
        });
        for r in 0..n {
            g[(r, c)] = e[r];
        }
    }
    g
}

/// Blocks `(P, Q)` of the eliminated-model linearization at the classical
/// field `a`: `δ(drift_A) = P δA + Q δA⁺`. The partner row carries the
/// elementwise conjugates.
fn linear_blocks(p: &SpatialParams, spec: &Spectral, a: &[C64]) -> (DMatrix<C64>, DMatrix<C64>) {
    let n = p.n_grid;
    let d2 = spec.laplacian_matrix();
    let g = pump_green_matrix(p, spec);
    let a0 = slaved_pump(p, spec, a, false);
    let cs = C64::new(p.gamma_s, p.delta_s);
    let d = C64::new(0.0, p.gamma_s * p.l_s * p.l_s);
    let mut pm = DMatrix::from_fn(n, n, |r, c| {
        let nl = -p.chi * p.chi * a[r].conj() * g[(r, c)] * a[c];
        d * d2[(r, c)] + nl
    });
    for j in 0..n {
        pm[(j, j)] -= cs;
    }
    let qm = DMatrix::from_fn(n, n, |r, c| if r == c { p.chi * a0[r] } else { ZERO });
    (pm, qm)
}

/// Classical stationary residual `drift_A[A, A*]` of the eliminated model.
pub fn stationary_residual(p: &SpatialParams, a: &[C64]) -> Result<Vec<C64>> {
    let m = eliminated_model(p)?;
    let n = p.n_grid;
    let state: Vec<C64> = a
        .iter()
        .copied()
        .chain(a.iter().map(|z| z.conj()))
        .collect();
    let mut out = vec![ZERO; 2 * n];
    m.drift(&state, 0.0, &mut out);
    out.truncate(n);
    Ok(out)
}

fn max_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Residual scaled by `γ_s·max|A|`, so the tolerance is independent of the
/// photon number.
fn relative_residual(p: &SpatialParams, a: &[C64]) -> Result<f64> {
    let scale = p.gamma_s * max_norm(a).max(f64::MIN_POSITIVE);
    Ok(max_norm(&stationary_residual(p, a)?) / scale)
}

/// Newton iteration on the stationary equation of the eliminated model,
/// over the real and imaginary parts of `A`. Steps are minimum-norm
/// least-squares solutions, which leaves the translation (Goldstone)
/// direction untouched, and are halved until the residual decreases.
///
/// Returns the converged field and the residual history.
pub fn newton_stationary(p: &SpatialParams, initial: &[C64]) -> Result<(Vec<C64>, Vec<f64>)> {
    p.validate()?;
    let n = p.n_grid;
    if initial.len() != n {
        return Err(Error::GridMismatch(format!(
            "initial field has {} points, grid {}",
            initial.len(),
            n
        )));
    }
    let spec = Spectral::new(n, p.l_domain);
    let mut a = initial.to_vec();
    let mut res = relative_residual(p, &a)?;
    let mut history = vec![res];
    for _ in 0..MAX_NEWTON_ITERATIONS {
        if res < NEWTON_TOLERANCE {
            return Ok((a, history));
        }
        let (pm, qm) = linear_blocks(p, &spec, &a);
        let plus = &pm + &qm;
        let minus = (&pm - &qm) * I;
        let jac = DMatrix::from_fn(2 * n, 2 * n, |r, c| {
            let z = if c < n {
                plus[(r % n, c)]
            } else {
                minus[(r % n, c - n)]
            };
            if r < n {
                z.re
            } else {
                z.im
            }
        });
        let g = stationary_residual(p, &a)?;
        let rhs = DVector::from_fn(2 * n, |r, _| if r < n { -g[r].re } else { -g[r - n].im });
        let svd = jac.svd(true, true);
        let cutoff = svd.singular_values.max() * 1e-13;
        let step = svd
            .solve(&rhs, cutoff)
            .map_err(|e| Error::Eigen(e.to_string()))?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<C64> = (0..n)
                .map(|j| a[j] + lambda * C64::new(step[j], step[n + j]))
                .collect();
            let r_trial = relative_residual(p, &trial)?;
            if r_trial < res || lambda < 1e-4 {
                a = trial;
                res = r_trial;
                break;
            }
            lambda *= 0.5;
        }
        history.push(res);
    }
    if res < NEWTON_TOLERANCE {
        return Ok((a, history));
    }
    Err(Error::NewtonFailed {
        iterations: MAX_NEWTON_ITERATIONS,
        history,
    })
}

/// Values and first two derivatives of the band-limited interpolant of a
/// real periodic sample set at `x` (grid coordinates from [`SpatialParams::x`]).
fn interpolant_derivatives(
    p: &SpatialParams,
    spec: &Spectral,
    f: &[f64],
    x: f64,
) -> (f64, f64, f64) {
    let n = p.n_grid;
    let mut hat: Vec<C64> = f.iter().map(|&v| C64::new(v, 0.0)).collect();
    let fft = FftPlanner::new().plan_fft_forward(n);
    fft.process(&mut hat);
    let x_first = p.x(0);
    let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
    for (j, &k) in spec.wavenumbers().iter().enumerate() {
        let weight = if 2 * j == n { 0.5 } else { 1.0 };
        let c = hat[j] * weight / n as f64;
        let e = (I * k * (x - x_first)).exp();
        v += (c * e).re;
        d1 += (c * I * k * e).re;
        d2 += (c * -(k * k) * e).re;
        if 2 * j == n {
            // Symmetric Nyquist split: the other half at −k.
            let e = (-I * k * (x - x_first)).exp();
            v += (c * e).re;
            d1 += (c * -I * k * e).re;
            d2 += (c * -(k * k) * e).re;
        }
    }
    (v, d1, d2)
}

/// Sub-grid location of the maximum of a real periodic sample set: grid
/// argmax, then Newton on the derivative of its band-limited interpolant.
fn interpolated_argmax(p: &SpatialParams, spec: &Spectral, f: &[f64], guess: Option<f64>) -> f64 {
    let x_start = match guess {
        Some(x) => x,
        None => {
            let j = (0..f.len()).fold(0, |b, j| if f[j] > f[b] { j } else { b });
            p.x(j)
        }
    };
    let mut x = x_start;
    let dx = p.dx();
    for _ in 0..30 {
        let (_, d1, d2) = interpolant_derivatives(p, spec, f, x);
        if d2 >= 0.0 {
            break;
        }
        let step = (-d1 / d2).clamp(-dx, dx);
        x += step;
        if step.abs() < 1e-15 * p.l_domain {
            break;
        }
    }
    x
}

/// A stationary pattern of the eliminated model.
#[derive(Debug, Clone)]
pub struct PatternSolution {
    pub params: SpatialParams,
    /// `Ā = e^{iφ} F(x − x₀)` on the grid.
    pub abar: Vec<C64>,
    /// Real profile `F = e^{−iφ} Ā`, extremal at `x₀`.
    pub profile: Vec<f64>,
    /// Global phase `φ ∈ (−π/2, π/2]`; the paper's form is `φ = sign(δ_s)·β`.
    pub phase: f64,
    pub beta: f64,
    pub x0: f64,
    /// Relative stationary residual after the final polish.
    pub residual: f64,
    /// `max|Im(e^{−iφ}Ā)| / max|Ā|`, zero in the conservative limit.
    pub imag_defect: f64,
    pub history: Vec<f64>,
}

impl PatternSolution {
    /// Slaved pump field `Ā₀`.
    pub fn pump(&self) -> Vec<C64> {
        let spec = Spectral::new(self.params.n_grid, self.params.l_domain);
        slaved_pump(&self.params, &spec, &self.abar, false)
    }

    /// Whether `φ` carries the sign of `δ_s`.
    pub fn phase_sign_matches(&self) -> bool {
        self.phase.signum() == self.params.delta_s.signum()
    }

    /// Columns `x, re, im`.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["x", "re", "im"]);
        for (j, z) in self.abar.iter().enumerate() {
            t.push(vec![self.params.x(j), z.re, z.im]);
        }
        t
    }
}

/// Phase `φ` and amplitude `a` of the conservative-limit ansatz:
/// `m e^{−2iφ} = 1 − iS`, `S = √(|m|² − 1)`, with the nonlinearity
/// coefficient `g = Im(−χ² G/2)/γ_s`.
fn ansatz_constants(p: &SpatialParams) -> Result<(f64, f64, f64)> {
    let m = p.gain();
    if m.norm() <= 1.0 {
        return Err(Error::Domain(format!(
            "parametric gain |m| = {} is below threshold",
            m.norm()
        )));
    }
    let s = (m.norm_sqr() - 1.0).sqrt();
    let phi = -0.5 * (C64::new(1.0, -s) / m).arg();
    let g = (-0.5 * p.chi * p.chi / C64::new(p.gamma_p, p.delta_p)).im / p.gamma_s;
    if g <= 0.0 {
        return Err(Error::Domain(
            "defocusing effective nonlinearity (δ_p ≤ 0)".into(),
        ));
    }
    Ok((phi, s, g))
}

/// Stationary pattern, centered so that `F` peaks at `x₀ = 0`.
pub fn pattern_solve(p: &SpatialParams, ansatz: Ansatz) -> Result<PatternSolution> {
    p.validate()?;
    let (phi, s, g) = ansatz_constants(p)?;
    let delta = p.delta_s / p.gamma_s;
    let ls2 = p.l_s * p.l_s;
    let initial: Vec<C64> = match ansatz {
        Ansatz::Stripe => {
            let k = p.critical_wavenumber();
            let amp2 = 4.0 * (delta + s + k * k * ls2) / (3.0 * g);
            if k == 0.0 || amp2 <= 0.0 {
                return Err(Error::Domain(
                    "no stripe branch for these parameters".into(),
                ));
            }
            p.coords()
                .iter()
                .map(|&x| C64::from_polar(amp2.sqrt() * (k * x).cos(), phi))
                .collect()
        }
        Ansatz::Localized => {
            let q2 = (delta + s) / ls2;
            if q2 <= 0.0 {
                return Err(Error::Domain(
                    "no localized branch for these parameters".into(),
                ));
            }
            let amp = (2.0 * q2 * ls2 / g).sqrt();
            let q = q2.sqrt();
            p.coords()
                .iter()
                .map(|&x| C64::from_polar(amp / (q * x).cosh(), phi))
                .collect()
        }
    };
    let (a, mut history) = newton_stationary(p, &initial)?;
    center_pattern(p, a, &mut history)
}

/// Translates a converged field so that `|Ā|²` peaks at `x = 0`, polishes,
/// and extracts the real profile and global phase.
fn center_pattern(
    p: &SpatialParams,
    a: Vec<C64>,
    history: &mut Vec<f64>,
) -> Result<PatternSolution> {
    let n = p.n_grid;
    let spec = Spectral::new(n, p.l_domain);
    let intensity: Vec<f64> = a.iter().map(|z| z.norm_sqr()).collect();
    let x_peak = interpolated_argmax(p, &spec, &intensity, None);
    let shifted = spec.shift(&a, -x_peak);
    let (abar, polish) = newton_stationary(p, &shifted)?;
    history.extend(polish.into_iter().skip(1));
    let residual = relative_residual(p, &abar)?;
    // A → −A is a symmetry, so the phase is only defined mod π.
    let mut phase = abar[n / 2].arg();
    if phase > std::f64::consts::FRAC_PI_2 {
        phase -= std::f64::consts::PI;
    } else if phase <= -std::f64::consts::FRAC_PI_2 {
        phase += std::f64::consts::PI;
    }
    let rotated: Vec<C64> = abar
        .iter()
        .map(|z| z * C64::from_polar(1.0, -phase))
        .collect();
    let scale = max_norm(&abar);
    let imag_defect = rotated.iter().map(|z| z.im.abs()).fold(0.0, f64::max) / scale;
    Ok(PatternSolution {
        params: *p,
        profile: rotated.iter().map(|z| z.re).collect(),
        phase,
        beta: phase.abs(),
        x0: 0.0,
        residual,
        imag_defect,
        abar,
        history: history.clone(),
    })
}

/// Relative drift of the full four-field model at the pattern with the pump
/// slaved to it.
pub fn full_model_residual(pattern: &PatternSolution) -> Result<f64> {
    let p = &pattern.params;
    let m = spatial_model(p)?;
    let state = FieldState1D::slaved(p, &pattern.abar).to_vec();
    let mut out = vec![ZERO; state.len()];
    m.drift(&state, 0.0, &mut out);
    let n = p.n_grid;
    let pump_scale = p.gamma_p * max_norm(&state[..n]).max(f64::MIN_POSITIVE);
    let signal_scale = p.gamma_s * max_norm(&pattern.abar).max(f64::MIN_POSITIVE);
    let pump = max_norm(&out[..2 * n]) / pump_scale;
    let signal = max_norm(&out[2 * n..]) / signal_scale;
    Ok(pump.max(signal))
}

/// `⟨u, v⟩ = dx Σ u* v`, the discretized `∫ u* v dx`.
pub fn grid_inner(u: &[C64], v: &[C64], dx: f64) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum::<C64>() * dx
}

/// Linearization of the eliminated model around the pattern, acting on
/// `col(b, b⁺)`: `[[P, Q], [Q̄, P̄]]`.
pub fn linear_operator(pattern: &PatternSolution) -> DMatrix<C64> {
    let p = &pattern.params;
    let spec = Spectral::new(p.n_grid, p.l_domain);
    operator_at(p, &spec, &pattern.abar)
}

fn operator_at(p: &SpatialParams, spec: &Spectral, a: &[C64]) -> DMatrix<C64> {
    let n = p.n_grid;
    let (pm, qm) = linear_blocks(p, spec, a);
    DMatrix::from_fn(2 * n, 2 * n, |r, c| match (r < n, c < n) {
        (true, true) => pm[(r, c)],
        (true, false) => qm[(r, c - n)],
        (false, true) => qm[(r - n, c)].conj(),
        (false, false) => pm[(r - n, c - n)].conj(),
    })
}

/// Goldstone mode `v₀ = ∂ₓ col(Ā, Ā*)`.
pub fn goldstone_mode(pattern: &PatternSolution) -> Vec<C64> {
    let p = &pattern.params;
    let spec = Spectral::new(p.n_grid, p.l_domain);
    let conj: Vec<C64> = pattern.abar.iter().map(|z| z.conj()).collect();
    [spec.derivative(&pattern.abar), spec.derivative(&conj)].concat()
}

/// `w₁ = i∂ₓ col(Ā, −Ā*)`, the adjoint mode of the `−2γ_s` eigenvalue.
pub fn squeezed_adjoint_mode(pattern: &PatternSolution) -> Vec<C64> {
    let p = &pattern.params;
    let spec = Spectral::new(p.n_grid, p.l_domain);
    let conj: Vec<C64> = pattern.abar.iter().map(|z| -z.conj()).collect();
    let mut w = [spec.derivative(&pattern.abar), spec.derivative(&conj)].concat();
    for z in &mut w {
        *z *= I;
    }
    w
}

/// Eigen-analysis of the linearized operator around a pattern.
#[derive(Debug, Clone)]
pub struct PatternAnalysis {
    pub eigen: EigenSystem,
    /// Index of the eigenvalue closest to zero.
    pub goldstone: usize,
    /// Index of the eigenvalue closest to `−2γ_s`.
    pub squeezed: usize,
    /// Goldstone adjoint mode scaled so that `⟨w₀, v₀⟩ = 1` under [`grid_inner`].
    pub w0: Vec<C64>,
    pub v0: Vec<C64>,
}

impl PatternAnalysis {
    pub fn goldstone_eigenvalue(&self) -> C64 {
        self.eigen.values[self.goldstone]
    }

    pub fn squeezed_eigenvalue(&self) -> C64 {
        self.eigen.values[self.squeezed]
    }

    /// Largest real part among the non-Goldstone eigenvalues.
    pub fn max_stable_growth(&self) -> f64 {
        self.eigen
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != self.goldstone)
            .map(|(_, l)| l.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Columns `re, im` of the eigenvalues, sorted by real part (descending).
    pub fn eigenvalue_table(&self) -> Table {
        let mut vals = self.eigen.values.clone();
        vals.sort_by(|a, b| b.re.total_cmp(&a.re));
        let mut t = Table::new(["re", "im"]);
        for l in vals {
            t.push(vec![l.re, l.im]);
        }
        t
    }
}

pub fn analyse_pattern(pattern: &PatternSolution) -> Result<PatternAnalysis> {
    let p = &pattern.params;
    let op = linear_operator(pattern);
    let eigen = eig_biorthonormal(&op)?;
    let closest = |target: C64| {
        (0..eigen.values.len())
            .min_by(|&i, &j| {
                (eigen.values[i] - target)
                    .norm()
                    .total_cmp(&(eigen.values[j] - target).norm())
            })
            .unwrap_or(0)
    };
    let goldstone = closest(ZERO);
    let squeezed = closest(C64::new(-2.0 * p.gamma_s, 0.0));
    let v0 = goldstone_mode(pattern);
    let raw: Vec<C64> = eigen.left.column(goldstone).iter().copied().collect();
    let c = grid_inner(&raw, &v0, p.dx());
    if c.norm() == 0.0 {
        return Err(Error::Eigen(
            "Goldstone adjoint mode is orthogonal to v0".into(),
        ));
    }
    let w0 = raw.iter().map(|z| z / c.conj()).collect();
    Ok(PatternAnalysis {
        eigen,
        goldstone,
        squeezed,
        w0,
        v0,
    })
}

/// Diffusion coefficient of the pattern position,
/// `D = χ ∫ [(w₀,₁*)² Ā₀ + (w₀,₂*)² Ā₀*] dx = 2χ Re ∫ w₀,₁² Ā₀* dx`,
/// the noise variance projected on the Goldstone adjoint mode. The
/// imaginary part of the integral vanishes by symmetry and is dropped.
pub fn diffusion_coefficient(pattern: &PatternSolution, analysis: &PatternAnalysis) -> f64 {
    let p = &pattern.params;
    let n = p.n_grid;
    let a0 = pattern.pump();
    let sum: C64 = (0..n)
        .map(|j| {
            let w1 = analysis.w0[j].conj();
            let w2 = analysis.w0[n + j].conj();
            w1 * w1 * a0[j] + w2 * w2 * a0[j].conj()
        })
        .sum();
    p.chi * sum.re * p.dx()
}

/// Follows the position of a pattern through a trajectory.
///
/// The position maximizes the cross-correlation `C(s) = ∫ I(x) Ī(x − s) dx`
/// of the intensity `I = A·A⁺` with the reference `Ī = |Ā|²`: grid argmax,
/// quadratic refinement, then Newton on `C′(s) = 0` through the Fourier
/// series of `C`. For positive-P states `I` is complex and so is the
/// position, continued analytically; for classical states it is real.
/// Successive positions are unwrapped by the pattern's own period.
#[derive(Debug, Clone)]
pub struct PositionTracker {
    params: SpatialParams,
    spec: Spectral,
    ref_hat: Vec<C64>,
    ref_peak: f64,
    period: f64,
    prev: Option<C64>,
}

/// Relative peak height below which the pattern is considered lost.
pub const MIN_CORRELATION: f64 = 0.5;

impl PositionTracker {
    pub fn new(pattern: &PatternSolution) -> Self {
        let p = pattern.params;
        let n = p.n_grid;
        let spec = Spectral::new(n, p.l_domain);
        let mut ref_hat: Vec<C64> = pattern
            .abar
            .iter()
            .map(|z| C64::new(z.norm_sqr(), 0.0))
            .collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut ref_hat);
        let ref_peak = pattern
            .abar
            .iter()
            .map(|z| z.norm_sqr().powi(2))
            .sum::<f64>();
        // Period: the gcd of the wavenumber indices carried by Ī.
        let top = ref_hat.iter().skip(1).map(|z| z.norm()).fold(0.0, f64::max);
        let mut g = 0usize;
        for m in 1..=n / 2 {
            if ref_hat[m].norm() > 1e-8 * top.max(ref_hat[0].norm()) {
                g = gcd(g, m);
            }
        }
        let period = if g == 0 {
            p.l_domain
        } else {
            p.l_domain / g as f64
        };
        Self {
            params: p,
            spec,
            ref_hat,
            ref_peak,
            period,
            prev: None,
        }
    }

    /// Period by which positions are unwrapped.
    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn reset(&mut self) {
        self.prev = None;
    }

    /// Fourier coefficients of `C(s)` for the intensity `intensity`.
    fn correlation_hat(&self, intensity: &[C64]) -> Vec<C64> {
        let mut hat = intensity.to_vec();
        FftPlanner::new()
            .plan_fft_forward(self.params.n_grid)
            .process(&mut hat);
        hat.iter()
            .zip(&self.ref_hat)
            .map(|(a, r)| a * r.conj())
            .collect()
    }

    /// `C`, `C′`, `C″` at a (complex) lag.
    fn correlation_at(&self, c_hat: &[C64], s: C64) -> (C64, C64, C64) {
        let n = self.params.n_grid;
        let (mut v, mut d1, mut d2) = (ZERO, ZERO, ZERO);
        for (j, &k) in self.spec.wavenumbers().iter().enumerate() {
            let c = c_hat[j] / n as f64;
            if 2 * j == n {
                v += c * (k * s).cos();
                d1 += c * -k * (k * s).sin();
                d2 += c * -(k * k) * (k * s).cos();
            } else {
                let e = (I * k * s).exp();
                v += c * e;
                d1 += c * I * k * e;
                d2 += c * -(k * k) * e;
            }
        }
        (v, d1, d2)
    }

    /// Position of the pattern in the signal state `[A | A⁺]`.
    pub fn track(&mut self, state: &[C64]) -> Result<C64> {
        let p = &self.params;
        let n = p.n_grid;
        if state.len() != 2 * n {
            return Err(Error::GridMismatch(format!(
                "state has {} values, expected {}",
                state.len(),
                2 * n
            )));
        }
        let intensity: Vec<C64> = (0..n).map(|j| state[j] * state[n + j]).collect();
        let c_hat = self.correlation_hat(&intensity);
        let mut lags = c_hat.clone();
        FftPlanner::new().plan_fft_inverse(n).process(&mut lags);
        let re: Vec<f64> = lags.iter().map(|z| z.re / n as f64).collect();
        let best = (0..n).fold(0, |b, j| if re[j] > re[b] { j } else { b });
        if !(re[best] >= MIN_CORRELATION * self.ref_peak) {
            return Err(Error::PatternLost(format!(
                "correlation peak {:.3} of the reference",
                re[best] / self.ref_peak
            )));
        }
        // Competing peaks not related to the best one by the period.
        let dx = p.dx();
        for j in 0..n {
            let (l, r) = (re[(j + n - 1) % n], re[(j + 1) % n]);
            if j == best || re[j] < l || re[j] < r || re[j] < 0.98 * re[best] {
                continue;
            }
            let sep = lag_of(best, n) * dx - lag_of(j, n) * dx;
            let cycles = sep / self.period;
            if (cycles - cycles.round()).abs() * self.period > 2.0 * dx {
                return Err(Error::PatternLost("ambiguous correlation peak".into()));
            }
        }
        let (l, c, r) = (re[(best + n - 1) % n], re[best], re[(best + 1) % n]);
        let curv = l - 2.0 * c + r;
        let frac = if curv < 0.0 {
            (0.5 * (l - r) / curv).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        let mut s = C64::new((lag_of(best, n) + frac) * dx, 0.0);
        for _ in 0..50 {
            let (_, d1, d2) = self.correlation_at(&c_hat, s);
            if d2.norm() == 0.0 {
                break;
            }
            let step = d1 / d2;
            s -= step;
            if step.norm() < 1e-14 * p.l_domain {
                break;
            }
        }
        // Unwrap onto the previous position, or into (−P/2, P/2] at the start.
        let anchor = self.prev.map_or(0.0, |z| z.re);
        let turns = ((anchor - s.re) / self.period).round();
        s += turns * self.period;
        self.prev = Some(s);
        Ok(s)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Signed lag of circular index `j`.
fn lag_of(j: usize, n: usize) -> f64 {
    if j <= n / 2 {
        j as f64
    } else {
        j as f64 - n as f64
    }
}

/// Observer columns of [`PatternObserver`].
pub mod obs {
    /// Tracked position `x₀` (complex in positive-P).
    pub const X0: usize = 0;
    /// Squeezed quadrature of the co-moving dark mode `∝ i∂ₓĀ(x − x₀)`.
    pub const DARK: usize = 1;
    /// `1` once the tracker has lost the pattern.
    pub const LOST: usize = 2;
    pub const WIDTH: usize = 3;
}

/// Records position and co-moving dark-mode quadrature over `[A | A⁺]`.
///
/// The dark mode is `u = i∂ₓĀ/‖∂ₓĀ‖` and the recorded quadrature is
/// `∫ (ū a + u a⁺) dx`, whose phase is that of the projection on
/// [`squeezed_adjoint_mode`]: its variance is shot-noise normalized.
#[derive(Debug, Clone)]
pub struct PatternObserver {
    tracker: PositionTracker,
    spec: Spectral,
    u: Vec<C64>,
    u_bar: Vec<C64>,
    dx: f64,
    lost: bool,
}

impl PatternObserver {
    pub fn new(pattern: &PatternSolution) -> Self {
        let p = &pattern.params;
        let spec = Spectral::new(p.n_grid, p.l_domain);
        let d = spec.derivative(&pattern.abar);
        let norm = grid_inner(&d, &d, p.dx()).re.sqrt();
        let u: Vec<C64> = d.iter().map(|z| I * z / norm).collect();
        let u_bar = u.iter().map(|z| z.conj()).collect();
        Self {
            tracker: PositionTracker::new(pattern),
            spec,
            u,
            u_bar,
            dx: p.dx(),
            lost: false,
        }
    }
}

impl crate::engine::Observer for PatternObserver {
    fn width(&self) -> usize {
        obs::WIDTH
    }

    fn observe(&mut self, _t: f64, state: &[C64], out: &mut [C64]) {
        let n = self.u.len();
        let x0 = if self.lost {
            None
        } else {
            self.tracker.track(state).ok()
        };
        match x0 {
            Some(x0) => {
                let u = self.spec.shift_complex(&self.u, x0);
                let u_bar = self.spec.shift_complex(&self.u_bar, x0);
                let q: C64 = (0..n)
                    .map(|j| u_bar[j] * state[j] + u[j] * state[n + j])
                    .sum::<C64>()
                    * self.dx;
                out[obs::X0] = x0;
                out[obs::DARK] = q;
                out[obs::LOST] = ZERO;
            }
            None => {
                self.lost = true;
                out[obs::X0] = C64::new(f64::NAN, 0.0);
                out[obs::DARK] = C64::new(f64::NAN, 0.0);
                out[obs::LOST] = C64::new(1.0, 0.0);
            }
        }
    }
}

/// Classical signal state `[Ā | Ā*]` of a pattern.
pub fn pattern_state(pattern: &PatternSolution) -> Vec<C64> {
    pattern
        .abar
        .iter()
        .copied()
        .chain(pattern.abar.iter().map(|z| z.conj()))
        .collect()
}

/// Outcome of a Monte-Carlo run started on the pattern.
#[derive(Debug, Clone)]
pub struct DiffusionRun {
    pub ensemble: crate::engine::EnsembleResult,
    /// Times and `Re Var(x₀)` at `t ≥ t_fit`.
    pub times: Vec<f64>,
    pub var_x0: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Trajectories whose tracker lost the pattern (excluded from the fit).
    pub n_lost: usize,
}

/// Runs the eliminated model from the classical pattern and fits the
/// growth of the tracked-position variance over `t ≥ t_fit`.
pub fn simulate_diffusion(
    pattern: &PatternSolution,
    cfg: &crate::engine::TrajectoryConfig,
    n_traj: usize,
    t_fit: f64,
) -> Result<DiffusionRun> {
    let model = eliminated_model(&pattern.params)?;
    let x0 = pattern_state(pattern);
    let mut ensemble =
        crate::engine::run_ensemble(&model, cfg, n_traj, &x0, |_| PatternObserver::new(pattern))?;
    let width = ensemble.width;
    let before = ensemble.records.len();
    let keep: Vec<bool> = ensemble
        .records
        .iter()
        .map(|rec| {
            rec.iter()
                .skip(obs::LOST)
                .step_by(width)
                .all(|z| z.re == 0.0)
        })
        .collect();
    let mut i = 0;
    ensemble.records.retain(|_| {
        i += 1;
        keep[i - 1]
    });
    let mut i = 0;
    ensemble.indices.retain(|_| {
        i += 1;
        keep[i - 1]
    });
    ensemble.n_traj = ensemble.records.len();
    let n_lost = before - ensemble.n_traj;
    if ensemble.n_traj < 2 {
        return Err(Error::PatternLost(format!(
            "{n_lost} of {before} trajectories lost the pattern"
        )));
    }
    let var = ensemble.variance(obs::X0);
    let (times, var_x0): (Vec<f64>, Vec<f64>) = ensemble
        .time_grid
        .iter()
        .zip(&var)
        .filter(|(t, _)| **t >= t_fit)
        .map(|(t, v)| (*t, v.re))
        .unzip();
    if times.len() < 3 {
        return Err(Error::SeriesTooShort {
            available: times.len(),
            required: 3,
        });
    }
    let (slope, intercept, r2) = crate::engine::linear_fit(&times, &var_x0);
    Ok(DiffusionRun {
        ensemble,
        times,
        var_x0,
        slope,
        intercept,
        r2,
        n_lost,
    })
}
