//! Two-transverse-mode degenerate OPO in the positive-P representation:
//! Langevin model, classical steady states, orientation diffusion, dark-mode
//! squeezing spectra, the fixed local-oscillator measurement model and the
//! TEM₁₀-seeded variant.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::engine::{Observer, SdeModel, StratonovichTerm};
use crate::{Error, Result, C64};

/// Physical parameters. Rates are in units of `1/time`; with `gamma_s = 1`
/// time is measured in units of `1/γ_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopoParams {
    pub gamma_p: f64,
    pub gamma_s: f64,
    pub chi: f64,
    pub ep: f64,
}

impl DopoParams {
    pub fn new(gamma_p: f64, gamma_s: f64, chi: f64, ep: f64) -> Result<Self> {
        for (name, v) in [
            ("gamma_p", gamma_p),
            ("gamma_s", gamma_s),
            ("chi", chi),
            ("Ep", ep),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self {
            gamma_p,
            gamma_s,
            chi,
            ep,
        })
    }

    /// Parameters from the normalized pump `σ` and nonlinearity `d`:
    /// `χ = 2√(d γ_p γ_s)`, `E_p = σ E_th`.
    pub fn from_sigma_d(sigma: f64, d: f64, gamma_p: f64, gamma_s: f64) -> Result<Self> {
        if !(d > 0.0) || !(sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma and d must be positive, got σ={sigma}, d={d}"
            )));
        }
        let chi = 2.0 * (d * gamma_p * gamma_s).sqrt();
        Self::new(gamma_p, gamma_s, chi, sigma * gamma_p * gamma_s / chi)
    }

    pub fn e_th(&self) -> f64 {
        self.gamma_p * self.gamma_s / self.chi
    }

    pub fn sigma(&self) -> f64 {
        self.ep / self.e_th()
    }

    pub fn d(&self) -> f64 {
        self.chi * self.chi / (4.0 * self.gamma_p * self.gamma_s)
    }

    /// Classical signal amplitude `ρ = √((E_p − E_th)/χ)`, defined for `σ ≥ 1`.
    pub fn rho(&self) -> Option<f64> {
        let r2 = (self.ep - self.e_th()) / self.chi;
        (r2 >= 0.0).then(|| r2.sqrt())
    }
}

/// Coherent seed injected in the TEM₁₀ mode, in phase with the bright mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedParams {
    pub es: f64,
}

impl SeedParams {
    pub fn new(es: f64) -> Result<Self> {
        if !(es >= 0.0) || !es.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "seed amplitude must be real and ≥ 0, got {es}"
            )));
        }
        Ok(Self { es })
    }

    /// Normalized seed intensity `I_s = χ² E_s² / (γ_s³ γ_p)`.
    pub fn intensity(&self, p: &DopoParams) -> f64 {
        p.chi * p.chi * self.es * self.es / (p.gamma_s.powi(3) * p.gamma_p)
    }

    /// Seed amplitude producing a given normalized intensity.
    pub fn from_intensity(i_s: f64, p: &DopoParams) -> Result<Self> {
        if !(i_s >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "I_s must be ≥ 0, got {i_s}"
            )));
        }
        Self::new((i_s * p.gamma_s.powi(3) * p.gamma_p).sqrt() / p.chi)
    }
}

/// Index of each positive-P variable in the flat state vector.
pub const ALPHA0: usize = 0;
pub const ALPHA0P: usize = 1;
pub const ALPHAP1: usize = 2;
pub const ALPHAP1P: usize = 3;
pub const ALPHAM1: usize = 4;
pub const ALPHAM1P: usize = 5;

/// The six positive-P amplitudes. `α⁺` is independent of `α`, not its conjugate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopoState {
    pub alpha0: C64,
    pub alpha0p: C64,
    pub alphap1: C64,
    pub alphap1p: C64,
    pub alpham1: C64,
    pub alpham1p: C64,
}

impl DopoState {
    /// Classical (`α⁺ = α*`) state.
    pub fn classical(alpha0: C64, alphap1: C64, alpham1: C64) -> Self {
        Self {
            alpha0,
            alpha0p: alpha0.conj(),
            alphap1,
            alphap1p: alphap1.conj(),
            alpham1,
            alpham1p: alpham1.conj(),
        }
    }

    /// Broken-symmetry mean-field solution `α±1 = ρ e^{∓iθ}`, `α₀ = γ_s/χ`.
    pub fn broken(p: &DopoParams, theta: f64) -> Result<Self> {
        let rho = p.rho().ok_or_else(|| {
            Error::Domain(format!(
                "no broken solution below threshold (σ = {})",
                p.sigma()
            ))
        })?;
        Ok(Self::classical(
            C64::new(p.gamma_s / p.chi, 0.0),
            C64::from_polar(rho, -theta),
            C64::from_polar(rho, theta),
        ))
    }

    pub fn to_vec(&self) -> Vec<C64> {
        vec![
            self.alpha0,
            self.alpha0p,
            self.alphap1,
            self.alphap1p,
            self.alpham1,
            self.alpham1p,
        ]
    }

    pub fn from_slice(s: &[C64]) -> Self {
        Self {
            alpha0: s[ALPHA0],
            alpha0p: s[ALPHA0P],
            alphap1: s[ALPHAP1],
            alphap1p: s[ALPHAP1P],
            alpham1: s[ALPHAM1],
            alpham1p: s[ALPHAM1P],
        }
    }
}

/// Positive-P Langevin model of the DOPO, optionally seeded.
///
/// The complex noises `ξ = (η₁ + iη₂)/√2` and `ξ⁺ = (η₃ + iη₄)/√2` are
/// expressed over four real channels; `α₋₁` receives `ξ*`. The coupling
/// depends only on the pump variables, which carry no noise, so the
/// Itô and Stratonovich drifts coincide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopoModel {
    pub params: DopoParams,
    /// Seed amplitude `E_s/√2` added to each LG-mode equation.
    seed_drive: f64,
}

pub fn dopo_model(params: DopoParams) -> DopoModel {
    DopoModel {
        params,
        seed_drive: 0.0,
    }
}

pub fn seeded_model(params: DopoParams, seed: SeedParams) -> DopoModel {
    DopoModel {
        params,
        seed_drive: seed.es * FRAC_1_SQRT_2,
    }
}

impl SdeModel for DopoModel {
    fn name(&self) -> &str {
        if self.seed_drive == 0.0 {
            "dopo-two-mode"
        } else {
            "dopo-seeded"
        }
    }

    fn dim(&self) -> usize {
        6
    }

    fn n_noises(&self) -> usize {
        4
    }

    fn drift(&self, s: &[C64], _t: f64, out: &mut [C64]) {
        let DopoParams {
            gamma_p,
            gamma_s,
            chi,
            ep,
        } = self.params;
        let es = self.seed_drive;
        out[ALPHA0] = ep - gamma_p * s[ALPHA0] - chi * s[ALPHAP1] * s[ALPHAM1];
        out[ALPHA0P] = ep - gamma_p * s[ALPHA0P] - chi * s[ALPHAP1P] * s[ALPHAM1P];
        out[ALPHAP1] = es - gamma_s * s[ALPHAP1] + chi * s[ALPHA0] * s[ALPHAM1P];
        out[ALPHAP1P] = es - gamma_s * s[ALPHAP1P] + chi * s[ALPHA0P] * s[ALPHAM1];
        out[ALPHAM1] = es - gamma_s * s[ALPHAM1] + chi * s[ALPHA0] * s[ALPHAP1P];
        out[ALPHAM1P] = es - gamma_s * s[ALPHAM1P] + chi * s[ALPHA0P] * s[ALPHAP1];
    }

    fn noise_increment(&self, s: &[C64], _t: f64, dw: &[f64], out: &mut [C64]) {
        let chi = self.params.chi;
        let g = (s[ALPHA0] * chi).sqrt() * FRAC_1_SQRT_2;
        let gp = (s[ALPHA0P] * chi).sqrt() * FRAC_1_SQRT_2;
        let xi = C64::new(dw[0], dw[1]);
        let xip = C64::new(dw[2], dw[3]);
        out[ALPHA0] = C64::new(0.0, 0.0);
        out[ALPHA0P] = C64::new(0.0, 0.0);
        out[ALPHAP1] = g * xi;
        out[ALPHAM1] = g * xi.conj();
        out[ALPHAP1P] = gp * xip;
        out[ALPHAM1P] = gp * xip.conj();
    }

    fn stratonovich_term(&self) -> StratonovichTerm {
        StratonovichTerm::Zero
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SteadyState {
    Trivial,
    /// `α±1 = ρ e^{∓iθ}` for any `θ`.
    Broken {
        rho: f64,
    },
}

pub fn classical_steady_state(p: &DopoParams) -> SteadyState {
    match p.rho() {
        Some(rho) if p.sigma() > 1.0 => SteadyState::Broken { rho },
        _ => SteadyState::Trivial,
    }
}

/// Pattern orientation `θ = ½[arg α₋₁ − arg α₊₁]`, reduced to `[0, π)`.
pub fn orientation_of(state: &DopoState) -> Result<f64> {
    if state.alphap1.norm() == 0.0 || state.alpham1.norm() == 0.0 {
        return Err(Error::ZeroAmplitude);
    }
    let theta = 0.5 * (state.alpham1 * state.alphap1.conj()).arg();
    Ok(theta.rem_euclid(PI))
}

/// The representative of `theta` (mod π) nearest to `prev`.
pub fn unwrap_orientation(prev: f64, theta: f64) -> f64 {
    prev + (theta - prev + 0.5 * PI).rem_euclid(PI) - 0.5 * PI
}

/// Orientation variance `V_θ = d γ_s t / (σ − 1)`.
pub fn theta_variance_analytic(p: &DopoParams, t: f64) -> Result<f64> {
    let sigma = p.sigma();
    if sigma <= 1.0 {
        return Err(Error::Domain(format!(
            "orientation diffusion needs σ > 1, got {sigma}"
        )));
    }
    Ok(p.d() * p.gamma_s * t / (sigma - 1.0))
}

/// Co-rotating dark-mode phase-quadrature spectrum `(ω/2γ_s)²/[1 + (ω/2γ_s)²]`.
pub fn dark_spectrum_analytic(omega: f64, gamma_s: f64) -> f64 {
    let x = omega / (2.0 * gamma_s);
    x * x / (1.0 + x * x)
}

/// Dark-mode amplitudes `(a_d, a_d⁺)` relative to orientation `theta_ref`:
/// `a_d = i(e^{iθ}α₊₁ − e^{−iθ}α₋₁)/√2`.
pub fn dark_mode(state: &DopoState, theta_ref: f64) -> (C64, C64) {
    let e = C64::from_polar(1.0, theta_ref);
    let i = C64::i();
    let a = i * (e * state.alphap1 - e.conj() * state.alpham1) * FRAC_1_SQRT_2;
    let ap = -i * (e.conj() * state.alphap1p - e * state.alpham1p) * FRAC_1_SQRT_2;
    (a, ap)
}

/// Bright-mode amplitudes `a_b = (e^{iθ}α₊₁ + e^{−iθ}α₋₁)/√2` and partner.
pub fn bright_mode(state: &DopoState, theta_ref: f64) -> (C64, C64) {
    let e = C64::from_polar(1.0, theta_ref);
    let a = (e * state.alphap1 + e.conj() * state.alpham1) * FRAC_1_SQRT_2;
    let ap = (e.conj() * state.alphap1p + e * state.alpham1p) * FRAC_1_SQRT_2;
    (a, ap)
}

/// Quadrature `X^φ = e^{−iφ}a + e^{iφ}a⁺` of a positive-P pair.
pub fn quadrature(a: C64, ap: C64, phi: f64) -> C64 {
    let e = C64::from_polar(1.0, phi);
    e.conj() * a + e * ap
}

/// Stochastic images `(X_d, Y_d)` of the dark-mode amplitude and phase
/// quadratures. They are complex in the positive-P representation.
pub fn dark_quadrature_observables(state: &DopoState, theta_ref: f64) -> (C64, C64) {
    let (a, ap) = dark_mode(state, theta_ref);
    (quadrature(a, ap, 0.0), quadrature(a, ap, 0.5 * PI))
}

/// Local-oscillator orientation reference for dark-mode detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoReference {
    /// Follows the instantaneous (unwrapped) pattern orientation.
    CoRotating,
    /// Kept at a fixed orientation for the whole record.
    Frozen(f64),
}

/// Column indices recorded by [`DopoObserver`].
pub mod col {
    pub const X_DARK: usize = 0;
    pub const Y_DARK: usize = 1;
    /// Unwrapped orientation (real).
    pub const THETA: usize = 2;
    /// `(n₊₁ − n₋₁)/(√2 ρ)`: intensity difference in amplitude-quadrature units.
    pub const TWIN: usize = 3;
    /// `α₊₁⁺ α₊₁`.
    pub const N_PLUS: usize = 4;
    pub const WIDTH: usize = 5;
}

/// Per-trajectory recorder of dark-mode quadratures, unwrapped orientation
/// and twin-beam difference.
#[derive(Debug, Clone)]
pub struct DopoObserver {
    reference: LoReference,
    rho: f64,
    last_theta: Option<f64>,
}

impl DopoObserver {
    pub fn new(reference: LoReference, rho: f64) -> Self {
        Self {
            reference,
            rho,
            last_theta: None,
        }
    }
}

impl Observer for DopoObserver {
    fn width(&self) -> usize {
        col::WIDTH
    }

    fn observe(&mut self, _t: f64, state: &[C64], out: &mut [C64]) {
        let st = DopoState::from_slice(state);
        let theta = match (orientation_of(&st), self.last_theta) {
            (Ok(th), Some(prev)) => unwrap_orientation(prev, th),
            (Ok(th), None) => match self.reference {
                LoReference::Frozen(t0) => unwrap_orientation(t0, th),
                LoReference::CoRotating => th,
            },
            (Err(_), prev) => prev.unwrap_or(0.0),
        };
        self.last_theta = Some(theta);
        let theta_ref = match self.reference {
            LoReference::CoRotating => theta,
            LoReference::Frozen(t0) => t0,
        };
        let (x, y) = dark_quadrature_observables(&st, theta_ref);
        let n_plus = st.alphap1p * st.alphap1;
        let n_minus = st.alpham1p * st.alpham1;
        out[col::X_DARK] = x;
        out[col::Y_DARK] = y;
        out[col::THETA] = C64::new(theta, 0.0);
        out[col::TWIN] = (n_plus - n_minus) / (std::f64::consts::SQRT_2 * self.rho);
        out[col::N_PLUS] = n_plus;
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `S⁰(Ω)` of the fixed local-oscillator model in normalized variables.
pub fn fixed_lo_s0(big_omega: f64, big_t: f64, d: f64, sigma: f64) -> f64 {
    let w2 = big_omega * big_omega;
    let s1 = sigma - 1.0;
    8.0 / w2 * (1.0 - sinc(big_omega * big_t))
        - 4.0 * d * big_t / (w2 * s1) * (6.0 * s1 * s1 + w2) / (4.0 * s1 * s1 + w2)
}

/// `S^{π/2}(Ω)` of the fixed local-oscillator model in normalized variables.
///
/// The drift term is written in the form that stays finite at `Ω = 0`; its
/// minimum over `T` at `Ω = 0` is exactly [`optimal_detection_time`].
pub fn fixed_lo_s90(big_omega: f64, big_t: f64, d: f64, sigma: f64) -> f64 {
    let w2 = big_omega * big_omega;
    let s1 = sigma - 1.0;
    (8.0 - 2.0 * w2) / (big_t * (4.0 + w2).powi(2)) - 4.0 / (4.0 + w2)
        + 4.0 * d * big_t * (2.0 * (sigma * sigma + 1.0) + w2)
            / (s1 * (4.0 + w2) * (4.0 * sigma * sigma + w2))
}

/// Small-`d` noise spectrum measured by a local oscillator frozen in the
/// initial dark mode, with phase `phi` and detection time `t_det`.
pub fn fixed_lo_spectrum_analytic(
    omega: f64,
    phi: f64,
    t_det: f64,
    d: f64,
    sigma: f64,
    gamma_s: f64,
) -> Result<f64> {
    if !(t_det > 0.0) || !(sigma > 1.0) || !(d > 0.0) || !(gamma_s > 0.0) {
        return Err(Error::Domain(format!(
            "fixed-LO spectrum needs T > 0, σ > 1, d > 0 (T={t_det}, σ={sigma}, d={d})"
        )));
    }
    let big_omega = omega / gamma_s;
    let big_t = gamma_s * t_det;
    let c2 = phi.cos().powi(2);
    let s2 = phi.sin().powi(2);
    let mut v = 1.0 + s2 * fixed_lo_s90(big_omega, big_t, d, sigma);
    if c2 > 1e-24 {
        if big_omega == 0.0 {
            return Err(Error::Domain(format!(
                "S⁰ diverges at zero noise frequency (cos φ = {:.3e})",
                phi.cos()
            )));
        }
        v += c2 * fixed_lo_s0(big_omega, big_t, d, sigma);
    }
    Ok(v)
}

/// `T_opt = √(σ²(σ − 1)/(d(σ² + 1)))` in units of `1/γ_s`.
pub fn optimal_detection_time(sigma: f64, d: f64) -> Result<f64> {
    if !(sigma > 1.0) || !(d > 0.0) {
        return Err(Error::Domain(format!(
            "T_opt needs σ > 1 and d > 0 (σ={sigma}, d={d})"
        )));
    }
    Ok((sigma * sigma * (sigma - 1.0) / (d * (sigma * sigma + 1.0))).sqrt())
}

/// Detection time minimizing the zero-frequency phase-quadrature spectrum
/// at `φ = 90°`, found numerically (golden section in `ln T`) rather than
/// from the closed form.
pub fn optimal_detection_time_numeric(sigma: f64, d: f64) -> Result<f64> {
    optimal_detection_time(sigma, d)?;
    let f = |lt: f64| {
        fixed_lo_spectrum_analytic(0.0, 0.5 * std::f64::consts::PI, lt.exp(), d, sigma, 1.0)
    };
    f(0.0)?;
    Ok(golden_min(-10.0, 40.0, 1e-12, |lt| f(lt).unwrap_or(f64::INFINITY)).exp())
}

/// Best noise frequency and spectrum value for a given LO phase.
///
/// The search runs over `Ω ∈ [1/T, omega_max]` (plus `Ω = 0` when
/// `cos φ = 0`): a record of duration `T` cannot resolve lower frequencies,
/// and the small-`d` expression is unbounded below there.
pub fn fixed_lo_optimum(
    phi: f64,
    t_det: f64,
    d: f64,
    sigma: f64,
    gamma_s: f64,
    omega_max: f64,
) -> Result<(f64, f64)> {
    let lo = 1.0 / t_det;
    let eval = |w: f64| fixed_lo_spectrum_analytic(w, phi, t_det, d, sigma, gamma_s);
    let mut best = (f64::NAN, f64::INFINITY);
    if phi.cos().powi(2) <= 1e-24 {
        best = (0.0, eval(0.0)?);
    }
    // Log-spaced scan then golden-section refinement of the best bracket.
    let n = 400;
    let ratio = (omega_max / lo).ln();
    let grid: Vec<f64> = (0..=n)
        .map(|k| lo * (ratio * k as f64 / n as f64).exp())
        .collect();
    let vals: Vec<f64> = grid.iter().map(|&w| eval(w)).collect::<Result<_>>()?;
    let k = (0..=n)
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
        .unwrap_or(0);
    let (a, b) = (grid[k.saturating_sub(1)], grid[(k + 1).min(n)]);
    let w = golden_min(a, b, 1e-12 * b, |w| eval(w).unwrap_or(f64::INFINITY));
    let v = eval(w)?;
    let cand = if v < vals[k] {
        (w, v)
    } else {
        (grid[k], vals[k])
    };
    if cand.1 < best.1 {
        best = cand;
    }
    Ok(best)
}

pub(crate) fn golden_min(mut a: f64, mut b: f64, tol: f64, f: impl Fn(f64) -> f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Real roots of the seeded steady-state cubic `I(σ − 1 − I/2)² = I_s` and
/// the stable (largest) branch.
///
/// `I₁₀ = χ²|α₁₀|²/(γ_pγ_s)` where `α₁₀ = (α₊₁ + α₋₁)/√2` is the TEM₁₀
/// amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct SeededSteadyState {
    /// All real roots, ascending.
    pub roots: Vec<f64>,
    pub stable: f64,
}

pub fn seeded_steady_state(sigma: f64, i_s: f64) -> Result<SeededSteadyState> {
    if !(sigma > 1.0) || !(i_s >= 0.0) {
        return Err(Error::Domain(format!(
            "seeded steady state needs σ > 1 and I_s ≥ 0 (σ={sigma}, I_s={i_s})"
        )));
    }
    let u = sigma - 1.0;
    // I³ − 4u I² + 4u² I − 4 I_s = 0
    let roots = real_cubic_roots(-4.0 * u, 4.0 * u * u, -4.0 * i_s);
    let stable = *roots.last().expect("a real cubic has a real root");
    Ok(SeededSteadyState { roots, stable })
}

/// Conversion from the cubic's `I₁₀` to the effective gain entering the
/// dark-mode spectrum: `q = σ − I₁₀ · SEED_Q_FACTOR`. Fixed by the mean-field
/// limit, where `I_s → 0` must give `q = 1`.
pub const SEED_Q_FACTOR: f64 = 0.5;

pub fn seeded_q(sigma: f64, i10: f64) -> f64 {
    sigma - SEED_Q_FACTOR * i10
}

/// Phase-quadrature spectrum of the TEM₀₁ (dark) mode of the seeded DOPO,
/// `1 − 4q/[(1 + q)² + (ω/γ_s)²]`, from the linearized dark-mode equation
/// `Ẏ = −γ_s(1+q)Y + i√(2γ_s q) η`.
pub fn seeded_dark_spectrum(omega: f64, q: f64, gamma_s: f64) -> f64 {
    let w = omega / gamma_s;
    1.0 - 4.0 * q / ((1.0 + q).powi(2) + w * w)
}

/// Real roots of `x³ + a x² + b x + c`, ascending, Newton-polished.
fn real_cubic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let shift = -a / 3.0;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let scale = 1.0 + a.abs() + b.abs() + c.abs();
    let mut roots = if disc > 1e-14 * scale * scale {
        let s = disc.sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt() + shift]
    } else if p.abs() < 1e-300 {
        vec![shift]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (phi - 2.0 * PI * k as f64 / 3.0).cos() + shift)
            .collect()
    };
    let f = |x: f64| ((x + a) * x + b) * x + c;
    let df = |x: f64| (3.0 * x + 2.0 * a) * x + b;
    for r in roots.iter_mut() {
        for _ in 0..4 {
            let dfx = df(*r);
            if dfx.abs() < 1e-300 {
                break;
            }
            let step = f(*r) / dfx;
            if !step.is_finite() {
                break;
            }
            *r -= step;
        }
    }
    roots.sort_by(f64::total_cmp);
    roots
}
