//! Mean-field analysis of the χ(3) four-wave-mixing cavity with undepleted,
//! equal classical pumps: damped classical flow for the `±1` OAM signal
//! modes, the closed-form existence region of the rotating TEM₁₀ solution,
//! and a numeric steady-state/stability solver.
//!
//! The flow is `ȧ = −γ_s a − i ∂H/∂a*` with the detuning entering as `+iδ a`
//! (δ measured as pump-frame frequency minus cavity resonance): this is the
//! sign for which the nontrivial branch exists at `δ > √3 γ_s`.

use nalgebra::{Matrix4, Vector4};

use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FwmParams {
    pub delta: f64,
    pub g: f64,
    /// Pump intensity `ρ²`.
    pub rho2: f64,
    pub gamma_s: f64,
}

impl FwmParams {
    pub fn new(delta: f64, g: f64, rho2: f64, gamma_s: f64) -> Result<Self> {
        if !(g > 0.0) || !(gamma_s > 0.0) || !(rho2 >= 0.0) || !delta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "need g > 0, γ_s > 0, ρ² ≥ 0 (g={g}, γ_s={gamma_s}, ρ²={rho2}, δ={delta})"
            )));
        }
        Ok(Self {
            delta,
            g,
            rho2,
            gamma_s,
        })
    }
}

/// Classical flow `(ȧ₊₁, ȧ₋₁)`.
pub fn fwm_mean_field_rhs(a_plus: C64, a_minus: C64, p: &FwmParams) -> (C64, C64) {
    let i = C64::i();
    let lin = C64::new(-p.gamma_s, p.delta - 4.0 * p.g * p.rho2);
    let f = |a: C64, b: C64| {
        lin * a
            - i * p.g * (a.norm_sqr() + 2.0 * b.norm_sqr()) * a
            - i * 2.0 * p.g * p.rho2 * b.conj()
    };
    (f(a_plus, a_minus), f(a_minus, a_plus))
}

/// Closed-form region where the nontrivial TEM₁₀ solution exists:
/// `δ > √3 γ_s` and `γ_s/2g < ρ² < [2δ + √(δ² − 3γ_s²)]/6g`.
pub fn existence_region(p: &FwmParams) -> bool {
    let disc = p.delta * p.delta - 3.0 * p.gamma_s * p.gamma_s;
    if !(p.delta > 3f64.sqrt() * p.gamma_s) || disc <= 0.0 {
        return false;
    }
    let lo = p.gamma_s / (2.0 * p.g);
    let hi = (2.0 * p.delta + disc.sqrt()) / (6.0 * p.g);
    lo < p.rho2 && p.rho2 < hi
}

/// Jacobian of the flow over `(Re a₊, Im a₊, Re a₋, Im a₋)`.
pub fn jacobian(a_plus: C64, a_minus: C64, p: &FwmParams) -> Matrix4<f64> {
    let i = C64::i();
    let g = p.g;
    // Wirtinger derivatives of f₊ w.r.t. (a₊, a₊*, a₋, a₋*).
    let wirtinger = |a: C64, b: C64| {
        [
            C64::new(-p.gamma_s, p.delta - 4.0 * g * p.rho2)
                - i * g * (2.0 * a.norm_sqr() + 2.0 * b.norm_sqr()),
            -i * g * a * a,
            -i * 2.0 * g * b.conj() * a,
            -i * 2.0 * g * (b * a + p.rho2),
        ]
    };
    let wp = wirtinger(a_plus, a_minus);
    let wm = wirtinger(a_minus, a_plus);
    // Rows for f₋ list derivatives w.r.t. (a₋, a₋*, a₊, a₊*); reorder.
    let rows = [
        [(wp[0], wp[1]), (wp[2], wp[3])],
        [(wm[2], wm[3]), (wm[0], wm[1])],
    ];
    let mut j = Matrix4::zeros();
    for (r, row) in rows.iter().enumerate() {
        for (c, &(pd, qd)) in row.iter().enumerate() {
            let dx = pd + qd;
            let dy = i * (pd - qd);
            j[(2 * r, 2 * c)] = dx.re;
            j[(2 * r + 1, 2 * c)] = dx.im;
            j[(2 * r, 2 * c + 1)] = dy.re;
            j[(2 * r + 1, 2 * c + 1)] = dy.im;
        }
    }
    j
}

/// Real 4-vector of the orientation (Goldstone) direction `(i a₊, −i a₋)`.
pub fn goldstone_direction(a_plus: C64, a_minus: C64) -> Vector4<f64> {
    let i = C64::i();
    let (u, v) = (i * a_plus, -i * a_minus);
    Vector4::new(u.re, u.im, v.re, v.im)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FwmSolution {
    /// Per-mode intensity `|a₊₁|² = |a₋₁|²`.
    pub intensity: f64,
    pub a_plus: C64,
    pub a_minus: C64,
    pub stable: bool,
    pub eigenvalues: Vec<C64>,
    /// Eigenvalue attributed to the orientation symmetry (nontrivial roots).
    pub goldstone: Option<C64>,
}

fn classify(a_plus: C64, a_minus: C64, p: &FwmParams) -> FwmSolution {
    let j = jacobian(a_plus, a_minus, p);
    let mut ev: Vec<C64> = j
        .complex_eigenvalues()
        .iter()
        .map(|z| C64::new(z.re, z.im))
        .collect();
    ev.sort_by(|a, b| b.re.total_cmp(&a.re));
    let intensity = a_plus.norm_sqr();
    let tol = 1e-9 * p.gamma_s;
    let (goldstone, rest): (Option<C64>, Vec<C64>) = if intensity > 0.0 {
        let k = (0..ev.len())
            .min_by(|&x, &y| ev[x].norm().total_cmp(&ev[y].norm()))
            .unwrap_or(0);
        let rest = ev
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .map(|(_, z)| *z)
            .collect();
        (Some(ev[k]), rest)
    } else {
        (None, ev.clone())
    };
    let stable = rest.iter().all(|z| z.re < -tol);
    FwmSolution {
        intensity,
        a_plus,
        a_minus,
        stable,
        eigenvalues: ev,
        goldstone,
    }
}

/// All steady states in the symmetric sector `|a₊| = |a₋|` at orientation
/// `θ = 0` (`a₊ = a₋`), trivial root first, then nontrivial roots by
/// increasing intensity. Roots are bracketed by a scan in intensity and
/// refined by bisection.
pub fn steady_state_solve(p: &FwmParams) -> Result<Vec<FwmSolution>> {
    let zero = C64::new(0.0, 0.0);
    let mut out = vec![classify(zero, zero, p)];
    let k = 2.0 * p.g * p.rho2;
    // Symmetric sector: (γ + iΔ)A = −i k A*, Δ(I) = −δ + 4gρ² + 3gI, so
    // F(I) = γ² + Δ² − k² vanishes at every root; |Δ| ≤ k bounds the scan.
    let delta_of = |i: f64| -p.delta + 4.0 * p.g * p.rho2 + 3.0 * p.g * i;
    let f = |i: f64| p.gamma_s * p.gamma_s + delta_of(i).powi(2) - k * k;
    let i_max = (p.delta - 4.0 * p.g * p.rho2 + k) / (3.0 * p.g);
    if i_max <= 0.0 {
        return Ok(out);
    }
    let n = 2000;
    let grid: Vec<f64> = (0..=n)
        .map(|j| i_max * 1.001 * j as f64 / n as f64)
        .collect();
    for w in grid.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (mut flo, fhi) = (f(lo), f(hi));
        if flo == 0.0 && lo > 0.0 {
            hi = lo;
        } else if flo.signum() == fhi.signum() || lo == 0.0 && flo == 0.0 {
            continue;
        }
        let mut iters = 0;
        while hi - lo > 1e-15 * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid);
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
            iters += 1;
            if iters > 200 {
                return Err(Error::RootFinding { lo, hi });
            }
        }
        let i_root = 0.5 * (lo + hi);
        if i_root <= 0.0 {
            continue;
        }
        // e^{2iφ} = −i k / (γ + iΔ)
        let phase = (C64::new(0.0, -k) / C64::new(p.gamma_s, delta_of(i_root))).arg() * 0.5;
        let a = C64::from_polar(i_root.sqrt(), phase);
        out.push(classify(a, a, p));
    }
    Ok(out)
}

/// Numeric and closed-form existence verdicts on a `(δ, ρ²)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionCell {
    pub delta: f64,
    pub rho2: f64,
    pub exists_closed_form: bool,
    pub exists_numeric: bool,
    /// Number of stable steady states (trivial included).
    pub n_stable: usize,
    /// Closed-form verdict changes within the 3×3 neighbourhood.
    pub near_boundary: bool,
}

pub fn region_map(deltas: &[f64], rho2s: &[f64], g: f64, gamma_s: f64) -> Result<Vec<RegionCell>> {
    let closed = |d: f64, r: f64| FwmParams::new(d, g, r, gamma_s).map(|p| existence_region(&p));
    let mut cells = Vec::with_capacity(deltas.len() * rho2s.len());
    for (jd, &delta) in deltas.iter().enumerate() {
        for (jr, &rho2) in rho2s.iter().enumerate() {
            let p = FwmParams::new(delta, g, rho2, gamma_s)?;
            let sols = steady_state_solve(&p)?;
            let here = existence_region(&p);
            let mut near = false;
            for nd in jd.saturating_sub(1)..=(jd + 1).min(deltas.len() - 1) {
                for nr in jr.saturating_sub(1)..=(jr + 1).min(rho2s.len() - 1) {
                    near |= closed(deltas[nd], rho2s[nr])? != here;
                }
            }
            cells.push(RegionCell {
                delta,
                rho2,
                exists_closed_form: here,
                exists_numeric: has_stable_pattern(&sols),
                n_stable: sols.iter().filter(|s| s.stable).count(),
                near_boundary: near,
            });
        }
    }
    Ok(cells)
}

/// Numeric existence verdict: a stable nontrivial root was found.
pub fn has_stable_pattern(solutions: &[FwmSolution]) -> bool {
    solutions.iter().any(|s| s.intensity > 0.0 && s.stable)
}
