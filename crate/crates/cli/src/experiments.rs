//! One runner per experiment id. Each returns a [`Table`] whose header
//! starts with the resolved configuration, followed by derived summary
//! values, followed by the data rows.

use std::f64::consts::{FRAC_PI_2, PI};

use ssb_squeezing::csv::Table;
use ssb_squeezing::dopo::{
    self, col, dark_spectrum_analytic, dopo_model, fixed_lo_optimum, optimal_detection_time,
    optimal_detection_time_numeric, seeded_dark_spectrum, seeded_q, seeded_steady_state,
    theta_variance_analytic, DopoObserver, DopoParams, DopoState, LoReference,
};
use ssb_squeezing::engine::{
    linear_fit, noise_spectrum, run_ensemble, SpectrumOptions, TrajectoryConfig,
};
use ssb_squeezing::fwm::region_map;
use ssb_squeezing::jcm::{
    dark_variance_closed, dark_variance_numeric, evolve_numeric, initial_state, mode_occupations,
    phase_variance_closed, phase_variance_numeric, FockSpace,
};
use ssb_squeezing::modes::{hg10_mode, ModeField, ModeGrid};
use ssb_squeezing::spatial::{
    self, analyse_pattern, diffusion_coefficient, pattern_solve, Ansatz, SpatialParams,
};
use ssb_squeezing::C64;

use crate::config::{Experiment, ExperimentConfig};
use crate::CliError;

/// Runs the configured experiment.
pub fn run(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let mut table = match cfg.experiment {
        Experiment::DopoSpectrum => dopo_spectrum(cfg)?,
        Experiment::DopoOrientation => dopo_orientation(cfg)?,
        Experiment::DopoFixedLo => dopo_fixed_lo(cfg)?,
        Experiment::DopoSeeded => dopo_seeded(cfg)?,
        Experiment::FwmRegion => fwm_region(cfg)?,
        Experiment::SpatialDiffusion => spatial_diffusion(cfg)?,
        Experiment::JcmVariance => jcm_variance(cfg)?,
        Experiment::ModesCheck => modes_check(cfg)?,
    };
    let mut header = cfg.header_lines();
    header.append(&mut table.header);
    table.header = header;
    Ok(table)
}

fn db(v: f64) -> f64 {
    10.0 * v.log10()
}

/// `n` evenly spaced points on `[lo, hi]`.
fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn logspace(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, CliError> {
    if !(lo > 0.0 && hi > 0.0) {
        return Err(CliError::Config(format!(
            "log grid bounds must be positive, got [{lo}, {hi}]"
        )));
    }
    let mut grid: Vec<f64> = linspace(lo.ln(), hi.ln(), n)
        .into_iter()
        .map(f64::exp)
        .collect();
    // Keep the requested endpoints exact.
    if let Some(first) = grid.first_mut() {
        *first = lo;
    }
    if n > 1 {
        grid[n - 1] = hi;
    }
    Ok(grid)
}

fn require_points(n: usize, key: &str) -> Result<usize, CliError> {
    if n == 0 {
        return Err(CliError::Config(format!("`{key}` must be at least 1")));
    }
    Ok(n)
}

fn trajectory_config(cfg: &ExperimentConfig) -> Result<TrajectoryConfig, CliError> {
    Ok(TrajectoryConfig::new(
        cfg.f64("dt")?,
        cfg.f64("t_end")?,
        cfg.usize("stride")?,
        cfg.seed,
    ))
}

fn dopo_ensemble(
    cfg: &ExperimentConfig,
) -> Result<(DopoParams, ssb_squeezing::engine::EnsembleResult), CliError> {
    let p = DopoParams::from_sigma_d(
        cfg.f64("sigma")?,
        cfg.f64("d")?,
        cfg.f64("gamma_p")?,
        cfg.f64("gamma_s")?,
    )?;
    let rho = p
        .rho()
        .ok_or_else(|| CliError::Config(format!("σ = {} is not above threshold", p.sigma())))?;
    let x0 = DopoState::broken(&p, cfg.f64("theta0")?)?.to_vec();
    let res = run_ensemble(
        &dopo_model(p),
        &trajectory_config(cfg)?,
        require_points(cfg.usize("n_traj")?, "n_traj")?,
        &x0,
        |_| DopoObserver::new(LoReference::CoRotating, rho),
    )?;
    Ok((p, res))
}

fn dopo_spectrum(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let (p, res) = dopo_ensemble(cfg)?;
    let omegas = cfg.f64_list("omegas")?;
    let opts = SpectrumOptions {
        t_transient: cfg.f64("t_transient")?,
        segment: Some(cfg.f64("segment")?),
        ..Default::default()
    };
    let s = noise_spectrum(&res, col::Y_DARK, p.gamma_s, &omegas, &opts)?;
    let mut t = Table::new(["omega", "V_sim", "V_analytic", "stderr", "V_dB"]);
    let mut max_dev = 0.0f64;
    for (j, &w) in omegas.iter().enumerate() {
        let analytic = dark_spectrum_analytic(w, p.gamma_s);
        max_dev = max_dev.max((s.values[j] - analytic).abs());
        t.push(vec![w, s.values[j], analytic, s.stderr[j], db(s.values[j])]);
    }
    t.comment(format!("n_kept = {}", res.n_traj));
    t.comment(format!("n_diverged = {}", res.n_diverged));
    t.comment(format!("max_abs_dev = {max_dev:e}"));
    Ok(t)
}

fn dopo_orientation(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let (p, res) = dopo_ensemble(cfg)?;
    let t_fit = cfg.f64("t_fit")?;
    let var = res.variance(col::THETA);
    let mut t = Table::new(["t", "var_theta", "var_analytic"]);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (&time, v) in res.time_grid.iter().zip(&var) {
        t.push(vec![time, v.re, theta_variance_analytic(&p, time)?]);
        if time >= t_fit {
            xs.push(time);
            ys.push(v.re);
        }
    }
    if xs.len() < 3 {
        return Err(CliError::Config(format!(
            "fewer than 3 records after t_fit = {t_fit}"
        )));
    }
    let (slope, intercept, r2) = linear_fit(&xs, &ys);
    let expected = theta_variance_analytic(&p, 1.0)?;
    t.comment(format!("n_kept = {}", res.n_traj));
    t.comment(format!("n_diverged = {}", res.n_diverged));
    t.comment(format!("slope = {slope:e}"));
    t.comment(format!("slope_analytic = {expected:e}"));
    t.comment(format!("slope_ratio = {:e}", slope / expected));
    t.comment(format!("intercept = {intercept:e}"));
    t.comment(format!("r2 = {r2:e}"));
    Ok(t)
}

fn dopo_fixed_lo(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let (sigma, d, gamma_s) = (cfg.f64("sigma")?, cfg.f64("d")?, cfg.f64("gamma_s")?);
    let t_opt = optimal_detection_time(sigma, d)?;
    let t_num = optimal_detection_time_numeric(sigma, d)?;
    let t_det = match cfg.f64("t_det")? {
        t if t > 0.0 => t,
        _ => t_opt / gamma_s,
    };
    let omega_max = cfg.f64("omega_max")?;
    let phis = linspace(
        cfg.f64("phi_min")?,
        cfg.f64("phi_max")?,
        require_points(cfg.usize("n_phi")?, "n_phi")?,
    );
    let mut t = Table::new(["phi_deg", "omega_opt", "V_min", "V_dB", "t_det"]);
    let mut best = (f64::NAN, f64::INFINITY);
    for deg in phis {
        let (w, v) = fixed_lo_optimum(deg.to_radians(), t_det, d, sigma, gamma_s, omega_max)?;
        if v < best.1 {
            best = (deg, v);
        }
        t.push(vec![deg, w, v, db(v), t_det]);
    }
    t.comment(format!("t_opt_closed = {t_opt:e}"));
    t.comment(format!("t_opt_numeric = {t_num:e}"));
    t.comment(format!("t_opt_rel_dev = {:e}", (t_num / t_opt - 1.0).abs()));
    t.comment(format!("phi_best_deg = {:e}", best.0));
    Ok(t)
}

fn dopo_seeded(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let (sigma, gamma_s) = (cfg.f64("sigma")?, cfg.f64("gamma_s")?);
    let grid = logspace(
        cfg.f64("is_min")?,
        cfg.f64("is_max")?,
        require_points(cfg.usize("n_is")?, "n_is")?,
    )?;
    let mut t = Table::new([
        "I_s", "n_roots", "root_lo", "root_mid", "root_hi", "I10", "q", "V0", "V_dB",
    ]);
    for i_s in grid {
        let ss = seeded_steady_state(sigma, i_s)?;
        let root = |k: usize| ss.roots.get(k).copied().unwrap_or(f64::NAN);
        let (lo, mid, hi) = match ss.roots.len() {
            3 => (root(0), root(1), root(2)),
            _ => (f64::NAN, f64::NAN, ss.stable),
        };
        let q = seeded_q(sigma, ss.stable);
        let v0 = seeded_dark_spectrum(0.0, q, gamma_s);
        t.push(vec![
            i_s,
            ss.roots.len() as f64,
            lo,
            mid,
            hi,
            ss.stable,
            q,
            v0,
            db(v0),
        ]);
    }
    t.comment(format!(
        "three_root_limit = {:e}",
        8.0 * (sigma - 1.0).powi(3) / 27.0
    ));
    t.comment(format!("q_factor = {:e}", dopo::SEED_Q_FACTOR));
    Ok(t)
}

fn fwm_region(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let deltas = linspace(
        cfg.f64("delta_min")?,
        cfg.f64("delta_max")?,
        require_points(cfg.usize("n_delta")?, "n_delta")?,
    );
    let rho2s = linspace(
        cfg.f64("rho2_min")?,
        cfg.f64("rho2_max")?,
        require_points(cfg.usize("n_rho2")?, "n_rho2")?,
    );
    let cells = region_map(&deltas, &rho2s, cfg.f64("g")?, cfg.f64("gamma_s")?)?;
    let mut t = Table::new([
        "delta",
        "rho2",
        "closed_form",
        "numeric",
        "n_stable",
        "near_boundary",
    ]);
    let (mut disagree, mut bistable) = (0usize, 0usize);
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    for c in &cells {
        if !c.near_boundary && c.exists_closed_form != c.exists_numeric {
            disagree += 1;
        }
        if c.exists_closed_form && c.n_stable >= 2 {
            bistable += 1;
        }
        t.push(vec![
            c.delta,
            c.rho2,
            flag(c.exists_closed_form),
            flag(c.exists_numeric),
            c.n_stable as f64,
            flag(c.near_boundary),
        ]);
    }
    t.comment(format!("n_disagree_off_boundary = {disagree}"));
    t.comment(format!("n_bistable = {bistable}"));
    Ok(t)
}

fn spatial_params(cfg: &ExperimentConfig) -> Result<SpatialParams, CliError> {
    let mut p = SpatialParams::stripe_default(cfg.f64("chi")?);
    p.gamma_p = cfg.f64("gamma_p")?;
    p.gamma_s = cfg.f64("gamma_s")?;
    p.delta_p = cfg.f64("delta_p")?;
    p.delta_s = cfg.f64("delta_s")?;
    p.l_s = cfg.f64("l_s")?;
    p.n_grid = cfg.usize("n_grid")?;
    p.ep = cfg.f64("gain")? * p.gamma_s * C64::new(p.gamma_p, p.delta_p).norm() / p.chi;
    if !(p.delta_s < 0.0) {
        return Err(CliError::Config(format!(
            "stripes need delta_s < 0, got {}",
            p.delta_s
        )));
    }
    p.l_domain = 2.0 * PI / p.critical_wavenumber();
    p.validate()?;
    Ok(p)
}

fn spatial_diffusion(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let p = spatial_params(cfg)?;
    let pattern = pattern_solve(&p, Ansatz::Stripe)?;
    let analysis = analyse_pattern(&pattern)?;
    let d = diffusion_coefficient(&pattern, &analysis);
    let t_fit = cfg.f64("t_fit")?;
    let run = spatial::simulate_diffusion(
        &pattern,
        &trajectory_config(cfg)?,
        require_points(cfg.usize("n_traj")?, "n_traj")?,
        t_fit,
    )?;
    let opts = SpectrumOptions {
        t_transient: t_fit,
        segment: Some(40.0),
        ..Default::default()
    };
    let dark = noise_spectrum(&run.ensemble, spatial::obs::DARK, p.gamma_s, &[0.0], &opts)?;
    let mut t = Table::new(["t", "var_x0", "var_theory"]);
    for (&time, &v) in run.times.iter().zip(&run.var_x0) {
        t.push(vec![time, v, run.intercept + d * time]);
    }
    let l0 = analysis.goldstone_eigenvalue();
    let lsq = analysis.squeezed_eigenvalue();
    t.comment(format!("D = {d:e}"));
    t.comment(format!("slope = {:e}", run.slope));
    t.comment(format!("slope_ratio = {:e}", run.slope / d));
    t.comment(format!("intercept = {:e}", run.intercept));
    t.comment(format!("r2 = {:e}", run.r2));
    t.comment(format!("lambda0 = {:e},{:e}", l0.re, l0.im));
    t.comment(format!("lambda_sq = {:e},{:e}", lsq.re, lsq.im));
    t.comment(format!(
        "max_stable_growth = {:e}",
        analysis.max_stable_growth()
    ));
    t.comment(format!("V_dark0 = {:e}", dark.values[0]));
    t.comment(format!("V_dark0_stderr = {:e}", dark.stderr[0]));
    t.comment(format!("n_lost = {}", run.n_lost));
    t.comment(format!("n_diverged = {}", run.ensemble.n_diverged));
    Ok(t)
}

fn jcm_variance(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let (chi, phi, phi0) = (cfg.f64("chi")?, cfg.f64("phi")?, cfg.f64("phi0")?);
    let times = linspace(
        0.0,
        cfg.f64("t_max")?,
        require_points(cfg.usize("n_t")?, "n_t")?,
    );
    let mut t = Table::new([
        "N",
        "t",
        "V_dark_closed",
        "V_dark_numeric",
        "V_phase_closed",
        "V_phase_numeric",
        "n_dark",
    ]);
    let (mut dev_dark, mut dev_phase, mut max_n_dark) = (0.0f64, 0.0f64, 0.0f64);
    for n in cfg.usize_list("N")? {
        let psi0 = initial_state(n, FockSpace::for_pairs(n))?;
        for &time in &times {
            let st = evolve_numeric(&psi0, time, chi)?;
            let (vdc, vdn) = (
                dark_variance_closed(n, time, chi),
                dark_variance_numeric(&st, phi, phi0)?,
            );
            let (vpc, vpn) = (
                phase_variance_closed(n, time, chi),
                phase_variance_numeric(&st, phi0)?,
            );
            let (_, n_dark) = mode_occupations(&st, phi0)?;
            dev_dark = dev_dark.max((vdc - vdn).abs());
            dev_phase = dev_phase.max((vpc - vpn).abs());
            max_n_dark = max_n_dark.max(n_dark.abs());
            t.push(vec![n as f64, time, vdc, vdn, vpc, vpn, n_dark]);
        }
    }
    t.comment(format!("max_dev_dark = {dev_dark:e}"));
    t.comment(format!("max_dev_phase = {dev_phase:e}"));
    t.comment(format!("max_n_dark = {max_n_dark:e}"));
    Ok(t)
}

fn max_diff(a: &ModeField, b: &ModeField) -> f64 {
    a.samples
        .iter()
        .zip(&b.samples)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn modes_check(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let (w_s, eps) = (cfg.f64("w_s")?, cfg.f64("eps")?);
    let grid = ModeGrid::new(cfg.f64("half_width")?, cfg.usize("n_grid")?)?;
    let n_psi = require_points(cfg.usize("n_psi")?, "n_psi")?;
    let h0 = hg10_mode(0.0, w_s, &grid)?;
    let mut t = Table::new([
        "psi",
        "superposition_err",
        "resample_err",
        "orth_err",
        "dpsi_err",
    ]);
    for k in 0..n_psi {
        let psi = PI * k as f64 / n_psi as f64;
        let h = hg10_mode(psi, w_s, &grid)?;
        let (s, c) = psi.sin_cos();
        let exact = ModeField::from_fn(grid, w_s, |x, y| {
            let (xr, yr) = ((c * x + s * y) / w_s, (-s * x + c * y) / w_s);
            C64::new(xr * (-(xr * xr + yr * yr)).exp(), 0.0)
        })?;
        let dark = hg10_mode(psi + FRAC_PI_2, w_s, &grid)?;
        let ahead = hg10_mode(psi + eps, w_s, &grid)?;
        let orth = ssb_squeezing::modes::overlap(&h, &dark)?
            .norm()
            .max((h.norm_sqr() - 1.0).abs());
        let scale = dark.samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let dpsi = h
            .samples
            .iter()
            .zip(&ahead.samples)
            .zip(&dark.samples)
            .map(|((a, b), d)| ((b - a) / eps - d).norm())
            .fold(0.0, f64::max)
            / scale;
        t.push(vec![
            psi,
            max_diff(&h, &exact),
            max_diff(&h, &h0.rotated(psi)),
            orth,
            dpsi,
        ]);
    }
    Ok(t)
}
