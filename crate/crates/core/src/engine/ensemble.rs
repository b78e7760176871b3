use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::sde::{SdeModel, SemiImplicitStepper};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryConfig {
    pub dt: f64,
    pub t_end: f64,
    pub record_stride: usize,
    pub seed: u64,
    pub midpoint_iterations: usize,
}

impl TrajectoryConfig {
    pub fn new(dt: f64, t_end: f64, record_stride: usize, seed: u64) -> Self {
        Self {
            dt,
            t_end,
            record_stride,
            seed,
            midpoint_iterations: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_end >= self.dt) {
            return Err(Error::InvalidParameter(format!(
                "t_end = {} must be at least dt = {}",
                self.t_end, self.dt
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidParameter("record_stride must be >= 1".into()));
        }
        if self.midpoint_iterations == 0 {
            return Err(Error::InvalidParameter(
                "midpoint_iterations must be >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt + 1e-9).floor() as usize
    }

    pub fn n_records(&self) -> usize {
        self.n_steps() / self.record_stride + 1
    }

    pub fn time_grid(&self) -> Vec<f64> {
        let rec_dt = self.dt * self.record_stride as f64;
        (0..self.n_records()).map(|i| i as f64 * rec_dt).collect()
    }
}

/// The RNG stream of trajectory `index`. Depends only on `(seed, index)`.
pub fn trajectory_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Per-trajectory recorder of complex observables.
///
/// Positive-P stochastic images of Hermitian operators are complex; their
/// stochastic averages are real. An observer may carry state across records
/// (e.g. to unwrap a phase), which is why one is built per trajectory.
pub trait Observer {
    fn width(&self) -> usize;
    fn observe(&mut self, t: f64, state: &[C64], out: &mut [C64]);
}

pub type ObservableFn = Box<dyn Fn(&[C64]) -> C64 + Send + Sync>;

/// Stateless observer over a list of pure maps.
pub struct FnObserver<'a>(pub &'a [ObservableFn]);

impl Observer for FnObserver<'_> {
    fn width(&self) -> usize {
        self.0.len()
    }
    fn observe(&mut self, _t: f64, state: &[C64], out: &mut [C64]) {
        for (o, f) in out.iter_mut().zip(self.0) {
            *o = f(state);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    /// Number of trajectories kept (diverged ones are excluded).
    pub n_traj: usize,
    pub n_diverged: usize,
    pub time_grid: Vec<f64>,
    pub width: usize,
    /// `records[i][r * width + k]`: observable `k` at record `r` of trajectory `i`.
    pub records: Vec<Vec<C64>>,
    /// Original trajectory indices of the kept records.
    pub indices: Vec<usize>,
}

impl EnsembleResult {
    pub fn record_dt(&self) -> f64 {
        if self.time_grid.len() > 1 {
            self.time_grid[1] - self.time_grid[0]
        } else {
            0.0
        }
    }

    pub fn series(&self, traj: usize, obs: usize) -> impl Iterator<Item = C64> + '_ {
        self.records[traj]
            .iter()
            .skip(obs)
            .step_by(self.width)
            .copied()
    }

    /// Ensemble mean of observable `obs` at every record time.
    pub fn mean(&self, obs: usize) -> Vec<C64> {
        let n = self.time_grid.len();
        let mut acc = vec![C64::new(0.0, 0.0); n];
        for rec in &self.records {
            for (a, v) in acc.iter_mut().zip(rec.iter().skip(obs).step_by(self.width)) {
                *a += v;
            }
        }
        let norm = 1.0 / self.n_traj as f64;
        acc.iter_mut().for_each(|a| *a *= norm);
        acc
    }

    /// Ensemble variance `⟨δX²⟩` (no conjugation) of `obs` at every record time.
    pub fn variance(&self, obs: usize) -> Vec<C64> {
        let mean = self.mean(obs);
        let mut acc = vec![C64::new(0.0, 0.0); mean.len()];
        for rec in &self.records {
            for ((a, v), m) in acc
                .iter_mut()
                .zip(rec.iter().skip(obs).step_by(self.width))
                .zip(&mean)
            {
                let d = v - m;
                *a += d * d;
            }
        }
        let norm = 1.0 / self.n_traj as f64;
        acc.iter_mut().for_each(|a| *a *= norm);
        acc
    }
}

fn run_one<M, O>(
    model: &M,
    cfg: &TrajectoryConfig,
    index: usize,
    initial: &[C64],
    mut obs: O,
) -> Option<Vec<C64>>
where
    M: SdeModel + ?Sized,
    O: Observer,
{
    let mut rng = trajectory_rng(cfg.seed, index);
    let width = obs.width();
    let n_steps = cfg.n_steps();
    let mut rec = vec![C64::new(0.0, 0.0); width * cfg.n_records()];
    let mut state = initial.to_vec();
    let mut stepper = SemiImplicitStepper::new(model.dim(), cfg.midpoint_iterations);
    let mut dw = vec![0.0; model.n_noises()];
    let sq = cfg.dt.sqrt();

    obs.observe(0.0, &state, &mut rec[..width]);
    let mut slot = 1;
    for n in 0..n_steps {
        for w in dw.iter_mut() {
            *w = sq * rng.sample::<f64, _>(StandardNormal);
        }
        let t = n as f64 * cfg.dt;
        stepper.step(model, &mut state, t, cfg.dt, &dw).ok()?;
        if (n + 1) % cfg.record_stride == 0 {
            let out = &mut rec[slot * width..(slot + 1) * width];
            obs.observe(t + cfg.dt, &state, out);
            if out.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return None;
            }
            slot += 1;
        }
    }
    Some(rec)
}

/// Integrates `n_traj` independent trajectories from `initial`.
///
/// Trajectory `i` draws its noise from [`trajectory_rng`]`(cfg.seed, i)`, so
/// the result does not depend on scheduling. Diverged trajectories are
/// dropped and counted; more than 1% diverged is an error.
pub fn run_ensemble<M, F, O>(
    model: &M,
    cfg: &TrajectoryConfig,
    n_traj: usize,
    initial: &[C64],
    make_observer: F,
) -> Result<EnsembleResult>
where
    M: SdeModel + ?Sized,
    F: Fn(usize) -> O + Sync,
    O: Observer,
{
    cfg.validate()?;
    if n_traj == 0 {
        return Err(Error::InvalidParameter("n_traj must be >= 1".into()));
    }
    if initial.len() != model.dim() {
        return Err(Error::InvalidParameter(format!(
            "initial state has {} entries, model `{}` expects {}",
            initial.len(),
            model.name(),
            model.dim()
        )));
    }
    let width = make_observer(0).width();
    let runs: Vec<Option<Vec<C64>>> = (0..n_traj)
        .into_par_iter()
        .map(|i| run_one(model, cfg, i, initial, make_observer(i)))
        .collect();

    let mut records = Vec::with_capacity(n_traj);
    let mut indices = Vec::with_capacity(n_traj);
    for (i, r) in runs.into_iter().enumerate() {
        if let Some(r) = r {
            records.push(r);
            indices.push(i);
        }
    }
    let n_diverged = n_traj - records.len();
    if records.is_empty() {
        return Err(Error::AllDiverged {
            model: model.name().to_string(),
            dt: cfg.dt,
            n_traj,
        });
    }
    if n_diverged * 100 > n_traj {
        return Err(Error::TooManyDiverged {
            model: model.name().to_string(),
            diverged: n_diverged,
            n_traj,
        });
    }
    Ok(EnsembleResult {
        n_traj: records.len(),
        n_diverged,
        time_grid: cfg.time_grid(),
        width,
        records,
        indices,
    })
}
