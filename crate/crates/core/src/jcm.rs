//! Exact Fock-space treatment of a cascade three-level atom emitting photon
//! pairs into two circularly polarized cavity modes: Rabi dynamics, the
//! two-mode phase-difference operator, bright/dark mode operators and the
//! closed-form dark-quadrature and phase variances.
//!
//! The field space is truncated to a window `n_lo..=n_hi` of *complete*
//! total-photon-number blocks `{|m, n−m⟩ : m = 0..n}`: the phase-difference
//! operator is block diagonal in total photon number, so complete blocks keep
//! it exact, and a window around the occupied blocks keeps large `N` cheap.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DMatrix;

use crate::linalg::{inner, propagate_hermitian, SparseMatrix};
use crate::{Error, Result, C64};

/// Window of complete total-photon-number blocks; basis `|n_R = m, n_L = n − m⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpace {
    pub n_lo: usize,
    pub n_hi: usize,
}

impl FockSpace {
    pub fn new(n_lo: usize, n_hi: usize) -> Result<Self> {
        if n_hi < n_lo || n_hi == 0 {
            return Err(Error::Truncation(format!(
                "empty photon-number window {n_lo}..={n_hi}"
            )));
        }
        Ok(Self { n_lo, n_hi })
    }

    /// Window sized for the `|e, N, N⟩` Rabi dynamics (blocks `2N` and
    /// `2N + 2`) with a four-photon margin on each side.
    pub fn for_pairs(n_pairs: usize) -> Self {
        Self {
            n_lo: (2 * n_pairs).saturating_sub(4),
            n_hi: 2 * n_pairs + 8,
        }
    }

    pub fn dim(&self) -> usize {
        self.offset(self.n_hi + 1)
    }

    /// Index of the first state of block `n`.
    pub fn offset(&self, n: usize) -> usize {
        let tri = |k: usize| k * (k + 1) / 2;
        tri(n) - tri(self.n_lo)
    }

    pub fn contains_block(&self, n: usize) -> bool {
        (self.n_lo..=self.n_hi).contains(&n)
    }

    /// Blocks whose neighbours fall outside the window.
    pub fn is_boundary_block(&self, n: usize) -> bool {
        n == self.n_hi || (n == self.n_lo && self.n_lo > 0)
    }

    pub fn index(&self, n_r: usize, n_l: usize) -> Option<usize> {
        let n = n_r + n_l;
        self.contains_block(n).then(|| self.offset(n) + n_r)
    }

    /// `(n_R, n_L)` of every basis state, in index order.
    pub fn labels(&self) -> Vec<(usize, usize)> {
        (self.n_lo..=self.n_hi)
            .flat_map(|n| (0..=n).map(move |m| (m, n - m)))
            .collect()
    }

    fn lowering(&self, right: bool) -> SparseMatrix {
        let trip = self.labels().into_iter().filter_map(|(r, l)| {
            let (k, to) = if right {
                (r, (r.checked_sub(1)?, l))
            } else {
                (l, (r, l.checked_sub(1)?))
            };
            let from = self.index(r, l)?;
            let to = self.index(to.0, to.1)?;
            Some((to, from, C64::new((k as f64).sqrt(), 0.0)))
        });
        SparseMatrix::from_triplets(self.dim(), self.dim(), trip.collect::<Vec<_>>())
    }

    pub fn annihilate_r(&self) -> SparseMatrix {
        self.lowering(true)
    }

    pub fn annihilate_l(&self) -> SparseMatrix {
        self.lowering(false)
    }

    pub fn number_r(&self) -> SparseMatrix {
        let d = self
            .labels()
            .into_iter()
            .enumerate()
            .map(|(i, (r, _))| (i, i, C64::new(r as f64, 0.0)));
        SparseMatrix::from_triplets(self.dim(), self.dim(), d.collect::<Vec<_>>())
    }

    pub fn number_l(&self) -> SparseMatrix {
        let d = self
            .labels()
            .into_iter()
            .enumerate()
            .map(|(i, (_, l))| (i, i, C64::new(l as f64, 0.0)));
        SparseMatrix::from_triplets(self.dim(), self.dim(), d.collect::<Vec<_>>())
    }
}

/// Atom ⊗ field amplitudes; `excited` and `ground` are field vectors over
/// the same [`FockSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeAtomState {
    pub space: FockSpace,
    pub excited: Vec<C64>,
    pub ground: Vec<C64>,
}

impl TwoModeAtomState {
    pub fn norm_sqr(&self) -> f64 {
        self.excited
            .iter()
            .chain(&self.ground)
            .map(|z| z.norm_sqr())
            .sum()
    }

    /// Probability in blocks adjacent to the truncation edges.
    pub fn leakage(&self) -> f64 {
        let sp = self.space;
        (sp.n_lo..=sp.n_hi)
            .filter(|&n| sp.is_boundary_block(n))
            .map(|n| {
                let r = sp.offset(n)..sp.offset(n + 1);
                self.excited[r.clone()]
                    .iter()
                    .chain(&self.ground[r])
                    .map(|z| z.norm_sqr())
                    .sum::<f64>()
            })
            .sum()
    }

    /// `Σ_atom ⟨ψ_a|O|ψ_a⟩` for a field operator `O`.
    pub fn expect(&self, op: &SparseMatrix) -> C64 {
        inner(&self.excited, &op.mul_vec(&self.excited))
            + inner(&self.ground, &op.mul_vec(&self.ground))
    }

    /// `Σ_atom ‖O ψ_a‖²`, i.e. `⟨O†O⟩`.
    pub fn expect_norm(&self, op: &SparseMatrix) -> f64 {
        let n = |v: &[C64]| op.mul_vec(v).iter().map(|z| z.norm_sqr()).sum::<f64>();
        n(&self.excited) + n(&self.ground)
    }

    fn flat(&self) -> Vec<C64> {
        self.excited.iter().chain(&self.ground).copied().collect()
    }

    fn from_flat(space: FockSpace, v: Vec<C64>) -> Self {
        let d = space.dim();
        Self {
            space,
            excited: v[..d].to_vec(),
            ground: v[d..].to_vec(),
        }
    }
}

pub const MAX_LEAKAGE: f64 = 1e-8;

fn check_leakage(state: &TwoModeAtomState) -> Result<()> {
    let l = state.leakage();
    if l > MAX_LEAKAGE {
        return Err(Error::Truncation(format!(
            "state has probability {l:.3e} on the truncation edge of {}..={}",
            state.space.n_lo, state.space.n_hi
        )));
    }
    Ok(())
}

/// Rabi frequency `Ω_N = χ(N + 1)`.
pub fn rabi_frequency(n_pairs: usize, chi: f64) -> f64 {
    chi * (n_pairs + 1) as f64
}

/// `|e, N, N⟩`.
pub fn initial_state(n_pairs: usize, space: FockSpace) -> Result<TwoModeAtomState> {
    let i = space.index(n_pairs, n_pairs).ok_or_else(|| {
        Error::Truncation(format!(
            "|{n_pairs},{n_pairs}⟩ outside {}..={}",
            space.n_lo, space.n_hi
        ))
    })?;
    let mut excited = vec![C64::new(0.0, 0.0); space.dim()];
    excited[i] = C64::new(1.0, 0.0);
    Ok(TwoModeAtomState {
        space,
        excited,
        ground: vec![C64::new(0.0, 0.0); space.dim()],
    })
}

/// Closed-form evolution `cos(Ω_N t)|e,N,N⟩ − i sin(Ω_N t)|f,N+1,N+1⟩`.
pub fn evolve(n_pairs: usize, t: f64, chi: f64, space: FockSpace) -> Result<TwoModeAtomState> {
    let n = 2 * n_pairs;
    if !space.contains_block(n)
        || !space.contains_block(n + 2)
        || space.is_boundary_block(n)
        || space.is_boundary_block(n + 2)
    {
        return Err(Error::Truncation(format!(
            "blocks {n} and {} must lie strictly inside {}..={}",
            n + 2,
            space.n_lo,
            space.n_hi
        )));
    }
    let w = rabi_frequency(n_pairs, chi) * t;
    let mut st = initial_state(n_pairs, space)?;
    st.excited[space.index(n_pairs, n_pairs).unwrap()] = C64::new(w.cos(), 0.0);
    st.ground[space.index(n_pairs + 1, n_pairs + 1).unwrap()] = C64::new(0.0, -w.sin());
    Ok(st)
}

/// Matrix of `H/ħ = χ(σ_{g−e} a_R a_L + σ_{e−g} a_R† a_L†)` over
/// `{|e⟩ ⊗ field, |f⟩ ⊗ field}`.
pub fn hamiltonian_matrix(space: FockSpace, chi: f64) -> SparseMatrix {
    let d = space.dim();
    let pair = space.annihilate_r().matmul(&space.annihilate_l());
    // |e⟩⟨f| ⊗ a_R a_L and its adjoint.
    let trip: Vec<_> = pair
        .triplets()
        .flat_map(|(r, c, v)| [(r, d + c, v * chi), (d + c, r, v.conj() * chi)])
        .collect();
    SparseMatrix::from_triplets(2 * d, 2 * d, trip)
}

/// `exp(−iHt)` applied to an arbitrary state (experimental for states other
/// than `|e, N, N⟩`).
pub fn evolve_numeric(state: &TwoModeAtomState, t: f64, chi: f64) -> Result<TwoModeAtomState> {
    let h = hamiltonian_matrix(state.space, chi);
    let out = propagate_hermitian(&h, t, &state.flat())?;
    Ok(TwoModeAtomState::from_flat(state.space, out))
}

/// A function of the phase-difference operator, stored per photon-number
/// block as Toeplitz coefficients `c_k`, `k = m − m' ∈ −n..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiffOperator {
    pub space: FockSpace,
    pub phi0: f64,
    coeffs: Vec<Vec<C64>>,
}

impl PhaseDiffOperator {
    fn coeff(&self, n: usize, k: isize) -> C64 {
        self.coeffs[n - self.space.n_lo][(k + n as isize) as usize]
    }

    /// Dense `(n+1)×(n+1)` block for total photon number `n`.
    pub fn block(&self, n: usize) -> DMatrix<C64> {
        DMatrix::from_fn(n + 1, n + 1, |m, mp| {
            self.coeff(n, m as isize - mp as isize)
        })
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let sp = self.space;
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        for n in sp.n_lo..=sp.n_hi {
            let o = sp.offset(n);
            for m in 0..=n {
                out[o + m] = (0..=n)
                    .map(|mp| self.coeff(n, m as isize - mp as isize) * v[o + mp])
                    .sum();
            }
        }
        out
    }

    pub fn to_sparse(&self) -> SparseMatrix {
        let sp = self.space;
        let mut trip = Vec::new();
        for n in sp.n_lo..=sp.n_hi {
            let o = sp.offset(n);
            for m in 0..=n {
                for mp in 0..=n {
                    trip.push((o + m, o + mp, self.coeff(n, m as isize - mp as isize)));
                }
            }
        }
        SparseMatrix::from_triplets(sp.dim(), sp.dim(), trip)
    }
}

/// Eigenphases `φ_r^{(n)} = ϕ₀ + 2πr/(n+1)`; the operator `θ̂` (half the
/// phase difference) has eigenvalue `−φ_r/2` on the corresponding state.
pub fn eigenphase(n: usize, r: usize, phi0: f64) -> f64 {
    phi0 + 2.0 * PI * r as f64 / (n + 1) as f64
}

/// `f(θ̂)` by the spectral theorem:
/// `Σ_n 1/(n+1) Σ_{r,m,m'} f(−φ_r/2) e^{i(m−m')φ_r} |m, n−m⟩⟨m', n−m'|`.
pub fn phase_operator_function(
    f: impl Fn(f64) -> C64,
    space: FockSpace,
    phi0: f64,
) -> PhaseDiffOperator {
    let coeffs = (space.n_lo..=space.n_hi)
        .map(|n| {
            let vals: Vec<(f64, C64)> = (0..=n)
                .map(|r| {
                    let phi = eigenphase(n, r, phi0);
                    (phi, f(-0.5 * phi))
                })
                .collect();
            let norm = 1.0 / (n + 1) as f64;
            (-(n as isize)..=n as isize)
                .map(|k| {
                    vals.iter()
                        .map(|&(phi, fv)| fv * C64::from_polar(norm, k as f64 * phi))
                        .sum()
                })
                .collect()
        })
        .collect();
    PhaseDiffOperator {
        space,
        phi0,
        coeffs,
    }
}

/// `a_b = (e^{iθ̂}a_R + e^{−iθ̂}a_L)/√2`, `a_d = i(e^{iθ̂}a_R − e^{−iθ̂}a_L)/√2`,
/// with the exponentials to the left of the annihilators.
pub fn bright_dark_operators(space: FockSpace, phi0: f64) -> (SparseMatrix, SparseMatrix) {
    let e = phase_operator_function(|th| C64::from_polar(1.0, th), space, phi0).to_sparse();
    let em = phase_operator_function(|th| C64::from_polar(1.0, -th), space, phi0).to_sparse();
    let r = e.matmul(&space.annihilate_r());
    let l = em.matmul(&space.annihilate_l());
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    let a_b = r.add(&l).scale(s);
    let a_d = r.sub(&l).scale(C64::new(0.0, FRAC_1_SQRT_2));
    (a_b, a_d)
}

/// `X^φ = e^{−iφ}a + e^{iφ}a†`.
pub fn quadrature_operator(a: &SparseMatrix, phi: f64) -> SparseMatrix {
    a.scale(C64::from_polar(1.0, -phi))
        .add(&a.adjoint().scale(C64::from_polar(1.0, phi)))
}

/// `⟨(δX^φ)²⟩` of a Hermitian quadrature `x`, as `‖Xψ‖² − ⟨X⟩²`.
pub fn operator_variance(state: &TwoModeAtomState, x: &SparseMatrix) -> Result<f64> {
    check_leakage(state)?;
    let mean = state.expect(x).re;
    Ok(state.expect_norm(x) - mean * mean)
}

/// Dark-quadrature variance by matrix algebra.
pub fn dark_variance_numeric(state: &TwoModeAtomState, phi: f64, phi0: f64) -> Result<f64> {
    let (_, a_d) = bright_dark_operators(state.space, phi0);
    operator_variance(state, &quadrature_operator(&a_d, phi))
}

/// `s(M) = (2M+1)⁻² Σ_{m=0}^{2M} √(m(2M+1−m)) sin⁻²[(M − m + ½)π/(2M+1)]`.
pub fn s_sum(big_m: usize) -> f64 {
    let k = (2 * big_m + 1) as f64;
    let total: f64 = (0..=2 * big_m)
        .map(|m| {
            let mf = m as f64;
            let arg = (big_m as f64 - mf + 0.5) * PI / k;
            (mf * (k - mf)).sqrt() / arg.sin().powi(2)
        })
        .sum();
    total / (k * k)
}

/// Smallest `|sin|` entering `s(M)`; bounded away from zero for every `M`.
pub fn s_sum_min_sine(big_m: usize) -> f64 {
    let k = (2 * big_m + 1) as f64;
    (0..=2 * big_m)
        .map(|m| ((big_m as f64 - m as f64 + 0.5) * PI / k).sin().abs())
        .fold(f64::INFINITY, f64::min)
}

/// Closed-form dark-quadrature variance (independent of the quadrature angle).
pub fn dark_variance_closed(n_pairs: usize, t: f64, chi: f64) -> f64 {
    let n = n_pairs as f64;
    let w = rabi_frequency(n_pairs, chi) * t;
    let (s2, c2) = (w.sin().powi(2), w.cos().powi(2));
    1.0 + (2.0 * n * n / (2.0 * n + 1.0) - s_sum(n_pairs)) * c2
        + (2.0 * (n + 1.0).powi(2) / (2.0 * n + 3.0) - s_sum(n_pairs + 1)) * s2
}

/// Closed-form phase variance `V(θ)`.
pub fn phase_variance_closed(n_pairs: usize, t: f64, chi: f64) -> f64 {
    let n = n_pairs as f64;
    let s2 = (rabi_frequency(n_pairs, chi) * t).sin().powi(2);
    PI * PI / 3.0
        * (n * (n + 1.0) / (2.0 * n + 1.0).powi(2)
            + ((5.0 + 2.0 * n) * s2 - 3.0 * s2 * s2) / (3.0 + 4.0 * n * (2.0 + n)).powi(2))
}

/// `⟨θ̂²⟩ − ⟨θ̂⟩²` with both moments built by the spectral theorem.
pub fn phase_variance_numeric(state: &TwoModeAtomState, phi0: f64) -> Result<f64> {
    check_leakage(state)?;
    let th = phase_operator_function(|x| C64::new(x, 0.0), state.space, phi0);
    let th2 = phase_operator_function(|x| C64::new(x * x, 0.0), state.space, phi0);
    let e = |op: &PhaseDiffOperator| {
        inner(&state.excited, &op.apply(&state.excited))
            + inner(&state.ground, &op.apply(&state.ground))
    };
    let m1 = e(&th).re;
    Ok(e(&th2).re - m1 * m1)
}

/// Mean bright and dark photon numbers `(⟨a_b†a_b⟩, ⟨a_d†a_d⟩)`.
pub fn mode_occupations(state: &TwoModeAtomState, phi0: f64) -> Result<(f64, f64)> {
    check_leakage(state)?;
    let (a_b, a_d) = bright_dark_operators(state.space, phi0);
    Ok((state.expect_norm(&a_b), state.expect_norm(&a_d)))
}
