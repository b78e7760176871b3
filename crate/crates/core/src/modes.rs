//! Transverse mode functions at the waist plane: the Gaussian pump mode, the
//! Laguerre–Gauss pair `L_{±1}` of the first family and the rotated
//! Hermite–Gauss superposition `H₁₀^ψ`, sampled on a square Cartesian grid.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::csv::Table;
use crate::{Error, Result, C64};

/// Minimum samples per waist radius before a mode is considered resolved.
pub const MIN_POINTS_PER_WAIST: f64 = 16.0;

/// Square grid `[-L, L]²` with an odd number of nodes per axis so the origin
/// is a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeGrid {
    half_width: f64,
    n: usize,
}

impl ModeGrid {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid half-width must be positive, got {half_width}"
            )));
        }
        if n < 3 || n % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "grid needs an odd node count ≥ 3, got {n}"
            )));
        }
        Ok(Self { half_width, n })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    /// Node index of `(ix, iy)` in the row-major sample vector.
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.n + ix
    }

    fn check_resolution(&self, waist: f64) -> Result<()> {
        if !(waist > 0.0) || !waist.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "waist must be positive, got {waist}"
            )));
        }
        let per_waist = waist / self.spacing();
        if per_waist < MIN_POINTS_PER_WAIST {
            return Err(Error::UnderResolved(format!(
                "{per_waist:.1} grid points per waist {waist}, need at least {MIN_POINTS_PER_WAIST}"
            )));
        }
        Ok(())
    }
}

/// Complex samples of a mode on a [`ModeGrid`], unit-normalized so that
/// `Σ|u|²·h² = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeField {
    pub grid: ModeGrid,
    pub waist: f64,
    pub samples: Vec<C64>,
}

impl ModeField {
    /// Sample `f(x, y)` on the grid and normalize.
    pub fn from_fn(grid: ModeGrid, waist: f64, f: impl Fn(f64, f64) -> C64) -> Result<Self> {
        grid.check_resolution(waist)?;
        let n = grid.n_points();
        let mut samples = Vec::with_capacity(n * n);
        for iy in 0..n {
            let y = grid.coord(iy);
            for ix in 0..n {
                samples.push(f(grid.coord(ix), y));
            }
        }
        let mut field = Self {
            grid,
            waist,
            samples,
        };
        field.normalize()?;
        Ok(field)
    }

    pub fn norm_sqr(&self) -> f64 {
        let h = self.grid.spacing();
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * h * h
    }

    fn normalize(&mut self) -> Result<()> {
        let n2 = self.norm_sqr();
        if !(n2 > 0.0) || !n2.is_finite() {
            return Err(Error::ZeroAmplitude);
        }
        let s = 1.0 / n2.sqrt();
        self.samples.iter_mut().for_each(|z| *z *= s);
        Ok(())
    }

    pub fn at(&self, ix: usize, iy: usize) -> C64 {
        self.samples[self.grid.index(ix, iy)]
    }

    /// Bilinear interpolation at an arbitrary point; zero outside the grid.
    pub fn interpolate(&self, x: f64, y: f64) -> C64 {
        let g = &self.grid;
        let h = g.spacing();
        let fx = (x + g.half_width()) / h;
        let fy = (y + g.half_width()) / h;
        let last = (g.n_points() - 1) as f64;
        if !(0.0..=last).contains(&fx) || !(0.0..=last).contains(&fy) {
            return C64::new(0.0, 0.0);
        }
        let ix = (fx.floor() as usize).min(g.n_points() - 2);
        let iy = (fy.floor() as usize).min(g.n_points() - 2);
        let tx = fx - ix as f64;
        let ty = fy - iy as f64;
        self.at(ix, iy) * ((1.0 - tx) * (1.0 - ty))
            + self.at(ix + 1, iy) * (tx * (1.0 - ty))
            + self.at(ix, iy + 1) * ((1.0 - tx) * ty)
            + self.at(ix + 1, iy + 1) * (tx * ty)
    }

    /// Resample the field rotated by `psi` about the origin (bilinear), i.e.
    /// `u'(r) = u(R(−ψ) r)`. Accurate to interpolation order `O(h²)`.
    pub fn rotated(&self, psi: f64) -> Self {
        let (s, c) = psi.sin_cos();
        let g = self.grid;
        let n = g.n_points();
        let mut samples = Vec::with_capacity(n * n);
        for iy in 0..n {
            let y = g.coord(iy);
            for ix in 0..n {
                let x = g.coord(ix);
                samples.push(self.interpolate(c * x + s * y, -s * x + c * y));
            }
        }
        Self {
            grid: g,
            waist: self.waist,
            samples,
        }
    }

    /// `(x, y, Re, Im)` rows for plotting.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["x", "y", "re", "im"]);
        let g = &self.grid;
        for iy in 0..g.n_points() {
            for ix in 0..g.n_points() {
                let z = self.at(ix, iy);
                t.push(vec![g.coord(ix), g.coord(iy), z.re, z.im]);
            }
        }
        t
    }
}

/// Gaussian pump mode `∝ exp(−r²/w_p²)`.
pub fn gauss_mode(w_p: f64, grid: &ModeGrid) -> Result<ModeField> {
    ModeField::from_fn(*grid, w_p, |x, y| {
        C64::new((-(x * x + y * y) / (w_p * w_p)).exp(), 0.0)
    })
}

/// Laguerre–Gauss mode of charge ±1, `∝ r exp(−r²/w_s²) e^{±iφ}`.
pub fn lg_mode(charge: i32, w_s: f64, grid: &ModeGrid) -> Result<ModeField> {
    let sign = match charge {
        1 => 1.0,
        -1 => -1.0,
        _ => {
            return Err(Error::InvalidParameter(format!(
                "LG charge must be ±1, got {charge}"
            )))
        }
    };
    ModeField::from_fn(*grid, w_s, |x, y| {
        C64::new(x, sign * y) * (-(x * x + y * y) / (w_s * w_s)).exp()
    })
}

/// Hermite–Gauss `H₁₀` mode oriented along `psi`:
/// `[e^{−iψ} L₊₁ + e^{iψ} L₋₁]/√2`, built from the normalized LG pair.
pub fn hg10_mode(psi: f64, w_s: f64, grid: &ModeGrid) -> Result<ModeField> {
    let lp = lg_mode(1, w_s, grid)?;
    let lm = lg_mode(-1, w_s, grid)?;
    Ok(hg10_from_pair(psi, &lp, &lm))
}

/// The `H₁₀^ψ` superposition of an already-sampled LG pair.
pub fn hg10_from_pair(psi: f64, lp: &ModeField, lm: &ModeField) -> ModeField {
    let ep = C64::from_polar(FRAC_1_SQRT_2, -psi);
    let em = C64::from_polar(FRAC_1_SQRT_2, psi);
    let samples = lp
        .samples
        .iter()
        .zip(&lm.samples)
        .map(|(&a, &b)| ep * a + em * b)
        .collect();
    ModeField {
        grid: lp.grid,
        waist: lp.waist,
        samples,
    }
}

/// Inner product `Σ f*·g·h²`.
pub fn overlap(f: &ModeField, g: &ModeField) -> Result<C64> {
    if f.grid != g.grid {
        return Err(Error::GridMismatch(format!("{:?} vs {:?}", f.grid, g.grid)));
    }
    let h = f.grid.spacing();
    let s: C64 = f
        .samples
        .iter()
        .zip(&g.samples)
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(s * (h * h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, SQRT_2};

    const WS: f64 = 1.0;

    fn grid() -> ModeGrid {
        // 30 nodes per waist, ±4 waists.
        ModeGrid::new(4.0, 241).unwrap()
    }

    fn max_diff(a: &ModeField, b: &ModeField) -> f64 {
        a.samples
            .iter()
            .zip(&b.samples)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn grid_validation() {
        assert!(ModeGrid::new(1.0, 10).is_err());
        assert!(ModeGrid::new(-1.0, 11).is_err());
        let g = ModeGrid::new(2.0, 5).unwrap();
        assert_eq!(g.coord(2), 0.0);
        assert!(matches!(gauss_mode(0.1, &g), Err(Error::UnderResolved(_))));
    }

    #[test]
    fn gaussian_profile() {
        let g = grid();
        let wp = WS / SQRT_2;
        let m = gauss_mode(wp, &g).unwrap();
        assert!((m.norm_sqr() - 1.0).abs() < 1e-10);
        let c = m.at(120, 120).re;
        assert!((m.interpolate(wp, 0.0).re / c - (-1.0f64).exp()).abs() < 5e-3);
        // Exact at a node: r = 0.8 lies on the grid (h = 1/30).
        let r = 0.8;
        assert!((m.at(120 + 24, 120).re / c - (-(r * r) / (wp * wp)).exp()).abs() < 1e-12);
        for k in 0..8 {
            let a = k as f64 * 0.37;
            let v = m.interpolate(r * a.cos(), r * a.sin()).re;
            assert!((v - m.at(144, 120).re).abs() < 2e-2 * c, "angle {a}");
        }
    }

    #[test]
    fn lg_pair_properties() {
        let g = grid();
        let lp = lg_mode(1, WS, &g).unwrap();
        let lm = lg_mode(-1, WS, &g).unwrap();
        let gm = gauss_mode(WS / SQRT_2, &g).unwrap();
        assert!(overlap(&lp, &lm).unwrap().norm() < 1e-10);
        assert!(overlap(&gm, &lp).unwrap().norm() < 1e-10);
        assert!((overlap(&lp, &lp).unwrap() - 1.0).norm() < 1e-10);
        assert_eq!(lp.at(120, 120).norm(), 0.0);
        let radial: Vec<f64> = (120..241).map(|i| lp.at(i, 120).norm()).collect();
        let imax = radial
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        let r_peak = imax as f64 * g.spacing();
        assert!((r_peak - WS / SQRT_2).abs() <= g.spacing());
        assert!(matches!(
            lg_mode(2, WS, &g),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn hg10_superposition_and_orientation() {
        let g = grid();
        let lp = lg_mode(1, WS, &g).unwrap();
        let h0 = hg10_mode(0.0, WS, &g).unwrap();
        assert!((overlap(&h0, &lp).unwrap() - FRAC_1_SQRT_2).norm() < 1e-10);
        assert!((h0.norm_sqr() - 1.0).abs() < 1e-10);
        assert!(h0.samples.iter().all(|z| z.im.abs() < 1e-12));
        for psi in [0.3, 1.1, 2.5] {
            let h = hg10_mode(psi, WS, &g).unwrap();
            let hd = hg10_mode(psi + FRAC_PI_2, WS, &g).unwrap();
            assert!(overlap(&h, &hd).unwrap().norm() < 1e-10);
            // Exact rotation of the analytic profile.
            let (s, c) = psi.sin_cos();
            let generator = |x: f64, y: f64| {
                let xr = c * x + s * y;
                let yr = -s * x + c * y;
                C64::new(xr * (-(xr * xr + yr * yr)).exp(), 0.0)
            };
            let exact = ModeField::from_fn(g, WS, generator).unwrap();
            assert!(max_diff(&h, &exact) < 1e-8, "psi={psi}");
            // Grid resampling agrees to interpolation order.
            assert!(max_diff(&h, &h0.rotated(psi)) < 5e-3, "psi={psi}");
        }
    }

    #[test]
    fn psi_derivative_is_dark_mode() {
        let g = grid();
        let eps = 1e-4;
        let psi = 0.4;
        let h = hg10_mode(psi, WS, &g).unwrap();
        let he = hg10_mode(psi + eps, WS, &g).unwrap();
        let hd = hg10_mode(psi + FRAC_PI_2, WS, &g).unwrap();
        let scale = hd.samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let err = h
            .samples
            .iter()
            .zip(&he.samples)
            .zip(&hd.samples)
            .map(|((a, b), d)| ((b - a) / eps - d).norm())
            .fold(0.0, f64::max);
        assert!(err / scale < 1e-3, "{err}");
    }

    #[test]
    fn table_export_and_grid_mismatch() {
        let g = ModeGrid::new(2.0, 65).unwrap();
        let m = lg_mode(1, 1.0, &g).unwrap();
        let t = m.to_table();
        assert_eq!(t.rows.len(), 65 * 65);
        assert_eq!(t.columns, ["x", "y", "re", "im"]);
        let other = lg_mode(1, 1.0, &ModeGrid::new(2.0, 67).unwrap()).unwrap();
        assert!(matches!(overlap(&m, &other), Err(Error::GridMismatch(_))));
    }
}
