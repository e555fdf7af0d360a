//! Quadrature grids on 𝕊² and on the zonal interval.
//!
//! The colatitude rules are Gauss–Gegenbauer rules for the weight
//! `(1 − t²)^{(d−2)/2}` (Gauss–Legendre on 𝕊²). Nodes are located by
//! bracketing sign changes of the orthonormal degree-K polynomial in the
//! angle variable and polishing with safeguarded Newton steps; weights come
//! from the Christoffel function `1 / Σ_{j<K} e_j(t_k)²`, a sum of positive
//! terms. Grids are immutable and cached per `(band, d)`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::harmonics::{surface_area, SphereDim, ZonalBasis};

/// Environment variable capping the band limit of any grid.
pub const MAX_BAND_ENV: &str = "SPHERE_STRICHARTZ_MAX_N";
pub const DEFAULT_MAX_BAND: usize = 1024;

/// Largest band limit a grid may be built for.
pub fn max_band() -> usize {
    std::env::var(MAX_BAND_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_BAND)
}

fn check_band(band: usize) -> Result<()> {
    let max = max_band();
    if band > max {
        return Err(Error::BandTooLarge { requested: band, max });
    }
    Ok(())
}

/// A colatitude rule: nodes `t_k = cos θ_k` in decreasing order (θ ascending)
/// and weights for `∫_{𝕊^d} g(x·e) dσ(x)` over zonal integrands.
#[derive(Debug, Clone)]
pub(crate) struct ColatitudeRule {
    pub theta: Vec<f64>,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
    /// Gauss–Jacobi weights for `(1 − t²)^{(d−2)/2}` on [−1, 1].
    pub jacobi_weights: Vec<f64>,
    /// Weights already multiplied by `|𝕊^{d−1}|`.
    pub sphere_weights: Vec<f64>,
}

impl ColatitudeRule {
    pub fn gauss(points: usize, d: SphereDim) -> Result<Self> {
        assert!(points >= 1);
        let basis = ZonalBasis::new(d, points)?;
        let alpha = d.alpha();
        let kf = points as f64;
        let c_k = (kf * (kf + alpha) * (kf + 2.0 * alpha - 1.0) / (kf + alpha - 1.0)).sqrt();
        let mut buf = vec![0.0; points + 1];

        let mut eval = |theta: f64| -> (f64, f64) {
            let (s, t) = theta.sin_cos();
            basis.fill(t, &mut buf);
            let ek = buf[points];
            let ekm1 = buf[points - 1];
            // (1 − t²) e_K' = −K t e_K + c_K e_{K−1}
            let deriv_theta = -(-kf * t * ek + c_k * ekm1) / s;
            (ek, deriv_theta)
        };

        let samples = 8 * points + 16;
        let mut roots = Vec::with_capacity(points);
        let mut prev_theta = PI * 0.5 / samples as f64;
        let mut prev_val = eval(prev_theta).0;
        for i in 1..samples {
            let theta = PI * (i as f64 + 0.5) / samples as f64;
            let val = eval(theta).0;
            if val == 0.0 {
                roots.push(theta);
            } else if prev_val != 0.0 && (val > 0.0) != (prev_val > 0.0) {
                roots.push(newton_in_bracket(&mut eval, prev_theta, theta, prev_val));
            }
            prev_theta = theta;
            prev_val = val;
        }
        if roots.len() != points {
            return Err(Error::Domain(format!(
                "Gauss rule construction found {} of {points} nodes",
                roots.len()
            )));
        }

        let s_dm1 = if d.get() >= 2 {
            surface_area(SphereDim::new(d.get() - 1)?)
        } else {
            unreachable!("zonal basis rejects d < 2")
        };
        let mut rule = ColatitudeRule {
            theta: Vec::with_capacity(points),
            cos: Vec::with_capacity(points),
            sin: Vec::with_capacity(points),
            jacobi_weights: Vec::with_capacity(points),
            sphere_weights: Vec::with_capacity(points),
        };
        let mut vals = vec![0.0; points];
        for theta in roots {
            let (s, t) = theta.sin_cos();
            basis.fill(t, &mut vals);
            let christoffel: f64 = vals.iter().map(|v| v * v).sum();
            let w = 1.0 / christoffel;
            rule.theta.push(theta);
            rule.cos.push(t);
            rule.sin.push(s);
            rule.sphere_weights.push(w);
            rule.jacobi_weights.push(w / s_dm1);
        }
        Ok(rule)
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }
}

fn newton_in_bracket<F: FnMut(f64) -> (f64, f64)>(eval: &mut F, lo: f64, hi: f64, f_lo: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    let lo_positive = f_lo > 0.0;
    let mut x = 0.5 * (a + b);
    for _ in 0..100 {
        let (f, df) = eval(x);
        if f == 0.0 {
            return x;
        }
        if (f > 0.0) == lo_positive {
            a = x;
        } else {
            b = x;
        }
        let step = f / df;
        let mut next = x - step;
        if !(next > a && next < b) || !step.is_finite() {
            next = 0.5 * (a + b);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-300) {
            return next;
        }
        x = next;
        if b - a <= 2.0 * f64::EPSILON * x {
            return x;
        }
    }
    x
}

/// Gauss–Legendre colatitudes × uniform longitudes on 𝕊².
///
/// Built for band limit N with K = N + 1 colatitudes and L = 2N + 2
/// longitudes, exact for products of two band-N harmonics.
pub struct SphereGrid {
    band: usize,
    pub(crate) rule: ColatitudeRule,
    lon_count: usize,
    pub(crate) fft_forward: Arc<dyn Fft<f64>>,
    pub(crate) fft_inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SphereGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SphereGrid")
            .field("band", &self.band)
            .field("colat_count", &self.rule.len())
            .field("lon_count", &self.lon_count)
            .finish()
    }
}

impl SphereGrid {
    fn build(band: usize) -> Result<Self> {
        let k = band + 1;
        let l = 2 * band + 2;
        let rule = ColatitudeRule::gauss(k, SphereDim::S2)?;
        let mut planner = FftPlanner::new();
        Ok(SphereGrid {
            band,
            rule,
            lon_count: l,
            fft_forward: planner.plan_fft_forward(l),
            fft_inverse: planner.plan_fft_inverse(l),
        })
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn colat_count(&self) -> usize {
        self.rule.len()
    }

    pub fn lon_count(&self) -> usize {
        self.lon_count
    }

    pub fn len(&self) -> usize {
        self.colat_count() * self.lon_count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `cos θ_k`, θ ascending.
    pub fn colat_nodes(&self) -> &[f64] {
        &self.rule.cos
    }

    /// Gauss–Legendre weights (summing to 2).
    pub fn colat_weights(&self) -> &[f64] {
        &self.rule.jacobi_weights
    }

    pub fn theta(&self, k: usize) -> f64 {
        self.rule.theta[k]
    }

    pub fn phi(&self, l: usize) -> f64 {
        2.0 * PI * l as f64 / self.lon_count as f64
    }

    /// Quadrature weight of node (k, l); samples are stored row-major in k.
    pub fn weight(&self, k: usize) -> f64 {
        self.rule.jacobi_weights[k] * 2.0 * PI / self.lon_count as f64
    }

    /// Point (θ, φ) of flat sample index `idx`.
    pub fn point(&self, idx: usize) -> (f64, f64) {
        let (k, l) = (idx / self.lon_count, idx % self.lon_count);
        (self.theta(k), self.phi(l))
    }
}

/// Gauss–Gegenbauer colatitude nodes for zonal functions on 𝕊^d.
#[derive(Debug, Clone)]
pub struct ZonalGrid {
    band: usize,
    d: SphereDim,
    pub(crate) rule: ColatitudeRule,
}

impl ZonalGrid {
    pub fn band(&self) -> usize {
        self.band
    }

    pub fn dim(&self) -> SphereDim {
        self.d
    }

    pub fn len(&self) -> usize {
        self.rule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nodes(&self) -> &[f64] {
        &self.rule.cos
    }

    /// Gauss–Jacobi weights for `(1 − t²)^{(d−2)/2}`.
    pub fn weights(&self) -> &[f64] {
        &self.rule.jacobi_weights
    }

    /// Weights for integration over 𝕊^d (Jacobi weights × `|𝕊^{d−1}|`).
    pub fn sphere_weights(&self) -> &[f64] {
        &self.rule.sphere_weights
    }

    pub fn theta(&self, k: usize) -> f64 {
        self.rule.theta[k]
    }
}

/// Either kind of quadrature grid, shared by reference.
#[derive(Debug, Clone)]
pub enum Grid {
    Sphere(Arc<SphereGrid>),
    Zonal(Arc<ZonalGrid>),
}

impl Grid {
    pub fn band(&self) -> usize {
        match self {
            Grid::Sphere(g) => g.band(),
            Grid::Zonal(g) => g.band(),
        }
    }

    pub fn dim(&self) -> SphereDim {
        match self {
            Grid::Sphere(_) => SphereDim::S2,
            Grid::Zonal(g) => g.dim(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Grid::Sphere(g) => g.len(),
            Grid::Zonal(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_zonal(&self) -> bool {
        matches!(self, Grid::Zonal(_))
    }

    /// Quadrature weight attached to flat sample index `idx`.
    pub fn weight_at(&self, idx: usize) -> f64 {
        match self {
            Grid::Sphere(g) => g.weight(idx / g.lon_count()),
            Grid::Zonal(g) => g.rule.sphere_weights[idx],
        }
    }

    /// Flat vector of quadrature weights, one per sample.
    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight_at(i)).collect()
    }

    /// (θ, φ) of a sample; φ is 0 on zonal grids.
    pub fn point(&self, idx: usize) -> (f64, f64) {
        match self {
            Grid::Sphere(g) => g.point(idx),
            Grid::Zonal(g) => (g.theta(idx), 0.0),
        }
    }

    /// Typical node spacing (Δθ, Δφ), used to seed local searches.
    pub fn spacing(&self) -> (f64, f64) {
        match self {
            Grid::Sphere(g) => (PI / g.colat_count() as f64, 2.0 * PI / g.lon_count() as f64),
            Grid::Zonal(g) => (PI / g.len() as f64, 0.0),
        }
    }

    /// Same kind of grid rebuilt for another band limit.
    pub fn rebuilt(&self, band: usize) -> Result<Grid> {
        match self {
            Grid::Sphere(_) => Ok(Grid::Sphere(build_sphere_grid(band)?)),
            Grid::Zonal(g) => Ok(Grid::Zonal(build_zonal_grid(band, g.dim())?)),
        }
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::ShapeMismatch { expected: self.len(), got });
        }
        Ok(())
    }
}

type SphereCache = Mutex<HashMap<usize, Arc<SphereGrid>>>;
type ZonalCache = Mutex<HashMap<(usize, u32), Arc<ZonalGrid>>>;

fn sphere_cache() -> &'static SphereCache {
    static CACHE: OnceLock<SphereCache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

fn zonal_cache() -> &'static ZonalCache {
    static CACHE: OnceLock<ZonalCache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Gauss–Legendre × uniform-longitude grid for band limit `band` (cached).
pub fn build_sphere_grid(band: usize) -> Result<Arc<SphereGrid>> {
    check_band(band)?;
    if let Some(g) = sphere_cache().lock().unwrap().get(&band) {
        return Ok(g.clone());
    }
    let grid = Arc::new(SphereGrid::build(band)?);
    Ok(sphere_cache().lock().unwrap().entry(band).or_insert(grid).clone())
}

/// Gauss–Gegenbauer grid with K = band + 1 nodes on 𝕊^d (cached).
pub fn build_zonal_grid(band: usize, d: SphereDim) -> Result<Arc<ZonalGrid>> {
    check_band(band)?;
    if d.get() < 2 {
        return Err(Error::Unsupported("zonal grids require d >= 2".into()));
    }
    let key = (band, d.get());
    if let Some(g) = zonal_cache().lock().unwrap().get(&key) {
        return Ok(g.clone());
    }
    let rule = ColatitudeRule::gauss(band + 1, d)?;
    let grid = Arc::new(ZonalGrid { band, d, rule });
    Ok(zonal_cache().lock().unwrap().entry(key).or_insert(grid).clone())
}

/// Quadrature of complex samples over the sphere.
pub fn integrate(values: &[Complex64], grid: &Grid) -> Result<Complex64> {
    grid.check_len(values.len())?;
    Ok(weighted_sum(grid, |i| values[i]))
}

/// Quadrature of real samples over the sphere.
pub fn integrate_real(values: &[f64], grid: &Grid) -> Result<f64> {
    grid.check_len(values.len())?;
    Ok(weighted_sum(grid, |i| values[i]))
}

fn weighted_sum<T>(grid: &Grid, value: impl Fn(usize) -> T) -> T
where
    T: Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    match grid {
        Grid::Sphere(g) => {
            let l = g.lon_count();
            let mut total = T::default();
            for k in 0..g.colat_count() {
                let mut row = T::default();
                for j in 0..l {
                    row = row + value(k * l + j);
                }
                total = total + row * g.weight(k);
            }
            total
        }
        Grid::Zonal(g) => {
            let mut total = T::default();
            for (i, w) in g.sphere_weights().iter().enumerate() {
                total = total + value(i) * *w;
            }
            total
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::{gegenbauer, legendre_p};
    use approx::assert_relative_eq;

    #[test]
    fn band_zero_grid_integrates_constants() {
        let g = build_sphere_grid(0).unwrap();
        assert_eq!((g.colat_count(), g.lon_count()), (1, 2));
        let grid = Grid::Sphere(g);
        let ones = vec![Complex64::new(1.0, 0.0); grid.len()];
        let v = integrate(&ones, &grid).unwrap();
        assert!((v.re - 4.0 * PI).abs() <= 1e-14 && v.im == 0.0);
    }

    #[test]
    fn legendre_weights_positive_and_sum_to_two() {
        let g = build_sphere_grid(256).unwrap();
        assert!(g.colat_weights().iter().all(|w| *w > 0.0));
        let total: f64 = g.colat_weights().iter().sum();
        assert!((total - 2.0).abs() <= 1e-13);
    }

    #[test]
    fn legendre_rule_is_exact_to_degree_2k_minus_1() {
        let g = build_sphere_grid(20).unwrap();
        let k = g.colat_count();
        for deg in 0..(2 * k) {
            let q: f64 = g
                .colat_nodes()
                .iter()
                .zip(g.colat_weights())
                .map(|(t, w)| w * legendre_p(deg, *t).unwrap())
                .sum();
            let exact = if deg == 0 { 2.0 } else { 0.0 };
            assert!((q - exact).abs() <= 1e-13, "deg {deg}: {q}");
        }
    }

    #[test]
    fn zonal_d2_reduces_to_legendre() {
        let z = build_zonal_grid(12, SphereDim::S2).unwrap();
        let s = build_sphere_grid(12).unwrap();
        for (a, b) in z.nodes().iter().zip(s.colat_nodes()) {
            assert_eq!(a, b);
        }
        for (a, b) in z.weights().iter().zip(s.colat_weights()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn zonal_total_mass_matches_surface_area() {
        for d in 2..=8 {
            let dim = SphereDim::new(d).unwrap();
            let g = build_zonal_grid(8, dim).unwrap();
            let mass: f64 = g.sphere_weights().iter().sum();
            assert!((mass - surface_area(dim)).abs() <= 1e-13 * surface_area(dim), "d={d}");
        }
        let g = build_zonal_grid(8, SphereDim::new(3).unwrap()).unwrap();
        let mass: f64 = g.sphere_weights().iter().sum();
        assert!((mass - 2.0 * PI * PI).abs() <= 1e-13);
    }

    #[test]
    fn gegenbauer_orthogonality_under_zonal_grid() {
        for d in [3u32, 4, 7] {
            let dim = SphereDim::new(d).unwrap();
            let alpha = dim.alpha();
            let n_max = 24;
            let g = build_zonal_grid(n_max, dim).unwrap();
            let norm = |n: usize| -> f64 {
                g.nodes()
                    .iter()
                    .zip(g.weights())
                    .map(|(t, w)| w * gegenbauer(n, alpha, *t).unwrap().powi(2))
                    .sum::<f64>()
                    .sqrt()
            };
            for n in 0..=n_max {
                for m in 0..=n_max {
                    let ip: f64 = g
                        .nodes()
                        .iter()
                        .zip(g.weights())
                        .map(|(t, w)| w * gegenbauer(n, alpha, *t).unwrap() * gegenbauer(m, alpha, *t).unwrap())
                        .sum();
                    let normalized = ip / (norm(n) * norm(m));
                    let expected = if n == m { 1.0 } else { 0.0 };
                    assert!((normalized - expected).abs() <= 1e-12, "d={d} n={n} m={m}: {normalized}");
                }
            }
        }
    }

    #[test]
    fn band_cap_is_enforced() {
        let err = build_zonal_grid(DEFAULT_MAX_BAND + 1, SphereDim::S2).unwrap_err();
        assert!(matches!(err, Error::BandTooLarge { .. }));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let grid = Grid::Sphere(build_sphere_grid(3).unwrap());
        let err = integrate(&[Complex64::default(); 5], &grid).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { .. }));
    }

    #[test]
    fn grids_are_cached() {
        let a = build_sphere_grid(7).unwrap();
        let b = build_sphere_grid(7).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_relative_eq!(a.weight(0), b.weight(0));
    }
}
