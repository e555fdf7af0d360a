//! L^p, Sobolev, Triebel–Lizorkin and mixed space-time norms.
//!
//! Exponents are plain `f64`; `f64::INFINITY` selects the sup norm (and
//! `"inf".parse::<f64>()` works for command-line input).
//!
//! Sample-level routines (`lp_norm`, `mixed_norm`, ...) evaluate on the grid
//! they are given; for p = ∞ that is the grid maximum. The `field_*` routines
//! pick a grid on which the quadrature is exact whenever the integrand is a
//! polynomial (even exponents) and refine sup norms off the grid.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{build_sphere_grid, build_zonal_grid, Grid};
use crate::harmonics::eigenvalue_int;
use crate::spectral::{is_even_integer, SpaceTimeField, SpectralField, TimeGrid};
use crate::transform::{degree_components, degree_components_at, evaluate_at, Layout};

pub const DEFAULT_OVERSAMPLE: f64 = 2.0;
pub const DEFAULT_TIME_TOLERANCE: f64 = 1e-8;

/// Tuning for the field-level norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormOptions {
    /// Grid band as a multiple of the field band when no exact rule applies.
    pub oversample: f64,
    /// Relative change tolerated when doubling M in a non-exact time rule;
    /// infinite disables the check.
    pub time_tolerance: f64,
    /// Refine sup norms by local search around the largest grid values.
    pub polish: bool,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions { oversample: DEFAULT_OVERSAMPLE, time_tolerance: DEFAULT_TIME_TOLERANCE, polish: true }
    }
}

impl NormOptions {
    fn validate(&self) -> Result<()> {
        if !(self.oversample >= 1.0 && self.oversample.is_finite()) {
            return Err(Error::InvalidParameter(format!("oversample factor must be >= 1, got {}", self.oversample)));
        }
        if !(self.time_tolerance > 0.0) {
            return Err(Error::InvalidParameter("time tolerance must be positive".into()));
        }
        Ok(())
    }
}

fn check_exponent(name: &str, p: f64, min: f64) -> Result<()> {
    if p.is_nan() || p < min {
        return Err(Error::InvalidParameter(format!("{name} must lie in [{min}, inf], got {p}")));
    }
    Ok(())
}

/// `(Σ_k w_k |v_k|^p)^{1/p}`, scaled by the maximum to avoid overflow.
fn quadrature_lp(mags: &[f64], grid: &Grid, p: f64) -> Result<f64> {
    if mags.len() != grid.len() {
        return Err(Error::ShapeMismatch { expected: grid.len(), got: mags.len() });
    }
    let max = mags.iter().fold(0.0f64, |a, &b| a.max(b));
    if p.is_infinite() || max == 0.0 {
        return Ok(max);
    }
    let int_p = (p.fract() == 0.0 && p <= 64.0).then_some(p as i32);
    let sum: f64 = mags
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let x = v / max;
            grid.weight_at(i) * int_p.map_or_else(|| x.powf(p), |k| x.powi(k))
        })
        .sum();
    Ok(max * sum.powf(1.0 / p))
}

/// Quadrature L^p norm of grid samples; p = ∞ is the grid maximum.
pub fn lp_norm(values: &[Complex64], grid: &Grid, p: f64) -> Result<f64> {
    check_exponent("p", p, 1.0)?;
    let mags: Vec<f64> = values.iter().map(|v| v.norm()).collect();
    quadrature_lp(&mags, grid, p)
}

/// [`lp_norm`] for real samples (absolute values are taken).
pub fn lp_norm_real(values: &[f64], grid: &Grid, p: f64) -> Result<f64> {
    check_exponent("p", p, 1.0)?;
    let mags: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    quadrature_lp(&mags, grid, p)
}

/// `(Σ_n (1+n)^{2s} ‖H_n f‖²_{L²})^{1/2}`.
pub fn sobolev_norm(f: &SpectralField, s: f64) -> f64 {
    let c = f.coeffs();
    (0..=c.band())
        .map(|n| ((1 + n) as f64).powf(2.0 * s) * c.degree_norm_sq(n))
        .sum::<f64>()
        .sqrt()
}

/// `‖(Σ_n ((1+n)^r |H_n f|)^q)^{1/q}‖_{L^p}` on the given grid.
pub fn triebel_lizorkin_norm(f: &SpectralField, grid: &Grid, p: f64, q: f64, r: f64) -> Result<f64> {
    if !(p > 0.0) || !(q > 0.0) {
        return Err(Error::InvalidParameter(format!("Triebel–Lizorkin exponents must be positive, got p={p}, q={q}")));
    }
    let comps = degree_components(f.coeffs(), grid)?;
    let mut inner = vec![0.0f64; grid.len()];
    for (n, samples) in &comps {
        let w = ((1 + n) as f64).powf(r);
        for (acc, v) in inner.iter_mut().zip(samples) {
            let x = w * v.norm();
            if q.is_infinite() {
                *acc = acc.max(x);
            } else {
                *acc += x.powf(q);
            }
        }
    }
    if q.is_finite() {
        inner.iter_mut().for_each(|a| *a = a.powf(1.0 / q));
    }
    quadrature_lp(&inner, grid, p)
}

/// `z ↦ (Σ_n 2π |H_n f(z)|²)^{1/2}`, the exact L²_t norm of the free evolution.
pub fn l2t_profile_exact(f: &SpectralField, grid: &Grid) -> Result<Vec<f64>> {
    let comps = degree_components(f.coeffs(), grid)?;
    let mut acc = vec![0.0f64; grid.len()];
    for (_, samples) in &comps {
        for (a, v) in acc.iter_mut().zip(samples) {
            *a += v.norm_sqr();
        }
    }
    Ok(acc.into_iter().map(|a| (TAU * a).sqrt()).collect())
}

/// Evaluates `t_j ↦ Σ_i h_i e^{iλ_i t_j}` and its rectangle-rule L^q_t norm.
struct TimeSeries {
    samples: usize,
    bins: Vec<usize>,
    kind: SeriesKind,
}

enum SeriesKind {
    Direct(Vec<Vec<Complex64>>),
    Fft(Arc<dyn Fft<f64>>),
}

impl TimeSeries {
    fn new(tg: &TimeGrid, lambdas: &[u64]) -> Self {
        let m = tg.len();
        let bins = lambdas.iter().map(|&l| (l % m as u64) as usize).collect();
        let log_m = (usize::BITS - m.leading_zeros()) as usize;
        let kind = if lambdas.len() <= 4 * log_m {
            SeriesKind::Direct(
                lambdas.iter().map(|&l| (0..m).map(|j| tg.phase(l, j as i64)).collect()).collect(),
            )
        } else {
            SeriesKind::Fft(FftPlanner::new().plan_fft_inverse(m))
        };
        TimeSeries { samples: m, bins, kind }
    }

    fn fill(&self, amps: &[Complex64], buf: &mut Vec<Complex64>) {
        buf.clear();
        buf.resize(self.samples, Complex64::new(0.0, 0.0));
        match &self.kind {
            SeriesKind::Direct(phases) => {
                for (a, row) in amps.iter().zip(phases) {
                    if *a == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for (b, ph) in buf.iter_mut().zip(row) {
                        *b += a * ph;
                    }
                }
            }
            SeriesKind::Fft(plan) => {
                for (a, &k) in amps.iter().zip(&self.bins) {
                    buf[k] += a;
                }
                plan.process(buf);
            }
        }
    }

    fn lq(&self, amps: &[Complex64], q: f64, buf: &mut Vec<Complex64>) -> f64 {
        self.fill(amps, buf);
        lq_of_series(buf, q)
    }
}

/// Rectangle-rule `(Σ_j (2π/M)|u_j|^q)^{1/q}`.
fn lq_of_series(u: &[Complex64], q: f64) -> f64 {
    let dt = TAU / u.len() as f64;
    let sum: f64 = if q == 2.0 {
        u.iter().map(|v| v.norm_sqr()).sum()
    } else if is_even_integer(q) && q <= 64.0 {
        let k = (q / 2.0) as i32;
        u.iter().map(|v| v.norm_sqr().powi(k)).sum()
    } else {
        u.iter().map(|v| v.norm().powf(q)).sum()
    };
    (dt * sum).powf(1.0 / q)
}

fn check_mixed_exponents(p: f64, q: f64) -> Result<()> {
    check_exponent("p", p, 1.0)?;
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("q must lie in [1, inf), got {q}")));
    }
    Ok(())
}

/// Inner norms `z_k ↦ ‖u(·, z_k)‖_{L^q_t}` by the rectangle rule on the time grid.
pub fn mixed_profile(u: &SpaceTimeField, q: f64) -> Result<Vec<f64>> {
    check_mixed_exponents(1.0, q)?;
    let grid = u.grid();
    match u.free_datum() {
        Some(f) => {
            let comps = degree_components(f.coeffs(), grid)?;
            let lambdas: Vec<u64> = comps.iter().map(|(n, _)| eigenvalue_int(*n, f.dim())).collect();
            let series = TimeSeries::new(u.times(), &lambdas);
            let mut amps = vec![Complex64::new(0.0, 0.0); comps.len()];
            let mut buf = Vec::new();
            Ok((0..grid.len())
                .map(|k| {
                    for (a, (_, s)) in amps.iter_mut().zip(&comps) {
                        *a = s[k];
                    }
                    series.lq(&amps, q, &mut buf)
                })
                .collect())
        }
        None => {
            let mut acc = vec![0.0f64; grid.len()];
            for j in 0..u.len() {
                let samples = u.samples_at(j)?;
                for (a, v) in acc.iter_mut().zip(&samples) {
                    *a += v.norm().powf(q);
                }
            }
            let dt = u.times().step();
            Ok(acc.into_iter().map(|a| (dt * a).powf(1.0 / q)).collect())
        }
    }
}

/// `‖u(·, θ, φ)‖_{L^q_t}` at an arbitrary point.
pub fn time_norm_at(u: &SpaceTimeField, q: f64, theta: f64, phi: f64) -> Result<f64> {
    check_mixed_exponents(1.0, q)?;
    match u.free_datum() {
        Some(f) => {
            let comps = degree_components_at(f.coeffs(), theta, phi);
            let lambdas: Vec<u64> = comps.iter().map(|(n, _)| eigenvalue_int(*n, f.dim())).collect();
            let amps: Vec<Complex64> = comps.iter().map(|(_, v)| *v).collect();
            Ok(TimeSeries::new(u.times(), &lambdas).lq(&amps, q, &mut Vec::new()))
        }
        None => {
            let series: Vec<Complex64> =
                (0..u.len()).map(|j| evaluate_at(u.coeffs_at(j).coeffs(), theta, phi)).collect();
            Ok(lq_of_series(&series, q))
        }
    }
}

/// Whether the rectangle rule integrates `|u(·, z)|^q` exactly.
fn time_rule_is_exact(f: &SpectralField, tg: &TimeGrid, q: f64) -> bool {
    let spread = f.eigenvalue_spread();
    spread == 0 || (is_even_integer(q) && tg.len() as u64 > (q as u64 / 2) * spread)
}

/// `‖ z ↦ ‖u(·,z)‖_{L^q_t(𝕋)} ‖_{L^p_x}` on the field's grids.
///
/// For free evolutions whose time rule is not provably exact the computation
/// is repeated with 2M samples and an [`Error::InsufficientTimeResolution`]
/// is raised when the two disagree beyond the default tolerance.
pub fn mixed_norm(u: &SpaceTimeField, p: f64, q: f64) -> Result<f64> {
    mixed_norm_with(u, p, q, &NormOptions::default())
}

pub fn mixed_norm_with(u: &SpaceTimeField, p: f64, q: f64, opts: &NormOptions) -> Result<f64> {
    check_mixed_exponents(p, q)?;
    opts.validate()?;
    let value = quadrature_lp(&mixed_profile(u, q)?, u.grid(), p)?;
    if let Some(f) = u.free_datum() {
        if opts.time_tolerance.is_finite() && !time_rule_is_exact(f, u.times(), q) {
            let finer = u.with_times(u.times().doubled())?;
            let refined = quadrature_lp(&mixed_profile(&finer, q)?, u.grid(), p)?;
            let change = (refined - value).abs() / refined.max(f64::MIN_POSITIVE);
            if change > opts.time_tolerance {
                return Err(Error::InsufficientTimeResolution { samples: u.len(), relative_change: change });
            }
        }
    }
    Ok(value)
}

/// `‖u‖_{L⁴(𝕊^d×𝕋)}` computed as `‖u²‖_{L²(𝕊^d×𝕋)}^{1/2}` for the free evolution:
/// `u² = Σ_k e^{ikt} Σ_{λ_n+λ_m=k} H_n f · H_m f`, so by Parseval in t
/// `‖u²(·,z)‖²_{L²_t} = 2π Σ_k |Σ_{λ_n+λ_m=k} H_n f(z) H_m f(z)|²`.
pub fn l4_norm_via_square(f: &SpectralField, grid: &Grid) -> Result<f64> {
    let comps = degree_components(f.coeffs(), grid)?;
    let lambdas: Vec<u64> = comps.iter().map(|(n, _)| eigenvalue_int(*n, f.dim())).collect();
    // group the degree pairs by their frequency λ_n + λ_m
    let mut pairs: Vec<(u64, usize, usize)> = Vec::new();
    for a in 0..comps.len() {
        for b in a..comps.len() {
            pairs.push((lambdas[a] + lambdas[b], a, b));
        }
    }
    pairs.sort_unstable();
    let mut density = vec![0.0f64; grid.len()];
    for (k, d) in density.iter_mut().enumerate() {
        let mut total = 0.0;
        let mut i = 0;
        while i < pairs.len() {
            let freq = pairs[i].0;
            let mut c = Complex64::new(0.0, 0.0);
            while i < pairs.len() && pairs[i].0 == freq {
                let (_, a, b) = pairs[i];
                let term = comps[a].1[k] * comps[b].1[k];
                c += if a == b { term } else { 2.0 * term };
                i += 1;
            }
            total += c.norm_sqr();
        }
        *d = TAU * total;
    }
    let integral: f64 = density.iter().enumerate().map(|(k, v)| grid.weight_at(k) * v).sum();
    Ok(integral.max(0.0).powf(0.25))
}

/// Grid of the field's kind with band `band`.
pub fn grid_for_field(f: &SpectralField, band: usize) -> Result<Grid> {
    match f.layout() {
        Layout::Full => Ok(Grid::Sphere(build_sphere_grid(band)?)),
        Layout::Zonal => Ok(Grid::Zonal(build_zonal_grid(band, f.dim())?)),
    }
}

/// Grid band making `|f|^p` (or the q-profile raised to p) exactly integrable
/// when the integrand is a polynomial, otherwise `oversample × band`.
pub fn quadrature_band(band: usize, p: f64, q: Option<f64>, opts: &NormOptions) -> usize {
    let exact = match q {
        None => is_even_integer(p),
        Some(q) => is_even_integer(q) && p.is_finite() && (p / q).fract() == 0.0 && p >= q,
    };
    if exact {
        ((p / 2.0) * band as f64).ceil() as usize
    } else {
        (opts.oversample * band as f64).ceil() as usize
    }
    .max(band)
}

/// Maximum of `value(θ, φ)` over the grid samples, the poles, and local
/// compass searches started at the largest grid values.
fn refined_max(grid: &Grid, samples: &[f64], polish: bool, zonal: bool, value: impl Fn(f64, f64) -> f64) -> f64 {
    let mut best = samples.iter().fold(0.0f64, |a, &b| a.max(b));
    best = best.max(value(0.0, 0.0)).max(value(std::f64::consts::PI, 0.0));
    if !polish {
        return best;
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| samples[b].total_cmp(&samples[a]).then(a.cmp(&b)));
    let (d_theta, d_phi) = grid.spacing();
    for &start in order.iter().take(8) {
        let (mut th, mut ph) = grid.point(start);
        let mut cur = samples[start];
        let (mut st, mut sp) = (d_theta, if zonal { 0.0 } else { d_phi });
        let mut evals = 0;
        while st > 1e-10 && evals < 400 {
            let mut moved = false;
            let trial = |t: f64, p: f64, cur: &mut f64, th: &mut f64, ph: &mut f64| {
                let t = t.clamp(0.0, std::f64::consts::PI);
                let v = value(t, p);
                if v > *cur {
                    *cur = v;
                    *th = t;
                    *ph = p;
                    true
                } else {
                    false
                }
            };
            for (dt, dp) in [(st, 0.0), (-st, 0.0), (0.0, sp), (0.0, -sp)] {
                if dt == 0.0 && dp == 0.0 {
                    continue;
                }
                evals += 1;
                if trial(th + dt, ph + dp, &mut cur, &mut th, &mut ph) {
                    moved = true;
                    break;
                }
            }
            if !moved {
                st *= 0.5;
                sp *= 0.5;
            }
        }
        best = best.max(cur);
    }
    best
}

/// `‖f‖_{L^p(𝕊^d)}` on an automatically chosen grid; sup norms are refined
/// off the grid.
pub fn field_lp_norm(f: &SpectralField, p: f64, opts: &NormOptions) -> Result<f64> {
    check_exponent("p", p, 1.0)?;
    opts.validate()?;
    let grid = grid_for_field(f, quadrature_band(f.band(), p, None, opts))?;
    let values = crate::transform::synthesize(f.coeffs(), &grid)?;
    if p.is_infinite() {
        let mags: Vec<f64> = values.iter().map(|v| v.norm()).collect();
        let zonal = f.layout() == Layout::Zonal;
        return Ok(refined_max(&grid, &mags, opts.polish, zonal, |t, ph| evaluate_at(f.coeffs(), t, ph).norm()));
    }
    lp_norm(&values, &grid, p)
}

/// Mixed norm of the free evolution of `f` with automatically chosen grids:
/// an exact time rule for even q and the default `4(spread+1)` otherwise.
pub fn field_mixed_norm(f: &SpectralField, p: f64, q: f64, opts: &NormOptions) -> Result<f64> {
    check_mixed_exponents(p, q)?;
    opts.validate()?;
    let tg = if is_even_integer(q) { TimeGrid::exact_for(f, q)? } else { TimeGrid::for_field(f) };
    let grid = grid_for_field(f, quadrature_band(f.band(), p, Some(q), opts))?;
    let u = SpaceTimeField::free(f.clone(), tg, grid)?;
    if p.is_infinite() {
        let value = mixed_norm_with(&u, p, q, opts)?;
        let profile = mixed_profile(&u, q)?;
        let zonal = f.layout() == Layout::Zonal;
        let refined = refined_max(u.grid(), &profile, opts.polish, zonal, |t, ph| {
            time_norm_at(&u, q, t, ph).unwrap_or(0.0)
        });
        return Ok(value.max(refined));
    }
    mixed_norm_with(&u, p, q, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::{zonal_kernel, SphereDim};
    use crate::rng::{random_full_table, StreamRng};
    use crate::spectral::synthesize_history;
    use crate::transform::{synthesize, CoefficientTable};
    use std::f64::consts::PI;

    fn sphere(band: usize) -> Grid {
        Grid::Sphere(build_sphere_grid(band).unwrap())
    }

    fn rand_field(band: usize, seed: u64) -> SpectralField {
        SpectralField::new(random_full_table(band, &mut StreamRng::new(seed, 0))).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn lp_norm_examples() {
        let g = sphere(4);
        let ones = vec![Complex64::new(1.0, 0.0); g.len()];
        assert!(rel(lp_norm(&ones, &g, 2.0).unwrap(), (4.0 * PI).sqrt()) < 1e-14);
        let c = 1.0 / (4.0 * PI).sqrt();
        let y00 = vec![Complex64::new(c, 0.0); g.len()];
        for p in [1.0, 2.0, 3.5, 4.0, 10.0] {
            let want = (4.0 * PI).powf(1.0 / p) * c;
            assert!(rel(lp_norm(&y00, &g, p).unwrap(), want) < 1e-13, "p = {p}");
        }
        assert!(rel(lp_norm(&y00, &g, f64::INFINITY).unwrap(), c) < 1e-15);
        assert!(lp_norm(&y00, &g, 0.5).is_err());
        assert!(lp_norm(&y00[1..], &g, 2.0).is_err());
    }

    #[test]
    fn lp4_of_y10_matches_denser_quadrature() {
        let f = SpectralField::harmonic(10, 10, 0).unwrap();
        let coarse = sphere(20);
        let dense = sphere(80);
        let a = lp_norm(&synthesize(f.coeffs(), &coarse).unwrap(), &coarse, 4.0).unwrap();
        let b = lp_norm(&synthesize(f.coeffs(), &dense).unwrap(), &dense, 4.0).unwrap();
        assert!(rel(a, b) < 1e-9);
    }

    #[test]
    fn sobolev_examples() {
        let y00 = SpectralField::harmonic(3, 0, 0).unwrap();
        for s in [-1.0, 0.0, 0.3, 2.0] {
            assert!((sobolev_norm(&y00, s) - 1.0).abs() < 1e-15);
        }
        let y31 = SpectralField::harmonic(3, 3, 1).unwrap();
        assert!((sobolev_norm(&y31, 1.0) - 4.0).abs() < 1e-14);
        let mut t = CoefficientTable::zeros_full(3);
        t.set(1, 0, Complex64::new(1.0, 0.0)).unwrap();
        t.set(3, 0, Complex64::new(1.0, 0.0)).unwrap();
        let f = SpectralField::new(t).unwrap();
        assert!((sobolev_norm(&f, 0.5) - 6f64.sqrt()).abs() < 1e-14);
        let r = rand_field(8, 3);
        assert!((sobolev_norm(&r, 0.0) - r.l2_norm()).abs() < 1e-12);
    }

    #[test]
    fn triebel_lizorkin_examples() {
        let g = sphere(16);
        let f = rand_field(16, 4);
        let l2 = lp_norm(&synthesize(f.coeffs(), &g).unwrap(), &g, 2.0).unwrap();
        assert!(rel(triebel_lizorkin_norm(&f, &g, 2.0, 2.0, 0.0).unwrap(), l2) < 1e-12);
        let y = SpectralField::harmonic(8, 5, 2).unwrap();
        let g = sphere(12);
        let lp = lp_norm(&synthesize(y.coeffs(), &g).unwrap(), &g, 3.0).unwrap();
        let tl = triebel_lizorkin_norm(&y, &g, 3.0, 1.5, 0.7).unwrap();
        assert!(rel(tl, 6f64.powf(0.7) * lp) < 1e-12);
        let g = sphere(24);
        let f = rand_field(10, 5);
        for p in [2.0, 4.0, f64::INFINITY] {
            assert!(triebel_lizorkin_norm(&f, &g, p, 4.0, 0.5).unwrap() <= triebel_lizorkin_norm(&f, &g, p, 2.0, 0.5).unwrap());
        }
        assert!(triebel_lizorkin_norm(&f, &g, 0.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn l2t_profile_examples() {
        let g = sphere(8);
        let y00 = SpectralField::harmonic(4, 0, 0).unwrap();
        for v in l2t_profile_exact(&y00, &g).unwrap() {
            assert!((v - 0.5f64.sqrt()).abs() < 1e-14);
        }
        let y = SpectralField::harmonic(4, 4, -3).unwrap();
        let prof = l2t_profile_exact(&y, &g).unwrap();
        let vals = synthesize(y.coeffs(), &g).unwrap();
        for (p, v) in prof.iter().zip(&vals) {
            assert!((p - TAU.sqrt() * v.norm()).abs() < 1e-13);
        }
        let f = rand_field(8, 6);
        let tg = TimeGrid::for_band(8, SphereDim::S2);
        let u = synthesize_history(&f, &tg, &g).unwrap();
        let sampled = mixed_profile(&u, 2.0).unwrap();
        let exact = l2t_profile_exact(&f, &g).unwrap();
        for (a, b) in sampled.iter().zip(&exact) {
            assert!(rel(*a, *b) < 1e-10);
        }
    }

    #[test]
    fn mixed_norm_examples() {
        let g = sphere(8);
        let y00 = SpectralField::harmonic(4, 0, 0).unwrap();
        let u = synthesize_history(&y00, &TimeGrid::new(16).unwrap(), &g).unwrap();
        for p in [2.0, 3.0, 6.0] {
            for q in [2.0, 3.0] {
                let want = TAU.powf(1.0 / q) * (4.0 * PI).powf(1.0 / p - 0.5);
                assert!(rel(mixed_norm(&u, p, q).unwrap(), want) < 1e-13);
            }
        }
        assert!(mixed_norm(&u, 2.0, f64::INFINITY).is_err());
    }

    #[test]
    fn l4_square_identity() {
        let f = rand_field(6, 7);
        let g = sphere(12);
        let tg = TimeGrid::exact_for(&f, 4.0).unwrap();
        let u = synthesize_history(&f, &tg, &g).unwrap();
        let a = mixed_norm(&u, 4.0, 4.0).unwrap();
        let b = l4_norm_via_square(&f, &g).unwrap();
        assert!(rel(a, b) < 1e-11);
    }

    #[test]
    fn direct_and_fft_time_series_agree() {
        let tg = TimeGrid::new(60).unwrap();
        let lambdas: Vec<u64> = (0..40).map(|n| n * (n + 1)).collect();
        let amps: Vec<Complex64> = (0..40).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let fft = TimeSeries::new(&tg, &lambdas);
        assert!(matches!(fft.kind, SeriesKind::Fft(_)));
        let direct = TimeSeries {
            samples: 60,
            bins: vec![],
            kind: SeriesKind::Direct(lambdas.iter().map(|&l| (0..60).map(|j| tg.phase(l, j)).collect()).collect()),
        };
        let (mut a, mut b) = (Vec::new(), Vec::new());
        fft.fill(&amps, &mut a);
        direct.fill(&amps, &mut b);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn undersampled_time_grid_is_flagged() {
        let f = rand_field(6, 8);
        let g = sphere(12);
        let u = synthesize_history(&f, &TimeGrid::new(8).unwrap(), &g).unwrap();
        assert!(matches!(mixed_norm(&u, 2.0, 3.0), Err(Error::InsufficientTimeResolution { .. })));
    }

    #[test]
    fn field_sup_norm_finds_pole_maximum() {
        let d = SphereDim::S2;
        for n in [3usize, 10, 40] {
            let f = SpectralField::zonal_harmonic(n, n, d).unwrap();
            let sup = field_lp_norm(&f, f64::INFINITY, &NormOptions::default()).unwrap();
            let want = ((2 * n + 1) as f64 / (4.0 * PI)).sqrt();
            assert!(rel(sup, want) < 1e-13);
            assert!(rel(zonal_kernel(n, d, 1.0).unwrap().sqrt(), want) < 1e-13);
        }
    }

    #[test]
    fn field_sup_norm_polishes_interior_maximum() {
        // |Y_{2,1}| peaks at θ = π/4, which is not a Gauss node.
        let f = SpectralField::harmonic(2, 2, 1).unwrap();
        let sup = field_lp_norm(&f, f64::INFINITY, &NormOptions::default()).unwrap();
        let want = (15.0 / (32.0 * PI)).sqrt();
        assert!(rel(sup, want) < 1e-12, "{sup} vs {want}");
    }

    #[test]
    fn field_mixed_norm_matches_spectral_profile() {
        let f = rand_field(6, 9);
        let opts = NormOptions::default();
        let g = grid_for_field(&f, quadrature_band(6, 4.0, Some(2.0), &opts)).unwrap();
        let want = lp_norm_real(&l2t_profile_exact(&f, &g).unwrap(), &g, 4.0).unwrap();
        assert!(rel(field_mixed_norm(&f, 4.0, 2.0, &opts).unwrap(), want) < 1e-11);
    }

    #[test]
    fn quadrature_band_rules() {
        let o = NormOptions::default();
        assert_eq!(quadrature_band(10, 4.0, None, &o), 20);
        assert_eq!(quadrature_band(10, 3.0, None, &o), 20);
        assert_eq!(quadrature_band(10, 6.0, Some(2.0), &o), 30);
        assert_eq!(quadrature_band(10, 6.0, Some(4.0), &o), 20);
        assert_eq!(quadrature_band(10, f64::INFINITY, Some(2.0), &o), 20);
        assert_eq!(quadrature_band(10, 2.0, None, &o), 10);
    }
}
