//! Coefficient tables and harmonic analysis/synthesis on the quadrature grids.
//!
//! On 𝕊² the longitude direction is handled by exact discrete Fourier sums
//! (FFT of length L ≥ 2N + 1, so band-N data never aliases) and the
//! colatitude direction by Gauss quadrature against the orthonormal
//! associated Legendre functions. Zonal tables on 𝕊^d use the orthonormal
//! Gegenbauer basis of [`ZonalBasis`].

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, SphereGrid, ZonalGrid};
use crate::harmonics::{LegendreRecurrence, SphereDim, ZonalBasis, LEGENDRE_SEED};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Storage layout of a [`CoefficientTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// All `(n, m)` with `|m| ≤ n` on 𝕊²; index `n² + n + m`.
    Full,
    /// One coefficient per degree against the orthonormal zonal basis of 𝕊^d.
    Zonal,
}

/// Spectral coefficients of a band-limited function on 𝕊^d.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    band: usize,
    d: SphereDim,
    layout: Layout,
    data: Vec<Complex64>,
}

impl CoefficientTable {
    pub fn zeros_full(band: usize) -> Self {
        CoefficientTable {
            band,
            d: SphereDim::S2,
            layout: Layout::Full,
            data: vec![ZERO; (band + 1) * (band + 1)],
        }
    }

    pub fn zeros_zonal(band: usize, d: SphereDim) -> Result<Self> {
        if d.get() < 2 {
            return Err(Error::Unsupported("zonal tables require d >= 2".into()));
        }
        Ok(CoefficientTable { band, d, layout: Layout::Zonal, data: vec![ZERO; band + 1] })
    }

    /// Zero table with the same layout and dimension, for another band.
    pub fn zeros_like(&self, band: usize) -> Self {
        let len = match self.layout {
            Layout::Full => (band + 1) * (band + 1),
            Layout::Zonal => band + 1,
        };
        CoefficientTable { band, d: self.d, layout: self.layout, data: vec![ZERO; len] }
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn dim(&self) -> SphereDim {
        self.d
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    fn index(&self, n: usize, m: i64) -> Result<usize> {
        if n > self.band {
            return Err(Error::DegreeOutOfBand { degree: n, band: self.band });
        }
        match self.layout {
            Layout::Full => {
                if m.unsigned_abs() as usize > n {
                    return Err(Error::InvalidParameter(format!("order {m} exceeds degree {n}")));
                }
                Ok(((n * n + n) as i64 + m) as usize)
            }
            Layout::Zonal => {
                if m != 0 {
                    return Err(Error::InvalidParameter("zonal tables only hold m = 0".into()));
                }
                Ok(n)
            }
        }
    }

    pub fn get(&self, n: usize, m: i64) -> Result<Complex64> {
        Ok(self.data[self.index(n, m)?])
    }

    pub fn set(&mut self, n: usize, m: i64, value: Complex64) -> Result<()> {
        let i = self.index(n, m)?;
        self.data[i] = value;
        Ok(())
    }

    /// Range of flat indices holding degree `n`.
    pub fn degree_range(&self, n: usize) -> std::ops::Range<usize> {
        match self.layout {
            Layout::Full => n * n..(n + 1) * (n + 1),
            Layout::Zonal => n..n + 1,
        }
    }

    pub fn degree(&self, n: usize) -> &[Complex64] {
        &self.data[self.degree_range(n)]
    }

    pub fn degree_mut(&mut self, n: usize) -> &mut [Complex64] {
        let r = self.degree_range(n);
        &mut self.data[r]
    }

    /// `‖H_n f‖²_{L²}` (coefficients are orthonormal).
    pub fn degree_norm_sq(&self, n: usize) -> f64 {
        self.degree(n).iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Degrees carrying at least one nonzero coefficient, ascending.
    pub fn active_degrees(&self) -> Vec<usize> {
        (0..=self.band).filter(|&n| self.degree(n).iter().any(|c| *c != ZERO)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Multiplies each degree block by `factor(n)`.
    pub fn scale_degrees(&mut self, factor: impl Fn(usize) -> Complex64) {
        for n in 0..=self.band {
            let f = factor(n);
            self.degree_mut(n).iter_mut().for_each(|c| *c *= f);
        }
    }

    /// Copy truncated or zero-padded to another band.
    pub fn with_band(&self, band: usize) -> Self {
        let mut out = self.zeros_like(band);
        for n in 0..=band.min(self.band) {
            out.degree_mut(n).copy_from_slice(self.degree(n));
        }
        out
    }

    /// Full 𝕊² layout of this table (zonal d = 2 tables embed as m = 0).
    pub fn to_full(&self) -> Result<Self> {
        match (self.layout, self.d.get()) {
            (Layout::Full, _) => Ok(self.clone()),
            (Layout::Zonal, 2) => {
                let mut out = CoefficientTable::zeros_full(self.band);
                for n in 0..=self.band {
                    out.set(n, 0, self.data[n])?;
                }
                Ok(out)
            }
            _ => Err(Error::Unsupported("only d = 2 zonal tables embed into the full layout".into())),
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.layout != other.layout || self.d != other.d || self.band != other.band {
            return Err(Error::ShapeMismatch { expected: self.data.len(), got: other.data.len() });
        }
        Ok(())
    }

    /// `self + scale · other`.
    pub fn axpy(&mut self, scale: Complex64, other: &Self) -> Result<()> {
        self.check_compatible(other)?;
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += scale * b);
        Ok(())
    }

    pub fn scaled(&self, scale: Complex64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|c| *c *= scale);
        out
    }
}

fn bin(m: i64, l: usize) -> usize {
    m.rem_euclid(l as i64) as usize
}

fn check_grid_band(table_band: usize, grid_band: usize) -> Result<()> {
    if table_band > grid_band {
        return Err(Error::BandOverflow { field: table_band, grid: grid_band });
    }
    Ok(())
}

/// Running sectoral seeds `P̄_m^m(t_k)` for every colatitude of a grid.
struct Sectoral<'a> {
    sin: &'a [f64],
    values: Vec<f64>,
    m: usize,
}

impl<'a> Sectoral<'a> {
    fn new(sin: &'a [f64]) -> Self {
        Sectoral { sin, values: vec![LEGENDRE_SEED; sin.len()], m: 0 }
    }

    fn advance_to(&mut self, m: usize) {
        while self.m < m {
            self.m += 1;
            let step = LegendreRecurrence::sectoral_step(self.m);
            for (v, s) in self.values.iter_mut().zip(self.sin) {
                *v *= step * s;
            }
        }
    }
}

/// Analysis on 𝕊²: `a_{n,m} = ∫ f Ȳ_{n,m} dσ` by exact quadrature.
pub fn forward_sht(values: &[Complex64], grid: &SphereGrid, band: usize) -> Result<CoefficientTable> {
    if values.len() != grid.len() {
        return Err(Error::ShapeMismatch { expected: grid.len(), got: values.len() });
    }
    check_grid_band(band, grid.band())?;
    let kc = grid.colat_count();
    let l = grid.lon_count();
    let mut rows = values.to_vec();
    for k in 0..kc {
        grid.fft_forward.process(&mut rows[k * l..(k + 1) * l]);
    }
    let mut out = CoefficientTable::zeros_full(band);
    let mut seeds = Sectoral::new(&grid.rule.sin);
    let mut col = vec![0.0; band + 1];
    for m in 0..=band {
        seeds.advance_to(m);
        let rec = LegendreRecurrence::new(m, band);
        let len = band - m + 1;
        let (bp, bn) = (bin(m as i64, l), bin(-(m as i64), l));
        for k in 0..kc {
            rec.fill(seeds.values[k], grid.rule.cos[k], &mut col[..len]);
            let w = grid.weight(k);
            let fp = rows[k * l + bp] * w;
            let fn_ = rows[k * l + bn] * w;
            for (j, p) in col[..len].iter().enumerate() {
                let n = m + j;
                let base = n * n + n;
                out.data[base + m] += fp * *p;
                if m > 0 {
                    out.data[base - m] += fn_ * *p;
                }
            }
        }
    }
    Ok(out)
}

/// Synthesis on 𝕊²: samples `Σ a_{n,m} Y_{n,m}(z_k)` in row-major (colatitude, longitude) order.
pub fn inverse_sht(coeffs: &CoefficientTable, grid: &SphereGrid) -> Result<Vec<Complex64>> {
    let full;
    let coeffs = if coeffs.layout == Layout::Full {
        coeffs
    } else {
        full = coeffs.to_full()?;
        &full
    };
    let band = coeffs.band;
    check_grid_band(band, grid.band())?;
    let kc = grid.colat_count();
    let l = grid.lon_count();
    let mut rows = vec![ZERO; kc * l];
    let mut seeds = Sectoral::new(&grid.rule.sin);
    let mut col = vec![0.0; band + 1];
    for m in 0..=band {
        let column_active = (m..=band).any(|n| {
            let base = n * n + n;
            coeffs.data[base + m] != ZERO || coeffs.data[base - m] != ZERO
        });
        if !column_active {
            continue;
        }
        seeds.advance_to(m);
        let rec = LegendreRecurrence::new(m, band);
        let len = band - m + 1;
        let (bp, bn) = (bin(m as i64, l), bin(-(m as i64), l));
        for k in 0..kc {
            rec.fill(seeds.values[k], grid.rule.cos[k], &mut col[..len]);
            let (mut gp, mut gn) = (ZERO, ZERO);
            for (j, p) in col[..len].iter().enumerate() {
                let n = m + j;
                let base = n * n + n;
                gp += coeffs.data[base + m] * *p;
                gn += coeffs.data[base - m] * *p;
            }
            rows[k * l + bp] += gp;
            if m > 0 {
                rows[k * l + bn] += gn;
            }
        }
    }
    for k in 0..kc {
        grid.fft_inverse.process(&mut rows[k * l..(k + 1) * l]);
    }
    Ok(rows)
}

fn check_zonal_table(coeffs: &CoefficientTable, grid: &ZonalGrid) -> Result<()> {
    if coeffs.layout != Layout::Zonal {
        return Err(Error::Unsupported("zonal grids only carry zonal tables".into()));
    }
    if coeffs.d != grid.dim() {
        return Err(Error::InvalidParameter(format!(
            "table dimension {} differs from grid dimension {}",
            coeffs.d,
            grid.dim()
        )));
    }
    check_grid_band(coeffs.band, grid.band())
}

/// Zonal analysis in the orthonormal Gegenbauer basis of 𝕊^d.
pub fn forward_zonal(values: &[Complex64], grid: &ZonalGrid, band: usize) -> Result<CoefficientTable> {
    if values.len() != grid.len() {
        return Err(Error::ShapeMismatch { expected: grid.len(), got: values.len() });
    }
    check_grid_band(band, grid.band())?;
    let basis = ZonalBasis::new(grid.dim(), band)?;
    let mut out = CoefficientTable::zeros_zonal(band, grid.dim())?;
    let mut e = vec![0.0; band + 1];
    for (k, v) in values.iter().enumerate() {
        basis.fill(grid.rule.cos[k], &mut e);
        let wv = *v * grid.rule.sphere_weights[k];
        for (a, en) in out.data.iter_mut().zip(&e) {
            *a += wv * *en;
        }
    }
    Ok(out)
}

/// Zonal synthesis `Σ a_n e_n(t_k)`.
pub fn inverse_zonal(coeffs: &CoefficientTable, grid: &ZonalGrid) -> Result<Vec<Complex64>> {
    check_zonal_table(coeffs, grid)?;
    let basis = ZonalBasis::new(grid.dim(), coeffs.band)?;
    let mut e = vec![0.0; coeffs.band + 1];
    Ok(grid
        .rule
        .cos
        .iter()
        .map(|&t| {
            basis.fill(t, &mut e);
            coeffs.data.iter().zip(&e).map(|(a, en)| *a * *en).sum()
        })
        .collect())
}

/// Synthesis on either grid kind.
pub fn synthesize(coeffs: &CoefficientTable, grid: &Grid) -> Result<Vec<Complex64>> {
    match grid {
        Grid::Sphere(g) => inverse_sht(coeffs, g),
        Grid::Zonal(g) => inverse_zonal(coeffs, g),
    }
}

/// Analysis on either grid kind.
pub fn analyze(values: &[Complex64], grid: &Grid, band: usize) -> Result<CoefficientTable> {
    match grid {
        Grid::Sphere(g) => forward_sht(values, g, band),
        Grid::Zonal(g) => forward_zonal(values, g, band),
    }
}

/// Pointwise projections `H_n f(z_k)` for every active degree n, as
/// `(n, samples)` pairs in ascending degree.
pub fn degree_components(coeffs: &CoefficientTable, grid: &Grid) -> Result<Vec<(usize, Vec<Complex64>)>> {
    let active = coeffs.active_degrees();
    match grid {
        Grid::Zonal(g) => {
            check_zonal_table(coeffs, g)?;
            let basis = ZonalBasis::new(g.dim(), coeffs.band)?;
            let mut e = vec![0.0; coeffs.band + 1];
            let mut out: Vec<(usize, Vec<Complex64>)> =
                active.iter().map(|&n| (n, Vec::with_capacity(g.len()))).collect();
            for &t in &g.rule.cos {
                basis.fill(t, &mut e);
                for (n, samples) in out.iter_mut() {
                    samples.push(coeffs.data[*n] * e[*n]);
                }
            }
            Ok(out)
        }
        Grid::Sphere(g) => {
            let full;
            let coeffs = if coeffs.layout == Layout::Full {
                coeffs
            } else {
                full = coeffs.to_full()?;
                &full
            };
            let band = coeffs.band;
            check_grid_band(band, g.band())?;
            let kc = g.colat_count();
            let l = g.lon_count();
            let mut slot = vec![usize::MAX; band + 1];
            for (i, &n) in active.iter().enumerate() {
                slot[n] = i;
            }
            let mut out: Vec<(usize, Vec<Complex64>)> =
                active.iter().map(|&n| (n, vec![ZERO; kc * l])).collect();
            let mut seeds = Sectoral::new(&g.rule.sin);
            let mut col = vec![0.0; band + 1];
            for m in 0..=band {
                seeds.advance_to(m);
                let rec = LegendreRecurrence::new(m, band);
                let len = band - m + 1;
                let (bp, bn) = (bin(m as i64, l), bin(-(m as i64), l));
                for k in 0..kc {
                    rec.fill(seeds.values[k], g.rule.cos[k], &mut col[..len]);
                    for (j, p) in col[..len].iter().enumerate() {
                        let n = m + j;
                        if slot[n] == usize::MAX {
                            continue;
                        }
                        let base = n * n + n;
                        let buf = &mut out[slot[n]].1;
                        buf[k * l + bp] += coeffs.data[base + m] * *p;
                        if m > 0 {
                            buf[k * l + bn] += coeffs.data[base - m] * *p;
                        }
                    }
                }
            }
            for (_, buf) in out.iter_mut() {
                for k in 0..kc {
                    g.fft_inverse.process(&mut buf[k * l..(k + 1) * l]);
                }
            }
            Ok(out)
        }
    }
}

/// Pointwise projections `H_n f(θ, φ)` for every active degree at an arbitrary point.
pub fn degree_components_at(coeffs: &CoefficientTable, theta: f64, phi: f64) -> Vec<(usize, Complex64)> {
    let active = coeffs.active_degrees();
    let band = coeffs.band;
    match coeffs.layout {
        Layout::Zonal => {
            let basis = ZonalBasis::new(coeffs.d, band).expect("zonal table has d >= 2");
            let e = basis.values(theta.cos());
            active.iter().map(|&n| (n, coeffs.data[n] * e[n])).collect()
        }
        Layout::Full => {
            let (s, t) = theta.sin_cos();
            let s = s.abs();
            let mut acc = vec![ZERO; band + 1];
            let mut col = vec![0.0; band + 1];
            let mut pmm = LEGENDRE_SEED;
            for m in 0..=band {
                if m > 0 {
                    pmm *= LegendreRecurrence::sectoral_step(m) * s;
                }
                let rec = LegendreRecurrence::new(m, band);
                let len = band - m + 1;
                rec.fill(pmm, t, &mut col[..len]);
                let ep = Complex64::from_polar(1.0, m as f64 * phi);
                for (j, p) in col[..len].iter().enumerate() {
                    let n = m + j;
                    let base = n * n + n;
                    acc[n] += coeffs.data[base + m] * ep * *p;
                    if m > 0 {
                        acc[n] += coeffs.data[base - m] * ep.conj() * *p;
                    }
                }
            }
            active.iter().map(|&n| (n, acc[n])).collect()
        }
    }
}

/// Value `f(θ, φ)` of the band-limited function at an arbitrary point.
pub fn evaluate_at(coeffs: &CoefficientTable, theta: f64, phi: f64) -> Complex64 {
    degree_components_at(coeffs, theta, phi).into_iter().map(|(_, v)| v).sum()
}
