//! Diagonal spectral operators: projections `H_n`, the Schrödinger propagator,
//! fractional Sobolev weights, and space-time histories.
//!
//! Sign convention: the Laplacian is the positive one (eigenvalues
//! `λ_n = n(n+d−1) ≥ 0`) and `i u_t + Δu = 0`, so the free solution is
//! `u(t) = Σ_n e^{+iλ_n t} H_n f`.

use std::borrow::Cow;
use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::harmonics::{eigenvalue_int, SphereDim};
use crate::transform::{synthesize, CoefficientTable, Layout};

/// A band-limited function on 𝕊^d given by its spectral coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    coeffs: CoefficientTable,
}

impl SpectralField {
    pub fn new(coeffs: CoefficientTable) -> Result<Self> {
        if !coeffs.is_finite() {
            return Err(Error::InvalidParameter("coefficients must be finite".into()));
        }
        Ok(SpectralField { coeffs })
    }

    /// Single harmonic `Y_{n,m}` on 𝕊² stored in a band-`band` table.
    pub fn harmonic(band: usize, n: usize, m: i64) -> Result<Self> {
        let mut t = CoefficientTable::zeros_full(band);
        t.set(n, m, Complex64::new(1.0, 0.0))?;
        Ok(SpectralField { coeffs: t })
    }

    /// Unit-norm zonal harmonic of degree n on 𝕊^d.
    pub fn zonal_harmonic(band: usize, n: usize, d: SphereDim) -> Result<Self> {
        let mut t = CoefficientTable::zeros_zonal(band, d)?;
        t.set(n, 0, Complex64::new(1.0, 0.0))?;
        Ok(SpectralField { coeffs: t })
    }

    pub fn zeros_like(&self) -> Self {
        SpectralField { coeffs: self.coeffs.zeros_like(self.coeffs.band()) }
    }

    pub fn coeffs(&self) -> &CoefficientTable {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut CoefficientTable {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> CoefficientTable {
        self.coeffs
    }

    pub fn band(&self) -> usize {
        self.coeffs.band()
    }

    pub fn dim(&self) -> SphereDim {
        self.coeffs.dim()
    }

    pub fn layout(&self) -> Layout {
        self.coeffs.layout()
    }

    /// `‖f‖_{L²}`, exact by Parseval.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.norm_sq().sqrt()
    }

    pub fn active_degrees(&self) -> Vec<usize> {
        self.coeffs.active_degrees()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        SpectralField { coeffs: self.coeffs.scaled(c) }
    }

    pub fn add_scaled(&mut self, c: Complex64, other: &SpectralField) -> Result<()> {
        self.coeffs.axpy(c, &other.coeffs)
    }

    pub fn difference(&self, other: &SpectralField) -> Result<SpectralField> {
        let mut out = self.clone();
        out.add_scaled(Complex64::new(-1.0, 0.0), other)?;
        Ok(out)
    }

    /// Spread `λ_max − λ_min` of the eigenvalues present in the field.
    pub fn eigenvalue_spread(&self) -> u64 {
        let active = self.active_degrees();
        match (active.first(), active.last()) {
            (Some(&lo), Some(&hi)) => eigenvalue_int(hi, self.dim()) - eigenvalue_int(lo, self.dim()),
            _ => 0,
        }
    }
}

/// A point of the time circle 𝕋 ≅ [0, 2π) together with its winding count.
///
/// Keeping whole periods apart from the phase makes `t + 2π` exact, so the
/// propagator is exactly 2π-periodic in this representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Time {
    periods: i64,
    /// Fraction of a period in [0, 1).
    frac: f64,
}

impl Time {
    pub const ZERO: Time = Time { periods: 0, frac: 0.0 };
    pub const PERIOD: Time = Time { periods: 1, frac: 0.0 };

    pub fn from_periods(tau: f64) -> Self {
        let whole = tau.floor();
        let mut frac = tau - whole;
        let mut periods = whole as i64;
        if frac >= 1.0 {
            frac -= 1.0;
            periods += 1;
        }
        Time { periods, frac }
    }

    pub fn from_radians(t: f64) -> Self {
        Time::from_periods(t / TAU)
    }

    pub fn radians(self) -> f64 {
        (self.periods as f64 + self.frac) * TAU
    }

    pub fn periods(self) -> i64 {
        self.periods
    }

    pub fn fraction(self) -> f64 {
        self.frac
    }

    /// `e^{iλt}` for an integer frequency, reduced exactly modulo one period.
    pub fn phase(self, lambda: u64) -> Complex64 {
        let l = lambda as f64;
        let p = l * self.frac;
        let e = l.mul_add(self.frac, -p);
        let mut r = (p - p.floor()) + e;
        r -= r.round();
        Complex64::from_polar(1.0, TAU * r)
    }
}

impl std::ops::Add for Time {
    type Output = Time;
    fn add(self, rhs: Time) -> Time {
        let t = Time::from_periods(self.frac + rhs.frac);
        Time { periods: self.periods + rhs.periods + t.periods, frac: t.frac }
    }
}

/// Uniform samples `t_j = 2πj/M`, j = 0..M, on 𝕋.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeGrid {
    samples: usize,
}

impl TimeGrid {
    pub fn new(samples: usize) -> Result<Self> {
        if samples == 0 {
            return Err(Error::InvalidParameter("time grid needs at least one sample".into()));
        }
        Ok(TimeGrid { samples })
    }

    /// Default resolution `M = 4(λ_N + 1)` for band N.
    pub fn for_band(band: usize, d: SphereDim) -> Self {
        TimeGrid { samples: 4 * (eigenvalue_int(band, d) as usize + 1) }
    }

    /// Default resolution sized by the eigenvalue spread actually present in `f`:
    /// `M = 4(λ_max − λ_min + 1)`. Equals [`TimeGrid::for_band`] when both
    /// degree 0 and the band edge are present.
    pub fn for_field(f: &SpectralField) -> Self {
        TimeGrid { samples: 4 * (f.eigenvalue_spread() as usize + 1) }
    }

    /// Smallest 5-smooth `M > (q/2)·spread` for even integer q: the rectangle
    /// rule is then exact for `|u(·, z)|^q`, a trigonometric polynomial with
    /// frequencies bounded by `(q/2)·spread`.
    pub fn exact_for(f: &SpectralField, q: f64) -> Result<Self> {
        if !is_even_integer(q) {
            return Err(Error::InvalidParameter(format!("exact time rule needs an even integer q, got {q}")));
        }
        let threshold = (q as u64 / 2) * f.eigenvalue_spread();
        Ok(TimeGrid { samples: next_smooth(threshold as usize + 1) })
    }

    pub fn len(&self) -> usize {
        self.samples
    }

    pub fn is_empty(&self) -> bool {
        self.samples == 0
    }

    pub fn step(&self) -> f64 {
        TAU / self.samples as f64
    }

    pub fn time(&self, j: usize) -> Time {
        Time::from_periods(j as f64 / self.samples as f64)
    }

    pub fn radians(&self, j: usize) -> f64 {
        TAU * j as f64 / self.samples as f64
    }

    /// `e^{iλ t_j}` with the exponent reduced in integer arithmetic.
    pub fn phase(&self, lambda: u64, j: i64) -> Complex64 {
        let m = self.samples as i128;
        let r = ((lambda as i128) * (j as i128)).rem_euclid(m);
        Complex64::from_polar(1.0, TAU * r as f64 / m as f64)
    }

    pub fn doubled(&self) -> Self {
        TimeGrid { samples: 2 * self.samples }
    }
}

pub(crate) fn is_even_integer(q: f64) -> bool {
    q.is_finite() && q > 0.0 && q.fract() == 0.0 && (q as u64) % 2 == 0
}

fn next_smooth(min: usize) -> usize {
    let mut n = min.max(1);
    loop {
        let mut r = n;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return n;
        }
        n += 1;
    }
}

/// Spectral projection `H_n f`.
pub fn project(f: &SpectralField, n: usize) -> Result<SpectralField> {
    if n > f.band() {
        return Err(Error::DegreeOutOfBand { degree: n, band: f.band() });
    }
    let mut out = f.zeros_like();
    out.coeffs.degree_mut(n).copy_from_slice(f.coeffs.degree(n));
    Ok(out)
}

/// Free Schrödinger evolution `e^{itΔ} f = Σ e^{iλ_n t} H_n f`.
pub fn propagate(f: &SpectralField, t: Time) -> SpectralField {
    let d = f.dim();
    let mut out = f.clone();
    out.coeffs.scale_degrees(|n| t.phase(eigenvalue_int(n, d)));
    out
}

/// Propagation to grid time `t_j` with exactly reduced phases.
pub fn propagate_to_node(f: &SpectralField, tg: &TimeGrid, j: usize) -> SpectralField {
    let d = f.dim();
    let mut out = f.clone();
    out.coeffs.scale_degrees(|n| tg.phase(eigenvalue_int(n, d), j as i64));
    out
}

/// Sobolev weight `(1 + n)^s` applied degree-wise.
pub fn fractional_weight(f: &SpectralField, s: f64) -> SpectralField {
    let mut out = f.clone();
    out.coeffs.scale_degrees(|n| Complex64::new(((1 + n) as f64).powf(s), 0.0));
    out
}

#[derive(Debug, Clone)]
enum History {
    /// Free evolution of the initial datum, expanded on demand.
    Free(SpectralField),
    /// One coefficient table per time node.
    Explicit(Vec<SpectralField>),
}

/// Samples of `u(t_j, z)` on a time grid × sphere grid, with the per-time
/// spectral history.
#[derive(Debug, Clone)]
pub struct SpaceTimeField {
    times: TimeGrid,
    grid: Grid,
    history: History,
}

impl SpaceTimeField {
    /// Free evolution `e^{itΔ}f` on the given grids.
    pub fn free(f: SpectralField, times: TimeGrid, grid: Grid) -> Result<Self> {
        check_field_on_grid(&f, &grid)?;
        Ok(SpaceTimeField { times, grid, history: History::Free(f) })
    }

    /// Explicit history, one field per time node.
    pub fn from_history(history: Vec<SpectralField>, times: TimeGrid, grid: Grid) -> Result<Self> {
        if history.len() != times.len() {
            return Err(Error::ShapeMismatch { expected: times.len(), got: history.len() });
        }
        if let Some(first) = history.first() {
            for h in &history {
                if h.band() != first.band() || h.layout() != first.layout() || h.dim() != first.dim() {
                    return Err(Error::InvalidParameter("history entries must share one layout".into()));
                }
            }
            check_field_on_grid(first, &grid)?;
        }
        Ok(SpaceTimeField { times, grid, history: History::Explicit(history) })
    }

    pub fn times(&self) -> &TimeGrid {
        &self.times
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// The initial datum when this is an unperturbed evolution.
    pub fn free_datum(&self) -> Option<&SpectralField> {
        match &self.history {
            History::Free(f) => Some(f),
            History::Explicit(_) => None,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn band(&self) -> usize {
        match &self.history {
            History::Free(f) => f.band(),
            History::Explicit(h) => h.first().map_or(0, |f| f.band()),
        }
    }

    /// `history[j] = u(t_j)` in coefficient space.
    pub fn coeffs_at(&self, j: usize) -> Cow<'_, SpectralField> {
        match &self.history {
            History::Free(f) => Cow::Owned(propagate_to_node(f, &self.times, j)),
            History::Explicit(h) => Cow::Borrowed(&h[j]),
        }
    }

    /// Grid samples `u(t_j, z_k)`.
    pub fn samples_at(&self, j: usize) -> Result<Vec<Complex64>> {
        synthesize(self.coeffs_at(j).coeffs(), &self.grid)
    }

    /// All samples, time-major. Memory is `M × grid.len()`.
    pub fn samples(&self) -> Result<Vec<Vec<Complex64>>> {
        (0..self.len()).map(|j| self.samples_at(j)).collect()
    }

    /// Same history observed on another grid.
    pub fn with_grid(&self, grid: Grid) -> Result<Self> {
        if let Some(f) = self.history_first() {
            check_field_on_grid(&f, &grid)?;
        }
        Ok(SpaceTimeField { times: self.times, grid, history: self.history.clone() })
    }

    /// Free evolution re-sampled on another time grid; explicit histories are fixed.
    pub fn with_times(&self, times: TimeGrid) -> Result<Self> {
        match &self.history {
            History::Free(f) => SpaceTimeField::free(f.clone(), times, self.grid.clone()),
            History::Explicit(_) => Err(Error::Unsupported("explicit histories cannot be re-sampled in time".into())),
        }
    }

    fn history_first(&self) -> Option<SpectralField> {
        match &self.history {
            History::Free(f) => Some(f.clone()),
            History::Explicit(h) => h.first().cloned(),
        }
    }

    /// Materialized per-time coefficient history.
    pub fn history(&self) -> Vec<SpectralField> {
        (0..self.len()).map(|j| self.coeffs_at(j).into_owned()).collect()
    }

    /// `self − other` as an explicit history.
    pub fn difference(&self, other: &SpaceTimeField) -> Result<SpaceTimeField> {
        if self.times != other.times {
            return Err(Error::InvalidParameter("time grids differ".into()));
        }
        let hist = (0..self.len())
            .map(|j| self.coeffs_at(j).difference(&other.coeffs_at(j)))
            .collect::<Result<Vec<_>>>()?;
        SpaceTimeField::from_history(hist, self.times, self.grid.clone())
    }

    pub fn scaled(&self, c: Complex64) -> SpaceTimeField {
        let history = match &self.history {
            History::Free(f) => History::Free(f.scaled(c)),
            History::Explicit(h) => History::Explicit(h.iter().map(|f| f.scaled(c)).collect()),
        };
        SpaceTimeField { times: self.times, grid: self.grid.clone(), history }
    }
}

fn check_field_on_grid(f: &SpectralField, grid: &Grid) -> Result<()> {
    if f.band() > grid.band() {
        return Err(Error::BandOverflow { field: f.band(), grid: grid.band() });
    }
    match (f.layout(), grid) {
        (Layout::Full, Grid::Zonal(_)) => Err(Error::Unsupported("full tables need a sphere grid".into())),
        (Layout::Zonal, Grid::Sphere(_)) if f.dim().get() != 2 => {
            Err(Error::Unsupported("zonal d >= 3 tables need a zonal grid".into()))
        }
        (Layout::Zonal, Grid::Zonal(g)) if g.dim() != f.dim() => {
            Err(Error::InvalidParameter("zonal grid dimension differs from the field".into()))
        }
        _ => Ok(()),
    }
}

/// Space-time history of the free evolution of `f` on `(tg, grid)`.
pub fn synthesize_history(f: &SpectralField, tg: &TimeGrid, grid: &Grid) -> Result<SpaceTimeField> {
    SpaceTimeField::free(f.clone(), *tg, grid.clone())
}
