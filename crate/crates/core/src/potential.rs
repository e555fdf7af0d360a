//! Schrödinger flow with a separable, band-limited potential
//! `i u_t = (−Δ + V(t, x)) u`, `V = Σ_k a_k(t) B_k(x)`.
//!
//! The Duhamel form is `u = e^{itΔ}f − i ∫₀^t e^{i(t−τ)Δ}(V u)(τ) dτ`; the
//! factor −i is what makes the flow L²-unitary for real V. Products `V·w`
//! are formed on a grid fine enough for exact re-analysis and truncated back
//! to the band of the data (Galerkin truncation), which keeps the discrete
//! operator self-adjoint for real V.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::kappa_pq;
use crate::grid::Grid;
use crate::harmonics::SphereDim;
use crate::norms::{grid_for_field, mixed_norm_with, quadrature_band, sobolev_norm, NormOptions};
use crate::rng::{random_full_table, random_zonal_table, StreamRng};
use crate::spectral::{propagate_to_node, SpaceTimeField, SpectralField, TimeGrid};
use crate::transform::{analyze, synthesize, CoefficientTable, Layout};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Fourier coefficient `c_k` of a time factor `a(t) = Σ c_k e^{ikt}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeCoeff {
    pub k: i64,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Spectral coefficient of a spatial factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialCoeff {
    pub n: usize,
    #[serde(default)]
    pub m: i64,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermSpec {
    pub time_coeffs: Vec<TimeCoeff>,
    pub spatial_coeffs: Vec<SpatialCoeff>,
}

/// Serialized potential: `{"version": 1, "d": 2, "terms": [...]}`.
/// On 𝕊^d with d ≥ 3 only zonal spatial factors (m = 0) are accepted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    #[serde(default = "default_version")]
    pub version: u32,
    #[serde(default = "default_dim")]
    pub d: SphereDim,
    pub terms: Vec<TermSpec>,
}

fn default_version() -> u32 {
    1
}

fn default_dim() -> SphereDim {
    SphereDim::S2
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialTerm {
    time: Vec<(i64, Complex64)>,
    spatial: CoefficientTable,
}

impl PotentialTerm {
    pub fn new(time: Vec<(i64, Complex64)>, spatial: CoefficientTable) -> Result<Self> {
        if !spatial.is_finite() || time.iter().any(|(_, c)| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::InvalidParameter("potential coefficients must be finite".into()));
        }
        Ok(PotentialTerm { time, spatial })
    }

    /// `a(t) = Σ c_k e^{ikt}`.
    pub fn time_factor(&self, t: f64) -> Complex64 {
        self.time.iter().map(|&(k, c)| c * Complex64::from_polar(1.0, k as f64 * t)).sum()
    }

    pub fn spatial(&self) -> &CoefficientTable {
        &self.spatial
    }
}

/// `V(t, x) = Σ_k a_k(t) B_k(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    terms: Vec<PotentialTerm>,
    d: SphereDim,
    layout: Layout,
}

impl Potential {
    pub fn zero(d: SphereDim) -> Self {
        let layout = if d.get() == 2 { Layout::Full } else { Layout::Zonal };
        Potential { terms: Vec::new(), d, layout }
    }

    pub fn new(terms: Vec<PotentialTerm>) -> Result<Self> {
        let first = terms.first().ok_or_else(|| Error::InvalidParameter("potential needs a term; use Potential::zero".into()))?;
        let (d, layout) = (first.spatial.dim(), first.spatial.layout());
        if terms.iter().any(|t| t.spatial.dim() != d || t.spatial.layout() != layout) {
            return Err(Error::InvalidParameter("all potential terms must share one layout".into()));
        }
        Ok(Potential { terms, d, layout })
    }

    /// Separable potential `a(t) B(x)`.
    pub fn separable(time: Vec<(i64, Complex64)>, spatial: CoefficientTable) -> Result<Self> {
        Potential::new(vec![PotentialTerm::new(time, spatial)?])
    }

    pub fn from_spec(spec: &PotentialSpec) -> Result<Self> {
        if spec.version != 1 {
            return Err(Error::InvalidParameter(format!("unsupported potential version {}", spec.version)));
        }
        if spec.terms.is_empty() {
            return Ok(Potential::zero(spec.d));
        }
        let mut terms = Vec::new();
        for term in &spec.terms {
            let band = term.spatial_coeffs.iter().map(|c| c.n).max().unwrap_or(0);
            let mut table = if spec.d.get() == 2 {
                CoefficientTable::zeros_full(band)
            } else {
                CoefficientTable::zeros_zonal(band, spec.d)?
            };
            for c in &term.spatial_coeffs {
                let cur = table.get(c.n, c.m)?;
                table.set(c.n, c.m, cur + Complex64::new(c.re, c.im))?;
            }
            let time = term.time_coeffs.iter().map(|c| (c.k, Complex64::new(c.re, c.im))).collect();
            terms.push(PotentialTerm::new(time, table)?);
        }
        Potential::new(terms)
    }

    pub fn terms(&self) -> &[PotentialTerm] {
        &self.terms
    }

    pub fn dim(&self) -> SphereDim {
        self.d
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn band(&self) -> usize {
        self.terms.iter().map(|t| t.spatial.band()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.spatial.norm_sq() == 0.0 || t.time.iter().all(|(_, c)| c.norm() == 0.0))
    }

    fn max_frequency(&self) -> i64 {
        self.terms.iter().flat_map(|t| t.time.iter().map(|(k, _)| k.abs())).max().unwrap_or(0)
    }

    /// Samples of `V(t, ·)` on a grid.
    pub fn samples_at(&self, grid: &Grid, t: f64) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
        for term in &self.terms {
            let a = term.time_factor(t);
            let b = synthesize(&term.spatial, grid)?;
            out.iter_mut().zip(&b).for_each(|(o, v)| *o += a * v);
        }
        Ok(out)
    }

    fn spatial_samples(&self, grid: &Grid) -> Result<Vec<Vec<Complex64>>> {
        self.terms.iter().map(|t| synthesize(&t.spatial, grid)).collect()
    }

    /// `‖V‖_{L^q_x(L^∞_t)}`. The time supremum is taken over `16(K+1)` samples
    /// (K the largest time frequency) and the space norm on an oversampled grid.
    pub fn mixed_sup_norm(&self, q: f64) -> Result<f64> {
        if !(q >= 1.0) {
            return Err(Error::InvalidParameter(format!("q must lie in [1, inf], got {q}")));
        }
        if self.terms.is_empty() {
            return Ok(0.0);
        }
        let band = (2 * self.band()).max(4);
        let grid = match self.layout {
            Layout::Full => Grid::Sphere(crate::grid::build_sphere_grid(band)?),
            Layout::Zonal => Grid::Zonal(crate::grid::build_zonal_grid(band, self.d)?),
        };
        let spatial = self.spatial_samples(&grid)?;
        let steps = 16 * (self.max_frequency() as usize + 1);
        let mut sup = vec![0.0f64; grid.len()];
        for j in 0..steps {
            let t = TAU * j as f64 / steps as f64;
            let a: Vec<Complex64> = self.terms.iter().map(|term| term.time_factor(t)).collect();
            for (k, s) in sup.iter_mut().enumerate() {
                let v: Complex64 = a.iter().zip(&spatial).map(|(a, b)| a * b[k]).sum();
                *s = s.max(v.norm());
            }
        }
        crate::norms::lp_norm_real(&sup, &grid, q)
    }
}

/// `q` paired with `p` by `1/q + 2/p = 1`.
pub fn holder_exponent(p: f64) -> Result<f64> {
    if !(p >= 2.0) {
        return Err(Error::Domain(format!("p must lie in [2, inf], got {p}")));
    }
    Ok(1.0 / (1.0 - 2.0 / p))
}

/// Checks `1/q + 2/p = 1`.
pub fn check_holder(p: f64, q: f64) -> Result<()> {
    let lhs = if q.is_infinite() { 0.0 } else { 1.0 / q } + 2.0 / p;
    if (lhs - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("exponents violate 1/q + 2/p = 1 (p = {p}, q = {q})")));
    }
    Ok(())
}

/// `sup_j ‖u(t_j)‖_{W^s} + ‖u‖_{L^p_x(L²_t)}` on the field's grids.
pub fn x_norm(u: &SpaceTimeField, p: f64, s: f64) -> Result<f64> {
    if u.is_empty() {
        return Err(Error::InvalidParameter("x_norm of an empty history".into()));
    }
    let sup = (0..u.len()).map(|j| sobolev_norm(&u.coeffs_at(j), s)).fold(0.0f64, f64::max);
    let opts = NormOptions { time_tolerance: f64::INFINITY, ..NormOptions::default() };
    Ok(sup + mixed_norm_with(u, p, 2.0, &opts)?)
}

/// `D_j ≈ ∫₀^{t_j} e^{i(t_j−τ)Δ} G(τ) dτ` by the composite trapezoid rule in
/// the interaction picture: `S_j = S_{j−1} + h/2 (e^{−iλτ_{j−1}} G_{j−1} + e^{−iλτ_j} G_j)`,
/// `D_j = e^{iλt_j} S_j`.
pub fn duhamel_apply(g: &SpaceTimeField, tg: &TimeGrid) -> Result<SpaceTimeField> {
    if g.times() != tg {
        return Err(Error::InvalidParameter("source history is not sampled on the requested time grid".into()));
    }
    let d = g.coeffs_at(0).dim();
    let h = Complex64::new(tg.step() / 2.0, 0.0);
    let pulled = |j: usize| {
        let mut c = g.coeffs_at(j).into_owned();
        c.coeffs_mut().scale_degrees(|n| tg.phase(crate::harmonics::eigenvalue_int(n, d), -(j as i64)));
        c
    };
    let mut acc = g.coeffs_at(0).zeros_like();
    let mut prev = pulled(0);
    let mut out = Vec::with_capacity(tg.len());
    out.push(acc.clone());
    for j in 1..tg.len() {
        let cur = pulled(j);
        acc.add_scaled(h, &prev)?;
        acc.add_scaled(h, &cur)?;
        out.push(propagate_to_node(&acc, tg, j));
        prev = cur;
    }
    SpaceTimeField::from_history(out, *tg, g.grid().clone())
}

/// Grid on which `V·w` is analyzed exactly back to the band of `w`.
fn product_grid(field: &SpectralField, v: &Potential) -> Result<Grid> {
    grid_for_field(field, field.band() + v.band().div_ceil(2))
}

fn check_compatible(f: &SpectralField, v: &Potential) -> Result<()> {
    if f.dim() != v.dim() {
        return Err(Error::InvalidParameter("potential and data live on different spheres".into()));
    }
    if !v.terms.is_empty() && f.layout() != v.layout() {
        return Err(Error::Unsupported("potential and data must share one coefficient layout".into()));
    }
    Ok(())
}

/// History of `V(t_j)·w(t_j)` truncated to the band of `w`.
pub fn potential_product(w: &SpaceTimeField, v: &Potential) -> Result<SpaceTimeField> {
    let tg = *w.times();
    let first = w.coeffs_at(0).into_owned();
    check_compatible(&first, v)?;
    if v.is_zero() {
        let zero = first.zeros_like();
        return SpaceTimeField::from_history(vec![zero; tg.len()], tg, w.grid().clone());
    }
    let pg = product_grid(&first, v)?;
    let spatial = v.spatial_samples(&pg)?;
    let mut out = Vec::with_capacity(tg.len());
    for j in 0..tg.len() {
        let t = tg.radians(j);
        let a: Vec<Complex64> = v.terms.iter().map(|term| term.time_factor(t)).collect();
        let mut vals = synthesize(w.coeffs_at(j).coeffs(), &pg)?;
        for (k, x) in vals.iter_mut().enumerate() {
            let vk: Complex64 = a.iter().zip(&spatial).map(|(a, b)| a * b[k]).sum();
            *x *= vk;
        }
        out.push(SpectralField::new(analyze(&vals, &pg, first.band())?)?);
    }
    SpaceTimeField::from_history(out, tg, w.grid().clone())
}

/// `Φw = e^{itΔ}f − i ∫₀^t e^{i(t−τ)Δ}(V w)(τ) dτ`.
pub fn apply_phi(w: &SpaceTimeField, f: &SpectralField, v: &Potential) -> Result<SpaceTimeField> {
    if w.band() != f.band() {
        return Err(Error::InvalidParameter(format!("iterate band {} differs from data band {}", w.band(), f.band())));
    }
    let tg = *w.times();
    let d = duhamel_apply(&potential_product(w, v)?, &tg)?;
    let hist = (0..tg.len())
        .map(|j| {
            let mut u = propagate_to_node(f, &tg, j);
            u.add_scaled(-I, &d.coeffs_at(j))?;
            Ok(u)
        })
        .collect::<Result<Vec<_>>>()?;
    SpaceTimeField::from_history(hist, tg, w.grid().clone())
}

/// Diagnostics of a Picard run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardReport {
    pub iterations: usize,
    /// `‖u^{k+1} − u^k‖_X` for each iterate.
    pub increments: Vec<f64>,
    /// Successive increment ratios.
    pub ratios: Vec<f64>,
    /// Largest observed increment ratio (0 when fewer than two increments).
    pub contraction_ratio: f64,
    /// `‖Φu − u‖_X` at the returned iterate.
    pub residual: f64,
}

/// Data, potential and discretization of a potential problem.
#[derive(Debug, Clone)]
pub struct PotentialProblem {
    pub f: SpectralField,
    pub potential: Potential,
    pub times: TimeGrid,
    pub p: f64,
    pub s: f64,
    grid: Grid,
}

impl PotentialProblem {
    /// Validates the regularity `s ≥ ϰ_{p,2}` and picks the norm grid (exact
    /// for even p).
    pub fn new(f: SpectralField, potential: Potential, times: TimeGrid, p: f64, s: f64) -> Result<Self> {
        check_compatible(&f, &potential)?;
        holder_exponent(p)?;
        let kappa = kappa_pq(p, 2.0, f.dim())?;
        if s < kappa - 1e-12 {
            return Err(Error::Domain(format!("regularity s = {s} is below the threshold {kappa}")));
        }
        let band = quadrature_band(f.band().max(1), p, Some(2.0), &NormOptions::default());
        let grid = grid_for_field(&f, band)?;
        Ok(PotentialProblem { f, potential, times, p, s, grid })
    }

    /// Hölder partner of p for the smallness norm of V.
    pub fn q(&self) -> f64 {
        holder_exponent(self.p).expect("validated in new")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn free_evolution(&self) -> Result<SpaceTimeField> {
        SpaceTimeField::free(self.f.clone(), self.times, self.grid.clone())
    }

    pub fn x_norm(&self, u: &SpaceTimeField) -> Result<f64> {
        x_norm(u, self.p, self.s)
    }

    pub fn apply_phi(&self, w: &SpaceTimeField) -> Result<SpaceTimeField> {
        apply_phi(w, &self.f, &self.potential)
    }

    /// `‖Φw − Φv‖_X / ‖w − v‖_X`.
    pub fn contraction_check(&self, w: &SpaceTimeField, v: &SpaceTimeField) -> Result<f64> {
        let den = self.x_norm(&w.difference(v)?)?;
        if den == 0.0 {
            return Err(Error::ZeroNorm("contraction check with w = v".into()));
        }
        let num = self.x_norm(&self.apply_phi(w)?.difference(&self.apply_phi(v)?)?)?;
        Ok(num / den)
    }

    /// Iterates `u^{k+1} = Φ(u^k)` from the free evolution until the X-norm
    /// increment drops to `tol`.
    pub fn picard_solve(&self, tol: f64, max_iter: usize) -> Result<(SpaceTimeField, PicardReport)> {
        if !(tol > 0.0) || max_iter == 0 {
            return Err(Error::InvalidParameter("tolerance must be positive and max_iter at least 1".into()));
        }
        let mut u = self.free_evolution()?;
        let scale = self.x_norm(&u)?.max(f64::MIN_POSITIVE);
        let mut increments: Vec<f64> = Vec::new();
        let mut ratios = Vec::new();
        let mut streak = 0;
        for k in 1..=max_iter {
            let next = self.apply_phi(&u)?;
            let inc = self.x_norm(&next.difference(&u)?)?;
            if let Some(&last) = increments.last() {
                let ratio = if last > 0.0 { inc / last } else { 0.0 };
                ratios.push(ratio);
                // ratios of increments at rounding level carry no information
                if ratio >= 1.0 && inc > 1e-13 * scale {
                    streak += 1;
                    if streak >= 3 {
                        return Err(Error::Divergence { ratio, streak });
                    }
                } else {
                    streak = 0;
                }
            }
            increments.push(inc);
            u = next;
            if inc <= tol {
                let residual = self.x_norm(&self.apply_phi(&u)?.difference(&u)?)?;
                let contraction_ratio = ratios.iter().cloned().fold(0.0f64, f64::max);
                let report = PicardReport { iterations: k, increments, ratios, contraction_ratio, residual };
                return Ok((u, report));
            }
        }
        Err(Error::MaxIterations { iterations: max_iter, last_increment: *increments.last().unwrap_or(&f64::NAN) })
    }

    /// Empirical `C₀ = max ‖e^{itΔ}g‖_X / ‖g‖_{W^s}` over the constant
    /// harmonic and `probes` random band-limited g.
    pub fn estimate_c0(&self, probes: usize, seed: u64) -> Result<f64> {
        let band = self.f.band();
        let d = self.f.dim();
        let mut fields = vec![match self.f.layout() {
            Layout::Full => SpectralField::harmonic(band, 0, 0)?,
            Layout::Zonal => SpectralField::zonal_harmonic(band, 0, d)?,
        }];
        for i in 0..probes {
            let mut rng = StreamRng::new(seed, 1000 + i as u64);
            let table = match self.f.layout() {
                Layout::Full => random_full_table(band, &mut rng),
                Layout::Zonal => random_zonal_table(band, d, &mut rng),
            };
            fields.push(SpectralField::new(table)?);
        }
        let mut c0 = 0.0f64;
        for g in fields {
            let u = SpaceTimeField::free(g.clone(), self.times, self.grid.clone())?;
            c0 = c0.max(self.x_norm(&u)? / sobolev_norm(&g, self.s));
        }
        Ok(c0)
    }

    /// Smallness condition `2 (C₀ + C₀²) ‖V‖_{L^q_x L^∞_t} ≤ 1/2`, with the
    /// factor 2 as a safety margin on the empirical constant.
    pub fn smallness_gate(&self, probes: usize, seed: u64) -> Result<SmallnessGate> {
        let c0 = self.estimate_c0(probes, seed)?;
        let potential_norm = self.potential.mixed_sup_norm(self.q())?;
        let bound = 2.0 * (c0 + c0 * c0) * potential_norm;
        Ok(SmallnessGate { c0, potential_norm, bound, satisfied: bound <= 0.5 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallnessGate {
    pub c0: f64,
    pub potential_norm: f64,
    pub bound: f64,
    pub satisfied: bool,
}

/// `‖∫₀^t e^{i(t−τ)Δ} G(τ) dτ‖_{L^p_x L²_t} / ‖G‖_{L^{p'}_x L²_t}` with `1/p + 1/p' = 1`.
pub fn duality_ratio(g: &SpaceTimeField, p: f64) -> Result<f64> {
    let dual = holder_dual(p)?;
    let opts = NormOptions { time_tolerance: f64::INFINITY, ..NormOptions::default() };
    let den = mixed_norm_with(g, dual, 2.0, &opts)?;
    if den == 0.0 {
        return Err(Error::ZeroNorm("duality ratio of a vanishing source".into()));
    }
    Ok(mixed_norm_with(&duhamel_apply(g, g.times())?, p, 2.0, &opts)? / den)
}

fn holder_dual(p: f64) -> Result<f64> {
    if !(p >= 2.0) {
        return Err(Error::Domain(format!("duality ratio needs p >= 2, got {p}")));
    }
    Ok(if p.is_infinite() { 1.0 } else { p / (p - 1.0) })
}

/// Largest `|‖u(t_j)‖²_{L²} − ‖u(0)‖²_{L²}|` over the time nodes.
pub fn l2_drift(u: &SpaceTimeField) -> f64 {
    let m0 = u.coeffs_at(0).coeffs().norm_sq();
    (0..u.len()).map(|j| (u.coeffs_at(j).coeffs().norm_sq() - m0).abs()).fold(0.0, f64::max)
}
