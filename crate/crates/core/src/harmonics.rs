//! Closed-form special functions on the sphere: Laplace eigenvalues,
//! eigenspace dimensions, normalized associated Legendre functions,
//! Gegenbauer polynomials and the zonal reproducing kernels.
//!
//! Harmonics on 𝕊² are complex and orthonormal with respect to the surface
//! measure: `Y_{n,m}(θ, φ) = P̄_n^{|m|}(cos θ) e^{imφ}` with
//! `∫ |Y_{n,m}|² dσ = 1` and `Y_{0,0} = 1/√(4π)`. No Condon–Shortley phase is
//! applied, so `Y_{n,-m} = conj(Y_{n,m})`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimension `d` of the unit sphere 𝕊^d ⊂ ℝ^{d+1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct SphereDim(u32);

impl SphereDim {
    pub const S2: SphereDim = SphereDim(2);

    pub fn new(d: u32) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("sphere dimension must be >= 1".into()));
        }
        Ok(SphereDim(d))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// Gegenbauer index `α = (d − 1)/2` of the zonal harmonics.
    pub fn alpha(self) -> f64 {
        (self.0 as f64 - 1.0) / 2.0
    }

    /// Critical Lebesgue exponent `2(d+1)/(d−1)`; infinite for d = 1.
    pub fn critical_exponent(self) -> f64 {
        if self.0 == 1 {
            f64::INFINITY
        } else {
            2.0 * (self.0 as f64 + 1.0) / (self.0 as f64 - 1.0)
        }
    }
}

impl TryFrom<u32> for SphereDim {
    type Error = Error;
    fn try_from(d: u32) -> Result<Self> {
        SphereDim::new(d)
    }
}

impl From<SphereDim> for u32 {
    fn from(d: SphereDim) -> u32 {
        d.0
    }
}

impl std::fmt::Display for SphereDim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Degree/order pair of a harmonic on 𝕊².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HarmonicIndex {
    pub n: usize,
    pub m: i64,
}

impl HarmonicIndex {
    pub fn new(n: usize, m: i64) -> Result<Self> {
        if m.unsigned_abs() as usize > n {
            return Err(Error::InvalidParameter(format!("order {m} exceeds degree {n}")));
        }
        Ok(HarmonicIndex { n, m })
    }
}

/// Laplace–Beltrami eigenvalue `λ_n = n(n + d − 1)` of the degree-n eigenspace.
pub fn eigenvalue(n: usize, d: SphereDim) -> f64 {
    eigenvalue_int(n, d) as f64
}

/// Integer form of [`eigenvalue`], used for exact time-frequency bookkeeping.
pub fn eigenvalue_int(n: usize, d: SphereDim) -> u64 {
    let n = n as u64;
    n * (n + d.get() as u64 - 1)
}

fn binomial(a: u64, b: u64) -> u128 {
    if b > a {
        return 0;
    }
    let b = b.min(a - b);
    let mut r: u128 = 1;
    for i in 0..b {
        r = r * (a - i) as u128 / (i + 1) as u128;
    }
    r
}

/// Exact dimension of the space of degree-n spherical harmonics on 𝕊^d,
/// `C(n+d, d) − C(n+d−2, d)`.
pub fn eigenspace_dim(n: usize, d: SphereDim) -> u64 {
    let n = n as u64;
    let d = d.get() as u64;
    let total = binomial(n + d, d);
    let lower = if n >= 2 { binomial(n + d - 2, d) } else { 0 };
    (total - lower) as u64
}

/// Surface measure `|𝕊^d| = 2π^{(d+1)/2} / Γ((d+1)/2)`.
///
/// Evaluated through `|𝕊^d| = 2π/(d−1) · |𝕊^{d−2}|` from `|𝕊^0| = 2` and
/// `|𝕊^1| = 2π`, which keeps `|𝕊²| = 4π` exact in floating point.
pub fn surface_area(d: SphereDim) -> f64 {
    surface_area_raw(d.get())
}

fn surface_area_raw(d: u32) -> f64 {
    match d {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (d as f64 - 1.0) * surface_area_raw(d - 2),
    }
}

fn check_unit_interval(t: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("argument {t} lies outside [-1, 1]")));
    }
    Ok(())
}

/// Unnormalized Legendre polynomial `P_n(t)` (Bonnet recurrence).
pub fn legendre_p(n: usize, t: f64) -> Result<f64> {
    check_unit_interval(t)?;
    let (mut p0, mut p1) = (1.0, t);
    if n == 0 {
        return Ok(p0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    Ok(p1)
}

/// Seed `P̄_0^0 = 1/√(4π)` of the orthonormal associated Legendre recurrence.
pub const LEGENDRE_SEED: f64 = 0.282_094_791_773_878_14;

/// Upward recurrence in degree for the orthonormal associated Legendre
/// functions of a fixed order `m`.
///
/// `P̄_n^m = a_n (t P̄_{n−1}^m − P̄_{n−2}^m / a_{n−1})` with
/// `a_n = √((4n² − 1)/(n² − m²))`.
#[derive(Debug, Clone)]
pub struct LegendreRecurrence {
    m: usize,
    nmax: usize,
    a: Vec<f64>,
    inv_a: Vec<f64>,
}

impl LegendreRecurrence {
    pub fn new(m: usize, nmax: usize) -> Self {
        let len = nmax.saturating_sub(m) + 1;
        let mut a = vec![0.0; len];
        let mut inv_a = vec![0.0; len];
        for n in (m + 1)..=nmax {
            let nf = n as f64;
            let mf = m as f64;
            let v = ((4.0 * nf * nf - 1.0) / ((nf - mf) * (nf + mf))).sqrt();
            a[n - m] = v;
            inv_a[n - m] = 1.0 / v;
        }
        LegendreRecurrence { m, nmax, a, inv_a }
    }

    pub fn order(&self) -> usize {
        self.m
    }

    /// Factor `√((2m+1)/(2m))` taking the sectoral seed from order m−1 to m
    /// (to be multiplied by `sin θ`).
    pub fn sectoral_step(m: usize) -> f64 {
        let mf = m as f64;
        ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt()
    }

    /// Fills `out[n − m] = P̄_n^m(t)` for `n = m..=nmax` from the sectoral value
    /// `pmm = P̄_m^m(t)`.
    pub fn fill(&self, pmm: f64, t: f64, out: &mut [f64]) {
        let len = self.nmax + 1 - self.m;
        debug_assert!(out.len() >= len);
        out[0] = pmm;
        if len == 1 {
            return;
        }
        out[1] = self.a[1] * t * pmm;
        for j in 2..len {
            out[j] = self.a[j] * (t * out[j - 1] - out[j - 2] * self.inv_a[j - 1]);
        }
    }
}

/// Sectoral value `P̄_m^m` at colatitude with sine `sin_theta`.
pub fn sectoral_seed(m: usize, sin_theta: f64) -> f64 {
    let mut p = LEGENDRE_SEED;
    for k in 1..=m {
        p *= LegendreRecurrence::sectoral_step(k) * sin_theta;
    }
    p
}

/// Orthonormal associated Legendre function `P̄_n^m(t)`, normalized so that
/// `P̄_n^m(cos θ) e^{imφ}` has unit `L²(𝕊²)` norm.
pub fn associated_legendre(n: usize, m: usize, t: f64) -> Result<f64> {
    check_unit_interval(t)?;
    if m > n {
        return Err(Error::InvalidParameter(format!("order {m} exceeds degree {n}")));
    }
    let sin_theta = ((1.0 - t) * (1.0 + t)).sqrt();
    let rec = LegendreRecurrence::new(m, n);
    let mut out = vec![0.0; n - m + 1];
    rec.fill(sectoral_seed(m, sin_theta), t, &mut out);
    Ok(out[n - m])
}

/// Complex orthonormal harmonic `Y_{n,m}(θ, φ)` on 𝕊².
pub fn spherical_harmonic(n: usize, m: i64, theta: f64, phi: f64) -> Result<Complex64> {
    let am = m.unsigned_abs() as usize;
    if am > n {
        return Err(Error::InvalidParameter(format!("order {m} exceeds degree {n}")));
    }
    let rec = LegendreRecurrence::new(am, n);
    let mut out = vec![0.0; n - am + 1];
    rec.fill(sectoral_seed(am, theta.sin().abs()), theta.cos(), &mut out);
    Ok(Complex64::from_polar(out[n - am], m as f64 * phi))
}

/// Gegenbauer polynomial `C_n^α(t)` by its three-term recurrence.
pub fn gegenbauer(n: usize, alpha: f64, t: f64) -> Result<f64> {
    check_unit_interval(t)?;
    if alpha <= 0.0 {
        return Err(Error::InvalidParameter(format!("Gegenbauer index {alpha} must be positive")));
    }
    Ok(gegenbauer_unchecked(n, alpha, t))
}

fn gegenbauer_unchecked(n: usize, alpha: f64, t: f64) -> f64 {
    let (mut c0, mut c1) = (1.0, 2.0 * alpha * t);
    if n == 0 {
        return c0;
    }
    for k in 2..=n {
        let k = k as f64;
        let c2 = (2.0 * t * (k + alpha - 1.0) * c1 - (k + 2.0 * alpha - 2.0) * c0) / k;
        c0 = c1;
        c1 = c2;
    }
    c1
}

/// Orthonormal zonal basis on 𝕊^d: `e_n(x·e) ∝ C_n^α(x·e)` with
/// `∫_{𝕊^d} |e_n|² dσ = 1`, evaluated through the orthonormal three-term
/// recurrence `t e_j = b_{j+1} e_{j+1} + b_j e_{j−1}`.
#[derive(Debug, Clone)]
pub struct ZonalBasis {
    d: SphereDim,
    nmax: usize,
    e0: f64,
    b: Vec<f64>,
}

impl ZonalBasis {
    pub fn new(d: SphereDim, nmax: usize) -> Result<Self> {
        if d.get() < 2 {
            return Err(Error::Unsupported("zonal basis requires d >= 2".into()));
        }
        let alpha = d.alpha();
        let mut b = vec![0.0; nmax + 2];
        for (j, bj) in b.iter_mut().enumerate().skip(1) {
            let jf = j as f64;
            *bj = (jf * (jf + 2.0 * alpha - 1.0) / (4.0 * (jf + alpha) * (jf + alpha - 1.0))).sqrt();
        }
        Ok(ZonalBasis { d, nmax, e0: 1.0 / surface_area(d).sqrt(), b })
    }

    pub fn dim(&self) -> SphereDim {
        self.d
    }

    pub fn nmax(&self) -> usize {
        self.nmax
    }

    /// Fills `out[n] = e_n(t)` for `n = 0..out.len()` (at most `nmax + 1`).
    pub fn fill(&self, t: f64, out: &mut [f64]) {
        if out.is_empty() {
            return;
        }
        out[0] = self.e0;
        if out.len() == 1 {
            return;
        }
        out[1] = t * self.e0 / self.b[1];
        for j in 1..out.len() - 1 {
            out[j + 1] = (t * out[j] - self.b[j] * out[j - 1]) / self.b[j + 1];
        }
    }

    pub fn values(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.nmax + 1];
        self.fill(t, &mut out);
        out
    }
}

/// Zonal reproducing kernel of `ℋ_n^d`:
/// `Z_n^d(t) = (dim ℋ_n^d / |𝕊^d|) · C_n^α(t) / C_n^α(1)` with `α = (d−1)/2`.
pub fn zonal_kernel(n: usize, d: SphereDim, t: f64) -> Result<f64> {
    check_unit_interval(t)?;
    if d.get() < 2 {
        return Err(Error::Unsupported("zonal kernel requires d >= 2".into()));
    }
    let alpha = d.alpha();
    let scale = eigenspace_dim(n, d) as f64 / surface_area(d);
    Ok(scale * gegenbauer_unchecked(n, alpha, t) / gegenbauer_unchecked(n, alpha, 1.0))
}
