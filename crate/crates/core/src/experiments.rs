//! Regularity exponents, extremal families and the scaling sweeps built on them.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::harmonics::SphereDim;
use crate::norms::{field_lp_norm, field_mixed_norm, mixed_norm_with, sobolev_norm, NormOptions};
use crate::rng::StreamRng;
use crate::spectral::{synthesize_history, SpectralField, TimeGrid};
use crate::transform::CoefficientTable;

/// Which of the two formulas for `ϰ_p` is in force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KappaBranch {
    Subcritical,
    Critical,
    Supercritical,
}

impl fmt::Display for KappaBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KappaBranch::Subcritical => "subcritical",
            KappaBranch::Critical => "critical",
            KappaBranch::Supercritical => "supercritical",
        })
    }
}

fn check_p(p: f64) -> Result<()> {
    if p.is_nan() || p < 2.0 {
        return Err(Error::Domain(format!("p must lie in [2, inf], got {p}")));
    }
    Ok(())
}

/// Both branch formulas at p: `(d−1)/2·(1/2−1/p)` and `d(1/2−1/p) − 1/2`.
pub fn kappa_branches(p: f64, d: SphereDim) -> Result<(f64, f64)> {
    check_p(p)?;
    let d = d.get() as f64;
    let h = 0.5 - 1.0 / p;
    Ok(((d - 1.0) / 2.0 * h, d * h - 0.5))
}

pub fn kappa_branch(p: f64, d: SphereDim) -> Result<KappaBranch> {
    check_p(p)?;
    let pc = d.critical_exponent();
    Ok(if p < pc {
        KappaBranch::Subcritical
    } else if p == pc {
        KappaBranch::Critical
    } else {
        KappaBranch::Supercritical
    })
}

/// Growth exponent of `‖H_n‖_{L² → L^p(𝕊^d)}`.
pub fn kappa_p(p: f64, d: SphereDim) -> Result<f64> {
    let (low, high) = kappa_branches(p, d)?;
    Ok(if p <= d.critical_exponent() { low } else { high })
}

/// `ϰ_{p,q} = (1/2 − 1/q) + ϰ_p`.
pub fn kappa_pq(p: f64, q: f64, d: SphereDim) -> Result<f64> {
    if !(q >= 2.0 && q.is_finite()) {
        return Err(Error::Domain(format!("q must lie in [2, inf), got {q}")));
    }
    Ok((0.5 - 1.0 / q) + kappa_p(p, d)?)
}

/// Witness families for the projection bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    /// Normalized zonal kernel `Z_n`, concentrating at a point.
    ZonalKernel,
    /// `(x₁ + i x₂)^n` on 𝕊², concentrating on a great circle.
    HighestWeight,
    /// I.i.d. Gaussian coefficients within degree n on 𝕊².
    RandomEigenspace,
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyKind::ZonalKernel => "zonal-kernel",
            FamilyKind::HighestWeight => "highest-weight",
            FamilyKind::RandomEigenspace => "random-eigenspace",
        })
    }
}

impl FromStr for FamilyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zonal" | "zonal-kernel" => Ok(FamilyKind::ZonalKernel),
            "highest-weight" | "highest" => Ok(FamilyKind::HighestWeight),
            "random" | "random-eigenspace" => Ok(FamilyKind::RandomEigenspace),
            _ => Err(Error::InvalidParameter(format!("unknown family {s:?}"))),
        }
    }
}

/// Unit-norm degree-n member of a witness family (band limit n).
pub fn make_family(kind: FamilyKind, n: usize, d: SphereDim, rng: &mut StreamRng) -> Result<SpectralField> {
    if n == 0 {
        return Err(Error::InvalidParameter("family degree must be at least 1".into()));
    }
    match kind {
        FamilyKind::ZonalKernel => SpectralField::zonal_harmonic(n, n, d),
        FamilyKind::HighestWeight | FamilyKind::RandomEigenspace if d.get() != 2 => {
            Err(Error::Unsupported(format!("{kind} family is only available on the 2-sphere")))
        }
        FamilyKind::HighestWeight => SpectralField::harmonic(n, n, n as i64),
        FamilyKind::RandomEigenspace => {
            let mut t = CoefficientTable::zeros_full(n);
            t.degree_mut(n).iter_mut().for_each(|c| *c = rng.complex_normal());
            let norm = t.norm_sq().sqrt();
            SpectralField::new(t.scaled(Complex64::new(1.0 / norm, 0.0)))
        }
    }
}

/// Least-squares fit of `log ratio = slope · log n + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub n_min: f64,
    pub n_max: f64,
    pub samples: usize,
}

pub fn fit_loglog(points: &[(f64, f64)]) -> Result<ExponentFit> {
    if points.len() < 3 {
        return Err(Error::InvalidParameter(format!("need at least 3 points, got {}", points.len())));
    }
    if points.iter().any(|&(n, r)| !(n > 0.0 && r > 0.0 && n.is_finite() && r.is_finite())) {
        return Err(Error::Domain("log-log fit needs positive finite points".into()));
    }
    let k = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("log-log fit needs at least two distinct degrees".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = (ssr / (k - 2.0) / sxx).sqrt();
    let (n_min, n_max) = points.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
    Ok(ExponentFit { slope, intercept, stderr, n_min, n_max, samples: points.len() })
}

/// Degrees from `lo` to `hi` spaced geometrically, `per_octave` per doubling.
pub fn log_spaced_degrees(lo: usize, hi: usize, per_octave: usize) -> Result<Vec<usize>> {
    if lo == 0 || hi < lo || per_octave == 0 {
        return Err(Error::InvalidParameter(format!("bad degree range {lo}:{hi}:{per_octave}")));
    }
    let mut out = Vec::new();
    let mut k = 0u32;
    loop {
        let n = (lo as f64 * 2f64.powf(k as f64 / per_octave as f64)).round() as usize;
        if n >= hi {
            break;
        }
        if out.last() != Some(&n) {
            out.push(n);
        }
        k += 1;
    }
    out.push(hi);
    Ok(out)
}

/// Parameters of a scaling sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub d: SphereDim,
    pub p: f64,
    pub q: f64,
    pub s: f64,
    pub family: FamilyKind,
    pub degrees: Vec<usize>,
    pub oversample: f64,
    pub seed: u64,
}

impl SweepConfig {
    pub fn new(d: SphereDim, p: f64, family: FamilyKind, degrees: Vec<usize>) -> Self {
        SweepConfig { d, p, q: 2.0, s: 0.0, family, degrees, oversample: crate::norms::DEFAULT_OVERSAMPLE, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        check_p(self.p)?;
        if !(self.q >= 2.0 && self.q.is_finite()) {
            return Err(Error::Domain(format!("q must lie in [2, inf), got {}", self.q)));
        }
        if self.degrees.is_empty() || self.degrees.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("degrees must be nonempty and strictly increasing".into()));
        }
        if self.degrees[0] == 0 {
            return Err(Error::InvalidParameter("degrees must be at least 1".into()));
        }
        Ok(())
    }

    fn norm_options(&self) -> NormOptions {
        NormOptions { oversample: self.oversample, ..NormOptions::default() }
    }
}

/// One degree of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub ratio: f64,
    pub p: f64,
    pub q: f64,
    pub s: f64,
    pub d: u32,
    pub family: FamilyKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub fit: ExponentFit,
}

fn fit_rows(rows: &[SweepRow]) -> Result<ExponentFit> {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.ratio)).collect();
    fit_loglog(&pts)
}

/// `n ↦ ‖H_n f_n‖_{L^p}/‖f_n‖_{L²}` over the configured family, with its log-log fit.
pub fn projection_ratio_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let opts = cfg.norm_options();
    let mut rng = StreamRng::new(cfg.seed, 0);
    let mut rows = Vec::with_capacity(cfg.degrees.len());
    for &n in &cfg.degrees {
        let f = make_family(cfg.family, n, cfg.d, &mut rng)?;
        let ratio = field_lp_norm(&f, cfg.p, &opts)? / f.l2_norm();
        rows.push(SweepRow { n, ratio, p: cfg.p, q: cfg.q, s: cfg.s, d: cfg.d.get(), family: cfg.family });
    }
    let fit = fit_rows(&rows)?;
    Ok(SweepResult { rows, fit })
}

fn check_ratio_inputs(f: &SpectralField, s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::InvalidParameter(format!("s must be nonnegative, got {s}")));
    }
    let w = sobolev_norm(f, s);
    if w == 0.0 {
        return Err(Error::ZeroNorm("Strichartz ratio of the zero field".into()));
    }
    Ok(w)
}

/// `‖e^{itΔ}f‖_{L^p_x L^q_t} / ‖f‖_{W^s}` on the given grids.
pub fn strichartz_ratio(f: &SpectralField, p: f64, q: f64, s: f64, grid: &Grid, tg: &TimeGrid) -> Result<f64> {
    let w = check_ratio_inputs(f, s)?;
    let u = synthesize_history(f, tg, grid)?;
    Ok(mixed_norm_with(&u, p, q, &NormOptions::default())? / w)
}

/// [`strichartz_ratio`] with grids chosen by [`field_mixed_norm`].
pub fn strichartz_ratio_auto(f: &SpectralField, p: f64, q: f64, s: f64, opts: &NormOptions) -> Result<f64> {
    let w = check_ratio_inputs(f, s)?;
    Ok(field_mixed_norm(f, p, q, opts)? / w)
}

/// Per-family growth of the q = 2 Strichartz ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessResult {
    pub families: Vec<SweepResult>,
    /// The family fit with the largest slope.
    pub fit: ExponentFit,
    pub family: FamilyKind,
}

/// Growth rate in n of the q = 2 Strichartz ratio along the witness
/// families (zonal everywhere, highest-weight on 𝕊²); the steepest is reported.
pub fn sharpness_sweep(p: f64, s: f64, d: SphereDim, degrees: &[usize], opts: &NormOptions) -> Result<SharpnessResult> {
    let mut kinds = vec![FamilyKind::ZonalKernel];
    if d.get() == 2 {
        kinds.push(FamilyKind::HighestWeight);
    }
    let mut families = Vec::new();
    let mut rng = StreamRng::new(0, 0);
    for kind in kinds {
        let cfg = SweepConfig { s, ..SweepConfig::new(d, p, kind, degrees.to_vec()) };
        cfg.validate()?;
        let mut rows = Vec::new();
        for &n in degrees {
            let f = make_family(kind, n, d, &mut rng)?;
            let ratio = strichartz_ratio_auto(&f, p, 2.0, s, opts)?;
            rows.push(SweepRow { n, ratio, p, q: 2.0, s, d: d.get(), family: kind });
        }
        let fit = fit_rows(&rows)?;
        families.push(SweepResult { rows, fit });
    }
    let best = families
        .iter()
        .max_by(|a, b| a.fit.slope.total_cmp(&b.fit.slope))
        .expect("at least one family");
    Ok(SharpnessResult { fit: best.fit, family: best.rows[0].family, families: families.clone() })
}
