//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints a single PASS/FAIL line; the process fails if any does.

use num_complex::Complex64;
use sphere_strichartz::experiments::{
    kappa_branches, kappa_p, kappa_pq, log_spaced_degrees, projection_ratio_sweep, sharpness_sweep,
    strichartz_ratio_auto, FamilyKind, SweepConfig,
};
use sphere_strichartz::grid::{build_sphere_grid, build_zonal_grid, integrate_real, Grid};
use sphere_strichartz::harmonics::{eigenspace_dim, surface_area, SphereDim};
use sphere_strichartz::norms::{
    l2t_profile_exact, l4_norm_via_square, lp_norm_real, mixed_norm, NormOptions,
};
use sphere_strichartz::potential::{l2_drift, Potential, PotentialProblem};
use sphere_strichartz::rng::{random_full_table, random_zonal_table, StreamRng};
use sphere_strichartz::spectral::{
    propagate, propagate_to_node, SpaceTimeField, SpectralField, Time, TimeGrid,
};
use sphere_strichartz::transform::{analyze, synthesize, CoefficientTable};
use std::f64::consts::PI;
use std::time::Instant;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sphere(band: usize) -> Grid {
    Grid::Sphere(build_sphere_grid(band).unwrap())
}

fn random_field(band: usize, seed: u64, stream: u64) -> SpectralField {
    let t = random_full_table(band, &mut StreamRng::new(seed, stream));
    let n = t.norm_sq().sqrt();
    SpectralField::new(t.scaled(Complex64::new(1.0 / n, 0.0))).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn l2t_identity() -> Outcome {
    let band = 16;
    let grid = sphere(2 * band);
    let tg = TimeGrid::for_band(band, SphereDim::S2);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let f = random_field(band, 11, i);
        let profile = l2t_profile_exact(&f, &grid).map_err(|e| e.to_string())?;
        let free = SpaceTimeField::free(f.clone(), tg, grid.clone()).unwrap();
        // only the first few data also go through explicitly sampled slices
        let sampled = (i < 3).then(|| {
            let hist = (0..tg.len()).map(|j| propagate_to_node(&f, &tg, j)).collect();
            SpaceTimeField::from_history(hist, tg, grid.clone()).unwrap()
        });
        for p in [2.0, 4.0, f64::INFINITY] {
            let want = lp_norm_real(&profile, &grid, p).unwrap();
            worst = worst.max(rel(mixed_norm(&free, p, 2.0).unwrap(), want));
            if let Some(u) = &sampled {
                worst = worst.max(rel(mixed_norm(u, p, 2.0).unwrap(), want));
            }
        }
    }
    check(worst <= 1e-10, format!("max relative error {worst:.2e} (M = {})", tg.len()))
}

fn propagator_properties() -> Outcome {
    let f = random_field(32, 12, 0);
    let norm = f.l2_norm();
    let mut rng = StreamRng::new(12, 1);
    let (mut unit, mut period) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let t = Time::from_radians(rng.uniform(-50.0, 50.0));
        let u = propagate(&f, t);
        unit = unit.max(rel(u.l2_norm(), norm));
        let shifted = propagate(&f, t + Time::PERIOD);
        period = period.max(shifted.difference(&u).unwrap().l2_norm() / norm);
    }
    check(unit <= 1e-13 && period <= 1e-13, format!("unitarity {unit:.2e}, periodicity {period:.2e}"))
}

fn zonal_sweeps() -> Outcome {
    let degrees = log_spaced_degrees(16, 256, 4).unwrap();
    let cfg = SweepConfig::new(SphereDim::S2, f64::INFINITY, FamilyKind::ZonalKernel, degrees.clone());
    let sup = projection_ratio_sweep(&cfg).map_err(|e| e.to_string())?;
    let closed = sup
        .rows
        .iter()
        .map(|r| rel(r.ratio, ((2 * r.n + 1) as f64 / (4.0 * PI)).sqrt()))
        .fold(0.0f64, f64::max);
    let cfg = SweepConfig::new(SphereDim::S2, 8.0, FamilyKind::ZonalKernel, degrees);
    let p8 = projection_ratio_sweep(&cfg).map_err(|e| e.to_string())?;
    let (a, b) = (sup.fit.slope, p8.fit.slope);
    check(
        (a - 0.5).abs() <= 0.02 && (b - 0.25).abs() <= 0.05 && closed <= 1e-10,
        format!("p=inf slope {a:.4}, p=8 slope {b:.4}, closed-form deviation {closed:.1e}"),
    )
}

/// `∫_0^π sin^k θ dθ` for odd k.
fn sine_power_integral(k: usize) -> f64 {
    (3..=k).step_by(2).fold(2.0, |acc, j| acc * (j - 1) as f64 / j as f64)
}

fn highest_weight_sweep() -> Outcome {
    let degrees = log_spaced_degrees(16, 256, 4).unwrap();
    let cfg = SweepConfig::new(SphereDim::S2, 4.0, FamilyKind::HighestWeight, degrees);
    let res = projection_ratio_sweep(&cfg).map_err(|e| e.to_string())?;
    // |Y_nn| = c sin^n θ with c² · 2π ∫ sin^{2n+1} = 1
    let closed = res
        .rows
        .iter()
        .map(|r| {
            let c2 = 1.0 / (2.0 * PI * sine_power_integral(2 * r.n + 1));
            let l4 = (c2 * c2 * 2.0 * PI * sine_power_integral(4 * r.n + 1)).powf(0.25);
            rel(r.ratio, l4)
        })
        .fold(0.0f64, f64::max);
    let a = res.fit.slope;
    check(
        (a - 0.125).abs() <= 0.02 && closed <= 1e-10,
        format!("p=4 slope {a:.4}, closed-form deviation {closed:.1e}"),
    )
}

fn general_dimension_sweep() -> Outcome {
    let d = SphereDim::new(3).unwrap();
    let cfg = SweepConfig::new(d, f64::INFINITY, FamilyKind::ZonalKernel, log_spaced_degrees(16, 128, 4).unwrap());
    let res = projection_ratio_sweep(&cfg).map_err(|e| e.to_string())?;
    let closed = res
        .rows
        .iter()
        .map(|r| rel(r.ratio, (eigenspace_dim(r.n, d) as f64 / surface_area(d)).sqrt()))
        .fold(0.0f64, f64::max);
    let a = res.fit.slope;
    check(
        (a - 1.0).abs() <= 0.05 && closed <= 1e-10,
        format!("d=3 slope {a:.4}, closed-form deviation {closed:.1e}"),
    )
}

fn kappa_continuity() -> Outcome {
    let mut worst = 0.0f64;
    for d in 2..=8u32 {
        let d = SphereDim::new(d).unwrap();
        let (lo, hi) = kappa_branches(d.critical_exponent(), d).unwrap();
        worst = worst.max((lo - hi).abs());
    }
    let k6 = kappa_p(6.0, SphereDim::S2).unwrap();
    let k62 = kappa_pq(6.0, 2.0, SphereDim::S2).unwrap();
    check(
        worst <= 4.0 * f64::EPSILON && (k6 - 1.0 / 6.0).abs() <= f64::EPSILON && k62 == k6,
        format!("max branch gap {worst:.1e}, kappa(6) = {k6}"),
    )
}

fn sharpness() -> Outcome {
    let degrees = log_spaced_degrees(16, 256, 4).unwrap();
    let opts = NormOptions::default();
    let kappa = kappa_pq(f64::INFINITY, 2.0, SphereDim::S2).unwrap();
    let below = sharpness_sweep(f64::INFINITY, kappa - 0.1, SphereDim::S2, &degrees, &opts).map_err(|e| e.to_string())?;
    let at = sharpness_sweep(f64::INFINITY, kappa, SphereDim::S2, &degrees, &opts).map_err(|e| e.to_string())?;
    let (a, b) = (below.fit.slope, at.fit.slope);
    check(
        (a - 0.1).abs() <= 0.03 && b.abs() <= 0.03,
        format!("slope {a:.4} at s = kappa - 0.1, {b:.4} at s = kappa"),
    )
}

fn strichartz_boundedness() -> Outcome {
    let opts = NormOptions::default();
    let mut lines = Vec::new();
    let mut ok = true;
    for (p, q) in [(4.0, 4.0), (f64::INFINITY, 2.0), (6.0, 2.0)] {
        let s = kappa_pq(p, q, SphereDim::S2).unwrap();
        let ratio = |band: usize| -> Result<f64, String> {
            let mut best = 0.0f64;
            for i in 0..2 {
                let f = random_field(band, 18, i);
                best = best.max(strichartz_ratio_auto(&f, p, q, s, &opts).map_err(|e| e.to_string())?);
            }
            Ok(best)
        };
        let (r16, r64) = (ratio(16)?, ratio(64)?);
        ok &= r64 <= 1.2 * r16;
        lines.push(format!("({p},{q}): {r16:.3} -> {r64:.3}"));
    }
    check(ok, lines.join(", "))
}

fn l4_identity() -> Outcome {
    let grid = sphere(32);
    let mut worst = 0.0f64;
    for i in 0..5 {
        let f = random_field(16, 19, i);
        let tg = TimeGrid::exact_for(&f, 4.0).unwrap();
        let u = SpaceTimeField::free(f.clone(), tg, grid.clone()).unwrap();
        let direct = mixed_norm(&u, 4.0, 4.0).map_err(|e| e.to_string())?;
        let square = l4_norm_via_square(&f, &grid).map_err(|e| e.to_string())?;
        worst = worst.max(rel(direct, square));
    }
    check(worst <= 1e-10, format!("max relative disagreement {worst:.2e}"))
}

fn cos_t(eps: f64) -> Potential {
    let mut b = CoefficientTable::zeros_full(1);
    b.set(1, 0, Complex64::new(eps, 0.0)).unwrap();
    let half = Complex64::new(0.5, 0.0);
    Potential::separable(vec![(1, half), (-1, half)], b).unwrap()
}

fn picard_solver() -> Outcome {
    let f = random_field(4, 20, 0);
    let mut notes = Vec::new();
    let mut ok = true;

    let pr = PotentialProblem::new(f.clone(), Potential::zero(SphereDim::S2), TimeGrid::new(64).unwrap(), 4.0, 0.25)
        .map_err(|e| e.to_string())?;
    let (u, _) = pr.picard_solve(1e-8, 30).map_err(|e| e.to_string())?;
    let free_err = (0..u.len())
        .map(|j| u.coeffs_at(j).difference(&propagate(&f, pr.times.time(j))).unwrap().l2_norm())
        .fold(0.0f64, f64::max);
    ok &= free_err <= 1e-12;
    notes.push(format!("V=0 error {free_err:.1e}"));

    let pr = PotentialProblem::new(f.clone(), cos_t(0.02), TimeGrid::new(64).unwrap(), 4.0, 0.25)
        .map_err(|e| e.to_string())?;
    let gate = pr.smallness_gate(4, 20).map_err(|e| e.to_string())?;
    let (_, rep) = pr.picard_solve(1e-8, 30).map_err(|e| e.to_string())?;
    ok &= gate.satisfied && rep.contraction_ratio <= 0.5 && rep.iterations <= 30 && rep.residual <= 1e-6;
    notes.push(format!(
        "gate {:.3} ({}), contraction {:.1e}, {} iterations, residual {:.1e}",
        gate.bound,
        if gate.satisfied { "satisfied" } else { "violated" },
        rep.contraction_ratio,
        rep.iterations,
        rep.residual
    ));

    let mut drifts = Vec::new();
    for m in [32usize, 64, 128] {
        let pr = PotentialProblem::new(f.clone(), cos_t(0.1), TimeGrid::new(m).unwrap(), 4.0, 0.25)
            .map_err(|e| e.to_string())?;
        let (u, _) = pr.picard_solve(1e-13, 60).map_err(|e| e.to_string())?;
        drifts.push(l2_drift(&u));
    }
    let factors: Vec<f64> = drifts.windows(2).map(|w| w[0] / w[1]).collect();
    ok &= factors.iter().all(|r| (r - 4.0).abs() <= 0.5);
    notes.push(format!("drift factors {:?}", factors.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>()));
    check(ok, notes.join("; "))
}

fn transform_self_test() -> Outcome {
    let band = 128;
    let mut notes = Vec::new();
    let mut ok = true;

    let table = random_full_table(band, &mut StreamRng::new(21, 0));
    let g = sphere(band);
    let back = analyze(&synthesize(&table, &g).unwrap(), &g, band).unwrap();
    let rt = diff_norm(&table, &back) / table.norm_sq().sqrt();
    let g2 = sphere(2 * band);
    let values = synthesize(&table, &g2).unwrap();
    let energy = integrate_real(&values.iter().map(|v| v.norm_sqr()).collect::<Vec<_>>(), &g2).unwrap();
    let pars = rel(energy, table.norm_sq());
    ok &= rt <= 1e-12 && pars <= 1e-12;
    notes.push(format!("sphere round trip {rt:.1e}, Parseval {pars:.1e}"));

    let d = SphereDim::new(3).unwrap();
    let table = random_zonal_table(band, d, &mut StreamRng::new(21, 1));
    let g = Grid::Zonal(build_zonal_grid(band, d).unwrap());
    let back = analyze(&synthesize(&table, &g).unwrap(), &g, band).unwrap();
    let rt = diff_norm(&table, &back) / table.norm_sq().sqrt();
    let g2 = Grid::Zonal(build_zonal_grid(2 * band, d).unwrap());
    let values = synthesize(&table, &g2).unwrap();
    let energy = integrate_real(&values.iter().map(|v| v.norm_sqr()).collect::<Vec<_>>(), &g2).unwrap();
    let pars = rel(energy, table.norm_sq());
    ok &= rt <= 1e-12 && pars <= 1e-12;
    notes.push(format!("zonal d=3 round trip {rt:.1e}, Parseval {pars:.1e}"));
    check(ok, notes.join("; "))
}

fn diff_norm(a: &CoefficientTable, b: &CoefficientTable) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("L2-in-time identity", l2t_identity),
        ("propagator unitarity and periodicity", propagator_properties),
        ("zonal kernel exponents", zonal_sweeps),
        ("highest-weight exponent", highest_weight_sweep),
        ("zonal exponent in d=3", general_dimension_sweep),
        ("kappa continuity", kappa_continuity),
        ("sharpness below the threshold", sharpness),
        ("Strichartz ratio boundedness", strichartz_boundedness),
        ("L4 identity via the square", l4_identity),
        ("Picard solver", picard_solver),
        ("transform self-test", transform_self_test),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
