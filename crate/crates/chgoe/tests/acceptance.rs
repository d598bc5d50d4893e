//! Acceptance suite: one PASS/FAIL line per criterion, with the measured
//! discrepancy next to its pinned tolerance. Runs without the libtest harness
//! so the lines are always printed.

use std::time::Instant;

use chgoe::distributions::{
    closed_form_k0, closed_form_k1, gap_finite, gap_k0_via_average, oracle, smallest_finite, smallest_normalization,
    FiniteSpec,
};
use chgoe::microscopic::{gap_micro, micro_density, smallest_micro};
use chgoe::montecarlo::{
    ks_distance_batch, microscopic_rescale, normalized_exp_decay, sample_batch, SamplerConfig, TabulatedCdf,
};
use chgoe::pfaffian::AntisymmetricMatrix;
use chgoe::quad::{integrate_to_inf, Tol};
use chgoe::sop::{skew_product_oracle, sop, sop_norm, WeightParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(f64, String), String>;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn fs(p: usize, k: usize, t: f64) -> FiniteSpec {
    FiniteSpec::new(p, k, t).expect("valid spec")
}

macro_rules! tri {
    ($e:expr) => {
        $e.map_err(|e| e.to_string())?
    };
}

/// 1. Pfaffian route against the classical k = 0, 1 closed forms.
fn closed_forms() -> Outcome {
    let mut worst: f64 = 0.0;
    for p in 2..=12 {
        for t in [0.1, 0.5, 1.0, 2.0, 5.0] {
            worst = worst.max(rel(tri!(smallest_finite(fs(p, 0, t))), tri!(closed_form_k0(p, t))));
            worst = worst.max(rel(tri!(smallest_finite(fs(p, 1, t))), tri!(closed_form_k1(p, t))));
        }
    }
    Ok((worst, "max rel err over p=2..12, t in {0.1,0.5,1,2,5}, k in {0,1}".into()))
}

/// 2. Direct quadrature of the defining integrals.
fn brute_force() -> Outcome {
    let mut worst: f64 = 0.0;
    for p in 1..=3 {
        for nu in [0usize, 2] {
            for t in [0.5, 2.0] {
                worst = worst.max(rel(tri!(gap_finite(fs(p, nu / 2, t))), tri!(oracle::gap_brute(p, nu, t))));
                worst = worst.max(rel(tri!(smallest_finite(fs(p, nu / 2, t))), tri!(oracle::smallest_brute(p, nu, t))));
            }
        }
    }
    Ok((worst, "max rel err, E and P, p<=3, nu in {0,2}, t in {0.5,2}".into()))
}

/// `t` with `E_{p,2k}(t) = q`, by bisection.
fn quantile(p: usize, k: usize, q: f64) -> Result<f64, String> {
    let (mut lo, mut hi) = (0.0, 1.0);
    while tri!(gap_finite(fs(p, k, hi))) > q {
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if tri!(gap_finite(fs(p, k, mid))) > q { lo = mid } else { hi = mid }
    }
    Ok(0.5 * (lo + hi))
}

/// 3. Normalisation of P and P = -dE/dt.
fn normalization_derivative() -> Outcome {
    let mut worst_norm: f64 = 0.0;
    let mut worst_der: f64 = 0.0;
    for p in 4..=12 {
        for k in 0..=4 {
            worst_norm = worst_norm.max((tri!(smallest_normalization(p, k, 1e-10)) - 1.0).abs());
            // at the quartiles of the law, where P is not dwarfed by rounding in E ~ 1
            for q in [0.75, 0.5, 0.25] {
                let t = quantile(p, k, q)?;
                // fourth-order central stencil
                let h = 1e-2 * t;
                let e = |x: f64| gap_finite(fs(p, k, x)).map_err(|e| e.to_string());
                let d = -(8.0 * (e(t + h)? - e(t - h)?) - (e(t + 2.0 * h)? - e(t - 2.0 * h)?)) / (12.0 * h);
                worst_der = worst_der.max(rel(d, tri!(smallest_finite(fs(p, k, t)))));
            }
        }
    }
    Ok((
        worst_norm.max(worst_der),
        format!("max |int P - 1| = {worst_norm:.2e}, max rel |P + dE/dt| = {worst_der:.2e} at the quartiles, p=4..12, k=0..4"),
    ))
}

/// 4. Two routes to E_{p,0}.
fn two_routes() -> Outcome {
    let mut worst: f64 = 0.0;
    for p in 3..=8 {
        for t in [0.1, 0.5, 1.0, 2.0, 5.0] {
            worst = worst.max(rel(tri!(gap_finite(fs(p, 0, t))), tri!(gap_k0_via_average(p, t))));
        }
    }
    Ok((worst, "max rel err, p=3..8".into()))
}

/// 5. Skew orthogonality by two-dimensional quadrature.
fn skew_orthogonality() -> Outcome {
    let mut off: f64 = 0.0;
    let mut diag: f64 = 0.0;
    for gamma in [0u32, 1] {
        for t in [0.1, 1.0, 5.0] {
            let w = tri!(WeightParams::new(gamma, t));
            let r: Vec<_> = tri!((0..=2).map(|i| sop(i, &w)).collect::<chgoe::Result<Vec<_>>>());
            let r0 = tri!(sop_norm(0, &w)).to_f64();
            diag = diag.max(rel(tri!(skew_product_oracle(&r[0], &r[1], &w)), r0));
            for (i, j) in [(0, 2), (1, 2)] {
                off = off.max((tri!(skew_product_oracle(&r[i], &r[j], &w)) / r0).abs());
            }
        }
    }
    if diag > 1e-5 {
        return Err(format!("diagonal rel err {diag:.2e} > 1e-5"));
    }
    Ok((off, format!("max |<R_i,R_j>|/r_0 off-diagonal; diagonal rel err {diag:.2e} (tol 1e-5)")))
}

/// 6. pf(A)^2 = det(A).
fn pfaffian_det() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let dim = 2 * (1 + i % 6);
        let m = tri!(AntisymmetricMatrix::from_fn(dim, |_, _| rng.random_range(-1.0..1.0)));
        let pf = m.pfaffian();
        worst = worst.max(rel(pf * pf, nalgebra::DMatrix::from_row_slice(dim, dim, &m.to_dense()).determinant()));
    }
    Ok((worst, "max rel err over 200 matrices, dim 2..12".into()))
}

/// 7. Hard-edge k = 0 closed forms and normalisation of the limiting density.
fn micro_closed_forms() -> Outcome {
    let mut exact: f64 = 0.0;
    for u in [0.01f64, 0.5, 1.0, 7.0, 40.0] {
        let e = (-u / 8.0 - 0.5 * u.sqrt()).exp();
        exact = exact.max(rel(tri!(gap_micro(0, u)), e));
        exact = exact.max(rel(tri!(smallest_micro(0, u)), (u.sqrt() + 2.0) / (8.0 * u.sqrt()) * e));
    }
    if exact > 1e-14 {
        return Err(format!("k=0 closed forms off by {exact:.2e}"));
    }
    let mut worst: f64 = 0.0;
    for k in 0..=3 {
        let mut err = None;
        let (v, _) = tri!(integrate_to_inf(
            |s| 2.0 * s * smallest_micro(k, s * s).unwrap_or_else(|e| {
                err.get_or_insert(e);
                0.0
            }),
            0.0,
            Tol { abs: 0.0, rel: 1e-10, max_intervals: 2000 },
        ));
        if let Some(e) = err {
            return Err(e.to_string());
        }
        worst = worst.max((v - 1.0).abs());
    }
    Ok((worst, format!("max |int P_2k du - 1|, k<=3; k=0 closed forms rel err {exact:.1e}")))
}

fn sup_deviation(p: usize, k: usize, us: &[f64]) -> Result<f64, String> {
    let q = 4.0 * p as f64;
    let mut d: f64 = 0.0;
    for &u in us {
        let fin = tri!(smallest_finite(fs(p, k, u / q))) / q;
        d = d.max((fin - tri!(smallest_micro(k, u))).abs());
    }
    Ok(d)
}

/// 8. Convergence of the rescaled density to the hard-edge limit, nu = 4.
fn convergence() -> Outcome {
    let us: Vec<f64> = (1..=250).map(|i| 0.1 * i as f64).collect();
    let devs = [sup_deviation(11, 2, &us)?, sup_deviation(51, 2, &us)?, sup_deviation(131, 2, &us)?];
    let summary = format!("sup deviations p=11,51,131: {:.3e}, {:.3e}, {:.3e}", devs[0], devs[1], devs[2]);
    if !(devs[1] < devs[0] && devs[2] < devs[1]) {
        return Err(format!("not strictly decreasing: {summary}"));
    }
    Ok((devs[2], summary))
}

/// 9. Small-u behaviour of the hard-edge laws.
fn small_u() -> Outcome {
    let mut slope_err: f64 = 0.0;
    for k in 0..=3usize {
        let pts: Vec<(f64, f64)> = (0..=8)
            .map(|i| {
                let u = 1e-6 * 10f64.powf(i as f64 / 4.0);
                smallest_micro(k, u).map(|v| (u.ln(), v.ln()))
            })
            .collect::<chgoe::Result<_>>()
            .map_err(|e| e.to_string())?;
        let n = pts.len() as f64;
        let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        slope_err = slope_err.max((slope - (k as f64 - 0.5)).abs());
    }
    let mut gap_err: f64 = 0.0;
    for k in 0..=4 {
        gap_err = gap_err.max((tri!(gap_micro(k, 1e-8)) - 1.0).abs());
    }
    let mut rho_err: f64 = 0.0;
    for nu in [2usize, 4] {
        let r = tri!(micro_density(nu as u32, 0.01));
        rho_err = rho_err.max(rel(tri!(smallest_micro(nu / 2, 0.01)), r));
    }
    let summary = format!("slope err {slope_err:.2e} (tol 1e-2), |E(1e-8)-1| {gap_err:.2e} (tol 1e-3), rho vs P {rho_err:.2e} (tol 1e-2)");
    if slope_err > 1e-2 || gap_err > 1e-3 || rho_err > 1e-2 {
        return Err(summary);
    }
    Ok((slope_err.max(rho_err), summary))
}

/// 10. Monte Carlo against the finite-p curves, p = 10.
fn monte_carlo_finite() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut parts = vec![];
    for nu in [0usize, 2, 4, 6, 8] {
        let k = nu / 2;
        for (n, seed) in [(10_000usize, 1000 + nu as u64), (20_000, 2000 + nu as u64)] {
            let b = tri!(sample_batch(&tri!(SamplerConfig::new(10, 10 + nu, n, seed))));
            let hi = b.smallest_eigenvalues.iter().cloned().fold(0.0, f64::max) * 1.01;
            let cdf = tri!(TabulatedCdf::new(|t| Ok(1.0 - gap_finite(FiniteSpec::new(10, k, t)?)?), hi, 4001));
            let d = ks_distance_batch(&b, |t| cdf.eval(t));
            parts.push(format!("{d:.4}"));
            worst = worst.max(d);
        }
    }
    Ok((worst, format!("KS per (nu, N): [{}]", parts.join(", "))))
}

/// 11. Correlated stand-in, p = 200, against the hard-edge law.
fn monte_carlo_correlated() -> Outcome {
    let (c, h) = tri!(normalized_exp_decay(200, 0.5));
    let mut worst: f64 = 0.0;
    let mut parts = vec![];
    for nu in [0usize, 2, 4] {
        let cfg = tri!(tri!(SamplerConfig::new(200, 200 + nu, 10_000, 4000 + nu as u64)).with_correlation(c.clone()));
        let b = microscopic_rescale(&tri!(sample_batch(&cfg)));
        let hi = b.smallest_eigenvalues.iter().cloned().fold(0.0, f64::max) * 1.01;
        let cdf = tri!(TabulatedCdf::new(|u| Ok(1.0 - gap_micro(nu / 2, u)?), hi, 4001));
        let d = ks_distance_batch(&b, |u| cdf.eval(u));
        parts.push(format!("{d:.4}"));
        worst = worst.max(d);
    }
    Ok((worst, format!("KS for nu=0,2,4: [{}]; C = {h:.4} * 0.5^|i-j|", parts.join(", "))))
}

/// 12. Both parities of p approach the same limit.
fn parity() -> Outcome {
    let mut worst: f64 = 0.0;
    for p in [512usize, 513] {
        for u in [1.0, 5.0, 15.0] {
            let e = tri!(gap_finite(fs(p, 2, u / (4.0 * p as f64))));
            worst = worst.max((e - tri!(gap_micro(2, u))).abs());
        }
    }
    Ok((worst, "max |E_{p,4}(u/4p) - E_4(u)|, p in {512, 513}, u in {1,5,15}".into()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, f64); 12] = [
        ("closed forms k=0,1", closed_forms, 1e-10),
        ("brute-force quadrature", brute_force, 1e-6),
        ("normalisation and -dE/dt", normalization_derivative, 1e-6),
        ("two routes at k=0", two_routes, 1e-10),
        ("skew orthogonality", skew_orthogonality, 1e-6),
        ("pf^2 = det", pfaffian_det, 1e-10),
        ("hard-edge closed forms and normalisation", micro_closed_forms, 1e-6),
        ("convergence to the hard edge (nu=4)", convergence, 1e-2),
        ("small-u laws", small_u, 1e-2),
        ("Monte Carlo, p=10", monte_carlo_finite, 2e-2),
        ("Monte Carlo, correlated p=200", monte_carlo_correlated, 3e-2),
        ("parity independence of the limit", parity, 3e-2),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, f, tol)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != i + 1) {
            continue;
        }
        let start = Instant::now();
        let line = match f() {
            Ok((v, detail)) if v <= *tol => format!("PASS  {:>2}. {name}: {v:.3e} <= {tol:.0e}; {detail}", i + 1),
            Ok((v, detail)) => {
                failed += 1;
                format!("FAIL  {:>2}. {name}: {v:.3e} > {tol:.0e}; {detail}", i + 1)
            }
            Err(msg) => {
                failed += 1;
                format!("FAIL  {:>2}. {name}: {msg}", i + 1)
            }
        };
        println!("{line} [{:.1}s]", start.elapsed().as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
