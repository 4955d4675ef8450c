//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use coupling_core::optimizer::{
    bessel_check, fit_power_law, ground_at_energy, log_grid, single_mode_baseline, solve, solve_branches, solve_with,
    stationarity_check, sweep, LevelMap, SolveOptions,
};
use coupling_core::povm::{average_cost, route_discrepancy, PhaseVector, DEFAULT_GRID};
use coupling_core::schwinger::{
    block, coupling_evolution, generator_block, rotate_to_z, BlockKind, Generator, ShiftParameter,
};
use coupling_core::simulate::{estimator_stats, sample};
use rand::Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

const FIT_RANGE: (f64, f64) = (10.0, 1000.0);

fn heisenberg_scaling() -> Verdict {
    let grid = log_grid(1e-3, 10.0, 60);
    let outcome = sweep(&grid, &LevelMap::ground(), 1).expect("sweep runs");
    let curve = outcome.curve(0);
    let n_top = curve.last().map(|p| p.0).unwrap_or(0.0);
    let literal = match (
        fit_power_law(&curve, FIT_RANGE, Some(-2.0)),
        fit_power_law(&curve, FIT_RANGE, None),
    ) {
        (Ok(f), Ok(g)) => Some((f.gamma, g.slope)),
        _ => None,
    };

    // same pipeline with the grid extended until the fit range is covered
    let wide = sweep(&log_grid(1e-10, 10.0, 60), &LevelMap::ground(), 1).expect("sweep runs");
    let wide_curve = wide.curve(0);
    let fixed = fit_power_law(&wide_curve, FIT_RANGE, Some(-2.0)).expect("extended grid covers the range");
    let free = fit_power_law(&wide_curve, FIT_RANGE, None).expect("extended grid covers the range");
    let asymptote = wide
        .results
        .last()
        .map(|r| r.average_cost * r.energy * r.energy)
        .unwrap_or(f64::NAN);

    let pass = match literal {
        Some((gamma, slope)) => (gamma - 0.10).abs() <= 0.05 && (slope + 2.0).abs() <= 0.1,
        None => false,
    };
    let literal_text = match literal {
        Some((gamma, slope)) => format!("gamma={gamma:.4} slope={slope:.4}"),
        None => format!("no points in N=[10,1000], largest N={n_top:.3}"),
    };
    verdict(
        pass,
        format!(
            "mu'=[1e-3,10]: {literal_text}; mu'=[1e-10,10]: gamma={:.4} (fixed -2, {} pts), free slope={:.4}, gamma_free={:.4}, C*N^2 at N={:.0} is {asymptote:.4}; target gamma 0.10+-0.05",
            fixed.gamma,
            fixed.points_used,
            free.slope,
            free.gamma,
            wide.results.last().map(|r| r.energy).unwrap_or(f64::NAN),
        ),
    )
}

fn local_minima_branches() -> Verdict {
    let grid = log_grid(1e-3, 10.0, 60);
    let outcome = sweep(&grid, &LevelMap::ground(), 4).expect("sweep runs");
    let mut worst = f64::INFINITY;
    let mut checked = 0;
    for r in outcome.results.iter().filter(|r| (1..=3).contains(&r.branch_index)) {
        let optimum = ground_at_energy(r.energy, &LevelMap::ground()).expect("inversion");
        worst = worst.min(r.average_cost - optimum.average_cost);
        checked += 1;
    }
    verdict(
        checked == 3 * grid.len() && worst > 0.0 && outcome.failures.is_empty(),
        format!("{checked} excited points, smallest margin above the optimum {worst:.3e}"),
    )
}

fn bessel_closed_form() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for mu in [0.05, 0.1, 0.5] {
        let c = bessel_check(mu).expect("bessel check runs");
        pass &= c.max_deviation <= 1e-6 && c.recursion_residual <= 1e-9;
        parts.push(format!(
            "mu'={mu}: lambda'={:.10} deviation={:.2e} recursion={:.2e}",
            c.lambda_prime, c.max_deviation, c.recursion_residual
        ));
    }
    verdict(pass, parts.join("; "))
}

fn exact_small_fixture() -> Verdict {
    let r = solve_with(1.0, &LevelMap::ground(), 0, &SolveOptions::pinned(1)).expect("solve");
    let st = stationarity_check(&r);
    let s6 = 6f64.sqrt();
    let want = [1.0 / s6, 2.0 / s6, 1.0 / s6];

    let dense = common::dense_tridiagonal(&[3.0, 2.0, 3.0], &[-1.0, -1.0]);
    let (values, vectors) = common::jacobi_eigen(dense);
    let oracle_sign = vectors[0][1].signum();

    let mut err = 0.0f64;
    err = err.max((r.lambda - 1.0).abs()).max((r.lambda - values[0]).abs());
    for (i, w) in want.iter().enumerate() {
        err = err.max((r.vector.amps()[i] - w).abs());
        err = err.max((r.vector.amps()[i] - oracle_sign * vectors[0][i]).abs());
    }
    err = err.max((r.energy - 1.0 / 3.0).abs());
    err = err.max((r.average_cost - 2.0 / 3.0).abs());
    err = err.max((st.nu[&0] + 2.0 / 3.0).abs());
    err = err.max((st.nu[&1] + 1.0 / 3.0).abs());
    err = err.max((st.nu[&-1] + 1.0 / 3.0).abs());
    verdict(err <= 1e-12, format!("largest error {err:.2e}"))
}

fn reduced_full_equivalence() -> Verdict {
    let mut rng = common::rng(5);
    let mut worst_density = 0.0f64;
    for _ in 0..20 {
        let n_max = rng.random_range(0..=3);
        let d_max = rng.random_range(0..=4);
        let state = common::random_state(&mut rng, n_max, d_max);
        let theta = rng.random_range(-4.0..4.0);
        worst_density = worst_density.max(route_discrepancy(&state, theta, DEFAULT_GRID).expect("routes"));
    }
    let mut worst_frame = 0.0f64;
    for total in 0..=8 {
        let u = block(BlockKind::FrameRotation, 0.0, total).expect("block");
        let jx = generator_block(Generator::Jx, total);
        let jz = generator_block(Generator::Jz, total);
        let conj = u.matmul(&jx).matmul(&u.adjoint());
        worst_frame = worst_frame.max(conj.max_abs_diff(&jz));
    }
    verdict(
        worst_density <= 1e-10 && worst_frame <= 1e-10,
        format!("density gap {worst_density:.2e} over 20 states, frame gap {worst_frame:.2e} for N<=8"),
    )
}

fn monte_carlo_consistency() -> Verdict {
    let r = solve(0.5, &LevelMap::ground(), 0).expect("solve");
    let theta = 0.3;
    let count = 100_000;
    let run = sample(&r.vector, theta, count, 2024).expect("sample");
    let stats = estimator_stats(&run).expect("stats");
    let analytic = average_cost(&r.vector).average_cost;
    let cost_ok = (stats.mean_cost - analytic).abs() <= 3.0 * stats.cost_stderr;

    let ks = common::ks_statistic(&run.samples, |phi| common::analytic_cdf(&r.vector, theta, phi));
    let ks_crit = 1.628 / (count as f64).sqrt();

    let mean = stats.circular_mean.expect("resultant is nonzero");
    let sigma = stats.circular_stderr.expect("resultant is nonzero");
    let offset = coupling_core::simulate::circular_difference(mean, theta);
    let mean_ok = offset.abs() <= 3.0 * sigma;
    verdict(
        cost_ok && ks < ks_crit && mean_ok,
        format!(
            "mean cost {:.5} vs {analytic:.5} (stderr {:.1e}), KS {ks:.2e} < {ks_crit:.2e}, mean offset {offset:.2e} (sigma {sigma:.1e})",
            stats.mean_cost, stats.cost_stderr
        ),
    )
}

fn single_mode_baseline_check() -> Verdict {
    let report = single_mode_baseline(&log_grid(1e-10, 10.0, 60), FIT_RANGE, -2.0).expect("baseline");
    let two = sweep(&log_grid(1e-10, 10.0, 60), &LevelMap::ground(), 1).expect("sweep");
    let two_fit = fit_power_law(&two.curve(0), FIT_RANGE, Some(-2.0)).expect("fit");
    let pass = (report.free.slope + 2.0).abs() <= 0.1 && (report.fixed.gamma - 1.36).abs() <= 0.2;
    verdict(
        pass,
        format!(
            "single mode gamma={:.4} (fixed -2, {} pts), free slope={:.4}; two mode gamma={:.4}; ratio {:.2}; target gamma 1.36+-0.2",
            report.fixed.gamma,
            report.fixed.points_used,
            report.free.slope,
            two_fit.gamma,
            report.fixed.gamma / two_fit.gamma
        ),
    )
}

fn invariant_suite() -> Verdict {
    let mut rng = common::rng(8);
    let cases = 120;
    let (mut norm, mut unitary, mut book, mut doubling, mut mirror) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..cases {
        let (n_max, d_max) = (rng.random_range(0..=3), rng.random_range(0..=4));
        let state = common::random_state(&mut rng, n_max, d_max).block_closure();
        let psi = rng.random_range(-10.0..10.0);
        let evolved = coupling_evolution(&state, ShiftParameter::new(psi).unwrap()).unwrap();
        let rotated = rotate_to_z(&evolved, false).unwrap();
        norm = norm
            .max((evolved.norm_sqr() - 1.0).abs())
            .max((rotated.norm_sqr() - 1.0).abs());

        let total = rng.random_range(0..=12);
        for kind in [
            BlockKind::Evolution,
            BlockKind::FrameRotation,
            BlockKind::FrameRotationInverse,
        ] {
            unitary = unitary.max(block(kind, psi, total).unwrap().unitarity_residual());
        }

        let mu = 10f64.powf(rng.random_range(-3.0..1.0));
        let levels = LevelMap::ground();
        let branches = solve_branches(mu, &levels, 4, &SolveOptions::default()).unwrap();
        for r in &branches {
            book = book.max(r.bookkeeping_gap().abs());
        }
        let ground = &branches[0];
        let wider = solve_with(mu, &levels, 0, &SolveOptions::pinned(2 * ground.d_max)).unwrap();
        let padded_gap = {
            let a = &ground.vector;
            let b = &wider.vector;
            let lo = b.d_min();
            (lo..=b.d_max())
                .map(|d| (a.get(d) - b.get(d)).abs())
                .fold(0.0, f64::max)
        };
        doubling = doubling
            .max((ground.lambda - wider.lambda).abs())
            .max((ground.energy - wider.energy).abs())
            .max((ground.average_cost - wider.average_cost).abs())
            .max(padded_gap);
        mirror = mirror.max(mirror_gap(&ground.vector));
    }
    let pass = [norm, unitary, book, doubling, mirror].iter().all(|&x| x <= 1e-10);
    verdict(
        pass,
        format!(
            "{cases} cases: norm {norm:.1e}, unitarity {unitary:.1e}, bookkeeping {book:.1e}, doubling {doubling:.1e}, mirror {mirror:.1e}"
        ),
    )
}

fn mirror_gap(v: &PhaseVector) -> f64 {
    let top = v.d_max().max(-v.d_min());
    (0..=top).map(|d| (v.get(d) - v.get(-d)).abs()).fold(0.0, f64::max)
}

type Criterion = (u32, &'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 8] = [
        (1, "heisenberg scaling", heisenberg_scaling),
        (2, "local-minima branches", local_minima_branches),
        (3, "bessel closed form", bessel_closed_form),
        (4, "exact small fixture", exact_small_fixture),
        (5, "reduced/full equivalence", reduced_full_equivalence),
        (6, "monte carlo consistency", monte_carlo_consistency),
        (7, "single-mode baseline", single_mode_baseline_check),
        (8, "invariant suite", invariant_suite),
    ];
    let mut failed = 0;
    for (n, name, check) in criteria {
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| verdict(false, "panicked"));
        if !v.pass {
            failed += 1;
        }
        println!(
            "criterion {n} {name}: {} ({}) [{:.1}s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
