//! Release-gate checks. Each test exercises one shipped guarantee end to
//! end and prints a single pass/fail line (visible under `--nocapture`).

use minpart::diagnostics::{
    ahlfors_ratio, ahlfors_scan, condition_b_scan, full_report, junction_scan,
    DiagnosticsConfig,
};
use minpart::energy::{
    total_energy, verify_holder_bound, BulkTermSpec, EnergySpec,
};
use minpart::grid::{extract_interface, Grid, Partition, ScalarField};
use minpart::landscape::{
    default_max_iter, solve_landscape, WeightSource, WeightSpec, DEFAULT_TOL,
};
use minpart::optimizer::{
    clean, minimize, InitStrategy, OptimizerConfig, TemperatureSchedule,
};
use minpart::oracle::verify_against;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: u32, ok: bool, detail: &str) {
    let status = if ok { "PASS" } else { "FAIL" };
    println!("[criterion {criterion:02}] {status} - {detail}");
    assert!(ok, "[criterion {criterion:02}] {detail}");
}

/// The interface term must equal the per-phase perimeter sum bit for bit,
/// because each face is charged once to each adjacent phase.
#[test]
fn criterion_01_per_phase_perimeters_sum_to_interface_term() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let grid = Grid::rect(16, 16, 0.25).unwrap();
    let mut checked = 0usize;
    for _ in 0..1000 {
        let vals = (0..grid.n_cells()).map(|_| rng.gen_range(0.1..1.0)).collect();
        let a = ScalarField::new(grid.clone(), vals).unwrap();
        let n: u32 = rng.gen_range(2..=5);
        let labels = (0..grid.n_cells()).map(|_| rng.gen_range(1..=n)).collect();
        let p = Partition::new(grid.clone(), n, labels).unwrap();
        let spec =
            EnergySpec::new(BulkTermSpec::volume_quadratic(&grid, n, 0.5).unwrap());
        let breakdown = total_energy(&p, &a, &spec).unwrap();
        let per_phase_sum: f64 = breakdown.per_phase_perimeter.iter().sum();
        assert_eq!(
            per_phase_sum.to_bits(),
            breakdown.interface_term.to_bits(),
            "per-phase sum diverged from the interface term"
        );
        checked += 1;
    }
    report(1, checked == 1000, "per-phase perimeter sum == interface term on 1000 partitions");
}

/// Alternating-series tail bound gives 1e-12 accuracy for the unit-square
/// torsion value at the center.
fn torsion_center_series() -> f64 {
    let mut sum = 0.0;
    let mut m = 1i32;
    while m < 400 {
        let mut n = 1i32;
        while n < 400 {
            let sign = if ((m - 1) / 2 + (n - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let (mf, nf) = (m as f64, n as f64);
            sum += sign / (mf * nf * (mf * mf + nf * nf));
            n += 2;
        }
        m += 2;
    }
    16.0 / std::f64::consts::PI.powi(4) * sum
}

#[test]
fn criterion_02_landscape_convergence_order_and_center_value() {
    // 1D strips solve the genuine one-dimensional problem; the discrete
    // error against x(1-x)/2 must shrink by about 4x per halving.
    let mut errors = Vec::new();
    for nx in [32usize, 64, 128] {
        let h = 1.0 / nx as f64;
        let grid = Grid::rect(nx, 1, h).unwrap();
        let v = ScalarField::constant(grid.clone(), 0.0).unwrap();
        let sol = solve_landscape(&v, DEFAULT_TOL, default_max_iter(&grid)).unwrap();
        let err = (0..grid.n_cells())
            .map(|c| {
                let x = grid.center(c)[0];
                (sol.w.value(c) - 0.5 * x * (1.0 - x)).abs()
            })
            .fold(0.0f64, f64::max);
        errors.push(err);
    }
    let r1 = errors[0] / errors[1];
    let r2 = errors[1] / errors[2];
    let ratios_ok = (3.2..=4.8).contains(&r1) && (3.2..=4.8).contains(&r2);

    let grid = Grid::rect(128, 128, 1.0 / 128.0).unwrap();
    let v = ScalarField::constant(grid.clone(), 0.0).unwrap();
    let sol = solve_landscape(&v, DEFAULT_TOL, default_max_iter(&grid)).unwrap();
    let peak = sol.w.values().iter().cloned().fold(0.0f64, f64::max);
    let center_ok = (peak - torsion_center_series()).abs() <= 0.003;

    report(
        2,
        ratios_ok && center_ok,
        &format!(
            "error ratios {:.3}, {:.3} in [3.2, 4.8]; square peak {:.5} within 0.003 of series",
            r1, r2, peak
        ),
    );
}

#[test]
fn criterion_03_minimize_matches_oracle_on_random_instances() {
    let grid = Grid::rect(4, 4, 1.0).unwrap();
    let mut exact = 0usize;
    let mut worst_gap = 0.0f64;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let vals = (0..16).map(|_| rng.gen_range(0.1..1.0)).collect();
        let a = ScalarField::new(grid.clone(), vals).unwrap();
        let spec =
            EnergySpec::new(BulkTermSpec::volume_quadratic(&grid, 2, 0.1).unwrap());
        // Greedy descent alone stalls on a fair share of these rough
        // instances; a short annealing burst with best-state tracking is
        // the intended remedy and stays deterministic per seed.
        let config = OptimizerConfig {
            seed,
            max_sweeps: 800,
            pour_moves_per_sweep: 16,
            radius_range: (1.0, 4.0),
            temperature: Some(TemperatureSchedule { t0: 2.2, decay: 0.98 }),
            ..OptimizerConfig::for_grid(&grid)
        };
        let out = minimize(&grid, 2, &a, &spec, &config).unwrap();
        let gap = verify_against(&out.partition, &a, &spec, 100_000).unwrap();
        if gap.optimal {
            exact += 1;
        }
        worst_gap = worst_gap.max(gap.relative_gap);
    }
    report(
        3,
        exact >= 45 && worst_gap <= 0.05,
        &format!("exact optimum on {exact}/50 seeds, worst relative gap {worst_gap:.4}"),
    );
}

#[test]
fn criterion_04_straight_bisection_is_exact_at_both_sizes() {
    let mut ok = true;
    let mut details = Vec::new();
    for side in [8usize, 32] {
        let grid = Grid::rect(side, side, 1.0).unwrap();
        let a = ScalarField::constant(grid.clone(), 1.0).unwrap();
        let spec =
            EnergySpec::new(BulkTermSpec::volume_quadratic(&grid, 2, 10.0).unwrap());
        let config = OptimizerConfig {
            init: InitStrategy::Stripes,
            ..OptimizerConfig::for_grid(&grid)
        };
        let out = minimize(&grid, 2, &a, &spec, &config).unwrap();
        let faces = extract_interface(&out.partition);
        let expected_x = (side / 2) as f64;
        let straight = faces.len() == side
            && faces.iter().all(|f| f.midpoint[0] == expected_x);
        let j = total_energy(&out.partition, &a, &spec).unwrap().total;
        let exact = j == 2.0 * side as f64;
        let monotone = out.trace.j_non_increasing();
        ok &= straight && exact && monotone;
        details.push(format!("{side}x{side}: J = {j} (want {})", 2 * side));
    }
    report(4, ok, &format!("single straight interface, {}", details.join("; ")));
}

#[test]
fn criterion_05_bulk_term_respects_declared_holder_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let grid = Grid::rect(16, 16, 0.25).unwrap();
    let bulk = BulkTermSpec::volume_quadratic(&grid, 3, 0.7).unwrap();
    let mut pairs = Vec::with_capacity(10_000);
    for _ in 0..10_000 {
        let labels_p = (0..grid.n_cells()).map(|_| rng.gen_range(1..=3)).collect();
        let labels_q = (0..grid.n_cells()).map(|_| rng.gen_range(1..=3)).collect();
        pairs.push((
            Partition::new(grid.clone(), 3, labels_p).unwrap(),
            Partition::new(grid.clone(), 3, labels_q).unwrap(),
        ));
    }
    let holder = verify_holder_bound(&pairs, &bulk).unwrap();
    report(
        5,
        holder.violations.is_empty() && holder.pairs_checked == 10_000,
        &format!(
            "0 violations over 10000 pairs, tightest constant {:.3} vs declared {:.3}",
            holder.tightest_constant,
            2.0 * 0.7 * grid.domain_area()
        ),
    );
}

/// 64x64 unit-square bisection minimizer shared by the diagnostic checks.
fn bisection_minimizer_64() -> Partition {
    let grid = Grid::rect(64, 64, 1.0 / 64.0).unwrap();
    let a = ScalarField::constant(grid.clone(), 1.0).unwrap();
    let spec = EnergySpec::new(BulkTermSpec::volume_quadratic(&grid, 2, 1e4).unwrap());
    let config = OptimizerConfig {
        init: InitStrategy::Stripes,
        ..OptimizerConfig::for_grid(&grid)
    };
    let out = minimize(&grid, 2, &a, &spec, &config).unwrap();
    let faces = extract_interface(&out.partition);
    assert!(
        faces.len() == 64 && faces.iter().all(|f| f.midpoint[0] == 0.5),
        "the 64x64 run must settle on the straight bisection"
    );
    out.partition
}

#[test]
fn criterion_06_interface_density_ratios_sit_in_the_calibrated_band() {
    let p = bisection_minimizer_64();
    let h = p.grid().h();
    let mut config = DiagnosticsConfig::for_grid(p.grid());
    config.margin = 16.0 * h;
    config.sample_cap = 10_000; // keep every interface point
    let scales = [8.0 * h, 16.0 * h, 32.0 * h];
    let section = ahlfors_scan(&p, None, &scales, &config).unwrap();
    let min = section.min_ratio.unwrap();
    let max = section.max_ratio.unwrap();
    let band_ok = min >= 1.5 && max <= 3.5 && !section.samples.is_empty();

    // A three-branch meeting point must read as three radii of interface.
    let grid = Grid::rect(64, 64, 1.0 / 64.0).unwrap();
    let labels = (0..grid.n_cells())
        .map(|c| {
            let [x, y] = grid.center(c);
            if y < 0.5 {
                if x < 0.5 {
                    1
                } else {
                    2
                }
            } else {
                3
            }
        })
        .collect();
    let tripod = Partition::new(grid.clone(), 3, labels).unwrap();
    let faces = extract_interface(&tripod);
    let junction_ratios =
        [8.0 * h, 16.0 * h].map(|r| ahlfors_ratio(&faces, [0.5, 0.5], r));
    let junction_ok = junction_ratios.iter().all(|r| (2.5..=3.5).contains(r));

    report(
        6,
        band_ok && junction_ok,
        &format!(
            "{} bisection samples with ratios in [{min}, {max}]; tripod junction ratios {:?}",
            section.samples.len(),
            junction_ratios
        ),
    );
}

#[test]
fn criterion_07_interface_balls_inscribe_two_phases() {
    let p = bisection_minimizer_64();
    let h = p.grid().h();
    let mut config = DiagnosticsConfig::for_grid(p.grid());
    config.margin = 16.0 * h;
    config.sample_cap = 10_000;
    let r = 16.0 * h;
    let samples = condition_b_scan(&p, None, r, &config).unwrap();
    let mut worst = f64::INFINITY;
    let mut ok = !samples.is_empty();
    for s in &samples {
        let two_phases = s.phases.len() >= 2
            && s.phases[0].label != s.phases[1].label
            && s.phases[1].radius >= 0.25 * r;
        ok &= two_phases;
        if s.phases.len() >= 2 {
            worst = worst.min(s.phases[1].radius / r);
        }
    }
    report(
        7,
        ok,
        &format!(
            "{} samples at r = 16h; smallest second-phase ball {:.4} r (need 0.25 r)",
            samples.len(),
            worst
        ),
    );
}

#[test]
fn criterion_08_three_phases_on_a_disc_meet_near_third_turn_angles() {
    let nx = 128usize;
    let h = 1.0 / nx as f64;
    let mask = (0..nx * nx)
        .map(|i| {
            let (ix, iy) = (i % nx, i / nx);
            let x = (ix as f64 + 0.5) * h - 0.5;
            let y = (iy as f64 + 0.5) * h - 0.5;
            (x * x + y * y).sqrt() <= 0.48
        })
        .collect();
    let grid = Grid::new(nx, nx, h, mask).unwrap();
    let a = ScalarField::constant(grid.clone(), 1.0).unwrap();
    let spec = EnergySpec::new(BulkTermSpec::volume_quadratic(&grid, 3, 2e4).unwrap());
    // Greedy descent from a Voronoi seeding keeps the three-ray topology of the
    // initial partition; annealed runs drift toward axis-aligned walls whose
    // junctions open to 90 degrees under the face-count interface measure.
    let config = OptimizerConfig {
        init: InitStrategy::VoronoiSeeds,
        seed: 5,
        max_sweeps: 300,
        pour_moves_per_sweep: 8,
        radius_range: (h, 8.0 * h),
        temperature: None,
    };
    let out = minimize(&grid, 3, &a, &spec, &config).unwrap();
    let p = clean(&out.partition, &a, &spec, 4.0 * h * h).unwrap();

    let junctions = junction_scan(&p, 12.0 * h, 2.0 * h);
    let good: Vec<_> = junctions
        .iter()
        .filter(|j| j.angles.iter().all(|a| (110.0..=130.0).contains(a)))
        .collect();
    let detail = junctions
        .iter()
        .map(|j| {
            format!(
                "({:.3}, {:.3}) -> {:.0}/{:.0}/{:.0}",
                j.point[0], j.point[1], j.angles[0], j.angles[1], j.angles[2]
            )
        })
        .collect::<Vec<_>>()
        .join(", ");
    report(
        8,
        !good.is_empty(),
        &format!("{} of {} junctions within [110, 130]: {detail}", good.len(), junctions.len()),
    );
}

#[test]
fn criterion_09_identical_runs_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::rect(32, 32, 1.0 / 32.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let vals = (0..grid.n_cells()).map(|_| rng.gen_range(0.2..1.0)).collect();
    let a = ScalarField::new(grid.clone(), vals).unwrap();
    minpart::io::write_field(&dir.path().join("a.field"), &a).unwrap();
    let config_path = dir.path().join("run.config");
    std::fs::write(
        &config_path,
        "grid.nx = 32\ngrid.ny = 32\ngrid.h = 0.03125\n\
         labels.n = 3\nbulk.lambda = 50\n\
         weight.source = direct\nweight.field = a.field\n\
         weight.delta = 0.05\nweight.cap = 1\n\
         optimizer.init = voronoi\noptimizer.max_sweeps = 80\n\
         optimizer.pour_moves_per_sweep = 8\n\
         optimizer.t0 = 0.02\noptimizer.decay = 0.97\n",
    )
    .unwrap();

    let mut payloads = Vec::new();
    for sub in ["first", "second"] {
        let out_dir = dir.path().join(sub);
        let output = std::process::Command::new(env!("CARGO_BIN_EXE_minpart"))
            .args([
                "partition",
                "--config",
                config_path.to_str().unwrap(),
                "--seed",
                "42",
                "--out",
                out_dir.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(output.status.success(), "partition run failed");
        payloads.push((
            std::fs::read(out_dir.join("partition.labels")).unwrap(),
            std::fs::read(out_dir.join("trace.csv")).unwrap(),
        ));
    }
    let labels_match = payloads[0].0 == payloads[1].0;
    let trace_match = payloads[0].1 == payloads[1].1;
    report(
        9,
        labels_match && trace_match,
        &format!(
            "labels identical: {labels_match}; traces identical: {trace_match} ({} trace bytes)",
            payloads[0].1.len()
        ),
    );
}

#[test]
fn criterion_10_gauge_exponent_matches_hand_values() {
    let grid = Grid::rect(16, 16, 1.0 / 16.0).unwrap();
    let labels = (0..grid.n_cells())
        .map(|c| if grid.coords(c).0 < 8 { 1 } else { 2 })
        .collect();
    let p = Partition::new(grid.clone(), 2, labels).unwrap();
    let config = DiagnosticsConfig::for_grid(&grid);

    let cases = [(1.0, 0.5, 0.5), (0.75, 1.0, 0.5), (1.0, 1.0, 1.0)];
    let mut ok = true;
    let mut got = Vec::new();
    for (alpha, beta, expect) in cases {
        let bulk = BulkTermSpec::volume_quadratic(&grid, 2, 1.0)
            .unwrap()
            .with_holder(alpha, 1.0)
            .unwrap();
        let weight = WeightSpec::new(0.1, 1.0, WeightSource::Direct)
            .unwrap()
            .with_holder(beta, 1.0)
            .unwrap();
        let report = full_report(&p, &bulk, Some(&weight), &config);
        let gauge = report.gauge.expect("declared exponents produce a gauge");
        ok &= gauge.alpha == alpha && gauge.beta == beta && gauge.gamma == expect;
        got.push(format!("({alpha}, {beta}) -> {}", gauge.gamma));
    }
    report(10, ok, &format!("gauge exponents: {}", got.join("; ")));
}
