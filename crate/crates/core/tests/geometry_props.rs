use std::f64::consts::PI;
use std::path::PathBuf;

use expfb::geometry::{coarea_perimeter, level_set, phase_boundary, thin_band_stats, Side};
use expfb::grid::build_mesh;
use expfb::problem::load_config;
use expfb::solver::solve;
use expfb::{Coefficient, Domain, Mesh, SampledProblem};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `(1/ε)∫_0^ε length{u = ±t} dt` by the midpoint rule on `levels` levels.
fn level_average(mesh: &Mesh, u: &[f64], eps: f64, side: Side, levels: usize) -> f64 {
    let sign = if side == Side::Plus { 1.0 } else { -1.0 };
    (0..levels).map(|i| level_set(mesh, u, sign * eps * (i as f64 + 0.5) / levels as f64).length()).sum::<f64>()
        / levels as f64
}

fn assert_coarea_consistent(mesh: &Mesh, u: &[f64], eps: f64) {
    for side in [Side::Plus, Side::Minus] {
        let c = coarea_perimeter(mesh, u, eps, side).unwrap();
        let m = level_average(mesh, u, eps, side, 400);
        assert!((c - m).abs() <= 0.01 * m, "{side:?}: coarea {c} vs marching average {m}");
    }
}

#[test]
fn coarea_matches_level_averaged_marching_on_shipped_fixture() {
    let cfg = load_config(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/twophase_2d.json")).unwrap();
    let mut spec = cfg.problem();
    spec.resolution = vec![32, 32];
    let mesh = spec.mesh().unwrap();
    let sp = SampledProblem::new(&spec, &mesh).unwrap();
    let u = solve(&sp, &mesh, &cfg.solver).unwrap().field.0;
    for eps in [0.02, 0.05, 0.1] {
        assert_coarea_consistent(&mesh, &u, eps);
    }
}

#[test]
fn coarea_matches_level_averaged_marching_on_radial_field() {
    let mesh = build_mesh(Domain::unit_square(), &[64, 64]).unwrap();
    let u = Coefficient::radial(0.5, 0.5, 0.25).sample(&mesh).unwrap();
    for eps in [0.005, 0.05] {
        assert_coarea_consistent(&mesh, &u, eps);
    }
    let p = coarea_perimeter(&mesh, &u, 0.005, Side::Plus).unwrap();
    assert!((p - PI / 2.0).abs() < 0.02 * PI / 2.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn coarea_is_exact_on_affine_fields(c in 0.3f64..0.7, theta in 0.0f64..(2.0 * PI), eps in 1e-3f64..0.05) {
        // Zero level through (c, c) with unit normal (cos θ, sin θ); well inside the square.
        let mesh = build_mesh(Domain::unit_square(), &[16, 16]).unwrap();
        let (nx, ny) = (theta.cos(), theta.sin());
        let u = mesh.sample_fn(|p| nx * (p[0] - c) + ny * (p[1] - c)).0;
        let exact = level_set(&mesh, &u, 0.0).length();
        for side in [Side::Plus, Side::Minus] {
            let sign = if side == Side::Plus { 1.0 } else { -1.0 };
            let far = level_set(&mesh, &u, sign * eps).length();
            // Only compare when the band does not reach a corner of the box.
            if (far - exact).abs() < 1e-12 {
                let p = coarea_perimeter(&mesh, &u, eps, side).unwrap();
                prop_assert!((p - exact).abs() <= 1e-9 * exact, "{p} vs {exact}");
            }
        }
    }

    #[test]
    fn band_statistics_are_nested(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mesh = build_mesh(Domain::unit_square(), &[10, 10]).unwrap();
        let u: Vec<f64> = (0..mesh.node_count()).map(|_| rng.gen_range(-0.3..0.3)).collect();
        let eps = [0.0, 0.01, 0.05, 0.02, 0.1, 0.3];
        let rows = thin_band_stats(&mesh, &u, &eps).unwrap();
        for w in rows.windows(2) {
            prop_assert!(w[0].epsilon < w[1].epsilon);
            prop_assert!(w[0].band_measure <= w[1].band_measure);
            prop_assert!(w[0].band_dirichlet <= w[1].band_dirichlet);
        }
        prop_assert!(rows[rows.len() - 1].band_measure <= 1.0 + 1e-12);
    }

    #[test]
    fn boundaries_lie_in_the_closed_domain(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mesh = build_mesh(Domain::rectangle(-1.0, 1.0, 0.0, 0.5), &[12, 6]).unwrap();
        let u: Vec<f64> = (0..mesh.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for side in [Side::Plus, Side::Minus] {
            let b = phase_boundary(&mesh, &u, side);
            prop_assert!(b.length() >= 0.0);
            for p in b.polylines.iter().flatten() {
                prop_assert!(mesh.domain().contains(*p, 1e-12));
            }
        }
    }
}
