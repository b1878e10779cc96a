use expfb::energy::{Functional, SmoothedIndicator};
use expfb::grid::build_mesh;
use expfb::solver::{ball_support, phi_harmonic_replacement, Ball};
use expfb::{Domain, EnergyLaw, Mesh, SampledProblem};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_problem(mesh: &Mesh, rng: &mut ChaCha8Rng, law: EnergyLaw) -> SampledProblem {
    let n = mesh.node_count();
    let mut draw = |lo: f64, hi: f64| (0..n).map(|_| rng.gen_range(lo..hi)).collect::<Vec<_>>();
    let coeffs = [draw(-1.0, 1.0), draw(-1.0, 1.0), draw(0.5, 2.0), draw(0.5, 2.0)];
    SampledProblem::from_nodal(mesh, law, 0.0, coeffs, vec![0.0; n]).unwrap()
}

fn meshes() -> Vec<Mesh> {
    vec![build_mesh(Domain::interval(0.0, 1.0), &[8]).unwrap(), build_mesh(Domain::unit_square(), &[4, 4]).unwrap()]
}

#[test]
fn gradient_matches_central_differences() {
    let delta = 0.05;
    let fd = 1e-6;
    let ind = SmoothedIndicator::new(delta).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    for mesh in meshes() {
        assert!(mesh.node_count() == 9 || mesh.node_count() == 25);
        for trial in 0..100 {
            let law = [EnergyLaw::truncated(1), EnergyLaw::truncated(3), EnergyLaw::exponential()][trial % 3];
            let sp = random_problem(&mesh, &mut rng, law);
            let u: Vec<f64> = (0..mesh.node_count()).map(|_| rng.gen_range(-0.15..0.2)).collect();
            let j = Functional::new(&mesh, &sp, ind).unwrap();
            let g = j.gradient(&u).unwrap();
            for i in 0..mesh.node_count() {
                if mesh.boundary_mask()[i] {
                    assert_eq!(g[i], 0.0);
                    continue;
                }
                // Kinks of the ramp sit where a nodal value crosses 0 or δ.
                if u[i].abs() < 1e3 * fd || (u[i] - delta).abs() < 1e3 * fd {
                    continue;
                }
                let mut p = u.clone();
                p[i] += fd;
                let ep = j.energy(&p).unwrap();
                p[i] -= 2.0 * fd;
                let em = j.energy(&p).unwrap();
                let num = (ep - em) / (2.0 * fd);
                let rel = (g[i] - num).abs() / g[i].abs().max(1.0);
                assert!(rel <= 1e-6, "node {i}: analytic {} vs fd {num} (rel {rel:e})", g[i]);
                checked += 1;
            }
        }
    }
    assert!(checked > 1000);
}

#[test]
fn energy_is_monotone_in_truncation_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ind = SmoothedIndicator::new(1e-2).unwrap();
    for mesh in meshes() {
        let sp = random_problem(&mesh, &mut rng, EnergyLaw::exponential());
        for _ in 0..50 {
            let u: Vec<f64> = (0..mesh.node_count()).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let e = |law: EnergyLaw| Functional::new(&mesh, &sp, ind).unwrap().with_law(law).energy(&u).unwrap();
            let mut prev = f64::NEG_INFINITY;
            for k in 1..=12 {
                let ek = e(EnergyLaw::truncated(k));
                assert!(prev <= ek);
                prev = ek;
            }
            assert!(prev <= e(EnergyLaw::exponential()));
        }
    }
}

#[test]
fn breakdown_sums_to_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for mesh in meshes() {
        let sp = random_problem(&mesh, &mut rng, EnergyLaw::exponential());
        let u: Vec<f64> = (0..mesh.node_count()).map(|_| rng.gen_range(-0.3..0.3)).collect();
        let j = Functional::new(&mesh, &sp, SmoothedIndicator::new(1e-3).unwrap()).unwrap();
        assert_eq!(j.breakdown(&u).unwrap().total(), j.energy(&u).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Single-signed fields never see the ramp, so δ drops out.
    #[test]
    fn delta_consistency(seed in any::<u64>(), negative in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for mesh in meshes() {
            let sp = random_problem(&mesh, &mut rng, EnergyLaw::exponential());
            let u: Vec<f64> = (0..mesh.node_count())
                .map(|_| if negative { -rng.gen_range(0.0..0.3) } else { 0.1 + rng.gen_range(0.0..0.3) })
                .collect();
            let e = |d: f64| Functional::new(&mesh, &sp, SmoothedIndicator::new(d).unwrap()).unwrap().energy(&u).unwrap();
            let e0 = e(0.1);
            for d in [1e-2, 1e-3, 1e-4] {
                let ed = e(d);
                prop_assert!((ed - e0).abs() <= 1e-14 * e0.abs().max(1.0), "{ed} vs {e0}");
            }
        }
    }

    /// Shifting a positive field by `c` moves only the source term, by `−Σ w_i f₊(x_i)·c`.
    #[test]
    fn translation(seed in any::<u64>(), c in 0.01f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let delta = 1e-3;
        for mesh in meshes() {
            let sp = random_problem(&mesh, &mut rng, EnergyLaw::exponential());
            let u: Vec<f64> = (0..mesh.node_count()).map(|_| 2.0 * delta + rng.gen_range(0.0..0.3)).collect();
            let shifted: Vec<f64> = u.iter().map(|v| v + c).collect();
            let j = Functional::new(&mesh, &sp, SmoothedIndicator::new(delta).unwrap()).unwrap();
            let (a, b) = (j.breakdown(&u).unwrap(), j.breakdown(&shifted).unwrap());
            let expected: f64 = -mesh.lumped_weights().iter().zip(&sp.f_plus).map(|(w, f)| w * f).sum::<f64>() * c;
            prop_assert!((b.f_term - a.f_term - expected).abs() <= 1e-12);
            prop_assert!((b.phi_term - a.phi_term).abs() <= 1e-12 * a.phi_term.max(1.0));
            prop_assert!((b.gamma_term - a.gamma_term).abs() <= 1e-13);
        }
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let mesh = build_mesh(Domain::unit_square(), &[64, 64]).unwrap();
    assert!(mesh.element_count() >= 4096);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let sp = random_problem(&mesh, &mut rng, EnergyLaw::exponential());
    let u: Vec<f64> = (0..mesh.node_count()).map(|_| rng.gen_range(-0.05..0.05)).collect();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let j = Functional::new(&mesh, &sp, SmoothedIndicator::new(1e-3).unwrap()).unwrap();
            (j.energy(&u).unwrap().to_bits(), j.gradient(&u).unwrap().iter().map(|v| v.to_bits()).collect::<Vec<_>>())
        })
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(7));
}

/// For `Φ₁(s) = s²` the replacement is the discrete harmonic function with the
/// outer values as Dirichlet data: `K_ff v_f = −K_fb u_b`.
#[test]
fn quadratic_replacement_matches_direct_solve() {
    let mesh = build_mesh(Domain::unit_square(), &[16, 16]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let u: Vec<f64> = mesh.nodes().iter().map(|p| (3.0 * p[0]).sin() * p[1] + rng.gen_range(-0.05..0.05)).collect();
    let ball = Ball { center: [0.45, 0.55], radius: 0.3 };
    let v = phi_harmonic_replacement(EnergyLaw::truncated(1), &mesh, &u, &ball).unwrap().0;

    let (free, elements) = ball_support(&mesh, &ball);
    let mut index = vec![usize::MAX; mesh.node_count()];
    for (k, &i) in free.iter().enumerate() {
        index[i] = k;
    }
    let m = free.len();
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    for &e in &elements {
        let el = &mesh.elements()[e];
        let verts = mesh.element_nodes(e);
        for (p, &i) in verts.iter().enumerate() {
            if index[i] == usize::MAX {
                continue;
            }
            for (q, &j) in verts.iter().enumerate() {
                let (gp, gq) = (el.shape_grads[p], el.shape_grads[q]);
                let kij = el.measure * (gp[0] * gq[0] + gp[1] * gq[1]);
                if index[j] == usize::MAX {
                    rhs[index[i]] -= kij * u[j];
                } else {
                    a[(index[i], index[j])] += kij;
                }
            }
        }
    }
    let exact = a.lu().solve(&rhs).expect("stiffness matrix is nonsingular");
    let err = free.iter().enumerate().map(|(k, &i)| (v[i] - exact[k]).abs()).fold(0.0, f64::max);
    assert!(err < 1e-9, "max deviation {err:e}");
    for i in 0..mesh.node_count() {
        if index[i] == usize::MAX {
            assert_eq!(v[i], u[i]);
        }
    }
}
