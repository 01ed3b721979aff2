use momentrelax::moments::{
    caratheodory_decompose, hull_extreme_points, lambda_contains, lambda_contains_with, moments_of,
    phi_eval, psi_eval, ControlBasis, ControlSet, DiscreteMeasure, MembershipMode, MomentVector,
};
use momentrelax::numeric::linspace;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cases() -> Vec<(ControlBasis, ControlSet)> {
    vec![
        (
            ControlBasis::power(2).unwrap(),
            ControlSet::interval(-1.0, 1.0).unwrap(),
        ),
        (
            ControlBasis::power(3).unwrap(),
            ControlSet::interval(0.5, 2.0).unwrap(),
        ),
        (
            ControlBasis::power(3).unwrap(),
            ControlSet::interval(-1.0, 1.0).unwrap(),
        ),
        (
            ControlBasis::quadratic_diag(2).unwrap(),
            ControlSet::boxed(&[(0.0, 1.0), (-1.0, 2.0)]).unwrap(),
        ),
    ]
}

fn random_measure(rng: &mut ChaCha8Rng, k: &ControlSet, atoms: usize) -> DiscreteMeasure {
    let pts: Vec<Vec<f64>> = (0..atoms)
        .map(|_| {
            (0..k.dim())
                .map(|i| rng.random_range(k.lower()[i]..=k.upper()[i]))
                .collect()
        })
        .collect();
    let w: Vec<f64> = (0..atoms).map(|_| rng.random_range(0.01..1.0)).collect();
    DiscreteMeasure::from_unnormalized(pts, w, 0.0).unwrap()
}

#[test]
fn curve_points_are_members_with_vanishing_psi() {
    for (basis, k) in cases() {
        for u in k.grid(101) {
            let m = phi_eval(&basis, &u).unwrap();
            assert!(
                lambda_contains(&basis, &k, &m, 1e-12).unwrap(),
                "{basis:?} {u:?}"
            );
            for v in psi_eval(&basis, &m).unwrap() {
                assert!(v.abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn accepted_points_are_closed_under_convex_combination() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (basis, k) in cases() {
        let mut pairs = 0;
        while pairs < 500 {
            let a = moments_of(&basis, &random_measure(&mut rng, &k, 3)).unwrap();
            let b = moments_of(&basis, &random_measure(&mut rng, &k, 2)).unwrap();
            if !(lambda_contains(&basis, &k, &a, 1e-12).unwrap()
                && lambda_contains(&basis, &k, &b, 1e-12).unwrap())
            {
                continue;
            }
            pairs += 1;
            for t in [0.25, 0.5, 0.75] {
                let m = MomentVector(
                    a.0.iter()
                        .zip(&b.0)
                        .map(|(x, y)| t * x + (1.0 - t) * y)
                        .collect(),
                );
                assert!(
                    lambda_contains(&basis, &k, &m, 1e-12).unwrap(),
                    "{basis:?} {m:?}"
                );
            }
        }
    }
}

/// Whether the analytic verdict is stable under coordinate perturbations of
/// size `band`.
fn far_from_boundary(basis: &ControlBasis, k: &ControlSet, m: &MomentVector, band: f64) -> bool {
    let here = lambda_contains(basis, k, m, 0.0).unwrap();
    (0..m.dim()).all(|i| {
        [band, -band].iter().all(|d| {
            let mut p = m.clone();
            p.0[i] += d;
            lambda_contains(basis, k, &p, 0.0).unwrap() == here
        })
    })
}

#[test]
fn analytic_and_hull_membership_agree_off_the_boundary() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let hull = MembershipMode::Hull { samples: 2000 };
    for (basis, k) in cases() {
        let curve: Vec<Vec<f64>> = k
            .grid_with_total(2000)
            .iter()
            .map(|u| phi_eval(&basis, u).unwrap().0)
            .collect();
        let s = basis.moment_dim();
        let lo: Vec<f64> = (0..s)
            .map(|j| curve.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min))
            .collect();
        let hi: Vec<f64> = (0..s)
            .map(|j| curve.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        // Sampled hulls cut chords under the parabola; the sag bounds their error.
        let per_axis = (2000f64).powf(1.0 / k.dim() as f64).round();
        let sag = (0..k.dim())
            .map(|i| ((k.upper()[i] - k.lower()[i]) / (per_axis - 1.0)).powi(2) / 4.0)
            .fold(0.0, f64::max);
        let band = (2.0 * sag).max(1e-6);
        let (mut inside, mut compared) = (0, 0);
        for i in 0..1000 {
            // Alternate box samples (mostly outside) with moments of random measures (inside).
            let m = if i % 2 == 0 {
                MomentVector((0..s).map(|j| rng.random_range(lo[j]..=hi[j])).collect())
            } else {
                let atoms = rng.random_range(2..5);
                moments_of(&basis, &random_measure(&mut rng, &k, atoms)).unwrap()
            };
            if !far_from_boundary(&basis, &k, &m, band) {
                continue;
            }
            let analytic = lambda_contains(&basis, &k, &m, 0.0).unwrap();
            let sampled = lambda_contains_with(&basis, &k, &m, 1e-9, hull).unwrap();
            assert_eq!(analytic, sampled, "{basis:?} on {k:?}: {m:?}");
            compared += 1;
            inside += analytic as usize;
        }
        assert!(compared > 600, "{basis:?}: only {compared} points compared");
        assert!(
            inside > 100 && compared - inside > 100,
            "{basis:?}: {inside} of {compared} inside"
        );
    }
}

#[test]
fn hull_vertices_lie_on_the_curve() {
    for (basis, k) in [
        (
            ControlBasis::power(2).unwrap(),
            ControlSet::interval(-1.0, 1.0).unwrap(),
        ),
        (
            ControlBasis::power(3).unwrap(),
            ControlSet::interval(0.5, 2.0).unwrap(),
        ),
    ] {
        let h = hull_extreme_points(&basis, &k, 2000).unwrap();
        assert!(!h.vertices.is_empty());
        let samples: Vec<f64> = linspace(k.lower()[0], k.upper()[0], 2000);
        for v in &h.vertices {
            let d = samples
                .iter()
                .map(|&t| v.distance(&phi_eval(&basis, &[t]).unwrap()))
                .fold(f64::INFINITY, f64::min);
            assert!(d <= 1e-9, "vertex {v:?} is {d} from the curve");
        }
        for end in [k.lower()[0], k.upper()[0]] {
            let p = phi_eval(&basis, &[end]).unwrap();
            assert!(h.vertices.iter().any(|v| v.distance(&p) <= 1e-12));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn decomposition_round_trips(seed in any::<u64>(), which in 0usize..4, atoms in 1usize..6) {
        let (basis, k) = cases().swap_remove(which);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = moments_of(&basis, &random_measure(&mut rng, &k, atoms)).unwrap();
        let tol = 1e-9;
        let mu = caratheodory_decompose(&basis, &k, &m, tol).unwrap();
        prop_assert!(mu.len() <= basis.moment_dim() + 1);
        prop_assert!(mu.supported_in(&k, 1e-12));
        let back = moments_of(&basis, &mu).unwrap();
        prop_assert!(back.distance(&m) <= tol, "{:?} vs {:?}", back, m);
    }

    #[test]
    fn points_above_the_parabola_are_rejected(t in -1.0f64..1.0, lift in 1e-6f64..1.0) {
        let basis = ControlBasis::power(2).unwrap();
        let k = ControlSet::interval(-1.0, 1.0).unwrap();
        // Above the chord from −1 to 1 means m₂ > 1.
        let m = MomentVector(vec![t, 1.0 + lift]);
        prop_assert!(!lambda_contains(&basis, &k, &m, 0.0).unwrap());
        let below = MomentVector(vec![t, t * t - lift]);
        prop_assert!(!lambda_contains(&basis, &k, &below, 0.0).unwrap());
    }
}
