use proptest::prelude::*;

use enso_mmo::integrate::Trajectory;
use enso_mmo::io::{parse_trajectory, trajectory_table, Table};
use enso_mmo::manifold::{branch_roots, fold_curves, fold_factor, ms_chart, FoldSide};
use enso_mmo::mmo::{MmoSignature, PeakClass};
use enso_mmo::model::{fast_rhs, layer_rhs, slow_rhs, System};
use enso_mmo::reduced::{desingularized_rhs, reduced_ms_rhs};
use enso_mmo::{DimensionlessParams, DimlessState, PhysicalParams, Preset};

fn params() -> impl Strategy<Value = DimensionlessParams> {
    (0.005..0.5f64, 0.1..1.0f64, 1.0..8.0f64, 1.05..10.0f64, -1.0..1.0f64)
        .prop_map(|(delta, rho, a, c, k)| DimensionlessParams::new(delta, rho, a, c, k))
}

fn state() -> impl Strategy<Value = DimlessState> {
    (-8.0..3.0f64, -8.0..3.0f64, -2.0..4.0f64).prop_map(|(x, y, z)| DimlessState::new(x, y, z))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #[test]
    fn slow_field_is_fast_field_over_delta(q in params(), u in state()) {
        let f = fast_rhs(&u, &q);
        let s = slow_rhs(&u, &q);
        prop_assert!(close(s.x * q.delta, f.x, 1e-12));
        prop_assert!(close(s.y * q.delta, f.y, 1e-12));
        prop_assert!(close(s.z * q.delta, f.z, 1e-12));
    }

    #[test]
    fn plane_x_zero_is_invariant(q in params(), y in -8.0..3.0f64, z in -2.0..4.0f64) {
        prop_assert_eq!(fast_rhs(&DimlessState::new(0.0, y, z), &q).x, 0.0);
    }

    #[test]
    fn layer_field_freezes_slow_variables_and_vanishes_on_ms(q in params(), x in -8.0..3.0f64, z in -2.0..4.0f64) {
        let u = DimlessState::new(x, ms_chart(x, z, &q), z);
        let f = layer_rhs(&u, &q);
        prop_assert_eq!(f.y, 0.0);
        prop_assert_eq!(f.z, 0.0);
        prop_assert!(f.x.abs() < 1e-10 * x.abs().max(1.0));
    }

    #[test]
    fn fold_factor_vanishes_on_fold_curves(q in params(), z in -2.0..4.0f64) {
        let folds = fold_curves(&q).expect("c > 1");
        for side in [FoldSide::Minus, FoldSide::Plus] {
            let x = folds.x_on(side, z);
            prop_assert!(fold_factor(x, z, &q).abs() < 1e-12);
        }
    }

    #[test]
    fn branch_roots_are_sorted_zeros(q in params(), z in -2.0..4.0f64) {
        let r = branch_roots(z, &q);
        prop_assert!(r.roots.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(r.roots.contains(&0.0));
        for x in r.roots {
            prop_assert!((x * fold_factor(x, z, &q)).abs() < 1e-10);
        }
    }

    #[test]
    fn desingularized_flow_rescales_reduced_flow(q in params(), x in -8.0..3.0f64, z in -2.0..4.0f64) {
        let ff = fold_factor(x, z, &q);
        prop_assume!(ff.abs() > 1e-3);
        let r = reduced_ms_rhs(x, z, &q).unwrap();
        let d = desingularized_rhs(x, z, &q);
        prop_assert!(close(d[0], ff * r[0], 1e-9));
        prop_assert!(close(d[1], ff * r[1], 1e-9));
    }

    #[test]
    fn signature_counts_match_classes(classes in proptest::collection::vec(any::<bool>(), 0..60)) {
        let classes: Vec<PeakClass> = classes.into_iter().map(|b| if b { PeakClass::Lao } else { PeakClass::Sao }).collect();
        let sig = MmoSignature::from_classes(&classes);
        let lao = classes.iter().filter(|c| **c == PeakClass::Lao).count() as u32;
        prop_assert_eq!(sig.lao_count(), lao);
        if lao > 0 {
            let leading = classes.iter().take_while(|c| **c == PeakClass::Sao).count() as u32;
            prop_assert_eq!(sig.sao_count(), classes.len() as u32 - lao - leading);
            prop_assert!(sig.pairs.iter().all(|p| p.0 >= 1));
        } else {
            prop_assert!(sig.degenerate);
        }
    }

    #[test]
    fn state_conversions_round_trip(u in state()) {
        let p = PhysicalParams::table1();
        let (_, s) = p.nondimensionalize().unwrap();
        let back = u.to_physical(&p, &s).to_anomaly(&p).to_dimless(&s);
        prop_assert!(close(back.x, u.x, 1e-12));
        prop_assert!(close(back.y, u.y, 1e-12));
        prop_assert!(close(back.z, u.z, 1e-12));
    }

    #[test]
    fn trajectory_csv_round_trip_is_exact(
        steps in proptest::collection::vec((0.001..1.0f64, -8.0..3.0f64, -8.0..3.0f64, -2.0..4.0f64), 2..40)
    ) {
        let mut t = 0.0;
        let mut times = Vec::new();
        let mut states = Vec::new();
        for (dt, x, y, z) in steps {
            t += dt;
            times.push(t);
            states.push([x, y, z]);
        }
        let traj = Trajectory::from_samples(times, states).unwrap();
        let text = trajectory_table(&traj, System::Fast, None).render();
        let back = parse_trajectory(&Table::parse(&text).unwrap(), None).unwrap();
        prop_assert_eq!(back.trajectory.times, traj.times);
        prop_assert_eq!(back.trajectory.states, traj.states);
    }
}

#[test]
fn presets_all_validate() {
    for p in Preset::ALL {
        assert!(p.params().dimensionless().is_ok(), "{p}");
    }
}
