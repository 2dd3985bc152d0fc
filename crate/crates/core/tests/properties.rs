use nall::bridge::{insert_region, paste_content, insertion_site, remove_region, BridgeConfig, IidGaussianScore, Schedule};
use nall::coalition::{fidelity_r2, ls_projection_oracle, n_shapley, CoalitionGame};
use nall::model::{sigmoid, toy_model_eval, ToyLmpiModelSpec, ToySite};
use nall::shnap::{rnc, shnap_explain, AuditCase, FillRemover, Region};
use nall::stats::{clopper_pearson, exact_binomial_test, studentized_range_cdf};
use nall::volume::{distance_to_boundary, distance_to_boundary_bruteforce, recompose, RegionMask, VolumeGrid};
use proptest::prelude::*;

fn game_strategy(max_n: usize) -> impl Strategy<Value = CoalitionGame> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::vec(-5.0f64..5.0, 1 << n).prop_map(move |v| CoalitionGame::from_values(n, v).unwrap())
    })
}

fn mask_strategy(dims: [usize; 3]) -> impl Strategy<Value = RegionMask> {
    prop::collection::vec(any::<bool>(), dims.iter().product::<usize>())
        .prop_map(move |bits| RegionMask::from_bits(dims, bits).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn efficiency_at_full_order(game in game_strategy(7)) {
        let n = game.n_players();
        let a = n_shapley(&game, n).unwrap();
        let total: f64 = a.coefficients().iter().sum();
        prop_assert!((total - game.value(game.grand_coalition())).abs() < 1e-10);
    }

    #[test]
    fn closed_form_matches_dense_solve(game in game_strategy(6), order in 1usize..=3) {
        let order = order.min(game.n_players());
        let fast = n_shapley(&game, order).unwrap();
        let dense = ls_projection_oracle(&game, order).unwrap();
        for (a, b) in fast.coefficients().iter().zip(dense.coefficients()) {
            prop_assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn fidelity_grows_with_order(game in game_strategy(6)) {
        let mut last = f64::NEG_INFINITY;
        for order in 1..=game.n_players() {
            let r2 = fidelity_r2(&game, &n_shapley(&game, order).unwrap()).unwrap().r2;
            prop_assert!(r2 >= last - 1e-12);
            prop_assert!(r2 <= 1.0 + 1e-12);
            last = r2;
        }
        prop_assert!((last - 1.0).abs() < 1e-9);
    }

    #[test]
    fn recompose_is_local(a in mask_strategy([4, 3, 3]), seed in 0u64..1000) {
        let dims = [4, 3, 3];
        let b = a.complement();
        let x = VolumeGrid::new(dims, [1.0; 3], (0..36).map(|i| i as f32).collect()).unwrap();
        let ya = VolumeGrid::filled(dims, [1.0; 3], -(seed as f32)).unwrap();
        let yb = VolumeGrid::filled(dims, [1.0; 3], 1e4).unwrap();
        let both = recompose(&x, &[(&ya, &a), (&yb, &b)]).unwrap();
        let only_a = recompose(&x, &[(&ya, &a)]).unwrap();
        for i in 0..36 {
            // Coalitions differing only in `b` differ only inside `b`.
            if both.voxels()[i] != only_a.voxels()[i] {
                prop_assert!(b.at(i));
            }
        }
        prop_assert!(recompose(&x, &[(&ya, &a), (&yb, &a)]).is_err() || a.is_empty());
    }

    #[test]
    fn toy_outputs_satisfy_contract(logits in prop::collection::vec(-8.0f64..8.0, 1..4), hu in -900.0f32..200.0) {
        let n = logits.len();
        let sites: Vec<ToySite> = (0..n).map(|i| ToySite { center: [2 + 4 * i, 2, 2], radius_mm: 1.0 }).collect();
        let spec = ToyLmpiModelSpec::additive(sites, logits[0], logits.clone());
        let scan = VolumeGrid::filled([4 * n + 2, 5, 5], [1.0; 3], hu).unwrap();
        let out = toy_model_eval(&spec, &scan).unwrap();
        prop_assert!((sigmoid(out.base_logit) - out.risks[0]).abs() <= 1e-9);
        for w in out.risks.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
        prop_assert!(out.risks.iter().all(|r| (0.0..=1.0).contains(r)));
        prop_assert!(out.hazards.iter().all(|&h| h >= 0.0));
    }

    #[test]
    fn rnc_is_at_most_one(f in -30.0f64..30.0, mu in -30.0f64..30.0) {
        prop_assert!(rnc(f, mu) <= 1.0);
    }

    #[test]
    fn distance_transform_matches_bruteforce(mask in mask_strategy([5, 4, 3]), sx in 0.5f64..2.0, sz in 0.5f64..3.0) {
        prop_assume!(!mask.is_empty() && !mask.is_full());
        let fast = distance_to_boundary(&mask, [sx, 1.0, sz]).unwrap();
        let slow = distance_to_boundary_bruteforce(&mask, [sx, 1.0, sz]).unwrap();
        for (a, b) in fast.values().iter().zip(slow.values()) {
            match (a, b) {
                (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-9),
                (None, None) => {}
                _ => prop_assert!(false, "support differs"),
            }
        }
    }

    #[test]
    fn dilation_contains_mask(mask in mask_strategy([5, 5, 4]), r in 0usize..3) {
        let d = mask.dilate(r);
        prop_assert!(mask.is_subset_of(&d));
        if r == 0 {
            prop_assert_eq!(d, mask);
        }
    }

    #[test]
    fn clopper_pearson_brackets_estimate(n in 1u64..200, frac in 0.0f64..=1.0) {
        let k = (frac * n as f64).floor() as u64;
        let (lo, hi) = clopper_pearson(k, n, 0.05);
        let p = k as f64 / n as f64;
        prop_assert!(lo <= p + 1e-12 && p <= hi + 1e-12);
        let t = exact_binomial_test(k, n, 0.5).unwrap();
        prop_assert!(t.p_two_sided > 0.0 && t.p_two_sided <= 1.0);
    }

    #[test]
    fn studentized_range_cdf_is_monotone(q in 0.1f64..6.0, k in 2usize..6, df in 3.0f64..40.0) {
        let a = studentized_range_cdf(q, k, df);
        let b = studentized_range_cdf(q + 0.25, k, df);
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b >= a - 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn removal_is_deterministic_and_local(seed in any::<u64>(), mask in mask_strategy([4, 4, 3])) {
        prop_assume!(!mask.is_empty());
        let dims = [4, 4, 3];
        let x = VolumeGrid::new(dims, [1.0; 3], (0..48).map(|i| (i as f32 * 0.3).cos()).collect()).unwrap();
        let score = IidGaussianScore::new(0.0, 1.0).unwrap();
        let cfg = BridgeConfig { schedule: Schedule::default(), nfe: 10 };
        let a = remove_region(&x, &mask, &score, &cfg, seed).unwrap();
        prop_assert_eq!(&a, &remove_region(&x, &mask, &score, &cfg, seed).unwrap());
        for i in 0..48 {
            if !mask.at(i) {
                prop_assert_eq!(a.voxels()[i].to_bits(), x.voxels()[i].to_bits());
            }
        }
    }

    #[test]
    fn zero_depth_insertion_is_paste(c in (3usize..9, 3usize..9, 3usize..7), seed in any::<u64>()) {
        let x = VolumeGrid::new([12, 12, 10], [1.0; 3], (0..1440).map(|i| (i as f32 * 0.17).sin()).collect()).unwrap();
        let content = VolumeGrid::new([3, 3, 3], [1.0; 3], (0..27).map(|i| i as f32).collect()).unwrap();
        let mask = RegionMask::from_fn([3, 3, 3], |p| p[0] != 0 || p[1] == 1).unwrap();
        let center = [c.0, c.1, c.2];
        let score = IidGaussianScore::new(0.0, 1.0).unwrap();
        let y = insert_region(&x, &content, &mask, center, 0, &score, &BridgeConfig::default(), seed).unwrap();
        let site = insertion_site(x.dims(), &mask, center).unwrap();
        prop_assert_eq!(y, paste_content(&x, &content, &site));
    }

    #[test]
    fn shnap_sign_follows_planted_effect(beta in -3.0f64..3.0, bump in 0.01f64..2.0) {
        let mut scan = VolumeGrid::filled([12, 6, 6], [1.0; 3], -800.0).unwrap();
        let sites = vec![ToySite { center: [3, 3, 3], radius_mm: 1.5 }, ToySite { center: [8, 3, 3], radius_mm: 1.5 }];
        let masks: Vec<RegionMask> = ToyLmpiModelSpec::additive(sites.clone(), 0.0, vec![0.0, 0.0])
            .site_masks(scan.dims(), scan.spacing_mm())
            .unwrap();
        for m in &masks {
            for i in m.indices() {
                scan.voxels_mut()[i] = 50.0;
            }
        }
        let regions: Vec<Region> = masks.into_iter().enumerate().map(|(i, mask)| Region { label: i.to_string(), mask }).collect();
        let case = AuditCase::new(scan, regions).unwrap();
        let phi = |b: f64| {
            let model = nall::model::ModelHandle::toy(ToyLmpiModelSpec::additive(sites.clone(), -1.0, vec![b, 0.5])).unwrap();
            shnap_explain(&case, &model, &FillRemover(-800.0), 0, 1).unwrap().attribution.phi_main()[0]
        };
        prop_assert!(phi(beta + bump) > phi(beta));
    }
}
