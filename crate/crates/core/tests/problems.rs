mod common;

use common::*;
use flip_core::problems::*;
use flip_core::seed::rng_from_seed;
use flip_core::simulator::{value_and_gradient, Pauli, PauliString};
use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn jordan_wigner_matches_fock_space_spectrum() {
    for (l, u) in [(1, 4.0), (1, 0.7), (2, 0.0), (2, 3.3), (3, 5.0), (3, 9.1)] {
        let obs = jordan_wigner(&FhmSpec { l, u, d: 1 }).unwrap();
        let a = sorted_spectrum(dense(&obs));
        let b = sorted_spectrum(fock_hubbard(l, u));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9, "L={l} U={u}: {x} vs {y}");
        }
    }
}

#[test]
fn hubbard_hand_values() {
    let obs = jordan_wigner(&FhmSpec { l: 1, u: 4.0, d: 1 }).unwrap();
    let e = sorted_spectrum(dense(&obs));
    let want = [-2.0, -2.0, 0.0, 0.0];
    for (x, y) in e.iter().zip(want) {
        assert!((x - y).abs() < 1e-12);
    }
    assert!((exact_min(&obs, None).unwrap() + 2.0).abs() < 1e-10);

    let p = build_fhm(FhmSpec { l: 2, u: 0.0, d: 1 }).unwrap();
    assert!((p.c_min_raw().unwrap() + 2.0).abs() < 1e-10);
    assert_eq!(p.initial_state(), 0b0011);
    assert_eq!(p.circuit().n_qubits(), 4);

    // L=1, U=0 leaves no terms at all
    assert!(jordan_wigner(&FhmSpec { l: 1, u: 0.0, d: 1 }).is_err());
}

/// Ground energy of the half-filled sector from the Fock-space oracle.
fn fock_sector_min(l: usize, u: f64, electrons: usize) -> f64 {
    let h = fock_hubbard(l, u);
    let basis: Vec<usize> = (0..1 << (2 * l)).filter(|b: &usize| b.count_ones() as usize == electrons).collect();
    let sub = DMatrix::from_fn(basis.len(), basis.len(), |r, c| h[(basis[r], basis[c])]);
    sorted_spectrum(sub)[0]
}

#[test]
fn three_site_ground_energy() {
    let oracle = fock_sector_min(3, 5.0, 3);
    let p = build_fhm(FhmSpec { l: 3, u: 5.0, d: 2 }).unwrap();
    let raw = p.c_min_raw().unwrap();
    assert!((raw - oracle).abs() < 1e-9, "{raw} vs {oracle}");
    let norm = p.c_min().unwrap();
    assert!((norm * p.observable().l1_norm() - raw).abs() < 1e-12);
}

#[test]
fn spin_sector_min_equals_number_sector_min() {
    let mut rng = rng_from_seed(41);
    for l in 1..=4 {
        let u = rng.random_range(0.5..10.0);
        let obs = jordan_wigner(&FhmSpec { l, u, d: 1 }).unwrap();
        let init = fhm_initial_state(l);
        let spin = exact_min(&obs, Some(Sector::spin_of(init))).unwrap();
        let weight = exact_min(&obs, Some(Sector::HammingWeight(init.count_ones() as usize))).unwrap();
        assert!((spin - weight).abs() < 1e-9, "L={l}: {spin} vs {weight}");
    }
}

#[test]
fn initial_filling() {
    assert_eq!(fhm_initial_state(1), 0b1);
    assert_eq!(fhm_initial_state(2), 0b11);
    assert_eq!(fhm_initial_state(3), 0b01_00_11);
    assert_eq!(fhm_initial_state(4), 0b00_11_00_11);
    for l in 1..=10 {
        assert_eq!(fhm_initial_state(l).count_ones() as usize, l);
    }
}

#[test]
fn ldca_counts() {
    assert_eq!(ldca_circuit(1, 1).unwrap().n_params(), 5);
    assert_eq!(ldca_circuit(6, 8).unwrap().n_params(), 276);
    assert_eq!(ldca_circuit(6, 6).unwrap().n_params(), 210);
    assert!(build_fhm(FhmSpec { l: 11, u: 1.0, d: 1 }).is_err());
    let p = build_fhm(FhmSpec { l: 6, u: 1.0, d: 1 }).unwrap();
    assert!(p.c_min().is_none());
}

#[test]
fn ldca_output_stays_in_initial_weight_sector() {
    let mut rng = rng_from_seed(8);
    for (l, d) in [(1, 3), (2, 2), (3, 3), (4, 2)] {
        let p = build_fhm(FhmSpec { l, u: 2.0, d }).unwrap();
        let w = p.initial_state().count_ones() as usize;
        for _ in 0..5 {
            let th = random_params(&mut rng, p.n_params());
            let s = p.circuit().run(&th, p.initial_state()).unwrap();
            let dist = s.hamming_weight_distribution();
            let leak: f64 = dist.iter().enumerate().filter(|(k, _)| *k != w).map(|(_, v)| v).sum();
            assert!(leak < 1e-10);
        }
    }
}

#[test]
fn state_prep_examples() {
    let p = build_state_prep(StatePrepSpec { n: 3, d: 6, p: 2 }).unwrap();
    assert_eq!(p.n_params(), 18);
    assert_eq!(StatePrepSpec { n: 3, d: 6, p: 2 }.target(), 0b010);
    assert!((p.c_min().unwrap() + 1.0).abs() < 1e-12);
    assert!((p.observable().l1_norm() - 1.0).abs() < 1e-12);
    assert!((exact_min(p.observable(), None).unwrap() + 1.0).abs() < 1e-12);
    assert!(build_state_prep(StatePrepSpec { n: 3, d: 1, p: 4 }).is_err());
    assert!(build_state_prep(StatePrepSpec { n: 3, d: 1, p: 0 }).is_err());

    let one = build_state_prep(StatePrepSpec { n: 1, d: 1, p: 1 }).unwrap();
    let c = flip_core::simulator::cost(&one, &[std::f64::consts::PI], true).unwrap();
    assert!((c + 1.0).abs() < 1e-12);
}

#[test]
fn projector_matches_dense_outer_product() {
    for n in 1..=4 {
        for t in 0..1u64 << n {
            let m = dense(&projector_observable(n, t).unwrap());
            let dim = 1 << n;
            for r in 0..dim {
                for c in 0..dim {
                    let want = if r == c && r as u64 == t { -1.0 } else { 0.0 };
                    assert!((m[(r, c)] - C::new(want, 0.0)).norm() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn grid_search_reaches_two_qubit_target() {
    let p = build_state_prep(StatePrepSpec { n: 2, d: 2, p: 1 }).unwrap();
    let steps = 12;
    let grid: Vec<f64> = (0..steps).map(|i| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / steps as f64).collect();
    let mut best = (f64::INFINITY, vec![0.0; 4]);
    for &a in &grid {
        for &b in &grid {
            for &c in &grid {
                for &d in &grid {
                    let th = vec![a, b, c, d];
                    let v = flip_core::simulator::cost(&p, &th, true).unwrap();
                    if v < best.0 {
                        best = (v, th);
                    }
                }
            }
        }
    }
    let mut th = best.1;
    for _ in 0..2000 {
        let (_, g) = value_and_gradient(&p, &th, true).unwrap();
        for (t, gk) in th.iter_mut().zip(g) {
            *t -= 0.5 * gk;
        }
    }
    let v = flip_core::simulator::cost(&p, &th, true).unwrap();
    assert!((v + 1.0).abs() < 1e-6, "{v}");
}

#[test]
fn state_prep_optimum_is_attainable() {
    let mut rng = rng_from_seed(2);
    for n in 1..=4 {
        let spec = StatePrepSpec { n, d: n, p: rng.random_range(1..=n) };
        let p = build_state_prep(spec).unwrap();
        let mut best = f64::INFINITY;
        for _ in 0..50 {
            let mut th = random_params(&mut rng, p.n_params());
            for _ in 0..300 {
                let (_, g) = value_and_gradient(&p, &th, true).unwrap();
                for (t, gk) in th.iter_mut().zip(g) {
                    *t -= 0.5 * gk;
                }
            }
            best = best.min(flip_core::simulator::cost(&p, &th, true).unwrap());
            if best <= -0.999 {
                break;
            }
        }
        assert!(best <= -0.999, "n={n}: {best}");
    }
}

#[test]
fn maxcut_examples() {
    let tri = build_maxcut(MaxCutSpec {
        graph: Graph::complete(3),
        d: 2,
        edge_prob: 1.0,
    })
    .unwrap();
    assert!((tri.c_min_raw().unwrap() + 1.0).abs() < 1e-12);
    assert!((tri.observable().l1_norm() - 3.0).abs() < 1e-12);
    assert!((tri.c_min().unwrap() + 1.0 / 3.0).abs() < 1e-12);
    assert!((exact_min(tri.observable(), None).unwrap() + 1.0).abs() < 1e-12);

    let eight = build_maxcut(MaxCutSpec {
        graph: Graph::complete(4),
        d: 8,
        edge_prob: 1.0,
    })
    .unwrap();
    assert_eq!(eight.n_params(), 16);

    let empty = MaxCutSpec {
        graph: Graph::new(3, []).unwrap(),
        d: 1,
        edge_prob: 0.0,
    };
    assert!(build_maxcut(empty).is_err());
    assert!(Graph::new(3, [(1, 1)]).is_err());
    assert!(Graph::new(3, [(0, 3)]).is_err());
}

#[test]
fn graph_json_round_trip() {
    let g = Graph::new(5, [(0, 1), (3, 2), (1, 4)]).unwrap();
    let back = Graph::from_json(&g.to_json().unwrap()).unwrap();
    assert_eq!(g, back);
}

#[test]
fn erdos_renyi_edge_counts() {
    let mut rng = rng_from_seed(5);
    let full = sample_erdos_renyi(6, 1.0, &mut rng, EmptyGraphPolicy::Resample).unwrap();
    assert_eq!(full.edges.len(), 15);
    let none = sample_erdos_renyi(6, 0.0, &mut rng, EmptyGraphPolicy::Accept).unwrap();
    assert!(none.edges.is_empty());

    let total: usize = (0..10_000)
        .map(|_| sample_erdos_renyi(6, 0.5, &mut rng, EmptyGraphPolicy::Accept).unwrap().edges.len())
        .sum();
    let mean = total as f64 / 1e4;
    assert!((mean - 7.5).abs() < 0.3, "{mean}");
}

fn within_three_sigma(counts: &[usize], p: f64, total: usize) -> bool {
    let mean = p * total as f64;
    let sigma = (total as f64 * p * (1.0 - p)).sqrt();
    counts.iter().all(|&c| (c as f64 - mean).abs() <= 3.0 * sigma)
}

#[test]
fn sampler_marginals_are_uniform() {
    let cfg = DistributionConfig::new(
        FamilyDistribution::StatePrep {
            n: [1, 8],
            d: [1, 8],
            p: None,
        },
        0,
    );
    let mut rng = rng_from_seed(13);
    let total = 10_000;
    let mut n_counts = [0usize; 8];
    let mut d_counts = [0usize; 8];
    let mut top_half = 0usize;
    let mut even_n = 0usize;
    for _ in 0..total {
        let ProblemSpec::StatePrep(s) = cfg.sample_spec(&mut rng).unwrap() else {
            panic!("wrong family")
        };
        assert!((1..=s.n).contains(&s.p));
        n_counts[s.n - 1] += 1;
        d_counts[s.d - 1] += 1;
        if s.n % 2 == 0 {
            even_n += 1;
            if s.p > s.n / 2 {
                top_half += 1;
            }
        }
    }
    assert!(within_three_sigma(&n_counts, 1.0 / 8.0, total));
    assert!(within_three_sigma(&d_counts, 1.0 / 8.0, total));
    // p uniform on [1, n]: exactly half of each even-n range lies above n/2
    assert!(within_three_sigma(&[top_half], 0.5, even_n));
}

#[test]
fn continuous_ranges_are_respected() {
    let fhm = DistributionConfig::new(
        FamilyDistribution::Fhm {
            l: [1, 3],
            d: [1, 2],
            u: [0.0, 10.0],
        },
        0,
    );
    let qaoa = DistributionConfig::new(
        FamilyDistribution::MaxCut {
            n: [2, 6],
            d: [1, 3],
            edge_prob: [0.3, 0.9],
        },
        0,
    );
    let mut rng = rng_from_seed(1);
    let mut us = Vec::new();
    for _ in 0..2000 {
        match fhm.sample_spec(&mut rng).unwrap() {
            ProblemSpec::Fhm(s) => {
                assert!((0.0..=10.0).contains(&s.u));
                us.push(s.u);
            }
            _ => panic!(),
        }
        match qaoa.sample_spec(&mut rng).unwrap() {
            ProblemSpec::MaxCut(s) => {
                assert!((0.3..=0.9).contains(&s.edge_prob));
                assert!(!s.graph.edges.is_empty());
            }
            _ => panic!(),
        }
    }
    let mean = us.iter().sum::<f64>() / us.len() as f64;
    assert!((mean - 5.0).abs() < 0.3);

    let bad = DistributionConfig::new(
        FamilyDistribution::StatePrep {
            n: [3, 2],
            d: [1, 1],
            p: None,
        },
        0,
    );
    assert!(matches!(bad.validate(), Err(flip_core::FlipError::Config(_))));
    let mut rng = rng_from_seed(0);
    assert!(sample_problem(&bad, &mut rng).is_err());
}

#[test]
fn sample_problems_is_reproducible() {
    let cfg = DistributionConfig::new(
        FamilyDistribution::MaxCut {
            n: [3, 6],
            d: [1, 4],
            edge_prob: [0.3, 0.9],
        },
        99,
    );
    let a = sample_problems(&cfg, 10).unwrap();
    let b = sample_problems(&cfg, 10).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.spec(), y.spec());
    }
}

#[test]
fn spec_json_round_trip() {
    let specs = [
        ProblemSpec::StatePrep(StatePrepSpec { n: 3, d: 2, p: 1 }),
        ProblemSpec::Fhm(FhmSpec { l: 2, u: 1.5, d: 3 }),
        ProblemSpec::MaxCut(MaxCutSpec {
            graph: Graph::complete(3),
            d: 2,
            edge_prob: 0.5,
        }),
    ];
    for s in specs {
        let json = serde_json::to_string(&s).unwrap();
        let back: ProblemSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(s, back);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn maxcut_min_matches_brute_force(seed in any::<u64>(), n in 2usize..=12, e in 0.2f64..1.0) {
        let mut rng = rng_from_seed(seed);
        let g = sample_erdos_renyi(n, e, &mut rng, EmptyGraphPolicy::Resample).unwrap();
        let m = g.edges.len() as f64;
        let cut = g.max_cut_brute_force() as f64;
        let obs = maxcut_observable(&g).unwrap();
        let got = exact_min(&obs, None).unwrap();
        prop_assert!((got - (-m + 2.0 * (m - cut))).abs() < 1e-9);
    }

    #[test]
    fn projector_l1_is_one(n in 1usize..=8, t in any::<u64>()) {
        let obs = projector_observable(n, t % (1 << n)).unwrap();
        prop_assert!((obs.l1_norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pauli_display_round_trips(x in 0u64..256, z in 0u64..256) {
        let ops: Vec<(usize, Pauli)> = (0..8).filter_map(|q| match (x >> q & 1, z >> q & 1) {
            (1, 0) => Some((q, Pauli::X)),
            (1, 1) => Some((q, Pauli::Y)),
            (0, 1) => Some((q, Pauli::Z)),
            _ => None,
        }).collect();
        let p = PauliString::from_ops(&ops).unwrap();
        let back: PauliString = p.to_string().parse().unwrap();
        prop_assert_eq!(p, back);
    }
}
