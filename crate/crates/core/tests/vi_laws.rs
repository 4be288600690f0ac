//! Algebraic laws of the two value iterations.

mod common;

use common::{general_game, rng, uniform_kind};
use mosg::corpus::random_game;
use mosg::oracle::{forall_exists_oracle, DEFAULT_GUARD};
use mosg::polytope::{rat, DwcPolytope, Rational};
use mosg::vi::{
    cq_step, dq_step, initial_element, intersections, prune, run_forall_exists_vi, singleton_families, Mode, ValueMap,
};
use mosg::{Game, Kind};
use proptest::prelude::*;
use rand::Rng;

fn random_values(g: &Game, seed: u64) -> ValueMap {
    let mut r = rng(seed);
    (0..g.len())
        .map(|_| {
            let n = r.gen_range(1..=3);
            let pts: Vec<Vec<Rational>> =
                (0..n).map(|_| (0..2).map(|_| rat(r.gen_range(0..=6), 6)).collect()).collect();
            DwcPolytope::from_points(pts).unwrap()
        })
        .collect()
}

fn small_sink_game(seed: u64) -> (Game, mosg::QueryTemplate) {
    let m = 4 + (seed % 4) as usize;
    let l = 1 + (seed % 2) as usize;
    random_game(m, l.min((m - 1) / 2), seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn intersection_of_singleton_step_is_the_standard_step(seed in any::<u64>()) {
        let (g, _) = general_game(seed, 6, 3);
        let x = random_values(&g, seed ^ 7);
        prop_assert_eq!(intersections(&dq_step(&g, &singleton_families(&x))), cq_step(&g, &x).unwrap());
    }

    #[test]
    fn pruning_commutes_with_the_family_step(seed in any::<u64>(), k in 1usize..=4) {
        let (g, q) = small_sink_game(seed);
        let x0 = singleton_families(&initial_element(&g, &q));
        let (mut plain, mut mu) = (x0.clone(), x0);
        for _ in 0..k {
            plain = dq_step(&g, &plain);
            mu = prune(&dq_step(&g, &mu));
        }
        prop_assert_eq!(prune(&plain), mu);
        let pruned = run_forall_exists_vi(&g, &q, Mode::Horizon(k), true).unwrap();
        let unpruned = run_forall_exists_vi(&g, &q, Mode::Horizon(k), false).unwrap();
        prop_assert_eq!(pruned.values, unpruned.values);
    }

    #[test]
    fn family_iteration_matches_the_oracle(seed in any::<u64>(), k in 1usize..=4) {
        let m = 3 + (seed % 4) as usize;
        let (g, q) = random_game(m, 1, seed).unwrap();
        let vi = run_forall_exists_vi(&g, &q, Mode::Horizon(k), true).unwrap();
        prop_assert_eq!(vi.initial_value(), &forall_exists_oracle(&g, &q, k, DEFAULT_GUARD).unwrap());
    }

    #[test]
    fn horizons_are_monotone(seed in any::<u64>()) {
        let (g, q) = small_sink_game(seed);
        for (kind, growing) in [(Kind::Reach, true), (Kind::Safety, false)] {
            let uq = uniform_kind(&g, &q, kind);
            let mut x = initial_element(&g, &uq);
            for _ in 0..6 {
                let next = cq_step(&g, &x).unwrap();
                for s in 0..g.len() {
                    let ok = if growing { x[s].is_subset(&next[s]) } else { next[s].is_subset(&x[s]) };
                    prop_assert!(ok.unwrap(), "{:?} not monotone at state {}", kind, s);
                }
                x = next;
            }
        }
    }

    #[test]
    fn sinks_keep_their_values(seed in any::<u64>()) {
        let (g, q) = small_sink_game(seed);
        let x0 = initial_element(&g, &q);
        let sinks: Vec<usize> = (0..g.len()).filter(|&s| g.is_sink(s)).collect();
        let (mut x, mut fam) = (x0.clone(), singleton_families(&x0));
        for _ in 0..4 {
            x = cq_step(&g, &x).unwrap();
            fam = prune(&dq_step(&g, &fam));
            for &s in &sinks {
                prop_assert_eq!(&x[s], &x0[s]);
                prop_assert_eq!(fam[s].len(), 1);
                prop_assert_eq!(fam[s].iter().next().unwrap(), &x0[s]);
            }
        }
    }
}
