//! Seeded game generators shared by the property tests.

#![allow(dead_code)]

use mosg::polytope::{rat, Rational};
use mosg::{Connective, Game, GameBuilder, Kind, MdStrategy, Objective, Owner, QueryTemplate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Arbitrary valid game with 2..=`max_states` states: owners uniform, up to
/// `max_fan` distinct successors (self-loops allowed), Random weights in
/// 1..=3, roughly one state in five absorbing. Two objectives of random
/// kinds over random sets, joined by `And`.
pub fn general_game(seed: u64, max_states: usize, max_fan: usize) -> (Game, QueryTemplate) {
    let mut r = rng(seed);
    let n = r.gen_range(2..=max_states);
    let owners = [Owner::Eve, Owner::Adam, Owner::Random];
    let mut b = GameBuilder::new();
    let drawn: Vec<Owner> = (0..n).map(|_| owners[r.gen_range(0..3)]).collect();
    let ids: Vec<_> = drawn.iter().enumerate().map(|(i, &o)| b.state(format!("s{i}"), o)).collect();
    let all: Vec<usize> = (0..n).collect();
    for (&s, &owner) in ids.iter().zip(&drawn) {
        if r.gen_ratio(1, 5) {
            b.prob(s, s, rat(1, 1));
            continue;
        }
        let fan = r.gen_range(1..=max_fan.min(n));
        let succ: Vec<usize> = all.choose_multiple(&mut r, fan).copied().collect();
        let weights: Vec<i64> = succ.iter().map(|_| r.gen_range(1..=3)).collect();
        let total: i64 = weights.iter().sum();
        for (&t, &w) in succ.iter().zip(&weights) {
            if owner == Owner::Random {
                b.prob(s, t, rat(w, total));
            } else {
                b.edge(s, t);
            }
        }
    }
    let g = b.build(0);
    let objectives = (0..2)
        .map(|_| {
            if r.gen_bool(0.5) {
                Objective::reach(all.iter().copied().filter(|_| r.gen_bool(0.4)).collect::<Vec<_>>())
            } else {
                Objective::safety(all.iter().copied().filter(|_| r.gen_bool(0.7)))
            }
        })
        .collect();
    (g, QueryTemplate::new(Connective::And, objectives))
}

pub fn random_md(g: &Game, owner: Owner, r: &mut impl Rng) -> MdStrategy {
    let choice = g.states_of(owner).map(|s| (s, *g.successors(s).choose(r).unwrap())).collect();
    MdStrategy { owner, choice }
}

/// Same objectives with every kind replaced by `kind` over the sinks of `q`.
pub fn uniform_kind(g: &Game, q: &QueryTemplate, kind: Kind) -> QueryTemplate {
    let objectives = q
        .objectives
        .iter()
        .map(|o| {
            let goal = o.goal_states(g);
            match kind {
                Kind::Reach => Objective::reach(goal),
                Kind::Safety => Objective::avoid(g, goal),
            }
        })
        .collect();
    QueryTemplate::new(q.connective, objectives)
}

pub fn r(a: i64, b: i64) -> Rational {
    rat(a, b)
}
