//! Brute-force semantics used as ground truth by the tests.
//!
//! Everything here works on the explicit history tree: strategies are maps
//! from histories to successors, and values are computed by recursing over
//! the tree rather than by iterating over states.

use std::collections::BTreeMap;

use dwc_polytope::rational::{one, zero};
use dwc_polytope::{DwcPolytope, Rational};
use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::model::{Game, Kind, Owner, QueryTemplate, StateId, ThresholdQuery};
use crate::vi::{initial_element, prepare, ValueMap};
use crate::{Error, Result};

pub const DEFAULT_GUARD: u128 = 1_000_000;

pub type History = Vec<StateId>;

/// Deterministic strategy over histories of bounded length.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KStepStrategy {
    pub owner: Owner,
    pub horizon: usize,
    pub choice: BTreeMap<History, StateId>,
}

impl KStepStrategy {
    pub fn choose(&self, h: &[StateId]) -> Option<StateId> {
        self.choice.get(h).copied()
    }
}

/// Graph-reachable histories from the initial state with at most `k − 1`
/// transitions that end in a state of `owner`.
pub fn owned_histories(g: &Game, owner: Owner, k: usize) -> Vec<History> {
    let mut out = Vec::new();
    if k == 0 {
        return out;
    }
    let mut layer = vec![vec![g.initial]];
    for depth in 0..k {
        for h in &layer {
            if g.owner(*h.last().unwrap()) == owner {
                out.push(h.clone());
            }
        }
        if depth + 1 == k {
            break;
        }
        layer = layer
            .iter()
            .flat_map(|h| {
                g.successors(*h.last().unwrap()).into_iter().map(move |t| {
                    let mut n = h.clone();
                    n.push(t);
                    n
                })
            })
            .collect();
    }
    out
}

/// Closed-form number of k-step strategies (saturating).
pub fn count_kstep(g: &Game, owner: Owner, k: usize) -> u128 {
    owned_histories(g, owner, k)
        .iter()
        .fold(1u128, |acc, h| acc.saturating_mul(g.successors(*h.last().unwrap()).len() as u128))
}

/// Every deterministic k-step strategy of `owner`, in odometer order.
pub fn enumerate_kstep(g: &Game, owner: Owner, k: usize, guard: u128) -> Result<KStepEnumerator> {
    let count = count_kstep(g, owner, k);
    if count > guard {
        return Err(Error::Guard { count, bound: guard });
    }
    let histories = owned_histories(g, owner, k);
    let options: Vec<Vec<StateId>> = histories.iter().map(|h| g.successors(*h.last().unwrap())).collect();
    Ok(KStepEnumerator { owner, horizon: k, histories, options, digits: None, done: false })
}

#[derive(Debug, Clone)]
pub struct KStepEnumerator {
    owner: Owner,
    horizon: usize,
    histories: Vec<History>,
    options: Vec<Vec<StateId>>,
    digits: Option<Vec<usize>>,
    done: bool,
}

impl Iterator for KStepEnumerator {
    type Item = KStepStrategy;

    fn next(&mut self) -> Option<KStepStrategy> {
        if self.done {
            return None;
        }
        match &mut self.digits {
            None => self.digits = Some(vec![0; self.histories.len()]),
            Some(d) => {
                let mut i = 0;
                loop {
                    if i == d.len() {
                        self.done = true;
                        return None;
                    }
                    d[i] += 1;
                    if d[i] < self.options[i].len() {
                        break;
                    }
                    d[i] = 0;
                    i += 1;
                }
            }
        }
        let d = self.digits.as_ref().unwrap();
        let choice = self.histories.iter().zip(d).zip(&self.options).map(|((h, &i), o)| (h.clone(), o[i])).collect();
        Some(KStepStrategy { owner: self.owner, horizon: self.horizon, choice })
    }
}

/// Strategies of `owner` defined only on histories consistent with their own
/// earlier choices, up to `depth` transitions (or to sinks when `None`). Every
/// full k-step strategy agrees with exactly one of these on all plays it can
/// produce, so evaluations over the two sets coincide.
pub fn strategy_trees(g: &Game, owner: Owner, depth: usize, guard: u128) -> Result<Vec<KStepStrategy>> {
    let mut out = Vec::new();
    let mut current = BTreeMap::new();
    let mut work = vec![(vec![g.initial], depth)];
    expand(g, owner, depth, &mut work, &mut current, &mut out, guard)?;
    Ok(out)
}

fn expand(
    g: &Game,
    owner: Owner,
    horizon: usize,
    work: &mut Vec<(History, usize)>,
    current: &mut BTreeMap<History, StateId>,
    out: &mut Vec<KStepStrategy>,
    guard: u128,
) -> Result<()> {
    let Some((h, r)) = work.pop() else {
        if out.len() as u128 >= guard {
            return Err(Error::Guard { count: out.len() as u128 + 1, bound: guard });
        }
        out.push(KStepStrategy { owner, horizon, choice: current.clone() });
        return Ok(());
    };
    let s = *h.last().unwrap();
    if r == 0 || g.is_sink(s) {
        expand(g, owner, horizon, work, current, out, guard)?;
        work.push((h, r));
        return Ok(());
    }
    let succ = g.successors(s);
    let child = |t: StateId| {
        let mut n = h.clone();
        n.push(t);
        (n, r - 1)
    };
    if g.owner(s) == owner {
        for &t in &succ {
            current.insert(h.clone(), t);
            work.push(child(t));
            expand(g, owner, horizon, work, current, out, guard)?;
            work.pop();
        }
        current.remove(&h);
    } else {
        let before = work.len();
        work.extend(succ.iter().map(|&t| child(t)));
        expand(g, owner, horizon, work, current, out, guard)?;
        work.truncate(before);
    }
    work.push((h, r));
    Ok(())
}

/// Pareto set of the maximiser after fixing `fixed`'s strategy, evaluated on
/// the history tree for `k` steps starting from `init` values at the leaves.
fn tree_value(g: &Game, x0: &ValueMap, fixed: &KStepStrategy, h: &mut History, r: usize) -> DwcPolytope {
    let s = *h.last().unwrap();
    if r == 0 || g.is_sink(s) {
        return x0[s].clone();
    }
    let owner = g.owner(s);
    let recurse = |h: &mut History, t: StateId| {
        h.push(t);
        let v = tree_value(g, x0, fixed, h, r - 1);
        h.pop();
        v
    };
    if owner == fixed.owner {
        let t = fixed.choose(h).expect("strategy covers every reachable history");
        return recurse(h, t);
    }
    match owner {
        Owner::Random => {
            let parts: Vec<(Rational, DwcPolytope)> =
                g.distribution(s).to_vec().into_iter().map(|(t, p)| (p, recurse(h, t))).collect();
            let terms: Vec<(Rational, &DwcPolytope)> = parts.iter().map(|(p, v)| (p.clone(), v)).collect();
            DwcPolytope::weighted_combination(&terms).expect("distribution is valid")
        }
        _ => {
            let mut acc: Option<DwcPolytope> = None;
            for t in g.successors(s) {
                let v = recurse(h, t);
                acc = Some(match acc {
                    None => v,
                    Some(a) => a.convex_union(&v).expect("dimensions agree"),
                });
            }
            acc.unwrap()
        }
    }
}

/// Eve's exactly achievable horizon-`k` set once Adam plays `strat`.
pub fn induced_pareto(g: &Game, strat: &KStepStrategy, q: &QueryTemplate, k: usize) -> Result<DwcPolytope> {
    if strat.owner != Owner::Adam {
        return Err(Error::Unsupported("induced_pareto fixes an Adam strategy".into()));
    }
    let x0 = initial_element(g, q);
    Ok(tree_value(g, &x0, strat, &mut vec![g.initial], k))
}

/// Intersection of Eve's induced sets over all deterministic Adam strategies
/// on the horizon-`k` history tree.
pub fn forall_exists_oracle(g: &Game, q: &QueryTemplate, k: usize, guard: u128) -> Result<DwcPolytope> {
    let p = prepare(g, q)?;
    let x0 = initial_element(&p.game, &p.query);
    let mut acc: Option<DwcPolytope> = None;
    for strat in strategy_trees(&p.game, Owner::Adam, k, guard)? {
        let v = tree_value(&p.game, &x0, &strat, &mut vec![p.game.initial], k);
        acc = Some(match acc {
            None => v,
            Some(a) => a.intersect(&v)?,
        });
    }
    Ok(acc.expect("at least one strategy exists"))
}

/// Standard (Eve-first) semantics of a sink DQ on an acyclic game.
///
/// For each deterministic Eve strategy, Adam's achievable set for the dual
/// objectives is computed on the history tree; Eve's strategy wins iff no
/// point of it strictly exceeds `1 − x`.
pub fn dq_standard_oracle(g: &Game, dq: &ThresholdQuery, guard: u128) -> Result<bool> {
    Ok(dq_standard_witness(g, dq, guard)?.is_some())
}

/// A winning deterministic Eve strategy, if any.
pub fn dq_standard_witness(g: &Game, dq: &ThresholdQuery, guard: u128) -> Result<Option<KStepStrategy>> {
    let depth = g.depth().ok_or_else(|| Error::Unsupported("dq_standard_oracle needs an acyclic game".into()))?;
    if !crate::model::classify(g, &dq.template).is_sink_query {
        return Err(Error::QueryClass("dq_standard_oracle needs a sink query".into()));
    }
    let dual = dq.template.dual(g);
    let x0 = initial_element(g, &dual);
    let y: Vec<Rational> = dq.thresholds.iter().map(|x| one() - x).collect();
    for strat in strategy_trees(g, Owner::Eve, depth, guard)? {
        let adam = tree_value(g, &x0, &strat, &mut vec![g.initial], depth);
        if !adam.contains_point(&y, true)? {
            return Ok(Some(strat));
        }
    }
    Ok(None)
}

/// Probability of each objective within `k` steps when both players follow
/// history-dependent deterministic choices; leaving the horizon counts as
/// safe and as not reaching.
pub fn horizon_probabilities(
    g: &Game,
    q: &QueryTemplate,
    k: usize,
    choose: &dyn Fn(&[StateId]) -> StateId,
) -> Vec<Rational> {
    #[allow(clippy::too_many_arguments)]
    fn go(
        g: &Game,
        q: &QueryTemplate,
        h: &mut History,
        r: usize,
        mass: Rational,
        seen: u64,
        choose: &dyn Fn(&[StateId]) -> StateId,
        acc: &mut [Rational],
    ) {
        let s = *h.last().unwrap();
        let seen = q.objectives.iter().enumerate().filter(|(_, o)| o.marks(s)).fold(seen, |b, (i, _)| b | (1 << i));
        if r == 0 {
            for (i, o) in q.objectives.iter().enumerate() {
                let hit = seen & (1 << i) != 0;
                if hit == (o.kind == Kind::Reach) {
                    acc[i] += &mass;
                }
            }
            return;
        }
        let moves: Vec<(StateId, Rational)> = match g.owner(s) {
            Owner::Random => g.distribution(s).to_vec(),
            _ => vec![(choose(h), one())],
        };
        for (t, p) in moves {
            h.push(t);
            go(g, q, h, r - 1, &mass * p, seen, choose, acc);
            h.pop();
        }
    }
    let mut acc = vec![zero(); q.dim()];
    go(g, q, &mut vec![g.initial], k, one(), 0, choose, &mut acc);
    acc
}

/// Ultimately periodic bit string `u v v v …`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitWord {
    pub prefix: Vec<bool>,
    pub period: Vec<bool>,
}

impl BitWord {
    pub fn parse(prefix: &str, period: &str) -> Result<Self> {
        let bits = |s: &str| {
            s.chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    other => Err(Error::Parse(format!("bit string contains {other:?}"))),
                })
                .collect::<Result<Vec<bool>>>()
        };
        let period = bits(period)?;
        if period.is_empty() {
            return Err(Error::Parse("period must be nonempty".into()));
        }
        Ok(BitWord { prefix: bits(prefix)?, period })
    }

    pub fn bit(&self, i: usize) -> bool {
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.period[(i - self.prefix.len()) % self.period.len()]
        }
    }
}

fn bits_value(bits: &[bool]) -> BigInt {
    bits.iter().fold(BigInt::zero(), |acc, &b| acc * 2 + if b { 1 } else { 0 })
}

/// The rational `0.u(v)^ω` in binary.
pub fn ultimately_periodic_prob(w: &BitWord) -> Rational {
    let two = BigInt::from(2);
    let period_den = num_traits::pow(two.clone(), w.period.len()) - BigInt::one();
    let tail = Rational::new(bits_value(&w.period), period_den);
    let scale = Rational::from_integer(num_traits::pow(two, w.prefix.len()));
    (Rational::from_integer(bits_value(&w.prefix)) + tail) / scale
}

/// Exact probability of reaching `target` within `rounds` visits of the
/// chooser state `hub` when its i-th visit follows `choice(i)` (the
/// successor index), in a game whose only owned state is `hub`.
pub fn simulate_counter_strategy(
    g: &Game,
    hub: StateId,
    target: StateId,
    rounds: usize,
    choice: &dyn Fn(usize) -> usize,
) -> Rational {
    // Distribution over (state, visits to hub so far).
    let mut dist: BTreeMap<(StateId, usize), Rational> = BTreeMap::from([((g.initial, 0), one())]);
    let mut reached = zero();
    loop {
        let mut next: BTreeMap<(StateId, usize), Rational> = BTreeMap::new();
        for ((s, v), p) in dist {
            if s == target {
                reached += p;
                continue;
            }
            if g.is_sink(s) {
                continue;
            }
            if s == hub {
                if v == rounds {
                    continue;
                }
                let t = g.successors(s)[choice(v)];
                *next.entry((t, v + 1)).or_insert_with(zero) += p;
            } else {
                for (t, q) in g.distribution(s) {
                    *next.entry((*t, v)).or_insert_with(zero) += &p * q;
                }
            }
        }
        if next.is_empty() {
            return reached;
        }
        dist = next;
    }
}
