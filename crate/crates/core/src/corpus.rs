//! Named example games, reductions, a seeded random-game generator and the
//! pruning experiment.
//!
//! Random games use `Xoshiro256PlusPlus` (rand_xoshiro 0.6) seeded with
//! `seed_from_u64`, so a seed identifies the same game on every platform.

use std::collections::BTreeSet;
use std::io::Write;
use std::time::{Duration, Instant};

use dwc_polytope::rational::{half, one};
use dwc_polytope::{rat, Rational};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::Serialize;

use crate::model::{
    validate, Connective, Game, GameBuilder, Kind, Objective, Owner, QueryTemplate, StateId, ThresholdQuery,
};
use crate::vi::{iterate_families, Limits, Mode, Status};
use crate::{Error, Result};

pub const NAMES: &[&str] = &[
    "intro",
    "det-strat-mem",
    "inf-mem",
    "no-analog-left",
    "no-analog-right",
    "flower",
    "penalty",
    "three-stage",
    "floor-heating",
];

/// Builds a named construction; `n` is the size parameter where one exists.
pub fn build_named(name: &str, n: Option<usize>) -> Result<(Game, QueryTemplate)> {
    let need = |default: usize| n.unwrap_or(default);
    let out = match name {
        "intro" => intro(),
        "det-strat-mem" => det_strat_mem(),
        "inf-mem" => inf_mem(),
        "no-analog-left" => no_analog_left(),
        "no-analog-right" => no_analog_right(),
        "flower" => flower(need(2))?,
        "penalty" => penalty(need(2))?,
        "three-stage" => three_stage(need(2))?,
        "floor-heating" => floor_heating(),
        other => {
            return Err(Error::Unsupported(format!("unknown construction {other:?}; known: {}", NAMES.join(", "))))
        }
    };
    debug_assert!(validate(&out.0).is_empty());
    Ok(out)
}

fn reach2(
    t1: impl IntoIterator<Item = StateId>,
    t2: impl IntoIterator<Item = StateId>,
    c: Connective,
) -> QueryTemplate {
    QueryTemplate::new(c, vec![Objective::reach(t1), Objective::reach(t2)])
}

/// Random root splitting evenly between an Eve and an Adam state, each
/// choosing between two target sinks. Query: reach T1 or reach T2.
pub fn intro() -> (Game, QueryTemplate) {
    let mut b = GameBuilder::new();
    let s0 = b.state("s0", Owner::Random);
    let s1 = b.state("s1", Owner::Eve);
    let s2 = b.state("s2", Owner::Adam);
    let t1 = b.sink("T1");
    let t2 = b.sink("T2");
    b.prob(s0, s1, half()).prob(s0, s2, half());
    b.edge(s1, t1).edge(s1, t2).edge(s2, t1).edge(s2, t2);
    (b.build(s0), reach2([t1], [t2], Connective::Or))
}

/// Adam picks one of two coin states; each coin either ends in a target or
/// hands over to one shared Eve state choosing between the two targets.
pub fn det_strat_mem() -> (Game, QueryTemplate) {
    let mut b = GameBuilder::new();
    let s0 = b.state("s0", Owner::Adam);
    let pa = b.state("pa", Owner::Random);
    let pb = b.state("pb", Owner::Random);
    let s1 = b.state("s1", Owner::Eve);
    let t1a = b.sink("T1a");
    let t2b = b.sink("T2b");
    let t1c = b.sink("T1c");
    let t2d = b.sink("T2d");
    b.edge(s0, pa).edge(s0, pb);
    b.prob(pa, t1a, half()).prob(pa, s1, half());
    b.prob(pb, t2b, half()).prob(pb, s1, half());
    b.edge(s1, t1c).edge(s1, t2d);
    (b.build(s0), reach2([t1a, t1c], [t2b, t2d], Connective::Or))
}

/// Eve repeatedly picks one of two coins; each coin ends in its target or
/// returns to her with probability ½. Query: reach T1 and reach T2.
pub fn inf_mem() -> (Game, QueryTemplate) {
    let mut b = GameBuilder::new();
    let s = b.state("s", Owner::Eve);
    let c1 = b.state("t1", Owner::Random);
    let c2 = b.state("t2", Owner::Random);
    let t1 = b.sink("T1");
    let t2 = b.sink("T2");
    b.edge(s, c1).edge(s, c2);
    b.prob(c1, s, half()).prob(c1, t1, half());
    b.prob(c2, s, half()).prob(c2, t2, half());
    (b.build(s), reach2([t1], [t2], Connective::And))
}

/// Two roots sharing the targets: `s0` splits between an Eve and an Adam
/// chooser, `t0` between a safe Eve sink and an Adam chooser. The initial
/// state is `s0`; use [`Game::with_initial`] with `t0` for the other root.
/// Query: avoid T1 or avoid T2.
pub fn no_analog_left() -> (Game, QueryTemplate) {
    let mut b = GameBuilder::new();
    let s0 = b.state("s0", Owner::Random);
    let s1 = b.state("s1", Owner::Eve);
    let s2 = b.state("s2", Owner::Adam);
    let t0 = b.state("t0", Owner::Random);
    let t1 = b.state("t1", Owner::Eve);
    let t2 = b.state("t2", Owner::Adam);
    let x1 = b.sink("T1");
    let x2 = b.sink("T2");
    b.prob(s0, s1, half()).prob(s0, s2, half());
    b.edge(s1, x1).edge(s1, x2).edge(s2, x1).edge(s2, x2);
    b.prob(t0, t1, half()).prob(t0, t2, half());
    b.edge(t1, t1);
    b.edge(t2, x1).edge(t2, x2);
    let g = b.build(s0);
    let q = QueryTemplate::new(Connective::Or, vec![Objective::avoid(&g, [x1]), Objective::avoid(&g, [x2])]);
    (g, q)
}

/// Random root splitting between an Eve chooser (T1 or T2) and an Adam
/// chooser (T1, T2 or a sink in both). Query: reach T1 and reach T2.
pub fn no_analog_right() -> (Game, QueryTemplate) {
    let mut b = GameBuilder::new();
    let s0 = b.state("s0", Owner::Random);
    let s1 = b.state("s1", Owner::Eve);
    let s2 = b.state("s2", Owner::Adam);
    let t1 = b.sink("T1");
    let t2 = b.sink("T2");
    let t12 = b.sink("T12");
    b.prob(s0, s1, half()).prob(s0, s2, half());
    b.edge(s1, t1).edge(s1, t2);
    b.edge(s2, t1).edge(s2, t2).edge(s2, t12);
    (b.build(s0), reach2([t1, t12], [t2, t12], Connective::And))
}

/// Adam hub choosing one of `n` petals; at petal `i` Eve either visits
/// target `i` and returns to the hub, or ends in a sink lying in every other
/// target. Query: reach every target.
pub fn flower(n: usize) -> Result<(Game, QueryTemplate)> {
    if n == 0 || n > 16 {
        return Err(Error::Unsupported("flower needs 1 ≤ n ≤ 16".into()));
    }
    let mut b = GameBuilder::new();
    let hub = b.state("hub", Owner::Adam);
    let mut petals = Vec::new();
    for i in 1..=n {
        let e = b.state(format!("e{i}"), Owner::Eve);
        let t = b.state(format!("t{i}"), Owner::Random);
        let nt = b.sink(format!("nt{i}"));
        b.edge(hub, e).edge(e, t).edge(e, nt).prob(t, hub, one());
        petals.push((t, nt));
    }
    let objectives = (0..n)
        .map(|i| {
            let others = petals.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, p)| p.1);
            Objective::reach(std::iter::once(petals[i].0).chain(others))
        })
        .collect();
    Ok((b.build(hub), QueryTemplate::new(Connective::And, objectives)))
}

/// Proper subsets of `{0..n}` as bitmasks, in increasing order.
fn proper_subsets(n: usize) -> Vec<u32> {
    (0..(1u32 << n) - 1).collect()
}

fn mask_label(mask: u32, n: usize) -> String {
    let items: Vec<String> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", items.join(","))
}

/// Penalty probability for committing to a set of `size` targets.
pub fn penalty_schedule(size: usize, n: usize) -> Rational {
    rat(size as i64, 2 * n as i64)
}

/// Nature visits a random proper subset of targets, Eve names a proper
/// subset, a coin biased by [`penalty_schedule`] visits every target, and
/// otherwise Adam visits at most `n − |named| − 1` further targets.
/// Query: avoid T_i for some i.
pub fn penalty(n: usize) -> Result<(Game, QueryTemplate)> {
    if n == 0 || n > 6 {
        return Err(Error::Unsupported("penalty needs 1 ≤ n ≤ 6".into()));
    }
    let mut b = GameBuilder::new();
    let mut member: Vec<(StateId, u32)> = Vec::new();
    let subsets = proper_subsets(n);
    let a = b.state("A", Owner::Random);
    let stage_b = b.state("B", Owner::Eve);
    let p = rat(1, subsets.len() as i64);
    for &x in &subsets {
        let v = b.state(format!("A{}", mask_label(x, n)), Owner::Random);
        member.push((v, x));
        b.prob(a, v, p.clone()).prob(v, stage_b, one());
    }
    let all = b.sink("all");
    member.push((all, (1 << n) - 1));
    let mut w = std::collections::BTreeMap::new();
    for &z in &subsets {
        let s = b.sink(format!("C{}", mask_label(z, n)));
        member.push((s, z));
        w.insert(z, s);
    }
    let mut coins = Vec::new();
    for j in 0..n {
        let c = b.state(format!("coin{j}"), Owner::Random);
        let d = b.state(format!("C{j}"), Owner::Adam);
        let pen = penalty_schedule(j, n);
        if pen > Rational::from_integer(0.into()) {
            b.prob(c, all, pen.clone());
        }
        b.prob(c, d, one() - pen);
        for (&z, &s) in &w {
            if (z.count_ones() as usize) < n - j {
                b.edge(d, s);
            }
        }
        coins.push(c);
    }
    for &y in &subsets {
        let u = b.state(format!("B{}", mask_label(y, n)), Owner::Random);
        member.push((u, y));
        b.edge(stage_b, u);
        b.prob(u, coins[y.count_ones() as usize], one());
    }
    let g = b.build(a);
    let objectives = (0..n)
        .map(|i| Objective::avoid(&g, member.iter().filter(|(_, m)| m & (1 << i) != 0).map(|(s, _)| *s)))
        .collect();
    Ok((g, QueryTemplate::new(Connective::Or, objectives)))
}

fn subsets_of_size(n: usize, k: usize) -> Vec<u32> {
    (0..1u32 << n).filter(|m| m.count_ones() as usize == k).collect()
}

/// Adam names `q = n/2` targets (visited with probability ½), Eve names `q`
/// targets (visited with probability ½ of the rest), Adam finally visits
/// `q + 1` targets. Query: reach T_i for some i.
pub fn three_stage(n: usize) -> Result<(Game, QueryTemplate)> {
    if n == 0 || !n.is_multiple_of(2) || n > 8 {
        return Err(Error::Unsupported("three-stage needs an even n with 2 ≤ n ≤ 8".into()));
    }
    let q = n / 2;
    let mut b = GameBuilder::new();
    let mut member: Vec<(StateId, u32)> = Vec::new();
    let a = b.state("A", Owner::Adam);
    let stage_b = b.state("B", Owner::Eve);
    let stage_c = b.state("C", Owner::Adam);
    for (stage, from, to, tag) in [(0, a, stage_b, "A"), (1, stage_b, stage_c, "B")] {
        let _ = stage;
        for x in subsets_of_size(n, q) {
            let r = b.state(format!("{tag}{}", mask_label(x, n)), Owner::Random);
            let s = b.sink(format!("{tag}!{}", mask_label(x, n)));
            member.push((s, x));
            b.edge(from, r).prob(r, s, half()).prob(r, to, half());
        }
    }
    for z in subsets_of_size(n, q + 1) {
        let s = b.sink(format!("C!{}", mask_label(z, n)));
        member.push((s, z));
        b.edge(stage_c, s);
    }
    let objectives =
        (0..n).map(|i| Objective::reach(member.iter().filter(|(_, m)| m & (1 << i) != 0).map(|(s, _)| *s))).collect();
    Ok((b.build(a), QueryTemplate::new(Connective::Or, objectives)))
}

/// Controller for two heating circuits that may run at most one at a time;
/// all coins are fair. Query: reach HH and never enter err.
pub fn floor_heating() -> (Game, QueryTemplate) {
    let mut b = GameBuilder::new();
    let cc = b.state("CC", Owner::Eve);
    let hc0 = b.state("HC", Owner::Adam);
    let ch0 = b.state("CH", Owner::Adam);
    let phc0 = b.state("pHC", Owner::Random);
    let pch0 = b.state("pCH", Owner::Random);
    let hc1 = b.state("HC'", Owner::Eve);
    let ch1 = b.state("CH'", Owner::Eve);
    let phc1 = b.state("pHC'", Owner::Random);
    let pch1 = b.state("pCH'", Owner::Random);
    let hh = b.sink("HH");
    let err = b.sink("err");
    b.edge(cc, hc0).edge(cc, ch0);
    b.edge(hc0, phc0).edge(hc0, hc1);
    b.edge(ch0, pch0).edge(ch0, ch1);
    b.prob(phc0, hc1, half()).prob(phc0, hh, half());
    b.prob(pch0, ch1, half()).prob(pch0, err, half());
    b.edge(hc1, phc1).edge(hc1, err);
    b.edge(ch1, err).edge(ch1, pch1);
    b.prob(phc1, hc0, half()).prob(phc1, hh, half());
    b.prob(pch1, hh, half()).prob(pch1, ch0, half());
    let g = b.build(cc);
    let q = QueryTemplate::new(Connective::And, vec![Objective::reach([hh]), Objective::avoid(&g, [err])]);
    (g, q)
}

// ---------------------------------------------------------------------------
// QBF
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantifier {
    Exists,
    Forall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Literal {
    pub var: usize,
    pub positive: bool,
}

/// Prenex formula with a DNF matrix; variables are quantified in prefix order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Qbf {
    pub prefix: Vec<(Quantifier, usize)>,
    pub matrix: Vec<Vec<Literal>>,
}

impl Qbf {
    fn check(&self) -> Result<()> {
        let vars: BTreeSet<usize> = self.prefix.iter().map(|p| p.1).collect();
        if vars.len() != self.prefix.len() || self.prefix.is_empty() {
            return Err(Error::Unsupported("prefix must quantify distinct variables".into()));
        }
        if self.matrix.is_empty() || self.matrix.iter().any(Vec::is_empty) {
            return Err(Error::Unsupported("matrix needs nonempty terms".into()));
        }
        if let Some(l) = self.matrix.iter().flatten().find(|l| !vars.contains(&l.var)) {
            return Err(Error::Unsupported(format!("variable {} is not quantified", l.var)));
        }
        Ok(())
    }

    /// Truth by exhaustive expansion of the quantifiers.
    pub fn evaluate(&self) -> bool {
        fn go(f: &Qbf, i: usize, assign: &mut Vec<(usize, bool)>) -> bool {
            if i == f.prefix.len() {
                return f
                    .matrix
                    .iter()
                    .any(|t| t.iter().all(|l| assign.iter().any(|&(v, b)| v == l.var && b == l.positive)));
            }
            let (q, v) = f.prefix[i];
            let mut branch = |b: bool| {
                assign.push((v, b));
                let r = go(f, i + 1, assign);
                assign.pop();
                r
            };
            match q {
                Quantifier::Exists => branch(true) || branch(false),
                Quantifier::Forall => branch(true) && branch(false),
            }
        }
        go(self, 0, &mut Vec::new())
    }

    /// `∃x1 ∀x2 ∃x3 (¬x1 ∧ x2 ∧ ¬x3) ∨ (¬x2 ∧ x3)`.
    pub fn example() -> Qbf {
        let lit = |var, positive| Literal { var, positive };
        Qbf {
            prefix: vec![(Quantifier::Exists, 1), (Quantifier::Forall, 2), (Quantifier::Exists, 3)],
            matrix: vec![vec![lit(1, false), lit(2, true), lit(3, false)], vec![lit(2, false), lit(3, true)]],
        }
    }
}

/// One chooser per variable (Eve for ∃, Adam for ∀) picking a literal coin;
/// each coin reveals its own target sink with probability ½ and otherwise
/// continues to the next variable (the last coins repeat themselves). The
/// sink of a literal lies in the target of every term that contains the
/// literal or does not mention its variable. Query: reach T_j for some j.
pub fn qbf_game(f: &Qbf) -> Result<(Game, QueryTemplate)> {
    f.check()?;
    let mut b = GameBuilder::new();
    let m = f.prefix.len();
    let choosers: Vec<StateId> = f
        .prefix
        .iter()
        .map(|&(q, v)| b.state(format!("s{v}"), if q == Quantifier::Exists { Owner::Eve } else { Owner::Adam }))
        .collect();
    let mut member: Vec<(StateId, usize)> = Vec::new();
    for (i, &(_, v)) in f.prefix.iter().enumerate() {
        for positive in [true, false] {
            let name = if positive { format!("x{v}") } else { format!("!x{v}") };
            let coin = b.state(name.clone(), Owner::Random);
            let sink = b.sink(format!("T[{name}]"));
            for (j, term) in f.matrix.iter().enumerate() {
                let mentions = term.iter().any(|l| l.var == v);
                let contains = term.contains(&Literal { var: v, positive });
                if contains || !mentions {
                    member.push((sink, j));
                }
            }
            let next = if i + 1 < m { choosers[i + 1] } else { coin };
            b.edge(choosers[i], coin);
            b.prob(coin, sink, half()).prob(coin, next, half());
        }
    }
    let objectives = (0..f.matrix.len())
        .map(|j| Objective::reach(member.iter().filter(|(_, t)| *t == j).map(|(s, _)| *s)))
        .collect();
    Ok((b.build(choosers[0]), QueryTemplate::new(Connective::Or, objectives)))
}

// ---------------------------------------------------------------------------
// CQ → DQ reduction
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionVariant {
    /// Thresholds 1; strategies correspond under deterministic strategies.
    Qualitative,
    /// Thresholds `½ + 1/(2n)`; correspondence under general strategies.
    QuantitativeGeneral,
    /// Thresholds `½·x_i + ½`; correspondence under deterministic strategies.
    QuantitativeDeterministic,
}

/// New Random root: with probability ½ the original game, otherwise Adam
/// picks one fresh target sink `t_i ∈ T_i`.
pub fn cq_to_dq_reduction(g: &Game, cq: &ThresholdQuery, variant: ReductionVariant) -> Result<(Game, ThresholdQuery)> {
    if cq.template.connective != Connective::And || !cq.template.all_of(Kind::Reach) {
        return Err(Error::QueryClass("reduction expects a reachability CQ".into()));
    }
    let n = cq.template.dim();
    let mut b = GameBuilder::new();
    for s in &g.states {
        b.state(s.label.clone(), s.owner);
    }
    for (s, mv) in g.moves.iter().enumerate() {
        for (t, p) in mv {
            b.prob(s, *t, p.clone());
        }
    }
    let root = b.state("root", Owner::Random);
    let pick = b.state("pick", Owner::Adam);
    b.prob(root, g.initial, half()).prob(root, pick, half());
    let mut objectives = cq.template.objectives.clone();
    for (i, o) in objectives.iter_mut().enumerate() {
        let t = b.sink(format!("t{}", i + 1));
        b.edge(pick, t);
        o.set.insert(t);
    }
    let thresholds = match variant {
        ReductionVariant::Qualitative => vec![one(); n],
        ReductionVariant::QuantitativeGeneral => vec![half() + rat(1, 2 * n as i64); n],
        ReductionVariant::QuantitativeDeterministic => cq.thresholds.iter().map(|x| half() * x + half()).collect(),
    };
    let template = QueryTemplate::new(Connective::Or, objectives);
    Ok((b.build(root), template.with_thresholds(thresholds)))
}

// ---------------------------------------------------------------------------
// Random games
// ---------------------------------------------------------------------------

/// `m` states with uniformly drawn owners and two distinct successors other
/// than the state itself (fair coins for Random states); `l` states become
/// target sinks and `l` further states unsafe sinks. Query: reach the
/// targets and avoid the unsafe states.
pub fn random_game(m: usize, l: usize, seed: u64) -> Result<(Game, QueryTemplate)> {
    if m < 3 || l == 0 || 2 * l >= m {
        return Err(Error::Unsupported(format!("random_game needs m ≥ 3 and 1 ≤ 2l < m (got m = {m}, l = {l})")));
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut b = GameBuilder::new();
    let owners = [Owner::Eve, Owner::Adam, Owner::Random];
    for s in 0..m {
        b.state(format!("q{s}"), owners[rng.gen_range(0..3)]);
    }
    let mut succ = Vec::with_capacity(m);
    for s in 0..m {
        let others: Vec<StateId> = (0..m).filter(|&t| t != s).collect();
        let pair: Vec<StateId> = others.choose_multiple(&mut rng, 2).copied().collect();
        succ.push(pair);
    }
    let mut order: Vec<StateId> = (0..m).collect();
    order.shuffle(&mut rng);
    let targets: BTreeSet<StateId> = order[..l].iter().copied().collect();
    let unsafe_states: BTreeSet<StateId> = order[l..2 * l].iter().copied().collect();
    let mut g = b.build(0);
    for (s, next) in succ.iter().enumerate() {
        g.moves[s] = if targets.contains(&s) || unsafe_states.contains(&s) {
            vec![(s, one())]
        } else {
            next.iter().map(|&t| (t, if g.owner(s) == Owner::Random { half() } else { one() })).collect()
        };
    }
    // Sinks are absorbing Random states regardless of the drawn owner.
    for s in targets.iter().chain(&unsafe_states) {
        g.states[*s].owner = Owner::Random;
    }
    g.initial = (0..m).find(|s| !targets.contains(s) && !unsafe_states.contains(s)).unwrap();
    let q = QueryTemplate::new(
        Connective::And,
        vec![Objective::reach(targets.iter().copied()), Objective::avoid(&g, unsafe_states.iter().copied())],
    );
    Ok((g, q))
}

/// Acyclic variant: states are ordered, every non-sink state moves to two
/// distinct later states, and the last three states are the sinks `A`, `B`
/// and `C`. Query: reach `A` and avoid `B`.
pub fn random_acyclic_game(m: usize, seed: u64) -> Result<(Game, QueryTemplate)> {
    if m < 5 {
        return Err(Error::Unsupported(format!("random_acyclic_game needs m ≥ 5 (got {m})")));
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut b = GameBuilder::new();
    let inner = m - 3;
    let owners = [Owner::Eve, Owner::Adam, Owner::Random];
    let drawn: Vec<Owner> = (0..inner).map(|_| owners[rng.gen_range(0..3)]).collect();
    let ids: Vec<StateId> = drawn.iter().enumerate().map(|(s, &o)| b.state(format!("q{s}"), o)).collect();
    let a = b.sink("A");
    let bad = b.sink("B");
    let _c = b.sink("C");
    for (i, &s) in ids.iter().enumerate() {
        let later: Vec<StateId> = ((i + 1)..m).collect();
        let pair: Vec<StateId> = later.choose_multiple(&mut rng, 2).copied().collect();
        for t in pair {
            if drawn[i] == Owner::Random {
                b.prob(s, t, half());
            } else {
                b.edge(s, t);
            }
        }
    }
    let g = b.build(ids[0]);
    let q = QueryTemplate::new(Connective::And, vec![Objective::reach([a]), Objective::avoid(&g, [bad])]);
    Ok((g, q))
}

// ---------------------------------------------------------------------------
// Experiment
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Number of instances to collect.
    pub instances: usize,
    pub m: usize,
    pub l: usize,
    pub seed: u64,
    pub horizons: Vec<usize>,
    pub timeout: Duration,
    /// Keep only instances where the pruned iteration ever holds more than
    /// one polytope at a state.
    pub hard_only: bool,
    /// Also run the unpruned iteration.
    pub compare_unpruned: bool,
    /// Candidates tried per collected instance before giving up.
    pub max_attempts_factor: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            instances: 100,
            m: 10,
            l: 1,
            seed: 0,
            horizons: (1..=10).collect(),
            timeout: Duration::from_secs(10),
            hard_only: true,
            compare_unpruned: true,
            max_attempts_factor: 100,
        }
    }
}

/// Per-instance, per-horizon, per-state record (one CSV line).
#[derive(Debug, Clone, Serialize)]
pub struct CsvRecord {
    pub instance_id: usize,
    pub seed: u64,
    pub k: usize,
    pub state: StateId,
    pub count_pruned: Option<usize>,
    pub count_unpruned: Option<usize>,
    pub timeout_pruned: bool,
    pub timeout_unpruned: bool,
    pub wall_ms: u128,
}

/// Aggregate over instances at one horizon.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRow {
    pub k: usize,
    /// Mean over instances where both runs completed of the per-state mean count.
    pub mean_pruned: Option<f64>,
    pub mean_unpruned: Option<f64>,
    pub completed_both: usize,
    pub timeouts_pruned: usize,
    pub timeouts_unpruned: usize,
    pub wall_ms: u128,
}

#[derive(Debug, Clone)]
pub struct InstanceRun {
    pub id: usize,
    pub seed: u64,
    pub states: usize,
    /// `counts[k][s]`; shorter than requested when the run stopped early.
    pub pruned: Vec<Vec<usize>>,
    pub unpruned: Option<Vec<Vec<usize>>>,
    pub pruned_wall: Duration,
    pub unpruned_wall: Duration,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub runs: Vec<InstanceRun>,
    pub rows: Vec<ExperimentRow>,
    pub records: Vec<CsvRecord>,
    /// Candidates generated (hard or not).
    pub attempts: usize,
    /// Candidates whose pruned families stayed singletons throughout.
    pub easy: usize,
}

fn run_counts(
    g: &Game,
    q: &QueryTemplate,
    horizon: usize,
    prune_each: bool,
    timeout: Duration,
) -> (Vec<Vec<usize>>, Duration) {
    let start = Instant::now();
    let limits = Limits::with_timeout(timeout);
    let (_, stats, status) = iterate_families(g, q, Mode::Horizon(horizon), prune_each, &limits);
    // A cap breach is treated like a timeout: the horizon was not finished.
    debug_assert!(matches!(status, Status::Completed | Status::TimedOut { .. } | Status::Truncated { .. }));
    (stats.counts, start.elapsed())
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let kmax = *cfg.horizons.iter().max().ok_or_else(|| Error::Unsupported("no horizons".into()))?;
    let mut runs = Vec::new();
    let mut attempts = 0;
    let mut easy = 0;
    let limit = cfg.instances.saturating_mul(cfg.max_attempts_factor.max(1));
    while runs.len() < cfg.instances && attempts < limit {
        let seed = cfg.seed.wrapping_add(attempts as u64);
        attempts += 1;
        let (g, q) = random_game(cfg.m, cfg.l, seed)?;
        let (pruned, pruned_wall) = run_counts(&g, &q, kmax, true, cfg.timeout);
        let hard = pruned.iter().any(|c| c.iter().any(|&n| n > 1)) || pruned.len() <= kmax;
        if !hard {
            easy += 1;
        }
        if cfg.hard_only && !hard {
            continue;
        }
        let (unpruned, unpruned_wall) = if cfg.compare_unpruned {
            let (u, w) = run_counts(&g, &q, kmax, false, cfg.timeout);
            (Some(u), w)
        } else {
            (None, Duration::ZERO)
        };
        runs.push(InstanceRun { id: runs.len(), seed, states: g.len(), pruned, unpruned, pruned_wall, unpruned_wall });
    }
    let mut records = Vec::new();
    for r in &runs {
        for &k in &cfg.horizons {
            let p = r.pruned.get(k);
            let u = r.unpruned.as_ref().and_then(|u| u.get(k));
            for s in 0..r.states {
                records.push(CsvRecord {
                    instance_id: r.id,
                    seed: r.seed,
                    k,
                    state: s,
                    count_pruned: p.map(|c| c[s]),
                    count_unpruned: u.map(|c| c[s]),
                    timeout_pruned: p.is_none(),
                    timeout_unpruned: cfg.compare_unpruned && u.is_none(),
                    wall_ms: (r.pruned_wall + r.unpruned_wall).as_millis(),
                });
            }
        }
    }
    let mean = |c: &[usize]| c.iter().sum::<usize>() as f64 / c.len() as f64;
    let rows = cfg
        .horizons
        .iter()
        .map(|&k| {
            let both: Vec<(&Vec<usize>, &Vec<usize>)> =
                runs.iter().filter_map(|r| Some((r.pruned.get(k)?, r.unpruned.as_ref()?.get(k)?))).collect();
            let avg = |xs: Vec<f64>| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
            ExperimentRow {
                k,
                mean_pruned: avg(both.iter().map(|(p, _)| mean(p)).collect()),
                mean_unpruned: avg(both.iter().map(|(_, u)| mean(u)).collect()),
                completed_both: both.len(),
                timeouts_pruned: runs.iter().filter(|r| r.pruned.get(k).is_none()).count(),
                timeouts_unpruned: runs
                    .iter()
                    .filter(|r| r.unpruned.as_ref().is_some_and(|u| u.get(k).is_none()))
                    .count(),
                wall_ms: runs.iter().map(|r| (r.pruned_wall + r.unpruned_wall).as_millis()).sum(),
            }
        })
        .collect();
    Ok(ExperimentReport { runs, rows, records, attempts, easy })
}

/// Writes the per-state records as CSV.
pub fn write_csv<W: Write>(records: &[CsvRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(|e| Error::Parse(format!("csv: {e}")))?;
    }
    w.flush().map_err(|e| Error::Parse(format!("csv: {e}")))?;
    Ok(())
}
