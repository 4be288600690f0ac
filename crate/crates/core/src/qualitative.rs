//! Qualitative (probability-one) solving.
//!
//! Under general strategies a qualitative DQ holds iff one disjunct holds
//! alone, so it reduces to single-objective almost-sure regions. Under
//! deterministic strategies safety DQs need the bounded alternating search
//! in [`alternating_safety_det`].

use std::collections::{BTreeSet, HashMap};

use crate::model::{binarize, classify, lift_query, Connective, Game, Kind, Objective, Owner, StateId, ThresholdQuery};
use crate::oracle::{strategy_trees, KStepStrategy};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WinningRegion {
    pub objective: Objective,
    pub states: BTreeSet<StateId>,
}

impl WinningRegion {
    pub fn contains(&self, s: StateId) -> bool {
        self.states.contains(&s)
    }
}

/// States from which Eve can satisfy `obj` with probability one.
pub fn almost_sure_region(g: &Game, obj: &Objective) -> WinningRegion {
    let n = g.len();
    let succ: Vec<Vec<StateId>> = (0..n).map(|s| g.successors(s)).collect();
    let states = match obj.kind {
        Kind::Safety => {
            let mut w: Vec<bool> = (0..n).map(|s| obj.set.contains(&s)).collect();
            loop {
                let drop: Vec<StateId> = (0..n)
                    .filter(|&s| w[s])
                    .filter(|&s| match g.owner(s) {
                        Owner::Eve => !succ[s].iter().any(|&t| w[t]),
                        _ => !succ[s].iter().all(|&t| w[t]),
                    })
                    .collect();
                if drop.is_empty() {
                    break;
                }
                for s in drop {
                    w[s] = false;
                }
            }
            (0..n).filter(|&s| w[s]).collect()
        }
        Kind::Reach => {
            // νZ. μY. T ∪ {Eve: some succ in Y} ∪ {Adam: all succ in Y}
            //          ∪ {Random: all succ in Z and some succ in Y}, within Z.
            let mut z = vec![true; n];
            loop {
                let mut y: Vec<bool> = (0..n).map(|s| z[s] && obj.set.contains(&s)).collect();
                loop {
                    let add: Vec<StateId> = (0..n)
                        .filter(|&s| z[s] && !y[s])
                        .filter(|&s| match g.owner(s) {
                            Owner::Eve => succ[s].iter().any(|&t| y[t]),
                            Owner::Adam => succ[s].iter().all(|&t| y[t]),
                            Owner::Random => succ[s].iter().all(|&t| z[t]) && succ[s].iter().any(|&t| y[t]),
                        })
                        .collect();
                    if add.is_empty() {
                        break;
                    }
                    for s in add {
                        y[s] = true;
                    }
                }
                if y == z {
                    break;
                }
                z = y;
            }
            (0..n).filter(|&s| z[s]).collect()
        }
    };
    WinningRegion { objective: obj.clone(), states }
}

fn check_qualitative_dq(q: &ThresholdQuery) -> Result<()> {
    if q.template.connective != Connective::Or {
        return Err(Error::QueryClass("expected a disjunctive query".into()));
    }
    if !q.is_qualitative() {
        return Err(Error::QueryClass("qualitative solving needs all thresholds equal to 1 (non-strict)".into()));
    }
    Ok(())
}

/// Whether the qualitative DQ holds at the initial state, with the index of
/// an objective Eve can satisfy on its own.
pub fn solve_qual_dq(g: &Game, q: &ThresholdQuery) -> Result<(bool, Option<usize>)> {
    check_qualitative_dq(q)?;
    crate::model::ensure_valid(g)?;
    let witness = q.template.objectives.iter().position(|o| almost_sure_region(g, o).contains(g.initial));
    Ok((witness.is_some(), witness))
}

/// Bitmask of unsafe sets entered so far.
type Cover = u64;
/// Adam's maximal reachable covers under one Eve commitment.
type Antichain = Vec<Cover>;

fn maximal(mut covers: Vec<Cover>) -> Antichain {
    covers.sort_unstable();
    covers.dedup();
    let keep: Vec<Cover> = covers.iter().copied().filter(|&a| !covers.iter().any(|&b| b != a && a & b == a)).collect();
    keep
}

/// `a` is at least as good for Eve as `b`: every cover Adam reaches under
/// `a` is dominated by one under `b`.
fn dominated(a: &Antichain, b: &Antichain) -> bool {
    a.iter().all(|&x| b.iter().any(|&y| x & y == x))
}

fn minimal(mut fam: Vec<Antichain>) -> Vec<Antichain> {
    fam.sort();
    fam.dedup();
    let mut out: Vec<Antichain> = Vec::new();
    for (i, a) in fam.iter().enumerate() {
        let beaten = fam.iter().enumerate().any(|(j, b)| j != i && dominated(b, a) && (!dominated(a, b) || j < i));
        if !beaten {
            out.push(a.clone());
        }
    }
    out
}

struct Search<'a> {
    g: &'a Game,
    marks: Vec<Cover>,
    succ: Vec<Vec<StateId>>,
    memo: HashMap<(StateId, usize), Vec<Antichain>>,
}

impl Search<'_> {
    /// Eve's options at `s` with `r` steps left: one antichain per
    /// undominated Eve commitment for the subtree.
    fn psi(&mut self, s: StateId, r: usize) -> Vec<Antichain> {
        if let Some(v) = self.memo.get(&(s, r)) {
            return v.clone();
        }
        let here = self.marks[s];
        let out = if r == 0 || self.g.is_sink(s) {
            vec![vec![here]]
        } else {
            let children: Vec<Vec<Antichain>> = self.succ[s].clone().into_iter().map(|t| self.psi(t, r - 1)).collect();
            let combined = match self.g.owner(s) {
                Owner::Eve => minimal(children.into_iter().flatten().collect()),
                // Eve commits in every branch; Adam then picks a branch.
                Owner::Adam => children
                    .into_iter()
                    .reduce(|acc, c| product(&acc, &c, |a, b| a.iter().chain(b).copied().collect()))
                    .unwrap(),
                // Adam answers each branch separately, seeing Eve's full commitment.
                Owner::Random => children
                    .into_iter()
                    .reduce(|acc, c| {
                        product(&acc, &c, |a, b| a.iter().flat_map(|x| b.iter().map(move |y| x | y)).collect())
                    })
                    .unwrap(),
            };
            combined.into_iter().map(|a| maximal(a.into_iter().map(|c| c | here).collect())).collect()
        };
        let out = minimal(out);
        self.memo.insert((s, r), out.clone());
        out
    }
}

fn product(xs: &[Antichain], ys: &[Antichain], join: impl Fn(&Antichain, &Antichain) -> Vec<Cover>) -> Vec<Antichain> {
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for a in xs {
        for b in ys {
            out.push(maximal(join(a, b)));
        }
    }
    minimal(out)
}

fn safety_sink_dq(g: &Game, q: &ThresholdQuery) -> Result<()> {
    check_qualitative_dq(q)?;
    if !q.template.all_of(Kind::Safety) {
        return Err(Error::QueryClass("expected safety objectives".into()));
    }
    if !classify(g, &q.template).is_sink_query {
        return Err(Error::QueryClass("expected a sink query (unsafe states absorbing)".into()));
    }
    if q.template.dim() > 63 {
        return Err(Error::Unsupported("at most 63 objectives".into()));
    }
    Ok(())
}

/// Deterministic-strategy qualitative safety DQ on a sink query: does Eve
/// have a deterministic strategy such that for every deterministic Adam
/// strategy some unsafe set is never entered?
///
/// Decides the complement (Adam can positively enter every unsafe set)
/// over plays of |S| steps of the binarized game. Adam's answer at a
/// Random branch may depend on Eve's commitments in sibling branches, so the
/// search carries, per subtree, the set of covers Adam can force for each
/// Eve commitment rather than a single verdict.
pub fn alternating_safety_det(g: &Game, q: &ThresholdQuery) -> Result<bool> {
    crate::model::ensure_valid(g)?;
    safety_sink_dq(g, q)?;
    let (bg, map) = binarize(g);
    let bq = lift_query(&q.template, &map);
    let marks = (0..bg.len())
        .map(|s| bq.objectives.iter().enumerate().filter(|(_, o)| o.marks(s)).fold(0, |m, (i, _)| m | (1 << i)))
        .collect();
    let succ = (0..bg.len()).map(|s| bg.successors(s)).collect();
    let mut search = Search { g: &bg, marks, succ, memo: HashMap::new() };
    let full: Cover = (1u64 << q.template.dim()) - 1;
    let options = search.psi(bg.initial, bg.len());
    Ok(options.iter().any(|a| a.iter().all(|&c| c != full)))
}

/// Drops self-loops of non-absorbing Random states; qualitative reach and
/// safety outcomes under any strategies are unchanged.
pub fn collapse_random_loops(g: &Game) -> Game {
    let mut out = g.clone();
    for s in 0..g.len() {
        if g.owner(s) != Owner::Random || g.is_sink(s) {
            continue;
        }
        let stay: crate::polytope::Rational = g.moves[s].iter().filter(|(t, _)| *t == s).map(|(_, p)| p.clone()).sum();
        if stay == crate::polytope::rational::zero() {
            continue;
        }
        let rest = crate::polytope::rational::one() - stay;
        out.moves[s] = g.moves[s].iter().filter(|(t, _)| *t != s).map(|(t, p)| (*t, p / &rest)).collect();
    }
    out
}

/// Exhaustive search over deterministic strategy trees of both players for
/// a qualitative DQ. Reach objectives need the game to be acyclic once
/// Random self-loops are collapsed; safety objectives are judged over
/// `|S|`-step plays.
pub fn det_qual_bruteforce(g: &Game, q: &ThresholdQuery, guard: u128) -> Result<bool> {
    check_qualitative_dq(q)?;
    crate::model::ensure_valid(g)?;
    let g = collapse_random_loops(g);
    let has_reach = q.template.objectives.iter().any(|o| o.kind == Kind::Reach);
    let depth = match g.depth() {
        Some(d) => d.max(if has_reach { 0 } else { g.len() }),
        None if has_reach => return Err(Error::Unsupported("reach objectives need an acyclic game".into())),
        None => g.len(),
    };
    let eves = strategy_trees(&g, Owner::Eve, depth, guard)?;
    let adams = strategy_trees(&g, Owner::Adam, depth, guard)?;
    if (eves.len() as u128).saturating_mul(adams.len() as u128) > guard.saturating_mul(16) {
        return Err(Error::Guard { count: eves.len() as u128 * adams.len() as u128, bound: guard * 16 });
    }
    let n = q.template.dim();
    Ok(eves.iter().any(|e| {
        adams.iter().all(|a| {
            let mut violated = vec![false; n];
            walk(&g, q, e, a, &mut vec![g.initial], depth, 0, &mut violated);
            violated.iter().any(|v| !v)
        })
    }))
}

#[allow(clippy::too_many_arguments)]
fn walk(
    g: &Game,
    q: &ThresholdQuery,
    eve: &KStepStrategy,
    adam: &KStepStrategy,
    h: &mut Vec<StateId>,
    r: usize,
    seen: u64,
    violated: &mut [bool],
) {
    let s = *h.last().unwrap();
    let seen =
        q.template.objectives.iter().enumerate().filter(|(_, o)| o.marks(s)).fold(seen, |m, (i, _)| m | (1 << i));
    for (i, o) in q.template.objectives.iter().enumerate() {
        if o.kind == Kind::Safety && seen & (1 << i) != 0 {
            violated[i] = true;
        }
    }
    if r == 0 || g.is_sink(s) {
        for (i, o) in q.template.objectives.iter().enumerate() {
            if o.kind == Kind::Reach && seen & (1 << i) == 0 {
                violated[i] = true;
            }
        }
        return;
    }
    let next: Vec<StateId> = match g.owner(s) {
        Owner::Random => g.successors(s),
        Owner::Eve => vec![eve.choose(h).expect("Eve strategy covers the history")],
        Owner::Adam => vec![adam.choose(h).expect("Adam strategy covers the history")],
    };
    for t in next {
        h.push(t);
        walk(g, q, eve, adam, h, r - 1, seen, violated);
        h.pop();
    }
}
