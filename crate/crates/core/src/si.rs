//! Strategy iteration over memoryless deterministic strategies.
//!
//! One player's MD strategies are explored by local improvement: from the
//! current strategy, the induced one-player game is solved exactly, each
//! owned state keeps its *useful* actions (those whose successor set is not
//! strictly beaten by another action's), and every combination of useful
//! actions is queued unless already visited. The answer combines the
//! visited strategies: union of Eve's guaranteed regions for a DQ under the
//! standard semantics, intersection of Eve's achievable sets for a CQ under
//! ∀∃ semantics.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use dwc_polytope::{DwcPolytope, Region};

use crate::model::{classify, swap_players, Connective, Game, MdStrategy, Owner, QueryTemplate, StateId};
use crate::vi::{recover_dq_region_2d, run_cq_vi, Mode, DEFAULT_ITERATION_CAP};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SiMode {
    /// Enumerate Eve; result is the union of her guaranteed DQ regions.
    DqStandard,
    /// Enumerate Adam; result is the intersection of Eve's CQ sets.
    CqForallExists,
}

impl SiMode {
    pub fn player(self) -> Owner {
        match self {
            SiMode::DqStandard => Owner::Eve,
            SiMode::CqForallExists => Owner::Adam,
        }
    }
}

/// Set inclusion as used for pruning.
pub trait Inclusion {
    fn strict_subset(&self, other: &Self) -> bool;
}

impl Inclusion for DwcPolytope {
    fn strict_subset(&self, other: &Self) -> bool {
        self != other && self.is_subset(other).expect("dimensions agree")
    }
}

/// Which sets the enumerated player prefers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prefer {
    /// Drop `t` when `set(t) ⊊ set(t′)`.
    Larger,
    /// Drop `t` when `set(t′) ⊊ set(t)`.
    Smaller,
}

/// Successors of `s` that are not strictly beaten by another successor.
/// Never empty: a strict order has a maximal element.
pub fn useful_choices<T: Inclusion>(g: &Game, sets: &[T], s: StateId, prefer: Prefer) -> BTreeSet<StateId> {
    let succ = g.successors(s);
    let beaten = |t: StateId, u: StateId| match prefer {
        Prefer::Larger => sets[t].strict_subset(&sets[u]),
        Prefer::Smaller => sets[u].strict_subset(&sets[t]),
    };
    succ.iter().copied().filter(|&t| !succ.iter().any(|&u| beaten(t, u))).collect()
}

/// Per-strategy record of one visited strategy.
#[derive(Debug, Clone, Serialize)]
pub struct SiVisit {
    /// `(state, chosen successor)` pairs.
    pub choice: Vec<(StateId, StateId)>,
    /// Eve's set at every state of the induced game (for DqStandard, the
    /// polytope Adam can reach for the dual objectives).
    pub sets: Vec<DwcPolytope>,
    /// Strategies queued from this one that were new.
    pub queued: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SiTrace {
    pub mode: SiMode,
    pub visits: Vec<SiVisit>,
    /// Frontier size after each round.
    pub frontier: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SiValue {
    Region { region: Region },
    Polytope { polytope: DwcPolytope },
}

#[derive(Debug, Clone, Serialize)]
pub struct SiSolution {
    pub value: SiValue,
    /// False when some induced game did not reach its fixpoint.
    pub exact: bool,
    pub trace: SiTrace,
}

#[derive(Debug, Clone, Copy)]
pub struct SiOptions {
    pub prune: bool,
    /// Fixpoint cap for cyclic games.
    pub iteration_cap: usize,
    /// Bound on queued strategies.
    pub guard: usize,
}

impl Default for SiOptions {
    fn default() -> Self {
        SiOptions { prune: true, iteration_cap: DEFAULT_ITERATION_CAP, guard: 1_000_000 }
    }
}

struct Induced {
    /// What the enumerated player compares on.
    sets: Vec<DwcPolytope>,
    regions: Option<Vec<Region>>,
    exact: bool,
}

fn solve_induced(g: &Game, q: &QueryTemplate, mode: SiMode, strat: &MdStrategy, cap: usize) -> Result<Induced> {
    let h = strat.apply(g);
    let run_mode = match h.depth() {
        Some(d) => Mode::Horizon(d),
        None => Mode::Fixpoint(cap),
    };
    match mode {
        SiMode::CqForallExists => {
            let sol = run_cq_vi(&h, q, run_mode)?;
            Ok(Induced { sets: sol.values, regions: None, exact: sol.status.is_complete() })
        }
        SiMode::DqStandard => {
            let dual = q.dual(&h);
            let sol = run_cq_vi(&swap_players(&h), &dual, run_mode)?;
            let regions = sol.values.iter().map(recover_dq_region_2d).collect::<Result<Vec<_>>>()?;
            Ok(Induced { sets: sol.values, regions: Some(regions), exact: sol.status.is_complete() })
        }
    }
}

fn check_query(g: &Game, q: &QueryTemplate, mode: SiMode) -> Result<()> {
    crate::model::ensure_valid(g)?;
    if !classify(g, q).is_sink_query {
        return Err(Error::QueryClass("strategy iteration needs a sink query".into()));
    }
    match mode {
        SiMode::DqStandard if q.connective != Connective::Or => {
            Err(Error::QueryClass("DqStandard mode expects a disjunctive query".into()))
        }
        SiMode::DqStandard if q.dim() != 2 => {
            Err(Error::Unsupported("DqStandard mode computes two-objective regions only".into()))
        }
        SiMode::CqForallExists if q.connective != Connective::And => {
            Err(Error::QueryClass("CqForallExists mode expects a conjunctive query".into()))
        }
        _ => Ok(()),
    }
}

fn combine(values: Vec<(Option<Region>, DwcPolytope)>, mode: SiMode) -> Result<SiValue> {
    match mode {
        SiMode::DqStandard => {
            let mut parts = Vec::new();
            for (r, _) in values {
                parts.extend(r.expect("regions exist in DQ mode").parts().iter().cloned());
            }
            Ok(SiValue::Region { region: Region::new(parts)?.simplified() })
        }
        SiMode::CqForallExists => {
            let mut it = values.into_iter().map(|(_, p)| p);
            let first = it.next().expect("at least one strategy");
            let p = it.try_fold(first, |a, b| a.intersect(&b))?;
            Ok(SiValue::Polytope { polytope: p })
        }
    }
}

/// Improvement-driven exploration of the enumerated player's MD strategies.
pub fn si_solve(g: &Game, q: &QueryTemplate, mode: SiMode, opts: SiOptions) -> Result<SiSolution> {
    check_query(g, q, mode)?;
    let player = mode.player();
    // Both modes compare the opponent-facing polytope: Adam's dual set in
    // DqStandard, Eve's set in CqForallExists. Smaller is better for the
    // enumerated player either way. Eve's regions are not a sound key: Adam
    // randomizes over dual sets, so a larger region at a successor can
    // still shrink the region upstream.
    let prefer = Prefer::Smaller;
    let owned: Vec<StateId> = g.states_of(player).filter(|&s| !g.is_sink(s)).collect();
    if !opts.prune {
        return full_enumeration(g, q, mode, opts);
    }
    let start = restrict(MdStrategy::first_choices(g, player), &owned);
    let mut visited: BTreeSet<MdStrategy> = BTreeSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    let mut trace = SiTrace { mode, visits: Vec::new(), frontier: Vec::new() };
    let mut values = Vec::new();
    let mut exact = true;
    while let Some(strat) = queue.pop_front() {
        let induced = solve_induced(g, q, mode, &strat, opts.iteration_cap)?;
        exact &= induced.exact;
        let useful: Vec<Vec<StateId>> =
            owned.iter().map(|&s| useful_choices(g, &induced.sets, s, prefer).into_iter().collect()).collect();
        let mut queued = 0;
        for combo in assemble(&owned, &useful, opts.guard)? {
            let cand = MdStrategy { owner: player, choice: combo };
            if visited.insert(cand.clone()) {
                if visited.len() > opts.guard {
                    return Err(Error::Guard { count: visited.len() as u128, bound: opts.guard as u128 });
                }
                queue.push_back(cand);
                queued += 1;
            }
        }
        trace.frontier.push(queue.len());
        let init = g.initial;
        values.push((induced.regions.as_ref().map(|r| r[init].clone()), induced.sets[init].clone()));
        trace.visits.push(SiVisit { choice: strat.choice.into_iter().collect(), sets: induced.sets, queued });
    }
    Ok(SiSolution { value: combine(values, mode)?, exact, trace })
}

fn restrict(mut s: MdStrategy, owned: &[StateId]) -> MdStrategy {
    s.choice.retain(|k, _| owned.contains(k));
    s
}

fn assemble(owned: &[StateId], useful: &[Vec<StateId>], guard: usize) -> Result<Vec<BTreeMap<StateId, StateId>>> {
    let total = useful.iter().fold(1u128, |a, u| a.saturating_mul(u.len() as u128));
    if total > guard as u128 {
        return Err(Error::Guard { count: total, bound: guard as u128 });
    }
    let mut out = vec![BTreeMap::new()];
    for (s, opts) in owned.iter().zip(useful) {
        out = out
            .into_iter()
            .flat_map(|m| {
                opts.iter().map(move |&t| {
                    let mut m = m.clone();
                    m.insert(*s, t);
                    m
                })
            })
            .collect();
    }
    Ok(out)
}

/// Combination over every MD strategy of the enumerated player.
pub fn full_enumeration(g: &Game, q: &QueryTemplate, mode: SiMode, opts: SiOptions) -> Result<SiSolution> {
    check_query(g, q, mode)?;
    let player = mode.player();
    let owned: Vec<StateId> = g.states_of(player).filter(|&s| !g.is_sink(s)).collect();
    let all: Vec<Vec<StateId>> = owned.iter().map(|&s| g.successors(s)).collect();
    let mut trace = SiTrace { mode, visits: Vec::new(), frontier: Vec::new() };
    let mut values = Vec::new();
    let mut exact = true;
    for combo in assemble(&owned, &all, opts.guard)? {
        let strat = MdStrategy { owner: player, choice: combo };
        let induced = solve_induced(g, q, mode, &strat, opts.iteration_cap)?;
        exact &= induced.exact;
        values.push((induced.regions.as_ref().map(|r| r[g.initial].clone()), induced.sets[g.initial].clone()));
        trace.visits.push(SiVisit { choice: strat.choice.into_iter().collect(), sets: induced.sets, queued: 0 });
    }
    trace.frontier.push(0);
    Ok(SiSolution { value: combine(values, mode)?, exact, trace })
}
