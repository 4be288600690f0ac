//! Value iteration over polytopes.
//!
//! `cq_step` is the standard-semantics operator on one polytope per state;
//! `dq_step` is its ∀∃ counterpart on a family of polytopes per state (Adam's
//! choice becomes a union of alternatives instead of an intersection, so that
//! Adam effectively commits first). Pruning with [`PolytopeSet::min_filter`]
//! after each step keeps the families small without changing their
//! intersections. Disjunctive queries are solved through their dual
//! conjunctive query on the swapped game.

use std::time::{Duration, Instant};

use dwc_polytope::rational::{one, zero};
use dwc_polytope::{DwcPolytope, PolytopeSet, Rational, Region};
use serde::Serialize;

use crate::model::{self, goal_unfold, is_persistent, Connective, Game, Owner, QueryTemplate, StateId, ThresholdQuery};
use crate::{Error, Result};

pub type ValueMap = Vec<DwcPolytope>;
pub type FamilyMap = Vec<PolytopeSet>;

pub const DEFAULT_FAMILY_CAP: usize = 10_000;
pub const DEFAULT_ITERATION_CAP: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Exactly `k` steps.
    Horizon(usize),
    /// Until two consecutive iterates coincide, at most `cap` steps.
    Fixpoint(usize),
}

/// Resource limits shared by all iterations.
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub family_cap: usize,
    pub deadline: Option<Instant>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { family_cap: DEFAULT_FAMILY_CAP, deadline: None }
    }
}

impl Limits {
    pub fn with_timeout(timeout: Duration) -> Self {
        Limits { deadline: Some(Instant::now() + timeout), ..Limits::default() }
    }

    fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    /// Horizon mode ran all requested steps.
    Completed,
    /// Fixpoint reached: iterate `iterations` equals its successor.
    Converged { iterations: usize },
    /// Fixpoint mode exhausted its iteration cap.
    Unconverged { iterations: usize },
    /// A family exceeded the size cap.
    Truncated { iterations: usize, state: StateId, size: usize },
    /// The deadline passed.
    TimedOut { iterations: usize },
}

impl Status {
    pub fn is_complete(&self) -> bool {
        matches!(self, Status::Completed | Status::Converged { .. })
    }
}

/// Per-iteration bookkeeping; `counts[k][s]` is the family size at state `s`
/// after `k` steps (1 everywhere for the single-polytope iteration).
#[derive(Debug, Clone, Default, Serialize)]
pub struct IterationStats {
    pub counts: Vec<Vec<usize>>,
    pub generators: Vec<usize>,
    pub wall: Vec<Duration>,
}

impl IterationStats {
    fn record_values(&mut self, x: &ValueMap, elapsed: Duration) {
        self.counts.push(vec![1; x.len()]);
        self.generators.push(x.iter().map(|p| p.generators().len()).sum());
        self.wall.push(elapsed);
    }

    fn record_families(&mut self, fam: &FamilyMap, elapsed: Duration) {
        self.counts.push(fam.iter().map(PolytopeSet::len).collect());
        self.generators.push(fam.iter().map(PolytopeSet::generator_count).sum());
        self.wall.push(elapsed);
    }

    /// Mean family size over states after `k` steps.
    pub fn mean_count(&self, k: usize) -> Option<f64> {
        let c = self.counts.get(k)?;
        Some(c.iter().sum::<usize>() as f64 / c.len().max(1) as f64)
    }

    /// Rows `(k, state, count)` in iteration order.
    pub fn rows(&self) -> Vec<(usize, StateId, usize)> {
        self.counts.iter().enumerate().flat_map(|(k, c)| c.iter().enumerate().map(move |(s, &n)| (k, s, n))).collect()
    }
}

/// Initial element: per state, the downward closure of its 0/1 membership
/// vector (Reach target, resp. Safety safe set).
pub fn initial_element(g: &Game, q: &QueryTemplate) -> ValueMap {
    (0..g.len())
        .map(|s| {
            let p = q.objectives.iter().map(|o| if o.indicator(s) { one() } else { zero() }).collect();
            DwcPolytope::point(p).expect("0/1 vectors lie in the unit box")
        })
        .collect()
}

fn random_terms<'a>(
    g: &Game,
    s: StateId,
    pick: impl Fn(StateId) -> &'a DwcPolytope,
) -> Vec<(Rational, &'a DwcPolytope)> {
    g.distribution(s).iter().map(|(t, p)| (p.clone(), pick(*t))).collect()
}

/// One application of the standard-semantics operator.
pub fn cq_step(g: &Game, x: &ValueMap) -> Result<ValueMap> {
    let mut out = Vec::with_capacity(g.len());
    for s in 0..g.len() {
        if g.is_sink(s) {
            out.push(x[s].clone());
            continue;
        }
        let succ = g.successors(s);
        let v = match g.owner(s) {
            Owner::Adam => {
                let mut acc = x[succ[0]].clone();
                for &t in &succ[1..] {
                    acc = acc.intersect(&x[t])?;
                }
                acc
            }
            Owner::Eve => {
                let mut acc = x[succ[0]].clone();
                for &t in &succ[1..] {
                    acc = acc.convex_union(&x[t])?;
                }
                acc
            }
            Owner::Random => DwcPolytope::weighted_combination(&random_terms(g, s, |t| &x[t]))?,
        };
        out.push(v);
    }
    Ok(out)
}

/// Why a family step stopped early.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepAbort {
    Cap { state: StateId, size: usize },
    Deadline,
}

fn cap_check(set: &PolytopeSet, state: StateId, limits: &Limits) -> std::result::Result<(), StepAbort> {
    if set.len() > limits.family_cap {
        return Err(StepAbort::Cap { state, size: set.len() });
    }
    if limits.expired() {
        return Err(StepAbort::Deadline);
    }
    Ok(())
}

/// Combination over the Cartesian product of successor families, folded one
/// successor at a time with deduplication after each fold (the final set is
/// the same, the intermediate ones are smaller).
fn product_fold(g: &Game, s: StateId, fam: &FamilyMap, limits: &Limits) -> std::result::Result<PolytopeSet, StepAbort> {
    let dim = fam[s].dim();
    let succ: Vec<(StateId, Rational)> = match g.owner(s) {
        Owner::Random => g.distribution(s).to_vec(),
        _ => g.successors(s).into_iter().map(|t| (t, one())).collect(),
    };
    let mut acc = fam[succ[0].0].clone();
    let mut mass = succ[0].1.clone();
    for (t, p) in &succ[1..] {
        let mut next = PolytopeSet::empty(dim);
        let total = &mass + p;
        let (wa, wb) = (&mass / &total, p / &total);
        for a in acc.iter() {
            for b in fam[*t].iter() {
                let c = match g.owner(s) {
                    Owner::Random => DwcPolytope::weighted_combination(&[(wa.clone(), a), (wb.clone(), b)]),
                    _ => a.convex_union(b),
                }
                .expect("family dimensions agree");
                next.insert(c).expect("family dimensions agree");
            }
            cap_check(&next, s, limits)?;
        }
        acc = next;
        mass = total;
    }
    Ok(acc)
}

/// One application of the family operator (no pruning).
pub fn dq_step(g: &Game, fam: &FamilyMap) -> FamilyMap {
    let limits = Limits { family_cap: usize::MAX, deadline: None };
    dq_step_limited(g, fam, &limits).expect("no limits to breach")
}

/// [`dq_step`] with a family-size cap and a deadline.
pub fn dq_step_limited(g: &Game, fam: &FamilyMap, limits: &Limits) -> std::result::Result<FamilyMap, StepAbort> {
    let mut out = Vec::with_capacity(g.len());
    for s in 0..g.len() {
        if g.is_sink(s) {
            out.push(fam[s].clone());
            continue;
        }
        let v = match g.owner(s) {
            Owner::Adam => {
                let mut acc = PolytopeSet::empty(fam[s].dim());
                for t in g.successors(s) {
                    acc.extend(&fam[t]).expect("family dimensions agree");
                }
                cap_check(&acc, s, limits)?;
                acc
            }
            _ => product_fold(g, s, fam, limits)?,
        };
        out.push(v);
    }
    Ok(out)
}

pub fn singleton_families(x: &ValueMap) -> FamilyMap {
    x.iter().cloned().map(PolytopeSet::singleton).collect()
}

pub fn prune(fam: &FamilyMap) -> FamilyMap {
    fam.iter().map(PolytopeSet::min_filter).collect()
}

pub fn intersections(fam: &FamilyMap) -> ValueMap {
    fam.iter().map(|f| f.intersection().expect("families are nonempty")).collect()
}

fn require_cq(q: &QueryTemplate) -> Result<()> {
    if q.connective != Connective::And {
        return Err(Error::QueryClass("expected a conjunctive query".into()));
    }
    if q.objectives.is_empty() {
        return Err(Error::QueryClass("query has no objectives".into()));
    }
    Ok(())
}

/// The game actually iterated: the input itself when every objective is
/// already decided by the current state, its goal-unfolding otherwise.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub game: Game,
    pub query: QueryTemplate,
    /// Original state and objective bits per iterated state, when unfolded.
    pub origin: Option<Vec<(StateId, u64)>>,
}

pub fn prepare(g: &Game, q: &QueryTemplate) -> Result<Prepared> {
    model::ensure_valid(g)?;
    if is_persistent(g, q) {
        return Ok(Prepared { game: g.clone(), query: q.clone(), origin: None });
    }
    let u = goal_unfold(g, q);
    Ok(Prepared { game: u.game, query: u.query, origin: Some(u.origin) })
}

#[derive(Debug, Clone)]
pub struct CqSolution {
    pub prepared: Prepared,
    pub values: ValueMap,
    /// The iterate before `values` (equal to it on convergence).
    pub previous: ValueMap,
    pub stats: IterationStats,
    pub status: Status,
}

impl CqSolution {
    pub fn initial_value(&self) -> &DwcPolytope {
        &self.values[self.prepared.game.initial]
    }
}

/// Standard-semantics value iteration from the initial element.
pub fn run_cq_vi(g: &Game, q: &QueryTemplate, mode: Mode) -> Result<CqSolution> {
    run_cq_vi_limited(g, q, mode, &Limits::default())
}

pub fn run_cq_vi_limited(g: &Game, q: &QueryTemplate, mode: Mode, limits: &Limits) -> Result<CqSolution> {
    require_cq(q)?;
    let prepared = prepare(g, q)?;
    let game = &prepared.game;
    let mut stats = IterationStats::default();
    let mut x = initial_element(game, &prepared.query);
    let mut previous = x.clone();
    stats.record_values(&x, Duration::ZERO);
    let (steps, fixpoint) = match mode {
        Mode::Horizon(k) => (k, false),
        Mode::Fixpoint(cap) => (cap, true),
    };
    let mut status = Status::Completed;
    let mut done = 0;
    while done < steps {
        if limits.expired() {
            status = Status::TimedOut { iterations: done };
            break;
        }
        let start = Instant::now();
        let next = cq_step(game, &x)?;
        done += 1;
        stats.record_values(&next, start.elapsed());
        previous = std::mem::replace(&mut x, next);
        if fixpoint && previous == x {
            status = Status::Converged { iterations: done - 1 };
            break;
        }
    }
    if fixpoint && status == Status::Completed {
        status = Status::Unconverged { iterations: done };
    }
    Ok(CqSolution { prepared, values: x, previous, stats, status })
}

#[derive(Debug, Clone)]
pub struct ForallExistsSolution {
    pub prepared: Prepared,
    pub families: FamilyMap,
    /// Pointwise intersections of `families`.
    pub values: ValueMap,
    pub stats: IterationStats,
    pub status: Status,
}

impl ForallExistsSolution {
    pub fn initial_value(&self) -> &DwcPolytope {
        &self.values[self.prepared.game.initial]
    }
}

/// ∀∃ value iteration from the singleton families of the initial element,
/// optionally pruning to ⊆-minimal members after every step.
pub fn run_forall_exists_vi(g: &Game, q: &QueryTemplate, mode: Mode, prune_each: bool) -> Result<ForallExistsSolution> {
    run_forall_exists_vi_limited(g, q, mode, prune_each, &Limits::default())
}

pub fn run_forall_exists_vi_limited(
    g: &Game,
    q: &QueryTemplate,
    mode: Mode,
    prune_each: bool,
    limits: &Limits,
) -> Result<ForallExistsSolution> {
    require_cq(q)?;
    let prepared = prepare(g, q)?;
    let (families, stats, status) = iterate_families(&prepared.game, &prepared.query, mode, prune_each, limits);
    let values = intersections(&families);
    Ok(ForallExistsSolution { prepared, families, values, stats, status })
}

/// The family iteration on an already prepared game.
pub fn iterate_families(
    game: &Game,
    query: &QueryTemplate,
    mode: Mode,
    prune_each: bool,
    limits: &Limits,
) -> (FamilyMap, IterationStats, Status) {
    let mut stats = IterationStats::default();
    let mut fam = singleton_families(&initial_element(game, query));
    stats.record_families(&fam, Duration::ZERO);
    let (steps, fixpoint) = match mode {
        Mode::Horizon(k) => (k, false),
        Mode::Fixpoint(cap) => (cap, true),
    };
    let mut status = Status::Completed;
    let mut done = 0;
    while done < steps {
        let start = Instant::now();
        let next = match dq_step_limited(game, &fam, limits) {
            Ok(n) => n,
            Err(StepAbort::Cap { state, size }) => {
                status = Status::Truncated { iterations: done, state, size };
                break;
            }
            Err(StepAbort::Deadline) => {
                status = Status::TimedOut { iterations: done };
                break;
            }
        };
        let next = if prune_each { prune(&next) } else { next };
        done += 1;
        stats.record_families(&next, start.elapsed());
        let same = next == fam;
        fam = next;
        if fixpoint && same {
            status = Status::Converged { iterations: done - 1 };
            break;
        }
    }
    if fixpoint && status == Status::Completed {
        status = Status::Unconverged { iterations: done };
    }
    (fam, stats, status)
}

/// Closed region of thresholds `x` such that no point of `v` strictly
/// dominates `1 − x`.
///
/// With `v`'s frontier `g_1, …, g_m` sorted by first coordinate, a point is
/// undominated iff it is at least `g_m` in the first coordinate, at least
/// `g_1` in the second, or weakly above some frontier edge; mirroring each
/// case gives one downward-closed part.
pub fn recover_dq_region_2d(v: &DwcPolytope) -> Result<Region> {
    if v.dim() != 2 {
        return Err(Error::Unsupported(format!("region recovery needs dimension 2, got {}", v.dim())));
    }
    let gens = v.generators();
    let flip = |p: &[Rational]| -> Vec<Rational> { p.iter().map(|c| one() - c).collect() };
    let first = &gens[0];
    let last = &gens[gens.len() - 1];
    let mut parts =
        vec![DwcPolytope::point(vec![one() - &last[0], one()])?, DwcPolytope::point(vec![one(), one() - &first[1]])?];
    for w in gens.windows(2) {
        parts.push(DwcPolytope::from_points([flip(&w[0]), flip(&w[1])])?);
    }
    Ok(Region::new(parts)?.simplified())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Yes,
    No,
    Unknown,
}

impl Decision {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Decision::Yes
        } else {
            Decision::No
        }
    }
}

/// Dual strict CQ solved under ∀∃ semantics on the swapped game.
pub fn solve_dual(g: &Game, dq: &ThresholdQuery, mode: Mode, limits: &Limits) -> Result<ForallExistsSolution> {
    let (h, cq) = model::dualize_dq(g, dq)?;
    run_forall_exists_vi_limited(&h, &cq.template, mode, true, limits)
}

/// Whether Eve can fix a strategy meeting at least one threshold of `dq`.
pub fn dq_achievable_point(g: &Game, dq: &ThresholdQuery, mode: Mode) -> Result<Decision> {
    dq_achievable_point_limited(g, dq, mode, &Limits::default())
}

pub fn dq_achievable_point_limited(g: &Game, dq: &ThresholdQuery, mode: Mode, limits: &Limits) -> Result<Decision> {
    if dq.thresholds.len() != dq.template.dim() {
        return Err(Error::QueryClass("threshold count differs from objective count".into()));
    }
    let sol = solve_dual(g, dq, mode, limits)?;
    if !sol.status.is_complete() {
        return Ok(Decision::Unknown);
    }
    let y: Vec<Rational> = dq.thresholds.iter().map(|x| one() - x).collect();
    let blocked = sol.initial_value().contains_point(&y, true)?;
    Ok(Decision::from_bool(!blocked))
}

/// Pareto regions of a two-objective DQ at every iterated state.
#[derive(Debug, Clone)]
pub struct DqRegions {
    pub dual: ForallExistsSolution,
    pub regions: Vec<Region>,
}

impl DqRegions {
    pub fn initial_region(&self) -> &Region {
        &self.regions[self.dual.prepared.game.initial]
    }
}

pub fn solve_dq_regions(g: &Game, dq: &QueryTemplate, mode: Mode, limits: &Limits) -> Result<DqRegions> {
    if dq.dim() != 2 {
        return Err(Error::Unsupported("Pareto regions are computed for two objectives only".into()));
    }
    let thresholds = dq.with_thresholds(vec![one(); dq.dim()]);
    let dual = solve_dual(g, &thresholds, mode, limits)?;
    let regions = dual.values.iter().map(recover_dq_region_2d).collect::<Result<Vec<_>>>()?;
    Ok(DqRegions { dual, regions })
}

/// Horizon-k fixpoint check helper: `F(x) = x`.
pub fn is_cq_fixpoint(g: &Game, x: &ValueMap) -> Result<bool> {
    Ok(cq_step(g, x)? == *x)
}
