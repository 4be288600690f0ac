//! Games, queries and the structural transforms applied to them.
//!
//! A [`Game`] is a finite turn-based stochastic game: every state is owned by
//! Eve (the maximiser), Adam (the adversary) or Random. Owned states choose a
//! successor; Random states move by an exact rational distribution. States
//! are addressed by their index.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use dwc_polytope::rational::{one, zero};
use dwc_polytope::{format_rational, Rational};
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

pub type StateId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Owner {
    Eve,
    Adam,
    Random,
}

impl Owner {
    pub fn opponent(self) -> Owner {
        match self {
            Owner::Eve => Owner::Adam,
            Owner::Adam => Owner::Eve,
            Owner::Random => Owner::Random,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct State {
    pub label: String,
    pub owner: Owner,
}

/// Successor lists; for owned states the attached probability is unused and
/// stored as 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Game {
    pub states: Vec<State>,
    pub initial: StateId,
    pub moves: Vec<Vec<(StateId, Rational)>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub state: Option<StateId>,
    pub reason: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.state {
            Some(s) => write!(f, "state {s}: {}", self.reason),
            None => write!(f, "{}", self.reason),
        }
    }
}

/// Incremental construction helper used by all builders.
#[derive(Debug, Default, Clone)]
pub struct GameBuilder {
    states: Vec<State>,
    moves: Vec<Vec<(StateId, Rational)>>,
}

impl GameBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&mut self, label: impl Into<String>, owner: Owner) -> StateId {
        self.states.push(State { label: label.into(), owner });
        self.moves.push(Vec::new());
        self.states.len() - 1
    }

    pub fn edge(&mut self, from: StateId, to: StateId) -> &mut Self {
        self.moves[from].push((to, one()));
        self
    }

    pub fn prob(&mut self, from: StateId, to: StateId, p: Rational) -> &mut Self {
        self.moves[from].push((to, p));
        self
    }

    /// Absorbing Random state.
    pub fn sink(&mut self, label: impl Into<String>) -> StateId {
        let s = self.state(label, Owner::Random);
        self.prob(s, s, one());
        s
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn build(self, initial: StateId) -> Game {
        Game { states: self.states, initial, moves: self.moves }
    }
}

impl Game {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn owner(&self, s: StateId) -> Owner {
        self.states[s].owner
    }

    pub fn label(&self, s: StateId) -> &str {
        &self.states[s].label
    }

    /// First state carrying `label`.
    pub fn find(&self, label: &str) -> Option<StateId> {
        self.states.iter().position(|s| s.label == label)
    }

    /// Successor ids in declaration order (with duplicates removed).
    pub fn successors(&self, s: StateId) -> Vec<StateId> {
        let mut out: Vec<StateId> = Vec::with_capacity(self.moves[s].len());
        for (t, _) in &self.moves[s] {
            if !out.contains(t) {
                out.push(*t);
            }
        }
        out
    }

    /// Distribution of a Random state.
    pub fn distribution(&self, s: StateId) -> &[(StateId, Rational)] {
        &self.moves[s]
    }

    pub fn is_sink(&self, s: StateId) -> bool {
        matches!(self.moves[s].as_slice(), [(t, p)] if *t == s && (self.owner(s) != Owner::Random || p.is_one()))
    }

    pub fn with_initial(&self, s: StateId) -> Game {
        let mut g = self.clone();
        g.initial = s;
        g
    }

    pub fn states_of(&self, owner: Owner) -> impl Iterator<Item = StateId> + '_ {
        (0..self.len()).filter(move |&s| self.owner(s) == owner)
    }

    /// States reachable from `from` in the game graph.
    pub fn reachable_from(&self, from: StateId) -> BTreeSet<StateId> {
        let mut seen = BTreeSet::from([from]);
        let mut queue = VecDeque::from([from]);
        while let Some(s) = queue.pop_front() {
            for t in self.successors(s) {
                if seen.insert(t) {
                    queue.push_back(t);
                }
            }
        }
        seen
    }

    /// Whether the graph restricted to non-sink states has no cycle.
    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// Non-sink states in an order where every state precedes its successors.
    pub fn topological_order(&self) -> Option<Vec<StateId>> {
        let n = self.len();
        let mut indeg = vec![0usize; n];
        for s in (0..n).filter(|&s| !self.is_sink(s)) {
            for t in self.successors(s) {
                if !self.is_sink(t) {
                    indeg[t] += 1;
                }
            }
        }
        let mut queue: VecDeque<StateId> = (0..n).filter(|&s| !self.is_sink(s) && indeg[s] == 0).collect();
        let mut order = Vec::new();
        while let Some(s) = queue.pop_front() {
            order.push(s);
            for t in self.successors(s) {
                if !self.is_sink(t) {
                    indeg[t] -= 1;
                    if indeg[t] == 0 {
                        queue.push_back(t);
                    }
                }
            }
        }
        (order.len() == (0..n).filter(|&s| !self.is_sink(s)).count()).then_some(order)
    }

    /// Longest path length to a sink (acyclic games only).
    pub fn depth(&self) -> Option<usize> {
        let order = self.topological_order()?;
        let mut d = vec![0usize; self.len()];
        for &s in order.iter().rev() {
            d[s] =
                1 + self.successors(s).into_iter().map(|t| if self.is_sink(t) { 0 } else { d[t] }).max().unwrap_or(0);
        }
        Some(order.iter().map(|&s| d[s]).max().unwrap_or(0))
    }
}

/// Every invariant violation of `g`; empty iff the game is well formed.
pub fn validate(g: &Game) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let n = g.len();
    if n == 0 {
        out.push(Diagnostic { state: None, reason: "game has no states".into() });
        return out;
    }
    if g.initial >= n {
        out.push(Diagnostic { state: None, reason: format!("initial state {} does not exist", g.initial) });
    }
    if g.moves.len() != n {
        out.push(Diagnostic { state: None, reason: "successor table size differs from state count".into() });
        return out;
    }
    for s in 0..n {
        let mv = &g.moves[s];
        let diag = |reason: String| Diagnostic { state: Some(s), reason };
        if mv.is_empty() {
            out.push(diag("no successors".into()));
            continue;
        }
        if let Some((t, _)) = mv.iter().find(|(t, _)| *t >= n) {
            out.push(diag(format!("successor {t} does not exist")));
        }
        let distinct: BTreeSet<StateId> = mv.iter().map(|(t, _)| *t).collect();
        if distinct.len() != mv.len() {
            out.push(diag("duplicate successor".into()));
        }
        if g.owner(s) == Owner::Random {
            if let Some((t, p)) = mv.iter().find(|(_, p)| !p.is_positive()) {
                out.push(diag(format!("probability {} to {t} is not positive", format_rational(p))));
            }
            let total: Rational = mv.iter().map(|(_, p)| p.clone()).sum();
            if !total.is_one() {
                out.push(diag(format!("distribution sum ≠ 1 (sums to {})", format_rational(&total))));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Queries
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Reach,
    Safety,
}

impl Kind {
    pub fn dual(self) -> Kind {
        match self {
            Kind::Reach => Kind::Safety,
            Kind::Safety => Kind::Reach,
        }
    }
}

/// `Reach`: eventually visit `set`. `Safety`: always stay inside `set`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Objective {
    pub kind: Kind,
    pub set: BTreeSet<StateId>,
}

impl Objective {
    pub fn reach(set: impl IntoIterator<Item = StateId>) -> Self {
        Objective { kind: Kind::Reach, set: set.into_iter().collect() }
    }

    pub fn safety(set: impl IntoIterator<Item = StateId>) -> Self {
        Objective { kind: Kind::Safety, set: set.into_iter().collect() }
    }

    /// Safety objective avoiding `bad`.
    pub fn avoid(g: &Game, bad: impl IntoIterator<Item = StateId>) -> Self {
        let bad: BTreeSet<StateId> = bad.into_iter().collect();
        Objective::safety((0..g.len()).filter(|s| !bad.contains(s)))
    }

    /// States whose visit decides the objective: targets, or unsafe states.
    pub fn goal_states(&self, g: &Game) -> BTreeSet<StateId> {
        match self.kind {
            Kind::Reach => self.set.clone(),
            Kind::Safety => (0..g.len()).filter(|s| !self.set.contains(s)).collect(),
        }
    }

    /// Whether visiting `s` records progress: a target for Reach, an unsafe
    /// state for Safety.
    pub fn marks(&self, s: StateId) -> bool {
        match self.kind {
            Kind::Reach => self.set.contains(&s),
            Kind::Safety => !self.set.contains(&s),
        }
    }

    /// Value of the initial indicator vector at `s`: 1 iff `s ∈ set`.
    pub fn indicator(&self, s: StateId) -> bool {
        self.set.contains(&s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Connective {
    And,
    Or,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QueryTemplate {
    pub connective: Connective,
    pub objectives: Vec<Objective>,
}

impl QueryTemplate {
    pub fn new(connective: Connective, objectives: Vec<Objective>) -> Self {
        QueryTemplate { connective, objectives }
    }

    pub fn dim(&self) -> usize {
        self.objectives.len()
    }

    pub fn with_connective(&self, connective: Connective) -> Self {
        QueryTemplate { connective, objectives: self.objectives.clone() }
    }

    pub fn all_of(&self, kind: Kind) -> bool {
        self.objectives.iter().all(|o| o.kind == kind)
    }

    /// Dual objectives on complemented sets with the other connective.
    pub fn dual(&self, g: &Game) -> Self {
        let objectives = self
            .objectives
            .iter()
            .map(|o| Objective { kind: o.kind.dual(), set: (0..g.len()).filter(|s| !o.set.contains(s)).collect() })
            .collect();
        let connective = match self.connective {
            Connective::And => Connective::Or,
            Connective::Or => Connective::And,
        };
        QueryTemplate { connective, objectives }
    }

    pub fn with_thresholds(&self, thresholds: Vec<Rational>) -> ThresholdQuery {
        let strict = vec![false; thresholds.len()];
        ThresholdQuery { template: self.clone(), thresholds, strict }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ThresholdQuery {
    pub template: QueryTemplate,
    pub thresholds: Vec<Rational>,
    pub strict: Vec<bool>,
}

impl ThresholdQuery {
    pub fn is_qualitative(&self) -> bool {
        self.thresholds.iter().all(|x| x.is_one()) && self.strict.iter().all(|s| !s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub sinks: BTreeSet<StateId>,
    pub is_sink_query: bool,
}

pub fn classify(g: &Game, q: &QueryTemplate) -> Classification {
    let sinks: BTreeSet<StateId> = (0..g.len()).filter(|&s| g.is_sink(s)).collect();
    let is_sink_query = q.objectives.iter().all(|o| o.goal_states(g).is_subset(&sinks));
    Classification { sinks, is_sink_query }
}

/// Every marking state only leads to marking states, so an objective is
/// decided by the current state alone (true after goal-unfolding).
pub fn is_persistent(g: &Game, q: &QueryTemplate) -> bool {
    q.objectives.iter().all(|o| {
        let goal = o.goal_states(g);
        goal.iter().all(|&s| g.successors(s).iter().all(|t| goal.contains(t)))
    })
}

/// Memoryless deterministic strategy: one successor per owned state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MdStrategy {
    pub owner: Owner,
    pub choice: BTreeMap<StateId, StateId>,
}

impl MdStrategy {
    /// Picks the first listed action everywhere.
    pub fn first_choices(g: &Game, owner: Owner) -> Self {
        let choice = g.states_of(owner).map(|s| (s, g.successors(s)[0])).collect();
        MdStrategy { owner, choice }
    }

    /// All MD strategies of `owner` in lexicographic order.
    pub fn enumerate(g: &Game, owner: Owner) -> Vec<MdStrategy> {
        let states: Vec<StateId> = g.states_of(owner).collect();
        let mut out = vec![BTreeMap::new()];
        for s in states {
            let mut next = Vec::new();
            for partial in &out {
                for t in g.successors(s) {
                    let mut m: BTreeMap<StateId, StateId> = partial.clone();
                    m.insert(s, t);
                    next.push(m);
                }
            }
            out = next;
        }
        out.into_iter().map(|choice| MdStrategy { owner, choice }).collect()
    }

    /// The game in which the owner's states are forced to follow this strategy.
    pub fn apply(&self, g: &Game) -> Game {
        let mut h = g.clone();
        for (&s, &t) in &self.choice {
            h.moves[s] = vec![(t, one())];
        }
        h
    }
}

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

pub fn swap_players(g: &Game) -> Game {
    let mut h = g.clone();
    for s in &mut h.states {
        s.owner = s.owner.opponent();
    }
    h
}

/// Swapped game and dual strict CQ: the DQ is achievable in `g` iff the
/// returned CQ is not achievable in the returned game under ∀∃ semantics.
pub fn dualize_dq(g: &Game, dq: &ThresholdQuery) -> Result<(Game, ThresholdQuery), crate::Error> {
    if dq.template.connective != Connective::Or {
        return Err(crate::Error::QueryClass("dualize_dq expects a disjunctive query".into()));
    }
    let template = dq.template.dual(g);
    let thresholds = dq.thresholds.iter().map(|x| one() - x).collect();
    let strict = vec![true; dq.thresholds.len()];
    Ok((swap_players(g), ThresholdQuery { template, thresholds, strict }))
}

/// Result of [`goal_unfold`]: `origin[i]` is the original state and bit
/// vector of unfolded state `i`.
#[derive(Debug, Clone)]
pub struct Unfolded {
    pub game: Game,
    pub query: QueryTemplate,
    pub origin: Vec<(StateId, u64)>,
}

impl Unfolded {
    pub fn find(&self, s: StateId, bits: u64) -> Option<StateId> {
        self.origin.iter().position(|&o| o == (s, bits))
    }
}

fn marks_of(q: &QueryTemplate, s: StateId) -> u64 {
    q.objectives.iter().enumerate().filter(|(_, o)| o.marks(s)).fold(0, |b, (i, _)| b | (1 << i))
}

/// Product with the set of objectives already decided by a visit.
pub fn goal_unfold(g: &Game, q: &QueryTemplate) -> Unfolded {
    assert!(q.dim() <= 64, "at most 64 objectives");
    let mut index: HashMap<(StateId, u64), StateId> = HashMap::new();
    let mut origin: Vec<(StateId, u64)> = Vec::new();
    let mut queue = VecDeque::new();
    let start = (g.initial, marks_of(q, g.initial));
    index.insert(start, 0);
    origin.push(start);
    queue.push_back(start);
    let mut moves: Vec<Vec<(StateId, Rational)>> = vec![Vec::new()];
    while let Some((s, bits)) = queue.pop_front() {
        let from = index[&(s, bits)];
        let mut mv = Vec::with_capacity(g.moves[s].len());
        for (t, p) in &g.moves[s] {
            let key = (*t, bits | marks_of(q, *t));
            let id = *index.entry(key).or_insert_with(|| {
                origin.push(key);
                moves.push(Vec::new());
                queue.push_back(key);
                origin.len() - 1
            });
            mv.push((id, p.clone()));
        }
        moves[from] = mv;
    }
    let states = origin
        .iter()
        .map(|&(s, bits)| {
            let label = if q.dim() == 0 {
                g.label(s).to_string()
            } else {
                let b: String = (0..q.dim()).map(|i| if bits & (1 << i) != 0 { '1' } else { '0' }).collect();
                format!("{}|{b}", g.label(s))
            };
            State { label, owner: g.owner(s) }
        })
        .collect();
    let objectives = q
        .objectives
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let set = origin.iter().enumerate().filter(|(_, (_, b))| b & (1 << i) != 0).map(|(j, _)| j);
            match o.kind {
                Kind::Reach => Objective::reach(set),
                Kind::Safety => {
                    let bad: BTreeSet<StateId> = set.collect();
                    Objective::safety((0..origin.len()).filter(|j| !bad.contains(j)))
                }
            }
        })
        .collect();
    Unfolded { game: Game { states, initial: 0, moves }, query: QueryTemplate::new(q.connective, objectives), origin }
}

/// Every non-sink state gets exactly two successors (single-successor states
/// are kept as they are). Returns the new game and, per new state, the
/// original state it belongs to.
pub fn binarize(g: &Game) -> (Game, Vec<StateId>) {
    let mut b = GameBuilder::new();
    let mut map: Vec<StateId> = Vec::new();
    for s in &g.states {
        b.state(s.label.clone(), s.owner);
        map.push(map.len());
    }
    for s in 0..g.len() {
        let mv = g.moves[s].clone();
        if mv.len() <= 2 {
            for (t, p) in mv {
                b.prob(s, t, p);
            }
            continue;
        }
        let owner = g.owner(s);
        let mut cur = s;
        let mut rest: Rational = one();
        for (i, (t, p)) in mv.iter().enumerate() {
            if i == mv.len() - 1 {
                let last = if owner == Owner::Random { p / &rest } else { one() };
                b.prob(cur, *t, last);
                break;
            }
            let here = if owner == Owner::Random { p / &rest } else { one() };
            b.prob(cur, *t, here.clone());
            if i + 2 == mv.len() {
                continue;
            }
            let next = b.state(format!("{}#{}", g.label(s), i + 1), owner);
            map.push(s);
            let stay = if owner == Owner::Random { one() - &here } else { one() };
            b.prob(cur, next, stay);
            rest -= p;
            cur = next;
        }
    }
    (b.build(g.initial), map)
}

/// Lifts a query to a transformed game through its state map.
pub fn lift_query(q: &QueryTemplate, map: &[StateId]) -> QueryTemplate {
    let objectives = q
        .objectives
        .iter()
        .map(|o| Objective {
            kind: o.kind,
            set: map.iter().enumerate().filter(|(_, s)| o.set.contains(s)).map(|(i, _)| i).collect(),
        })
        .collect();
    QueryTemplate::new(q.connective, objectives)
}

/// Step-counting product: state `(s, j)` for `j ≤ k`, then an absorbing error
/// sink. The sink is no Reach target and lies in every Safety set.
pub fn restrict_horizon(g: &Game, q: &QueryTemplate, k: usize) -> (Game, QueryTemplate, Vec<Option<(StateId, usize)>>) {
    let mut b = GameBuilder::new();
    let mut index: HashMap<(StateId, usize), StateId> = HashMap::new();
    let mut origin: Vec<Option<(StateId, usize)>> = Vec::new();
    let err = b.sink("err");
    origin.push(None);
    let mut queue = VecDeque::from([(g.initial, 0usize)]);
    let first = b.state(format!("{}@0", g.label(g.initial)), g.owner(g.initial));
    index.insert((g.initial, 0), first);
    origin.push(Some((g.initial, 0)));
    while let Some((s, j)) = queue.pop_front() {
        let id = index[&(s, j)];
        if j == k {
            b.prob(id, err, one());
            continue;
        }
        for (t, p) in g.moves[s].clone() {
            let key = (t, j + 1);
            let tid = match index.get(&key) {
                Some(&x) => x,
                None => {
                    let x = b.state(format!("{}@{}", g.label(t), j + 1), g.owner(t));
                    index.insert(key, x);
                    origin.push(Some(key));
                    queue.push_back(key);
                    x
                }
            };
            b.prob(id, tid, p);
        }
    }
    let game = b.build(first);
    let objectives = q
        .objectives
        .iter()
        .map(|o| {
            let set = origin.iter().enumerate().filter(|(_, org)| match org {
                Some((s, _)) => o.set.contains(s),
                None => o.kind == Kind::Safety,
            });
            Objective { kind: o.kind, set: set.map(|(i, _)| i).collect() }
        })
        .collect();
    (game, QueryTemplate::new(q.connective, objectives), origin)
}

// ---------------------------------------------------------------------------
// Markov chains
// ---------------------------------------------------------------------------

/// Exact probabilities of eventually visiting `target` in a game where every
/// owned state has a single successor (a Markov chain).
pub fn chain_reach_probabilities(g: &Game, target: &BTreeSet<StateId>) -> Vec<Rational> {
    let n = g.len();
    // States that can reach the target at all.
    let mut can = target.clone();
    loop {
        let before = can.len();
        for s in 0..n {
            if !can.contains(&s) && g.successors(s).iter().any(|t| can.contains(t)) {
                can.insert(s);
            }
        }
        if can.len() == before {
            break;
        }
    }
    let unknown: Vec<StateId> = (0..n).filter(|s| can.contains(s) && !target.contains(s)).collect();
    let pos: HashMap<StateId, usize> = unknown.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let m = unknown.len();
    let mut a = vec![vec![zero(); m]; m];
    let mut b = vec![zero(); m];
    for (i, &s) in unknown.iter().enumerate() {
        a[i][i] += one();
        let mv = &g.moves[s];
        let step = |p: &Rational| if g.owner(s) == Owner::Random { p.clone() } else { one() };
        for (t, p) in mv {
            let w = step(p);
            if target.contains(t) {
                b[i] += w;
            } else if let Some(&j) = pos.get(t) {
                a[i][j] -= w;
            }
        }
    }
    let x = if m == 0 {
        Vec::new()
    } else {
        dwc_polytope::linalg::solve(&a, &b).expect("absorbing chain system is nonsingular")
    };
    (0..n).map(|s| if target.contains(&s) { one() } else { pos.get(&s).map_or_else(zero, |&i| x[i].clone()) }).collect()
}

/// Probability of each objective under a pair of MD strategies, from `g.initial`.
pub fn objective_probabilities(g: &Game, q: &QueryTemplate, eve: &MdStrategy, adam: &MdStrategy) -> Vec<Rational> {
    let chain = adam.apply(&eve.apply(g));
    q.objectives
        .iter()
        .map(|o| {
            let p = chain_reach_probabilities(&chain, &o.goal_states(g))[g.initial].clone();
            match o.kind {
                Kind::Reach => p,
                Kind::Safety => one() - p,
            }
        })
        .collect()
}

pub(crate) fn ensure_valid(g: &Game) -> Result<(), crate::Error> {
    let d = validate(g);
    if d.is_empty() {
        Ok(())
    } else {
        Err(crate::Error::InvalidGame(d.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")))
    }
}
