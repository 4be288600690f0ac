//! Determinacy: certificate families, the Adam-first structural test, and a
//! fixpoint-based decision procedure.
//!
//! A certificate is a finite family of polytopes per state of a binarized
//! game. If it contains the initial element, is closed under the family
//! operator, and its members satisfy three distributivity conditions at
//! Eve and Random states, the standard and ∀∃ values coincide at every
//! horizon. A family that instead *is* the stabilized iterate of the family
//! operator from the initial element only yields the limit statement: the
//! ∀∃ value is a fixpoint of the standard operator.

use serde::Serialize;

use dwc_polytope::rational::one;
use dwc_polytope::{DwcPolytope, PolytopeSet, Rational};

use crate::model::{self, binarize, classify, lift_query, Connective, Game, MdStrategy, Owner, QueryTemplate, StateId};
use crate::vi::{
    cq_step, dq_step, initial_element, intersections, iterate_families, prepare, singleton_families, FamilyMap, Limits,
    Mode, Status,
};
use crate::{Error, Result};

/// Counterexample for one certificate condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// A polytope produced by one family step that is not in the family.
    NotClosed { state: StateId, polytope: DwcPolytope },
    /// The initial polytope of a state is missing from its family.
    MissingInitial { state: StateId, polytope: DwcPolytope },
    /// The intersection of two members is not a member.
    Intersection { state: StateId, left: DwcPolytope, right: DwcPolytope },
    /// `conv(X ∪ X′) ∩ conv(X ∪ X″) ≠ conv(X ∪ (X′ ∩ X″))`.
    ConvexUnion { state: StateId, fixed: DwcPolytope, left: DwcPolytope, right: DwcPolytope },
    /// `(pX + p̄X′) ∩ (pX + p̄X″) ≠ pX + p̄(X′ ∩ X″)`.
    Weighted {
        state: StateId,
        #[serde(with = "dwc_polytope::rational::serde_text")]
        weight: Rational,
        fixed: DwcPolytope,
        left: DwcPolytope,
        right: DwcPolytope,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub holds: bool,
    pub witness: Option<Witness>,
}

impl Check {
    fn from(witness: Option<Witness>) -> Self {
        Check { holds: witness.is_none(), witness }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CertificateReport {
    pub closure_phi: Check,
    pub initial_member: Check,
    /// Successor families of Eve and Random states are intersection-closed.
    pub cond1_intersection_closed: Check,
    /// Convex-union distributivity at Eve states.
    pub cond2_conv_distributes: Check,
    /// Weighted-sum distributivity at Random states.
    pub cond3_weighted_distributes: Check,
    /// Convex-union distributivity at Random states too; informational,
    /// not part of the verdict.
    pub cond2_at_random_states: Check,
    /// The family equals the stabilized family iteration from the initial
    /// element (an alternative to `initial_member`).
    pub stabilized_limit: bool,
    pub verdict: bool,
    pub conclusion: Conclusion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Conclusion {
    /// Standard and ∀∃ values agree at every horizon.
    AllHorizons,
    /// The ∀∃ value is a fixpoint of the standard operator.
    Limit,
    None,
}

/// Iteration budget used to recognise a stabilized limit family.
pub const LIMIT_CHECK_CAP: usize = 1_000;

fn two_successors(g: &Game) -> Result<()> {
    for s in 0..g.len() {
        if !g.is_sink(s) && g.successors(s).len() > 2 {
            return Err(Error::Unsupported(format!(
                "state {} has {} successors; binarize the game first",
                g.label(s),
                g.successors(s).len()
            )));
        }
    }
    Ok(())
}

fn check_shape(g: &Game, q: &QueryTemplate, fam: &FamilyMap) -> Result<()> {
    two_successors(g)?;
    if fam.len() != g.len() {
        return Err(Error::Unsupported(format!("family has {} states, game has {}", fam.len(), g.len())));
    }
    if let Some(s) = (0..g.len()).find(|&s| fam[s].is_empty() || fam[s].dim() != q.dim()) {
        return Err(Error::Unsupported(format!("family at state {s} is empty or has the wrong dimension")));
    }
    Ok(())
}

fn intersection_gap(state: StateId, f: &PolytopeSet) -> Result<Option<Witness>> {
    let members: Vec<&DwcPolytope> = f.iter().collect();
    for (i, a) in members.iter().enumerate() {
        for b in &members[i + 1..] {
            if !f.contains(&a.intersect(b)?) {
                return Ok(Some(Witness::Intersection { state, left: (*a).clone(), right: (*b).clone() }));
            }
        }
    }
    Ok(None)
}

/// Checks distributivity of `combine(X, ·)` over intersection for `X` from
/// one successor and pairs from the other, in both orders.
fn distributivity_gap(g: &Game, s: StateId, fam: &FamilyMap, weighted: bool) -> Result<Option<Witness>> {
    let succ = g.distribution(s).to_vec();
    if succ.len() != 2 {
        return Ok(None);
    }
    for (i, j) in [(0, 1), (1, 0)] {
        let (si, pi) = (&succ[i].0, &succ[i].1);
        let sj = succ[j].0;
        let others: Vec<&DwcPolytope> = fam[sj].iter().collect();
        for x in fam[*si].iter() {
            let combine = |y: &DwcPolytope| -> Result<DwcPolytope> {
                Ok(if weighted {
                    DwcPolytope::weighted_combination(&[(pi.clone(), x), (one() - pi, y)])?
                } else {
                    x.convex_union(y)?
                })
            };
            for (a, y1) in others.iter().enumerate() {
                for y2 in &others[a + 1..] {
                    let lhs = combine(y1)?.intersect(&combine(y2)?)?;
                    let rhs = combine(&y1.intersect(y2)?)?;
                    if lhs != rhs {
                        let (fixed, left, right) = (x.clone(), (*y1).clone(), (*y2).clone());
                        return Ok(Some(if weighted {
                            Witness::Weighted { state: s, weight: pi.clone(), fixed, left, right }
                        } else {
                            Witness::ConvexUnion { state: s, fixed, left, right }
                        }));
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Exhaustively verifies the certificate conditions for `fam` on a game
/// whose non-sink states have at most two successors.
pub fn check_certificate(g: &Game, q: &QueryTemplate, fam: &FamilyMap) -> Result<CertificateReport> {
    model::ensure_valid(g)?;
    check_shape(g, q, fam)?;
    let step = dq_step(g, fam);
    let closure = (0..g.len()).find_map(|s| {
        step[s].iter().find(|p| !fam[s].contains(p)).map(|p| Witness::NotClosed { state: s, polytope: p.clone() })
    });
    let x0 = initial_element(g, q);
    let initial = (0..g.len())
        .find(|&s| !fam[s].contains(&x0[s]))
        .map(|s| Witness::MissingInitial { state: s, polytope: x0[s].clone() });

    let chooser = |s: StateId| !g.is_sink(s) && g.owner(s) != Owner::Adam;
    let mut cond1 = None;
    let mut checked = vec![false; g.len()];
    'outer: for s in (0..g.len()).filter(|&s| chooser(s)) {
        for t in g.successors(s) {
            if std::mem::replace(&mut checked[t], true) {
                continue;
            }
            if let Some(w) = intersection_gap(t, &fam[t])? {
                cond1 = Some(w);
                break 'outer;
            }
        }
    }
    let mut cond2 = None;
    let mut cond3 = None;
    let mut cond2_random = None;
    for s in (0..g.len()).filter(|&s| chooser(s)) {
        match g.owner(s) {
            Owner::Eve if cond2.is_none() => cond2 = distributivity_gap(g, s, fam, false)?,
            Owner::Random => {
                if cond3.is_none() {
                    cond3 = distributivity_gap(g, s, fam, true)?;
                }
                if cond2_random.is_none() {
                    cond2_random = distributivity_gap(g, s, fam, false)?;
                }
            }
            _ => {}
        }
    }
    let report = CertificateReport {
        closure_phi: Check::from(closure),
        initial_member: Check::from(initial),
        cond1_intersection_closed: Check::from(cond1),
        cond2_conv_distributes: Check::from(cond2),
        cond3_weighted_distributes: Check::from(cond3),
        cond2_at_random_states: Check::from(cond2_random),
        stabilized_limit: false,
        verdict: false,
        conclusion: Conclusion::None,
    };
    let stabilized_limit = !report.initial_member.holds && {
        let (limit, _, status) = iterate_families(g, q, Mode::Fixpoint(LIMIT_CHECK_CAP), false, &Limits::default());
        matches!(status, Status::Converged { .. }) && limit == *fam
    };
    let conditions = report.closure_phi.holds
        && report.cond1_intersection_closed.holds
        && report.cond2_conv_distributes.holds
        && report.cond3_weighted_distributes.holds;
    let conclusion = match (conditions, report.initial_member.holds, stabilized_limit) {
        (true, true, _) => Conclusion::AllHorizons,
        (true, false, true) => Conclusion::Limit,
        _ => Conclusion::None,
    };
    Ok(CertificateReport { stabilized_limit, verdict: conclusion != Conclusion::None, conclusion, ..report })
}

/// The game and query a certificate is checked on: goal-unfolded when the
/// objectives are not decided by the current state, then binarized.
pub fn certificate_game(g: &Game, q: &QueryTemplate) -> Result<(Game, QueryTemplate)> {
    let p = prepare(g, q)?;
    let (bg, map) = binarize(&p.game);
    let bq = lift_query(&p.query, &map);
    Ok((bg, bq))
}

/// The five two-dimensional polytopes closed under every operation of a
/// game without proper randomization: origin, both unit segments, the
/// triangle and the full box.
pub fn five_curves() -> PolytopeSet {
    let p = |a: i64, b: i64| vec![Rational::from_integer(a.into()), Rational::from_integer(b.into())];
    let mut set = PolytopeSet::empty(2);
    for poly in [
        DwcPolytope::origin(2),
        DwcPolytope::point(p(0, 1)).unwrap(),
        DwcPolytope::point(p(1, 0)).unwrap(),
        DwcPolytope::from_points([p(0, 1), p(1, 0)]).unwrap(),
        DwcPolytope::full_box(2),
    ] {
        set.insert(poly).expect("all members are two-dimensional");
    }
    set
}

pub fn five_curves_family(g: &Game, q: &QueryTemplate) -> Result<FamilyMap> {
    if q.dim() != 2 {
        return Err(Error::Unsupported(format!("the five-curves family needs two objectives, got {}", q.dim())));
    }
    Ok(vec![five_curves(); g.len()])
}

#[derive(Debug, Clone)]
pub enum LimitFamily {
    Stable { family: FamilyMap, iterations: usize },
    Unconverged { status: Status },
}

/// Iterates the family operator from the initial element (deduplicated,
/// unpruned) until two consecutive iterates coincide.
pub fn limit_family(g: &Game, q: &QueryTemplate, cap: usize, limits: &Limits) -> Result<LimitFamily> {
    model::ensure_valid(g)?;
    let (family, _, status) = iterate_families(g, q, Mode::Fixpoint(cap), false, limits);
    Ok(match status {
        Status::Converged { iterations } => LimitFamily::Stable { family, iterations },
        status => LimitFamily::Unconverged { status },
    })
}

/// Smallest family containing the initial element that is closed under the
/// family operator and under pairwise intersection, or `None` once some
/// state holds more than `cap` polytopes.
pub fn phi_closure_family(g: &Game, q: &QueryTemplate, cap: usize) -> Result<Option<FamilyMap>> {
    model::ensure_valid(g)?;
    let mut fam = singleton_families(&initial_element(g, q));
    loop {
        let mut next = fam.clone();
        for (s, f) in dq_step(g, &fam).into_iter().enumerate() {
            next[s].extend(&f)?;
        }
        for f in next.iter_mut() {
            loop {
                let members: Vec<DwcPolytope> = f.iter().cloned().collect();
                let mut grew = false;
                for (i, a) in members.iter().enumerate() {
                    for b in &members[i + 1..] {
                        grew |= f.insert(a.intersect(b)?)?;
                    }
                }
                if !grew || f.len() > cap {
                    break;
                }
            }
        }
        if next.iter().any(|f| f.len() > cap) {
            return Ok(None);
        }
        if next == fam {
            return Ok(Some(fam));
        }
        fam = next;
    }
}

/// No Eve or Random state can reach an Adam state: Adam moves only before
/// anyone else does.
pub fn adam_first_check(g: &Game) -> bool {
    (0..g.len())
        .filter(|&s| g.owner(s) != Owner::Adam)
        .all(|s| g.reachable_from(s).iter().all(|&t| g.owner(t) != Owner::Adam))
}

/// First horizon `k ≤ kmax` at which the standard value differs from the
/// intersection of the unpruned ∀∃ family at some state, on the prepared game.
pub fn first_horizon_gap(g: &Game, q: &QueryTemplate, kmax: usize) -> Result<Option<usize>> {
    let p = prepare(g, q)?;
    let mut x = initial_element(&p.game, &p.query);
    let mut fam = singleton_families(&x);
    for k in 0..=kmax {
        if intersections(&fam) != x {
            return Ok(Some(k));
        }
        if k < kmax {
            x = cq_step(&p.game, &x)?;
            fam = dq_step(&p.game, &fam);
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Determined,
    NotDetermined,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// The ∀∃ iteration stabilized and its values were tested as a fixpoint
    /// of the standard operator.
    Fixpoint,
    /// Bracket from memoryless deterministic strategies on a sink query.
    MdBracket,
    None,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeterminacyReport {
    pub verdict: Verdict,
    pub route: Route,
    pub iteration_status: Status,
    pub detail: String,
}

/// Decides determinacy of a CQ (any mix of reach and safety) or of a DQ,
/// the latter through its dual CQ on the swapped game.
///
/// The ∀∃ iteration is run to exact stabilization and its values are
/// checked to be a fixpoint of the standard operator. If it does not
/// stabilize within `cap` steps, a sink query is bracketed by memoryless
/// deterministic strategies; a tight bracket proves determinacy at the
/// initial state. Otherwise the answer is `Unknown`.
pub fn decide_determinacy(g: &Game, q: &QueryTemplate, cap: usize, limits: &Limits) -> Result<DeterminacyReport> {
    if q.objectives.is_empty() {
        return Err(Error::QueryClass("query has no objectives".into()));
    }
    let (game, cq) = match q.connective {
        Connective::And => (g.clone(), q.clone()),
        Connective::Or => {
            let (h, d) = model::dualize_dq(g, &q.with_thresholds(vec![one(); q.dim()]))?;
            (h, d.template)
        }
    };
    let p = prepare(&game, &cq)?;
    let (fam, _, status) = iterate_families(&p.game, &p.query, Mode::Fixpoint(cap), true, limits);
    if let Status::Converged { iterations } = status {
        let v = intersections(&fam);
        let fv = cq_step(&p.game, &v)?;
        return Ok(match (0..v.len()).find(|&s| fv[s] != v[s]) {
            None => DeterminacyReport {
                verdict: Verdict::Determined,
                route: Route::Fixpoint,
                iteration_status: status,
                detail: format!("∀∃ values stabilized after {iterations} steps and are a fixpoint of the standard operator"),
            },
            Some(s) => DeterminacyReport {
                verdict: Verdict::NotDetermined,
                route: Route::Fixpoint,
                iteration_status: status,
                detail: format!(
                    "∀∃ values stabilized after {iterations} steps but the standard operator moves state {} from {} to {}",
                    p.game.label(s),
                    v[s],
                    fv[s]
                ),
            },
        });
    }
    if !classify(&game, &cq).is_sink_query {
        return Ok(DeterminacyReport {
            verdict: Verdict::Unknown,
            route: Route::None,
            iteration_status: status,
            detail: "∀∃ iteration did not stabilize and the query is not a sink query".into(),
        });
    }
    Ok(match md_bracket(&game, &cq, crate::oracle::DEFAULT_GUARD)? {
        None => DeterminacyReport {
            verdict: Verdict::Unknown,
            route: Route::None,
            iteration_status: status,
            detail: "∀∃ iteration did not stabilize and the strategy bracket exceeds the enumeration guard".into(),
        },
        Some((inner, outer)) if inner == outer => DeterminacyReport {
            verdict: Verdict::Determined,
            route: Route::MdBracket,
            iteration_status: status,
            detail: format!("memoryless bracket is tight at the initial state: {inner}"),
        },
        Some((inner, outer)) => DeterminacyReport {
            verdict: Verdict::Unknown,
            route: Route::None,
            iteration_status: status,
            detail: format!("memoryless bracket is not tight at the initial state: {inner} ⊊ {outer}"),
        },
    })
}

/// Inner and outer bounds at the initial state: Eve mixing her memoryless
/// deterministic strategies, each judged against every such Adam strategy
/// (inside the standard value), and, per Adam strategy, the hull of Eve's
/// responses (containing the ∀∃ value).
pub fn md_bracket(g: &Game, q: &QueryTemplate, guard: u128) -> Result<Option<(DwcPolytope, DwcPolytope)>> {
    let count = |o: Owner| {
        g.states_of(o).filter(|&s| !g.is_sink(s)).fold(1u128, |a, s| a.saturating_mul(g.successors(s).len() as u128))
    };
    if count(Owner::Eve).saturating_mul(count(Owner::Adam)) > guard {
        return Ok(None);
    }
    let eves = MdStrategy::enumerate(g, Owner::Eve);
    let adams = MdStrategy::enumerate(g, Owner::Adam);
    let table: Vec<Vec<DwcPolytope>> = eves
        .iter()
        .map(|e| {
            adams
                .iter()
                .map(|a| DwcPolytope::point(model::objective_probabilities(g, q, e, a)))
                .collect::<std::result::Result<Vec<_>, _>>()
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let fold = |items: Vec<DwcPolytope>, f: &dyn Fn(&DwcPolytope, &DwcPolytope) -> Result<DwcPolytope>| {
        items.into_iter().try_fold(None, |acc: Option<DwcPolytope>, p| {
            Ok::<_, Error>(Some(match acc {
                None => p,
                Some(a) => f(&a, &p)?,
            }))
        })
    };
    let meet = |a: &DwcPolytope, b: &DwcPolytope| Ok(a.intersect(b)?);
    let join = |a: &DwcPolytope, b: &DwcPolytope| Ok(a.convex_union(b)?);
    let per_eve = table.iter().map(|row| fold(row.clone(), &meet).map(Option::unwrap)).collect::<Result<Vec<_>>>()?;
    let inner = fold(per_eve, &join)?.unwrap();
    let per_adam = (0..adams.len())
        .map(|j| fold(table.iter().map(|row| row[j].clone()).collect(), &join).map(Option::unwrap))
        .collect::<Result<Vec<_>>>()?;
    let outer = fold(per_adam, &meet)?.unwrap();
    debug_assert!(inner.is_subset(&outer).unwrap_or(true));
    Ok(Some((inner, outer)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use dwc_polytope::rat;

    #[test]
    fn five_curves_are_closed() {
        let f = five_curves();
        assert_eq!(f.len(), 5);
        let m: Vec<&DwcPolytope> = f.iter().collect();
        for a in &m {
            for b in &m {
                assert!(f.contains(&a.intersect(b).unwrap()));
                assert!(f.contains(&a.convex_union(b).unwrap()));
            }
        }
        let (g, q) = corpus::no_analog_left();
        assert!(five_curves_family(&g, &QueryTemplate::new(Connective::And, vec![q.objectives[0].clone()])).is_err());
    }

    #[test]
    fn adam_first() {
        assert!(adam_first_check(&corpus::det_strat_mem().0));
        assert!(!adam_first_check(&corpus::intro().0));
        assert!(adam_first_check(&corpus::inf_mem().0));
    }

    #[test]
    fn det_strat_mem_limit_family() {
        let (g, q) = corpus::det_strat_mem();
        let dual = q.dual(&g);
        let (bg, bq) = certificate_game(&g, &dual).unwrap();
        let LimitFamily::Stable { family, .. } = limit_family(&bg, &bq, 50, &Limits::default()).unwrap() else {
            panic!("acyclic game must stabilize");
        };
        for (s, members) in family.iter().enumerate() {
            if bg.owner(s) != Owner::Adam {
                assert_eq!(members.len(), 1, "{}", bg.label(s));
            }
        }
        let r = check_certificate(&bg, &bq, &family).unwrap();
        assert!(r.verdict, "{r:?}");
        // The limit no longer holds the initial element.
        assert!(!r.initial_member.holds);
        assert_eq!(r.conclusion, Conclusion::Limit);
        // The closure family carries the all-horizon statement.
        let closure = phi_closure_family(&bg, &bq, 100).unwrap().unwrap();
        let c = check_certificate(&bg, &bq, &closure).unwrap();
        assert!(c.closure_phi.holds && c.initial_member.holds && c.cond1_intersection_closed.holds);
    }

    #[test]
    fn broken_family_reports_intersection() {
        let (g, q) = corpus::flower(2).unwrap();
        let (bg, bq) = certificate_game(&g, &q).unwrap();
        let mut fam = five_curves_family(&bg, &bq).unwrap();
        let ok = check_certificate(&bg, &bq, &fam).unwrap();
        assert!(ok.verdict, "{ok:?}");
        // Remove the origin from a successor of an Eve state.
        let eve = bg.states_of(Owner::Eve).find(|&s| !bg.is_sink(s)).unwrap();
        let t = bg.successors(eve)[0];
        let mut without = PolytopeSet::empty(2);
        for p in fam[t].iter().filter(|p| **p != DwcPolytope::origin(2)) {
            without.insert(p.clone()).unwrap();
        }
        fam[t] = without;
        let r = check_certificate(&bg, &bq, &fam).unwrap();
        assert!(!r.verdict);
        assert!(matches!(r.cond1_intersection_closed.witness, Some(Witness::Intersection { .. })));
    }

    #[test]
    fn rejects_unbinarized() {
        let (g, q) = corpus::no_analog_right();
        let fam = five_curves_family(&g, &q).unwrap();
        assert!(check_certificate(&g, &q, &fam).is_err());
    }

    #[test]
    fn intro_cq_is_not_determined() {
        let (g, q) = corpus::intro();
        let cq = q.with_connective(Connective::And);
        let r = decide_determinacy(&g, &cq, 100, &Limits::default()).unwrap();
        assert_eq!(r.verdict, Verdict::NotDetermined, "{}", r.detail);
        assert_eq!(first_horizon_gap(&g, &cq, 3).unwrap(), Some(2));
    }

    #[test]
    fn det_strat_mem_is_determined() {
        let (g, q) = corpus::det_strat_mem();
        for t in [q.with_connective(Connective::And), q.dual(&g)] {
            let r = decide_determinacy(&g, &t, 100, &Limits::default()).unwrap();
            assert_eq!(r.verdict, Verdict::Determined, "{}", r.detail);
            assert_eq!(first_horizon_gap(&g, &t, 6).unwrap(), None);
        }
    }

    #[test]
    fn bracket_on_inf_mem() {
        // Eve alone: the bracket is her memoryless hull, (1,0)–(0,1).
        let (g, q) = corpus::inf_mem();
        let (inner, outer) = md_bracket(&g, &q, 1000).unwrap().unwrap();
        assert_eq!(inner, outer);
        assert!(inner.contains_point(&[rat(1, 2), rat(1, 2)], false).unwrap());
    }
}
