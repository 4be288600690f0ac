//! Command dispatch.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{anyhow, bail, Context, Result};
use dwc_polytope::{format_rational, DwcPolytope, Region};
use mosg::corpus::{self, CsvRecord, ExperimentConfig, NAMES};
use mosg::determinacy::{
    adam_first_check, certificate_game, check_certificate, decide_determinacy, first_horizon_gap, five_curves_family,
    limit_family, LimitFamily, Verdict,
};
use mosg::oracle::{
    dq_standard_oracle, forall_exists_oracle, simulate_counter_strategy, ultimately_periodic_prob, BitWord,
};
use mosg::qualitative::{alternating_safety_det, solve_qual_dq};
use mosg::si::{si_solve, SiMode, SiOptions, SiValue};
use mosg::vi::{
    dq_achievable_point_limited, run_cq_vi_limited, run_forall_exists_vi_limited, solve_dq_regions, Decision,
    IterationStats, Limits, Mode, Status,
};
use mosg::{io, Connective, Game, QueryTemplate};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::input::{family_to_json, parse_family, parse_inputs, read, Inputs};
use crate::svg;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    /// A decision came out negative.
    Negative = 1,
    InputError = 2,
    /// Unconverged, truncated, timed out or otherwise undecided.
    Unknown = 3,
}

impl Exit {
    fn decision(yes: bool) -> Self {
        if yes {
            Exit::Success
        } else {
            Exit::Negative
        }
    }

    fn complete(status: &Status) -> Self {
        if status.is_complete() {
            Exit::Success
        } else {
            Exit::Unknown
        }
    }
}

/// What a command produced and where it goes (stdout when `out` is `None`).
#[derive(Debug)]
pub struct Outcome {
    pub body: String,
    pub out: Option<PathBuf>,
    pub exit: Exit,
}

impl Outcome {
    fn new(body: String, out: &Option<PathBuf>, exit: Exit) -> Self {
        Outcome { body, out: out.clone(), exit }
    }
}

/// Exit code for a failed command: exhausted enumeration guards are
/// undecided, everything else is an input problem.
pub fn exit_for_error(e: &anyhow::Error) -> Exit {
    match e.downcast_ref::<mosg::Error>() {
        Some(mosg::Error::Guard { .. }) => Exit::Unknown,
        _ => Exit::InputError,
    }
}

pub fn to_json<T: Serialize + ?Sized>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

impl IterArgs {
    fn mode(&self) -> Mode {
        self.k.map_or(Mode::Fixpoint(self.fixpoint_cap), Mode::Horizon)
    }

    fn limits(&self) -> Limits {
        limits(self.family_cap, self.timeout_ms)
    }
}

fn limits(family_cap: usize, timeout_ms: Option<u64>) -> Limits {
    Limits { family_cap, deadline: timeout_ms.map(|ms| Instant::now() + Duration::from_millis(ms)) }
}

fn stats_rows(stats: &IterationStats) -> Vec<(usize, usize, usize)> {
    stats.rows()
}

/// Iteration counts in the experiment CSV schema; timings are left at zero
/// so that the bytes only depend on the input.
fn stats_csv(stats: &IterationStats, pruned: bool) -> Result<String> {
    let records: Vec<CsvRecord> = stats
        .rows()
        .into_iter()
        .map(|(k, state, n)| CsvRecord {
            instance_id: 0,
            seed: 0,
            k,
            state,
            count_pruned: pruned.then_some(n),
            count_unpruned: (!pruned).then_some(n),
            timeout_pruned: false,
            timeout_unpruned: false,
            wall_ms: 0,
        })
        .collect();
    let mut buf = Vec::new();
    corpus::write_csv(&records, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

fn labelled<T: Serialize>(g: &Game, key: &str, values: &[T]) -> Vec<Value> {
    values.iter().enumerate().map(|(s, v)| json!({ "state": s, "label": g.label(s), key: v })).collect()
}

fn require_disjunctive(q: &QueryTemplate) -> Result<()> {
    if q.connective != Connective::Or {
        bail!("this command needs a disjunctive query (connective \"or\")");
    }
    Ok(())
}

/// Conjunctive form of a query: itself, or the dual of a disjunctive one.
fn cq_form(g: &Game, q: &QueryTemplate) -> QueryTemplate {
    match q.connective {
        Connective::And => q.clone(),
        Connective::Or => q.dual(g),
    }
}

fn no_format(format: Format, allowed: &[Format]) -> Result<()> {
    if !allowed.contains(&format) {
        bail!("output format {format:?} is not available for this command");
    }
    Ok(())
}

pub fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Solve { input, iter, semantics, prune, output } => {
            solve(&input, &iter, semantics, prune.enabled(), &output)
        }
        Command::Dq { input, iter, output } => dq(&input, &iter, &output),
        Command::Determinacy { check } => determinacy(check),
        Command::Si { input, mode, prune, fixpoint_cap, trace, output } => {
            si(&input, mode, prune.enabled(), fixpoint_cap, trace, &output)
        }
        Command::Qual { input, semantics, output } => qual(&input, semantics, &output),
        Command::Oracle { check } => oracle(check),
        Command::Zoo { name, n, out } => match name {
            None => Ok(Outcome::new(NAMES.iter().map(|n| format!("{n}\n")).collect(), &None, Exit::Success)),
            Some(name) => {
                let (g, q) = corpus::build_named(&name, n)?;
                emit_instance(&name, &g, &q, out.as_deref())
            }
        },
        Command::Generate { m, l, seed, acyclic, out } => {
            let (g, q) = if acyclic { corpus::random_acyclic_game(m, seed)? } else { corpus::random_game(m, l, seed)? };
            emit_instance(&format!("random-{seed}"), &g, &q, out.as_deref())
        }
        Command::Bench { instances, m, l, seed, k, timeout_ms, all, pruned_only, format, out } => {
            no_format(format, &[Format::Csv, Format::Json])?;
            let cfg = ExperimentConfig {
                instances,
                m,
                l,
                seed,
                horizons: (1..=k).collect(),
                timeout: Duration::from_millis(timeout_ms),
                hard_only: !all,
                compare_unpruned: !pruned_only,
                ..ExperimentConfig::default()
            };
            let report = corpus::run_experiment(&cfg)?;
            let body = match format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    corpus::write_csv(&report.records, &mut buf)?;
                    String::from_utf8(buf).expect("csv is utf-8")
                }
                _ => to_json(&json!({
                    "instances": report.runs.len(),
                    "attempts": report.attempts,
                    "easy": report.easy,
                    "rows": report.rows,
                })),
            };
            Ok(Outcome::new(body, &out, Exit::Success))
        }
        Command::Render { input, out } => {
            let v: Value = serde_json::from_str(&read(&input)?).with_context(|| format!("in {}", input.display()))?;
            let parts = drawable(&v).ok_or_else(|| anyhow!("{} holds no polytope or region", input.display()))?;
            Ok(Outcome::new(svg::render(&parts)?, &out, Exit::Success))
        }
        Command::Validate { game, query } => validate(&game, query.as_deref()),
    }
}

/// Polytope, region, or a result object carrying one.
fn drawable(v: &Value) -> Option<Vec<DwcPolytope>> {
    if let Ok(p) = serde_json::from_value::<DwcPolytope>(v.clone()) {
        return Some(vec![p]);
    }
    if let Ok(r) = serde_json::from_value::<Region>(v.clone()) {
        return Some(r.parts().to_vec());
    }
    let obj = v.as_object()?;
    ["region", "value", "polytope"].iter().find_map(|k| obj.get(*k).and_then(drawable))
}

fn emit_instance(name: &str, g: &Game, q: &QueryTemplate, dir: Option<&Path>) -> Result<Outcome> {
    let game = io::game_to_file(g);
    let query = io::template_to_file(q);
    let Some(dir) = dir else {
        return Ok(Outcome::new(to_json(&json!({ "game": game, "query": query })), &None, Exit::Success));
    };
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut written = String::new();
    for (suffix, text) in [("game", io::write_game(g)), ("query", io::write_query(&query))] {
        let path = dir.join(format!("{name}.{suffix}.json"));
        std::fs::write(&path, text + "\n").with_context(|| format!("cannot write {}", path.display()))?;
        written.push_str(&format!("{}\n", path.display()));
    }
    Ok(Outcome::new(written, &None, Exit::Success))
}

fn solve(
    input: &InputArgs,
    iter: &IterArgs,
    semantics: Semantics,
    prune: bool,
    output: &OutputArgs,
) -> Result<Outcome> {
    let inp = parse_inputs(input)?;
    let (game, values, families, stats, status) = match semantics {
        Semantics::Standard => {
            let sol = run_cq_vi_limited(&inp.game, &inp.template, iter.mode(), &iter.limits())?;
            (sol.prepared.game, sol.values, None, sol.stats, sol.status)
        }
        Semantics::ForallExists => {
            let sol = run_forall_exists_vi_limited(&inp.game, &inp.template, iter.mode(), prune, &iter.limits())?;
            (sol.prepared.game, sol.values, Some(sol.families), sol.stats, sol.status)
        }
    };
    let value = &values[game.initial];
    let achievable = match &inp.thresholds {
        None => None,
        Some(tq) => {
            let strict = match (tq.strict.iter().all(|&b| b), tq.strict.iter().any(|&b| b)) {
                (true, _) => true,
                (false, false) => false,
                _ => bail!("mixed strict and non-strict thresholds are not supported here"),
            };
            Some(value.contains_point(&tq.thresholds, strict)?)
        }
    };
    let mut exit = Exit::complete(&status);
    if let (Exit::Success, Some(a)) = (exit, achievable) {
        exit = Exit::decision(a);
    }
    let body = match output.format {
        Format::Svg => svg::render(std::slice::from_ref(value))?,
        Format::Csv => stats_csv(&stats, semantics == Semantics::Standard || prune)?,
        Format::Json => {
            let mut states = labelled(&game, "value", &values);
            if let Some(fam) = &families {
                for (entry, f) in states.iter_mut().zip(fam) {
                    entry["family"] = serde_json::to_value(f.iter().collect::<Vec<_>>())?;
                }
            }
            to_json(&json!({
                "semantics": match semantics { Semantics::Standard => "standard", Semantics::ForallExists => "forall-exists" },
                "status": status,
                "initial": game.label(game.initial),
                "value": value,
                "achievable": achievable,
                "states": states,
                "stats": stats_rows(&stats),
            }))
        }
    };
    Ok(Outcome::new(body, &output.out, exit))
}

fn dq(input: &InputArgs, iter: &IterArgs, output: &OutputArgs) -> Result<Outcome> {
    let inp = parse_inputs(input)?;
    require_disjunctive(&inp.template)?;
    if let Some(tq) = &inp.thresholds {
        no_format(output.format, &[Format::Json])?;
        let decision = dq_achievable_point_limited(&inp.game, tq, iter.mode(), &iter.limits())?;
        let exit = match decision {
            Decision::Yes => Exit::Success,
            Decision::No => Exit::Negative,
            Decision::Unknown => Exit::Unknown,
        };
        let body = to_json(&json!({
            "initial": inp.game.label(inp.game.initial),
            "thresholds": tq.thresholds.iter().map(format_rational).collect::<Vec<_>>(),
            "decision": decision,
        }));
        return Ok(Outcome::new(body, &output.out, exit));
    }
    let sol = solve_dq_regions(&inp.game, &inp.template, iter.mode(), &iter.limits())?;
    let game = &sol.dual.prepared.game;
    let body = match output.format {
        Format::Svg => svg::render(sol.initial_region().parts())?,
        Format::Csv => stats_csv(&sol.dual.stats, true)?,
        Format::Json => to_json(&json!({
            "status": sol.dual.status,
            "initial": game.label(game.initial),
            "region": sol.initial_region(),
            "states": labelled(game, "region", &sol.regions),
        })),
    };
    Ok(Outcome::new(body, &output.out, Exit::complete(&sol.dual.status)))
}

fn determinacy(check: DeterminacyCommand) -> Result<Outcome> {
    match check {
        DeterminacyCommand::Certify { input, family, family_file, dump_family, fixpoint_cap } => {
            let inp = parse_inputs(&input)?;
            let cq = cq_form(&inp.game, &inp.template);
            let (bg, bq) = certificate_game(&inp.game, &cq)?;
            let fam = match family {
                FamilyArg::FiveCurves => five_curves_family(&bg, &bq)?,
                FamilyArg::Limit => match limit_family(&bg, &bq, fixpoint_cap, &Limits::default())? {
                    LimitFamily::Stable { family, .. } => family,
                    LimitFamily::Unconverged { status } => {
                        return Ok(Outcome::new(to_json(&json!({ "status": status })), &None, Exit::Unknown));
                    }
                },
                FamilyArg::File => {
                    let path = family_file.ok_or_else(|| anyhow!("--family file needs --family-file"))?;
                    parse_family(&read(&path)?, &bg).with_context(|| format!("in {}", path.display()))?
                }
            };
            if let Some(path) = dump_family {
                let text = to_json(&family_to_json(&fam, &bg)?);
                std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
            }
            let report = check_certificate(&bg, &bq, &fam)?;
            let exit = Exit::decision(report.verdict);
            let body = to_json(&json!({ "certificate_states": bg.len(), "report": report }));
            Ok(Outcome::new(body, &None, exit))
        }
        DeterminacyCommand::Structural { input, kmax } => {
            let inp = parse_inputs(&input)?;
            let adam_first = adam_first_check(&inp.game);
            let gap = first_horizon_gap(&inp.game, &cq_form(&inp.game, &inp.template), kmax)?;
            let exit = match (gap, adam_first) {
                (Some(_), _) => Exit::Negative,
                (None, true) => Exit::Success,
                (None, false) => Exit::Unknown,
            };
            let body = to_json(&json!({ "adam_first": adam_first, "kmax": kmax, "first_horizon_gap": gap }));
            Ok(Outcome::new(body, &None, exit))
        }
        DeterminacyCommand::Decide { input, fixpoint_cap, family_cap, timeout_ms } => {
            let inp = parse_inputs(&input)?;
            let report = decide_determinacy(&inp.game, &inp.template, fixpoint_cap, &limits(family_cap, timeout_ms))?;
            let exit = match report.verdict {
                Verdict::Determined => Exit::Success,
                Verdict::NotDetermined => Exit::Negative,
                Verdict::Unknown => Exit::Unknown,
            };
            Ok(Outcome::new(to_json(&report), &None, exit))
        }
    }
}

fn si(
    input: &InputArgs,
    mode: SiModeArg,
    prune: bool,
    cap: usize,
    trace: bool,
    output: &OutputArgs,
) -> Result<Outcome> {
    no_format(output.format, &[Format::Json, Format::Svg])?;
    let inp = parse_inputs(input)?;
    let mode = match mode {
        SiModeArg::DqStandard => SiMode::DqStandard,
        SiModeArg::CqForallExists => SiMode::CqForallExists,
    };
    let sol =
        si_solve(&inp.game, &inp.template, mode, SiOptions { prune, iteration_cap: cap, ..SiOptions::default() })?;
    let exit = if sol.exact { Exit::Success } else { Exit::Unknown };
    let body = match output.format {
        Format::Svg => match &sol.value {
            SiValue::Region { region } => svg::render(region.parts())?,
            SiValue::Polytope { polytope } => svg::render(std::slice::from_ref(polytope))?,
        },
        _ => to_json(&json!({
            "mode": mode,
            "exact": sol.exact,
            "strategies_visited": sol.trace.visits.len(),
            "value": sol.value,
            "trace": trace.then_some(&sol.trace),
        })),
    };
    Ok(Outcome::new(body, &output.out, exit))
}

fn qual(input: &InputArgs, semantics: QualSemantics, output: &OutputArgs) -> Result<Outcome> {
    no_format(output.format, &[Format::Json])?;
    let inp: Inputs = parse_inputs(input)?;
    let tq = inp.thresholds_or_ones();
    let (achievable, witness) = match semantics {
        QualSemantics::General => solve_qual_dq(&inp.game, &tq)?,
        QualSemantics::Deterministic => (alternating_safety_det(&inp.game, &tq)?, None),
    };
    let body = to_json(&json!({ "achievable": achievable, "witness_objective": witness }));
    Ok(Outcome::new(body, &output.out, Exit::decision(achievable)))
}

fn oracle(check: OracleCommand) -> Result<Outcome> {
    let (body, exit) = match check {
        OracleCommand::ForallExists { input, k, guard } => {
            let inp = parse_inputs(&input)?;
            let brute = forall_exists_oracle(&inp.game, &inp.template, k, guard)?;
            let vi =
                run_forall_exists_vi_limited(&inp.game, &inp.template, Mode::Horizon(k), true, &Limits::default())?;
            let agree = &brute == vi.initial_value();
            (
                json!({ "k": k, "oracle": brute, "value_iteration": vi.initial_value(), "agree": agree }),
                Exit::decision(agree),
            )
        }
        OracleCommand::Dq { input, guard } => {
            let inp = parse_inputs(&input)?;
            let tq = inp.require_thresholds()?;
            let depth = inp.game.depth().ok_or_else(|| anyhow!("the enumeration oracle needs an acyclic game"))?;
            let brute = dq_standard_oracle(&inp.game, tq, guard)?;
            let vi = dq_achievable_point_limited(&inp.game, tq, Mode::Horizon(depth), &Limits::default())?;
            let agree = vi == Decision::from_bool(brute);
            (json!({ "oracle": brute, "value_iteration": vi, "agree": agree }), Exit::decision(agree))
        }
        OracleCommand::Binary { prefix, period, horizon } => {
            let w = BitWord::parse(&prefix, &period)?;
            let exact = ultimately_periodic_prob(&w);
            let (g, _) = corpus::inf_mem();
            let (hub, target) = (g.find("s").expect("hub"), g.find("T1").expect("target"));
            let simulated = simulate_counter_strategy(&g, hub, target, horizon, &|i| usize::from(!w.bit(i)));
            let gap = &exact - &simulated;
            (
                json!({
                    "probability": format_rational(&exact),
                    "simulated": format_rational(&simulated),
                    "horizon": horizon,
                    "gap": format_rational(&gap),
                }),
                Exit::Success,
            )
        }
    };
    Ok(Outcome::new(to_json(&body), &None, exit))
}

fn validate(game: &Path, query: Option<&Path>) -> Result<Outcome> {
    let text = read(game)?;
    let file: io::GameFile = serde_json::from_str(&text).with_context(|| format!("in {}", game.display()))?;
    let loaded = match io::game_from_file(&file) {
        Ok(l) => l,
        Err(mosg::Error::InvalidGame(msg)) => {
            let body = to_json(&json!({ "valid": false, "diagnostics": msg.split("; ").collect::<Vec<_>>() }));
            return Ok(Outcome::new(body, &None, Exit::Negative));
        }
        Err(e) => return Err(e).with_context(|| format!("in {}", game.display())),
    };
    let g = &loaded.game;
    let mut report = json!({
        "valid": true,
        "states": g.len(),
        "acyclic": g.is_acyclic(),
        "depth": g.depth(),
    });
    if let Some(path) = query {
        let q = io::parse_query(&read(path)?, &loaded).with_context(|| format!("in {}", path.display()))?;
        let class = mosg::model::classify(g, &q.template);
        report["objectives"] = json!(q.template.dim());
        report["sink_query"] = json!(class.is_sink_query);
        report["has_thresholds"] = json!(q.thresholds.is_some());
    }
    Ok(Outcome::new(to_json(&report), &None, Exit::Success))
}
