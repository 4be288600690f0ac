//! JSON file formats for games and queries.
//!
//! State ids in files are arbitrary distinct integers; they are remapped to
//! dense indices on load and written back as indices.

use std::collections::HashMap;

use dwc_polytope::{format_rational, parse_rational, Rational};
use serde::{Deserialize, Serialize};

use crate::model::{validate, Connective, Game, Kind, Objective, Owner, QueryTemplate, State, StateId, ThresholdQuery};
use crate::Error;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateEntry {
    pub id: u64,
    #[serde(default)]
    pub label: Option<String>,
    pub owner: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeEntry {
    pub from: u64,
    pub to: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prob: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameFile {
    pub states: Vec<StateEntry>,
    pub initial: u64,
    pub edges: Vec<EdgeEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectiveEntry {
    pub kind: Kind,
    pub set: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryFile {
    pub connective: Connective,
    pub objectives: Vec<ObjectiveEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strict: Option<Vec<bool>>,
}

/// A loaded game plus the map from file ids to state indices.
#[derive(Debug, Clone)]
pub struct LoadedGame {
    pub game: Game,
    pub ids: HashMap<u64, StateId>,
}

fn parse_owner(s: &str, id: u64) -> Result<Owner, Error> {
    match s {
        "eve" => Ok(Owner::Eve),
        "adam" => Ok(Owner::Adam),
        "random" => Ok(Owner::Random),
        other => Err(Error::Parse(format!("state {id}: unknown owner {other:?} (expected eve, adam or random)"))),
    }
}

pub fn game_from_file(f: &GameFile) -> Result<LoadedGame, Error> {
    let mut ids = HashMap::new();
    let mut states = Vec::with_capacity(f.states.len());
    for (i, st) in f.states.iter().enumerate() {
        if ids.insert(st.id, i).is_some() {
            return Err(Error::Parse(format!("state {}: duplicate id", st.id)));
        }
        let owner = parse_owner(&st.owner, st.id)?;
        states.push(State { label: st.label.clone().unwrap_or_else(|| st.id.to_string()), owner });
    }
    let lookup = |id: u64, what: &str| {
        ids.get(&id).copied().ok_or_else(|| Error::Parse(format!("{what}: unknown state id {id}")))
    };
    let initial = lookup(f.initial, "initial")?;
    let mut moves: Vec<Vec<(StateId, Rational)>> = vec![Vec::new(); states.len()];
    for (k, e) in f.edges.iter().enumerate() {
        let from = lookup(e.from, &format!("edge {k} from"))?;
        let to = lookup(e.to, &format!("edge {k} to"))?;
        let p = match (&e.prob, states[from].owner) {
            (Some(p), Owner::Random) => {
                parse_rational(p).map_err(|err| Error::Parse(format!("edge {k} ({} → {}): {err}", e.from, e.to)))?
            }
            (None, Owner::Random) => {
                return Err(Error::Parse(format!("edge {k} ({} → {}): random state needs a probability", e.from, e.to)))
            }
            _ => dwc_polytope::rational::one(),
        };
        moves[from].push((to, p));
    }
    let game = Game { states, initial, moves };
    let diags = validate(&game);
    if !diags.is_empty() {
        return Err(Error::InvalidGame(diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")));
    }
    Ok(LoadedGame { game, ids })
}

pub fn game_to_file(g: &Game) -> GameFile {
    let states = g
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| StateEntry {
            id: i as u64,
            label: Some(s.label.clone()),
            owner: match s.owner {
                Owner::Eve => "eve",
                Owner::Adam => "adam",
                Owner::Random => "random",
            }
            .to_string(),
        })
        .collect();
    let mut edges = Vec::new();
    for (s, mv) in g.moves.iter().enumerate() {
        for (t, p) in mv {
            let prob = (g.owner(s) == Owner::Random).then(|| format_rational(p));
            edges.push(EdgeEntry { from: s as u64, to: *t as u64, prob });
        }
    }
    GameFile { states, initial: g.initial as u64, edges }
}

pub fn parse_game(text: &str) -> Result<LoadedGame, Error> {
    let f: GameFile = serde_json::from_str(text).map_err(|e| Error::Parse(format!("game file: {e}")))?;
    game_from_file(&f)
}

pub fn write_game(g: &Game) -> String {
    serde_json::to_string_pretty(&game_to_file(g)).expect("game serialization cannot fail")
}

/// A parsed query: the template plus thresholds when the file carries them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadedQuery {
    pub template: QueryTemplate,
    pub thresholds: Option<ThresholdQuery>,
}

pub fn query_from_file(f: &QueryFile, loaded: &LoadedGame) -> Result<LoadedQuery, Error> {
    if f.objectives.is_empty() {
        return Err(Error::Parse("query has no objectives".into()));
    }
    let mut objectives = Vec::new();
    for (i, o) in f.objectives.iter().enumerate() {
        let mut set = std::collections::BTreeSet::new();
        for id in &o.set {
            let s = loaded.ids.get(id).ok_or_else(|| Error::Parse(format!("objective {i}: unknown state id {id}")))?;
            set.insert(*s);
        }
        objectives.push(Objective { kind: o.kind, set });
    }
    let template = QueryTemplate::new(f.connective, objectives);
    let thresholds = match &f.thresholds {
        None => None,
        Some(ts) => {
            if ts.len() != template.dim() {
                return Err(Error::Parse(format!("{} thresholds for {} objectives", ts.len(), template.dim())));
            }
            let xs = ts
                .iter()
                .enumerate()
                .map(|(i, t)| parse_rational(t).map_err(|e| Error::Parse(format!("threshold {i}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(x) = xs.iter().find(|x| !dwc_polytope::rational::in_unit_interval(x)) {
                return Err(Error::Parse(format!("threshold {} outside [0,1]", format_rational(x))));
            }
            let strict = f.strict.clone().unwrap_or_else(|| vec![false; xs.len()]);
            if strict.len() != xs.len() {
                return Err(Error::Parse("strict flags and thresholds differ in length".into()));
            }
            Some(ThresholdQuery { template: template.clone(), thresholds: xs, strict })
        }
    };
    Ok(LoadedQuery { template, thresholds })
}

pub fn parse_query(text: &str, loaded: &LoadedGame) -> Result<LoadedQuery, Error> {
    let f: QueryFile = serde_json::from_str(text).map_err(|e| Error::Parse(format!("query file: {e}")))?;
    query_from_file(&f, loaded)
}

fn objective_entries(q: &QueryTemplate) -> Vec<ObjectiveEntry> {
    q.objectives
        .iter()
        .map(|o| ObjectiveEntry { kind: o.kind, set: o.set.iter().map(|&s| s as u64).collect() })
        .collect()
}

pub fn template_to_file(q: &QueryTemplate) -> QueryFile {
    QueryFile { connective: q.connective, objectives: objective_entries(q), thresholds: None, strict: None }
}

pub fn threshold_query_to_file(q: &ThresholdQuery) -> QueryFile {
    QueryFile {
        connective: q.template.connective,
        objectives: objective_entries(&q.template),
        thresholds: Some(q.thresholds.iter().map(format_rational).collect()),
        strict: Some(q.strict.clone()),
    }
}

pub fn write_query(f: &QueryFile) -> String {
    serde_json::to_string_pretty(f).expect("query serialization cannot fail")
}
