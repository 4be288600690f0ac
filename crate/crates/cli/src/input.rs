//! Loading games, queries and certificate families.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use dwc_polytope::rational::in_unit_interval;
use dwc_polytope::{format_rational, parse_rational, DwcPolytope, PolytopeSet};
use mosg::io::{self, LoadedGame};
use mosg::vi::FamilyMap;
use mosg::{corpus, Game, QueryTemplate, ThresholdQuery};

use crate::args::InputArgs;

/// A validated game with its query, thresholds optional.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub game: Game,
    pub template: QueryTemplate,
    pub thresholds: Option<ThresholdQuery>,
}

impl Inputs {
    pub fn require_thresholds(&self) -> Result<&ThresholdQuery> {
        self.thresholds
            .as_ref()
            .ok_or_else(|| anyhow!("thresholds are needed (--thresholds or a query file with thresholds)"))
    }

    /// Thresholds if given, otherwise every objective at probability one.
    pub fn thresholds_or_ones(&self) -> ThresholdQuery {
        self.thresholds
            .clone()
            .unwrap_or_else(|| self.template.with_thresholds(vec![dwc_polytope::rational::one(); self.template.dim()]))
    }
}

pub fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// Builds the game and query described by the input flags.
pub fn parse_inputs(a: &InputArgs) -> Result<Inputs> {
    let (loaded, builtin_query) = match (&a.game, &a.builtin) {
        (Some(path), None) => {
            let loaded = io::parse_game(&read(path)?).with_context(|| format!("in {}", path.display()))?;
            (loaded, None)
        }
        (None, Some(name)) => {
            let (game, q) = corpus::build_named(name, a.n)?;
            let ids = (0..game.len()).map(|i| (i as u64, i)).collect();
            (LoadedGame { game, ids }, Some(q))
        }
        _ => bail!("give exactly one of --game and --builtin"),
    };
    let (template, mut thresholds) = match (&a.query, builtin_query) {
        (Some(path), _) => {
            let q = io::parse_query(&read(path)?, &loaded).with_context(|| format!("in {}", path.display()))?;
            (q.template, q.thresholds)
        }
        (None, Some(q)) => (q, None),
        (None, None) => bail!("a query file is needed (--query)"),
    };
    let mut game = loaded.game;
    if let Some(label) = &a.from {
        let s = game.find(label).ok_or_else(|| anyhow!("no state labelled {label:?}"))?;
        game = game.with_initial(s);
    }
    if let Some(texts) = &a.thresholds {
        thresholds = Some(parse_thresholds(texts, &template)?);
    }
    Ok(Inputs { game, template, thresholds })
}

/// Non-strict thresholds, one per objective, each in `[0, 1]`.
pub fn parse_thresholds(texts: &[String], template: &QueryTemplate) -> Result<ThresholdQuery> {
    if texts.len() != template.dim() {
        bail!("{} thresholds for {} objectives", texts.len(), template.dim());
    }
    let xs = texts
        .iter()
        .map(|t| parse_rational(t).with_context(|| format!("threshold {t:?}")))
        .collect::<Result<Vec<_>>>()?;
    if let Some(x) = xs.iter().find(|x| !in_unit_interval(x)) {
        bail!("threshold {} outside [0,1]", format_rational(x));
    }
    Ok(template.with_thresholds(xs))
}

fn unique_labels(g: &Game) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    match (0..g.len()).map(|s| g.label(s)).find(|l| !seen.insert(*l)) {
        Some(l) => bail!("state label {l:?} is not unique, so certificates cannot refer to it"),
        None => Ok(()),
    }
}

/// A certificate file maps every state label to its list of polytopes.
pub fn parse_family(text: &str, g: &Game) -> Result<FamilyMap> {
    unique_labels(g)?;
    let mut by_label: BTreeMap<String, Vec<DwcPolytope>> = serde_json::from_str(text).context("certificate file")?;
    (0..g.len())
        .map(|s| {
            let label = g.label(s);
            let polys =
                by_label.remove(label).ok_or_else(|| anyhow!("certificate has no entry for state {label:?}"))?;
            let mut set = PolytopeSet::empty(polys.first().map_or(2, DwcPolytope::dim));
            for p in polys {
                set.insert(p).with_context(|| format!("certificate entry {label:?}"))?;
            }
            Ok(set)
        })
        .collect::<Result<_>>()
        .and_then(|fam| match by_label.keys().next() {
            Some(extra) => Err(anyhow!("certificate names unknown state {extra:?}")),
            None => Ok(fam),
        })
}

/// Inverse of [`parse_family`].
pub fn family_to_json(fam: &FamilyMap, g: &Game) -> Result<serde_json::Value> {
    unique_labels(g)?;
    let map: BTreeMap<&str, Vec<&DwcPolytope>> = (0..g.len()).map(|s| (g.label(s), fam[s].iter().collect())).collect();
    Ok(serde_json::to_value(map)?)
}
