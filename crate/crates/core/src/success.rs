//! Dialogue-level Inform and Success rates.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Dialogue, Goal, Goals, PredictionSet, State};
use crate::db::{Database, SearchMode, DEFAULT_THRESHOLD};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::normalize::{normalize_with, NormalizedUtterance};
use crate::ontology::{Slot, SlotOntology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VenueComparison {
    /// Offered entities must be a non-empty subset of the goal entities.
    Subset,
    /// Offered and goal entities must share at least one entity.
    Intersection,
    /// One offered entity is drawn with a seeded generator and must be a
    /// goal entity. Kept only to reproduce older numbers.
    Sampling,
}

/// Where a turn's active domain comes from. The first three start the
/// fallback chain slot names, predicted hint, state change, carry-over at
/// different points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainSource {
    SlotNames,
    Predicted,
    StateChange,
    /// The turn's annotated domain, used as is.
    GroundTruth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchPolicy {
    pub venue_comparison: VenueComparison,
    pub search_mode: SearchMode,
    pub domain_source: DomainSource,
    pub threshold: f64,
    pub seed: u64,
}

impl MatchPolicy {
    pub fn standard() -> Self {
        MatchPolicy {
            venue_comparison: VenueComparison::Subset,
            search_mode: SearchMode::Full,
            domain_source: DomainSource::SlotNames,
            threshold: DEFAULT_THRESHOLD,
            seed: 0,
        }
    }

    pub fn optimistic() -> Self {
        MatchPolicy {
            venue_comparison: VenueComparison::Intersection,
            search_mode: SearchMode::Reduced,
            domain_source: DomainSource::GroundTruth,
            ..Self::standard()
        }
    }

    pub fn legacy_sampling(seed: u64) -> Self {
        MatchPolicy {
            venue_comparison: VenueComparison::Sampling,
            seed,
            ..Self::standard()
        }
    }
}

impl Default for MatchPolicy {
    fn default() -> Self {
        Self::standard()
    }
}

fn changed_domain(state: &State, prev: &State) -> Option<Domain> {
    let empty = BTreeMap::new();
    Domain::ALL
        .into_iter()
        .find(|d| state.get(d).unwrap_or(&empty) != prev.get(d).unwrap_or(&empty))
}

/// The domain a turn is about, or `None` when nothing identifies one.
pub fn resolve_active_domain(
    response: &NormalizedUtterance,
    hint: Option<Domain>,
    state: &State,
    prev_state: &State,
    prev_domain: Option<Domain>,
    source: DomainSource,
) -> Option<Domain> {
    let from_slots = || response.qualified_domains().next();
    let from_state = || changed_domain(state, prev_state);
    match source {
        DomainSource::GroundTruth => hint,
        DomainSource::SlotNames => from_slots().or(hint).or_else(from_state).or(prev_domain),
        DomainSource::Predicted => hint.or_else(from_state).or(prev_domain),
        DomainSource::StateChange => from_state().or(prev_domain),
    }
}

/// Fills `active_domain` from state changes, carrying the last domain over
/// turns that change nothing. Produces ground-truth domains from annotated
/// states.
pub fn annotate_active_domains(dialogue: &mut Dialogue) {
    let mut prev_state = State::new();
    let mut domain = None;
    for turn in &mut dialogue.turns {
        domain = changed_domain(&turn.state, &prev_state).or(domain);
        turn.active_domain = domain;
        prev_state = turn.state.clone();
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnTrace {
    pub index: usize,
    pub domain: Option<Domain>,
    /// The new offered set when this turn mentioned a name or train ID.
    pub offered_update: Option<BTreeSet<String>>,
    /// Offered sets after this turn.
    pub offered: BTreeMap<Domain, BTreeSet<String>>,
    /// Requestable slots provided up to and including this turn.
    pub provided: BTreeMap<Domain, BTreeSet<Slot>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainOutcome {
    /// Last offered set; `None` if no entity was ever offered.
    pub offered: Option<BTreeSet<String>>,
    /// Entities matching the goal; `None` for domains without a table.
    pub goal_entities: Option<BTreeSet<String>>,
    pub matched: bool,
    pub requested: BTreeSet<Slot>,
    pub missing: BTreeSet<Slot>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueOutcome {
    pub id: String,
    pub informed: bool,
    pub successful: bool,
    /// The dialogue had no turns.
    pub degenerate: bool,
    pub domains: BTreeMap<Domain, DomainOutcome>,
    pub trace: Vec<TurnTrace>,
}

fn dialogue_rng(seed: u64, id: &str) -> ChaCha8Rng {
    let digest = Sha256::digest(id.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    ChaCha8Rng::seed_from_u64(seed ^ u64::from_le_bytes(bytes))
}

/// Tracks offered entities and provided slots over a dialogue and judges
/// the result against the goal. `responses[i]` is the normalized response
/// of `dialogue.turns[i]`.
pub fn evaluate_dialogue(
    dialogue: &Dialogue,
    responses: &[NormalizedUtterance],
    goal: &Goal,
    db: &Database,
    policy: &MatchPolicy,
) -> Result<DialogueOutcome> {
    if responses.len() != dialogue.turns.len() {
        return Err(Error::LengthMismatch {
            hypotheses: responses.len(),
            references: dialogue.turns.len(),
        });
    }
    if dialogue.turns.is_empty() {
        return Ok(DialogueOutcome {
            id: dialogue.id.clone(),
            informed: false,
            successful: false,
            degenerate: true,
            domains: BTreeMap::new(),
            trace: Vec::new(),
        });
    }

    let mut offered: BTreeMap<Domain, BTreeSet<String>> = BTreeMap::new();
    let mut provided: BTreeMap<Domain, BTreeSet<Slot>> = BTreeMap::new();
    let mut trace = Vec::with_capacity(dialogue.turns.len());
    let mut prev_state = State::new();
    let mut prev_domain = None;
    for (turn, response) in dialogue.turns.iter().zip(responses) {
        let domain = resolve_active_domain(
            response,
            turn.active_domain,
            &turn.state,
            &prev_state,
            prev_domain,
            policy.domain_source,
        );
        let mut offered_update = None;
        if let Some(domain) = domain {
            if domain.is_databased() && response.placeholders.iter().any(|p| p.slot.is_entity()) {
                let constraints = turn.state.get(&domain).cloned().unwrap_or_default();
                let result = db
                    .query(domain, &constraints, policy.search_mode, policy.threshold)
                    .map_err(|e| e.at(format!("dialogue {} turn {}", dialogue.id, turn.index)))?;
                offered.insert(domain, result.entity_ids.clone());
                offered_update = Some(result.entity_ids);
            }
            let slots = response
                .placeholders
                .iter()
                .map(|p| p.slot)
                .filter(|s| s.is_requestable());
            provided.entry(domain).or_default().extend(slots);
        }
        trace.push(TurnTrace {
            index: turn.index,
            domain,
            offered_update,
            offered: offered.clone(),
            provided: provided.clone(),
        });
        prev_state = turn.state.clone();
        prev_domain = domain;
    }

    let mut rng = dialogue_rng(policy.seed, &dialogue.id);
    let mut domains = BTreeMap::new();
    for (&domain, domain_goal) in &goal.domains {
        let last_offered = offered.get(&domain).cloned();
        let (goal_entities, matched) = if domain.is_databased() {
            let goal_entities = db
                .query(domain, &domain_goal.constraints, SearchMode::Full, policy.threshold)
                .map_err(|e| e.at(format!("goal of dialogue {}", dialogue.id)))?
                .entity_ids;
            let matched = match &last_offered {
                None => false,
                Some(set) => match policy.venue_comparison {
                    VenueComparison::Subset => !set.is_empty() && set.is_subset(&goal_entities),
                    VenueComparison::Intersection => !set.is_disjoint(&goal_entities),
                    VenueComparison::Sampling => {
                        !set.is_empty() && {
                            let pick = rng.random_range(0..set.len());
                            set.iter().nth(pick).is_some_and(|id| goal_entities.contains(id))
                        }
                    }
                },
            };
            (Some(goal_entities), matched)
        } else {
            (None, true)
        };
        let have = provided.get(&domain).cloned().unwrap_or_default();
        domains.insert(
            domain,
            DomainOutcome {
                offered: last_offered,
                goal_entities,
                matched,
                requested: domain_goal.requested.clone(),
                missing: domain_goal.requested.difference(&have).copied().collect(),
            },
        );
    }
    let informed = domains.values().all(|d| d.matched);
    let successful = informed && domains.values().all(|d| d.missing.is_empty());
    Ok(DialogueOutcome {
        id: dialogue.id.clone(),
        informed,
        successful,
        degenerate: false,
        domains,
        trace,
    })
}

/// Normalizes every response of a dialogue, naming the failing turn.
pub fn normalize_dialogue(
    dialogue: &Dialogue,
    ontology: &SlotOntology,
    style: &str,
) -> Result<Vec<NormalizedUtterance>> {
    dialogue
        .turns
        .iter()
        .map(|t| {
            normalize_with(ontology, &t.response, style)
                .map_err(|e| e.at(format!("dialogue {} turn {}", dialogue.id, t.index)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRates {
    /// Percentages over evaluated dialogues.
    pub inform: f64,
    pub success: f64,
    /// Fraction of goal dialogues that have predictions.
    pub coverage: f64,
    pub evaluated: usize,
    pub outcomes: Vec<DialogueOutcome>,
}

/// Inform and Success over every predicted dialogue.
pub fn corpus_rates(
    predictions: &PredictionSet,
    goals: &Goals,
    db: &Database,
    ontology: &SlotOntology,
    style: &str,
    policy: &MatchPolicy,
) -> Result<CorpusRates> {
    if predictions.dialogues.is_empty() {
        return Err(Error::Empty("no dialogues to evaluate".into()));
    }
    let mut outcomes = Vec::with_capacity(predictions.dialogues.len());
    for (id, dialogue) in &predictions.dialogues {
        let goal = goals
            .get(id)
            .ok_or_else(|| Error::Validation(format!("no goal for dialogue {id}")))?;
        let responses = normalize_dialogue(dialogue, ontology, style)?;
        outcomes.push(evaluate_dialogue(dialogue, &responses, goal, db, policy)?);
    }
    Ok(rates_from_outcomes(outcomes, predictions.coverage(goals.keys())))
}

/// Percent informed and successful over `outcomes`.
pub fn rates_from_outcomes(outcomes: Vec<DialogueOutcome>, coverage: f64) -> CorpusRates {
    let n = outcomes.len().max(1) as f64;
    let informed = outcomes.iter().filter(|o| o.informed).count() as f64;
    let successful = outcomes.iter().filter(|o| o.successful).count() as f64;
    CorpusRates {
        inform: 100.0 * informed / n,
        success: 100.0 * successful / n,
        coverage,
        evaluated: outcomes.len(),
        outcomes,
    }
}
