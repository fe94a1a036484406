//! Goal overlap between dataset folds.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::canon::DONTCARE;
use crate::corpus::{Goal, Goals};
use crate::domain::Domain;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub test_dialogues: usize,
    /// Test goals equal to some train or validation goal.
    pub duplicated_test_goals: usize,
    /// Test (slot, value) pairs never seen in train or validation.
    pub unseen_slot_value_pairs: usize,
    /// Test (domain, slot, value) triplets never seen in train or validation.
    pub unseen_domain_slot_value_triplets: usize,
}

fn triplets(goal: &Goal) -> impl Iterator<Item = (Domain, &str, &str)> {
    goal.domains.iter().flat_map(|(domain, g)| {
        g.constraints
            .iter()
            .filter(|(_, v)| v.as_str() != DONTCARE)
            .map(move |(s, v)| (*domain, s.as_str(), v.as_str()))
    })
}

/// Compares the test fold against train and validation. Goals are equal
/// when they cover the same domains with the same canonical constraints
/// and requested slots.
pub fn analyze_folds(train: &Goals, valid: &Goals, test: &Goals) -> Result<OverlapReport> {
    if test.is_empty() {
        return Err(Error::Empty("test fold has no goals".into()));
    }
    for (a, b, name) in [
        (train, valid, "train/valid"),
        (train, test, "train/test"),
        (valid, test, "valid/test"),
    ] {
        if let Some(id) = a.keys().find(|id| b.contains_key(*id)) {
            return Err(Error::Validation(format!("dialogue {id} appears in both {name} folds")));
        }
    }
    let seen_goals: Vec<&Goal> = train.values().chain(valid.values()).collect();
    let seen_triplets: BTreeSet<(Domain, &str, &str)> = seen_goals.iter().flat_map(|g| triplets(g)).collect();
    let seen_pairs: BTreeSet<(&str, &str)> = seen_triplets.iter().map(|(_, s, v)| (*s, *v)).collect();

    let test_triplets: BTreeSet<(Domain, &str, &str)> = test.values().flat_map(triplets).collect();
    let test_pairs: BTreeSet<(&str, &str)> = test_triplets.iter().map(|(_, s, v)| (*s, *v)).collect();

    Ok(OverlapReport {
        test_dialogues: test.len(),
        duplicated_test_goals: test.values().filter(|g| seen_goals.contains(g)).count(),
        unseen_slot_value_pairs: test_pairs.difference(&seen_pairs).count(),
        unseen_domain_slot_value_triplets: test_triplets.difference(&seen_triplets).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DomainGoal;
    use std::collections::BTreeMap;

    fn goal(domain: Domain, pairs: &[(&str, &str)]) -> Goal {
        Goal {
            domains: BTreeMap::from([(
                domain,
                DomainGoal {
                    constraints: pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
                    requested: BTreeSet::new(),
                },
            )]),
        }
    }

    fn fold(prefix: &str, goals: Vec<Goal>) -> Goals {
        goals
            .into_iter()
            .enumerate()
            .map(|(i, g)| (format!("{prefix}{i}"), g))
            .collect()
    }

    #[test]
    fn identical_folds() {
        let goals = vec![
            goal(Domain::Hotel, &[("area", "east")]),
            goal(Domain::Train, &[("day", "friday")]),
        ];
        let train = fold("tr", goals.clone());
        let test = fold("te", goals);
        let r = analyze_folds(&train, &Goals::new(), &test).unwrap();
        assert_eq!(r.duplicated_test_goals, 2);
        assert_eq!(r.unseen_slot_value_pairs, 0);
        assert_eq!(r.unseen_domain_slot_value_triplets, 0);
    }

    #[test]
    fn pair_seen_in_other_domain() {
        let train = fold("tr", vec![goal(Domain::Restaurant, &[("area", "east")])]);
        let test = fold("te", vec![goal(Domain::Hotel, &[("area", "east")])]);
        let r = analyze_folds(&train, &Goals::new(), &test).unwrap();
        assert_eq!(
            (
                r.duplicated_test_goals,
                r.unseen_slot_value_pairs,
                r.unseen_domain_slot_value_triplets
            ),
            (0, 0, 1)
        );
    }

    #[test]
    fn errors() {
        let g = fold("a", vec![goal(Domain::Hotel, &[])]);
        assert!(analyze_folds(&g, &Goals::new(), &Goals::new()).is_err());
        assert!(analyze_folds(&g, &Goals::new(), &g).is_err());
    }
}
