use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::client::ModelClient;
use crate::extract::has_image_path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Worker {
    SmallMolecule,
    Polymer,
    Reaction,
    Nmr,
}

impl Worker {
    pub const ALL: [Worker; 4] = [Worker::SmallMolecule, Worker::Polymer, Worker::Reaction, Worker::Nmr];

    pub fn as_str(self) -> &'static str {
        match self {
            Worker::SmallMolecule => "small_molecule",
            Worker::Polymer => "polymer",
            Worker::Reaction => "reaction",
            Worker::Nmr => "nmr",
        }
    }

    /// Name of the retrieval tool this worker reports as its source.
    pub fn tool(self) -> &'static str {
        match self {
            Worker::SmallMolecule => "small_molecule_rag_search",
            Worker::Polymer => "polymer_rag_search",
            Worker::Reaction => "reaction_rag_search",
            Worker::Nmr => "nmr_image_rag_search",
        }
    }

    pub(crate) fn description(self) -> &'static str {
        match self {
            Worker::SmallMolecule => "small-molecule",
            Worker::Polymer => "polymer",
            Worker::Reaction => "reaction",
            Worker::Nmr => "NMR spectra",
        }
    }
}

impl fmt::Display for Worker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Worker {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Worker::ALL
            .into_iter()
            .find(|w| w.as_str() == s)
            .ok_or_else(|| format!("unknown worker {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteSource {
    Client,
    Rules,
    /// The client failed or timed out.
    RulesFallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RouteDecision {
    pub worker: Worker,
    pub source: RouteSource,
}

/// Keyword routing used whenever the client has no verdict.
pub fn route_by_rules(question: &str) -> Worker {
    if question.contains(">>") {
        Worker::Reaction
    } else if question.contains("[*:") || question.contains("[*]") {
        Worker::Polymer
    } else if has_image_path(question) || question.split(|c: char| !c.is_alphanumeric()).any(|w| w == "NMR") {
        Worker::Nmr
    } else {
        Worker::SmallMolecule
    }
}

/// A client verdict wins; a failing client falls back to the rules.
pub fn route(question: &str, client: &dyn ModelClient) -> RouteDecision {
    match client.route(question) {
        Ok(Some(worker)) => RouteDecision {
            worker,
            source: RouteSource::Client,
        },
        Ok(None) => RouteDecision {
            worker: route_by_rules(question),
            source: RouteSource::Rules,
        },
        Err(_) => RouteDecision {
            worker: route_by_rules(question),
            source: RouteSource::RulesFallback,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_order() {
        assert_eq!(
            route_by_rules("what forms from CCO.CC(=O)O>>CCOC(C)=O ?"),
            Worker::Reaction
        );
        assert_eq!(route_by_rules("analogues of [*:1]CC[*:2] please"), Worker::Polymer);
        assert_eq!(route_by_rules("polymers like [*]c1ccc([*])cc1"), Worker::Polymer);
        assert_eq!(route_by_rules("similar spectra to data/img/a-1.png"), Worker::Nmr);
        assert_eq!(route_by_rules("show the NMR of ethanol"), Worker::Nmr);
        assert_eq!(route_by_rules("find analogues of CC(=O)O"), Worker::SmallMolecule);
        assert_eq!(route_by_rules("a NMRish word"), Worker::SmallMolecule);
        // Reactions win even when a wildcard is present.
        assert_eq!(route_by_rules("[*:1]C>>[*:1]O"), Worker::Reaction);
    }

    #[test]
    fn names_round_trip() {
        for w in Worker::ALL {
            assert_eq!(w.as_str().parse::<Worker>().unwrap(), w);
        }
        assert!("chemistry".parse::<Worker>().is_err());
    }
}
