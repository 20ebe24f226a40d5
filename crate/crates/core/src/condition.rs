use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Which helper snippets a prompt carries, and in what order.
///
/// Declaration order is the canonical cell order used by run logs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetrievalCondition {
    CurrentContextOnly,
    StaleContextOnly,
    NoRetrieval,
    MixedCurrentTop1StaleTop2,
    MixedStaleTop1CurrentTop2,
}

/// Freshness state of one retrieved snippet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Freshness {
    Current,
    Stale,
}

impl RetrievalCondition {
    pub const ALL: [RetrievalCondition; 5] = [
        RetrievalCondition::CurrentContextOnly,
        RetrievalCondition::StaleContextOnly,
        RetrievalCondition::NoRetrieval,
        RetrievalCondition::MixedCurrentTop1StaleTop2,
        RetrievalCondition::MixedStaleTop1CurrentTop2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RetrievalCondition::CurrentContextOnly => "current_context_only",
            RetrievalCondition::StaleContextOnly => "stale_context_only",
            RetrievalCondition::NoRetrieval => "no_retrieval",
            RetrievalCondition::MixedCurrentTop1StaleTop2 => "mixed_current_top1_stale_top2",
            RetrievalCondition::MixedStaleTop1CurrentTop2 => "mixed_stale_top1_current_top2",
        }
    }

    /// Snippets in rank order.
    pub fn blocks(self) -> &'static [Freshness] {
        use Freshness::*;
        match self {
            RetrievalCondition::CurrentContextOnly => &[Current],
            RetrievalCondition::StaleContextOnly => &[Stale],
            RetrievalCondition::NoRetrieval => &[],
            RetrievalCondition::MixedCurrentTop1StaleTop2 => &[Current, Stale],
            RetrievalCondition::MixedStaleTop1CurrentTop2 => &[Stale, Current],
        }
    }

    /// Parse a comma-separated list, or `all`.
    pub fn parse_list(s: &str) -> Result<Vec<RetrievalCondition>, UnknownCondition> {
        if s.trim() == "all" {
            return Ok(Self::ALL.to_vec());
        }
        let mut out: Vec<RetrievalCondition> =
            s.split(',').map(|c| c.trim().parse()).collect::<Result<_, _>>()?;
        out.sort();
        out.dedup();
        Ok(out)
    }
}

impl fmt::Display for RetrievalCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown retrieval condition `{0}`")]
pub struct UnknownCondition(pub String);

impl FromStr for RetrievalCondition {
    type Err = UnknownCondition;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| UnknownCondition(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serialized_names_round_trip() {
        for c in RetrievalCondition::ALL {
            let json = serde_json::to_string(&c).unwrap();
            assert_eq!(json, format!("\"{}\"", c.as_str()));
            assert_eq!(c.as_str().parse::<RetrievalCondition>().unwrap(), c);
        }
    }

    #[test]
    fn parse_list_sorts_and_accepts_all() {
        assert_eq!(RetrievalCondition::parse_list("all").unwrap().len(), 5);
        assert_eq!(
            RetrievalCondition::parse_list("no_retrieval, current_context_only").unwrap(),
            vec![
                RetrievalCondition::CurrentContextOnly,
                RetrievalCondition::NoRetrieval
            ]
        );
        assert!(RetrievalCondition::parse_list("fresh_only").is_err());
    }
}
