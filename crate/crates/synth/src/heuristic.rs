use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::SynthError;

/// The seven optimization heuristics, in canonical token order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Heuristic {
    Balance,
    Rewrite,
    RewriteZ,
    Refactor,
    RefactorZ,
    Resub,
    ResubZ,
}

impl Heuristic {
    pub const ALL: [Heuristic; 7] = [
        Heuristic::Balance,
        Heuristic::Rewrite,
        Heuristic::RewriteZ,
        Heuristic::Refactor,
        Heuristic::RefactorZ,
        Heuristic::Resub,
        Heuristic::ResubZ,
    ];

    pub fn token(self) -> usize {
        self as usize
    }

    pub fn from_token(token: usize) -> Result<Self, SynthError> {
        Self::ALL
            .get(token)
            .copied()
            .ok_or(SynthError::TokenOutOfRange { token, vocab: Self::ALL.len() })
    }

    pub fn name(self) -> &'static str {
        match self {
            Heuristic::Balance => "balance",
            Heuristic::Rewrite => "rw",
            Heuristic::RewriteZ => "rw_z",
            Heuristic::Refactor => "rf",
            Heuristic::RefactorZ => "rf_z",
            Heuristic::Resub => "rs",
            Heuristic::ResubZ => "rs_z",
        }
    }

    /// Whether zero-gain moves are accepted.
    pub fn zero_gain(self) -> bool {
        matches!(self, Heuristic::RewriteZ | Heuristic::RefactorZ | Heuristic::ResubZ)
    }
}

impl fmt::Display for Heuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Heuristic {
    type Err = SynthError;

    /// Accepts canonical names, ABC spellings such as `rw -z`, and token ids.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .to_ascii_lowercase()
            .split_whitespace()
            .collect::<Vec<_>>()
            .join("_")
            .replace("_-", "_");
        let h = match norm.as_str() {
            "balance" | "b" => Heuristic::Balance,
            "rw" | "rewrite" => Heuristic::Rewrite,
            "rw_z" | "rwz" | "rewrite_z" => Heuristic::RewriteZ,
            "rf" | "refactor" => Heuristic::Refactor,
            "rf_z" | "rfz" | "refactor_z" => Heuristic::RefactorZ,
            "rs" | "resub" => Heuristic::Resub,
            "rs_z" | "rsz" | "resub_z" => Heuristic::ResubZ,
            other => match other.parse::<usize>() {
                Ok(t) => Heuristic::from_token(t)?,
                Err(_) => return Err(SynthError::UnknownHeuristic(s.to_string())),
            },
        };
        Ok(h)
    }
}

/// Ordered heuristic vocabulary; the token id is the position in the list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeuristicVocab {
    heuristics: Vec<Heuristic>,
}

impl Default for HeuristicVocab {
    fn default() -> Self {
        HeuristicVocab {
            heuristics: Heuristic::ALL.to_vec(),
        }
    }
}

impl HeuristicVocab {
    pub fn len(&self) -> usize {
        self.heuristics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heuristics.is_empty()
    }

    pub fn heuristics(&self) -> &[Heuristic] {
        &self.heuristics
    }

    pub fn get(&self, token: usize) -> Result<Heuristic, SynthError> {
        self.heuristics
            .get(token)
            .copied()
            .ok_or(SynthError::TokenOutOfRange { token, vocab: self.len() })
    }

    pub fn token_of(&self, h: Heuristic) -> usize {
        self.heuristics.iter().position(|&x| x == h).expect("vocabulary is complete")
    }
}

/// An ordered sequence of heuristic tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Recipe {
    pub id: usize,
    pub steps: Vec<usize>,
}

impl Recipe {
    pub fn new(id: usize, steps: Vec<usize>) -> Result<Self, SynthError> {
        if steps.is_empty() {
            return Err(SynthError::EmptyRecipe);
        }
        for &t in &steps {
            Heuristic::from_token(t)?;
        }
        Ok(Recipe { id, steps })
    }

    pub fn from_heuristics(id: usize, steps: &[Heuristic]) -> Result<Self, SynthError> {
        Recipe::new(id, steps.iter().map(|h| h.token()).collect())
    }

    /// Parses a comma or semicolon separated list such as `rw; rf -z; balance`.
    pub fn parse(id: usize, text: &str) -> Result<Self, SynthError> {
        let steps = text
            .split([',', ';'])
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<Heuristic>().map(Heuristic::token))
            .collect::<Result<Vec<_>, _>>()?;
        Recipe::new(id, steps)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn heuristics(&self) -> impl Iterator<Item = Heuristic> + '_ {
        self.steps
            .iter()
            .map(|&t| Heuristic::from_token(t).expect("validated on construction"))
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.heuristics().map(Heuristic::name).collect();
        f.write_str(&names.join("; "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Delay,
    Area,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Delay => "delay",
            Metric::Area => "area",
        })
    }
}

impl FromStr for Metric {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "delay" => Ok(Metric::Delay),
            "area" => Ok(Metric::Area),
            _ => Err(SynthError::UnknownMetric(s.to_string())),
        }
    }
}

/// QoR after each recipe step. `initial` is the pre-optimization value and
/// is not part of `values`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QorTrajectory {
    pub circuit_id: usize,
    pub recipe_id: usize,
    pub metric: Metric,
    pub values: Vec<f64>,
    pub initial: f64,
}

impl QorTrajectory {
    pub fn final_qor(&self) -> f64 {
        *self.values.last().expect("trajectories are non-empty")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_token_order() {
        let names: Vec<_> = Heuristic::ALL.iter().map(|h| h.name()).collect();
        assert_eq!(names, ["balance", "rw", "rw_z", "rf", "rf_z", "rs", "rs_z"]);
        let vocab = HeuristicVocab::default();
        assert_eq!(vocab.len(), 7);
        for (i, h) in Heuristic::ALL.iter().enumerate() {
            assert_eq!(vocab.token_of(*h), i);
            assert_eq!(vocab.get(i).unwrap(), *h);
        }
        assert!(vocab.get(7).is_err());
    }

    #[test]
    fn parses_spellings() {
        assert_eq!("rw -z".parse::<Heuristic>().unwrap(), Heuristic::RewriteZ);
        assert_eq!("RF_Z".parse::<Heuristic>().unwrap(), Heuristic::RefactorZ);
        assert_eq!("6".parse::<Heuristic>().unwrap(), Heuristic::ResubZ);
        assert!("dc2".parse::<Heuristic>().is_err());
        let r = Recipe::parse(3, "balance; rw -z, rs").unwrap();
        assert_eq!(r.steps, vec![0, 2, 5]);
        assert_eq!(r.to_string(), "balance; rw_z; rs");
        assert!(Recipe::new(0, vec![]).is_err());
        assert!(Recipe::new(0, vec![7]).is_err());
    }
}
