//! Verdict records shared by every check.

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "==")]
    Eq,
    /// `lhs ∈ {rhs − 2, rhs − 1, rhs}`
    #[serde(rename = "in [rhs-2, rhs]")]
    Trichotomy,
}

impl Relation {
    pub fn test(self, lhs: i64, rhs: i64) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Eq => lhs == rhs,
            Relation::Trichotomy => (rhs - 2..=rhs).contains(&lhs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    pub name: String,
    pub held: bool,
}

/// One integer comparison inside a verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Clause {
    pub name: String,
    pub t: Option<f64>,
    pub applicable: bool,
    pub reason: Option<String>,
    pub lhs: Option<i64>,
    pub rhs: Option<i64>,
    pub relation: Option<Relation>,
    pub holds: Option<bool>,
}

impl Clause {
    pub fn compare(name: impl Into<String>, t: Option<f64>, lhs: i64, relation: Relation, rhs: i64) -> Clause {
        Clause {
            name: name.into(),
            t,
            applicable: true,
            reason: None,
            lhs: Some(lhs),
            rhs: Some(rhs),
            relation: Some(relation),
            holds: Some(relation.test(lhs, rhs)),
        }
    }

    pub fn not_applicable(name: impl Into<String>, t: Option<f64>, reason: impl Into<String>) -> Clause {
        Clause {
            name: name.into(),
            t,
            applicable: false,
            reason: Some(reason.into()),
            lhs: None,
            rhs: None,
            relation: None,
            holds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub id: String,
    /// Defined only when the verdict is applicable.
    pub holds: Option<bool>,
    pub lhs: Option<i64>,
    pub rhs: Option<i64>,
    pub applicable: bool,
    pub relation: Option<Relation>,
    pub reason: Option<String>,
    pub hypotheses: Vec<Hypothesis>,
    pub clauses: Vec<Clause>,
    pub witness: Value,
}

impl Verdict {
    pub fn new(id: &str) -> Verdict {
        Verdict {
            id: id.to_string(),
            holds: None,
            lhs: None,
            rhs: None,
            applicable: false,
            relation: None,
            reason: None,
            hypotheses: Vec::new(),
            clauses: Vec::new(),
            witness: Value::Null,
        }
    }

    pub fn require(mut self, name: impl Into<String>, held: bool) -> Verdict {
        self.hypotheses.push(Hypothesis {
            name: name.into(),
            held,
        });
        self
    }

    pub fn witness(mut self, w: Value) -> Verdict {
        self.witness = w;
        self
    }

    pub fn failed_hypothesis(&self) -> Option<&str> {
        self.hypotheses
            .iter()
            .find(|h| !h.held)
            .map(|h| h.name.as_str())
    }

    /// Settles the verdict from its clauses unless a hypothesis failed.
    pub fn conclude(mut self, clauses: Vec<Clause>) -> Verdict {
        if let Some(h) = self.failed_hypothesis() {
            self.reason = Some(format!("hypothesis fails: {h}"));
            self.clauses = clauses;
            return self;
        }
        let live: Vec<&Clause> = clauses.iter().filter(|c| c.applicable).collect();
        if live.is_empty() {
            self.reason = Some(
                clauses
                    .iter()
                    .find_map(|c| c.reason.clone())
                    .unwrap_or_else(|| "no applicable clause".into()),
            );
        } else {
            self.applicable = true;
            self.holds = Some(live.iter().all(|c| c.holds == Some(true)));
            if let [only] = live.as_slice() {
                self.lhs = only.lhs;
                self.rhs = only.rhs;
                self.relation = only.relation;
            }
        }
        self.clauses = clauses;
        self
    }

    pub fn fails(&self) -> bool {
        self.applicable && self.holds == Some(false)
    }
}
