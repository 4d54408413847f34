use serde::{Deserialize, Serialize};

/// One itemized term of a distance bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundTerm {
    pub name: String,
    pub value: f64,
    /// Monte Carlo standard error when the term was estimated, `None` for
    /// exact terms.
    pub std_error: Option<f64>,
}

/// Itemized evaluation of a distance bound: every term separately plus the
/// combined value. Constants that the underlying theorems leave
/// non-constructive are reported as 1 and never folded into the terms.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub terms: Vec<BoundTerm>,
    pub total: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl BoundReport {
    pub fn new() -> Self {
        BoundReport {
            terms: Vec::new(),
            total: 0.0,
            flags: Vec::new(),
        }
    }

    pub fn push(&mut self, name: &str, value: f64) -> &mut Self {
        self.terms.push(BoundTerm {
            name: name.to_owned(),
            value,
            std_error: None,
        });
        self
    }

    pub fn push_estimated(&mut self, name: &str, value: f64, std_error: f64) -> &mut Self {
        self.terms.push(BoundTerm {
            name: name.to_owned(),
            value,
            std_error: Some(std_error),
        });
        self
    }

    pub fn flag(&mut self, text: impl Into<String>) -> &mut Self {
        self.flags.push(text.into());
        self
    }

    /// Value of the named term; panics in tests are avoided by returning
    /// `None` for unknown names.
    pub fn value(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.name == name).map(|t| t.value)
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.terms
            .iter()
            .find(|t| t.name == name)
            .and_then(|t| t.std_error)
    }

    pub fn has_flag(&self, text: &str) -> bool {
        self.flags.iter().any(|f| f == text)
    }
}

impl Default for BoundReport {
    fn default() -> Self {
        Self::new()
    }
}
