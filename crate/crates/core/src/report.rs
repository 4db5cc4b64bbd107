//! Plain-text `key: value` reports with a fixed key order.

use std::collections::BTreeSet;
use std::fmt;

use crate::code::CodeParams;
use crate::verifier::{AuditBudget, VerificationReport};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReportDocument {
    entries: Vec<(String, String)>,
}

impl ReportDocument {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a line. Keys keep insertion order.
    pub fn push(&mut self, key: &str, value: impl fmt::Display) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push_set(&mut self, key: &str, set: &BTreeSet<usize>) -> &mut Self {
        self.push(key, format_set(set))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    /// Parses the output of `Display`.
    pub fn parse(text: &str) -> Option<Self> {
        let mut doc = Self::new();
        for line in text.lines().filter(|l| !l.is_empty()) {
            let (k, v) = line.split_once(": ")?;
            doc.push(k, v);
        }
        Some(doc)
    }

    /// Code parameters in the order `n, k, alpha, t1, N, q, p, s`.
    pub fn push_params(&mut self, params: &CodeParams) -> &mut Self {
        let f = &params.field;
        self.push("n", params.n)
            .push("k", params.k)
            .push("alpha", params.alpha)
            .push("t1", params.t1)
            .push("N", params.columns)
            .push("q", f.order())
            .push("p", f.characteristic())
            .push("s", f.degree())
    }

    pub fn push_budget(&mut self, budget: &AuditBudget) -> &mut Self {
        self.push("file_bits", budget.file_bits)
            .push("hash_bits", budget.hash_bits)
            .push("naive_bits", budget.naive_bits)
            .push("seed_bits", budget.seed_bits)
            .push("seed_distribution_bits", budget.seed_distribution_bits)
            .push("formula_bits", format!("{:.3}", budget.formula_bits))
            .push(
                "hash_to_naive",
                format!(
                    "{:.6}",
                    budget.hash_bits as f64 / budget.naive_bits.max(1) as f64
                ),
            )
    }

    /// Status and flagged nodes of one audit.
    pub fn push_verification(&mut self, report: &VerificationReport) -> &mut Self {
        self.push("status", report.status.name())
            .push_set("flagged", &report.flagged)
            .push("randomness", report.randomness.name())
            .push("report_hash_bits", report.hash_bits)
            .push("report_seed_bits", report.seed_bits)
    }
}

pub fn format_set(set: &BTreeSet<usize>) -> String {
    let items: Vec<String> = set.iter().map(|i| i.to_string()).collect();
    format!("[{}]", items.join(", "))
}

impl fmt::Display for ReportDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}: {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_insertion_order() {
        let mut d = ReportDocument::new();
        d.push("z", 1)
            .push("a", "two")
            .push_set("flagged", &BTreeSet::from([3, 1]));
        assert_eq!(d.to_string(), "z: 1\na: two\nflagged: [1, 3]\n");
        assert_eq!(ReportDocument::parse(&d.to_string()).unwrap(), d);
        assert_eq!(d.get("flagged"), Some("[1, 3]"));
    }
}
