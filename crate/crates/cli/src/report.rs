//! Score table rendering: an aligned text table with one row per scored
//! run, columns p/r/F1 per metric as percentages with two decimals, plus a
//! JSON form for downstream tooling.

use ontocoref_core::metrics::{PartitionScore, RunScore};
use serde_json::json;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Muc,
    B3,
    CeafM,
    Blanc,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Muc, Metric::B3, Metric::CeafM, Metric::Blanc];

    pub fn header(&self) -> &'static str {
        match self {
            Metric::Muc => "MUC",
            Metric::B3 => "B3",
            Metric::CeafM => "CEAF (M)",
            Metric::Blanc => "BLANC",
        }
    }

    pub fn json_key(&self) -> &'static str {
        match self {
            Metric::Muc => "muc",
            Metric::B3 => "b3",
            Metric::CeafM => "ceaf_m",
            Metric::Blanc => "blanc",
        }
    }

    pub fn pick(&self, run: &RunScore) -> PartitionScore {
        match self {
            Metric::Muc => run.muc,
            Metric::B3 => run.b_cubed,
            Metric::CeafM => run.ceaf_m,
            Metric::Blanc => run.blanc,
        }
    }
}

pub struct ScoreTable {
    pub metrics: Vec<Metric>,
    pub rows: Vec<(String, RunScore)>,
}

impl ScoreTable {
    pub fn render_text(&self) -> String {
        let label_width = self
            .rows
            .iter()
            .map(|(label, _)| label.len())
            .chain(std::iter::once("run".len()))
            .max()
            .unwrap_or(3);
        let mut out = String::new();

        out.push_str(&format!("{:<label_width$}", "run"));
        for metric in &self.metrics {
            out.push_str(&format!(" | {:^23}", metric.header()));
        }
        out.push('\n');
        out.push_str(&format!("{:<label_width$}", ""));
        for _ in &self.metrics {
            out.push_str(&format!(" | {:>7} {:>7} {:>7}", "p", "r", "F1"));
        }
        out.push('\n');
        let total = label_width + self.metrics.len() * 26;
        out.push_str(&"-".repeat(total));
        out.push('\n');

        for (label, run) in &self.rows {
            out.push_str(&format!("{label:<label_width$}"));
            for metric in &self.metrics {
                let score = metric.pick(run);
                out.push_str(&format!(
                    " | {:>7.2} {:>7.2} {:>7.2}",
                    score.precision * 100.0,
                    score.recall * 100.0,
                    score.f1 * 100.0
                ));
            }
            out.push('\n');
        }
        out
    }

    pub fn render_json(&self) -> String {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|(label, run)| {
                let mut obj = serde_json::Map::new();
                obj.insert("run".to_string(), json!(label));
                for metric in &self.metrics {
                    let score = metric.pick(run);
                    obj.insert(
                        metric.json_key().to_string(),
                        json!({
                            "precision": score.precision,
                            "recall": score.recall,
                            "f1": score.f1,
                        }),
                    );
                }
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::to_string_pretty(&json!({ "rows": rows })).expect("table serializes")
    }
}
