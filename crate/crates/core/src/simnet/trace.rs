use std::fmt;

/// Label of the terminal line of every run.
pub const OUTCOME_LABEL: &str = "outcome";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub tick: u64,
    pub label: String,
    pub src: String,
    pub dst: String,
    pub outcome: String,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:04} {} {}->{} {}",
            self.tick, self.label, self.src, self.dst, self.outcome
        )
    }
}

/// Append-only event log of one run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    events: Vec<TraceEvent>,
}

impl Trace {
    pub(crate) fn push(
        &mut self,
        tick: u64,
        label: &str,
        src: &str,
        dst: &str,
        outcome: impl Into<String>,
    ) {
        self.events.push(TraceEvent {
            tick,
            label: label.to_owned(),
            src: src.to_owned(),
            dst: dst.to_owned(),
            outcome: outcome.into(),
        });
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn to_text(&self) -> String {
        self.events.iter().map(|e| format!("{e}\n")).collect()
    }

    pub fn outcome(&self) -> Option<&TraceEvent> {
        self.events.iter().rev().find(|e| e.label == OUTCOME_LABEL)
    }

    pub fn is_established(&self) -> bool {
        self.outcome()
            .is_some_and(|e| e.outcome.starts_with("established:"))
    }

    /// Labels in order of first appearance.
    pub fn first_appearances(&self) -> Vec<&str> {
        let mut seen: Vec<&str> = Vec::new();
        for e in &self.events {
            if !seen.contains(&e.label.as_str()) {
                seen.push(&e.label);
            }
        }
        seen
    }
}
