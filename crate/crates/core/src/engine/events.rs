//! One JSON record per rule application.

use std::io::Write;
use std::time::Instant;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Rule {
    Unfold,
    Candidate,
    Predecessor,
    NewLemma,
    QGen,
    Push,
    Safe,
    Cex,
    ResourceLimit,
}

#[derive(Clone, Debug, Serialize)]
pub struct Event {
    pub seq: u64,
    pub rule: Rule,
    pub frame: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pob: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lemma: Option<usize>,
    pub solver_ms: f64,
    pub elapsed_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

pub struct EventLog {
    events: Vec<Event>,
    sink: Option<Box<dyn Write + Send>>,
    start: Instant,
}

impl Default for EventLog {
    fn default() -> Self {
        EventLog { events: Vec::new(), sink: None, start: Instant::now() }
    }
}

impl EventLog {
    pub fn with_sink(sink: Box<dyn Write + Send>) -> Self {
        EventLog { sink: Some(sink), ..Default::default() }
    }

    pub fn record(&mut self, rule: Rule, frame: usize, pob: Option<usize>, lemma: Option<usize>, solver_ms: f64, detail: Option<String>) {
        let e = Event {
            seq: self.events.len() as u64,
            rule,
            frame,
            pob,
            lemma,
            solver_ms,
            elapsed_ms: self.start.elapsed().as_secs_f64() * 1e3,
            detail,
        };
        if let Some(w) = self.sink.as_mut() {
            if let Ok(line) = serde_json::to_string(&e) {
                // the log is best-effort; a failing sink does not stop the run
                let _ = writeln!(w, "{line}");
            }
        }
        self.events.push(e);
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn into_events(mut self) -> Vec<Event> {
        if let Some(w) = self.sink.as_mut() {
            let _ = w.flush();
        }
        std::mem::take(&mut self.events)
    }
}
