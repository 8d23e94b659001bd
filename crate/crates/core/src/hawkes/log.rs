use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Organic,
    Incentivized,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Organic => "organic",
            EventKind::Incentivized => "incentivized",
        }
    }
}

impl FromStr for EventKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "organic" => Ok(EventKind::Organic),
            "incentivized" => Ok(EventKind::Incentivized),
            other => Err(Error::MalformedLog(format!("unknown event kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub user: usize,
    pub kind: EventKind,
}

/// Time-ordered realization of organic and incentivized activity on `[t0, tf]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    events: Vec<Event>,
    t0: f64,
    tf: f64,
    n: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    time: f64,
    user: usize,
    kind: String,
}

impl EventLog {
    pub fn empty(n: usize, t0: f64, tf: f64) -> Self {
        Self { events: Vec::new(), t0, tf, n }
    }

    /// Validating constructor: times nondecreasing, inside the horizon, users `< n`.
    pub fn new(n: usize, t0: f64, tf: f64, events: Vec<Event>) -> Result<Self> {
        if !(t0.is_finite() && tf.is_finite() && tf >= t0) {
            return Err(Error::MalformedLog(format!("bad horizon [{t0}, {tf}]")));
        }
        let mut prev = t0;
        for (i, e) in events.iter().enumerate() {
            if e.user >= n {
                return Err(Error::MalformedLog(format!("event {i}: user {} >= n={n}", e.user)));
            }
            if !e.time.is_finite() || e.time < t0 || e.time > tf {
                return Err(Error::MalformedLog(format!("event {i}: time {} outside [{t0}, {tf}]", e.time)));
            }
            if e.time < prev {
                return Err(Error::MalformedLog(format!("event {i}: time {} decreases", e.time)));
            }
            prev = e.time;
        }
        Ok(Self { events, t0, tf, n })
    }

    /// Appends an event produced by a sampler. Callers guarantee ordering.
    pub(crate) fn push(&mut self, event: Event) {
        debug_assert!(event.user < self.n);
        debug_assert!(self.events.last().is_none_or(|e| e.time <= event.time));
        self.events.push(event);
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn tf(&self) -> f64 {
        self.tf
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    pub fn organic(&self) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(|e| e.kind == EventKind::Organic)
    }

    /// Events strictly before `t`, keeping the original horizon start.
    pub fn truncated(&self, t: f64) -> Self {
        let events = self.events.iter().copied().filter(|e| e.time < t).collect();
        Self { events, t0: self.t0, tf: t.min(self.tf), n: self.n }
    }

    /// Subset of events of one kind, same horizon.
    pub fn only(&self, kind: EventKind) -> Self {
        let events = self.events.iter().copied().filter(|e| e.kind == kind).collect();
        Self { events, t0: self.t0, tf: self.tf, n: self.n }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for e in &self.events {
            wtr.serialize(CsvRow { time: e.time, user: e.user, kind: e.kind.as_str().to_string() })?;
        }
        if self.events.is_empty() {
            wtr.write_record(["time", "user", "kind"])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads `time,user,kind` rows. The horizon and user count are not stored
    /// in the file and must be supplied.
    pub fn read_csv<R: Read>(r: R, n: usize, t0: f64, tf: f64) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        if headers.iter().map(str::trim).collect::<Vec<_>>() != ["time", "user", "kind"] {
            return Err(Error::MalformedLog(format!("expected header time,user,kind, got {headers:?}")));
        }
        let mut events = Vec::new();
        for row in rdr.deserialize() {
            let row: CsvRow = row?;
            events.push(Event { time: row.time, user: row.user, kind: row.kind.parse()? });
        }
        Self::new(n, t0, tf, events)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn load_csv(path: impl AsRef<Path>, n: usize, t0: f64, tf: f64) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(f), n, t0, tf)
    }
}
