use std::collections::VecDeque;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aggregation::EvaluationSnapshot;
use crate::bus::{decode, encode, DecodeError, Envelope};
use crate::{path, DiagnosticState, DiagnosticStatus};

/// Time-ordered buffer holding at most `window_ms` of bus history.
#[derive(Debug, Clone)]
pub struct RingBuffer {
    window_ms: u64,
    entries: VecDeque<Envelope>,
    dropped: u64,
}

impl RingBuffer {
    pub fn new(window_ms: u64) -> Self {
        RingBuffer {
            window_ms,
            entries: VecDeque::new(),
            dropped: 0,
        }
    }

    pub fn window_ms(&self) -> u64 {
        self.window_ms
    }

    /// Appends `message` and evicts everything older than `now - window`.
    /// A message older than the newest buffered one is dropped and counted.
    pub fn ring_record(&mut self, message: Envelope, now_ms: u64) -> bool {
        let accepted = match self.entries.back() {
            Some(newest) if message.ts < newest.ts => {
                self.dropped += 1;
                false
            }
            _ => {
                self.entries.push_back(message);
                true
            }
        };
        self.evict(now_ms);
        accepted
    }

    fn evict(&mut self, now_ms: u64) {
        let cutoff = now_ms.saturating_sub(self.window_ms);
        while self.entries.front().is_some_and(|e| e.ts < cutoff) {
            self.entries.pop_front();
        }
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `newest - oldest` in milliseconds.
    pub fn span_ms(&self) -> u64 {
        match (self.entries.front(), self.entries.back()) {
            (Some(a), Some(b)) => b.ts - a.ts,
            _ => 0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Envelope> {
        self.entries.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidentHeader {
    pub label: String,
    pub trigger_ms: u64,
    pub window_ms: u64,
    pub entries: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<EvaluationSnapshot>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Incident {
    pub header: IncidentHeader,
    pub entries: Vec<Envelope>,
}

impl Incident {
    pub fn span_ms(&self) -> u64 {
        match (self.entries.first(), self.entries.last()) {
            (Some(a), Some(b)) => b.ts - a.ts,
            _ => 0,
        }
    }

    /// Header line followed by one encoded envelope per line.
    pub fn to_ndjson(&self) -> String {
        #[derive(Serialize)]
        struct HeaderLine<'a> {
            incident: &'a IncidentHeader,
        }
        let mut out = serde_json::to_string(&HeaderLine { incident: &self.header }).expect("header serializes");
        out.push('\n');
        for e in &self.entries {
            out.push_str(&encode(e));
            out.push('\n');
        }
        out
    }

    pub fn file_name(&self, epoch_offset_ms: u64) -> String {
        let label: String = self
            .header
            .label
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
            .collect();
        format!("incident_{}_{}.ndjson", epoch_offset_ms + self.header.trigger_ms, label)
    }
}

/// Snapshot of the buffer contents as an incident; the buffer keeps recording.
pub fn ring_flush(buffer: &RingBuffer, trigger_ms: u64, label: &str, snapshot: Option<&EvaluationSnapshot>) -> Incident {
    let entries: Vec<Envelope> = buffer.iter().filter(|e| e.ts <= trigger_ms).cloned().collect();
    Incident {
        header: IncidentHeader {
            label: label.to_string(),
            trigger_ms,
            window_ms: buffer.window_ms(),
            entries: entries.len(),
            snapshot: snapshot.cloned(),
        },
        entries,
    }
}

pub fn write_incident(dir: &Path, incident: &Incident, epoch_offset_ms: u64) -> std::io::Result<PathBuf> {
    let path = dir.join(incident.file_name(epoch_offset_ms));
    let mut file = std::fs::File::create(&path)?;
    file.write_all(incident.to_ndjson().as_bytes())?;
    file.sync_all()?;
    Ok(path)
}

#[derive(Debug, thiserror::Error)]
pub enum ReadIncidentError {
    #[error("empty incident file")]
    Empty,
    #[error("bad header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("line {line}: {source}")]
    Entry { line: usize, source: DecodeError },
}

pub fn read_incident(text: &str) -> Result<Incident, ReadIncidentError> {
    #[derive(Deserialize)]
    struct HeaderLine {
        incident: IncidentHeader,
    }
    let mut lines = text.lines();
    let header: HeaderLine = serde_json::from_str(lines.next().ok_or(ReadIncidentError::Empty)?)?;
    let entries = lines
        .enumerate()
        .map(|(i, l)| decode(l).map_err(|source| ReadIncidentError::Entry { line: i + 2, source }))
        .collect::<Result<_, _>>()?;
    Ok(Incident {
        header: header.incident,
        entries,
    })
}

/// `/diag/recorder` ERROR status describing a failed incident write.
pub fn recorder_status(now_ms: u64, error: &str) -> DiagnosticStatus {
    DiagnosticStatus::new(path!("/diag/recorder"), DiagnosticState::Error, now_ms)
        .with_message(format!("incident write failed: {error}"))
}

#[derive(Debug, Clone, PartialEq)]
pub enum FlushOutcome {
    Recorded { incident: Incident, path: Option<PathBuf> },
    Debounced,
    Failed { incident: Incident, error: String },
}

/// Ring buffer plus trigger debouncing and optional file output.
#[derive(Debug, Clone)]
pub struct IncidentRecorder {
    buffer: RingBuffer,
    debounce_ms: u64,
    last_flush_ms: Option<u64>,
    out_dir: Option<PathBuf>,
    epoch_offset_ms: u64,
    debounced: u64,
}

impl IncidentRecorder {
    pub fn new(window_ms: u64, debounce_ms: u64) -> Self {
        IncidentRecorder {
            buffer: RingBuffer::new(window_ms),
            debounce_ms,
            last_flush_ms: None,
            out_dir: None,
            epoch_offset_ms: 0,
            debounced: 0,
        }
    }

    /// Write incidents into `dir`. File names carry `epoch_offset_ms + trigger`.
    pub fn with_output(mut self, dir: PathBuf, epoch_offset_ms: u64) -> Self {
        self.out_dir = Some(dir);
        self.epoch_offset_ms = epoch_offset_ms;
        self
    }

    pub fn record(&mut self, message: Envelope, now_ms: u64) -> bool {
        self.buffer.ring_record(message, now_ms)
    }

    pub fn buffer(&self) -> &RingBuffer {
        &self.buffer
    }

    pub fn debounced(&self) -> u64 {
        self.debounced
    }

    pub fn flush(&mut self, trigger_ms: u64, label: &str, snapshot: Option<&EvaluationSnapshot>) -> FlushOutcome {
        if let Some(last) = self.last_flush_ms {
            if trigger_ms.saturating_sub(last) < self.debounce_ms {
                self.debounced += 1;
                return FlushOutcome::Debounced;
            }
        }
        self.last_flush_ms = Some(trigger_ms);
        let incident = ring_flush(&self.buffer, trigger_ms, label, snapshot);
        match &self.out_dir {
            None => FlushOutcome::Recorded { incident, path: None },
            Some(dir) => match write_incident(dir, &incident, self.epoch_offset_ms) {
                Ok(path) => FlushOutcome::Recorded {
                    incident,
                    path: Some(path),
                },
                Err(e) => FlushOutcome::Failed {
                    incident,
                    error: e.to_string(),
                },
            },
        }
    }
}
