//! Newline-delimited JSON framing. One envelope per line:
//! `{"kind":..,"ts":..,"channel":..,"payload":..}`.

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use thiserror::Error;

use super::Command;
use crate::aggregation::EvaluationSnapshot;
use crate::countermeasures::Action;
use crate::system_state::Transition;
use crate::{DataMessage, DiagnosticStatus, NamePath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Status,
    Snapshot,
    Data,
    Command,
    Action,
    StateChange,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Status(DiagnosticStatus),
    Snapshot(EvaluationSnapshot),
    Data(DataMessage),
    Command(Command),
    Action(Action),
    StateChange(Transition),
}

impl Body {
    pub fn kind(&self) -> Kind {
        match self {
            Body::Status(_) => Kind::Status,
            Body::Snapshot(_) => Kind::Snapshot,
            Body::Data(_) => Kind::Data,
            Body::Command(_) => Kind::Command,
            Body::Action(_) => Kind::Action,
            Body::StateChange(_) => Kind::StateChange,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub ts: u64,
    pub channel: NamePath,
    pub body: Body,
}

impl Envelope {
    pub fn new(ts: u64, channel: NamePath, body: Body) -> Self {
        Envelope { ts, channel, body }
    }

    /// Status envelope on the status's own name, stamped with its timestamp.
    pub fn status(status: DiagnosticStatus) -> Self {
        Envelope {
            ts: status.timestamp_ms,
            channel: status.name.clone(),
            body: Body::Status(status),
        }
    }

    pub fn data(ts: u64, channel: NamePath, message: DataMessage) -> Self {
        Envelope::new(ts, channel, Body::Data(message))
    }

    pub fn kind(&self) -> Kind {
        self.body.kind()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("decode error at byte {offset}: {message}")]
pub struct DecodeError {
    pub offset: usize,
    pub message: String,
}

#[derive(Serialize)]
struct FrameOut<'a, P> {
    kind: Kind,
    ts: u64,
    channel: &'a NamePath,
    payload: &'a P,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameIn<'a> {
    kind: Kind,
    ts: u64,
    channel: NamePath,
    #[serde(borrow)]
    payload: &'a RawValue,
}

/// Renders an envelope as one line of JSON, without the trailing newline.
pub fn encode(envelope: &Envelope) -> String {
    fn frame<P: Serialize>(e: &Envelope, payload: &P) -> String {
        serde_json::to_string(&FrameOut {
            kind: e.kind(),
            ts: e.ts,
            channel: &e.channel,
            payload,
        })
        .expect("envelopes always serialize")
    }
    match &envelope.body {
        Body::Status(p) => frame(envelope, p),
        Body::Snapshot(p) => frame(envelope, p),
        Body::Data(p) => frame(envelope, p),
        Body::Command(p) => frame(envelope, p),
        Body::Action(p) => frame(envelope, p),
        Body::StateChange(p) => frame(envelope, p),
    }
}

/// Byte offset of a serde_json (line, column) position.
fn offset_of(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

/// Truncated input is reported at the end of the text.
fn positioned(text: &str, base: usize, err: serde_json::Error) -> DecodeError {
    let at = if err.is_eof() {
        text.len()
    } else {
        offset_of(text, err.line(), err.column())
    };
    DecodeError {
        offset: base + at,
        message: err.to_string(),
    }
}

pub fn decode(line: &str) -> Result<Envelope, DecodeError> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    let line = line.strip_suffix('\r').unwrap_or(line);
    let frame: FrameIn = serde_json::from_str(line).map_err(|e| positioned(line, 0, e))?;
    let raw = frame.payload.get();
    let base = raw.as_ptr() as usize - line.as_ptr() as usize;
    let parse_err = |e| positioned(raw, base, e);
    let body = match frame.kind {
        Kind::Status => {
            let mut status: DiagnosticStatus = serde_json::from_str(raw).map_err(parse_err)?;
            status.timestamp_ms = frame.ts;
            Body::Status(status)
        }
        Kind::Snapshot => Body::Snapshot(serde_json::from_str(raw).map_err(parse_err)?),
        Kind::Data => Body::Data(serde_json::from_str(raw).map_err(parse_err)?),
        Kind::Command => Body::Command(serde_json::from_str(raw).map_err(parse_err)?),
        Kind::Action => Body::Action(serde_json::from_str(raw).map_err(parse_err)?),
        Kind::StateChange => Body::StateChange(serde_json::from_str(raw).map_err(parse_err)?),
    };
    Ok(Envelope {
        ts: frame.ts,
        channel: frame.channel,
        body,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{path, DiagnosticState};

    #[test]
    fn status_schema_is_exact() {
        let status = DiagnosticStatus::new(path!("/localization/tf_map"), DiagnosticState::Ok, 1000);
        let line = encode(&Envelope::status(status));
        assert_eq!(
            line,
            r#"{"kind":"status","ts":1000,"channel":"/localization/tf_map","payload":{"name":"/localization/tf_map","state":"OK","message":"","values":{}}}"#
        );
        let back = decode(&line).unwrap();
        assert_eq!(encode(&back), line);
        match back.body {
            Body::Status(s) => assert_eq!(s.timestamp_ms, 1000),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_state_token_is_positioned() {
        let line = r#"{"kind":"status","ts":1,"channel":"/a","payload":{"name":"/a","state":"BROKEN","message":"","values":{}}}"#;
        let err = decode(line).unwrap_err();
        let at = line.find("\"BROKEN\"").unwrap();
        assert!(err.offset >= at && err.offset <= at + 8, "{err} vs {at}");
    }

    #[test]
    fn malformed_frames() {
        let err = decode(r#"{"kind":"bogus","ts":1,"channel":"/a","payload":{}}"#).unwrap_err();
        assert!(err.offset > 0 && err.offset <= 16, "{err}");
        let err = decode(r#"{"kind":"data","ts":1,"#).unwrap_err();
        assert_eq!(err.offset, 22);
        let err = decode(r#"{"kind":"data","ts":-1,"channel":"/a","payload":{"stamp_ms":0}}"#).unwrap_err();
        assert!(err.message.contains("invalid value"), "{err}");
        let err = decode(r#"{"kind":"data","ts":1,"channel":"/A","payload":{"stamp_ms":0}}"#).unwrap_err();
        assert!(err.offset > 20, "{err}");
        assert!(decode("").is_err());
    }

    #[test]
    fn trailing_newline_is_accepted() {
        let env = Envelope::data(5, path!("/c"), DataMessage::new(4).with("x", 1.5));
        let mut line = encode(&env);
        line.push('\n');
        assert_eq!(decode(&line).unwrap(), env);
    }
}
