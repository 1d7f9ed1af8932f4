//! Hierarchical source names such as `/sensors/velodyne_packet_alive`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NameError {
    #[error("empty path")]
    Empty,
    #[error("path must start with '/' (offset 0)")]
    MissingLeadingSlash,
    #[error("empty segment at offset {0}")]
    EmptySegment(usize),
    #[error("illegal character {ch:?} at offset {offset}")]
    IllegalChar { ch: char, offset: usize },
}

/// Non-empty list of `[a-z0-9_]+` segments, rendered as `/seg1/seg2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NamePath {
    segments: Vec<String>,
}

fn legal(ch: char) -> bool {
    ch.is_ascii_lowercase() || ch.is_ascii_digit() || ch == '_'
}

impl NamePath {
    pub fn parse(text: &str) -> Result<Self, NameError> {
        if text.is_empty() {
            return Err(NameError::Empty);
        }
        if !text.starts_with('/') {
            return Err(NameError::MissingLeadingSlash);
        }
        let mut segments = Vec::new();
        let mut start = 1;
        for (offset, ch) in text.char_indices().skip(1) {
            if ch == '/' {
                if offset == start {
                    return Err(NameError::EmptySegment(offset));
                }
                segments.push(text[start..offset].to_string());
                start = offset + 1;
            } else if !legal(ch) {
                return Err(NameError::IllegalChar { ch, offset });
            }
        }
        if start == text.len() {
            return Err(NameError::EmptySegment(start));
        }
        segments.push(text[start..].to_string());
        Ok(NamePath { segments })
    }

    /// Builds a path from segments, validating each one.
    pub fn from_segments<I, S>(segments: I) -> Result<Self, NameError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut rendered = String::new();
        for seg in segments {
            rendered.push('/');
            rendered.push_str(&seg.into());
        }
        NamePath::parse(&rendered)
    }

    pub fn segments(&self) -> &[String] {
        &self.segments
    }

    pub fn last(&self) -> &str {
        self.segments.last().expect("non-empty by construction")
    }

    /// Path-prefix test that respects segment boundaries. A path is a
    /// prefix of itself.
    pub fn starts_with(&self, prefix: &NamePath) -> bool {
        self.segments.len() >= prefix.segments.len()
            && self.segments[..prefix.segments.len()] == prefix.segments[..]
    }

    pub fn join(&self, segment: &str) -> Result<NamePath, NameError> {
        NamePath::parse(&format!("{self}/{segment}"))
    }
}

impl fmt::Display for NamePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for seg in &self.segments {
            write!(f, "/{seg}")?;
        }
        Ok(())
    }
}

impl FromStr for NamePath {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NamePath::parse(s)
    }
}

impl Serialize for NamePath {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NamePath {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        NamePath::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Shorthand for literal paths known to be valid.
#[macro_export]
macro_rules! path {
    ($s:expr) => {
        $crate::NamePath::parse($s).expect("valid literal path")
    };
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_examples() {
        let p = NamePath::parse("/sensors/velodyne_packet_alive").unwrap();
        assert_eq!(p.segments(), ["sensors", "velodyne_packet_alive"]);
        assert_eq!(NamePath::parse("/a/b/c").unwrap().segments(), ["a", "b", "c"]);
    }

    #[test]
    fn rejects_bad_input_with_position() {
        assert_eq!(NamePath::parse("/"), Err(NameError::EmptySegment(1)));
        assert_eq!(NamePath::parse(""), Err(NameError::Empty));
        assert_eq!(NamePath::parse("a/b"), Err(NameError::MissingLeadingSlash));
        assert_eq!(NamePath::parse("/a//b"), Err(NameError::EmptySegment(3)));
        assert_eq!(NamePath::parse("/a/b/"), Err(NameError::EmptySegment(5)));
        assert_eq!(
            NamePath::parse("/a/B"),
            Err(NameError::IllegalChar { ch: 'B', offset: 3 })
        );
        assert_eq!(
            NamePath::parse("/a-b"),
            Err(NameError::IllegalChar { ch: '-', offset: 2 })
        );
    }

    #[test]
    fn prefix_respects_segments() {
        let sensors = NamePath::parse("/sensors").unwrap();
        assert!(NamePath::parse("/sensors/velodyne_packet_alive").unwrap().starts_with(&sensors));
        assert!(!NamePath::parse("/sensorsx/foo").unwrap().starts_with(&sensors));
        assert!(sensors.starts_with(&sensors));
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(segs in proptest::collection::vec("[a-z0-9_]{1,8}", 1..6)) {
            let text: String = segs.iter().map(|s| format!("/{s}")).collect();
            let parsed = NamePath::parse(&text).unwrap();
            prop_assert_eq!(parsed.to_string(), text);
            prop_assert_eq!(parsed.segments(), &segs[..]);
        }
    }
}
