//! UTC instants at millisecond precision.

use chrono::{DateTime, DurationRound, SecondsFormat, TimeDelta, Utc};

pub type Timestamp = DateTime<Utc>;

/// Drops anything below a millisecond.
pub fn truncate_millis(t: Timestamp) -> Timestamp {
    t.duration_trunc(TimeDelta::milliseconds(1)).unwrap_or(t)
}

/// Wall-clock time, truncated to milliseconds.
pub fn now() -> Timestamp {
    truncate_millis(std::time::SystemTime::now().into())
}

/// Parses an RFC 3339 / ISO-8601 instant with an offset and normalizes it to
/// UTC milliseconds.
pub fn parse_timestamp(s: &str) -> Result<Timestamp, chrono::ParseError> {
    DateTime::parse_from_rfc3339(s).map(|t| truncate_millis(t.with_timezone(&Utc)))
}

/// `2024-01-01T08:00:00.000Z`
pub fn format_timestamp(t: &Timestamp) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Serde adapter for [`Timestamp`] fields using [`format_timestamp`].
pub mod millis {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use super::{format_timestamp, parse_timestamp, Timestamp};

    pub fn serialize<S: Serializer>(t: &Timestamp, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_timestamp(t))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Timestamp, D::Error> {
        let raw = String::deserialize(d)?;
        parse_timestamp(&raw).map_err(D::Error::custom)
    }
}
