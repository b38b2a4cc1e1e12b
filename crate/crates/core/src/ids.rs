//! String identifiers for the domain entities.
//!
//! All ids order lexicographically; every deterministic tie-break in the
//! engine ("smallest id first") uses that order.

use std::borrow::Borrow;
use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    };
}

string_id!(
    /// Course identifier.
    CourseId
);
string_id!(
    /// Competency identifier, unique within a course.
    CompetencyId
);
string_id!(
    /// Relation identifier, unique within a course.
    RelationId
);
string_id!(
    /// Learning resource (lecture unit or exercise) identifier.
    ResourceId
);
string_id!(StudentId);
string_id!(
    /// Globally unique interaction event identifier; the idempotency key.
    EventId
);
