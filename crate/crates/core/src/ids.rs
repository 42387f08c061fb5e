//! Index newtypes shared by every module.

use std::fmt;
use std::str::FromStr;

/// One-based discrete time slot.
pub type Slot = usize;

macro_rules! index_type {
    ($(#[$meta:meta])* $name:ident, $prefix:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
        #[serde(transparent)]
        pub struct $name(pub usize);

        impl $name {
            pub fn index(self) -> usize {
                self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }

        impl From<usize> for $name {
            fn from(v: usize) -> Self {
                $name(v)
            }
        }
    };
}

index_type!(
    /// Edge-cloud node.
    NodeId,
    "n"
);
index_type!(
    /// Directed link.
    LinkId,
    "l"
);
index_type!(
    /// Directed path from the enumerated path set.
    PathId,
    "p"
);
index_type!(ServiceId, "s");
index_type!(RequestId, "r");

/// The `index`-th instance of `service` in the catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InstanceId {
    pub service: ServiceId,
    pub index: usize,
}

impl InstanceId {
    pub fn new(service: usize, index: usize) -> Self {
        InstanceId { service: ServiceId(service), index }
    }
}

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}i{}", self.service.0, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed instance id {0:?} (expected s<service>i<index>)")]
pub struct ParseInstanceIdError(String);

impl FromStr for InstanceId {
    type Err = ParseInstanceIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseInstanceIdError(s.to_string());
        let rest = s.strip_prefix('s').ok_or_else(err)?;
        let (service, index) = rest.split_once('i').ok_or_else(err)?;
        Ok(InstanceId::new(
            service.parse().map_err(|_| err())?,
            index.parse().map_err(|_| err())?,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_id_text_form() {
        let id = InstanceId::new(3, 1);
        assert_eq!(id.to_string(), "s3i1");
        assert_eq!("s3i1".parse::<InstanceId>().unwrap(), id);
        assert!("3i1".parse::<InstanceId>().is_err());
        assert!("s3x1".parse::<InstanceId>().is_err());
    }
}
