//! Where a protocol comes from: a file, or a fixture shipped with the core crate.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{Context, Result};

use ftroute::workflow::{fixtures, load_protocol};
use ftroute::Protocol;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProtocolSource {
    File(PathBuf),
    Builtin(String),
}

impl ProtocolSource {
    pub fn load(&self) -> Result<Protocol> {
        match self {
            ProtocolSource::Builtin(name) => {
                let text = fixtures::text(name).with_context(|| {
                    let known: Vec<&str> = fixtures::ALL.iter().map(|(n, _)| *n).collect();
                    format!("no builtin protocol `{name}` (known: {})", known.join(", "))
                })?;
                Ok(load_protocol(text, name)?)
            }
            ProtocolSource::File(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("cannot read {}", path.display()))?;
                let stem = path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or("protocol");
                load_protocol(&text, stem).with_context(|| path.display().to_string())
            }
        }
    }
}

impl FromStr for ProtocolSource {
    type Err = std::convert::Infallible;

    /// `builtin:NAME` selects a shipped fixture; anything else is a path.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.strip_prefix("builtin:") {
            Some(name) => ProtocolSource::Builtin(name.to_string()),
            None => ProtocolSource::File(PathBuf::from(s)),
        })
    }
}

impl fmt::Display for ProtocolSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProtocolSource::File(p) => write!(f, "{}", p.display()),
            ProtocolSource::Builtin(n) => write!(f, "builtin:{n}"),
        }
    }
}
