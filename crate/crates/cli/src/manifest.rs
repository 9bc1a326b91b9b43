//! TOML run manifests for the `synthesize` command.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use ftroute::workflow::{Arrangement, EntryKind, MoveBack, ProtocolEntry, ProtocolSet};
use ftroute::{QubitLayout, SynthesisConfig};

use crate::source::ProtocolSource;
use crate::UsageError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    SyndromeMeasurement,
    MagicPreparation,
    Anchored,
    Cnot,
    TGate,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSpec {
    pub name: String,
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub builtin: Option<String>,
    pub kind: Kind,
    #[serde(default)]
    pub move_back: Option<MoveBack>,
    /// Keys replacing the manifest-wide `[config]` for this protocol.
    #[serde(default)]
    pub config: Option<toml::Table>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawManifest {
    #[serde(default)]
    pub name: Option<String>,
    pub layout: String,
    #[serde(default = "default_register")]
    pub data_register: String,
    #[serde(default)]
    pub arrangements: Option<Vec<String>>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub config: toml::Table,
    #[serde(default, rename = "protocol")]
    pub protocols: Vec<ProtocolSpec>,
}

fn default_register() -> String {
    "data".into()
}

/// A checked manifest, ready to run.
#[derive(Debug)]
pub struct RunManifest {
    pub name: String,
    pub layout: QubitLayout,
    pub arrangements: Vec<Arrangement>,
    pub output_dir: Option<PathBuf>,
    pub config: SynthesisConfig,
    pub set: ProtocolSet,
}

fn config_from(table: &toml::Table) -> Result<SynthesisConfig> {
    let text = toml::to_string(table)?;
    Ok(toml::from_str(&text)?)
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read manifest {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
            .map_err(|e| UsageError(format!("{}: {e:#}", path.display())).into())
    }

    /// Relative protocol paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let raw: RawManifest = toml::from_str(text)?;
        let layout: QubitLayout = raw
            .layout
            .parse()
            .with_context(|| format!("invalid layout `{}`", raw.layout))?;
        let config = config_from(&raw.config).context("in [config]")?;
        let arrangements = match &raw.arrangements {
            None => Arrangement::ALL.to_vec(),
            Some(list) => list
                .iter()
                .map(|s| s.parse::<Arrangement>().map_err(anyhow::Error::msg))
                .collect::<Result<_>>()?,
        };

        let mut entries = Vec::new();
        for spec in &raw.protocols {
            let source = match (&spec.path, &spec.builtin) {
                (Some(p), None) => ProtocolSource::File(base.join(p)),
                (None, Some(b)) => ProtocolSource::Builtin(b.clone()),
                _ => bail!(
                    "protocol `{}` needs exactly one of `path` or `builtin`",
                    spec.name
                ),
            };
            let protocol = source
                .load()
                .with_context(|| format!("protocol `{}`", spec.name))?;
            let kind = match spec.kind {
                Kind::SyndromeMeasurement => EntryKind::SyndromeMeasurement,
                Kind::MagicPreparation => EntryKind::MagicPreparation,
                Kind::Anchored => EntryKind::Anchored(spec.move_back.unwrap_or(MoveBack::None)),
                Kind::Cnot => EntryKind::Cnot,
                Kind::TGate => EntryKind::TGate,
            };
            if spec.move_back.is_some() && spec.kind != Kind::Anchored {
                bail!(
                    "protocol `{}`: `move_back` only applies to anchored protocols",
                    spec.name
                );
            }
            let config = match &spec.config {
                None => None,
                Some(over) => {
                    let mut merged = raw.config.clone();
                    merged.extend(over.clone());
                    Some(
                        config_from(&merged)
                            .with_context(|| format!("config of `{}`", spec.name))?,
                    )
                }
            };
            entries.push(ProtocolEntry {
                name: spec.name.clone(),
                protocol,
                kind,
                config,
            });
        }

        let count = |k: Kind| raw.protocols.iter().filter(|p| p.kind == k).count();
        if count(Kind::SyndromeMeasurement) != 1 {
            bail!(
                "expected exactly one syndrome-measurement protocol, found {}",
                count(Kind::SyndromeMeasurement)
            );
        }
        if count(Kind::MagicPreparation) > 1 {
            bail!("at most one magic-preparation protocol is allowed");
        }
        if count(Kind::TGate) > 0 && count(Kind::MagicPreparation) == 0 {
            bail!("a t-gate protocol needs a magic-preparation protocol");
        }
        let mut names: Vec<&str> = raw.protocols.iter().map(|p| p.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            bail!("protocol name `{}` appears twice", w[0]);
        }

        let sm = entries
            .iter()
            .find(|e| e.kind == EntryKind::SyndromeMeasurement)
            .expect("counted above");
        let block_size = sm
            .protocol
            .register_qubits(&raw.data_register)
            .map(|q| q.len())
            .with_context(|| {
                format!(
                    "syndrome measurement has no register `{}`",
                    raw.data_register
                )
            })?;

        Ok(Self {
            name: raw.name.unwrap_or_else(|| "run".into()),
            layout,
            arrangements,
            output_dir: raw.output_dir.map(|d| base.join(d)),
            config,
            set: ProtocolSet {
                entries,
                data_register: raw.data_register,
                block_size,
            },
        })
    }
}
