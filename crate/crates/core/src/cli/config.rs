use std::path::Path;

use clap::parser::ValueSource;
use clap::ArgMatches;
use serde::de::DeserializeOwned;

use super::CliError;

/// Values from a `--config` file. A key is looked up first in the table named
/// after the subcommand, then at the top level. Flags typed on the command
/// line always win.
pub struct FileLayer<'m> {
    table: toml::Table,
    section: &'static str,
    matches: &'m ArgMatches,
}

impl<'m> FileLayer<'m> {
    pub fn load(
        path: Option<&Path>,
        section: &'static str,
        matches: &'m ArgMatches,
    ) -> Result<Self, CliError> {
        let table = match path {
            None => toml::Table::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::usage(format!("config {}: {e}", p.display())))?;
                text.parse::<toml::Table>()
                    .map_err(|e| CliError::usage(format!("config {}: {e}", p.display())))?
            }
        };
        Ok(Self {
            table,
            section,
            matches,
        })
    }

    fn lookup(&self, key: &str) -> Option<&toml::Value> {
        self.table
            .get(self.section)
            .and_then(|s| s.as_table())
            .and_then(|s| s.get(key))
            .or_else(|| self.table.get(key).filter(|v| !v.is_table()))
    }

    /// Overwrites `slot` with the file's value for `id` unless the flag was
    /// given explicitly.
    pub fn apply<T: DeserializeOwned>(&self, id: &str, slot: &mut T) -> Result<(), CliError> {
        if self.matches.value_source(id) == Some(ValueSource::CommandLine) {
            return Ok(());
        }
        if let Some(v) = self.lookup(id) {
            *slot = v
                .clone()
                .try_into()
                .map_err(|e| CliError::usage(format!("config key `{id}`: {e}")))?;
        }
        Ok(())
    }
}
