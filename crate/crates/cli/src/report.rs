//! Canonical JSON reports.
//!
//! A report embeds the experiment name, the build's git-describe string, the
//! fully resolved experiment configuration and the experiment body with its
//! verdicts. Execution details (thread count, output paths) are not part of
//! the report, so reruns of the same seed produce byte-identical files
//! regardless of parallelism.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

pub const VERSION: &str = env!("LPPLAB_GIT_DESCRIBE");

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    experiment: &'a str,
    version: &'a str,
    config: &'a BTreeMap<String, serde_json::Value>,
    #[serde(flatten)]
    body: &'a T,
    pass: bool,
}

pub struct ReportSink {
    pub out_dir: PathBuf,
    pub echo_json: bool,
    pub write_csv: bool,
}

impl ReportSink {
    pub fn render<T: Serialize>(
        &self,
        experiment: &str,
        config: &BTreeMap<String, serde_json::Value>,
        body: &T,
        pass: bool,
    ) -> Result<String> {
        let envelope = Envelope {
            experiment,
            version: VERSION,
            config,
            body,
            pass,
        };
        let json = serde_json::to_string_pretty(&envelope)?;
        fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("creating {}", self.out_dir.display()))?;
        let path = self.out_dir.join(format!("{experiment}.json"));
        fs::write(&path, format!("{json}\n"))
            .with_context(|| format!("writing {}", path.display()))?;
        if self.echo_json {
            println!("{json}");
        }
        Ok(json)
    }

    pub fn csv_path(&self, experiment: &str) -> PathBuf {
        self.out_dir.join(format!("{experiment}_samples.csv"))
    }

    pub fn write_csv_rows(
        &self,
        experiment: &str,
        header: &str,
        rows: impl Iterator<Item = String>,
    ) -> Result<()> {
        if !self.write_csv {
            return Ok(());
        }
        let mut text = String::from(header);
        text.push('\n');
        for r in rows {
            text.push_str(&r);
            text.push('\n');
        }
        let path = self.csv_path(experiment);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

/// Load a JSON config file of the form
/// `{ "experiment": ..., "seed": ..., "replicas": ..., "parameters": {...} }`.
#[derive(Debug, Default, serde::Deserialize)]
pub struct FileConfig {
    pub experiment: Option<String>,
    pub seed: Option<u64>,
    pub replicas: Option<usize>,
    #[serde(default)]
    pub parameters: BTreeMap<String, serde_json::Value>,
}

pub fn load_config(path: &Path) -> Result<FileConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}
