//! Run manifest: one tab-separated line per command.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use crate::error::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    pub command: String,
    pub config_hash: String,
    pub wall_seconds: f64,
    pub outputs: Vec<String>,
    /// Extra `key=value` fields such as metrics or recipe parameters.
    pub fields: Vec<(String, String)>,
}

impl ManifestEntry {
    pub fn line(&self) -> String {
        let mut parts = vec![
            format!("command={}", self.command),
            format!("config={}", self.config_hash),
            format!("wall_s={:.3}", self.wall_seconds),
            format!("outputs={}", self.outputs.join(",")),
        ];
        parts.extend(self.fields.iter().map(|(k, v)| format!("{k}={v}")));
        parts.join("\t")
    }
}

/// Appends `entry` to `dir/manifest.txt`.
pub fn append_manifest(dir: &Path, entry: &ManifestEntry) -> Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(dir.join("manifest.txt"))?;
    writeln!(f, "{}", entry.line())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn appends_lines() {
        let dir = tempfile::tempdir().unwrap();
        let e = ManifestEntry {
            command: "phantom".into(),
            config_hash: "ab".into(),
            wall_seconds: 0.5,
            outputs: vec!["a.bin".into(), "a.pgm".into()],
            fields: vec![("rel_error".into(), "0.1".into())],
        };
        append_manifest(dir.path(), &e).unwrap();
        append_manifest(dir.path(), &e).unwrap();
        let text = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(
            text.lines().next().unwrap(),
            "command=phantom\tconfig=ab\twall_s=0.500\toutputs=a.bin,a.pgm\trel_error=0.1"
        );
    }
}
