//! Writing experiment outcomes to disk.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::Outcome;

/// Writes every table as CSV, every plot as SVG and the summary as
/// `<kind>_summary.json` into `dir`, returning the written paths.
///
/// All content is rendered and validated before the first write; files are
/// staged under temporary names and renamed into place, and a failure removes
/// whatever was already staged or placed.
pub fn emit_report(outcome: &Outcome, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<(String, String)> = Vec::new();
    for t in &outcome.tables {
        if t.rows.is_empty() {
            return Err(Error::InvalidArgument(format!("table {} is empty", t.name)));
        }
        files.push((t.file_name(), t.to_csv_string()?));
    }
    if files.is_empty() {
        return Err(Error::InvalidArgument("outcome has no tables".into()));
    }
    for p in &outcome.plots {
        files.push((p.file_name.clone(), p.svg.clone()));
    }
    let mut summary = serde_json::to_string_pretty(&outcome.summary)?;
    summary.push('\n');
    files.push((format!("{}_summary.json", outcome.kind.as_str()), summary));

    let mut names = BTreeSet::new();
    for (name, _) in &files {
        if !names.insert(name.as_str()) {
            return Err(Error::InvalidArgument(format!(
                "duplicate output file {name}"
            )));
        }
    }

    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut staged = Vec::new();
    let mut placed = Vec::new();
    let result = (|| {
        for (name, body) in &files {
            let tmp = dir.join(format!(".{name}.tmp"));
            staged.push(tmp.clone());
            std::fs::write(&tmp, body).map_err(|e| Error::io(&tmp, e))?;
        }
        for ((name, _), tmp) in files.iter().zip(&staged) {
            let dest = dir.join(name);
            std::fs::rename(tmp, &dest).map_err(|e| Error::io(&dest, e))?;
            placed.push(dest);
        }
        Ok(())
    })();
    if let Err(e) = result {
        for p in staged.iter().chain(&placed) {
            let _ = std::fs::remove_file(p);
        }
        return Err(e);
    }
    Ok(placed)
}
