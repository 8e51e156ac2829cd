use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{LabelValue, Record, RecordManifest};

/// Reads a JSON-lines manifest. Blank lines are skipped.
pub fn load_manifest(path: &Path) -> Result<RecordManifest> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let err = |line: usize, message: String| Error::Parse {
        path: path.display().to_string(),
        line,
        message,
    };
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| err(line_no, e.to_string()))?;
        if let Some(first) = seen.insert(record.id.clone(), line_no) {
            return Err(err(
                line_no,
                format!("duplicate id `{}` (first on line {first})", record.id),
            ));
        }
        records.push(record);
    }
    RecordManifest::new(records)
}

pub fn save_manifest(path: &Path, manifest: &RecordManifest) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in manifest.records() {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Half-century bucket of a year, e.g. 1912 → "1900-1950". A boundary year
/// belongs to the later bucket.
pub fn timeframe_label(year: f64) -> String {
    let start = (year / 50.0).floor() as i64 * 50;
    format!("{start}-{}", start + 50)
}

/// Adds a `timeframe_key` class label to every record with a numeric
/// `date_key` label. Returns how many records were labelled.
pub fn derive_timeframes(manifest: &mut RecordManifest, date_key: &str, timeframe_key: &str) -> usize {
    let mut n = 0;
    for node in 0..manifest.len() {
        let labels = manifest.label_mut(node);
        if let Some(LabelValue::Number(year)) = labels.get(date_key) {
            let tf = timeframe_label(*year);
            labels.insert(timeframe_key.to_string(), LabelValue::Text(tf));
            n += 1;
        }
    }
    n
}
