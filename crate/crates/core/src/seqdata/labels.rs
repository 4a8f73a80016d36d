use std::collections::BTreeMap;

use super::SeqError;

/// Reads an `id,label` CSV (extra columns are ignored) into a map.
pub fn parse_labels_csv(input: &[u8]) -> Result<BTreeMap<String, String>, SeqError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(input);

    let headers = reader.headers().map_err(|e| SeqError::Csv(e.to_string()))?.clone();
    let column = |name: &'static str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or(SeqError::MissingColumn(name))
    };
    let id_col = column("id")?;
    let label_col = column("label")?;

    let mut out = BTreeMap::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| SeqError::Csv(e.to_string()))?;
        let id = rec.get(id_col).unwrap_or("").trim();
        let label = rec.get(label_col).unwrap_or("").trim();
        if id.is_empty() {
            return Err(SeqError::EmptyLabelId(i + 1));
        }
        if label.is_empty() {
            return Err(SeqError::EmptyLabel(id.to_string()));
        }
        if out.insert(id.to_string(), label.to_string()).is_some() {
            return Err(SeqError::DuplicateLabel(id.to_string()));
        }
    }
    Ok(out)
}
