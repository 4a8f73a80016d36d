use std::collections::HashSet;
use std::io::{self, Write};

use super::{residue_rank, validate_id, ProteinSequence, SeqError};

struct Pending {
    id: String,
    residues: String,
}

/// Parses FASTA text into validated sequences, in file order.
///
/// The id is the first whitespace-delimited token of each header. Sequence
/// lines may wrap, residues are uppercased, and `\r\n` line endings are
/// accepted. Blank lines are skipped.
pub fn parse_fasta(input: &[u8]) -> Result<Vec<ProteinSequence>, SeqError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut current: Option<Pending> = None;

    for (idx, raw) in input.split(|&b| b == b'\n').enumerate() {
        let line_no = idx + 1;
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        let line = std::str::from_utf8(raw).map_err(|_| SeqError::NotUtf8 { line: line_no })?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }

        if let Some(header) = line.strip_prefix('>') {
            if let Some(done) = current.take() {
                out.push(finish(done)?);
            }
            let id = header
                .split_whitespace()
                .next()
                .ok_or(SeqError::EmptyHeader { line: line_no })?;
            validate_id(id)?;
            if !seen.insert(id.to_string()) {
                return Err(SeqError::DuplicateId(id.to_string()));
            }
            current = Some(Pending {
                id: id.to_string(),
                residues: String::new(),
            });
            continue;
        }

        let Some(rec) = current.as_mut() else {
            return Err(SeqError::DataBeforeHeader { line: line_no });
        };
        for c in line.chars() {
            let up = c.to_ascii_uppercase();
            if !up.is_ascii() || residue_rank(up as u8).is_none() {
                return Err(SeqError::InvalidResidue {
                    id: rec.id.clone(),
                    position: rec.residues.len() + 1,
                    residue: c,
                });
            }
            rec.residues.push(up);
        }
    }

    if let Some(done) = current.take() {
        out.push(finish(done)?);
    }
    Ok(out)
}

fn finish(p: Pending) -> Result<ProteinSequence, SeqError> {
    if p.residues.is_empty() {
        return Err(SeqError::EmptySequence(p.id));
    }
    ProteinSequence::new(p.id, p.residues)
}

/// Writes sequences as FASTA with residue lines wrapped at 60 columns.
pub fn write_fasta<W: Write>(sink: &mut W, seqs: &[ProteinSequence]) -> io::Result<()> {
    for s in seqs {
        writeln!(sink, ">{}", s.id())?;
        for chunk in s.as_bytes().chunks(60) {
            sink.write_all(chunk)?;
            sink.write_all(b"\n")?;
        }
    }
    Ok(())
}
