use std::collections::HashSet;

use crate::rng::SplitMix64;

use super::{ProteinSequence, SeqError, ALPHABET};

/// Parameters for a motif-planted synthetic dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthConfig {
    pub n_classes: usize,
    pub per_class: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub motif_length: usize,
    pub seed: u64,
}

impl SynthConfig {
    /// Name of class `k`, zero-padded so lexicographic order matches `k`.
    pub fn class_name(&self, k: usize) -> String {
        let width = (self.n_classes.max(2) - 1).to_string().len();
        format!("class{k:0width$}")
    }
}

/// Generates `per_class` sequences for each of `n_classes` classes.
///
/// Each class gets its own random motif. A sequence is uniform random
/// residues of a uniformly drawn length, with the class motif written over
/// a uniformly drawn window. Output is class-major and depends only on the
/// config.
pub fn synth_dataset(cfg: &SynthConfig) -> Result<Vec<ProteinSequence>, SeqError> {
    let invalid = |m: &str| Err(SeqError::InvalidSynth(m.to_string()));
    if cfg.n_classes < 2 {
        return invalid("need at least 2 classes");
    }
    if cfg.motif_length < 3 {
        return invalid("motif length must be at least 3");
    }
    if cfg.min_len > cfg.max_len {
        return invalid("length range is inverted");
    }
    if cfg.min_len < cfg.motif_length {
        return invalid("minimum length is shorter than the motif");
    }

    let mut rng = SplitMix64::new(cfg.seed);
    let draw =
        |rng: &mut SplitMix64, n: usize| -> Vec<u8> { (0..n).map(|_| ALPHABET[rng.below(20) as usize]).collect() };

    let mut motifs: Vec<Vec<u8>> = Vec::with_capacity(cfg.n_classes);
    let mut taken = HashSet::new();
    for _ in 0..cfg.n_classes {
        let mut attempts = 0;
        let motif = loop {
            let m = draw(&mut rng, cfg.motif_length);
            if taken.insert(m.clone()) {
                break m;
            }
            attempts += 1;
            if attempts >= 100 {
                return Err(SeqError::MotifCollision(cfg.n_classes));
            }
        };
        motifs.push(motif);
    }

    let id_width = cfg.per_class.saturating_sub(1).to_string().len();
    let mut out = Vec::with_capacity(cfg.n_classes * cfg.per_class);
    for (k, motif) in motifs.iter().enumerate() {
        let class = cfg.class_name(k);
        for i in 0..cfg.per_class {
            let len = rng.range_inclusive(cfg.min_len, cfg.max_len);
            let mut residues = draw(&mut rng, len);
            let at = rng.range_inclusive(0, len - motif.len());
            residues[at..at + motif.len()].copy_from_slice(motif);
            let residues = String::from_utf8(residues).expect("alphabet is ASCII");
            let seq = ProteinSequence::new(format!("{class}_{i:0id_width$}"), residues)?.with_label(class.clone());
            out.push(seq);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, per: usize, lo: usize, hi: usize, motif: usize, seed: u64) -> SynthConfig {
        SynthConfig {
            n_classes: n,
            per_class: per,
            min_len: lo,
            max_len: hi,
            motif_length: motif,
            seed,
        }
    }

    // The motif of class k is the only length-m window shared by every
    // sequence of that class in practice; recover it by brute force.
    fn shared_windows(seqs: &[&ProteinSequence], m: usize) -> Vec<String> {
        let first = seqs[0].residues();
        (0..=first.len() - m)
            .map(|i| &first[i..i + m])
            .filter(|w| seqs.iter().all(|s| s.residues().contains(w)))
            .map(str::to_string)
            .collect()
    }

    #[test]
    fn construction_contract() {
        let c = cfg(4, 50, 12, 18, 4, 7);
        let seqs = synth_dataset(&c).unwrap();
        assert_eq!(seqs.len(), 200);
        let mut motifs = Vec::new();
        for k in 0..4 {
            let class = c.class_name(k);
            let members: Vec<_> = seqs.iter().filter(|s| s.label() == Some(class.as_str())).collect();
            assert_eq!(members.len(), 50);
            assert!(members.iter().all(|s| (12..=18).contains(&s.len())));
            let shared = shared_windows(&members, 4);
            assert!(!shared.is_empty(), "class {k} has no common motif");
            motifs.push(shared[0].clone());
        }
        motifs.dedup();
        assert_eq!(motifs.len(), 4);
    }

    #[test]
    fn deterministic() {
        let c = cfg(4, 50, 12, 18, 4, 7);
        assert_eq!(synth_dataset(&c).unwrap(), synth_dataset(&c).unwrap());
        let d = SynthConfig { seed: 8, ..c.clone() };
        assert_ne!(synth_dataset(&c).unwrap(), synth_dataset(&d).unwrap());
    }

    #[test]
    fn boundary_lengths() {
        let seqs = synth_dataset(&cfg(2, 10, 5, 5, 4, 1)).unwrap();
        assert_eq!(seqs.len(), 20);
        assert!(seqs.iter().all(|s| s.len() == 5));
    }

    #[test]
    fn invalid_configs() {
        assert!(synth_dataset(&cfg(1, 10, 5, 6, 4, 1)).is_err());
        assert!(synth_dataset(&cfg(2, 10, 5, 6, 2, 1)).is_err());
        assert!(synth_dataset(&cfg(2, 10, 8, 6, 4, 1)).is_err());
        assert!(synth_dataset(&cfg(2, 10, 3, 6, 4, 1)).is_err());
        // 20^3 = 8000 distinct motifs, so 9000 classes must collide.
        assert_eq!(
            synth_dataset(&cfg(9000, 1, 3, 3, 3, 1)).unwrap_err(),
            SeqError::MotifCollision(9000)
        );
    }

    #[test]
    fn class_names_sort_in_index_order() {
        let c = cfg(12, 1, 5, 5, 3, 0);
        let names: Vec<_> = (0..12).map(|k| c.class_name(k)).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
    }
}
