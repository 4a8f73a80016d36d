use crate::rng::SplitMix64;

use super::{DatasetManifest, SeqError, Split};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    test_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    pub fn new(test_fraction: f64, seed: u64, stratified: bool) -> Result<Self, SeqError> {
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(SeqError::InvalidFraction(test_fraction));
        }
        Ok(Self {
            test_fraction,
            seed,
            stratified,
        })
    }

    pub fn test_fraction(&self) -> f64 {
        self.test_fraction
    }
}

/// Number of test items drawn from a group of `n`: `round(fraction * n)`
/// with halves rounded up, and never less than one.
pub fn test_count(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64 + 0.5).floor() as usize).max(1)
}

/// Assigns every entry to train or test.
///
/// With `stratified`, each class (in `classes` order) is shuffled with one
/// shared seeded generator and its first `test_count(n_c)` members go to
/// test. Otherwise the whole dataset is shuffled once. The result depends
/// only on the manifest's entry order and the seed.
pub fn stratified_split(manifest: &DatasetManifest, spec: &SplitSpec) -> Result<DatasetManifest, SeqError> {
    manifest.validate()?;
    let mut rng = SplitMix64::new(spec.seed);
    let mut test = vec![false; manifest.entries.len()];

    if spec.stratified {
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); manifest.classes.len()];
        for (i, e) in manifest.entries.iter().enumerate() {
            let label = e.label.as_deref().ok_or_else(|| SeqError::Unlabeled(e.id.clone()))?;
            // validate() guarantees the label is a known class.
            groups[manifest.class_index(label).expect("validated label")].push(i);
        }
        for (class, members) in manifest.classes.iter().zip(&groups) {
            if members.len() < 2 {
                return Err(SeqError::ClassTooSmall {
                    class: class.clone(),
                    size: members.len(),
                });
            }
            if test_count(members.len(), spec.test_fraction) >= members.len() {
                return Err(SeqError::EmptyTrain {
                    class: class.clone(),
                    fraction: spec.test_fraction,
                });
            }
        }
        for members in &mut groups {
            let t = test_count(members.len(), spec.test_fraction);
            rng.shuffle(members);
            for &i in &members[..t] {
                test[i] = true;
            }
        }
    } else {
        let n = manifest.entries.len();
        if n < 2 {
            return Err(SeqError::TooFewEntries(n));
        }
        let t = test_count(n, spec.test_fraction);
        if t >= n {
            return Err(SeqError::EmptyTrain {
                class: "<all>".into(),
                fraction: spec.test_fraction,
            });
        }
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        for &i in &order[..t] {
            test[i] = true;
        }
    }

    let mut out = manifest.clone();
    out.seed = spec.seed;
    for (e, is_test) in out.entries.iter_mut().zip(test) {
        e.split = if is_test { Split::Test } else { Split::Train };
    }
    Ok(out)
}
