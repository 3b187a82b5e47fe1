use rayon::prelude::*;

use super::{chunked_structures, AuditError, CHUNK};
use crate::air::DEFAULT_COLS;
use crate::commit::{tag, Digest, HashKind};
use crate::fxp::{round_div, FxpSpec};
use crate::nn::{CircuitBackend, FxpBackend, NnError, PlainBackend};
use crate::protocol::{
    AuditContext, AuditFunction, AuditOutput, AuditRun, AuditSpec, MockBackend, ProtocolError, Structure,
    TrainingTranscript,
};

/// Per-category counts of `labels`, each label proven to be one of
/// `categories` via a boolean one-hot with unit sum.
fn count_labels<B: FxpBackend>(
    be: &mut B,
    labels: &[u32],
    first_item: usize,
    categories: usize,
) -> Result<Vec<B::V>, AuditError> {
    let mut rows = Vec::with_capacity(labels.len());
    for (k, &l) in labels.iter().enumerate() {
        if l as usize >= categories {
            return Err(AuditError::Label { item: first_item + k, label: l, categories });
        }
        rows.push(be.onehot(l as usize, categories)?);
    }
    (0..categories)
        .map(|c| {
            let col: Vec<B::V> = rows.iter().map(|r| r[c]).collect();
            Ok(be.sum(&col)?)
        })
        .collect()
}

pub fn labels_digest(hash: HashKind, labels: &[u32]) -> Digest {
    let bytes: Vec<u8> = labels.iter().flat_map(|v| v.to_le_bytes()).collect();
    hash.hash(tag::PUBLIC, &[b"labels", &bytes])
}

/// `count / items` at the spec's scale.
fn proportions(spec: &FxpSpec, counts: &[u64], items: usize) -> Result<Vec<i64>, AuditError> {
    counts
        .iter()
        .map(|&c| Ok(round_div(c as i128 * spec.sf() as i128, items as i128).map_err(NnError::from)? as i64))
        .collect()
}

/// Category counts and proportions over per-item labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DemographicAudit {
    pub labels: Vec<u32>,
    pub categories: usize,
    pub hash: HashKind,
}

impl AuditFunction for DemographicAudit {
    fn spec(&self) -> AuditSpec {
        AuditSpec::Demographic {
            categories: self.categories,
            items: self.labels.len(),
            labels: labels_digest(self.hash, &self.labels),
        }
    }

    fn run(&self, ctx: &AuditContext<'_>) -> Result<AuditRun, ProtocolError> {
        let spec = ctx.transcript.header.spec;
        if self.labels.is_empty() || self.categories == 0 {
            return Err(AuditError::Domain("need at least one item and one category".into()).into());
        }
        let mut plain = PlainBackend::new(spec);
        let counts: Vec<u64> =
            count_labels(&mut plain, &self.labels, 0, self.categories)?.into_iter().map(|c| c as u64).collect();
        let circuits = self
            .labels
            .par_chunks(CHUNK)
            .enumerate()
            .map(|(i, chunk)| {
                let mut be = CircuitBackend::new(spec, DEFAULT_COLS)?;
                count_labels(&mut be, chunk, i * CHUNK, self.categories)?;
                Ok(be.builder.finish().map_err(NnError::from)?)
            })
            .collect::<Result<Vec<_>, AuditError>>()?;
        let proportions_raw = proportions(&spec, &counts, self.labels.len())?;
        Ok(AuditRun { output: AuditOutput::Demographic { counts, proportions_raw }, circuits })
    }
}

pub(super) fn structures(spec: &AuditSpec, t: &TrainingTranscript) -> Result<Vec<Structure>, ProtocolError> {
    let AuditSpec::Demographic { categories, items, .. } = spec else { unreachable!() };
    if *categories == 0 || *items == 0 {
        return Err(AuditError::Domain("need at least one item and one category".into()).into());
    }
    let mock = MockBackend::new(t.header.hash);
    chunked_structures(*items, CHUNK, |len| {
        let mut be = CircuitBackend::new(t.header.spec, DEFAULT_COLS)?;
        count_labels(&mut be, &vec![0; len], 0, *categories)?;
        Ok(mock.structure(&be.builder.finish().map_err(NnError::from)?))
    })
}

pub(super) fn check(spec: &AuditSpec, out: &AuditOutput, t: &TrainingTranscript) -> Result<(), String> {
    let (AuditSpec::Demographic { categories, items, .. }, AuditOutput::Demographic { counts, proportions_raw }) =
        (spec, out)
    else {
        unreachable!()
    };
    if counts.len() != *categories || proportions_raw.len() != *categories {
        return Err("wrong number of categories".into());
    }
    if counts.iter().sum::<u64>() != *items as u64 {
        return Err("counts do not sum to the item count".into());
    }
    match proportions(&t.header.spec, counts, *items) {
        Ok(p) if p == *proportions_raw => Ok(()),
        _ => Err("proportions inconsistent with counts".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counts(labels: &[u32], k: usize) -> Result<Vec<i128>, AuditError> {
        count_labels(&mut PlainBackend::new(FxpSpec::recommender()), labels, 0, k)
    }

    #[test]
    fn single_category_is_everything() {
        let s = FxpSpec::recommender();
        let c = counts(&[2; 37], 3).unwrap();
        assert_eq!(c, vec![0, 0, 37]);
        assert_eq!(proportions(&s, &[0, 0, 37], 37).unwrap(), vec![0, 0, s.sf()]);
    }

    #[test]
    fn uniform_four_way_split() {
        let s = FxpSpec::recommender();
        let labels: Vec<u32> = (0..100).map(|i| i % 4).collect();
        let c: Vec<u64> = counts(&labels, 4).unwrap().into_iter().map(|v| v as u64).collect();
        assert_eq!(c, vec![25; 4]);
        assert_eq!(proportions(&s, &c, 100).unwrap(), vec![s.quantize_raw(0.25).unwrap(); 4]);
    }

    #[test]
    fn out_of_range_label_is_rejected() {
        assert!(matches!(counts(&[0, 1, 5], 3), Err(AuditError::Label { item: 2, label: 5, categories: 3 })));
    }

    #[test]
    fn circuit_checks_and_forged_label_fails() {
        let mut be = CircuitBackend::new(FxpSpec::recommender(), DEFAULT_COLS).unwrap();
        count_labels(&mut be, &[0, 1, 1, 2], 0, 3).unwrap();
        let mut c = be.builder.finish().unwrap();
        assert!(c.check().unwrap().is_empty());
        // the one-hot bits of the first item; turning it off breaks the unit sum
        assert!(super::super::tamper_value(&mut c, 1, 0));
        assert!(!c.check().unwrap().is_empty());
    }

    proptest! {
        #[test]
        fn counts_sum_to_items(labels in proptest::collection::vec(0u32..5, 1..200)) {
            let c = counts(&labels, 5).unwrap();
            prop_assert_eq!(c.iter().sum::<i128>(), labels.len() as i128);
            for (k, &n) in c.iter().enumerate() {
                prop_assert_eq!(n as usize, labels.iter().filter(|&&l| l as usize == k).count());
            }
        }
    }
}
