//! Cartesian-product encoding of (label, explanation) pairs into composite
//! classes, and the inverse decoding.
//!
//! A [`CodecTable`] is fit on training instances. Every distinct pair
//! observed receives a dense [`CompositeId`] in first-occurrence order, so
//! the composite classes form a two-level hierarchy under their labels. When
//! each explanation co-occurs with exactly one label the table also carries
//! the explanation-to-label map used to derive decisions from predicted
//! explanations.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::dataset::{ExplanationId, LabelId, LabeledInstance};
use crate::error::{Result, TedError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CompositeId(pub u32);

impl CompositeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodecTable {
    label_names: Vec<String>,
    explanation_names: Vec<String>,
    composite_to_pair: Vec<(LabelId, ExplanationId)>,
    pair_to_composite: HashMap<(LabelId, ExplanationId), CompositeId>,
    e_to_y: Option<BTreeMap<ExplanationId, LabelId>>,
}

/// Fits a codec over the (label, explanation) pairs of `instances`.
///
/// The name slices give display names for label and explanation ids; every
/// id used by an instance must have a name.
pub fn fit_codec(
    instances: &[LabeledInstance],
    label_names: &[String],
    explanation_names: &[String],
) -> Result<CodecTable> {
    if instances.is_empty() {
        return Err(TedError::NoInstances);
    }
    let mut pairs = Vec::new();
    for (index, inst) in instances.iter().enumerate() {
        let e = inst
            .explanation
            .ok_or(TedError::MissingExplanation { index })?;
        if inst.label.index() >= label_names.len() || e.index() >= explanation_names.len() {
            return Err(TedError::Format(format!(
                "instance {index} uses an id without a display name"
            )));
        }
        pairs.push((inst.label, e));
    }
    Ok(CodecTable::from_pair_sequence(
        label_names.to_vec(),
        explanation_names.to_vec(),
        pairs,
    ))
}

impl CodecTable {
    fn from_pair_sequence(
        label_names: Vec<String>,
        explanation_names: Vec<String>,
        pairs: impl IntoIterator<Item = (LabelId, ExplanationId)>,
    ) -> Self {
        let mut composite_to_pair = Vec::new();
        let mut pair_to_composite = HashMap::new();
        for pair in pairs {
            pair_to_composite.entry(pair).or_insert_with(|| {
                composite_to_pair.push(pair);
                CompositeId(composite_to_pair.len() as u32 - 1)
            });
        }
        let e_to_y = functional_map(&composite_to_pair);
        Self {
            label_names,
            explanation_names,
            composite_to_pair,
            pair_to_composite,
            e_to_y,
        }
    }

    pub fn encode(&self, label: LabelId, explanation: ExplanationId) -> Result<CompositeId> {
        self.pair_to_composite
            .get(&(label, explanation))
            .copied()
            .ok_or_else(|| TedError::UnknownPair {
                label: self.label_name(label),
                explanation: self.explanation_name(explanation),
            })
    }

    /// Like [`encode`](Self::encode) but `None` for pairs outside the codec.
    pub fn try_encode(&self, label: LabelId, explanation: ExplanationId) -> Option<CompositeId> {
        self.pair_to_composite.get(&(label, explanation)).copied()
    }

    pub fn decode(&self, composite: CompositeId) -> Result<(LabelId, ExplanationId)> {
        self.composite_to_pair
            .get(composite.index())
            .copied()
            .ok_or(TedError::CompositeOutOfRange {
                id: composite.index(),
                len: self.composite_to_pair.len(),
            })
    }

    pub fn derive_label(&self, explanation: ExplanationId) -> Result<LabelId> {
        let map = self.e_to_y.as_ref().ok_or(TedError::NotFunctional)?;
        map.get(&explanation)
            .copied()
            .ok_or_else(|| TedError::UnknownExplanation(self.explanation_name(explanation)))
    }

    pub fn len(&self) -> usize {
        self.composite_to_pair.len()
    }

    pub fn is_empty(&self) -> bool {
        self.composite_to_pair.is_empty()
    }

    pub fn pairs(&self) -> &[(LabelId, ExplanationId)] {
        &self.composite_to_pair
    }

    pub fn e_to_y(&self) -> Option<&BTreeMap<ExplanationId, LabelId>> {
        self.e_to_y.as_ref()
    }

    pub fn is_functional(&self) -> bool {
        self.e_to_y.is_some()
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn explanation_names(&self) -> &[String] {
        &self.explanation_names
    }

    pub fn label_name(&self, label: LabelId) -> String {
        self.label_names
            .get(label.index())
            .cloned()
            .unwrap_or_else(|| format!("#{}", label.0))
    }

    pub fn explanation_name(&self, explanation: ExplanationId) -> String {
        self.explanation_names
            .get(explanation.index())
            .cloned()
            .unwrap_or_else(|| format!("#{}", explanation.0))
    }

    pub fn to_sidecar(&self) -> CodecSidecar {
        CodecSidecar {
            labels: self.label_names.clone(),
            explanations: self.explanation_names.clone(),
            pairs: self
                .composite_to_pair
                .iter()
                .enumerate()
                .map(|(c, (y, e))| [y.0, e.0, c as u32])
                .collect(),
        }
    }

    pub fn from_sidecar(sidecar: CodecSidecar) -> Result<Self> {
        let mut slots: Vec<Option<(LabelId, ExplanationId)>> = vec![None; sidecar.pairs.len()];
        for &[y, e, c] in &sidecar.pairs {
            if y as usize >= sidecar.labels.len() || e as usize >= sidecar.explanations.len() {
                return Err(TedError::Format(format!(
                    "pair [{y},{e},{c}] names an unknown id"
                )));
            }
            let slot = slots
                .get_mut(c as usize)
                .ok_or_else(|| TedError::Format(format!("composite id {c} is not dense")))?;
            if slot.replace((LabelId(y), ExplanationId(e))).is_some() {
                return Err(TedError::Format(format!("composite id {c} repeated")));
            }
        }
        let pairs: Vec<_> = slots
            .into_iter()
            .map(|s| s.expect("all slots filled"))
            .collect();
        let table = Self::from_pair_sequence(sidecar.labels, sidecar.explanations, pairs.clone());
        if table.composite_to_pair != pairs {
            return Err(TedError::Format(
                "pair listed twice under different ids".into(),
            ));
        }
        Ok(table)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_sidecar()).expect("sidecar serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Self::from_sidecar(serde_json::from_str(json)?)
    }
}

fn functional_map(pairs: &[(LabelId, ExplanationId)]) -> Option<BTreeMap<ExplanationId, LabelId>> {
    let mut map = BTreeMap::new();
    for &(y, e) in pairs {
        if let Some(prev) = map.insert(e, y) {
            if prev != y {
                return None;
            }
        }
    }
    Some(map)
}

/// JSON form of a codec: `{"labels":[..],"explanations":[..],"pairs":[[y,e,c],..]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodecSidecar {
    pub labels: Vec<String>,
    pub explanations: Vec<String>,
    pub pairs: Vec<[u32; 3]>,
}

impl Serialize for CodecTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_sidecar().serialize(s)
    }
}

impl<'de> Deserialize<'de> for CodecTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let sidecar = CodecSidecar::deserialize(d)?;
        CodecTable::from_sidecar(sidecar).map_err(serde::de::Error::custom)
    }
}

/// Dense class ids for labels alone, used by baseline runs. Classes are
/// assigned in first-occurrence order, mirroring [`CodecTable`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelIndex {
    label_names: Vec<String>,
    classes: Vec<LabelId>,
}

impl LabelIndex {
    pub fn fit(instances: &[LabeledInstance], label_names: &[String]) -> Result<Self> {
        if instances.is_empty() {
            return Err(TedError::NoInstances);
        }
        let mut classes: Vec<LabelId> = Vec::new();
        for inst in instances {
            if !classes.contains(&inst.label) {
                classes.push(inst.label);
            }
        }
        Ok(Self {
            label_names: label_names.to_vec(),
            classes,
        })
    }

    pub fn class_of(&self, label: LabelId) -> Option<usize> {
        self.classes.iter().position(|&l| l == label)
    }

    pub fn label_of(&self, class: usize) -> Option<LabelId> {
        self.classes.get(class).copied()
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    fn inst(y: u32, e: u32) -> LabeledInstance {
        LabeledInstance::new(vec![0.0], LabelId(y), Some(ExplanationId(e)))
    }

    /// Labels A,B,C = 0,1,2 and explanations E1..E5 = 1..5.
    fn figure_codec() -> CodecTable {
        let data = [
            inst(0, 1),
            inst(0, 1),
            inst(0, 2),
            inst(1, 3),
            inst(1, 4),
            inst(2, 5),
        ];
        fit_codec(&data, &["A".into(), "B".into(), "C".into()], &names("E", 6)).unwrap()
    }

    #[test]
    fn five_pairs_give_five_composites() {
        let codec = figure_codec();
        assert_eq!(codec.len(), 5);
        assert_eq!(
            codec.encode(LabelId(0), ExplanationId(1)).unwrap(),
            CompositeId(0)
        );
        assert_eq!(
            codec.encode(LabelId(0), ExplanationId(2)).unwrap(),
            CompositeId(1)
        );
        assert_eq!(
            codec.decode(CompositeId(2)).unwrap(),
            (LabelId(1), ExplanationId(3))
        );
        assert!(codec.is_functional());
    }

    #[test]
    fn repeated_single_pair_is_one_composite() {
        let data = vec![inst(0, 1); 100];
        let codec = fit_codec(&data, &names("Y", 1), &names("E", 2)).unwrap();
        assert_eq!(codec.len(), 1);
        assert_eq!(codec.derive_label(ExplanationId(1)).unwrap(), LabelId(0));
    }

    #[test]
    fn unknown_pair_names_both_components() {
        let err = figure_codec()
            .encode(LabelId(2), ExplanationId(1))
            .unwrap_err();
        assert_eq!(err.to_string(), "unknown (label, explanation) pair (C, E1)");
    }

    #[test]
    fn decode_boundary() {
        let codec = figure_codec();
        assert!(codec.decode(CompositeId(4)).is_ok());
        assert!(matches!(
            codec.decode(CompositeId(5)),
            Err(TedError::CompositeOutOfRange { id: 5, len: 5 })
        ));
    }

    #[test]
    fn empty_and_missing_explanations_are_errors() {
        assert!(matches!(
            fit_codec(&[], &[], &[]),
            Err(TedError::NoInstances)
        ));
        let data = [
            inst(0, 0),
            LabeledInstance::new(vec![0.0], LabelId(0), None),
        ];
        assert!(matches!(
            fit_codec(&data, &names("Y", 1), &names("E", 1)),
            Err(TedError::MissingExplanation { index: 1 })
        ));
    }

    #[test]
    fn shared_explanation_is_not_functional() {
        let data = [inst(0, 0), inst(1, 0)];
        let codec = fit_codec(&data, &names("Y", 2), &names("E", 1)).unwrap();
        assert!(!codec.is_functional());
        assert_eq!(
            codec
                .derive_label(ExplanationId(0))
                .unwrap_err()
                .to_string(),
            "explanations do not determine labels"
        );
    }

    #[test]
    fn sidecar_layout() {
        let codec = figure_codec();
        let json = codec.to_json();
        assert!(json.starts_with(r#"{"labels":["A","B","C"],"explanations":["E0","#));
        assert!(json.ends_with(r#""pairs":[[0,1,0],[0,2,1],[1,3,2],[1,4,3],[2,5,4]]}"#));
        assert_eq!(CodecTable::from_json(&json).unwrap(), codec);
    }

    #[test]
    fn sidecar_rejects_gaps_and_duplicates() {
        let bad = r#"{"labels":["A"],"explanations":["E"],"pairs":[[0,0,1]]}"#;
        assert!(CodecTable::from_json(bad).is_err());
        let dup = r#"{"labels":["A"],"explanations":["E"],"pairs":[[0,0,0],[0,0,1]]}"#;
        assert!(CodecTable::from_json(dup).is_err());
    }

    #[test]
    fn label_index_first_occurrence() {
        let data = [inst(2, 0), inst(0, 0), inst(2, 0)];
        let index = LabelIndex::fit(&data, &names("Y", 3)).unwrap();
        assert_eq!(index.len(), 2);
        assert_eq!(index.class_of(LabelId(2)), Some(0));
        assert_eq!(index.class_of(LabelId(1)), None);
        assert_eq!(index.label_of(1), Some(LabelId(0)));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn bijective_bounded_and_deterministic(
                raw in proptest::collection::vec((0u32..4, 0u32..6), 1..80)
            ) {
                let data: Vec<_> = raw.iter().map(|&(y, e)| inst(y, e)).collect();
                let codec = fit_codec(&data, &names("Y", 4), &names("E", 6)).unwrap();
                let distinct: std::collections::HashSet<_> = raw.iter().collect();
                prop_assert_eq!(codec.len(), distinct.len());
                prop_assert!(codec.len() <= 4 * 6);
                for c in 0..codec.len() {
                    let (y, e) = codec.decode(CompositeId(c as u32)).unwrap();
                    prop_assert_eq!(codec.encode(y, e).unwrap(), CompositeId(c as u32));
                }
                for i in &data {
                    let c = codec.encode(i.label, i.explanation.unwrap()).unwrap();
                    prop_assert_eq!(codec.decode(c).unwrap().0, i.label);
                }
                let functional = raw.iter().all(|&(y, e)| raw.iter().all(|&(y2, e2)| e != e2 || y == y2));
                prop_assert_eq!(codec.is_functional(), functional);
                let again = fit_codec(&data, &names("Y", 4), &names("E", 6)).unwrap();
                prop_assert_eq!(&again, &codec);
                prop_assert_eq!(CodecTable::from_json(&codec.to_json()).unwrap(), codec);
            }
        }
    }
}
