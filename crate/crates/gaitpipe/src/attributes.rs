use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use crate::error::PipeError;

/// Number of appearance attribute slots.
pub const NUM_ATTRIBUTES: usize = 42;

/// Slot index of the Female attribute, used by gender tasks downstream.
pub const GENDER_SLOT: usize = 0;

/// Soft appearance labels: 42 scores in [0, 1], ordered by the schema's
/// eight groups.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeVector {
    values: Vec<f64>,
}

impl AttributeVector {
    pub fn new(values: Vec<f64>) -> Result<Self, PipeError> {
        if values.len() != NUM_ATTRIBUTES {
            return Err(PipeError::WrongAttributeCount {
                expected: NUM_ATTRIBUTES,
                got: values.len(),
            });
        }
        for (i, &v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(PipeError::ScoreOutOfRange { name: format!("slot {i}"), value: v });
            }
        }
        Ok(AttributeVector { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// The three pedestrian-attribute networks whose outputs get coalesced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Provider {
    Pa100k,
    Peta,
    Rap,
}

impl Provider {
    pub const ALL: [Provider; 3] = [Provider::Pa100k, Provider::Peta, Provider::Rap];

    pub fn as_str(&self) -> &'static str {
        match self {
            Provider::Pa100k => "pa100k",
            Provider::Peta => "peta",
            Provider::Rap => "rap",
        }
    }

    pub fn parse(s: &str) -> Result<Self, PipeError> {
        match s {
            "pa100k" => Ok(Provider::Pa100k),
            "peta" => Ok(Provider::Peta),
            "rap" => Ok(Provider::Rap),
            other => Err(PipeError::UnknownProvider(other.to_string())),
        }
    }
}

impl fmt::Display for Provider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Raw named scores from each provider for one crop augmentation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProviderScores {
    maps: BTreeMap<Provider, BTreeMap<String, f64>>,
}

impl ProviderScores {
    pub fn insert(
        &mut self,
        provider: Provider,
        name: &str,
        score: f64,
    ) -> Result<(), PipeError> {
        if !(0.0..=1.0).contains(&score) {
            return Err(PipeError::ScoreOutOfRange {
                name: format!("{provider}:{name}"),
                value: score,
            });
        }
        self.maps.entry(provider).or_default().insert(name.to_string(), score);
        Ok(())
    }

    pub fn get(&self, provider: Provider, name: &str) -> Option<f64> {
        self.maps.get(&provider).and_then(|m| m.get(name)).copied()
    }

    fn names(&self) -> impl Iterator<Item = (Provider, &str)> {
        self.maps
            .iter()
            .flat_map(|(p, m)| m.keys().map(move |n| (*p, n.as_str())))
    }
}

/// One provider attribute feeding a slot; `inverted` means the slot
/// receives `1 - score`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotSource {
    pub provider: Provider,
    pub name: String,
    pub inverted: bool,
}

/// One of the 42 output attributes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slot {
    pub name: String,
    pub group: String,
    pub sources: Vec<SlotSource>,
}

/// The coalescing map from provider attribute names onto the 42-slot
/// schema, loaded from a TOML asset.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeSchema {
    groups: Vec<String>,
    slots: Vec<Slot>,
    dropped: BTreeMap<Provider, BTreeSet<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchema {
    version: u32,
    groups: Vec<String>,
    slots: Vec<RawSlot>,
    dropped: BTreeMap<String, Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSlot {
    name: String,
    group: String,
    sources: Vec<String>,
}

impl AttributeSchema {
    /// The schema shipped with this crate.
    pub fn builtin() -> Result<Self, PipeError> {
        Self::from_toml(include_str!("../assets/attribute_schema.toml"))
    }

    pub fn from_toml(text: &str) -> Result<Self, PipeError> {
        let raw: RawSchema =
            toml::from_str(text).map_err(|e| PipeError::BadSchema(e.to_string()))?;
        if raw.version != 1 {
            return Err(PipeError::BadSchema(format!("unsupported version {}", raw.version)));
        }

        let mut slots = Vec::with_capacity(raw.slots.len());
        for s in &raw.slots {
            if !raw.groups.contains(&s.group) {
                return Err(PipeError::BadSchema(format!(
                    "slot {} references undeclared group {}",
                    s.name, s.group
                )));
            }
            let sources = s
                .sources
                .iter()
                .map(|src| parse_source(src))
                .collect::<Result<Vec<_>, _>>()?;
            slots.push(Slot { name: s.name.clone(), group: s.group.clone(), sources });
        }

        let mut dropped: BTreeMap<Provider, BTreeSet<String>> = BTreeMap::new();
        for (provider, names) in &raw.dropped {
            let provider = Provider::parse(provider)?;
            dropped.insert(provider, names.iter().cloned().collect());
        }

        let schema = AttributeSchema { groups: raw.groups, slots, dropped };
        schema.validate()?;
        Ok(schema)
    }

    fn validate(&self) -> Result<(), PipeError> {
        if self.slots.len() != NUM_ATTRIBUTES {
            return Err(PipeError::BadSchema(format!(
                "schema declares {} slots, expected {NUM_ATTRIBUTES}",
                self.slots.len()
            )));
        }
        let mut seen_slots = BTreeSet::new();
        let mut seen_sources = BTreeSet::new();
        for slot in &self.slots {
            if !seen_slots.insert(slot.name.as_str()) {
                return Err(PipeError::BadSchema(format!("duplicate slot {}", slot.name)));
            }
            for src in &slot.sources {
                if !seen_sources.insert((src.provider, src.name.clone())) {
                    return Err(PipeError::BadSchema(format!(
                        "source {}:{} feeds more than one slot",
                        src.provider, src.name
                    )));
                }
            }
        }
        for (provider, names) in &self.dropped {
            for name in names {
                if seen_sources.contains(&(*provider, name.clone())) {
                    return Err(PipeError::BadSchema(format!(
                        "{provider}:{name} is both a slot source and dropped"
                    )));
                }
            }
        }
        // Slots must arrive grouped in the declared group order.
        let mut group_cursor = 0usize;
        for slot in &self.slots {
            let idx = self.groups.iter().position(|g| g == &slot.group).unwrap();
            if idx < group_cursor {
                return Err(PipeError::BadSchema(format!(
                    "slot {} appears after its group {} ended",
                    slot.name, slot.group
                )));
            }
            group_cursor = idx;
        }
        Ok(())
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn groups(&self) -> &[String] {
        &self.groups
    }

    /// Slot names in schema order.
    pub fn slot_names(&self) -> Vec<&str> {
        self.slots.iter().map(|s| s.name.as_str()).collect()
    }

    pub fn slot_index(&self, name: &str) -> Option<usize> {
        self.slots.iter().position(|s| s.name == name)
    }

    fn is_known(&self, provider: Provider, name: &str) -> bool {
        self.dropped.get(&provider).is_some_and(|set| set.contains(name))
            || self
                .slots
                .iter()
                .any(|s| s.sources.iter().any(|src| src.provider == provider && src.name == name))
    }
}

fn parse_source(text: &str) -> Result<SlotSource, PipeError> {
    let (provider, rest) = text
        .split_once(':')
        .ok_or_else(|| PipeError::BadSchema(format!("source {text:?} missing ':'")))?;
    let provider = Provider::parse(provider)?;
    let (inverted, name) = match rest.strip_prefix('!') {
        Some(name) => (true, name),
        None => (false, rest),
    };
    if name.is_empty() {
        return Err(PipeError::BadSchema(format!("source {text:?} has an empty name")));
    }
    Ok(SlotSource { provider, name: name.to_string(), inverted })
}

/// Maps raw provider scores onto the 42-slot schema.
///
/// Each slot takes the mean over its sources that are present in the maps
/// (inverted sources contribute `1 - score`); a slot with no present
/// source scores 0. Names absent from both the slot sources and the
/// dropped lists are rejected.
pub fn coalesce_schema(
    schema: &AttributeSchema,
    scores: &ProviderScores,
) -> Result<AttributeVector, PipeError> {
    let unknown: Vec<String> = scores
        .names()
        .filter(|(p, n)| !schema.is_known(*p, n))
        .map(|(p, n)| format!("{p}:{n}"))
        .collect();
    if !unknown.is_empty() {
        return Err(PipeError::UnknownAttributes(unknown));
    }

    let values = schema
        .slots
        .iter()
        .map(|slot| {
            let present: Vec<f64> = slot
                .sources
                .iter()
                .filter_map(|src| {
                    scores.get(src.provider, &src.name).map(|v| {
                        if src.inverted {
                            1.0 - v
                        } else {
                            v
                        }
                    })
                })
                .collect();
            if present.is_empty() {
                0.0
            } else {
                present.iter().sum::<f64>() / present.len() as f64
            }
        })
        .collect();
    AttributeVector::new(values)
}

/// Ensemble fusion across the crops of one tracklet.
///
/// Per crop, its augmented attribute vectors are averaged; crop means are
/// then combined with weights proportional to each crop's bbox area ratio.
pub fn fuse_attributes(
    crops: &[(f64, Vec<AttributeVector>)],
) -> Result<AttributeVector, PipeError> {
    if crops.is_empty() || crops.iter().any(|(_, augs)| augs.is_empty()) {
        return Err(PipeError::EmptyCrops);
    }
    let total_weight: f64 = crops.iter().map(|(w, _)| w).sum();
    if total_weight <= 0.0 {
        return Err(PipeError::ZeroTotalWeight);
    }

    let mut fused = vec![0.0; NUM_ATTRIBUTES];
    for (weight, augs) in crops {
        let mut crop_mean = vec![0.0; NUM_ATTRIBUTES];
        for v in augs {
            for (acc, x) in crop_mean.iter_mut().zip(v.values()) {
                *acc += x;
            }
        }
        for (slot, acc) in fused.iter_mut().zip(&crop_mean) {
            *slot += weight / total_weight * (acc / augs.len() as f64);
        }
    }
    // Weighted means of in-range values can drift past a bound by an ulp.
    for v in fused.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    AttributeVector::new(fused)
}

/// Scores parsed from a provider-score file, grouped as
/// tracklet → crop → augmentation → provider maps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    by_tracklet: BTreeMap<u64, BTreeMap<usize, BTreeMap<usize, ProviderScores>>>,
}

impl ScoreTable {
    pub fn tracklet_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.by_tracklet.keys().copied()
    }

    pub fn crops(&self, tracklet: u64) -> Option<&BTreeMap<usize, BTreeMap<usize, ProviderScores>>> {
        self.by_tracklet.get(&tracklet)
    }

    pub fn is_empty(&self) -> bool {
        self.by_tracklet.is_empty()
    }
}

/// Reads a provider-score file: one `tracklet crop aug provider attribute
/// score` record per line, `#` comments and blank lines ignored. Unlike
/// the detection stream, malformed score lines are hard errors.
pub fn read_scores(path: &Path) -> Result<ScoreTable, PipeError> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut table = ScoreTable::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(PipeError::BadScoresLine {
                line: line_no,
                reason: format!("expected 6 fields, found {}", fields.len()),
            });
        }
        let bad = |reason: String| PipeError::BadScoresLine { line: line_no, reason };
        let tracklet: u64 =
            fields[0].parse().map_err(|_| bad(format!("bad tracklet id {:?}", fields[0])))?;
        let crop: usize =
            fields[1].parse().map_err(|_| bad(format!("bad crop index {:?}", fields[1])))?;
        let aug: usize =
            fields[2].parse().map_err(|_| bad(format!("bad augmentation index {:?}", fields[2])))?;
        let provider = Provider::parse(fields[3])
            .map_err(|_| bad(format!("unknown provider {:?}", fields[3])))?;
        let name = fields[4];
        let score: f64 =
            fields[5].parse().map_err(|_| bad(format!("bad score {:?}", fields[5])))?;

        let scores = table
            .by_tracklet
            .entry(tracklet)
            .or_default()
            .entry(crop)
            .or_default()
            .entry(aug)
            .or_default();
        if scores.get(provider, name).is_some() {
            return Err(bad(format!("duplicate score for {provider}:{name}")));
        }
        scores.insert(provider, name, score).map_err(|e| bad(e.to_string()))?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn vector_of(value: f64) -> AttributeVector {
        AttributeVector::new(vec![value; NUM_ATTRIBUTES]).unwrap()
    }

    #[test]
    fn builtin_schema_loads_and_validates() {
        let schema = AttributeSchema::builtin().unwrap();
        assert_eq!(schema.slots().len(), NUM_ATTRIBUTES);
        assert_eq!(schema.groups().len(), 8);
        assert_eq!(schema.slot_index("Female"), Some(GENDER_SLOT));
        let group_sizes: Vec<usize> = schema
            .groups()
            .iter()
            .map(|g| schema.slots().iter().filter(|s| &s.group == g).count())
            .collect();
        assert_eq!(group_sizes, vec![1, 4, 3, 3, 6, 14, 5, 6]);
    }

    #[test]
    fn female_slot_averages_with_inversion() {
        let schema = AttributeSchema::builtin().unwrap();
        let mut scores = ProviderScores::default();
        scores.insert(Provider::Pa100k, "Female", 0.8).unwrap();
        scores.insert(Provider::Rap, "Female", 0.6).unwrap();
        scores.insert(Provider::Peta, "Male", 0.3).unwrap();
        let v = coalesce_schema(&schema, &scores).unwrap();
        assert_relative_eq!(v.values()[GENDER_SLOT], 0.7, max_relative = 1e-12);
    }

    #[test]
    fn dropped_attribute_contributes_nothing() {
        let schema = AttributeSchema::builtin().unwrap();
        let mut scores = ProviderScores::default();
        scores.insert(Provider::Peta, "Hat", 0.99).unwrap();
        let v = coalesce_schema(&schema, &scores).unwrap();
        assert!(v.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn unknown_attribute_is_listed_in_the_error() {
        let schema = AttributeSchema::builtin().unwrap();
        let mut scores = ProviderScores::default();
        scores.insert(Provider::Rap, "Wings", 0.5).unwrap();
        match coalesce_schema(&schema, &scores) {
            Err(PipeError::UnknownAttributes(names)) => {
                assert_eq!(names, vec!["rap:Wings".to_string()]);
            }
            other => panic!("expected unknown-attribute error, got {other:?}"),
        }
    }

    #[test]
    fn empty_maps_give_the_zero_vector() {
        let schema = AttributeSchema::builtin().unwrap();
        let v = coalesce_schema(&schema, &ProviderScores::default()).unwrap();
        assert!(v.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn all_zero_scores_expose_the_inversion() {
        // With every provider emitting 0, the only nonzero slot is Female,
        // whose inverted PETA Male source contributes 1.
        let schema = AttributeSchema::builtin().unwrap();
        let mut scores = ProviderScores::default();
        for slot in schema.slots() {
            for src in &slot.sources {
                scores.insert(src.provider, &src.name, 0.0).unwrap();
            }
        }
        let v = coalesce_schema(&schema, &scores).unwrap();
        assert_relative_eq!(v.values()[GENDER_SLOT], 1.0 / 3.0, max_relative = 1e-12);
        assert!(v.values()[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_crop_fusion_is_identity() {
        let v = vector_of(0.4);
        let fused = fuse_attributes(&[(0.3, vec![v.clone(), v.clone()])]).unwrap();
        for (a, b) in fused.values().iter().zip(v.values()) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn crops_are_weighted_by_area() {
        let fused =
            fuse_attributes(&[(0.2, vec![vector_of(0.9)]), (0.1, vec![vector_of(0.3)])]).unwrap();
        assert_relative_eq!(fused.values()[0], 0.7, max_relative = 1e-12);
    }

    #[test]
    fn equal_areas_reduce_to_plain_mean() {
        let fused =
            fuse_attributes(&[(0.4, vec![vector_of(0.2)]), (0.4, vec![vector_of(0.6)])]).unwrap();
        assert_relative_eq!(fused.values()[0], 0.4, max_relative = 1e-12);
    }

    #[test]
    fn fusion_rejects_bad_inputs() {
        assert!(matches!(fuse_attributes(&[]), Err(PipeError::EmptyCrops)));
        assert!(matches!(
            fuse_attributes(&[(0.5, vec![])]),
            Err(PipeError::EmptyCrops)
        ));
        assert!(matches!(
            fuse_attributes(&[(0.0, vec![vector_of(0.5)])]),
            Err(PipeError::ZeroTotalWeight)
        ));
    }

    #[test]
    fn out_of_range_scores_are_rejected() {
        let mut scores = ProviderScores::default();
        assert!(matches!(
            scores.insert(Provider::Rap, "Calling", 1.2),
            Err(PipeError::ScoreOutOfRange { .. })
        ));
        assert!(AttributeVector::new(vec![-0.1; NUM_ATTRIBUTES]).is_err());
        assert!(AttributeVector::new(vec![0.5; 41]).is_err());
    }

    #[test]
    fn score_file_round_trip_and_errors() {
        use std::io::Write;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# comment\n3 0 1 rap Calling 0.25\n3 0 1 peta Male 0.5").unwrap();
        let table = read_scores(f.path()).unwrap();
        let crops = table.crops(3).unwrap();
        let scores = &crops[&0][&1];
        assert_eq!(scores.get(Provider::Rap, "Calling"), Some(0.25));
        assert_eq!(scores.get(Provider::Peta, "Male"), Some(0.5));

        let mut dup = tempfile::NamedTempFile::new().unwrap();
        writeln!(dup, "3 0 1 rap Calling 0.25\n3 0 1 rap Calling 0.3").unwrap();
        assert!(matches!(
            read_scores(dup.path()),
            Err(PipeError::BadScoresLine { line: 2, .. })
        ));

        let mut short = tempfile::NamedTempFile::new().unwrap();
        writeln!(short, "3 0 1 rap Calling").unwrap();
        assert!(matches!(
            read_scores(short.path()),
            Err(PipeError::BadScoresLine { line: 1, .. })
        ));
    }
}
