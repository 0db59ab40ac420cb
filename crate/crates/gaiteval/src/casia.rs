use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::embedding::{Condition, LabeledEmbedding};
use crate::error::EvalError;
use crate::rank::rank1;

/// The eleven standard recording angles, in degrees.
pub const CASIA_ANGLES: [u16; 11] = [0, 18, 36, 54, 72, 90, 108, 126, 144, 162, 180];

/// Accuracy grid produced by [`casia_protocol`]: one row per walking
/// condition, one column per probe angle, plus per-condition means.
#[derive(Debug, Clone, PartialEq)]
pub struct CasiaTable {
    pub angles: Vec<u16>,
    pub rows: BTreeMap<Condition, Vec<f64>>,
    pub means: BTreeMap<Condition, f64>,
}

impl CasiaTable {
    pub fn accuracy(&self, condition: Condition, angle: u16) -> Option<f64> {
        let col = self.angles.iter().position(|&a| a == angle)?;
        Some(*self.rows.get(&condition)?.get(col)?)
    }

    /// Condition × angle grid with a trailing mean column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("condition");
        for a in &self.angles {
            let _ = write!(out, ",{a}");
        }
        out.push_str(",mean\n");
        for condition in Condition::ALL {
            let Some(row) = self.rows.get(&condition) else { continue };
            let _ = write!(out, "{condition}");
            for acc in row {
                let _ = write!(out, ",{acc:.4}");
            }
            let _ = writeln!(out, ",{:.4}", self.means[&condition]);
        }
        out
    }
}

/// The gallery for probe angle `probe_angle`: normal-walk embeddings from
/// every other angle.
pub fn nm_gallery(
    embeddings: &[LabeledEmbedding],
    probe_angle: u16,
) -> Vec<&LabeledEmbedding> {
    embeddings
        .iter()
        .filter(|e| e.condition == Some(Condition::Nm) && e.viewpoint != Some(probe_angle))
        .collect()
}

/// Cross-view recognition grid: for every probe angle θ and condition, the
/// gallery is all normal-walk embeddings from angles other than θ and the
/// probes are that condition's embeddings at θ.
///
/// Every embedding needs viewpoint and condition tags. The normal-walk
/// gallery must cover every (identity, angle) cell; every condition present
/// anywhere must have probes at every angle. Missing cells are reported
/// together in one error.
pub fn casia_protocol(embeddings: &[LabeledEmbedding]) -> Result<CasiaTable, EvalError> {
    if embeddings.is_empty() {
        return Err(EvalError::EmptyInput { what: "protocol embedding set" });
    }
    for e in embeddings {
        if e.viewpoint.is_none() {
            return Err(EvalError::MissingTag { what: "viewpoint", identity: e.identity });
        }
        if e.condition.is_none() {
            return Err(EvalError::MissingTag { what: "condition", identity: e.identity });
        }
    }

    let angles: Vec<u16> = {
        let set: BTreeSet<u16> = embeddings.iter().filter_map(|e| e.viewpoint).collect();
        set.into_iter().collect()
    };
    let ids: BTreeSet<u64> = embeddings.iter().map(|e| e.identity).collect();
    let conditions: BTreeSet<Condition> =
        embeddings.iter().filter_map(|e| e.condition).collect();

    let mut missing = Vec::new();
    if angles.len() < 2 {
        return Err(EvalError::MissingCells {
            cells: vec!["a second angle (single-angle data has empty galleries)".to_string()],
        });
    }
    for &id in &ids {
        for &angle in &angles {
            let covered = embeddings.iter().any(|e| {
                e.identity == id
                    && e.viewpoint == Some(angle)
                    && e.condition == Some(Condition::Nm)
            });
            if !covered {
                missing.push(format!("NM gallery for id {id} at angle {angle}"));
            }
        }
    }
    for &condition in &conditions {
        for &angle in &angles {
            let any = embeddings
                .iter()
                .any(|e| e.condition == Some(condition) && e.viewpoint == Some(angle));
            if !any {
                missing.push(format!("{condition} probes at angle {angle}"));
            }
        }
    }
    if !missing.is_empty() {
        return Err(EvalError::MissingCells { cells: missing });
    }

    let mut rows: BTreeMap<Condition, Vec<f64>> = BTreeMap::new();
    for &condition in &conditions {
        let mut row = Vec::with_capacity(angles.len());
        for &angle in &angles {
            let gallery: Vec<LabeledEmbedding> =
                nm_gallery(embeddings, angle).into_iter().cloned().collect();
            assert!(
                gallery.iter().all(|e| e.viewpoint != Some(angle)),
                "gallery must exclude the probe angle"
            );
            let probes: Vec<LabeledEmbedding> = embeddings
                .iter()
                .filter(|e| e.condition == Some(condition) && e.viewpoint == Some(angle))
                .cloned()
                .collect();
            row.push(rank1(&gallery, &probes)?);
        }
        rows.insert(condition, row);
    }
    let means = rows
        .iter()
        .map(|(&c, row)| (c, row.iter().sum::<f64>() / row.len() as f64))
        .collect();
    Ok(CasiaTable { angles, rows, means })
}
