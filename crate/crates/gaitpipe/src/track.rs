use crate::attributes::AttributeVector;
use crate::detect::{Bbox, Detection, FrameGroup};

/// One tracked person: detections with strictly increasing frame indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Tracklet {
    pub id: u64,
    pub fps: f64,
    pub detections: Vec<Detection>,
    pub attributes: Option<AttributeVector>,
}

struct TrackState {
    id: u64,
    last_bbox: Bbox,
    misses: u64,
    detections: Vec<Detection>,
}

/// Greedy IoU association over the full frame range.
///
/// Per frame, candidate (track, detection) pairs with IoU at or above
/// `iou_threshold` are accepted in descending IoU order (ties broken by
/// track id, then detection position, so runs are deterministic). A track
/// coasts with its last bbox through up to `max_age` consecutive frames
/// without a match — frames with no detections at all age tracks too — and
/// closes after that. Ids count up from 0 in creation order.
pub fn track(
    frames: &[FrameGroup],
    iou_threshold: f64,
    max_age: u64,
    fps: f64,
) -> Vec<Tracklet> {
    let mut active: Vec<TrackState> = Vec::new();
    let mut finished: Vec<TrackState> = Vec::new();
    let mut next_id = 0u64;

    let Some(first) = frames.first().map(|g| g.frame_index) else {
        return Vec::new();
    };
    let last = frames.last().map(|g| g.frame_index).unwrap_or(first);
    let mut groups = frames.iter().peekable();

    for frame in first..=last {
        let detections: &[Detection] = match groups.peek() {
            Some(g) if g.frame_index == frame => &groups.next().unwrap().detections,
            _ => &[],
        };

        let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
        for (ti, t) in active.iter().enumerate() {
            for (di, d) in detections.iter().enumerate() {
                let iou = t.last_bbox.iou(&d.bbox);
                if iou >= iou_threshold {
                    pairs.push((ti, di, iou));
                }
            }
        }
        pairs.sort_by(|a, b| {
            b.2.partial_cmp(&a.2)
                .unwrap()
                .then(active[a.0].id.cmp(&active[b.0].id))
                .then(a.1.cmp(&b.1))
        });

        let mut track_matched = vec![false; active.len()];
        let mut det_matched = vec![false; detections.len()];
        for (ti, di, _) in pairs {
            if track_matched[ti] || det_matched[di] {
                continue;
            }
            track_matched[ti] = true;
            det_matched[di] = true;
            let t = &mut active[ti];
            t.last_bbox = detections[di].bbox;
            t.misses = 0;
            t.detections.push(detections[di].clone());
        }

        for (di, d) in detections.iter().enumerate() {
            if !det_matched[di] {
                active.push(TrackState {
                    id: next_id,
                    last_bbox: d.bbox,
                    misses: 0,
                    detections: vec![d.clone()],
                });
                next_id += 1;
            }
        }

        let mut still_active = Vec::with_capacity(active.len());
        for (ti, mut t) in active.into_iter().enumerate() {
            let matched = track_matched.get(ti).copied().unwrap_or(true);
            if !matched {
                t.misses += 1;
            }
            if t.misses > max_age {
                finished.push(t);
            } else {
                still_active.push(t);
            }
        }
        active = still_active;
    }

    finished.extend(active);
    finished.sort_by_key(|t| t.id);
    finished
        .into_iter()
        .map(|t| Tracklet { id: t.id, fps, detections: t.detections, attributes: None })
        .collect()
}
