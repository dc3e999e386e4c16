//! Visibility windows and the channel characteristic map (CCM): the
//! verifier's slot-gridded reference trajectory of the expected features.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::{feature_vector, FeatureVector, LinkParams};
use crate::orbital::{eci_to_ecef, observe, propagate, GroundStation, KeplerianElements};

const SCAN_STEP_S: f64 = 1.0;
const REFINE_TOLERANCE_S: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityWindow {
    pub start: f64,
    pub end: f64,
    /// Mask elevation, rad.
    pub mask_elevation: f64,
}

impl VisibilityWindow {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t <= self.end
    }
}

fn elevation(elements: &KeplerianElements, gs: &GroundStation, t: f64) -> Result<f64> {
    Ok(observe(elements, gs, t)?.elevation)
}

/// Bisects for the mask crossing between `visible_t` (above mask) and
/// `hidden_t` (below mask).
fn refine_crossing(
    elements: &KeplerianElements,
    gs: &GroundStation,
    mask: f64,
    mut visible_t: f64,
    mut hidden_t: f64,
) -> Result<f64> {
    while (visible_t - hidden_t).abs() > REFINE_TOLERANCE_S {
        let mid = 0.5 * (visible_t + hidden_t);
        if elevation(elements, gs, mid)? >= mask {
            visible_t = mid;
        } else {
            hidden_t = mid;
        }
    }
    Ok(visible_t)
}

/// Maximal intervals in `[search_start, search_end]` with elevation ≥ `mask`.
///
/// Elevation is scanned at 1 s and each crossing is bisected to 10 ms. The
/// returned endpoints are the visible side of each crossing, so the
/// elevation there is at or just above the mask. Intervals that touch the
/// search bounds are clipped to them.
pub fn visibility_window(
    elements: &KeplerianElements,
    gs: &GroundStation,
    search_start: f64,
    search_end: f64,
    mask: f64,
) -> Result<Vec<VisibilityWindow>> {
    if !(search_end > search_start) {
        return Err(Error::config(
            "search_end",
            format!("must exceed search_start ({search_start}), got {search_end}"),
        ));
    }
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&mask) {
        return Err(Error::config(
            "mask_elevation",
            format!("must lie in [0, π/2), got {mask}"),
        ));
    }

    let steps = ((search_end - search_start) / SCAN_STEP_S).ceil() as usize;
    let sample_time = |k: usize| (search_start + k as f64 * SCAN_STEP_S).min(search_end);

    let mut windows = Vec::new();
    let mut prev_t = search_start;
    let mut prev_visible = elevation(elements, gs, prev_t)? >= mask;
    let mut open = prev_visible.then_some(search_start);

    for k in 1..=steps {
        let t = sample_time(k);
        let visible = elevation(elements, gs, t)? >= mask;
        match (prev_visible, visible) {
            (false, true) => open = Some(refine_crossing(elements, gs, mask, t, prev_t)?),
            (true, false) => {
                let end = refine_crossing(elements, gs, mask, prev_t, t)?;
                if let Some(start) = open.take() {
                    if end > start {
                        windows.push(VisibilityWindow {
                            start,
                            end,
                            mask_elevation: mask,
                        });
                    }
                }
            }
            _ => {}
        }
        prev_t = t;
        prev_visible = visible;
    }
    if let Some(start) = open {
        if search_end > start {
            windows.push(VisibilityWindow {
                start,
                end: search_end,
                mask_elevation: mask,
            });
        }
    }
    Ok(windows)
}

/// The verifier's reference table: one expected [`FeatureVector`] per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Ccm {
    slot_times: Vec<f64>,
    reference: Vec<FeatureVector>,
    slot_duration: f64,
    window: VisibilityWindow,
    elements: KeplerianElements,
    station: GroundStation,
    link: LinkParams,
}

fn reference_feature(
    elements: &KeplerianElements,
    gs: &GroundStation,
    link: &LinkParams,
    t: f64,
) -> Result<FeatureVector> {
    feature_vector(&eci_to_ecef(&propagate(elements, t)?), gs, link)
}

/// Grids `window` into slots of `slot_duration` starting at `window.start`
/// and evaluates the claimed orbit's features at each slot.
pub fn build_ccm(
    elements: &KeplerianElements,
    gs: &GroundStation,
    window: &VisibilityWindow,
    slot_duration: f64,
    link: &LinkParams,
) -> Result<Ccm> {
    if !(slot_duration > 0.0 && slot_duration.is_finite()) {
        return Err(Error::config(
            "slot_duration_s",
            format!("must be positive, got {slot_duration}"),
        ));
    }
    if !(window.duration() >= slot_duration) {
        return Err(Error::config(
            "slot_duration_s",
            format!(
                "visibility window of {:.3} s is shorter than one slot of {slot_duration} s",
                window.duration()
            ),
        ));
    }
    let slots = (window.duration() / slot_duration).floor() as usize + 1;
    let slot_times: Vec<f64> = (0..slots)
        .map(|k| window.start + k as f64 * slot_duration)
        .collect();
    let reference = slot_times
        .iter()
        .map(|&t| reference_feature(elements, gs, link, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(Ccm {
        slot_times,
        reference,
        slot_duration,
        window: *window,
        elements: *elements,
        station: *gs,
        link: *link,
    })
}

/// Stored reference at `slot_index`. Challenges are slot-aligned so there
/// is no interpolation.
pub fn lookup(ccm: &Ccm, slot_index: usize) -> Result<FeatureVector> {
    ccm.reference.get(slot_index).copied().ok_or(Error::Bounds {
        index: slot_index,
        len: ccm.len(),
    })
}

impl Ccm {
    pub fn len(&self) -> usize {
        self.slot_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slot_times.is_empty()
    }

    pub fn slot_times(&self) -> &[f64] {
        &self.slot_times
    }

    pub fn reference(&self) -> &[FeatureVector] {
        &self.reference
    }

    pub fn slot_duration(&self) -> f64 {
        self.slot_duration
    }

    pub fn window(&self) -> &VisibilityWindow {
        &self.window
    }

    pub fn elements(&self) -> &KeplerianElements {
        &self.elements
    }

    pub fn station(&self) -> &GroundStation {
        &self.station
    }

    pub fn link(&self) -> &LinkParams {
        &self.link
    }

    /// Slot whose time is nearest to `t`, or `None` outside the grid.
    pub fn slot_at(&self, t: f64) -> Option<usize> {
        let last = *self.slot_times.last()?;
        if t < self.window.start - 0.5 * self.slot_duration || t > last + 0.5 * self.slot_duration {
            return None;
        }
        let k = ((t - self.window.start) / self.slot_duration)
            .round()
            .max(0.0) as usize;
        Some(k.min(self.len() - 1))
    }

    pub fn to_document(&self) -> CcmDocument {
        CcmDocument {
            header: CcmHeader {
                elements: self.elements,
                station: self.station,
                link: self.link,
                slot_duration_s: self.slot_duration,
                window: self.window,
            },
            rows: self.reference.clone(),
        }
    }

    /// Rebuilds a table from an exported document, checking the grid invariants.
    pub fn from_document(doc: CcmDocument) -> Result<Ccm> {
        let CcmDocument { header, rows } = doc;
        header
            .elements
            .validate()
            .map_err(|e| Error::config("header.elements", e.to_string()))?;
        header
            .station
            .validate()
            .map_err(|e| Error::config("header.station", e.to_string()))?;
        header.link.validate()?;
        if rows.is_empty() {
            return Err(Error::config("rows", "a CCM needs at least one slot"));
        }
        let dt = header.slot_duration_s;
        if !(dt > 0.0) {
            return Err(Error::config("header.slot_duration_s", "must be positive"));
        }
        for (k, row) in rows.iter().enumerate() {
            let expected = header.window.start + k as f64 * dt;
            if (row.time_s - expected).abs() > 1e-9 * dt.max(expected.abs()) {
                return Err(Error::config(
                    format!("rows[{k}].time_s"),
                    format!("expected uniform grid time {expected}, got {}", row.time_s),
                ));
            }
        }
        Ok(Ccm {
            slot_times: rows.iter().map(|r| r.time_s).collect(),
            reference: rows,
            slot_duration: dt,
            window: header.window,
            elements: header.elements,
            station: header.station,
            link: header.link,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Ccm> {
        Ccm::from_document(serde_json::from_str(text)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Ccm> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ccm::from_json(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcmHeader {
    pub elements: KeplerianElements,
    pub station: GroundStation,
    pub link: LinkParams,
    pub slot_duration_s: f64,
    pub window: VisibilityWindow,
}

/// On-disk CCM: a header describing the claimed identity plus one row per slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcmDocument {
    pub header: CcmHeader,
    pub rows: Vec<FeatureVector>,
}
