//! Curve-space applications over a catalog of fitted glyphs: nearest-neighbor retrieval,
//! interpolation paths and style warping.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{vec2, Vec2};

/// Default warp bandwidth in em units.
pub const DEFAULT_BANDWIDTH: f64 = 0.15;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub font: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlyphRecord {
    pub id: String,
    pub class_label: String,
    /// Point coordinates in the class template's layout.
    pub params: Vec<f64>,
    /// Per-curve stroke half-widths, kept apart from the shape coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thickness: Option<Vec<f64>>,
    #[serde(default)]
    pub source: SourceMeta,
}

impl GlyphRecord {
    pub fn new(id: impl Into<String>, class_label: impl Into<String>, params: Vec<f64>) -> Self {
        GlyphRecord {
            id: id.into(),
            class_label: class_label.into(),
            params,
            thickness: None,
            source: SourceMeta::default(),
        }
    }

    fn metric_vector(&self, metric: Metric) -> Vec<f64> {
        let mut v = self.params.clone();
        if metric == Metric::ShapeAndStroke {
            v.extend(self.thickness.iter().flatten());
        }
        v
    }
}

/// Which coordinates enter the retrieval distance.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Point coordinates only.
    #[default]
    Shape,
    /// Point coordinates followed by thickness.
    ShapeAndStroke,
}

/// Records ordered by id, with a per-class index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Catalog {
    records: Vec<GlyphRecord>,
    by_class: BTreeMap<String, Vec<usize>>,
}

impl Catalog {
    pub fn new(mut records: Vec<GlyphRecord>) -> Result<Self> {
        records.sort_by(|a, b| a.id.cmp(&b.id));
        for w in records.windows(2) {
            if w[0].id == w[1].id {
                return Err(Error::DuplicateId(w[0].id.clone()));
            }
        }
        for r in &records {
            if r.params.iter().chain(r.thickness.iter().flatten()).any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("record {:?} has non-finite parameters", r.id)));
            }
        }
        let mut by_class: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            by_class.entry(r.class_label.clone()).or_default().push(i);
        }
        Ok(Catalog { records, by_class })
    }

    pub fn records(&self) -> &[GlyphRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&GlyphRecord> {
        self.records
            .binary_search_by(|r| r.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.records[i])
    }

    pub fn classes(&self) -> impl Iterator<Item = &str> {
        self.by_class.keys().map(String::as_str)
    }

    pub fn has_class(&self, class: &str) -> bool {
        self.by_class.contains_key(class)
    }

    /// Records of one class in id order.
    pub fn class_records(&self, class: &str) -> Vec<&GlyphRecord> {
        self.by_class
            .get(class)
            .map(|ix| ix.iter().map(|&i| &self.records[i]).collect())
            .unwrap_or_default()
    }

    /// Checks every record against its class's expected parameter count.
    pub fn validate_lengths(&self, expected: impl Fn(&str) -> Option<usize>) -> Result<()> {
        for r in &self.records {
            if let Some(n) = expected(&r.class_label) {
                if r.params.len() != n {
                    return Err(Error::LengthMismatch {
                        expected: n,
                        actual: r.params.len(),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Match<'a> {
    pub record: &'a GlyphRecord,
    pub distance: f64,
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// The `k` records closest to `query` (shape coordinates only), ascending, ties by id.
pub fn nearest<'a>(catalog: &'a Catalog, query: &[f64], k: usize, class_filter: Option<&str>) -> Result<Vec<Match<'a>>> {
    nearest_by(catalog, query, k, class_filter, Metric::Shape)
}

pub fn nearest_by<'a>(
    catalog: &'a Catalog,
    query: &[f64],
    k: usize,
    class_filter: Option<&str>,
    metric: Metric,
) -> Result<Vec<Match<'a>>> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let candidates: Vec<&GlyphRecord> = match class_filter {
        Some(c) => catalog.class_records(c),
        None => catalog.records.iter().collect(),
    };
    if candidates.is_empty() {
        return Err(Error::EmptyCatalog);
    }
    let mut matches: Vec<Match<'a>> = Vec::with_capacity(candidates.len());
    for r in &candidates {
        let v = r.metric_vector(metric);
        if v.len() == query.len() {
            matches.push(Match {
                record: r,
                distance: euclidean(&v, query),
            });
        }
    }
    if matches.is_empty() {
        return Err(Error::LengthMismatch {
            expected: candidates[0].metric_vector(metric).len(),
            actual: query.len(),
        });
    }
    matches.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then_with(|| a.record.id.cmp(&b.record.id))
    });
    matches.truncate(k);
    Ok(matches)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathStep<'a> {
    pub record: &'a GlyphRecord,
    /// Distance from the first interpolant that selected this record.
    pub distance: f64,
    /// Interpolation parameter of that interpolant in `[0, 1]`.
    pub t: f64,
    /// Number of consecutive interpolants that selected this record (> 1 when collapsed).
    pub repeats: usize,
}

/// Nearest records along the straight line from `start` to `end` at `steps` inclusive
/// interpolants, with consecutive duplicates collapsed.
pub fn interpolate_path<'a>(
    catalog: &'a Catalog,
    start: &[f64],
    end: &[f64],
    steps: usize,
    class_filter: Option<&str>,
) -> Result<Vec<PathStep<'a>>> {
    if start.len() != end.len() {
        return Err(Error::LengthMismatch {
            expected: start.len(),
            actual: end.len(),
        });
    }
    if steps < 2 {
        return Err(Error::invalid("an interpolation path needs at least 2 steps"));
    }
    let mut out: Vec<PathStep<'a>> = Vec::new();
    let mut q = vec![0.0; start.len()];
    for i in 0..steps {
        let t = i as f64 / (steps - 1) as f64;
        for (j, v) in q.iter_mut().enumerate() {
            *v = if i == steps - 1 { end[j] } else { start[j] + t * (end[j] - start[j]) };
        }
        let m = nearest(catalog, &q, 1, class_filter)?.remove(0);
        match out.last_mut() {
            Some(last) if last.record.id == m.record.id => last.repeats += 1,
            _ => out.push(PathStep {
                record: m.record,
                distance: m.distance,
                t,
                repeats: 1,
            }),
        }
    }
    Ok(out)
}

fn points(params: &[f64]) -> Result<Vec<Vec2<f64>>> {
    if params.len() % 2 != 0 {
        return Err(Error::invalid("parameter vectors hold (x, y) pairs"));
    }
    Ok(params.chunks(2).map(|p| vec2(p[0], p[1])).collect())
}

/// Moves every outline point by the Gaussian-weighted average of the control-point
/// translations from `source_params` to `target_params`.
pub fn warp_style(
    outline: &[Vec<Vec2<f64>>],
    source_params: &[f64],
    target_params: &[f64],
    bandwidth: f64,
) -> Result<Vec<Vec<Vec2<f64>>>> {
    if source_params.len() != target_params.len() {
        return Err(Error::LengthMismatch {
            expected: source_params.len(),
            actual: target_params.len(),
        });
    }
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(Error::invalid("bandwidth must be positive"));
    }
    let src = points(source_params)?;
    let dst = points(target_params)?;
    if src.is_empty() {
        return Err(Error::EmptyGeometry);
    }
    let moves: Vec<Vec2<f64>> = src.iter().zip(&dst).map(|(s, d)| *d - *s).collect();
    let inv = 1.0 / (2.0 * bandwidth * bandwidth);
    let warp = |p: Vec2<f64>| -> Vec2<f64> {
        let mut total = 0.0;
        let mut shift = Vec2::zero();
        for (c, m) in src.iter().zip(&moves) {
            let w = (-(p - *c).norm_sq() * inv).exp();
            total += w;
            shift += *m * w;
        }
        if total > f64::MIN_POSITIVE && total.is_finite() {
            p + shift / total
        } else {
            let nearest = src
                .iter()
                .enumerate()
                .min_by(|a, b| (p - *a.1).norm_sq().partial_cmp(&(p - *b.1).norm_sq()).unwrap_or(Ordering::Equal))
                .map(|(i, _)| i)
                .unwrap_or(0);
            p + moves[nearest]
        }
    };
    Ok(outline.iter().map(|lp| lp.iter().map(|&p| warp(p)).collect()).collect())
}
