//! Objective normalization and exact bi-objective hypervolume with
//! reference point (1, 1).

use crate::error::{Error, Result};
use crate::moea;

/// Objective pairs scaled so ideal maps to (0,0) and Nadir to (1,1),
/// reduced to the non-dominated subset.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedFront {
    pub points: Vec<[f64; 2]>,
    /// true for points that reached the unit box boundary by clipping
    pub clipped: Vec<bool>,
}

/// Scale points into the unit box. Values at or beyond the Nadir are
/// clipped to the boundary and flagged; only the trade-off region between
/// ideal and Nadir contributes to hypervolume. Non-dominated filtering is
/// applied after scaling.
pub fn normalize(points: &[[f64; 2]], ideal: [f64; 2], nadir: [f64; 2]) -> Result<NormalizedFront> {
    if !(nadir[0] > ideal[0]) || !(nadir[1] > ideal[1]) {
        return Err(Error::DegenerateAnchors);
    }
    let mut scaled = Vec::with_capacity(points.len());
    let mut clipped = Vec::with_capacity(points.len());
    for p in points {
        let mut g = [
            (p[0] - ideal[0]) / (nadir[0] - ideal[0]),
            (p[1] - ideal[1]) / (nadir[1] - ideal[1]),
        ];
        let clip = g[0] >= 1.0 || g[1] >= 1.0;
        for v in &mut g {
            *v = v.clamp(0.0, 1.0);
        }
        scaled.push(g);
        clipped.push(clip);
    }
    let keep = moea::nondominated_indices(&scaled);
    Ok(NormalizedFront {
        points: keep.iter().map(|&i| scaled[i]).collect(),
        clipped: keep.iter().map(|&i| clipped[i]).collect(),
    })
}

// Compensated accumulator (double-double). The hypervolume of a growing
// archive is mathematically non-decreasing; accumulating rectangle areas
// exactly keeps the recomputed per-evaluation sequence monotone even when
// late points contribute areas far below one ulp of the total.
#[derive(Clone, Copy, Default)]
struct Accumulator {
    hi: f64,
    lo: f64,
}

impl Accumulator {
    fn add(&mut self, x: f64) {
        let s = self.hi + x;
        let bb = s - self.hi;
        let err = (self.hi - (s - bb)) + (x - bb);
        self.hi = s;
        self.lo += err;
    }

    fn add_product(&mut self, a: f64, b: f64) {
        let p = a * b;
        let err = a.mul_add(b, -p);
        self.add(p);
        self.lo += err;
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// Exact sweep: sort the non-dominated points by the first coordinate and
/// sum the rectangles they dominate up to the reference point (1, 1).
pub fn hypervolume_2d(front: &NormalizedFront) -> f64 {
    if front.points.is_empty() {
        return 0.0;
    }
    let mut pts = front.points.clone();
    pts.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap().then(a[1].partial_cmp(&b[1]).unwrap()));
    let mut acc = Accumulator::default();
    let mut prev_g2 = 1.0f64;
    for p in &pts {
        if p[1] < prev_g2 {
            acc.add_product(1.0 - p[0], prev_g2 - p[1]);
            prev_g2 = p[1];
        }
    }
    acc.value()
}

/// Normalize and measure in one step.
pub fn normalized_hypervolume(points: &[[f64; 2]], ideal: [f64; 2], nadir: [f64; 2]) -> Result<f64> {
    Ok(hypervolume_2d(&normalize(points, ideal, nadir)?))
}
