use serde::{Deserialize, Serialize};

/// Axis-aligned box in 0-based pixel coordinates; `(x, y)` is the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn from_center(center: (f64, f64), w: f64, h: f64) -> Self {
        Self::new(center.0 - w / 2.0, center.1 - h / 2.0, w, h)
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn is_valid(&self) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && self.w.is_finite()
            && self.h.is_finite()
            && self.w > 0.0
            && self.h > 0.0
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Self::new(self.x + dx, self.y + dy, self.w, self.h)
    }

    /// Area of the intersection with `other` (0 when disjoint).
    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let ix = (self.x + self.w).min(other.x + other.w) - self.x.max(other.x);
        let iy = (self.y + self.h).min(other.y + other.h) - self.y.max(other.y);
        if ix <= 0.0 || iy <= 0.0 {
            0.0
        } else {
            ix * iy
        }
    }

    /// True when the box shares a region of positive area with a `width`×`height` frame.
    pub fn intersects_frame(&self, width: usize, height: usize) -> bool {
        let frame = BBox::new(0.0, 0.0, width as f64, height as f64);
        self.intersection_area(&frame) > 0.0
    }

    /// Shift the box so at least one pixel column and row stay inside the frame.
    pub fn clamp_to_frame(&self, width: usize, height: usize) -> Self {
        let x = self.x.clamp(1.0 - self.w, width as f64 - 1.0);
        let y = self.y.clamp(1.0 - self.h, height as f64 - 1.0);
        Self::new(x, y, self.w, self.h)
    }
}
