//! Binary masks, triangle rasterization and silhouette boundaries.
//!
//! Pixel `(x, y)` covers `[x, x+1) x [y, y+1)`; its center is at
//! `(x + 0.5, y + 0.5)`.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Result};
use crate::math::Vec2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        BinaryMask { width, height, data: alloc::vec![false; width * height] }
    }

    pub fn from_data(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(invalid(alloc::format!(
                "{} mask values for a {width}x{height} image",
                data.len()
            )));
        }
        Ok(BinaryMask { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut m = BinaryMask::new(width, height);
        for y in 0..height {
            for x in 0..width {
                m.data[y * width + x] = f(x, y);
            }
        }
        m
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        x < self.width && y < self.height && self.data[y * self.width + x]
    }

    /// Like `get` but out-of-image coordinates read as unset.
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && self.get(x as usize, y as usize)
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        if x < self.width && y < self.height {
            self.data[y * self.width + x] = value;
        }
    }

    /// Whether the pixel containing `p` is set.
    pub fn covers(&self, p: &Vec2) -> bool {
        p.x.is_finite() && p.y.is_finite() && self.get_signed(p.x.floor() as i64, p.y.floor() as i64)
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    /// Mean of the set pixel centers.
    pub fn centroid(&self) -> Option<Vec2> {
        let mut sum = Vec2::zeros();
        let mut n = 0usize;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.data[y * self.width + x] {
                    sum += Vec2::new(x as f64 + 0.5, y as f64 + 0.5);
                    n += 1;
                }
            }
        }
        (n > 0).then(|| sum / n as f64)
    }

    /// Pixel-edge bounds `(min, max)` of the set pixels.
    pub fn bounding_box(&self) -> Option<(Vec2, Vec2)> {
        let mut lo = (usize::MAX, usize::MAX);
        let mut hi = (0usize, 0usize);
        let mut any = false;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.data[y * self.width + x] {
                    any = true;
                    lo = (lo.0.min(x), lo.1.min(y));
                    hi = (hi.0.max(x + 1), hi.1.max(y + 1));
                }
            }
        }
        any.then(|| (Vec2::new(lo.0 as f64, lo.1 as f64), Vec2::new(hi.0 as f64, hi.1 as f64)))
    }

    /// Intersection over union; zero when both masks are empty or the
    /// sizes differ.
    pub fn iou(&self, other: &BinaryMask) -> f64 {
        if self.width != other.width || self.height != other.height {
            return 0.0;
        }
        let (mut inter, mut union) = (0usize, 0usize);
        for (a, b) in self.data.iter().zip(&other.data) {
            inter += (*a && *b) as usize;
            union += (*a || *b) as usize;
        }
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// Copy moved by whole pixels; pixels shifted out are lost.
    pub fn shifted(&self, dx: i64, dy: i64) -> BinaryMask {
        BinaryMask::from_fn(self.width, self.height, |x, y| self.get_signed(x as i64 - dx, y as i64 - dy))
    }

    /// Midpoints of the pixel edges separating set from unset pixels.
    /// Edges on the image border are not part of the silhouette boundary.
    pub fn boundary_points(&self) -> Vec<Vec2> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if !self.data[y * self.width + x] {
                    continue;
                }
                let (xi, yi) = (x as i64, y as i64);
                let (fx, fy) = (x as f64, y as f64);
                if x > 0 && !self.get_signed(xi - 1, yi) {
                    out.push(Vec2::new(fx, fy + 0.5));
                }
                if x + 1 < self.width && !self.get_signed(xi + 1, yi) {
                    out.push(Vec2::new(fx + 1.0, fy + 0.5));
                }
                if y > 0 && !self.get_signed(xi, yi - 1) {
                    out.push(Vec2::new(fx + 0.5, fy));
                }
                if y + 1 < self.height && !self.get_signed(xi, yi + 1) {
                    out.push(Vec2::new(fx + 0.5, fy + 1.0));
                }
            }
        }
        out
    }

    /// Whether the 3x3 neighborhood of the pixel containing `p` mixes set
    /// and unset pixels.
    pub fn near_boundary(&self, p: &Vec2) -> bool {
        if !(p.x.is_finite() && p.y.is_finite()) {
            return false;
        }
        let (cx, cy) = (p.x.floor() as i64, p.y.floor() as i64);
        let (mut set, mut unset) = (false, false);
        for dy in -1..=1 {
            for dx in -1..=1 {
                if self.get_signed(cx + dx, cy + dy) {
                    set = true;
                } else {
                    unset = true;
                }
            }
        }
        set && unset
    }
}

/// Rasterizes triangles given by 2D vertex positions; a pixel is set when
/// its center lies inside or on the edge of any triangle.
pub fn rasterize(points: &[Vec2], faces: &[[u32; 3]], width: usize, height: usize) -> BinaryMask {
    let mut mask = BinaryMask::new(width, height);
    for f in faces {
        let [a, b, c] = f.map(|i| points[i as usize]);
        if ![a, b, c].iter().all(|p| p.x.is_finite() && p.y.is_finite()) {
            continue;
        }
        let area = (b - a).perp(&(c - a));
        if area == 0.0 {
            continue;
        }
        let x0 = (a.x.min(b.x).min(c.x) - 0.5).ceil().max(0.0);
        let x1 = (a.x.max(b.x).max(c.x) - 0.5).floor().min(width as f64 - 1.0);
        let y0 = (a.y.min(b.y).min(c.y) - 0.5).ceil().max(0.0);
        let y1 = (a.y.max(b.y).max(c.y) - 0.5).floor().min(height as f64 - 1.0);
        if x0 > x1 || y0 > y1 {
            continue;
        }
        let s = area.signum();
        for y in y0 as usize..=y1 as usize {
            for x in x0 as usize..=x1 as usize {
                let p = Vec2::new(x as f64 + 0.5, y as f64 + 0.5);
                let w0 = (b - a).perp(&(p - a)) * s;
                let w1 = (c - b).perp(&(p - b)) * s;
                let w2 = (a - c).perp(&(p - c)) * s;
                if w0 >= 0.0 && w1 >= 0.0 && w2 >= 0.0 {
                    mask.set(x, y, true);
                }
            }
        }
    }
    mask
}
