//! Planar points, axis-aligned rectangles and discs.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point or displacement in the plane.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    #[inline]
    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(v: [f64; 2]) -> Self {
        Vec2::new(v[0], v[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

/// Axis-aligned rectangle `[min.x, max.x] x [min.y, max.y]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn new(origin: Vec2, extent: Vec2) -> Self {
        Rect {
            min: origin,
            max: origin + extent,
        }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Area of the intersection with another rectangle.
    pub fn overlap_area(&self, other: &Rect) -> f64 {
        let w = self.max.x.min(other.max.x) - self.min.x.max(other.min.x);
        let h = self.max.y.min(other.max.y) - self.min.y.max(other.min.y);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    pub fn intersect(&self, other: &Rect) -> Rect {
        let min = Vec2::new(self.min.x.max(other.min.x), self.min.y.max(other.min.y));
        let max = Vec2::new(
            self.max.x.min(other.max.x).max(min.x),
            self.max.y.min(other.max.y).max(min.y),
        );
        Rect { min, max }
    }

    /// Distance from `p` to the closest point of the rectangle.
    pub fn distance_to(&self, p: Vec2) -> f64 {
        let dx = (self.min.x - p.x).max(0.0).max(p.x - self.max.x);
        let dy = (self.min.y - p.y).max(0.0).max(p.y - self.max.y);
        dx.hypot(dy)
    }

    /// Distance from `p` to the farthest corner of the rectangle.
    pub fn farthest_distance(&self, p: Vec2) -> f64 {
        let dx = (p.x - self.min.x).abs().max((self.max.x - p.x).abs());
        let dy = (p.y - self.min.y).abs().max((self.max.y - p.y).abs());
        dx.hypot(dy)
    }
}

/// A subregion of the plane used for constraints, loads and material overrides.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Region {
    Box { origin: Vec2, extent: Vec2 },
    Disc { center: Vec2, radius: f64 },
}

impl Region {
    /// Box region; a zero extent is allowed and describes an empty set.
    pub fn boxed(origin: Vec2, extent: Vec2) -> Result<Self> {
        let region = Region::Box { origin, extent };
        region.validate()?;
        Ok(region)
    }

    pub fn disc(center: Vec2, radius: f64) -> Result<Self> {
        let region = Region::Disc { center, radius };
        region.validate()?;
        Ok(region)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Region::Box { origin, extent } => {
                if !(extent.x >= 0.0 && extent.y >= 0.0)
                    || !origin.x.is_finite()
                    || !origin.y.is_finite()
                {
                    return Err(Error::InvalidRegion(format!(
                        "box extent must be non-negative, got ({}, {})",
                        extent.x, extent.y
                    )));
                }
            }
            Region::Disc { center, radius } => {
                if !(radius > 0.0) || !center.x.is_finite() || !center.y.is_finite() {
                    return Err(Error::InvalidRegion(format!(
                        "disc radius must be positive, got {radius}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Boxes are closed; disc membership is strict.
    pub fn contains(&self, p: Vec2) -> bool {
        match *self {
            Region::Box { origin, extent } => Rect::new(origin, extent).contains(p),
            Region::Disc { center, radius } => (p - center).norm_sq() < radius * radius,
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Region::Box { extent, .. } => extent.x * extent.y,
            Region::Disc { radius, .. } => std::f64::consts::PI * radius * radius,
        }
    }

    pub fn bounding_rect(&self) -> Rect {
        match *self {
            Region::Box { origin, extent } => Rect::new(origin, extent),
            Region::Disc { center, radius } => Rect {
                min: center - Vec2::new(radius, radius),
                max: center + Vec2::new(radius, radius),
            },
        }
    }

    /// Exact area of the intersection with an axis-aligned rectangle.
    pub fn overlap_area(&self, rect: &Rect) -> f64 {
        match *self {
            Region::Box { origin, extent } => Rect::new(origin, extent).overlap_area(rect),
            Region::Disc { center, radius } => circle_box_area(center, radius, rect),
        }
    }
}

/// Exact area of `disc(center, radius) ∩ rect`.
///
/// The disc is integrated column-wise: along x the clipped chord length
/// `min(y1, s(x)) - max(y0, -s(x))` with `s(x) = sqrt(r² - x²)` is piecewise
/// either constant or affine in `s`, with breakpoints where `s(x)` crosses
/// `|y0|`, `|y1|`. Each piece has a closed-form primitive.
pub fn circle_box_area(center: Vec2, radius: f64, rect: &Rect) -> f64 {
    let r = radius;
    if !(r > 0.0) || rect.width() <= 0.0 || rect.height() <= 0.0 {
        return 0.0;
    }
    let x0 = (rect.min.x - center.x).max(-r);
    let x1 = (rect.max.x - center.x).min(r);
    let y0 = rect.min.y - center.y;
    let y1 = rect.max.y - center.y;
    if x0 >= x1 || y0 >= r || y1 <= -r {
        return 0.0;
    }

    let r2 = r * r;
    let chord = |x: f64| (r2 - x * x).max(0.0).sqrt();
    // ∫ sqrt(r² - x²) dx
    let prim = |x: f64| {
        let xc = x.clamp(-r, r);
        0.5 * (xc * chord(xc) + r2 * (xc / r).clamp(-1.0, 1.0).asin())
    };

    let mut cuts = [x0, x1, 0.0, 0.0, 0.0, 0.0];
    let mut n = 2;
    for y in [y0, y1] {
        if y.abs() < r {
            let c = chord(y);
            for x in [-c, c] {
                if x > x0 && x < x1 {
                    cuts[n] = x;
                    n += 1;
                }
            }
        }
    }
    let cuts = &mut cuts[..n];
    cuts.sort_by(f64::total_cmp);

    let mut area = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let s_mid = chord(0.5 * (a + b));
        let top_is_arc = s_mid < y1;
        let bottom_is_arc = -s_mid > y0;
        if s_mid.min(y1) <= (-s_mid).max(y0) {
            continue;
        }
        let arc = prim(b) - prim(a);
        let len = b - a;
        let top = if top_is_arc { arc } else { y1 * len };
        let bottom = if bottom_is_arc { -arc } else { y0 * len };
        area += top - bottom;
    }
    area.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn box_inside_disc_gives_box_area() {
        let rect = Rect::new(Vec2::new(-0.1, -0.2), Vec2::new(0.3, 0.25));
        let a = circle_box_area(Vec2::ZERO, 1.0, &rect);
        assert!((a - rect.area()).abs() <= 1e-15);
    }

    #[test]
    fn disc_inside_box_gives_disc_area() {
        let rect = Rect::new(Vec2::new(-2.0, -3.0), Vec2::new(5.0, 6.0));
        let a = circle_box_area(Vec2::new(0.3, 0.1), 0.7, &rect);
        assert!((a - PI * 0.49).abs() <= 1e-14);
    }

    #[test]
    fn quarter_disc_at_corner() {
        let rect = Rect::new(Vec2::new(1.0, 2.0), Vec2::new(0.5, 0.8));
        let r = 0.4;
        let a = circle_box_area(Vec2::new(1.0, 2.0), r, &rect);
        assert!((a - PI * r * r / 4.0).abs() <= 1e-12 * PI * r * r);
    }

    #[test]
    fn half_disc_across_edge() {
        let rect = Rect::new(Vec2::new(0.0, -5.0), Vec2::new(5.0, 10.0));
        let a = circle_box_area(Vec2::ZERO, 1.0, &rect);
        assert!((a - PI / 2.0).abs() <= 1e-14);
    }

    #[test]
    fn disjoint_is_zero() {
        let rect = Rect::new(Vec2::new(2.0, 2.0), Vec2::new(1.0, 1.0));
        assert_eq!(circle_box_area(Vec2::ZERO, 1.0, &rect), 0.0);
        // box corner outside the disc although both projections overlap
        let rect = Rect::new(Vec2::new(0.8, 0.8), Vec2::new(1.0, 1.0));
        assert_eq!(circle_box_area(Vec2::ZERO, 1.0, &rect), 0.0);
    }

    #[test]
    fn rect_overlap() {
        let a = Rect::new(Vec2::ZERO, Vec2::new(1.0, 1.0));
        let b = Rect::new(Vec2::new(0.5, 0.25), Vec2::new(1.0, 1.0));
        assert_eq!(a.overlap_area(&b), 0.375);
        let c = Rect::new(Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0));
        assert_eq!(a.overlap_area(&c), 0.0);
    }

    #[test]
    fn region_membership() {
        let d = Region::disc(Vec2::new(1.0, 0.5), 0.3).unwrap();
        assert!(d.contains(Vec2::new(1.0, 0.5)));
        assert!(!d.contains(Vec2::new(1.3, 0.5)));
        let b = Region::boxed(Vec2::ZERO, Vec2::new(0.1, 1.0)).unwrap();
        assert!(b.contains(Vec2::new(0.1, 1.0)));
        assert!(Region::disc(Vec2::ZERO, 0.0).is_err());
        assert!(Region::boxed(Vec2::ZERO, Vec2::new(-1.0, 1.0)).is_err());
    }
}
