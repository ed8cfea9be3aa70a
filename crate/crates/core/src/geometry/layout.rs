use super::ellipse::{ellipse_gap, min_over_boundary, Ellipse};
use super::Point;
use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OuterDomain {
    Square { min: Point, side: f64 },
    Disk { center: Point, radius: f64 },
}

impl OuterDomain {
    pub fn unit_square() -> Self {
        OuterDomain::Square { min: [0.0, 0.0], side: 1.0 }
    }

    pub fn unit_disk() -> Self {
        OuterDomain::Disk { center: [0.0, 0.0], radius: 1.0 }
    }

    pub fn area(&self) -> f64 {
        match *self {
            OuterDomain::Square { side, .. } => side * side,
            OuterDomain::Disk { radius, .. } => std::f64::consts::PI * radius * radius,
        }
    }

    /// Signed distance to the boundary, positive inside.
    pub fn inner_distance(&self, x: Point) -> f64 {
        match *self {
            OuterDomain::Square { min, side } => {
                let dx = (x[0] - min[0]).min(min[0] + side - x[0]);
                let dy = (x[1] - min[1]).min(min[1] + side - x[1]);
                if dx >= 0.0 && dy >= 0.0 {
                    dx.min(dy)
                } else {
                    // outside: negative Euclidean distance
                    let ox = (min[0] - x[0]).max(x[0] - min[0] - side).max(0.0);
                    let oy = (min[1] - x[1]).max(x[1] - min[1] - side).max(0.0);
                    -ox.hypot(oy)
                }
            }
            OuterDomain::Disk { center, radius } => radius - (x[0] - center[0]).hypot(x[1] - center[1]),
        }
    }

    pub fn contains_closed(&self, x: Point) -> bool {
        self.inner_distance(x) >= -1e-14
    }

    pub fn bbox(&self) -> (Point, Point) {
        match *self {
            OuterDomain::Square { min, side } => (min, [min[0] + side, min[1] + side]),
            OuterDomain::Disk { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
        }
    }

    pub fn centroid(&self) -> Point {
        match *self {
            OuterDomain::Square { min, side } => [min[0] + 0.5 * side, min[1] + 0.5 * side],
            OuterDomain::Disk { center, .. } => center,
        }
    }

    fn to_text(self) -> String {
        match self {
            OuterDomain::Square { min, side } => format!("square {:?} {:?} {:?}", min[0], min[1], side),
            OuterDomain::Disk { center, radius } => format!("disk {:?} {:?} {:?}", center[0], center[1], radius),
        }
    }

    fn from_text(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split_whitespace().collect();
        let nums = parse_floats(&parts[1..])?;
        match (parts.first().copied(), nums.len()) {
            (Some("square"), 3) if nums[2] > 0.0 => Ok(OuterDomain::Square { min: [nums[0], nums[1]], side: nums[2] }),
            (Some("disk"), 3) if nums[2] > 0.0 => Ok(OuterDomain::Disk { center: [nums[0], nums[1]], radius: nums[2] }),
            _ => Err(Error::InvalidLayout(format!("bad outer domain '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Inclusion {
    pub shape: Ellipse,
    pub region: usize,
}

impl Inclusion {
    pub fn new(shape: Ellipse, region: usize) -> Self {
        Inclusion { shape, region }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapPair {
    pub first: usize,
    pub second: usize,
    pub delta: f64,
}

/// Outer domain plus disjoint elliptic inclusions. Region `L = inclusions.len() + 1`
/// is the background.
#[derive(Clone, Debug, PartialEq)]
pub struct InclusionLayout {
    pub outer: OuterDomain,
    pub inclusions: Vec<Inclusion>,
    pub gap: Option<GapPair>,
    /// Interface regularity exponent; carried along, never used by the numerics.
    pub alpha: f64,
    requested: Vec<Inclusion>,
}

pub fn build_layout(outer: OuterDomain, inclusions: Vec<Inclusion>, gap: Option<GapPair>) -> Result<InclusionLayout> {
    let n = inclusions.len();
    let mut seen = vec![false; n];
    for inc in &inclusions {
        let [a, b] = inc.shape.radii;
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidLayout("radii must be positive".into()));
        }
        if inc.region == 0 || inc.region > n || seen[inc.region - 1] {
            return Err(Error::InvalidLayout(format!(
                "inclusion region indices must be a permutation of 1..={n}"
            )));
        }
        seen[inc.region - 1] = true;
    }
    let requested = inclusions.clone();
    let mut adjusted = inclusions;
    if let Some(g) = gap {
        if g.first == g.second || g.first >= n || g.second >= n {
            return Err(Error::InvalidLayout("gap pair must name two distinct inclusions".into()));
        }
        if !(g.delta >= 0.0) || !g.delta.is_finite() {
            return Err(Error::InvalidParameter(format!("gap delta {} must be nonnegative", g.delta)));
        }
        let (a, b) = place_pair(&adjusted[g.first].shape, &adjusted[g.second].shape, g.delta);
        adjusted[g.first].shape = a;
        adjusted[g.second].shape = b;
    }
    let layout = InclusionLayout { outer, inclusions: adjusted, gap, alpha: 0.5, requested };
    layout.validate()?;
    Ok(layout)
}

// Moves two ellipses symmetrically along their centre line until the boundary gap is `delta`.
fn place_pair(a: &Ellipse, b: &Ellipse, delta: f64) -> (Ellipse, Ellipse) {
    let dx = b.center[0] - a.center[0];
    let dy = b.center[1] - a.center[1];
    let d = dx.hypot(dy);
    let (ux, uy) = if d > 0.0 { (dx / d, dy / d) } else { (1.0, 0.0) };
    let m = [0.5 * (a.center[0] + b.center[0]), 0.5 * (a.center[1] + b.center[1])];
    let at = |s: f64| {
        let mut ea = *a;
        let mut eb = *b;
        ea.center = [m[0] - 0.5 * s * ux, m[1] - 0.5 * s * uy];
        eb.center = [m[0] + 0.5 * s * ux, m[1] + 0.5 * s * uy];
        (ea, eb)
    };
    if a.is_circle() && b.is_circle() {
        return at(a.radii[0] + b.radii[0] + delta);
    }
    let mut lo = a.min_radius() + b.min_radius();
    let mut hi = a.max_radius() + b.max_radius() + delta;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let (ea, eb) = at(mid);
        if ellipse_gap(&ea, &eb).0 < delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(hi)
}

impl InclusionLayout {
    pub fn n_regions(&self) -> usize {
        self.inclusions.len() + 1
    }

    pub fn background(&self) -> usize {
        self.inclusions.len() + 1
    }

    fn validate(&self) -> Result<()> {
        for (i, inc) in self.inclusions.iter().enumerate() {
            if !self.strictly_inside(&inc.shape) {
                return Err(Error::Containment(i));
            }
        }
        for i in 0..self.inclusions.len() {
            for j in i + 1..self.inclusions.len() {
                let (g, _, _) = ellipse_gap(&self.inclusions[i].shape, &self.inclusions[j].shape);
                let scale = self.inclusions[i].shape.max_radius().max(self.inclusions[j].shape.max_radius());
                if g < -1e-12 * scale {
                    return Err(Error::Overlap(i, j));
                }
            }
        }
        Ok(())
    }

    fn strictly_inside(&self, e: &Ellipse) -> bool {
        match self.outer {
            OuterDomain::Square { min, side } => {
                let h = e.half_extents();
                e.center[0] - h[0] > min[0]
                    && e.center[0] + h[0] < min[0] + side
                    && e.center[1] - h[1] > min[1]
                    && e.center[1] + h[1] < min[1] + side
            }
            OuterDomain::Disk { center, radius } => {
                let far = if e.is_circle() {
                    (e.center[0] - center[0]).hypot(e.center[1] - center[1]) + e.radii[0]
                } else {
                    -min_over_boundary(e, |x| -(x[0] - center[0]).hypot(x[1] - center[1])).0
                };
                far < radius
            }
        }
    }

    /// Region index of `x`; boundary points go to the smallest adjacent index.
    pub fn classify(&self, x: Point) -> Result<usize> {
        if !self.outer.contains_closed(x) || !x[0].is_finite() || !x[1].is_finite() {
            return Err(Error::OutsideDomain(x[0], x[1]));
        }
        let mut best = self.background();
        for inc in &self.inclusions {
            if inc.region < best && inc.shape.contains_closed(x) {
                best = inc.region;
            }
        }
        Ok(best)
    }

    pub fn inclusion_of_region(&self, m: usize) -> Option<&Inclusion> {
        self.inclusions.iter().find(|inc| inc.region == m)
    }

    /// Boundary gap between inclusions `i` and `j` with the closest points.
    pub fn pair_gap(&self, i: usize, j: usize) -> (f64, Point, Point) {
        ellipse_gap(&self.inclusions[i].shape, &self.inclusions[j].shape)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "outer = {}", self.outer.to_text());
        for (i, inc) in self.requested.iter().enumerate() {
            let e = &inc.shape;
            let _ = writeln!(s, "inclusion[{i}].center = {:?} {:?}", e.center[0], e.center[1]);
            let _ = writeln!(s, "inclusion[{i}].radii = {:?} {:?}", e.radii[0], e.radii[1]);
            let _ = writeln!(s, "inclusion[{i}].rotation = {:?}", e.rotation);
            let _ = writeln!(s, "inclusion[{i}].region = {}", inc.region);
        }
        if let Some(g) = self.gap {
            let _ = writeln!(s, "gap_pair = {} {}", g.first, g.second);
            let _ = writeln!(s, "delta = {:?}", g.delta);
        }
        let _ = writeln!(s, "alpha = {:?}", self.alpha);
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidLayout(format!("expected key = value, got '{line}'")))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let outer = OuterDomain::from_text(
            kv.remove("outer").as_deref().ok_or_else(|| Error::InvalidLayout("missing outer".into()))?,
        )?;
        let mut inclusions = Vec::new();
        let mut i = 0;
        while let Some(c) = kv.remove(&format!("inclusion[{i}].center")) {
            let take = |kv: &mut BTreeMap<String, String>, f: &str| {
                kv.remove(&format!("inclusion[{i}].{f}"))
                    .ok_or_else(|| Error::InvalidLayout(format!("missing inclusion[{i}].{f}")))
            };
            let c = parse_floats_n(&c, 2)?;
            let r = parse_floats_n(&take(&mut kv, "radii")?, 2)?;
            let rot = parse_floats_n(&take(&mut kv, "rotation")?, 1)?[0];
            let region: usize = take(&mut kv, "region")?
                .parse()
                .map_err(|_| Error::InvalidLayout(format!("bad region for inclusion {i}")))?;
            inclusions.push(Inclusion::new(Ellipse::new([c[0], c[1]], [r[0], r[1]], rot), region));
            i += 1;
        }
        let gap = match (kv.remove("gap_pair"), kv.remove("delta")) {
            (Some(p), Some(d)) => {
                let idx: Vec<usize> = p
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|_| Error::InvalidLayout(format!("bad gap_pair '{p}'"))))
                    .collect::<Result<_>>()?;
                if idx.len() != 2 {
                    return Err(Error::InvalidLayout(format!("bad gap_pair '{p}'")));
                }
                Some(GapPair { first: idx[0], second: idx[1], delta: parse_floats_n(&d, 1)?[0] })
            }
            (None, None) => None,
            _ => return Err(Error::InvalidLayout("gap_pair and delta go together".into())),
        };
        let alpha = match kv.remove("alpha") {
            Some(a) => parse_floats_n(&a, 1)?[0],
            None => 0.5,
        };
        if let Some(k) = kv.keys().next() {
            return Err(Error::InvalidLayout(format!("unknown key '{k}'")));
        }
        let mut layout = build_layout(outer, inclusions, gap)?;
        layout.alpha = alpha;
        Ok(layout)
    }
}

fn parse_floats(parts: &[&str]) -> Result<Vec<f64>> {
    parts
        .iter()
        .map(|t| t.parse::<f64>().map_err(|_| Error::InvalidLayout(format!("bad number '{t}'"))))
        .collect()
}

fn parse_floats_n(s: &str, n: usize) -> Result<Vec<f64>> {
    let v = parse_floats(&s.split_whitespace().collect::<Vec<_>>())?;
    if v.len() != n {
        return Err(Error::InvalidLayout(format!("expected {n} numbers in '{s}'")));
    }
    Ok(v)
}

/// `D_ε`: points of the outer domain at distance at least `epsilon` from its
/// boundary (closed, so `ε = 0` keeps the whole domain).
#[derive(Clone, Debug, PartialEq)]
pub struct ShrunkRegion {
    pub base: InclusionLayout,
    pub epsilon: f64,
}

impl ShrunkRegion {
    pub fn new(base: &InclusionLayout, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon {epsilon} must be nonnegative")));
        }
        Ok(ShrunkRegion { base: base.clone(), epsilon })
    }

    pub fn contains(&self, x: Point) -> bool {
        self.base.outer.inner_distance(x) >= self.epsilon - 1e-14
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disks(c1: Point, c2: Point, r: f64, delta: Option<f64>) -> Result<InclusionLayout> {
        build_layout(
            OuterDomain::Square { min: [-1.0, -1.0], side: 2.0 },
            vec![
                Inclusion::new(Ellipse::circle(c1, r), 1),
                Inclusion::new(Ellipse::circle(c2, r), 2),
            ],
            delta.map(|d| GapPair { first: 0, second: 1, delta: d }),
        )
    }

    #[test]
    fn gap_pair_moves_centres() {
        let l = disks([-0.3, 0.0], [0.3, 0.0], 0.2, Some(0.1)).unwrap();
        assert!((l.inclusions[0].shape.center[0] + 0.25).abs() < 1e-15);
        assert!((l.inclusions[1].shape.center[0] - 0.25).abs() < 1e-15);
        assert!((l.pair_gap(0, 1).0 - 0.1).abs() < 1e-12);
    }

    #[test]
    fn tangency_point_goes_to_smaller_region() {
        let l = disks([-0.3, 0.0], [0.3, 0.0], 0.2, Some(0.0)).unwrap();
        assert_eq!(l.classify([0.0, 0.0]).unwrap(), 1);
        assert_eq!(l.classify([0.0, 0.5]).unwrap(), 3);
        assert_eq!(l.classify([0.1, 0.0]).unwrap(), 2);
    }

    #[test]
    fn overlap_and_containment_rejected() {
        assert!(matches!(disks([-0.1, 0.0], [0.1, 0.0], 0.2, None), Err(Error::Overlap(0, 1))));
        assert!(matches!(disks([0.9, 0.0], [-0.5, 0.0], 0.2, None), Err(Error::Containment(0))));
    }

    #[test]
    fn bad_regions_rejected() {
        let r = build_layout(
            OuterDomain::unit_square(),
            vec![Inclusion::new(Ellipse::circle([0.5, 0.5], 0.1), 2)],
            None,
        );
        assert!(matches!(r, Err(Error::InvalidLayout(_))));
    }

    #[test]
    fn outside_point_rejected() {
        let l = build_layout(OuterDomain::unit_square(), vec![], None).unwrap();
        assert!(matches!(l.classify([1.5, 0.5]), Err(Error::OutsideDomain(..))));
        assert_eq!(l.classify([1.0, 0.5]).unwrap(), 1);
    }

    #[test]
    fn text_round_trip() {
        let mut l = build_layout(
            OuterDomain::unit_square(),
            vec![
                Inclusion::new(Ellipse::new([0.3, 0.5], [0.12, 0.08], 0.4), 2),
                Inclusion::new(Ellipse::circle([0.7, 0.5], 0.1), 1),
            ],
            Some(GapPair { first: 0, second: 1, delta: 0.03 }),
        )
        .unwrap();
        l.alpha = 0.25;
        let back = InclusionLayout::from_text(&l.to_text()).unwrap();
        assert_eq!(back, l);
    }

    #[test]
    fn ellipse_pair_gap_is_exact() {
        let l = build_layout(
            OuterDomain::unit_square(),
            vec![
                Inclusion::new(Ellipse::new([0.3, 0.5], [0.12, 0.08], 0.4), 1),
                Inclusion::new(Ellipse::new([0.7, 0.55], [0.1, 0.05], -0.3), 2),
            ],
            Some(GapPair { first: 0, second: 1, delta: 0.02 }),
        )
        .unwrap();
        assert!((l.pair_gap(0, 1).0 - 0.02).abs() < 1e-12);
    }

    #[test]
    fn shrunk_region() {
        let l = build_layout(OuterDomain::unit_square(), vec![], None).unwrap();
        let s = ShrunkRegion::new(&l, 0.1).unwrap();
        assert!(s.contains([0.5, 0.5]));
        assert!(!s.contains([0.05, 0.5]));
        assert!(ShrunkRegion::new(&l, -1.0).is_err());
    }
}
