//! Integer lattice geometry: points, regions, boxes, cubes, boundaries and projections.

use std::cmp::Ordering;
use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::de::{Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::Error;

pub const MAX_DIM: usize = 4;

/// A site of Z^d, d <= MAX_DIM. Unused trailing coordinates are kept at zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Point {
    c: [i32; MAX_DIM],
    d: u8,
}

impl Point {
    pub fn new(coords: &[i32]) -> Point {
        assert!(
            !coords.is_empty() && coords.len() <= MAX_DIM,
            "dimension must be in 1..={MAX_DIM}"
        );
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Point {
            c,
            d: coords.len() as u8,
        }
    }

    pub fn origin(d: usize) -> Point {
        Point::new(&vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.d as usize
    }

    pub fn coords(&self) -> &[i32] {
        &self.c[..self.d as usize]
    }

    pub fn get(&self, axis: usize) -> i32 {
        self.c[axis]
    }

    pub fn with(&self, axis: usize, value: i32) -> Point {
        let mut p = *self;
        p.c[axis] = value;
        p
    }

    pub fn shifted(&self, axis: usize, delta: i32) -> Point {
        let mut p = *self;
        p.c[axis] += delta;
        p
    }

    pub fn add(&self, other: &Point) -> Point {
        let mut p = *self;
        for k in 0..self.dim() {
            p.c[k] += other.c[k];
        }
        p
    }

    pub fn sub(&self, other: &Point) -> Point {
        let mut p = *self;
        for k in 0..self.dim() {
            p.c[k] -= other.c[k];
        }
        p
    }

    pub fn neg(&self) -> Point {
        let mut p = *self;
        for k in 0..self.dim() {
            p.c[k] = -p.c[k];
        }
        p
    }

    /// The 2d nearest neighbours, ordered by axis then sign (−, +).
    pub fn neighbors(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.dim()).flat_map(move |k| [self.shifted(k, -1), self.shifted(k, 1)])
    }

    pub fn l1(&self, other: &Point) -> i64 {
        (0..self.dim())
            .map(|k| (self.c[k] as i64 - other.c[k] as i64).abs())
            .sum()
    }

    pub fn linf(&self, other: &Point) -> i64 {
        (0..self.dim())
            .map(|k| (self.c[k] as i64 - other.c[k] as i64).abs())
            .max()
            .unwrap_or(0)
    }

    pub fn l2_sq(&self, other: &Point) -> i64 {
        (0..self.dim())
            .map(|k| {
                let t = self.c[k] as i64 - other.c[k] as i64;
                t * t
            })
            .sum()
    }
}

impl Ord for Point {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d
            .cmp(&other.d)
            .then_with(|| self.coords().cmp(other.coords()))
    }
}

impl PartialOrd for Point {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, x) in self.coords().iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.dim()))?;
        for x in self.coords() {
            seq.serialize_element(x)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Point, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Point;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "a coordinate tuple of length 1..={MAX_DIM}")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Point, A::Error> {
                let mut c = Vec::new();
                while let Some(x) = seq.next_element::<i32>()? {
                    c.push(x);
                }
                if c.is_empty() || c.len() > MAX_DIM {
                    return Err(serde::de::Error::invalid_length(c.len(), &self));
                }
                Ok(Point::new(&c))
            }
        }
        d.deserialize_seq(V)
    }
}

/// Distance used for long-range couplings and for cube-graph distances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    #[default]
    L2,
    Linf,
}

impl Norm {
    pub fn dist(&self, x: &Point, y: &Point) -> f64 {
        match self {
            Norm::L1 => x.l1(y) as f64,
            Norm::L2 => (x.l2_sq(y) as f64).sqrt(),
            Norm::Linf => x.linf(y) as f64,
        }
    }

    /// An integer quantity that is a monotone function of the distance:
    /// the distance itself for l1/linf and its square for l2.
    pub fn dist_key(&self, x: &Point, y: &Point) -> i64 {
        match self {
            Norm::L1 => x.l1(y),
            Norm::L2 => x.l2_sq(y),
            Norm::Linf => x.linf(y),
        }
    }
}

/// Finite set of sites, stored sorted and without duplicates.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "Vec<Point>", try_from = "Vec<Point>")]
pub struct Region {
    dim: usize,
    points: Vec<Point>,
}

impl From<Region> for Vec<Point> {
    fn from(r: Region) -> Vec<Point> {
        r.points
    }
}

impl TryFrom<Vec<Point>> for Region {
    type Error = Error;
    fn try_from(v: Vec<Point>) -> Result<Region, Error> {
        let d = v.first().map(|p| p.dim()).unwrap_or(1);
        if v.iter().any(|p| p.dim() != d) {
            return Err(Error::Param("mixed dimensions in region".into()));
        }
        Ok(Region::from_points(d, v))
    }
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.points.iter()).finish()
    }
}

impl Region {
    pub fn empty(dim: usize) -> Region {
        Region {
            dim,
            points: Vec::new(),
        }
    }

    pub fn from_points(dim: usize, mut points: Vec<Point>) -> Region {
        debug_assert!(points.iter().all(|p| p.dim() == dim));
        points.sort_unstable();
        points.dedup();
        Region { dim, points }
    }

    pub fn from_coords(dim: usize, coords: &[&[i32]]) -> Region {
        Region::from_points(dim, coords.iter().map(|c| Point::new(c)).collect())
    }

    pub fn single(p: Point) -> Region {
        Region {
            dim: p.dim(),
            points: vec![p],
        }
    }

    /// Axis-aligned box with inclusive corners.
    pub fn rect(lo: &[i32], hi: &[i32]) -> Region {
        assert_eq!(lo.len(), hi.len());
        let d = lo.len();
        let mut points = Vec::new();
        if lo.iter().zip(hi).all(|(a, b)| a <= b) {
            let mut cur = lo.to_vec();
            loop {
                points.push(Point::new(&cur));
                let mut k = d;
                loop {
                    if k == 0 {
                        return Region::from_points(d, points);
                    }
                    k -= 1;
                    if cur[k] < hi[k] {
                        cur[k] += 1;
                        break;
                    }
                    cur[k] = lo[k];
                }
            }
        }
        Region::from_points(d, points)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.points.iter()
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.points.binary_search(p).is_ok()
    }

    pub fn index_of(&self, p: &Point) -> Option<usize> {
        self.points.binary_search(p).ok()
    }

    /// Per-axis (min, max); None for the empty region.
    pub fn bounding_box(&self) -> Option<(Vec<i32>, Vec<i32>)> {
        let first = self.points.first()?;
        let mut lo = first.coords().to_vec();
        let mut hi = lo.clone();
        for p in &self.points {
            for k in 0..self.dim {
                lo[k] = lo[k].min(p.get(k));
                hi[k] = hi[k].max(p.get(k));
            }
        }
        Some((lo, hi))
    }

    /// True when the region equals its bounding box.
    pub fn is_box(&self) -> bool {
        match self.bounding_box() {
            None => false,
            Some((lo, hi)) => {
                let vol: i64 = lo
                    .iter()
                    .zip(&hi)
                    .map(|(a, b)| *b as i64 - *a as i64 + 1)
                    .product();
                vol == self.len() as i64
            }
        }
    }

    pub fn union(&self, other: &Region) -> Region {
        let mut v = self.points.clone();
        v.extend_from_slice(&other.points);
        Region::from_points(self.dim, v)
    }

    pub fn intersection(&self, other: &Region) -> Region {
        Region {
            dim: self.dim,
            points: self
                .points
                .iter()
                .filter(|p| other.contains(p))
                .copied()
                .collect(),
        }
    }

    pub fn difference(&self, other: &Region) -> Region {
        Region {
            dim: self.dim,
            points: self
                .points
                .iter()
                .filter(|p| !other.contains(p))
                .copied()
                .collect(),
        }
    }

    pub fn symmetric_difference(&self, other: &Region) -> Region {
        self.difference(other).union(&other.difference(self))
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.points.iter().all(|p| other.contains(p))
    }

    pub fn translate(&self, v: &Point) -> Region {
        Region::from_points(self.dim, self.points.iter().map(|p| p.add(v)).collect())
    }

    pub fn filter<F: Fn(&Point) -> bool>(&self, f: F) -> Region {
        Region {
            dim: self.dim,
            points: self.points.iter().filter(|p| f(p)).copied().collect(),
        }
    }

    /// Largest l1/l2/linf distance between two points; 0 for fewer than two points.
    pub fn diameter(&self, norm: Norm) -> f64 {
        let mut best = 0i64;
        for (i, p) in self.points.iter().enumerate() {
            for q in &self.points[i + 1..] {
                best = best.max(norm.dist_key(p, q));
            }
        }
        match norm {
            Norm::L2 => (best as f64).sqrt(),
            _ => best as f64,
        }
    }

    /// l1-connected components, each sorted; components ordered by their least point.
    pub fn components(&self) -> Vec<Region> {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![self.points[s]];
            let mut queue = VecDeque::from([s]);
            while let Some(i) = queue.pop_front() {
                for q in self.points[i].neighbors() {
                    if let Some(j) = self.index_of(&q) {
                        if !seen[j] {
                            seen[j] = true;
                            comp.push(q);
                            queue.push_back(j);
                        }
                    }
                }
            }
            out.push(Region::from_points(self.dim, comp));
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.len() <= 1 || self.components().len() == 1
    }
}

/// Dense boolean occupancy over an axis-aligned window, for flood fills.
pub(crate) struct Grid {
    lo: Vec<i32>,
    ext: Vec<usize>,
    stride: Vec<usize>,
    pub(crate) cells: Vec<bool>,
}

impl Grid {
    pub(crate) fn new(lo: Vec<i32>, hi: Vec<i32>) -> Grid {
        let ext: Vec<usize> = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| (b - a + 1) as usize)
            .collect();
        let mut stride = vec![1; ext.len()];
        for k in (0..ext.len().saturating_sub(1)).rev() {
            stride[k] = stride[k + 1] * ext[k + 1];
        }
        let total = ext.iter().product();
        Grid {
            lo,
            ext,
            stride,
            cells: vec![false; total],
        }
    }

    /// Window of the region's bounding box grown by `margin` on every side.
    pub(crate) fn around(r: &Region, margin: i32) -> Option<Grid> {
        let (lo, hi) = r.bounding_box()?;
        Some(Grid::new(
            lo.iter().map(|x| x - margin).collect(),
            hi.iter().map(|x| x + margin).collect(),
        ))
    }

    pub(crate) fn index(&self, p: &Point) -> Option<usize> {
        let mut idx = 0;
        for k in 0..self.ext.len() {
            let off = p.get(k) - self.lo[k];
            if off < 0 || off as usize >= self.ext[k] {
                return None;
            }
            idx += off as usize * self.stride[k];
        }
        Some(idx)
    }

    pub(crate) fn point(&self, mut idx: usize) -> Point {
        let mut c = vec![0; self.ext.len()];
        for k in 0..self.ext.len() {
            c[k] = self.lo[k] + (idx / self.stride[k]) as i32;
            idx %= self.stride[k];
        }
        Point::new(&c)
    }

    pub(crate) fn len(&self) -> usize {
        self.cells.len()
    }

    pub(crate) fn corner(&self) -> Point {
        Point::new(&self.lo)
    }
}

/// Sites of the unbounded l1-component of the complement that lie in a window
/// one site larger than the bounding box; `blocked(x, y)` forbids the step x→y.
pub(crate) fn outside_reachable<B: Fn(&Point, &Point) -> bool>(
    a: &Region,
    window_of: &Region,
    blocked: B,
) -> Option<Grid> {
    let mut g = Grid::around(window_of, 1)?;
    let start = g.corner();
    let s = g.index(&start)?;
    let mut queue = VecDeque::from([s]);
    g.cells[s] = true;
    while let Some(i) = queue.pop_front() {
        let p = g.point(i);
        for q in p.neighbors() {
            if let Some(j) = g.index(&q) {
                if !g.cells[j] && !a.contains(&q) && !blocked(&p, &q) {
                    g.cells[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    Some(g)
}

/// V(A): Z^d minus the unbounded component of the complement.
pub fn volume(a: &Region) -> Region {
    let Some(g) = outside_reachable(a, a, |_, _| false) else {
        return a.clone();
    };
    let pts = (0..g.len())
        .filter(|&i| !g.cells[i])
        .map(|i| g.point(i))
        .collect();
    Region::from_points(a.dim(), pts)
}

/// I(A) = V(A) \ A, the bounded part of the complement.
pub fn holes(a: &Region) -> Region {
    volume(a).difference(a)
}

/// Bounded l1-components of the complement, i.e. the components of I(A).
pub fn hole_components(a: &Region) -> Vec<Region> {
    holes(a).components()
}

pub fn build_box(n: i32, m: i32, d: usize, base: i32) -> Result<Region, Error> {
    if d == 0 || d > MAX_DIM {
        return Err(Error::Param(format!("dimension {d} outside 1..={MAX_DIM}")));
    }
    if n < 0 {
        return Err(Error::Param(format!("box half-width n={n} is negative")));
    }
    if base != 0 && base != 1 {
        return Err(Error::Param(format!("base must be 0 or 1, got {base}")));
    }
    if m < base {
        return Err(Error::Param(format!("height m={m} below base {base}")));
    }
    let mut lo = vec![-n; d];
    let mut hi = vec![n; d];
    lo[d - 1] = base;
    hi[d - 1] = m;
    Ok(Region::rect(&lo, &hi))
}

/// Mirror through the hyperplane x_axis = pivot2/2.
pub fn reflect_region(r: &Region, axis: usize, pivot2: i32) -> Region {
    Region::from_points(
        r.dim(),
        r.iter()
            .map(|p| p.with(axis, pivot2 - p.get(axis)))
            .collect(),
    )
}

pub fn inner_boundary(a: &Region) -> Region {
    a.filter(|p| p.neighbors().any(|q| !a.contains(&q)))
}

pub fn exterior_boundary(a: &Region) -> Region {
    let pts = a
        .iter()
        .flat_map(|p| p.neighbors().collect::<Vec<_>>())
        .filter(|q| !a.contains(q))
        .collect();
    Region::from_points(a.dim(), pts)
}

/// ∂_ex A computed only among sites of `within`.
pub fn exterior_boundary_within(a: &Region, within: &Region) -> Region {
    within.filter(|q| !a.contains(q) && q.neighbors().any(|p| a.contains(&p)))
}

/// ∂A as ordered pairs (x in A, y outside A).
pub fn edge_boundary(a: &Region) -> Vec<(Point, Point)> {
    let mut out = Vec::new();
    for p in a.iter() {
        for q in p.neighbors() {
            if !a.contains(&q) {
                out.push((*p, q));
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    Inner,
    Exterior,
    Edge,
}

/// Size of the requested boundary.
pub fn boundary_size(a: &Region, kind: BoundaryKind) -> usize {
    match kind {
        BoundaryKind::Inner => inner_boundary(a).len(),
        BoundaryKind::Exterior => exterior_boundary(a).len(),
        BoundaryKind::Edge => edge_boundary(a).len(),
    }
}

/// C_m(x) = prod [2^m x_i, 2^m (x_i + 1)).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cube {
    pub m: u32,
    pub anchor: Point,
}

impl Cube {
    pub fn side(&self) -> i32 {
        1 << self.m
    }

    pub fn volume(&self) -> usize {
        1usize << (self.m as usize * self.anchor.dim())
    }

    pub fn containing(p: &Point, m: u32) -> Cube {
        let c: Vec<i32> = p.coords().iter().map(|x| x >> m).collect();
        Cube {
            m,
            anchor: Point::new(&c),
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..p.dim()).all(|k| p.get(k) >> self.m == self.anchor.get(k))
    }

    pub fn lo(&self) -> Vec<i32> {
        self.anchor.coords().iter().map(|x| x << self.m).collect()
    }

    pub fn hi(&self) -> Vec<i32> {
        self.anchor
            .coords()
            .iter()
            .map(|x| ((x + 1) << self.m) - 1)
            .collect()
    }

    pub fn points(&self) -> Region {
        Region::rect(&self.lo(), &self.hi())
    }

    /// Same-scale cubes sharing a (d−1)-face.
    pub fn face_neighbors(&self) -> impl Iterator<Item = Cube> + '_ {
        self.anchor.neighbors().map(move |a| Cube {
            m: self.m,
            anchor: a,
        })
    }

    /// Distance between the two point sets, measured by the norm's integer key.
    pub fn dist_key(&self, other: &Cube, norm: Norm) -> i64 {
        let (alo, ahi, blo, bhi) = (self.lo(), self.hi(), other.lo(), other.hi());
        let gaps: Vec<i64> = (0..self.anchor.dim())
            .map(|k| {
                if bhi[k] < alo[k] {
                    (alo[k] - bhi[k]) as i64
                } else if ahi[k] < blo[k] {
                    (blo[k] - ahi[k]) as i64
                } else {
                    0
                }
            })
            .collect();
        match norm {
            Norm::L1 => gaps.iter().sum(),
            Norm::L2 => gaps.iter().map(|g| g * g).sum(),
            Norm::Linf => gaps.iter().copied().max().unwrap_or(0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeCollection {
    pub m: u32,
    pub anchors: BTreeSet<Point>,
}

impl CubeCollection {
    pub fn new(m: u32) -> CubeCollection {
        CubeCollection {
            m,
            anchors: BTreeSet::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn contains(&self, c: &Cube) -> bool {
        c.m == self.m && self.anchors.contains(&c.anchor)
    }

    pub fn cubes(&self) -> impl Iterator<Item = Cube> + '_ {
        self.anchors.iter().map(move |a| Cube {
            m: self.m,
            anchor: *a,
        })
    }

    /// B_C, the union of the cubes.
    pub fn union_region(&self, dim: usize) -> Region {
        let mut pts = Vec::new();
        for c in self.cubes() {
            pts.extend_from_slice(c.points().points());
        }
        Region::from_points(dim, pts)
    }
}

/// 𝒞_m(A): the distinct floor-division anchors of the points of A.
pub fn min_cube_covering(a: &Region, m: u32) -> CubeCollection {
    CubeCollection {
        m,
        anchors: a.iter().map(|p| Cube::containing(p, m).anchor).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Projection {
    pub good: Region,
    pub bad: Region,
}

/// Projections of A∩R onto the face R_i = {x_i = min_i} of the box R.
pub fn axis_projection(a: &Region, rect: &Region, axis: usize) -> Result<Projection, Error> {
    if !rect.is_box() {
        return Err(Error::Param("projection rectangle is not a full box".into()));
    }
    if axis >= rect.dim() {
        return Err(Error::Param(format!("axis {axis} out of range")));
    }
    let (lo, hi) = rect.bounding_box().expect("non-empty box");
    let mut good = Vec::new();
    let mut bad = Vec::new();
    for x in rect.iter().filter(|p| p.get(axis) == lo[axis]) {
        let mut hits = 0;
        let len = hi[axis] - lo[axis] + 1;
        for t in lo[axis]..=hi[axis] {
            if a.contains(&x.with(axis, t)) {
                hits += 1;
            }
        }
        if hits == len {
            bad.push(*x);
        } else if hits > 0 {
            good.push(*x);
        }
    }
    Ok(Projection {
        good: Region::from_points(rect.dim(), good),
        bad: Region::from_points(rect.dim(), bad),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_sizes() {
        assert_eq!(build_box(1, 1, 2, 0).unwrap().len(), 6);
        let b = build_box(0, 0, 3, 0).unwrap();
        assert_eq!(b.points(), &[Point::new(&[0, 0, 0])]);
        assert_eq!(build_box(2, 3, 2, 1).unwrap().len(), 15);
        assert!(build_box(1, 0, 2, 1).is_err());
        assert!(build_box(-1, 2, 2, 1).is_err());
    }

    #[test]
    fn reflection() {
        let r = Region::from_coords(2, &[&[0, 0]]);
        assert_eq!(reflect_region(&r, 1, -1), Region::from_coords(2, &[&[0, -1]]));
        let b = build_box(1, 1, 2, 0).unwrap();
        let mirror = reflect_region(&b, 1, -1);
        assert_eq!(b.intersection(&mirror).len(), 0);
        assert_eq!(b.union(&mirror).len(), 2 * b.len());
        assert_eq!(reflect_region(&mirror, 1, -1), b);
    }

    #[test]
    fn boundaries_of_small_sets() {
        let p = Region::from_coords(2, &[&[0, 0]]);
        assert_eq!(exterior_boundary(&p).len(), 4);
        assert_eq!(inner_boundary(&p).len(), 1);
        assert_eq!(edge_boundary(&p).len(), 4);
        let e = Region::empty(2);
        assert!(exterior_boundary(&e).is_empty() && edge_boundary(&e).is_empty());
        let sq = Region::rect(&[0, 0], &[1, 1]);
        assert_eq!(inner_boundary(&sq).len(), 4);
        assert_eq!(exterior_boundary(&sq).len(), 8);
        assert_eq!(edge_boundary(&sq).len(), 8);
    }

    #[test]
    fn coverings() {
        let o = Region::from_coords(2, &[&[0, 0]]);
        for m in 0..5 {
            assert_eq!(min_cube_covering(&o, m).len(), 1);
            let two = Region::from_coords(2, &[&[0, 0], &[1 << m, 0]]);
            assert_eq!(min_cube_covering(&two, m).len(), 2);
        }
        let sq = Region::rect(&[0, 0], &[2, 2]);
        assert_eq!(min_cube_covering(&sq, 1).len(), 4);
        let neg = Region::from_coords(1, &[&[-1]]);
        assert_eq!(
            min_cube_covering(&neg, 1).cubes().next().unwrap().points(),
            Region::from_coords(1, &[&[-2], &[-1]])
        );
    }

    #[test]
    fn projections() {
        let r = Region::rect(&[1, 1], &[3, 3]);
        let p = axis_projection(&Region::empty(2), &r, 0).unwrap();
        assert!(p.good.is_empty() && p.bad.is_empty());
        for i in 0..2 {
            let p = axis_projection(&r, &r, i).unwrap();
            assert_eq!(p.bad.len(), 3);
            assert!(p.good.is_empty());
            let c = Region::from_coords(2, &[&[2, 2]]);
            let p = axis_projection(&c, &r, i).unwrap();
            assert_eq!((p.good.len(), p.bad.len()), (1, 0));
        }
        let l = Region::from_coords(2, &[&[0, 0], &[1, 0], &[0, 1]]);
        assert!(axis_projection(&l, &l, 0).is_err());
    }

    #[test]
    fn volume_fills_holes() {
        let ring = Region::rect(&[0, 0], &[2, 2]).difference(&Region::from_coords(2, &[&[1, 1]]));
        assert_eq!(volume(&ring).len(), 9);
        assert_eq!(holes(&ring), Region::from_coords(2, &[&[1, 1]]));
        // diagonal neighbours do not enclose
        let diag = Region::from_coords(2, &[&[0, 1], &[1, 0], &[1, 2], &[2, 1]]);
        assert_eq!(holes(&diag), Region::from_coords(2, &[&[1, 1]]));
        let lone = Region::from_coords(2, &[&[5, 5]]);
        assert_eq!(volume(&lone), lone);
    }

    #[test]
    fn cube_distance() {
        let a = Cube {
            m: 1,
            anchor: Point::new(&[0, 0]),
        };
        let b = Cube {
            m: 1,
            anchor: Point::new(&[50, 0]),
        };
        assert_eq!(a.dist_key(&b, Norm::L1), 99);
        assert_eq!(a.dist_key(&a, Norm::L2), 0);
        assert_eq!(a.points().len(), a.volume());
    }
}
