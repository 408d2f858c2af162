//! Incorrect points, Peierls contours, the ω^L open contour, multiscale (M,a)-partitions,
//! long-range contours with labels, erasure maps and their energy audits, and contour censuses.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lattice::{
    exterior_boundary, hole_components, inner_boundary, outside_reachable, volume, Norm, Point, Region,
};
use crate::model::{Boundary, Configuration, Field, Model};
use crate::{Error, Result};

fn spin_at(sigma: &Configuration, ext: i8, p: &Point) -> i8 {
    sigma.spin(p).unwrap_or(ext)
}

/// ∂σ: sites that are neither + nor − correct, for σ on Λ with the constant sea `ext` outside.
pub fn incorrect_points(sigma: &Configuration, ext: i8) -> Region {
    let candidates = sigma.region.union(&exterior_boundary(&sigma.region));
    candidates.filter(|x| {
        let s = spin_at(sigma, ext, x);
        x.neighbors().any(|y| spin_at(sigma, ext, &y) != s)
    })
}

/// A dual face, stored as the NN pair (x, x + e_k).
pub type Face = (Point, Point);

fn face_axis(f: &Face) -> usize {
    (0..f.0.dim()).find(|&k| f.0.get(k) != f.1.get(k)).expect("distinct endpoints")
}

fn normalized(x: Point, y: Point) -> Face {
    if x < y {
        (x, y)
    } else {
        (y, x)
    }
}

/// Doubled coordinates of the (d−2)-cells bounding a face.
fn face_cells(f: &Face) -> Vec<Point> {
    let d = f.0.dim();
    let k = face_axis(f);
    let mut c: Vec<i32> = (0..d).map(|i| 2 * f.0.get(i)).collect();
    c[k] += 1;
    let mut out = Vec::with_capacity(2 * (d - 1));
    for i in (0..d).filter(|&i| i != k) {
        for s in [-1, 1] {
            let mut e = c.clone();
            e[i] += s;
            out.push(Point::new(&e));
        }
    }
    out
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }

    fn groups(&mut self) -> Vec<Vec<usize>> {
        let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..self.0.len() {
            let r = self.find(i);
            map.entry(r).or_default().push(i);
        }
        map.into_values().collect()
    }
}

/// Components of a face set; faces sharing a (d−2)-cell are adjacent.
fn face_components(faces: &[Face]) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(faces.len());
    let mut seen: HashMap<Point, usize> = HashMap::new();
    for (i, f) in faces.iter().enumerate() {
        for c in face_cells(f) {
            match seen.get(&c) {
                Some(&j) => uf.union(i, j),
                None => {
                    seen.insert(c, i);
                }
            }
        }
    }
    uf.groups()
}

/// Disagreeing NN pairs with at least one endpoint in Λ.
pub fn disagreement_faces(sigma: &Configuration, ext: i8) -> Vec<Face> {
    let mut out = Vec::new();
    for x in sigma.region.iter() {
        let s = spin_at(sigma, ext, x);
        for y in x.neighbors() {
            if sigma.region.contains(&y) && y < *x {
                continue;
            }
            if spin_at(sigma, ext, &y) != s {
                out.push(normalized(*x, y));
            }
        }
    }
    out.sort();
    out
}

/// Sites cut off from infinity by the faces (paths may not cross a face).
fn enclosed_by(faces: &[Face]) -> Region {
    let Some(first) = faces.first() else {
        return Region::empty(1);
    };
    let d = first.0.dim();
    let set: HashSet<Face> = faces.iter().copied().collect();
    let ends = Region::from_points(d, faces.iter().flat_map(|f| [f.0, f.1]).collect());
    let g = outside_reachable(&Region::empty(d), &ends, |p, q| {
        set.contains(&normalized(*p, *q))
    })
    .expect("non-empty window");
    Region::from_points(
        d,
        (0..g.len()).filter(|&i| !g.cells[i]).map(|i| g.point(i)).collect(),
    )
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeierlsContour {
    /// Sorted dual faces (x, y), y = x + e_k.
    pub faces: Vec<Face>,
    pub interior: Region,
}

impl PeierlsContour {
    fn from_faces(mut faces: Vec<Face>) -> PeierlsContour {
        faces.sort();
        let interior = enclosed_by(&faces);
        PeierlsContour { faces, interior }
    }

    /// |γ|, the number of faces.
    pub fn size(&self) -> usize {
        self.faces.len()
    }
}

/// Maximal connected components of the disagreement faces of σ in the sea `ext`.
pub fn peierls_contours(sigma: &Configuration, ext: i8) -> Vec<PeierlsContour> {
    let faces = disagreement_faces(sigma, ext);
    face_components(&faces)
        .into_iter()
        .map(|c| PeierlsContour::from_faces(c.into_iter().map(|i| faces[i]).collect()))
        .collect()
}

/// The open contour γ_L induced by the ω^L defect below the wall.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GammaL {
    pub faces: Vec<Face>,
    /// Sites of Λ reachable from W_L − e_d without crossing γ_L.
    pub plus_side: Region,
    /// γ_L separates 0 from −e_d (the event 0̲); otherwise 0̄.
    pub separates: bool,
}

pub fn gamma_l_extract(m: &Model, sigma: &Configuration) -> Result<GammaL> {
    let Boundary::OmegaL { l } = m.bc else {
        return Err(Error::Param("γ_L needs the ω^L boundary condition".into()));
    };
    let Some(wall) = m.wall else {
        return Err(Error::Param("γ_L needs a wall".into()));
    };
    if l < 1 {
        return Err(Error::Param(format!("ω^L needs L ≥ 1, got {l}")));
    }
    if sigma.region != m.region {
        return Err(Error::State("configuration region differs from model region".into()));
    }
    let d = m.dim();
    let ax = d - 1;
    let below = wall.layer - 1;
    let in_wl = |x: &Point| (0..ax).all(|k| x.get(k).abs() <= l);
    let lambda = &m.region;
    let mut wl_lo = vec![-l; d];
    let mut wl_hi = vec![l; d];
    wl_lo[ax] = wall.layer;
    wl_hi[ax] = wall.layer;
    let wl = Region::rect(&wl_lo, &wl_hi);
    if !wl.is_subset(lambda) {
        return Err(Error::Param("W_L is not contained in Λ".into()));
    }
    let spin = |x: &Point| -> Option<i8> {
        if let Some(s) = sigma.spin(x) {
            Some(s)
        } else if x.get(ax) == below {
            Some(if in_wl(x) { 1 } else { -1 })
        } else if x.get(ax) < below {
            None
        } else {
            Some(-1)
        }
    };
    let mut faces = Vec::new();
    for x in lambda.iter() {
        for y in x.neighbors() {
            if lambda.contains(&y) && y < *x {
                continue;
            }
            if let Some(t) = spin(&y) {
                if t != spin(x).unwrap() {
                    faces.push(normalized(*x, y));
                }
            }
        }
    }
    let mut defect = Vec::new();
    for x in wl.iter() {
        let x = x.with(ax, below);
        for y in x.neighbors() {
            if y.get(ax) == below && !in_wl(&y) {
                defect.push(normalized(x, y));
            }
        }
    }
    faces.extend(defect.iter().copied());
    faces.sort();
    faces.dedup();
    let comps = face_components(&faces);
    let defect_set: HashSet<Face> = defect.iter().copied().collect();
    let hits: Vec<&Vec<usize>> = comps
        .iter()
        .filter(|c| c.iter().any(|i| defect_set.contains(&faces[*i])))
        .collect();
    if hits.len() != 1 {
        return Err(Error::Structural(format!(
            "defect faces fall in {} components",
            hits.len()
        )));
    }
    let gamma: Vec<Face> = hits[0].iter().map(|i| faces[*i]).collect();
    let gset: HashSet<Face> = gamma.iter().copied().collect();
    let (mut lo, mut hi) = lambda.bounding_box().expect("non-empty Λ");
    for k in 0..ax {
        lo[k] -= 1;
        hi[k] += 1;
    }
    hi[ax] += 1;
    lo[ax] = wall.layer;
    let allowed = |x: &Point| {
        if x.get(ax) == below {
            return in_wl(x);
        }
        (0..d).all(|k| lo[k] <= x.get(k) && x.get(k) <= hi[k])
    };
    let origin = Point::origin(d).with(ax, wall.layer);
    let seed = origin.with(ax, below);
    let mut reached: HashSet<Point> = HashSet::from([seed]);
    let mut stack = vec![seed];
    while let Some(p) = stack.pop() {
        for q in p.neighbors() {
            if allowed(&q) && !reached.contains(&q) && !gset.contains(&normalized(p, q)) {
                reached.insert(q);
                stack.push(q);
            }
        }
    }
    Ok(GammaL {
        separates: !reached.contains(&origin),
        plus_side: lambda.filter(|x| reached.contains(x)),
        faces: gamma,
    })
}

/// Parameters of the multiscale (M,a)-partition; δ = d + 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionParams {
    pub m: f64,
    pub a: f64,
    pub r: u32,
    #[serde(default)]
    pub norm: Norm,
}

impl PartitionParams {
    pub fn new(m: f64, a: f64, r: u32) -> PartitionParams {
        PartitionParams {
            m,
            a,
            r,
            norm: Norm::L2,
        }
    }

    /// a = 3(d+1)/((α−d)∧1)
    pub fn default_a(alpha: f64, d: usize) -> f64 {
        3.0 * (d as f64 + 1.0) / (alpha - d as f64).min(1.0)
    }

    /// r = 4⌈log₂(a+1)⌉ + d + 1
    pub fn default_r(a: f64, d: usize) -> u32 {
        4 * (a + 1.0).log2().ceil() as u32 + d as u32 + 1
    }

    pub fn for_alpha(alpha: f64, d: usize, m: f64) -> Result<PartitionParams> {
        if !(alpha > d as f64) {
            return Err(Error::Param(format!("α={alpha} must exceed d={d}")));
        }
        let a = Self::default_a(alpha, d);
        let p = PartitionParams::new(m, a, Self::default_r(a, d));
        p.validate(d)?;
        Ok(p)
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if !(self.m > 0.0) || !self.m.is_finite() {
            return Err(Error::Param(format!("M={} must be positive", self.m)));
        }
        if !(self.a > d as f64) || !self.a.is_finite() {
            return Err(Error::Param(format!("a={} must exceed d={d}", self.a)));
        }
        if self.r < 1 {
            return Err(Error::Param("r must be ≥ 1".into()));
        }
        Ok(())
    }

    pub fn delta(d: usize) -> usize {
        d + 1
    }
}

/// Gap between two m-cubes given by anchors, per the norm.
fn cube_gap(a: &[i64], b: &[i64], m: u32, norm: Norm) -> f64 {
    let side = 2f64.powi(m as i32);
    let gaps = a.iter().zip(b).map(|(x, y)| {
        let t = (x - y).abs();
        if t == 0 {
            0.0
        } else {
            side * (t - 1) as f64 + 1.0
        }
    });
    match norm {
        Norm::L1 => gaps.sum(),
        Norm::L2 => gaps.map(|g| g * g).sum::<f64>().sqrt(),
        Norm::Linf => gaps.fold(0.0, f64::max),
    }
}

/// Γ^r(A): at step n, join the rn-cubes of A_n within M·2^{a r n} and remove every
/// component G with |V(A_n^G)| ≤ 2^{r n (d+1)}.
pub fn ma_partition(a: &Region, p: &PartitionParams) -> Result<Vec<Region>> {
    let d = a.dim();
    p.validate(d)?;
    let mut rest = a.clone();
    let mut classes = Vec::new();
    let mut n: u64 = 1;
    while !rest.is_empty() {
        let scale = (p.r as u64 * n).min(62) as u32;
        let mut cubes: BTreeMap<Vec<i64>, Vec<Point>> = BTreeMap::new();
        for x in rest.iter() {
            let key: Vec<i64> = x
                .coords()
                .iter()
                .map(|c| (*c as i64).div_euclid(1i64 << scale))
                .collect();
            cubes.entry(key).or_default().push(*x);
        }
        let keys: Vec<&Vec<i64>> = cubes.keys().collect();
        let reach = p.m * 2f64.powf(p.a * scale as f64);
        let mut uf = UnionFind::new(keys.len());
        for i in 0..keys.len() {
            for j in i + 1..keys.len() {
                if cube_gap(keys[i], keys[j], scale, p.norm) <= reach {
                    uf.union(i, j);
                }
            }
        }
        let limit = 2f64.powf((scale as usize * (d + 1)) as f64);
        let mut removed = Vec::new();
        for g in uf.groups() {
            let pts: Vec<Point> = g.iter().flat_map(|i| cubes[keys[*i]].clone()).collect();
            let part = Region::from_points(d, pts);
            if volume(&part).len() as f64 <= limit {
                removed.push(part);
            }
        }
        for c in &removed {
            rest = rest.difference(c);
        }
        classes.extend(removed);
        n += 1;
    }
    classes.sort_by(|x, y| x.points()[0].cmp(&y.points()[0]));
    Ok(classes)
}

/// The common refinement {γ ∩ γ′ ≠ ∅} of two partitions.
pub fn intersect_partitions(p: &[Region], q: &[Region]) -> Vec<Region> {
    let mut out: Vec<Region> = p
        .iter()
        .flat_map(|g| q.iter().map(move |h| g.intersection(h)))
        .filter(|r| !r.is_empty())
        .collect();
    out.sort_by(|x, y| x.points()[0].cmp(&y.points()[0]));
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartitionFailure {
    /// "A", "B" or "A1"
    pub condition: String,
    pub witness: (usize, usize),
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartitionReport {
    pub n_classes: usize,
    pub a_holds: bool,
    pub b_holds: bool,
    pub a1_holds: bool,
    /// Every (B) comparison was decided in exact arithmetic.
    pub b_exact: bool,
    /// min over pairs of d(γ,γ′) − M min{|V|}^{a/(d+1)}
    pub b_min_margin: f64,
    pub failures: Vec<PartitionFailure>,
}

impl PartitionReport {
    pub fn passed(&self) -> bool {
        self.a_holds && self.b_holds && self.a1_holds
    }
}

/// x = num / 2^k exactly.
fn dyadic(x: f64) -> Option<(BigUint, u32)> {
    if !x.is_finite() || x <= 0.0 {
        return None;
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | 1 << 52, exp - 1075)
    };
    let tz = mant.trailing_zeros() as i64;
    let (mant, e) = (mant >> tz, e + tz);
    if e >= 0 {
        Some((BigUint::from(mant) << e as usize, 0))
    } else {
        Some((BigUint::from(mant), (-e) as u32))
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// The exponent a/(d+1) as a small reduced fraction, when it is one.
fn small_ratio(a: f64, den: u64) -> Option<(u64, u64)> {
    let (num, k) = dyadic(a)?;
    if k > 20 {
        return None;
    }
    let num: u64 = num.try_into().ok()?;
    let q = den.checked_mul(1u64 << k)?;
    let g = gcd(num, q);
    let (p, q) = (num / g, q / g);
    (q <= 64 && p <= 4096).then_some((p, q))
}

/// Decides key > M v^{p/q} exactly; key is d² for ℓ2, d otherwise.
fn exceeds_exact(key: u64, squared: bool, m: (&BigUint, u32), v: u64, p: u64, q: u64) -> bool {
    let (mn, mk) = m;
    let t = if squared { 2 } else { 1 };
    // key^q · 2^{mk t q} > mn^{t q} · v^{t p}
    let lhs = BigUint::from(key).pow(q as u32) << (mk as usize * t * q as usize);
    let rhs = mn.pow((t as u64 * q) as u32) * BigUint::from(v).pow((t as u64 * p) as u32);
    lhs > rhs
}

fn set_distance_key(x: &Region, y: &Region, norm: Norm) -> i64 {
    let mut best = i64::MAX;
    for p in x.iter() {
        for q in y.iter() {
            best = best.min(norm.dist_key(p, q));
        }
    }
    best
}

/// Component index of every point of V(γ) \ γ (0 marks the unbounded component).
fn complement_labels(g: &Region) -> HashMap<Point, usize> {
    let mut out = HashMap::new();
    for (k, c) in hole_components(g).iter().enumerate() {
        for x in c.iter() {
            out.insert(*x, k + 1);
        }
    }
    out
}

/// Checks (A), (B) and (A1) for a candidate (M,a)-partition of A.
pub fn partition_audit(classes: &[Region], a: &Region, p: &PartitionParams) -> Result<PartitionReport> {
    let d = a.dim();
    p.validate(d)?;
    let mut failures = Vec::new();
    let mut a_holds = true;
    let mut seen: HashMap<Point, usize> = HashMap::new();
    for (i, c) in classes.iter().enumerate() {
        for x in c.iter() {
            if !a.contains(x) {
                a_holds = false;
                failures.push(PartitionFailure {
                    condition: "A".into(),
                    witness: (i, i),
                    detail: format!("{x:?} is outside A"),
                });
            }
            if let Some(&j) = seen.get(x) {
                a_holds = false;
                failures.push(PartitionFailure {
                    condition: "A".into(),
                    witness: (j, i),
                    detail: format!("{x:?} lies in two classes"),
                });
            }
            seen.insert(*x, i);
        }
    }
    if seen.len() != a.len() || a.iter().any(|x| !seen.contains_key(x)) {
        a_holds = false;
        let miss = a.iter().find(|x| !seen.contains_key(x));
        failures.push(PartitionFailure {
            condition: "A".into(),
            witness: (0, 0),
            detail: format!("classes do not cover A (first missing {miss:?})"),
        });
    }

    let vols: Vec<u64> = classes.iter().map(|c| volume(c).len() as u64).collect();
    let e = p.a / (d as f64 + 1.0);
    let ratio = small_ratio(p.a, d as u64 + 1);
    let mdy = dyadic(p.m).filter(|(_, k)| *k <= 64);
    let mut b_holds = true;
    let mut b_exact = true;
    let mut margin = f64::INFINITY;
    for i in 0..classes.len() {
        for j in i + 1..classes.len() {
            let key = set_distance_key(&classes[i], &classes[j], p.norm);
            let dist = match p.norm {
                Norm::L2 => (key as f64).sqrt(),
                _ => key as f64,
            };
            let v = vols[i].min(vols[j]);
            let rhs = p.m * (v as f64).powf(e);
            margin = margin.min(dist - rhs);
            let ok = match (ratio, &mdy) {
                (Some((pn, qn)), Some((mn, mk))) => {
                    exceeds_exact(key as u64, p.norm == Norm::L2, (mn, *mk), v, pn, qn)
                }
                _ => {
                    b_exact = false;
                    dist > rhs
                }
            };
            if !ok {
                b_holds = false;
                failures.push(PartitionFailure {
                    condition: "B".into(),
                    witness: (i, j),
                    detail: format!("distance {dist} ≤ M·{v}^{e} = {rhs}"),
                });
            }
        }
    }

    let mut a1_holds = true;
    for (i, c) in classes.iter().enumerate() {
        let labels = complement_labels(c);
        for (j, o) in classes.iter().enumerate() {
            if i == j {
                continue;
            }
            let comps: HashSet<usize> = o
                .iter()
                .filter(|x| !c.contains(x))
                .map(|x| labels.get(x).copied().unwrap_or(0))
                .collect();
            if comps.len() > 1 {
                a1_holds = false;
                failures.push(PartitionFailure {
                    condition: "A1".into(),
                    witness: (i, j),
                    detail: format!("class {j} meets {} components of the complement of class {i}", comps.len()),
                });
            }
        }
    }
    Ok(PartitionReport {
        n_classes: classes.len(),
        a_holds,
        b_holds,
        a1_holds,
        b_exact,
        b_min_margin: margin,
        failures,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Labels {
    /// lab((γ̄)⁽⁰⁾), read on ∂_in V(γ̄_ext).
    pub exterior: i8,
    /// lab(I(γ̄)⁽ᵏ⁾) in the order of `Interiors::components`.
    pub interior: Vec<i8>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Interiors {
    pub components: Vec<Region>,
    pub plus: Region,
    pub minus: Region,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LrContour {
    pub support: Region,
    pub labels: Labels,
    pub interiors: Interiors,
    pub params: PartitionParams,
}

impl LrContour {
    pub fn size(&self) -> usize {
        self.support.len()
    }

    /// V(γ) = sp(γ) ∪ I(γ)
    pub fn volume(&self) -> Region {
        self.support.union(&self.interior())
    }

    pub fn interior(&self) -> Region {
        self.interiors.plus.union(&self.interiors.minus)
    }

    /// γ̄_ext: components of the support whose volume swallows every volume it meets.
    pub fn external_part(&self) -> Region {
        external_part(&self.support)
    }
}

fn external_components(s: &Region) -> Vec<Region> {
    let comps = s.components();
    let vols: Vec<Region> = comps.iter().map(volume).collect();
    (0..comps.len())
        .filter(|&k| {
            (0..comps.len()).all(|j| {
                j == k || vols[j].intersection(&vols[k]).is_empty() || vols[j].is_subset(&vols[k])
            })
        })
        .map(|k| comps[k].clone())
        .collect()
}

fn external_part(s: &Region) -> Region {
    external_components(s)
        .iter()
        .fold(Region::empty(s.dim()), |acc, c| acc.union(c))
}

fn constant_sign(sigma: &Configuration, ext: i8, r: &Region, what: &str) -> Result<i8> {
    let b = inner_boundary(&volume(r));
    let mut signs = b.iter().map(|x| spin_at(sigma, ext, x));
    let Some(first) = signs.next() else {
        return Err(Error::Structural(format!("{what} has an empty inner boundary")));
    };
    if signs.any(|s| s != first) {
        return Err(Error::Structural(format!(
            "σ is not constant on ∂_in V of the {what} (least point {:?})",
            r.points()[0]
        )));
    }
    Ok(first)
}

fn label_support(sigma: &Configuration, ext: i8, support: Region, p: &PartitionParams) -> Result<LrContour> {
    let d = support.dim();
    let exterior = constant_sign(sigma, ext, &external_part(&support), "external part")?;
    let comps = hole_components(&support);
    let mut interior = Vec::with_capacity(comps.len());
    let (mut plus, mut minus) = (Vec::new(), Vec::new());
    for c in &comps {
        let s = constant_sign(sigma, ext, c, "interior component")?;
        interior.push(s);
        if s > 0 {
            plus.extend_from_slice(c.points());
        } else {
            minus.extend_from_slice(c.points());
        }
    }
    Ok(LrContour {
        support,
        labels: Labels { exterior, interior },
        interiors: Interiors {
            components: comps,
            plus: Region::from_points(d, plus),
            minus: Region::from_points(d, minus),
        },
        params: *p,
    })
}

/// Γ(σ): supports from ma_partition(∂σ), labels read from σ.
pub fn lr_contours(sigma: &Configuration, ext: i8, p: &PartitionParams) -> Result<Vec<LrContour>> {
    let boundary = incorrect_points(sigma, ext);
    if boundary.is_empty() {
        return Ok(Vec::new());
    }
    ma_partition(&boundary, p)?
        .into_iter()
        .map(|s| label_support(sigma, ext, s, p))
        .collect()
}

/// Contours of Γ whose external components lie in no other V(γ′).
pub fn external_contours(family: &[LrContour]) -> Vec<usize> {
    let vols: Vec<Region> = family.iter().map(|g| g.volume()).collect();
    (0..family.len())
        .filter(|&i| {
            let ext = family[i].external_part();
            (0..family.len()).all(|j| j == i || !ext.is_subset(&vols[j]))
        })
        .collect()
}

/// τ_Γ: +1 on sp(Γ), −σ on I₋(Γ), σ elsewhere, for σ in the plus sea.
pub fn flip_contours(sigma: &Configuration, family: &[LrContour]) -> Result<Configuration> {
    for (i, g) in family.iter().enumerate() {
        if g.labels.exterior != 1 {
            return Err(Error::State(format!("contour {i} has exterior label −")));
        }
        for (j, h) in family.iter().enumerate().skip(i + 1) {
            if !g.support.intersection(&h.support).is_empty() {
                return Err(Error::State(format!("contours {i} and {j} overlap")));
            }
        }
        if !g.interiors.minus.is_subset(&sigma.region) {
            return Err(Error::State(format!("I₋ of contour {i} leaves Λ")));
        }
        let fresh = label_support(sigma, 1, g.support.clone(), &g.params)
            .map_err(|e| Error::State(format!("contour {i} does not fit σ: {e}")))?;
        if fresh.labels != g.labels {
            return Err(Error::State(format!("labels of contour {i} disagree with σ")));
        }
    }
    if external_contours(family).len() != family.len() {
        return Err(Error::State("family has a non-external contour".into()));
    }
    let mut out = sigma.clone();
    for (k, x) in sigma.region.iter().enumerate() {
        if family.iter().any(|g| g.support.contains(x)) {
            out.spins[k] = 1;
        } else if family.iter().any(|g| g.interiors.minus.contains(x)) {
            out.spins[k] = -sigma.spins[k];
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EraseCost {
    /// H(σ) − H(τ_γ σ)
    pub delta_h: f64,
    /// |ΔH − decomposition into support, I₋ and B(γ) = I₊ ∪ V(γ)ᶜ sums|
    pub identity_residual: f64,
    /// ΔH − c(|γ| + F_{I₋} + F_sp)
    pub lower_bound_slack: f64,
    pub f_support: f64,
    pub f_minus: f64,
}

fn translation_kernel(m: &Model) -> Result<Vec<(Point, f64)>> {
    m.interaction
        .kernel(m.dim())
        .ok_or_else(|| Error::Unsupported("erasure audits need a translation-invariant interaction".into()))
}

fn require_plain_plus(m: &Model) -> Result<()> {
    if m.bc != Boundary::Plus || m.wall.is_some() {
        return Err(Error::Unsupported("erasure audits need plus bc and no wall".into()));
    }
    Ok(())
}

/// Energy change of erasing one contour, checked against its term-by-term decomposition.
pub fn erase_cost_audit(m: &Model, sigma: &Configuration, gamma: &LrContour, c: f64) -> Result<EraseCost> {
    require_plain_plus(m)?;
    if m.field != Field::Zero {
        return Err(Error::Unsupported("erasure decomposition is for zero field".into()));
    }
    let tau = flip_contours(sigma, std::slice::from_ref(gamma))?;
    let compiled = m.compile()?;
    let delta_h = compiled.energy(&sigma.spins) - compiled.energy(&tau.spins);
    let kernel = translation_kernel(m)?;
    let s = |x: &Point| spin_at(sigma, 1, x);
    let sp: HashSet<Point> = gamma.support.iter().copied().collect();
    let minus: HashSet<Point> = gamma.interiors.minus.iter().copied().collect();
    let in_b = |y: &Point| !sp.contains(y) && !minus.contains(y);
    let mut sum = 0.0;
    for x in gamma.support.iter() {
        let sx = s(x);
        for (v, j) in &kernel {
            let y = x.add(v);
            let sy = s(&y);
            let differ = (sx != sy) as i32 as f64;
            sum += j * differ;
            if !sp.contains(&y) {
                sum += j * differ;
            }
            if sy == -1 && in_b(&y) {
                sum -= 2.0 * j;
            }
            if sy == 1 && minus.contains(&y) {
                sum -= 2.0 * j;
            }
        }
    }
    for x in gamma.interiors.minus.iter() {
        for (v, j) in &kernel {
            let y = x.add(v);
            if in_b(&y) {
                sum -= 2.0 * j * (s(x) * s(&y)) as f64;
            }
        }
    }
    let sp = &gamma.support;
    let minus = &gamma.interiors.minus;
    let f_support = crate::model::boundary_flux(&m.interaction, sp).value;
    let f_minus = crate::model::boundary_flux(&m.interaction, minus).value;
    Ok(EraseCost {
        delta_h,
        identity_residual: (delta_h - sum).abs(),
        lower_bound_slack: delta_h - c * (gamma.size() as f64 + f_minus + f_support),
        f_support,
        f_minus,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlipIdentity {
    /// H(σ) − H(σ with I negated)
    pub delta_h: f64,
    /// |ΔH + 2Σ_{x∈I,y∉I} J_xy σ_x σ_y + 2Σ_{x∈I} h_x σ_x|
    pub residual: f64,
}

/// The simple-flip identity for negating σ on I ⊆ Λ, e.g. the interior of a Peierls contour.
pub fn flip_identity(m: &Model, sigma: &Configuration, interior: &Region) -> Result<FlipIdentity> {
    let ext = match (&m.bc, m.wall) {
        (Boundary::Plus, None) => 1,
        (Boundary::Minus, None) => -1,
        _ => return Err(Error::Unsupported("flip identity needs ± bc and no wall".into())),
    };
    if !interior.is_subset(&m.region) {
        return Err(Error::Param("flipped set leaves Λ".into()));
    }
    let mut flipped = sigma.clone();
    for (k, x) in sigma.region.iter().enumerate() {
        if interior.contains(x) {
            flipped.spins[k] = -flipped.spins[k];
        }
    }
    let compiled = m.compile()?;
    let delta_h = compiled.energy(&sigma.spins) - compiled.energy(&flipped.spins);
    let kernel = translation_kernel(m)?;
    let inside: HashSet<Point> = interior.iter().copied().collect();
    let s = |x: &Point| spin_at(sigma, ext, x) as f64;
    let mut cross = 0.0;
    let mut field = 0.0;
    for x in interior.iter() {
        field += m.field.at(x)? * s(x);
        for (v, j) in &kernel {
            let y = x.add(v);
            if !inside.contains(&y) {
                cross += j * s(x) * s(&y);
            }
        }
    }
    Ok(FlipIdentity {
        delta_h,
        residual: (delta_h + 2.0 * cross + 2.0 * field).abs(),
    })
}

/// |{k ∈ Z^d : |k|₁ = n}|
pub fn l1_shell(d: usize, n: u64) -> u64 {
    // points with j non-zero coordinates: C(d,j) 2^j C(n−1, j−1)
    if n == 0 {
        return 1;
    }
    let binom = |a: u64, b: u64| -> u64 {
        if b > a {
            return 0;
        }
        (0..b).fold(1u64, |acc, i| acc * (a - i) / (i + 1))
    };
    (1..=d as u64)
        .map(|j| binom(d as u64, j) * (1 << j) * binom(n - 1, j - 1))
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct C1Bound {
    /// 2(1 − Σ_{2≤|k|₁≤cutoff} |k|₁^{−(α−1)})
    pub c1: f64,
    /// Bound on 2Σ_{|k|₁>cutoff} |k|₁^{−(α−1)}; infinite when α ≤ d+1.
    pub tail_bound: f64,
    /// c1 − tail_bound > 0
    pub certified: bool,
}

pub fn c1_alpha(alpha: f64, d: usize, cutoff: u64) -> Result<C1Bound> {
    let df = d as f64;
    if !(alpha > df) {
        return Err(Error::Param(format!("α={alpha} ≤ d={d}: the coupling sum diverges")));
    }
    if cutoff < 2 {
        return Err(Error::Param("cutoff must be ≥ 2".into()));
    }
    let sum: f64 = (2..=cutoff)
        .rev()
        .map(|n| l1_shell(d, n) as f64 * (n as f64).powf(1.0 - alpha))
        .sum();
    let c1 = 2.0 * (1.0 - sum);
    // s_d(n) ≤ 2^{2d−1} e^{d−1} n^{d−1} and Σ_{n>R} n^{d−α} ≤ R^{d+1−α}/(α−d−1)
    let tail_bound = if alpha > df + 1.0 {
        2.0 * 2f64.powf(2.0 * df - 1.0) * (df - 1.0).exp() * (cutoff as f64).powf(df + 1.0 - alpha)
            / (alpha - df - 1.0)
    } else {
        f64::INFINITY
    };
    Ok(C1Bound {
        c1,
        tail_bound,
        certified: c1 - tail_bound > 0.0,
    })
}

/// Face layout of a small d=2 box in the plus sea, for bitboard enumeration.
#[derive(Clone, Debug)]
struct Layout {
    sites: Region,
    faces: Vec<Face>,
    ends: Vec<(Option<usize>, Option<usize>)>,
    adjacent: Vec<u64>,
    /// ray[k]: faces crossed by the ray from site k in direction +e_1
    ray: Vec<u64>,
}

impl Layout {
    fn new(b: &Region) -> Result<Layout> {
        if b.dim() != 2 || !b.is_box() {
            return Err(Error::Unsupported("contour census runs on d=2 boxes".into()));
        }
        if b.len() > 25 {
            return Err(Error::Capacity(format!("{} sites exceed the census cap of 25", b.len())));
        }
        let mut faces = Vec::new();
        for x in b.iter() {
            for y in x.neighbors() {
                if b.contains(&y) && y < *x {
                    continue;
                }
                faces.push(normalized(*x, y));
            }
        }
        faces.sort();
        if faces.len() > 64 {
            return Err(Error::Capacity(format!("{} faces exceed 64", faces.len())));
        }
        let ends = faces
            .iter()
            .map(|f| (b.index_of(&f.0), b.index_of(&f.1)))
            .collect();
        let cells: Vec<Vec<Point>> = faces.iter().map(face_cells).collect();
        let adjacent = (0..faces.len())
            .map(|i| {
                (0..faces.len())
                    .filter(|&j| j != i && cells[i].iter().any(|c| cells[j].contains(c)))
                    .fold(0u64, |m, j| m | 1 << j)
            })
            .collect();
        let ray = b
            .iter()
            .map(|x| {
                faces
                    .iter()
                    .enumerate()
                    .filter(|(_, f)| {
                        face_axis(f) == 0 && f.0.get(1) == x.get(1) && f.0.get(0) >= x.get(0)
                    })
                    .fold(0u64, |m, (j, _)| m | 1 << j)
            })
            .collect();
        Ok(Layout {
            sites: b.clone(),
            faces,
            ends,
            adjacent,
            ray,
        })
    }

    fn face_mask(&self, bits: u64) -> u64 {
        let sp = |k: Option<usize>| k.map(|k| bits >> k & 1).unwrap_or(1);
        self.ends
            .iter()
            .enumerate()
            .filter(|(_, (a, b))| sp(*a) != sp(*b))
            .fold(0u64, |m, (j, _)| m | 1 << j)
    }

    fn component(&self, mask: u64, seed: usize) -> u64 {
        let mut comp = 1u64 << seed;
        let mut frontier = comp;
        while frontier != 0 {
            let mut grow = 0u64;
            let mut f = frontier;
            while f != 0 {
                let j = f.trailing_zeros() as usize;
                f &= f - 1;
                grow |= self.adjacent[j];
            }
            frontier = grow & mask & !comp;
            comp |= frontier;
        }
        comp
    }

    fn interior(&self, comp: u64) -> u64 {
        (0..self.sites.len())
            .filter(|&k| (comp & self.ray[k]).count_ones() % 2 == 1)
            .fold(0u64, |m, k| m | 1 << k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CensusEntry {
    /// Face bitmask in the census layout.
    pub faces: u64,
    /// Interior site bitmask in the box's point order.
    pub interior: u64,
}

/// Every distinct Peierls contour with 0 ∈ Int(γ) over all σ on a small d=2 box, plus sea.
#[derive(Clone, Debug)]
pub struct Census {
    layout: Layout,
    pub entries: Vec<CensusEntry>,
}

impl Census {
    pub fn box_region(&self) -> &Region {
        &self.layout.sites
    }

    pub fn contour(&self, e: &CensusEntry) -> PeierlsContour {
        let faces = (0..self.layout.faces.len())
            .filter(|j| e.faces >> j & 1 == 1)
            .map(|j| self.layout.faces[j])
            .collect();
        PeierlsContour {
            faces,
            interior: self.interior(e),
        }
    }

    pub fn interior(&self, e: &CensusEntry) -> Region {
        Region::from_points(
            2,
            (0..self.layout.sites.len())
                .filter(|k| e.interior >> k & 1 == 1)
                .map(|k| self.layout.sites.points()[k])
                .collect(),
        )
    }

    /// |γ| ↦ number of contours
    pub fn by_size(&self) -> BTreeMap<usize, u64> {
        let mut out = BTreeMap::new();
        for e in &self.entries {
            *out.entry(e.faces.count_ones() as usize).or_insert(0) += 1;
        }
        out
    }

    /// |∂_ex I(γ)| ↦ number of contours
    pub fn by_exterior_boundary(&self) -> BTreeMap<usize, u64> {
        let mut out = BTreeMap::new();
        for e in &self.entries {
            let n = exterior_boundary(&self.interior(e)).len();
            *out.entry(n).or_insert(0) += 1;
        }
        out
    }
}

pub fn enumerate_census(b: &Region) -> Result<Census> {
    let layout = Layout::new(b)?;
    let o = Point::origin(2);
    let origin = layout
        .sites
        .index_of(&o)
        .ok_or_else(|| Error::Param("census box must contain the origin".into()))?;
    let n = layout.sites.len();
    let hi_bits = n.saturating_sub(12);
    let lo_count = 1u64 << (n - hi_bits);
    let set: HashSet<CensusEntry> = (0..1u64 << hi_bits)
        .into_par_iter()
        .fold(HashSet::new, |mut acc, hi| {
            for lo in 0..lo_count {
                let bits = hi << (n - hi_bits) | lo;
                let mut mask = layout.face_mask(bits);
                while mask != 0 {
                    let comp = layout.component(mask, mask.trailing_zeros() as usize);
                    mask &= !comp;
                    if (comp & layout.ray[origin]).count_ones() % 2 == 1 {
                        acc.insert(CensusEntry {
                            faces: comp,
                            interior: 0,
                        });
                    }
                }
            }
            acc
        })
        .reduce(HashSet::new, |mut a, b| {
            a.extend(b);
            a
        });
    let mut entries: Vec<CensusEntry> = set
        .into_iter()
        .map(|e| CensusEntry {
            interior: layout.interior(e.faces),
            ..e
        })
        .collect();
    entries.sort();
    Ok(Census { layout, entries })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CensusCount {
    pub n: usize,
    /// contours with |γ| = n
    pub by_size: u64,
    /// contours with |∂_ex I(γ)| = n
    pub by_exterior_boundary: u64,
}

pub fn contour_census(b: &Region, n: usize) -> Result<CensusCount> {
    let c = enumerate_census(b)?;
    Ok(CensusCount {
        n,
        by_size: c.by_size().get(&n).copied().unwrap_or(0),
        by_exterior_boundary: c.by_exterior_boundary().get(&n).copied().unwrap_or(0),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CensusRow {
    pub n: usize,
    pub count: u64,
    pub log_count: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CensusReport {
    pub by_size: Vec<CensusRow>,
    pub by_exterior_boundary: Vec<CensusRow>,
    /// Least-squares slope of log count against n (size indexing).
    pub fit_slope: f64,
    /// max_n log(count)/n, the smallest b with count ≤ e^{bn} (size indexing).
    pub max_rate: f64,
}

fn rows(m: &BTreeMap<usize, u64>) -> Vec<CensusRow> {
    m.iter()
        .map(|(n, c)| CensusRow {
            n: *n,
            count: *c,
            log_count: (*c as f64).ln(),
        })
        .collect()
}

pub fn census_report(c: &Census) -> CensusReport {
    let by_size = rows(&c.by_size());
    let k = by_size.len() as f64;
    let (sx, sy) = by_size
        .iter()
        .fold((0.0, 0.0), |(a, b), r| (a + r.n as f64, b + r.log_count));
    let (mx, my) = (sx / k, sy / k);
    let (num, den) = by_size.iter().fold((0.0, 0.0), |(a, b), r| {
        let dx = r.n as f64 - mx;
        (a + dx * (r.log_count - my), b + dx * dx)
    });
    CensusReport {
        fit_slope: if den > 0.0 { num / den } else { 0.0 },
        max_rate: by_size
            .iter()
            .map(|r| r.log_count / r.n as f64)
            .fold(0.0, f64::max),
        by_exterior_boundary: rows(&c.by_exterior_boundary()),
        by_size,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_box;
    use crate::model::{Interaction, Wall};

    fn p(c: &[i32]) -> Point {
        Point::new(c)
    }

    fn single_minus(r: &Region, at: &[Point]) -> Configuration {
        let mut s = Configuration::constant(r, 1);
        for x in at {
            s.spins[r.index_of(x).unwrap()] = -1;
        }
        s
    }

    #[test]
    fn incorrect_points_examples() {
        let r = Region::rect(&[-6, -6], &[6, 6]);
        assert!(incorrect_points(&Configuration::constant(&r, 1), 1).is_empty());
        let s = single_minus(&r, &[p(&[0, 0])]);
        let b = incorrect_points(&s, 1);
        assert_eq!(b.len(), 5);
        assert_eq!(incorrect_points(&s.flipped(), -1), b);
        let two = single_minus(&r, &[p(&[-5, 0]), p(&[5, 0])]);
        let b = incorrect_points(&two, 1);
        assert_eq!(b.len(), 10);
        assert_eq!(b.components().len(), 2);
    }

    #[test]
    fn peierls_examples() {
        let r = Region::rect(&[-3, -3], &[3, 3]);
        assert!(peierls_contours(&Configuration::constant(&r, 1), 1).is_empty());
        let c = peierls_contours(&single_minus(&r, &[p(&[0, 0])]), 1);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].size(), 4);
        assert_eq!(c[0].interior, Region::single(p(&[0, 0])));
        let c = peierls_contours(&single_minus(&r, &[p(&[0, 0]), p(&[1, 0])]), 1);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].size(), 6);
        assert_eq!(c[0].interior.len(), 2);
        // diagonal minuses share a dual vertex
        let c = peierls_contours(&single_minus(&r, &[p(&[0, 0]), p(&[1, 1])]), 1);
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn gamma_l_cases() {
        let b = build_box(3, 3, 2, 1).unwrap();
        let m = Model::new(b.clone(), Interaction::nn(1.0), Boundary::OmegaL { l: 1 })
            .with_wall(Wall::at(1.0, 1));
        let minus = gamma_l_extract(&m, &Configuration::constant(&b, -1)).unwrap();
        assert!(minus.separates);
        assert_eq!(minus.faces.len(), 5);
        assert!(minus.plus_side.is_empty());
        let plus = gamma_l_extract(&m, &Configuration::constant(&b, 1)).unwrap();
        assert!(!plus.separates);
        assert_eq!(plus.plus_side, b);
        let bad = m.clone().with_bc(Boundary::OmegaL { l: 0 });
        assert!(gamma_l_extract(&bad, &Configuration::constant(&b, 1)).is_err());
        let plain = m.clone().with_bc(Boundary::Plus);
        assert!(gamma_l_extract(&plain, &Configuration::constant(&b, 1)).is_err());
    }

    #[test]
    fn partition_examples() {
        let prm = PartitionParams::new(2.0, 3.0, 1);
        let one = Region::single(p(&[0, 0]));
        assert_eq!(ma_partition(&one, &prm).unwrap().len(), 1);
        let far = Region::from_coords(2, &[&[0, 0], &[100, 0]]);
        let cl = ma_partition(&far, &prm).unwrap();
        assert_eq!(cl.len(), 2);
        assert!(partition_audit(&cl, &far, &prm).unwrap().passed());
        let adj = Region::from_coords(2, &[&[0, 0], &[1, 0]]);
        assert_eq!(ma_partition(&adj, &prm).unwrap().len(), 1);
        // distance exactly M·1^{a/3} = 2
        let tie = Region::from_coords(2, &[&[0, 0], &[2, 0]]);
        let split = vec![Region::single(p(&[0, 0])), Region::single(p(&[2, 0]))];
        let rep = partition_audit(&split, &tie, &prm).unwrap();
        assert!(!rep.b_holds && rep.b_exact);
        assert_eq!(rep.failures[0].condition, "B");
        assert_eq!(rep.failures[0].witness, (0, 1));
        assert!(partition_audit(&[tie.clone()], &tie, &prm).unwrap().passed());
    }

    #[test]
    fn a1_violation_detected() {
        let ring = Region::rect(&[0, 0], &[4, 4]).difference(&Region::rect(&[1, 1], &[3, 3]));
        let inside = Region::single(p(&[2, 2]));
        let outside = Region::single(p(&[9, 9]));
        let straddle = inside.union(&outside);
        let a = ring.union(&straddle);
        let rep = partition_audit(&[ring, straddle], &a, &PartitionParams::new(0.1, 3.0, 1)).unwrap();
        assert!(!rep.a1_holds);
    }

    #[test]
    fn default_params() {
        let prm = PartitionParams::for_alpha(4.0, 2, 1.0).unwrap();
        assert_eq!(prm.a, 9.0);
        assert_eq!(prm.r, 4 * 4 + 3);
        assert!(PartitionParams::for_alpha(2.0, 2, 1.0).is_err());
    }

    #[test]
    fn lr_contour_labels() {
        let r = Region::rect(&[-45, -3], &[45, 3]);
        let prm = PartitionParams::new(1.0, 3.0, 1);
        assert!(lr_contours(&Configuration::constant(&r, 1), 1, &prm).unwrap().is_empty());
        let s = single_minus(&r, &[p(&[0, 0])]);
        let c = lr_contours(&s, 1, &prm).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].labels.exterior, 1);
        assert!(c[0].interior().is_empty());
        let islands: Vec<Point> = Region::rect(&[-41, -1], &[-39, 1])
            .union(&Region::rect(&[39, -1], &[41, 1]))
            .points()
            .to_vec();
        let s = single_minus(&r, &islands);
        let c = lr_contours(&s, 1, &prm).unwrap();
        assert_eq!(c.len(), 2);
        for g in &c {
            assert_eq!(g.labels.exterior, 1);
            assert_eq!(g.labels.interior, vec![-1]);
            assert_eq!(g.interiors.minus.len(), 1);
        }
        let t = flip_contours(&s, &c).unwrap();
        assert!(t.spins.iter().all(|v| *v == 1));
    }

    #[test]
    fn label_inconsistency_is_structural() {
        let r = Region::rect(&[-3, -3], &[3, 3]);
        let s = single_minus(&r, &[p(&[0, 0]), p(&[1, 1])]);
        let ring = Region::rect(&[-1, -1], &[1, 1]).difference(&Region::single(p(&[0, 0])));
        let err = label_support(&s, 1, ring, &PartitionParams::new(1.0, 3.0, 1));
        assert!(matches!(err, Err(Error::Structural(_))), "{err:?}");
    }

    #[test]
    fn erase_single_minus() {
        let r = Region::rect(&[-3, -3], &[3, 3]);
        let m = Model::new(r.clone(), Interaction::nn(1.5), Boundary::Plus);
        let s = single_minus(&r, &[p(&[0, 0])]);
        let c = lr_contours(&s, 1, &PartitionParams::new(1.0, 3.0, 1)).unwrap();
        let e = erase_cost_audit(&m, &s, &c[0], 0.1).unwrap();
        assert!((e.delta_h - 8.0 * 1.5).abs() < 1e-12);
        assert!(e.identity_residual < 1e-12);
        let plus = Configuration::constant(&r, 1);
        assert_eq!(flip_contours(&plus, &[]).unwrap(), plus);
        let pc = peierls_contours(&s, 1);
        let f = flip_identity(&m, &s, &pc[0].interior).unwrap();
        assert!((f.delta_h - 12.0).abs() < 1e-12 && f.residual < 1e-12);
    }

    #[test]
    fn shells_and_c1() {
        assert_eq!(l1_shell(2, 3), 12);
        assert_eq!(l1_shell(3, 1), 6);
        assert_eq!(l1_shell(3, 2), 18);
        let c = c1_alpha(6.0, 2, 200).unwrap();
        assert!(c.certified, "{c:?}");
        assert!(!c1_alpha(3.0, 2, 200).unwrap().certified);
        assert!(c1_alpha(2.0, 2, 200).is_err());
        let c2 = c1_alpha(6.0, 2, 400).unwrap();
        assert!(c2.c1 < c.c1 && c.c1 - c2.c1 <= c.tail_bound);
    }

    #[test]
    fn small_census() {
        let b = Region::rect(&[-1, -1], &[1, 1]);
        let c = enumerate_census(&b).unwrap();
        let sizes = c.by_size();
        assert_eq!(sizes.get(&0), None);
        assert_eq!(sizes[&4], 1);
        assert!(c.entries.iter().all(|e| c.interior(e).contains(&Point::origin(2))));
        assert_eq!(contour_census(&b, 0).unwrap().by_size, 0);
        // faces ↔ interior: |γ| = |∂ Int| edges
        for e in &c.entries {
            let k = crate::lattice::edge_boundary(&c.interior(e)).len();
            assert_eq!(k, e.faces.count_ones() as usize);
        }
    }
}
