//! Dyadic coarse-graining of contour interiors: admissible cubes, B_ℓ, boundary pairs,
//! the symmetric-difference series, d₂ coverings and the discrete-geometry lemmas.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use num_bigint::BigUint;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::contour::{Census, CensusEntry};
use crate::lattice::{min_cube_covering, Cube, CubeCollection, Norm, Point, Region};
use crate::{Error, Result};

pub const DEFAULT_LAMBDA: f64 = 7.0 / 8.0;
pub const DEFAULT_EPSILON: f64 = 1.0;
/// Rectangles and cube pairs up to this many cells are enumerated exhaustively.
pub const EXHAUSTIVE_CELLS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeometryConstants {
    pub d: usize,
    pub lambda: f64,
    pub c: f64,
    pub b: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
}

impl GeometryConstants {
    pub fn new(d: usize, lambda: f64) -> Result<GeometryConstants> {
        if d < 2 {
            return Err(Error::Param(format!("geometry constants need d ≥ 2, got {d}")));
        }
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::Param(format!("λ must lie in (0, 1), got {lambda}")));
        }
        let c = c_closed(d, lambda);
        let b = f64::max(8.0, (2.0 * c + 1.0) * 2f64.powf(1.0 - 1.0 / d as f64));
        let b2 = b * 2f64.powi(d as i32 + 1);
        Ok(GeometryConstants {
            d,
            lambda,
            c,
            b,
            b1: 2.0 * d as f64 * b,
            b2,
            b3: b2.sqrt() * (2f64.sqrt() + 1.0),
        })
    }

    pub fn standard(d: usize) -> Result<GeometryConstants> {
        GeometryConstants::new(d, DEFAULT_LAMBDA)
    }

    /// b₂ for ladders whose consecutive cube scales differ by `step`: b·2^{step·d+1}.
    pub fn b2_step(&self, step: u32) -> f64 {
        self.b * 2f64.powi((step as usize * self.d) as i32 + 1)
    }

    /// Radius 4εb₃2^{ℓ/2}√n of the balls indexed by B_ℓ.
    pub fn covering_radius(&self, eps: f64, ell: u32, n: usize) -> f64 {
        4.0 * eps * self.b3 * 2f64.powf(ell as f64 / 2.0) * (n as f64).sqrt()
    }
}

/// c(d, λ) = 2d + (d−2)d2^{d−1}/(1−λ)
pub fn c_closed(d: usize, lambda: f64) -> f64 {
    let d = d as f64;
    2.0 * d + (d - 2.0) * d * 2f64.powf(d - 1.0) / (1.0 - lambda)
}

pub fn c_closed_exact(d: usize, lambda: Ratio<i128>) -> Ratio<i128> {
    let di = d as i128;
    let one = Ratio::from_integer(1);
    Ratio::from_integer(2 * di) + Ratio::from_integer((di - 2) * di * (1i128 << (d - 1))) / (one - lambda)
}

/// c(2, λ) = 4; c(d, λ) = (d/(d−1))[c(d−1, (λ+1)/2) + (d−1)2^{d−1}/(1−λ)].
pub fn c_recursive_exact(d: usize, lambda: Ratio<i128>) -> Ratio<i128> {
    let one = Ratio::from_integer(1);
    if d <= 2 {
        return Ratio::from_integer(4);
    }
    let di = d as i128;
    let inner = c_recursive_exact(d - 1, (lambda + one) / Ratio::from_integer(2));
    Ratio::new(di, di - 1)
        * (inner + Ratio::from_integer((di - 1) * (1i128 << (d - 1))) / (one - lambda))
}

/// 𝔠_ℓ(γ) at cube scale m = step·ℓ and its union B_ℓ(γ).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoarseRegion {
    pub level: u32,
    pub step: u32,
    pub admissible: CubeCollection,
    pub union: Region,
}

impl CoarseRegion {
    pub fn scale(&self) -> u32 {
        self.level * self.step
    }
}

/// Admissible iff 2|C∩I| ≥ |C|.
pub fn is_admissible(cube: &Cube, interior: &Region) -> bool {
    let inside = cube.points().iter().filter(|p| interior.contains(p)).count();
    2 * inside >= cube.volume()
}

pub fn coarse_region(interior: &Region, ell: u32) -> CoarseRegion {
    coarse_region_step(interior, ell, 1)
}

pub fn coarse_region_step(interior: &Region, ell: u32, step: u32) -> CoarseRegion {
    let m = ell * step;
    let mut counts: HashMap<Point, usize> = HashMap::new();
    for p in interior.iter() {
        *counts.entry(Cube::containing(p, m).anchor).or_insert(0) += 1;
    }
    let vol = 1usize << (m as usize * interior.dim());
    let admissible = CubeCollection {
        m,
        anchors: counts
            .into_iter()
            .filter(|(_, k)| 2 * k >= vol)
            .map(|(a, _)| a)
            .collect(),
    };
    CoarseRegion {
        level: ell,
        step,
        union: admissible.union_region(interior.dim()),
        admissible,
    }
}

/// ∂𝔠: pairs (C admissible, C′ not) of cubes sharing a face.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryPairs {
    pub m: u32,
    pub dim: usize,
    pub pairs: Vec<(Cube, Cube)>,
}

impl BoundaryPairs {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

pub fn boundary_pairs(cr: &CoarseRegion) -> BoundaryPairs {
    let mut pairs = Vec::new();
    for c in cr.admissible.cubes() {
        for n in c.face_neighbors() {
            if !cr.admissible.contains(&n) {
                pairs.push((c, n));
            }
        }
    }
    pairs.sort();
    BoundaryPairs {
        m: cr.admissible.m,
        dim: cr.union.dim(),
        pairs,
    }
}

/// Recovers 𝔠 by flooding from the admissible side of each pair without entering a C′.
pub fn reconstruct_admissible(bp: &BoundaryPairs) -> CubeCollection {
    let blocked: BTreeSet<Point> = bp.pairs.iter().map(|(_, o)| o.anchor).collect();
    let mut seen: BTreeSet<Point> = BTreeSet::new();
    let mut queue: VecDeque<Cube> = VecDeque::new();
    for (c, _) in &bp.pairs {
        if seen.insert(c.anchor) {
            queue.push_back(*c);
        }
    }
    while let Some(c) = queue.pop_front() {
        for n in c.face_neighbors() {
            if !blocked.contains(&n.anchor) && seen.insert(n.anchor) {
                queue.push_back(n);
            }
        }
    }
    CubeCollection {
        m: bp.m,
        anchors: seen,
    }
}

pub fn reconstruct_b(bp: &BoundaryPairs) -> Region {
    reconstruct_admissible(bp).union_region(bp.dim)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesRow {
    pub level: u32,
    pub pairs: usize,
    pub pairs_bound: f64,
    pub sym_diff: usize,
    pub sym_diff_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesReport {
    pub gamma_size: usize,
    pub rows: Vec<SeriesRow>,
    /// first level violating either bound
    pub violation: Option<u32>,
}

impl SeriesReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// |∂𝔠_ℓ| ≤ b₁|γ|/2^{m(d−1)} and |B_ℓ Δ B_{ℓ+1}| ≤ b₂2^m|γ| for ℓ ≤ ℓ_max, m = step·ℓ.
pub fn coarse_series_audit(
    interior: &Region,
    gamma_size: usize,
    ell_max: u32,
    step: u32,
    k: &GeometryConstants,
) -> Result<SeriesReport> {
    if step == 0 {
        return Err(Error::Param("scale step must be positive".into()));
    }
    if interior.dim() != k.d {
        return Err(Error::Param("constants and interior differ in dimension".into()));
    }
    let mut rows = Vec::new();
    let mut violation = None;
    let mut cur = coarse_region_step(interior, 0, step);
    for ell in 0..=ell_max {
        let next = coarse_region_step(interior, ell + 1, step);
        let m = (ell * step) as i32;
        let row = SeriesRow {
            level: ell,
            pairs: boundary_pairs(&cur).len(),
            pairs_bound: k.b1 * gamma_size as f64 / 2f64.powi(m * (k.d as i32 - 1)),
            sym_diff: cur.union.symmetric_difference(&next.union).len(),
            sym_diff_bound: k.b2_step(step) * 2f64.powi(m) * gamma_size as f64,
        };
        if violation.is_none()
            && (row.pairs as f64 > row.pairs_bound || row.sym_diff as f64 > row.sym_diff_bound)
        {
            violation = Some(ell);
        }
        rows.push(row);
        cur = next;
    }
    Ok(SeriesReport {
        gamma_size,
        rows,
        violation,
    })
}

/// Cubes meeting a fixed site list at one scale, as bitmasks over site indices.
struct LevelLayout {
    masks: Vec<u64>,
    volume: u64,
    /// face neighbours inside the list; `outside` counts the rest
    neighbors: Vec<Vec<usize>>,
    outside: Vec<u32>,
    parent: Vec<usize>,
}

fn level_layouts(sites: &Region, scales: &[u32]) -> Vec<LevelLayout> {
    let mut cubes_at: Vec<Vec<Point>> = Vec::new();
    for &m in scales {
        cubes_at.push(min_cube_covering(sites, m).anchors.into_iter().collect());
    }
    let d = sites.dim();
    let mut out = Vec::new();
    for (li, &m) in scales.iter().enumerate() {
        let anchors = &cubes_at[li];
        let index: HashMap<Point, usize> = anchors.iter().enumerate().map(|(i, a)| (*a, i)).collect();
        let masks = anchors
            .iter()
            .map(|a| {
                let c = Cube { m, anchor: *a };
                sites
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| c.contains(p))
                    .fold(0u64, |acc, (k, _)| acc | 1 << k)
            })
            .collect();
        let mut neighbors = Vec::new();
        let mut outside = Vec::new();
        for a in anchors {
            let ns: Vec<usize> = a.neighbors().filter_map(|n| index.get(&n).copied()).collect();
            outside.push((2 * d - ns.len()) as u32);
            neighbors.push(ns);
        }
        let parent = match scales.get(li + 1) {
            Some(&next) => {
                let up: HashMap<Point, usize> =
                    cubes_at[li + 1].iter().enumerate().map(|(i, a)| (*a, i)).collect();
                anchors
                    .iter()
                    .map(|a| {
                        let lifted: Vec<i32> = a.coords().iter().map(|x| x >> (next - m)).collect();
                        up[&Point::new(&lifted)]
                    })
                    .collect()
            }
            None => Vec::new(),
        };
        out.push(LevelLayout {
            masks,
            volume: 1u64 << (m as usize * d),
            neighbors,
            outside,
            parent,
        });
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CensusLevel {
    pub level: u32,
    pub pairs_bound_factor: f64,
    pub sym_diff_bound_factor: f64,
    /// max |∂𝔠_ℓ|·2^{m(d−1)}/|γ|, to compare with b₁
    pub max_pairs_ratio: f64,
    /// max |B_ℓ Δ B_{ℓ+1}|/(2^m|γ|), to compare with b₂
    pub max_sym_diff_ratio: f64,
    pub max_pairs: u64,
    pub max_sym_diff: u64,
    pub violations: u64,
}

/// Worst case over contours with |γ| = n at one level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CensusSizeRow {
    pub n: usize,
    pub level: u32,
    pub contours: u64,
    pub max_pairs: u64,
    pub pairs_bound: f64,
    pub max_sym_diff: u64,
    pub sym_diff_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CensusCoarseReport {
    pub contours: usize,
    pub levels: Vec<CensusLevel>,
    pub by_size: Vec<CensusSizeRow>,
    /// (contour, level) of the first violation in census order
    pub witness: Option<(CensusEntry, u32)>,
}

impl CensusCoarseReport {
    pub fn passed(&self) -> bool {
        self.contours > 0 && self.witness.is_none()
    }
}

#[derive(Clone, Copy, Default)]
struct LevelStats {
    pairs: u64,
    sym: u64,
}

fn census_stats(layouts: &[LevelLayout], interior: u64, out: &mut [LevelStats]) {
    let adm: Vec<u64> = layouts
        .iter()
        .map(|l| {
            l.masks
                .iter()
                .enumerate()
                .filter(|(_, m)| 2 * (interior & **m).count_ones() as u64 >= l.volume)
                .fold(0u64, |acc, (i, _)| acc | 1 << i)
        })
        .collect();
    for (li, st) in out.iter_mut().enumerate() {
        let l = &layouts[li];
        let mut pairs = 0u64;
        let mut both = 0u64;
        let mut a = adm[li];
        while a != 0 {
            let i = a.trailing_zeros() as usize;
            a &= a - 1;
            pairs += l.outside[i] as u64
                + l.neighbors[i].iter().filter(|&&j| adm[li] >> j & 1 == 0).count() as u64;
            if adm[li + 1] >> l.parent[i] & 1 == 1 {
                both += l.volume;
            }
        }
        let here = adm[li].count_ones() as u64 * l.volume;
        let up = adm[li + 1].count_ones() as u64 * layouts[li + 1].volume;
        *st = LevelStats {
            pairs,
            sym: here + up - 2 * both,
        };
    }
}

/// Both coarse-graining bounds for every contour of a census, for ℓ ≤ ℓ_max.
pub fn census_coarse_audit(census: &Census, ell_max: u32, k: &GeometryConstants) -> Result<CensusCoarseReport> {
    let sites = census.box_region();
    if sites.len() > 64 {
        return Err(Error::Capacity("census box exceeds 64 sites".into()));
    }
    if k.d != sites.dim() {
        return Err(Error::Param("constants and census differ in dimension".into()));
    }
    let scales: Vec<u32> = (0..=ell_max + 1).collect();
    let layouts = level_layouts(sites, &scales);
    if layouts.iter().any(|l| l.masks.len() > 64) {
        return Err(Error::Capacity("too many cubes for bitmask evaluation".into()));
    }
    let levels = ell_max as usize + 1;
    let dm1 = k.d as i32 - 1;
    #[derive(Clone)]
    struct Acc {
        pairs_ratio: Vec<f64>,
        sym_ratio: Vec<f64>,
        max_pairs: Vec<u64>,
        max_sym: Vec<u64>,
        violations: Vec<u64>,
        witness: Option<(usize, u32)>,
        /// indexed by |γ|·levels + level: (contours, max pairs, max sym diff)
        sizes: Vec<(u64, u64, u64)>,
    }
    const MAX_FACES: usize = 65;
    let empty = || Acc {
        sizes: vec![(0, 0, 0); MAX_FACES * levels],
        pairs_ratio: vec![0.0; levels],
        sym_ratio: vec![0.0; levels],
        max_pairs: vec![0; levels],
        max_sym: vec![0; levels],
        violations: vec![0; levels],
        witness: None,
    };
    let acc = census
        .entries
        .par_iter()
        .enumerate()
        .fold(
            || (empty(), vec![LevelStats::default(); levels]),
            |(mut acc, mut buf), (idx, e)| {
                census_stats(&layouts, e.interior, &mut buf);
                let g = e.faces.count_ones() as f64;
                for (li, st) in buf.iter().enumerate() {
                    let cell = &mut acc.sizes[e.faces.count_ones() as usize * levels + li];
                    *cell = (cell.0 + 1, cell.1.max(st.pairs), cell.2.max(st.sym));
                    let m = li as i32;
                    let pr = st.pairs as f64 * 2f64.powi(m * dm1) / g;
                    let sr = st.sym as f64 / (2f64.powi(m) * g);
                    acc.pairs_ratio[li] = acc.pairs_ratio[li].max(pr);
                    acc.sym_ratio[li] = acc.sym_ratio[li].max(sr);
                    acc.max_pairs[li] = acc.max_pairs[li].max(st.pairs);
                    acc.max_sym[li] = acc.max_sym[li].max(st.sym);
                    let bad = st.pairs as f64 > k.b1 * g / 2f64.powi(m * dm1)
                        || st.sym as f64 > k.b2 * 2f64.powi(m) * g;
                    if bad {
                        acc.violations[li] += 1;
                        if acc.witness.map(|(w, _)| idx < w).unwrap_or(true) {
                            acc.witness = Some((idx, li as u32));
                        }
                    }
                }
                (acc, buf)
            },
        )
        .map(|(a, _)| a)
        .reduce(empty, |mut a, b| {
            for li in 0..levels {
                a.pairs_ratio[li] = a.pairs_ratio[li].max(b.pairs_ratio[li]);
                a.sym_ratio[li] = a.sym_ratio[li].max(b.sym_ratio[li]);
                a.max_pairs[li] = a.max_pairs[li].max(b.max_pairs[li]);
                a.max_sym[li] = a.max_sym[li].max(b.max_sym[li]);
                a.violations[li] += b.violations[li];
            }
            for (x, y) in a.sizes.iter_mut().zip(&b.sizes) {
                *x = (x.0 + y.0, x.1.max(y.1), x.2.max(y.2));
            }
            a.witness = match (a.witness, b.witness) {
                (Some(x), Some(y)) => Some(if x.0 <= y.0 { x } else { y }),
                (x, y) => x.or(y),
            };
            a
        });
    Ok(CensusCoarseReport {
        contours: census.entries.len(),
        levels: (0..levels)
            .map(|li| CensusLevel {
                level: li as u32,
                pairs_bound_factor: k.b1,
                sym_diff_bound_factor: k.b2,
                max_pairs_ratio: acc.pairs_ratio[li],
                max_sym_diff_ratio: acc.sym_ratio[li],
                max_pairs: acc.max_pairs[li],
                max_sym_diff: acc.max_sym[li],
                violations: acc.violations[li],
            })
            .collect(),
        by_size: acc
            .sizes
            .iter()
            .enumerate()
            .filter(|(_, c)| c.0 > 0)
            .map(|(idx, c)| {
                let (n, li) = (idx / levels, (idx % levels) as i32);
                CensusSizeRow {
                    n,
                    level: li as u32,
                    contours: c.0,
                    max_pairs: c.1,
                    pairs_bound: k.b1 * n as f64 / 2f64.powi(li * dm1),
                    max_sym_diff: c.2,
                    sym_diff_bound: k.b2 * 2f64.powi(li) * n as f64,
                }
            })
            .collect(),
        witness: acc.witness.map(|(i, l)| (census.entries[i], l)),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaTally {
    pub exhaustive: bool,
    pub checked: u64,
    /// sets failing the lemma's hypothesis
    pub skipped: u64,
    pub min_slack: f64,
    pub witness: Option<Region>,
}

impl LemmaTally {
    fn new(exhaustive: bool) -> LemmaTally {
        LemmaTally {
            exhaustive,
            checked: 0,
            skipped: 0,
            min_slack: f64::INFINITY,
            witness: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.checked > 0 && self.min_slack >= 0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CubePairTally {
    pub level: u32,
    pub tally: LemmaTally,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeometryLemmaReport {
    pub constants: GeometryConstants,
    pub rect: Vec<i32>,
    pub projection: LemmaTally,
    pub cube_pairs: Vec<CubePairTally>,
}

impl GeometryLemmaReport {
    pub fn passed(&self) -> bool {
        self.projection.passed() && self.cube_pairs.iter().all(|t| t.tally.passed())
    }
}

/// A cell set with neighbour lists, subsets encoded as bitmasks.
struct Cells {
    points: Vec<Point>,
    neighbors: Vec<u64>,
}

impl Cells {
    fn new(r: &Region) -> Cells {
        let points: Vec<Point> = r.points().to_vec();
        let neighbors = points
            .iter()
            .map(|p| {
                p.neighbors()
                    .filter_map(|q| r.index_of(&q))
                    .fold(0u64, |m, j| m | 1 << j)
            })
            .collect();
        Cells { points, neighbors }
    }

    /// |∂_ex A ∩ cells| for A a subset of the cells
    fn exterior(&self, a: u64) -> u32 {
        (0..self.points.len())
            .filter(|&k| a >> k & 1 == 0 && self.neighbors[k] & a != 0)
            .count() as u32
    }

    fn region(&self, a: u64) -> Region {
        let d = self.points.first().map(|p| p.dim()).unwrap_or(1);
        Region::from_points(
            d,
            (0..self.points.len())
                .filter(|k| a >> k & 1 == 1)
                .map(|k| self.points[k])
                .collect(),
        )
    }
}

/// Masks to test: all subsets when small, otherwise seeded draws at random densities.
fn subset_masks(n: usize, samples: usize, seed: u64) -> (bool, Vec<u64>) {
    if n <= EXHAUSTIVE_CELLS {
        return (true, (0..1u64 << n).collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let masks = (0..samples)
        .map(|_| {
            let p: f64 = rng.random();
            (0..n).fold(0u64, |m, k| if rng.random::<f64>() < p { m | 1 << k } else { m })
        })
        .collect();
    (false, masks)
}

fn merge_tally(mut a: LemmaTally, b: (u64, u64, f64, u64), cells: &Cells) -> LemmaTally {
    a.checked += b.0;
    a.skipped += b.1;
    if b.0 > 0 && b.2 < a.min_slack {
        a.min_slack = b.2;
        a.witness = Some(cells.region(b.3));
    }
    a
}

/// Folds (checked, skipped, min slack, argmin) deterministically: ties go to the smaller mask.
fn fold_masks<F>(masks: &[u64], f: F) -> (u64, u64, f64, u64)
where
    F: Fn(u64) -> Option<f64> + Sync,
{
    masks
        .par_iter()
        .map(|&a| match f(a) {
            Some(s) => (1, 0, s, a),
            None => (0, 1, f64::INFINITY, u64::MAX),
        })
        .reduce(
            || (0, 0, f64::INFINITY, u64::MAX),
            |x, y| {
                let best = if (y.2, y.3) < (x.2, x.3) { (y.2, y.3) } else { (x.2, x.3) };
                (x.0 + y.0, x.1 + y.1, best.0, best.1)
            },
        )
}

/// Checks Σ|𝒫_i(A∩R)| ≤ c|∂_ex A∩R| over subsets A ⊆ R meeting |𝒫_i| ≤ λ|R_i|, and
/// 2^{ℓ(d−1)} ≤ b|∂_ex A∩U| over A ⊆ U = C_ℓ ∪ C′_ℓ with the majority condition, for each ℓ.
pub fn geometry_lemma_audit(
    rect: &[i32],
    lambda: f64,
    levels: &[u32],
    samples: usize,
    seed: u64,
) -> Result<GeometryLemmaReport> {
    let d = rect.len();
    let k = GeometryConstants::new(d, lambda)?;
    let (rmin, rmax) = (*rect.iter().min().unwrap(), *rect.iter().max().unwrap());
    if rmin < 2 || rmax > 2 * rmin {
        return Err(Error::Param(format!(
            "rectangle sides must satisfy R ≤ r_i ≤ 2R with R ≥ 2, got {rect:?}"
        )));
    }
    let cells_n: usize = rect.iter().map(|&r| r as usize).product();
    if cells_n > 64 {
        return Err(Error::Capacity(format!("{cells_n} cells exceed 64")));
    }
    let hi: Vec<i32> = rect.iter().map(|r| r - 1).collect();
    let r = Region::rect(&vec![0; d], &hi);
    let cells = Cells::new(&r);
    let lines: Vec<Vec<u64>> = (0..d)
        .map(|axis| {
            r.iter()
                .filter(|p| p.get(axis) == 0)
                .map(|x| {
                    (0..rect[axis])
                        .map(|t| r.index_of(&x.with(axis, t)).unwrap())
                        .fold(0u64, |m, j| m | 1 << j)
                })
                .collect()
        })
        .collect();
    let (exhaustive, masks) = subset_masks(cells_n, samples, seed);
    let folded = fold_masks(&masks, |a| {
        let mut total = 0usize;
        for ls in &lines {
            let proj = ls.iter().filter(|l| *l & a != 0).count();
            if proj as f64 > lambda * ls.len() as f64 {
                return None;
            }
            total += proj;
        }
        Some(k.c * cells.exterior(a) as f64 - total as f64)
    });
    let projection = merge_tally(LemmaTally::new(exhaustive), folded, &cells);

    let mut cube_pairs = Vec::new();
    for (i, &ell) in levels.iter().enumerate() {
        let side = 1i32 << ell;
        let mut tally = LemmaTally::new(true);
        for axis in 0..d {
            let mut uhi = vec![side - 1; d];
            uhi[axis] = 2 * side - 1;
            let u = Region::rect(&vec![0; d], &uhi);
            if u.len() > 64 {
                return Err(Error::Capacity(format!("level {ell} cube pair exceeds 64 cells")));
            }
            let ucells = Cells::new(&u);
            let in_c = (0..u.len())
                .filter(|&j| u.points()[j].get(axis) < side)
                .fold(0u64, |m, j| m | 1 << j);
            let vol = 1u32 << (ell as usize * d);
            let (ex, masks) = subset_masks(u.len(), samples, seed ^ (i as u64 + 1) << 32 ^ axis as u64);
            tally.exhaustive &= ex;
            let target = 2f64.powi((ell as usize * (d - 1)) as i32);
            let folded = fold_masks(&masks, |a| {
                let inside = (a & in_c).count_ones();
                let other = (a & !in_c).count_ones();
                if 2 * inside < vol || 2 * other >= vol {
                    return None;
                }
                Some(k.b * ucells.exterior(a) as f64 - target)
            });
            tally = merge_tally(tally, folded, &ucells);
        }
        cube_pairs.push(CubePairTally { level: ell, tally });
    }
    Ok(GeometryLemmaReport {
        constants: k,
        rect: rect.to_vec(),
        projection,
        cube_pairs,
    })
}

/// d₂ = 2ε√|I₁ Δ I₂|
pub fn d2_distance(i1: &Region, i2: &Region, eps: f64) -> f64 {
    2.0 * eps * (sym_diff_len(i1.points(), i2.points()) as f64).sqrt()
}

fn sym_diff_len(a: &[Point], b: &[Point]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                n += 1;
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                n += 1;
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    n + (a.len() - i) + (b.len() - j)
}

/// Greedy cover by d₂-balls centred at corpus members, visited in order.
pub fn greedy_cover(items: &[Region], radius: f64, eps: f64) -> usize {
    let mut covered = vec![false; items.len()];
    let mut centres = 0;
    for i in 0..items.len() {
        if covered[i] {
            continue;
        }
        centres += 1;
        for j in i..items.len() {
            if !covered[j] && d2_distance(&items[i], &items[j], eps) <= radius {
                covered[j] = true;
            }
        }
    }
    centres
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoveringRow {
    pub n: usize,
    pub level: u32,
    pub radius: f64,
    /// smallest valid cover found: greedy, or the B_ℓ grouping when every group fits the radius
    pub cover: usize,
    pub greedy: usize,
    pub distinct_b: usize,
    /// max d₂ between members sharing B_ℓ
    pub max_group_d2: f64,
}

impl CoveringRow {
    pub fn grouping_valid(&self) -> bool {
        self.max_group_d2 <= self.radius
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LadderRow {
    pub radius: f64,
    pub cover: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoveringEstimate {
    pub n: usize,
    pub contours: usize,
    pub distinct_interiors: usize,
    pub diameter: f64,
    pub rows: Vec<CoveringRow>,
    pub ladder: Vec<LadderRow>,
    /// upper Riemann sum of √ln N over the dyadic radius ladder
    pub dudley_integral: f64,
}

/// Covering table per contour size n; the corpus holds (|γ|, I(γ)).
pub fn covering_number_estimate(
    corpus: &[(usize, Region)],
    levels: &[u32],
    eps: f64,
    ladder_depth: u32,
) -> Result<Vec<CoveringEstimate>> {
    if !(eps >= 0.0) {
        return Err(Error::Param("ε must be non-negative".into()));
    }
    let d = match corpus.first() {
        Some((_, r)) => r.dim(),
        None => return Ok(Vec::new()),
    };
    let k = GeometryConstants::standard(d)?;
    let mut by_n: BTreeMap<usize, BTreeSet<Vec<Point>>> = BTreeMap::new();
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for (n, i) in corpus {
        by_n.entry(*n).or_default().insert(i.points().to_vec());
        *counts.entry(*n).or_insert(0) += 1;
    }
    let mut out = Vec::new();
    for (n, set) in by_n {
        let items: Vec<Region> = set.into_iter().map(|v| Region::from_points(d, v)).collect();
        let diameter = (0..items.len())
            .into_par_iter()
            .map(|i| {
                items[i + 1..]
                    .iter()
                    .map(|j| d2_distance(&items[i], j, eps))
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max);
        let mut rows = Vec::new();
        for &ell in levels {
            let radius = k.covering_radius(eps, ell, n);
            let mut groups: BTreeMap<Vec<Point>, Vec<usize>> = BTreeMap::new();
            for (idx, i) in items.iter().enumerate() {
                groups
                    .entry(coarse_region(i, ell).union.into())
                    .or_default()
                    .push(idx);
            }
            let max_group_d2 = groups
                .values()
                .map(|g| {
                    let mut w: f64 = 0.0;
                    for (a, &x) in g.iter().enumerate() {
                        for &y in &g[a + 1..] {
                            w = w.max(d2_distance(&items[x], &items[y], eps));
                        }
                    }
                    w
                })
                .fold(0.0, f64::max);
            let greedy = greedy_cover(&items, radius, eps);
            let distinct_b = groups.len();
            let cover = if max_group_d2 <= radius { greedy.min(distinct_b) } else { greedy };
            rows.push(CoveringRow {
                n,
                level: ell,
                radius,
                cover,
                greedy,
                distinct_b,
                max_group_d2,
            });
        }
        let radii: Vec<f64> = (0..=ladder_depth).map(|j| diameter / 2f64.powi(j as i32)).collect();
        let mut ladder: Vec<LadderRow> = radii
            .iter()
            .map(|&r| LadderRow {
                radius: r,
                cover: greedy_cover(&items, r, eps),
            })
            .collect();
        ladder.push(LadderRow {
            radius: 0.0,
            cover: items.len(),
        });
        let root_ln = |c: usize| (c as f64).ln().sqrt();
        let dudley_integral = ladder
            .windows(2)
            .map(|w| (w[0].radius - w[1].radius) * root_ln(w[1].cover))
            .sum();
        out.push(CoveringEstimate {
            n,
            contours: counts[&n],
            distinct_interiors: items.len(),
            diameter,
            rows,
            ladder,
            dudley_integral,
        });
    }
    Ok(out)
}

/// (|γ|, I(γ)) for every census contour with |γ| in `sizes`.
pub fn census_corpus(census: &Census, sizes: &[usize]) -> Vec<(usize, Region)> {
    census
        .entries
        .iter()
        .filter(|e| sizes.contains(&(e.faces.count_ones() as usize)))
        .map(|e| (e.faces.count_ones() as usize, census.interior(e)))
        .collect()
}

/// n_r(Λ) = ⌈log_{2^r} diam Λ⌉, taken as 0 when diam Λ ≤ 1 (single points included).
pub fn n_r(a: &Region, r: u32, norm: Norm) -> u32 {
    let mut key = 0i64;
    for (i, p) in a.points().iter().enumerate() {
        for q in &a.points()[i + 1..] {
            key = key.max(norm.dist_key(p, q));
        }
    }
    let mut n = 0u32;
    // 2^{rn} ≥ diam, compared on the norm's integer key
    loop {
        let scale = 1i128 << (r * n).min(62);
        let lhs = if norm == Norm::L2 { scale * scale } else { scale };
        if lhs >= key as i128 || r * n >= 62 {
            return n;
        }
        n += 1;
    }
}

/// V_r^ℓ(Λ) = Σ_{n=ℓ}^{n_r} |𝒞_{rn}(Λ)|
pub fn partial_volume(a: &Region, r: u32, ell: u32, norm: Norm) -> Result<u64> {
    if r == 0 {
        return Err(Error::Param("r must be positive".into()));
    }
    let top = n_r(a, r, norm);
    Ok((ell..=top)
        .map(|n| min_cube_covering(a, r * n).len() as u64)
        .sum())
}

/// N(𝒞_m, n, V) = binom(2^{(m−n)d}|𝒞_m|, V)
pub fn subordinated_count(outer: &CubeCollection, n: u32, v: u64, d: usize) -> Result<BigUint> {
    if n > outer.m {
        return Err(Error::Param(format!("inner scale {n} exceeds outer scale {}", outer.m)));
    }
    let shift = (outer.m - n) as usize * d;
    let slots = BigUint::from(outer.len()) << shift;
    let v = BigUint::from(v);
    if v > slots {
        return Ok(BigUint::ZERO);
    }
    Ok(num_integer::binomial(slots, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::enumerate_census;

    fn p(c: &[i32]) -> Point {
        Point::new(c)
    }

    #[test]
    fn constants_d2() {
        let k = GeometryConstants::standard(2).unwrap();
        assert_eq!(k.c, 4.0);
        assert!((k.b - 9.0 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(k.b1, 4.0 * k.b);
        assert_eq!(k.b2, 8.0 * k.b);
        assert_eq!(GeometryConstants::standard(3).unwrap().c, 6.0 + 96.0);
        assert!(GeometryConstants::new(1, 0.5).is_err());
        assert!(GeometryConstants::new(2, 1.0).is_err());
    }

    #[test]
    fn recursion_matches_closed_form() {
        for (num, den) in [(7, 8), (1, 2), (3, 4), (1, 3), (5, 7)] {
            let l = Ratio::new(num, den);
            for d in 2..=6 {
                let exact = c_closed_exact(d, l);
                assert_eq!(c_recursive_exact(d, l), exact);
                let f = *exact.numer() as f64 / *exact.denom() as f64;
                assert!((c_closed(d, num as f64 / den as f64) - f).abs() <= 1e-12 * f);
            }
        }
    }

    #[test]
    fn admissibility_examples() {
        let cube = Cube::containing(&p(&[0, 0]), 1);
        let full = cube.points();
        let cr = coarse_region(&full, 1);
        assert_eq!(cr.union, full);
        let half = Region::from_coords(2, &[&[0, 0], &[1, 1]]);
        assert!(is_admissible(&cube, &half));
        assert_eq!(coarse_region(&half, 1).union, full);
        let one = Region::from_coords(2, &[&[0, 0]]);
        assert!(coarse_region(&one, 1).union.is_empty());
        assert!(coarse_region(&Region::empty(2), 2).union.is_empty());
        assert_eq!(coarse_region(&one, 0).union, one);
    }

    #[test]
    fn admissibility_exhaustive_on_a_cube() {
        let cube = Cube::containing(&p(&[0, 0]), 1);
        let pts = cube.points();
        for mask in 0u32..16 {
            let i = Region::from_points(
                2,
                (0..4).filter(|k| mask >> k & 1 == 1).map(|k| pts.points()[k]).collect(),
            );
            let cr = coarse_region(&i, 1);
            assert_eq!(cr.admissible.len() == 1, mask.count_ones() >= 2);
        }
    }

    #[test]
    fn pairs_and_round_trip() {
        let cube = Cube::containing(&p(&[0, 0]), 1);
        let bp = boundary_pairs(&coarse_region(&cube.points(), 1));
        assert_eq!(bp.len(), 4);
        assert_eq!(reconstruct_b(&bp), cube.points());
        let block = Region::rect(&[0, 0], &[3, 1]);
        let bp = boundary_pairs(&coarse_region(&block, 1));
        assert_eq!(bp.len(), 6);
        assert_eq!(reconstruct_b(&bp), block);
        assert!(boundary_pairs(&coarse_region(&Region::empty(2), 1)).is_empty());
        // annulus: the hole must stay outside
        let ring = Region::rect(&[0, 0], &[5, 5]).difference(&Region::rect(&[2, 2], &[3, 3]));
        let cr = coarse_region(&ring, 1);
        assert_eq!(reconstruct_b(&boundary_pairs(&cr)), cr.union);
        assert_eq!(cr.union, ring);
    }

    #[test]
    fn single_minus_series() {
        let k = GeometryConstants::standard(2).unwrap();
        let i = Region::single(Point::origin(2));
        let rep = coarse_series_audit(&i, 4, 1, 1, &k).unwrap();
        assert!(rep.passed());
        assert_eq!(rep.rows[0].pairs, 4);
        assert_eq!(rep.rows[0].sym_diff, 1);
        assert_eq!(rep.rows[1].pairs, 0);
        // 2d/b would already fail at ℓ = 0, where |∂𝔠₀| = |γ|
        assert!(rep.rows[0].pairs as f64 > 4.0 / k.b * 4.0);
        let none = coarse_series_audit(&Region::empty(2), 0, 2, 1, &k).unwrap();
        assert!(none.rows.iter().all(|r| r.pairs == 0 && r.sym_diff == 0));
    }

    #[test]
    fn census_fast_path_matches_generic() {
        let k = GeometryConstants::standard(2).unwrap();
        let census = enumerate_census(&Region::rect(&[-1, -1], &[2, 2])).unwrap();
        let fast = census_coarse_audit(&census, 2, &k).unwrap();
        assert!(fast.passed());
        let counted: u64 = fast.by_size.iter().filter(|r| r.level == 0).map(|r| r.contours).sum();
        assert_eq!(counted as usize, census.entries.len());
        assert!(fast.by_size.iter().all(|r| r.max_pairs as f64 <= r.pairs_bound));
        let mut max_pairs = [0u64; 3];
        let mut max_sym = [0u64; 3];
        for e in &census.entries {
            let c = census.contour(e);
            let rep = coarse_series_audit(&c.interior, c.size(), 2, 1, &k).unwrap();
            assert!(rep.passed());
            for r in &rep.rows {
                max_pairs[r.level as usize] = max_pairs[r.level as usize].max(r.pairs as u64);
                max_sym[r.level as usize] = max_sym[r.level as usize].max(r.sym_diff as u64);
            }
        }
        for l in 0..3 {
            assert_eq!(fast.levels[l].max_pairs, max_pairs[l]);
            assert_eq!(fast.levels[l].max_sym_diff, max_sym[l]);
        }
        let mut stats = vec![LevelStats::default(); 3];
        let layouts = level_layouts(census.box_region(), &[0, 1, 2, 3]);
        for e in census.entries.iter().step_by(37) {
            census_stats(&layouts, e.interior, &mut stats);
            let c = census.contour(e);
            let rep = coarse_series_audit(&c.interior, c.size(), 2, 1, &k).unwrap();
            for (s, r) in stats.iter().zip(&rep.rows) {
                assert_eq!((s.pairs, s.sym), (r.pairs as u64, r.sym_diff as u64));
            }
        }
    }

    #[test]
    fn geometry_lemma_small() {
        let rep = geometry_lemma_audit(&[3, 3], DEFAULT_LAMBDA, &[0, 1], 0, 1).unwrap();
        assert!(rep.passed());
        assert!(rep.projection.exhaustive);
        assert_eq!(rep.projection.checked + rep.projection.skipped, 512);
        let l0 = &rep.cube_pairs[0].tally;
        // one point in A, one out, per orientation
        assert_eq!(l0.checked, 2);
        assert_eq!(l0.min_slack, rep.constants.b - 1.0);
        assert!(geometry_lemma_audit(&[1, 3], 0.5, &[], 0, 1).is_err());
        assert!(geometry_lemma_audit(&[2, 5], 0.5, &[], 0, 1).is_err());
    }

    #[test]
    fn geometry_lemma_sampled_beyond_cap() {
        let rep = geometry_lemma_audit(&[4, 4], DEFAULT_LAMBDA, &[2], 2000, 3).unwrap();
        assert!(!rep.projection.exhaustive);
        assert!(rep.projection.checked > 0);
        assert!(rep.passed());
    }

    #[test]
    fn d2_examples() {
        let o = Region::single(Point::origin(2));
        assert_eq!(d2_distance(&o, &Region::empty(2), 1.0), 2.0);
        assert_eq!(d2_distance(&o, &o, 0.3), 0.0);
        let a = Region::rect(&[0, 0], &[1, 1]);
        assert_eq!(d2_distance(&a, &o, 0.5), 3f64.sqrt());
    }

    #[test]
    fn covering_extremes() {
        let census = enumerate_census(&Region::rect(&[-1, -1], &[1, 1])).unwrap();
        let corpus = census_corpus(&census, &[8, 10]);
        let est = covering_number_estimate(&corpus, &[0, 1, 2], 1.0, 6).unwrap();
        for e in &est {
            assert_eq!(e.ladder[0].cover, 1);
            assert_eq!(e.ladder.last().unwrap().cover, e.distinct_interiors);
            for r in &e.rows {
                assert!(r.grouping_valid());
                assert!(r.cover <= r.distinct_b);
            }
            assert!(e.dudley_integral >= 0.0);
        }
        assert!(covering_number_estimate(&[], &[0], 1.0, 3).unwrap().is_empty());
    }

    #[test]
    fn partial_volume_examples() {
        let one = Region::single(p(&[3, 5]));
        assert_eq!(n_r(&one, 2, Norm::L1), 0);
        assert_eq!(partial_volume(&one, 2, 0, Norm::L1).unwrap(), 1);
        assert_eq!(partial_volume(&one, 2, 1, Norm::L1).unwrap(), 0);
        // l1 distance 2^r, both in the same r-cube
        let r = 2;
        let two = Region::from_coords(2, &[&[0, 0], &[2, 2]]);
        assert_eq!(n_r(&two, r, Norm::L1), 1);
        assert_eq!(min_cube_covering(&two, 0).len(), 2);
        assert_eq!(min_cube_covering(&two, r).len(), 1);
        assert_eq!(partial_volume(&two, r, 0, Norm::L1).unwrap(), 3);
        let spread = Region::from_coords(2, &[&[0, 0], &[9, 1], &[17, 30], &[40, 2]]);
        let v: Vec<u64> = (0..5).map(|l| partial_volume(&spread, 1, l, Norm::L2).unwrap()).collect();
        assert!(v.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn subordinated_examples() {
        let mut outer = CubeCollection::new(1);
        outer.anchors.insert(p(&[0, 0]));
        assert_eq!(subordinated_count(&outer, 1, 0, 2).unwrap(), BigUint::from(1u32));
        let m2 = CubeCollection { m: 2, ..outer.clone() };
        assert_eq!(subordinated_count(&m2, 1, 2, 2).unwrap(), BigUint::from(6u32));
        assert_eq!(subordinated_count(&m2, 0, 2, 2).unwrap(), BigUint::from(120u32));
        assert_eq!(subordinated_count(&m2, 0, 17, 2).unwrap(), BigUint::ZERO);
        assert!(subordinated_count(&outer, 2, 1, 2).is_err());
        // enumerate subordinated collections explicitly
        let mut two = CubeCollection::new(1);
        two.anchors.extend([p(&[0, 0]), p(&[3, -1])]);
        let inner: Vec<Point> = min_cube_covering(&two.union_region(2), 0).anchors.into_iter().collect();
        assert_eq!(inner.len(), 8);
        for v in 0..=9u64 {
            let count = (0u32..1 << 8).filter(|m| m.count_ones() as u64 == v).count();
            assert_eq!(subordinated_count(&two, 0, v, 2).unwrap(), BigUint::from(count));
        }
    }
}
