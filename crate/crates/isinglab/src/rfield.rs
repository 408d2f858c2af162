//! Random external fields: sampling, sign flips τ_A, Δ_A concentration audits,
//! boundary-normalised greedy animals and joint-measure estimates.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::exact::{log_partition, solve, MAX_EXACT_SITES};
use crate::lattice::{BoundaryKind, Point, Region};
use crate::model::{Field, Model};
use crate::stats::{self, KsResult, Z95};
use crate::{Error, Result};

/// z_{0.995}
pub const Z99: f64 = 2.575_829_303_548_901;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Disorder {
    Gaussian,
    Bernoulli,
}

/// i.i.d. unit draws in site order; the field at x is ε·values[x].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldSample {
    pub region: Region,
    pub values: Vec<f64>,
    pub dist: Disorder,
    pub eps: f64,
    pub seed: u64,
    pub stream: u64,
}

impl FieldSample {
    pub fn at(&self, x: &Point) -> Option<f64> {
        self.region.index_of(x).map(|k| self.eps * self.values[k])
    }

    pub fn to_field(&self) -> Field {
        Field::Table {
            sites: self.region.clone(),
            values: self.values.clone(),
            eps: self.eps,
        }
    }

    pub fn with_eps(&self, eps: f64) -> FieldSample {
        FieldSample { eps, ..self.clone() }
    }
}

pub fn sample_field(region: &Region, dist: Disorder, eps: f64, seed: u64) -> FieldSample {
    sample_field_stream(region, dist, eps, seed, 0)
}

/// Draws from ChaCha8 seeded by `seed` on stream `stream`; ensembles use one stream per member.
pub fn sample_field_stream(region: &Region, dist: Disorder, eps: f64, seed: u64, stream: u64) -> FieldSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let values = (0..region.len())
        .map(|_| match dist {
            Disorder::Gaussian => rng.sample(StandardNormal),
            Disorder::Bernoulli => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        })
        .collect();
    FieldSample {
        region: region.clone(),
        values,
        dist,
        eps,
        seed,
        stream,
    }
}

/// τ_A: negates the field on A.
pub fn flip_field(h: &FieldSample, a: &Region) -> Result<FieldSample> {
    if !a.is_subset(&h.region) {
        return Err(Error::Param("flip set must lie inside the field's region".into()));
    }
    let mut out = h.clone();
    for x in a.iter() {
        let k = h.region.index_of(x).unwrap();
        out.values[k] = -out.values[k];
    }
    Ok(out)
}

fn with_field(template: &Model, h: &FieldSample) -> Result<Model> {
    if h.region != template.region {
        return Err(Error::Param("field sample and model live on different regions".into()));
    }
    Ok(Model {
        field: h.to_field(),
        ..template.clone()
    })
}

fn check_exact(template: &Model) -> Result<()> {
    if template.region.len() > MAX_EXACT_SITES {
        return Err(Error::Capacity(format!(
            "{} sites exceed the exact-enumeration cap of {MAX_EXACT_SITES}",
            template.region.len()
        )));
    }
    if !(template.beta > 0.0) {
        return Err(Error::Param("Δ_A needs β > 0".into()));
    }
    Ok(())
}

/// Δ_A(h) = −(1/β) ln(Z(h)/Z(τ_A h)), the template's field replaced by h.
pub fn delta(template: &Model, h: &FieldSample, a: &Region) -> Result<f64> {
    check_exact(template)?;
    let lz = log_partition(&with_field(template, h)?)?;
    let lf = log_partition(&with_field(template, &flip_field(h, a)?)?)?;
    Ok(-(lz - lf) / template.beta)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailRow {
    pub lambda: f64,
    pub hits: usize,
    pub frequency: f64,
    pub wilson_upper: f64,
    /// 2exp(−λ²/(8ε²|A|))
    pub bound: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaTailReport {
    pub n_samples: usize,
    pub set_size: usize,
    pub eps: f64,
    pub mean: f64,
    pub se: f64,
    pub mean_ok: bool,
    pub tails: Vec<TailRow>,
    /// Δ_A − Δ_{A′} against Δ_{AΔA′} on independent draws
    pub ks: KsResult,
    /// max |Δ_A(τ_A h) + Δ_A(h)|
    pub antisymmetry_residual: f64,
    /// max |Δ_A(h) − Δ_{A′}(h) − Δ_{AΔA′}(τ_{A′}h)|
    pub composition_residual: f64,
    /// max |Δ_A| / (2εΣ_{x∈A}|h_x|), at most 1
    pub lipschitz_ratio: f64,
}

impl DeltaTailReport {
    pub fn passed(&self) -> bool {
        self.mean_ok
            && self.tails.iter().all(|t| t.passed)
            && self.ks.passed
            && self.antisymmetry_residual == 0.0
            && self.lipschitz_ratio <= 1.0 + 1e-9
    }
}

/// Slack added to the analytic tail bound before comparing with the upper Wilson limit.
pub const TAIL_SLACK: f64 = 0.01;

#[derive(Clone, Debug)]
pub struct TailAuditSpec<'a> {
    pub a: &'a Region,
    pub a_prime: &'a Region,
    pub dist: Disorder,
    pub eps: f64,
    pub n_samples: usize,
    pub lambdas: &'a [f64],
    pub seed: u64,
}

/// Per-sample values: (Δ_A, Δ_A∘τ_A, Δ_A − Δ_{A′}, Δ_{AΔA′}∘τ_{A′}, Δ_{AΔA′} on an independent draw, Σ_A|εh|).
type DeltaDraw = (f64, f64, f64, f64, f64, f64);

pub fn delta_tail_audit(template: &Model, spec: &TailAuditSpec) -> Result<DeltaTailReport> {
    check_exact(template)?;
    let (a, ap) = (spec.a, spec.a_prime);
    if !a.is_subset(&template.region) || !ap.is_subset(&template.region) {
        return Err(Error::Param("A and A′ must lie inside the region".into()));
    }
    if spec.n_samples < 2 {
        return Err(Error::Param("tail audit needs at least two samples".into()));
    }
    let sd = a.symmetric_difference(ap);
    let region = &template.region;
    let draws: Vec<DeltaDraw> = (0..spec.n_samples as u64)
        .into_par_iter()
        .map(|i| -> Result<DeltaDraw> {
            let h = sample_field_stream(region, spec.dist, spec.eps, spec.seed, 2 * i);
            let g = sample_field_stream(region, spec.dist, spec.eps, spec.seed, 2 * i + 1);
            let l = |f: &FieldSample| log_partition(&with_field(template, f)?);
            let (lh, lta, ltap) = (l(&h)?, l(&flip_field(&h, a)?)?, l(&flip_field(&h, ap)?)?);
            let beta = template.beta;
            let da = -(lh - lta) / beta;
            let da_flipped = delta(template, &flip_field(&h, a)?, a)?;
            let dap = -(lh - ltap) / beta;
            let composed = delta(template, &flip_field(&h, ap)?, &sd)?;
            let independent = delta(template, &g, &sd)?;
            let l1: f64 = a.iter().map(|x| h.at(x).unwrap().abs()).sum();
            Ok((da, da_flipped, da - dap, composed, independent, l1))
        })
        .collect::<Result<_>>()?;
    let n = draws.len();
    let da: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let est = stats::Estimate {
        mean: stats::mean(&da),
        se: (stats::variance(&da) / n as f64).sqrt(),
    };
    let tails = spec
        .lambdas
        .iter()
        .map(|&lambda| {
            let hits = da.iter().filter(|v| v.abs() >= lambda).count();
            let bound = if spec.eps == 0.0 || a.is_empty() {
                0.0
            } else {
                2.0 * (-lambda * lambda / (8.0 * spec.eps * spec.eps * a.len() as f64)).exp()
            };
            let (_, hi) = stats::wilson(hits, n, Z95);
            TailRow {
                lambda,
                hits,
                frequency: hits as f64 / n as f64,
                wilson_upper: hi,
                bound,
                passed: hi <= bound + TAIL_SLACK,
            }
        })
        .collect();
    let diff: Vec<f64> = draws.iter().map(|d| d.2).collect();
    let indep: Vec<f64> = draws.iter().map(|d| d.4).collect();
    let ks = if diff.iter().chain(&indep).all(|v| *v == 0.0) {
        KsResult {
            statistic: 0.0,
            critical: 0.0,
            passed: true,
        }
    } else {
        stats::ks_two_sample(&diff, &indep, stats::KS_C_001)
    };
    let lipschitz_ratio = draws
        .iter()
        .map(|d| if d.5 == 0.0 { if d.0 == 0.0 { 0.0 } else { f64::INFINITY } } else { d.0.abs() / (2.0 * d.5) })
        .fold(0.0, f64::max);
    Ok(DeltaTailReport {
        n_samples: n,
        set_size: a.len(),
        eps: spec.eps,
        mean: est.mean,
        se: est.se,
        mean_ok: est.mean.abs() <= Z99 * est.se || est.mean == 0.0,
        tails,
        ks,
        antisymmetry_residual: draws.iter().map(|d| (d.0 + d.1).abs()).fold(0.0, f64::max),
        composition_residual: draws.iter().map(|d| (d.2 - d.3).abs()).fold(0.0, f64::max),
        lipschitz_ratio,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnimalResult {
    pub best_set: Region,
    pub best_ratio: f64,
    pub k_max: usize,
    /// connected sets containing the origin that were scored
    pub animals: u64,
}

pub fn animal_cap(d: usize) -> usize {
    match d {
        1 => 30,
        2 => 10,
        3 => 7,
        _ => 5,
    }
}

/// Score of a set given its points in sorted order; shared with tie-breaking.
pub fn animal_ratio(sorted: &[Point], h: &FieldSample, kind: BoundaryKind) -> Option<f64> {
    let mut sum = 0.0;
    for x in sorted {
        sum += h.at(x)?;
    }
    let r = Region::from_points(h.region.dim(), sorted.to_vec());
    Some(sum / crate::lattice::boundary_size(&r, kind) as f64)
}

/// Better ratio wins; ties go to the smaller set, then the lexicographically smaller one.
pub fn animal_better(a: (f64, &[Point]), b: (f64, &[Point])) -> bool {
    a.0 > b.0 || (a.0 == b.0 && (a.1.len(), a.1) < (b.1.len(), b.1))
}

/// sup over connected A ∋ 0 with |A| ≤ k_max of Σ_{x∈A} h_x / |∂A|, by Redelmeier growth.
pub fn greedy_animal(h: &FieldSample, k_max: usize, kind: BoundaryKind) -> Result<AnimalResult> {
    let d = h.region.dim();
    if k_max == 0 {
        return Err(Error::Param("k_max must be at least 1".into()));
    }
    if k_max > animal_cap(d) {
        return Err(Error::Capacity(format!(
            "k_max = {k_max} exceeds the exhaustive cap {} in d = {d}",
            animal_cap(d)
        )));
    }
    let o = Point::origin(d);
    let reach = (k_max - 1) as i64;
    if let Some(x) = ball(d, reach).into_iter().find(|x| !h.region.contains(x)) {
        return Err(Error::Param(format!(
            "field must cover the l1 ball of radius {reach}; {x:?} is missing"
        )));
    }
    struct Search<'a> {
        h: &'a FieldSample,
        kind: BoundaryKind,
        k_max: usize,
        set: Vec<Point>,
        seen: HashSet<Point>,
        best: (f64, Vec<Point>),
        count: u64,
    }
    impl Search<'_> {
        fn grow(&mut self, mut untried: Vec<Point>) {
            while let Some(u) = untried.pop() {
                self.set.push(u);
                let mut sorted = self.set.clone();
                sorted.sort();
                let r = animal_ratio(&sorted, self.h, self.kind).unwrap();
                self.count += 1;
                if animal_better((r, &sorted), (self.best.0, &self.best.1)) {
                    self.best = (r, sorted);
                }
                if self.set.len() < self.k_max {
                    let fresh: Vec<Point> = u.neighbors().filter(|q| !self.seen.contains(q)).collect();
                    for q in &fresh {
                        self.seen.insert(*q);
                    }
                    let mut next = untried.clone();
                    next.extend(fresh.iter().copied());
                    self.grow(next);
                    for q in &fresh {
                        self.seen.remove(q);
                    }
                }
                self.set.pop();
            }
        }
    }
    let mut s = Search {
        h,
        kind,
        k_max,
        set: Vec::new(),
        seen: HashSet::from([o]),
        best: (f64::NEG_INFINITY, Vec::new()),
        count: 0,
    };
    s.grow(vec![o]);
    Ok(AnimalResult {
        best_set: Region::from_points(d, s.best.1),
        best_ratio: s.best.0,
        k_max,
        animals: s.count,
    })
}

/// Sites within l1 distance r of the origin.
pub fn ball(d: usize, r: i64) -> Vec<Point> {
    let r = r as i32;
    Region::rect(&vec![-r; d], &vec![r; d])
        .iter()
        .filter(|x| x.coords().iter().map(|c| c.abs() as i64).sum::<i64>() <= r as i64)
        .copied()
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointPeierls {
    pub n_fields: usize,
    pub eps: f64,
    pub beta: f64,
    /// 𝔼_h μ⁺_h(σ₀ = −1)
    pub q: f64,
    pub se: f64,
    /// e^{−Cβ} and e^{−C/ε²} for the supplied C
    pub energy_term: f64,
    pub field_term: f64,
    pub per_field: Vec<f64>,
}

/// Averages the exact μ_h(σ₀ = −1) over seeded field draws; the template supplies Λ, J, β and bc.
pub fn joint_peierls_estimate(
    template: &Model,
    dist: Disorder,
    eps: f64,
    n_fields: usize,
    seed: u64,
    c: f64,
) -> Result<JointPeierls> {
    if template.region.len() > MAX_EXACT_SITES {
        return Err(Error::Capacity(format!(
            "{} sites exceed the exact-enumeration cap",
            template.region.len()
        )));
    }
    if n_fields == 0 {
        return Err(Error::Param("need at least one field sample".into()));
    }
    let o = Point::origin(template.dim());
    let k = template
        .region
        .index_of(&o)
        .ok_or_else(|| Error::Param("the region must contain the origin".into()))?;
    let per_field: Vec<f64> = (0..n_fields as u64)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let h = sample_field_stream(&template.region, dist, eps, seed, i);
            let st = solve(&with_field(template, &h)?)?;
            Ok((1.0 - st.magnetization(k)) / 2.0)
        })
        .collect::<Result<_>>()?;
    let est = if n_fields >= 2 {
        stats::Estimate {
            mean: stats::mean(&per_field),
            se: (stats::variance(&per_field) / n_fields as f64).sqrt(),
        }
    } else {
        stats::Estimate {
            mean: per_field[0],
            se: f64::NAN,
        }
    };
    Ok(JointPeierls {
        n_fields,
        eps,
        beta: template.beta,
        q: est.mean,
        se: est.se,
        energy_term: (-c * template.beta).exp(),
        field_term: if eps == 0.0 { 0.0 } else { (-c / (eps * eps)).exp() },
        per_field,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BadEvent {
    pub n_fields: usize,
    pub contours: usize,
    pub eps: f64,
    pub c: f64,
    pub hits: usize,
    pub probability: f64,
    pub wilson: (f64, f64),
    /// sup_γ |Δ_{I(γ)}|/(c|γ|) per field draw
    pub sup_ratios: Vec<f64>,
}

/// P(sup_γ |Δ_{I(γ)}|/(c|γ|) > 1/4) over seeded draws; the corpus holds (|γ|, I(γ)) inside Λ.
pub fn bad_event_estimate(
    corpus: &[(usize, Region)],
    template: &Model,
    dist: Disorder,
    eps: f64,
    c: f64,
    n_fields: usize,
    seed: u64,
) -> Result<BadEvent> {
    check_exact(template)?;
    if !(c > 0.0) {
        return Err(Error::Param("c must be positive".into()));
    }
    if corpus.iter().any(|(_, i)| !i.is_subset(&template.region)) {
        return Err(Error::Param("every interior must lie inside the region".into()));
    }
    let mut distinct: HashMap<Vec<Point>, usize> = HashMap::new();
    for (n, i) in corpus {
        let e = distinct.entry(i.points().to_vec()).or_insert(*n);
        *e = (*e).min(*n);
    }
    let mut sets: Vec<(Vec<Point>, usize)> = distinct.into_iter().collect();
    sets.sort();
    let d = template.dim();
    let sup_ratios: Vec<f64> = (0..n_fields as u64)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let h = sample_field_stream(&template.region, dist, eps, seed, i);
            let lh = log_partition(&with_field(template, &h)?)?;
            let mut sup: f64 = 0.0;
            for (pts, n) in &sets {
                let a = Region::from_points(d, pts.clone());
                let lf = log_partition(&with_field(template, &flip_field(&h, &a)?)?)?;
                let delta = -(lh - lf) / template.beta;
                sup = sup.max(delta.abs() / (c * *n as f64));
            }
            Ok(sup)
        })
        .collect::<Result<_>>()?;
    let hits = sup_ratios.iter().filter(|r| **r > 0.25).count();
    Ok(BadEvent {
        n_fields,
        contours: sets.len(),
        eps,
        c,
        hits,
        probability: if n_fields == 0 { 0.0 } else { hits as f64 / n_fields as f64 },
        wilson: stats::wilson(hits, n_fields, Z95),
        sup_ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_box;
    use crate::model::{Boundary, Interaction};

    fn p(c: &[i32]) -> Point {
        Point::new(c)
    }

    #[test]
    fn sampling_is_deterministic() {
        let r = Region::rect(&[0, 0], &[9, 9]);
        let a = sample_field(&r, Disorder::Gaussian, 1.0, 5);
        assert_eq!(a, sample_field(&r, Disorder::Gaussian, 1.0, 5));
        assert_ne!(a.values, sample_field(&r, Disorder::Gaussian, 1.0, 6).values);
        let b = sample_field(&r, Disorder::Bernoulli, 0.5, 5);
        assert!(b.values.iter().all(|v| *v == 1.0 || *v == -1.0));
        assert_eq!(b.at(&p(&[0, 0])).unwrap().abs(), 0.5);
    }

    #[test]
    fn gaussian_moments() {
        let r = Region::rect(&[0, 0], &[316, 316]);
        let h = sample_field(&r, Disorder::Gaussian, 1.0, 11);
        assert!(h.values.len() >= 100_000);
        assert!(stats::mean(&h.values).abs() <= 0.02);
        assert!((stats::variance(&h.values) - 1.0).abs() <= 5.0 * (2.0 / h.values.len() as f64).sqrt());
    }

    #[test]
    fn flips_compose() {
        let r = Region::rect(&[0, 0], &[3, 3]);
        let h = sample_field(&r, Disorder::Gaussian, 1.0, 1);
        let a = Region::from_coords(2, &[&[0, 0], &[1, 2], &[3, 3]]);
        let b = Region::from_coords(2, &[&[1, 2], &[2, 2]]);
        assert_eq!(flip_field(&h, &Region::empty(2)).unwrap(), h);
        assert_eq!(flip_field(&flip_field(&h, &a).unwrap(), &a).unwrap(), h);
        assert_eq!(
            flip_field(&flip_field(&h, &b).unwrap(), &a).unwrap(),
            flip_field(&h, &a.symmetric_difference(&b)).unwrap()
        );
        assert!(flip_field(&h, &Region::from_coords(2, &[&[7, 7]])).is_err());
    }

    #[test]
    fn delta_vanishes_when_a_is_the_free_region() {
        let one = Region::single(Point::origin(2));
        let m = Model::new(one.clone(), Interaction::nn(1.0), Boundary::Free);
        let h = sample_field(&one, Disorder::Gaussian, 1.0, 3);
        assert!(delta(&m, &h, &one).unwrap().abs() < 1e-15);
        let spec = TailAuditSpec {
            a: &one,
            a_prime: &Region::empty(2),
            dist: Disorder::Gaussian,
            eps: 1.0,
            n_samples: 50,
            lambdas: &[0.5, 1.0],
            seed: 2,
        };
        let rep = delta_tail_audit(&m, &spec).unwrap();
        assert!(rep.tails.iter().all(|t| t.hits == 0));
        assert!(rep.mean.abs() < 1e-15);
    }

    #[test]
    fn small_tail_audit() {
        let b = build_box(1, 1, 2, 0).unwrap();
        let m = Model::new(b.clone(), Interaction::nn(1.0), Boundary::Plus).with_beta(0.7);
        let a = Region::from_coords(2, &[&[0, 0], &[1, 0]]);
        let ap = Region::from_coords(2, &[&[1, 0], &[1, 1]]);
        let spec = TailAuditSpec {
            a: &a,
            a_prime: &ap,
            dist: Disorder::Gaussian,
            eps: 0.5,
            n_samples: 400,
            lambdas: &[0.5, 1.0, 2.0],
            seed: 9,
        };
        let rep = delta_tail_audit(&m, &spec).unwrap();
        assert_eq!(rep.antisymmetry_residual, 0.0);
        assert!(rep.composition_residual < 1e-10);
        assert!(rep.lipschitz_ratio <= 1.0);
        assert!(rep.passed(), "{rep:?}");
        let zero = delta_tail_audit(&m, &TailAuditSpec { eps: 0.0, ..spec }).unwrap();
        assert!(zero.tails.iter().all(|t| t.hits == 0));
    }

    /// Every connected set containing the origin, by breadth-first closure over sizes.
    fn oracle(h: &FieldSample, k: usize, kind: BoundaryKind) -> (f64, Vec<Point>, usize) {
        let d = h.region.dim();
        let mut layer: std::collections::BTreeSet<Vec<Point>> = [vec![Point::origin(d)]].into();
        let mut best = (f64::NEG_INFINITY, Vec::new());
        let mut total = 0;
        for size in 1..=k {
            for s in &layer {
                total += 1;
                let r = animal_ratio(s, h, kind).unwrap();
                if animal_better((r, s), (best.0, &best.1)) {
                    best = (r, s.clone());
                }
            }
            if size == k {
                break;
            }
            let mut next = std::collections::BTreeSet::new();
            for s in &layer {
                for x in s {
                    for q in x.neighbors() {
                        if !s.contains(&q) {
                            let mut t = s.clone();
                            t.push(q);
                            t.sort();
                            next.insert(t);
                        }
                    }
                }
            }
            layer = next;
        }
        (best.0, best.1, total)
    }

    #[test]
    fn animal_matches_oracle() {
        let r = Region::rect(&[-6, -6], &[6, 6]);
        for seed in 0..4 {
            let h = sample_field(&r, Disorder::Gaussian, 1.0, seed);
            for kind in [BoundaryKind::Edge, BoundaryKind::Inner, BoundaryKind::Exterior] {
                let got = greedy_animal(&h, 6, kind).unwrap();
                let (ratio, set, total) = oracle(&h, 6, kind);
                assert_eq!(got.best_ratio, ratio);
                assert_eq!(got.best_set.points(), &set[..]);
                assert_eq!(got.animals as usize, total);
            }
        }
    }

    #[test]
    fn animal_edge_cases() {
        let r = Region::rect(&[-3, -3], &[3, 3]);
        let h = sample_field(&r, Disorder::Gaussian, 1.0, 4);
        let one = greedy_animal(&h, 1, BoundaryKind::Edge).unwrap();
        assert_eq!(one.best_ratio, h.at(&Point::origin(2)).unwrap() / 4.0);
        // fixed polyominoes with n cells, one per choice of origin cell: 1, 2·2, 6·3, 19·4
        assert_eq!(greedy_animal(&h, 4, BoundaryKind::Edge).unwrap().animals, 1 + 4 + 18 + 76);
        let neg = FieldSample {
            values: vec![-1.0; r.len()],
            ..h.clone()
        };
        let g = greedy_animal(&neg, 4, BoundaryKind::Edge).unwrap();
        assert_eq!(g.best_set, Region::single(Point::origin(2)));
        // a strongly negative origin is diluted by weakly negative neighbours
        let mut dil = neg.clone();
        dil.values.iter_mut().for_each(|v| *v = -0.1);
        dil.values[r.index_of(&Point::origin(2)).unwrap()] = -10.0;
        assert!(greedy_animal(&dil, 3, BoundaryKind::Edge).unwrap().best_set.len() > 1);
        assert!(matches!(greedy_animal(&h, 11, BoundaryKind::Edge), Err(Error::Capacity(_))));
        assert!(matches!(greedy_animal(&h, 5, BoundaryKind::Edge), Err(Error::Param(_))));
    }

    #[test]
    fn joint_peierls_limits() {
        let b = build_box(1, 1, 2, 0).unwrap();
        let m = Model::new(b, Interaction::nn(1.0), Boundary::Plus).with_beta(4.0);
        let cold = joint_peierls_estimate(&m, Disorder::Gaussian, 0.0, 3, 1, 1.0).unwrap();
        assert!(cold.q <= 0.05);
        let hot = joint_peierls_estimate(&m.clone().with_beta(0.0), Disorder::Gaussian, 1.0, 3, 1, 1.0).unwrap();
        assert_eq!(hot.q, 0.5);
        let warm = m.with_beta(0.6);
        let qs: Vec<f64> = [0.0, 0.5, 1.0, 2.0]
            .iter()
            .map(|&e| joint_peierls_estimate(&warm, Disorder::Gaussian, e, 200, 7, 1.0).unwrap().q)
            .collect();
        assert!(qs.windows(2).all(|w| w[0] < w[1]), "{qs:?}");
    }

    #[test]
    fn bad_event_trends() {
        let b = build_box(1, 1, 2, 0).unwrap();
        let census = crate::contour::enumerate_census(&b).unwrap();
        let corpus: Vec<(usize, Region)> = census
            .entries
            .iter()
            .map(|e| (e.faces.count_ones() as usize, census.interior(e)))
            .collect();
        let m = Model::new(b, Interaction::nn(1.0), Boundary::Plus).with_beta(1.0);
        let run = |eps: f64, c: f64| bad_event_estimate(&corpus, &m, Disorder::Gaussian, eps, c, 300, 5).unwrap();
        assert_eq!(run(0.0, 0.1).hits, 0);
        let (lo, hi) = (run(0.25, 0.1), run(0.5, 0.1));
        assert!(lo.probability <= hi.probability);
        assert!(hi.hits > 0);
        assert_eq!(run(0.5, 1e9).hits, 0);
    }
}
