//! Correlation-inequality audits over exhaustively enumerated instances.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    point_index, solve, solve_duplicated, DuplicatedModel, ExactState, Monomial,
    MAX_EXACT_SITES,
};
use crate::lattice::{exterior_boundary, Point, Region};
use crate::model::{Boundary, Field, Interaction, Model, Wall};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Inequality {
    Gks1,
    Gks2,
    Fkg,
    Dvi1,
    Dvi2,
    Dvi3,
    Dvi1Plus,
    Dvi2Plus,
    Dvi3Plus,
    Extremality,
    StateMonotonicity,
    CorrelationMonotonicity,
    Consequence,
    Chain,
}

impl Inequality {
    pub const ALL: [Inequality; 14] = [
        Inequality::Gks1,
        Inequality::Gks2,
        Inequality::Fkg,
        Inequality::Dvi1,
        Inequality::Dvi2,
        Inequality::Dvi3,
        Inequality::Dvi1Plus,
        Inequality::Dvi2Plus,
        Inequality::Dvi3Plus,
        Inequality::Extremality,
        Inequality::StateMonotonicity,
        Inequality::CorrelationMonotonicity,
        Inequality::Consequence,
        Inequality::Chain,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Inequality::Gks1 => "GKS1",
            Inequality::Gks2 => "GKS2",
            Inequality::Fkg => "FKG",
            Inequality::Dvi1 => "DVI1",
            Inequality::Dvi2 => "DVI2",
            Inequality::Dvi3 => "DVI3",
            Inequality::Dvi1Plus => "DVI1+",
            Inequality::Dvi2Plus => "DVI2+",
            Inequality::Dvi3Plus => "DVI3+",
            Inequality::Extremality => "extremality",
            Inequality::StateMonotonicity => "state-monotonicity",
            Inequality::CorrelationMonotonicity => "correlation-monotonicity",
            Inequality::Consequence => "consequence",
            Inequality::Chain => "chain",
        }
    }

    /// Expands a suite name (an inequality name or one of gks, dvi, monotonicity, all).
    pub fn suite(name: &str) -> Option<Vec<Inequality>> {
        let lower = name.to_ascii_lowercase();
        let v = match lower.as_str() {
            "all" => Inequality::ALL.to_vec(),
            "gks" => vec![Inequality::Gks1, Inequality::Gks2],
            "dvi" => vec![
                Inequality::Dvi1,
                Inequality::Dvi2,
                Inequality::Dvi3,
                Inequality::Dvi1Plus,
                Inequality::Dvi2Plus,
                Inequality::Dvi3Plus,
            ],
            "monotonicity" => vec![
                Inequality::StateMonotonicity,
                Inequality::CorrelationMonotonicity,
            ],
            _ => {
                return Inequality::ALL
                    .iter()
                    .find(|i| i.name().to_ascii_lowercase() == lower)
                    .map(|i| vec![*i])
            }
        };
        Some(v)
    }

    fn needs_nonnegative_field(&self) -> bool {
        !matches!(
            self,
            Inequality::Fkg | Inequality::Extremality | Inequality::StateMonotonicity
        )
    }

    fn uses_family(&self) -> bool {
        matches!(
            self,
            Inequality::Fkg | Inequality::Extremality | Inequality::StateMonotonicity
        )
    }

    fn duplicated(&self) -> bool {
        matches!(
            self,
            Inequality::Dvi1
                | Inequality::Dvi2
                | Inequality::Dvi3
                | Inequality::Dvi1Plus
                | Inequality::Dvi2Plus
                | Inequality::Dvi3Plus
                | Inequality::Chain
        )
    }
}

/// One parameter draw: a uniform NN coupling on a region with per-site fields.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Instance {
    pub region: Region,
    pub j: f64,
    pub beta: f64,
    pub h: Vec<f64>,
    /// Second-layer field for the free/free duplicated audits.
    pub h2: Vec<f64>,
    /// Exterior configuration; None stands for the free condition.
    pub eta: Option<BTreeMap<Point, i8>>,
    /// Wall coupling for the semi-infinite audits.
    pub lambda: f64,
    pub label: String,
}

impl Instance {
    fn model(&self, region: &Region, bc: Boundary, second: bool) -> Model {
        let src = if second { &self.h2 } else { &self.h };
        let values = region
            .iter()
            .map(|p| src[self.region.index_of(p).unwrap()])
            .collect();
        Model {
            region: region.clone(),
            interaction: Interaction::nn(self.j),
            field: Field::Table {
                sites: region.clone(),
                values,
                eps: 1.0,
            },
            wall: None,
            bc,
            beta: self.beta,
        }
    }

    fn field(&self, second: bool) -> Field {
        Field::Table {
            sites: self.region.clone(),
            values: if second { self.h2.clone() } else { self.h.clone() },
            eps: 1.0,
        }
    }

    fn eta_bc(&self) -> Boundary {
        match &self.eta {
            Some(spins) => Boundary::Explicit {
                spins: spins.clone(),
                default: Some(1),
            },
            None => Boundary::Free,
        }
    }

    fn describe(&self) -> String {
        format!("{} J={:.6} β={:.6}", self.label, self.j, self.beta)
    }
}

/// Hypothesis check; Err carries the reason an instance is skipped.
pub fn hypothesis(ineq: Inequality, inst: &Instance) -> std::result::Result<(), String> {
    let n = inst.region.len();
    if !(inst.j >= 0.0) || !(inst.beta >= 0.0) {
        return Err("needs J ≥ 0 and β ≥ 0".into());
    }
    if inst.h.len() != n || inst.h2.len() != n {
        return Err("field length differs from region size".into());
    }
    if ineq.needs_nonnegative_field() && inst.h.iter().any(|h| *h < 0.0) {
        return Err("needs a non-negative field".into());
    }
    if matches!(ineq, Inequality::Dvi1 | Inequality::Dvi2 | Inequality::Dvi3)
        && inst.h.iter().zip(&inst.h2).any(|(a, b)| a + b < 0.0 || a - b < 0.0)
    {
        return Err("needs h ± h′ ≥ 0".into());
    }
    if ineq == Inequality::Consequence && inst.lambda < 0.0 {
        return Err("needs λ ≥ 0".into());
    }
    if ineq.uses_family() && n > 6 {
        return Err("monotone families are enumerated on at most 6 sites".into());
    }
    if ineq.duplicated() && 2 * n > MAX_EXACT_SITES {
        return Err("duplicated system exceeds the enumeration cap".into());
    }
    if n > MAX_EXACT_SITES.min(16) {
        return Err("region too large for nested audits".into());
    }
    Ok(())
}

/// Seeded draws satisfying the hypotheses of `ineq` on the box with the given side lengths.
pub fn random_instances(ineq: Inequality, dims: &[i32], draws: usize, seed: u64) -> Vec<Instance> {
    let d = dims.len();
    let mut lo = vec![0; d];
    let mut hi: Vec<i32> = dims.iter().map(|k| k - 1).collect();
    if ineq == Inequality::Consequence {
        lo[d - 1] += 1;
        hi[d - 1] += 1;
    }
    let region = Region::rect(&lo, &hi);
    let ext = exterior_boundary(&region);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ineq as u64);
    (0..draws)
        .map(|k| {
            let j = rng.random_range(0.05..1.5);
            let beta = rng.random_range(0.1..1.5);
            let zero = rng.random_bool(0.2);
            let h: Vec<f64> = (0..region.len())
                .map(|_| {
                    if zero {
                        0.0
                    } else if ineq.needs_nonnegative_field() {
                        rng.random_range(0.0..1.0)
                    } else {
                        rng.random_range(-1.0..1.0)
                    }
                })
                .collect();
            let h2 = h.iter().map(|v| v * rng.random_range(-1.0..=1.0)).collect();
            let eta = if rng.random_bool(0.25) {
                None
            } else {
                Some(
                    ext.iter()
                        .map(|p| (*p, if rng.random_bool(0.5) { 1 } else { -1 }))
                        .collect(),
                )
            };
            let lambda = rng.random_range(0.0..2.0);
            Instance {
                region: region.clone(),
                j,
                beta,
                h,
                h2,
                eta,
                lambda,
                label: format!("draw {k}"),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityReport {
    pub name: String,
    pub min_slack: f64,
    pub witness: String,
    pub n_instances: usize,
    pub n_checks: u64,
    pub skipped: Vec<String>,
}

struct Tracker {
    min: f64,
    witness: String,
    count: u64,
}

impl Tracker {
    fn new() -> Tracker {
        Tracker {
            min: f64::INFINITY,
            witness: String::new(),
            count: 0,
        }
    }

    fn push<F: FnOnce() -> String>(&mut self, slack: f64, witness: F) {
        self.count += 1;
        if slack < self.min || slack.is_nan() {
            self.min = slack;
            self.witness = witness();
        }
    }
}

/// Boolean functions on n ≤ 6 sites as truth tables over the 2^n states.
fn is_monotone(t: u64, n: usize) -> bool {
    for b in 0..1u64 << n {
        if t >> b & 1 == 1 {
            for k in 0..n {
                let up = b | 1 << k;
                if t >> up & 1 == 0 {
                    return false;
                }
            }
        }
    }
    true
}

fn all_monotone(n: usize) -> Vec<u64> {
    (0..1u64 << (1 << n)).filter(|t| is_monotone(*t, n)).collect()
}

/// Every monotone function when n ≤ 4; otherwise all-plus and any-plus indicators of each S.
pub fn monotone_family(n: usize) -> Vec<u64> {
    static SMALL: [OnceLock<Vec<u64>>; 5] = [
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
    ];
    assert!(n <= 6, "monotone family needs n ≤ 6");
    if n <= 4 {
        return SMALL[n].get_or_init(|| all_monotone(n)).clone();
    }
    let mut out = Vec::new();
    for s in 1..1u64 << n {
        let mut all = 0u64;
        let mut any = 0u64;
        for b in 0..1u64 << n {
            if b & s == s {
                all |= 1 << b;
            }
            if b & s != 0 {
                any |= 1 << b;
            }
        }
        out.push(all);
        out.push(any);
    }
    out
}

fn table_mean(st: &ExactState, t: u64) -> f64 {
    st.probs
        .iter()
        .enumerate()
        .filter(|(b, _)| t >> b & 1 == 1)
        .map(|(_, p)| p)
        .sum()
}

fn pdep(x: u64, mut mask: u64) -> u64 {
    let mut out = 0;
    let mut k = 0;
    while mask != 0 {
        let low = mask & mask.wrapping_neg();
        if x >> k & 1 == 1 {
            out |= low;
        }
        k += 1;
        mask ^= low;
    }
    out
}

fn sub_region(region: &Region, mask: u64) -> Region {
    Region::from_points(
        region.dim(),
        region
            .iter()
            .enumerate()
            .filter(|(k, _)| mask >> k & 1 == 1)
            .map(|(_, p)| *p)
            .collect(),
    )
}

fn sites(region: &Region, mask: u64) -> String {
    format!("{:?}", sub_region(region, mask).points())
}

/// Re-indexes a table over subsets of Λ (local bits) by subsets of the box.
fn to_box(table: &[f64], lam: u64, nbox: usize) -> Vec<f64> {
    let mut out = vec![f64::NAN; 1 << nbox];
    for (s, v) in table.iter().enumerate() {
        out[pdep(s as u64, lam) as usize] = *v;
    }
    out
}

fn check_instance(ineq: Inequality, inst: &Instance) -> Result<Tracker> {
    let mut tr = Tracker::new();
    let r = &inst.region;
    let n = r.len();
    let full = (1u64 << n) - 1;
    let who = inst.describe();
    match ineq {
        Inequality::Gks1 | Inequality::Gks2 => {
            for bc in [Boundary::Plus, Boundary::Free] {
                let st = solve(&inst.model(r, bc.clone(), false))?;
                let c = st.all_correlations();
                for a in 0..=full {
                    if ineq == Inequality::Gks1 {
                        tr.push(c[a as usize], || format!("{who} {bc:?} A={}", sites(r, a)));
                    } else {
                        for b in 0..=full {
                            let slack = c[(a ^ b) as usize] - c[a as usize] * c[b as usize];
                            tr.push(slack, || {
                                format!("{who} {bc:?} A={} B={}", sites(r, a), sites(r, b))
                            });
                        }
                    }
                }
            }
        }
        Inequality::Fkg => {
            let fam = monotone_family(n);
            for bc in [Boundary::Plus, Boundary::Minus, inst.eta_bc()] {
                let st = solve(&inst.model(r, bc.clone(), false))?;
                let means: Vec<f64> = fam.iter().map(|t| table_mean(&st, *t)).collect();
                for (x, f) in fam.iter().enumerate() {
                    for (y, g) in fam.iter().enumerate().skip(x) {
                        let slack = table_mean(&st, f & g) - means[x] * means[y];
                        tr.push(slack, || format!("{who} {bc:?} f={f:#x} g={g:#x}"));
                    }
                }
            }
        }
        Inequality::Extremality => {
            let fam = monotone_family(n);
            let plus = solve(&inst.model(r, Boundary::Plus, false))?;
            let minus = solve(&inst.model(r, Boundary::Minus, false))?;
            for bc in [inst.eta_bc(), Boundary::Free] {
                let mid = solve(&inst.model(r, bc.clone(), false))?;
                for f in &fam {
                    let (lo, m, hi) = (table_mean(&minus, *f), table_mean(&mid, *f), table_mean(&plus, *f));
                    tr.push(m - lo, || format!("{who} {bc:?} f={f:#x} lower"));
                    tr.push(hi - m, || format!("{who} {bc:?} f={f:#x} upper"));
                }
            }
        }
        Inequality::StateMonotonicity => {
            // per Λ: P⁺(all + on S), P⁺(all − on S), P⁻(all + on S), P⁻(all − on S)
            let mut tabs: Vec<Option<[Vec<f64>; 4]>> = vec![None; 1 << n];
            for lam in 1..=full {
                let sub = sub_region(r, lam);
                let p = solve(&inst.model(&sub, Boundary::Plus, false))?;
                let m = solve(&inst.model(&sub, Boundary::Minus, false))?;
                tabs[lam as usize] = Some([
                    to_box(&p.all_plus_probabilities(), lam, n),
                    to_box(&p.all_minus_probabilities(), lam, n),
                    to_box(&m.all_plus_probabilities(), lam, n),
                    to_box(&m.all_minus_probabilities(), lam, n),
                ]);
            }
            for l2 in 1..=full {
                let t2 = tabs[l2 as usize].as_ref().unwrap();
                let mut l1 = (l2 - 1) & l2;
                while l1 > 0 {
                    let t1 = tabs[l1 as usize].as_ref().unwrap();
                    let mut s = l1;
                    while s > 0 {
                        let k = s as usize;
                        let wit = || format!("{who} Λ1={} Λ2={} S={}", sites(r, l1), sites(r, l2), sites(r, s));
                        tr.push(t1[0][k] - t2[0][k], wit);
                        tr.push(t2[1][k] - t1[1][k], wit);
                        tr.push(t1[3][k] - t2[3][k], wit);
                        tr.push(t2[2][k] - t1[2][k], wit);
                        s = (s - 1) & l1;
                    }
                    l1 = (l1 - 1) & l2;
                }
            }
        }
        Inequality::CorrelationMonotonicity => {
            let mut tabs: Vec<Option<[Vec<f64>; 2]>> = vec![None; 1 << n];
            for lam in 1..=full {
                let sub = sub_region(r, lam);
                let p = solve(&inst.model(&sub, Boundary::Plus, false))?;
                let f = solve(&inst.model(&sub, Boundary::Free, false))?;
                tabs[lam as usize] = Some([
                    to_box(&p.all_correlations(), lam, n),
                    to_box(&f.all_correlations(), lam, n),
                ]);
            }
            for l2 in 1..=full {
                let t2 = tabs[l2 as usize].as_ref().unwrap();
                let mut l1 = (l2 - 1) & l2;
                while l1 > 0 {
                    let t1 = tabs[l1 as usize].as_ref().unwrap();
                    let mut a = l1;
                    while a > 0 {
                        let k = a as usize;
                        let wit = || format!("{who} Λ1={} Λ2={} A={}", sites(r, l1), sites(r, l2), sites(r, a));
                        tr.push(t1[0][k] - t2[0][k], wit);
                        tr.push(t2[1][k] - t1[1][k], wit);
                        a = (a - 1) & l1;
                    }
                    l1 = (l1 - 1) & l2;
                }
            }
        }
        Inequality::Dvi1
        | Inequality::Dvi2
        | Inequality::Dvi3
        | Inequality::Dvi1Plus
        | Inequality::Dvi2Plus
        | Inequality::Dvi3Plus => {
            let plus = matches!(
                ineq,
                Inequality::Dvi1Plus | Inequality::Dvi2Plus | Inequality::Dvi3Plus
            );
            let dm = if plus {
                DuplicatedModel::new(inst.model(r, Boundary::Plus, false), inst.field(false), inst.eta_bc())
            } else {
                DuplicatedModel::new(inst.model(r, Boundary::Free, false), inst.field(true), Boundary::Free)
            };
            let st = solve_duplicated(&dm)?;
            let t: Vec<f64> = (0..=full).map(|a| st.monomial(&Monomial::from_masks(0, a))).collect();
            let s: Vec<f64> = (0..=full).map(|a| st.monomial(&Monomial::from_masks(a, 0))).collect();
            let tag = if plus { "(+,η)" } else { "(f,f)" };
            for a in 0..=full {
                for b in 0..=full {
                    let wit = || format!("{who} {tag} A={} B={}", sites(r, a), sites(r, b));
                    let ta = Monomial::from_masks(0, a);
                    match ineq {
                        Inequality::Dvi1 | Inequality::Dvi1Plus => {
                            let v = st.monomial(&ta.times(&Monomial::from_masks(b, 0)));
                            tr.push(v, wit);
                            tr.push(t[a as usize] * s[b as usize] - v, wit);
                        }
                        Inequality::Dvi2 | Inequality::Dvi2Plus => {
                            let v = st.monomial(&ta.times(&Monomial::from_masks(0, b)));
                            tr.push(v - t[a as usize] * t[b as usize], wit);
                        }
                        _ => {
                            let v = st.monomial(&Monomial::from_masks(a, 0).times(&Monomial::from_masks(b, 0)));
                            tr.push(v - s[a as usize] * s[b as usize], wit);
                        }
                    }
                }
            }
        }
        Inequality::Consequence => {
            let layer = r.iter().map(|p| p.get(p.dim() - 1)).min().unwrap_or(1);
            let wall = Wall::at(inst.lambda, layer);
            let plus = solve(&inst.model(r, Boundary::Plus, false).with_wall(wall))?;
            let minus = solve(&inst.model(r, Boundary::Minus, false).with_wall(wall))?;
            let (cp, cm) = (plus.all_correlations(), minus.all_correlations());
            let who = format!("{who} λ={:.6}", inst.lambda);
            for i in 0..n {
                for j in i..n {
                    let ij = ((1u64 << i) ^ (1u64 << j)) as usize;
                    let wit = || format!("{who} i={:?} j={:?}", r.points()[i], r.points()[j]);
                    tr.push(cp[ij] - cm[ij], wit);
                    let covp = cp[ij] - cp[1 << i] * cp[1 << j];
                    let covm = cm[ij] - cm[1 << i] * cm[1 << j];
                    tr.push(covm - covp, wit);
                }
            }
        }
        Inequality::Chain => {
            let dm = DuplicatedModel::new(inst.model(r, Boundary::Plus, false), inst.field(false), Boundary::Minus);
            let st = solve_duplicated(&dm)?;
            for (i, x) in r.iter().enumerate() {
                for y in x.neighbors() {
                    if let Some(j) = r.index_of(&y) {
                        let c = chain_values(&st, i, j);
                        let wit = || format!("{who} i={x:?} j={y:?}");
                        tr.push(c.min_slack, wit);
                    }
                }
            }
        }
    }
    Ok(tr)
}

pub fn audit_instances(ineq: Inequality, instances: &[Instance]) -> Result<InequalityReport> {
    let mut skipped = Vec::new();
    let usable: Vec<&Instance> = instances
        .iter()
        .filter(|inst| match hypothesis(ineq, inst) {
            Ok(()) => true,
            Err(why) => {
                skipped.push(format!("{}: {why}", inst.label));
                false
            }
        })
        .collect();
    let results: Vec<Tracker> = usable
        .par_iter()
        .map(|inst| check_instance(ineq, inst))
        .collect::<Result<_>>()?;
    let mut min_slack = f64::INFINITY;
    let mut witness = String::new();
    let mut n_checks = 0;
    for t in results {
        n_checks += t.count;
        if t.min < min_slack || t.min.is_nan() {
            min_slack = t.min;
            witness = t.witness;
        }
    }
    Ok(InequalityReport {
        name: ineq.name().to_string(),
        min_slack,
        witness,
        n_instances: usable.len(),
        n_checks,
        skipped,
    })
}

/// Runs each inequality of the suite on `draws` seeded instances on a box with side lengths `dims`.
pub fn inequality_audit(
    suite: &[Inequality],
    dims: &[i32],
    draws: usize,
    seed: u64,
) -> Result<Vec<InequalityReport>> {
    if dims.is_empty() || dims.iter().any(|k| *k < 1) {
        return Err(Error::Param("box side lengths must be ≥ 1".into()));
    }
    suite
        .iter()
        .map(|ineq| audit_instances(*ineq, &random_instances(*ineq, dims, draws, seed)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChainReport {
    pub t_i: f64,
    /// ¼⟨t_i t_j²⟩
    pub quarter_t_i_tj2: f64,
    /// ¼⟨t_i t_j⟩⟨t_j⟩
    pub quarter_tij_tj: f64,
    pub t_ij: f64,
    pub min_slack: f64,
}

fn chain_values(st: &super::DuplicatedState, i: usize, j: usize) -> ChainReport {
    let t_i = st.monomial(&Monomial::new(&[], &[i]));
    let t_j = st.monomial(&Monomial::new(&[], &[j]));
    let t_ij = st.monomial(&Monomial::new(&[], &[i, j]));
    let q2 = st.monomial(&Monomial::new(&[], &[i, j, j])) / 4.0;
    let q1 = t_ij * t_j / 4.0;
    ChainReport {
        t_i,
        quarter_t_i_tj2: q2,
        quarter_tij_tj: q1,
        t_ij,
        min_slack: (t_i - q2).min(q2 - q1),
    }
}

/// Checks ⟨t_i⟩ ≥ ¼⟨t_i t_j²⟩ ≥ ¼⟨t_i t_j⟩⟨t_j⟩ for adjacent i, j.
pub fn chain_inequality_audit(dm: &DuplicatedModel, i: &Point, j: &Point) -> Result<ChainReport> {
    if i.l1(j) != 1 {
        return Err(Error::Param(format!("{i:?} and {j:?} are not nearest neighbours")));
    }
    let c1 = dm.base.compile()?;
    let c2 = dm.second().compile()?;
    if c1.h_eff.iter().zip(&c2.h_eff).any(|(a, b)| a + b < -1e-15 || a - b < -1e-15) {
        return Err(Error::Param(
            "duplicated fields must satisfy h ± h′ ≥ 0 after absorbing the boundary".into(),
        ));
    }
    let (a, b) = (point_index(&dm.base.region, i)?, point_index(&dm.base.region, j)?);
    Ok(chain_values(&solve_duplicated(dm)?, a, b))
}

/// ⟨t_i t_j⟩ on {i, j} with plus boundary in both copies.
pub fn chain_two_site_bound(m: &Model, i: &Point, j: &Point) -> Result<f64> {
    let pair = Region::from_points(m.dim(), vec![*i, *j]);
    let mut values = Vec::new();
    for p in pair.iter() {
        values.push(m.field.at(p)?);
    }
    let f = Field::Table {
        sites: pair.clone(),
        values,
        eps: 1.0,
    };
    let base = Model {
        region: pair,
        field: f.clone(),
        wall: None,
        bc: Boundary::Plus,
        ..m.clone()
    };
    let dm = DuplicatedModel::new(base, f, Boundary::Plus);
    let st = solve_duplicated(&dm)?;
    Ok(st.monomial(&Monomial::new(&[], &[0, 1])))
}
