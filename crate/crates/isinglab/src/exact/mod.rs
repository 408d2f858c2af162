//! Exact finite-volume Gibbs states by exhaustive enumeration.
//!
//! States are indexed by bit masks over the region's point order: bit k set
//! means σ_k = +1.

mod audit;
mod coupling;

pub use audit::*;
pub use coupling::*;

use rayon::prelude::*;
use serde::Serialize;

use crate::lattice::{reflect_region, Point, Region};
use crate::model::{Boundary, Compiled, Configuration, Field, Interaction, Model};
use crate::{Error, Result};

pub const MAX_EXACT_SITES: usize = 24;

const CHUNK_BITS: usize = 12;

/// The Gibbs distribution over all 2^n configurations of a compiled model.
#[derive(Clone, Debug)]
pub struct ExactState {
    pub region: Region,
    pub log_z: f64,
    pub probs: Vec<f64>,
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap.min(30) {
        return Err(Error::Capacity(format!(
            "{n} sites exceed the exact-enumeration cap of {}",
            cap.min(30)
        )));
    }
    Ok(())
}

fn spins_of(bits: u64, n: usize) -> Vec<i8> {
    (0..n).map(|k| if bits >> k & 1 == 1 { 1 } else { -1 }).collect()
}

/// Fills out[g] = −βH(base | g) for every g < out.len(), walking a Gray code.
fn fill_log_weights(c: &Compiled, base: u64, out: &mut [f64]) {
    let n = c.n();
    let mut s = spins_of(base, n);
    let mut e = c.energy(&s);
    out[0] = -c.beta * e;
    for k in 1..out.len() {
        let a = k.trailing_zeros() as usize;
        e += 2.0 * s[a] as f64 * c.local_field(&s, a);
        s[a] = -s[a];
        out[k ^ (k >> 1)] = -c.beta * e;
    }
}

/// Σ_k exp(v_k − m) as chunk sums combined left to right.
fn chunked_sum(v: &[f64], cb: usize) -> f64 {
    let sums: Vec<f64> = v.par_chunks(1 << cb).map(|ch| ch.iter().sum::<f64>()).collect();
    sums.iter().sum()
}

pub fn enumerate(c: &Compiled, cap: usize) -> Result<ExactState> {
    let n = c.n();
    check_cap(n, cap)?;
    let cb = n.min(CHUNK_BITS);
    let mut w = vec![0.0; 1usize << n];
    w.par_chunks_mut(1 << cb)
        .enumerate()
        .for_each(|(q, out)| fill_log_weights(c, (q as u64) << cb, out));
    let max = w.par_iter().cloned().reduce(|| f64::NEG_INFINITY, f64::max);
    w.par_iter_mut().for_each(|v| *v = (*v - max).exp());
    let total = chunked_sum(&w, cb);
    w.par_iter_mut().for_each(|v| *v /= total);
    Ok(ExactState {
        region: c.region.clone(),
        log_z: max + total.ln(),
        probs: w,
    })
}

pub fn solve(m: &Model) -> Result<ExactState> {
    solve_capped(m, MAX_EXACT_SITES)
}

pub fn solve_capped(m: &Model, cap: usize) -> Result<ExactState> {
    check_cap(m.region.len(), cap)?;
    enumerate(&m.compile()?, cap)
}

pub fn log_partition(m: &Model) -> Result<f64> {
    Ok(solve(m)?.log_z)
}

/// log Z of a compiled model without keeping the distribution.
pub fn log_partition_compiled(c: &Compiled, cap: usize) -> Result<f64> {
    let n = c.n();
    check_cap(n, cap)?;
    let cb = n.min(CHUNK_BITS);
    let chunks: Vec<(f64, f64)> = (0..1usize << (n - cb))
        .into_par_iter()
        .map(|q| {
            let mut out = vec![0.0; 1 << cb];
            fill_log_weights(c, (q as u64) << cb, &mut out);
            let m = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (m, out.iter().map(|v| (v - m).exp()).sum())
        })
        .collect();
    let max = chunks.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = chunks.iter().map(|(m, s)| s * (m - max).exp()).sum();
    Ok(max + total.ln())
}

/// Gathers the bits of x selected by mask into the low bits.
pub fn pext(x: u64, mut mask: u64) -> u64 {
    let mut out = 0;
    let mut k = 0;
    while mask != 0 {
        let low = mask & mask.wrapping_neg();
        if x & low != 0 {
            out |= 1 << k;
        }
        k += 1;
        mask ^= low;
    }
    out
}

impl ExactState {
    pub fn n(&self) -> usize {
        self.region.len()
    }

    pub fn prob(&self, bits: u64) -> f64 {
        self.probs[bits as usize]
    }

    pub fn expect<F: Fn(u64) -> f64 + Sync>(&self, f: F) -> f64 {
        let cb = self.n().min(CHUNK_BITS);
        let sums: Vec<f64> = self
            .probs
            .par_chunks(1 << cb)
            .enumerate()
            .map(|(q, ch)| {
                let base = (q as u64) << cb;
                ch.iter()
                    .enumerate()
                    .map(|(k, p)| p * f(base | k as u64))
                    .sum::<f64>()
            })
            .collect();
        sums.iter().sum()
    }

    /// ⟨f⟩ for an observable on configurations.
    pub fn expect_config<F: Fn(&Configuration) -> f64 + Sync>(&self, f: F) -> f64 {
        self.expect(|b| f(&Configuration::from_bits(&self.region, b)))
    }

    pub fn mask_of(&self, a: &Region) -> Result<u64> {
        region_mask(&self.region, a)
    }

    /// ⟨σ_A⟩ for the sites in mask.
    pub fn corr(&self, mask: u64) -> f64 {
        self.expect(|b| parity_sign(mask & !b))
    }

    pub fn magnetization(&self, k: usize) -> f64 {
        self.corr(1 << k)
    }

    pub fn magnetizations(&self) -> Vec<f64> {
        (0..self.n()).map(|k| self.magnetization(k)).collect()
    }

    /// ⟨σ_A⟩ for every A, by a Walsh–Hadamard transform.
    pub fn all_correlations(&self) -> Vec<f64> {
        let mut v = self.probs.clone();
        let n = self.n();
        for k in 0..n {
            let h = 1 << k;
            for i in 0..v.len() {
                if i & h == 0 {
                    let (a, b) = (v[i], v[i | h]);
                    v[i] = a + b;
                    v[i | h] = b - a;
                }
            }
        }
        v
    }

    /// P(σ = +1 on all of S) for every S, by a superset-sum transform.
    pub fn all_plus_probabilities(&self) -> Vec<f64> {
        let mut v = self.probs.clone();
        for k in 0..self.n() {
            let h = 1 << k;
            for i in 0..v.len() {
                if i & h == 0 {
                    v[i] += v[i | h];
                }
            }
        }
        v
    }

    /// P(σ = −1 on all of S) for every S.
    pub fn all_minus_probabilities(&self) -> Vec<f64> {
        let mut v = self.probs.clone();
        for k in 0..self.n() {
            let h = 1 << k;
            for i in 0..v.len() {
                if i & h != 0 {
                    v[i] += v[i ^ h];
                }
            }
        }
        let full = v.len() - 1;
        (0..v.len()).map(|s| v[full & !s]).collect()
    }

    /// Marginal distribution of the sites in mask, indexed by pext(b, mask).
    pub fn marginal(&self, mask: u64) -> Vec<f64> {
        let mut out = vec![0.0; 1 << mask.count_ones()];
        for (b, p) in self.probs.iter().enumerate() {
            out[pext(b as u64, mask) as usize] += p;
        }
        out
    }
}

pub fn parity_sign(x: u64) -> f64 {
    if x.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn region_mask(region: &Region, a: &Region) -> Result<u64> {
    let mut m = 0;
    for p in a.iter() {
        match region.index_of(p) {
            Some(i) => m |= 1 << i,
            None => return Err(Error::Param(format!("{p:?} is not in the region"))),
        }
    }
    Ok(m)
}

pub fn expectation<F: Fn(&Configuration) -> f64 + Sync>(m: &Model, f: F) -> Result<f64> {
    Ok(solve(m)?.expect_config(f))
}

/// Two independent copies on the same region; the second copy takes its own field and bc.
#[derive(Clone, Debug, PartialEq)]
pub struct DuplicatedModel {
    pub base: Model,
    pub field2: Field,
    pub bc2: Boundary,
}

impl DuplicatedModel {
    pub fn new(base: Model, field2: Field, bc2: Boundary) -> DuplicatedModel {
        DuplicatedModel { base, field2, bc2 }
    }

    pub fn second(&self) -> Model {
        Model {
            field: self.field2.clone(),
            bc: self.bc2.clone(),
            ..self.base.clone()
        }
    }
}

/// A product monomial Π s_i Π t_j with s = σ + σ′, t = σ − σ′; repeated indices allowed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Monomial {
    pub s: Vec<usize>,
    pub t: Vec<usize>,
}

impl Monomial {
    pub fn new(s: &[usize], t: &[usize]) -> Monomial {
        Monomial {
            s: s.to_vec(),
            t: t.to_vec(),
        }
    }

    pub fn from_masks(s: u64, t: u64) -> Monomial {
        let bits = |m: u64| (0..64).filter(|k| m >> k & 1 == 1).collect();
        Monomial { s: bits(s), t: bits(t) }
    }

    pub fn times(&self, other: &Monomial) -> Monomial {
        Monomial {
            s: self.s.iter().chain(&other.s).copied().collect(),
            t: self.t.iter().chain(&other.t).copied().collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DuplicatedState {
    pub first: ExactState,
    pub second: ExactState,
}

pub fn solve_duplicated(dm: &DuplicatedModel) -> Result<DuplicatedState> {
    solve_duplicated_capped(dm, MAX_EXACT_SITES)
}

pub fn solve_duplicated_capped(dm: &DuplicatedModel, cap: usize) -> Result<DuplicatedState> {
    check_cap(2 * dm.base.region.len(), cap)?;
    Ok(DuplicatedState {
        first: solve_capped(&dm.base, cap)?,
        second: solve_capped(&dm.second(), cap)?,
    })
}

impl DuplicatedState {
    /// ⟨f(σ, σ′)⟩ by the double sum over both layers.
    pub fn expect<F: Fn(u64, u64) -> f64 + Sync>(&self, f: F) -> f64 {
        let p2 = &self.second.probs;
        let rows: Vec<f64> = self
            .first
            .probs
            .par_iter()
            .enumerate()
            .map(|(b1, p1)| {
                p1 * p2
                    .iter()
                    .enumerate()
                    .map(|(b2, q)| q * f(b1 as u64, b2 as u64))
                    .sum::<f64>()
            })
            .collect();
        rows.iter().sum()
    }

    pub fn monomial(&self, m: &Monomial) -> f64 {
        let (mut smask, mut tmask, mut odd) = (0u64, 0u64, 0u64);
        for &i in &m.s {
            smask |= 1 << i;
            odd ^= 1 << i;
        }
        for &i in &m.t {
            tmask |= 1 << i;
            odd ^= 1 << i;
        }
        if smask & tmask != 0 {
            return 0.0;
        }
        let both = smask | tmask;
        let marg = self.second.marginal(both);
        let scale = 2f64.powi((m.s.len() + m.t.len()) as i32);
        let mut acc = 0.0;
        for (b1, p1) in self.first.probs.iter().enumerate() {
            let b1 = b1 as u64;
            let target = (b1 & smask) | (!b1 & tmask);
            acc += p1 * marg[pext(target, both) as usize] * parity_sign(odd & !b1);
        }
        scale * acc
    }
}

pub fn duplicated_expectation(dm: &DuplicatedModel, m: &Monomial) -> Result<f64> {
    Ok(solve_duplicated(dm)?.monomial(m))
}

/// Wall sites of a model: the wall layer, or layer 1 when the model has no wall.
pub fn wall_sites(m: &Model) -> Region {
    let layer = m.wall.map(|w| w.layer).unwrap_or(1);
    let ax = m.dim() - 1;
    m.region.filter(|p| p.get(ax) == layer)
}

/// Replaces the λ parameter: the wall coupling if present, otherwise a wall-decaying field.
pub fn with_lambda(m: &Model, lambda: f64) -> Result<Model> {
    let mut out = m.clone();
    if let Some(w) = &mut out.wall {
        w.lambda = lambda;
    } else if let Field::WallDecaying { lambda: l, .. } = &mut out.field {
        *l = lambda;
    } else {
        return Err(Error::Param(
            "λ-family needs a wall or a wall-decaying field".into(),
        ));
    }
    Ok(out)
}

/// g_a with ∂(−H)/∂λ = Σ_a g_a σ_a.
pub fn lambda_direction(m: &Model) -> Result<Vec<f64>> {
    let ax = m.dim() - 1;
    if m.wall.is_some() {
        Ok(m
            .region
            .iter()
            .map(|x| {
                if m.is_wall_site(x) {
                    m.wall_spin(x) as f64
                } else {
                    0.0
                }
            })
            .collect())
    } else if let Field::WallDecaying { delta, .. } = &m.field {
        Ok(m
            .region
            .iter()
            .map(|x| (x.get(ax) as f64).powf(-delta))
            .collect())
    } else {
        Err(Error::Param(
            "λ-family needs a wall or a wall-decaying field".into(),
        ))
    }
}

/// ln Z⁺ − ln Z⁻ and β Σ_a g_a(⟨σ_a⟩⁺ − ⟨σ_a⟩⁻) at the given λ.
pub fn wall_log_ratio(m: &Model, lambda: f64) -> Result<(f64, f64)> {
    let g = lambda_direction(m)?;
    let mm = with_lambda(m, lambda)?;
    let plus = solve(&mm.clone().with_bc(Boundary::Plus))?;
    let minus = solve(&mm.with_bc(Boundary::Minus))?;
    let (mp, mn) = (plus.magnetizations(), minus.magnetizations());
    let deriv: f64 = (0..g.len()).map(|a| g[a] * (mp[a] - mn[a])).sum();
    Ok((plus.log_z - minus.log_z, m.beta * deriv))
}

#[derive(Clone, Debug, Serialize)]
pub struct WallFreeEnergy {
    pub lambdas: Vec<f64>,
    /// −ln(Z⁻/Z⁺)/|W| at each λ
    pub tau: Vec<f64>,
    /// β Σ g_a(⟨σ_a⟩⁺ − ⟨σ_a⟩⁻)/|W|
    pub integrand: Vec<f64>,
    /// Cumulative quadrature of the integrand from λ_0.
    pub quadrature: Vec<f64>,
    pub max_quadrature_error: f64,
    pub wall_size: usize,
}

/// Cumulative composite Simpson on a uniform grid; the last odd panel uses the 3/8 rule.
pub fn cumulative_simpson(y: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![0.0; y.len()];
    for k in 1..y.len() {
        out[k] = if k == 1 {
            h * (y[0] + y[1]) / 2.0
        } else if k % 2 == 0 {
            out[k - 2] + h / 3.0 * (y[k - 2] + 4.0 * y[k - 1] + y[k])
        } else {
            out[k - 3] + 3.0 * h / 8.0 * (y[k - 3] + 3.0 * y[k - 2] + 3.0 * y[k - 1] + y[k])
        };
    }
    out
}

/// τ_w,n on a uniform λ-grid from 0 to lambda_max together with the integral of its derivative.
pub fn wall_free_energy_exact(m: &Model, lambda_max: f64, points: usize) -> Result<WallFreeEnergy> {
    if points < 2 {
        return Err(Error::Param("λ-grid needs at least 2 points".into()));
    }
    let w = wall_sites(m).len();
    if w == 0 {
        return Err(Error::Param("region has no wall sites".into()));
    }
    let h = lambda_max / (points - 1) as f64;
    let lambdas: Vec<f64> = (0..points).map(|k| k as f64 * h).collect();
    let rows: Vec<(f64, f64)> = lambdas
        .iter()
        .map(|l| wall_log_ratio(m, *l))
        .collect::<Result<_>>()?;
    let tau: Vec<f64> = rows.iter().map(|r| r.0 / w as f64).collect();
    let integrand: Vec<f64> = rows.iter().map(|r| r.1 / w as f64).collect();
    let quadrature = cumulative_simpson(&integrand, h);
    let max_quadrature_error = (0..points)
        .map(|k| (tau[k] - tau[0] - quadrature[k]).abs())
        .fold(0.0, f64::max);
    Ok(WallFreeEnergy {
        lambdas,
        tau,
        integrand,
        quadrature,
        max_quadrature_error,
        wall_size: w,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FieldTensionComparison {
    pub tau: f64,
    pub integral: f64,
    /// 4β Σ_k |h_k| over the layers of the box
    pub bound: f64,
}

/// Box Λ together with its mirror image across the wall, field reflected, no wall term.
pub fn mirrored_model(m: &Model) -> Result<Model> {
    let layer = m.wall.map(|w| w.layer).unwrap_or(1);
    let ax = m.dim() - 1;
    let mirror = reflect_region(&m.region, ax, 2 * layer - 1);
    let region = m.region.union(&mirror);
    let mut values = Vec::with_capacity(region.len());
    for x in region.iter() {
        let src = if x.get(ax) < layer {
            x.with(ax, 2 * layer - 1 - x.get(ax))
        } else {
            *x
        };
        values.push(m.field.at(&src)?);
    }
    Ok(Model {
        region: region.clone(),
        interaction: m.interaction.clone(),
        field: Field::Table {
            sites: region,
            values,
            eps: 1.0,
        },
        wall: None,
        bc: Boundary::Plus,
        beta: m.beta,
    })
}

/// τ_w,n = −ln(Z⁻/Z⁺)/|W| − ln(Q⁺_Δ/Q⁻_Δ)/(2|W|) against ∫_0^λ β Σ_W(⟨σ⟩⁺ − ⟨σ⟩⁻)/|W|.
pub fn field_tension_comparison(m: &Model, points: usize) -> Result<FieldTensionComparison> {
    let lambda = m.wall.map(|w| w.lambda).ok_or_else(|| {
        Error::Param("wall free energy with field needs a wall".into())
    })?;
    let w = wall_sites(m).len() as f64;
    let (ratio, _) = wall_log_ratio(m, lambda)?;
    let delta = mirrored_model(m)?;
    let qp = log_partition(&delta)?;
    let qm = log_partition(&delta.with_bc(Boundary::Minus))?;
    let tau = ratio / w - (qp - qm) / (2.0 * w);
    let integral = if lambda == 0.0 {
        0.0
    } else {
        let pts = points.max(3);
        let wf = wall_free_energy_exact(m, lambda, pts)?;
        wf.quadrature[pts - 1]
    };
    let ax = m.dim() - 1;
    let mut layers = std::collections::BTreeMap::new();
    for x in m.region.iter() {
        layers.entry(x.get(ax)).or_insert(*x);
    }
    let mut hsum = 0.0;
    for x in layers.values() {
        hsum += m.field.at(x)?.abs();
    }
    Ok(FieldTensionComparison {
        tau,
        integral,
        bound: 4.0 * m.beta * hsum,
    })
}

/// −ln(Q^∓/Q^+)/|W| on [−m,m]^{d−1} × [−n,n] with the ∓ split at i_d = 0.
pub fn interface_free_energy_finite(j: f64, beta: f64, d: usize, m: i32, n: i32) -> Result<f64> {
    if d < 1 || m < 0 || n < 0 {
        return Err(Error::Param("invalid box dimensions".into()));
    }
    let mut lo = vec![-m; d];
    let mut hi = vec![m; d];
    lo[d - 1] = -n;
    hi[d - 1] = n;
    let region = Region::rect(&lo, &hi);
    let w = (2 * m + 1).pow(d as u32 - 1) as f64;
    let plus = Model::new(region, Interaction::nn(j), Boundary::Plus).with_beta(beta);
    let mixed = plus.clone().with_bc(Boundary::MinusPlus { split: 0 });
    Ok(-(log_partition(&mixed)? - log_partition(&plus)?) / w)
}

/// Δ_A(h) = −(1/β) ln(Z(h)/Z(τ_A h)), τ_A flipping the field on A.
pub fn delta_exact(m: &Model, a: &Region) -> Result<f64> {
    if !a.is_subset(&m.region) {
        return Err(Error::Param("A must be a subset of the region".into()));
    }
    if !(m.beta > 0.0) {
        return Err(Error::Param("Δ_A needs β > 0".into()));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let c = m.compile()?;
    let mut flipped = c.clone();
    for p in a.iter() {
        let k = c.region.index_of(p).unwrap();
        flipped.h_eff[k] -= 2.0 * c.h[k];
        flipped.h[k] = -c.h[k];
    }
    let lz = log_partition_compiled(&c, MAX_EXACT_SITES)?;
    let lf = log_partition_compiled(&flipped, MAX_EXACT_SITES)?;
    Ok(-(lz - lf) / m.beta)
}

/// Copy of a model whose field is negated on A.
pub fn flip_field_on(m: &Model, a: &Region) -> Result<Model> {
    let mut values = Vec::with_capacity(m.region.len());
    for x in m.region.iter() {
        let h = m.field.at(x)?;
        values.push(if a.contains(x) { -h } else { h });
    }
    Ok(Model {
        field: Field::Table {
            sites: m.region.clone(),
            values,
            eps: 1.0,
        },
        ..m.clone()
    })
}

pub fn point_index(region: &Region, p: &Point) -> Result<usize> {
    region
        .index_of(p)
        .ok_or_else(|| Error::Param(format!("{p:?} is not in the region")))
}
