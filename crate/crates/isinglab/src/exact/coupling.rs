//! Edwards–Sokal coupling and random-cluster measures on tiny graphs.

use serde::Serialize;

use super::{solve, MAX_EXACT_SITES};
use crate::model::{Boundary, Model};
use crate::{Error, Result};

/// An edge between region sites a and b, or between a and the exterior when b is None.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Edge {
    pub a: usize,
    pub b: Option<usize>,
    pub j: f64,
}

/// E_0(Λ) for the free condition, E(Λ) for the wired one.
pub fn rc_edges(m: &Model, wired: bool) -> Result<Vec<Edge>> {
    if !m.interaction.is_nearest_neighbor() {
        return Err(Error::Unsupported("random-cluster measures need NN couplings".into()));
    }
    let mut out = Vec::new();
    for (a, x) in m.region.iter().enumerate() {
        for y in x.neighbors() {
            if !m.exists(&y) {
                continue;
            }
            let j = m.coupling(x, &y)?;
            match m.region.index_of(&y) {
                Some(b) if a < b => out.push(Edge { a, b: Some(b), j }),
                Some(_) => {}
                None if wired => out.push(Edge { a, b: None, j }),
                None => {}
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct RcMeasure {
    pub edges: Vec<Edge>,
    /// Indexed by the open-edge mask.
    pub probs: Vec<f64>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// φ⁰ or φ¹ from B_J(ω) Π_C (1 + e^{−2β h_C}); clusters joined to the exterior weigh 1.
pub fn rc_measure(m: &Model, wired: bool) -> Result<RcMeasure> {
    let edges = rc_edges(m, wired)?;
    let n = m.region.len();
    if edges.len() > MAX_EXACT_SITES {
        return Err(Error::Capacity(format!("{} edges exceed the cap", edges.len())));
    }
    let h: Vec<f64> = m.region.iter().map(|x| m.field.at(x)).collect::<Result<_>>()?;
    let beta = m.beta;
    let mut w = Vec::with_capacity(1 << edges.len());
    for omega in 0..1u64 << edges.len() {
        // vertex n is the exterior
        let mut parent: Vec<usize> = (0..=n).collect();
        let mut weight = 1.0;
        for (k, e) in edges.iter().enumerate() {
            if omega >> k & 1 == 1 {
                weight *= (2.0 * beta * e.j).exp() - 1.0;
                let (ra, rb) = (find(&mut parent, e.a), find(&mut parent, e.b.unwrap_or(n)));
                parent[ra] = rb;
            }
        }
        let ext = find(&mut parent, n);
        let mut hc = vec![0.0; n + 1];
        let mut root = vec![false; n + 1];
        for (v, hv) in h.iter().enumerate() {
            let r = find(&mut parent, v);
            hc[r] += hv;
            root[r] = true;
        }
        for r in 0..n {
            if root[r] && r != ext {
                weight *= 1.0 + (-2.0 * beta * hc[r]).exp();
            }
        }
        if !wired && root[ext] {
            unreachable!("free measure has no exterior edges");
        }
        w.push(weight);
    }
    let z: f64 = w.iter().sum();
    Ok(RcMeasure {
        edges,
        probs: w.into_iter().map(|v| v / z).collect(),
    })
}

impl RcMeasure {
    /// φ(all edges in mask open)
    pub fn all_open(&self, mask: u64) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(w, _)| *w as u64 & mask == mask)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn edge_open(&self, k: usize) -> f64 {
        self.all_open(1 << k)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EsReport {
    pub wired: bool,
    pub n_edges: usize,
    /// max |spin marginal − Ising probability| over configurations
    pub spin_marginal_error: f64,
    /// max |edge marginal − random-cluster probability| over edge configurations
    pub edge_marginal_error: f64,
    /// min φ(f g) − φ(f) φ(g) over all-open and any-open events
    pub fkg_min_slack: f64,
}

/// Enumerates every (σ, ω) with weight Π_{open} δ(e^{2βJ}−1) Π e^{βhσ} and compares marginals.
pub fn es_coupling_audit(m: &Model, wired: bool) -> Result<EsReport> {
    let n = m.region.len();
    let edges = rc_edges(m, wired)?;
    let ne = edges.len();
    if n + ne > MAX_EXACT_SITES {
        return Err(Error::Capacity(format!(
            "{n} sites and {ne} edges exceed the enumeration cap"
        )));
    }
    let h: Vec<f64> = m.region.iter().map(|x| m.field.at(x)).collect::<Result<_>>()?;
    let beta = m.beta;
    let mut joint = vec![0.0; 1 << (n + ne)];
    for s in 0..1u64 << n {
        let sp = |k: usize| if s >> k & 1 == 1 { 1.0 } else { -1.0 };
        let field: f64 = (0..n).map(|k| beta * h[k] * sp(k)).sum::<f64>().exp();
        for omega in 0..1u64 << ne {
            let mut w = field;
            for (k, e) in edges.iter().enumerate() {
                if omega >> k & 1 == 1 {
                    let other = e.b.map(sp).unwrap_or(1.0);
                    if sp(e.a) != other {
                        w = 0.0;
                        break;
                    }
                    w *= (2.0 * beta * e.j).exp() - 1.0;
                }
            }
            joint[(s | omega << n) as usize] = w;
        }
    }
    let z: f64 = joint.iter().sum();
    joint.iter_mut().for_each(|v| *v /= z);

    let ising = Model {
        wall: None,
        bc: if wired { Boundary::Plus } else { Boundary::Free },
        ..m.clone()
    };
    let st = solve(&ising)?;
    let mut spin_err: f64 = 0.0;
    for s in 0..1usize << n {
        let marg: f64 = (0..1usize << ne).map(|o| joint[s | o << n]).sum();
        spin_err = spin_err.max((marg - st.probs[s]).abs());
    }
    let rc = rc_measure(m, wired)?;
    let mut edge_err: f64 = 0.0;
    let mut edge_marg = vec![0.0; 1 << ne];
    for o in 0..1usize << ne {
        let marg: f64 = (0..1usize << n).map(|s| joint[s | o << n]).sum();
        edge_marg[o] = marg;
        edge_err = edge_err.max((marg - rc.probs[o]).abs());
    }
    let all_open = |mask: usize| -> f64 {
        edge_marg
            .iter()
            .enumerate()
            .filter(|(w, _)| w & mask == mask)
            .map(|(_, p)| p)
            .sum()
    };
    let up: Vec<f64> = (0..1usize << ne).map(all_open).collect();
    let none_open = |mask: usize| -> f64 {
        edge_marg
            .iter()
            .enumerate()
            .filter(|(w, _)| w & mask == 0)
            .map(|(_, p)| p)
            .sum()
    };
    let any: Vec<f64> = (0..1usize << ne).map(|s| 1.0 - none_open(s)).collect();
    let mut fkg = f64::INFINITY;
    for a in 0..1usize << ne {
        for b in 0..1usize << ne {
            fkg = fkg.min(up[a | b] - up[a] * up[b]);
            if ne <= 6 {
                let both_any: f64 = edge_marg
                    .iter()
                    .enumerate()
                    .filter(|(w, _)| w & a != 0 && w & b != 0)
                    .map(|(_, p)| p)
                    .sum();
                fkg = fkg.min(both_any - any[a] * any[b]);
            }
        }
    }
    Ok(EsReport {
        wired,
        n_edges: ne,
        spin_marginal_error: spin_err,
        edge_marginal_error: edge_err,
        fkg_min_slack: fkg,
    })
}
