//! Single-flip Metropolis sampling, layer profiles and thermodynamic integration of τ_w.
//!
//! Streams come from ChaCha8 seeded with `seed` and switched to stream `chain`;
//! a sweep proposes |Λ| flips, each at a uniformly drawn site.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::exact::{cumulative_simpson, lambda_direction, wall_sites, with_lambda};
use crate::lattice::Point;
use crate::model::{Boundary, Compiled, Model};
use crate::stats::{batch_means, split_rhat, Estimate};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Init {
    /// The sign of a plus or minus boundary condition, +1 otherwise.
    #[default]
    Boundary,
    Plus,
    Minus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McRun {
    pub model: Model,
    pub sweeps: usize,
    pub burn_in: usize,
    pub seed: u64,
    #[serde(default = "one")]
    pub thin: usize,
    #[serde(default)]
    pub chain: u64,
    #[serde(default)]
    pub init: Init,
}

fn one() -> usize {
    1
}

impl McRun {
    pub fn new(model: Model, sweeps: usize, burn_in: usize, seed: u64) -> McRun {
        McRun {
            model,
            sweeps,
            burn_in,
            seed,
            thin: 1,
            chain: 0,
            init: Init::Boundary,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.sweeps <= self.burn_in {
            return Err(Error::Param("sweeps must exceed burn_in".into()));
        }
        if self.thin == 0 {
            return Err(Error::Param("thin must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Observable {
    Spin { at: Point },
    Pair { a: Point, b: Point },
    /// Mean spin over the region.
    Magnetization,
    Energy,
    /// Mean spin over the sites with i_d = layer.
    Layer { layer: i32 },
}

impl Observable {
    pub fn label(&self) -> String {
        match self {
            Observable::Spin { at } => format!("spin{at:?}"),
            Observable::Pair { a, b } => format!("pair{a:?}{b:?}"),
            Observable::Magnetization => "magnetization".into(),
            Observable::Energy => "energy".into(),
            Observable::Layer { layer } => format!("layer{layer}"),
        }
    }
}

enum Probe {
    Spin(usize),
    Pair(usize, usize),
    Mean(Vec<usize>),
    Energy,
}

fn probe(m: &Model, o: &Observable) -> Result<Probe> {
    let idx = |p: &Point| {
        m.region
            .index_of(p)
            .ok_or_else(|| Error::Param(format!("{p:?} is not in the region")))
    };
    let ax = m.dim() - 1;
    Ok(match o {
        Observable::Spin { at } => Probe::Spin(idx(at)?),
        Observable::Pair { a, b } => Probe::Pair(idx(a)?, idx(b)?),
        Observable::Magnetization => Probe::Mean((0..m.region.len()).collect()),
        Observable::Energy => Probe::Energy,
        Observable::Layer { layer } => Probe::Mean(
            m.region
                .iter()
                .enumerate()
                .filter(|(_, p)| p.get(ax) == *layer)
                .map(|(k, _)| k)
                .collect(),
        ),
    })
}

fn measure(c: &Compiled, s: &[i8], p: &Probe) -> f64 {
    match p {
        Probe::Spin(a) => s[*a] as f64,
        Probe::Pair(a, b) => (s[*a] * s[*b]) as f64,
        Probe::Mean(v) => v.iter().map(|k| s[*k] as f64).sum::<f64>() / v.len() as f64,
        Probe::Energy => c.energy(s),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct McSummary {
    pub labels: Vec<String>,
    pub estimates: Vec<Estimate>,
    pub acceptance: f64,
    /// series[o][k]: observable o at the k-th recorded sweep
    pub series: Vec<Vec<f64>>,
}

pub const BATCHES: usize = 50;

/// One chain's state: compiled model, spins and generator.
pub struct Chain {
    pub compiled: Compiled,
    pub spins: Vec<i8>,
    rng: ChaCha8Rng,
    accepted: u64,
    proposed: u64,
}

impl Chain {
    pub fn new(run: &McRun) -> Result<Chain> {
        let compiled = run.model.compile()?;
        let s0 = match (run.init, &run.model.bc) {
            (Init::Plus, _) => 1,
            (Init::Minus, _) => -1,
            (Init::Boundary, Boundary::Minus) => -1,
            _ => 1,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
        rng.set_stream(run.chain);
        Ok(Chain {
            spins: vec![s0; compiled.n()],
            compiled,
            rng,
            accepted: 0,
            proposed: 0,
        })
    }

    /// |Λ| proposals, each at a uniformly drawn site.
    pub fn sweep(&mut self) {
        let beta = self.compiled.beta;
        let n = self.spins.len();
        for _ in 0..n {
            let a = self.rng.random_range(0..n);
            let de = 2.0 * self.spins[a] as f64 * self.compiled.local_field(&self.spins, a);
            self.proposed += 1;
            let u: f64 = self.rng.random();
            if de <= 0.0 || u < (-beta * de).exp() {
                self.spins[a] = -self.spins[a];
                self.accepted += 1;
            }
        }
    }

    pub fn acceptance(&self) -> f64 {
        self.accepted as f64 / self.proposed.max(1) as f64
    }
}

pub fn metropolis_run(run: &McRun, observables: &[Observable]) -> Result<McSummary> {
    run.validate()?;
    let probes: Vec<Probe> = observables
        .iter()
        .map(|o| probe(&run.model, o))
        .collect::<Result<_>>()?;
    let mut chain = Chain::new(run)?;
    let mut series = vec![Vec::new(); probes.len()];
    for t in 0..run.sweeps {
        chain.sweep();
        if t >= run.burn_in && (t - run.burn_in) % run.thin == 0 {
            for (k, p) in probes.iter().enumerate() {
                series[k].push(measure(&chain.compiled, &chain.spins, p));
            }
        }
    }
    Ok(McSummary {
        labels: observables.iter().map(|o| o.label()).collect(),
        estimates: series.iter().map(|s| batch_means(s, BATCHES)).collect(),
        acceptance: chain.acceptance(),
        series,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LayerStat {
    pub layer: i32,
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct LayerProfile {
    pub layers: Vec<LayerStat>,
    pub wall_layer: i32,
    /// m at the wall layer exceeds 0 by more than 3 SE
    pub wall_wet: bool,
    /// m at the wall layer is below 0 by more than 3 SE
    pub wall_dry: bool,
}

pub fn layer_profile(run: &McRun) -> Result<LayerProfile> {
    let ax = run.model.dim() - 1;
    let mut layers: Vec<i32> = run.model.region.iter().map(|p| p.get(ax)).collect();
    layers.sort();
    layers.dedup();
    let obs: Vec<Observable> = layers
        .iter()
        .map(|l| Observable::Layer { layer: *l })
        .collect();
    let sum = metropolis_run(run, &obs)?;
    let stats: Vec<LayerStat> = layers
        .iter()
        .zip(&sum.estimates)
        .zip(&sum.series)
        .map(|((l, e), s)| LayerStat {
            layer: *l,
            mean: e.mean,
            se: e.se,
            n: s.len(),
        })
        .collect();
    let wall_layer = run.model.wall.map(|w| w.layer).unwrap_or(layers[0]);
    let w = stats.iter().find(|s| s.layer == wall_layer).ok_or_else(|| {
        Error::Param("no sites at the wall layer".into())
    })?;
    Ok(LayerProfile {
        wall_wet: w.mean - 3.0 * w.se > 0.0,
        wall_dry: w.mean + 3.0 * w.se < 0.0,
        wall_layer,
        layers: stats,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ThermoIntegration {
    pub lambdas: Vec<f64>,
    /// |W|⁻¹ β Σ g(⟨σ⟩⁺ − ⟨σ⟩⁻) with its standard error at each λ
    pub integrand: Vec<Estimate>,
    /// Cumulative integral with propagated error at each λ.
    pub tau: Vec<Estimate>,
    pub quadrature_error: f64,
    pub max_rhat: f64,
    pub converged: bool,
}

pub const RHAT_LIMIT: f64 = 1.1;

/// Cumulative composite-Simpson weights: w[k][i] with ∫_0^{λ_k} ≈ Σ_i w[k][i] y_i.
fn simpson_weights(points: usize, h: f64) -> Vec<Vec<f64>> {
    (0..points)
        .map(|k| {
            (0..points)
                .map(|i| {
                    let mut y = vec![0.0; points];
                    y[i] = 1.0;
                    cumulative_simpson(&y, h)[k]
                })
                .collect()
        })
        .collect()
}

/// τ_w(λ) on a uniform grid from plus and minus chains (two replicas each) per grid point.
pub fn thermo_integrate_tau_w(
    template: &McRun,
    lambda_max: f64,
    points: usize,
) -> Result<ThermoIntegration> {
    template.validate()?;
    if points < 2 {
        return Err(Error::Param("λ-grid needs at least 2 points".into()));
    }
    let g = lambda_direction(&template.model)?;
    let w = wall_sites(&template.model).len() as f64;
    let h = lambda_max / (points - 1) as f64;
    let lambdas: Vec<f64> = (0..points).map(|k| k as f64 * h).collect();
    let beta = template.model.beta;
    let jobs: Vec<(usize, usize, u64)> = (0..points)
        .flat_map(|k| (0..2).flat_map(move |bc| (0..2u64).map(move |rep| (k, bc, rep))))
        .collect();
    let runs: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(k, bc, rep)| -> Result<Vec<f64>> {
            let bcv = if bc == 0 { Boundary::Plus } else { Boundary::Minus };
            let model = with_lambda(&template.model, lambdas[k])?.with_bc(bcv);
            let run = McRun {
                model,
                chain: template.chain * 1_000_003 + (4 * k + 2 * bc) as u64 + rep,
                ..template.clone()
            };
            let mut chain = Chain::new(&run)?;
            let mut out = Vec::new();
            for t in 0..run.sweeps {
                chain.sweep();
                if t >= run.burn_in && (t - run.burn_in) % run.thin == 0 {
                    let v: f64 = g
                        .iter()
                        .zip(&chain.spins)
                        .map(|(gi, s)| gi * *s as f64)
                        .sum();
                    out.push(beta * v / w);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut integrand = Vec::with_capacity(points);
    let mut max_rhat: f64 = 1.0;
    for k in 0..points {
        let r = |bc: usize, rep: usize| &runs[4 * k + 2 * bc + rep];
        let plus: Vec<f64> = r(0, 0).iter().chain(r(0, 1)).copied().collect();
        let minus: Vec<f64> = r(1, 0).iter().chain(r(1, 1)).copied().collect();
        for bc in 0..2 {
            let rh = split_rhat(&[r(bc, 0).clone(), r(bc, 1).clone()]);
            if rh.is_finite() {
                max_rhat = max_rhat.max(rh);
            } else if rh.is_infinite() {
                max_rhat = f64::INFINITY;
            }
        }
        let (ep, em) = (batch_means(&plus, BATCHES), batch_means(&minus, BATCHES));
        integrand.push(Estimate {
            mean: ep.mean - em.mean,
            se: (ep.se * ep.se + em.se * em.se).sqrt(),
        });
    }
    let weights = simpson_weights(points, h);
    let means: Vec<f64> = integrand.iter().map(|e| e.mean).collect();
    let cum = cumulative_simpson(&means, h);
    let tau: Vec<Estimate> = (0..points)
        .map(|k| Estimate {
            mean: cum[k],
            se: weights[k]
                .iter()
                .zip(&integrand)
                .map(|(wi, e)| (wi * e.se).powi(2))
                .sum::<f64>()
                .sqrt(),
        })
        .collect();
    let trap: f64 = (1..points)
        .map(|k| h * (means[k - 1] + means[k]) / 2.0)
        .sum();
    Ok(ThermoIntegration {
        lambdas,
        integrand,
        quadrature_error: (trap - cum[points - 1]).abs(),
        converged: max_rhat <= RHAT_LIMIT,
        max_rhat,
        tau,
    })
}
