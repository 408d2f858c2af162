//! Couplings, fields, boundary conditions and Hamiltonians.
//!
//! Energies follow H = −Σ J_xy σ_x σ_y − Σ h_x σ_x − λ Σ_{wall} σ_x v_x, summed over
//! bonds with at least one end in the region; the Gibbs weight is exp(−βH).
//! With a wall, sites below the wall layer do not exist and each wall site is
//! coupled with strength λ to a virtual spin v_x directly below it (v ≡ +1
//! except under the ω^L condition).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::lattice::{Norm, Point, Region};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Interaction {
    NearestNeighbor {
        j: f64,
    },
    /// NN coupling J, except λ/2 on the bonds between layer `layer` and layers `layer ± 1`.
    WallModified {
        j: f64,
        lambda: f64,
        #[serde(default)]
        layer: i32,
    },
    /// J |x−y|^{−α}, truncated to |x−y|_∞ ≤ cutoff.
    LongRange {
        j: f64,
        alpha: f64,
        #[serde(default)]
        norm: Norm,
        #[serde(default = "default_cutoff")]
        cutoff: i32,
    },
}

fn default_cutoff() -> i32 {
    64
}

impl Interaction {
    pub fn nn(j: f64) -> Interaction {
        Interaction::NearestNeighbor { j }
    }

    pub fn long_range(j: f64, alpha: f64, norm: Norm, cutoff: i32) -> Interaction {
        Interaction::LongRange {
            j,
            alpha,
            norm,
            cutoff,
        }
    }

    pub fn j(&self) -> f64 {
        match self {
            Interaction::NearestNeighbor { j }
            | Interaction::WallModified { j, .. }
            | Interaction::LongRange { j, .. } => *j,
        }
    }

    pub fn is_nearest_neighbor(&self) -> bool {
        !matches!(self, Interaction::LongRange { .. })
    }

    pub fn with_j(&self, j: f64) -> Interaction {
        let mut out = self.clone();
        match &mut out {
            Interaction::NearestNeighbor { j: jj }
            | Interaction::WallModified { j: jj, .. }
            | Interaction::LongRange { j: jj, .. } => *jj = j,
        }
        out
    }

    fn validate(&self, d: usize) -> Result<()> {
        let j = self.j();
        if !(j >= 0.0) || !j.is_finite() {
            return Err(Error::Param(format!("coupling J={j} must be finite and ≥ 0")));
        }
        match self {
            Interaction::WallModified { lambda, .. } if !(*lambda >= 0.0) => {
                Err(Error::Param(format!("wall-modified λ={lambda} must be ≥ 0")))
            }
            Interaction::LongRange { alpha, cutoff, .. } => {
                if !(*alpha > d as f64) {
                    Err(Error::Param(format!("long-range α={alpha} must exceed d={d}")))
                } else if *cutoff < 1 {
                    Err(Error::Param("long-range cutoff must be ≥ 1".into()))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// J_xy; zero beyond range. Errors when x = y.
    pub fn coupling(&self, x: &Point, y: &Point) -> Result<f64> {
        if x == y {
            return Err(Error::Param(format!("coupling of {x:?} with itself")));
        }
        Ok(self.coupling_unchecked(x, y))
    }

    pub(crate) fn coupling_unchecked(&self, x: &Point, y: &Point) -> f64 {
        match self {
            Interaction::NearestNeighbor { j } => {
                if x.l1(y) == 1 {
                    *j
                } else {
                    0.0
                }
            }
            Interaction::WallModified { j, lambda, layer } => {
                if x.l1(y) != 1 {
                    return 0.0;
                }
                let ax = x.dim() - 1;
                let vertical = x.get(ax) != y.get(ax);
                if vertical && (x.get(ax) == *layer || y.get(ax) == *layer) {
                    lambda / 2.0
                } else {
                    *j
                }
            }
            Interaction::LongRange {
                j,
                alpha,
                norm,
                cutoff,
            } => {
                if x.linf(y) > *cutoff as i64 {
                    0.0
                } else {
                    j * norm.dist(x, y).powf(-alpha)
                }
            }
        }
    }

    /// Non-zero couplings (v, J_{0v}) of a translation-invariant interaction; None for WallModified.
    pub fn kernel(&self, d: usize) -> Option<Vec<(Point, f64)>> {
        if matches!(self, Interaction::WallModified { .. }) {
            return None;
        }
        let o = Point::origin(d);
        Some(
            self.offsets(d)
                .into_iter()
                .map(|v| (v, self.coupling_unchecked(&o, &v)))
                .filter(|(_, j)| *j != 0.0)
                .collect(),
        )
    }

    /// Offsets with their coupling when it does not depend on position.
    fn couplings(&self, d: usize) -> Vec<(Point, Option<f64>)> {
        match self.kernel(d) {
            Some(k) => k.into_iter().map(|(v, j)| (v, Some(j))).collect(),
            None => self.offsets(d).into_iter().map(|v| (v, None)).collect(),
        }
    }

    /// Offsets v ≠ 0 with a possibly non-zero coupling to the origin.
    pub fn offsets(&self, d: usize) -> Vec<Point> {
        let r = match self {
            Interaction::LongRange { cutoff, .. } => *cutoff,
            _ => 1,
        };
        let lo = vec![-r; d];
        let hi = vec![r; d];
        let o = Point::origin(d);
        Region::rect(&lo, &hi)
            .iter()
            .filter(|p| {
                *p != &o && (matches!(self, Interaction::LongRange { .. }) || p.l1(&o) == 1)
            })
            .copied()
            .collect()
    }
}

/// Semi-infinite geometry: sites with i_d < layer do not exist; wall sites
/// (i_d = layer) feel λ times the virtual spin below them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Wall {
    pub lambda: f64,
    #[serde(default = "default_wall_layer")]
    pub layer: i32,
}

fn default_wall_layer() -> i32 {
    1
}

impl Wall {
    pub fn at(lambda: f64, layer: i32) -> Wall {
        Wall { lambda, layer }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Field {
    Zero,
    Constant {
        h: f64,
    },
    /// h_i = λ i_d^{−δ}, for i_d ≥ 1.
    WallDecaying {
        lambda: f64,
        delta: f64,
    },
    /// h_0 = h*, h_i = h* |i|_2^{−δ} otherwise.
    OriginDecaying {
        hstar: f64,
        delta: f64,
    },
    /// h_i = values[i_d]; missing layers carry no field.
    Layered {
        #[serde(serialize_with = "layer_keys_out", deserialize_with = "layer_keys")]
        values: BTreeMap<i32, f64>,
    },
    /// h_i = ε · values[index of i in sites]; other sites carry no field.
    Table {
        sites: Region,
        values: Vec<f64>,
        #[serde(default = "one")]
        eps: f64,
    },
}

/// Layer maps arrive with string keys from TOML and JSON.
fn layer_keys<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<BTreeMap<i32, f64>, D::Error> {
    let raw: BTreeMap<String, f64> = BTreeMap::deserialize(d)?;
    raw.into_iter()
        .map(|(k, v)| {
            k.trim()
                .parse::<i32>()
                .map(|k| (k, v))
                .map_err(|_| serde::de::Error::custom(format!("layer key `{k}` is not an integer")))
        })
        .collect()
}

fn layer_keys_out<S: serde::Serializer>(m: &BTreeMap<i32, f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_map(m.iter().map(|(k, v)| (k.to_string(), v)))
}

fn one() -> f64 {
    1.0
}

impl Field {
    pub fn at(&self, x: &Point) -> Result<f64> {
        let ax = x.dim() - 1;
        Ok(match self {
            Field::Zero => 0.0,
            Field::Constant { h } => *h,
            Field::WallDecaying { lambda, delta } => {
                let k = x.get(ax);
                if k < 1 {
                    return Err(Error::Param(format!(
                        "wall-decaying field undefined at layer {k}"
                    )));
                }
                lambda * (k as f64).powf(-delta)
            }
            Field::OriginDecaying { hstar, delta } => {
                let r2 = x.l2_sq(&Point::origin(x.dim()));
                if r2 == 0 {
                    *hstar
                } else {
                    hstar * (r2 as f64).sqrt().powf(-delta)
                }
            }
            Field::Layered { values } => values.get(&x.get(ax)).copied().unwrap_or(0.0),
            Field::Table { sites, values, eps } => {
                sites.index_of(x).map(|i| eps * values[i]).unwrap_or(0.0)
            }
        })
    }

    fn validate(&self) -> Result<()> {
        match self {
            Field::WallDecaying { delta, .. } | Field::OriginDecaying { delta, .. }
                if !(*delta > 0.0) =>
            {
                Err(Error::Param(format!("decay exponent δ={delta} must be > 0")))
            }
            Field::Table { sites, values, .. } if sites.len() != values.len() => Err(
                Error::Param("field table: one value per site required".into()),
            ),
            _ => Ok(()),
        }
    }

    pub fn negated(&self) -> Field {
        match self {
            Field::Zero => Field::Zero,
            Field::Constant { h } => Field::Constant { h: -h },
            Field::WallDecaying { lambda, delta } => Field::WallDecaying {
                lambda: -lambda,
                delta: *delta,
            },
            Field::OriginDecaying { hstar, delta } => Field::OriginDecaying {
                hstar: -hstar,
                delta: *delta,
            },
            Field::Layered { values } => Field::Layered {
                values: values.iter().map(|(k, v)| (*k, -v)).collect(),
            },
            Field::Table { sites, values, eps } => Field::Table {
                sites: sites.clone(),
                values: values.clone(),
                eps: -eps,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Boundary {
    Plus,
    Minus,
    Free,
    /// −1 on i_d ≥ split, +1 below.
    MinusPlus {
        #[serde(default)]
        split: i32,
    },
    /// +1 on W_L − e_d, −1 elsewhere; needs a wall.
    OmegaL {
        l: i32,
    },
    Explicit {
        spins: BTreeMap<Point, i8>,
        #[serde(default)]
        default: Option<i8>,
    },
}

impl Boundary {
    pub fn negated(&self) -> Result<Boundary> {
        Ok(match self {
            Boundary::Plus => Boundary::Minus,
            Boundary::Minus => Boundary::Plus,
            Boundary::Free => Boundary::Free,
            Boundary::Explicit { spins, default } => Boundary::Explicit {
                spins: spins.iter().map(|(p, s)| (*p, -s)).collect(),
                default: default.map(|s| -s),
            },
            other => {
                return Err(Error::Unsupported(format!("negation of boundary {other:?}")))
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Model {
    pub region: Region,
    pub interaction: Interaction,
    #[serde(default = "zero_field")]
    pub field: Field,
    #[serde(default)]
    pub wall: Option<Wall>,
    pub bc: Boundary,
    #[serde(default = "one")]
    pub beta: f64,
}

fn zero_field() -> Field {
    Field::Zero
}

/// Spin assignment on a region, σ_x ∈ {−1, +1}, in the region's point order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub region: Region,
    pub spins: Vec<i8>,
}

impl Configuration {
    pub fn constant(region: &Region, s: i8) -> Configuration {
        Configuration {
            region: region.clone(),
            spins: vec![s; region.len()],
        }
    }

    /// Bit k set means site k is +1.
    pub fn from_bits(region: &Region, bits: u64) -> Configuration {
        Configuration {
            region: region.clone(),
            spins: (0..region.len())
                .map(|k| if bits >> k & 1 == 1 { 1 } else { -1 })
                .collect(),
        }
    }

    pub fn to_bits(&self) -> u64 {
        self.spins
            .iter()
            .enumerate()
            .filter(|(_, s)| **s > 0)
            .fold(0, |acc, (k, _)| acc | 1 << k)
    }

    pub fn spin(&self, x: &Point) -> Option<i8> {
        self.region.index_of(x).map(|i| self.spins[i])
    }

    pub fn flipped(&self) -> Configuration {
        Configuration {
            region: self.region.clone(),
            spins: self.spins.iter().map(|s| -s).collect(),
        }
    }

    /// Sites carrying spin s.
    pub fn sites_with(&self, s: i8) -> Region {
        Region::from_points(
            self.region.dim(),
            self.region
                .iter()
                .zip(&self.spins)
                .filter(|(_, v)| **v == s)
                .map(|(p, _)| *p)
                .collect(),
        )
    }
}

/// Index form of a model: H(σ) = −Σ_pairs J σ_a σ_b − Σ_ext J σ_a η − Σ_a h_a σ_a.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub region: Region,
    pub beta: f64,
    pub pairs: Vec<(usize, usize, f64)>,
    /// Bonds to fixed exterior (or virtual wall) spins, aggregated per (site, spin).
    pub ext: Vec<(usize, f64, i8)>,
    /// Bulk field h_a, without boundary contributions.
    pub h: Vec<f64>,
    /// h_a plus Σ_ext J η: the field seen by site a.
    pub h_eff: Vec<f64>,
    /// Adjacency lists (neighbour, J) built from `pairs`.
    pub adj: Vec<Vec<(usize, f64)>>,
}

impl Compiled {
    pub fn n(&self) -> usize {
        self.region.len()
    }

    pub fn energy(&self, s: &[i8]) -> f64 {
        let mut e = 0.0;
        for &(a, b, j) in &self.pairs {
            e -= j * (s[a] * s[b]) as f64;
        }
        for (a, h) in self.h_eff.iter().enumerate() {
            e -= h * s[a] as f64;
        }
        e
    }

    /// Energy of the configuration encoded in bits (bit k set = site k is +1).
    pub fn energy_bits(&self, bits: u64) -> f64 {
        let sp = |k: usize| if bits >> k & 1 == 1 { 1.0 } else { -1.0 };
        let mut e = 0.0;
        for &(a, b, j) in &self.pairs {
            e -= j * sp(a) * sp(b);
        }
        for (a, h) in self.h_eff.iter().enumerate() {
            e -= h * sp(a);
        }
        e
    }

    /// Local field Σ_b J_ab σ_b + h_eff_a acting on site a.
    pub fn local_field(&self, s: &[i8], a: usize) -> f64 {
        let mut f = self.h_eff[a];
        for &(b, j) in &self.adj[a] {
            f += j * s[b] as f64;
        }
        f
    }
}

impl Model {
    pub fn new(region: Region, interaction: Interaction, bc: Boundary) -> Model {
        Model {
            region,
            interaction,
            field: Field::Zero,
            wall: None,
            bc,
            beta: 1.0,
        }
    }

    pub fn with_field(mut self, field: Field) -> Model {
        self.field = field;
        self
    }

    pub fn with_wall(mut self, wall: Wall) -> Model {
        self.wall = Some(wall);
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Model {
        self.beta = beta;
        self
    }

    pub fn with_bc(mut self, bc: Boundary) -> Model {
        self.bc = bc;
        self
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::Param(format!("β={} must be finite and ≥ 0", self.beta)));
        }
        self.interaction.validate(self.dim())?;
        self.field.validate()?;
        if let Some(w) = &self.wall {
            let ax = self.dim() - 1;
            if let Some(p) = self.region.iter().find(|p| p.get(ax) < w.layer) {
                return Err(Error::Param(format!("site {p:?} lies below the wall")));
            }
        }
        match &self.bc {
            Boundary::OmegaL { l } => {
                if self.wall.is_none() {
                    return Err(Error::Param("ω^L boundary condition needs a wall".into()));
                }
                if *l < 1 {
                    return Err(Error::Param(format!("ω^L needs L ≥ 1, got {l}")));
                }
            }
            Boundary::Explicit { spins, default } => {
                if spins.values().chain(default.iter()).any(|s| *s != 1 && *s != -1) {
                    return Err(Error::Param("explicit spins must be ±1".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Whether the site exists in the lattice (semi-infinite geometry removes i_d < layer).
    pub fn exists(&self, y: &Point) -> bool {
        match &self.wall {
            Some(w) => y.get(y.dim() - 1) >= w.layer,
            None => true,
        }
    }

    /// Spin of an exterior site; None for free bc.
    pub fn exterior_spin(&self, y: &Point) -> Result<Option<i8>> {
        let ax = y.dim() - 1;
        Ok(match &self.bc {
            Boundary::Plus => Some(1),
            Boundary::Minus => Some(-1),
            Boundary::Free => None,
            Boundary::MinusPlus { split } => Some(if y.get(ax) >= *split { -1 } else { 1 }),
            Boundary::OmegaL { .. } => Some(-1),
            Boundary::Explicit { spins, default } => match spins.get(y).or(default.as_ref()) {
                Some(s) => Some(*s),
                None => {
                    return Err(Error::State(format!("exterior spin at {y:?} unresolved")))
                }
            },
        })
    }

    /// Virtual spin felt by a wall site through the wall coupling.
    pub fn wall_spin(&self, x: &Point) -> i8 {
        match &self.bc {
            Boundary::OmegaL { l } => {
                let inside = (0..x.dim() - 1).all(|k| x.get(k).abs() <= *l);
                if inside {
                    1
                } else {
                    -1
                }
            }
            _ => 1,
        }
    }

    pub fn is_wall_site(&self, x: &Point) -> bool {
        matches!(&self.wall, Some(w) if x.get(x.dim() - 1) == w.layer)
    }

    pub fn compile(&self) -> Result<Compiled> {
        self.validate()?;
        let d = self.dim();
        let n = self.region.len();
        let couplings = self.interaction.couplings(d);
        let mut pairs = Vec::new();
        let mut ext_map: BTreeMap<(usize, i8), f64> = BTreeMap::new();
        let mut h = Vec::with_capacity(n);
        for (a, x) in self.region.iter().enumerate() {
            h.push(self.field.at(x)?);
            for (v, jv) in &couplings {
                let y = x.add(v);
                let j = jv.unwrap_or_else(|| self.interaction.coupling_unchecked(x, &y));
                if j == 0.0 {
                    continue;
                }
                if let Some(b) = self.region.index_of(&y) {
                    if a < b {
                        pairs.push((a, b, j));
                    }
                } else if self.exists(&y) {
                    if let Some(s) = self.exterior_spin(&y)? {
                        *ext_map.entry((a, s)).or_insert(0.0) += j;
                    }
                }
            }
            if let Some(w) = &self.wall {
                if self.is_wall_site(x) && w.lambda != 0.0 {
                    *ext_map.entry((a, self.wall_spin(x))).or_insert(0.0) += w.lambda;
                }
            }
        }
        let ext: Vec<(usize, f64, i8)> = ext_map.into_iter().map(|((a, s), j)| (a, j, s)).collect();
        let mut h_eff = h.clone();
        for &(a, j, s) in &ext {
            h_eff[a] += j * s as f64;
        }
        let mut adj = vec![Vec::new(); n];
        for &(a, b, j) in &pairs {
            adj[a].push((b, j));
            adj[b].push((a, j));
        }
        Ok(Compiled {
            region: self.region.clone(),
            beta: self.beta,
            pairs,
            ext,
            h,
            h_eff,
            adj,
        })
    }

    pub fn coupling(&self, x: &Point, y: &Point) -> Result<f64> {
        if !self.exists(x) || !self.exists(y) {
            return Ok(0.0);
        }
        self.interaction.coupling(x, y)
    }
}

pub fn hamiltonian(m: &Model, sigma: &Configuration) -> Result<f64> {
    if sigma.region != m.region {
        return Err(Error::State("configuration region differs from model region".into()));
    }
    Ok(m.compile()?.energy(&sigma.spins))
}

/// H = constant + disagreement_cost − Σ h σ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LowTempEnergy {
    pub constant: f64,
    pub disagreement_cost: f64,
    pub field_term: f64,
}

pub fn low_temp_energy(m: &Model, sigma: &Configuration) -> Result<LowTempEnergy> {
    if !m.interaction.is_nearest_neighbor() {
        return Err(Error::Unsupported(
            "low-temperature representation needs a nearest-neighbour interaction".into(),
        ));
    }
    let c = m.compile()?;
    let s = &sigma.spins;
    let mut constant = 0.0;
    let mut cost = 0.0;
    for &(a, b, j) in &c.pairs {
        constant -= j;
        if s[a] != s[b] {
            cost += 2.0 * j;
        }
    }
    for &(a, j, eta) in &c.ext {
        constant -= j;
        if s[a] != eta {
            cost += 2.0 * j;
        }
    }
    let field_term = c.h.iter().zip(s).map(|(h, v)| h * *v as f64).sum();
    Ok(LowTempEnergy {
        constant,
        disagreement_cost: cost,
        field_term,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Flux {
    pub value: f64,
    /// Upper bound on the omitted couplings beyond the truncation radius.
    pub tail_bound: f64,
}

/// Tail Σ_{|y|>R} J_0y ≤ 2^{d−1+α} e^{d−1} J R^{d−α}/(α−d).
pub fn long_range_tail(j: f64, alpha: f64, d: usize, r: f64) -> f64 {
    let df = d as f64;
    2f64.powf(df - 1.0 + alpha) * (df - 1.0).exp() * j * r.powf(df - alpha) / (alpha - df)
}

/// F_B = Σ_{x∈B, y∉B} J_xy on Z^d (the wall plays no role here).
pub fn boundary_flux(inter: &Interaction, b: &Region) -> Flux {
    if b.is_empty() {
        return Flux {
            value: 0.0,
            tail_bound: 0.0,
        };
    }
    let d = b.dim();
    let couplings = inter.couplings(d);
    let mut value = 0.0;
    for x in b.iter() {
        for (v, jv) in &couplings {
            let y = x.add(v);
            if !b.contains(&y) {
                value += jv.unwrap_or_else(|| inter.coupling_unchecked(x, &y));
            }
        }
    }
    let tail_bound = match inter {
        Interaction::LongRange {
            j, alpha, cutoff, ..
        } => b.len() as f64 * long_range_tail(*j, *alpha, d, *cutoff as f64),
        _ => 0.0,
    };
    Flux { value, tail_bound }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_box;

    fn p(c: &[i32]) -> Point {
        Point::new(c)
    }

    #[test]
    fn couplings() {
        let nn = Interaction::nn(2.0);
        assert_eq!(nn.coupling(&p(&[0, 0]), &p(&[0, 1])).unwrap(), 2.0);
        assert_eq!(nn.coupling(&p(&[0, 0]), &p(&[1, 1])).unwrap(), 0.0);
        assert!(nn.coupling(&p(&[0, 0]), &p(&[0, 0])).is_err());
        let lr = Interaction::long_range(1.0, 2.0, Norm::L2, 64);
        assert!((lr.coupling(&p(&[0, 0]), &p(&[3, 4])).unwrap() - 1.0 / 25.0).abs() < 1e-15);
        let wm = Interaction::WallModified {
            j: 1.0,
            lambda: 0.6,
            layer: 0,
        };
        assert_eq!(wm.coupling(&p(&[0, 0]), &p(&[0, -1])).unwrap(), 0.3);
        assert_eq!(wm.coupling(&p(&[0, 1]), &p(&[0, 0])).unwrap(), 0.3);
        assert_eq!(wm.coupling(&p(&[0, 0]), &p(&[1, 0])).unwrap(), 1.0);
        assert_eq!(wm.coupling(&p(&[0, 2]), &p(&[0, 1])).unwrap(), 1.0);
    }

    #[test]
    fn single_site_energy() {
        let r = Region::single(p(&[0, 0]));
        let m = Model::new(r.clone(), Interaction::nn(1.0), Boundary::Free)
            .with_field(Field::Constant { h: 0.7 });
        let s = Configuration::constant(&r, 1);
        assert_eq!(hamiltonian(&m, &s).unwrap(), -0.7);
    }

    #[test]
    fn box_energies() {
        let b = build_box(1, 1, 2, 0).unwrap();
        let s = Configuration::constant(&b, 1);
        let free = Model::new(b.clone(), Interaction::nn(1.0), Boundary::Free);
        assert_eq!(hamiltonian(&free, &s).unwrap(), -7.0);
        // 3×2 box: 3+3 horizontal exterior bonds, 2+2 vertical
        let plus = free.clone().with_bc(Boundary::Plus);
        assert_eq!(hamiltonian(&plus, &s).unwrap(), -7.0 - 10.0);
    }

    #[test]
    fn wall_and_omega() {
        let b = build_box(2, 2, 2, 1).unwrap();
        let m = Model::new(b.clone(), Interaction::nn(1.0), Boundary::OmegaL { l: 1 })
            .with_wall(Wall::at(0.5, 1));
        let c = m.compile().unwrap();
        let w: Vec<_> = b.iter().enumerate().filter(|(_, x)| x.get(1) == 1).collect();
        for (a, x) in w {
            let expect = if x.get(0).abs() <= 1 { 0.5 } else { -0.5 };
            let side = if x.get(0).abs() == 2 { -1.0 } else { 0.0 };
            assert!((c.h_eff[a] - expect - side).abs() < 1e-15, "{x:?}");
        }
        let bad = m.clone().with_bc(Boundary::OmegaL { l: 0 });
        assert!(bad.compile().is_err());
        let below = Model::new(build_box(1, 1, 2, 0).unwrap(), Interaction::nn(1.0), Boundary::Plus)
            .with_wall(Wall::at(1.0, 1));
        assert!(below.compile().is_err());
    }

    #[test]
    fn explicit_bc_unresolved() {
        let r = Region::single(p(&[0, 0]));
        let m = Model::new(
            r,
            Interaction::nn(1.0),
            Boundary::Explicit {
                spins: BTreeMap::new(),
                default: None,
            },
        );
        assert!(matches!(m.compile(), Err(Error::State(_))));
    }

    #[test]
    fn low_temp_single_minus() {
        let b = Region::rect(&[-1, -1], &[1, 1]);
        let m = Model::new(b.clone(), Interaction::nn(1.0), Boundary::Plus);
        let mut s = Configuration::constant(&b, 1);
        s.spins[b.index_of(&p(&[0, 0])).unwrap()] = -1;
        let lt = low_temp_energy(&m, &s).unwrap();
        assert_eq!(lt.disagreement_cost, 8.0);
        let h = hamiltonian(&m, &s).unwrap();
        assert!((lt.constant + lt.disagreement_cost - lt.field_term - h).abs() < 1e-12);
        let lr = m.clone();
        let lr = Model {
            interaction: Interaction::long_range(1.0, 3.0, Norm::L2, 4),
            ..lr
        };
        assert!(matches!(low_temp_energy(&lr, &s), Err(Error::Unsupported(_))));
    }

    #[test]
    fn flux() {
        let o = Region::single(p(&[0, 0]));
        assert_eq!(boundary_flux(&Interaction::nn(1.5), &o).value, 6.0);
        assert_eq!(boundary_flux(&Interaction::nn(1.5), &Region::empty(2)).value, 0.0);
    }
}
