//! One function per subcommand. Each returns whether every audit it ran passed.

use isinglab::coarse::{
    census_coarse_audit, census_corpus, covering_number_estimate, geometry_lemma_audit,
    GeometryConstants, LemmaTally,
};
use isinglab::contour::{census_report, enumerate_census, Census};
use isinglab::exact::{inequality_audit, solve_capped, wall_free_energy_exact, Inequality};
use isinglab::lattice::{Point, Region};
use isinglab::model::Model;
use isinglab::rfield::{
    ball, bad_event_estimate, delta_tail_audit, greedy_animal, joint_peierls_estimate,
    sample_field_stream, Disorder, TailAuditSpec,
};
use isinglab::sampler::{layer_profile, metropolis_run, McRun, Observable};
use serde::Serialize;

use crate::config::{self, Kind, Lemma, Task};
use crate::report::{fmt_f64, Sink, Table};

/// Settings shared by every command after flag, env and file resolution.
#[derive(Clone, Debug, Serialize)]
pub struct Common {
    pub seed: u64,
    pub max_exact_sites: usize,
}

#[derive(Serialize)]
struct Resolved<'a, P: Serialize> {
    command: &'static str,
    #[serde(flatten)]
    common: &'a Common,
    params: &'a P,
}

type Outcome = Result<bool, String>;

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn site_label(p: &Point) -> String {
    p.coords().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
}

fn check_cap(m: &Model, common: &Common) -> Result<(), String> {
    if m.region.len() > common.max_exact_sites {
        return Err(format!(
            "capacity error: {} sites exceed --max-exact-sites {}",
            m.region.len(),
            common.max_exact_sites
        ));
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct ExactParams {
    pub model: Model,
    pub wall_lambda_max: Option<f64>,
    pub wall_points: usize,
}

#[derive(Serialize)]
struct SiteRow {
    site: Point,
    magnetization: f64,
}

#[derive(Serialize)]
struct ExactResults {
    sites: usize,
    log_z: f64,
    energy: f64,
    mean_magnetization: f64,
    magnetizations: Vec<SiteRow>,
    wall: Option<isinglab::exact::WallFreeEnergy>,
}

pub fn exact(p: &ExactParams, common: &Common, sink: &Sink) -> Outcome {
    check_cap(&p.model, common)?;
    let st = solve_capped(&p.model, common.max_exact_sites).map_err(err)?;
    let compiled = p.model.compile().map_err(err)?;
    let mags = st.magnetizations();
    let energy = st.expect(|b| compiled.energy_bits(b));
    let wall = match p.wall_lambda_max {
        Some(l) => Some(wall_free_energy_exact(&p.model, l, p.wall_points).map_err(err)?),
        None => None,
    };
    let res = ExactResults {
        sites: st.n(),
        log_z: st.log_z,
        energy,
        mean_magnetization: mags.iter().sum::<f64>() / mags.len() as f64,
        magnetizations: p
            .model
            .region
            .iter()
            .zip(&mags)
            .map(|(x, m)| SiteRow {
                site: *x,
                magnetization: *m,
            })
            .collect(),
        wall,
    };
    let mut t = Table::new(&["site", "magnetization"]);
    for r in &res.magnetizations {
        t.push(vec![site_label(&r.site), fmt_f64(r.magnetization)]);
    }
    sink.csv("exact_sites.csv", &t)?;
    if let Some(w) = &res.wall {
        let mut t = Table::new(&["lambda", "tau", "integrand", "quadrature"]);
        for k in 0..w.lambdas.len() {
            t.push(vec![
                fmt_f64(w.lambdas[k]),
                fmt_f64(w.tau[k]),
                fmt_f64(w.integrand[k]),
                fmt_f64(w.quadrature[k]),
            ]);
        }
        sink.csv("exact_wall.csv", &t)?;
        println!(
            "exact wall: {} points up to lambda={}, max quadrature error {:.3e}",
            w.lambdas.len(),
            p.wall_lambda_max.unwrap_or(0.0),
            w.max_quadrature_error
        );
    }
    sink.json("exact.json", &Resolved { command: "exact", common, params: p }, &res)?;
    println!(
        "exact: {} sites, log Z = {:.12}, <H> = {:.12}, mean <sigma> = {:.12}",
        res.sites, res.log_z, res.energy, res.mean_magnetization
    );
    Ok(true)
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleParams {
    pub run: McRun,
    pub observables: Vec<Observable>,
    pub profile: bool,
    pub exact_check: bool,
}

#[derive(Serialize)]
struct SampleRow {
    observable: String,
    mean: f64,
    se: f64,
    exact: Option<f64>,
    z: Option<f64>,
}

#[derive(Serialize)]
struct SampleResults {
    acceptance: f64,
    samples: usize,
    rows: Vec<SampleRow>,
    exact_check: Option<bool>,
    profile: Option<isinglab::sampler::LayerProfile>,
}

/// Number of standard errors allowed between a Monte Carlo mean and the exact value.
pub const MC_SE_LIMIT: f64 = 3.0;

fn exact_observable(m: &Model, o: &Observable, cap: usize) -> Result<f64, String> {
    let st = solve_capped(m, cap).map_err(err)?;
    let idx = |p: &Point| {
        m.region
            .index_of(p)
            .ok_or_else(|| format!("{p:?} is not in the region"))
    };
    let ax = m.dim() - 1;
    Ok(match o {
        Observable::Spin { at } => st.magnetization(idx(at)?),
        Observable::Pair { a, b } => {
            let (i, j) = (idx(a)?, idx(b)?);
            if i == j {
                1.0
            } else {
                st.corr(1 << i | 1 << j)
            }
        }
        Observable::Magnetization => st.magnetizations().iter().sum::<f64>() / m.region.len() as f64,
        Observable::Energy => {
            let c = m.compile().map_err(err)?;
            st.expect(|b| c.energy_bits(b))
        }
        Observable::Layer { layer } => {
            let ks: Vec<usize> = m
                .region
                .iter()
                .enumerate()
                .filter(|(_, p)| p.get(ax) == *layer)
                .map(|(k, _)| k)
                .collect();
            if ks.is_empty() {
                return Err(format!("no sites at layer {layer}"));
            }
            ks.iter().map(|k| st.magnetization(*k)).sum::<f64>() / ks.len() as f64
        }
    })
}

pub fn sample(p: &SampleParams, common: &Common, sink: &Sink) -> Outcome {
    let sum = metropolis_run(&p.run, &p.observables).map_err(err)?;
    let check = p.exact_check && p.run.model.region.len() <= common.max_exact_sites;
    let mut rows = Vec::new();
    for (k, o) in p.observables.iter().enumerate() {
        let e = sum.estimates[k];
        let exact = if check {
            Some(exact_observable(&p.run.model, o, common.max_exact_sites)?)
        } else {
            None
        };
        let z = exact.map(|x| {
            let diff = (e.mean - x).abs();
            if diff == 0.0 {
                0.0
            } else {
                diff / e.se
            }
        });
        rows.push(SampleRow {
            observable: sum.labels[k].clone(),
            mean: e.mean,
            se: e.se,
            exact,
            z,
        });
    }
    let profile = if p.profile {
        Some(layer_profile(&p.run).map_err(err)?)
    } else {
        None
    };
    let ok = rows.iter().all(|r| r.z.map_or(true, |z| z <= MC_SE_LIMIT));
    let res = SampleResults {
        acceptance: sum.acceptance,
        samples: sum.series.first().map_or(0, |s| s.len()),
        exact_check: check.then_some(ok),
        rows,
        profile,
    };
    let mut t = Table::new(&["observable", "mean", "se", "exact", "z"]);
    for r in &res.rows {
        t.push(vec![
            r.observable.clone(),
            fmt_f64(r.mean),
            fmt_f64(r.se),
            r.exact.map(fmt_f64).unwrap_or_default(),
            r.z.map(fmt_f64).unwrap_or_default(),
        ]);
    }
    sink.csv("sample.csv", &t)?;
    if let Some(pr) = &res.profile {
        let mut t = Table::new(&["layer", "mean", "se", "n"]);
        for l in &pr.layers {
            t.push(vec![l.layer.to_string(), fmt_f64(l.mean), fmt_f64(l.se), l.n.to_string()]);
        }
        sink.csv("sample_layers.csv", &t)?;
        let w = pr.layers.iter().find(|l| l.layer == pr.wall_layer);
        println!(
            "sample profile: wall layer {} m = {:.6} +/- {:.6}, wet={}, dry={}",
            pr.wall_layer,
            w.map_or(f64::NAN, |l| l.mean),
            w.map_or(f64::NAN, |l| l.se),
            pr.wall_wet,
            pr.wall_dry
        );
    }
    sink.json("sample.json", &Resolved { command: "sample", common, params: p }, &res)?;
    println!(
        "sample: {} sweeps after burn-in {}, acceptance {:.4}",
        p.run.sweeps - p.run.burn_in,
        p.run.burn_in,
        res.acceptance
    );
    if check {
        let max_z = res.rows.iter().filter_map(|r| r.z).fold(0.0, f64::max);
        println!(
            "sample mc-vs-exact: {} {} observables, max |mc - exact|/se = {:.3} (limit {MC_SE_LIMIT})",
            verdict(ok),
            res.rows.len(),
            max_z
        );
    }
    Ok(ok)
}

#[derive(Clone, Debug, Serialize)]
pub struct ContourParams {
    #[serde(rename = "box")]
    pub box_: String,
}

fn census_of(box_: &str) -> Result<Census, String> {
    let dims = config::parse_dims(box_)?;
    if dims.len() != 2 {
        return Err(format!("census boxes are two-dimensional, got {box_}"));
    }
    enumerate_census(&config::box_region(&dims, None)?).map_err(err)
}

pub fn contour(p: &ContourParams, common: &Common, sink: &Sink) -> Outcome {
    let census = census_of(&p.box_)?;
    let rep = census_report(&census);
    let size = census.by_size();
    let ext = census.by_exterior_boundary();
    let mut ns: Vec<usize> = size.keys().chain(ext.keys()).copied().collect();
    ns.sort();
    ns.dedup();
    let mut t = Table::new(&["n", "by_size", "by_exterior_boundary"]);
    for n in ns {
        t.push(vec![
            n.to_string(),
            size.get(&n).copied().unwrap_or(0).to_string(),
            ext.get(&n).copied().unwrap_or(0).to_string(),
        ]);
    }
    sink.csv("census.csv", &t)?;
    #[derive(Serialize)]
    struct R<'a> {
        contours: usize,
        report: &'a isinglab::contour::CensusReport,
    }
    let res = R {
        contours: census.entries.len(),
        report: &rep,
    };
    sink.json("contour.json", &Resolved { command: "contour", common, params: p }, &res)?;
    println!(
        "contour census {}: {} contours, max ln(count)/n = {:.6}, fit slope = {:.6}",
        p.box_,
        census.entries.len(),
        rep.max_rate,
        rep.fit_slope
    );
    Ok(true)
}

#[derive(Clone, Debug, Serialize)]
pub struct CoarseParams {
    pub lemma: Lemma,
    pub rect: String,
    pub lambda: f64,
    pub levels: Vec<u32>,
    pub samples: usize,
    #[serde(rename = "box")]
    pub box_: String,
    pub ell_max: u32,
    pub sizes: Option<Vec<usize>>,
    pub eps: f64,
    pub ladder_depth: u32,
}

fn tally_row(t: &mut Table, lemma: &str, level: String, x: &LemmaTally) {
    t.push(vec![
        lemma.into(),
        level,
        x.exhaustive.to_string(),
        x.checked.to_string(),
        x.skipped.to_string(),
        fmt_f64(x.min_slack),
        x.passed().to_string(),
    ]);
}

fn tally_line(x: &LemmaTally) -> String {
    format!(
        "{} sets checked ({}), {} outside the hypothesis, min slack {}",
        x.checked,
        if x.exhaustive { "exhaustive" } else { "sampled" },
        x.skipped,
        x.min_slack
    )
}

pub fn coarse(p: &CoarseParams, common: &Common, sink: &Sink) -> Outcome {
    match p.lemma {
        Lemma::Geo1 | Lemma::Geo2 => {
            let dims = config::parse_dims(&p.rect)?;
            let levels: &[u32] = if p.lemma == Lemma::Geo1 { &[] } else { &p.levels };
            let rep = geometry_lemma_audit(&dims, p.lambda, levels, p.samples, common.seed)
                .map_err(err)?;
            let k = &rep.constants;
            let mut t = Table::new(&[
                "lemma", "level", "exhaustive", "checked", "skipped", "min_slack", "passed",
            ]);
            let ok = if p.lemma == Lemma::Geo1 {
                tally_row(&mut t, "geo1", String::new(), &rep.projection);
                println!(
                    "coarse geo1: {} c={} (d={}, lambda={}) on {}: {}",
                    verdict(rep.projection.passed()),
                    k.c,
                    k.d,
                    k.lambda,
                    p.rect,
                    tally_line(&rep.projection)
                );
                rep.projection.passed()
            } else {
                for cp in &rep.cube_pairs {
                    tally_row(&mut t, "geo2", cp.level.to_string(), &cp.tally);
                    println!(
                        "coarse geo2 level={}: {} b={} (d={}): {}",
                        cp.level,
                        verdict(cp.tally.passed()),
                        k.b,
                        k.d,
                        tally_line(&cp.tally)
                    );
                }
                rep.cube_pairs.iter().all(|c| c.tally.passed())
            };
            sink.csv("coarse_geometry.csv", &t)?;
            sink.json("coarse.json", &Resolved { command: "coarse", common, params: p }, &rep)?;
            Ok(ok)
        }
        Lemma::Census => {
            let census = census_of(&p.box_)?;
            let k = GeometryConstants::standard(2).map_err(err)?;
            let rep = census_coarse_audit(&census, p.ell_max, &k).map_err(err)?;
            let mut t = Table::new(&[
                "n", "level", "contours", "max_pairs", "pairs_bound", "max_sym_diff", "sym_diff_bound",
            ]);
            for r in &rep.by_size {
                t.push(vec![
                    r.n.to_string(),
                    r.level.to_string(),
                    r.contours.to_string(),
                    r.max_pairs.to_string(),
                    fmt_f64(r.pairs_bound),
                    r.max_sym_diff.to_string(),
                    fmt_f64(r.sym_diff_bound),
                ]);
            }
            sink.csv("coarse_census.csv", &t)?;
            for l in &rep.levels {
                println!(
                    "coarse census {} level={}: {} max pairs ratio {:.6} (b1={}), max sym-diff ratio {:.6} (b2={}), {} violations",
                    p.box_,
                    l.level,
                    verdict(l.violations == 0 && rep.contours > 0),
                    l.max_pairs_ratio,
                    k.b1,
                    l.max_sym_diff_ratio,
                    k.b2,
                    l.violations
                );
            }
            sink.json("coarse.json", &Resolved { command: "coarse", common, params: p }, &rep)?;
            Ok(rep.passed())
        }
        Lemma::Covering => {
            let census = census_of(&p.box_)?;
            let sizes: Vec<usize> = match &p.sizes {
                Some(s) => s.clone(),
                None => census.by_size().keys().copied().collect(),
            };
            let corpus = census_corpus(&census, &sizes);
            let est = covering_number_estimate(&corpus, &p.levels, p.eps, p.ladder_depth)
                .map_err(err)?;
            let mut t = Table::new(&[
                "n", "level", "radius", "cover", "greedy", "distinct_b", "max_group_d2",
            ]);
            let mut lt = Table::new(&["n", "radius", "cover"]);
            for e in &est {
                for r in &e.rows {
                    t.push(vec![
                        r.n.to_string(),
                        r.level.to_string(),
                        fmt_f64(r.radius),
                        r.cover.to_string(),
                        r.greedy.to_string(),
                        r.distinct_b.to_string(),
                        fmt_f64(r.max_group_d2),
                    ]);
                }
                for r in &e.ladder {
                    lt.push(vec![e.n.to_string(), fmt_f64(r.radius), r.cover.to_string()]);
                }
                println!(
                    "coarse covering n={}: {} contours, {} distinct interiors, diameter {:.6}, Dudley sum {:.6}",
                    e.n, e.contours, e.distinct_interiors, e.diameter, e.dudley_integral
                );
            }
            sink.csv("coarse_covering.csv", &t)?;
            sink.csv("coarse_ladder.csv", &lt)?;
            sink.json("coarse.json", &Resolved { command: "coarse", common, params: p }, &est)?;
            Ok(true)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RfieldParams {
    pub task: Task,
    pub dist: Disorder,
    pub eps: f64,
    pub dim: usize,
    pub k_max: usize,
    pub kind: Kind,
    pub seeds: usize,
    pub model: Option<Model>,
    pub set: Vec<Point>,
    pub set_prime: Vec<Point>,
    pub samples: usize,
    pub lambdas: Vec<f64>,
    pub c: f64,
    pub fields: usize,
    pub sizes: Option<Vec<usize>>,
}

impl RfieldParams {
    fn model(&self) -> Result<&Model, String> {
        self.model
            .as_ref()
            .ok_or_else(|| "this task needs a model region: set model.box or --box".to_string())
    }
}

pub fn rfield(p: &RfieldParams, common: &Common, sink: &Sink) -> Outcome {
    let cfg = Resolved { command: "rfield", common, params: p };
    match p.task {
        Task::Animal => {
            if p.k_max == 0 {
                return Err("k_max must be at least 1".into());
            }
            let region = Region::from_points(p.dim, ball(p.dim, p.k_max as i64 - 1));
            let o = Point::origin(p.dim);
            let mut rows = Vec::new();
            let mut t = Table::new(&["stream", "h0", "best_ratio", "best_size", "animals"]);
            for i in 0..p.seeds as u64 {
                let h = sample_field_stream(&region, p.dist, p.eps, common.seed, i);
                let r = greedy_animal(&h, p.k_max, p.kind.boundary()).map_err(err)?;
                t.push(vec![
                    i.to_string(),
                    fmt_f64(h.at(&o).unwrap_or(f64::NAN)),
                    fmt_f64(r.best_ratio),
                    r.best_set.len().to_string(),
                    r.animals.to_string(),
                ]);
                rows.push(r);
            }
            sink.csv("rfield_animal.csv", &t)?;
            sink.json("rfield.json", &cfg, &rows)?;
            let mean = rows.iter().map(|r| r.best_ratio).sum::<f64>() / rows.len().max(1) as f64;
            println!(
                "rfield animal: {} fields, k_max={}, mean sup ratio {:.6}",
                rows.len(),
                p.k_max,
                mean
            );
            Ok(true)
        }
        Task::Tail => {
            let m = p.model()?;
            check_cap(m, common)?;
            if p.set.is_empty() {
                return Err("the tail task needs rfield.set (the set A)".into());
            }
            let d = m.dim();
            let a = Region::from_points(d, p.set.clone());
            let ap = Region::from_points(d, p.set_prime.clone());
            let spec = TailAuditSpec {
                a: &a,
                a_prime: &ap,
                dist: p.dist,
                eps: p.eps,
                n_samples: p.samples,
                lambdas: &p.lambdas,
                seed: common.seed,
            };
            let rep = delta_tail_audit(m, &spec).map_err(err)?;
            let mut t = Table::new(&["lambda", "hits", "frequency", "wilson_upper", "bound", "passed"]);
            for r in &rep.tails {
                t.push(vec![
                    fmt_f64(r.lambda),
                    r.hits.to_string(),
                    fmt_f64(r.frequency),
                    fmt_f64(r.wilson_upper),
                    fmt_f64(r.bound),
                    r.passed.to_string(),
                ]);
            }
            sink.csv("rfield_tail.csv", &t)?;
            sink.json("rfield.json", &cfg, &rep)?;
            println!(
                "rfield tail: {} |A|={} eps={} n={}: mean {:.4e} (se {:.4e}), KS {:.4} <= {:.4}, antisymmetry residual {:e}, Lipschitz ratio {:.6}",
                verdict(rep.passed()),
                rep.set_size,
                rep.eps,
                rep.n_samples,
                rep.mean,
                rep.se,
                rep.ks.statistic,
                rep.ks.critical,
                rep.antisymmetry_residual,
                rep.lipschitz_ratio
            );
            Ok(rep.passed())
        }
        Task::Joint => {
            let m = p.model()?;
            check_cap(m, common)?;
            let rep = joint_peierls_estimate(m, p.dist, p.eps, p.fields, common.seed, p.c)
                .map_err(err)?;
            let mut t = Table::new(&["stream", "q"]);
            for (i, q) in rep.per_field.iter().enumerate() {
                t.push(vec![i.to_string(), fmt_f64(*q)]);
            }
            sink.csv("rfield_joint.csv", &t)?;
            sink.json("rfield.json", &cfg, &rep)?;
            println!(
                "rfield joint: {} fields, E mu+(sigma0=-1) = {:.6e} (se {:.3e}), e^(-C beta) = {:.6e}, e^(-C/eps^2) = {:.6e}",
                rep.n_fields, rep.q, rep.se, rep.energy_term, rep.field_term
            );
            Ok(true)
        }
        Task::BadEvent => {
            let m = p.model()?;
            check_cap(m, common)?;
            let census = enumerate_census(&m.region).map_err(err)?;
            let sizes: Vec<usize> = match &p.sizes {
                Some(s) => s.clone(),
                None => census.by_size().keys().copied().collect(),
            };
            let corpus = census_corpus(&census, &sizes);
            let rep = bad_event_estimate(&corpus, m, p.dist, p.eps, p.c, p.fields, common.seed)
                .map_err(err)?;
            let mut t = Table::new(&["stream", "sup_ratio"]);
            for (i, r) in rep.sup_ratios.iter().enumerate() {
                t.push(vec![i.to_string(), fmt_f64(*r)]);
            }
            sink.csv("rfield_bad_event.csv", &t)?;
            sink.json("rfield.json", &cfg, &rep)?;
            println!(
                "rfield bad-event: {} fields, {} contours, P = {:.6} (Wilson {:.6}..{:.6})",
                rep.n_fields, rep.contours, rep.probability, rep.wilson.0, rep.wilson.1
            );
            Ok(true)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditParams {
    pub suite: String,
    #[serde(rename = "box")]
    pub box_: String,
    pub draws: usize,
    pub tolerance: f64,
}

pub fn audit(p: &AuditParams, common: &Common, sink: &Sink) -> Outcome {
    let suite = Inequality::suite(&p.suite).ok_or_else(|| format!("unknown suite `{}`", p.suite))?;
    let dims = config::parse_dims(&p.box_)?;
    let cells: i32 = dims.iter().product();
    if cells as usize > common.max_exact_sites {
        return Err(format!(
            "capacity error: {cells} sites exceed --max-exact-sites {}",
            common.max_exact_sites
        ));
    }
    let reps = inequality_audit(&suite, &dims, p.draws, common.seed).map_err(err)?;
    let mut t = Table::new(&["inequality", "min_slack", "passed", "instances", "checks", "witness"]);
    let mut all = true;
    for r in &reps {
        let ok = r.min_slack >= -p.tolerance;
        all &= ok;
        t.push(vec![
            r.name.clone(),
            fmt_f64(r.min_slack),
            ok.to_string(),
            r.n_instances.to_string(),
            r.n_checks.to_string(),
            r.witness.clone(),
        ]);
        println!(
            "audit {} {}: {} min slack {:e} (tolerance {:e}, {} instances, {} checks)",
            r.name,
            p.box_,
            verdict(ok),
            r.min_slack,
            p.tolerance,
            r.n_instances,
            r.n_checks
        );
    }
    sink.csv("audit.csv", &t)?;
    sink.json("audit.json", &Resolved { command: "audit", common, params: p }, &reps)?;
    Ok(all)
}
