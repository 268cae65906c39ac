use std::fmt;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use aprank::diagnostics::{acf, psrf, tv_distance, DiagnosticReport, Distance};
use aprank::em::{em_run, EmConfig};
use aprank::error::Error as CoreError;
use aprank::estimators::{naive_marginal, rb_joint_pmf, rb_marginal};
use aprank::model::simulate_data;
use aprank::oracle::{
    build_k_pi_general, build_r, exact_posterior_pi, log_marginal_likelihood, sandwich_spectrum_compare,
    ExactPosteriorPi, KernelOptions,
};
use aprank::rng::{dirichlet, stream_rng};
use aprank::samplers::{run_chains, ChainConfig, ChainInit, ChainTrace, Variant};
use aprank::{CentralRanks, GroupTables, HyperParams, PermIndex, PriorPi, RankCounts, RankModel, ThetaVector};

use crate::config::RunConfig;
use crate::dataset::{export_dataset, load_dataset, write_schema, Schema};
use crate::output::{
    find_traces, matrix_csv, read_trace, state_order_comment, vector_csv, word, write_manifest, write_trace, OutDir,
    Summary,
};

/// Failure class attached as context; decides the exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Config,
    Data,
    Numerical,
}

impl Stage {
    pub fn exit_code(self) -> u8 {
        match self {
            Stage::Config => 2,
            Stage::Data => 3,
            Stage::Numerical => 4,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "configuration error",
            Stage::Data => "data error",
            Stage::Numerical => "numerical failure",
        })
    }
}

fn hyper(cfg: &RunConfig, tables: &GroupTables) -> Result<HyperParams> {
    let h = &cfg.hyper;
    let hp = match (&h.weights, h.lambda) {
        (Some(w), _) => {
            if w.len() != tables.size() {
                bail!("hyper: {} weights given for p! = {}", w.len(), tables.size());
            }
            HyperParams::from_weights(w.clone())?
        }
        (None, l) => HyperParams::from_lambda_scaled(l.unwrap_or(0.0), h.scale, tables)?,
    };
    Ok(hp)
}

fn load_schema(cfg: &RunConfig) -> Result<Option<Schema>> {
    cfg.data.schema.as_deref().map(Schema::load).transpose()
}

fn load_counts(cfg: &RunConfig) -> Result<(RankCounts, Schema)> {
    let d = &cfg.data;
    if let Some(path) = &d.path {
        let schema = load_schema(cfg)?.context("data: a schema is needed to read a data file")?;
        let ds = load_dataset(path, &schema)?;
        return Ok((ds.counts, schema));
    }
    if let (Some(p), Some(c)) = (d.items, &d.counts) {
        let counts = RankCounts::new(p, c.clone())?;
        let schema = load_schema(cfg)?.unwrap_or_else(|| Schema::plain(p, counts.categories()));
        return Ok((counts, schema));
    }
    bail!("no data: give --data with --schema, or [data] items and counts")
}

fn load_prior(cfg: &RunConfig, g: usize, size: usize) -> Result<PriorPi> {
    let Some(path) = &cfg.prior.path else {
        return Ok(PriorPi::uniform(g, size));
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening prior {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|v| v.parse::<f64>().with_context(|| format!("prior row {}: {v:?} is not a number", i + 1)))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.len() != g || rows.iter().any(|r| r.len() != size) {
        bail!("prior must have {g} rows of {size} probabilities");
    }
    Ok(PriorPi::new(rows)?)
}

pub fn load_model(cfg: &RunConfig) -> Result<RankModel> {
    let (counts, _) = load_counts(cfg).context(Stage::Data)?;
    let tables = Arc::new(GroupTables::build(counts.items())?);
    let hp = hyper(cfg, &tables).context(Stage::Config)?;
    let prior = load_prior(cfg, counts.categories(), tables.size()).context(Stage::Data)?;
    Ok(RankModel::new(tables, counts, hp, prior).context(Stage::Data)?)
}

fn ranks(v: &[usize], g: usize) -> Result<CentralRanks> {
    if v.len() != g {
        bail!("{} central ranks given for {g} categories", v.len());
    }
    Ok(CentralRanks::from_indices(v)?)
}

fn chain_config(cfg: &RunConfig, default: Variant) -> Result<ChainConfig> {
    let c = &cfg.chain;
    Ok(ChainConfig::new(c.iterations, cfg.variant(default)?, cfg.seed)
        .burnin(c.burnin)
        .thin(c.thin))
}

fn chain_init(cfg: &RunConfig, g: usize) -> Result<ChainInit> {
    Ok(match &cfg.chain.start {
        Some(v) => ChainInit::Ranks(ranks(v, g)?),
        None => ChainInit::Prior,
    })
}

fn try_exact(model: &RankModel, cap: usize) -> Result<Option<ExactPosteriorPi>> {
    match exact_posterior_pi(model, cap) {
        Ok(p) => Ok(Some(p)),
        Err(CoreError::CapExceeded { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

pub fn simulate(cfg: &RunConfig, out: &mut OutDir) -> Result<()> {
    let schema = match load_schema(cfg).context(Stage::Data)? {
        Some(s) => s,
        None => {
            let p = cfg.data.items.context("simulate: set [data] items or a schema").context(Stage::Config)?;
            let g = cfg.simulate.central_ranks.as_ref().map_or(1, Vec::len);
            Schema::plain(p, g)
        }
    };
    let g = schema.categories();
    let tables = GroupTables::build(schema.items)?;
    let (pi, per, hp) = (|| {
        let s = &cfg.simulate;
        let pi = ranks(s.central_ranks.as_deref().context("simulate: central_ranks missing")?, g)?;
        let per = s.per_category.clone().context("simulate: per_category missing")?;
        if per.len() != g {
            bail!("simulate: per_category has {} entries for {g} categories", per.len());
        }
        Ok((pi, per, hyper(cfg, &tables)?))
    })()
    .context(Stage::Config)?;
    let mut rng = stream_rng(cfg.seed, 0);
    let theta = match &cfg.simulate.theta {
        Some(t) => ThetaVector::new(t.clone()).context(Stage::Config)?,
        None => ThetaVector::new(dirichlet(hp.weights(), &mut rng))?,
    };
    let counts = simulate_data(&pi, &theta, &per, &tables, &mut rng)?;
    export_dataset(&out.path("data.csv"), &schema, &counts)?;
    out.record("data.csv");
    write_schema(&out.path("schema.toml"), &schema)?;
    out.record("schema.toml");
    let mut s = Summary::default();
    s.put("items", schema.items).put("categories", g);
    for (j, k) in pi.ranks().iter().enumerate() {
        s.put(&format!("pi.{}", j + 1), word(*k, schema.items)?);
    }
    for (k, t) in theta.as_slice().iter().enumerate() {
        s.put(&format!("theta.{}", k + 1), *t);
    }
    out.write("truth.txt", s.text())?;
    write_manifest(out, "simulate", cfg)
}

/// ACF and trace window of one `θ` component on the first chain, PSRF over
/// all chains, and TV of the first chain's Rao–Blackwellised joint pmf to
/// the exact posterior when it can be enumerated.
pub fn diagnostic_report(traces: &[ChainTrace], model: Option<&RankModel>, cfg: &RunConfig) -> Result<DiagnosticReport> {
    let d = &cfg.diagnose;
    let lead = traces.first().context("no chains")?;
    let k = PermIndex::new(d.component)?;
    if d.component > lead.size {
        bail!("diagnose: component {} exceeds p! = {}", d.component, lead.size);
    }
    let series = lead.theta_series(k);
    let mut report = DiagnosticReport {
        acf: acf(&series, d.max_lag)?,
        ..Default::default()
    };
    if traces.len() >= 2 {
        let all: Vec<Vec<f64>> = traces.iter().map(|t| t.theta_series(k)).collect();
        report.psrf = Some(psrf(&all)?);
    }
    if let Some(model) = model {
        if let Some(exact) = try_exact(model, cfg.oracle.state_cap)? {
            let pmf = rb_joint_pmf(lead, model, lead.len())?;
            report.distance = Some(Distance {
                value: tv_distance(&pmf, exact.probs())?,
                reference: "TV of chain 1 Rao-Blackwellised joint pmf to exact posterior of pi".into(),
            });
        }
    }
    if let Some([a, b]) = d.window {
        report.trace_window = Some(series[a.min(series.len())..b.min(series.len())].to_vec());
    }
    Ok(report)
}

fn report_text(report: &DiagnosticReport) -> String {
    let mut s = report.to_text();
    if let Some(w) = &report.trace_window {
        for (i, v) in w.iter().enumerate() {
            s.push_str(&format!("trace_window.{i} = {v:?}\n"));
        }
    }
    s
}

pub fn sample(cfg: &RunConfig, out: &mut OutDir, default: Variant, command: &str) -> Result<()> {
    let model = load_model(cfg)?;
    let chain = chain_config(cfg, default).context(Stage::Config)?;
    let init = chain_init(cfg, model.categories()).context(Stage::Config)?;
    let traces = run_chains(&chain, &model, &vec![init; cfg.chain.chains]).context(Stage::Numerical)?;
    for (c, t) in traces.iter().enumerate() {
        let name = format!("trace_{c}.csv");
        write_trace(&out.path(&name), t)?;
        out.record(&name);
    }
    let p = model.counts.items();
    let mut s = Summary::default();
    s.put("variant", chain.variant.name())
        .put("chains", traces.len())
        .put("retained", traces[0].len());
    for (c, t) in traces.iter().enumerate() {
        s.put(&format!("acceptance_rate.{}", c + 1), t.acceptance_rate());
    }
    let lead = &traces[0];
    for j in 0..model.categories() {
        for k in model.tables.indices() {
            let key = format!("pi.{}.{}", j + 1, word(k, p)?);
            let est = rb_marginal(lead, &model, j, k, cfg.chain.batches).context(Stage::Numerical)?;
            s.put(&format!("{key}.rb"), est.value)
                .put(&format!("{key}.rb_se"), est.se)
                .put(&format!("{key}.naive"), naive_marginal(lead, j, k)?);
        }
    }
    out.write("summary.txt", s.text())?;
    let report = diagnostic_report(&traces, Some(&model), cfg).context(Stage::Numerical)?;
    out.write("report.txt", &report_text(&report))?;
    write_manifest(out, command, cfg)
}

pub fn em(cfg: &RunConfig, out: &mut OutDir) -> Result<()> {
    let model = load_model(cfg)?;
    let e = &cfg.em;
    let variant = cfg.variant(Variant::SandwichUniform).context(Stage::Config)?;
    let mut config = EmConfig::new(
        e.lambda0,
        ChainConfig::new(e.inner_iterations, variant, cfg.seed),
        ChainConfig::new(e.final_iterations, variant, cfg.seed),
    );
    config.chains = cfg.chain.chains;
    config.max_iters = e.max_iters;
    config.plateau_window = e.plateau_window;
    config.plateau_range = e.plateau_range;
    config.search_interval = (e.search_interval[0], e.search_interval[1]);
    config.validate().context(Stage::Config)?;
    let res = em_run(&config, &model).context(Stage::Numerical)?;
    let mut traj = String::from("iteration,lambda,draws\n");
    for t in &res.trajectory {
        traj.push_str(&format!("{},{:?},{}\n", t.iteration, t.lambda, t.draws));
    }
    out.write("em_trajectory.csv", &traj)?;
    let mut s = Summary::default();
    s.put("lambda_hat", res.lambda_hat);
    match res.se {
        Some(se) => s.put("se", se),
        None => s.put("se", "undefined: observed information not positive"),
    };
    s.put("information", res.information)
        .put("converged", res.converged)
        .put("boundary", res.boundary)
        .put("iterations", res.trajectory.len());
    for (k, v) in res.elogtheta.iter().enumerate() {
        s.put(&format!("elogtheta.{}", k + 1), *v);
    }
    out.write("lambda_hat.txt", s.text())?;
    write_manifest(out, "em", cfg)
}

pub fn oracle(cfg: &RunConfig, out: &mut OutDir) -> Result<()> {
    let model = load_model(cfg)?;
    let p = model.counts.items();
    let (size, g) = (model.size(), model.categories());
    let post = exact_posterior_pi(&model, cfg.oracle.state_cap).context(Stage::Numerical)?;
    let comment = state_order_comment(size, g, p)?;
    out.write("posterior_pi.csv", &vector_csv("probability", post.probs(), &comment))?;
    let mut s = Summary::default();
    s.put("states", post.len())
        .put(
            "log_marginal_likelihood",
            log_marginal_likelihood(&model, cfg.oracle.state_cap).context(Stage::Numerical)?,
        );
    let mode = post
        .probs()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, &v)| (i, v))
        .context("empty posterior")?;
    let words = post
        .state(mode.0)
        .ranks()
        .iter()
        .map(|&k| word(k, p))
        .collect::<Result<Vec<_>>>()?;
    s.put("mode", format!("({})", words.join(","))).put("mode_probability", mode.1);
    for j in 0..g {
        for (k, v) in post.marginal(j).iter().enumerate() {
            s.put(&format!("pi.{}.{}", j + 1, word(PermIndex::new(k + 1)?, p)?), *v);
        }
    }
    if post.len() <= cfg.oracle.kernel_cap {
        let opts = KernelOptions {
            cap: cfg.oracle.kernel_cap,
            mc_draws: cfg.oracle.mc_draws,
            seed: cfg.seed,
        };
        let k = build_k_pi_general(&model, opts).context(Stage::Numerical)?;
        let r = build_r(&post, &model.tables).context(Stage::Numerical)?;
        out.write("k_pi.csv", &matrix_csv(&k, p)?)?;
        out.write("r.csv", &matrix_csv(&r, p)?)?;
        out.write("k_pi_r.csv", &matrix_csv(&k.then(&r)?, p)?)?;
        s.put("kernel", if p == 2 { "quadrature" } else { "monte_carlo" })
            .put("kernel_invariance_error", k.invariance_error(post.probs()));
        match sandwich_spectrum_compare(&k, &r, post.probs()) {
            Ok(cmp) => {
                let mut sp = String::from("index,da,sandwich\n");
                for (i, (a, b)) in cmp.rho.iter().zip(&cmp.rho_tilde).enumerate() {
                    sp.push_str(&format!("{},{a:?},{b:?}\n", i + 1));
                }
                out.write("spectrum.csv", &sp)?;
                s.put("rho_2", cmp.rho.get(1).copied().unwrap_or(f64::NAN))
                    .put("rho_tilde_2", cmp.rho_tilde.get(1).copied().unwrap_or(f64::NAN))
                    .put("dominance_max_excess", cmp.max_excess());
            }
            // Monte Carlo kernels are only approximately reversible.
            Err(CoreError::NotReversible(e)) => {
                s.put("spectrum", format!("skipped: kernel asymmetry {e:e}"));
            }
            Err(e) => return Err(anyhow::Error::new(e).context(Stage::Numerical)),
        }
    } else {
        s.put("kernel", format!("skipped: {} states exceed kernel_cap", post.len()));
    }
    out.write("oracle.txt", s.text())?;
    write_manifest(out, "oracle", cfg)
}

pub fn diagnose(cfg: &RunConfig, out: &mut OutDir, default_traces: &Path) -> Result<()> {
    let dir = cfg.diagnose.traces.clone().unwrap_or_else(|| default_traces.to_path_buf());
    let traces = find_traces(&dir)
        .and_then(|paths| paths.iter().map(|p| read_trace(p)).collect::<Result<Vec<_>>>())
        .context(Stage::Data)?;
    let has_data = cfg.data.path.is_some() || cfg.data.counts.is_some();
    let model = if has_data { Some(load_model(cfg)?) } else { None };
    if let Some(m) = &model {
        if traces.iter().any(|t| t.size != m.size() || t.categories != m.categories()) {
            return Err(anyhow::anyhow!("traces do not match the data's p and g").context(Stage::Data));
        }
    }
    let report = diagnostic_report(&traces, model.as_ref(), cfg).context(Stage::Numerical)?;
    out.write("report.txt", &report_text(&report))?;
    write_manifest(out, "diagnose", cfg)
}
