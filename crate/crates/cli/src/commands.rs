//! One function per subcommand: run the core operation, write its artifacts.

use anyhow::{anyhow, bail};
use serde::Serialize;
use serde_json::json;
use zhang_core::geometry::{
    build_atlas, chain_statistics, first_clean_level, iterate_regions, markov_coding, removability_certificate, bifurcation_scan,
    ContinuityAtlas, RegionSet, Removability, SearchLimits,
};
use zhang_core::io::Snapshot;
use zhang_core::scalar::{fmt_f64, format_rational, rational_to_f64};
use zhang_core::skew::{run_orbit, ExcitationSource, RecordOptions};
use zhang_core::spectral::{contraction_horizon, entropy_estimates, lyapunov_spectrum, rescale_entropy, EntropyLimits, HorizonMethod, LyapunovConfig};
use zhang_core::stats::{
    attractor_sample, box_dimension, maximal_avalanche, maximal_scaling, moran_bounds, run_statistics, scaling_sweep_threads,
    singular_value_inputs, thermo_rescale, MaximalAvalanche, SampleMode, StatsResult, SweepAxis, SweepTemplate,
};
use zhang_core::{EnergyVector, Lattice, ModelParams, Rational, Scalar, ZhangError};

use crate::config::RunConfig;
use crate::output::Sink;

/// Largest lattice for which an exact atlas is attempted.
const ATLAS_MAX_N: usize = 12;

fn f(v: f64) -> String {
    fmt_f64(v)
}

fn q(r: &Rational) -> String {
    format_rational(r)
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn run(command: &str, cfg: &RunConfig, sink: &mut Sink) -> anyhow::Result<()> {
    let params = cfg.params()?;
    let lat = cfg.lattice()?;
    match command {
        "simulate" => {
            if cfg.simulate.exact {
                simulate::<Rational>(cfg, &params, &lat, sink)
            } else {
                simulate::<f64>(cfg, &params, &lat, sink)
            }
        }
        "atlas" => atlas(cfg, &params, &lat, sink),
        "regions" => regions(cfg, &params, &lat, sink),
        "removability" => removability(cfg, &params, &lat, sink),
        "coding" => coding(cfg, &params, &lat, sink),
        "lyapunov" => lyapunov(cfg, &params, &lat, sink),
        "entropy" => entropy(cfg, &params, &lat, sink),
        "dimension" => dimension(cfg, &params, &lat, sink),
        "sweep" => sweep(cfg, sink),
        "maximal" => maximal(cfg, &params, &lat, sink),
        "bifurcation" => bifurcation(cfg, &lat, sink),
        "rescale" => rescale(cfg, &params, &lat, sink),
        other => bail!("unknown command `{other}`"),
    }
}

/// Rows of an energy field for plotting: one row for `d = 1`, `L` rows for `d = 2`.
fn raster(lat: &Lattice, values: &[f64]) -> Option<Vec<Vec<String>>> {
    match lat.d {
        1 => Some(vec![values.iter().map(|v| f(*v)).collect()]),
        2 => Some(values.chunks(lat.l).map(|row| row.iter().map(|v| f(*v)).collect()).collect()),
        _ => None,
    }
}

fn raster_header(lat: &Lattice) -> Vec<String> {
    (0..lat.l).map(|k| format!("x{k}")).collect()
}

fn write_raster(sink: &mut Sink, name: &str, lat: &Lattice, values: &[f64]) -> anyhow::Result<()> {
    if let Some(rows) = raster(lat, values) {
        let header = raster_header(lat);
        let h: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
        sink.csv(name, &h, rows)?;
    }
    Ok(())
}

fn histogram_rows(st: &StatsResult) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (name, h) in [("tau", &st.hist_tau), ("omega", &st.hist_omega), ("s_plus", &st.hist_splus)] {
        for (v, c) in h {
            rows.push(vec![name.to_string(), v.to_string(), c.to_string()]);
        }
    }
    rows
}

fn simulate<S: Scalar>(cfg: &RunConfig, params: &ModelParams, lat: &Lattice, sink: &mut Sink) -> anyhow::Result<()> {
    let sc = &cfg.simulate;
    let x0 = EnergyVector::<S>::zeros(lat.n);
    let mut orbit = run_orbit(&x0, &ExcitationSource::iid(cfg.rng.seed), params, lat, sc.burn_in + sc.events, RecordOptions::SUMMARY)?;
    orbit.set_grazing_tolerance(sc.grazing_tolerance);
    let mut rows = Vec::with_capacity(sc.events.min(1 << 24) as usize);
    let mut st = StatsResult::default();
    let mut grazing = 0u64;
    let mut k = 0u64;
    while let Some(r) = orbit.next() {
        let r = r?;
        if k >= sc.burn_in {
            rows.push(vec![(k - sc.burn_in).to_string(), r.start_site.to_string(), r.duration.to_string(), r.size.to_string(), r.waiting_time.to_string()]);
            st.push_record(&r);
            grazing += r.grazing as u64;
        }
        k += 1;
    }
    let state: Vec<S> = orbit.state().to_vec();
    let values: Vec<f64> = state.iter().map(|v| v.to_f64()).collect();
    sink.csv("events.csv", &["event_index", "start_site", "duration", "size", "waiting_time"], rows)?;
    sink.csv("histograms.csv", &["observable", "value", "count"], histogram_rows(&st))?;
    let exact_state: Option<Vec<String>> = S::EXACT.then(|| state.iter().map(|v| v.to_string()).collect());
    sink.json(
        "summary.json",
        &json!({
            "summary": st.summary(),
            "consistent": st.consistent(),
            "grazing_events": grazing,
            "exact": S::EXACT,
            "final_state": values.iter().map(|v| f(*v)).collect::<Vec<_>>(),
            "final_state_exact": exact_state,
        }),
    )?;
    sink.bytes("final_state.bin", "bin", &Snapshot::new(lat.d, lat.l, params, values.clone()).to_bytes())?;
    write_raster(sink, "final_state_raster.csv", lat, &values)
}

fn exact_atlas(cfg: &RunConfig, params: &ModelParams, lat: &Lattice, sink: &mut Sink) -> anyhow::Result<ContinuityAtlas> {
    if lat.n > ATLAS_MAX_N {
        return Err(ZhangError::Budget(format!("exact atlas limited to N <= {ATLAS_MAX_N}, got N = {}", lat.n)).into());
    }
    let atlas = build_atlas(params, lat, cfg.atlas.tau_cap, cfg.budgets.piece_budget)?;
    if !atlas.complete {
        sink.partial = true;
        sink.notes.push("atlas enumeration stopped at the depth cap or piece budget".into());
    }
    Ok(atlas)
}

fn signature(sets: &[Vec<usize>]) -> String {
    serde_json::to_string(sets).expect("plain vectors serialize")
}

fn atlas(cfg: &RunConfig, params: &ModelParams, lat: &Lattice, sink: &mut Sink) -> anyhow::Result<()> {
    let atlas = exact_atlas(cfg, params, lat, sink)?;
    let mut rows = Vec::new();
    for (i, ps) in atlas.pieces.iter().enumerate() {
        for (j, p) in ps.iter().enumerate() {
            rows.push(vec![i.to_string(), j.to_string(), p.size.to_string(), p.duration.to_string(), p.full_dimensional.to_string(), signature(&p.avalanche)]);
        }
    }
    sink.csv("pieces.csv", &["site", "piece", "size", "duration", "full_dimensional", "avalanche"], rows)?;
    sink.json("atlas.json", &atlas)
}

fn loop_rows(set: &RegionSet) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (r, (tr, comp)) in set.regions.iter().zip(&set.component).enumerate() {
        for (v, p) in tr.region.vertex_loop().iter().enumerate() {
            let mut row = vec![r.to_string(), comp.to_string(), tr.region.dim().to_string(), v.to_string()];
            row.extend(p.iter().map(|c| f(rational_to_f64(c))));
            row.extend(p.iter().map(q));
            rows.push(row);
        }
    }
    rows
}

fn write_loops(sink: &mut Sink, set: &RegionSet, n: usize) -> anyhow::Result<()> {
    if n != 2 {
        return Ok(());
    }
    sink.csv("loops.csv", &["region", "component", "dim", "vertex", "x", "y", "x_exact", "y_exact"], loop_rows(set))
}

/// `U_m` at the first clean level within `max_n`, or `U_max_n` when there is none.
fn clean_or_last(atlas: &ContinuityAtlas, max_n: usize, budget: usize, sink: &mut Sink) -> anyhow::Result<(RegionSet, bool, Vec<zhang_core::geometry::LevelSummary>)> {
    let (set, levels, within) = first_clean_level(atlas, max_n, budget);
    if !within {
        sink.partial = true;
        sink.notes.push(format!("region budget {budget} exhausted after level {}", levels.len().saturating_sub(1)));
    }
    match set {
        Some(s) => Ok((s, true, levels)),
        None => {
            sink.notes.push(format!("no level up to {max_n} misses the singularity set; using U_{max_n}"));
            let s = iterate_regions(atlas, if within { max_n } else { levels.len().saturating_sub(1) }, budget)?;
            Ok((s, false, levels))
        }
    }
}

fn regions(cfg: &RunConfig, params: &ModelParams, lat: &Lattice, sink: &mut Sink) -> anyhow::Result<()> {
    let atlas = exact_atlas(cfg, params, lat, sink)?;
    let (set, clean, levels) = clean_or_last(&atlas, cfg.regions.max_n, cfg.budgets.region_budget, sink)?;
    write_loops(sink, &set, lat.n)?;
    sink.json("regions.json", &json!({ "clean": clean, "level": set.n, "n_components": set.n_components, "levels": levels, "regions": set }))
}

fn removability(cfg: &RunConfig, params: &ModelParams, lat: &Lattice, sink: &mut Sink) -> anyhow::Result<()> {
    let atlas = exact_atlas(cfg, params, lat, sink)?;
    let limits = SearchLimits {
        max_n: cfg.removability.max_n,
        region_budget: cfg.budgets.region_budget,
        witness_len: cfg.removability.witness_len,
        witness_budget: cfg.budgets.word_budget,
    };
    let cert = removability_certificate(&atlas, &limits);
    if let Removability::Inconclusive { budget_exceeded: true, .. } = cert.verdict {
        sink.partial = true;
        sink.notes.push("region budget exhausted before a verdict".into());
    }
    if let Some(set) = &cert.regions {
        write_loops(sink, set, lat.n)?;
    }
    if let Removability::NonRemovable { witness } = &cert.verdict {
        let rows = witness.apex_orbit.iter().enumerate().map(|(k, p)| {
            let mut row = vec![k.to_string(), witness.word.get(k).map(|s| s.to_string()).unwrap_or_default()];
            row.push(p.0.iter().map(q).collect::<Vec<_>>().join(" "));
            row
        });
        sink.csv("witness.csv", &["step", "site", "apex"], rows)?;
    }
    sink.json("certificate.json", &json!({ "label": cert.verdict.label(), "certificate": cert }))
}

fn coding(cfg: &RunConfig, params: &ModelParams, lat: &Lattice, sink: &mut Sink) -> anyhow::Result<()> {
    let atlas = exact_atlas(cfg, params, lat, sink)?;
    let (set, clean, _) = clean_or_last(&atlas, cfg.coding.max_n, cfg.budgets.region_budget, sink)?;
    let tm = markov_coding(&atlas, &set, clean);
    let stats = chain_statistics(&tm);
    let trip = tm.triplets().into_iter().map(|(i, j)| vec![i.to_string(), j.to_string(), "1".into()]);
    sink.csv("transitions.csv", &["row", "col", "value"], trip)?;
    let states = (0..tm.r).map(|s| {
        vec![s.to_string(), tm.labels[s].0.to_string(), tm.labels[s].1.to_string(), tm.sizes[s].to_string(), tm.durations[s].to_string(), stats.parry.get(s).map(|v| f(*v)).unwrap_or_default()]
    });
    sink.csv("states.csv", &["state", "site", "component", "size", "duration", "parry"], states)?;
    write_loops(sink, &set, lat.n)?;
    sink.json("coding.json", &json!({ "level": set.n, "clean": clean, "dense": tm.dense(), "matrix": tm, "statistics": stats }))
}

fn lyapunov(cfg: &RunConfig, params: &ModelParams, lat: &Lattice, sink: &mut Sink) -> anyhow::Result<()> {
    let lc = &cfg.lyapunov;
    let c = LyapunovConfig { n_events: lc.events, burn_in: lc.burn_in, reortho: lc.reortho, batches: lc.batches, seed: cfg.rng.seed };
    let r = lyapunov_spectrum(&c, params, lat)?;
    let rows = r.chi_minus.iter().zip(&r.chi_minus_se).enumerate().map(|(k, (v, se))| vec![(k + 1).to_string(), f(*v), f(*se)]);
    sink.csv("exponents.csv", &["index", "chi_minus", "se"], rows)?;
    sink.json("lyapunov.json", &r)
}

fn entropy(cfg: &RunConfig, params: &ModelParams, lat: &Lattice, sink: &mut Sink) -> anyhow::Result<()> {
    let ec = &cfg.entropy;
    let atlas = exact_atlas(cfg, params, lat, sink)?;
    let clean = match ec.clean_level {
        Some(m) => Some(m),
        None => {
            let (set, _, within) = first_clean_level(&atlas, ec.clean_max_n, cfg.budgets.region_budget);
            if !within {
                sink.notes.push("region budget exhausted while searching a clean level".into());
            }
            set.map(|s| s.n)
        }
    };
    let limits = EntropyLimits {
        n_max: ec.n_max,
        node_budget: ec.node_budget,
        clean_level: clean,
        clean_max_n: ec.clean_max_n,
        region_budget: cfg.budgets.region_budget,
        samples: ec.samples,
        sample_len: ec.sample_len,
        seed: cfg.rng.seed,
    };
    let est = entropy_estimates(&atlas, &limits)?;
    if est.budget_exceeded {
        sink.partial = true;
        sink.notes.push(format!("cylinder budget exhausted at depth {}", est.enumerated_depth));
    }
    let chain = match clean {
        Some(m) => {
            let set = iterate_regions(&atlas, m, cfg.budgets.region_budget)?;
            let stats = chain_statistics(&markov_coding(&atlas, &set, true));
            Some(json!({ "level": m, "radius_exact": stats.radius_exact, "entropy": stats.entropy }))
        }
        None => None,
    };
    let method = HorizonMethod::Sampled { samples: ec.horizon_samples, seed: cfg.rng.seed, max_t: ec.horizon_max_t };
    let horizon = contraction_horizon(params, lat, &ec.horizon_c.value(), &method, Some(&atlas))?;
    let rows = (0..est.card.len()).map(|k| {
        vec![(k + 1).to_string(), est.card[k].clone(), est.mult[k].to_string(), f(est.h_sing_seq[k]), f(est.h_mult_seq[k]), f(est.lambda_plus + est.h_mult_seq[k])]
    });
    sink.csv("entropy.csv", &["n", "card", "mult", "h_sing", "h_mult", "buzzi_bound"], rows)?;
    sink.json("entropy.json", &json!({ "estimates": est, "chain": chain, "horizon": horizon }))
}

fn parse_mode(s: &str) -> anyhow::Result<SampleMode> {
    match s {
        "orbit" => Ok(SampleMode::Orbit),
        "ifs" => Ok(SampleMode::Ifs),
        "exact" => Ok(SampleMode::Exact),
        other => Err(ZhangError::Domain(format!("unknown sampling mode `{other}`")).into()),
    }
}

fn dimension(cfg: &RunConfig, params: &ModelParams, lat: &Lattice, sink: &mut Sink) -> anyhow::Result<()> {
    let dc = &cfg.dimension;
    let mode = parse_mode(&dc.mode)?;
    let sample = attractor_sample(params, lat, mode, dc.transient, dc.points, cfg.rng.seed)?;
    let header: Vec<String> = (0..lat.n).map(|k| format!("x{k}")).collect();
    let h: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    sink.csv("points.csv", &h, sample.points.iter().map(|p| p.iter().map(|v| f(*v)).collect()))?;
    let loop_rows = sample.loops.iter().enumerate().flat_map(|(r, lp)| {
        lp.iter().enumerate().map(move |(v, p)| {
            let mut row = vec![r.to_string(), v.to_string()];
            row.extend(p.iter().map(|c| f(*c)));
            row
        })
    });
    if mode == SampleMode::Exact {
        sink.csv("loops.csv", &["region", "vertex", "x", "y"], loop_rows)?;
    }
    let boxdim = if sample.points.is_empty() {
        None
    } else {
        Some(box_dimension(&sample.points, (!dc.deltas.is_empty()).then_some(dc.deltas.as_slice()), cfg.rng.seed)?)
    };
    let (inputs, moran) = if lat.n <= 3 {
        let atlas = exact_atlas(cfg, params, lat, sink)?;
        let rep = singular_value_inputs(&atlas);
        let m = if rep.contracting { moran_bounds(&rep.inputs).ok() } else { None };
        (Some(rep), m)
    } else {
        sink.notes.push("singular-value inputs skipped for N > 3".into());
        (None, None)
    };
    sink.json("dimension.json", &json!({ "mode": mode, "points": sample.points.len(), "box": boxdim, "singular_values": inputs, "moran": moran }))
}

fn sweep(cfg: &RunConfig, sink: &mut Sink) -> anyhow::Result<()> {
    let sc = &cfg.sweep;
    let axis = match sc.axis.as_str() {
        "L" => {
            let mut grid = Vec::with_capacity(sc.grid.len());
            for r in &sc.grid {
                let v = r.value();
                if !v.is_integer() || v <= Rational::from_integer(0.into()) {
                    bail!(ZhangError::Domain(format!("side length `{}` is not a positive integer", r.0)));
                }
                grid.push(v.to_integer().try_into().map_err(|_| anyhow!("side length too large"))?);
            }
            SweepAxis::L { grid }
        }
        "Ec" => SweepAxis::Ec { grid: sc.grid.iter().map(|r| r.value()).collect() },
        other => bail!(ZhangError::Domain(format!("unknown sweep axis `{other}`"))),
    };
    let t = SweepTemplate {
        d: cfg.model.d,
        l: cfg.model.l,
        ec: cfg.model.ec.value(),
        eps: cfg.model.eps.value(),
        events: sc.events,
        burn_in: sc.burn_in,
        seed: cfg.rng.seed,
    };
    let res = scaling_sweep_threads(&axis, &t, cfg.runtime.threads)?;
    let rows = res.cells.iter().map(|c| {
        let s = &c.stats;
        vec![
            f(c.x),
            c.l.to_string(),
            f(c.ec),
            s.events.to_string(),
            s.positive.to_string(),
            opt(s.tau_bar),
            f(s.tau_all),
            opt(s.omega_bar),
            f(s.s0_bar),
            opt(s.splus_bar),
            s.tau_max.to_string(),
            s.omega_max.to_string(),
            s.s_max.to_string(),
        ]
    });
    let header = ["x", "L", "Ec", "events", "positive", "tau_bar", "tau_all", "omega_bar", "s0_bar", "splus_bar", "tau_max", "omega_max", "s_max"];
    sink.csv("sweep.csv", &header, rows)?;
    sink.json("sweep.json", &res)
}

fn maximal_rows(runs: &[MaximalAvalanche]) -> (Vec<Vec<String>>, Vec<Vec<String>>) {
    let summary = runs
        .iter()
        .map(|r| vec![r.l.to_string(), r.duration.to_string(), r.size.to_string(), f(r.tau_over_l()), f(r.size_over_quarter_l2()), f(r.tau_bound)])
        .collect();
    let fronts = runs
        .iter()
        .flat_map(|r| r.front.iter().zip(&r.reach).enumerate().map(move |(t, (fr, re))| vec![r.l.to_string(), (t + 1).to_string(), fr.to_string(), re.to_string()]))
        .collect();
    (summary, fronts)
}

#[derive(Serialize)]
struct MaximalOut<'a> {
    runs: &'a [MaximalAvalanche],
    #[serde(skip_serializing_if = "Option::is_none")]
    scaling: Option<serde_json::Value>,
}

fn maximal(cfg: &RunConfig, params: &ModelParams, lat: &Lattice, sink: &mut Sink) -> anyhow::Result<()> {
    let mc = &cfg.maximal;
    let sides = if mc.sides.is_empty() { vec![lat.l] } else { mc.sides.clone() };
    let (runs, scaling) = if sides.len() >= 2 {
        let s = maximal_scaling(cfg.model.d, &sides, params)?;
        let fits = json!({ "tau_fit": s.tau_fit, "size_fit": s.size_fit, "gamma_tau": s.gamma_tau, "gamma_s": s.gamma_s });
        (s.runs, Some(fits))
    } else {
        let l = zhang_core::build_lattice(cfg.model.d, sides[0])?;
        (vec![maximal_avalanche::<f64>(params, &l, mc.frames)?], None)
    };
    let (summary, fronts) = maximal_rows(&runs);
    sink.csv("maximal.csv", &["L", "duration", "size", "tau_over_L", "size_over_quarter_L2", "tau_bound"], summary)?;
    sink.csv("fronts.csv", &["L", "stage", "front", "reach"], fronts)?;
    if let [run] = runs.as_slice() {
        let l = zhang_core::build_lattice(run.d, run.l)?;
        for (t, frame) in run.frames.iter().enumerate() {
            sink.bytes(&format!("frames/stage_{:05}.bin", t + 1), "bin", &Snapshot::new(run.d, run.l, params, frame.clone()).to_bytes())?;
            write_raster(sink, &format!("frames/stage_{:05}.csv", t + 1), &l, frame)?;
        }
    }
    sink.json("maximal.json", &MaximalOut { runs: &runs, scaling })
}

/// `steps` equally spaced rationals from `lo` to `hi`.
fn linspace(lo: &Rational, hi: &Rational, steps: usize) -> Vec<Rational> {
    if steps <= 1 {
        return vec![lo.clone()];
    }
    let span = hi - lo;
    (0..steps).map(|k| lo + &span * Rational::new(k.into(), (steps - 1).into())).collect()
}

fn bifurcation(cfg: &RunConfig, lat: &Lattice, sink: &mut Sink) -> anyhow::Result<()> {
    let bc = &cfg.bifurcation;
    if bc.eps_steps == 0 || bc.ec_steps == 0 {
        bail!(ZhangError::Domain("grid steps must be positive".into()));
    }
    let mut grid = Vec::new();
    for eps in linspace(&bc.eps_min.value(), &bc.eps_max.value(), bc.eps_steps) {
        for ec in linspace(&bc.ec_min.value(), &bc.ec_max.value(), bc.ec_steps) {
            grid.push((eps.clone(), ec));
        }
    }
    let scan = bifurcation_scan(&grid, lat, bc.depth, cfg.budgets.piece_budget);
    let rows = scan.points.iter().map(|p| vec![q(&p.eps), q(&p.ec), f(rational_to_f64(&p.eps)), f(rational_to_f64(&p.ec)), p.domain.map(|d| d.to_string()).unwrap_or_default(), p.pieces.to_string()]);
    sink.csv("bifurcation.csv", &["eps", "Ec", "eps_f64", "Ec_f64", "signature_id", "pieces"], rows)?;
    if scan.points.iter().any(|p| p.domain.is_none()) {
        sink.notes.push("some grid points have no signature (invalid parameters or an incomplete atlas)".into());
    }
    sink.json("signatures.json", &scan.signatures)
}

fn rescale(cfg: &RunConfig, params: &ModelParams, lat: &Lattice, sink: &mut Sink) -> anyhow::Result<()> {
    let rc = &cfg.rescale;
    let st = run_statistics::<f64>(params, lat, rc.events, rc.burn_in, cfg.rng.seed)?;
    let thermo = thermo_rescale(&st, rc.hbar)?;
    let h_f = rc.h_f.unwrap_or((lat.n as f64).ln());
    let tau_pos = st.tau_bar().unwrap_or(0.0);
    let omega = st.omega_bar().ok_or_else(|| ZhangError::Domain("no avalanches in the run".into()))?;
    let ent = rescale_entropy(h_f, st.tau_all(), tau_pos, omega, rc.hbar)?;
    sink.json("rescale.json", &json!({ "h_f": h_f, "summary": st.summary(), "thermo": thermo, "entropy": ent }))
}
