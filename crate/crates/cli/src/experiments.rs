use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Value};
use spider_walk::exact::{
    brute_force_distribution, closed_form_transition, closed_form_transition_exact, lattice_density_cross,
    lattice_density_origin, lattice_density_same, trans_cross_leg, trans_from_origin, trans_same_leg, ExactWeights,
};
use spider_walk::growth::{
    coupon_balls, coupon_trial, erdos_renyi_limit, sample_visit_event, GrowingLegsConfig, Scale,
};
use spider_walk::heights::{compute_heights, limit_height_cdf, rescaled_height_trace};
use spider_walk::sim::{couple, embed_streaming, simulate_spider_excursions};
use spider_walk::stats::{proportion_ci, run_trials};
use spider_walk::{LegId, LegWeights, SpiderState};

use crate::resume::Progress;
use crate::spec::{ExperimentSpec, FnMode};
use crate::CliError;

const FLOAT_TOL: f64 = 1e-12;

/// Rows produced by one experiment, before the spec echo is attached.
pub struct Table {
    pub columns: Vec<String>,
    pub records: Vec<Vec<Value>>,
    /// Simulated walk steps (or urn balls), for throughput reporting.
    pub steps: u64,
    pub violations: Vec<String>,
    pub summary: String,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            records: Vec::new(),
            steps: 0,
            violations: Vec::new(),
            summary: String::new(),
        }
    }
}

fn runtime(trial: Option<u64>, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime {
        trial,
        message: e.to_string(),
    }
}

fn weights(spec: &ExperimentSpec) -> LegWeights {
    LegWeights::new(spec.params.weights.clone()).expect("weights checked in resolve")
}

fn states_up_to(radius: u64, n_legs: u32) -> Vec<SpiderState> {
    let mut v = vec![SpiderState::Origin];
    for l in 1..=n_legs {
        for r in 1..=radius {
            v.push(SpiderState::at(r, LegId::new(l, n_legs).expect("leg in range")));
        }
    }
    v
}

pub fn exact_check(spec: &ExperimentSpec) -> Result<Table, CliError> {
    let mut t = Table::new(&[
        "n_legs",
        "steps",
        "start",
        "ends_compared",
        "mismatches",
        "max_float_error",
        "anchor",
    ]);
    let w = weights(spec);
    let exact_w = ExactWeights::from_leg_weights(&w).map_err(|e| runtime(None, e))?;
    let max_steps = spec.params.steps.expect("resolved");
    let states = states_up_to(4, w.n_legs());
    for &start in &states {
        for steps in 0..=max_steps {
            let law = brute_force_distribution(steps, start, &exact_w).map_err(|e| runtime(None, e))?;
            let (mut compared, mut mismatches, mut worst) = (0u64, 0u64, 0.0f64);
            for &end in states_up_to(start.radius() + steps, w.n_legs()).iter() {
                let oracle = law.get(&end).cloned().unwrap_or_else(Zero::zero);
                let closed = closed_form_transition_exact(steps, start, end, &exact_w);
                mismatches += (closed != oracle) as u64;
                let float = closed_form_transition(steps, start, end, &w);
                worst = worst.max((float - oracle.to_f64().unwrap_or(f64::NAN)).abs());
                compared += 1;
            }
            if mismatches > 0 || !(worst <= FLOAT_TOL) {
                t.violations.push(format!(
                    "{steps} steps from {start}: {mismatches} mismatches, float error {worst:e}"
                ));
            }
            t.records.push(vec![
                json!(w.n_legs()),
                json!(steps),
                json!(start.to_string()),
                json!(compared),
                json!(mismatches),
                json!(worst),
                json!("closed-form spider transition probabilities"),
            ]);
        }
    }
    if t.violations.is_empty() {
        t.summary = "all closed forms equal oracle".into();
    }
    Ok(t)
}

pub fn density_scaling(spec: &ExperimentSpec) -> Result<Table, CliError> {
    let mut t = Table::new(&[
        "n",
        "case",
        "x",
        "y",
        "p",
        "scaled_prob",
        "limit",
        "rel_error",
        "anchor",
    ]);
    let w = weights(spec);
    let p = w.probs()[0];
    let err = |e| runtime(None, e);
    for &n in &spec.params.checkpoints {
        let root = (n as f64).sqrt();
        for &y in &spec.params.y_grid {
            let yi = (y * root).floor() as u64;
            let mut rows = vec![(
                "from-origin",
                Value::Null,
                root * trans_from_origin(n, yi, p).linear,
                lattice_density_origin(1.0, y, p).map_err(err)?,
            )];
            for &x in &spec.params.x {
                let xi = (x * root).floor() as u64;
                rows.push((
                    "cross-leg",
                    json!(x),
                    root * trans_cross_leg(n, xi, yi, p).linear,
                    lattice_density_cross(1.0, x, y, p).map_err(err)?,
                ));
                rows.push((
                    "same-leg",
                    json!(x),
                    root * trans_same_leg(n, xi, yi, p).linear,
                    lattice_density_same(1.0, x, y, p).map_err(err)?,
                ));
            }
            for (case, x, scaled, limit) in rows {
                t.records.push(vec![
                    json!(n),
                    json!(case),
                    x,
                    json!(y),
                    json!(p),
                    json!(scaled),
                    json!(limit),
                    json!((scaled / limit - 1.0).abs()),
                    json!("Gaussian local limit of lattice transition probabilities"),
                ]);
            }
        }
    }
    Ok(t)
}

pub fn height_dist(spec: &ExperimentSpec) -> Result<Table, CliError> {
    let mut t = Table::new(&[
        "leg",
        "p",
        "y",
        "count",
        "trials",
        "estimate",
        "ci_low",
        "ci_high",
        "reference",
        "anchor",
    ]);
    let w = weights(spec);
    let n_legs = w.n_legs();
    let n = spec.params.steps.expect("resolved");
    let rows = run_trials(spec.seed, spec.trials, |_, rng| {
        let (path, _) = simulate_spider_excursions(n, &w, rng);
        compute_heights(&path, n_legs, 3).map(|h| {
            let below = h.min_below_ranked();
            (h.per_leg, below)
        })
    });
    let mut heights = Vec::with_capacity(rows.len());
    for (trial, r) in rows.into_iter().enumerate() {
        let (per_leg, below) = r.map_err(|e| runtime(Some(trial as u64), e))?;
        if below == Some(false) {
            t.violations
                .push(format!("trial {trial}: minimal height exceeds the ranked bound"));
        }
        heights.push(per_leg);
    }
    t.steps = n * spec.trials;
    let root = (n as f64).sqrt();
    for (leg, &p) in w.probs().iter().enumerate() {
        for &y in &spec.params.y_grid {
            let count = heights.iter().filter(|h| (h[leg] as f64) < y * root).count() as u64;
            let (lo, hi) = proportion_ci(count, spec.trials, 0.95);
            let reference = limit_height_cdf(y, p, 1e-13).map_err(|e| runtime(None, e))?;
            t.records.push(vec![
                json!(leg + 1),
                json!(p),
                json!(y),
                json!(count),
                json!(spec.trials),
                json!(count as f64 / spec.trials as f64),
                json!(lo),
                json!(hi),
                json!(reference),
                json!("limit law of the rescaled leg height"),
            ]);
        }
    }
    Ok(t)
}

pub fn coupling(spec: &ExperimentSpec) -> Result<Table, CliError> {
    let mut t = Table::new(&[
        "trial",
        "n",
        "tau_ratio",
        "sup_distance",
        "scale",
        "ratio",
        "shared_leg_steps",
    ]);
    let w = weights(spec);
    let n = spec.params.steps.expect("resolved");
    let dt = spec.params.dt.expect("resolved");
    let checkpoints = &spec.params.checkpoints;
    let horizon = (2 * n).max(n + 50) as f64;
    let rows = run_trials(spec.seed, spec.trials, |_, rng| -> spider_walk::Result<_> {
        let record = embed_streaming(n, dt, horizon, rng)?;
        let pair = couple(record, n, &w, rng)?;
        let shared = pair.leg_agreement();
        let mut points = Vec::with_capacity(checkpoints.len());
        for &m in checkpoints {
            points.push((
                m,
                pair.record.tau_ratio(m)?,
                pair.sup_distance(m)?,
                spider_walk::sim::coupling_scale(m)?,
                pair.normalized_ratio(m)?,
            ));
        }
        Ok((points, shared))
    });
    for (trial, r) in rows.into_iter().enumerate() {
        let trial = trial as u64;
        let (points, shared) = r.map_err(|e| runtime(Some(trial), e))?;
        let shared = match shared {
            Ok(s) => json!(s),
            Err(e) => {
                t.violations.push(format!("trial {trial}: {e}"));
                Value::Null
            }
        };
        for (m, tau, sup, scale, ratio) in points {
            t.records.push(vec![
                json!(trial),
                json!(m),
                json!(tau),
                json!(sup),
                json!(scale),
                json!(ratio),
                shared.clone(),
            ]);
        }
    }
    t.steps = n * spec.trials;
    Ok(t)
}

pub fn legs_growth(spec: &ExperimentSpec, progress: &mut Progress) -> Result<Table, CliError> {
    let mut t = Table::new(&[
        "N",
        "L",
        "scale",
        "k",
        "steps",
        "successes",
        "trials",
        "estimate",
        "ci_low",
        "ci_high",
        "reference",
        "anchor",
    ]);
    let p = &spec.params;
    let (scale, label, anchor) = match (p.c, p.fn_mode) {
        (_, Some(FnMode::Up)) => (Scale::Up, "log N".to_string(), "all-legs probability tends to 1"),
        (_, Some(FnMode::Down)) => (Scale::Down, "1/log N".to_string(), "all-legs probability tends to 0"),
        (Some(c), None) => (Scale::Constant(c), format!("c={c}"), "all-legs limit 2*Phi-bar(1/c)"),
        (None, None) => unreachable!("resolve sets a scale"),
    };
    let height = p.height.expect("resolved");
    let visits = p.k.expect("resolved");
    let mut configs = Vec::new();
    for &n_legs in &p.legs {
        let mut cfg = GrowingLegsConfig::new(n_legs, height, scale, spec.trials);
        cfg.visits = visits;
        cfg.enforce_regime = !p.allow_outside_regime;
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        configs.push(cfg);
    }
    for (index, cfg) in configs.iter().enumerate() {
        let steps = cfg.steps();
        let key = format!("N={}", cfg.n_legs);
        let tally = progress.count(&key, index as u64, spec.seed, spec.trials, steps, |rng| {
            sample_visit_event(cfg.n_legs, height, visits, steps, rng)
        })?;
        let (lo, hi) = proportion_ci(tally.successes, tally.done, 0.95);
        t.steps += steps * spec.trials;
        t.records.push(vec![
            json!(cfg.n_legs),
            json!(height),
            json!(label),
            json!(visits),
            json!(steps),
            json!(tally.successes),
            json!(tally.done),
            json!(tally.successes as f64 / tally.done as f64),
            json!(lo),
            json!(hi),
            json!(scale.reference()),
            json!(anchor),
        ]);
    }
    Ok(t)
}

pub fn coupon(spec: &ExperimentSpec, progress: &mut Progress) -> Result<Table, CliError> {
    let mut t = Table::new(&[
        "N",
        "m",
        "x",
        "balls",
        "successes",
        "trials",
        "estimate",
        "ci_low",
        "ci_high",
        "reference",
        "anchor",
    ]);
    let m = spec.params.m.expect("resolved");
    let mut index = 0u64;
    for &n_urns in &spec.params.legs {
        for &x in &spec.params.x {
            let n_urns = n_urns as u64;
            let balls = coupon_balls(n_urns, m, x).map_err(|e| CliError::Usage(e.to_string()))?;
            let reference = erdos_renyi_limit(m, x).map_err(|e| CliError::Usage(e.to_string()))?;
            let key = format!("N={n_urns},x={x}");
            let tally = progress.count(&key, index, spec.seed, spec.trials, balls, |rng| {
                coupon_trial(n_urns, balls, m, rng)
            })?;
            index += 1;
            let (lo, hi) = proportion_ci(tally.successes, tally.done, 0.95);
            t.steps += balls * spec.trials;
            t.records.push(vec![
                json!(n_urns),
                json!(m),
                json!(x),
                json!(balls),
                json!(tally.successes),
                json!(tally.done),
                json!(tally.successes as f64 / tally.done as f64),
                json!(lo),
                json!(hi),
                json!(reference),
                json!("Erdos-Renyi urn limit exp(-exp(-x)/(m-1)!)"),
            ]);
        }
    }
    Ok(t)
}

pub fn hirsch_trace(spec: &ExperimentSpec) -> Result<Table, CliError> {
    let mut t = Table::new(&[
        "trial",
        "n",
        "h_min",
        "hirsch_ratio",
        "a_min",
        "a_max",
        "strassen",
        "ranked_functional",
        "top_legs_distinct",
        "min_below_ranked",
    ]);
    let w = weights(spec);
    let n_legs = w.n_legs();
    let n = spec.params.steps.expect("resolved");
    let power = spec.params.g_power.expect("resolved");
    let checkpoints = &spec.params.checkpoints;
    let rows = run_trials(spec.seed, spec.trials, |_, rng| {
        let (path, _) = simulate_spider_excursions(n, &w, rng);
        rescaled_height_trace(&path, n_legs, checkpoints)
    });
    for (trial, r) in rows.into_iter().enumerate() {
        let trace = r.map_err(|e| runtime(Some(trial as u64), e))?;
        for pt in trace {
            if pt.min_below_ranked == Some(false) {
                t.violations.push(format!(
                    "trial {trial} at n={}: minimal height exceeds the ranked bound",
                    pt.n
                ));
            }
            let nf = pt.n as f64;
            let g = nf.ln().powf(-power);
            t.records.push(vec![
                json!(trial),
                json!(pt.n),
                json!(pt.h_min),
                json!(pt.h_min as f64 / (nf.sqrt() * g)),
                json!(pt.a_min),
                json!(pt.a_max),
                json!(pt.strassen),
                json!(pt.ranked_functional),
                json!(pt.top_legs_distinct),
                pt.min_below_ranked.map_or(Value::Null, |b| json!(b)),
            ]);
        }
    }
    t.steps = n * spec.trials;
    Ok(t)
}
