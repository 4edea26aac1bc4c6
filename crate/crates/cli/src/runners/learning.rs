use hdc_core::euclid::{random_unit, Encoder, InputMetric, Projection, Srp};
use hdc_core::hdcore::Hypervector;
use hdc_core::learn::{separating_function, sparse_separator_experiment, LinearModel, PrototypeModel, SparseSeparatorConfig};
use hdc_core::rng::{self, derive_seed};
use rand::Rng;
use serde::Serialize;

use super::euclid::{gaussian, make_encoder};
use super::{par_trials, rate, subset};
use crate::dataset::{ingest_csv, Normalization, Schema};
use crate::params::{schema, CliResult, Ctx};
use crate::report::Report;

type Labeled = Vec<(Vec<f64>, usize)>;

fn nearest_centroid_accuracy(train: &Labeled, test: &Labeled, classes: usize) -> f64 {
    let n = train[0].0.len();
    let mut sums = vec![vec![0.0; n]; classes];
    let mut counts = vec![0usize; classes];
    for (x, y) in train {
        sums[*y].iter_mut().zip(x).for_each(|(a, b)| *a += b);
        counts[*y] += 1;
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        s.iter_mut().for_each(|a| *a /= c.max(1) as f64);
    }
    let hits = test
        .iter()
        .filter(|(x, y)| {
            let mut best = (f64::INFINITY, 0);
            for (c, s) in sums.iter().enumerate() {
                if counts[c] > 0 {
                    let dd = InputMetric::SqL2.eval(x, s);
                    if dd < best.0 {
                        best = (dd, c);
                    }
                }
            }
            best.1 == *y
        })
        .count();
    rate(hits, test.len())
}

fn blobs(n: usize, per_class: usize, separation: f64, spread: f64, u: &[f64], r: &mut impl Rng) -> Labeled {
    let mut out = Vec::with_capacity(2 * per_class);
    for i in 0..2 * per_class {
        let y = i % 2;
        let sign = if y == 0 { 0.5 } else { -0.5 };
        let x = u.iter().zip(gaussian(n, r)).map(|(a, z)| sign * separation * a + spread * z).collect();
        out.push((x, y));
    }
    out
}

fn encode_all(enc: &dyn Encoder<f64>, data: &Labeled) -> CliResult<Vec<(Hypervector<f64>, usize)>> {
    par_trials(data.len(), |i| Ok((enc.encode(&data[i].0)?, data[i].1)))
}

pub fn classify_prototypes(ctx: &Ctx, rep: &mut Report) -> CliResult<()> {
    let d = ctx.dim(ctx.p.d.unwrap_or(4096))?;
    let epochs = ctx.p.epochs.unwrap_or(0);
    let seed = ctx.seed()?;
    let (train, test, classes, default_enc) = match &ctx.p.data {
        Some(path) => {
            let sch = Schema { label: ctx.p.label_col.clone(), header: ctx.p.header, normalization: Normalization::MinMax };
            let ds = ingest_csv(path, &sch)?;
            let labels = ds.labels.clone().ok_or_else(|| schema("classification needs --label-col"))?;
            let (mut train, mut test) = (Vec::new(), Vec::new());
            for (i, (x, y)) in ds.features.into_iter().zip(labels).enumerate() {
                if i % 2 == 0 { train.push((x, y)) } else { test.push((x, y)) }
            }
            if train.is_empty() || test.is_empty() {
                return Err(schema("dataset needs at least two rows"));
            }
            (train, test, ds.label_names.len(), "posid")
        }
        None => {
            let n = ctx.p.n.unwrap_or(16);
            let per_train = ctx.count("train", ctx.p.train.unwrap_or(200))?;
            let per_test = ctx.count("test", ctx.p.test.unwrap_or(500))?;
            let sep = ctx.positive("separation", ctx.p.separation, 2.0)?;
            let spread = ctx.positive("spread", ctx.p.spread, 1.0)?;
            let mut r = rng::stream(seed, 1);
            let u = random_unit(n, &mut r);
            let train = blobs(n, per_train, sep, spread, &u, &mut r);
            let test = blobs(n, per_test, sep, spread, &u, &mut r);
            (train, test, 2, "srp")
        }
    };
    let n = train[0].0.len();
    let (enc, _, _, _) = make_encoder(ctx, n, d, derive_seed(seed, 0), default_enc)?;
    let htrain = encode_all(&*enc, &train)?;
    let htest = encode_all(&*enc, &test)?;
    let mut model = PrototypeModel::train(&htrain)?;
    let oracle = nearest_centroid_accuracy(&train, &test, classes);
    let proto = model.accuracy(&htest)?;
    let mistakes = if epochs > 0 { model.perceptron_finetune(&htrain, epochs)? } else { Vec::new() };
    let tuned = model.accuracy(&htest)?;

    #[derive(Serialize)]
    struct Row {
        epoch: usize,
        training_mistakes: usize,
    }
    let rows: Vec<Row> = mistakes.iter().enumerate().map(|(e, &m)| Row { epoch: e + 1, training_mistakes: m }).collect();
    rep.rows(&rows);
    rep.info("oracle_accuracy", oracle, None);
    rep.info("prototype_accuracy", proto, None);
    rep.le("accuracy_gap", (proto - oracle).abs(), 0.05);
    if epochs > 0 {
        rep.info("finetuned_accuracy", tuned, None);
    }
    Ok(())
}

pub fn winnow_mistakes(ctx: &Ctx, rep: &mut Report) -> CliResult<()> {
    let n = ctx.p.n.unwrap_or(16);
    let d = ctx.dim(ctx.p.d.unwrap_or(4096))?;
    let k = ctx.p.k.unwrap_or(8);
    let runs = ctx.count("runs", ctx.p.runs.unwrap_or(100))?;
    let length = ctx.count("length", ctx.p.length.unwrap_or(1000))?;
    let seed = ctx.seed()?;
    if k == 0 || k > d {
        return Err(schema(format!("k must lie in 1..={d}, got {k}")));
    }
    let bound = 4.0 * k as f64 * (d as f64).ln();

    #[derive(Serialize)]
    struct Row {
        run: usize,
        mistakes: usize,
        positives: usize,
        within_bound: bool,
    }
    let rows = par_trials(runs, |run| {
        let rs = derive_seed(seed, run as u64);
        let enc = Srp::<f64>::new(n, d, derive_seed(rs, 0))?;
        let mut r = rng::stream(rs, 1);
        let lits = subset(d, k, &mut r);
        let signs: Vec<f64> = (0..k).map(|_| if r.random::<bool>() { 1.0 } else { -1.0 }).collect();
        // Random inputs almost always satisfy some literal, so half the stream
        // is pushed against every literal to supply negatives.
        let mut anti = vec![0.0; n];
        for (&j, s) in lits.iter().zip(&signs) {
            anti.iter_mut().zip(enc.row(j)).for_each(|(a, b)| *a -= s * b);
        }
        let mut model = LinearModel::winnow(d);
        let mut positives = 0;
        for i in 0..length {
            let x: Vec<f64> = if i % 2 == 0 {
                random_unit(n, &mut r)
            } else {
                let noise = random_unit(n, &mut r);
                anti.iter().zip(&noise).map(|(a, b)| a + 0.5 * b).collect()
            };
            let h = enc.encode(&x)?;
            let y: i8 = if lits.iter().zip(&signs).any(|(&j, &s)| h.get(j) == s) { 1 } else { -1 };
            positives += usize::from(y == 1);
            model.update(&h, y)?;
        }
        let m = model.mistakes();
        Ok(Row { run, mistakes: m, positives, within_bound: m as f64 <= bound })
    })?;
    rep.rows(&rows);
    rep.info("mistake_bound", bound, None);
    rep.info("max_mistakes", rows.iter().map(|r| r.mistakes).max().unwrap_or(0) as f64, Some(bound));
    rep.info("positive_fraction", rate(rows.iter().map(|r| r.positives).sum(), runs * length), None);
    rep.ge("runs_within_bound", rate(rows.iter().filter(|r| r.within_bound).count(), runs), 0.95);
    Ok(())
}

pub fn sparse_separator(ctx: &Ctx, rep: &mut Report) -> CliResult<()> {
    let mut cfg = SparseSeparatorConfig::new(
        ctx.p.n.unwrap_or(16),
        ctx.p.k.unwrap_or(4),
        ctx.p.gamma.unwrap_or(0.5),
        ctx.count("trials", ctx.p.trials.unwrap_or(50))?,
        ctx.seed()?,
    );
    cfg.multiplier = ctx.positive("multiplier", ctx.p.multiplier, 1.0)?;
    cfg.points = ctx.count("points", ctx.p.points.unwrap_or(200))?;
    cfg.inject = ctx.p.inject.unwrap_or(false);
    cfg.d_cap = if ctx.caps.allow_large { usize::MAX } else { ctx.caps.max_d };
    let out = sparse_separator_experiment(&cfg)?;
    rep.rows(&out.trials);
    rep.info("d", out.d as f64, None);
    rep.info("rho_required", out.rho_required, None);
    rep.info("min_rho_observed", out.min_rho_observed, Some(out.rho_required));
    rep.info("alignment_required", out.alignment_required, None);
    if cfg.inject {
        rep.eq("success_rate", out.success_rate, 1.0);
    } else if out.min_rho_observed >= out.rho_required {
        rep.ge("success_rate", out.success_rate, 0.5);
    } else {
        rep.info("success_rate", out.success_rate, None);
    }
    Ok(())
}

pub fn linear_separation(ctx: &Ctx, rep: &mut Report) -> CliResult<()> {
    let n = ctx.p.n.unwrap_or(4);
    let d = ctx.dim(ctx.p.d.unwrap_or(8192))?;
    let trials = ctx.count("trials", ctx.p.trials.unwrap_or(50))?;
    let points = ctx.count("points", ctx.p.points.unwrap_or(10))?;
    let gap = ctx.positive("gap", ctx.p.gap, 0.5)?;
    let seed = ctx.seed()?;
    if gap >= 1.0 || n < 2 {
        return Err(schema("need gap < 1 and n ≥ 2"));
    }

    #[derive(Serialize)]
    struct Row {
        trial: usize,
        half_gap: f64,
        beta_over_alpha: f64,
        condition_met: bool,
        hull_condition: bool,
        separated: bool,
    }
    let rows = par_trials(trials, |t| {
        let ts = derive_seed(seed, t as u64);
        let enc: Box<dyn Encoder<f64>> = match ctx.p.encoder.as_deref() {
            None | Some("projection") => Box::new(Projection::new(n, d, derive_seed(ts, 0))?),
            Some(_) => make_encoder(ctx, n, d, derive_seed(ts, 0), "projection")?.0,
        };
        let mut r = rng::stream(ts, 1);
        // Slab sets with planted anchors (±gap, 0, …), which are then the
        // closest pair and also the closest points of the two hulls.
        let mut side = |s: f64| {
            let mut set = vec![{
                let mut a = vec![0.0; n];
                a[0] = s * gap;
                a
            }];
            for _ in 1..points {
                let mut x: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
                x[0] = s * r.random_range(gap..1.0);
                set.push(x);
            }
            set
        };
        let (p, q) = (side(1.0), side(-1.0));
        let f = separating_function(&p, &q, &*enc)?;
        let mut separated = true;
        for x in &p {
            separated &= f.eval(&enc.encode(x)?) > 0.0;
        }
        for x in &q {
            separated &= f.eval(&enc.encode(x)?) < 0.0;
        }
        Ok(Row {
            trial: t,
            half_gap: f.half_gap,
            beta_over_alpha: f.beta_over_alpha,
            condition_met: f.condition_met,
            hull_condition: f.hull_condition,
            separated,
        })
    })?;
    rep.rows(&rows);
    let guaranteed = rows.iter().filter(|r| r.condition_met && r.hull_condition).count();
    rep.info("guaranteed_fraction", rate(guaranteed, trials), None);
    rep.info("separated_fraction", rate(rows.iter().filter(|r| r.separated).count(), trials), None);
    rep.eq("guaranteed_violations", rows.iter().filter(|r| r.condition_met && r.hull_condition && !r.separated).count() as f64, 0.0);
    Ok(())
}
