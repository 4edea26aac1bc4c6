use hdc_core::codebook::{dimension_for, Codebook, CodebookKind, Regime};
use hdc_core::noise::{apply_noise, decoding_margin, model_at, noise_delta, rho_bound, tolerance, NoiseKind, NoiseModel, NoiseSpec};
use hdc_core::rng::{self, derive_seed};
use hdc_core::setmem::{
    bloom_parameters, decode_set, decode_set_with, encode_set, intersection_estimate, member_query_with, size_estimate, union_estimate, Bundling,
    QueryRule,
};
use rand::Rng;
use serde::Serialize;

use super::{par_trials, rate, subset};
use crate::params::{schema, CliResult, Ctx};
use crate::report::Report;

const EPS: f64 = 1e-9;

fn sizes(ctx: &Ctx, m: usize, s: usize) -> CliResult<(usize, usize)> {
    let (m, s) = (ctx.p.m.unwrap_or(m), ctx.p.s.unwrap_or(s));
    if m < 2 || s == 0 || s > m {
        return Err(schema(format!("need m ≥ 2 and 1 ≤ s ≤ m, got m={m} s={s}")));
    }
    Ok((m, s))
}

pub fn decode_uniform(ctx: &Ctx, rep: &mut Report) -> CliResult<()> {
    let (m, s) = sizes(ctx, 100, 5)?;
    let delta = ctx.delta(0.05)?;
    let formula = dimension_for(s, m, delta, Regime::Uniform)?;
    let d = ctx.dim(ctx.p.d.unwrap_or(formula))?;
    let trials = ctx.count("trials", ctx.p.trials.unwrap_or(200))?;
    let sets = ctx.count("sets", ctx.p.sets.unwrap_or(20))?;
    let seed = ctx.seed()?;
    let kind = ctx.codebook_kind(d, "bipolar")?;

    #[derive(Serialize)]
    struct Row {
        trial: usize,
        mu_emp: f64,
        guaranteed: bool,
        sets: usize,
        errors: usize,
    }
    let rows = par_trials(trials, |t| {
        let ts = derive_seed(seed, t as u64);
        let cb = Codebook::<f64>::generate(kind, m, d, ts)?;
        let mu = cb.incoherence()?;
        let mut r = rng::stream(ts, 1);
        let mut errors = 0;
        for _ in 0..sets {
            let set = subset(m, s, &mut r);
            let es = encode_set(&set, &cb, Bundling::Sum)?;
            errors += usize::from(decode_set(&es, &cb)? != set);
        }
        Ok(Row { trial: t, mu_emp: mu, guaranteed: (s as f64) * mu < 0.5, sets, errors })
    })?;
    rep.rows(&rows);
    rep.info("d", d as f64, Some(formula as f64));
    rep.le("draw_failure_rate", rate(rows.iter().filter(|r| r.errors > 0).count(), trials), 2.0 * delta);
    rep.eq("guaranteed_draw_errors", rows.iter().filter(|r| r.guaranteed).map(|r| r.errors).sum::<usize>() as f64, 0.0);
    rep.info("mu_emp_max", rows.iter().map(|r| r.mu_emp).fold(0.0, f64::max), Some(0.5 / s as f64));
    Ok(())
}

pub fn decode_pointwise(ctx: &Ctx, rep: &mut Report) -> CliResult<()> {
    let (m, s) = sizes(ctx, 1000, 50)?;
    let delta = ctx.delta(0.01)?;
    let formula = dimension_for(s, m, delta, Regime::Pointwise)?;
    let d = ctx.dim(ctx.p.d.unwrap_or(formula))?;
    let trials = ctx.count("trials", ctx.p.trials.unwrap_or(1000))?;
    let seed = ctx.seed()?;
    let kind = ctx.codebook_kind(d, "bipolar")?;

    #[derive(Serialize)]
    struct Row {
        trial: usize,
        success: bool,
        false_positives: usize,
        false_negatives: usize,
    }
    let rows = par_trials(trials, |t| {
        let ts = derive_seed(seed, t as u64);
        let cb = Codebook::<f64>::generate(kind, m, d, ts)?;
        let set = subset(m, s, &mut rng::stream(ts, 1));
        let got = decode_set(&encode_set(&set, &cb, Bundling::Sum)?, &cb)?;
        let fp = got.iter().filter(|a| set.binary_search(a).is_err()).count();
        let fneg = set.iter().filter(|a| got.binary_search(a).is_err()).count();
        Ok(Row { trial: t, success: fp + fneg == 0, false_positives: fp, false_negatives: fneg })
    })?;
    rep.rows(&rows);
    rep.info("d", d as f64, Some(formula as f64));
    rep.ge("success_rate", rate(rows.iter().filter(|r| r.success).count(), trials), 1.0 - 2.0 * delta);
    Ok(())
}

pub fn estimates(ctx: &Ctx, rep: &mut Report) -> CliResult<()> {
    let (m, smax) = sizes(ctx, 200, 20)?;
    let d = ctx.dim(ctx.p.d.unwrap_or(16_384))?;
    let trials = ctx.count("trials", ctx.p.trials.unwrap_or(3))?;
    let pairs = ctx.count("pairs", ctx.p.pairs.unwrap_or(100))?;
    let seed = ctx.seed()?;
    let kind = ctx.codebook_kind(d, "bipolar")?;

    #[derive(Serialize)]
    struct Row {
        trial: usize,
        pair: usize,
        s1: usize,
        s2: usize,
        overlap: usize,
        mu_emp: f64,
        size_estimate: f64,
        size_bound: f64,
        size_ok: bool,
        intersection_estimate: f64,
        intersection_bound: f64,
        intersection_ok: bool,
        union_estimate: f64,
    }
    let per = par_trials(trials, |t| {
        let ts = derive_seed(seed, t as u64);
        let cb = Codebook::<f64>::generate(kind, m, d, ts)?;
        let mu = cb.incoherence()?;
        let mut r = rng::stream(ts, 1);
        let mut rows = Vec::with_capacity(pairs);
        for pair in 0..pairs {
            let s1 = r.random_range(1..=smax);
            let s2 = r.random_range(1..=smax);
            let a = subset(m, s1, &mut r);
            let overlap = r.random_range(0..=s1.min(s2));
            let rest: Vec<usize> = (0..m).filter(|x| a.binary_search(x).is_err()).collect();
            let mut b: Vec<usize> = subset(s1, overlap, &mut r).into_iter().map(|i| a[i]).collect();
            b.extend(subset(rest.len(), s2 - overlap, &mut r).into_iter().map(|i| rest[i]));
            b.sort_unstable();
            let (ea, eb) = (encode_set(&a, &cb, Bundling::Sum)?, encode_set(&b, &cb, Bundling::Sum)?);
            let se = size_estimate(&ea, &cb)?;
            let ie = intersection_estimate(&ea, &eb, &cb)?;
            let (sb, ib) = ((s1 * s1) as f64 * mu, (s1 * s2) as f64 * mu);
            rows.push(Row {
                trial: t,
                pair,
                s1,
                s2,
                overlap,
                mu_emp: mu,
                size_estimate: se,
                size_bound: sb,
                size_ok: (se - s1 as f64).abs() <= sb + EPS,
                intersection_estimate: ie,
                intersection_bound: ib,
                intersection_ok: (ie - overlap as f64).abs() <= ib + EPS,
                union_estimate: union_estimate(&ea, &eb, &cb)?,
            });
        }
        Ok(rows)
    })?;
    let rows: Vec<Row> = per.into_iter().flatten().collect();
    rep.rows(&rows);
    rep.eq("size_violations", rows.iter().filter(|r| !r.size_ok).count() as f64, 0.0);
    rep.eq("intersection_violations", rows.iter().filter(|r| !r.intersection_ok).count() as f64, 0.0);
    let worst = |f: fn(&Row) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    rep.info("size_error_over_bound_max", worst(|r| (r.size_estimate - r.s1 as f64).abs() / r.size_bound), Some(1.0));
    rep.info(
        "intersection_error_over_bound_max",
        worst(|r| (r.intersection_estimate - r.overlap as f64).abs() / r.intersection_bound),
        Some(1.0),
    );
    Ok(())
}

/// False-positive rate predicted for independent codewords: a probe passes
/// when each of its bits is set, and a bit is set with probability
/// `1 − (1 − p)^s`.
fn predicted_fpr(kind: CodebookKind, s: usize, d: usize) -> f64 {
    match kind {
        CodebookKind::SparseBinary { p, fixed_weight: false } => {
            let q = 1.0 - (1.0 - p).powi(s as i32);
            (1.0 - p * (1.0 - q)).powi(d as i32)
        }
        CodebookKind::SparseBinary { p, fixed_weight: true } => {
            let k = ((p * d as f64).round()).max(1.0);
            let q = 1.0 - (1.0 - k / d as f64).powi(s as i32);
            q.powf(k)
        }
        _ => f64::NAN,
    }
}

pub fn bloom_fpr(ctx: &Ctx, rep: &mut Report) -> CliResult<()> {
    let s = ctx.p.s.unwrap_or(100);
    if s == 0 {
        return Err(schema("s must be positive"));
    }
    let delta = ctx.delta(0.01)?;
    let d = ctx.dim(ctx.p.d.unwrap_or_else(|| (1.443 * s as f64 * (1.0 / delta).ln()).ceil() as usize))?;
    let probes = ctx.count("probes", ctx.p.probes.unwrap_or(100_000))?;
    let trials = ctx.count("trials", ctx.p.trials.unwrap_or(1))?;
    let seed = ctx.seed()?;
    let kind = if ctx.p.hashes.is_some() || ctx.p.kind.is_some() {
        ctx.codebook_kind(d, "sparse")?
    } else {
        CodebookKind::SparseBinary { p: ctx.p.p.unwrap_or(std::f64::consts::LN_2 / s as f64), fixed_weight: false }
    };
    if !matches!(kind, CodebookKind::SparseBinary { .. }) {
        return Err(schema("bloom-fpr needs a sparse codebook"));
    }
    let predicted = predicted_fpr(kind, s, d);

    #[derive(Serialize)]
    struct Row {
        trial: usize,
        false_negatives: usize,
        false_positives: usize,
        fpr: f64,
    }
    let rows = par_trials(trials, |t| {
        let ts = derive_seed(seed, t as u64);
        let cb = Codebook::<f64>::generate(kind, s + probes, d, ts)?;
        let members: Vec<usize> = (0..s).collect();
        let es = encode_set(&members, &cb, Bundling::Max)?;
        let rule = QueryRule::ExactContainment;
        let mut fneg = 0;
        for &a in &members {
            fneg += usize::from(!member_query_with(&es, a, &cb, rule)?);
        }
        let mut fp = 0;
        for a in s..s + probes {
            fp += usize::from(member_query_with(&es, a, &cb, rule)?);
        }
        Ok(Row { trial: t, false_negatives: fneg, false_positives: fp, fpr: rate(fp, probes) })
    })?;
    rep.rows(&rows);
    rep.info("d", d as f64, Some(bloom_parameters(s, delta)?.d as f64));
    rep.eq("false_negatives", rows.iter().map(|r| r.false_negatives).sum::<usize>() as f64, 0.0);
    rep.le("fpr", rate(rows.iter().map(|r| r.false_positives).sum(), probes * trials), 2.0 * delta);
    rep.info("predicted_fpr", predicted, None);
    Ok(())
}

fn model_param(m: &NoiseModel) -> f64 {
    match *m {
        NoiseModel::Awgn { sigma } => sigma,
        NoiseModel::UniformInteger { c } => c as f64,
        NoiseModel::TernaryFlip { theta } => theta,
        NoiseModel::AdversarialL2 { omega } => omega,
        NoiseModel::AdversarialL1 { budget } => budget,
    }
}

pub fn noise_tolerance(ctx: &Ctx, rep: &mut Report) -> CliResult<()> {
    let (m, s) = sizes(ctx, 100, 5)?;
    let delta = ctx.delta(0.05)?;
    let d = ctx.dim(ctx.p.d.unwrap_or(4096))?;
    let trials = ctx.count("trials", ctx.p.trials.unwrap_or(500))?;
    let draws = ctx.count("draws", ctx.p.draws.unwrap_or(10))?;
    let fraction = ctx.positive("fraction", ctx.p.fraction, 0.5)?;
    let seed = ctx.seed()?;
    let models: Vec<NoiseKind> = match ctx.p.model.as_deref().unwrap_or("all") {
        "all" => NoiseKind::ALL.to_vec(),
        name => vec![name.parse().map_err(|_| schema(format!("unknown noise model `{name}`")))?],
    };

    #[derive(Serialize)]
    struct Row {
        model: &'static str,
        trial: usize,
        draw: usize,
        param: f64,
        success: bool,
        margin: f64,
        safe: bool,
    }
    let mut all = Vec::new();
    for (mi, &nk) in models.iter().enumerate() {
        let name = nk.name();
        let (kind, bundling, rule) = if nk == NoiseKind::TernaryFlip {
            let k = if ctx.p.hashes.is_some() || ctx.p.kind.is_some() {
                ctx.codebook_kind(d, "sparse")?
            } else {
                CodebookKind::SparseBinary { p: ctx.p.p.unwrap_or(0.05), fixed_weight: false }
            };
            (k, Bundling::Max, QueryRule::HalfNorm)
        } else {
            (ctx.codebook_kind(d, "bipolar")?, Bundling::Sum, QueryRule::default())
        };
        let cbs = par_trials(draws, |k| Ok(Codebook::<f64>::generate(kind, m, d, derive_seed(seed, (1 << 32) + k as u64))?))?;
        let tols = cbs.iter().map(|cb| Ok(tolerance(cb, s, delta, nk)?)).collect::<CliResult<Vec<f64>>>()?;
        let mean_tol = tols.iter().sum::<f64>() / draws as f64;
        rep.info(&format!("{name}.tolerance_mean"), mean_tol, None);
        if tols.iter().any(|&t| t <= 0.0) {
            rep.info(&format!("{name}.skipped_nonpositive_tolerance"), tols.iter().cloned().fold(f64::INFINITY, f64::min), Some(0.0));
            continue;
        }
        let rows = par_trials(trials, |t| {
            let k = t % draws;
            let cb = &cbs[k];
            let ts = derive_seed(seed, t as u64);
            let mut r = rng::stream(ts, mi as u64);
            let set = subset(m, s, &mut r);
            let target = set[r.random_range(0..s)];
            let es = encode_set(&set, cb, bundling)?;
            let model = model_at(nk, fraction * tols[k], cb, s);
            let noisy = apply_noise(&es.vector, &NoiseSpec { model, seed: derive_seed(ts, 0x6e) }, Some(target), cb)?;
            let got = decode_set_with(&es.with_vector(noisy.clone())?, cb, rule)?;
            let rho = rho_bound(cb, &noise_delta(&es.vector, &noisy)?)?;
            let margin = decoding_margin(cb, s, rho)?;
            Ok(Row { model: name, trial: t, draw: k, param: model_param(&model), success: got == set, margin, safe: margin > 0.0 })
        })?;
        rep.ge(&format!("{name}.success_rate"), rate(rows.iter().filter(|r| r.success).count(), trials), 1.0 - 2.0 * delta);
        if bundling == Bundling::Sum {
            rep.eq(&format!("{name}.safety_violations"), rows.iter().filter(|r| r.safe && !r.success).count() as f64, 0.0);
        }
        all.extend(rows);
    }
    rep.rows(&all);
    Ok(())
}
