use std::sync::Arc;

use hdc_core::codebook::{dimension_for, Codebook, CodebookKind, Regime};
use hdc_core::rng::{self, derive_seed};
use hdc_core::structures::{
    decode_feature, decode_sequence_position, encode_sequence, encode_structure, feature_scores, shift_incoherence, BindingScope, SequenceWindow,
    StructureCodec,
};
use rand::Rng;
use serde::Serialize;

use super::{par_trials, rate};
use crate::params::{schema, CliResult, Ctx};
use crate::report::Report;

pub fn structure_decode(ctx: &Ctx, rep: &mut Report) -> CliResult<()> {
    let m = ctx.p.m.unwrap_or(32);
    let n = ctx.p.features.unwrap_or(8);
    if m < 2 || n == 0 {
        return Err(schema(format!("need m ≥ 2 values and at least one feature, got m={m} features={n}")));
    }
    let delta = ctx.delta(0.01)?;
    let formula = dimension_for(n, m, delta, Regime::Uniform)?;
    let d = ctx.dim(ctx.p.d.unwrap_or(formula))?;
    let trials = ctx.count("trials", ctx.p.trials.unwrap_or(200))?;
    let draws = ctx.count("draws", ctx.p.draws.unwrap_or(5))?;
    let seed = ctx.seed()?;
    let kind = ctx.codebook_kind(d, "bipolar")?;

    // One extra feature stays out of every record to probe absent-feature scores.
    let codecs = par_trials(draws, |k| {
        let ks = derive_seed(seed, (1 << 32) + k as u64);
        let codec = StructureCodec::new(
            Codebook::<f64>::generate(kind, m, d, derive_seed(ks, 0))?,
            Codebook::<f64>::generate(CodebookKind::DenseBipolar, n + 1, d, derive_seed(ks, 1))?,
        )?;
        let mu = codec.binding_incoherence(BindingScope::All)?;
        Ok((codec, mu))
    })?;

    #[derive(Serialize)]
    struct Row {
        trial: usize,
        draw: usize,
        mu_binding: f64,
        fields_correct: usize,
        fields: usize,
        success: bool,
        guaranteed: bool,
        absent_score: f64,
        absent_bound: f64,
    }
    let rows = par_trials(trials, |t| {
        let k = t % draws;
        let (codec, mu) = &codecs[k];
        let mut r = rng::stream(derive_seed(seed, t as u64), 0);
        let pairs: Vec<(usize, usize)> = (0..n).map(|f| (f, r.random_range(0..m))).collect();
        let h = encode_structure(&pairs, codec)?;
        let mut correct = 0;
        for &(f, a) in &pairs {
            correct += usize::from(decode_feature(&h, f, codec)? == a);
        }
        let absent = feature_scores(&h, n, codec)?.into_iter().fold(f64::NEG_INFINITY, f64::max);
        Ok(Row {
            trial: t,
            draw: k,
            mu_binding: *mu,
            fields_correct: correct,
            fields: n,
            success: correct == n,
            guaranteed: *mu < 0.5 / n as f64,
            absent_score: absent,
            absent_bound: n as f64 * mu * codec.values().min_norm_sq(),
        })
    })?;
    rep.rows(&rows);
    rep.info("d", d as f64, Some(formula as f64));
    rep.ge("success_rate", rate(rows.iter().filter(|r| r.success).count(), trials), 1.0 - 2.0 * delta);
    rep.eq("guaranteed_failures", rows.iter().filter(|r| r.guaranteed && !r.success).count() as f64, 0.0);
    rep.eq("absent_score_violations", rows.iter().filter(|r| r.absent_score > r.absent_bound + 1e-9).count() as f64, 0.0);
    rep.info("mu_binding_max", codecs.iter().map(|c| c.1).fold(0.0, f64::max), Some(0.5 / n as f64));
    Ok(())
}

pub fn sequence_stream(ctx: &Ctx, rep: &mut Report) -> CliResult<()> {
    let m = ctx.p.m.unwrap_or(26);
    let n = ctx.p.n.unwrap_or(64);
    let d = ctx.dim(ctx.p.d.unwrap_or(4096))?;
    let pushes = ctx.count("pushes", ctx.p.pushes.unwrap_or(10_000))?;
    let seed = ctx.seed()?;
    if m < 2 {
        return Err(schema("sequence alphabet needs m ≥ 2"));
    }
    let cb = Arc::new(Codebook::<f64>::generate(CodebookKind::DenseBipolar, m, d, derive_seed(seed, 0))?);
    let mut window = SequenceWindow::new(cb.clone(), n)?;
    let mut r = rng::stream(seed, 1);

    #[derive(Serialize)]
    struct Row {
        step: usize,
        symbol: usize,
        identical: bool,
    }
    let mut rows = Vec::with_capacity(pushes);
    for step in 0..pushes {
        let x = r.random_range(0..m);
        window.push_mut(x)?;
        let fresh = encode_sequence(&window.contents(), &cb)?;
        let identical = window.state().as_integer().map(|v| v.0) == fresh.as_integer().map(|v| v.0);
        rows.push(Row { step, symbol: x, identical });
    }
    rep.rows(&rows);
    rep.eq("state_mismatches", rows.iter().filter(|r| !r.identical).count() as f64, 0.0);
    let contents = window.contents();
    let state = window.state();
    let mut decoded = 0;
    for (i, &x) in contents.iter().enumerate() {
        decoded += usize::from(decode_sequence_position(&state, i, contents.len(), &cb)? == x);
    }
    rep.info("final_positions_decoded", rate(decoded, contents.len()), Some(1.0));
    rep.info("shift_incoherence", shift_incoherence(&cb, n)?, Some(0.5 / n as f64));
    Ok(())
}
