use hdc_core::euclid::{
    adversarial_robust_tolerance, awgn_robust_tolerance, cluster_preservation_check, random_unit, unit_at_angle, DistortionReport, Encoder, HdMetric,
    InputMetric, Kernel, PositionId, Projection, Rff, Srp,
};
use hdc_core::hdcore::{dot, hamming, norm_sq, Hypervector};
use hdc_core::metrics::{quantiles, spearman};
use hdc_core::rng::{self, derive_seed};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::{par_trials, rate};
use crate::params::{schema, CliResult, Ctx};
use crate::report::Report;

pub fn srp_distortion(ctx: &Ctx, rep: &mut Report) -> CliResult<()> {
    let n = ctx.p.n.unwrap_or(32);
    let d = ctx.dim(ctx.p.d.unwrap_or(4096))?;
    let pairs = ctx.count("pairs", ctx.p.pairs.unwrap_or(1000))?;
    let delta = ctx.delta(0.01)?;
    let seed = ctx.seed()?;
    let enc = Srp::<f64>::new(n, d, derive_seed(seed, 0))?;
    let eps = (2.0 * (2.0 / delta).ln() / d as f64).sqrt();

    #[derive(Serialize)]
    struct Row {
        pair: usize,
        theta: f64,
        theta_hat: f64,
        abs_error: f64,
        within: bool,
    }
    let rows = par_trials(pairs, |i| {
        let mut r = rng::stream(seed, 1 + i as u64);
        let (x, y) = (random_unit(n, &mut r), random_unit(n, &mut r));
        let theta = InputMetric::Angular.eval(&x, &y);
        let theta_hat = Srp::angle_estimate(&enc.encode(&x)?, &enc.encode(&y)?)?;
        let err = (theta_hat - theta).abs();
        Ok(Row { pair: i, theta, theta_hat, abs_error: err, within: err <= eps })
    })?;
    rep.rows(&rows);
    rep.info("epsilon", eps, None);
    rep.ge("within_fraction", rate(rows.iter().filter(|r| r.within).count(), pairs), 1.0 - delta);
    let errs: Vec<f64> = rows.iter().map(|r| r.abs_error).collect();
    let q = quantiles(&errs, &[0.5, 0.9, 0.99, 1.0]);
    for (name, v) in ["abs_error_q50", "abs_error_q90", "abs_error_q99", "abs_error_max"].iter().zip(q) {
        rep.info(name, v, Some(eps));
    }
    let dx: Vec<f64> = rows.iter().map(|r| r.theta).collect();
    let dh: Vec<f64> = rows.iter().map(|r| r.theta_hat * d as f64).collect();
    let fit = DistortionReport::from_distances(&dx, &dh)?;
    rep.info("alpha_over_d", fit.alpha_fit / d as f64, Some(1.0));
    rep.info("beta_over_d", fit.beta_max / d as f64, Some(eps));
    Ok(())
}

pub fn posid_distortion(ctx: &Ctx, rep: &mut Report) -> CliResult<()> {
    let n = ctx.p.n.unwrap_or(8);
    let bins = ctx.p.bins.unwrap_or(64);
    let d = ctx.dim(ctx.p.d.unwrap_or(65_536))?;
    let pairs = ctx.count("pairs", ctx.p.pairs.unwrap_or(500))?;
    let seed = ctx.seed()?;
    let enc = if ctx.p.per_feature.unwrap_or(false) {
        PositionId::<f64>::per_feature(n, bins, d, derive_seed(seed, 0))?
    } else {
        PositionId::<f64>::new(n, bins, d, derive_seed(seed, 0))?
    };
    let mu = enc.cross_incoherence()?;
    let slack = enc.quantization_slack();
    let bound = 2.0 * (n * n) as f64 * mu + slack;
    let shell = (n * n * d) as f64 * mu;

    #[derive(Serialize)]
    struct Row {
        pair: usize,
        l1: f64,
        l1_estimate: f64,
        deviation: f64,
        bound: f64,
        within: bool,
        norm_ok: bool,
    }
    let rows = par_trials(pairs, |i| {
        let mut r = rng::stream(seed, 1 + i as u64);
        let x: Vec<f64> = (0..n).map(|_| r.random()).collect();
        let y: Vec<f64> = (0..n).map(|_| r.random()).collect();
        let (hx, hy) = (enc.encode(&x)?, enc.encode(&y)?);
        let l1 = InputMetric::L1.eval(&x, &y);
        let est = enc.l1_estimate(&hx, &hy)?;
        let norm_ok = [&hx, &hy].iter().all(|h| (norm_sq(h) - (n * d) as f64).abs() <= shell + 1e-9);
        Ok(Row { pair: i, l1, l1_estimate: est, deviation: (est - l1).abs(), bound, within: (est - l1).abs() <= bound + 1e-12, norm_ok })
    })?;
    rep.rows(&rows);
    rep.eq("sandwich_violations", rows.iter().filter(|r| !r.within).count() as f64, 0.0);
    rep.eq("norm_shell_violations", rows.iter().filter(|r| !r.norm_ok).count() as f64, 0.0);
    rep.info("mu_cross", mu, None);
    rep.info("quantization_slack", slack, None);
    rep.info("deviation_max", rows.iter().map(|r| r.deviation).fold(0.0, f64::max), Some(bound));
    let dx: Vec<f64> = rows.iter().map(|r| r.l1).collect();
    let dh: Vec<f64> = rows.iter().map(|r| r.l1_estimate * (2 * d) as f64).collect();
    let fit = DistortionReport::from_distances(&dx, &dh)?;
    rep.info("alpha_over_2d", fit.alpha_fit / (2 * d) as f64, Some(1.0));
    Ok(())
}

pub fn rff_kernel(ctx: &Ctx, rep: &mut Report) -> CliResult<()> {
    let n = ctx.p.n.unwrap_or(8);
    let d = ctx.dim(ctx.p.d.unwrap_or(8192))?;
    let pairs = ctx.count("pairs", ctx.p.pairs.unwrap_or(1000))?;
    let gamma = ctx.positive("gamma", ctx.p.gamma, 0.5)?;
    let seed = ctx.seed()?;
    let kernel = Kernel::Gaussian { gamma };
    let enc = Rff::<f64>::new(n, d, kernel, false, derive_seed(seed, 0))?;
    // Distances up to 2/√γ cover kernel values down to e⁻⁴.
    let rmax = 2.0 / gamma.sqrt();

    #[derive(Serialize)]
    struct Row {
        pair: usize,
        distance: f64,
        kernel: f64,
        dot: f64,
        abs_error: f64,
        hamming: usize,
    }
    let rows = par_trials(pairs, |i| {
        let mut r = rng::stream(seed, 1 + i as u64);
        let x: Vec<f64> = (0..n).map(|_| r.random()).collect();
        let u = random_unit(n, &mut r);
        let dist = r.random_range(0.0..rmax);
        let y: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + dist * b).collect();
        let k = kernel.eval(&x, &y);
        let got = dot(&enc.rff_encode(&x, false)?, &enc.rff_encode(&y, false)?)?;
        let ham = hamming(&enc.rff_encode(&x, true)?, &enc.rff_encode(&y, true)?)?;
        Ok(Row { pair: i, distance: dist, kernel: k, dot: got, abs_error: (got - k).abs(), hamming: ham })
    })?;
    rep.rows(&rows);
    rep.le("mae", rows.iter().map(|r| r.abs_error).sum::<f64>() / pairs as f64, 3.0 / (d as f64).sqrt());
    let k: Vec<f64> = rows.iter().map(|r| r.kernel).collect();
    let h: Vec<f64> = rows.iter().map(|r| -(r.hamming as f64)).collect();
    rep.ge("rank_correlation", spearman(&k, &h), 0.99);
    Ok(())
}

/// An encoder, the metrics it is compared under, and whether inputs must lie
/// in the unit cube.
pub(crate) type EncoderChoice = (Box<dyn Encoder<f64>>, InputMetric, HdMetric, bool);

pub(crate) fn make_encoder(ctx: &Ctx, n: usize, d: usize, seed: u64, default: &str) -> CliResult<EncoderChoice> {
    let name = ctx.p.encoder.as_deref().unwrap_or(default);
    Ok(match name {
        "srp" => (Box::new(Srp::new(n, d, seed)?), InputMetric::Angular, HdMetric::Hamming, false),
        "projection" => (Box::new(Projection::new(n, d, seed)?), InputMetric::SqL2, HdMetric::SqEuclid, false),
        "posid" => {
            let bins = ctx.p.bins.unwrap_or(32);
            let e = if ctx.p.per_feature.unwrap_or(false) { PositionId::per_feature(n, bins, d, seed)? } else { PositionId::new(n, bins, d, seed)? };
            (Box::new(e), InputMetric::L1, HdMetric::SqEuclid, true)
        }
        "rff" => {
            let kernel = Kernel::Gaussian { gamma: ctx.positive("gamma", ctx.p.gamma, 0.5)? };
            let q = ctx.p.quantized.unwrap_or(false);
            (Box::new(Rff::new(n, d, kernel, q, seed)?), InputMetric::SqL2, if q { HdMetric::Hamming } else { HdMetric::SqEuclid }, false)
        }
        other => return Err(schema(format!("unknown encoder `{other}`"))),
    })
}

pub(crate) fn gaussian(n: usize, r: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(r)).collect()
}

pub fn cluster_preserve(ctx: &Ctx, rep: &mut Report) -> CliResult<()> {
    let n = ctx.p.n.unwrap_or(16);
    let d = ctx.dim(ctx.p.d.unwrap_or(4096))?;
    let c = ctx.p.centroids.unwrap_or(4);
    let points = ctx.count("points", ctx.p.points.unwrap_or(50))?;
    let trials = ctx.count("trials", ctx.p.trials.unwrap_or(10))?;
    let spread = ctx.positive("spread", ctx.p.spread, 0.1)?;
    let seed = ctx.seed()?;
    if c == 0 {
        return Err(schema("need at least one centroid"));
    }

    #[derive(Serialize)]
    struct Row {
        trial: usize,
        min_gap: f64,
        beta_over_alpha: f64,
        condition_met: bool,
        agreement: f64,
        preserved: bool,
    }
    let rows = par_trials(trials, |t| {
        let ts = derive_seed(seed, t as u64);
        let (enc, dx, dh, cube) = make_encoder(ctx, n, d, derive_seed(ts, 0), "srp")?;
        let mut r = rng::stream(ts, 1);
        let cents: Vec<Vec<f64>> = (0..c)
            .map(|_| if cube { (0..n).map(|_| r.random_range(0.2..0.8)).collect() } else { random_unit(n, &mut r) })
            .collect();
        let mut pts = Vec::with_capacity(c * points);
        for cen in &cents {
            for _ in 0..points {
                let g = gaussian(n, &mut r);
                let p: Vec<f64> = cen.iter().zip(&g).map(|(a, b)| a + spread * b).collect();
                pts.push(if cube { p.into_iter().map(|v| v.clamp(0.0, 1.0)).collect() } else { p });
            }
        }
        let rp = cluster_preservation_check(&*enc, &cents, &pts, dx, dh)?;
        Ok(Row {
            trial: t,
            min_gap: rp.min_gap,
            beta_over_alpha: rp.beta_over_alpha,
            condition_met: rp.condition_met,
            agreement: rp.agreement,
            preserved: rp.preserved,
        })
    })?;
    rep.rows(&rows);
    rep.eq("implication_violations", rows.iter().filter(|r| r.condition_met && !r.preserved).count() as f64, 0.0);
    rep.info("condition_met_fraction", rate(rows.iter().filter(|r| r.condition_met).count(), trials), None);
    rep.info("agreement_mean", rows.iter().map(|r| r.agreement).sum::<f64>() / trials as f64, Some(1.0));
    Ok(())
}

fn sq_dist(a: &[f64], b: &Hypervector<f64>) -> f64 {
    a.iter().zip(b.to_real_vec()).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn robustness(ctx: &Ctx, rep: &mut Report) -> CliResult<()> {
    let n = ctx.p.n.unwrap_or(32);
    let d = ctx.dim(ctx.p.d.unwrap_or(4096))?;
    let trials = ctx.count("trials", ctx.p.trials.unwrap_or(500))?;
    let calib = ctx.count("pairs", ctx.p.pairs.unwrap_or(500))?;
    let delta = ctx.delta(0.05)?;
    let (eps1, eps2) = (ctx.p.eps1.unwrap_or(0.1), ctx.p.eps2.unwrap_or(0.3));
    if !(0.0 <= eps1 && eps1 < eps2 && eps2 <= 1.0) {
        return Err(schema(format!("need 0 ≤ eps1 < eps2 ≤ 1, got {eps1}, {eps2}")));
    }
    let fraction = ctx.positive("fraction", ctx.p.fraction, 0.5)?;
    let seed = ctx.seed()?;
    let adversarial = match ctx.p.model.as_deref().unwrap_or("awgn") {
        "awgn" => false,
        "adversarial" => true,
        other => return Err(schema(format!("euclid-robustness supports awgn and adversarial, got `{other}`"))),
    };
    let enc = Srp::<f64>::new(n, d, derive_seed(seed, 0))?;

    let cal = par_trials(calib, |i| {
        let mut r = rng::stream(seed, (1 << 32) + i as u64);
        let x = random_unit(n, &mut r);
        let y = unit_at_angle(&x, r.random(), &mut r);
        Ok((InputMetric::Angular.eval(&x, &y), HdMetric::SqEuclid.eval(&enc.encode(&x)?, &enc.encode(&y)?)?))
    })?;
    let (dx, dh): (Vec<f64>, Vec<f64>) = cal.into_iter().unzip();
    let fit = DistortionReport::from_distances(&dx, &dh)?;
    let tol = if adversarial {
        adversarial_robust_tolerance(eps1, eps2, d, &fit)?
    } else {
        awgn_robust_tolerance(eps1, eps2, (d as f64).sqrt(), &fit)?
    };
    rep.info("alpha", fit.alpha_fit, None);
    rep.info("beta", fit.beta_max, None);
    rep.info("tolerance", tol, None);
    if tol <= 0.0 {
        rep.info("skipped_nonpositive_tolerance", tol, Some(0.0));
        return Ok(());
    }
    let param = fraction * tol;

    #[derive(Serialize)]
    struct Row {
        trial: usize,
        param: f64,
        d_near: f64,
        d_far: f64,
        violated: bool,
    }
    let rows = par_trials(trials, |t| {
        let mut r = rng::stream(seed, 1 + t as u64);
        let x = random_unit(n, &mut r);
        let near = unit_at_angle(&x, eps1, &mut r);
        let far = unit_at_angle(&x, eps2, &mut r);
        let (hx, hn, hf) = (enc.encode(&x)?, enc.encode(&near)?, enc.encode(&far)?);
        let mut noisy = hx.to_real_vec();
        if adversarial {
            // ‖Δ‖₁ ≤ ωd spent as sign flips (2 each) where x agrees with the
            // near point but not the far one.
            let mut flips = (param * d as f64 / 2.0).floor() as usize;
            for (i, v) in noisy.iter_mut().enumerate() {
                if flips == 0 {
                    break;
                }
                if hx.get(i) == hn.get(i) && hx.get(i) != hf.get(i) {
                    *v = -*v;
                    flips -= 1;
                }
            }
        } else {
            for (v, z) in noisy.iter_mut().zip(gaussian(d, &mut r)) {
                *v += param * z;
            }
        }
        let (dn, df) = (sq_dist(&noisy, &hn), sq_dist(&noisy, &hf));
        Ok(Row { trial: t, param, d_near: dn, d_far: df, violated: dn >= df })
    })?;
    rep.rows(&rows);
    rep.le("violation_rate", rate(rows.iter().filter(|r| r.violated).count(), trials), 2.0 * delta);
    Ok(())
}
