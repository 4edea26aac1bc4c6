//! One runner per experiment. Each returns per-trial rows and a summary in
//! which every measured quantity sits next to the bound it is checked against.

mod euclid;
mod learning;
mod sets;
mod structs;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;

use crate::params::{schema, CliResult, Ctx};
use crate::report::Report;

pub const EXPERIMENTS: &[&str] = &[
    "set-decode-uniform",
    "set-decode-pointwise",
    "set-estimates",
    "bloom-fpr",
    "noise-tolerance",
    "structure-decode",
    "sequence-stream",
    "srp-distortion",
    "posid-distortion",
    "rff-kernel",
    "cluster-preserve",
    "euclid-robustness",
    "classify-prototypes",
    "winnow-mistakes",
    "sparse-separator",
    "linear-separation",
];

pub fn canonical(name: &str) -> Option<&'static str> {
    let name = if name == "set-decode" { "set-decode-uniform" } else { name };
    EXPERIMENTS.iter().copied().find(|e| *e == name)
}

pub fn run_experiment(name: &str, ctx: &Ctx) -> CliResult<Report> {
    let name = canonical(name).ok_or_else(|| schema(format!("unknown experiment `{name}`; known: {}", EXPERIMENTS.join(", "))))?;
    let mut report = Report::new(name);
    match name {
        "set-decode-uniform" => sets::decode_uniform(ctx, &mut report),
        "set-decode-pointwise" => sets::decode_pointwise(ctx, &mut report),
        "set-estimates" => sets::estimates(ctx, &mut report),
        "bloom-fpr" => sets::bloom_fpr(ctx, &mut report),
        "noise-tolerance" => sets::noise_tolerance(ctx, &mut report),
        "structure-decode" => structs::structure_decode(ctx, &mut report),
        "sequence-stream" => structs::sequence_stream(ctx, &mut report),
        "srp-distortion" => euclid::srp_distortion(ctx, &mut report),
        "posid-distortion" => euclid::posid_distortion(ctx, &mut report),
        "rff-kernel" => euclid::rff_kernel(ctx, &mut report),
        "cluster-preserve" => euclid::cluster_preserve(ctx, &mut report),
        "euclid-robustness" => euclid::robustness(ctx, &mut report),
        "classify-prototypes" => learning::classify_prototypes(ctx, &mut report),
        "winnow-mistakes" => learning::winnow_mistakes(ctx, &mut report),
        "sparse-separator" => learning::sparse_separator(ctx, &mut report),
        "linear-separation" => learning::linear_separation(ctx, &mut report),
        _ => unreachable!("canonical names only"),
    }?;
    Ok(report)
}

/// Runs `f` for every trial index in parallel, keeping trial order.
fn par_trials<R: Send>(n: usize, f: impl Fn(usize) -> CliResult<R> + Sync + Send) -> CliResult<Vec<R>> {
    (0..n).into_par_iter().map(f).collect()
}

/// Sorted uniform `s`-subset of `0..m`.
fn subset(m: usize, s: usize, r: &mut impl Rng) -> Vec<usize> {
    let mut v = index::sample(r, m, s).into_vec();
    v.sort_unstable();
    v
}

fn rate(hits: usize, total: usize) -> f64 {
    hits as f64 / total.max(1) as f64
}
