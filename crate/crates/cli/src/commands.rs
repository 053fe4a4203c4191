use std::path::Path;

use deft_core::csvfmt::{format_value, Table};
use deft_core::data::{generate_dynamic_sbm, load_snapshots, save_snapshots};
use deft_core::scaling::bench_scaling;
use deft_core::spectral::fixtures::{lemma_table, verify_lemmas};
use deft_core::spectral::{filter_response_table, wavelet_table, wavelet_vector};
use deft_core::tasks::{contexts_for, evaluate, fit, Phase};
use deft_core::{
    Checkpoint, DynamicGraph, Error, MetricsReport, Result, SbmConfig, ScaleSet, TaskModel,
};
use rayon::prelude::*;

use crate::args::{
    BenchArgs, CommonArgs, EvalArgs, FilterResponseArgs, GenerateArgs, PhaseArg, TrainArgs,
    WaveletArgs,
};
use crate::settings::{prepare_out, thread_count, Settings};

/// Names the file in I/O errors.
fn at<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(
            io.kind(),
            format!("{}: {io}", path.display()),
        )),
        other => other,
    })
}

fn read_graph(path: &Path) -> Result<DynamicGraph> {
    at(path, load_snapshots(path))
}

fn settings(common: &CommonArgs, data: SbmConfig) -> Result<Settings> {
    Settings::load(common.config.as_deref(), data)
}

fn finish(s: &Settings, out: &Path) -> Result<()> {
    s.validate()?;
    prepare_out(out)?;
    s.write_resolved(out)
}

pub fn generate(a: &GenerateArgs) -> Result<()> {
    let mut s = settings(&a.common, SbmConfig::preset(&a.preset)?)?;
    if let Some(seed) = a.common.seed {
        s.data.seed = seed;
    }
    if let Some(n) = a.nodes {
        s.data.n_nodes = n;
    }
    if let Some(t) = a.snapshots {
        s.data.n_snapshots = t;
    }
    finish(&s, &a.common.out)?;
    let g = generate_dynamic_sbm(&s.data)?;
    let path = a.common.out.join("graph.snapshots");
    save_snapshots(&g, &path)?;
    let edges: usize = g.snapshots().iter().map(|x| x.n_edges()).sum();
    println!(
        "wrote {} ({} snapshots, {} nodes, {edges} edges in total)",
        path.display(),
        g.len(),
        g.n_nodes()
    );
    Ok(())
}

fn train_once(graph: &DynamicGraph, s: &Settings, seed: u64, dir: &Path) -> Result<MetricsReport> {
    let mut tm = TaskModel::new(s.model.clone(), s.task.clone(), graph.feature_dim(), seed)?;
    let ctxs = contexts_for(graph, &tm)?;
    let outcome = fit(graph, &ctxs, &mut tm, &s.train, seed)?;
    let mut report = evaluate(graph, &ctxs, &tm, &s.train, Phase::Test)?;
    report.loss_per_epoch = outcome.loss_per_epoch;
    prepare_out(dir)?;
    tm.checkpoint().save(&dir.join("checkpoint.ckpt"))?;
    report.loss_table().save(&dir.join("loss.csv"))?;
    report.summary_table().save(&dir.join("metrics.csv"))?;
    Ok(report)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let mut s = settings(&a.common, SbmConfig::default())?;
    s.apply_model_flags(&a.model)?;
    if let Some(e) = a.epochs {
        s.train.epochs = e;
    }
    if let Some(r) = a.runs {
        s.run.runs = r;
    }
    if let Some(seed) = a.common.seed {
        s.run.seed = seed;
    }
    let out = &a.common.out;
    finish(&s, out)?;
    let graph = read_graph(&a.data)?;

    if s.run.runs == 1 {
        let report = train_once(&graph, &s, s.run.seed, out)?;
        for (k, v) in report.populated() {
            println!("{k} {}", format_value(v));
        }
        return Ok(());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker threads: {e}")))?;
    let reports = pool.install(|| {
        (0..s.run.runs)
            .into_par_iter()
            .map(|k| {
                let seed = s.run.seed + k as u64;
                train_once(&graph, &s, seed, &out.join(format!("run_{seed}")))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut table = Table::new(["metric", "mean", "std"]);
    for (k, _) in reports[0].populated() {
        let values: Vec<f64> = reports
            .iter()
            .flat_map(|r| {
                r.populated()
                    .into_iter()
                    .filter(|(n, _)| *n == k)
                    .map(|(_, v)| v)
            })
            .collect();
        let (mean, std) = mean_std(&values);
        table.push(vec![k.to_string(), format_value(mean), format_value(std)]);
        println!(
            "{k} {} ± {} over {} runs",
            format_value(mean),
            format_value(std),
            values.len()
        );
    }
    table.save(&out.join("metrics.csv"))
}

fn load_model(checkpoint: &Path) -> Result<TaskModel> {
    TaskModel::from_checkpoint(&at(checkpoint, Checkpoint::load(checkpoint))?)
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    let s = settings(&a.common, SbmConfig::default())?;
    finish(&s, &a.common.out)?;
    let tm = load_model(&a.checkpoint)?;
    let graph = read_graph(&a.data)?;
    let ctxs = contexts_for(&graph, &tm)?;
    let phase = match a.phase {
        PhaseArg::Val => Phase::Val,
        PhaseArg::Test => Phase::Test,
    };
    let report = evaluate(&graph, &ctxs, &tm, &s.train, phase)?;
    report
        .summary_table()
        .save(&a.common.out.join("metrics.csv"))?;
    for (k, v) in report.populated() {
        println!("{k} {}", format_value(v));
    }
    Ok(())
}

pub fn verify_lemmas_cmd(a: &CommonArgs) -> Result<()> {
    let s = settings(a, SbmConfig::default())?;
    finish(&s, &a.out)?;
    let rows = verify_lemmas()?;
    let table = lemma_table(&rows);
    table.save(&a.out.join("lemmas.csv"))?;
    print!("{}", table.to_csv());
    let failed = rows.iter().filter(|r| !r.pass).count();
    if failed > 0 {
        return Err(Error::Precondition(format!(
            "{failed} of {} lemma rows failed",
            rows.len()
        )));
    }
    Ok(())
}

pub fn filter_response(a: &FilterResponseArgs) -> Result<()> {
    let s = settings(&a.common, SbmConfig::default())?;
    finish(&s, &a.common.out)?;
    let tm = load_model(&a.checkpoint)?;
    let graph = read_graph(&a.data)?;
    let ctxs = contexts_for(&graph, &tm)?;
    let filters = tm.model.filters_at(&ctxs, a.timestep)?;
    let scales = tm.model.config().scale_set()?;
    let single = filters.len() == 1 && filters[0].len() == 1;
    for (h, sets) in filters.iter().enumerate() {
        for (c, f) in sets.iter().enumerate() {
            let name = if single {
                "filter_response.csv".to_string()
            } else {
                format!("filter_response_h{h}_c{c}.csv")
            };
            let path = a.common.out.join(name);
            filter_response_table(f, &scales, a.grid)?
                .table()
                .save(&path)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

pub fn wavelet(a: &WaveletArgs) -> Result<()> {
    let s = settings(&a.common, SbmConfig::default())?;
    finish(&s, &a.common.out)?;
    let tm = load_model(&a.checkpoint)?;
    let cfg = tm.model.config().clone();
    let scales = match &a.scales {
        Some(list) => {
            let mut probe = cfg.clone();
            deft_core::Configurable::set(&mut probe, "scales", list)?;
            ScaleSet::new(probe.scales, cfg.clamp_mode)?
        }
        None => cfg.scale_set()?,
    };
    let graph = read_graph(&a.data)?;
    let ctxs = contexts_for(&graph, &tm)?;
    let filters = tm.model.filters_at(&ctxs, a.timestep)?;
    let per_scale = a.scales.is_none() && cfg.per_scale_coefficients;
    for (j, &scale) in scales.scales().iter().enumerate() {
        let f = &filters[0][if per_scale { j } else { 0 }];
        let psi = wavelet_vector(
            f,
            scale,
            &ctxs[a.timestep].laplacian,
            a.node,
            scales.clamp_mode(),
        )?;
        let path = a.common.out.join(format!("wavelet_s{}.csv", j + 1));
        wavelet_table(&psi).save(&path)?;
        println!("wrote {} (scale {scale})", path.display());
    }
    Ok(())
}

pub fn bench(a: &BenchArgs) -> Result<()> {
    let mut s = settings(&a.common, SbmConfig::default())?;
    s.apply_model_flags(&a.model)?;
    if let Some(seed) = a.common.seed {
        s.run.seed = seed;
    }
    finish(&s, &a.common.out)?;
    let sizes = a
        .sizes
        .split(',')
        .map(|v| deft_core::config::parse_value::<usize>("sizes", v.trim()))
        .collect::<Result<Vec<_>>>()?;
    let report = bench_scaling(&sizes, a.degree, a.features, &s.model, s.run.seed)?;
    let path = a.common.out.join("bench.csv");
    report.table().save(&path)?;
    print!("{}", report.table().to_csv());
    println!("log-log slope {}", format_value(report.slope));
    Ok(())
}
