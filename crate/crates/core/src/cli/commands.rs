use std::io::Write;
use std::path::Path;

use clap::ArgMatches;
use serde_json::json;

use super::args::*;
use super::config::FileLayer;
use super::CliError;
use crate::data::{
    build_dataset, read_jsonl, read_raw, synthesize, write_jsonl, write_labeled, Dataset,
    SynthConfig,
};
use crate::dispo::DispoConfig;
use crate::error::Error;
use crate::eval::{evaluate, sweep_alpha, sweep_csv, sweep_fraction, Policy, SweepConfig};
use crate::geo::ThresholdSet;
use crate::router::{
    decide, load_model, save_model, score, train, EncoderSpec, ParadigmChoice, RouterModel,
    TrainConfig,
};

type CliResult = Result<(), CliError>;

pub fn dispatch(
    command: Command,
    m: &ArgMatches,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult {
    match command {
        Command::Build(a) => build(a, m, out, err),
        Command::Synth(a) => synth(a, m, out),
        Command::Train(a) => train_cmd(a, m, out),
        Command::Route(a) => route(a, m, out),
        Command::Eval(a) => eval(a, m, out),
        Command::Sweep(a) => sweep(a, m, out),
    }
}

fn say(out: &mut dyn Write, text: impl std::fmt::Display) -> CliResult {
    writeln!(out, "{text}").map_err(|e| CliError::from(Error::io("<stdout>", e)))
}

fn write_file(path: &Path, contents: &str) -> CliResult {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e).into())
}

fn layer<'m>(
    common: &Common,
    section: &'static str,
    m: &'m ArgMatches,
) -> Result<FileLayer<'m>, CliError> {
    FileLayer::load(common.config.as_deref(), section, m)
}

fn apply_common(l: &FileLayer, c: &mut Common) -> CliResult {
    l.apply("seed", &mut c.seed)
}

fn apply_label(l: &FileLayer, a: &mut LabelArgs) -> CliResult {
    l.apply("alpha", &mut a.alpha)?;
    l.apply("epsilon", &mut a.epsilon)
}

fn apply_model(l: &FileLayer, a: &mut ModelArgs) -> CliResult {
    l.apply("kind", &mut a.kind)?;
    l.apply("hidden", &mut a.hidden)?;
    l.apply("encoder", &mut a.encoder)?;
    l.apply("ablation", &mut a.ablation)
}

fn apply_optim(l: &FileLayer, a: &mut OptimArgs) -> CliResult {
    l.apply("learning_rate", &mut a.learning_rate)?;
    l.apply("batch_size", &mut a.batch_size)?;
    l.apply("epochs", &mut a.epochs)?;
    l.apply("weight_decay", &mut a.weight_decay)?;
    l.apply("data_fraction", &mut a.data_fraction)?;
    l.apply("hard_labels", &mut a.hard_labels)
}

fn dispo_config(label: &LabelArgs, hard: bool) -> Result<DispoConfig, CliError> {
    let cfg = DispoConfig {
        alpha: label.alpha,
        epsilon: label.epsilon,
        hard_label_mode: hard,
    };
    cfg.validate().map_err(CliError::usage)?;
    Ok(cfg)
}

fn train_config(optim: &OptimArgs, seed: u64) -> Result<TrainConfig, CliError> {
    let cfg = TrainConfig {
        learning_rate: optim.learning_rate,
        batch_size: optim.batch_size,
        epochs: optim.epochs,
        seed,
        weight_decay: optim.weight_decay,
        data_fraction: optim.data_fraction,
        ..TrainConfig::default()
    };
    cfg.validate().map_err(CliError::usage)?;
    Ok(cfg)
}

fn thresholds(values: Vec<f64>) -> Result<ThresholdSet, CliError> {
    ThresholdSet::new(values).map_err(CliError::usage)
}

fn initial_model(a: &ModelArgs, dataset: &Dataset, seed: u64) -> Result<RouterModel, CliError> {
    let encoder = match (a.encoder, dataset.embedding_dim) {
        (EncoderArg::Context, _) | (EncoderArg::Auto, None) => EncoderSpec::Context {
            ablation: a.ablation,
        },
        (EncoderArg::Embedding, Some(dim)) => EncoderSpec::Embedding { dim },
        (EncoderArg::Concat | EncoderArg::Auto, Some(dim)) => EncoderSpec::Concat {
            embedding_dim: dim,
            ablation: a.ablation,
        },
        (EncoderArg::Embedding | EncoderArg::Concat, None) => {
            return Err(Error::invalid("encoder", "the dataset has no embeddings").into())
        }
    };
    match a.kind {
        KindArg::Linear => Ok(RouterModel::linear(encoder)),
        KindArg::Mlp if a.hidden == 0 => Err(CliError::usage("--hidden must be at least 1")),
        KindArg::Mlp => Ok(RouterModel::mlp(encoder, a.hidden, seed)),
    }
}

fn build(mut a: BuildArgs, m: &ArgMatches, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let l = layer(&a.common, "build", m)?;
    apply_common(&l, &mut a.common)?;
    apply_label(&l, &mut a.label)?;
    let dispo = dispo_config(&a.label, false)?;

    let built = build_dataset(read_raw(&a.input)?, dispo.epsilon, dispo.alpha)?;
    for d in &built.summary.diagnostics {
        let id =
            d.id.as_deref()
                .map(|i| format!(" ({i})"))
                .unwrap_or_default();
        let _ = writeln!(err, "line {}{id}: {}", d.line, d.message);
    }
    write_labeled(&a.output, built.embedding_dim, &built.instances)?;
    let s = &built.summary;
    say(
        out,
        format_args!("{} instances, {} skipped", s.built, s.skipped),
    )?;
    say(out, format_args!("skipped: {}", s.skipped))?;
    say(
        out,
        format_args!("label balance: {:.4} prefer generation", s.label_balance),
    )
}

fn synth(mut a: SynthArgs, m: &ArgMatches, out: &mut dyn Write) -> CliResult {
    let l = layer(&a.common, "synth", m)?;
    apply_common(&l, &mut a.common)?;
    l.apply("n", &mut a.n)?;
    l.apply("dim", &mut a.dim)?;
    l.apply("signal_strength", &mut a.signal_strength)?;
    l.apply("retrieval_error_scale", &mut a.retrieval_error_scale)?;
    l.apply("generation_error_scale", &mut a.generation_error_scale)?;
    l.apply("error_spread", &mut a.error_spread)?;
    l.apply("candidates", &mut a.candidates)?;
    l.apply("near_tie_fraction", &mut a.near_tie_fraction)?;
    let cfg = SynthConfig {
        n: a.n,
        seed: a.common.seed,
        dim: a.dim,
        signal_strength: a.signal_strength,
        retrieval_error_scale: a.retrieval_error_scale,
        generation_error_scale: a.generation_error_scale,
        error_spread: a.error_spread,
        candidates: a.candidates,
        near_tie_fraction: a.near_tie_fraction,
    };
    cfg.validate().map_err(CliError::usage)?;
    let dataset = synthesize(&cfg)?;
    write_jsonl(&a.output, &dataset)?;
    say(
        out,
        format_args!("wrote {} records to {}", dataset.len(), a.output.display()),
    )
}

fn train_cmd(mut a: TrainArgs, m: &ArgMatches, out: &mut dyn Write) -> CliResult {
    let l = layer(&a.common, "train", m)?;
    apply_common(&l, &mut a.common)?;
    apply_label(&l, &mut a.label)?;
    apply_model(&l, &mut a.model_args)?;
    apply_optim(&l, &mut a.optim)?;
    let dispo = dispo_config(&a.label, a.optim.hard_labels)?;
    let cfg = train_config(&a.optim, a.common.seed)?;

    let dataset = read_jsonl(&a.data)?;
    let init = initial_model(&a.model_args, &dataset, a.common.seed)?;
    let instances = dataset.instances(dispo.epsilon, dispo.alpha)?;
    let outcome = train(&instances, &cfg, &dispo, init)?;
    save_model(&a.model, &outcome.model)?;
    for (i, loss) in outcome.epoch_losses.iter().enumerate() {
        say(out, format_args!("epoch {}: loss {loss:.6}", i + 1))?;
    }
    say(
        out,
        format_args!(
            "trained {} parameters on {} instances; model written to {}",
            outcome.model.num_params(),
            instances.len(),
            a.model.display()
        ),
    )
}

fn route(mut a: RouteArgs, m: &ArgMatches, out: &mut dyn Write) -> CliResult {
    let l = layer(&a.common, "route", m)?;
    apply_common(&l, &mut a.common)?;
    let model = load_model(&a.model)?;
    let dataset = read_jsonl(&a.data)?;
    let mut text = String::new();
    let mut to_generation = 0usize;
    for record in &dataset.records {
        let r = score(record, &model)?;
        let choice = decide(r)?;
        let prediction = match choice {
            ParadigmChoice::Generation => {
                to_generation += 1;
                record.pred_generation
            }
            ParadigmChoice::Retrieval => record.pred_retrieval,
        };
        let line = json!({
            "id": record.id,
            "score": r,
            "choice": choice,
            "prediction": prediction,
        });
        text.push_str(&line.to_string());
        text.push('\n');
    }
    write_file(&a.output, &text)?;
    say(
        out,
        format_args!(
            "routed {} records: {} generation, {} retrieval",
            dataset.len(),
            to_generation,
            dataset.len() - to_generation
        ),
    )
}

fn eval(mut a: EvalArgs, m: &ArgMatches, out: &mut dyn Write) -> CliResult {
    let l = layer(&a.common, "eval", m)?;
    apply_common(&l, &mut a.common)?;
    l.apply("policies", &mut a.policies)?;
    l.apply("thresholds", &mut a.thresholds)?;
    let ts = thresholds(a.thresholds)?;
    let wanted = if a.policies.is_empty() {
        let mut all = vec![PolicyArg::Retrieval, PolicyArg::Generation];
        if a.model.is_some() {
            all.push(PolicyArg::Router);
        }
        all.push(PolicyArg::Oracle);
        all
    } else {
        a.policies
    };
    if wanted.contains(&PolicyArg::Router) && a.model.is_none() {
        return Err(CliError::usage("the router policy needs --model"));
    }

    let dataset = read_jsonl(&a.data)?;
    let mut policies = Vec::with_capacity(wanted.len());
    for p in wanted {
        policies.push(match p {
            PolicyArg::Retrieval => Policy::PureRetrieval,
            PolicyArg::Generation => Policy::PureGeneration,
            PolicyArg::Oracle => Policy::Oracle,
            PolicyArg::Router => {
                Policy::Router(load_model(a.model.as_deref().expect("checked above"))?)
            }
        });
    }
    let report = evaluate(&dataset.records, &policies, &ts)?;
    if let Some(path) = &a.json {
        write_file(path, &report.to_json())?;
    }
    write!(out, "{}", report.to_table()).map_err(|e| CliError::from(Error::io("<stdout>", e)))
}

fn sweep(mut a: SweepArgs, m: &ArgMatches, out: &mut dyn Write) -> CliResult {
    let l = layer(&a.common, "sweep", m)?;
    apply_common(&l, &mut a.common)?;
    apply_label(&l, &mut a.label)?;
    apply_model(&l, &mut a.model_args)?;
    apply_optim(&l, &mut a.optim)?;
    l.apply("alphas", &mut a.alphas)?;
    l.apply("fractions", &mut a.fractions)?;
    l.apply("holdout", &mut a.holdout)?;
    l.apply("thresholds", &mut a.thresholds)?;
    let dispo = dispo_config(&a.label, a.optim.hard_labels)?;
    let train_cfg = train_config(&a.optim, a.common.seed)?;
    let ts = thresholds(a.thresholds)?;
    if !(a.holdout > 0.0 && a.holdout < 1.0) {
        return Err(CliError::usage("--holdout must lie in (0, 1)"));
    }
    let by_fraction = !a.fractions.is_empty();
    let (name, values) = if by_fraction {
        ("data_fraction", &a.fractions)
    } else {
        ("alpha", &a.alphas)
    };
    if values.is_empty() {
        return Err(CliError::usage("nothing to sweep"));
    }

    let dataset = read_jsonl(&a.data)?;
    let init = initial_model(&a.model_args, &dataset, a.common.seed)?;
    let cfg = SweepConfig {
        train: train_cfg,
        dispo,
        thresholds: ts,
        holdout_fraction: a.holdout,
        split_seed: a.common.seed,
        init,
    };
    let rows = if by_fraction {
        sweep_fraction(&dataset, values, &cfg)?
    } else {
        sweep_alpha(&dataset, values, &cfg)?
    };

    if let Some(path) = &a.csv {
        write_file(path, &sweep_csv(&rows, name))?;
    }
    if let Some(path) = &a.json {
        let text = serde_json::to_string_pretty(&rows).expect("sweep rows serialize");
        write_file(path, &(text + "\n"))?;
    }
    say(out, format_args!("{name:>13}  routing%  geo%  oracle geo%"))?;
    for row in &rows {
        let router = row.report.row("router");
        let oracle = row.report.row("oracle");
        let routing = router
            .and_then(|r| r.routing.average)
            .map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"));
        let geo = router.map_or(f64::NAN, |r| r.geolocalization.average);
        let best = oracle.map_or(f64::NAN, |r| r.geolocalization.average);
        say(
            out,
            format_args!("{:>13}  {routing:>8}  {geo:.2}  {best:.2}", row.value),
        )?;
    }
    Ok(())
}
