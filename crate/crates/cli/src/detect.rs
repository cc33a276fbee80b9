// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::{Path, PathBuf};

use attrgraph_core::io::{load_dataset, DatasetEntry};
use attrgraph_core::report::Report;
use attrgraph_detector::eval::{evaluate, read_baseline};
use attrgraph_detector::split::{read_index, select_entries, split_dataset, write_split, Part, DEFAULT_CAP};
use attrgraph_detector::{examples_from_entries, DetectorModel, ModelConfig, TrainConfig};

use crate::args::{DataSelection, EvalArgs, SplitArgs, TrainArgs};
use crate::config::Settings;
use crate::error::{CliError, Result};
use crate::{emit, fmt_f64, header};

pub fn split(a: SplitArgs, settings: &mut Settings) -> Result<()> {
    let cap = settings.value("cap", a.cap, DEFAULT_CAP)?;
    settings.finish()?;
    let split = split_dataset(&a.dir, cap)?;
    let out = a.out.unwrap_or_else(|| a.dir.clone());
    for path in write_split(&split, &out)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn load_part(dir: &Path, index_dir: &Path, part: Part) -> Result<Vec<DatasetEntry>> {
    let names = read_index(index_dir.join(part.index_file_name()))?;
    Ok(select_entries(dir, &names)?)
}

/// Train and validation entries from index files, or from an in-memory split.
fn train_val(dir: &Path, data: &DataSelection, settings: &mut Settings) -> Result<(Vec<DatasetEntry>, Vec<DatasetEntry>)> {
    if let Some(index_dir) = &data.split {
        if data.cap.is_some() {
            return Err(CliError::Usage("--cap and --split are mutually exclusive".into()));
        }
        return Ok((load_part(dir, index_dir, Part::Train)?, load_part(dir, index_dir, Part::Val)?));
    }
    let cap = settings.value("cap", data.cap, DEFAULT_CAP)?;
    let split = split_dataset(dir, cap)?;
    let names = |p: Part| split.part(p).iter().map(|(n, _)| n.clone()).collect::<Vec<_>>();
    Ok((select_entries(dir, &names(Part::Train))?, select_entries(dir, &names(Part::Val))?))
}

fn log_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".log.csv");
    PathBuf::from(s)
}

pub fn train(a: TrainArgs, settings: &mut Settings) -> Result<()> {
    let d = TrainConfig::default();
    let model = ModelConfig {
        hidden: settings.value("hidden", a.hidden, d.model.hidden)?,
        layers: settings.value("layers", a.layers, d.model.layers)?,
        topology_width: settings.value("topology-width", a.topology_width, d.model.topology_width)?,
        dropout: settings.value("dropout", a.dropout, d.model.dropout)?,
    };
    let cfg = TrainConfig {
        model,
        epochs: settings.value("epochs", a.epochs, d.epochs)?,
        batch_size: settings.value("batch-size", a.batch_size, d.batch_size)?,
        learning_rate: settings.value("lr", a.lr, d.learning_rate)?,
        weight_decay: settings.value("weight-decay", a.weight_decay, d.weight_decay)?,
        seed: settings.value("seed", a.seed, d.seed)?,
        ..d
    };
    if cfg.model.hidden == 0 || cfg.batch_size == 0 {
        return Err(CliError::Usage("--hidden and --batch-size must be positive".into()));
    }
    if !(0.0..1.0).contains(&cfg.model.dropout) {
        return Err(CliError::Usage(format!("--dropout must lie in [0, 1), got {}", cfg.model.dropout)));
    }
    settings.record("beta1", cfg.beta1);
    settings.record("beta2", cfg.beta2);
    settings.record("epsilon", cfg.epsilon);
    settings.record("init", "uniform_fan_in");
    settings.record("nonlinearity", "tanh");
    settings.record("attention_heads", 1);
    let (train_entries, val_entries) = train_val(&a.dir, &a.data, settings)?;
    let mut h = header("train", Some(cfg.seed), settings)?;
    h.config.remove("seed");

    let train = examples_from_entries(&train_entries)?;
    let val = examples_from_entries(&val_entries)?;
    let (model, log) = attrgraph_detector::train(&train, &val, &cfg)?;
    model.save(&a.out)?;

    let mut r = Report::new(h, &["epoch", "train_loss", "train_accuracy", "val_loss", "val_accuracy", "selected"]);
    let selected = |e: usize| (e == log.best_epoch).to_string();
    r.push_row(vec![
        "0".into(),
        String::new(),
        String::new(),
        String::new(),
        fmt_f64(log.initial_val_accuracy),
        selected(0),
    ]);
    for e in &log.epochs {
        r.push_row(vec![
            e.epoch.to_string(),
            fmt_f64(e.train_loss),
            fmt_f64(e.train_accuracy),
            fmt_f64(e.val_loss),
            fmt_f64(e.val_accuracy),
            selected(e.epoch),
        ]);
    }
    emit(&r, Some(&a.log.unwrap_or_else(|| log_path(&a.out))))?;
    eprintln!(
        "kept epoch {} (validation accuracy {}); model written to {}",
        log.best_epoch,
        log.best_val_accuracy,
        a.out.display()
    );
    Ok(())
}

pub fn eval(a: EvalArgs, settings: &mut Settings) -> Result<()> {
    let entries = match &a.split {
        Some(index_dir) => {
            let part = match settings.value("part", a.part, "test".to_string())?.as_str() {
                "train" => Part::Train,
                "val" => Part::Val,
                "test" => Part::Test,
                other => return Err(CliError::Usage(format!("unknown part `{other}` (expected train, val or test)"))),
            };
            load_part(&a.dir, index_dir, part)?
        }
        None if a.part.is_some() => return Err(CliError::Usage("--part requires --split".into())),
        None => load_dataset(&a.dir)?,
    };
    settings.record("baseline", a.baseline.is_some());
    let h = header("eval", None, settings)?;
    let model = DetectorModel::load(&a.model)?;
    let baseline = a.baseline.as_deref().map(read_baseline).transpose()?;
    let examples = examples_from_entries(&entries)?;
    let ev = evaluate(&model, &examples, baseline.as_ref())?;

    if let Some(path) = &a.predictions {
        let mut r = Report::new(h.clone(), &["example_id", "label", "p_correct", "predicted"]);
        for p in &ev.predictions {
            r.push_row(vec![
                p.id.clone(),
                p.label.as_u8().to_string(),
                fmt_f64(p.p_correct),
                p.predicted.as_u8().to_string(),
            ]);
        }
        emit(&r, Some(path))?;
    }
    let mut r = Report::new(h, &["metric", "value"]);
    for (k, v) in ev.summary_rows() {
        r.push_row(vec![k, v]);
    }
    emit(&r, a.out.as_deref())
}
