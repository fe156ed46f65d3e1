use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tmdc_core::booleanize::{booleanize_text, tokenize, Preprocessing};
use tmdc_core::drop_clause::write_timing_csv;
use tmdc_core::eval::{
    corrupt_dataset, evaluate, load_synonyms, perturb_documents, robustness_report,
    write_robustness_csv, ImageDims, Metrics,
};
use tmdc_core::interpret::{export_clauses, heatmap, word_frequency_map};
use tmdc_core::persist::{load_model, save_model};
use tmdc_core::{Dataset, EpochReport, InputShape, MulticlassModel, PatchGeometry};

use crate::config::RunConfig;
use crate::data::{load, training_preprocessing, DataError, Prepared};

const DEFAULT_OUT: &str = "tmdc-out";
const HEATMAP_SCALE: u32 = 8;

fn require<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    p.as_deref().ok_or_else(|| anyhow!("missing {flag}"))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_echo(cfg: &RunConfig, out: &Path, command: &str) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut f = create(&out.join("config.txt"))?;
    writeln!(f, "# tmdc {command}")?;
    f.write_all(cfg.echo().as_bytes())?;
    f.flush()?;
    Ok(())
}

fn open_model(cfg: &RunConfig) -> Result<MulticlassModel> {
    let path = require(&cfg.model, "--model")?;
    load_model(path).map_err(|e| {
        DataError {
            path: path.to_path_buf(),
            reason: e.to_string(),
        }
        .into()
    })
}

fn load_for_model(cfg: &RunConfig, model: &MulticlassModel) -> Result<Prepared> {
    let path = require(&cfg.data, "--data")?;
    load(cfg, path, cfg.labels.as_deref(), model.preprocessing(), Some(model.classes()))
}

/// Accepts a class name or, failing that, a class index.
fn class_index(model: &MulticlassModel, class: &str) -> Result<usize> {
    if let Some(i) = model.classes().iter().position(|c| c == class) {
        return Ok(i);
    }
    match class.parse::<usize>() {
        Ok(i) if i < model.classes().len() => Ok(i),
        _ => bail!(
            "unknown class `{class}` (classes: {})",
            model.classes().join(", ")
        ),
    }
}

fn shape_dims(shape: &InputShape) -> Option<ImageDims> {
    match shape {
        InputShape::Conv(g) => Some(ImageDims {
            rows: g.rows,
            cols: g.cols,
            channels: g.channels,
        }),
        InputShape::Flat { .. } => None,
    }
}

fn write_epochs(reports: &[EpochReport], path: &Path) -> Result<()> {
    let mut f = create(path)?;
    writeln!(f, "epoch,active_fraction,seconds,test_accuracy")?;
    for r in reports {
        let acc = r.validation_accuracy.map(|a| format!("{a:.6}")).unwrap_or_default();
        writeln!(f, "{},{:.6},{:.6},{acc}", r.epoch, r.active_fraction, r.seconds)?;
    }
    f.flush()?;
    Ok(())
}

fn print_metrics(label: &str, m: &Metrics, classes: &[String]) {
    println!(
        "{label} accuracy {:.6} ({}/{})",
        m.accuracy,
        m.correct(),
        m.samples
    );
    if classes.len() > 2 {
        for (c, acc) in classes.iter().zip(&m.per_class) {
            if let Some(a) = acc {
                println!("  class {c}: {a:.6}");
            }
        }
    }
}

pub fn train(cfg: &RunConfig) -> Result<()> {
    let data_path = require(&cfg.data, "--data")?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));

    let pre = training_preprocessing(cfg, data_path)?;
    let train = load(cfg, data_path, cfg.labels.as_deref(), &pre, None)?;
    let classes = train.data.classes.clone();
    let test = match &cfg.test {
        Some(p) => Some(load(cfg, p, cfg.test_labels.as_deref(), &pre, Some(&classes))?),
        None => None,
    };
    let width = train.data.width().unwrap_or(0);
    let shape = match cfg.patch {
        Some(window) => {
            let d = train
                .dims
                .ok_or_else(|| anyhow!("--patch needs image dimensions (--rows and --cols)"))?;
            let g = PatchGeometry {
                rows: d.rows,
                cols: d.cols,
                channels: d.channels,
                window,
                step: cfg.step,
                coordinates: cfg.coords,
            };
            if g.image_bits() != width {
                bail!(
                    "samples have {width} features but a {}x{}x{} image has {}",
                    d.rows,
                    d.cols,
                    d.channels,
                    g.image_bits()
                );
            }
            InputShape::Conv(g)
        }
        None => InputShape::Flat { features: width },
    };
    let mut model = MulticlassModel::new(cfg.params.clone(), shape, classes, cfg.one_vs_rest)?;
    model.set_preprocessing(pre);

    write_echo(cfg, &out, "train")?;
    let reports = model.fit(&train.data, test.as_ref().map(|t| &t.data))?;

    save_model(&model, out.join("model.tmdc"))?;
    write_epochs(&reports, &out.join("metrics.csv"))?;
    let mut timing = create(&out.join("timing.csv"))?;
    write_timing_csv(&reports, &mut timing)?;
    timing.flush()?;

    let m = evaluate(&model, &train.data)?;
    print_metrics("train", &m, model.classes());
    if let Some(t) = &test {
        print_metrics("test", &evaluate(&model, &t.data)?, model.classes());
    }
    println!("model written to {}", out.join("model.tmdc").display());
    Ok(())
}

pub fn eval(cfg: &RunConfig) -> Result<()> {
    let model = open_model(cfg)?;
    let p = load_for_model(cfg, &model)?;
    let m = evaluate(&model, &p.data)?;
    print_metrics("eval", &m, model.classes());
    if let Some(out) = &cfg.out {
        write_echo(cfg, out, "eval")?;
        let mut f = create(&out.join("eval.csv"))?;
        writeln!(f, "metric,value")?;
        writeln!(f, "samples,{}", m.samples)?;
        writeln!(f, "accuracy,{:.6}", m.accuracy)?;
        writeln!(f, "mean_inference_seconds,{:.9}", m.mean_inference_seconds)?;
        for (c, acc) in model.classes().iter().zip(&m.per_class) {
            let acc = acc.map(|a| format!("{a:.6}")).unwrap_or_default();
            writeln!(f, "accuracy_{c},{acc}")?;
        }
        f.flush()?;
        let mut f = create(&out.join("confusion.csv"))?;
        writeln!(f, "true\\pred,{}", model.classes().join(","))?;
        for (c, row) in model.classes().iter().zip(&m.confusion) {
            let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
            writeln!(f, "{c},{}", cells.join(","))?;
        }
        f.flush()?;
    }
    Ok(())
}

pub fn interpret(cfg: &RunConfig) -> Result<()> {
    let model = open_model(cfg)?;
    let classes: Vec<usize> = match &cfg.class {
        Some(c) => vec![class_index(&model, c)?],
        None => (0..model.classes().len()).collect(),
    };
    let mut text = String::new();
    let mut reports = Vec::new();
    for &c in &classes {
        let r = export_clauses(&model, c, cfg.k)?;
        text.push_str(&format!("class {}\n", model.classes()[c]));
        text.push_str(&r.to_text());
        reports.push(r);
    }
    let json = serde_json::to_string_pretty(&reports)?;
    if let Some(out) = &cfg.out {
        write_echo(cfg, out, "interpret")?;
        fs::write(out.join("clauses.txt"), &text)?;
        fs::write(out.join("clauses.json"), &json)?;
    } else {
        print!("{text}");
    }

    if cfg.data.is_none() {
        return Ok(());
    }
    let p = load_for_model(cfg, &model)?;
    let sample = p.data.samples.get(cfg.index).ok_or_else(|| {
        anyhow!("sample index {} outside a set of {}", cfg.index, p.data.len())
    })?;
    match model.shape() {
        InputShape::Conv(_) => {
            let class = match &cfg.class {
                Some(c) => class_index(&model, c)?,
                None => model.classify(sample)?,
            };
            let h = heatmap(&model, sample, class, cfg.k)?;
            match &cfg.out {
                Some(out) => {
                    h.save_png(out.join("heatmap.png"), HEATMAP_SCALE)?;
                    fs::write(out.join("heatmap.csv"), h.to_csv())?;
                }
                None => print!("{}", h.to_csv()),
            }
        }
        InputShape::Flat { .. } => {
            let f = word_frequency_map(&model, sample, cfg.top)?;
            let mut report = f.ranked_list();
            if let (Some(docs), Preprocessing::BagOfWords { stem, .. }) = (&p.text, model.preprocessing()) {
                let tokens = tokenize(&docs.documents[cfg.index], *stem);
                report.push_str(&f.annotate(&tokens, *stem));
                report.push('\n');
            }
            match &cfg.out {
                Some(out) => {
                    fs::write(out.join("frequency.txt"), &report)?;
                    fs::write(out.join("frequency.json"), f.to_json()?)?;
                }
                None => print!("{report}"),
            }
        }
    }
    Ok(())
}

pub fn robust(cfg: &RunConfig) -> Result<()> {
    let model = open_model(cfg)?;
    let p = load_for_model(cfg, &model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.params.seed);

    let corrupted: Vec<Dataset> = if let Some(docs) = &p.text {
        let path = require(&cfg.synonyms, "--synonyms (text robustness)")?;
        let map = load_synonyms(path).map_err(|e| DataError {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let Preprocessing::BagOfWords { vocabulary, stem } = model.preprocessing() else {
            bail!("text data needs a bag-of-words model");
        };
        (0..cfg.draws)
            .map(|_| booleanize_text(&perturb_documents(docs, &map, &mut rng), vocabulary, *stem))
            .collect::<tmdc_core::Result<_>>()?
    } else {
        let spec = cfg.corruption_spec();
        let dims = p
            .dims
            .or_else(|| shape_dims(model.shape()))
            .or_else(|| {
                // with nothing to apply the geometry is never consulted
                spec.kinds.is_empty().then(|| ImageDims {
                    rows: 1,
                    cols: p.data.width().unwrap_or(0),
                    channels: 1,
                })
            })
            .ok_or_else(|| anyhow!("corruptions need image dimensions (--rows and --cols)"))?;
        if p.data.width() != Some(dims.bits()) && !p.data.is_empty() {
            bail!(
                "samples have {} features but a {}x{}x{} image has {}",
                p.data.width().unwrap_or(0),
                dims.rows,
                dims.cols,
                dims.channels,
                dims.bits()
            );
        }
        (0..cfg.draws)
            .map(|_| corrupt_dataset(&p.data, dims, &spec, &mut rng))
            .collect::<tmdc_core::Result<_>>()?
    };

    let name = cfg
        .model
        .as_deref()
        .and_then(Path::file_stem)
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into());
    let row = robustness_report(&name, &model, &p.data, &corrupted)?;
    let mut csv = Vec::new();
    write_robustness_csv(std::slice::from_ref(&row), &mut csv)?;
    print!("{}", String::from_utf8_lossy(&csv));
    if let Some(out) = &cfg.out {
        write_echo(cfg, out, "robust")?;
        fs::write(out.join("robustness.csv"), &csv)?;
    }
    Ok(())
}
