use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use eigenpattern::classify::{load_model, save_model, ClassifierKind, PersistError, TrainedModel};
use eigenpattern::dataset::{
    load_dataset, load_entries, load_image_dir, read_manifest, save_png, write_dataset, ImageEntry,
};
use eigenpattern::linalg::{cumulative_energy, normalized_singular_values};
use eigenpattern::metrics::{accumulate, compute_metrics, format_report, reports_to_csv};
use eigenpattern::pipeline::{self, dataset_modes, fit_cycles, render_mode, sweep_to_csv};
use eigenpattern::regime::{build_regime_map, export_regime_map, BorderKind, RegimeFormat};
use eigenpattern::synth::{gen_dataset, gen_regime_grid};
use eigenpattern::PatternClass;
use serde_json::json;

use crate::error::{Category, Failure};
use crate::{DataArgs, FitArgs, ModesArgs, PredictArgs, RegimeArgs, ReportFormat, SweepArgs, SynthArgs};

fn write_file(path: &Path, body: impl AsRef<[u8]>) -> Result<(), Failure> {
    fs::write(path, body).map_err(|e| Failure::write(path, e))
}

fn load_labeled(a: &DataArgs) -> Result<eigenpattern::dataset::PatternDataset, Failure> {
    Ok(load_dataset(&a.data, &a.manifest_path())?)
}

fn open_model(path: &Path) -> Result<TrainedModel, Failure> {
    load_model(path).map_err(Failure::from)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn ingest(a: &DataArgs) -> Result<(), Failure> {
    let ds = load_labeled(a)?;
    let [ca, cb, cc] = ds.label_counts();
    println!(
        "{} images, {}x{} px, classes A {ca} / B {cb} / C {cc}, digest {}",
        ds.len(),
        ds.side(),
        ds.side(),
        ds.digest()
    );
    Ok(())
}

pub fn fit(a: &FitArgs) -> Result<(), Failure> {
    let cfg = a.run.resolve()?;
    let ds = load_labeled(&a.data)?;
    let out = fit_cycles(&ds, &cfg)?;
    save_model(&out.model, &a.out).map_err(|e| match e {
        PersistError::Io { path, source } => Failure::write(&path, source),
        other => other.into(),
    })?;

    let body = match a.format {
        ReportFormat::Csv => reports_to_csv(&out.reports, &out.summary),
        ReportFormat::Json => {
            let confusions: Vec<_> = out.confusions.iter().map(|c| *c.counts()).collect();
            let v = json!({
                "config": cfg,
                "dataset_digest": out.model.provenance().dataset_digest,
                "reports": out.reports,
                "confusions": confusions,
                "summary": out.summary,
            });
            serde_json::to_string_pretty(&v).expect("report serializes") + "\n"
        }
    };
    let ext = match a.format {
        ReportFormat::Csv => "csv",
        ReportFormat::Json => "json",
    };
    let report = a
        .report
        .clone()
        .unwrap_or_else(|| a.out.with_extension(format!("report.{ext}")));
    write_file(&report, body)?;

    let s = &out.summary;
    println!(
        "{} cycles: test error {:.2}% +- {:.2}, recall A {:.1}% B {:.1}% C {:.1}%",
        s.cycles, s.error.mean, s.error.std, s.recall_a.mean, s.recall_b.mean, s.recall_c.mean
    );
    println!("model: {}\nreport: {}", a.out.display(), report.display());
    Ok(())
}

/// `lo..hi` (inclusive) or `a,b,c`.
fn parse_ranks(s: &str) -> Result<Vec<usize>, Failure> {
    let bad = || Failure::validation(format!("invalid rank list {s:?} (use lo..hi or a,b,c)"));
    let ranks: Vec<usize> = if let Some((lo, hi)) = s.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        (lo..=hi).collect()
    } else {
        s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    if ranks.is_empty() {
        return Err(bad());
    }
    Ok(ranks)
}

pub fn sweep(a: &SweepArgs) -> Result<(), Failure> {
    let mut cfg = a.run.build()?;
    let ranks = parse_ranks(&a.ranks)?;
    // the single-rank setting is irrelevant to a sweep; keep it valid
    cfg.rank = cfg.rank.min(cfg.target_rank).max(1);
    cfg.validate()?;
    let classifiers = if a.classifiers.is_empty() {
        ClassifierKind::ALL.to_vec()
    } else {
        a.classifiers.clone()
    };
    let ds = load_labeled(&a.data)?;
    let rows = pipeline::sweep(&ds, &cfg, &ranks, &classifiers)?;
    let body = match a.format {
        ReportFormat::Csv => sweep_to_csv(&rows),
        ReportFormat::Json => serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n",
    };
    write_file(&a.out, body)?;
    println!("{} rows ({} ranks x {} classifiers): {}", rows.len(), ranks.len(), classifiers.len(), a.out.display());
    Ok(())
}

pub fn modes(a: &ModesArgs) -> Result<(), Failure> {
    let cfg = a.run.resolve()?;
    if a.count == 0 || a.count > cfg.target_rank {
        return Err(Failure::validation(format!(
            "mode count {} outside 1..={} (the target rank)",
            a.count, cfg.target_rank
        )));
    }
    let ds = load_labeled(&a.data)?;
    let fac = dataset_modes(&ds, &cfg)?;
    fs::create_dir_all(&a.out).map_err(|e| Failure::write(&a.out, e))?;
    for j in 0..a.count {
        let img = render_mode(fac.u().column(j), ds.side(), cfg.variant);
        let path = a.out.join(format!("mode_{:02}.png", j + 1));
        save_png(&path, &img).map_err(|e| Failure::write(&path, e))?;
    }

    let sigma = fac.sigma();
    let normalized = normalized_singular_values(sigma)?;
    let energy = cumulative_energy(sigma)?;
    let mut s = String::from("mode,sigma,normalized,cumulative_energy_pct\n");
    for i in 0..sigma.len() {
        let _ = writeln!(s, "{},{},{},{}", i + 1, sigma[i], normalized[i], energy[i]);
    }
    write_file(&a.out.join("spectrum.csv"), s)?;
    println!("{} modes ({} variant) written to {}", a.count, cfg.variant, a.out.display());
    Ok(())
}

pub fn predict(a: &PredictArgs) -> Result<(), Failure> {
    let model = open_model(&a.model)?;
    let entries: Vec<ImageEntry> = match &a.manifest {
        Some(m) => load_entries(&a.data, &read_manifest(m)?)?,
        None => load_image_dir(&a.data)?,
    };
    if entries.is_empty() {
        return Err(Failure::new(Category::Ingestion, "no images to classify"));
    }
    let images: Vec<_> = entries.iter().map(|e| &e.image).collect();
    let preds = model.predict_images(&images)?;

    let labeled = entries.iter().any(|e| e.label.is_some());
    let mut s = String::from(if labeled { "file,label,predicted_class\n" } else { "file,predicted_class\n" });
    for (e, p) in entries.iter().zip(&preds) {
        if labeled {
            let l = e.label.map_or(String::new(), |l| l.to_string());
            let _ = writeln!(s, "{},{l},{p}", csv_field(&e.name));
        } else {
            let _ = writeln!(s, "{},{p}", csv_field(&e.name));
        }
    }
    write_file(&a.out, s)?;

    if let Some(path) = &a.confusion {
        let truth: Vec<PatternClass> = entries
            .iter()
            .map(|e| e.label)
            .collect::<Option<_>>()
            .ok_or_else(|| Failure::validation("--confusion needs a label for every image"))?;
        let cm = accumulate(&truth, &preds)?;
        let mut body = cm.to_csv();
        match compute_metrics(&cm) {
            Ok(r) => {
                let _ = write!(
                    body,
                    "\naccuracy,error,recall_A,recall_B,recall_C\n{},{},{},{},{}\n",
                    r.accuracy, r.error, r.recall_a, r.recall_b, r.recall_c
                );
                println!("{}", format_report(&r));
            }
            Err(e) => log::warn!("metrics unavailable: {e}"),
        }
        write_file(path, body)?;
    }
    println!("{} predictions: {}", preds.len(), a.out.display());
    Ok(())
}

pub fn regime_map(a: &RegimeArgs) -> Result<(), Failure> {
    if a.csv.is_none() && a.svg.is_none() {
        return Err(Failure::validation("give --csv and/or --svg"));
    }
    let model = open_model(&a.model)?;
    let mut rows = read_manifest(&a.data.manifest_path())?;
    if let Some(exp) = &a.experiment {
        rows.retain(|r| &r.experiment == exp);
        if rows.is_empty() {
            return Err(Failure::new(
                Category::Ingestion,
                format!("no manifest rows for experiment {exp:?}"),
            ));
        }
    }
    let entries = load_entries(&a.data.data, &rows)?;
    let images: Vec<_> = entries.iter().map(|e| &e.image).collect();
    let preds = model.predict_images(&images)?;
    let pairs: Vec<_> = entries.iter().zip(preds).map(|(e, p)| (e.meta.clone(), p)).collect();
    let map = build_regime_map(&pairs)?;
    if let Some(p) = &a.csv {
        export_regime_map(&map, p, RegimeFormat::Csv)?;
    }
    if let Some(p) = &a.svg {
        export_regime_map(&map, p, RegimeFormat::Svg)?;
    }
    if !map.borders_ordered() {
        log::warn!("lower border lies above the upper border at some velocity");
    }
    let fmt = |kind| {
        map.polyline(kind)
            .iter()
            .map(|(v, t)| format!("{v}:{t}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    println!(
        "{}: {} x {} cells\nlower border {}\nupper border {}",
        map.experiment(),
        map.velocities().len(),
        map.tonal_values().len(),
        fmt(BorderKind::Lower),
        fmt(BorderKind::Upper)
    );
    Ok(())
}

pub fn synth(a: &SynthArgs) -> Result<(), Failure> {
    let ds = match a.grid {
        Some(per_cell) => gen_regime_grid(per_cell, a.side, a.seed)?,
        None => gen_dataset(a.per_class, a.side, a.seed)?,
    };
    let manifest = write_dataset(&ds, &a.out)?;
    println!("{} images written; manifest {}", ds.len(), manifest.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_lists() {
        assert_eq!(parse_ranks("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_ranks("1..=3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_ranks("2, 5,7").unwrap(), vec![2, 5, 7]);
        assert!(parse_ranks("5..1").is_err());
        assert!(parse_ranks("x").is_err());
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("a.png"), "a.png");
        assert_eq!(csv_field("a,b\".png"), "\"a,b\"\".png\"");
    }
}
