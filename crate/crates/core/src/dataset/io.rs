//! Manifest and image-file ingestion.
//!
//! The manifest is a CSV file with the header
//! `file,label,experiment,velocity_m_per_min,tonal_value_pct,raster_lines_per_cm,esa`.
//! Images are PNG files (8- or 16-bit, gray or color); color is reduced to
//! luma with weights 0.299/0.587/0.114.

use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage, ImageReader, Luma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DatasetError, ImageMeta, LabeledImage, PatternDataset, PatternImage, Result};
use crate::class::PatternClass;

pub const MANIFEST_HEADER: [&str; 7] = [
    "file",
    "label",
    "experiment",
    "velocity_m_per_min",
    "tonal_value_pct",
    "raster_lines_per_cm",
    "esa",
];

/// One manifest line. `label` may be empty for unlabeled images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub file: String,
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub experiment: String,
    #[serde(default)]
    pub velocity_m_per_min: f64,
    #[serde(default)]
    pub tonal_value_pct: f64,
    #[serde(default)]
    pub raster_lines_per_cm: f64,
    #[serde(default, deserialize_with = "parse_flag", serialize_with = "write_flag")]
    pub esa: bool,
}

fn parse_flag<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<bool, D::Error> {
    let s = String::deserialize(d)?;
    match s.trim().to_ascii_lowercase().as_str() {
        "" | "0" | "false" | "off" | "no" => Ok(false),
        "1" | "true" | "on" | "yes" => Ok(true),
        other => Err(serde::de::Error::custom(format!("invalid esa flag {other:?}"))),
    }
}

fn write_flag<S: serde::Serializer>(v: &bool, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(if *v { "1" } else { "0" })
}

impl ManifestRow {
    pub fn meta(&self) -> ImageMeta {
        ImageMeta {
            experiment: self.experiment.clone(),
            velocity: self.velocity_m_per_min,
            tonal_value: self.tonal_value_pct,
            raster_frequency: self.raster_lines_per_cm,
            esa: self.esa,
        }
    }

    /// `None` for an empty label cell.
    pub fn parse_label(&self, row: usize) -> Result<Option<PatternClass>> {
        if self.label.trim().is_empty() {
            return Ok(None);
        }
        self.label
            .parse()
            .map(Some)
            .map_err(|source| DatasetError::UnknownLabel { row, source })
    }
}

/// Row numbers in errors are 1-based data rows (the header is row 0).
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| DatasetError::Manifest {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    if !headers.iter().any(|h| h == "file") {
        return Err(DatasetError::Manifest {
            row: 0,
            message: format!("header must contain a `file` column, got {:?}", headers.iter().collect::<Vec<_>>()),
        });
    }
    reader
        .deserialize()
        .enumerate()
        .map(|(i, rec)| {
            rec.map_err(|e| DatasetError::Manifest {
                row: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Decodes one image file into `[0, 1]` gray levels.
pub fn load_image(path: &Path) -> std::result::Result<PatternImage, String> {
    let img = ImageReader::open(path)
        .map_err(|e| e.to_string())?
        .with_guessed_format()
        .map_err(|e| e.to_string())?
        .decode()
        .map_err(|e| e.to_string())?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w != h {
        return Err(format!("image is {w}x{h}, not square"));
    }
    let pixels: Vec<f64> = match &img {
        DynamicImage::ImageLuma8(g) => g.as_raw().iter().map(|&p| p as f64 / 255.0).collect(),
        DynamicImage::ImageLumaA8(_) => img.to_luma8().as_raw().iter().map(|&p| p as f64 / 255.0).collect(),
        DynamicImage::ImageLuma16(g) => g.as_raw().iter().map(|&p| p as f64 / 65535.0).collect(),
        DynamicImage::ImageLumaA16(_) => img.to_luma16().as_raw().iter().map(|&p| p as f64 / 65535.0).collect(),
        _ => img
            .to_rgb8()
            .pixels()
            .map(|p| {
                let [r, g, b] = p.0;
                (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64) / 255.0
            })
            .map(|v| v.clamp(0.0, 1.0))
            .collect(),
    };
    PatternImage::new(w, pixels).map_err(|e| e.to_string())
}

/// An ingested image whose label may be unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageEntry {
    pub name: String,
    pub image: PatternImage,
    pub label: Option<PatternClass>,
    pub meta: ImageMeta,
}

/// Resolves and decodes every manifest row relative to `image_dir`.
pub fn load_entries(image_dir: &Path, rows: &[ManifestRow]) -> Result<Vec<ImageEntry>> {
    let entries: Vec<ImageEntry> = rows
        .par_iter()
        .enumerate()
        .map(|(i, row)| {
            let row_no = i + 1;
            let label = row.parse_label(row_no)?;
            let path = image_dir.join(&row.file);
            if !path.is_file() {
                return Err(DatasetError::MissingFile { row: row_no, path });
            }
            let image = load_image(&path).map_err(|message| DatasetError::Decode {
                row: row_no,
                path: path.clone(),
                message,
            })?;
            Ok(ImageEntry {
                name: row.file.clone(),
                image,
                label,
                meta: row.meta(),
            })
        })
        .collect::<Result<_>>()?;

    if let Some(first) = entries.first() {
        let side = first.image.side();
        if let Some((i, e)) = entries.iter().enumerate().find(|(_, e)| e.image.side() != side) {
            return Err(DatasetError::ImageSize {
                row: i + 1,
                path: image_dir.join(&e.name),
                width: e.image.side() as u32,
                height: e.image.side() as u32,
                side,
            });
        }
    }
    Ok(entries)
}

/// Loads a fully labeled dataset.
pub fn load_dataset(image_dir: &Path, manifest: &Path) -> Result<PatternDataset> {
    let rows = read_manifest(manifest)?;
    let entries = load_entries(image_dir, &rows)?;
    let images = entries
        .into_iter()
        .enumerate()
        .map(|(i, e)| {
            let label = e.label.ok_or(DatasetError::MissingLabel { row: i + 1 })?;
            Ok(LabeledImage {
                name: e.name,
                image: e.image,
                label,
                meta: e.meta,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    PatternDataset::new(images)
}

/// Every `.png` file in `dir`, sorted by file name, unlabeled and without metadata.
pub fn load_image_dir(dir: &Path) -> Result<Vec<ImageEntry>> {
    let read = fs::read_dir(dir).map_err(|source| DatasetError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut names: Vec<String> = read
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.to_ascii_lowercase().ends_with(".png"))
        .collect();
    names.sort();
    let rows: Vec<ManifestRow> = names
        .into_iter()
        .map(|file| ManifestRow {
            file,
            label: String::new(),
            experiment: String::new(),
            velocity_m_per_min: 0.0,
            tonal_value_pct: 0.0,
            raster_lines_per_cm: 0.0,
            esa: false,
        })
        .collect();
    load_entries(dir, &rows)
}

/// Writes an 8-bit grayscale PNG (values are rounded to the nearest level).
pub fn save_png(path: &Path, image: &PatternImage) -> Result<()> {
    let s = image.side() as u32;
    let buf = GrayImage::from_fn(s, s, |x, y| {
        Luma([(image.at(y as usize, x as usize) * 255.0).round() as u8])
    });
    buf.save(path).map_err(|e| DatasetError::Write {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Writes `ds` as PNG files plus `manifest.csv` into `dir`, in the format
/// [`load_dataset`] reads. Returns the manifest path.
pub fn write_dataset(ds: &PatternDataset, dir: &Path) -> Result<PathBuf> {
    let werr = |path: &Path, e: &dyn std::fmt::Display| DatasetError::Write {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    fs::create_dir_all(dir).map_err(|e| werr(dir, &e))?;
    ds.images()
        .par_iter()
        .try_for_each(|li| save_png(&dir.join(&li.name), &li.image))?;

    let manifest = dir.join("manifest.csv");
    let mut w = csv::Writer::from_path(&manifest).map_err(|e| werr(&manifest, &e))?;
    for li in ds.images() {
        let row = ManifestRow {
            file: li.name.clone(),
            label: li.label.to_string(),
            experiment: li.meta.experiment.clone(),
            velocity_m_per_min: li.meta.velocity,
            tonal_value_pct: li.meta.tonal_value,
            raster_lines_per_cm: li.meta.raster_frequency,
            esa: li.meta.esa,
        };
        w.serialize(row).map_err(|e| werr(&manifest, &e))?;
    }
    w.flush().map_err(|e| werr(&manifest, &e))?;
    Ok(manifest)
}
