//! Regime maps: majority predicted class over a (printing velocity × tonal
//! value) grid, with the A|B and B|C borders per velocity.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::class::PatternClass;
use crate::dataset::ImageMeta;

#[derive(Debug, Error)]
pub enum RegimeError {
    #[error("no predictions")]
    Empty,
    #[error("predictions mix experiments or raster frequencies ({0})")]
    MixedExperiment(String),
    #[error("missing cells (velocity, tonal value): {}", format_coords(.0))]
    MissingCells(Vec<(f64, f64)>),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("regime csv line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn format_coords(c: &[(f64, f64)]) -> String {
    c.iter().map(|(v, t)| format!("({v}, {t})")).collect::<Vec<_>>().join(", ")
}

pub type Result<T> = std::result::Result<T, RegimeError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BorderKind {
    Lower,
    Upper,
}

impl BorderKind {
    fn name(self) -> &'static str {
        match self {
            BorderKind::Lower => "lower",
            BorderKind::Upper => "upper",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeCell {
    pub velocity: f64,
    pub tonal_value: f64,
    pub counts: [u64; 3],
    pub majority: PatternClass,
}

/// Argmax of the counts; any tie for the maximum is transitional (B).
pub fn majority_of(counts: [u64; 3]) -> PatternClass {
    let max = *counts.iter().max().expect("three counts");
    let winners: Vec<usize> = (0..3).filter(|&i| counts[i] == max).collect();
    match winners.as_slice() {
        [only] => PatternClass::ALL[*only],
        _ => PatternClass::Mixed,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeMap {
    experiment: String,
    raster_frequency: f64,
    velocities: Vec<f64>,
    tonal_values: Vec<f64>,
    /// velocity-major, tonal values ascending within a velocity
    cells: Vec<RegimeCell>,
    lower: Vec<Option<f64>>,
    upper: Vec<Option<f64>>,
}

fn sorted_distinct(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn position(grid: &[f64], x: f64) -> usize {
    grid.binary_search_by(|g| g.total_cmp(&x)).expect("value on grid")
}

/// Aggregates per-image predictions into a map and extracts its borders.
pub fn build_regime_map(predictions: &[(ImageMeta, PatternClass)]) -> Result<RegimeMap> {
    let (first, _) = predictions.first().ok_or(RegimeError::Empty)?;
    for (m, _) in predictions {
        if m.experiment != first.experiment || m.raster_frequency != first.raster_frequency {
            return Err(RegimeError::MixedExperiment(format!(
                "{} @ {} vs {} @ {}",
                first.experiment, first.raster_frequency, m.experiment, m.raster_frequency
            )));
        }
    }
    let velocities = sorted_distinct(predictions.iter().map(|(m, _)| m.velocity).collect());
    let tonal_values = sorted_distinct(predictions.iter().map(|(m, _)| m.tonal_value).collect());
    let nt = tonal_values.len();
    let mut counts = vec![[0u64; 3]; velocities.len() * nt];
    for (m, c) in predictions {
        let cell = position(&velocities, m.velocity) * nt + position(&tonal_values, m.tonal_value);
        counts[cell][c.index()] += 1;
    }

    let mut missing = Vec::new();
    let mut cells = Vec::with_capacity(counts.len());
    for (i, &v) in velocities.iter().enumerate() {
        for (j, &t) in tonal_values.iter().enumerate() {
            let c = counts[i * nt + j];
            if c.iter().sum::<u64>() == 0 {
                missing.push((v, t));
                continue;
            }
            cells.push(RegimeCell {
                velocity: v,
                tonal_value: t,
                counts: c,
                majority: majority_of(c),
            });
        }
    }
    if !missing.is_empty() {
        return Err(RegimeError::MissingCells(missing));
    }

    let mut map = RegimeMap {
        experiment: first.experiment.clone(),
        raster_frequency: first.raster_frequency,
        velocities,
        tonal_values,
        cells,
        lower: Vec::new(),
        upper: Vec::new(),
    };
    let (lower, upper) = extract_borders(&map);
    map.lower = lower;
    map.upper = upper;
    Ok(map)
}

/// First adjacent pair (scanning tonal values upward) where exactly one of
/// the two cells has majority `class`; the breakpoint is their midpoint.
fn first_transition(column: &[RegimeCell], class: PatternClass) -> Option<f64> {
    column
        .windows(2)
        .find(|w| (w[0].majority == class) != (w[1].majority == class))
        .map(|w| 0.5 * (w[0].tonal_value + w[1].tonal_value))
}

/// Per-velocity (lower, upper) breakpoints. On columns that increase from A
/// through B to C the lower border sits above the last A cell and the upper
/// border below the first C cell.
pub fn extract_borders(map: &RegimeMap) -> (Vec<Option<f64>>, Vec<Option<f64>>) {
    let mut lower = Vec::with_capacity(map.velocities.len());
    let mut upper = Vec::with_capacity(map.velocities.len());
    for (i, column) in map.cells.chunks(map.tonal_values.len()).enumerate() {
        let monotone = column.windows(2).all(|w| w[0].majority.index() <= w[1].majority.index());
        if !monotone {
            log::warn!(
                "{}: velocity {} has a non-monotone class column; using the first transition",
                map.experiment,
                map.velocities[i]
            );
        }
        lower.push(first_transition(column, PatternClass::Dots));
        upper.push(first_transition(column, PatternClass::Fingers));
    }
    (lower, upper)
}

impl RegimeMap {
    pub fn experiment(&self) -> &str {
        &self.experiment
    }

    pub fn raster_frequency(&self) -> f64 {
        self.raster_frequency
    }

    pub fn velocities(&self) -> &[f64] {
        &self.velocities
    }

    pub fn tonal_values(&self) -> &[f64] {
        &self.tonal_values
    }

    pub fn cells(&self) -> &[RegimeCell] {
        &self.cells
    }

    pub fn cell(&self, velocity_idx: usize, tonal_idx: usize) -> &RegimeCell {
        &self.cells[velocity_idx * self.tonal_values.len() + tonal_idx]
    }

    /// Breakpoint per velocity, `None` where the transition is absent.
    pub fn breakpoints(&self, kind: BorderKind) -> &[Option<f64>] {
        match kind {
            BorderKind::Lower => &self.lower,
            BorderKind::Upper => &self.upper,
        }
    }

    /// Existing breakpoints as (velocity, tonal value) vertices.
    pub fn polyline(&self, kind: BorderKind) -> Vec<(f64, f64)> {
        self.velocities
            .iter()
            .zip(self.breakpoints(kind))
            .filter_map(|(&v, b)| b.map(|t| (v, t)))
            .collect()
    }

    /// Lower ≤ upper wherever both exist.
    pub fn borders_ordered(&self) -> bool {
        self.lower.iter().zip(&self.upper).all(|(l, u)| match (l, u) {
            (Some(l), Some(u)) => l <= u,
            _ => true,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "# experiment={} raster_lines_per_cm={}\nvelocity,tonal_value,count_A,count_B,count_C,majority\n",
            self.experiment, self.raster_frequency
        );
        for c in &self.cells {
            let [a, b, cc] = c.counts;
            writeln!(s, "{},{},{a},{b},{cc},{}", c.velocity, c.tonal_value, c.majority).unwrap();
        }
        s.push_str("velocity,border,tonal_value\n");
        for kind in [BorderKind::Lower, BorderKind::Upper] {
            for (v, t) in self.polyline(kind) {
                writeln!(s, "{v},{},{t}", kind.name()).unwrap();
            }
        }
        s
    }

    /// Parses [`RegimeMap::to_csv`] output.
    pub fn from_csv(text: &str) -> Result<RegimeMap> {
        let err = |line: usize, message: String| RegimeError::Parse { line, message };
        let num = |line: usize, s: &str| s.trim().parse::<f64>().map_err(|e| err(line, format!("{s:?}: {e}")));
        let count = |line: usize, s: &str| s.trim().parse::<u64>().map_err(|e| err(line, format!("{s:?}: {e}")));

        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, head) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
        let head = head
            .strip_prefix("# experiment=")
            .ok_or_else(|| err(1, "missing experiment line".into()))?;
        let (experiment, rf) = head
            .rsplit_once(" raster_lines_per_cm=")
            .ok_or_else(|| err(1, "missing raster frequency".into()))?;
        let raster_frequency = num(1, rf)?;

        let mut cells = Vec::new();
        let mut borders: Vec<(usize, f64, BorderKind, f64)> = Vec::new();
        for (n, line) in lines {
            if line.is_empty() || line.starts_with("velocity,") {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            match f.len() {
                6 => {
                    let counts = [count(n, f[2])?, count(n, f[3])?, count(n, f[4])?];
                    let majority: PatternClass = f[5].parse().map_err(|e| err(n, format!("{e}")))?;
                    cells.push(RegimeCell {
                        velocity: num(n, f[0])?,
                        tonal_value: num(n, f[1])?,
                        counts,
                        majority,
                    });
                }
                3 => {
                    let kind = match f[1] {
                        "lower" => BorderKind::Lower,
                        "upper" => BorderKind::Upper,
                        other => return Err(err(n, format!("unknown border {other:?}"))),
                    };
                    borders.push((n, num(n, f[0])?, kind, num(n, f[2])?));
                }
                k => return Err(err(n, format!("expected 6 or 3 fields, found {k}"))),
            }
        }

        let velocities = sorted_distinct(cells.iter().map(|c| c.velocity).collect());
        let tonal_values = sorted_distinct(cells.iter().map(|c| c.tonal_value).collect());
        if cells.is_empty() || velocities.len() * tonal_values.len() != cells.len() {
            return Err(err(0, "cells do not form a complete grid".into()));
        }
        cells.sort_by(|a, b| {
            a.velocity
                .total_cmp(&b.velocity)
                .then(a.tonal_value.total_cmp(&b.tonal_value))
        });
        let mut lower = vec![None; velocities.len()];
        let mut upper = vec![None; velocities.len()];
        for (n, v, kind, t) in borders {
            let i = velocities
                .binary_search_by(|g| g.total_cmp(&v))
                .map_err(|_| err(n, format!("border at unknown velocity {v}")))?;
            match kind {
                BorderKind::Lower => lower[i] = Some(t),
                BorderKind::Upper => upper[i] = Some(t),
            }
        }
        Ok(RegimeMap {
            experiment: experiment.to_string(),
            raster_frequency,
            velocities,
            tonal_values,
            cells,
            lower,
            upper,
        })
    }

    /// Static SVG: one colored cell per grid point (velocity left to right,
    /// tonal value bottom to top), border polylines, and axis labels.
    pub fn to_svg(&self) -> String {
        const CELL: f64 = 32.0;
        const LEFT: f64 = 70.0;
        const TOP: f64 = 40.0;
        const BOTTOM: f64 = 60.0;
        let nv = self.velocities.len();
        let nt = self.tonal_values.len();
        let (w, h) = (LEFT + CELL * nv as f64 + 110.0, TOP + CELL * nt as f64 + BOTTOM);
        let y_of = |j: f64| TOP + CELL * (nt as f64 - j - 0.5);
        let x_of = |i: usize| LEFT + CELL * (i as f64 + 0.5);

        let mut s = String::new();
        writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{} ({} lines/cm)</text>"#,
            LEFT + CELL * nv as f64 / 2.0,
            xml_escape(&self.experiment),
            self.raster_frequency
        )
        .unwrap();
        for (i, column) in self.cells.chunks(nt).enumerate() {
            for (j, c) in column.iter().enumerate() {
                writeln!(
                    s,
                    r#"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="{}" stroke="white"><title>{} m/min, {}%: A {} B {} C {}</title></rect>"#,
                    LEFT + CELL * i as f64,
                    y_of(j as f64) - CELL / 2.0,
                    class_color(c.majority),
                    c.velocity,
                    c.tonal_value,
                    c.counts[0],
                    c.counts[1],
                    c.counts[2]
                )
                .unwrap();
            }
        }
        for kind in [BorderKind::Lower, BorderKind::Upper] {
            let points: Vec<String> = self
                .breakpoints(kind)
                .iter()
                .enumerate()
                .filter_map(|(i, b)| b.map(|t| format!("{},{}", x_of(i), y_of(self.tonal_index(t)))))
                .collect();
            if !points.is_empty() {
                let dash = if kind == BorderKind::Lower { "" } else { r#" stroke-dasharray="6,3""# };
                writeln!(
                    s,
                    r#"<polyline class="{}-border" points="{}" fill="none" stroke="black" stroke-width="2"{dash}/>"#,
                    kind.name(),
                    points.join(" ")
                )
                .unwrap();
            }
        }
        for (i, v) in self.velocities.iter().enumerate() {
            writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle">{v}</text>"#,
                x_of(i),
                TOP + CELL * nt as f64 + 15.0
            )
            .unwrap();
        }
        for (j, t) in self.tonal_values.iter().enumerate() {
            writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="end" dominant-baseline="middle">{t}</text>"#,
                LEFT - 6.0,
                y_of(j as f64)
            )
            .unwrap();
        }
        writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">printing velocity (m/min)</text>"#,
            LEFT + CELL * nv as f64 / 2.0,
            h - 15.0
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">tonal value (%)</text>"#,
            TOP + CELL * nt as f64 / 2.0
        )
        .unwrap();
        let lx = LEFT + CELL * nv as f64 + 15.0;
        for (k, c) in PatternClass::ALL.iter().enumerate() {
            let y = TOP + 20.0 * k as f64;
            writeln!(
                s,
                r#"<rect x="{lx}" y="{y}" width="12" height="12" fill="{}"/><text x="{}" y="{}">{c}</text>"#,
                class_color(*c),
                lx + 18.0,
                y + 10.0
            )
            .unwrap();
        }
        s.push_str("</svg>\n");
        s
    }

    /// Fractional grid index of a tonal value (linear between grid points).
    fn tonal_index(&self, t: f64) -> f64 {
        let g = &self.tonal_values;
        if g.len() < 2 || t <= g[0] {
            return 0.0;
        }
        for j in 0..g.len() - 1 {
            if t <= g[j + 1] {
                return j as f64 + (t - g[j]) / (g[j + 1] - g[j]);
            }
        }
        (g.len() - 1) as f64
    }
}

fn class_color(c: PatternClass) -> &'static str {
    match c {
        PatternClass::Dots => "#4c72b0",
        PatternClass::Mixed => "#dd8452",
        PatternClass::Fingers => "#55a868",
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeFormat {
    Csv,
    Svg,
}

pub fn export_regime_map(map: &RegimeMap, path: &Path, format: RegimeFormat) -> Result<()> {
    let body = match format {
        RegimeFormat::Csv => map.to_csv(),
        RegimeFormat::Svg => map.to_svg(),
    };
    fs::write(path, body).map_err(|source| RegimeError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use PatternClass::*;

    fn meta(v: f64, t: f64) -> ImageMeta {
        ImageMeta {
            experiment: "T-01".into(),
            velocity: v,
            tonal_value: t,
            raster_frequency: 60.0,
            esa: false,
        }
    }

    fn column(v: f64, tonal: &[f64], classes: &[PatternClass]) -> Vec<(ImageMeta, PatternClass)> {
        tonal.iter().zip(classes).map(|(&t, &c)| (meta(v, t), c)).collect()
    }

    fn swap(c: PatternClass) -> PatternClass {
        match c {
            Dots => Fingers,
            Fingers => Dots,
            Mixed => Mixed,
        }
    }

    #[test]
    fn majority_and_ties() {
        assert_eq!(majority_of([5, 1, 0]), Dots);
        assert_eq!(majority_of([3, 0, 3]), Mixed);
        assert_eq!(majority_of([3, 3, 0]), Mixed);
        assert_eq!(majority_of([0, 1, 2]), Fingers);
    }

    #[test]
    fn midpoint_borders() {
        let map = build_regime_map(&column(15.0, &[10.0, 20.0, 30.0, 40.0], &[Dots, Dots, Mixed, Fingers])).unwrap();
        assert_eq!(map.breakpoints(BorderKind::Lower), &[Some(25.0)]);
        assert_eq!(map.breakpoints(BorderKind::Upper), &[Some(35.0)]);

        let all_a = build_regime_map(&column(15.0, &[10.0, 20.0], &[Dots, Dots])).unwrap();
        assert_eq!(all_a.breakpoints(BorderKind::Lower), &[None]);
        assert_eq!(all_a.breakpoints(BorderKind::Upper), &[None]);

        // direct A to C: both borders coincide
        let ac = build_regime_map(&column(15.0, &[10.0, 20.0, 30.0], &[Dots, Fingers, Fingers])).unwrap();
        assert_eq!(ac.breakpoints(BorderKind::Lower), &[Some(15.0)]);
        assert_eq!(ac.breakpoints(BorderKind::Upper), &[Some(15.0)]);
        assert!(ac.borders_ordered());
    }

    #[test]
    fn half_step_anchor() {
        let tonal: Vec<f64> = (1..=20).map(|i| 5.0 * i as f64).collect();
        let classes: Vec<PatternClass> = tonal
            .iter()
            .map(|&t| if t <= 15.0 { Dots } else if t <= 20.0 { Mixed } else { Fingers })
            .collect();
        let map = build_regime_map(&column(15.0, &tonal, &classes)).unwrap();
        assert_eq!(map.polyline(BorderKind::Lower), vec![(15.0, 17.5)]);
        assert_eq!(map.polyline(BorderKind::Upper), vec![(15.0, 22.5)]);
    }

    #[test]
    fn full_grid_cell_counts() {
        let velocities = [15.0, 30.0, 60.0, 90.0, 120.0, 180.0, 240.0];
        let mut preds = Vec::new();
        for &v in &velocities {
            for t in 1..=20 {
                for k in 0..48 {
                    preds.push((meta(v, 5.0 * t as f64), PatternClass::ALL[k % 3]));
                }
            }
        }
        assert_eq!(preds.len(), 6720);
        let map = build_regime_map(&preds).unwrap();
        assert_eq!(map.cells().len(), 140);
        assert!(map.cells().iter().all(|c| c.counts.iter().sum::<u64>() == 48));
        let csv = map.to_csv();
        assert_eq!(csv.lines().filter(|l| l.split(',').count() == 6).count(), 141);
    }

    #[test]
    fn missing_cells_are_listed() {
        let mut preds = column(15.0, &[10.0, 20.0], &[Dots, Mixed]);
        preds.push((meta(30.0, 10.0), Fingers));
        match build_regime_map(&preds) {
            Err(RegimeError::MissingCells(c)) => assert_eq!(c, vec![(30.0, 20.0)]),
            other => panic!("{other:?}"),
        }
        assert!(matches!(build_regime_map(&[]), Err(RegimeError::Empty)));
        let mut other = meta(15.0, 30.0);
        other.experiment = "X".into();
        preds.push((other, Dots));
        assert!(matches!(build_regime_map(&preds), Err(RegimeError::MixedExperiment(_))));
    }

    #[test]
    fn svg_has_polylines_only_for_existing_borders() {
        let plain = build_regime_map(&column(15.0, &[10.0, 20.0], &[Mixed, Mixed])).unwrap();
        let svg = plain.to_svg();
        assert!(!svg.contains("<polyline"));
        assert!(svg.contains("tonal value") && svg.contains("printing velocity"));
        let map = build_regime_map(&column(15.0, &[10.0, 20.0, 30.0, 40.0], &[Dots, Dots, Mixed, Fingers])).unwrap();
        assert_eq!(map.to_svg().matches("<polyline").count(), 2);
    }

    #[test]
    fn export_writes_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let map = build_regime_map(&column(15.0, &[10.0, 20.0], &[Dots, Fingers])).unwrap();
        let csv = dir.path().join("m.csv");
        let svg = dir.path().join("m.svg");
        export_regime_map(&map, &csv, RegimeFormat::Csv).unwrap();
        export_regime_map(&map, &svg, RegimeFormat::Svg).unwrap();
        assert_eq!(RegimeMap::from_csv(&fs::read_to_string(csv).unwrap()).unwrap(), map);
        assert!(fs::read_to_string(svg).unwrap().starts_with("<svg"));
    }

    fn arb_predictions() -> impl Strategy<Value = Vec<(ImageMeta, PatternClass)>> {
        (1usize..4, 2usize..6).prop_flat_map(|(nv, nt)| {
            proptest::collection::vec(proptest::collection::vec(0usize..3, 1..4), nv * nt).prop_map(move |cells| {
                let mut out = Vec::new();
                for (k, classes) in cells.iter().enumerate() {
                    let (v, t) = (15.0 * (1 + k / nt) as f64, 7.5 * (1 + k % nt) as f64);
                    out.extend(classes.iter().map(|&c| (meta(v, t), PatternClass::ALL[c])));
                }
                out
            })
        })
    }

    proptest! {
        #[test]
        fn csv_round_trip(preds in arb_predictions()) {
            let map = build_regime_map(&preds).unwrap();
            prop_assert_eq!(RegimeMap::from_csv(&map.to_csv()).unwrap(), map);
        }

        #[test]
        fn duplicating_predictions_keeps_majorities(preds in arb_predictions()) {
            let map = build_regime_map(&preds).unwrap();
            let doubled: Vec<_> = preds.iter().chain(&preds).cloned().collect();
            let map2 = build_regime_map(&doubled).unwrap();
            for (a, b) in map.cells().iter().zip(map2.cells()) {
                prop_assert_eq!(a.majority, b.majority);
            }
            prop_assert_eq!(map.breakpoints(BorderKind::Lower), map2.breakpoints(BorderKind::Lower));
        }

        #[test]
        fn swapping_a_and_c_swaps_borders(preds in arb_predictions()) {
            let map = build_regime_map(&preds).unwrap();
            let swapped: Vec<_> = preds.iter().map(|(m, c)| (m.clone(), swap(*c))).collect();
            let map2 = build_regime_map(&swapped).unwrap();
            prop_assert_eq!(map.breakpoints(BorderKind::Lower), map2.breakpoints(BorderKind::Upper));
            prop_assert_eq!(map.breakpoints(BorderKind::Upper), map2.breakpoints(BorderKind::Lower));
        }

        #[test]
        fn monotone_columns_never_cross(steps in proptest::collection::vec((0usize..8, 0usize..8), 1..6)) {
            // each column: a run of A, then B, then C
            let nt = 8;
            let mut preds = Vec::new();
            for (i, &(x, y)) in steps.iter().enumerate() {
                let (lo, hi) = (x.min(y), x.max(y));
                for j in 0..nt {
                    let c = if j < lo { Dots } else if j < hi { Mixed } else { Fingers };
                    preds.push((meta(10.0 * (i + 1) as f64, 5.0 * (j + 1) as f64), c));
                }
            }
            prop_assert!(build_regime_map(&preds).unwrap().borders_ordered());
        }
    }
}
