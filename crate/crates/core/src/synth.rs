//! Parametric dot / mixed / finger pattern images.
//!
//! * A: lattice of Gaussian blobs, one per `raster_period` cell.
//! * C: vertical stripes with a Gaussian cross-section at
//!   `finger_wavelength`, whose phase meanders smoothly down the image.
//! * B: A and C blended through a smooth random mask; roughly
//!   `blend_fraction` of the area shows stripes.
//!
//! All structure is evaluated on the torus, so when the period divides the
//! side length the image tiles seamlessly and its spectrum is concentrated
//! on the lattice harmonics.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::class::PatternClass;
use crate::dataset::{ImageMeta, LabeledImage, PatternDataset, PatternImage};

/// Blob standard deviation as a fraction of the raster period.
pub const BLOB_SIGMA: f64 = 0.2;
/// Stripe cross-section standard deviation as a fraction of the wavelength.
pub const STRIPE_SIGMA: f64 = 0.22;
/// Peak phase meander of the stripes as a fraction of the wavelength.
pub const MEANDER: f64 = 0.15;
/// Logistic width of the B blend mask (in units of the mask field).
const MASK_SOFTNESS: f64 = 0.3;

pub const EXPERIMENT: &str = "SYN-01";
pub const RASTER_FREQUENCY: f64 = 60.0;
/// Printing velocities (m/min) of the synthetic regime grid.
pub const VELOCITIES: [f64; 7] = [15.0, 30.0, 60.0, 90.0, 120.0, 180.0, 240.0];

/// Tonal values (%) of the synthetic regime grid: 5, 10, ..., 100.
pub fn tonal_values() -> [f64; 20] {
    std::array::from_fn(|i| 5.0 * (i + 1) as f64)
}

/// Ground-truth regime of the synthetic grid: at velocity index `i`,
/// A up to 15 + 5i %, C from 25 + 10i %, B in between.
pub fn regime_class(velocity_index: usize, tonal_value: f64) -> PatternClass {
    let i = velocity_index as f64;
    if tonal_value <= 15.0 + 5.0 * i {
        PatternClass::Dots
    } else if tonal_value >= 25.0 + 10.0 * i {
        PatternClass::Fingers
    } else {
        PatternClass::Mixed
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("per-class count must be at least 1")]
    EmptyClass,
}

pub type Result<T> = std::result::Result<T, SynthError>;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub side: usize,
    pub class: PatternClass,
    /// pixels
    pub raster_period: f64,
    /// pixels
    pub finger_wavelength: f64,
    pub noise_amplitude: f64,
    /// maximum random translation in pixels
    pub phase_jitter: f64,
    pub blend_fraction: f64,
    /// pattern amplitude; pixel = background + contrast * pattern
    pub contrast: f64,
    pub background: f64,
    pub seed: u64,
}

impl SynthSpec {
    /// Noise-free, unjittered spec with period 8 and wavelength 16.
    pub fn new(class: PatternClass, side: usize, seed: u64) -> Self {
        SynthSpec {
            side,
            class,
            raster_period: 8.0,
            finger_wavelength: 16.0,
            noise_amplitude: 0.0,
            phase_jitter: 0.0,
            blend_fraction: 0.5,
            contrast: 1.0,
            background: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        let finite = [
            self.raster_period,
            self.finger_wavelength,
            self.noise_amplitude,
            self.phase_jitter,
            self.blend_fraction,
            self.contrast,
            self.background,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return bad("non-finite parameter".into());
        }
        if self.raster_period < 2.0 {
            return bad(format!("raster period {} < 2", self.raster_period));
        }
        if self.finger_wavelength < 2.0 {
            return bad(format!("finger wavelength {} < 2", self.finger_wavelength));
        }
        let need = 4.0 * self.raster_period.max(self.finger_wavelength);
        if (self.side as f64) < need {
            return bad(format!("side {} < 4 x largest period ({need})", self.side));
        }
        if !(0.0..=1.0).contains(&self.noise_amplitude) {
            return bad(format!("noise amplitude {} outside [0, 1]", self.noise_amplitude));
        }
        if !(0.0..=1.0).contains(&self.blend_fraction) {
            return bad(format!("blend fraction {} outside [0, 1]", self.blend_fraction));
        }
        if !(0.0..=1.0).contains(&self.contrast) || !(0.0..=1.0).contains(&self.background) {
            return bad(format!(
                "contrast {} and background {} must lie in [0, 1]",
                self.contrast, self.background
            ));
        }
        if self.phase_jitter < 0.0 {
            return bad(format!("negative phase jitter {}", self.phase_jitter));
        }
        Ok(())
    }
}

/// Distance from `x` to the nearest multiple of `period`.
fn wrapped(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    r.min(period - r)
}

fn dots(side: usize, period: f64, (oy, ox): (f64, f64)) -> Vec<f64> {
    let s2 = 2.0 * (BLOB_SIGMA * period).powi(2);
    let mut px = Vec::with_capacity(side * side);
    for y in 0..side {
        let dy = wrapped(y as f64 - oy, period);
        for x in 0..side {
            let dx = wrapped(x as f64 - ox, period);
            px.push((-(dx * dx + dy * dy) / s2).exp());
        }
    }
    px
}

fn stripes(side: usize, wavelength: f64, ox: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let s2 = 2.0 * (STRIPE_SIGMA * wavelength).powi(2);
    let amp = MEANDER * wavelength;
    let (p1, p2): (f64, f64) = (rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI));
    let mut px = Vec::with_capacity(side * side);
    for y in 0..side {
        let t = 2.0 * PI * y as f64 / side as f64;
        let shift = amp * (0.7 * (t + p1).sin() + 0.3 * (2.0 * t + p2).sin());
        for x in 0..side {
            let d = wrapped(x as f64 - ox - shift, wavelength);
            px.push((-d * d / s2).exp());
        }
    }
    px
}

/// Smooth periodic field in roughly [-3, 3], made of three low-frequency waves.
fn mask_field(side: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let waves: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| {
            let (mut ky, mut kx) = (0i32, 0i32);
            while ky == 0 && kx == 0 {
                ky = rng.random_range(-2..=2);
                kx = rng.random_range(-2..=2);
            }
            (ky as f64, kx as f64, rng.random_range(0.0..2.0 * PI))
        })
        .collect();
    let w = 2.0 * PI / side as f64;
    (0..side * side)
        .map(|i| {
            let (y, x) = ((i / side) as f64, (i % side) as f64);
            waves.iter().map(|(ky, kx, p)| (w * (ky * y + kx * x) + p).cos()).sum()
        })
        .collect()
}

/// Renders one image; identical specs give identical pixels.
pub fn gen_pixels(spec: &SynthSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let side = spec.side;
    let mut jitter = || {
        if spec.phase_jitter > 0.0 {
            rng.random_range(0.0..spec.phase_jitter)
        } else {
            0.0
        }
    };
    let offset = (jitter(), jitter());

    let mut px = match spec.class {
        PatternClass::Dots => dots(side, spec.raster_period, offset),
        PatternClass::Fingers => stripes(side, spec.finger_wavelength, offset.1, &mut rng),
        PatternClass::Mixed => {
            let a = dots(side, spec.raster_period, offset);
            let c = stripes(side, spec.finger_wavelength, offset.1, &mut rng);
            let field = mask_field(side, &mut rng);
            let mut sorted = field.clone();
            sorted.sort_by(f64::total_cmp);
            let q = ((1.0 - spec.blend_fraction) * (sorted.len() - 1) as f64).round() as usize;
            let tau = sorted[q];
            a.iter()
                .zip(&c)
                .zip(&field)
                .map(|((a, c), f)| {
                    let w = 1.0 / (1.0 + (-(f - tau) / MASK_SOFTNESS).exp());
                    (1.0 - w) * a + w * c
                })
                .collect()
        }
    };
    for p in &mut px {
        *p = spec.background + spec.contrast * *p;
    }
    if spec.noise_amplitude > 0.0 {
        for p in &mut px {
            *p += rng.random_range(-spec.noise_amplitude..=spec.noise_amplitude);
        }
    }
    for p in &mut px {
        *p = p.clamp(0.0, 1.0);
    }
    Ok(px)
}

/// [`gen_pixels`] wrapped as a labeled image at a neutral grid position.
pub fn gen_image(spec: &SynthSpec) -> Result<LabeledImage> {
    let pixels = gen_pixels(spec)?;
    Ok(LabeledImage {
        name: format!("syn-{}-{}.png", spec.class, spec.seed),
        image: PatternImage::new(spec.side, pixels).expect("pixels within [0, 1]"),
        label: spec.class,
        meta: meta(0, 50.0),
    })
}

fn meta(velocity_index: usize, tonal_value: f64) -> ImageMeta {
    ImageMeta {
        experiment: EXPERIMENT.into(),
        velocity: VELOCITIES[velocity_index],
        tonal_value,
        raster_frequency: RASTER_FREQUENCY,
        esa: false,
    }
}

/// Dataset composition; per-image parameters are drawn at random around
/// side-scaled nominal values.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecipe {
    /// images per class, A, B, C
    pub counts: [usize; 3],
    pub side: usize,
    pub seed: u64,
    /// additive noise amplitude per class, A, B, C
    pub noise: [f64; 3],
    /// range of the B blend fraction
    pub blend: (f64, f64),
}

/// Per-image pattern contrast of generated datasets.
pub const CONTRAST_RANGE: std::ops::RangeInclusive<f64> = 0.4..=1.0;

/// Default range of the B blend fraction.
pub const DEFAULT_BLEND: (f64, f64) = (0.35, 0.65);

/// Default additive noise amplitude of generated datasets.
pub const DEFAULT_NOISE: f64 = 0.15;

impl DatasetRecipe {
    pub fn balanced(per_class: usize, side: usize, seed: u64) -> Self {
        DatasetRecipe {
            counts: [per_class; 3],
            side,
            seed,
            noise: [DEFAULT_NOISE; 3],
            blend: DEFAULT_BLEND,
        }
    }
}

/// Per-image spec: raster period in [6.5, 9.5] px and wavelength in
/// [11, 16] px at side 64 (scaled linearly with side), full-period random
/// translation, blend fraction drawn from `blend`, contrast in
/// [`CONTRAST_RANGE`] and a background that keeps the pattern in [0, 1].
fn random_spec(class: PatternClass, side: usize, noise: f64, blend: (f64, f64), rng: &mut ChaCha8Rng) -> SynthSpec {
    let scale = side as f64 / 64.0;
    let raster_period = scale * rng.random_range(6.5..=9.5);
    let finger_wavelength = scale * rng.random_range(11.0..=16.0);
    let contrast = rng.random_range(CONTRAST_RANGE);
    let background = rng.random_range(0.0..=1.0 - contrast);
    SynthSpec {
        side,
        class,
        raster_period,
        finger_wavelength,
        noise_amplitude: noise,
        phase_jitter: match class {
            PatternClass::Fingers => finger_wavelength,
            _ => raster_period,
        },
        blend_fraction: rng.random_range(blend.0..=blend.1),
        contrast,
        background,
        seed: rng.random(),
    }
}

fn stream_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn check_side(side: usize) -> Result<()> {
    if side < 32 {
        return Err(SynthError::InvalidSpec(format!("side {side} < 32")));
    }
    Ok(())
}

/// Images grouped by class (all A, then B, then C). Metadata is drawn from
/// the synthetic regime grid, consistent with each image's class.
pub fn gen_dataset_from(recipe: &DatasetRecipe) -> Result<PatternDataset> {
    check_side(recipe.side)?;
    let (lo, hi) = recipe.blend;
    if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
        return Err(SynthError::InvalidSpec(format!("blend range ({lo}, {hi}) outside [0, 1]")));
    }
    if recipe.counts.iter().all(|&c| c == 0) {
        return Err(SynthError::EmptyClass);
    }
    let jobs: Vec<(usize, PatternClass)> = PatternClass::ALL
        .iter()
        .flat_map(|&c| std::iter::repeat_n(c, recipe.counts[c.index()]))
        .enumerate()
        .collect();
    let tonal = tonal_values();
    let images = jobs
        .par_iter()
        .map(|&(index, class)| {
            let mut rng = stream_rng(recipe.seed, index);
            let spec = random_spec(class, recipe.side, recipe.noise[class.index()], recipe.blend, &mut rng);
            let vi = rng.random_range(0..VELOCITIES.len());
            let cells: Vec<f64> = tonal.iter().copied().filter(|&t| regime_class(vi, t) == class).collect();
            let t = cells[rng.random_range(0..cells.len())];
            let pixels = gen_pixels(&spec)?;
            Ok(LabeledImage {
                name: format!("syn-{index:05}.png"),
                image: PatternImage::new(recipe.side, pixels).expect("pixels within [0, 1]"),
                label: class,
                meta: meta(vi, t),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PatternDataset::new(images).expect("nonempty, one side"))
}

/// `per_class` images of each class at side `side`.
pub fn gen_dataset(per_class: usize, side: usize, seed: u64) -> Result<PatternDataset> {
    if per_class == 0 {
        return Err(SynthError::EmptyClass);
    }
    gen_dataset_from(&DatasetRecipe::balanced(per_class, side, seed))
}

/// `per_cell` images in every cell of the 7 × 20 synthetic regime grid,
/// each labeled with that cell's ground-truth regime.
pub fn gen_regime_grid(per_cell: usize, side: usize, seed: u64) -> Result<PatternDataset> {
    check_side(side)?;
    if per_cell == 0 {
        return Err(SynthError::EmptyClass);
    }
    let tonal = tonal_values();
    let cells = VELOCITIES.len() * tonal.len();
    let images = (0..cells * per_cell)
        .into_par_iter()
        .map(|index| {
            let cell = index / per_cell;
            let (vi, t) = (cell / tonal.len(), tonal[cell % tonal.len()]);
            let class = regime_class(vi, t);
            let mut rng = stream_rng(seed, index);
            let spec = random_spec(class, side, DEFAULT_NOISE, DEFAULT_BLEND, &mut rng);
            let pixels = gen_pixels(&spec)?;
            Ok(LabeledImage {
                name: format!("grid-{index:05}.png"),
                image: PatternImage::new(side, pixels).expect("pixels within [0, 1]"),
                label: class,
                meta: meta(vi, t),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PatternDataset::new(images).expect("nonempty, one side"))
}
