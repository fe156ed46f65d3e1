use std::path::Path;

use image::{Rgb, RgbImage};

use super::top_clauses;
use crate::conv::{extract_patches, PatchGeometry, PatchSet};
use crate::persist::model_hash;
use crate::tm::{BooleanSample, ClassMachine, EvalMode, InputShape, MulticlassModel};
use crate::{Error, Result};

/// Per-pixel sum of clause masks for one image.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    pub rows: usize,
    pub cols: usize,
    /// Row-major.
    pub values: Vec<f64>,
    pub class: usize,
    pub k: usize,
    /// Hex SHA-256 of the serialized model.
    pub model_hash: String,
}

impl Heatmap {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Diverging palette: blue for negative, white for zero, red for
    /// positive, scaled by the largest magnitude. Each cell becomes a
    /// `scale x scale` block.
    pub fn render(&self, scale: u32) -> RgbImage {
        let scale = scale.max(1);
        let peak = self.max_abs();
        let mut img = RgbImage::new(self.cols as u32 * scale, self.rows as u32 * scale);
        for (x, y, px) in img.enumerate_pixels_mut() {
            let v = self.get((y / scale) as usize, (x / scale) as usize);
            let t = if peak > 0.0 { v / peak } else { 0.0 };
            let fade = (255.0 * (1.0 - t.abs())).round() as u8;
            *px = if t >= 0.0 {
                Rgb([255, fade, fade])
            } else {
                Rgb([fade, fade, 255])
            };
        }
        img
    }

    pub fn save_png(&self, path: impl AsRef<Path>, scale: u32) -> Result<()> {
        self.render(scale).save(path)?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# class={} k={} model_sha256={}\n",
            self.class, self.k, self.model_hash
        );
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| format!("{}", self.get(r, c))).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn conv_geometry(model: &MulticlassModel) -> Result<PatchGeometry> {
    match model.shape() {
        InputShape::Conv(g) => Ok(*g),
        InputShape::Flat { .. } => Err(Error::param("heatmaps need a convolutional model")),
    }
}

/// Mask value of patch pixel `(dr, dc)`: +1 included, -1 negation included,
/// 0 excluded, averaged over channels.
fn pixel_mask(machine: &ClassMachine, g: &PatchGeometry, clause: usize) -> Vec<f64> {
    let o = g.patch_features();
    let states = machine.states();
    (0..g.window * g.window)
        .map(|cell| {
            let total: i32 = (0..g.channels)
                .map(|z| {
                    let k = cell * g.channels + z;
                    i32::from(states.includes(clause, k)) - i32::from(states.includes(clause, o + k))
                })
                .sum();
            f64::from(total) / g.channels as f64
        })
        .collect()
}

fn accumulate(
    machine: &ClassMachine,
    patches: &PatchSet,
    clause: usize,
    scale: f64,
    out: &mut [f64],
) {
    let g = patches.geometry();
    let input = patches.encode();
    let mut matches = Vec::new();
    machine.matching_blocks(clause, &input, EvalMode::Infer, &mut matches);
    if matches.is_empty() {
        return;
    }
    let mask = pixel_mask(machine, g, clause);
    let mut sum = vec![0.0; g.rows * g.cols];
    let mut hits = vec![0u32; g.rows * g.cols];
    for &b in &matches {
        let (r0, c0) = patches.origin(b);
        for dr in 0..g.window {
            for dc in 0..g.window {
                let cell = (r0 + dr) * g.cols + c0 + dc;
                sum[cell] += mask[dr * g.window + dc];
                hits[cell] += 1;
            }
        }
    }
    for ((o, s), &n) in out.iter_mut().zip(&sum).zip(&hits) {
        if n > 0 {
            *o += scale * s / f64::from(n);
        }
    }
}

/// Contribution of a single clause of `class` to the heatmap of `image`:
/// the clause's pixel mask averaged over the patches where it fires, times
/// its vote for the class. Cells outside every firing patch are 0.
pub fn clause_heatmap(
    model: &MulticlassModel,
    image: &BooleanSample,
    class: usize,
    clause: usize,
) -> Result<Vec<f64>> {
    let g = conv_geometry(model)?;
    let patches = extract_patches(image, &g)?;
    let m = model.machine_index(class)?;
    let machine = &model.machines()[m];
    if clause >= machine.clauses() {
        return Err(Error::param(format!("clause {clause} out of range")));
    }
    let sign = super::class_sign(model, class)?;
    let mut out = vec![0.0; g.rows * g.cols];
    let scale = (sign * machine.bank().signed_weight(clause)) as f64;
    accumulate(machine, &patches, clause, scale, &mut out);
    Ok(out)
}

/// Sum of [`clause_heatmap`] over the `k` highest-voting clauses of `class`.
pub fn heatmap(model: &MulticlassModel, image: &BooleanSample, class: usize, k: usize) -> Result<Heatmap> {
    let g = conv_geometry(model)?;
    let patches = extract_patches(image, &g)?;
    let (m, sign, order) = top_clauses(model, class, k)?;
    let machine = &model.machines()[m];
    let mut values = vec![0.0; g.rows * g.cols];
    for &j in &order {
        let scale = (sign * machine.bank().signed_weight(j)) as f64;
        accumulate(machine, &patches, j, scale, &mut values);
    }
    Ok(Heatmap {
        rows: g.rows,
        cols: g.cols,
        values,
        class,
        k: order.len(),
        model_hash: model_hash(model)?,
    })
}
