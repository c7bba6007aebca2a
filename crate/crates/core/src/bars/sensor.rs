//! The transduction layer: per-color banks of 55 Gaussian sensors.

use serde::{Deserialize, Serialize};

use super::{Color, Scene, Space, SpaceKind};
use crate::error::Result;

pub const SENSORS_PER_COLOR: usize = 55;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SensorProfile {
    Gaussian,
    /// Center-surround contrast: a narrow Gaussian minus a wide one.
    DifferenceOfGaussians,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorBank {
    pub profile: SensorProfile,
    /// Color blocks, in input order.
    pub colors: Vec<Color>,
    /// Width of the Gaussian kernel in space units.
    pub width: f64,
}

/// Surround width of the difference-of-Gaussians profile, as a multiple of
/// the center width.
const SURROUND_FACTOR: f64 = 2.0;

impl SensorBank {
    pub fn two_color(profile: SensorProfile) -> SensorBank {
        SensorBank {
            profile,
            colors: vec![Color::R, Color::G],
            width: 1.5,
        }
    }

    pub fn three_color(profile: SensorProfile) -> SensorBank {
        SensorBank {
            profile,
            colors: vec![Color::R, Color::G, Color::B],
            width: 1.5,
        }
    }

    pub fn input_size(&self) -> usize {
        self.colors.len() * SENSORS_PER_COLOR
    }

    pub fn sensor_position(&self, space: &Space, i: usize) -> f64 {
        (i as f64 + 0.5) * space.diameter as f64 / SENSORS_PER_COLOR as f64
    }

    fn kernel(&self, d: f64) -> f64 {
        let g = |w: f64| (-d * d / (2.0 * w * w)).exp();
        match self.profile {
            SensorProfile::Gaussian => g(self.width),
            SensorProfile::DifferenceOfGaussians => g(self.width) - g(self.width * SURROUND_FACTOR),
        }
    }

    /// Kernel values for every (sensor, dot) pair; computing this once makes
    /// rendering a table lookup.
    pub fn table(&self, space: &Space) -> SensorTable {
        let mut kernel = vec![vec![0.0; space.dots]; SENSORS_PER_COLOR];
        for (i, row) in kernel.iter_mut().enumerate() {
            let s = self.sensor_position(space, i);
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.kernel(space.distance(space.dot_position(j), s));
            }
        }
        SensorTable {
            bank: self.clone(),
            kernel,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SensorTable {
    pub bank: SensorBank,
    /// `kernel[sensor][dot]`.
    kernel: Vec<Vec<f64>>,
}

/// Sensor activations for a scene: one 55-block per color in bank order; an
/// absent color contributes a zero block.
pub fn render_with_table(scene: &Scene, table: &SensorTable, space: &Space) -> Result<Vec<f64>> {
    let mut out = vec![0.0; table.bank.input_size()];
    for (b, &color) in table.bank.colors.iter().enumerate() {
        let Some(bar) = scene.bar(color) else { continue };
        let span = bar.span(space)?;
        let block = &mut out[b * SENSORS_PER_COLOR..(b + 1) * SENSORS_PER_COLOR];
        for (i, o) in block.iter_mut().enumerate() {
            let row = &table.kernel[i];
            let mut acc = 0.0;
            match space.kind {
                SpaceKind::Linear => {
                    for j in span.start as usize..span.start as usize + span.len {
                        acc += row[j];
                    }
                }
                SpaceKind::Circular => {
                    for k in 0..span.len {
                        acc += row[(span.start as usize + k) % space.dots];
                    }
                }
            }
            *o = acc;
        }
    }
    Ok(out)
}

/// Convenience wrapper that builds the kernel table on the fly.
pub fn render_input(scene: &Scene, bank: &SensorBank, space: &Space) -> Result<Vec<f64>> {
    render_with_table(scene, &bank.table(space), space)
}
