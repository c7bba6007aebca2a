//! Colored-bars topology tasks on 1-D spaces.
//!
//! A scene is two (or three) rigid colored bars on a segment or a circle.
//! Bars are snapped to a 100-dot discretization; every label is decided on
//! the snapped dot sets, once by integer interval arithmetic and once (as an
//! independent oracle) by scanning the pointwise predicates over all dots.

mod dataset;
mod sensor;

pub use dataset::{
    dataset_from_csv, dataset_to_csv, generalization_sets, generate_dataset, BarsDataset, BarsSpec,
};
pub use sensor::{render_input, render_with_table, SensorBank, SensorProfile, SensorTable};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceKind {
    Linear,
    Circular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Space {
    pub kind: SpaceKind,
    /// Total length in space units (18 or 23).
    pub diameter: u32,
    /// Number of dots discretizing the space.
    pub dots: usize,
}

impl Space {
    pub fn new(kind: SpaceKind, diameter: u32) -> Space {
        Space {
            kind,
            diameter,
            dots: 100,
        }
    }

    /// Space units per dot.
    pub fn unit(&self) -> f64 {
        self.diameter as f64 / self.dots as f64
    }

    /// Position of dot `j` (the center of its cell).
    pub fn dot_position(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.unit()
    }

    /// Distance between two positions, wrapped on the circle.
    pub fn distance(&self, a: f64, b: f64) -> f64 {
        let d = (a - b).abs();
        match self.kind {
            SpaceKind::Linear => d,
            SpaceKind::Circular => {
                let dd = d % self.diameter as f64;
                dd.min(self.diameter as f64 - dd)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Color {
    R,
    G,
    B,
}

impl std::fmt::Display for Color {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Color::R => "R",
            Color::G => "G",
            Color::B => "B",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub color: Color,
    /// Center in space units.
    pub center: f64,
    /// Length in space units.
    pub length: u32,
}

/// A bar snapped to the dot grid: `len` dots starting at dot `start`
/// (wrapped on the circle).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DotSpan {
    pub start: i64,
    pub len: usize,
}

impl Bar {
    pub fn span(&self, space: &Space) -> Result<DotSpan> {
        if self.length == 0 || self.length >= space.diameter {
            return Err(Error::InvalidConfig(format!(
                "bar length {} does not fit a diameter of {}",
                self.length, space.diameter
            )));
        }
        let unit = space.unit();
        let start = ((self.center - self.length as f64 / 2.0) / unit).round() as i64;
        let len = (self.length as f64 / unit).round() as usize;
        match space.kind {
            SpaceKind::Linear => {
                if start < 0 || start as usize + len > space.dots {
                    return Err(Error::InvalidConfig(format!(
                        "bar at {} of length {} leaves the segment",
                        self.center, self.length
                    )));
                }
                Ok(DotSpan { start, len })
            }
            SpaceKind::Circular => Ok(DotSpan {
                start: start.rem_euclid(space.dots as i64),
                len,
            }),
        }
    }
}

impl DotSpan {
    /// Is dot `j` covered, with circular wrap over `dots`?
    pub fn covers(&self, j: usize, dots: usize) -> bool {
        let rel = (j as i64 - self.start).rem_euclid(dots as i64) as usize;
        rel < self.len
    }

    /// Number of dots covered by both spans (interval arithmetic route).
    pub fn overlap(&self, other: &DotSpan, space: &Space) -> usize {
        let (s1, e1) = (self.start, self.start + self.len as i64);
        let mut total = 0i64;
        let shifts: &[i64] = match space.kind {
            SpaceKind::Linear => &[0],
            SpaceKind::Circular => &[-(space.dots as i64), 0, space.dots as i64],
        };
        for &k in shifts {
            let (s2, e2) = (other.start + k, other.start + k + other.len as i64);
            total += (e1.min(e2) - s1.max(s2)).max(0);
        }
        total as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub bars: Vec<Bar>,
}

impl Scene {
    pub fn bar(&self, color: Color) -> Option<&Bar> {
        self.bars.iter().find(|b| b.color == color)
    }

    pub fn has_blue(&self) -> bool {
        self.bar(Color::B).is_some()
    }
}

/// The relation between the red and green bars, decided on the dot grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationLabel {
    pub disjoint: bool,
    /// Every green dot is red (green strictly inside red; coincidence is
    /// rejected upstream).
    pub g_in_r: bool,
    /// Every red dot is green.
    pub r_in_g: bool,
    pub blue_present: bool,
}

impl RelationLabel {
    pub fn topology(&self) -> Topology {
        if self.disjoint {
            Topology::D
        } else if self.g_in_r || self.r_in_g {
            Topology::Ii
        } else {
            Topology::Io
        }
    }
}

/// Disjoint / intersection-only / inclusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    D,
    Io,
    Ii,
}

impl std::fmt::Display for Topology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Topology::D => "D",
            Topology::Io => "IO",
            Topology::Ii => "II",
        })
    }
}

/// Labels a scene by integer interval arithmetic over the snapped spans.
///
/// Exact coincidence of the red and green bars is rejected; generators
/// resample such scenes.
pub fn label_scene(scene: &Scene, space: &Space) -> Result<RelationLabel> {
    let r = scene
        .bar(Color::R)
        .ok_or_else(|| Error::InvalidConfig("scene has no red bar".into()))?
        .span(space)?;
    let g = scene
        .bar(Color::G)
        .ok_or_else(|| Error::InvalidConfig("scene has no green bar".into()))?
        .span(space)?;
    let overlap = r.overlap(&g, space);
    let g_in_r = overlap == g.len;
    let r_in_g = overlap == r.len;
    if g_in_r && r_in_g {
        return Err(Error::InvalidConfig("coincident red and green bars".into()));
    }
    Ok(RelationLabel {
        disjoint: overlap == 0,
        g_in_r,
        r_in_g,
        blue_present: scene.has_blue(),
    })
}

/// Brute-force oracle: evaluates the quantified predicates dot by dot.
pub fn label_scene_pointwise(scene: &Scene, space: &Space) -> Result<RelationLabel> {
    let r = scene
        .bar(Color::R)
        .ok_or_else(|| Error::InvalidConfig("scene has no red bar".into()))?
        .span(space)?;
    let g = scene
        .bar(Color::G)
        .ok_or_else(|| Error::InvalidConfig("scene has no green bar".into()))?
        .span(space)?;
    let mut any_both = false;
    let mut all_g_in_r = true;
    let mut all_r_in_g = true;
    for j in 0..space.dots {
        let red = r.covers(j, space.dots);
        let green = g.covers(j, space.dots);
        if red && green {
            any_both = true;
        }
        if green && !red {
            all_g_in_r = false;
        }
        if red && !green {
            all_r_in_g = false;
        }
    }
    if all_g_in_r && all_r_in_g {
        return Err(Error::InvalidConfig("coincident red and green bars".into()));
    }
    Ok(RelationLabel {
        disjoint: !any_both,
        g_in_r: all_g_in_r,
        r_in_g: all_r_in_g,
        blue_present: scene.has_blue(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentId {
    /// Fixed lengths 5 (red) and 3 (green); classes D / IO / II.
    One,
    /// Varying lengths for both colors; classes D / IO / II_R / II_G.
    Two,
    /// Red 6, green 5, optional blue 3; the three topologies conditioned on
    /// the presence of blue.
    Three,
}

impl ExperimentId {
    pub fn n_classes(self) -> usize {
        match self {
            ExperimentId::One => 3,
            ExperimentId::Two => 4,
            ExperimentId::Three => 6,
        }
    }

    pub fn class_names(self) -> Vec<String> {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect();
        match self {
            ExperimentId::One => s(&["D", "IO", "II"]),
            ExperimentId::Two => s(&["D", "IO", "II_R", "II_G"]),
            ExperimentId::Three => s(&["D&B", "II&B", "IO&B", "D&!B", "II&!B", "IO&!B"]),
        }
    }

    /// Class index of a labeled scene, in the order of
    /// [`ExperimentId::class_names`].
    pub fn class_of(self, label: &RelationLabel) -> usize {
        match self {
            ExperimentId::One => match label.topology() {
                Topology::D => 0,
                Topology::Io => 1,
                Topology::Ii => 2,
            },
            ExperimentId::Two => {
                if label.disjoint {
                    0
                } else if label.r_in_g {
                    2
                } else if label.g_in_r {
                    3
                } else {
                    1
                }
            }
            ExperimentId::Three => {
                let topo = match label.topology() {
                    Topology::D => 0,
                    Topology::Ii => 1,
                    Topology::Io => 2,
                };
                if label.blue_present {
                    topo
                } else {
                    topo + 3
                }
            }
        }
    }
}

#[cfg(test)]
mod tests;
