//! Seeded scene sampling and dataset assembly for the bars experiments.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    label_scene, render_with_table, Bar, Color, ExperimentId, RelationLabel, Scene, SensorBank,
    SensorProfile, Space, SpaceKind,
};
use crate::error::{Error, Result};
use crate::mlp::{seeded_rng, Dataset, Target};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarsSpec {
    pub experiment: ExperimentId,
    pub space: Space,
    /// Length choices per color; one entry means a fixed length.
    pub red_lengths: Vec<u32>,
    pub green_lengths: Vec<u32>,
    /// Blue bar length; when set, the bar appears in half of the scenes.
    pub blue_length: Option<u32>,
    pub profile: SensorProfile,
    pub n: usize,
    pub seed: u64,
    /// Rejection-sample to equal class counts instead of natural sampling.
    pub balanced: bool,
}

impl BarsSpec {
    /// Fixed lengths 5 (red) / 3 (green) on a diameter of 18.
    pub fn experiment1(kind: SpaceKind, n: usize, seed: u64) -> BarsSpec {
        BarsSpec {
            experiment: ExperimentId::One,
            space: Space::new(kind, 18),
            red_lengths: vec![5],
            green_lengths: vec![3],
            blue_length: None,
            profile: SensorProfile::Gaussian,
            n,
            seed,
            balanced: false,
        }
    }

    /// Lengths 2,4,6,8 for both colors on a diameter of 23.
    pub fn experiment2(n: usize, seed: u64) -> BarsSpec {
        BarsSpec {
            experiment: ExperimentId::Two,
            space: Space::new(SpaceKind::Linear, 23),
            red_lengths: vec![2, 4, 6, 8],
            green_lengths: vec![2, 4, 6, 8],
            blue_length: None,
            profile: SensorProfile::Gaussian,
            n,
            seed,
            balanced: false,
        }
    }

    /// The held-out length set 3,5,7 for experiment 2.
    pub fn experiment2_test(n: usize, seed: u64) -> BarsSpec {
        BarsSpec {
            red_lengths: vec![3, 5, 7],
            green_lengths: vec![3, 5, 7],
            ..BarsSpec::experiment2(n, seed)
        }
    }

    /// Red 6, green 5, blue 3 in half of the scenes, diameter 23.
    pub fn experiment3(n: usize, seed: u64) -> BarsSpec {
        BarsSpec {
            experiment: ExperimentId::Three,
            space: Space::new(SpaceKind::Linear, 23),
            red_lengths: vec![6],
            green_lengths: vec![5],
            blue_length: Some(3),
            profile: SensorProfile::Gaussian,
            n,
            seed,
            balanced: false,
        }
    }

    pub fn sensor_bank(&self) -> SensorBank {
        if self.blue_length.is_some() {
            SensorBank::three_color(self.profile)
        } else {
            SensorBank::two_color(self.profile)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lengths = self
            .red_lengths
            .iter()
            .chain(&self.green_lengths)
            .chain(self.blue_length.as_ref());
        for &l in lengths {
            if l == 0 || l >= self.space.diameter {
                return Err(Error::InvalidConfig(format!(
                    "bar length {l} does not fit a diameter of {}",
                    self.space.diameter
                )));
            }
        }
        if self.red_lengths.is_empty() || self.green_lengths.is_empty() {
            return Err(Error::InvalidConfig("empty length choice list".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BarsDataset {
    pub spec: BarsSpec,
    pub data: Dataset,
    pub scenes: Vec<Scene>,
    pub labels: Vec<RelationLabel>,
    /// Class index per scene under `spec.experiment`.
    pub classes: Vec<usize>,
}

fn sample_center(rng: &mut rand_chacha::ChaCha12Rng, space: &Space, length: u32) -> f64 {
    match space.kind {
        SpaceKind::Linear => {
            let half = length as f64 / 2.0;
            rng.gen_range(half..space.diameter as f64 - half)
        }
        SpaceKind::Circular => rng.gen_range(0.0..space.diameter as f64),
    }
}

fn pick<T: Copy>(rng: &mut rand_chacha::ChaCha12Rng, choices: &[T]) -> T {
    choices[rng.gen_range(0..choices.len())]
}

/// Draws scenes (uniform centers, coincidences rejected), labels them with
/// [`label_scene`], and renders sensor inputs.
pub fn generate_dataset(spec: &BarsSpec) -> Result<BarsDataset> {
    spec.validate()?;
    let mut rng = seeded_rng(spec.seed);
    let bank = spec.sensor_bank();
    let table = bank.table(&spec.space);
    let n_classes = spec.experiment.n_classes();
    let mut quota = vec![usize::MAX; n_classes];
    if spec.balanced {
        let base = spec.n / n_classes;
        for (i, q) in quota.iter_mut().enumerate() {
            *q = base + usize::from(i < spec.n % n_classes);
        }
    }
    let mut counts = vec![0usize; n_classes];

    let mut out = BarsDataset {
        spec: spec.clone(),
        data: Dataset::default(),
        scenes: Vec::with_capacity(spec.n),
        labels: Vec::with_capacity(spec.n),
        classes: Vec::with_capacity(spec.n),
    };
    let max_attempts = spec.n.saturating_mul(10_000).max(1_000_000);
    let mut attempts = 0usize;
    while out.scenes.len() < spec.n {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::Empty(format!(
                "could not fill class quotas after {max_attempts} attempts"
            )));
        }
        let r_len = pick(&mut rng, &spec.red_lengths);
        let g_len = pick(&mut rng, &spec.green_lengths);
        let mut bars = vec![
            Bar {
                color: Color::R,
                center: sample_center(&mut rng, &spec.space, r_len),
                length: r_len,
            },
            Bar {
                color: Color::G,
                center: sample_center(&mut rng, &spec.space, g_len),
                length: g_len,
            },
        ];
        if let Some(b_len) = spec.blue_length {
            if rng.gen_range(0.0..1.0) < 0.5 {
                bars.push(Bar {
                    color: Color::B,
                    center: sample_center(&mut rng, &spec.space, b_len),
                    length: b_len,
                });
            }
        }
        let scene = Scene { bars };
        let label = match label_scene(&scene, &spec.space) {
            Ok(l) => l,
            // coincident bars: resample
            Err(Error::InvalidConfig(_)) => continue,
            Err(e) => return Err(e),
        };
        let class = spec.experiment.class_of(&label);
        if spec.balanced && counts[class] >= quota[class] {
            continue;
        }
        counts[class] += 1;
        let input = render_with_table(&scene, &table, &spec.space)?;
        out.data.push(input, Target::Class(class));
        out.scenes.push(scene);
        out.labels.push(label);
        out.classes.push(class);
    }
    Ok(out)
}

/// The three held-out variants of an experiment-1 spec: lengths 4/6 with the
/// same colors, colors swapped at the original lengths, and both changes.
pub fn generalization_sets(base: &BarsSpec) -> Result<[BarsSpec; 3]> {
    if base.experiment != ExperimentId::One {
        return Err(Error::InvalidConfig(
            "generalization sets are defined for experiment 1".into(),
        ));
    }
    let with = |red: u32, green: u32, salt: u64| BarsSpec {
        red_lengths: vec![red],
        green_lengths: vec![green],
        seed: base.seed.wrapping_add(salt),
        ..base.clone()
    };
    Ok([with(6, 4, 1), with(3, 5, 2), with(4, 6, 3)])
}

/// CSV dump: per-bar geometry, class label, then the sensor components.
pub fn dataset_to_csv(ds: &BarsDataset) -> String {
    let mut out = String::new();
    out.push_str("class,label,r_center,r_length,g_center,g_length,b_present,b_center,b_length");
    let n_inputs = ds.spec.sensor_bank().input_size();
    for i in 0..n_inputs {
        out.push_str(&format!(",s{i}"));
    }
    out.push('\n');
    let names = ds.spec.experiment.class_names();
    for (i, scene) in ds.scenes.iter().enumerate() {
        let r = scene.bar(Color::R).expect("red bar");
        let g = scene.bar(Color::G).expect("green bar");
        out.push_str(&format!(
            "{},{},{},{},{},{}",
            ds.classes[i], names[ds.classes[i]], r.center, r.length, g.center, g.length
        ));
        match scene.bar(Color::B) {
            Some(b) => out.push_str(&format!(",1,{},{}", b.center, b.length)),
            None => out.push_str(",0,0,0"),
        }
        for v in &ds.data.inputs[i] {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

/// Reads a dump produced by [`dataset_to_csv`] back, re-deriving labels from
/// the stored geometry.
pub fn dataset_from_csv(text: &str, spec: &BarsSpec) -> Result<BarsDataset> {
    let n_inputs = spec.sensor_bank().input_size();
    let mut out = BarsDataset {
        spec: spec.clone(),
        data: Dataset::default(),
        scenes: Vec::new(),
        labels: Vec::new(),
        classes: Vec::new(),
    };
    let mut lines = text.lines();
    let _header = lines.next().ok_or_else(|| Error::Parse("empty csv".into()))?;
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let expected = 9 + n_inputs;
        if fields.len() != expected {
            return Err(Error::Parse(format!(
                "expected {expected} fields, got {}",
                fields.len()
            )));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse().map_err(|e| Error::Parse(format!("number: {e}")))
        };
        let class: usize = fields[0]
            .parse()
            .map_err(|e| Error::Parse(format!("class: {e}")))?;
        let mut bars = vec![
            Bar {
                color: Color::R,
                center: num(fields[2])?,
                length: num(fields[3])? as u32,
            },
            Bar {
                color: Color::G,
                center: num(fields[4])?,
                length: num(fields[5])? as u32,
            },
        ];
        if fields[6] == "1" {
            bars.push(Bar {
                color: Color::B,
                center: num(fields[7])?,
                length: num(fields[8])? as u32,
            });
        }
        let scene = Scene { bars };
        let label = label_scene(&scene, &spec.space)?;
        let input = fields[9..]
            .iter()
            .map(|s| num(s))
            .collect::<Result<Vec<_>>>()?;
        out.data.push(input, Target::Class(class));
        out.scenes.push(scene);
        out.labels.push(label);
        out.classes.push(class);
    }
    Ok(out)
}
