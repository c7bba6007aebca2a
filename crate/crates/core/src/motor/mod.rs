//! The motor-equivalence task: who acted (eye, hand, or both), given a
//! pointing direction encoded by a bank of Von Mises tuned cells.
//!
//! A sample is a pair `(condition, theta)`. The input layer is a fixed
//! transducer of 55 tuned cells split into four sub-populations; targets are
//! either the symmetric root-of-unity code plus `(cos, sin)` of the angle, or
//! the asymmetric scalar code.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlp::{seeded_rng, Dataset, Target};

pub const N_CELLS: usize = 55;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    E,
    H,
    Eh,
}

pub const CONDITIONS: [Condition; 3] = [Condition::E, Condition::H, Condition::Eh];

impl Condition {
    pub fn index(self) -> usize {
        match self {
            Condition::E => 0,
            Condition::H => 1,
            Condition::Eh => 2,
        }
    }

    pub fn from_index(i: usize) -> Condition {
        CONDITIONS[i]
    }

    pub fn name(self) -> &'static str {
        match self {
            Condition::E => "E",
            Condition::H => "H",
            Condition::Eh => "EH",
        }
    }

    pub fn parse(s: &str) -> Result<Condition> {
        match s {
            "E" => Ok(Condition::E),
            "H" => Ok(Condition::H),
            "EH" => Ok(Condition::Eh),
            other => Err(Error::Parse(format!("unknown condition {other:?}"))),
        }
    }
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut t = theta % two_pi;
    if t <= -std::f64::consts::PI {
        t += two_pi;
    } else if t > std::f64::consts::PI {
        t -= two_pi;
    }
    t
}

/// Modified Bessel function of the first kind, order zero.
///
/// Power series for moderate arguments, asymptotic expansion beyond; both
/// good to about 1e-14 relative over the range used here.
pub fn bessel_i0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 15.0 {
        let q = ax * ax / 4.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            term *= q / ((k * k) as f64);
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        sum
    } else {
        // I0(x) ~ e^x / sqrt(2 pi x) * sum_k a_k / x^k
        let mut sum = 1.0;
        let mut num = 1.0;
        for k in 1..20u32 {
            let kf = k as f64;
            num *= (2.0 * kf - 1.0) * (2.0 * kf - 1.0) / (8.0 * kf);
            sum += num / ax.powi(k as i32);
        }
        ax.exp() / (std::f64::consts::TAU * ax).sqrt() * sum
    }
}

/// Von Mises density `exp(kappa cos(theta - mu)) / (2 pi I0(kappa))`.
pub fn von_mises(theta: f64, mu: f64, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidConfig("kappa must be > 0".into()));
    }
    Ok((kappa * (theta - mu).cos()).exp() / (std::f64::consts::TAU * bessel_i0(kappa)))
}

/// Peak value of the Von Mises density, reached at `theta = mu`.
pub fn von_mises_peak(kappa: f64) -> f64 {
    kappa.exp() / (std::f64::consts::TAU * bessel_i0(kappa))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellFamily {
    /// Same preferred angle under every condition.
    Type1,
    /// H preference orthogonal to E; EH near E.
    Type2A,
    /// H orthogonal to E; EH near H.
    Type2B,
    /// H orthogonal to E; EH elsewhere.
    Type2C,
}

pub const FAMILY_COUNTS: [(CellFamily, usize); 4] = [
    (CellFamily::Type1, 17),
    (CellFamily::Type2A, 13),
    (CellFamily::Type2B, 13),
    (CellFamily::Type2C, 12),
];

/// Concentration per condition: E -> 1.0, H -> 2.0, EH -> 1.5.
pub const KAPPA: [f64; 3] = [1.0, 2.0, 1.5];

#[derive(Debug, Clone)]
pub struct TuningPopulation {
    /// `preferred[c][x]` is the preferred angle of cell `x` under condition
    /// `c`; each row is a permutation of the equipartition centers.
    pub preferred: [Vec<f64>; 3],
    pub family: Vec<CellFamily>,
}

/// Centers of the 55 equipartition subintervals of `(-pi, pi]`.
pub fn equipartition_centers() -> Vec<f64> {
    let step = std::f64::consts::TAU / N_CELLS as f64;
    (0..N_CELLS)
        .map(|i| -std::f64::consts::PI + (i as f64 + 0.5) * step)
        .collect()
}

/// Grid steps approximating a quarter turn (pi/2 is 13.75 steps of 55).
const ORTHO_STEPS: i64 = 14;
/// Grid steps used for the Type2C "elsewhere" EH preference.
const ELSEWHERE_STEPS: i64 = 27;

impl TuningPopulation {
    pub fn kappa(&self, condition: Condition) -> f64 {
        KAPPA[condition.index()]
    }

    pub fn preferred_angle(&self, cell: usize, condition: Condition) -> f64 {
        self.preferred[condition.index()][cell]
    }

    pub fn cells_of(&self, family: CellFamily) -> Vec<usize> {
        (0..N_CELLS).filter(|&x| self.family[x] == family).collect()
    }

    pub fn type1_cells(&self) -> Vec<usize> {
        self.cells_of(CellFamily::Type1)
    }

    pub fn type2_cells(&self) -> Vec<usize> {
        (0..N_CELLS)
            .filter(|&x| self.family[x] != CellFamily::Type1)
            .collect()
    }
}

fn circular_slot_distance(a: i64, b: i64) -> i64 {
    let n = N_CELLS as i64;
    let d = (a - b).rem_euclid(n);
    d.min(n - d)
}

/// Assigns cells to free slots near their targets, layer by layer of
/// increasing displacement, which keeps the worst displacement small.
fn assign_nearest_free(targets: &[(usize, i64)], taken: &mut [bool], out: &mut [usize]) {
    let n = N_CELLS as i64;
    let mut unassigned: Vec<(usize, i64)> = targets.to_vec();
    for d in 0..n {
        for sign in [1i64, -1] {
            if d == 0 && sign < 0 {
                continue;
            }
            unassigned.retain(|&(cell, target)| {
                let slot = (target + sign * d).rem_euclid(n) as usize;
                if taken[slot] {
                    true
                } else {
                    taken[slot] = true;
                    out[cell] = slot;
                    false
                }
            });
        }
        if unassigned.is_empty() {
            break;
        }
    }
    assert!(unassigned.is_empty(), "a free slot always remains");
}

/// Builds the 55-cell population: equipartition centers, per-condition
/// permutations, quarter-turn E/H offsets for type-2 cells, and "Gaussian
/// like" jitter (wrapped normal, 10 degrees) discretized to grid steps.
pub fn build_population(seed: u64) -> TuningPopulation {
    let mut rng = seeded_rng(seed ^ 0x706f70); // decouple from training streams
    let centers = equipartition_centers();
    let step_deg = 360.0 / N_CELLS as f64;
    let jitter = |rng: &mut rand_chacha::ChaCha12Rng| -> i64 {
        // Box-Muller, sigma = 10 degrees in grid steps, clamped to +/-2.
        let u1: f64 = rng.gen_range(1e-12..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        ((z * 10.0 / step_deg).round() as i64).clamp(-2, 2)
    };

    // Type1 slots spread evenly over the circle; families shuffled over the
    // rest.
    let type1_slots: Vec<usize> = (0..17).map(|i| (i * N_CELLS) / 17).collect();
    let mut family = vec![CellFamily::Type2A; N_CELLS];
    for &s in &type1_slots {
        family[s] = CellFamily::Type1;
    }
    let mut rest: Vec<usize> = (0..N_CELLS).filter(|x| !type1_slots.contains(x)).collect();
    {
        use rand::seq::SliceRandom;
        rest.shuffle(&mut rng);
    }
    for (i, &cell) in rest.iter().enumerate() {
        family[cell] = if i < 13 {
            CellFamily::Type2A
        } else if i < 26 {
            CellFamily::Type2B
        } else {
            CellFamily::Type2C
        };
    }

    // E: identity permutation (cells are indexed by their E preference).
    let slot_e: Vec<usize> = (0..N_CELLS).collect();

    // H: type-1 cells keep their slot, type-2 cells shift a quarter turn.
    let mut slot_h = vec![0usize; N_CELLS];
    let mut taken = vec![false; N_CELLS];
    for &x in &type1_slots {
        slot_h[x] = x;
        taken[x] = true;
    }
    let mut targets: Vec<(usize, i64)> = rest.iter().map(|&x| (x, x as i64 + ORTHO_STEPS)).collect();
    assign_nearest_free(&targets, &mut taken, &mut slot_h);

    // EH: type-1 keep their slot; 2A near E, 2B near H, 2C elsewhere.
    let mut slot_eh = vec![0usize; N_CELLS];
    let mut taken = vec![false; N_CELLS];
    for &x in &type1_slots {
        slot_eh[x] = x;
        taken[x] = true;
    }
    targets = rest
        .iter()
        .map(|&x| {
            let base = match family[x] {
                CellFamily::Type2A => x as i64,
                CellFamily::Type2B => slot_h[x] as i64,
                CellFamily::Type2C => x as i64 + ELSEWHERE_STEPS,
                CellFamily::Type1 => unreachable!(),
            };
            (x, base + jitter(&mut rng))
        })
        .collect();
    assign_nearest_free(&targets, &mut taken, &mut slot_eh);

    let angles = |slots: &[usize]| -> Vec<f64> { slots.iter().map(|&s| centers[s]).collect() };
    TuningPopulation {
        preferred: [angles(&slot_e), angles(&slot_h), angles(&slot_eh)],
        family,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotorSample {
    pub condition: Condition,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetEncoding {
    /// `(Re z_a, Im z_a, cos theta, sin theta)` with the three roots of
    /// unity for the conditions.
    SymmetricZ,
    /// `(z', cos theta, sin theta)` with z' = -1 for E, 0 for H, +1 for EH.
    AsymmetricZPrime,
}

impl TargetEncoding {
    pub fn output_size(self) -> usize {
        match self {
            TargetEncoding::SymmetricZ => 4,
            TargetEncoding::AsymmetricZPrime => 3,
        }
    }
}

/// Root of unity for a condition: E -> 1, H -> omega, EH -> omega^2.
pub fn condition_root(c: Condition) -> (f64, f64) {
    let h = 3.0f64.sqrt() / 2.0;
    match c {
        Condition::E => (1.0, 0.0),
        Condition::H => (-0.5, h),
        Condition::Eh => (-0.5, -h),
    }
}

const Z_PRIME: [f64; 3] = [-1.0, 0.0, 1.0];

pub fn encode_target(sample: &MotorSample, mode: TargetEncoding) -> Vec<f64> {
    let (u, v) = (sample.theta.cos(), sample.theta.sin());
    match mode {
        TargetEncoding::SymmetricZ => {
            let (zr, zi) = condition_root(sample.condition);
            vec![zr, zi, u, v]
        }
        TargetEncoding::AsymmetricZPrime => vec![Z_PRIME[sample.condition.index()], u, v],
    }
}

/// Activation vector of the input layer for one sample.
pub fn encode_input(sample: &MotorSample, pop: &TuningPopulation) -> Vec<f64> {
    let kappa = pop.kappa(sample.condition);
    let angles = &pop.preferred[sample.condition.index()];
    angles
        .iter()
        .map(|&mu| von_mises(sample.theta, mu, kappa).expect("kappa > 0"))
        .collect()
}

/// Nearest-target decoding of a network output. Ties break in the fixed
/// order E < H < EH.
pub fn decode_output(output: &[f64], mode: TargetEncoding) -> Result<(Condition, f64)> {
    if output.len() != mode.output_size() {
        return Err(Error::Shape(format!(
            "output has {} components, encoding expects {}",
            output.len(),
            mode.output_size()
        )));
    }
    if output.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("non-finite output".into()));
    }
    match mode {
        TargetEncoding::SymmetricZ => {
            let (z1, z2) = (output[0], output[1]);
            let mut best = Condition::E;
            let mut best_d = f64::INFINITY;
            for c in CONDITIONS {
                let (r, i) = condition_root(c);
                let d = (z1 - r) * (z1 - r) + (z2 - i) * (z2 - i);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            Ok((best, output[3].atan2(output[2])))
        }
        TargetEncoding::AsymmetricZPrime => {
            let z = output[0];
            let mut best = Condition::E;
            let mut best_d = f64::INFINITY;
            for c in CONDITIONS {
                let d = (z - Z_PRIME[c.index()]).abs();
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            Ok((best, output[2].atan2(output[1])))
        }
    }
}

/// Population-vector estimate of the angle: resultant of the preferred
/// angles weighted by the activities.
///
/// Errors when the resultant vanishes (all-zero or perfectly balanced
/// activity).
pub fn population_vector_decode<I>(pairs: I) -> Result<f64>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let (mut sx, mut sy, mut mass) = (0.0, 0.0, 0.0);
    for (activity, angle) in pairs {
        sx += activity * angle.cos();
        sy += activity * angle.sin();
        mass += activity.abs();
    }
    let norm = (sx * sx + sy * sy).sqrt();
    if mass == 0.0 || norm <= 1e-9 * mass {
        return Err(Error::UndefinedAngle);
    }
    Ok(sy.atan2(sx))
}

/// Result of the four-step decode: angle vote, logical condition vote,
/// refined angle, and the step-4 consistency check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogicalDecode {
    pub condition: Condition,
    pub theta: f64,
    pub consistent: bool,
}

/// Cells whose normalized reading falls within this band of the 1/2
/// threshold are dropped from the condition vote.
pub const VOTE_AMBIGUITY_MARGIN: f64 = 0.1;

fn condition_votes(
    input: &[f64],
    pop: &TuningPopulation,
    theta: f64,
    margin: f64,
) -> [u32; 3] {
    let mut votes = [0u32; 3];
    for &x in &pop.type2_cells() {
        for c in CONDITIONS {
            let kappa = pop.kappa(c);
            let peak = von_mises_peak(kappa);
            let observed = input[x] / peak;
            if (observed - 0.5).abs() < margin {
                continue;
            }
            let predicted = von_mises(theta, pop.preferred_angle(x, c), kappa).unwrap() / peak;
            if (observed > 0.5) == (predicted > 0.5) {
                votes[c.index()] += 1;
            }
        }
    }
    votes
}

fn vote_winner(votes: &[u32; 3]) -> Condition {
    let mut best = Condition::E;
    for c in CONDITIONS {
        if votes[c.index()] > votes[best.index()] {
            best = c;
        }
    }
    best
}

/// The mixed decode: population-vector angle from type-1 cells, condition by
/// majority over simple threshold propositions at that angle, angle refined
/// with the full population, then a consistency re-vote.
pub fn logical_conditioning_decode(input: &[f64], pop: &TuningPopulation) -> Result<LogicalDecode> {
    logical_conditioning_decode_with_margin(input, pop, VOTE_AMBIGUITY_MARGIN)
}

pub fn logical_conditioning_decode_with_margin(
    input: &[f64],
    pop: &TuningPopulation,
    margin: f64,
) -> Result<LogicalDecode> {
    if input.len() != N_CELLS {
        return Err(Error::Shape(format!(
            "input has {} components, expected {N_CELLS}",
            input.len()
        )));
    }
    // Step 1: angle from the type-1 sub-population (shared preferred angle).
    let type1 = pop.type1_cells();
    let theta1 = population_vector_decode(
        type1
            .iter()
            .map(|&x| (input[x], pop.preferred_angle(x, Condition::E))),
    )?;

    // Step 2: condition by majority over the simple propositions.
    let condition = vote_winner(&condition_votes(input, pop, theta1, margin));

    // Step 3: refine the angle using the full population under the chosen
    // condition.
    let theta2 = population_vector_decode(
        (0..N_CELLS).map(|x| (input[x], pop.preferred_angle(x, condition))),
    )?;

    // Step 4: the refined angle must re-elect the same condition.
    let check = vote_winner(&condition_votes(input, pop, theta2, margin));
    Ok(LogicalDecode {
        condition,
        theta: theta2,
        consistent: check == condition,
    })
}

/// Labeled motor dataset: network inputs/targets plus the generating samples.
#[derive(Debug, Clone)]
pub struct MotorDataset {
    pub data: Dataset,
    pub samples: Vec<MotorSample>,
    pub encoding: TargetEncoding,
}

/// Uniform seeded sampling of `(condition, theta)` pairs with encodings.
pub fn generate_dataset(
    n: usize,
    seed: u64,
    mode: TargetEncoding,
    pop: &TuningPopulation,
) -> MotorDataset {
    let mut rng = seeded_rng(seed);
    let mut data = Dataset::default();
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let condition = CONDITIONS[rng.gen_range(0..3)];
        // theta uniform on (-pi, pi]
        let u: f64 = rng.gen_range(0.0..1.0);
        let theta = std::f64::consts::PI - u * std::f64::consts::TAU;
        let sample = MotorSample { condition, theta };
        data.push(
            encode_input(&sample, pop),
            Target::Vector(encode_target(&sample, mode)),
        );
        samples.push(sample);
    }
    MotorDataset {
        data,
        samples,
        encoding: mode,
    }
}

/// CSV dump: `condition,theta,<55 inputs>,<target components>`.
pub fn dataset_to_csv(ds: &MotorDataset) -> String {
    let mut out = String::new();
    out.push_str("condition,theta");
    for i in 0..N_CELLS {
        out.push_str(&format!(",x{i}"));
    }
    for i in 0..ds.encoding.output_size() {
        out.push_str(&format!(",t{i}"));
    }
    out.push('\n');
    for (i, s) in ds.samples.iter().enumerate() {
        out.push_str(&format!("{},{}", s.condition, s.theta));
        for v in &ds.data.inputs[i] {
            out.push_str(&format!(",{v}"));
        }
        if let Target::Vector(t) = &ds.data.targets[i] {
            for v in t {
                out.push_str(&format!(",{v}"));
            }
        }
        out.push('\n');
    }
    out
}

pub fn dataset_from_csv(text: &str, encoding: TargetEncoding) -> Result<MotorDataset> {
    let mut lines = text.lines();
    let _header = lines.next().ok_or_else(|| Error::Parse("empty csv".into()))?;
    let mut ds = MotorDataset {
        data: Dataset::default(),
        samples: Vec::new(),
        encoding,
    };
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let expected = 2 + N_CELLS + encoding.output_size();
        if fields.len() != expected {
            return Err(Error::Parse(format!(
                "expected {expected} fields, got {}",
                fields.len()
            )));
        }
        let condition = Condition::parse(fields[0])?;
        let theta: f64 = fields[1]
            .parse()
            .map_err(|e| Error::Parse(format!("theta: {e}")))?;
        let parse = |s: &&str| -> Result<f64> {
            s.parse().map_err(|e| Error::Parse(format!("number: {e}")))
        };
        let input = fields[2..2 + N_CELLS]
            .iter()
            .map(parse)
            .collect::<Result<Vec<_>>>()?;
        let target = fields[2 + N_CELLS..]
            .iter()
            .map(parse)
            .collect::<Result<Vec<_>>>()?;
        ds.samples.push(MotorSample { condition, theta });
        ds.data.push(input, Target::Vector(target));
    }
    Ok(ds)
}
