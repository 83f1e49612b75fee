//! Embeddings of 2-tuples `(x, y)`, used as COMBINE steps, and their
//! empirical distortion against the tuple metric `‖x−x′‖_p + ‖y−y′‖_p`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embeddings::{sample_interval, sample_sphere};
use crate::error::{ensure_finite, invalid, Error, Result};
use crate::linalg::{dist_p, dot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineKind {
    /// `α·x + y`, `α ~ U[−D, D]`; needs `dim x = dim y`.
    LinearCombination,
    /// `A x + y` with unit-norm rows of `A`.
    LtSum,
    /// `[x; y]`.
    Concatenation,
    /// `θ · [x; y]` with `θ` on the unit sphere; scalar output.
    ConcatProject,
}

impl CombineKind {
    pub const ALL: [CombineKind; 4] =
        [CombineKind::LinearCombination, CombineKind::LtSum, CombineKind::Concatenation, CombineKind::ConcatProject];

    pub fn name(self) -> &'static str {
        match self {
            CombineKind::LinearCombination => "linear_combination",
            CombineKind::LtSum => "lt_sum",
            CombineKind::Concatenation => "concatenation",
            CombineKind::ConcatProject => "concat_project",
        }
    }

    /// Output dimension of one instance for inputs of dimension `k` and `l`.
    pub fn output_dim(self, k: usize, l: usize) -> Result<usize> {
        match self {
            CombineKind::LinearCombination if k != l => Err(Error::DimensionMismatch { expected: k, found: l }),
            CombineKind::LinearCombination | CombineKind::LtSum => Ok(l),
            CombineKind::Concatenation => Ok(k + l),
            CombineKind::ConcatProject => Ok(1),
        }
    }

    pub fn sample<R: Rng + ?Sized>(self, k: usize, l: usize, range_d: f64, rng: &mut R) -> CombineParams {
        match self {
            CombineKind::LinearCombination => CombineParams::LinearCombination { alpha: sample_interval(range_d, rng) },
            CombineKind::LtSum => CombineParams::LtSum { a: (0..l).map(|_| sample_sphere(k, rng)).collect() },
            CombineKind::Concatenation => CombineParams::Concatenation,
            CombineKind::ConcatProject => CombineParams::ConcatProject { theta: sample_sphere(k + l, rng) },
        }
    }
}

impl std::str::FromStr for CombineKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear_combination" | "linear" => Ok(CombineKind::LinearCombination),
            "lt_sum" => Ok(CombineKind::LtSum),
            "concatenation" | "concat" => Ok(CombineKind::Concatenation),
            "concat_project" => Ok(CombineKind::ConcatProject),
            _ => Err(invalid(format!(
                "unknown combine '{s}' (linear_combination, lt_sum, concatenation, concat_project)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum CombineParams {
    LinearCombination { alpha: f64 },
    LtSum { a: Vec<Vec<f64>> },
    Concatenation,
    ConcatProject { theta: Vec<f64> },
}

impl CombineParams {
    pub fn kind(&self) -> CombineKind {
        match self {
            CombineParams::LinearCombination { .. } => CombineKind::LinearCombination,
            CombineParams::LtSum { .. } => CombineKind::LtSum,
            CombineParams::Concatenation => CombineKind::Concatenation,
            CombineParams::ConcatProject { .. } => CombineKind::ConcatProject,
        }
    }
}

/// Writes the combination of `x` and `y` into `out` without validation.
#[inline]
pub(crate) fn combine_into(x: &[f64], y: &[f64], params: &CombineParams, out: &mut Vec<f64>) {
    match params {
        CombineParams::LinearCombination { alpha } => out.extend(x.iter().zip(y).map(|(a, b)| alpha * a + b)),
        CombineParams::LtSum { a } => out.extend(a.iter().zip(y).map(|(row, b)| dot(row, x) + b)),
        CombineParams::Concatenation => {
            out.extend_from_slice(x);
            out.extend_from_slice(y);
        }
        CombineParams::ConcatProject { theta } => {
            let (tx, ty) = theta.split_at(x.len());
            out.push(dot(tx, x) + dot(ty, y));
        }
    }
}

pub fn combine(x: &[f64], y: &[f64], params: &CombineParams) -> Result<Vec<f64>> {
    ensure_finite(x, "combine input")?;
    ensure_finite(y, "combine input")?;
    let (k, l) = (x.len(), y.len());
    match params {
        CombineParams::LinearCombination { .. } => {
            params.kind().output_dim(k, l)?;
        }
        CombineParams::LtSum { a } => {
            if a.len() != l {
                return Err(Error::DimensionMismatch { expected: a.len(), found: l });
            }
            if let Some(row) = a.iter().find(|r| r.len() != k) {
                return Err(Error::DimensionMismatch { expected: row.len(), found: k });
            }
        }
        CombineParams::Concatenation => {}
        CombineParams::ConcatProject { theta } => {
            if theta.len() != k + l {
                return Err(Error::DimensionMismatch { expected: theta.len(), found: k + l });
            }
        }
    }
    let mut out = Vec::new();
    combine_into(x, y, params, &mut out);
    Ok(out)
}

/// A pair of 2-tuples `((x, y), (x′, y′))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuplePair {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub x2: Vec<f64>,
    pub y2: Vec<f64>,
}

impl TuplePair {
    pub fn distance(&self, p: f64) -> f64 {
        dist_p(&self.x, &self.x2, p) + dist_p(&self.y, &self.y2, p)
    }
}

/// Stacked instances with outputs scaled by `W^{−1/p}`.
fn stacked(x: &[f64], y: &[f64], instances: &[CombineParams], p: f64) -> Vec<f64> {
    let scale = (instances.len() as f64).powf(-1.0 / p);
    let mut out = Vec::new();
    for inst in instances {
        combine_into(x, y, inst, &mut out);
    }
    out.iter_mut().for_each(|v| *v *= scale);
    out
}

/// Empirical distortion of one combine variant at one width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionRow {
    pub variant: CombineKind,
    pub in_dim: usize,
    pub width: usize,
    pub distortion: f64,
}

/// For every variant and width, draws `samples` independent stacked
/// instances and reports the mean over draws of `max ratio / min ratio`,
/// where the ratio is output distance over tuple distance across `pairs`.
/// `D = 1` for the linear combination.
pub fn combine_distortion_study(
    in_dim: usize,
    widths: &[usize],
    pairs: &[TuplePair],
    samples: usize,
    p: f64,
    seed: u64,
) -> Result<Vec<DistortionRow>> {
    if pairs.len() < 2 {
        return Err(invalid("distortion needs at least two pairs"));
    }
    if samples == 0 || widths.contains(&0) {
        return Err(invalid("samples and widths must be positive"));
    }
    for t in pairs {
        if t.x.len() != in_dim || t.y.len() != in_dim || t.x2.len() != in_dim || t.y2.len() != in_dim {
            return Err(Error::DimensionMismatch { expected: in_dim, found: t.x.len() });
        }
    }
    let input: Vec<f64> = pairs.iter().map(|t| t.distance(p)).collect();
    if input.iter().all(|&d| d == 0.0) {
        return Err(invalid("all tuple pairs are identical"));
    }
    let mut rows = Vec::new();
    for (vi, &variant) in CombineKind::ALL.iter().enumerate() {
        for (wi, &width) in widths.iter().enumerate() {
            let stream_base = ((vi * widths.len() + wi) * samples) as u64;
            let mut total = 0.0;
            for s in 0..samples {
                let mut rng = crate::rng::stream(seed, stream_base + s as u64);
                let inst: Vec<CombineParams> =
                    (0..width).map(|_| variant.sample(in_dim, in_dim, 1.0, &mut rng)).collect();
                let ratios: Vec<f64> = pairs
                    .iter()
                    .zip(&input)
                    .filter(|(_, &d)| d > 0.0)
                    .map(|(t, &d)| dist_p(&stacked(&t.x, &t.y, &inst, p), &stacked(&t.x2, &t.y2, &inst, p), p) / d)
                    .collect();
                total += crate::analysis::distortion(&ratios)?;
            }
            rows.push(DistortionRow { variant, in_dim, width, distortion: total / samples as f64 });
        }
    }
    Ok(rows)
}
