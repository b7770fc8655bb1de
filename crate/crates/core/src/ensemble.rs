//! Seeded ensembles of inverse temperatures for the multi-level model.
//!
//! Every step from seed to sample is pinned so that an ensemble can be
//! regenerated bit for bit anywhere:
//!
//! * generator: ChaCha20 seeded with `seed_from_u64(seed)`, read with `next_u64`;
//! * uniform: `u = ((x >> 11) + 0.5) · 2⁻⁵³`, which lies strictly inside (0, 1);
//! * normal: Box–Muller cosine branch, two uniforms per draw,
//!   `z = √(−2 ln u₁) · cos(2π u₂)`;
//! * Weibull: inverse CDF, `x = scale · (−ln u)^{1/k}`.
//!
//! Distribution parameters are in units of `βω`; the stored `β` is `x/ω`.
//! Non-positive draws are rejected and redrawn.

use std::fmt::Write as _;
use std::path::Path;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::output::write_atomic;
use crate::superstat::MultiLevelSuperstat;

pub const REJECTION_LIMIT: usize = 1_000_000;

/// Weibull scale giving mean 3 at shape 2, i.e. `3/Γ(1.5)`.
pub const DEFAULT_WEIBULL_SCALE: f64 = 3.385_137_501_286_538;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "distribution", rename_all = "snake_case")]
pub enum BetaShape {
    Normal { mean: f64, sd: f64 },
    Weibull { scale: f64, k: f64 },
}

impl BetaShape {
    pub fn default_normal() -> Self {
        BetaShape::Normal { mean: 3.0, sd: 0.3 }
    }

    pub fn default_weibull() -> Self {
        BetaShape::Weibull {
            scale: DEFAULT_WEIBULL_SCALE,
            k: 2.0,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            BetaShape::Normal { mean, sd } => {
                if !mean.is_finite() {
                    return Err(Error::InvalidParameter {
                        name: "mean",
                        value: mean,
                        reason: "must be finite",
                    });
                }
                check_positive("sd", sd)
            }
            BetaShape::Weibull { scale, k } => {
                check_positive("scale", scale)?;
                check_positive("k", k)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaEnsembleSpec {
    pub shape: BetaShape,
    pub count: usize,
    pub seed: u64,
    pub omega: f64,
}

impl BetaEnsembleSpec {
    pub fn new(shape: BetaShape, count: usize, seed: u64, omega: f64) -> Result<Self> {
        let spec = BetaEnsembleSpec {
            shape,
            count,
            seed,
            omega,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidParameter {
                name: "count",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        check_positive("omega", self.omega)?;
        self.shape.validate()
    }
}

struct PinnedStream(ChaCha20Rng);

impl PinnedStream {
    fn new(seed: u64) -> Self {
        PinnedStream(ChaCha20Rng::seed_from_u64(seed))
    }

    fn uniform(&mut self) -> f64 {
        ((self.0.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    fn draw(&mut self, shape: &BetaShape) -> f64 {
        match *shape {
            BetaShape::Normal { mean, sd } => {
                let (u1, u2) = (self.uniform(), self.uniform());
                mean + sd * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            }
            BetaShape::Weibull { scale, k } => scale * (-self.uniform().ln()).powf(1.0 / k),
        }
    }
}

/// The raw `β_k` list for `spec`, in draw order.
pub fn draw_betas(spec: &BetaEnsembleSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut rng = PinnedStream::new(spec.seed);
    let mut out = Vec::with_capacity(spec.count);
    let mut rejected = 0;
    while out.len() < spec.count {
        let x = rng.draw(&spec.shape);
        if x > 0.0 && x.is_finite() {
            out.push(x / spec.omega);
            rejected = 0;
        } else {
            rejected += 1;
            if rejected > REJECTION_LIMIT {
                return Err(Error::RejectionOverflow { limit: REJECTION_LIMIT });
            }
        }
    }
    Ok(out)
}

pub fn sample_betas(spec: &BetaEnsembleSpec) -> Result<MultiLevelSuperstat> {
    MultiLevelSuperstat::new(draw_betas(spec)?, spec.omega)
}

/// A stored ensemble: its generating spec and the drawn values.
#[derive(Clone, Debug, PartialEq)]
pub struct BetaSamples {
    pub spec: BetaEnsembleSpec,
    pub betas: Vec<f64>,
}

impl BetaSamples {
    pub fn generate(spec: BetaEnsembleSpec) -> Result<Self> {
        Ok(BetaSamples {
            betas: draw_betas(&spec)?,
            spec,
        })
    }

    pub fn superstat(&self) -> Result<MultiLevelSuperstat> {
        MultiLevelSuperstat::new(self.betas.clone(), self.spec.omega)
    }

    /// Spec JSON on the first line, then one `β` per line.
    pub fn to_text(&self) -> Result<String> {
        let mut s = serde_json::to_string(&self.spec)?;
        s.push('\n');
        for b in &self.betas {
            writeln!(s, "{b}").expect("writing to a String cannot fail");
        }
        Ok(s)
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let (_, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "empty file, expected a spec header".into()))?;
        let spec: BetaEnsembleSpec =
            serde_json::from_str(header).map_err(|e| parse_err(1, format!("bad spec header: {e}")))?;
        spec.validate().map_err(|e| parse_err(1, e.to_string()))?;
        let mut betas = Vec::with_capacity(spec.count);
        for (line, l) in lines {
            if l.is_empty() {
                continue;
            }
            let b: f64 = l
                .parse()
                .map_err(|e| parse_err(line, format!("entry {}: `{l}` is not a number: {e}", betas.len() + 1)))?;
            if !(b > 0.0 && b.is_finite()) {
                return Err(parse_err(
                    line,
                    format!("entry {}: beta = {b} must be positive and finite", betas.len() + 1),
                ));
            }
            betas.push(b);
        }
        if betas.len() != spec.count {
            return Err(parse_err(
                text.lines().count(),
                format!("header declares {} samples, file holds {}", spec.count, betas.len()),
            ));
        }
        Ok(BetaSamples { spec, betas })
    }
}

pub fn save_betas(path: &Path, samples: &BetaSamples) -> Result<()> {
    write_atomic(path, samples.to_text()?.as_bytes())
}

pub fn load_betas(path: &Path) -> Result<BetaSamples> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    BetaSamples::from_text(&text, path)
}
