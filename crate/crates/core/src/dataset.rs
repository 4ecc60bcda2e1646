//! Two-qubit state discrimination data and the Helstrom bound.
//!
//! Label −1 samples are the pure states `|φ_u⟩ = √(1−u²)|00⟩ + u|10⟩`;
//! label +1 samples are `ρ_2(v) = ½(|φ_{+v}⟩⟨φ_{+v}| + |φ_{−v}⟩⟨φ_{−v}|)` with
//! `|φ_{±v}⟩ = ±√(1−v²)|01⟩ + v|10⟩`. A sample is −1 with probability 1/3 and
//! `u, v` are uniform on `[0, 1]`.

use std::io::{self, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::qnn::Label;
use crate::state::{self, DensityOperator, PureState};

/// Probability of drawing a label −1 sample.
pub const MINUS_PROBABILITY: f64 = 1.0 / 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} = {x} is outside [0, 1]")))
    }
}

pub fn phi_u(u: f64) -> Result<PureState> {
    check_unit("u", u)?;
    PureState::from_real(&[(1.0 - u * u).sqrt(), 0.0, u, 0.0])
}

pub fn phi_pm_v(v: f64, sign: Sign) -> Result<PureState> {
    check_unit("v", v)?;
    let s = match sign {
        Sign::Plus => 1.0,
        Sign::Minus => -1.0,
    };
    PureState::from_real(&[0.0, s * (1.0 - v * v).sqrt(), v, 0.0])
}

pub fn rho1(u: f64) -> Result<DensityOperator> {
    Ok(state::from_ket(&phi_u(u)?))
}

pub fn rho2(v: f64) -> Result<DensityOperator> {
    let plus = state::from_ket(&phi_pm_v(v, Sign::Plus)?);
    let minus = state::from_ket(&phi_pm_v(v, Sign::Minus)?);
    DensityOperator::new((plus.into_matrix() + minus.into_matrix()).scale(0.5))
}

/// Which family a sample came from, with the parameter that built it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Origin {
    /// `ρ_1(u)`.
    U,
    /// `ρ_2(v)`.
    V,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample {
    pub rho: DensityOperator,
    pub label: Label,
    pub origin: Origin,
    pub u: f64,
    pub v: f64,
}

impl LabeledSample {
    pub fn pair(&self) -> (&DensityOperator, Label) {
        (&self.rho, self.label)
    }
}

/// Draws the label coin, then `u`, then `v`; both parameters are drawn for
/// every sample so the stream position does not depend on the label.
pub fn draw_sample<R: Rng + ?Sized>(rng: &mut R) -> LabeledSample {
    let minus = rng.random::<f64>() < MINUS_PROBABILITY;
    let u = rng.random::<f64>();
    let v = rng.random::<f64>();
    if minus {
        LabeledSample {
            rho: rho1(u).expect("u drawn from [0, 1)"),
            label: -1,
            origin: Origin::U,
            u,
            v,
        }
    } else {
        LabeledSample {
            rho: rho2(v).expect("v drawn from [0, 1)"),
            label: 1,
            origin: Origin::V,
            u,
            v,
        }
    }
}

/// Endless sample stream over an owned generator.
#[derive(Clone, Debug)]
pub struct SampleStream<R> {
    rng: R,
}

impl<R: Rng> SampleStream<R> {
    pub fn new(rng: R) -> Self {
        SampleStream { rng }
    }
}

impl<R: Rng> Iterator for SampleStream<R> {
    type Item = LabeledSample;

    fn next(&mut self) -> Option<LabeledSample> {
        Some(draw_sample(&mut self.rng))
    }
}

/// Running `Σ_j y_j ρ_j` over a batch.
#[derive(Clone, Debug)]
pub struct SignedSum {
    sum: Option<CMatrix>,
    count: usize,
}

impl Default for SignedSum {
    fn default() -> Self {
        Self::new()
    }
}

impl SignedSum {
    pub fn new() -> Self {
        SignedSum {
            sum: None,
            count: 0,
        }
    }

    pub fn add(&mut self, rho: &DensityOperator, y: Label) -> Result<()> {
        let sign = match y {
            1 => 1.0,
            -1 => -1.0,
            other => return Err(Error::domain(format!("label {other} is not ±1"))),
        };
        match &mut self.sum {
            Some(sum) => {
                if sum.nrows() != rho.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: sum.nrows(),
                        found: rho.dim(),
                    });
                }
                *sum += rho.matrix().scale(sign);
            }
            None => self.sum = Some(rho.matrix().scale(sign)),
        }
        self.count += 1;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// `½(1 − ‖(1/m) Σ_j y_j ρ_j‖₁)`.
    pub fn optimal_loss(&self) -> Result<f64> {
        let sum = self
            .sum
            .as_ref()
            .ok_or_else(|| Error::domain("Helstrom loss of an empty batch"))?;
        let norm = state::trace_norm(&sum.unscale(self.count as f64))?;
        Ok(0.5 * (1.0 - norm))
    }
}

/// Minimum average expected 0-1 loss over all two-outcome measurements.
pub fn helstrom_optimal_loss<'a, I>(batch: I) -> Result<f64>
where
    I: IntoIterator<Item = (&'a DensityOperator, Label)>,
{
    let mut acc = SignedSum::new();
    for (rho, y) in batch {
        acc.add(rho, y)?;
    }
    acc.optimal_loss()
}

/// Exact population value of the signed sum `E[y ρ]` for the sampling law
/// above, obtained by integrating `u` and `v` over `[0, 1]`.
pub fn population_signed_sum() -> CMatrix {
    let p = MINUS_PROBABILITY;
    // E[1 − u²] = 2/3, E[u²] = 1/3, E[u √(1 − u²)] = 1/3, E[v²] = 1/3.
    let mut s = CMatrix::zeros(4, 4);
    s[(0, 0)] = C64::from(-p * 2.0 / 3.0);
    s[(2, 2)] = C64::from(-p / 3.0 + (1.0 - p) / 3.0);
    s[(0, 2)] = C64::from(-p / 3.0);
    s[(2, 0)] = C64::from(-p / 3.0);
    s[(1, 1)] = C64::from((1.0 - p) * 2.0 / 3.0);
    s
}

/// Helstrom loss of the sampling distribution itself.
pub fn population_optimal_loss() -> f64 {
    let norm: f64 = linalg::hermitian_eigenvalues(&population_signed_sum())
        .iter()
        .map(|x| x.abs())
        .sum();
    0.5 * (1.0 - norm)
}

/// CSV dump with header `index,label,u_or_v_flag,u,v`; the flag names the
/// parameter that built the state.
pub fn write_csv<'a, W, I>(samples: I, mut out: W) -> io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a LabeledSample>,
{
    writeln!(out, "index,label,u_or_v_flag,u,v")?;
    for (i, s) in samples.into_iter().enumerate() {
        let flag = match s.origin {
            Origin::U => "u",
            Origin::V => "v",
        };
        writeln!(out, "{i},{},{flag},{:.17e},{:.17e}", s.label, s.u, s.v)?;
    }
    Ok(())
}
