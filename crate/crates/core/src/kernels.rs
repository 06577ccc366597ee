//! Davenport-Heilbronn kernels and their Fourier transforms.
//!
//! Every kernel here is a finite sum `sum_i c_i cos(w_i a) / a^2`. That
//! representation is used only for the tail of the numerical transform: the
//! bulk `[-R, R]` is integrated from the sinc formulas directly and the exact
//! remainder beyond `R` is evaluated through
//! `int_R^inf cos(w a)/a^2 da = E(|w| R) / R` with
//! `E(x) = int_0^inf u e^-u (u cos x - x sin x) / (u^2 + x^2) du`.

use std::f64::consts::PI;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_real, uniform_breaks, QuadOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum KernelVariant {
    /// `eta sinc^2(pi a eta)`.
    K,
    /// `4 K(2a)`.
    K2alpha,
    /// `sin(pi a delta) sin(pi a (2 eta + delta)) / (pi^2 a^2 delta)`.
    Kplus,
    /// Same with `2 eta - delta`.
    Kminus,
    /// `sinc^2(pi a delta)`.
    K1,
    /// `(2 eta + delta)^2 sinc^2(pi a (2 eta + delta))`.
    K2plus,
    /// `(2 eta - delta)^2 sinc^2(pi a (2 eta - delta))`.
    K2minus,
}

impl KernelVariant {
    pub fn needs_l(self) -> bool {
        !matches!(self, KernelVariant::K | KernelVariant::K2alpha)
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelVariant::K => "K",
            KernelVariant::K2alpha => "K2alpha",
            KernelVariant::Kplus => "Kplus",
            KernelVariant::Kminus => "Kminus",
            KernelVariant::K1 => "K1",
            KernelVariant::K2plus => "K2plus",
            KernelVariant::K2minus => "K2minus",
        }
    }
}

impl FromStr for KernelVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "K" => KernelVariant::K,
            "K2alpha" => KernelVariant::K2alpha,
            "Kplus" => KernelVariant::Kplus,
            "Kminus" => KernelVariant::Kminus,
            "K1" => KernelVariant::K1,
            "K2plus" => KernelVariant::K2plus,
            "K2minus" => KernelVariant::K2minus,
            other => return Err(Error::Parse(format!("unknown kernel variant '{other}'"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec {
    pub variant: KernelVariant,
    pub eta: f64,
    /// Only for the Freeman family; `delta = eta / l`.
    pub l: Option<f64>,
}

impl KernelSpec {
    pub fn new(variant: KernelVariant, eta: f64, l: Option<f64>) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::Domain(format!("eta must be positive, got {eta}")));
        }
        if variant.needs_l() {
            match l {
                Some(l) if l > 1.0 && l.is_finite() => {}
                _ => return Err(Error::Domain(format!("{} needs L > 1", variant.name()))),
            }
        }
        Ok(KernelSpec { variant, eta, l: if variant.needs_l() { l } else { None } })
    }

    pub fn delta(&self) -> f64 {
        self.l.map_or(0.0, |l| self.eta / l)
    }

    fn wide(&self) -> f64 {
        match self.variant {
            KernelVariant::Kplus | KernelVariant::K2plus => 2.0 * self.eta + self.delta(),
            _ => 2.0 * self.eta - self.delta(),
        }
    }

    /// `(c_i, w_i)` with `kernel(a) = sum_i c_i cos(w_i a) / a^2` for `a != 0`.
    pub fn cosine_terms(&self) -> Vec<(f64, f64)> {
        let pi2 = PI * PI;
        let eta = self.eta;
        let d = self.delta();
        let sin_sq = |scale: f64, width: f64| vec![(scale / 2.0, 0.0), (-scale / 2.0, 2.0 * PI * width)];
        match self.variant {
            KernelVariant::K => sin_sq(1.0 / (pi2 * eta), eta),
            KernelVariant::K2alpha => sin_sq(1.0 / (pi2 * eta), 2.0 * eta),
            KernelVariant::K1 => sin_sq(1.0 / (pi2 * d * d), d),
            KernelVariant::K2plus | KernelVariant::K2minus => sin_sq(1.0 / pi2, self.wide()),
            KernelVariant::Kplus | KernelVariant::Kminus => {
                let w = self.wide();
                let c = 1.0 / (2.0 * pi2 * d);
                vec![(c, PI * (w - d)), (-c, PI * (w + d))]
            }
        }
    }

    /// Largest frequency present in the kernel.
    fn bandwidth(&self) -> f64 {
        self.cosine_terms().iter().map(|&(_, w)| w / (2.0 * PI)).fold(0.0, f64::max)
    }

    /// Smallest nonzero width parameter; the kernel's main lobe has this scale.
    fn narrowest(&self) -> f64 {
        match self.variant {
            KernelVariant::K => self.eta,
            KernelVariant::K2alpha => 2.0 * self.eta,
            _ => self.delta().min(self.wide()),
        }
    }

    /// Constant `A` with `|kernel(a)| <= A / a^2`.
    pub fn tail_amplitude(&self) -> f64 {
        self.cosine_terms().iter().map(|&(c, _)| c.abs()).sum()
    }
}

/// `sin(x)/x` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

pub fn kernel_value(spec: &KernelSpec, alpha: f64) -> f64 {
    let eta = spec.eta;
    let d = spec.delta();
    match spec.variant {
        KernelVariant::K => eta * sinc(PI * alpha * eta).powi(2),
        KernelVariant::K2alpha => 4.0 * eta * sinc(2.0 * PI * alpha * eta).powi(2),
        KernelVariant::K1 => sinc(PI * alpha * d).powi(2),
        KernelVariant::K2plus | KernelVariant::K2minus => {
            let w = spec.wide();
            w * w * sinc(PI * alpha * w).powi(2)
        }
        KernelVariant::Kplus | KernelVariant::Kminus => {
            // sin(pi a d) sin(pi a w) / (pi^2 a^2 d) = (w) sinc(pi a d) sinc(pi a w)
            let w = spec.wide();
            w * sinc(PI * alpha * d) * sinc(PI * alpha * w)
        }
    }
}

/// Closed-form `int e(a t) kernel(a) da`.
pub fn kernel_fourier(spec: &KernelSpec, t: f64) -> Result<f64> {
    let tri = |width: f64| (1.0 - (t / width).abs()).max(0.0);
    Ok(match spec.variant {
        KernelVariant::K => tri(spec.eta),
        KernelVariant::K2alpha => (2.0 - (t / spec.eta).abs()).max(0.0),
        KernelVariant::K1 => tri(spec.delta()) / spec.delta(),
        KernelVariant::K2plus | KernelVariant::K2minus => spec.wide() * tri(spec.wide()),
        KernelVariant::Kplus | KernelVariant::Kminus => {
            return Err(Error::NoClosedForm(format!("the Fourier transform of {}", spec.variant.name())))
        }
    })
}

/// Indicator `U_kappa(t) = [|t| < kappa]`.
pub fn indicator(kappa: f64, t: f64) -> f64 {
    if t.abs() < kappa {
        1.0
    } else {
        0.0
    }
}

/// `E(x) = R int_R^inf cos(w a)/a^2 da` at `x = |w| R`.
fn tail_factor(x: f64) -> Result<f64> {
    let x = x.abs();
    if x == 0.0 {
        return Ok(1.0);
    }
    let f = |u: f64| u * (-u).exp() * (u * x.cos() - x * x.sin()) / (u * u + x * x);
    let mut breaks = vec![x, 0.1 * x, 10.0 * x, 1.0, 5.0, 20.0];
    breaks.retain(|&b| b > 0.0 && b < 60.0);
    let (v, _) = integrate_real(f, 0.0, 60.0, &breaks, QuadOptions { tol: 1e-14, max_panels: 20_000 })?;
    Ok(v)
}

/// `int_R^inf cos(w a) / a^2 da`.
fn cosine_tail(w: f64, r: f64) -> Result<f64> {
    Ok(tail_factor(w * r)? / r)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FourierEstimate {
    pub value: f64,
    pub imag: f64,
    pub error: f64,
    /// Half-width of the integrated bulk.
    pub radius: f64,
    /// Envelope bound `2A/R` on the part beyond the bulk, which is added back exactly.
    pub tail_bound: f64,
}

/// Numerical `int e(a t) kernel(a) da` by adaptive quadrature.
pub fn kernel_fourier_quadrature(spec: &KernelSpec, t: f64, tol: f64) -> Result<FourierEstimate> {
    if !(tol > 0.0) {
        return Err(Error::Domain("tol must be positive".into()));
    }
    let amp = spec.tail_amplitude();
    // 32 main lobes; the exact remainder beyond makes a larger radius unnecessary
    let radius = 32.0 / spec.narrowest();
    let freq = spec.bandwidth() + t.abs();
    let panel = 0.5 / freq.max(1.0 / radius);
    let breaks = uniform_breaks(-radius, radius, panel);
    let bulk = integrate(
        |a| Complex64::from_polar(kernel_value(spec, a), 2.0 * PI * a * t),
        -radius,
        radius,
        &breaks,
        QuadOptions { tol: tol / 4.0, max_panels: 2_000_000 },
    )?;

    // both tails together: 2 sum_i c_i int_R^inf cos(w_i a) cos(2 pi t a) / a^2 da
    let mut tail = 0.0;
    for (c, w) in spec.cosine_terms() {
        tail += c * (cosine_tail(w + 2.0 * PI * t, radius)? + cosine_tail(w - 2.0 * PI * t, radius)?);
    }
    let value = bulk.value.re + tail;
    if bulk.value.im.abs() >= tol {
        return Err(Error::Quadrature { estimate: bulk.value.im.abs(), tol });
    }
    Ok(FourierEstimate {
        value,
        imag: bulk.value.im,
        error: bulk.error,
        radius,
        tail_bound: 2.0 * amp / radius,
    })
}

/// Fitted constant in `|K_pm(a)| <= C min(1, L a^-2)` over the given grid.
pub fn envelope_constant(spec: &KernelSpec, alphas: &[f64]) -> f64 {
    let l = spec.l.unwrap_or(1.0);
    alphas
        .iter()
        .map(|&a| {
            let env = if a == 0.0 { 1.0 } else { (l / (a * a)).min(1.0) };
            kernel_value(spec, a).abs() / env
        })
        .fold(0.0, f64::max)
}
