//! Repeated squaring: operator-norm intervals on `ℓ²(G)` and spectral-radius
//! estimates.
//!
//! Powers `f^(2^k)` are kept in scaled form `exp(L_k) g_k` with
//! `‖g_k‖₁ = 1`, so that neither overflow nor underflow occurs.

use num_complex::Complex64;
use serde::Serialize;

use super::{convolve_capped, involute, norm_p_omega, AlgebraElement, DEFAULT_SUPPORT_CAP};
use crate::error::{Error, Result};
use crate::weights::Weight;

/// Default truncation for squaring scaled powers (absolute, on `‖g‖₁ = 1`).
pub const DEFAULT_SPECTRAL_TRUNC: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralOptions {
    pub trunc: f64,
    pub cap: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            trunc: DEFAULT_SPECTRAL_TRUNC,
            cap: DEFAULT_SUPPORT_CAP,
        }
    }
}

/// Where repeated squaring stopped.
#[derive(Clone, Debug, Default, Serialize)]
pub struct PowerRun {
    pub k_reached: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stopped: Option<String>,
}

/// Computes `f^(2^k)` for `k = 0..=k_max` as `exp(ln_scale) g` and hands
/// each step to `visit(k, ln_scale, g)`. The budget `g.eps()` bounds the
/// `ℓ¹` distance from `g` to the exact scaled power.
///
/// Hitting the support cap ends the run early; the reason is recorded.
pub fn dyadic_powers(
    f: &AlgebraElement,
    k_max: u32,
    opts: &SpectralOptions,
    mut visit: impl FnMut(u32, f64, &AlgebraElement) -> Result<()>,
) -> Result<PowerRun> {
    let s0 = f.l1();
    if s0 == 0.0 {
        visit(0, 0.0, f)?;
        return Ok(PowerRun {
            k_reached: 0,
            stopped: Some("zero element".into()),
        });
    }
    let mut g = f.scale_real(1.0 / s0);
    let mut ln_scale = s0.ln();
    visit(0, ln_scale, &g)?;
    let mut run = PowerRun::default();
    for k in 1..=k_max {
        let sq = match convolve_capped(&g, &g, opts.trunc, opts.cap) {
            Ok(sq) => sq,
            Err(e @ (Error::SupportCap { .. } | Error::WorkCap { .. })) => {
                run.stopped = Some(format!("{e} at k = {k}"));
                break;
            }
            Err(e) => return Err(e),
        };
        let s = sq.l1();
        if s == 0.0 {
            run.stopped = Some(format!("power vanished at k = {k}"));
            break;
        }
        g = sq.scale_real(1.0 / s);
        ln_scale = 2.0 * ln_scale + s.ln();
        visit(k, ln_scale, &g)?;
        run.k_reached = k;
    }
    Ok(run)
}

/// A certified two-sided bound on an operator norm.
#[derive(Clone, Debug, Serialize)]
pub struct NormInterval {
    pub lower: f64,
    pub upper: f64,
    pub method: String,
    pub k_reached: u32,
    /// Set when squaring stopped before `k_max`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stopped: Option<String>,
    /// Lower bounds obtained at each `k`.
    pub lower_sequence: Vec<f64>,
    /// Upper bounds obtained at each `k`.
    pub upper_sequence: Vec<f64>,
}

impl NormInterval {
    pub fn contains(&self, v: f64, slack: f64) -> bool {
        self.lower - slack <= v && v <= self.upper + slack
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Bounds `‖f‖_B`, the norm of left convolution by `f` on `ℓ²(G)`.
///
/// With `h = f* f`: `‖f‖_B² = ‖h‖_B`, and for each `n = 2^k`,
/// `‖hⁿ‖₂ <= ‖h‖_Bⁿ <= ‖hⁿ‖₁` (the upper inequality because `h` is
/// hermitian). The first lower bound is `‖f‖₂`, the first upper bound
/// `‖f‖₁`.
pub fn opnorm_estimate(f: &AlgebraElement, k_max: u32) -> Result<NormInterval> {
    opnorm_estimate_with(f, k_max, &SpectralOptions::default())
}

pub fn opnorm_estimate_with(f: &AlgebraElement, k_max: u32, opts: &SpectralOptions) -> Result<NormInterval> {
    let base_lower = (f.l2() - f.eps()).max(0.0);
    let base_upper = f.l1() + f.eps();
    let h = match convolve_capped(&involute(f), f, opts.trunc, opts.cap) {
        Ok(h) => h,
        Err(e @ (Error::SupportCap { .. } | Error::WorkCap { .. })) => {
            return Ok(NormInterval {
                lower: base_lower,
                upper: base_upper,
                method: "l2_l1".into(),
                k_reached: 0,
                stopped: Some(format!("{e} forming f*f")),
                lower_sequence: vec![base_lower],
                upper_sequence: vec![base_upper],
            })
        }
        Err(e) => return Err(e),
    };
    let hi = hermitian_interval(&h, k_max, opts)?;
    let lower = base_lower.max(hi.lower.sqrt());
    let upper = base_upper.min(hi.upper.sqrt()).max(lower);
    Ok(NormInterval {
        lower,
        upper,
        method: "hermitian_square_powers".into(),
        k_reached: hi.k_reached,
        stopped: hi.stopped,
        lower_sequence: hi.lower_sequence.iter().map(|v| v.sqrt()).collect(),
        upper_sequence: hi.upper_sequence.iter().map(|v| v.sqrt()).collect(),
    })
}

/// Bounds `‖h‖_B` for an element that is hermitian up to its budget `ε`.
///
/// `h` is first replaced by its exactly hermitian part `(h + h*)/2`, which
/// lies within `ε` of the exact hermitian element in `ℓ¹`.
pub fn hermitian_interval(h: &AlgebraElement, k_max: u32, opts: &SpectralOptions) -> Result<NormInterval> {
    let eps_h = h.eps();
    let hs = h.add(&involute(h))?.scale(Complex64::new(0.5, 0.0)).with_eps(0.0);
    let mut lower = (hs.l2() - eps_h).max(0.0);
    let mut upper = hs.l1() + eps_h;
    let mut lower_sequence = Vec::new();
    let mut upper_sequence = Vec::new();
    let run = dyadic_powers(&hs, k_max, opts, |k, ln_scale, g| {
        let n = 2f64.powi(k as i32);
        let lo = g.l2() - g.eps();
        let lo = if lo > 0.0 { ((ln_scale + lo.ln()) / n).exp() } else { 0.0 };
        let up = ((ln_scale + (g.l1() + g.eps()).ln()) / n).exp();
        lower_sequence.push((lo - eps_h).max(0.0));
        upper_sequence.push(up + eps_h);
        lower = lower.max(lo - eps_h);
        upper = upper.min(up + eps_h);
        Ok(())
    })?;
    Ok(NormInterval {
        lower: lower.max(0.0),
        upper: upper.max(lower),
        method: "hermitian_powers".into(),
        k_reached: run.k_reached,
        stopped: run.stopped,
        lower_sequence,
        upper_sequence,
    })
}

/// Norm used along a power sequence.
#[derive(Clone, Copy, Debug)]
pub enum PowerNorm<'a> {
    /// `‖·‖_{p,ω}`
    A { weight: &'a Weight, p: f64 },
    /// `‖·‖₂`, the computable lower proxy for the operator norm on `ℓ²(G)`
    /// (`‖f‖₂ = ‖f δ_e‖₂ <= ‖f‖_B`).
    B,
}

impl PowerNorm<'_> {
    fn eval(&self, g: &AlgebraElement) -> Result<f64> {
        match self {
            PowerNorm::A { weight, p } => norm_p_omega(g, weight, *p),
            PowerNorm::B => Ok(g.l2()),
        }
    }

    fn label(&self) -> String {
        match self {
            PowerNorm::A { weight, p } => format!("A(p={p},{})", weight.spec()),
            PowerNorm::B => "B(l2)".into(),
        }
    }
}

/// `‖f^(2^k)‖^(1/2^k)` for `k = 0..=k_reached`.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralEstimate {
    pub norm: String,
    /// Value at the last `k` reached.
    pub value: f64,
    pub sequence: Vec<f64>,
    pub k_reached: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stopped: Option<String>,
}

pub fn spectral_radius_estimate(f: &AlgebraElement, norm: PowerNorm<'_>, k_max: u32) -> Result<SpectralEstimate> {
    Ok(spectral_radius_estimates(f, &[norm], k_max, &SpectralOptions::default())?.remove(0))
}

/// Several norms along one power sequence.
pub fn spectral_radius_estimates(
    f: &AlgebraElement,
    norms: &[PowerNorm<'_>],
    k_max: u32,
    opts: &SpectralOptions,
) -> Result<Vec<SpectralEstimate>> {
    let mut seqs: Vec<Vec<f64>> = vec![Vec::new(); norms.len()];
    let run = dyadic_powers(f, k_max, opts, |k, ln_scale, g| {
        let n = 2f64.powi(k as i32);
        for (norm, seq) in norms.iter().zip(seqs.iter_mut()) {
            let v = norm.eval(g)?;
            seq.push(if v > 0.0 { ((ln_scale + v.ln()) / n).exp() } else { 0.0 });
        }
        Ok(())
    })?;
    Ok(norms
        .iter()
        .zip(seqs)
        .map(|(norm, sequence)| SpectralEstimate {
            norm: norm.label(),
            value: *sequence.last().unwrap_or(&0.0),
            sequence,
            k_reached: run.k_reached,
            stopped: run.stopped.clone(),
        })
        .collect())
}
