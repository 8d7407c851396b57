//! Finitely supported functions on a group under convolution, and the norms
//! of the weighted algebras `ℓ^p(G, ω)`.
//!
//! Elements carry a truncation budget `ε`: an upper bound on the `ℓ¹` mass
//! discarded while computing them. Certified upper bounds add `ε`.

mod kernel;
mod spectral;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::groups::{GroupElement, GroupModel};
use crate::weights::{AuxiliaryFunction, Weight};

pub use kernel::PAIR_BUDGET;
pub use spectral::{
    dyadic_powers, hermitian_interval, opnorm_estimate, opnorm_estimate_with,
    spectral_radius_estimate, spectral_radius_estimates, NormInterval, PowerNorm, PowerRun,
    SpectralEstimate, SpectralOptions, DEFAULT_SPECTRAL_TRUNC,
};

/// Default cap on the support size of a convolution result.
pub const DEFAULT_SUPPORT_CAP: usize = 1_000_000;

/// A finitely supported function `G → ℂ`.
///
/// Terms are kept sorted by group element, with no zero coefficients.
#[derive(Clone)]
pub struct AlgebraElement {
    model: Arc<GroupModel>,
    terms: Vec<(GroupElement, Complex64)>,
    eps: f64,
}

impl fmt::Debug for AlgebraElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AlgebraElement")
            .field("family", &self.model.family())
            .field("terms", &self.terms)
            .field("eps", &self.eps)
            .finish()
    }
}

impl AlgebraElement {
    /// Builds an element from `(x, f(x))` pairs. Repeated elements are
    /// summed; zero coefficients are dropped.
    pub fn new<I>(model: Arc<GroupModel>, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (GroupElement, Complex64)>,
    {
        let mut v: Vec<(GroupElement, Complex64)> = Vec::new();
        for (x, c) in terms {
            model.check(&x)?;
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(invalid(format!("non-finite coefficient at {x}")));
            }
            v.push((x, c));
        }
        Ok(Self::from_unsorted(model, v, 0.0))
    }

    /// Real coefficients.
    pub fn real<I>(model: Arc<GroupModel>, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (GroupElement, f64)>,
    {
        Self::new(model, terms.into_iter().map(|(x, c)| (x, Complex64::new(c, 0.0))))
    }

    /// `c δ_x`.
    pub fn delta(model: Arc<GroupModel>, x: GroupElement, c: Complex64) -> Result<Self> {
        Self::new(model, [(x, c)])
    }

    /// The unit `δ_e`.
    pub fn unit(model: Arc<GroupModel>) -> Self {
        let e = model.identity();
        Self {
            model,
            terms: vec![(e, Complex64::new(1.0, 0.0))],
            eps: 0.0,
        }
    }

    pub fn zero(model: Arc<GroupModel>) -> Self {
        Self {
            model,
            terms: Vec::new(),
            eps: 0.0,
        }
    }

    pub(crate) fn from_unsorted(model: Arc<GroupModel>, mut v: Vec<(GroupElement, Complex64)>, eps: f64) -> Self {
        v.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let mut terms: Vec<(GroupElement, Complex64)> = Vec::with_capacity(v.len());
        for (x, c) in v {
            match terms.last_mut() {
                Some((y, d)) if *y == x => *d += c,
                _ => terms.push((x, c)),
            }
        }
        terms.retain(|(_, c)| *c != Complex64::new(0.0, 0.0));
        Self { model, terms, eps }
    }

    /// Terms already sorted and nonzero.
    pub(crate) fn from_sorted(model: Arc<GroupModel>, terms: Vec<(GroupElement, Complex64)>, eps: f64) -> Self {
        debug_assert!(terms.windows(2).all(|w| w[0].0 < w[1].0));
        Self { model, terms, eps }
    }

    pub fn model(&self) -> &Arc<GroupModel> {
        &self.model
    }

    pub fn terms(&self) -> &[(GroupElement, Complex64)] {
        &self.terms
    }

    pub fn support(&self) -> impl Iterator<Item = &GroupElement> {
        self.terms.iter().map(|(x, _)| x)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Accumulated truncation budget.
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub(crate) fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn coeff(&self, x: &GroupElement) -> Complex64 {
        match self.terms.binary_search_by(|(y, _)| y.cmp(x)) {
            Ok(i) => self.terms[i].1,
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|(_, c)| c.im == 0.0)
    }

    /// `f* = f` up to `tol` in every coefficient.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms
            .iter()
            .all(|(x, c)| (self.coeff(&x.inverse()).conj() - c).norm() <= tol)
    }

    pub fn l1(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.norm()).sum()
    }

    pub fn l2(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn linf(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max)
    }

    /// `c f`.
    pub fn scale(&self, c: Complex64) -> Self {
        if c == Complex64::new(0.0, 0.0) {
            return Self::zero(self.model.clone());
        }
        let terms = self.terms.iter().map(|(x, d)| (*x, d * c)).collect();
        Self::from_sorted(self.model.clone(), terms, self.eps * c.norm())
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }

    /// `self + c g`.
    pub fn add_scaled(&self, g: &Self, c: Complex64) -> Result<Self> {
        self.same_family(g)?;
        let (a, b) = (&self.terms, &g.terms);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let take_a = j == b.len() || (i < a.len() && a[i].0 < b[j].0);
            let take_b = i == a.len() || (j < b.len() && b[j].0 < a[i].0);
            if take_a {
                out.push(a[i]);
                i += 1;
            } else if take_b {
                let s = b[j].1 * c;
                if s != Complex64::new(0.0, 0.0) {
                    out.push((b[j].0, s));
                }
                j += 1;
            } else {
                let s = a[i].1 + b[j].1 * c;
                if s != Complex64::new(0.0, 0.0) {
                    out.push((a[i].0, s));
                }
                i += 1;
                j += 1;
            }
        }
        Ok(Self::from_sorted(self.model.clone(), out, self.eps + c.norm() * g.eps))
    }

    pub fn add(&self, g: &Self) -> Result<Self> {
        self.add_scaled(g, Complex64::new(1.0, 0.0))
    }

    pub fn sub(&self, g: &Self) -> Result<Self> {
        self.add_scaled(g, Complex64::new(-1.0, 0.0))
    }

    /// Drops coefficients of magnitude below `trunc`, charging the dropped
    /// mass to `ε`.
    pub fn truncate(&self, trunc: f64) -> Self {
        let mut dropped = 0.0;
        let terms = self
            .terms
            .iter()
            .filter(|(_, c)| {
                let keep = c.norm() >= trunc;
                if !keep {
                    dropped += c.norm();
                }
                keep
            })
            .copied()
            .collect();
        Self::from_sorted(self.model.clone(), terms, self.eps + dropped)
    }

    /// Coefficientwise distance `max_x |f(x) - g(x)|`.
    pub fn max_abs_diff(&self, g: &Self) -> Result<f64> {
        Ok(self.sub(g)?.linf())
    }

    pub(crate) fn same_family(&self, g: &Self) -> Result<()> {
        if self.model.family() == g.model.family() {
            Ok(())
        } else {
            Err(Error::FamilyMismatch {
                left: self.model.family().to_string(),
                right: g.model.family().to_string(),
            })
        }
    }

    pub fn to_records(&self) -> Vec<TermRecord> {
        self.terms
            .iter()
            .map(|(x, c)| TermRecord {
                x: x.encode(),
                re: c.re,
                im: c.im,
            })
            .collect()
    }

    /// One JSON object per line: `{"x": [...], "re": .., "im": ..}`.
    pub fn to_json_lines(&self) -> String {
        let mut s = String::new();
        for rec in self.to_records() {
            s.push_str(&serde_json::to_string(&rec).expect("term serializes"));
            s.push('\n');
        }
        s
    }

    pub fn from_json_lines(model: Arc<GroupModel>, text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let rec: TermRecord = serde_json::from_str(line)
                .map_err(|e| invalid(format!("line {}: {e}", i + 1)))?;
            terms.push(rec.into_term(&model)?);
        }
        Self::new(model, terms)
    }
}

/// Serialized form of a single term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub x: Vec<i64>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl TermRecord {
    pub fn into_term(self, model: &GroupModel) -> Result<(GroupElement, Complex64)> {
        Ok((model.decode(&self.x)?, Complex64::new(self.re, self.im)))
    }
}

/// `(f * g)(x) = Σ_y f(y) g(y⁻¹x)`, dropping coefficients below `trunc`.
pub fn convolve(f: &AlgebraElement, g: &AlgebraElement, trunc: f64) -> Result<AlgebraElement> {
    convolve_capped(f, g, trunc, DEFAULT_SUPPORT_CAP)
}

/// [`convolve`] with an explicit support cap.
pub fn convolve_capped(f: &AlgebraElement, g: &AlgebraElement, trunc: f64, cap: usize) -> Result<AlgebraElement> {
    f.same_family(g)?;
    if !(trunc >= 0.0) {
        return Err(invalid(format!("trunc must be nonnegative, got {trunc}")));
    }
    let (f1, g1) = (f.l1(), g.l1());
    let carried = f.eps * (g1 + g.eps) + g.eps * f1;
    let (terms, dropped, rounding) = kernel::convolve_terms(f, g, trunc, cap)?;
    if terms.len() > cap {
        return Err(Error::SupportCap { size: terms.len(), cap });
    }
    Ok(AlgebraElement::from_sorted(
        f.model.clone(),
        terms,
        carried + dropped + rounding,
    ))
}

/// `f*(x) = conj(f(x⁻¹))`.
pub fn involute(f: &AlgebraElement) -> AlgebraElement {
    let v = f.terms.iter().map(|(x, c)| (x.inverse(), c.conj())).collect();
    AlgebraElement::from_unsorted(f.model.clone(), v, f.eps)
}

/// `‖f‖_{p,ω} = (Σ |f(x)|^p ω(x)^p)^{1/p}`.
pub fn norm_p_omega(f: &AlgebraElement, w: &Weight, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(invalid(format!("p must be at least 1, got {p}")));
    }
    if w.model().family() != f.model.family() {
        return Err(Error::FamilyMismatch {
            left: f.model.family().to_string(),
            right: w.model().family().to_string(),
        });
    }
    if p == 1.0 {
        let mut s = 0.0;
        for (x, c) in &f.terms {
            s += c.norm() * w.eval(x)?;
        }
        return Ok(s);
    }
    // scale by the largest entry so that large weights do not overflow early
    let mut vals = Vec::with_capacity(f.len());
    for (x, c) in &f.terms {
        vals.push(c.norm() * w.eval(x)?);
    }
    let m = vals.iter().cloned().fold(0.0, f64::max);
    if m == 0.0 || !m.is_finite() {
        return Ok(m);
    }
    let s: f64 = vals.iter().map(|v| (v / m).powf(p)).sum();
    Ok(m * s.powf(1.0 / p))
}

/// `‖f‖_{1,σ} = Σ |f(x)| σ(x)` with `σ = ω u`.
pub fn norm_1_sigma(f: &AlgebraElement, aux: &AuxiliaryFunction) -> Result<f64> {
    let mut s = 0.0;
    for (x, c) in &f.terms {
        s += c.norm() * aux.sigma(x)?;
    }
    Ok(s)
}
