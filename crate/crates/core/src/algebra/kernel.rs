//! Convolution kernels.
//!
//! Lattice elements go through a dense box: a direct scatter for exact work,
//! or an FFT when truncation is on and the direct pair count is large. Other
//! families accumulate in a hash map. Every path visits terms in a fixed
//! order, so results do not depend on scheduling.

use num_complex::Complex64;
use rustc_hash::FxHashMap;
use rustfft::FftPlanner;

use super::AlgebraElement;
use crate::error::{Error, Result};
use crate::groups::{GroupElement, LatticePoint, MAX_LATTICE_DIM};

/// Largest dense output box for the direct scatter.
const DENSE_MAX: u128 = 1 << 26;

/// Pair count above which the FFT path is preferred (when truncating).
const FFT_PAIRS: u128 = 1 << 22;

/// Largest padded FFT box.
const FFT_MAX: u128 = 1 << 26;

/// Safety constant in the FFT rounding bound `c u log2(N)`.
const FFT_ROUNDING_C: f64 = 5.0;

type Terms = Vec<(GroupElement, Complex64)>;

/// Returns the sorted, truncated terms of `f * g`, the dropped `ℓ¹` mass and
/// an `ℓ¹` bound on floating-point error introduced by the FFT path.
pub(super) fn convolve_terms(f: &AlgebraElement, g: &AlgebraElement, trunc: f64, cap: usize) -> Result<(Terms, f64, f64)> {
    if f.is_empty() || g.is_empty() {
        return Ok((Vec::new(), 0.0, 0.0));
    }
    if let (Some(fb), Some(gb)) = (LatticeBlock::of(f), LatticeBlock::of(g)) {
        let out = fb.sum_box(&gb);
        let vol = out.volume();
        let pairs = f.len() as u128 * g.len() as u128;
        if trunc > 0.0 && pairs > FFT_PAIRS {
            let padded = out.padded();
            if padded.iter().map(|&n| n as u128).product::<u128>() <= FFT_MAX {
                return fft_lattice(&fb, &gb, &out, &padded, trunc, cap);
            }
        }
        if vol <= DENSE_MAX && vol <= 16 * pairs + 4096 {
            return Ok(dense_lattice(&fb, &gb, &out, trunc));
        }
    }
    hashed(f, g, trunc, cap)
}

/// Coordinates of a lattice element in its bounding box.
struct LatticeBlock {
    dim: usize,
    lo: [i64; MAX_LATTICE_DIM],
    hi: [i64; MAX_LATTICE_DIM],
    points: Vec<[i64; MAX_LATTICE_DIM]>,
    coeffs: Vec<Complex64>,
    real: bool,
}

/// An axis-aligned box `lo + [0, ext)`.
struct OutBox {
    dim: usize,
    lo: [i64; MAX_LATTICE_DIM],
    ext: [usize; MAX_LATTICE_DIM],
}

impl LatticeBlock {
    fn of(f: &AlgebraElement) -> Option<Self> {
        let mut points = Vec::with_capacity(f.len());
        let mut coeffs = Vec::with_capacity(f.len());
        let mut dim = 0;
        let mut lo = [i64::MAX; MAX_LATTICE_DIM];
        let mut hi = [i64::MIN; MAX_LATTICE_DIM];
        for (x, c) in f.terms() {
            let GroupElement::Lattice(p) = x else {
                return None;
            };
            dim = p.dim();
            let mut q = [0; MAX_LATTICE_DIM];
            for (i, v) in p.coords().iter().enumerate() {
                q[i] = *v;
                lo[i] = lo[i].min(*v);
                hi[i] = hi[i].max(*v);
            }
            points.push(q);
            coeffs.push(*c);
        }
        // coordinates must stay far from overflow when boxes are added
        if (0..dim).any(|i| lo[i] < -(1 << 40) || hi[i] > (1 << 40)) {
            return None;
        }
        let real = coeffs.iter().all(|c| c.im == 0.0);
        Some(Self {
            dim,
            lo,
            hi,
            points,
            coeffs,
            real,
        })
    }

    fn sum_box(&self, g: &Self) -> OutBox {
        let mut lo = [0; MAX_LATTICE_DIM];
        let mut ext = [1; MAX_LATTICE_DIM];
        for i in 0..self.dim {
            lo[i] = self.lo[i] + g.lo[i];
            ext[i] = ((self.hi[i] - self.lo[i]) + (g.hi[i] - g.lo[i]) + 1) as usize;
        }
        OutBox { dim: self.dim, lo, ext }
    }

    /// Row-major offsets of the points relative to `origin`, in the given
    /// strides.
    fn offsets(&self, origin: &[i64; MAX_LATTICE_DIM], strides: &[usize]) -> Vec<usize> {
        self.points
            .iter()
            .map(|p| (0..self.dim).map(|i| (p[i] - origin[i]) as usize * strides[i]).sum())
            .collect()
    }

    fn l1(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    fn l2(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

impl OutBox {
    fn volume(&self) -> u128 {
        self.ext[..self.dim].iter().map(|&n| n as u128).product()
    }

    fn strides_for(&self, ext: &[usize]) -> Vec<usize> {
        let mut s = vec![1; self.dim];
        for i in (0..self.dim.saturating_sub(1)).rev() {
            s[i] = s[i + 1] * ext[i + 1];
        }
        s
    }

    fn padded(&self) -> Vec<usize> {
        self.ext[..self.dim].iter().map(|&n| next_smooth(n)).collect()
    }

    /// Visits the box in row-major order (which is the element order), with
    /// the linear index in `strides`.
    fn for_each(&self, strides: &[usize], mut visit: impl FnMut(GroupElement, usize)) {
        let d = self.dim;
        let mut idx = [0usize; MAX_LATTICE_DIM];
        loop {
            let lin: usize = (0..d).map(|i| idx[i] * strides[i]).sum();
            let mut coords = [0i64; MAX_LATTICE_DIM];
            for i in 0..d {
                coords[i] = self.lo[i] + idx[i] as i64;
            }
            visit(GroupElement::Lattice(LatticePoint::new(&coords[..d]).expect("valid dim")), lin);
            let mut axis = d;
            loop {
                if axis == 0 {
                    return;
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < self.ext[axis] {
                    break;
                }
                idx[axis] = 0;
            }
        }
    }
}

fn push_kept(out: &mut Terms, dropped: &mut f64, x: GroupElement, c: Complex64, trunc: f64) {
    let m = c.norm();
    if m == 0.0 {
        return;
    }
    if m < trunc {
        *dropped += m;
    } else {
        out.push((x, c));
    }
}

fn dense_lattice(f: &LatticeBlock, g: &LatticeBlock, out: &OutBox, trunc: f64) -> (Terms, f64, f64) {
    let strides = out.strides_for(&out.ext[..out.dim]);
    let fo = f.offsets(&f.lo, &strides);
    let go = g.offsets(&g.lo, &strides);
    let vol = out.volume() as usize;
    let mut terms = Vec::new();
    let mut dropped = 0.0;
    if f.real && g.real {
        let gc: Vec<f64> = g.coeffs.iter().map(|c| c.re).collect();
        let mut acc = vec![0.0f64; vol];
        for (a, c) in fo.iter().zip(&f.coeffs) {
            let c = c.re;
            for (b, d) in go.iter().zip(&gc) {
                acc[a + b] += c * d;
            }
        }
        out.for_each(&strides, |x, i| push_kept(&mut terms, &mut dropped, x, Complex64::new(acc[i], 0.0), trunc));
    } else {
        let mut acc = vec![Complex64::new(0.0, 0.0); vol];
        for (a, c) in fo.iter().zip(&f.coeffs) {
            for (b, d) in go.iter().zip(&g.coeffs) {
                acc[a + b] += c * d;
            }
        }
        out.for_each(&strides, |x, i| push_kept(&mut terms, &mut dropped, x, acc[i], trunc));
    }
    (terms, dropped, 0.0)
}

fn fft_lattice(
    f: &LatticeBlock,
    g: &LatticeBlock,
    out: &OutBox,
    padded: &[usize],
    trunc: f64,
    cap: usize,
) -> Result<(Terms, f64, f64)> {
    let strides = out.strides_for(padded);
    let n: usize = padded.iter().product();
    let mut a = vec![Complex64::new(0.0, 0.0); n];
    let mut b = vec![Complex64::new(0.0, 0.0); n];
    for (o, c) in f.offsets(&f.lo, &strides).into_iter().zip(&f.coeffs) {
        a[o] = *c;
    }
    for (o, c) in g.offsets(&g.lo, &strides).into_iter().zip(&g.coeffs) {
        b[o] = *c;
    }
    let mut planner = FftPlanner::new();
    fft_nd(&mut a, padded, false, &mut planner);
    fft_nd(&mut b, padded, false, &mut planner);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    drop(b);
    fft_nd(&mut a, padded, true, &mut planner);
    let scale = 1.0 / n as f64;
    let real = f.real && g.real;
    let mut terms = Vec::new();
    let mut dropped = 0.0;
    out.for_each(&strides, |x, i| {
        let v = a[i] * scale;
        let v = if real { Complex64::new(v.re, 0.0) } else { v };
        push_kept(&mut terms, &mut dropped, x, v, trunc);
    });
    if terms.len() > cap {
        return Err(Error::SupportCap { size: terms.len(), cap });
    }
    let u = f64::EPSILON / 2.0;
    let l2_err = FFT_ROUNDING_C * u * (n as f64).log2() * (f.l2() * g.l1() + 2.0 * f.l1() * g.l2());
    let rounding = (out.volume() as f64).sqrt() * l2_err;
    Ok((terms, dropped, rounding))
}

/// In-place multidimensional FFT over a row-major buffer (unnormalized).
fn fft_nd(buf: &mut [Complex64], dims: &[usize], inverse: bool, planner: &mut FftPlanner<f64>) {
    const BATCH: usize = 16;
    let total = buf.len();
    let mut stride = 1;
    for &n in dims.iter().rev() {
        let fft = if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        };
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        if stride == 1 {
            fft.process_with_scratch(buf, &mut scratch);
        } else {
            let block = n * stride;
            let mut tile = vec![Complex64::new(0.0, 0.0); BATCH * n];
            for outer in (0..total).step_by(block) {
                let mut inner = 0;
                while inner < stride {
                    let w = BATCH.min(stride - inner);
                    for j in 0..n {
                        let row = outer + j * stride + inner;
                        for t in 0..w {
                            tile[t * n + j] = buf[row + t];
                        }
                    }
                    fft.process_with_scratch(&mut tile[..w * n], &mut scratch);
                    for j in 0..n {
                        let row = outer + j * stride + inner;
                        for t in 0..w {
                            buf[row + t] = tile[t * n + j];
                        }
                    }
                    inner += w;
                }
            }
        }
        stride *= n;
    }
}

/// Smallest `m >= n` whose prime factors are 2, 3 and 5.
fn next_smooth(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut k = m;
        for p in [2, 3, 5] {
            while k % p == 0 {
                k /= p;
            }
        }
        if k == 1 {
            return m;
        }
        m += 1;
    }
}

/// Largest number of term pairs the hashed kernel will multiply out.
pub const PAIR_BUDGET: usize = 20_000_000;

fn hashed(f: &AlgebraElement, g: &AlgebraElement, trunc: f64, cap: usize) -> Result<(Terms, f64, f64)> {
    let pairs = f.len().saturating_mul(g.len());
    if pairs > PAIR_BUDGET {
        return Err(Error::WorkCap { pairs, budget: PAIR_BUDGET });
    }
    let mut acc: FxHashMap<GroupElement, Complex64> = FxHashMap::default();
    acc.reserve((f.len() * g.len()).min(cap.saturating_mul(2)));
    // without truncation every accumulated entry survives (up to exact
    // cancellation), so the cap can be enforced as soon as it is crossed
    let limit = if trunc == 0.0 { cap } else { cap.saturating_mul(4) };
    for (x, c) in f.terms() {
        for (y, d) in g.terms() {
            *acc.entry(x.mul_unchecked(y)).or_default() += c * d;
        }
        if acc.len() > limit {
            return Err(Error::SupportCap { size: acc.len(), cap });
        }
    }
    let mut all: Terms = acc.into_iter().collect();
    all.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    let mut terms = Vec::with_capacity(all.len());
    let mut dropped = 0.0;
    for (x, c) in all {
        push_kept(&mut terms, &mut dropped, x, c, trunc);
    }
    Ok((terms, dropped, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::GroupModel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn random_lattice(m: &Arc<GroupModel>, dim: usize, n: usize, radius: i64, complex: bool, rng: &mut ChaCha8Rng) -> AlgebraElement {
        let terms: Vec<_> = (0..n)
            .map(|_| {
                let coords: Vec<i64> = (0..dim).map(|_| rng.gen_range(-radius..=radius)).collect();
                let im = if complex { rng.gen_range(-1.0..1.0) } else { 0.0 };
                (GroupElement::lattice(&coords).unwrap(), Complex64::new(rng.gen_range(-1.0..1.0), im))
            })
            .collect();
        AlgebraElement::new(m.clone(), terms).unwrap()
    }

    #[test]
    fn smooth_sizes() {
        assert_eq!(next_smooth(1), 1);
        assert_eq!(next_smooth(7), 8);
        assert_eq!(next_smooth(2541), 2560);
        assert_eq!(next_smooth(31), 32);
    }

    #[test]
    fn kernels_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dim in 1..=3 {
            let m = Arc::new(GroupModel::lattice(dim).unwrap());
            for complex in [false, true] {
                let f = random_lattice(&m, dim, 40, 6, complex, &mut rng);
                let g = random_lattice(&m, dim, 30, 4, complex, &mut rng);
                let fb = LatticeBlock::of(&f).unwrap();
                let gb = LatticeBlock::of(&g).unwrap();
                let ob = fb.sum_box(&gb);
                let (dense, _, _) = dense_lattice(&fb, &gb, &ob, 0.0);
                let (hash, _, _) = hashed(&f, &g, 0.0, usize::MAX).unwrap();
                let (fft, _, rounding) = fft_lattice(&fb, &gb, &ob, &ob.padded(), 1e-300, usize::MAX).unwrap();
                let d = AlgebraElement::from_sorted(m.clone(), dense, 0.0);
                let h = AlgebraElement::from_sorted(m.clone(), hash, 0.0);
                let t = AlgebraElement::from_sorted(m.clone(), fft, 0.0);
                assert!(d.max_abs_diff(&h).unwrap() < 1e-12);
                let err = d.sub(&t).unwrap().l1();
                assert!(err <= rounding, "fft error {err} exceeds budget {rounding}");
            }
        }
    }
}
