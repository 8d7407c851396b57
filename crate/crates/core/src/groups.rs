//! Discrete group models: element encodings, word metrics, ball enumeration
//! and growth diagnostics.
//!
//! Three families are supported:
//!
//! * `Z^d` (`d <= 4`), elements are integer tuples and the law is addition;
//! * the discrete Heisenberg group, elements `(a, b, c)` stand for the
//!   upper-triangular matrix `[[1, a, c], [0, 1, b], [0, 0, 1]]`;
//! * the locally finite group `⊕ Z/2Z` over 64 coordinates, elements are
//!   finite index sets stored as a bit mask and the law is symmetric
//!   difference.
//!
//! The first two are finitely generated and carry the word length of a
//! symmetric generating set. The locally finite group has no word metric;
//! its "length" is the chain index `min{i : x ∈ G_i}` where `G_i` is the
//! subgroup spanned by the first `i` coordinates (`|G_i| = 2^i`).

use std::fmt;
use std::sync::RwLock;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest supported lattice rank.
pub const MAX_LATTICE_DIM: usize = 4;

/// Number of coordinates of the locally finite group.
pub const LOCALLY_FINITE_RANK: u32 = 64;

/// Default radius cap for ball searches.
pub const DEFAULT_RADIUS_CAP: u32 = 32;

/// Default cap on the number of enumerated elements.
pub const DEFAULT_ELEMENT_CAP: usize = 5_000_000;

/// Radius up to which Heisenberg sphere sizes are taken from BFS before the
/// linear recurrence of the growth series takes over.
const HEISENBERG_SEED_RADIUS: u32 = 12;

/// Coefficients of the denominator `(1-z)^2 (1-z^3) (1-z^4)` of the growth
/// series of the Heisenberg group for the standard generators. Sphere sizes
/// satisfy `sum_j q_j s_{n-j} = 0` for `n >= 10`.
const HEISENBERG_RECURRENCE: [i64; 10] = [1, -2, 1, -1, 1, 1, -1, 1, -2, 1];

/// A point of `Z^d`; unused trailing coordinates are kept at zero so that
/// derived equality and hashing are canonical.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint {
    dim: u8,
    coords: [i64; MAX_LATTICE_DIM],
}

impl LatticePoint {
    pub fn new(coords: &[i64]) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_LATTICE_DIM {
            return Err(invalid(format!(
                "lattice dimension must be in 1..={MAX_LATTICE_DIM}, got {}",
                coords.len()
            )));
        }
        let mut c = [0; MAX_LATTICE_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Self {
            dim: coords.len() as u8,
            coords: c,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords[..self.dim as usize]
    }

    pub fn l1(&self) -> u64 {
        self.coords().iter().map(|c| c.unsigned_abs()).sum()
    }
}

impl fmt::Debug for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords())
    }
}

/// An element of one of the supported groups.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum GroupElement {
    Lattice(LatticePoint),
    /// `(a, b, c)` with `(a,b,c)(a',b',c') = (a+a', b+b', c+c'+ab')`.
    Heisenberg([i64; 3]),
    /// Bit `i` set means coordinate `i` is one.
    Dyadic(u64),
}

impl GroupElement {
    pub fn lattice(coords: &[i64]) -> Result<Self> {
        LatticePoint::new(coords).map(GroupElement::Lattice)
    }

    pub fn heisenberg(a: i64, b: i64, c: i64) -> Self {
        GroupElement::Heisenberg([a, b, c])
    }

    /// Element of `⊕ Z/2Z` with the given coordinates set.
    pub fn dyadic<I: IntoIterator<Item = u32>>(indices: I) -> Result<Self> {
        let mut mask = 0u64;
        for i in indices {
            if i >= LOCALLY_FINITE_RANK {
                return Err(invalid(format!(
                    "locally finite coordinate {i} out of range (< {LOCALLY_FINITE_RANK})"
                )));
            }
            mask ^= 1 << i;
        }
        Ok(GroupElement::Dyadic(mask))
    }

    pub fn family_name(&self) -> String {
        match self {
            GroupElement::Lattice(p) => format!("Z^{}", p.dim),
            GroupElement::Heisenberg(_) => "Heisenberg".into(),
            GroupElement::Dyadic(_) => "locally-finite".into(),
        }
    }

    fn same_family(&self, other: &Self) -> bool {
        match (self, other) {
            (GroupElement::Lattice(a), GroupElement::Lattice(b)) => a.dim == b.dim,
            (GroupElement::Heisenberg(_), GroupElement::Heisenberg(_)) => true,
            (GroupElement::Dyadic(_), GroupElement::Dyadic(_)) => true,
            _ => false,
        }
    }

    /// Group law. Fails if the elements come from different families.
    pub fn try_mul(&self, rhs: &Self) -> Result<Self> {
        if !self.same_family(rhs) {
            return Err(Error::FamilyMismatch {
                left: self.family_name(),
                right: rhs.family_name(),
            });
        }
        Ok(self.mul_unchecked(rhs))
    }

    /// Group law without the family check; callers must have validated the
    /// operands already.
    #[inline]
    pub(crate) fn mul_unchecked(&self, rhs: &Self) -> Self {
        match (self, rhs) {
            (GroupElement::Lattice(a), GroupElement::Lattice(b)) => {
                let mut coords = a.coords;
                for (c, d) in coords.iter_mut().zip(b.coords.iter()) {
                    *c += d;
                }
                GroupElement::Lattice(LatticePoint { dim: a.dim, coords })
            }
            (GroupElement::Heisenberg(x), GroupElement::Heisenberg(y)) => {
                GroupElement::Heisenberg([x[0] + y[0], x[1] + y[1], x[2] + y[2] + x[0] * y[1]])
            }
            (GroupElement::Dyadic(x), GroupElement::Dyadic(y)) => GroupElement::Dyadic(x ^ y),
            _ => unreachable!("family mismatch in mul_unchecked"),
        }
    }

    pub fn inverse(&self) -> Self {
        match self {
            GroupElement::Lattice(a) => {
                let mut coords = a.coords;
                for c in coords.iter_mut() {
                    *c = -*c;
                }
                GroupElement::Lattice(LatticePoint { dim: a.dim, coords })
            }
            GroupElement::Heisenberg([a, b, c]) => GroupElement::Heisenberg([-a, -b, a * b - c]),
            GroupElement::Dyadic(x) => GroupElement::Dyadic(*x),
        }
    }

    /// Flat integer encoding used by the JSON formats: lattice coordinates,
    /// the Heisenberg triple, or the sorted index set.
    pub fn encode(&self) -> Vec<i64> {
        match self {
            GroupElement::Lattice(p) => p.coords().to_vec(),
            GroupElement::Heisenberg(t) => t.to_vec(),
            GroupElement::Dyadic(mask) => (0..LOCALLY_FINITE_RANK)
                .filter(|i| mask >> i & 1 == 1)
                .map(i64::from)
                .collect(),
        }
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupElement::Lattice(p) => {
                let parts: Vec<String> = p.coords().iter().map(|c| c.to_string()).collect();
                write!(f, "({})", parts.join(","))
            }
            GroupElement::Heisenberg([a, b, c]) => write!(f, "({a},{b},{c})"),
            GroupElement::Dyadic(_) => {
                let parts: Vec<String> = self.encode().iter().map(|c| c.to_string()).collect();
                write!(f, "{{{}}}", parts.join(","))
            }
        }
    }
}

/// The group family and its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Lattice { dim: usize },
    Heisenberg,
    LocallyFinite,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Lattice { dim } => write!(f, "Z^{dim}"),
            Family::Heisenberg => write!(f, "Heisenberg"),
            Family::LocallyFinite => write!(f, "locally-finite"),
        }
    }
}

/// How [`GroupModel::word_length`] measures elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthKind {
    /// Word length for a symmetric generating set.
    Word,
    /// Chain index of the locally finite group. This is an implementation
    /// construct, not a word metric.
    Chain,
}

/// Enumeration caps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Caps {
    pub radius: u32,
    pub elements: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            radius: DEFAULT_RADIUS_CAP,
            elements: DEFAULT_ELEMENT_CAP,
        }
    }
}

#[derive(Default)]
struct BallCache {
    dist: FxHashMap<GroupElement, u32>,
    shells: Vec<Vec<GroupElement>>,
}

/// A discrete group with a fixed generating set (or chain) and a BFS cache.
///
/// The model is immutable from the outside; the ball cache grows behind a
/// lock, so a model can be shared across threads.
pub struct GroupModel {
    family: Family,
    generators: Vec<GroupElement>,
    standard: bool,
    caps: Caps,
    cache: RwLock<BallCache>,
}

impl fmt::Debug for GroupModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroupModel")
            .field("family", &self.family)
            .field("generators", &self.generators)
            .field("caps", &self.caps)
            .finish()
    }
}

impl Clone for GroupModel {
    fn clone(&self) -> Self {
        Self {
            family: self.family,
            generators: self.generators.clone(),
            standard: self.standard,
            caps: self.caps,
            cache: RwLock::new(BallCache::default()),
        }
    }
}

impl GroupModel {
    /// `Z^d` with generators `±e_i`.
    pub fn lattice(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_LATTICE_DIM {
            return Err(invalid(format!("lattice dimension must be in 1..={MAX_LATTICE_DIM}")));
        }
        let mut gens = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            for s in [1, -1] {
                let mut c = vec![0; dim];
                c[i] = s;
                gens.push(GroupElement::lattice(&c)?);
            }
        }
        Ok(Self::build(Family::Lattice { dim }, gens, true))
    }

    /// Heisenberg group with generators `(±1,0,0)`, `(0,±1,0)`.
    pub fn heisenberg() -> Self {
        let gens = vec![
            GroupElement::heisenberg(1, 0, 0),
            GroupElement::heisenberg(-1, 0, 0),
            GroupElement::heisenberg(0, 1, 0),
            GroupElement::heisenberg(0, -1, 0),
        ];
        Self::build(Family::Heisenberg, gens, true)
    }

    /// The locally finite group `⊕ Z/2Z` with its coordinate chain.
    pub fn locally_finite() -> Self {
        let gens = (0..LOCALLY_FINITE_RANK)
            .map(|i| GroupElement::Dyadic(1 << i))
            .collect();
        Self::build(Family::LocallyFinite, gens, true)
    }

    /// A finitely generated family with a user supplied generating set. The
    /// identity is dropped and missing inverses are added so that the set is
    /// symmetric.
    pub fn with_generators(family: Family, generators: Vec<GroupElement>) -> Result<Self> {
        if family == Family::LocallyFinite {
            return Err(invalid("the locally finite group uses its chain, not generators"));
        }
        let probe = match family {
            Family::Lattice { dim } => Self::lattice(dim)?,
            Family::Heisenberg => Self::heisenberg(),
            Family::LocallyFinite => unreachable!(),
        };
        let id = probe.identity();
        let mut gens: Vec<GroupElement> = Vec::new();
        for g in generators {
            probe.check(&g)?;
            if g == id {
                continue;
            }
            for h in [g, g.inverse()] {
                if !gens.contains(&h) {
                    gens.push(h);
                }
            }
        }
        if gens.is_empty() {
            return Err(invalid("empty generating set"));
        }
        let standard = {
            let mut a = gens.clone();
            let mut b = probe.generators.clone();
            a.sort();
            b.sort();
            a == b
        };
        Ok(Self::build(family, gens, standard))
    }

    fn build(family: Family, generators: Vec<GroupElement>, standard: bool) -> Self {
        Self {
            family,
            generators,
            standard,
            caps: Caps::default(),
            cache: RwLock::new(BallCache::default()),
        }
    }

    pub fn with_caps(mut self, caps: Caps) -> Self {
        self.caps = caps;
        self.cache = RwLock::new(BallCache::default());
        self
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn caps(&self) -> Caps {
        self.caps
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    pub fn length_kind(&self) -> LengthKind {
        match self.family {
            Family::LocallyFinite => LengthKind::Chain,
            _ => LengthKind::Word,
        }
    }

    /// Known order of polynomial growth, if the family has one.
    pub fn growth_order(&self) -> Option<f64> {
        match self.family {
            Family::Lattice { dim } => Some(dim as f64),
            Family::Heisenberg => Some(4.0),
            Family::LocallyFinite => None,
        }
    }

    pub fn identity(&self) -> GroupElement {
        match self.family {
            Family::Lattice { dim } => GroupElement::Lattice(LatticePoint {
                dim: dim as u8,
                coords: [0; MAX_LATTICE_DIM],
            }),
            Family::Heisenberg => GroupElement::Heisenberg([0; 3]),
            Family::LocallyFinite => GroupElement::Dyadic(0),
        }
    }

    /// Checks that `x` belongs to this group.
    pub fn check(&self, x: &GroupElement) -> Result<()> {
        let ok = match (self.family, x) {
            (Family::Lattice { dim }, GroupElement::Lattice(p)) => p.dim() == dim,
            (Family::Heisenberg, GroupElement::Heisenberg(_)) => true,
            (Family::LocallyFinite, GroupElement::Dyadic(_)) => true,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ForeignElement {
                element: x.to_string(),
                group: self.family.to_string(),
            })
        }
    }

    pub fn multiply(&self, x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
        self.check(x)?;
        self.check(y)?;
        Ok(x.mul_unchecked(y))
    }

    pub fn inverse(&self, x: &GroupElement) -> Result<GroupElement> {
        self.check(x)?;
        Ok(x.inverse())
    }

    /// Decodes the flat integer encoding produced by [`GroupElement::encode`].
    pub fn decode(&self, raw: &[i64]) -> Result<GroupElement> {
        match self.family {
            Family::Lattice { dim } => {
                if raw.len() != dim {
                    return Err(invalid(format!("expected {dim} coordinates, got {raw:?}")));
                }
                GroupElement::lattice(raw)
            }
            Family::Heisenberg => match raw {
                [a, b, c] => Ok(GroupElement::heisenberg(*a, *b, *c)),
                _ => Err(invalid(format!("Heisenberg elements are triples, got {raw:?}"))),
            },
            Family::LocallyFinite => {
                let mut idx = Vec::with_capacity(raw.len());
                for &i in raw {
                    if i < 0 {
                        return Err(invalid(format!("negative coordinate {i}")));
                    }
                    idx.push(i as u32);
                }
                GroupElement::dyadic(idx)
            }
        }
    }

    /// Length of `x`: the word length `τ_U(x)` for finitely generated
    /// families, the chain index for the locally finite group.
    pub fn word_length(&self, x: &GroupElement) -> Result<u32> {
        self.check(x)?;
        match (self.family, x) {
            (Family::LocallyFinite, GroupElement::Dyadic(mask)) => {
                Ok(LOCALLY_FINITE_RANK - mask.leading_zeros())
            }
            // standard generators: the word length is the l1 norm
            (Family::Lattice { .. }, GroupElement::Lattice(p)) if self.standard => {
                u32::try_from(p.l1()).map_err(|_| self.radius_error(x))
            }
            _ => self.bfs_length(x),
        }
    }

    fn radius_error(&self, x: &GroupElement) -> Error {
        Error::RadiusExceeded {
            element: x.to_string(),
            cap: self.caps.radius,
        }
    }

    fn bfs_length(&self, x: &GroupElement) -> Result<u32> {
        if let Some(&n) = self.cache.read().unwrap().dist.get(x) {
            return Ok(n);
        }
        // Heisenberg: the abelianisation gives a cheap lower bound.
        if let (true, GroupElement::Heisenberg([a, b, _])) = (self.standard, x) {
            if a.unsigned_abs() + b.unsigned_abs() > self.caps.radius as u64 {
                return Err(self.radius_error(x));
            }
        }
        let mut radius = self.cache.read().unwrap().shells.len() as u32;
        while radius <= self.caps.radius {
            self.extend_to(radius)?;
            if let Some(&n) = self.cache.read().unwrap().dist.get(x) {
                return Ok(n);
            }
            radius += 1;
        }
        Err(self.radius_error(x))
    }

    /// Grows the BFS cache so that shells `0..=n` are present.
    fn extend_to(&self, n: u32) -> Result<()> {
        if self.cache.read().unwrap().shells.len() > n as usize {
            return Ok(());
        }
        let mut cache = self.cache.write().unwrap();
        if cache.shells.is_empty() {
            let id = self.identity();
            cache.dist.insert(id, 0);
            cache.shells.push(vec![id]);
        }
        while cache.shells.len() <= n as usize {
            let radius = cache.shells.len() as u32;
            let mut next = Vec::new();
            let last = cache.shells.last().unwrap().clone();
            for x in &last {
                for g in &self.generators {
                    let y = x.mul_unchecked(g);
                    if !cache.dist.contains_key(&y) {
                        cache.dist.insert(y, radius);
                        next.push(y);
                    }
                }
            }
            if cache.dist.len() > self.caps.elements {
                return Err(Error::ElementCap {
                    cap: self.caps.elements,
                    radius,
                });
            }
            next.sort_unstable();
            cache.shells.push(next);
        }
        Ok(())
    }

    /// All elements of length exactly `n`, sorted.
    pub fn shell(&self, n: u32) -> Result<Vec<GroupElement>> {
        if n > self.caps.radius {
            return Err(invalid(format!("radius {n} above cap {}", self.caps.radius)));
        }
        if self.family == Family::LocallyFinite {
            if n == 0 {
                return Ok(vec![GroupElement::Dyadic(0)]);
            }
            if n > LOCALLY_FINITE_RANK {
                return Ok(Vec::new());
            }
            let lo = 1u64 << (n - 1);
            let count = lo as usize;
            if count > self.caps.elements {
                return Err(Error::ElementCap {
                    cap: self.caps.elements,
                    radius: n,
                });
            }
            return Ok((0..lo).map(|m| GroupElement::Dyadic(lo | m)).collect());
        }
        self.extend_to(n)?;
        Ok(self.cache.read().unwrap().shells[n as usize].clone())
    }

    /// The ball `U^n`: every element of length `<= n`, sorted by length and
    /// then by encoding. For the locally finite group this is `G_n`.
    pub fn ball(&self, n: u32) -> Result<Vec<GroupElement>> {
        if n > self.caps.radius {
            return Err(invalid(format!("radius {n} above cap {}", self.caps.radius)));
        }
        let mut out = Vec::new();
        for k in 0..=n {
            out.extend(self.shell(k)?);
            if out.len() > self.caps.elements {
                return Err(Error::ElementCap {
                    cap: self.caps.elements,
                    radius: k,
                });
            }
        }
        Ok(out)
    }

    /// Sphere sizes `|U^n \ U^{n-1}|` for `n = 0..=n_max`.
    ///
    /// Uses closed forms where they exist (standard lattice generators, the
    /// locally finite chain), the linear recurrence of the growth series for
    /// the Heisenberg group, and BFS otherwise. Unlike [`ball`](Self::ball)
    /// this is not bound by the radius cap when a closed form is available.
    pub fn sphere_sizes(&self, n_max: u32) -> Result<Vec<f64>> {
        match self.family {
            Family::Lattice { dim } if self.standard => Ok((0..=n_max)
                .map(|n| lattice_sphere_size(dim, n as u64))
                .collect()),
            Family::LocallyFinite => Ok((0..=n_max)
                .map(|n| match n {
                    0 => 1.0,
                    n if n <= LOCALLY_FINITE_RANK => 2f64.powi(n as i32 - 1),
                    _ => 0.0,
                })
                .collect()),
            Family::Heisenberg if self.standard => {
                let seed = n_max.min(HEISENBERG_SEED_RADIUS);
                let mut s: Vec<f64> = (0..=seed)
                    .map(|k| self.shell(k).map(|v| v.len() as f64))
                    .collect::<Result<_>>()?;
                while s.len() <= n_max as usize {
                    let n = s.len();
                    let mut next = 0.0;
                    for (j, q) in HEISENBERG_RECURRENCE.iter().enumerate().skip(1) {
                        next -= *q as f64 * s[n - j];
                    }
                    s.push(next);
                }
                Ok(s)
            }
            _ => (0..=n_max)
                .map(|k| self.shell(k).map(|v| v.len() as f64))
                .collect(),
        }
    }

    /// Shell counts by enumeration and the fitted growth exponent.
    pub fn growth_report(&self, n_max: u32) -> Result<GrowthReport> {
        if n_max < 3 {
            return Err(invalid("growth_report needs n_max >= 3"));
        }
        let mut shells = Vec::with_capacity(n_max as usize + 1);
        for n in 0..=n_max {
            shells.push(self.shell(n)?.len() as u64);
        }
        let mut balls = Vec::with_capacity(shells.len());
        let mut acc = 0u64;
        for s in &shells {
            acc += s;
            balls.push(acc);
        }
        let lo = n_max.div_ceil(2).max(1);
        let (xs, ys): (Vec<f64>, Vec<f64>) = (lo..=n_max)
            .map(|n| ((n as f64).ln(), (balls[n as usize] as f64).ln()))
            .unzip();
        let fitted_exponent = least_squares_slope(&xs, &ys);
        Ok(GrowthReport {
            family: self.family.to_string(),
            length: self.length_kind(),
            shells,
            balls,
            fit_range: (lo, n_max),
            fitted_exponent,
        })
    }
}

/// Number of points of `Z^d` with `|x|_1 = n`.
pub fn lattice_sphere_size(dim: usize, n: u64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    // sum_k 2^k C(d,k) C(n-1,k-1)
    let mut total = 0.0;
    for k in 1..=dim.min(n as usize) {
        total += 2f64.powi(k as i32) * binomial(dim as u64, k as u64) * binomial(n - 1, k as u64 - 1);
    }
    total
}

fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r.round()
}

pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        f64::NAN
    } else {
        sxy / sxx
    }
}

/// Shell counts and fitted order of growth.
#[derive(Clone, Debug, Serialize)]
pub struct GrowthReport {
    pub family: String,
    pub length: LengthKind,
    /// `|U^n \ U^{n-1}|` for `n = 0..=n_max`.
    pub shells: Vec<u64>,
    /// `|U^n|`, the cumulative sums of `shells`.
    pub balls: Vec<u64>,
    /// Range of `n` used by the log-log fit.
    pub fit_range: (u32, u32),
    /// Least-squares slope of `log |U^n|` against `log n`.
    pub fitted_exponent: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(c: &[i64]) -> GroupElement {
        GroupElement::lattice(c).unwrap()
    }

    #[test]
    fn multiply_examples() {
        assert_eq!(z(&[1, 2]).try_mul(&z(&[3, -1])).unwrap(), z(&[4, 1]));
        let h = GroupElement::heisenberg;
        assert_eq!(h(1, 0, 0).try_mul(&h(0, 1, 0)).unwrap(), h(1, 1, 1));
        let d = |v: &[u32]| GroupElement::dyadic(v.iter().copied()).unwrap();
        assert_eq!(d(&[1, 3]).try_mul(&d(&[3, 5])).unwrap(), d(&[1, 5]));
    }

    #[test]
    fn heisenberg_matches_matrix_product() {
        // 3x3 upper unitriangular matrices as the oracle.
        fn mat(a: i64, b: i64, c: i64) -> [[i64; 3]; 3] {
            [[1, a, c], [0, 1, b], [0, 0, 1]]
        }
        fn prod(x: [[i64; 3]; 3], y: [[i64; 3]; 3]) -> [[i64; 3]; 3] {
            let mut r = [[0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        r[i][j] += x[i][k] * y[k][j];
                    }
                }
            }
            r
        }
        for (x, y) in [([1, 0, 0], [0, 1, 0]), ([2, -3, 5], [-1, 4, 7]), ([0, 0, 1], [3, 3, 3])] {
            let p = GroupElement::Heisenberg(x).mul_unchecked(&GroupElement::Heisenberg(y));
            let m = prod(mat(x[0], x[1], x[2]), mat(y[0], y[1], y[2]));
            assert_eq!(p, GroupElement::heisenberg(m[0][1], m[1][2], m[0][2]));
        }
    }

    #[test]
    fn mismatched_families_error() {
        let e = z(&[1]).try_mul(&GroupElement::heisenberg(1, 0, 0));
        assert!(matches!(e, Err(Error::FamilyMismatch { .. })));
        let e = z(&[1]).try_mul(&z(&[1, 2]));
        assert!(matches!(e, Err(Error::FamilyMismatch { .. })));
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(z(&[5]).inverse(), z(&[-5]));
        assert_eq!(GroupElement::heisenberg(1, 1, 1).inverse(), GroupElement::heisenberg(-1, -1, 0));
        let d = GroupElement::dyadic([2, 7]).unwrap();
        assert_eq!(d.inverse(), d);
    }

    #[test]
    fn word_length_examples() {
        let z1 = GroupModel::lattice(1).unwrap();
        assert_eq!(z1.word_length(&z(&[7])).unwrap(), 7);
        let h = GroupModel::heisenberg();
        assert_eq!(h.word_length(&GroupElement::heisenberg(0, 0, 1)).unwrap(), 4);
        for m in [z1, h, GroupModel::locally_finite()] {
            assert_eq!(m.word_length(&m.identity()).unwrap(), 0);
        }
    }

    #[test]
    fn radius_exceeded_is_reported() {
        let h = GroupModel::heisenberg().with_caps(Caps {
            radius: 5,
            ..Caps::default()
        });
        let far = GroupElement::heisenberg(0, 0, 100);
        assert!(matches!(h.word_length(&far), Err(Error::RadiusExceeded { .. })));
        let far = GroupElement::heisenberg(10, 0, 0);
        assert!(matches!(h.word_length(&far), Err(Error::RadiusExceeded { .. })));
    }

    #[test]
    fn element_cap_is_reported() {
        let h = GroupModel::heisenberg().with_caps(Caps {
            radius: 32,
            elements: 1000,
        });
        assert!(matches!(h.ball(10), Err(Error::ElementCap { .. })));
    }

    #[test]
    fn ball_examples() {
        let z1 = GroupModel::lattice(1).unwrap();
        let b = z1.ball(3).unwrap();
        assert_eq!(b.len(), 7);
        let z2 = GroupModel::lattice(2).unwrap();
        let b = z2.ball(2).unwrap();
        // lattice points with |a|+|b| <= 2
        let mut count = 0;
        for a in -2i64..=2 {
            for c in -2i64..=2 {
                if a.abs() + c.abs() <= 2 {
                    count += 1;
                }
            }
        }
        assert_eq!(b.len(), count);
        assert_eq!(count, 13);
        for m in [z1, z2, GroupModel::heisenberg(), GroupModel::locally_finite()] {
            assert_eq!(m.ball(0).unwrap(), vec![m.identity()]);
        }
    }

    #[test]
    fn locally_finite_chain() {
        let g = GroupModel::locally_finite();
        for i in 0..6 {
            let ball = g.ball(i).unwrap();
            assert_eq!(ball.len(), 1 << i);
            // G_i is a subgroup
            for x in &ball {
                for y in &ball {
                    assert!(ball.contains(&x.mul_unchecked(y)));
                }
            }
        }
        let x = GroupElement::dyadic([2]).unwrap();
        assert_eq!(g.word_length(&x).unwrap(), 3);
    }

    #[test]
    fn growth_exponents() {
        let z2 = GroupModel::lattice(2).unwrap();
        let r = z2.growth_report(20).unwrap();
        for (n, b) in r.balls.iter().enumerate() {
            let n = n as u64;
            assert_eq!(*b, 2 * n * n + 2 * n + 1);
        }
        assert!((r.fitted_exponent - 2.0).abs() <= 0.3, "{}", r.fitted_exponent);
        let z1 = GroupModel::lattice(1).unwrap();
        let r = z1.growth_report(20).unwrap();
        assert!((r.fitted_exponent - 1.0).abs() <= 0.2);
    }

    #[test]
    fn sphere_sizes_match_enumeration() {
        for m in [
            GroupModel::lattice(1).unwrap(),
            GroupModel::lattice(3).unwrap(),
            GroupModel::locally_finite(),
        ] {
            let fast = m.sphere_sizes(10).unwrap();
            for n in 0..=10 {
                assert_eq!(fast[n as usize], m.shell(n).unwrap().len() as f64, "{:?} n={n}", m.family());
            }
        }
    }

    #[test]
    fn heisenberg_recurrence_matches_bfs() {
        let h = GroupModel::heisenberg();
        let fast = h.sphere_sizes(30).unwrap();
        // BFS with a separate model so the cache does not serve the seed
        let bfs = GroupModel::heisenberg();
        for n in 0..=30u32 {
            assert_eq!(fast[n as usize], bfs.shell(n).unwrap().len() as f64, "n = {n}");
        }
    }

    #[test]
    fn custom_generators_are_symmetrised() {
        let m = GroupModel::with_generators(
            Family::Lattice { dim: 1 },
            vec![z(&[1]), z(&[2]), z(&[0])],
        )
        .unwrap();
        assert_eq!(m.generators().len(), 4);
        assert_eq!(m.word_length(&z(&[7])).unwrap(), 4);
        assert_eq!(m.word_length(&z(&[8])).unwrap(), 4);
    }

    #[test]
    fn encode_decode() {
        let h = GroupModel::heisenberg();
        let x = GroupElement::heisenberg(1, -2, 3);
        assert_eq!(h.decode(&x.encode()).unwrap(), x);
        let g = GroupModel::locally_finite();
        let d = GroupElement::dyadic([0, 4, 63]).unwrap();
        assert_eq!(d.encode(), vec![0, 4, 63]);
        assert_eq!(g.decode(&d.encode()).unwrap(), d);
        assert!(g.decode(&[64]).is_err());
        assert!(GroupModel::lattice(2).unwrap().decode(&[1]).is_err());
    }
}
