//! Single-site distributions.
//!
//! Every distribution carries an exact CDF, an i.i.d. sampler, a nominal
//! Hölder exponent and the concentration moduli
//!
//! ```text
//! S_μ(s) = sup_a μ[a, a+s]
//! Q_μ(s) = ‖ρ‖_∞ s      (bounded density)
//!        = 8 S_μ(s)     (otherwise)
//! ```
//!
//! Intervals follow the half-open convention `μ((a, b]) = F(b) − F(a)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Digit depth of the Cantor sampler (bias below `3^-40`).
pub const CANTOR_SAMPLE_DIGITS: usize = 40;

/// The self-similar CDF recursions stop once the unresolved mass falls
/// below this fraction of the accumulated value.
pub const CDF_RELATIVE_RESOLUTION: f64 = 1e-16;

/// Hölder exponent of the middle-thirds Cantor measure, `ln 2 / ln 3`.
pub fn cantor_alpha() -> f64 {
    std::f64::consts::LN_2 / 3f64.ln()
}

/// One contraction `x ↦ ratio · x + offset` of an iterated function system,
/// chosen with probability `weight`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub ratio: f64,
    pub offset: f64,
    pub weight: f64,
}

impl AffineMap {
    #[inline]
    fn apply(&self, x: f64) -> f64 {
        self.ratio * x + self.offset
    }

    fn fixed_point(&self) -> f64 {
        self.offset / (1.0 - self.ratio)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionKind {
    Uniform { a: f64, b: f64 },
    /// Takes `v1` with probability `p` and `v0` otherwise.
    Bernoulli { p: f64, v0: f64, v1: f64 },
    /// Standard middle-thirds Cantor measure on `[0, 1]`.
    Cantor,
    /// Self-similar measure of contractions with pairwise disjoint images,
    /// stored sorted by image position.
    Ifs { maps: Vec<AffineMap> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleSiteDistribution {
    kind: DistributionKind,
    alpha: f64,
    /// `U` with `Q_μ(s) ≤ U s^α` for small `s`. `None` for atomic laws.
    holder_constant: Option<f64>,
    support: (f64, f64),
}

impl SingleSiteDistribution {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidDistribution(format!(
                "uniform needs finite a < b, got ({a}, {b})"
            )));
        }
        Ok(Self {
            kind: DistributionKind::Uniform { a, b },
            alpha: 1.0,
            holder_constant: Some(1.0 / (b - a)),
            support: (a, b),
        })
    }

    /// Two-point law. Atomic, hence not Hölder continuous: the exponent is
    /// reported as a nominal 1 (used only for `β_L`) and the constant is `None`.
    pub fn bernoulli(p: f64, v0: f64, v1: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidDistribution(format!(
                "bernoulli needs p in (0, 1), got {p}"
            )));
        }
        if !(v0.is_finite() && v1.is_finite()) || v0 == v1 {
            return Err(Error::InvalidDistribution(format!(
                "bernoulli needs distinct finite values, got {v0}, {v1}"
            )));
        }
        Ok(Self {
            kind: DistributionKind::Bernoulli { p, v0, v1 },
            alpha: 1.0,
            holder_constant: None,
            support: (v0.min(v1), v0.max(v1)),
        })
    }

    pub fn cantor() -> Self {
        Self {
            kind: DistributionKind::Cantor,
            alpha: cantor_alpha(),
            holder_constant: Some(16.0),
            support: (0.0, 1.0),
        }
    }

    /// Self-similar measure of `maps`. Ratios must lie in `(0, 1)`, weights
    /// must be positive and sum to one, and the images of the attractor hull
    /// must not overlap (touching endpoints are allowed).
    pub fn ifs(maps: Vec<AffineMap>) -> Result<Self> {
        if maps.len() < 2 {
            return Err(Error::InvalidDistribution(
                "ifs needs at least two maps".into(),
            ));
        }
        for m in &maps {
            if !(m.ratio > 0.0 && m.ratio < 1.0) {
                return Err(Error::InvalidDistribution(format!(
                    "ifs ratio {} not in (0, 1)",
                    m.ratio
                )));
            }
            if !(m.weight > 0.0) || !m.offset.is_finite() {
                return Err(Error::InvalidDistribution(format!(
                    "ifs map has invalid weight {} or offset {}",
                    m.weight, m.offset
                )));
            }
        }
        let total: f64 = maps.iter().map(|m| m.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!(
                "ifs weights sum to {total}, expected 1"
            )));
        }
        let lo = maps.iter().map(AffineMap::fixed_point).fold(f64::INFINITY, f64::min);
        let hi = maps
            .iter()
            .map(AffineMap::fixed_point)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut maps = maps;
        maps.sort_by(|x, y| x.apply(lo).total_cmp(&y.apply(lo)));
        for w in maps.windows(2) {
            if w[0].apply(hi) > w[1].apply(lo) {
                return Err(Error::InvalidDistribution(format!(
                    "ifs images overlap: [{}, {}] and [{}, {}]",
                    w[0].apply(lo),
                    w[0].apply(hi),
                    w[1].apply(lo),
                    w[1].apply(hi)
                )));
            }
        }
        let alpha = maps
            .iter()
            .map(|m| m.weight.ln() / m.ratio.ln())
            .fold(f64::INFINITY, f64::min)
            .min(1.0);
        let mut dist = Self {
            kind: DistributionKind::Ifs { maps },
            alpha,
            holder_constant: None,
            support: (lo, hi),
        };
        dist.holder_constant = Some(dist.estimate_holder_constant());
        Ok(dist)
    }

    pub fn from_kind(kind: DistributionKind) -> Result<Self> {
        match kind {
            DistributionKind::Uniform { a, b } => Self::uniform(a, b),
            DistributionKind::Bernoulli { p, v0, v1 } => Self::bernoulli(p, v0, v1),
            DistributionKind::Cantor => Ok(Self::cantor()),
            DistributionKind::Ifs { maps } => Self::ifs(maps),
        }
    }

    pub fn with_holder_constant(mut self, u: f64) -> Result<Self> {
        if !(u >= 0.0 && u.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "holder constant must be finite and nonnegative, got {u}"
            )));
        }
        self.holder_constant = Some(u);
        Ok(self)
    }

    pub fn kind(&self) -> &DistributionKind {
        &self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn holder_constant(&self) -> Option<f64> {
        self.holder_constant
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn support_width(&self) -> f64 {
        self.support.1 - self.support.0
    }

    /// `‖ρ‖_∞` when the law has a bounded density.
    pub fn density_sup(&self) -> Option<f64> {
        match self.kind {
            DistributionKind::Uniform { a, b } => Some(1.0 / (b - a)),
            _ => None,
        }
    }

    pub fn has_atoms(&self) -> bool {
        matches!(self.kind, DistributionKind::Bernoulli { .. })
    }

    pub fn sample(&self, stream: &mut RandomStream) -> f64 {
        match &self.kind {
            DistributionKind::Uniform { a, b } => a + (b - a) * stream.next_f64(),
            DistributionKind::Bernoulli { p, v0, v1 } => {
                if stream.next_f64() < *p {
                    *v1
                } else {
                    *v0
                }
            }
            DistributionKind::Cantor => cantor_from_bits(stream.next_u64_bits()),
            DistributionKind::Ifs { maps } => self.sample_ifs(maps, stream),
        }
    }

    pub fn sample_into(&self, out: &mut [f64], stream: &mut RandomStream) {
        for slot in out.iter_mut() {
            *slot = self.sample(stream);
        }
    }

    fn sample_ifs(&self, maps: &[AffineMap], stream: &mut RandomStream) -> f64 {
        let (lo, hi) = self.support;
        let width = hi - lo;
        // x = S_{i1}(S_{i2}(... S_{ik}(lo))) accumulated outside-in.
        let mut x = 0.0;
        let mut factor = 1.0;
        for _ in 0..64 {
            let u = stream.next_f64();
            let mut acc = 0.0;
            let mut chosen = &maps[maps.len() - 1];
            for m in maps {
                acc += m.weight;
                if u < acc {
                    chosen = m;
                    break;
                }
            }
            x += factor * chosen.offset;
            factor *= chosen.ratio;
            if factor * width < 1e-17 * width.max(lo.abs()).max(hi.abs()) {
                break;
            }
        }
        (x + factor * lo).clamp(lo, hi)
    }

    /// Exact CDF `F(x) = μ((−∞, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        match &self.kind {
            DistributionKind::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            DistributionKind::Bernoulli { p, v0, v1 } => {
                let (low, p_low, high) = if v0 < v1 {
                    (*v0, 1.0 - p, *v1)
                } else {
                    (*v1, *p, *v0)
                };
                if x < low {
                    0.0
                } else if x < high {
                    p_low
                } else {
                    1.0
                }
            }
            DistributionKind::Cantor => cantor_cdf(x),
            DistributionKind::Ifs { maps } => ifs_cdf(maps, self.support, x),
        }
    }

    /// Left limit `F(x−) = μ((−∞, x))`; differs from [`cdf`](Self::cdf) only at atoms.
    pub fn cdf_left(&self, x: f64) -> f64 {
        match &self.kind {
            DistributionKind::Bernoulli { p, v0, v1 } => {
                let (low, p_low, high) = if v0 < v1 {
                    (*v0, 1.0 - p, *v1)
                } else {
                    (*v1, *p, *v0)
                };
                if x <= low {
                    0.0
                } else if x <= high {
                    p_low
                } else {
                    1.0
                }
            }
            _ => self.cdf(x),
        }
    }

    /// `μ((a, b])`.
    pub fn interval_measure(&self, a: f64, b: f64) -> Result<f64> {
        if a > b {
            return Err(Error::ArgumentOrder { a, b });
        }
        Ok((self.cdf(b) - self.cdf(a)).clamp(0.0, 1.0))
    }

    /// `S_μ(s) = sup_a μ[a, a+s]`.
    ///
    /// Exact for uniform and Bernoulli laws. For self-similar laws the
    /// supremum is taken over windows ending at a left endpoint of a cylinder
    /// in the net of cylinders no longer than `s · r_max²`, crediting every
    /// cylinder the window touches with its full mass. The result is an upper
    /// bound on the true supremum, and exact at widths `r^k · width` of
    /// homogeneous systems such as the triadic widths of the Cantor measure.
    pub fn s_mu(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::NonPositiveWidth(s));
        }
        if s >= self.support_width() {
            return Ok(1.0);
        }
        Ok(match &self.kind {
            DistributionKind::Uniform { a, b } => (s / (b - a)).min(1.0),
            DistributionKind::Bernoulli { p, v0, v1 } => {
                if s >= (v1 - v0).abs() {
                    1.0
                } else {
                    p.max(1.0 - p)
                }
            }
            DistributionKind::Cantor => net_window_sup(&cantor_maps(), self.support, s),
            DistributionKind::Ifs { maps } => net_window_sup(maps, self.support, s),
        })
    }

    /// `Q_μ(s)`: `‖ρ‖_∞ s` with a bounded density, `8 S_μ(s)` otherwise.
    pub fn q_mu(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::NonPositiveWidth(s));
        }
        match self.density_sup() {
            Some(rho) => Ok(rho * s),
            None => Ok(8.0 * self.s_mu(s)?),
        }
    }

    /// `S` of the law of `coupling · ω`.
    pub fn scaled_s_mu(&self, s: f64, coupling: f64) -> Result<f64> {
        check_coupling(coupling)?;
        self.s_mu(s / coupling)
    }

    /// `Q` of the law of `coupling · ω`.
    pub fn scaled_q_mu(&self, s: f64, coupling: f64) -> Result<f64> {
        check_coupling(coupling)?;
        self.q_mu(s / coupling)
    }

    pub fn holder_modulus(&self, s_values: &[f64]) -> Result<HolderModulus> {
        let mut s_mu = Vec::with_capacity(s_values.len());
        let mut q_mu = Vec::with_capacity(s_values.len());
        for &s in s_values {
            s_mu.push(self.s_mu(s)?);
            q_mu.push(self.q_mu(s)?);
        }
        Ok(HolderModulus {
            s_values: s_values.to_vec(),
            s_mu,
            q_mu,
        })
    }

    fn estimate_holder_constant(&self) -> f64 {
        let DistributionKind::Ifs { maps } = &self.kind else {
            return 0.0;
        };
        let r_max = maps.iter().map(|m| m.ratio).fold(0.0, f64::max);
        let width = self.support_width();
        let mut worst: f64 = 0.0;
        let mut s = width * r_max;
        // keep the cylinder nets small: m^(k+2) cylinders at level k
        let levels = ((2e5f64).ln() / (maps.len() as f64).ln()).floor() as i32 - 2;
        for _ in 0..levels.max(1) {
            if let Ok(v) = self.s_mu(s) {
                worst = worst.max(v / s.powf(self.alpha));
            }
            s *= r_max;
        }
        8.0 * worst
    }
}

fn check_coupling(coupling: f64) -> Result<()> {
    if coupling > 0.0 && coupling.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "coupling must be positive, got {coupling}"
        )))
    }
}

/// Samples `n` i.i.d. draws from `dist`.
pub fn sample_iid(
    dist: &SingleSiteDistribution,
    n: usize,
    stream: &mut RandomStream,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    let mut out = vec![0.0; n];
    dist.sample_into(&mut out, stream);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderModulus {
    pub s_values: Vec<f64>,
    pub s_mu: Vec<f64>,
    pub q_mu: Vec<f64>,
}

trait NextBits {
    fn next_u64_bits(&mut self) -> u64;
}

impl NextBits for RandomStream {
    #[inline]
    fn next_u64_bits(&mut self) -> u64 {
        rand::RngCore::next_u64(self)
    }
}

fn cantor_digit_weights() -> &'static [f64; CANTOR_SAMPLE_DIGITS] {
    use std::sync::OnceLock;
    static W: OnceLock<[f64; CANTOR_SAMPLE_DIGITS]> = OnceLock::new();
    W.get_or_init(|| {
        let mut w = [0.0; CANTOR_SAMPLE_DIGITS];
        let mut p = 1.0;
        for slot in w.iter_mut() {
            p /= 3.0;
            *slot = 2.0 * p;
        }
        w
    })
}

/// Ternary digits `d_k = 2 · bit_k`, most significant digit from the lowest bit.
fn cantor_from_bits(bits: u64) -> f64 {
    let w = cantor_digit_weights();
    // accumulate smallest digits first
    let mut x = 0.0;
    for k in (0..CANTOR_SAMPLE_DIGITS).rev() {
        if (bits >> k) & 1 == 1 {
            x += w[k];
        }
    }
    x
}

fn cantor_maps() -> Vec<AffineMap> {
    vec![
        AffineMap {
            ratio: 1.0 / 3.0,
            offset: 0.0,
            weight: 0.5,
        },
        AffineMap {
            ratio: 1.0 / 3.0,
            offset: 2.0 / 3.0,
            weight: 0.5,
        },
    ]
}

/// Double-double value `hi + lo`, enough to run the ternary digit recursion
/// exactly for inputs that are not extremely small.
#[derive(Clone, Copy)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    #[inline]
    fn quick(a: f64, b: f64) -> Self {
        let s = a + b;
        Self {
            hi: s,
            lo: b - (s - a),
        }
    }

    #[inline]
    fn times3(self) -> Self {
        let p = 3.0 * self.hi;
        let e = 3.0f64.mul_add(self.hi, -p);
        Self::quick(p, e + 3.0 * self.lo)
    }

    #[inline]
    fn minus(self, c: f64) -> Self {
        let s = self.hi - c;
        let bb = s - self.hi;
        let e = (self.hi - (s - bb)) + (-c - bb);
        Self::quick(s, e + self.lo)
    }

    #[inline]
    fn lt(self, c: f64) -> bool {
        self.hi < c || (self.hi == c && self.lo < 0.0)
    }

    #[inline]
    fn le(self, c: f64) -> bool {
        self.hi < c || (self.hi == c && self.lo <= 0.0)
    }
}

/// Inputs are taken as uncertain by a few ulps: whenever the running digit
/// test lands within that uncertainty of a cylinder endpoint, the endpoint
/// value is returned. This keeps `F(1/3) = 1/2` and `F(3^{-k}) = 2^{-k}` for
/// the rounded arguments, while the remaining digits are resolved exactly in
/// double-double arithmetic.
fn cantor_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let mut y = DoubleDouble { hi: x, lo: 0.0 };
    let mut acc = 0.0;
    let mut scale = 1.0;
    let mut uncertainty = SNAP_ULPS * f64::EPSILON * x;
    for _ in 0..1200 {
        let t = y.times3();
        uncertainty *= 3.0;
        if uncertainty < SNAP_LIMIT {
            let approx = t.hi + t.lo;
            if (approx - 1.0).abs() <= uncertainty || (approx - 2.0).abs() <= uncertainty {
                return acc + 0.5 * scale;
            }
            if (approx - 3.0).abs() <= uncertainty {
                return acc + scale;
            }
        }
        if t.lt(1.0) {
            y = t;
        } else if t.le(2.0) {
            return acc + 0.5 * scale;
        } else {
            acc += 0.5 * scale;
            y = t.minus(2.0);
        }
        scale *= 0.5;
        if acc > 0.0 && scale <= CDF_RELATIVE_RESOLUTION * acc {
            break;
        }
    }
    acc + 0.5 * scale
}

const SNAP_ULPS: f64 = 4.0;
const SNAP_LIMIT: f64 = 1e-6;

fn ifs_cdf(maps: &[AffineMap], support: (f64, f64), x: f64) -> f64 {
    let (lo, hi) = support;
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= lo {
        return 0.0;
    }
    if x >= hi {
        return 1.0;
    }
    let mut y = x;
    let mut acc = 0.0;
    let mut scale = 1.0;
    'outer: for _ in 0..5000 {
        let mut before = 0.0;
        for m in maps {
            let left = m.apply(lo);
            let right = m.apply(hi);
            if y < left {
                // gap between images
                return acc + scale * before;
            }
            if y <= right {
                acc += scale * before;
                scale *= m.weight;
                y = ((y - m.offset) / m.ratio).clamp(lo, hi);
                if acc > 0.0 && scale <= CDF_RELATIVE_RESOLUTION * acc {
                    break 'outer;
                }
                if y <= lo {
                    return acc;
                }
                if y >= hi {
                    return acc + scale;
                }
                continue 'outer;
            }
            before += m.weight;
        }
        return acc + scale;
    }
    acc + 0.5 * scale
}

/// Sorted cylinders `(left, right, mass)` refined until no longer than `max_len`,
/// or until the net reaches `max_count` cylinders.
fn cylinder_net(
    maps: &[AffineMap],
    support: (f64, f64),
    max_len: f64,
    max_count: usize,
) -> Vec<(f64, f64, f64)> {
    let mut net = vec![(support.0, support.1, 1.0)];
    let width = support.1 - support.0;
    loop {
        if net.iter().all(|c| c.1 - c.0 <= max_len) {
            return net;
        }
        if net.len() * maps.len() > max_count {
            return net;
        }
        let mut next = Vec::with_capacity(net.len() * maps.len());
        for &(left, right, mass) in &net {
            if right - left <= max_len {
                next.push((left, right, mass));
                continue;
            }
            // affine rescaling of the parent's map composed with each child map
            let scale = (right - left) / width;
            for m in maps {
                let cl = left + scale * (m.apply(support.0) - support.0);
                let cr = left + scale * (m.apply(support.1) - support.0);
                next.push((cl, cr, mass * m.weight));
            }
        }
        net = next;
    }
}

const NET_MAX_CYLINDERS: usize = 1 << 22;

fn net_window_sup(maps: &[AffineMap], support: (f64, f64), s: f64) -> f64 {
    let r_max = maps.iter().map(|m| m.ratio).fold(0.0, f64::max);
    let net = cylinder_net(maps, support, s * r_max * r_max, NET_MAX_CYLINDERS);
    let mut prefix = Vec::with_capacity(net.len() + 1);
    prefix.push(0.0);
    for c in &net {
        prefix.push(prefix.last().unwrap() + c.2);
    }
    let mut best: f64 = 0.0;
    let mut first = 0;
    for m in 0..net.len() {
        let start = net[m].0 - s;
        while net[first].1 < start {
            first += 1;
        }
        best = best.max(prefix[m + 1] - prefix[first]);
    }
    best.min(1.0)
}
