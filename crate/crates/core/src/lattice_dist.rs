//! Integer-supported, possibly defective probability mass functions.
//!
//! A [`LatticePmf`] stores a dense window of masses starting at `offset`
//! together with an explicit `defect`: the mass sent to a cemetery point
//! outside the integers. Masses plus defect add up to one within
//! [`MASS_TOL`]. Windows are kept trimmed, so the first and last stored
//! entries are at least [`TRIM`].
//!
//! Convolution switches to an FFT product for large operands; every FFT
//! result is checked against direct sums on a random subwindow and the
//! direct product is used when the check fails.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRIM: f64 = 1e-15;
pub const MASS_TOL: f64 = 1e-9;
pub const SUPPORT_CAP: usize = 1 << 26;
pub const TRUNCATION_TOL: f64 = 1e-12;
/// Tolerance for `mass(x) == mass(-x)`.
pub const SYMMETRY_TOL: f64 = 1e-13;

const FFT_MIN_WORK: usize = 1 << 18;
const FFT_MIN_SIDE: usize = 48;
const FFT_CHECK_POINTS: usize = 24;
const FFT_CHECK_TOL: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub trim: f64,
    pub mass_tol: f64,
    pub support_cap: usize,
    pub truncation_tol: f64,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self {
            trim: TRIM,
            mass_tol: MASS_TOL,
            support_cap: SUPPORT_CAP,
            truncation_tol: TRUNCATION_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPmf", into = "RawPmf")]
pub struct LatticePmf {
    offset: i64,
    masses: Vec<f64>,
    defect: f64,
}

#[derive(Serialize, Deserialize)]
struct RawPmf {
    offset: i64,
    masses: Vec<f64>,
    #[serde(default)]
    defect: f64,
}

impl TryFrom<RawPmf> for LatticePmf {
    type Error = Error;

    fn try_from(raw: RawPmf) -> Result<Self> {
        LatticePmf::new(raw.offset, raw.masses, raw.defect)
    }
}

impl From<LatticePmf> for RawPmf {
    fn from(p: LatticePmf) -> Self {
        RawPmf {
            offset: p.offset,
            masses: p.masses,
            defect: p.defect,
        }
    }
}

impl LatticePmf {
    /// Validates and trims. Masses must be finite and non-negative, and the
    /// total plus `defect` must be one within [`MASS_TOL`].
    pub fn new(offset: i64, masses: Vec<f64>, defect: f64) -> Result<Self> {
        Self::new_with(offset, masses, defect, &LatticeConfig::default())
    }

    pub fn new_with(
        offset: i64,
        masses: Vec<f64>,
        defect: f64,
        cfg: &LatticeConfig,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&defect) || !defect.is_finite() {
            return Err(Error::InvalidPmf(format!("defect {defect} outside [0, 1]")));
        }
        if let Some((i, m)) = masses
            .iter()
            .enumerate()
            .find(|(_, m)| !m.is_finite() || **m < 0.0)
        {
            return Err(Error::InvalidPmf(format!(
                "mass {m} at {}",
                offset + i as i64
            )));
        }
        if masses.len() > cfg.support_cap {
            return Err(Error::SupportCap {
                needed: masses.len(),
                cap: cfg.support_cap,
            });
        }
        let total: f64 = masses.iter().sum::<f64>() + defect;
        if (total - 1.0).abs() > cfg.mass_tol {
            return Err(Error::InvalidPmf(format!(
                "masses plus defect sum to {total}, expected 1"
            )));
        }
        Ok(Self::from_parts(offset, masses, defect, cfg.trim))
    }

    /// Builds from `(point, mass)` pairs; repeated points accumulate.
    pub fn from_points(points: &[(i64, f64)], defect: f64) -> Result<Self> {
        let Some(lo) = points.iter().map(|p| p.0).min() else {
            return Self::new(0, Vec::new(), defect);
        };
        let hi = points.iter().map(|p| p.0).max().unwrap_or(lo);
        let len = usize::try_from(hi - lo + 1).map_err(|_| Error::input("window too wide"))?;
        if len > SUPPORT_CAP {
            return Err(Error::SupportCap {
                needed: len,
                cap: SUPPORT_CAP,
            });
        }
        let mut masses = vec![0.0; len];
        for &(x, m) in points {
            masses[(x - lo) as usize] += m;
        }
        Self::new(lo, masses, defect)
    }

    pub fn dirac(x: i64) -> Self {
        Self {
            offset: x,
            masses: vec![1.0],
            defect: 0.0,
        }
    }

    /// Uniform law on the integers of `[lo, hi]`.
    pub fn uniform(lo: i64, hi: i64) -> Result<Self> {
        if hi < lo {
            return Err(Error::input(format!("empty interval [{lo}, {hi}]")));
        }
        let len = (hi - lo + 1) as usize;
        Self::new(lo, vec![1.0 / len as f64; len], 0.0)
    }

    /// Everything at the cemetery.
    pub fn cemetery() -> Self {
        Self {
            offset: 0,
            masses: Vec::new(),
            defect: 1.0,
        }
    }

    /// Trusted constructor for internally computed windows: clamps rounding
    /// negatives to zero and trims, without re-validating the total.
    pub(crate) fn from_parts(offset: i64, mut masses: Vec<f64>, defect: f64, trim: f64) -> Self {
        for m in masses.iter_mut() {
            if *m < 0.0 {
                *m = 0.0;
            }
        }
        let start = masses.iter().position(|&m| m >= trim);
        let Some(start) = start else {
            return Self {
                offset: 0,
                masses: Vec::new(),
                defect,
            };
        };
        let end = masses.iter().rposition(|&m| m >= trim).unwrap_or(start);
        masses.truncate(end + 1);
        masses.drain(..start);
        Self {
            offset: offset + start as i64,
            masses,
            defect,
        }
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn defect(&self) -> f64 {
        self.defect
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Lowest and highest stored support points.
    pub fn support(&self) -> Option<(i64, i64)> {
        if self.masses.is_empty() {
            None
        } else {
            Some((self.offset, self.offset + self.masses.len() as i64 - 1))
        }
    }

    pub fn mass(&self, x: i64) -> f64 {
        let i = x - self.offset;
        if i < 0 {
            return 0.0;
        }
        self.masses.get(i as usize).copied().unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.masses
            .iter()
            .enumerate()
            .map(move |(i, &m)| (self.offset + i as i64, m))
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_symmetric_within(SYMMETRY_TOL)
    }

    pub fn is_symmetric_within(&self, tol: f64) -> bool {
        match self.support() {
            None => true,
            Some((lo, hi)) => {
                let r = lo.abs().max(hi.abs());
                (0..=r).all(|x| (self.mass(x) - self.mass(-x)).abs() <= tol)
            }
        }
    }

    /// Law of `-X`.
    pub fn reflect(&self) -> Self {
        let mut masses = self.masses.clone();
        masses.reverse();
        let offset = match self.support() {
            Some((_, hi)) => -hi,
            None => 0,
        };
        Self {
            offset,
            masses,
            defect: self.defect,
        }
    }

    /// Law of `X + shift`.
    pub fn shifted(&self, shift: i64) -> Self {
        Self {
            offset: self.offset + shift,
            masses: self.masses.clone(),
            defect: self.defect,
        }
    }

    /// Convex combination of laws; the weights must add up to one.
    pub fn mixture(components: &[(f64, &LatticePmf)]) -> Result<Self> {
        let wsum: f64 = components.iter().map(|c| c.0).sum();
        if components.iter().any(|c| c.0 < 0.0) || (wsum - 1.0).abs() > MASS_TOL {
            return Err(Error::input(format!("mixture weights sum to {wsum}")));
        }
        let supported: Vec<_> = components.iter().filter_map(|c| c.1.support()).collect();
        let defect: f64 = components.iter().map(|c| c.0 * c.1.defect).sum();
        if supported.is_empty() {
            return Ok(Self::from_parts(0, Vec::new(), defect, TRIM));
        }
        let lo = supported.iter().map(|s| s.0).min().unwrap_or(0);
        let hi = supported.iter().map(|s| s.1).max().unwrap_or(0);
        let mut masses = vec![0.0; (hi - lo + 1) as usize];
        for &(w, law) in components {
            let base = (law.offset - lo) as usize;
            for (i, m) in law.masses.iter().enumerate() {
                masses[base + i] += w * m;
            }
        }
        Ok(Self::from_parts(lo, masses, defect, TRIM))
    }

    /// `(law(X) + law(-X)) / 2`.
    pub fn symmetrize(&self) -> Self {
        let r = self.reflect();
        Self::mixture(&[(0.5, self), (0.5, &r)]).expect("weights are exact")
    }

    pub fn convolve(&self, other: &LatticePmf) -> Result<Self> {
        self.convolve_with(other, &LatticeConfig::default())
    }

    /// Law of `X + Y` for independent `X ~ self`, `Y ~ other`. The defect
    /// of the sum is `1 - (1 - d_x)(1 - d_y)`.
    pub fn convolve_with(&self, other: &LatticePmf, cfg: &LatticeConfig) -> Result<Self> {
        let defect = 1.0 - (1.0 - self.defect) * (1.0 - other.defect);
        if self.is_empty() || other.is_empty() {
            return Ok(Self::from_parts(0, Vec::new(), defect, cfg.trim));
        }
        let len = self.len() + other.len() - 1;
        if len > cfg.support_cap {
            return Err(Error::SupportCap {
                needed: len,
                cap: cfg.support_cap,
            });
        }
        let masses = convolve_slices(&self.masses, &other.masses);
        Ok(Self::from_parts(
            self.offset + other.offset,
            masses,
            defect,
            cfg.trim,
        ))
    }

    pub fn n_fold(&self, n: u64) -> Result<Self> {
        self.n_fold_with(n, &LatticeConfig::default())
    }

    /// `n`-fold convolution power by repeated squaring; `n = 0` gives δ₀.
    pub fn n_fold_with(&self, n: u64, cfg: &LatticeConfig) -> Result<Self> {
        let mut acc = LatticePmf::dirac(0);
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.convolve_with(&base, cfg)?;
            }
            k >>= 1;
            if k > 0 {
                base = base.convolve_with(&base, cfg)?;
            }
        }
        Ok(acc)
    }

    /// `Σ_x mass(x) e^{itx}`.
    pub fn char_fn(&self, t: f64) -> Complex64 {
        let (vers, sin) = self.phase_sums(t);
        Complex64::new(self.total_mass() - vers, sin)
    }

    /// `1 - char_fn(t)`, computed without cancellation near `t = 0`. The
    /// value at `t = 0` is the defect.
    pub fn one_minus_char_fn(&self, t: f64) -> Complex64 {
        let (vers, sin) = self.phase_sums(t);
        Complex64::new(self.defect + vers, -sin)
    }

    /// `(Σ m(x)(1 - cos tx), Σ m(x) sin tx)`, pairing `x` with `-x` so
    /// symmetric laws give an exactly zero sine sum.
    fn phase_sums(&self, t: f64) -> (f64, f64) {
        let Some((lo, hi)) = self.support() else {
            return (0.0, 0.0);
        };
        let kmin = if lo <= 0 && hi >= 0 {
            0
        } else {
            lo.abs().min(hi.abs())
        };
        let kmax = lo.abs().max(hi.abs());
        let mut vers_acc = 0.0;
        let mut sin_acc = 0.0;
        let mut phase = PhaseWalk::new(t, kmin);
        for k in kmin..=kmax {
            let (v, s) = phase.current();
            let plus = self.mass(k);
            let minus = if k == 0 { 0.0 } else { self.mass(-k) };
            vers_acc += (plus + minus) * v;
            sin_acc += (plus - minus) * s;
            phase.advance();
        }
        (vers_acc, sin_acc)
    }

    /// `P(|X| ≥ n)`. Requires a symmetric law.
    pub fn two_sided_tail(&self, n: u64) -> Result<f64> {
        if !self.is_symmetric() {
            return Err(Error::NotSymmetric("two_sided_tail"));
        }
        let n = n as i64;
        Ok(self
            .iter()
            .filter(|(x, _)| x.abs() >= n)
            .map(|(_, m)| m)
            .sum())
    }

    /// `T(n) = P(|X| ≥ n)` for `n = 0..=max|x|`.
    pub fn two_sided_tail_table(&self) -> Result<Vec<f64>> {
        if !self.is_symmetric() {
            return Err(Error::NotSymmetric("two_sided_tail_table"));
        }
        let Some((lo, hi)) = self.support() else {
            return Ok(vec![0.0]);
        };
        let r = lo.abs().max(hi.abs()) as usize;
        let mut by_abs = vec![0.0; r + 1];
        for (x, m) in self.iter() {
            by_abs[x.unsigned_abs() as usize] += m;
        }
        let mut tail = vec![0.0; r + 1];
        let mut acc = 0.0;
        for n in (0..=r).rev() {
            acc += by_abs[n];
            tail[n] = acc;
        }
        Ok(tail)
    }

    /// Lévy concentration `sup_x P(x ≤ X ≤ x + λ)` over lattice-aligned
    /// windows.
    pub fn concentration(&self, lambda: f64) -> f64 {
        if self.is_empty() || lambda.is_nan() || lambda < 0.0 {
            return 0.0;
        }
        let width = if lambda >= self.len() as f64 {
            self.len()
        } else {
            lambda.floor() as usize + 1
        };
        let mut window: f64 = self.masses[..width].iter().sum();
        let mut best = window;
        for i in width..self.len() {
            window += self.masses[i] - self.masses[i - width];
            best = best.max(window);
        }
        best
    }

    /// `P(lo ≤ X ≤ hi)`.
    pub fn interval_mass(&self, lo: i64, hi: i64) -> f64 {
        let Some((a, b)) = self.support() else {
            return 0.0;
        };
        let lo = lo.max(a);
        let hi = hi.min(b);
        if lo > hi {
            return 0.0;
        }
        let s = (lo - self.offset) as usize;
        let e = (hi - self.offset) as usize;
        self.masses[s..=e].iter().sum()
    }

    /// Largest grid point `p = πk/grid` with `char_fn ≥ -tol` on `[0, p]`
    /// (and by symmetry on `[-p, p]`). When the first grid step already
    /// fails, the sign change is located by bisection.
    pub fn positivity_radius(&self, grid: usize) -> Result<f64> {
        if !self.is_symmetric() {
            return Err(Error::NotSymmetric("positivity_radius"));
        }
        if grid == 0 {
            return Err(Error::input("grid must be positive"));
        }
        const TOL: f64 = 1e-12;
        let step = std::f64::consts::PI / grid as f64;
        let mut last_ok = 0usize;
        for k in 1..=grid {
            if self.char_fn(k as f64 * step).re < -TOL {
                break;
            }
            last_ok = k;
        }
        if last_ok > 0 {
            return Ok(last_ok as f64 * step);
        }
        let (mut a, mut b) = (0.0, step);
        for _ in 0..80 {
            let mid = 0.5 * (a + b);
            if self.char_fn(mid).re >= -TOL {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(a)
    }
}

/// Law of `τ₁ - τ₂ + τ₃ - … ± τ_g` for i.i.d. `τ ~ nu` on `{1, 2, …}`.
pub fn alternating_sum_pmf(nu: &LatticePmf, g: u64) -> Result<LatticePmf> {
    check_positive_support(nu)?;
    if g == 0 {
        return Err(Error::input("alternating sum needs g ≥ 1"));
    }
    let plus = nu.n_fold(g.div_ceil(2))?;
    let minus = nu.reflect().n_fold(g / 2)?;
    plus.convolve(&minus)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometricMixture {
    /// Symmetric law; truncated mass is carried in the defect.
    pub law: LatticePmf,
    /// `p_stay^{g_max}`, the geometric mass beyond `g_max`.
    pub truncated_mass: f64,
}

/// Law of `ε Σ_{k=1}^{G} (-1)^{k-1} τ_k` with `G` geometric on `{1, 2, …}`
/// of parameter `1 - p_stay`, `ε` a fair sign and `τ_k ~ nu` i.i.d.
pub fn geometric_mixture(nu: &LatticePmf, p_stay: f64, g_max: u64) -> Result<GeometricMixture> {
    geometric_mixture_with(nu, p_stay, g_max, &LatticeConfig::default())
}

pub fn geometric_mixture_with(
    nu: &LatticePmf,
    p_stay: f64,
    g_max: u64,
    cfg: &LatticeConfig,
) -> Result<GeometricMixture> {
    check_positive_support(nu)?;
    if !(0.0..1.0).contains(&p_stay) {
        return Err(Error::input(format!("p_stay {p_stay} outside [0, 1)")));
    }
    if g_max == 0 {
        return Err(Error::input("g_max must be positive"));
    }
    let truncated_mass = if p_stay == 0.0 {
        0.0
    } else {
        p_stay.powf(g_max as f64)
    };
    if truncated_mass >= cfg.truncation_tol {
        return Err(Error::Truncation(format!(
            "p_stay^g_max = {truncated_mass:e} with g_max = {g_max}, tolerance {:e}",
            cfg.truncation_tol
        )));
    }
    let g_eff = if p_stay == 0.0 { 1 } else { g_max };
    let reflected = nu.reflect();
    let mut partial = nu.clone();
    let mut acc = Accumulator::default();
    let mut weight = 1.0 - p_stay;
    for g in 1..=g_eff {
        if g > 1 {
            let step = if g % 2 == 1 { nu } else { &reflected };
            partial = partial.convolve_with(step, cfg)?;
            weight *= p_stay;
        }
        acc.add(weight, &partial);
    }
    let one_sided = acc.finish(truncated_mass, cfg.trim);
    Ok(GeometricMixture {
        law: one_sided.symmetrize(),
        truncated_mass,
    })
}

/// Smallest `g_max` with `p_stay^{g_max}` below `tol`.
pub fn geometric_cutoff(p_stay: f64, tol: f64) -> u64 {
    if p_stay <= 0.0 {
        return 1;
    }
    let g = (tol.ln() / p_stay.ln()).floor() as u64 + 1;
    g.max(1)
}

fn check_positive_support(nu: &LatticePmf) -> Result<()> {
    match nu.support() {
        Some((lo, _)) if lo >= 1 => Ok(()),
        Some((lo, _)) => Err(Error::InvalidPmf(format!(
            "waiting law must live on {{1, 2, …}}, found mass at {lo}"
        ))),
        None => Err(Error::InvalidPmf("waiting law has no mass".into())),
    }
}

#[derive(Default)]
struct Accumulator {
    lo: i64,
    masses: Vec<f64>,
    defect: f64,
}

impl Accumulator {
    fn add(&mut self, w: f64, law: &LatticePmf) {
        self.defect += w * law.defect;
        let Some((lo, hi)) = law.support() else {
            return;
        };
        if self.masses.is_empty() {
            self.lo = lo;
            self.masses = vec![0.0; (hi - lo + 1) as usize];
        }
        if lo < self.lo {
            let extra = (self.lo - lo) as usize;
            self.masses.splice(0..0, std::iter::repeat_n(0.0, extra));
            self.lo = lo;
        }
        let need = (hi - self.lo + 1) as usize;
        if need > self.masses.len() {
            self.masses.resize(need, 0.0);
        }
        let base = (lo - self.lo) as usize;
        for (i, m) in law.masses.iter().enumerate() {
            self.masses[base + i] += w * m;
        }
    }

    fn finish(self, extra_defect: f64, trim: f64) -> LatticePmf {
        LatticePmf::from_parts(self.lo, self.masses, self.defect + extra_defect, trim)
    }
}

/// Generates `(1 - cos kθ, sin kθ)` for consecutive `k`, re-anchored with
/// exact evaluations every 32 steps.
pub(crate) struct PhaseWalk {
    theta: f64,
    step_vers: f64,
    step_sin: f64,
    k: i64,
    vers: f64,
    sin: f64,
    since_anchor: u32,
}

impl PhaseWalk {
    const ANCHOR_EVERY: u32 = 32;

    pub(crate) fn new(theta: f64, k0: i64) -> Self {
        let (step_vers, step_sin) = exact_phase(theta, 1);
        let (vers, sin) = exact_phase(theta, k0);
        Self {
            theta,
            step_vers,
            step_sin,
            k: k0,
            vers,
            sin,
            since_anchor: 0,
        }
    }

    #[inline]
    pub(crate) fn current(&self) -> (f64, f64) {
        (self.vers, self.sin)
    }

    #[inline]
    pub(crate) fn advance(&mut self) {
        self.k += 1;
        self.since_anchor += 1;
        if self.since_anchor == Self::ANCHOR_EVERY {
            let (v, s) = exact_phase(self.theta, self.k);
            self.vers = v;
            self.sin = s;
            self.since_anchor = 0;
            return;
        }
        let (v, s) = (self.vers, self.sin);
        let c = 1.0 - v;
        self.vers = v + self.step_vers * c + s * self.step_sin;
        self.sin = s * (1.0 - self.step_vers) + c * self.step_sin;
    }
}

#[inline]
fn exact_phase(theta: f64, k: i64) -> (f64, f64) {
    let a = theta * k as f64;
    let h = (0.5 * a).sin();
    (2.0 * h * h, a.sin())
}

/// Linear convolution of two mass arrays.
pub(crate) fn convolve_slices(a: &[f64], b: &[f64]) -> Vec<f64> {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if short.len() < FFT_MIN_SIDE || short.len() * long.len() < FFT_MIN_WORK {
        return direct_convolution(short, long);
    }
    let out = fft_convolution(short, long);
    if fft_residual_ok(short, long, &out) {
        out
    } else {
        direct_convolution(short, long)
    }
}

fn direct_convolution(short: &[f64], long: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; short.len() + long.len() - 1];
    for (i, &s) in short.iter().enumerate() {
        if s == 0.0 {
            continue;
        }
        for (o, &l) in out[i..i + long.len()].iter_mut().zip(long) {
            *o += s * l;
        }
    }
    out
}

fn fft_convolution(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n_out = a.len() + b.len() - 1;
    let n = n_out.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    // Both real inputs share one complex transform: z = a + i b.
    let mut z = vec![Complex64::new(0.0, 0.0); n];
    for (zi, &x) in z.iter_mut().zip(a) {
        zi.re = x;
    }
    for (zi, &y) in z.iter_mut().zip(b) {
        zi.im = y;
    }
    fwd.process(&mut z);
    let mut prod = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let zk = z[k];
        let zc = z[(n - k) % n].conj();
        let fa = (zk + zc) * 0.5;
        let fb = (zk - zc) * Complex64::new(0.0, -0.5);
        prod[k] = fa * fb;
    }
    inv.process(&mut prod);
    let scale = 1.0 / n as f64;
    prod[..n_out].iter().map(|c| c.re * scale).collect()
}

fn fft_residual_ok(a: &[f64], b: &[f64], out: &[f64]) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64((a.len() as u64) << 32 ^ b.len() as u64);
    (0..FFT_CHECK_POINTS).all(|_| {
        let k = rng.gen_range(0..out.len());
        let lo = k.saturating_sub(b.len() - 1);
        let hi = k.min(a.len() - 1);
        let exact: f64 = (lo..=hi).map(|i| a[i] * b[k - i]).sum();
        (exact - out[k]).abs() <= FFT_CHECK_TOL
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn coin() -> LatticePmf {
        LatticePmf::from_points(&[(-1, 0.5), (1, 0.5)], 0.0).unwrap()
    }

    fn lazy_three() -> LatticePmf {
        LatticePmf::from_points(&[(-1, 0.375), (0, 0.25), (1, 0.375)], 0.0).unwrap()
    }

    /// Straightforward quadratic-time reference.
    fn brute_convolve(a: &LatticePmf, b: &LatticePmf) -> Vec<(i64, f64)> {
        let mut pts = std::collections::BTreeMap::new();
        for (x, p) in a.iter() {
            for (y, q) in b.iter() {
                *pts.entry(x + y).or_insert(0.0) += p * q;
            }
        }
        pts.into_iter().collect()
    }

    #[test]
    fn dirac_is_identity() {
        let a = lazy_three();
        let c = LatticePmf::dirac(0).convolve(&a).unwrap();
        assert_eq!(c, a);
    }

    #[test]
    fn coin_squared() {
        let c = coin().convolve(&coin()).unwrap();
        assert_eq!(c.offset(), -2);
        assert_eq!(c.masses(), &[0.25, 0.0, 0.5, 0.0, 0.25]);
        assert_eq!(coin().n_fold(2).unwrap(), c);
    }

    #[test]
    fn defects_compose() {
        let a = LatticePmf::from_points(&[(0, 0.75)], 0.25).unwrap();
        let c = a.convolve(&a).unwrap();
        assert_abs_diff_eq!(c.defect(), 7.0 / 16.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.total_mass(), 9.0 / 16.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_fold_is_dirac() {
        assert_eq!(lazy_three().n_fold(0).unwrap(), LatticePmf::dirac(0));
    }

    #[test]
    fn central_binomial_mass() {
        for m in 1..=10u64 {
            let law = coin().n_fold(2 * m).unwrap();
            let mut binom = 1.0;
            for i in 0..m {
                binom *= (2 * m - i) as f64 / (i + 1) as f64;
            }
            let expected = binom / 4f64.powi(m as i32);
            assert_abs_diff_eq!(law.mass(0), expected, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(coin().n_fold(4).unwrap().mass(0), 0.375, epsilon = 1e-15);
    }

    #[test]
    fn char_fn_examples() {
        for &t in &[0.0, 0.3, 1.0, 2.5, -1.7] {
            let c = coin().char_fn(t);
            assert_abs_diff_eq!(c.re, t.cos(), epsilon = 1e-15);
            assert_abs_diff_eq!(c.im, 0.0, epsilon = 0.0);
        }
        let c = lazy_three().char_fn(std::f64::consts::PI);
        assert_abs_diff_eq!(c.re, -0.5, epsilon = 1e-15);
        let d = LatticePmf::from_points(&[(2, 0.6), (7, 0.1)], 0.3).unwrap();
        assert_abs_diff_eq!(d.char_fn(0.0).re, 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(d.one_minus_char_fn(0.0).re, 0.3, epsilon = 0.0);
    }

    #[test]
    fn char_fn_matches_direct_sum_on_wide_windows() {
        let masses: Vec<f64> = (0..5000)
            .map(|i| 1.0 / (i as f64 + 3.0).powf(1.5))
            .collect();
        let total: f64 = masses.iter().sum();
        let masses: Vec<f64> = masses.iter().map(|m| m / total).collect();
        let law = LatticePmf::new(-1234, masses, 0.0).unwrap();
        for &t in &[1e-7, 0.01, 0.7, 3.0] {
            let direct: Complex64 = law
                .iter()
                .map(|(x, m)| Complex64::from_polar(m, t * x as f64))
                .sum();
            let got = law.char_fn(t);
            assert!((got - direct).norm() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn one_minus_char_fn_is_accurate_at_tiny_angles() {
        let law = lazy_three();
        for &t in &[1e-6, 1e-9, 1e-12] {
            // 1 - φ(t) = ¾ (1 - cos t) = (3/2) sin²(t/2)
            let exact = 1.5 * (0.5f64 * t).sin().powi(2);
            let got = law.one_minus_char_fn(t).re;
            assert!(((got - exact) / exact).abs() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn tails() {
        assert_eq!(coin().two_sided_tail(1).unwrap(), 1.0);
        assert_eq!(coin().two_sided_tail(2).unwrap(), 0.0);
        assert_eq!(lazy_three().two_sided_tail(1).unwrap(), 0.75);
        assert_eq!(lazy_three().two_sided_tail(0).unwrap(), 1.0);
        let d = LatticePmf::dirac(0);
        assert_eq!(d.two_sided_tail(1).unwrap(), 0.0);
        assert_eq!(d.two_sided_tail(5).unwrap(), 0.0);
        let skew = LatticePmf::from_points(&[(0, 0.5), (1, 0.5)], 0.0).unwrap();
        assert!(matches!(
            skew.two_sided_tail(1),
            Err(Error::NotSymmetric(_))
        ));
        assert_eq!(
            lazy_three().two_sided_tail_table().unwrap(),
            vec![1.0, 0.75]
        );
    }

    #[test]
    fn concentration_examples() {
        assert_eq!(coin().concentration(0.0), 0.5);
        assert_abs_diff_eq!(lazy_three().concentration(1.0), 0.625, epsilon = 1e-15);
        assert_eq!(lazy_three().concentration(0.0), 0.375);
        assert_abs_diff_eq!(lazy_three().concentration(10.0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn concentration_matches_window_scan() {
        let law = lazy_three().n_fold(5).unwrap();
        for lambda in 0..8 {
            let (lo, hi) = law.support().unwrap();
            let scan = (lo - 10..=hi)
                .map(|x| law.interval_mass(x, x + lambda))
                .fold(0.0, f64::max);
            assert_abs_diff_eq!(law.concentration(lambda as f64), scan, epsilon = 1e-15);
        }
    }

    #[test]
    fn positivity_radius_examples() {
        use std::f64::consts::PI;
        assert_abs_diff_eq!(
            coin().positivity_radius(512).unwrap(),
            PI / 2.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            LatticePmf::dirac(0).positivity_radius(512).unwrap(),
            PI,
            epsilon = 1e-12
        );
        let lazy = LatticePmf::from_points(&[(-1, 0.25), (0, 0.5), (1, 0.25)], 0.0).unwrap();
        assert_abs_diff_eq!(lazy.positivity_radius(512).unwrap(), PI, epsilon = 1e-12);
        // cos(10t) is already negative at the first grid step π/8.
        let wide = LatticePmf::from_points(&[(-10, 0.5), (10, 0.5)], 0.0).unwrap();
        let p = wide.positivity_radius(8).unwrap();
        assert_abs_diff_eq!(p, PI / 20.0, epsilon = 1e-12);
    }

    #[test]
    fn alternating_sums() {
        let d1 = LatticePmf::dirac(1);
        assert_eq!(alternating_sum_pmf(&d1, 2).unwrap(), LatticePmf::dirac(0));
        assert_eq!(alternating_sum_pmf(&d1, 3).unwrap(), LatticePmf::dirac(1));
        let nu = LatticePmf::from_points(&[(1, 0.5), (2, 0.5)], 0.0).unwrap();
        let a2 = alternating_sum_pmf(&nu, 2).unwrap();
        assert_eq!(a2.offset(), -1);
        assert_eq!(a2.masses(), &[0.25, 0.5, 0.25]);
        assert!(alternating_sum_pmf(&LatticePmf::dirac(0), 2).is_err());
    }

    #[test]
    fn geometric_mixture_examples() {
        let d1 = LatticePmf::dirac(1);
        let m0 = geometric_mixture(&d1, 0.0, 1).unwrap();
        assert_eq!(m0.law, coin());
        assert_eq!(m0.truncated_mass, 0.0);

        let g = geometric_cutoff(1.0 / 3.0, TRUNCATION_TOL);
        let m = geometric_mixture(&d1, 1.0 / 3.0, g).unwrap();
        // P(G odd) = (2/3) / (1 - 1/9) = 3/4
        assert_abs_diff_eq!(m.law.mass(0), 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(m.law.mass(1), 0.375, epsilon = 1e-12);
        assert_abs_diff_eq!(m.law.mass(-1), 0.375, epsilon = 1e-12);
        assert!(m.truncated_mass < TRUNCATION_TOL);
        assert!(geometric_mixture(&d1, 1.0 / 3.0, 3).is_err());
    }

    #[test]
    fn geometric_mixture_without_reversals_is_symmetrized_nu() {
        let nu = LatticePmf::from_points(&[(1, 0.2), (3, 0.5), (4, 0.3)], 0.0).unwrap();
        let m = geometric_mixture(&nu, 0.0, 1).unwrap();
        assert_eq!(m.law, nu.symmetrize());
    }

    #[test]
    fn fft_path_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mk = |n: usize, rng: &mut ChaCha8Rng| {
            let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 0.01).collect();
            let s: f64 = raw.iter().sum();
            LatticePmf::new(-(n as i64) / 3, raw.iter().map(|x| x / s).collect(), 0.0).unwrap()
        };
        let a = mk(700, &mut rng);
        let b = mk(900, &mut rng);
        let fast = a.convolve(&b).unwrap();
        for (x, m) in brute_convolve(&a, &b) {
            assert_abs_diff_eq!(fast.mass(x), m, epsilon = 1e-14);
        }
    }

    #[test]
    fn support_cap_is_enforced() {
        let cfg = LatticeConfig {
            support_cap: 10,
            ..LatticeConfig::default()
        };
        let law = LatticePmf::uniform(0, 5).unwrap();
        let err = law.convolve_with(&law, &cfg).unwrap_err();
        assert!(matches!(
            err,
            Error::SupportCap {
                needed: 11,
                cap: 10
            }
        ));
    }

    #[test]
    fn rejects_invalid_input() {
        assert!(LatticePmf::new(0, vec![0.5, -0.1], 0.6).is_err());
        assert!(LatticePmf::new(0, vec![0.5, 0.4], 0.0).is_err());
        assert!(LatticePmf::new(0, vec![0.5], 1.5).is_err());
    }

    #[test]
    fn trims_window_edges() {
        let law = LatticePmf::new(-2, vec![0.0, 1e-17, 0.5, 0.5, 0.0], 0.0).unwrap();
        assert_eq!(law.offset(), 0);
        assert_eq!(law.len(), 2);
    }

    #[test]
    fn json_shape() {
        let law = LatticePmf::from_points(&[(0, 0.75)], 0.25).unwrap();
        let text = serde_json::to_string(&law).unwrap();
        assert_eq!(text, r#"{"offset":0,"masses":[0.75],"defect":0.25}"#);
        let back: LatticePmf = serde_json::from_str(&text).unwrap();
        assert_eq!(back, law);
        assert!(serde_json::from_str::<LatticePmf>(r#"{"offset":0,"masses":[0.2]}"#).is_err());
    }
}
