//! Recurrence tests for walks whose horizontal and vertical stints are
//! independent symmetric random walks `H_n` and `V_n`.
//!
//! The walk returns to the origin infinitely often exactly when one of
//! `Σ a_n`, `Σ b_n` diverges, with
//! `a_n = P(H_{n+1} = 0) P(0 ≤ V_n ≤ J_V)` and `b_n` the same with the axes
//! swapped, `J_V` an independent copy of the vertical stint.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice_dist::{
    convolve_slices, geometric_cutoff, LatticePmf, PhaseWalk, TRUNCATION_TOL,
};
use crate::quad_comb::DrrwSpec;
use crate::quadrature::{composite_gl8, origin_shells};
use crate::skeleton::drrw_margin_jumps;

/// Term sequences `a_n`, `b_n` for `n = 0..=N`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesTerms {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Bound on the error from wrapping onto a finite grid; zero for the
    /// direct engine.
    pub aliasing_bound: f64,
}

fn check_margin(name: &str, law: &LatticePmf) -> Result<()> {
    if !law.is_symmetric() {
        return Err(Error::NotSymmetric(if name == "H" {
            "horizontal jump"
        } else {
            "vertical jump"
        }));
    }
    if law.defect() > TRUNCATION_TOL {
        return Err(Error::InvalidPmf(format!(
            "{name} jump has defect {:e}",
            law.defect()
        )));
    }
    Ok(())
}

/// `g(v) = P(J ≥ v)` for `v = 0..=max J`.
fn upper_tail(jump: &LatticePmf) -> Vec<f64> {
    let hi = jump.support().map_or(0, |s| s.1).max(0) as usize;
    let mut g = vec![0.0; hi + 1];
    let mut acc = 0.0;
    for v in (0..=hi).rev() {
        acc += jump.mass(v as i64);
        g[v] = acc;
    }
    g
}

/// Incremental 1-D walk law kept as a dense vector.
struct WalkLaw {
    offset: i64,
    masses: Vec<f64>,
}

impl WalkLaw {
    fn origin() -> WalkLaw {
        WalkLaw {
            offset: 0,
            masses: vec![1.0],
        }
    }

    fn at(&self, x: i64) -> f64 {
        let i = x - self.offset;
        if i < 0 || i as usize >= self.masses.len() {
            0.0
        } else {
            self.masses[i as usize]
        }
    }

    fn step(&mut self, jump: &LatticePmf) {
        self.masses = convolve_slices(&self.masses, jump.masses());
        self.offset += jump.offset();
        let lo = self.masses.iter().position(|m| *m > 1e-300).unwrap_or(0);
        let hi = self
            .masses
            .iter()
            .rposition(|m| *m > 1e-300)
            .map_or(0, |i| i + 1);
        if lo > 0 || hi < self.masses.len() {
            self.masses = self.masses[lo..hi.max(lo)].to_vec();
            self.offset += lo as i64;
        }
    }

    /// `Σ_{v ≥ 0} law(v) g(v)`.
    fn against_tail(&self, g: &[f64]) -> f64 {
        g.iter()
            .enumerate()
            .map(|(v, gv)| self.at(v as i64) * gv)
            .sum()
    }
}

/// Exact terms by convolving the walk laws step by step.
pub fn series_criterion_terms(h: &LatticePmf, v: &LatticePmf, n: usize) -> Result<SeriesTerms> {
    check_margin("H", h)?;
    check_margin("V", v)?;
    let width = |j: &LatticePmf| j.support().map_or(0, |s| (s.1 - s.0) as usize);
    let needed = (n + 1).saturating_mul(width(h).max(width(v))) + 1;
    if needed > crate::lattice_dist::SUPPORT_CAP {
        return Err(Error::SupportCap {
            needed,
            cap: crate::lattice_dist::SUPPORT_CAP,
        });
    }
    let (gh, gv) = (upper_tail(h), upper_tail(v));
    let (mut hn, mut vn) = (WalkLaw::origin(), WalkLaw::origin());
    let mut a = Vec::with_capacity(n + 1);
    let mut b = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        let conc_v = vn.against_tail(&gv);
        let conc_h = hn.against_tail(&gh);
        hn.step(h);
        vn.step(v);
        a.push(hn.at(0) * conc_v);
        b.push(vn.at(0) * conc_h);
    }
    Ok(SeriesTerms {
        a,
        b,
        aliasing_bound: 0.0,
    })
}

/// Terms at selected `n` from independent n-fold convolutions, used to
/// cross-check the incremental engine.
pub fn series_terms_at(
    h: &LatticePmf,
    v: &LatticePmf,
    ns: &[usize],
) -> Result<Vec<(usize, f64, f64)>> {
    let (gh, gv) = (upper_tail(h), upper_tail(v));
    let against = |law: &LatticePmf, g: &[f64]| -> f64 {
        g.iter()
            .enumerate()
            .map(|(x, gx)| law.mass(x as i64) * gx)
            .sum()
    };
    ns.iter()
        .map(|&n| {
            let (h1, v1) = (h.n_fold(n as u64 + 1)?, v.n_fold(n as u64 + 1)?);
            let (h0, v0) = if n == 0 {
                (LatticePmf::dirac(0), LatticePmf::dirac(0))
            } else {
                (h.n_fold(n as u64)?, v.n_fold(n as u64)?)
            };
            Ok((
                n,
                h1.mass(0) * against(&v0, &gv),
                v1.mass(0) * against(&h0, &gh),
            ))
        })
        .collect()
}

/// `log E e^{θX}` by a shifted sum.
fn log_mgf(law: &LatticePmf, theta: f64) -> f64 {
    let Some((_, hi)) = law.support() else {
        return f64::NEG_INFINITY;
    };
    let shift = theta * hi as f64;
    let s: f64 = law
        .iter()
        .map(|(x, m)| m * (theta * x as f64 - shift).exp())
        .sum();
    shift + s.ln()
}

/// `d/dθ log E e^{θX}`.
fn log_mgf_slope(law: &LatticePmf, theta: f64) -> f64 {
    let Some((_, hi)) = law.support() else {
        return 0.0;
    };
    let shift = theta * hi as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for (x, m) in law.iter() {
        let w = m * (theta * x as f64 - shift).exp();
        num += w * x as f64;
        den += w;
    }
    num / den
}

/// Chernoff bound `2 min_θ (E e^{θX})^n e^{-θR}` on `P(|S_n| ≥ R)` for a
/// symmetric step law.
pub fn chernoff_tail(law: &LatticePmf, n: usize, r: f64) -> f64 {
    let Some((_, hi)) = law.support() else {
        return 0.0;
    };
    if n == 0 {
        return if r <= 0.0 { 1.0 } else { 0.0 };
    }
    if r > n as f64 * hi as f64 {
        return 0.0;
    }
    let target = r / n as f64;
    let mut hi_t = 1.0 / hi.max(1) as f64;
    while log_mgf_slope(law, hi_t) < target {
        hi_t *= 2.0;
        if hi_t > 1e6 {
            break;
        }
    }
    let mut lo_t = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo_t + hi_t);
        if log_mgf_slope(law, mid) < target {
            lo_t = mid;
        } else {
            hi_t = mid;
        }
    }
    let theta = 0.5 * (lo_t + hi_t);
    (2.0 * (n as f64 * log_mgf(law, theta) - theta * r).exp()).min(1.0)
}

/// Values of `Σ_x law(x) e^{2πikx/M}` for `k = 0..M`, real for symmetric
/// laws.
fn grid_transform(
    values: &[(i64, f64)],
    m: usize,
    planner: &mut FftPlanner<f64>,
) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for &(x, w) in values {
        buf[x.rem_euclid(m as i64) as usize] += w;
    }
    let fft = planner.plan_fft_inverse(m);
    fft.process(&mut buf);
    buf
}

/// Terms by Fourier inversion on a grid of `m` points; the wrapping error
/// is bounded with [`chernoff_tail`].
pub fn series_criterion_terms_spectral(
    h: &LatticePmf,
    v: &LatticePmf,
    n: usize,
    m: usize,
) -> Result<SeriesTerms> {
    check_margin("H", h)?;
    check_margin("V", v)?;
    let mut planner = FftPlanner::new();
    let pts = |l: &LatticePmf| l.iter().filter(|(_, w)| *w != 0.0).collect::<Vec<_>>();
    let (gh, gv) = (upper_tail(h), upper_tail(v));
    if gh.len().max(gv.len()) * 2 >= m {
        return Err(Error::input(format!(
            "grid of {m} points is narrower than the jumps"
        )));
    }
    let phi = |l: &LatticePmf, planner: &mut FftPlanner<f64>| -> Arc<Vec<f64>> {
        Arc::new(
            grid_transform(&pts(l), m, planner)
                .iter()
                .map(|z| z.re)
                .collect(),
        )
    };
    let tail_hat = |g: &[f64], planner: &mut FftPlanner<f64>| -> Vec<f64> {
        let vals: Vec<(i64, f64)> = g.iter().enumerate().map(|(i, x)| (i as i64, *x)).collect();
        grid_transform(&vals, m, planner)
            .iter()
            .map(|z| z.re)
            .collect()
    };
    let same = h == v;
    let phi_h = phi(h, &mut planner);
    let phi_v = if same {
        phi_h.clone()
    } else {
        phi(v, &mut planner)
    };
    let ghat_h = tail_hat(&gh, &mut planner);
    let ghat_v = if same {
        ghat_h.clone()
    } else {
        tail_hat(&gv, &mut planner)
    };

    let inv_m = 1.0 / m as f64;
    let mut pow_h = vec![1.0; m];
    let mut pow_v = vec![1.0; m];
    let mut a = Vec::with_capacity(n + 1);
    let mut b = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        let (mut conc_v, mut conc_h) = (0.0, 0.0);
        let (mut ret_h, mut ret_v) = (0.0, 0.0);
        for k in 0..m {
            conc_v += pow_v[k] * ghat_v[k];
            conc_h += pow_h[k] * ghat_h[k];
            pow_h[k] *= phi_h[k];
            pow_v[k] *= phi_v[k];
            ret_h += pow_h[k];
            ret_v += pow_v[k];
        }
        a.push((ret_h * inv_m) * (conc_v * inv_m));
        b.push((ret_v * inv_m) * (conc_h * inv_m));
    }
    let reach = (gh.len().max(gv.len())) as f64;
    let aliasing_bound = [h, v]
        .iter()
        .map(|l| chernoff_tail(l, n + 1, m as f64 - reach))
        .fold(0.0, f64::max);
    Ok(SeriesTerms {
        a: a.into_iter().map(|x| x.max(0.0)).collect(),
        b: b.into_iter().map(|x| x.max(0.0)).collect(),
        aliasing_bound,
    })
}

/// Least-squares fit of `ln y = ln c - γ ln n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerFit {
    pub gamma: f64,
    pub c: f64,
    pub points: usize,
}

/// Fit over `n ∈ [lo, hi]` using positive terms only.
pub fn power_fit(terms: &[f64], lo: usize, hi: usize) -> Option<PowerFit> {
    let pts: Vec<(f64, f64)> = (lo.max(1)..=hi.min(terms.len().saturating_sub(1)))
        .filter(|&n| terms[n] > 0.0)
        .map(|n| ((n as f64).ln(), terms[n].ln()))
        .collect();
    let (slope, intercept, _) = linear_fit(&pts)?;
    Some(PowerFit {
        gamma: -slope,
        c: intercept.exp(),
        points: pts.len(),
    })
}

/// Ordinary least squares `y = a x + b`; returns `(a, b, stderr(a))`.
pub fn linear_fit(pts: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    let n = pts.len() as f64;
    if pts.len() < 3 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let stderr = (rss / (n - 2.0) / sxx).sqrt();
    Some((slope, intercept, stderr))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "recurrent_at_N")]
    RecurrentAtN,
    #[serde(rename = "transient_at_N")]
    TransientAtN,
    #[serde(rename = "undecided")]
    Undecided,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Direct when the walk laws stay below `direct_limit` points.
    Auto,
    Direct,
    Spectral,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    /// Remaining-tail bound allowed, relative to the partial sum.
    pub tolerance: f64,
    /// Decay exponent must exceed `1 + margin` to count as summable.
    pub margin: f64,
    pub engine: Engine,
    /// Grid size of the spectral engine; zero picks one from the jumps.
    pub grid: usize,
    pub direct_limit: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            tolerance: 0.01,
            margin: 0.1,
            engine: Engine::Auto,
            grid: 0,
            direct_limit: 1 << 22,
        }
    }
}

/// Evidence for one of the two series.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesEvidence {
    pub partial_sum: f64,
    pub fit: Option<PowerFit>,
    /// Slope of the partial sums against `ln n` over the last decade and
    /// its standard error.
    pub log_slope: Option<(f64, f64)>,
    /// `c N^{1-γ}/(γ - 1)` when `γ > 1`.
    pub tail_bound: Option<f64>,
    pub summable: bool,
    pub growing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DrrwReport {
    pub verdict: Verdict,
    pub n: usize,
    pub engine: Engine,
    pub g_max: u64,
    pub terms: SeriesTerms,
    pub a: SeriesEvidence,
    pub b: SeriesEvidence,
    pub options: ClassifyOptions,
}

fn evidence(terms: &[f64], opts: &ClassifyOptions) -> SeriesEvidence {
    let n = terms.len().saturating_sub(1);
    let lo = (n / 10).max(1);
    let partial_sum: f64 = terms.iter().sum();
    let fit = power_fit(terms, lo, n);
    let mut acc = 0.0;
    let sums: Vec<f64> = terms
        .iter()
        .map(|t| {
            acc += t;
            acc
        })
        .collect();
    let pts: Vec<(f64, f64)> = (lo..=n).map(|k| ((k as f64).ln(), sums[k])).collect();
    let log_slope = linear_fit(&pts).map(|(s, _, e)| (s, e));
    let tail_bound = fit
        .filter(|f| f.gamma > 1.0)
        .map(|f| f.c * (n as f64).powf(1.0 - f.gamma) / (f.gamma - 1.0));
    let summable = fit.is_some_and(|f| f.gamma > 1.0 + opts.margin)
        && tail_bound.is_some_and(|t| t <= opts.tolerance * partial_sum);
    let growing = log_slope.is_some_and(|(s, e)| s > 0.0 && s > 3.0 * e)
        && fit.is_some_and(|f| f.gamma <= 1.0 + opts.margin);
    SeriesEvidence {
        partial_sum,
        fit,
        log_slope,
        tail_bound,
        summable,
        growing,
    }
}

/// Smallest power of two comfortably above the reach of `n` steps.
fn default_grid(h: &LatticePmf, v: &LatticePmf, n: usize) -> usize {
    let reach = |l: &LatticePmf| {
        let var: f64 = l.iter().map(|(x, m)| m * (x as f64).powi(2)).sum();
        let hi = l.support().map_or(1, |s| s.1.max(-s.0)) as f64;
        (12.0 * (var * (n + 1) as f64).sqrt()).max(4.0 * hi)
    };
    let r = reach(h).max(reach(v));
    (2.0 * r).max(1024.0).log2().ceil().exp2() as usize
}

/// Finite-horizon verdict for a generalized DRRW from the series terms up
/// to `n`.
pub fn classify_drrw(spec: &DrrwSpec, n: usize, opts: &ClassifyOptions) -> Result<DrrwReport> {
    spec.validate()?;
    let g_max = geometric_cutoff(spec.p_h.max(spec.p_v), 1e-13);
    let (h, v) = drrw_margin_jumps(spec, g_max)?;
    classify_margins(&h, &v, n, g_max, opts)
}

/// Smallest positive term in the fit window of either series.
fn smallest_fitted(terms: &SeriesTerms, n: usize) -> f64 {
    let lo = (n / 10).max(1);
    terms.a[lo..]
        .iter()
        .chain(&terms.b[lo..])
        .copied()
        .filter(|x| *x > 0.0)
        .fold(f64::INFINITY, f64::min)
}

pub fn classify_margins(
    h: &LatticePmf,
    v: &LatticePmf,
    n: usize,
    g_max: u64,
    opts: &ClassifyOptions,
) -> Result<DrrwReport> {
    let width = h.len().max(v.len());
    let engine = match opts.engine {
        Engine::Auto if width.saturating_mul(n + 1) <= opts.direct_limit => Engine::Direct,
        Engine::Auto => Engine::Spectral,
        e => e,
    };
    let terms = match engine {
        Engine::Direct => series_criterion_terms(h, v, n)?,
        _ => {
            let m = if opts.grid > 0 {
                opts.grid
            } else {
                default_grid(h, v, n)
            };
            series_criterion_terms_spectral(h, v, n, m)?
        }
    };
    let ea = evidence(&terms.a, opts);
    let eb = evidence(&terms.b, opts);
    let verdict = if (ea.growing && !ea.summable) || (eb.growing && !eb.summable) {
        Verdict::RecurrentAtN
    } else if ea.summable
        && eb.summable
        && terms.aliasing_bound <= opts.tolerance * smallest_fitted(&terms, n)
    {
        Verdict::TransientAtN
    } else {
        Verdict::Undecided
    };
    Ok(DrrwReport {
        verdict,
        n,
        engine,
        g_max,
        terms,
        a: ea,
        b: eb,
        options: *opts,
    })
}

/// `Φ_V(r, s) = Σ_n r^n T_V(n) cos(ns)` with `T_V(n) = P(|V| ≥ n)`,
/// summed until `r^n` drops below `1e-17`.
pub fn tail_series(tail: &[f64], r: f64, s: f64) -> f64 {
    let n_max = if r <= 0.0 {
        1
    } else {
        ((1e-17f64.ln() / r.ln()).ceil() as usize).max(1)
    };
    let mut phase = PhaseWalk::new(s, 0);
    let mut rn = 1.0;
    let mut acc = 0.0;
    for t in tail.iter().take(n_max) {
        let (vers, _) = phase.current();
        acc += rn * t * (1.0 - vers);
        rn *= r;
        phase.advance();
    }
    acc
}

/// `∫∫_{[-a,a]²} Re Φ_V(r, s) / (1 - φ_H(t) φ_V(s)) ds dt` for `r < 1`.
pub fn fourier_double_integral(
    h: &LatticePmf,
    v: &LatticePmf,
    r: f64,
    half_width: f64,
) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::input(format!("r = {r} must lie in [0, 1)")));
    }
    if !v.is_symmetric() {
        return Err(Error::NotSymmetric("vertical jump of the double integral"));
    }
    if !h.is_symmetric() {
        return Err(Error::NotSymmetric(
            "horizontal jump of the double integral",
        ));
    }
    let tail = v.two_sided_tail_table()?;
    let mut total = 0.0;
    let mut cache: std::collections::HashMap<u64, (f64, Complex64)> = Default::default();
    for node in origin_shells(half_width, 1e-7) {
        let (t, s) = node.t;
        let (phi_v_series, one_minus_v) = *cache
            .entry(s.to_bits())
            .or_insert_with(|| (tail_series(&tail, r, s), v.one_minus_char_fn(s)));
        let one_minus_h = h.one_minus_char_fn(t);
        let den = one_minus_h + one_minus_v - one_minus_h * one_minus_v;
        total += node.weight * phi_v_series * den.re / den.norm_sqr();
    }
    Ok(total)
}

/// Concentration sandwich of one walk: for each `n` and window `λ`, the
/// ratio `Q(M_n, λ)/P(0 ≤ M_n ≤ λ)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SandwichReport {
    /// Positivity radius of the characteristic function.
    pub p: f64,
    /// Windows below `l_used / p` are skipped.
    pub l_used: f64,
    pub c_hat: f64,
    /// Largest ratio per `n`.
    pub c_by_n: Vec<(usize, f64)>,
    /// Cases with `P(0 ≤ M_n ≤ λ) > Q(M_n, λ)`.
    pub violations: usize,
    pub checked: usize,
    pub bound: f64,
    pub within_bound: bool,
}

/// `(P(0 ≤ M_n ≤ λ), Q(M_n, λ))`.
pub fn concentration_pair(law_n: &LatticePmf, lambda: f64) -> (f64, f64) {
    let right = law_n.interval_mass(0, lambda.floor() as i64);
    (right, law_n.concentration(lambda))
}

pub fn concentration_sandwich_check(
    jump: &LatticePmf,
    n_max: usize,
    lambdas: &[f64],
    grid: usize,
    bound: f64,
) -> Result<SandwichReport> {
    if !jump.is_symmetric() {
        return Err(Error::NotSymmetric("concentration sandwich"));
    }
    let p = jump.positivity_radius(grid)?;
    let l_used = 2.0 * PI * grid as f64;
    let mut law = LatticePmf::dirac(0);
    let mut c_by_n = Vec::new();
    let (mut violations, mut checked) = (0, 0);
    let mut c_hat: f64 = 0.0;
    for n in 1..=n_max {
        law = law.convolve(jump)?;
        let mut worst: f64 = 0.0;
        for &lam in lambdas.iter().filter(|&&l| l >= l_used / p) {
            let (left, q) = concentration_pair(&law, lam);
            checked += 1;
            if left > q * (1.0 + 1e-14) {
                violations += 1;
            }
            if left > 0.0 {
                worst = worst.max(q / left);
            }
        }
        c_hat = c_hat.max(worst);
        c_by_n.push((n, worst));
    }
    Ok(SandwichReport {
        p,
        l_used,
        c_hat,
        c_by_n,
        violations,
        checked,
        bound,
        within_bound: c_hat <= bound,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EsseenPoint {
    pub n: usize,
    pub lambda: f64,
    pub q: f64,
    /// `λ ∫_{-π/λ}^{π/λ} φ(t)^n dt`
    pub scaled_integral: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EsseenReport {
    pub m_hat: f64,
    pub big_m_hat: f64,
    pub points: Vec<EsseenPoint>,
}

/// Empirical constants `m ≤ Q(M_n, λ)/(λ ∫ φ^n) ≤ M` over `(n, λ)` pairs.
/// Requires `λ > 2π/p` with `φ ≥ 0` on `[-p, p]`.
pub fn esseen_bounds_check(
    jump: &LatticePmf,
    ns: &[usize],
    lambdas: &[f64],
    grid: usize,
) -> Result<EsseenReport> {
    if !jump.is_symmetric() {
        return Err(Error::NotSymmetric("Esseen bounds"));
    }
    let p = jump.positivity_radius(grid)?;
    let mut points = Vec::new();
    for &lam in lambdas {
        if lam <= 2.0 * PI / p {
            return Err(Error::Range(format!(
                "λ = {lam} is not above 2π/p = {}",
                2.0 * PI / p
            )));
        }
    }
    for &n in ns {
        let law = jump.n_fold(n as u64)?;
        for &lam in lambdas {
            let half = PI / lam;
            let integral: f64 = composite_gl8(-half, half, 16)
                .iter()
                .map(|(t, w)| w * jump.char_fn(*t).re.powi(n as i32))
                .sum();
            let scaled = lam * integral;
            let q = law.concentration(lam);
            points.push(EsseenPoint {
                n,
                lambda: lam,
                q,
                scaled_integral: scaled,
                ratio: q / scaled,
            });
        }
    }
    let m_hat = points.iter().map(|p| p.ratio).fold(f64::INFINITY, f64::min);
    let big_m_hat = points.iter().map(|p| p.ratio).fold(0.0, f64::max);
    Ok(EsseenReport {
        m_hat,
        big_m_hat,
        points,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BacktrackCheck {
    /// `P(0 ≤ V_n ≤ max_{l≤G} εA_l)`
    pub lhs: f64,
    /// `2(1 + p_v) P(0 ≤ V_n ≤ J)`
    pub rhs: f64,
    pub holds: bool,
    pub truncated_mass: f64,
}

/// Law of `max_{l ≤ G} ε A_l` where `A_l` are the alternating partial sums
/// `τ_1 - τ_2 + …` of i.i.d. `τ ~ nu`, `G` geometric on `{1, 2, …}` with
/// `P(G > g) = p^g`, and `ε` an independent fair sign.
pub fn backtrack_max_law(nu: &LatticePmf, p: f64, g_max: u64) -> Result<(LatticePmf, f64)> {
    use std::collections::BTreeMap;
    if !(0.0..1.0).contains(&p) {
        return Err(Error::input(format!("p_v = {p} outside [0, 1)")));
    }
    let truncated = if p == 0.0 { 0.0 } else { p.powf(g_max as f64) };
    if truncated >= TRUNCATION_TOL {
        return Err(Error::Truncation(format!("p_v^g_max = {truncated:e}")));
    }
    // state (A_l, max A, min A) after l runs
    let mut states: BTreeMap<(i64, i64, i64), f64> = BTreeMap::new();
    for (x, m) in nu.iter().filter(|(_, m)| *m > 0.0) {
        states.insert((x, x, x), m);
    }
    let mut out: BTreeMap<i64, f64> = BTreeMap::new();
    let mut weight = 1.0 - p;
    let g_eff = if p == 0.0 { 1 } else { g_max };
    for l in 1..=g_eff {
        for (&(_, mx, mn), &m) in &states {
            *out.entry(mx).or_default() += 0.5 * weight * m;
            *out.entry(-mn).or_default() += 0.5 * weight * m;
        }
        if l == g_eff {
            break;
        }
        let sign = if l % 2 == 1 { -1 } else { 1 };
        let mut next: BTreeMap<(i64, i64, i64), f64> = BTreeMap::new();
        for (&(a, mx, mn), &m) in &states {
            for (x, q) in nu.iter().filter(|(_, q)| *q > 0.0) {
                let a2 = a + sign * x;
                *next.entry((a2, mx.max(a2), mn.min(a2))).or_default() += m * q;
            }
        }
        states = next;
        weight *= p;
    }
    let pts: Vec<(i64, f64)> = out.into_iter().collect();
    Ok((LatticePmf::from_points(&pts, truncated)?, truncated))
}

/// Checks `P(0 ≤ V_n ≤ max_{l≤G} εA_l) ≤ 2(1 + p_v) P(0 ≤ V_n ≤ J)` where
/// `J` is the stint law and `V_n` is supplied.
pub fn backtrack_max_bound_check(
    nu: &LatticePmf,
    p: f64,
    v_n: &LatticePmf,
    g_max: u64,
) -> Result<BacktrackCheck> {
    let (max_law, truncated) = backtrack_max_law(nu, p, g_max)?;
    let stint = crate::lattice_dist::geometric_mixture(nu, p, g_max)?.law;
    let against = |law: &LatticePmf| -> f64 {
        law.iter()
            .filter(|(m, _)| *m >= 0)
            .map(|(m, w)| w * v_n.interval_mass(0, m))
            .sum()
    };
    let lhs = against(&max_law);
    let rhs = 2.0 * (1.0 + p) * against(&stint);
    Ok(BacktrackCheck {
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + 1e-12),
        truncated_mass: truncated,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BacktrackCase {
    pub p: f64,
    pub n: usize,
    pub check: BacktrackCheck,
}

/// The backtrack bound for `V_n` a sum of `n` i.i.d. vertical stints,
/// `n = 0..=n_max`.
pub fn backtrack_bound_sweep(nu: &LatticePmf, p: f64, n_max: usize) -> Result<Vec<BacktrackCase>> {
    let g_max = geometric_cutoff(p, 1e-13).max(1);
    let stint = crate::lattice_dist::geometric_mixture(nu, p, g_max)?.law;
    let mut v_n = LatticePmf::dirac(0);
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        if n > 0 {
            v_n = v_n.convolve(&stint)?;
        }
        out.push(BacktrackCase {
            p,
            n,
            check: backtrack_max_bound_check(nu, p, &v_n, g_max)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn orig() -> LatticePmf {
        LatticePmf::from_points(&[(-1, 0.375), (0, 0.25), (1, 0.375)], 0.0).unwrap()
    }

    #[test]
    fn first_terms() {
        let t = series_criterion_terms(&orig(), &orig(), 3).unwrap();
        assert_abs_diff_eq!(t.a[0], 5.0 / 32.0, epsilon = 1e-15);
        let pm = LatticePmf::from_points(&[(-1, 0.5), (1, 0.5)], 0.0).unwrap();
        let t = series_criterion_terms(&pm, &pm, 3).unwrap();
        assert_eq!(t.a[0], 0.0);
    }

    #[test]
    fn engines_agree() {
        let law =
            LatticePmf::from_points(&[(-3, 0.1), (-1, 0.2), (0, 0.4), (1, 0.2), (3, 0.1)], 0.0)
                .unwrap();
        let direct = series_criterion_terms(&orig(), &law, 60).unwrap();
        let spectral = series_criterion_terms_spectral(&orig(), &law, 60, 4096).unwrap();
        for n in 0..=60 {
            assert_abs_diff_eq!(direct.a[n], spectral.a[n], epsilon = 1e-10);
            assert_abs_diff_eq!(direct.b[n], spectral.b[n], epsilon = 1e-10);
        }
        assert!(spectral.aliasing_bound < 1e-20);
        for (n, a, b) in series_terms_at(&orig(), &law, &[0, 7, 31]).unwrap() {
            assert_abs_diff_eq!(direct.a[n], a, epsilon = 1e-12);
            assert_abs_diff_eq!(direct.b[n], b, epsilon = 1e-12);
        }
    }

    #[test]
    fn chernoff_is_an_upper_bound() {
        let law = orig();
        let s = law.n_fold(30).unwrap();
        for r in [5, 10, 20] {
            let exact: f64 = s.iter().filter(|(x, _)| x.abs() >= r).map(|(_, m)| m).sum();
            let bound = chernoff_tail(&law, 30, r as f64);
            assert!(exact <= bound, "{r}: {exact} > {bound}");
        }
        assert_eq!(chernoff_tail(&law, 30, 31.0), 0.0);
    }

    #[test]
    fn unit_drrw_is_recurrent() {
        let spec = DrrwSpec::isotropic(LatticePmf::dirac(1), 1.0 / 3.0).unwrap();
        let r = classify_drrw(&spec, 512, &ClassifyOptions::default()).unwrap();
        assert_eq!(r.verdict, Verdict::RecurrentAtN, "{:?}", r.a);
        // swapping axes swaps the series
        let spec2 = DrrwSpec::new(
            LatticePmf::uniform(1, 2).unwrap(),
            LatticePmf::dirac(1),
            0.2,
            0.4,
        )
        .unwrap();
        let spec3 = DrrwSpec::new(
            LatticePmf::dirac(1),
            LatticePmf::uniform(1, 2).unwrap(),
            0.4,
            0.2,
        )
        .unwrap();
        let r2 = classify_drrw(&spec2, 64, &ClassifyOptions::default()).unwrap();
        let r3 = classify_drrw(&spec3, 64, &ClassifyOptions::default()).unwrap();
        for n in 0..=64 {
            assert_abs_diff_eq!(r2.terms.a[n], r3.terms.b[n], epsilon = 1e-14);
        }
        assert_eq!(r2.verdict, r3.verdict);
    }

    #[test]
    fn terms_are_bounded_by_return_probabilities() {
        let t = series_criterion_terms(&orig(), &orig(), 50).unwrap();
        let mut hn = orig();
        for n in 0..=50 {
            assert!(t.a[n] >= 0.0 && t.a[n] <= hn.mass(0) + 1e-15);
            hn = hn.convolve(&orig()).unwrap();
        }
    }

    #[test]
    fn double_integral_behaviour() {
        let h = orig();
        let v = orig();
        let a = fourier_double_integral(&h, &v, 0.5, PI).unwrap();
        let b = fourier_double_integral(&h, &v, 0.9, PI).unwrap();
        assert!(a.is_finite() && b.is_finite() && b >= a);
        assert!(fourier_double_integral(&h, &v, 1.0, PI).is_err());
        let skew = LatticePmf::from_points(&[(1, 1.0)], 0.0).unwrap();
        assert!(fourier_double_integral(&h, &skew, 0.5, PI).is_err());
        // a degenerate tail leaves Φ_V ≡ T_V(0) = 1
        assert_abs_diff_eq!(tail_series(&[1.0], 0.7, 0.3), 1.0);
    }

    #[test]
    fn sandwich_and_esseen() {
        let pm = LatticePmf::from_points(&[(-1, 0.5), (1, 0.5)], 0.0).unwrap();
        let two = pm.n_fold(2).unwrap();
        let (left, q) = concentration_pair(&two, 2.0);
        assert_abs_diff_eq!(left, 0.75);
        assert_abs_diff_eq!(q, 0.75);
        let e = esseen_bounds_check(&pm, &[4], &[8.0], 8).unwrap();
        assert!(e.m_hat > 0.0 && e.big_m_hat < f64::INFINITY);
        assert!(esseen_bounds_check(&pm, &[4], &[3.0], 8).is_err());
    }

    #[test]
    fn backtrack_sweep_small() {
        let nu = LatticePmf::from_points(&[(1, 0.5), (2, 0.5)], 0.0).unwrap();
        for p in [0.0, 0.5] {
            let cases = backtrack_bound_sweep(&nu, p, 3).unwrap();
            assert_eq!(cases.len(), 4);
            assert!(cases.iter().all(|c| c.check.holds));
        }
    }

    #[test]
    fn backtrack_bound_cases() {
        let nu = LatticePmf::dirac(1);
        let (law, _) = backtrack_max_law(&nu, 0.0, 1).unwrap();
        assert_eq!((law.mass(-1), law.mass(1)), (0.5, 0.5));
        let jump = crate::lattice_dist::geometric_mixture(&nu, 1.0 / 3.0, 40)
            .unwrap()
            .law;
        let v2 = jump.n_fold(2).unwrap();
        assert!(
            backtrack_max_bound_check(&nu, 1.0 / 3.0, &v2, 40)
                .unwrap()
                .holds
        );
    }
}
