//! Fourier perturbation of a finite Markov random walk on Z².
//!
//! A Markov random walk is an internal kernel `P` on finitely many states
//! together with a jump law `μ_{c,s}` on Z² for each edge. Its Fourier
//! operator is `P_t(c, s) = P(c, s) μ̂_{c,s}(t)`; near `t = 0` it has a
//! simple dominant eigenvalue `λ(t)` and the walk is recurrent or transient
//! according as `∫ Re 1/(1 - rλ(t)) dt` blows up as `r ↑ 1`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice_dist::{LatticePmf, MASS_TOL, SUPPORT_CAP, TRIM};
use crate::quad_comb::{Config, QuadCombSpec};
use crate::quadrature::{origin_shells, Node};
use crate::skeleton::{build_kernel, conditional_jump_laws, ConditionalJumpLaws, InternalKernel};

/// Smallest admissible gap between the two largest eigenvalue moduli.
pub const GAP_TOL: f64 = 1e-10;

/// Law on Z used as one coordinate of a product jump.
#[derive(Clone, Debug, PartialEq)]
pub enum Marginal {
    Pmf(LatticePmf),
    /// Symmetric law with `1 - φ(t) = |sin(t/2)|^index`, `0 < index < 2`;
    /// its tails decay like `|k|^{-1-index}`.
    PowerTail {
        index: f64,
    },
}

impl Marginal {
    pub fn power_tail(index: f64) -> Result<Marginal> {
        if !(index > 0.0 && index < 2.0) {
            return Err(Error::input(format!(
                "power-tail index {index} outside (0, 2)"
            )));
        }
        Ok(Marginal::PowerTail { index })
    }

    pub fn one_minus_char_fn(&self, t: f64) -> Complex64 {
        match self {
            Marginal::Pmf(p) => p.one_minus_char_fn(t),
            Marginal::PowerTail { index } => {
                Complex64::new((0.5 * t).sin().abs().powf(*index), 0.0)
            }
        }
    }

    pub fn char_fn(&self, t: f64) -> Complex64 {
        Complex64::new(1.0, 0.0) - self.one_minus_char_fn(t)
    }

    /// Point mass at `k`.
    pub fn mass(&self, k: i64) -> f64 {
        match self {
            Marginal::Pmf(p) => p.mass(k),
            Marginal::PowerTail { index } => power_tail_masses(*index, k.unsigned_abs() as usize)
                .last()
                .copied()
                .unwrap_or(0.0),
        }
    }

    fn generators(&self) -> Vec<i64> {
        match self {
            Marginal::Pmf(p) => p.iter().filter(|(_, m)| *m > 0.0).map(|(x, _)| x).collect(),
            Marginal::PowerTail { .. } => vec![-1, 0, 1],
        }
    }
}

/// Masses `m_0, …, m_k` of the power-tail law of the given index.
pub fn power_tail_masses(index: f64, k: usize) -> Vec<f64> {
    let a = 0.5 * index;
    let scale = 4f64.powf(-a);
    let mut c = (libm_lgamma(2.0 * a + 1.0) - 2.0 * libm_lgamma(a + 1.0)).exp();
    let mut out = Vec::with_capacity(k + 1);
    out.push(1.0 - c * scale);
    for j in 0..k {
        c *= (j as f64 - a) / (j as f64 + 1.0 + a);
        out.push(-c * scale);
    }
    out
}

fn libm_lgamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Jump law of one edge of a Markov random walk.
#[derive(Clone, Debug, PartialEq)]
pub enum JumpLaw {
    /// `T · direction` with `T` drawn from `lengths`.
    Axial {
        direction: (i64, i64),
        lengths: LatticePmf,
    },
    /// Finitely many points with masses summing to one.
    Sparse(Vec<((i64, i64), f64)>),
    /// Independent coordinates.
    Product(Marginal, Marginal),
}

impl JumpLaw {
    /// Nearest-neighbour steps with mass ¼ each.
    pub fn simple_random_walk() -> JumpLaw {
        JumpLaw::Sparse(vec![
            ((1, 0), 0.25),
            ((-1, 0), 0.25),
            ((0, 1), 0.25),
            ((0, -1), 0.25),
        ])
    }

    pub fn sparse(points: &[((i64, i64), f64)]) -> Result<JumpLaw> {
        let mut merged: std::collections::BTreeMap<(i64, i64), f64> = Default::default();
        for &(x, m) in points {
            if !(m >= 0.0) || !m.is_finite() {
                return Err(Error::InvalidPmf(format!("mass {m} at {x:?}")));
            }
            *merged.entry(x).or_default() += m;
        }
        let total: f64 = merged.values().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidPmf(format!("jump masses sum to {total}")));
        }
        Ok(JumpLaw::Sparse(
            merged
                .into_iter()
                .filter(|(_, m)| *m > 0.0)
                .map(|(x, m)| (x, m / total))
                .collect(),
        ))
    }

    pub fn one_minus_char_fn(&self, t: (f64, f64)) -> Complex64 {
        match self {
            JumpLaw::Axial { direction, lengths } => {
                lengths.one_minus_char_fn(direction.0 as f64 * t.0 + direction.1 as f64 * t.1)
            }
            JumpLaw::Sparse(points) => {
                let (mut re, mut im) = (0.0, 0.0);
                for &((x, y), m) in points {
                    let th = x as f64 * t.0 + y as f64 * t.1;
                    let s = (0.5 * th).sin();
                    re += m * 2.0 * s * s;
                    im -= m * th.sin();
                }
                Complex64::new(re, im)
            }
            JumpLaw::Product(h, v) => {
                let a = h.one_minus_char_fn(t.0);
                let b = v.one_minus_char_fn(t.1);
                a + b - a * b
            }
        }
    }

    pub fn char_fn(&self, t: (f64, f64)) -> Complex64 {
        match self {
            JumpLaw::Axial { direction, lengths } => {
                lengths.char_fn(direction.0 as f64 * t.0 + direction.1 as f64 * t.1)
            }
            JumpLaw::Sparse(points) => points
                .iter()
                .map(|&((x, y), m)| Complex64::from_polar(m, x as f64 * t.0 + y as f64 * t.1))
                .sum(),
            JumpLaw::Product(h, v) => h.char_fn(t.0) * v.char_fn(t.1),
        }
    }

    /// All support points with their masses; laws with infinite support
    /// are rejected.
    pub fn finite_points(&self) -> Result<Vec<((i64, i64), f64)>> {
        match self {
            JumpLaw::Axial { direction, lengths } => Ok(lengths
                .iter()
                .filter(|(_, m)| *m > 0.0)
                .map(|(n, m)| ((n * direction.0, n * direction.1), m))
                .collect()),
            JumpLaw::Sparse(points) => Ok(points.clone()),
            JumpLaw::Product(Marginal::Pmf(h), Marginal::Pmf(v)) => {
                let mut out = Vec::new();
                for (x, mx) in h.iter().filter(|(_, m)| *m > 0.0) {
                    for (y, my) in v.iter().filter(|(_, m)| *m > 0.0) {
                        out.push(((x, y), mx * my));
                    }
                }
                Ok(out)
            }
            JumpLaw::Product(..) => Err(Error::input("jump law has infinite support")),
        }
    }

    /// Points whose differences generate the same group as the support's.
    fn generators(&self) -> Vec<(i64, i64)> {
        match self {
            JumpLaw::Product(h, v) => {
                let (gh, gv) = (h.generators(), v.generators());
                let mut out = Vec::new();
                for &x in &gh {
                    for &y in &gv {
                        out.push((x, y));
                    }
                }
                out
            }
            _ => self
                .finite_points()
                .map(|p| p.into_iter().map(|(x, _)| x).collect())
                .unwrap_or_default(),
        }
    }
}

/// Internal kernel with one jump law per positive edge.
#[derive(Clone, Debug)]
pub struct MarkovWalk {
    kernel: InternalKernel,
    jumps: Vec<Vec<Option<JumpLaw>>>,
    resolvent: DMatrix<f64>,
    resolvent_norm: f64,
}

impl MarkovWalk {
    pub fn new(kernel: InternalKernel, jumps: Vec<Vec<Option<JumpLaw>>>) -> Result<MarkovWalk> {
        let n = kernel.len();
        if jumps.len() != n || jumps.iter().any(|r| r.len() != n) {
            return Err(Error::input("jump-law table does not match the kernel"));
        }
        for i in 0..n {
            for j in 0..n {
                if (kernel.matrix[(i, j)] > 0.0) != jumps[i][j].is_some() {
                    return Err(Error::input(format!(
                        "jump law presence differs from the kernel at ({}, {})",
                        kernel.states[i], kernel.states[j]
                    )));
                }
            }
        }
        let resolvent = reduced_resolvent_matrix(&kernel)?;
        let resolvent_norm = (0..n)
            .map(|i| resolvent.row(i).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        Ok(MarkovWalk {
            kernel,
            jumps,
            resolvent,
            resolvent_norm,
        })
    }

    /// A random walk with i.i.d. jumps, seen as a one-state chain.
    pub fn single_state(law: JumpLaw) -> MarkovWalk {
        let kernel = InternalKernel {
            states: vec![Config::INITIAL],
            matrix: DMatrix::from_element(1, 1, 1.0),
            pi: vec![1.0],
        };
        MarkovWalk::new(kernel, vec![vec![Some(law)]]).expect("one-state walk is valid")
    }

    pub fn from_laws(kernel: InternalKernel, laws: &ConditionalJumpLaws) -> Result<MarkovWalk> {
        let n = kernel.len();
        let jumps = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        laws.wait(i, j).map(|w| JumpLaw::Axial {
                            direction: laws.direction(i),
                            lengths: w.clone(),
                        })
                    })
                    .collect()
            })
            .collect();
        MarkovWalk::new(kernel, jumps)
    }

    /// Skeleton walk of a comb.
    pub fn from_comb(spec: &QuadCombSpec) -> Result<MarkovWalk> {
        let kernel = build_kernel(spec)?;
        let laws = conditional_jump_laws(spec, &kernel)?;
        MarkovWalk::from_laws(kernel, &laws)
    }

    pub fn kernel(&self) -> &InternalKernel {
        &self.kernel
    }

    pub fn jump(&self, i: usize, j: usize) -> Option<&JumpLaw> {
        self.jumps[i][j].as_ref()
    }

    pub fn len(&self) -> usize {
        self.kernel.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernel.is_empty()
    }

    /// `μ̂_π(t) = Σ_{c,s} π(c) P(c, s) μ̂_{c,s}(t)`.
    pub fn mixture_char_fn(&self, t: (f64, f64)) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.len() {
            for j in 0..self.len() {
                if let Some(law) = &self.jumps[i][j] {
                    acc += self.kernel.pi[i] * self.kernel.matrix[(i, j)] * law.char_fn(t);
                }
            }
        }
        acc
    }
}

/// `P_t` at one point of the torus.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierOperator {
    pub t: (f64, f64),
    pub matrix: DMatrix<Complex64>,
}

pub fn perturbed_operator(walk: &MarkovWalk, t: (f64, f64)) -> FourierOperator {
    let n = walk.len();
    let matrix = DMatrix::from_fn(n, n, |i, j| match &walk.jumps[i][j] {
        Some(law) => walk.kernel.matrix[(i, j)] * law.char_fn(t),
        None => Complex64::new(0.0, 0.0),
    });
    FourierOperator { t, matrix }
}

/// `P_t - P`, with entries `-P(c, s)(1 - μ̂_{c,s}(t))` computed without
/// cancellation.
pub fn perturbation(walk: &MarkovWalk, t: (f64, f64)) -> DMatrix<Complex64> {
    let n = walk.len();
    DMatrix::from_fn(n, n, |i, j| match &walk.jumps[i][j] {
        Some(law) => -walk.kernel.matrix[(i, j)] * law.one_minus_char_fn(t),
        None => Complex64::new(0.0, 0.0),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrincipalEigen {
    pub lambda: Complex64,
    /// Right eigenvector normalized by `π · v = 1`.
    pub eigvec: DVector<Complex64>,
    /// `|λ| - |λ₂|`; infinite for a one-state chain.
    pub gap: f64,
}

/// Dominant eigenvalue of `P_t` by a complex Schur decomposition.
pub fn principal_eigen(op: &FourierOperator, pi: &[f64]) -> Result<PrincipalEigen> {
    let n = op.matrix.nrows();
    if n == 1 {
        return Ok(PrincipalEigen {
            lambda: op.matrix[(0, 0)],
            eigvec: DVector::from_element(1, Complex64::new(1.0, 0.0)),
            gap: f64::INFINITY,
        });
    }
    let schur = nalgebra::Schur::try_new(op.matrix.clone(), 1e-15, 100_000).ok_or(
        Error::NoConvergence {
            iterations: 100_000,
            increment: f64::NAN,
        },
    )?;
    let (q, tri) = schur.unpack();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| tri[(b, b)].norm().total_cmp(&tri[(a, a)].norm()));
    let k = order[0];
    let lambda = tri[(k, k)];
    let gap = lambda.norm() - tri[(order[1], order[1])].norm();
    if gap < GAP_TOL {
        return Err(Error::NeighbourhoodExceeded {
            t1: op.t.0,
            t2: op.t.1,
            gap,
        });
    }
    // back-substitution for (T - λ) y = 0 with y_k = 1
    let mut y = DVector::from_element(n, Complex64::new(0.0, 0.0));
    y[k] = Complex64::new(1.0, 0.0);
    for j in (0..k).rev() {
        let mut s = Complex64::new(0.0, 0.0);
        for m in j + 1..=k {
            s += tri[(j, m)] * y[m];
        }
        y[j] = -s / (tri[(j, j)] - lambda);
    }
    let mut v = q * y;
    let norm: Complex64 = (0..n).map(|i| pi[i] * v[i]).sum();
    if norm.norm() < 1e-300 {
        return Err(Error::Range("eigenvector orthogonal to π".into()));
    }
    v /= norm;
    Ok(PrincipalEigen {
        lambda,
        eigvec: v,
        gap,
    })
}

pub fn principal_eigenvalue(walk: &MarkovWalk, t: (f64, f64)) -> Result<PrincipalEigen> {
    principal_eigen(&perturbed_operator(walk, t), &walk.kernel.pi)
}

/// `T = (I - P + 𝟙π)^{-1} - 𝟙π`, the inverse of `I - P` on `{πf = 0}`.
pub fn reduced_resolvent_matrix(kernel: &InternalKernel) -> Result<DMatrix<f64>> {
    let n = kernel.len();
    let proj = DMatrix::from_fn(n, n, |_, j| kernel.pi[j]);
    let a = DMatrix::identity(n, n) - &kernel.matrix + &proj;
    let inv = a
        .try_inverse()
        .ok_or_else(|| Error::Range("I - P + 𝟙π is singular".into()))?;
    Ok(inv - proj)
}

/// Agreement required between the series and the linear-solve routes.
pub const RESOLVENT_AGREEMENT: f64 = 1e-10;

/// `Tf = Σ_n P^n (f - (πf)𝟙)`, by partial sums and by a linear solve;
/// the two must agree.
pub fn reduced_resolvent_apply(kernel: &InternalKernel, f: &[f64]) -> Result<Vec<f64>> {
    let n = kernel.len();
    if f.len() != n {
        return Err(Error::input("vector length differs from the kernel"));
    }
    let mean: f64 = kernel.pi.iter().zip(f).map(|(p, x)| p * x).sum();
    let centred = DVector::from_iterator(n, f.iter().map(|x| x - mean));
    let solved = reduced_resolvent_matrix(kernel)? * &centred;

    const MAX_ITER: usize = 1_000_000;
    let mut term = centred.clone();
    let mut sum = centred;
    let mut iterations = 0;
    loop {
        term = &kernel.matrix * &term;
        sum += &term;
        iterations += 1;
        let inc = term.amax();
        if inc < 1e-13 {
            break;
        }
        if iterations >= MAX_ITER {
            return Err(Error::NoConvergence {
                iterations,
                increment: inc,
            });
        }
    }
    let diff = (&sum - &solved).amax();
    if diff > RESOLVENT_AGREEMENT {
        return Err(Error::Range(format!(
            "series and solve routes of the reduced resolvent differ by {diff:e}"
        )));
    }
    Ok(solved.iter().copied().collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expansion {
    /// Approximation of `λ(t) - 1`.
    pub value: Complex64,
    /// Contributions of orders `0..=order`.
    pub terms: Vec<Complex64>,
    /// Magnitude of the last term, an estimate of the truncation error.
    pub last_term: f64,
}

/// Perturbation series of `λ(t) - 1` around the unperturbed eigenvalue 1.
///
/// With `H = P_t - P`, `g_0 = 𝟙`, the order-`k` contribution is
/// `λ_{k+1} = π H g_k` and `g_k = T(H g_{k-1} - Σ_{j=1}^{k-1} λ_j g_{k-j})`.
/// The order-0 contribution is `μ̂_π(t) - 1`.
pub fn expansion_eigenvalue(walk: &MarkovWalk, t: (f64, f64), order: usize) -> Result<Expansion> {
    let h = perturbation(walk, t);
    let terms = expansion_terms(walk, &h, order + 1)?;
    check_contraction(&terms)?;
    let value = terms.iter().sum();
    let last_term = terms.last().map_or(0.0, |z| z.norm());
    Ok(Expansion {
        value,
        terms,
        last_term,
    })
}

fn expansion_terms(
    walk: &MarkovWalk,
    h: &DMatrix<Complex64>,
    count: usize,
) -> Result<Vec<Complex64>> {
    let n = walk.len();
    let t = walk.resolvent.map(|x| Complex64::new(x, 0.0));
    let pi = DVector::from_iterator(n, walk.kernel.pi.iter().map(|&p| Complex64::new(p, 0.0)));
    let mut g: Vec<DVector<Complex64>> = vec![DVector::from_element(n, Complex64::new(1.0, 0.0))];
    let mut lam: Vec<Complex64> = vec![Complex64::new(1.0, 0.0)];
    for k in 1..=count {
        let hg = h * &g[k - 1];
        let lk = pi.dot(&hg);
        lam.push(lk);
        if k == count {
            break;
        }
        let mut rhs = hg;
        for j in 1..k {
            rhs -= &g[k - j] * lam[j];
        }
        g.push(&t * rhs);
    }
    Ok(lam[1..].to_vec())
}

fn check_contraction(terms: &[Complex64]) -> Result<()> {
    let mags: Vec<f64> = terms.iter().map(|z| z.norm()).collect();
    if mags.len() >= 2 {
        let first = mags[0].max(mags[1]);
        let last = mags[mags.len() - 1];
        if first > 0.0 && last >= first {
            return Err(Error::Divergence(format!(
                "perturbation series terms do not shrink: first {first:e}, last {last:e}"
            )));
        }
    }
    for w in mags.windows(3) {
        if w[0] > 0.0 && w[1] >= w[0] && w[2] >= w[1] && w[2] > 1e-300 {
            return Err(Error::Divergence(format!(
                "term ratio ≥ 1 twice in a row ({:e}, {:e}, {:e})",
                w[0], w[1], w[2]
            )));
        }
    }
    Ok(())
}

/// `‖P_t - P‖_∞ ‖T‖_∞` below which `1 - λ(t)` is taken from the series.
const SERIES_RADIUS: f64 = 0.05;

/// `1 - λ(t)` accurate to relative precision also near `t = 0`.
pub fn one_minus_lambda(walk: &MarkovWalk, t: (f64, f64)) -> Result<Complex64> {
    if walk.len() == 1 {
        let law = walk.jumps[0][0]
            .as_ref()
            .expect("one-state walk has its loop");
        return Ok(law.one_minus_char_fn(t));
    }
    let h = perturbation(walk, t);
    let hnorm = (0..walk.len())
        .map(|i| h.row(i).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    if hnorm * walk.resolvent_norm < SERIES_RADIUS {
        let mut terms = expansion_terms(walk, &h, 8)?;
        let mut sum: Complex64 = terms.iter().sum();
        let mut count = terms.len();
        while terms.last().map_or(0.0, |z| z.norm()) > 1e-17 * sum.norm() && count < 60 {
            count += 8;
            terms = expansion_terms(walk, &h, count)?;
            sum = terms.iter().sum();
        }
        return Ok(-sum);
    }
    let eig = principal_eigenvalue(walk, t)?;
    Ok(Complex64::new(1.0, 0.0) - eig.lambda)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SectorReport {
    /// Smallest `K` with `|Im λ| ≤ K Re(1 - λ)` on the grid.
    pub k_hat: f64,
    pub k: f64,
    pub passes: bool,
    pub max_abs_imag: f64,
    /// Whether the reversible symmetric case applies, in which `λ` must be
    /// real.
    pub reversible_symmetric: bool,
    pub real_spectrum_ok: Option<bool>,
}

/// Empirical sector constant of `λ` over the given points.
pub fn sector_check(walk: &MarkovWalk, points: &[(f64, f64)], k: f64) -> Result<SectorReport> {
    let mut k_hat: f64 = 0.0;
    let mut max_im: f64 = 0.0;
    for &t in points {
        if t == (0.0, 0.0) {
            continue;
        }
        let z = one_minus_lambda(walk, t)?;
        max_im = max_im.max(z.im.abs());
        let ratio = if z.re > 0.0 {
            z.im.abs() / z.re
        } else if z.im == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        k_hat = k_hat.max(ratio);
    }
    let reversible_symmetric = is_reversible_symmetric(walk, points);
    Ok(SectorReport {
        k_hat,
        k,
        passes: k_hat <= k,
        max_abs_imag: max_im,
        reversible_symmetric,
        real_spectrum_ok: reversible_symmetric.then_some(max_im <= 1e-12),
    })
}

/// `π(c)P(c,s) = π(s)P(s,c)` and `μ_{c,s}(dx) = μ_{s,c}(-dx)`, the latter
/// tested through characteristic functions on the points.
fn is_reversible_symmetric(walk: &MarkovWalk, points: &[(f64, f64)]) -> bool {
    let k = &walk.kernel;
    for i in 0..walk.len() {
        for j in 0..walk.len() {
            let a = k.pi[i] * k.matrix[(i, j)];
            let b = k.pi[j] * k.matrix[(j, i)];
            if (a - b).abs() > 1e-13 {
                return false;
            }
            if let (Some(f), Some(g)) = (&walk.jumps[i][j], &walk.jumps[j][i]) {
                for &t in points.iter().take(64) {
                    if (f.char_fn(t) - g.char_fn(t).conj()).norm() > 1e-13 {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Subgroup of Z² kept in Hermite normal form `{(a, b), (0, d)}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Sublattice {
    a: i128,
    b: i128,
    d: i128,
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        return if a >= 0 { (a, 1, 0) } else { (-a, -1, 0) };
    }
    let (g, s, t) = ext_gcd(b, a % b);
    (g, t, s - (a / b) * t)
}

impl Sublattice {
    pub fn add(&mut self, v: (i64, i64)) {
        let (x, y) = (v.0 as i128, v.1 as i128);
        if x == 0 {
            self.d = gcd(self.d, y);
        } else if self.a == 0 {
            self.d = gcd(self.d, self.b);
            self.a = x;
            self.b = y;
        } else {
            let (g, s, t) = ext_gcd(self.a, x);
            let e = (x / g) * self.b - (self.a / g) * y;
            self.b = s * self.b + t * y;
            self.a = g;
            self.d = gcd(self.d, e);
        }
        if self.a < 0 {
            self.a = -self.a;
            self.b = -self.b;
        }
        if self.d != 0 {
            self.b = self.b.rem_euclid(self.d);
        }
    }

    /// Index in Z²; `None` when the subgroup has rank below 2.
    pub fn index(&self) -> Option<u64> {
        (self.a != 0 && self.d != 0).then(|| (self.a * self.d) as u64)
    }
}

/// Index of the group generated by differences of the points.
fn difference_index(points: &[(i64, i64)]) -> Option<u64> {
    let &first = points.first()?;
    let mut lat = Sublattice::default();
    for &p in &points[1..] {
        lat.add((p.0 - first.0, p.1 - first.1));
    }
    lat.index()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AperiodicityReport {
    /// Index of the group generated by differences of all jump support
    /// points; `None` for rank below 2.
    pub index: Option<u64>,
    pub aperiodic: bool,
    /// The same test restricted to the jumps leaving each state.
    pub per_state: Vec<(String, Option<u64>)>,
}

pub fn aperiodicity(walk: &MarkovWalk) -> AperiodicityReport {
    let mut all = Vec::new();
    let mut per_state = Vec::new();
    for i in 0..walk.len() {
        let mut pts = Vec::new();
        for j in 0..walk.len() {
            if let Some(law) = &walk.jumps[i][j] {
                pts.extend(law.generators());
            }
        }
        per_state.push((walk.kernel.states[i].to_string(), difference_index(&pts)));
        all.extend(pts);
    }
    let index = difference_index(&all);
    AperiodicityReport {
        index,
        aperiodic: index == Some(1),
        per_state,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Diverges,
    Converges,
    Undecided,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeriodicPolicy {
    /// Refuse periodic walks.
    Reject,
    /// Classify anyway and record the period in the report.
    Report,
}

/// Decision rule on the sequence `I_j = ∫ Re 1/(1 - (1 - 2^{-j})λ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierThresholds {
    /// Number of trailing halvings inspected.
    pub window: usize,
    /// Converges when every trailing relative change is below this.
    pub converge_rel: f64,
    /// Diverges when every trailing increment is positive and at least
    /// this fraction of the one before.
    pub growth_ratio: f64,
    /// Diverges when the last value exceeds this with positive increments.
    pub escape: f64,
    /// Last halving index `j`.
    pub halvings: usize,
}

impl Default for FourierThresholds {
    fn default() -> Self {
        FourierThresholds {
            window: 4,
            converge_rel: 1e-3,
            growth_ratio: 0.99,
            escape: 1e3,
            halvings: 40,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierOptions {
    /// The neighbourhood is `[-half_width, half_width]²`.
    pub half_width: f64,
    pub thresholds: FourierThresholds,
    pub policy: PeriodicPolicy,
}

impl Default for FourierOptions {
    fn default() -> Self {
        FourierOptions {
            half_width: PI,
            thresholds: FourierThresholds::default(),
            policy: PeriodicPolicy::Reject,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FourierReport {
    pub classification: Classification,
    /// `(1 - r, ∫ Re 1/(1 - rλ))` for `r = 1 - 2^{-j}`.
    pub values: Vec<(f64, f64)>,
    pub aperiodicity: AperiodicityReport,
    pub options: FourierOptions,
    pub nodes: usize,
}

/// Values of `1 - λ` on a cubature rule refined towards the origin.
pub fn lambda_nodes(
    walk: &MarkovWalk,
    half_width: f64,
    h_min: f64,
) -> Result<Vec<(Node, Complex64)>> {
    origin_shells(half_width, h_min)
        .into_iter()
        .map(|node| one_minus_lambda(walk, node.t).map(|z| (node, z)))
        .collect()
}

/// `Re 1/(1 - rλ)` with `ε = 1 - r`, written as `1/((1-ε)(1-λ) + ε)`.
#[inline]
pub fn resolvent_integrand(one_minus: Complex64, eps: f64) -> f64 {
    let den = one_minus * (1.0 - eps) + eps;
    den.re / den.norm_sqr()
}

pub fn classify_sequence(values: &[f64], th: &FourierThresholds) -> Classification {
    let w = th.window;
    if values.len() < w + 2 {
        return Classification::Undecided;
    }
    let inc: Vec<f64> = values.windows(2).map(|p| p[1] - p[0]).collect();
    let last = values.len() - 1;
    let converged = (0..w).all(|k| {
        let j = last - k;
        (inc[j - 1] / values[j]).abs() < th.converge_rel
    });
    if converged {
        return Classification::Converges;
    }
    let tail = &inc[inc.len() - w..];
    let positive = tail.iter().all(|d| *d > 0.0);
    let sustained = (inc.len() - w..inc.len()).all(|j| inc[j] >= th.growth_ratio * inc[j - 1]);
    if positive && (sustained || values[last] > th.escape) {
        return Classification::Diverges;
    }
    Classification::Undecided
}

/// Largest `π/2^j` such that the dominant eigenvalue stays separated at
/// every point of a `probe × probe` grid on `[-h, h]²`.
pub fn separated_half_width(walk: &MarkovWalk, probe: usize) -> Option<f64> {
    let probe = probe.max(2);
    (0..20).map(|j| PI / 2f64.powi(j)).find(|&h| {
        (0..probe).all(|a| {
            (0..probe).all(|b| {
                let s = |i: usize| -h + 2.0 * h * i as f64 / (probe - 1) as f64;
                principal_eigenvalue(walk, (s(a), s(b))).is_ok()
            })
        })
    })
}

/// Recurrence test by the growth of `∫_V Re 1/(1 - rλ(t)) dt` as `r ↑ 1`.
pub fn fourier_criterion(walk: &MarkovWalk, opts: &FourierOptions) -> Result<FourierReport> {
    let aper = aperiodicity(walk);
    if !aper.aperiodic && opts.policy == PeriodicPolicy::Reject {
        return Err(Error::Periodic(format!(
            "jump supports generate a subgroup of index {}",
            aper.index.map_or("infinite".to_string(), |i| i.to_string())
        )));
    }
    let th = &opts.thresholds;
    let eps_min = 0.5f64.powi(th.halvings as i32);
    let nodes = lambda_nodes(walk, opts.half_width, eps_min.sqrt() / 100.0)?;
    let mut values = Vec::with_capacity(th.halvings);
    for j in 1..=th.halvings {
        let eps = 0.5f64.powi(j as i32);
        let integral: f64 = nodes
            .iter()
            .map(|(n, z)| n.weight * resolvent_integrand(*z, eps))
            .sum();
        values.push((eps, integral));
    }
    let seq: Vec<f64> = values.iter().map(|v| v.1).collect();
    Ok(FourierReport {
        classification: classify_sequence(&seq, th),
        values,
        aperiodicity: aper,
        options: *opts,
        nodes: nodes.len(),
    })
}

/// One row of a λ table over a torus grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridRow {
    pub t: (f64, f64),
    /// `None` where the dominant eigenvalue is not separated.
    pub lambda: Option<Complex64>,
    /// `Re 1/(1 - λ)`, infinite at `t = 0`.
    pub integrand: f64,
}

/// `λ(t)` on the `grid × grid` lattice `t = -π + 2πk/grid`, origin included.
pub fn spectral_grid(walk: &MarkovWalk, grid: usize) -> Vec<GridRow> {
    let step = 2.0 * PI / grid as f64;
    let half = grid as i64 / 2;
    let mut out = Vec::with_capacity(grid * grid);
    for a in 0..grid as i64 {
        for b in 0..grid as i64 {
            let t = ((a - half) as f64 * step, (b - half) as f64 * step);
            let eig = principal_eigenvalue(walk, t).ok();
            let integrand = if t == (0.0, 0.0) {
                f64::INFINITY
            } else {
                match one_minus_lambda(walk, t) {
                    Ok(z) => z.re / z.norm_sqr(),
                    Err(_) => f64::NAN,
                }
            };
            out.push(GridRow {
                t,
                lambda: eig.map(|e| e.lambda),
                integrand,
            });
        }
    }
    out
}

/// Dense probability window on a rectangle of Z².
#[derive(Clone, Debug)]
pub(crate) struct Window {
    pub x0: i64,
    pub y0: i64,
    pub w: usize,
    pub h: usize,
    pub data: Vec<f64>,
}

impl Window {
    pub fn point(x: i64, y: i64, mass: f64) -> Window {
        Window {
            x0: x,
            y0: y,
            w: 1,
            h: 1,
            data: vec![mass],
        }
    }

    pub fn empty() -> Window {
        Window {
            x0: 0,
            y0: 0,
            w: 0,
            h: 0,
            data: Vec::new(),
        }
    }

    pub fn at(&self, x: i64, y: i64) -> f64 {
        let (cx, cy) = (x - self.x0, y - self.y0);
        if cx < 0 || cy < 0 || cx as usize >= self.w || cy as usize >= self.h {
            0.0
        } else {
            self.data[cy as usize * self.w + cx as usize]
        }
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Drops border rows and columns whose entries are all below `trim`,
    /// returning the discarded mass.
    pub fn trim(&mut self, trim: f64) -> f64 {
        if self.w == 0 || self.h == 0 {
            return 0.0;
        }
        let row_small =
            |d: &[f64], w: usize, r: usize| d[r * w..(r + 1) * w].iter().all(|v| v.abs() <= trim);
        let col_small = |d: &[f64], w: usize, r0: usize, r1: usize, c: usize| {
            (r0..r1).all(|r| d[r * w + c].abs() <= trim)
        };
        let (mut top, mut bottom) = (0, self.h);
        while top < bottom && row_small(&self.data, self.w, top) {
            top += 1;
        }
        while bottom > top && row_small(&self.data, self.w, bottom - 1) {
            bottom -= 1;
        }
        if top == bottom {
            let lost = self.total();
            *self = Window::empty();
            return lost;
        }
        let (mut left, mut right) = (0, self.w);
        while left < right && col_small(&self.data, self.w, top, bottom, left) {
            left += 1;
        }
        while right > left && col_small(&self.data, self.w, top, bottom, right - 1) {
            right -= 1;
        }
        if (top, bottom, left, right) == (0, self.h, 0, self.w) {
            return 0.0;
        }
        let before = self.total();
        let nw = right - left;
        let mut data = Vec::with_capacity(nw * (bottom - top));
        for r in top..bottom {
            data.extend_from_slice(&self.data[r * self.w + left..r * self.w + right]);
        }
        *self = Window {
            x0: self.x0 + left as i64,
            y0: self.y0 + top as i64,
            w: nw,
            h: bottom - top,
            data,
        };
        before - self.total()
    }
}

/// Adds `weight · src` shifted by each jump into a fresh window.
pub(crate) fn push_forward(sources: &[(&Window, f64, &[((i64, i64), f64)])]) -> Result<Window> {
    let mut bounds: Option<(i64, i64, i64, i64)> = None;
    for (src, _, jumps) in sources {
        if src.w == 0 {
            continue;
        }
        for &((dx, dy), _) in jumps.iter() {
            let b = (
                src.x0 + dx,
                src.y0 + dy,
                src.x0 + dx + src.w as i64,
                src.y0 + dy + src.h as i64,
            );
            bounds = Some(match bounds {
                None => b,
                Some(a) => (a.0.min(b.0), a.1.min(b.1), a.2.max(b.2), a.3.max(b.3)),
            });
        }
    }
    let Some((x0, y0, x1, y1)) = bounds else {
        return Ok(Window::empty());
    };
    let (w, h) = ((x1 - x0) as usize, (y1 - y0) as usize);
    let cells = w.saturating_mul(h);
    if cells > SUPPORT_CAP {
        return Err(Error::SupportCap {
            needed: cells,
            cap: SUPPORT_CAP,
        });
    }
    let mut data = vec![0.0; cells];
    for (src, weight, jumps) in sources {
        if src.w == 0 {
            continue;
        }
        for &((dx, dy), m) in jumps.iter() {
            let c = weight * m;
            let col = (src.x0 + dx - x0) as usize;
            let row0 = (src.y0 + dy - y0) as usize;
            for r in 0..src.h {
                let dst = &mut data[(row0 + r) * w + col..(row0 + r) * w + col + src.w];
                let s = &src.data[r * src.w..(r + 1) * src.w];
                for (d, v) in dst.iter_mut().zip(s) {
                    *d += c * v;
                }
            }
        }
    }
    Ok(Window { x0, y0, w, h, data })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReturnSeries {
    /// `P_ν(Z_n = 0)` for `n = 0..=N`.
    pub probs: Vec<f64>,
    /// Mass discarded by window trimming.
    pub dropped: f64,
}

impl ReturnSeries {
    pub fn partial_sums(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect()
    }
}

/// Exact return probabilities of the walk started from `Z_0 = 0` with
/// `C_0 ~ initial`, by forward recursion of one window per state.
pub fn series_return_probs(walk: &MarkovWalk, initial: &[f64], n: usize) -> Result<ReturnSeries> {
    let k = walk.len();
    if initial.len() != k {
        return Err(Error::input("initial law length differs from the kernel"));
    }
    if initial.iter().any(|p| !(*p >= 0.0)) || (initial.iter().sum::<f64>() - 1.0).abs() > MASS_TOL
    {
        return Err(Error::input("initial law is not a probability vector"));
    }
    let mut jumps: Vec<Vec<Option<Vec<((i64, i64), f64)>>>> = vec![vec![None; k]; k];
    for i in 0..k {
        for j in 0..k {
            if let Some(law) = &walk.jumps[i][j] {
                jumps[i][j] = Some(law.finite_points()?);
            }
        }
    }
    let mut windows: Vec<Window> = initial
        .iter()
        .map(|&p| {
            if p > 0.0 {
                Window::point(0, 0, p)
            } else {
                Window::empty()
            }
        })
        .collect();
    let mut probs = Vec::with_capacity(n + 1);
    probs.push(windows.iter().map(|w| w.at(0, 0)).sum());
    let mut dropped = 0.0;
    for _ in 0..n {
        let mut next = Vec::with_capacity(k);
        for j in 0..k {
            let sources: Vec<(&Window, f64, &[((i64, i64), f64)])> = (0..k)
                .filter_map(|i| {
                    jumps[i][j]
                        .as_ref()
                        .map(|pts| (&windows[i], walk.kernel.matrix[(i, j)], pts.as_slice()))
                })
                .collect();
            let mut w = push_forward(&sources)?;
            dropped += w.trim(TRIM);
            next.push(w);
        }
        windows = next;
        probs.push(windows.iter().map(|w| w.at(0, 0)).sum());
    }
    Ok(ReturnSeries { probs, dropped })
}

/// `Σ_{n≤N} P(Z_n = 0)` for i.i.d. jumps from the identity
/// `(1/M²) Σ_t (1 - φ(t)^{N+1})/(1 - φ(t))` on the discrete torus of side
/// `M`, exact when `M` exceeds twice the largest reachable coordinate.
pub fn torus_partial_sum(law: &JumpLaw, n: usize, m: usize) -> Result<f64> {
    let reach = law
        .finite_points()?
        .iter()
        .map(|((x, y), _)| x.abs().max(y.abs()))
        .max()
        .unwrap_or(0) as usize;
    if m <= 2 * n * reach {
        return Err(Error::input(format!(
            "torus side {m} aliases walks of {n} steps"
        )));
    }
    let step = 2.0 * PI / m as f64;
    let mut acc = 0.0;
    for a in 0..m {
        for b in 0..m {
            let t = (a as f64 * step, b as f64 * step);
            if a == 0 && b == 0 {
                acc += (n + 1) as f64;
                continue;
            }
            let phi = law.char_fn(t);
            let one_minus = law.one_minus_char_fn(t);
            if one_minus.norm() < 1e-14 {
                acc += (n + 1) as f64;
            } else {
                acc += ((Complex64::new(1.0, 0.0) - phi.powu(n as u32 + 1)) / one_minus).re;
            }
        }
    }
    Ok(acc / (m * m) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad_comb::DrrwSpec;
    use approx::assert_abs_diff_eq;

    fn unit_drrw(p: f64) -> MarkovWalk {
        let spec = DrrwSpec::isotropic(LatticePmf::dirac(1), p).unwrap();
        MarkovWalk::from_comb(&spec.to_quadcomb().unwrap()).unwrap()
    }

    #[test]
    fn operator_at_zero_is_the_kernel() {
        let w = unit_drrw(1.0 / 3.0);
        let op = perturbed_operator(&w, (0.0, 0.0));
        for i in 0..w.len() {
            for j in 0..w.len() {
                assert_eq!(op.matrix[(i, j)].re, w.kernel().matrix[(i, j)]);
                assert_eq!(op.matrix[(i, j)].im, 0.0);
            }
        }
        let op = perturbed_operator(&w, (PI, PI));
        let k = w.kernel();
        let (i, j) = (
            k.index_of(Config::INITIAL).unwrap(),
            k.index_of("en".parse().unwrap()).unwrap(),
        );
        assert_abs_diff_eq!(op.matrix[(i, j)].re, -1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(op.matrix[(i, j)].im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn eigen_at_zero() {
        let w = unit_drrw(1.0 / 3.0);
        let e = principal_eigenvalue(&w, (0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(e.lambda.re, 1.0, epsilon = 1e-13);
        for v in e.eigvec.iter() {
            assert_abs_diff_eq!(v.re, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-12);
        }
        for t in [(0.1, 0.0), (0.05, -0.2), (0.3, 0.3)] {
            let e = principal_eigenvalue(&w, t).unwrap();
            assert!(e.lambda.norm() < 1.0);
            let om = one_minus_lambda(&w, t).unwrap();
            assert_abs_diff_eq!(om.re, 1.0 - e.lambda.re, epsilon = 1e-12);
            assert_abs_diff_eq!(e.lambda.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn scalar_chain() {
        let law = JumpLaw::simple_random_walk();
        let w = MarkovWalk::single_state(law.clone());
        for t in [(0.3, 1.1), (PI, -2.0)] {
            let e = principal_eigenvalue(&w, t).unwrap();
            assert_abs_diff_eq!(e.lambda.re, law.char_fn(t).re, epsilon = 1e-15);
            let x = expansion_eigenvalue(&w, t, 5).unwrap();
            assert_abs_diff_eq!(
                (x.value - (law.char_fn(t) - 1.0)).norm(),
                0.0,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn resolvent_routes() {
        let w = unit_drrw(1.0 / 3.0);
        let k = w.kernel();
        let ones = vec![1.0; k.len()];
        assert!(reduced_resolvent_apply(k, &ones)
            .unwrap()
            .iter()
            .all(|x| x.abs() < 1e-14));
        let f: Vec<f64> = (0..k.len()).map(|i| (i as f64 * 0.7).sin()).collect();
        let tf = reduced_resolvent_apply(k, &f).unwrap();
        let pi_tf: f64 = k.pi.iter().zip(&tf).map(|(p, x)| p * x).sum();
        assert!(pi_tf.abs() < 1e-14);
        let mean: f64 = k.pi.iter().zip(&f).map(|(p, x)| p * x).sum();
        for i in 0..k.len() {
            let ptf: f64 = (0..k.len()).map(|j| k.matrix[(i, j)] * tf[j]).sum();
            assert_abs_diff_eq!(tf[i] - ptf, f[i] - mean, epsilon = 1e-12);
        }
        // a two-periodic chain never lets the partial sums settle
        let nb = unit_drrw(0.0);
        let f: Vec<f64> = (0..nb.len()).map(|i| i as f64).collect();
        assert!(reduced_resolvent_apply(nb.kernel(), &f).is_err());
    }

    #[test]
    fn expansion_matches_eigensolve() {
        let w = unit_drrw(1.0 / 3.0);
        for t in [(0.05, 0.02), (0.1, -0.1), (0.0, 0.15)] {
            let x = expansion_eigenvalue(&w, t, 10).unwrap();
            let e = principal_eigenvalue(&w, t).unwrap();
            assert!((x.value - (e.lambda - 1.0)).norm() < 1e-10);
            assert!((x.terms[0] - (w.mixture_char_fn(t) - 1.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn sector_examples() {
        let drift = MarkovWalk::single_state(JumpLaw::sparse(&[((1, 0), 1.0)]).unwrap());
        let pts: Vec<(f64, f64)> = (1..=10).map(|k| (0.1f64.powi(k), 0.0)).collect();
        let r = sector_check(&drift, &pts, 10.0).unwrap();
        assert!(!r.passes && r.k_hat > 1e8);
        let srw = MarkovWalk::single_state(JumpLaw::simple_random_walk());
        let r = sector_check(&srw, &pts, 0.0).unwrap();
        assert_eq!(r.k_hat, 0.0);
        assert_eq!(r.real_spectrum_ok, Some(true));
        let w = unit_drrw(1.0 / 3.0);
        let grid: Vec<(f64, f64)> = (-4..=4)
            .flat_map(|a| (-4..=4).map(move |b| (a as f64 * 0.05, b as f64 * 0.05)))
            .collect();
        let r = sector_check(&w, &grid, 1.0).unwrap();
        assert!(r.max_abs_imag < 1e-12, "{r:?}");
    }

    #[test]
    fn lattice_index() {
        let srw = MarkovWalk::single_state(JumpLaw::simple_random_walk());
        assert_eq!(aperiodicity(&srw).index, Some(2));
        let lazy = MarkovWalk::single_state(
            JumpLaw::sparse(&[
                ((0, 0), 0.2),
                ((1, 0), 0.2),
                ((-1, 0), 0.2),
                ((0, 1), 0.2),
                ((0, -1), 0.2),
            ])
            .unwrap(),
        );
        assert_eq!(aperiodicity(&lazy).index, Some(1));
        let orig = aperiodicity(&unit_drrw(1.0 / 3.0));
        assert_eq!(orig.index, Some(2));
        assert!(orig.per_state.iter().all(|(_, i)| i.is_none()));
        let mut lat = Sublattice::default();
        for v in [(4, 6), (6, 9), (2, 0)] {
            lat.add(v);
        }
        // generated by (2, 0), (0, 3)
        assert_eq!(lat.index(), Some(6));
    }

    #[test]
    fn srw_return_probabilities() {
        let srw = MarkovWalk::single_state(JumpLaw::simple_random_walk());
        let s = series_return_probs(&srw, &[1.0], 40).unwrap();
        assert_eq!(s.probs[0], 1.0);
        let mut c = 1.0; // C(2m, m)/4^m
        for m in 1..=20 {
            c *= (2 * m - 1) as f64 / (2 * m) as f64;
            assert_abs_diff_eq!(s.probs[2 * m], c * c, epsilon = 1e-14);
            assert_eq!(s.probs[2 * m - 1], 0.0);
        }
        let torus = torus_partial_sum(&JumpLaw::simple_random_walk(), 40, 97).unwrap();
        assert_abs_diff_eq!(torus, s.partial_sums()[40], epsilon = 1e-11);
    }

    #[test]
    fn skeleton_has_no_zero_jump() {
        let w = unit_drrw(1.0 / 3.0);
        let mut init = vec![0.0; w.len()];
        init[w.kernel().index_of(Config::INITIAL).unwrap()] = 1.0;
        let s = series_return_probs(&w, &init, 6).unwrap();
        assert_eq!(s.probs[1], 0.0);
        assert!(s.probs[2] > 0.0);
    }

    #[test]
    fn power_tail_law() {
        let m = power_tail_masses(0.5, 4000);
        assert!(m.iter().all(|x| *x > 0.0));
        let total = m[0] + 2.0 * m[1..].iter().sum::<f64>();
        // tail beyond k decays like k^{-1/2}
        assert!((1.0 - total) < 0.05 && (1.0 - total) > 0.0);
        let law = Marginal::power_tail(0.5).unwrap();
        let t = 0.7;
        let direct: f64 = m[0]
            + 2.0
                * (1..m.len())
                    .map(|k| m[k] * (k as f64 * t).cos())
                    .sum::<f64>();
        assert!((direct - law.char_fn(t).re).abs() < 0.02);
    }

    #[test]
    fn classification_rules() {
        let th = FourierThresholds::default();
        let lin: Vec<f64> = (0..20).map(|j| 10.0 + 8.7 * j as f64).collect();
        assert_eq!(classify_sequence(&lin, &th), Classification::Diverges);
        let flat: Vec<f64> = (0..20).map(|j| 5.0 - 0.5f64.powi(j)).collect();
        assert_eq!(classify_sequence(&flat, &th), Classification::Converges);
        let slow: Vec<f64> = (0..20).map(|j| 5.0 - 0.9f64.powi(j)).collect();
        assert_eq!(classify_sequence(&slow, &th), Classification::Undecided);
    }
}
