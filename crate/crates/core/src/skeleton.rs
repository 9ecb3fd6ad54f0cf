//! The Markov random walk sampled at direction changes.
//!
//! Breaking times `B_n` are the times where the letter changes, the
//! internal chain `C_n = (X_{B_n}, X_{B_n + 1})` is the configuration
//! entered there and the skeleton `Z_n = S_{B_n}` is the walk at those
//! times. Between two breaks the walk moves `T = B_{n+1} - B_n` steps in
//! direction `C_n.cur`.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use serde::Serialize;

use crate::lattice_dist::{geometric_cutoff, geometric_mixture, LatticePmf, SUPPORT_CAP};
use crate::quad_comb::{
    csv_err, run_length_table, simulate_prw, Config, DrrwSpec, Letter, QuadCombSpec, Trajectory,
};
use crate::stats::{chi_square_gof, pool_sparse_cells, total_variation, ChiSquare};

/// Tolerance on row sums before renormalizing.
pub const ROW_RESIDUAL_TOL: f64 = 1e-9;
/// Tolerance on `πP = π`.
pub const STATIONARY_TOL: f64 = 1e-12;

/// Kernel of the internal chain restricted to the communicating class of
/// `(n, e)`.
#[derive(Clone, Debug, PartialEq)]
pub struct InternalKernel {
    pub states: Vec<Config>,
    pub matrix: DMatrix<f64>,
    pub pi: Vec<f64>,
}

impl InternalKernel {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, c: Config) -> Option<usize> {
        self.states.iter().position(|&s| s == c)
    }

    pub fn entry(&self, from: Config, to: Config) -> f64 {
        match (self.index_of(from), self.index_of(to)) {
            (Some(i), Some(j)) => self.matrix[(i, j)],
            _ => 0.0,
        }
    }

    /// Kernel given directly by a matrix on abstract states, for chains
    /// that do not come from a comb. States are labelled by configurations
    /// only for display.
    pub fn from_matrix(states: Vec<Config>, matrix: DMatrix<f64>) -> Result<InternalKernel> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() != states.len() {
            return Err(Error::input(
                "kernel matrix must be square and match the states",
            ));
        }
        check_stochastic(&matrix)?;
        let pi = stationary(&matrix)?;
        Ok(InternalKernel { states, matrix, pi })
    }
}

fn check_stochastic(m: &DMatrix<f64>) -> Result<()> {
    for i in 0..m.nrows() {
        let row = m.row(i);
        if row.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::input(format!(
                "kernel row {i} has a negative or NaN entry"
            )));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::input(format!("kernel row {i} sums to {s}")));
        }
    }
    Ok(())
}

/// Probabilities of turning into each successor of `c`, in
/// [`Config::successors`] order, before renormalization.
fn edge_masses(spec: &QuadCombSpec, c: Config) -> Result<[f64; 3]> {
    let law = spec
        .law(c)
        .ok_or_else(|| Error::Inadmissible(format!("configuration {c} has no law")))?;
    let mut out = [0.0; 3];
    let mut survival = 1.0;
    for n in 1..=law.n_max() as u64 {
        let a = law.alpha(n, spec.tail());
        let row = law.turn(n);
        for s in 0..3 {
            out[s] += survival * a * row[s];
        }
        survival *= 1.0 - a;
    }
    // beyond the table the turn row is constant and the remaining mass
    // S_{n_max} is spent unless the walk can never change again
    let tail_alpha = law.alpha(law.n_max() as u64 + 1, spec.tail());
    if tail_alpha > 0.0 {
        let row = law.turn(law.n_max() as u64 + 1);
        for s in 0..3 {
            out[s] += survival * row[s];
        }
    }
    Ok(out)
}

/// Strongly connected components of the graph `i → j` iff `m[i][j] > 0`,
/// each sorted, in order of their smallest member.
pub fn communicating_classes(m: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let reach_from = |start: usize, forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let w = if forward { m[(i, j)] } else { m[(j, i)] };
                if w > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen
    };
    let mut assigned = vec![false; n];
    let mut classes = Vec::new();
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let fwd = reach_from(i, true);
        let bwd = reach_from(i, false);
        let class: Vec<usize> = (0..n).filter(|&j| fwd[j] && bwd[j]).collect();
        for &j in &class {
            assigned[j] = true;
        }
        classes.push(class);
    }
    classes
}

/// Internal kernel of an admissible comb, restricted to the states
/// reachable from `(n, e)`, which must form a single closed class.
pub fn build_kernel(spec: &QuadCombSpec) -> Result<InternalKernel> {
    spec.check_admissible()?;
    let all = Config::all();
    let mut full = DMatrix::<f64>::zeros(12, 12);
    let mut reach = [false; 12];
    reach[Config::INITIAL.index()] = true;
    let mut stack = vec![Config::INITIAL];
    while let Some(c) = stack.pop() {
        let masses = edge_masses(spec, c)?;
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > ROW_RESIDUAL_TOL {
            return Err(Error::Inadmissible(format!(
                "row {c} of the internal kernel sums to {total}"
            )));
        }
        for (s, m) in c.successors().into_iter().zip(masses) {
            if m > 0.0 {
                full[(c.index(), s.index())] = m / total;
                if !reach[s.index()] {
                    reach[s.index()] = true;
                    stack.push(s);
                }
            }
        }
    }
    let idx: Vec<usize> = (0..12).filter(|&i| reach[i]).collect();
    let states: Vec<Config> = idx.iter().map(|&i| all[i]).collect();
    let matrix = DMatrix::from_fn(idx.len(), idx.len(), |i, j| full[(idx[i], idx[j])]);
    let classes = communicating_classes(&matrix);
    if classes.len() > 1 {
        return Err(Error::Reducible(describe_classes(&states, &classes)));
    }
    let pi = stationary(&matrix)?;
    Ok(InternalKernel { states, matrix, pi })
}

fn describe_classes(states: &[Config], classes: &[Vec<usize>]) -> String {
    let parts: Vec<String> = classes
        .iter()
        .map(|c| {
            let names: Vec<String> = c.iter().map(|&i| states[i].to_string()).collect();
            format!("{{{}}}", names.join(", "))
        })
        .collect();
    format!("classes {}", parts.join(" "))
}

/// Unique invariant probability of an irreducible stochastic matrix.
pub fn stationary(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(Error::input(
            "stationary law needs a non-empty square matrix",
        ));
    }
    let classes = communicating_classes(m);
    if classes.len() > 1 {
        let labels: Vec<String> = classes.iter().map(|c| format!("{c:?}")).collect();
        return Err(Error::Reducible(format!("classes {}", labels.join(" "))));
    }
    // πP = π with Σπ = 1: solve (Pᵀ - I) πᵀ = 0 with the last equation
    // replaced by the normalization
    let mut a = m.transpose() - DMatrix::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = nalgebra::DVector::zeros(n);
    b[n - 1] = 1.0;
    let lu = a.clone().lu();
    let mut x = lu
        .solve(&b)
        .ok_or_else(|| Error::Range("singular stationary system".into()))?;
    for _ in 0..3 {
        let r = &b - &a * &x;
        if r.amax() <= 1e-16 {
            break;
        }
        if let Some(dx) = lu.solve(&r) {
            x += dx;
        }
    }
    let pi: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    let pi: Vec<f64> = pi.iter().map(|v| v / total).collect();
    let res = stationary_residual(m, &pi);
    if res > STATIONARY_TOL {
        return Err(Error::NoConvergence {
            iterations: 3,
            increment: res,
        });
    }
    Ok(pi)
}

/// `max_j |(πP)_j - π_j|`.
pub fn stationary_residual(m: &DMatrix<f64>, pi: &[f64]) -> f64 {
    let n = m.nrows();
    (0..n)
        .map(|j| {
            let v: f64 = (0..n).map(|i| pi[i] * m[(i, j)]).sum();
            (v - pi[j]).abs()
        })
        .fold(0.0, f64::max)
}

/// Waiting-time laws of the skeleton, one per edge of the kernel. The
/// jump along edge `(c, s)` is `T · dir(c.cur)` with `T ~ wait(c, s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalJumpLaws {
    pub states: Vec<Config>,
    pub waits: Vec<Vec<Option<LatticePmf>>>,
}

impl ConditionalJumpLaws {
    pub fn direction(&self, i: usize) -> (i64, i64) {
        self.states[i].cur().direction()
    }

    pub fn wait(&self, i: usize, j: usize) -> Option<&LatticePmf> {
        self.waits[i][j].as_ref()
    }

    /// Projection of `t` on the moving direction of state `i`: the jump
    /// characteristic function is `wait.char_fn(phase)`.
    pub fn phase(&self, i: usize, t: (f64, f64)) -> f64 {
        let (dx, dy) = self.direction(i);
        dx as f64 * t.0 + dy as f64 * t.1
    }

    /// Laws from an explicit table, for chains not built from a comb.
    pub fn from_waits(
        kernel: &InternalKernel,
        waits: Vec<Vec<Option<LatticePmf>>>,
    ) -> Result<Self> {
        let n = kernel.len();
        if waits.len() != n || waits.iter().any(|r| r.len() != n) {
            return Err(Error::input("waiting-law table does not match the kernel"));
        }
        for i in 0..n {
            for j in 0..n {
                if (kernel.matrix[(i, j)] > 0.0) != waits[i][j].is_some() {
                    return Err(Error::input(format!(
                        "waiting law presence differs from the kernel at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(ConditionalJumpLaws {
            states: kernel.states.clone(),
            waits,
        })
    }
}

/// `ν_{c,s}(n) ∝ ∏_{k<n}(1 - α_k) α_n p_n(s)`. A constant tail is followed
/// until the survival is negligible; what remains goes to the defect.
pub fn conditional_jump_laws(
    spec: &QuadCombSpec,
    kernel: &InternalKernel,
) -> Result<ConditionalJumpLaws> {
    let n = kernel.len();
    let mut waits = vec![vec![None; n]; n];
    for (i, &c) in kernel.states.iter().enumerate() {
        let law = spec
            .law(c)
            .ok_or_else(|| Error::Inadmissible(format!("configuration {c} has no law")))?;
        let rows = run_length_table(law, spec.tail(), SUPPORT_CAP)?;
        let leftover = rows.last().map_or(0.0, |r| r.survival_after);
        for (slot, s) in c.successors().into_iter().enumerate() {
            let Some(j) = kernel.index_of(s) else {
                continue;
            };
            let edge = kernel.matrix[(i, j)];
            if edge <= 0.0 {
                continue;
            }
            let masses: Vec<f64> = rows.iter().map(|r| r.mass * law.turn(r.n)[slot]).collect();
            let total: f64 = masses.iter().sum();
            let scaled: Vec<f64> = masses.iter().map(|m| m / total).collect();
            let defect = (leftover * law.turn(rows.len() as u64 + 1)[slot] / total).max(0.0);
            waits[i][j] = Some(LatticePmf::from_parts(1, scaled, defect, 0.0));
        }
    }
    Ok(ConditionalJumpLaws {
        states: kernel.states.clone(),
        waits,
    })
}

/// Breaking times, internal states and skeleton points of a trajectory
/// started from `(X_0, X_1) = (n, e)` at the origin.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Skeleton {
    pub breaks: Vec<u64>,
    pub states: Vec<Config>,
    pub points: Vec<(i64, i64)>,
}

impl Skeleton {
    pub fn len(&self) -> usize {
        self.breaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.breaks.is_empty()
    }

    /// True when the trajectory never changed direction, so only the
    /// initial point is present.
    pub fn has_no_break(&self) -> bool {
        self.breaks.len() <= 1
    }

    /// CSV with columns `n, B_n, C_n, x, y`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "B_n", "C_n", "x", "y"])
            .map_err(csv_err)?;
        for (n, ((b, c), z)) in self
            .breaks
            .iter()
            .zip(&self.states)
            .zip(&self.points)
            .enumerate()
        {
            w.write_record(&[
                n.to_string(),
                b.to_string(),
                c.to_string(),
                z.0.to_string(),
                z.1.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Waiting times `B_{n+1} - B_n`.
    pub fn waits(&self) -> Vec<u64> {
        self.breaks.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

pub fn extract_skeleton(traj: &Trajectory) -> Skeleton {
    let mut sk = SkeletonBuilder::new();
    for (l, p) in traj.letters.iter().zip(&traj.positions) {
        sk.push(*l, *p);
    }
    sk.finish()
}

/// Incremental skeleton extraction from a stream of steps.
#[derive(Clone, Debug)]
pub struct SkeletonBuilder {
    t: u64,
    last: Option<(Letter, (i64, i64))>,
    out: Skeleton,
}

impl Default for SkeletonBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl SkeletonBuilder {
    pub fn new() -> SkeletonBuilder {
        SkeletonBuilder {
            t: 0,
            last: None,
            out: Skeleton {
                breaks: vec![0],
                states: vec![Config::INITIAL],
                points: vec![(0, 0)],
            },
        }
    }

    /// Feeds step `X_{t+1}` and position `S_{t+1}`; returns the index of
    /// the skeleton point completed by this step, if any.
    pub fn push(&mut self, letter: Letter, pos: (i64, i64)) -> Option<usize> {
        let mut emitted = None;
        if let Some((prev, prev_pos)) = self.last {
            if prev != letter {
                self.out.breaks.push(self.t);
                self.out
                    .states
                    .push(Config::new(prev, letter).expect("letters differ"));
                self.out.points.push(prev_pos);
                emitted = Some(self.out.breaks.len() - 1);
            }
        }
        self.t += 1;
        self.last = Some((letter, pos));
        emitted
    }

    pub fn skeleton(&self) -> &Skeleton {
        &self.out
    }

    pub fn finish(self) -> Skeleton {
        self.out
    }
}

/// Counts of internal transitions `C_n → C_{n+1}` indexed like the kernel.
pub fn transition_counts(sk: &Skeleton, kernel: &InternalKernel) -> Result<DMatrix<f64>> {
    let n = kernel.len();
    let mut counts = DMatrix::zeros(n, n);
    for w in sk.states.windows(2) {
        let (Some(i), Some(j)) = (kernel.index_of(w[0]), kernel.index_of(w[1])) else {
            return Err(Error::input(format!(
                "transition {} → {} leaves the kernel's class",
                w[0], w[1]
            )));
        };
        counts[(i, j)] += 1.0;
    }
    Ok(counts)
}

/// Pearson test of transition counts against the kernel rows, pooled over
/// rows.
pub fn kernel_chi_square(counts: &DMatrix<f64>, kernel: &InternalKernel) -> ChiSquare {
    let mut stat = 0.0;
    let mut dof = 0usize;
    for i in 0..kernel.len() {
        let obs: Vec<f64> = counts.row(i).iter().copied().collect();
        let probs: Vec<f64> = kernel.matrix.row(i).iter().copied().collect();
        if obs.iter().sum::<f64>() == 0.0 {
            continue;
        }
        let (o, p) = pool_sparse_cells(&obs, &probs, 5.0);
        let r = chi_square_gof(&o, &p);
        stat += r.statistic;
        dof += r.dof;
    }
    ChiSquare::from_stat(stat, dof)
}

/// Symmetric horizontal and vertical stint laws of a DRRW: one stint is a
/// geometric number of runs along one axis with alternating signs.
pub fn drrw_margin_jumps(spec: &DrrwSpec, g_max: u64) -> Result<(LatticePmf, LatticePmf)> {
    let h = geometric_mixture(&spec.nu_h, spec.p_h, g_max)?;
    let v = geometric_mixture(&spec.nu_v, spec.p_v, g_max)?;
    Ok((h.law, v.law))
}

/// Displacements between consecutive horizontal-to-vertical change points
/// of a skeleton: `(horizontal stint, vertical stint)` pairs.
pub fn skeleton_margin_jumps(sk: &Skeleton) -> Vec<(i64, i64)> {
    let marks: Vec<(i64, i64)> = sk
        .states
        .iter()
        .zip(&sk.points)
        .filter(|(c, _)| c.prev().is_horizontal() && !c.cur().is_horizontal())
        .map(|(_, p)| *p)
        .collect();
    marks
        .windows(2)
        .map(|w| (w[1].0 - w[0].0, w[1].1 - w[0].1))
        .collect()
}

/// Histogram of the skeleton increments `Z_{n+1} - Z_n` grouped by the
/// state `C_n`, over skeleton indices in `range`.
pub fn increment_histograms(
    sk: &Skeleton,
    range: std::ops::Range<usize>,
) -> BTreeMap<Config, BTreeMap<(i64, i64), u64>> {
    let mut out: BTreeMap<Config, BTreeMap<(i64, i64), u64>> = BTreeMap::new();
    let end = range.end.min(sk.len().saturating_sub(1));
    for n in range.start..end {
        let d = (
            sk.points[n + 1].0 - sk.points[n].0,
            sk.points[n + 1].1 - sk.points[n].1,
        );
        *out.entry(sk.states[n]).or_default().entry(d).or_default() += 1;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RowFit {
    pub state: String,
    pub visits: u64,
    pub tv: f64,
}

/// Simulated skeleton against the exact internal kernel and, for a DRRW,
/// the exact stint laws.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SkeletonCheck {
    pub steps: usize,
    pub seed: u64,
    pub breaks: usize,
    pub rows: Vec<RowFit>,
    pub max_row_tv: f64,
    pub chi_square: f64,
    pub dof: usize,
    pub p_value: f64,
    /// `(horizontal, vertical)` stint TV distances.
    pub margin_tv: Option<(f64, f64)>,
    pub stints: usize,
}

fn law_tv(counts: &BTreeMap<i64, u64>, law: &LatticePmf) -> f64 {
    let keys: Vec<i64> = law
        .iter()
        .filter(|(_, m)| *m > 0.0)
        .map(|(x, _)| x)
        .collect();
    total_variation(counts, |x| law.mass(*x), &keys)
}

pub fn skeleton_check(
    spec: &QuadCombSpec,
    drrw: Option<&DrrwSpec>,
    steps: usize,
    seed: u64,
) -> Result<SkeletonCheck> {
    let kernel = build_kernel(spec)?;
    let sk = extract_skeleton(&simulate_prw(spec, steps, seed));
    let counts = transition_counts(&sk, &kernel)?;
    let mut rows = Vec::with_capacity(kernel.len());
    for (i, c) in kernel.states.iter().enumerate() {
        let total: f64 = counts.row(i).sum();
        let tv = if total == 0.0 {
            f64::NAN
        } else {
            0.5 * (0..kernel.len())
                .map(|j| (counts[(i, j)] / total - kernel.matrix[(i, j)]).abs())
                .sum::<f64>()
        };
        rows.push(RowFit {
            state: c.to_string(),
            visits: total as u64,
            tv,
        });
    }
    let max_row_tv = rows.iter().map(|r| r.tv).fold(0.0, f64::max);
    let chi = kernel_chi_square(&counts, &kernel);
    let pairs = skeleton_margin_jumps(&sk);
    let margin_tv = match drrw {
        Some(d) => {
            let (h, v) = drrw_margin_jumps(d, geometric_cutoff(d.p_h.max(d.p_v), 1e-13))?;
            let mut hc: BTreeMap<i64, u64> = BTreeMap::new();
            let mut vc: BTreeMap<i64, u64> = BTreeMap::new();
            for (dx, dy) in &pairs {
                *hc.entry(*dx).or_default() += 1;
                *vc.entry(*dy).or_default() += 1;
            }
            Some((law_tv(&hc, &h), law_tv(&vc, &v)))
        }
        None => None,
    };
    Ok(SkeletonCheck {
        steps,
        seed,
        breaks: sk.len(),
        rows,
        max_row_tv,
        chi_square: chi.statistic,
        dof: chi.dof,
        p_value: chi.p_value,
        margin_tv,
        stints: pairs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad_comb::{simulate_prw, ConfigLaw, TailRule};
    use approx::assert_abs_diff_eq;

    fn unit_drrw(p: f64) -> DrrwSpec {
        DrrwSpec::isotropic(LatticePmf::dirac(1), p).unwrap()
    }

    #[test]
    fn simulated_skeleton_matches_kernel() {
        let d = unit_drrw(1.0 / 3.0);
        let c = skeleton_check(&d.to_quadcomb().unwrap(), Some(&d), 200_000, 4).unwrap();
        assert_eq!(c.rows.len(), 12);
        assert!(c.max_row_tv < 0.02);
        let (h, v) = c.margin_tv.unwrap();
        assert!(h < 0.03 && v < 0.03);
    }

    #[test]
    fn original_drrw_kernel() {
        let k = build_kernel(&unit_drrw(1.0 / 3.0).to_quadcomb().unwrap()).unwrap();
        assert_eq!(k.len(), 12);
        for to in ["ew", "en", "es"] {
            assert_abs_diff_eq!(
                k.entry(Config::INITIAL, to.parse().unwrap()),
                1.0 / 3.0,
                epsilon = 1e-15
            );
        }
        for p in &k.pi {
            assert_abs_diff_eq!(*p, 1.0 / 12.0, epsilon = 1e-14);
        }
        assert!(stationary_residual(&k.matrix, &k.pi) < 1e-14);
    }

    #[test]
    fn non_backtracking_kernel() {
        let k = build_kernel(&unit_drrw(0.0).to_quadcomb().unwrap()).unwrap();
        assert_eq!(k.len(), 8);
        assert_abs_diff_eq!(k.entry(Config::INITIAL, "en".parse().unwrap()), 0.5);
        assert_abs_diff_eq!(k.entry(Config::INITIAL, "es".parse().unwrap()), 0.5);
        assert_eq!(k.entry(Config::INITIAL, "ew".parse().unwrap()), 0.0);
    }

    #[test]
    fn cycle_stationary_and_reducible_error() {
        let m = DMatrix::from_fn(4, 4, |i, j| if j == (i + 1) % 4 { 1.0 } else { 0.0 });
        let pi = stationary(&m).unwrap();
        assert!(pi.iter().all(|p| (p - 0.25).abs() < 1e-15));
        let red = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.5, 0.5, 0.0, 0.0, 0.0, 1.0]);
        let err = stationary(&red).unwrap_err();
        assert!(matches!(err, Error::Reducible(ref s) if s.contains("[0]") && s.contains("[2]")));
    }

    #[test]
    fn conditional_laws_mix_back_to_run_length() {
        let masses: Vec<f64> = (1..=40)
            .map(|n| 1.0 / (n as f64 * (n + 1) as f64))
            .collect();
        let tail = 1.0 - masses.iter().sum::<f64>();
        let mut masses = masses;
        masses.push(tail);
        let nu = LatticePmf::new(1, masses, 0.0).unwrap();
        let spec = DrrwSpec::new(nu.clone(), LatticePmf::uniform(1, 3).unwrap(), 0.2, 0.6).unwrap();
        let comb = spec.to_quadcomb().unwrap();
        let k = build_kernel(&comb).unwrap();
        let laws = conditional_jump_laws(&comb, &k).unwrap();
        for (i, &c) in k.states.iter().enumerate() {
            let run = comb.run_length_law(c).unwrap();
            let parts: Vec<(f64, &LatticePmf)> = (0..k.len())
                .filter_map(|j| laws.wait(i, j).map(|w| (k.matrix[(i, j)], w)))
                .collect();
            let mix = LatticePmf::mixture(&parts).unwrap();
            for n in 1..=41 {
                assert_abs_diff_eq!(mix.mass(n), run.mass(n), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn hand_built_trajectory() {
        use Letter::*;
        let traj = Trajectory::from_letters(vec![E, E, N, W, W, W, S, S, E, E]);
        let sk = extract_skeleton(&traj);
        assert_eq!(&sk.breaks[..3], &[0, 2, 3]);
        assert_eq!(
            sk.states[..3]
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>(),
            ["ne", "en", "nw"]
        );
        for (b, z) in sk.breaks.iter().zip(&sk.points).skip(1) {
            assert_eq!(*z, traj.positions[*b as usize - 1]);
        }
        assert!(sk.waits().iter().all(|&w| w >= 1));
        let straight = Trajectory::from_letters(vec![E; 5]);
        assert!(extract_skeleton(&straight).has_no_break());
    }

    #[test]
    fn unit_runs_break_every_step() {
        let comb = unit_drrw(1.0 / 3.0).to_quadcomb().unwrap();
        let sk = extract_skeleton(&simulate_prw(&comb, 200, 1));
        assert_eq!(sk.breaks, (0..200).collect::<Vec<u64>>());
    }

    #[test]
    fn empirical_transitions_follow_the_kernel() {
        let law =
            ConfigLaw::new(vec![0.3, 0.5, 0.2], vec![[0.2, 0.5, 0.3], [0.4, 0.4, 0.2]]).unwrap();
        let comb = QuadCombSpec::uniform(law, TailRule::Const).unwrap();
        let k = build_kernel(&comb).unwrap();
        let sk = extract_skeleton(&simulate_prw(&comb, 200_000, 42));
        let counts = transition_counts(&sk, &k).unwrap();
        let r = kernel_chi_square(&counts, &k);
        assert!(r.passes(0.001), "{r:?}");
    }

    #[test]
    fn margin_jump_examples() {
        let (h, v) = drrw_margin_jumps(&unit_drrw(0.0), 10).unwrap();
        assert_eq!((h.mass(-1), h.mass(0), h.mass(1)), (0.5, 0.0, 0.5));
        assert_eq!(h.total_mass(), 1.0);
        assert!(v.is_symmetric());
        let (h, _) = drrw_margin_jumps(&unit_drrw(1.0 / 3.0), 60).unwrap();
        assert_abs_diff_eq!(h.mass(0), 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(h.mass(1), 0.375, epsilon = 1e-12);
        assert_abs_diff_eq!(h.mass(-1), 0.375, epsilon = 1e-12);
    }
}
