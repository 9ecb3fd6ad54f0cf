//! Waiting-time laws made of uniform blocks on `±[y_k, y_k + l_k)` with
//! masses `p_k`, chosen so that the DRRW built on them is recurrent while
//! its skeleton is transient.
//!
//! Past the second block the numbers are towers of exponentials, so the
//! sequence is kept as log-space enclosures (see [`crate::logexpr`]) and
//! every constraint is re-proved on those enclosures.

use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{classify_drrw, ClassifyOptions, DrrwReport};
use crate::error::{Error, Result};
use crate::lattice_dist::{geometric_mixture, LatticePmf, SUPPORT_CAP};
use crate::logexpr::{LogExpr, SymbolRecord, Tower};
use crate::quad_comb::DrrwSpec;

/// Largest integer kept exactly.
const EXACT_INT: f64 = 9.007_199_254_740_992e15;

/// Log-space margin demanded of (i)–(iv) when choosing `l_k`, so that the
/// re-verification never faces an exact tie.
pub const DOUBLING_MARGIN: f64 = 1e-9;

/// `scale · k^exponent`
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerRule {
    pub scale: f64,
    pub exponent: f64,
}

impl PowerRule {
    pub fn value(&self, k: usize) -> f64 {
        self.scale * (k as f64).powf(self.exponent)
    }

    pub fn ln_value(&self, k: usize) -> f64 {
        self.scale.ln() + self.exponent * (k as f64).ln()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CexParams {
    pub r: f64,
    pub delta: f64,
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub v: PowerRule,
    pub u: PowerRule,
    pub y1: u64,
    pub l1: u64,
    pub p2: f64,
}

impl Default for CexParams {
    fn default() -> Self {
        CexParams {
            r: 0.5,
            delta: 0.5,
            c: 2.0,
            alpha: 1.0,
            beta: 1.0,
            v: PowerRule {
                scale: 1.0,
                exponent: 2.5,
            },
            u: PowerRule {
                scale: 1.0,
                exponent: 3.5,
            },
            y1: 1,
            l1: 1,
            p2: 0.2,
        }
    }
}

impl CexParams {
    pub fn validate(&self, k_max: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Inadmissible(m));
        if !(self.r > 0.0 && self.r < 1.0) {
            return bad(format!("r = {} outside (0, 1)", self.r));
        }
        for (name, x) in [
            ("delta", self.delta),
            ("c", self.c),
            ("alpha", self.alpha),
            ("beta", self.beta),
        ] {
            if !(x > 0.0 && x.is_finite()) {
                return bad(format!("{name} = {x} must be positive"));
            }
        }
        if self.y1 < 1 || self.l1 < 1 {
            return bad("y1 and l1 must be at least 1".into());
        }
        if !(self.p2 > 0.0 && self.p2 < 1.0 - self.r) {
            return bad(format!("p2 = {} outside (0, 1 - r)", self.p2));
        }
        if !(self.v.scale > 0.0 && self.u.scale > 0.0) {
            return bad("rules need positive scales".into());
        }
        if self.u.exponent <= self.v.exponent {
            return bad("u_k must outgrow v_k".into());
        }
        for k in 2..=k_max.max(2) {
            if self.v.ln_value(k) <= (2.0 + self.delta) * (k as f64).ln() - self.c.ln() {
                return bad(format!("1/v_k < c/k^(2+delta) fails at k = {k}"));
            }
        }
        Ok(())
    }

    /// Log of the midpoint of the interval allowed for `ln(1/p_{k+1})/(l_k p_k)^2`.
    fn ln_mid(&self, k: usize) -> f64 {
        let lo = (-self.v.ln_value(k)).exp();
        let hi = self.c * (k as f64).powf(-2.0 - self.delta);
        (0.5 * (lo + hi)).ln()
    }
}

/// One block: `y_k`, `l_k` and `A_k = ln(1/p_k)`. Integers are kept while
/// they fit.
#[derive(Clone, Debug, PartialEq)]
pub struct Level {
    pub k: usize,
    pub y: Option<u64>,
    pub l: Option<u64>,
    pub ln_y: LogExpr,
    pub ln_l: LogExpr,
    pub ln_inv_p: LogExpr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CexSequence {
    pub params: CexParams,
    pub tower: Tower,
    /// Blocks `1..=K`.
    pub levels: Vec<Level>,
    /// `ln(1/p_{K+1})`
    pub ln_inv_p_next: LogExpr,
}

fn ln_int(n: u64) -> LogExpr {
    let x = (n as f64).ln();
    LogExpr::interval(
        x - x.abs() * 4.0 * f64::EPSILON,
        x + x.abs() * 4.0 * f64::EPSILON,
    )
}

impl CexSequence {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn level(&self, k: usize) -> &Level {
        &self.levels[k - 1]
    }

    /// `ln(1/p_k)` for `k = 1..=K+1`.
    pub fn ln_inv_p(&self, k: usize) -> &LogExpr {
        if k == self.levels.len() + 1 {
            &self.ln_inv_p_next
        } else {
            &self.levels[k - 1].ln_inv_p
        }
    }

    /// `ln(y_k + l_k)`
    pub fn ln_end(&self, k: usize) -> Result<LogExpr> {
        let lv = self.level(k);
        match (lv.y, lv.l) {
            (Some(y), Some(l)) if ((y + l) as f64) < EXACT_INT => Ok(ln_int(y + l)),
            _ => self.tower.ln_add_exp(&lv.ln_y, &lv.ln_l),
        }
    }

    pub fn to_json(&self) -> String {
        let file = SequenceFile {
            params: self.params.clone(),
            symbols: self.tower.to_records(),
            levels: self
                .levels
                .iter()
                .map(|lv| LevelRecord {
                    k: lv.k,
                    y: lv.y,
                    l: lv.l,
                    ln_y: self.tower.format(&lv.ln_y),
                    ln_l: self.tower.format(&lv.ln_l),
                    ln_inv_p: self.tower.format(&lv.ln_inv_p),
                })
                .collect(),
            ln_inv_p_next: self.tower.format(&self.ln_inv_p_next),
        };
        serde_json::to_string_pretty(&file).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<CexSequence> {
        let file: SequenceFile =
            serde_json::from_str(text).map_err(|e| Error::input(format!("sequence json: {e}")))?;
        let tower = Tower::from_records(&file.symbols)?;
        let levels = file
            .levels
            .iter()
            .map(|r| {
                Ok(Level {
                    k: r.k,
                    y: r.y,
                    l: r.l,
                    ln_y: tower.parse(&r.ln_y)?,
                    ln_l: tower.parse(&r.ln_l)?,
                    ln_inv_p: tower.parse(&r.ln_inv_p)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if levels.iter().enumerate().any(|(i, lv)| lv.k != i + 1) {
            return Err(Error::input("levels must be numbered 1, 2, …"));
        }
        let ln_inv_p_next = tower.parse(&file.ln_inv_p_next)?;
        Ok(CexSequence {
            params: file.params,
            tower,
            levels,
            ln_inv_p_next,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct LevelRecord {
    k: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    y: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    l: Option<u64>,
    ln_y: String,
    ln_l: String,
    ln_inv_p: String,
}

#[derive(Serialize, Deserialize)]
struct SequenceFile {
    params: CexParams,
    symbols: Vec<SymbolRecord>,
    levels: Vec<LevelRecord>,
    ln_inv_p_next: String,
}

fn infeasible(k: usize, constraint: &str) -> Error {
    Error::Infeasible {
        k,
        constraint: constraint.to_string(),
    }
}

/// Smallest `x = ln(l_k/y_k)` meeting constraints (i) to (iv) and `l_k ≥ 2`.
fn doubling_threshold(
    tower: &Tower,
    params: &CexParams,
    k: usize,
    a: &LogExpr,
    ln_y: &LogExpr,
    ln_prev_sum: &LogExpr,
) -> Result<LogExpr> {
    let mut req = vec![LogExpr::constant(0.0), ln_y.scale(-1.0).plus(LN_2)];
    // (i): 2x ≥ ln v + ln(A + ln 1/r) + 2A - 2Y
    let ln_a_r = tower
        .ln(&a.plus(-params.r.ln()))
        .map_err(|_| infeasible(k, "i"))?;
    req.push(
        ln_a_r
            .plus(params.v.ln_value(k))
            .scale(0.5)
            .add(a)
            .sub(ln_y),
    );
    // (ii) and (iv): ln(1 + e^x) ≥ w
    let w2 = ln_prev_sum
        .add(a)
        .plus(-params.alpha.ln())
        .scale(0.5)
        .sub(ln_y);
    let w4 = a.plus(-params.beta.ln()).scale(0.5);
    for (name, w) in [("ii", w2), ("iv", w4)] {
        match tower.sign(&w) {
            Some(std::cmp::Ordering::Greater) => req.push(tower.ln_expm1(&w)?),
            Some(_) => {}
            None => return Err(infeasible(k, name)),
        }
    }
    // (iii): x - ln(1 + e^x) ≥ z with z < 0
    let z = LogExpr::constant(params.u.ln_value(k))
        .sub(ln_y)
        .scale(0.5)
        .add(a);
    if tower.sign(&z) != Some(std::cmp::Ordering::Less) {
        return Err(infeasible(k, "iii"));
    }
    req.push(tower.ln_expm1(&z.scale(-1.0))?.scale(-1.0));
    let req: Vec<LogExpr> = req.iter().map(|t| t.plus(DOUBLING_MARGIN)).collect();
    req.iter()
        .skip(1)
        .try_fold(req[0].clone(), |m, t| tower.max(&m, t))
}

/// Builds blocks `1..=K`: `y_k` from the spacing and (iii), `l_k = y_k 2^d`
/// with the least `d` meeting (i)–(iv), and `ln(1/p_{k+1})` at the midpoint
/// of the window given by (v).
pub fn build_sequence(params: &CexParams, k_max: usize) -> Result<CexSequence> {
    if k_max == 0 {
        return Err(Error::input("K must be at least 1"));
    }
    params.validate(k_max)?;
    let mut tower = Tower::new();
    let mut levels = vec![Level {
        k: 1,
        y: Some(params.y1),
        l: Some(params.l1),
        ln_y: ln_int(params.y1),
        ln_l: ln_int(params.l1),
        ln_inv_p: LogExpr::constant(0.0),
    }];
    // p_1 ≤ 1 - p_2 bounds the first term of (ii) from above
    let a1_low = -(1.0 - params.p2).ln();
    let mut a = LogExpr::constant(-params.p2.ln());
    let mut p_f64 = Some(params.p2);
    for k in 2..=k_max {
        let prev = &levels[k - 2];
        let (prev_int, ln_prev_end) = match (prev.y, prev.l) {
            (Some(y), Some(l)) if ((y + l) as f64) < EXACT_INT => (Some(y + l), ln_int(y + l)),
            _ => (None, tower.ln_add_exp(&prev.ln_y, &prev.ln_l)?),
        };
        let mut sums = Vec::with_capacity(k - 1);
        for (i, lv) in levels.iter().enumerate() {
            let end = tower.ln_add_exp(&lv.ln_y, &lv.ln_l)?;
            let ai = if i == 0 {
                LogExpr::constant(a1_low)
            } else {
                lv.ln_inv_p.clone()
            };
            sums.push(end.scale(2.0).sub(&ai));
        }
        let ln_prev_sum = tower.ln_sum_exp(&sums)?;

        // y_k ≥ ⌈2u_k / p_k²⌉ makes (iii) reachable with l_k ≫ y_k
        let ln_target = a.scale(2.0).plus((2.0 * params.u.value(k)).ln());
        let (y, ln_y) = match (p_f64, prev_int, tower.value(&ln_target)) {
            (Some(p), Some(end), Some((_, hi))) if hi < EXACT_INT.ln() - 1.0 => {
                let raw = 2.0 * params.u.value(k) / (p * p);
                if (raw - raw.round()).abs() < 1e-9 * raw {
                    return Err(Error::Range(format!(
                        "ceil of {raw} is not robust at k = {k}"
                    )));
                }
                let y = end.max(raw.ceil() as u64);
                (Some(y), ln_int(y))
            }
            _ => {
                let slack = tower.exp_neg_upper(&ln_target)?;
                let ceiled = ln_target.plus_interval(0.0, slack);
                (None, tower.max(&ln_prev_end, &ceiled)?)
            }
        };

        let x_req = doubling_threshold(&tower, params, k, &a, &ln_y, &ln_prev_sum)?;
        let (l, ln_l) = match tower.value(&x_req) {
            Some((_, hi)) => {
                let d = (hi / LN_2).ceil().max(0.0);
                let exact = y.and_then(|y| {
                    let l = y as f64 * d.exp2();
                    (l < EXACT_INT).then(|| y << d as u32)
                });
                match exact {
                    Some(l) => (Some(l), ln_int(l)),
                    None => (None, ln_y.plus(d * LN_2)),
                }
            }
            None => {
                // d = ⌈x_hi / ln 2⌉ for the upper end x_hi of the threshold
                // enclosure; only the window d ln 2 - x_hi ∈ [0, ln 2) is known
                let slack = tower.bounded(format!("d{k}"), 0.0, LN_2);
                (None, ln_y.add(&x_req.pinned_high()).add(&slack))
            }
        };

        let ln_a_next = ln_l.sub(&a).scale(2.0).plus(params.ln_mid(k));
        let a_next = tower.exp(&ln_a_next, format!("A{}", k + 1))?;
        p_f64 = tower
            .value(&a_next)
            .map(|(lo, hi)| (-(0.5 * (lo + hi))).exp())
            .filter(|p| *p > 0.0);
        levels.push(Level {
            k,
            y,
            l,
            ln_y,
            ln_l,
            ln_inv_p: a,
        });
        a = a_next;
    }
    // p_1 = 1 - Σ_{k≥2} p_k with Σ_{k≥3} p_k ≤ p_3/(1 - r)
    let a3 = if k_max >= 3 {
        levels[2].ln_inv_p.clone()
    } else {
        a.clone()
    };
    let p3 = if k_max >= 2 {
        tower.exp_neg_upper(&a3)?
    } else {
        params.r * params.p2
    };
    let tail = (p3 / (1.0 - params.r)).max(f64::MIN_POSITIVE);
    let hi = 1.0 - params.p2;
    levels[0].ln_inv_p = LogExpr::interval(
        -hi.ln() * (1.0 - 1e-15),
        -(hi - tail).ln() * (1.0 + 1e-15) + 1e-300,
    );
    Ok(CexSequence {
        params: params.clone(),
        tower,
        levels,
        ln_inv_p_next: a,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstraintRow {
    pub k: usize,
    pub constraint: &'static str,
    pub holds: bool,
    /// `rhs - lhs` in log space (or the natural slack of the inequality).
    pub margin: String,
    pub margin_value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub rows: Vec<ConstraintRow>,
    pub all_hold: bool,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &ConstraintRow> {
        self.rows.iter().filter(|r| !r.holds)
    }
}

/// Re-evaluates every inequality in its original form from the stored
/// enclosures.
pub fn verify_constraints(seq: &CexSequence) -> Result<VerifyReport> {
    let t = &seq.tower;
    let p = &seq.params;
    let k_max = seq.len();
    let mut rows = Vec::new();
    let row = |k: usize, constraint: &'static str, lhs: &LogExpr, rhs: &LogExpr| {
        let margin = rhs.sub(lhs);
        ConstraintRow {
            k,
            constraint,
            holds: t.proves_ge(rhs, lhs),
            margin: t.format(&margin),
            margin_value: t.value(&margin).map(|(a, b)| 0.5 * (a + b)),
        }
    };
    let ends = (1..=k_max)
        .map(|k| seq.ln_end(k))
        .collect::<Result<Vec<_>>>()?;
    for k in 2..=k_max {
        let lv = seq.level(k);
        let a = seq.ln_inv_p(k);
        let a_next = seq.ln_inv_p(k + 1);
        let s = &ends[k - 1];
        let kf = k as f64;

        let lhs = t.ln(&a.plus(-p.r.ln()))?.sub(&lv.ln_l.sub(a).scale(2.0));
        rows.push(row(k, "i", &lhs, &LogExpr::constant(-p.v.ln_value(k))));

        let terms: Vec<LogExpr> = (1..k)
            .map(|i| ends[i - 1].scale(2.0).sub(seq.ln_inv_p(i)))
            .collect();
        let lhs = t.ln_sum_exp(&terms)?;
        rows.push(row(k, "ii", &lhs, &s.scale(2.0).sub(a).plus(p.alpha.ln())));

        let lhs = lv.ln_l.sub(a).scale(2.0).add(&lv.ln_y).sub(&s.scale(2.0));
        rows.push(row(k, "iii", &LogExpr::constant(p.u.ln_value(k)), &lhs));

        let lhs = lv.ln_y.scale(2.0).add(a).sub(&s.scale(2.0));
        rows.push(row(k, "iv", &lhs, &LogExpr::constant(p.beta.ln())));

        let mid = t.ln(a_next)?.sub(&lv.ln_l.sub(a).scale(2.0));
        rows.push(row(
            k,
            "v_lower",
            &LogExpr::constant(-p.v.ln_value(k)),
            &mid,
        ));
        rows.push(row(
            k,
            "v_upper",
            &mid,
            &LogExpr::constant(p.c.ln() - (2.0 + p.delta) * kf.ln()),
        ));

        rows.push(row(k, "ratio", &a.plus(-p.r.ln()), a_next));
        rows.push(row(k, "l_ge_2", &LogExpr::constant(LN_2), &lv.ln_l));
        if k < k_max {
            rows.push(row(k, "spacing", s, &seq.level(k + 1).ln_y));
        }
        if let (Some(y), Some(l), Some(y_next)) = (lv.y, lv.l, seq.levels.get(k).and_then(|n| n.y))
        {
            rows.push(ConstraintRow {
                k,
                constraint: "spacing_exact",
                holds: y_next >= y + l,
                margin: (y_next as i128 - (y + l) as i128).to_string(),
                margin_value: Some(y_next as f64 - (y + l) as f64),
            });
        }
    }
    let all_hold = rows.iter().all(|r| r.holds);
    Ok(VerifyReport { rows, all_hold })
}

/// Block description of `μ_k`: each `±[y_i, y_i + l_i)` carries mass `p_i`
/// spread uniformly, the cemetery carries `q_k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntervalPmf {
    pub k: usize,
    pub blocks: Vec<Block>,
    /// Enclosure of `q_k = Σ_{i>k} p_i`.
    pub q: (f64, f64),
    pub ln_q: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Block {
    pub i: usize,
    pub y: Option<u64>,
    pub l: Option<u64>,
    pub ln_y: String,
    pub ln_l: String,
    pub ln_p: String,
    pub p: (f64, f64),
}

impl IntervalPmf {
    /// Enclosure of `Σ p_i + q_k`.
    pub fn total_mass(&self) -> (f64, f64) {
        let lo = self.blocks.iter().map(|b| b.p.0).sum::<f64>() + self.q.0;
        let hi = self.blocks.iter().map(|b| b.p.1).sum::<f64>() + self.q.1;
        (lo * (1.0 - 1e-14), hi * (1.0 + 1e-14))
    }

    /// Dense symmetric law with the cemetery as defect.
    pub fn dense(&self, cap: usize) -> Result<LatticePmf> {
        let reach = self.reach(cap)?;
        let mut masses = vec![0.0; 2 * reach + 1];
        for b in &self.blocks {
            let (y, l) = (
                b.y.expect("checked") as usize,
                b.l.expect("checked") as usize,
            );
            let each = 0.5 * (b.p.0 + b.p.1) / (2 * l) as f64;
            for x in y..y + l {
                masses[reach + x] += each;
                masses[reach - x] += each;
            }
        }
        let defect = 0.5 * (self.q.0 + self.q.1);
        let total: f64 = masses.iter().sum::<f64>() + defect;
        LatticePmf::new(
            -(reach as i64),
            masses,
            (defect + 1.0 - total).clamp(0.0, 1.0),
        )
    }

    fn reach(&self, cap: usize) -> Result<usize> {
        let mut reach = 0usize;
        for b in &self.blocks {
            match (b.y, b.l) {
                (Some(y), Some(l)) => reach = reach.max((y + l - 1) as usize),
                _ => {
                    return Err(Error::SupportCap {
                        needed: usize::MAX,
                        cap,
                    })
                }
            }
        }
        if 2 * reach + 1 > cap {
            return Err(Error::SupportCap {
                needed: 2 * reach + 1,
                cap,
            });
        }
        Ok(reach)
    }
}

fn prob_enclosure(t: &Tower, ln_inv_p: &LogExpr) -> (f64, f64) {
    match t.value(ln_inv_p) {
        Some((lo, hi)) => ((-hi).exp() * (1.0 - 1e-15), (-lo).exp() * (1.0 + 1e-15)),
        None => (0.0, t.exp_neg_upper(ln_inv_p).unwrap_or(1.0)),
    }
}

pub fn mu_k(seq: &CexSequence, k: usize) -> Result<IntervalPmf> {
    if k == 0 || k > seq.len() {
        return Err(Error::input(format!("k = {k} outside 1..={}", seq.len())));
    }
    let t = &seq.tower;
    let blocks = (1..=k)
        .map(|i| {
            let lv = seq.level(i);
            Block {
                i,
                y: lv.y,
                l: lv.l,
                ln_y: t.format(&lv.ln_y),
                ln_l: t.format(&lv.ln_l),
                ln_p: t.format(&lv.ln_inv_p.scale(-1.0)),
                p: prob_enclosure(t, &lv.ln_inv_p),
            }
        })
        .collect();
    let next = seq.ln_inv_p(k + 1);
    let (p_lo, p_hi) = prob_enclosure(t, next);
    let r = seq.params.r;
    Ok(IntervalPmf {
        k,
        blocks,
        q: (p_lo, p_hi / (1.0 - r)),
        ln_q: t.format(&next.scale(-1.0).plus_interval(0.0, -(1.0 - r).ln())),
    })
}

/// Positive part of `μ_K` without its cemetery, normalized, as a dense law
/// on `{1, 2, …}`.
pub fn waiting_distribution(seq: &CexSequence, k: usize, cap: usize) -> Result<LatticePmf> {
    let mu = mu_k(seq, k)?;
    let reach = mu.reach(cap)?;
    let total: f64 = mu.blocks.iter().map(|b| 0.5 * (b.p.0 + b.p.1)).sum();
    let mut masses = vec![0.0; reach];
    for b in &mu.blocks {
        let (y, l) = (
            b.y.expect("checked") as usize,
            b.l.expect("checked") as usize,
        );
        let each = 0.5 * (b.p.0 + b.p.1) / total / l as f64;
        for x in y..y + l {
            masses[x - 1] += each;
        }
    }
    let sum: f64 = masses.iter().sum();
    masses.iter_mut().for_each(|m| *m /= sum);
    LatticePmf::new(1, masses, 0.0)
}

/// Riemann zeta for real `s > 1` by Euler–Maclaurin with ten explicit
/// terms.
pub fn zeta(s: f64) -> f64 {
    const N: usize = 10;
    let n = N as f64;
    let head: f64 = (1..N).map(|k| (k as f64).powf(-s)).sum();
    let b = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0];
    let mut tail = n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    // B_{2j}/(2j)! · s(s+1)…(s+2j-2) · N^{-s-2j+1}
    let mut rising = s;
    let mut fact = 2.0;
    for (j, bj) in b.iter().enumerate() {
        let m = 2 * (j + 1);
        tail += bj / fact * rising * n.powf(-s - m as f64 + 1.0);
        rising *= (s + m as f64 - 1.0) * (s + m as f64);
        fact *= ((m + 1) * (m + 2)) as f64;
    }
    head + tail
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesTerm {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
    pub bound: f64,
    pub within: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UpperSeries {
    pub terms: Vec<SeriesTerm>,
    /// Upper enclosures of the partial sums.
    pub partial_sums: Vec<f64>,
    /// `√c ζ(1 + δ/2)`
    pub limit: f64,
    pub bounded: bool,
}

/// `Σ_i (1/(l_i p_i)) √ln(1/p_{i+1})` for `i = 1..=K`, each term compared
/// with `√c i^{-1-δ/2}`.
pub fn bound_upper_series(seq: &CexSequence, k_max: usize) -> Result<UpperSeries> {
    let t = &seq.tower;
    let p = &seq.params;
    let k_max = k_max.min(seq.len());
    let mut terms = Vec::new();
    let mut partial_sums = Vec::new();
    let mut acc = 0.0;
    for i in 1..=k_max {
        let lv = seq.level(i);
        let ln_term = t
            .ln(seq.ln_inv_p(i + 1))?
            .scale(0.5)
            .add(&lv.ln_inv_p)
            .sub(&lv.ln_l);
        let (lo, hi) = t
            .value(&ln_term)
            .ok_or_else(|| Error::Range(format!("upper term {i} does not reduce to a number")))?;
        let bound = p.c.sqrt() * (i as f64).powf(-1.0 - 0.5 * p.delta);
        acc += hi.exp();
        partial_sums.push(acc);
        terms.push(SeriesTerm {
            index: i,
            lo: lo.exp(),
            hi: hi.exp(),
            bound,
            within: hi.exp() <= bound,
        });
    }
    let limit = p.c.sqrt() * zeta(1.0 + 0.5 * p.delta);
    Ok(UpperSeries {
        bounded: partial_sums.iter().all(|s| *s <= limit),
        terms,
        partial_sums,
        limit,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerTerms {
    /// Bound column holds `u_k/v_k`.
    pub terms: Vec<SeriesTerm>,
    /// Lower enclosures of the cumulative sums.
    pub cumulative: Vec<f64>,
}

/// `(y_k/(y_k + l_k)^2) ln(1/p_{k+1})` for `k = 2..=K`, each compared with
/// `u_k/v_k`.
pub fn bound_lower_terms(seq: &CexSequence, k_max: usize) -> Result<LowerTerms> {
    let t = &seq.tower;
    let p = &seq.params;
    let mut terms = Vec::new();
    let mut cumulative = Vec::new();
    let mut acc = 0.0;
    for k in 2..=k_max.min(seq.len()) {
        let lv = seq.level(k);
        let ln_term = lv
            .ln_y
            .sub(&seq.ln_end(k)?.scale(2.0))
            .add(&t.ln(seq.ln_inv_p(k + 1))?);
        let (lo, hi) = t
            .value(&ln_term)
            .ok_or_else(|| Error::Range(format!("lower term {k} does not reduce to a number")))?;
        let bound = (p.u.ln_value(k) - p.v.ln_value(k)).exp();
        acc += lo.exp();
        cumulative.push(acc);
        terms.push(SeriesTerm {
            index: k,
            lo: lo.exp(),
            hi: hi.exp(),
            bound,
            within: lo.exp() >= bound,
        });
    }
    Ok(LowerTerms { terms, cumulative })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UnifCheck {
    pub l: usize,
    pub m: usize,
    pub max_mass: f64,
    pub bound: f64,
    pub holds: bool,
    /// Maximum mass equals the bound to rounding.
    pub equality: bool,
}

/// `sup_x P(Y_1 + … + Y_m = x) ≤ (1/l) √(2/m)` for `Y_j` uniform on `l`
/// consecutive integers, by exact convolution.
pub fn unif_concentration_check(l: usize, m: usize) -> Result<UnifCheck> {
    if l < 2 || m < 1 {
        return Err(Error::input("need l ≥ 2 and m ≥ 1"));
    }
    let law = LatticePmf::uniform(0, l as i64 - 1)?.n_fold(m as u64)?;
    let max_mass = law.iter().map(|(_, w)| w).fold(0.0, f64::max);
    let bound = (2.0 / m as f64).sqrt() / l as f64;
    Ok(UnifCheck {
        l,
        m,
        max_mass,
        bound,
        holds: max_mass <= bound * (1.0 + 1e-12),
        equality: (max_mass - bound).abs() <= 1e-15,
    })
}

/// `ω(p) = min_{u∈(0,1)} √(2/u) + (1/√(2ep))/(1 - u)` by golden-section
/// search; the objective is convex in `u`.
pub fn omega(p: f64) -> f64 {
    let k = (1.0 / (2.0 * std::f64::consts::E * p)).sqrt();
    let f = |u: f64| (2.0 / u).sqrt() + k / (1.0 - u);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (1e-15, 1.0 - 1e-15);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BinomCheck {
    pub n: u64,
    pub p: f64,
    /// `E[1{Z ≥ 1}/√Z]` for `Z ~ Bin(n, p)`
    pub lhs: f64,
    pub omega: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn binom_inverse_sqrt_check(n: u64, p: f64) -> Result<BinomCheck> {
    if n == 0 || !(p > 0.0 && p < 1.0) {
        return Err(Error::input("need n ≥ 1 and p in (0, 1)"));
    }
    use statrs::function::gamma::ln_gamma;
    let nf = n as f64;
    let lnc = ln_gamma(nf + 1.0);
    let lhs: f64 = (1..=n)
        .map(|z| {
            let zf = z as f64;
            let ln_pmf = lnc - ln_gamma(zf + 1.0) - ln_gamma(nf - zf + 1.0)
                + zf * p.ln()
                + (nf - zf) * (-p).ln_1p();
            ln_pmf.exp() / zf.sqrt()
        })
        .sum();
    let omega = omega(p);
    let rhs = omega / (2.0 * nf * p).sqrt();
    Ok(BinomCheck {
        n,
        p,
        lhs,
        omega,
        rhs,
        holds: lhs <= rhs * (1.0 + 1e-12),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sweep<T> {
    pub cases: Vec<T>,
    pub violations: usize,
}

pub fn unif_sweep(ls: &[usize], ms: &[usize]) -> Result<Sweep<UnifCheck>> {
    let pairs: Vec<(usize, usize)> = ls
        .iter()
        .flat_map(|&l| ms.iter().map(move |&m| (l, m)))
        .collect();
    let cases = pairs
        .par_iter()
        .map(|&(l, m)| unif_concentration_check(l, m))
        .collect::<Result<Vec<_>>>()?;
    let violations = cases.iter().filter(|c| !c.holds).count();
    Ok(Sweep { cases, violations })
}

pub fn binom_sweep(ns: &[u64], ps: &[f64]) -> Result<Sweep<BinomCheck>> {
    let pairs: Vec<(u64, f64)> = ns
        .iter()
        .flat_map(|&n| ps.iter().map(move |&p| (n, p)))
        .collect();
    let cases = pairs
        .par_iter()
        .map(|&(n, p)| binom_inverse_sqrt_check(n, p))
        .collect::<Result<Vec<_>>>()?;
    let violations = cases.iter().filter(|c| !c.holds).count();
    Ok(Sweep { cases, violations })
}

/// Symmetric stint law of the DRRW built on `nu` with reversal probability
/// ⅓: `ε Σ_{k≤G} (-1)^{k-1} τ_k`, `G` geometric with success ⅔.
pub fn step3_jump_law(nu: &LatticePmf, g_max: u64) -> Result<LatticePmf> {
    Ok(geometric_mixture(nu, 1.0 / 3.0, g_max)?.law)
}

/// Dense small-magnitude analogue of the block construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyParams {
    pub y: Vec<u64>,
    pub l: Vec<u64>,
    pub p: Vec<f64>,
}

impl Default for ToyParams {
    fn default() -> Self {
        ToyParams {
            y: vec![1, 3, 11],
            l: vec![2, 8, 32],
            p: vec![0.88, 0.1, 0.015],
        }
    }
}

impl ToyParams {
    fn validate(&self) -> Result<()> {
        let k = self.y.len();
        if k == 0 || self.l.len() != k || self.p.len() != k {
            return Err(Error::input("toy y, l, p must have equal positive length"));
        }
        for i in 0..k {
            if self.y[i] < 1 || self.l[i] < 1 || !(self.p[i] > 0.0) {
                return Err(Error::input(format!("toy block {} is degenerate", i + 1)));
            }
            if i > 0 && self.y[i] < self.y[i - 1] + self.l[i - 1] {
                return Err(Error::input(format!(
                    "toy blocks {} and {} overlap",
                    i,
                    i + 1
                )));
            }
        }
        if self.p.iter().sum::<f64>() > 1.0 + 1e-12 {
            return Err(Error::input("toy masses exceed one"));
        }
        Ok(())
    }

    fn q(&self, k: usize) -> f64 {
        (1.0 - self.p[..k].iter().sum::<f64>()).max(0.0)
    }

    /// `μ_k` as a dense defective law.
    pub fn mu(&self, k: usize) -> Result<LatticePmf> {
        let reach = (self.y[k - 1] + self.l[k - 1] - 1) as usize;
        let mut masses = vec![0.0; 2 * reach + 1];
        for i in 0..k {
            let each = self.p[i] / (2 * self.l[i]) as f64;
            for x in self.y[i]..self.y[i] + self.l[i] {
                masses[reach + x as usize] += each;
                masses[reach - x as usize] += each;
            }
        }
        LatticePmf::new(-(reach as i64), masses, self.q(k))
    }

    /// Normalized positive part of `μ_K`.
    pub fn waiting_law(&self) -> Result<LatticePmf> {
        let k = self.y.len();
        let mut pts = Vec::new();
        let total: f64 = self.p.iter().sum();
        for i in 0..k {
            for x in self.y[i]..self.y[i] + self.l[i] {
                pts.push((x as i64, self.p[i] / total / self.l[i] as f64));
            }
        }
        LatticePmf::from_points(&pts, 0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecursionLevel {
    pub k: usize,
    /// `P(W_n^k = 0)` for `n = 0..=N`.
    pub return_probs: Vec<f64>,
    /// Largest `n` violating the simplified recursion bound, if any.
    pub violations: Vec<usize>,
    /// Same for the bound with `ω`.
    pub omega_violations: Vec<usize>,
    /// `max_n (P_k - P_{k-1}) / bound` over `n ≥ 1`.
    pub worst_ratio: f64,
    /// `max_n |defect(W_n^k) - (1 - (1 - q_k)^n)|`.
    pub defect_error: f64,
    /// `Σ_{1≤n≤N} P(W_n^k = 0)^2`
    pub square_sum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ToyReport {
    pub params: ToyParams,
    pub n: usize,
    pub levels: Vec<RecursionLevel>,
    pub holds: bool,
    pub criterion: Option<DrrwReport>,
}

/// Exact recursion check `P(W_n^k = 0) ≤ P(W_n^{k-1} = 0) + (1-q_k)^n/(l_k p_k √n)`
/// for the defective walks of the toy blocks, and the series criterion for
/// the DRRW with the toy waiting law when `classify_n > 0`.
pub fn toy_scale_validation(toy: &ToyParams, n: usize, classify_n: usize) -> Result<ToyReport> {
    toy.validate()?;
    let mut prev: Vec<f64> = (0..=n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
    let mut levels = Vec::new();
    for k in 1..=toy.y.len() {
        let mu = toy.mu(k)?;
        let q = toy.q(k);
        if (2 * (toy.y[k - 1] + toy.l[k - 1]) as usize).saturating_mul(n) > SUPPORT_CAP {
            return Err(Error::SupportCap {
                needed: 2 * (toy.y[k - 1] + toy.l[k - 1]) as usize * n,
                cap: SUPPORT_CAP,
            });
        }
        let mut walk = LatticePmf::dirac(0);
        let mut probs = vec![1.0];
        let mut defect_error: f64 = 0.0;
        for i in 1..=n {
            walk = walk.convolve(&mu)?;
            probs.push(walk.mass(0));
            defect_error =
                defect_error.max((walk.defect() - (1.0 - (1.0 - q).powi(i as i32))).abs());
        }
        let (pk, lk) = (toy.p[k - 1], toy.l[k - 1] as f64);
        let p_cond = pk / (1.0 - q);
        let w = omega(p_cond.min(1.0 - 1e-12));
        let mut violations = Vec::new();
        let mut omega_violations = Vec::new();
        let mut worst_ratio: f64 = 0.0;
        for i in 1..=n {
            let s = (1.0 - q).powi(i as i32);
            let bound = s / (lk * pk * (i as f64).sqrt());
            let bound_omega = s * w / (lk * (i as f64 * p_cond).sqrt());
            let extra = probs[i] - prev[i];
            if extra > bound * (1.0 + 1e-12) + 1e-15 {
                violations.push(i);
            }
            if extra > bound_omega * (1.0 + 1e-12) + 1e-15 {
                omega_violations.push(i);
            }
            worst_ratio = worst_ratio.max(extra / bound);
        }
        levels.push(RecursionLevel {
            k,
            square_sum: probs[1..].iter().map(|x| x * x).sum(),
            return_probs: probs.clone(),
            violations,
            omega_violations,
            worst_ratio,
            defect_error,
        });
        prev = probs;
    }
    let holds = levels
        .iter()
        .all(|l| l.violations.is_empty() && l.defect_error < 1e-12);
    let criterion = if classify_n > 0 {
        let spec = DrrwSpec::isotropic(toy.waiting_law()?, 1.0 / 3.0)?;
        Some(classify_drrw(
            &spec,
            classify_n,
            &ClassifyOptions::default(),
        )?)
    } else {
        None
    };
    Ok(ToyReport {
        params: toy.clone(),
        n,
        levels,
        holds,
        criterion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn first_blocks_are_exact_integers() {
        let seq = build_sequence(&CexParams::default(), 3).unwrap();
        assert_eq!(seq.level(2).y, Some(566));
        assert_eq!(seq.level(2).l, Some(2264));
        let (lo, hi) = seq.tower.value(seq.ln_inv_p(3)).unwrap();
        assert!(lo > 54_000.0 && hi < 55_000.0);
        assert!(seq.tower.value(seq.ln_inv_p(4)).is_none());
    }

    #[test]
    fn p2_window() {
        let mut p = CexParams::default();
        p.p2 = 0.49;
        assert!(build_sequence(&p, 2).is_ok());
        p.p2 = 0.5;
        assert!(build_sequence(&p, 2).is_err());
    }

    #[test]
    fn twelve_levels_verify() {
        let seq = build_sequence(&CexParams::default(), 12).unwrap();
        let rep = verify_constraints(&seq).unwrap();
        let bad: Vec<_> = rep.failures().collect();
        assert!(rep.all_hold, "{bad:?}");
        let up = bound_upper_series(&seq, 12).unwrap();
        assert!(up.bounded);
        assert!(up.terms[1..].iter().all(|t| t.within));
        let low = bound_lower_terms(&seq, 12).unwrap();
        assert!(low.terms.iter().all(|t| t.within));
        assert!(*low.cumulative.last().unwrap() > 50.0);
    }

    #[test]
    fn json_roundtrip_keeps_verification() {
        let seq = build_sequence(&CexParams::default(), 6).unwrap();
        let back = CexSequence::from_json(&seq.to_json()).unwrap();
        assert_eq!(back, seq);
        assert!(verify_constraints(&back).unwrap().all_hold);
    }

    #[test]
    fn block_law_masses() {
        let seq = build_sequence(&CexParams::default(), 4).unwrap();
        for k in 1..=4 {
            let mu = mu_k(&seq, k).unwrap();
            let (lo, hi) = mu.total_mass();
            assert!(lo <= 1.0 && 1.0 <= hi, "{k}: {lo} {hi}");
        }
        let nu = waiting_distribution(&seq, 2, 1 << 20).unwrap();
        assert_eq!(nu.support(), Some((1, 2829)));
        assert!(waiting_distribution(&seq, 3, 1 << 20).is_err());
        let mu2 = mu_k(&seq, 2).unwrap().dense(1 << 20).unwrap();
        assert!(mu2.is_symmetric());
    }

    #[test]
    fn zeta_values() {
        assert_abs_diff_eq!(
            zeta(2.0),
            std::f64::consts::PI.powi(2) / 6.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(zeta(1.25), 4.595_111_825_842_94, epsilon = 1e-10);
    }

    #[test]
    fn lemma_examples() {
        let c = unif_concentration_check(2, 1).unwrap();
        assert_eq!(c.max_mass, 0.5);
        let c = unif_concentration_check(2, 2).unwrap();
        assert!(c.equality && c.holds);
        assert!(unif_concentration_check(5, 3).unwrap().holds);
        let b = binom_inverse_sqrt_check(1, 0.5).unwrap();
        assert_abs_diff_eq!(b.lhs, 0.5, epsilon = 1e-15);
        assert!(b.holds);
        // the approach to 1 is slow: about 1.198 at 1e-4, 1.042 at 1e-6
        let ratio = |p: f64| omega(p) * (2.0 * std::f64::consts::E * p).sqrt();
        assert_abs_diff_eq!(ratio(1e-4), 1.198_445_705_888, epsilon = 1e-9);
        assert!((ratio(1e-6) - 1.0).abs() < 0.05);
    }

    #[test]
    fn toy_recursion() {
        let rep = toy_scale_validation(&ToyParams::default(), 128, 0).unwrap();
        assert!(
            rep.holds,
            "{:?}",
            rep.levels.iter().map(|l| &l.violations).collect::<Vec<_>>()
        );
    }
}
