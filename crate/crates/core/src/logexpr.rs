//! Enclosures for logarithms of numbers far beyond floating point range.
//!
//! A [`LogExpr`] is a linear form `Σ c_j s_j + [lo, hi]` over symbols held in
//! a [`Tower`]. A symbol is either *huge*, known through an enclosure of its
//! own logarithm in earlier symbols, or *bounded*, known through an interval.
//! Huge symbols are registered in increasing order and each exceeds `e^700`,
//! so a form is dominated by its last huge term; signs are decided by
//! comparing logarithms recursively. Bounded symbols let correlated
//! quantities cancel exactly instead of through interval arithmetic.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Logarithm above which a value becomes a huge symbol.
pub const HUGE_LOG: f64 = 700.0;

fn down(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        x
    } else {
        x - x.abs() * 4.0 * f64::EPSILON - f64::MIN_POSITIVE
    }
}

fn up(x: f64) -> f64 {
    if x == f64::INFINITY {
        x
    } else {
        x + x.abs() * 4.0 * f64::EPSILON + f64::MIN_POSITIVE
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct LogExpr {
    terms: BTreeMap<usize, f64>,
    lo: f64,
    hi: f64,
}

impl LogExpr {
    pub fn constant(x: f64) -> LogExpr {
        LogExpr::interval(x, x)
    }

    pub fn interval(lo: f64, hi: f64) -> LogExpr {
        assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        LogExpr {
            terms: BTreeMap::new(),
            lo,
            hi,
        }
    }

    pub fn symbol(id: usize) -> LogExpr {
        let mut e = LogExpr::constant(0.0);
        e.terms.insert(id, 1.0);
        e
    }

    /// Constant part `[lo, hi]`.
    pub fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.terms.iter().map(|(k, v)| (*k, *v))
    }

    pub fn has_symbols(&self) -> bool {
        !self.terms.is_empty()
    }

    pub fn add(&self, other: &LogExpr) -> LogExpr {
        let mut terms = self.terms.clone();
        for (k, c) in &other.terms {
            let e = terms.entry(*k).or_insert(0.0);
            *e += c;
            if *e == 0.0 {
                terms.remove(k);
            }
        }
        LogExpr {
            terms,
            lo: down(self.lo + other.lo),
            hi: up(self.hi + other.hi),
        }
    }

    pub fn sub(&self, other: &LogExpr) -> LogExpr {
        self.add(&other.scale(-1.0))
    }

    /// Multiplies by `s`; coefficients stay exact for dyadic `s`.
    pub fn scale(&self, s: f64) -> LogExpr {
        let terms = self
            .terms
            .iter()
            .filter(|(_, c)| **c * s != 0.0)
            .map(|(k, c)| (*k, c * s))
            .collect();
        let (a, b) = (self.lo * s, self.hi * s);
        LogExpr {
            terms,
            lo: down(a.min(b)),
            hi: up(a.max(b)),
        }
    }

    pub fn plus(&self, x: f64) -> LogExpr {
        self.add(&LogExpr::constant(x))
    }

    pub fn plus_interval(&self, lo: f64, hi: f64) -> LogExpr {
        self.add(&LogExpr::interval(lo, hi))
    }

    /// Same symbols with the constant part collapsed to its upper end.
    pub fn pinned_high(&self) -> LogExpr {
        LogExpr {
            terms: self.terms.clone(),
            lo: self.hi,
            hi: self.hi,
        }
    }

    fn top(&self) -> Option<(usize, f64)> {
        self.terms.iter().next_back().map(|(k, c)| (*k, *c))
    }

    fn without(&self, id: usize) -> LogExpr {
        let mut e = self.clone();
        e.terms.remove(&id);
        e
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SymbolKind {
    Huge { ln: LogExpr },
    Bounded { lo: f64, hi: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Symbol {
    pub label: String,
    pub kind: SymbolKind,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Tower {
    symbols: Vec<Symbol>,
}

impl Tower {
    pub fn new() -> Tower {
        Tower::default()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn bounded(&mut self, label: impl Into<String>, lo: f64, hi: f64) -> LogExpr {
        self.symbols.push(Symbol {
            label: label.into(),
            kind: SymbolKind::Bounded { lo, hi },
        });
        LogExpr::symbol(self.symbols.len() - 1)
    }

    fn last_huge(&self) -> Option<&LogExpr> {
        self.symbols.iter().rev().find_map(|s| match &s.kind {
            SymbolKind::Huge { ln } => Some(ln),
            _ => None,
        })
    }

    fn huge_ln(&self, id: usize) -> Option<&LogExpr> {
        match &self.symbols[id].kind {
            SymbolKind::Huge { ln } => Some(ln),
            SymbolKind::Bounded { .. } => None,
        }
    }

    /// Replaces bounded symbols by their intervals.
    pub fn fold(&self, e: &LogExpr) -> LogExpr {
        let mut out = LogExpr::interval(e.lo, e.hi);
        for (id, c) in e.terms() {
            match &self.symbols[id].kind {
                SymbolKind::Bounded { lo, hi } => {
                    out = out.plus_interval((c * lo).min(c * hi), (c * lo).max(c * hi))
                }
                SymbolKind::Huge { .. } => {
                    out.terms.insert(id, c);
                }
            }
        }
        out
    }

    /// Enclosure as floats when no huge symbol remains.
    pub fn value(&self, e: &LogExpr) -> Option<(f64, f64)> {
        let f = self.fold(e);
        (!f.has_symbols()).then_some((f.lo, f.hi))
    }

    /// Upper bound on `ln |e|`, `None` when `e` is exactly zero.
    fn ln_abs_upper(&self, e: &LogExpr) -> Option<LogExpr> {
        let m = e.lo.abs().max(e.hi.abs());
        match e.top() {
            None if m == 0.0 => None,
            None => Some(LogExpr::constant(m.ln()).plus_interval(0.0, up(0.0) + 1e-15)),
            Some((id, _)) => {
                let s: f64 = e.terms.values().map(|c| c.abs()).sum::<f64>() + m;
                Some(self.huge_ln(id).expect("folded").plus(up(s.ln()) + 1e-15))
            }
        }
    }

    /// Proven sign of `e`, `None` when the enclosure cannot decide.
    pub fn sign(&self, e: &LogExpr) -> Option<Ordering> {
        let e = self.fold(e);
        self.sign_folded(&e)
    }

    fn sign_folded(&self, e: &LogExpr) -> Option<Ordering> {
        let Some((id, c)) = e.top() else {
            return if e.lo > 0.0 {
                Some(Ordering::Greater)
            } else if e.hi < 0.0 {
                Some(Ordering::Less)
            } else if e.lo == 0.0 && e.hi == 0.0 {
                Some(Ordering::Equal)
            } else {
                None
            };
        };
        let lead = if c > 0.0 {
            Ordering::Greater
        } else {
            Ordering::Less
        };
        let rest = e.without(id);
        match self.ln_abs_upper(&rest) {
            None => Some(lead),
            Some(u) => {
                let test = self
                    .huge_ln(id)
                    .expect("folded")
                    .plus(down(c.abs().ln()))
                    .sub(&u);
                (self.sign(&test) == Some(Ordering::Greater)).then_some(lead)
            }
        }
    }

    pub fn is_positive(&self, e: &LogExpr) -> bool {
        self.sign(e) == Some(Ordering::Greater)
    }

    /// `a ≥ b` proven.
    pub fn proves_ge(&self, a: &LogExpr, b: &LogExpr) -> bool {
        matches!(
            self.sign(&a.sub(b)),
            Some(Ordering::Greater | Ordering::Equal)
        )
    }

    /// Upper bound on `e^{-e}` for `e` provably positive.
    pub fn exp_neg_upper(&self, e: &LogExpr) -> Result<f64> {
        if let Some((lo, _)) = self.value(e) {
            return Ok(up((-lo).exp()).min(1.0));
        }
        if self.is_positive(&e.plus(-HUGE_LOG)) {
            Ok((-HUGE_LOG).exp())
        } else {
            Err(Error::Range(
                "cannot bound the exponential of an undecided form".into(),
            ))
        }
    }

    /// `e^e`: a constant interval while small, a new huge symbol otherwise.
    pub fn exp(&mut self, e: &LogExpr, label: impl Into<String>) -> Result<LogExpr> {
        if let Some((lo, hi)) = self.value(e) {
            if hi <= HUGE_LOG {
                return Ok(LogExpr::interval(down(lo.exp()), up(hi.exp())));
            }
        }
        if !self.is_positive(&e.plus(-HUGE_LOG)) {
            return Err(Error::Range("exponent straddles the huge threshold".into()));
        }
        if let Some(prev) = self.last_huge() {
            if !self.is_positive(&e.sub(prev)) {
                return Err(Error::Range(
                    "huge symbols must be registered in increasing order".into(),
                ));
            }
        }
        self.symbols.push(Symbol {
            label: label.into(),
            kind: SymbolKind::Huge { ln: e.clone() },
        });
        Ok(LogExpr::symbol(self.symbols.len() - 1))
    }

    /// `ln e` for `e` provably positive.
    pub fn ln(&self, e: &LogExpr) -> Result<LogExpr> {
        let f = self.fold(e);
        if !self.is_positive(&f) {
            return Err(Error::Range(
                "logarithm of a form not proven positive".into(),
            ));
        }
        let Some((id, c)) = f.top() else {
            return Ok(LogExpr::interval(down(f.lo.ln()), up(f.hi.ln())));
        };
        let base = self
            .huge_ln(id)
            .expect("folded")
            .plus_interval(down(c.ln()), up(c.ln()));
        let rest = f.without(id);
        let Some(u) = self.ln_abs_upper(&rest) else {
            return Ok(base);
        };
        let rho = self.exp_neg_upper(&base.sub(&u))?;
        if rho > 0.5 {
            return Err(Error::Range("leading term does not dominate".into()));
        }
        Ok(base.plus_interval(-2.0 * rho, rho))
    }

    /// `ln(e^a + e^b)`.
    pub fn ln_add_exp(&self, a: &LogExpr, b: &LogExpr) -> Result<LogExpr> {
        let d = a.sub(b);
        if let Some((lo, hi)) = self.value(&d) {
            return Ok(b.plus_interval(down(softplus(lo)), up(softplus(hi))));
        }
        match self.sign(&d) {
            Some(Ordering::Greater) => Ok(a.plus_interval(0.0, self.exp_neg_upper(&d)?)),
            Some(Ordering::Less) => Ok(b.plus_interval(0.0, self.exp_neg_upper(&d.scale(-1.0))?)),
            _ => Err(Error::Range("cannot order the terms of a log-sum".into())),
        }
    }

    pub fn ln_sum_exp(&self, xs: &[LogExpr]) -> Result<LogExpr> {
        let (first, rest) = xs
            .split_first()
            .ok_or_else(|| Error::input("empty log-sum"))?;
        rest.iter()
            .try_fold(first.clone(), |acc, x| self.ln_add_exp(&acc, x))
    }

    /// `ln(e^w - 1)` for `w` provably positive.
    pub fn ln_expm1(&self, w: &LogExpr) -> Result<LogExpr> {
        if let Some((lo, hi)) = self.value(w) {
            if lo <= 0.0 {
                return Err(Error::Range("ln(e^w - 1) needs w > 0".into()));
            }
            return Ok(LogExpr::interval(down(ln_expm1(lo)), up(ln_expm1(hi))));
        }
        let rho = self.exp_neg_upper(w)?;
        Ok(w.plus_interval(-2.0 * rho, 0.0))
    }

    pub fn max(&self, a: &LogExpr, b: &LogExpr) -> Result<LogExpr> {
        let d = a.sub(b);
        match self.sign(&d) {
            Some(Ordering::Greater | Ordering::Equal) => Ok(a.clone()),
            Some(Ordering::Less) => Ok(b.clone()),
            None => match self.value(&d) {
                Some((lo, hi)) => Ok(b.plus_interval(lo.max(0.0), hi.max(0.0))),
                None => Err(Error::Range("cannot order two forms".into())),
            },
        }
    }

    pub fn format(&self, e: &LogExpr) -> String {
        let mut s = String::new();
        for (id, c) in e.terms() {
            let _ = write!(s, "{c:?}*{} + ", self.symbols[id].label);
        }
        let _ = write!(s, "[{:?}, {:?}]", e.lo, e.hi);
        s
    }

    pub fn parse(&self, text: &str) -> Result<LogExpr> {
        let bad = || Error::input(format!("malformed log expression {text:?}"));
        let open = text.rfind('[').ok_or_else(bad)?;
        let inner = text[open..]
            .trim()
            .strip_prefix('[')
            .and_then(|t| t.strip_suffix(']'))
            .ok_or_else(bad)?;
        let (lo, hi) = inner.split_once(',').ok_or_else(bad)?;
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        let mut e = LogExpr::interval(lo, hi);
        for term in text[..open]
            .split(" + ")
            .map(str::trim)
            .filter(|t| !t.is_empty())
        {
            let (c, label) = term.split_once('*').ok_or_else(bad)?;
            let c: f64 = c.parse().map_err(|_| bad())?;
            let id = self
                .symbols
                .iter()
                .position(|s| s.label == label)
                .ok_or_else(bad)?;
            e.terms.insert(id, c);
        }
        Ok(e)
    }

    pub fn to_records(&self) -> Vec<SymbolRecord> {
        self.symbols
            .iter()
            .map(|s| match &s.kind {
                SymbolKind::Huge { ln } => SymbolRecord {
                    label: s.label.clone(),
                    ln: Some(self.format(ln)),
                    interval: None,
                },
                SymbolKind::Bounded { lo, hi } => SymbolRecord {
                    label: s.label.clone(),
                    ln: None,
                    interval: Some([*lo, *hi]),
                },
            })
            .collect()
    }

    /// Rebuilds a tower, re-checking the ordering of huge symbols.
    pub fn from_records(records: &[SymbolRecord]) -> Result<Tower> {
        let mut t = Tower::new();
        for r in records {
            match (&r.ln, r.interval) {
                (Some(ln), None) => {
                    let e = t.parse(ln)?;
                    if e.terms().any(|(id, _)| id >= t.symbols.len()) {
                        return Err(Error::input("symbol refers forward"));
                    }
                    t.exp(&e, r.label.clone()).and_then(|x| {
                        if x.has_symbols() {
                            Ok(())
                        } else {
                            Err(Error::input(format!("{} is not huge", r.label)))
                        }
                    })?;
                }
                (None, Some([lo, hi])) if lo <= hi => {
                    t.bounded(r.label.clone(), lo, hi);
                }
                _ => return Err(Error::input(format!("malformed symbol {}", r.label))),
            }
        }
        Ok(t)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolRecord {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ln: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub interval: Option<[f64; 2]>,
}

fn softplus(x: f64) -> f64 {
    if x > 40.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn ln_expm1(x: f64) -> f64 {
    if x > 40.0 {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_behave_like_intervals() {
        let t = Tower::new();
        let a = LogExpr::constant(2.0);
        let b = LogExpr::constant(3.0);
        assert_eq!(t.sign(&a.sub(&b)), Some(Ordering::Less));
        let s = t.ln_add_exp(&a, &b).unwrap();
        let (lo, hi) = t.value(&s).unwrap();
        let exact = (2f64.exp() + 3f64.exp()).ln();
        assert!(lo <= exact && exact <= hi && hi - lo < 1e-13);
        let l = t.ln(&LogExpr::constant(10.0)).unwrap();
        assert!((t.value(&l).unwrap().0 - 10f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn huge_symbols_dominate() {
        let mut t = Tower::new();
        let a = t.exp(&LogExpr::constant(1000.0), "A").unwrap();
        // A - 1e300 > 0 since A = e^1000
        assert!(t.is_positive(&a.plus(-1e300)));
        let b = t.exp(&a.scale(3.0), "B").unwrap();
        // B - 1e6 A > 0
        assert!(t.is_positive(&b.sub(&a.scale(1e6))));
        assert_eq!(t.sign(&a.sub(&b)), Some(Ordering::Less));
        // ln(B + A) = 3A + tiny
        let l = t.ln(&b.add(&a)).unwrap();
        let d = t.value(&l.sub(&a.scale(3.0))).unwrap();
        assert!(d.0 >= -1e-300 && d.1 < 1e-200);
        assert!(t.exp(&LogExpr::constant(800.0), "C").is_err());
    }

    #[test]
    fn bounded_symbols_cancel() {
        let mut t = Tower::new();
        let d = t.bounded("d", 0.0, 0.7);
        let x = d.plus(5.0);
        let y = x.sub(&d);
        assert_eq!(t.value(&y), Some((y.bounds().0, y.bounds().1)));
        assert!(y.bounds().1 - y.bounds().0 < 1e-13);
        assert_eq!(t.sign(&x.plus(-5.8)), Some(Ordering::Less));
        assert_eq!(t.sign(&x.plus(-5.5)), None);
    }

    #[test]
    fn text_roundtrip() {
        let mut t = Tower::new();
        let a = t.exp(&LogExpr::constant(1000.0), "A4").unwrap();
        let d = t.bounded("d4", 0.0, 0.5);
        let e = a.scale(-2.5).add(&d).plus(1.25);
        let s = t.format(&e);
        assert_eq!(t.parse(&s).unwrap(), e);
        let back = Tower::from_records(&t.to_records()).unwrap();
        assert_eq!(back, t);
    }
}
