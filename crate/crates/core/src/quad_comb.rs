//! The quadruple-infinite comb and its persistent random walk on Z².
//!
//! The walk's memory is the pair `(previous letter, current letter)` of the
//! last direction change together with the current run length. At run
//! length `n` in configuration `c` the walker changes direction with
//! probability `α_n(c)`, and the new letter is drawn from the turn law
//! `p_n(c; ·)` over the three letters different from the current one.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice_dist::{LatticePmf, MASS_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Letter {
    #[serde(rename = "e")]
    E,
    #[serde(rename = "n")]
    N,
    #[serde(rename = "w")]
    W,
    #[serde(rename = "s")]
    S,
}

impl Letter {
    pub const ALL: [Letter; 4] = [Letter::E, Letter::N, Letter::W, Letter::S];

    pub fn direction(self) -> (i64, i64) {
        match self {
            Letter::E => (1, 0),
            Letter::N => (0, 1),
            Letter::W => (-1, 0),
            Letter::S => (0, -1),
        }
    }

    pub fn opposite(self) -> Letter {
        match self {
            Letter::E => Letter::W,
            Letter::N => Letter::S,
            Letter::W => Letter::E,
            Letter::S => Letter::N,
        }
    }

    pub fn is_horizontal(self) -> bool {
        matches!(self, Letter::E | Letter::W)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::E => 'e',
            Letter::N => 'n',
            Letter::W => 'w',
            Letter::S => 's',
        }
    }

    pub fn from_char(c: char) -> Option<Letter> {
        match c {
            'e' => Some(Letter::E),
            'n' => Some(Letter::N),
            'w' => Some(Letter::W),
            's' => Some(Letter::S),
            _ => None,
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// A pair `(previous, current)` of distinct letters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Config {
    prev: Letter,
    cur: Letter,
}

impl Config {
    /// `(n, e)`: the walk starts having just turned from north to east.
    pub const INITIAL: Config = Config {
        prev: Letter::N,
        cur: Letter::E,
    };

    pub fn new(prev: Letter, cur: Letter) -> Result<Config> {
        if prev == cur {
            return Err(Error::input(format!(
                "configuration {prev}{cur} repeats a letter"
            )));
        }
        Ok(Config { prev, cur })
    }

    pub fn prev(self) -> Letter {
        self.prev
    }

    pub fn cur(self) -> Letter {
        self.cur
    }

    pub fn all() -> [Config; 12] {
        let mut out = [Config::INITIAL; 12];
        let mut i = 0;
        for prev in Letter::ALL {
            for cur in Letter::ALL {
                if prev != cur {
                    out[i] = Config { prev, cur };
                    i += 1;
                }
            }
        }
        out
    }

    /// Position in [`Config::all`].
    pub fn index(self) -> usize {
        let p = self.prev.index();
        let c = self.cur.index();
        p * 3 + if c > p { c - 1 } else { c }
    }

    /// The three letters the walker may turn to, in [`Letter::ALL`] order.
    pub fn turn_letters(self) -> [Letter; 3] {
        let mut out = [Letter::E; 3];
        let mut i = 0;
        for l in Letter::ALL {
            if l != self.cur {
                out[i] = l;
                i += 1;
            }
        }
        out
    }

    /// Configuration reached by turning to `next`.
    pub fn turn(self, next: Letter) -> Config {
        Config {
            prev: self.cur,
            cur: next,
        }
    }

    pub fn successors(self) -> [Config; 3] {
        self.turn_letters().map(|l| self.turn(l))
    }

    pub fn is_reversal_of(self, from: Config) -> bool {
        self.prev == from.cur && self.cur == from.cur.opposite()
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.prev, self.cur)
    }
}

impl FromStr for Config {
    type Err = Error;

    fn from_str(s: &str) -> Result<Config> {
        let mut chars = s.chars();
        let (Some(a), Some(b), None) = (chars.next(), chars.next(), chars.next()) else {
            return Err(Error::input(format!(
                "configuration '{s}' must be two letters"
            )));
        };
        match (Letter::from_char(a), Letter::from_char(b)) {
            (Some(p), Some(c)) => Config::new(p, c),
            _ => Err(Error::input(format!(
                "configuration '{s}' uses letters outside e, n, w, s"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailRule {
    /// `α_n = α_{n_max}` for `n > n_max`.
    Const,
    /// `α_n = 1` for `n > n_max`.
    Absorb,
}

/// Change and turn probabilities of one configuration, tabulated for
/// `n = 1..=n_max`. Turn rows are indexed like [`Config::turn_letters`];
/// the last row applies beyond the table.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigLaw {
    alpha: Vec<f64>,
    turn: Vec<[f64; 3]>,
}

impl ConfigLaw {
    pub fn new(alpha: Vec<f64>, turn: Vec<[f64; 3]>) -> Result<ConfigLaw> {
        if alpha.is_empty() || turn.is_empty() {
            return Err(Error::input("change and turn tables must be non-empty"));
        }
        if let Some(a) = alpha.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::input(format!(
                "change probability {a} outside [0, 1]"
            )));
        }
        for row in &turn {
            let s: f64 = row.iter().sum();
            if row.iter().any(|p| !(*p >= 0.0)) || (s - 1.0).abs() > 1e-12 {
                return Err(Error::input(format!(
                    "turn row {row:?} is not a distribution"
                )));
            }
        }
        Ok(ConfigLaw { alpha, turn })
    }

    pub fn n_max(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha_table(&self) -> &[f64] {
        &self.alpha
    }

    pub fn turn_table(&self) -> &[[f64; 3]] {
        &self.turn
    }

    /// `α_n` for `n ≥ 1` under the given tail rule.
    #[inline]
    pub fn alpha(&self, n: u64, tail: TailRule) -> f64 {
        match self.alpha.get((n as usize).wrapping_sub(1)) {
            Some(&a) => a,
            None => match tail {
                TailRule::Const => *self.alpha.last().unwrap_or(&1.0),
                TailRule::Absorb => 1.0,
            },
        }
    }

    #[inline]
    pub fn turn(&self, n: u64) -> &[f64; 3] {
        let i = (n as usize).saturating_sub(1).min(self.turn.len() - 1);
        &self.turn[i]
    }

    /// `∏_{k ≤ n_max} (1 - α_k)`.
    pub fn survival_at_table_end(&self) -> f64 {
        self.alpha.iter().map(|a| 1.0 - a).product()
    }
}

/// Parameters of the comb for every configuration that may be visited.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadCombSpec {
    laws: BTreeMap<Config, ConfigLaw>,
    tail: TailRule,
}

impl QuadCombSpec {
    pub fn new(laws: BTreeMap<Config, ConfigLaw>, tail: TailRule) -> Result<QuadCombSpec> {
        let spec = QuadCombSpec { laws, tail };
        spec.check_admissible()?;
        Ok(spec)
    }

    /// Same change and turn law for all twelve configurations.
    pub fn uniform(law: ConfigLaw, tail: TailRule) -> Result<QuadCombSpec> {
        Self::new(
            Config::all()
                .into_iter()
                .map(|c| (c, law.clone()))
                .collect(),
            tail,
        )
    }

    pub fn tail(&self) -> TailRule {
        self.tail
    }

    pub fn law(&self, c: Config) -> Option<&ConfigLaw> {
        self.laws.get(&c)
    }

    pub fn configs(&self) -> impl Iterator<Item = Config> + '_ {
        self.laws.keys().copied()
    }

    /// Whether the walk in configuration `c` can ever turn to `s`.
    fn can_turn(&self, law: &ConfigLaw, slot: usize) -> bool {
        let mut survival = 1.0;
        for n in 1..=law.n_max() as u64 + 1 {
            let a = law.alpha(n, self.tail);
            if survival > 0.0 && a > 0.0 && law.turn(n)[slot] > 0.0 {
                return true;
            }
            survival *= 1.0 - a;
        }
        false
    }

    /// Configurations reachable from `(n, e)`, in [`Config::all`] order.
    pub fn reachable(&self) -> Result<Vec<Config>> {
        let mut seen = [false; 12];
        let mut stack = vec![Config::INITIAL];
        seen[Config::INITIAL.index()] = true;
        while let Some(c) = stack.pop() {
            let law = self.laws.get(&c).ok_or_else(|| {
                Error::Inadmissible(format!("configuration {c} is reachable but has no law"))
            })?;
            for (slot, s) in c.successors().into_iter().enumerate() {
                if !seen[s.index()] && self.can_turn(law, slot) {
                    seen[s.index()] = true;
                    stack.push(s);
                }
            }
        }
        Ok(Config::all()
            .into_iter()
            .filter(|c| seen[c.index()])
            .collect())
    }

    /// Every reachable configuration must change direction almost surely:
    /// the survival `∏(1 - α_k)` has to vanish under the tail rule.
    pub fn check_admissible(&self) -> Result<()> {
        for c in self.reachable()? {
            let law = &self.laws[&c];
            let survival = law.survival_at_table_end();
            let tail_alpha = law.alpha(law.n_max() as u64 + 1, self.tail);
            if tail_alpha == 0.0 && survival > MASS_TOL {
                return Err(Error::Inadmissible(format!(
                    "configuration {c} keeps its direction forever with probability {survival}"
                )));
            }
        }
        Ok(())
    }

    /// Run-length law `ν_c(n) = ∏_{k<n}(1 - α_k) α_n`, extended through the
    /// tail until the survival drops below `1e-17`.
    pub fn run_length_law(&self, c: Config) -> Result<LatticePmf> {
        let law = self
            .laws
            .get(&c)
            .ok_or_else(|| Error::input(format!("no law for configuration {c}")))?;
        let table = run_length_table(law, self.tail, crate::lattice_dist::SUPPORT_CAP)?;
        let masses: Vec<f64> = table.iter().map(|r| r.mass).collect();
        let defect = table.last().map(|r| r.survival_after).unwrap_or(0.0);
        LatticePmf::new(1, masses, defect)
    }

    pub fn from_json(text: &str) -> Result<QuadCombSpec> {
        let file: CombFile = serde_json::from_str(text).map_err(|e| Error::Json {
            path: "comb model".into(),
            source: e,
        })?;
        file.try_into()
    }
}

/// One row of the run-length recursion.
#[derive(Clone, Copy, Debug)]
pub(crate) struct RunRow {
    pub n: u64,
    /// `∏_{k<n}(1 - α_k) α_n`
    pub mass: f64,
    /// `∏_{k≤n}(1 - α_k)`
    pub survival_after: f64,
}

pub(crate) const RUN_TAIL_EPS: f64 = 1e-17;

pub(crate) fn run_length_table(law: &ConfigLaw, tail: TailRule, cap: usize) -> Result<Vec<RunRow>> {
    let mut rows = Vec::new();
    let mut survival = 1.0;
    let mut n = 1u64;
    loop {
        let a = law.alpha(n, tail);
        let mass = survival * a;
        survival *= 1.0 - a;
        rows.push(RunRow {
            n,
            mass,
            survival_after: survival,
        });
        if n as usize >= law.n_max() && (survival <= RUN_TAIL_EPS || a == 0.0) {
            break;
        }
        if rows.len() > cap {
            return Err(Error::SupportCap {
                needed: rows.len(),
                cap,
            });
        }
        n += 1;
    }
    Ok(rows)
}

/// Generalized directionally reinforced walk: i.i.d. persistence times per
/// axis and an axis-reversal probability at each change of direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrrwSpec {
    pub nu_h: LatticePmf,
    pub nu_v: LatticePmf,
    pub p_h: f64,
    pub p_v: f64,
}

impl DrrwSpec {
    pub fn new(nu_h: LatticePmf, nu_v: LatticePmf, p_h: f64, p_v: f64) -> Result<DrrwSpec> {
        let spec = DrrwSpec {
            nu_h,
            nu_v,
            p_h,
            p_v,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Same persistence law and reversal probability on both axes.
    pub fn isotropic(nu: LatticePmf, p: f64) -> Result<DrrwSpec> {
        Self::new(nu.clone(), nu, p, p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, nu) in [("nu_h", &self.nu_h), ("nu_v", &self.nu_v)] {
            match nu.support() {
                Some((lo, _)) if lo >= 1 => {}
                _ => {
                    return Err(Error::InvalidPmf(format!(
                        "{name} must put all its mass on {{1, 2, …}}"
                    )))
                }
            }
            if nu.defect() > MASS_TOL {
                return Err(Error::InvalidPmf(format!(
                    "{name} has defect {}",
                    nu.defect()
                )));
            }
        }
        for (name, p) in [("p_h", self.p_h), ("p_v", self.p_v)] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::input(format!("{name} = {p} outside [0, 1)")));
            }
        }
        Ok(())
    }

    pub fn axis_law(&self, horizontal: bool) -> (&LatticePmf, f64) {
        if horizontal {
            (&self.nu_h, self.p_h)
        } else {
            (&self.nu_v, self.p_v)
        }
    }

    /// Largest support point of the two persistence laws.
    pub fn support_max(&self) -> u64 {
        let h = self.nu_h.support().map_or(1, |s| s.1);
        let v = self.nu_v.support().map_or(1, |s| s.1);
        h.max(v) as u64
    }

    pub fn to_quadcomb(&self) -> Result<QuadCombSpec> {
        drrw_to_quadcomb(self, self.support_max() as usize)
    }
}

/// Hazard rates `α_n = ν(n) / ν([n, ∞))` of `nu` for `n = 1..=len`.
pub fn hazard_rates(nu: &LatticePmf, len: usize) -> Vec<f64> {
    let hi = nu.support().map_or(1, |s| s.1).max(1) as usize;
    let mut tail = vec![0.0; hi + 2];
    for n in (1..=hi).rev() {
        tail[n] = tail[n + 1] + nu.mass(n as i64);
    }
    (1..=len)
        .map(|n| {
            if n > hi || tail[n] <= 0.0 {
                1.0
            } else {
                (nu.mass(n as i64) / tail[n]).min(1.0)
            }
        })
        .collect()
}

/// Comb parameters of a generalized DRRW. Change probabilities are the
/// hazard rates of the axis persistence law; a reversal has probability
/// `p_axis` and each orthogonal turn `(1 - p_axis)/2`. When both laws end
/// within `n_max` the tail rule is "absorb", otherwise "const".
pub fn drrw_to_quadcomb(spec: &DrrwSpec, n_max: usize) -> Result<QuadCombSpec> {
    spec.validate()?;
    if n_max == 0 {
        return Err(Error::input("n_max must be positive"));
    }
    let bounded = spec.support_max() as usize <= n_max;
    let tail = if bounded {
        TailRule::Absorb
    } else {
        TailRule::Const
    };
    let mut laws = BTreeMap::new();
    for c in Config::all() {
        let (nu, p_rev) = spec.axis_law(c.cur().is_horizontal());
        let len = if bounded {
            nu.support().map_or(1, |s| s.1) as usize
        } else {
            n_max
        };
        let alpha = hazard_rates(nu, len);
        let row = c.turn_letters().map(|l| {
            if l == c.cur().opposite() {
                p_rev
            } else {
                0.5 * (1.0 - p_rev)
            }
        });
        laws.insert(c, ConfigLaw::new(alpha, vec![row])?);
    }
    QuadCombSpec::new(laws, tail)
}

#[derive(Serialize, Deserialize)]
struct CombFile {
    alpha: BTreeMap<String, Vec<f64>>,
    turn: BTreeMap<String, TurnEntry>,
    tail: TailRule,
    /// Parameters of the never-visited infinite-run leaves; accepted and
    /// ignored.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha_inf: Option<serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TurnEntry {
    Constant(BTreeMap<String, f64>),
    Table(Vec<BTreeMap<String, f64>>),
}

fn parse_turn_row(c: Config, row: &BTreeMap<String, f64>) -> Result<[f64; 3]> {
    let letters = c.turn_letters();
    let mut out = [0.0; 3];
    for (key, &p) in row {
        let l = key
            .chars()
            .next()
            .filter(|_| key.len() == 1)
            .and_then(Letter::from_char)
            .ok_or_else(|| Error::input(format!("turn.{c}: unknown letter '{key}'")))?;
        let slot = letters.iter().position(|&x| x == l).ok_or_else(|| {
            Error::input(format!("turn.{c}: cannot turn to the current letter {l}"))
        })?;
        out[slot] = p;
    }
    Ok(out)
}

impl TryFrom<CombFile> for QuadCombSpec {
    type Error = Error;

    fn try_from(file: CombFile) -> Result<QuadCombSpec> {
        let mut laws = BTreeMap::new();
        for (key, alpha) in &file.alpha {
            let c: Config = key.parse()?;
            let rows = match file.turn.get(key) {
                Some(TurnEntry::Constant(row)) => vec![parse_turn_row(c, row)?],
                Some(TurnEntry::Table(rows)) => rows
                    .iter()
                    .map(|r| parse_turn_row(c, r))
                    .collect::<Result<Vec<_>>>()?,
                None => return Err(Error::input(format!("turn.{key} is missing"))),
            };
            let law = ConfigLaw::new(alpha.clone(), rows)
                .map_err(|e| Error::input(format!("configuration {key}: {e}")))?;
            laws.insert(c, law);
        }
        QuadCombSpec::new(laws, file.tail)
    }
}

impl From<&QuadCombSpec> for CombFile {
    fn from(spec: &QuadCombSpec) -> CombFile {
        let mut alpha = BTreeMap::new();
        let mut turn = BTreeMap::new();
        for (c, law) in &spec.laws {
            alpha.insert(c.to_string(), law.alpha.clone());
            let letters = c.turn_letters();
            let rows: Vec<BTreeMap<String, f64>> = law
                .turn
                .iter()
                .map(|r| {
                    letters
                        .iter()
                        .zip(r)
                        .map(|(l, p)| (l.to_string(), *p))
                        .collect()
                })
                .collect();
            let entry = if rows.len() == 1 {
                TurnEntry::Constant(rows.into_iter().next().unwrap_or_default())
            } else {
                TurnEntry::Table(rows)
            };
            turn.insert(c.to_string(), entry);
        }
        CombFile {
            alpha,
            turn,
            tail: spec.tail,
            alpha_inf: None,
        }
    }
}

impl QuadCombSpec {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&CombFile::from(self)).expect("plain data serializes")
    }
}

/// A model file: either explicit comb parameters or a DRRW.
#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Comb(QuadCombSpec),
    Drrw(DrrwSpec),
}

#[derive(Deserialize)]
struct DrrwFile {
    drrw: DrrwSpec,
}

impl Model {
    pub fn from_json(text: &str) -> Result<Model> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Json {
            path: "model".into(),
            source: e,
        })?;
        if value.get("drrw").is_some() {
            let file: DrrwFile = serde_json::from_value(value).map_err(|e| Error::Json {
                path: "model.drrw".into(),
                source: e,
            })?;
            file.drrw.validate()?;
            Ok(Model::Drrw(file.drrw))
        } else {
            let file: CombFile = serde_json::from_value(value).map_err(|e| Error::Json {
                path: "model".into(),
                source: e,
            })?;
            Ok(Model::Comb(file.try_into()?))
        }
    }

    pub fn to_json(&self) -> String {
        match self {
            Model::Comb(spec) => spec.to_json(),
            Model::Drrw(d) => serde_json::to_string_pretty(&serde_json::json!({ "drrw": d }))
                .expect("plain data serializes"),
        }
    }

    pub fn comb(&self) -> Result<QuadCombSpec> {
        match self {
            Model::Comb(spec) => Ok(spec.clone()),
            Model::Drrw(d) => d.to_quadcomb(),
        }
    }

    pub fn drrw(&self) -> Option<&DrrwSpec> {
        match self {
            Model::Drrw(d) => Some(d),
            Model::Comb(_) => None,
        }
    }
}

/// Positions `S_1..S_T` and letters `X_1..X_T`; `S_0` is the origin and
/// `X_0 = n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    pub letters: Vec<Letter>,
    pub positions: Vec<(i64, i64)>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Builds a trajectory from letters `X_1, X_2, …` by summing steps.
    pub fn from_letters(letters: Vec<Letter>) -> Trajectory {
        let mut pos = (0, 0);
        let positions = letters
            .iter()
            .map(|l| {
                let d = l.direction();
                pos = (pos.0 + d.0, pos.1 + d.1);
                pos
            })
            .collect();
        Trajectory { letters, positions }
    }

    /// CSV with columns `t, x, y, letter`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "y", "letter"]).map_err(csv_err)?;
        for (i, (l, p)) in self.letters.iter().zip(&self.positions).enumerate() {
            w.write_record(&[
                (i + 1).to_string(),
                p.0.to_string(),
                p.1.to_string(),
                l.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::input(format!("csv: {other:?}")),
    }
}

/// Step-by-step sampler of the persistent walk.
///
/// Each trajectory draws from its own ChaCha stream selected by
/// `(seed, stream)`, so results do not depend on how trajectories are
/// spread over threads.
pub struct Walker<'a> {
    spec: &'a QuadCombSpec,
    laws: [Option<&'a ConfigLaw>; 12],
    rng: ChaCha8Rng,
    config: Config,
    run: u64,
    pos: (i64, i64),
    t: u64,
}

impl<'a> Walker<'a> {
    pub fn new(spec: &'a QuadCombSpec, seed: u64, stream: u64) -> Walker<'a> {
        Walker::starting_at(spec, Config::INITIAL, seed, stream)
    }

    /// Walker whose forced first step is `start.cur()` with `start.prev()`
    /// as the previous letter. `start` must have a law.
    pub fn starting_at(
        spec: &'a QuadCombSpec,
        start: Config,
        seed: u64,
        stream: u64,
    ) -> Walker<'a> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut laws = [None; 12];
        for (c, law) in &spec.laws {
            laws[c.index()] = Some(law);
        }
        Walker {
            spec,
            laws,
            rng,
            config: start,
            run: 0,
            pos: (0, 0),
            t: 0,
        }
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn position(&self) -> (i64, i64) {
        self.pos
    }

    pub fn config(&self) -> Config {
        self.config
    }

    /// Draws `X_{t+1}` and moves. The first call returns the forced first
    /// step east.
    #[inline]
    pub fn step(&mut self) -> Letter {
        if self.t > 0 {
            let law = self.laws[self.config.index()].expect("reachable configurations have laws");
            let a = law.alpha(self.run, self.spec.tail);
            let change = a >= 1.0 || (a > 0.0 && self.rng.gen::<f64>() < a);
            if change {
                let row = law.turn(self.run);
                let u = self.rng.gen::<f64>();
                let slot = if u < row[0] {
                    0
                } else if u < row[0] + row[1] {
                    1
                } else {
                    2
                };
                let next = self.config.turn_letters()[slot];
                self.config = self.config.turn(next);
                self.run = 1;
            } else {
                self.run += 1;
            }
        } else {
            self.run = 1;
        }
        let cur = self.config.cur();
        let d = cur.direction();
        self.pos = (self.pos.0 + d.0, self.pos.1 + d.1);
        self.t += 1;
        cur
    }
}

/// Simulates `steps` letters of the walk from `(X_0, X_1) = (n, e)`.
pub fn simulate_prw(spec: &QuadCombSpec, steps: usize, seed: u64) -> Trajectory {
    simulate_prw_stream(spec, steps, seed, 0)
}

pub fn simulate_prw_stream(
    spec: &QuadCombSpec,
    steps: usize,
    seed: u64,
    stream: u64,
) -> Trajectory {
    let mut walker = Walker::new(spec, seed, stream);
    let mut letters = Vec::with_capacity(steps);
    let mut positions = Vec::with_capacity(steps);
    for _ in 0..steps {
        letters.push(walker.step());
        positions.push(walker.position());
    }
    Trajectory { letters, positions }
}

/// Lengths of maximal runs of equal letters, the first run included.
pub fn run_lengths(letters: &[Letter]) -> Vec<(Letter, u64)> {
    let mut out: Vec<(Letter, u64)> = Vec::new();
    for &l in letters {
        match out.last_mut() {
            Some((prev, n)) if *prev == l => *n += 1,
            _ => out.push((l, 1)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn drrw_unit(p: f64) -> DrrwSpec {
        DrrwSpec::isotropic(LatticePmf::dirac(1), p).unwrap()
    }

    #[test]
    fn letters_and_configs() {
        for l in Letter::ALL {
            let (x, y) = l.direction();
            let (ox, oy) = l.opposite().direction();
            assert_eq!((x + ox, y + oy), (0, 0));
        }
        let all = Config::all();
        for (i, c) in all.iter().enumerate() {
            assert_eq!(c.index(), i);
            assert_eq!(c.to_string().parse::<Config>().unwrap(), *c);
        }
        assert!("ee".parse::<Config>().is_err());
        assert!("nx".parse::<Config>().is_err());
        assert_eq!(Config::INITIAL.to_string(), "ne");
        let succ = Config::INITIAL.successors();
        assert_eq!(succ.map(|c| c.to_string()), ["en", "ew", "es"]);
    }

    #[test]
    fn point_mass_hazard() {
        let q = drrw_unit(1.0 / 3.0).to_quadcomb().unwrap();
        let law = q.law(Config::INITIAL).unwrap();
        assert_eq!(law.alpha_table(), &[1.0]);
        assert_eq!(q.tail(), TailRule::Absorb);
    }

    #[test]
    fn geometric_hazard_is_constant() {
        let q: f64 = 0.3;
        let masses: Vec<f64> = (1..=200).map(|n| q * (1.0 - q).powi(n - 1)).collect();
        let nu = LatticePmf::new(1, masses, 0.0).unwrap();
        let spec = DrrwSpec::isotropic(nu, 0.0).unwrap();
        // trimmed far tail perturbs late hazards slightly
        let comb = drrw_to_quadcomb(&spec, 20).unwrap();
        assert_eq!(comb.tail(), TailRule::Const);
        for &a in comb.law(Config::INITIAL).unwrap().alpha_table() {
            assert_abs_diff_eq!(a, q, epsilon = 1e-10);
        }
        // hazard identity ν(n) = ∏_{k<n}(1 - α_k) α_n
        let run = comb.run_length_law(Config::INITIAL).unwrap();
        for n in 1..=20 {
            assert_abs_diff_eq!(
                run.mass(n),
                q * (1.0 - q).powi(n as i32 - 1),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn original_drrw_turns_uniformly() {
        let comb = drrw_unit(1.0 / 3.0).to_quadcomb().unwrap();
        for c in Config::all() {
            for p in comb.law(c).unwrap().turn(1) {
                assert_abs_diff_eq!(*p, 1.0 / 3.0, epsilon = 1e-15);
            }
        }
        let nb = drrw_unit(0.0).to_quadcomb().unwrap();
        let row = nb.law(Config::INITIAL).unwrap().turn(1);
        // turn letters of (n, e) are n, w, s; w is the reversal
        assert_eq!(row, &[0.5, 0.0, 0.5]);
    }

    #[test]
    fn always_changing_walk_has_unit_runs() {
        let comb = drrw_unit(1.0 / 3.0).to_quadcomb().unwrap();
        let traj = simulate_prw(&comb, 1000, 3);
        assert_eq!(traj.len(), 1000);
        assert_eq!(traj.letters[0], Letter::E);
        assert!(run_lengths(&traj.letters).iter().all(|r| r.1 == 1));
        let mut prev = (0, 0);
        for p in &traj.positions {
            assert_eq!((p.0 - prev.0).abs() + (p.1 - prev.1).abs(), 1);
            prev = *p;
        }
    }

    #[test]
    fn absorbing_tail_forces_the_first_run() {
        let n_max = 7;
        let law = ConfigLaw::new(vec![0.0; n_max], vec![[1.0 / 3.0; 3]]).unwrap();
        let comb = QuadCombSpec::uniform(law, TailRule::Absorb).unwrap();
        let traj = simulate_prw(&comb, 40, 11);
        let runs = run_lengths(&traj.letters);
        assert_eq!(runs[0], (Letter::E, n_max as u64 + 1));
        assert!(runs[1..runs.len() - 1]
            .iter()
            .all(|r| r.1 == n_max as u64 + 1));
    }

    #[test]
    fn rejects_too_strong_reinforcement() {
        let law = ConfigLaw::new(vec![0.5, 0.0], vec![[1.0 / 3.0; 3]]).unwrap();
        let err = QuadCombSpec::uniform(law, TailRule::Const).unwrap_err();
        assert!(matches!(err, Error::Inadmissible(_)));
        let ok = ConfigLaw::new(vec![0.5, 0.0], vec![[1.0 / 3.0; 3]]).unwrap();
        assert!(QuadCombSpec::uniform(ok, TailRule::Absorb).is_ok());
    }

    #[test]
    fn missing_reachable_config_is_an_error() {
        let law = ConfigLaw::new(vec![1.0], vec![[1.0 / 3.0; 3]]).unwrap();
        let mut laws = BTreeMap::new();
        laws.insert(Config::INITIAL, law);
        assert!(QuadCombSpec::new(laws, TailRule::Absorb).is_err());
    }

    #[test]
    fn seeded_runs_are_reproducible() {
        let comb = drrw_unit(1.0 / 3.0).to_quadcomb().unwrap();
        assert_eq!(simulate_prw(&comb, 500, 9), simulate_prw(&comb, 500, 9));
        assert_ne!(
            simulate_prw_stream(&comb, 500, 9, 0),
            simulate_prw_stream(&comb, 500, 9, 1)
        );
    }

    #[test]
    fn comb_json_round_trip() {
        let comb = drrw_unit(0.25).to_quadcomb().unwrap();
        let text = comb.to_json();
        assert_eq!(QuadCombSpec::from_json(&text).unwrap(), comb);
    }

    #[test]
    fn model_json_shapes() {
        let text = r#"{"drrw": {"nu_h": {"offset": 1, "masses": [1.0], "defect": 0.0},
                                "nu_v": {"offset": 1, "masses": [0.5, 0.5], "defect": 0.0},
                                "p_h": 0.3333333333333333, "p_v": 0.0}}"#;
        let m = Model::from_json(text).unwrap();
        assert!(m.drrw().is_some());
        // no vertical reversals: ns and sn are never visited
        assert_eq!(m.comb().unwrap().reachable().unwrap().len(), 10);

        let comb = r#"{"alpha": {"ne": [1.0], "en": [1.0], "es": [1.0], "sw": [1.0], "wn": [1.0],
                                  "nw": [1.0], "ws": [1.0], "se": [1.0]},
                       "turn": {"ne": {"n": 0.5, "s": 0.5}, "en": {"e": 0.5, "w": 0.5},
                                "es": {"e": 0.5, "w": 0.5}, "sw": {"n": 0.5, "s": 0.5},
                                "wn": {"e": 0.5, "w": 0.5}, "nw": {"n": 0.5, "s": 0.5},
                                "ws": {"e": 0.5, "w": 0.5}, "se": {"n": 0.5, "s": 0.5}},
                       "tail": "absorb", "alpha_inf": {"e": 0.1}}"#;
        let m = Model::from_json(comb).unwrap();
        assert_eq!(m.comb().unwrap().reachable().unwrap().len(), 8);

        let bad = r#"{"alpha": {"ne": [1.0]}, "turn": {"ne": {"e": 1.0}}, "tail": "absorb"}"#;
        let err = Model::from_json(bad).unwrap_err().to_string();
        assert!(err.contains("turn.ne"), "{err}");
    }

    #[test]
    fn trajectory_csv() {
        let traj = Trajectory::from_letters(vec![Letter::E, Letter::N, Letter::N]);
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "t,x,y,letter\n1,1,0,e\n2,1,1,n\n3,1,2,n\n");
    }
}
