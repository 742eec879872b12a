//! Exact ground truth by exhaustive branching.
//!
//! Every amplitude that can occur lives in `Q(√2)[i]`: Gaussian numbers whose
//! real and imaginary parts are `p + q√2` with rational `p`, `q`. Both
//! splitters have entries `±√2/2` and `±i√2/2`, so the field is closed under
//! everything the apparatus does and probabilities such as "detector 2 fires
//! with probability 0" are asserted as exact zeros.
//!
//! This path shares no arithmetic with [`crate::optics`]; it only reuses the
//! configuration enums.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::adversary::{EveStrategy, MeasBasis};
use crate::optics::{DetectionEvent, RouteLabel};
use crate::protocol::{AliceChoice, BobChoice};

/// `rational + sqrt2 · √2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QSqrt2 {
    pub rational: BigRational,
    pub sqrt2: BigRational,
}

impl QSqrt2 {
    pub fn zero() -> Self {
        Self::from_rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Self::from_rational(BigRational::one())
    }

    pub fn from_rational(r: BigRational) -> Self {
        QSqrt2 {
            rational: r,
            sqrt2: BigRational::zero(),
        }
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Self::from_rational(BigRational::new(num.into(), den.into()))
    }

    /// `√2 / 2`, i.e. `1/√2`.
    pub fn inv_sqrt2() -> Self {
        QSqrt2 {
            rational: BigRational::zero(),
            sqrt2: BigRational::new(1.into(), 2.into()),
        }
    }

    /// Exact conversion of a finite float (every finite f64 is a dyadic rational).
    pub fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x).map(Self::from_rational)
    }

    pub fn is_zero(&self) -> bool {
        self.rational.is_zero() && self.sqrt2.is_zero()
    }

    /// Sign of `p + q√2`, decided exactly by comparing `p²` with `2q²`.
    pub fn signum(&self) -> i8 {
        let (p, q) = (&self.rational, &self.sqrt2);
        let sign = |x: &BigRational| -> i8 {
            if x.is_zero() {
                0
            } else if x.is_positive() {
                1
            } else {
                -1
            }
        };
        let (sp, sq) = (sign(p), sign(q));
        if sp == sq || sq == 0 {
            return sp;
        }
        if sp == 0 {
            return sq;
        }
        let p2 = p * p;
        let two_q2 = q * q * BigRational::from_integer(2.into());
        match p2.cmp(&two_q2) {
            std::cmp::Ordering::Greater => sp,
            std::cmp::Ordering::Less => sq,
            std::cmp::Ordering::Equal => 0,
        }
    }

    pub fn pow(&self, mut exp: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            exp >>= 1;
        }
        acc
    }

    pub fn to_f64(&self) -> f64 {
        let p = self.rational.to_f64().unwrap_or(f64::NAN);
        let q = self.sqrt2.to_f64().unwrap_or(f64::NAN);
        p + q * std::f64::consts::SQRT_2
    }
}

impl Add for &QSqrt2 {
    type Output = QSqrt2;
    fn add(self, rhs: &QSqrt2) -> QSqrt2 {
        QSqrt2 {
            rational: &self.rational + &rhs.rational,
            sqrt2: &self.sqrt2 + &rhs.sqrt2,
        }
    }
}

impl Sub for &QSqrt2 {
    type Output = QSqrt2;
    fn sub(self, rhs: &QSqrt2) -> QSqrt2 {
        QSqrt2 {
            rational: &self.rational - &rhs.rational,
            sqrt2: &self.sqrt2 - &rhs.sqrt2,
        }
    }
}

impl Mul for &QSqrt2 {
    type Output = QSqrt2;
    fn mul(self, rhs: &QSqrt2) -> QSqrt2 {
        // (a + b√2)(c + d√2) = (ac + 2bd) + (ad + bc)√2
        let two = BigRational::from_integer(BigInt::from(2));
        QSqrt2 {
            rational: &self.rational * &rhs.rational + &self.sqrt2 * &rhs.sqrt2 * two,
            sqrt2: &self.rational * &rhs.sqrt2 + &self.sqrt2 * &rhs.rational,
        }
    }
}

impl Neg for &QSqrt2 {
    type Output = QSqrt2;
    fn neg(self) -> QSqrt2 {
        QSqrt2 {
            rational: -&self.rational,
            sqrt2: -&self.sqrt2,
        }
    }
}

impl fmt::Display for QSqrt2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.rational.is_zero(), self.sqrt2.is_zero()) {
            (_, true) => write!(f, "{}", self.rational),
            (true, false) => write!(f, "{}√2", self.sqrt2),
            (false, false) => {
                let sign = if self.sqrt2.is_negative() { '-' } else { '+' };
                write!(f, "{}{sign}{}√2", self.rational, self.sqrt2.abs())
            }
        }
    }
}

/// Gaussian number over `Q(√2)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactAmp {
    pub re: QSqrt2,
    pub im: QSqrt2,
}

impl ExactAmp {
    pub fn zero() -> Self {
        ExactAmp {
            re: QSqrt2::zero(),
            im: QSqrt2::zero(),
        }
    }

    pub fn one() -> Self {
        ExactAmp {
            re: QSqrt2::one(),
            im: QSqrt2::zero(),
        }
    }

    pub fn new(re: QSqrt2, im: QSqrt2) -> Self {
        ExactAmp { re, im }
    }

    pub fn conj(&self) -> Self {
        ExactAmp {
            re: self.re.clone(),
            im: -&self.im,
        }
    }

    pub fn norm_sqr(&self) -> QSqrt2 {
        &(&self.re * &self.re) + &(&self.im * &self.im)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

impl Add for &ExactAmp {
    type Output = ExactAmp;
    fn add(self, rhs: &ExactAmp) -> ExactAmp {
        ExactAmp {
            re: &self.re + &rhs.re,
            im: &self.im + &rhs.im,
        }
    }
}

impl Mul for &ExactAmp {
    type Output = ExactAmp;
    fn mul(self, rhs: &ExactAmp) -> ExactAmp {
        ExactAmp {
            re: &(&self.re * &rhs.re) - &(&self.im * &rhs.im),
            im: &(&self.re * &rhs.im) + &(&self.im * &rhs.re),
        }
    }
}

/// 2×2 matrix over `Q(√2)[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactMatrix(pub [[ExactAmp; 2]; 2]);

impl ExactMatrix {
    pub fn identity() -> Self {
        ExactMatrix([[ExactAmp::one(), ExactAmp::zero()], [ExactAmp::zero(), ExactAmp::one()]])
    }

    fn splitter(off_diagonal_sign: i64) -> Self {
        let d = ExactAmp::new(QSqrt2::inv_sqrt2(), QSqrt2::zero());
        let o = ExactAmp::new(
            QSqrt2::zero(),
            &QSqrt2::inv_sqrt2() * &QSqrt2::ratio(off_diagonal_sign, 1),
        );
        ExactMatrix([[d.clone(), o.clone()], [o, d]])
    }

    /// `1/√2 [[1, i], [i, 1]]`
    pub fn alice_splitter() -> Self {
        Self::splitter(1)
    }

    /// `1/√2 [[1, -i], [-i, 1]]`
    pub fn bob_splitter() -> Self {
        Self::splitter(-1)
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        ExactMatrix([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn compose(&self, rhs: &ExactMatrix) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        let cell = |i: usize, j: usize| &(&a[i][0] * &b[0][j]) + &(&a[i][1] * &b[1][j]);
        ExactMatrix([[cell(0, 0), cell(0, 1)], [cell(1, 0), cell(1, 1)]])
    }

    pub fn apply(&self, v: &[ExactAmp; 2]) -> [ExactAmp; 2] {
        let m = &self.0;
        [
            &(&m[0][0] * &v[0]) + &(&m[0][1] * &v[1]),
            &(&m[1][0] * &v[0]) + &(&m[1][1] * &v[1]),
        ]
    }
}

fn basis_vector(k: usize) -> [ExactAmp; 2] {
    if k == 0 {
        [ExactAmp::one(), ExactAmp::zero()]
    } else {
        [ExactAmp::zero(), ExactAmp::one()]
    }
}

/// One configuration of the apparatus and channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigCell {
    pub alice: AliceChoice,
    pub bob: BobChoice,
    pub eve: EveStrategy,
}

impl ConfigCell {
    pub fn new(alice: AliceChoice, bob: BobChoice, eve: EveStrategy) -> Self {
        ConfigCell { alice, bob, eve }
    }

    pub fn both_splitters(eve: EveStrategy) -> Self {
        ConfigCell::new(AliceChoice::SplitterIn, BobChoice::SplitterIn, eve)
    }
}

/// Index of Eve's outcome in [`CellDistribution::joint`]: no interception,
/// outcome bit 0, outcome bit 1.
pub const EVE_OUTCOMES: usize = 3;

fn eve_slot(outcome: Option<u8>) -> usize {
    match outcome {
        None => 0,
        Some(0) => 1,
        Some(_) => 2,
    }
}

fn event_slot(event: DetectionEvent) -> usize {
    match event {
        DetectionEvent::Detector1 => 0,
        DetectionEvent::Detector2 => 1,
        DetectionEvent::NoClick => 2,
    }
}

/// Exact outcome distribution for one cell, plus the joint law with Eve's outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellDistribution {
    pub p_det1: QSqrt2,
    pub p_det2: QSqrt2,
    pub p_noclick: QSqrt2,
    /// `joint[eve][event]`, eve indexed as in [`EVE_OUTCOMES`], events as
    /// (detector 1, detector 2, no click).
    pub joint: [[QSqrt2; 3]; EVE_OUTCOMES],
}

impl CellDistribution {
    pub fn probability(&self, event: DetectionEvent) -> &QSqrt2 {
        match event {
            DetectionEvent::Detector1 => &self.p_det1,
            DetectionEvent::Detector2 => &self.p_det2,
            DetectionEvent::NoClick => &self.p_noclick,
        }
    }

    pub fn joint_probability(&self, eve_outcome: Option<u8>, event: DetectionEvent) -> &QSqrt2 {
        &self.joint[eve_slot(eve_outcome)][event_slot(event)]
    }

    /// Marginal probability of Eve's outcome.
    pub fn eve_marginal(&self, eve_outcome: Option<u8>) -> QSqrt2 {
        self.joint[eve_slot(eve_outcome)]
            .iter()
            .fold(QSqrt2::zero(), |acc, p| &acc + p)
    }

    pub fn total(&self) -> QSqrt2 {
        &(&self.p_det1 + &self.p_det2) + &self.p_noclick
    }
}

struct Branch {
    weight: QSqrt2,
    eve_outcome: Option<u8>,
    state: Option<[ExactAmp; 2]>,
}

fn exact_probability(p: f64) -> QSqrt2 {
    QSqrt2::from_f64(p).expect("probabilities are finite")
}

/// Exact distribution with no channel loss.
pub fn enumerate_cell(cell: &ConfigCell) -> CellDistribution {
    enumerate_cell_with_loss(cell, &QSqrt2::zero())
}

/// Branches over loss, Eve's interception coin and measurement outcome, and
/// Bob's detector outcome.
pub fn enumerate_cell_with_loss(cell: &ConfigCell, p_loss: &QSqrt2) -> CellDistribution {
    let prepared = match cell.alice {
        AliceChoice::SplitterIn => ExactMatrix::alice_splitter().apply(&basis_vector(0)),
        AliceChoice::RouteSend(RouteLabel::A) => basis_vector(0),
        AliceChoice::RouteSend(RouteLabel::B) => basis_vector(1),
    };

    let mut branches = vec![
        Branch {
            weight: &QSqrt2::one() - p_loss,
            eve_outcome: None,
            state: Some(prepared),
        },
        Branch {
            weight: p_loss.clone(),
            eve_outcome: None,
            state: None,
        },
    ];

    if let EveStrategy::InterceptResend { basis, p_intercept } = cell.eve {
        let p = exact_probability(p_intercept.get());
        let frame = match basis {
            MeasBasis::Route => ExactMatrix::identity(),
            MeasBasis::Interference => ExactMatrix::bob_splitter(),
        };
        let back = frame.adjoint();
        let mut next = Vec::new();
        for b in branches {
            let Some(state) = &b.state else {
                next.push(b);
                continue;
            };
            let rotated = frame.apply(state);
            for (k, amp) in rotated.iter().enumerate() {
                let born = amp.norm_sqr();
                if born.is_zero() {
                    continue;
                }
                // Up to a global phase the post-measurement state is frame† e_k.
                next.push(Branch {
                    weight: &(&b.weight * &p) * &born,
                    eve_outcome: Some(k as u8),
                    state: Some(back.apply(&basis_vector(k))),
                });
            }
            next.push(Branch {
                weight: &b.weight * &(&QSqrt2::one() - &p),
                eve_outcome: None,
                state: b.state,
            });
        }
        branches = next;
    }

    let analyzer = match cell.bob {
        BobChoice::SplitterIn => ExactMatrix::bob_splitter(),
        BobChoice::SplitterOut => ExactMatrix::identity(),
    };

    let mut joint: [[QSqrt2; 3]; EVE_OUTCOMES] = std::array::from_fn(|_| std::array::from_fn(|_| QSqrt2::zero()));
    for b in &branches {
        if b.weight.is_zero() {
            continue;
        }
        let row = &mut joint[eve_slot(b.eve_outcome)];
        match &b.state {
            Some(state) => {
                let at_detectors = analyzer.apply(state);
                for (port, amp) in at_detectors.iter().enumerate() {
                    row[port] = &row[port] + &(&b.weight * &amp.norm_sqr());
                }
            }
            None => row[2] = &row[2] + &b.weight,
        }
    }

    let column = |j: usize| joint.iter().fold(QSqrt2::zero(), |acc, row| &acc + &row[j]);
    CellDistribution {
        p_det1: column(0),
        p_det2: column(1),
        p_noclick: column(2),
        joint,
    }
}

/// Probability that at least one of `n_both` both-splitters rounds fires
/// detector 2: `1 − (1 − p_det2)^n_both`.
pub fn detection_probability(eve: EveStrategy, n_both: u64) -> QSqrt2 {
    let cell = enumerate_cell(&ConfigCell::both_splitters(eve));
    let miss = &QSqrt2::one() - &cell.p_det2;
    &QSqrt2::one() - &miss.pow(n_both)
}

/// Probability that Alice's and Bob's bits differ on a key round, averaging
/// the two equally likely routes.
pub fn key_error_rate(eve: EveStrategy) -> QSqrt2 {
    let route_a = enumerate_cell(&ConfigCell::new(
        AliceChoice::RouteSend(RouteLabel::A),
        BobChoice::SplitterOut,
        eve,
    ));
    let route_b = enumerate_cell(&ConfigCell::new(
        AliceChoice::RouteSend(RouteLabel::B),
        BobChoice::SplitterOut,
        eve,
    ));
    &(&route_a.p_det2 + &route_b.p_det1) * &QSqrt2::ratio(1, 2)
}

/// Mutual information in bits between Alice's route (uniform over A, B) and
/// Eve's recorded outcome (none, 0, 1), evaluated from the exact joint law.
pub fn eve_route_information(eve: EveStrategy) -> f64 {
    let given = |route| {
        let d = enumerate_cell(&ConfigCell::new(
            AliceChoice::RouteSend(route),
            BobChoice::SplitterOut,
            eve,
        ));
        [None, Some(0), Some(1)].map(|o| d.eve_marginal(o).to_f64())
    };
    let (pa, pb) = (given(RouteLabel::A), given(RouteLabel::B));
    let mut info = 0.0;
    for k in 0..EVE_OUTCOMES {
        let marginal = 0.5 * (pa[k] + pb[k]);
        for cond in [pa[k], pb[k]] {
            if cond > 0.0 {
                info += 0.5 * cond * (cond / marginal).log2();
            }
        }
    }
    info
}

/// Strategies on the standard oracle grid: no Eve, and each basis at
/// interception probabilities 0, 1/4, 1/2 and 1.
pub fn standard_strategies() -> Vec<EveStrategy> {
    let mut out = vec![EveStrategy::None];
    for basis in [MeasBasis::Route, MeasBasis::Interference] {
        for p in [0.0, 0.25, 0.5, 1.0] {
            out.push(EveStrategy::intercept(basis, p).expect("grid probabilities are valid"));
        }
    }
    out
}

pub fn standard_grid() -> Vec<ConfigCell> {
    let mut cells = Vec::new();
    for eve in standard_strategies() {
        for alice in AliceChoice::ALL {
            for bob in BobChoice::ALL {
                cells.push(ConfigCell::new(alice, bob, eve));
            }
        }
    }
    cells
}

/// An exact value with its float rendering.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactValue {
    pub exact: String,
    pub value: f64,
}

impl From<&QSqrt2> for ExactValue {
    fn from(q: &QSqrt2) -> Self {
        ExactValue {
            exact: q.to_string(),
            value: q.to_f64(),
        }
    }
}

/// One row of the oracle cell table artifact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub alice: AliceChoice,
    pub bob: BobChoice,
    pub eve: EveStrategy,
    pub p_det1: ExactValue,
    pub p_det2: ExactValue,
    pub p_noclick: ExactValue,
}

/// Oracle table over the standard grid, with per-strategy summary numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellTable {
    pub cells: Vec<CellRow>,
    pub strategies: Vec<StrategyRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyRow {
    pub eve: EveStrategy,
    pub both_splitters_p_det2: ExactValue,
    pub key_error_rate: ExactValue,
    pub route_information_bits: f64,
}

pub fn cell_table() -> CellTable {
    let cells = standard_grid()
        .iter()
        .map(|cell| {
            let d = enumerate_cell(cell);
            CellRow {
                alice: cell.alice,
                bob: cell.bob,
                eve: cell.eve,
                p_det1: (&d.p_det1).into(),
                p_det2: (&d.p_det2).into(),
                p_noclick: (&d.p_noclick).into(),
            }
        })
        .collect();
    let strategies = standard_strategies()
        .into_iter()
        .map(|eve| StrategyRow {
            eve,
            both_splitters_p_det2: (&enumerate_cell(&ConfigCell::both_splitters(eve)).p_det2).into(),
            key_error_rate: (&key_error_rate(eve)).into(),
            route_information_bits: eve_route_information(eve),
        })
        .collect();
    CellTable { cells, strategies }
}
