//! Single-photon optics over the two interferometer routes.
//!
//! A photon is a normalized amplitude pair over route `a` and route `b`, or
//! [`PhotonState::Lost`]. Both beam splitters are fixed 50/50 unitaries:
//!
//! ```text
//! Alice:  U_S  = 1/√2 [[1,  i], [ i, 1]]   (port 1, port 2) -> (route a, route b)
//! Bob:    U_S' = 1/√2 [[1, -i], [-i, 1]]   (route a, route b) -> (detector 1, detector 2)
//! ```
//!
//! Alice always injects at port 1. `U_S' · U_S = I`, so a photon that met both
//! splitters always lands on detector 1, and with Bob's splitter out route `a`
//! feeds detector 1 and route `b` feeds detector 2.

use std::fmt;
use std::ops::{Add, Mul};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probability::Probability;

/// Tolerance for normalization and unitarity checks in the floating-point path.
pub const TOLERANCE: f64 = 1e-12;

/// A finite complex amplitude.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ComplexAmp(Complex64);

impl ComplexAmp {
    pub const ZERO: ComplexAmp = ComplexAmp(Complex64::new(0.0, 0.0));
    pub const ONE: ComplexAmp = ComplexAmp(Complex64::new(1.0, 0.0));
    pub const I: ComplexAmp = ComplexAmp(Complex64::new(0.0, 1.0));

    pub fn new(re: f64, im: f64) -> Result<Self> {
        for c in [re, im] {
            if !c.is_finite() {
                return Err(Error::NonFiniteAmplitude(c));
            }
        }
        Ok(ComplexAmp(Complex64::new(re, im)))
    }

    /// Unit-modulus scalar `e^{iθ}`.
    pub fn phase(theta: f64) -> Result<Self> {
        Self::new(theta.cos(), theta.sin())
    }

    pub fn re(self) -> f64 {
        self.0.re
    }

    pub fn im(self) -> f64 {
        self.0.im
    }

    pub fn norm_sqr(self) -> f64 {
        self.0.norm_sqr()
    }

    pub fn conj(self) -> Self {
        ComplexAmp(self.0.conj())
    }

    pub fn scale(self, k: f64) -> Self {
        ComplexAmp(self.0 * k)
    }

    pub fn approx_eq(self, other: Self, tol: f64) -> bool {
        (self.0 - other.0).norm() <= tol
    }
}

impl Add for ComplexAmp {
    type Output = ComplexAmp;
    fn add(self, rhs: Self) -> Self {
        ComplexAmp(self.0 + rhs.0)
    }
}

impl Mul for ComplexAmp {
    type Output = ComplexAmp;
    fn mul(self, rhs: Self) -> Self {
        ComplexAmp(self.0 * rhs.0)
    }
}

impl fmt::Display for ComplexAmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:+}i", self.0.re, self.0.im)
    }
}

/// One of the two interferometer routes, 2a and 2b.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RouteLabel {
    A,
    B,
}

impl RouteLabel {
    /// Key coding: route a is 0, route b is 1.
    pub fn bit(self) -> u8 {
        match self {
            RouteLabel::A => 0,
            RouteLabel::B => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit == 0 {
            RouteLabel::A
        } else {
            RouteLabel::B
        }
    }
}

impl fmt::Display for RouteLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RouteLabel::A => "A",
            RouteLabel::B => "B",
        })
    }
}

/// The in-flight photon.
///
/// `Present` amplitudes are indexed by route before Bob's analyzer and by
/// detector port after it (mode a is detector 1, mode b is detector 2).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PhotonState {
    Present { amp_a: ComplexAmp, amp_b: ComplexAmp },
    Lost,
}

impl PhotonState {
    /// Builds a present state, rejecting amplitude pairs that are not normalized.
    pub fn new(amp_a: ComplexAmp, amp_b: ComplexAmp) -> Result<Self> {
        let norm = amp_a.norm_sqr() + amp_b.norm_sqr();
        if (norm - 1.0).abs() > TOLERANCE {
            return Err(Error::NotNormalized(norm));
        }
        Ok(PhotonState::Present { amp_a, amp_b })
    }

    pub fn is_lost(&self) -> bool {
        matches!(self, PhotonState::Lost)
    }

    pub fn norm_sqr(&self) -> f64 {
        match self {
            PhotonState::Present { amp_a, amp_b } => amp_a.norm_sqr() + amp_b.norm_sqr(),
            PhotonState::Lost => 0.0,
        }
    }

    /// Multiplies both amplitudes by the same scalar. `Lost` is unchanged.
    pub fn scaled(&self, k: ComplexAmp) -> Self {
        match *self {
            PhotonState::Present { amp_a, amp_b } => PhotonState::Present {
                amp_a: amp_a * k,
                amp_b: amp_b * k,
            },
            PhotonState::Lost => PhotonState::Lost,
        }
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        match (self, other) {
            (PhotonState::Lost, PhotonState::Lost) => true,
            (PhotonState::Present { amp_a, amp_b }, PhotonState::Present { amp_a: oa, amp_b: ob }) => {
                amp_a.approx_eq(*oa, tol) && amp_b.approx_eq(*ob, tol)
            }
            _ => false,
        }
    }
}

/// A 2×2 complex matrix acting on (mode a, mode b).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Unitary2 {
    m: [[ComplexAmp; 2]; 2],
}

impl Unitary2 {
    pub fn from_rows(m: [[ComplexAmp; 2]; 2]) -> Self {
        Unitary2 { m }
    }

    pub fn identity() -> Self {
        use ComplexAmp as C;
        Unitary2::from_rows([[C::ONE, C::ZERO], [C::ZERO, C::ONE]])
    }

    /// Alice's splitter `U_S`.
    pub fn alice_splitter() -> Self {
        Self::symmetric_splitter(1.0)
    }

    /// Bob's splitter `U_S'`, the inverse of Alice's.
    pub fn bob_splitter() -> Self {
        Self::symmetric_splitter(-1.0)
    }

    fn symmetric_splitter(sign: f64) -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let d = ComplexAmp(Complex64::new(h, 0.0));
        let o = ComplexAmp(Complex64::new(0.0, sign * h));
        Unitary2::from_rows([[d, o], [o, d]])
    }

    pub fn entry(&self, row: usize, col: usize) -> ComplexAmp {
        self.m[row][col]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Unitary2::from_rows([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn compose(&self, rhs: &Unitary2) -> Self {
        let (a, b) = (&self.m, &rhs.m);
        let cell = |i: usize, j: usize| a[i][0] * b[0][j] + a[i][1] * b[1][j];
        Unitary2::from_rows([[cell(0, 0), cell(0, 1)], [cell(1, 0), cell(1, 1)]])
    }

    pub fn apply(&self, state: &PhotonState) -> PhotonState {
        match *state {
            PhotonState::Present { amp_a, amp_b } => PhotonState::Present {
                amp_a: self.m[0][0] * amp_a + self.m[0][1] * amp_b,
                amp_b: self.m[1][0] * amp_a + self.m[1][1] * amp_b,
            },
            PhotonState::Lost => PhotonState::Lost,
        }
    }

    /// Checks `U†U = I` entrywise within `tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        let p = self.adjoint().compose(self);
        let id = Unitary2::identity();
        (0..2).all(|i| (0..2).all(|j| p.m[i][j].approx_eq(id.m[i][j], tol)))
    }
}

/// What Bob's detectors report for one round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionEvent {
    Detector1,
    Detector2,
    NoClick,
}

impl DetectionEvent {
    pub fn clicked(self) -> bool {
        self != DetectionEvent::NoClick
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DetectionEvent::Detector1 => "detector1",
            DetectionEvent::Detector2 => "detector2",
            DetectionEvent::NoClick => "no_click",
        }
    }
}

impl fmt::Display for DetectionEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Floating-point probabilities over the three detection events.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub p_det1: f64,
    pub p_det2: f64,
    pub p_noclick: f64,
}

impl OutcomeDistribution {
    pub fn probability(&self, event: DetectionEvent) -> f64 {
        match event {
            DetectionEvent::Detector1 => self.p_det1,
            DetectionEvent::Detector2 => self.p_det2,
            DetectionEvent::NoClick => self.p_noclick,
        }
    }

    pub fn total(&self) -> f64 {
        self.p_det1 + self.p_det2 + self.p_noclick
    }
}

/// Basis state on the chosen route.
pub fn prepare_route(route: RouteLabel) -> PhotonState {
    let (amp_a, amp_b) = match route {
        RouteLabel::A => (ComplexAmp::ONE, ComplexAmp::ZERO),
        RouteLabel::B => (ComplexAmp::ZERO, ComplexAmp::ONE),
    };
    PhotonState::Present { amp_a, amp_b }
}

/// Alice's splitter applied to a photon entering at port 1: `(1/√2, i/√2)`.
pub fn alice_splitter_state() -> PhotonState {
    let port1 = PhotonState::Present {
        amp_a: ComplexAmp::ONE,
        amp_b: ComplexAmp::ZERO,
    };
    Unitary2::alice_splitter().apply(&port1)
}

/// Inserts Bob's splitter. Afterwards mode a is detector 1 and mode b detector 2.
pub fn apply_bob_splitter(state: PhotonState) -> PhotonState {
    Unitary2::bob_splitter().apply(&state)
}

/// Loses the photon with probability `p_loss`.
pub fn apply_loss<R: Rng + ?Sized>(state: PhotonState, p_loss: Probability, rng: &mut R) -> PhotonState {
    if state.is_lost() || rng.random::<f64>() < p_loss.get() {
        PhotonState::Lost
    } else {
        state
    }
}

/// Samples a click with Born probabilities `|amp_a|²` and `|amp_b|²`.
pub fn measure_detectors<R: Rng + ?Sized>(state: &PhotonState, rng: &mut R) -> DetectionEvent {
    match state {
        PhotonState::Present { amp_a, .. } => {
            if rng.random::<f64>() < amp_a.norm_sqr() {
                DetectionEvent::Detector1
            } else {
                DetectionEvent::Detector2
            }
        }
        PhotonState::Lost => DetectionEvent::NoClick,
    }
}

pub fn exact_distribution(state: &PhotonState) -> OutcomeDistribution {
    match state {
        PhotonState::Present { amp_a, amp_b } => OutcomeDistribution {
            p_det1: amp_a.norm_sqr(),
            p_det2: amp_b.norm_sqr(),
            p_noclick: 0.0,
        },
        PhotonState::Lost => OutcomeDistribution {
            p_det1: 0.0,
            p_det2: 0.0,
            p_noclick: 1.0,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn amp(re: f64, im: f64) -> ComplexAmp {
        ComplexAmp::new(re, im).unwrap()
    }

    fn assert_dist(d: OutcomeDistribution, p1: f64, p2: f64, pn: f64) {
        assert!((d.p_det1 - p1).abs() <= TOLERANCE, "{d:?}");
        assert!((d.p_det2 - p2).abs() <= TOLERANCE, "{d:?}");
        assert!((d.p_noclick - pn).abs() <= TOLERANCE, "{d:?}");
    }

    #[test]
    fn complex_amp_rejects_non_finite() {
        assert!(ComplexAmp::new(f64::NAN, 0.0).is_err());
        assert!(ComplexAmp::new(0.0, f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn route_preparation_is_a_basis_state() {
        assert_eq!(
            prepare_route(RouteLabel::A),
            PhotonState::Present {
                amp_a: ComplexAmp::ONE,
                amp_b: ComplexAmp::ZERO
            }
        );
        assert_eq!(
            prepare_route(RouteLabel::B),
            PhotonState::Present {
                amp_a: ComplexAmp::ZERO,
                amp_b: ComplexAmp::ONE
            }
        );
    }

    #[test]
    fn splitters_are_unitary_and_inverse() {
        assert!(Unitary2::alice_splitter().is_unitary(TOLERANCE));
        assert!(Unitary2::bob_splitter().is_unitary(TOLERANCE));
        let prod = Unitary2::bob_splitter().compose(&Unitary2::alice_splitter());
        for i in 0..2 {
            for j in 0..2 {
                assert!(prod.entry(i, j).approx_eq(Unitary2::identity().entry(i, j), TOLERANCE));
                // 50/50 splitting
                assert!((Unitary2::alice_splitter().entry(i, j).norm_sqr() - 0.5).abs() < TOLERANCE);
            }
        }
    }

    #[test]
    fn alice_splitter_state_matches_convention() {
        let s = alice_splitter_state();
        assert!(s.approx_eq(
            &PhotonState::Present {
                amp_a: amp(H, 0.0),
                amp_b: amp(0.0, H)
            },
            TOLERANCE
        ));
        assert!((s.norm_sqr() - 1.0).abs() <= TOLERANCE);
    }

    #[test]
    fn bob_splitter_examples() {
        let both = apply_bob_splitter(alice_splitter_state());
        assert!(both.approx_eq(
            &PhotonState::Present {
                amp_a: ComplexAmp::ONE,
                amp_b: ComplexAmp::ZERO
            },
            TOLERANCE
        ));
        assert_dist(exact_distribution(&both), 1.0, 0.0, 0.0);

        let route_a = apply_bob_splitter(prepare_route(RouteLabel::A));
        assert!(route_a.approx_eq(
            &PhotonState::Present {
                amp_a: amp(H, 0.0),
                amp_b: amp(0.0, -H)
            },
            TOLERANCE
        ));
        assert_dist(exact_distribution(&route_a), 0.5, 0.5, 0.0);

        assert_eq!(apply_bob_splitter(PhotonState::Lost), PhotonState::Lost);
    }

    #[test]
    fn splitter_out_is_faithful() {
        assert_dist(exact_distribution(&prepare_route(RouteLabel::A)), 1.0, 0.0, 0.0);
        assert_dist(exact_distribution(&prepare_route(RouteLabel::B)), 0.0, 1.0, 0.0);
        // Alice's splitter alone: equal probability
        assert_dist(exact_distribution(&alice_splitter_state()), 0.5, 0.5, 0.0);
        assert_dist(exact_distribution(&PhotonState::Lost), 0.0, 0.0, 1.0);
    }

    #[test]
    fn loss_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = alice_splitter_state();
        for _ in 0..1000 {
            assert_eq!(apply_loss(s, Probability::ZERO, &mut rng), s);
            assert_eq!(apply_loss(s, Probability::ONE, &mut rng), PhotonState::Lost);
            assert_eq!(
                apply_loss(PhotonState::Lost, Probability::ZERO, &mut rng),
                PhotonState::Lost
            );
        }
    }

    #[test]
    fn loss_rate_is_bernoulli() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let p = 0.3;
        let lost = (0..n)
            .filter(|_| apply_loss(prepare_route(RouteLabel::A), Probability::new(p).unwrap(), &mut rng).is_lost())
            .count() as f64;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((lost - n as f64 * p).abs() <= 5.0 * sigma, "lost {lost}");
    }

    #[test]
    fn measurement_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let basis = PhotonState::Present {
            amp_a: ComplexAmp::ONE,
            amp_b: ComplexAmp::ZERO,
        };
        assert!((0..1000).all(|_| measure_detectors(&basis, &mut rng) == DetectionEvent::Detector1));
        assert_eq!(measure_detectors(&PhotonState::Lost, &mut rng), DetectionEvent::NoClick);

        let n = 100_000;
        let half = PhotonState::Present {
            amp_a: amp(H, 0.0),
            amp_b: amp(0.0, H),
        };
        let d1 = (0..n)
            .filter(|_| measure_detectors(&half, &mut rng) == DetectionEvent::Detector1)
            .count() as f64;
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((d1 - n as f64 / 2.0).abs() <= 5.0 * sigma);
    }

    #[test]
    fn new_rejects_unnormalized() {
        assert!(PhotonState::new(ComplexAmp::ONE, ComplexAmp::ONE).is_err());
        assert!(PhotonState::new(amp(H, 0.0), amp(0.0, H)).is_ok());
    }

    fn arb_state() -> impl Strategy<Value = PhotonState> {
        (
            0.0..std::f64::consts::FRAC_PI_2,
            0.0..std::f64::consts::TAU,
            0.0..std::f64::consts::TAU,
        )
            .prop_map(|(theta, pa, pb)| PhotonState::Present {
                amp_a: ComplexAmp::phase(pa).unwrap().scale(theta.cos()),
                amp_b: ComplexAmp::phase(pb).unwrap().scale(theta.sin()),
            })
    }

    proptest! {
        #[test]
        fn splitters_preserve_total_probability(s in arb_state(), alice in any::<bool>()) {
            let s = if alice { Unitary2::alice_splitter().apply(&s) } else { s };
            let out = apply_bob_splitter(s);
            let d = exact_distribution(&out);
            prop_assert!((d.p_det1 + d.p_det2 - 1.0).abs() <= TOLERANCE);
            prop_assert_eq!(d.p_noclick, 0.0);
        }

        #[test]
        fn global_phase_is_unobservable(s in arb_state(), theta in 0.0..std::f64::consts::TAU) {
            let k = ComplexAmp::phase(theta).unwrap();
            for t in [s, apply_bob_splitter(s)] {
                let d0 = exact_distribution(&t);
                let d1 = exact_distribution(&t.scaled(k));
                prop_assert!((d0.p_det1 - d1.p_det1).abs() <= TOLERANCE);
                prop_assert!((d0.p_det2 - d1.p_det2).abs() <= TOLERANCE);
            }
        }
    }
}
