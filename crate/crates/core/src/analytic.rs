//! Closed-form success probability, tilt and minimal disturbance for
//! discriminating two real qubit states with equal priors.
//!
//! The pair is `|ψ₁⟩ = cos α|1⟩ + sin α|2⟩`, `|ψ₂⟩ = sin α|1⟩ + cos α|2⟩`
//! with `0 ≤ α ≤ π/4`. The optimal instruments form a one-parameter family
//! indexed by `t ∈ [0, 1]`, from "no measurement" (`t = 0`) to the Helstrom
//! measurement (`t = 1`).

use std::f64::consts::FRAC_PI_4;

use crate::error::{Error, Result};
use crate::qmath::PureState;

/// The two-state ensemble, fixed priors ½/½.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StatePair {
    alpha: f64,
}

impl StatePair {
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::NonFinite("alpha"));
        }
        // Tolerate rounding of π/4 computed from decimal input.
        if !(0.0..=FRAC_PI_4 + 1e-15).contains(&alpha) {
            return Err(Error::OutOfRange {
                name: "alpha",
                value: alpha,
                min: 0.0,
                max: FRAC_PI_4,
            });
        }
        Ok(Self {
            alpha: alpha.min(FRAC_PI_4),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Overlap `|⟨ψ₁|ψ₂⟩| = sin 2α`.
    pub fn overlap(&self) -> f64 {
        (2.0 * self.alpha).sin()
    }

    /// `α = π/4`: both hypotheses are the same state.
    pub fn is_identical(&self) -> bool {
        self.alpha == FRAC_PI_4
    }

    pub fn prior(&self) -> f64 {
        0.5
    }

    pub fn psi1(&self) -> PureState {
        PureState::real2(self.alpha.cos(), self.alpha.sin()).expect("unit vector")
    }

    pub fn psi2(&self) -> PureState {
        PureState::real2(self.alpha.sin(), self.alpha.cos()).expect("unit vector")
    }

    /// State for hypothesis `i ∈ {1, 2}`.
    pub fn state(&self, i: u32) -> PureState {
        match i {
            1 => self.psi1(),
            2 => self.psi2(),
            _ => panic!("hypothesis label must be 1 or 2, got {i}"),
        }
    }
}

/// One point of the optimal information/disturbance curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TradeoffPoint {
    pub t: f64,
    pub gamma: f64,
    pub beta_t: f64,
    pub p: f64,
    pub d: f64,
}

fn check_t(t: f64) -> Result<()> {
    if !t.is_finite() {
        return Err(Error::NonFinite("t"));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OutOfRange {
            name: "t",
            value: t,
            min: 0.0,
            max: 1.0,
        });
    }
    Ok(())
}

/// `γ = √(1 − t²)`.
pub fn gamma_of_t(t: f64) -> f64 {
    (1.0 - t * t).max(0.0).sqrt()
}

/// Maximum success probability, `cos²α`.
pub fn helstrom_probability(pair: &StatePair) -> f64 {
    pair.alpha.cos().powi(2)
}

/// Tilt of the states prepared after the Helstrom measurement, solving
/// `tan 2β = tan 2α / cos 2α` on the branch `2β ∈ [0, π/2]`.
///
/// At `α = π/4` the equation is singular; the continuous limit `β = π/4` is
/// returned (see [`StatePair::is_identical`]).
pub fn helstrom_tilt(pair: &StatePair) -> f64 {
    let two_a = 2.0 * pair.alpha;
    // tan2α / cos2α = sin2α / cos²2α, and cos2α ≥ 0 on the allowed range.
    0.5 * two_a.sin().atan2(two_a.cos().powi(2))
}

/// Minimal disturbance of an instrument attaining the Helstrom probability,
/// `(4 − √(14 + 2 cos 8α)) / 8`.
pub fn helstrom_disturbance(pair: &StatePair) -> f64 {
    (4.0 - (14.0 + 2.0 * (8.0 * pair.alpha).cos()).sqrt()) / 8.0
}

/// `P_t = t cos²α + (1 − t)/2`.
pub fn probability_of_t(pair: &StatePair, t: f64) -> Result<f64> {
    check_t(t)?;
    Ok(t * helstrom_probability(pair) + 0.5 * (1.0 - t))
}

/// Feedback tilt `β_t`: `tan 2β_t = t sin 2α / (cos² 2α + γ sin² 2α)`,
/// branch `2β_t ∈ [0, π/2]`.
pub fn tilt_of_t(pair: &StatePair, t: f64) -> Result<f64> {
    check_t(t)?;
    Ok(tilt_unchecked(pair.alpha, t))
}

fn tilt_unchecked(alpha: f64, t: f64) -> f64 {
    let (s2, c2) = (2.0 * alpha).sin_cos();
    let gamma = gamma_of_t(t);
    0.5 * (t * s2).atan2(c2 * c2 + gamma * s2 * s2)
}

/// Least disturbance compatible with success probability `P_t`.
pub fn disturbance_of_t(pair: &StatePair, t: f64) -> Result<f64> {
    check_t(t)?;
    let alpha = pair.alpha;
    let gamma = gamma_of_t(t);
    let beta = tilt_unchecked(alpha, t);
    let (s2b, c2b) = (2.0 * beta).sin_cos();
    let c4a = (4.0 * alpha).cos();
    Ok(
        0.5 * (1.0 - t * (2.0 * alpha).sin() * s2b)
            + 0.25 * c2b * (gamma * (c4a - 1.0) - c4a - 1.0),
    )
}

/// Control parameter reaching success probability `p`, the inverse of
/// [`probability_of_t`]: `t = (2P − 1) / cos 2α`.
///
/// For identical states (`α = π/4`) only `P = ½` is reachable and every `t`
/// attains it; `t = 0` is returned.
pub fn t_of_probability(pair: &StatePair, p: f64) -> Result<f64> {
    let bound = helstrom_probability(pair);
    if !p.is_finite() {
        return Err(Error::NonFinite("P"));
    }
    if p > bound + 1e-12 {
        return Err(Error::Infeasible { target: p, bound });
    }
    if p < 0.5 - 1e-12 {
        return Err(Error::OutOfRange {
            name: "P",
            value: p,
            min: 0.5,
            max: bound,
        });
    }
    let denom = (2.0 * pair.alpha).cos();
    if denom < 1e-12 {
        return Ok(0.0);
    }
    Ok(((2.0 * p - 1.0) / denom).clamp(0.0, 1.0))
}

/// Minimal disturbance as a function of the success probability.
pub fn disturbance_at_probability(pair: &StatePair, p: f64) -> Result<f64> {
    disturbance_of_t(pair, t_of_probability(pair, p)?)
}

pub fn tradeoff_point(pair: &StatePair, t: f64) -> Result<TradeoffPoint> {
    Ok(TradeoffPoint {
        t,
        gamma: gamma_of_t(t),
        beta_t: tilt_of_t(pair, t)?,
        p: probability_of_t(pair, t)?,
        d: disturbance_of_t(pair, t)?,
    })
}

/// Optimal curve sampled on a uniform `t`-grid over `[0, 1]`, endpoints included.
pub fn tradeoff_curve(pair: &StatePair, n_points: usize) -> Result<Vec<TradeoffPoint>> {
    if n_points < 2 {
        return Err(Error::TooSmall {
            what: "points",
            value: n_points,
            min: 2,
        });
    }
    let last = (n_points - 1) as f64;
    (0..n_points)
        .map(|k| {
            tradeoff_point(
                pair,
                if k + 1 == n_points {
                    1.0
                } else {
                    k as f64 / last
                },
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const ALPHAS: [f64; 5] = [
        PI / 32.0,
        PI / 16.0,
        PI / 8.0,
        3.0 * PI / 16.0,
        7.0 * PI / 32.0,
    ];

    fn pair(alpha: f64) -> StatePair {
        StatePair::new(alpha).unwrap()
    }

    /// Independent evaluation of the tilt from the printed tangent equation,
    /// valid away from the branch cut.
    fn tilt_via_atan(alpha: f64, t: f64) -> f64 {
        let g = (1.0 - t * t).sqrt();
        let s = (2.0 * alpha).sin();
        let c = (2.0 * alpha).cos();
        0.5 * (t * s / (c * c + g * s * s)).atan()
    }

    #[test]
    fn pair_validation() {
        assert!(StatePair::new(-0.1).is_err());
        assert!(StatePair::new(0.8).is_err());
        assert!(StatePair::new(f64::NAN).is_err());
        assert!(pair(PI / 4.0).is_identical());
        assert!((pair(PI / 8.0).overlap() - 0.5f64.sqrt()).abs() < 1e-15);
        let p = pair(PI / 8.0);
        assert!((p.psi1().inner(&p.psi2()).re - p.overlap()).abs() < 1e-15);
    }

    #[test]
    fn helstrom_probability_examples() {
        assert_eq!(helstrom_probability(&pair(0.0)), 1.0);
        assert!((helstrom_probability(&pair(PI / 4.0)) - 0.5).abs() < 1e-15);
        let expected = (2.0 + 2f64.sqrt()) / 4.0;
        assert!((helstrom_probability(&pair(PI / 8.0)) - expected).abs() < 1e-15);
        assert!((expected - 0.853_553_4).abs() < 1e-7);
    }

    #[test]
    fn helstrom_tilt_examples() {
        assert_eq!(helstrom_tilt(&pair(0.0)), 0.0);
        let b = helstrom_tilt(&pair(PI / 8.0));
        assert!((b - 0.5 * 2f64.sqrt().atan()).abs() < 1e-15);
        assert!((b - 0.477_658_3).abs() < 1e-7);
        let b12 = helstrom_tilt(&pair(PI / 12.0));
        let expected = 0.5 * ((PI / 6.0).tan() / (PI / 6.0).cos()).atan();
        assert!((b12 - expected).abs() < 1e-15);
        assert!((b12 - 0.294_001_3).abs() < 1e-7);
        assert!((helstrom_tilt(&pair(PI / 4.0)) - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn helstrom_disturbance_examples() {
        assert!(helstrom_disturbance(&pair(0.0)).abs() < 1e-15);
        assert!(helstrom_disturbance(&pair(PI / 4.0)).abs() < 1e-15);
        let d = helstrom_disturbance(&pair(PI / 8.0));
        assert!((d - (2.0 - 3f64.sqrt()) / 4.0).abs() < 1e-15);
        assert!((d - 0.066_987_3).abs() < 1e-7);
    }

    #[test]
    fn probability_of_t_examples() {
        assert_eq!(probability_of_t(&pair(0.3), 0.0).unwrap(), 0.5);
        let p8 = pair(PI / 8.0);
        assert_eq!(
            probability_of_t(&p8, 1.0).unwrap(),
            helstrom_probability(&p8)
        );
        assert!((probability_of_t(&p8, 0.5).unwrap() - 0.676_776_695_296_636_8).abs() < 1e-15);
        assert!(matches!(
            probability_of_t(&p8, 1.2),
            Err(Error::OutOfRange { name: "t", .. })
        ));
        assert!(probability_of_t(&p8, -0.1).is_err());
    }

    #[test]
    fn tilt_of_t_examples() {
        assert_eq!(tilt_of_t(&pair(0.5), 0.0).unwrap(), 0.0);
        let p8 = pair(PI / 8.0);
        assert!((tilt_of_t(&p8, 1.0).unwrap() - 0.477_658_3).abs() < 1e-7);
        let b = tilt_of_t(&p8, 0.5).unwrap();
        assert!((b - 0.5 * (0.353_553_4f64 / 0.933_012_7).atan()).abs() < 1e-7);
        assert!((b - 0.181_109_072_605_829).abs() < 1e-12);
        assert!((tilt_of_t(&pair(PI / 4.0), 1.0).unwrap() - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn disturbance_of_t_examples() {
        for a in ALPHAS {
            assert!(disturbance_of_t(&pair(a), 0.0).unwrap().abs() <= 1e-15);
        }
        let p8 = pair(PI / 8.0);
        assert!((disturbance_of_t(&p8, 1.0).unwrap() - 0.066_987_298_107_780_7).abs() < 1e-12);
        // Frozen from an independent numpy evaluation (also matched by the
        // first-principles channel computation).
        assert!((disturbance_of_t(&p8, 0.5).unwrap() - 0.001_123_085_848_768_856_6).abs() < 1e-14);
    }

    #[test]
    fn identical_states_never_disturbed() {
        let p = pair(PI / 4.0);
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            assert!(disturbance_of_t(&p, t).unwrap().abs() < 1e-12);
            assert!((probability_of_t(&p, t).unwrap() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn limits() {
        for a in ALPHAS.iter().copied().chain([0.0, PI / 4.0]) {
            let p = pair(a);
            assert_eq!(probability_of_t(&p, 1.0).unwrap(), helstrom_probability(&p));
            assert!((tilt_of_t(&p, 1.0).unwrap() - helstrom_tilt(&p)).abs() < 1e-12);
            assert!((disturbance_of_t(&p, 1.0).unwrap() - helstrom_disturbance(&p)).abs() < 1e-12);
            assert!(disturbance_of_t(&p, 0.0).unwrap().abs() <= 1e-15);
        }
    }

    #[test]
    fn tilt_agrees_with_plain_arctangent() {
        for a in ALPHAS {
            for k in 0..=20 {
                let t = k as f64 / 20.0;
                let got = tilt_of_t(&pair(a), t).unwrap();
                assert!((got - tilt_via_atan(a, t)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn curve_endpoints_and_grid() {
        let p8 = pair(PI / 8.0);
        let two = tradeoff_curve(&p8, 2).unwrap();
        assert_eq!(
            (two[0].t, two[0].p, two[0].d, two[0].gamma),
            (0.0, 0.5, 0.0, 1.0)
        );
        assert_eq!(two[1].t, 1.0);
        assert_eq!(two[1].gamma, 0.0);
        assert!((two[1].p - 0.853_553_4).abs() < 1e-7);
        assert!((two[1].d - 0.066_987_3).abs() < 1e-7);

        let five = tradeoff_curve(&p8, 5).unwrap();
        let expected = [
            0.0,
            6.302_440_309_358_115e-5,
            1.123_085_848_768_856_6e-3,
            7.216_093_535_139_467e-3,
            6.698_729_810_778_067e-2,
        ];
        for (pt, e) in five.iter().zip(expected) {
            assert!((pt.d - e).abs() < 1e-14, "t = {}: {} vs {}", pt.t, pt.d, e);
        }

        for pt in tradeoff_curve(&pair(0.0), 11).unwrap() {
            assert!(pt.d.abs() < 1e-15);
        }
        assert!(matches!(
            tradeoff_curve(&p8, 1),
            Err(Error::TooSmall { value: 1, .. })
        ));
    }

    #[test]
    fn monotone_on_fine_grid() {
        for a in ALPHAS {
            let curve = tradeoff_curve(&pair(a), 200).unwrap();
            for w in curve.windows(2) {
                assert!(w[1].p > w[0].p);
                assert!(w[1].d >= w[0].d);
            }
        }
    }

    #[test]
    fn t_inversion_round_trips() {
        for a in ALPHAS {
            let p = pair(a);
            for k in 0..=10 {
                let t = k as f64 / 10.0;
                let back = t_of_probability(&p, probability_of_t(&p, t).unwrap()).unwrap();
                assert!((back - t).abs() < 1e-12);
            }
            let over = helstrom_probability(&p) + 1e-6;
            assert!(matches!(
                t_of_probability(&p, over),
                Err(Error::Infeasible { .. })
            ));
        }
        assert_eq!(t_of_probability(&pair(PI / 4.0), 0.5).unwrap(), 0.0);
    }

    #[test]
    fn maximal_helstrom_disturbance_at_pi_over_8() {
        let n = 1000;
        let (argmax, _) = (0..=n)
            .map(|k| (PI / 4.0) * k as f64 / n as f64)
            .map(|a| (a, helstrom_disturbance(&pair(a))))
            .fold((0.0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
        assert!((argmax - PI / 8.0).abs() <= PI / 4.0 / n as f64);
    }
}
