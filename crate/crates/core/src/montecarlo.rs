//! Shot-by-shot simulation of the discrimination-then-reprepare experiment.
//!
//! Each shot draws one of the two states with probability ½, samples an
//! outcome from the Born rule, scores the guess and records the exact fidelity
//! of the post-measurement branch. Shots are processed in fixed-size chunks;
//! chunk `k` draws from `ChaCha8Rng::seed_from_u64(seed)` on stream `k`, and
//! chunk statistics are merged in chunk order, so results do not depend on the
//! thread schedule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytic::StatePair;
use crate::error::{Error, Result};
use crate::instrument::{optimal_instrument, Instrument};
use crate::par;
use crate::qmath::{Complex, Operator, PureState};
use crate::schemes::{
    kerr_effective_instrument, parity_feedback, parity_projector, FeedbackMode, KerrScheme,
    ParityScheme,
};

/// Shots per independently seeded chunk.
pub const CHUNK_SHOTS: u64 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimScheme {
    Optimal,
    Kerr(FeedbackMode),
    Parity,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    pub shots: u64,
    pub seed: u64,
    pub alpha: f64,
    /// `t` for the optimal and parity schemes, `φ` for the Kerr scheme.
    pub t_or_phi: f64,
    pub scheme: SimScheme,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimEstimate {
    pub p_hat: f64,
    pub p_se: f64,
    pub d_hat: f64,
    pub d_se: f64,
    /// Parity-check failures ("n" events); always 0 for deterministic schemes.
    pub discarded: u64,
    pub shots_used: u64,
    /// Kept shots per outcome label (1, 2).
    pub outcome_counts: [u64; 2],
}

/// Running mean and sum of squared deviations.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let (na, nb) = (self.n as f64, other.n as f64);
        self.mean += delta * nb / n as f64;
        self.m2 += other.m2 + delta * delta * na * nb / n as f64;
        self.n = n;
    }

    fn standard_error(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        (self.m2.max(0.0) / (n - 1.0) / n).sqrt()
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct Tally {
    correct: Moments,
    infidelity: Moments,
    discarded: u64,
    outcomes: [u64; 2],
}

impl Tally {
    fn merge(&mut self, other: &Tally) {
        self.correct.merge(&other.correct);
        self.infidelity.merge(&other.infidelity);
        self.discarded += other.discarded;
        self.outcomes[0] += other.outcomes[0];
        self.outcomes[1] += other.outcomes[1];
    }

    fn record(&mut self, truth: usize, guess: u32, infidelity: f64) {
        self.correct.push(if guess as usize == truth + 1 {
            1.0
        } else {
            0.0
        });
        self.infidelity.push(infidelity);
        self.outcomes[guess as usize - 1] += 1;
    }
}

type Vec2 = [Complex; 2];

fn apply2(op: &Operator, v: &Vec2) -> Vec2 {
    [
        op.get(0, 0) * v[0] + op.get(0, 1) * v[1],
        op.get(1, 0) * v[0] + op.get(1, 1) * v[1],
    ]
}

fn norm_sqr2(v: &Vec2) -> f64 {
    v[0].norm_sqr() + v[1].norm_sqr()
}

/// `1 − |⟨ψ|φ⟩|²/‖φ‖²` for unit `ψ`, via `‖ψ‖²‖φ‖² − |⟨ψ|φ⟩|² = |ψ₁φ₂ − ψ₂φ₁|²`,
/// which stays exact when `φ ∥ ψ`.
fn infidelity(psi: &Vec2, phi: &Vec2) -> f64 {
    (psi[0] * phi[1] - psi[1] * phi[0]).norm_sqr() / norm_sqr2(phi)
}

/// Index of the first cumulative weight exceeding `u`, defaulting to the last.
fn pick(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return k;
        }
    }
    weights.len() - 1
}

enum Sampler {
    /// Fine-grained Kraus list `(label, K)` of a trace-preserving instrument.
    Instrument(Vec<(u32, Operator)>),
    /// Joint system–probe simulation with post-selection on even parity.
    Parity {
        projector: Operator,
        probe: PureState,
        basis: [PureState; 2],
        feedback: [Operator; 2],
    },
}

impl Sampler {
    fn from_instrument(instr: &Instrument) -> Self {
        Sampler::Instrument(
            instr
                .outcomes()
                .iter()
                .flat_map(|o| o.kraus.iter().map(move |k| (o.label, *k)))
                .collect(),
        )
    }

    fn new(config: &SimConfig, pair: &StatePair) -> Result<Self> {
        match config.scheme {
            SimScheme::Optimal => Ok(Self::from_instrument(&optimal_instrument(
                pair,
                config.t_or_phi,
            )?)),
            SimScheme::Kerr(mode) => {
                let scheme = KerrScheme::new(config.t_or_phi, mode)?;
                Ok(Self::from_instrument(&kerr_effective_instrument(
                    &scheme, pair,
                )?))
            }
            SimScheme::Parity => {
                let scheme = ParityScheme::new(config.t_or_phi)?;
                Ok(Sampler::Parity {
                    projector: parity_projector(),
                    probe: ParityScheme::probe_state(),
                    basis: scheme.probe_basis(),
                    feedback: parity_feedback(&scheme, pair)?,
                })
            }
        }
    }

    fn shot<R: Rng>(&self, states: &[PureState; 2], rng: &mut R, tally: &mut Tally) {
        let truth = usize::from(rng.random::<bool>());
        let psi = states[truth];
        let psi2: Vec2 = [psi.amplitudes()[0], psi.amplitudes()[1]];
        match self {
            Sampler::Instrument(kraus) => {
                let mut branches = [[Complex::default(); 2]; 8];
                let mut weights = [0.0; 8];
                for (k, (_, op)) in kraus.iter().enumerate() {
                    branches[k] = apply2(op, &psi2);
                    weights[k] = norm_sqr2(&branches[k]);
                }
                let k = pick(&weights[..kraus.len()], rng.random());
                tally.record(truth, kraus[k].0, infidelity(&psi2, &branches[k]));
            }
            Sampler::Parity {
                projector,
                probe,
                basis,
                feedback,
            } => {
                let joint = psi.tensor(probe).expect("qubit ⊗ qubit");
                let kept = projector.apply(&joint);
                let p_keep: f64 = kept.iter().map(|z| z.norm_sqr()).sum();
                if rng.random::<f64>() >= p_keep {
                    tally.discarded += 1;
                    return;
                }
                let mut branches = [[Complex::default(); 2]; 2];
                let mut weights = [0.0; 2];
                for (m, probe_out) in basis.iter().enumerate() {
                    let b = probe_out.amplitudes();
                    let system = [
                        b[0].conj() * kept[0] + b[1].conj() * kept[1],
                        b[0].conj() * kept[2] + b[1].conj() * kept[3],
                    ];
                    branches[m] = apply2(&feedback[m], &system);
                    weights[m] = norm_sqr2(&branches[m]);
                }
                let m = pick(&weights, rng.random::<f64>() * p_keep);
                tally.record(truth, m as u32 + 1, infidelity(&psi2, &branches[m]));
            }
        }
    }
}

fn validate(config: &SimConfig) -> Result<StatePair> {
    if config.shots == 0 {
        return Err(Error::TooSmall {
            what: "shots",
            value: 0,
            min: 1,
        });
    }
    StatePair::new(config.alpha)
}

/// Simulates `config.shots` shots. Deterministic for a fixed config.
pub fn run(config: &SimConfig) -> Result<SimEstimate> {
    let pair = validate(config)?;
    let sampler = Sampler::new(config, &pair)?;
    if let Sampler::Instrument(kraus) = &sampler {
        if kraus.len() > 8 {
            return Err(Error::InvalidInstrument("more than 8 Kraus operators"));
        }
    }
    let states = [pair.psi1(), pair.psi2()];
    let chunks: Vec<u64> = (0..config.shots.div_ceil(CHUNK_SHOTS)).collect();
    let tallies = par::map(chunks, |chunk| {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(chunk);
        let shots = CHUNK_SHOTS.min(config.shots - chunk * CHUNK_SHOTS);
        let mut tally = Tally::default();
        for _ in 0..shots {
            sampler.shot(&states, &mut rng, &mut tally);
        }
        tally
    });
    let mut total = Tally::default();
    for t in &tallies {
        total.merge(t);
    }
    Ok(SimEstimate {
        p_hat: total.correct.mean,
        p_se: total.correct.standard_error(),
        d_hat: total.infidelity.mean,
        d_se: total.infidelity.standard_error(),
        discarded: total.discarded,
        shots_used: total.correct.n,
        outcome_counts: total.outcomes,
    })
}

/// Runs every config with its own seed, preserving order. Use
/// [`split_seeds`] to derive those seeds from a single base seed.
pub fn sweep(configs: &[SimConfig]) -> Result<Vec<SimEstimate>> {
    if configs.is_empty() {
        return Err(Error::Empty("sweep configs"));
    }
    par::map(configs.to_vec(), |c| run(&c))
        .into_iter()
        .collect()
}

/// Seed of config `i`: `splitmix64(base + (i + 1)·0x9E3779B97F4A7C15)`.
pub fn split_seeds(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64)
        .map(|i| splitmix64(base.wrapping_add((i + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))))
        .collect()
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
