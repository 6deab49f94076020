//! Quantum instruments on a qubit: outcome-labelled Kraus collections, their
//! POVMs, averaged channels (as Choi matrices), and first-principles success
//! probability and disturbance for a [`StatePair`].

use crate::analytic::{gamma_of_t, helstrom_tilt, tilt_of_t, StatePair};
use crate::error::{Error, Result};
use crate::qmath::{self, r, Operator, PureState, TOL_ALGEBRA, TOL_POSITIVITY};

/// Probability below which a branch's posterior state is not normalized.
pub const ZERO_PROBABILITY: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub label: u32,
    pub kraus: Vec<Operator>,
}

impl Outcome {
    /// Unnormalized branch `ℰ_i(ρ) = Σ_k E_k ρ E_k†`.
    pub fn apply(&self, rho: &Operator) -> Operator {
        self.kraus
            .iter()
            .map(|e| e.conjugate(rho))
            .fold(Operator::zeros(2).expect("dim 2"), |acc, x| acc + x)
    }

    /// `Π_i = Σ_k E_k† E_k`.
    pub fn effect(&self) -> Operator {
        self.kraus
            .iter()
            .map(|e| e.adjoint() * *e)
            .fold(Operator::zeros(2).expect("dim 2"), |acc, x| acc + x)
    }
}

/// A qubit instrument whose outcome-summed map is trace preserving.
#[derive(Clone, Debug, PartialEq)]
pub struct Instrument {
    outcomes: Vec<Outcome>,
}

impl Instrument {
    /// Validates labels (unique), Kraus lists (nonempty, 2×2) and completeness
    /// `Σ E†E = I` within `1e-12`.
    pub fn new(outcomes: Vec<(u32, Vec<Operator>)>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::Empty("instrument outcomes"));
        }
        let mut seen = Vec::with_capacity(outcomes.len());
        for (label, kraus) in &outcomes {
            if seen.contains(label) {
                return Err(Error::InvalidInstrument("duplicate outcome label"));
            }
            seen.push(*label);
            if kraus.is_empty() {
                return Err(Error::InvalidInstrument("empty Kraus list"));
            }
            if let Some(op) = kraus.iter().find(|op| op.dim() != 2) {
                return Err(Error::DimensionMismatch {
                    left: 2,
                    right: op.dim(),
                });
            }
        }
        let instr = Self {
            outcomes: outcomes
                .into_iter()
                .map(|(label, kraus)| Outcome { label, kraus })
                .collect(),
        };
        let residual = instr.completeness_residual();
        if residual > TOL_ALGEBRA {
            return Err(Error::Completeness(residual));
        }
        Ok(instr)
    }

    /// The do-nothing instrument: one outcome (label 1) with Kraus `I`.
    pub fn identity() -> Self {
        Self {
            outcomes: vec![Outcome {
                label: 1,
                kraus: vec![Operator::id2()],
            }],
        }
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn outcome(&self, label: u32) -> Result<&Outcome> {
        self.outcomes
            .iter()
            .find(|o| o.label == label)
            .ok_or(Error::UnknownOutcome(label))
    }

    /// `max |Σ_i Π_i − I|`.
    pub fn completeness_residual(&self) -> f64 {
        self.outcomes
            .iter()
            .map(Outcome::effect)
            .fold(Operator::zeros(2).expect("dim 2"), |acc, x| acc + x)
            .max_abs_diff(&Operator::id2())
    }

    /// The outcome-averaged channel `ℰ(ρ) = Σ_i ℰ_i(ρ)`.
    pub fn channel(&self, rho: &Operator) -> Operator {
        self.outcomes
            .iter()
            .map(|o| o.apply(rho))
            .fold(Operator::zeros(2).expect("dim 2"), |acc, x| acc + x)
    }

    /// Same instrument with every Kraus operator left-multiplied by the
    /// feedback unitary registered for its outcome.
    pub fn with_feedback(&self, feedback: &[(u32, Operator)]) -> Result<Self> {
        let outcomes = self
            .outcomes
            .iter()
            .map(|o| {
                let v = feedback
                    .iter()
                    .find(|(l, _)| *l == o.label)
                    .map(|(_, v)| *v)
                    .unwrap_or_else(Operator::id2);
                (o.label, o.kraus.iter().map(|e| v * *e).collect())
            })
            .collect();
        Self::new(outcomes)
    }
}

/// Effects of an instrument, in outcome order.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    pub labels: Vec<u32>,
    pub elements: Vec<Operator>,
}

impl Povm {
    pub fn element(&self, label: u32) -> Option<&Operator> {
        self.labels
            .iter()
            .position(|l| *l == label)
            .map(|i| &self.elements[i])
    }
}

/// Choi matrix `J = Σ_{ij} |i⟩⟨j| ⊗ ℰ(|i⟩⟨j|)` (input factor first); trace 2
/// for a trace-preserving qubit channel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChoiMatrix(Operator);

impl ChoiMatrix {
    pub fn of_map(map: impl Fn(&Operator) -> Operator) -> Self {
        let mut j = Operator::zeros(4).expect("dim 4");
        for a in 0..2 {
            for b in 0..2 {
                let mut unit = Operator::zeros(2).expect("dim 2");
                unit.set(a, b, r(1.0));
                let image = map(&unit);
                for x in 0..2 {
                    for y in 0..2 {
                        j.set(2 * a + x, 2 * b + y, image.get(x, y));
                    }
                }
            }
        }
        Self(j)
    }

    pub fn matrix(&self) -> &Operator {
        &self.0
    }

    /// Trace over the output factor; `I` for trace-preserving maps.
    pub fn input_marginal(&self) -> Operator {
        qmath::partial_trace_second(&self.0)
    }

    pub fn is_positive(&self, tol: f64) -> bool {
        self.0.is_positive(tol)
    }
}

/// Outcome of a measurement branch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Posterior {
    State(Operator),
    /// The branch probability was below [`ZERO_PROBABILITY`].
    Undefined,
}

impl Posterior {
    pub fn state(&self) -> Result<Operator> {
        match self {
            Posterior::State(rho) => Ok(*rho),
            Posterior::Undefined => Err(Error::ZeroProbability(0.0)),
        }
    }
}

/// Measure `{|1⟩⟨1|, |2⟩⟨2|}` and prepare the tilted state `U_i|i⟩`, with the
/// tilt from [`helstrom_tilt`].
pub fn helstrom_instrument(pair: &StatePair) -> Instrument {
    let u = Operator::rotation(helstrom_tilt(pair));
    Instrument::new(vec![
        (1, vec![u * Operator::diag2(1.0, 0.0)]),
        (2, vec![u.adjoint() * Operator::diag2(0.0, 1.0)]),
    ])
    .expect("Helstrom instrument is complete")
}

/// Kraus pair of the optimal pure instrument for feedback tilt `beta` and
/// `γ = √(1 − t²)`.
pub fn optimal_kraus(beta: f64, gamma: f64) -> [Operator; 2] {
    let u = Operator::rotation(beta);
    let a = (1.0 - gamma).max(0.0).sqrt() / 2.0;
    let b = (1.0 + gamma).sqrt() / 2.0;
    let z = Operator::pauli_z();
    let id = Operator::id2();
    [
        u * (z.scale(r(a)) + id.scale(r(b))),
        u.adjoint() * (z.scale(r(-a)) + id.scale(r(b))),
    ]
}

/// The minimum-disturbing instrument reaching success probability `P_t`.
pub fn optimal_instrument(pair: &StatePair, t: f64) -> Result<Instrument> {
    let beta = tilt_of_t(pair, t)?;
    let [e1, e2] = optimal_kraus(beta, gamma_of_t(t));
    Instrument::new(vec![(1, vec![e1]), (2, vec![e2])])
}

pub fn povm_of(instr: &Instrument) -> Result<Povm> {
    let residual = instr.completeness_residual();
    if residual > TOL_ALGEBRA {
        return Err(Error::Completeness(residual));
    }
    Ok(Povm {
        labels: instr.outcomes.iter().map(|o| o.label).collect(),
        elements: instr.outcomes.iter().map(Outcome::effect).collect(),
    })
}

/// Probability `Tr[Π_i ρ]` of an outcome and the normalized posterior state.
pub fn apply_outcome(instr: &Instrument, outcome: u32, rho: &Operator) -> Result<(f64, Posterior)> {
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch {
            left: 2,
            right: rho.dim(),
        });
    }
    rho.check_density()?;
    let branch = instr.outcome(outcome)?.apply(rho);
    let prob = branch.trace().re;
    if prob < ZERO_PROBABILITY {
        return Ok((prob.max(0.0), Posterior::Undefined));
    }
    Ok((prob, Posterior::State(branch.scale(r(1.0 / prob)))))
}

/// Choi matrix of the outcome-averaged channel.
pub fn average_channel(instr: &Instrument) -> Result<ChoiMatrix> {
    let choi = ChoiMatrix::of_map(|rho| instr.channel(rho));
    let residual = choi.input_marginal().max_abs_diff(&Operator::id2());
    if residual > TOL_ALGEBRA {
        return Err(Error::Completeness(residual));
    }
    Ok(choi)
}

/// Average probability of declaring the right hypothesis, outcome `i`
/// meaning "the state was ψ_i".
pub fn success_probability(instr: &Instrument, pair: &StatePair) -> Result<f64> {
    let (o1, o2) = match (instr.outcome(1), instr.outcome(2)) {
        (Ok(a), Ok(b)) => (a, b),
        _ => return Err(Error::MissingDiscriminationOutcomes),
    };
    let p1 = o1.effect().expectation(&pair.psi1()).re;
    let p2 = o2.effect().expectation(&pair.psi2()).re;
    Ok(pair.prior() * p1 + pair.prior() * p2)
}

/// Average infidelity `1 − ½ Σ_i ⟨ψ_i|ℰ(|ψ_i⟩⟨ψ_i|)|ψ_i⟩` of the averaged channel.
pub fn disturbance(instr: &Instrument, pair: &StatePair) -> f64 {
    let fid = |psi: PureState| {
        instr
            .channel(&Operator::projector(&psi))
            .expectation(&psi)
            .re
    };
    1.0 - pair.prior() * (fid(pair.psi1()) + fid(pair.psi2()))
}

/// Largest entry-wise difference between two Choi matrices.
pub fn channel_distance(a: &ChoiMatrix, b: &ChoiMatrix) -> Result<f64> {
    if a.0.dim() != b.0.dim() {
        return Err(Error::DimensionMismatch {
            left: a.0.dim(),
            right: b.0.dim(),
        });
    }
    Ok(a.0.max_abs_diff(&b.0))
}

/// Whether a posterior is a valid density operator within the positivity tolerance.
pub fn is_valid_posterior(rho: &Operator) -> bool {
    rho.is_density(TOL_POSITIVITY)
}
