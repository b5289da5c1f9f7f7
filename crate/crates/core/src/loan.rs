//! Synthetic HELOC-style applicants labeled by two three-literal rules.
//!
//! The rule branch is chosen by the number of satisfactory trades; within a
//! branch an applicant is good when both the external risk estimate and the
//! revolving burden pass their thresholds. Delinquent applicants are
//! explained by which of those two conditions failed.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::dataset::{Dataset, ExplanationId, LabelId, LabeledInstance, Task};
use crate::error::{Result, TedError};

pub const N_NOISE: usize = 5;
pub const N_FEATURES: usize = 3 + N_NOISE;

/// Trades at or above this count select the first rule.
pub const HIGH_TRADES: u32 = 23;
pub const RULE1_MIN_ERE: u32 = 70;
pub const RULE1_MAX_NFRB: u32 = 63;
pub const RULE2_MIN_ERE: u32 = 76;
pub const RULE2_MAX_NFRB: u32 = 78;

pub const MAX_ERE: u32 = 100;
pub const MAX_NFRB: u32 = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LoanRecord {
    pub num_satisfactory_trades: u32,
    pub external_risk_estimate: u32,
    pub net_fraction_revolving_burden: u32,
    pub noise: [u32; N_NOISE],
}

impl LoanRecord {
    pub fn new(trades: u32, ere: u32, nfrb: u32, noise: [u32; N_NOISE]) -> Result<Self> {
        let r = Self {
            num_satisfactory_trades: trades,
            external_risk_estimate: ere,
            net_fraction_revolving_burden: nfrb,
            noise,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.external_risk_estimate > MAX_ERE {
            return Err(TedError::Format(format!(
                "external risk estimate {} above {MAX_ERE}",
                self.external_risk_estimate
            )));
        }
        if self.net_fraction_revolving_burden > MAX_NFRB {
            return Err(TedError::Format(format!(
                "revolving burden {} above {MAX_NFRB}",
                self.net_fraction_revolving_burden
            )));
        }
        Ok(())
    }

    pub fn features(&self) -> Vec<f64> {
        let mut f = vec![
            f64::from(self.num_satisfactory_trades),
            f64::from(self.external_risk_estimate),
            f64::from(self.net_fraction_revolving_burden),
        ];
        f.extend(self.noise.iter().map(|&v| f64::from(v)));
        f
    }

    pub fn from_features(features: &[f64]) -> Result<Self> {
        if features.len() != N_FEATURES {
            return Err(TedError::DimensionMismatch(format!(
                "expected {N_FEATURES} loan features, got {}",
                features.len()
            )));
        }
        let int = |v: f64| -> Result<u32> {
            if v.is_finite() && v.fract() == 0.0 && (0.0..=f64::from(u32::MAX)).contains(&v) {
                Ok(v as u32)
            } else {
                Err(TedError::Format(format!(
                    "loan field {v} is not a non-negative integer"
                )))
            }
        };
        let mut noise = [0; N_NOISE];
        for (slot, &v) in noise.iter_mut().zip(&features[3..]) {
            *slot = int(v)?;
        }
        Self::new(
            int(features[0])?,
            int(features[1])?,
            int(features[2])?,
            noise,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LoanLabel {
    Good,
    Delinquent,
}

impl LoanLabel {
    pub const ALL: [LoanLabel; 2] = [LoanLabel::Good, LoanLabel::Delinquent];

    pub fn name(self) -> &'static str {
        match self {
            LoanLabel::Good => "good",
            LoanLabel::Delinquent => "delinquent",
        }
    }

    pub fn id(self) -> LabelId {
        LabelId(self as u32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LoanExplanation {
    GoodRule1,
    GoodRule2,
    HiTradesEreViolated,
    HiTradesNfrbViolated,
    HiTradesBothViolated,
    LoTradesEreViolated,
    LoTradesNfrbViolated,
    LoTradesBothViolated,
}

impl LoanExplanation {
    pub const ALL: [LoanExplanation; 8] = [
        LoanExplanation::GoodRule1,
        LoanExplanation::GoodRule2,
        LoanExplanation::HiTradesEreViolated,
        LoanExplanation::HiTradesNfrbViolated,
        LoanExplanation::HiTradesBothViolated,
        LoanExplanation::LoTradesEreViolated,
        LoanExplanation::LoTradesNfrbViolated,
        LoanExplanation::LoTradesBothViolated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LoanExplanation::GoodRule1 => "GoodRule1",
            LoanExplanation::GoodRule2 => "GoodRule2",
            LoanExplanation::HiTradesEreViolated => "HiTrades_EREViolated",
            LoanExplanation::HiTradesNfrbViolated => "HiTrades_NFRBViolated",
            LoanExplanation::HiTradesBothViolated => "HiTrades_BothViolated",
            LoanExplanation::LoTradesEreViolated => "LoTrades_EREViolated",
            LoanExplanation::LoTradesNfrbViolated => "LoTrades_NFRBViolated",
            LoanExplanation::LoTradesBothViolated => "LoTrades_BothViolated",
        }
    }

    pub fn id(self) -> ExplanationId {
        ExplanationId(self as u32)
    }

    pub fn from_id(id: ExplanationId) -> Option<Self> {
        Self::ALL.get(id.index()).copied()
    }

    /// The decision each explanation implies.
    pub fn label(self) -> LoanLabel {
        match self {
            LoanExplanation::GoodRule1 | LoanExplanation::GoodRule2 => LoanLabel::Good,
            _ => LoanLabel::Delinquent,
        }
    }
}

impl fmt::Display for LoanExplanation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn rule_label(record: &LoanRecord) -> (LoanLabel, LoanExplanation) {
    use LoanExplanation::*;
    let high = record.num_satisfactory_trades >= HIGH_TRADES;
    let (min_ere, max_nfrb) = if high {
        (RULE1_MIN_ERE, RULE1_MAX_NFRB)
    } else {
        (RULE2_MIN_ERE, RULE2_MAX_NFRB)
    };
    let ere_ok = record.external_risk_estimate >= min_ere;
    let nfrb_ok = record.net_fraction_revolving_burden <= max_nfrb;
    let explanation = match (high, ere_ok, nfrb_ok) {
        (true, true, true) => GoodRule1,
        (false, true, true) => GoodRule2,
        (true, false, true) => HiTradesEreViolated,
        (true, true, false) => HiTradesNfrbViolated,
        (true, false, false) => HiTradesBothViolated,
        (false, false, true) => LoTradesEreViolated,
        (false, true, false) => LoTradesNfrbViolated,
        (false, false, false) => LoTradesBothViolated,
    };
    (explanation.label(), explanation)
}

pub fn feature_names() -> Vec<String> {
    let mut names = vec!["trades".to_string(), "ere".to_string(), "nfrb".to_string()];
    names.extend((0..N_NOISE).map(|i| format!("n{i}")));
    names
}

pub fn label_names() -> Vec<String> {
    LoanLabel::ALL
        .iter()
        .map(|l| l.name().to_string())
        .collect()
}

pub fn explanation_names() -> Vec<String> {
    LoanExplanation::ALL
        .iter()
        .map(|e| e.name().to_string())
        .collect()
}

fn draw_clamped(rng: &mut ChaCha8Rng, dist: &Normal<f64>, lo: u32, hi: u32) -> u32 {
    let v: f64 = rng.sample(dist);
    v.round().clamp(f64::from(lo), f64::from(hi)) as u32
}

/// Draws `n` applicants from a fixed seeded distribution and labels each with
/// [`rule_label`]. Field centers sit near the rule thresholds so every
/// explanation occurs.
pub fn generate_records(n: usize, seed: u64) -> Result<Vec<LoanRecord>> {
    if n == 0 {
        return Err(TedError::InvalidConfig("n must be at least 1".into()));
    }
    let trades = Normal::new(21.0, 8.0).expect("valid sd");
    let ere = Normal::new(72.0, 10.0).expect("valid sd");
    let nfrb = Normal::new(55.0, 30.0).expect("valid sd");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = (0..n)
        .map(|_| {
            let t = draw_clamped(&mut rng, &trades, 0, 60);
            let e = draw_clamped(&mut rng, &ere, 30, 99);
            let b = draw_clamped(&mut rng, &nfrb, 0, MAX_NFRB);
            let noise = std::array::from_fn(|_| rng.random_range(0..=100u32));
            LoanRecord {
                num_satisfactory_trades: t,
                external_risk_estimate: e,
                net_fraction_revolving_burden: b,
                noise,
            }
        })
        .collect();
    Ok(records)
}

pub fn instance_for(record: &LoanRecord) -> LabeledInstance {
    let (label, explanation) = rule_label(record);
    LabeledInstance::new(record.features(), label.id(), Some(explanation.id()))
}

pub fn generate_synthetic(n: usize, seed: u64) -> Result<Dataset> {
    let instances = generate_records(n, seed)?
        .iter()
        .map(instance_for)
        .collect();
    Ok(Dataset::new(Task::Loan, instances)?.with_seed(Some(seed)))
}

/// Overwrites each label and explanation with the rule outcome for the
/// instance's features. Returns the relabeled instances and how many labels
/// changed.
pub fn relabel_for_consistency(
    instances: Vec<LabeledInstance>,
) -> Result<(Vec<LabeledInstance>, usize)> {
    let mut flips = 0;
    let mut out = Vec::with_capacity(instances.len());
    for mut inst in instances {
        let record = LoanRecord::from_features(&inst.features)?;
        let (label, explanation) = rule_label(&record);
        if inst.label != label.id() {
            flips += 1;
        }
        inst.label = label.id();
        inst.explanation = Some(explanation.id());
        out.push(inst);
    }
    Ok((out, flips))
}
