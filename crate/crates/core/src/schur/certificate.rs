use serde::{Deserialize, Serialize};

use crate::element::{pairing, LipschitzFunction};
use crate::error::{Error, Result};
use crate::schur::glue::{glue_witness, WitnessCertificate, WitnessFailure, GLUE_LIP};
use crate::schur::hump::{gliding_hump, HumpReport};
use crate::schur::sequence::{de_bounds, osc_ca, wca_bruteforce, ElementSequence, WCA_CAP};
use crate::transport::{free_norm, CERT_TOL};

pub const WDE_NOTE: &str = "wde (infimum of the dual oscillation over subsequences) has no finite \
certified estimator; only de bounds on the full sequence are reported";

/// Finite form of the characterization inequality along the retained
/// subsequence: `min ‖μ_n‖ ≤ ratio · min ⟨g/3, μ_n⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationBound {
    /// Sequence positions of the retained items.
    pub retained_items: Vec<usize>,
    pub norm_limsup: f64,
    pub functional_limsup: f64,
    /// `max(0, max_n ‖μ_n‖ − ⟨g, μ_n⟩)`.
    pub max_shortfall: f64,
    /// `3 / (1 − shortfall / norm_limsup)`; absent when the shortfall
    /// swallows the norm.
    pub ratio_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchurReport {
    pub ca: f64,
    pub de_lower: f64,
    pub de_upper: f64,
    pub wca_estimate: Option<f64>,
    pub wde_note: String,
    /// `norm_limsup / functional_limsup` of the characterization bound.
    pub ratio_certified: Option<f64>,
    pub characterization: Option<CharacterizationBound>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchurOutcome {
    pub report: SchurReport,
    pub hump: Option<HumpReport>,
    pub witness: Option<WitnessCertificate>,
    pub failure: Option<WitnessFailure>,
}

/// Runs the gliding hump and the gluing construction on `seq` and certifies
/// the resulting bounds with independent norm and pairing evaluations.
pub fn schur_certificate(seq: &ElementSequence, epsilon: f64) -> Result<SchurOutcome> {
    let space = seq.space();
    if !space.is_integer() {
        return Err(Error::RequiresIntegerMetric);
    }
    let ca = osc_ca(seq)?;
    let wca_estimate = if (2..=WCA_CAP).contains(&seq.len()) {
        Some(wca_bruteforce(seq, 2)?)
    } else {
        None
    };
    let mut report = SchurReport {
        ca,
        de_lower: 0.0,
        de_upper: ca,
        wca_estimate,
        wde_note: WDE_NOTE.to_string(),
        ratio_certified: None,
        characterization: None,
    };
    if ca <= CERT_TOL * seq.bound().max(1.0) {
        return Ok(SchurOutcome {
            report,
            hump: None,
            witness: None,
            failure: None,
        });
    }

    let (blocks, hump) = gliding_hump(seq, epsilon)?;
    let witness = match glue_witness(space, &blocks, 0.0, None) {
        Ok(witness) => witness,
        Err(Error::WitnessFailure(failure)) => {
            return Ok(SchurOutcome {
                report,
                hump: Some(hump),
                witness: None,
                failure: Some(*failure),
            })
        }
        Err(e) => return Err(e),
    };

    let third = LipschitzFunction::new(
        space,
        witness.g.values.iter().map(|v| v / GLUE_LIP as f64).collect(),
    )?;
    let (de_lower, de_upper) = de_bounds(seq, &[third])?;
    report.de_lower = de_lower;
    report.de_upper = de_upper;

    let retained_items: Vec<usize> = witness.retained.iter().map(|&n| hump.retained_items[n]).collect();
    let mut norm_limsup = f64::INFINITY;
    let mut min_pairing = f64::INFINITY;
    let mut max_shortfall = 0.0f64;
    for &k in &retained_items {
        let item = &seq.items()[k];
        let norm = free_norm(space, item)?.value;
        let value = pairing(&witness.g, item)?;
        norm_limsup = norm_limsup.min(norm);
        min_pairing = min_pairing.min(value);
        max_shortfall = max_shortfall.max(norm - value);
    }
    let functional_limsup = min_pairing / GLUE_LIP as f64;
    let ratio_bound = (max_shortfall < norm_limsup)
        .then(|| GLUE_LIP as f64 / (1.0 - max_shortfall / norm_limsup));
    let ratio = (functional_limsup > 0.0).then(|| norm_limsup / functional_limsup);
    if let (Some(ratio), Some(bound)) = (ratio, ratio_bound) {
        if ratio > bound * (1.0 + CERT_TOL) {
            return Err(Error::CertificateFailed(format!(
                "ratio {ratio} exceeds its shortfall bound {bound}"
            )));
        }
    }
    report.ratio_certified = ratio;
    report.characterization = Some(CharacterizationBound {
        retained_items,
        norm_limsup,
        functional_limsup,
        max_shortfall,
        ratio_bound,
    });
    Ok(SchurOutcome {
        report,
        hump: Some(hump),
        witness: Some(witness),
        failure: None,
    })
}
