//! Source functions, source-order pairs, qualification levels, the classical
//! order, the Mathé-Pereverzev condition and the constructive weak
//! qualification.

mod classical;
mod classify;
mod construct;
mod limits;
mod mp;
mod pairs;

pub use classical::{default_mu_grid, estimate_classical_order, Mu0Interval, MuTest};
pub use classify::{
    candidate_sources, classify, classify_with, estimate_srho, estimate_srho_dyn, srho_source, Evidence, Level,
    QualificationReport, SrhoEntry, NO_CERTIFICATE, SCHEMA_VERSION,
};
pub use construct::{construct_weak_qualification, default_construct_lambdas, ConstructResult, ThetaRow};
pub use limits::{
    estimate_limit, log_err, EstimatorConfig, GridMeta, LimitEstimate, LimitKind, LimitStatus, COARSE_ERR,
    CONVERGENCE_TOL, HALVING_TOL, PRECISE_ERR,
};
pub use mp::{check_companion, check_mp_qualification, default_mp_a, MpDetail, MpVerdict, COMPANION_TOL};
pub use pairs::{
    check_order_source_pair, check_strong_pair, check_weak_pair, pair_limsups, strong_verdict, weak_verdict,
    PairSample, PairVerdict, PairWitness,
};

use crate::error::{Error, Result};
use crate::filters::FilterFamily;
use crate::funcdsl::{OrderLike, SourceLike};
use crate::numerics::AlphaGrid;

/// Serde adapter writing non-finite reals as `"+inf"`, `"-inf"`, `"nan"`.
pub mod ext {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("+inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(s) => match s.as_str() {
                "+inf" | "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("bad extended real `{other}`"))),
            },
        }
    }

    /// Same for `Option<f64>`.
    pub mod opt {
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
            match v {
                Some(x) => super::serialize(x, s),
                None => s.serialize_none(),
            }
        }

        #[derive(Deserialize)]
        struct W(#[serde(with = "super")] f64);

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
            Ok(Option::<W>::deserialize(d)?.map(|w| w.0))
        }
    }
}

/// Standard estimation grid for `filter`.
pub fn default_alpha_grid(filter: &FilterFamily) -> AlphaGrid {
    AlphaGrid::standard(filter.alpha_max, filter.oscillatory)
}

pub(crate) fn check_grid(filter: &FilterFamily, grid: &AlphaGrid) -> Result<()> {
    if grid.alpha_max > filter.alpha_max {
        return Err(Error::ParamOutOfRange {
            name: "alpha_max".into(),
            value: grid.alpha_max,
            reason: format!("grid must lie in (0, {}]", filter.alpha_max),
        });
    }
    if grid.alpha_max >= 1.0 && filter.id == "ex10_osc" {
        return Err(Error::ParamOutOfRange {
            name: "alpha_max".into(),
            value: grid.alpha_max,
            reason: "must be below 1".into(),
        });
    }
    Ok(())
}

pub(crate) fn require_order(rho: &dyn OrderLike) -> Result<()> {
    if rho.certified() {
        Ok(())
    } else {
        Err(Error::Uncertified(rho.describe()))
    }
}

pub(crate) fn require_source(s: &dyn SourceLike) -> Result<()> {
    if s.certified() {
        Ok(())
    } else {
        Err(Error::Uncertified(s.describe()))
    }
}

/// Estimator settings for limits involving `filter` and `rho`.
pub(crate) fn estimator_for(filter: &FilterFamily, rho: &dyn OrderLike, grid: &AlphaGrid) -> EstimatorConfig {
    let floor = filter.min_log_alpha().max(rho.min_log_alpha());
    EstimatorConfig::new(*grid, floor, filter.oscillatory)
}
