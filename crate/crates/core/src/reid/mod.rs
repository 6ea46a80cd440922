//! Gait-based re-identification: a handcrafted window descriptor, the labeled
//! feature store, and weighted-ELM classification with cumulative scoring.

mod features;
mod store;
mod welm;

pub use features::{extract_features, GaitFeature, FEATURE_DIM};
pub use store::{FeatureStore, StoreRecord};
pub use welm::{
    cs_baseline, cumulative_scores, reidentify, reidentify_with_store, welm_dual_form_gap,
    welm_score, welm_train, welm_train_with, ClosedForm, WelmModel, WelmParams,
};
