//! Attention-oriented metrics over relevance maps of the F_c neurons.

mod dissimilarity;
mod inputs;
mod metrics;
mod report;

use serde::{Deserialize, Serialize};

use crate::agent::PolicyMode;
use crate::error::{Error, Result};
use crate::lrp::RelevanceInit;

pub use dissimilarity::{correlation_distance, dissimilarity_matrix, euclidean_distance, DissimilarityMatrix, DistanceMetric};
pub use inputs::{frame_passes_filter, record_input_set, InputSet, InputSetManifest};
pub use metrics::{
    alpha_grid, alpha_sweep, attention_subset, category_rollup, combinatorial_attention, compute_profiles,
    hierarchical_attention, object_mean_relevance, AttentionProfiles, Category, CombinatorialAttention,
    InputProfile, NeuronProfile, ObjectMeanRelevance, ObjectSet,
};
pub use report::{run_atoms, AtomsReport, AtomsRow, ATOMS_SCHEMA_VERSION};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtomsSettings {
    /// Threshold factor: objects count when their mean relevance exceeds
    /// `alpha` times the neuron's largest object mean.
    pub alpha: f64,
    pub episodes: usize,
    pub n_frames: usize,
    /// Share of F_c relevance the selected neurons must cover.
    pub fraction: f64,
    pub relevance_init: RelevanceInit,
    /// Policy used while recording inputs.
    pub policy: PolicyMode,
}

impl Default for AtomsSettings {
    fn default() -> Self {
        AtomsSettings {
            alpha: 0.25,
            episodes: 10,
            n_frames: 150,
            fraction: 0.9,
            relevance_init: RelevanceInit::ClampedLogits,
            policy: PolicyMode::Sampled,
        }
    }
}

impl AtomsSettings {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(Error::Config(format!("fraction {} outside (0, 1]", self.fraction)));
        }
        if self.episodes == 0 || self.n_frames == 0 {
            return Err(Error::Config("episodes and n_frames must be positive".into()));
        }
        Ok(())
    }
}
