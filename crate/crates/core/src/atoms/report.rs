use serde::{Deserialize, Serialize};

use super::{
    alpha_grid, alpha_sweep, category_rollup, combinatorial_attention, compute_profiles, hierarchical_attention,
    record_input_set, AtomsSettings, AttentionProfiles, Category, CombinatorialAttention, InputSet,
};
use crate::env::{EnvConfig, GameVariant, ObjectId};
use crate::error::Result;
use crate::net::Network;
use crate::scalar::Scalar;

pub const ATOMS_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct AtomsReport {
    pub variant: GameVariant,
    pub alpha: f64,
    pub h: Vec<(ObjectId, f64)>,
    pub combinatorial: CombinatorialAttention,
    pub rollup: Vec<(Category, f64)>,
    /// Inputs that contributed to the metrics.
    pub n_inputs: usize,
    pub degenerate: usize,
    /// Mean F_c relevance of the selected neurons per input.
    pub selected_mass: f64,
    /// Present when the full threshold grid was requested.
    pub sweep: Option<Vec<CombinatorialAttention>>,
}

/// One CSV line of a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomsRow {
    pub schema_version: u32,
    /// `h`, `c`, `noise` or `category`.
    pub metric: String,
    pub key: String,
    pub alpha: Option<f64>,
    pub value: f64,
}

impl AtomsReport {
    pub fn from_profiles(variant: GameVariant, profiles: &AttentionProfiles, alpha: f64, sweep: bool) -> Self {
        let combinatorial = combinatorial_attention(profiles, alpha);
        AtomsReport {
            variant,
            alpha,
            h: hierarchical_attention(profiles),
            rollup: category_rollup(&combinatorial),
            combinatorial,
            n_inputs: profiles.inputs.len(),
            degenerate: profiles.degenerate,
            selected_mass: profiles.selected_mass(),
            sweep: sweep.then(|| alpha_sweep(profiles, &alpha_grid())),
        }
    }

    pub fn h_of(&self, o: ObjectId) -> Option<f64> {
        self.h.iter().find(|(g, _)| *g == o).map(|(_, v)| *v)
    }

    /// Objects sorted by descending hierarchical attention.
    pub fn h_ranking(&self) -> Vec<ObjectId> {
        let mut h = self.h.clone();
        h.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        h.into_iter().map(|(o, _)| o).collect()
    }

    pub fn rows(&self) -> Vec<AtomsRow> {
        let row = |metric: &str, key: String, alpha: Option<f64>, value: f64| AtomsRow {
            schema_version: ATOMS_SCHEMA_VERSION,
            metric: metric.into(),
            key,
            alpha,
            value,
        };
        let mut rows: Vec<AtomsRow> = self.h.iter().map(|(o, v)| row("h", o.name().into(), None, *v)).collect();
        let push_c = |c: &CombinatorialAttention, rows: &mut Vec<AtomsRow>| {
            rows.extend(c.c.iter().map(|(s, v)| row("c", s.to_string(), Some(c.alpha), *v)));
            rows.push(row("noise", "noise".into(), Some(c.alpha), c.noise));
        };
        match &self.sweep {
            Some(sweep) => sweep.iter().for_each(|c| push_c(c, &mut rows)),
            None => push_c(&self.combinatorial, &mut rows),
        }
        rows.extend(self.rollup.iter().map(|(k, v)| row("category", k.name().into(), Some(self.alpha), *v)));
        rows
    }
}

/// Records inputs with `net`, then computes the metrics.
pub fn run_atoms<T: Scalar>(
    net: &Network<T>,
    variant: GameVariant,
    config: &EnvConfig,
    settings: &AtomsSettings,
    seed: u64,
    sweep: bool,
) -> Result<(AtomsReport, InputSet)> {
    settings.validate()?;
    let inputs = record_input_set(net, variant, config, settings.episodes, settings.n_frames, settings.policy, seed)?;
    let profiles = compute_profiles(net, &inputs, settings.fraction, settings.relevance_init)?;
    Ok((AtomsReport::from_profiles(variant, &profiles, settings.alpha, sweep), inputs))
}
