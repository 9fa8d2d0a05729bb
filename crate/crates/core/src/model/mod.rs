//! Hierarchical families of trees over hulls, their 0-consistent cube complexes,
//! and the stability diagram comparing the models of F ⊆ F′.

mod consistent;
mod hft;
mod pipeline;
mod psi;
mod simplicial;
mod thicken;

#[cfg(test)]
mod tests;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hhs::HHSInstance;
use crate::treenet::TreeParams;

pub use consistent::{consistent_set, encode_tuple, ConsistentSet};
pub use hft::{build_hft, model_domains, DomainTree, HftClause, HftData, HftReport};
pub use pipeline::{stabler_pipeline, DomainStability, Diagram, FaceCheck};
pub use psi::{psi_omega, psi_tuple, PsiOmega};
pub use simplicial::SimplicialTree;
pub use thicken::{collapse_tree, thicken, Collapsed, Thickening};

pub const Q_GUARD: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub tree: TreeParams,
    pub r1: usize,
    pub r2: usize,
    /// Relevance threshold; the instance's K when absent.
    pub k: Option<f64>,
    /// Hull neighbourhood radius; the instance's θ when absent.
    pub theta: Option<f64>,
    pub q_guard: usize,
}

impl ModelParams {
    /// (ε, ε′, E) = (0.25, 0.5, 4) with r1 = r2 = 2E.
    pub fn new() -> Self {
        let tree = TreeParams {
            eps: 0.25,
            eps2: 0.5,
            big_e: 4.0,
        };
        Self::with_tree(tree)
    }

    pub fn with_tree(tree: TreeParams) -> Self {
        let r = (2.0 * tree.big_e).ceil() as usize;
        ModelParams {
            tree,
            r1: r,
            r2: r,
            k: None,
            theta: None,
            q_guard: Q_GUARD,
        }
    }

    pub fn with_k(mut self, k: f64) -> Self {
        self.k = Some(k);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.tree.validate()?;
        if self.r1 == 0 || self.r2 == 0 {
            return Err(Error::Configuration(format!("r1 = {}, r2 = {} must be positive", self.r1, self.r2)));
        }
        if let Some(k) = self.k {
            if !(k > 0.0) {
                return Err(Error::Configuration(format!("K = {k} must be positive")));
            }
        }
        Ok(())
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::new()
    }
}

/// HFT, Q and Ψ̂/Ω̂ for one finite set F.
#[derive(Clone, Debug, Serialize)]
pub struct Model {
    pub f: Vec<usize>,
    pub hft: HftData,
    pub q: ConsistentSet,
    pub po: PsiOmega,
}

impl Model {
    pub fn build(inst: &HHSInstance, f: &[usize], params: &ModelParams) -> Result<Self> {
        let hft = build_hft(inst, f, params)?;
        let q = consistent_set(&hft, params.q_guard)?;
        let theta = params.theta.unwrap_or(inst.constants.theta);
        let po = psi_omega(inst, f, &hft, &q, theta)?;
        Ok(Model {
            f: f.to_vec(),
            hft,
            q,
            po,
        })
    }

    /// Q vertex of the i-th marked tuple.
    pub fn marked_vertex(&self, i: usize) -> usize {
        self.q.find(&self.hft.marked_tuple(i)).expect("marked tuples lie in Q")
    }

    /// Local index of an instance domain.
    pub fn local(&self, u: usize) -> Option<usize> {
        self.hft.domains.iter().position(|&d| d == u)
    }
}
