//! Post-hoc sparsification of softmax-parameterized discrete distributions.
//!
//! The final linear layer of a classifier (or a CVAE latent prior) is
//! reinterpreted as a Dempster–Shafer evidential classifier. Classes that
//! receive no direct evidence from the features carry zero singleton mass
//! and are filtered out of the softmax distribution.
//!
//! ```
//! use evsparse::{sparsify, FeatureVector, LastLayerParams, Tolerance};
//!
//! let model = LastLayerParams::new(vec![vec![1.0], vec![-1.0]], vec![0.5, -0.5])?;
//! let phi = FeatureVector::new(vec![2.0])?;
//! let filtered = sparsify(&model, &phi, Tolerance::default())?;
//! assert_eq!(filtered.support(), &[0]);
//! # Ok::<(), evsparse::Error>(())
//! ```
//!
//! [`oracle`] holds a brute-force power-set implementation used to validate
//! the closed forms, [`baselines`] the sparsemax and softmax comparisons, and
//! [`metrics`] the distribution distances.

pub mod baselines;
mod error;
pub mod evidential;
pub mod metrics;
pub mod oracle;
pub mod pipeline;

pub use error::{Error, ErrorKind, Result};
pub use evidential::{
    alpha_params, center_params, evidential_weights, filter_distribution, logits,
    singleton_mass_signs, singleton_masses_unnormalized, softmax, sparsify, sparsify_detailed,
    AlphaParams, CenteredParams, Distribution, EvidentialWeights, FeatureVector, LastLayerParams,
    SingletonMassReport, SparseDistribution, SparsifyOutput, Tolerance,
};
