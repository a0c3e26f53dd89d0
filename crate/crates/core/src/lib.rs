//! Constrained latent space model (CLSM): a joint mixed-membership model of
//! social links and user behaviors.
//!
//! Nodes carry a membership vector over `K` topics. Links are generated by an
//! assortative mixed-membership blockmodel, and every behavior a node selects
//! reuses one of the topic indicators that generated that node's links. The
//! crate provides the generative sampler, linear-time coordinate-ascent
//! variational inference, fold-in inference for unseen nodes, the link and
//! attribute prediction evaluation harnesses, and the file formats used by the
//! `clsm` command-line tool.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod behavior;
pub mod cli;
pub mod error;
pub mod eval;
pub mod generative;
pub mod graph;
pub mod hyper;
pub mod inference;
pub mod io;
pub mod math;
pub mod model;
pub mod streams;

pub use behavior::{BehaviorData, Selection};
pub use error::{ClsmError, Result};
pub use generative::{generate_dataset, GroundTruth, SimConfig, TopicSource};
pub use graph::{Graph, Incidence};
pub use hyper::Hyperparams;
pub use inference::{fit, FitConfig, FitReport, OmegaMode, PhiBarMode};
pub use model::{FittedModel, VariationalState};
