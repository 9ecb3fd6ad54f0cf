pub mod cli;
pub mod counterexample;
pub mod criteria;
pub mod error;
pub mod lattice_dist;
pub mod logexpr;
pub mod montecarlo;
pub mod quad_comb;
pub mod quadrature;
pub mod skeleton;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use lattice_dist::LatticePmf;
pub use quad_comb::{Config, DrrwSpec, Letter, Model, QuadCombSpec, TailRule};
pub use skeleton::{ConditionalJumpLaws, InternalKernel, Skeleton};
pub use spectral::{JumpLaw, Marginal, MarkovWalk};
