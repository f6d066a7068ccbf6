//! Trees realizing 0-hyperbolic spaces, the edge-cut formula for their free
//! norms, and the interval-union algorithms behind the tree/ℓ1 analysis.

mod distortion;
mod embed;
mod interval;
mod ultrametric;

pub use distortion::{cell_of, distortion_pair, DistortionPair};
pub use embed::{tree_cut_norm, tree_cut_norm_exact, tree_embed, TreeEmbedding};
pub use interval::{density_interval, DensityWindow, IntervalUnion};
pub use ultrametric::subdominant_ultrametric;
