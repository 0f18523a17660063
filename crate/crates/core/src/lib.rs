//! Window decoding toolkit for topological quantum error-correcting codes.
//!
//! The crate decodes repetition- and surface-code memory experiments with
//! minimum-weight matching, splits the decoding graph into sliding or
//! parallel windows, computes per-window soft information (spatiotemporal
//! complementary gaps), and drives an adaptive scheme that enlarges the
//! window buffer only when the soft information signals an unreliable
//! result. Monte Carlo and prediction machinery reproduce the associated
//! trade-off curves.

pub mod adaptive;
pub mod analysis;
pub mod blossom;
pub mod config;
pub mod dijkstra;
pub mod error;
pub mod fmt;
pub mod graph;
pub mod gaps;
pub mod graph_io;
pub mod matcher;
pub mod sim;
pub mod window;

pub use blossom::BlossomSolver;
