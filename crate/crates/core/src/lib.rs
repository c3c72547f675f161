pub mod corpus;
pub mod distmat;
pub mod fsutil;
pub mod mds;
pub mod metric;
pub mod oracle;
pub mod python;
pub mod stats;
pub mod synth;
pub mod tda;
pub mod ted;
pub mod tree;

/// Version string recorded in every output sidecar.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
