pub mod classify;
pub mod csi;
pub mod features;
pub mod phase;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod sim;
