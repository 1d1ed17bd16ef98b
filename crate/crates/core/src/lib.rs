pub mod baseline;
pub mod cfront;
pub mod dot;
pub mod eval;
pub mod pdg;
pub mod pipeline;
pub mod rater;
pub mod scorer;
pub mod slicer;
