pub mod estimate_rr;
pub mod eval;
pub mod fit;
pub mod kl;
pub mod simulate;
pub mod synth;
