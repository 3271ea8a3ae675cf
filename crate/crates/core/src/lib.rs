pub mod cli;
pub mod decay;
pub mod error;
pub mod jost;
pub mod kernels;
pub mod numeric;
pub mod potential;
pub mod propagator;
pub mod scattering;
pub mod wiener;
