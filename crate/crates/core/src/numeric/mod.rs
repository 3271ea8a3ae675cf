//! Numerical building blocks shared by the physics modules.

pub mod filon;
pub mod fit;
pub mod fresnel;
pub mod magnus;
pub mod quad;
pub mod roots;
pub mod spline;
