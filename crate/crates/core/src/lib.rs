//! Quasitoric manifolds over cubes: characteristic matrices, Bott towers,
//! semifree circle actions and cohomology rings.

pub mod acceptance;
pub mod census;
pub mod cohomology;
pub mod fan2d;
pub mod intmat;
pub mod quasitoric;
pub mod semifree;
pub mod simplicial;
