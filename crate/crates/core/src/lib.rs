pub mod analysis;
pub mod chart;
pub mod expr;
pub mod field;
pub mod flat;
pub mod jet;
pub mod lie;
pub mod multilinear;
pub mod sampling;
pub mod sphere;
pub mod twist;
