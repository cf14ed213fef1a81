pub mod belief;
pub mod encoder;
pub mod geometry;
pub mod planners;
pub mod simharness;
