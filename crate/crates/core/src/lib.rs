pub mod geometry;
pub mod gpis;
pub mod hand;
pub mod planner;
pub mod posedomain;
pub mod quality;
pub mod surrogate;
