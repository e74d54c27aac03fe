pub mod lattice;
pub mod walks;
pub mod hwbounds;
pub mod precise;
pub mod laceexp;
pub mod series;
pub mod hexobs;
pub mod superint;
