pub mod bridge;
pub mod cli;
pub mod coalition;
pub mod model;
pub mod seed;
pub mod shnap;
pub mod snap;
pub mod stats;
pub mod volume;
