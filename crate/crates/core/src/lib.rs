pub mod asym;
pub mod config;
pub mod dist;
pub mod mc;
pub mod quad;
pub mod renewal;
pub mod report;
pub mod validate;
