pub mod assignment;
pub mod clustering;
pub mod config;
pub mod error;
pub mod eval;
pub mod exec;
pub mod fusion;
pub mod geometry;
pub mod oracle;
pub mod pipeline;
pub mod radar_track;
pub mod reid;
pub mod sim;
pub mod thermal_track;
