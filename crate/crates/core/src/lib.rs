pub mod config;
pub mod degradation;
pub mod dispatch;
pub mod economics;
pub mod electrolyzer;
pub mod figures;
pub mod lifecycle;
pub mod output;
pub mod solver;
pub mod sweep;
pub mod timeseries;
