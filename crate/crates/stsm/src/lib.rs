pub mod dataset;
pub mod gateway;
pub mod linearize;
pub mod metrics;
pub mod optimize;
pub mod pipeline;
pub mod record;
pub mod seed;
pub mod select;
pub mod synthetic;
pub mod text;
