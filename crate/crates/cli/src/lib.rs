pub mod analyze;
pub mod output;
pub mod pipeline;
pub mod report;
