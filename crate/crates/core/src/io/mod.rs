//! Extended-XYZ datasets and report files.

mod extxyz;
mod report;

pub use extxyz::{
    parse_comment_line, parse_frames, read_extxyz, read_extxyz_file, write_extxyz,
    write_extxyz_file, ExtXyzFrame,
};
pub use report::{
    round_sig12, write_report, MetricBlock, MetricValue, Parameters, ReportDocument, ReportFormat,
};
