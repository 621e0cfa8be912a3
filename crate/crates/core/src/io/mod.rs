//! The problem file format, report rendering and DOT export.

mod dot;
mod format;
mod report;

pub use dot::{export_dot, DotError};
pub use format::{parse_contacts, parse_problem, write_problem, ParseError, ProblemDocument, Record};
pub use report::{
    render_essential, render_feasibility, render_report, render_verdict, ReportError, ReportFormat, ReportOptions,
};
