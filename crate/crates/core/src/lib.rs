pub mod error;
pub mod identities;
pub mod ode;
pub mod oracle;
pub mod par;
pub mod partition;
pub mod phi_solver;
pub mod poly;
pub mod quadrature;
pub mod report;

pub use error::{Error, Result};
pub use partition::{BoundReport, CriticalPartition, Interval};
pub use poly::{Polynomial, Root, RootSet};
pub use report::{run_analysis, AnalysisConfig, AnalysisReport, InputKind};
