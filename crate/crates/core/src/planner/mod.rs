//! Plan language, logical and physical plans, rewrite rules and execution.

pub mod dsl;
pub mod exec;
pub mod explain;
pub mod logical;
pub mod lower;
pub mod plan;
pub mod rules;

pub use dsl::{parse_plan, FnSpec};
pub use explain::explain;
pub use logical::{upper_filter, Label, LogicalNode, LogicalOp, LogicalPlan, NodeId, TableSource};
pub use lower::lower;
pub use plan::{PhysNode, PhysOp, PhysicalPlan};
pub use rules::{apply_rewrite, optimize, OptimizeReport, Rule, RuleOptions, RuleOutcome, PRIORITY};
pub use exec::{execute, execute_node, open_table, read_outputs, read_table, ExecReport, StageTiming, ViewDef};
