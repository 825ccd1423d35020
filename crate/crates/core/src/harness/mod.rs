//! Log I/O, synthetic campaigns, prediction scoring and flow tables.

pub mod eval;
pub mod flow;
pub mod log;
pub mod synth;

pub use self::eval::{area_rms_error, evaluate_logs, evaluate_predictions, EvalConfig, EvalReport};
pub use self::flow::{export_flow_curve, FlowPoint};
pub use self::log::{read_log, write_log, LogMeta, PistonUnits, SensorLog};
pub use self::synth::{generate_synthetic, Excitation, Noise, SynthConfig};
