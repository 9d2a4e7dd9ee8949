//! Configuration files, run directories and plot-data output.

pub mod config;
pub mod plot;
pub mod rundir;

pub use config::{emit_config, load_config, parse_config, ConfigError, ConfigFile};
pub use plot::{emit_plot_data, plot_data_text, write_table_csv};
pub use rundir::{load_snapshot, read_run, save_snapshot, write_run, LoadedRun, RunDirError, RunManifest};
