//! Consultant service: knowledge-base loading, scripted sessions, text
//! reports and the HTTP API.

pub mod events;
pub mod load;
pub mod report;
pub mod script;
pub mod server;

pub use load::{load_kb, LoadError, LoadedKb};
pub use script::{parse_script, ScriptError, Step};
