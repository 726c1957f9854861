//! Mass action chemical reaction networks: exact stoichiometric structure,
//! bifurcation location with transversality certificates, the six network
//! enlargements with their epsilon-parameterized rate schedules, and a
//! numerical harness verifying that enlarged networks inherit bifurcations
//! as epsilon tends to zero.

pub mod bifurcation;
pub mod enlarge;
pub mod error;
pub mod exact;
pub mod gallery;
pub mod inherit;
pub mod lyapunov;
pub mod massaction;
pub mod network;
pub mod parser;
pub mod poly;
pub mod report;

pub use error::{AnalysisError, EnlargeError, ParseError};
pub use network::Network;
