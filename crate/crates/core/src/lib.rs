//! Transmission planning studies for renewable integration.
//!
//! The crate covers the steady-state and dynamic study families used when a large
//! wind or solar plant is connected to a transmission grid:
//!
//! - [`grid_model`]: case data, validation and penetration scaling
//! - [`steady_state`]: AC/DC power flow, limit screening, loadability margin
//! - [`adequacy`]: capacity outage tables, LOLE/LOLP, Monte Carlo, ELCC
//! - [`security`]: N-1 enumeration, severity scoring and ranking
//! - [`dynamics`]: classical multi-machine swing simulation with frequency control
//! - [`small_signal`]: linearization, electromechanical modes and intermittency studies
//!
//! Every study can be repeated across renewable output levels from 0% to 100%.

pub mod adequacy;
pub mod dynamics;
pub mod grid_model;
pub mod linalg;
pub mod report;
pub mod security;
pub mod small_signal;
pub mod steady_state;
