//! Thermodynamic resource sheets coupled to a Goodwin growth-cycle economy.
//!
//! ```
//! use thermoecon::scenario::preset;
//!
//! let mut spec = preset("case2-optimal")?;
//! spec.horizon = 1.0;
//! spec.dt = 1e-2;
//! let run = spec.run()?;
//! assert_eq!(run.samples.first().unwrap().t, 0.0);
//! # Ok::<(), thermoecon::Error>(())
//! ```

pub mod coupling;
pub mod economy;
pub mod emit;
mod error;
pub mod integrator;
pub mod intensity;
pub mod metrics;
pub mod rk4;
pub mod scenario;
pub mod sheet;
pub mod svg;
pub mod sweep;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/sheet.md")]
    struct Sheet;
    #[doc = include_str!("../../../book/src/intensity.md")]
    struct Intensity;
    #[doc = include_str!("../../../book/src/economy.md")]
    struct Economy;
    #[doc = include_str!("../../../book/src/coupling.md")]
    struct Coupling;
    #[doc = include_str!("../../../book/src/scenarios.md")]
    struct Scenarios;
}
