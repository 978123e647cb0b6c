//! Link models for backscatter-assisted communication in straight rail
//! tunnels.
//!
//! The central quantity is `P(N)`, the probability that the `N`-tag
//! backscatter link gain beats the direct link gain. It can be obtained
//! by Monte Carlo ([`montecarlo`]), by exact quadrature in the random-phase
//! case, or through Gaussian and Gamma closed forms ([`analytic`]).
//!
//! ```
//! use bstunnel::{analytic, build_layout, TunnelGeometry};
//!
//! let geom = TunnelGeometry::reference(40.0).unwrap();
//! let layout = build_layout(&geom, 20, 20.0, 2.0, 0.5).unwrap();
//! let moments = analytic::random_moments(&layout);
//! let p = analytic::p_random_gamma(&moments, layout.c_const()).unwrap();
//! assert!(p.value > 0.0 && p.value < 1.0);
//! ```

pub mod analytic;
pub mod baseband;
pub mod fading;
pub mod geometry;
pub mod montecarlo;
pub mod quadrature;
pub mod rng;
pub mod specfun;

pub use analytic::{AdjustableMoments, Method, ProbabilityEstimate, RandomMoments};
pub use fading::{ChannelDraw, PhasePolicy, PhaseRegime};
pub use geometry::{build_layout, tag_position, DeploymentLayout, GeometryError, TunnelGeometry};
pub use montecarlo::McConfig;
pub use specfun::GammaParams;
