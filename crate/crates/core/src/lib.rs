//! Systole dynamics of a two-sheeted slit torus under the Teichmüller flow.
//!
//! The modules follow the pipeline: continued fractions of the rotation number
//! ([`number_theory`]), holonomy and flowed lengths ([`holonomy`]), candidate short
//! curves and systole trajectories ([`surface`]), statistics of the trajectory
//! ([`laws`]), the vertical flow as a skew product ([`flow`]), and the saddle-connection
//! complexes behind the dichotomy argument ([`complex`]).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod complex;
pub mod flow;
pub mod holonomy;
pub mod interval;
pub mod laws;
pub mod number_theory;
pub mod surface;

pub use holonomy::{envelope_min, flow_length, min_length_time, FlowTime, Holonomy};
pub use interval::{Dyadic, Interval, LogInterval};
pub use number_theory::{AlphaSpec, ConvergentTable, TableOptions};
pub use surface::{
    build_surface, enumerate_candidates, systole_trajectory, SlitTorusSurface, SurfaceMode,
    SurfaceOptions,
};
