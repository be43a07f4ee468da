//! Saddle-connection complexes on the slit surface and the dichotomy for them.
//!
//! [`geometry`] traces saddle connections across both sheets and decides disjointness,
//! [`cell`] builds complexes and grows them, [`returns`] computes the first-return data of
//! the vertical flow to a strip complex, and [`certificate`] turns that data into either a
//! sampling certificate that trajectories leave or a short closed curve.

pub mod cell;
pub mod certificate;
pub mod geometry;
pub mod returns;

pub use cell::{
    area_bound, grow_complex, max_level, AreaBound, Complex, ComplexError, Dart, Face, GrowStep,
    Triangle,
};
pub use certificate::{
    classify_conflicted, conflict_certificate, dichotomy_check, find_detachment, is_detached,
    CertError, ConflictCertificate, Conflicts, Cycle, Detachment, DichotomyConfig, DichotomyReport,
    Graph,
};
pub use geometry::{
    disjoint, enumerate_saddle_connections, ConePoint, GeometryError, Kind, SaddleConnection,
    SlitGeometry,
};
pub use returns::{return_data, ReturnData, ReturnError};
