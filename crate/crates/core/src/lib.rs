//! Calabi affine geometry of graphs of convex functions.
//!
//! For `f` convex on an open domain in `R^n`, the graph of `f` carries the
//! Calabi metric `G = Hess f`, whose Levi-Civita connection, cubic form,
//! Tchebychev vector and curvature are computed here from exact Taylor jets
//! of `f`. On top of that sit the fourth-order affine maximal type and Abreu
//! operators, the warped-product classification cases, Legendre duality and
//! completeness probes.
//!
//! ```
//! use calabi_core::{catalog, CalabiInvariants};
//!
//! let e = catalog::get("thm13a", 2).unwrap();
//! let inv = CalabiInvariants::at(&e.function, &[1.0, 0.0]).unwrap();
//! assert!((inv.connection.pick_j - 3.5).abs() < 1e-12);
//! ```

pub mod catalog;
pub mod dd;
pub mod error;
pub mod expr;
pub mod frames;
pub mod geodesics;
pub mod invariants;
pub mod jets;
pub mod legendre;
pub mod pde;
pub mod report;
pub mod scalar;
pub mod tensor;
pub mod verify;
pub mod warped;

pub use catalog::CatalogEntry;
pub use error::{Error, Result};
pub use expr::{ConvexFunction, Domain, Expression};
pub use frames::{theta_bruteforce, theta_max, EjiriData};
pub use geodesics::{geodesic, length_to_boundary, GeodesicPath, LengthProbe};
pub use invariants::CalabiInvariants;
pub use jets::{finite_difference_jet, jet4, Jet4};
pub use legendre::{duality_defect, legendre_point, AffineTransform, LegendrePair};
pub use pde::{pde_report, PdeReport};
pub use report::{AnalysisReport, Envelope};
pub use warped::{integrate_eta, CaseId, EtaTrajectory, ParamCase};
