//! Numerical certificates for electromagnetic trapped modes in waveguides.
//!
//! The crate computes the ingredients that existence criteria for discrete
//! spectrum of the Maxwell operator reduce to: 2D Dirichlet/Neumann
//! Laplacian eigenvalues on rectilinear domains (P1 finite elements and a
//! shift-invert subspace eigensolver), the roots of the Poincaré–Friedrichs
//! transcendental equation, series constants, and Rayleigh quotients of
//! explicit test fields. Each criterion is reported as a signed
//! [`Certificate`](certificates::Certificate): negative margin means the
//! criterion holds.
//!
//! Module map:
//!
//! * [`geometry`] – domain presets, strip truncation, structured triangulation
//! * [`fem2d`] – P1 assembly, quadrature, gradients
//! * [`eigensolve`] – generalized symmetric eigenpairs and the 1D oracle
//! * [`spectra`] – analytic spectra, FEM spectra, essential spectrum
//! * [`modes`] – explicit mode and test-field constructors, FD residuals
//! * [`certificates`] – every criterion as a signed margin

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificates;
pub mod eigensolve;
pub mod fem2d;
pub mod geometry;
pub mod modes;
pub mod spectra;
pub mod summation;

pub use certificates::{Certificate, KappaRoot, Provenance, Quantity, TripodeConstants, Verdict};
pub use eigensolve::EigenResult;
pub use fem2d::{BoundaryCondition, FEFunction, ScalarField2D, SymSparse};
pub use geometry::{EdgeTag, Preset, Rect, RectilinearDomain2D, StripPort, TriMesh};
pub use modes::VectorField3;
pub use spectra::{CrossSection, EssentialSpectrum};
