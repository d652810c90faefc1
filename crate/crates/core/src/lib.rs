//! Simulation of liquid-state proton NMR free-induction decays with
//! Trotterized quantum circuits.
//!
//! A [`SpinSystem`] (chemical shifts plus scalar couplings) is mapped to a
//! Pauli-sum Hamiltonian, compiled into a product-formula circuit per time
//! point, executed on a state-vector simulator and Fourier transformed into
//! a spectrum. An exact eigendecomposition engine serves as the reference.
//!
//! ```
//! use nmrqsim::{acquire_fid, to_spectrum, AcquisitionConfig, Engine, SpinSystem};
//!
//! let sys = SpinSystem::from_offsets_hz("singlet", &[1000.0], &[]).unwrap();
//! let fid = acquire_fid(&sys, &AcquisitionConfig::default(), Engine::TrotterCircuit).unwrap();
//! let spectrum = to_spectrum(&fid, 0.0).unwrap();
//! assert_eq!(spectrum.peak_bin(), 512);
//! ```

pub mod circuit;
pub mod error;
pub mod hamiltonian;
pub mod simulator;
pub mod spectro;
pub mod spin_model;
pub mod transpiler;

pub use circuit::{
    build_fid_circuit, decompose_to_native, CircuitIR, Gate, GateKind, NativeBasis, ProductFormula,
};
pub use error::{Error, Result};
pub use hamiltonian::{build_terms, exact_evolve, realize_dense, DenseOperator, PauliHamiltonian, PauliTerm};
pub use simulator::{apply_circuit, expectation_mx, sample_mx, StateVector};
pub use spectro::{
    acquire_fid, cosine_distance, to_spectrum, trotter_error_sweep, AcquisitionConfig, Engine, FidRecord,
    Spectrum, SweepPlan,
};
pub use spin_model::{coupling_graph, decompose_clusters, parse_spin_system, SpinCluster, SpinSystem};
pub use transpiler::{heavy_hex, route, scaling_study, StudyOptions, Topology};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/spin-systems.md")]
    mod spin_systems {}
    #[doc = include_str!("../../../book/src/hamiltonian.md")]
    mod hamiltonian {}
    #[doc = include_str!("../../../book/src/circuits.md")]
    mod circuits {}
    #[doc = include_str!("../../../book/src/acquisition.md")]
    mod acquisition {}
    #[doc = include_str!("../../../book/src/spectra.md")]
    mod spectra {}
    #[doc = include_str!("../../../book/src/hardware.md")]
    mod hardware {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
