//! Kinetic models, canonical phase space, Poisson brackets and integrators.

mod hamiltonian;
mod integrate;
mod model;
mod phase;
mod poisson;

pub use hamiltonian::{
    fd_gradient, fd_step, hamilton_rhs, kinetic_hamiltonian, Hamiltonian, ModelHamiltonian, NoPotential,
    Potential,
};
pub use integrate::{simulate, step, Integrator, Sample, MIDPOINT_MAX_ITERATIONS, MIDPOINT_TOL};
pub use model::{
    flatten_momentum, flatten_velocity, isotropic_left_coefficients, kinetic_energy, kinetic_energy_alternative,
    legendre, legendre_inverse, mass_matrix, unflatten_momentum, unflatten_velocity, KineticModel, LeftInternal,
    INERTIA_SINGULARITY_TOL,
};
pub use phase::{flatten_states, momentum_maps, unflatten_states, MomentumMaps, PhaseGradient, PhaseState};
pub use poisson::{bracket_of_gradients, poisson_bracket, Composed, Generator, PhaseFunction};

pub(crate) use phase::metric_skew;
