pub mod experiments;
pub mod fitness_model;
pub mod multiset;
pub mod quadrature;
pub mod simulator;
pub mod special_functions;
pub mod survival_law;
