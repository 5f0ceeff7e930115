//! Direction sets, exact matrix arithmetic and the positive decomposition
//! of small symmetric traceless stresses.

mod directions;
mod rational;

pub use directions::{
    base_rotation, build_direction_sets, frobenius, minimal_orthogonality, pairwise_disjoint, random_traceless,
    CoefficientSolution, DirectionSet, EpsilonBall,
};
pub use rational::{pythagorean_rotation, q, quaternion_rotation, QMat, QVec};
