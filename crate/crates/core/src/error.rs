use num_complex::Complex64;
use thiserror::Error;

/// Every failure mode of the library. Variants carry the offending value so
/// that callers (and the CLI report) can say what went wrong without a
/// debugger.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("modulus tau = {0} is not in the upper half plane")]
    InvalidModulus(Complex64),

    #[error("theta series cannot reach tol {tol:e}: tail bound {bound:e} at n_max = {n_max}")]
    TruncationUnreachable { n_max: usize, bound: f64, tol: f64 },

    #[error("z = {0} is within the guard radius of a lattice point")]
    LatticeSingularity(Complex64),

    #[error("parameter pole: {what} = {value}")]
    ParameterPole { what: &'static str, value: Complex64 },

    #[error("series did not converge: {0}")]
    NoConvergence(String),

    #[error("Gamma pole hit at argument {0}")]
    PoleHit(Complex64),

    #[error("quadrature refinement stalled at {nodes} nodes (last change {change:e})")]
    QuadratureFailure { nodes: usize, change: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("monodromy data rejected: {0}")]
    InvalidMonodromy(String),

    #[error("z = {z} outside the convergence domain of the three-point solution")]
    ConvergenceDomain { z: Complex64 },

    #[error("kernel block {block} is singular at z = w; request limit mode")]
    DiagonalSingularity { block: char },

    #[error("Fourier reconstruction residual {residual:e} exceeds {tol:e}")]
    AliasingRisk { residual: f64, tol: f64 },

    #[error("inconsistent truncation: {0}")]
    InconsistentTruncation(String),

    #[error("jump matrix not unimodular: |det J| - 1 = {deviation:e}")]
    JumpNonInvertible { deviation: f64 },

    #[error("sum of U(1) parameters {0} is not an integer")]
    UnsupportedTwist(Complex64),

    #[error("level cutoff {cutoff} too small for the charged partition")]
    CutoffTooSmall { cutoff: usize },

    #[error("resonant parameters: vanishing Z_bif denominator at x = {0}")]
    Resonance(Complex64),

    #[error("Newton iteration diverged: {0}")]
    NewtonDivergence(String),

    #[error("determinant ratio {0} is at a degenerate value")]
    DegenerateRatio(Complex64),

    #[error("fit residual {residual:e} above threshold {threshold:e}")]
    FitFailure { residual: f64, threshold: f64 },

    #[error("prefactor pole: theta1(Q +- rho) vanishes (|value| = {0:e})")]
    PrefactorPole(f64),

    #[error("punctures {0} and {1} coincide modulo the lattice")]
    CoincidentPunctures(usize, usize),
}

pub type Result<T> = std::result::Result<T, Error>;
