#pragma once

#include "drx/dataset.hpp"
#include "drx/matrix.hpp"
#include "drx/rng.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace drx {

struct DmParams {
    std::size_t sample_size = 600;
    double delta = 1e-8;
    double t = 1.0;
};

/// Fitted diffusion-map reducer. Keeps everything the Nystrom extension
/// needs: the fitted sample, the Gaussian-kernel eigenpairs (the extension
/// basis), the Markov eigenvalues (the embedding scale), and the expansion
/// coefficients of each diffusion coordinate over the kernel basis.
struct DiffusionMapModel {
    Matrix sample_points;              // m x n
    double epsilon = 0.0;
    std::vector<double> kernel_eigvals; // kernel matrix spectrum, descending
    Matrix kernel_eigvecs;             // m x m, orthonormal columns
    std::vector<double> markov_eigvals; // descending, top = 1
    Matrix embed_coords;               // m x q: column j = lambda_{j+2}^t * psi_{j+2}
    Matrix coeffs;                     // q x m: <phi_l, psi_{j+2}>
    double delta = 1e-8;
    double t = 1.0;
    std::size_t q = 0;

    std::size_t sample_size() const { return sample_points.rows(); }
    std::size_t input_dim() const { return sample_points.cols(); }

    bool operator==(const DiffusionMapModel&) const = default;
};

enum class RpMode { gaussian, bernoulli };

/// Random projection matrix with unit-norm columns; embedding is r * x.
struct ProjectionModel {
    Matrix r; // q x n
    RpMode mode = RpMode::gaussian;
    std::uint64_t seed = 0;

    bool operator==(const ProjectionModel&) const = default;
};

/// Attribute subset; embedding selects coordinates in stored order.
struct SubspaceModel {
    std::vector<std::size_t> indices;

    bool operator==(const SubspaceModel&) const = default;
};

using ReducerModel = std::variant<std::monostate, DiffusionMapModel, ProjectionModel, SubspaceModel>;

// --- diffusion maps -------------------------------------------------------

/// w(i,j) = exp(-||x_i - x_j||^2 / (2 epsilon)).
Matrix gaussian_kernel(const Matrix& points, double epsilon);

/// Row-stochastic normalization m(i,j) = w(i,j) / d(i); also returns the
/// degree vector d for the later conjugation.
std::pair<Matrix, std::vector<double>> markov_normalize(const Matrix& w);

struct DiffusionSpectrum {
    std::vector<double> markov_eigvals; // descending, top = 1
    Matrix psi;                         // right eigenvectors of M, psi_1 = const 1
    Matrix phi;                         // left eigenvectors, phi_1 = stationary (sums to 1)
};

/// Full spectrum of the Markov matrix via the symmetric conjugate
/// A = D^{1/2} M D^{-1/2}. psi/phi are scaled so that phi_l = psi_l * phi_1
/// componentwise and <phi_m, psi_l> = delta_ml; with this scaling the
/// spectral diffusion distance matches the direct definition with no extra
/// factor.
DiffusionSpectrum diffusion_spectrum(const Matrix& w);

/// Direct diffusion distance squared between rows i and j of the Markov
/// matrix: sum_z (m(i,z) - m(j,z))^2 / phi0(z).
double diffusion_distance_direct(const Matrix& m, std::span<const double> phi0,
                                 std::size_t i, std::size_t j);

/// Epsilon drawn uniformly from the positive pairwise Euclidean distances.
double select_epsilon(const Matrix& points, Rng& rng);

DiffusionMapModel fit_diffusion_map(const Matrix& features, std::size_t q,
                                    const DmParams& params, Rng& rng);

/// Nystrom out-of-sample extension of a fitted model to an arbitrary point.
/// Kernel eigenpairs below delta * top are dropped (the raw scheme is ill
/// conditioned as the kernel spectrum decays).
std::vector<double> nystrom_embed(const DiffusionMapModel& model, std::span<const double> x);

// --- random projections / subspaces ---------------------------------------

ProjectionModel fit_random_projection(std::size_t n, std::size_t q, RpMode mode, Rng& rng);

SubspaceModel fit_random_subspace(std::size_t n, std::size_t q, Rng& rng);

// --- common embed interface ------------------------------------------------

std::vector<double> embed_point(const ReducerModel& reducer, std::span<const double> x);

/// Dimension-reduced copy of a whole training matrix. For diffusion maps,
/// rows that match a fitted sample point take its stored coordinates; all
/// other rows go through the Nystrom extension.
Matrix embed_all(const ReducerModel& reducer, const Matrix& features);

std::size_t embedded_dim(const ReducerModel& reducer, std::size_t input_dim);

} // namespace drx
