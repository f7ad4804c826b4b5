#include "drx/dimred.hpp"

#include "drx/error.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

namespace drx {

Matrix gaussian_kernel(const Matrix& points, double epsilon) {
    if (!(epsilon > 0.0)) throw NumericError("gaussian_kernel: epsilon must be > 0");
    const Matrix sq = pairwise_sq_dists(points);
    Matrix w(sq.rows(), sq.cols());
    for (std::size_t i = 0; i < sq.rows(); ++i) {
        w(i, i) = 1.0;
        for (std::size_t j = i + 1; j < sq.cols(); ++j) {
            const double v = std::exp(-sq(i, j) / (2.0 * epsilon));
            w(i, j) = v;
            w(j, i) = v;
        }
    }
    return w;
}

std::pair<Matrix, std::vector<double>> markov_normalize(const Matrix& w) {
    if (w.rows() != w.cols()) throw ShapeError("markov_normalize: matrix not square");
    std::vector<double> degrees(w.rows());
    for (std::size_t i = 0; i < w.rows(); ++i) {
        double d = 0.0;
        for (std::size_t j = 0; j < w.cols(); ++j) {
            if (w(i, j) < 0.0) throw NumericError("markov_normalize: negative weight");
            d += w(i, j);
        }
        if (d <= 0.0) {
            throw NumericError("markov_normalize: zero-degree row " + std::to_string(i));
        }
        degrees[i] = d;
    }
    Matrix m(w.rows(), w.cols());
    for (std::size_t i = 0; i < w.rows(); ++i) {
        for (std::size_t j = 0; j < w.cols(); ++j) m(i, j) = w(i, j) / degrees[i];
    }
    return {std::move(m), std::move(degrees)};
}

DiffusionSpectrum diffusion_spectrum(const Matrix& w) {
    const auto [m, degrees] = markov_normalize(w);
    const std::size_t n = w.rows();

    // Symmetric conjugate A = D^{1/2} M D^{-1/2} = D^{-1/2} W D^{-1/2}.
    Matrix a(n, n);
    std::vector<double> root_d(n);
    for (std::size_t i = 0; i < n; ++i) root_d[i] = std::sqrt(degrees[i]);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) a(i, j) = w(i, j) / (root_d[i] * root_d[j]);
    }
    const EigenDecomposition eig = sym_eig(a);

    const double total_degree = std::accumulate(degrees.begin(), degrees.end(), 0.0);
    const double root_s = std::sqrt(total_degree);

    DiffusionSpectrum out;
    out.markov_eigvals = eig.values;
    out.psi = Matrix(n, n);
    out.phi = Matrix(n, n);
    // psi_l = sqrt(S) D^{-1/2} v_l and phi_l = D^{1/2} v_l / sqrt(S): the
    // top pair becomes the constant-one vector and the sum-one stationary
    // distribution, and psi is orthonormal in the phi_1-weighted space.
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t l = 0; l < n; ++l) {
            out.psi(i, l) = root_s / root_d[i] * eig.vectors(i, l);
            out.phi(i, l) = root_d[i] / root_s * eig.vectors(i, l);
        }
    }
    // The Jacobi sign convention can leave the top eigenvector negative;
    // force the constant psi_1 (and with it phi_1) positive.
    if (out.psi(0, 0) < 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
            out.psi(i, 0) = -out.psi(i, 0);
            out.phi(i, 0) = -out.phi(i, 0);
        }
    }
    return out;
}

double diffusion_distance_direct(const Matrix& m, std::span<const double> phi0, std::size_t i,
                                 std::size_t j) {
    if (i >= m.rows() || j >= m.rows()) {
        throw ShapeError("diffusion_distance_direct: index out of range");
    }
    if (phi0.size() != m.cols()) {
        throw ShapeError("diffusion_distance_direct: phi0 length mismatch");
    }
    double sum = 0.0;
    for (std::size_t z = 0; z < m.cols(); ++z) {
        if (!(phi0[z] > 0.0)) {
            throw NumericError("diffusion_distance_direct: phi0 must be strictly positive");
        }
        const double diff = m(i, z) - m(j, z);
        sum += diff * diff / phi0[z];
    }
    return sum;
}

double select_epsilon(const Matrix& points, Rng& rng) {
    if (points.rows() < 2) throw NumericError("select_epsilon: need at least 2 points");
    std::vector<double> distances;
    distances.reserve(points.rows() * (points.rows() - 1) / 2);
    for (std::size_t i = 0; i < points.rows(); ++i) {
        for (std::size_t j = i + 1; j < points.rows(); ++j) {
            const double d = squared_distance(points.row(i), points.row(j));
            if (d > 0.0) distances.push_back(std::sqrt(d));
        }
    }
    if (distances.empty()) {
        throw NumericError("select_epsilon: all pairwise distances are zero");
    }
    return distances[rng.uniform_index(distances.size())];
}

namespace {

std::vector<std::size_t> unique_row_indices(const Matrix& features) {
    // Value comparison (not bytes), so -0.0 and 0.0 collapse.
    std::map<std::vector<double>, std::size_t> seen;
    std::vector<std::size_t> unique;
    for (std::size_t i = 0; i < features.rows(); ++i) {
        std::vector<double> key(features.row(i).begin(), features.row(i).end());
        if (seen.emplace(std::move(key), i).second) unique.push_back(i);
    }
    return unique;
}

Matrix rows_subset(const Matrix& features, const std::vector<std::size_t>& indices) {
    Matrix out(indices.size(), features.cols());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto src = features.row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

} // namespace

DiffusionMapModel fit_diffusion_map(const Matrix& features, std::size_t q,
                                    const DmParams& params, Rng& rng) {
    if (features.rows() < 2) throw NumericError("fit_diffusion_map: need at least 2 points");
    if (q < 1) throw NumericError("fit_diffusion_map: q must be >= 1");

    std::vector<std::size_t> unique = unique_row_indices(features);
    if (unique.size() < 2) {
        throw NumericError("fit_diffusion_map: all points identical, epsilon degenerate");
    }

    // Uniform sample of unique elements, whole set when it fits.
    const std::size_t m = std::min(params.sample_size, unique.size());
    rng.shuffle(unique);
    std::vector<std::size_t> sample_idx(unique.begin(), unique.begin() + m);

    DiffusionMapModel model;
    model.sample_points = rows_subset(features, sample_idx);
    model.delta = params.delta;
    model.t = params.t;
    model.epsilon = select_epsilon(model.sample_points, rng);

    const Matrix w = gaussian_kernel(model.sample_points, model.epsilon);

    // Extension basis: eigenpairs of the kernel matrix itself. Driven to
    // machine precision: the 1/lambda in the extension amplifies any
    // eigenpair residual, and the consistency contract needs 1e-6.
    const EigenDecomposition kernel_eig = sym_eig(w, 1e-15);
    model.kernel_eigvals = kernel_eig.values;
    model.kernel_eigvecs = kernel_eig.vectors;

    const DiffusionSpectrum spectrum = diffusion_spectrum(w);
    model.markov_eigvals = spectrum.markov_eigvals;

    std::size_t q_eff = std::min(q, m - 1);
    if (q_eff < q) {
        std::cerr << "drx: diffusion map q clamped from " << q << " to " << q_eff
                  << " (sample has " << m << " points)\n";
    }
    model.q = q_eff;

    // Embedding coordinates skip the trivial constant pair: column j uses
    // Markov eigenpair j+1 (0-based).
    model.embed_coords = Matrix(m, q_eff);
    model.coeffs = Matrix(q_eff, m);
    for (std::size_t j = 0; j < q_eff; ++j) {
        const double scale = std::pow(spectrum.markov_eigvals[j + 1], params.t);
        for (std::size_t p = 0; p < m; ++p) {
            model.embed_coords(p, j) = scale * spectrum.psi(p, j + 1);
        }
        for (std::size_t l = 0; l < m; ++l) {
            double c = 0.0;
            for (std::size_t p = 0; p < m; ++p) {
                c += model.kernel_eigvecs(p, l) * spectrum.psi(p, j + 1);
            }
            model.coeffs(j, l) = c;
        }
    }
    return model;
}

std::vector<double> nystrom_embed(const DiffusionMapModel& model, std::span<const double> x) {
    if (x.size() != model.input_dim()) {
        std::ostringstream msg;
        msg << "nystrom_embed: point has " << x.size() << " features, model expects "
            << model.input_dim();
        throw ShapeError(msg.str());
    }
    const std::size_t m = model.sample_size();
    std::vector<double> kvec(m);
    for (std::size_t p = 0; p < m; ++p) {
        kvec[p] = std::exp(-squared_distance(x, model.sample_points.row(p)) /
                           (2.0 * model.epsilon));
    }

    const double cutoff = model.delta * model.kernel_eigvals[0];
    std::vector<double> out(model.q, 0.0);
    for (std::size_t l = 0; l < m; ++l) {
        const double lambda = model.kernel_eigvals[l];
        if (lambda < cutoff) continue;
        // Extended kernel eigenfunction at x (quadrature rule).
        double phi_bar = 0.0;
        for (std::size_t p = 0; p < m; ++p) phi_bar += kvec[p] * model.kernel_eigvecs(p, l);
        phi_bar /= lambda;
        for (std::size_t j = 0; j < model.q; ++j) {
            out[j] += model.coeffs(j, l) * phi_bar;
        }
    }
    for (std::size_t j = 0; j < model.q; ++j) {
        out[j] *= std::pow(model.markov_eigvals[j + 1], model.t);
    }
    return out;
}

ProjectionModel fit_random_projection(std::size_t n, std::size_t q, RpMode mode, Rng& rng) {
    if (n < 1 || q < 1) throw NumericError("fit_random_projection: n and q must be >= 1");
    ProjectionModel model;
    model.mode = mode;
    model.r = Matrix(q, n);
    // Column-by-column, each normalized to unit l2 norm.
    for (std::size_t c = 0; c < n; ++c) {
        double norm_sq = 0.0;
        for (std::size_t r = 0; r < q; ++r) {
            const double v = mode == RpMode::gaussian ? rng.normal()
                                                      : (rng.next_u64() & 1 ? 1.0 : -1.0);
            model.r(r, c) = v;
            norm_sq += v * v;
        }
        double norm = std::sqrt(norm_sq);
        if (norm == 0.0) {
            // Astronomically unlikely gaussian corner: fall back to e_1.
            model.r(0, c) = 1.0;
            norm = 1.0;
        }
        for (std::size_t r = 0; r < q; ++r) model.r(r, c) /= norm;
    }
    return model;
}

SubspaceModel fit_random_subspace(std::size_t n, std::size_t q, Rng& rng) {
    if (q > n) throw NumericError("fit_random_subspace: q exceeds attribute count");
    // Partial Fisher-Yates: first q entries of a random permutation.
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    SubspaceModel model;
    model.indices.reserve(q);
    for (std::size_t i = 0; i < q; ++i) {
        const std::size_t j = i + rng.uniform_index(n - i);
        std::swap(pool[i], pool[j]);
        model.indices.push_back(pool[i]);
    }
    return model;
}

std::vector<double> embed_point(const ReducerModel& reducer, std::span<const double> x) {
    if (std::holds_alternative<std::monostate>(reducer)) {
        return std::vector<double>(x.begin(), x.end());
    }
    if (const auto* dm = std::get_if<DiffusionMapModel>(&reducer)) {
        return nystrom_embed(*dm, x);
    }
    if (const auto* rp = std::get_if<ProjectionModel>(&reducer)) {
        return matvec(rp->r, x);
    }
    const auto& rs = std::get<SubspaceModel>(reducer);
    std::vector<double> out;
    out.reserve(rs.indices.size());
    for (std::size_t idx : rs.indices) {
        if (idx >= x.size()) throw ShapeError("subspace embed: attribute index out of range");
        out.push_back(x[idx]);
    }
    return out;
}

Matrix embed_all(const ReducerModel& reducer, const Matrix& features) {
    const auto* dm = std::get_if<DiffusionMapModel>(&reducer);
    std::map<std::vector<double>, std::size_t> sample_lookup;
    if (dm != nullptr) {
        for (std::size_t p = 0; p < dm->sample_size(); ++p) {
            std::vector<double> key(dm->sample_points.row(p).begin(),
                                    dm->sample_points.row(p).end());
            sample_lookup.emplace(std::move(key), p);
        }
    }

    Matrix out(features.rows(), embedded_dim(reducer, features.cols()));
    for (std::size_t i = 0; i < features.rows(); ++i) {
        if (dm != nullptr) {
            std::vector<double> key(features.row(i).begin(), features.row(i).end());
            if (auto it = sample_lookup.find(key); it != sample_lookup.end()) {
                const auto src = dm->embed_coords.row(it->second);
                std::copy(src.begin(), src.end(), out.row(i).begin());
                continue;
            }
        }
        const std::vector<double> e = embed_point(reducer, features.row(i));
        std::copy(e.begin(), e.end(), out.row(i).begin());
    }
    return out;
}

std::size_t embedded_dim(const ReducerModel& reducer, std::size_t input_dim) {
    if (std::holds_alternative<std::monostate>(reducer)) return input_dim;
    if (const auto* dm = std::get_if<DiffusionMapModel>(&reducer)) return dm->q;
    if (const auto* rp = std::get_if<ProjectionModel>(&reducer)) return rp->r.rows();
    return std::get<SubspaceModel>(reducer).indices.size();
}

} // namespace drx
