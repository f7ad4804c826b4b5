#include "drx/dataset.hpp"
#include "drx/dimred.hpp"
#include "drx/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace drx;

namespace {

Matrix random_points(std::size_t n, std::size_t dim, Rng& rng) {
    Matrix x(n, dim);
    for (double& v : x.data()) v = 2.0 * rng.uniform() - 1.0;
    return x;
}

/// Spectral diffusion distance (full spectrum): the independent route
/// against the direct row-difference definition.
double diffusion_distance_spectral(const DiffusionSpectrum& s, std::size_t i, std::size_t j) {
    double sum = 0.0;
    for (std::size_t l = 1; l < s.markov_eigvals.size(); ++l) {
        const double diff = s.psi(i, l) - s.psi(j, l);
        sum += s.markov_eigvals[l] * s.markov_eigvals[l] * diff * diff;
    }
    return sum;
}

} // namespace

TEST_CASE("gaussian_kernel values forced by the formula") {
    // Identical points give weight 1; squared distance 2*eps gives e^-1.
    const double eps = 0.7;
    const Matrix pts = Matrix::from_rows({{0.0}, {0.0}, {std::sqrt(2.0 * eps)}});
    const Matrix w = gaussian_kernel(pts, eps);
    CHECK(w(0, 1) == 1.0);
    CHECK(w(0, 0) == 1.0);
    CHECK(w(0, 2) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(w(2, 0) == w(0, 2));

    CHECK_THROWS_AS(gaussian_kernel(pts, 0.0), NumericError);
    CHECK_THROWS_AS(gaussian_kernel(pts, -1.0), NumericError);
}

TEST_CASE("gaussian_kernel is positive semi-definite") {
    Rng rng(21);
    const Matrix pts = random_points(4, 3, rng);
    const Matrix w = gaussian_kernel(pts, 0.5);
    const auto eig = sym_eig(w);
    CHECK(eig.values.back() >= -1e-8);
    for (double v : w.data()) {
        CHECK(v > 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("markov_normalize forced 2x2 and identity") {
    const auto [m, degrees] = markov_normalize(Matrix::from_rows({{1.0, 0.5}, {0.5, 1.0}}));
    CHECK(m(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(m(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(m(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(degrees[0] == 1.5);

    const auto [mi, di] = markov_normalize(Matrix::identity(3));
    CHECK(mi == Matrix::identity(3));

    Matrix zero_row(2, 2);
    zero_row(0, 0) = 1.0;
    CHECK_THROWS_AS(markov_normalize(zero_row), NumericError);
}

TEST_CASE("markov_normalize rows sum to one") {
    Rng rng(5);
    const Matrix w = gaussian_kernel(random_points(6, 2, rng), 0.3);
    const auto [m, degrees] = markov_normalize(w);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double sum = std::accumulate(m.row(i).begin(), m.row(i).end(), 0.0);
        CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("diffusion_spectrum two-point closed form") {
    // Oracle: the 2x2 Markov matrix [[1,a],[a,1]]/(1+a) has eigenvalues 1
    // and (1-a)/(1+a) with right eigenvectors (1,1) and (1,-1).
    const double a = 0.37;
    const Matrix w = Matrix::from_rows({{1.0, a}, {a, 1.0}});
    const DiffusionSpectrum s = diffusion_spectrum(w);
    CHECK(s.markov_eigvals[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.markov_eigvals[1] == doctest::Approx((1.0 - a) / (1.0 + a)).epsilon(1e-12));
    // psi_1 constant, psi_2 proportional to (1,-1).
    CHECK(s.psi(0, 0) == doctest::Approx(s.psi(1, 0)).epsilon(1e-12));
    CHECK(s.psi(0, 1) == doctest::Approx(-s.psi(1, 1)).epsilon(1e-12));
    // phi_1 is the stationary distribution, summing to 1.
    CHECK(s.phi(0, 0) + s.phi(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.phi(0, 0) > 0.0);
}

TEST_CASE("diffusion_spectrum contracts on a random 10-point set") {
    Rng rng(17);
    const Matrix w = gaussian_kernel(random_points(10, 3, rng), 0.8);
    const DiffusionSpectrum s = diffusion_spectrum(w);
    const auto [m, degrees] = markov_normalize(w);
    const std::size_t n = w.rows();

    // Top eigenvalue 1 with constant psi_1.
    CHECK(s.markov_eigvals[0] == doctest::Approx(1.0).epsilon(1e-8));
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(s.psi(i, 0) == doctest::Approx(s.psi(0, 0)).epsilon(1e-9));
    }

    // Spectral range.
    for (double lambda : s.markov_eigvals) {
        CHECK(lambda <= 1.0 + 1e-8);
        CHECK(lambda >= -1.0 - 1e-8);
    }

    // M psi_l = lambda_l psi_l.
    for (std::size_t l = 0; l < n; ++l) {
        std::vector<double> psi_l(n);
        for (std::size_t i = 0; i < n; ++i) psi_l[i] = s.psi(i, l);
        const std::vector<double> m_psi = matvec(m, psi_l);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(std::abs(m_psi[i] - s.markov_eigvals[l] * psi_l[i]) < 1e-7);
        }
    }

    // Bi-orthonormality via the Gram matrix.
    const Matrix gram = matmul(transpose(s.phi), s.psi);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            CHECK(std::abs(gram(r, c) - (r == c ? 1.0 : 0.0)) < 1e-8);
        }
    }
}

TEST_CASE("diffusion distance: direct equals spectral") {
    Rng rng(29);
    const Matrix w = gaussian_kernel(random_points(8, 4, rng), 0.6);
    const DiffusionSpectrum s = diffusion_spectrum(w);
    const auto [m, degrees] = markov_normalize(w);
    std::vector<double> phi0(w.rows());
    for (std::size_t z = 0; z < w.rows(); ++z) phi0[z] = s.phi(z, 0);

    for (std::size_t i = 0; i < w.rows(); ++i) {
        CHECK(diffusion_distance_direct(m, phi0, i, i) == 0.0);
        for (std::size_t j = 0; j < w.rows(); ++j) {
            const double direct = diffusion_distance_direct(m, phi0, i, j);
            const double spectral = diffusion_distance_spectral(s, i, j);
            CHECK(std::abs(direct - spectral) < 1e-8);
            CHECK(direct >= 0.0);
        }
    }

    CHECK_THROWS_AS(diffusion_distance_direct(m, phi0, 0, 99), ShapeError);
}

TEST_CASE("diffusion distance two-point case on both routes") {
    const Matrix w = Matrix::from_rows({{1.0, 0.25}, {0.25, 1.0}});
    const DiffusionSpectrum s = diffusion_spectrum(w);
    const auto [m, degrees] = markov_normalize(w);
    const std::vector<double> phi0 = {s.phi(0, 0), s.phi(1, 0)};
    CHECK(diffusion_distance_direct(m, phi0, 0, 1) ==
          doctest::Approx(diffusion_distance_spectral(s, 0, 1)).epsilon(1e-12));
}

TEST_CASE("select_epsilon candidates") {
    Rng rng(1);
    const Matrix two = Matrix::from_rows({{0.0, 0.0}, {3.0, 4.0}});
    CHECK(select_epsilon(two, rng) == 5.0);

    const Matrix collinear = Matrix::from_rows({{0.0}, {1.0}, {2.0}});
    for (int i = 0; i < 20; ++i) {
        const double eps = select_epsilon(collinear, rng);
        CHECK((eps == 1.0 || eps == 2.0));
    }

    const Matrix degenerate = Matrix::from_rows({{1.0, 2.0}, {1.0, 2.0}});
    CHECK_THROWS_AS(select_epsilon(degenerate, rng), NumericError);
}

TEST_CASE("select_epsilon draws uniformly over the distance multiset") {
    Rng data_rng(33);
    const Matrix pts = random_points(100, 2, data_rng);

    // Frequency-count oracle: bucket the 4950 pair distances into deciles
    // of the sorted multiset; uniform sampling over pairs must hit each
    // decile with ~1/10 of the draws.
    std::vector<double> all;
    for (std::size_t i = 0; i < pts.rows(); ++i) {
        for (std::size_t j = i + 1; j < pts.rows(); ++j) {
            all.push_back(std::sqrt(squared_distance(pts.row(i), pts.row(j))));
        }
    }
    std::sort(all.begin(), all.end());
    const std::size_t pairs = all.size();

    Rng rng(77);
    const int draws = 10000;
    std::vector<int> bucket_counts(10, 0);
    for (int d = 0; d < draws; ++d) {
        const double eps = select_epsilon(pts, rng);
        const std::size_t pos = static_cast<std::size_t>(
            std::lower_bound(all.begin(), all.end(), eps) - all.begin());
        ++bucket_counts[std::min<std::size_t>(9, pos * 10 / pairs)];
    }
    double chi2 = 0.0;
    for (int c : bucket_counts) {
        const double expected = draws / 10.0;
        chi2 += (c - expected) * (c - expected) / expected;
    }
    CHECK(chi2 < 35.0); // df = 9; well inside for a uniform sampler
}

TEST_CASE("fit_diffusion_map uses the whole set when it fits") {
    const Dataset d = make_gaussian_blobs(20, 3, 2, 0.3, 9);
    Rng rng(4);
    const DiffusionMapModel model = fit_diffusion_map(d.features, 2, {600, 1e-8, 1.0}, rng);
    CHECK(model.sample_size() == d.size());
    CHECK(model.q == 2);
    CHECK(model.markov_eigvals[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(model.kernel_eigvals[0] > 0.0);
}

TEST_CASE("fit_diffusion_map is deterministic for a fixed rng") {
    const Dataset d = make_gaussian_blobs(15, 2, 2, 0.4, 10);
    Rng rng_a(123);
    Rng rng_b(123);
    const DiffusionMapModel a = fit_diffusion_map(d.features, 3, {10, 1e-8, 1.0}, rng_a);
    const DiffusionMapModel b = fit_diffusion_map(d.features, 3, {10, 1e-8, 1.0}, rng_b);
    CHECK(a == b);
}

TEST_CASE("fit_diffusion_map clamps q to sample size minus one") {
    const Dataset d = make_gaussian_blobs(4, 2, 2, 0.2, 44);
    Rng rng(3);
    const DiffusionMapModel model = fit_diffusion_map(d.features, 50, {600, 1e-8, 1.0}, rng);
    CHECK(model.q == d.size() - 1);
    CHECK(model.embed_coords.cols() == model.q);
    CHECK(model.coeffs.rows() == model.q);
}

TEST_CASE("first diffusion coordinate separates well-separated blobs") {
    const Dataset d = make_gaussian_blobs(40, 2, 2, 0.05, 51);
    Rng rng(6);
    const DiffusionMapModel model = fit_diffusion_map(d.features, 1, {600, 1e-8, 1.0}, rng);
    const Matrix reduced = embed_all(ReducerModel{model}, d.features);

    // Label-agreement oracle: the sign of the first coordinate should match
    // one of the two blob labelings for >= 95% of the points.
    std::size_t agree = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const bool positive = reduced(i, 0) > 0.0;
        if (positive == (d.labels[i] == 1)) ++agree;
    }
    const double frac =
        static_cast<double>(std::max(agree, d.size() - agree)) / static_cast<double>(d.size());
    CHECK(frac >= 0.95);
}

TEST_CASE("nystrom_embed reproduces stored sample coordinates") {
    const Dataset d = make_gaussian_blobs(25, 3, 2, 0.3, 77);
    Rng rng(8);
    // delta small enough to keep every eigenpair.
    const DiffusionMapModel model = fit_diffusion_map(d.features, 3, {600, 1e-15, 1.0}, rng);
    for (std::size_t p = 0; p < model.sample_size(); ++p) {
        const std::vector<double> out = nystrom_embed(model, model.sample_points.row(p));
        for (std::size_t j = 0; j < model.q; ++j) {
            const double stored = model.embed_coords(p, j);
            CHECK(std::abs(out[j] - stored) <= 1e-6 * std::max(1.0, std::abs(stored)));
        }
    }

    std::vector<double> wrong(model.input_dim() + 1, 0.0);
    CHECK_THROWS_AS(nystrom_embed(model, wrong), ShapeError);
}

TEST_CASE("nystrom_embed places held-out points near their blob") {
    const Dataset d = make_gaussian_blobs(60, 2, 2, 0.08, 13);
    Rng rng(14);
    // Sample only part of the set so some points genuinely need extension.
    const DiffusionMapModel model = fit_diffusion_map(d.features, 2, {48, 1e-8, 1.0}, rng);
    REQUIRE(model.sample_size() == 48);

    // Centroid-distance oracle in the embedded space, built from the
    // training sample embeddings and the labels of the matching rows.
    std::vector<std::vector<double>> centroid(2, std::vector<double>(model.q, 0.0));
    std::vector<int> count(2, 0);
    for (std::size_t p = 0; p < model.sample_size(); ++p) {
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (std::equal(d.features.row(i).begin(), d.features.row(i).end(),
                           model.sample_points.row(p).begin())) {
                const int y = d.labels[i];
                for (std::size_t j = 0; j < model.q; ++j) {
                    centroid[static_cast<std::size_t>(y)][j] += model.embed_coords(p, j);
                }
                ++count[static_cast<std::size_t>(y)];
                break;
            }
        }
    }
    REQUIRE(count[0] > 0);
    REQUIRE(count[1] > 0);
    for (int y = 0; y < 2; ++y) {
        for (double& v : centroid[static_cast<std::size_t>(y)]) v /= count[static_cast<std::size_t>(y)];
    }

    std::size_t near_own = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const std::vector<double> e = nystrom_embed(model, d.features.row(i));
        const auto y = static_cast<std::size_t>(d.labels[i]);
        const double own = squared_distance(e, centroid[y]);
        const double other = squared_distance(e, centroid[1 - y]);
        if (own < other) ++near_own;
    }
    CHECK(static_cast<double>(near_own) / static_cast<double>(d.size()) >= 0.90);
}

TEST_CASE("random projection modes") {
    Rng rng(19);
    const ProjectionModel bern = fit_random_projection(6, 4, RpMode::bernoulli, rng);
    const double expect = 1.0 / std::sqrt(4.0);
    for (double v : bern.r.data()) CHECK(std::abs(v) == doctest::Approx(expect).epsilon(1e-12));

    const ProjectionModel gauss = fit_random_projection(6, 4, RpMode::gaussian, rng);
    for (std::size_t c = 0; c < 6; ++c) {
        double norm = 0.0;
        for (std::size_t r = 0; r < 4; ++r) norm += gauss.r(r, c) * gauss.r(r, c);
        CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-9));
    }

    // Embedding a standard basis vector yields the matching column.
    std::vector<double> e2(6, 0.0);
    e2[2] = 1.0;
    const std::vector<double> out = embed_point(ReducerModel{gauss}, e2);
    for (std::size_t r = 0; r < 4; ++r) CHECK(out[r] == gauss.r(r, 2));
}

TEST_CASE("projection embedding is linear") {
    Rng rng(23);
    const ProjectionModel rp = fit_random_projection(8, 3, RpMode::gaussian, rng);
    const ReducerModel reducer{rp};
    std::vector<double> x(8), y(8);
    for (auto& v : x) v = 2.0 * rng.uniform() - 1.0;
    for (auto& v : y) v = 2.0 * rng.uniform() - 1.0;
    const double alpha = 1.7, beta = -0.45;
    std::vector<double> combo(8);
    for (std::size_t i = 0; i < 8; ++i) combo[i] = alpha * x[i] + beta * y[i];

    const auto ex = embed_point(reducer, x);
    const auto ey = embed_point(reducer, y);
    const auto ec = embed_point(reducer, combo);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(std::abs(ec[j] - (alpha * ex[j] + beta * ey[j])) < 1e-10);
    }
}

TEST_CASE("JL distortion concentrates around the median ratio") {
    // Property of the n=100 -> q=50 Gaussian projection: pairwise distance
    // ratios cluster; at least 90% fall within +-30% of the median.
    Rng rng(100);
    const ProjectionModel rp = fit_random_projection(100, 50, RpMode::gaussian, rng);
    Matrix pts(60, 100);
    for (double& v : pts.data()) v = rng.normal();

    std::vector<double> ratios;
    for (int pair = 0; pair < 200; ++pair) {
        const std::size_t a = rng.uniform_index(60);
        std::size_t b = rng.uniform_index(60);
        while (b == a) b = rng.uniform_index(60);
        const auto ea = matvec(rp.r, pts.row(a));
        const auto eb = matvec(rp.r, pts.row(b));
        const double reduced = std::sqrt(squared_distance(ea, eb));
        const double original = std::sqrt(squared_distance(pts.row(a), pts.row(b)));
        ratios.push_back(reduced / original);
    }
    std::vector<double> sorted = ratios;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    int within = 0;
    for (double r : ratios) {
        if (std::abs(r / median - 1.0) <= 0.30) ++within;
    }
    CHECK(within >= 180);
}

TEST_CASE("random subspace selection") {
    Rng rng(31);
    const SubspaceModel full = fit_random_subspace(5, 5, rng);
    std::vector<std::size_t> sorted = full.indices;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<std::size_t>{0, 1, 2, 3, 4});

    const SubspaceModel pick{{2, 0}};
    const std::vector<double> out =
        embed_point(ReducerModel{pick}, std::vector<double>{10, 20, 30});
    CHECK(out == std::vector<double>{30, 10});
    // Stateless: embedding twice gives the same answer.
    CHECK(embed_point(ReducerModel{pick}, std::vector<double>{10, 20, 30}) == out);

    CHECK_THROWS_AS(fit_random_subspace(3, 4, rng), NumericError);
}

TEST_CASE("subspace selection commutes with row permutation") {
    Rng rng(41);
    const Dataset d = make_gaussian_blobs(12, 5, 2, 0.5, 3);
    const SubspaceModel rs = fit_random_subspace(5, 3, rng);
    const ReducerModel reducer{rs};

    std::vector<std::size_t> perm(d.size());
    std::iota(perm.begin(), perm.end(), 0);
    Rng shuffle_rng(2);
    shuffle_rng.shuffle(perm);

    const Matrix direct = embed_all(reducer, d.features);
    const Matrix permuted = embed_all(reducer, select_rows(d, perm).features);
    for (std::size_t i = 0; i < perm.size(); ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(permuted(i, j) == direct(perm[i], j));
        }
    }
}

TEST_CASE("embed_all uses stored coordinates for sample rows") {
    const Dataset d = make_gaussian_blobs(20, 2, 2, 0.2, 61);
    Rng rng(9);
    const DiffusionMapModel model = fit_diffusion_map(d.features, 2, {600, 1e-8, 1.0}, rng);
    const Matrix reduced = embed_all(ReducerModel{model}, d.features);
    REQUIRE(model.sample_size() == d.size());
    // Whole set sampled: every row must be the stored embedding, bit-exact.
    for (std::size_t i = 0; i < d.size(); ++i) {
        bool found = false;
        for (std::size_t p = 0; p < model.sample_size(); ++p) {
            if (std::equal(d.features.row(i).begin(), d.features.row(i).end(),
                           model.sample_points.row(p).begin())) {
                for (std::size_t j = 0; j < model.q; ++j) {
                    CHECK(reduced(i, j) == model.embed_coords(p, j));
                }
                found = true;
                break;
            }
        }
        CHECK(found);
    }
}

TEST_CASE("subspace embedding is linear") {
    const SubspaceModel rs{{3, 1, 4}};
    const ReducerModel reducer{rs};
    Rng rng(47);
    std::vector<double> x(6), y(6);
    for (auto& v : x) v = rng.uniform();
    for (auto& v : y) v = rng.uniform();
    std::vector<double> combo(6);
    for (std::size_t i = 0; i < 6; ++i) combo[i] = 2.5 * x[i] - 0.75 * y[i];
    const auto ex = embed_point(reducer, x);
    const auto ey = embed_point(reducer, y);
    const auto ec = embed_point(reducer, combo);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(std::abs(ec[j] - (2.5 * ex[j] - 0.75 * ey[j])) < 1e-10);
    }
}

TEST_CASE("fit_diffusion_map deduplicates identical rows before sampling") {
    // 12 rows but only 4 distinct values: the sample is the unique set.
    Matrix features(12, 2);
    for (std::size_t i = 0; i < 12; ++i) {
        features(i, 0) = static_cast<double>(i % 4);
        features(i, 1) = 1.0;
    }
    Rng rng(53);
    const DiffusionMapModel model = fit_diffusion_map(features, 1, {600, 1e-8, 1.0}, rng);
    CHECK(model.sample_size() == 4);

    // Duplicates still embed: they match a sample row by value.
    const Matrix reduced = embed_all(ReducerModel{model}, features);
    for (std::size_t i = 0; i < 12; ++i) {
        for (std::size_t j = i + 4; j < 12; j += 4) {
            CHECK(reduced(i % 4 + 0, 0) == reduced(j, 0));
        }
    }
}
