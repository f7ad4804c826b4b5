#include "drx/dataset.hpp"
#include "drx/error.hpp"
#include "drx/eval.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace drx;

namespace {

EnsembleModel constant_model(int predicted_class, int class_count, std::size_t dim) {
    EnsembleModel e;
    e.class_count = class_count;
    e.original_dim = dim;
    for (int c = 0; c < class_count; ++c) e.class_names.push_back("c" + std::to_string(c));
    ClassifierModel stub;
    stub.kind = InducerKind::tree;
    stub.class_count = class_count;
    TreeNode leaf;
    leaf.probs.assign(static_cast<std::size_t>(class_count), 0.0);
    leaf.probs[static_cast<std::size_t>(predicted_class)] = 1.0;
    stub.payload = TreePayload{{leaf}};
    EnsembleMember member;
    member.classifier = std::move(stub);
    e.members.push_back(std::move(member));
    return e;
}

} // namespace

TEST_CASE("cross_validate is perfect on separable blobs") {
    const Dataset d = make_gaussian_blobs(30, 2, 2, 0.02, 3);
    AlgorithmSpec spec;
    spec.strategy = Strategy::plain;
    spec.inducer = InducerKind::nn;
    const EvalReport report = cross_validate(d, "blobs", spec, 10, 11);
    CHECK(report.mean == 1.0);
    CHECK(report.stdev == 0.0);
    CHECK(report.fold_accuracies.size() == 10);
    CHECK(report.algorithm == "plain-nn");
}

TEST_CASE("constant predictions score the base rate on balanced data") {
    const Dataset d = make_gaussian_blobs(40, 2, 2, 0.5, 7);
    const EvalReport report = cross_validate_with(
        d, "balanced", "constant", 10, 13,
        [](const Dataset& train_set, std::uint64_t) {
            return constant_model(0, train_set.class_count(), train_set.dim());
        });
    CHECK(report.mean == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("cross_validate on iris matches the published plain 1-NN accuracy band") {
    const Dataset iris = load_csv(std::string(DRX_DATA_DIR) + "/iris.csv");
    AlgorithmSpec spec;
    spec.strategy = Strategy::plain;
    spec.inducer = InducerKind::nn;
    const EvalReport report = cross_validate(iris, "iris", spec, 10, 17);
    CHECK(report.mean >= 0.92);
    CHECK(report.mean <= 0.98);
}

TEST_CASE("cross_validate is deterministic apart from wall time") {
    const Dataset d = make_gaussian_blobs(20, 3, 2, 0.4, 19);
    AlgorithmSpec spec;
    spec.strategy = Strategy::rpe;
    spec.inducer = InducerKind::tree;
    spec.params.members = 4;
    EvalReport a = cross_validate(d, "blobs", spec, 5, 23);
    EvalReport b = cross_validate(d, "blobs", spec, 5, 23);
    a.wall_time_ms = 0.0;
    b.wall_time_ms = 0.0;
    CHECK(a == b);
}

TEST_CASE("average improvement arithmetic") {
    CHECK(average_improvement({0.8, 0.6}, {0.8, 0.6}) == 0.0);
    CHECK(average_improvement({0.55}, {0.50}) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(average_improvement({0.55, 0.45}, {0.50, 0.50}) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_THROWS_AS(average_improvement({0.5}, {0.0}), NumericError);
    CHECK_THROWS_AS(average_improvement({0.5, 0.5}, {0.5}), ShapeError);
}

TEST_CASE("rank_summary reproduces the published constants") {
    // k=8 algorithms over N=17 datasets at alpha=0.05: CD = 2.55 and the
    // adjusted Friedman test has (7, 112) degrees of freedom.
    std::vector<std::string> algorithms;
    for (int a = 0; a < 8; ++a) algorithms.push_back("alg" + std::to_string(a));
    std::vector<std::string> datasets17;
    for (int d = 0; d < 17; ++d) datasets17.push_back("d" + std::to_string(d));
    Rng rng(5);
    Matrix acc(17, 8);
    for (double& v : acc.data()) v = rng.uniform();

    const RankSummary s17 = rank_summary(algorithms, datasets17, acc, 0.05);
    CHECK(std::abs(s17.nemenyi_cd - 2.55) <= 0.01);
    CHECK(s17.df1 == 7);
    CHECK(s17.df2 == 112);

    // Same k over N=51 rows: degrees of freedom (7, 350).
    std::vector<std::string> datasets51;
    for (int d = 0; d < 51; ++d) datasets51.push_back("d" + std::to_string(d));
    Matrix acc51(51, 8);
    for (double& v : acc51.data()) v = rng.uniform();
    const RankSummary s51 = rank_summary(algorithms, datasets51, acc51, 0.05);
    CHECK(s51.df1 == 7);
    CHECK(s51.df2 == 350);
}

TEST_CASE("rank_summary on a dominant algorithm") {
    const std::vector<std::string> algorithms = {"a", "b"};
    const std::vector<std::string> datasets = {"d0", "d1", "d2"};
    Matrix acc(3, 2);
    for (std::size_t d = 0; d < 3; ++d) {
        acc(d, 0) = 0.9;
        acc(d, 1) = 0.5;
    }
    const RankSummary s = rank_summary(algorithms, datasets, acc, 0.05);
    CHECK(s.average_ranks[0] == 1.0);
    CHECK(s.average_ranks[1] == 2.0);
    // Perfectly consistent rankings max out the Friedman statistic.
    CHECK(s.friedman_chi2 == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("rank_summary handles ties and keeps row sums fixed") {
    const std::vector<std::string> algorithms = {"a", "b", "c", "d"};
    const std::vector<std::string> datasets = {"d0", "d1"};
    Matrix acc(2, 4);
    // Row 0: two-way tie for first, distinct tail.
    acc(0, 0) = 0.9; acc(0, 1) = 0.9; acc(0, 2) = 0.5; acc(0, 3) = 0.4;
    // Row 1: four-way tie.
    for (std::size_t a = 0; a < 4; ++a) acc(1, a) = 0.7;
    const RankSummary s = rank_summary(algorithms, datasets, acc, 0.05);

    CHECK(s.ranks(0, 0) == 1.5);
    CHECK(s.ranks(0, 1) == 1.5);
    CHECK(s.ranks(0, 2) == 3.0);
    CHECK(s.ranks(0, 3) == 4.0);
    for (std::size_t a = 0; a < 4; ++a) CHECK(s.ranks(1, a) == 2.5);

    for (std::size_t d = 0; d < 2; ++d) {
        double row = 0.0;
        for (std::size_t a = 0; a < 4; ++a) row += s.ranks(d, a);
        CHECK(row == doctest::Approx(4.0 * 5.0 / 2.0).epsilon(1e-12));
    }
}

TEST_CASE("friedman statistic is invariant under monotone transforms") {
    Rng rng(9);
    const std::vector<std::string> algorithms = {"a", "b", "c"};
    std::vector<std::string> datasets;
    for (int d = 0; d < 6; ++d) datasets.push_back("d" + std::to_string(d));
    Matrix acc(6, 3);
    for (double& v : acc.data()) v = rng.uniform();

    Matrix transformed = acc;
    for (double& v : transformed.data()) v = std::exp(3.0 * v) + 1.0; // strictly monotone

    const RankSummary s1 = rank_summary(algorithms, datasets, acc, 0.05);
    const RankSummary s2 = rank_summary(algorithms, datasets, transformed, 0.05);
    CHECK(s1.friedman_chi2 == doctest::Approx(s2.friedman_chi2).epsilon(1e-12));
    CHECK(s1.ranks == s2.ranks);
}

TEST_CASE("rank_summary validates inputs") {
    const std::vector<std::string> two = {"a", "b"};
    CHECK_THROWS_AS(rank_summary(two, {"d0"}, Matrix(1, 2), 0.05), DataError);
    CHECK_THROWS_AS(rank_summary({"a"}, {"d0", "d1"}, Matrix(2, 1), 0.05), DataError);
    CHECK_THROWS_AS(rank_summary(two, {"d0", "d1"}, Matrix(2, 2), 0.03), DataError);

    std::vector<std::string> eleven;
    for (int a = 0; a < 11; ++a) eleven.push_back("alg" + std::to_string(a));
    std::vector<std::string> datasets = {"d0", "d1"};
    CHECK_THROWS_AS(rank_summary(eleven, datasets, Matrix(2, 11), 0.05), DataError);
}

TEST_CASE("nemenyi table endpoints") {
    CHECK(nemenyi_q(2, 0.05) == doctest::Approx(1.960).epsilon(1e-3));
    CHECK(nemenyi_q(10, 0.05) == doctest::Approx(3.164).epsilon(1e-3));
    CHECK(nemenyi_q(2, 0.10) == doctest::Approx(1.645).epsilon(1e-3));
}

TEST_CASE("report json round-trip") {
    EvalReport r;
    r.dataset = "iris";
    r.algorithm = "rpe-nn";
    r.k = 10;
    r.seed = 99;
    r.fold_accuracies = {0.9, 1.0, 0.8, 0.95, 0.85, 0.9, 1.0, 0.9, 0.95, 0.9};
    r.mean = 0.915;
    r.stdev = 0.0626;
    r.wall_time_ms = 12.5;
    CHECK(report_from_json(report_to_json(r)) == r);
}

TEST_CASE("markdown report mirrors the paper table layout") {
    std::vector<EvalReport> reports;
    for (const std::string ds : {"iris", "glass"}) {
        for (const std::string alg : {"plain-nn", "rpe-nn"}) {
            EvalReport r;
            r.dataset = ds;
            r.algorithm = alg;
            r.k = 10;
            r.mean = alg == "plain-nn" ? 0.90 : 0.95;
            r.stdev = 0.05;
            reports.push_back(std::move(r));
        }
    }
    const std::string md = render_reports(reports, ReportFormat::markdown);

    std::istringstream in(md);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    // Header, separator, one row per dataset, two footer rows.
    REQUIRE(lines.size() == 6);
    CHECK(lines[2].find("glass") != std::string::npos);
    CHECK(lines[3].find("iris") != std::string::npos);
    CHECK(lines[4].find("Average improvement") != std::string::npos);
    CHECK(lines[5].find("Average rank") != std::string::npos);
    CHECK(lines[2].find("95.00 ± 5.00") != std::string::npos);
    // rpe-nn improves on plain-nn by 5.56%.
    CHECK(lines[4].find("5.6%") != std::string::npos);
}

TEST_CASE("csv report parses back to the accuracy matrix") {
    std::vector<EvalReport> reports;
    const double means[2][2] = {{0.12345678901234567, 0.5}, {0.75, 0.999999999}};
    const std::string datasets[2] = {"a", "b"};
    const std::string algs[2] = {"x", "y"};
    for (int d = 0; d < 2; ++d) {
        for (int a = 0; a < 2; ++a) {
            EvalReport r;
            r.dataset = datasets[d];
            r.algorithm = algs[a];
            r.mean = means[d][a];
            reports.push_back(std::move(r));
        }
    }
    const std::string csv = render_reports(reports, ReportFormat::csv);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "dataset,x,y");
    for (int d = 0; d < 2; ++d) {
        std::getline(in, line);
        std::istringstream row(line);
        std::string cell;
        std::getline(row, cell, ',');
        CHECK(cell == datasets[d]);
        for (int a = 0; a < 2; ++a) {
            std::getline(row, cell, ',');
            CHECK(std::abs(std::stod(cell) - means[d][a]) < 1e-9);
        }
    }
}

TEST_CASE("rank summary json round-trip") {
    std::vector<std::string> algorithms = {"a", "b", "c"};
    std::vector<std::string> datasets = {"d0", "d1", "d2", "d3"};
    Rng rng(15);
    Matrix acc(4, 3);
    for (double& v : acc.data()) v = rng.uniform();
    const RankSummary s = rank_summary(algorithms, datasets, acc, 0.10);
    const RankSummary back = rank_summary_from_json(rank_summary_to_json(s));
    CHECK(back.algorithms == s.algorithms);
    CHECK(back.ranks == s.ranks);
    CHECK(back.friedman_chi2 == s.friedman_chi2);
    CHECK(back.nemenyi_cd == s.nemenyi_cd);
    CHECK(back.alpha == s.alpha);
}

TEST_CASE("two-algorithm rank order tracks mean accuracy on consistent tables") {
    Rng rng(150);
    for (int trial = 0; trial < 10; ++trial) {
        const std::vector<std::string> algorithms = {"a", "b"};
        std::vector<std::string> datasets;
        const std::size_t n = 3 + rng.uniform_index(5);
        Matrix acc(n, 2);
        const bool a_wins = rng.uniform() < 0.5;
        double mean_a = 0.0;
        double mean_b = 0.0;
        for (std::size_t d = 0; d < n; ++d) {
            datasets.push_back("d" + std::to_string(d));
            const double base = 0.5 + 0.4 * rng.uniform();
            const double gap = 0.01 + 0.05 * rng.uniform();
            acc(d, 0) = a_wins ? base : base - gap;
            acc(d, 1) = a_wins ? base - gap : base;
            mean_a += acc(d, 0);
            mean_b += acc(d, 1);
        }
        const RankSummary s = rank_summary(algorithms, datasets, acc, 0.05);
        const bool rank_prefers_a = s.average_ranks[0] < s.average_ranks[1];
        CHECK(rank_prefers_a == (mean_a > mean_b));
    }
}
