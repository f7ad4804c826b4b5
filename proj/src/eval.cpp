#include "drx/eval.hpp"

#include "drx/error.hpp"
#include "drx/serialize.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace drx {

using nlohmann::json;

std::string algorithm_name(const AlgorithmSpec& spec) {
    return strategy_name(spec.strategy) + "-" + inducer_name(spec.inducer);
}

EvalReport cross_validate_with(const Dataset& d, const std::string& dataset_name,
                               const std::string& algorithm, int k, std::uint64_t seed,
                               const FoldTrainer& trainer) {
    const auto start = std::chrono::steady_clock::now();
    const FoldPlan plan = stratified_folds(d, k, seed);

    EvalReport report;
    report.dataset = dataset_name;
    report.algorithm = algorithm;
    report.k = k;
    report.seed = seed;

    for (int fold = 0; fold < k; ++fold) {
        std::vector<std::size_t> train_idx;
        std::vector<std::size_t> test_idx;
        for (std::size_t i = 0; i < d.size(); ++i) {
            (plan.assignments[i] == fold ? test_idx : train_idx).push_back(i);
        }
        const Dataset train_set = select_rows(d, train_idx);
        const EnsembleModel model = trainer(train_set, Rng::mix(seed, static_cast<std::uint64_t>(fold)));

        std::size_t correct = 0;
        for (std::size_t i : test_idx) {
            if (classify(model, d.features.row(i)).label == d.labels[i]) ++correct;
        }
        report.fold_accuracies.push_back(static_cast<double>(correct) /
                                         static_cast<double>(test_idx.size()));
    }

    report.mean = std::accumulate(report.fold_accuracies.begin(), report.fold_accuracies.end(),
                                  0.0) /
                  static_cast<double>(k);
    double ss = 0.0;
    for (double a : report.fold_accuracies) ss += (a - report.mean) * (a - report.mean);
    report.stdev = std::sqrt(ss / static_cast<double>(k - 1));
    report.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    return report;
}

EvalReport cross_validate(const Dataset& d, const std::string& dataset_name,
                          const AlgorithmSpec& spec, int k, std::uint64_t seed) {
    return cross_validate_with(
        d, dataset_name, algorithm_name(spec), k, seed,
        [&spec](const Dataset& train_set, std::uint64_t fold_seed) {
            if (spec.standardize) {
                auto [scaled, rec] = standardize(train_set);
                EnsembleModel model =
                    train_ensemble(scaled, spec.strategy, spec.inducer, spec.params, fold_seed);
                model.standardizer = std::move(rec);
                return model;
            }
            return train_ensemble(train_set, spec.strategy, spec.inducer, spec.params, fold_seed);
        });
}

double average_improvement(const std::vector<double>& algorithm_accuracies,
                           const std::vector<double>& plain_accuracies) {
    if (algorithm_accuracies.size() != plain_accuracies.size() || algorithm_accuracies.empty()) {
        throw ShapeError("average_improvement: dataset lists differ");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < plain_accuracies.size(); ++i) {
        if (plain_accuracies[i] == 0.0) {
            throw NumericError("average_improvement: plain accuracy is zero for dataset " +
                               std::to_string(i));
        }
        total += 100.0 * (algorithm_accuracies[i] - plain_accuracies[i]) / plain_accuracies[i];
    }
    return total / static_cast<double>(plain_accuracies.size());
}

double nemenyi_q(int k, double alpha) {
    // Two-tailed studentized range / sqrt(2) at infinite df; the standard
    // table for the Nemenyi post-hoc comparison of k classifiers.
    static constexpr double kAlpha05[] = {1.959964, 2.343701, 2.569032, 2.727774, 2.849705,
                                          2.948319, 3.030879, 3.101730, 3.163684};
    static constexpr double kAlpha10[] = {1.644854, 2.052293, 2.291341, 2.459516, 2.588521,
                                          2.692732, 2.779884, 2.854606, 2.920063};
    if (k < 2 || k > 10) {
        throw DataError("nemenyi_q: k must be in [2, 10], got " + std::to_string(k));
    }
    if (alpha == 0.05) return kAlpha05[k - 2];
    if (alpha == 0.10) return kAlpha10[k - 2];
    throw DataError("nemenyi_q: alpha must be 0.05 or 0.10");
}

RankSummary rank_summary(const std::vector<std::string>& algorithms,
                         const std::vector<std::string>& datasets, const Matrix& accuracy,
                         double alpha) {
    const std::size_t n = datasets.size();
    const std::size_t k = algorithms.size();
    if (accuracy.rows() != n || accuracy.cols() != k) {
        throw ShapeError("rank_summary: accuracy table shape mismatch");
    }
    if (n < 2) throw DataError("rank_summary: need at least 2 datasets");
    if (k < 2) throw DataError("rank_summary: need at least 2 algorithms");

    RankSummary s;
    s.algorithms = algorithms;
    s.datasets = datasets;
    s.alpha = alpha;
    s.ranks = Matrix(n, k);
    s.average_ranks.assign(k, 0.0);

    for (std::size_t d = 0; d < n; ++d) {
        std::vector<std::size_t> order(k);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return accuracy(d, a) > accuracy(d, b);
        });
        // Average the positions of tied accuracies.
        std::size_t i = 0;
        while (i < k) {
            std::size_t j = i;
            while (j + 1 < k && accuracy(d, order[j + 1]) == accuracy(d, order[i])) ++j;
            const double rank = 0.5 * static_cast<double>(i + 1 + j + 1);
            for (std::size_t p = i; p <= j; ++p) s.ranks(d, order[p]) = rank;
            i = j + 1;
        }
        for (std::size_t a = 0; a < k; ++a) s.average_ranks[a] += s.ranks(d, a);
    }
    for (double& r : s.average_ranks) r /= static_cast<double>(n);

    const double nk = static_cast<double>(n);
    const double kk = static_cast<double>(k);
    double rank_sq = 0.0;
    for (double r : s.average_ranks) rank_sq += r * r;
    s.friedman_chi2 = 12.0 * nk / (kk * (kk + 1.0)) * (rank_sq - kk * (kk + 1.0) * (kk + 1.0) / 4.0);
    // Perfectly consistent rankings drive the denominator to zero; report
    // the largest finite F so the JSON stays parseable.
    const double denom = nk * (kk - 1.0) - s.friedman_chi2;
    s.iman_davenport_f = denom > 0.0 ? (nk - 1.0) * s.friedman_chi2 / denom
                                     : std::numeric_limits<double>::max();
    s.df1 = static_cast<int>(k) - 1;
    s.df2 = (static_cast<int>(k) - 1) * (static_cast<int>(n) - 1);
    s.nemenyi_q = nemenyi_q(static_cast<int>(k), alpha);
    s.nemenyi_cd = s.nemenyi_q * std::sqrt(kk * (kk + 1.0) / (6.0 * nk));
    return s;
}

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string percent_cell(double mean, double stdev) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.2f ± %.2f", 100.0 * mean, 100.0 * stdev);
    return buf;
}

struct ReportTable {
    std::vector<std::string> datasets;   // sorted
    std::vector<std::string> algorithms; // sorted
    std::map<std::pair<std::string, std::string>, const EvalReport*> cells;
};

ReportTable pivot(const std::vector<EvalReport>& reports) {
    ReportTable table;
    for (const auto& r : reports) {
        if (std::find(table.datasets.begin(), table.datasets.end(), r.dataset) ==
            table.datasets.end()) {
            table.datasets.push_back(r.dataset);
        }
        if (std::find(table.algorithms.begin(), table.algorithms.end(), r.algorithm) ==
            table.algorithms.end()) {
            table.algorithms.push_back(r.algorithm);
        }
        table.cells[{r.dataset, r.algorithm}] = &r;
    }
    std::sort(table.datasets.begin(), table.datasets.end());
    std::sort(table.algorithms.begin(), table.algorithms.end());
    return table;
}

// "rpe-nn" -> baseline "plain-nn"; the inducer is the suffix after the
// last dash.
std::string plain_baseline_for(const std::string& algorithm) {
    const auto pos = algorithm.rfind('-');
    if (pos == std::string::npos) return "";
    return "plain-" + algorithm.substr(pos + 1);
}

json report_json(const EvalReport& r) {
    return json{{"dataset", r.dataset},
                {"algorithm", r.algorithm},
                {"k", r.k},
                {"seed", r.seed},
                {"fold_accuracies", r.fold_accuracies},
                {"mean", r.mean},
                {"stdev", r.stdev},
                {"wall_time_ms", r.wall_time_ms}};
}

EvalReport report_from(const json& j) {
    EvalReport r;
    r.dataset = j.at("dataset").get<std::string>();
    r.algorithm = j.at("algorithm").get<std::string>();
    r.k = j.at("k").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.fold_accuracies = j.at("fold_accuracies").get<std::vector<double>>();
    r.mean = j.at("mean").get<double>();
    r.stdev = j.at("stdev").get<double>();
    r.wall_time_ms = j.at("wall_time_ms").get<double>();
    return r;
}

} // namespace

std::string report_to_json(const EvalReport& report) {
    return report_json(report).dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
    try {
        return report_from(json::parse(text));
    } catch (const json::exception& e) {
        throw DataError(std::string("report file: ") + e.what());
    }
}

std::string render_reports(const std::vector<EvalReport>& reports, ReportFormat format) {
    if (format == ReportFormat::json) {
        json arr = json::array();
        for (const auto& r : reports) arr.push_back(report_json(r));
        return arr.dump(2) + "\n";
    }

    const ReportTable table = pivot(reports);
    std::ostringstream out;

    if (format == ReportFormat::csv) {
        out << "dataset";
        for (const auto& alg : table.algorithms) out << "," << alg;
        out << "\n";
        for (const auto& ds : table.datasets) {
            out << ds;
            for (const auto& alg : table.algorithms) {
                auto it = table.cells.find({ds, alg});
                out << ",";
                if (it != table.cells.end()) out << format_double(it->second->mean);
            }
            out << "\n";
        }
        return out.str();
    }

    // Markdown, paper-table style: one row per dataset, mean ± stdev cells,
    // footer rows with the average improvement over the plain classifier
    // and the average rank.
    out << "| Dataset |";
    for (const auto& alg : table.algorithms) out << " " << alg << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < table.algorithms.size(); ++i) out << "---|";
    out << "\n";
    for (const auto& ds : table.datasets) {
        out << "| " << ds << " |";
        for (const auto& alg : table.algorithms) {
            auto it = table.cells.find({ds, alg});
            out << " " << (it != table.cells.end()
                               ? percent_cell(it->second->mean, it->second->stdev)
                               : std::string("-"))
                << " |";
        }
        out << "\n";
    }

    out << "| **Average improvement** |";
    for (const auto& alg : table.algorithms) {
        const std::string baseline = plain_baseline_for(alg);
        bool complete = !baseline.empty() && baseline != alg;
        std::vector<double> mine;
        std::vector<double> plain;
        for (const auto& ds : table.datasets) {
            auto self = table.cells.find({ds, alg});
            auto base = table.cells.find({ds, baseline});
            if (self == table.cells.end() || base == table.cells.end()) {
                complete = false;
                break;
            }
            mine.push_back(self->second->mean);
            plain.push_back(base->second->mean);
        }
        if (complete) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.1f%%", average_improvement(mine, plain));
            out << " " << buf << " |";
        } else {
            out << " - |";
        }
    }
    out << "\n";

    out << "| **Average rank** |";
    {
        Matrix acc(table.datasets.size(), table.algorithms.size());
        bool complete = table.datasets.size() >= 2 && table.algorithms.size() >= 2;
        for (std::size_t d = 0; d < table.datasets.size() && complete; ++d) {
            for (std::size_t a = 0; a < table.algorithms.size(); ++a) {
                auto it = table.cells.find({table.datasets[d], table.algorithms[a]});
                if (it == table.cells.end()) {
                    complete = false;
                    break;
                }
                acc(d, a) = it->second->mean;
            }
        }
        if (complete && table.algorithms.size() <= 10) {
            const RankSummary s =
                rank_summary(table.algorithms, table.datasets, acc, 0.05);
            for (double r : s.average_ranks) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.2f", r);
                out << " " << buf << " |";
            }
        } else {
            for (std::size_t a = 0; a < table.algorithms.size(); ++a) out << " - |";
        }
    }
    out << "\n";
    return out.str();
}

void emit_report(const std::vector<EvalReport>& reports, ReportFormat format,
                 const std::string& path) {
    write_file_atomic(path, render_reports(reports, format));
}

ReportFormat parse_report_format(const std::string& name) {
    if (name == "json") return ReportFormat::json;
    if (name == "csv") return ReportFormat::csv;
    if (name == "markdown" || name == "md") return ReportFormat::markdown;
    throw DataError("unknown report format '" + name + "'");
}

std::string rank_summary_to_json(const RankSummary& s) {
    json ranks = json::array();
    for (std::size_t d = 0; d < s.ranks.rows(); ++d) {
        ranks.push_back(std::vector<double>(s.ranks.row(d).begin(), s.ranks.row(d).end()));
    }
    const json j{{"algorithms", s.algorithms},
                 {"datasets", s.datasets},
                 {"ranks", std::move(ranks)},
                 {"average_ranks", s.average_ranks},
                 {"friedman_chi2", s.friedman_chi2},
                 {"iman_davenport_F", s.iman_davenport_f},
                 {"df1", s.df1},
                 {"df2", s.df2},
                 {"alpha", s.alpha},
                 {"nemenyi_q", s.nemenyi_q},
                 {"nemenyi_cd", s.nemenyi_cd}};
    return j.dump(2) + "\n";
}

RankSummary rank_summary_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        RankSummary s;
        s.algorithms = j.at("algorithms").get<std::vector<std::string>>();
        s.datasets = j.at("datasets").get<std::vector<std::string>>();
        const auto rows = j.at("ranks").get<std::vector<std::vector<double>>>();
        s.ranks = Matrix(rows.size(), s.algorithms.size());
        for (std::size_t d = 0; d < rows.size(); ++d) {
            if (rows[d].size() != s.algorithms.size()) {
                throw DataError("rank summary: ragged ranks table");
            }
            std::copy(rows[d].begin(), rows[d].end(), s.ranks.row(d).begin());
        }
        s.average_ranks = j.at("average_ranks").get<std::vector<double>>();
        s.friedman_chi2 = j.at("friedman_chi2").get<double>();
        s.iman_davenport_f = j.at("iman_davenport_F").get<double>();
        s.df1 = j.at("df1").get<int>();
        s.df2 = j.at("df2").get<int>();
        s.alpha = j.at("alpha").get<double>();
        s.nemenyi_q = j.at("nemenyi_q").get<double>();
        s.nemenyi_cd = j.at("nemenyi_cd").get<double>();
        return s;
    } catch (const json::exception& e) {
        throw DataError(std::string("rank summary file: ") + e.what());
    }
}

std::string render_rank_summary_markdown(const RankSummary& s) {
    std::ostringstream out;
    out << "| Algorithm | Average rank |\n|---|---|\n";
    for (std::size_t a = 0; a < s.algorithms.size(); ++a) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", s.average_ranks[a]);
        out << "| " << s.algorithms[a] << " | " << buf << " |\n";
    }
    char line[160];
    std::snprintf(line, sizeof line,
                  "\nFriedman chi2 = %.4f; Iman-Davenport F(%d, %d) = %.4f\n", s.friedman_chi2,
                  s.df1, s.df2, s.iman_davenport_f);
    out << line;
    std::snprintf(line, sizeof line, "Nemenyi critical difference (alpha=%.2f): CD = %.4f\n",
                  s.alpha, s.nemenyi_cd);
    out << line;
    return out.str();
}

} // namespace drx
