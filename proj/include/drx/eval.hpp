#pragma once

#include "drx/dataset.hpp"
#include "drx/ensemble.hpp"

#include <functional>
#include <string>
#include <vector>

namespace drx {

struct EvalReport {
    std::string dataset;
    std::string algorithm;
    int k = 0;
    std::uint64_t seed = 0;
    std::vector<double> fold_accuracies;
    double mean = 0.0;
    double stdev = 0.0; // sample convention, denominator k-1
    double wall_time_ms = 0.0;

    bool operator==(const EvalReport&) const = default;
};

/// Average ranks plus the adjusted Friedman test and the Nemenyi critical
/// difference over an N-dataset x k-algorithm accuracy table.
struct RankSummary {
    std::vector<std::string> algorithms;
    std::vector<std::string> datasets;
    Matrix ranks; // N x k, rank 1 = most accurate, ties averaged
    std::vector<double> average_ranks;
    double friedman_chi2 = 0.0;
    double iman_davenport_f = 0.0;
    int df1 = 0;
    int df2 = 0;
    double alpha = 0.05;
    double nemenyi_q = 0.0;
    double nemenyi_cd = 0.0;
};

struct AlgorithmSpec {
    Strategy strategy = Strategy::plain;
    InducerKind inducer = InducerKind::nn;
    EnsembleParams params;
    bool standardize = false;
};

/// "rpe-nn", "dme-adaboost-nb", ...
std::string algorithm_name(const AlgorithmSpec& spec);

EvalReport cross_validate(const Dataset& d, const std::string& dataset_name,
                          const AlgorithmSpec& spec, int k, std::uint64_t seed);

/// Same protocol with an injectable per-fold trainer (test hook).
using FoldTrainer = std::function<EnsembleModel(const Dataset& train, std::uint64_t fold_seed)>;
EvalReport cross_validate_with(const Dataset& d, const std::string& dataset_name,
                               const std::string& algorithm, int k, std::uint64_t seed,
                               const FoldTrainer& trainer);

/// Mean over datasets of 100 * (alg - plain) / plain.
double average_improvement(const std::vector<double>& algorithm_accuracies,
                           const std::vector<double>& plain_accuracies);

RankSummary rank_summary(const std::vector<std::string>& algorithms,
                         const std::vector<std::string>& datasets, const Matrix& accuracy,
                         double alpha = 0.05);

/// Two-tailed Nemenyi critical value q_alpha for k algorithms
/// (k in [2,10], alpha 0.05 or 0.10).
double nemenyi_q(int k, double alpha);

enum class ReportFormat { json, csv, markdown };
ReportFormat parse_report_format(const std::string& name);

std::string render_reports(const std::vector<EvalReport>& reports, ReportFormat format);
void emit_report(const std::vector<EvalReport>& reports, ReportFormat format,
                 const std::string& path);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

std::string rank_summary_to_json(const RankSummary& s);
RankSummary rank_summary_from_json(const std::string& text);
std::string render_rank_summary_markdown(const RankSummary& s);

} // namespace drx
