#pragma once

#include "drx/dataset.hpp"
#include "drx/dimred.hpp"
#include "drx/inducers.hpp"
#include "drx/rng.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace drx {

enum class Strategy { plain, rpe, rse, dme, dme_adaboost, bagging, adaboost };
enum class ReducerKind { none, dm, rp, rs };

std::string strategy_name(Strategy s);
Strategy parse_strategy(const std::string& name);
std::string inducer_name(InducerKind k);
InducerKind parse_inducer(const std::string& name);

/// AdaBoost.M1 model: per-round classifiers with stage weights
/// ln((1 - eps) / eps).
struct BoostedModel {
    struct Round {
        ClassifierModel classifier;
        double stage_weight = 0.0;

        bool operator==(const Round&) const = default;
    };
    std::vector<Round> rounds;
    int class_count = 0;

    bool operator==(const BoostedModel&) const = default;
};

using MemberClassifier = std::variant<ClassifierModel, BoostedModel>;

struct EnsembleMember {
    ReducerModel reducer; // monostate when the member sees all features
    MemberClassifier classifier;
    std::uint64_t member_seed = 0;

    bool operator==(const EnsembleMember&) const = default;
};

struct EnsembleModel {
    std::vector<EnsembleMember> members;
    int class_count = 0;
    Strategy strategy = Strategy::plain;
    std::size_t original_dim = 0;
    std::vector<std::string> class_names;
    // Present when the training set was standardized; classify() applies it
    // to incoming points before the members see them.
    std::optional<StandardizeRecord> standardizer;

    bool operator==(const EnsembleModel&) const = default;
};

struct EnsembleParams {
    int members = 10;          // K
    double dim_fraction = 0.5; // q = max(1, round(dim_fraction * n))
    int boost_rounds = 10;
    DmParams dm;
    RpMode rp_mode = RpMode::gaussian;
    int min_leaf = 2;
    int threads = 1;
};

struct Classification {
    int label = 0;
    std::vector<double> probabilities;
};

/// One ensemble member's probability vector for an already-embedded point.
std::vector<double> member_proba(const MemberClassifier& classifier, std::span<const double> x);

std::vector<double> boosted_proba(const BoostedModel& model, std::span<const double> x);

/// Fig. 1 training: K members, each fitted on its own dimension-reduced
/// view of the training set. Member i draws from an isolated RNG stream
/// derived from (master_seed, i), so results do not depend on scheduling.
EnsembleModel train_dr_ensemble(const Dataset& d, ReducerKind reducer, InducerKind inducer,
                                const EnsembleParams& params, std::uint64_t master_seed);

EnsembleModel train_bagging(const Dataset& d, InducerKind inducer, const EnsembleParams& params,
                            std::uint64_t master_seed);

BoostedModel train_adaboost(const Matrix& features, const std::vector<int>& labels,
                            int class_count, InducerKind inducer, int rounds, Rng& rng,
                            int min_leaf = 2);

EnsembleModel train_multi_strategy_dm_adaboost(const Dataset& d, InducerKind inducer,
                                               const EnsembleParams& params,
                                               std::uint64_t master_seed);

/// Strategy dispatcher (plain and adaboost become single-member ensembles).
EnsembleModel train_ensemble(const Dataset& d, Strategy strategy, InducerKind inducer,
                             const EnsembleParams& params, std::uint64_t master_seed);

/// Fig. 2 classification: embed into every member's reduced space, sum the
/// probability vectors, normalize, argmax with lowest-index tie-break.
Classification classify(const EnsembleModel& e, std::span<const double> x);

// Boosting core with an injectable weak learner, used by tests that need a
// stub inducer with controlled error. weight_trace (when non-null) records
// the sample-weight distribution after every completed round.
using WeakTrainer = std::function<ClassifierModel(
    const Matrix&, const std::vector<int>&, const std::vector<double>&, Rng&)>;
BoostedModel train_adaboost_core(const Matrix& features, const std::vector<int>& labels,
                                 int class_count, int rounds, Rng& rng,
                                 const WeakTrainer& trainer,
                                 std::vector<std::vector<double>>* weight_trace = nullptr);

} // namespace drx
