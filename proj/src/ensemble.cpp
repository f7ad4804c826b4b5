#include "drx/ensemble.hpp"

#include "drx/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

namespace drx {

std::string strategy_name(Strategy s) {
    switch (s) {
    case Strategy::plain: return "plain";
    case Strategy::rpe: return "rpe";
    case Strategy::rse: return "rse";
    case Strategy::dme: return "dme";
    case Strategy::dme_adaboost: return "dme-adaboost";
    case Strategy::bagging: return "bagging";
    case Strategy::adaboost: return "adaboost";
    }
    throw DataError("unknown strategy");
}

Strategy parse_strategy(const std::string& name) {
    if (name == "plain") return Strategy::plain;
    if (name == "rpe") return Strategy::rpe;
    if (name == "rse") return Strategy::rse;
    if (name == "dme") return Strategy::dme;
    if (name == "dme-adaboost") return Strategy::dme_adaboost;
    if (name == "bagging") return Strategy::bagging;
    if (name == "adaboost") return Strategy::adaboost;
    throw DataError("unknown ensemble strategy '" + name + "'");
}

std::string inducer_name(InducerKind k) {
    switch (k) {
    case InducerKind::nn: return "nn";
    case InducerKind::tree: return "tree";
    case InducerKind::nb: return "nb";
    }
    throw DataError("unknown inducer");
}

InducerKind parse_inducer(const std::string& name) {
    if (name == "nn") return InducerKind::nn;
    if (name == "tree") return InducerKind::tree;
    if (name == "nb") return InducerKind::nb;
    throw DataError("unknown inducer '" + name + "'");
}

std::vector<double> boosted_proba(const BoostedModel& model, std::span<const double> x) {
    std::vector<double> agg(static_cast<std::size_t>(model.class_count), 0.0);
    double total = 0.0;
    for (const auto& round : model.rounds) {
        const std::vector<double> p = predict_proba(round.classifier, x);
        for (std::size_t y = 0; y < agg.size(); ++y) agg[y] += round.stage_weight * p[y];
        total += round.stage_weight;
    }
    for (double& v : agg) v /= total;
    return agg;
}

std::vector<double> member_proba(const MemberClassifier& classifier, std::span<const double> x) {
    if (const auto* plain = std::get_if<ClassifierModel>(&classifier)) {
        return predict_proba(*plain, x);
    }
    return boosted_proba(std::get<BoostedModel>(classifier), x);
}

namespace {

// Runs fn(0..count-1) on `threads` workers. Tasks only touch their own
// output slot; the first exception is rethrown after all workers join,
// so scheduling never changes the result.
void parallel_members(int count, int threads, const std::function<void(int)>& fn) {
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int i = w; i < count; i += threads) fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& err : errors) {
        if (err) std::rethrow_exception(err);
    }
}

[[noreturn]] void rethrow_with_member(int member, const std::exception& e) {
    std::ostringstream msg;
    msg << "member " << member << ": " << e.what();
    if (dynamic_cast<const NumericError*>(&e) != nullptr) throw NumericError(msg.str());
    if (dynamic_cast<const DataError*>(&e) != nullptr) throw DataError(msg.str());
    throw ShapeError(msg.str());
}

std::size_t target_dim(std::size_t n, double dim_fraction) {
    const auto q = static_cast<std::size_t>(std::llround(dim_fraction * static_cast<double>(n)));
    return std::max<std::size_t>(1, q);
}

void validate_dataset(const Dataset& d) {
    if (d.size() == 0) throw DataError("ensemble: empty training set");
    if (d.class_count() < 1) throw DataError("ensemble: no classes");
}

bool weights_uniform(const std::vector<double>& w) {
    const double expected = 1.0 / static_cast<double>(w.size());
    return std::all_of(w.begin(), w.end(), [&](double v) {
        return std::abs(v - expected) <= 1e-12 * expected;
    });
}

// Weighted bootstrap of size N via inverse-CDF sampling.
std::vector<std::size_t> weighted_resample(const std::vector<double>& weights, Rng& rng) {
    std::vector<double> cumulative(weights.size());
    std::partial_sum(weights.begin(), weights.end(), cumulative.begin());
    const double total = cumulative.back();
    std::vector<std::size_t> picks(weights.size());
    for (auto& pick : picks) {
        const double u = rng.uniform() * total;
        pick = static_cast<std::size_t>(
            std::lower_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
        if (pick >= weights.size()) pick = weights.size() - 1;
    }
    return picks;
}

WeakTrainer default_trainer(InducerKind inducer, int class_count, int min_leaf) {
    return [inducer, class_count, min_leaf](const Matrix& features,
                                            const std::vector<int>& labels,
                                            const std::vector<double>& weights, Rng& rng) {
        const InducerParams params{class_count, min_leaf};
        if (inducer != InducerKind::nn) {
            return train(inducer, features, labels, &weights, params);
        }
        // 1-NN has no weight mechanism; uniform weights train on the data
        // as-is (keeps one-round boosting identical to no boosting), other
        // weights train on a weighted bootstrap.
        if (weights_uniform(weights)) {
            return train(inducer, features, labels, nullptr, params);
        }
        const std::vector<std::size_t> picks = weighted_resample(weights, rng);
        Matrix resampled(picks.size(), features.cols());
        std::vector<int> resampled_labels(picks.size());
        for (std::size_t i = 0; i < picks.size(); ++i) {
            const auto src = features.row(picks[i]);
            std::copy(src.begin(), src.end(), resampled.row(i).begin());
            resampled_labels[i] = labels[picks[i]];
        }
        return train(inducer, resampled, resampled_labels, nullptr, params);
    };
}

} // namespace

BoostedModel train_adaboost_core(const Matrix& features, const std::vector<int>& labels,
                                 int class_count, int rounds, Rng& rng,
                                 const WeakTrainer& trainer,
                                 std::vector<std::vector<double>>* weight_trace) {
    if (features.rows() == 0) throw DataError("adaboost: empty training set");
    if (class_count < 2) throw DataError("adaboost: need at least 2 classes");
    if (rounds < 1) throw DataError("adaboost: rounds must be >= 1");

    const std::size_t n = features.rows();
    std::vector<double> weights(n, 1.0 / static_cast<double>(n));

    BoostedModel model;
    model.class_count = class_count;
    for (int t = 0; t < rounds; ++t) {
        ClassifierModel weak = trainer(features, labels, weights, rng);
        double epsilon = 0.0;
        std::vector<bool> miss(n, false);
        for (std::size_t i = 0; i < n; ++i) {
            if (predict_class(weak, features.row(i)) != labels[i]) {
                miss[i] = true;
                epsilon += weights[i];
            }
        }

        if (epsilon >= 0.5) {
            if (t == 0) {
                // Fallback: keep the lone round so the model behaves like
                // the plain classifier. The weight formula goes
                // non-positive here, so floor it.
                const double eps = std::clamp(epsilon, 1e-10, 1.0 - 1e-10);
                const double w = std::log((1.0 - eps) / eps);
                model.rounds.push_back({std::move(weak), std::max(w, 1e-10)});
            }
            break;
        }
        if (epsilon == 0.0) {
            model.rounds.push_back({std::move(weak), std::log(1e10)});
            if (weight_trace != nullptr) weight_trace->push_back(weights);
            break;
        }

        const double factor = (1.0 - epsilon) / epsilon;
        model.rounds.push_back({std::move(weak), std::log(factor)});
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (miss[i]) weights[i] *= factor;
            total += weights[i];
        }
        for (double& w : weights) w /= total;
        if (weight_trace != nullptr) weight_trace->push_back(weights);
    }
    return model;
}

BoostedModel train_adaboost(const Matrix& features, const std::vector<int>& labels,
                            int class_count, InducerKind inducer, int rounds, Rng& rng,
                            int min_leaf) {
    return train_adaboost_core(features, labels, class_count, rounds, rng,
                               default_trainer(inducer, class_count, min_leaf));
}

EnsembleModel train_dr_ensemble(const Dataset& d, ReducerKind reducer, InducerKind inducer,
                                const EnsembleParams& params, std::uint64_t master_seed) {
    validate_dataset(d);
    if (params.members < 1) throw DataError("ensemble: K must be >= 1");
    const std::size_t n = d.dim();
    const std::size_t q = target_dim(n, params.dim_fraction);

    EnsembleModel e;
    e.class_count = d.class_count();
    e.original_dim = n;
    e.class_names = d.class_names;
    e.strategy = reducer == ReducerKind::dm
                     ? Strategy::dme
                     : (reducer == ReducerKind::rp ? Strategy::rpe : Strategy::rse);
    e.members.resize(static_cast<std::size_t>(params.members));

    parallel_members(params.members, params.threads, [&](int i) {
        try {
            Rng rng = Rng::stream(master_seed, static_cast<std::uint64_t>(i));
            EnsembleMember& member = e.members[static_cast<std::size_t>(i)];
            member.member_seed = Rng::mix(master_seed, static_cast<std::uint64_t>(i));
            switch (reducer) {
            case ReducerKind::dm:
                member.reducer = fit_diffusion_map(d.features, q, params.dm, rng);
                break;
            case ReducerKind::rp:
                member.reducer = fit_random_projection(n, q, params.rp_mode, rng);
                break;
            case ReducerKind::rs:
                member.reducer = fit_random_subspace(n, std::min(q, n), rng);
                break;
            case ReducerKind::none:
                break;
            }
            const Matrix reduced = embed_all(member.reducer, d.features);
            member.classifier =
                train(inducer, reduced, d.labels, nullptr, {e.class_count, params.min_leaf});
        } catch (const std::exception& ex) {
            rethrow_with_member(i, ex);
        }
    });
    return e;
}

EnsembleModel train_multi_strategy_dm_adaboost(const Dataset& d, InducerKind inducer,
                                               const EnsembleParams& params,
                                               std::uint64_t master_seed) {
    validate_dataset(d);
    if (params.members < 1) throw DataError("ensemble: K must be >= 1");
    const std::size_t n = d.dim();
    const std::size_t q = target_dim(n, params.dim_fraction);

    EnsembleModel e;
    e.class_count = d.class_count();
    e.original_dim = n;
    e.class_names = d.class_names;
    e.strategy = Strategy::dme_adaboost;
    e.members.resize(static_cast<std::size_t>(params.members));

    parallel_members(params.members, params.threads, [&](int i) {
        try {
            Rng rng = Rng::stream(master_seed, static_cast<std::uint64_t>(i));
            EnsembleMember& member = e.members[static_cast<std::size_t>(i)];
            member.member_seed = Rng::mix(master_seed, static_cast<std::uint64_t>(i));
            member.reducer = fit_diffusion_map(d.features, q, params.dm, rng);
            const Matrix reduced = embed_all(member.reducer, d.features);
            member.classifier = train_adaboost(reduced, d.labels, e.class_count, inducer,
                                               params.boost_rounds, rng, params.min_leaf);
        } catch (const std::exception& ex) {
            rethrow_with_member(i, ex);
        }
    });
    return e;
}

EnsembleModel train_bagging(const Dataset& d, InducerKind inducer, const EnsembleParams& params,
                            std::uint64_t master_seed) {
    validate_dataset(d);
    if (params.members < 1) throw DataError("ensemble: K must be >= 1");

    EnsembleModel e;
    e.class_count = d.class_count();
    e.original_dim = d.dim();
    e.class_names = d.class_names;
    e.strategy = Strategy::bagging;
    e.members.resize(static_cast<std::size_t>(params.members));

    parallel_members(params.members, params.threads, [&](int i) {
        try {
            Rng rng = Rng::stream(master_seed, static_cast<std::uint64_t>(i));
            EnsembleMember& member = e.members[static_cast<std::size_t>(i)];
            member.member_seed = Rng::mix(master_seed, static_cast<std::uint64_t>(i));
            std::vector<std::size_t> picks(d.size());
            for (auto& pick : picks) pick = rng.uniform_index(d.size());
            const Dataset sample = select_rows(d, picks);
            member.classifier = train(inducer, sample.features, sample.labels, nullptr,
                                      {e.class_count, params.min_leaf});
        } catch (const std::exception& ex) {
            rethrow_with_member(i, ex);
        }
    });
    return e;
}

EnsembleModel train_ensemble(const Dataset& d, Strategy strategy, InducerKind inducer,
                             const EnsembleParams& params, std::uint64_t master_seed) {
    switch (strategy) {
    case Strategy::rpe:
        return train_dr_ensemble(d, ReducerKind::rp, inducer, params, master_seed);
    case Strategy::rse:
        return train_dr_ensemble(d, ReducerKind::rs, inducer, params, master_seed);
    case Strategy::dme:
        return train_dr_ensemble(d, ReducerKind::dm, inducer, params, master_seed);
    case Strategy::dme_adaboost:
        return train_multi_strategy_dm_adaboost(d, inducer, params, master_seed);
    case Strategy::bagging:
        return train_bagging(d, inducer, params, master_seed);
    case Strategy::plain: {
        validate_dataset(d);
        EnsembleModel e;
        e.class_count = d.class_count();
        e.original_dim = d.dim();
        e.class_names = d.class_names;
        e.strategy = Strategy::plain;
        EnsembleMember member;
        member.member_seed = Rng::mix(master_seed, 0);
        member.classifier =
            train(inducer, d.features, d.labels, nullptr, {e.class_count, params.min_leaf});
        e.members.push_back(std::move(member));
        return e;
    }
    case Strategy::adaboost: {
        validate_dataset(d);
        EnsembleModel e;
        e.class_count = d.class_count();
        e.original_dim = d.dim();
        e.class_names = d.class_names;
        e.strategy = Strategy::adaboost;
        EnsembleMember member;
        member.member_seed = Rng::mix(master_seed, 0);
        Rng rng = Rng::stream(master_seed, 0);
        member.classifier = train_adaboost(d.features, d.labels, e.class_count, inducer,
                                           params.boost_rounds, rng, params.min_leaf);
        e.members.push_back(std::move(member));
        return e;
    }
    }
    throw DataError("unknown strategy");
}

Classification classify(const EnsembleModel& e, std::span<const double> x) {
    if (x.size() != e.original_dim) {
        std::ostringstream msg;
        msg << "classify: point has " << x.size() << " features, ensemble expects "
            << e.original_dim;
        throw ShapeError(msg.str());
    }
    std::vector<double> point(x.begin(), x.end());
    if (e.standardizer.has_value()) point = e.standardizer->apply(point);

    std::vector<double> agg(static_cast<std::size_t>(e.class_count), 0.0);
    for (const auto& member : e.members) {
        const std::vector<double> embedded = embed_point(member.reducer, point);
        const std::vector<double> p = member_proba(member.classifier, embedded);
        for (std::size_t y = 0; y < agg.size(); ++y) agg[y] += p[y];
    }
    const double total = std::accumulate(agg.begin(), agg.end(), 0.0);
    for (double& v : agg) v /= total;

    Classification out;
    out.label = argmax_lowest(agg);
    out.probabilities = std::move(agg);
    return out;
}

} // namespace drx
