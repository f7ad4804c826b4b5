#include "drx/serialize.hpp"

#include "drx/error.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace drx {

namespace {

using nlohmann::json;

constexpr const char* kFormatTag = "drx-ensemble";
constexpr int kFormatVersion = 1;

json matrix_to_json(const Matrix& m) {
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Matrix matrix_from_json(const json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    const auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != m.rows() * m.cols()) {
        throw DataError("model file: matrix data length mismatch");
    }
    m.data() = data;
    return m;
}

json reducer_to_json(const ReducerModel& r) {
    if (std::holds_alternative<std::monostate>(r)) return nullptr;
    if (const auto* dm = std::get_if<DiffusionMapModel>(&r)) {
        return json{{"type", "dm"},
                    {"epsilon", dm->epsilon},
                    {"delta", dm->delta},
                    {"t", dm->t},
                    {"q", dm->q},
                    {"sample_points", matrix_to_json(dm->sample_points)},
                    {"kernel_eigvals", dm->kernel_eigvals},
                    {"kernel_eigvecs", matrix_to_json(dm->kernel_eigvecs)},
                    {"markov_eigvals", dm->markov_eigvals},
                    {"embed_coords", matrix_to_json(dm->embed_coords)},
                    {"coeffs", matrix_to_json(dm->coeffs)}};
    }
    if (const auto* rp = std::get_if<ProjectionModel>(&r)) {
        return json{{"type", "rp"},
                    {"mode", rp->mode == RpMode::gaussian ? "gaussian" : "bernoulli"},
                    {"seed", rp->seed},
                    {"matrix", matrix_to_json(rp->r)}};
    }
    const auto& rs = std::get<SubspaceModel>(r);
    return json{{"type", "rs"}, {"indices", rs.indices}};
}

ReducerModel reducer_from_json(const json& j) {
    if (j.is_null()) return std::monostate{};
    const std::string type = j.at("type").get<std::string>();
    if (type == "dm") {
        DiffusionMapModel dm;
        dm.epsilon = j.at("epsilon").get<double>();
        dm.delta = j.at("delta").get<double>();
        dm.t = j.at("t").get<double>();
        dm.q = j.at("q").get<std::size_t>();
        dm.sample_points = matrix_from_json(j.at("sample_points"));
        dm.kernel_eigvals = j.at("kernel_eigvals").get<std::vector<double>>();
        dm.kernel_eigvecs = matrix_from_json(j.at("kernel_eigvecs"));
        dm.markov_eigvals = j.at("markov_eigvals").get<std::vector<double>>();
        dm.embed_coords = matrix_from_json(j.at("embed_coords"));
        dm.coeffs = matrix_from_json(j.at("coeffs"));
        return dm;
    }
    if (type == "rp") {
        ProjectionModel rp;
        rp.mode = j.at("mode").get<std::string>() == "gaussian" ? RpMode::gaussian
                                                                : RpMode::bernoulli;
        rp.seed = j.at("seed").get<std::uint64_t>();
        rp.r = matrix_from_json(j.at("matrix"));
        return rp;
    }
    if (type == "rs") {
        SubspaceModel rs;
        rs.indices = j.at("indices").get<std::vector<std::size_t>>();
        return rs;
    }
    throw DataError("model file: unknown reducer type '" + type + "'");
}

json classifier_to_json(const ClassifierModel& c) {
    json j{{"kind", inducer_name(c.kind)}, {"class_count", c.class_count}};
    if (const auto* nn = std::get_if<NnPayload>(&c.payload)) {
        j["features"] = matrix_to_json(nn->features);
        j["labels"] = nn->labels;
    } else if (const auto* tree = std::get_if<TreePayload>(&c.payload)) {
        json nodes = json::array();
        for (const auto& node : tree->nodes) {
            nodes.push_back(json{{"feature", node.feature},
                                 {"threshold", node.threshold},
                                 {"left", node.left},
                                 {"right", node.right},
                                 {"probs", node.probs}});
        }
        j["nodes"] = std::move(nodes);
    } else {
        const auto& nb = std::get<NbPayload>(c.payload);
        j["priors"] = nb.priors;
        j["means"] = matrix_to_json(nb.means);
        j["variances"] = matrix_to_json(nb.variances);
    }
    return j;
}

ClassifierModel classifier_from_json(const json& j) {
    ClassifierModel c;
    c.kind = parse_inducer(j.at("kind").get<std::string>());
    c.class_count = j.at("class_count").get<int>();
    switch (c.kind) {
    case InducerKind::nn: {
        NnPayload nn;
        nn.features = matrix_from_json(j.at("features"));
        nn.labels = j.at("labels").get<std::vector<int>>();
        c.payload = std::move(nn);
        break;
    }
    case InducerKind::tree: {
        TreePayload tree;
        for (const auto& nj : j.at("nodes")) {
            TreeNode node;
            node.feature = nj.at("feature").get<int>();
            node.threshold = nj.at("threshold").get<double>();
            node.left = nj.at("left").get<std::size_t>();
            node.right = nj.at("right").get<std::size_t>();
            node.probs = nj.at("probs").get<std::vector<double>>();
            tree.nodes.push_back(std::move(node));
        }
        c.payload = std::move(tree);
        break;
    }
    case InducerKind::nb: {
        NbPayload nb;
        nb.priors = j.at("priors").get<std::vector<double>>();
        nb.means = matrix_from_json(j.at("means"));
        nb.variances = matrix_from_json(j.at("variances"));
        c.payload = std::move(nb);
        break;
    }
    }
    return c;
}

json member_classifier_to_json(const MemberClassifier& mc) {
    if (const auto* plain = std::get_if<ClassifierModel>(&mc)) {
        return classifier_to_json(*plain);
    }
    const auto& boosted = std::get<BoostedModel>(mc);
    json rounds = json::array();
    for (const auto& round : boosted.rounds) {
        rounds.push_back(json{{"stage_weight", round.stage_weight},
                              {"classifier", classifier_to_json(round.classifier)}});
    }
    return json{{"kind", "boosted"},
                {"class_count", boosted.class_count},
                {"rounds", std::move(rounds)}};
}

MemberClassifier member_classifier_from_json(const json& j) {
    if (j.at("kind").get<std::string>() == "boosted") {
        BoostedModel boosted;
        boosted.class_count = j.at("class_count").get<int>();
        for (const auto& rj : j.at("rounds")) {
            boosted.rounds.push_back(
                {classifier_from_json(rj.at("classifier")), rj.at("stage_weight").get<double>()});
        }
        return boosted;
    }
    return classifier_from_json(j);
}

} // namespace

std::string ensemble_to_json(const EnsembleModel& e) {
    json members = json::array();
    for (const auto& member : e.members) {
        members.push_back(json{{"member_seed", member.member_seed},
                               {"reducer", reducer_to_json(member.reducer)},
                               {"classifier", member_classifier_to_json(member.classifier)}});
    }
    json j{{"format", kFormatTag},
           {"version", kFormatVersion},
           {"strategy", strategy_name(e.strategy)},
           {"class_count", e.class_count},
           {"class_names", e.class_names},
           {"original_dim", e.original_dim},
           {"members", std::move(members)}};
    if (e.standardizer.has_value()) {
        j["standardizer"] =
            json{{"means", e.standardizer->means}, {"scales", e.standardizer->scales}};
    } else {
        j["standardizer"] = nullptr;
    }
    return j.dump(2) + "\n";
}

EnsembleModel ensemble_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("model file: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != kFormatTag) {
            throw DataError("model file: unrecognized format tag");
        }
        if (j.at("version").get<int>() != kFormatVersion) {
            throw DataError("model file: version " + j.at("version").dump() +
                            " not supported (expected " + std::to_string(kFormatVersion) + ")");
        }
        EnsembleModel e;
        e.strategy = parse_strategy(j.at("strategy").get<std::string>());
        e.class_count = j.at("class_count").get<int>();
        e.class_names = j.at("class_names").get<std::vector<std::string>>();
        e.original_dim = j.at("original_dim").get<std::size_t>();
        if (!j.at("standardizer").is_null()) {
            StandardizeRecord rec;
            rec.means = j.at("standardizer").at("means").get<std::vector<double>>();
            rec.scales = j.at("standardizer").at("scales").get<std::vector<double>>();
            e.standardizer = std::move(rec);
        }
        for (const auto& mj : j.at("members")) {
            EnsembleMember member;
            member.member_seed = mj.at("member_seed").get<std::uint64_t>();
            member.reducer = reducer_from_json(mj.at("reducer"));
            member.classifier = member_classifier_from_json(mj.at("classifier"));
            e.members.push_back(std::move(member));
        }
        return e;
    } catch (const json::exception& e) {
        throw DataError(std::string("model file: ") + e.what());
    }
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write " + tmp);
        out << content;
        if (!out) throw DataError("write failed for " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw DataError("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

void save_ensemble(const EnsembleModel& e, const std::string& path) {
    write_file_atomic(path, ensemble_to_json(e));
}

EnsembleModel load_ensemble(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return ensemble_from_json(text);
}

} // namespace drx
