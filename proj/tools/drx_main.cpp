#include "drx/ensemble.hpp"
#include "drx/error.hpp"
#include "drx/eval.hpp"
#include "drx/serialize.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct RunConfig {
    std::vector<std::string> data_paths;
    std::vector<std::string> strategies = {"plain"};
    std::string inducer = "nn";
    int members = 10;
    double dim_fraction = 0.5;
    int folds = 10;
    std::uint64_t seed = 42;
    bool seed_given = false;
    std::size_t dm_sample = 600;
    double dm_delta = 1e-8;
    double dm_t = 1.0;
    int boost_rounds = 10;
    bool standardize = false;
    int threads = 1;
    std::string out = ".";
    std::string format = "json";
    std::string config_path;
};

std::uint64_t resolve_seed(const RunConfig& cfg) {
    if (cfg.seed_given) return cfg.seed;
    if (const char* env = std::getenv("DRX_SEED")) {
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(env, env + std::strlen(env), v);
        if (ec == std::errc() && ptr == env + std::strlen(env)) return v;
        throw drx::DataError("DRX_SEED is not a valid unsigned integer");
    }
    return cfg.seed;
}

drx::Dataset load_any(const std::string& path) {
    std::string ext = fs::path(path).extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext == ".arff" ? drx::load_arff(path) : drx::load_csv(path);
}

drx::AlgorithmSpec make_spec(const RunConfig& cfg, const std::string& strategy) {
    drx::AlgorithmSpec spec;
    spec.strategy = drx::parse_strategy(strategy);
    spec.inducer = drx::parse_inducer(cfg.inducer);
    spec.params.members = cfg.members;
    spec.params.dim_fraction = cfg.dim_fraction;
    spec.params.boost_rounds = cfg.boost_rounds;
    spec.params.dm.sample_size = cfg.dm_sample;
    spec.params.dm.delta = cfg.dm_delta;
    spec.params.dm.t = cfg.dm_t;
    spec.params.threads = cfg.threads;
    spec.standardize = cfg.standardize;
    return spec;
}

void add_common_options(CLI::App* cmd, RunConfig& cfg, bool with_folds) {
    cmd->add_option("--data", cfg.data_paths, "Input dataset file(s), CSV or ARFF")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--inducer", cfg.inducer, "Base inducer: nn | tree | nb")
        ->check(CLI::IsMember({"nn", "tree", "nb"}));
    cmd->add_option("--members", cfg.members, "Ensemble size K")->check(CLI::PositiveNumber);
    cmd->add_option("--dim-frac", cfg.dim_fraction,
                    "Reduced dimension as a fraction of the original")
        ->check(CLI::Range(1e-9, 1.0));
    if (with_folds) {
        cmd->add_option("--folds", cfg.folds, "Cross-validation folds")->check(CLI::Range(2, 1000));
    }
    cmd->add_option("--seed", cfg.seed, "Master random seed (fallback: DRX_SEED, then 42)")
        ->each([&cfg](const std::string&) { cfg.seed_given = true; });
    cmd->add_option("--rounds", cfg.boost_rounds, "AdaBoost rounds")->check(CLI::PositiveNumber);
    cmd->add_option("--dm-sample", cfg.dm_sample, "Diffusion-map sample size")
        ->check(CLI::Range(static_cast<std::size_t>(2), static_cast<std::size_t>(100000)));
    cmd->add_option("--dm-delta", cfg.dm_delta, "Nystrom eigenvalue cutoff delta")
        ->check(CLI::Range(1e-300, 1.0));
    cmd->add_option("--dm-t", cfg.dm_t, "Diffusion time t")->check(CLI::PositiveNumber);
    cmd->add_flag("--standardize", cfg.standardize, "Standardize features (off by default)");
    cmd->add_option("--threads", cfg.threads, "Worker threads for member training")
        ->check(CLI::Range(1, 256));
    cmd->add_option("--config", cfg.config_path,
                    "Read defaults from a key=value config file (flags override it)");
}

// Explicit flags override config-file values, which override defaults.
// Implemented as token injection: keys absent from the command line are
// appended as options before parsing.
std::vector<std::string> expand_config_args(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);

    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            config_path = args[i + 1];
        } else if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
        }
    }
    if (config_path.empty()) return args;

    std::ifstream in(config_path);
    if (!in) throw drx::DataError("cannot open config file " + config_path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        if (line.front() == '[') continue; // section headers are ignored
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw drx::DataError(config_path + ":" + std::to_string(line_no) +
                                 ": expected key=value");
        }
        auto trim = [](std::string v) {
            const auto b = v.find_first_not_of(" \t");
            const auto e = v.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw drx::DataError(config_path + ":" + std::to_string(line_no) + ": empty key");
        }

        const std::string flag = "--" + key;
        const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
            return a == flag || a.rfind(flag + "=", 0) == 0;
        });
        if (given) continue;
        if (value == "true") {
            args.push_back(flag);
        } else if (value == "false") {
            continue;
        } else {
            args.push_back(flag);
            args.push_back(value);
        }
    }
    return args;
}

int run_benchmark(RunConfig& cfg) {
    const std::uint64_t seed = resolve_seed(cfg);
    fs::create_directories(cfg.out);
    const drx::ReportFormat format = drx::parse_report_format(cfg.format);

    int exit_code = kExitOk;
    for (const auto& path : cfg.data_paths) {
        const std::string dataset_name = fs::path(path).stem().string();
        try {
            const drx::Dataset d = load_any(path);
            for (const auto& strategy : cfg.strategies) {
                const drx::AlgorithmSpec spec = make_spec(cfg, strategy);
                drx::EvalReport report =
                    drx::cross_validate(d, dataset_name, spec, cfg.folds, seed);
                std::printf("%s %s: %.2f ± %.2f  (%.0f ms)\n", dataset_name.c_str(),
                            report.algorithm.c_str(), 100.0 * report.mean,
                            100.0 * report.stdev, report.wall_time_ms);
                // Timing goes to the console only; the report file must be
                // byte-identical across reruns of the same config.
                report.wall_time_ms = 0.0;
                std::ostringstream name;
                name << dataset_name << "-" << strategy << "-" << cfg.inducer << "-" << seed
                     << ".json";
                const fs::path out_path = fs::path(cfg.out) / name.str();
                drx::write_file_atomic(out_path.string(), drx::report_to_json(report));
                if (format != drx::ReportFormat::json) {
                    fs::path alt = out_path;
                    alt.replace_extension(format == drx::ReportFormat::csv ? ".csv" : ".md");
                    drx::emit_report({report}, format, alt.string());
                }
            }
        } catch (const drx::NumericError& e) {
            std::cerr << "error (" << dataset_name << "): " << e.what() << "\n";
            if (exit_code == kExitOk) exit_code = kExitNumeric;
        } catch (const std::exception& e) {
            std::cerr << "error (" << dataset_name << "): " << e.what() << "\n";
            if (exit_code == kExitOk) exit_code = kExitData;
        }
    }
    return exit_code;
}

int run_train(RunConfig& cfg, const std::string& model_out) {
    const std::uint64_t seed = resolve_seed(cfg);
    if (cfg.data_paths.size() != 1) {
        throw drx::DataError("train expects exactly one --data file");
    }
    if (cfg.strategies.size() != 1) {
        throw drx::DataError("train expects exactly one --ensemble strategy");
    }
    const drx::Dataset d = load_any(cfg.data_paths[0]);
    const drx::AlgorithmSpec spec = make_spec(cfg, cfg.strategies[0]);

    drx::EnsembleModel model;
    if (spec.standardize) {
        auto [scaled, rec] = drx::standardize(d);
        model = drx::train_ensemble(scaled, spec.strategy, spec.inducer, spec.params, seed);
        model.standardizer = std::move(rec);
    } else {
        model = drx::train_ensemble(d, spec.strategy, spec.inducer, spec.params, seed);
    }
    drx::save_ensemble(model, model_out);
    std::printf("wrote %s (%zu members, %d classes)\n", model_out.c_str(), model.members.size(),
                model.class_count);
    return kExitOk;
}

// Accepts both bare feature files and files that still carry the label
// column; the model's arity disambiguates.
drx::Matrix load_predict_features(const std::string& path, std::size_t expected_n) {
    std::ifstream in(path);
    if (!in) throw drx::DataError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw drx::DataError(path + ": missing header row");

    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ss(s);
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        return cells;
    };
    const std::size_t width = split(line).size();
    if (width != expected_n && width != expected_n + 1) {
        std::ostringstream msg;
        msg << path << ": expected " << expected_n << " feature columns (label column optional), got "
            << width;
        throw drx::DataError(msg.str());
    }

    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != width) {
            std::ostringstream msg;
            msg << path << ":" << line_no << ": expected " << width << " cells, got "
                << cells.size();
            throw drx::DataError(msg.str());
        }
        std::vector<double> row(expected_n);
        for (std::size_t c = 0; c < expected_n; ++c) {
            const std::string& cell = cells[c];
            const char* begin = cell.data();
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(begin, begin + cell.size(), v);
            if (ec != std::errc() || ptr != begin + cell.size() || !std::isfinite(v)) {
                std::ostringstream msg;
                msg << path << ":" << line_no << ": non-numeric cell '" << cell << "'";
                throw drx::DataError(msg.str());
            }
            row[c] = v;
        }
        rows.push_back(std::move(row));
    }
    drx::Matrix features(rows.size(), expected_n);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(rows[i].begin(), rows[i].end(), features.row(i).begin());
    }
    return features;
}

int run_predict(const std::string& model_path, const std::string& data_path,
                const std::string& out_path) {
    const drx::EnsembleModel model = drx::load_ensemble(model_path);
    const drx::Matrix features = load_predict_features(data_path, model.original_dim);

    std::ostringstream out;
    out << "prediction";
    for (const auto& name : model.class_names) out << ",p_" << name;
    out << "\n";
    char buf[32];
    for (std::size_t i = 0; i < features.rows(); ++i) {
        const drx::Classification c = drx::classify(model, features.row(i));
        out << model.class_names[static_cast<std::size_t>(c.label)];
        for (double p : c.probabilities) {
            std::snprintf(buf, sizeof buf, "%.17g", p);
            out << "," << buf;
        }
        out << "\n";
    }
    drx::write_file_atomic(out_path, out.str());
    std::printf("wrote %s (%zu rows)\n", out_path.c_str(), features.rows());
    return kExitOk;
}

int run_stats(const std::vector<std::string>& report_args, double alpha,
              const std::string& out_path) {
    std::vector<std::string> files;
    for (const auto& arg : report_args) {
        if (fs::is_directory(arg)) {
            for (const auto& entry : fs::directory_iterator(arg)) {
                if (entry.path().extension() == ".json") files.push_back(entry.path().string());
            }
        } else {
            files.push_back(arg);
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw drx::DataError("stats: no report files found");

    std::vector<drx::EvalReport> reports;
    for (const auto& file : files) {
        std::ifstream in(file);
        if (!in) throw drx::DataError("cannot open " + file);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        reports.push_back(drx::report_from_json(text));
    }

    // Algorithm names are "<strategy>-<inducer>". With a single inducer the
    // table rows are datasets and the columns full algorithm names. With
    // several inducers each (dataset, inducer) pair becomes one row and the
    // columns collapse to strategies, so three inducers over 17 datasets
    // rank as a 51-row table.
    std::set<std::string> inducers;
    for (const auto& r : reports) {
        const auto pos = r.algorithm.rfind('-');
        if (pos != std::string::npos) inducers.insert(r.algorithm.substr(pos + 1));
    }
    const bool stack_inducers = inducers.size() > 1;

    // Cells averaged over seeds when several reports cover the same pair.
    std::vector<std::string> datasets;
    std::vector<std::string> algorithms;
    std::map<std::pair<std::string, std::string>, std::pair<double, int>> cells;
    for (const auto& r : reports) {
        std::string row = r.dataset;
        std::string column = r.algorithm;
        if (stack_inducers) {
            const auto pos = r.algorithm.rfind('-');
            row += ":" + r.algorithm.substr(pos + 1);
            column = r.algorithm.substr(0, pos);
        }
        if (std::find(datasets.begin(), datasets.end(), row) == datasets.end()) {
            datasets.push_back(row);
        }
        if (std::find(algorithms.begin(), algorithms.end(), column) == algorithms.end()) {
            algorithms.push_back(column);
        }
        auto& cell = cells[{row, column}];
        cell.first += r.mean;
        cell.second += 1;
    }
    std::sort(datasets.begin(), datasets.end());
    std::sort(algorithms.begin(), algorithms.end());

    drx::Matrix accuracy(datasets.size(), algorithms.size());
    for (std::size_t d = 0; d < datasets.size(); ++d) {
        for (std::size_t a = 0; a < algorithms.size(); ++a) {
            const auto it = cells.find({datasets[d], algorithms[a]});
            if (it == cells.end()) {
                throw drx::DataError("stats: missing cell (" + datasets[d] + ", " +
                                     algorithms[a] + ")");
            }
            accuracy(d, a) = it->second.first / it->second.second;
        }
    }

    const drx::RankSummary summary = drx::rank_summary(algorithms, datasets, accuracy, alpha);
    drx::write_file_atomic(out_path, drx::rank_summary_to_json(summary));

    fs::path md_path(out_path);
    md_path.replace_extension(".md");
    std::string md = drx::render_reports(reports, drx::ReportFormat::markdown);
    md += "\n" + drx::render_rank_summary_markdown(summary);
    drx::write_file_atomic(md_path.string(), md);

    std::printf("wrote %s and %s\n", out_path.c_str(), md_path.string().c_str());
    for (std::size_t a = 0; a < algorithms.size(); ++a) {
        std::printf("  %-24s average rank %.2f\n", algorithms[a].c_str(),
                    summary.average_ranks[a]);
    }
    std::printf("  Friedman chi2 = %.4f, F(%d,%d) = %.4g, CD(alpha=%.2f) = %.4f\n",
                summary.friedman_chi2, summary.df1, summary.df2, summary.iman_davenport_f,
                summary.alpha, summary.nemenyi_cd);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dimensionality-reduction ensemble classifiers"};
    app.require_subcommand(1);

    RunConfig cfg;

    auto* bench = app.add_subcommand("benchmark", "Cross-validate strategies over datasets");
    add_common_options(bench, cfg, true);
    bench->add_option("--ensemble", cfg.strategies,
                      "Strategy: plain | rpe | rse | dme | dme-adaboost | bagging | adaboost")
        ->check(CLI::IsMember(
            {"plain", "rpe", "rse", "dme", "dme-adaboost", "bagging", "adaboost"}));
    bench->add_option("--out", cfg.out, "Output directory for report files");
    bench->add_option("--format", cfg.format, "Extra report format: json | csv | markdown")
        ->check(CLI::IsMember({"json", "csv", "markdown"}));

    std::string model_out = "model.json";
    auto* train_cmd = app.add_subcommand("train", "Train an ensemble and save it");
    add_common_options(train_cmd, cfg, false);
    train_cmd
        ->add_option("--ensemble", cfg.strategies,
                     "Strategy: plain | rpe | rse | dme | dme-adaboost | bagging | adaboost")
        ->check(CLI::IsMember(
            {"plain", "rpe", "rse", "dme", "dme-adaboost", "bagging", "adaboost"}));
    train_cmd->add_option("--out", model_out, "Model output path");

    std::string model_in;
    std::string predict_data;
    std::string predict_out = "predictions.csv";
    auto* predict_cmd = app.add_subcommand("predict", "Classify rows with a saved ensemble");
    predict_cmd->add_option("--model", model_in, "Model file from `train`")
        ->required()
        ->check(CLI::ExistingFile);
    predict_cmd->add_option("--data", predict_data, "Feature rows (CSV)")
        ->required()
        ->check(CLI::ExistingFile);
    predict_cmd->add_option("--out", predict_out, "Predictions output path");

    std::vector<std::string> report_args;
    double alpha = 0.05;
    std::string stats_out = "stats.json";
    auto* stats_cmd = app.add_subcommand("stats", "Rank statistics over benchmark reports");
    stats_cmd->add_option("--reports", report_args, "Report files or directories")->required();
    stats_cmd->add_option("--alpha", alpha, "Significance level: 0.05 or 0.10")
        ->check(CLI::IsMember({0.05, 0.10}));
    stats_cmd->add_option("--out", stats_out, "RankSummary JSON output path");

    try {
        std::vector<std::string> args = expand_config_args(argc, argv);
        std::reverse(args.begin(), args.end()); // CLI11 consumes from the back
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const drx::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }

    try {
        if (bench->parsed()) return run_benchmark(cfg);
        if (train_cmd->parsed()) return run_train(cfg, model_out);
        if (predict_cmd->parsed()) return run_predict(model_in, predict_data, predict_out);
        return run_stats(report_args, alpha, stats_out);
    } catch (const drx::NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const drx::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const drx::ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
