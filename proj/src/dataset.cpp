#include "drx/dataset.hpp"

#include "drx/error.hpp"
#include "drx/rng.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace drx {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

bool parse_double(const std::string& s, double& out) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

int intern_class(std::vector<std::string>& names, const std::string& name) {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return static_cast<int>(i);
    }
    names.push_back(name);
    return static_cast<int>(names.size()) - 1;
}

Dataset assemble(std::vector<std::vector<double>>&& rows, std::vector<int>&& labels,
                 std::vector<std::string>&& class_names, const std::string& origin) {
    if (rows.empty()) throw DataError(origin + ": empty dataset");
    Dataset d;
    d.features = Matrix(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(rows[i].begin(), rows[i].end(), d.features.row(i).begin());
    }
    d.labels = std::move(labels);
    d.class_names = std::move(class_names);
    return d;
}

} // namespace

Dataset load_csv(const std::string& path, const std::string& label_column) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": missing header row");
    const std::vector<std::string> header = split_csv_line(line);
    if (header.empty()) throw DataError(path + ": empty header row");

    std::size_t label_idx = header.size() - 1;
    if (!label_column.empty()) {
        auto it = std::find(header.begin(), header.end(), label_column);
        if (it == header.end()) {
            throw DataError(path + ": no column named '" + label_column + "'");
        }
        label_idx = static_cast<std::size_t>(it - header.begin());
    }

    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::vector<std::string> class_names;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            std::ostringstream msg;
            msg << path << ":" << line_no << ": expected " << header.size()
                << " cells, got " << cells.size();
            throw DataError(msg.str());
        }
        std::vector<double> row;
        row.reserve(cells.size() - 1);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c == label_idx) continue;
            double v;
            if (!parse_double(cells[c], v)) {
                std::ostringstream msg;
                msg << path << ":" << line_no << ": non-numeric cell '" << cells[c]
                    << "' in column " << c + 1;
                throw DataError(msg.str());
            }
            row.push_back(v);
        }
        rows.push_back(std::move(row));
        labels.push_back(intern_class(class_names, cells[label_idx]));
    }
    return assemble(std::move(rows), std::move(labels), std::move(class_names), path);
}

Dataset load_arff(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);

    struct Attribute {
        std::string name;
        bool is_class = false;
        std::vector<std::string> values; // class attribute only
    };
    std::vector<Attribute> attrs;
    std::size_t class_attr = SIZE_MAX;

    std::string line;
    std::size_t line_no = 0;
    bool in_data = false;
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::vector<std::string> class_names;

    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line.substr(0, line.find('%')));
        if (stripped.empty()) continue;

        if (!in_data) {
            const std::string low = lower(stripped);
            if (low.rfind("@relation", 0) == 0) continue;
            if (low.rfind("@data", 0) == 0) {
                if (attrs.empty()) throw DataError(path + ": @data before any @attribute");
                if (class_attr == SIZE_MAX) {
                    throw DataError(path + ": no nominal class attribute declared");
                }
                in_data = true;
                continue;
            }
            if (low.rfind("@attribute", 0) == 0) {
                std::istringstream decl(stripped.substr(10));
                std::string name;
                decl >> name;
                std::string rest = trim(std::string(std::istreambuf_iterator<char>(decl), {}));
                if (rest.empty()) {
                    std::ostringstream msg;
                    msg << path << ":" << line_no << ": attribute '" << name << "' has no type";
                    throw DataError(msg.str());
                }
                if (rest.front() == '{') {
                    if (rest.back() != '}') {
                        std::ostringstream msg;
                        msg << path << ":" << line_no << ": unterminated nominal value list";
                        throw DataError(msg.str());
                    }
                    if (class_attr != SIZE_MAX) {
                        std::ostringstream msg;
                        msg << path << ":" << line_no
                            << ": multiple nominal attributes; only one class attribute is supported";
                        throw DataError(msg.str());
                    }
                    Attribute a;
                    a.name = name;
                    a.is_class = true;
                    for (const auto& v : split_csv_line(rest.substr(1, rest.size() - 2))) {
                        if (!v.empty()) a.values.push_back(v);
                    }
                    class_attr = attrs.size();
                    attrs.push_back(std::move(a));
                } else if (lower(rest) == "numeric" || lower(rest) == "real" ||
                           lower(rest) == "integer") {
                    attrs.push_back({name, false, {}});
                } else {
                    std::ostringstream msg;
                    msg << path << ":" << line_no << ": unsupported attribute type '" << rest
                        << "' for '" << name << "'";
                    throw DataError(msg.str());
                }
                continue;
            }
            std::ostringstream msg;
            msg << path << ":" << line_no << ": unrecognized declaration '" << stripped << "'";
            throw DataError(msg.str());
        }

        const std::vector<std::string> cells = split_csv_line(stripped);
        if (cells.size() != attrs.size()) {
            std::ostringstream msg;
            msg << path << ":" << line_no << ": expected " << attrs.size() << " values, got "
                << cells.size();
            throw DataError(msg.str());
        }
        std::vector<double> row;
        row.reserve(attrs.size() - 1);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (cells[c] == "?") {
                std::ostringstream msg;
                msg << path << ":" << line_no << ": missing value ('?') is not supported";
                throw DataError(msg.str());
            }
            if (c == class_attr) {
                const auto& allowed = attrs[c].values;
                if (std::find(allowed.begin(), allowed.end(), cells[c]) == allowed.end()) {
                    std::ostringstream msg;
                    msg << path << ":" << line_no << ": class value '" << cells[c]
                        << "' not in declared set";
                    throw DataError(msg.str());
                }
                labels.push_back(intern_class(class_names, cells[c]));
            } else {
                double v;
                if (!parse_double(cells[c], v)) {
                    std::ostringstream msg;
                    msg << path << ":" << line_no << ": non-numeric value '" << cells[c]
                        << "' for attribute '" << attrs[c].name << "'";
                    throw DataError(msg.str());
                }
                row.push_back(v);
            }
        }
        rows.push_back(std::move(row));
    }
    if (!in_data) throw DataError(path + ": no @data section");
    return assemble(std::move(rows), std::move(labels), std::move(class_names), path);
}

void save_csv(const Dataset& d, const std::string& path, const std::string& label_name) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    for (std::size_t c = 0; c < d.dim(); ++c) out << "f" << c << ",";
    out << label_name << "\n";
    char buf[32];
    for (std::size_t i = 0; i < d.size(); ++i) {
        for (double v : d.features.row(i)) {
            // %.17g round-trips doubles exactly.
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << buf << ",";
        }
        out << d.class_names[d.labels[i]] << "\n";
    }
    if (!out) throw DataError("write failed for " + path);
}

std::vector<double> StandardizeRecord::apply(std::span<const double> x) const {
    if (x.size() != means.size()) throw ShapeError("standardize: arity mismatch");
    std::vector<double> out(x.size());
    for (std::size_t c = 0; c < x.size(); ++c) {
        out[c] = scales[c] == 0.0 ? 0.0 : (x[c] - means[c]) / scales[c];
    }
    return out;
}

std::pair<Dataset, StandardizeRecord> standardize(const Dataset& d) {
    if (d.size() < 2) throw DataError("standardize: need at least 2 instances");
    StandardizeRecord rec;
    rec.means.resize(d.dim());
    rec.scales.resize(d.dim());
    const double n = static_cast<double>(d.size());
    for (std::size_t c = 0; c < d.dim(); ++c) {
        double sum = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) sum += d.features(i, c);
        const double mean = sum / n;
        double ss = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            const double dev = d.features(i, c) - mean;
            ss += dev * dev;
        }
        const double stdev = std::sqrt(ss / n);
        rec.means[c] = mean;
        rec.scales[c] = stdev > 1e-12 ? stdev : 0.0;
    }
    return {apply_standardize(d, rec), rec};
}

Dataset apply_standardize(const Dataset& d, const StandardizeRecord& rec) {
    Dataset out = d;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const std::vector<double> t = rec.apply(d.features.row(i));
        std::copy(t.begin(), t.end(), out.features.row(i).begin());
    }
    return out;
}

FoldPlan stratified_folds(const Dataset& d, int k, std::uint64_t seed) {
    if (k < 2) throw DataError("stratified_folds: k must be >= 2");
    if (static_cast<std::size_t>(k) > d.size()) {
        throw DataError("stratified_folds: k exceeds dataset size");
    }
    std::vector<std::vector<std::size_t>> by_class(d.class_names.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        by_class[static_cast<std::size_t>(d.labels[i])].push_back(i);
    }

    Rng rng(seed);
    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.assignments.assign(d.size(), 0);
    // Round-robin within each class; the cursor carries across classes so
    // small classes do not pile onto the low-numbered folds.
    int cursor = 0;
    for (auto& members : by_class) {
        rng.shuffle(members);
        for (std::size_t j = 0; j < members.size(); ++j) {
            plan.assignments[members[j]] = cursor;
            cursor = (cursor + 1) % k;
        }
    }
    return plan;
}

Dataset make_gaussian_blobs(std::size_t n_per_class, std::size_t n_features, int class_count,
                            double spread, std::uint64_t seed) {
    if (n_per_class == 0 || n_features == 0 || class_count < 1) {
        throw DataError("make_gaussian_blobs: all counts must be >= 1");
    }
    Rng rng(seed);
    Dataset d;
    d.features = Matrix(n_per_class * static_cast<std::size_t>(class_count), n_features);
    d.labels.reserve(d.features.rows());
    for (int c = 0; c < class_count; ++c) {
        d.class_names.push_back("c" + std::to_string(c));
        for (std::size_t i = 0; i < n_per_class; ++i) {
            const std::size_t r = static_cast<std::size_t>(c) * n_per_class + i;
            for (std::size_t f = 0; f < n_features; ++f) {
                const double center = f == 0 ? static_cast<double>(c) : 0.0;
                d.features(r, f) = center + spread * rng.normal();
            }
            d.labels.push_back(c);
        }
    }
    return d;
}

Dataset select_rows(const Dataset& d, const std::vector<std::size_t>& indices) {
    Dataset out;
    out.features = Matrix(indices.size(), d.dim());
    out.labels.reserve(indices.size());
    out.class_names = d.class_names;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto src = d.features.row(indices[i]);
        std::copy(src.begin(), src.end(), out.features.row(i).begin());
        out.labels.push_back(d.labels[indices[i]]);
    }
    return out;
}

} // namespace drx
