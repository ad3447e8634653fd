#include "negm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "negm/error.hpp"

namespace negm {

TableSchema kdd_schema() {
    TableSchema schema;
    auto num = [&](const char* n) { schema.columns.push_back({n, ColumnKind::numeric}); };
    auto cat = [&](const char* n) { schema.columns.push_back({n, ColumnKind::categorical}); };
    auto bin = [&](const char* n) { schema.columns.push_back({n, ColumnKind::binary}); };
    num("duration");
    cat("protocol_type");
    cat("service");
    cat("flag");
    num("src_bytes");
    num("dst_bytes");
    bin("land");
    num("wrong_fragment");
    num("urgent");
    num("hot");
    num("num_failed_logins");
    bin("logged_in");
    num("num_compromised");
    bin("root_shell");
    num("su_attempted");
    num("num_root");
    num("num_file_creations");
    num("num_shells");
    num("num_access_files");
    num("num_outbound_cmds");
    bin("is_host_login");
    bin("is_guest_login");
    num("count");
    num("srv_count");
    num("serror_rate");
    num("srv_serror_rate");
    num("rerror_rate");
    num("srv_rerror_rate");
    num("same_srv_rate");
    num("diff_srv_rate");
    num("srv_diff_host_rate");
    num("dst_host_count");
    num("dst_host_srv_count");
    num("dst_host_same_srv_rate");
    num("dst_host_diff_srv_rate");
    num("dst_host_same_src_port_rate");
    num("dst_host_srv_diff_host_rate");
    num("dst_host_serror_rate");
    num("dst_host_srv_serror_rate");
    num("dst_host_rerror_rate");
    num("dst_host_srv_rerror_rate");
    schema.label_column = "label";
    return schema;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

void strip_cr(std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
}

}  // namespace

RawTable load_csv(const std::string& path, const TableSchema& schema) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::usage, "cannot open csv file: " + path);

    std::string header_line;
    if (!std::getline(in, header_line)) fail(ErrorKind::usage, "empty csv file: " + path);
    strip_cr(header_line);
    const std::vector<std::string> header = split_line(header_line);

    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < header.size(); ++i) position[header[i]] = i;

    std::vector<std::size_t> column_pos(schema.columns.size());
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
        auto it = position.find(schema.columns[c].name);
        if (it == position.end())
            fail(ErrorKind::usage, "csv header is missing column '" + schema.columns[c].name + "'");
        column_pos[c] = it->second;
    }
    auto label_it = position.find(schema.label_column);
    if (label_it == position.end())
        fail(ErrorKind::usage, "csv header is missing label column '" + schema.label_column + "'");
    const std::size_t label_pos = label_it->second;

    RawTable table;
    table.schema = schema;
    table.numeric_columns.resize(schema.columns.size());
    table.categorical_columns.resize(schema.columns.size());

    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        strip_cr(line);
        if (line.empty()) continue;
        ++row;
        const std::vector<std::string> fields = split_line(line);
        if (fields.size() != header.size())
            fail(ErrorKind::usage, "csv row " + std::to_string(row) + ": expected " +
                                       std::to_string(header.size()) + " fields, got " +
                                       std::to_string(fields.size()));
        for (std::size_t c = 0; c < schema.columns.size(); ++c) {
            const std::string& cell = fields[column_pos[c]];
            if (schema.columns[c].kind == ColumnKind::categorical) {
                table.categorical_columns[c].push_back(cell);
            } else {
                char* end = nullptr;
                const double v = std::strtod(cell.c_str(), &end);
                if (end == cell.c_str() || *end != '\0' || !std::isfinite(v))
                    fail(ErrorKind::usage, "csv row " + std::to_string(row) + ", column '" +
                                               schema.columns[c].name + "': cannot parse '" +
                                               cell + "' as a number");
                table.numeric_columns[c].push_back(v);
            }
        }
        table.labels.push_back(fields[label_pos]);
    }
    table.row_count = row;
    return table;
}

void FeatureMatrix::rebuild_class_names() {
    class_names.clear();
    std::set<std::string> seen;
    for (const std::string& l : labels) {
        if (seen.insert(l).second) class_names.push_back(l);
    }
}

std::vector<std::size_t> FeatureMatrix::rows_of_class(const std::string& name) const {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < labels.size(); ++r)
        if (labels[r] == name) rows.push_back(r);
    return rows;
}

namespace {

constexpr char kDatasetMagic[4] = {'N', 'E', 'G', 'M'};
constexpr std::uint32_t kDatasetVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& what) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) fail(ErrorKind::usage, "truncated dataset file while reading " + what);
    return value;
}

}  // namespace

void save_feature_matrix(const FeatureMatrix& fm, const std::string& path) {
    if (fm.labels.size() != fm.data.rows)
        fail(ErrorKind::usage, "feature matrix has " + std::to_string(fm.labels.size()) +
                                   " labels for " + std::to_string(fm.data.rows) + " rows");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::usage, "cannot write dataset file: " + path);
    out.write(kDatasetMagic, 4);
    write_pod(out, kDatasetVersion);
    write_pod(out, static_cast<std::uint64_t>(fm.data.rows));
    write_pod(out, static_cast<std::uint64_t>(fm.data.cols));
    out.write(reinterpret_cast<const char*>(fm.data.values.data()),
              static_cast<std::streamsize>(fm.data.values.size() * sizeof(double)));
    for (const std::string& label : fm.labels) {
        write_pod(out, static_cast<std::uint32_t>(label.size()));
        out.write(label.data(), static_cast<std::streamsize>(label.size()));
    }
    if (!out) fail(ErrorKind::usage, "failed writing dataset file: " + path);
}

FeatureMatrix load_feature_matrix(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::usage, "cannot open dataset file: " + path);
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kDatasetMagic, 4) != 0)
        fail(ErrorKind::usage, "not a dataset container (bad magic): " + path);
    const auto version = read_pod<std::uint32_t>(in, "version");
    if (version > kDatasetVersion)
        fail(ErrorKind::usage, "dataset file version " + std::to_string(version) +
                                   " is newer than supported version " +
                                   std::to_string(kDatasetVersion));
    const auto rows = read_pod<std::uint64_t>(in, "row count");
    const auto cols = read_pod<std::uint64_t>(in, "column count");
    FeatureMatrix fm;
    fm.data = Matrix(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
    in.read(reinterpret_cast<char*>(fm.data.values.data()),
            static_cast<std::streamsize>(fm.data.values.size() * sizeof(double)));
    if (!in) fail(ErrorKind::usage, "truncated dataset file while reading values");
    fm.labels.reserve(rows);
    for (std::uint64_t r = 0; r < rows; ++r) {
        const auto len = read_pod<std::uint32_t>(in, "label length");
        std::string label(len, '\0');
        in.read(label.data(), len);
        if (!in) fail(ErrorKind::usage, "truncated dataset file while reading labels");
        fm.labels.push_back(std::move(label));
    }
    fm.rebuild_class_names();
    return fm;
}

Encoder Encoder::fit(const RawTable& table, const DropPolicy& policy) {
    Encoder enc;
    enc.schema_ = table.schema;
    enc.keep_.assign(table.schema.columns.size(), true);
    enc.categories_.resize(table.schema.columns.size());

    const std::set<std::string> drop_set(policy.drop_columns.begin(), policy.drop_columns.end());
    for (std::size_t c = 0; c < table.schema.columns.size(); ++c) {
        const ColumnSpec& col = table.schema.columns[c];
        if (drop_set.count(col.name)) {
            enc.keep_[c] = false;
            enc.dropped_.push_back(col.name);
            continue;
        }
        if (col.kind == ColumnKind::categorical) {
            std::set<std::string> uniq(table.categorical_columns[c].begin(),
                                       table.categorical_columns[c].end());
            if (uniq.size() < 2) {
                enc.keep_[c] = false;
                enc.dropped_.push_back(col.name);
                continue;
            }
            enc.categories_[c].assign(uniq.begin(), uniq.end());
            enc.width_ += uniq.size();
        } else {
            const std::vector<double>& vals = table.numeric_columns[c];
            const bool constant =
                vals.empty() ||
                std::all_of(vals.begin(), vals.end(), [&](double v) { return v == vals[0]; });
            if (constant) {
                enc.keep_[c] = false;
                enc.dropped_.push_back(col.name);
                continue;
            }
            enc.width_ += 1;
        }
    }
    if (enc.width_ == 0) fail(ErrorKind::usage, "encoding dropped every column");
    return enc;
}

FeatureMatrix Encoder::transform(const RawTable& table) const {
    if (table.schema.columns.size() != schema_.columns.size())
        fail(ErrorKind::usage, "encoder was fitted on a different schema");
    for (std::size_t c = 0; c < schema_.columns.size(); ++c)
        if (table.schema.columns[c].name != schema_.columns[c].name)
            fail(ErrorKind::usage, "encoder was fitted on a different schema (column '" +
                                       schema_.columns[c].name + "')");

    FeatureMatrix fm;
    fm.data = Matrix(table.row_count, width_);
    for (std::size_t r = 0; r < table.row_count; ++r) {
        double* row = fm.data.row_ptr(r);
        std::size_t w = 0;
        for (std::size_t c = 0; c < schema_.columns.size(); ++c) {
            if (!keep_[c]) continue;
            if (schema_.columns[c].kind == ColumnKind::categorical) {
                const std::vector<std::string>& cats = categories_[c];
                const std::string& value = table.categorical_columns[c][r];
                const auto it = std::lower_bound(cats.begin(), cats.end(), value);
                if (it != cats.end() && *it == value) {
                    row[w + static_cast<std::size_t>(it - cats.begin())] = 1.0;
                } else {
                    ++unseen_tally_;  // all-zero block for categories unseen at fit time
                }
                w += cats.size();
            } else {
                row[w++] = table.numeric_columns[c][r];
            }
        }
    }
    fm.labels = table.labels;
    fm.rebuild_class_names();
    return fm;
}

FeatureMatrix encode(const RawTable& table, const Encoder::DropPolicy& policy) {
    return Encoder::fit(table, policy).transform(table);
}

Normalizer Normalizer::fit(const FeatureMatrix& train) {
    if (train.data.rows == 0) fail(ErrorKind::usage, "cannot fit normalizer on empty data");
    Normalizer n;
    n.min_.assign(train.data.cols, 0.0);
    n.max_.assign(train.data.cols, 0.0);
    for (std::size_t c = 0; c < train.data.cols; ++c) {
        double lo = train.data(0, c), hi = train.data(0, c);
        for (std::size_t r = 1; r < train.data.rows; ++r) {
            lo = std::min(lo, train.data(r, c));
            hi = std::max(hi, train.data(r, c));
        }
        n.min_[c] = lo;
        n.max_[c] = hi;
    }
    n.fitted_ = true;
    return n;
}

Matrix Normalizer::apply(const Matrix& m) const {
    if (!fitted_) fail(ErrorKind::usage, "normalizer has not been fitted");
    if (m.cols != min_.size())
        fail(ErrorKind::usage, "normalizer fitted for width " + std::to_string(min_.size()) +
                                   ", got " + std::to_string(m.cols));
    Matrix out(m.rows, m.cols);
    for (std::size_t c = 0; c < m.cols; ++c) {
        const double span = max_[c] - min_[c];
        for (std::size_t r = 0; r < m.rows; ++r) {
            double v = span > 0.0 ? 2.0 * (m(r, c) - min_[c]) / span - 1.0 : 0.0;
            out(r, c) = std::clamp(v, -1.0, 1.0);
        }
    }
    return out;
}

FeatureMatrix Normalizer::apply(const FeatureMatrix& fm) const {
    FeatureMatrix out;
    out.data = apply(fm.data);
    out.labels = fm.labels;
    out.class_names = fm.class_names;
    return out;
}

Matrix Normalizer::invert(const Matrix& m) const {
    if (!fitted_) fail(ErrorKind::usage, "normalizer has not been fitted");
    if (m.cols != min_.size()) fail(ErrorKind::usage, "normalizer width mismatch on invert");
    Matrix out(m.rows, m.cols);
    for (std::size_t c = 0; c < m.cols; ++c) {
        const double span = max_[c] - min_[c];
        for (std::size_t r = 0; r < m.rows; ++r)
            out(r, c) = min_[c] + (m(r, c) + 1.0) * span / 2.0;
    }
    return out;
}

void Normalizer::restore(std::vector<double> minimums, std::vector<double> maximums) {
    if (minimums.size() != maximums.size())
        fail(ErrorKind::usage, "normalizer restore: min/max lengths differ");
    min_ = std::move(minimums);
    max_ = std::move(maximums);
    fitted_ = !min_.empty();
}

Split build_splits(const FeatureMatrix& data, const SplitSpec& spec) {
    if (spec.known_test_fraction <= 0.0 || spec.known_test_fraction >= 1.0)
        fail(ErrorKind::usage, "known_test_fraction must lie in (0, 1)");
    if (spec.known_classes.empty()) fail(ErrorKind::usage, "no known classes configured");

    std::set<std::string> known(spec.known_classes.begin(), spec.known_classes.end());
    std::set<std::string> unknown(spec.unknown_classes.begin(), spec.unknown_classes.end());
    for (const std::string& u : spec.unknown_classes)
        if (known.count(u))
            fail(ErrorKind::usage, "class '" + u + "' is listed as both known and unknown");

    std::set<std::string> present(data.class_names.begin(), data.class_names.end());
    for (const std::string& c : spec.known_classes)
        if (!present.count(c)) fail(ErrorKind::usage, "known class '" + c + "' not in dataset");
    for (const std::string& c : spec.unknown_classes)
        if (!present.count(c)) fail(ErrorKind::usage, "unknown class '" + c + "' not in dataset");

    RngState rng(spec.seed);
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    for (const std::string& cls : spec.known_classes) {
        std::vector<std::size_t> rows = data.rows_of_class(cls);
        if (rows.size() < 5)
            fail(ErrorKind::usage, "known class '" + cls + "' has only " +
                                       std::to_string(rows.size()) +
                                       " instances; need at least 5 to split");
        rng.shuffle(rows);
        const std::size_t n_test = static_cast<std::size_t>(
            std::llround(spec.known_test_fraction * static_cast<double>(rows.size())));
        for (std::size_t i = 0; i < rows.size(); ++i)
            (i < n_test ? test_rows : train_rows).push_back(rows[i]);
    }
    for (const std::string& cls : spec.unknown_classes) {
        for (std::size_t r : data.rows_of_class(cls)) test_rows.push_back(r);
    }
    rng.shuffle(test_rows);  // the online stream must interleave classes

    Split split;
    split.train.data = take_rows(data.data, train_rows);
    split.test.data = take_rows(data.data, test_rows);
    for (std::size_t r : train_rows) split.train.labels.push_back(data.labels[r]);
    for (std::size_t r : test_rows) split.test.labels.push_back(data.labels[r]);
    split.train.rebuild_class_names();
    split.test.rebuild_class_names();
    return split;
}

void SyntheticSpec::validate() const {
    if (n_clusters < 2) fail(ErrorKind::usage, "synthetic: n_clusters must be >= 2");
    if (instances_per_cluster < 1) fail(ErrorKind::usage, "synthetic: need instances per cluster");
    if (dimension < 1) fail(ErrorKind::usage, "synthetic: dimension must be >= 1");
    if (noise_fraction < 0.0 || noise_fraction >= 1.0)
        fail(ErrorKind::usage, "synthetic: noise_fraction must lie in [0, 1)");
    if (noise_multiplier <= 1.0) fail(ErrorKind::usage, "synthetic: noise_multiplier must be > 1");
    if (scale_min <= 0.0 || scale_max < scale_min)
        fail(ErrorKind::usage, "synthetic: scale range invalid");
    if (mean_range <= 0.0) fail(ErrorKind::usage, "synthetic: mean_range must be > 0");
}

FeatureMatrix generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    RngState rng(spec.seed);
    const std::size_t d = spec.dimension;

    // Cluster means are drawn uniformly from a hypercube that grows until
    // nearest-mean separation reaches ten times the mean within-cluster
    // standard deviation.
    const double min_separation = 10.0 * 0.5 * (spec.scale_min + spec.scale_max);
    std::vector<std::vector<double>> means;
    double range = spec.mean_range;
    std::size_t attempts_at_range = 0;
    while (means.size() < spec.n_clusters) {
        if (attempts_at_range > 200) {
            range *= 1.25;
            attempts_at_range = 0;
            means.clear();
        }
        ++attempts_at_range;
        std::vector<double> mu(d);
        for (double& v : mu) v = (2.0 * rng.uniform() - 1.0) * range;
        bool ok = true;
        for (const auto& other : means) {
            if (std::sqrt(squared_distance(mu.data(), other.data(), d)) < min_separation) {
                ok = false;
                break;
            }
        }
        if (ok) means.push_back(std::move(mu));
    }

    const std::size_t label_width = std::to_string(spec.n_clusters - 1).size();
    FeatureMatrix fm;
    fm.data = Matrix(spec.n_clusters * spec.instances_per_cluster, d);
    fm.labels.reserve(fm.data.rows);

    std::size_t row = 0;
    const double noise_sigma_factor = std::sqrt(spec.noise_multiplier);
    for (std::size_t k = 0; k < spec.n_clusters; ++k) {
        std::vector<double> scales(d);
        for (double& s : scales)
            s = spec.scale_min + rng.uniform() * (spec.scale_max - spec.scale_min);
        std::string label = std::to_string(k);
        while (label.size() < std::max<std::size_t>(label_width, 2)) label.insert(0, "0");
        label = "cluster_" + label;
        const std::size_t n_noise = static_cast<std::size_t>(
            spec.noise_fraction * static_cast<double>(spec.instances_per_cluster) + 0.5);
        for (std::size_t i = 0; i < spec.instances_per_cluster; ++i, ++row) {
            // Leading points of each cluster carry the inflated "homocentric"
            // noise variance; the test split shuffles them into the stream.
            const double factor = i < n_noise ? noise_sigma_factor : 1.0;
            double* out = fm.data.row_ptr(row);
            for (std::size_t c = 0; c < d; ++c)
                out[c] = means[k][c] + factor * scales[c] * rng.normal();
            fm.labels.push_back(label);
        }
    }
    fm.rebuild_class_names();
    return fm;
}

}  // namespace negm
