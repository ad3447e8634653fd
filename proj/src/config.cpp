#include "negm/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "negm/error.hpp"

namespace negm {

namespace {

enum class KeyType { integer, unsigned_integer, real, flag, text, list };

struct KeyInfo {
    KeyType type;
    const char* default_value;
};

// The full key space. Paths left empty resolve against out.dir.
const std::map<std::string, KeyInfo>& key_table() {
    static const std::map<std::string, KeyInfo> table = {
        {"seed", {KeyType::unsigned_integer, "7"}},
        {"out.dir", {KeyType::text, "out"}},

        {"data.path", {KeyType::text, ""}},
        {"data.schema", {KeyType::text, "kdd"}},
        {"data.drop", {KeyType::list, ""}},

        {"split.known", {KeyType::list, ""}},
        {"split.unknown", {KeyType::list, ""}},
        {"split.test_fraction", {KeyType::real, "0.2"}},

        {"synth.clusters", {KeyType::unsigned_integer, "16"}},
        {"synth.per_cluster", {KeyType::unsigned_integer, "625"}},
        {"synth.dim", {KeyType::unsigned_integer, "121"}},
        {"synth.mean_range", {KeyType::real, "3.0"}},
        {"synth.scale_min", {KeyType::real, "0.5"}},
        {"synth.scale_max", {KeyType::real, "1.5"}},
        {"synth.noise_fraction", {KeyType::real, "0.05"}},
        {"synth.noise_multiplier", {KeyType::real, "9.0"}},
        {"synth.out", {KeyType::text, ""}},

        {"train.epochs", {KeyType::unsigned_integer, "1000"}},
        {"train.batch_size", {KeyType::unsigned_integer, "50"}},
        {"train.latent_dim", {KeyType::unsigned_integer, "32"}},
        {"train.step_size", {KeyType::real, "1e-5"}},
        {"train.beta1", {KeyType::real, "0.5"}},
        {"train.beta2", {KeyType::real, "0.999"}},
        {"train.epsilon", {KeyType::real, "1e-8"}},
        {"train.prior_warmup_epochs", {KeyType::unsigned_integer, "50"}},
        {"train.prior_refit_interval", {KeyType::unsigned_integer, "50"}},
        {"train.gmm_max_iterations", {KeyType::unsigned_integer, "100"}},
        {"train.gmm_tolerance", {KeyType::real, "1e-6"}},
        {"train.checkpoint", {KeyType::text, ""}},

        {"detect.batch_size", {KeyType::unsigned_integer, "500"}},
        {"detect.first_batch_quantile", {KeyType::real, "0.1"}},
        {"detect.ema_decay", {KeyType::real, "0.7"}},
        {"detect.ws", {KeyType::unsigned_integer, "200"}},
        {"detect.literal_branch", {KeyType::flag, "false"}},
        {"detect.spawn_prior_alpha", {KeyType::integer, "0"}},
        {"detect.refit_every", {KeyType::unsigned_integer, "1"}},
        {"detect.checkpoint", {KeyType::text, ""}},
        {"detect.test", {KeyType::text, ""}},
        {"detect.report", {KeyType::text, ""}},

        {"eval.report", {KeyType::text, ""}},
        {"eval.test", {KeyType::text, ""}},
        {"eval.checkpoint", {KeyType::text, ""}},
        {"eval.baseline_rmse", {KeyType::text, ""}},  // optional real
        {"eval.out", {KeyType::text, ""}},

        {"sweep.count_min", {KeyType::unsigned_integer, "2"}},
        {"sweep.count_max", {KeyType::unsigned_integer, "6"}},
        {"sweep.combinations", {KeyType::unsigned_integer, "10"}},
        {"sweep.seeds", {KeyType::unsigned_integer, "1"}},
        {"sweep.ws_list", {KeyType::list, ""}},
        {"sweep.out", {KeyType::text, ""}},
    };
    return table;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

Config::Config() {
    for (const auto& [key, info] : key_table()) values_[key] = info.default_value;
}

bool Config::is_known_key(const std::string& key) const {
    return key_table().count(key) > 0;
}

void Config::set(const std::string& key, const std::string& value) {
    if (!is_known_key(key)) fail(ErrorKind::usage, "unknown config key: '" + key + "'");
    values_[key] = trim(value);
}

void Config::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::usage, "cannot open config file: " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            fail(ErrorKind::usage, path + ":" + std::to_string(line_no) +
                                       ": expected 'key = value', got '" + stripped + "'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (!is_known_key(key))
            fail(ErrorKind::usage,
                 path + ":" + std::to_string(line_no) + ": unknown config key: '" + key + "'");
        values_[key] = value;
    }
}

const std::string& Config::raw(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) fail(ErrorKind::usage, "unknown config key: '" + key + "'");
    return it->second;
}

bool Config::is_empty(const std::string& key) const { return raw(key).empty(); }

std::string Config::get_string(const std::string& key) const { return raw(key); }

std::int64_t Config::get_int(const std::string& key) const {
    const std::string& v = raw(key);
    try {
        std::size_t used = 0;
        const std::int64_t parsed = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return parsed;
    } catch (const std::exception&) {
        fail(ErrorKind::usage, "config key '" + key + "': cannot parse '" + v + "' as an integer");
    }
}

std::uint64_t Config::get_uint(const std::string& key) const {
    const std::int64_t v = get_int(key);
    if (v < 0) fail(ErrorKind::usage, "config key '" + key + "' must be nonnegative");
    return static_cast<std::uint64_t>(v);
}

double Config::get_real(const std::string& key) const {
    const std::string& v = raw(key);
    try {
        std::size_t used = 0;
        const double parsed = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return parsed;
    } catch (const std::exception&) {
        fail(ErrorKind::usage, "config key '" + key + "': cannot parse '" + v + "' as a number");
    }
}

bool Config::get_flag(const std::string& key) const {
    const std::string& v = raw(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    fail(ErrorKind::usage, "config key '" + key + "': cannot parse '" + v + "' as a flag");
}

std::vector<std::string> Config::get_list(const std::string& key) const {
    const std::string& v = raw(key);
    std::vector<std::string> items;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const std::string t = trim(item);
        if (!t.empty()) items.push_back(t);
    }
    return items;
}

void Config::finalize() {
    if (const char* env = std::getenv("NEGM_OUT_DIR"); env && *env) values_["out.dir"] = env;
    // Type-check every value now so later getters cannot surprise.
    for (const auto& [key, info] : key_table()) {
        switch (info.type) {
            case KeyType::integer: get_int(key); break;
            case KeyType::unsigned_integer: get_uint(key); break;
            case KeyType::real: get_real(key); break;
            case KeyType::flag: get_flag(key); break;
            case KeyType::text:
            case KeyType::list: break;
        }
    }
    if (!is_empty("eval.baseline_rmse")) get_real("eval.baseline_rmse");
}

std::string Config::echo() const {
    std::ostringstream out;
    for (const auto& [key, value] : values_) out << key << " = " << value << "\n";
    return out.str();
}

std::string Config::out_dir() const { return raw("out.dir"); }

std::string Config::path_or_default(const std::string& key, const std::string& filename) const {
    if (!is_empty(key)) return raw(key);
    return out_dir() + "/" + filename;
}

}  // namespace negm
