#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace negm {

// Flat key = value run configuration with typed validation. Unknown keys are
// rejected; CLI --set overrides file values; NEGM_OUT_DIR overrides out.dir.
class Config {
public:
    Config();

    void load_file(const std::string& path);
    void set(const std::string& key, const std::string& value);
    bool is_known_key(const std::string& key) const;

    // Applies the output-dir environment override and validates every value.
    void finalize();

    std::string get_string(const std::string& key) const;
    std::int64_t get_int(const std::string& key) const;
    std::uint64_t get_uint(const std::string& key) const;
    double get_real(const std::string& key) const;
    bool get_flag(const std::string& key) const;
    std::vector<std::string> get_list(const std::string& key) const;  // comma separated
    bool is_empty(const std::string& key) const;

    // Effective configuration as sorted "key = value" lines.
    std::string echo() const;

    // Artifact paths derived from out.dir unless overridden by their key.
    std::string out_dir() const;
    std::string path_or_default(const std::string& key, const std::string& filename) const;

private:
    const std::string& raw(const std::string& key) const;
    std::map<std::string, std::string> values_;
};

}  // namespace negm
