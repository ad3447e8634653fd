#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace negm {

// Deterministic random stream. All stochastic code in the library draws from
// an explicit RngState so that a fixed seed plus a fixed call sequence
// reproduces every result bit for bit. Normal variates use Box-Muller on top
// of the raw engine instead of std::normal_distribution, which pins the exact
// output sequence independent of the standard library in use.
class RngState {
public:
    explicit RngState(std::uint64_t seed) : engine_(seed), seed_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t position() const noexcept { return position_; }

    std::uint64_t next_u64() {
        ++position_;
        return engine_();
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double normal() {
        // u1 in (0, 1] so the log is finite.
        double u1 = 1.0 - uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793238462643 * u2);
    }

    // Uniform index in [0, n); rejection sampling keeps it unbiased.
    std::size_t uniform_index(std::size_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return static_cast<std::size_t>(x % n);
    }

    // Derived stream that advances independently of this one.
    RngState split(std::uint64_t stream_tag) const {
        return RngState(seed_ ^ (0x9E3779B97F4A7C15ULL * (stream_tag + 1)));
    }

    // Engine snapshot for resumable streaming state.
    std::string state_string() const {
        std::ostringstream out;
        out << engine_ << ' ' << seed_ << ' ' << position_;
        return out.str();
    }

    void restore_state(const std::string& state) {
        std::istringstream in(state);
        in >> engine_ >> seed_ >> position_;
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[uniform_index(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_ = 0;
    std::uint64_t position_ = 0;
};

}  // namespace negm
