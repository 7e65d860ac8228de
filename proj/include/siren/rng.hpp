#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace siren {

// Deterministic RNG built on mt19937_64 raw output only. The std <random>
// distributions are implementation-defined, so Gaussian draws and bounded
// integers are derived here by hand: identical seeds give identical streams
// on every standard library.
class SeededRng {
public:
    explicit SeededRng(uint64_t seed) : gen_(seed) {}

    // Named substream: one root seed fans out to independent generators for
    // init/noise/shuffle/training so adding draws to one stage never shifts
    // another stage's stream.
    static SeededRng substream(uint64_t root_seed, std::string_view name) {
        uint64_t h = 1469598103934665603ull;  // FNV-1a
        for (char c : name) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ull;
        }
        h ^= root_seed + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        return SeededRng(h);
    }

    uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double next_unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform in [0, n). Multiply-shift reduction; the modulo bias is < 2^-53
    // of the mt19937_64 range, negligible for our ensemble sizes.
    size_t next_index(size_t n) {
        return static_cast<size_t>(next_unit() * static_cast<double>(n)) % n;
    }

    // Standard normal via Box-Muller, spare value cached.
    double next_gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = next_unit();
        } while (u1 <= 0.0);
        double u2 = next_unit();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    std::vector<double> gaussian_vector(size_t n, double stddev) {
        std::vector<double> out(n);
        for (auto& v : out) v = stddev == 0.0 ? 0.0 : stddev * next_gaussian();
        return out;
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {  // Fisher-Yates
        for (size_t i = items.size(); i > 1; --i) {
            size_t j = next_index(i);
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace siren
