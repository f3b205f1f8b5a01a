#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <string>

#include "hmg/config.hpp"

namespace hmg::testing {

inline constexpr std::uint64_t kSeed = 20240611;

inline std::string config_path(const std::string& name) { return std::string(HMG_CONFIG_DIR) + "/" + name; }

inline HybridConfig reference() { return load_config(config_path("reference.cfg")).config; }

/// Reference subgrids built by hand, without going through the config reader.
inline SubgridSpec table_ac() {
    SubgridSpec s;
    s.kind = SubgridKind::AC;
    s.x_max = 51;
    s.x_min = 49;
    s.x_nominal = 50;
    s.p_max = 20000;
    s.H = 2;
    s.D = 1;
    s.R = 2.0 / 49.0;
    s.T_G = 0.1;
    s.F_HP = 0.3;
    s.T_CH = 0.2;
    s.T_RH = 7;
    return s;
}

inline SubgridSpec table_dc() {
    SubgridSpec s = table_ac();
    s.kind = SubgridKind::DC;
    s.x_max = 380;
    s.x_min = 370;
    s.x_nominal = 370;
    s.H = 3;
    s.R = 10.0 / 370.0;
    return s;
}

inline SubgridSpec table_ds() {
    SubgridSpec s;
    s.kind = SubgridKind::DS;
    s.x_max = 710;
    s.x_min = 690;
    s.x_nominal = 700;
    s.p_max = 20000;
    s.y_H = 7.5;
    s.y_L = 35.5;
    return s;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed = kSeed) : gen_(seed) {}
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
    /// Log-uniform magnitude in [lo, hi].
    double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
    std::complex<double> complex_point() { return {uniform(-2.0, 2.0), uniform(-20.0, 20.0)}; }

private:
    std::mt19937_64 gen_;
};

}  // namespace hmg::testing
