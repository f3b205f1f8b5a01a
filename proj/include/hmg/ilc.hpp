#pragma once

// Two-stage interlinking converter: full-time-scale concatenators feeding two
// power-loop PI controllers. P1 moves power DS -> DC, P2 moves power DS -> AC.

#include <array>
#include <cmath>
#include <string>
#include <utility>

#include "hmg/error.hpp"
#include "hmg/lti.hpp"
#include "hmg/subgrid.hpp"

namespace hmg {

/// Relative spacing of adjacent IEEE-754 binary32 numbers.
inline constexpr double kFloat32Epsilon = 1.0 / 8388608.0;  // 2^-23

enum class Channel { AC = 0, DC = 1, DS = 2 };

struct ConcatenatorSpec {
    double omega_0 = 0.0;
    double omega_ac = 0.0;
    double omega_dc = 0.0;
    double omega_ds = 0.0;

    double omega(Channel c) const {
        switch (c) {
        case Channel::AC: return omega_ac;
        case Channel::DC: return omega_dc;
        case Channel::DS: return omega_ds;
        }
        return omega_0;
    }
};

struct IlcSpec {
    double k_tp1 = 0.0;
    double k_ti1 = 0.0;
    double k_tp2 = 0.0;
    double k_ti2 = 0.0;
    double sampling_period = 50e-6;  // s, DSP control period
    double safety_factor_M = 1.3;

    bool operator==(const IlcSpec&) const = default;
};

inline void validate(const IlcSpec& spec) {
    if (!(spec.k_tp1 > 0 && spec.k_ti1 > 0 && spec.k_tp2 > 0 && spec.k_ti2 > 0)) {
        throw Error(ErrorKind::InvalidArgument, "ilc: all PI gains must be positive");
    }
    if (!(spec.sampling_period > 0)) throw Error(ErrorKind::InvalidArgument, "ilc: sampling_period must be positive");
    if (!(spec.safety_factor_M > 0)) throw Error(ErrorKind::InvalidArgument, "ilc: safety_factor_M must be positive");
}

/// omega_x = omega_0 x_max / (x_max - x_min): the concatenator's DC gain then
/// rescales a per-unit deviation into a fraction of the permitted band.
inline ConcatenatorSpec design_omegas(double omega_0, const SubgridSpec& ac, const SubgridSpec& dc, const SubgridSpec& ds) {
    if (!(omega_0 > 0.0)) throw Error(ErrorKind::InvalidArgument, "omega_0 must be positive");
    auto scaled = [omega_0](const SubgridSpec& s) {
        if (s.x_max == s.x_min) throw Error(ErrorKind::DegenerateLimits, std::string(to_string(s.kind)) + ": x_max equals x_min");
        return omega_0 * s.x_max / s.range();
    };
    return {omega_0, scaled(ac), scaled(dc), scaled(ds)};
}

/// Smallest concatenator corner that a binary32 controller sampled every
/// `sampling_period` can still resolve: M 2^-23 / T_s.
inline double min_cutoff(double sampling_period, double safety_factor) {
    if (!(sampling_period > 0.0 && safety_factor > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "sampling period and safety factor must be positive");
    }
    return safety_factor * kFloat32Epsilon / sampling_period;
}

/// (s + omega_x) / (s + omega_0)
inline RationalTF concatenator_tf(const ConcatenatorSpec& spec, Channel channel) {
    return RationalTF(Polynomial({spec.omega(channel), 1.0}), Polynomial({spec.omega_0, 1.0}));
}

/// Z_ILC1 = s / (k_tp1 s + k_ti1), Z_ILC2 likewise.
inline std::pair<RationalTF, RationalTF> ilc_equivalent_impedances(const IlcSpec& spec) {
    validate(spec);
    return {RationalTF(Polynomial({0.0, 1.0}), Polynomial({spec.k_ti1, spec.k_tp1})),
            RationalTF(Polynomial({0.0, 1.0}), Polynomial({spec.k_ti2, spec.k_tp2}))};
}

struct IlcState {
    std::array<double, 3> concat{};  // filter states, indexed by Channel
    double integ1 = 0.0;
    double integ2 = 0.0;
    double p1_w = 0.0;
    double p2_w = 0.0;
    double p1_pu = 0.0;  // global base
    double p2_pu = 0.0;
};

struct IlcInputs {
    double delta_f_pu = 0.0;
    double delta_vdc_pu = 0.0;
    double delta_vds_pu = 0.0;
};

/// Concatenator output y = u + (omega_x - omega_0) z for filter state z.
inline double concatenator_output(const ConcatenatorSpec& cspec, Channel c, double u, double z) {
    return u + (cspec.omega(c) - cspec.omega_0) * z;
}

/// One control period: the power references come from the state at the start
/// of the step, then the filter and integrator states advance with inputs held.
/// With `use_concatenator` false every channel passes its deviation unfiltered.
inline IlcState ilc_step(IlcState state, const IlcInputs& in, const IlcSpec& spec, const ConcatenatorSpec& cspec,
                         double h, double p_gmax_w, bool use_concatenator = true) {
    if (!(h > 0.0)) throw Error(ErrorKind::InvalidArgument, "step must be positive");
    const std::array<double, 3> u{in.delta_f_pu, in.delta_vdc_pu, in.delta_vds_pu};
    std::array<double, 3> y{};
    for (int k = 0; k < 3; ++k) {
        const auto c = static_cast<Channel>(k);
        y[k] = use_concatenator ? concatenator_output(cspec, c, u[k], state.concat[k]) : u[k];
    }
    const double e1 = y[2] - y[1];
    const double e2 = y[2] - y[0];
    state.p1_pu = spec.k_tp1 * e1 + spec.k_ti1 * state.integ1;
    state.p2_pu = spec.k_tp2 * e2 + spec.k_ti2 * state.integ2;
    state.p1_w = state.p1_pu * p_gmax_w;
    state.p2_w = state.p2_pu * p_gmax_w;

    state.integ1 += e1 * h;
    state.integ2 += e2 * h;
    if (use_concatenator) {
        // dz/dt = u - omega_0 z with u held: exact exponential update.
        const double decay = std::exp(-cspec.omega_0 * h);
        const double gain = -std::expm1(-cspec.omega_0 * h) / cspec.omega_0;
        for (int k = 0; k < 3; ++k) state.concat[k] = decay * state.concat[k] + gain * u[k];
    }
    return state;
}

}  // namespace hmg
