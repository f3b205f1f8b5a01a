#pragma once

// Per-unit dynamic models of the AC, DC and storage (DS) subgrids, droop
// design, the storage high/low-frequency power split and the autonomous
// frequency/voltage restoration loop.
//
// Per-unit bases: x_max for frequency/voltage, p_max for power. A deviation
// delta_pu is measured from x_max, so the reconstructed quantity is
// x* = 1 + delta + comp where comp is the restoration compensation.

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "hmg/error.hpp"
#include "hmg/lti.hpp"

namespace hmg {

enum class SubgridKind { AC, DC, DS };

inline const char* to_string(SubgridKind kind) {
    switch (kind) {
    case SubgridKind::AC: return "ac";
    case SubgridKind::DC: return "dc";
    case SubgridKind::DS: return "ds";
    }
    return "?";
}

struct SubgridSpec {
    SubgridKind kind = SubgridKind::AC;
    double x_max = 0.0;      // Hz (AC) or V (DC/DS)
    double x_min = 0.0;
    double x_nominal = 0.0;
    double p_max = 0.0;      // W

    // AC/DC virtual inertia
    double H = 0.0;
    double D = 0.0;
    double R = 0.0;

    // DS integral and conventional droop
    double y_H = 0.0;
    double y_L = 0.0;

    // Governor/turbine chain (AC and DC)
    double T_G = 0.0;
    double F_HP = 0.0;
    double T_CH = 0.0;
    double T_RH = 0.0;

    // Restoration PI, per-unit/s
    double k_p = 0.02;
    double k_i = 0.2;

    double range() const { return x_max - x_min; }
    double nominal_pu() const { return x_nominal / x_max; }
    /// Static deviation per unit of own-base output power, (x_max - x_min) / x_max.
    double band_pu() const { return range() / x_max; }

    bool operator==(const SubgridSpec&) const = default;
};

/// Structural checks shared by every operation (droop values are checked separately).
inline void validate_limits(const SubgridSpec& spec) {
    const std::string name = to_string(spec.kind);
    if (spec.x_max == spec.x_min) throw Error(ErrorKind::DegenerateLimits, name + ": x_max equals x_min");
    if (!(spec.x_min < spec.x_max)) throw Error(ErrorKind::InvalidArgument, name + ": need x_min < x_max");
    // The DC nominal bus voltage is allowed to sit on its lower limit.
    if (!(spec.x_min <= spec.x_nominal && spec.x_nominal <= spec.x_max)) {
        throw Error(ErrorKind::InvalidArgument, name + ": need x_min <= x_nominal <= x_max");
    }
    if (!(spec.p_max > 0.0)) throw Error(ErrorKind::InvalidArgument, name + ": p_max must be positive");
    if (spec.kind == SubgridKind::DS) {
        if (!(spec.y_H > 0.0)) throw Error(ErrorKind::InvalidArgument, "ds: y_H must be positive");
    } else if (!(spec.H > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, name + ": H must be positive");
    }
}

/// Fills R (AC/DC) or y_L (DS) so that the per-unit steady droop matches the
/// SI droop line through (0, x_max) and (p_max, x_min).
inline SubgridSpec design_droop(SubgridSpec spec) {
    if (spec.x_max == spec.x_min) {
        throw Error(ErrorKind::DegenerateLimits, std::string(to_string(spec.kind)) + ": x_max equals x_min");
    }
    const double range = spec.range();
    if (spec.kind == SubgridKind::DS) {
        spec.y_L = spec.x_max / range;
        if (!(spec.y_L > 0.0)) throw Error(ErrorKind::NegativeDroop, "ds: designed y_L is not positive");
        return spec;
    }
    const double denom = spec.x_max - spec.D * range;
    if (!(denom > 0.0)) {
        throw Error(ErrorKind::NegativeDroop, std::string(to_string(spec.kind)) +
                                                  ": x_max - D (x_max - x_min) must be positive, got " +
                                                  std::to_string(denom));
    }
    spec.R = range / denom;
    return spec;
}

/// Relative residual of the per-unit/SI droop identity; ~1e-16 for a designed spec.
inline double droop_identity_residual(const SubgridSpec& spec) {
    const double target = spec.band_pu();
    const double got = spec.kind == SubgridKind::DS ? 1.0 / spec.y_L : spec.R / (spec.D * spec.R + 1.0);
    return std::abs(got - target) / std::abs(target);
}

/// Speed governor 1/(T_G s + 1).
inline RationalTF governor_tf(const SubgridSpec& spec) { return RationalTF::first_order(0.0, 1.0, spec.T_G, 1.0); }

/// Reheat turbine (F_HP T_RH s + 1) / ((T_CH s + 1)(T_RH s + 1)).
inline RationalTF turbine_tf(const SubgridSpec& spec) {
    return RationalTF(Polynomial({1.0, spec.F_HP * spec.T_RH}),
                      Polynomial({1.0, spec.T_CH}) * Polynomial({1.0, spec.T_RH}));
}

namespace detail {

/// -R / ((2 H s + D) R + T(s) Y(s)) scaled so the power input is on a base
/// `capacity_ratio` times the subgrid's own.
inline RationalTF swing_governor_tf(const SubgridSpec& spec, double capacity_ratio) {
    const RationalTF ty = tf_series(governor_tf(spec), turbine_tf(spec));
    const Polynomial swing({spec.D * spec.R, 2.0 * spec.H * spec.R});
    const Polynomial den = capacity_ratio * (swing * ty.den() + ty.num());
    return RationalTF(poly_scale(ty.den(), -spec.R), den);
}

}  // namespace detail

/// Delta f* / P*_oac on the AC subgrid's own power base.
inline RationalTF build_ac_open_loop_tf(const SubgridSpec& spec) {
    if (spec.kind != SubgridKind::AC) throw Error(ErrorKind::InvalidArgument, "AC spec expected");
    return detail::swing_governor_tf(spec, 1.0);
}

/// Delta V*_dc / P*_odc on the DC subgrid's own power base.
inline RationalTF build_dc_open_loop_tf(const SubgridSpec& spec) {
    if (spec.kind != SubgridKind::DC) throw Error(ErrorKind::InvalidArgument, "DC spec expected");
    return detail::swing_governor_tf(spec, 1.0);
}

/// Delta V*_ds / P*_ods = -1 / (2 y_H s + y_L).
inline RationalTF build_ds_open_loop_tf(const SubgridSpec& spec) {
    if (spec.kind != SubgridKind::DS) throw Error(ErrorKind::InvalidArgument, "DS spec expected");
    return RationalTF(Polynomial({-1.0}), Polynomial({spec.y_L, 2.0 * spec.y_H}));
}

inline RationalTF build_open_loop_tf(const SubgridSpec& spec) {
    switch (spec.kind) {
    case SubgridKind::AC: return build_ac_open_loop_tf(spec);
    case SubgridKind::DC: return build_dc_open_loop_tf(spec);
    case SubgridKind::DS: return build_ds_open_loop_tf(spec);
    }
    throw Error(ErrorKind::InvalidArgument, "unknown subgrid kind");
}

/// Transfer functions from P*_ods to the low-ramp (conventional droop) and
/// high-ramp (integral droop) storage clusters. low + high == 1.
struct HessSplit {
    RationalTF low;
    RationalTF high;
};

inline HessSplit hess_split(const SubgridSpec& spec) {
    if (!(spec.y_H > 0.0 && spec.y_L > 0.0)) throw Error(ErrorKind::InvalidArgument, "hess_split needs y_H, y_L > 0");
    const double corner = spec.y_L / (2.0 * spec.y_H);
    return {RationalTF(Polynomial({corner}), Polynomial({corner, 1.0})),
            RationalTF(Polynomial({0.0, 1.0}), Polynomial({corner, 1.0}))};
}

/// Laplace-domain responses of both clusters to a DS power step of `magnitude` p.u.
inline HessSplit hess_step_response(double magnitude, const SubgridSpec& spec) {
    const HessSplit split = hess_split(spec);
    const RationalTF step = tf_scale(RationalTF::integrator(), magnitude);
    return {tf_series(split.low, step), tf_series(split.high, step)};
}

/// Loading condition (x_max - x) / (x_max - x_min).
inline double compute_lc(double x_si, const SubgridSpec& spec) { return (spec.x_max - x_si) / spec.range(); }

/// Relative loading index: the loading condition with the restoration
/// compensation added back.
inline double compute_rli(double x_si, double delta_comp_si, const SubgridSpec& spec) {
    return (spec.x_max - x_si + delta_comp_si) / spec.range();
}

struct SubgridState {
    Eigen::VectorXd block;     // realization states of the open-loop block
    double delta_pu = 0.0;     // Delta x*
    double comp_pu = 0.0;      // restoration compensation delta x*
    double comp_err_prev = 0.0;
    double p_out_pu = 0.0;     // own-base output power applied over the last step

    double x_pu() const { return 1.0 + delta_pu + comp_pu; }
};

/// Incremental PI: comp += k_p (e - e_prev) + k_i e h, e = x*_n - x*.
inline SubgridState restoration_step(SubgridState state, double x_nominal_pu, double h, const SubgridSpec& spec) {
    if (!(h > 0.0)) throw Error(ErrorKind::InvalidArgument, "step must be positive");
    const double e = x_nominal_pu - state.x_pu();
    state.comp_pu += spec.k_p * (e - state.comp_err_prev) + spec.k_i * e * h;
    state.comp_err_prev = e;
    return state;
}

/// Time-domain wrapper around the open-loop block of one subgrid.
class Subgrid {
public:
    explicit Subgrid(SubgridSpec spec) : spec_(std::move(spec)), tf_(build_open_loop_tf(spec_)), ss_(tf_to_statespace(tf_)) {}

    const SubgridSpec& spec() const { return spec_; }
    const RationalTF& open_loop_tf() const { return tf_; }
    const StateSpace& realization() const { return ss_; }

    /// Equilibrium for a constant own-base output power, compensation placing x* at nominal.
    SubgridState equilibrium(double p_out_pu) const {
        SubgridState st;
        st.block = ss_.order() ? Eigen::VectorXd(-ss_.A.fullPivLu().solve(ss_.B * p_out_pu)) : ss_.zero_state();
        st.delta_pu = ss_.output(st.block, p_out_pu);
        st.comp_pu = spec_.nominal_pu() - 1.0 - st.delta_pu;
        st.p_out_pu = p_out_pu;
        return st;
    }

    /// Advances the block with p_out_pu held over the step.
    SubgridState advance(SubgridState state, double p_out_pu, double h) const {
        state.block = step_rk4(ss_, state.block, p_out_pu, h);
        state.delta_pu = ss_.output(state.block, p_out_pu);
        state.p_out_pu = p_out_pu;
        return state;
    }

    /// Storage only: (P*_L, P*_H) on the DS base given the current state.
    std::pair<double, double> hess_powers(const SubgridState& state, double p_out_pu) const {
        const double low = -spec_.y_L * state.delta_pu;
        return {low, p_out_pu - low};
    }

private:
    SubgridSpec spec_;
    RationalTF tf_;
    StateSpace ss_;
};

}  // namespace hmg
