#pragma once

// Global equivalent circuit model: each subgrid is a Thevenin branch with
// impedance Z_x on the global power base, the interlinking converter is a
// pair of concatenator-weighted impedances, and the three node "voltages"
// (-Delta f*, -Delta V*_ds, -Delta V*_dc) follow from G V = I.

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hmg/error.hpp"
#include "hmg/ilc.hpp"
#include "hmg/lti.hpp"
#include "hmg/subgrid.hpp"

namespace hmg {

inline double global_capacity(const SubgridSpec& ac, const SubgridSpec& dc, const SubgridSpec& ds) {
    return ac.p_max + dc.p_max + ds.p_max;
}

struct BranchImpedances {
    RationalTF ac;
    RationalTF dc;
    RationalTF ds;
};

/// Z_x(s) = -Delta x* / P*_ox_G, i.e. the open-loop block re-based to the
/// total capacity.
inline BranchImpedances build_branch_impedances(const SubgridSpec& ac, const SubgridSpec& dc, const SubgridSpec& ds) {
    const double pg = global_capacity(ac, dc, ds);
    const auto re_based = [pg](const SubgridSpec& s) {
        const double ratio = s.p_max / pg;
        if (s.kind == SubgridKind::DS) return RationalTF(Polynomial({1.0}), ratio * Polynomial({s.y_L, 2.0 * s.y_H}));
        return tf_scale(detail::swing_governor_tf(s, ratio), -1.0);
    };
    return {re_based(ac), re_based(dc), re_based(ds)};
}

/// Per-unit load injections on the global base.
struct LoadInjection {
    double ac = 0.0;
    double dc = 0.0;
    double ds = 0.0;

    double total() const { return ac + dc + ds; }
};

struct GecmSystem {
    BranchImpedances z;
    RationalTF t_ac = RationalTF::gain(1.0);
    RationalTF t_dc = RationalTF::gain(1.0);
    RationalTF t_ds = RationalTF::gain(1.0);
    /// Absent when the interlinking converter is disabled (open couplings).
    std::optional<std::pair<RationalTF, RationalTF>> z_ilc;
    LoadInjection load;
};

/// Full model for a configuration: re-based branches, concatenators (or unity
/// when disabled) and the power-loop impedances.
inline GecmSystem make_gecm(const SubgridSpec& ac, const SubgridSpec& dc, const SubgridSpec& ds, const IlcSpec& ilc,
                            const ConcatenatorSpec& cspec, bool use_concatenator, bool use_ilc, LoadInjection load) {
    GecmSystem sys;
    sys.z = build_branch_impedances(ac, dc, ds);
    if (use_concatenator) {
        sys.t_ac = concatenator_tf(cspec, Channel::AC);
        sys.t_dc = concatenator_tf(cspec, Channel::DC);
        sys.t_ds = concatenator_tf(cspec, Channel::DS);
    }
    if (use_ilc) sys.z_ilc = ilc_equivalent_impedances(ilc);
    sys.load = load;
    return sys;
}

/// Node order throughout: 0 = AC, 1 = DS, 2 = DC.
using AdmittanceMatrix = std::array<std::array<RationalTF, 3>, 3>;

/// Nodal admittance matrix. With P1 = (T_ds dV_ds - T_dc dV_dc)/Z_ILC1 flowing
/// DS -> DC and P2 = (T_ds dV_ds - T_ac df)/Z_ILC2 flowing DS -> AC, the
/// coupling terms enter the diagonal with a plus sign and the off-diagonal
/// entries carry the concatenator of the column's node.
inline AdmittanceMatrix assemble_admittance(const GecmSystem& sys) {
    const RationalTF zero = RationalTF::gain(0.0);
    AdmittanceMatrix g{{{zero, zero, zero}, {zero, zero, zero}, {zero, zero, zero}}};
    g[0][0] = tf_reciprocal(sys.z.ac);
    g[1][1] = tf_reciprocal(sys.z.ds);
    g[2][2] = tf_reciprocal(sys.z.dc);
    if (!sys.z_ilc) return g;
    const RationalTF y1 = tf_reciprocal(sys.z_ilc->first);
    const RationalTF y2 = tf_reciprocal(sys.z_ilc->second);
    g[0][0] = tf_add(g[0][0], tf_series(sys.t_ac, y2));
    g[0][1] = tf_scale(tf_series(sys.t_ds, y2), -1.0);
    g[1][0] = tf_scale(tf_series(sys.t_ac, y2), -1.0);
    g[1][1] = tf_add(g[1][1], tf_add(tf_series(sys.t_ds, y1), tf_series(sys.t_ds, y2)));
    g[1][2] = tf_scale(tf_series(sys.t_dc, y1), -1.0);
    g[2][1] = tf_scale(tf_series(sys.t_ds, y1), -1.0);
    g[2][2] = tf_add(g[2][2], tf_series(sys.t_dc, y1));
    return g;
}

/// Deviation responses Delta x*(s) per unit of the injection pattern
/// (multiply by 1/s for a step).
struct NodalSolution {
    RationalTF delta_f;
    RationalTF delta_vdc;
    RationalTF delta_vds;
    double residual = 0.0;  // worst relative back-substitution residual
};

/// Fixed probe points for back-substitution and singularity checks.
inline std::vector<Complex> nodal_test_points() {
    return {{0.0, 0.01}, {0.0, 1.0},   {0.0, 100.0}, {0.37, 0.5},  {-0.05, 2.3}, {1.7, -0.4},
            {0.02, 7.0}, {3.0, 30.0},  {0.5, 0.05},  {12.0, -9.0}, {0.08, 0.2}, {40.0, 400.0}};
}

namespace detail {

using PolyMatrix = std::array<std::array<Polynomial, 3>, 3>;

inline Polynomial det3(const PolyMatrix& m) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

inline Polynomial deflate(const Polynomial& p, const Polynomial& factor, const char* what) {
    const PolyDivision d = poly_divide(p, factor);
    if (d.remainder.max_abs() > 1e-7 * p.max_abs()) {
        throw Error(ErrorKind::SingularSystem, std::string("nodal determinant is not divisible by ") + what);
    }
    return d.quotient;
}

inline double back_substitution_residual(const AdmittanceMatrix& g, const NodalSolution& sol, const LoadInjection& load,
                                         Complex s) {
    Eigen::Matrix3cd gm;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) gm(i, j) = tf_eval(g[i][j], s);
    const Eigen::Vector3cd v(-tf_eval(sol.delta_f, s), -tf_eval(sol.delta_vds, s), -tf_eval(sol.delta_vdc, s));
    const Eigen::Vector3cd rhs(load.ac, load.ds, load.dc);
    const double scale = gm.norm() * v.norm() + rhs.norm();
    return scale > 0.0 ? (gm * v - rhs).norm() / scale : 0.0;
}

}  // namespace detail

/// Cramer's rule over polynomials. Each row is scaled by its branch
/// denominator times the shared concatenator and power-loop denominators; the
/// determinant then carries that shared product as a known factor, which is
/// divided out exactly before forming the ratios.
inline NodalSolution solve_nodal(const GecmSystem& sys) {
    NodalSolution sol;
    const AdmittanceMatrix g = assemble_admittance(sys);

    if (!sys.z_ilc) {
        sol.delta_f = tf_scale(sys.z.ac, -sys.load.ac);
        sol.delta_vds = tf_scale(sys.z.ds, -sys.load.ds);
        sol.delta_vdc = tf_scale(sys.z.dc, -sys.load.dc);
    } else {
        const RationalTF ya = tf_reciprocal(sys.z.ac);
        const RationalTF yd = tf_reciprocal(sys.z.ds);
        const RationalTF yc = tf_reciprocal(sys.z.dc);
        const RationalTF y1 = tf_reciprocal(sys.z_ilc->first);
        const RationalTF y2 = tf_reciprocal(sys.z_ilc->second);
        const Polynomial& q = sys.t_ac.den();
        if (!poly_approx_equal(q, sys.t_dc.den(), 1e-12) || !poly_approx_equal(q, sys.t_ds.den(), 1e-12)) {
            throw Error(ErrorKind::InvalidArgument, "concatenators must share their denominator");
        }
        const Polynomial& hden = y1.den();
        if (!poly_approx_equal(hden, y2.den(), 1e-12)) {
            throw Error(ErrorKind::InvalidArgument, "power-loop impedances must share their numerator");
        }
        const Polynomial& ta = sys.t_ac.num();
        const Polynomial& tc = sys.t_dc.num();
        const Polynomial& td = sys.t_ds.num();
        const Polynomial& g1 = y1.num();
        const Polynomial& g2 = y2.num();
        const Polynomial qh = q * hden;

        detail::PolyMatrix p;
        p[0][0] = ya.num() * qh + ya.den() * ta * g2;
        p[0][1] = poly_scale(ya.den() * td * g2, -1.0);
        p[0][2] = Polynomial::constant(0.0);
        p[1][0] = poly_scale(yd.den() * ta * g2, -1.0);
        p[1][1] = yd.num() * qh + yd.den() * td * (g1 + g2);
        p[1][2] = poly_scale(yd.den() * tc * g1, -1.0);
        p[2][0] = Polynomial::constant(0.0);
        p[2][1] = poly_scale(yc.den() * td * g1, -1.0);
        p[2][2] = yc.num() * qh + yc.den() * tc * g1;

        // Right-hand side after removing the shared q*h row factor.
        const std::array<Polynomial, 3> rhs{poly_scale(ya.den(), sys.load.ac), poly_scale(yd.den(), sys.load.ds),
                                            poly_scale(yc.den(), sys.load.dc)};
        const Polynomial det = detail::det3(p);
        if (det.is_zero()) throw Error(ErrorKind::SingularSystem, "nodal determinant vanishes identically");
        const Polynomial reduced = detail::deflate(det, qh, "the shared row factor");

        std::array<RationalTF, 3> v;
        for (int col = 0; col < 3; ++col) {
            detail::PolyMatrix pc = p;
            for (int row = 0; row < 3; ++row) pc[row][col] = rhs[row];
            v[col] = RationalTF(detail::det3(pc), reduced);
        }
        sol.delta_f = tf_scale(v[0], -1.0);
        sol.delta_vds = tf_scale(v[1], -1.0);
        sol.delta_vdc = tf_scale(v[2], -1.0);
    }

    for (Complex s : nodal_test_points()) {
        Eigen::Matrix3cd gm;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) gm(i, j) = tf_eval(g[i][j], s);
        const double d = std::abs(gm.determinant());
        if (!(d > 1e-14 * std::pow(gm.norm(), 3))) {
            throw Error(ErrorKind::SingularSystem, "admittance determinant vanishes at a test point");
        }
        sol.residual = std::max(sol.residual, detail::back_substitution_residual(g, sol, sys.load, s));
    }
    if (!(sol.residual < 1e-6)) {
        throw Error(ErrorKind::SingularSystem, "back-substitution residual " + std::to_string(sol.residual));
    }
    return sol;
}

/// Limit of the nodal solution as both power-loop gains grow without bound:
/// the concatenated deviations are forced equal and the whole load is carried
/// by the parallel combination of the branches,
/// Delta x_i = -(1/T_i) P_LG / sum_y 1/(Z_y T_y).
inline NodalSolution solve_nodal_ideal(const GecmSystem& sys) {
    const RationalTF sum = tf_add(tf_add(tf_reciprocal(tf_series(sys.z.ac, sys.t_ac)), tf_reciprocal(tf_series(sys.z.dc, sys.t_dc))),
                                  tf_reciprocal(tf_series(sys.z.ds, sys.t_ds)));
    const double total = sys.load.total();
    const auto node = [&](const RationalTF& t) { return tf_scale(tf_reciprocal(tf_series(t, sum)), -total); };
    NodalSolution sol;
    sol.delta_f = node(sys.t_ac);
    sol.delta_vdc = node(sys.t_dc);
    sol.delta_vds = node(sys.t_ds);
    return sol;
}

/// Capacity-weighted inertia H_G.
inline double global_inertia(const SubgridSpec& ac, const SubgridSpec& dc, const SubgridSpec& ds) {
    const double pg = global_capacity(ac, dc, ds);
    return (ac.H * ac.p_max + dc.H * dc.p_max + ds.y_H * ds.p_max) / pg;
}

struct RatePrediction {
    double global_inertia = 0.0;
    double rate_pu = 0.0;        // |d Delta x*/dt| at the disturbance, all subgrids
    double rocof_hz_s = 0.0;
    double rocov_dc_v_s = 0.0;
    double rocov_ds_v_s = 0.0;
};

/// Magnitudes of the initial rates for a total load step shared through ideal coupling.
inline RatePrediction predict_rates(const SubgridSpec& ac, const SubgridSpec& dc, const SubgridSpec& ds,
                                    double total_load_step_w) {
    const double pg = global_capacity(ac, dc, ds);
    if (total_load_step_w > pg) throw Error(ErrorKind::InvalidArgument, "load step exceeds total capacity");
    RatePrediction r;
    r.global_inertia = global_inertia(ac, dc, ds);
    r.rate_pu = std::abs(total_load_step_w / pg) / (2.0 * r.global_inertia);
    r.rocof_hz_s = r.rate_pu * ac.x_max;
    r.rocov_dc_v_s = r.rate_pu * dc.x_max;
    r.rocov_ds_v_s = r.rate_pu * ds.x_max;
    return r;
}

/// Steady output of each subgrid (W) under global power sharing: {ac, dc, ds}.
inline std::array<double, 3> predict_steady_shares(const SubgridSpec& ac, const SubgridSpec& dc, const SubgridSpec& ds,
                                                   double total_load_w) {
    const double pg = global_capacity(ac, dc, ds);
    if (total_load_w > pg) throw Error(ErrorKind::InvalidArgument, "load exceeds total capacity");
    const double loading = total_load_w / pg;
    return {ac.p_max * loading, dc.p_max * loading, ds.p_max * loading};
}

/// Steady per-unit output ratio {ac, dc, ds} when only the deviations are
/// equalized (unity concatenators): 1 / (1 - x*_min) for each subgrid.
inline std::array<double, 3> objective1_only_ratio(const SubgridSpec& ac, const SubgridSpec& dc, const SubgridSpec& ds) {
    const auto w = [](const SubgridSpec& s) {
        if (!(s.x_max > s.x_min)) throw Error(ErrorKind::DegenerateLimits, "x_max must exceed x_min");
        return 1.0 / (1.0 - s.x_min / s.x_max);
    };
    return {w(ac), w(dc), w(ds)};
}

/// x*(s) with the restoration loop closed around the Thevenin source:
/// x* = (1/s + F x_n/s + Delta x*(s)) / (1 + F), F = k_p + k_i/s.
/// `delta_laplace` is the Laplace transform of the deviation signal.
inline RationalTF restored_output_tf(const RationalTF& delta_laplace, const SubgridSpec& spec) {
    const double xn = spec.nominal_pu();
    const RationalTF source(Polynomial({xn * spec.k_i, 1.0 + xn * spec.k_p}), Polynomial({0.0, 0.0, 1.0}));
    const RationalTF inv_one_plus_f(Polynomial({0.0, 1.0}), Polynomial({spec.k_i, 1.0 + spec.k_p}));
    return tf_series(tf_add(source, delta_laplace), inv_one_plus_f);
}

/// x*(s) without restoration: 1/s + Delta x*(s).
inline RationalTF unrestored_output_tf(const RationalTF& delta_laplace) {
    return tf_add(RationalTF::integrator(), delta_laplace);
}

struct BodePoint {
    double omega = 0.0;     // rad/s
    double mag_db = 0.0;
    double phase_deg = 0.0;
};

inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0 && hi > lo && n >= 2)) throw Error(ErrorKind::InvalidArgument, "log grid needs 0 < lo < hi, n >= 2");
    std::vector<double> w(n);
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (std::size_t k = 0; k < n; ++k) w[k] = std::pow(10.0, a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1));
    return w;
}

inline std::vector<double> default_bode_grid() { return log_grid(1e-4, 1e4, 300); }

inline std::vector<BodePoint> bode_export(const RationalTF& f, const std::vector<double>& omega_grid) {
    std::vector<BodePoint> out;
    out.reserve(omega_grid.size());
    double prev = 0.0;
    for (double w : omega_grid) {
        if (!(w > 0.0) || w <= prev) throw Error(ErrorKind::InvalidArgument, "Bode grid must be positive and ascending");
        prev = w;
        const Complex v = tf_eval(f, Complex(0.0, w));
        out.push_back({w, 20.0 * std::log10(std::abs(v)), std::arg(v) * 180.0 / M_PI});
    }
    return out;
}

}  // namespace hmg
