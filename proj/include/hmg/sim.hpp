#pragma once

// Fixed-step coupled simulation of the three subgrids and the interlinking
// converter, metric extraction, and the cross-check against the GECM.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "hmg/error.hpp"
#include "hmg/gecm.hpp"
#include "hmg/ilc.hpp"
#include "hmg/lti.hpp"
#include "hmg/subgrid.hpp"

namespace hmg {

struct Toggles {
    bool concatenator = true;
    bool restoration = true;
    bool ilc = true;

    bool operator==(const Toggles&) const = default;
};

struct LoadEvent {
    double time = 0.0;  // s
    SubgridKind target = SubgridKind::AC;
    double watts = 0.0;

    bool operator==(const LoadEvent&) const = default;
};

struct Scenario {
    double horizon = 40.0;       // s
    double step = 1e-4;          // s, integration step
    double sample_period = 0.01; // s, trace spacing (multiple of step)
    std::vector<LoadEvent> events;
    double initial_load_ac = 0.0;  // W
    double initial_load_dc = 0.0;
    double initial_load_ds = 0.0;
    Toggles toggles;

    bool operator==(const Scenario&) const = default;
};

struct HybridConfig {
    SubgridSpec ac{SubgridKind::AC};
    SubgridSpec dc{SubgridKind::DC};
    SubgridSpec ds{SubgridKind::DS};
    IlcSpec ilc;
    double omega_0 = 1e-3 * M_PI;
    Scenario scenario;

    double p_gmax() const { return global_capacity(ac, dc, ds); }
    ConcatenatorSpec concatenator() const { return design_omegas(omega_0, ac, dc, ds); }

    bool operator==(const HybridConfig&) const = default;
};

inline std::size_t steps_for(double duration, double step) {
    const double n = duration / step;
    const double r = std::round(n);
    if (std::abs(n - r) > 1e-6 * std::max(1.0, n)) {
        throw Error(ErrorKind::InvalidArgument, "duration " + std::to_string(duration) + " s is not a multiple of the step");
    }
    return static_cast<std::size_t>(r);
}

inline void validate(const Scenario& sc) {
    if (!(sc.step > 0.0)) throw Error(ErrorKind::InvalidArgument, "step must be positive");
    if (!(sc.horizon > 0.0)) throw Error(ErrorKind::InvalidArgument, "horizon must be positive");
    if (!(sc.sample_period >= sc.step)) throw Error(ErrorKind::InvalidArgument, "sample_period must be at least one step");
    steps_for(sc.horizon, sc.step);
    steps_for(sc.sample_period, sc.step);
    double prev = 0.0;
    for (const LoadEvent& e : sc.events) {
        if (e.time < prev) throw Error(ErrorKind::InvalidArgument, "events must be sorted by time");
        if (!(e.time >= 0.0 && e.time <= sc.horizon)) throw Error(ErrorKind::InvalidArgument, "event outside [0, horizon]");
        steps_for(e.time, sc.step);
        prev = e.time;
    }
}

struct SimTrace {
    std::vector<double> t_s;
    std::vector<double> f_hz, vdc_v, vds_v;
    std::vector<double> p_oac_w, p_odc_w, p_ods_w;
    std::vector<double> p_l_w, p_h_w;
    std::vector<double> p1_w, p2_w;
    std::vector<double> delta_f_hz, delta_vdc_v, delta_vds_v;  // restoration compensation

    // Not exported to CSV.
    std::vector<double> dev_ac_pu, dev_dc_pu, dev_ds_pu;     // Delta x*
    std::vector<double> conc_ac_pu, conc_dc_pu, conc_ds_pu;  // concatenated deviations
    std::vector<double> load_ac_w, load_dc_w, load_ds_w;
    std::array<double, 3> p_max_w{};  // ac, dc, ds
    double sample_period = 0.0;

    std::size_t size() const { return t_s.size(); }
    /// Index of the sample at time t (must sit on the grid).
    std::size_t index_of(double t) const {
        if (t_s.empty()) throw Error(ErrorKind::InvalidArgument, "empty trace");
        const double k = (t - t_s.front()) / sample_period;
        const double r = std::round(k);
        if (std::abs(k - r) > 1e-6 || r < 0 || r >= static_cast<double>(size())) {
            throw Error(ErrorKind::InvalidArgument, "time " + std::to_string(t) + " s is not on the sample grid");
        }
        return static_cast<std::size_t>(r);
    }
};

namespace detail {

struct Plant {
    Subgrid ac, dc, ds;
    SubgridState sac, sdc, sds;
};

/// Steady operating point for constant loads: output powers in W {ac, dc, ds}
/// and the interlinking power references.
struct OperatingPoint {
    std::array<double, 3> p_out_w{};
    double p1_w = 0.0;
    double p2_w = 0.0;
};

inline OperatingPoint operating_point(const HybridConfig& cfg, const std::array<double, 3>& load_w) {
    OperatingPoint op;
    const std::array<const SubgridSpec*, 3> specs{&cfg.ac, &cfg.dc, &cfg.ds};
    const Toggles& tg = cfg.scenario.toggles;
    const double total = load_w[0] + load_w[1] + load_w[2];
    if (!tg.ilc) {
        op.p_out_w = load_w;
        return op;
    }
    if (tg.concatenator) {
        for (int k = 0; k < 3; ++k) op.p_out_w[k] = specs[k]->p_max * total / cfg.p_gmax();
    } else {
        // Equal deviations: P_x = p_max / band_x * (-Delta).
        double weight = 0.0;
        for (const auto* s : specs) weight += s->p_max / s->band_pu();
        for (int k = 0; k < 3; ++k) op.p_out_w[k] = specs[k]->p_max / specs[k]->band_pu() * total / weight;
    }
    op.p1_w = load_w[1] - op.p_out_w[1];
    op.p2_w = load_w[0] - op.p_out_w[0];
    return op;
}

}  // namespace detail

/// Fixed-step run. At each step: apply due load events, read the deviations,
/// step the interlinking controller, form each subgrid's output power, record
/// the sample, then advance the subgrids and their restoration loops.
inline SimTrace run(const Scenario& sc, const HybridConfig& cfg_in) {
    validate(sc);
    HybridConfig cfg = cfg_in;
    cfg.scenario = sc;
    const Toggles& tg = sc.toggles;
    const double pg = cfg.p_gmax();
    const ConcatenatorSpec cspec = cfg.concatenator();
    if (tg.ilc) validate(cfg.ilc);

    detail::Plant plant{Subgrid(cfg.ac), Subgrid(cfg.dc), Subgrid(cfg.ds), {}, {}, {}};
    std::array<double, 3> load{sc.initial_load_ac, sc.initial_load_dc, sc.initial_load_ds};
    const detail::OperatingPoint op = detail::operating_point(cfg, load);

    const std::array<const Subgrid*, 3> grids{&plant.ac, &plant.dc, &plant.ds};
    const std::array<SubgridState*, 3> states{&plant.sac, &plant.sdc, &plant.sds};
    for (int k = 0; k < 3; ++k) {
        *states[k] = grids[k]->equilibrium(op.p_out_w[k] / grids[k]->spec().p_max);
        if (!tg.restoration) states[k]->comp_pu = grids[k]->spec().nominal_pu() - 1.0;
    }

    IlcState ilc;
    if (tg.ilc) {
        for (int k = 0; k < 3; ++k) ilc.concat[k] = states[k]->delta_pu / cspec.omega_0;
        ilc.integ1 = op.p1_w / pg / cfg.ilc.k_ti1;
        ilc.integ2 = op.p2_w / pg / cfg.ilc.k_ti2;
    }

    const std::size_t n_steps = steps_for(sc.horizon, sc.step);
    const std::size_t stride = steps_for(sc.sample_period, sc.step);
    std::vector<std::size_t> event_steps;
    for (const LoadEvent& e : sc.events) event_steps.push_back(steps_for(e.time, sc.step));

    SimTrace tr;
    tr.p_max_w = {cfg.ac.p_max, cfg.dc.p_max, cfg.ds.p_max};
    tr.sample_period = sc.sample_period;
    const std::size_t n_samples = n_steps / stride + 1;
    for (auto* v : {&tr.t_s, &tr.f_hz, &tr.vdc_v, &tr.vds_v, &tr.p_oac_w, &tr.p_odc_w, &tr.p_ods_w, &tr.p_l_w, &tr.p_h_w,
                    &tr.p1_w, &tr.p2_w, &tr.delta_f_hz, &tr.delta_vdc_v, &tr.delta_vds_v, &tr.dev_ac_pu, &tr.dev_dc_pu,
                    &tr.dev_ds_pu, &tr.conc_ac_pu, &tr.conc_dc_pu, &tr.conc_ds_pu, &tr.load_ac_w, &tr.load_dc_w,
                    &tr.load_ds_w})
        v->reserve(n_samples);

    std::size_t next_event = 0;
    for (std::size_t k = 0;; ++k) {
        while (next_event < sc.events.size() && event_steps[next_event] == k) {
            const LoadEvent& e = sc.events[next_event++];
            load[static_cast<int>(e.target)] += e.watts;
        }

        const IlcInputs in{plant.sac.delta_pu, plant.sdc.delta_pu, plant.sds.delta_pu};
        std::array<double, 3> y{in.delta_f_pu, in.delta_vdc_pu, in.delta_vds_pu};
        if (tg.ilc && tg.concatenator)
            for (int c = 0; c < 3; ++c) y[c] = concatenator_output(cspec, static_cast<Channel>(c), y[c], ilc.concat[c]);
        double p1 = 0.0, p2 = 0.0;
        if (tg.ilc) {
            ilc = ilc_step(ilc, in, cfg.ilc, cspec, sc.step, pg, tg.concatenator);
            p1 = ilc.p1_w;
            p2 = ilc.p2_w;
        }
        const std::array<double, 3> p_out{load[0] - p2, load[1] - p1, load[2] + p1 + p2};

        if (k % stride == 0) {
            const double t = static_cast<double>(k) * sc.step;
            tr.t_s.push_back(t);
            tr.f_hz.push_back(cfg.ac.x_max * plant.sac.x_pu());
            tr.vdc_v.push_back(cfg.dc.x_max * plant.sdc.x_pu());
            tr.vds_v.push_back(cfg.ds.x_max * plant.sds.x_pu());
            tr.p_oac_w.push_back(p_out[0]);
            tr.p_odc_w.push_back(p_out[1]);
            tr.p_ods_w.push_back(p_out[2]);
            const auto [pl, ph] = plant.ds.hess_powers(plant.sds, p_out[2] / cfg.ds.p_max);
            tr.p_l_w.push_back(pl * cfg.ds.p_max);
            tr.p_h_w.push_back(ph * cfg.ds.p_max);
            tr.p1_w.push_back(p1);
            tr.p2_w.push_back(p2);
            tr.delta_f_hz.push_back(cfg.ac.x_max * plant.sac.comp_pu);
            tr.delta_vdc_v.push_back(cfg.dc.x_max * plant.sdc.comp_pu);
            tr.delta_vds_v.push_back(cfg.ds.x_max * plant.sds.comp_pu);
            tr.dev_ac_pu.push_back(in.delta_f_pu);
            tr.dev_dc_pu.push_back(in.delta_vdc_pu);
            tr.dev_ds_pu.push_back(in.delta_vds_pu);
            tr.conc_ac_pu.push_back(y[0]);
            tr.conc_dc_pu.push_back(y[1]);
            tr.conc_ds_pu.push_back(y[2]);
            tr.load_ac_w.push_back(load[0]);
            tr.load_dc_w.push_back(load[1]);
            tr.load_ds_w.push_back(load[2]);
        }
        if (k == n_steps) break;

        for (int g = 0; g < 3; ++g) {
            const SubgridSpec& spec = grids[g]->spec();
            *states[g] = grids[g]->advance(*states[g], p_out[g] / spec.p_max, sc.step);
            if (tg.restoration) *states[g] = restoration_step(*states[g], spec.nominal_pu(), sc.step, spec);
            if (!(std::abs(states[g]->delta_pu) <= 0.5)) {
                throw Error(ErrorKind::NumericalDivergence,
                            std::string(to_string(spec.kind)) + " deviation left the +-0.5 p.u. band at t = " +
                                std::to_string(static_cast<double>(k + 1) * sc.step) + " s");
            }
        }
    }
    return tr;
}

inline SimTrace run(const HybridConfig& cfg) { return run(cfg.scenario, cfg); }

struct Metrics {
    double rocof = 0.0;     // Hz/s
    double rocov_dc = 0.0;  // V/s
    double rocov_ds = 0.0;
    double nadir_f = 0.0;   // Hz
    double nadir_vdc = 0.0; // V
    double nadir_vds = 0.0;
    double steady_f = 0.0;
    double steady_vdc = 0.0;
    double steady_vds = 0.0;
    std::array<double, 3> steady_shares{};  // W, {ac, dc, ds}
    double share_error = 0.0;               // max pairwise per-unit loading difference
};

inline constexpr double kSettleWindow = 2.0;     // s
inline constexpr double kSettleRelTol = 5e-4;
inline constexpr double kSteadyFraction = 0.05;  // of the horizon

namespace detail {

inline double tail_mean(const std::vector<double>& v, std::size_t from) {
    double acc = 0.0;
    for (std::size_t i = from; i < v.size(); ++i) acc += v[i];
    return acc / static_cast<double>(v.size() - from);
}

}  // namespace detail

/// Rates from the forward difference between the event sample and the one
/// after it (magnitudes), nadirs as minima until the trace ends or the next
/// load change, steady values as means over the final 5% of the trace.
inline Metrics measure(const SimTrace& tr, double event_time) {
    const std::size_t i0 = tr.index_of(event_time);
    if (i0 + 1 >= tr.size()) throw Error(ErrorKind::InvalidArgument, "no sample after the event");
    Metrics m;
    const double dt = tr.t_s[i0 + 1] - tr.t_s[i0];
    m.rocof = std::abs(tr.f_hz[i0 + 1] - tr.f_hz[i0]) / dt;
    m.rocov_dc = std::abs(tr.vdc_v[i0 + 1] - tr.vdc_v[i0]) / dt;
    m.rocov_ds = std::abs(tr.vds_v[i0 + 1] - tr.vds_v[i0]) / dt;

    std::size_t i1 = i0 + 1;
    while (i1 < tr.size() && tr.load_ac_w[i1] == tr.load_ac_w[i0 + 1] && tr.load_dc_w[i1] == tr.load_dc_w[i0 + 1] &&
           tr.load_ds_w[i1] == tr.load_ds_w[i0 + 1])
        ++i1;
    m.nadir_f = *std::min_element(tr.f_hz.begin() + static_cast<long>(i0), tr.f_hz.begin() + static_cast<long>(i1));
    m.nadir_vdc = *std::min_element(tr.vdc_v.begin() + static_cast<long>(i0), tr.vdc_v.begin() + static_cast<long>(i1));
    m.nadir_vds = *std::min_element(tr.vds_v.begin() + static_cast<long>(i0), tr.vds_v.begin() + static_cast<long>(i1));

    const double t_end = tr.t_s.back();
    const double t_start = tr.t_s.front();
    if (t_end - t_start < kSettleWindow) throw Error(ErrorKind::NotSettled, "trace shorter than the settling window");
    for (const auto* v : {&tr.f_hz, &tr.vdc_v, &tr.vds_v}) {
        const double last = v->back();
        for (std::size_t i = tr.size(); i-- > 0 && tr.t_s[i] >= t_end - kSettleWindow - 1e-9;) {
            if (std::abs((*v)[i] - last) > kSettleRelTol * std::abs(last)) {
                throw Error(ErrorKind::NotSettled, "trace still moving at t = " + std::to_string(tr.t_s[i]) + " s");
            }
        }
    }
    const double t_tail = t_end - kSteadyFraction * (t_end - t_start);
    std::size_t it = tr.size() - 1;
    while (it > 0 && tr.t_s[it - 1] >= t_tail - 1e-9) --it;
    m.steady_f = detail::tail_mean(tr.f_hz, it);
    m.steady_vdc = detail::tail_mean(tr.vdc_v, it);
    m.steady_vds = detail::tail_mean(tr.vds_v, it);
    m.steady_shares = {detail::tail_mean(tr.p_oac_w, it), detail::tail_mean(tr.p_odc_w, it),
                       detail::tail_mean(tr.p_ods_w, it)};
    for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b)
            m.share_error = std::max(m.share_error, std::abs(m.steady_shares[a] / tr.p_max_w[a] -
                                                             m.steady_shares[b] / tr.p_max_w[b]));
    return m;
}

/// GECM assembled for the loads that change at `event_time` in the scenario.
inline GecmSystem gecm_for_event(const HybridConfig& cfg, double event_time) {
    LoadInjection inj;
    const double pg = cfg.p_gmax();
    bool any = false;
    for (const LoadEvent& e : cfg.scenario.events) {
        if (std::abs(e.time - event_time) > 1e-12) continue;
        any = true;
        switch (e.target) {
        case SubgridKind::AC: inj.ac += e.watts / pg; break;
        case SubgridKind::DC: inj.dc += e.watts / pg; break;
        case SubgridKind::DS: inj.ds += e.watts / pg; break;
        }
    }
    if (!any) throw Error(ErrorKind::InvalidArgument, "no load event at t = " + std::to_string(event_time) + " s");
    const Toggles& tg = cfg.scenario.toggles;
    return make_gecm(cfg.ac, cfg.dc, cfg.ds, cfg.ilc, cfg.concatenator(), tg.concatenator, tg.ilc, inj);
}

struct ChannelComparison {
    double rms_rel = 0.0;  // RMS(sim - gecm) / max|gecm|
    double peak = 0.0;     // max|gecm| over the window, p.u.
};

struct GecmComparison {
    ChannelComparison ac, dc, ds;
    double window = 0.0;  // s compared
    double tolerance = 0.02;
    double nodal_residual = 0.0;

    bool pass() const { return ac.rms_rel < tolerance && dc.rms_rel < tolerance && ds.rms_rel < tolerance; }
};

/// Deviation increments after `event_time` in the trace against the GECM step
/// responses of `sys`, over up to `window` seconds (stopping at the next load change).
inline GecmComparison compare_trace_with_gecm(const SimTrace& tr, double event_time, const GecmSystem& sys,
                                              double step, double window = 10.0) {
    const NodalSolution sol = solve_nodal(sys);
    const std::size_t i0 = tr.index_of(event_time);
    std::size_t i1 = i0 + 1;
    while (i1 < tr.size() && tr.t_s[i1] - event_time <= window + 1e-9 && tr.load_ac_w[i1] == tr.load_ac_w[i0 + 1] &&
           tr.load_dc_w[i1] == tr.load_dc_w[i0 + 1] && tr.load_ds_w[i1] == tr.load_ds_w[i0 + 1])
        ++i1;
    // The event sample still holds the pre-event state; the step starts there.
    const std::size_t stride = steps_for(tr.sample_period, step);
    const std::size_t n = (i1 - i0 - 1) * stride;

    GecmComparison cmp;
    cmp.window = tr.t_s[i1 - 1] - event_time;
    cmp.nodal_residual = sol.residual;
    const auto compare = [&](const RationalTF& f, const std::vector<double>& dev) {
        const std::vector<double> y = step_response(tf_to_modal_statespace(f), 1.0, step, n);
        ChannelComparison c;
        double acc = 0.0;
        for (std::size_t i = i0; i < i1; ++i) {
            const double g = y[(i - i0) * stride];
            const double d = (dev[i] - dev[i0]) - g;
            acc += d * d;
            c.peak = std::max(c.peak, std::abs(g));
        }
        const double rms = std::sqrt(acc / static_cast<double>(i1 - i0));
        c.rms_rel = c.peak > 0.0 ? rms / c.peak : rms;
        return c;
    };
    cmp.ac = compare(sol.delta_f, tr.dev_ac_pu);
    cmp.dc = compare(sol.delta_vdc, tr.dev_dc_pu);
    cmp.ds = compare(sol.delta_vds, tr.dev_ds_pu);
    return cmp;
}

/// Runs the configuration and cross-checks the first load event against the GECM.
inline GecmComparison compare_with_gecm(const Scenario& sc, const HybridConfig& cfg_in, double window = 10.0) {
    if (sc.events.empty()) throw Error(ErrorKind::InvalidArgument, "scenario has no load events");
    HybridConfig cfg = cfg_in;
    cfg.scenario = sc;
    const SimTrace tr = run(sc, cfg);
    const double te = sc.events.front().time;
    return compare_trace_with_gecm(tr, te, gecm_for_event(cfg, te), sc.step, window);
}

inline void write_trace_csv(std::ostream& os, const SimTrace& tr) {
    os << "t_s,f_hz,vdc_v,vds_v,p_oac_w,p_odc_w,p_ods_w,p_l_w,p_h_w,p1_w,p2_w,delta_f_hz,delta_vdc_v,delta_vds_v\n";
    char buf[32];
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const double row[] = {tr.t_s[i],   tr.f_hz[i],  tr.vdc_v[i], tr.vds_v[i],      tr.p_oac_w[i],
                              tr.p_odc_w[i], tr.p_ods_w[i], tr.p_l_w[i], tr.p_h_w[i],      tr.p1_w[i],
                              tr.p2_w[i],  tr.delta_f_hz[i], tr.delta_vdc_v[i], tr.delta_vds_v[i]};
        for (std::size_t c = 0; c < std::size(row); ++c) {
            // no "-0" in the output
            const double v = row[c] == 0.0 ? 0.0 : row[c];
            std::snprintf(buf, sizeof buf, "%.6g", v);
            if (c) os << ',';
            os << buf;
        }
        os << '\n';
    }
}

}  // namespace hmg
