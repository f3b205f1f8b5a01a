// hmg_cli: simulate / predict / bode / design for a hybrid microgrid config.
//
// Exit status: 0 ok, 1 other failure (or design: omega_0 below bound),
// 2 configuration error, 3 numerical divergence.

#include <algorithm>
#include <array>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/fmt/fmt.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "hmg/config.hpp"
#include "hmg/gecm.hpp"
#include "hmg/sim.hpp"

namespace fs = std::filesystem;
using namespace hmg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;

std::string g6(double v) { return fmt::format("{:.6g}", v == 0.0 ? 0.0 : v); }

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("hmg");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("HMG_LOG")) {
        const std::string v = env;
        if (v == "error") spdlog::set_level(spdlog::level::err);
        else if (v == "info") spdlog::set_level(spdlog::level::info);
        else if (v == "debug") spdlog::set_level(spdlog::level::debug);
        else spdlog::warn("ignoring HMG_LOG={} (expected error, info or debug)", v);
    }
}

HybridConfig load(const std::string& path, ParseOptions opt = {}) {
    ParsedConfig pc = load_config(path, opt);
    for (const auto& w : pc.warnings) spdlog::warn("{}", w);
    spdlog::info("loaded {} ({} events)", path, pc.config.scenario.events.size());
    return pc.config;
}

double first_event_time(const HybridConfig& c) { return c.scenario.events.empty() ? 0.0 : c.scenario.events.front().time; }

/// Loads that change at the first event, in W {ac, dc, ds}.
std::array<double, 3> first_event_loads(const HybridConfig& c) {
    std::array<double, 3> w{};
    const double t0 = first_event_time(c);
    for (const LoadEvent& e : c.scenario.events)
        if (e.time == t0) w[static_cast<int>(e.target)] += e.watts;
    return w;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
    const HybridConfig cfg = load(config_path);
    fs::create_directories(out_dir);
    spdlog::info("running {} s at step {} s", cfg.scenario.horizon, cfg.scenario.step);
    const SimTrace tr = run(cfg);
    {
        std::ofstream os(fs::path(out_dir) / "trace.csv");
        write_trace_csv(os, tr);
    }
    spdlog::info("wrote {} samples", tr.size());

    const Metrics m = measure(tr, first_event_time(cfg));
    const std::vector<std::pair<std::string, double>> rows{
        {"rocof_hz_s", m.rocof},           {"rocov_dc_v_s", m.rocov_dc},     {"rocov_ds_v_s", m.rocov_ds},
        {"nadir_f_hz", m.nadir_f},         {"nadir_vdc_v", m.nadir_vdc},     {"nadir_vds_v", m.nadir_vds},
        {"steady_f_hz", m.steady_f},       {"steady_vdc_v", m.steady_vdc},   {"steady_vds_v", m.steady_vds},
        {"steady_p_ac_w", m.steady_shares[0]}, {"steady_p_dc_w", m.steady_shares[1]},
        {"steady_p_ds_w", m.steady_shares[2]}, {"share_error", m.share_error}};
    std::ofstream txt(fs::path(out_dir) / "metrics.txt");
    nlohmann::ordered_json js;
    for (const auto& [k, v] : rows) {
        txt << k << ": " << g6(v) << '\n';
        js[k] = std::stod(g6(v));
        std::cout << k << ": " << g6(v) << '\n';
    }
    std::ofstream(fs::path(out_dir) / "metrics.json") << js.dump(2) << '\n';
    return kExitOk;
}

int cmd_predict(const std::string& config_path, const std::string& out_path) {
    const HybridConfig c = load(config_path);
    const auto step = first_event_loads(c);
    const double step_total = step[0] + step[1] + step[2];
    double load_total = c.scenario.initial_load_ac + c.scenario.initial_load_dc + c.scenario.initial_load_ds;
    for (const LoadEvent& e : c.scenario.events) load_total += e.watts;

    const RatePrediction r = predict_rates(c.ac, c.dc, c.ds, step_total);
    const auto shares = predict_steady_shares(c.ac, c.dc, c.ds, load_total);
    const auto ratio = objective1_only_ratio(c.ac, c.dc, c.ds);
    const std::vector<std::tuple<std::string, double, std::string>> rows{
        {"global_inertia", r.global_inertia, "s"},
        {"load_step", step_total, "W"},
        {"rocof", r.rocof_hz_s, "Hz/s"},
        {"rocov_dc", r.rocov_dc_v_s, "V/s"},
        {"rocov_ds", r.rocov_ds_v_s, "V/s"},
        {"total_load", load_total, "W"},
        {"steady_p_ac", shares[0], "W"},
        {"steady_p_dc", shares[1], "W"},
        {"steady_p_ds", shares[2], "W"},
        {"objective1_ratio_ac", ratio[0], "1"},
        {"objective1_ratio_dc", ratio[1], "1"},
        {"objective1_ratio_ds", ratio[2], "1"}};
    std::string csv = "name,value,unit\n";
    for (const auto& [name, value, unit] : rows) csv += name + "," + g6(value) + "," + unit + "\n";
    std::cout << csv;
    if (!out_path.empty()) std::ofstream(out_path) << csv;
    return kExitOk;
}

const std::vector<std::string>& bode_targets() {
    static const std::vector<std::string> t{"N_ac0", "N_ac1", "N_dc0", "N_dc1", "N_ds0",
                                            "N_ds1", "T_ac",  "T_dc",  "T_ds",  "f_closed"};
    return t;
}

RationalTF bode_target(const HybridConfig& c, const std::string& target) {
    const ConcatenatorSpec cs = c.concatenator();
    if (target == "N_ac0") return build_ac_open_loop_tf(c.ac);
    if (target == "N_dc0") return build_dc_open_loop_tf(c.dc);
    if (target == "N_ds0") return build_ds_open_loop_tf(c.ds);
    if (target == "T_ac") return concatenator_tf(cs, Channel::AC);
    if (target == "T_dc") return concatenator_tf(cs, Channel::DC);
    if (target == "T_ds") return concatenator_tf(cs, Channel::DS);

    // Coupled responses: the first event's injection pattern, scaled to a unit total.
    auto w = first_event_loads(c);
    double total = w[0] + w[1] + w[2];
    if (total == 0.0) {
        w = {1.0, 1.0, 1.0};
        total = 3.0;
    }
    const Toggles& tg = c.scenario.toggles;
    GecmSystem sys = make_gecm(c.ac, c.dc, c.ds, c.ilc, cs, tg.concatenator, tg.ilc,
                               {w[0] / total, w[1] / total, w[2] / total});
    if (target == "f_closed") {
        sys.load = {w[0] / c.p_gmax(), w[1] / c.p_gmax(), w[2] / c.p_gmax()};
        const RationalTF step = tf_series(solve_nodal(sys).delta_f, RationalTF::integrator());
        return tf_scale(tf_shift_s(restored_output_tf(step, c.ac), 1), c.ac.x_max);
    }
    const NodalSolution sol = solve_nodal(sys);
    if (target == "N_ac1") return sol.delta_f;
    if (target == "N_dc1") return sol.delta_vdc;
    return sol.delta_vds;
}

int cmd_bode(const std::string& config_path, const std::string& target, const std::string& out_path) {
    const auto& valid = bode_targets();
    if (std::find(valid.begin(), valid.end(), target) == valid.end()) {
        std::string list;
        for (const auto& t : valid) list += (list.empty() ? "" : ", ") + t;
        std::cerr << "unknown target '" << target << "'; valid targets: " << list << '\n';
        return kExitConfig;
    }
    const HybridConfig c = load(config_path);
    const auto pts = bode_export(bode_target(c, target), default_bode_grid());
    std::string csv = "omega_rad_s,mag_db,phase_deg\n";
    for (const BodePoint& p : pts) csv += g6(p.omega) + "," + g6(p.mag_db) + "," + g6(p.phase_deg) + "\n";
    if (out_path.empty()) std::cout << csv;
    else std::ofstream(out_path) << csv;
    spdlog::info("{}: {} points", target, pts.size());
    return kExitOk;
}

int cmd_design(const std::string& config_path) {
    ParseOptions opt;
    opt.enforce_omega_bound = false;
    const HybridConfig c = load(config_path, opt);
    const SubgridSpec ac = design_droop(c.ac);
    const SubgridSpec dc = design_droop(c.dc);
    const SubgridSpec ds = design_droop(c.ds);
    const ConcatenatorSpec cs = c.concatenator();
    const double bound = min_cutoff(c.ilc.sampling_period, c.ilc.safety_factor_M);
    std::cout << "R_ac: " << g6(ac.R) << '\n'
              << "R_dc: " << g6(dc.R) << '\n'
              << "y_L: " << g6(ds.y_L) << '\n'
              << "omega_0_rad_s: " << g6(cs.omega_0) << '\n'
              << "omega_ac_rad_s: " << g6(cs.omega_ac) << '\n'
              << "omega_dc_rad_s: " << g6(cs.omega_dc) << '\n'
              << "omega_ds_rad_s: " << g6(cs.omega_ds) << '\n'
              << "omega_0_min_rad_s: " << g6(bound) << '\n'
              << "omega_0_min_over_pi: " << g6(bound / M_PI) << '\n';
    const bool ok = c.omega_0 >= bound;
    std::cout << "omega_0_passes: " << (ok ? "true" : "false") << '\n';
    if (!ok) {
        std::cout << "warning: omega_0 = " << g6(c.omega_0) << " rad/s is below the minimum " << g6(bound)
                  << " rad/s resolvable by the controller\n";
        return kExitFailure;
    }
    return kExitOk;
}

int exit_code_for(const Error& e) {
    switch (e.kind()) {
    case ErrorKind::Config:
    case ErrorKind::InvalidArgument:
    case ErrorKind::DegenerateLimits:
    case ErrorKind::NegativeDroop: return kExitConfig;
    case ErrorKind::NumericalDivergence: return kExitDivergence;
    default: return kExitFailure;
    }
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"Hybrid AC/DC/storage microgrid simulator and analyzer"};
    app.require_subcommand(1);

    std::string config, out, target;
    auto* sim = app.add_subcommand("simulate", "run the time-domain simulation");
    sim->add_option("--config", config, "configuration file")->required();
    sim->add_option("--out", out, "output directory")->required();
    auto* pred = app.add_subcommand("predict", "analytic inertia, rate and sharing predictions");
    pred->add_option("--config", config, "configuration file")->required();
    pred->add_option("--out", out, "optional CSV output path");
    auto* bode = app.add_subcommand("bode", "frequency response CSV");
    bode->add_option("--config", config, "configuration file")->required();
    bode->add_option("--target", target, "N_ac0|N_ac1|N_dc0|N_dc1|N_ds0|N_ds1|T_ac|T_dc|T_ds|f_closed")->required();
    bode->add_option("--out", out, "CSV output path (stdout if omitted)");
    auto* design = app.add_subcommand("design", "droop and concatenator design report");
    design->add_option("--config", config, "configuration file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*sim) return cmd_simulate(config, out);
        if (*pred) return cmd_predict(config, out);
        if (*bode) return cmd_bode(config, target, out);
        if (*design) return cmd_design(config);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitFailure;
}
