#pragma once

// Sectioned key = value configuration files:
//
//   # comment
//   [ac]
//   x_max = 51
//   R = auto
//   [events]
//   event = 1.0 dc 14000
//
// Sections: ac, dc, ds, ilc, sim, events, toggles. Numbers are SI.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hmg/error.hpp"
#include "hmg/ilc.hpp"
#include "hmg/sim.hpp"
#include "hmg/subgrid.hpp"

namespace hmg {

struct ParseOptions {
    /// Reject omega_0 below the binary32 resolution bound (otherwise a warning).
    bool enforce_omega_bound = true;
};

struct ParsedConfig {
    HybridConfig config;
    std::vector<std::string> warnings;
};

namespace detail {

struct Entry {
    std::string value;
    int line = 0;
};

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> subgrid_keys(SubgridKind kind) {
    std::vector<std::string> keys{"x_max", "x_min", "x_nominal", "p_max", "k_p", "k_i"};
    if (kind == SubgridKind::DS) {
        keys.insert(keys.end(), {"y_H", "y_L"});
    } else {
        keys.insert(keys.end(), {"H", "D", "R", "T_G", "F_HP", "T_CH", "T_RH"});
    }
    return keys;
}

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    void load(std::istream& in) {
        std::string raw;
        std::string section;
        int line = 0;
        while (std::getline(in, raw)) {
            ++line;
            const auto hash = raw.find('#');
            const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
            if (text.empty()) continue;
            if (text.front() == '[') {
                if (text.back() != ']') fail(line, "malformed section header '" + text + "'");
                section = trim(text.substr(1, text.size() - 2));
                if (!known_sections().count(section)) fail(line, "unknown section [" + section + "]");
                continue;
            }
            const auto eq = text.find('=');
            if (eq == std::string::npos) fail(line, "expected key = value");
            if (section.empty()) fail(line, "key outside of any section");
            const std::string key = trim(text.substr(0, eq));
            const std::string value = trim(text.substr(eq + 1));
            const std::string full = section + "." + key;
            if (section == "events") {
                if (key != "event") fail(line, "unknown key '" + full + "'");
                events_.push_back({value, line});
                continue;
            }
            if (!allowed().count(full)) fail(line, "unknown key '" + full + "'");
            if (entries_.count(full)) fail(line, "duplicate key '" + full + "'");
            entries_[full] = {value, line};
        }
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    bool is_auto(const std::string& key) const { return has(key) && entries_.at(key).value == "auto"; }

    const Entry& require(const std::string& key) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) throw Error(ErrorKind::Config, source_ + ": missing key '" + key + "'");
        return it->second;
    }

    double number(const std::string& key) const { return parse_number(require(key)); }
    double number_or(const std::string& key, double fallback) const {
        return has(key) ? parse_number(entries_.at(key)) : fallback;
    }

    bool boolean_or(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const Entry& e = entries_.at(key);
        if (e.value == "true") return true;
        if (e.value == "false") return false;
        fail(e.line, "'" + key + "' must be true or false, got '" + e.value + "'");
    }

    std::vector<LoadEvent> events() const {
        std::vector<LoadEvent> out;
        for (const Entry& e : events_) {
            std::istringstream ss(e.value);
            std::string t, target, w, extra;
            if (!(ss >> t >> target >> w) || (ss >> extra)) fail(e.line, "event needs '<time_s> <ac|dc|ds> <watts>'");
            LoadEvent ev;
            ev.time = parse_number({t, e.line});
            if (target == "ac") ev.target = SubgridKind::AC;
            else if (target == "dc") ev.target = SubgridKind::DC;
            else if (target == "ds") ev.target = SubgridKind::DS;
            else fail(e.line, "event target must be ac, dc or ds, got '" + target + "'");
            ev.watts = parse_number({w, e.line});
            out.push_back(ev);
        }
        return out;
    }

    [[noreturn]] void fail(int line, const std::string& what) const {
        throw Error(ErrorKind::Config, source_ + ":" + std::to_string(line) + ": " + what);
    }

private:
    static const std::set<std::string>& known_sections() {
        static const std::set<std::string> s{"ac", "dc", "ds", "ilc", "sim", "events", "toggles"};
        return s;
    }

    static const std::set<std::string>& allowed() {
        static const std::set<std::string> keys = [] {
            std::set<std::string> k;
            for (auto [name, kind] : {std::pair{"ac", SubgridKind::AC}, std::pair{"dc", SubgridKind::DC},
                                      std::pair{"ds", SubgridKind::DS}})
                for (const auto& key : subgrid_keys(kind)) k.insert(std::string(name) + "." + key);
            for (const char* key : {"omega_0", "k_tp1", "k_ti1", "k_tp2", "k_ti2", "sampling_period", "safety_factor_M"})
                k.insert(std::string("ilc.") + key);
            for (const char* key : {"step", "horizon", "sample_period", "initial_load_ac", "initial_load_dc", "initial_load_ds"})
                k.insert(std::string("sim.") + key);
            for (const char* key : {"concatenator", "restoration", "ilc"}) k.insert(std::string("toggles.") + key);
            return k;
        }();
        return keys;
    }

    double parse_number(const Entry& e) const {
        const char* begin = e.value.c_str();
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (e.value.empty() || end != begin + e.value.size() || !std::isfinite(v)) {
            fail(e.line, "'" + e.value + "' is not a finite number");
        }
        return v;
    }

    std::string source_;
    std::map<std::string, Entry> entries_;
    std::vector<Entry> events_;
};

inline SubgridSpec read_subgrid(const Reader& r, SubgridKind kind, bool& droop_auto) {
    const std::string p = std::string(to_string(kind)) + ".";
    SubgridSpec s;
    s.kind = kind;
    s.x_max = r.number(p + "x_max");
    s.x_min = r.number(p + "x_min");
    s.x_nominal = r.number(p + "x_nominal");
    s.p_max = r.number(p + "p_max");
    s.k_p = r.number(p + "k_p");
    s.k_i = r.number(p + "k_i");
    const std::string droop_key = p + (kind == SubgridKind::DS ? "y_L" : "R");
    droop_auto = r.is_auto(droop_key);
    if (kind == SubgridKind::DS) {
        s.y_H = r.number(p + "y_H");
        if (!droop_auto) s.y_L = r.number(droop_key);
    } else {
        s.H = r.number(p + "H");
        s.D = r.number(p + "D");
        if (!droop_auto) s.R = r.number(droop_key);
        s.T_G = r.number(p + "T_G");
        s.F_HP = r.number(p + "F_HP");
        s.T_CH = r.number(p + "T_CH");
        s.T_RH = r.number(p + "T_RH");
    }
    return s;
}

}  // namespace detail

/// Parses and validates. Droop values given as `auto` are designed; numeric
/// ones that miss the designed value produce a warning, not an error.
inline ParsedConfig parse_config(std::istream& in, const std::string& source = "<config>", ParseOptions opt = {}) {
    detail::Reader r(source);
    r.load(in);
    ParsedConfig out;
    HybridConfig& c = out.config;
    bool droop_auto[3] = {false, false, false};
    c.ac = detail::read_subgrid(r, SubgridKind::AC, droop_auto[0]);
    c.dc = detail::read_subgrid(r, SubgridKind::DC, droop_auto[1]);
    c.ds = detail::read_subgrid(r, SubgridKind::DS, droop_auto[2]);

    c.omega_0 = r.number("ilc.omega_0");
    c.ilc.k_tp1 = r.number("ilc.k_tp1");
    c.ilc.k_ti1 = r.number("ilc.k_ti1");
    c.ilc.k_tp2 = r.number("ilc.k_tp2");
    c.ilc.k_ti2 = r.number("ilc.k_ti2");
    c.ilc.sampling_period = r.number("ilc.sampling_period");
    c.ilc.safety_factor_M = r.number("ilc.safety_factor_M");

    Scenario& sc = c.scenario;
    sc.step = r.number("sim.step");
    sc.horizon = r.number("sim.horizon");
    sc.sample_period = r.number_or("sim.sample_period", sc.sample_period);
    sc.initial_load_ac = r.number_or("sim.initial_load_ac", 0.0);
    sc.initial_load_dc = r.number_or("sim.initial_load_dc", 0.0);
    sc.initial_load_ds = r.number_or("sim.initial_load_ds", 0.0);
    sc.events = r.events();
    sc.toggles.concatenator = r.boolean_or("toggles.concatenator", true);
    sc.toggles.restoration = r.boolean_or("toggles.restoration", true);
    sc.toggles.ilc = r.boolean_or("toggles.ilc", true);

    // Structural and design checks; library errors keep their own kind.
    SubgridSpec* specs[3] = {&c.ac, &c.dc, &c.ds};
    for (int k = 0; k < 3; ++k) {
        validate_limits(*specs[k]);
        const SubgridSpec designed = design_droop(*specs[k]);
        if (droop_auto[k]) {
            *specs[k] = designed;
        } else if (droop_identity_residual(*specs[k]) > 1e-10) {
            const bool ds = specs[k]->kind == SubgridKind::DS;
            out.warnings.push_back(std::string(to_string(specs[k]->kind)) + (ds ? ".y_L = " : ".R = ") +
                                   std::to_string(ds ? specs[k]->y_L : specs[k]->R) +
                                   " differs from the droop-matched value " +
                                   std::to_string(ds ? designed.y_L : designed.R) +
                                   "; steady power sharing will not follow the capacities");
        }
        if (specs[k]->kind == SubgridKind::DS ? !(specs[k]->y_L > 0) : !(specs[k]->R > 0)) {
            throw Error(ErrorKind::NegativeDroop, std::string(to_string(specs[k]->kind)) + ": droop must be positive");
        }
    }
    try {
        validate(c.ilc);
        validate(sc);
    } catch (const Error& e) {
        throw Error(ErrorKind::Config, source + ": " + e.what());
    }
    if (!(c.omega_0 > 0.0)) throw Error(ErrorKind::Config, source + ": ilc.omega_0 must be positive");
    const double bound = min_cutoff(c.ilc.sampling_period, c.ilc.safety_factor_M);
    if (c.omega_0 < bound) {
        const std::string msg = "ilc.omega_0 = " + std::to_string(c.omega_0) + " rad/s is below the resolution bound " +
                                std::to_string(bound) + " rad/s";
        if (opt.enforce_omega_bound) throw Error(ErrorKind::Config, source + ": " + msg);
        out.warnings.push_back(msg);
    }
    return out;
}

inline ParsedConfig load_config(const std::string& path, ParseOptions opt = {}) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Config, "cannot open config file '" + path + "'");
    return parse_config(in, path, opt);
}

/// Writes a file that parse_config reads back to an equal HybridConfig.
inline void write_config(std::ostream& os, const HybridConfig& c) {
    const auto num = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    const auto subgrid = [&](const SubgridSpec& s) {
        os << '[' << to_string(s.kind) << "]\n";
        os << "x_max = " << num(s.x_max) << "\nx_min = " << num(s.x_min) << "\nx_nominal = " << num(s.x_nominal)
           << "\np_max = " << num(s.p_max) << '\n';
        if (s.kind == SubgridKind::DS) {
            os << "y_H = " << num(s.y_H) << "\ny_L = " << num(s.y_L) << '\n';
        } else {
            os << "H = " << num(s.H) << "\nD = " << num(s.D) << "\nR = " << num(s.R) << "\nT_G = " << num(s.T_G)
               << "\nF_HP = " << num(s.F_HP) << "\nT_CH = " << num(s.T_CH) << "\nT_RH = " << num(s.T_RH) << '\n';
        }
        os << "k_p = " << num(s.k_p) << "\nk_i = " << num(s.k_i) << "\n\n";
    };
    subgrid(c.ac);
    subgrid(c.dc);
    subgrid(c.ds);
    os << "[ilc]\nomega_0 = " << num(c.omega_0) << "\nk_tp1 = " << num(c.ilc.k_tp1) << "\nk_ti1 = " << num(c.ilc.k_ti1)
       << "\nk_tp2 = " << num(c.ilc.k_tp2) << "\nk_ti2 = " << num(c.ilc.k_ti2)
       << "\nsampling_period = " << num(c.ilc.sampling_period) << "\nsafety_factor_M = " << num(c.ilc.safety_factor_M)
       << "\n\n";
    const Scenario& sc = c.scenario;
    os << "[sim]\nstep = " << num(sc.step) << "\nhorizon = " << num(sc.horizon) << "\nsample_period = "
       << num(sc.sample_period) << "\ninitial_load_ac = " << num(sc.initial_load_ac)
       << "\ninitial_load_dc = " << num(sc.initial_load_dc) << "\ninitial_load_ds = " << num(sc.initial_load_ds)
       << "\n\n[events]\n";
    for (const LoadEvent& e : sc.events) os << "event = " << num(e.time) << ' ' << to_string(e.target) << ' ' << num(e.watts) << '\n';
    const auto b = [](bool v) { return v ? "true" : "false"; };
    os << "\n[toggles]\nconcatenator = " << b(sc.toggles.concatenator) << "\nrestoration = " << b(sc.toggles.restoration)
       << "\nilc = " << b(sc.toggles.ilc) << '\n';
}

}  // namespace hmg
