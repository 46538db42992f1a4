#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "signest/errors.hpp"
#include "signest/experiments.hpp"

// Flat key=value configuration files grouped by [section] headers:
//
//   [model]
//   p = 3
//   sigma_e2 = 0.4
//   sigma_n2 = 1.0
//   w0 = 0.7, 0.5, -0.6          # or: w0 = random-normal
//   [experiment]
//   kind = mse_vs_n
//   n_list = 200, 1000, 5000
//   trials = 500
//   master_seed = 1
//   [output]
//   dir = out
//
// Unknown keys produce warnings; missing required keys or invariant
// violations raise ConfigError naming the key.

namespace signest {

struct ParsedConfig {
    ExperimentConfig config;
    std::string output_dir;                // [output] dir, may be empty
    std::string output_prefix;             // [output] prefix, may be empty
    std::vector<std::string> warnings;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline double parse_double(const std::string& key, const std::string& s) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' has a non-numeric value '" + s + "'");
    }
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& s) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' has a non-integer value '" + s + "'");
    }
}

inline bool parse_bool(const std::string& key, const std::string& s) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("config: key '" + key + "' has a non-boolean value '" + s + "'");
}

inline ExperimentKind parse_kind(const std::string& s) {
    if (s == "mse_vs_n") return ExperimentKind::MseVsN;
    if (s == "estimator_comparison") return ExperimentKind::EstimatorComparison;
    if (s == "crlb_scan_sigma_n") return ExperimentKind::CrlbScanSigmaN;
    if (s == "crlb_scan_sigma_e") return ExperimentKind::CrlbScanSigmaE;
    if (s == "gap_bounds_sweep") return ExperimentKind::GapBoundsSweep;
    if (s == "probability_vs_n") return ExperimentKind::ProbabilityVsN;
    throw ConfigError("config: unknown experiment kind '" + s + "'");
}

}  // namespace detail

/// Parse configuration text. Section-qualified keys are matched exactly;
/// anything unrecognized becomes a warning, so configs stay forward-portable.
inline ParsedConfig parse_config_text(const std::string& text) {
    ParsedConfig out;
    ExperimentConfig& cfg = out.config;

    std::map<std::string, std::string> kv;
    std::string section;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config: malformed section header at line " +
                                  std::to_string(line_no));
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected key=value at line " + std::to_string(line_no));
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config: empty key at line " + std::to_string(line_no));
        kv[section + "." + key] = value;
    }

    bool scan_seen = false;
    bool kind_seen = false;
    for (const auto& [qkey, value] : kv) {
        if (qkey == "model.p") cfg.p = detail::parse_u64(qkey, value);
        else if (qkey == "model.sigma_e2") cfg.sigma_e2 = detail::parse_double(qkey, value);
        else if (qkey == "model.sigma_n2") cfg.sigma_n2 = detail::parse_double(qkey, value);
        else if (qkey == "model.sigma_z2") cfg.sigma_z2 = detail::parse_double(qkey, value);
        else if (qkey == "model.w0") {
            if (value == "random-normal") {
                cfg.w0_random = true;
            } else {
                for (const auto& item : detail::split_list(value))
                    cfg.w0.push_back(detail::parse_double(qkey, item));
            }
        } else if (qkey == "experiment.kind") {
            cfg.kind = detail::parse_kind(value);
            kind_seen = true;
        } else if (qkey == "experiment.n_list") {
            for (const auto& item : detail::split_list(value))
                cfg.n_list.push_back(detail::parse_u64(qkey, item));
        } else if (qkey == "experiment.trials") cfg.trials = detail::parse_u64(qkey, value);
        else if (qkey == "experiment.mc_trials") cfg.mc_trials = detail::parse_u64(qkey, value);
        else if (qkey == "experiment.master_seed")
            cfg.master_seed = detail::parse_u64(qkey, value);
        else if (qkey == "experiment.r_w_factor")
            cfg.r_w_factor = detail::parse_double(qkey, value);
        else if (qkey == "experiment.redraw_h_per_trial")
            cfg.redraw_h_per_trial = detail::parse_bool(qkey, value);
        else if (qkey == "experiment.sigma_z2_fixed")
            cfg.sigma_z2_fixed = detail::parse_bool(qkey, value);
        else if (qkey == "experiment.scan_lo") { cfg.scan.lo = detail::parse_double(qkey, value); scan_seen = true; }
        else if (qkey == "experiment.scan_hi") { cfg.scan.hi = detail::parse_double(qkey, value); scan_seen = true; }
        else if (qkey == "experiment.scan_points") { cfg.scan.points = detail::parse_u64(qkey, value); scan_seen = true; }
        else if (qkey == "experiment.scan_log") { cfg.scan.log_spaced = detail::parse_bool(qkey, value); scan_seen = true; }
        else if (qkey == "experiment.sigma_e2_list") {
            for (const auto& item : detail::split_list(value))
                cfg.sigma_e2_list.push_back(detail::parse_double(qkey, item));
        } else if (qkey == "experiment.workers") cfg.workers = detail::parse_u64(qkey, value);
        else if (qkey == "output.dir") out.output_dir = value;
        else if (qkey == "output.prefix") out.output_prefix = value;
        else out.warnings.push_back("unknown config key '" + qkey + "'");
    }

    if (!kind_seen) throw ConfigError("config: missing required key 'experiment.kind'");

    // Per-kind scan defaults; a config may override any of them.
    if (!scan_seen) {
        switch (cfg.kind) {
            case ExperimentKind::CrlbScanSigmaN: cfg.scan = {0.05, 50.0, 2000, true}; break;
            case ExperimentKind::CrlbScanSigmaE: cfg.scan = {1e-4, 10.0, 2000, true}; break;
            case ExperimentKind::GapBoundsSweep: cfg.scan = {1e-2, 1e2, 30, true}; break;
            default: break;
        }
    }

    // Invariant validation with key-name diagnostics.
    if (cfg.trials < 1) throw ConfigError("config: 'experiment.trials' must be >= 1");
    if (cfg.w0.empty() && !cfg.w0_random)
        throw ConfigError("config: missing required key 'model.w0'");
    if (cfg.w0_random && cfg.p == 0)
        throw ConfigError("config: missing required key 'model.p' (needed for random w0)");
    if (!cfg.w0.empty() && cfg.p == 0) cfg.p = cfg.w0.size();
    if (!cfg.w0.empty() && cfg.p != cfg.w0.size())
        throw ConfigError("config: 'model.p' does not match the length of 'model.w0'");

    switch (cfg.kind) {
        case ExperimentKind::MseVsN:
        case ExperimentKind::EstimatorComparison:
            if (cfg.n_list.empty())
                throw ConfigError("config: missing required key 'experiment.n_list'");
            if (!(cfg.sigma_n2 > 0.0))
                throw ConfigError("config: missing required key 'model.sigma_n2'");
            break;
        case ExperimentKind::CrlbScanSigmaN:
            if (!(cfg.sigma_e2 >= 0.0))
                throw ConfigError("config: 'model.sigma_e2' must be nonnegative");
            break;
        case ExperimentKind::CrlbScanSigmaE:
            if (!(cfg.sigma_n2 > 0.0))
                throw ConfigError("config: missing required key 'model.sigma_n2'");
            break;
        case ExperimentKind::GapBoundsSweep:
            break;
        case ExperimentKind::ProbabilityVsN:
            if (cfg.n_list.empty())
                throw ConfigError("config: missing required key 'experiment.n_list'");
            if (cfg.sigma_e2_list.empty())
                throw ConfigError("config: missing required key 'experiment.sigma_e2_list'");
            if (cfg.sigma_z2_fixed && !cfg.sigma_z2)
                throw ConfigError("config: missing required key 'model.sigma_z2'");
            if (!cfg.sigma_z2_fixed && !(cfg.sigma_n2 > 0.0))
                throw ConfigError("config: missing required key 'model.sigma_n2'");
            break;
    }
    if (cfg.scan.points > 0) {
        if (!(cfg.scan.hi > cfg.scan.lo))
            throw ConfigError("config: scan grid needs scan_lo < scan_hi");
        if (cfg.scan.log_spaced && !(cfg.scan.lo > 0.0))
            throw ConfigError("config: log-spaced scan grid needs scan_lo > 0");
        if (!cfg.scan.log_spaced && cfg.scan.lo < 0.0)
            throw ConfigError("config: scan grid needs scan_lo >= 0");
    }
    return out;
}

/// Read and parse a configuration file.
inline ParsedConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

namespace detail {

inline std::string format_double_cfg(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

/// Canonical text form; parse(serialize(parse(x))) == parse(x).
inline std::string serialize_config(const ParsedConfig& pc) {
    const ExperimentConfig& cfg = pc.config;
    std::ostringstream os;
    os << "[model]\n";
    os << "p = " << cfg.p << "\n";
    os << "sigma_e2 = " << detail::format_double_cfg(cfg.sigma_e2) << "\n";
    os << "sigma_n2 = " << detail::format_double_cfg(cfg.sigma_n2) << "\n";
    if (cfg.sigma_z2) os << "sigma_z2 = " << detail::format_double_cfg(*cfg.sigma_z2) << "\n";
    if (cfg.w0_random) {
        os << "w0 = random-normal\n";
    } else {
        os << "w0 = ";
        for (std::size_t i = 0; i < cfg.w0.size(); ++i)
            os << (i ? ", " : "") << detail::format_double_cfg(cfg.w0[i]);
        os << "\n";
    }
    os << "[experiment]\n";
    os << "kind = " << to_string(cfg.kind) << "\n";
    if (!cfg.n_list.empty()) {
        os << "n_list = ";
        for (std::size_t i = 0; i < cfg.n_list.size(); ++i)
            os << (i ? ", " : "") << cfg.n_list[i];
        os << "\n";
    }
    os << "trials = " << cfg.trials << "\n";
    os << "mc_trials = " << cfg.mc_trials << "\n";
    os << "master_seed = " << cfg.master_seed << "\n";
    os << "r_w_factor = " << detail::format_double_cfg(cfg.r_w_factor) << "\n";
    os << "redraw_h_per_trial = " << (cfg.redraw_h_per_trial ? "true" : "false") << "\n";
    os << "sigma_z2_fixed = " << (cfg.sigma_z2_fixed ? "true" : "false") << "\n";
    if (cfg.scan.points > 0) {
        os << "scan_lo = " << detail::format_double_cfg(cfg.scan.lo) << "\n";
        os << "scan_hi = " << detail::format_double_cfg(cfg.scan.hi) << "\n";
        os << "scan_points = " << cfg.scan.points << "\n";
        os << "scan_log = " << (cfg.scan.log_spaced ? "true" : "false") << "\n";
    }
    if (!cfg.sigma_e2_list.empty()) {
        os << "sigma_e2_list = ";
        for (std::size_t i = 0; i < cfg.sigma_e2_list.size(); ++i)
            os << (i ? ", " : "") << detail::format_double_cfg(cfg.sigma_e2_list[i]);
        os << "\n";
    }
    if (cfg.workers > 0) os << "workers = " << cfg.workers << "\n";
    os << "[output]\n";
    if (!pc.output_dir.empty()) os << "dir = " << pc.output_dir << "\n";
    if (!pc.output_prefix.empty()) os << "prefix = " << pc.output_prefix << "\n";
    return os.str();
}

}  // namespace signest
