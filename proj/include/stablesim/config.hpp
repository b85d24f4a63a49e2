#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stablesim/verify.hpp"

namespace stablesim {

inline constexpr const char* kArtifactVersion = "stablesim 1.0.0";
inline constexpr int kReportSchemaVersion = 1;

// A fully specified run: regime, law parameters, window sizes, replica
// budget, seed, and output locations.  Serialized verbatim into every
// report so results are reproducible from the file alone.
struct RunConfig {
    std::string regime = "sym";      // sub1 | sym | super1
    double alpha = 1.4;
    double beta = 1.0;
    std::vector<std::int64_t> n_ladder = {1 << 12};
    std::size_t replicas = 1000;
    std::uint64_t seed = 1;
    double epsilon = 1e-3;
    int threads = 0;
    double c_null = 4.0;
    double theta_max = 2.0;
    int theta_points = 41;
    double final_cap = 0.05;
    std::string suite = "all";       // all | fclt | bands | increments | appendix | exact | equaldist
    std::string out;                 // JSON report path ("" = stdout)
    std::string paths_out;           // optional path CSV
    std::string functionals_out;     // optional per-replica functional CSV
    std::string streams_out;         // optional stream dump CSV

    Regime make_regime() const {
        if (regime == "sub1") return Regime(RegimeKind::SkewedSub1, alpha, beta);
        if (regime == "sym") return Regime(RegimeKind::Symmetric, alpha, beta);
        if (regime == "super1") return Regime(RegimeKind::SkewedSuper1, alpha, beta);
        throw std::invalid_argument("config: regime must be sub1, sym or super1");
    }

    VerifyOptions verify_options() const {
        VerifyOptions v;
        v.c_null = c_null;
        v.theta_max = theta_max;
        v.theta_points = theta_points;
        v.epsilon = epsilon;
        return v;
    }

    void validate() const {
        make_regime(); // checks regime/alpha/beta compatibility
        if (n_ladder.empty()) throw std::invalid_argument("config: empty n ladder");
        for (auto n : n_ladder)
            if (n < 2) throw std::invalid_argument("config: n must be >= 2");
        if (replicas < 1) throw std::invalid_argument("config: replicas must be >= 1");
        if (!(epsilon > 0.0 && epsilon < 1.0))
            throw std::invalid_argument("config: epsilon must lie in (0,1)");
        if (threads < 0) throw std::invalid_argument("config: threads must be >= 0");
        if (theta_points < 3) throw std::invalid_argument("config: need >= 3 theta points");
    }

    json to_json() const {
        return json{{"regime", regime},     {"alpha", alpha},
                    {"beta", beta},         {"n_ladder", n_ladder},
                    {"replicas", replicas}, {"seed", seed},
                    {"epsilon", epsilon},   {"threads", threads},
                    {"c_null", c_null},     {"theta_max", theta_max},
                    {"theta_points", theta_points}, {"final_cap", final_cap},
                    {"suite", suite}};
    }
};

// key = value configuration files; '#' starts a comment.  Flags given on
// the command line override file values.
inline void apply_config_line(RunConfig& cfg, const std::string& key,
                              const std::string& value) {
    auto to_i64 = [&](const std::string& s) { return std::stoll(s); };
    if (key == "regime") cfg.regime = value;
    else if (key == "alpha") cfg.alpha = std::stod(value);
    else if (key == "beta") cfg.beta = std::stod(value);
    else if (key == "n") cfg.n_ladder = {to_i64(value)};
    else if (key == "n_ladder" || key == "n-ladder") {
        cfg.n_ladder.clear();
        std::stringstream ss(value);
        std::string tok;
        while (std::getline(ss, tok, ',')) cfg.n_ladder.push_back(to_i64(tok));
    } else if (key == "replicas") cfg.replicas = static_cast<std::size_t>(to_i64(value));
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
    else if (key == "epsilon") cfg.epsilon = std::stod(value);
    else if (key == "threads") cfg.threads = static_cast<int>(to_i64(value));
    else if (key == "c_null") cfg.c_null = std::stod(value);
    else if (key == "theta_max") cfg.theta_max = std::stod(value);
    else if (key == "theta_points") cfg.theta_points = static_cast<int>(to_i64(value));
    else if (key == "final_cap") cfg.final_cap = std::stod(value);
    else if (key == "suite") cfg.suite = value;
    else if (key == "out") cfg.out = value;
    else if (key == "paths_out") cfg.paths_out = value;
    else if (key == "functionals_out") cfg.functionals_out = value;
    else if (key == "streams_out") cfg.streams_out = value;
    else throw std::invalid_argument("config: unknown key '" + key + "'");
}

inline void load_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!key.empty()) apply_config_line(cfg, key, value);
    }
}

} // namespace stablesim
