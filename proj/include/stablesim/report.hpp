#pragma once

#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "stablesim/config.hpp"
#include "stablesim/process.hpp"
#include "stablesim/verify.hpp"

namespace stablesim {

// JSON report: configuration echo, per-test records, and a summary block.
// Diagnostics are listed but never counted against the exit decision.
class Report {
public:
    explicit Report(const RunConfig& cfg) {
        root_["schema_version"] = kReportSchemaVersion;
        root_["artifact"] = kArtifactVersion;
        root_["config"] = cfg.to_json();
        root_["results"] = json::array();
    }

    void add(const TestResult& t) {
        json j{{"name", t.name},
               {"statistic", t.statistic},
               {"threshold", t.threshold},
               {"pass", t.pass},
               {"diagnostic", t.diagnostic},
               {"metadata", t.metadata}};
        root_["results"].push_back(std::move(j));
        if (t.diagnostic) return;
        ++total_;
        if (t.pass) ++passed_;
    }

    void add_all(const std::vector<TestResult>& ts) {
        for (const auto& t : ts) add(t);
    }

    void note(const std::string& key, json value) { root_[key] = std::move(value); }

    bool all_pass() const { return passed_ == total_; }

    std::string finalize() {
        root_["summary"] = json{{"gating_tests", total_},
                                {"passed", passed_},
                                {"failed", total_ - passed_},
                                {"all_pass", all_pass()}};
        return root_.dump(2) + "\n";
    }

    void write(const std::string& path) {
        const std::string body = finalize();
        if (path.empty()) return;
        std::ofstream out(path);
        if (!out) throw std::runtime_error("report: cannot write " + path);
        out << body;
    }

    const json& data() const { return root_; }

private:
    json root_;
    int total_ = 0;
    int passed_ = 0;
};

// Per-replica functional dump: one row per replica.
inline void write_functionals_csv(std::ostream& out, const Ensemble& ens) {
    out << "replica,W1,sup_abs,supS,supVS,supLS,supM,supL,finalS,finalM,finalL,"
           "L_nonzero";
    const std::size_t n_inc =
        ens.replicas.empty() ? 0 : ens.replicas.front().increments.size();
    for (std::size_t i = 0; i < n_inc; ++i) out << ",inc" << i;
    out << "\n";
    out.precision(17);
    for (std::size_t r = 0; r < ens.replicas.size(); ++r) {
        const auto& f = ens.replicas[r];
        out << r << ',' << f.W1 << ',' << f.sup_abs << ',' << f.supS << ',' << f.supVS
            << ',' << f.supLS << ',' << f.supM << ',' << f.supL << ',' << f.finalS << ','
            << f.finalM << ',' << f.finalL << ',' << (f.L_nonzero ? 1 : 0);
        for (double v : f.increments) out << ',' << v;
        out << "\n";
    }
}

// Path dump: (replica, j, S_j) rows.
inline void write_path_csv(std::ostream& out, std::size_t replica, const PathGrid& path) {
    out.precision(17);
    for (std::size_t j = 0; j < path.values.size(); ++j)
        out << replica << ',' << j << ',' << path.values[j] << "\n";
}

// Stream dump: (row k, position, grid coordinate or value).
inline void write_stream_csv(std::ostream& out, const CocycleSample& sample) {
    out << "k,pos,value\n";
    out.precision(17);
    for (const auto& row : sample.rows)
        for (const auto& e : row.f.entries)
            out << row.k << ',' << e.pos << ',' << e.value << "\n";
}

} // namespace stablesim
