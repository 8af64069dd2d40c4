#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace kdv {

struct Table {
    std::string name;  // file stem, e.g. "certificate" or "plotdata/tail"
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

struct Check {
    std::string name;
    bool passed = false;
    double value = 0.0;
    std::string relation;
    double bound = 0.0;
    std::string detail;
};

struct RunReport {
    std::string command;
    nlohmann::json results = nlohmann::json::object();
    std::vector<Check> checks;
    std::vector<Table> tables;

    bool passed() const;
    nlohmann::json to_json() const;
};

// Parses and validates the whole configuration before any work starts; malformed input
// throws Error(config_error). Numerical failures inside a command become failing checks.
RunReport run_config(const nlohmann::json& config);

// Header row, then one line per row with %.17g fields.
std::string to_csv(const Table& t);

}  // namespace kdv
