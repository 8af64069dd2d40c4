#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "kdvlab/kdvlab.h"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_failed_check = 1;
constexpr int exit_usage = 2;

bool write_file(const fs::path& path, const std::string& text)
{
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    out << text;
    return static_cast<bool>(out);
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Numerical experiments for multi-soliton dynamics of the quartic gKdV equation"};
    app.require_subcommand(1, 1);
    std::string config_path, out_dir;
    long long seed = -1;
    int threads = 0;
    bool quiet = false;
    for (const char* name : {"certify", "profile", "rigidity", "approx", "simulate", "verify"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
        sub->add_option("--seed", seed, "random seed (overrides seed)")->check(CLI::NonNegativeNumber);
        sub->add_option("--threads", threads, "worker threads (overrides threads)")->check(CLI::PositiveNumber);
        sub->add_flag("--quiet", quiet, "print failing checks only");
    }
    app.add_flag_callback("--version", [] {
        std::cout << kdvlab_version() << "\n";
        throw CLI::Success();
    });
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    json cfg = json::object();
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        std::stringstream buf;
        buf << in.rdbuf();
        try {
            cfg = json::parse(buf.str());
        } catch (const json::exception& e) {
            std::cerr << "error: " << config_path << " is not valid JSON: " << e.what() << "\n";
            return exit_usage;
        }
        if (!cfg.is_object()) {
            std::cerr << "error: configuration must be a JSON object\n";
            return exit_usage;
        }
    }
    if (cfg.contains("command") && cfg["command"] != command) {
        std::cerr << "error: configuration is for '" << cfg["command"].dump() << "', not '" << command << "'\n";
        return exit_usage;
    }
    cfg["command"] = command;
    if (seed >= 0) cfg["seed"] = seed;
    if (threads > 0) cfg["threads"] = threads;
    if (out_dir.empty()) {
        auto it = cfg.find("output_dir");
        out_dir = it != cfg.end() && it->is_string() ? it->get<std::string>() : "out";
    }
    cfg["output_dir"] = out_dir;

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) {
        std::cerr << "error: cannot create output directory " << out_dir << "\n";
        return exit_usage;
    }

    kdvlab_report* report = nullptr;
    int status = kdvlab_run(cfg.dump().c_str(), &report);
    if (status != KDVLAB_OK) {
        std::cerr << "error (" << kdvlab_status_name(status) << "): " << kdvlab_last_error() << "\n";
        return status == KDVLAB_CONFIG_ERROR ? exit_usage : exit_failed_check;
    }

    bool written = true;
    const char* doc = nullptr;
    kdvlab_report_json(report, &doc);
    written = write_file(fs::path(out_dir) / "report.json", doc) && written;
    for (std::size_t i = 0; i < kdvlab_report_table_count(report); ++i) {
        const char* name = nullptr;
        const char* csv = nullptr;
        kdvlab_report_table(report, i, &name, &csv);
        written = write_file(fs::path(out_dir) / (std::string(name) + ".csv"), csv) && written;
    }

    for (std::size_t i = 0; i < kdvlab_report_check_count(report); ++i) {
        const char* name = nullptr;
        const char* detail = nullptr;
        int passed = 0;
        double value = 0.0;
        kdvlab_report_check(report, i, &name, &passed, &value, &detail);
        if (passed && quiet) continue;
        std::printf("%s %s (%.6g)%s%s\n", passed ? "PASS" : "FAIL", name, value, *detail ? ": " : "", detail);
    }
    bool ok = kdvlab_report_passed(report) == 1;
    std::printf("%s: %s\n", command.c_str(), ok ? "PASS" : "FAIL");
    kdvlab_report_free(report);
    if (!written) {
        std::cerr << "error: could not write every output file under " << out_dir << "\n";
        return exit_usage;
    }
    return ok ? exit_ok : exit_failed_check;
}
