#include "kdvlab/kdvlab.h"

#include <exception>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "runner.hpp"

struct kdvlab_report {
    kdv::RunReport report;
    std::string json_text;
    nlohmann::json document;
    std::vector<std::string> csv;
};

namespace {

thread_local std::string last_error;

int fail_with(int status, const std::string& message)
{
    last_error = message;
    return status;
}

int ok()
{
    last_error.clear();
    return KDVLAB_OK;
}

}  // namespace

extern "C" {

const char* kdvlab_version(void) { return "1.0.0"; }

const char* kdvlab_status_name(int status)
{
    switch (status) {
    case KDVLAB_OK: return "ok";
    case KDVLAB_NULL_ARGUMENT: return "null-argument";
    case KDVLAB_OUT_OF_RANGE: return "out-of-range";
    case KDVLAB_INTERNAL_ERROR: return "internal-error";
    default:
        if (status >= KDVLAB_INVALID_PARAMETER && status <= KDVLAB_WEIGHT_MISMATCH)
            return kdv::errc_name(static_cast<kdv::Errc>(status));
        return "unknown";
    }
}

const char* kdvlab_last_error(void) { return last_error.c_str(); }

int kdvlab_run(const char* config_json, kdvlab_report** out)
{
    if (!config_json || !out) return fail_with(KDVLAB_NULL_ARGUMENT, "null argument");
    *out = nullptr;
    try {
        nlohmann::json cfg;
        try {
            cfg = nlohmann::json::parse(config_json);
        } catch (const nlohmann::json::exception& e) {
            return fail_with(KDVLAB_CONFIG_ERROR, std::string("configuration is not valid JSON: ") + e.what());
        }
        auto* r = new kdvlab_report;
        try {
            r->report = kdv::run_config(cfg);
            r->document = r->report.to_json();
            r->json_text = r->document.dump(2) + "\n";
            for (const auto& t : r->report.tables) r->csv.push_back(kdv::to_csv(t));
        } catch (...) {
            delete r;
            throw;
        }
        *out = r;
        return ok();
    } catch (const kdv::Error& e) {
        return fail_with(static_cast<int>(e.code()), e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail_with(KDVLAB_CONFIG_ERROR, e.what());
    } catch (const std::exception& e) {
        return fail_with(KDVLAB_INTERNAL_ERROR, e.what());
    } catch (...) {
        return fail_with(KDVLAB_INTERNAL_ERROR, "unknown exception");
    }
}

void kdvlab_report_free(kdvlab_report* report) { delete report; }

int kdvlab_report_passed(const kdvlab_report* report) { return report && report->report.passed() ? 1 : 0; }

int kdvlab_report_json(const kdvlab_report* report, const char** json)
{
    if (!report || !json) return fail_with(KDVLAB_NULL_ARGUMENT, "null argument");
    *json = report->json_text.c_str();
    return ok();
}

int kdvlab_report_number(const kdvlab_report* report, const char* pointer, double* value)
{
    if (!report || !pointer || !value) return fail_with(KDVLAB_NULL_ARGUMENT, "null argument");
    try {
        const auto& v = report->document.at(nlohmann::json::json_pointer(pointer));
        if (v.is_boolean()) {
            *value = v.get<bool>() ? 1.0 : 0.0;
        } else if (v.is_number()) {
            *value = v.get<double>();
        } else {
            return fail_with(KDVLAB_OUT_OF_RANGE, std::string("not a number at ") + pointer);
        }
        return ok();
    } catch (const std::exception& e) {
        return fail_with(KDVLAB_OUT_OF_RANGE, std::string("no value at ") + pointer + ": " + e.what());
    }
}

size_t kdvlab_report_check_count(const kdvlab_report* report) { return report ? report->report.checks.size() : 0; }

int kdvlab_report_check(const kdvlab_report* report, size_t index, const char** name, int* passed, double* value,
                        const char** detail)
{
    if (!report) return fail_with(KDVLAB_NULL_ARGUMENT, "null argument");
    if (index >= report->report.checks.size()) return fail_with(KDVLAB_OUT_OF_RANGE, "check index out of range");
    const auto& c = report->report.checks[index];
    if (name) *name = c.name.c_str();
    if (passed) *passed = c.passed ? 1 : 0;
    if (value) *value = c.value;
    if (detail) *detail = c.detail.c_str();
    return ok();
}

size_t kdvlab_report_table_count(const kdvlab_report* report) { return report ? report->report.tables.size() : 0; }

int kdvlab_report_table(const kdvlab_report* report, size_t index, const char** name, const char** csv)
{
    if (!report) return fail_with(KDVLAB_NULL_ARGUMENT, "null argument");
    if (index >= report->csv.size()) return fail_with(KDVLAB_OUT_OF_RANGE, "table index out of range");
    if (name) *name = report->report.tables[index].name.c_str();
    if (csv) *csv = report->csv[index].c_str();
    return ok();
}

}  // extern "C"
