#pragma once

#include <stdexcept>
#include <string>

namespace kdv {

enum class Errc {
    invalid_parameter = 1,
    domain_too_small,
    grid_too_coarse,
    no_three_real_roots,
    solver_failure,
    accuracy_failure,
    unsupported_ratio,
    certificate_void,
    near_singular,
    precondition_unsatisfied,
    blow_up_detected,
    fit_failure,
    quadrature_failure,
    eigensolver_failure,
    inconclusive,
    config_error,
    io_error,
    check_failed,
    weight_mismatch,
};

const char* errc_name(Errc e);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, Errc code, const std::string& what)
{
    if (!ok) fail(code, what);
}

}  // namespace kdv
