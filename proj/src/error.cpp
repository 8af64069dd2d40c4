#include "error.hpp"

namespace kdv {

const char* errc_name(Errc e)
{
    switch (e) {
    case Errc::invalid_parameter: return "invalid-parameter";
    case Errc::domain_too_small: return "domain-too-small";
    case Errc::grid_too_coarse: return "grid-too-coarse";
    case Errc::no_three_real_roots: return "no-three-real-roots";
    case Errc::solver_failure: return "solver-failure";
    case Errc::accuracy_failure: return "accuracy-failure";
    case Errc::unsupported_ratio: return "unsupported-ratio";
    case Errc::certificate_void: return "certificate-void";
    case Errc::near_singular: return "near-singular";
    case Errc::precondition_unsatisfied: return "precondition-unsatisfied";
    case Errc::blow_up_detected: return "blow-up-detected";
    case Errc::fit_failure: return "fit-failure";
    case Errc::quadrature_failure: return "quadrature-failure";
    case Errc::eigensolver_failure: return "eigensolver-failure";
    case Errc::inconclusive: return "inconclusive";
    case Errc::config_error: return "config-error";
    case Errc::io_error: return "io-error";
    case Errc::check_failed: return "check-failed";
    case Errc::weight_mismatch: return "weight-mismatch";
    }
    return "unknown";
}

}  // namespace kdv
