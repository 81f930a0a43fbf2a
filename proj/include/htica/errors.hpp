#ifndef HTICA_ERRORS_HPP_
#define HTICA_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace htica {

enum class ErrorCode {
    invalid_parameter,
    insufficient_samples,
    degenerate_matrix,
    degenerate_sample_span,
    singular_scatter,
    singular_input,
    solver_failure,
    undampable_sample,
    empty_output,
    invalid_input,
    io_error,
};

// All recoverable failures surface as Error; the CLI maps codes to exit status.
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::invalid_parameter: return "invalid-parameter";
        case ErrorCode::insufficient_samples: return "insufficient-samples";
        case ErrorCode::degenerate_matrix: return "degenerate-matrix";
        case ErrorCode::degenerate_sample_span: return "degenerate-sample-span";
        case ErrorCode::singular_scatter: return "singular-scatter";
        case ErrorCode::singular_input: return "singular-input";
        case ErrorCode::solver_failure: return "solver-failure";
        case ErrorCode::undampable_sample: return "un-dampable-sample";
        case ErrorCode::empty_output: return "empty-output";
        case ErrorCode::invalid_input: return "invalid-input";
        case ErrorCode::io_error: return "io-error";
    }
    return "unknown";
}

}  // namespace htica

#endif  // HTICA_ERRORS_HPP_
