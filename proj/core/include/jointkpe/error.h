#ifndef JOINTKPE_ERROR_H_
#define JOINTKPE_ERROR_H_

#include <stdexcept>
#include <string>

namespace jointkpe {

// Broad failure categories. The CLI maps them onto process exit codes.
enum class ErrorKind {
  kArgument,    // caller violated a precondition
  kConfig,      // invalid run configuration
  kParse,       // malformed input file
  kValidation,  // well-formed input that breaks an invariant
  kLoad,        // missing or inconsistent on-disk artifact
  kNumeric,     // non-finite values, divergence
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Throw(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace jointkpe

#endif  // JOINTKPE_ERROR_H_
