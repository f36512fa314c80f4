#pragma once

#include <stdexcept>
#include <string>

namespace klab {

/// Failure classes; the CLI maps each to a distinct exit code.
enum class ErrorClass { kUsage, kValidation, kScale, kInvariant };

class KlabError : public std::runtime_error {
 public:
  KlabError(ErrorClass cls, const std::string& what) : std::runtime_error(what), class_(cls) {}
  ErrorClass error_class() const { return class_; }

 private:
  ErrorClass class_;
};

#define KLAB_DEFINE_ERROR(Name, Class)                                            \
  class Name : public KlabError {                                                 \
   public:                                                                        \
    explicit Name(const std::string& what) : KlabError(ErrorClass::Class, #Name ": " + what) {} \
  }

KLAB_DEFINE_ERROR(MalformedSpec, kValidation);
KLAB_DEFINE_ERROR(InvalidCapacity, kValidation);
KLAB_DEFINE_ERROR(UnknownKey, kValidation);
KLAB_DEFINE_ERROR(ConfigError, kValidation);
KLAB_DEFINE_ERROR(ScaleExceeded, kScale);
KLAB_DEFINE_ERROR(IndexOutOfScale, kScale);
KLAB_DEFINE_ERROR(NoSuchStage, kScale);
KLAB_DEFINE_ERROR(Unsettled, kScale);
KLAB_DEFINE_ERROR(BudgetViolation, kInvariant);
KLAB_DEFINE_ERROR(OracleInconsistent, kInvariant);
KLAB_DEFINE_ERROR(InvariantFailure, kInvariant);

#undef KLAB_DEFINE_ERROR

}  // namespace klab
