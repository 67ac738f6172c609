#pragma once

#include <stdexcept>
#include <string>

namespace revgen {

/// Base of every error the library raises. `kind()` is the stable error name
/// used in failure reports and CLI output.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define REVGEN_DEFINE_ERROR(Name)                                           \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& message) : Error(#Name, message) {}   \
  }

// corpus
REVGEN_DEFINE_ERROR(MalformedRecord);
REVGEN_DEFINE_ERROR(EncodingError);
REVGEN_DEFINE_ERROR(EmptyReview);
REVGEN_DEFINE_ERROR(InvalidRatios);

// backend
REVGEN_DEFINE_ERROR(ContextOverflow);
REVGEN_DEFINE_ERROR(TransportError);
REVGEN_DEFINE_ERROR(BackendRefusal);
REVGEN_DEFINE_ERROR(UnsupportedOperation);
REVGEN_DEFINE_ERROR(InvalidInput);

// pge / genreview
REVGEN_DEFINE_ERROR(NoQuestionsFound);
REVGEN_DEFINE_ERROR(ScoreNotFound);
REVGEN_DEFINE_ERROR(EmptyPaper);

// metrics
REVGEN_DEFINE_ERROR(TooFewPapers);
REVGEN_DEFINE_ERROR(NoEligiblePapers);
REVGEN_DEFINE_ERROR(MissingOutputs);

// configuration and templates
REVGEN_DEFINE_ERROR(ConfigError);
REVGEN_DEFINE_ERROR(TemplateError);

#undef REVGEN_DEFINE_ERROR

}  // namespace revgen
