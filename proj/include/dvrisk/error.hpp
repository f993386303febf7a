#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dvrisk {

enum class ErrorKind {
  InvalidArgument,
  IoFailure,
  MalformedRecord,
  DuplicateReportId,
  MissingFemicideDate,
  EmptyCorpus,
  InvalidSpec,
  DuplicateMarker,
  CyclicSpecialization,
  EmptyStems,
  UnknownAnnotationMarker,
  IdOutOfRange,
  NonFiniteActivation,
  NonFiniteUpdate,
  SingleClassCorpus,
  DivergedTraining,
  EmptyNarrative,
  EmptyDataset,
  EmptyPrefix,
  UnknownMarker,
  EmptyTestSet,
  InvalidCheckpoint,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (the CLI,
// the HTTP service) can map it to an exit code or status without parsing
// the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace dvrisk
