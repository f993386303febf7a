#include "dvrisk/error.hpp"

namespace dvrisk {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::MalformedRecord: return "MalformedRecord";
    case ErrorKind::DuplicateReportId: return "DuplicateReportId";
    case ErrorKind::MissingFemicideDate: return "MissingFemicideDate";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::DuplicateMarker: return "DuplicateMarker";
    case ErrorKind::CyclicSpecialization: return "CyclicSpecialization";
    case ErrorKind::EmptyStems: return "EmptyStems";
    case ErrorKind::UnknownAnnotationMarker: return "UnknownAnnotationMarker";
    case ErrorKind::IdOutOfRange: return "IdOutOfRange";
    case ErrorKind::NonFiniteActivation: return "NonFiniteActivation";
    case ErrorKind::NonFiniteUpdate: return "NonFiniteUpdate";
    case ErrorKind::SingleClassCorpus: return "SingleClassCorpus";
    case ErrorKind::DivergedTraining: return "DivergedTraining";
    case ErrorKind::EmptyNarrative: return "EmptyNarrative";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::EmptyPrefix: return "EmptyPrefix";
    case ErrorKind::UnknownMarker: return "UnknownMarker";
    case ErrorKind::EmptyTestSet: return "EmptyTestSet";
    case ErrorKind::InvalidCheckpoint: return "InvalidCheckpoint";
  }
  return "Unknown";
}

}  // namespace dvrisk
