#include "hfa/error.hpp"

namespace hfa {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::NonUtf8Input: return "NonUtf8Input";
        case ErrorCode::DuplicateDocId: return "DuplicateDocId";
        case ErrorCode::MetadataParse: return "MetadataParse";
        case ErrorCode::UnknownDocument: return "UnknownDocument";
        case ErrorCode::TaxonomyParse: return "TaxonomyParse";
        case ErrorCode::CycleDetected: return "CycleDetected";
        case ErrorCode::DuplicateCode: return "DuplicateCode";
        case ErrorCode::OrphanCode: return "OrphanCode";
        case ErrorCode::NotFound: return "NotFound";
        case ErrorCode::AmbiguousLabel: return "AmbiguousLabel";
        case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
        case ErrorCode::UnresolvableConcept: return "UnresolvableConcept";
        case ErrorCode::UntrainedModel: return "UntrainedModel";
        case ErrorCode::CorruptModelFile: return "CorruptModelFile";
        case ErrorCode::ConceptOutsideUniverse: return "ConceptOutsideUniverse";
        case ErrorCode::FewerThanTwoAnnotators: return "FewerThanTwoAnnotators";
        case ErrorCode::EmptySample: return "EmptySample";
        case ErrorCode::AllZeroDifferences: return "AllZeroDifferences";
        case ErrorCode::NoCommonConcepts: return "NoCommonConcepts";
        case ErrorCode::EmptyCorpus: return "EmptyCorpus";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::UnknownModelVersion: return "UnknownModelVersion";
        case ErrorCode::UnknownTask: return "UnknownTask";
        case ErrorCode::IncompleteDecisions: return "IncompleteDecisions";
        case ErrorCode::InvalidVerdict: return "InvalidVerdict";
        case ErrorCode::NoNewVerdicts: return "NoNewVerdicts";
        case ErrorCode::NoVerdictsForBatch: return "NoVerdictsForBatch";
        case ErrorCode::CorruptStore: return "CorruptStore";
        case ErrorCode::Io: return "Io";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

PositionedError::PositionedError(ErrorCode code, std::size_t position, const std::string& message)
    : Error(code, message + " (at " + std::to_string(position) + ")"), position_(position) {}

}  // namespace hfa
