#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hfa {

enum class ErrorCode {
    // corpus
    NonUtf8Input,
    DuplicateDocId,
    MetadataParse,
    UnknownDocument,
    // taxonomy
    TaxonomyParse,
    CycleDetected,
    DuplicateCode,
    OrphanCode,
    NotFound,
    AmbiguousLabel,
    // annotator
    EmptyTrainingSet,
    UnresolvableConcept,
    UntrainedModel,
    CorruptModelFile,
    // evaluation
    ConceptOutsideUniverse,
    FewerThanTwoAnnotators,
    // fairness
    EmptySample,
    AllZeroDifferences,
    NoCommonConcepts,
    // synthtest
    EmptyCorpus,
    DimensionMismatch,
    // workflow
    UnknownModelVersion,
    UnknownTask,
    IncompleteDecisions,
    InvalidVerdict,
    NoNewVerdicts,
    NoVerdictsForBatch,
    CorruptStore,
    // generic
    Io,
    InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every library failure surfaces as hfa::Error; callers branch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Error carrying a position: byte offset for decoding errors, row number for
// CSV errors, file offset for corrupt model files.
class PositionedError : public Error {
public:
    PositionedError(ErrorCode code, std::size_t position, const std::string& message);

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

}  // namespace hfa
