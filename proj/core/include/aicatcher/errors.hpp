#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aicatcher {

// Base of every error raised by the library. Subclasses name the failure
// kind; the message carries the specifics.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define AICATCHER_DEFINE_ERROR(Name)              \
    class Name : public Error {                   \
    public:                                       \
        using Error::Error;                       \
    }

// corpus
class MalformedRecord : public Error {
public:
    MalformedRecord(std::size_t line, const std::string& what)
        : Error("malformed record at line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class UnknownLabel : public Error {
public:
    explicit UnknownLabel(std::string value)
        : Error("unknown label \"" + value + "\""), value_(std::move(value)) {}
    const std::string& value() const noexcept { return value_; }

private:
    std::string value_;
};

AICATCHER_DEFINE_ERROR(IOFailure);
AICATCHER_DEFINE_ERROR(EmptyCorpus);
AICATCHER_DEFINE_ERROR(TooFewDocuments);

// textprep
AICATCHER_DEFINE_ERROR(EmptyTrainingSet);

// lingfeat
AICATCHER_DEFINE_ERROR(GrammarServiceUnavailable);
AICATCHER_DEFINE_ERROR(TooFewSamples);

// nnkernel
AICATCHER_DEFINE_ERROR(IndexOutOfVocab);
AICATCHER_DEFINE_ERROR(SequenceTooShort);
AICATCHER_DEFINE_ERROR(EmptyTimeAxis);
AICATCHER_DEFINE_ERROR(ShapeMismatch);

// model
AICATCHER_DEFINE_ERROR(VocabTooLarge);
AICATCHER_DEFINE_ERROR(SingleClassTrainingSet);
AICATCHER_DEFINE_ERROR(VersionMismatch);
AICATCHER_DEFINE_ERROR(CorruptModelFile);

// evalkit
AICATCHER_DEFINE_ERROR(EmptyEvaluation);

#undef AICATCHER_DEFINE_ERROR

}  // namespace aicatcher
