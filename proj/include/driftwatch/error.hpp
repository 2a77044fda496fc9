#pragma once

#include <stdexcept>
#include <string>

namespace driftwatch {

// Base class for all toolkit errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Corpus-level problems: malformed record lines, duplicate ids, bad streams.
struct CorpusError : Error {
    using Error::Error;
};

// Model files: unreadable, wrong version, inconsistent contents.
struct ModelError : Error {
    using Error::Error;
};

// Data-shape problems: single-class training sets, empty matrices,
// untrainable topics, divergent training runs.
struct DataError : Error {
    using Error::Error;
};

// Rule DSL: syntax errors, undefined facts, empty programs.
struct RuleError : Error {
    using Error::Error;
};

// Topic / simulation config files: unknown keys, unparsable values.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace driftwatch
