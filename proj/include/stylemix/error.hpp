#pragma once

#include <stdexcept>
#include <string>

namespace stylemix {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid numeric input: zero norms, empty sets, degenerate pairs.
class DomainError : public Error {
public:
    using Error::Error;
};

class SamplingError : public Error {
public:
    using Error::Error;
};

// Text that does not parse under the expected grammar or style layer.
class FormatError : public Error {
public:
    using Error::Error;
};

class VocabError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Adapters whose structure does not line up with each other or with the model.
class LibraryError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

// Artifact bound to a different base model or format version.
class CompatibilityError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace stylemix
