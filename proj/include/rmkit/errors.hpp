#pragma once

#include <stdexcept>
#include <string>

namespace rmkit {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

class InvalidRange : public Error {
public:
    using Error::Error;
};

class GenerationExhausted : public Error {
public:
    explicit GenerationExhausted(std::string kind)
        : Error("generation exhausted placing '" + kind + "'"), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class FitError : public Error {
public:
    using Error::Error;
};

class ConditioningError : public Error {
public:
    ConditioningError(const std::string& what, double rcond)
        : Error(what + " (reciprocal condition estimate " + std::to_string(rcond) + ")"), rcond_(rcond) {}
    double rcond() const { return rcond_; }

private:
    double rcond_;
};

class WellPosednessError : public Error {
public:
    using Error::Error;
};

class ConsistencyError : public Error {
public:
    using Error::Error;
};

class PairingError : public Error {
public:
    using Error::Error;
};

class ProtocolError : public Error {
public:
    using Error::Error;
};

class SplitError : public Error {
public:
    using Error::Error;
};

class ManifestError : public Error {
public:
    using Error::Error;
};

}  // namespace rmkit
