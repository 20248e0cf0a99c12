#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace specdec {

/// Machine-readable category carried by every library error. The CLI maps
/// these onto exit codes and a single-line `error: kind=<name> ...` report.
enum class ErrorKind {
    parameter,
    insufficient_data,
    shape,
    ill_conditioned,
    lookup,
    undefined_gain,
    io,
    checksum,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ParameterError : public Error {
public:
    explicit ParameterError(const std::string& what) : Error(ErrorKind::parameter, what) {}
};

class InsufficientDataError : public Error {
public:
    explicit InsufficientDataError(const std::string& what)
        : Error(ErrorKind::insufficient_data, what) {}
};

class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& what) : Error(ErrorKind::shape, what) {}
};

class IllConditionedError : public Error {
public:
    IllConditionedError(const std::string& what, long rank, long dimension)
        : Error(ErrorKind::ill_conditioned, what), rank_(rank), dimension_(dimension) {}

    long rank() const noexcept { return rank_; }
    long dimension() const noexcept { return dimension_; }

private:
    long rank_;
    long dimension_;
};

class LookupError : public Error {
public:
    explicit LookupError(const std::string& what) : Error(ErrorKind::lookup, what) {}
};

class UndefinedGainError : public Error {
public:
    explicit UndefinedGainError(const std::string& what)
        : Error(ErrorKind::undefined_gain, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

class ChecksumError : public Error {
public:
    explicit ChecksumError(const std::string& what) : Error(ErrorKind::checksum, what) {}
};

}  // namespace specdec
