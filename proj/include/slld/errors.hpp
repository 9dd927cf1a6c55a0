#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace slld {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input file: bad JSON, missing keys, wrong value types.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

/// File could not be opened, read, or written.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

/// Category names that could not be mapped onto the target schema.
class SchemaMismatchError : public Error {
public:
    SchemaMismatchError(const std::string& msg, std::vector<std::string> names)
        : Error(msg + ": " + join(names)), names_(std::move(names)) {}

    const std::vector<std::string>& names() const { return names_; }

private:
    static std::string join(const std::vector<std::string>& names) {
        std::string out;
        for (const auto& n : names) {
            if (!out.empty()) out += ", ";
            out += n;
        }
        return out;
    }

    std::vector<std::string> names_;
};

/// A box with zero area after clamping, or invalid at construction.
class DegenerateBoxError : public Error {
public:
    explicit DegenerateBoxError(const std::string& msg, long long ann_id = -1)
        : Error(msg), ann_id_(ann_id) {}

    long long ann_id() const { return ann_id_; }

private:
    long long ann_id_;
};

/// A label remap that does not cover the full source schema.
class PartialRemapError : public SchemaMismatchError {
public:
    PartialRemapError(const std::string& msg, std::vector<std::string> uncovered)
        : SchemaMismatchError(msg, std::move(uncovered)) {}
};

/// Operation parameters violating a precondition (thresholds, counts, fractions).
class InvalidArgumentError : public Error {
public:
    explicit InvalidArgumentError(const std::string& msg) : Error(msg) {}
};

/// References to image or category ids that do not resolve.
class UnknownIdError : public Error {
public:
    UnknownIdError(const std::string& msg, std::vector<std::string> offenders)
        : Error(msg + ": " + join(offenders)), offenders_(std::move(offenders)) {}

    const std::vector<std::string>& offenders() const { return offenders_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string out;
        for (const auto& s : v) {
            if (!out.empty()) out += ", ";
            out += s;
        }
        return out;
    }

    std::vector<std::string> offenders_;
};

} // namespace slld
