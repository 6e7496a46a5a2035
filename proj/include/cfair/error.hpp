#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cfair {

/// Process exit classes used by the command line tool.
enum class ExitCode : int {
    ok = 0,
    failure = 1,
    usage = 2,
    validation = 3,
    transport = 4,
    completeness = 5,
    io = 6,
};

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    [[nodiscard]] virtual ExitCode exit_code() const noexcept { return ExitCode::failure; }
};

// Malformed input files, invalid lexicon/template rows, bad config.
class ValidationError : public Error {
public:
    using Error::Error;
    [[nodiscard]] ExitCode exit_code() const noexcept override { return ExitCode::validation; }
};

class ParseError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// JSON value of the wrong structure (missing key, wrong type).
class ShapeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class TransportError : public Error {
public:
    TransportError(const std::string &msg, std::string request_id = {})
        : Error(request_id.empty() ? msg : msg + " (request " + request_id + ")"),
          message_(msg),
          request_id_(std::move(request_id)) {}
    [[nodiscard]] const std::string &message() const noexcept { return message_; }
    [[nodiscard]] const std::string &request_id() const noexcept { return request_id_; }
    [[nodiscard]] ExitCode exit_code() const noexcept override { return ExitCode::transport; }

private:
    std::string message_;
    std::string request_id_;
};

class CompletenessError : public Error {
public:
    CompletenessError(const std::string &context, std::vector<std::string> missing, std::vector<std::string> extra = {})
        : Error(describe(context, missing, extra)), missing_(std::move(missing)), extra_(std::move(extra)) {}
    [[nodiscard]] const std::vector<std::string> &missing() const noexcept { return missing_; }
    [[nodiscard]] const std::vector<std::string> &extra() const noexcept { return extra_; }
    [[nodiscard]] ExitCode exit_code() const noexcept override { return ExitCode::completeness; }

private:
    static std::string join(const std::vector<std::string> &ids) {
        std::string out;
        for (const auto &id : ids) {
            if (!out.empty()) out += ", ";
            out += id;
        }
        return out;
    }
    static std::string describe(const std::string &context, const std::vector<std::string> &missing,
                                const std::vector<std::string> &extra) {
        std::string msg = context + ":";
        if (!missing.empty()) msg += " missing ids [" + join(missing) + "]";
        if (!extra.empty()) msg += " unexpected ids [" + join(extra) + "]";
        return msg;
    }

    std::vector<std::string> missing_;
    std::vector<std::string> extra_;
};

class IoError : public Error {
public:
    using Error::Error;
    [[nodiscard]] ExitCode exit_code() const noexcept override { return ExitCode::io; }
};

class FileNotFound : public IoError {
public:
    explicit FileNotFound(const std::string &path) : IoError("file not found: " + path) {}
};

}  // namespace cfair
