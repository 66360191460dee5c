#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mathfind {

/// Base class of every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An error tied to a byte offset in some input (XML, LaTeX, query string).
class PositionedError : public Error {
public:
    PositionedError(const std::string& what, std::size_t position)
        : Error(what), position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

class MalformedXml : public PositionedError {
public:
    MalformedXml(const std::string& reason, std::size_t position)
        : PositionedError("malformed XML at byte " + std::to_string(position) + ": " + reason,
                          position),
          reason_(reason) {}

    const std::string& reason() const noexcept { return reason_; }

private:
    std::string reason_;
};

class UnsupportedCommand : public PositionedError {
public:
    UnsupportedCommand(const std::string& command, std::size_t position)
        : PositionedError("unsupported LaTeX command " + command + " at offset " +
                              std::to_string(position),
                          position),
          command_(command) {}

    const std::string& command() const noexcept { return command_; }

private:
    std::string command_;
};

class UnbalancedGroup : public PositionedError {
public:
    explicit UnbalancedGroup(std::size_t position)
        : PositionedError("unbalanced group at offset " + std::to_string(position), position) {}
};

class EmptyQuery : public PositionedError {
public:
    EmptyQuery() : PositionedError("empty query", 0) {}
};

class IndexExists : public Error {
public:
    explicit IndexExists(const std::string& dir) : Error("index already exists in " + dir) {}
};

class IndexCorrupt : public Error {
public:
    explicit IndexCorrupt(const std::string& what) : Error("index corrupt: " + what) {}
};

class IoFailure : public Error {
public:
    explicit IoFailure(const std::string& what) : Error("I/O failure: " + what) {}
};

class DocNotFound : public Error {
public:
    explicit DocNotFound(std::size_t id) : Error("document not found: " + std::to_string(id)) {}
};

class EmptyDataset : public Error {
public:
    explicit EmptyDataset(const std::string& dir) : Error("no indexable documents in " + dir) {}
};

class NonEmptyDir : public Error {
public:
    explicit NonEmptyDir(const std::string& dir) : Error("directory not empty: " + dir) {}
};

}  // namespace mathfind
