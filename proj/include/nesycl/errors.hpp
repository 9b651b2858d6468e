#pragma once

#include <stdexcept>
#include <string>

namespace nesycl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SchemaSpaceExhausted : public Error {
public:
    using Error::Error;
};

class GraphTooLarge : public Error {
public:
    using Error::Error;
};

class EmptyClass : public Error {
public:
    using Error::Error;
};

class DuplicateClass : public Error {
public:
    using Error::Error;
};

class EmptyKnowledgeBase : public Error {
public:
    using Error::Error;
};

class ShapeMismatch : public Error {
public:
    using Error::Error;
};

class NonFiniteLoss : public Error {
public:
    using Error::Error;
};

class IncompleteMatrix : public Error {
public:
    using Error::Error;
};

/// Invalid user-supplied configuration (maps to CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace nesycl
