#ifndef RHOSPHERE_ERROR_HPP
#define RHOSPHERE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace rhosphere {

/// Base class of everything the library throws on bad input or failed runs.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NonFiniteError : public Error {
public:
    using Error::Error;
};

class GridMismatchError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

}  // namespace rhosphere

#endif  // RHOSPHERE_ERROR_HPP
