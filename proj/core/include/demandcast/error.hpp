#pragma once

#include <stdexcept>
#include <string>

namespace demandcast {

/// Base of every error raised by the library. Grouped into two families so
/// the CLI can map them onto exit codes: input problems (bad data, bad
/// configuration, misuse of a model) and numerical failures.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error { public: using Error::Error; };
class DataError : public Error { public: using Error::Error; };
class ParseError : public DataError { public: using DataError::DataError; };
class GapError : public DataError { public: using DataError::DataError; };
class ShapeError : public Error { public: using Error::Error; };
class DegenerateError : public Error { public: using Error::Error; };
class CapacityError : public Error { public: using Error::Error; };
class EmptyModelError : public Error { public: using Error::Error; };
class IndexError : public Error { public: using Error::Error; };
class DisabledError : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };

/// Numerical failures: the optimizer or estimator could not produce a result.
class NumericalError : public Error { public: using Error::Error; };
class DivergenceError : public NumericalError { public: using NumericalError::NumericalError; };
class ConvergenceError : public NumericalError { public: using NumericalError::NumericalError; };

/// Process exit code for an error: 2 for numerical failures, 1 otherwise.
int exit_code_for(const Error& e) noexcept;

}  // namespace demandcast
