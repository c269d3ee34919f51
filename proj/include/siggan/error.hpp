#ifndef SIGGAN_ERROR_HPP
#define SIGGAN_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace siggan {

// Every failure raised by the library derives from Error. The category tells
// the CLI which exit code to use.
enum class ErrorKind {
  Domain,
  Shape,
  Size,
  Numeric,
  Config,
  Data,
  Parse,
  Version,
  Convergence,
  Graph,
  Ordering,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define SIGGAN_DEFINE_ERROR(Name, Kind)                                            \
  class Name : public Error {                                                      \
   public:                                                                         \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {}       \
  };

SIGGAN_DEFINE_ERROR(DomainError, Domain)
SIGGAN_DEFINE_ERROR(ShapeError, Shape)
SIGGAN_DEFINE_ERROR(SizeError, Size)
SIGGAN_DEFINE_ERROR(NumericError, Numeric)
SIGGAN_DEFINE_ERROR(ConfigError, Config)
SIGGAN_DEFINE_ERROR(DataError, Data)
SIGGAN_DEFINE_ERROR(VersionError, Version)
SIGGAN_DEFINE_ERROR(GraphError, Graph)
SIGGAN_DEFINE_ERROR(OrderingError, Ordering)

#undef SIGGAN_DEFINE_ERROR

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(ErrorKind::Parse, what + " (byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Carries the best point found so far so callers can still inspect it.
template <typename Best>
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, Best best)
      : Error(ErrorKind::Convergence, what), best_(std::move(best)) {}
  const Best& best() const noexcept { return best_; }

 private:
  Best best_;
};

}  // namespace siggan

#endif  // SIGGAN_ERROR_HPP
