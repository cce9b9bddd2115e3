#ifndef XADAPT_ERROR_HPP
#define XADAPT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace xadapt {

// Malformed or inconsistent input files (bad floats, ragged rows,
// duplicate ids, unknown labels, missing trial ids).
class DataFormatError : public std::runtime_error {
 public:
  explicit DataFormatError(const std::string &msg)
      : std::runtime_error(msg) {}
};

// Training produced a non-finite loss, gradient or parameter.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string &msg)
      : std::runtime_error(msg) {}
};

// Structurally valid input that cannot be processed: a single speaker,
// an empty set, all-identical vectors, indefinite matrices and the like.
class DegenerateInputError : public std::runtime_error {
 public:
  explicit DegenerateInputError(const std::string &msg)
      : std::runtime_error(msg) {}
};

}  // namespace xadapt

#endif  // XADAPT_ERROR_HPP
