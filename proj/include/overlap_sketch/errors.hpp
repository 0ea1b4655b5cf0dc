#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace overlap_sketch {

// Root of every error thrown by the library. The CLI maps domain_error and its
// children to exit code 1 and io/format errors to exit code 2.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An argument outside the mathematical domain of an operation.
class domain_error : public error {
 public:
  using error::error;
};

class empty_support_error : public domain_error {
 public:
  using domain_error::domain_error;
};

class resource_error : public domain_error {
 public:
  using domain_error::domain_error;
};

class infeasible_plan_error : public domain_error {
 public:
  using domain_error::domain_error;
};

class family_mismatch_error : public domain_error {
 public:
  using domain_error::domain_error;
};

class empty_sketch_error : public domain_error {
 public:
  using domain_error::domain_error;
};

// A batch pair (or sample pair) whose implied intersection leaves the range
// where the Jaccard correction has a positive denominator.
class invalid_pair_error : public domain_error {
 public:
  using domain_error::domain_error;
};

class io_error : public error {
 public:
  using error::error;
};

// Malformed serialized input. `position` is the byte offset (or line number
// for text inputs) where decoding stopped.
class format_error : public error {
 public:
  format_error(const std::string& what, std::size_t position)
      : error(what + " (at offset " + std::to_string(position) + ")"),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

}  // namespace overlap_sketch
