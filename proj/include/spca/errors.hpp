#ifndef SPCA_ERRORS_HPP
#define SPCA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace spca {

// Thrown when arguments violate a structural precondition (sizes,
// probability ranges, divisibility, parameter inequalities).
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown by psd_sqrt when an eigenvalue falls below -tol.
class NotPositiveSemidefinite : public std::runtime_error {
 public:
  NotPositiveSemidefinite(const std::string& what, double eigenvalue)
      : std::runtime_error(what), eigenvalue_(eigenvalue) {}
  double eigenvalue() const { return eigenvalue_; }

 private:
  double eigenvalue_;
};

// Thrown when an enumeration or sweep would exceed its work budget.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spca

#endif  // SPCA_ERRORS_HPP
