#pragma once

#include <stdexcept>
#include <string>

namespace rfeh {

// Argument outside the mathematical domain of an operation.
class domain_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// The physics cannot deliver what was asked (e.g. charging past e_max).
class infeasible_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The offline scheduler found no feasible KKT candidate.
class solver_failure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Scenario generation ran out of retries.
class generation_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A computation would exceed its configured work budget.
class resource_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rfeh
