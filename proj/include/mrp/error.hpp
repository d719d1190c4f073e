#ifndef MRP_ERROR_HPP
#define MRP_ERROR_HPP

#include <stdexcept>
#include <string>

namespace mrp {

/// Bad or inconsistent input data or configuration.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mrp

#endif  // MRP_ERROR_HPP
