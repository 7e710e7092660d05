#include "fsyncchan/error.hpp"

#include <system_error>

namespace fsc {

ProbeError::ProbeError(const std::string& op, int os_error)
    : Error(op + " failed: " + std::system_category().message(os_error) + " (errno " +
            std::to_string(os_error) + ")"),
      os_error_(os_error) {}

}  // namespace fsc
