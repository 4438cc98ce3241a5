#include "protmeas/errors.hpp"

#include <utility>

namespace protmeas {

ValidationError::ValidationError(std::vector<std::string> diagnostics)
    : ConfigurationError([&] {
        std::string msg = "configuration invalid";
        for (const auto& d : diagnostics) msg += "\n  " + d;
        return msg;
      }()),
      diagnostics_(std::move(diagnostics)) {}

}  // namespace protmeas
