#include "wesnet/errors.hpp"

namespace wesnet {

int exit_code(const Error& e) noexcept {
    if (dynamic_cast<const IoError*>(&e) != nullptr) return exit_codes::io;
    if (dynamic_cast<const NumericalError*>(&e) != nullptr) return exit_codes::numerical;
    return exit_codes::config;
}

}  // namespace wesnet
