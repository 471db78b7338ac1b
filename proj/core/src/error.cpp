#include "demandcast/error.hpp"

namespace demandcast {

int exit_code_for(const Error& e) noexcept {
    return dynamic_cast<const NumericalError*>(&e) != nullptr ? 2 : 1;
}

}  // namespace demandcast
