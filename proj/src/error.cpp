#include "ecopt/error.hpp"

namespace ecopt {

StageError::StageError(std::string stage, const Error& cause, int exit_code)
    : Error("[" + stage + "] " + cause.what()), stage_(std::move(stage)), exit_code_(exit_code) {}

int exit_code_for(const Error& e) noexcept {
    if (auto* s = dynamic_cast<const StageError*>(&e)) return s->exit_code();
    if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
    return kExitData;
}

}  // namespace ecopt
