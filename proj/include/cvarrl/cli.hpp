#pragma once

#include <string>
#include <vector>

namespace cvarrl {

/**
 * Entry point behind the cvarrl binary; args exclude the program name.
 * Returns 0 on success, 2 on configuration or usage errors, 3 on numeric
 * failures and failed property checks.
 */
int cli_main(const std::vector<std::string>& args);

} // namespace cvarrl
