#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cascade {

/// Entry point of the cascade_bandits tool. Returns 0 on success, 1 on usage
/// errors and 2 on runtime failures.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cascade
