#pragma once

#include <string>
#include <string_view>

namespace decop {

/// SHA-256 of the input, as a lowercase hex string. Self-contained so the
/// cache layer does not drag in a crypto library for one digest.
std::string sha256_hex(std::string_view data);

}  // namespace decop
