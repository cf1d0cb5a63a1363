#pragma once

// Chains on disk: {"n1": 1, "n2": 1, "Q": [[0.7, 0.3], [0, 0.4]]}.

#include <string>
#include <string_view>

#include "qsdlab/chain.hpp"

namespace qsdlab::chain {

// Throws UsageError on malformed JSON, unknown keys or an invalid chain.
ReducibleChain parse_chain_json(std::string_view text);
ReducibleChain load_chain(const std::string& path);
std::string chain_to_json(const ReducibleChain& chain);

}  // namespace qsdlab::chain
