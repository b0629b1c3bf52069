#pragma once

#include <string>
#include <vector>

#include "poac/lexicon.hpp"

namespace poac::lex {

struct RemoteConfig {
    bool offline = true;  // offline mode falls back to oracle_rewrite
    std::string host = "127.0.0.1";
    int port = 0;
    std::string path = "/rewrite";
    int timeout_ms = 2000;
    int max_attempts = 3;
    int backoff_ms = 50;  // doubles per retry
};

// The instruction sent to the remote rewriter with both slots filled in.
std::string rewrite_instruction(const std::string& concept, const std::string& source_text);

// Fetches a rewritten target for (concept, source). POST body:
// {"template": instruction, "concept": ..., "source": ...}; expected reply
// {"target": "..."}. Network failures retry with exponential backoff and
// surface as RetryableError once attempts are exhausted. The reply is
// tokenized on whitespace and validated (known tokens, 2-3 distinct
// objects, no abstract token); violations raise RejectedRewriteError.
std::vector<std::string> remote_rewrite(const RemoteConfig& cfg, const std::string& concept,
                                        const std::vector<std::string>& source,
                                        const world::Vocabulary& vocab);

// build_dataset with targets fetched from the remote service instead of the
// oracle (offline mode is identical to build_dataset). Rejected rewrites are
// skipped and counted.
DatasetBuild build_dataset_remote(const Lexicon& lexicon,
                                  const std::vector<std::string>& modifier_pool, uint64_t seed,
                                  const RemoteConfig& remote, int k_min = 1, int k_max = 3);

}  // namespace poac::lex
