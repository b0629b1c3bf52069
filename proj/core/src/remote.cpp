#include "poac/remote.hpp"

#include <chrono>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "poac/rng.hpp"

namespace poac::lex {

namespace {

std::string join(const std::vector<std::string>& tokens) {
    std::string out;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i) {
            out += ' ';
        }
        out += tokens[i];
    }
    return out;
}

std::vector<std::string> split_ws(const std::string& text) {
    std::istringstream is(text);
    std::vector<std::string> tokens;
    std::string t;
    while (is >> t) {
        tokens.push_back(t);
    }
    return tokens;
}

void validate_remote_target(const std::vector<std::string>& target, const std::string& concept,
                            const world::Vocabulary& vocab) {
    if (target.empty()) {
        throw RejectedRewriteError("remote rewrite for '" + concept + "' is empty");
    }
    std::set<int> objects;
    for (const auto& tok : target) {
        if (!vocab.contains(tok)) {
            throw RejectedRewriteError("remote rewrite for '" + concept +
                                       "' contains out-of-vocabulary token '" + tok + "'");
        }
        const int id = vocab.id(tok);
        if (vocab.is_abstract(id)) {
            throw RejectedRewriteError("remote rewrite for '" + concept +
                                       "' still contains abstract token '" + tok + "'");
        }
        if (vocab.is_object(id)) {
            objects.insert(id);
        }
    }
    if (objects.size() < 2 || objects.size() > 3) {
        throw RejectedRewriteError("remote rewrite for '" + concept + "' has " +
                                   std::to_string(objects.size()) +
                                   " distinct concrete objects; expected 2 or 3");
    }
}

}  // namespace

std::string rewrite_instruction(const std::string& concept, const std::string& source_text) {
    return "Please rewrite the " + concept +
           " in the following sentence to a short sentence which includes a dedicated and "
           "concrete scene and also includes concrete objects about " +
           source_text;
}

std::vector<std::string> remote_rewrite(const RemoteConfig& cfg, const std::string& concept,
                                        const std::vector<std::string>& source,
                                        const world::Vocabulary& vocab) {
    if (cfg.offline) {
        throw ConfigError("remote_rewrite called in offline mode; use oracle_rewrite");
    }
    nlohmann::json body;
    const std::string source_text = join(source);
    body["template"] = rewrite_instruction(concept, source_text);
    body["concept"] = concept;
    body["source"] = source_text;

    httplib::Client client(cfg.host, cfg.port);
    client.set_connection_timeout(0, cfg.timeout_ms * 1000);
    client.set_read_timeout(0, cfg.timeout_ms * 1000);

    std::string last_error;
    int backoff = cfg.backoff_ms;
    for (int attempt = 1; attempt <= cfg.max_attempts; ++attempt) {
        auto res = client.Post(cfg.path, body.dump(), "application/json");
        if (res && res->status == 200) {
            nlohmann::json reply;
            try {
                reply = nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::exception& e) {
                throw RejectedRewriteError("remote reply for '" + concept +
                                           "' is not valid JSON: " + e.what());
            }
            if (!reply.contains("target") || !reply["target"].is_string()) {
                throw RejectedRewriteError("remote reply for '" + concept +
                                           "' lacks a \"target\" string");
            }
            auto target = split_ws(reply["target"].get<std::string>());
            validate_remote_target(target, concept, vocab);
            return target;
        }
        last_error = res ? "http status " + std::to_string(res->status)
                         : "transport error " + httplib::to_string(res.error());
        if (attempt < cfg.max_attempts) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
            backoff *= 2;
        }
    }
    throw RetryableError("remote rewrite for '" + concept + "' failed after " +
                         std::to_string(cfg.max_attempts) + " attempts: " + last_error);
}

DatasetBuild build_dataset_remote(const Lexicon& lexicon,
                                  const std::vector<std::string>& modifier_pool, uint64_t seed,
                                  const RemoteConfig& remote, int k_min, int k_max) {
    if (remote.offline) {
        return build_dataset(lexicon, modifier_pool, seed, k_min, k_max);
    }
    validate_lexicon(lexicon);
    const world::Vocabulary vocab = build_vocabulary(lexicon, modifier_pool);
    DatasetBuild out;
    for (size_t ci = 0; ci < lexicon.size(); ++ci) {
        const ConceptEntry& entry = lexicon[ci];
        for (size_t si = 0; si < 3; ++si) {
            for (size_t vi = 0; vi < 3; ++vi) {
                PromptPair pair;
                pair.concept = entry.concept;
                pair.source = entry.source_prompts[si];
                std::vector<std::string> base;
                try {
                    base = remote_rewrite(remote, entry.concept, pair.source, vocab);
                } catch (const RejectedRewriteError&) {
                    out.rejected += 1;
                    continue;
                }
                const uint64_t mod_seed = mix_seed(seed, salt::kCorpusModifiers,
                                                   static_cast<uint64_t>(ci),
                                                   static_cast<uint64_t>(si),
                                                   static_cast<uint64_t>(vi));
                auto [target, mods] =
                    inject_modifiers(std::move(base), modifier_pool, mod_seed, k_min, k_max);
                pair.target = std::move(target);
                pair.modifiers = std::move(mods);
                pair.provenance = "remote";
                out.pairs.push_back(std::move(pair));
            }
        }
    }
    return out;
}

}  // namespace poac::lex
