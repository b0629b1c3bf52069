#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "poac/vocab.hpp"

namespace poac::lex {

// Placeholder token inside a scene template; slot i is filled with object i.
inline constexpr const char* kSlot = "<obj>";

struct Scene {
    std::vector<std::string> template_tokens;
    std::vector<std::string> objects;  // 2 or 3 concrete objects
};

struct ConceptEntry {
    std::string concept;
    std::vector<std::vector<std::string>> source_prompts;  // exactly 3
    std::vector<Scene> scenes;                             // at least 1
};

using Lexicon = std::vector<ConceptEntry>;

struct PromptPair {
    std::string concept;
    std::vector<std::string> source;
    std::vector<std::string> target;  // scene instantiation + modifiers
    std::vector<std::string> modifiers;
    std::string provenance = "oracle";
};

// -- files --------------------------------------------------------------

Lexicon load_lexicon(const std::string& path);
std::vector<std::string> load_modifier_pool(const std::string& path);

// Structural invariants: 3 sources each containing the concept token,
// scenes with 2-3 objects and matching slot counts, no concept token
// inside its own templates.
void validate_lexicon(const Lexicon& lexicon);

// -- vocabulary derivation ----------------------------------------------

// Abstract = concepts in lexicon order; objects = sorted union of scene
// objects; scene words = sorted union of the remaining source/template
// tokens; modifiers = pool order.
world::Vocabulary build_vocabulary(const Lexicon& lexicon,
                                   const std::vector<std::string>& modifier_pool);

// concept -> sorted union of its scenes' objects (feeds WorldEmbedding).
std::map<std::string, std::vector<std::string>> concept_object_map(const Lexicon& lexicon);

// -- operations -----------------------------------------------------------

// Deterministic scene-template instantiation; the offline stand-in for a
// remote rewriter. IndexError on bad indices, TemplateError when the scene's
// slot and object counts disagree or the object count is outside 2-3.
std::vector<std::string> oracle_rewrite(const ConceptEntry& entry, size_t source_index,
                                        size_t scene_index);

// Appends k in [k_min, k_max] distinct modifiers sampled without replacement
// from the pool, seeded. Returns (target with modifiers, chosen modifiers).
std::pair<std::vector<std::string>, std::vector<std::string>> inject_modifiers(
    std::vector<std::string> target, const std::vector<std::string>& pool, uint64_t rng_seed,
    int k_min = 1, int k_max = 3);

struct DatasetBuild {
    std::vector<PromptPair> pairs;
    // One count per pair that had to reuse a scene because its concept has
    // fewer than 3; surfaced in the build manifest.
    int scene_recycle_warnings = 0;
    int rejected = 0;  // remote-mode rejections
};

// 3 sources x 3 target variants per concept; pair (s, v) uses scene
// (s+v) mod |scenes|; emission order (concept, source, variant). Pure
// function of (lexicon, pool, seed).
DatasetBuild build_dataset(const Lexicon& lexicon, const std::vector<std::string>& modifier_pool,
                           uint64_t seed, int k_min = 1, int k_max = 3);

// -- corpus JSONL ---------------------------------------------------------

std::string corpus_to_jsonl(const std::vector<PromptPair>& pairs);
std::vector<PromptPair> parse_corpus_jsonl(const std::string& text);

// PromptPair invariants against a vocabulary: every token known, 2-3
// distinct concrete objects in the target, no abstract token in the target,
// modifiers (1-3 of modifier kind) appended at the end, source containing
// the concept token.
void validate_pair(const PromptPair& pair, const world::Vocabulary& vocab);

}  // namespace poac::lex
