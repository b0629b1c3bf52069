#include "poac/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

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

}  // namespace

Lexicon load_lexicon(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read lexicon file '" + path + "'");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("lexicon file '" + path + "': " + e.what());
    }
    Lexicon lexicon;
    for (const auto& cj : j.at("concepts")) {
        ConceptEntry e;
        e.concept = cj.at("concept").get<std::string>();
        e.source_prompts = cj.at("sources").get<std::vector<std::vector<std::string>>>();
        for (const auto& sj : cj.at("scenes")) {
            Scene s;
            s.template_tokens = sj.at("template").get<std::vector<std::string>>();
            s.objects = sj.at("objects").get<std::vector<std::string>>();
            e.scenes.push_back(std::move(s));
        }
        lexicon.push_back(std::move(e));
    }
    validate_lexicon(lexicon);
    return lexicon;
}

std::vector<std::string> load_modifier_pool(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read modifier pool '" + path + "'");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("modifier pool '" + path + "': " + e.what());
    }
    auto pool = j.at("modifiers").get<std::vector<std::string>>();
    if (pool.empty()) {
        throw PoolError("modifier pool is empty");
    }
    return pool;
}

void validate_lexicon(const Lexicon& lexicon) {
    if (lexicon.empty()) {
        throw ConfigError("lexicon has no concepts");
    }
    std::set<std::string> seen;
    for (const auto& e : lexicon) {
        if (e.concept.empty()) {
            throw ConfigError("lexicon entry with empty concept");
        }
        if (!seen.insert(e.concept).second) {
            throw ConfigError("duplicate concept '" + e.concept + "'");
        }
        if (e.source_prompts.size() != 3) {
            throw ConfigError("concept '" + e.concept + "' needs exactly 3 source prompts, has " +
                              std::to_string(e.source_prompts.size()));
        }
        for (const auto& sp : e.source_prompts) {
            if (std::find(sp.begin(), sp.end(), e.concept) == sp.end()) {
                throw ConfigError("source prompt '" + join(sp) + "' does not contain concept '" +
                                  e.concept + "'");
            }
            if (std::find(sp.begin(), sp.end(), kSlot) != sp.end()) {
                throw ConfigError("source prompt of '" + e.concept + "' contains a slot token");
            }
        }
        if (e.scenes.empty()) {
            throw ConfigError("concept '" + e.concept + "' has no scenes");
        }
        for (const auto& s : e.scenes) {
            const size_t slots = static_cast<size_t>(
                std::count(s.template_tokens.begin(), s.template_tokens.end(), kSlot));
            if (s.objects.size() < 2 || s.objects.size() > 3) {
                throw TemplateError("scene of '" + e.concept + "' has " +
                                    std::to_string(s.objects.size()) +
                                    " objects; expected 2 or 3");
            }
            if (slots != s.objects.size()) {
                throw TemplateError("scene of '" + e.concept + "' has " + std::to_string(slots) +
                                    " slots for " + std::to_string(s.objects.size()) +
                                    " objects");
            }
            for (const auto& t : s.template_tokens) {
                if (t == e.concept) {
                    throw ConfigError("scene template of '" + e.concept +
                                      "' mentions the concept itself");
                }
            }
            for (const auto& o : s.objects) {
                if (o == e.concept) {
                    throw ConfigError("scene object of '" + e.concept + "' equals the concept");
                }
            }
        }
    }
}

world::Vocabulary build_vocabulary(const Lexicon& lexicon,
                                   const std::vector<std::string>& modifier_pool) {
    validate_lexicon(lexicon);
    std::vector<std::string> abstract;
    std::set<std::string> abstract_set;
    for (const auto& e : lexicon) {
        abstract.push_back(e.concept);
        abstract_set.insert(e.concept);
    }
    std::set<std::string> objects;
    for (const auto& e : lexicon) {
        for (const auto& s : e.scenes) {
            for (const auto& o : s.objects) {
                objects.insert(o);
            }
        }
    }
    std::set<std::string> scene_words;
    auto collect = [&](const std::vector<std::string>& tokens) {
        for (const auto& t : tokens) {
            if (t == kSlot || abstract_set.count(t) || objects.count(t)) {
                continue;
            }
            scene_words.insert(t);
        }
    };
    for (const auto& e : lexicon) {
        for (const auto& sp : e.source_prompts) {
            collect(sp);
        }
        for (const auto& s : e.scenes) {
            collect(s.template_tokens);
        }
    }
    return world::Vocabulary(abstract, {objects.begin(), objects.end()},
                             {scene_words.begin(), scene_words.end()}, modifier_pool);
}

std::map<std::string, std::vector<std::string>> concept_object_map(const Lexicon& lexicon) {
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& e : lexicon) {
        std::set<std::string> objs;
        for (const auto& s : e.scenes) {
            objs.insert(s.objects.begin(), s.objects.end());
        }
        out.emplace(e.concept, std::vector<std::string>(objs.begin(), objs.end()));
    }
    return out;
}

std::vector<std::string> oracle_rewrite(const ConceptEntry& entry, size_t source_index,
                                        size_t scene_index) {
    if (source_index >= entry.source_prompts.size()) {
        throw IndexError("source index " + std::to_string(source_index) + " out of range for '" +
                         entry.concept + "'");
    }
    if (scene_index >= entry.scenes.size()) {
        throw IndexError("scene index " + std::to_string(scene_index) + " out of range for '" +
                         entry.concept + "'");
    }
    const Scene& scene = entry.scenes[scene_index];
    const size_t slots = static_cast<size_t>(
        std::count(scene.template_tokens.begin(), scene.template_tokens.end(), kSlot));
    if (scene.objects.size() < 2 || scene.objects.size() > 3) {
        throw TemplateError("scene has " + std::to_string(scene.objects.size()) +
                            " objects; expected 2 or 3");
    }
    if (slots != scene.objects.size()) {
        throw TemplateError("scene has " + std::to_string(slots) + " slots for " +
                            std::to_string(scene.objects.size()) + " objects");
    }
    std::vector<std::string> target;
    target.reserve(scene.template_tokens.size());
    size_t next_obj = 0;
    for (const auto& t : scene.template_tokens) {
        if (t == kSlot) {
            target.push_back(scene.objects[next_obj++]);
        } else {
            target.push_back(t);
        }
    }
    return target;
}

std::pair<std::vector<std::string>, std::vector<std::string>> inject_modifiers(
    std::vector<std::string> target, const std::vector<std::string>& pool, uint64_t rng_seed,
    int k_min, int k_max) {
    if (pool.empty()) {
        throw PoolError("modifier pool is empty");
    }
    if (k_min < 1 || k_max < k_min || static_cast<size_t>(k_max) > pool.size()) {
        throw PoolError("modifier count range [" + std::to_string(k_min) + "," +
                        std::to_string(k_max) + "] invalid for pool of " +
                        std::to_string(pool.size()));
    }
    Rng rng(rng_seed);
    const int k = k_min == k_max ? k_min : static_cast<int>(rng.range(k_min, k_max));
    std::vector<size_t> idx(pool.size());
    for (size_t i = 0; i < idx.size(); ++i) {
        idx[i] = i;
    }
    // Partial Fisher-Yates: the first k entries are a uniform sample without
    // replacement.
    std::vector<std::string> chosen;
    for (int i = 0; i < k; ++i) {
        const size_t j = static_cast<size_t>(i) + rng.below(idx.size() - static_cast<size_t>(i));
        std::swap(idx[static_cast<size_t>(i)], idx[j]);
        chosen.push_back(pool[idx[static_cast<size_t>(i)]]);
    }
    for (const auto& m : chosen) {
        target.push_back(m);
    }
    return {std::move(target), std::move(chosen)};
}

DatasetBuild build_dataset(const Lexicon& lexicon, const std::vector<std::string>& modifier_pool,
                           uint64_t seed, int k_min, int k_max) {
    validate_lexicon(lexicon);
    DatasetBuild out;
    for (size_t ci = 0; ci < lexicon.size(); ++ci) {
        const ConceptEntry& entry = lexicon[ci];
        const size_t n_scenes = entry.scenes.size();
        for (size_t si = 0; si < 3; ++si) {
            for (size_t vi = 0; vi < 3; ++vi) {
                if (vi >= n_scenes) {
                    out.scene_recycle_warnings += 1;
                }
                const size_t scene_index = (si + vi) % n_scenes;
                PromptPair pair;
                pair.concept = entry.concept;
                pair.source = entry.source_prompts[si];
                auto base = oracle_rewrite(entry, si, scene_index);
                const uint64_t mod_seed = mix_seed(seed, salt::kCorpusModifiers,
                                                   static_cast<uint64_t>(ci),
                                                   static_cast<uint64_t>(si),
                                                   static_cast<uint64_t>(vi));
                auto [target, mods] =
                    inject_modifiers(std::move(base), modifier_pool, mod_seed, k_min, k_max);
                pair.target = std::move(target);
                pair.modifiers = std::move(mods);
                pair.provenance = "oracle";
                out.pairs.push_back(std::move(pair));
            }
        }
    }
    return out;
}

std::string corpus_to_jsonl(const std::vector<PromptPair>& pairs) {
    std::ostringstream os;
    for (const auto& p : pairs) {
        nlohmann::json j;
        j["concept"] = p.concept;
        j["source"] = p.source;
        j["target"] = p.target;
        j["modifiers"] = p.modifiers;
        j["provenance"] = p.provenance;
        os << j.dump() << "\n";
    }
    return os.str();
}

std::vector<PromptPair> parse_corpus_jsonl(const std::string& text) {
    std::vector<PromptPair> pairs;
    std::istringstream is(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("corpus line " + std::to_string(lineno) + ": " + e.what());
        }
        PromptPair p;
        p.concept = j.at("concept").get<std::string>();
        p.source = j.at("source").get<std::vector<std::string>>();
        p.target = j.at("target").get<std::vector<std::string>>();
        p.modifiers = j.at("modifiers").get<std::vector<std::string>>();
        p.provenance = j.at("provenance").get<std::string>();
        pairs.push_back(std::move(p));
    }
    return pairs;
}

void validate_pair(const PromptPair& pair, const world::Vocabulary& vocab) {
    const int concept_id = vocab.id(pair.concept);
    if (!vocab.is_abstract(concept_id)) {
        throw ConfigError("pair concept '" + pair.concept + "' is not an abstract token");
    }
    const auto source_ids = vocab.encode(pair.source);
    if (std::find(source_ids.begin(), source_ids.end(), concept_id) == source_ids.end()) {
        throw ConfigError("pair source does not contain concept '" + pair.concept + "'");
    }
    const auto target_ids = vocab.encode(pair.target);
    std::set<int> distinct_objects;
    for (int id : target_ids) {
        if (vocab.is_abstract(id)) {
            throw ConfigError("pair target contains abstract token '" + vocab.token(id) + "'");
        }
        if (vocab.is_object(id)) {
            distinct_objects.insert(id);
        }
    }
    if (distinct_objects.size() < 2 || distinct_objects.size() > 3) {
        throw ConfigError("pair target has " + std::to_string(distinct_objects.size()) +
                          " distinct concrete objects; expected 2 or 3");
    }
    if (pair.modifiers.empty() || pair.modifiers.size() > 3) {
        throw ConfigError("pair has " + std::to_string(pair.modifiers.size()) +
                          " modifiers; expected 1-3");
    }
    if (pair.target.size() < pair.modifiers.size()) {
        throw ConfigError("pair target shorter than its modifier list");
    }
    for (size_t i = 0; i < pair.modifiers.size(); ++i) {
        const std::string& m = pair.modifiers[i];
        if (!vocab.is_modifier(vocab.id(m))) {
            throw ConfigError("pair modifier '" + m + "' is not a modifier token");
        }
        const std::string& tail =
            pair.target[pair.target.size() - pair.modifiers.size() + i];
        if (tail != m) {
            throw ConfigError("pair modifiers are not appended at the end of the target");
        }
    }
}

}  // namespace poac::lex
