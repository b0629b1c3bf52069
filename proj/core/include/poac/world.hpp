#pragma once

#include <map>
#include <string>
#include <vector>

#include "poac/autodiff.hpp"
#include "poac/rng.hpp"
#include "poac/tensor.hpp"
#include "poac/vocab.hpp"

namespace poac::world {

struct WorldConfig {
    size_t dim = 16;
    double rho = 1.0;
    uint64_t seed = 0;
};

// The synthetic text/image space. Every concrete object, scene word and
// modifier gets a seeded unit signature in R^dim; every abstract concept c
// gets a_c = normalize(b_c + rho * u_c) where b_c is the normalized sum of
// its objects' signatures and u_c is a seeded unit vector orthogonalized
// against b_c. That construction makes cos(a_c, b_c) = 1/sqrt(1+rho^2)
// exactly, so the abstract/concrete relevance gap is analytic, not tuned.
//
// Vectors are regenerated from (seed, token id) streams: insertion order
// never changes them, and the serialized form stores no floats.
class WorldEmbedding {
public:
    WorldEmbedding() = default;

    // concept_objects: abstract token -> the union of its lexicon objects.
    static WorldEmbedding build(const Vocabulary& vocab,
                                const std::map<std::string, std::vector<std::string>>& concept_objects,
                                const WorldConfig& cfg);

    const Tensor& vector_for(int token_id) const;
    size_t dim() const { return cfg_.dim; }
    double rho() const { return cfg_.rho; }
    uint64_t seed() const { return cfg_.seed; }
    const std::map<std::string, std::vector<std::string>>& concept_objects() const {
        return concept_objects_;
    }

private:
    WorldConfig cfg_;
    std::vector<Tensor> vectors_;  // indexed by token id; specials stay empty
    std::map<std::string, std::vector<std::string>> concept_objects_;
};

// Serializes vocabulary + world parameters to one JSON file:
// {"seed", "dim", "rho", "tokens", "partitions", "concept_objects"}.
// Signatures are regenerated from seed on load, never stored.
void save_world(const std::string& path, const Vocabulary& vocab, const WorldEmbedding& world);
std::pair<Vocabulary, WorldEmbedding> load_world(const std::string& path);

// normalize(sum of per-token vectors) over the unique non-special tokens of
// the prompt, accumulated in token-id order; hence permutation- and
// duplication-invariant bit for bit.
Tensor embed_text(const std::vector<int>& prompt_ids, const Vocabulary& vocab,
                  const WorldEmbedding& world);
Tensor embed_text(const std::vector<std::string>& prompt, const Vocabulary& vocab,
                  const WorldEmbedding& world);

// normalize(sum of object signatures) + noise_sigma * g with g drawn from
// rng one coordinate at a time.
Tensor render(const std::vector<int>& object_ids, const Vocabulary& vocab,
              const WorldEmbedding& world, double noise_sigma, Rng& rng);

// Cosine relevance between a text embedding and an image vector.
double clip_score(const Tensor& text_emb, const Tensor& image);
// exp(-gamma * (|image| - 1)^2), in (0, 1], maximal on the unit sphere.
double aes_score(const Tensor& image, double gamma = 4.0);

// Graph-building variants; gradients flow into `image`.
ad::NodePtr clip_score_node(const Tensor& text_emb, const ad::NodePtr& image);
ad::NodePtr aes_score_node(const ad::NodePtr& image, double gamma = 4.0);

}  // namespace poac::world
