#include "poac/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

namespace poac::world {

namespace {

Tensor unit_gaussian(size_t dim, Rng& rng) {
    Tensor t = Tensor::randn({dim}, rng);
    const double r = t.l2_norm();
    if (r < 1e-12) {
        throw DomainError("degenerate random signature");
    }
    for (size_t i = 0; i < dim; ++i) {
        t.at(i) /= r;
    }
    return t;
}

Tensor normalized(const Tensor& t, double floor, const char* what) {
    const double r = t.l2_norm();
    if (r < floor) {
        throw DomainError(std::string(what) + ": norm below " + std::to_string(floor));
    }
    Tensor out = t;
    for (size_t i = 0; i < out.numel(); ++i) {
        out.at(i) /= r;
    }
    return out;
}

}  // namespace

WorldEmbedding WorldEmbedding::build(
    const Vocabulary& vocab,
    const std::map<std::string, std::vector<std::string>>& concept_objects,
    const WorldConfig& cfg) {
    WorldEmbedding w;
    w.cfg_ = cfg;
    w.concept_objects_ = concept_objects;
    w.vectors_.resize(vocab.size());

    // Pass 1: objects, scene words and modifiers, each from its own
    // (seed, salt, id) stream.
    for (int id = 0; id < static_cast<int>(vocab.size()); ++id) {
        uint64_t s = 0;
        switch (vocab.kind(id)) {
            case TokenKind::kObject:
                s = mix_seed(cfg.seed, salt::kWorldObject, static_cast<uint64_t>(id));
                break;
            case TokenKind::kScene:
                s = mix_seed(cfg.seed, salt::kWorldScene, static_cast<uint64_t>(id));
                break;
            case TokenKind::kModifier:
                s = mix_seed(cfg.seed, salt::kWorldModifier, static_cast<uint64_t>(id));
                break;
            default:
                continue;
        }
        Rng rng(s);
        w.vectors_[static_cast<size_t>(id)] = unit_gaussian(cfg.dim, rng);
    }

    // Pass 2: abstract concepts, anchored to their object sums.
    for (int id = 0; id < static_cast<int>(vocab.size()); ++id) {
        if (vocab.kind(id) != TokenKind::kAbstract) {
            continue;
        }
        const std::string& concept = vocab.token(id);
        auto it = concept_objects.find(concept);
        if (it == concept_objects.end() || it->second.empty()) {
            throw VocabError("abstract concept '" + concept + "' has no object set");
        }
        std::vector<int> ids;
        for (const auto& obj : it->second) {
            const int oid = vocab.id(obj);
            if (!vocab.is_object(oid)) {
                throw VocabError("concept '" + concept + "' lists non-object token '" + obj +
                                 "'");
            }
            ids.push_back(oid);
        }
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        Tensor sum = Tensor::zeros({cfg.dim});
        for (int oid : ids) {
            const Tensor& s = w.vectors_[static_cast<size_t>(oid)];
            for (size_t i = 0; i < cfg.dim; ++i) {
                sum.at(i) += s.at(i);
            }
        }
        const Tensor base = normalized(sum, 1e-9, "concept object sum");
        Rng rng(mix_seed(cfg.seed, salt::kWorldAbstract, static_cast<uint64_t>(id)));
        const Tensor v = unit_gaussian(cfg.dim, rng);
        double dot = 0.0;
        for (size_t i = 0; i < cfg.dim; ++i) {
            dot += v.at(i) * base.at(i);
        }
        Tensor u = Tensor::zeros({cfg.dim});
        for (size_t i = 0; i < cfg.dim; ++i) {
            u.at(i) = v.at(i) - dot * base.at(i);
        }
        const Tensor u_hat = normalized(u, 1e-9, "orthogonal residual");
        Tensor a = Tensor::zeros({cfg.dim});
        for (size_t i = 0; i < cfg.dim; ++i) {
            a.at(i) = base.at(i) + cfg.rho * u_hat.at(i);
        }
        w.vectors_[static_cast<size_t>(id)] = normalized(a, 1e-9, "abstract vector");
    }
    return w;
}

const Tensor& WorldEmbedding::vector_for(int token_id) const {
    if (token_id < 0 || static_cast<size_t>(token_id) >= vectors_.size() ||
        vectors_[static_cast<size_t>(token_id)].numel() == 0) {
        throw VocabError("no embedding vector for token id " + std::to_string(token_id));
    }
    return vectors_[static_cast<size_t>(token_id)];
}

void save_world(const std::string& path, const Vocabulary& vocab, const WorldEmbedding& world) {
    nlohmann::json j;
    j["seed"] = world.seed();
    j["dim"] = world.dim();
    j["rho"] = world.rho();
    j["tokens"] = vocab.tokens();
    nlohmann::json parts;
    parts["special"] = vocab.partition(TokenKind::kSpecial);
    parts["abstract"] = vocab.partition(TokenKind::kAbstract);
    parts["object"] = vocab.partition(TokenKind::kObject);
    parts["scene"] = vocab.partition(TokenKind::kScene);
    parts["modifier"] = vocab.partition(TokenKind::kModifier);
    j["partitions"] = parts;
    j["concept_objects"] = world.concept_objects();
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write world file '" + path + "'");
    }
    out << j.dump(2) << "\n";
}

std::pair<Vocabulary, WorldEmbedding> load_world(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read world file '" + path + "'");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("world file '" + path + "': " + e.what());
    }
    const auto& parts = j.at("partitions");
    auto list = [&parts](const char* key) {
        return parts.at(key).get<std::vector<std::string>>();
    };
    Vocabulary vocab(list("abstract"), list("object"), list("scene"), list("modifier"));
    // The stored token order must reproduce exactly; ids are meaningful.
    const auto stored = j.at("tokens").get<std::vector<std::string>>();
    if (stored != vocab.tokens()) {
        throw ConfigError("world file '" + path + "': token order does not round-trip");
    }
    WorldConfig cfg;
    cfg.seed = j.at("seed").get<uint64_t>();
    cfg.dim = j.at("dim").get<size_t>();
    cfg.rho = j.at("rho").get<double>();
    const auto co =
        j.at("concept_objects").get<std::map<std::string, std::vector<std::string>>>();
    WorldEmbedding world = WorldEmbedding::build(vocab, co, cfg);
    return {std::move(vocab), std::move(world)};
}

Tensor embed_text(const std::vector<int>& prompt_ids, const Vocabulary& vocab,
                  const WorldEmbedding& world) {
    std::set<int> unique_ids;
    for (int id : prompt_ids) {
        vocab.token(id);  // range check
        if (!vocab.is_special(id)) {
            unique_ids.insert(id);
        }
    }
    if (unique_ids.empty()) {
        throw EmptyPromptError("prompt has no content tokens");
    }
    Tensor sum = Tensor::zeros({world.dim()});
    for (int id : unique_ids) {
        const Tensor& v = world.vector_for(id);
        for (size_t i = 0; i < sum.numel(); ++i) {
            sum.at(i) += v.at(i);
        }
    }
    const double r = sum.l2_norm();
    if (r < 1e-12) {
        throw DomainError("prompt embedding sum has near-zero norm");
    }
    for (size_t i = 0; i < sum.numel(); ++i) {
        sum.at(i) /= r;
    }
    return sum;
}

Tensor embed_text(const std::vector<std::string>& prompt, const Vocabulary& vocab,
                  const WorldEmbedding& world) {
    return embed_text(vocab.encode(prompt), vocab, world);
}

Tensor render(const std::vector<int>& object_ids, const Vocabulary& vocab,
              const WorldEmbedding& world, double noise_sigma, Rng& rng) {
    std::set<int> unique_ids;
    for (int id : object_ids) {
        if (!vocab.is_object(id)) {
            throw VocabError("render: token '" + vocab.token(id) + "' is not a concrete object");
        }
        unique_ids.insert(id);
    }
    if (unique_ids.empty()) {
        throw EmptySceneError("render of empty object set");
    }
    Tensor sum = Tensor::zeros({world.dim()});
    for (int id : unique_ids) {
        const Tensor& s = world.vector_for(id);
        for (size_t i = 0; i < sum.numel(); ++i) {
            sum.at(i) += s.at(i);
        }
    }
    const double r = sum.l2_norm();
    if (r < 1e-9) {
        throw DegenerateSceneError("object signatures cancel (norm < 1e-9)");
    }
    for (size_t i = 0; i < sum.numel(); ++i) {
        sum.at(i) /= r;
    }
    if (noise_sigma != 0.0) {
        for (size_t i = 0; i < sum.numel(); ++i) {
            sum.at(i) += noise_sigma * rng.gaussian();
        }
    }
    return sum;
}

double clip_score(const Tensor& text_emb, const Tensor& image) {
    const double rt = text_emb.l2_norm();
    const double ri = image.l2_norm();
    if (rt < 1e-12 || ri < 1e-12) {
        throw DomainError("clip_score of near-zero vector");
    }
    if (!text_emb.same_shape(image)) {
        throw ShapeError("clip_score: dimension mismatch " + text_emb.shape_str() + " vs " +
                         image.shape_str());
    }
    double dot = 0.0;
    for (size_t i = 0; i < image.numel(); ++i) {
        dot += text_emb.at(i) * image.at(i);
    }
    return dot / (rt * ri);
}

double aes_score(const Tensor& image, double gamma) {
    const double d = image.l2_norm() - 1.0;
    return std::exp(-gamma * d * d);
}

ad::NodePtr clip_score_node(const Tensor& text_emb, const ad::NodePtr& image) {
    return ad::cosine(ad::constant(text_emb), image);
}

ad::NodePtr aes_score_node(const ad::NodePtr& image, double gamma) {
    // |image| = exp(0.5 * log(sum(image^2))); needs a nonzero image, which is
    // what every sampled latent is in practice.
    auto n2 = ad::sum(ad::square(image));
    auto norm = ad::exp(ad::scale(ad::log(n2), 0.5));
    auto d = ad::sub(norm, ad::constant(Tensor::scalar(1.0)));
    return ad::exp(ad::scale(ad::square(d), -gamma));
}

}  // namespace poac::world
