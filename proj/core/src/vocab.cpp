#include "poac/vocab.hpp"

namespace poac::world {

const char* token_kind_name(TokenKind k) {
    switch (k) {
        case TokenKind::kSpecial:
            return "special";
        case TokenKind::kAbstract:
            return "abstract";
        case TokenKind::kObject:
            return "object";
        case TokenKind::kScene:
            return "scene";
        case TokenKind::kModifier:
            return "modifier";
    }
    return "?";
}

Vocabulary::Vocabulary(std::vector<std::string> abstract, std::vector<std::string> objects,
                       std::vector<std::string> scene, std::vector<std::string> modifiers) {
    auto push = [this](const std::string& tok, TokenKind kind) {
        if (tok.empty()) {
            throw VocabError("empty token string");
        }
        auto [it, inserted] = index_.emplace(tok, static_cast<int>(tokens_.size()));
        if (!inserted) {
            throw VocabError("token '" + tok + "' appears in partitions '" +
                             token_kind_name(kinds_[static_cast<size_t>(it->second)]) +
                             "' and '" + token_kind_name(kind) + "'");
        }
        tokens_.push_back(tok);
        kinds_.push_back(kind);
    };
    push(kBos, TokenKind::kSpecial);
    push(kEos, TokenKind::kSpecial);
    push(kSep, TokenKind::kSpecial);
    for (const auto& t : abstract) {
        push(t, TokenKind::kAbstract);
    }
    for (const auto& t : objects) {
        push(t, TokenKind::kObject);
    }
    for (const auto& t : scene) {
        push(t, TokenKind::kScene);
    }
    for (const auto& t : modifiers) {
        push(t, TokenKind::kModifier);
    }
}

int Vocabulary::id(const std::string& token) const {
    auto it = index_.find(token);
    if (it == index_.end()) {
        throw VocabError("unknown token '" + token + "'");
    }
    return it->second;
}

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || static_cast<size_t>(id) >= tokens_.size()) {
        throw VocabError("token id " + std::to_string(id) + " out of range");
    }
    return tokens_[static_cast<size_t>(id)];
}

TokenKind Vocabulary::kind(int id) const {
    if (id < 0 || static_cast<size_t>(id) >= kinds_.size()) {
        throw VocabError("token id " + std::to_string(id) + " out of range");
    }
    return kinds_[static_cast<size_t>(id)];
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) {
        ids.push_back(id(t));
    }
    return ids;
}

std::vector<std::string> Vocabulary::decode(const std::vector<int>& ids) const {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (int i : ids) {
        out.push_back(token(i));
    }
    return out;
}

std::vector<std::string> Vocabulary::partition(TokenKind k) const {
    std::vector<std::string> out;
    for (size_t i = 0; i < tokens_.size(); ++i) {
        if (kinds_[i] == k) {
            out.push_back(tokens_[i]);
        }
    }
    return out;
}

}  // namespace poac::world
