#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "poac/errors.hpp"

namespace poac::world {

enum class TokenKind { kSpecial, kAbstract, kObject, kScene, kModifier };

const char* token_kind_name(TokenKind k);

// Dense 0-based token table partitioned into abstract concepts, concrete
// objects, scene words, modifiers and the three specials. Token order is
// fixed at construction (specials first, then the partitions in declaration
// order) and is stable under serialization.
class Vocabulary {
public:
    static constexpr const char* kBos = "<bos>";
    static constexpr const char* kEos = "<eos>";
    static constexpr const char* kSep = "<sep>";

    Vocabulary() = default;
    Vocabulary(std::vector<std::string> abstract, std::vector<std::string> objects,
               std::vector<std::string> scene, std::vector<std::string> modifiers);

    size_t size() const { return tokens_.size(); }

    int id(const std::string& token) const;
    const std::string& token(int id) const;
    bool contains(const std::string& token) const { return index_.count(token) > 0; }
    TokenKind kind(int id) const;

    bool is_special(int id) const { return kind(id) == TokenKind::kSpecial; }
    bool is_object(int id) const { return kind(id) == TokenKind::kObject; }
    bool is_abstract(int id) const { return kind(id) == TokenKind::kAbstract; }
    bool is_modifier(int id) const { return kind(id) == TokenKind::kModifier; }

    int bos() const { return 0; }
    int eos() const { return 1; }
    int sep() const { return 2; }

    std::vector<int> encode(const std::vector<std::string>& tokens) const;
    std::vector<std::string> decode(const std::vector<int>& ids) const;

    const std::vector<std::string>& tokens() const { return tokens_; }
    std::vector<std::string> partition(TokenKind k) const;

private:
    std::vector<std::string> tokens_;
    std::vector<TokenKind> kinds_;
    std::unordered_map<std::string, int> index_;
};

}  // namespace poac::world
