#pragma once

#include <array>
#include <string>
#include <string_view>

#include "epic/errors.hpp"

namespace epic {

// Ordered symbol set used as the one-hot basis. The last symbol acts as the
// catch-all for anything outside the set (ambiguity codes, gaps, stops).
struct Alphabet {
    std::string symbols;
    std::array<int, 256> index{};

    explicit Alphabet(std::string syms) : symbols(std::move(syms)) {
        index.fill(-1);
        for (std::size_t i = 0; i < symbols.size(); ++i) {
            const auto c = static_cast<unsigned char>(symbols[i]);
            if (index[c] != -1) throw InvalidSpec("alphabet: duplicate symbol '" + std::string(1, symbols[i]) + "'");
            index[c] = static_cast<int>(i);
        }
        if (symbols.empty()) throw InvalidSpec("alphabet: empty");
    }

    // 20 canonical amino acids plus 'X' (unknown) as the final symbol.
    static const Alphabet& amino_acids() {
        static const Alphabet a("ACDEFGHIKLMNPQRSTVWYX");
        return a;
    }

    std::size_t size() const { return symbols.size(); }

    bool contains(char c) const { return index[static_cast<unsigned char>(c)] >= 0; }

    // Symbols outside the set map to the final (unknown) slot.
    std::size_t index_of(char c) const {
        const int i = index[static_cast<unsigned char>(c)];
        return i >= 0 ? static_cast<std::size_t>(i) : symbols.size() - 1;
    }
};

} // namespace epic
